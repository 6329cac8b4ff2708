use ems_core::dist::{self, DistributionSpec};
use ems_core::gif;
use ems_core::ranges::{self, RangesConfig, BRIDGE, MEASURE, QUANTILE_DIFFERENCE, SYMMETRY};
use ems_core::seqcheck::CheckConfig;
use ems_core::{Outcome, Sequence, Verdict};
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use serde_json::json;

fn cat(name: &str, params: serde_json::Value) -> DistributionSpec {
    dist::catalog(name, &params).unwrap()
}

fn q(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

#[test]
fn exponential_symmetrizes_to_half_logistic() {
    let s = ranges::symmetrize(&cat("exponential", json!(null)));
    let h = cat("half_logistic_sym", json!(null));
    for u in ranges::default_u_grid() {
        assert!((s.quantile(u) - h.quantile(u)).abs() < 1e-9, "u = {u}");
    }
    // variance π²/12
    let var: f64 = (1..100000).map(|i| s.quantile((i as f64 - 0.5) / 99999.0).powi(2)).sum::<f64>() / 99999.0;
    assert!((var - std::f64::consts::PI.powi(2) / 12.0).abs() < 1e-3);
}

#[test]
fn symmetric_law_is_a_fixed_point() {
    let n = cat("normal", json!(null));
    let s = ranges::symmetrize(&n);
    for u in [0.01, 0.2, 0.5, 0.9] {
        assert!((s.quantile(u) - n.quantile(u)).abs() < 1e-12);
    }
    let l = cat("logistic_standard", json!(null));
    let sl = ranges::symmetrize(&l);
    assert!((sl.quantile(0.3) - l.quantile(0.3)).abs() < 1e-12);
}

#[test]
fn bernoulli_symmetrizes_to_three_atoms() {
    let s = ranges::symmetrize(&cat("bernoulli", json!(["3/10"])));
    let law = s.discrete.unwrap();
    assert_eq!(law.atoms, vec![(q(-1, 2), q(3, 10)), (q(0, 1), q(2, 5)), (q(1, 2), q(3, 10))]);
}

#[test]
fn equal_ranges_pairs() {
    let cfg = RangesConfig::default();
    let grid = ranges::default_u_grid();
    let pass = |a: &str, pa, b: &str| ranges::equal_ranges_check(&cat(a, pa), &cat(b, json!(null)), &grid, &cfg).unwrap();
    assert_eq!(pass("perturbed_normal", json!([1.0]), "normal").outcome(), Outcome::AllPass);
    assert_eq!(pass("uniform", json!(null), "beta_half_one").outcome(), Outcome::AllPass);
    let r = pass("uniform", json!(null), "exponential");
    assert_eq!(r.verdict(QUANTILE_DIFFERENCE), Some(Verdict::Fail));
    assert!(r.witnesses_for(QUANTILE_DIFFERENCE).all(|w| w.at.is_some()));
    // oracle: E R_2 is 1/3 for the uniform and 1 for the exponential
    let (ru, re) = (dist::expected_range(&cat("uniform", json!(null)), 2).unwrap(), dist::expected_range(&cat("exponential", json!(null)), 2).unwrap());
    assert!((ru - 1.0 / 3.0).abs() < 1e-12 && (re - 1.0).abs() < 1e-10);
}

#[test]
fn discrete_pairs() {
    let cfg = RangesConfig::default();
    let grid = ranges::default_u_grid();
    let r = ranges::equal_ranges_check(&cat("bernoulli", json!(["1/4"])), &cat("bernoulli_sym", json!(["1/4"])), &grid, &cfg).unwrap();
    assert_eq!(r.outcome(), Outcome::AllPass);
    let r = ranges::equal_ranges_check(&cat("bernoulli", json!(["1/4"])), &cat("bernoulli", json!(["1/3"])), &grid, &cfg).unwrap();
    assert_eq!(r.outcome(), Outcome::AnyFail);
}

#[test]
fn symmetry_examples() {
    let grid = ranges::default_y_grid();
    let r = ranges::symmetry_condition_4_6(&gif::harmonic(-1.0).unwrap(), &grid).unwrap();
    assert_eq!(r.verdict(SYMMETRY), Some(Verdict::Pass));
    assert_eq!(r.verdict(MEASURE), Some(Verdict::Pass));
    for c in [0.0, 1.0, 2.0] {
        let r = ranges::symmetry_condition_4_6(&gif::log_shift(c).unwrap(), &grid).unwrap();
        assert_eq!(r.verdict(SYMMETRY), Some(Verdict::Fail), "log_shift({c})");
    }
    let uniform = ranges::symmetry_condition_4_6(&gif::rational_family(1.0).unwrap(), &grid).unwrap();
    assert_eq!(uniform.verdict(SYMMETRY), Some(Verdict::Pass));
    let off = ranges::symmetry_condition_4_6(&gif::rational_family(0.0).unwrap(), &grid).unwrap();
    assert_eq!(off.verdict(SYMMETRY), Some(Verdict::Fail));
}

#[test]
fn involution_fixed_point() {
    let ln2 = std::f64::consts::LN_2;
    assert!((ranges::involution(ln2) - ln2).abs() < 1e-15);
    // T(y) = −log(1 − e^{−y})
    for y in [0.1, 1.0, 5.0] {
        assert!((ranges::involution(y) + (1.0 - (-y).exp()).ln()).abs() < 1e-12);
    }
}

fn harmonic(n: usize) -> BigRational {
    (1..=n).map(|j| q(1, j as i64)).fold(BigRational::zero(), |a, b| a + b)
}

#[test]
fn bridge_examples() {
    let cfg = CheckConfig::default();
    let exp = Sequence::from_fn_exact(40, |k| harmonic(k - 1));
    let r = ranges::ems_to_ers_bridge(&exp, &cfg).unwrap();
    assert_eq!(r.verdict(BRIDGE), Some(Verdict::Pass));
    // half the ranges are the maxima of the symmetrized law
    let half = cat("half_logistic_sym", json!(null));
    for k in 1..=5 {
        let m = dist::expected_max(&half, k).unwrap();
        let want = ems_core::special::to_f64(&harmonic(k - 1)) / 2.0;
        assert!((m - want).abs() < 1e-10, "k = {k}");
    }
    let p = q(1, 4);
    let bern = Sequence::from_fn_exact(30, |k| BigRational::one() - num_traits::pow(p.clone(), k) - num_traits::pow(BigRational::one() - &p, k));
    assert_eq!(ranges::ems_to_ers_bridge(&bern, &cfg).unwrap().verdict(BRIDGE), Some(Verdict::Pass));
    let zeros = Sequence::exact(vec![BigRational::zero(); 12]);
    let r = ranges::ems_to_ers_bridge(&zeros, &cfg).unwrap();
    assert_eq!(r.verdict(ems_core::seqcheck::ERS_I), Some(Verdict::Fail));
}
