use ems_core::dist::{self, DistributionSpec};
use ems_core::Error;
use num_bigint::BigInt;
use num_rational::BigRational;
use serde_json::json;

fn cat(name: &str, params: serde_json::Value) -> DistributionSpec {
    dist::catalog(name, &params).unwrap()
}

fn close(a: f64, b: f64, rel: f64) -> bool {
    (a - b).abs() <= rel * b.abs().max(1e-300)
}

// Composite Simpson on [lo, hi] with n (even) panels.
fn simpson(f: impl Fn(f64) -> f64, lo: f64, hi: f64, n: usize) -> f64 {
    let h = (hi - lo) / n as f64;
    let mut s = f(lo) + f(hi);
    for i in 1..n {
        s += f(lo + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
    }
    s * h / 3.0
}

#[test]
fn uniform_and_exponential_maxima() {
    assert!(close(dist::expected_max(&cat("uniform", json!(null)), 7).unwrap(), 7.0 / 8.0, 1e-12));
    assert!(close(dist::expected_max(&cat("exponential", json!(null)), 6).unwrap(), 49.0 / 20.0, 1e-12));
}

#[test]
fn one_draw_gives_the_mean() {
    let u = cat("uniform", json!([2.0, 5.0]));
    assert!(close(dist::expected_max(&u, 1).unwrap(), 3.5, 1e-12));
    let e = cat("one_minus_exponential", json!(null));
    assert!(dist::expected_max(&e, 1).unwrap().abs() < 1e-12);
}

#[test]
fn minima() {
    assert!(close(dist::expected_min(&cat("uniform", json!(null)), 3).unwrap(), 0.25, 1e-12));
    assert!(close(dist::expected_min(&cat("exponential", json!(null)), 5).unwrap(), 0.2, 1e-10));
    // E min of 2 = 2μ_1 − μ_2 for any law
    let g = cat("gumbel_shifted", json!(null));
    let (m1, m2) = (dist::expected_max(&g, 1).unwrap(), dist::expected_max(&g, 2).unwrap());
    assert!((dist::expected_min(&g, 2).unwrap() - (2.0 * m1 - m2)).abs() < 1e-10);
}

#[test]
fn ranges() {
    let e = cat("exponential", json!(null));
    assert!(close(dist::expected_range(&e, 4).unwrap(), 11.0 / 6.0, 1e-10));
    for name in ["uniform", "exponential", "gumbel_shifted", "normal"] {
        assert_eq!(dist::expected_range(&cat(name, json!(null)), 1).unwrap(), 0.0);
    }
    let u = cat("uniform", json!(null));
    let oracle = 5.0 * simpson(|x| (x.powi(4) - (1.0 - x).powi(4)) * x, 0.0, 1.0, 2000);
    assert!(close(dist::expected_range(&u, 5).unwrap(), oracle, 1e-10), "{} vs {oracle}", dist::expected_range(&u, 5).unwrap());
    assert!(close(oracle, 2.0 / 3.0, 1e-10));
}

#[test]
fn catalog_closed_forms() {
    let f = cat("frechet_type", json!([0.5]));
    assert!(close(dist::expected_max(&f, 9).unwrap(), 3.0, 1e-8));
    assert_eq!(cat("uniform", json!([0.0, 1.0])).quantile(0.5), 0.5);
    assert!(close(dist::expected_max(&cat("two_block_uniform", json!(null)), 3).unwrap(), 1.25, 1e-10));
}

#[test]
fn logistic_recursion() {
    let d = cat("logistic_standard", json!(null));
    for k in 1..10 {
        let (a, b) = (dist::expected_max(&d, k).unwrap(), dist::expected_max(&d, k + 1).unwrap());
        assert!((b - a - 1.0 / k as f64).abs() < 1e-10, "k = {k}");
    }
}

#[test]
fn right_limits() {
    let b = cat("bernoulli", json!(["1/3"]));
    assert_eq!(b.quantile(2.0 / 3.0), 0.0);
    assert_eq!(b.quantile_right_limit(2.0 / 3.0), 1.0);
    let u = cat("uniform", json!(null));
    assert_eq!(u.quantile_right_limit(0.3), 0.3);
    let t = cat("truncated_log", json!(null));
    assert!(t.quantile_right_limit((-1f64).exp()).abs() < 1e-12);
}

#[test]
fn bernoulli_ranges_are_exact() {
    let b = cat("bernoulli", json!(["3/10"]));
    let p = BigRational::new(BigInt::from(3), BigInt::from(10));
    let one = BigRational::from_integer(BigInt::from(1));
    for k in 1..=10 {
        let want = &one - num_traits::pow(p.clone(), k) - num_traits::pow(&one - &p, k);
        assert_eq!(dist::expected_range_exact(&b, k).unwrap(), want);
        assert!(close(dist::expected_range(&b, k).unwrap(), ems_core::special::to_f64(&want), 1e-12) || k == 1);
    }
}

#[test]
fn unknown_and_bad_entries() {
    assert!(matches!(dist::catalog("nope", &json!(null)), Err(Error::UnknownName(_))));
    assert!(matches!(dist::catalog("frechet_type", &json!([1.5])), Err(Error::InvalidParams(_))));
    assert!(matches!(dist::catalog("bernoulli", &json!(["3/2"])), Err(Error::InvalidParams(_))));
}

#[test]
fn every_catalog_entry_builds_with_defaults() {
    for e in dist::entries() {
        if let Ok(d) = dist::catalog(e.id, &json!(null)) {
            let m = dist::expected_max(&d, 2).unwrap();
            assert!(m.is_finite(), "{}", e.id);
        }
    }
}
