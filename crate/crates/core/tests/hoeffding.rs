use ems_core::hoeffding;
use ems_core::{Error, Sequence};
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::Zero;

fn q(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

fn example(len: usize) -> Sequence {
    Sequence::from_fn_exact(len, |k| q(k as i64, 1) - q(1, k as i64 + 1))
}

#[test]
fn example_betas_at_level_four() {
    let t = hoeffding::beta_table(&example(10), 4).unwrap();
    assert_eq!(t.betas, vec![q(-4, 5), q(-3, 5), q(-2, 5), q(19, 5)]);
}

#[test]
fn dual_example_betas_at_level_three() {
    let seq = Sequence::from_fn_exact(10, |k| q(k as i64, k as i64 + 1) - q((k == 1) as i64, 1));
    let t = hoeffding::beta_table(&seq, 3).unwrap();
    assert_eq!(t.betas, vec![q(-11, 4), q(1, 2), q(3, 4)]);
}

#[test]
fn level_one_is_the_mean() {
    let t = hoeffding::beta_table(&example(5), 1).unwrap();
    assert_eq!(t.betas, vec![q(1, 2)]);
}

#[test]
fn single_draw_is_the_average_beta() {
    let t = hoeffding::beta_table(&example(10), 4).unwrap();
    let avg = t.betas.iter().fold(BigRational::zero(), |a, b| a + b) / q(4, 1);
    assert_eq!(hoeffding::discrete_expected_max(&t, 1), avg);
    assert_eq!(avg, q(1, 2));
}

#[test]
fn uniform_levels_approach_the_limit() {
    let seq = Sequence::from_fn_exact(200, |k| q(k as i64, k as i64 + 1));
    let errors: Vec<BigRational> = [50, 100, 200]
        .iter()
        .map(|&n| {
            let t = hoeffding::beta_table(&seq, n).unwrap();
            let e = hoeffding::discrete_expected_max(&t, 3) - q(3, 4);
            if e < BigRational::zero() {
                -e
            } else {
                e
            }
        })
        .collect();
    assert!(errors[2] < q(1, 100));
    assert!(errors[0] > errors[1] && errors[1] > errors[2]);
}

#[test]
fn example_converges_in_moments_but_not_in_law() {
    let r = hoeffding::convergence_diagnostic(&example(200), None, 4).unwrap();
    assert_eq!(r.levels, vec![10, 20, 50, 100, 200]);
    for row in &r.errors {
        assert!(row.monotone_decay, "k = {}", row.k);
    }
    // all but the top atom sit in (−1, 0): the law drifts to Uniform(−1, 0)
    let below: Vec<_> = r.ecdf.iter().filter(|p| p.0 < 0.0).collect();
    assert_eq!(below.len(), 199);
    assert!(below.iter().all(|p| p.0 > -1.0));
}

#[test]
fn degenerate_sequence_is_rejected() {
    let seq = Sequence::exact(vec![q(1, 1); 6]);
    assert_eq!(hoeffding::beta_table(&seq, 4).unwrap().first_non_increase(), Some(1));
    let err = hoeffding::convergence_diagnostic(&seq, Some(&[4]), 2).unwrap_err();
    assert!(matches!(err, Error::ConstructionInvalid { n: 4, i: 1, .. }));
}

#[test]
fn stirling_examples() {
    assert_eq!(hoeffding::stirling_sum(5, 2), BigInt::from(0));
    assert_eq!(hoeffding::stirling_sum(1, 0), BigInt::from(1));
    assert_eq!(hoeffding::stirling_sum(4, 3), BigInt::from(6));
}
