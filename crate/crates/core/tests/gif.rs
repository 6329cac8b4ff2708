use ems_core::dist;
use ems_core::gif::{self, IntegralForm, Offset, Tail};
use ems_core::{Error, Verdict};
use serde_json::json;
use std::f64::consts::PI;

const EULER: f64 = 0.577_215_664_901_532_9;

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * b.abs().max(1.0)
}

#[test]
fn evaluations() {
    let p = gif::power_theta(0.5, 0.0).unwrap();
    assert!(close(gif::evaluate_g(&p, 4.0).unwrap(), 2.0, 1e-10));
    let l = gif::log_shift(0.0).unwrap();
    assert!(gif::evaluate_g(&l, 1.0).unwrap().abs() < 1e-12);
    let h = gif::harmonic(0.0).unwrap();
    assert!(close(gif::evaluate_g(&h, 6.0).unwrap(), 49.0 / 20.0, 1e-10));
    assert!(matches!(gif::evaluate_g(&h, 0.5), Err(Error::InvalidParams(_))));
}

#[test]
fn finiteness_condition() {
    let ok = gif::validate_3_1a(&gif::power_theta(0.3, 0.0).unwrap());
    assert_eq!(ok.verdict, Verdict::Pass);
    assert!(ok.value > 0.0 && ok.value.is_finite());
    let zero = gif::validate_3_1a(&IntegralForm::zero());
    assert_eq!((zero.verdict, zero.value), (Verdict::Fail, 0.0));
    let steep = IntegralForm::new("y^-2", |y: f64| y.powi(-2), Offset::Exp(0.0), -2.0, Tail::Exponential { rate: 0.0, power: -2.0 });
    assert_eq!(gif::validate_3_1a(&steep).verdict, Verdict::Fail);
}

#[test]
fn derivative_values() {
    let l = gif::log_shift(0.0).unwrap();
    assert!(close(l.signed_derivative(1, 2.0).unwrap(), 0.5, 1e-10));
    let p = gif::power_theta(0.5, 0.0).unwrap();
    assert!(close(p.signed_derivative(2, 4.0).unwrap(), 1.0 / 32.0, 1e-10));
    // (−1)^{n+1} d^n/dx^n log x = (n−1)!/x^n
    for n in 1..=6 {
        let fact: f64 = (1..n).map(|j| j as f64).product();
        assert!(close(l.signed_derivative(n, 3.0).unwrap(), fact / 3f64.powi(n as i32), 1e-9), "n = {n}");
    }
}

#[test]
fn first_derivative_is_positive_for_every_form() {
    for e in gif::form_entries() {
        let params = if matches!(e.id, "power_theta" | "log_power") { json!([0.5]) } else if e.id == "gen_harmonic" { json!([2.0]) } else { json!(null) };
        let f = gif::form_by_id(e.id, &params).unwrap();
        let r = gif::derivative_signs(&f, 1, &[1.5, 3.0, 8.0]).unwrap();
        assert_eq!(r.report.verdict(gif::SIGN), Some(Verdict::Pass), "{}", e.id);
    }
}

#[test]
fn bernstein_views() {
    let b = gif::bernstein_view(&gif::log_shift(0.0).unwrap()).unwrap();
    for x in [0.5, 2.0, 9.0] {
        assert!(close(b.b(x).unwrap(), (x + 1.0f64).ln(), 1e-10));
    }
    assert!(b.slope_decreasing);
    let s = gif::bernstein_view(&gif::power_theta(0.5, 0.0).unwrap()).unwrap();
    assert_eq!(s.b(0.0).unwrap(), 0.0);
    assert!(close(s.b(3.0).unwrap(), 1.0, 1e-10));
}

#[test]
fn log_power_is_bernstein_composed() {
    let f = gif::log_power(0.5).unwrap();
    for x in [2.0, 5.0, 20.0] {
        assert!(close(gif::evaluate_g(&f, x).unwrap(), f64::ln(x).sqrt(), 1e-9));
    }
    let r = gif::derivative_signs(&f, 6, &[1.5, 2.0, 5.0, 10.0]).unwrap();
    assert_eq!(r.report.verdict(gif::SIGN), Some(Verdict::Pass));
}

#[test]
fn kernels_of_catalog_laws() {
    let g = gif::h1_from_distribution(&dist::catalog("gumbel_shifted", &json!(null)).unwrap()).unwrap();
    let e = gif::h1_from_distribution(&dist::catalog("exponential", &json!(null)).unwrap()).unwrap();
    let f = gif::h1_from_distribution(&dist::catalog("frechet_type", &json!([0.25])).unwrap()).unwrap();
    let beta = 0.25 / libm::tgamma(0.75);
    for y in [0.01, 0.3, 1.0, 4.0] {
        assert!(close(g.h1(y), 1.0 / y, 1e-9));
        assert!(close(e.h1(y), (-y).exp() / (1.0 - (-y).exp()), 1e-9));
        assert!(close(f.h1(y), beta * y.powf(-1.25), 1e-9));
    }
}

#[test]
fn reconstructions() {
    let p = gif::reconstruct_quantile(&gif::power_theta(0.5, 0.0).unwrap(), 1.0).unwrap();
    let l = gif::reconstruct_quantile(&gif::log_shift(0.0).unwrap(), 0.0).unwrap();
    let h = gif::reconstruct_quantile(&gif::harmonic(0.0).unwrap(), 1.0).unwrap();
    for u in [0.05, 0.3, 0.5, 0.8, 0.97] {
        let lu = -f64::ln(u);
        assert!(close(p.quantile(u), 1.0 / (lu.sqrt() * PI.sqrt()), 1e-8), "u = {u}");
        assert!(close(l.quantile(u), -lu.ln() - EULER, 1e-8), "u = {u}");
        assert!(close(h.quantile(u), -f64::ln(1.0 - u), 1e-8), "u = {u}");
    }
    assert!(close(l.quantile((-1f64).exp()), -EULER, 1e-10));
}

#[test]
fn symmetric_reconstruction() {
    let h = gif::reconstruct_quantile(&gif::harmonic(-1.0).unwrap(), 0.0).unwrap();
    for u in [0.01, 0.2, 0.4, 0.5] {
        assert!((h.quantile(u) + h.quantile(1.0 - u)).abs() < 1e-8);
    }
}

#[test]
fn nonpositive_kernel_is_rejected() {
    let bad = IntegralForm::new("neg", |y: f64| 1.0 - y, Offset::Exp(0.0), 0.0, Tail::Exponential { rate: 1.0, power: 1.0 });
    assert!(matches!(gif::reconstruct_quantile(&bad, 0.0), Err(Error::PositivityViolation(_))));
}

#[test]
fn sequences_from_forms() {
    let h = gif::sequence_from_form(&gif::harmonic(0.0).unwrap(), 5).unwrap().to_f64_vec();
    for (got, want) in h.iter().zip([1.0, 1.5, 11.0 / 6.0, 25.0 / 12.0, 137.0 / 60.0]) {
        assert!(close(*got, want, 1e-10));
    }
    let g = gif::sequence_from_form(&gif::gen_harmonic(2.0).unwrap(), 3).unwrap().to_f64_vec();
    for (got, want) in g.iter().zip([1.0, 1.25, 49.0 / 36.0]) {
        assert!(close(*got, want, 1e-10));
    }
    assert_eq!(gif::sequence_from_form(&gif::log_shift(0.0).unwrap(), 1).unwrap().len(), 1);
}
