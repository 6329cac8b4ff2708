//! Expected ranges: symmetrization, equality of expected ranges between two
//! distributions, and the involution criterion on integral forms.

use num_rational::BigRational;
use num_traits::{One, Zero};
use rayon::prelude::*;

use crate::dist::{self, DiscreteLaw, DistributionSpec, Jump, Piece, Shape};
use crate::error::{Error, Result};
use crate::gif::IntegralForm;
use crate::quad::{self, QuadConfig};
use crate::report::{CheckReport, Outcome, Verdict, Witness};
use crate::seqcheck::{self, CheckConfig, Mode, Sequence};

pub const QUANTILE_DIFFERENCE: &str = "ranges.quantile-difference";
pub const EXPECTED_RANGES: &str = "ranges.expected-ranges";
pub const SYMMETRY: &str = "ranges.symmetry";
pub const MEASURE: &str = "ranges.measure";
pub const BRIDGE: &str = "ranges.bridge";

/// Relative residual allowed for closed-form and tabulated kernels.
pub const SYMMETRY_TOL_CLOSED: f64 = 1e-8;
pub const SYMMETRY_TOL_TABULATED: f64 = 1e-4;
const MEASURE_PROBES: [f64; 3] = [0.25, std::f64::consts::LN_2, 2.0];
const MEASURE_TOL: f64 = 1e-7;
const MAX_WITNESSES: usize = 20;

/// T(y) = −log(1 − e^{−y}), an involution of (0, ∞) fixing log 2.
pub fn involution(y: f64) -> f64 {
    if y > std::f64::consts::LN_2 {
        -(-(-y).exp()).ln_1p()
    } else {
        -(-(-y).exp_m1()).ln()
    }
}

/// ½[Q(u) − Q((1 − u)+)]: the symmetric distribution with the same expected ranges.
pub fn symmetrize(d: &DistributionSpec) -> DistributionSpec {
    let label = format!("symmetrize({})", d.label);
    if let Some(law) = &d.discrete {
        let mut out = dist::discrete_distribution(&label, symmetrize_law(law));
        out.label = label;
        return out;
    }
    let src = d.clone();
    let q = move |u: f64, v: f64| 0.5 * (src.quantile_uv(u, v) - src.quantile_right_limit_uv(v, u));

    let mut cuts: Vec<f64> = vec![0.0, 1.0];
    for p in d.pieces() {
        cuts.extend([p.lo, p.hi, 1.0 - p.lo, 1.0 - p.hi]);
    }
    cuts.sort_by(f64::total_cmp);
    cuts.dedup_by(|a, b| (*a - *b).abs() <= 1e-15);
    let shape_at = |u: f64| d.pieces().iter().find(|p| u > p.lo && u <= p.hi).map_or(Shape::Smooth, |p| p.shape);
    let pieces: Vec<Piece> = cuts
        .windows(2)
        .map(|w| {
            let mid = 0.5 * (w[0] + w[1]);
            let shape = match (shape_at(mid), shape_at(1.0 - mid)) {
                (Shape::Constant(a), Shape::Constant(b)) => Shape::Constant(0.5 * (a - b)),
                _ => Shape::Smooth,
            };
            Piece { lo: w[0], hi: w[1], shape }
        })
        .collect();
    let jumps: Vec<Jump> = cuts[1..cuts.len() - 1]
        .iter()
        .filter_map(|&b| {
            let left = 0.5 * (d.quantile_uv(b, 1.0 - b) - d.quantile_right_limit_uv(1.0 - b, b));
            let right = 0.5 * (d.quantile_right_limit_uv(b, 1.0 - b) - d.quantile_uv(1.0 - b, b));
            (right - left > 1e-15 * (left.abs() + right.abs())).then_some(Jump { u: b, left, right })
        })
        .collect();
    let mut out = DistributionSpec::from_quantile(label, q).with_pieces(pieces, jumps);
    out.caveat = d.caveat.clone();
    out
}

// Atoms of ½(Q(U) − Q((1−U)+)) computed on the common refinement of both partitions.
fn symmetrize_law(law: &DiscreteLaw) -> DiscreteLaw {
    let mut cum = vec![BigRational::zero()];
    for (_, p) in &law.atoms {
        let next = cum.last().unwrap() + p;
        cum.push(next);
    }
    let one = BigRational::one();
    let mut cuts: Vec<BigRational> = cum.iter().flat_map(|c| [c.clone(), &one - c]).collect();
    cuts.sort();
    cuts.dedup();
    // index of the atom whose cell (cum[i], cum[i+1]] contains the open interval starting at `lo`
    let atom_after = |lo: &BigRational| cum.windows(2).position(|w| *lo >= w[0] && *lo < w[1]).unwrap_or(law.atoms.len() - 1);
    let two = BigRational::from_integer(2.into());
    let mut atoms: Vec<(BigRational, BigRational)> = Vec::new();
    for w in cuts.windows(2) {
        let mass = &w[1] - &w[0];
        let i = atom_after(&w[0]);
        let j = atom_after(&(&one - &w[1]));
        let value = (&law.atoms[i].0 - &law.atoms[j].0) / &two;
        match atoms.iter_mut().find(|a| a.0 == value) {
            Some(a) => a.1 += mass,
            None => atoms.push((value, mass)),
        }
    }
    DiscreteLaw::new(atoms).expect("symmetrized masses sum to one")
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RangesConfig {
    pub tol_abs: f64,
    /// Relative to the quantile magnitudes involved.
    pub tol_rel: f64,
    /// Allowed |ρ_A − ρ_B| / max(1, |ρ_A|) in the expected-ranges cross-check.
    pub range_tol: f64,
    pub k_max: usize,
}

impl Default for RangesConfig {
    fn default() -> Self {
        RangesConfig { tol_abs: 1e-12, tol_rel: 1e-10, range_tol: 1e-7, k_max: 10 }
    }
}

/// Probe points for quantile comparisons: a uniform grid plus both tails.
pub fn default_u_grid() -> Vec<f64> {
    let mut g: Vec<f64> = (1..100).map(|i| i as f64 / 100.0).collect();
    for e in 2..=8 {
        let t = 10f64.powi(-e);
        g.extend([t, 1.0 - t]);
    }
    g.sort_by(f64::total_cmp);
    g
}

/// Tests Q_A(u) − Q_B(u) = Q_A((1−u)+) − Q_B((1−u)+) on the grid and at every
/// jump of either quantile, then compares expected ranges for k = 2..k_max.
pub fn equal_ranges_check(a: &DistributionSpec, b: &DistributionSpec, grid: &[f64], cfg: &RangesConfig) -> Result<CheckReport> {
    let mut points: Vec<f64> = grid.iter().copied().filter(|u| *u > 0.0 && *u < 1.0).collect();
    for j in a.jumps.iter().chain(&b.jumps) {
        points.extend([j.u, 1.0 - j.u]);
    }
    points.sort_by(f64::total_cmp);
    points.dedup();
    let mut report = CheckReport::new(cfg.k_max, Mode::Float);

    let residuals: Vec<(f64, f64, f64)> = points
        .par_iter()
        .map(|&u| {
            let v = 1.0 - u;
            let (qa, qb) = (a.quantile_uv(u, v), b.quantile_uv(u, v));
            let (ra, rb) = (a.quantile_right_limit_uv(v, u), b.quantile_right_limit_uv(v, u));
            let r = (qa - qb) - (ra - rb);
            let tol = cfg.tol_abs + cfg.tol_rel * (qa.abs() + qb.abs() + ra.abs() + rb.abs());
            (u, r, tol)
        })
        .collect();
    let mut worst: f64 = 0.0;
    let mut bad = false;
    for (i, &(u, r, tol)) in residuals.iter().enumerate() {
        worst = worst.max(r.abs());
        if !(r.abs() <= tol) {
            bad = true;
            if report.witnesses.len() < MAX_WITNESSES {
                report.witnesses.push(Witness { condition: QUANTILE_DIFFERENCE.into(), s: None, k: i + 1, value: r, exact: None, at: Some(u) });
            }
        }
    }
    report.set(QUANTILE_DIFFERENCE, if bad { Verdict::Fail } else { Verdict::Pass });
    report.metric(&format!("{QUANTILE_DIFFERENCE}.max_residual"), worst);

    let ranges: Vec<(usize, f64, f64)> = (2..=cfg.k_max.max(2))
        .into_par_iter()
        .map(|k| Ok((k, dist::expected_range(a, k)?, dist::expected_range(b, k)?)))
        .collect::<Result<_>>()?;
    let mut worst: f64 = 0.0;
    let mut bad = false;
    for &(k, ra, rb) in &ranges {
        let gap = (ra - rb).abs() / ra.abs().max(1.0);
        worst = worst.max(gap);
        if !(gap <= cfg.range_tol) {
            bad = true;
            report.witnesses.push(Witness { condition: EXPECTED_RANGES.into(), s: None, k, value: ra - rb, exact: None, at: None });
        }
    }
    report.set(EXPECTED_RANGES, if bad { Verdict::Fail } else { Verdict::Pass });
    report.metric(&format!("{EXPECTED_RANGES}.max_gap"), worst);
    Ok(report)
}

/// 200 log-spaced points in [1e-6, 40].
pub fn default_y_grid() -> Vec<f64> {
    log_grid(1e-6, 40.0, 200)
}

/// n ≥ 2 log-spaced points from lo to hi, endpoints exact.
pub fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let (a, b) = (lo.ln(), hi.ln());
    let mut g: Vec<f64> = (0..n).map(|i| (a + (b - a) * i as f64 / (n - 1) as f64).exp()).collect();
    g[0] = lo;
    g[n - 1] = hi;
    g
}

/// Residual of h1(T(y)) = (e^y − 1) h1(y) on the grid plus y = log 2.
///
/// The relative residual at T(y) equals the one at y, so each pair {y, T(y)}
/// is evaluated once at its smaller member. On a pass the measure identity
/// ∫_0^y w = ∫_{T(y)}^∞ w with w = h1 e^{−y}(1 − e^{−y}) is checked at three points.
pub fn symmetry_condition_4_6(form: &IntegralForm, y_grid: &[f64]) -> Result<CheckReport> {
    let tol = if form.closed_form { SYMMETRY_TOL_CLOSED } else { SYMMETRY_TOL_TABULATED };
    let mut ys: Vec<f64> = y_grid
        .iter()
        .copied()
        .filter(|y| *y > 0.0 && y.is_finite())
        .chain([std::f64::consts::LN_2])
        .map(|y| y.min(involution(y)))
        .collect();
    ys.sort_by(f64::total_cmp);
    ys.dedup_by(|a, b| (*a - *b).abs() <= 1e-12 * b.abs());

    let rows: Vec<(f64, f64, f64)> = ys
        .par_iter()
        .map(|&y| {
            let lhs = form.h1(involution(y));
            let rhs = y.exp_m1() * form.h1(y);
            let scale = lhs.abs().max(rhs.abs());
            let rel = if scale == 0.0 { 0.0 } else { (lhs - rhs).abs() / scale };
            (y, lhs - rhs, rel)
        })
        .collect();
    let mut report = CheckReport::new(rows.len(), Mode::Float);
    let mut worst: f64 = 0.0;
    let mut skipped = 0;
    let mut bad = false;
    for (i, &(y, r, rel)) in rows.iter().enumerate() {
        if !rel.is_finite() {
            skipped += 1;
            continue;
        }
        worst = worst.max(rel);
        if rel >= tol {
            bad = true;
            if report.witnesses.len() < MAX_WITNESSES {
                report.witnesses.push(Witness { condition: SYMMETRY.into(), s: None, k: i + 1, value: r, exact: None, at: Some(y) });
            }
        }
    }
    if skipped > 0 {
        report.note(format!("{SYMMETRY}: {skipped} grid points gave non-finite h1 and were skipped"));
    }
    let verdict = if bad {
        Verdict::Fail
    } else if skipped == rows.len() {
        Verdict::Inconclusive
    } else {
        Verdict::Pass
    };
    report.set(SYMMETRY, verdict);
    report.metric(&format!("{SYMMETRY}.max_relative_residual"), worst);
    report.metric(&format!("{SYMMETRY}.tolerance"), tol);
    if verdict != Verdict::Pass {
        return Ok(report);
    }

    let w = |y: f64| form.lkr_density(y) * -(-y).exp_m1();
    let cfg = QuadConfig::default();
    let diverged = |e: quad::QuadFailure| Error::DivergentIntegral { region: format!("y -> {}", e.region) };
    let mut worst: f64 = 0.0;
    for (i, &y) in MEASURE_PROBES.iter().enumerate() {
        let left = quad::toward_zero(&w, y, &cfg).map_err(diverged)?.value;
        let right = quad::toward_infinity(&w, involution(y), &cfg).map_err(diverged)?.value;
        let gap = (left - right).abs() / left.abs().max(right.abs()).max(f64::MIN_POSITIVE);
        worst = worst.max(gap);
        if gap > MEASURE_TOL {
            report.witnesses.push(Witness { condition: MEASURE.into(), s: None, k: i + 1, value: left - right, exact: None, at: Some(y) });
        }
    }
    report.set(MEASURE, if worst > MEASURE_TOL { Verdict::Fail } else { Verdict::Pass });
    report.metric(&format!("{MEASURE}.max_relative_gap"), worst);
    match form.g1() {
        Ok(g1) => {
            report.metric("ranges.g1", g1);
            if g1.abs() <= 1e-10 {
                report.note("g(1) = 0: the form is an expected-ranges sequence");
            } else {
                report.note("g(1) != 0: expected maxima of a variable symmetric about its mean");
            }
        }
        Err(e) => report.note(format!("g(1) unavailable: {e}")),
    }
    Ok(report)
}

/// Runs the expected-ranges check on `seq` and the expected-maxima check on
/// `seq / 2`, and records whether the two verdicts are consistent: a range
/// sequence is twice the expected maxima of a symmetric variable.
pub fn ems_to_ers_bridge(seq: &Sequence, cfg: &CheckConfig) -> Result<CheckReport> {
    if seq.len() < 3 {
        return Err(Error::SequenceTooShort { len: seq.len(), min: 3 });
    }
    let cfg = CheckConfig { min_depth: cfg.min_depth.min(seq.len()).max(3), ..*cfg };
    let half = seq.scale(&BigRational::new(1.into(), 2.into()));
    let ers = seqcheck::check_ers(seq, &cfg)?;
    let ems = seqcheck::check_ems(&half, &cfg)?;
    let (ers_out, ems_out) = (ers.outcome(), ems.outcome());
    let identity = ers.verdict(seqcheck::ERS_III);

    // ERS ⇒ half is EMS; half is EMS with the range identity ⇒ ERS.
    let verdict = match (ers_out, ems_out) {
        (Outcome::AllPass, Outcome::AnyFail) => Verdict::Fail,
        (Outcome::AnyFail, Outcome::AllPass) if identity.is_some_and(Verdict::is_pass) => Verdict::Fail,
        (Outcome::Inconclusive, _) | (_, Outcome::Inconclusive) => Verdict::Inconclusive,
        _ => Verdict::Pass,
    };
    let mut report = ers;
    report.merge(ems);
    report.set(BRIDGE, verdict);
    for k in 1..=seq.len().min(5) {
        report.metric(&format!("ranges.candidate.mu_{k}"), half.get(k));
    }
    report.note("candidate: expected maxima of the symmetrized variable are seq/2");
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gif;
    use crate::special::rational;
    use serde_json::json;

    #[test]
    fn involution_is_its_own_inverse() {
        for &y in &[1e-6, 0.1, std::f64::consts::LN_2, 1.0, 5.0, 30.0] {
            let back = involution(involution(y));
            assert!((back - y).abs() <= 1e-12 * y, "{y} -> {back}");
        }
        assert!((involution(std::f64::consts::LN_2) - std::f64::consts::LN_2).abs() < 1e-15);
    }

    #[test]
    fn exponential_becomes_half_logistic() {
        let s = symmetrize(&dist::catalog("exponential", &json!(null)).unwrap());
        for i in 1..100 {
            let u = i as f64 / 100.0;
            let expected = 0.5 * (u / (1.0 - u)).ln();
            assert!((s.quantile(u) - expected).abs() < 1e-12);
        }
    }

    #[test]
    fn bernoulli_symmetrizes_to_three_atoms() {
        let s = symmetrize(&dist::catalog("bernoulli", &json!(["3/10"])).unwrap());
        let law = s.discrete.unwrap();
        assert_eq!(law.atoms, vec![
            (rational(-1, 2), rational(3, 10)),
            (rational(0, 1), rational(2, 5)),
            (rational(1, 2), rational(3, 10)),
        ]);
    }

    #[test]
    fn equal_ranges_examples() {
        let cfg = RangesConfig::default();
        let g = default_u_grid();
        let n = dist::catalog("normal", &json!(null)).unwrap();
        let p = dist::catalog("perturbed_normal", &json!([1.0])).unwrap();
        assert_eq!(equal_ranges_check(&p, &n, &g, &cfg).unwrap().outcome(), Outcome::AllPass);
        let u = dist::catalog("uniform", &json!(null)).unwrap();
        let b = dist::catalog("beta_half_one", &json!(null)).unwrap();
        assert_eq!(equal_ranges_check(&u, &b, &g, &cfg).unwrap().outcome(), Outcome::AllPass);
        let e = dist::catalog("exponential", &json!(null)).unwrap();
        let r = equal_ranges_check(&u, &e, &g, &cfg).unwrap();
        assert_eq!(r.verdict(QUANTILE_DIFFERENCE), Some(Verdict::Fail));
        assert!(r.witnesses_for(QUANTILE_DIFFERENCE).next().unwrap().at.is_some());
        assert_eq!(r.verdict(EXPECTED_RANGES), Some(Verdict::Fail));
    }

    #[test]
    fn symmetry_examples() {
        let g = default_y_grid();
        let r = symmetry_condition_4_6(&gif::harmonic(-1.0).unwrap(), &g).unwrap();
        assert_eq!(r.verdict(SYMMETRY), Some(Verdict::Pass));
        assert_eq!(r.verdict(MEASURE), Some(Verdict::Pass));
        for c in [0.0, 1.0, 2.0] {
            let r = symmetry_condition_4_6(&gif::log_shift(c).unwrap(), &g).unwrap();
            assert_eq!(r.verdict(SYMMETRY), Some(Verdict::Fail), "log_shift({c})");
        }
        let r = symmetry_condition_4_6(&gif::rational_family(1.0).unwrap(), &g).unwrap();
        assert_eq!(r.verdict(SYMMETRY), Some(Verdict::Pass));
        let r = symmetry_condition_4_6(&gif::rational_family(0.0).unwrap(), &g).unwrap();
        assert_eq!(r.verdict(SYMMETRY), Some(Verdict::Fail));
    }

    #[test]
    fn bridge_examples() {
        let h: Vec<BigRational> = (1..=40).map(|k| crate::special::harmonic_exact(k - 1)).collect();
        let r = ems_to_ers_bridge(&Sequence::exact(h), &CheckConfig::default()).unwrap();
        assert_eq!(r.verdict(BRIDGE), Some(Verdict::Pass));
        assert_eq!(r.verdict(seqcheck::ERS_I), Some(Verdict::Pass));
        assert_eq!(r.verdict(seqcheck::EMS_I), Some(Verdict::Pass));

        let zeros = Sequence::exact(vec![BigRational::zero(); 12]);
        let r = ems_to_ers_bridge(&zeros, &CheckConfig::default()).unwrap();
        assert_eq!(r.verdict(seqcheck::ERS_I), Some(Verdict::Fail));
        assert_eq!(r.verdict(BRIDGE), Some(Verdict::Pass));

        assert!(matches!(
            ems_to_ers_bridge(&Sequence::float(vec![0.0, 1.0]), &CheckConfig::default()),
            Err(Error::SequenceTooShort { .. })
        ));
    }
}
