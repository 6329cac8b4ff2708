//! Finite differences, alternating binomial sums and truncated checks of the
//! expected-maxima, expected-ranges and Hausdorff moment conditions.
//!
//! Three arithmetic modes are supported. Exact mode works on rationals and
//! decides every sign exactly. Float mode runs the difference recursion in
//! f64. Extended mode accumulates the f64 inputs exactly (every f64 is a
//! dyadic rational) so the only uncertainty left is the rounding of the
//! inputs themselves. In both float modes a cell whose magnitude sits below
//! its noise estimate is counted as unresolved rather than failed.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::report::{Cancellation, CheckReport, Trend, Verdict, Witness};
use crate::special::{binomial, binomial_f64, shortest_decimal_rational, to_f64};

pub const EMS_I: &str = "ems.i";
pub const EMS_II: &str = "ems.ii";
pub const EMS_III: &str = "ems.iii";
pub const ERS_I: &str = "ers.i";
pub const ERS_II: &str = "ers.ii";
pub const ERS_III: &str = "ers.iii";
pub const HAUSDORFF: &str = "kadane.hausdorff";

const LOSS_THRESHOLD: f64 = 1e12;
const MAX_WITNESSES: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Mode {
    #[serde(rename = "exact-rational")]
    Exact,
    #[serde(rename = "float")]
    Float,
    #[serde(rename = "extended-float")]
    ExtendedFloat,
}

impl Mode {
    /// Largest s + k examined when no depth is configured.
    pub fn safe_depth(self, len: usize) -> usize {
        match self {
            Mode::Exact => len,
            Mode::Float => len.min(40),
            Mode::ExtendedFloat => len.min(80),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Values {
    Exact(Vec<BigRational>),
    Float(Vec<f64>),
}

/// A finite prefix μ_1..μ_K, indexed from 1.
#[derive(Debug, Clone, PartialEq)]
pub struct Sequence {
    values: Values,
    mode: Mode,
}

impl Sequence {
    pub fn exact(values: Vec<BigRational>) -> Self {
        Sequence { values: Values::Exact(values), mode: Mode::Exact }
    }

    pub fn float(values: Vec<f64>) -> Self {
        Sequence { values: Values::Float(values), mode: Mode::Float }
    }

    pub fn extended(values: Vec<f64>) -> Self {
        Sequence { values: Values::Float(values), mode: Mode::ExtendedFloat }
    }

    pub fn from_fn<F: Fn(usize) -> f64>(len: usize, f: F) -> Self {
        Sequence::float((1..=len).map(f).collect())
    }

    pub fn from_fn_exact<F: Fn(usize) -> BigRational>(len: usize, f: F) -> Self {
        Sequence::exact((1..=len).map(f).collect())
    }

    pub fn len(&self) -> usize {
        match &self.values {
            Values::Exact(v) => v.len(),
            Values::Float(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn is_exact(&self) -> bool {
        self.mode == Mode::Exact
    }

    /// μ_k as f64 (1-indexed).
    pub fn get(&self, k: usize) -> f64 {
        match &self.values {
            Values::Exact(v) => to_f64(&v[k - 1]),
            Values::Float(v) => v[k - 1],
        }
    }

    pub fn exact_value(&self, k: usize) -> Option<&BigRational> {
        match &self.values {
            Values::Exact(v) => v.get(k - 1),
            Values::Float(_) => None,
        }
    }

    pub fn rationals(&self) -> Option<&[BigRational]> {
        match &self.values {
            Values::Exact(v) => Some(v),
            Values::Float(_) => None,
        }
    }

    pub fn to_f64_vec(&self) -> Vec<f64> {
        (1..=self.len()).map(|k| self.get(k)).collect()
    }

    pub fn prefix(&self, n: usize) -> Sequence {
        let n = n.min(self.len());
        let values = match &self.values {
            Values::Exact(v) => Values::Exact(v[..n].to_vec()),
            Values::Float(v) => Values::Float(v[..n].to_vec()),
        };
        Sequence { values, mode: self.mode }
    }

    /// Converts between modes. Floats enter exact mode through their shortest
    /// decimal representation, so `0.1` becomes `1/10`.
    pub fn with_mode(&self, mode: Mode) -> Result<Sequence> {
        Ok(match (mode, &self.values) {
            (Mode::Exact, Values::Exact(_)) => self.clone(),
            (Mode::Exact, Values::Float(v)) => {
                let exact = v
                    .iter()
                    .map(|&x| {
                        shortest_decimal_rational(x)
                            .ok_or_else(|| Error::Parse(format!("non-finite value {x}")))
                    })
                    .collect::<Result<Vec<_>>>()?;
                Sequence::exact(exact)
            }
            (Mode::Float, _) => Sequence::float(self.to_f64_vec()),
            (Mode::ExtendedFloat, _) => Sequence::extended(self.to_f64_vec()),
        })
    }

    /// Multiplies every term by `factor`, keeping the mode.
    pub fn scale(&self, factor: &BigRational) -> Sequence {
        match &self.values {
            Values::Exact(v) => Sequence::exact(v.iter().map(|x| x * factor).collect()),
            Values::Float(v) => {
                let f = to_f64(factor);
                Sequence { values: Values::Float(v.iter().map(|x| x * f).collect()), mode: self.mode }
            }
        }
    }

    // Exact terms for exact and extended modes; f64 inputs are converted exactly.
    fn exact_terms(&self) -> Option<Vec<BigRational>> {
        match (&self.values, self.mode) {
            (Values::Exact(v), _) => Some(v.clone()),
            (Values::Float(v), Mode::ExtendedFloat) => {
                Some(v.iter().map(|&x| BigRational::from_float(x).unwrap_or_else(BigRational::zero)).collect())
            }
            _ => None,
        }
    }

    fn from_terms(&self, terms: Terms) -> Sequence {
        match terms {
            Terms::Exact(v) if self.mode == Mode::Exact => Sequence::exact(v),
            Terms::Exact(v) => Sequence {
                values: Values::Float(v.iter().map(to_f64).collect()),
                mode: self.mode,
            },
            Terms::Float(v) => Sequence { values: Values::Float(v), mode: self.mode },
        }
    }
}

/// A computed quantity with its cancellation diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct Value {
    pub exact: Option<BigRational>,
    pub approx: f64,
    /// Σ|terms| / |result|.
    pub amplification: f64,
    pub precision_loss: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CheckConfig {
    /// Largest s + k examined; defaults to the mode's safe depth.
    pub max_depth: Option<usize>,
    pub min_depth: usize,
    /// Relative uncertainty of float inputs (rounding is always included).
    pub tol_rel: f64,
    pub tol_abs: f64,
    /// Level below which a decreasing tail counts as vanished; defaults to 0.05·|μ_2 − μ_1|.
    pub tail_threshold: Option<f64>,
    /// Decay exponent of |r_k| that counts as convergence to zero.
    pub min_decay_exponent: f64,
    /// Exponents smaller than this in magnitude read as a flat tail.
    pub flat_exponent: f64,
    /// Strict positivity margin relative to the running magnitude (float modes).
    pub strict_eps_rel: f64,
}

impl Default for CheckConfig {
    fn default() -> Self {
        CheckConfig {
            max_depth: None,
            min_depth: 10,
            tol_rel: 0.0,
            tol_abs: 0.0,
            tail_threshold: None,
            min_decay_exponent: 0.1,
            flat_exponent: 0.01,
            strict_eps_rel: 1e-12,
        }
    }
}

impl CheckConfig {
    fn depth(&self, seq: &Sequence) -> usize {
        let safe = seq.mode.safe_depth(seq.len());
        self.max_depth.map_or(safe, |d| d.min(seq.len()))
    }

    fn input_rel(&self) -> f64 {
        self.tol_rel.max(f64::EPSILON)
    }
}

#[derive(Debug, Clone)]
enum Terms {
    Exact(Vec<BigRational>),
    Float(Vec<f64>),
}

fn terms_of(seq: &Sequence) -> Terms {
    match seq.exact_terms() {
        Some(v) => Terms::Exact(v),
        None => Terms::Float(seq.to_f64_vec()),
    }
}

#[derive(Debug, Clone)]
struct Cell {
    approx: f64,
    exact: Option<BigRational>,
    // Σ C(s,j)|μ_{k+j}| and max |μ_{k+j}| over the cone
    abs: f64,
    mag: f64,
}

// rows[s][i] = Δ^s of the (i+1)-th term, over the first `depth` terms.
fn difference_rows(terms: &Terms, depth: usize, max_order: usize) -> Vec<Vec<Cell>> {
    let base: Vec<Cell> = match terms {
        Terms::Exact(v) => v[..depth]
            .iter()
            .map(|x| {
                let a = to_f64(x);
                Cell { approx: a, exact: Some(x.clone()), abs: a.abs(), mag: a.abs() }
            })
            .collect(),
        Terms::Float(v) => v[..depth]
            .iter()
            .map(|&a| Cell { approx: a, exact: None, abs: a.abs(), mag: a.abs() })
            .collect(),
    };
    let mut rows = vec![base];
    for s in 1..=max_order.min(depth.saturating_sub(1)) {
        let prev = &rows[s - 1];
        let row: Vec<Cell> = prev
            .windows(2)
            .map(|w| {
                let exact = match (&w[0].exact, &w[1].exact) {
                    (Some(a), Some(b)) => Some(b - a),
                    _ => None,
                };
                let approx = exact.as_ref().map_or(w[1].approx - w[0].approx, to_f64);
                Cell { approx, exact, abs: w[0].abs + w[1].abs, mag: w[0].mag.max(w[1].mag) }
            })
            .collect();
        rows.push(row);
    }
    rows
}

fn noise(mode: Mode, cfg: &CheckConfig, order: usize, abs: f64) -> f64 {
    match mode {
        Mode::Exact => 0.0,
        Mode::Float => (order as f64 + 2.0) * f64::EPSILON * abs + cfg.input_rel() * abs + cfg.tol_abs,
        Mode::ExtendedFloat => cfg.input_rel() * abs + cfg.tol_abs,
    }
}

fn amplification(abs: f64, value: f64) -> f64 {
    if value == 0.0 {
        if abs == 0.0 {
            1.0
        } else {
            f64::MAX
        }
    } else {
        (abs / value.abs()).min(f64::MAX)
    }
}

fn exact_string(x: &Option<BigRational>) -> Option<String> {
    x.as_ref().map(|r| r.to_string())
}

fn check_index(k: usize, s: usize, len: usize) -> Result<()> {
    if k == 0 || k + s > len {
        return Err(Error::IndexOutOfRange { needed: k + s, len });
    }
    Ok(())
}

/// Δ^s μ_k via the recursion Δ^{s+1} = ΔΔ^s.
pub fn forward_difference(seq: &Sequence, s: usize, k: usize) -> Result<Value> {
    check_index(k, s, seq.len())?;
    let window = match terms_of(seq) {
        Terms::Exact(v) => Terms::Exact(v[k - 1..k + s].to_vec()),
        Terms::Float(v) => Terms::Float(v[k - 1..k + s].to_vec()),
    };
    let rows = difference_rows(&window, s + 1, s);
    let cell = &rows[s][0];
    let amp = amplification(cell.abs, cell.approx);
    Ok(Value {
        exact: if seq.is_exact() { cell.exact.clone() } else { None },
        approx: cell.approx,
        amplification: amp,
        precision_loss: seq.mode == Mode::Float && amp > LOSS_THRESHOLD,
    })
}

fn nu_cell(terms: &Terms, k: usize) -> Cell {
    match terms {
        Terms::Exact(v) => {
            let mut sum = BigRational::zero();
            let mut abs = 0.0;
            for j in 1..=k {
                let c = BigRational::from_integer(binomial(k as u64, j as u64));
                let term = c * &v[j - 1];
                abs += to_f64(&term).abs();
                if j % 2 == 1 {
                    sum -= term;
                } else {
                    sum += term;
                }
            }
            let approx = to_f64(&sum);
            Cell { approx, exact: Some(sum), abs, mag: 0.0 }
        }
        Terms::Float(v) => {
            let mut sum = 0.0;
            let mut abs = 0.0;
            for j in 1..=k {
                let term = binomial_f64(k as u64, j as u64) * v[j - 1];
                abs += term.abs();
                sum += if j % 2 == 1 { -term } else { term };
            }
            Cell { approx: sum, exact: None, abs, mag: 0.0 }
        }
    }
}

/// ν_k = Σ_{j=1}^k (−1)^j C(k,j) μ_j.
pub fn alternating_binomial_sum(seq: &Sequence, k: usize) -> Result<Value> {
    check_index(k, 0, seq.len())?;
    let cell = nu_cell(&terms_of(seq), k);
    let amp = amplification(cell.abs, cell.approx);
    let safe = seq.mode.safe_depth(usize::MAX);
    Ok(Value {
        exact: if seq.is_exact() { cell.exact } else { None },
        approx: cell.approx,
        amplification: amp,
        precision_loss: seq.mode == Mode::Float && (amp > LOSS_THRESHOLD || k > safe),
    })
}

/// μ̃_k = ν_k, the expected maxima of −X when `seq` holds those of X.
pub fn dual_sequence(seq: &Sequence) -> Sequence {
    dual_sequence_with_loss(seq).0
}

/// Dual sequence together with the amplification factor of each term.
pub fn dual_sequence_with_loss(seq: &Sequence) -> (Sequence, Vec<f64>) {
    let terms = terms_of(seq);
    let cells: Vec<Cell> = (1..=seq.len()).map(|k| nu_cell(&terms, k)).collect();
    let amps = cells.iter().map(|c| amplification(c.abs, c.approx)).collect();
    let out = match terms {
        Terms::Exact(_) => Terms::Exact(cells.into_iter().map(|c| c.exact.unwrap()).collect()),
        Terms::Float(_) => Terms::Float(cells.into_iter().map(|c| c.approx).collect()),
    };
    (seq.from_terms(out), amps)
}

/// m_n = μ_{n+2} − μ_{n+1} for n = 0..K−2; the result stores m_0 at position 1.
pub fn kadane_moments(seq: &Sequence) -> Result<Sequence> {
    if seq.len() < 3 {
        return Err(Error::SequenceTooShort { len: seq.len(), min: 3 });
    }
    let out = match terms_of(seq) {
        Terms::Exact(v) => Terms::Exact(v.windows(2).map(|w| &w[1] - &w[0]).collect()),
        Terms::Float(v) => Terms::Float(v.windows(2).map(|w| w[1] - w[0]).collect()),
    };
    Ok(seq.from_terms(out))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum CellStatus {
    Ok,
    Unresolved,
    Violation,
}

// Sign test on `signed` = (−1)^p Δ^s value. `strict` demands > 0.
fn classify(mode: Mode, cfg: &CheckConfig, s: usize, cell: &Cell, sign: i32, strict: bool) -> (CellStatus, f64) {
    let signed = sign as f64 * cell.approx;
    if mode == Mode::Exact {
        let e = cell.exact.as_ref().expect("exact cell");
        let positive = if sign > 0 { e.is_positive() } else { e.is_negative() };
        let ok = if strict { positive } else { positive || e.is_zero() };
        return (if ok { CellStatus::Ok } else { CellStatus::Violation }, signed);
    }
    let nz = noise(mode, cfg, s, cell.abs);
    let eps_strict = if strict { cfg.strict_eps_rel * cell.mag } else { 0.0 };
    let status = if strict {
        if signed > nz && signed > 0.0 {
            CellStatus::Ok
        } else if signed < -nz || (signed <= 0.0 && nz <= eps_strict) {
            // zero at the strictness margin counts as a plateau
            CellStatus::Violation
        } else {
            CellStatus::Unresolved
        }
    } else if signed >= 0.0 {
        CellStatus::Ok
    } else if signed >= -nz {
        CellStatus::Unresolved
    } else {
        CellStatus::Violation
    };
    (status, signed)
}

struct SignScan {
    verdict: Verdict,
    witnesses: Vec<Witness>,
    cancellation: Cancellation,
    min_signed: Option<(f64, usize, usize)>,
    resolved_depth: usize,
}

// Scans cells s in `orders`, index offsets so that witness k = first_k + i.
fn sign_scan(
    condition: &str,
    seq_mode: Mode,
    cfg: &CheckConfig,
    rows: &[Vec<Cell>],
    orders: std::ops::RangeInclusive<usize>,
    first_k: usize,
    sign_of: impl Fn(usize) -> i32,
    strict: bool,
    depth: usize,
) -> SignScan {
    let mut witnesses = Vec::new();
    let mut unresolved = 0;
    let mut max_amp: f64 = 0.0;
    let mut min_signed: Option<(f64, usize, usize)> = None;
    let mut violation = false;
    let mut resolved_depth = depth;
    for s in orders {
        let Some(row) = rows.get(s) else { break };
        for (i, cell) in row.iter().enumerate() {
            let k = first_k + i;
            let (status, signed) = classify(seq_mode, cfg, s, cell, sign_of(s), strict);
            max_amp = max_amp.max(amplification(cell.abs, cell.approx));
            if min_signed.is_none_or(|(m, _, _)| signed < m) {
                min_signed = Some((signed, s, k));
            }
            match status {
                CellStatus::Ok => {}
                CellStatus::Unresolved => {
                    unresolved += 1;
                    // cells with s + (i + 1) > resolved depth are not certified
                    resolved_depth = resolved_depth.min(s + i);
                }
                CellStatus::Violation => {
                    violation = true;
                    if witnesses.len() < MAX_WITNESSES {
                        witnesses.push(Witness {
                            condition: condition.to_string(),
                            s: Some(s),
                            k,
                            value: signed,
                            exact: exact_string(&cell.exact.as_ref().map(|e| if sign_of(s) > 0 { e.clone() } else { -e })),
                            at: None,
                        });
                    }
                }
            }
        }
    }
    SignScan {
        verdict: if violation { Verdict::Fail } else { Verdict::Pass },
        witnesses,
        cancellation: Cancellation {
            condition: condition.to_string(),
            max_amplification: max_amp.min(f64::MAX),
            unresolved,
            precision_loss: seq_mode != Mode::Exact && (unresolved > 0 || (seq_mode == Mode::Float && max_amp > LOSS_THRESHOLD)),
        },
        min_signed,
        resolved_depth,
    }
}

fn record_scan(report: &mut CheckReport, condition: &str, scan: SignScan) {
    report.set(condition, scan.verdict);
    report.witnesses.extend(scan.witnesses);
    if let Some((v, s, k)) = scan.min_signed {
        report.metric(&format!("{condition}.min_value"), v);
        report.metric(&format!("{condition}.min_s"), s as f64);
        report.metric(&format!("{condition}.min_k"), k as f64);
    }
    if scan.cancellation.unresolved > 0 {
        report.metric(&format!("{condition}.resolved_depth"), scan.resolved_depth as f64);
        report.note(format!(
            "{condition}: {} cells below the noise estimate; sign certified for s + k <= {}",
            scan.cancellation.unresolved, scan.resolved_depth
        ));
    }
    report.diagnostics.cancellation.push(scan.cancellation);
}

// (−1)^{s+1} Δ^s μ_k > 0 for s ≥ 1, k ≥ 1, s + k ≤ depth.
fn alternating_positivity(condition: &str, seq: &Sequence, terms: &Terms, cfg: &CheckConfig, depth: usize) -> SignScan {
    let rows = difference_rows(terms, depth, depth - 1);
    sign_scan(condition, seq.mode, cfg, &rows, 1..=depth - 1, 1, |s| if s % 2 == 1 { 1 } else { -1 }, true, depth)
}

fn lsq_slope(points: &[(f64, f64)]) -> Option<f64> {
    let n = points.len() as f64;
    if points.len() < 2 {
        return None;
    }
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

/// Tail-trend verdict for r_k → 0, given (k, r_k, resolved).
fn trend(condition: &str, r: &[(usize, f64, bool)], threshold: f64, cfg: &CheckConfig) -> (Verdict, Trend, Option<Witness>) {
    let d = r.len();
    let w = ((0.4 * d as f64).ceil() as usize).max(5).min(d);
    let window = &r[d - w..];
    let abs: Vec<f64> = window.iter().map(|p| p.1.abs()).collect();
    let decreasing = abs.windows(2).all(|p| p[1] < p[0]);
    let increasing = abs.windows(2).all(|p| p[1] > p[0]);
    let all_positive = abs.iter().all(|&a| a > 0.0);
    let slope = if all_positive {
        let pts: Vec<(f64, f64)> = window.iter().map(|p| ((p.0 as f64).ln(), p.1.abs().ln())).collect();
        lsq_slope(&pts)
    } else {
        None
    };
    let tail_slope = if all_positive && w >= 2 {
        let (k1, a1) = (window[w - 2].0 as f64, abs[w - 2]);
        let (k2, a2) = (window[w - 1].0 as f64, abs[w - 1]);
        Some((a2 / a1).ln() / (k2 / k1).ln())
    } else {
        None
    };
    let last = abs[w - 1];
    let stat = Trend {
        condition: condition.to_string(),
        window: (window[0].0, window[w - 1].0),
        last,
        threshold,
        slope,
        tail_slope,
        monotone: if decreasing {
            "decreasing"
        } else if increasing {
            "increasing"
        } else {
            "mixed"
        }
        .to_string(),
    };
    if d < 5 || window.iter().any(|p| !p.2) {
        return (Verdict::Inconclusive, stat, None);
    }
    let decays = slope.is_some_and(|s| s <= -cfg.min_decay_exponent);
    let flat = matches!((slope, tail_slope), (Some(s), Some(t)) if s.abs() < 5.0 * cfg.flat_exponent && t.abs() < cfg.flat_exponent);
    let verdict = if decreasing && (last < threshold || decays) {
        Verdict::PassHeuristic
    } else if last >= threshold && (increasing || flat) {
        Verdict::Fail
    } else {
        Verdict::Inconclusive
    };
    let witness = (verdict == Verdict::Fail).then(|| Witness {
        condition: condition.to_string(),
        s: None,
        k: window[w - 1].0,
        value: window[w - 1].1,
        exact: None,
        at: None,
    });
    (verdict, stat, witness)
}

fn record_trend(report: &mut CheckReport, condition: &str, r: &[(usize, f64, bool)], threshold: f64, cfg: &CheckConfig) {
    let (verdict, stat, witness) = trend(condition, r, threshold, cfg);
    report.set(condition, verdict);
    report.witnesses.extend(witness);
    report.diagnostics.trends.push(stat);
}

fn tail_threshold(seq: &Sequence, cfg: &CheckConfig) -> f64 {
    cfg.tail_threshold.unwrap_or_else(|| 0.05 * (seq.get(2) - seq.get(1)).abs())
}

fn precheck(seq: &Sequence, cfg: &CheckConfig) -> Result<usize> {
    let min = cfg.min_depth.max(2);
    if seq.len() < min {
        return Err(Error::SequenceTooShort { len: seq.len(), min });
    }
    Ok(cfg.depth(seq).max(2))
}

// (k, ν_k/k, resolved) over the prefix where ν is resolved to 1%.
fn nu_ratios(seq: &Sequence, terms: &Terms, cfg: &CheckConfig, depth: usize) -> (Vec<(usize, f64, bool)>, Vec<Cell>) {
    let cells: Vec<Cell> = (1..=depth).map(|k| nu_cell(terms, k)).collect();
    let ratios = cells
        .iter()
        .enumerate()
        .map(|(i, c)| {
            let k = i + 1;
            let nz = noise(seq.mode, cfg, k, c.abs);
            (k, c.approx / k as f64, nz <= 0.01 * c.approx.abs())
        })
        .collect();
    (ratios, cells)
}

fn resolved_prefix(r: Vec<(usize, f64, bool)>, min_len: usize) -> (Vec<(usize, f64, bool)>, bool) {
    let cut = r.iter().position(|p| !p.2).unwrap_or(r.len());
    if cut >= min_len && cut < r.len() {
        (r[..cut].to_vec(), true)
    } else {
        (r, false)
    }
}

/// Truncated check of conditions (i)–(iii) for expected maxima.
pub fn check_ems(seq: &Sequence, cfg: &CheckConfig) -> Result<CheckReport> {
    let depth = precheck(seq, cfg)?;
    let terms = terms_of(seq);
    let mut report = CheckReport::new(depth, seq.mode);

    let scan = alternating_positivity(EMS_I, seq, &terms, cfg, depth);
    record_scan(&mut report, EMS_I, scan);

    let threshold = tail_threshold(seq, cfg);
    let mu_ratios: Vec<(usize, f64, bool)> = (1..=seq.len()).map(|k| (k, seq.get(k) / k as f64, true)).collect();
    record_trend(&mut report, EMS_II, &mu_ratios, threshold, cfg);

    let (nu, _) = nu_ratios(seq, &terms, cfg, depth);
    let (nu, cut) = resolved_prefix(nu, cfg.min_depth.max(5));
    if cut {
        report.note(format!("{EMS_III}: trend evaluated on the resolved prefix k <= {}", nu.len()));
    }
    record_trend(&mut report, EMS_III, &nu, threshold, cfg);
    Ok(report)
}

/// Truncated check of the expected-ranges conditions; the identity
/// ρ_k = Σ_j (−1)^j C(k,j) ρ_j is tested at every k up to the depth.
pub fn check_ers(seq: &Sequence, cfg: &CheckConfig) -> Result<CheckReport> {
    let depth = precheck(seq, cfg)?;
    let terms = terms_of(seq);
    let mut report = CheckReport::new(depth, seq.mode);

    let scan = alternating_positivity(ERS_I, seq, &terms, cfg, depth);
    record_scan(&mut report, ERS_I, scan);

    let threshold = tail_threshold(seq, cfg);
    let rho_ratios: Vec<(usize, f64, bool)> = (1..=seq.len()).map(|k| (k, seq.get(k) / k as f64, true)).collect();
    record_trend(&mut report, ERS_II, &rho_ratios, threshold, cfg);

    let mut witnesses = Vec::new();
    let mut max_residual: f64 = 0.0;
    let mut max_amp: f64 = 0.0;
    let rho_exact = match &terms {
        Terms::Exact(v) => Some(v),
        Terms::Float(_) => None,
    };
    let float_mode = seq.mode != Mode::Exact;
    let tolerance = |k: usize, abs: f64, rho: f64| -> f64 {
        match seq.mode {
            Mode::Exact => 0.0,
            Mode::Float => cfg.tol_abs + (64.0f64.max(k as f64 + 2.0) * f64::EPSILON + cfg.input_rel()) * abs + cfg.input_rel() * rho.abs(),
            Mode::ExtendedFloat => cfg.tol_abs + cfg.input_rel() * (abs + rho.abs()),
        }
    };
    fn push(witnesses: &mut Vec<Witness>, k: usize, value: f64, exact: Option<String>) {
        witnesses.push(Witness { condition: ERS_III.to_string(), s: None, k, value, exact, at: None });
    }
    // fast rejections: ρ_1 = 0 and ρ_3 = (3/2)ρ_2
    let rho1_bad = match rho_exact {
        Some(v) => !v[0].is_zero(),
        None => seq.get(1).abs() > tolerance(1, seq.get(1).abs(), 0.0),
    };
    if rho1_bad {
        push(&mut witnesses, 1, seq.get(1), rho_exact.map(|v| v[0].to_string()));
    }
    if seq.len() >= 3 && depth >= 3 {
        let (bad, value, exact) = match rho_exact {
            Some(v) => {
                let d = &v[2] - &v[1] * BigRational::new(BigInt::from(3), BigInt::from(2));
                (!d.is_zero(), to_f64(&d), Some(d.to_string()))
            }
            None => {
                let d = seq.get(3) - 1.5 * seq.get(2);
                let abs = seq.get(3).abs() + 1.5 * seq.get(2).abs();
                (d.abs() > tolerance(3, abs, 0.0), d, None)
            }
        };
        if bad {
            push(&mut witnesses, 3, value, exact);
        }
    }
    for k in 1..=depth {
        let cell = nu_cell(&terms, k);
        let (residual, exact) = match (&cell.exact, rho_exact) {
            (Some(nu), Some(v)) if !float_mode => {
                let d = &v[k - 1] - nu;
                (to_f64(&d), Some(d))
            }
            (Some(nu), Some(v)) => (to_f64(&(&v[k - 1] - nu)), None),
            _ => (seq.get(k) - cell.approx, None),
        };
        max_residual = max_residual.max(residual.abs());
        max_amp = max_amp.max(amplification(cell.abs, residual));
        let bad = match &exact {
            Some(d) => !d.is_zero(),
            None => residual.abs() > tolerance(k, cell.abs, seq.get(k)),
        };
        if bad && witnesses.len() < MAX_WITNESSES && !witnesses.iter().any(|w| w.k == k) {
            push(&mut witnesses, k, residual, exact.map(|d| d.to_string()));
        }
    }
    report.set(ERS_III, if witnesses.is_empty() { Verdict::Pass } else { Verdict::Fail });
    report.witnesses.extend(witnesses);
    report.metric(&format!("{ERS_III}.max_residual"), max_residual);
    report.diagnostics.cancellation.push(Cancellation {
        condition: ERS_III.to_string(),
        max_amplification: max_amp.min(f64::MAX),
        unresolved: 0,
        precision_loss: seq.mode == Mode::Float && max_amp > LOSS_THRESHOLD,
    });
    Ok(report)
}

/// Hausdorff check of the Kadane moments of `seq`, using Δ^s m_n = Δ^{s+1} μ_{n+1}
/// so that float noise is measured against |μ| rather than the differences.
pub fn check_kadane(seq: &Sequence, max_order: usize, cfg: &CheckConfig) -> Result<CheckReport> {
    if seq.len() < 3 {
        return Err(Error::SequenceTooShort { len: seq.len(), min: 3 });
    }
    let len = seq.len();
    let max_order = max_order.min(len - 2);
    let rows = difference_rows(&terms_of(seq), len, max_order + 1);
    let mut report = CheckReport::new(len - 1, seq.mode);
    let scan = sign_scan(HAUSDORFF, seq.mode, cfg, &rows[1..], 0..=max_order, 0, |s| if s % 2 == 0 { 1 } else { -1 }, false, len - 1);
    record_scan(&mut report, HAUSDORFF, scan);
    Ok(report)
}

/// (−1)^s Δ^s m_k ≥ 0 for 0 ≤ s ≤ max_order and s + k ≤ K − 1 (k from 0).
pub fn check_hausdorff(moments: &Sequence, max_order: usize) -> Result<CheckReport> {
    check_hausdorff_with(moments, max_order, false, &CheckConfig::default())
}

/// Hausdorff check with an optional strict variant (> 0 instead of ≥ 0).
pub fn check_hausdorff_with(moments: &Sequence, max_order: usize, strict: bool, cfg: &CheckConfig) -> Result<CheckReport> {
    if max_order + 1 > moments.len() {
        return Err(Error::IndexOutOfRange { needed: max_order + 1, len: moments.len() });
    }
    let len = moments.len();
    let terms = terms_of(moments);
    let rows = difference_rows(&terms, len, max_order);
    let mut report = CheckReport::new(len, moments.mode);
    let scan = sign_scan(HAUSDORFF, moments.mode, cfg, &rows, 0..=max_order, 0, |s| if s % 2 == 0 { 1 } else { -1 }, strict, len);
    record_scan(&mut report, HAUSDORFF, scan);
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::special::{harmonic_exact, rational};

    fn example_21() -> Sequence {
        Sequence::from_fn_exact(50, |k| rational(k as i64, 1) - rational(1, k as i64 + 1))
    }

    #[test]
    fn difference_of_example_sequence() {
        let v = forward_difference(&example_21(), 2, 3).unwrap();
        assert_eq!(v.exact, Some(rational(-1, 60)));
    }

    #[test]
    fn out_of_range_index() {
        let seq = Sequence::float(vec![1.0, 2.0, 3.0]);
        assert_eq!(forward_difference(&seq, 2, 2), Err(Error::IndexOutOfRange { needed: 4, len: 3 }));
        assert!(alternating_binomial_sum(&seq, 4).is_err());
    }

    #[test]
    fn nu_of_example_sequence() {
        let seq = example_21();
        assert_eq!(alternating_binomial_sum(&seq, 5).unwrap().exact, Some(rational(5, 6)));
        assert_eq!(alternating_binomial_sum(&seq, 1).unwrap().exact, Some(rational(-1, 2)));
    }

    #[test]
    fn dual_of_uniform_is_reflected_uniform() {
        let seq = Sequence::from_fn_exact(30, |k| rational(k as i64, k as i64 + 1));
        let dual = dual_sequence(&seq);
        for k in 1..=30 {
            assert_eq!(dual.exact_value(k).unwrap(), &rational(-1, k as i64 + 1));
        }
    }

    #[test]
    fn dual_is_involution_on_harmonic_numbers() {
        let seq = Sequence::from_fn_exact(25, |k| harmonic_exact(k as u64));
        assert_eq!(dual_sequence(&dual_sequence(&seq)), seq);
    }

    #[test]
    fn float_difference_flags_loss() {
        let seq = Sequence::from_fn(45, |k| k as f64 / (k as f64 + 1.0));
        let v = forward_difference(&seq, 40, 1).unwrap();
        assert!(v.precision_loss);
        let v = forward_difference(&seq, 1, 1).unwrap();
        assert!(!v.precision_loss);
    }

    #[test]
    fn kadane_of_affine_sequence_is_constant() {
        let seq = Sequence::from_fn_exact(10, |k| rational(3 + 2 * k as i64, 1));
        let m = kadane_moments(&seq).unwrap();
        assert_eq!(m.len(), 9);
        assert!((1..=9).all(|n| m.exact_value(n) == Some(&rational(2, 1))));
    }

    #[test]
    fn hausdorff_alternating_signs_fail_first_at_order_zero() {
        let m = Sequence::from_fn_exact(12, |k| rational(if k % 2 == 1 { 1 } else { -1 }, 1));
        let r = check_hausdorff(&m, 5).unwrap();
        assert_eq!(r.verdict(HAUSDORFF), Some(Verdict::Fail));
        let w = &r.witnesses[0];
        assert_eq!((w.s, w.k), (Some(0), 1));
    }

    #[test]
    fn constant_sequence_fails_strict_positivity() {
        let seq = Sequence::float(vec![2.5; 12]);
        let r = check_ems(&seq, &CheckConfig::default()).unwrap();
        assert_eq!(r.verdict(EMS_I), Some(Verdict::Fail));
        assert_eq!(r.witnesses_for(EMS_I).next().unwrap().s, Some(1));
    }

    #[test]
    fn short_sequences_are_rejected() {
        let seq = Sequence::float(vec![1.0, 2.0, 2.5]);
        assert!(matches!(check_ems(&seq, &CheckConfig::default()), Err(Error::SequenceTooShort { .. })));
    }

    #[test]
    fn float_uniform_passes_with_unresolved_cells() {
        let seq = Sequence::from_fn(50, |k| k as f64 / (k as f64 + 1.0));
        let r = check_ems(&seq, &CheckConfig::default()).unwrap();
        assert_eq!(r.verdict(EMS_I), Some(Verdict::Pass));
        assert_eq!(r.truncation.max_depth, 40);
        assert!(r.diagnostics.cancellation[0].precision_loss);
    }

    #[test]
    fn extended_mode_resolves_deeper_than_float() {
        let seq = Sequence::extended((1..=50).map(|k| k as f64 / (k as f64 + 1.0)).collect());
        let r = check_ems(&seq, &CheckConfig::default()).unwrap();
        assert_eq!(r.verdict(EMS_I), Some(Verdict::Pass), "{:?}", r.witnesses);
        assert_eq!(r.truncation.max_depth, 50);
    }

    #[test]
    fn mode_conversion_uses_decimal_literals() {
        let seq = Sequence::float(vec![0.1, 0.25]).with_mode(Mode::Exact).unwrap();
        assert_eq!(seq.exact_value(1), Some(&rational(1, 10)));
        assert_eq!(seq.exact_value(2), Some(&rational(1, 4)));
    }
}
