//! Distributions given by their left-continuous quantile function, and the
//! quadrature of expected maxima, minima and ranges.
//!
//! A quantile is evaluated as `q(u, v)` with `v = 1 − u` supplied separately,
//! so that tails near u = 1 keep full precision. The unit interval is split
//! into pieces at jump points; constant pieces are integrated in closed form.

use std::fmt;
use std::sync::Arc;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quad::{self, QuadConfig};
use crate::seqcheck::Sequence;
use crate::special::{decimal_rational, gamma, normal_cdf, normal_pdf, normal_quantile_uv, to_f64, EULER_GAMMA};

pub type QuantileFn = Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>;
pub type DensityFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Shape {
    Smooth,
    Constant(f64),
}

/// A subinterval (lo, hi] of (0, 1) on which the quantile is continuous.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Piece {
    pub lo: f64,
    pub hi: f64,
    pub shape: Shape,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Jump {
    pub u: f64,
    pub left: f64,
    pub right: f64,
}

/// Finitely many atoms with exact probabilities.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteLaw {
    /// (value, probability), sorted by value.
    pub atoms: Vec<(BigRational, BigRational)>,
}

impl DiscreteLaw {
    pub fn new(mut atoms: Vec<(BigRational, BigRational)>) -> Result<Self> {
        atoms.retain(|(_, p)| !p.is_zero());
        atoms.sort_by(|a, b| a.0.cmp(&b.0));
        let total: BigRational = atoms.iter().map(|(_, p)| p.clone()).sum();
        if total != BigRational::one() || atoms.iter().any(|(_, p)| *p < BigRational::zero()) {
            return Err(Error::InvalidParams("atom probabilities must be non-negative and sum to 1".into()));
        }
        Ok(DiscreteLaw { atoms })
    }

    pub fn expected_max(&self, k: usize) -> BigRational {
        let mut sum = BigRational::zero();
        let mut cum = BigRational::zero();
        for (x, p) in &self.atoms {
            let next = &cum + p;
            sum += x * (pow(&next, k) - pow(&cum, k));
            cum = next;
        }
        sum
    }

    pub fn expected_min(&self, k: usize) -> BigRational {
        let mut sum = BigRational::zero();
        let mut surv = BigRational::one();
        for (x, p) in &self.atoms {
            let next = &surv - p;
            sum += x * (pow(&surv, k) - pow(&next, k));
            surv = next;
        }
        sum
    }

    pub fn expected_range(&self, k: usize) -> BigRational {
        self.expected_max(k) - self.expected_min(k)
    }
}

fn pow(x: &BigRational, k: usize) -> BigRational {
    num_traits::pow::pow(x.clone(), k)
}

// Distance in u below which a probe counts as sitting on a jump.
const JUMP_SNAP: f64 = 1.6e-13;

#[derive(Clone)]
pub struct DistributionSpec {
    pub label: String,
    quantile: QuantileFn,
    pieces: Vec<Piece>,
    pub jumps: Vec<Jump>,
    pdf: Option<DensityFn>,
    cdf: Option<DensityFn>,
    /// Support interval (α, ω) of the density, when one is declared.
    pub support: Option<(f64, f64)>,
    pub caveat: Option<String>,
    pub discrete: Option<DiscreteLaw>,
}

impl fmt::Debug for DistributionSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("DistributionSpec")
            .field("label", &self.label)
            .field("pieces", &self.pieces)
            .field("jumps", &self.jumps)
            .field("support", &self.support)
            .field("has_pdf", &self.pdf.is_some())
            .finish()
    }
}

impl DistributionSpec {
    /// A continuous distribution from its quantile `q(u, v)`.
    pub fn from_quantile<F>(label: impl Into<String>, q: F) -> Self
    where
        F: Fn(f64, f64) -> f64 + Send + Sync + 'static,
    {
        DistributionSpec {
            label: label.into(),
            quantile: Arc::new(q),
            pieces: vec![Piece { lo: 0.0, hi: 1.0, shape: Shape::Smooth }],
            jumps: Vec::new(),
            pdf: None,
            cdf: None,
            support: None,
            caveat: None,
            discrete: None,
        }
    }

    /// Replaces the piece decomposition and the list of jumps between pieces.
    pub fn with_pieces(mut self, pieces: Vec<Piece>, jumps: Vec<Jump>) -> Self {
        self.pieces = pieces;
        self.jumps = jumps;
        self
    }

    pub fn with_density<P, C>(mut self, support: (f64, f64), pdf: P, cdf: C) -> Self
    where
        P: Fn(f64) -> f64 + Send + Sync + 'static,
        C: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        self.support = Some(support);
        self.pdf = Some(Arc::new(pdf));
        self.cdf = Some(Arc::new(cdf));
        self
    }

    pub fn with_discrete(mut self, law: DiscreteLaw) -> Self {
        self.discrete = Some(law);
        self
    }

    pub fn with_caveat(mut self, caveat: impl Into<String>) -> Self {
        self.caveat = Some(caveat.into());
        self
    }

    pub fn quantile(&self, u: f64) -> f64 {
        self.quantile_uv(u, 1.0 - u)
    }

    /// Q(u) with `v = 1 − u` supplied by the caller; within rounding of a jump
    /// this is the left limit.
    pub fn quantile_uv(&self, u: f64, v: f64) -> f64 {
        match self.jump_at(u) {
            Some(j) => j.left,
            None => (self.quantile)(u, v),
        }
    }

    fn jump_at(&self, u: f64) -> Option<&Jump> {
        self.jumps.iter().find(|j| (j.u - u).abs() <= JUMP_SNAP)
    }

    pub fn quantile_fn(&self) -> QuantileFn {
        self.quantile.clone()
    }

    pub fn pieces(&self) -> &[Piece] {
        &self.pieces
    }

    pub fn pdf(&self, x: f64) -> Option<f64> {
        self.pdf.as_ref().map(|f| f(x))
    }

    pub fn cdf(&self, x: f64) -> Option<f64> {
        self.cdf.as_ref().map(|f| f(x))
    }

    pub fn has_density(&self) -> bool {
        self.pdf.is_some()
    }

    /// Q(u+): the right-hand limit, which differs from Q(u) only at jumps.
    pub fn quantile_right_limit(&self, u: f64) -> f64 {
        self.quantile_right_limit_uv(u, 1.0 - u)
    }

    /// Right limit at `u` with `v = 1 − u` supplied by the caller.
    pub fn quantile_right_limit_uv(&self, u: f64, v: f64) -> f64 {
        match self.jump_at(u) {
            Some(j) => j.right,
            None => (self.quantile)(u, v),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Statistic {
    Max,
    Min,
    Range,
}

fn weight(stat: Statistic, k: usize, u: f64, v: f64) -> f64 {
    let kf = k as f64;
    let e = (k - 1) as i32;
    match stat {
        Statistic::Max => kf * u.powi(e),
        Statistic::Min => kf * v.powi(e),
        Statistic::Range => {
            if k == 1 {
                0.0
            } else {
                kf * (u.powi(e) - v.powi(e))
            }
        }
    }
}

// ∫_lo^hi weight du in closed form.
fn weight_mass(stat: Statistic, k: usize, lo: f64, hi: f64) -> f64 {
    let k = k as i32;
    let (vlo, vhi) = (1.0 - lo, 1.0 - hi);
    match stat {
        Statistic::Max => hi.powi(k) - lo.powi(k),
        Statistic::Min => vlo.powi(k) - vhi.powi(k),
        Statistic::Range => (hi.powi(k) - lo.powi(k)) - (vlo.powi(k) - vhi.powi(k)),
    }
}

fn non_integrable(e: quad::QuadFailure) -> Error {
    Error::NonIntegrable(format!("quadrature did not settle near u = {}", e.region))
}

/// k ∫ w(u) Q(u) du for the chosen statistic.
pub fn expected_stat(d: &DistributionSpec, stat: Statistic, k: usize, cfg: &QuadConfig) -> Result<f64> {
    if k == 0 {
        return Err(Error::InvalidParams("k must be at least 1".into()));
    }
    if stat == Statistic::Range && k == 1 {
        return Ok(0.0);
    }
    let mut total = 0.0;
    for piece in &d.pieces {
        total += match piece.shape {
            Shape::Constant(c) => {
                if c == 0.0 {
                    0.0
                } else {
                    c * weight_mass(stat, k, piece.lo, piece.hi)
                }
            }
            Shape::Smooth => {
                let f = |u: f64, v: f64| weight(stat, k, u, v) * (d.quantile)(u, v);
                quad::unit_piece(&f, piece.lo, piece.hi, cfg).map_err(non_integrable)?.value
            }
        };
    }
    if !total.is_finite() {
        return Err(Error::NonIntegrable(format!("non-finite value for k = {k}")));
    }
    Ok(total)
}

/// E max of k iid copies: k ∫ u^{k−1} Q(u) du.
pub fn expected_max(d: &DistributionSpec, k: usize) -> Result<f64> {
    expected_stat(d, Statistic::Max, k, &QuadConfig::default())
}

/// E min of k iid copies: k ∫ (1−u)^{k−1} Q(u) du.
pub fn expected_min(d: &DistributionSpec, k: usize) -> Result<f64> {
    expected_stat(d, Statistic::Min, k, &QuadConfig::default())
}

/// E range of k iid copies: k ∫ (u^{k−1} − (1−u)^{k−1}) Q(u) du.
pub fn expected_range(d: &DistributionSpec, k: usize) -> Result<f64> {
    expected_stat(d, Statistic::Range, k, &QuadConfig::default())
}

/// Exact expected range for distributions carrying a discrete law.
pub fn expected_range_exact(d: &DistributionSpec, k: usize) -> Option<BigRational> {
    d.discrete.as_ref().map(|law| law.expected_range(k))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MomentRow {
    pub k: usize,
    pub mu: f64,
    pub min: f64,
    pub rho: f64,
}

/// Rows (k, μ_k, min_k, ρ_k) for k = 1..k_max, computed in parallel.
pub fn moments_table(d: &DistributionSpec, k_max: usize, cfg: &QuadConfig) -> Result<Vec<MomentRow>> {
    (1..=k_max)
        .into_par_iter()
        .map(|k| {
            Ok(MomentRow {
                k,
                mu: expected_stat(d, Statistic::Max, k, cfg)?,
                min: expected_stat(d, Statistic::Min, k, cfg)?,
                rho: expected_stat(d, Statistic::Range, k, cfg)?,
            })
        })
        .collect()
}

/// (E max_k)_{k=1..len} as a float sequence.
pub fn max_sequence(d: &DistributionSpec, len: usize, cfg: &QuadConfig) -> Result<Sequence> {
    let values: Vec<f64> = (1..=len)
        .into_par_iter()
        .map(|k| expected_stat(d, Statistic::Max, k, cfg))
        .collect::<Result<_>>()?;
    Ok(Sequence::float(values))
}

/// (E range_k)_{k=1..len} as a float sequence.
pub fn range_sequence(d: &DistributionSpec, len: usize, cfg: &QuadConfig) -> Result<Sequence> {
    let values: Vec<f64> = (1..=len)
        .into_par_iter()
        .map(|k| expected_stat(d, Statistic::Range, k, cfg))
        .collect::<Result<_>>()?;
    Ok(Sequence::float(values))
}

/// Spot-checks monotonicity on a dense grid and integrability of |Q|.
pub fn validate(d: &DistributionSpec) -> Result<()> {
    let n = 2000;
    let mut prev = f64::NEG_INFINITY;
    for i in 1..n {
        let u = i as f64 / n as f64;
        let q = d.quantile_uv(u, (n - i) as f64 / n as f64);
        if q.is_nan() {
            return Err(Error::InvalidParams(format!("quantile is NaN at u = {u}")));
        }
        if q < prev - 1e-12 * (1.0 + prev.abs()) {
            return Err(Error::InvalidParams(format!("quantile decreases near u = {u}")));
        }
        prev = q;
    }
    let cfg = QuadConfig::default().with_rel_tol(1e-8);
    for piece in &d.pieces {
        if let Shape::Smooth = piece.shape {
            let f = |u: f64, v: f64| (d.quantile)(u, v).abs();
            let r = quad::unit_piece(&f, piece.lo, piece.hi, &cfg).map_err(non_integrable)?;
            if !r.value.is_finite() {
                return Err(Error::NonIntegrable("∫|Q| is not finite".into()));
            }
        }
    }
    Ok(())
}

/// Checks class-F membership: interval support, positive density, cdf∘Q = id.
pub fn validate_class_f(d: &DistributionSpec) -> Result<()> {
    let (Some(pdf), Some(cdf)) = (&d.pdf, &d.cdf) else {
        return Err(Error::ClassFViolation(format!("{} has no density", d.label)));
    };
    if !d.jumps.is_empty() || d.pieces.iter().any(|p| matches!(p.shape, Shape::Constant(_))) {
        return Err(Error::ClassFViolation(format!("{} has atoms or gaps", d.label)));
    }
    for i in 1..200 {
        let u = i as f64 / 200.0;
        let x = d.quantile(u);
        let f = pdf(x);
        if !(f > 0.0 && f.is_finite()) {
            return Err(Error::ClassFViolation(format!("density not positive at x = {x}")));
        }
        if (cdf(x) - u).abs() > 1e-8 {
            return Err(Error::ClassFViolation(format!("cdf(Q(u)) != u at u = {u}")));
        }
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Catalog

/// Positional or named parameters from JSON.
pub struct Params<'a>(pub &'a serde_json::Value);

impl Params<'_> {
    fn raw(&self, name: &str, position: usize) -> Option<&serde_json::Value> {
        match self.0 {
            serde_json::Value::Object(m) => m.get(name),
            serde_json::Value::Array(a) => a.get(position),
            v @ (serde_json::Value::Number(_) | serde_json::Value::String(_)) if position == 0 => Some(v),
            _ => None,
        }
    }

    pub fn f64(&self, name: &str, position: usize, default: Option<f64>) -> Result<f64> {
        match self.raw(name, position) {
            Some(serde_json::Value::Number(n)) => n.as_f64().ok_or_else(|| bad_param(name)),
            Some(serde_json::Value::String(s)) => parse_rational(s).map(|r| to_f64(&r)).ok_or_else(|| bad_param(name)),
            Some(_) => Err(bad_param(name)),
            None => default.ok_or_else(|| Error::InvalidParams(format!("missing parameter `{name}`"))),
        }
    }

    /// A parameter as an exact rational: numbers by their decimal text, strings as "p/q".
    pub fn rational(&self, name: &str, position: usize, default: Option<BigRational>) -> Result<BigRational> {
        match self.raw(name, position) {
            Some(serde_json::Value::Number(n)) => decimal_rational(&n.to_string()).ok_or_else(|| bad_param(name)),
            Some(serde_json::Value::String(s)) => parse_rational(s).ok_or_else(|| bad_param(name)),
            Some(_) => Err(bad_param(name)),
            None => default.ok_or_else(|| Error::InvalidParams(format!("missing parameter `{name}`"))),
        }
    }
}

fn bad_param(name: &str) -> Error {
    Error::InvalidParams(format!("parameter `{name}` is not a number"))
}

/// Parses "p/q" or a decimal literal.
pub fn parse_rational(s: &str) -> Option<BigRational> {
    match s.split_once('/') {
        Some((n, d)) => {
            let n: BigInt = n.trim().parse().ok()?;
            let d: BigInt = d.trim().parse().ok()?;
            (!d.is_zero()).then(|| BigRational::new(n, d))
        }
        None => decimal_rational(s),
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CatalogEntry {
    pub id: &'static str,
    pub params: &'static str,
    pub description: &'static str,
}

pub fn entries() -> Vec<CatalogEntry> {
    let e = |id, params, description| CatalogEntry { id, params, description };
    vec![
        e("uniform", "a=0, b=1", "Uniform(a,b); uniform(0,1) has mu_k = k/(k+1)"),
        e("exponential", "rate=1", "Q(u) = -log(1-u)/rate; mu_k = H(k)/rate"),
        e("logistic_standard", "", "Q(u) = log(u/(1-u)); mu_{k+1} = mu_k + 1/k"),
        e("half_logistic_sym", "", "Q(u) = log(u/(1-u))/2; mean 0, variance pi^2/12"),
        e("gumbel_shifted", "", "F(x) = exp(-e^{-(x+gamma)}); mu_k = log k"),
        e("frechet_type", "theta in (0,1)", "F(x) = exp(-lambda x^{-1/theta}); mu_k = k^theta"),
        e("bernoulli", "p in (0,1)", "two atoms 0, 1; rho_k = 1 - p^k - (1-p)^k"),
        e("bernoulli_sym", "p in (0,1)", "atoms -1/2, 0, 1/2 with masses m, 1-2m, m, m = min(p,1-p)"),
        e("two_block_uniform", "", "density 1/2 on (-2,-1) and (1,2); mu_k = 2(k/(k+1) - 2^{-k})"),
        e("truncated_log", "", "Q(u) = (1 + log u) on (e^{-1}, 1), 0 below; mu_k = 1 - (1-e^{-k})/k"),
        e("perturbed_normal", "eps in (0, sqrt(2 pi))", "Q(u) = Phi^{-1}(u) + eps u (1-u); same ranges as the normal"),
        e("beta_half_one", "", "density 1/(2 sqrt y) on (0,1), Q(u) = u^2; same ranges as uniform(0,1)"),
        e("one_minus_exponential", "", "1 - Y for Y standard exponential; Q(u) = 1 + log u"),
        e("normal", "mu=0, sigma=1", "Normal(mu, sigma^2)"),
    ]
}

pub(crate) fn ln_u(u: f64, v: f64) -> f64 {
    if u < 0.5 {
        u.ln()
    } else {
        (-v).ln_1p()
    }
}

pub(crate) fn ln_v(u: f64, v: f64) -> f64 {
    if v < 0.5 {
        v.ln()
    } else {
        (-u).ln_1p()
    }
}

fn open_unit(name: &str, p: &BigRational) -> Result<()> {
    if *p <= BigRational::zero() || *p >= BigRational::one() {
        return Err(Error::InvalidParams(format!("{name} needs 0 < p < 1")));
    }
    Ok(())
}

/// Piecewise-constant quantile of a discrete law.
pub fn discrete_distribution(label: &str, law: DiscreteLaw) -> DistributionSpec {
    let mut cum = BigRational::zero();
    let mut pieces = Vec::new();
    let mut values = Vec::new();
    for (x, p) in &law.atoms {
        let lo = to_f64(&cum);
        cum += p;
        let hi = to_f64(&cum);
        let c = to_f64(x);
        pieces.push(Piece { lo, hi, shape: Shape::Constant(c) });
        values.push((hi, c));
    }
    let table = values.clone();
    let q = move |u: f64, _v: f64| {
        for &(hi, c) in &table {
            if u <= hi {
                return c;
            }
        }
        table.last().map_or(0.0, |t| t.1)
    };
    let mut d = DistributionSpec::from_quantile(label, q).with_discrete(law);
    d.jumps = values.windows(2).map(|w| Jump { u: w[0].0, left: w[0].1, right: w[1].1 }).collect();
    d.pieces = pieces;
    d
}

/// Looks up a catalog entry by id with JSON parameters.
pub fn catalog(name: &str, params: &serde_json::Value) -> Result<DistributionSpec> {
    let p = Params(params);
    let d = match name {
        "uniform" => {
            let a = p.f64("a", 0, Some(0.0))?;
            let b = p.f64("b", 1, Some(1.0))?;
            if !(a < b) {
                return Err(Error::InvalidParams("uniform needs a < b".into()));
            }
            let w = b - a;
            DistributionSpec::from_quantile(format!("uniform({a},{b})"), move |u, _| a + w * u).with_density(
                (a, b),
                move |x| if x > a && x < b { 1.0 / w } else { 0.0 },
                move |x| ((x - a) / w).clamp(0.0, 1.0),
            )
        }
        "exponential" => {
            let rate = p.f64("rate", 0, Some(1.0))?;
            if !(rate > 0.0) {
                return Err(Error::InvalidParams("exponential needs rate > 0".into()));
            }
            DistributionSpec::from_quantile("exponential", move |u, v| -ln_v(u, v) / rate).with_density(
                (0.0, f64::INFINITY),
                move |x| if x > 0.0 { rate * (-rate * x).exp() } else { 0.0 },
                move |x| if x > 0.0 { -(-rate * x).exp_m1() } else { 0.0 },
            )
        }
        "logistic_standard" => DistributionSpec::from_quantile("logistic_standard", |u, v| ln_u(u, v) - ln_v(u, v))
            .with_density((f64::NEG_INFINITY, f64::INFINITY), logistic_pdf, logistic_cdf),
        "half_logistic_sym" => {
            DistributionSpec::from_quantile("half_logistic_sym", |u, v| 0.5 * (ln_u(u, v) - ln_v(u, v))).with_density(
                (f64::NEG_INFINITY, f64::INFINITY),
                |x| 2.0 * logistic_pdf(2.0 * x),
                |x| logistic_cdf(2.0 * x),
            )
        }
        "gumbel_shifted" => DistributionSpec::from_quantile("gumbel_shifted", |u, v| -(-ln_u(u, v)).ln() - EULER_GAMMA)
            .with_density(
                (f64::NEG_INFINITY, f64::INFINITY),
                |x| {
                    let t = -(x + EULER_GAMMA);
                    (t - t.exp()).exp()
                },
                |x| (-(-(x + EULER_GAMMA)).exp()).exp(),
            ),
        "frechet_type" => {
            let theta = p.f64("theta", 0, None)?;
            if !(theta > 0.0 && theta < 1.0) {
                return Err(Error::InvalidParams("frechet_type needs 0 < theta < 1".into()));
            }
            let g = gamma(1.0 - theta);
            let lambda = g.powf(-1.0 / theta);
            DistributionSpec::from_quantile(format!("frechet_type({theta})"), move |u, v| (-ln_u(u, v)).powf(-theta) / g)
                .with_density(
                    (0.0, f64::INFINITY),
                    move |x| {
                        if x <= 0.0 {
                            return 0.0;
                        }
                        let t = lambda * x.powf(-1.0 / theta);
                        (-t).exp() * t / (theta * x)
                    },
                    move |x| if x <= 0.0 { 0.0 } else { (-lambda * x.powf(-1.0 / theta)).exp() },
                )
        }
        "bernoulli" => {
            let pr = p.rational("p", 0, None)?;
            open_unit("bernoulli", &pr)?;
            let law = DiscreteLaw::new(vec![
                (BigRational::zero(), BigRational::one() - &pr),
                (BigRational::one(), pr.clone()),
            ])?;
            let mut d = discrete_distribution("bernoulli", law);
            d.label = format!("bernoulli({})", pr);
            d
        }
        "bernoulli_sym" => {
            let pr = p.rational("p", 0, None)?;
            open_unit("bernoulli_sym", &pr)?;
            let m = pr.clone().min(BigRational::one() - &pr);
            let half = BigRational::new(BigInt::one(), BigInt::from(2));
            let law = DiscreteLaw::new(vec![
                (-half.clone(), m.clone()),
                (BigRational::zero(), BigRational::one() - &m - &m),
                (half, m),
            ])?;
            let mut d = discrete_distribution("bernoulli_sym", law);
            d.label = format!("bernoulli_sym({})", pr);
            d
        }
        "two_block_uniform" => DistributionSpec::from_quantile("two_block_uniform", |u, _| {
            if u <= 0.5 {
                2.0 * u - 2.0
            } else {
                2.0 * u
            }
        })
        .with_pieces(vec![
            Piece { lo: 0.0, hi: 0.5, shape: Shape::Smooth },
            Piece { lo: 0.5, hi: 1.0, shape: Shape::Smooth },
        ], vec![Jump { u: 0.5, left: -1.0, right: 1.0 }]),
        "truncated_log" => {
            let cut = (-1.0f64).exp();
            DistributionSpec::from_quantile("truncated_log", move |u, v| if u <= cut { 0.0 } else { 1.0 + ln_u(u, v) })
                .with_pieces(vec![
                    Piece { lo: 0.0, hi: cut, shape: Shape::Constant(0.0) },
                    Piece { lo: cut, hi: 1.0, shape: Shape::Smooth },
                ], Vec::new())
        }
        "perturbed_normal" => {
            let eps = p.f64("eps", 0, None)?;
            let bound = (2.0 * std::f64::consts::PI).sqrt();
            if !(eps > 0.0 && eps < bound) {
                return Err(Error::InvalidParams("perturbed_normal needs 0 < eps < sqrt(2 pi)".into()));
            }
            DistributionSpec::from_quantile(format!("perturbed_normal({eps})"), move |u, v| {
                normal_quantile_uv(u, v) + eps * u * v
            })
        }
        "beta_half_one" => DistributionSpec::from_quantile("beta_half_one", |u, _| u * u).with_density(
            (0.0, 1.0),
            |y| if y > 0.0 && y < 1.0 { 0.5 / y.sqrt() } else { 0.0 },
            |y| y.clamp(0.0, 1.0).sqrt(),
        ),
        "one_minus_exponential" => {
            DistributionSpec::from_quantile("one_minus_exponential", |u, v| 1.0 + ln_u(u, v)).with_density(
                (f64::NEG_INFINITY, 1.0),
                |x| if x < 1.0 { (x - 1.0).exp() } else { 0.0 },
                |x| if x < 1.0 { (x - 1.0).exp() } else { 1.0 },
            )
        }
        "normal" => {
            let mu = p.f64("mu", 0, Some(0.0))?;
            let sigma = p.f64("sigma", 1, Some(1.0))?;
            if !(sigma > 0.0) {
                return Err(Error::InvalidParams("normal needs sigma > 0".into()));
            }
            DistributionSpec::from_quantile(format!("normal({mu},{sigma})"), move |u, v| mu + sigma * normal_quantile_uv(u, v))
                .with_density(
                    (f64::NEG_INFINITY, f64::INFINITY),
                    move |x| normal_pdf((x - mu) / sigma) / sigma,
                    move |x| normal_cdf((x - mu) / sigma),
                )
        }
        other => return Err(Error::UnknownName(other.to_string())),
    };
    Ok(d)
}

fn logistic_pdf(x: f64) -> f64 {
    let e = (-x.abs()).exp();
    e / ((1.0 + e) * (1.0 + e))
}

fn logistic_cdf(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

// ---------------------------------------------------------------------------
// Tabulated quantiles

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Endpoint {
    /// Held constant beyond the table.
    Finite,
    /// Q ≈ a + b·log(u) near 0 (log(1 − u) near 1).
    Log,
    /// Q ≈ a + b·u^e near 0 (a + b·(1 − u)^e near 1); e > −1.
    Power(f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TabulatedQuantile {
    pub points: Vec<(f64, f64)>,
    #[serde(default = "finite")]
    pub endpoint: Endpoint,
    #[serde(default)]
    pub lower: Option<Endpoint>,
    #[serde(default)]
    pub upper: Option<Endpoint>,
}

fn finite() -> Endpoint {
    Endpoint::Finite
}

fn endpoint_fn(e: Endpoint, t0: f64, q0: f64, t1: f64, q1: f64) -> Result<Box<dyn Fn(f64) -> f64 + Send + Sync>> {
    // t is the distance coordinate (u near 0, v near 1); t0 < t1 are the outermost points.
    Ok(match e {
        Endpoint::Finite => Box::new(move |_| q0),
        Endpoint::Log => {
            let b = (q1 - q0) / (t1 / t0).ln();
            Box::new(move |t| q0 + b * (t / t0).ln())
        }
        Endpoint::Power(p) => {
            if p <= -1.0 {
                return Err(Error::NonIntegrable(format!("endpoint exponent {p} <= -1")));
            }
            if p == 0.0 {
                return Err(Error::InvalidParams("endpoint exponent must be non-zero".into()));
            }
            let b = (q1 - q0) / (t1.powf(p) - t0.powf(p));
            Box::new(move |t| q0 + b * (t.powf(p) - t0.powf(p)))
        }
    })
}

/// Builds a distribution from a monotone (u, Q(u)) table with linear interpolation.
pub fn tabulated(table: &TabulatedQuantile) -> Result<DistributionSpec> {
    let pts = table.points.clone();
    if pts.len() < 2 {
        return Err(Error::Parse("tabulated quantile needs at least two points".into()));
    }
    for w in pts.windows(2) {
        if !(w[1].0 > w[0].0) {
            return Err(Error::Parse("tabulated u values must be strictly increasing".into()));
        }
        if w[1].1 < w[0].1 {
            return Err(Error::InvalidParams(format!("tabulated quantile decreases at u = {}", w[1].0)));
        }
    }
    let (u_first, u_last) = (pts[0].0, pts[pts.len() - 1].0);
    if !(u_first >= 0.0 && u_last <= 1.0) || pts.iter().any(|p| !p.1.is_finite()) {
        return Err(Error::Parse("tabulated points must lie in [0,1] with finite values".into()));
    }
    let lower = table.lower.unwrap_or(table.endpoint);
    let upper = table.upper.unwrap_or(table.endpoint);
    let n = pts.len();
    let low: Option<Box<dyn Fn(f64) -> f64 + Send + Sync>> = if u_first > 0.0 {
        Some(endpoint_fn(lower, u_first, pts[0].1, pts[1].0, pts[1].1)?)
    } else {
        None
    };
    let high: Option<Box<dyn Fn(f64) -> f64 + Send + Sync>> = if u_last < 1.0 {
        Some(endpoint_fn(upper, 1.0 - u_last, pts[n - 1].1, 1.0 - pts[n - 2].0, pts[n - 2].1)?)
    } else {
        None
    };
    let grid = pts.clone();
    let q = move |u: f64, v: f64| {
        if u < u_first {
            return low.as_ref().map_or(grid[0].1, |f| f(u));
        }
        if u > u_last {
            return high.as_ref().map_or(grid[n - 1].1, |f| f(v));
        }
        let i = grid.partition_point(|p| p.0 < u).clamp(1, n - 1);
        let (a, b) = (grid[i - 1], grid[i]);
        a.1 + (b.1 - a.1) * (u - a.0) / (b.0 - a.0)
    };
    let spacing = pts.windows(2).map(|w| w[1].0 - w[0].0).fold(0.0, f64::max);
    let d = DistributionSpec::from_quantile("custom", q).with_caveat(format!(
        "tabulated quantile: results carry linear-interpolation error; largest grid spacing {spacing:e}"
    ));
    validate(&d)?;
    Ok(d)
}
