//! Adaptive Gauss-Kronrod quadrature with geometric endpoint refinement.
//!
//! Integrals with endpoint singularities (at 0, at 1 of the unit interval, or
//! at 0 and infinity of the half line) are split into dyadic shells
//! `[t/2, t]` (resp. `[t, 2t]`); each shell is smooth on a logarithmic scale
//! and is handled by the adaptive 21-point Kronrod rule. Shell accumulation
//! stops once a geometric extrapolation of the remaining shells falls below
//! the tolerance, and reports divergence when the shell budget runs out.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadConfig {
    pub rel_tol: f64,
    pub abs_tol: f64,
    /// Subintervals per adaptive call.
    pub max_intervals: usize,
    /// Dyadic shells per endpoint.
    pub max_shells: usize,
}

impl Default for QuadConfig {
    fn default() -> Self {
        QuadConfig { rel_tol: 1e-10, abs_tol: 1e-14, max_intervals: 400, max_shells: 1000 }
    }
}

impl QuadConfig {
    pub fn with_rel_tol(mut self, rel_tol: f64) -> Self {
        self.rel_tol = rel_tol;
        self
    }

    pub fn with_abs_tol(mut self, abs_tol: f64) -> Self {
        self.abs_tol = abs_tol;
        self
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Integral {
    pub value: f64,
    pub error: f64,
    /// Final partition, reusable through [`apply_plan`].
    pub intervals: Vec<(f64, f64)>,
    pub converged: bool,
}

impl Integral {
    fn empty() -> Self {
        Integral { value: 0.0, error: 0.0, intervals: Vec::new(), converged: true }
    }

    fn absorb(&mut self, other: Integral) {
        self.value += other.value;
        self.error += other.error;
        self.intervals.extend(other.intervals);
        self.converged &= other.converged;
    }
}

/// Integration failed to settle; `region` names the offending end.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadFailure {
    pub region: String,
    pub partial: f64,
}

const XGK: [f64; 11] = [
    0.995_657_163_025_808_080_735_527_280_689_003,
    0.973_906_528_517_171_720_077_964_012_084_452,
    0.930_157_491_355_708_226_001_207_180_059_508,
    0.865_063_366_688_984_510_732_096_688_423_493,
    0.780_817_726_586_416_897_063_717_578_345_042,
    0.679_409_568_299_024_406_234_327_365_114_874,
    0.562_757_134_668_604_683_339_000_099_272_694,
    0.433_395_394_129_247_190_799_265_943_165_784,
    0.294_392_862_701_460_198_131_126_603_103_866,
    0.148_874_338_981_631_210_884_826_001_129_720,
    0.0,
];

const WGK: [f64; 11] = [
    0.011_694_638_867_371_874_278_064_396_062_192,
    0.032_558_162_307_964_727_478_818_972_459_390,
    0.054_755_896_574_351_996_031_381_300_244_580,
    0.075_039_674_810_919_952_767_043_140_916_190,
    0.093_125_454_583_697_605_535_065_465_083_366,
    0.109_387_158_802_297_641_899_210_590_325_805,
    0.123_491_976_262_065_851_077_208_620_162_281,
    0.134_709_217_311_473_325_928_054_001_771_707,
    0.142_775_938_577_060_080_797_094_273_138_717,
    0.147_739_104_901_338_491_374_841_515_972_068,
    0.149_445_554_002_916_905_664_936_468_389_821,
];

// Gauss weights for the odd Kronrod nodes XGK[1], XGK[3], ..., XGK[9].
const WG: [f64; 5] = [
    0.066_671_344_308_688_137_593_568_809_893_332,
    0.149_451_349_150_580_593_145_776_339_657_697,
    0.219_086_362_515_982_043_995_534_934_228_163,
    0.269_266_719_309_996_355_091_226_921_569_469,
    0.295_524_224_714_752_870_173_892_994_651_338,
];

/// One 21-point Gauss-Kronrod panel: (estimate, error estimate).
pub fn gk21<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut res_k = fc * WGK[10];
    let mut res_g = 0.0;
    let mut res_abs = (fc * WGK[10]).abs();
    let mut fv1 = [0.0; 10];
    let mut fv2 = [0.0; 10];
    for j in 0..10 {
        let dx = half * XGK[j];
        let f1 = f(center - dx);
        let f2 = f(center + dx);
        fv1[j] = f1;
        fv2[j] = f2;
        res_k += WGK[j] * (f1 + f2);
        res_abs += WGK[j] * (f1.abs() + f2.abs());
        if j % 2 == 1 {
            res_g += WG[j / 2] * (f1 + f2);
        }
    }
    let mean = res_k * 0.5;
    let mut res_asc = WGK[10] * (fc - mean).abs();
    for j in 0..10 {
        res_asc += WGK[j] * ((fv1[j] - mean).abs() + (fv2[j] - mean).abs());
    }
    let result = res_k * half;
    let res_abs = res_abs * half.abs();
    let res_asc = res_asc * half.abs();
    let mut err = ((res_k - res_g) * half).abs();
    if res_asc != 0.0 && err != 0.0 {
        err = res_asc * (200.0 * err / res_asc).powf(1.5).min(1.0);
    }
    if res_abs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        err = err.max(50.0 * f64::EPSILON * res_abs);
    }
    (result, err)
}

#[derive(Debug, Clone, Copy)]
struct Panel {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.error.total_cmp(&other.error) == Ordering::Equal
    }
}
impl Eq for Panel {}
impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Panel {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

/// Adaptive bisection on `[a, b]`, always splitting the panel with the largest error.
pub fn adaptive<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, cfg: &QuadConfig) -> Integral {
    if a == b {
        return Integral::empty();
    }
    let (value, error) = gk21(f, a, b);
    let mut heap = BinaryHeap::new();
    heap.push(Panel { a, b, value, error });
    let mut settled: Vec<Panel> = Vec::new();
    let mut total = value;
    let mut total_err = error;
    let target = |t: f64| cfg.abs_tol.max(cfg.rel_tol * t.abs());
    while total_err > target(total) && heap.len() + settled.len() < cfg.max_intervals {
        let Some(p) = heap.pop() else { break };
        let mid = 0.5 * (p.a + p.b);
        if mid <= p.a.min(p.b) || mid >= p.a.max(p.b) || (p.b - p.a).abs() < 1e-14 * p.a.abs().max(p.b.abs()) {
            settled.push(p);
            continue;
        }
        let (v1, e1) = gk21(f, p.a, mid);
        let (v2, e2) = gk21(f, mid, p.b);
        total += v1 + v2 - p.value;
        total_err += e1 + e2 - p.error;
        heap.push(Panel { a: p.a, b: mid, value: v1, error: e1 });
        heap.push(Panel { a: mid, b: p.b, value: v2, error: e2 });
    }
    let mut panels: Vec<Panel> = heap.into_vec();
    panels.extend(settled);
    panels.sort_by(|x, y| x.a.total_cmp(&y.a));
    // resum in order to avoid drift from the running updates
    let value: f64 = panels.iter().map(|p| p.value).sum();
    let error: f64 = panels.iter().map(|p| p.error).sum();
    Integral {
        value,
        error,
        intervals: panels.iter().map(|p| (p.a, p.b)).collect(),
        converged: error <= target(value),
    }
}

/// Applies the 21-point Kronrod rule on a fixed partition.
pub fn apply_plan<F: Fn(f64) -> f64>(intervals: &[(f64, f64)], f: &F) -> f64 {
    intervals.iter().map(|&(a, b)| gk21(f, a, b).0).sum()
}

// Accumulates shells produced by `shell(j)` until the geometric tail estimate is negligible.
fn shells<F, S>(f: &F, shell: S, cfg: &QuadConfig, region: &str) -> Result<Integral, QuadFailure>
where
    F: Fn(f64) -> f64,
    S: Fn(usize) -> (f64, f64),
{
    const MIN_SHELLS: usize = 8;
    let mut acc = Integral::empty();
    let mut history: [f64; 3] = [f64::NAN; 3];
    for j in 0..cfg.max_shells {
        let (a, b) = shell(j);
        if !(a.is_finite() && b.is_finite()) || a == b {
            break;
        }
        let local = QuadConfig {
            abs_tol: (cfg.abs_tol / 16.0).max(cfg.rel_tol * acc.value.abs() / 16.0),
            ..*cfg
        };
        let piece = adaptive(f, a, b, &local);
        let c = piece.value.abs();
        if !piece.value.is_finite() {
            return Err(QuadFailure { region: region.to_string(), partial: acc.value });
        }
        acc.absorb(piece);
        history = [history[1], history[2], c];
        if j + 1 < MIN_SHELLS {
            continue;
        }
        let tol = cfg.abs_tol.max(cfg.rel_tol * acc.value.abs());
        let [c0, c1, c2] = history;
        if c0 == 0.0 && c1 == 0.0 && c2 == 0.0 {
            return Ok(acc);
        }
        if c1 < 1e-5 * tol && c2 < 1e-5 * tol {
            return Ok(acc);
        }
        if c0 > 0.0 && c1 > 0.0 {
            let r = (c2 / c1).max(c1 / c0);
            if r < 0.95 {
                let tail = c2 * r / (1.0 - r);
                if tail <= 1e-4 * tol {
                    return Ok(acc);
                }
            }
        }
    }
    let last = history[2];
    let tol = cfg.abs_tol.max(cfg.rel_tol * acc.value.abs());
    if last.is_finite() && last <= tol {
        acc.converged = false;
        return Ok(acc);
    }
    Err(QuadFailure { region: region.to_string(), partial: acc.value })
}

/// ∫_0^top f(t) dt with refinement toward 0.
pub fn toward_zero<F: Fn(f64) -> f64>(f: &F, top: f64, cfg: &QuadConfig) -> Result<Integral, QuadFailure> {
    shells(
        f,
        |j| {
            let hi = top * (-(j as f64)).exp2();
            (hi * 0.5, hi)
        },
        cfg,
        "0",
    )
}

/// ∫_bottom^∞ f(t) dt with refinement toward infinity.
pub fn toward_infinity<F: Fn(f64) -> f64>(
    f: &F,
    bottom: f64,
    cfg: &QuadConfig,
) -> Result<Integral, QuadFailure> {
    shells(
        f,
        |j| {
            let lo = bottom * (j as f64).exp2();
            (lo, lo * 2.0)
        },
        cfg,
        "infinity",
    )
}

/// ∫_0^∞ f(t) dt.
pub fn half_line<F: Fn(f64) -> f64>(f: &F, cfg: &QuadConfig) -> Result<Integral, QuadFailure> {
    let mut near = toward_zero(f, 1.0, cfg)?;
    let far = toward_infinity(f, 1.0, cfg)?;
    near.absorb(far);
    Ok(near)
}

/// ∫_a^b f(t) dt for 0 < a < b, on a geometric partition a, 2a, 4a, ....
pub fn geometric<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, cfg: &QuadConfig) -> Integral {
    let mut acc = Integral::empty();
    if a >= b {
        return acc;
    }
    let mut lo = a;
    while lo < b {
        let hi = (lo * 2.0).min(b);
        let local = QuadConfig { abs_tol: cfg.abs_tol / 16.0, ..*cfg };
        acc.absorb(adaptive(f, lo, hi, &local));
        lo = hi;
    }
    acc
}

/// ∫_lo^hi f(u, 1-u) du for a subinterval of [0, 1]; `f` receives both `u` and
/// `v = 1 - u` so that behavior near u = 1 is resolved in the `v` coordinate.
pub fn unit_piece<F: Fn(f64, f64) -> f64>(
    f: &F,
    lo: f64,
    hi: f64,
    cfg: &QuadConfig,
) -> Result<Integral, QuadFailure> {
    let mut acc = Integral::empty();
    if hi <= lo {
        return Ok(acc);
    }
    if lo < 0.5 {
        let top = hi.min(0.5);
        let g = |t: f64| f(t, 1.0 - t);
        let part = if lo == 0.0 { toward_zero(&g, top, cfg)? } else { adaptive(&g, lo, top, cfg) };
        acc.absorb(part);
    }
    if hi > 0.5 {
        let bottom = lo.max(0.5);
        let v_top = 1.0 - bottom;
        let g = |t: f64| f(1.0 - t, t);
        let part = if hi >= 1.0 {
            toward_zero(&g, v_top, cfg).map_err(|e| QuadFailure { region: "1".into(), ..e })?
        } else {
            adaptive(&g, 1.0 - hi, v_top, cfg)
        };
        acc.absorb(part);
    }
    Ok(acc)
}
