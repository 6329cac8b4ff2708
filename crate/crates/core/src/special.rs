//! Special functions and exact combinatorial helpers.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};

/// Euler's constant, 20 significant digits.
pub const EULER_GAMMA: f64 = 0.577_215_664_901_532_860_61;

const SQRT_2PI: f64 = 2.506_628_274_631_000_502_4;

pub fn gamma(x: f64) -> f64 {
    libm::tgamma(x)
}

pub fn ln_gamma(x: f64) -> f64 {
    libm::lgamma(x)
}

pub fn normal_pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / SQRT_2PI
}

pub fn normal_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x / std::f64::consts::SQRT_2)
}

/// Standard normal quantile for `p` in (0,1).
pub fn normal_quantile(p: f64) -> f64 {
    normal_quantile_uv(p, 1.0 - p)
}

/// Standard normal quantile at `u`, where `v = 1 - u` is supplied by the caller
/// so the upper tail keeps full relative precision.
pub fn normal_quantile_uv(u: f64, v: f64) -> f64 {
    if u <= 0.5 {
        lower_normal_quantile(u)
    } else {
        -lower_normal_quantile(v)
    }
}

// Acklam's rational approximation (|rel err| < 1.15e-9) followed by one Halley
// step against erfc. Valid for p in (0, 0.5].
fn lower_normal_quantile(p: f64) -> f64 {
    const A: [f64; 6] = [
        -3.969_683_028_665_376e1,
        2.209_460_984_245_205e2,
        -2.759_285_104_469_687e2,
        1.383_577_518_672_69e2,
        -3.066_479_806_614_716e1,
        2.506_628_277_459_239,
    ];
    const B: [f64; 5] = [
        -5.447_609_879_822_406e1,
        1.615_858_368_580_409e2,
        -1.556_989_798_598_866e2,
        6.680_131_188_771_972e1,
        -1.328_068_155_288_572e1,
    ];
    const C: [f64; 6] = [
        -7.784_894_002_430_293e-3,
        -3.223_964_580_411_365e-1,
        -2.400_758_277_161_838,
        -2.549_671_669_539_876,
        4.374_664_141_464_968,
        2.938_163_982_698_783,
    ];
    const D: [f64; 4] = [
        7.784_695_709_041_462e-3,
        3.224_671_290_700_398e-1,
        2.445_134_137_142_996,
        3.754_408_661_907_416,
    ];
    const P_LOW: f64 = 0.02425;

    if p <= 0.0 {
        return f64::NEG_INFINITY;
    }
    let x = if p < P_LOW {
        let q = (-2.0 * p.ln()).sqrt();
        (((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    } else {
        let q = p - 0.5;
        let r = q * q;
        (((((A[0] * r + A[1]) * r + A[2]) * r + A[3]) * r + A[4]) * r + A[5]) * q
            / (((((B[0] * r + B[1]) * r + B[2]) * r + B[3]) * r + B[4]) * r + 1.0)
    };
    let density = normal_pdf(x);
    if density <= 0.0 || !density.is_finite() {
        return x;
    }
    let e = normal_cdf(x) - p;
    let u = e / density;
    x - u / (1.0 + 0.5 * x * u)
}

pub fn factorial(n: u64) -> BigInt {
    (2..=n).fold(BigInt::one(), |acc, k| acc * k)
}

/// Binomial coefficient C(n, k) as an exact integer.
pub fn binomial(n: u64, k: u64) -> BigInt {
    if k > n {
        return BigInt::zero();
    }
    let k = k.min(n - k);
    let mut acc = BigInt::one();
    for i in 0..k {
        acc = acc * (n - i) / (i + 1);
    }
    acc
}

/// Binomial coefficient as f64 (exact while it stays below 2^53).
pub fn binomial_f64(n: u64, k: u64) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    let mut acc = 1.0f64;
    for i in 0..k {
        acc = acc * (n - i) as f64 / (i + 1) as f64;
    }
    acc.round()
}

/// H(n) = 1 + 1/2 + ... + 1/n as an exact rational; H(0) = 0.
pub fn harmonic_exact(n: u64) -> BigRational {
    (1..=n).fold(BigRational::zero(), |acc, j| {
        acc + BigRational::new(BigInt::one(), BigInt::from(j))
    })
}

/// Generalized harmonic number 1 + 1/2^p + ... + 1/n^p for a positive integer power.
pub fn gen_harmonic_exact(n: u64, p: u32) -> BigRational {
    (1..=n).fold(BigRational::zero(), |acc, j| {
        acc + BigRational::new(BigInt::one(), BigInt::from(j).pow(p))
    })
}

pub fn rational(num: i64, den: i64) -> BigRational {
    BigRational::new(BigInt::from(num), BigInt::from(den))
}

pub fn to_f64(r: &BigRational) -> f64 {
    use num_traits::ToPrimitive;
    r.to_f64().unwrap_or_else(|| {
        // numerator and denominator overflow f64 separately; scale them down
        let n_bits = r.numer().bits() as i64;
        let d_bits = r.denom().bits() as i64;
        let shift = (n_bits.max(d_bits) - 1000).max(0) as usize;
        let n = (r.numer() >> shift).to_f64().unwrap_or(0.0);
        let d = (r.denom() >> shift).to_f64().unwrap_or(f64::INFINITY);
        n / d
    })
}

/// Parses a decimal literal such as `-12.5e-3` into an exact rational.
pub fn decimal_rational(text: &str) -> Option<BigRational> {
    let text = text.trim();
    let (mantissa, exponent) = match text.find(['e', 'E']) {
        Some(i) => (&text[..i], text[i + 1..].parse::<i32>().ok()?),
        None => (text, 0),
    };
    let (negative, digits) = match mantissa.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, mantissa.strip_prefix('+').unwrap_or(mantissa)),
    };
    let (int_part, frac_part) = match digits.find('.') {
        Some(i) => (&digits[..i], &digits[i + 1..]),
        None => (digits, ""),
    };
    if int_part.is_empty() && frac_part.is_empty() {
        return None;
    }
    if !int_part.chars().chain(frac_part.chars()).all(|c| c.is_ascii_digit()) {
        return None;
    }
    let all = format!("{int_part}{frac_part}");
    let mut num: BigInt = if all.is_empty() { BigInt::zero() } else { all.parse().ok()? };
    if negative {
        num = -num;
    }
    let scale = exponent - frac_part.len() as i32;
    let ten = BigInt::from(10);
    Some(if scale >= 0 {
        BigRational::from_integer(num * ten.pow(scale as u32))
    } else {
        BigRational::new(num, ten.pow((-scale) as u32))
    })
}

/// The shortest decimal that round-trips to `x`, as an exact rational.
pub fn shortest_decimal_rational(x: f64) -> Option<BigRational> {
    if !x.is_finite() {
        return None;
    }
    decimal_rational(&format!("{x:e}"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gamma_half_is_sqrt_pi() {
        let rel = (gamma(0.5) - std::f64::consts::PI.sqrt()).abs() / std::f64::consts::PI.sqrt();
        assert!(rel < 1e-14);
        assert!((ln_gamma(10.0) - 362_880f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn normal_quantile_inverts_cdf() {
        for &p in &[1e-300, 1e-20, 1e-5, 0.01, 0.2, 0.5] {
            let x = normal_quantile(p);
            assert!((normal_cdf(x) - p).abs() <= 1e-12 * p, "p = {p}");
        }
        assert!((normal_quantile(0.975) - 1.959_963_984_540_054).abs() < 1e-14);
        assert_eq!(normal_quantile(0.5), 0.0);
    }

    #[test]
    fn upper_tail_uses_complement() {
        let v = 1e-30;
        let x = normal_quantile_uv(1.0 - v, v);
        assert!((x + normal_quantile(v)).abs() < 1e-12);
        assert!(x > 11.0);
    }

    #[test]
    fn exact_helpers() {
        assert_eq!(binomial(40, 20), BigInt::from(137_846_528_820u64));
        assert_eq!(binomial_f64(40, 20), 137_846_528_820.0);
        assert_eq!(factorial(6), BigInt::from(720));
        assert_eq!(harmonic_exact(6), rational(49, 20));
        assert_eq!(gen_harmonic_exact(3, 2), rational(49, 36));
    }

    #[test]
    fn decimal_parsing() {
        assert_eq!(decimal_rational("0.1"), Some(rational(1, 10)));
        assert_eq!(decimal_rational("-12.5e-3"), Some(rational(-1, 80)));
        assert_eq!(decimal_rational("3E2"), Some(rational(300, 1)));
        assert_eq!(decimal_rational("abc"), None);
        assert_eq!(shortest_decimal_rational(0.3), Some(rational(3, 10)));
        assert_eq!(shortest_decimal_rational(1.0 / 3.0).map(|r| to_f64(&r)), Some(1.0 / 3.0));
    }
}
