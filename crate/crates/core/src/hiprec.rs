//! Fixed-point logarithms and square roots returned as dyadic rationals.
//!
//! Used to feed transcendental sequences such as `(log k)^θ` into exact-rational
//! mode; high-order differences of such sequences fall far below f64 resolution.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};

const GUARD_BITS: u32 = 32;

// atanh(num/den) scaled by 2^bits, for 0 <= num/den <= 1/3.
fn atanh_scaled(num: &BigInt, den: &BigInt, bits: u32) -> BigInt {
    let z: BigInt = (num << bits) / den;
    let z2: BigInt = (&z * &z) >> bits;
    let mut term = z;
    let mut sum = BigInt::zero();
    let mut n: u64 = 0;
    loop {
        let t = &term / (2 * n + 1);
        if t.is_zero() {
            break;
        }
        sum += t;
        term = (&term * &z2) >> bits;
        n += 1;
    }
    sum
}

fn ln_scaled(k: u64, bits: u32) -> BigInt {
    assert!(k >= 1, "log of zero");
    let m = 63 - k.leading_zeros();
    let base = BigInt::from(1u64 << m);
    let k_big = BigInt::from(k);
    let ln2 = atanh_scaled(&BigInt::one(), &BigInt::from(3), bits) * 2;
    let frac = atanh_scaled(&(&k_big - &base), &(&k_big + &base), bits) * 2;
    ln2 * m + frac
}

fn dyadic(m: BigInt, bits: u32) -> BigRational {
    BigRational::new(m, BigInt::one() << bits)
}

/// ln(k) to within 2^-bits.
pub fn ln(k: u64, bits: u32) -> BigRational {
    let work = bits + GUARD_BITS;
    dyadic(ln_scaled(k, work) >> GUARD_BITS, bits)
}

/// sqrt(x) for x >= 0, truncated to `bits` fractional bits.
pub fn sqrt(x: &BigRational, bits: u32) -> BigRational {
    let scaled: BigInt = (x.numer() << (2 * bits)) / x.denom();
    dyadic(scaled.sqrt(), bits)
}

/// Rounds a rational to `bits` fractional bits.
pub fn truncate(x: &BigRational, bits: u32) -> BigRational {
    dyadic((x.numer() << bits) / x.denom(), bits)
}

/// (ln k)^(n/2) to roughly 2^-bits relative accuracy.
pub fn ln_pow_half(k: u64, n: u32, bits: u32) -> BigRational {
    let work = bits + GUARD_BITS;
    let root = sqrt(&ln(k, work), work);
    let mut acc = BigRational::one();
    for _ in 0..n {
        acc = truncate(&(acc * &root), work);
    }
    truncate(&acc, bits)
}
