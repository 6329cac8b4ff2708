//! Discrete uniform approximants built from a candidate expected-maxima
//! sequence, their expected maxima, and the Stirling-type sums S(s, m).

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seqcheck::{Mode, Sequence};
use crate::special::{binomial, to_f64};

/// The array β_{1,n} < ... < β_{n,n} at one level n.
#[derive(Debug, Clone, PartialEq)]
pub struct HoeffdingTable {
    pub n: usize,
    /// Exact betas; for float sources these are exact for the f64 inputs.
    pub betas: Vec<BigRational>,
    pub exact: bool,
    /// Float input at a level where the alternating sums amplify rounding badly.
    pub precision_loss: bool,
}

impl HoeffdingTable {
    pub fn betas_f64(&self) -> Vec<f64> {
        self.betas.iter().map(to_f64).collect()
    }

    /// First index i with β_{i+1} ≤ β_i, if any (1-based).
    pub fn first_non_increase(&self) -> Option<usize> {
        self.betas.windows(2).position(|w| w[1] <= w[0]).map(|p| p + 1)
    }

    /// Rows (i, numerator, denominator, float) for tabular export.
    pub fn rows(&self) -> Vec<(usize, String, String, f64)> {
        self.betas
            .iter()
            .enumerate()
            .map(|(i, b)| (i + 1, b.numer().to_string(), b.denom().to_string(), to_f64(b)))
            .collect()
    }
}

fn exact_terms(seq: &Sequence) -> Vec<BigRational> {
    match seq.rationals() {
        Some(v) => v.to_vec(),
        None => seq
            .to_f64_vec()
            .into_iter()
            .map(|x| BigRational::from_float(x).unwrap_or_else(BigRational::zero))
            .collect(),
    }
}

fn level_betas(mu: &[BigRational], n: usize) -> Vec<BigRational> {
    // a_m = μ_m / m
    let a: Vec<BigRational> = mu[..n]
        .iter()
        .enumerate()
        .map(|(i, x)| x / BigInt::from(i as u64 + 1))
        .collect();
    (1..=n)
        .into_par_iter()
        .map(|i| {
            let mut sum = BigRational::zero();
            for j in 0..=(n - i) {
                let term = &a[i + j - 1] * binomial((n - i) as u64, j as u64);
                if j % 2 == 0 {
                    sum += term;
                } else {
                    sum -= term;
                }
            }
            sum * (binomial(n as u64 - 1, i as u64 - 1) * BigInt::from(n as u64))
        })
        .collect()
}

/// β_{i,n} = n!/((i−1)!(n−i)!) Σ_{j=0}^{n−i} C(n−i,j) (−1)^j μ_{i+j}/(i+j).
pub fn beta_table(seq: &Sequence, n: usize) -> Result<HoeffdingTable> {
    if n == 0 || n > seq.len() {
        return Err(Error::IndexOutOfRange { needed: n.max(1), len: seq.len() });
    }
    let mu = exact_terms(seq);
    Ok(HoeffdingTable {
        n,
        betas: level_betas(&mu, n),
        exact: seq.mode() == Mode::Exact,
        precision_loss: seq.mode() != Mode::Exact && n > 20,
    })
}

/// μ_k(X_n) = Σ_i β_{i,n} [(i/n)^k − ((i−1)/n)^k].
pub fn discrete_expected_max(table: &HoeffdingTable, k: usize) -> BigRational {
    let n = BigInt::from(table.n as u64);
    let mut sum = BigRational::zero();
    let mut prev = BigInt::zero();
    for (idx, beta) in table.betas.iter().enumerate() {
        let cur = BigInt::from(idx as u64 + 1).pow(k as u32);
        sum += beta * (&cur - &prev);
        prev = cur;
    }
    sum / n.pow(k as u32)
}

/// S(s, m) = Σ_{i=0}^{s−1} (−1)^{s−1−i} C(s−1, i) i^m, with 0^0 = 1.
pub fn stirling_sum(s: usize, m: usize) -> BigInt {
    assert!(s >= 1, "stirling_sum needs s >= 1");
    let mut sum = BigInt::zero();
    for i in 0..s {
        let power = if m == 0 { BigInt::one() } else { BigInt::from(i as u64).pow(m as u32) };
        let term = binomial(s as u64 - 1, i as u64) * power;
        if (s - 1 - i) % 2 == 0 {
            sum += term;
        } else {
            sum -= term;
        }
    }
    sum
}

/// μ_k(X_n) through Σ_{s=1}^k (Σ_{m=s−1}^{k−1} C(k,m) S(s,m)) C(n,s) μ_s / n^k, for n ≥ k.
pub fn finite_n_expected_max(seq: &Sequence, n: usize, k: usize) -> Result<BigRational> {
    if k == 0 || k > n || k > seq.len() {
        return Err(Error::InvalidParams(format!("need 1 <= k <= n and k <= K (k = {k}, n = {n})")));
    }
    let mu = exact_terms(seq);
    let mut sum = BigRational::zero();
    for s in 1..=k {
        let mut coeff = BigInt::zero();
        for m in (s - 1)..k {
            coeff += binomial(k as u64, m as u64) * stirling_sum(s, m);
        }
        sum += &mu[s - 1] * (coeff * binomial(n as u64, s as u64));
    }
    Ok(sum / BigInt::from(n as u64).pow(k as u32))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelErrors {
    pub k: usize,
    /// |μ_k(X_n) − μ_k| per level, in the order of `levels`.
    pub errors: Vec<f64>,
    pub monotone_decay: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceReport {
    pub levels: Vec<usize>,
    pub k_max: usize,
    pub errors: Vec<LevelErrors>,
    /// Empirical CDF of X_n at the largest level: (β_i, i/n).
    pub ecdf: Vec<(f64, f64)>,
    pub precision_loss: bool,
}

pub const DEFAULT_LEVELS: [usize; 5] = [10, 20, 50, 100, 200];

/// Errors |μ_k(X_n) − μ_k| across levels, with the weak-limit CDF at the largest level.
pub fn convergence_diagnostic(seq: &Sequence, levels: Option<&[usize]>, k_max: usize) -> Result<ConvergenceReport> {
    let requested: Vec<usize> = levels.map_or_else(|| DEFAULT_LEVELS.to_vec(), <[usize]>::to_vec);
    let mut levels: Vec<usize> = requested.into_iter().filter(|&n| n >= 1 && n <= seq.len()).collect();
    levels.sort_unstable();
    levels.dedup();
    if levels.is_empty() {
        levels.push(seq.len());
    }
    let k_max = k_max.max(1).min(seq.len());
    let tables: Vec<HoeffdingTable> = levels
        .iter()
        .map(|&n| beta_table(seq, n))
        .collect::<Result<_>>()?;
    for t in &tables {
        if let Some(i) = t.first_non_increase() {
            return Err(Error::ConstructionInvalid { n: t.n, i, next: i + 1 });
        }
    }
    let mu = exact_terms(seq);
    let errors = (1..=k_max)
        .into_par_iter()
        .map(|k| {
            let errs: Vec<f64> = tables
                .iter()
                .map(|t| to_f64(&(discrete_expected_max(t, k) - &mu[k - 1]).abs()))
                .collect();
            let monotone_decay = errs.windows(2).all(|w| w[1] <= w[0]);
            LevelErrors { k, errors: errs, monotone_decay }
        })
        .collect();
    let last = tables.last().expect("at least one level");
    let n = last.n as f64;
    let ecdf = last.betas_f64().into_iter().enumerate().map(|(i, b)| (b, (i + 1) as f64 / n)).collect();
    Ok(ConvergenceReport {
        precision_loss: tables.iter().any(|t| t.precision_loss),
        levels,
        k_max,
        errors,
        ecdf,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::special::{factorial, rational};

    fn example_21(len: usize) -> Sequence {
        Sequence::from_fn_exact(len, |k| rational(k as i64, 1) - rational(1, k as i64 + 1))
    }

    #[test]
    fn betas_of_example_sequence() {
        let t = beta_table(&example_21(10), 4).unwrap();
        assert_eq!(t.betas, vec![rational(-4, 5), rational(-3, 5), rational(-2, 5), rational(19, 5)]);
        assert_eq!(discrete_expected_max(&t, 1), rational(1, 2));
    }

    #[test]
    fn betas_of_shifted_uniform() {
        let seq = Sequence::from_fn_exact(10, |k| rational(k as i64, k as i64 + 1) - rational((k == 1) as i64, 1));
        let t = beta_table(&seq, 3).unwrap();
        assert_eq!(t.betas, vec![rational(-11, 4), rational(1, 2), rational(3, 4)]);
    }

    #[test]
    fn single_level_is_the_mean() {
        let t = beta_table(&example_21(3), 1).unwrap();
        assert_eq!(t.betas, vec![rational(1, 2)]);
    }

    #[test]
    fn stirling_values() {
        assert_eq!(stirling_sum(5, 2), BigInt::zero());
        assert_eq!(stirling_sum(1, 0), BigInt::one());
        assert_eq!(stirling_sum(4, 3), factorial(3));
        assert_eq!(stirling_sum(3, 0), BigInt::zero());
    }

    #[test]
    fn finite_identity_matches_direct_sum() {
        let seq = example_21(12);
        for n in 1..=12 {
            let t = beta_table(&seq, n).unwrap();
            for k in 1..=n.min(5) {
                assert_eq!(finite_n_expected_max(&seq, n, k).unwrap(), discrete_expected_max(&t, k));
            }
        }
    }

    #[test]
    fn constant_sequence_is_invalid() {
        let seq = Sequence::from_fn_exact(12, |_| rational(1, 1));
        let e = convergence_diagnostic(&seq, Some(&[2]), 2).unwrap_err();
        assert!(matches!(e, Error::ConstructionInvalid { n: 2, i: 1, next: 2 }));
    }

    #[test]
    fn float_tables_flag_large_levels() {
        let seq = Sequence::from_fn(30, |k| k as f64 / (k as f64 + 1.0));
        assert!(beta_table(&seq, 25).unwrap().precision_loss);
        assert!(!beta_table(&seq, 10).unwrap().precision_loss);
    }
}
