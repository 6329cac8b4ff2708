//! Expected maxima and expected ranges sequences.
//!
//! Checks whether a real sequence can be the expected maxima (or expected
//! ranges) of an integrable random variable, and converts between sequences,
//! integral forms `g(x) = ∫ h1(y)(s(y) − e^{−xy}) dy`, Bernstein functions and
//! quantile functions.

pub mod cli;
pub mod dist;
pub mod error;
pub mod gif;
pub mod hiprec;
pub mod hoeffding;
pub mod io;
pub mod quad;
pub mod ranges;
pub mod report;
pub mod seqcheck;
pub mod special;

pub use error::{Error, Result};
pub use report::{CheckReport, Outcome, Verdict, Witness};
pub use seqcheck::{CheckConfig, Mode, Sequence};
