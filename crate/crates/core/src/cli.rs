//! The `ems` command line: reads sequences, distributions and kernels, runs a
//! check or builds a table, and writes JSON or CSV.
//!
//! Exit status: 0 when every verdict passes, 1 on any failure, 2 when the
//! worst verdict is inconclusive, 64 on malformed input or usage.

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::dist::{self, DistributionSpec};
use crate::error::{Error, Result};
use crate::gif;
use crate::hoeffding;
use crate::io::{self, Grid};
use crate::quad::QuadConfig;
use crate::ranges::{self, RangesConfig};
use crate::report::{CheckReport, Outcome};
use crate::seqcheck::{self, CheckConfig, Mode};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAIL: i32 = 1;
pub const EXIT_INCONCLUSIVE: i32 = 2;
pub const EXIT_USAGE: i32 = 64;

#[derive(Debug, Parser)]
#[command(name = "ems", version, about = "Expected maxima and expected ranges sequences")]
pub struct Cli {
    #[command(flatten)]
    pub run: RunConfig,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct RunConfig {
    /// Largest s + k examined by sequence checks (default: 40 float, 80 extended, K exact)
    #[arg(long, global = true)]
    pub depth: Option<usize>,
    /// Exact rational arithmetic; floats enter through their shortest decimal
    #[arg(long, global = true)]
    pub exact: bool,
    /// Exact accumulation of float inputs
    #[arg(long, global = true, conflicts_with = "exact")]
    pub extended: bool,
    /// Relative tolerance (input uncertainty for sequence checks, quadrature otherwise)
    #[arg(long, global = true)]
    pub tol_rel: Option<f64>,
    /// Absolute tolerance
    #[arg(long, global = true)]
    pub tol_abs: Option<f64>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    pub format: Format,
    /// Output file (default: stdout)
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Point count or comma-separated list of points
    #[arg(long, global = true)]
    pub grid: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check whether a sequence can be the expected maxima of a random variable
    CheckEms {
        /// Sequence as JSON/CSV file, `-` for stdin, or inline JSON
        input: String,
    },
    /// Check whether a sequence can be the expected ranges of a random variable
    CheckErs {
        input: String,
        /// Also check seq/2 as expected maxima and compare verdicts
        #[arg(long)]
        bridge: bool,
    },
    /// Expected maxima, minima and ranges of a catalog distribution
    Moments {
        /// Catalog id, or `custom` with --table
        dist: String,
        #[arg(long, allow_hyphen_values = true)]
        params: Option<String>,
        /// Tabulated quantile (JSON) for `custom`
        #[arg(long)]
        table: Option<String>,
        #[arg(long, default_value_t = 10)]
        k_max: usize,
        /// Use the symmetric distribution with the same expected ranges
        #[arg(long)]
        symmetrize: bool,
    },
    /// Hoeffding beta table at one level, or the convergence diagnostic across levels
    Hoeffding {
        input: String,
        /// Single level: emit the beta table
        #[arg(long)]
        n: Option<usize>,
        /// Levels for the convergence diagnostic (default 10,20,50,100,200)
        #[arg(long, value_delimiter = ',')]
        levels: Vec<usize>,
        #[arg(long, default_value_t = 5)]
        k_max: usize,
    },
    /// Quantile function G(u) rebuilt from an integral form
    Reconstruct {
        /// Form id, or `custom` with --table
        form: String,
        #[arg(long, allow_hyphen_values = true)]
        params: Option<String>,
        #[arg(long)]
        table: Option<String>,
        /// Expected value of the reconstructed variable
        #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
        mu1: f64,
        /// Expected maxima compared against the form in the round-trip summary
        #[arg(long, default_value_t = 4)]
        k_max: usize,
    },
    /// Kernel h1(y) of the integral form of a distribution
    ForwardH1 {
        dist: String,
        #[arg(long, allow_hyphen_values = true)]
        params: Option<String>,
        #[arg(long)]
        table: Option<String>,
    },
    /// Symmetry criterion h1(−log(1 − e^{−y})) = (e^y − 1) h1(y)
    Symmetry {
        form: String,
        #[arg(long, allow_hyphen_values = true)]
        params: Option<String>,
        #[arg(long)]
        table: Option<String>,
    },
    /// Whether two distributions have the same expected ranges
    CompareRanges {
        a: String,
        b: String,
        #[arg(long, allow_hyphen_values = true)]
        params_a: Option<String>,
        #[arg(long, allow_hyphen_values = true)]
        params_b: Option<String>,
        #[arg(long)]
        table_a: Option<String>,
        #[arg(long)]
        table_b: Option<String>,
    },
    /// List catalog distributions and built-in forms
    Catalog,
    /// Table of S(s, m) = Σ_i (−1)^{s−1−i} C(s−1, i) i^m
    Stirling {
        #[arg(long, default_value_t = 10)]
        s_max: usize,
        #[arg(long)]
        m_max: Option<usize>,
    },
}

/// Exit status for an error.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::IndexOutOfRange { .. }
        | Error::SequenceTooShort { .. }
        | Error::UnknownName(_)
        | Error::InvalidParams(_)
        | Error::Parse(_)
        | Error::Io(_) => EXIT_USAGE,
        Error::NonIntegrable(_)
        | Error::DivergentIntegral { .. }
        | Error::ClassFViolation(_)
        | Error::PositivityViolation(_)
        | Error::DivergentMean(_)
        | Error::ConstructionInvalid { .. } => EXIT_FAIL,
    }
}

pub fn outcome_code(o: Outcome) -> i32 {
    match o {
        Outcome::AllPass => EXIT_OK,
        Outcome::AnyFail => EXIT_FAIL,
        Outcome::Inconclusive => EXIT_INCONCLUSIVE,
    }
}

/// Parses arguments and runs; returns the exit status.
pub fn main_with_args<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if e.use_stderr() { stderr.write_all(text.as_bytes()) } else { stdout.write_all(text.as_bytes()) };
            return code;
        }
    };
    match run(&cli, stdout, stderr) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(stderr, "ems: {e}");
            exit_code(&e)
        }
    }
}

struct Output {
    text: String,
    code: i32,
    /// Extra summary printed to stderr with CSV output.
    summary: Option<String>,
}

pub fn run(cli: &Cli, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<i32> {
    let cfg = &cli.run;
    validate(cfg)?;
    let out = dispatch(&cli.command, cfg)?;
    match &cfg.out {
        Some(path) => std::fs::write(path, &out.text).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?,
        None => stdout.write_all(out.text.as_bytes())?,
    }
    if let Some(s) = out.summary {
        writeln!(stderr, "{s}")?;
    }
    Ok(out.code)
}

fn validate(cfg: &RunConfig) -> Result<()> {
    for (name, v) in [("--tol-rel", cfg.tol_rel), ("--tol-abs", cfg.tol_abs)] {
        if let Some(t) = v {
            if !(t > 0.0 && t.is_finite()) {
                return Err(Error::InvalidParams(format!("{name} must be positive")));
            }
        }
    }
    if cfg.depth.is_some_and(|d| d < 2) {
        return Err(Error::InvalidParams("--depth must be at least 2".into()));
    }
    Ok(())
}

fn mode(cfg: &RunConfig) -> Option<Mode> {
    if cfg.exact {
        Some(Mode::Exact)
    } else if cfg.extended {
        Some(Mode::ExtendedFloat)
    } else {
        None
    }
}

fn check_config(cfg: &RunConfig) -> CheckConfig {
    CheckConfig {
        max_depth: cfg.depth,
        tol_rel: cfg.tol_rel.unwrap_or(0.0),
        tol_abs: cfg.tol_abs.unwrap_or(0.0),
        ..CheckConfig::default()
    }
}

fn quad_config(cfg: &RunConfig) -> QuadConfig {
    let mut q = QuadConfig::default();
    if let Some(t) = cfg.tol_rel {
        q = q.with_rel_tol(t);
    }
    if let Some(t) = cfg.tol_abs {
        q = q.with_abs_tol(t);
    }
    q
}

fn grid(cfg: &RunConfig) -> Result<Option<Grid>> {
    cfg.grid.as_deref().map(io::parse_grid).transpose()
}

fn json<T: Serialize>(v: &T) -> Result<String> {
    Ok(serde_json::to_string_pretty(v)? + "\n")
}

#[derive(Serialize)]
struct ReportRow<'a> {
    condition: &'a str,
    entry: &'a str,
    s: Option<usize>,
    k: Option<usize>,
    at: Option<f64>,
    value: Option<f64>,
}

/// One row per verdict, then one row per witness.
pub fn report_csv(r: &CheckReport) -> Result<String> {
    let mut rows: Vec<ReportRow> = r
        .verdicts
        .iter()
        .map(|(c, v)| ReportRow { condition: c, entry: v.as_str(), s: None, k: None, at: None, value: None })
        .collect();
    rows.extend(r.witnesses.iter().map(|w| ReportRow {
        condition: &w.condition,
        entry: "witness",
        s: w.s,
        k: Some(w.k),
        at: w.at,
        value: Some(w.value),
    }));
    io::to_csv(&rows)
}

fn report_output(r: &CheckReport, cfg: &RunConfig) -> Result<Output> {
    let text = match cfg.format {
        Format::Json => r.to_json() + "\n",
        Format::Csv => report_csv(r)?,
    };
    Ok(Output { text, code: outcome_code(r.outcome()), summary: None })
}

fn table<T: Serialize>(rows: &[T], cfg: &RunConfig) -> Result<String> {
    match cfg.format {
        Format::Json => json(&rows),
        Format::Csv => io::to_csv(rows),
    }
}

fn distribution(id: &str, params: Option<&str>, table: Option<&str>) -> Result<DistributionSpec> {
    io::distribution(id, &io::parse_params(params)?, table)
}

fn form(id: &str, params: Option<&str>, table: Option<&str>) -> Result<gif::IntegralForm> {
    io::form(id, &io::parse_params(params)?, table)
}

fn dispatch(cmd: &Command, cfg: &RunConfig) -> Result<Output> {
    match cmd {
        Command::CheckEms { input } => {
            let seq = io::in_mode(io::parse_sequence(&io::read_source(input)?)?, mode(cfg))?;
            let cc = check_config(cfg);
            let mut report = seqcheck::check_ems(&seq, &cc)?;
            let order = report.truncation.max_depth.saturating_sub(2);
            report.merge(seqcheck::check_kadane(&seq, order, &cc)?);
            report_output(&report, cfg)
        }
        Command::CheckErs { input, bridge } => {
            let seq = io::in_mode(io::parse_sequence(&io::read_source(input)?)?, mode(cfg))?;
            let cc = check_config(cfg);
            let report = if *bridge { ranges::ems_to_ers_bridge(&seq, &cc)? } else { seqcheck::check_ers(&seq, &cc)? };
            report_output(&report, cfg)
        }
        Command::Moments { dist: id, params, table: t, k_max, symmetrize } => {
            let mut d = distribution(id, params.as_deref(), t.as_deref())?;
            if *symmetrize {
                d = ranges::symmetrize(&d);
            }
            if *k_max == 0 {
                return Err(Error::InvalidParams("--k-max must be at least 1".into()));
            }
            let rows = dist::moments_table(&d, *k_max, &quad_config(cfg))?;
            Ok(Output { text: table(&rows, cfg)?, code: EXIT_OK, summary: None })
        }
        Command::Hoeffding { input, n, levels, k_max } => {
            let seq = io::in_mode(io::parse_sequence(&io::read_source(input)?)?, mode(cfg))?;
            hoeffding_output(&seq, *n, levels, *k_max, cfg)
        }
        Command::Reconstruct { form: id, params, table: t, mu1, k_max } => {
            let f = form(id, params.as_deref(), t.as_deref())?;
            reconstruct_output(&f, *mu1, *k_max, cfg)
        }
        Command::ForwardH1 { dist: id, params, table: t } => {
            let d = distribution(id, params.as_deref(), t.as_deref())?;
            let f = gif::h1_from_distribution(&d)?;
            let ys = grid(cfg)?.map_or_else(ranges::default_y_grid, |g| g.log_spaced(1e-6, 40.0));
            let rows: Vec<H1Row> = ys.iter().map(|&y| H1Row { y, h1: f.h1(y) }).collect();
            let text = match cfg.format {
                Format::Csv => io::to_csv(&rows)?,
                Format::Json => json(&serde_json::json!({
                    "label": f.label,
                    "lambda": f.lambda,
                    "singularity_at_zero": f.singularity_at_zero,
                    "offset": f.offset,
                    "points": rows,
                }))?,
            };
            Ok(Output { text, code: EXIT_OK, summary: None })
        }
        Command::Symmetry { form: id, params, table: t } => {
            let f = form(id, params.as_deref(), t.as_deref())?;
            let ys = grid(cfg)?.map_or_else(ranges::default_y_grid, |g| g.log_spaced(1e-6, 40.0));
            report_output(&ranges::symmetry_condition_4_6(&f, &ys)?, cfg)
        }
        Command::CompareRanges { a, b, params_a, params_b, table_a, table_b } => {
            let da = distribution(a, params_a.as_deref(), table_a.as_deref())?;
            let db = distribution(b, params_b.as_deref(), table_b.as_deref())?;
            let mut rc = RangesConfig::default();
            if let Some(t) = cfg.tol_rel {
                rc.tol_rel = t;
            }
            if let Some(t) = cfg.tol_abs {
                rc.tol_abs = t;
            }
            if let Some(d) = cfg.depth {
                rc.k_max = d;
            }
            let us = grid(cfg)?.map_or_else(ranges::default_u_grid, |g| g.unit());
            report_output(&ranges::equal_ranges_check(&da, &db, &us, &rc)?, cfg)
        }
        Command::Catalog => {
            let mut rows: Vec<CatalogRow> = dist::entries()
                .into_iter()
                .map(|e| CatalogRow { kind: "distribution", id: e.id, params: e.params, description: e.description })
                .collect();
            rows.extend(gif::form_entries().into_iter().map(|e| CatalogRow { kind: "form", id: e.id, params: e.params, description: e.description }));
            Ok(Output { text: table(&rows, cfg)?, code: EXIT_OK, summary: None })
        }
        Command::Stirling { s_max, m_max } => {
            let m_max = m_max.unwrap_or(*s_max);
            let mut rows = Vec::new();
            for s in 1..=*s_max {
                for m in 0..=m_max {
                    rows.push(StirlingRow { s, m, value: hoeffding::stirling_sum(s, m).to_string() });
                }
            }
            Ok(Output { text: table(&rows, cfg)?, code: EXIT_OK, summary: None })
        }
    }
}

#[derive(Serialize)]
struct H1Row {
    y: f64,
    h1: f64,
}

#[derive(Serialize)]
struct CatalogRow {
    kind: &'static str,
    id: &'static str,
    params: &'static str,
    description: &'static str,
}

#[derive(Serialize)]
struct StirlingRow {
    s: usize,
    m: usize,
    value: String,
}

#[derive(Serialize)]
struct BetaRow {
    i: usize,
    beta_numerator: String,
    beta_denominator: String,
    beta_float: f64,
}

#[derive(Serialize)]
struct ErrorRow {
    k: usize,
    n: usize,
    error: f64,
}

fn hoeffding_output(seq: &crate::Sequence, n: Option<usize>, levels: &[usize], k_max: usize, cfg: &RunConfig) -> Result<Output> {
    if let Some(n) = n {
        if n == 0 || n > seq.len() {
            return Err(Error::InvalidParams(format!("level n = {n} must lie in 1..={}", seq.len())));
        }
        let t = hoeffding::beta_table(seq, n)?;
        let rows: Vec<BetaRow> = t
            .rows()
            .into_iter()
            .map(|(i, beta_numerator, beta_denominator, beta_float)| BetaRow { i, beta_numerator, beta_denominator, beta_float })
            .collect();
        let broken = t.first_non_increase();
        let text = match cfg.format {
            Format::Csv => io::to_csv(&rows)?,
            Format::Json => json(&serde_json::json!({
                "n": t.n,
                "exact": t.exact,
                "precision_loss": t.precision_loss,
                "increasing": broken.is_none(),
                "betas": rows,
            }))?,
        };
        let summary = broken.map(|i| format!("ems: betas not increasing at i = {i}, n = {n}: condition (i) fails"));
        return Ok(Output { text, code: if broken.is_some() { EXIT_FAIL } else { EXIT_OK }, summary });
    }
    let report = hoeffding::convergence_diagnostic(seq, (!levels.is_empty()).then_some(levels), k_max)?;
    let text = match cfg.format {
        Format::Json => json(&report)?,
        Format::Csv => {
            let rows: Vec<ErrorRow> = report
                .errors
                .iter()
                .flat_map(|e| report.levels.iter().zip(&e.errors).map(move |(&n, &error)| ErrorRow { k: e.k, n, error }))
                .collect();
            io::to_csv(&rows)?
        }
    };
    Ok(Output { text, code: EXIT_OK, summary: None })
}

#[derive(Serialize)]
struct QuantileRow {
    u: f64,
    g: f64,
}

#[derive(Serialize)]
struct RoundTrip {
    k: usize,
    expected: f64,
    reconstructed: f64,
    error: f64,
}

fn reconstruct_output(f: &gif::IntegralForm, mu1: f64, k_max: usize, cfg: &RunConfig) -> Result<Output> {
    let d = gif::reconstruct_quantile(f, mu1)?;
    let us = grid(cfg)?.map_or_else(|| Grid::Count(99).unit(), |g| g.unit());
    if us.iter().any(|u| !(*u > 0.0 && *u < 1.0)) {
        return Err(Error::InvalidParams("grid points must lie in (0, 1)".into()));
    }
    let rows: Vec<QuantileRow> = us.iter().map(|&u| QuantileRow { u, g: d.quantile(u) }).collect();
    let qc = quad_config(cfg).with_rel_tol(cfg.tol_rel.unwrap_or(1e-8));
    let trips = (1..=k_max)
        .map(|k| {
            let expected = mu1 + f.difference(k as f64)?;
            let reconstructed = dist::expected_stat(&d, dist::Statistic::Max, k, &qc)?;
            Ok(RoundTrip { k, expected, reconstructed, error: (reconstructed - expected).abs() })
        })
        .collect::<Result<Vec<_>>>()?;
    let max_error = trips.iter().map(|t| t.error).fold(0.0, f64::max);
    let summary = serde_json::json!({ "label": f.label, "mu1": mu1, "round_trip": trips, "max_error": max_error });
    Ok(match cfg.format {
        Format::Csv => Output { text: io::to_csv(&rows)?, code: EXIT_OK, summary: Some(summary.to_string()) },
        Format::Json => {
            let mut v = summary;
            v["points"] = serde_json::to_value(&rows)?;
            Output { text: json(&v)?, code: EXIT_OK, summary: None }
        }
    })
}
