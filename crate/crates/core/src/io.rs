//! Reading sequences, distributions and kernels from JSON or CSV, and writing
//! tables as CSV with LF line endings.

use std::io::{Read, Write};
use std::path::Path;

use num_bigint::BigInt;
use num_rational::BigRational;
use serde::Serialize;
use serde_json::Value;

use crate::dist::{self, parse_rational, DistributionSpec, TabulatedQuantile};
use crate::error::{Error, Result};
use crate::gif::{self, IntegralForm, TabulatedH1};
use crate::seqcheck::{Mode, Sequence};
use crate::special::decimal_rational;

/// Inline JSON when the text starts with `{` or `[`, stdin for `-`, else a file path.
pub fn read_source(source: &str) -> Result<String> {
    let t = source.trim_start();
    if t.starts_with('{') || t.starts_with('[') {
        return Ok(source.to_string());
    }
    if source == "-" {
        let mut s = String::new();
        std::io::stdin().read_to_string(&mut s)?;
        return Ok(s);
    }
    std::fs::read_to_string(Path::new(source)).map_err(|e| Error::Io(format!("{source}: {e}")))
}

fn looks_like_json(text: &str) -> bool {
    matches!(text.trim_start().chars().next(), Some('{') | Some('['))
}

/// A sequence from `{"values": [..], "exact": bool, "rationals": [[num, den], ..]}`,
/// a bare JSON array, or CSV with the values in the last column.
///
/// Exact mode is chosen when the input asks for it or carries "p/q" strings.
pub fn parse_sequence(text: &str) -> Result<Sequence> {
    if looks_like_json(text) {
        parse_sequence_json(&serde_json::from_str(text)?)
    } else {
        parse_sequence_csv(text)
    }
}

fn parse_sequence_json(v: &Value) -> Result<Sequence> {
    let (values, exact, rationals) = match v {
        Value::Array(a) => (Some(a.as_slice()), false, None),
        Value::Object(m) => {
            let exact = match m.get("exact") {
                None | Some(Value::Null) => false,
                Some(Value::Bool(b)) => *b,
                Some(_) => return Err(Error::Parse("`exact` must be a boolean".into())),
            };
            let values = match m.get("values") {
                None | Some(Value::Null) => None,
                Some(Value::Array(a)) => Some(a.as_slice()),
                Some(_) => return Err(Error::Parse("`values` must be an array".into())),
            };
            let rationals = match m.get("rationals") {
                None | Some(Value::Null) => None,
                Some(Value::Array(a)) => Some(a.as_slice()),
                Some(_) => return Err(Error::Parse("`rationals` must be an array of [num, den] pairs".into())),
            };
            (values, exact, rationals)
        }
        _ => return Err(Error::Parse("sequence must be a JSON object or array".into())),
    };
    if let Some(pairs) = rationals {
        let terms = pairs.iter().map(rational_pair).collect::<Result<Vec<_>>>()?;
        return Ok(Sequence::exact(terms));
    }
    let values = values.ok_or_else(|| Error::Parse("sequence needs `values` or `rationals`".into()))?;
    let has_fraction = values.iter().any(|x| matches!(x, Value::String(s) if s.contains('/')));
    if exact || has_fraction {
        let terms = values.iter().map(exact_value).collect::<Result<Vec<_>>>()?;
        Ok(Sequence::exact(terms))
    } else {
        let terms = values.iter().map(float_value).collect::<Result<Vec<_>>>()?;
        Ok(Sequence::float(terms))
    }
}

fn integer(v: &Value) -> Result<BigInt> {
    let text = match v {
        Value::String(s) => s.trim().to_string(),
        Value::Number(n) if n.is_i64() || n.is_u64() => n.to_string(),
        _ => return Err(Error::Parse(format!("expected an integer, got {v}"))),
    };
    text.parse().map_err(|_| Error::Parse(format!("expected an integer, got {text}")))
}

fn rational_pair(v: &Value) -> Result<BigRational> {
    match v {
        Value::Array(p) if p.len() == 2 => {
            let (n, d) = (integer(&p[0])?, integer(&p[1])?);
            if d == BigInt::from(0) {
                return Err(Error::Parse("zero denominator".into()));
            }
            Ok(BigRational::new(n, d))
        }
        _ => Err(Error::Parse(format!("expected a [num, den] pair, got {v}"))),
    }
}

fn exact_value(v: &Value) -> Result<BigRational> {
    match v {
        Value::Number(n) => decimal_rational(&n.to_string()),
        Value::String(s) => parse_rational(s),
        _ => None,
    }
    .ok_or_else(|| Error::Parse(format!("not a number: {v}")))
}

fn float_value(v: &Value) -> Result<f64> {
    let x = match v {
        Value::Number(n) => n.as_f64(),
        Value::String(s) => s.trim().parse::<f64>().ok(),
        _ => None,
    };
    x.filter(|x| x.is_finite()).ok_or_else(|| Error::Parse(format!("not a finite number: {v}")))
}

fn parse_sequence_csv(text: &str) -> Result<Sequence> {
    let mut reader = csv::ReaderBuilder::new().has_headers(false).flexible(true).trim(csv::Trim::All).from_reader(text.as_bytes());
    let mut fields = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record.map_err(|e| Error::Parse(e.to_string()))?;
        let Some(last) = record.iter().next_back().filter(|s| !s.is_empty()) else { continue };
        if parse_rational(last).is_none() && last.parse::<f64>().is_err() {
            if i == 0 {
                continue; // header row
            }
            return Err(Error::Parse(format!("line {}: not a number: {last}", i + 1)));
        }
        fields.push(last.to_string());
    }
    if fields.iter().any(|f| f.contains('/')) {
        let terms = fields.iter().map(|f| parse_rational(f).ok_or_else(|| Error::Parse(format!("not a number: {f}")))).collect::<Result<_>>()?;
        Ok(Sequence::exact(terms))
    } else {
        let terms = fields
            .iter()
            .map(|f| f.parse::<f64>().ok().filter(|x| x.is_finite()).ok_or_else(|| Error::Parse(format!("not a finite number: {f}"))))
            .collect::<Result<_>>()?;
        Ok(Sequence::float(terms))
    }
}

/// Applies a requested arithmetic mode, converting floats to exact through their shortest decimal.
pub fn in_mode(seq: Sequence, mode: Option<Mode>) -> Result<Sequence> {
    match mode {
        Some(m) if m != seq.mode() => seq.with_mode(m),
        _ => Ok(seq),
    }
}

/// Parameters given as JSON text, or as a bare number / "p/q".
pub fn parse_params(text: Option<&str>) -> Result<Value> {
    match text.map(str::trim) {
        None | Some("") => Ok(Value::Null),
        Some(t) => match serde_json::from_str(t) {
            Ok(v) => Ok(v),
            Err(_) if parse_rational(t).is_some() => Ok(Value::String(t.to_string())),
            Err(e) => Err(Error::Parse(format!("parameters: {e}"))),
        },
    }
}

/// A catalog distribution, or `custom` with a tabulated quantile read from `table`.
pub fn distribution(id: &str, params: &Value, table: Option<&str>) -> Result<DistributionSpec> {
    if id == "custom" {
        let text = read_source(table.ok_or_else(|| Error::Parse("custom distribution needs a table input".into()))?)?;
        let t: TabulatedQuantile = serde_json::from_str(&text)?;
        return dist::tabulated(&t);
    }
    dist::catalog(id, params)
}

/// A built-in integral form, or `custom` with a tabulated h1 read from `table`.
pub fn form(id: &str, params: &Value, table: Option<&str>) -> Result<IntegralForm> {
    if id == "custom" {
        let text = read_source(table.ok_or_else(|| Error::Parse("custom form needs a table input".into()))?)?;
        let t: TabulatedH1 = serde_json::from_str(&text)?;
        return gif::tabulated_form(&t);
    }
    gif::form_by_id(id, params)
}

/// Grid from either a point count or a comma-separated list of values.
pub fn parse_grid(text: &str) -> Result<Grid> {
    let t = text.trim();
    if let Ok(n) = t.parse::<usize>() {
        if n == 0 {
            return Err(Error::Parse("grid size must be positive".into()));
        }
        return Ok(Grid::Count(n));
    }
    let points = t
        .split(',')
        .map(|s| s.trim().parse::<f64>().ok().filter(|x| x.is_finite()).ok_or_else(|| Error::Parse(format!("bad grid value `{s}`"))))
        .collect::<Result<Vec<_>>>()?;
    Ok(Grid::Points(points))
}

#[derive(Debug, Clone, PartialEq)]
pub enum Grid {
    Count(usize),
    Points(Vec<f64>),
}

impl Grid {
    /// u_i = i/(n + 1) for a count.
    pub fn unit(&self) -> Vec<f64> {
        match self {
            Grid::Count(n) => (1..=*n).map(|i| i as f64 / (*n as f64 + 1.0)).collect(),
            Grid::Points(p) => p.clone(),
        }
    }

    /// n log-spaced points in [lo, hi] for a count.
    pub fn log_spaced(&self, lo: f64, hi: f64) -> Vec<f64> {
        match self {
            Grid::Count(1) => vec![lo],
            Grid::Count(n) => crate::ranges::log_grid(lo, hi, *n),
            Grid::Points(p) => p.clone(),
        }
    }
}

/// CSV writer with a header row and LF record terminator.
pub fn csv_writer<W: Write>(w: W) -> csv::Writer<W> {
    csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(w)
}

/// Serializes rows to CSV text.
pub fn to_csv<T: Serialize>(rows: &[T]) -> Result<String> {
    let mut w = csv_writer(Vec::new());
    for r in rows {
        w.serialize(r).map_err(|e| Error::Io(e.to_string()))?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Io(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| Error::Io(e.to_string()))
}
