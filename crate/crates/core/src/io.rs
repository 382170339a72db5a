//! Score ingestion and plot-ready serialization of curves and reports.
//!
//! Delimited output is comma-separated with a header row. Numbers are written
//! in their shortest form that parses back to the identical `f64`, so a
//! serialize / parse / serialize cycle reproduces the same bytes.

use std::fs::File;
use std::io::{BufRead, BufReader, Read};
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::combinatorics::EstimatorKind;
use crate::comparison::{ComparisonReport, ConclusionRate};
use crate::curves::{EvpCurve, EvpPoint};
use crate::error::{invalid, EvpError, Result};
use crate::estimators::{ScorePool, WeightVector};
use crate::simulation::SimulationReport;

pub const CURVE_COLUMNS: [&str; 4] = ["n", "estimator", "mean", "variance"];
pub const SIMULATION_COLUMNS: [&str; 7] = ["n", "estimator", "mean", "bias", "variance", "mse", "stderr"];
pub const COMPARISON_COLUMNS: [&str; 5] = ["B", "estimator", "error_rate", "ties", "resamples"];
pub const WEIGHT_COLUMNS: [&str; 2] = ["i", "mass"];

/// Layout of a score file.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ScoreFormat {
    /// Lines if the first non-empty line is a number, otherwise delimited.
    #[default]
    Auto,
    /// One decimal number per non-empty line.
    Lines,
    /// Comma-separated with a header row containing a `score` column.
    Delimited,
}

impl FromStr for ScoreFormat {
    type Err = EvpError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "auto" => Ok(ScoreFormat::Auto),
            "lines" => Ok(ScoreFormat::Lines),
            "csv" | "delimited" => Ok(ScoreFormat::Delimited),
            other => Err(invalid(format!("unknown score format `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum OutputFormat {
    /// Comma-separated rows.
    #[default]
    Delimited,
    /// JSON.
    Structured,
}

impl FromStr for OutputFormat {
    type Err = EvpError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "csv" | "delimited" => Ok(OutputFormat::Delimited),
            "json" | "structured" => Ok(OutputFormat::Structured),
            other => Err(invalid(format!("unknown output format `{other}`"))),
        }
    }
}

pub fn read_scores_file(path: &Path, format: ScoreFormat) -> Result<ScorePool> {
    let file = File::open(path).map_err(|source| EvpError::File {
        path: path.to_path_buf(),
        source,
    })?;
    read_scores(file, format, &path.display().to_string())
}

/// Parses a score file; `source_name` labels parse errors.
pub fn read_scores<R: Read>(reader: R, format: ScoreFormat, source_name: &str) -> Result<ScorePool> {
    let mut text = String::new();
    BufReader::new(reader).read_to_string(&mut text)?;
    let format = match format {
        ScoreFormat::Auto => detect(&text),
        f => f,
    };
    let scores = match format {
        ScoreFormat::Delimited => read_delimited(&text, source_name)?,
        _ => read_lines(&text, source_name)?,
    };
    if scores.is_empty() {
        return Err(EvpError::Parse {
            source_name: source_name.to_owned(),
            line: 0,
            message: "no scores found".into(),
        });
    }
    ScorePool::new(scores)
}

fn detect(text: &str) -> ScoreFormat {
    match text.lines().map(str::trim).find(|l| !l.is_empty()) {
        Some(first) if first.parse::<f64>().is_err() && first.contains(',') => ScoreFormat::Delimited,
        _ => ScoreFormat::Lines,
    }
}

fn parse_score(field: &str, source_name: &str, line: usize) -> Result<f64> {
    let err = |message: String| EvpError::Parse {
        source_name: source_name.to_owned(),
        line,
        message,
    };
    let value: f64 = field
        .parse()
        .map_err(|_| err(format!("`{field}` is not a decimal number")))?;
    if !value.is_finite() {
        return Err(err(format!("non-finite score `{field}`")));
    }
    Ok(value)
}

fn read_lines(text: &str, source_name: &str) -> Result<Vec<f64>> {
    let mut out = Vec::new();
    for (idx, line) in text.as_bytes().lines().enumerate() {
        let line = line?;
        let line = line.trim();
        if !line.is_empty() {
            out.push(parse_score(line, source_name, idx + 1)?);
        }
    }
    Ok(out)
}

fn read_delimited(text: &str, source_name: &str) -> Result<Vec<f64>> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let column = rdr
        .headers()?
        .iter()
        .position(|h| h.eq_ignore_ascii_case("score"))
        .ok_or_else(|| EvpError::Parse {
            source_name: source_name.to_owned(),
            line: 1,
            message: "header has no `score` column".into(),
        })?;
    let mut out = Vec::new();
    for record in rdr.records() {
        let record = record?;
        let line = record.position().map_or(0, |p| p.line() as usize);
        let field = record.get(column).ok_or_else(|| EvpError::Parse {
            source_name: source_name.to_owned(),
            line,
            message: "missing `score` field".into(),
        })?;
        out.push(parse_score(field, source_name, line)?);
    }
    Ok(out)
}

fn num(x: f64) -> String {
    format!("{x:?}")
}

fn parse_num(s: &str) -> Result<f64> {
    s.trim()
        .parse()
        .map_err(|_| invalid(format!("`{s}` is not a number")))
}

fn parse_count<T: FromStr>(s: &str) -> Result<T> {
    s.trim()
        .parse()
        .map_err(|_| invalid(format!("`{s}` is not a count")))
}

fn csv_writer() -> csv::Writer<Vec<u8>> {
    csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new())
}

fn finish(w: csv::Writer<Vec<u8>>) -> Result<Vec<u8>> {
    w.into_inner().map_err(|e| EvpError::Io(e.into_error()))
}

fn to_json<T: Serialize>(value: &T) -> Result<Vec<u8>> {
    let mut out = serde_json::to_vec_pretty(value)?;
    out.push(b'\n');
    Ok(out)
}

fn csv_records(bytes: &[u8], columns: &[&str]) -> Result<Vec<csv::StringRecord>> {
    let mut rdr = csv::ReaderBuilder::new().from_reader(bytes);
    let headers = rdr.headers()?.clone();
    if headers.iter().ne(columns.iter().copied()) {
        return Err(invalid(format!(
            "expected columns {}, found {}",
            columns.join(","),
            headers.iter().collect::<Vec<_>>().join(",")
        )));
    }
    Ok(rdr.records().collect::<std::result::Result<_, _>>()?)
}

#[derive(Serialize, Deserialize)]
struct CurveDocument {
    curves: Vec<EvpCurve>,
}

pub fn write_curves(curves: &[EvpCurve], format: OutputFormat) -> Result<Vec<u8>> {
    match format {
        OutputFormat::Structured => to_json(&CurveDocument { curves: curves.to_vec() }),
        OutputFormat::Delimited => {
            let mut w = csv_writer();
            w.write_record(CURVE_COLUMNS)?;
            for c in curves {
                for p in &c.points {
                    w.write_record([p.n.to_string(), c.estimator.to_string(), num(p.mean), num(p.variance)])?;
                }
            }
            finish(w)
        }
    }
}

/// Inverse of [`write_curves`]; delimited rows are grouped into curves by
/// runs of the same estimator.
pub fn parse_curves(bytes: &[u8], format: OutputFormat) -> Result<Vec<EvpCurve>> {
    if format == OutputFormat::Structured {
        return Ok(serde_json::from_slice::<CurveDocument>(bytes)?.curves);
    }
    let mut curves: Vec<EvpCurve> = Vec::new();
    for rec in csv_records(bytes, &CURVE_COLUMNS)? {
        let estimator: EstimatorKind = rec[1].parse()?;
        let point = EvpPoint {
            n: parse_count(&rec[0])?,
            mean: parse_num(&rec[2])?,
            variance: parse_num(&rec[3])?,
        };
        match curves.last_mut() {
            Some(c) if c.estimator == estimator && point.n == c.points.len() + 1 => {
                c.points.push(point);
                c.b += 1;
            }
            _ if point.n == 1 => curves.push(EvpCurve { estimator, b: 1, points: vec![point] }),
            _ => return Err(invalid(format!("curve rows out of order at n = {}", point.n))),
        }
    }
    Ok(curves)
}

/// One delimited row of a simulation report.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimulationRow {
    pub n: usize,
    pub estimator: EstimatorKind,
    pub mean: f64,
    pub bias: f64,
    pub variance: f64,
    pub mse: f64,
    pub stderr: f64,
}

pub fn simulation_rows(report: &SimulationReport) -> Vec<SimulationRow> {
    report
        .cells
        .iter()
        .map(|c| SimulationRow {
            n: c.n,
            estimator: c.estimator,
            mean: c.mean,
            bias: c.bias,
            variance: c.variance,
            mse: c.mse,
            stderr: c.stderr,
        })
        .collect()
}

pub fn write_simulation_rows(rows: &[SimulationRow]) -> Result<Vec<u8>> {
    let mut w = csv_writer();
    w.write_record(SIMULATION_COLUMNS)?;
    for r in rows {
        w.write_record([
            r.n.to_string(),
            r.estimator.to_string(),
            num(r.mean),
            num(r.bias),
            num(r.variance),
            num(r.mse),
            num(r.stderr),
        ])?;
    }
    finish(w)
}

pub fn parse_simulation_rows(bytes: &[u8]) -> Result<Vec<SimulationRow>> {
    csv_records(bytes, &SIMULATION_COLUMNS)?
        .iter()
        .map(|rec| {
            Ok(SimulationRow {
                n: parse_count(&rec[0])?,
                estimator: rec[1].parse()?,
                mean: parse_num(&rec[2])?,
                bias: parse_num(&rec[3])?,
                variance: parse_num(&rec[4])?,
                mse: parse_num(&rec[5])?,
                stderr: parse_num(&rec[6])?,
            })
        })
        .collect()
}

pub fn write_simulation_report(report: &SimulationReport, format: OutputFormat) -> Result<Vec<u8>> {
    match format {
        OutputFormat::Structured => to_json(report),
        OutputFormat::Delimited => write_simulation_rows(&simulation_rows(report)),
    }
}

pub fn parse_simulation_report(bytes: &[u8]) -> Result<SimulationReport> {
    Ok(serde_json::from_slice(bytes)?)
}

/// One delimited row of a comparison report.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComparisonRow {
    pub budget: usize,
    pub estimator: EstimatorKind,
    pub error_rate: f64,
    pub ties: u64,
    pub resamples: u64,
}

impl From<&ConclusionRate> for ComparisonRow {
    fn from(r: &ConclusionRate) -> Self {
        Self {
            budget: r.budget,
            estimator: r.estimator,
            error_rate: r.error_rate(),
            ties: r.ties,
            resamples: r.resamples,
        }
    }
}

pub fn write_comparison_rows(rows: &[ComparisonRow]) -> Result<Vec<u8>> {
    let mut w = csv_writer();
    w.write_record(COMPARISON_COLUMNS)?;
    for r in rows {
        w.write_record([
            r.budget.to_string(),
            r.estimator.to_string(),
            num(r.error_rate),
            r.ties.to_string(),
            r.resamples.to_string(),
        ])?;
    }
    finish(w)
}

pub fn parse_comparison_rows(bytes: &[u8]) -> Result<Vec<ComparisonRow>> {
    csv_records(bytes, &COMPARISON_COLUMNS)?
        .iter()
        .map(|rec| {
            Ok(ComparisonRow {
                budget: parse_count(&rec[0])?,
                estimator: rec[1].parse()?,
                error_rate: parse_num(&rec[2])?,
                ties: parse_count(&rec[3])?,
                resamples: parse_count(&rec[4])?,
            })
        })
        .collect()
}

pub fn write_comparison_report(report: &ComparisonReport, format: OutputFormat) -> Result<Vec<u8>> {
    match format {
        OutputFormat::Structured => to_json(report),
        OutputFormat::Delimited => {
            write_comparison_rows(&report.rates.iter().map(ComparisonRow::from).collect::<Vec<_>>())
        }
    }
}

pub fn parse_comparison_report(bytes: &[u8]) -> Result<ComparisonReport> {
    Ok(serde_json::from_slice(bytes)?)
}

pub fn write_weights(weights: &WeightVector, format: OutputFormat) -> Result<Vec<u8>> {
    match format {
        OutputFormat::Structured => to_json(weights),
        OutputFormat::Delimited => {
            let mut w = csv_writer();
            w.write_record(WEIGHT_COLUMNS)?;
            for (i, m) in weights.masses.iter().enumerate() {
                w.write_record([(i + 1).to_string(), num(*m)])?;
            }
            finish(w)
        }
    }
}
