//! Parameter sweeps from a JSON document.
//!
//! ```json
//! {
//!   "mode": ["deltap_ensemble", "deltap_avg_analytic"],
//!   "grid": {"N": [12, 24], "rho": {"start": 0.05, "stop": 1.0, "step": 0.05},
//!            "eta": 0.8, "K": 1, "trials": 500, "seed": 7},
//!   "output": {"path": "fig2a_{mode}.csv", "format": "csv"}
//! }
//! ```
//!
//! `grid` is either an explicit list of points or a product over axes, each
//! axis a scalar, a list, or an inclusive `{start, stop, step}` range. Product
//! points are ordered with N varying slowest, then M, rho, eta, xi, nu, K, L.
//! With several modes the output path must contain `{mode}`.

use std::fs::{File, OpenOptions};
use std::io::{BufReader, Write};
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::format::{check_header, Format, ResultRow, RowSink};
use crate::matrix::MatrixSpec;
use crate::point::{Mode, Point, Resolved};
use crate::{CliError, CliResult};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum OneOrMany<T> {
    One(T),
    Many(Vec<T>),
}

impl<T: Clone> OneOrMany<T> {
    pub fn to_vec(&self) -> Vec<T> {
        match self {
            Self::One(x) => vec![x.clone()],
            Self::Many(xs) => xs.clone(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Axis {
    Range { start: f64, stop: f64, step: f64 },
    Values(OneOrMany<f64>),
}

impl Axis {
    fn values(&self, name: &str) -> CliResult<Vec<f64>> {
        match self {
            Self::Values(v) => Ok(v.to_vec()),
            Self::Range { start, stop, step } => {
                if !(*step > 0.0 && step.is_finite() && start.is_finite() && stop.is_finite()) {
                    return Err(CliError::usage(format!("axis {name}: bad range")));
                }
                let count = ((stop - start) / step + 1e-9).floor();
                if count < 0.0 {
                    return Ok(Vec::new());
                }
                // rounded to 12 decimals so 0.05·3 prints as 0.15
                Ok((0..=count as usize)
                    .map(|i| ((start + i as f64 * step) * 1e12).round() / 1e12)
                    .collect())
            }
        }
    }

    fn counts(&self, name: &str) -> CliResult<Vec<usize>> {
        self.values(name)?
            .into_iter()
            .map(|v| {
                if v >= 0.0 && v.fract() == 0.0 && v <= u32::MAX as f64 {
                    Ok(v as usize)
                } else {
                    Err(CliError::usage(format!("axis {name}: {v} is not a count")))
                }
            })
            .collect()
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProductGrid {
    #[serde(rename = "N", default)]
    pub n: Option<Axis>,
    #[serde(rename = "M", default)]
    pub m: Option<Axis>,
    #[serde(default)]
    pub rho: Option<Axis>,
    #[serde(default)]
    pub eta: Option<Axis>,
    #[serde(default)]
    pub xi: Option<Axis>,
    #[serde(default)]
    pub nu: Option<Axis>,
    #[serde(rename = "K", default)]
    pub k: Option<Axis>,
    #[serde(rename = "L", default)]
    pub l: Option<Axis>,
    #[serde(default)]
    pub trials: Option<u64>,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub matrix: Option<String>,
}

#[allow(clippy::large_enum_variant)]
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Grid {
    Points(Vec<Point>),
    Product(ProductGrid),
}

fn optional<T>(axis: &Option<Axis>, f: impl Fn(&Axis) -> CliResult<Vec<T>>) -> CliResult<Vec<Option<T>>> {
    match axis {
        Some(a) => Ok(f(a)?.into_iter().map(Some).collect()),
        None => Ok(vec![None]),
    }
}

impl Grid {
    pub fn points(&self) -> CliResult<Vec<Point>> {
        let g = match self {
            Self::Points(p) => return Ok(p.clone()),
            Self::Product(g) => g,
        };
        let d = Point::default();
        let ns = optional(&g.n, |a| a.counts("N"))?;
        let ms = optional(&g.m, |a| a.counts("M"))?;
        let rhos = optional(&g.rho, |a| a.values("rho"))?;
        let etas = optional(&g.eta, |a| a.values("eta"))?;
        let xis = optional(&g.xi, |a| a.values("xi"))?;
        let nus = optional(&g.nu, |a| a.values("nu"))?;
        let ks = optional(&g.k, |a| a.counts("K"))?;
        let ls = optional(&g.l, |a| a.counts("L"))?;
        let mut out = Vec::new();
        for &n in &ns {
            for &m in &ms {
                for &rho in &rhos {
                    for &eta in &etas {
                        for &xi in &xis {
                            for &nu in &nus {
                                for &k in &ks {
                                    for &l in &ls {
                                        out.push(Point {
                                            n,
                                            m,
                                            rho,
                                            eta: eta.unwrap_or(d.eta),
                                            xi: xi.unwrap_or(d.xi),
                                            nu: nu.unwrap_or(d.nu),
                                            k: k.unwrap_or(d.k),
                                            l: l.unwrap_or(d.l),
                                            trials: g.trials,
                                            seed: g.seed,
                                            matrix: g.matrix.clone(),
                                        });
                                    }
                                }
                            }
                        }
                    }
                }
            }
        }
        Ok(out)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    pub path: String,
    #[serde(default)]
    pub format: Format,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub mode: OneOrMany<Mode>,
    pub grid: Grid,
    #[serde(default)]
    pub output: Option<OutputSpec>,
}

impl SweepSpec {
    pub fn from_json(text: &str) -> CliResult<Self> {
        serde_json::from_str(text).map_err(|e| CliError::usage(format!("sweep spec: {e}")))
    }
}

/// Command-line overrides for a sweep.
#[derive(Clone, Debug, Default)]
pub struct SweepOptions {
    /// Output path, `-` for stdout; replaces the spec's path.
    pub output: Option<String>,
    pub format: Option<Format>,
    /// Skip grid points already present in an existing CSV output.
    pub resume: bool,
    /// Threads for Monte Carlo ensembles; 0 uses the global pool.
    pub workers: usize,
}

/// Rows written per mode.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SweepReport {
    pub mode: Mode,
    pub path: String,
    pub skipped: usize,
    pub written: usize,
}

/// Validates every point for every mode, then evaluates and writes them.
/// Points are evaluated in parallel chunks but written in grid order; a
/// failure keeps the rows already written.
pub fn run_sweep(spec: &SweepSpec, opts: &SweepOptions) -> CliResult<Vec<SweepReport>> {
    let modes = spec.mode.to_vec();
    if modes.is_empty() {
        return Err(CliError::usage("sweep spec lists no mode"));
    }
    let path = opts
        .output
        .clone()
        .or_else(|| spec.output.as_ref().map(|o| o.path.clone()))
        .ok_or_else(|| CliError::usage("no output path in the spec or on the command line"))?;
    let format = opts
        .format
        .or_else(|| spec.output.as_ref().map(|o| o.format))
        .unwrap_or_default();
    if modes.len() > 1 && !path.contains("{mode}") {
        return Err(CliError::usage(
            "output path needs a {mode} placeholder for several modes",
        ));
    }
    if opts.resume && (format != Format::Csv || path == "-") {
        return Err(CliError::usage("resume needs a csv output file"));
    }
    let points = spec.grid.points()?;
    let plans = modes
        .iter()
        .map(|&mode| {
            let resolved = points
                .iter()
                .enumerate()
                .map(|(i, p)| {
                    p.resolve(mode, None, opts.workers).map_err(|e| match e {
                        CliError::Usage(m) => CliError::Usage(format!("{} point {i}: {m}", mode.name())),
                        other => other,
                    })
                })
                .collect::<CliResult<Vec<_>>>()?;
            Ok((mode, path.replace("{mode}", mode.name()), resolved))
        })
        .collect::<CliResult<Vec<_>>>()?;
    let mut reports = Vec::new();
    for (mode, path, resolved) in plans {
        let (sink, skipped) = open_sink(&path, format, opts.resume, resolved.len())?;
        let written = write_rows(sink, &resolved[skipped..])?;
        reports.push(SweepReport {
            mode,
            path,
            skipped,
            written,
        });
    }
    Ok(reports)
}

fn open_sink(path: &str, format: Format, resume: bool, total: usize) -> CliResult<(RowSink, usize)> {
    if path == "-" {
        return Ok((RowSink::create(Box::new(std::io::stdout()), format)?, 0));
    }
    let p = PathBuf::from(path);
    if resume && p.exists() {
        let done = count_rows(&p)?;
        if done > total {
            return Err(CliError::usage(format!(
                "{path} holds {done} rows but the grid has only {total} points"
            )));
        }
        let file = OpenOptions::new().append(true).open(&p)?;
        return Ok((RowSink::append_csv(Box::new(file)), done));
    }
    let file = File::create(&p).map_err(|e| CliError::numeric(format!("cannot create {path}: {e}")))?;
    Ok((RowSink::create(Box::new(file), format)?, 0))
}

fn count_rows(path: &Path) -> CliResult<usize> {
    let mut r = csv::Reader::from_reader(BufReader::new(File::open(path)?));
    check_header(r.headers()?)?;
    let mut n = 0;
    for rec in r.records() {
        rec?;
        n += 1;
    }
    Ok(n)
}

fn write_rows(mut sink: RowSink, points: &[Resolved]) -> CliResult<usize> {
    let chunk = rayon::current_num_threads().max(1);
    let mut written = 0;
    for block in points.chunks(chunk) {
        let rows: Vec<CliResult<ResultRow>> = block.par_iter().map(Resolved::evaluate).collect();
        for row in rows {
            match row {
                Ok(row) => {
                    sink.write(&row)?;
                    written += 1;
                }
                Err(e) => {
                    sink.finish()?;
                    return Err(match e {
                        CliError::Usage(m) | CliError::Numeric(m) => {
                            CliError::Numeric(format!("grid point {written}: {m}"))
                        }
                    });
                }
            }
        }
    }
    sink.finish()?;
    Ok(written)
}

/// Evaluates one point and writes it with a header, for the point commands.
pub fn write_single(
    out: impl Write + 'static,
    format: Format,
    point: &Point,
    mode: Mode,
    matrix: Option<&MatrixSpec>,
    workers: usize,
) -> CliResult<ResultRow> {
    let row = point.resolve(mode, matrix, workers)?.evaluate()?;
    let mut sink = RowSink::create(Box::new(out), format)?;
    sink.write(&row)?;
    sink.finish()?;
    Ok(row)
}
