//! Result rows and their CSV/JSON encodings.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::{CliError, CliResult};

pub const HEADER: [&str; 12] = [
    "N",
    "M",
    "rho",
    "eta",
    "xi",
    "nu",
    "K",
    "L",
    "trials",
    "value",
    "stderr",
    "reference_w1",
];

/// Shortest decimal that parses back to `x`, in scientific notation when
/// `0 < |x| < 1e-4`.
pub fn format_number(x: f64) -> String {
    if x != 0.0 && x.abs() < 1e-4 {
        format!("{x:e}")
    } else {
        format!("{x}")
    }
}

/// One output line. Empty cells are `None`.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    #[serde(rename = "N")]
    pub n: Option<usize>,
    #[serde(rename = "M")]
    pub m: Option<usize>,
    pub rho: Option<f64>,
    pub eta: f64,
    pub xi: f64,
    pub nu: f64,
    #[serde(rename = "K")]
    pub k: Option<usize>,
    #[serde(rename = "L")]
    pub l: Option<usize>,
    pub trials: Option<u64>,
    pub value: f64,
    pub stderr: Option<f64>,
    pub reference_w1: Option<f64>,
}

fn cell<T: ToString>(v: Option<T>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn num_cell(v: Option<f64>) -> String {
    v.map(format_number).unwrap_or_default()
}

impl ResultRow {
    pub fn csv_fields(&self) -> [String; 12] {
        [
            cell(self.n),
            cell(self.m),
            num_cell(self.rho),
            format_number(self.eta),
            format_number(self.xi),
            format_number(self.nu),
            cell(self.k),
            cell(self.l),
            cell(self.trials),
            format_number(self.value),
            num_cell(self.stderr),
            num_cell(self.reference_w1),
        ]
    }

    /// JSON object with the CSV column names as keys, numbers formatted
    /// as in the CSV and empty cells as `null`.
    pub fn json_object(&self) -> String {
        let fields: Vec<String> = HEADER
            .iter()
            .zip(self.csv_fields())
            .map(|(k, v)| format!("\"{k}\":{}", if v.is_empty() { "null" } else { &v }))
            .collect();
        format!("{{{}}}", fields.join(","))
    }

    pub fn from_csv_record(rec: &csv::StringRecord) -> CliResult<Self> {
        if rec.len() != HEADER.len() {
            return Err(CliError::usage(format!(
                "csv row has {} fields, expected {}",
                rec.len(),
                HEADER.len()
            )));
        }
        fn opt<T: std::str::FromStr>(s: &str, col: &str) -> CliResult<Option<T>> {
            if s.is_empty() {
                return Ok(None);
            }
            s.parse()
                .map(Some)
                .map_err(|_| CliError::usage(format!("bad {col} cell `{s}`")))
        }
        fn req<T: std::str::FromStr>(s: &str, col: &str) -> CliResult<T> {
            opt(s, col)?.ok_or_else(|| CliError::usage(format!("empty {col} cell")))
        }
        Ok(Self {
            n: opt(&rec[0], "N")?,
            m: opt(&rec[1], "M")?,
            rho: opt(&rec[2], "rho")?,
            eta: req(&rec[3], "eta")?,
            xi: req(&rec[4], "xi")?,
            nu: req(&rec[5], "nu")?,
            k: opt(&rec[6], "K")?,
            l: opt(&rec[7], "L")?,
            trials: opt(&rec[8], "trials")?,
            value: req(&rec[9], "value")?,
            stderr: opt(&rec[10], "stderr")?,
            reference_w1: opt(&rec[11], "reference_w1")?,
        })
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

/// Row writer that flushes after every row, so an interrupted run keeps
/// everything written so far.
pub enum RowSink {
    Csv(Box<csv::Writer<Box<dyn Write>>>),
    Json { out: Box<dyn Write>, rows: usize },
}

impl RowSink {
    /// Starts a new output, writing the CSV header or the opening bracket.
    pub fn create(out: Box<dyn Write>, format: Format) -> CliResult<Self> {
        match format {
            Format::Csv => {
                let mut w = csv::Writer::from_writer(out);
                w.write_record(HEADER)?;
                w.flush()?;
                Ok(Self::Csv(Box::new(w)))
            }
            Format::Json => {
                let mut out = out;
                out.write_all(b"[")?;
                out.flush()?;
                Ok(Self::Json { out, rows: 0 })
            }
        }
    }

    /// Continues a CSV whose header is already present.
    pub fn append_csv(out: Box<dyn Write>) -> Self {
        Self::Csv(Box::new(csv::WriterBuilder::new().has_headers(false).from_writer(out)))
    }

    pub fn write(&mut self, row: &ResultRow) -> CliResult<()> {
        match self {
            Self::Csv(w) => {
                w.write_record(row.csv_fields())?;
                w.flush()?;
            }
            Self::Json { out, rows } => {
                let sep = if *rows == 0 { "\n  " } else { ",\n  " };
                out.write_all(sep.as_bytes())?;
                out.write_all(row.json_object().as_bytes())?;
                out.flush()?;
                *rows += 1;
            }
        }
        Ok(())
    }

    /// Closes the JSON array; a no-op for CSV beyond the final flush.
    pub fn finish(self) -> CliResult<()> {
        match self {
            Self::Csv(mut w) => w.flush()?,
            Self::Json { mut out, rows } => {
                out.write_all(if rows == 0 { b"]\n" } else { b"\n]\n" })?;
                out.flush()?;
            }
        }
        Ok(())
    }
}

/// Reads every row of a CSV written by [`RowSink`].
pub fn read_csv(reader: impl std::io::Read) -> CliResult<Vec<ResultRow>> {
    let mut r = csv::Reader::from_reader(reader);
    check_header(r.headers()?)?;
    r.records().map(|rec| ResultRow::from_csv_record(&rec?)).collect()
}

pub fn check_header(h: &csv::StringRecord) -> CliResult<()> {
    if h.iter().eq(HEADER.iter().copied()) {
        Ok(())
    } else {
        Err(CliError::usage(format!(
            "unexpected csv header `{}`",
            h.iter().collect::<Vec<_>>().join(",")
        )))
    }
}
