//! Reporting and sample-statistics helpers for the acceptance suite.

use std::io::Write;
use std::time::{Duration, Instant};

/// Result of one acceptance criterion.
#[derive(Debug, Clone)]
pub struct Outcome {
    pub id: String,
    pub passed: bool,
    pub detail: String,
    pub elapsed: Duration,
}

/// Runs criteria in order and prints one line per criterion as it finishes.
#[derive(Debug, Default)]
pub struct Suite {
    outcomes: Vec<Outcome>,
}

impl Suite {
    pub fn new() -> Self {
        Self::default()
    }

    /// `check` returns `Ok(detail)` on pass and `Err(detail)` on failure.
    pub fn run(&mut self, id: &str, title: &str, check: impl FnOnce() -> Result<String, String>) {
        let start = Instant::now();
        let (passed, detail) = match check() {
            Ok(d) => (true, d),
            Err(d) => (false, d),
        };
        let elapsed = start.elapsed();
        let tag = if passed { "PASS" } else { "FAIL" };
        println!("[{tag}] {id} {title}: {detail} ({:.2} s)", elapsed.as_secs_f64());
        let _ = std::io::stdout().flush();
        self.outcomes.push(Outcome {
            id: id.to_string(),
            passed,
            detail,
            elapsed,
        });
    }

    pub fn outcomes(&self) -> &[Outcome] {
        &self.outcomes
    }

    pub fn failures(&self) -> Vec<&Outcome> {
        self.outcomes.iter().filter(|o| !o.passed).collect()
    }
}

/// Mean and its standard error.
pub fn mean_stderr(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Unbiased sample variance and the standard error of that estimate,
/// `sqrt((m4 − s⁴(n−3)/(n−1))/n)` with `m4` the fourth central moment.
pub fn variance_stderr(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    let m4 = values.iter().map(|v| (v - mean).powi(4)).sum::<f64>() / n;
    let se2 = (m4 - var * var * (n - 3.0) / (n - 1.0)) / n;
    (var, se2.max(0.0).sqrt())
}

/// Seconds taken by `f`, with its result.
pub fn timed<T>(f: impl FnOnce() -> T) -> (T, f64) {
    let start = Instant::now();
    let out = f();
    (out, start.elapsed().as_secs_f64())
}
