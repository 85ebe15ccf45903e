//! Haar-ensemble statistics of no-count probabilities.
//!
//! Trial t draws its unitary from stream `seed.stream + t` of the base seed,
//! so a trial's value does not depend on which worker runs it. Per-trial
//! values are gathered in trial order and reduced sequentially, which makes
//! the statistics bit-identical for any worker count.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::interferometer::{haar_unitary, uniform_lossy, RandomSeed};
use crate::nocount::{delta_p_exact, p_nocount, Setup};
use crate::noisemodel::NoiseParams;

/// Trial count used when none is given: 500 up to N = 12, 100 above.
pub fn default_trials(n: usize) -> u64 {
    if n <= 12 {
        500
    } else {
        100
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnsembleStats {
    pub mean: f64,
    pub stderr: f64,
    /// Unbiased sample variance; zero for a single trial.
    pub variance: f64,
    pub trials: u64,
    pub seed: RandomSeed,
}

impl EnsembleStats {
    pub fn from_values(values: &[f64], seed: RandomSeed) -> Result<Self> {
        if values.is_empty() {
            return Err(invalid("trials", "must be at least 1"));
        }
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let variance = if values.len() > 1 {
            values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)
        } else {
            0.0
        };
        Ok(Self {
            mean,
            stderr: (variance / n).sqrt(),
            variance,
            trials: values.len() as u64,
            seed,
        })
    }

    /// Pools two ensembles over disjoint trials.
    pub fn merge(&self, other: &Self) -> Self {
        let (n1, n2) = (self.trials as f64, other.trials as f64);
        let n = n1 + n2;
        let mean = (n1 * self.mean + n2 * other.mean) / n;
        let d = self.mean - other.mean;
        let ss = (n1 - 1.0) * self.variance + (n2 - 1.0) * other.variance + n1 * n2 / n * d * d;
        let variance = if n > 1.0 { ss / (n - 1.0) } else { 0.0 };
        Self {
            mean,
            stderr: (variance / n).sqrt(),
            variance,
            trials: self.trials + other.trials,
            seed: self.seed,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnsembleOptions {
    pub trials: u64,
    pub seed: RandomSeed,
    /// Index of the first trial; trials run over `first_trial..first_trial+trials`.
    pub first_trial: u64,
    /// Worker threads; 0 uses the global pool.
    pub workers: usize,
}

impl EnsembleOptions {
    pub fn new(trials: u64, seed: RandomSeed) -> Self {
        Self {
            trials,
            seed,
            first_trial: 1,
            workers: 0,
        }
    }

    pub fn workers(self, workers: usize) -> Self {
        Self { workers, ..self }
    }

    pub fn first_trial(self, first_trial: u64) -> Self {
        Self { first_trial, ..self }
    }

    /// Random key of trial `t`.
    pub fn trial_seed(&self, t: u64) -> RandomSeed {
        self.seed.with_stream(self.seed.stream.wrapping_add(t))
    }
}

/// Runs `kernel` once per trial and returns the values in trial order.
pub fn ensemble_values<F>(opts: &EnsembleOptions, kernel: F) -> Result<Vec<f64>>
where
    F: Fn(RandomSeed) -> Result<f64> + Sync,
{
    if opts.trials == 0 {
        return Err(invalid("trials", "must be at least 1"));
    }
    let run = || -> Result<Vec<f64>> {
        (opts.first_trial..opts.first_trial + opts.trials)
            .into_par_iter()
            .map(|t| {
                let v = kernel(opts.trial_seed(t))?;
                if v.is_finite() {
                    Ok(v)
                } else {
                    Err(Error::NonFiniteTrial(t))
                }
            })
            .collect()
    };
    if opts.workers == 0 {
        run()
    } else {
        rayon::ThreadPoolBuilder::new()
            .num_threads(opts.workers)
            .build()
            .map_err(|e| Error::ResourceRefused(format!("thread pool: {e}")))?
            .install(run)
    }
}

pub fn ensemble_with<F>(opts: &EnsembleOptions, kernel: F) -> Result<EnsembleStats>
where
    F: Fn(RandomSeed) -> Result<f64> + Sync,
{
    EnsembleStats::from_values(&ensemble_values(opts, kernel)?, opts.seed)
}

/// ΔP_L over Haar-random `√η·U`.
pub fn ensemble_delta_p(s: &Setup, noise: &NoiseParams, trials: u64, seed: RandomSeed) -> Result<EnsembleStats> {
    ensemble_delta_p_with(s, noise, &EnsembleOptions::new(trials, seed))
}

pub fn ensemble_delta_p_with(s: &Setup, noise: &NoiseParams, opts: &EnsembleOptions) -> Result<EnsembleStats> {
    s.validate()?;
    noise.validate()?;
    ensemble_with(opts, |key| {
        let li = uniform_lossy(&haar_unitary(s.n_modes, key)?, noise.eta)?;
        delta_p_exact(&li, s, noise)
    })
}

/// P_L over Haar-random `√η·U`.
pub fn ensemble_p1(s: &Setup, noise: &NoiseParams, trials: u64, seed: RandomSeed) -> Result<EnsembleStats> {
    ensemble_p1_with(s, noise, &EnsembleOptions::new(trials, seed))
}

pub fn ensemble_p1_with(s: &Setup, noise: &NoiseParams, opts: &EnsembleOptions) -> Result<EnsembleStats> {
    s.validate()?;
    noise.validate()?;
    ensemble_with(opts, |key| {
        let li = uniform_lossy(&haar_unitary(s.n_modes, key)?, noise.eta)?;
        p_nocount(&li, s, noise)
    })
}

/// Setup probing the first `int(M/N)` ports.
pub fn multiport_setup(n_bosons: usize, n_modes: usize, cutoff: usize) -> Result<Setup> {
    if n_bosons == 0 {
        return Err(invalid("n_bosons", "must be at least 1"));
    }
    let l = n_modes / n_bosons;
    if l == 0 {
        return Err(invalid("n_modes", "int(M/N) must be at least 1"));
    }
    // M = N gives L = 1; otherwise L = int(M/N) < M.
    Setup::with_first_ports(n_bosons, n_modes, cutoff, l)
}

/// ΔP_L with `L = int(M/N)` probed ports.
pub fn ensemble_delta_p_multiport(
    n_bosons: usize,
    n_modes: usize,
    cutoff: usize,
    noise: &NoiseParams,
    opts: &EnsembleOptions,
) -> Result<EnsembleStats> {
    ensemble_delta_p_with(&multiport_setup(n_bosons, n_modes, cutoff)?, noise, opts)
}
