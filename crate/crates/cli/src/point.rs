//! Evaluation of one parameter point in one mode.

use serde::{Deserialize, Serialize};

use noisybs::analytics::{
    avg_delta_p1, avg_p1_approx, avg_p1_exact, var_delta_p1_asymptotic, var_delta_p1_exact, w1, AsymptoticParams,
};
use noisybs::interferometer::RandomSeed;
use noisybs::montecarlo::{default_trials, ensemble_delta_p_with, ensemble_p1_with, EnsembleOptions};
use noisybs::nocount::{delta_p_exact, p_nocount, Setup};
use noisybs::noisemodel::NoiseParams;

use crate::format::ResultRow;
use crate::matrix::MatrixSpec;
use crate::{CliError, CliResult};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    /// ΔP_L on one interferometer.
    DeltapExact,
    /// P_L on one interferometer.
    Pnocount,
    /// Haar average of ΔP₁, closed form.
    DeltapAvgAnalytic,
    /// Haar ensemble of ΔP_L.
    DeltapEnsemble,
    /// Leading-order ⟨ΔP₁⟩.
    W1,
    /// Haar average of P₁, closed form.
    P1Exact,
    /// Haar average of P₁, small-ρη approximation.
    P1Approx,
    /// Haar ensemble of P_L.
    P1Ensemble,
    /// Haar variance of ΔP₁, exact double sum.
    Variance,
    /// Haar variance of ΔP₁, leading order.
    VarianceAsymptotic,
}

impl Mode {
    pub fn name(self) -> &'static str {
        match self {
            Self::DeltapExact => "deltap_exact",
            Self::Pnocount => "pnocount",
            Self::DeltapAvgAnalytic => "deltap_avg_analytic",
            Self::DeltapEnsemble => "deltap_ensemble",
            Self::W1 => "w1",
            Self::P1Exact => "p1_exact",
            Self::P1Approx => "p1_approx",
            Self::P1Ensemble => "p1_ensemble",
            Self::Variance => "variance",
            Self::VarianceAsymptotic => "variance_asymptotic",
        }
    }

    fn uses_matrix(self) -> bool {
        matches!(self, Self::DeltapExact | Self::Pnocount)
    }

    fn is_ensemble(self) -> bool {
        matches!(self, Self::DeltapEnsemble | Self::P1Ensemble)
    }

    /// Modes that need only ρ, not N and M.
    fn rho_only(self) -> bool {
        matches!(self, Self::W1 | Self::P1Approx)
    }

    fn single_port(self) -> bool {
        matches!(
            self,
            Self::DeltapAvgAnalytic
                | Self::W1
                | Self::P1Exact
                | Self::P1Approx
                | Self::Variance
                | Self::VarianceAsymptotic
        )
    }

    fn has_cutoff(self) -> bool {
        !matches!(self, Self::Pnocount | Self::P1Exact | Self::P1Approx | Self::P1Ensemble)
    }
}

fn one() -> f64 {
    1.0
}

fn one_usize() -> usize {
    1
}

/// Parameters of a single evaluation. `M` may be given directly or through
/// `rho`, in which case `M = round(N/ρ)` and the reported ρ is `N/M`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Point {
    #[serde(rename = "N", default)]
    pub n: Option<usize>,
    #[serde(rename = "M", default)]
    pub m: Option<usize>,
    #[serde(default)]
    pub rho: Option<f64>,
    #[serde(default = "one")]
    pub eta: f64,
    #[serde(default = "one")]
    pub xi: f64,
    #[serde(default)]
    pub nu: f64,
    #[serde(rename = "K", default = "one_usize")]
    pub k: usize,
    #[serde(rename = "L", default = "one_usize")]
    pub l: usize,
    #[serde(default)]
    pub trials: Option<u64>,
    #[serde(default)]
    pub seed: Option<u64>,
    /// Matrix name for the single-interferometer modes; defaults to
    /// `haar:<seed>`.
    #[serde(default)]
    pub matrix: Option<String>,
}

impl Default for Point {
    fn default() -> Self {
        Self {
            n: None,
            m: None,
            rho: None,
            eta: 1.0,
            xi: 1.0,
            nu: 0.0,
            k: 1,
            l: 1,
            trials: None,
            seed: None,
            matrix: None,
        }
    }
}

/// A point with sizes resolved and checked against a mode.
#[derive(Clone, Debug)]
pub struct Resolved {
    mode: Mode,
    n: Option<usize>,
    m: Option<usize>,
    rho: f64,
    noise: NoiseParams,
    k: usize,
    l: usize,
    trials: u64,
    seed: u64,
    matrix: Option<MatrixSpec>,
    workers: usize,
}

impl Point {
    /// Checks the point against `mode` without evaluating anything.
    /// `matrix` overrides the point's own matrix name.
    pub fn resolve(&self, mode: Mode, matrix: Option<&MatrixSpec>, workers: usize) -> CliResult<Resolved> {
        let noise = NoiseParams::new(self.eta, self.xi, self.nu)?;
        let matrix = match (matrix, &self.matrix) {
            (Some(m), _) => Some(m.clone()),
            (None, Some(name)) => Some(name.parse()?),
            (None, None) => None,
        };
        if matrix.is_some() && !mode.uses_matrix() {
            return Err(CliError::usage(format!("mode {} does not take a matrix", mode.name())));
        }
        let m_given = self.m.or_else(|| matrix.as_ref().and_then(MatrixSpec::modes));
        let (n, m, rho) = match (self.n, m_given, self.rho) {
            (Some(n), Some(m), rho) => {
                if n == 0 || m < n {
                    return Err(CliError::usage(format!("need 1 ≤ N ≤ M, got N = {n}, M = {m}")));
                }
                let r = n as f64 / m as f64;
                if let Some(rho) = rho {
                    if (rho - r).abs() > 1e-12 {
                        return Err(CliError::usage(format!("rho = {rho} disagrees with N/M = {r}")));
                    }
                }
                (Some(n), Some(m), r)
            }
            (Some(n), None, Some(rho)) => {
                check_rho(rho)?;
                if n == 0 {
                    return Err(CliError::usage("N must be at least 1"));
                }
                let m = (n as f64 / rho).round() as usize;
                (Some(n), Some(m), n as f64 / m as f64)
            }
            (None, _, Some(rho)) if mode.rho_only() => {
                check_rho(rho)?;
                (None, None, rho)
            }
            _ if mode.rho_only() => return Err(CliError::usage(format!("mode {} needs rho or N and M", mode.name()))),
            _ => {
                return Err(CliError::usage(format!(
                    "mode {} needs N and one of M, rho",
                    mode.name()
                )))
            }
        };
        if mode.single_port() && self.l != 1 {
            return Err(CliError::usage(format!(
                "mode {} is defined for L = 1 only",
                mode.name()
            )));
        }
        if let (Some(n), Some(m)) = (n, m) {
            Setup::with_first_ports(n, m, self.k, self.l)?;
        }
        let trials = self.trials.unwrap_or_else(|| default_trials(n.unwrap_or(0)));
        if mode.is_ensemble() && trials == 0 {
            return Err(CliError::usage("trials must be at least 1"));
        }
        Ok(Resolved {
            mode,
            n,
            m,
            rho,
            noise,
            k: self.k,
            l: self.l,
            trials,
            seed: self.seed.unwrap_or(0),
            matrix,
            workers,
        })
    }
}

fn check_rho(rho: f64) -> CliResult<()> {
    if rho > 0.0 && rho <= 1.0 {
        Ok(())
    } else {
        Err(CliError::usage(format!("rho = {rho} outside (0, 1]")))
    }
}

impl Resolved {
    pub fn mode(&self) -> Mode {
        self.mode
    }

    fn sizes(&self) -> (usize, usize) {
        (self.n.unwrap_or(0), self.m.unwrap_or(0))
    }

    fn setup(&self) -> CliResult<Setup> {
        let (n, m) = self.sizes();
        let k = if self.mode.has_cutoff() { self.k } else { n };
        Ok(Setup::with_first_ports(n, m, k, self.l)?)
    }

    fn ensemble_options(&self) -> EnsembleOptions {
        EnsembleOptions::new(self.trials, RandomSeed::new(self.seed, 0)).workers(self.workers)
    }

    fn asymptotic(&self) -> CliResult<AsymptoticParams> {
        Ok(AsymptoticParams::new(self.rho, self.noise, self.k)?)
    }

    pub fn evaluate(&self) -> CliResult<ResultRow> {
        let (n, m) = self.sizes();
        let q = &self.noise;
        let mut stderr = None;
        let mut trials = None;
        let value = match self.mode {
            Mode::DeltapExact | Mode::Pnocount => {
                let spec = self.matrix.clone().unwrap_or(MatrixSpec::Haar(self.seed));
                let li = spec.build(m, q.eta)?;
                if self.mode == Mode::DeltapExact {
                    delta_p_exact(&li, &self.setup()?, q)?
                } else {
                    p_nocount(&li, &self.setup()?, q)?
                }
            }
            Mode::DeltapAvgAnalytic => avg_delta_p1(n, m, q, self.k.min(n))?,
            Mode::DeltapEnsemble | Mode::P1Ensemble => {
                let s = self.setup()?;
                let stats = if self.mode == Mode::DeltapEnsemble {
                    ensemble_delta_p_with(&s, q, &self.ensemble_options())?
                } else {
                    ensemble_p1_with(&s, q, &self.ensemble_options())?
                };
                stderr = Some(stats.stderr);
                trials = Some(stats.trials);
                stats.mean
            }
            Mode::W1 => w1(&self.asymptotic()?),
            Mode::P1Exact => avg_p1_exact(n, m, q)?,
            Mode::P1Approx => avg_p1_approx(&AsymptoticParams::new(self.rho, *q, 0)?),
            Mode::Variance => var_delta_p1_exact(n, m, q, self.k.min(n))?,
            Mode::VarianceAsymptotic => var_delta_p1_asymptotic(n, &self.asymptotic()?),
        };
        if !value.is_finite() {
            return Err(CliError::numeric(format!(
                "{} produced a non-finite value",
                self.mode.name()
            )));
        }
        let reference_w1 = if self.mode.has_cutoff() {
            self.asymptotic().ok().map(|p| w1(&p))
        } else {
            None
        };
        Ok(ResultRow {
            n: self.n,
            m: self.m,
            rho: Some(self.rho),
            eta: q.eta,
            xi: q.xi,
            nu: q.nu,
            k: self.mode.has_cutoff().then_some(self.k),
            l: Some(self.l),
            trials,
            value,
            stderr,
            reference_w1,
        })
    }
}
