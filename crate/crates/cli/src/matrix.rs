//! Interferometer selection from `--matrix` names and `--matrix-file` JSON.

use std::str::FromStr;

use noisybs::interferometer::{
    balanced_composite, fourier, haar_unitary, uniform_lossy, LossyInterferometer, RandomSeed, UNITARY_TOL,
};
use noisybs::matcore::ComplexMatrix;
use num_complex::Complex64;

use crate::{CliError, CliResult};

#[derive(Clone, Debug, PartialEq)]
pub enum MatrixSpec {
    /// `[[1, 1], [1, −1]]/√2`.
    Balanced2,
    /// `fourierM`, the M-mode discrete Fourier matrix.
    Fourier(usize),
    /// `haar:<seed>`, Haar-random at the requested mode count.
    Haar(u64),
    /// `composite:<seed>`, `F(1 ⊕ V)` with V Haar-random.
    Composite(u64),
    /// Matrix read from a JSON file.
    File(ComplexMatrix),
}

impl FromStr for MatrixSpec {
    type Err = CliError;

    fn from_str(s: &str) -> CliResult<Self> {
        let bad = || {
            CliError::usage(format!(
                "unknown matrix `{s}` (balanced2, fourierM, haar:SEED, composite:SEED)"
            ))
        };
        if s == "balanced2" {
            return Ok(Self::Balanced2);
        }
        if let Some(m) = s.strip_prefix("fourier") {
            return m.parse().map(Self::Fourier).map_err(|_| bad());
        }
        if let Some(seed) = s.strip_prefix("haar:") {
            return seed.parse().map(Self::Haar).map_err(|_| bad());
        }
        if let Some(seed) = s.strip_prefix("composite:") {
            return seed.parse().map(Self::Composite).map_err(|_| bad());
        }
        Err(bad())
    }
}

impl MatrixSpec {
    pub fn from_file(path: &std::path::Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::usage(format!("cannot read {}: {e}", path.display())))?;
        Ok(Self::File(ComplexMatrix::from_json(&text)?))
    }

    /// Mode count fixed by the matrix itself, if any.
    pub fn modes(&self) -> Option<usize> {
        match self {
            Self::Balanced2 => Some(2),
            Self::Fourier(m) => Some(*m),
            Self::File(u) => Some(u.rows()),
            Self::Haar(_) | Self::Composite(_) => None,
        }
    }

    /// Lossy interferometer on `m` modes with transmission η. A non-unitary
    /// file matrix is taken as a transfer matrix and scaled by `√η`.
    pub fn build(&self, m: usize, eta: f64) -> CliResult<LossyInterferometer> {
        if let Some(fixed) = self.modes() {
            if fixed != m {
                return Err(CliError::usage(format!("matrix has {fixed} modes but M = {m}")));
            }
        }
        let u = match self {
            Self::Balanced2 => {
                let h = std::f64::consts::FRAC_1_SQRT_2;
                ComplexMatrix::from_real_rows(&[&[h, h], &[h, -h]])?
            }
            Self::Fourier(m) => fourier(*m)?,
            Self::Haar(seed) => haar_unitary(m, RandomSeed::new(*seed, 0))?,
            Self::Composite(seed) => {
                if m < 2 {
                    return Err(CliError::usage("composite matrices need M ≥ 2"));
                }
                balanced_composite(&haar_unitary(m - 1, RandomSeed::new(*seed, 0))?, m)?
            }
            Self::File(t) => {
                if t.unitarity_defect()? > UNITARY_TOL {
                    return Ok(LossyInterferometer::general(t.scale(Complex64::new(eta.sqrt(), 0.0)))?);
                }
                t.clone()
            }
        };
        Ok(uniform_lossy(&u, eta)?)
    }
}
