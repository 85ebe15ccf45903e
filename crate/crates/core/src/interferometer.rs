//! Unitary and lossy linear interferometers.
//!
//! A lossy interferometer is described by its M×M transfer matrix 𝒰 whose
//! singular values are at most one; row k is the input port, column l the
//! output port. Random unitaries are keyed by [`RandomSeed`] so that each
//! ensemble trial can draw its matrix independently of the others.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{invalid, Error, Result};
use crate::matcore::ComplexMatrix;

/// Tolerance for unitarity and singular-value checks at construction.
pub const UNITARY_TOL: f64 = 1e-10;

/// Key of a reproducible random stream: `(seed, stream)` always yields the
/// same sequence, and distinct streams under one seed are independent.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
pub struct RandomSeed {
    pub seed: u64,
    pub stream: u64,
}

impl RandomSeed {
    pub fn new(seed: u64, stream: u64) -> Self {
        Self { seed, stream }
    }

    pub fn with_stream(self, stream: u64) -> Self {
        Self { stream, ..self }
    }

    /// ChaCha20 keyed by `seed`, positioned on substream `stream`.
    pub fn rng(&self) -> ChaCha20Rng {
        let mut rng = ChaCha20Rng::seed_from_u64(self.seed);
        rng.set_stream(self.stream);
        rng
    }
}

/// How the transfer matrix was built.
#[derive(Clone, Debug, PartialEq)]
pub enum LossKind {
    Unitary,
    Uniform(f64),
    Diagonal(Vec<f64>),
    General,
}

#[derive(Clone, Debug)]
pub struct LossyInterferometer {
    transfer: ComplexMatrix,
    kind: LossKind,
    /// Underlying unitary for the unitary/uniform/diagonal constructors.
    unitary: Option<ComplexMatrix>,
}

impl LossyInterferometer {
    /// Wraps a lossless unitary.
    pub fn unitary(u: ComplexMatrix) -> Result<Self> {
        u.ensure_unitary(UNITARY_TOL)?;
        Ok(Self {
            transfer: u.clone(),
            kind: LossKind::Unitary,
            unitary: Some(u),
        })
    }

    /// Any square transfer matrix with singular values ≤ 1.
    pub fn general(transfer: ComplexMatrix) -> Result<Self> {
        if !transfer.is_square() {
            return Err(Error::NotSquare(transfer.rows(), transfer.cols()));
        }
        check_contraction(&transfer)?;
        Ok(Self {
            transfer,
            kind: LossKind::General,
            unitary: None,
        })
    }

    pub fn transfer(&self) -> &ComplexMatrix {
        &self.transfer
    }

    pub fn kind(&self) -> &LossKind {
        &self.kind
    }

    pub fn underlying_unitary(&self) -> Option<&ComplexMatrix> {
        self.unitary.as_ref()
    }

    pub fn modes(&self) -> usize {
        self.transfer.rows()
    }
}

fn check_contraction(m: &ComplexMatrix) -> Result<()> {
    if let Some(&top) = m.singular_values().first() {
        if top > 1.0 + UNITARY_TOL {
            return Err(Error::SingularValueAboveOne(top));
        }
    }
    Ok(())
}

/// Haar-random M×M unitary.
///
/// QR of a complex Ginibre matrix, then each column of Q is multiplied by the
/// phase of the matching diagonal entry of R. Without that phase fix the
/// result is not Haar distributed.
pub fn haar_unitary(m: usize, seed: RandomSeed) -> Result<ComplexMatrix> {
    if m == 0 {
        return Err(invalid("m", "must be at least 1"));
    }
    let mut rng = seed.rng();
    let scale = std::f64::consts::FRAC_1_SQRT_2;
    // Row-major draw order, fixed so that the stream fully determines U.
    let z = ComplexMatrix::from_fn(m, m, |_, _| {
        let re: f64 = StandardNormal.sample(&mut rng);
        let im: f64 = StandardNormal.sample(&mut rng);
        Complex64::new(re * scale, im * scale)
    });
    let qr = z.to_nalgebra().qr();
    let (q, r) = (qr.q(), qr.r());
    let mut u = ComplexMatrix::from_nalgebra(&q);
    for j in 0..m {
        let d = r[(j, j)];
        let phase = if d.norm() > 0.0 {
            d / d.norm()
        } else {
            Complex64::new(1.0, 0.0)
        };
        for i in 0..m {
            u[(i, j)] *= phase;
        }
    }
    Ok(u)
}

/// Discrete Fourier multiport, `F[k,l] = exp(2πi·k·l/m)/√m` with k, l
/// counted from 1.
pub fn fourier(m: usize) -> Result<ComplexMatrix> {
    if m == 0 {
        return Err(invalid("m", "must be at least 1"));
    }
    let norm = 1.0 / (m as f64).sqrt();
    Ok(ComplexMatrix::from_fn(m, m, |i, j| {
        // reduce k·l mod m before scaling to keep the phase exact
        let kl = ((i + 1) * (j + 1)) % m;
        Complex64::from_polar(norm, 2.0 * PI * kl as f64 / m as f64)
    }))
}

/// `F(m) · (1 ⊕ v)`: unitary whose output port 0 is balanced,
/// `|U[k,0]|² = 1/m` for every input k.
pub fn balanced_composite(v: &ComplexMatrix, m: usize) -> Result<ComplexMatrix> {
    if m == 0 {
        return Err(invalid("m", "must be at least 1"));
    }
    if v.rows() != m - 1 || v.cols() != m - 1 {
        return Err(Error::DimensionMismatch {
            expected: m - 1,
            got: v.rows(),
        });
    }
    if m > 1 {
        v.ensure_unitary(UNITARY_TOL)?;
    }
    let mut block = ComplexMatrix::zeros(m, m);
    block[(0, 0)] = Complex64::new(1.0, 0.0);
    for i in 1..m {
        for j in 1..m {
            block[(i, j)] = v[(i - 1, j - 1)];
        }
    }
    fourier(m)?.matmul(&block)
}

/// `√η · u`: every boson is transmitted with probability η.
pub fn uniform_lossy(u: &ComplexMatrix, eta: f64) -> Result<LossyInterferometer> {
    if !(0.0..=1.0).contains(&eta) {
        return Err(invalid("eta", format!("{eta} outside [0, 1]")));
    }
    u.ensure_unitary(UNITARY_TOL)?;
    Ok(LossyInterferometer {
        transfer: u.scale(Complex64::new(eta.sqrt(), 0.0)),
        kind: LossKind::Uniform(eta),
        unitary: Some(u.clone()),
    })
}

/// `√D · u` with `D = diag(d)`: input port k transmits with probability d[k].
pub fn diagonal_lossy(u: &ComplexMatrix, d: &[f64]) -> Result<LossyInterferometer> {
    if d.len() != u.rows() {
        return Err(Error::DimensionMismatch {
            expected: u.rows(),
            got: d.len(),
        });
    }
    if let Some(bad) = d.iter().find(|x| !(0.0..=1.0).contains(*x)) {
        return Err(invalid("d", format!("entry {bad} outside [0, 1]")));
    }
    u.ensure_unitary(UNITARY_TOL)?;
    let transfer = ComplexMatrix::from_fn(u.rows(), u.cols(), |i, j| u[(i, j)] * d[i].sqrt());
    Ok(LossyInterferometer {
        transfer,
        kind: LossKind::Diagonal(d.to_vec()),
        unitary: Some(u.clone()),
    })
}

/// 2M×2M unitary dilation of a lossy transfer matrix,
///
/// ```text
/// [  𝒰       V  ]
/// [ -V†F    √B  ]
/// ```
///
/// with `B = 𝒰𝒰†`, `𝒰 = √B·F` and `VV† = I − B`. Built from the SVD
/// `𝒰 = P Σ Q†`: `√B = PΣP†`, `F = PQ†`, `V = P√(I−Σ²)P†`. When 𝒰 is singular
/// the SVD supplies the unitary completion of F; the detected-port
/// statistics do not depend on that choice.
pub fn unitary_embedding(li: &LossyInterferometer) -> Result<ComplexMatrix> {
    let t = li.transfer();
    let m = t.rows();
    let (p, sigma, q) = jacobi_svd(t);
    if let Some(&bad) = sigma.iter().find(|&&s| s > 1.0 + UNITARY_TOL) {
        return Err(Error::SingularValueAboveOne(bad));
    }
    let p_adj = p.adjoint();
    let diag = |f: &dyn Fn(f64) -> f64| {
        ComplexMatrix::diagonal_matrix(&sigma.iter().map(|&s| Complex64::new(f(s), 0.0)).collect::<Vec<_>>())
    };
    let sqrt_b = p.matmul(&diag(&|s| s.min(1.0)))?.matmul(&p_adj)?;
    let v = p
        .matmul(&diag(&|s| {
            // Rounding leaves lossless σ at 1 − O(ε); the unitarity cost of dropping it is second order.
            let loss = 1.0 - s.min(1.0) * s.min(1.0);
            if loss <= 1e-12 {
                0.0
            } else {
                loss.sqrt()
            }
        }))?
        .matmul(&p_adj)?;
    let f = p.matmul(&q.adjoint())?;
    let lower_left = v.adjoint().matmul(&f)?.scale(Complex64::new(-1.0, 0.0));

    let mut out = ComplexMatrix::zeros(2 * m, 2 * m);
    for i in 0..m {
        for j in 0..m {
            out[(i, j)] = t[(i, j)];
            out[(i, j + m)] = v[(i, j)];
            out[(i + m, j)] = lower_left[(i, j)];
            out[(i + m, j + m)] = sqrt_b[(i, j)];
        }
    }
    Ok(out)
}

/// One-sided Jacobi SVD `a = P·diag(σ)·Q†` of a square matrix. Columns of
/// `a·Q` are rotated until pairwise orthogonal to working precision, which
/// keeps the reconstruction error at rounding level even for tiny σ.
fn jacobi_svd(a: &ComplexMatrix) -> (ComplexMatrix, Vec<f64>, ComplexMatrix) {
    let m = a.rows();
    let mut w: Vec<Vec<Complex64>> = (0..m).map(|j| (0..m).map(|i| a[(i, j)]).collect()).collect();
    let mut q: Vec<Vec<Complex64>> = (0..m)
        .map(|j| {
            (0..m)
                .map(|i| Complex64::new(f64::from(u8::from(i == j)), 0.0))
                .collect()
        })
        .collect();
    let dot = |x: &[Complex64], y: &[Complex64]| x.iter().zip(y).map(|(a, b)| a.conj() * b).sum::<Complex64>();
    let norm2 = |x: &[Complex64]| x.iter().map(|z| z.norm_sqr()).sum::<f64>();

    for _ in 0..100 {
        let mut rotated = false;
        for pi in 0..m {
            for qi in pi + 1..m {
                let alpha = norm2(&w[pi]);
                let beta = norm2(&w[qi]);
                let gamma = dot(&w[pi], &w[qi]);
                let g = gamma.norm();
                // Columns below the null threshold are replaced afterwards.
                if alpha.min(beta) <= 1e-200 || g <= f64::EPSILON * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let phase = Complex64::new(gamma.re / g, -gamma.im / g);
                let zeta = (beta - alpha) / (2.0 * g);
                let tan = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + tan * tan).sqrt();
                let s = c * tan;
                for cols in [&mut w, &mut q] {
                    let (lo, hi) = cols.split_at_mut(qi);
                    for (a, b) in lo[pi].iter_mut().zip(hi[0].iter_mut()) {
                        let (x, y) = (*a, *b * phase);
                        *a = x * c - y * s;
                        *b = x * s + y * c;
                    }
                }
            }
        }
        if !rotated {
            break;
        }
    }

    let sigma: Vec<f64> = w.iter().map(|col| norm2(col).sqrt()).collect();
    let mut basis: Vec<Vec<Complex64>> = Vec::with_capacity(m);
    let mut missing = Vec::new();
    for (j, col) in w.iter().enumerate() {
        // Below this the squared norm loses precision to underflow.
        if sigma[j] > 1e-100 {
            basis.push(col.iter().map(|z| z / sigma[j]).collect());
        } else {
            basis.push(vec![Complex64::new(0.0, 0.0); m]);
            missing.push(j);
        }
    }
    // Complete the null columns by Gram–Schmidt on the best standard basis vector.
    for j in missing {
        let mut best = (0.0, Vec::new());
        for e in 0..m {
            let mut v = vec![Complex64::new(0.0, 0.0); m];
            v[e] = Complex64::new(1.0, 0.0);
            for _ in 0..2 {
                for b in &basis {
                    let d = dot(b, &v);
                    v.iter_mut().zip(b).for_each(|(x, y)| *x -= d * y);
                }
            }
            let n = norm2(&v).sqrt();
            if n > best.0 {
                best = (n, v);
            }
        }
        basis[j] = best.1.iter().map(|z| z / best.0).collect();
    }
    let p = ComplexMatrix::from_fn(m, m, |i, j| basis[j][i]);
    let q = ComplexMatrix::from_fn(m, m, |i, j| q[j][i]);
    (p, sigma, q)
}
