//! No-count probabilities in a subset of output ports.
//!
//! Bosons enter input ports `0..N`, one per port. With `𝒰` the lossy
//! transfer matrix and Ω the probed output ports, the probe matrix is
//! `A[k,j] = δ_kj − Σ_{l∈Ω} 𝒰[k,l]·conj(𝒰[j,l])` and the probability of no
//! counts in Ω is `e^{−Lν}·Σ_σ J(σ) Π_k A[k,σ(k)]`. For the full model this
//! collapses to `per(A(ξ))`, where `A(ξ)` scales the off-diagonal entries
//! by ξ.

use std::collections::BTreeMap;

use itertools::Itertools;
use num_complex::Complex64;

use crate::error::{invalid, Error, Result};
use crate::interferometer::{LossKind, LossyInterferometer};
use crate::matcore::{permanent_with, principal_submatrix, ComplexMatrix, PermanentOptions};
use crate::noisemodel::{for_each_permutation, DistinguishabilityModel, NoiseParams, PermutationWeight};

/// Largest N accepted by [`delta_p_bruteforce`].
pub const BRUTEFORCE_CAP: usize = 10;
/// Default bound on `Σ_{c≤K} C(N,c)·2^c`, the inner work of [`delta_p_exact`].
pub const DEFAULT_WORK_BUDGET: f64 = 1e9;

const REALITY_TOL: f64 = 1e-10;

#[derive(Clone, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct Setup {
    pub n_bosons: usize,
    pub n_modes: usize,
    /// K. Values above N mean no truncation.
    pub cutoff: usize,
    /// Ω, 0-based output ports, sorted and distinct.
    pub probe_ports: Vec<usize>,
}

impl Setup {
    pub fn new(n_bosons: usize, n_modes: usize, cutoff: usize, probe_ports: Vec<usize>) -> Result<Self> {
        let mut ports = probe_ports;
        ports.sort_unstable();
        let s = Self {
            n_bosons,
            n_modes,
            cutoff,
            probe_ports: ports,
        };
        s.validate()?;
        Ok(s)
    }

    /// Probes the first `l` output ports.
    pub fn with_first_ports(n_bosons: usize, n_modes: usize, cutoff: usize, l: usize) -> Result<Self> {
        Self::new(n_bosons, n_modes, cutoff, (0..l).collect())
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_bosons == 0 {
            return Err(invalid("n_bosons", "must be at least 1"));
        }
        if self.n_modes < self.n_bosons {
            return Err(invalid(
                "n_modes",
                format!("M = {} is smaller than N = {}", self.n_modes, self.n_bosons),
            ));
        }
        if self.probe_ports.is_empty() {
            return Err(invalid("probe_ports", "must not be empty"));
        }
        if self.probe_ports.len() >= self.n_modes {
            return Err(invalid("probe_ports", "L must be smaller than M"));
        }
        if let Some(&p) = self.probe_ports.iter().find(|&&p| p >= self.n_modes) {
            return Err(Error::IndexOutOfRange {
                index: p,
                dim: self.n_modes,
            });
        }
        if self.probe_ports.windows(2).any(|w| w[0] == w[1]) {
            return Err(invalid("probe_ports", "ports must be distinct"));
        }
        Ok(())
    }

    pub fn l(&self) -> usize {
        self.probe_ports.len()
    }

    fn check_against(&self, li: &LossyInterferometer) -> Result<()> {
        self.validate()?;
        if li.modes() != self.n_modes {
            return Err(Error::DimensionMismatch {
                expected: self.n_modes,
                got: li.modes(),
            });
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ProbeMatrix {
    pub a: ComplexMatrix,
    pub a_xi: ComplexMatrix,
}

pub fn probe_matrix(li: &LossyInterferometer, s: &Setup, xi: f64) -> Result<ProbeMatrix> {
    s.check_against(li)?;
    let u = li.transfer();
    let n = s.n_bosons;
    let a = ComplexMatrix::from_fn(n, n, |k, j| {
        let overlap: Complex64 = s.probe_ports.iter().map(|&l| u[(k, l)] * u[(j, l)].conj()).sum();
        let delta = if k == j { 1.0 } else { 0.0 };
        Complex64::new(delta, 0.0) - overlap
    });
    let a_xi = ComplexMatrix::from_fn(n, n, |k, j| if k == j { a[(k, j)] } else { a[(k, j)] * xi });
    Ok(ProbeMatrix { a, a_xi })
}

fn real_part(z: Complex64) -> Result<f64> {
    if z.im.abs() > REALITY_TOL * (1.0 + z.re.abs()) {
        return Err(Error::NonRealProbability { re: z.re, im: z.im });
    }
    Ok(z.re)
}

fn clamp_probability(p: f64) -> Result<f64> {
    if !(-REALITY_TOL..=1.0 + REALITY_TOL).contains(&p) {
        return Err(Error::ProbabilityOutOfRange(p));
    }
    Ok(p.clamp(0.0, 1.0))
}

fn dark_factor(s: &Setup, noise: &NoiseParams) -> f64 {
    (-(s.l() as f64) * noise.nu).exp()
}

/// `P_L = e^{−Lν}·per(A(ξ))`.
pub fn p_nocount(li: &LossyInterferometer, s: &Setup, noise: &NoiseParams) -> Result<f64> {
    p_nocount_with(li, s, noise, &PermanentOptions::default())
}

pub fn p_nocount_with(
    li: &LossyInterferometer,
    s: &Setup,
    noise: &NoiseParams,
    opts: &PermanentOptions,
) -> Result<f64> {
    noise.validate()?;
    let pm = probe_matrix(li, s, noise.xi)?;
    let per = real_part(permanent_with(&pm.a_xi, opts)?)?;
    clamp_probability(dark_factor(s, noise) * per)
}

/// Options for the inclusion–exclusion evaluation of ΔP.
#[derive(Clone, Copy, Debug)]
pub struct ExactOptions {
    pub work_budget: f64,
    pub permanent: PermanentOptions,
}

impl Default for ExactOptions {
    fn default() -> Self {
        Self {
            work_budget: DEFAULT_WORK_BUDGET,
            permanent: PermanentOptions::default(),
        }
    }
}

fn binomial(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// `Σ_{s=N−K}^{N} (−1)^{N−K−s}·C(s−1, N−K−1)·f_s`: the sum over permutations
/// with at least N−K fixed points, weighted by `Π A(ξ)[k,σ(k)]`.
///
/// `f_s` sums, over s-sets S of fixed points, `Π_{i∈S} A_ii` times the
/// permanent of `A(ξ)` restricted to the complement of S. Requires K < N.
fn restricted_sum(a_xi: &ComplexMatrix, k: usize, opts: &ExactOptions) -> Result<Complex64> {
    let n = a_xi.rows();
    debug_assert!(k < n);
    // No permutation has exactly N−1 fixed points, so K = 1 selects the
    // same set as K = 0.
    let k = if k == 1 { 0 } else { k };
    let work: f64 = (0..=k).map(|c| binomial(n, c) * 2f64.powi(c as i32)).sum();
    if work > opts.work_budget {
        return Err(Error::ResourceRefused(format!(
            "inclusion-exclusion at N = {n}, K = {k} needs ~{work:.3e} operations (budget {:.3e})",
            opts.work_budget
        )));
    }
    let diag: Vec<Complex64> = (0..n).map(|i| a_xi[(i, i)]).collect();
    let first = n - k;
    let mut total = Complex64::new(0.0, 0.0);
    // complement size c = N − s runs over 0..=K
    for c in 0..=k {
        let s = n - c;
        let coeff = binomial(s - 1, first - 1);
        let sign = if (s - first).is_multiple_of(2) { 1.0 } else { -1.0 };
        let mut f_s = Complex64::new(0.0, 0.0);
        for comp in (0..n).combinations(c) {
            let mut in_comp = vec![false; n];
            for &i in &comp {
                in_comp[i] = true;
            }
            let diag_prod: Complex64 = (0..n).filter(|&i| !in_comp[i]).map(|i| diag[i]).product();
            if diag_prod == Complex64::new(0.0, 0.0) {
                continue;
            }
            let sub = principal_submatrix(a_xi, &comp)?;
            f_s += diag_prod * permanent_with(&sub, &opts.permanent)?;
        }
        total += f_s * (sign * coeff);
    }
    Ok(total)
}

/// `P_L^{(K)}`: the no-count probability when only permutations with at
/// least N−K fixed points interfere.
pub fn p_nocount_reduced(li: &LossyInterferometer, s: &Setup, noise: &NoiseParams) -> Result<f64> {
    p_nocount_reduced_with(li, s, noise, &ExactOptions::default())
}

pub fn p_nocount_reduced_with(
    li: &LossyInterferometer,
    s: &Setup,
    noise: &NoiseParams,
    opts: &ExactOptions,
) -> Result<f64> {
    if s.cutoff >= s.n_bosons {
        return p_nocount_with(li, s, noise, &opts.permanent);
    }
    noise.validate()?;
    let pm = probe_matrix(li, s, noise.xi)?;
    let value = real_part(restricted_sum(&pm.a_xi, s.cutoff, opts)?)?;
    clamp_probability(dark_factor(s, noise) * value)
}

/// `ΔP_L = P_L − P_L^{(K)}` by inclusion–exclusion over fixed-point sets.
/// Costs one N×N permanent plus `C(N,c)` permanents of each size `c ≤ K`.
pub fn delta_p_exact(li: &LossyInterferometer, s: &Setup, noise: &NoiseParams) -> Result<f64> {
    delta_p_exact_with(li, s, noise, &ExactOptions::default())
}

pub fn delta_p_exact_with(
    li: &LossyInterferometer,
    s: &Setup,
    noise: &NoiseParams,
    opts: &ExactOptions,
) -> Result<f64> {
    s.check_against(li)?;
    noise.validate()?;
    if s.cutoff >= s.n_bosons {
        return Ok(0.0);
    }
    let pm = probe_matrix(li, s, noise.xi)?;
    let restricted = restricted_sum(&pm.a_xi, s.cutoff, opts)?;
    let f0 = permanent_with(&pm.a_xi, &opts.permanent)?;
    real_part((f0 - restricted) * dark_factor(s, noise))
}

/// `e^{−Lν}·Σ_{σ∈S_N} (j_a(σ) − j_b(σ))·Π_k A[k,σ(k)]` by enumerating S_N.
pub fn delta_p_bruteforce(
    li: &LossyInterferometer,
    s: &Setup,
    noise: &NoiseParams,
    j_a: &dyn PermutationWeight,
    j_b: &dyn PermutationWeight,
) -> Result<f64> {
    s.check_against(li)?;
    noise.validate()?;
    let n = s.n_bosons;
    if n > BRUTEFORCE_CAP {
        return Err(Error::ResourceRefused(format!(
            "brute force over S_{n} exceeds the cap N ≤ {BRUTEFORCE_CAP}"
        )));
    }
    let a = probe_matrix(li, s, noise.xi)?.a;
    let mut total = Complex64::new(0.0, 0.0);
    for_each_permutation(n, |p| {
        let w = j_a.weight(p) - j_b.weight(p);
        if w != 0.0 {
            let prod: Complex64 = p.iter().enumerate().map(|(k, &j)| a[(k, j)]).product();
            total += prod * w;
        }
    });
    real_part(total * dark_factor(s, noise))
}

/// Brute force with the default pair (full, reduced(K)) at the noise ξ.
pub fn delta_p_bruteforce_default(li: &LossyInterferometer, s: &Setup, noise: &NoiseParams) -> Result<f64> {
    let full = DistinguishabilityModel::full(noise.xi);
    let reduced = DistinguishabilityModel::reduced(s.cutoff, noise.xi);
    delta_p_bruteforce(li, s, noise, &full, &reduced)
}

/// Output configuration (occupation per mode) to probability.
pub type Distribution = BTreeMap<Vec<usize>, f64>;

pub const SMALL_MAX_BOSONS: usize = 5;
pub const SMALL_MAX_MODES: usize = 6;

fn transmission(li: &LossyInterferometer) -> Result<f64> {
    match li.kind() {
        LossKind::Unitary => Ok(1.0),
        LossKind::Uniform(eta) => Ok(*eta),
        _ => Err(invalid(
            "li",
            "output distribution needs a uniformly lossy interferometer",
        )),
    }
}

/// All occupation vectors of `modes` modes with `total` bosons.
fn configurations(modes: usize, total: usize) -> Vec<Vec<usize>> {
    fn rec(modes: usize, left: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() + 1 == modes {
            cur.push(left);
            out.push(cur.clone());
            cur.pop();
            return;
        }
        for x in (0..=left).rev() {
            cur.push(x);
            rec(modes, left - x, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(modes, total, &mut Vec::with_capacity(modes), &mut out);
    out
}

fn factorial(n: usize) -> f64 {
    (2..=n).map(|x| x as f64).product()
}

/// Permutations of `0..n` and an index from the base-n encoding of a
/// permutation to its weight under `model`.
struct PermutationTable {
    perms: Vec<Vec<usize>>,
    inverses: Vec<Vec<usize>>,
    weight: Vec<f64>,
    n: usize,
}

impl PermutationTable {
    fn new(n: usize, model: &DistinguishabilityModel) -> Self {
        let mut perms = Vec::new();
        for_each_permutation(n, |p| perms.push(p.to_vec()));
        let inverses = perms
            .iter()
            .map(|p| {
                let mut inv = vec![0; n];
                for (k, &v) in p.iter().enumerate() {
                    inv[v] = k;
                }
                inv
            })
            .collect();
        let mut weight = vec![0.0; n.pow(n as u32).max(1)];
        for p in &perms {
            weight[Self::encode(n, p)] = model.weight(p);
        }
        Self {
            perms,
            inverses,
            weight,
            n,
        }
    }

    fn encode(n: usize, p: &[usize]) -> usize {
        p.iter().rev().fold(0, |acc, &x| acc * n + x)
    }

    /// Weight of `σ1 ∘ σ2⁻¹`.
    fn composed_weight(&self, i1: usize, i2: usize) -> f64 {
        let (s1, inv2) = (&self.perms[i1], &self.inverses[i2]);
        let code = inv2.iter().rev().fold(0, |acc, &x| acc * self.n + s1[x]);
        self.weight[code]
    }
}

/// Full detection distribution of a tiny uniformly lossy system without
/// dark counts, by direct double sums over `S_n` for every detected subset.
///
/// Entries always sum to one. A truncated model such as `reduced(K)` need
/// not be positive definite on `S_n`, so its entries can be slightly
/// negative; they are returned as computed.
pub fn output_distribution_small(
    li: &LossyInterferometer,
    s: &Setup,
    noise: &NoiseParams,
    model: &DistinguishabilityModel,
) -> Result<Distribution> {
    s.check_against(li)?;
    noise.validate()?;
    let (n_total, m) = (s.n_bosons, s.n_modes);
    if n_total > SMALL_MAX_BOSONS || m > SMALL_MAX_MODES {
        return Err(Error::ResourceRefused(format!(
            "full distribution limited to N ≤ {SMALL_MAX_BOSONS}, M ≤ {SMALL_MAX_MODES}"
        )));
    }
    if noise.nu != 0.0 {
        return Err(invalid("nu", "full distribution is computed without dark counts"));
    }
    let eta = transmission(li)?;
    if (eta - noise.eta).abs() > 1e-12 {
        return Err(invalid(
            "eta",
            format!(
                "noise transmission {} differs from the interferometer's {eta}",
                noise.eta
            ),
        ));
    }
    let u = li
        .underlying_unitary()
        .ok_or_else(|| invalid("li", "missing underlying unitary"))?;

    let mut dist = Distribution::new();
    for n in 0..=n_total {
        let loss_weight = eta.powi(n as i32) * (1.0 - eta).powi((n_total - n) as i32);
        let table = PermutationTable::new(n, model);
        let subsets: Vec<Vec<usize>> = (0..n_total).combinations(n).collect();
        for config in configurations(m, n) {
            let ports: Vec<usize> = config
                .iter()
                .enumerate()
                .flat_map(|(l, &c)| std::iter::repeat_n(l, c))
                .collect();
            let mult: f64 = config.iter().map(|&c| factorial(c)).product();
            let mut sum = Complex64::new(0.0, 0.0);
            if loss_weight > 0.0 {
                for k in &subsets {
                    for (i1, s1) in table.perms.iter().enumerate() {
                        for (i2, s2) in table.perms.iter().enumerate() {
                            let w = table.composed_weight(i1, i2);
                            if w == 0.0 {
                                continue;
                            }
                            let prod: Complex64 = (0..n)
                                .map(|a| u[(k[s1[a]], ports[a])].conj() * u[(k[s2[a]], ports[a])])
                                .product();
                            sum += prod * w;
                        }
                    }
                }
            }
            dist.insert(config, real_part(sum)? * loss_weight / mult);
        }
    }
    Ok(dist)
}

/// `½ Σ |p − q|` over a shared configuration space.
pub fn tvd(p: &Distribution, q: &Distribution) -> Result<f64> {
    if p.len() != q.len() || p.keys().zip(q.keys()).any(|(a, b)| a != b) {
        return Err(Error::MismatchedSpaces);
    }
    Ok(0.5 * p.values().zip(q.values()).map(|(a, b)| (a - b).abs()).sum::<f64>())
}

/// Largest number of modes [`best_probe_subset`] searches.
pub const SUBSET_SEARCH_MAX_MODES: usize = 12;

/// Exhaustive search over every nonempty proper subset Ω for the largest
/// `|ΔP_L|`. Only practical for a handful of modes.
pub fn best_probe_subset(
    li: &LossyInterferometer,
    n_bosons: usize,
    cutoff: usize,
    noise: &NoiseParams,
) -> Result<(Vec<usize>, f64)> {
    let m = li.modes();
    if m > SUBSET_SEARCH_MAX_MODES {
        return Err(Error::ResourceRefused(format!(
            "subset search limited to M ≤ {SUBSET_SEARCH_MAX_MODES}"
        )));
    }
    let mut best: Option<(Vec<usize>, f64)> = None;
    for mask in 1u32..(1 << m) - 1 {
        let ports: Vec<usize> = (0..m).filter(|&l| mask >> l & 1 == 1).collect();
        let s = Setup::new(n_bosons, m, cutoff, ports)?;
        let value = delta_p_exact(li, &s, noise)?;
        if best.as_ref().is_none_or(|(_, b)| value.abs() > b.abs()) {
            best = Some((s.probe_ports, value));
        }
    }
    best.ok_or_else(|| invalid("li", "needs at least two modes"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::interferometer::{haar_unitary, uniform_lossy, RandomSeed};

    fn balanced2() -> ComplexMatrix {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        ComplexMatrix::from_real_rows(&[&[h, h], &[h, -h]]).unwrap()
    }

    fn hom() -> (LossyInterferometer, Setup) {
        let li = uniform_lossy(&balanced2(), 1.0).unwrap();
        (li, Setup::new(2, 2, 1, vec![0]).unwrap())
    }

    fn noise(eta: f64, xi: f64, nu: f64) -> NoiseParams {
        NoiseParams::new(eta, xi, nu).unwrap()
    }

    #[test]
    fn setup_validation() {
        assert!(Setup::new(0, 2, 0, vec![0]).is_err());
        assert!(Setup::new(3, 2, 0, vec![0]).is_err());
        assert!(Setup::new(2, 2, 0, vec![]).is_err());
        assert!(Setup::new(2, 2, 0, vec![0, 1]).is_err());
        assert!(Setup::new(2, 3, 0, vec![3]).is_err());
        assert!(Setup::new(2, 4, 0, vec![1, 1]).is_err());
        assert_eq!(Setup::new(2, 4, 5, vec![2, 0]).unwrap().probe_ports, vec![0, 2]);
    }

    #[test]
    fn probe_matrix_cases() {
        let (li, s) = hom();
        let pm = probe_matrix(&li, &s, 1.0).unwrap();
        let expect = ComplexMatrix::from_real_rows(&[&[0.5, -0.5], &[-0.5, 0.5]]).unwrap();
        assert!(pm.a.max_abs_diff(&expect).unwrap() < 1e-15);

        let dark = uniform_lossy(&balanced2(), 0.0).unwrap();
        let pm = probe_matrix(&dark, &s, 1.0).unwrap();
        assert_eq!(pm.a, ComplexMatrix::identity(2));

        let u = haar_unitary(5, RandomSeed::new(3, 0)).unwrap();
        let li = uniform_lossy(&u, 0.7).unwrap();
        let s = Setup::with_first_ports(3, 5, 1, 2).unwrap();
        let pm = probe_matrix(&li, &s, 0.0).unwrap();
        for k in 0..3 {
            for j in 0..3 {
                if k != j {
                    assert_eq!(pm.a_xi[(k, j)], Complex64::new(0.0, 0.0));
                }
            }
        }
        let wrong = Setup::with_first_ports(3, 6, 1, 2).unwrap();
        assert!(matches!(
            probe_matrix(&li, &wrong, 1.0),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn hom_values() {
        let (li, s) = hom();
        let q = noise(1.0, 1.0, 0.0);
        assert!((p_nocount(&li, &s, &q).unwrap() - 0.5).abs() < 1e-12);
        assert!((p_nocount(&li, &s, &noise(1.0, 0.0, 0.0)).unwrap() - 0.25).abs() < 1e-12);
        assert!((p_nocount_reduced(&li, &s, &q).unwrap() - 0.25).abs() < 1e-12);
        assert!((delta_p_exact(&li, &s, &q).unwrap() - 0.25).abs() < 1e-12);
        assert!((delta_p_bruteforce_default(&li, &s, &q).unwrap() - 0.25).abs() < 1e-12);
    }

    #[test]
    fn total_loss_gives_dark_factor() {
        let li = uniform_lossy(&haar_unitary(4, RandomSeed::new(1, 0)).unwrap(), 0.0).unwrap();
        let s = Setup::with_first_ports(3, 4, 1, 2).unwrap();
        let p = p_nocount(&li, &s, &noise(0.0, 1.0, 0.3)).unwrap();
        assert!((p - (-0.6f64).exp()).abs() < 1e-15);
    }

    #[test]
    fn delta_p_trivial_cases() {
        let u = haar_unitary(8, RandomSeed::new(9, 0)).unwrap();
        let li = uniform_lossy(&u, 0.8).unwrap();
        let q = noise(0.8, 1.0, 0.0);
        for k in [5, 6, 99] {
            let s = Setup::with_first_ports(5, 8, k, 1).unwrap();
            assert_eq!(delta_p_exact(&li, &s, &q).unwrap(), 0.0);
        }
        let s = Setup::with_first_ports(5, 8, 2, 1).unwrap();
        assert!(delta_p_exact(&li, &s, &noise(0.8, 0.0, 0.0)).unwrap().abs() < 1e-14);
        let full = DistinguishabilityModel::full(1.0);
        assert_eq!(delta_p_bruteforce(&li, &s, &q, &full, &full).unwrap(), 0.0);
    }

    #[test]
    fn reduced_at_small_cutoff_is_diagonal_product() {
        let u = haar_unitary(6, RandomSeed::new(2, 0)).unwrap();
        let li = uniform_lossy(&u, 0.9).unwrap();
        let q = noise(0.9, 0.6, 0.1);
        for k in [0, 1] {
            let s = Setup::with_first_ports(4, 6, k, 2).unwrap();
            let pm = probe_matrix(&li, &s, q.xi).unwrap();
            let diag: f64 = (0..4).map(|i| pm.a[(i, i)].re).product();
            let expect = (-0.2f64).exp() * diag;
            assert!((p_nocount_reduced(&li, &s, &q).unwrap() - expect).abs() < 1e-14);
        }
    }

    #[test]
    fn exact_matches_bruteforce_on_one_case() {
        let u = haar_unitary(9, RandomSeed::new(42, 0)).unwrap();
        let li = uniform_lossy(&u, 0.8).unwrap();
        let q = noise(0.8, 0.7, 0.0);
        let s = Setup::with_first_ports(6, 9, 2, 1).unwrap();
        let exact = delta_p_exact(&li, &s, &q).unwrap();
        let brute = delta_p_bruteforce_default(&li, &s, &q).unwrap();
        assert!((exact - brute).abs() < 1e-10, "{exact} vs {brute}");
    }

    #[test]
    fn budget_and_caps() {
        let u = haar_unitary(12, RandomSeed::new(1, 0)).unwrap();
        let li = uniform_lossy(&u, 0.8).unwrap();
        let q = noise(0.8, 1.0, 0.0);
        let s = Setup::with_first_ports(11, 12, 3, 1).unwrap();
        let opts = ExactOptions {
            work_budget: 10.0,
            ..Default::default()
        };
        assert!(matches!(
            delta_p_exact_with(&li, &s, &q, &opts),
            Err(Error::ResourceRefused(_))
        ));
        assert!(matches!(
            delta_p_bruteforce_default(&li, &s, &q),
            Err(Error::ResourceRefused(_))
        ));
    }

    #[test]
    fn hom_distributions_and_tvd() {
        let (li, s) = hom();
        let q = noise(1.0, 1.0, 0.0);
        let quantum = output_distribution_small(&li, &s, &q, &DistinguishabilityModel::full(1.0)).unwrap();
        let classical = output_distribution_small(&li, &s, &q, &DistinguishabilityModel::full(0.0)).unwrap();
        let reduced = output_distribution_small(&li, &s, &q, &DistinguishabilityModel::reduced(1, 1.0)).unwrap();
        assert!((quantum[&vec![2, 0]] - 0.5).abs() < 1e-12);
        assert!((quantum[&vec![0, 2]] - 0.5).abs() < 1e-12);
        assert!(quantum[&vec![1, 1]].abs() < 1e-12);
        assert!((classical[&vec![1, 1]] - 0.5).abs() < 1e-12);
        assert!((classical[&vec![2, 0]] - 0.25).abs() < 1e-12);
        assert!((tvd(&quantum, &classical).unwrap() - 0.5).abs() < 1e-12);
        assert!((tvd(&quantum, &reduced).unwrap() - 0.5).abs() < 1e-12);
        assert_eq!(tvd(&quantum, &quantum).unwrap(), 0.0);
    }

    #[test]
    fn total_loss_distribution() {
        let li = uniform_lossy(&balanced2(), 0.0).unwrap();
        let s = Setup::new(2, 2, 1, vec![0]).unwrap();
        let d = output_distribution_small(&li, &s, &noise(0.0, 1.0, 0.0), &DistinguishabilityModel::full(1.0)).unwrap();
        assert_eq!(d[&vec![0, 0]], 1.0);
        assert!(d
            .iter()
            .filter(|(k, _)| k.iter().sum::<usize>() > 0)
            .all(|(_, &v)| v == 0.0));
    }

    #[test]
    fn distribution_refusals() {
        let u = haar_unitary(7, RandomSeed::new(1, 0)).unwrap();
        let li = uniform_lossy(&u, 1.0).unwrap();
        let s = Setup::with_first_ports(2, 7, 1, 1).unwrap();
        let m = DistinguishabilityModel::full(1.0);
        assert!(output_distribution_small(&li, &s, &noise(1.0, 1.0, 0.0), &m).is_err());
        let (li, s) = hom();
        assert!(output_distribution_small(&li, &s, &noise(1.0, 1.0, 0.1), &m).is_err());
        assert!(output_distribution_small(&li, &s, &noise(0.5, 1.0, 0.0), &m).is_err());
    }

    #[test]
    fn tvd_mismatched_spaces() {
        let mut p = Distribution::new();
        p.insert(vec![1, 0], 1.0);
        let mut q = Distribution::new();
        q.insert(vec![0, 1], 1.0);
        assert!(matches!(tvd(&p, &q), Err(Error::MismatchedSpaces)));
        q.insert(vec![1, 0], 0.0);
        p.insert(vec![0, 1], 0.0);
        assert_eq!(tvd(&p, &q).unwrap(), 1.0);
    }

    #[test]
    fn subset_search_finds_hom_port() {
        let (li, _) = hom();
        let (ports, value) = best_probe_subset(&li, 2, 1, &noise(1.0, 1.0, 0.0)).unwrap();
        assert_eq!(ports.len(), 1);
        assert!((value - 0.25).abs() < 1e-12);
    }
}
