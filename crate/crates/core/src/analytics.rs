//! Haar-ensemble closed forms for single-port no-count probabilities and
//! experiment-design estimates.
//!
//! Factorial ratios are accumulated as running products of factors below
//! one, so the finite sums stay in range up to N ≈ 100 and beyond.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{invalid, Error, Result};
use crate::noisemodel::{derangement_ratio, NoiseParams};

/// Largest N accepted by the exact variance sums.
pub const VARIANCE_MAX_N: usize = 100;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AsymptoticParams {
    pub rho: f64,
    pub noise: NoiseParams,
    pub cutoff: usize,
}

impl AsymptoticParams {
    pub fn new(rho: f64, noise: NoiseParams, cutoff: usize) -> Result<Self> {
        let p = Self { rho, noise, cutoff };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.rho > 0.0 && self.rho <= 1.0) {
            return Err(invalid("rho", format!("{} outside (0, 1]", self.rho)));
        }
        self.noise.validate()
    }
}

fn check_sizes(n: usize, m: usize) -> Result<()> {
    if n == 0 {
        return Err(invalid("n", "must be at least 1"));
    }
    if m < n {
        return Err(invalid("m", format!("M = {m} is smaller than N = {n}")));
    }
    Ok(())
}

fn check_cutoff(n: usize, k: usize) -> Result<()> {
    if k > n {
        return Err(invalid("k", format!("K = {k} exceeds N = {n}")));
    }
    Ok(())
}

/// `r_j = (N)_j / M^{(j)}` for `j = 0..=len-1`; zero once `j > N`.
fn pochhammer_ratios(n: usize, m: usize, len: usize) -> Vec<f64> {
    let mut r = vec![0.0; len];
    if len == 0 {
        return r;
    }
    r[0] = 1.0;
    for j in 1..len.min(n + 1) {
        r[j] = r[j - 1] * (n - j + 1) as f64 / (m + j - 1) as f64;
    }
    r
}

fn inverse_factorials(len: usize) -> Vec<f64> {
    let mut f = vec![1.0; len.max(1)];
    for j in 1..len {
        f[j] = f[j - 1] / j as f64;
    }
    f
}

/// `G_j = Σ_{m=lo}^{j} (d_m/m!)·ξ^m/(j−m)!` for `j = 0..=n`.
fn derangement_kernels(n: usize, lo: usize, xi: f64) -> Vec<f64> {
    let inv_fact = inverse_factorials(n + 1);
    let weights: Vec<f64> = (0..=n).map(|m| derangement_ratio(m) * xi.powi(m as i32)).collect();
    (0..=n)
        .map(|j| (lo..=j).map(|m| weights[m] * inv_fact[j - m]).sum())
        .collect()
}

fn signed_power(eta: f64, j: usize) -> f64 {
    let p = eta.powi(j as i32);
    if j.is_multiple_of(2) {
        p
    } else {
        -p
    }
}

/// Haar average of ΔP₁ between the full model and its K-reduced
/// counterpart, for uniform loss and distinguishability.
pub fn avg_delta_p1(n: usize, m: usize, noise: &NoiseParams, k: usize) -> Result<f64> {
    check_sizes(n, m)?;
    check_cutoff(n, k)?;
    noise.validate()?;
    if k == n {
        return Ok(0.0);
    }
    let r = pochhammer_ratios(n, m, n + 1);
    let g = derangement_kernels(n, k + 1, noise.xi);
    let sum: f64 = (k + 1..=n).map(|j| r[j] * signed_power(noise.eta, j) * g[j]).sum();
    Ok((-noise.nu).exp() * sum)
}

/// Leading-order magnitude of ⟨ΔP₁⟩ at density ρ.
pub fn w1(p: &AsymptoticParams) -> f64 {
    let x = p.noise.xi * p.noise.eta * p.rho;
    x.powi(p.cutoff as i32 + 1) / (1.0 + x) * (-1.0 - p.noise.nu - p.noise.eta * p.rho).exp()
}

/// Double sum shared by the exact variances,
/// `e^{−2ν} Σ_{n1,n2≥lo} (−η)^{n1+n2} θ_{n1,n2} G_{n1} G_{n2}`.
fn variance_sum(n: usize, m: usize, noise: &NoiseParams, lo: usize) -> Result<f64> {
    if n > VARIANCE_MAX_N {
        return Err(Error::ResourceRefused(format!(
            "exact variance limited to N ≤ {VARIANCE_MAX_N}"
        )));
    }
    let r = pochhammer_ratios(n, m, 2 * n + 1);
    let g = derangement_kernels(n, lo, noise.xi);
    let mut total = 0.0;
    for n1 in lo..=n {
        for n2 in lo..=n {
            let jj = n1 + n2;
            // c = M^{(n1+n2)} / (M^{(n1)} M^{(n2)})
            let c: f64 = (0..n2).map(|i| (m + n1 + i) as f64 / (m + i) as f64).product();
            let mut theta = 0.0;
            // t = (n1)_s (n2)_s / (s! · Π_{i=J−s}^{J−1} (M+i))
            let mut t = 1.0;
            let mut pow2 = 1.0;
            for s in 0..=n1.min(n2) {
                if s > 0 {
                    t *= ((n1 - s + 1) * (n2 - s + 1)) as f64 / (s as f64 * (m + jj - s) as f64);
                    pow2 *= 2.0;
                }
                theta += t * r[jj - s] * (pow2 - c);
            }
            total += signed_power(noise.eta, jj) * theta * g[n1] * g[n2];
        }
    }
    Ok((-2.0 * noise.nu).exp() * total)
}

/// Exact Haar variance of ΔP₁.
pub fn var_delta_p1_exact(n: usize, m: usize, noise: &NoiseParams, k: usize) -> Result<f64> {
    check_sizes(n, m)?;
    check_cutoff(n, k)?;
    noise.validate()?;
    if k == n {
        return Ok(0.0);
    }
    variance_sum(n, m, noise, k + 1)
}

/// Exact Haar variance of P₁ for the full model.
pub fn var_p1_exact(n: usize, m: usize, noise: &NoiseParams) -> Result<f64> {
    check_sizes(n, m)?;
    noise.validate()?;
    variance_sum(n, m, noise, 0)
}

/// Leading-order variance of ΔP₁: `W₁²(1−ρ)(K+1)²/N`.
pub fn var_delta_p1_asymptotic(n: usize, p: &AsymptoticParams) -> f64 {
    let k1 = (p.cutoff + 1) as f64;
    w1(p).powi(2) * (1.0 - p.rho) * k1 * k1 / n as f64
}

/// Exact Haar average of P₁ for the full model.
pub fn avg_p1_exact(n: usize, m: usize, noise: &NoiseParams) -> Result<f64> {
    check_sizes(n, m)?;
    noise.validate()?;
    let r = pochhammer_ratios(n, m, n + 1);
    let inv_fact = inverse_factorials(n + 1);
    let xi = noise.xi;
    let mut sum = 0.0;
    for (j, rj) in r.iter().enumerate().take(n + 1) {
        let inner: f64 = (0..=j)
            .map(|s| xi.powi((j - s) as i32) * (1.0 - xi).powi(s as i32) * inv_fact[s])
            .sum();
        sum += rj * signed_power(noise.eta, j) * inner;
    }
    Ok((-noise.nu).exp() * sum)
}

/// Approximate ⟨P₁⟩ for ρη ≪ 1.
pub fn avg_p1_approx(p: &AsymptoticParams) -> f64 {
    let (eta, xi, nu) = (p.noise.eta, p.noise.xi, p.noise.nu);
    (-nu - p.rho * eta * (1.0 - xi)).exp() / (1.0 + xi * p.rho * eta)
}

/// Leading-order Haar variance of P₁.
pub fn var_p1_asymptotic(n: usize, p: &AsymptoticParams) -> f64 {
    let (eta, xi) = (p.noise.eta, p.noise.xi);
    let er = eta * p.rho;
    let shape = 1.0 - xi + xi / (1.0 + er * xi);
    avg_p1_approx(p).powi(2) * er * er * (1.0 - p.rho) / n as f64 * shape * shape
}

/// ΔP₁ for an interferometer whose probed port is balanced,
/// `|U[k,0]|² = 1/M` for every input k; independent of the rest of U.
pub fn balanced_port_delta_p1(n: usize, m: usize, noise: &NoiseParams, k: usize) -> Result<f64> {
    check_sizes(n, m)?;
    check_cutoff(n, k)?;
    noise.validate()?;
    let (eta, xi) = (noise.eta, noise.xi);
    let mf = m as f64;
    let mut sum = 0.0;
    // term = (N)_j (−ξη/M)^j, so that C(N,j)·d_j·(−ξη/M)^j = term·d_j/j!
    let mut term = 1.0;
    for j in 1..=n {
        term *= -((n - j + 1) as f64) * xi * eta / mf;
        if j > k {
            sum += term * derangement_ratio(j) * (1.0 - eta / mf).powi((n - j) as i32);
        }
    }
    Ok((-noise.nu).exp() * sum)
}

/// Noiseless average of ΔP_L at K = 1 for L ≪ M: `(1+ρ)^{−L} − e^{−Lρ}`.
pub fn classical_nocount_avg(rho: f64, l: usize) -> Result<f64> {
    if !(rho > 0.0 && rho <= 1.0) {
        return Err(invalid("rho", format!("{rho} outside (0, 1]")));
    }
    if l == 0 {
        return Err(invalid("l", "must be at least 1"));
    }
    let lf = l as f64;
    Ok((1.0 + rho).powf(-lf) - (-lf * rho).exp())
}

/// L maximizing [`classical_nocount_avg`]: `int(1/ρ)`.
pub fn classical_nocount_argmax(rho: f64) -> Result<usize> {
    if !(rho > 0.0 && rho <= 1.0) {
        return Err(invalid("rho", format!("{rho} outside (0, 1]")));
    }
    Ok(((1.0 / rho).floor() as usize).max(1))
}

/// Samples needed to resolve P₁ to a relative interval ε·W₁:
/// `ceil(P₁(1−P₁)·((1−α/2)/(ε·W₁))²)`.
pub fn sample_count(p1: f64, w1: f64, alpha: f64, epsilon: f64) -> Result<u64> {
    if !(0.0..=1.0).contains(&p1) {
        return Err(invalid("p1", format!("{p1} outside [0, 1]")));
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(invalid("alpha", format!("{alpha} outside (0, 1)")));
    }
    if !(epsilon > 0.0 && epsilon.is_finite()) {
        return Err(invalid("epsilon", format!("{epsilon} must be positive")));
    }
    if w1 == 0.0 {
        return Err(Error::Indistinguishable);
    }
    if !(w1 > 0.0 && w1.is_finite()) {
        return Err(invalid("w1", format!("{w1} must be positive")));
    }
    let t = p1 * (1.0 - p1) * ((1.0 - alpha / 2.0) / (epsilon * w1)).powi(2);
    if t > u64::MAX as f64 {
        return Err(Error::ResourceRefused(format!("{t:.3e} samples")));
    }
    Ok(t.ceil() as u64)
}

/// Two-sided standard normal quantile `z` with `Φ(z) = 1 − α/2`.
pub fn normal_quantile(alpha: f64) -> Result<f64> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(invalid("alpha", format!("{alpha} outside (0, 1)")));
    }
    let normal = Normal::new(0.0, 1.0).map_err(|e| invalid("alpha", e.to_string()))?;
    Ok(normal.inverse_cdf(1.0 - alpha / 2.0))
}

/// Wilson point estimate `(t_s + z²/2)/(t + z²)` from `t_s` successes in
/// `t` samples.
pub fn wilson_estimate(t: u64, t_s: u64, z: f64) -> Result<f64> {
    if t == 0 {
        return Err(invalid("t", "needs at least one sample"));
    }
    if t_s > t {
        return Err(invalid("t_s", format!("{t_s} successes out of {t} samples")));
    }
    let z2 = z * z;
    Ok((t_s as f64 + z2 / 2.0) / (t as f64 + z2))
}

/// Probability that no mode holds more than `s` bosons, in the
/// Bose–Einstein picture at density ρ: `[1 − (ρ/(1+ρ))^{s+1}]^M`.
pub fn prob_max_occupancy(rho: f64, m: usize, s: usize) -> Result<f64> {
    if !(rho > 0.0 && rho.is_finite()) {
        return Err(invalid("rho", format!("{rho} must be positive")));
    }
    let q = (rho / (1.0 + rho)).powi(s as i32 + 1);
    Ok((1.0 - q).powi(m as i32))
}

/// Bunching count `s` exceeded with probability at most δ:
/// `ln(N/(ρδ)) / ln((1+ρ)/ρ)`.
pub fn bunching_threshold(n: usize, rho: f64, delta: f64) -> Result<f64> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(invalid("delta", format!("{delta} outside (0, 1)")));
    }
    if !(rho > 0.0 && rho.is_finite()) {
        return Err(invalid("rho", format!("{rho} must be positive")));
    }
    if n == 0 {
        return Err(invalid("n", "must be at least 1"));
    }
    Ok((n as f64 / (rho * delta)).ln() / ((1.0 + rho) / rho).ln())
}

/// Interference order `ceil(r·s)` that reproduces all correlators up to
/// order r, with s from [`bunching_threshold`] and the order constant set
/// to one.
pub fn correlator_evading_order(r: usize, n: usize, rho: f64, delta: f64) -> Result<usize> {
    if r == 0 {
        return Err(invalid("r", "must be at least 1"));
    }
    let s = bunching_threshold(n, rho, delta)?;
    Ok((r as f64 * s).ceil().max(0.0) as usize)
}

/// Whether `K² < N`.
pub fn is_low_order(k: usize, n: usize) -> bool {
    k.saturating_mul(k) < n
}

#[cfg(test)]
mod tests {
    use super::*;

    fn noise(eta: f64, xi: f64, nu: f64) -> NoiseParams {
        NoiseParams::new(eta, xi, nu).unwrap()
    }

    fn params(rho: f64, eta: f64, xi: f64, nu: f64, k: usize) -> AsymptoticParams {
        AsymptoticParams::new(rho, noise(eta, xi, nu), k).unwrap()
    }

    #[test]
    fn avg_delta_p1_trivial_cases() {
        assert_eq!(avg_delta_p1(5, 10, &noise(0.8, 1.0, 0.0), 5).unwrap(), 0.0);
        assert_eq!(avg_delta_p1(5, 10, &noise(0.8, 0.0, 0.0), 1).unwrap(), 0.0);
        assert!(avg_delta_p1(5, 10, &noise(0.8, 1.0, 0.0), 6).is_err());
        assert!(avg_delta_p1(5, 4, &noise(0.8, 1.0, 0.0), 1).is_err());
    }

    #[test]
    fn w1_reference() {
        let p = params(0.5, 0.8, 1.0, 0.0, 3);
        assert!((w1(&p) - 0.4f64.powi(4) / 1.4 * (-1.4f64).exp()).abs() < 1e-18);
        assert!((w1(&p) - 4.509201626360805e-3).abs() < 1e-15);
        assert_eq!(w1(&params(0.5, 0.0, 1.0, 0.0, 3)), 0.0);
        assert!(w1(&params(1e-6, 0.8, 1.0, 0.0, 1)) < 1e-11);
    }

    #[test]
    fn sign_alternates_with_cutoff() {
        let q = noise(0.8, 0.9, 0.1);
        assert_eq!(avg_delta_p1(8, 16, &q, 0).unwrap(), avg_delta_p1(8, 16, &q, 1).unwrap());
        for k in 1..6 {
            for &(n, m) in &[(8, 16), (12, 24), (20, 30)] {
                let v = avg_delta_p1(n, m, &noise(0.8, 0.9, 0.1), k).unwrap();
                let sign = if k % 2 == 1 { 1.0 } else { -1.0 };
                assert!(sign * v > 0.0, "n={n} k={k} v={v}");
            }
        }
    }

    #[test]
    fn large_n_is_finite() {
        let v = avg_delta_p1(100, 200, &noise(0.8, 1.0, 0.0), 3).unwrap();
        assert!(v.is_finite() && v != 0.0);
        let var = var_delta_p1_exact(100, 200, &noise(0.8, 1.0, 0.0), 3).unwrap();
        assert!(var.is_finite() && var > 0.0);
        assert!(var_delta_p1_exact(101, 202, &noise(0.8, 1.0, 0.0), 3).is_err());
    }

    #[test]
    fn variance_trivial_cases() {
        assert_eq!(var_delta_p1_exact(6, 12, &noise(0.8, 1.0, 0.0), 6).unwrap(), 0.0);
        assert_eq!(var_delta_p1_exact(6, 12, &noise(0.8, 0.0, 0.0), 2).unwrap(), 0.0);
        let p = params(1.0, 0.8, 1.0, 0.0, 3);
        assert_eq!(var_delta_p1_asymptotic(24, &p), 0.0);
        let p = params(0.5, 0.8, 1.0, 0.0, 3);
        let expect = w1(&p).powi(2) * 0.5 * 16.0 / 24.0;
        assert!((var_delta_p1_asymptotic(24, &p) - expect).abs() < 1e-20);
    }

    #[test]
    fn avg_p1_cases() {
        assert!((avg_p1_exact(2, 2, &noise(1.0, 1.0, 0.0)).unwrap() - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(avg_p1_exact(7, 9, &noise(0.0, 0.4, 0.0)).unwrap(), 1.0);
        assert!((avg_p1_exact(7, 9, &noise(0.0, 0.4, 0.3)).unwrap() - (-0.3f64).exp()).abs() < 1e-15);
        assert!((avg_p1_approx(&params(0.5, 0.0, 0.4, 0.2, 1)) - (-0.2f64).exp()).abs() < 1e-15);
        assert!((avg_p1_approx(&params(0.5, 0.8, 1.0, 0.0, 1)) - 1.0 / 1.4).abs() < 1e-15);
    }

    #[test]
    fn avg_p1_matches_kernel_form() {
        // Σ_m C(n,m) d_m ξ^m = n! Σ_s ξ^{n−s}(1−ξ)^s/s!
        for &xi in &[0.0, 0.3, 1.0] {
            let q = noise(0.7, xi, 0.0);
            let r = pochhammer_ratios(9, 14, 10);
            let g = derangement_kernels(9, 0, xi);
            let alt: f64 = (0..=9).map(|j| r[j] * signed_power(0.7, j) * g[j]).sum();
            assert!((avg_p1_exact(9, 14, &q).unwrap() - alt).abs() < 1e-14);
        }
    }

    #[test]
    fn approx_error_shrinks_with_density() {
        let mut last = f64::INFINITY;
        for &re in &[0.4f64, 0.2, 0.1, 0.05] {
            let m = (50.0 / re).round() as usize;
            let q = noise(1.0, 0.5, 0.0);
            let exact = avg_p1_exact(50, m, &q).unwrap();
            let approx = avg_p1_approx(&params(50.0 / m as f64, 1.0, 0.5, 0.0, 1));
            let rel = ((approx - exact) / exact).abs();
            assert!(rel < last, "ρη={re}: {rel} !< {last}");
            last = rel;
        }
    }

    #[test]
    fn var_p1_asymptotic_cases() {
        assert_eq!(var_p1_asymptotic(10, &params(1.0, 0.8, 1.0, 0.0, 1)), 0.0);
        assert_eq!(var_p1_asymptotic(10, &params(0.5, 0.0, 1.0, 0.0, 1)), 0.0);
    }

    #[test]
    fn balanced_port_cases() {
        assert_eq!(balanced_port_delta_p1(4, 8, &noise(0.8, 1.0, 0.0), 4).unwrap(), 0.0);
        // N = 2, K = 1: only m = 2, d_2 = 1.
        let v = balanced_port_delta_p1(2, 2, &noise(1.0, 1.0, 0.0), 1).unwrap();
        assert!((v - 0.25).abs() < 1e-15);
    }

    #[test]
    fn classical_average() {
        assert_eq!(classical_nocount_argmax(1.0).unwrap(), 1);
        assert_eq!(classical_nocount_argmax(0.25).unwrap(), 4);
        let best = (1..=20)
            .max_by(|&a, &b| {
                let fa = classical_nocount_avg(0.25, a).unwrap();
                let fb = classical_nocount_avg(0.25, b).unwrap();
                fa.total_cmp(&fb)
            })
            .unwrap();
        assert_eq!(best, 4);
        let v = classical_nocount_avg(0.25, 4).unwrap();
        assert!((v - (1.25f64.powi(-4) - (-1.0f64).exp())).abs() < 1e-16);
        assert!(classical_nocount_avg(1e-9, 3).unwrap().abs() < 1e-8);
        assert!(classical_nocount_avg(0.0, 1).is_err());
    }

    #[test]
    fn sample_count_cases() {
        assert_eq!(sample_count(0.5, 0.975 / 0.5, 0.05, 0.5).unwrap(), 1);
        assert_eq!(sample_count(0.0, 1e-3, 0.05, 0.05).unwrap(), 0);
        assert_eq!(sample_count(1.0, 1e-3, 0.05, 0.05).unwrap(), 0);
        let t = sample_count(0.6, 4.5e-3, 0.05, 0.05).unwrap();
        let expect = (0.24 * (0.975f64 / 2.25e-4).powi(2)).ceil() as u64;
        assert_eq!(t, expect);
        assert!((4.4e6..4.6e6).contains(&(t as f64)));
        assert!(matches!(
            sample_count(0.6, 0.0, 0.05, 0.05),
            Err(Error::Indistinguishable)
        ));
    }

    #[test]
    fn wilson_cases() {
        assert_eq!(wilson_estimate(10, 10, 0.0).unwrap(), 1.0);
        assert_eq!(wilson_estimate(10, 0, 0.0).unwrap(), 0.0);
        assert_eq!(wilson_estimate(100, 50, 2.0).unwrap(), 0.5);
        assert!(wilson_estimate(0, 0, 2.0).is_err());
        assert!(wilson_estimate(3, 4, 2.0).is_err());
        let z = normal_quantile(0.05).unwrap();
        assert!((z - 1.959963984540054).abs() < 1e-9);
    }

    #[test]
    fn occupancy_and_bunching() {
        assert!((prob_max_occupancy(0.5, 40, 0).unwrap() - 1.5f64.powi(-40)).abs() < 1e-18);
        let mut last = 0.0;
        for s in 0..30 {
            let p = prob_max_occupancy(0.5, 40, s).unwrap();
            assert!(p > last);
            last = p;
        }
        assert!(last > 1.0 - 1e-9);

        let s = bunching_threshold(16, 1.0, 0.25).unwrap();
        assert!((s - (16.0f64 / 0.25).log2()).abs() < 1e-12);
        assert!(bunching_threshold(20, 0.5, 0.1).unwrap() < bunching_threshold(20, 0.5, 0.01).unwrap());

        let rho = 1.0 / 3.0;
        let s = bunching_threshold(20, rho, 0.05).unwrap();
        let p = prob_max_occupancy(rho, 60, s.ceil() as usize).unwrap();
        assert!(p >= 0.95);
    }

    #[test]
    fn correlator_order() {
        let rho = 1.0 / 3.0;
        let s = bunching_threshold(20, rho, 0.05).unwrap();
        assert_eq!(correlator_evading_order(1, 20, rho, 0.05).unwrap(), s.ceil() as usize);
        let k4 = correlator_evading_order(4, 20, rho, 0.05).unwrap();
        assert_eq!(k4, 21);
        assert!(!is_low_order(k4, 20));
        assert!(is_low_order(3, 20));
        let mut last = 0;
        for r in 1..6 {
            let k = correlator_evading_order(r, 20, rho, 0.05).unwrap();
            assert!(k >= last);
            last = k;
        }
    }
}
