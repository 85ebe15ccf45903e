//! Noise parameters, distinguishability functions on permutations and
//! derangement counting.
//!
//! Permutations are 0-based: `mapping[k] = σ(k)` for `k` in `0..n`.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::matcore::next_permutation;

/// Largest m for which `d_m` fits in a `u64`.
pub const MAX_EXACT_DERANGEMENT: usize = 20;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NoiseParams {
    pub eta: f64,
    pub xi: f64,
    pub nu: f64,
}

impl NoiseParams {
    pub fn new(eta: f64, xi: f64, nu: f64) -> Result<Self> {
        let p = Self { eta, xi, nu };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.eta) {
            return Err(invalid("eta", format!("{} outside [0, 1]", self.eta)));
        }
        if !(0.0..=1.0).contains(&self.xi) {
            return Err(invalid("xi", format!("{} outside [0, 1]", self.xi)));
        }
        if !(self.nu >= 0.0 && self.nu.is_finite()) {
            return Err(invalid("nu", format!("{} must be finite and non-negative", self.nu)));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Permutation(Vec<usize>);

impl Permutation {
    pub fn new(mapping: Vec<usize>) -> Result<Self> {
        let n = mapping.len();
        let mut seen = vec![false; n];
        for &x in &mapping {
            if x >= n {
                return Err(Error::IndexOutOfRange { index: x, dim: n });
            }
            if std::mem::replace(&mut seen[x], true) {
                return Err(invalid("mapping", format!("value {x} repeats")));
            }
        }
        Ok(Self(mapping))
    }

    pub fn identity(n: usize) -> Self {
        Self((0..n).collect())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.0
    }

    pub fn inverse(&self) -> Self {
        let mut inv = vec![0; self.0.len()];
        for (k, &v) in self.0.iter().enumerate() {
            inv[v] = k;
        }
        Self(inv)
    }

    /// `(self ∘ other)(k) = self(other(k))`.
    pub fn compose(&self, other: &Self) -> Result<Self> {
        if self.len() != other.len() {
            return Err(Error::DimensionMismatch {
                expected: self.len(),
                got: other.len(),
            });
        }
        Ok(Self(other.0.iter().map(|&k| self.0[k]).collect()))
    }
}

/// `c[l-1]` = number of cycles of length l; the vector has length n.
pub fn cycle_type(p: &[usize]) -> Vec<usize> {
    let n = p.len();
    let mut counts = vec![0; n];
    let mut seen = vec![false; n];
    for start in 0..n {
        if seen[start] {
            continue;
        }
        let mut len = 0;
        let mut k = start;
        while !seen[k] {
            seen[k] = true;
            k = p[k];
            len += 1;
        }
        counts[len - 1] += 1;
    }
    counts
}

fn fixed_points(p: &[usize]) -> usize {
    p.iter().enumerate().filter(|&(k, &v)| k == v).count()
}

fn longest_cycle(p: &[usize]) -> usize {
    cycle_type(p).iter().rposition(|&c| c > 0).map_or(0, |i| i + 1)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", content = "k")]
pub enum ModelKind {
    Full,
    /// Keep permutations with at least n−K fixed points.
    Reduced(usize),
    /// Keep permutations whose cycles are all of length ≤ K.
    CyclePlus(usize),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DistinguishabilityModel {
    pub kind: ModelKind,
    pub xi: f64,
}

impl DistinguishabilityModel {
    pub fn full(xi: f64) -> Self {
        Self {
            kind: ModelKind::Full,
            xi,
        }
    }

    pub fn reduced(k: usize, xi: f64) -> Self {
        Self {
            kind: ModelKind::Reduced(k),
            xi,
        }
    }

    pub fn cycle_plus(k: usize, xi: f64) -> Self {
        Self {
            kind: ModelKind::CyclePlus(k),
            xi,
        }
    }
}

/// `ξ^{n−c₁(σ)}`, masked according to the model. `0⁰ = 1`, so the identity
/// always has weight one.
pub fn evaluate_j(model: &DistinguishabilityModel, p: &[usize]) -> f64 {
    let n = p.len();
    let c1 = fixed_points(p);
    let keep = match model.kind {
        ModelKind::Full => true,
        ModelKind::Reduced(k) => c1 + k >= n,
        ModelKind::CyclePlus(k) => longest_cycle(p) <= k.max(1),
    };
    if keep {
        model.xi.powi((n - c1) as i32)
    } else {
        0.0
    }
}

/// Weight function on permutations of `0..n`.
pub trait PermutationWeight: Sync {
    fn weight(&self, p: &[usize]) -> f64;
}

impl PermutationWeight for DistinguishabilityModel {
    fn weight(&self, p: &[usize]) -> f64 {
        evaluate_j(self, p)
    }
}

impl<F> PermutationWeight for F
where
    F: Fn(&[usize]) -> f64 + Sync,
{
    fn weight(&self, p: &[usize]) -> f64 {
        self(p)
    }
}

/// Calls `f` on every permutation of `0..n` in lexicographic order.
pub fn for_each_permutation(n: usize, mut f: impl FnMut(&[usize])) {
    let mut p: Vec<usize> = (0..n).collect();
    loop {
        f(&p);
        if !next_permutation(&mut p) {
            break;
        }
    }
}

/// Number of derangements of m elements. Exact through m = 20; larger m
/// overflows `u64` and is refused.
pub fn derangements(m: usize) -> Result<u64> {
    if m > MAX_EXACT_DERANGEMENT {
        return Err(Error::ResourceRefused(format!(
            "d_{m} does not fit in 64 bits; use derangement_ratio"
        )));
    }
    let (mut prev, mut cur) = (1u64, 0u64);
    if m == 0 {
        return Ok(1);
    }
    for j in 2..=m as u64 {
        let next = (j - 1) * (cur + prev);
        prev = cur;
        cur = next;
    }
    Ok(cur)
}

/// `d_m / m! = Σ_{s≤m} (−1)^s/s!`. Past m = 20 the partial sum equals `e⁻¹`
/// to double precision.
pub fn derangement_ratio(m: usize) -> f64 {
    let mut term = 1.0;
    let mut sum = 1.0;
    for s in 1..=m.min(MAX_EXACT_DERANGEMENT + 2) {
        term /= -(s as f64);
        sum += term;
    }
    sum
}

/// `d_m` as a float for any m; `m!·(d_m/m!)`, overflowing to infinity past 170.
pub fn derangements_f64(m: usize) -> f64 {
    if let Ok(d) = derangements(m) {
        return d as f64;
    }
    let log_fact: f64 = (2..=m).map(|j| (j as f64).ln()).sum();
    log_fact.exp() * derangement_ratio(m)
}

/// Derangements of m elements with every cycle of length at most k.
///
/// Integer form of the series-exponential recurrence
/// `Z_m = Σ_l t_l (m−1)!/(m−l)! Z_{m−l}` with `t_1 = 0`, `t_l = 1` for
/// `2 ≤ l ≤ k`, and `t_l = 0` above k.
pub fn derangements_bounded_cycles(m: usize, k: usize) -> Result<u128> {
    if k == 0 {
        return Err(invalid("k", "must be at least 1"));
    }
    let overflow = || Error::ResourceRefused(format!("d_{m}^({k}) overflows 128 bits"));
    let mut z = vec![0u128; m + 1];
    z[0] = 1;
    for j in 1..=m {
        let mut acc = 0u128;
        // falling = (j−1)!/(j−l)!
        let mut falling = 1u128;
        for l in 1..=j.min(k) {
            if l > 1 {
                falling = falling.checked_mul((j - l + 1) as u128).ok_or_else(overflow)?;
                let term = falling.checked_mul(z[j - l]).ok_or_else(overflow)?;
                acc = acc.checked_add(term).ok_or_else(overflow)?;
            }
        }
        z[j] = acc;
    }
    Ok(z[m])
}

/// Cycle-index sum `Z_m(t) = Σ_{σ∈S_m} Π_l t_l^{c_l(σ)}`.
pub fn cycle_sum(m: usize, t: &[f64]) -> Result<f64> {
    if m == 0 {
        return Err(invalid("m", "must be at least 1"));
    }
    if t.len() != m {
        return Err(Error::DimensionMismatch {
            expected: m,
            got: t.len(),
        });
    }
    let mut z = vec![0.0; m + 1];
    z[0] = 1.0;
    for j in 1..=m {
        let mut acc = 0.0;
        let mut falling = 1.0;
        for l in 1..=j {
            if l > 1 {
                falling *= (j - l + 1) as f64;
            }
            acc += t[l - 1] * falling * z[j - l];
        }
        z[j] = acc;
    }
    Ok(z[m])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cycle_types() {
        assert_eq!(cycle_type(&[0, 1, 2, 3]), vec![4, 0, 0, 0]);
        assert_eq!(cycle_type(&[1, 0, 2]), vec![1, 1, 0]);
        assert_eq!(cycle_type(&[1, 2, 0]), vec![0, 0, 1]);
        assert!(cycle_type(&[]).is_empty());
    }

    #[test]
    fn j_definition_cases() {
        let id = [0, 1, 2];
        for kind in [ModelKind::Full, ModelKind::Reduced(0), ModelKind::CyclePlus(1)] {
            for xi in [0.0, 0.3, 1.0] {
                let m = DistinguishabilityModel { kind, xi };
                assert_eq!(evaluate_j(&m, &id), 1.0);
            }
        }
        assert_eq!(evaluate_j(&DistinguishabilityModel::full(0.5), &[1, 0, 2]), 0.25);
        assert_eq!(evaluate_j(&DistinguishabilityModel::reduced(2, 0.5), &[1, 2, 0]), 0.0);
        assert_eq!(
            evaluate_j(&DistinguishabilityModel::cycle_plus(2, 0.5), &[1, 2, 0]),
            0.0
        );
        assert_eq!(evaluate_j(&DistinguishabilityModel::full(0.0), &[1, 0, 2]), 0.0);
    }

    #[test]
    fn derangement_values() {
        let expected = [1u64, 0, 1, 2, 9, 44, 265, 1854, 14833];
        for (m, &d) in expected.iter().enumerate() {
            assert_eq!(derangements(m).unwrap(), d);
        }
        assert_eq!(derangements(20).unwrap(), 895_014_631_192_902_121);
        assert!(derangements(21).is_err());
    }

    #[test]
    fn ratio_matches_exact_counts() {
        let mut fact = 1.0f64;
        for m in 0..=20 {
            if m > 0 {
                fact *= m as f64;
            }
            let exact = derangements(m).unwrap() as f64 / fact;
            assert!((derangement_ratio(m) - exact).abs() < 1e-15);
        }
        assert!((derangement_ratio(40) - (-1.0f64).exp()).abs() < 1e-15);
        let rel = derangements_f64(25) / 1.5511210043330986e25 - (-1.0f64).exp();
        assert!(rel.abs() < 1e-14);
    }

    #[test]
    fn bounded_cycles_cases() {
        assert_eq!(derangements_bounded_cycles(4, 2).unwrap(), 3);
        assert_eq!(derangements_bounded_cycles(3, 2).unwrap(), 0);
        assert_eq!(derangements_bounded_cycles(0, 1).unwrap(), 1);
        assert_eq!(derangements_bounded_cycles(5, 1).unwrap(), 0);
        for m in 0..=20 {
            assert_eq!(
                derangements_bounded_cycles(m, m.max(1)).unwrap(),
                derangements(m).unwrap() as u128
            );
        }
        assert!(derangements_bounded_cycles(3, 0).is_err());
        assert!(derangements_bounded_cycles(60, 60).is_err());
    }

    #[test]
    fn cycle_sum_cases() {
        assert_eq!(cycle_sum(2, &[0.0, 1.0]).unwrap(), 1.0);
        assert_eq!(cycle_sum(6, &[1.0; 6]).unwrap(), 720.0);
        let mut t = vec![1.0; 9];
        t[0] = 0.0;
        assert_eq!(cycle_sum(9, &t).unwrap(), derangements(9).unwrap() as f64);
        assert!(cycle_sum(0, &[]).is_err());
        assert!(cycle_sum(3, &[1.0]).is_err());
    }

    #[test]
    fn permutation_validation() {
        assert!(Permutation::new(vec![0, 0]).is_err());
        assert!(Permutation::new(vec![0, 2]).is_err());
        let p = Permutation::new(vec![2, 0, 1]).unwrap();
        assert_eq!(p.compose(&p.inverse()).unwrap(), Permutation::identity(3));
    }

    #[test]
    fn noise_params_ranges() {
        assert!(NoiseParams::new(0.8, 1.0, 0.0).is_ok());
        assert!(NoiseParams::new(1.1, 1.0, 0.0).is_err());
        assert!(NoiseParams::new(0.8, -0.1, 0.0).is_err());
        assert!(NoiseParams::new(0.8, 1.0, -1e-3).is_err());
        assert!(NoiseParams::new(0.8, 1.0, f64::NAN).is_err());
    }
}
