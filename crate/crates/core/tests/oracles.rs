//! Independent oracles for the closed forms and counting routines.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};

use noisybs::analytics::{avg_delta_p1, avg_p1_exact, balanced_port_delta_p1, var_delta_p1_exact, var_p1_exact};
use noisybs::interferometer::{balanced_composite, haar_unitary, uniform_lossy, RandomSeed};
use noisybs::nocount::{delta_p_exact, Setup};
use noisybs::noisemodel::{cycle_type, derangements, derangements_bounded_cycles, for_each_permutation, NoiseParams};

fn int(x: i64) -> BigRational {
    BigRational::from_integer(BigInt::from(x))
}

fn ratio(num: i64, den: i64) -> BigRational {
    BigRational::new(BigInt::from(num), BigInt::from(den))
}

fn factorial(n: usize) -> BigRational {
    (1..=n as i64).fold(BigRational::one(), |acc, k| acc * int(k))
}

fn binom(n: usize, k: usize) -> BigRational {
    if k > n {
        return BigRational::zero();
    }
    factorial(n) / (factorial(k) * factorial(n - k))
}

fn rising(m: usize, n: usize) -> BigRational {
    (0..n).fold(BigRational::one(), |acc, i| acc * int((m + i) as i64))
}

fn pow(x: &BigRational, n: usize) -> BigRational {
    (0..n).fold(BigRational::one(), |acc, _| acc * x)
}

/// `m!·Σ_{s≤m} (−1)^s/s!`.
fn derangement_direct(m: usize) -> BigRational {
    let mut sum = BigRational::zero();
    for s in 0..=m {
        let term = BigRational::one() / factorial(s);
        sum = if s % 2 == 0 { sum + term } else { sum - term };
    }
    factorial(m) * sum
}

/// `Σ_{m=lo}^{n} C(n,m) d_m ξ^m`.
fn weighted_derangements(n: usize, lo: usize, xi: &BigRational) -> BigRational {
    (lo..=n).fold(BigRational::zero(), |acc, m| {
        acc + binom(n, m) * derangement_direct(m) * pow(xi, m)
    })
}

fn to_f64(x: &BigRational) -> f64 {
    x.to_f64().unwrap()
}

/// ⟨ΔP₁⟩ at ν = 0 in the unsimplified form, `Σ C(N,n)(−η)^n/M^{(n)} Σ C(n,m) d_m ξ^m`.
fn avg_delta_oracle(n: usize, m: usize, eta: &BigRational, xi: &BigRational, k: usize) -> BigRational {
    let minus_eta = -eta.clone();
    (k + 1..=n).fold(BigRational::zero(), |acc, j| {
        acc + binom(n, j) * pow(&minus_eta, j) / rising(m, j) * weighted_derangements(j, k + 1, xi)
    })
}

fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * b.abs().max(1e-300)
}

#[test]
fn avg_delta_p1_matches_rational_oracle() {
    let cases = [
        (4, 4, (4, 5), (1, 1), 1),
        (6, 9, (3, 5), (1, 2), 2),
        (8, 16, (4, 5), (1, 1), 2),
        (12, 24, (4, 5), (1, 1), 3),
        (12, 48, (4, 5), (1, 1), 1),
        (20, 25, (1, 1), (7, 10), 4),
        (30, 60, (9, 10), (1, 1), 0),
    ];
    for (n, m, (en, ed), (xn, xd), k) in cases {
        let oracle = to_f64(&avg_delta_oracle(n, m, &ratio(en, ed), &ratio(xn, xd), k));
        let noise = NoiseParams::new(en as f64 / ed as f64, xn as f64 / xd as f64, 0.0).unwrap();
        let got = avg_delta_p1(n, m, &noise, k).unwrap();
        assert!(rel_close(got, oracle, 1e-11), "N={n} M={m} K={k}: {got} vs {oracle}");
    }
}

#[test]
fn avg_delta_p1_reference_value() {
    // N = 12, M = 24, η = 0.8, ξ = 1, K = 3, frozen from the rational oracle.
    let oracle = to_f64(&avg_delta_oracle(12, 24, &ratio(4, 5), &int(1), 3));
    assert!(rel_close(oracle, 0.0027735007679195547, 1e-15));
    let got = avg_delta_p1(12, 24, &NoiseParams::new(0.8, 1.0, 0.0).unwrap(), 3).unwrap();
    assert!(rel_close(got, 0.0027735007679195547, 1e-12));
}

#[test]
fn avg_delta_p1_dark_counts_scale() {
    let q0 = NoiseParams::new(0.7, 0.9, 0.0).unwrap();
    let q1 = NoiseParams::new(0.7, 0.9, 0.35).unwrap();
    let a = avg_delta_p1(10, 17, &q0, 2).unwrap();
    let b = avg_delta_p1(10, 17, &q1, 2).unwrap();
    assert!(rel_close(b, a * (-0.35f64).exp(), 1e-14));
}

#[test]
fn avg_p1_matches_rational_oracle() {
    let oracle = |n: usize, m: usize, eta: BigRational, xi: BigRational| {
        let minus_eta = -eta;
        (0..=n).fold(BigRational::zero(), |acc, j| {
            acc + binom(n, j) * pow(&minus_eta, j) / rising(m, j) * weighted_derangements(j, 0, &xi)
        })
    };
    assert_eq!(oracle(2, 2, int(1), int(1)), ratio(1, 3));
    let got = avg_p1_exact(2, 2, &NoiseParams::new(1.0, 1.0, 0.0).unwrap()).unwrap();
    assert!((got - 1.0 / 3.0).abs() < 1e-16);
    for (n, m, e, x) in [
        (5, 7, (1, 2), (1, 3)),
        (10, 20, (4, 5), (1, 1)),
        (16, 20, (1, 1), (1, 2)),
    ] {
        let want = to_f64(&oracle(n, m, ratio(e.0, e.1), ratio(x.0, x.1)));
        let noise = NoiseParams::new(e.0 as f64 / e.1 as f64, x.0 as f64 / x.1 as f64, 0.0).unwrap();
        let got = avg_p1_exact(n, m, &noise).unwrap();
        assert!(rel_close(got, want, 1e-12), "N={n}: {got} vs {want}");
    }
}

/// Variance of ΔP₁ (or P₁ with `lo = 0`) with Θ enumerated over subset pairs.
fn variance_oracle(n: usize, m: usize, eta: &BigRational, xi: &BigRational, lo: usize) -> BigRational {
    let subsets_of = |size: usize| -> Vec<u32> { (0u32..1 << n).filter(|s| s.count_ones() as usize == size).collect() };
    let minus_eta = -eta.clone();
    let mut total = BigRational::zero();
    for n1 in lo..=n {
        for n2 in lo..=n {
            let mut theta = BigRational::zero();
            let base = BigRational::one() / (rising(m, n1) * rising(m, n2));
            let joint = BigRational::one() / rising(m, n1 + n2);
            for k1 in subsets_of(n1) {
                for k2 in subsets_of(n2) {
                    let common = (k1 & k2).count_ones() as usize;
                    theta += pow(&int(2), common) * &joint - &base;
                }
            }
            total += pow(&minus_eta, n1 + n2)
                * weighted_derangements(n1, lo, xi)
                * weighted_derangements(n2, lo, xi)
                * theta;
        }
    }
    total
}

#[test]
fn exact_variance_matches_subset_enumeration() {
    for (n, m, e, x, k) in [
        (3, 3, (1, 1), (1, 1), 1),
        (4, 7, (4, 5), (1, 2), 0),
        (5, 10, (4, 5), (1, 1), 2),
        (6, 8, (3, 5), (9, 10), 1),
    ] {
        let (eta, xi) = (ratio(e.0, e.1), ratio(x.0, x.1));
        let noise = NoiseParams::new(e.0 as f64 / e.1 as f64, x.0 as f64 / x.1 as f64, 0.0).unwrap();
        let want = to_f64(&variance_oracle(n, m, &eta, &xi, k + 1));
        let got = var_delta_p1_exact(n, m, &noise, k).unwrap();
        assert!(rel_close(got, want, 1e-10), "ΔP N={n} K={k}: {got} vs {want}");
        let want = to_f64(&variance_oracle(n, m, &eta, &xi, 0));
        let got = var_p1_exact(n, m, &noise).unwrap();
        assert!(rel_close(got, want, 1e-10), "P N={n}: {got} vs {want}");
    }
}

#[test]
fn derangements_match_direct_sum() {
    for m in 0..=20 {
        let want = derangement_direct(m).to_integer();
        assert_eq!(BigInt::from(derangements(m).unwrap()), want, "m={m}");
    }
}

#[test]
fn derangement_remainder_bound_in_exact_arithmetic() {
    // e⁻¹ enclosed by partial sums to 40 terms, remainder below 1/41!
    let tail = BigRational::one() / factorial(41);
    let e_inv = derangement_direct(40) / factorial(40);
    for m in 0..=20 {
        let diff = derangement_direct(m) / factorial(m) - &e_inv;
        let diff = if diff < BigRational::zero() { -diff } else { diff };
        assert!(diff + &tail <= BigRational::one() / factorial(m + 1), "m={m}");
    }
}

#[test]
fn bounded_cycle_derangements_match_enumeration() {
    for m in 0..=7 {
        let mut counts = vec![0u128; m + 2];
        for_each_permutation(m, |p| {
            let ct = cycle_type(p);
            if ct.first().copied().unwrap_or(0) == 0 {
                let longest = ct.iter().rposition(|&c| c > 0).map_or(0, |i| i + 1);
                for (k, c) in counts.iter_mut().enumerate().skip(1) {
                    if longest <= k {
                        *c += 1;
                    }
                }
            }
        });
        for (k, &want) in counts.iter().enumerate().skip(1) {
            assert_eq!(derangements_bounded_cycles(m, k).unwrap(), want, "m={m} k={k}");
        }
    }
}

#[test]
fn balanced_port_closed_form_matches_exact_kernel() {
    for (n, m, k, eta, xi) in [(4, 8, 1, 0.8, 1.0), (6, 6, 2, 0.9, 0.7), (8, 16, 3, 0.6, 1.0)] {
        let v = haar_unitary(m - 1, RandomSeed::new(5 + n as u64, 0)).unwrap();
        let u = balanced_composite(&v, m).unwrap();
        let li = uniform_lossy(&u, eta).unwrap();
        let noise = NoiseParams::new(eta, xi, 0.1).unwrap();
        let s = Setup::with_first_ports(n, m, k, 1).unwrap();
        let exact = delta_p_exact(&li, &s, &noise).unwrap();
        let closed = balanced_port_delta_p1(n, m, &noise, k).unwrap();
        assert!((exact - closed).abs() < 1e-12, "N={n}: {exact} vs {closed}");
    }
}
