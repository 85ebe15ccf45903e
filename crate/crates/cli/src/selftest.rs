//! Quick internal consistency checks at N ≤ 8.

use std::io::Write;
use std::time::Instant;

use num_complex::Complex64;
use rand::Rng;

use noisybs::error::Result as CoreResult;
use noisybs::interferometer::{haar_unitary, uniform_lossy, RandomSeed};
use noisybs::matcore::{permanent, permanent_naive, ComplexMatrix};
use noisybs::nocount::{
    delta_p_bruteforce_default, delta_p_exact, output_distribution_small, p_nocount, p_nocount_reduced, tvd, Setup,
};
use noisybs::noisemodel::{DistinguishabilityModel, NoiseParams};

pub type PermanentFn = fn(&ComplexMatrix) -> CoreResult<Complex64>;

#[derive(Clone, Copy, Debug)]
pub struct SelftestConfig {
    /// Permanent under test, checked against direct expansion.
    pub permanent: PermanentFn,
    pub seed: u64,
}

impl Default for SelftestConfig {
    fn default() -> Self {
        Self { permanent, seed: 1 }
    }
}

#[derive(Clone, Debug)]
pub struct SuiteReport {
    pub name: &'static str,
    pub passed: bool,
    pub checks: usize,
    pub detail: String,
    pub seconds: f64,
}

/// Runs every suite, printing one line each to `out`.
pub fn run(cfg: &SelftestConfig, out: &mut dyn Write) -> std::io::Result<Vec<SuiteReport>> {
    let suites: [(&'static str, Suite); 4] = [
        ("permanent", permanent_suite),
        ("oracle-equivalence", oracle_suite),
        ("tvd-bound", tvd_suite),
        ("normalization", normalization_suite),
    ];
    let mut reports = Vec::new();
    for (name, suite) in suites {
        let start = Instant::now();
        let check = suite(cfg);
        let seconds = start.elapsed().as_secs_f64();
        let (passed, detail) = match check.failure {
            None => (true, String::new()),
            Some(f) => (false, f),
        };
        writeln!(
            out,
            "[{}] {name}: {} checks in {seconds:.3} s{}{}",
            if passed { "PASS" } else { "FAIL" },
            check.checks,
            if passed { "" } else { ": " },
            detail
        )?;
        reports.push(SuiteReport {
            name,
            passed,
            checks: check.checks,
            detail,
            seconds,
        });
    }
    Ok(reports)
}

type Suite = fn(&SelftestConfig) -> Check;

#[derive(Default)]
struct Check {
    checks: usize,
    failure: Option<String>,
}

impl Check {
    fn record(&mut self, ok: bool, what: impl FnOnce() -> String) {
        self.checks += 1;
        if !ok && self.failure.is_none() {
            self.failure = Some(what());
        }
    }

    fn error(&mut self, e: impl std::fmt::Display) {
        self.record(false, || e.to_string());
    }
}

fn noise(eta: f64, xi: f64) -> NoiseParams {
    NoiseParams::new(eta, xi, 0.0).expect("selftest noise in range")
}

fn permanent_suite(cfg: &SelftestConfig) -> Check {
    let mut c = Check::default();
    let mut rng = RandomSeed::new(cfg.seed, 1).rng();
    for n in 1..=8 {
        for _ in 0..3 {
            let m = ComplexMatrix::from_fn(n, n, |_, _| {
                Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
            });
            match ((cfg.permanent)(&m), permanent_naive(&m)) {
                (Ok(a), Ok(b)) => c.record((a - b).norm() <= 1e-9 * (1.0 + b.norm()), || {
                    format!("n = {n}: {a} vs direct {b}")
                }),
                (Err(e), _) | (_, Err(e)) => c.error(e),
            }
        }
    }
    c
}

fn oracle_suite(cfg: &SelftestConfig) -> Check {
    let mut c = Check::default();
    let mut rng = RandomSeed::new(cfg.seed, 2).rng();
    for case in 0..40u64 {
        let n = rng.random_range(1..=8usize);
        let l = rng.random_range(1..=2usize);
        let m = rng.random_range(n.max(l + 1)..=12usize);
        let eta = [0.6, 0.8, 1.0][rng.random_range(0..3)];
        let xi = [0.5, 1.0][rng.random_range(0..2)];
        let k = rng.random_range(0..=n);
        let run = || -> CoreResult<(f64, f64)> {
            let li = uniform_lossy(&haar_unitary(m, RandomSeed::new(cfg.seed, 100 + case))?, eta)?;
            let s = Setup::with_first_ports(n, m, k, l)?;
            let q = noise(eta, xi);
            Ok((delta_p_exact(&li, &s, &q)?, delta_p_bruteforce_default(&li, &s, &q)?))
        };
        match run() {
            Ok((a, b)) => c.record((a - b).abs() <= 1e-10, || {
                format!("N={n} M={m} K={k} L={l}: exact {a} vs brute force {b}")
            }),
            Err(e) => c.error(e),
        }
    }
    c
}

fn tvd_suite(cfg: &SelftestConfig) -> Check {
    let mut c = Check::default();
    let mut rng = RandomSeed::new(cfg.seed, 3).rng();
    for draw in 0..15u64 {
        let n = rng.random_range(1..=4usize);
        let m = rng.random_range(n.max(2)..=6usize);
        let eta = rng.random_range(0.1..=1.0);
        let xi = rng.random_range(0.0..=1.0);
        let k = rng.random_range(0..=n);
        let run = || -> CoreResult<Vec<(usize, f64, f64)>> {
            let li = uniform_lossy(&haar_unitary(m, RandomSeed::new(cfg.seed, 200 + draw))?, eta)?;
            let q = noise(eta, xi);
            let s = Setup::with_first_ports(n, m, k, 1)?;
            let p = output_distribution_small(&li, &s, &q, &DistinguishabilityModel::full(xi))?;
            let pk = output_distribution_small(&li, &s, &q, &DistinguishabilityModel::reduced(k, xi))?;
            let d = tvd(&p, &pk)?;
            (1..m)
                .map(|l| Ok((l, d, delta_p_exact(&li, &Setup::with_first_ports(n, m, k, l)?, &q)?)))
                .collect()
        };
        match run() {
            Ok(rows) => {
                for (l, d, dp) in rows {
                    c.record(d >= dp.abs() - 1e-10, || {
                        format!("N={n} M={m} K={k} L={l}: tvd {d} < |ΔP| {}", dp.abs())
                    });
                }
            }
            Err(e) => c.error(e),
        }
    }
    c
}

fn normalization_suite(cfg: &SelftestConfig) -> Check {
    let mut c = Check::default();
    let mut rng = RandomSeed::new(cfg.seed, 4).rng();
    for draw in 0..15u64 {
        let n = rng.random_range(1..=4usize);
        let m = rng.random_range(n.max(2)..=6usize);
        let eta = rng.random_range(0.1..=1.0);
        let xi = rng.random_range(0.0..=1.0);
        let k = rng.random_range(0..=n);
        let run = || -> CoreResult<Vec<(f64, f64, f64)>> {
            let li = uniform_lossy(&haar_unitary(m, RandomSeed::new(cfg.seed, 300 + draw))?, eta)?;
            let q = noise(eta, xi);
            let s = Setup::with_first_ports(n, m, k, 1)?;
            let mut out = Vec::new();
            for (model, direct) in [
                (DistinguishabilityModel::full(xi), p_nocount(&li, &s, &q)?),
                (DistinguishabilityModel::reduced(k, xi), p_nocount_reduced(&li, &s, &q)?),
            ] {
                let p = output_distribution_small(&li, &s, &q, &model)?;
                let total: f64 = p.values().sum();
                let marginal: f64 = p.iter().filter(|(cfg, _)| cfg[0] == 0).map(|(_, v)| v).sum();
                out.push((total, marginal, direct));
            }
            Ok(out)
        };
        match run() {
            Ok(rows) => {
                for (total, marginal, direct) in rows {
                    c.record((total - 1.0).abs() <= 1e-10, || {
                        format!("N={n} M={m}: total probability {total}")
                    });
                    c.record((marginal - direct).abs() <= 1e-10, || {
                        format!("N={n} M={m} K={k}: no-count marginal {marginal} vs {direct}")
                    });
                }
            }
            Err(e) => c.error(e),
        }
    }
    c
}
