use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use noisybs::analytics::{bunching_threshold, normal_quantile, sample_count, wilson_estimate};
use noisybs_cli::format::{format_number, Format};
use noisybs_cli::matrix::MatrixSpec;
use noisybs_cli::point::{Mode, Point};
use noisybs_cli::sweep::{run_sweep, write_single, SweepOptions, SweepSpec};
use noisybs_cli::{presets, selftest, CliError, CliResult};

/// Distinguishing noisy boson sampling from its low-order approximations
/// through no-count probabilities.
#[derive(Parser)]
#[command(name = "noisybs", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct PointArgs {
    /// Number of bosons
    #[arg(long = "N")]
    n: Option<usize>,
    /// Number of modes
    #[arg(long = "M")]
    m: Option<usize>,
    /// Density N/M; sets M = round(N/rho) when M is absent
    #[arg(long)]
    rho: Option<f64>,
    /// Uniform transmission
    #[arg(long, default_value_t = 1.0)]
    eta: f64,
    /// Pairwise indistinguishability
    #[arg(long, default_value_t = 1.0)]
    xi: f64,
    /// Dark-count rate per detector
    #[arg(long, default_value_t = 0.0)]
    nu: f64,
    /// Interference order cutoff
    #[arg(long = "K", default_value_t = 1)]
    k: usize,
    /// Number of probed output ports (the first L)
    #[arg(long = "L", default_value_t = 1)]
    l: usize,
    /// Haar trials for ensembles (default 500 up to N = 12, 100 above)
    #[arg(long)]
    trials: Option<u64>,
    /// Base random seed
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads for ensembles; 0 uses all cores
    #[arg(long, default_value_t = 0)]
    workers: usize,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
}

impl PointArgs {
    fn point(&self) -> Point {
        Point {
            n: self.n,
            m: self.m,
            rho: self.rho,
            eta: self.eta,
            xi: self.xi,
            nu: self.nu,
            k: self.k,
            l: self.l,
            trials: self.trials,
            seed: self.seed,
            matrix: None,
        }
    }
}

#[derive(Args, Clone)]
struct MatrixArgs {
    /// balanced2, fourierM, haar:SEED or composite:SEED (default haar:SEED)
    #[arg(long, conflicts_with = "matrix_file")]
    matrix: Option<String>,
    /// JSON matrix {"n": M, "re": [...], "im": [...]}, row-major
    #[arg(long)]
    matrix_file: Option<PathBuf>,
}

impl MatrixArgs {
    fn spec(&self) -> CliResult<Option<MatrixSpec>> {
        match (&self.matrix, &self.matrix_file) {
            (Some(name), _) => name.parse().map(Some),
            (None, Some(path)) => MatrixSpec::from_file(path).map(Some),
            (None, None) => Ok(None),
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// ΔP_L = P_L − P_L^(K) for one interferometer
    Deltap {
        #[command(flatten)]
        point: PointArgs,
        #[command(flatten)]
        matrix: MatrixArgs,
    },
    /// No-count probability P_L for one interferometer
    Pnocount {
        #[command(flatten)]
        point: PointArgs,
        #[command(flatten)]
        matrix: MatrixArgs,
    },
    /// Haar average of ΔP₁, closed form
    DeltapAvg {
        #[command(flatten)]
        point: PointArgs,
    },
    /// Haar ensemble mean of ΔP_L
    DeltapEnsemble {
        #[command(flatten)]
        point: PointArgs,
    },
    /// Leading-order average W₁ of ΔP₁
    W1 {
        #[command(flatten)]
        point: PointArgs,
    },
    /// Haar average of P₁, exact sum
    P1Exact {
        #[command(flatten)]
        point: PointArgs,
    },
    /// Haar average of P₁, small-ρη approximation
    P1Approx {
        #[command(flatten)]
        point: PointArgs,
    },
    /// Haar ensemble mean of P_L
    P1Ensemble {
        #[command(flatten)]
        point: PointArgs,
    },
    /// Haar variance of ΔP₁
    Variance {
        #[command(flatten)]
        point: PointArgs,
        /// Leading-order formula instead of the exact sum
        #[arg(long)]
        asymptotic: bool,
    },
    /// Samples needed to resolve P₁ to ε·W₁ at confidence 1 − α
    Samples {
        #[arg(long)]
        p1: f64,
        #[arg(long)]
        w1: f64,
        #[arg(long, default_value_t = 0.05)]
        alpha: f64,
        #[arg(long, default_value_t = 0.1)]
        epsilon: f64,
    },
    /// Wilson estimate of a no-count probability from t_s hits in t samples
    Wilson {
        #[arg(long)]
        t: u64,
        #[arg(long)]
        ts: u64,
        /// Confidence level α; sets z to the two-sided normal quantile
        #[arg(long, default_value_t = 0.05)]
        alpha: f64,
    },
    /// Occupation exceeded with probability at most δ
    Bunching {
        #[arg(long = "N")]
        n: usize,
        #[arg(long)]
        rho: f64,
        #[arg(long)]
        delta: f64,
    },
    /// Parameter sweep from a JSON document or a built-in preset
    Sweep {
        /// Sweep document
        #[arg(required_unless_present = "preset", conflicts_with = "preset")]
        spec: Option<PathBuf>,
        /// fig2a or fig2b
        #[arg(long)]
        preset: Option<String>,
        /// Output path, `-` for stdout; `{mode}` is replaced by the mode name
        #[arg(long)]
        out: Option<String>,
        #[arg(long, value_enum)]
        format: Option<Format>,
        /// Continue an interrupted csv sweep after its last complete row
        #[arg(long)]
        resume: bool,
        #[arg(long, default_value_t = 0)]
        workers: usize,
    },
    /// Built-in consistency checks at N ≤ 8
    Selftest {
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
}

fn point_command(point: &PointArgs, mode: Mode, matrix: Option<&MatrixArgs>) -> CliResult<()> {
    let spec = match matrix {
        Some(m) => m.spec()?,
        None => None,
    };
    write_single(
        std::io::stdout(),
        point.format,
        &point.point(),
        mode,
        spec.as_ref(),
        point.workers,
    )?;
    Ok(())
}

fn run(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Deltap { point, matrix } => point_command(&point, Mode::DeltapExact, Some(&matrix)),
        Command::Pnocount { point, matrix } => point_command(&point, Mode::Pnocount, Some(&matrix)),
        Command::DeltapAvg { point } => point_command(&point, Mode::DeltapAvgAnalytic, None),
        Command::DeltapEnsemble { point } => point_command(&point, Mode::DeltapEnsemble, None),
        Command::W1 { point } => point_command(&point, Mode::W1, None),
        Command::P1Exact { point } => point_command(&point, Mode::P1Exact, None),
        Command::P1Approx { point } => point_command(&point, Mode::P1Approx, None),
        Command::P1Ensemble { point } => point_command(&point, Mode::P1Ensemble, None),
        Command::Variance { point, asymptotic } => {
            let mode = if asymptotic {
                Mode::VarianceAsymptotic
            } else {
                Mode::Variance
            };
            point_command(&point, mode, None)
        }
        Command::Samples { p1, w1, alpha, epsilon } => {
            println!("{}", sample_count(p1, w1, alpha, epsilon)?);
            Ok(())
        }
        Command::Wilson { t, ts, alpha } => {
            println!("{}", format_number(wilson_estimate(t, ts, normal_quantile(alpha)?)?));
            Ok(())
        }
        Command::Bunching { n, rho, delta } => {
            println!("{}", format_number(bunching_threshold(n, rho, delta)?));
            Ok(())
        }
        Command::Sweep {
            spec,
            preset,
            out,
            format,
            resume,
            workers,
        } => {
            let spec = match (spec, preset) {
                (_, Some(name)) => presets::preset(&name)?,
                (Some(path), None) => {
                    let text = std::fs::read_to_string(&path)
                        .map_err(|e| CliError::usage(format!("cannot read {}: {e}", path.display())))?;
                    SweepSpec::from_json(&text)?
                }
                (None, None) => return Err(CliError::usage("give a sweep document or --preset")),
            };
            let opts = SweepOptions {
                output: out,
                format,
                resume,
                workers,
            };
            for r in run_sweep(&spec, &opts)? {
                if r.path != "-" {
                    eprintln!(
                        "{}: {} rows written to {} ({} already present)",
                        r.mode.name(),
                        r.written,
                        r.path,
                        r.skipped
                    );
                }
            }
            Ok(())
        }
        Command::Selftest { seed } => {
            let cfg = selftest::SelftestConfig {
                seed,
                ..Default::default()
            };
            let reports = selftest::run(&cfg, &mut std::io::stdout())?;
            let failed = reports.iter().filter(|r| !r.passed).count();
            if failed > 0 {
                return Err(CliError::numeric(format!("{failed} selftest suite(s) failed")));
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
