use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Parser, Subcommand, ValueEnum};

use zopt_core::analysis::verify_appendix_lemmas;
use zopt_core::harness::{run_experiment, ExperimentConfig, RunOptions};
use zopt_core::problems::make_least_squares;
use zopt_core::solvers::{suggest_params, ProblemMode};
use zopt_core::{BoxSet, OracleConfig};

#[derive(Parser)]
#[command(
    name = "zopt",
    version,
    about = "Zeroth-order Gaussian-smoothing optimizer experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    #[value(alias = "unconstrained")]
    Unc,
    #[value(alias = "constrained")]
    Con,
}

#[derive(Subcommand)]
enum Command {
    /// Run a multi-seed experiment from a config file.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Apply the config's [full] overrides.
        #[arg(long)]
        full: bool,
        /// Worker threads (0 = one per core).
        #[arg(long, default_value_t = 1)]
        jobs: usize,
        /// Directory for relative output paths.
        #[arg(long)]
        out_dir: Option<PathBuf>,
        /// Overrides run_seed_base.
        #[arg(long, env = "ZOPT_SEED", hide_env_values = true)]
        seed: Option<u64>,
    },
    /// Print the smoothing parameter and iteration count for a target accuracy.
    Suggest {
        #[arg(long, value_enum)]
        mode: Mode,
        #[arg(long)]
        eps: f64,
        #[arg(long)]
        n: usize,
        /// Gradient Lipschitz constant.
        #[arg(long)]
        lip: f64,
        /// PL constant.
        #[arg(long)]
        pl: f64,
        /// Diameter of the feasible set (constrained mode).
        #[arg(long)]
        dx: Option<f64>,
    },
    /// Monte Carlo check of the projected-scheme inequalities on a random
    /// box-constrained least-squares instance.
    Verify {
        #[arg(long, default_value_t = 1000)]
        probes: usize,
        #[arg(long, default_value_t = 200)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 5)]
        m: usize,
        #[arg(long, default_value_t = 10)]
        n: usize,
        /// Half-width of the box [-w, w]^n.
        #[arg(long, default_value_t = 0.5)]
        half_width: f64,
        #[arg(long, default_value_t = 1e-4)]
        mu: f64,
        /// Print `check,probes,violations,margin` rows instead of text.
        #[arg(long)]
        csv: bool,
    },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn run(cli: Cli) -> anyhow::Result<ExitCode> {
    match cli.command {
        Command::Run {
            config,
            full,
            jobs,
            out_dir,
            seed,
        } => {
            let mut cfg = ExperimentConfig::from_path(&config)?;
            if full {
                cfg = cfg.into_full()?;
            }
            if let Some(seed) = seed {
                cfg = cfg.with_seed_override(seed);
            }
            let out = run_experiment(&cfg, &RunOptions { jobs, out_dir })
                .with_context(|| format!("experiment {}", config.display()))?;
            let s = &out.series;
            let last = s.checkpoints.len() - 1;
            println!("wrote {}", out.csv_path.display());
            if let Some(svg) = &out.svg_path {
                println!("wrote {}", svg.display());
            }
            println!(
                "runs: {} completed, {} failed",
                s.num_runs,
                out.failures.len()
            );
            println!("mu = {:e}, h = {:e}", out.mu, out.step_size);
            println!(
                "f(x0) = {:e}, f* = {:e}, mean best f at k = {}: {:e}",
                out.initial_value, out.opt_value, s.checkpoints[last], s.mean_best_f[last]
            );
            if let Some(b) = &s.bound_rhs {
                println!("bound at k = {}: {:e}", s.checkpoints[last], b[last]);
            }
            if out.iterates_checked > 0 {
                println!(
                    "feasibility violations: {} of {} iterates",
                    out.feasibility_violations, out.iterates_checked
                );
            }
            for f in &out.failures {
                println!("run {} (seed {}) failed: {}", f.run, f.seed, f.error);
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Suggest {
            mode,
            eps,
            n,
            lip,
            pl,
            dx,
        } => {
            let mode = match mode {
                Mode::Unc => ProblemMode::Unconstrained,
                Mode::Con => ProblemMode::Constrained,
            };
            let s = suggest_params(mode, eps, n, lip, pl, dx)?;
            println!("mu = {:e}", s.mu);
            println!("num_iters = {}", s.num_iters);
            Ok(ExitCode::SUCCESS)
        }
        Command::Verify {
            probes,
            samples,
            seed,
            m,
            n,
            half_width,
            mu,
            csv,
        } => {
            if half_width.is_nan() || half_width <= 0.0 {
                bail!("--half-width must be positive");
            }
            let problem = make_least_squares(m, n, 0.1, seed)?;
            let set = BoxSet::uniform(n, -half_width, half_width)?;
            let oracle = OracleConfig::new(mu, seed)?;
            let report = verify_appendix_lemmas(&problem, &set, &oracle, probes, samples, seed)?;
            if csv {
                for row in report.csv_rows() {
                    println!("{row}");
                }
            } else {
                println!("{m}x{n} least squares on [-{half_width}, {half_width}]^{n}, mu = {mu:e}");
                println!("{report}");
                println!("result: {}", if report.passed() { "PASS" } else { "FAIL" });
            }
            Ok(if report.passed() {
                ExitCode::SUCCESS
            } else {
                ExitCode::FAILURE
            })
        }
    }
}
