//! Config-driven multi-seed experiments.
//!
//! One problem is generated from the problem seed. Run `i` uses oracle seed
//! `run_seed_base + i` and all runs start from the same `x_0`. Runs execute
//! on a worker pool and are aggregated in run order, so the output does not
//! depend on the number of workers.

pub mod aggregate;
pub mod config;
pub mod plot;

use std::path::{Path, PathBuf};

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::analysis::{sigma_bound, BoundInputs, SigmaMode};
use crate::error::{Result, ZoptError};
use crate::oracle::{rng_for, OracleConfig};
use crate::problems::{make_least_squares, TestProblem};
use crate::sets::{FeasibleSet, SetSpec, MEMBERSHIP_TOL};
use crate::solvers::{
    suggest_params, theorem_step_constrained, theorem_step_unconstrained, RunRecord, SolverConfig,
    SolverRegistry,
};
use crate::Vector;

pub use aggregate::{aggregate, checkpoint_grid, AggregateSeries, BoundSpec};
pub use config::{Auto, ExperimentConfig, Scenario};
pub use plot::render_svg;

#[derive(Debug, Clone)]
pub struct RunOptions {
    /// Worker threads; 0 means one per core.
    pub jobs: usize,
    /// Directory that relative output paths are resolved against.
    pub out_dir: Option<PathBuf>,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self {
            jobs: 1,
            out_dir: None,
        }
    }
}

/// A run that stopped early.
#[derive(Debug, Clone, PartialEq)]
pub struct RunFailure {
    pub run: usize,
    pub seed: u64,
    pub error: String,
}

/// Everything an experiment produced.
#[derive(Debug, Clone)]
pub struct ExperimentOutput {
    pub series: AggregateSeries,
    pub failures: Vec<RunFailure>,
    /// Iterates outside the set, over all runs.
    pub feasibility_violations: usize,
    /// Iterates checked for membership.
    pub iterates_checked: usize,
    pub mu: f64,
    pub step_size: f64,
    pub opt_value: f64,
    pub initial_value: f64,
    pub csv_path: PathBuf,
    pub svg_path: Option<PathBuf>,
}

/// Resolved experiment inputs, shared by every run.
pub struct Setup {
    pub problem: TestProblem,
    pub set: Box<dyn FeasibleSet>,
    pub x0: Vector,
    pub mu: f64,
    pub step_size: f64,
    /// `f*` on the feasible set.
    pub opt_value: f64,
}

/// Builds the problem, the set, `x_0`, `mu` and `h` from a config.
pub fn setup(config: &ExperimentConfig) -> Result<Setup> {
    let p = &config.problem;
    let problem = make_least_squares(p.m, p.n, p.noise_std, p.seed)?;
    let n = problem.dim();
    let set = config.set.clone().unwrap_or(SetSpec::WholeSpace).build(n)?;
    let init_seed = config.experiment.init_seed.unwrap_or(p.seed);
    let mut rng = rng_for(init_seed, 1);
    let raw = Vector::from_iterator(n, (0..n).map(|_| rng.sample::<f64, _>(StandardNormal)));
    let x0 = set.project(&raw);

    let scenario = config.experiment.scenario;
    let d_x = set.is_bounded().then(|| set.diameter());
    let mu = match &config.solver.mu {
        Auto::Value(v) => *v,
        Auto::Keyword(_) => {
            let eps = config.solver.eps.unwrap_or_default();
            suggest_params(
                scenario.mode(),
                eps,
                n,
                problem.lip_const,
                problem.pl_const,
                d_x,
            )?
            .mu
        }
    };
    let step_size = match &config.solver.step_size {
        Auto::Value(v) => *v,
        Auto::Keyword(_) => match scenario {
            Scenario::Unconstrained => theorem_step_unconstrained(n, problem.lip_const),
            Scenario::Constrained => theorem_step_constrained(problem.lip_const),
        },
    };
    let opt_value = match scenario {
        Scenario::Unconstrained => problem.opt_value,
        Scenario::Constrained => problem.constrained_optimum(set.as_ref())?.0,
    };
    Ok(Setup {
        problem,
        set,
        x0,
        mu,
        step_size,
        opt_value,
    })
}

struct RunOutcome {
    record: RunRecord,
    /// `sigma_k^2` bound at every iterate (constrained runs only).
    sigma_sq: Vec<f64>,
    violations: usize,
}

fn resolve(out_dir: Option<&Path>, path: &Path) -> PathBuf {
    match out_dir {
        Some(dir) if path.is_relative() => dir.join(path),
        _ => path.to_path_buf(),
    }
}

fn write_file(path: &Path, contents: &[u8]) -> Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent)?;
    }
    std::fs::write(path, contents)?;
    Ok(())
}

/// Runs the experiment and writes its CSV (and SVG, if configured).
pub fn run_experiment(config: &ExperimentConfig, options: &RunOptions) -> Result<ExperimentOutput> {
    config.validate()?;
    let registry = SolverRegistry::with_defaults();
    let solver = registry.get(config.solver_name())?;
    let scenario = config.experiment.scenario;
    if solver.requires_bounded_set() != (scenario == Scenario::Constrained) {
        return Err(ZoptError::Config(format!(
            "solver `{}` does not fit the {} scenario",
            solver.name(),
            scenario.as_str()
        )));
    }
    let Setup {
        problem,
        set,
        x0,
        mu,
        step_size,
        opt_value,
    } = setup(config)?;
    let n = problem.dim();
    let lip = problem.lip_const;
    let constrained = scenario == Scenario::Constrained;
    let num_iters = config.solver.num_iters;
    let base = config.experiment.run_seed_base;
    log::info!(
        "{}: m = {}, n = {n}, mu = {mu:e}, h = {step_size:e}, N = {num_iters}, {} runs",
        solver.name(),
        problem.rows(),
        config.experiment.num_runs
    );

    let run_one = |i: usize| -> Result<RunOutcome> {
        let seed = base.wrapping_add(i as u64);
        let cfg = SolverConfig::new(OracleConfig::new(mu, seed)?, step_size, num_iters)
            .with_record_stride(config.solver.record_stride)
            .with_lip_const(lip);
        let mut sigma_sq = Vec::new();
        let mut violations = 0;
        let mut observer = |_k: usize, x: &Vector, _value: f64| {
            if constrained {
                let grad_norm = problem.grad(x).norm();
                sigma_sq.push(sigma_bound(SigmaMode::C11 { grad_norm }, mu, n, lip));
                if set.violation(x) > MEMBERSHIP_TOL {
                    violations += 1;
                }
            }
        };
        let record = solver.solve(problem.objective(), set.as_ref(), &x0, &cfg, &mut observer)?;
        Ok(RunOutcome {
            record,
            sigma_sq,
            violations,
        })
    };

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(options.jobs)
        .build()
        .map_err(|e| ZoptError::Config(format!("worker pool: {e}")))?;
    let results: Vec<Result<RunOutcome>> = pool.install(|| {
        (0..config.experiment.num_runs)
            .into_par_iter()
            .map(run_one)
            .collect()
    });

    let mut failures = Vec::new();
    let mut outcomes = Vec::new();
    for (i, result) in results.into_iter().enumerate() {
        match result {
            Ok(outcome) => outcomes.push(outcome),
            Err(e) => {
                let seed = base.wrapping_add(i as u64);
                log::warn!("run {i} (seed {seed}) failed: {e}");
                failures.push(RunFailure {
                    run: i,
                    seed,
                    error: e.to_string(),
                });
            }
        }
    }
    if outcomes.is_empty() {
        return Err(ZoptError::Degenerate(format!(
            "all {} runs failed; first error: {}",
            failures.len(),
            failures[0].error
        )));
    }
    if !failures.is_empty() {
        log::warn!(
            "aggregating {} of {} runs",
            outcomes.len(),
            config.experiment.num_runs
        );
    }

    let initial_value = problem.eval(&x0);
    let initial_gap = (initial_value - opt_value).max(0.0);
    let checkpoints = checkpoint_grid(num_iters);
    let bound = if config.output.bound_overlay {
        let mut inputs = BoundInputs::unconstrained(n, lip, problem.pl_const, mu, initial_gap);
        Some(if constrained {
            // root mean square of the per-run sigma_k
            let runs = outcomes.len() as f64;
            inputs.sigma_seq = (0..=num_iters)
                .map(|k| (outcomes.iter().map(|o| o.sigma_sq[k]).sum::<f64>() / runs).sqrt())
                .collect();
            inputs.d_x = Some(set.diameter());
            BoundSpec::Theorem2(inputs)
        } else {
            BoundSpec::Theorem1(inputs)
        })
    } else {
        None
    };
    let feasibility_violations: usize = outcomes.iter().map(|o| o.violations).sum();
    let iterates_checked: usize = outcomes.iter().map(|o| o.sigma_sq.len()).sum();
    let records: Vec<RunRecord> = outcomes.into_iter().map(|o| o.record).collect();
    let mut series = aggregate(&records, &checkpoints, Some(opt_value), bound.as_ref())?;

    let theorem_step = if constrained {
        theorem_step_constrained(lip)
    } else {
        theorem_step_unconstrained(n, lip)
    };
    let meta = &mut series.metadata;
    let mut put = |k: &str, v: String| meta.push((k.to_string(), v));
    put("scenario", scenario.as_str().into());
    put("solver", solver.name().into());
    put("m", problem.rows().to_string());
    put("n", n.to_string());
    put("noise_std", format!("{:e}", problem.noise_std));
    put("problem_seed", problem.seed.to_string());
    put("run_seed_base", base.to_string());
    put("failed_runs", failures.len().to_string());
    put("mu", format!("{mu:e}"));
    put("step_size", format!("{step_size:e}"));
    put("theorem_step", format!("{theorem_step:e}"));
    put("num_iters", num_iters.to_string());
    put("lip_const", format!("{lip:e}"));
    put("pl_const", format!("{:e}", problem.pl_const));
    put("set", set.describe());
    put(
        "f_star_source",
        if constrained {
            "minimum over the feasible set".into()
        } else {
            "minimum-norm least-squares solution".into()
        },
    );
    put("f0", format!("{initial_value:e}"));
    put(
        "x0",
        if constrained {
            "standard normal projected onto the set".into()
        } else {
            "standard normal".into()
        },
    );
    put(
        "bound",
        bound.as_ref().map_or("none", BoundSpec::name).into(),
    );
    if bound.is_some() {
        put(
            "bound_step_matches_theorem",
            (step_size == theorem_step).to_string(),
        );
    }
    if constrained {
        put(
            "pl_const_note",
            "unconstrained l used for the constrained bound".into(),
        );
        put(
            "sigma",
            "rms over runs of the c11 second-moment bound".into(),
        );
        put("feasibility_violations", feasibility_violations.to_string());
    }

    let out_dir = options.out_dir.as_deref();
    let csv_path = resolve(out_dir, &config.output.csv);
    let mut csv = Vec::new();
    series.write_csv(&mut csv)?;
    write_file(&csv_path, &csv)?;
    let svg_path = match &config.output.svg {
        Some(path) => {
            let path = resolve(out_dir, path);
            let title = format!(
                "{} on {}x{} least squares, {} runs",
                solver.name(),
                problem.rows(),
                n,
                series.num_runs
            );
            write_file(&path, render_svg(&series, &title).as_bytes())?;
            Some(path)
        }
        None => None,
    };

    Ok(ExperimentOutput {
        series,
        failures,
        feasibility_violations,
        iterates_checked,
        mu,
        step_size,
        opt_value,
        initial_value,
        csv_path,
        svg_path,
    })
}
