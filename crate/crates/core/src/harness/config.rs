//! Experiment configuration files.
//!
//! The format is TOML restricted to flat `key = value` pairs under section
//! headers:
//!
//! ```toml
//! [experiment]
//! scenario = "unconstrained"   # or "constrained"
//! num_runs = 25
//! run_seed_base = 1000
//!
//! [problem]
//! m = 20
//! n = 100
//! noise_std = 0.1
//! seed = 7
//!
//! [solver]
//! mu = "suggest"               # or a number
//! eps = 0.1                    # target accuracy, needed for "suggest"
//! step_size = "theorem"        # or a number
//! num_iters = 20000
//! record_stride = 1000
//!
//! [set]                        # constrained scenario only
//! kind = "box"
//! lower = -0.5
//! upper = 0.5
//!
//! [output]
//! csv = "scenario1.csv"
//! svg = "scenario1.svg"
//! bound_overlay = true
//!
//! [full]                       # overrides applied with --full
//! m = 100
//! n = 1000
//! num_iters = 200000
//! ```

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Result, ZoptError};
use crate::sets::SetSpec;
use crate::solvers::ProblemMode;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scenario {
    Unconstrained,
    Constrained,
}

impl Scenario {
    pub fn mode(self) -> ProblemMode {
        match self {
            Scenario::Unconstrained => ProblemMode::Unconstrained,
            Scenario::Constrained => ProblemMode::Constrained,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Scenario::Unconstrained => "unconstrained",
            Scenario::Constrained => "constrained",
        }
    }

    pub fn default_solver(self) -> &'static str {
        match self {
            Scenario::Unconstrained => "rs_mu",
            Scenario::Constrained => "rsc_mu",
        }
    }
}

/// A number, or a keyword asking the harness to compute it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Auto {
    Value(f64),
    Keyword(String),
}

impl Auto {
    fn check(&self, key: &str, keyword: &str) -> std::result::Result<(), String> {
        match self {
            Auto::Value(v) if *v > 0.0 && v.is_finite() => Ok(()),
            Auto::Value(v) => Err(format!("`{key}` must be positive, got {v}")),
            Auto::Keyword(k) if k == keyword => Ok(()),
            Auto::Keyword(k) => Err(format!(
                "`{key}` must be a number or \"{keyword}\", got \"{k}\""
            )),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSection {
    pub scenario: Scenario,
    pub num_runs: usize,
    #[serde(default)]
    pub run_seed_base: u64,
    /// Seed of the initial point; defaults to the problem seed.
    #[serde(default)]
    pub init_seed: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemSection {
    pub m: usize,
    pub n: usize,
    #[serde(default = "default_noise")]
    pub noise_std: f64,
    #[serde(default)]
    pub seed: u64,
}

fn default_noise() -> f64 {
    0.1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSection {
    /// Registry name; defaults to `rs_mu` or `rsc_mu` by scenario.
    #[serde(default)]
    pub method: Option<String>,
    pub mu: Auto,
    #[serde(default)]
    pub eps: Option<f64>,
    pub step_size: Auto,
    pub num_iters: usize,
    #[serde(default = "default_stride")]
    pub record_stride: usize,
}

fn default_stride() -> usize {
    1000
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    pub csv: PathBuf,
    #[serde(default)]
    pub svg: Option<PathBuf>,
    #[serde(default = "default_true")]
    pub bound_overlay: bool,
}

fn default_true() -> bool {
    true
}

/// Keys replaced when running with `--full`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FullSection {
    pub m: Option<usize>,
    pub n: Option<usize>,
    pub num_runs: Option<usize>,
    pub num_iters: Option<usize>,
    pub mu: Option<Auto>,
    pub eps: Option<f64>,
    pub step_size: Option<Auto>,
    pub record_stride: Option<usize>,
    pub csv: Option<PathBuf>,
    pub svg: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: ExperimentSection,
    pub problem: ProblemSection,
    pub solver: SolverSection,
    #[serde(default)]
    pub set: Option<SetSpec>,
    pub output: OutputSection,
    #[serde(default)]
    pub full: Option<FullSection>,
}

/// 1-based line of `key` inside `[section]`, for error messages.
fn locate(source: &str, section: &str, key: &str) -> Option<usize> {
    let header = format!("[{section}]");
    let mut inside = false;
    for (i, line) in source.lines().enumerate() {
        let line = line.trim();
        if line.starts_with('[') {
            inside = line == header;
            if inside && key.is_empty() {
                return Some(i + 1);
            }
            continue;
        }
        if inside {
            if let Some((k, _)) = line.split_once('=') {
                if k.trim() == key {
                    return Some(i + 1);
                }
            }
        }
    }
    None
}

impl ExperimentConfig {
    /// Parses and validates. Errors carry the offending line number.
    pub fn parse(source: &str) -> Result<Self> {
        let config: Self = toml::from_str(source).map_err(|e| {
            let line = e.span().map(|span| {
                source[..span.start.min(source.len())]
                    .lines()
                    .count()
                    .max(1)
            });
            let msg = e.message().trim().to_string();
            match line {
                Some(line) => ZoptError::Config(format!("line {line}: {msg}")),
                None => ZoptError::Config(msg),
            }
        })?;
        config.validate_with(Some(source))?;
        Ok(config)
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let source = std::fs::read_to_string(path)?;
        Self::parse(&source).map_err(|e| match e {
            ZoptError::Config(msg) => ZoptError::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn validate(&self) -> Result<()> {
        self.validate_with(None)
    }

    fn validate_with(&self, source: Option<&str>) -> Result<()> {
        let fail = |section: &str, key: &str, msg: String| {
            let line = source.and_then(|s| locate(s, section, key));
            Err(ZoptError::Config(match line {
                Some(line) => format!("line {line}: {msg}"),
                None => format!("[{section}] {msg}"),
            }))
        };
        if self.experiment.num_runs == 0 {
            return fail(
                "experiment",
                "num_runs",
                "`num_runs` must be at least 1".into(),
            );
        }
        if self.problem.m == 0 || self.problem.n < self.problem.m {
            return fail(
                "problem",
                "n",
                format!(
                    "need 1 <= m <= n, got m = {}, n = {}",
                    self.problem.m, self.problem.n
                ),
            );
        }
        if !(self.problem.noise_std >= 0.0) {
            return fail(
                "problem",
                "noise_std",
                "`noise_std` must be nonnegative".into(),
            );
        }
        if let Err(msg) = self.solver.mu.check("mu", "suggest") {
            return fail("solver", "mu", msg);
        }
        if let Err(msg) = self.solver.step_size.check("step_size", "theorem") {
            return fail("solver", "step_size", msg);
        }
        if matches!(self.solver.mu, Auto::Keyword(_)) && !self.solver.eps.is_some_and(|e| e > 0.0) {
            return fail(
                "solver",
                "mu",
                "`mu = \"suggest\"` needs a positive `eps`".into(),
            );
        }
        if self.solver.record_stride == 0 {
            return fail(
                "solver",
                "record_stride",
                "`record_stride` must be at least 1".into(),
            );
        }
        match (self.experiment.scenario, &self.set) {
            (Scenario::Constrained, None) => {
                return fail(
                    "experiment",
                    "scenario",
                    "constrained scenario needs a [set] section".into(),
                )
            }
            (Scenario::Constrained, Some(SetSpec::WholeSpace)) => {
                return fail(
                    "set",
                    "kind",
                    "constrained scenario needs a bounded set".into(),
                )
            }
            (Scenario::Unconstrained, Some(spec)) if *spec != SetSpec::WholeSpace => {
                return fail(
                    "set",
                    "kind",
                    "unconstrained scenario takes no bounded set".into(),
                )
            }
            _ => {}
        }
        if let Some(spec) = &self.set {
            if let Err(e) = spec.build(1) {
                return fail("set", "kind", e.to_string());
            }
        }
        Ok(())
    }

    /// Applies the `[full]` overrides.
    pub fn into_full(mut self) -> Result<Self> {
        let Some(full) = self.full.take() else {
            return Err(ZoptError::Config(
                "--full given but the config has no [full] section".into(),
            ));
        };
        if let Some(v) = full.m {
            self.problem.m = v;
        }
        if let Some(v) = full.n {
            self.problem.n = v;
        }
        if let Some(v) = full.num_runs {
            self.experiment.num_runs = v;
        }
        if let Some(v) = full.num_iters {
            self.solver.num_iters = v;
        }
        if let Some(v) = full.mu {
            self.solver.mu = v;
        }
        if let Some(v) = full.eps {
            self.solver.eps = Some(v);
        }
        if let Some(v) = full.step_size {
            self.solver.step_size = v;
        }
        if let Some(v) = full.record_stride {
            self.solver.record_stride = v;
        }
        if let Some(v) = full.csv {
            self.output.csv = v;
        }
        if let Some(v) = full.svg {
            self.output.svg = Some(v);
        }
        self.validate()?;
        Ok(self)
    }

    /// Replaces the run seed base, e.g. from `ZOPT_SEED`.
    pub fn with_seed_override(mut self, seed: u64) -> Self {
        self.experiment.run_seed_base = seed;
        self
    }

    pub fn solver_name(&self) -> &str {
        self.solver
            .method
            .as_deref()
            .unwrap_or_else(|| self.experiment.scenario.default_solver())
    }
}
