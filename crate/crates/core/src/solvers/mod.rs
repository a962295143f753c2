//! Random-search iterations and the registry that selects them by name.
//!
//! Both schemes take one oracle step per iteration,
//! `x_{k+1} = x_k - h g_mu(x_k)`; the constrained one projects the result
//! back onto the feasible set. Iteration `k` draws its direction from the
//! sub-stream `(seed, k)`, so a run is reproducible step by step.
//!
//! A run of `N` iterations produces `x_0, ..., x_N` and spends `2N + 1`
//! evaluations: two per oracle call, one more for `f(x_N)`.

mod record;
mod rs_mu;
mod rsc_mu;

use std::collections::BTreeMap;

use crate::error::{Result, ZoptError};
use crate::oracle::{rng_for, sample_direction, Direction, OracleConfig};
use crate::problems::Objective;
use crate::sets::FeasibleSet;
use crate::Vector;

pub use record::{read_trajectory, write_record_csv, write_trajectory};
pub use rs_mu::{rs_mu_run, rs_mu_run_with, RsMu};
pub use rsc_mu::{rsc_mu_run, rsc_mu_run_with, RscMu};

/// Divergence guard: abort once `f(x_k) > DIVERGENCE_FACTOR * max(1, f(x_0))`.
pub const DIVERGENCE_FACTOR: f64 = 1e12;

#[derive(Debug, Clone)]
pub struct SolverConfig {
    pub oracle: OracleConfig,
    /// Constant step `h`.
    pub step_size: f64,
    pub num_iters: usize,
    /// Keep every `record_stride`-th iterate vector (plus the last one).
    /// Function values are always kept for every iterate.
    pub record_stride: usize,
    /// Gradient Lipschitz constant, when known. Only used for step-size
    /// warnings.
    pub lip_const: Option<f64>,
}

impl SolverConfig {
    pub fn new(oracle: OracleConfig, step_size: f64, num_iters: usize) -> Self {
        Self {
            oracle,
            step_size,
            num_iters,
            record_stride: 1,
            lip_const: None,
        }
    }

    pub fn with_record_stride(mut self, stride: usize) -> Self {
        self.record_stride = stride;
        self
    }

    pub fn with_lip_const(mut self, lip: f64) -> Self {
        self.lip_const = Some(lip);
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.oracle = self.oracle.reseeded(seed);
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.step_size > 0.0 && self.step_size.is_finite()) {
            return Err(ZoptError::Config(format!(
                "step size must be positive and finite, got {}",
                self.step_size
            )));
        }
        if self.record_stride == 0 {
            return Err(ZoptError::Config("record_stride must be at least 1".into()));
        }
        Ok(())
    }
}

/// The direction iteration `k` of a run with this oracle draws.
pub fn direction_for(oracle: &OracleConfig, n: usize, k: usize) -> Result<Direction> {
    sample_direction(oracle, n, &mut rng_for(oracle.seed(), k as u64))
}

/// Trajectory of a single run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunRecord {
    pub solver: String,
    pub seed: u64,
    pub mu: f64,
    pub step_size: f64,
    pub num_iters: usize,
    pub record_stride: usize,
    /// `f(x_k)` for `k = 0..=N`.
    pub values: Vec<f64>,
    /// Running minimum of `values`.
    pub best_so_far: Vec<f64>,
    /// Thinned `(k, x_k)` pairs.
    pub iterates: Vec<(usize, Vector)>,
    pub best_index: usize,
    pub best_point: Vector,
    pub final_point: Vector,
    pub function_eval_count: usize,
}

impl RunRecord {
    pub fn iterations_completed(&self) -> usize {
        self.values.len().saturating_sub(1)
    }

    pub fn final_value(&self) -> f64 {
        *self.values.last().expect("record holds f(x_0)")
    }
}

/// Best iterate `x_hat` of a record.
#[derive(Debug, Clone, PartialEq)]
pub struct BestIterate {
    pub index: usize,
    pub value: f64,
    /// The point, when it was kept (always true for records produced by the
    /// solvers in this module).
    pub point: Option<Vector>,
}

/// Earliest iterate attaining the smallest recorded value.
pub fn best_iterate(record: &RunRecord) -> Result<BestIterate> {
    let (index, value) = record
        .values
        .iter()
        .copied()
        .enumerate()
        .fold(None, |best: Option<(usize, f64)>, (k, v)| match best {
            Some((_, bv)) if bv <= v => best,
            _ => Some((k, v)),
        })
        .ok_or_else(|| ZoptError::Config("empty run record".into()))?;
    let point = if record.best_index == index && !record.best_point.is_empty() {
        Some(record.best_point.clone())
    } else {
        record
            .iterates
            .iter()
            .find(|(k, _)| *k == index)
            .map(|(_, x)| x.clone())
    };
    Ok(BestIterate {
        index,
        value,
        point,
    })
}

/// Per-iteration hook. Receives `(k, x_k, f(x_k))` for `k = 0..=N`.
///
/// Analysis code uses this to evaluate quantities the solver itself must not
/// see, such as exact gradients.
pub trait IterationObserver {
    fn observe(&mut self, k: usize, x: &Vector, value: f64);
}

impl<F: FnMut(usize, &Vector, f64)> IterationObserver for F {
    fn observe(&mut self, k: usize, x: &Vector, value: f64) {
        self(k, x, value)
    }
}

/// Observer that ignores everything.
pub struct NoObserver;

impl IterationObserver for NoObserver {
    fn observe(&mut self, _k: usize, _x: &Vector, _value: f64) {}
}

/// A zeroth-order iteration scheme selectable by name.
pub trait Solver: Send + Sync {
    fn name(&self) -> &'static str;

    fn description(&self) -> &'static str;

    /// Whether the scheme needs a bounded feasible set.
    fn requires_bounded_set(&self) -> bool;

    fn solve(
        &self,
        f: &dyn Objective,
        set: &dyn FeasibleSet,
        x0: &Vector,
        cfg: &SolverConfig,
        observer: &mut dyn IterationObserver,
    ) -> Result<RunRecord>;
}

/// Name-keyed collection of solvers.
pub struct SolverRegistry {
    solvers: BTreeMap<&'static str, Box<dyn Solver>>,
}

impl SolverRegistry {
    pub fn empty() -> Self {
        Self {
            solvers: BTreeMap::new(),
        }
    }

    /// Registry holding `rs_mu` and `rsc_mu`.
    pub fn with_defaults() -> Self {
        let mut registry = Self::empty();
        registry.register(Box::new(RsMu));
        registry.register(Box::new(RscMu));
        registry
    }

    /// Adds a solver, replacing any previous one of the same name.
    pub fn register(&mut self, solver: Box<dyn Solver>) -> Option<Box<dyn Solver>> {
        self.solvers.insert(solver.name(), solver)
    }

    pub fn get(&self, name: &str) -> Result<&dyn Solver> {
        self.solvers
            .get(name)
            .map(|s| s.as_ref())
            .ok_or_else(|| ZoptError::UnknownSolver(name.to_string()))
    }

    pub fn names(&self) -> impl Iterator<Item = &'static str> + '_ {
        self.solvers.keys().copied()
    }
}

impl Default for SolverRegistry {
    fn default() -> Self {
        Self::with_defaults()
    }
}

/// Whether parameters target the unconstrained or the projected scheme.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProblemMode {
    Unconstrained,
    Constrained,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ParamSuggestion {
    pub mu: f64,
    pub num_iters: usize,
}

/// Smoothing parameter and iteration count for a target accuracy `eps`.
///
/// Unconstrained: `mu = sqrt(l eps) / (n^{3/2} L)`, `N = ceil(n L / (l eps))`.
/// Constrained: `mu = l eps / (d_x L^2 (n+3)^{3/2})`, `N = ceil(L / (l eps))`.
/// The hidden constants of the order estimates are taken as 1, so the
/// output is a starting point rather than a guarantee.
pub fn suggest_params(
    mode: ProblemMode,
    eps: f64,
    n: usize,
    lip_const: f64,
    pl_const: f64,
    d_x: Option<f64>,
) -> Result<ParamSuggestion> {
    let positive = |name: &str, v: f64| {
        if v > 0.0 && v.is_finite() {
            Ok(())
        } else {
            Err(ZoptError::Config(format!(
                "{name} must be positive, got {v}"
            )))
        }
    };
    positive("eps", eps)?;
    positive("lip_const", lip_const)?;
    positive("pl_const", pl_const)?;
    if n == 0 {
        return Err(ZoptError::Config("dimension must be positive".into()));
    }
    let nf = n as f64;
    let (mu, iters) = match mode {
        ProblemMode::Unconstrained => (
            (pl_const * eps).sqrt() / (nf.powf(1.5) * lip_const),
            nf * lip_const / (pl_const * eps),
        ),
        ProblemMode::Constrained => {
            let d_x = d_x.ok_or_else(|| {
                ZoptError::Config("constrained suggestion needs the set diameter".into())
            })?;
            if d_x.is_infinite() {
                return Err(ZoptError::UnboundedSet);
            }
            positive("d_x", d_x)?;
            (
                pl_const * eps / (d_x * lip_const * lip_const * (nf + 3.0).powf(1.5)),
                lip_const / (pl_const * eps),
            )
        }
    };
    // guard against ceil(2.0000000000000004) = 3
    let num_iters = (iters * (1.0 - 1e-12)).ceil() as usize;
    Ok(ParamSuggestion { mu, num_iters })
}

/// `h = 1 / (4 (n + 4) L)`, the unconstrained step of the convergence theorem.
pub fn theorem_step_unconstrained(n: usize, lip_const: f64) -> f64 {
    1.0 / (4.0 * (n as f64 + 4.0) * lip_const)
}

/// `h = 1 / L`, the projected step of the convergence theorem.
pub fn theorem_step_constrained(lip_const: f64) -> f64 {
    1.0 / lip_const
}

/// Shared iteration loop. `next` maps `(x_k, g_k)` to `x_{k+1}`.
pub(crate) fn run_loop<N>(
    solver: &str,
    f: &dyn Objective,
    x0: &Vector,
    cfg: &SolverConfig,
    observer: &mut dyn IterationObserver,
    mut next: N,
) -> Result<RunRecord>
where
    N: FnMut(&Vector, &Vector) -> Vector,
{
    cfg.validate()?;
    let n = f.dim();
    if x0.len() != n {
        return Err(ZoptError::DimensionMismatch {
            expected: n,
            actual: x0.len(),
        });
    }
    let big_n = cfg.num_iters;
    let mut values = Vec::with_capacity(big_n + 1);
    let mut best_so_far = Vec::with_capacity(big_n + 1);
    let mut iterates = Vec::new();
    let mut evals = 0usize;
    let mut x = x0.clone();
    let mut best_index = 0;
    let mut best_point = x0.clone();
    let mut ceiling = f64::INFINITY;

    let mut push_value = |k: usize, x: &Vector, value: f64| -> Result<()> {
        if !value.is_finite() || value > ceiling {
            return Err(ZoptError::Diverged {
                iteration: k,
                value,
                point_norm: x.norm(),
            });
        }
        if k == 0 {
            ceiling = DIVERGENCE_FACTOR * value.max(1.0);
        }
        let best = best_so_far.last().copied().unwrap_or(f64::INFINITY);
        if value < best {
            best_index = k;
            best_point.copy_from(x);
            best_so_far.push(value);
        } else {
            best_so_far.push(best);
        }
        values.push(value);
        if k.is_multiple_of(cfg.record_stride) || k == big_n {
            iterates.push((k, x.clone()));
        }
        Ok(())
    };

    for k in 0..big_n {
        let u = direction_for(&cfg.oracle, n, k)?;
        let sample = match crate::oracle::oracle_sample(f, &x, &u, &cfg.oracle) {
            Ok(s) => s,
            Err(ZoptError::NonFiniteValue { value, point_norm }) => {
                return Err(ZoptError::Diverged {
                    iteration: k,
                    value,
                    point_norm,
                })
            }
            Err(e) => return Err(e),
        };
        evals += 2;
        push_value(k, &x, sample.f_x)?;
        observer.observe(k, &x, sample.f_x);
        x = next(&x, &sample.estimate);
    }
    let f_last = f.eval(&x);
    evals += 1;
    push_value(big_n, &x, f_last)?;
    observer.observe(big_n, &x, f_last);

    if log::log_enabled!(log::Level::Debug) {
        log::debug!(
            "{solver}: seed {} finished {big_n} iterations, f = {f_last:e}",
            cfg.oracle.seed()
        );
    }
    Ok(RunRecord {
        solver: solver.to_string(),
        seed: cfg.oracle.seed(),
        mu: cfg.oracle.mu(),
        step_size: cfg.step_size,
        num_iters: big_n,
        record_stride: cfg.record_stride,
        values,
        best_so_far,
        iterates,
        best_index,
        best_point,
        final_point: x,
        function_eval_count: evals,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems::FnObjective;
    use crate::sets::WholeSpace;

    fn record_with_values(values: Vec<f64>) -> RunRecord {
        let mut best = Vec::new();
        let mut m = f64::INFINITY;
        for &v in &values {
            m = m.min(v);
            best.push(m);
        }
        RunRecord {
            solver: "manual".into(),
            seed: 0,
            mu: 1.0,
            step_size: 1.0,
            num_iters: values.len() - 1,
            record_stride: 1,
            iterates: values
                .iter()
                .enumerate()
                .map(|(k, _)| (k, Vector::from_element(1, k as f64)))
                .collect(),
            values,
            best_so_far: best,
            best_index: usize::MAX,
            best_point: Vector::zeros(0),
            final_point: Vector::zeros(1),
            function_eval_count: 0,
        }
    }

    #[test]
    fn best_iterate_breaks_ties_to_earliest() {
        let b = best_iterate(&record_with_values(vec![3.0, 1.0, 1.0, 2.0])).unwrap();
        assert_eq!((b.index, b.value), (1, 1.0));
        assert_eq!(b.point, Some(Vector::from_element(1, 1.0)));
        let b = best_iterate(&record_with_values(vec![4.0])).unwrap();
        assert_eq!((b.index, b.value), (0, 4.0));
        let b = best_iterate(&record_with_values(vec![2.0; 5])).unwrap();
        assert_eq!(b.index, 0);
        let mut empty = record_with_values(vec![1.0]);
        empty.values.clear();
        assert!(best_iterate(&empty).is_err());
    }

    #[test]
    fn registry_lookup() {
        let registry = SolverRegistry::with_defaults();
        assert_eq!(
            registry.names().collect::<Vec<_>>(),
            vec!["rs_mu", "rsc_mu"]
        );
        assert!(registry.get("rs_mu").is_ok());
        assert!(!registry.get("rs_mu").unwrap().requires_bounded_set());
        assert!(registry.get("rsc_mu").unwrap().requires_bounded_set());
        assert!(matches!(
            registry.get("nelder_mead"),
            Err(ZoptError::UnknownSolver(_))
        ));
    }

    struct Stay;

    impl Solver for Stay {
        fn name(&self) -> &'static str {
            "stay"
        }
        fn description(&self) -> &'static str {
            "never moves"
        }
        fn requires_bounded_set(&self) -> bool {
            false
        }
        fn solve(
            &self,
            f: &dyn Objective,
            _set: &dyn FeasibleSet,
            x0: &Vector,
            cfg: &SolverConfig,
            observer: &mut dyn IterationObserver,
        ) -> Result<RunRecord> {
            run_loop("stay", f, x0, cfg, observer, |x, _| x.clone())
        }
    }

    #[test]
    fn custom_solvers_can_be_registered() {
        let mut registry = SolverRegistry::with_defaults();
        assert!(registry.register(Box::new(Stay)).is_none());
        let f = FnObjective::new(2, |x: &Vector| x.norm_squared());
        let cfg = SolverConfig::new(OracleConfig::new(0.1, 1).unwrap(), 0.1, 5);
        let x0 = Vector::from_element(2, 1.0);
        let rec = registry
            .get("stay")
            .unwrap()
            .solve(&f, &WholeSpace::new(2), &x0, &cfg, &mut NoObserver)
            .unwrap();
        assert_eq!(rec.final_point, x0);
        assert_eq!(rec.function_eval_count, 11);
    }

    #[test]
    fn suggestions_scale_inversely_with_eps() {
        for mode in [ProblemMode::Unconstrained, ProblemMode::Constrained] {
            let a = suggest_params(mode, 0.02, 10, 4.0, 1.0, Some(2.0)).unwrap();
            let b = suggest_params(mode, 0.01, 10, 4.0, 1.0, Some(2.0)).unwrap();
            assert_eq!(b.num_iters, 2 * a.num_iters);
        }
    }

    #[test]
    fn constrained_suggestion_by_hand() {
        let s = suggest_params(ProblemMode::Constrained, 0.01, 1, 2.0, 2.0, Some(1.0)).unwrap();
        assert!((s.mu - 6.25e-4).abs() < 1e-18);
        assert_eq!(s.num_iters, 100);
    }

    #[test]
    fn unconstrained_suggestion_by_hand() {
        // mu = sqrt(2 * 0.5) / (8 * 2) with n = 4; N = 4 * 2 / (2 * 0.5) = 8
        let s = suggest_params(ProblemMode::Unconstrained, 0.5, 4, 2.0, 2.0, None).unwrap();
        assert!((s.mu - 1.0 / 16.0).abs() < 1e-15);
        assert_eq!(s.num_iters, 8);
    }

    #[test]
    fn suggestion_errors() {
        assert!(matches!(
            suggest_params(
                ProblemMode::Constrained,
                0.1,
                3,
                1.0,
                1.0,
                Some(f64::INFINITY)
            ),
            Err(ZoptError::UnboundedSet)
        ));
        assert!(suggest_params(ProblemMode::Constrained, 0.1, 3, 1.0, 1.0, None).is_err());
        assert!(suggest_params(ProblemMode::Unconstrained, 0.0, 3, 1.0, 1.0, None).is_err());
        assert!(suggest_params(ProblemMode::Unconstrained, 0.1, 0, 1.0, 1.0, None).is_err());
    }

    #[test]
    fn theorem_steps() {
        assert_eq!(theorem_step_unconstrained(1, 2.0), 0.025);
        assert_eq!(theorem_step_constrained(4.0), 0.25);
    }

    #[test]
    fn config_validation() {
        let oracle = OracleConfig::new(0.1, 0).unwrap();
        assert!(SolverConfig::new(oracle.clone(), 0.0, 1)
            .validate()
            .is_err());
        assert!(SolverConfig::new(oracle.clone(), f64::NAN, 1)
            .validate()
            .is_err());
        assert!(SolverConfig::new(oracle, 0.1, 1)
            .with_record_stride(0)
            .validate()
            .is_err());
    }
}
