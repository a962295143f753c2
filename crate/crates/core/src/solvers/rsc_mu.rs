use crate::error::{Result, ZoptError};
use crate::problems::Objective;
use crate::sets::FeasibleSet;
use crate::Vector;

use super::{run_loop, IterationObserver, NoObserver, RunRecord, Solver, SolverConfig};

/// Projected random search, `x_{k+1} = Proj(x_k - h g_mu(x_k))`.
///
/// Equivalently `x_{k+1} = x_k - h s_k` with `s_k` the gradient map of the
/// oracle output.
#[derive(Debug, Clone, Copy, Default)]
pub struct RscMu;

pub fn rsc_mu_run(
    f: &dyn Objective,
    set: &dyn FeasibleSet,
    x0: &Vector,
    cfg: &SolverConfig,
) -> Result<RunRecord> {
    rsc_mu_run_with(f, set, x0, cfg, &mut NoObserver)
}

pub fn rsc_mu_run_with(
    f: &dyn Objective,
    set: &dyn FeasibleSet,
    x0: &Vector,
    cfg: &SolverConfig,
    observer: &mut dyn IterationObserver,
) -> Result<RunRecord> {
    if set.dim() != f.dim() {
        return Err(ZoptError::DimensionMismatch {
            expected: f.dim(),
            actual: set.dim(),
        });
    }
    if !set.is_bounded() {
        return Err(ZoptError::UnboundedSet);
    }
    if x0.len() == set.dim() && !set.contains(x0) {
        return Err(ZoptError::Infeasible {
            violation: set.violation(x0),
        });
    }
    if let Some(lip) = cfg.lip_const {
        if cfg.step_size > 1.0 / lip {
            log::warn!(
                "rsc_mu step {:e} exceeds 1/L = {:e}; the convergence bound does not apply",
                cfg.step_size,
                1.0 / lip
            );
        }
    }
    let h = cfg.step_size;
    run_loop(RscMu.name(), f, x0, cfg, observer, |x, g| {
        set.project(&(x - g * h))
    })
}

impl Solver for RscMu {
    fn name(&self) -> &'static str {
        "rsc_mu"
    }

    fn description(&self) -> &'static str {
        "projected two-point Gaussian random search on a bounded convex set"
    }

    fn requires_bounded_set(&self) -> bool {
        true
    }

    fn solve(
        &self,
        f: &dyn Objective,
        set: &dyn FeasibleSet,
        x0: &Vector,
        cfg: &SolverConfig,
        observer: &mut dyn IterationObserver,
    ) -> Result<RunRecord> {
        rsc_mu_run_with(f, set, x0, cfg, observer)
    }
}
