use crate::error::{Result, ZoptError};
use crate::problems::Objective;
use crate::sets::FeasibleSet;
use crate::Vector;

use super::{run_loop, IterationObserver, NoObserver, RunRecord, Solver, SolverConfig};

/// Unconstrained random search, `x_{k+1} = x_k - h g_mu(x_k)`.
#[derive(Debug, Clone, Copy, Default)]
pub struct RsMu;

pub fn rs_mu_run(f: &dyn Objective, x0: &Vector, cfg: &SolverConfig) -> Result<RunRecord> {
    rs_mu_run_with(f, x0, cfg, &mut NoObserver)
}

pub fn rs_mu_run_with(
    f: &dyn Objective,
    x0: &Vector,
    cfg: &SolverConfig,
    observer: &mut dyn IterationObserver,
) -> Result<RunRecord> {
    let h = cfg.step_size;
    run_loop(RsMu.name(), f, x0, cfg, observer, |x, g| x - g * h)
}

impl Solver for RsMu {
    fn name(&self) -> &'static str {
        "rs_mu"
    }

    fn description(&self) -> &'static str {
        "unconstrained two-point Gaussian random search"
    }

    fn requires_bounded_set(&self) -> bool {
        false
    }

    fn solve(
        &self,
        f: &dyn Objective,
        set: &dyn FeasibleSet,
        x0: &Vector,
        cfg: &SolverConfig,
        observer: &mut dyn IterationObserver,
    ) -> Result<RunRecord> {
        if set.is_bounded() {
            return Err(ZoptError::Config(format!(
                "rs_mu ignores constraints; use rsc_mu for {}",
                set.describe()
            )));
        }
        rs_mu_run_with(f, x0, cfg, observer)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::OracleConfig;
    use crate::problems::{make_least_squares, FnObjective};
    use crate::sets::BoxSet;
    use crate::solvers::{best_iterate, theorem_step_unconstrained};

    fn square() -> FnObjective<impl Fn(&Vector) -> f64 + Sync> {
        FnObjective::new(1, |x: &Vector| x[0] * x[0])
    }

    #[test]
    fn constant_objective_never_moves() {
        let f = FnObjective::new(3, |_| 5.0);
        let x0 = Vector::from_vec(vec![1.0, -2.0, 0.5]);
        let cfg = SolverConfig::new(OracleConfig::new(0.1, 4).unwrap(), 0.5, 50);
        let rec = rs_mu_run(&f, &x0, &cfg).unwrap();
        assert!(rec.iterates.iter().all(|(_, x)| *x == x0));
        assert_eq!(rec.final_point, x0);
    }

    #[test]
    fn scalar_square_regression() {
        let h = theorem_step_unconstrained(1, 2.0);
        assert_eq!(h, 0.025);
        let cfg = SolverConfig::new(OracleConfig::new(1e-6, 2024).unwrap(), h, 2000);
        let rec = rs_mu_run(&square(), &Vector::from_element(1, 1.0), &cfg).unwrap();
        let best = best_iterate(&rec).unwrap();
        assert!(best.value <= 1e-3, "f(x_hat) = {}", best.value);
    }

    #[test]
    fn runs_are_bit_reproducible() {
        let p = make_least_squares(4, 10, 0.1, 1).unwrap();
        let h = theorem_step_unconstrained(10, p.lip_const);
        let cfg =
            SolverConfig::new(OracleConfig::new(1e-4, 99).unwrap(), h, 300).with_record_stride(7);
        let x0 = Vector::from_element(10, 0.3);
        let a = rs_mu_run(p.objective(), &x0, &cfg).unwrap();
        let b = rs_mu_run(p.objective(), &x0, &cfg).unwrap();
        assert_eq!(a, b);
        let c = rs_mu_run(p.objective(), &x0, &cfg.clone().with_seed(100)).unwrap();
        assert_ne!(a.values, c.values);
    }

    #[test]
    fn record_bookkeeping() {
        let cfg =
            SolverConfig::new(OracleConfig::new(1e-3, 5).unwrap(), 0.01, 25).with_record_stride(10);
        let rec = rs_mu_run(&square(), &Vector::from_element(1, 2.0), &cfg).unwrap();
        assert_eq!(rec.values.len(), 26);
        assert_eq!(rec.function_eval_count, 2 * 25 + 1);
        let ks: Vec<usize> = rec.iterates.iter().map(|(k, _)| *k).collect();
        assert_eq!(ks, vec![0, 10, 20, 25]);
        assert!(rec.best_so_far.windows(2).all(|w| w[1] <= w[0]));
        assert_eq!(rec.values[rec.best_index], *rec.best_so_far.last().unwrap());
        assert_eq!(rec.final_value(), square().eval(&rec.final_point));
    }

    #[test]
    fn zero_iterations_records_the_start() {
        let cfg = SolverConfig::new(OracleConfig::new(1e-3, 5).unwrap(), 0.01, 0);
        let rec = rs_mu_run(&square(), &Vector::from_element(1, 2.0), &cfg).unwrap();
        assert_eq!(rec.values, vec![4.0]);
        assert_eq!(rec.function_eval_count, 1);
    }

    #[test]
    fn oversized_steps_trip_the_divergence_guard() {
        let cfg = SolverConfig::new(OracleConfig::new(1e-3, 5).unwrap(), 10.0, 10_000);
        let err = rs_mu_run(&square(), &Vector::from_element(1, 1.0), &cfg).unwrap_err();
        match err {
            ZoptError::Diverged { iteration, .. } => assert!(iteration > 0 && iteration < 10_000),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn non_finite_values_abort_with_iteration() {
        let f = FnObjective::new(
            1,
            |x: &Vector| if x[0] < 0.5 { f64::INFINITY } else { x[0] },
        );
        let cfg = SolverConfig::new(OracleConfig::new(1e-3, 5).unwrap(), 1.0, 100);
        let err = rs_mu_run(&f, &Vector::from_element(1, 1.0), &cfg).unwrap_err();
        assert!(matches!(err, ZoptError::Diverged { .. }), "{err:?}");
    }

    #[test]
    fn rejects_bounded_sets_and_bad_start() {
        let cfg = SolverConfig::new(OracleConfig::new(1e-3, 5).unwrap(), 0.1, 3);
        let set = BoxSet::uniform(1, -1.0, 1.0).unwrap();
        let x0 = Vector::zeros(1);
        assert!(RsMu
            .solve(&square(), &set, &x0, &cfg, &mut NoObserver)
            .is_err());
        assert!(rs_mu_run(&square(), &Vector::zeros(2), &cfg).is_err());
    }

    #[test]
    fn observer_sees_every_iterate() {
        let cfg =
            SolverConfig::new(OracleConfig::new(1e-3, 5).unwrap(), 0.01, 12).with_record_stride(5);
        let mut seen = Vec::new();
        let rec = rs_mu_run_with(
            &square(),
            &Vector::from_element(1, 2.0),
            &cfg,
            &mut |k, _x: &Vector, v| seen.push((k, v)),
        )
        .unwrap();
        assert_eq!(seen.len(), 13);
        assert!(seen.iter().all(|&(k, v)| rec.values[k] == v));
    }
}
