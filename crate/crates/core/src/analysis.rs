//! Convergence bounds and Monte Carlo checks of the inequalities behind them.
//!
//! The bound calculators are closed-form. The checks need `grad f_mu`, which
//! for the quadratic test family equals `grad f` exactly (smoothing a
//! quadratic only adds a constant), so no nested Monte Carlo is needed.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Result, ZoptError};
use crate::oracle::{oracle_eval, rng_for, sample_direction, Estimate, OracleConfig, Welford};
use crate::problems::{PlReport, TestProblem, PL_GAP_FLOOR};
use crate::sets::{gradient_map, FeasibleSet, MEMBERSHIP_TOL};
use crate::Vector;

/// Statistical margin, in standard errors, for every Monte Carlo inequality.
pub const MC_SIGMAS: f64 = 5.0;

/// Problem constants and run parameters that enter the bounds.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundInputs {
    pub n: usize,
    pub lip_const: f64,
    pub pl_const: f64,
    pub mu: f64,
    /// `f(x_0) - f*`.
    pub initial_gap: f64,
    /// Diameter of the feasible set (constrained bound only).
    pub d_x: Option<f64>,
    /// Per-iteration `sigma_k` (constrained bound only).
    pub sigma_seq: Vec<f64>,
}

impl BoundInputs {
    pub fn unconstrained(
        n: usize,
        lip_const: f64,
        pl_const: f64,
        mu: f64,
        initial_gap: f64,
    ) -> Self {
        Self {
            n,
            lip_const,
            pl_const,
            mu,
            initial_gap,
            d_x: None,
            sigma_seq: Vec::new(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(ZoptError::Config(format!("bound input {what}")));
        if self.n == 0 {
            return bad("n must be positive");
        }
        if !(self.lip_const > 0.0) || !(self.pl_const > 0.0) {
            return bad("constants must be positive");
        }
        if !(self.mu >= 0.0) {
            return bad("mu must be nonnegative");
        }
        if !(self.initial_gap >= 0.0) {
            return bad("initial gap must be nonnegative");
        }
        if self.sigma_seq.iter().any(|s| !(*s >= 0.0)) {
            return bad("sigma_k must be nonnegative");
        }
        Ok(())
    }
}

/// Bound on `(1/(N+1)) sum_{k<=N} (E f(x_k) - f*)` for the unconstrained
/// scheme with `h = 1/(4(n+4)L)`:
///
/// `8(n+4)L/l [gap/(N+1) + 3 mu^2 (n+4) L / 32] + mu^2 L^2 (n+6)^3 / (4l)`.
pub fn theorem1_rhs(inputs: &BoundInputs, num_iters: usize) -> Result<f64> {
    inputs.validate()?;
    let n = inputs.n as f64;
    let lip = inputs.lip_const;
    let l = inputs.pl_const;
    let mu2 = inputs.mu * inputs.mu;
    let horizon = num_iters as f64 + 1.0;
    Ok(8.0 * (n + 4.0) * lip / l
        * (inputs.initial_gap / horizon + 3.0 * mu2 * (n + 4.0) * lip / 32.0)
        + mu2 / (4.0 * l) * lip * lip * (n + 6.0).powi(3))
}

/// Bound for the projected scheme with `h = 1/L`:
///
/// `(L/l) gap/(N+1) + mu d L^2 (n+3)^{3/2} / (2l)
///   + L d / (l(N+1)) sum sigma_k + 1/(l(N+1)) sum sigma_k^2`,
///
/// summing over `k = 0..=N`. `sigma_seq` must cover at least `N + 1` terms.
pub fn theorem2_rhs(inputs: &BoundInputs, num_iters: usize) -> Result<f64> {
    Ok(theorem2_curve(inputs, &[num_iters])?[0])
}

/// [`theorem2_rhs`] at several horizons, sharing the prefix sums of `sigma`.
pub fn theorem2_curve(inputs: &BoundInputs, horizons: &[usize]) -> Result<Vec<f64>> {
    inputs.validate()?;
    let d_x = inputs.d_x.ok_or(ZoptError::UnboundedSet)?;
    if !d_x.is_finite() {
        return Err(ZoptError::UnboundedSet);
    }
    let needed = horizons.iter().max().map_or(0, |&k| k + 1);
    if inputs.sigma_seq.len() < needed {
        return Err(ZoptError::Config(format!(
            "sigma sequence has {} terms, {needed} needed",
            inputs.sigma_seq.len()
        )));
    }
    let mut sum = Vec::with_capacity(needed + 1);
    let mut sum_sq = Vec::with_capacity(needed + 1);
    sum.push(0.0);
    sum_sq.push(0.0);
    for &s in &inputs.sigma_seq[..needed] {
        sum.push(sum.last().unwrap() + s);
        sum_sq.push(sum_sq.last().unwrap() + s * s);
    }
    let n = inputs.n as f64;
    let lip = inputs.lip_const;
    let l = inputs.pl_const;
    let smoothing = inputs.mu * d_x * lip * lip * (n + 3.0).powf(1.5) / (2.0 * l);
    Ok(horizons
        .iter()
        .map(|&k| {
            let horizon = k as f64 + 1.0;
            lip / l * inputs.initial_gap / horizon
                + smoothing
                + lip * d_x / (l * horizon) * sum[k + 1]
                + sum_sq[k + 1] / (l * horizon)
        })
        .collect())
}

/// Smoothness class used to bound the oracle's second moment.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SigmaMode {
    /// Lipschitz `f` with constant `L0`: `L0^2 (n+4)^2`.
    C00,
    /// Lipschitz gradient with constant `L1`:
    /// `mu^2 L1^2 (n+6)^3 / 2 + 2(n+4) |grad f(x)|^2`.
    C11 { grad_norm: f64 },
}

/// Candidate for `sigma^2`, an upper bound on `E|g_mu(x)|^2`.
pub fn sigma_bound(mode: SigmaMode, mu: f64, n: usize, lip: f64) -> f64 {
    let n = n as f64;
    match mode {
        SigmaMode::C00 => lip * lip * (n + 4.0).powi(2),
        SigmaMode::C11 { grad_norm } => {
            0.5 * mu * mu * lip * lip * (n + 6.0).powi(3) + 2.0 * (n + 4.0) * grad_norm * grad_norm
        }
    }
}

/// `-2a min_{z in X} { (a/2)|z - x|^2 + <vec, z - x> }`.
///
/// The minimizer is `Proj(x - vec/a)`. With `vec = grad f(x)` this is the
/// proximal-PL quantity `Q(x, a)`; with a realized oracle output it is
/// `T(x, a)`. On the whole space it equals `|vec|^2`.
pub fn prox_value(set: &dyn FeasibleSet, x: &Vector, a: f64, vec: &Vector) -> Result<f64> {
    if x.len() != set.dim() || vec.len() != set.dim() {
        return Err(ZoptError::DimensionMismatch {
            expected: set.dim(),
            actual: if x.len() != set.dim() {
                x.len()
            } else {
                vec.len()
            },
        });
    }
    if !(a > 0.0) {
        return Err(ZoptError::Config(format!("a must be positive, got {a}")));
    }
    let violation = set.violation(x);
    if violation > MEMBERSHIP_TOL {
        return Err(ZoptError::Infeasible { violation });
    }
    let d = set.displacement(x, &(vec / -a));
    Ok(-2.0 * a * (0.5 * a * d.norm_squared() + vec.dot(&d)))
}

/// `Q(x, a)` for a test problem, using its exact gradient.
pub fn q_value(problem: &TestProblem, set: &dyn FeasibleSet, x: &Vector, a: f64) -> Result<f64> {
    prox_value(set, x, a, &problem.grad(x))
}

/// `T(x, a)` for a realized oracle output `g`.
pub fn t_value(set: &dyn FeasibleSet, x: &Vector, a: f64, g: &Vector) -> Result<f64> {
    prox_value(set, x, a, g)
}

/// Random feasible point: a standard normal draw projected onto the set.
fn feasible_probe<R: Rng + ?Sized>(set: &dyn FeasibleSet, rng: &mut R) -> Vector {
    let z = Vector::from_fn(set.dim(), |_, _| rng.sample(StandardNormal));
    set.project(&z)
}

/// Sampled check of `0.5 Q(x, L) >= l (f(x) - f_opt)` over feasible points,
/// where `f_opt` is the minimum over the set.
pub fn check_proximal_pl(
    problem: &TestProblem,
    set: &dyn FeasibleSet,
    opt_value: f64,
    pl_const: f64,
    num_points: usize,
    seed: u64,
) -> Result<PlReport> {
    let mut rng = rng_for(seed, 0);
    let mut report = PlReport {
        min_ratio: f64::INFINITY,
        violations: 0,
        evaluated: 0,
        skipped: 0,
    };
    for _ in 0..num_points {
        let x = feasible_probe(set, &mut rng);
        let gap = problem.eval(&x) - opt_value;
        if gap < PL_GAP_FLOOR {
            report.skipped += 1;
            continue;
        }
        let ratio = 0.5 * q_value(problem, set, &x, problem.lip_const)? / gap;
        report.evaluated += 1;
        report.min_ratio = report.min_ratio.min(ratio);
        if ratio < pl_const * (1.0 - 1e-9) {
            report.violations += 1;
        }
    }
    Ok(report)
}

/// Monte Carlo estimate of `E|g_mu(x)|^2` next to its closed-form ceiling.
#[derive(Debug, Clone)]
pub struct SecondMoment {
    pub mean: f64,
    pub std_err: f64,
    /// `4(n+4)|grad f_mu(x)|^2 + 3 mu^2 L^2 (n+4)^3`.
    pub bound: f64,
}

/// Second moment of the oracle at `x` for a quadratic test problem.
pub fn second_moment<R: Rng + ?Sized>(
    problem: &TestProblem,
    cfg: &OracleConfig,
    x: &Vector,
    num_samples: usize,
    rng: &mut R,
) -> Result<SecondMoment> {
    if num_samples < 2 {
        return Err(ZoptError::Config("need at least two samples".into()));
    }
    let n = problem.dim();
    let mut acc = Welford::new(1);
    for _ in 0..num_samples {
        let u = sample_direction(cfg, n, rng)?;
        let g = oracle_eval(problem.objective(), x, &u, cfg)?;
        acc.push(&Vector::from_element(1, g.norm_squared()));
    }
    let est = acc.finish();
    let nf = n as f64;
    let lip = problem.lip_const;
    let mu = cfg.mu();
    Ok(SecondMoment {
        mean: est.mean[0],
        std_err: est.std_err[0],
        bound: 4.0 * (nf + 4.0) * problem.grad(x).norm_squared()
            + 3.0 * mu * mu * lip * lip * (nf + 4.0).powi(3),
    })
}

/// Per-iterate oracle diagnostics.
#[derive(Debug, Clone)]
pub struct Diagnostics {
    /// Estimates of `E|xi|`, `xi = g_mu(x) - grad f_mu(x)`, one per point.
    pub xi_norm: Vec<Estimate>,
    /// Mean of the gradient map of `g_mu`, one per point.
    pub s_mean: Vec<Vector>,
    /// Gradient map of `grad f_mu`, one per point.
    pub v: Vec<Vector>,
    /// Cross-point mean of `|grad f_mu(x)|^2`.
    pub xi_sq: Estimate,
    /// Cross-point mean of `|grad f(x)|^2`.
    pub theta_sq: Estimate,
}

/// Oracle diagnostics at a set of points, e.g. the `k`-th iterates of
/// several runs.
pub fn diagnose(
    problem: &TestProblem,
    set: &dyn FeasibleSet,
    cfg: &OracleConfig,
    points: &[Vector],
    step: f64,
    num_samples: usize,
    seed: u64,
) -> Result<Diagnostics> {
    if points.len() < 2 || num_samples < 2 {
        return Err(ZoptError::Config(
            "diagnostics need at least two points and two samples".into(),
        ));
    }
    let n = problem.dim();
    let mut xi_norm = Vec::with_capacity(points.len());
    let mut s_mean = Vec::with_capacity(points.len());
    let mut v = Vec::with_capacity(points.len());
    let mut grad_sq = Welford::new(1);
    for (i, x) in points.iter().enumerate() {
        let mut rng = rng_for(seed, i as u64);
        let grad = problem.grad(x);
        grad_sq.push(&Vector::from_element(1, grad.norm_squared()));
        v.push(gradient_map(set, x, &grad, step)?);
        let mut norms = Welford::new(1);
        let mut maps = Welford::new(n);
        for _ in 0..num_samples {
            let u = sample_direction(cfg, n, &mut rng)?;
            let g = oracle_eval(problem.objective(), x, &u, cfg)?;
            norms.push(&Vector::from_element(1, (&g - &grad).norm()));
            maps.push(&gradient_map(set, x, &g, step)?);
        }
        xi_norm.push(norms.finish());
        s_mean.push(maps.finish().mean);
    }
    let xi_sq = grad_sq.finish();
    Ok(Diagnostics {
        xi_norm,
        s_mean,
        v,
        theta_sq: xi_sq.clone(),
        xi_sq,
    })
}

/// Outcome of [`verify_appendix_lemmas`].
#[derive(Debug, Clone)]
pub struct LemmaReport {
    pub probes: usize,
    pub samples_per_probe: usize,
    /// Pointwise checks of `<xi, s - v> <= |xi|^2`, one per oracle draw.
    pub inner_product_checks: usize,
    pub inner_product_violations: usize,
    /// Largest `<xi, s - v> - |xi|^2` observed (nonpositive when the
    /// inequality holds).
    pub inner_product_max_excess: f64,
    /// Probes where the empirical `mean|xi|` exceeded `sqrt(mean|xi|^2)`.
    pub jensen_violations: usize,
    /// Probes where `mean|xi|` exceeded the square root of the `C11` sigma
    /// candidate by more than the statistical margin.
    pub sigma_violations: usize,
    /// Probes where the sample mean of `T(x, L)` fell below its lower bound
    /// by more than the statistical margin.
    pub t_bound_violations: usize,
    /// Smallest `0.5 Q(x, L) / (f(x) - f_opt)` seen; compared against the
    /// unconstrained PL constant, which is used for box-constrained bounds.
    pub proximal_pl: PlReport,
    pub constrained_opt_value: f64,
}

impl LemmaReport {
    /// The checks that follow from theorems. The proximal-PL ratio is
    /// informational because the constrained PL constant is not certified.
    pub fn passed(&self) -> bool {
        self.inner_product_violations == 0
            && self.jensen_violations == 0
            && self.sigma_violations == 0
            && self.t_bound_violations == 0
    }

    /// Machine-readable rows `check,probes,violations,margin`.
    pub fn csv_rows(&self) -> Vec<String> {
        let rows: [(&str, usize, usize, String); 5] = [
            (
                "inner_product",
                self.inner_product_checks,
                self.inner_product_violations,
                format!("{:e}", self.inner_product_max_excess),
            ),
            ("jensen", self.probes, self.jensen_violations, "0".into()),
            (
                "sigma_c11",
                self.probes,
                self.sigma_violations,
                format!("{MC_SIGMAS}se"),
            ),
            (
                "t_lower_bound",
                self.probes,
                self.t_bound_violations,
                format!("{MC_SIGMAS}se"),
            ),
            (
                "proximal_pl",
                self.proximal_pl.evaluated,
                self.proximal_pl.violations,
                format!("{:e}", self.proximal_pl.min_ratio),
            ),
        ];
        let mut out = vec!["check,probes,violations,margin".to_string()];
        out.extend(rows.iter().map(|(name, probes, violations, margin)| {
            format!("{name},{probes},{violations},{margin}")
        }));
        out
    }
}

impl std::fmt::Display for LemmaReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let verdict = |v: usize| if v == 0 { "ok" } else { "FAILED" };
        writeln!(
            f,
            "probes: {} x {} oracle draws",
            self.probes, self.samples_per_probe
        )?;
        writeln!(
            f,
            "<xi, s - v> <= |xi|^2        : {} violations / {} checks (max excess {:e}) {}",
            self.inner_product_violations,
            self.inner_product_checks,
            self.inner_product_max_excess,
            verdict(self.inner_product_violations)
        )?;
        writeln!(
            f,
            "mean|xi| <= sqrt(mean|xi|^2) : {} violations {}",
            self.jensen_violations,
            verdict(self.jensen_violations)
        )?;
        writeln!(
            f,
            "mean|xi| <= sigma (C11)      : {} violations {}",
            self.sigma_violations,
            verdict(self.sigma_violations)
        )?;
        writeln!(
            f,
            "E T(x, L) lower bound        : {} violations {}",
            self.t_bound_violations,
            verdict(self.t_bound_violations)
        )?;
        write!(
            f,
            "proximal PL ratio (info)     : min {:.6e}, {} below the unconstrained constant, f_opt(X) = {:e}",
            self.proximal_pl.min_ratio, self.proximal_pl.violations, self.constrained_opt_value
        )
    }
}

/// Monte Carlo verification of the inequalities used for the projected
/// scheme, on a quadratic test problem over `set`.
///
/// At each of `num_probes` random feasible points, `num_samples` directions
/// are drawn. For every draw the pointwise inequality
/// `<xi, s - v> <= |xi|^2` is checked, with `s`, `v` the gradient maps of
/// `g_mu` and `grad f_mu` at step `1/L`. Per probe, `mean|xi|` is compared
/// with `sqrt(mean|xi|^2)` and with the `C11` sigma candidate, and the mean
/// of `T(x, L)` with its lower bound.
pub fn verify_appendix_lemmas(
    problem: &TestProblem,
    set: &dyn FeasibleSet,
    cfg: &OracleConfig,
    num_probes: usize,
    num_samples: usize,
    seed: u64,
) -> Result<LemmaReport> {
    if num_samples < 2 {
        return Err(ZoptError::Config(
            "need at least two samples per probe".into(),
        ));
    }
    let n = problem.dim();
    let nf = n as f64;
    let lip = problem.lip_const;
    let l = problem.pl_const;
    let h = 1.0 / lip;
    let mu = cfg.mu();
    let (opt_value, _) = problem.constrained_optimum(set)?;
    let d_x = set.diameter();

    let mut report = LemmaReport {
        probes: num_probes,
        samples_per_probe: num_samples,
        inner_product_checks: 0,
        inner_product_violations: 0,
        inner_product_max_excess: f64::NEG_INFINITY,
        jensen_violations: 0,
        sigma_violations: 0,
        t_bound_violations: 0,
        proximal_pl: check_proximal_pl(problem, set, opt_value, l, num_probes, seed ^ 0x5eed)?,
        constrained_opt_value: opt_value,
    };

    let mut probe_rng = rng_for(seed, 0);
    for probe in 0..num_probes {
        let x = feasible_probe(set, &mut probe_rng);
        let grad = problem.grad(&x);
        let v = gradient_map(set, &x, &grad, h)?;
        let mut rng = rng_for(seed, probe as u64 + 1);
        let mut norms = Welford::new(2);
        let mut t_acc = Welford::new(1);
        for _ in 0..num_samples {
            let u = sample_direction(cfg, n, &mut rng)?;
            let g = oracle_eval(problem.objective(), &x, &u, cfg)?;
            let xi = &g - &grad;
            let s = gradient_map(set, &x, &g, h)?;
            let lhs = xi.dot(&(&s - &v));
            let rhs = xi.norm_squared();
            let tol = 1e-12 * xi.norm() * (s.norm() + v.norm() + xi.norm() + x.norm() / h);
            report.inner_product_checks += 1;
            report.inner_product_max_excess = report.inner_product_max_excess.max(lhs - rhs);
            if lhs > rhs + tol {
                report.inner_product_violations += 1;
            }
            norms.push(&Vector::from_vec(vec![xi.norm(), rhs]));
            t_acc.push(&Vector::from_element(1, t_value(set, &x, lip, &g)?));
        }
        let norms = norms.finish();
        let (mean_norm, mean_sq) = (norms.mean[0], norms.mean[1]);
        if mean_norm > mean_sq.sqrt() * (1.0 + 1e-12) {
            report.jensen_violations += 1;
        }
        let sigma = sigma_bound(
            SigmaMode::C11 {
                grad_norm: grad.norm(),
            },
            mu,
            n,
            lip,
        )
        .sqrt();
        if mean_norm > sigma + MC_SIGMAS * norms.std_err[0] {
            report.sigma_violations += 1;
        }
        if d_x.is_finite() {
            let t = t_acc.finish();
            let lower = 2.0 * l * (problem.eval(&x) - opt_value)
                - mu * lip * lip * (nf + 3.0).powf(1.5) * d_x
                - 2.0 * lip * d_x * mean_norm;
            let slack = MC_SIGMAS * (t.std_err[0] + 2.0 * lip * d_x * norms.std_err[0]);
            if t.mean[0] < lower - slack {
                report.t_bound_violations += 1;
            }
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::{smooth_estimate, SmoothMode};
    use crate::problems::{make_least_squares, FnObjective};
    use crate::sets::{BoxSet, WholeSpace};

    fn close(a: f64, b: f64, rel: f64) -> bool {
        (a - b).abs() <= rel * b.abs().max(1e-300)
    }

    #[test]
    fn theorem1_by_hand() {
        let inputs = BoundInputs::unconstrained(2, 2.0, 1.0, 0.1, 1.0);
        let rhs = theorem1_rhs(&inputs, 9).unwrap();
        // 96 * (0.1 + 0.01125) + 5.12
        assert!(close(rhs, 15.8, 1e-12), "{rhs}");
    }

    #[test]
    fn theorem1_vanishes_without_smoothing_and_with_long_runs() {
        let inputs = BoundInputs::unconstrained(10, 3.0, 0.5, 0.0, 2.0);
        let long = theorem1_rhs(&inputs, usize::MAX / 2).unwrap();
        assert!(long < 1e-12);
    }

    #[test]
    fn theorem2_by_hand() {
        let inputs = BoundInputs {
            n: 1,
            lip_const: 2.0,
            pl_const: 2.0,
            mu: 1e-3,
            initial_gap: 1.0,
            d_x: Some(1.0),
            sigma_seq: vec![0.1; 100],
        };
        let rhs = theorem2_rhs(&inputs, 99).unwrap();
        assert!(close(rhs, 0.123, 1e-12), "{rhs}");
    }

    #[test]
    fn theorem2_constant_sigma_floor() {
        let (lip, l, d, sigma) = (3.0, 0.7, 2.5, 0.2);
        let inputs = BoundInputs {
            n: 5,
            lip_const: lip,
            pl_const: l,
            mu: 0.0,
            initial_gap: 4.0,
            d_x: Some(d),
            sigma_seq: vec![sigma; 1_000_001],
        };
        let floor = lip * d * sigma / l + sigma * sigma / l;
        let rhs = theorem2_rhs(&inputs, 1_000_000).unwrap();
        assert!(close(rhs - lip / l * 4.0 / 1_000_001.0, floor, 1e-9));
        let zero = BoundInputs {
            sigma_seq: vec![0.0; 1_000_001],
            ..inputs
        };
        assert!(theorem2_rhs(&zero, 1_000_000).unwrap() < 1e-4);
    }

    #[test]
    fn theorem2_input_errors() {
        let mut inputs = BoundInputs::unconstrained(2, 1.0, 1.0, 0.1, 1.0);
        inputs.sigma_seq = vec![0.0; 5];
        assert!(matches!(
            theorem2_rhs(&inputs, 3),
            Err(ZoptError::UnboundedSet)
        ));
        inputs.d_x = Some(f64::INFINITY);
        assert!(matches!(
            theorem2_rhs(&inputs, 3),
            Err(ZoptError::UnboundedSet)
        ));
        inputs.d_x = Some(1.0);
        assert!(theorem2_rhs(&inputs, 3).is_ok());
        assert!(theorem2_rhs(&inputs, 5).is_err());
        inputs.pl_const = 0.0;
        assert!(theorem2_rhs(&inputs, 3).is_err());
    }

    #[test]
    fn bounds_are_monotone_on_grids() {
        for &mu in &[0.0, 1e-4, 1e-2, 0.5] {
            let mut prev = f64::INFINITY;
            for k in [0usize, 1, 2, 5, 10, 100, 1000, 100_000] {
                let mut inputs = BoundInputs::unconstrained(7, 2.5, 0.3, mu, 3.0);
                let r1 = theorem1_rhs(&inputs, k).unwrap();
                assert!(r1 <= prev);
                prev = r1;
                inputs.d_x = Some(2.0);
                inputs.sigma_seq = vec![0.4; k + 1];
                let r2 = theorem2_rhs(&inputs, k).unwrap();
                let mut bigger = inputs.clone();
                bigger.mu = mu * 2.0 + 1e-6;
                assert!(theorem2_rhs(&bigger, k).unwrap() >= r2);
                assert!(theorem1_rhs(&bigger, k).unwrap() >= r1);
                if k > 0 {
                    assert!(r2 <= theorem2_rhs(&inputs, k - 1).unwrap() + 1e-12);
                }
            }
        }
    }

    #[test]
    fn sigma_candidates_by_hand() {
        assert_eq!(
            sigma_bound(SigmaMode::C11 { grad_norm: 0.0 }, 0.0, 5, 3.0),
            0.0
        );
        let c11 = sigma_bound(SigmaMode::C11 { grad_norm: 1.0 }, 1e-3, 2, 2.0);
        assert!(close(c11, 12.001024, 1e-12), "{c11}");
        assert_eq!(sigma_bound(SigmaMode::C00, 0.1, 4, 1.0), 64.0);
    }

    #[test]
    fn prox_value_whole_space_is_squared_norm() {
        let set = WholeSpace::new(3);
        let vec = Vector::from_vec(vec![1.5, -2.0, 0.25]);
        let q = prox_value(&set, &Vector::from_element(3, 7.0), 3.0, &vec).unwrap();
        assert!(close(q, vec.norm_squared(), 1e-14));
        assert_eq!(
            prox_value(&set, &Vector::zeros(3), 3.0, &Vector::zeros(3)).unwrap(),
            0.0
        );
    }

    #[test]
    fn prox_value_clipped_by_hand() {
        let set = BoxSet::uniform(1, -0.5, 0.5).unwrap();
        let q = prox_value(
            &set,
            &Vector::from_element(1, 0.4),
            1.0,
            &Vector::from_element(1, -3.0),
        )
        .unwrap();
        assert!(close(q, 0.59, 1e-12), "{q}");
        assert!(prox_value(&set, &Vector::from_element(1, 0.7), 1.0, &Vector::zeros(1)).is_err());
    }

    #[test]
    fn second_moment_is_bounded() {
        let p = make_least_squares(3, 6, 0.1, 12).unwrap();
        let cfg = OracleConfig::new(1e-3, 1).unwrap();
        let x = Vector::from_element(6, 0.7);
        let m = second_moment(&p, &cfg, &x, 20_000, &mut rng_for(1, 0)).unwrap();
        assert!(m.mean <= m.bound * 1.05, "{m:?}");
    }

    #[test]
    fn smoothed_gradient_gap_within_bound() {
        // the gap is exactly zero for quadratics; the estimate must sit
        // within 5 standard errors of the exact gradient
        let p = make_least_squares(3, 5, 0.1, 13).unwrap();
        let cfg = OracleConfig::new(1e-2, 2).unwrap();
        let x = Vector::from_element(5, -0.3);
        let est = smooth_estimate(
            p.objective(),
            &x,
            &cfg,
            100_000,
            SmoothMode::Gradient,
            &mut rng_for(2, 0),
        )
        .unwrap();
        assert!(est.within(&p.grad(&x), MC_SIGMAS));
        let bound = 0.5 * cfg.mu() * p.lip_const * 8f64.powf(1.5);
        let gap = (&est.mean - p.grad(&x)).norm();
        assert!(gap <= bound + MC_SIGMAS * est.std_err.norm());
    }

    #[test]
    fn linear_objective_has_zero_noise() {
        // xi = 0 whenever g equals the gradient, giving 0 <= 0
        let set = BoxSet::uniform(1, -1.0, 1.0).unwrap();
        let f = FnObjective::new(1, |x: &Vector| 3.0 * x[0]);
        let cfg = OracleConfig::new(0.1, 0).unwrap();
        let x = Vector::from_element(1, 0.2);
        let u = crate::oracle::Direction(Vector::from_element(1, 1.0));
        let g = oracle_eval(&f, &x, &u, &cfg).unwrap();
        let grad = Vector::from_element(1, 3.0);
        let xi = &g - &grad;
        assert!(xi.norm() < 1e-12);
        let s = gradient_map(&set, &x, &g, 0.5).unwrap();
        let v = gradient_map(&set, &x, &grad, 0.5).unwrap();
        assert!(xi.dot(&(&s - &v)) <= xi.norm_squared() + 1e-24);
    }

    #[test]
    fn lemma_suite_passes_on_box_and_whole_space() {
        let p = make_least_squares(4, 8, 0.1, 14).unwrap();
        let cfg = OracleConfig::new(1e-4, 3).unwrap();
        let boxed = BoxSet::uniform(8, -0.5, 0.5).unwrap();
        let report = verify_appendix_lemmas(&p, &boxed, &cfg, 100, 200, 4).unwrap();
        assert!(report.passed(), "{report}");
        assert!(report.inner_product_max_excess <= 1e-9);
        assert!(report.constrained_opt_value >= p.opt_value);
        let report = verify_appendix_lemmas(&p, &WholeSpace::new(8), &cfg, 50, 100, 5).unwrap();
        assert!(report.passed(), "{report}");
        assert_eq!(report.csv_rows().len(), 6);
    }

    #[test]
    fn diagnostics_shapes_and_equalities() {
        let p = make_least_squares(3, 6, 0.1, 15).unwrap();
        let set = BoxSet::uniform(6, -0.5, 0.5).unwrap();
        let cfg = OracleConfig::new(1e-4, 3).unwrap();
        let points: Vec<Vector> = (0..4)
            .map(|i| Vector::from_element(6, 0.1 * i as f64))
            .collect();
        let d = diagnose(&p, &set, &cfg, &points, 1.0 / p.lip_const, 500, 6).unwrap();
        assert_eq!(d.xi_norm.len(), 4);
        assert_eq!(d.v.len(), 4);
        assert_eq!(d.xi_sq.mean, d.theta_sq.mean);
        assert!(d
            .xi_norm
            .iter()
            .all(|e| e.mean[0] > 0.0 && e.std_err[0] > 0.0));
    }

    #[test]
    fn proximal_pl_on_box() {
        let p = make_least_squares(5, 12, 0.1, 16).unwrap();
        let set = BoxSet::uniform(12, -0.5, 0.5).unwrap();
        let (opt, _) = p.constrained_optimum(&set).unwrap();
        let report = check_proximal_pl(&p, &set, opt, p.pl_const, 1000, 7).unwrap();
        assert!(report.evaluated > 0);
        assert!(report.min_ratio > 0.0, "{report:?}");
    }
}
