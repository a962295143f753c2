//! Objective contract and the least-squares test family.

use std::fmt::Write as _;
use std::io::{BufRead, BufReader, Read, Write};

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Result, ZoptError};
use crate::oracle::rng_for;
use crate::sets::FeasibleSet;
use crate::{Matrix, Vector};

/// A black box that can only be evaluated.
///
/// `eval` must be deterministic. Solvers never see anything else.
pub trait Objective: Sync {
    fn dim(&self) -> usize;
    fn eval(&self, x: &Vector) -> f64;
}

impl<T: Objective + ?Sized> Objective for &T {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn eval(&self, x: &Vector) -> f64 {
        (**self).eval(x)
    }
}

/// Wraps a closure as an [`Objective`].
pub struct FnObjective<F> {
    dim: usize,
    f: F,
}

impl<F: Fn(&Vector) -> f64 + Sync> FnObjective<F> {
    pub fn new(dim: usize, f: F) -> Self {
        Self { dim, f }
    }
}

impl<F: Fn(&Vector) -> f64 + Sync> Objective for FnObjective<F> {
    fn dim(&self) -> usize {
        self.dim
    }
    fn eval(&self, x: &Vector) -> f64 {
        (self.f)(x)
    }
}

/// `f(x) = |Ax - b|^2`.
#[derive(Debug, Clone)]
pub struct LeastSquares {
    a: Matrix,
    b: Vector,
}

impl LeastSquares {
    pub fn new(a: Matrix, b: Vector) -> Result<Self> {
        if a.nrows() != b.len() {
            return Err(ZoptError::DimensionMismatch {
                expected: a.nrows(),
                actual: b.len(),
            });
        }
        Ok(Self { a, b })
    }

    pub fn a(&self) -> &Matrix {
        &self.a
    }

    pub fn b(&self) -> &Vector {
        &self.b
    }

    pub fn residual(&self, x: &Vector) -> Vector {
        &self.a * x - &self.b
    }

    /// `2 A^T (Ax - b)`.
    pub fn gradient(&self, x: &Vector) -> Vector {
        self.a.tr_mul(&self.residual(x)) * 2.0
    }
}

impl Objective for LeastSquares {
    fn dim(&self) -> usize {
        self.a.ncols()
    }
    fn eval(&self, x: &Vector) -> f64 {
        self.residual(x).norm_squared()
    }
}

/// Smoothness and PL constants of `|Ax - b|^2`, plus the pseudo-inverse
/// needed to evaluate the optimum for any `b`.
#[derive(Debug, Clone)]
pub struct ProblemConstants {
    /// `2 * lambda_max(A^T A)`.
    pub lip_const: f64,
    /// `2 * lambda_min^+(A A^T)`, the certified PL constant.
    pub pl_const: f64,
    /// `2 * |A^T|^2`, the value quoted alongside the experiments. Reported for
    /// comparison only; it exceeds the valid PL constant whenever the
    /// singular values of `A` are not all equal.
    pub quoted_pl_const: f64,
    pub rank: usize,
    pinv: Matrix,
}

impl ProblemConstants {
    /// Minimum-norm minimizer and optimal value for right-hand side `b`.
    pub fn optimum(&self, a: &Matrix, b: &Vector) -> (f64, Vector) {
        let x = &self.pinv * b;
        let value = (a * &x - b).norm_squared();
        (value, x)
    }
}

/// Relative rank cut-off for singular values.
pub const RANK_TOL: f64 = 1e-10;

/// Constants of `|Ax - b|^2` from the singular values of `A`.
pub fn problem_constants(a: &Matrix) -> Result<ProblemConstants> {
    if a.is_empty() {
        return Err(ZoptError::Degenerate("empty matrix".into()));
    }
    let svd = a.clone().svd(true, true);
    let s_max = svd.singular_values.max();
    if !(s_max > 0.0) {
        return Err(ZoptError::Degenerate("matrix has rank 0".into()));
    }
    let cutoff = RANK_TOL * s_max;
    let s_min_pos = svd
        .singular_values
        .iter()
        .copied()
        .filter(|&s| s > cutoff)
        .fold(f64::INFINITY, f64::min);
    let rank = svd.singular_values.iter().filter(|&&s| s > cutoff).count();
    let pinv = svd
        .pseudo_inverse(cutoff)
        .map_err(|e| ZoptError::Degenerate(e.to_string()))?;
    Ok(ProblemConstants {
        lip_const: 2.0 * s_max * s_max,
        pl_const: 2.0 * s_min_pos * s_min_pos,
        quoted_pl_const: 2.0 * s_max * s_max,
        rank,
        pinv,
    })
}

/// A least-squares instance with everything needed to evaluate bounds.
///
/// The analytic gradient is for analysis code only; solvers receive
/// [`TestProblem::objective`].
#[derive(Debug, Clone)]
pub struct TestProblem {
    objective: LeastSquares,
    pub lip_const: f64,
    pub pl_const: f64,
    pub quoted_pl_const: f64,
    pub opt_value: f64,
    pub opt_point: Vector,
    pub seed: u64,
    pub noise_std: f64,
    pub opt_point_set_note: String,
}

impl TestProblem {
    pub fn from_parts(a: Matrix, b: Vector, seed: u64, noise_std: f64) -> Result<Self> {
        let objective = LeastSquares::new(a, b)?;
        let constants = problem_constants(objective.a())?;
        let (opt_value, opt_point) = constants.optimum(objective.a(), objective.b());
        let (m, n) = objective.a().shape();
        let opt_point_set_note = if constants.rank == n {
            "unique minimizer".to_string()
        } else {
            format!(
                "affine set x_min_norm + null(A), dimension {} (rank {} of {}x{})",
                n - constants.rank,
                constants.rank,
                m,
                n
            )
        };
        Ok(Self {
            objective,
            lip_const: constants.lip_const,
            pl_const: constants.pl_const,
            quoted_pl_const: constants.quoted_pl_const,
            opt_value,
            opt_point,
            seed,
            noise_std,
            opt_point_set_note,
        })
    }

    pub fn objective(&self) -> &LeastSquares {
        &self.objective
    }

    pub fn a_matrix(&self) -> &Matrix {
        self.objective.a()
    }

    pub fn b_vector(&self) -> &Vector {
        self.objective.b()
    }

    pub fn dim(&self) -> usize {
        self.objective.dim()
    }

    pub fn rows(&self) -> usize {
        self.objective.a().nrows()
    }

    pub fn eval(&self, x: &Vector) -> f64 {
        self.objective.eval(x)
    }

    pub fn grad(&self, x: &Vector) -> Vector {
        self.objective.gradient(x)
    }

    /// Minimum of `f` over `set`, by accelerated projected gradient.
    ///
    /// Returns the unconstrained optimum directly when it is feasible.
    pub fn constrained_optimum(&self, set: &dyn FeasibleSet) -> Result<(f64, Vector)> {
        if set.dim() != self.dim() {
            return Err(ZoptError::DimensionMismatch {
                expected: self.dim(),
                actual: set.dim(),
            });
        }
        if set.contains(&self.opt_point) {
            return Ok((self.opt_value, self.opt_point.clone()));
        }
        let step = 1.0 / self.lip_const;
        let mut x = set.project(&self.opt_point);
        let mut y = x.clone();
        let mut t = 1.0_f64;
        for _ in 0..200_000 {
            let next = set.project(&(&y - self.grad(&y) * step));
            let t_next = 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt());
            let moved = (&next - &x).norm();
            y = &next + (&next - &x) * ((t - 1.0) / t_next);
            // restart momentum when it stops paying off
            if self.eval(&next) > self.eval(&x) {
                y = next.clone();
                t = 1.0;
            } else {
                t = t_next;
            }
            x = next;
            if moved <= 1e-14 * (1.0 + x.norm()) {
                break;
            }
        }
        Ok((self.eval(&x), x))
    }

    /// Writes the instance as text: one header line, then `m` rows holding
    /// the `n` entries of a row of `A` followed by the matching entry of `b`.
    pub fn write_text<W: Write>(&self, mut out: W) -> Result<()> {
        let (m, n) = self.a_matrix().shape();
        writeln!(
            out,
            "zopt-lsq m={m} n={n} seed={} noise_std={:e}",
            self.seed, self.noise_std
        )?;
        let mut line = String::new();
        for i in 0..m {
            line.clear();
            for j in 0..n {
                write!(line, "{:e} ", self.a_matrix()[(i, j)]).unwrap();
            }
            write!(line, "{:e}", self.b_vector()[i]).unwrap();
            writeln!(out, "{line}")?;
        }
        Ok(())
    }

    pub fn read_text<R: Read>(input: R) -> Result<Self> {
        let mut lines = BufReader::new(input).lines();
        let header = lines
            .next()
            .ok_or_else(|| ZoptError::Format("line 1: missing header".into()))??;
        let mut fields = header.split_whitespace();
        if fields.next() != Some("zopt-lsq") {
            return Err(ZoptError::Format(
                "line 1: expected `zopt-lsq` header".into(),
            ));
        }
        let mut m = None;
        let mut n = None;
        let mut seed = 0;
        let mut noise_std = 0.0;
        for field in fields {
            let (key, value) = field
                .split_once('=')
                .ok_or_else(|| ZoptError::Format(format!("line 1: bad field `{field}`")))?;
            let bad = |_| ZoptError::Format(format!("line 1: bad value for `{key}`"));
            match key {
                "m" => m = Some(value.parse::<usize>().map_err(|e| bad(e.to_string()))?),
                "n" => n = Some(value.parse::<usize>().map_err(|e| bad(e.to_string()))?),
                "seed" => {
                    seed = value
                        .parse()
                        .map_err(|e: std::num::ParseIntError| bad(e.to_string()))?
                }
                "noise_std" => {
                    noise_std = value
                        .parse()
                        .map_err(|e: std::num::ParseFloatError| bad(e.to_string()))?
                }
                _ => {}
            }
        }
        let (m, n) = match (m, n) {
            (Some(m), Some(n)) => (m, n),
            _ => return Err(ZoptError::Format("line 1: header needs m and n".into())),
        };
        let mut a = Matrix::zeros(m, n);
        let mut b = Vector::zeros(m);
        for i in 0..m {
            let lineno = i + 2;
            let line = lines
                .next()
                .ok_or_else(|| ZoptError::Format(format!("line {lineno}: missing row")))??;
            let values: Vec<f64> = line
                .split_whitespace()
                .map(str::parse)
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| ZoptError::Format(format!("line {lineno}: {e}")))?;
            if values.len() != n + 1 {
                return Err(ZoptError::Format(format!(
                    "line {lineno}: expected {} numbers, found {}",
                    n + 1,
                    values.len()
                )));
            }
            for j in 0..n {
                a[(i, j)] = values[j];
            }
            b[i] = values[n];
        }
        Self::from_parts(a, b, seed, noise_std)
    }
}

/// Random instance: rows of `A` and the planted `x_bar` are standard normal,
/// and `b = A x_bar + w` with `w ~ N(0, noise_std^2)` entrywise.
pub fn make_least_squares(m: usize, n: usize, noise_std: f64, seed: u64) -> Result<TestProblem> {
    if m == 0 || n < m {
        return Err(ZoptError::Config(format!(
            "least-squares family needs 1 <= m <= n, got m = {m}, n = {n}"
        )));
    }
    if !(noise_std >= 0.0) {
        return Err(ZoptError::Config("noise_std must be nonnegative".into()));
    }
    let mut rng = rng_for(seed, 0);
    let a = Matrix::from_fn(m, n, |_, _| rng.sample(StandardNormal));
    let x_bar = Vector::from_fn(n, |_, _| rng.sample(StandardNormal));
    let noise = Vector::from_fn(m, |_, _| noise_std * rng.sample::<f64, _>(StandardNormal));
    let b = &a * x_bar + noise;
    TestProblem::from_parts(a, b, seed, noise_std)
}

/// Outcome of a sampled PL-inequality check.
#[derive(Debug, Clone, PartialEq)]
pub struct PlReport {
    /// Smallest observed `0.5 |grad f|^2 / (f - f*)`; `+inf` if every point
    /// was skipped.
    pub min_ratio: f64,
    pub violations: usize,
    pub evaluated: usize,
    pub skipped: usize,
}

/// Gaps below this are treated as optimal and skipped.
pub const PL_GAP_FLOOR: f64 = 1e-12;

/// Checks `0.5 |grad f(x)|^2 >= l (f(x) - f*)` at standard-normal points.
pub fn check_pl_with<F, G>(
    dim: usize,
    eval: F,
    grad: G,
    opt_value: f64,
    pl_const: f64,
    num_points: usize,
    seed: u64,
) -> PlReport
where
    F: Fn(&Vector) -> f64,
    G: Fn(&Vector) -> Vector,
{
    let mut rng = rng_for(seed, 0);
    let mut report = PlReport {
        min_ratio: f64::INFINITY,
        violations: 0,
        evaluated: 0,
        skipped: 0,
    };
    for _ in 0..num_points {
        let x = Vector::from_fn(dim, |_, _| rng.sample(StandardNormal));
        let gap = eval(&x) - opt_value;
        if gap < PL_GAP_FLOOR {
            report.skipped += 1;
            continue;
        }
        let ratio = 0.5 * grad(&x).norm_squared() / gap;
        report.evaluated += 1;
        report.min_ratio = report.min_ratio.min(ratio);
        if ratio < pl_const * (1.0 - 1e-9) {
            report.violations += 1;
        }
    }
    report
}

pub fn check_pl(problem: &TestProblem, num_points: usize, seed: u64) -> PlReport {
    check_pl_with(
        problem.dim(),
        |x| problem.eval(x),
        |x| problem.grad(x),
        problem.opt_value,
        problem.pl_const,
        num_points,
        seed,
    )
}
