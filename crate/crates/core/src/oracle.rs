//! Gaussian directions and the two-point random oracle.
//!
//! Directions are drawn from `N(0, B^-1)`. The smoothing kernel
//! `exp(-|u|_B^2 / 2)` uses the B-weighted norm `|u|_B^2 = <Bu, u>`, which is
//! the reading consistent with a `det B` normalizer. With the Cholesky factor
//! `B = L L^T`, a standard normal `z` is mapped to `u = L^-T z`, whose
//! covariance is `(L L^T)^-1 = B^-1`.
//!
//! The normalizing constant of the smoothing integral is never formed:
//! every expectation is replaced by sampling.

use nalgebra::Cholesky;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Result, ZoptError};
use crate::problems::Objective;
use crate::{Matrix, Vector};

/// Random stream used for every draw in the crate.
pub type OracleRng = ChaCha8Rng;

/// Builds the sub-stream identified by `(seed, counter)`.
///
/// Streams with different counters are independent and any stream can be
/// rebuilt without replaying the others.
pub fn rng_for(seed: u64, counter: u64) -> OracleRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(counter);
    rng
}

#[derive(Debug, Clone)]
enum Correlation {
    Identity,
    Dense {
        b: Matrix,
        /// Lower Cholesky factor of `b`.
        factor: Matrix,
    },
}

/// Smoothing parameter, correlation operator and root seed of the oracle.
#[derive(Debug, Clone)]
pub struct OracleConfig {
    mu: f64,
    correlation: Correlation,
    seed: u64,
}

impl OracleConfig {
    /// Oracle with `B = I`.
    pub fn new(mu: f64, seed: u64) -> Result<Self> {
        if !(mu > 0.0 && mu.is_finite()) {
            return Err(ZoptError::Config(format!(
                "smoothing parameter must be positive and finite, got {mu}"
            )));
        }
        Ok(Self {
            mu,
            correlation: Correlation::Identity,
            seed,
        })
    }

    /// Oracle with a general symmetric positive-definite `B`.
    pub fn with_correlation(mu: f64, b: Matrix, seed: u64) -> Result<Self> {
        let mut cfg = Self::new(mu, seed)?;
        if !b.is_square() {
            return Err(ZoptError::NotPositiveDefinite);
        }
        let scale = b.amax().max(1.0);
        if (&b - b.transpose()).amax() > 1e-12 * scale {
            return Err(ZoptError::NotPositiveDefinite);
        }
        let factor = Cholesky::new(b.clone())
            .ok_or(ZoptError::NotPositiveDefinite)?
            .l();
        cfg.correlation = Correlation::Dense { b, factor };
        Ok(cfg)
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Same configuration with a different root seed.
    pub fn reseeded(&self, seed: u64) -> Self {
        Self {
            seed,
            ..self.clone()
        }
    }

    /// Same configuration with a different smoothing parameter.
    pub fn with_mu(&self, mu: f64) -> Result<Self> {
        let base = Self::new(mu, self.seed)?;
        Ok(Self {
            correlation: self.correlation.clone(),
            ..base
        })
    }

    pub fn is_identity(&self) -> bool {
        matches!(self.correlation, Correlation::Identity)
    }

    /// The correlation matrix `B` materialized for dimension `n`.
    pub fn b_matrix(&self, n: usize) -> Matrix {
        match &self.correlation {
            Correlation::Identity => Matrix::identity(n, n),
            Correlation::Dense { b, .. } => b.clone(),
        }
    }

    fn check_dim(&self, n: usize) -> Result<()> {
        match &self.correlation {
            Correlation::Dense { b, .. } if b.nrows() != n => Err(ZoptError::DimensionMismatch {
                expected: b.nrows(),
                actual: n,
            }),
            _ => Ok(()),
        }
    }

    /// `B v`.
    pub fn apply_b(&self, v: &Vector) -> Vector {
        match &self.correlation {
            Correlation::Identity => v.clone(),
            Correlation::Dense { b, .. } => b * v,
        }
    }
}

/// A sampled direction `u ~ N(0, B^-1)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Direction(pub Vector);

impl Direction {
    pub fn as_vector(&self) -> &Vector {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// Draws one direction of dimension `n` from `rng`.
pub fn sample_direction<R: Rng + ?Sized>(
    cfg: &OracleConfig,
    n: usize,
    rng: &mut R,
) -> Result<Direction> {
    cfg.check_dim(n)?;
    let z = Vector::from_iterator(n, (0..n).map(|_| rng.sample::<f64, _>(StandardNormal)));
    let u = match &cfg.correlation {
        Correlation::Identity => z,
        Correlation::Dense { factor, .. } => factor
            .tr_solve_lower_triangular(&z)
            .ok_or(ZoptError::NotPositiveDefinite)?,
    };
    Ok(Direction(u))
}

/// Oracle output together with the value `f(x)` it consumed.
#[derive(Debug, Clone)]
pub struct OracleSample {
    pub estimate: Vector,
    pub f_x: f64,
}

fn checked_eval<F: Objective + ?Sized>(f: &F, x: &Vector) -> Result<f64> {
    let value = f.eval(x);
    if value.is_finite() {
        Ok(value)
    } else {
        Err(ZoptError::NonFiniteValue {
            value,
            point_norm: x.norm(),
        })
    }
}

/// Two-point oracle that also hands back `f(x)`. Consumes exactly two
/// evaluations of `f`.
pub fn oracle_sample<F: Objective + ?Sized>(
    f: &F,
    x: &Vector,
    u: &Direction,
    cfg: &OracleConfig,
) -> Result<OracleSample> {
    if x.len() != u.len() {
        return Err(ZoptError::DimensionMismatch {
            expected: x.len(),
            actual: u.len(),
        });
    }
    cfg.check_dim(x.len())?;
    let f_x = checked_eval(f, x)?;
    let shifted = x + u.as_vector() * cfg.mu;
    let f_shifted = checked_eval(f, &shifted)?;
    let quotient = (f_shifted - f_x) / cfg.mu;
    let estimate = cfg.apply_b(u.as_vector()) * quotient;
    Ok(OracleSample { estimate, f_x })
}

/// `g = ((f(x + mu u) - f(x)) / mu) B u`.
pub fn oracle_eval<F: Objective + ?Sized>(
    f: &F,
    x: &Vector,
    u: &Direction,
    cfg: &OracleConfig,
) -> Result<Vector> {
    oracle_sample(f, x, u, cfg).map(|s| s.estimate)
}

/// Which smoothed quantity [`smooth_estimate`] targets.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SmoothMode {
    /// `f_mu(x) = E f(x + mu u)`.
    Value,
    /// `grad f_mu(x) = E g_mu(x)`.
    Gradient,
}

/// Monte Carlo mean with per-coordinate standard errors. Value mode yields
/// vectors of length one.
#[derive(Debug, Clone)]
pub struct Estimate {
    pub mean: Vector,
    pub std_err: Vector,
    pub samples: usize,
}

impl Estimate {
    /// Whether `target` lies within `k` standard errors in every coordinate.
    pub fn within(&self, target: &Vector, k: f64) -> bool {
        self.mean
            .iter()
            .zip(self.std_err.iter())
            .zip(target.iter())
            .all(|((m, s), t)| (m - t).abs() <= k * s)
    }
}

/// Per-coordinate running mean and variance (Welford).
#[derive(Debug, Clone)]
pub(crate) struct Welford {
    count: usize,
    mean: Vector,
    m2: Vector,
}

impl Welford {
    pub(crate) fn new(n: usize) -> Self {
        Self {
            count: 0,
            mean: Vector::zeros(n),
            m2: Vector::zeros(n),
        }
    }

    pub(crate) fn push(&mut self, sample: &Vector) {
        self.count += 1;
        let k = self.count as f64;
        for i in 0..sample.len() {
            let delta = sample[i] - self.mean[i];
            self.mean[i] += delta / k;
            self.m2[i] += delta * (sample[i] - self.mean[i]);
        }
    }

    pub(crate) fn finish(self) -> Estimate {
        let k = self.count as f64;
        let std_err = self.m2.map(|m2| (m2 / (k - 1.0) / k).sqrt());
        Estimate {
            mean: self.mean,
            std_err,
            samples: self.count,
        }
    }
}

/// Monte Carlo estimate of the smoothed value or the smoothed gradient at `x`.
pub fn smooth_estimate<F: Objective + ?Sized, R: Rng + ?Sized>(
    f: &F,
    x: &Vector,
    cfg: &OracleConfig,
    num_samples: usize,
    mode: SmoothMode,
    rng: &mut R,
) -> Result<Estimate> {
    if num_samples < 2 {
        return Err(ZoptError::Config(
            "at least two samples are needed for a standard error".into(),
        ));
    }
    let n = x.len();
    let mut acc = Welford::new(match mode {
        SmoothMode::Value => 1,
        SmoothMode::Gradient => n,
    });
    for _ in 0..num_samples {
        let u = sample_direction(cfg, n, rng)?;
        match mode {
            SmoothMode::Value => {
                let shifted = x + u.as_vector() * cfg.mu;
                let v = checked_eval(f, &shifted)?;
                acc.push(&Vector::from_element(1, v));
            }
            SmoothMode::Gradient => acc.push(&oracle_eval(f, x, &u, cfg)?),
        }
    }
    Ok(acc.finish())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems::FnObjective;
    use std::sync::atomic::{AtomicUsize, Ordering};

    fn covariance(samples: &[Vector]) -> Matrix {
        let n = samples[0].len();
        let k = samples.len() as f64;
        let mean = samples.iter().fold(Vector::zeros(n), |acc, s| acc + s) / k;
        let mut cov = Matrix::zeros(n, n);
        for s in samples {
            let d = s - &mean;
            cov += &d * d.transpose();
        }
        cov / (k - 1.0)
    }

    #[test]
    fn identity_directions_are_standard_normal() {
        let cfg = OracleConfig::new(0.1, 3).unwrap();
        let mut rng = rng_for(3, 0);
        let samples: Vec<Vector> = (0..100_000)
            .map(|_| sample_direction(&cfg, 3, &mut rng).unwrap().0)
            .collect();
        let k = samples.len() as f64;
        let mean = samples.iter().fold(Vector::zeros(3), |acc, s| acc + s) / k;
        // unit variance, so the standard error of each mean is 1/sqrt(k)
        assert!(mean.amax() < 5.0 / k.sqrt(), "mean {mean}");
        let cov = covariance(&samples);
        assert!((cov - Matrix::identity(3, 3)).amax() < 0.05);
    }

    #[test]
    fn correlated_directions_have_inverse_covariance() {
        let b = Matrix::from_diagonal(&Vector::from_vec(vec![4.0, 1.0]));
        let cfg = OracleConfig::with_correlation(0.1, b, 9).unwrap();
        let mut rng = rng_for(9, 0);
        let samples: Vec<Vector> = (0..100_000)
            .map(|_| sample_direction(&cfg, 2, &mut rng).unwrap().0)
            .collect();
        let expected = Matrix::from_diagonal(&Vector::from_vec(vec![0.25, 1.0]));
        assert!((covariance(&samples) - expected).amax() < 0.05);
    }

    #[test]
    fn identical_counters_give_identical_directions() {
        let cfg = OracleConfig::new(0.1, 77).unwrap();
        let a = sample_direction(&cfg, 8, &mut rng_for(77, 12)).unwrap();
        let b = sample_direction(&cfg, 8, &mut rng_for(77, 12)).unwrap();
        let c = sample_direction(&cfg, 8, &mut rng_for(77, 13)).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn rejects_non_spd_correlation() {
        let b = Matrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]);
        assert!(matches!(
            OracleConfig::with_correlation(0.1, b, 0),
            Err(ZoptError::NotPositiveDefinite)
        ));
        let asym = Matrix::from_row_slice(2, 2, &[2.0, 1.0, 0.0, 2.0]);
        assert!(OracleConfig::with_correlation(0.1, asym, 0).is_err());
        assert!(OracleConfig::new(0.0, 0).is_err());
        assert!(OracleConfig::new(-1.0, 0).is_err());
    }

    #[test]
    fn constant_function_gives_zero() {
        let f = FnObjective::new(4, |_| 5.0);
        let cfg = OracleConfig::new(0.1, 0).unwrap();
        let u = sample_direction(&cfg, 4, &mut rng_for(0, 0)).unwrap();
        let g = oracle_eval(&f, &Vector::from_element(4, 1.3), &u, &cfg).unwrap();
        assert_eq!(g, Vector::zeros(4));
    }

    #[test]
    fn scalar_square_by_hand() {
        let f = FnObjective::new(1, |x: &Vector| x[0] * x[0]);
        let cfg = OracleConfig::new(0.5, 0).unwrap();
        let g = oracle_eval(
            &f,
            &Vector::from_element(1, 1.0),
            &Direction(Vector::from_element(1, 2.0)),
            &cfg,
        )
        .unwrap();
        assert_eq!(g[0], 12.0);
    }

    #[test]
    fn linear_function_is_exact_for_any_mu() {
        let a = Vector::from_vec(vec![1.0, -2.0, 0.5]);
        let aa = a.clone();
        let f = FnObjective::new(3, move |x: &Vector| aa.dot(x));
        let u = Direction(Vector::from_vec(vec![0.25, 0.5, -1.0]));
        let x = Vector::from_vec(vec![0.5, 0.25, 2.0]);
        // <a, u> = 0.25 - 1 - 0.5 = -1.25, exact in binary
        let expected = u.as_vector() * -1.25;
        for mu in [1.0, 0.5, 0.125] {
            let cfg = OracleConfig::new(mu, 0).unwrap();
            let g = oracle_eval(&f, &x, &u, &cfg).unwrap();
            assert!((g - &expected).amax() < 1e-12);
        }
    }

    #[test]
    fn oracle_uses_exactly_two_evaluations() {
        let calls = AtomicUsize::new(0);
        let f = FnObjective::new(2, |x: &Vector| {
            calls.fetch_add(1, Ordering::Relaxed);
            x.norm_squared()
        });
        let cfg = OracleConfig::new(0.1, 0).unwrap();
        let u = sample_direction(&cfg, 2, &mut rng_for(0, 0)).unwrap();
        oracle_eval(&f, &Vector::zeros(2), &u, &cfg).unwrap();
        assert_eq!(calls.load(Ordering::Relaxed), 2);
    }

    #[test]
    fn non_finite_values_are_reported() {
        let f = FnObjective::new(1, |x: &Vector| if x[0] > 0.5 { f64::NAN } else { 0.0 });
        let cfg = OracleConfig::new(1.0, 0).unwrap();
        let err = oracle_eval(
            &f,
            &Vector::zeros(1),
            &Direction(Vector::from_element(1, 1.0)),
            &cfg,
        )
        .unwrap_err();
        assert!(matches!(err, ZoptError::NonFiniteValue { .. }));
    }

    #[test]
    fn correlated_oracle_applies_b() {
        let f = FnObjective::new(2, |x: &Vector| x[0] + 3.0 * x[1]);
        let b = Matrix::from_row_slice(2, 2, &[2.0, 0.5, 0.5, 1.0]);
        let cfg = OracleConfig::with_correlation(1.0, b.clone(), 0).unwrap();
        let u = Vector::from_vec(vec![1.0, 1.0]);
        let g = oracle_eval(&f, &Vector::zeros(2), &Direction(u.clone()), &cfg).unwrap();
        assert!((g - (&b * &u) * 4.0).amax() < 1e-12);
        assert!(oracle_eval(&f, &Vector::zeros(3), &Direction(Vector::zeros(3)), &cfg).is_err());
    }

    #[test]
    fn smoothed_scalar_square_at_origin() {
        let f = FnObjective::new(1, |x: &Vector| x[0] * x[0]);
        let cfg = OracleConfig::new(0.1, 5).unwrap();
        let est = smooth_estimate(
            &f,
            &Vector::zeros(1),
            &cfg,
            100_000,
            SmoothMode::Value,
            &mut rng_for(5, 0),
        )
        .unwrap();
        assert!(est.within(&Vector::from_element(1, 0.01), 3.0), "{est:?}");
    }

    #[test]
    fn smoothed_gradient_of_linear_is_exact_in_mean() {
        let a = Vector::from_vec(vec![0.3, -1.0, 2.0, 0.0]);
        let aa = a.clone();
        let f = FnObjective::new(4, move |x: &Vector| aa.dot(x));
        let cfg = OracleConfig::new(0.01, 11).unwrap();
        let est = smooth_estimate(
            &f,
            &Vector::from_element(4, 1.0),
            &cfg,
            50_000,
            SmoothMode::Gradient,
            &mut rng_for(11, 0),
        )
        .unwrap();
        assert!(est.within(&a, 3.0), "{est:?}");
    }

    #[test]
    fn smoothed_gradient_of_quadratic_matches_true_gradient() {
        let a = Matrix::from_row_slice(2, 3, &[1.0, 0.5, -1.0, 0.0, 2.0, 1.0]);
        let b = Vector::from_vec(vec![1.0, -1.0]);
        let (aa, bb) = (a.clone(), b.clone());
        let f = FnObjective::new(3, move |x: &Vector| (&aa * x - &bb).norm_squared());
        let x = Vector::from_vec(vec![0.2, -0.4, 0.7]);
        let grad = a.transpose() * (&a * &x - &b) * 2.0;
        let cfg = OracleConfig::new(0.05, 21).unwrap();
        let est = smooth_estimate(
            &f,
            &x,
            &cfg,
            100_000,
            SmoothMode::Gradient,
            &mut rng_for(21, 0),
        )
        .unwrap();
        assert!(est.within(&grad, 3.0), "{est:?} vs {grad}");
    }

    #[test]
    fn smooth_estimate_needs_two_samples() {
        let f = FnObjective::new(1, |x: &Vector| x[0]);
        let cfg = OracleConfig::new(0.1, 0).unwrap();
        assert!(smooth_estimate(
            &f,
            &Vector::zeros(1),
            &cfg,
            1,
            SmoothMode::Value,
            &mut rng_for(0, 0)
        )
        .is_err());
    }
}
