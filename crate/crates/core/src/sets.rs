//! Convex feasible sets with exact projection.
//!
//! Anything implementing [`FeasibleSet`] can be used by the projected solver;
//! only the Euclidean projection is required, together with a membership
//! test and the diameter.

use serde::{Deserialize, Serialize};

use crate::error::{Result, ZoptError};
use crate::Vector;

/// Absolute per-coordinate slack for membership tests.
pub const MEMBERSHIP_TOL: f64 = 1e-12;

pub trait FeasibleSet: Send + Sync + std::fmt::Debug {
    fn dim(&self) -> usize;

    /// Euclidean projection `argmin_{z in X} |z - x|`.
    fn project(&self, x: &Vector) -> Vector;

    /// How far `x` is outside the set (0 when inside). Units are the same as
    /// the coordinates.
    fn violation(&self, x: &Vector) -> f64;

    fn diameter(&self) -> f64;

    /// Short human-readable description, e.g. `box[-0.5, 0.5]^40`.
    fn describe(&self) -> String;

    /// `Proj(x + step) - x`. Implementations may compute this without the
    /// cancellation of the default, which matters when `step` is tiny next
    /// to `x`.
    fn displacement(&self, x: &Vector, step: &Vector) -> Vector {
        self.project(&(x + step)) - x
    }

    fn contains(&self, x: &Vector) -> bool {
        x.len() == self.dim() && self.violation(x) <= MEMBERSHIP_TOL
    }

    fn is_bounded(&self) -> bool {
        self.diameter().is_finite()
    }
}

fn check_len(expected: usize, x: &Vector) -> Result<()> {
    if x.len() == expected {
        Ok(())
    } else {
        Err(ZoptError::DimensionMismatch {
            expected,
            actual: x.len(),
        })
    }
}

/// Projection with a dimension check.
pub fn project(set: &dyn FeasibleSet, x: &Vector) -> Result<Vector> {
    check_len(set.dim(), x)?;
    Ok(set.project(x))
}

/// `(x - Proj(x - h g)) / h`, the constrained analogue of `g`.
pub fn gradient_map(set: &dyn FeasibleSet, x: &Vector, g: &Vector, h: f64) -> Result<Vector> {
    check_len(set.dim(), x)?;
    check_len(set.dim(), g)?;
    if !(h > 0.0) {
        return Err(ZoptError::Config(format!("step must be positive, got {h}")));
    }
    let violation = set.violation(x);
    if violation > MEMBERSHIP_TOL {
        return Err(ZoptError::Infeasible { violation });
    }
    Ok(set.displacement(x, &(g * -h)) / -h)
}

#[derive(Debug, Clone, PartialEq)]
pub struct WholeSpace {
    dim: usize,
}

impl WholeSpace {
    pub fn new(dim: usize) -> Self {
        Self { dim }
    }
}

impl FeasibleSet for WholeSpace {
    fn dim(&self) -> usize {
        self.dim
    }
    fn project(&self, x: &Vector) -> Vector {
        x.clone()
    }
    fn violation(&self, _x: &Vector) -> f64 {
        0.0
    }
    fn displacement(&self, _x: &Vector, step: &Vector) -> Vector {
        step.clone()
    }
    fn diameter(&self) -> f64 {
        f64::INFINITY
    }
    fn describe(&self) -> String {
        format!("R^{}", self.dim)
    }
}

/// `{x : lower <= x <= upper}` componentwise.
#[derive(Debug, Clone, PartialEq)]
pub struct BoxSet {
    lower: Vector,
    upper: Vector,
}

impl BoxSet {
    pub fn new(lower: Vector, upper: Vector) -> Result<Self> {
        check_len(lower.len(), &upper)?;
        if lower.iter().zip(upper.iter()).any(|(l, u)| !(l < u)) {
            return Err(ZoptError::Config(
                "box bounds need lower < upper in every coordinate".into(),
            ));
        }
        Ok(Self { lower, upper })
    }

    pub fn uniform(dim: usize, lower: f64, upper: f64) -> Result<Self> {
        Self::new(
            Vector::from_element(dim, lower),
            Vector::from_element(dim, upper),
        )
    }

    pub fn lower(&self) -> &Vector {
        &self.lower
    }

    pub fn upper(&self) -> &Vector {
        &self.upper
    }
}

impl FeasibleSet for BoxSet {
    fn dim(&self) -> usize {
        self.lower.len()
    }

    fn project(&self, x: &Vector) -> Vector {
        Vector::from_fn(x.len(), |i, _| x[i].clamp(self.lower[i], self.upper[i]))
    }

    fn violation(&self, x: &Vector) -> f64 {
        x.iter()
            .zip(self.lower.iter().zip(self.upper.iter()))
            .map(|(v, (l, u))| (l - v).max(v - u).max(0.0))
            .fold(0.0, f64::max)
    }

    fn displacement(&self, x: &Vector, step: &Vector) -> Vector {
        Vector::from_fn(x.len(), |i, _| {
            let target = x[i] + step[i];
            if target < self.lower[i] {
                self.lower[i] - x[i]
            } else if target > self.upper[i] {
                self.upper[i] - x[i]
            } else {
                step[i]
            }
        })
    }

    fn diameter(&self) -> f64 {
        (&self.upper - &self.lower).norm()
    }

    fn describe(&self) -> String {
        let uniform = self.lower.iter().all(|&l| l == self.lower[0])
            && self.upper.iter().all(|&u| u == self.upper[0]);
        if uniform && !self.lower.is_empty() {
            format!("box[{}, {}]^{}", self.lower[0], self.upper[0], self.dim())
        } else {
            format!("box (dim {})", self.dim())
        }
    }
}

/// Closed Euclidean ball.
#[derive(Debug, Clone, PartialEq)]
pub struct Ball {
    center: Vector,
    radius: f64,
}

impl Ball {
    pub fn new(center: Vector, radius: f64) -> Result<Self> {
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(ZoptError::Config(format!(
                "ball radius must be positive and finite, got {radius}"
            )));
        }
        Ok(Self { center, radius })
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }
}

impl FeasibleSet for Ball {
    fn dim(&self) -> usize {
        self.center.len()
    }

    fn project(&self, x: &Vector) -> Vector {
        let offset = x - &self.center;
        let dist = offset.norm();
        if dist <= self.radius {
            return x.clone();
        }
        // shrink until rounding lands inside, so projecting again is a no-op
        let mut scale = self.radius / dist;
        loop {
            let p = &self.center + &offset * scale;
            if (&p - &self.center).norm() <= self.radius {
                return p;
            }
            scale *= 1.0 - f64::EPSILON;
        }
    }

    fn violation(&self, x: &Vector) -> f64 {
        // radial excess, bounded by the per-coordinate excess times sqrt(n)
        ((x - &self.center).norm() - self.radius).max(0.0)
    }

    fn diameter(&self) -> f64 {
        2.0 * self.radius
    }

    fn describe(&self) -> String {
        format!("ball(r = {}, dim {})", self.radius, self.dim())
    }
}

/// Serializable set description as it appears in experiment configs.
///
/// Scalar bounds apply to every coordinate; the dimension comes from the
/// problem.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SetSpec {
    WholeSpace,
    Box {
        lower: f64,
        upper: f64,
    },
    Ball {
        #[serde(default)]
        center: f64,
        radius: f64,
    },
}

impl SetSpec {
    pub fn build(&self, dim: usize) -> Result<Box<dyn FeasibleSet>> {
        Ok(match *self {
            SetSpec::WholeSpace => Box::new(WholeSpace::new(dim)),
            SetSpec::Box { lower, upper } => Box::new(BoxSet::uniform(dim, lower, upper)?),
            SetSpec::Ball { center, radius } => {
                Box::new(Ball::new(Vector::from_element(dim, center), radius)?)
            }
        })
    }
}
