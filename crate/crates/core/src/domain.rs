//! Convex constraint sets with closed-form projections.

use serde::{Deserialize, Serialize};

use crate::error::{contract, Result};
use crate::norms::{conjugate, lp_norm, recip, NORM_TOL};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Shape {
    L2Ball { radius: f64 },
    Box { half_width: f64 },
    /// `{x : ||x||_e <= radius}` with `e` in `(1, 2]`, the mirror-descent domain.
    LpBall { radius: f64, exponent: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Domain {
    pub dim: usize,
    pub shape: Shape,
}

/// `min(2, max(p, 1 + 1/ln d))`.
pub fn default_mirror_exponent(p: f64, dim: usize) -> f64 {
    let log_floor = 1.0 + 1.0 / (dim as f64).ln();
    let e = if log_floor.is_finite() { p.max(log_floor) } else { 2.0 };
    e.min(2.0)
}

impl Domain {
    pub fn new(dim: usize, shape: Shape) -> Result<Self> {
        let size = match shape {
            Shape::L2Ball { radius } | Shape::LpBall { radius, .. } => radius,
            Shape::Box { half_width } => half_width,
        };
        if !(size.is_finite() && size > 0.0) {
            return Err(contract(format!("domain size must be positive, got {size}")));
        }
        if let Shape::LpBall { exponent, .. } = shape {
            if !(exponent > 1.0 && exponent <= 2.0) {
                return Err(contract(format!("ball exponent must lie in (1, 2], got {exponent}")));
            }
        }
        Ok(Self { dim, shape })
    }

    pub fn cube(dim: usize, half_width: f64) -> Result<Self> {
        Self::new(dim, Shape::Box { half_width })
    }

    pub fn l2_ball(dim: usize, radius: f64) -> Result<Self> {
        Self::new(dim, Shape::L2Ball { radius })
    }

    pub fn lp_ball(dim: usize, radius: f64, exponent: f64) -> Result<Self> {
        Self::new(dim, Shape::LpBall { radius, exponent })
    }

    /// The box whose lp diameter is `diameter`: half-width `D / (2 d^(1/p))`.
    pub fn box_with_diameter(dim: usize, p: f64, diameter: f64) -> Result<Self> {
        Self::cube(dim, diameter / (2.0 * (dim as f64).powf(recip(p))))
    }

    /// The `exponent`-ball whose lp diameter is `diameter`.
    pub fn ball_with_diameter(dim: usize, p: f64, exponent: f64, diameter: f64) -> Result<Self> {
        let stretch = (dim as f64).powf((recip(p) - recip(exponent)).max(0.0));
        if exponent == 2.0 {
            Self::l2_ball(dim, diameter / (2.0 * stretch))
        } else {
            Self::lp_ball(dim, diameter / (2.0 * stretch), exponent)
        }
    }

    /// `sup ||x - y||_p` over the domain.
    pub fn diameter(&self, p: f64) -> f64 {
        let d = self.dim as f64;
        match self.shape {
            Shape::Box { half_width } => 2.0 * half_width * d.powf(recip(p)),
            Shape::L2Ball { radius } => 2.0 * radius * d.powf((recip(p) - 0.5).max(0.0)),
            Shape::LpBall { radius, exponent } => {
                2.0 * radius * d.powf((recip(p) - recip(exponent)).max(0.0))
            }
        }
    }

    /// `min <g, x>` over the domain.
    pub fn min_linear(&self, g: &[f64]) -> f64 {
        match self.shape {
            Shape::Box { half_width } => -half_width * lp_norm(g, 1.0),
            Shape::L2Ball { radius } => -radius * lp_norm(g, 2.0),
            Shape::LpBall { radius, exponent } => -radius * lp_norm(g, conjugate(exponent)),
        }
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.dim
            && match self.shape {
                Shape::Box { half_width } => x.iter().all(|v| v.abs() <= half_width),
                Shape::L2Ball { radius } => lp_norm(x, 2.0) <= radius * (1.0 + NORM_TOL),
                Shape::LpBall { radius, exponent } => {
                    lp_norm(x, exponent) <= radius * (1.0 + NORM_TOL)
                }
            }
    }

    /// Coordinate clamp for the box, radial scaling for the balls.
    ///
    /// For the box and the l2 ball this is the Euclidean projection. For an
    /// lp' ball it is the Bregman projection under the mirror map
    /// `||x||_p'^2 / (p' - 1)`.
    pub fn project(&self, x: &[f64]) -> Vec<f64> {
        match self.shape {
            Shape::Box { half_width } => x.iter().map(|v| v.clamp(-half_width, half_width)).collect(),
            Shape::L2Ball { radius } => radial(x, radius, 2.0),
            Shape::LpBall { radius, exponent } => radial(x, radius, exponent),
        }
    }
}

fn radial(x: &[f64], radius: f64, exponent: f64) -> Vec<f64> {
    let n = lp_norm(x, exponent);
    if n <= radius {
        x.to_vec()
    } else {
        x.iter().map(|v| v * (radius / n)).collect()
    }
}
