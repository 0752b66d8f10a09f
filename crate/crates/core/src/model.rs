//! Problem data: the function class, step-size intervals and their grids,
//! and the gradient-descent plant.
//!
//! Every block of the plant is a multiple of the identity, and the matrix
//! inequalities built from it decouple coordinate-wise, so all plant data is
//! stored at dimension one.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("invalid function class: need 0 < m <= L, got m = {m}, L = {l}")]
    InvalidClass { m: f64, l: f64 },
    #[error("invalid interval constant: {0}")]
    InvalidC(String),
    #[error("invalid step-size interval [{lo}, {hi}]")]
    InvalidInterval { lo: f64, hi: f64 },
    #[error("grid needs at least one point")]
    EmptyGrid,
}

/// The class of `m`-strongly convex functions with `L`-Lipschitz gradients.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FunctionClass {
    m: f64,
    l: f64,
}

impl FunctionClass {
    pub fn new(m: f64, l: f64) -> Result<Self, ModelError> {
        if !(m.is_finite() && l.is_finite() && m > 0.0 && m <= l) {
            return Err(ModelError::InvalidClass { m, l });
        }
        Ok(Self { m, l })
    }

    /// The class `(1, kappa)`.
    pub fn from_kappa(kappa: f64) -> Result<Self, ModelError> {
        Self::new(1.0, kappa)
    }

    pub fn m(&self) -> f64 {
        self.m
    }

    pub fn l(&self) -> f64 {
        self.l
    }

    pub fn kappa(&self) -> f64 {
        self.l / self.m
    }
}

/// Closed interval `[lo, hi]` of admissible step sizes, `0 < lo <= hi`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepSizeInterval {
    lo: f64,
    hi: f64,
}

impl StepSizeInterval {
    pub fn new(lo: f64, hi: f64) -> Result<Self, ModelError> {
        if !(lo.is_finite() && hi.is_finite() && lo > 0.0 && lo <= hi) {
            return Err(ModelError::InvalidInterval { lo, hi });
        }
        Ok(Self { lo, hi })
    }

    /// A single admissible step size.
    pub fn constant(alpha: f64) -> Result<Self, ModelError> {
        Self::new(alpha, alpha)
    }

    /// `[1/(cL), c/L]`. Rejects `c < 1`, which would invert the interval.
    pub fn from_c(fc: &FunctionClass, c: f64) -> Result<Self, ModelError> {
        if !(c.is_finite() && c >= 1.0) {
            return Err(ModelError::InvalidC(format!("c must be >= 1, got {c}")));
        }
        Self::from_c_pair(fc, c, c)
    }

    /// `[1/(c1 L), c2/L]`.
    pub fn from_c_pair(fc: &FunctionClass, c1: f64, c2: f64) -> Result<Self, ModelError> {
        if !(c1.is_finite() && c2.is_finite() && c1 > 0.0 && c2 > 0.0) {
            return Err(ModelError::InvalidC(format!(
                "c1 and c2 must be positive, got c1 = {c1}, c2 = {c2}"
            )));
        }
        let lo = 1.0 / (c1 * fc.l());
        let hi = c2 / fc.l();
        if lo > hi {
            return Err(ModelError::InvalidC(format!(
                "empty interval: 1/(c1 L) = {lo} exceeds c2/L = {hi}"
            )));
        }
        Self::new(lo, hi)
    }

    pub fn lo(&self) -> f64 {
        self.lo
    }

    pub fn hi(&self) -> f64 {
        self.hi
    }

    pub fn is_degenerate(&self) -> bool {
        self.lo == self.hi
    }

    pub fn contains(&self, alpha: f64) -> bool {
        self.lo <= alpha && alpha <= self.hi
    }

    pub fn midpoint(&self) -> f64 {
        self.lo + 0.5 * (self.hi - self.lo)
    }
}

/// Finite, strictly increasing set of step sizes drawn from an interval.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepGrid {
    points: Vec<f64>,
    source: StepSizeInterval,
}

impl StepGrid {
    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn source(&self) -> &StepSizeInterval {
        &self.source
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// Uniform inclusive grid with `n` points.
///
/// `n == 1` gives the midpoint; a degenerate interval collapses to `{lo}`.
/// Points that round to the same float on very narrow intervals are merged,
/// so the result may hold fewer than `n` points.
pub fn make_grid(iv: &StepSizeInterval, n: usize) -> Result<StepGrid, ModelError> {
    if n == 0 {
        return Err(ModelError::EmptyGrid);
    }
    let points = if iv.is_degenerate() {
        vec![iv.lo]
    } else if n == 1 {
        vec![iv.midpoint()]
    } else {
        let width = iv.hi - iv.lo;
        let last = (n - 1) as f64;
        let mut pts: Vec<f64> = (0..n)
            .map(|i| match i {
                0 => iv.lo,
                i if i == n - 1 => iv.hi,
                i => (iv.lo + width * (i as f64 / last)).clamp(iv.lo, iv.hi),
            })
            .collect();
        pts.dedup_by(|b, a| *b <= *a);
        pts
    };
    Ok(StepGrid {
        points,
        source: *iv,
    })
}

/// Scalar LPV plant `x⁺ = a x + B(α) u`, `y = c x + d u`, with `B(α) = b0 + α b1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Plant {
    pub a: f64,
    pub b0: f64,
    pub b1: f64,
    pub c: f64,
    pub d: f64,
}

impl Plant {
    /// Gradient descent `ξ⁺ = ξ − α ∇f(ξ)`.
    pub fn gradient_descent() -> Self {
        Self {
            a: 1.0,
            b0: 0.0,
            b1: -1.0,
            c: 1.0,
            d: 0.0,
        }
    }

    pub fn b_at(&self, alpha: f64) -> f64 {
        self.b0 + alpha * self.b1
    }
}
