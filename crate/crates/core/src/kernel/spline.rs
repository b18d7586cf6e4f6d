use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Restricted surface spline `(1-t)^(m-d/2) log(1-t)` (even `d`) or
/// `(1-t)^(m-d/2)` (odd `d`). Conditionally positive definite; use it
/// through the augmented Lagrange solve.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SurfaceSplineKernel {
    m: u32,
    d: u32,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SplineBranch {
    /// `d` even: logarithmic factor.
    Even,
    Odd,
}

impl SurfaceSplineKernel {
    pub fn new(m: u32, d: u32) -> Result<Self> {
        if 2 * m <= d {
            return Err(Error::Domain(format!("surface spline needs m > d/2, got m = {m}, d = {d}")));
        }
        Ok(Self { m, d })
    }

    pub fn order(&self) -> u32 {
        self.m
    }

    pub fn dimension(&self) -> u32 {
        self.d
    }

    pub fn branch(&self) -> SplineBranch {
        if self.d.is_multiple_of(2) {
            SplineBranch::Even
        } else {
            SplineBranch::Odd
        }
    }

    /// `m - d/2`.
    pub fn exponent(&self) -> f64 {
        self.m as f64 - self.d as f64 / 2.0
    }

    /// Degree of the harmonics annihilated by the coefficient vectors,
    /// `ceil(m - d/2)`.
    pub fn polynomial_degree(&self) -> usize {
        self.exponent().ceil() as usize
    }

    pub fn eval(&self, t: f64) -> Result<f64> {
        if !(-1.0..=1.0).contains(&t) {
            return Err(Error::Domain(format!("t = {t} outside [-1, 1]")));
        }
        Ok(self.eval_clamped(t))
    }

    /// Closed form; the removable point `t = 1` evaluates to its limit 0.
    pub fn eval_clamped(&self, t: f64) -> f64 {
        let s = 1.0 - t.clamp(-1.0, 1.0);
        if s <= 0.0 {
            return 0.0;
        }
        let e = self.exponent();
        let base = if e.fract() == 0.0 { s.powi(e as i32) } else { s.powf(e) };
        match self.branch() {
            SplineBranch::Even => base * s.ln(),
            SplineBranch::Odd => base,
        }
    }
}

/// Free-function form of [`SurfaceSplineKernel::eval`].
pub fn surface_spline_eval(kernel: &SurfaceSplineKernel, t: f64) -> Result<f64> {
    kernel.eval(t)
}
