use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::legendre::clenshaw_legendre;
use crate::error::{Error, Result};

/// Sphere dimension; the series needs `beta > DIMENSION` to be summable.
const DIMENSION: f64 = 2.0;

/// Half the dimension minus one half, i.e. the shift in the Legendre
/// multipliers `(l + lambda_d)^(-beta)` on the 2-sphere.
pub const LAMBDA_D: f64 = 0.5;

/// Refuse truncations above this degree.
const MAX_DEGREE: usize = 50_000_000;

pub const DEFAULT_TAIL_TOLERANCE: f64 = 1e-10;

/// A zonal kernel `kappa(t) = sum_{l <= L} c_l P_l(t)` with `c_l >= 0`.
///
/// Each `c_l` already contains the addition-theorem factor `(2l+1)/(4 pi)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LegendreSeriesKernel {
    coefficients: Vec<f64>,
    beta: f64,
    lambda_d: f64,
    tail_bound: f64,
    tail_tolerance: f64,
}

fn sobolev_coefficient(l: usize, beta: f64) -> f64 {
    (l as f64 + LAMBDA_D).powf(-beta) * (2 * l + 1) as f64 / (4.0 * PI)
}

/// Integral bound on `sum_{l > degree} c_l` for the Sobolev multipliers.
fn sobolev_tail(degree: usize, beta: f64) -> f64 {
    (degree as f64 + LAMBDA_D).powf(2.0 - beta) / ((beta - 2.0) * 2.0 * PI)
}

/// Green's-function type kernel with multipliers `(l + 1/2)^(-beta)`,
/// truncated at the smallest degree whose tail bound meets `tail_tolerance`.
pub fn sobolev_kernel(beta: f64, tail_tolerance: f64) -> Result<LegendreSeriesKernel> {
    if !(beta > DIMENSION) {
        return Err(Error::DivergentSeries {
            beta,
            dimension: DIMENSION,
        });
    }
    if !(tail_tolerance > 0.0) {
        return Err(Error::Domain(format!(
            "tail tolerance must be positive, got {tail_tolerance}"
        )));
    }
    let guess = (1.0 / (2.0 * PI * (beta - 2.0) * tail_tolerance)).powf(1.0 / (beta - 2.0)) - LAMBDA_D;
    if !(guess < MAX_DEGREE as f64) {
        return Err(Error::Domain(format!(
            "tail tolerance {tail_tolerance:e} needs degree above {MAX_DEGREE} for beta = {beta}"
        )));
    }
    let mut degree = guess.max(0.0).ceil() as usize;
    while degree > 0 && sobolev_tail(degree - 1, beta) <= tail_tolerance {
        degree -= 1;
    }
    while sobolev_tail(degree, beta) > tail_tolerance {
        degree += 1;
    }
    let coefficients = (0..=degree).map(|l| sobolev_coefficient(l, beta)).collect();
    Ok(LegendreSeriesKernel {
        coefficients,
        beta,
        lambda_d: LAMBDA_D,
        tail_bound: sobolev_tail(degree, beta),
        tail_tolerance,
    })
}

/// Zonal convolution with `psi`: `c_l -> c_l (1 + psi_hat_l)`. Degrees past
/// the end of `psi_hat` are left unchanged.
pub fn perturbed_kernel(base: &LegendreSeriesKernel, psi_hat: &[f64]) -> Result<LegendreSeriesKernel> {
    let mut out = base.clone();
    for (l, (c, s)) in out.coefficients.iter_mut().zip(psi_hat).enumerate() {
        if !s.is_finite() {
            return Err(Error::Domain(format!("psi_hat[{l}] = {s} is not finite")));
        }
        let v = *c * (1.0 + s);
        if v < 0.0 {
            return Err(Error::NotPositiveDefinite { degree: l, value: v });
        }
        *c = v;
    }
    Ok(out)
}

impl LegendreSeriesKernel {
    /// A kernel from explicit coefficients (all must be nonnegative).
    pub fn from_coefficients(coefficients: Vec<f64>) -> Result<Self> {
        if coefficients.is_empty() {
            return Err(Error::Domain("empty coefficient sequence".into()));
        }
        if let Some((l, &v)) = coefficients.iter().enumerate().find(|(_, v)| !(**v >= 0.0)) {
            return Err(Error::NotPositiveDefinite { degree: l, value: v });
        }
        Ok(Self {
            coefficients,
            beta: f64::NAN,
            lambda_d: LAMBDA_D,
            tail_bound: 0.0,
            tail_tolerance: 0.0,
        })
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coefficients
    }

    pub fn truncation_degree(&self) -> usize {
        self.coefficients.len() - 1
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn lambda_d(&self) -> f64 {
        self.lambda_d
    }

    pub fn tail_bound(&self) -> f64 {
        self.tail_bound
    }

    pub fn tail_tolerance(&self) -> f64 {
        self.tail_tolerance
    }

    /// `kappa(1) = sum c_l`, the maximum over `[-1, 1]`.
    pub fn max_value(&self) -> f64 {
        self.coefficients.iter().rev().sum()
    }

    pub fn eval(&self, t: f64) -> Result<f64> {
        if !(-1.0..=1.0).contains(&t) {
            return Err(Error::Domain(format!("t = {t} outside [-1, 1]")));
        }
        Ok(self.eval_clamped(t))
    }

    pub fn eval_clamped(&self, t: f64) -> f64 {
        clenshaw_legendre(&self.coefficients, t.clamp(-1.0, 1.0))
    }

    /// The series truncated (or zero-padded) at `degree`.
    pub fn with_degree(&self, degree: usize) -> Self {
        let mut out = self.clone();
        if degree < out.coefficients.len() {
            out.coefficients.truncate(degree + 1);
        } else if self.beta.is_finite() {
            let start = out.coefficients.len();
            out.coefficients
                .extend((start..=degree).map(|l| sobolev_coefficient(l, self.beta)));
        } else {
            out.coefficients.resize(degree + 1, 0.0);
        }
        out
    }

    /// Multipliers of the self-convolution `kappa * kappa`, which realizes
    /// `integral kappa(x.a) kappa(x.b) dx` as a zonal kernel in `a.b`.
    pub fn self_convolution(&self, degree: usize) -> LegendreSeriesKernel {
        let coefficients = self
            .coefficients
            .iter()
            .take(degree + 1)
            .enumerate()
            .map(|(l, c)| c * c * 4.0 * PI / (2 * l + 1) as f64)
            .collect();
        LegendreSeriesKernel {
            coefficients,
            beta: 2.0 * self.beta,
            lambda_d: self.lambda_d,
            tail_bound: 0.0,
            tail_tolerance: 0.0,
        }
    }
}
