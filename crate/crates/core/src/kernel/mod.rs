//! Positive-definite zonal kernels on the sphere.

pub mod legendre;
pub mod series;
pub mod spline;
pub mod table;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use legendre::{legendre_all, legendre_eval, real_harmonics};
pub use series::{perturbed_kernel, sobolev_kernel, LegendreSeriesKernel, DEFAULT_TAIL_TOLERANCE};
pub use spline::{surface_spline_eval, SplineBranch, SurfaceSplineKernel};
pub use table::KernelTable;

fn default_tail_tolerance() -> f64 {
    DEFAULT_TAIL_TOLERANCE
}

/// JSON kernel descriptor, e.g. `{"type":"sobolev","beta":4.0,"tail_tolerance":1e-10}`
/// or `{"type":"surface_spline","m":2,"d":2}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum KernelDescriptor {
    Sobolev {
        beta: f64,
        #[serde(default = "default_tail_tolerance")]
        tail_tolerance: f64,
    },
    SurfaceSpline {
        m: u32,
        d: u32,
    },
}

impl KernelDescriptor {
    pub fn build(&self) -> Result<Kernel> {
        match *self {
            KernelDescriptor::Sobolev {
                beta,
                tail_tolerance,
            } => Ok(Kernel::from_series(sobolev_kernel(beta, tail_tolerance)?)),
            KernelDescriptor::SurfaceSpline { m, d } => {
                Ok(Kernel::Spline(SurfaceSplineKernel::new(m, d)?))
            }
        }
    }
}

/// Relative accuracy a table must reach to replace direct summation.
pub const TABLE_TOLERANCE: f64 = 1e-12;

/// A kernel ready for bulk evaluation.
#[derive(Clone, Debug)]
pub enum Kernel {
    Series {
        series: LegendreSeriesKernel,
        /// `None` when tabulation cannot reach [`TABLE_TOLERANCE`].
        table: Option<KernelTable>,
    },
    Spline(SurfaceSplineKernel),
}

impl Kernel {
    pub fn from_series(series: LegendreSeriesKernel) -> Self {
        let table = KernelTable::new(&series);
        let table =
            (table.max_error() <= TABLE_TOLERANCE * series.max_value().max(1.0)).then_some(table);
        if table.is_none() {
            log::debug!(
                "kernel table not accurate enough, degree {} evaluated directly",
                series.truncation_degree()
            );
        }
        Kernel::Series { series, table }
    }

    /// Series kernels are positive definite; splines only conditionally.
    pub fn is_positive_definite(&self) -> bool {
        matches!(self, Kernel::Series { .. })
    }

    pub fn as_series(&self) -> Option<&LegendreSeriesKernel> {
        match self {
            Kernel::Series { series, .. } => Some(series),
            Kernel::Spline(_) => None,
        }
    }

    pub fn as_spline(&self) -> Option<&SurfaceSplineKernel> {
        match self {
            Kernel::Spline(s) => Some(s),
            Kernel::Series { .. } => None,
        }
    }

    /// Fast evaluation at `t` (clamped to `[-1, 1]`): tabulated for series
    /// kernels, closed form for splines.
    #[inline]
    pub fn eval(&self, t: f64) -> f64 {
        match self {
            Kernel::Series {
                table: Some(table), ..
            } => table.eval(t),
            Kernel::Series { series, .. } => series.eval_clamped(t),
            Kernel::Spline(s) => s.eval_clamped(t),
        }
    }

    /// JSON description recorded in persisted artifacts.
    pub fn describe(&self) -> serde_json::Value {
        match self {
            Kernel::Series { series, .. } if series.beta().is_finite() => serde_json::json!({
                "type": "sobolev",
                "beta": series.beta(),
                "tail_tolerance": series.tail_tolerance(),
                "truncation_degree": series.truncation_degree(),
                "kappa_max": series.max_value(),
            }),
            Kernel::Series { series, .. } => serde_json::json!({
                "type": "series",
                "truncation_degree": series.truncation_degree(),
                "kappa_max": series.max_value(),
            }),
            Kernel::Spline(s) => serde_json::json!({
                "type": "surface_spline",
                "m": s.order(),
                "d": s.dimension(),
            }),
        }
    }
}

/// Evaluates `kernel` at `t` in `[-1, 1]`: full Clenshaw summation for
/// series kernels, closed form for splines.
pub fn kernel_eval(kernel: &Kernel, t: f64) -> Result<f64> {
    match kernel {
        Kernel::Series { series, .. } => series.eval(t),
        Kernel::Spline(s) => s.eval(t),
    }
    .map_err(|e| match e {
        Error::Domain(m) => Error::Domain(m),
        other => other,
    })
}
