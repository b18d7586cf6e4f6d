//! Piecewise Chebyshev tabulation of a series kernel for bulk evaluation.
//!
//! Direct Clenshaw summation costs O(L) per value (L is about 28000 for the
//! default fourth-order kernel), far too slow for dense matrix assembly. The
//! kernel is tabulated in `u = sqrt((1 - t) / 2) = sin(theta / 2)`, on
//! panels that halve towards `u = 0`, where the kernel behaves like
//! `u^(beta-2) log u`. Away from the origin it is smooth in `u`.

use serde::{Deserialize, Serialize};

use super::series::LegendreSeriesKernel;

const PANEL_DEGREE: usize = 16;
const FIRST_EDGE_LOG2: i32 = -24;

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct KernelTable {
    /// Panel edges in `u`, from 0 to 1.
    edges: Vec<f64>,
    /// Chebyshev coefficients, `PANEL_DEGREE + 1` per panel.
    coefficients: Vec<f64>,
    max_error: f64,
}

fn chebyshev_nodes() -> Vec<f64> {
    let m = PANEL_DEGREE + 1;
    (0..m)
        .map(|k| (std::f64::consts::PI * (k as f64 + 0.5) / m as f64).cos())
        .collect()
}

impl KernelTable {
    pub fn new(kernel: &LegendreSeriesKernel) -> Self {
        let mut edges = vec![0.0];
        let mut e = FIRST_EDGE_LOG2;
        while e < 0 {
            edges.push(2f64.powi(e));
            e += 1;
        }
        edges.push(1.0);
        let nodes = chebyshev_nodes();
        let m = nodes.len();
        let mut coefficients = Vec::with_capacity((edges.len() - 1) * m);
        for w in edges.windows(2) {
            let (a, b) = (w[0], w[1]);
            let values: Vec<f64> = nodes
                .iter()
                .map(|s| {
                    let u = 0.5 * (a + b) + 0.5 * (b - a) * s;
                    kernel.eval_clamped(1.0 - 2.0 * u * u)
                })
                .collect();
            // Discrete cosine transform at first-kind nodes.
            for j in 0..m {
                let sum: f64 = (0..m)
                    .map(|k| {
                        values[k]
                            * (std::f64::consts::PI * j as f64 * (k as f64 + 0.5) / m as f64).cos()
                    })
                    .sum();
                let scale = if j == 0 { 1.0 } else { 2.0 };
                coefficients.push(scale * sum / m as f64);
            }
        }
        let mut table = Self {
            edges,
            coefficients,
            max_error: 0.0,
        };
        // Check against direct summation midway between interpolation nodes.
        let mut err: f64 = 0.0;
        for w in table.edges.clone().windows(2) {
            for k in 1..8 {
                let u = w[0] + (w[1] - w[0]) * k as f64 / 8.0;
                let t = 1.0 - 2.0 * u * u;
                err = err.max((table.eval(t) - kernel.eval_clamped(t)).abs());
            }
        }
        table.max_error = err;
        table
    }

    /// Largest deviation from direct summation observed at build time.
    pub fn max_error(&self) -> f64 {
        self.max_error
    }

    #[inline]
    pub fn eval(&self, t: f64) -> f64 {
        let u = (0.5 * (1.0 - t)).max(0.0).sqrt().min(1.0);
        let panels = self.edges.len() - 1;
        let idx = if u < self.edges[1] {
            0
        } else {
            let k = (u.log2().floor() as i32 - FIRST_EDGE_LOG2 + 1) as usize;
            k.min(panels - 1)
        };
        // log2 rounding can be off by one at panel edges.
        let idx = if u < self.edges[idx] {
            idx - 1
        } else if idx + 1 < panels && u >= self.edges[idx + 1] {
            idx + 1
        } else {
            idx
        };
        let (a, b) = (self.edges[idx], self.edges[idx + 1]);
        let s = (2.0 * u - a - b) / (b - a);
        let c = &self.coefficients[idx * (PANEL_DEGREE + 1)..(idx + 1) * (PANEL_DEGREE + 1)];
        let (mut b1, mut b2) = (0.0, 0.0);
        for &ck in c[1..].iter().rev() {
            let b0 = 2.0 * s * b1 - b2 + ck;
            b2 = b1;
            b1 = b0;
        }
        s * b1 - b2 + c[0]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::series::sobolev_kernel;

    #[test]
    fn agrees_with_direct_summation() {
        let k = sobolev_kernel(4.0, 1e-10).unwrap();
        let table = KernelTable::new(&k);
        assert!(table.max_error() < 1e-12, "{:e}", table.max_error());
        let mut worst: f64 = 0.0;
        for i in 0..=400 {
            let u: f64 = (i as f64 / 400.0).powi(3);
            let t = 1.0 - 2.0 * u * u;
            worst = worst.max((table.eval(t) - k.eval(t).unwrap()).abs());
        }
        assert!(worst < 1e-12, "{worst:e}");
    }

    #[test]
    fn endpoints() {
        let k = sobolev_kernel(4.0, 1e-10).unwrap();
        let table = KernelTable::new(&k);
        for t in [1.0, -1.0, 1.0 + 1e-15, -1.0 - 1e-15, 0.0] {
            let err = (table.eval(t) - k.eval_clamped(t)).abs();
            assert!(err < 1e-11, "t={t} err={err:e}");
        }
    }

    #[test]
    fn rough_kernel_reports_its_error() {
        // Slowly decaying coefficients leave truncation ripples a fixed-degree
        // panel cannot follow; the reported error must cover what we observe.
        let k = sobolev_kernel(3.0, 1e-5).unwrap();
        let table = KernelTable::new(&k);
        for t in [1.0, -1.0, 0.0, 0.3, -0.7] {
            let err = (table.eval(t) - k.eval_clamped(t)).abs();
            assert!(err <= 2.0 * table.max_error() + 1e-14, "t={t} err={err:e}");
        }
    }
}
