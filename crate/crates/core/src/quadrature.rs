//! Product Gauss rules on the sphere and the discrete inner products and
//! norms built from them.

use std::f64::consts::PI;
use std::path::Path;

use crate::error::{Error, Result};
use crate::exec;
use crate::geometry::SpherePoint;

/// Smallest number of latitude rings used by [`QuadratureRule::for_mesh_norm`].
pub const MIN_RINGS: usize = 64;

/// Rings per unit of inverse fill distance in the default rule.
pub const RINGS_PER_INVERSE_MESH_NORM: f64 = 8.0;

/// Gauss-Legendre nodes and weights on `[-1, 1]`, nodes ascending.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let nf = n as f64;
    for i in 0..n.div_ceil(2) {
        let mut z = (PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            // P_n(z) and P_n'(z) by the three-term recurrence.
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=n {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * z * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            if n == 1 {
                p0 = 1.0;
            }
            dp = nf * (z * p1 - p0) / (z * z - 1.0);
            let dz = p1 / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        if n == 1 {
            z = 0.0;
            dp = 1.0;
        }
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = wi;
        w[n - 1 - i] = wi;
    }
    (x, w)
}

#[derive(Clone, Debug)]
pub struct QuadratureRule {
    nodes: Vec<SpherePoint>,
    weights: Vec<f64>,
    exactness_degree: usize,
}

impl QuadratureRule {
    /// Checks positivity and total mass `4 pi`.
    pub fn new(nodes: Vec<SpherePoint>, weights: Vec<f64>, exactness_degree: usize) -> Result<Self> {
        if nodes.len() != weights.len() {
            return Err(Error::Size {
                required: nodes.len(),
                found: weights.len(),
            });
        }
        if nodes.is_empty() {
            return Err(Error::Domain("quadrature rule without nodes".into()));
        }
        if let Some(w) = weights.iter().find(|w| !(w.is_finite() && **w > 0.0)) {
            return Err(Error::Domain(format!("quadrature weight {w} is not positive")));
        }
        let mass: f64 = weights.iter().sum();
        if (mass - 4.0 * PI).abs() > 1e-10 {
            return Err(Error::Domain(format!("quadrature weights sum to {mass}, not 4 pi")));
        }
        Ok(Self {
            nodes,
            weights,
            exactness_degree,
        })
    }

    /// Gauss-Legendre in `cos(theta)` times `n_phi` equispaced longitudes.
    pub fn product(n_theta: usize, n_phi: usize) -> Result<Self> {
        if n_theta == 0 || n_phi == 0 {
            return Err(Error::Domain(format!(
                "product rule needs n_theta, n_phi >= 1 (got {n_theta}, {n_phi})"
            )));
        }
        let (z, wz) = gauss_legendre(n_theta);
        let dphi = 2.0 * PI / n_phi as f64;
        let mut nodes = Vec::with_capacity(n_theta * n_phi);
        let mut weights = Vec::with_capacity(n_theta * n_phi);
        for (zi, wi) in z.iter().zip(&wz) {
            let r = (1.0 - zi * zi).max(0.0).sqrt();
            for j in 0..n_phi {
                let phi = j as f64 * dphi;
                nodes.push(SpherePoint::unchecked(r * phi.cos(), r * phi.sin(), *zi));
                weights.push(wi * dphi);
            }
        }
        Self::new(nodes, weights, (2 * n_theta - 1).min(n_phi - 1))
    }

    /// Default rule for a point set of fill distance `h`:
    /// `n_theta = max(64, ceil(8 / h))`, `n_phi = 2 n_theta`.
    pub fn for_mesh_norm(h: f64) -> Result<Self> {
        if !(h.is_finite() && h > 0.0) {
            return Err(Error::Domain(format!("mesh norm {h} must be positive")));
        }
        let n_theta = ((RINGS_PER_INVERSE_MESH_NORM / h).ceil() as usize).max(MIN_RINGS);
        Self::product(n_theta, 2 * n_theta)
    }

    pub fn nodes(&self) -> &[SpherePoint] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn exactness_degree(&self) -> usize {
        self.exactness_degree
    }

    /// `f` evaluated at every node.
    pub fn sample<F>(&self, f: F) -> Result<Vec<f64>>
    where
        F: Fn(&SpherePoint) -> f64 + Sync + Send,
    {
        let values = exec::map_range(self.len(), |i| f(&self.nodes[i]));
        check_finite(&values)?;
        Ok(values)
    }

    /// `sum_i w_i v_i` for values at the nodes.
    pub fn integrate_samples(&self, values: &[f64]) -> Result<f64> {
        self.check_len(values)?;
        check_finite(values)?;
        Ok(self.weights.iter().zip(values).map(|(w, v)| w * v).sum())
    }

    pub fn integrate<F>(&self, f: F) -> Result<f64>
    where
        F: Fn(&SpherePoint) -> f64 + Sync + Send,
    {
        self.integrate_samples(&self.sample(f)?)
    }

    pub fn inner_product_samples(&self, f: &[f64], g: &[f64]) -> Result<f64> {
        self.check_len(f)?;
        self.check_len(g)?;
        check_finite(f)?;
        check_finite(g)?;
        Ok(self
            .weights
            .iter()
            .zip(f.iter().zip(g))
            .map(|(w, (a, b))| w * a * b)
            .sum())
    }

    pub fn inner_product<F, G>(&self, f: F, g: G) -> Result<f64>
    where
        F: Fn(&SpherePoint) -> f64 + Sync + Send,
        G: Fn(&SpherePoint) -> f64 + Sync + Send,
    {
        self.inner_product_samples(&self.sample(f)?, &self.sample(g)?)
    }

    /// `(sum_i w_i |v_i|^p)^(1/p)` for finite `p >= 1`.
    pub fn lp_norm_samples(&self, values: &[f64], p: f64) -> Result<f64> {
        self.check_len(values)?;
        check_finite(values)?;
        if !(p >= 1.0) {
            return Err(Error::Domain(format!("p = {p} is below 1")));
        }
        if p.is_infinite() {
            return Ok(values.iter().fold(0.0, |m, v| m.max(v.abs())));
        }
        let s: f64 = self
            .weights
            .iter()
            .zip(values)
            .map(|(w, v)| w * v.abs().powf(p))
            .sum();
        Ok(s.powf(1.0 / p))
    }

    /// L_p norm; for `p = inf` the maximum over `sup_grid` is taken instead
    /// of a weighted sum.
    pub fn lp_norm<F>(&self, f: F, p: f64, sup_grid: &[SpherePoint]) -> Result<f64>
    where
        F: Fn(&SpherePoint) -> f64 + Sync + Send,
    {
        if p.is_infinite() && p > 0.0 {
            sup_norm(f, sup_grid)
        } else {
            self.lp_norm_samples(&self.sample(f)?, p)
        }
    }

    /// Writes `x,y,z,w` rows.
    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(["x", "y", "z", "w"])?;
        for (p, wt) in self.nodes.iter().zip(&self.weights) {
            w.serialize((p.x, p.y, p.z, wt))?;
        }
        w.flush()?;
        Ok(())
    }

    fn check_len(&self, values: &[f64]) -> Result<()> {
        if values.len() != self.len() {
            return Err(Error::Size {
                required: self.len(),
                found: values.len(),
            });
        }
        Ok(())
    }
}

/// Maximum of `|f|` over `grid`.
pub fn sup_norm<F>(f: F, grid: &[SpherePoint]) -> Result<f64>
where
    F: Fn(&SpherePoint) -> f64 + Sync + Send,
{
    let values = exec::map_range(grid.len(), |i| f(&grid[i]));
    check_finite(&values)?;
    Ok(values.iter().fold(0.0, |m, v| m.max(v.abs())))
}

fn check_finite(values: &[f64]) -> Result<()> {
    match values.iter().position(|v| !v.is_finite()) {
        Some(i) => Err(Error::Numerical(format!(
            "non-finite sample {} at node {i}",
            values[i]
        ))),
        None => Ok(()),
    }
}
