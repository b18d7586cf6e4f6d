//! Lagrange (cardinal) bases of kernel spaces, their p-renormalized
//! versions, and the synthesis and analysis maps.

use std::path::Path;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec;
use crate::geometry::{PointSet, SpherePoint};
use crate::kernel::legendre::harmonic_count;
use crate::kernel::{real_harmonics, Kernel, SurfaceSplineKernel};
use crate::linalg;
use crate::quadrature::QuadratureRule;

/// Largest accepted 2-norm condition number of the collocation matrix.
pub const MAX_CONDITION: f64 = 1e12;

/// Tolerance on `|chi_xi(zeta) - delta|` and on the side conditions.
pub const LAGRANGE_TOLERANCE: f64 = 1e-8;

/// Magnitude below which basis values are treated as roundoff by default.
pub const DEFAULT_NOISE_FLOOR: f64 = 1e-13;

/// Points per block in bulk evaluation.
const EVAL_BLOCK: usize = 256;

/// A finite family of functions attached to centers on the sphere.
pub trait BasisFamily: Sync {
    fn len(&self) -> usize;

    fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn centers(&self) -> &[SpherePoint];

    /// Separation radius of the centers.
    fn separation_radius(&self) -> f64;

    fn eval(&self, index: usize, x: &SpherePoint) -> f64;

    /// Values of smaller magnitude carry no signal (roundoff level).
    fn noise_floor(&self) -> f64 {
        DEFAULT_NOISE_FLOOR
    }

    /// `V[i, k] = v_{indices[k]}(points[i])`.
    fn eval_columns(&self, points: &[SpherePoint], indices: &[usize]) -> DMatrix<f64> {
        let mut out = DMatrix::zeros(points.len(), indices.len());
        let cols = exec::map_range(indices.len(), |k| {
            points.iter().map(|x| self.eval(indices[k], x)).collect::<Vec<_>>()
        });
        for (k, c) in cols.into_iter().enumerate() {
            out.column_mut(k).copy_from_slice(&c);
        }
        out
    }

    /// `V[i, j] = v_j(points[i])`.
    fn eval_matrix(&self, points: &[SpherePoint]) -> DMatrix<f64> {
        let all: Vec<usize> = (0..self.len()).collect();
        self.eval_columns(points, &all)
    }

    /// `S[i, t] = sum_j coeffs[j, t] v_j(points[i])`.
    fn eval_combinations(&self, points: &[SpherePoint], coeffs: &DMatrix<f64>) -> DMatrix<f64> {
        self.eval_matrix(points) * coeffs
    }

    /// `T[j, t] = sum_i values[i, t] v_j(points[i])`, the transpose of
    /// [`eval_combinations`](Self::eval_combinations).
    fn adjoint_combinations(&self, points: &[SpherePoint], values: &DMatrix<f64>) -> DMatrix<f64> {
        self.eval_matrix(points).transpose() * values
    }
}

/// A family given by a closure `f(index, x)`.
pub struct FunctionFamily<F> {
    centers: Vec<SpherePoint>,
    separation: f64,
    f: F,
}

impl<F> FunctionFamily<F>
where
    F: Fn(usize, &SpherePoint) -> f64 + Sync,
{
    pub fn new(centers: Vec<SpherePoint>, separation: f64, f: F) -> Self {
        Self {
            centers,
            separation,
            f,
        }
    }
}

impl<F> BasisFamily for FunctionFamily<F>
where
    F: Fn(usize, &SpherePoint) -> f64 + Sync,
{
    fn len(&self) -> usize {
        self.centers.len()
    }

    fn centers(&self) -> &[SpherePoint] {
        &self.centers
    }

    fn separation_radius(&self) -> f64 {
        self.separation
    }

    fn eval(&self, index: usize, x: &SpherePoint) -> f64 {
        (self.f)(index, x)
    }
}

/// The raw translates `kappa(. , xi)`: same span as the Lagrange basis of a
/// positive definite kernel, far worse conditioned.
#[derive(Clone, Debug)]
pub struct KernelTranslates {
    kernel: Kernel,
    centers: Vec<SpherePoint>,
    separation: f64,
}

impl KernelTranslates {
    pub fn new(kernel: Kernel, set: &PointSet) -> Self {
        Self {
            kernel,
            centers: set.points().to_vec(),
            separation: set.separation_radius(),
        }
    }
}

impl BasisFamily for KernelTranslates {
    fn len(&self) -> usize {
        self.centers.len()
    }

    fn centers(&self) -> &[SpherePoint] {
        &self.centers
    }

    fn separation_radius(&self) -> f64 {
        self.separation
    }

    fn eval(&self, index: usize, x: &SpherePoint) -> f64 {
        self.kernel.eval(x.dot(&self.centers[index]))
    }

    fn eval_columns(&self, points: &[SpherePoint], indices: &[usize]) -> DMatrix<f64> {
        let cols: Vec<SpherePoint> = indices.iter().map(|&i| self.centers[i]).collect();
        kernel_block(&self.kernel, points, &cols)
    }

    fn eval_matrix(&self, points: &[SpherePoint]) -> DMatrix<f64> {
        kernel_block(&self.kernel, points, &self.centers)
    }
}

/// `K[i, j] = kappa(xi_i . xi_j)`.
pub fn collocation_matrix(kernel: &Kernel, points: &[SpherePoint]) -> DMatrix<f64> {
    kernel_block(kernel, points, points)
}

/// `K[i, j] = kappa(x_i . zeta_j)`, filled column by column.
fn kernel_block(kernel: &Kernel, rows: &[SpherePoint], cols: &[SpherePoint]) -> DMatrix<f64> {
    let m = rows.len();
    let mut data = vec![0.0; m * cols.len()];
    if m > 0 {
        exec::for_each_chunk_mut(&mut data, m, |j, col| {
            let z = &cols[j];
            for (v, x) in col.iter_mut().zip(rows) {
                *v = kernel.eval(x.dot(z));
            }
        });
    }
    DMatrix::from_vec(m, cols.len(), data)
}

/// `P[i, k] = Y_k(xi_i)` for real harmonics up to `degree`.
fn harmonic_block(points: &[SpherePoint], degree: usize) -> DMatrix<f64> {
    let mut p = DMatrix::zeros(points.len(), harmonic_count(degree));
    for (i, x) in points.iter().enumerate() {
        for (k, y) in real_harmonics(degree, x).into_iter().enumerate() {
            p[(i, k)] = y;
        }
    }
    p
}

#[derive(Clone, Debug)]
struct Augmentation {
    degree: usize,
    /// `B[k, xi]`: harmonic part of `chi_xi`.
    coefficients: DMatrix<f64>,
    side_residual: f64,
}

/// `chi_xi = sum_zeta A[zeta, xi] kappa(., zeta)` (plus a harmonic part for
/// conditionally positive definite kernels), with `chi_xi(zeta) = delta`.
#[derive(Clone, Debug)]
pub struct LagrangeBasis {
    point_set: PointSet,
    kernel: Kernel,
    coefficients: DMatrix<f64>,
    condition: f64,
    inverse_residual: f64,
    lagrange_residual: f64,
    augmentation: Option<Augmentation>,
}

/// Solves `K A = I` for a positive definite kernel.
pub fn solve_lagrange(kernel: &Kernel, set: &PointSet) -> Result<LagrangeBasis> {
    if !kernel.is_positive_definite() {
        return Err(Error::Domain(
            "kernel is only conditionally positive definite; use the augmented solve".into(),
        ));
    }
    let n = set.len();
    let k = collocation_matrix(kernel, set.points());
    let mut a = linalg::spd_inverse(&k).ok_or(Error::IllConditioned {
        condition: f64::INFINITY,
    })?;
    // One step of iterative refinement, A <- A + A (I - K A).
    let r = DMatrix::identity(n, n) - &k * &a;
    a += &a * r;

    let condition = linalg::symmetric_norm2(&k) * linalg::symmetric_norm2(&a);
    if !(condition <= MAX_CONDITION) {
        return Err(Error::IllConditioned { condition });
    }
    let inverse_residual = linalg::max_abs(&(&k * &a - DMatrix::identity(n, n)));
    let mut basis = LagrangeBasis {
        point_set: set.clone(),
        kernel: kernel.clone(),
        coefficients: a,
        condition,
        inverse_residual,
        lagrange_residual: f64::NAN,
        augmentation: None,
    };
    basis.verify()?;
    Ok(basis)
}

/// Solves the saddle system `[[K, P], [P^T, 0]]` for a surface spline with
/// side conditions against harmonics of degree `ceil(m - d/2)`.
pub fn solve_augmented_lagrange(kernel: &SurfaceSplineKernel, set: &PointSet) -> Result<LagrangeBasis> {
    let n = set.len();
    let degree = kernel.polynomial_degree();
    let nh = harmonic_count(degree);
    let p = harmonic_block(set.points(), degree);
    let rank = linalg::rank(&p, 1e-10);
    if rank < nh {
        return Err(Error::NotUnisolvent {
            degree,
            rank,
            required: nh,
        });
    }
    let wrapped = Kernel::Spline(*kernel);
    let k = collocation_matrix(&wrapped, set.points());
    let mut m = DMatrix::zeros(n + nh, n + nh);
    m.view_mut((0, 0), (n, n)).copy_from(&k);
    m.view_mut((0, n), (n, nh)).copy_from(&p);
    m.view_mut((n, 0), (nh, n)).copy_from(&p.transpose());
    let inv = linalg::inverse(&m)?;
    let condition = linalg::symmetric_norm2(&m) * linalg::symmetric_norm2(&inv);
    if !(condition <= MAX_CONDITION) {
        return Err(Error::IllConditioned { condition });
    }
    let a = inv.view((0, 0), (n, n)).into_owned();
    let b = inv.view((n, 0), (nh, n)).into_owned();
    let inverse_residual = linalg::max_abs(&(&k * &a + &p * &b - DMatrix::identity(n, n)));
    let side_residual = linalg::max_abs(&(p.transpose() * &a));
    if side_residual > LAGRANGE_TOLERANCE {
        return Err(Error::Numerical(format!(
            "side conditions violated by {side_residual:e}"
        )));
    }
    let mut basis = LagrangeBasis {
        point_set: set.clone(),
        kernel: wrapped,
        coefficients: a,
        condition,
        inverse_residual,
        lagrange_residual: f64::NAN,
        augmentation: Some(Augmentation {
            degree,
            coefficients: b,
            side_residual,
        }),
    };
    basis.verify()?;
    Ok(basis)
}

/// Header stored next to a persisted coefficient matrix.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoefficientHeader {
    pub kernel: serde_json::Value,
    pub point_set_digest: String,
    pub n: usize,
    pub condition: f64,
    pub inverse_residual: f64,
    pub lagrange_residual: f64,
    pub augmentation_degree: Option<usize>,
}

impl LagrangeBasis {
    fn verify(&mut self) -> Result<()> {
        let n = self.len();
        let values = self.eval_matrix(self.point_set.points());
        self.lagrange_residual = linalg::max_abs(&(values - DMatrix::identity(n, n)));
        if !(self.lagrange_residual <= LAGRANGE_TOLERANCE) {
            return Err(Error::Numerical(format!(
                "Lagrange property violated by {:e}",
                self.lagrange_residual
            )));
        }
        Ok(())
    }

    pub fn point_set(&self) -> &PointSet {
        &self.point_set
    }

    pub fn kernel(&self) -> &Kernel {
        &self.kernel
    }

    /// `A[zeta, xi]`.
    pub fn coefficient_matrix(&self) -> &DMatrix<f64> {
        &self.coefficients
    }

    /// Harmonic part `B[k, xi]` of an augmented basis.
    pub fn harmonic_coefficients(&self) -> Option<&DMatrix<f64>> {
        self.augmentation.as_ref().map(|a| &a.coefficients)
    }

    pub fn augmentation_degree(&self) -> Option<usize> {
        self.augmentation.as_ref().map(|a| a.degree)
    }

    /// `max |P^T A|` for augmented bases.
    pub fn side_residual(&self) -> Option<f64> {
        self.augmentation.as_ref().map(|a| a.side_residual)
    }

    /// 2-norm condition estimate of the (saddle) system matrix.
    pub fn collocation_condition(&self) -> f64 {
        self.condition
    }

    /// `max |K A - I|` (with the harmonic block for augmented bases).
    pub fn inverse_residual(&self) -> f64 {
        self.inverse_residual
    }

    /// `max |chi_xi(zeta) - delta|`, re-evaluated at the centers.
    pub fn lagrange_residual(&self) -> f64 {
        self.lagrange_residual
    }

    /// `chi_index(x)`.
    pub fn eval_lagrange(&self, index: usize, x: &SpherePoint) -> Result<f64> {
        if index >= self.len() {
            return Err(Error::IndexOutOfRange {
                index,
                len: self.len(),
            });
        }
        Ok(BasisFamily::eval(self, index, x))
    }

    /// `sum_xi a_xi chi_xi(x)`.
    pub fn eval_combination(&self, coeffs: &[f64], x: &SpherePoint) -> Result<f64> {
        let kc = self.kernel_coefficients(coeffs)?;
        let mut s: f64 = self
            .point_set
            .points()
            .iter()
            .zip(kc.iter())
            .map(|(z, c)| c * self.kernel.eval(x.dot(z)))
            .sum();
        if let Some(aug) = &self.augmentation {
            let hc = &aug.coefficients * DVector::from_column_slice(coeffs);
            s += real_harmonics(aug.degree, x)
                .iter()
                .zip(hc.iter())
                .map(|(y, c)| y * c)
                .sum::<f64>();
        }
        Ok(s)
    }

    /// Kernel-expansion coefficients `A a` of `sum_xi a_xi chi_xi`.
    pub fn kernel_coefficients(&self, coeffs: &[f64]) -> Result<Vec<f64>> {
        if coeffs.len() != self.len() {
            return Err(Error::Size {
                required: self.len(),
                found: coeffs.len(),
            });
        }
        Ok((&self.coefficients * DVector::from_column_slice(coeffs))
            .iter()
            .copied()
            .collect())
    }

    pub fn header(&self) -> CoefficientHeader {
        CoefficientHeader {
            kernel: self.kernel.describe(),
            point_set_digest: self.point_set.digest(),
            n: self.len(),
            condition: self.condition,
            inverse_residual: self.inverse_residual,
            lagrange_residual: self.lagrange_residual,
            augmentation_degree: self.augmentation_degree(),
        }
    }

    /// Writes `A` as headerless CSV rows and the header as JSON next to it
    /// (same stem, `.json`).
    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut w = csv::WriterBuilder::new().has_headers(false).from_path(path)?;
        for row in self.coefficients.row_iter() {
            w.serialize(row.iter().collect::<Vec<_>>())?;
        }
        w.flush()?;
        let header = serde_json::to_string_pretty(&self.header())?;
        std::fs::write(path.with_extension("json"), header)?;
        Ok(())
    }
}

/// Reads a matrix and header written by [`LagrangeBasis::save`].
pub fn load_coefficients(path: impl AsRef<Path>) -> Result<(DMatrix<f64>, CoefficientHeader)> {
    let path = path.as_ref();
    let header: CoefficientHeader =
        serde_json::from_str(&std::fs::read_to_string(path.with_extension("json"))?)?;
    let mut r = csv::ReaderBuilder::new().has_headers(false).from_path(path)?;
    let mut data = Vec::with_capacity(header.n * header.n);
    let mut rows = 0;
    for rec in r.deserialize::<Vec<f64>>() {
        let rec = rec?;
        if rec.len() != header.n {
            return Err(Error::Size {
                required: header.n,
                found: rec.len(),
            });
        }
        data.extend(rec);
        rows += 1;
    }
    if rows != header.n {
        return Err(Error::Size {
            required: header.n,
            found: rows,
        });
    }
    Ok((DMatrix::from_row_slice(rows, header.n, &data), header))
}

impl BasisFamily for LagrangeBasis {
    fn len(&self) -> usize {
        self.point_set.len()
    }

    fn centers(&self) -> &[SpherePoint] {
        self.point_set.points()
    }

    fn separation_radius(&self) -> f64 {
        self.point_set.separation_radius()
    }

    fn eval(&self, index: usize, x: &SpherePoint) -> f64 {
        let mut s: f64 = self
            .point_set
            .points()
            .iter()
            .zip(self.coefficients.column(index).iter())
            .map(|(z, a)| a * self.kernel.eval(x.dot(z)))
            .sum();
        if let Some(aug) = &self.augmentation {
            s += real_harmonics(aug.degree, x)
                .iter()
                .zip(aug.coefficients.column(index).iter())
                .map(|(y, b)| y * b)
                .sum::<f64>();
        }
        s
    }

    fn noise_floor(&self) -> f64 {
        // Evaluating chi_xi sums n terms of size |A| kappa(1).
        let kmax = self.kernel.eval(1.0).abs();
        let worst = self
            .coefficients
            .column_iter()
            .map(|c| c.iter().map(|v| v.abs()).sum::<f64>())
            .fold(0.0, f64::max);
        DEFAULT_NOISE_FLOOR.max(4.0 * f64::EPSILON * kmax * worst)
    }

    fn eval_columns(&self, points: &[SpherePoint], indices: &[usize]) -> DMatrix<f64> {
        let a = self.coefficients.select_columns(indices);
        let b = self
            .augmentation
            .as_ref()
            .map(|aug| (aug.degree, aug.coefficients.select_columns(indices)));
        self.eval_with(points, &a, b.as_ref().map(|(d, b)| (*d, b)))
    }

    fn eval_matrix(&self, points: &[SpherePoint]) -> DMatrix<f64> {
        let b = self.augmentation.as_ref().map(|aug| (aug.degree, &aug.coefficients));
        self.eval_with(points, &self.coefficients, b)
    }

    fn eval_combinations(&self, points: &[SpherePoint], coeffs: &DMatrix<f64>) -> DMatrix<f64> {
        let a = &self.coefficients * coeffs;
        let b = self
            .augmentation
            .as_ref()
            .map(|aug| (aug.degree, &aug.coefficients * coeffs));
        self.eval_with(points, &a, b.as_ref().map(|(d, b)| (*d, b)))
    }

    fn adjoint_combinations(&self, points: &[SpherePoint], values: &DMatrix<f64>) -> DMatrix<f64> {
        // A^T (K^T values) + B^T (P^T values), summed block by block.
        let m = points.len();
        let degree = self.augmentation.as_ref().map(|aug| aug.degree);
        let parts = exec::map_range(m.div_ceil(EVAL_BLOCK), |k| {
            let start = k * EVAL_BLOCK;
            let rows = &points[start..((k + 1) * EVAL_BLOCK).min(m)];
            let v = values.rows(start, rows.len());
            let kt = kernel_block(&self.kernel, rows, self.point_set.points()).transpose() * v;
            let pt = degree.map(|d| harmonic_block(rows, d).transpose() * v);
            (kt, pt)
        });
        let mut kt = DMatrix::zeros(self.len(), values.ncols());
        let mut pt = degree.map(|d| DMatrix::zeros(harmonic_count(d), values.ncols()));
        for (k, p) in parts {
            kt += k;
            if let (Some(acc), Some(p)) = (pt.as_mut(), p) {
                *acc += p;
            }
        }
        let mut out = self.coefficients.transpose() * kt;
        if let (Some(aug), Some(pt)) = (&self.augmentation, pt) {
            out += aug.coefficients.transpose() * pt;
        }
        out
    }
}

impl LagrangeBasis {
    fn eval_with(
        &self,
        points: &[SpherePoint],
        a: &DMatrix<f64>,
        b: Option<(usize, &DMatrix<f64>)>,
    ) -> DMatrix<f64> {
        let m = points.len();
        let blocks = exec::map_range(m.div_ceil(EVAL_BLOCK), |k| {
            let rows = &points[k * EVAL_BLOCK..((k + 1) * EVAL_BLOCK).min(m)];
            let kx = kernel_block(&self.kernel, rows, self.point_set.points());
            let mut v = kx * a;
            if let Some((degree, b)) = b {
                v += harmonic_block(rows, degree) * b;
            }
            v
        });
        let mut out = DMatrix::zeros(m, a.ncols());
        for (k, block) in blocks.into_iter().enumerate() {
            out.rows_mut(k * EVAL_BLOCK, block.nrows()).copy_from(&block);
        }
        out
    }
}

/// `v_{p,xi} = q^(-2/p) v_xi`.
pub struct RenormalizedBasis<'a> {
    base: &'a dyn BasisFamily,
    p: f64,
    scale: f64,
}

impl<'a> RenormalizedBasis<'a> {
    pub fn new(base: &'a dyn BasisFamily, p: f64) -> Result<Self> {
        if !(p >= 1.0) {
            return Err(Error::Domain(format!("p = {p} is below 1")));
        }
        let scale = base.separation_radius().powf(-2.0 / p);
        Ok(Self { base, p, scale })
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn base(&self) -> &dyn BasisFamily {
        self.base
    }
}

impl BasisFamily for RenormalizedBasis<'_> {
    fn len(&self) -> usize {
        self.base.len()
    }

    fn centers(&self) -> &[SpherePoint] {
        self.base.centers()
    }

    fn separation_radius(&self) -> f64 {
        self.base.separation_radius()
    }

    fn eval(&self, index: usize, x: &SpherePoint) -> f64 {
        self.scale * self.base.eval(index, x)
    }

    fn noise_floor(&self) -> f64 {
        self.scale * self.base.noise_floor()
    }

    fn eval_columns(&self, points: &[SpherePoint], indices: &[usize]) -> DMatrix<f64> {
        self.base.eval_columns(points, indices) * self.scale
    }

    fn adjoint_combinations(&self, points: &[SpherePoint], values: &DMatrix<f64>) -> DMatrix<f64> {
        self.base.adjoint_combinations(points, values) * self.scale
    }

    fn eval_matrix(&self, points: &[SpherePoint]) -> DMatrix<f64> {
        self.base.eval_matrix(points) * self.scale
    }

    fn eval_combinations(&self, points: &[SpherePoint], coeffs: &DMatrix<f64>) -> DMatrix<f64> {
        self.base.eval_combinations(points, coeffs) * self.scale
    }
}

/// Number of quadrature nodes handled per block in the analysis map and
/// Gram assembly.
pub const QUADRATURE_BLOCK: usize = 2048;

/// Visits consecutive node blocks with the basis evaluated on them.
pub fn for_each_quadrature_block<F>(basis: &dyn BasisFamily, rule: &QuadratureRule, mut f: F)
where
    F: FnMut(std::ops::Range<usize>, &DMatrix<f64>),
{
    let nodes = rule.nodes();
    let mut start = 0;
    while start < nodes.len() {
        let end = (start + QUADRATURE_BLOCK).min(nodes.len());
        let phi = basis.eval_matrix(&nodes[start..end]);
        f(start..end, &phi);
        start = end;
    }
}

/// `(<f_t, v_xi>)_{xi, t}` for the columns of `values`, sampled at the
/// rule's nodes.
pub fn analysis_samples(basis: &dyn BasisFamily, values: &DMatrix<f64>, rule: &QuadratureRule) -> Result<DMatrix<f64>> {
    if values.nrows() != rule.len() {
        return Err(Error::Size {
            required: rule.len(),
            found: values.nrows(),
        });
    }
    if let Some(v) = values.iter().find(|v| !v.is_finite()) {
        return Err(Error::Numerical(format!("non-finite sample {v}")));
    }
    let (nodes, w) = (rule.nodes(), rule.weights());
    let mut out = DMatrix::zeros(basis.len(), values.ncols());
    let mut start = 0;
    while start < nodes.len() {
        let end = (start + QUADRATURE_BLOCK).min(nodes.len());
        let wf = DMatrix::from_fn(end - start, values.ncols(), |i, t| w[start + i] * values[(start + i, t)]);
        out += basis.adjoint_combinations(&nodes[start..end], &wf);
        start = end;
    }
    Ok(out)
}

/// `(<f, v_xi>)_xi` for `f` sampled at the rule's nodes.
pub fn analysis_map_samples(basis: &dyn BasisFamily, values: &[f64], rule: &QuadratureRule) -> Result<Vec<f64>> {
    let column = DMatrix::from_column_slice(values.len(), 1, values);
    Ok(analysis_samples(basis, &column, rule)?.iter().copied().collect())
}

/// `(<f, v_xi>)_xi` by quadrature.
pub fn analysis_map<F>(basis: &dyn BasisFamily, f: F, rule: &QuadratureRule) -> Result<Vec<f64>>
where
    F: Fn(&SpherePoint) -> f64 + Sync + Send,
{
    analysis_map_samples(basis, &rule.sample(f)?, rule)
}
