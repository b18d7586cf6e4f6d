//! The continuous least-squares projector onto a kernel space, its
//! `L_inf` operator norm, and convergence experiments.

use std::fmt;
use std::io::Write;
use std::sync::Arc;

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec;
use crate::geometry::{generate_fibonacci, nearest_centers, MeshStats, PointSet, SpherePoint};
use crate::gram::assemble_gram;
use crate::kernel::{legendre_all, Kernel};
use crate::lagrange::{
    analysis_samples, solve_lagrange, BasisFamily, KernelTranslates, RenormalizedBasis, QUADRATURE_BLOCK,
};
use crate::linalg;
use crate::pvalue;
use crate::quadrature::{gauss_legendre, QuadratureRule};
use crate::stability::{lebesgue_constant, sup_grid, DEFAULT_SUP_DENSITY};

/// `max_xi |<f - Tf, v_xi>|` must stay below this times `||f||_2`.
pub const ORTHOGONALITY_TOLERANCE: f64 = 1e-8;

/// Errors at or below this are roundoff; no order is fitted through them.
pub const SATURATION_FLOOR: f64 = 1e-10;

/// Dyadic terms in the rough targets (frequencies up to `2^13`).
pub const ROUGH_TERMS: usize = 14;

/// Axis of the zonal test functions, `(1, 2, 3) / sqrt(14)`.
pub fn test_axis() -> SpherePoint {
    SpherePoint::new(1.0, 2.0, 3.0).expect("nonzero axis")
}

/// `T f` in a basis: the Gram system `G c = V* f`.
pub struct L2Projector<'a> {
    basis: &'a dyn BasisFamily,
    rule: &'a QuadratureRule,
    gram: DMatrix<f64>,
    cholesky: Cholesky<f64, Dyn>,
    tolerance: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Projection {
    pub coefficients: DVector<f64>,
    /// `max_xi |<f - Tf, v_xi>|`.
    pub orthogonality: f64,
    /// `||f||_2` by quadrature.
    pub target_norm: f64,
}

impl<'a> L2Projector<'a> {
    /// `gram` must be the Gram matrix of `basis` under `rule`.
    pub fn new(basis: &'a dyn BasisFamily, gram: &DMatrix<f64>, rule: &'a QuadratureRule) -> Result<Self> {
        if gram.nrows() != basis.len() || gram.ncols() != basis.len() {
            return Err(Error::Size {
                required: basis.len(),
                found: gram.nrows(),
            });
        }
        let cholesky = gram
            .clone()
            .cholesky()
            .ok_or_else(|| Error::Numerical("Gram matrix is not positive definite".into()))?;
        Ok(Self {
            basis,
            rule,
            gram: gram.clone(),
            cholesky,
            tolerance: ORTHOGONALITY_TOLERANCE,
        })
    }

    /// Assembles the Gram matrix first.
    pub fn assemble(basis: &'a dyn BasisFamily, rule: &'a QuadratureRule) -> Result<Self> {
        let g = assemble_gram(basis, rule)?;
        Self::new(basis, &g.entries, rule)
    }

    /// Relative tolerance of the orthogonality check.
    pub fn with_tolerance(mut self, tolerance: f64) -> Self {
        self.tolerance = tolerance;
        self
    }

    pub fn basis(&self) -> &dyn BasisFamily {
        self.basis
    }

    pub fn rule(&self) -> &QuadratureRule {
        self.rule
    }

    pub fn gram(&self) -> &DMatrix<f64> {
        &self.gram
    }

    /// Dense `G^-1`.
    pub fn gram_inverse(&self) -> Result<DMatrix<f64>> {
        linalg::spd_inverse(&self.gram).ok_or_else(|| Error::Numerical("Gram matrix is not positive definite".into()))
    }

    /// Projects each column of `values` (samples at the rule's nodes).
    pub fn project_samples(&self, values: &DMatrix<f64>) -> Result<Vec<Projection>> {
        let rhs = analysis_samples(self.basis, values, self.rule)?;
        let coeffs = self.cholesky.solve(&rhs);
        let residual = &rhs - &self.gram * &coeffs;
        (0..values.ncols())
            .map(|t| {
                let f: Vec<f64> = values.column(t).iter().copied().collect();
                let target_norm = self.rule.lp_norm_samples(&f, 2.0)?;
                let orthogonality = residual.column(t).amax();
                if !(orthogonality <= self.tolerance * target_norm) {
                    return Err(Error::Numerical(format!(
                        "projection residual {orthogonality:e} is not orthogonal to the basis (||f||_2 = {target_norm:e})"
                    )));
                }
                Ok(Projection {
                    coefficients: coeffs.column(t).into_owned(),
                    orthogonality,
                    target_norm,
                })
            })
            .collect()
    }

    pub fn project<F>(&self, f: F) -> Result<Projection>
    where
        F: Fn(&SpherePoint) -> f64 + Sync + Send,
    {
        let values = self.rule.sample(f)?;
        let column = DMatrix::from_column_slice(values.len(), 1, &values);
        Ok(self.project_samples(&column)?.remove(0))
    }

    /// `T f` at `points`.
    pub fn eval(&self, projection: &Projection, points: &[SpherePoint]) -> Vec<f64> {
        let c = DMatrix::from_column_slice(projection.coefficients.len(), 1, projection.coefficients.as_slice());
        self.basis.eval_combinations(points, &c).iter().copied().collect()
    }
}

/// `rows[k][t] = ||f_t - sum_j coeffs[j, t] v_j||_{ps[k]}`, with `f_t`
/// given by its samples on the rule's nodes and on the grid.
pub fn difference_norms(
    basis: &dyn BasisFamily,
    coeffs: &DMatrix<f64>,
    rule: &QuadratureRule,
    rule_values: &DMatrix<f64>,
    grid: &[SpherePoint],
    grid_values: &DMatrix<f64>,
    ps: &[f64],
) -> Result<Vec<Vec<f64>>> {
    let k = coeffs.ncols();
    if rule_values.nrows() != rule.len() || grid_values.nrows() != grid.len() {
        return Err(Error::Size {
            required: rule.len(),
            found: rule_values.nrows(),
        });
    }
    let mut sums = vec![vec![0.0; k]; ps.len()];
    let (nodes, w) = (rule.nodes(), rule.weights());
    if ps.iter().any(|p| p.is_finite()) {
        let mut start = 0;
        while start < nodes.len() {
            let end = (start + QUADRATURE_BLOCK).min(nodes.len());
            let s = basis.eval_combinations(&nodes[start..end], coeffs);
            for (row, &p) in sums.iter_mut().zip(ps) {
                if p.is_infinite() {
                    continue;
                }
                for (t, acc) in row.iter_mut().enumerate() {
                    *acc += (start..end)
                        .map(|i| w[i] * (rule_values[(i, t)] - s[(i - start, t)]).abs().powf(p))
                        .sum::<f64>();
                }
            }
            start = end;
        }
    }
    let mut sup = vec![0.0f64; k];
    if ps.iter().any(|p| p.is_infinite()) {
        let mut start = 0;
        while start < grid.len() {
            let end = (start + QUADRATURE_BLOCK).min(grid.len());
            let s = basis.eval_combinations(&grid[start..end], coeffs);
            for (t, m) in sup.iter_mut().enumerate() {
                *m = (start..end).fold(*m, |m, i| m.max((grid_values[(i, t)] - s[(i - start, t)]).abs()));
            }
            start = end;
        }
    }
    let out: Vec<Vec<f64>> = ps
        .iter()
        .zip(sums)
        .map(|(&p, row)| {
            if p.is_infinite() {
                sup.clone()
            } else {
                row.into_iter().map(|v| v.powf(1.0 / p)).collect()
            }
        })
        .collect();
    if out.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::Numerical("non-finite error norm".into()));
    }
    Ok(out)
}

/// `F[i, t] = targets[t](points[i])`.
pub fn sample_targets(targets: &[TestFunction], points: &[SpherePoint]) -> DMatrix<f64> {
    let rows = exec::map_range(points.len(), |i| targets.iter().map(|t| t.eval(&points[i])).collect::<Vec<_>>());
    DMatrix::from_fn(points.len(), targets.len(), |i, t| rows[i][t])
}

fn sample_matrix(target: &TestFunction, points: &[SpherePoint]) -> DMatrix<f64> {
    sample_targets(std::slice::from_ref(target), points)
}

/// `||f - T f||_p`: quadrature for finite `p`, grid maximum for `inf`.
pub fn best_error(projector: &L2Projector, target: &TestFunction, p: f64, grid: &[SpherePoint]) -> Result<f64> {
    if !(p >= 1.0) {
        return Err(Error::Domain(format!("p = {p} is below 1")));
    }
    let rule_values = sample_matrix(target, projector.rule.nodes());
    let proj = projector.project_samples(&rule_values)?.remove(0);
    let coeffs = DMatrix::from_column_slice(proj.coefficients.len(), 1, proj.coefficients.as_slice());
    let norms = difference_norms(
        projector.basis,
        &coeffs,
        projector.rule,
        &rule_values,
        grid,
        &sample_matrix(target, grid),
        &[p],
    )?;
    Ok(norms[0][0])
}

/// `||f - I f||_p` for the interpolant `I f = sum f(xi) chi_xi` of a
/// cardinal basis.
pub fn interpolation_error(
    cardinal: &dyn BasisFamily,
    target: &TestFunction,
    p: f64,
    rule: &QuadratureRule,
    grid: &[SpherePoint],
) -> Result<f64> {
    let coeffs = sample_matrix(target, cardinal.centers());
    let norms = difference_norms(
        cardinal,
        &coeffs,
        rule,
        &sample_matrix(target, rule.nodes()),
        grid,
        &sample_matrix(target, grid),
        &[p],
    )?;
    Ok(norms[0][0])
}

/// `T f` computed with the raw kernel translates instead of a Lagrange
/// basis, evaluated at `points`.
pub fn dictionary_projection(
    kernel: &Kernel,
    set: &PointSet,
    target: &TestFunction,
    rule: &QuadratureRule,
    points: &[SpherePoint],
) -> Result<Vec<f64>> {
    let dict = KernelTranslates::new(kernel.clone(), set);
    // The translate Gram matrix is squared-ill-conditioned; the orthogonality
    // residual grows with it.
    let projector = L2Projector::assemble(&dict, rule)?.with_tolerance(1e-6);
    let proj = projector.project(|x| target.eval(x))?;
    Ok(projector.eval(&proj, points))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OperatorNorms {
    /// `max_x sum_xi |v_xi(x)|` over the grid.
    pub v_inf_norm: f64,
    /// `max_xi int |v_xi|`.
    pub vstar_inf_norm: f64,
    pub ginv_inf_norm: f64,
    /// `||V||_inf ||V*||_inf ||G^-1||_inf`.
    pub product_bound: f64,
    /// `||V||_inf ||V*||_inf`, comparable with `c2^2`.
    pub synthesis_analysis_product: f64,
    /// `max_x int |K_T(x, y)| dy` over the probe points; `None` when not
    /// computed.
    pub direct_tinf_estimate: Option<f64>,
    pub probe_points: usize,
}

/// One pass over the rule: column integrals `int |v_xi|` and, given `c`
/// (`n x m`), `int |sum_xi v_xi(y) c[xi, x]| dy` for each column `x`.
fn scan_rule(basis: &dyn BasisFamily, rule: &QuadratureRule, c: Option<&DMatrix<f64>>) -> (Vec<f64>, Vec<f64>) {
    let (nodes, w) = (rule.nodes(), rule.weights());
    let mut columns = vec![0.0; basis.len()];
    let mut kernel = vec![0.0; c.map_or(0, |c| c.ncols())];
    let mut start = 0;
    while start < nodes.len() {
        let end = (start + QUADRATURE_BLOCK).min(nodes.len());
        let phi = basis.eval_matrix(&nodes[start..end]);
        for (j, acc) in columns.iter_mut().enumerate() {
            *acc += phi.column(j).iter().zip(&w[start..end]).map(|(v, w)| w * v.abs()).sum::<f64>();
        }
        if let Some(c) = c {
            let k = &phi * c;
            for (x, acc) in kernel.iter_mut().enumerate() {
                *acc += k.column(x).iter().zip(&w[start..end]).map(|(v, w)| w * v.abs()).sum::<f64>();
            }
        }
        start = end;
    }
    (columns, kernel)
}

/// The factors of `||V||_inf ||V*||_inf ||G^-1||_inf` for the p = 2 basis.
pub fn operator_norm_components(
    basis: &dyn BasisFamily,
    rule: &QuadratureRule,
    grid: &[SpherePoint],
    ginv_inf_norm: f64,
) -> OperatorNorms {
    let v_inf_norm = lebesgue_constant(basis, grid);
    let (columns, _) = scan_rule(basis, rule, None);
    let vstar_inf_norm = columns.into_iter().fold(0.0, f64::max);
    OperatorNorms {
        v_inf_norm,
        vstar_inf_norm,
        ginv_inf_norm,
        product_bound: v_inf_norm * vstar_inf_norm * ginv_inf_norm,
        synthesis_analysis_product: v_inf_norm * vstar_inf_norm,
        direct_tinf_estimate: None,
        probe_points: 0,
    }
}

/// `max_x int |K_T(x, y)| dy` over `probe` with
/// `K_T(x, y) = sum v_xi(x) G^-1[xi, zeta] v_zeta(y)`.
pub fn projector_inf_norm_direct(
    basis: &dyn BasisFamily,
    ginv: &DMatrix<f64>,
    rule: &QuadratureRule,
    probe: &[SpherePoint],
) -> f64 {
    let c = ginv * basis.eval_matrix(probe).transpose();
    let (_, kernel) = scan_rule(basis, rule, Some(&c));
    kernel.into_iter().fold(0.0, f64::max)
}

/// Both the factored bound and the direct estimate with one pass over the
/// rule.
pub fn operator_norms(
    basis: &dyn BasisFamily,
    ginv: &DMatrix<f64>,
    rule: &QuadratureRule,
    grid: &[SpherePoint],
    probe: &[SpherePoint],
) -> OperatorNorms {
    let v_inf_norm = lebesgue_constant(basis, grid);
    let c = ginv * basis.eval_matrix(probe).transpose();
    let (columns, kernel) = scan_rule(basis, rule, Some(&c));
    let vstar_inf_norm = columns.into_iter().fold(0.0, f64::max);
    let ginv_inf_norm = linalg::inf_norm(ginv);
    OperatorNorms {
        v_inf_norm,
        vstar_inf_norm,
        ginv_inf_norm,
        product_bound: v_inf_norm * vstar_inf_norm * ginv_inf_norm,
        synthesis_analysis_product: v_inf_norm * vstar_inf_norm,
        direct_tinf_estimate: Some(kernel.into_iter().fold(0.0, f64::max)),
        probe_points: probe.len(),
    }
}

/// The centers plus the `holes` grid points farthest from any center: the
/// two places where `x -> int |K_T(x, y)| dy` peaks.
pub fn probe_points(centers: &[SpherePoint], grid: &[SpherePoint], holes: usize) -> Vec<SpherePoint> {
    let mut far: Vec<(usize, f64)> = nearest_centers(centers, grid)
        .into_iter()
        .enumerate()
        .map(|(i, (_, d))| (i, d))
        .collect();
    far.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    let mut out = centers.to_vec();
    out.extend(far.iter().take(holes).map(|(i, _)| grid[*i]));
    out
}

/// Which target a [`TestFunction`] is.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TestKind {
    /// `exp(a . x)`, analytic.
    Smooth,
    /// `sum_k 2^(-k s) T_(2^k)(a . x)`: best approximation error `~ L^-s`
    /// from degree `L` in every `L_p`.
    Rough { s: f64 },
    /// A random element of the kernel space itself.
    InSpan,
}

impl fmt::Display for TestKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TestKind::Smooth => write!(f, "smooth"),
            TestKind::Rough { s } => write!(f, "rough_s{s}"),
            TestKind::InSpan => write!(f, "in_span"),
        }
    }
}

type Eval = Arc<dyn Fn(&SpherePoint) -> f64 + Send + Sync>;
type Profile = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// A target function with its declared smoothness.
#[derive(Clone)]
pub struct TestFunction {
    kind: TestKind,
    eval: Eval,
    /// `g` with `f(x) = g(a . x)` for the zonal targets.
    profile: Option<Profile>,
}

impl fmt::Debug for TestFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("TestFunction").field("kind", &self.kind).finish()
    }
}

fn chebyshev_t(l: usize, t: f64) -> f64 {
    (l as f64 * t.clamp(-1.0, 1.0).acos()).cos()
}

impl TestFunction {
    fn zonal(kind: TestKind, profile: Profile) -> Self {
        let axis = test_axis();
        let g = profile.clone();
        Self {
            kind,
            eval: Arc::new(move |x| g(x.dot(&axis))),
            profile: Some(profile),
        }
    }

    pub fn smooth() -> Self {
        Self::zonal(TestKind::Smooth, Arc::new(f64::exp))
    }

    pub fn rough(s: f64) -> Result<Self> {
        if !(s > 0.0 && s < 4.0) {
            return Err(Error::Domain(format!("rough smoothness {s} not in (0, 4)")));
        }
        let weights: Vec<f64> = (0..ROUGH_TERMS).map(|k| 2f64.powf(-(k as f64) * s)).collect();
        Ok(Self::zonal(
            TestKind::Rough { s },
            Arc::new(move |t| {
                weights
                    .iter()
                    .enumerate()
                    .map(|(k, w)| w * chebyshev_t(1 << k, t))
                    .sum()
            }),
        ))
    }

    /// `sum a_xi kappa(x . xi)` with standard normal `a / sqrt(n)`.
    pub fn in_span(kernel: &Kernel, centers: &[SpherePoint], seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let scale = 1.0 / (centers.len().max(1) as f64).sqrt();
        let coeffs: Vec<f64> = (0..centers.len())
            .map(|_| scale * rng.sample::<f64, _>(StandardNormal))
            .collect();
        let (kernel, centers) = (kernel.clone(), centers.to_vec());
        Self {
            kind: TestKind::InSpan,
            eval: Arc::new(move |x| centers.iter().zip(&coeffs).map(|(z, a)| a * kernel.eval(x.dot(z))).sum()),
            profile: None,
        }
    }

    pub fn id(&self) -> String {
        self.kind.to_string()
    }

    pub fn kind(&self) -> TestKind {
        self.kind
    }

    /// Declared smoothness: `s` for rough targets, infinite otherwise.
    pub fn smoothness(&self) -> f64 {
        match self.kind {
            TestKind::Rough { s } => s,
            _ => f64::INFINITY,
        }
    }

    pub fn eval(&self, x: &SpherePoint) -> f64 {
        (self.eval)(x)
    }

    /// `g(t)` for zonal targets `f(x) = g(a . x)`.
    pub fn profile(&self, t: f64) -> Option<f64> {
        self.profile.as_ref().map(|g| g(t))
    }

    /// Legendre coefficients `(2l + 1)/2 int g P_l` of a zonal target.
    pub fn legendre_coefficients(&self, max_degree: usize) -> Option<Vec<f64>> {
        let g = self.profile.as_ref()?;
        let (nodes, weights) = gauss_legendre(max_degree + 64);
        let mut out = vec![0.0; max_degree + 1];
        for (t, w) in nodes.iter().zip(&weights) {
            let gt = g(*t);
            for (l, p) in legendre_all(max_degree, *t).into_iter().enumerate() {
                out[l] += w * gt * p;
            }
        }
        for (l, c) in out.iter_mut().enumerate() {
            *c *= (2 * l + 1) as f64 / 2.0;
        }
        Some(out)
    }
}

/// Builds a target; `in_span` needs the kernel and centers.
pub fn make_test_function(kind: TestKind, span: Option<(&Kernel, &[SpherePoint])>, seed: u64) -> Result<TestFunction> {
    match kind {
        TestKind::Smooth => Ok(TestFunction::smooth()),
        TestKind::Rough { s } => TestFunction::rough(s),
        TestKind::InSpan => {
            let (kernel, centers) =
                span.ok_or_else(|| Error::Domain("an in-span target needs a kernel and centers".into()))?;
            Ok(TestFunction::in_span(kernel, centers, seed))
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ErrorRow {
    pub function: String,
    #[serde(with = "pvalue")]
    pub p: f64,
    /// `||f - T f||_p`.
    pub error: f64,
    /// `||f - I f||_p`.
    pub interpolation_error: f64,
    pub orthogonality: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProjectorReport {
    pub n: usize,
    pub mesh: MeshStats,
    pub norms: OperatorNorms,
    pub errors: Vec<ErrorRow>,
}

impl ProjectorReport {
    /// Projects every target with the p = 2 renormalization of `cardinal`
    /// and measures the operator norm. `gram` belongs to that
    /// renormalized basis; the direct estimate probes the centers and
    /// `holes` grid points.
    #[allow(clippy::too_many_arguments)]
    pub fn measure(
        cardinal: &dyn BasisFamily,
        set: &PointSet,
        rule: &QuadratureRule,
        gram: &DMatrix<f64>,
        grid: &[SpherePoint],
        targets: &[TestFunction],
        ps: &[f64],
        holes: usize,
    ) -> Result<Self> {
        let basis = RenormalizedBasis::new(cardinal, 2.0)?;
        let projector = L2Projector::new(&basis, gram, rule)?;
        let k = targets.len();
        let rule_values = sample_targets(targets, rule.nodes());
        let grid_values = sample_targets(targets, grid);
        let projections = projector.project_samples(&rule_values)?;

        // Projections and interpolants side by side, both in the p = 2 basis.
        let mut coeffs = DMatrix::zeros(basis.len(), 2 * k);
        for (t, proj) in projections.iter().enumerate() {
            coeffs.set_column(t, &proj.coefficients);
            for (j, x) in cardinal.centers().iter().enumerate() {
                coeffs[(j, k + t)] = targets[t].eval(x) / basis.scale();
            }
        }
        let doubled = |m: &DMatrix<f64>| {
            let mut out = DMatrix::zeros(m.nrows(), 2 * k);
            out.columns_mut(0, k).copy_from(m);
            out.columns_mut(k, k).copy_from(m);
            out
        };
        let norms = difference_norms(
            &basis,
            &coeffs,
            rule,
            &doubled(&rule_values),
            grid,
            &doubled(&grid_values),
            ps,
        )?;
        let mut errors = Vec::with_capacity(k * ps.len());
        for (t, target) in targets.iter().enumerate() {
            for (row, &p) in norms.iter().zip(ps) {
                errors.push(ErrorRow {
                    function: target.id(),
                    p,
                    error: row[t],
                    interpolation_error: row[k + t],
                    orthogonality: projections[t].orthogonality,
                });
            }
        }

        let ginv = projector.gram_inverse()?;
        let probe = probe_points(set.points(), grid, holes);
        Ok(Self {
            n: set.len(),
            mesh: set.stats(),
            norms: operator_norms(&basis, &ginv, rule, grid, &probe),
            errors,
        })
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// Observed order `log(e0 / e1) / log(h0 / h1)`; `None` when either error
/// is at the roundoff floor.
pub fn observed_order(h0: f64, e0: f64, h1: f64, e1: f64) -> Option<f64> {
    (e0 > SATURATION_FLOOR && e1 > SATURATION_FLOOR && h0 != h1).then(|| (e0 / e1).ln() / (h0 / h1).ln())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceStudy {
    pub function: String,
    #[serde(with = "pvalue")]
    pub p: f64,
    pub h: Vec<f64>,
    pub errors: Vec<f64>,
    /// Least-squares slope of `log error` against `log h` over the levels
    /// above the floor.
    pub order: Option<f64>,
    /// Order between each level and the previous one.
    pub consecutive: Vec<Option<f64>>,
    /// The finest error is at the roundoff floor.
    pub saturated: bool,
}

/// Fits orders to errors at mesh norms `h` (coarse to fine).
pub fn fit_orders(function: &str, p: f64, h: &[f64], errors: &[f64]) -> Result<ConvergenceStudy> {
    if h.len() != errors.len() || h.is_empty() {
        return Err(Error::Size {
            required: h.len(),
            found: errors.len(),
        });
    }
    if errors.iter().any(|e| !(*e >= 0.0)) {
        return Err(Error::Numerical("negative or non-finite error".into()));
    }
    let consecutive = std::iter::once(None)
        .chain((1..h.len()).map(|i| observed_order(h[i - 1], errors[i - 1], h[i], errors[i])))
        .collect();
    let pts: Vec<(f64, f64)> = h
        .iter()
        .zip(errors)
        .filter(|(_, e)| **e > SATURATION_FLOOR)
        .map(|(h, e)| (h.ln(), e.ln()))
        .collect();
    let order = (pts.len() >= 2).then(|| {
        let m = pts.len() as f64;
        let (mx, my) = pts.iter().fold((0.0, 0.0), |(a, b), (x, y)| (a + x / m, b + y / m));
        let sxy: f64 = pts.iter().map(|(x, y)| (x - mx) * (y - my)).sum();
        let sxx: f64 = pts.iter().map(|(x, _)| (x - mx) * (x - mx)).sum();
        sxy / sxx
    });
    Ok(ConvergenceStudy {
        function: function.to_string(),
        p,
        h: h.to_vec(),
        errors: errors.to_vec(),
        order: order.filter(|o| o.is_finite()),
        consecutive,
        saturated: errors[errors.len() - 1] <= SATURATION_FLOOR,
    })
}

/// One study per (function, p) across reports ordered coarse to fine.
pub fn convergence_studies(reports: &[ProjectorReport]) -> Result<Vec<ConvergenceStudy>> {
    let Some(first) = reports.first() else {
        return Ok(Vec::new());
    };
    first
        .errors
        .iter()
        .map(|row| {
            let (h, e): (Vec<f64>, Vec<f64>) = reports
                .iter()
                .filter_map(|r| {
                    r.errors
                        .iter()
                        .find(|x| x.function == row.function && x.p == row.p)
                        .map(|x| (r.mesh.h, x.error))
                })
                .unzip();
            fit_orders(&row.function, row.p, &h, &e)
        })
        .collect()
}

/// Runs the projection at each Fibonacci level and fits orders for every
/// `p`. An in-span target is drawn from the finest level.
pub fn convergence_study(kernel: &Kernel, kind: TestKind, levels: &[usize], ps: &[f64], seed: u64) -> Result<Vec<ConvergenceStudy>> {
    if levels.is_empty() || levels.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Domain("levels must be nonempty and strictly increasing".into()));
    }
    let finest = generate_fibonacci(levels[levels.len() - 1])?;
    let target = make_test_function(kind, Some((kernel, finest.points())), seed)?;
    let mut reports = Vec::with_capacity(levels.len());
    for &n in levels {
        let set = generate_fibonacci(n)?;
        let basis = solve_lagrange(kernel, &set)?;
        let rule = QuadratureRule::for_mesh_norm(set.mesh_norm())?;
        let gram = assemble_gram(&RenormalizedBasis::new(&basis, 2.0)?, &rule)?;
        let grid = sup_grid(&set, DEFAULT_SUP_DENSITY);
        let targets = std::slice::from_ref(&target);
        reports.push(ProjectorReport::measure(&basis, &set, &rule, &gram.entries, &grid, targets, ps, 0)?);
    }
    convergence_studies(&reports)
}

pub const PROJECTOR_CSV_HEADER: [&str; 6] = ["n", "h", "p", "function", "error", "fitted_order"];
pub const OPNORM_CSV_HEADER: [&str; 6] = ["n", "Vinf", "Vstarinf", "Ginv", "product", "direct"];

fn opt(v: Option<f64>) -> String {
    v.map(|v| v.to_string()).unwrap_or_default()
}

/// `projector.csv`; `fitted_order` is the order against the previous
/// report, blank on the first.
pub fn write_projector_csv<W: Write>(out: W, reports: &[ProjectorReport]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(PROJECTOR_CSV_HEADER)?;
    for (k, r) in reports.iter().enumerate() {
        for row in &r.errors {
            let prev = k.checked_sub(1).and_then(|j| {
                let prev = &reports[j];
                prev.errors
                    .iter()
                    .find(|x| x.function == row.function && x.p == row.p)
                    .map(|x| (prev.mesh.h, x.error))
            });
            let order = prev.and_then(|(h0, e0)| observed_order(h0, e0, r.mesh.h, row.error));
            w.write_record([
                r.n.to_string(),
                r.mesh.h.to_string(),
                pvalue::format_p(row.p),
                row.function.clone(),
                row.error.to_string(),
                opt(order),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn write_opnorm_csv<W: Write>(out: W, reports: &[ProjectorReport]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(OPNORM_CSV_HEADER)?;
    for r in reports {
        let m = &r.norms;
        w.write_record([
            r.n.to_string(),
            m.v_inf_norm.to_string(),
            m.vstar_inf_norm.to_string(),
            m.ginv_inf_norm.to_string(),
            m.product_bound.to_string(),
            opt(m.direct_tinf_estimate),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn orders_from_exact_power_law() {
        let h = [0.4, 0.2, 0.1];
        let e: Vec<f64> = h.iter().map(|h: &f64| 3.0 * h.powi(4)).collect();
        let s = fit_orders("x", 2.0, &h, &e).unwrap();
        assert!((s.order.unwrap() - 4.0).abs() < 1e-12);
        assert_eq!(s.consecutive[0], None);
        assert!((s.consecutive[2].unwrap() - 4.0).abs() < 1e-12);
        assert!(!s.saturated);
    }

    #[test]
    fn saturated_errors_have_no_order() {
        let s = fit_orders("x", 2.0, &[0.2, 0.1], &[1e-14, 1e-15]).unwrap();
        assert!(s.saturated);
        assert_eq!(s.order, None);
        assert_eq!(s.consecutive, vec![None, None]);
    }

    #[test]
    fn test_kind_ids() {
        assert_eq!(TestKind::Rough { s: 2.0 }.to_string(), "rough_s2");
        assert_eq!(TestKind::Rough { s: 1.5 }.to_string(), "rough_s1.5");
        let k: TestKind = serde_json::from_str(r#"{"kind":"rough","s":2.0}"#).unwrap();
        assert_eq!(k, TestKind::Rough { s: 2.0 });
        assert!(TestFunction::rough(4.0).is_err());
        assert!(TestFunction::rough(0.0).is_err());
        assert!(make_test_function(TestKind::InSpan, None, 1).is_err());
    }
}
