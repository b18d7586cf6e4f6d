//! Gram matrices of the L2-normalized basis, band/residual splits, the
//! Demko-Moss-Smith constants and an empirical certificate for
//! `||G^-1||_inf`.

use std::f64::consts::PI;
use std::io::Write;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{geodesic_distance, ManifoldConstants, SpherePoint};
use crate::lagrange::{for_each_quadrature_block, BasisFamily};
use crate::linalg;
use crate::quadrature::QuadratureRule;
use crate::stability::{fit_envelope, DecayFit, StabilityReport};

/// Entries below this fraction of the largest diagonal entry are treated
/// as quadrature noise in decay checks.
pub const GRAM_FLOOR_RELATIVE: f64 = 1e-10;

/// Coverage in [`offdiag_decay_check`] is measured with `C_G` capped at
/// this multiple of the largest diagonal entry.
pub const GRAM_DECAY_CAP_FACTOR: f64 = 100.0;

/// Default cutoff grid `1.5, 2, ..., 40`.
pub fn default_gamma_grid() -> Vec<f64> {
    (3..=80).map(|k| k as f64 * 0.5).collect()
}

#[derive(Clone, Debug)]
pub struct GramMatrix {
    pub entries: DMatrix<f64>,
    /// Largest `|G - G^T|` entry before symmetrization.
    pub skew: f64,
    pub quadrature_nodes: usize,
    pub exactness_degree: usize,
}

/// `G[xi, zeta] = <v_xi, v_zeta>` by quadrature, symmetrized.
pub fn assemble_gram(basis: &dyn BasisFamily, rule: &QuadratureRule) -> Result<GramMatrix> {
    let n = basis.len();
    let mut g = DMatrix::zeros(n, n);
    let w = rule.weights();
    for_each_quadrature_block(basis, rule, |range, phi| {
        let mut wphi = phi.clone();
        for (r, i) in range.enumerate() {
            wphi.row_mut(r).scale_mut(w[i]);
        }
        g += phi.transpose() * wphi;
    });
    if g.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numerical("non-finite Gram entry".into()));
    }
    let skew = linalg::max_abs(&(&g - g.transpose()));
    linalg::symmetrize(&mut g);
    Ok(GramMatrix {
        entries: g,
        skew,
        quadrature_nodes: rule.len(),
        exactness_degree: rule.exactness_degree(),
    })
}

/// `t[i][j] = min(d(xi_i, xi_j), pi) / q`.
pub fn scaled_distances(centers: &[SpherePoint], q: f64) -> DMatrix<f64> {
    let n = centers.len();
    DMatrix::from_fn(n, n, |i, j| geodesic_distance(&centers[i], &centers[j]).min(PI) / q)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OffdiagDecay {
    /// Smallest `C_G` covering every entry above the floor.
    pub c_g: f64,
    pub mu: f64,
    /// Fraction of entries above the floor under the capped envelope.
    pub coverage: f64,
    pub floor: f64,
}

/// Checks `|G(xi, zeta)| <= C_G exp(-mu d / q)` with `mu = nu / 2`.
pub fn offdiag_decay_check(g: &DMatrix<f64>, centers: &[SpherePoint], q: f64, nu: f64) -> OffdiagDecay {
    let mu = nu / 2.0;
    let diag = g.diagonal().iter().fold(0.0, |a: f64, v| a.max(v.abs()));
    let floor = GRAM_FLOOR_RELATIVE * diag;
    let t = scaled_distances(centers, q);
    let mut c_g: f64 = 0.0;
    for (v, t) in g.iter().zip(t.iter()) {
        if v.abs() > floor {
            c_g = c_g.max(v.abs() * (mu * t).exp());
        }
    }
    let cap = c_g.min(GRAM_DECAY_CAP_FACTOR * diag);
    let (mut kept, mut ok) = (0usize, 0usize);
    for (v, t) in g.iter().zip(t.iter()) {
        if v.abs() > floor {
            kept += 1;
            if v.abs() <= cap * (-mu * t).exp() * (1.0 + 1e-12) {
                ok += 1;
            }
        }
    }
    OffdiagDecay {
        c_g,
        mu,
        coverage: if kept == 0 { 1.0 } else { ok as f64 / kept as f64 },
        floor,
    }
}

#[derive(Clone, Debug)]
pub struct BandSplit {
    pub band: DMatrix<f64>,
    pub residual: DMatrix<f64>,
    pub gamma: f64,
}

/// `B` keeps entries with `d < gamma q`, `R` the rest.
pub fn band_split(g: &DMatrix<f64>, centers: &[SpherePoint], q: f64, gamma: f64) -> Result<BandSplit> {
    if !(gamma > 1.0) {
        return Err(Error::Domain(format!("cutoff {gamma} must exceed 1")));
    }
    let n = g.nrows();
    let mut band = DMatrix::zeros(n, n);
    let mut residual = DMatrix::zeros(n, n);
    for j in 0..n {
        for i in 0..n {
            if geodesic_distance(&centers[i], &centers[j]) < gamma * q {
                band[(i, j)] = g[(i, j)];
            } else {
                residual[(i, j)] = g[(i, j)];
            }
        }
    }
    Ok(BandSplit { band, residual, gamma })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DmsConstants {
    /// `Q = (2 c2 - c1) / (2 c2 + c1)`.
    pub q_ratio: f64,
    /// `C0 = (c1 + c2)^2 / (2 c1^2 c2^2)`.
    pub c0: f64,
    /// `-log Q`.
    pub tau: f64,
    /// Whether `C0 <= (3/2) c1^-2`; fails once `c1 / c2 > sqrt(3) - 1`.
    pub c0_within_three_halves: bool,
}

pub fn dms_constants(c1: f64, c2: f64) -> Result<DmsConstants> {
    if !(c1 > 0.0 && c2 >= c1 && c2.is_finite()) {
        return Err(Error::Domain(format!("need 0 < c1 <= c2, got c1 = {c1}, c2 = {c2}")));
    }
    let q_ratio = (2.0 * c2 - c1) / (2.0 * c2 + c1);
    let c0 = (c1 + c2).powi(2) / (2.0 * c1 * c1 * c2 * c2);
    Ok(DmsConstants {
        q_ratio,
        c0,
        tau: -q_ratio.ln(),
        c0_within_three_halves: c0 <= 1.5 / (c1 * c1) * (1.0 + 1e-15),
    })
}

/// Truncated Chebyshev series of `1/x` on `[a, b]`. With
/// `x = (a + b)/2 + (b - a)/2 y` and `sigma = (b + a)/(b - a)`,
/// `1/(y + sigma) = 2/sqrt(sigma^2 - 1) sum' (-r)^k T_k(y)`,
/// `r = sigma - sqrt(sigma^2 - 1)`.
#[derive(Clone, Debug)]
pub struct ChebyshevInverse {
    a: f64,
    b: f64,
    coefficients: Vec<f64>,
}

impl ChebyshevInverse {
    pub fn new(a: f64, b: f64, degree: usize) -> Result<Self> {
        if !(a > 0.0 && b > a) {
            return Err(Error::Domain(format!("need 0 < a < b, got [{a}, {b}]")));
        }
        let sigma = (b + a) / (b - a);
        let root = (sigma * sigma - 1.0).sqrt();
        let r = 1.0 / (sigma + root);
        let lead = 2.0 / (b - a) * 2.0 / root;
        let coefficients = (0..=degree)
            .map(|k| {
                let c = lead * (-r).powi(k as i32);
                if k == 0 {
                    c / 2.0
                } else {
                    c
                }
            })
            .collect();
        Ok(Self { a, b, coefficients })
    }

    pub fn eval(&self, x: f64) -> f64 {
        let y = (2.0 * x - self.a - self.b) / (self.b - self.a);
        let (mut b1, mut b2) = (0.0, 0.0);
        for c in self.coefficients.iter().skip(1).rev() {
            let b0 = c + 2.0 * y * b1 - b2;
            b2 = b1;
            b1 = b0;
        }
        self.coefficients[0] + y * b1 - b2
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChebyshevTest {
    pub degree: usize,
    /// Max error on the grid.
    pub error: f64,
    pub q_ratio: f64,
    /// `C0 Q^(n+1)` with `(c1, c2) = (sqrt(2a), sqrt(b/2))`.
    pub stated_bound: f64,
    /// `(2 c2 + c1) / (c1^2 c2) Q^(n+1)`, attained by the truncated series
    /// at `x = a`.
    pub series_bound: f64,
}

/// Points in the error grid of [`chebyshev_inverse_test`].
pub const CHEBYSHEV_GRID: usize = 10_000;

/// Max error of the degree-`n` Chebyshev approximant of `1/x` on `[a, b]`
/// over an equispaced grid, with the two reference bounds.
pub fn chebyshev_inverse_test(a: f64, b: f64, degree: usize) -> Result<ChebyshevTest> {
    let p = ChebyshevInverse::new(a, b, degree)?;
    let error = (0..CHEBYSHEV_GRID)
        .map(|i| {
            let x = a + (b - a) * i as f64 / (CHEBYSHEV_GRID - 1) as f64;
            (1.0 / x - p.eval(x)).abs()
        })
        .fold(0.0, f64::max);
    let (c1, c2) = ((2.0 * a).sqrt(), (b / 2.0).sqrt());
    let q_ratio = (2.0 * c2 - c1) / (2.0 * c2 + c1);
    let c0 = (c1 + c2).powi(2) / (2.0 * c1 * c1 * c2 * c2);
    let qn = q_ratio.powi(degree as i32 + 1);
    Ok(ChebyshevTest {
        degree,
        error,
        q_ratio,
        stated_bound: c0 * qn,
        series_bound: (2.0 * c2 + c1) / (c1 * c1 * c2) * qn,
    })
}

/// `||M^-1||_inf` from the dense inverse.
pub fn inverse_inf_norm(m: &DMatrix<f64>) -> Result<f64> {
    Ok(linalg::inf_norm(&linalg::inverse(m)?))
}

/// `C = 3 c1^-2 K tau^-d d!`.
pub fn gram_constant(c1: f64, counting: f64, tau: f64, dimension: usize) -> f64 {
    let factorial: f64 = (1..=dimension).map(|k| k as f64).product();
    3.0 / (c1 * c1) * counting * tau.powi(-(dimension as i32)) * factorial
}

/// `C_G K (Gamma^d e^(-mu Gamma) + Gamma^-1 int_Gamma^inf r^2 e^(-mu r) dr
/// + (pi / q)^2 e^(-mu pi / q))` on the 2-sphere.
pub fn theoretical_residual_bound(c_g: f64, mu: f64, counting: f64, gamma: f64, q: f64) -> f64 {
    let tail = (-mu * gamma).exp() * (gamma * gamma / mu + 2.0 * gamma / (mu * mu) + 2.0 / mu.powi(3));
    c_g * counting * (gamma * gamma * (-mu * gamma).exp() + tail / gamma + (PI / q).powi(2) * (-mu * PI / q).exp())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GramCertificate {
    pub n: usize,
    pub gamma: f64,
    pub q_ratio: f64,
    pub c0: f64,
    pub tau: f64,
    pub cconst: f64,
    /// `2 C Gamma^d`.
    pub dms_bound: f64,
    pub residual_inf_norm: f64,
    pub residual_one_norm: f64,
    /// `(1/2) min(c1^2, C^-1 Gamma^-d) - max(||R||_1, ||R||_inf)`.
    pub margin: f64,
    pub band_inverse_inf_norm: f64,
    pub band_spectrum: (f64, f64),
    /// `spectrum(B)` inside `[c1^2 / 2, 2 c2^2]`.
    pub spectrum_contained: bool,
    pub measured_inverse_inf_norm: f64,
    pub inverse_decay: DecayFit,
    /// Residual bound from the decay constants, when supplied.
    pub theoretical_residual_bound: Option<f64>,
    pub verdict: bool,
}

pub const GRAM_CSV_HEADER: [&str; 10] = [
    "n", "Gamma", "Q", "C0", "tau", "Cconst", "bound", "RinfNorm", "GinvInfNorm", "verdict",
];

impl GramCertificate {
    pub fn csv_row(&self) -> Vec<String> {
        vec![
            self.n.to_string(),
            self.gamma.to_string(),
            self.q_ratio.to_string(),
            self.c0.to_string(),
            self.tau.to_string(),
            self.cconst.to_string(),
            self.dms_bound.to_string(),
            self.residual_inf_norm.to_string(),
            self.measured_inverse_inf_norm.to_string(),
            self.verdict.to_string(),
        ]
    }
}

pub fn write_gram_csv<W: Write>(out: W, certificates: &[GramCertificate]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(GRAM_CSV_HEADER)?;
    for c in certificates {
        w.write_record(c.csv_row())?;
    }
    w.flush()?;
    Ok(())
}

/// Inputs of [`select_gamma`] besides the matrix.
#[derive(Clone, Debug)]
pub struct CertificateInputs<'a> {
    pub centers: &'a [SpherePoint],
    pub q: f64,
    pub c1: f64,
    pub c2: f64,
    pub constants: ManifoldConstants,
    pub gammas: Vec<f64>,
    /// `(C_G, mu)` for the theoretical residual bound.
    pub decay: Option<(f64, f64)>,
}

impl<'a> CertificateInputs<'a> {
    pub fn from_report(
        centers: &'a [SpherePoint],
        report: &StabilityReport,
        constants: ManifoldConstants,
    ) -> Self {
        Self {
            centers,
            q: report.mesh.q,
            c1: report.riesz_lower,
            c2: report.riesz_upper,
            constants,
            gammas: default_gamma_grid(),
            decay: None,
        }
    }
}

/// Smallest `Gamma` on the grid with
/// `max(||R||_1, ||R||_inf) <= (1/2) min(c1^2, C^-1 Gamma^-d)` for the
/// measured residual, and the resulting certificate.
pub fn select_gamma(g: &DMatrix<f64>, inputs: &CertificateInputs) -> Result<GramCertificate> {
    let n = g.nrows();
    let d = inputs.constants.dimension;
    let dms = dms_constants(inputs.c1, inputs.c2)?;
    let cconst = gram_constant(inputs.c1, inputs.constants.counting, dms.tau, d);
    let t = scaled_distances(inputs.centers, inputs.q);

    let mut best: Option<(f64, f64, f64, f64)> = None;
    let mut chosen = None;
    for &gamma in &inputs.gammas {
        if !(gamma > 1.0) {
            return Err(Error::Domain(format!("cutoff {gamma} must exceed 1")));
        }
        let mut rows = vec![0.0; n];
        let mut cols = vec![0.0; n];
        for j in 0..n {
            for i in 0..n {
                if t[(i, j)] >= gamma {
                    let v = g[(i, j)].abs();
                    rows[i] += v;
                    cols[j] += v;
                }
            }
        }
        let r_inf = rows.iter().fold(0.0, |a: f64, v| a.max(*v));
        let r_one = cols.iter().fold(0.0, |a: f64, v| a.max(*v));
        let margin = 0.5 * (inputs.c1 * inputs.c1).min(1.0 / (cconst * gamma.powi(d as i32))) - r_inf.max(r_one);
        if best.is_none_or(|b| margin > b.1) {
            best = Some((gamma, margin, r_inf, r_one));
        }
        if margin >= 0.0 {
            chosen = Some((gamma, margin, r_inf, r_one));
            break;
        }
    }
    let Some((gamma, margin, r_inf, r_one)) = chosen else {
        let (best_gamma, best_margin, _, _) = best.unwrap_or((f64::NAN, f64::NEG_INFINITY, 0.0, 0.0));
        return Err(Error::NoCertificate {
            best_margin,
            best_gamma,
        });
    };

    let split = band_split(g, inputs.centers, inputs.q, gamma)?;
    let band_inverse_inf_norm = inverse_inf_norm(&split.band)?;
    let ev = linalg::symmetric_eigenvalues(&split.band);
    let band_spectrum = (ev[0], ev[ev.len() - 1]);
    let spectrum_contained = band_spectrum.0 >= 0.5 * inputs.c1 * inputs.c1 * (1.0 - 1e-12)
        && band_spectrum.1 <= 2.0 * inputs.c2 * inputs.c2 * (1.0 + 1e-12);

    let ginv = linalg::spd_inverse(g)
        .ok_or_else(|| Error::Numerical("Gram matrix is not positive definite".into()))?;
    let measured = linalg::inf_norm(&ginv);
    let top = linalg::max_abs(&ginv);
    let samples: Vec<(f64, f64)> = ginv.iter().zip(t.iter()).map(|(v, t)| (*t, v.abs())).collect();
    let inverse_decay = fit_envelope(&samples, 1e-12 * top)?;

    let dms_bound = 2.0 * cconst * gamma.powi(d as i32);
    Ok(GramCertificate {
        n,
        gamma,
        q_ratio: dms.q_ratio,
        c0: dms.c0,
        tau: dms.tau,
        cconst,
        dms_bound,
        residual_inf_norm: r_inf,
        residual_one_norm: r_one,
        margin,
        band_inverse_inf_norm,
        band_spectrum,
        spectrum_contained,
        measured_inverse_inf_norm: measured,
        inverse_decay,
        theoretical_residual_bound: inputs
            .decay
            .map(|(c_g, mu)| theoretical_residual_bound(c_g, mu, inputs.constants.counting, gamma, inputs.q)),
        verdict: measured <= dms_bound,
    })
}

/// Solves `G c = rhs` by Cholesky.
pub fn solve_gram(g: &DMatrix<f64>, rhs: &[f64]) -> Result<Vec<f64>> {
    let chol = g
        .clone()
        .cholesky()
        .ok_or_else(|| Error::Numerical("Gram matrix is not positive definite".into()))?;
    Ok(chol.solve(&DVector::from_column_slice(rhs)).iter().copied().collect())
}
