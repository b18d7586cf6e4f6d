//! Empirical stability constants of a basis: localization envelope, Hölder
//! constant, Lebesgue constant, Riesz bounds and L_p condition ratios.

use std::f64::consts::PI;
use std::io::Write;

use nalgebra::DMatrix;
use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec;
use crate::geometry::{geodesic_distance, icosahedral_grid, resolution_for_density, MeshStats, PointSet, SpherePoint};
use crate::lagrange::BasisFamily;
use crate::linalg;
use crate::pvalue;
use crate::quadrature::QuadratureRule;

/// Grid points per center for sup norms and the Lebesgue constant.
pub const DEFAULT_SUP_DENSITY: usize = 20;

/// Smallest sup-norm grid.
pub const MIN_SUP_GRID: usize = 10_000;

pub const DEFAULT_SEED: u64 = 0x5eed_2024;

/// Flag threshold for the Nikolskii ratio against `c2 / c1`.
pub const NIKOLSKII_SLACK: f64 = 1.05;

/// Icosahedral grid with at least `max(density n, MIN_SUP_GRID)` points,
/// followed by the centers themselves.
pub fn sup_grid(set: &PointSet, density: usize) -> Vec<SpherePoint> {
    let target = (density * set.len()).max(MIN_SUP_GRID);
    let mut grid = icosahedral_grid(resolution_for_density(1, target));
    grid.extend_from_slice(set.points());
    grid
}

/// Exponential envelope `y <= amplitude exp(-rate t)` of sampled pairs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecayFit {
    pub amplitude: f64,
    pub rate: f64,
    /// Samples examined, including those under the floor.
    pub samples: usize,
    /// Samples above the floor; the envelope covers all of them.
    pub fitted: usize,
    pub floor: f64,
    /// False when no positive rate fits (no decay seen).
    pub decays: bool,
}

impl DecayFit {
    pub fn bound(&self, t: f64) -> f64 {
        self.amplitude * (-self.rate * t).exp()
    }
}

/// Fits `log y` against `t` by least squares on per-unit-bin maxima of the
/// samples above `floor`, then raises the amplitude until every such sample
/// lies under the envelope.
pub fn fit_envelope(samples: &[(f64, f64)], floor: f64) -> Result<DecayFit> {
    let kept: Vec<(f64, f64)> = samples
        .iter()
        .filter(|(t, y)| t.is_finite() && *y > floor)
        .map(|&(t, y)| (t, y.ln()))
        .collect();
    if kept.is_empty() {
        return Err(Error::InsufficientSignal { floor });
    }
    let mut bins: Vec<Option<(f64, f64)>> = Vec::new();
    for &(t, ly) in &kept {
        let b = t.max(0.0).floor() as usize;
        if bins.len() <= b {
            bins.resize(b + 1, None);
        }
        match bins[b] {
            Some((_, best)) if best >= ly => {}
            _ => bins[b] = Some((t, ly)),
        }
    }
    let pts: Vec<(f64, f64)> = bins.into_iter().flatten().collect();
    let mut rate = 0.0;
    if pts.len() >= 2 {
        let m = pts.len() as f64;
        let tm = pts.iter().map(|p| p.0).sum::<f64>() / m;
        let ym = pts.iter().map(|p| p.1).sum::<f64>() / m;
        let sxy: f64 = pts.iter().map(|p| (p.0 - tm) * (p.1 - ym)).sum();
        let sxx: f64 = pts.iter().map(|p| (p.0 - tm).powi(2)).sum();
        if sxx > 0.0 {
            rate = (-sxy / sxx).max(0.0);
        }
    }
    let log_amp = kept
        .iter()
        .map(|&(t, ly)| ly + rate * t)
        .fold(f64::NEG_INFINITY, f64::max);
    Ok(DecayFit {
        amplitude: log_amp.exp(),
        rate,
        samples: samples.len(),
        fitted: kept.len(),
        floor,
        decays: rate > 0.0,
    })
}

/// `min(d(x, xi), pi) / q` and `|v|` pairs for a subset of centers over the
/// grid.
pub fn decay_samples(
    basis: &dyn BasisFamily,
    grid: &[SpherePoint],
    indices: &[usize],
) -> Vec<(f64, f64)> {
    let q = basis.separation_radius();
    let values = basis.eval_columns(grid, indices);
    let centers = basis.centers();
    let mut out = Vec::with_capacity(grid.len() * indices.len());
    for (k, &xi) in indices.iter().enumerate() {
        let c = &centers[xi];
        for (i, x) in grid.iter().enumerate() {
            let t = geodesic_distance(x, c).min(PI) / q;
            out.push((t, values[(i, k)].abs()));
        }
    }
    out
}

/// `centers` distinct indices drawn with `seed` (all of them if fewer).
pub fn center_subset(n: usize, centers: usize, seed: u64) -> Vec<usize> {
    if centers >= n {
        return (0..n).collect();
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut idx = sample(&mut rng, n, centers).into_vec();
    idx.sort_unstable();
    idx
}

/// Localization envelope `|v_xi(x)| <= C1 exp(-nu d(x, xi) / q)` over a
/// random subset of centers.
pub fn fit_decay(basis: &dyn BasisFamily, grid: &[SpherePoint], centers: usize, seed: u64) -> Result<DecayFit> {
    let idx = center_subset(basis.len(), centers, seed);
    fit_envelope(&decay_samples(basis, grid, &idx), basis.noise_floor())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HolderFit {
    pub constant: f64,
    pub exponent: f64,
    pub pairs: usize,
}

fn random_tangent(rng: &mut ChaCha8Rng) -> [f64; 3] {
    [rng.sample(StandardNormal), rng.sample(StandardNormal), rng.sample(StandardNormal)]
}

fn random_step(rng: &mut ChaCha8Rng, x: &SpherePoint, angle: f64) -> SpherePoint {
    loop {
        if let Ok(y) = x.step(random_tangent(rng), angle) {
            return y;
        }
    }
}

/// `C2 = max |v_xi(x) - v_xi(y)| / (d(x, y) / q)^eps` over random pairs with
/// `d(x, y) <= q`. The first point of each pair lies within `4q` of the
/// center (the first one on it), where the functions vary most.
pub fn fit_holder(
    basis: &dyn BasisFamily,
    exponent: f64,
    pair_budget: usize,
    centers: usize,
    seed: u64,
) -> Result<HolderFit> {
    if !(exponent > 0.0 && exponent <= 1.0) {
        return Err(Error::Domain(format!("Hölder exponent {exponent} not in (0, 1]")));
    }
    let q = basis.separation_radius();
    let idx = center_subset(basis.len(), centers, seed);
    let per_center = pair_budget.div_ceil(idx.len().max(1)).max(1);
    let worst = exec::map_range(idx.len(), |k| {
        let xi = idx[k];
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(xi as u64 + 1);
        let c = basis.centers()[xi];
        let mut best: f64 = 0.0;
        for pair in 0..per_center {
            let x = if pair == 0 {
                c
            } else {
                let r = 4.0 * q * rng.gen::<f64>();
                random_step(&mut rng, &c, r)
            };
            let r = if pair == 0 { q } else { q * rng.gen_range(1e-3..=1.0) };
            let y = random_step(&mut rng, &x, r);
            let d = geodesic_distance(&x, &y);
            if d == 0.0 {
                continue;
            }
            let diff = (basis.eval(xi, &x) - basis.eval(xi, &y)).abs();
            best = best.max(diff / (d / q).powf(exponent));
        }
        best
    });
    Ok(HolderFit {
        constant: worst.into_iter().fold(0.0, f64::max),
        exponent,
        pairs: per_center * idx.len(),
    })
}

/// `max_x sum_xi |v_xi(x)|` over the grid.
pub fn lebesgue_constant(basis: &dyn BasisFamily, grid: &[SpherePoint]) -> f64 {
    const BLOCK: usize = 2048;
    let mut best: f64 = 0.0;
    for chunk in grid.chunks(BLOCK) {
        let v = basis.eval_matrix(chunk);
        for i in 0..v.nrows() {
            best = best.max(v.row(i).iter().map(|x| x.abs()).sum::<f64>());
        }
    }
    best
}

/// `(sqrt(lambda_min), sqrt(lambda_max))` of a positive definite Gram matrix.
pub fn riesz_bounds(gram: &DMatrix<f64>) -> Result<(f64, f64)> {
    let ev = linalg::symmetric_eigenvalues(gram);
    let (lo, hi) = (ev[0], ev[ev.len() - 1]);
    if !(lo > 0.0) {
        return Err(Error::Numerical(format!(
            "Gram matrix is not positive definite (smallest eigenvalue {lo:e})"
        )));
    }
    Ok((lo.sqrt(), hi.sqrt()))
}

/// `rows[k][t] = ||sum_j coeffs[j, t] v_j||_{ps[k]}`: quadrature for finite
/// exponents, grid maximum for `inf`.
pub fn combination_norms(
    basis: &dyn BasisFamily,
    coeffs: &DMatrix<f64>,
    ps: &[f64],
    rule: &QuadratureRule,
    grid: &[SpherePoint],
) -> Result<Vec<Vec<f64>>> {
    let trials = coeffs.ncols();
    let mut sums = vec![vec![0.0; trials]; ps.len()];
    let weights = rule.weights();
    if ps.iter().any(|p| p.is_finite()) {
        for_each_quadrature_block_combined(basis, coeffs, rule, |range, s| {
            for (k, &p) in ps.iter().enumerate() {
                if p.is_infinite() {
                    continue;
                }
                for (t, sum) in sums[k].iter_mut().enumerate() {
                    *sum += range
                        .clone()
                        .zip(s.column(t).iter())
                        .map(|(i, v)| weights[i] * v.abs().powf(p))
                        .sum::<f64>();
                }
            }
        });
    }
    let sup = if ps.iter().any(|p| p.is_infinite()) {
        let mut best = vec![0.0f64; trials];
        for chunk in grid.chunks(2048) {
            let s = basis.eval_combinations(chunk, coeffs);
            for (t, b) in best.iter_mut().enumerate() {
                *b = s.column(t).iter().fold(*b, |m, v| m.max(v.abs()));
            }
        }
        best
    } else {
        Vec::new()
    };
    let out: Vec<Vec<f64>> = ps
        .iter()
        .zip(sums)
        .map(|(&p, s)| {
            if p.is_infinite() {
                sup.clone()
            } else {
                s.into_iter().map(|v| v.powf(1.0 / p)).collect()
            }
        })
        .collect();
    if out.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::Numerical("non-finite norm".into()));
    }
    Ok(out)
}

fn for_each_quadrature_block_combined<F>(basis: &dyn BasisFamily, coeffs: &DMatrix<f64>, rule: &QuadratureRule, mut f: F)
where
    F: FnMut(std::ops::Range<usize>, &DMatrix<f64>),
{
    let nodes = rule.nodes();
    let mut start = 0;
    while start < nodes.len() {
        let end = (start + crate::lagrange::QUADRATURE_BLOCK).min(nodes.len());
        f(start..end, &basis.eval_combinations(&nodes[start..end], coeffs));
        start = end;
    }
}

/// `||a||_p` of a coefficient vector.
pub fn sequence_norm(a: &[f64], p: f64) -> f64 {
    if p.is_infinite() {
        a.iter().fold(0.0, |m, v| m.max(v.abs()))
    } else {
        a.iter().map(|v| v.abs().powf(p)).sum::<f64>().powf(1.0 / p)
    }
}

/// `n x trials` independent standard normal entries from a seeded stream.
pub fn gaussian_coefficients(n: usize, trials: usize, seed: u64) -> DMatrix<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    DMatrix::from_fn(n, trials, |_, _| rng.sample(StandardNormal))
}

/// Empirical comparison constants of one exponent.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PRatio {
    #[serde(with = "pvalue")]
    pub p: f64,
    pub lower: f64,
    pub upper: f64,
}

/// Min and max over the columns of `coeffs` of
/// `||sum a_xi v_xi||_p / (q^(2/p) ||a||_p)` for each `p`.
pub fn lp_ratios(
    basis: &dyn BasisFamily,
    coeffs: &DMatrix<f64>,
    ps: &[f64],
    rule: &QuadratureRule,
    grid: &[SpherePoint],
) -> Result<Vec<PRatio>> {
    let norms = combination_norms(basis, coeffs, ps, rule, grid)?;
    Ok(ratios_from_norms(basis.separation_radius(), coeffs, ps, &norms))
}

fn ratios_from_norms(q: f64, coeffs: &DMatrix<f64>, ps: &[f64], norms: &[Vec<f64>]) -> Vec<PRatio> {
    ps.iter()
        .zip(norms)
        .map(|(&p, row)| {
            let scale = q.powf(2.0 / p);
            let (lower, upper) = row.iter().enumerate().fold(
                (f64::INFINITY, 0.0f64),
                |(lo, hi), (t, s)| {
                    let col: Vec<f64> = coeffs.column(t).iter().copied().collect();
                    let r = s / (scale * sequence_norm(&col, p));
                    (lo.min(r), hi.max(r))
                },
            );
            PRatio { p, lower, upper }
        })
        .collect()
}

/// [`lp_ratios`] for `trials` standard normal coefficient vectors.
pub fn check_lp_condition(
    basis: &dyn BasisFamily,
    ps: &[f64],
    trials: usize,
    rule: &QuadratureRule,
    grid: &[SpherePoint],
    seed: u64,
) -> Result<Vec<PRatio>> {
    if trials < 32 {
        return Err(Error::Domain(format!("need at least 32 trials, got {trials}")));
    }
    if let Some(p) = ps.iter().find(|p| !(**p >= 1.0)) {
        return Err(Error::Domain(format!("p = {p} is below 1")));
    }
    lp_ratios(basis, &gaussian_coefficients(basis.len(), trials, seed), ps, rule, grid)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NikolskiiCheck {
    #[serde(with = "pvalue")]
    pub p: f64,
    #[serde(with = "pvalue")]
    pub r: f64,
    /// `max ||s||_r q^(2(1/p - 1/r)) / ||s||_p`.
    pub worst: f64,
    /// `c2 / c1` when supplied.
    pub reference: Option<f64>,
    /// `worst` exceeds `reference` by more than 5%.
    pub flagged: bool,
}

/// Nikolskii ratio over the columns of `coeffs`.
pub fn nikolskii_ratio(
    basis: &dyn BasisFamily,
    coeffs: &DMatrix<f64>,
    p: f64,
    r: f64,
    rule: &QuadratureRule,
    grid: &[SpherePoint],
) -> Result<f64> {
    if !(p >= 1.0 && r >= p) {
        return Err(Error::Domain(format!("need 1 <= p <= r, got p = {p}, r = {r}")));
    }
    let norms = combination_norms(basis, coeffs, &[p, r], rule, grid)?;
    Ok(worst_nikolskii(basis.separation_radius(), p, r, &norms[0], &norms[1]))
}

fn worst_nikolskii(q: f64, p: f64, r: f64, norms_p: &[f64], norms_r: &[f64]) -> f64 {
    let scale = q.powf(2.0 * (1.0 / p - 1.0 / r));
    norms_p
        .iter()
        .zip(norms_r)
        .map(|(sp, sr)| if p == r { 1.0 } else { sr * scale / sp })
        .fold(0.0, f64::max)
}

#[allow(clippy::too_many_arguments)]
pub fn nikolskii_check(
    basis: &dyn BasisFamily,
    p: f64,
    r: f64,
    trials: usize,
    rule: &QuadratureRule,
    grid: &[SpherePoint],
    seed: u64,
    reference: Option<f64>,
) -> Result<NikolskiiCheck> {
    let coeffs = gaussian_coefficients(basis.len(), trials.max(1), seed);
    let worst = nikolskii_ratio(basis, &coeffs, p, r, rule, grid)?;
    Ok(NikolskiiCheck {
        p,
        r,
        worst,
        reference,
        flagged: reference.is_some_and(|c| worst > NIKOLSKII_SLACK * c),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StabilityConfig {
    pub sup_density: usize,
    pub decay_centers: usize,
    pub holder_pairs: usize,
    pub holder_centers: usize,
    pub holder_exponent: f64,
    pub trials: usize,
    #[serde(with = "pvalue::list")]
    pub ps: Vec<f64>,
    pub seed: u64,
}

impl Default for StabilityConfig {
    fn default() -> Self {
        Self {
            sup_density: DEFAULT_SUP_DENSITY,
            decay_centers: 64,
            holder_pairs: 4096,
            holder_centers: 64,
            holder_exponent: 0.5,
            trials: 64,
            ps: vec![1.0, 2.0, f64::INFINITY],
            seed: DEFAULT_SEED,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub grid_points: usize,
    pub decay_centers: usize,
    pub decay_samples: usize,
    pub holder_pairs: usize,
    pub trials: usize,
    pub seed: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StabilityReport {
    pub n: usize,
    pub mesh: MeshStats,
    pub decay: DecayFit,
    pub holder: HolderFit,
    pub lebesgue_constant: f64,
    pub riesz_lower: f64,
    pub riesz_upper: f64,
    pub per_p_ratios: Vec<PRatio>,
    pub nikolskii: Vec<NikolskiiCheck>,
    pub provenance: Provenance,
}

pub const STABILITY_CSV_HEADER: [&str; 15] = [
    "n", "h", "q", "rho", "C1", "nu", "C2", "eps", "lebesgue", "c1", "c2", "p", "lower", "upper", "seed",
];

impl StabilityReport {
    /// Measures everything for `basis` on `set`; `gram` is the Gram matrix
    /// of the p = 2 renormalized basis.
    pub fn measure(
        basis: &dyn BasisFamily,
        set: &PointSet,
        rule: &QuadratureRule,
        gram: &DMatrix<f64>,
        config: &StabilityConfig,
    ) -> Result<Self> {
        let grid = sup_grid(set, config.sup_density);
        let decay = fit_decay(basis, &grid, config.decay_centers, config.seed)?;
        let holder = fit_holder(
            basis,
            config.holder_exponent,
            config.holder_pairs,
            config.holder_centers,
            config.seed,
        )?;
        let lebesgue_constant = lebesgue_constant(basis, &grid);
        let (c1, c2) = riesz_bounds(gram)?;
        if config.trials < 32 {
            return Err(Error::Domain(format!("need at least 32 trials, got {}", config.trials)));
        }
        if let Some(p) = config.ps.iter().find(|p| !(**p >= 1.0)) {
            return Err(Error::Domain(format!("p = {p} is below 1")));
        }
        // One pass over the combinations serves both the p ratios and the
        // Nikolskii pairs (1, 2) and (2, inf).
        let mut all_ps = config.ps.clone();
        for extra in [1.0, 2.0, f64::INFINITY] {
            if !all_ps.contains(&extra) {
                all_ps.push(extra);
            }
        }
        let coeffs = gaussian_coefficients(basis.len(), config.trials, config.seed);
        let norms = combination_norms(basis, &coeffs, &all_ps, rule, &grid)?;
        let q = basis.separation_radius();
        let per_p_ratios = ratios_from_norms(q, &coeffs, &config.ps, &norms[..config.ps.len()]);
        let row = |p: f64| &norms[all_ps.iter().position(|x| *x == p).unwrap()];
        let reference = Some(c2 / c1);
        let nikolskii = [(1.0, 2.0), (2.0, f64::INFINITY)]
            .into_iter()
            .map(|(p, r)| {
                let worst = worst_nikolskii(q, p, r, row(p), row(r));
                NikolskiiCheck {
                    p,
                    r,
                    worst,
                    reference,
                    flagged: worst > NIKOLSKII_SLACK * c2 / c1,
                }
            })
            .collect();
        let centers = config.decay_centers.min(basis.len());
        Ok(Self {
            n: set.len(),
            mesh: set.stats(),
            decay,
            holder: holder.clone(),
            lebesgue_constant,
            riesz_lower: c1,
            riesz_upper: c2,
            per_p_ratios,
            nikolskii,
            provenance: Provenance {
                grid_points: grid.len(),
                decay_centers: centers,
                decay_samples: centers * grid.len(),
                holder_pairs: holder.pairs,
                trials: config.trials,
                seed: config.seed,
            },
        })
    }

    /// One `stability.csv` row per exponent.
    pub fn csv_rows(&self) -> Vec<Vec<String>> {
        self.per_p_ratios
            .iter()
            .map(|r| {
                vec![
                    self.n.to_string(),
                    self.mesh.h.to_string(),
                    self.mesh.q.to_string(),
                    self.mesh.rho.to_string(),
                    self.decay.amplitude.to_string(),
                    self.decay.rate.to_string(),
                    self.holder.constant.to_string(),
                    self.holder.exponent.to_string(),
                    self.lebesgue_constant.to_string(),
                    self.riesz_lower.to_string(),
                    self.riesz_upper.to_string(),
                    pvalue::format_p(r.p),
                    r.lower.to_string(),
                    r.upper.to_string(),
                    self.provenance.seed.to_string(),
                ]
            })
            .collect()
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// Writes the header and rows of several reports as `stability.csv`.
pub fn write_stability_csv<W: Write>(out: W, reports: &[StabilityReport]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(STABILITY_CSV_HEADER)?;
    for r in reports {
        for row in r.csv_rows() {
            w.write_record(&row)?;
        }
    }
    w.flush()?;
    Ok(())
}
