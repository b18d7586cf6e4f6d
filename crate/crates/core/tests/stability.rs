use std::f64::consts::PI;

use approx::{assert_abs_diff_eq, assert_relative_eq};
use kernel_lsq::geometry::{generate_fibonacci, geodesic_distance, PointSet, SpherePoint};
use kernel_lsq::kernel::{sobolev_kernel, Kernel};
use kernel_lsq::lagrange::{solve_lagrange, BasisFamily, FunctionFamily, LagrangeBasis, RenormalizedBasis};
use kernel_lsq::quadrature::QuadratureRule;
use kernel_lsq::stability::*;
use kernel_lsq::Error;
use nalgebra::DMatrix;

fn sobolev() -> Kernel {
    Kernel::from_series(sobolev_kernel(4.0, 1e-10).unwrap())
}

fn basis(n: usize) -> (PointSet, LagrangeBasis) {
    let set = generate_fibonacci(n).unwrap();
    let b = solve_lagrange(&sobolev(), &set).unwrap();
    (set, b)
}

#[test]
fn decay_of_exact_exponential() {
    let set = generate_fibonacci(50).unwrap();
    let q = set.separation_radius();
    let centers = set.points().to_vec();
    let fam = FunctionFamily::new(centers.clone(), q, |i, x| 3.0 * (-2.0 * geodesic_distance(x, &centers[i]) / q).exp());
    let grid = sup_grid(&set, DEFAULT_SUP_DENSITY);
    assert!(grid.len() >= MIN_SUP_GRID);
    let fit = fit_decay(&fam, &grid, 8, 1).unwrap();
    assert_abs_diff_eq!(fit.amplitude, 3.0, epsilon = 1e-6);
    assert_abs_diff_eq!(fit.rate, 2.0, epsilon = 1e-6);
    assert!(fit.decays);
}

#[test]
fn constant_family_does_not_decay() {
    let set = generate_fibonacci(20).unwrap();
    let fam = FunctionFamily::new(set.points().to_vec(), set.separation_radius(), |_, _| 1.0);
    let fit = fit_decay(&fam, &sup_grid(&set, 20), 4, 1).unwrap();
    assert_eq!(fit.rate, 0.0);
    assert!(!fit.decays);
    assert_abs_diff_eq!(fit.amplitude, 1.0, epsilon = 1e-12);
}

#[test]
fn silent_family_is_insufficient_signal() {
    let set = generate_fibonacci(20).unwrap();
    let fam = FunctionFamily::new(set.points().to_vec(), set.separation_radius(), |_, _| 1e-20);
    assert!(matches!(
        fit_decay(&fam, &sup_grid(&set, 20), 4, 1),
        Err(Error::InsufficientSignal { .. })
    ));
}

#[test]
fn lagrange_envelope_covers_every_sample() {
    let (set, b) = basis(400);
    let grid = sup_grid(&set, DEFAULT_SUP_DENSITY);
    let idx = center_subset(b.len(), 32, 9);
    let samples = decay_samples(&b, &grid, &idx);
    let fit = fit_envelope(&samples, b.noise_floor()).unwrap();
    assert!(fit.rate > 0.0);
    let violations = samples
        .iter()
        .filter(|(t, y)| *y > fit.floor && *y > fit.bound(*t) * (1.0 + 1e-12))
        .count();
    assert_eq!(violations, 0);
}

#[test]
fn decay_is_scale_covariant() {
    let (set, b) = basis(100);
    let grid = sup_grid(&set, 20);
    let plain = fit_decay(&b, &grid, 16, 4).unwrap();
    for p in [1.0, 2.0, f64::INFINITY] {
        let r = RenormalizedBasis::new(&b, p).unwrap();
        let fit = fit_decay(&r, &grid, 16, 4).unwrap();
        assert_relative_eq!(fit.amplitude, plain.amplitude * r.scale(), max_relative = 1e-9);
        assert_relative_eq!(fit.rate, plain.rate, max_relative = 1e-9);
    }
}

#[test]
fn holder_examples() {
    let set = generate_fibonacci(30).unwrap();
    let q = set.separation_radius();
    let flat = FunctionFamily::new(set.points().to_vec(), q, |_, _| 2.5);
    assert_eq!(fit_holder(&flat, 0.5, 256, 8, 1).unwrap().constant, 0.0);

    let centers = set.points().to_vec();
    let root = FunctionFamily::new(centers.clone(), q, |i, x| (geodesic_distance(x, &centers[i]) / q).sqrt());
    let fit = fit_holder(&root, 0.5, 512, 8, 1).unwrap();
    assert_abs_diff_eq!(fit.constant, 1.0, epsilon = 1e-9);
    assert_eq!(fit.pairs, 512);

    assert!(matches!(fit_holder(&root, 0.0, 8, 1, 1), Err(Error::Domain(_))));
    assert!(matches!(fit_holder(&root, 1.5, 8, 1, 1), Err(Error::Domain(_))));
}

#[test]
fn lebesgue_examples() {
    let set = PointSet::singleton(SpherePoint::north());
    let b = solve_lagrange(&sobolev(), &set).unwrap();
    let grid = sup_grid(&set, 20);
    assert_abs_diff_eq!(lebesgue_constant(&b, &grid), 1.0, epsilon = 1e-12);

    let (set, b) = basis(100);
    let grid = sup_grid(&set, 20);
    let l = lebesgue_constant(&b, &grid);
    assert!(l >= 1.0 - 1e-9);
    assert!(lebesgue_constant(&b, &set.points()[..1]) >= 1.0 - 1e-9);
    let sup_max = (0..b.len())
        .map(|i| grid.iter().map(|x| b.eval(i, x).abs()).fold(0.0, f64::max))
        .fold(0.0, f64::max);
    assert!(l <= b.len() as f64 * sup_max);
}

#[test]
fn riesz_examples() {
    assert_eq!(riesz_bounds(&DMatrix::identity(3, 3)).unwrap(), (1.0, 1.0));
    let (c1, c2) = riesz_bounds(&DMatrix::from_diagonal(&nalgebra::dvector![4.0, 9.0])).unwrap();
    assert_abs_diff_eq!(c1, 2.0, epsilon = 1e-14);
    assert_abs_diff_eq!(c2, 3.0, epsilon = 1e-14);
    let indefinite = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]);
    assert!(matches!(riesz_bounds(&indefinite), Err(Error::Numerical(_))));
}

#[test]
fn lp_ratio_for_single_center_is_homogeneous() {
    let set = PointSet::singleton(SpherePoint::from_spherical(0.3, 1.2));
    let b = solve_lagrange(&sobolev(), &set).unwrap();
    let rule = QuadratureRule::product(64, 128).unwrap();
    let grid = sup_grid(&set, 20);
    for r in check_lp_condition(&b, &[1.0, 2.0, 3.5, f64::INFINITY], 40, &rule, &grid, 7).unwrap() {
        assert_relative_eq!(r.lower, r.upper, max_relative = 1e-12);
    }
}

#[test]
fn lp_ratio_sup_sampling() {
    let (set, b) = basis(100);
    let rule = QuadratureRule::for_mesh_norm(set.mesh_norm()).unwrap();
    let grid = sup_grid(&set, 20);

    let mut single = DMatrix::zeros(b.len(), 1);
    single[(17, 0)] = 1.0;
    let r = lp_ratios(&b, &single, &[f64::INFINITY], &rule, &grid).unwrap();
    assert!(r[0].lower >= 1.0 - 1e-9);
    assert_abs_diff_eq!(r[0].lower, r[0].upper);

    let ratios = check_lp_condition(&b, &[1.0, 2.0, f64::INFINITY], 32, &rule, &grid, 1).unwrap();
    for r in &ratios {
        assert!(r.lower <= r.upper);
    }
    assert!(ratios[2].lower >= 1.0 - 1e-9);

    assert!(matches!(
        check_lp_condition(&b, &[2.0], 31, &rule, &grid, 1),
        Err(Error::Domain(_))
    ));
    assert!(matches!(
        check_lp_condition(&b, &[0.5], 32, &rule, &grid, 1),
        Err(Error::Domain(_))
    ));
}

#[test]
fn nikolskii_examples() {
    let (set, b) = basis(100);
    let rule = QuadratureRule::for_mesh_norm(set.mesh_norm()).unwrap();
    let grid = sup_grid(&set, 20);
    let coeffs = gaussian_coefficients(b.len(), 8, 3);
    assert_eq!(nikolskii_ratio(&b, &coeffs, 2.0, 2.0, &rule, &grid).unwrap(), 1.0);
    assert!(matches!(
        nikolskii_ratio(&b, &coeffs, 2.0, 1.0, &rule, &grid),
        Err(Error::Domain(_))
    ));

    // One Lagrange function against direct quadrature.
    let mut single = DMatrix::zeros(b.len(), 1);
    single[(5, 0)] = 1.0;
    let direct = {
        let chi = |x: &SpherePoint| b.eval(5, x);
        let n1 = rule.lp_norm(chi, 1.0, &grid).unwrap();
        let n2 = rule.lp_norm(chi, 2.0, &grid).unwrap();
        n2 * b.separation_radius().powf(1.0) / n1
    };
    assert_relative_eq!(
        nikolskii_ratio(&b, &single, 1.0, 2.0, &rule, &grid).unwrap(),
        direct,
        max_relative = 1e-12
    );

    // Constant function: (4 pi)^(1/r - 1/p) q^(2 (1/p - 1/r)).
    let q = 0.2;
    let flat = FunctionFamily::new(vec![SpherePoint::north()], q, |_, _| 1.0);
    let one = DMatrix::from_element(1, 1, 1.0);
    for (p, r) in [(1.0, 2.0), (2.0, f64::INFINITY), (1.0, f64::INFINITY)] {
        let expected = (4.0 * PI).powf(1.0 / r - 1.0 / p) * q.powf(2.0 * (1.0 / p - 1.0 / r));
        let got = nikolskii_ratio(&flat, &one, p, r, &rule, &grid).unwrap();
        assert_relative_eq!(got, expected, max_relative = 1e-10);
        assert!(got <= 1.0);
    }
}

#[test]
fn report_invariants_and_csv() {
    let (set, b) = basis(100);
    let rule = QuadratureRule::for_mesh_norm(set.mesh_norm()).unwrap();
    let r2 = RenormalizedBasis::new(&b, 2.0).unwrap();
    let g = kernel_lsq::gram::assemble_gram(&r2, &rule).unwrap();
    let report = StabilityReport::measure(&b, &set, &rule, &g.entries, &StabilityConfig::default()).unwrap();
    assert!(report.decay.rate > 0.0 && report.decay.amplitude > 0.0);
    assert!(report.riesz_lower <= report.riesz_upper);
    assert!(report.lebesgue_constant >= 1.0);
    for r in &report.per_p_ratios {
        assert!(r.lower <= r.upper);
        assert!(r.lower >= report.riesz_lower / 2.0 && r.upper <= 2.0 * report.riesz_upper, "{r:?}");
    }
    assert_eq!(report.nikolskii.len(), 2);
    assert!(report.nikolskii.iter().all(|c| !c.flagged));

    let mut out = Vec::new();
    write_stability_csv(&mut out, std::slice::from_ref(&report)).unwrap();
    let text = String::from_utf8(out).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "n,h,q,rho,C1,nu,C2,eps,lebesgue,c1,c2,p,lower,upper,seed");
    let rows: Vec<_> = lines.collect();
    assert_eq!(rows.len(), 3);
    assert!(rows[2].contains(",inf,"));

    let back: StabilityReport = serde_json::from_str(&report.to_json().unwrap()).unwrap();
    assert_eq!(back, report);
}
