use std::f64::consts::PI;

use approx::assert_abs_diff_eq;
use kernel_lsq::geometry::{icosahedral_grid, SpherePoint};
use kernel_lsq::kernel::legendre::harmonic_count;
use kernel_lsq::kernel::{real_harmonics, sobolev_kernel};
use kernel_lsq::quadrature::QuadratureRule;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn single_ring_has_full_mass() {
    let r = QuadratureRule::product(1, 1).unwrap();
    assert_abs_diff_eq!(r.integrate(|_| 1.0).unwrap(), 4.0 * PI, epsilon = 1e-12);
}

#[test]
fn polynomial_examples() {
    let r = QuadratureRule::product(8, 16).unwrap();
    assert_abs_diff_eq!(r.integrate(|_| 1.0).unwrap(), 4.0 * PI, epsilon = 1e-12);
    assert_abs_diff_eq!(r.integrate(|p| p.z).unwrap(), 0.0, epsilon = 1e-13);
    assert_abs_diff_eq!(r.integrate(|p| p.z * p.z).unwrap(), 4.0 * PI / 3.0, epsilon = 1e-12);
    let two = QuadratureRule::product(2, 4).unwrap();
    assert_abs_diff_eq!(two.integrate(|p| p.z * p.z).unwrap(), 4.0 * PI / 3.0, epsilon = 1e-12);
}

#[test]
fn kernel_section_integrates_to_its_mean() {
    // Only the degree-zero term survives: 4 pi c_0 = (1/2)^-4 = 16.
    let k = sobolev_kernel(4.0, 1e-10).unwrap();
    let kernel = kernel_lsq::kernel::Kernel::from_series(k);
    let north = SpherePoint::north();
    let r = QuadratureRule::product(256, 512).unwrap();
    let v = r.integrate(|x| kernel.eval(north.dot(x))).unwrap();
    assert_abs_diff_eq!(v, 16.0, epsilon = 1e-8);
}

#[test]
fn refinement_converges() {
    let kernel = kernel_lsq::kernel::Kernel::from_series(sobolev_kernel(4.0, 1e-10).unwrap());
    let p = SpherePoint::new(0.3, -0.2, 0.9).unwrap();
    let f = |x: &SpherePoint| kernel.eval(p.dot(x));
    let coarse = QuadratureRule::product(128, 256).unwrap().integrate(f).unwrap();
    let fine = QuadratureRule::product(256, 512).unwrap().integrate(f).unwrap();
    assert!((coarse - fine).abs() < 1e-8, "{:e}", (coarse - fine).abs());
}

#[test]
fn inner_products_and_norms() {
    let r = QuadratureRule::product(6, 12).unwrap();
    let grid = icosahedral_grid(8);
    assert_abs_diff_eq!(r.inner_product(|_| 1.0, |_| 1.0).unwrap(), 4.0 * PI, epsilon = 1e-12);
    assert_abs_diff_eq!(r.inner_product(|p| p.z, |p| p.z).unwrap(), 4.0 * PI / 3.0, epsilon = 1e-12);
    for p in [1.0, 1.5, 2.0, 7.0] {
        let n = r.lp_norm(|_| 1.0, p, &grid).unwrap();
        assert_abs_diff_eq!(n, (4.0 * PI).powf(1.0 / p), epsilon = 1e-12);
    }
    assert_abs_diff_eq!(r.lp_norm(|_| 1.0, f64::INFINITY, &grid).unwrap(), 1.0);
    assert_abs_diff_eq!(r.lp_norm(|p| p.z, f64::INFINITY, &grid).unwrap(), 1.0, epsilon = 1e-15);
}

#[test]
fn non_finite_samples_are_rejected() {
    let r = QuadratureRule::product(4, 8).unwrap();
    assert!(matches!(
        r.integrate(|p| if p.z > 0.0 { f64::NAN } else { 0.0 }),
        Err(kernel_lsq::Error::Numerical(_))
    ));
    assert!(r.lp_norm(|_| 1.0, 0.5, &[]).is_err());
}

#[test]
fn exact_on_random_harmonics() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let r = QuadratureRule::product(12, 24).unwrap();
    let degree = r.exactness_degree();
    assert_eq!(degree, 23);
    for _ in 0..5 {
        let c: Vec<f64> = (0..harmonic_count(degree)).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let f = |x: &SpherePoint| {
            real_harmonics(degree, x).iter().zip(&c).map(|(y, c)| y * c).sum::<f64>()
        };
        // Y_00 = 1 / sqrt(4 pi).
        assert_abs_diff_eq!(r.integrate(f).unwrap(), c[0] * (4.0 * PI).sqrt(), epsilon = 1e-10);
    }
}

#[test]
fn csv_export() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("rule.csv");
    let r = QuadratureRule::product(3, 6).unwrap();
    r.write_csv(&path).unwrap();
    let text = std::fs::read_to_string(&path).unwrap();
    assert!(text.starts_with("x,y,z,w"));
    assert_eq!(text.lines().count(), 1 + 18);
}

#[test]
fn default_rule_follows_mesh_norm() {
    assert_eq!(QuadratureRule::for_mesh_norm(1.0).unwrap().len(), 64 * 128);
    assert_eq!(QuadratureRule::for_mesh_norm(0.067).unwrap().len(), 120 * 240);
    assert!(QuadratureRule::for_mesh_norm(0.0).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]
    #[test]
    fn normalized_norms_grow_with_p(a in -2.0f64..2.0, b in -2.0f64..2.0, c in -2.0f64..2.0) {
        let r = QuadratureRule::product(16, 32).unwrap();
        let grid = icosahedral_grid(16);
        let f = |x: &SpherePoint| (a * x.x + b * x.y * x.z + c * x.z).exp();
        let mut last = 0.0;
        for p in [1.0, 1.5, 2.0, 3.0, 6.0] {
            let n = r.lp_norm(f, p, &grid).unwrap() / (4.0 * PI).powf(1.0 / p);
            prop_assert!(n >= last * (1.0 - 1e-12));
            last = n;
        }
    }
}
