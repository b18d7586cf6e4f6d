use std::f64::consts::PI;

use approx::{assert_abs_diff_eq, assert_relative_eq};
use kernel_lsq::geometry::{fibonacci_points, generate_fibonacci, PointSet, SpherePoint};
use kernel_lsq::gram::assemble_gram;
use kernel_lsq::kernel::{sobolev_kernel, Kernel};
use kernel_lsq::lagrange::{solve_lagrange, BasisFamily, FunctionFamily, LagrangeBasis, RenormalizedBasis};
use kernel_lsq::projector::*;
use kernel_lsq::quadrature::QuadratureRule;
use kernel_lsq::stability::{sup_grid, DEFAULT_SUP_DENSITY};
use kernel_lsq::Error;
use nalgebra::DMatrix;

fn sobolev() -> Kernel {
    Kernel::from_series(sobolev_kernel(4.0, 1e-10).unwrap())
}

struct Level {
    set: PointSet,
    basis: LagrangeBasis,
    rule: QuadratureRule,
    grid: Vec<SpherePoint>,
}

fn level(n: usize) -> Level {
    let set = generate_fibonacci(n).unwrap();
    let basis = solve_lagrange(&sobolev(), &set).unwrap();
    let rule = QuadratureRule::for_mesh_norm(set.mesh_norm()).unwrap();
    let grid = sup_grid(&set, DEFAULT_SUP_DENSITY);
    Level { set, basis, rule, grid }
}

fn samples(f: impl Fn(&SpherePoint) -> f64, points: &[SpherePoint]) -> DMatrix<f64> {
    DMatrix::from_iterator(points.len(), 1, points.iter().map(f))
}

#[test]
fn projector_fixes_its_range() {
    let l = level(100);
    let r2 = RenormalizedBasis::new(&l.basis, 2.0).unwrap();
    let projector = L2Projector::assemble(&r2, &l.rule).unwrap();
    let target = TestFunction::in_span(&sobolev(), l.set.points(), 5);
    let proj = projector.project(|x| target.eval(x)).unwrap();
    // f = sum f(xi) chi_xi = sum f(xi) / scale v_xi.
    for (j, x) in l.set.points().iter().enumerate() {
        assert_abs_diff_eq!(proj.coefficients[j], target.eval(x) / r2.scale(), epsilon = 1e-7);
    }
    assert!(best_error(&projector, &target, 2.0, &l.grid).unwrap() < 1e-7);
    assert!(best_error(&projector, &target, f64::INFINITY, &l.grid).unwrap() < 1e-7);

    let zero = projector.project(|_| 0.0).unwrap();
    assert!(zero.coefficients.iter().all(|c| *c == 0.0));
}

#[test]
fn projection_onto_constants() {
    let rule = QuadratureRule::product(16, 32).unwrap();
    let ones = FunctionFamily::new(vec![SpherePoint::north()], 1.0, |_, _| 1.0);
    let projector = L2Projector::assemble(&ones, &rule).unwrap();
    let odd = projector.project(|x| x.to_array()[2]).unwrap();
    assert_abs_diff_eq!(odd.coefficients[0], 0.0, epsilon = 1e-15);
    let shifted = projector.project(|x| 2.0 + x.to_array()[0] * x.to_array()[1]).unwrap();
    assert_abs_diff_eq!(shifted.coefficients[0], 2.0, epsilon = 1e-13);

    // K_T(x, y) = 1 / (4 pi): norm 1.
    let ginv = projector.gram_inverse().unwrap();
    assert_abs_diff_eq!(ginv[(0, 0)], 1.0 / (4.0 * PI), epsilon = 1e-14);
    let direct = projector_inf_norm_direct(&ones, &ginv, &rule, &fibonacci_points(20));
    assert_abs_diff_eq!(direct, 1.0, epsilon = 1e-13);
}

#[test]
fn pythagoras_and_interpolation_comparison() {
    let l = level(100);
    let r2 = RenormalizedBasis::new(&l.basis, 2.0).unwrap();
    let projector = L2Projector::assemble(&r2, &l.rule).unwrap();

    // g = h - T h is orthogonal to the space; f = f0 + g has T f = f0.
    let nodes = l.rule.nodes();
    let h = samples(|x| (3.0 * x.to_array()[0]).sin(), nodes);
    let th = projector.project_samples(&h).unwrap().remove(0);
    let th_nodes = r2.eval_combinations(nodes, &DMatrix::from_column_slice(100, 1, th.coefficients.as_slice()));
    let g = &h - th_nodes;
    let target = TestFunction::in_span(&sobolev(), l.set.points(), 2);
    let f = samples(|x| target.eval(x), nodes) + &g;
    let proj = projector.project_samples(&f).unwrap().remove(0);
    let coeffs = DMatrix::from_column_slice(100, 1, proj.coefficients.as_slice());
    let empty = DMatrix::zeros(0, 1);
    let err = difference_norms(&r2, &coeffs, &l.rule, &f, &[], &empty, &[2.0]).unwrap()[0][0];
    let g_norm = l.rule.lp_norm_samples(g.as_slice(), 2.0).unwrap();
    assert_relative_eq!(err, g_norm, max_relative = 1e-8);

    for t in [TestFunction::smooth(), TestFunction::rough(2.0).unwrap()] {
        let best = best_error(&projector, &t, 2.0, &l.grid).unwrap();
        let interp = interpolation_error(&l.basis, &t, 2.0, &l.rule, &l.grid).unwrap();
        assert!(best <= interp + 1e-9, "{}: {best} > {interp}", t.id());
    }
}

#[test]
fn idempotent_and_self_adjoint() {
    let l = level(100);
    let r2 = RenormalizedBasis::new(&l.basis, 2.0).unwrap();
    let projector = L2Projector::assemble(&r2, &l.rule).unwrap();
    let nodes = l.rule.nodes();
    let as_matrix = |c: &nalgebra::DVector<f64>| DMatrix::from_column_slice(c.len(), 1, c.as_slice());

    let f = samples(|x| (x.to_array()[0] * 2.0).exp(), nodes);
    let g = samples(|x| (4.0 * x.to_array()[2]).cos() + x.to_array()[1], nodes);
    let tf = projector.project_samples(&f).unwrap().remove(0);
    let tg = projector.project_samples(&g).unwrap().remove(0);
    let tf_nodes = r2.eval_combinations(nodes, &as_matrix(&tf.coefficients));
    let tg_nodes = r2.eval_combinations(nodes, &as_matrix(&tg.coefficients));

    let ttf = projector.project_samples(&tf_nodes).unwrap().remove(0);
    for (a, b) in ttf.coefficients.iter().zip(tf.coefficients.iter()) {
        assert_abs_diff_eq!(a, b, epsilon = 1e-7);
    }

    let lhs = l.rule.inner_product_samples(tf_nodes.as_slice(), g.as_slice()).unwrap();
    let rhs = l.rule.inner_product_samples(f.as_slice(), tg_nodes.as_slice()).unwrap();
    assert_relative_eq!(lhs, rhs, max_relative = 1e-10);
}

#[test]
fn basis_independence_against_kernel_translates() {
    let l = level(100);
    let r2 = RenormalizedBasis::new(&l.basis, 2.0).unwrap();
    let projector = L2Projector::assemble(&r2, &l.rule).unwrap();
    for t in [TestFunction::smooth(), TestFunction::rough(2.0).unwrap()] {
        let lagrange = projector.eval(&projector.project(|x| t.eval(x)).unwrap(), &l.grid);
        let dict = dictionary_projection(&sobolev(), &l.set, &t, &l.rule, &l.grid).unwrap();
        let worst = lagrange.iter().zip(&dict).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(worst <= 1e-6, "{}: {worst:e}", t.id());
    }
}

#[test]
fn single_center_operator_norms() {
    let set = PointSet::singleton(SpherePoint::from_spherical(1.0, 0.4));
    let b = solve_lagrange(&sobolev(), &set).unwrap();
    let r2 = RenormalizedBasis::new(&b, 2.0).unwrap();
    let rule = QuadratureRule::product(64, 128).unwrap();
    let grid = sup_grid(&set, 20);
    let q = set.separation_radius();

    let chi = |x: &SpherePoint| b.eval(0, x);
    let sup = grid.iter().map(chi).fold(0.0, |m: f64, v| m.max(v.abs()));
    let l1 = rule.lp_norm(chi, 1.0, &grid).unwrap();
    let l2 = rule.lp_norm(chi, 2.0, &grid).unwrap();

    let gram = assemble_gram(&r2, &rule).unwrap();
    let ginv_norm = 1.0 / gram.entries[(0, 0)];
    let norms = operator_norm_components(&r2, &rule, &grid, ginv_norm);
    assert_relative_eq!(norms.v_inf_norm, sup / q, max_relative = 1e-12);
    assert_relative_eq!(norms.vstar_inf_norm, l1 / q, max_relative = 1e-12);
    assert_relative_eq!(norms.synthesis_analysis_product, sup * l1 / (q * q), max_relative = 1e-12);

    let projector = L2Projector::new(&r2, &gram.entries, &rule).unwrap();
    let direct = projector_inf_norm_direct(&r2, &projector.gram_inverse().unwrap(), &rule, set.points());
    assert_relative_eq!(direct, sup * l1 / (l2 * l2), max_relative = 1e-10);
    assert!(direct <= norms.product_bound * (1.0 + 1e-12));
}

#[test]
fn orthonormal_indicators() {
    // Latitude bands aligned with the rings, normalized by their discrete
    // areas: orthonormal under the rule.
    let rule = QuadratureRule::product(8, 16).unwrap();
    let band = |x: &SpherePoint| ((x.to_array()[2] + 1.0) * 2.0).floor().min(3.0) as usize;
    let mut area = [0.0; 4];
    for (x, w) in rule.nodes().iter().zip(rule.weights()) {
        area[band(x)] += w;
    }
    let fam = FunctionFamily::new(fibonacci_points(4), 0.3, move |j, x| {
        if band(x) == j { 1.0 / area[j].sqrt() } else { 0.0 }
    });
    let gram = assemble_gram(&fam, &rule).unwrap();
    assert!(kernel_lsq::linalg::max_abs(&(&gram.entries - DMatrix::identity(4, 4))) < 1e-14);

    let grid = fibonacci_points(400);
    let norms = operator_norm_components(&fam, &rule, &grid, 1.0);
    let max_v = area.iter().map(|a| 1.0 / a.sqrt()).fold(0.0, f64::max);
    let max_int = area.iter().map(|a| a.sqrt()).fold(0.0, f64::max);
    assert_relative_eq!(norms.product_bound, max_v * max_int, max_relative = 1e-12);
}

#[test]
fn fibonacci_report_invariants() {
    let l = level(400);
    let r2 = RenormalizedBasis::new(&l.basis, 2.0).unwrap();
    let gram = assemble_gram(&r2, &l.rule).unwrap();
    let targets = [TestFunction::smooth(), TestFunction::rough(2.0).unwrap()];
    let ps = [1.0, 2.0, f64::INFINITY];
    let report = ProjectorReport::measure(&l.basis, &l.set, &l.rule, &gram.entries, &l.grid, &targets, &ps, 400).unwrap();
    let m = report.norms;
    assert!(m.product_bound.is_finite());
    assert_eq!(m.probe_points, 800);
    let direct = m.direct_tinf_estimate.unwrap();
    assert!(direct >= 1.0 && direct <= m.product_bound + 1e-9, "{m:?}");
    assert_eq!(report.errors.len(), 6);
    for row in &report.errors {
        assert!(row.error >= 0.0);
        if row.p == 2.0 {
            assert!(row.error <= row.interpolation_error + 1e-9, "{row:?}");
        }
    }

    let mut out = Vec::new();
    write_opnorm_csv(&mut out, std::slice::from_ref(&report)).unwrap();
    let text = String::from_utf8(out).unwrap();
    assert!(text.starts_with("n,Vinf,Vstarinf,Ginv,product,direct\n400,"));

    let back: ProjectorReport = serde_json::from_str(&report.to_json().unwrap()).unwrap();
    assert_eq!(back, report);
}

#[test]
fn smooth_target_has_fast_legendre_decay() {
    let c = TestFunction::smooth().legendre_coefficients(14).unwrap();
    for l in 1..12 {
        assert!(c[l + 1].abs() < c[l].abs() / l as f64, "l = {l}: {:?}", &c[l..l + 2]);
    }
    assert!(c[14].abs() < 1e-13);
    // exp(t) = sinh(1) + 3 (cosh 1 - sinh 1) P_1 + ...
    assert_abs_diff_eq!(c[0], 1f64.sinh(), epsilon = 1e-14);
    assert_abs_diff_eq!(c[1], 3.0 / 1f64.exp(), epsilon = 1e-14);

    let rough = TestFunction::rough(2.0).unwrap();
    let rc = rough.legendre_coefficients(40).unwrap();
    assert!(rc[32].abs() > 1e-4);
    assert!(TestFunction::in_span(&sobolev(), &fibonacci_points(3), 1).legendre_coefficients(4).is_none());
    assert_eq!(rough.profile(1.0).unwrap(), (0..ROUGH_TERMS).map(|k| 4f64.powi(-(k as i32))).sum::<f64>());
}

#[test]
fn rough_target_interpolation_rate() {
    let coarse = level(100);
    let fine = level(400);
    let t = TestFunction::rough(2.0).unwrap();
    let e0 = interpolation_error(&coarse.basis, &t, f64::INFINITY, &coarse.rule, &coarse.grid).unwrap();
    let e1 = interpolation_error(&fine.basis, &t, f64::INFINITY, &fine.rule, &fine.grid).unwrap();
    let order = observed_order(coarse.set.mesh_norm(), e0, fine.set.mesh_norm(), e1).unwrap();
    assert!((1.5..=2.5).contains(&order), "order {order}");
}

#[test]
fn convergence_study_examples() {
    let studies = convergence_study(&sobolev(), TestKind::Smooth, &[100, 400], &[2.0], 1).unwrap();
    assert_eq!(studies.len(), 1);
    let order = studies[0].order.unwrap();
    assert!(order >= 3.5, "order {order}");

    let span = convergence_study(&sobolev(), TestKind::InSpan, &[30, 60], &[2.0, f64::INFINITY], 1).unwrap();
    for s in &span {
        assert!(s.saturated, "{s:?}");
        assert_eq!(s.consecutive[1], None);
    }

    assert!(matches!(
        convergence_study(&sobolev(), TestKind::Smooth, &[100, 100], &[2.0], 1),
        Err(Error::Domain(_))
    ));
}

#[test]
fn projector_csv_orders() {
    let row = |e: f64| ErrorRow {
        function: "smooth".into(),
        p: 2.0,
        error: e,
        interpolation_error: 2.0 * e,
        orthogonality: 0.0,
    };
    let mesh = |h: f64| kernel_lsq::geometry::MeshStats { h, q: h / 2.0, rho: 2.0 };
    let norms = OperatorNorms {
        v_inf_norm: 1.0,
        vstar_inf_norm: 1.0,
        ginv_inf_norm: 1.0,
        product_bound: 1.0,
        synthesis_analysis_product: 1.0,
        direct_tinf_estimate: None,
        probe_points: 0,
    };
    let reports = vec![
        ProjectorReport { n: 10, mesh: mesh(0.4), norms, errors: vec![row(16.0)] },
        ProjectorReport { n: 40, mesh: mesh(0.2), norms, errors: vec![row(1.0)] },
    ];
    let mut out = Vec::new();
    write_projector_csv(&mut out, &reports).unwrap();
    let text = String::from_utf8(out).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "n,h,p,function,error,fitted_order");
    assert_eq!(lines[1], "10,0.4,2,smooth,16,");
    assert_eq!(lines[2], "40,0.2,2,smooth,1,4");

    let studies = convergence_studies(&reports).unwrap();
    assert_relative_eq!(studies[0].order.unwrap(), 4.0, max_relative = 1e-12);
}
