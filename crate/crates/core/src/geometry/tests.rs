use std::f64::consts::FRAC_PI_4;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::fields::{CoefField, JetFrame};
use super::*;
use crate::exprdsl::{eval_value, parse};
use crate::numlin::sub as vsub;
use crate::testsupport::*;

const PHI: f64 = 1.618033988749895;

#[test]
fn example1_frame_and_metric() {
    let scn = example1(1, 1, FRAC_PI_4);
    let g = scn.frame_at(&[1.0, 1.0]).unwrap();
    let z1 = &g.coord_frame[0];
    let z2 = &g.coord_frame[1];
    assert!((z1[0] - FRAC_PI_4.cos()).abs() < 1e-15);
    assert!((z1[1] - FRAC_PI_4.sin()).abs() < 1e-15);
    assert_eq!(z1[2], 0.0);
    assert_eq!(z2[2], 1.0);
    assert!((z2[3] - PHI).abs() < 1e-14);
    // g = du^2 + (phi + 2) dv^2
    assert!((g.induced_metric.get(0, 0) - 1.0).abs() < 1e-13);
    assert!((g.induced_metric.get(1, 1) - (PHI + 2.0)).abs() < 1e-13);
    assert!(g.induced_metric.get(0, 1).abs() < 1e-15);
    assert_eq!(g.tangent.rank(), 2);
    assert_eq!(g.normal.rank(), 2);
}

#[test]
fn example1_metric_matches_closed_form_for_general_pq() {
    for (p, q) in [(1u32, 1u32), (2, 1), (3, 2)] {
        let scn = example1(p, q, 0.9);
        let g = scn.frame_at(&[1.3, -0.4]).unwrap();
        let sigma = scn.structure.params.sigma;
        let expect = (p as f64 * sigma + 2.0 * q as f64) / q as f64;
        assert!((g.induced_metric.get(1, 1) - expect).abs() < 1e-12);
    }
}

#[test]
fn example2_frame_norms() {
    for (p, q) in [(1u32, 1u32), (2, 3)] {
        let scn = example2(p, q, FRAC_PI_4);
        let g = scn.frame_at(&[1.0, 0.3, -0.2]).unwrap();
        let sigma = scn.structure.params.sigma;
        let (pf, qf) = (p as f64, q as f64);
        let n1 = crate::numlin::norm(&g.coord_frame[0]);
        let n2sq = crate::numlin::dot(&g.coord_frame[1], &g.coord_frame[1]);
        let n3sq = crate::numlin::dot(&g.coord_frame[2], &g.coord_frame[2]);
        assert!((n1 - 1.0).abs() < 1e-12);
        assert!((n2sq - (pf * sigma + 2.0 * qf) / qf).abs() < 1e-12);
        assert!((n3sq - (pf * sigma + 2.0 * qf) / (pf * sigma + qf)).abs() < 1e-12);
    }
}

#[test]
fn linear_immersion_has_zero_hessians() {
    let scn = linear_graph();
    let g = scn.frame_at(&[0.2, -0.7]).unwrap();
    for row in &g.hessians {
        for h in row {
            assert!(h.iter().all(|&x| x == 0.0));
        }
    }
}

#[test]
fn degenerate_jacobian_is_an_error() {
    let vars = ["u", "v"];
    let scn = ImmersionScenario {
        name: "degenerate".into(),
        param_names: vec!["u".into(), "v".into()],
        extra_consts: Default::default(),
        components: ["u", "u", "0"]
            .iter()
            .map(|s| parse(s, &vars, &[]).unwrap())
            .collect(),
        structure: crate::metallic::diagonal_structure(
            &[crate::metallic::AxisRoot::Sigma; 3],
            crate::metallic::metallic_number(1, 1),
        ),
        distributions: vec![],
        domain: vec![(-1.0, 1.0), (-1.0, 1.0)],
        sampling: Sampling { count: 4, seed: 1 },
    };
    let err = scn.frame_at(&[0.5, 0.5]).unwrap_err();
    match err {
        Error::DegenerateImmersion { rank, expected, .. } => {
            assert_eq!(rank, 1);
            assert_eq!(expected, 2);
        }
        other => panic!("expected degenerate immersion, got {other:?}"),
    }
}

#[test]
fn example1_induced_ops_split() {
    let scn = example1(1, 1, FRAC_PI_4);
    let g = scn.frame_at(&[1.0, 1.0]).unwrap();
    let ops = induced_ops(&g, &scn.structure);
    // T Z2 = 0 and N Z2 = J Z2 (Z2 spans the anti-invariant direction)
    let tz2 = ops.t_tan(&[0.0, 1.0]);
    assert!(g.g_norm(&tz2) < 1e-13);
    let jz2 = scn.structure.apply(&g.coord_frame[1]);
    let nz2 = g.normal.from_coords(&ops.n_tan(&[0.0, 1.0]));
    assert!(crate::numlin::norm(&vsub(&jz2, &nz2)) < 1e-13);
    // <T Z1, Z1> = sigma cos^2 t + sigma_bar sin^2 t = p/2 at t = pi/4.
    // Oracle: direct numeric projection of J Z1 onto Z1.
    let tz1 = g.ambient_from_coords(&ops.t_tan(&[1.0, 0.0]));
    let direct = crate::numlin::dot(&scn.structure.apply(&g.coord_frame[0]), &g.coord_frame[0]);
    assert!((crate::numlin::dot(&tz1, &g.coord_frame[0]) - direct).abs() < 1e-13);
    assert!((direct - 0.5).abs() < 1e-13);
}

#[test]
fn all_sigma_structure_acts_invariantly() {
    let scn = example1_all_sigma(1, 1, 0.8);
    let sigma = scn.structure.params.sigma;
    let g = scn.frame_at(&[1.1, 0.4]).unwrap();
    let ops = induced_ops(&g, &scn.structure);
    for i in 0..2 {
        for j in 0..2 {
            let want = if i == j { sigma } else { 0.0 };
            assert!((ops.tt.get(i, j) - want).abs() < 1e-12);
        }
    }
    assert!(ops.nt.max_abs() < 1e-12);
}

#[test]
fn induced_ops_structural_symmetries() {
    let scn = paraboloid();
    let g = scn.frame_at(&[0.3, -0.5]).unwrap();
    let ops = induced_ops(&g, &scn.structure);
    // G T is symmetric (T is g-symmetric)
    let gt = g.induced_metric.matmul(&ops.tt);
    assert!(gt.symmetry_residual() < 1e-13);
    // n is symmetric in the orthonormal normal basis
    assert!(ops.nn.symmetry_residual() < 1e-13);
    // adjointness: N^T = G t  (i.e. <N X, U> = <X, t U>)
    let gtn = g.induced_metric.matmul(&ops.tn);
    assert!(ops.nt.transpose().sub(&gtn).max_abs() < 1e-13);
}

#[test]
fn totally_geodesic_examples_have_zero_h() {
    for scn in [example1(1, 1, 0.7), example2(2, 1, 0.7)] {
        let g = scn.frame_at(&scn.sample_points(1, 3)[0]).unwrap();
        let k = g.dim();
        let x: Vec<f64> = (0..k).map(|i| 0.7 - 0.3 * i as f64).collect();
        let y: Vec<f64> = (0..k).map(|i| 0.1 + 0.4 * i as f64).collect();
        let h = second_fundamental_form(&g, &x, &y);
        assert!(crate::numlin::norm(&h) < 1e-14);
    }
}

#[test]
fn paraboloid_h_matches_hessian_normal_part() {
    let scn = paraboloid();
    let g = scn.frame_at(&[0.25, -0.4]).unwrap();
    let h = second_fundamental_form(&g, &[1.0, 0.0], &[1.0, 0.0]);
    // d^2 f / du^2 = (0, 0, 2, 0); oracle: project it with an independently
    // assembled normal projector built from the explicit normal fields.
    let raw = [0.0, 0.0, 2.0, 0.0];
    let nu1 = [-2.0 * 0.25, 2.0 * 0.4, 1.0, 0.0];
    let nu2 = [0.0, 0.0, 0.0, 1.0];
    let c1 = crate::numlin::dot(&raw, &nu1) / crate::numlin::dot(&nu1, &nu1);
    let c2 = crate::numlin::dot(&raw, &nu2) / crate::numlin::dot(&nu2, &nu2);
    let expected: Vec<f64> = (0..4).map(|i| c1 * nu1[i] + c2 * nu2[i]).collect();
    assert!(crate::numlin::norm(&vsub(&h, &expected)) < 1e-13);
}

#[test]
fn h_is_symmetric_in_its_arguments() {
    let scn = paraboloid();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..20 {
        let pt = scn.sample_points(1, rng.gen())[0].clone();
        let g = scn.frame_at(&pt).unwrap();
        let x: Vec<f64> = (0..2).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let y: Vec<f64> = (0..2).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let a = second_fundamental_form(&g, &x, &y);
        let b = second_fundamental_form(&g, &y, &x);
        assert!(crate::numlin::norm(&vsub(&a, &b)) < 1e-12);
    }
}

#[test]
fn shape_operator_vanishes_when_totally_geodesic() {
    let scn = example1(2, 2, 0.5);
    let g = scn.frame_at(&[1.0, 0.2]).unwrap();
    let v = g.normal.basis()[0].clone();
    assert!(shape_operator(&g, &v).max_abs() < 1e-13);
}

#[test]
fn paraboloid_shape_operator_at_flat_point() {
    let scn = paraboloid();
    let g = scn.frame_at(&[0.0, 0.0]).unwrap();
    // M_ij = 2 delta_ij and G = I at the origin, so A_V = 2 Id.
    let a = shape_operator(&g, &[0.0, 0.0, 1.0, 0.0]);
    assert!(a.sub(&Mat::identity(2).scaled(2.0)).max_abs() < 1e-14);
}

#[test]
fn shape_operator_is_adjoint_to_h() {
    let scn = paraboloid();
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for _ in 0..100 {
        let pt = scn.sample_points(1, rng.gen())[0].clone();
        let g = scn.frame_at(&pt).unwrap();
        let x: Vec<f64> = (0..2).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let y: Vec<f64> = (0..2).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let vn: Vec<f64> = (0..2).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let v = g.normal.from_coords(&vn);
        let lhs = crate::numlin::dot(&second_fundamental_form(&g, &x, &y), &v);
        let av = shape_operator(&g, &v);
        let rhs = g.g_inner(&av.matvec(&x), &y);
        assert!(
            (lhs - rhs).abs() < 1e-10,
            "bilinear residual {} at {pt:?}",
            (lhs - rhs).abs()
        );
    }
}

/// Finite-difference oracle for the induced connection: centrally difference
/// the pushed-forward field along X and project tangentially at the base.
fn fd_tangent_connection(
    scn: &ImmersionScenario<f64>,
    x_field: &[crate::exprdsl::Expr],
    y_field: &[crate::exprdsl::Expr],
    point: &[f64],
    h: f64,
) -> Vec<f64> {
    let consts = scn.const_map();
    let g = scn.frame_at(point).unwrap();
    let xv: Vec<f64> = x_field
        .iter()
        .map(|e| eval_value(e, point, &consts).unwrap())
        .collect();
    let push = |pt: &[f64]| -> Vec<f64> {
        let gg = scn.frame_at(pt).unwrap();
        let yv: Vec<f64> = y_field
            .iter()
            .map(|e| eval_value(e, pt, &consts).unwrap())
            .collect();
        gg.ambient_from_coords(&yv)
    };
    let plus: Vec<f64> = point.iter().zip(&xv).map(|(p, x)| p + h * x).collect();
    let minus: Vec<f64> = point.iter().zip(&xv).map(|(p, x)| p - h * x).collect();
    let diff: Vec<f64> = push(&plus)
        .iter()
        .zip(push(&minus))
        .map(|(a, b)| (a - b) / (2.0 * h))
        .collect();
    g.tangent_coords(&diff)
}

#[test]
fn tangent_connection_vanishes_on_flat_coordinates() {
    let scn = linear_graph();
    let x = vec![parse("1", &["u", "v"], &[]).unwrap(), parse("0", &["u", "v"], &[]).unwrap()];
    let y = vec![parse("0", &["u", "v"], &[]).unwrap(), parse("1", &["u", "v"], &[]).unwrap()];
    let c = tangent_connection(&scn, &x, &y, &[0.3, 0.4]).unwrap();
    assert!(crate::numlin::norm(&c) < 1e-15);
}

#[test]
fn tangent_connection_matches_finite_differences() {
    let scn = paraboloid();
    let vars = ["u", "v"];
    let x = vec![
        parse("1+0.3*v", &vars, &[]).unwrap(),
        parse("u-0.5", &vars, &[]).unwrap(),
    ];
    let y = vec![
        parse("0.7*u", &vars, &[]).unwrap(),
        parse("1-0.2*u*v", &vars, &[]).unwrap(),
    ];
    for pt in [[0.0, 0.0], [0.31, -0.42]] {
        let exact = tangent_connection(&scn, &x, &y, &pt).unwrap();
        let fd = fd_tangent_connection(&scn, &x, &y, &pt, 1e-5);
        for (a, b) in exact.iter().zip(&fd) {
            assert!((a - b).abs() < 1e-6, "exact {a} vs fd {b}");
        }
    }
}

#[test]
fn tangent_connection_is_metric_compatible() {
    let scn = paraboloid();
    let vars = ["u", "v"];
    let consts = scn.const_map();
    let x = vec![
        parse("0.4-v", &vars, &[]).unwrap(),
        parse("1+0.2*u", &vars, &[]).unwrap(),
    ];
    let y = vec![
        parse("u+1", &vars, &[]).unwrap(),
        parse("0.3*v", &vars, &[]).unwrap(),
    ];
    let z = vec![
        parse("0.5", &vars, &[]).unwrap(),
        parse("1-u", &vars, &[]).unwrap(),
    ];
    let pt = [0.2, -0.3];
    let frame = JetFrame::new(scn.frame_at(&pt).unwrap()).unwrap();
    let cx = CoefField::eval(&x, &pt, &consts).unwrap();
    let cy = CoefField::eval(&y, &pt, &consts).unwrap();
    let cz = CoefField::eval(&z, &pt, &consts).unwrap();
    let yf = frame.tangent_field(&cy);
    let zf = frame.tangent_field(&cz);
    // X<Y, Z> from the product-rule gradient of the ambient inner product
    let xv = cx.values();
    let mut xdot = 0.0;
    for (i, &xi) in xv.iter().enumerate() {
        xdot += xi
            * (crate::numlin::dot(&yf.partials[i], &zf.value)
                + crate::numlin::dot(&yf.value, &zf.partials[i]));
    }
    let ny = tangent_connection(&scn, &x, &y, &pt).unwrap();
    let nz = tangent_connection(&scn, &x, &z, &pt).unwrap();
    let rhs = crate::numlin::dot(&frame.geom.ambient_from_coords(&ny), &zf.value)
        + crate::numlin::dot(&yf.value, &frame.geom.ambient_from_coords(&nz));
    assert!((xdot - rhs).abs() < 1e-9, "residual {}", (xdot - rhs).abs());
}

#[test]
fn normal_connection_constant_normal_is_zero() {
    let scn = linear_graph();
    let vars = ["u", "v"];
    let x = vec![parse("1", &vars, &[]).unwrap(), parse("-2", &vars, &[]).unwrap()];
    let v = ["0", "0", "1", "0"]
        .iter()
        .map(|s| parse(s, &vars, &[]).unwrap())
        .collect::<Vec<_>>();
    let c = normal_connection(&scn, &x, &v, &[0.1, 0.1]).unwrap();
    assert!(crate::numlin::norm(&c) < 1e-15);
}

#[test]
fn normal_connection_rejects_non_normal_field() {
    let scn = paraboloid();
    let vars = ["u", "v"];
    let x = vec![parse("1", &vars, &[]).unwrap(), parse("0", &vars, &[]).unwrap()];
    let v = ["1", "0", "0", "0"]
        .iter()
        .map(|s| parse(s, &vars, &[]).unwrap())
        .collect::<Vec<_>>();
    let err = normal_connection(&scn, &x, &v, &[0.3, 0.2]).unwrap_err();
    assert!(matches!(err, Error::NotANormalField { .. }));
}

#[test]
fn weingarten_reconstruction() {
    // ambient derivative of a normal field = -A_V X + normal connection part
    let scn = paraboloid();
    let vars = ["u", "v"];
    let consts = scn.const_map();
    let x = vec![
        parse("1-0.2*v", &vars, &[]).unwrap(),
        parse("0.5+u", &vars, &[]).unwrap(),
    ];
    let v_exprs = ["-2*u", "-2*v", "1", "0"]
        .iter()
        .map(|s| parse(s, &vars, &[]).unwrap())
        .collect::<Vec<_>>();
    let pt = [0.2, 0.35];
    let frame = JetFrame::new(scn.frame_at(&pt).unwrap()).unwrap();
    let g = &frame.geom;
    let vf = frame.ambient_expr_field(&v_exprs, &consts).unwrap();
    let cx = CoefField::eval(&x, &pt, &consts).unwrap();
    let full = vf.dirderiv(&cx.values());

    let av = shape_operator(g, &vf.value);
    let minus_avx = g.ambient_from_coords(&av.matvec(&cx.values()));
    let nc = normal_connection(&scn, &x, &v_exprs, &pt).unwrap();
    let normal_part = g.normal.from_coords(&nc);
    let recon: Vec<f64> = normal_part
        .iter()
        .zip(&minus_avx)
        .map(|(n, a)| n - a)
        .collect();
    assert!(
        crate::numlin::norm(&vsub(&full, &recon)) < 1e-9,
        "residual {}",
        crate::numlin::norm(&vsub(&full, &recon))
    );
}

#[test]
fn normal_connection_is_metric_compatible() {
    let scn = paraboloid();
    let vars = ["u", "v"];
    let consts = scn.const_map();
    let x = vec![
        parse("0.8", &vars, &[]).unwrap(),
        parse("1+0.1*u", &vars, &[]).unwrap(),
    ];
    let v_exprs = ["-2*u", "-2*v", "1", "0"]
        .iter()
        .map(|s| parse(s, &vars, &[]).unwrap())
        .collect::<Vec<_>>();
    let w_exprs = ["0", "0", "0", "1"]
        .iter()
        .map(|s| parse(s, &vars, &[]).unwrap())
        .collect::<Vec<_>>();
    let pt = [0.15, -0.25];
    let frame = JetFrame::new(scn.frame_at(&pt).unwrap()).unwrap();
    let g = &frame.geom;
    let vf = frame.ambient_expr_field(&v_exprs, &consts).unwrap();
    let wf = frame.ambient_expr_field(&w_exprs, &consts).unwrap();
    let cx = CoefField::eval(&x, &pt, &consts).unwrap();
    let xv = cx.values();
    let mut xdot = 0.0;
    for (i, &xi) in xv.iter().enumerate() {
        xdot += xi
            * (crate::numlin::dot(&vf.partials[i], &wf.value)
                + crate::numlin::dot(&vf.value, &wf.partials[i]));
    }
    let dv = g.normal.from_coords(&normal_connection(&scn, &x, &v_exprs, &pt).unwrap());
    let dw = g.normal.from_coords(&normal_connection(&scn, &x, &w_exprs, &pt).unwrap());
    // The tangential (shape operator) parts of the ambient derivatives drop
    // out against the normal fields, so the normal connection alone must be
    // metric compatible.
    let rhs = crate::numlin::dot(&dv, &wf.value) + crate::numlin::dot(&vf.value, &dw);
    assert!((xdot - rhs).abs() < 1e-9, "residual {}", (xdot - rhs).abs());
}

#[test]
fn distribution_span_ranks() {
    let scn = example2(1, 1, FRAC_PI_4);
    let consts = scn.const_map();
    let g = scn.frame_at(&[1.0, 0.1, -0.3]).unwrap();
    let (coords, span) = distribution_span(&g, &scn.distributions[1], &consts).unwrap();
    assert_eq!(coords.len(), 2);
    assert_eq!(span.rank(), 2);
}
