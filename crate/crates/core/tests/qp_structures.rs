use nalgebra::DVector;
use proptest::prelude::*;
use qham_forge::config::{Tolerances, MOMENT_AXIOM_SCALE, QP_BRACKET_CONSTANT};
use qham_forge::lie::LieGroupModel;
use qham_forge::numerics::numerical_rank;
use qham_forge::qp::*;
use qham_forge::rng::sample_rng;

fn model(id: &str) -> LieGroupModel {
    LieGroupModel::from_id(id).unwrap()
}

fn chart_points(space: &ChartedSpace, n: usize, seed: u64, scale: f64) -> Vec<DVector<f64>> {
    (0..n)
        .map(|i| space.random_chart_point(&mut sample_rng(seed, i as u64), scale))
        .collect()
}

fn basis(n: usize, i: usize) -> DVector<f64> {
    let mut e = DVector::zeros(n);
    e[i] = 1.0;
    e
}

#[test]
fn fundamental_fields_match_finite_differences() {
    for id in ["su2", "su3", "prod:su2,so3"] {
        let m = model(id);
        for kind in [SpaceKind::Conjugation, SpaceKind::Coadjoint, SpaceKind::Double] {
            let space = ChartedSpace::new(&m, kind);
            for (i, c) in chart_points(&space, 5, 11, 0.7).iter().enumerate() {
                let p = space.from_chart(c).unwrap();
                let x = space.random_chart_point(&mut sample_rng(12, i as u64), 1.0);
                let exact = space.fundamental_field(&x, &p).unwrap();
                let fd = space.fd_fundamental_field(&x, &p, 1e-5).unwrap();
                assert!((exact - fd).norm() < 1e-6, "{id} {kind:?}");
            }
        }
    }
}

#[test]
fn pg_vanishes_at_identity_and_on_torus() {
    let m = model("su3");
    let b = pg_bundle(&m);
    let e = SpacePoint::Group(vec![m.identity()]);
    assert_eq!(b.bivector(&e).unwrap().norm(), 0.0);

    let t = model("torus:3");
    let b = pg_bundle(&t);
    for c in chart_points(b.space(), 5, 3, 1.0) {
        let p = b.space().from_chart(&c).unwrap();
        assert_eq!(b.bivector(&p).unwrap().norm(), 0.0);
        assert_eq!(b.trivector(&p).unwrap().frobenius_norm(), 0.0);
    }
}

#[test]
fn pg_on_su2_has_rank_two() {
    let m = model("su2");
    let b = pg_bundle(&m);
    let g = m.exp(&(basis(3, 0) * 0.5));
    let c = b.bivector(&SpacePoint::Group(vec![g])).unwrap();
    assert!((&c + c.transpose()).norm() < 1e-15);
    assert_eq!(numerical_rank(&c, 1e-8), 2);
    // Eigenvalues of an antisymmetric 3x3: 0 and +-i s with s = |C|_F / sqrt 2.
    let ev = c.clone().complex_eigenvalues();
    let zero = ev.iter().filter(|z| z.norm() < 1e-12).count();
    assert_eq!(zero, 1);
}

#[test]
fn pg_chart_bivector_closed_form() {
    // In the exponential chart C = -1/4 s^2 coth(s/2) with s = ad_x.
    let m = model("su2");
    let b = pg_bundle(&m);
    let x = DVector::from_vec(vec![0.3, -0.7, 0.4]);
    let c = b.chart_bivector(&x).unwrap();
    let s = m.ad_matrix(&x);
    let expect = qham_forge::numerics::antisymmetric_function(&s, |z| {
        Ok(if z.norm() < 1e-14 {
            nalgebra::Complex::new(-0.5, 0.0) * z
        } else {
            -z * z * 0.25 * (z / 2.0).cosh() / (z / 2.0).sinh()
        })
    })
    .unwrap();
    assert!((c - expect).norm() < 1e-12);
}

#[test]
fn p0_zero_cases_and_jacobi() {
    let m = model("su3");
    let b = p0_bundle(&m);
    let zero = SpacePoint::Algebra(DVector::zeros(8));
    assert_eq!(b.bivector(&zero).unwrap().norm(), 0.0);
    let t = p0_bundle(&model("torus:2"));
    assert_eq!(t.bivector(&SpacePoint::Algebra(DVector::from_vec(vec![1.0, 2.0]))).unwrap().norm(), 0.0);
    for c in chart_points(b.space(), 20, 5, 1.0) {
        assert!(b.chart_bracket(&c, 1e-3).unwrap().frobenius_norm() < 1e-6);
    }
}

#[test]
fn double_moment_examples() {
    let m = model("su2");
    let d = double_bundle(&m);
    let mut rng = sample_rng(1, 0);
    let a = m.random_group(&mut rng);
    let b = m.random_group(&mut rng);
    let (u1, u2) = d.moment(&SpacePoint::Group(vec![a.clone(), m.identity()])).unwrap();
    assert!(m.distance(&u1, &m.identity()) < 1e-14 && m.distance(&u2, &m.identity()) < 1e-14);
    let (u1, u2) = d.moment(&SpacePoint::Group(vec![m.identity(), b.clone()])).unwrap();
    assert!(m.distance(&u1, &b) < 1e-14 && m.distance(&u2, &m.inv(&b)) < 1e-14);
}

#[test]
fn double_moment_is_equivariant() {
    let m = model("su2");
    let d = double_bundle(&m);
    for i in 0..50 {
        let mut rng = sample_rng(2, i);
        let p = SpacePoint::Group(vec![m.random_group(&mut rng), m.random_group(&mut rng)]);
        let (g, h) = (m.random_group(&mut rng), m.random_group(&mut rng));
        let q = d.space().act(&[g.clone(), h.clone()], &p).unwrap();
        let (u1, u2) = d.moment(&p).unwrap();
        let (v1, v2) = d.moment(&q).unwrap();
        let w1 = m.mul(&m.mul(&g, &u1), &m.inv(&g));
        let w2 = m.mul(&m.mul(&h, &u2), &m.inv(&h));
        assert!(m.distance(&v1, &w1) < 1e-10 && m.distance(&v2, &w2) < 1e-10);
    }
}

#[test]
fn pg_and_p0_moments_are_equivariant() {
    let m = model("su3");
    let mut rng = sample_rng(3, 0);
    let g = m.random_group(&mut rng);
    let b = pg_bundle(&m);
    let p = SpacePoint::Group(vec![m.random_group(&mut rng)]);
    let q = b.space().act(std::slice::from_ref(&g), &p).unwrap();
    match (b.moment(&p).unwrap(), b.moment(&q).unwrap()) {
        (MomentValue::Group(u), MomentValue::Group(v)) => {
            let w = m.mul(&m.mul(&g, &u[0]), &m.inv(&g));
            assert!(m.distance(&v[0], &w) < 1e-10);
        }
        _ => panic!("group moment expected"),
    }
    let b = p0_bundle(&m);
    let y = m.random_algebra(&mut rng, 1.0);
    let q = b.space().act(std::slice::from_ref(&g), &SpacePoint::Algebra(y.clone())).unwrap();
    match b.moment(&q).unwrap() {
        MomentValue::Algebra(v) => assert!((v - m.ad_group(&g, &y)).norm() < 1e-10),
        _ => panic!("algebra moment expected"),
    }
}

#[test]
fn omega_is_antisymmetric_and_matches_matrix_tangents() {
    let m = model("su2");
    let d = double_bundle(&m);
    let mut rng = sample_rng(4, 0);
    let (a, b) = (m.random_group(&mut rng), m.random_group(&mut rng));
    let p = SpacePoint::Group(vec![a.clone(), b.clone()]);
    let w = d.omega_matrix(&p).unwrap();
    assert_eq!((&w + w.transpose()).norm(), 0.0);
    let v1 = DVector::from_fn(6, |i, _| (i as f64 + 0.3).sin());
    let v2 = DVector::from_fn(6, |i, _| (i as f64 * 1.7).cos());
    let direct = d.omega_left(&p, &v1, &v2).unwrap();
    assert!((direct + d.omega_left(&p, &v2, &v1).unwrap()).abs() < 1e-15);
    assert!((direct - v1.dot(&(&w * &v2))).abs() < 1e-13);
    let lift = |v: &DVector<f64>| {
        (
            a.matrix() * m.to_matrix(&v.rows(0, 3).into_owned()),
            b.matrix() * m.to_matrix(&v.rows(3, 3).into_owned()),
        )
    };
    let (t1, t2) = (lift(&v1), lift(&v2));
    let via = d.omega(&p, (&t1.0, &t1.1), (&t2.0, &t2.1)).unwrap();
    assert!((via - direct).abs() < 1e-12);
    let bad = m.to_matrix(&v1.rows(0, 3).into_owned());
    assert!(d.omega(&p, (&bad, &t1.1), (&t2.0, &t2.1)).is_err());
}

#[test]
fn eq1_operator_is_identity_at_central_moment() {
    let m = model("su2");
    let d = double_bundle(&m);
    let a = m.random_group(&mut sample_rng(5, 0));
    for b in [m.identity(), m.element(-m.identity().matrix().clone()).unwrap()] {
        let p = SpacePoint::Group(vec![a.clone(), b]);
        let e = eq1_operator(&d, &p).unwrap();
        assert!((e - nalgebra::DMatrix::<f64>::identity(6, 6)).norm() < 1e-14);
    }
}

#[test]
fn eq1_candidate_is_antisymmetric_and_invariant() {
    let tol = Tolerances::default();
    let m = model("su2");
    let d = double_bundle(&m);
    for i in 0..20 {
        let mut rng = sample_rng(6, i);
        let p = sample_regular_point(&d, &mut rng, tol.omega_condition).unwrap();
        let cand = eq1_candidate(&d, &p, tol.omega_condition).unwrap();
        assert!(cand.antisymmetry_residual < tol.eq1_antisymmetry, "{}", cand.antisymmetry_residual);

        let (g, h) = (m.random_group(&mut rng), m.random_group(&mut rng));
        let q = d.space().act(&[g, h.clone()], &p).unwrap();
        let moved = eq1_candidate(&d, &q, f64::INFINITY).unwrap().coefficient;
        let t = double_action_pushforward(&m, &h);
        let pushed = &t * &cand.coefficient * t.transpose();
        assert!((moved - pushed).norm() < tol.eq1_invariance);
    }
}

#[test]
fn degenerate_omega_is_rejected() {
    let m = model("su2");
    let d = double_bundle(&m);
    let mut rng = sample_rng(7, 0);
    let p = sample_regular_point(&d, &mut rng, 1e6).unwrap();
    assert!(matches!(
        eq1_candidate(&d, &p, 1.0),
        Err(qham_forge::QhamError::Singular(_))
    ));
}

#[test]
fn moment_axiom_convention_scan() {
    let m = model("su2");
    let d = double_bundle(&m);
    let mut rng = sample_rng(8, 0);
    let p = sample_regular_point(&d, &mut rng, 1e6).unwrap();
    let x = m.doubled().random_algebra(&mut rng, 1.0);
    let (s, r) = scan_moment_axiom(&d, &p, &x).unwrap();
    assert_eq!(s, MOMENT_AXIOM_SCALE);
    assert!(r < 1e-12);
    for id in ["su2", "su3", "so3"] {
        let m = model(id);
        let d = double_bundle(&m);
        for i in 0..10 {
            let mut rng = sample_rng(9, i);
            let p = sample_regular_point(&d, &mut rng, 1e6).unwrap();
            let x = m.doubled().random_algebra(&mut rng, 1.0);
            let res = d.moment_axiom_residuals(&p, &x).unwrap();
            let at = res.iter().find(|(s, _)| *s == MOMENT_AXIOM_SCALE).unwrap();
            assert!(at.1 < 1e-10, "{id}");
        }
    }
}

#[test]
fn bracket_constant_measured_on_su2_double() {
    let d = double_bundle(&model("su2"));
    let b = eq1_bundle(&d);
    let x = DVector::from_vec(vec![0.31, -0.42, 0.27, 0.55, 0.12, -0.38]);
    let c = measure_bracket_constant(&b, &x, 1e-3).unwrap().unwrap();
    assert!((c - QP_BRACKET_CONSTANT).abs() < 1e-6, "measured {c}");
}

#[test]
fn bracket_constant_is_group_and_point_independent() {
    let tol = Tolerances::default();
    for (id, n, scale) in [("su3", 10, 0.5), ("prod:su2,su3", 5, 0.45)] {
        let b = pg_bundle(&model(id));
        for x in chart_points(b.space(), n, 13, scale) {
            let c = measure_bracket_constant(&b, &x, 1e-3).unwrap().unwrap();
            assert!((c - QP_BRACKET_CONSTANT).abs() < tol.c_consistency, "{id}: {c}");
        }
    }
    for id in ["su3", "so3"] {
        let b = eq1_bundle(&double_bundle(&model(id)));
        for x in chart_points(b.space(), 3, 14, 0.4) {
            let c = measure_bracket_constant(&b, &x, 1e-3).unwrap().unwrap();
            assert!((c - QP_BRACKET_CONSTANT).abs() < tol.c_consistency, "{id}: {c}");
        }
    }
}

#[test]
fn phi_g_vanishes_on_su2() {
    // Conjugacy classes in SU(2) have dimension <= 2, so the pushed-forward
    // trivector is zero and there is no constant to read off.
    let b = pg_bundle(&model("su2"));
    for x in chart_points(b.space(), 5, 15, 0.8) {
        assert!(b.chart_trivector(&x).unwrap().frobenius_norm() < 1e-15);
        assert!(measure_bracket_constant(&b, &x, 1e-3).unwrap().is_none());
    }
}

#[test]
fn verify_quasi_poisson_reports() {
    let tol = Tolerances::default();
    let t = pg_bundle(&model("torus:2"));
    let pts = chart_points(t.space(), 5, 16, 1.0);
    let r = verify_quasi_poisson(&t, &pts, 1e-3, QP_BRACKET_CONSTANT, tol.qp, Some(16)).unwrap();
    assert_eq!(r.max_residual, 0.0);
    assert!(r.pass);

    let b = pg_bundle(&model("su2"));
    let pts = chart_points(b.space(), 100, 17, 0.8);
    let r = verify_quasi_poisson(&b, &pts, 1e-3, QP_BRACKET_CONSTANT, 1e-6, Some(17)).unwrap();
    assert!(r.pass, "{}", r.max_residual);
    assert_eq!(r.n_points, 100);

    let b = pg_bundle(&model("su3"));
    let pts = chart_points(b.space(), 50, 18, 0.5);
    let r = verify_quasi_poisson(&b, &pts, 1e-3, QP_BRACKET_CONSTANT, tol.qp, Some(18)).unwrap();
    assert!(r.pass, "{}", r.max_residual);
    assert!((r.c_estimate.unwrap() - QP_BRACKET_CONSTANT).abs() < tol.c_consistency);

    let json = serde_json::to_value(&r).unwrap();
    for key in ["bundle", "n_points", "seed", "c_estimate", "max_residual", "tolerance", "pass"] {
        assert!(json.get(key).is_some(), "{key}");
    }
    assert!(verify_quasi_poisson(&b, &[], 1e-3, 1.0, 1e-5, None).is_err());
}

#[test]
fn distribution_dimensions() {
    let m = model("su2");
    let b = pg_bundle(&m);
    let e = SpacePoint::Group(vec![m.identity()]);
    assert_eq!(distribution_dim(&b, &e, 1e-8).unwrap(), 0);
    for i in 0..5 {
        let g = m.random_group(&mut sample_rng(19, i));
        let p = SpacePoint::Group(vec![g]);
        let orbit = numerical_rank(&b.space().fundamental_matrix(&p).unwrap(), 1e-8);
        assert_eq!(orbit, 2);
        assert_eq!(distribution_dim(&b, &p, 1e-8).unwrap(), orbit);
    }
    let d = double_bundle(&m);
    let eb = eq1_bundle(&d);
    for i in 0..5 {
        let p = sample_regular_point(&d, &mut sample_rng(20, i), 1e6).unwrap();
        assert_eq!(distribution_dim(&eb, &p, 1e-8).unwrap(), 6);
        assert_eq!(numerical_rank(&d.omega_matrix(&p).unwrap(), 1e-8), 6);
    }
}

#[test]
fn conjugacy_family_membership() {
    let tol = Tolerances::default().conjugacy;
    for id in ["su2", "su3", "prod:su2,torus:2"] {
        let m = model(id);
        let mut rng = sample_rng(21, 0);
        let x = m.random_algebra(&mut rng, 1.0);
        for t in [0.7, -0.2, 1e-3] {
            let base = m.exp(&(&x * t));
            assert!(conjugacy_family_member(&m, &x, t, &FiberPoint::Group(base.clone()), tol).unwrap());
            let h = m.random_group(&mut rng);
            let conj = m.mul(&m.mul(&h, &base), &m.inv(&h));
            assert!(conjugacy_family_member(&m, &x, t, &FiberPoint::Group(conj), tol).unwrap());
            let other = m.exp(&(&x * (1.3 * t)));
            assert!(!conjugacy_family_member(&m, &x, t, &FiberPoint::Group(other), tol).unwrap());
        }
        let h = m.random_group(&mut rng);
        let y = m.ad_group(&h, &x);
        assert!(conjugacy_family_member(&m, &x, 0.0, &FiberPoint::Algebra(y), 1e-8).unwrap());
        assert!(conjugacy_family_member(&m, &x, 0.0, &FiberPoint::Group(h), tol).is_err());
        assert!(conjugacy_family_member(&m, &x, 1.0, &FiberPoint::Algebra(x.clone()), tol).is_err());
    }
    let m = model("su2");
    let e1 = basis(3, 0);
    for i in 0..10 {
        let y = m.random_algebra(&mut sample_rng(22, i), 1.0);
        let y = &y / y.norm();
        assert!(conjugacy_family_member(&m, &e1, 0.0, &FiberPoint::Algebra(y.clone()), 1e-8).unwrap());
        assert!(!conjugacy_family_member(&m, &e1, 0.0, &FiberPoint::Algebra(&y * 1.01), 1e-8).unwrap());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn bivectors_are_antisymmetric(c in prop::collection::vec(-1.0f64..1.0, 6)) {
        let m = model("su2");
        let c = DVector::from_vec(c);
        let d = double_bundle(&m);
        let p = d.space().from_chart(&c).unwrap();
        let w = d.omega_matrix(&p).unwrap();
        prop_assert_eq!((&w + w.transpose()).norm(), 0.0);
        let b = pg_bundle(&m);
        let x = c.rows(0, 3).into_owned();
        let cm = b.bivector(&b.space().from_chart(&x).unwrap()).unwrap();
        prop_assert!((&cm + cm.transpose()).norm() < 1e-15);
    }

    #[test]
    fn fundamental_field_is_linear(a in -2.0f64..2.0, c in prop::collection::vec(-1.0f64..1.0, 6)) {
        let m = model("su2");
        let space = ChartedSpace::new(&m, SpaceKind::Double);
        let c = DVector::from_vec(c);
        let p = space.from_chart(&c).unwrap();
        let x = DVector::from_fn(6, |i, _| (i as f64).sin());
        let y = DVector::from_fn(6, |i, _| (i as f64).cos());
        let lhs = space.fundamental_field(&(&x * a + &y), &p).unwrap();
        let rhs = space.fundamental_field(&x, &p).unwrap() * a + space.fundamental_field(&y, &p).unwrap();
        prop_assert!((lhs - rhs).norm() < 1e-12);
    }
}
