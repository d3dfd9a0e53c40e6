use std::collections::BTreeMap;

use nalgebra::DVector;
use proptest::prelude::*;
use qham_forge::lie::{GroupElement, LieGroupModel};
use qham_forge::qp::{double_bundle, SpacePoint};
use qham_forge::quiver::*;
use qham_forge::rng::sample_rng;
use rand::Rng;

fn su2() -> LieGroupModel {
    LieGroupModel::from_id("su2").unwrap()
}

fn segment() -> Quiver {
    Quiver::new(&["in", "out"], &[("e1", "in", "out")])
}

fn chain() -> Quiver {
    Quiver::new(&["in", "v", "out"], &[("e1", "in", "v"), ("e2", "v", "out")])
}

fn pants() -> Quiver {
    Quiver::new(
        &["in1", "in2", "v", "out"],
        &[("e1", "in1", "v"), ("e2", "in2", "v"), ("e3", "v", "out")],
    )
}

fn copants() -> Quiver {
    Quiver::new(
        &["in", "v", "out1", "out2"],
        &[("e1", "in", "v"), ("e2", "v", "out1"), ("e3", "v", "out2")],
    )
}

fn leg_loop() -> Quiver {
    Quiver::new(&["b", "v"], &[("e1", "b", "v"), ("e2", "v", "v")])
}

fn random_point<R: Rng>(q: &Quiver, m: &LieGroupModel, rng: &mut R) -> QuiverPoint {
    let mut p = QuiverPoint {
        a: BTreeMap::new(),
        b: BTreeMap::new(),
    };
    for e in &q.edges {
        p.a.insert(e.id.clone(), m.random_group(rng));
        p.b.insert(e.id.clone(), m.random_group(rng));
    }
    p
}

fn tuple(i: &QuiverInvariants) -> (usize, usize, usize, usize, i64) {
    (i.n_edges, i.n_interior, i.m, i.n, i.genus)
}

#[test]
fn natural_order() {
    let mut ids = vec!["e10", "e2", "e1", "a", "e02"];
    ids.sort_by(|a, b| natural_cmp(a, b));
    assert_eq!(ids, vec!["a", "e1", "e2", "e02", "e10"]);
}

#[test]
fn invariants_of_examples() {
    let s = segment().validate().unwrap();
    assert_eq!(tuple(&s), (1, 0, 1, 1, 0));
    assert_eq!(s.dim_n(3), 6);
    let p = pants().validate().unwrap();
    assert_eq!(tuple(&p), (3, 1, 2, 1, 0));
    assert_eq!(p.dim_units, 4);
    let l = leg_loop().validate().unwrap();
    assert_eq!(tuple(&l), (2, 1, 1, 0, 1));
    assert_eq!(l.dim_units, 2);
    for i in [s, p, l] {
        assert_eq!(i.dim_units, 2 * (i.genus + i.m as i64 + i.n as i64 - 1));
    }
}

#[test]
fn validation_errors() {
    let iso = Quiver::new(&["a", "b", "c"], &[("e1", "a", "b")]);
    assert!(iso.validate().is_err());
    let unknown = Quiver::new(&["a", "b"], &[("e1", "a", "z")]);
    assert!(unknown.validate().is_err());
    let dup = Quiver::new(&["a", "b"], &[("e1", "a", "b"), ("e1", "b", "a")]);
    assert!(dup.validate().is_err());
}

#[test]
fn json_round_trip() {
    let text = r#"{"vertices": ["in1","v","out1"], "edges": [{"id":"e1","src":"in1","dst":"v"}, {"id":"e2","src":"v","dst":"out1"}]}"#;
    let q = Quiver::from_json(text).unwrap();
    assert_eq!(q.validate().unwrap().n_interior, 1);
    assert_eq!(Quiver::from_json(&q.to_json()).unwrap(), q);
    assert!(Quiver::from_json("{\"vertices\": [").is_err());
}

#[test]
fn boundary_split_of_pants() {
    let s = pants().boundary_split().unwrap();
    assert_eq!(s.incoming, vec!["in1", "in2"]);
    assert_eq!(s.outgoing, vec!["out"]);
    assert_eq!(s.interior, vec!["v"]);
}

#[test]
fn trivial_b_gives_identity_moments() {
    let m = su2();
    let q = pants();
    let mut p = random_point(&q, &m, &mut sample_rng(1, 0));
    for v in p.b.values_mut() {
        *v = m.identity();
    }
    for g in fused_moment(&q, &m, &p).unwrap().values().chain(residual_moment(&q, &m, &p).unwrap().values()) {
        assert!(m.distance(g, &m.identity()) < 1e-14);
    }
}

#[test]
fn segment_residual_is_double_moment() {
    let m = su2();
    let q = segment();
    let p = random_point(&q, &m, &mut sample_rng(2, 0));
    let nu = residual_moment(&q, &m, &p).unwrap();
    let d = double_bundle(&m);
    let (u1, u2) = d.moment(&SpacePoint::Group(vec![p.a["e1"].clone(), p.b["e1"].clone()])).unwrap();
    assert!(m.distance(&nu["out"], &u1) < 1e-14);
    assert!(m.distance(&nu["in"], &u2) < 1e-14);
}

#[test]
fn moment_equivariance_and_residual_invariance() {
    let m = su2();
    for (k, q) in [pants(), leg_loop(), copants()].iter().enumerate() {
        let mut rng = sample_rng(3, k as u64);
        let p = random_point(q, &m, &mut rng);
        let split = q.boundary_split().unwrap();
        let g: BTreeMap<String, GroupElement> =
            split.interior.iter().map(|v| (v.clone(), m.random_group(&mut rng))).collect();
        let gp = p.act(q, &m, &g).unwrap();
        let before = fused_moment(q, &m, &p).unwrap();
        let after = fused_moment(q, &m, &gp).unwrap();
        for (v, mu) in &before {
            let expect = m.mul(&m.mul(&g[v], mu), &m.inv(&g[v]));
            assert!(m.distance(&after[v], &expect) < 1e-10);
        }
        let r0 = residual_moment(q, &m, &p).unwrap();
        let r1 = residual_moment(q, &m, &gp).unwrap();
        for (v, nu) in &r0 {
            assert!(m.distance(nu, &r1[v]) < 1e-10);
        }
    }
}

#[test]
fn fused_form_on_segment_is_double_form() {
    let m = su2();
    let q = segment();
    let mut rng = sample_rng(4, 0);
    let p = random_point(&q, &m, &mut rng);
    let d = double_bundle(&m);
    let pt = SpacePoint::Group(vec![p.a["e1"].clone(), p.b["e1"].clone()]);
    let v1 = DVector::from_fn(6, |_, _| rng.gen_range(-1.0..1.0));
    let v2 = DVector::from_fn(6, |_, _| rng.gen_range(-1.0..1.0));
    let lhs = fused_form(&q, &m, &p, &v1, &v2).unwrap();
    let rhs = d.omega_left(&pt, &v1, &v2).unwrap();
    assert!((lhs - rhs).abs() < 1e-13);
}

#[test]
fn fused_form_antisymmetric_and_bilinear() {
    let m = su2();
    let q = pants();
    let mut rng = sample_rng(5, 0);
    let p = random_point(&q, &m, &mut rng);
    let dim = 18;
    let mut rv = || DVector::from_fn(dim, |_, _| rng.gen_range(-1.0..1.0));
    let (v1, v2, w) = (rv(), rv(), rv());
    let f = |a: &DVector<f64>, b: &DVector<f64>| fused_form(&q, &m, &p, a, b).unwrap();
    assert_eq!(f(&v1, &v2), -f(&v2, &v1));
    assert_eq!(f(&v1, &v1), 0.0);
    let (s, t) = (0.7, -1.3);
    let combo = &v1 * s + &w * t;
    assert!((f(&combo, &v2) - (s * f(&v1, &v2) + t * f(&w, &v2))).abs() < 1e-12);
}

#[test]
fn fused_form_moment_condition() {
    // iota(x_M) eta = -1/2 sum_v <mu_v*(theta^L + theta^R), x_v> for the
    // full vertex group, matching the single-double convention.
    let m = su2();
    for (k, q) in [pants(), leg_loop(), copants(), segment()].iter().enumerate() {
        let mut rng = sample_rng(6, k as u64);
        let p = random_point(q, &m, &mut rng);
        let x = DVector::from_fn(3 * q.vertices.len(), |_, _| rng.gen_range(-1.0..1.0));
        let good = fused_moment_axiom_residual(q, &m, &p, &x, -0.5).unwrap();
        assert!(good < 1e-8, "{good}");
        let bad = fused_moment_axiom_residual(q, &m, &p, &x, 0.5).unwrap();
        assert!(bad > 1e-3);
    }
}

#[test]
fn chain_solver_and_rank() {
    let m = su2();
    let q = chain();
    let p = sample_level_set(&q, &m, &mut sample_rng(7, 0), Some("out")).unwrap();
    let expect = m.mul(&m.mul(&p.a["e1"], &p.b["e1"]), &m.inv(&p.a["e1"]));
    assert!(m.distance(&p.b["e2"], &expect) < 1e-12);
    assert!(level_set_residual(&q, &m, &p).unwrap() < 1e-12);
    assert_eq!(moment_jacobian_rank(&q, &m, &p, 1e-7).unwrap(), 3);
    let stab = stabilizer_propagate(&q, &m, &p).unwrap();
    assert!(stab.is_identity);
    assert!(stab.residual < 1e-9);
}

#[test]
fn segment_has_no_constraints() {
    let m = su2();
    let q = segment();
    let p = sample_level_set(&q, &m, &mut sample_rng(8, 0), None).unwrap();
    assert_eq!(level_set_residual(&q, &m, &p).unwrap(), 0.0);
    assert_eq!(moment_jacobian_rank(&q, &m, &p, 1e-7).unwrap(), 0);
    assert!(stabilizer_propagate(&q, &m, &p).unwrap().assignment.is_empty());
}

#[test]
fn pants_rank() {
    let m = su2();
    let q = pants();
    let p = sample_level_set(&q, &m, &mut sample_rng(9, 0), None).unwrap();
    assert_eq!(moment_jacobian_rank(&q, &m, &p, 1e-7).unwrap(), 3);
}

#[test]
fn random_quivers_level_set() {
    let m = su2();
    let mut worst: f64 = 0.0;
    for i in 0..20 {
        let mut rng = sample_rng(10, i);
        let q = random_quiver(&mut rng, 8);
        assert!(q.vertices.len() <= 8);
        let inv = q.validate().unwrap();
        assert!(inv.m + inv.n > 0);
        let p = sample_level_set(&q, &m, &mut rng, None).unwrap();
        worst = worst.max(level_set_residual(&q, &m, &p).unwrap());
        let rank = moment_jacobian_rank(&q, &m, &p, 1e-7).unwrap();
        assert_eq!(rank, inv.n_interior * 3, "{}", q.to_json());
    }
    assert!(worst < 1e-9, "{worst}");
}

#[test]
fn rerooting_keeps_level_set() {
    let m = su2();
    let q = pants();
    for root in ["in1", "in2", "out"] {
        let p = sample_level_set(&q, &m, &mut sample_rng(11, 0), Some(root)).unwrap();
        assert!(level_set_residual(&q, &m, &p).unwrap() < 1e-10);
    }
    assert!(sample_level_set(&q, &m, &mut sample_rng(11, 0), Some("v")).is_err());
}

#[test]
fn stabilizer_on_random_level_sets() {
    let m = su2();
    for i in 0..100 {
        let mut rng = sample_rng(12, i);
        let q = random_quiver(&mut rng, 8);
        let p = sample_level_set(&q, &m, &mut rng, None).unwrap();
        let s = stabilizer_propagate(&q, &m, &p).unwrap();
        assert!(s.is_identity && s.residual < 1e-9);
    }
}

#[test]
fn closed_and_disconnected_errors() {
    let m = su2();
    let closed = Quiver::new(&["v"], &[("e1", "v", "v")]);
    assert!(sample_level_set(&closed, &m, &mut sample_rng(0, 0), None).is_err());
    let p = random_point(&closed, &m, &mut sample_rng(0, 0));
    assert!(stabilizer_propagate(&closed, &m, &p).is_err());
    let two = Quiver::new(&["a", "b", "c", "d"], &[("e1", "a", "b"), ("e2", "c", "d")]);
    assert!(sample_level_set(&two, &m, &mut sample_rng(0, 0), None).is_err());
}

fn matching(pairs: &[(&str, &str)]) -> Matching {
    pairs.iter().map(|(a, b)| (a.to_string(), b.to_string())).collect()
}

#[test]
fn gluing_examples() {
    let ss = glue(&segment(), &segment(), &matching(&[("out", "in")])).unwrap();
    let i = ss.validate().unwrap();
    assert_eq!((i.n_edges, i.n_interior, i.dim_units), (2, 1, 2));

    let pc = glue(&pants(), &copants(), &matching(&[("out", "in")])).unwrap();
    let i = pc.validate().unwrap();
    assert_eq!((i.genus, i.m, i.n), (0, 2, 2));

    let cp = glue(&copants(), &pants(), &matching(&[("out1", "in1"), ("out2", "in2")])).unwrap();
    let i = cp.validate().unwrap();
    assert_eq!((i.genus, i.m, i.n, i.dim_units), (1, 1, 1, 4));
}

#[test]
fn gluing_rejects_bad_matchings() {
    assert!(glue(&copants(), &pants(), &matching(&[("out1", "in1")])).is_err());
    assert!(glue(&copants(), &pants(), &matching(&[("out1", "in1"), ("out2", "in1")])).is_err());
    assert!(glue(&segment(), &pants(), &matching(&[("out", "in1")])).is_err());
}

#[test]
fn contraction_examples() {
    let q = Quiver::new(
        &["in", "v1", "v2", "out"],
        &[("e1", "in", "v1"), ("e2", "v1", "v2"), ("e3", "v2", "out")],
    );
    let before = q.validate().unwrap();
    let c = contract_edge(&q, "e2").unwrap();
    let after = c.validate().unwrap();
    assert_eq!((before.n_edges, before.n_interior), (3, 2));
    assert_eq!((after.n_edges, after.n_interior), (2, 1));
    assert_eq!(before.dim_units, after.dim_units);
    assert!(contract_edge(&q, "e1").is_err());

    let theta = Quiver::new(
        &["in", "v1", "v2", "out"],
        &[("e1", "in", "v1"), ("e2", "v1", "v2"), ("e3", "v1", "v2"), ("e4", "v2", "out")],
    );
    let c = contract_edge(&theta, "e2").unwrap();
    let e3 = c.edges.iter().find(|e| e.id == "e3").unwrap();
    assert_eq!(e3.src, e3.dst);
    assert_eq!(c.validate().unwrap().genus, theta.validate().unwrap().genus);
    assert!(contract_edge(&c, "e3").is_err());
}

#[test]
fn normalize_examples() {
    let (n, steps) = normalize(&glue(&copants(), &pants(), &matching(&[("out1", "in1"), ("out2", "in2")])).unwrap()).unwrap();
    assert!(steps > 0);
    assert_eq!(n.validate().unwrap().n_interior, 1);
    let (n2, steps2) = normalize(&n).unwrap();
    assert_eq!((n2, steps2), (n, 0));
}

#[test]
fn boundary_removal() {
    let r = remove_boundary_vertex(&segment(), "in").unwrap();
    assert!(r.degenerate && r.quiver.is_empty());
    let r = remove_boundary_vertex(&pants(), "out").unwrap();
    let s = r.quiver.boundary_split().unwrap();
    assert_eq!((s.incoming.len(), s.outgoing.len(), s.interior.len()), (2, 0, 1));
    assert_eq!(r.dim_drop_units, 2);
    let r = remove_boundary_vertex(&chain(), "in").unwrap();
    assert!(r.neighbour_became_boundary);
    assert_eq!(tuple(&r.quiver.validate().unwrap()), (1, 0, 1, 1, 0));
    assert!(remove_boundary_vertex(&pants(), "v").is_err());
}

#[test]
fn homotopy_invariance_on_random_pairs() {
    let mut count = 0;
    let mut seed = 0;
    while count < 200 {
        let mut rng = sample_rng(13, seed);
        seed += 1;
        let q = random_quiver(&mut rng, 8);
        let edges = contractible_edges(&q).unwrap();
        if edges.is_empty() {
            continue;
        }
        let e = &edges[rng.gen_range(0..edges.len())];
        let a = q.validate().unwrap();
        let b = contract_edge(&q, e).unwrap().validate().unwrap();
        assert_eq!((a.m, a.n, a.genus, a.dim_units), (b.m, b.n, b.genus, b.dim_units));
        count += 1;
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn gluing_dimension_law(s1 in 0u64..10_000, s2 in 0u64..10_000) {
        let q1 = random_quiver(&mut sample_rng(s1, 0), 8);
        let q2 = random_quiver(&mut sample_rng(s2, 1), 8);
        let b1 = q1.boundary_split().unwrap();
        let b2 = q2.boundary_split().unwrap();
        prop_assume!(!b1.outgoing.is_empty() && b1.outgoing.len() == b2.incoming.len());
        let m: Matching = b1.outgoing.iter().cloned().zip(b2.incoming.iter().cloned()).collect();
        let g = glue(&q1, &q2, &m).unwrap().validate().unwrap();
        let d = b1.outgoing.len() as i64;
        prop_assert_eq!(g.dim_units, q1.validate().unwrap().dim_units + q2.validate().unwrap().dim_units - 2 * d);
        prop_assert_eq!(g.n_interior, q1.validate().unwrap().n_interior + q2.validate().unwrap().n_interior + d as usize);
    }

    #[test]
    fn genus_nonnegative_and_dim_formula(seed in 0u64..100_000) {
        let q = random_quiver(&mut sample_rng(seed, 0), 8);
        let i = q.validate().unwrap();
        prop_assert!(i.genus >= 0);
        prop_assert_eq!(i.dim_units, 2 * (i.genus + i.m as i64 + i.n as i64 - 1));
    }

    #[test]
    fn normalize_is_idempotent(seed in 0u64..100_000) {
        let q = random_quiver(&mut sample_rng(seed, 0), 8);
        let (n, steps) = normalize(&q).unwrap();
        prop_assert!(steps <= q.edges.len());
        prop_assert_eq!(normalize(&n).unwrap().1, 0);
        prop_assert_eq!(n.validate().unwrap().n_interior, 1.min(q.validate().unwrap().n_interior));
    }
}
