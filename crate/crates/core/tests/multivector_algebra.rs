use std::f64::consts::SQRT_2;

use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use qham_forge::lie::LieGroupModel;
use qham_forge::multivector::{
    cartan_trivector, combinations, fusion_bivector, psi_identity_residual, schouten_field,
    schouten_lie, Multivector, DEFAULT_FD_STEP,
};
use qham_forge::numerics::RMat;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_mv(rng: &mut ChaCha8Rng, dim: usize, degree: usize) -> Multivector {
    let mut m = Multivector::zero(dim, degree);
    for t in combinations(dim, degree) {
        m.add_term(&t, rng.gen_range(-1.0..1.0));
    }
    m
}

/// Sign of a permutation given as a list, by counting inversions.
fn perm_sign(p: &[usize]) -> f64 {
    let mut inv = 0;
    for i in 0..p.len() {
        for j in i + 1..p.len() {
            if p[i] > p[j] {
                inv += 1;
            }
        }
    }
    if inv % 2 == 0 { 1.0 } else { -1.0 }
}

#[test]
fn contraction_example_by_permutation_sum() {
    // Oracle: iota_xi(v1^v2^v3) = sum over slots of the determinant-style
    // expansion (-1)^r xi(v_r) (remaining wedge).
    let e123 = Multivector::basis(3, &[0, 1, 2]);
    let e2star = DVector::from_vec(vec![0.0, 1.0, 0.0]);
    let got = e123.contract(&e2star).unwrap();
    // Brute force: the 3-form e1^e2^e3 evaluated on (e2*, a, b) equals
    // sum over permutations; contraction coefficient on e1^e3 is T(e2*, e1*, e3*).
    let mut expect = 0.0;
    let perms = [[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]];
    for p in perms {
        // slots receive covectors e2*, e1*, e3*
        let slots = [1usize, 0, 2];
        if p.iter().zip(&slots).all(|(a, b)| a == b) {
            expect += perm_sign(&p);
        }
    }
    assert_eq!(expect, -1.0);
    assert_eq!(got.get(&[0, 2]), expect);
    assert_eq!(got.frobenius_norm(), 1.0);
}

#[test]
fn su2_cartan_trivector() {
    let m = LieGroupModel::from_id("su2").unwrap();
    let phi = cartan_trivector(&m);
    // (1/12) sum over the 6 permutations of sqrt2 eps^2 = sqrt2 / 2
    assert!((phi.get(&[0, 1, 2]) - SQRT_2 / 2.0).abs() < 1e-15);
    assert_eq!(phi.entries().len(), 1);
    let t = LieGroupModel::from_id("torus:4").unwrap();
    assert_eq!(cartan_trivector(&t).frobenius_norm(), 0.0);
}

#[test]
fn cartan_trivector_is_ad_invariant() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    for id in ["su2", "su3", "so3", "prod:su2,su3"] {
        let m = LieGroupModel::from_id(id).unwrap();
        let phi = cartan_trivector(&m);
        for _ in 0..5 {
            let x = Multivector::from_vector(&m.random_algebra(&mut rng, 1.0));
            let r = schouten_lie(&x, &phi, &m).unwrap().frobenius_norm();
            assert!(r < 1e-10, "{id}: {r}");
        }
    }
}

#[test]
fn fusion_data_for_su2() {
    let m = LieGroupModel::from_id("su2").unwrap();
    let data = fusion_bivector(&m);
    let psi = data.psi.entries();
    assert_eq!(psi.len(), 3);
    assert!(psi.iter().all(|(_, v)| *v == 0.5));
    // Oracle for diag(phi): expand (1/12) f_ijk (e_i + e_i')^(e_j + e_j')^(e_k + e_k').
    let n = 3;
    let mut oracle = Multivector::zero(2 * n, 3);
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                let f = m.f(i, j, k);
                if f == 0.0 {
                    continue;
                }
                for mask in 0..8usize {
                    let idx = [
                        i + n * (mask & 1),
                        j + n * ((mask >> 1) & 1),
                        k + n * ((mask >> 2) & 1),
                    ];
                    oracle.add_term(&idx, f / 12.0);
                }
            }
        }
    }
    let diff = data.diag_phi.sub(&oracle).unwrap().frobenius_norm();
    assert!(diff < 1e-15);
    let entries = data.diag_phi.entries();
    assert_eq!(entries.len(), 8);
    assert!(entries.iter().all(|(_, v)| (v.abs() - SQRT_2 / 2.0).abs() < 1e-15));
}

#[test]
fn torus_fusion_trivectors_vanish() {
    let m = LieGroupModel::from_id("torus:2").unwrap();
    let d = fusion_bivector(&m);
    assert_eq!(d.psi.entries().len(), 2);
    for t in [&d.phi1, &d.phi2, &d.diag_phi] {
        assert_eq!(t.frobenius_norm(), 0.0);
    }
}

#[test]
fn psi_bracket_identity() {
    for id in ["su2", "su3", "so3", "prod:su2,su2", "torus:2", "prod:su2,torus:1"] {
        let m = LieGroupModel::from_id(id).unwrap();
        let r = psi_identity_residual(&m).unwrap();
        assert!(r < 1e-12, "{id}: {r}");
    }
}

#[test]
fn schouten_lie_on_vectors_is_the_bracket() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let m = LieGroupModel::from_id("su3").unwrap();
    let x = m.random_algebra(&mut rng, 1.0);
    let y = m.random_algebra(&mut rng, 1.0);
    let got = schouten_lie(&Multivector::from_vector(&x), &Multivector::from_vector(&y), &m).unwrap();
    let expect = m.bracket(&x, &y);
    assert!((DVector::from_column_slice(got.coeffs()) - expect).norm() < 1e-14);
    let t = LieGroupModel::from_id("torus:3").unwrap();
    let a = random_mv(&mut rng, 3, 2);
    assert_eq!(schouten_lie(&a, &a, &t).unwrap().frobenius_norm(), 0.0);
}

#[test]
fn dimension_mismatch_is_reported() {
    let a = Multivector::basis(3, &[0]);
    let b = Multivector::basis(4, &[0]);
    assert!(a.wedge(&b).is_err());
    assert!(a.contract(&DVector::zeros(2)).is_err());
}

// Polynomial vector field X(x) = b + A x + C(x, x) with an exact Jacobian.
struct PolyField {
    b: DVector<f64>,
    a: DMatrix<f64>,
    c: Vec<DMatrix<f64>>,
}

impl PolyField {
    fn random(rng: &mut ChaCha8Rng, n: usize) -> Self {
        let mut r = || rng.gen_range(-1.0..1.0);
        let b = DVector::from_fn(n, |_, _| r());
        let a = DMatrix::from_fn(n, n, |_, _| r());
        let c = (0..n).map(|_| DMatrix::from_fn(n, n, |_, _| r())).collect();
        Self { b, a, c }
    }
    fn eval(&self, x: &DVector<f64>) -> DVector<f64> {
        let mut v = &self.b + &self.a * x;
        for (i, ci) in self.c.iter().enumerate() {
            v[i] += x.dot(&(ci * x));
        }
        v
    }
    fn jacobian(&self, x: &DVector<f64>) -> DMatrix<f64> {
        let mut j = self.a.clone();
        for (i, ci) in self.c.iter().enumerate() {
            let g = (ci + ci.transpose()) * x;
            for k in 0..x.len() {
                j[(i, k)] += g[k];
            }
        }
        j
    }
}

fn lie_bracket(x: &PolyField, y: &PolyField, p: &DVector<f64>) -> DVector<f64> {
    y.jacobian(p) * x.eval(p) - x.jacobian(p) * y.eval(p)
}

/// Coefficient matrix of u ^ v.
fn wedge_matrix(u: &DVector<f64>, v: &DVector<f64>) -> RMat {
    (u * v.transpose() - v * u.transpose()) * 0.5
}

#[test]
fn schouten_field_matches_decomposable_formula() {
    let mut rng = ChaCha8Rng::seed_from_u64(19);
    let n = 4;
    for _ in 0..5 {
        let xs = [PolyField::random(&mut rng, n), PolyField::random(&mut rng, n)];
        let ys = [PolyField::random(&mut rng, n), PolyField::random(&mut rng, n)];
        let pt = DVector::from_fn(n, |_, _| rng.gen_range(-0.5..0.5));
        let pf = |z: &DVector<f64>| Ok(wedge_matrix(&xs[0].eval(z), &xs[1].eval(z)));
        let qf = |z: &DVector<f64>| Ok(wedge_matrix(&ys[0].eval(z), &ys[1].eval(z)));
        let got = schouten_field(pf, qf, &pt, DEFAULT_FD_STEP).unwrap();
        let mut expect = Multivector::zero(n, 3);
        for i in 0..2 {
            for j in 0..2 {
                let sign = if (i + j) % 2 == 0 { 1.0 } else { -1.0 };
                let br = Multivector::from_vector(&lie_bracket(&xs[i], &ys[j], &pt));
                let xr = Multivector::from_vector(&xs[1 - i].eval(&pt));
                let yr = Multivector::from_vector(&ys[1 - j].eval(&pt));
                let term = br.wedge(&xr).unwrap().wedge(&yr).unwrap().scale(sign);
                expect = expect.add(&term).unwrap();
            }
        }
        let diff = got.sub(&expect).unwrap().frobenius_norm();
        assert!(diff < 1e-9 * expect.frobenius_norm().max(1.0), "{diff}");
    }
}

#[test]
fn schouten_field_of_constant_fields_vanishes() {
    let p = RMat::from_row_slice(3, 3, &[0.0, 1.0, 2.0, -1.0, 0.0, 3.0, -2.0, -3.0, 0.0]);
    let r = schouten_field(|_| Ok(p.clone()), |_| Ok(p.clone()), &DVector::zeros(3), 1e-3).unwrap();
    assert_eq!(r.frobenius_norm(), 0.0);
    assert!(schouten_field(|_| Ok(p.clone()), |_| Ok(p.clone()), &DVector::zeros(3), 0.0).is_err());
    let bad = |_: &DVector<f64>| Ok(RMat::from_element(3, 3, f64::NAN));
    assert!(schouten_field(bad, bad, &DVector::zeros(3), 1e-3).is_err());
}

#[test]
fn linear_poisson_structure_satisfies_jacobi() {
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    for id in ["su2", "su3"] {
        let m = LieGroupModel::from_id(id).unwrap();
        let p0 = |x: &DVector<f64>| Ok(m.ad_matrix(x) * -0.5);
        for _ in 0..20 {
            let x = m.random_algebra(&mut rng, 2.0);
            let r = schouten_field(p0, p0, &x, DEFAULT_FD_STEP).unwrap();
            assert!(r.frobenius_norm() < 1e-6, "{id}");
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn wedge_is_graded_commutative(seed in any::<u64>(), p in 0usize..4, q in 0usize..4) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = random_mv(&mut rng, 6, p);
        let b = random_mv(&mut rng, 6, q);
        let sign = if (p * q) % 2 == 0 { 1.0 } else { -1.0 };
        let d = a.wedge(&b).unwrap().sub(&b.wedge(&a).unwrap().scale(sign)).unwrap();
        prop_assert!(d.frobenius_norm() < 1e-12);
    }

    #[test]
    fn contraction_is_an_antiderivation(seed in any::<u64>(), p in 1usize..4, q in 1usize..3) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = random_mv(&mut rng, 6, p);
        let b = random_mv(&mut rng, 6, q);
        let xi = DVector::from_fn(6, |_, _| rng.gen_range(-1.0..1.0));
        let lhs = a.wedge(&b).unwrap().contract(&xi).unwrap();
        let sign = if p % 2 == 0 { 1.0 } else { -1.0 };
        let rhs = a.contract(&xi).unwrap().wedge(&b).unwrap()
            .add(&a.wedge(&b.contract(&xi).unwrap()).unwrap().scale(sign)).unwrap();
        prop_assert!(lhs.sub(&rhs).unwrap().frobenius_norm() < 1e-12);
    }

    #[test]
    fn schouten_lie_is_a_biderivation(seed in any::<u64>(), p in 1usize..4, q in 0usize..3, r in 0usize..3) {
        let m = LieGroupModel::from_id("su3").unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = random_mv(&mut rng, 8, p);
        let b = random_mv(&mut rng, 8, q);
        let c = random_mv(&mut rng, 8, r);
        let lhs = schouten_lie(&a, &b.wedge(&c).unwrap(), &m).unwrap();
        let sign = if ((p - 1) * q) % 2 == 0 { 1.0 } else { -1.0 };
        let t1 = schouten_lie(&a, &b, &m).unwrap().wedge(&c).unwrap();
        let t2 = b.wedge(&schouten_lie(&a, &c, &m).unwrap()).unwrap().scale(sign);
        let rhs = t1.add(&t2).unwrap();
        prop_assert!(lhs.sub(&rhs).unwrap().frobenius_norm() < 1e-10);
    }

    #[test]
    fn schouten_lie_graded_antisymmetry(seed in any::<u64>(), p in 1usize..4, q in 1usize..4) {
        let m = LieGroupModel::from_id("prod:su2,su2").unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = random_mv(&mut rng, 6, p);
        let b = random_mv(&mut rng, 6, q);
        let sign = if ((p - 1) * (q - 1)) % 2 == 0 { 1.0 } else { -1.0 };
        let lhs = schouten_lie(&a, &b, &m).unwrap();
        let rhs = schouten_lie(&b, &a, &m).unwrap().scale(-sign);
        prop_assert!(lhs.sub(&rhs).unwrap().frobenius_norm() < 1e-12);
    }
}
