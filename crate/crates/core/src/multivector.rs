//! Antisymmetric multivectors, the algebraic Schouten bracket on the
//! exterior algebra of a Lie algebra, and the coordinate Schouten bracket of
//! bivector fields.
//!
//! A degree-k multivector stores one value per increasing index tuple
//! `i_1 < ... < i_k`; that value is the component `T^{i_1...i_k}` of the
//! fully antisymmetric tensor, so `T = sum_{i_1<...<i_k} T^I e_{i_1}^...^e_{i_k}`.
//! For bivectors `P^{ij}` is the matrix of the bilinear form
//! `P(alpha, beta) = P^{ij} alpha_i beta_j`. Geometric modules instead pass
//! around the *coefficient matrix* `C` of `P = sum_{j,k} C_{jk} e_j ^ e_k`
//! (sum over all ordered pairs), so `P^{ij} = 2 C_{ij}`.

use std::collections::HashMap;

use nalgebra::{DMatrix, DVector};
use serde::ser::{SerializeStruct, Serializer};
use serde::Serialize;

use crate::error::{QhamError, Result};
use crate::lie::LieGroupModel;
use crate::numerics::RMat;

/// Increasing k-subsets of 0..n in lexicographic order.
pub fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    fn rec(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            if n - i < k - cur.len() {
                break;
            }
            cur.push(i);
            rec(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    if k <= n {
        rec(0, n, k, &mut Vec::new(), &mut out);
    }
    out
}

/// Sorts indices in place and returns the permutation sign, or 0 when an
/// index repeats.
pub fn sort_with_sign(idx: &mut [usize]) -> f64 {
    let mut sign = 1.0;
    for i in 1..idx.len() {
        let mut j = i;
        while j > 0 && idx[j - 1] > idx[j] {
            idx.swap(j - 1, j);
            sign = -sign;
            j -= 1;
        }
    }
    if idx.windows(2).any(|w| w[0] == w[1]) {
        0.0
    } else {
        sign
    }
}

/// A degree-k antisymmetric tensor over an n-dimensional space.
#[derive(Debug, Clone, PartialEq)]
pub struct Multivector {
    degree: usize,
    dim: usize,
    tuples: Vec<Vec<usize>>,
    coeffs: Vec<f64>,
}

impl Multivector {
    pub fn zero(dim: usize, degree: usize) -> Self {
        let tuples = combinations(dim, degree);
        let coeffs = vec![0.0; tuples.len()];
        Self {
            degree,
            dim,
            tuples,
            coeffs,
        }
    }

    pub fn scalar(dim: usize, value: f64) -> Self {
        let mut m = Self::zero(dim, 0);
        m.coeffs[0] = value;
        m
    }

    /// Degree-1 multivector with the given components.
    pub fn from_vector(v: &DVector<f64>) -> Self {
        let mut m = Self::zero(v.len(), 1);
        m.coeffs.copy_from_slice(v.as_slice());
        m
    }

    /// `e_{i_1} ^ ... ^ e_{i_k}` for arbitrary (not necessarily sorted) indices.
    pub fn basis(dim: usize, indices: &[usize]) -> Self {
        let mut m = Self::zero(dim, indices.len());
        m.add_term(indices, 1.0);
        m
    }

    /// Bivector with components `P^{ij}` read from the upper triangle of an
    /// antisymmetric matrix.
    pub fn from_bivector_matrix(p: &RMat) -> Self {
        let n = p.nrows();
        let mut m = Self::zero(n, 2);
        for (slot, t) in m.tuples.iter().enumerate() {
            m.coeffs[slot] = 0.5 * (p[(t[0], t[1])] - p[(t[1], t[0])]);
        }
        m
    }

    /// Bivector `sum_{j,k} C_{jk} e_j ^ e_k` from a coefficient matrix.
    pub fn from_coefficient_matrix(c: &RMat) -> Self {
        Self::from_bivector_matrix(&(c * 2.0))
    }

    /// Coefficient matrix `C` with `P = sum_{j,k} C_{jk} e_j ^ e_k`.
    pub fn to_coefficient_matrix(&self) -> RMat {
        self.to_bivector_matrix() * 0.5
    }

    /// Full antisymmetric matrix of a bivector.
    pub fn to_bivector_matrix(&self) -> RMat {
        assert_eq!(self.degree, 2, "not a bivector");
        let mut p = RMat::zeros(self.dim, self.dim);
        for (t, c) in self.tuples.iter().zip(&self.coeffs) {
            p[(t[0], t[1])] = *c;
            p[(t[1], t[0])] = -*c;
        }
        p
    }

    pub fn degree(&self) -> usize {
        self.degree
    }
    pub fn dim(&self) -> usize {
        self.dim
    }
    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    fn slot(&self, sorted: &[usize]) -> usize {
        self.tuples
            .binary_search_by(|t| t.as_slice().cmp(sorted))
            .expect("index tuple within range")
    }

    /// Component for arbitrary index order (antisymmetric).
    pub fn get(&self, indices: &[usize]) -> f64 {
        assert_eq!(indices.len(), self.degree);
        let mut idx = indices.to_vec();
        let s = sort_with_sign(&mut idx);
        if s == 0.0 {
            return 0.0;
        }
        s * self.coeffs[self.slot(&idx)]
    }

    /// Adds `value * e_{indices}` (any order).
    pub fn add_term(&mut self, indices: &[usize], value: f64) {
        assert_eq!(indices.len(), self.degree);
        let mut idx = indices.to_vec();
        let s = sort_with_sign(&mut idx);
        if s == 0.0 || value == 0.0 {
            return;
        }
        let slot = self.slot(&idx);
        self.coeffs[slot] += s * value;
    }

    /// Nonzero components in lexicographic order.
    pub fn entries(&self) -> Vec<(Vec<usize>, f64)> {
        self.tuples
            .iter()
            .zip(&self.coeffs)
            .filter(|(_, c)| **c != 0.0)
            .map(|(t, c)| (t.clone(), *c))
            .collect()
    }

    fn check_same_space(&self, other: &Self) -> Result<()> {
        if self.dim != other.dim {
            return Err(QhamError::DimensionMismatch {
                expected: self.dim,
                got: other.dim,
            });
        }
        Ok(())
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_same_space(other)?;
        if self.degree != other.degree {
            return Err(QhamError::DimensionMismatch {
                expected: self.degree,
                got: other.degree,
            });
        }
        let mut out = self.clone();
        for (a, b) in out.coeffs.iter_mut().zip(&other.coeffs) {
            *a += b;
        }
        Ok(out)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.add(&other.scale(-1.0))
    }

    pub fn scale(&self, s: f64) -> Self {
        let mut out = self.clone();
        out.coeffs.iter_mut().for_each(|c| *c *= s);
        out
    }

    pub fn wedge(&self, other: &Self) -> Result<Self> {
        self.check_same_space(other)?;
        let deg = self.degree + other.degree;
        let mut out = Self::zero(self.dim, deg);
        if deg > self.dim {
            return Ok(out);
        }
        for (i, a) in self.tuples.iter().zip(&self.coeffs) {
            if *a == 0.0 {
                continue;
            }
            for (j, b) in other.tuples.iter().zip(&other.coeffs) {
                if *b == 0.0 {
                    continue;
                }
                let mut idx: Vec<usize> = i.iter().chain(j.iter()).cloned().collect();
                let s = sort_with_sign(&mut idx);
                if s != 0.0 {
                    let slot = out.slot(&idx);
                    out.coeffs[slot] += s * a * b;
                }
            }
        }
        Ok(out)
    }

    /// Interior product with a covector, removing the r-th slot with sign (-1)^r.
    pub fn contract(&self, covector: &DVector<f64>) -> Result<Self> {
        if covector.len() != self.dim {
            return Err(QhamError::DimensionMismatch {
                expected: self.dim,
                got: covector.len(),
            });
        }
        if self.degree == 0 {
            return Ok(Self::zero(self.dim, 0));
        }
        let mut out = Self::zero(self.dim, self.degree - 1);
        for (t, c) in self.tuples.iter().zip(&self.coeffs) {
            if *c == 0.0 {
                continue;
            }
            for r in 0..t.len() {
                let xi = covector[t[r]];
                if xi == 0.0 {
                    continue;
                }
                let rest: Vec<usize> = t
                    .iter()
                    .enumerate()
                    .filter(|(s, _)| *s != r)
                    .map(|(_, v)| *v)
                    .collect();
                let sign = if r % 2 == 0 { 1.0 } else { -1.0 };
                let slot = out.slot(&rest);
                out.coeffs[slot] += sign * xi * c;
            }
        }
        Ok(out)
    }

    /// Euclidean norm of the stored components.
    pub fn frobenius_norm(&self) -> f64 {
        self.coeffs.iter().map(|c| c * c).sum::<f64>().sqrt()
    }

    /// Image under the induced map `Lambda^k A` for a linear map `A: R^n -> R^m`.
    pub fn push_forward(&self, a: &RMat) -> Result<Self> {
        if a.ncols() != self.dim {
            return Err(QhamError::DimensionMismatch {
                expected: self.dim,
                got: a.ncols(),
            });
        }
        let mut out = Self::zero(a.nrows(), self.degree);
        let k = self.degree;
        for (slot, jt) in out.tuples.clone().iter().enumerate() {
            let mut acc = 0.0;
            for (it, c) in self.tuples.iter().zip(&self.coeffs) {
                if *c == 0.0 {
                    continue;
                }
                let minor = DMatrix::from_fn(k, k, |r, s| a[(jt[r], it[s])]);
                acc += c * if k == 0 { 1.0 } else { minor.determinant() };
            }
            out.coeffs[slot] = acc;
        }
        Ok(out)
    }

    /// Same components placed in a larger space with indices shifted by `offset`.
    pub fn inject(&self, total_dim: usize, offset: usize) -> Result<Self> {
        if offset + self.dim > total_dim {
            return Err(QhamError::DimensionMismatch {
                expected: total_dim,
                got: offset + self.dim,
            });
        }
        let mut out = Self::zero(total_dim, self.degree);
        for (t, c) in self.tuples.iter().zip(&self.coeffs) {
            let shifted: Vec<usize> = t.iter().map(|i| i + offset).collect();
            out.add_term(&shifted, *c);
        }
        Ok(out)
    }
}

impl Serialize for Multivector {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let mut st = serializer.serialize_struct("Multivector", 3)?;
        st.serialize_field("degree", &self.degree)?;
        st.serialize_field("dim", &self.dim)?;
        st.serialize_field("entries", &self.entries())?;
        st.end()
    }
}

/// phi = (1/12) f_ijk e_i ^ e_j ^ e_k.
pub fn cartan_trivector(model: &LieGroupModel) -> Multivector {
    let n = model.dim();
    let mut phi = Multivector::zero(n, 3);
    for t in combinations(n, 3) {
        phi.add_term(&t, 0.5 * model.f(t[0], t[1], t[2]));
    }
    phi
}

/// psi together with the trivectors it is compared against, all over g + g.
#[derive(Debug, Clone, Serialize)]
pub struct FusionData {
    pub psi: Multivector,
    pub phi1: Multivector,
    pub phi2: Multivector,
    pub diag_phi: Multivector,
}

/// psi = (1/2) sum_i e_i^1 ^ e_i^2 on g + g, with phi^1, phi^2 and diag(phi).
pub fn fusion_bivector(model: &LieGroupModel) -> FusionData {
    let n = model.dim();
    let mut psi = Multivector::zero(2 * n, 2);
    for i in 0..n {
        psi.add_term(&[i, n + i], 0.5);
    }
    let phi = cartan_trivector(model);
    let phi1 = phi.inject(2 * n, 0).expect("fits");
    let phi2 = phi.inject(2 * n, n).expect("fits");
    let diag_map = RMat::from_fn(2 * n, n, |r, c| if r % n == c { 1.0 } else { 0.0 });
    let diag_phi = phi.push_forward(&diag_map).expect("fits");
    FusionData {
        psi,
        phi1,
        phi2,
        diag_phi,
    }
}

/// Algebraic Schouten bracket on the exterior algebra of the model's Lie
/// algebra:
/// `[x_1^...^x_p, y_1^...^y_q] = sum (-1)^{i+j} [x_i,y_j] ^ x_1..^x_i^..x_p ^ y_1..^y_j^..y_q`.
pub fn schouten_lie(a: &Multivector, b: &Multivector, model: &LieGroupModel) -> Result<Multivector> {
    a.check_same_space(b)?;
    if a.dim != model.dim() {
        return Err(QhamError::DimensionMismatch {
            expected: model.dim(),
            got: a.dim,
        });
    }
    let n = a.dim;
    let (p, q) = (a.degree, b.degree);
    if p == 0 || q == 0 {
        return Ok(Multivector::zero(n, (p + q).saturating_sub(1)));
    }
    let mut out = Multivector::zero(n, p + q - 1);
    if p + q - 1 > n {
        return Ok(out);
    }
    // Nonzero brackets of basis vectors, cached.
    let mut brackets: HashMap<(usize, usize), Vec<(usize, f64)>> = HashMap::new();
    for (it, ac) in a.tuples.iter().zip(&a.coeffs) {
        if *ac == 0.0 {
            continue;
        }
        for (jt, bc) in b.tuples.iter().zip(&b.coeffs) {
            if *bc == 0.0 {
                continue;
            }
            for r in 0..p {
                for s in 0..q {
                    let br = brackets.entry((it[r], jt[s])).or_insert_with(|| {
                        (0..n)
                            .map(|c| (c, model.f(c, it[r], jt[s])))
                            .filter(|(_, v)| *v != 0.0)
                            .collect()
                    });
                    if br.is_empty() {
                        continue;
                    }
                    let sign = if (r + s) % 2 == 0 { 1.0 } else { -1.0 };
                    let mut idx = Vec::with_capacity(p + q - 1);
                    for (c, fv) in br.iter() {
                        idx.clear();
                        idx.push(*c);
                        idx.extend(it.iter().enumerate().filter(|(u, _)| *u != r).map(|(_, v)| *v));
                        idx.extend(jt.iter().enumerate().filter(|(u, _)| *u != s).map(|(_, v)| *v));
                        out.add_term(&idx, sign * fv * ac * bc);
                    }
                }
            }
        }
    }
    Ok(out)
}

/// Residual |[psi,psi] - (diag(phi) - phi^1 - phi^2)| over g + g with the
/// product bracket.
pub fn psi_identity_residual(model: &LieGroupModel) -> Result<f64> {
    let data = fusion_bivector(model);
    let double = model.doubled();
    let lhs = schouten_lie(&data.psi, &data.psi, &double)?;
    let rhs = data.diag_phi.sub(&data.phi1)?.sub(&data.phi2)?;
    Ok(lhs.sub(&rhs)?.frobenius_norm())
}

/// Default finite-difference step for [`schouten_field`].
pub const DEFAULT_FD_STEP: f64 = 1e-3;

/// Central-difference derivative with one Richardson step.
fn richardson_derivative<F>(f: &F, x: &DVector<f64>, l: usize, h: f64) -> Result<RMat>
where
    F: Fn(&DVector<f64>) -> Result<RMat>,
{
    let central = |step: f64| -> Result<RMat> {
        let mut xp = x.clone();
        let mut xm = x.clone();
        xp[l] += step;
        xm[l] -= step;
        let fp = f(&xp)?;
        let fm = f(&xm)?;
        Ok((fp - fm) / (2.0 * step))
    };
    let d1 = central(h)?;
    let d2 = central(h / 2.0)?;
    Ok((d2 * 4.0 - d1) / 3.0)
}

/// Coordinate Schouten bracket of two bivector fields at a chart point:
/// `[P,Q]^{ijk} = sum_l cyc_{ijk} (P^{il} d_l Q^{jk} + Q^{il} d_l P^{jk})`.
///
/// `p` and `q` return coefficient matrices (`P^{ij} = 2 C_{ij}`). The sign
/// matches [`schouten_lie`] on decomposable fields.
pub fn schouten_field<F, G>(p: F, q: G, point: &DVector<f64>, h: f64) -> Result<Multivector>
where
    F: Fn(&DVector<f64>) -> Result<RMat>,
    G: Fn(&DVector<f64>) -> Result<RMat>,
{
    if !(h > 0.0) {
        return Err(QhamError::Domain(format!("finite-difference step {h}")));
    }
    let n = point.len();
    let p0 = p(point)?;
    let q0 = q(point)?;
    for (m, name) in [(&p0, "P"), (&q0, "Q")] {
        if m.nrows() != n || m.ncols() != n {
            return Err(QhamError::DimensionMismatch {
                expected: n,
                got: m.nrows(),
            });
        }
        crate::numerics::ensure_finite(m, name)?;
    }
    let mut dp = Vec::with_capacity(n);
    let mut dq = Vec::with_capacity(n);
    for l in 0..n {
        let a = richardson_derivative(&p, point, l, h)?;
        let b = richardson_derivative(&q, point, l, h)?;
        crate::numerics::ensure_finite(&a, "dP")?;
        crate::numerics::ensure_finite(&b, "dQ")?;
        dp.push(a);
        dq.push(b);
    }
    // Coefficient matrices carry half the tensor, hence the factor 4.
    let term = |i: usize, j: usize, k: usize| -> f64 {
        4.0 * (0..n)
            .map(|l| p0[(i, l)] * dq[l][(j, k)] + q0[(i, l)] * dp[l][(j, k)])
            .sum::<f64>()
    };
    let mut out = Multivector::zero(n, 3);
    for (slot, t) in out.tuples.clone().iter().enumerate() {
        let (i, j, k) = (t[0], t[1], t[2]);
        out.coeffs[slot] = term(i, j, k) + term(j, k, i) + term(k, i, j);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn combination_counts() {
        assert_eq!(combinations(16, 3).len(), 560);
        assert_eq!(combinations(3, 0), vec![Vec::<usize>::new()]);
        assert!(combinations(2, 3).is_empty());
    }

    #[test]
    fn basic_wedge_signs() {
        let e1 = Multivector::basis(3, &[0]);
        let e2 = Multivector::basis(3, &[1]);
        assert_eq!(e1.wedge(&e1).unwrap().frobenius_norm(), 0.0);
        let a = e1.wedge(&e2).unwrap();
        let b = e2.wedge(&e1).unwrap();
        assert_eq!(a.add(&b).unwrap().frobenius_norm(), 0.0);
    }

    #[test]
    fn bivector_matrix_round_trip() {
        let p = RMat::from_row_slice(3, 3, &[0.0, 1.0, -2.0, -1.0, 0.0, 0.5, 2.0, -0.5, 0.0]);
        let m = Multivector::from_bivector_matrix(&p);
        assert_eq!(m.to_bivector_matrix(), p);
        assert_eq!(m.get(&[2, 0]), 2.0);
    }

    #[test]
    fn degree_zero_brackets_vanish() {
        let model = LieGroupModel::from_id("su2").unwrap();
        let s = Multivector::scalar(3, 2.0);
        let x = Multivector::basis(3, &[0]);
        assert_eq!(schouten_lie(&s, &x, &model).unwrap().frobenius_norm(), 0.0);
    }
}
