//! Compact matrix Lie group models.
//!
//! Every model is realized as a group of block-diagonal unitary matrices,
//! one block per factor. The invariant form is `<X, Y> = -Re tr(XY)` and the
//! stored basis is orthonormal for it, so algebra coordinates are plain
//! Euclidean vectors and `g*` is identified with `g`.
//!
//! Linear maps on the algebra follow the column convention `L e_i = L_{ji} e_j`.

use std::f64::consts::{PI, SQRT_2};

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use serde::Serialize;

use crate::error::{QhamError, Result};
use crate::numerics::{
    antisymmetric_function, eta_scalar, eta_series_coefficients, inv_eta_scalar, logm,
    matrix_series, normal_eigenvalues, CMat, RMat, C64,
};

/// Coordinates of an algebra element in the orthonormal basis.
pub type AlgebraElement = DVector<f64>;

/// One simple or abelian factor of a model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum FactorKind {
    Su2,
    Su3,
    So3,
    Torus(usize),
}

impl FactorKind {
    fn parse(s: &str) -> Result<Self> {
        match s.trim() {
            "su2" => Ok(Self::Su2),
            "su3" => Ok(Self::Su3),
            "so3" => Ok(Self::So3),
            other => {
                if let Some(k) = other.strip_prefix("torus:") {
                    match k.trim().parse::<usize>() {
                        Ok(k) if k > 0 => Ok(Self::Torus(k)),
                        _ => Err(QhamError::UnsupportedModel(other.to_string())),
                    }
                } else {
                    Err(QhamError::UnsupportedModel(other.to_string()))
                }
            }
        }
    }

    pub fn label(&self) -> String {
        match self {
            Self::Su2 => "su2".into(),
            Self::Su3 => "su3".into(),
            Self::So3 => "so3".into(),
            Self::Torus(k) => format!("torus:{k}"),
        }
    }

    fn matrix_size(&self) -> usize {
        match self {
            Self::Su2 => 2,
            Self::Su3 | Self::So3 => 3,
            Self::Torus(k) => *k,
        }
    }

    /// sup over unit X of the operator norm of ad_X.
    fn ad_bound(&self) -> f64 {
        match self {
            Self::Su2 | Self::Su3 => SQRT_2,
            Self::So3 => 1.0 / SQRT_2,
            Self::Torus(_) => 0.0,
        }
    }

    /// sup over unit X of the largest |eigenvalue| of the matrix of X.
    fn spectral_scale(&self) -> f64 {
        match self {
            Self::Su2 | Self::So3 => 1.0 / SQRT_2,
            Self::Su3 => (2.0f64 / 3.0).sqrt(),
            Self::Torus(_) => 1.0,
        }
    }

    fn raw_basis(&self) -> Vec<CMat> {
        let z = C64::new(0.0, 0.0);
        let one = C64::new(1.0, 0.0);
        let i = C64::new(0.0, 1.0);
        match self {
            Self::Su2 => {
                let s = 1.0 / SQRT_2;
                // sigma_k / (i sqrt 2) = -i sigma_k / sqrt 2
                let sx = CMat::from_row_slice(2, 2, &[z, one, one, z]);
                let sy = CMat::from_row_slice(2, 2, &[z, -i, i, z]);
                let sz = CMat::from_row_slice(2, 2, &[one, z, z, -one]);
                [sx, sy, sz]
                    .into_iter()
                    .map(|m| m * C64::new(0.0, -s))
                    .collect()
            }
            Self::Su3 => gell_mann()
                .into_iter()
                .map(|m| m * C64::new(0.0, -1.0))
                .collect(),
            Self::So3 => {
                let s = 1.0 / SQRT_2;
                (0..3)
                    .map(|k| {
                        CMat::from_fn(3, 3, |a, b| C64::new(-levi_civita(k, a, b) * s, 0.0))
                    })
                    .collect()
            }
            Self::Torus(k) => (0..*k)
                .map(|j| CMat::from_fn(*k, *k, |a, b| if a == j && b == j { i } else { z }))
                .collect(),
        }
    }
}

fn gell_mann() -> Vec<CMat> {
    let z = C64::new(0.0, 0.0);
    let o = C64::new(1.0, 0.0);
    let i = C64::new(0.0, 1.0);
    let r3 = 1.0 / 3f64.sqrt();
    let m = |v: [C64; 9]| CMat::from_row_slice(3, 3, &v);
    vec![
        m([z, o, z, o, z, z, z, z, z]),
        m([z, -i, z, i, z, z, z, z, z]),
        m([o, z, z, z, -o, z, z, z, z]),
        m([z, z, o, z, z, z, o, z, z]),
        m([z, z, -i, z, z, z, i, z, z]),
        m([z, z, z, z, z, o, z, o, z]),
        m([z, z, z, z, z, -i, z, i, z]),
        m([o * r3, z, z, z, o * r3, z, z, z, o * (-2.0 * r3)]),
    ]
}

pub(crate) fn levi_civita(i: usize, j: usize, k: usize) -> f64 {
    match (i, j, k) {
        (0, 1, 2) | (1, 2, 0) | (2, 0, 1) => 1.0,
        (0, 2, 1) | (2, 1, 0) | (1, 0, 2) => -1.0,
        _ => 0.0,
    }
}

/// Placement of a factor inside the block-diagonal realization.
#[derive(Debug, Clone, Serialize)]
pub struct Factor {
    pub kind: FactorKind,
    pub dim_offset: usize,
    pub dim: usize,
    pub mat_offset: usize,
    pub mat_size: usize,
}

/// A group element: a block-diagonal unitary matrix of the model.
#[derive(Debug, Clone, PartialEq)]
pub struct GroupElement {
    matrix: CMat,
}

impl GroupElement {
    pub fn matrix(&self) -> &CMat {
        &self.matrix
    }

    pub(crate) fn from_matrix_unchecked(matrix: CMat) -> Self {
        Self { matrix }
    }
}

/// A compact matrix Lie group with an orthonormal algebra basis.
#[derive(Debug, Clone)]
pub struct LieGroupModel {
    name: String,
    factors: Vec<Factor>,
    dim: usize,
    matrix_size: usize,
    basis: Vec<CMat>,
    f: Vec<f64>,
    ad_bound: f64,
    spectral_scale: f64,
}

impl LieGroupModel {
    /// Builds a model from an identifier: `su2`, `su3`, `so3`, `torus:k` or
    /// `prod:a,b,...`.
    pub fn from_id(id: &str) -> Result<Self> {
        let id = id.trim();
        let kinds: Vec<FactorKind> = if let Some(rest) = id.strip_prefix("prod:") {
            let parts: Vec<&str> = rest.split(',').collect();
            if parts.is_empty() || parts.iter().any(|p| p.trim().is_empty()) {
                return Err(QhamError::UnsupportedModel(id.to_string()));
            }
            parts
                .into_iter()
                .map(FactorKind::parse)
                .collect::<Result<_>>()?
        } else {
            vec![FactorKind::parse(id)?]
        };
        Self::from_factors(&kinds)
    }

    /// Direct product of the given factors.
    pub fn from_factors(kinds: &[FactorKind]) -> Result<Self> {
        if kinds.is_empty() {
            return Err(QhamError::UnsupportedModel("empty product".into()));
        }
        let matrix_size: usize = kinds.iter().map(|k| k.matrix_size()).sum();
        let mut factors = Vec::new();
        let mut basis = Vec::new();
        let (mut dim_off, mut mat_off) = (0, 0);
        for kind in kinds {
            let local = gram_schmidt(kind.raw_basis());
            let size = kind.matrix_size();
            for b in &local {
                let mut m = CMat::zeros(matrix_size, matrix_size);
                m.view_mut((mat_off, mat_off), (size, size)).copy_from(b);
                basis.push(m);
            }
            factors.push(Factor {
                kind: *kind,
                dim_offset: dim_off,
                dim: local.len(),
                mat_offset: mat_off,
                mat_size: size,
            });
            dim_off += local.len();
            mat_off += size;
        }
        let name = if kinds.len() == 1 {
            kinds[0].label()
        } else {
            format!(
                "prod:{}",
                kinds.iter().map(|k| k.label()).collect::<Vec<_>>().join(",")
            )
        };
        let dim = basis.len();
        let mut model = Self {
            name,
            factors,
            dim,
            matrix_size,
            basis,
            f: vec![0.0; dim * dim * dim],
            ad_bound: kinds.iter().map(|k| k.ad_bound()).fold(0.0, f64::max),
            spectral_scale: kinds.iter().map(|k| k.spectral_scale()).fold(0.0, f64::max),
        };
        for j in 0..dim {
            for k in 0..dim {
                let c = &model.basis[j] * &model.basis[k] - &model.basis[k] * &model.basis[j];
                for i in 0..dim {
                    model.f[(i * dim + j) * dim + k] = model.inner_matrix(&model.basis[i], &c);
                }
            }
        }
        Ok(model)
    }

    /// The model `G x G`.
    pub fn doubled(&self) -> Self {
        let mut kinds: Vec<FactorKind> = self.factors.iter().map(|f| f.kind).collect();
        kinds.extend(self.factors.iter().map(|f| f.kind));
        Self::from_factors(&kinds).expect("factors of a valid model")
    }

    pub fn name(&self) -> &str {
        &self.name
    }
    pub fn dim(&self) -> usize {
        self.dim
    }
    pub fn matrix_size(&self) -> usize {
        self.matrix_size
    }
    pub fn basis(&self) -> &[CMat] {
        &self.basis
    }
    pub fn factors(&self) -> &[Factor] {
        &self.factors
    }
    pub fn is_abelian(&self) -> bool {
        self.factors
            .iter()
            .all(|f| matches!(f.kind, FactorKind::Torus(_)))
    }
    /// Description of the invariant form, reported alongside results.
    pub fn inner_product_label(&self) -> &'static str {
        "<X,Y> = -Re tr(XY), orthonormal basis, direct sum on products"
    }

    /// f_ijk = <e_i, [e_j, e_k]>.
    pub fn f(&self, i: usize, j: usize, k: usize) -> f64 {
        self.f[(i * self.dim + j) * self.dim + k]
    }

    /// The full structure-constant table as `f[i][j][k]`.
    pub fn structure_constants(&self) -> Vec<Vec<Vec<f64>>> {
        (0..self.dim)
            .map(|i| {
                (0..self.dim)
                    .map(|j| (0..self.dim).map(|k| self.f(i, j, k)).collect())
                    .collect()
            })
            .collect()
    }

    /// Upper bound on |ad_X|_op / |X|.
    pub fn ad_bound(&self) -> f64 {
        self.ad_bound
    }

    /// Radius of the ball on which exp is injective and eta(ad) is regular.
    pub fn chart_radius(&self) -> f64 {
        let by_ad = if self.ad_bound > 0.0 {
            PI / self.ad_bound
        } else {
            f64::INFINITY
        };
        by_ad.min(PI / self.spectral_scale)
    }

    /// Radius below which exp/log round trips.
    pub fn injectivity_radius(&self) -> f64 {
        PI / self.spectral_scale
    }

    fn check_dim(&self, x: &AlgebraElement) -> Result<()> {
        if x.len() != self.dim {
            return Err(QhamError::DimensionMismatch {
                expected: self.dim,
                got: x.len(),
            });
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(QhamError::NonFinite("algebra element".into()));
        }
        Ok(())
    }

    /// <A, B> = -Re tr(AB) on matrices.
    pub fn inner_matrix(&self, a: &CMat, b: &CMat) -> f64 {
        let mut tr = 0.0;
        for i in 0..a.nrows() {
            for k in 0..a.ncols() {
                tr += (a[(i, k)] * b[(k, i)]).re;
            }
        }
        -tr
    }

    pub fn to_matrix(&self, x: &AlgebraElement) -> CMat {
        let mut m = CMat::zeros(self.matrix_size, self.matrix_size);
        for (c, e) in x.iter().zip(&self.basis) {
            if *c != 0.0 {
                m += e * C64::new(*c, 0.0);
            }
        }
        m
    }

    /// Orthogonal projection of a matrix onto the algebra.
    pub fn coords(&self, m: &CMat) -> AlgebraElement {
        DVector::from_iterator(self.dim, self.basis.iter().map(|e| self.inner_matrix(e, m)))
    }

    /// Coordinates of a matrix required to lie in the algebra.
    pub fn coords_checked(&self, m: &CMat) -> Result<AlgebraElement> {
        let x = self.coords(m);
        let resid = (self.to_matrix(&x) - m).norm();
        if resid > 1e-9 * m.norm().max(1.0) {
            return Err(QhamError::NotTangent(format!(
                "residual {resid:.3e} off the algebra"
            )));
        }
        Ok(x)
    }

    pub fn bracket(&self, x: &AlgebraElement, y: &AlgebraElement) -> AlgebraElement {
        let n = self.dim;
        let mut out = DVector::zeros(n);
        for j in 0..n {
            if x[j] == 0.0 {
                continue;
            }
            for k in 0..n {
                let xy = x[j] * y[k];
                if xy == 0.0 {
                    continue;
                }
                for i in 0..n {
                    out[i] += self.f(i, j, k) * xy;
                }
            }
        }
        out
    }

    /// Matrix of ad_x: (ad_x)_{jk} = -f_{jki} x_i.
    pub fn ad_matrix(&self, x: &AlgebraElement) -> RMat {
        let n = self.dim;
        DMatrix::from_fn(n, n, |j, k| (0..n).map(|i| -self.f(j, k, i) * x[i]).sum())
    }

    pub fn identity(&self) -> GroupElement {
        GroupElement::from_matrix_unchecked(CMat::identity(self.matrix_size, self.matrix_size))
    }

    /// Validates a matrix as a group element of this model.
    pub fn element(&self, m: CMat) -> Result<GroupElement> {
        let n = self.matrix_size;
        if m.nrows() != n || m.ncols() != n {
            return Err(QhamError::DimensionMismatch {
                expected: n,
                got: m.nrows(),
            });
        }
        let unit = (m.adjoint() * &m - CMat::identity(n, n)).norm();
        if !(unit < 1e-10) {
            return Err(QhamError::NotInGroup(format!(
                "unitarity residual {unit:.3e}"
            )));
        }
        for fac in &self.factors {
            // off-block entries must vanish
            for r in 0..n {
                for c in fac.mat_offset..fac.mat_offset + fac.mat_size {
                    let inside = r >= fac.mat_offset && r < fac.mat_offset + fac.mat_size;
                    if !inside && (m[(r, c)].norm() > 1e-10 || m[(c, r)].norm() > 1e-10) {
                        return Err(QhamError::NotInGroup("not block diagonal".into()));
                    }
                }
            }
            let block = m
                .view((fac.mat_offset, fac.mat_offset), (fac.mat_size, fac.mat_size))
                .into_owned();
            match fac.kind {
                FactorKind::Su2 | FactorKind::Su3 => {
                    let d = block.determinant();
                    if (d - C64::new(1.0, 0.0)).norm() > 1e-9 {
                        return Err(QhamError::NotInGroup(format!("determinant {d}")));
                    }
                }
                FactorKind::So3 => {
                    if block.iter().any(|c| c.im.abs() > 1e-10) {
                        return Err(QhamError::NotInGroup("so3 block not real".into()));
                    }
                    let d = block.determinant();
                    if (d - C64::new(1.0, 0.0)).norm() > 1e-9 {
                        return Err(QhamError::NotInGroup(format!("determinant {d}")));
                    }
                }
                FactorKind::Torus(k) => {
                    for a in 0..k {
                        for b in 0..k {
                            if a != b && block[(a, b)].norm() > 1e-10 {
                                return Err(QhamError::NotInGroup("torus block not diagonal".into()));
                            }
                        }
                    }
                }
            }
        }
        Ok(GroupElement::from_matrix_unchecked(m))
    }

    pub fn mul(&self, a: &GroupElement, b: &GroupElement) -> GroupElement {
        GroupElement::from_matrix_unchecked(&a.matrix * &b.matrix)
    }

    pub fn inv(&self, a: &GroupElement) -> GroupElement {
        GroupElement::from_matrix_unchecked(a.matrix.adjoint())
    }

    /// Distance |a - b| in the Frobenius norm of the matrix realization.
    pub fn distance(&self, a: &GroupElement, b: &GroupElement) -> f64 {
        (&a.matrix - &b.matrix).norm()
    }

    /// Matrix exponential (scaling and squaring with a Pade approximant).
    pub fn exp(&self, x: &AlgebraElement) -> GroupElement {
        GroupElement::from_matrix_unchecked(self.to_matrix(x).exp())
    }

    /// Principal logarithm; eigenvalue arguments must lie in (-pi, pi).
    pub fn log(&self, g: &GroupElement) -> Result<AlgebraElement> {
        for ev in normal_eigenvalues(&g.matrix) {
            if ev.arg().abs() > PI - 1e-9 {
                return Err(QhamError::LogDomain(format!(
                    "eigenvalue {ev} on the branch cut"
                )));
            }
        }
        let l = logm(&g.matrix)?;
        self.coords_checked(&l)
            .map_err(|_| QhamError::LogDomain("principal logarithm leaves the algebra".into()))
    }

    /// Ad_g X = g X g^{-1}.
    pub fn ad_group(&self, g: &GroupElement, x: &AlgebraElement) -> AlgebraElement {
        let m = &g.matrix * self.to_matrix(x) * g.matrix.adjoint();
        self.coords(&m)
    }

    /// Matrix of Ad_g.
    pub fn ad_group_matrix(&self, g: &GroupElement) -> RMat {
        let gi = g.matrix.adjoint();
        let mut out = RMat::zeros(self.dim, self.dim);
        for (k, e) in self.basis.iter().enumerate() {
            let col = self.coords(&(&g.matrix * e * &gi));
            out.set_column(k, &col);
        }
        out
    }

    /// eta(ad_X) with eta(s) = s / (1 - e^{-s}).
    pub fn dexp_eta(&self, x: &AlgebraElement) -> Result<RMat> {
        self.check_dim(x)?;
        let ad = self.ad_matrix(x);
        if ad.norm() < 0.5 {
            return Ok(matrix_series(&ad, &eta_series_coefficients()));
        }
        antisymmetric_function(&ad, |z| {
            let lam = z.im;
            let k = (lam / (2.0 * PI)).round();
            if k != 0.0 && (lam - 2.0 * PI * k).abs() < 1e-8 * lam.abs().max(1.0) {
                return Err(QhamError::Singular(format!(
                    "ad_X has eigenvalue {z} at a pole of eta"
                )));
            }
            Ok(eta_scalar(z))
        })
    }

    /// Left-trivialized differential of exp at X: (1 - e^{-ad_X}) / ad_X.
    pub fn dexp_left(&self, x: &AlgebraElement) -> Result<RMat> {
        self.check_dim(x)?;
        let ad = self.ad_matrix(x);
        antisymmetric_function(&ad, |z| Ok(inv_eta_scalar(z)))
    }

    /// theta^L(v) = g^{-1} v in algebra coordinates.
    pub fn theta_l(&self, g: &GroupElement, v: &CMat) -> Result<AlgebraElement> {
        self.coords_checked(&(g.matrix.adjoint() * v))
    }

    /// theta^R(v) = v g^{-1} in algebra coordinates.
    pub fn theta_r(&self, g: &GroupElement, v: &CMat) -> Result<AlgebraElement> {
        self.coords_checked(&(v * g.matrix.adjoint()))
    }

    /// Uniform coefficients in [-scale, scale].
    pub fn random_algebra<R: Rng>(&self, rng: &mut R, scale: f64) -> AlgebraElement {
        DVector::from_fn(self.dim, |_, _| rng.gen_range(-scale..=scale))
    }

    /// exp of a random algebra element with coefficients in [-1.5, 1.5].
    pub fn random_group<R: Rng>(&self, rng: &mut R) -> GroupElement {
        let x = self.random_algebra(rng, 1.5);
        self.exp(&x)
    }

    /// Spectra of the diagonal blocks of a matrix.
    pub fn block_spectra(&self, m: &CMat) -> Vec<Vec<C64>> {
        self.factors
            .iter()
            .map(|fac| {
                let block = m
                    .view((fac.mat_offset, fac.mat_offset), (fac.mat_size, fac.mat_size))
                    .into_owned();
                match fac.kind {
                    FactorKind::Torus(_) => (0..fac.mat_size).map(|i| block[(i, i)]).collect(),
                    _ => normal_eigenvalues(&block),
                }
            })
            .collect()
    }
}

/// Gram-Schmidt for the form -Re tr(AB), keeping the input order.
fn gram_schmidt(raw: Vec<CMat>) -> Vec<CMat> {
    let ip = |a: &CMat, b: &CMat| -> f64 {
        let mut tr = 0.0;
        for i in 0..a.nrows() {
            for k in 0..a.ncols() {
                tr += (a[(i, k)] * b[(k, i)]).re;
            }
        }
        -tr
    };
    let mut out: Vec<CMat> = Vec::new();
    for v in raw {
        let mut w = v.clone();
        for u in &out {
            let c = ip(u, &v);
            w -= u * C64::new(c, 0.0);
        }
        let n = ip(&w, &w).sqrt();
        out.push(w * C64::new(1.0 / n, 0.0));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn dimensions_match_kinds() {
        for (id, dim, size) in [
            ("su2", 3, 2),
            ("su3", 8, 3),
            ("so3", 3, 3),
            ("torus:2", 2, 2),
            ("prod:su2,su2", 6, 4),
            ("prod:su2,torus:1", 4, 3),
        ] {
            let m = LieGroupModel::from_id(id).unwrap();
            assert_eq!((m.dim(), m.matrix_size()), (dim, size), "{id}");
        }
        assert!(LieGroupModel::from_id("sp4").is_err());
        assert!(LieGroupModel::from_id("torus:0").is_err());
        assert!(LieGroupModel::from_id("prod:").is_err());
    }

    #[test]
    fn torus_is_abelian() {
        let m = LieGroupModel::from_id("torus:3").unwrap();
        assert!(m.structure_constants().iter().flatten().flatten().all(|v| *v == 0.0));
        assert!(m.is_abelian());
    }

    #[test]
    fn log_rejects_branch_cut() {
        let m = LieGroupModel::from_id("su2").unwrap();
        let minus = m.element(-CMat::identity(2, 2)).unwrap();
        assert!(matches!(m.log(&minus), Err(QhamError::LogDomain(_))));
    }

    #[test]
    fn dexp_eta_pole_is_reported() {
        let m = LieGroupModel::from_id("su2").unwrap();
        // ad_X eigenvalues are +-i sqrt(2)|X|; put them on 2 pi i.
        let x = DVector::from_vec(vec![2.0 * PI / SQRT_2, 0.0, 0.0]);
        assert!(matches!(m.dexp_eta(&x), Err(QhamError::Singular(_))));
    }

    #[test]
    fn element_validation() {
        let m = LieGroupModel::from_id("su2").unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let g = m.random_group(&mut rng);
        assert!(m.element(g.matrix().clone()).is_ok());
        let scaled = g.matrix() * C64::new(0.0, 1.0);
        assert!(m.element(scaled).is_err());
    }
}
