//! Faces of the fundamental alcove and Weyl chamber for SU(2) and SU(3),
//! implosion strata, the stratum two-forms and their t -> 0 family, the
//! implosion relation, and dimension inventories of master moduli spaces.
//!
//! The maximal torus is the diagonal subgroup. A point of t is written
//! `x = diag(i theta)` with `sum theta = 0`. The alcove is
//! `theta_1 >= ... >= theta_n, theta_1 - theta_n <= 2 pi`. It is the simplex
//! with vertices `0` and `2 pi w_k`, where `w_k` are the fundamental
//! coweights. The chamber is the cone `theta_1 >= ... >= theta_n`.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{QhamError, Result};
use crate::lie::{AlgebraElement, FactorKind, GroupElement, LieGroupModel};
use crate::numerics::{CMat, RMat, C64};

/// Human-readable description of the alcove normalization.
pub const ALCOVE_NORMALIZATION: &str =
    "x = diag(i theta), sum theta = 0, theta_1 >= ... >= theta_n, theta_1 - theta_n <= 2 pi";

const FACE_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Ambient {
    Alcove,
    Chamber,
}

/// A face of the alcove or the chamber.
#[derive(Debug, Clone, Serialize)]
pub struct Face {
    pub ambient: Ambient,
    pub id: String,
    pub dim: usize,
    /// Indices of the simplex (or cone) vertices spanning the face; vertex 0
    /// is the origin.
    pub vertices: Vec<usize>,
    pub stabilizer_type: String,
    pub dim_stabilizer: usize,
    pub dim_commutator: usize,
    pub contains_origin_in_closure: bool,
    /// Barycenter in theta coordinates.
    pub theta: Vec<f64>,
    #[serde(skip)]
    pub representative_point: AlgebraElement,
}

/// Rank and matrix size for the supported models.
fn su_rank(model: &LieGroupModel) -> Result<usize> {
    match model.factors() {
        [f] if f.kind == FactorKind::Su2 => Ok(2),
        [f] if f.kind == FactorKind::Su3 => Ok(3),
        _ => Err(QhamError::UnsupportedModel(format!(
            "implosion needs su2 or su3, got {}",
            model.name()
        ))),
    }
}

/// `2 pi w_k` in theta coordinates, k = 1..n-1, with vertex 0 the origin.
fn simplex_vertices(n: usize) -> Vec<Vec<f64>> {
    let mut out = vec![vec![0.0; n]];
    for k in 1..n {
        out.push(
            (0..n)
                .map(|j| {
                    let w = if j < k {
                        (n - k) as f64 / n as f64
                    } else {
                        -(k as f64) / n as f64
                    };
                    2.0 * PI * w
                })
                .collect(),
        );
    }
    out
}

/// Blocks of equal entries of `theta` (mod 2 pi when `periodic`).
fn eigen_blocks(theta: &[f64], periodic: bool, tol: f64) -> Vec<Vec<usize>> {
    let mut blocks: Vec<Vec<usize>> = Vec::new();
    for (j, t) in theta.iter().enumerate() {
        let same = |u: &f64| {
            let d = t - u;
            if periodic {
                let k = (d / (2.0 * PI)).round();
                (d - 2.0 * PI * k).abs() < tol
            } else {
                d.abs() < tol
            }
        };
        match blocks.iter_mut().find(|b| same(&theta[b[0]])) {
            Some(b) => b.push(j),
            None => blocks.push(vec![j]),
        }
    }
    blocks
}

fn stabilizer_data(blocks: &[Vec<usize>], n: usize) -> (String, usize, usize) {
    let sizes: Vec<usize> = blocks.iter().map(|b| b.len()).collect();
    let dim_stab = sizes.iter().map(|k| k * k).sum::<usize>() - 1;
    let dim_comm = sizes.iter().map(|k| k * k - 1).sum();
    let label = if sizes.len() == 1 {
        format!("SU({n})")
    } else if sizes.iter().all(|k| *k == 1) {
        "T".to_string()
    } else {
        let mut s = sizes.clone();
        s.sort_unstable_by(|a, b| b.cmp(a));
        let inner: Vec<String> = s.iter().map(|k| format!("U({k})")).collect();
        format!("S({})", inner.join("x"))
    };
    (label, dim_stab, dim_comm)
}

fn theta_to_algebra(model: &LieGroupModel, theta: &[f64]) -> AlgebraElement {
    let n = theta.len();
    let m = CMat::from_fn(n, n, |i, j| if i == j { C64::new(0.0, theta[i]) } else { C64::new(0.0, 0.0) });
    model.coords(&m)
}

/// Theta coordinates of an element of t.
pub fn algebra_to_theta(model: &LieGroupModel, x: &AlgebraElement) -> Result<Vec<f64>> {
    su_rank(model)?;
    let m = model.to_matrix(x);
    let n = m.nrows();
    for i in 0..n {
        for j in 0..n {
            if i != j && m[(i, j)].norm() > FACE_TOL {
                return Err(QhamError::Domain("element not in the diagonal torus".into()));
            }
        }
    }
    Ok((0..n).map(|i| m[(i, i)].im).collect())
}

fn face_id(ambient: Ambient, vertices: &[usize]) -> String {
    let tag = match ambient {
        Ambient::Alcove => "a",
        Ambient::Chamber => "c",
    };
    let v: Vec<String> = vertices.iter().map(|v| v.to_string()).collect();
    format!("{tag}{}", v.join(""))
}

/// All faces of the closed alcove, indexed by nonempty vertex subsets.
pub fn alcove_faces(model: &LieGroupModel) -> Result<Vec<Face>> {
    let n = su_rank(model)?;
    let verts = simplex_vertices(n);
    let mut out = Vec::new();
    for mask in 1u32..(1 << n) {
        let vs: Vec<usize> = (0..n).filter(|i| mask & (1 << i) != 0).collect();
        let theta: Vec<f64> = (0..n)
            .map(|j| vs.iter().map(|v| verts[*v][j]).sum::<f64>() / vs.len() as f64)
            .collect();
        let (label, ds, dc) = stabilizer_data(&eigen_blocks(&theta, true, 1e-9), n);
        out.push(Face {
            ambient: Ambient::Alcove,
            id: face_id(Ambient::Alcove, &vs),
            dim: vs.len() - 1,
            contains_origin_in_closure: vs.contains(&0),
            vertices: vs,
            stabilizer_type: label,
            dim_stabilizer: ds,
            dim_commutator: dc,
            representative_point: theta_to_algebra(model, &theta),
            theta,
        });
    }
    out.sort_by(|a, b| (a.dim, &a.id).cmp(&(b.dim, &b.id)));
    Ok(out)
}

/// All faces of the closed chamber: cones over subsets of the nonzero
/// alcove vertices (the empty subset is the origin).
pub fn chamber_faces(model: &LieGroupModel) -> Result<Vec<Face>> {
    let n = su_rank(model)?;
    let verts = simplex_vertices(n);
    let mut out = Vec::new();
    for mask in 0u32..(1 << (n - 1)) {
        let vs: Vec<usize> = (1..n).filter(|i| mask & (1 << (i - 1)) != 0).collect();
        // Point on the cone, scaled well inside the alcove.
        let theta: Vec<f64> = (0..n)
            .map(|j| vs.iter().map(|v| verts[*v][j]).sum::<f64>() / (vs.len() + 1) as f64)
            .collect();
        let (label, ds, dc) = stabilizer_data(&eigen_blocks(&theta, false, 1e-9), n);
        let mut ids = vec![0];
        ids.extend(&vs);
        out.push(Face {
            ambient: Ambient::Chamber,
            id: face_id(Ambient::Chamber, &ids),
            dim: vs.len(),
            contains_origin_in_closure: true,
            vertices: vs,
            stabilizer_type: label,
            dim_stabilizer: ds,
            dim_commutator: dc,
            representative_point: theta_to_algebra(model, &theta),
            theta,
        });
    }
    out.sort_by(|a, b| (a.dim, &a.id).cmp(&(b.dim, &b.id)));
    Ok(out)
}

/// Chamber face corresponding to an alcove face with the origin in its
/// closure; `None` for faces in B.
pub fn tau_of(model: &LieGroupModel, sigma: &Face) -> Result<Option<Face>> {
    if sigma.ambient != Ambient::Alcove {
        return Err(QhamError::Domain("tau_of takes an alcove face".into()));
    }
    if !sigma.contains_origin_in_closure {
        return Ok(None);
    }
    let rest: Vec<usize> = sigma.vertices.iter().cloned().filter(|v| *v != 0).collect();
    Ok(chamber_faces(model)?.into_iter().find(|f| f.vertices == rest))
}

/// Alcove faces that deform to the empty set.
pub fn b_faces(model: &LieGroupModel) -> Result<Vec<Face>> {
    Ok(alcove_faces(model)?
        .into_iter()
        .filter(|f| !f.contains_origin_in_closure)
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ImplodedSpace {
    DoubleImplosion,
    CotangentImplosion,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum StratumKind {
    Multiplicative,
    Additive,
}

/// A stratum `G/[G_s,G_s] x exp(s)` or `G/[G_t,G_t] x t`.
#[derive(Debug, Clone, Serialize)]
pub struct Stratum {
    pub face: Face,
    pub kind: StratumKind,
    pub dim: usize,
    /// Deformation target: a chamber face id, `"EMPTY"`, or absent for
    /// additive strata.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub target: Option<String>,
}

pub fn stratum_inventory(model: &LieGroupModel, space: ImplodedSpace) -> Result<Vec<Stratum>> {
    let g = model.dim();
    match space {
        ImplodedSpace::DoubleImplosion => alcove_faces(model)?
            .into_iter()
            .map(|f| {
                let target = match tau_of(model, &f)? {
                    Some(t) => t.id,
                    None => "EMPTY".to_string(),
                };
                Ok(Stratum {
                    dim: g - f.dim_commutator + f.dim,
                    face: f,
                    kind: StratumKind::Multiplicative,
                    target: Some(target),
                })
            })
            .collect(),
        ImplodedSpace::CotangentImplosion => Ok(chamber_faces(model)?
            .into_iter()
            .map(|f| Stratum {
                dim: g - f.dim_commutator + f.dim,
                face: f,
                kind: StratumKind::Additive,
                target: None,
            })
            .collect()),
    }
}

/// Barycentric coordinates of `theta` with respect to the alcove simplex,
/// plus the residual of the fit.
fn barycentric(theta: &[f64]) -> (Vec<f64>, f64) {
    let n = theta.len();
    let verts = simplex_vertices(n);
    let v = DMatrix::from_fn(n, n - 1, |j, k| verts[k + 1][j]);
    let th = DVector::from_column_slice(theta);
    let svd = v.clone().svd(true, true);
    let lam = svd.solve(&th, 1e-12).expect("svd solve");
    let resid = (&v * &lam - &th).norm();
    let mut out = vec![1.0 - lam.sum()];
    out.extend(lam.iter());
    (out, resid)
}

/// Whether `x` lies in the relative interior of `face`.
pub fn face_contains(model: &LieGroupModel, face: &Face, x: &AlgebraElement) -> Result<bool> {
    let theta = match algebra_to_theta(model, x) {
        Ok(t) => t,
        Err(_) => return Ok(false),
    };
    let (lam, resid) = barycentric(&theta);
    if resid > FACE_TOL {
        return Ok(false);
    }
    Ok(match face.ambient {
        Ambient::Alcove => lam
            .iter()
            .enumerate()
            .all(|(i, l)| if face.vertices.contains(&i) { *l > FACE_TOL } else { l.abs() <= FACE_TOL }),
        Ambient::Chamber => lam
            .iter()
            .enumerate()
            .skip(1)
            .all(|(i, l)| if face.vertices.contains(&i) { *l > FACE_TOL } else { l.abs() <= FACE_TOL }),
    })
}

/// `1/2 <(Ad_{e^x} - Ad_{e^-x}) u1, u2> + <u1, eta2> - <u2, eta1>`.
pub fn lambda_sigma(
    model: &LieGroupModel,
    face: &Face,
    x: &AlgebraElement,
    (u1, eta1): (&AlgebraElement, &AlgebraElement),
    (u2, eta2): (&AlgebraElement, &AlgebraElement),
) -> Result<f64> {
    if face.ambient != Ambient::Alcove || !face_contains(model, face, x)? {
        return Err(QhamError::Domain(format!("x not in face {}", face.id)));
    }
    let g = model.exp(x);
    let a = model.ad_group_matrix(&g);
    let diff = &a - a.transpose();
    let half = |p: &AlgebraElement, q: &AlgebraElement, e: &AlgebraElement| 0.25 * (&diff * p).dot(q) + p.dot(e);
    // Evaluated as f(1,2) - f(2,1) so that antisymmetry is exact.
    Ok(half(u1, u2, eta2) - half(u2, u1, eta1))
}

/// `<u1, v2> - <u2, v1> + <x, [u1, u2]>`.
pub fn omega_tau(
    model: &LieGroupModel,
    x: &AlgebraElement,
    (u1, v1): (&AlgebraElement, &AlgebraElement),
    (u2, v2): (&AlgebraElement, &AlgebraElement),
) -> f64 {
    u1.dot(v2) - u2.dot(v1) + x.dot(&model.bracket(u1, u2))
}

/// Largest `T` such that `d exp_{tx}` is invertible for `|t| < T`:
/// `2 pi / max_alpha |alpha(x)|`.
pub fn family_interval(model: &LieGroupModel, x: &AlgebraElement) -> Result<f64> {
    let theta = algebra_to_theta(model, x)?;
    let mut top: f64 = 0.0;
    for a in &theta {
        for b in &theta {
            top = top.max((a - b).abs());
        }
    }
    Ok(if top == 0.0 { f64::INFINITY } else { 2.0 * PI / top })
}

/// The rescaled stratum form
/// `<y1, A y2> + 1/2 (<y1, D z2> - <y2, D z1>)` with
/// `A = (Ad_{e^{-tx}} - Ad_{e^{tx}}) / 2t` and
/// `D = dexp_{tx} + Ad_{e^{tx}} dexp_{tx}`; `omega_tau` at t = 0.
pub fn stratum_family_form(
    model: &LieGroupModel,
    face: &Face,
    x: &AlgebraElement,
    t: f64,
    (y1, z1): (&AlgebraElement, &AlgebraElement),
    (y2, z2): (&AlgebraElement, &AlgebraElement),
) -> Result<f64> {
    if !face.contains_origin_in_closure || !face_contains(model, face, x)? {
        return Err(QhamError::Domain(format!("x not in face {}", face.id)));
    }
    // At x = 0 the form does not depend on t.
    if t == 0.0 || x.iter().all(|v| *v == 0.0) {
        return Ok(omega_tau(model, x, (y1, z1), (y2, z2)));
    }
    if t.abs() >= family_interval(model, x)? {
        return Err(QhamError::Singular(format!("d exp not invertible at t = {t}")));
    }
    let tx = x * t;
    let g = model.exp(&tx);
    let ad = model.ad_group_matrix(&g);
    let a = (ad.transpose() - &ad) / (2.0 * t);
    let dexp = model.dexp_left(&tx)?;
    let d = &dexp + &ad * &dexp;
    let half = |y: &AlgebraElement, y_: &AlgebraElement, z_: &AlgebraElement| 0.5 * y.dot(&(&a * y_)) + 0.5 * y.dot(&(&d * z_));
    Ok(half(y1, y2, z2) - half(y2, y1, z1))
}

/// Lifts a diagonal `b` to theta coordinates in the closed alcove.
pub fn alcove_lift(model: &LieGroupModel, b: &GroupElement) -> Result<Vec<f64>> {
    let n = su_rank(model)?;
    let m = b.matrix();
    for i in 0..n {
        for j in 0..n {
            if i != j && m[(i, j)].norm() > FACE_TOL {
                return Err(QhamError::Domain("b is not in the maximal torus".into()));
            }
        }
    }
    let phi: Vec<f64> = (0..n).map(|i| m[(i, i)].arg()).collect();
    let tol = 1e-9;
    for code in 0..3usize.pow(n as u32) {
        let mut c = code;
        let theta: Vec<f64> = phi
            .iter()
            .map(|p| {
                let k = (c % 3) as f64 - 1.0;
                c /= 3;
                p + 2.0 * PI * k
            })
            .collect();
        let sorted = theta.windows(2).all(|w| w[0] >= w[1] - tol);
        if theta.iter().sum::<f64>().abs() < tol && sorted && theta[0] - theta[n - 1] <= 2.0 * PI + tol {
            return Ok(theta);
        }
    }
    Err(QhamError::Domain("b outside exp of the closed alcove".into()))
}

/// Implosion relation on a fixed `b`: `(a, b) ~ (a', b)` iff
/// `a^{-1} a'` lies in the commutator subgroup of the centralizer of b.
///
/// For diagonal b the centralizer is `S(prod U(k_i))` over blocks of equal
/// eigenvalues; its commutator subgroup consists of block-diagonal matrices
/// with every block of determinant 1.
pub fn implosion_equiv(
    model: &LieGroupModel,
    (a, b): (&GroupElement, &GroupElement),
    (a2, b2): (&GroupElement, &GroupElement),
    tol: f64,
) -> Result<bool> {
    if model.distance(b, b2) > 1e-10 {
        return Err(QhamError::Domain("implosion relation compares equal b only".into()));
    }
    let theta = alcove_lift(model, b)?;
    let blocks = eigen_blocks(&theta, true, 1e-9);
    let k = model.mul(&model.inv(a), a2);
    let km = k.matrix();
    let n = theta.len();
    let block_of = |i: usize| blocks.iter().position(|bl| bl.contains(&i)).unwrap();
    for i in 0..n {
        for j in 0..n {
            if block_of(i) != block_of(j) && km[(i, j)].norm() > tol {
                return Ok(false);
            }
        }
    }
    for bl in &blocks {
        let sub = CMat::from_fn(bl.len(), bl.len(), |r, c| km[(bl[r], bl[c])]);
        if (sub.determinant() - C64::new(1.0, 0.0)).norm() > tol {
            return Ok(false);
        }
    }
    Ok(true)
}

/// One stratum of a master moduli space.
#[derive(Debug, Clone, Serialize)]
pub struct MasterStratum {
    pub faces: Vec<String>,
    pub dim: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct MasterInventory {
    pub group: String,
    pub genus: usize,
    pub r: usize,
    pub multiplicative: Vec<MasterStratum>,
    pub additive: Vec<MasterStratum>,
    pub top_dim: usize,
}

const MAX_MASTER_STRATA: usize = 100_000;

fn tuples(strata: &[Stratum], r: usize, base: usize) -> Result<Vec<MasterStratum>> {
    let count = strata.len().checked_pow(r as u32).unwrap_or(usize::MAX);
    if count > MAX_MASTER_STRATA {
        return Err(QhamError::Domain(format!("{count} strata exceed the listing limit")));
    }
    let mut out = vec![MasterStratum {
        faces: Vec::new(),
        dim: base,
    }];
    for _ in 0..r {
        out = out
            .iter()
            .flat_map(|m| {
                strata.iter().map(move |s| {
                    let mut faces = m.faces.clone();
                    faces.push(s.face.id.clone());
                    MasterStratum {
                        faces,
                        dim: m.dim + s.dim,
                    }
                })
            })
            .collect();
    }
    Ok(out)
}

/// Strata of the fusion of `r` imploded doubles with `genus` internally
/// fused doubles, and of its additive counterpart.
pub fn master_moduli_dims(model: &LieGroupModel, genus: usize, r: usize) -> Result<MasterInventory> {
    let base = 2 * genus * model.dim();
    let mult = stratum_inventory(model, ImplodedSpace::DoubleImplosion)?;
    let add = stratum_inventory(model, ImplodedSpace::CotangentImplosion)?;
    let multiplicative = tuples(&mult, r, base)?;
    let additive = tuples(&add, r, base)?;
    let top_dim = multiplicative.iter().map(|m| m.dim).max().unwrap_or(base);
    Ok(MasterInventory {
        group: model.name().to_string(),
        genus,
        r,
        multiplicative,
        additive,
        top_dim,
    })
}

/// Dimension of the centralizer of `exp(x)` in G and of its derived
/// algebra, computed numerically from Ad.
pub fn centralizer_dims(model: &LieGroupModel, x: &AlgebraElement, periodic: bool, tol: f64) -> (usize, usize) {
    let n = model.dim();
    let op: RMat = if periodic {
        model.ad_group_matrix(&model.exp(x)) - RMat::identity(n, n)
    } else {
        model.ad_matrix(x)
    };
    let svd = op.clone().svd(false, true);
    let vt = svd.v_t.expect("v_t");
    let kernel: Vec<DVector<f64>> = svd
        .singular_values
        .iter()
        .enumerate()
        .filter(|(_, s)| **s < tol)
        .map(|(i, _)| vt.row(i).transpose())
        .collect();
    let mut brackets = RMat::zeros(n, kernel.len() * kernel.len());
    for (i, u) in kernel.iter().enumerate() {
        for (j, v) in kernel.iter().enumerate() {
            brackets.set_column(i * kernel.len() + j, &model.bracket(u, v));
        }
    }
    let derived = crate::numerics::numerical_rank(&brackets, tol);
    (kernel.len(), derived)
}
