//! The canonical quasi-Poisson and quasi-Hamiltonian examples as point-wise
//! evaluators: `(G, P_G, phi_G, Id)`, `(g*, P_0, Id)`, the double `D(G)` with
//! its two-form, the operator identity tying a two-form to a bivector, and
//! the distribution spanned by `Im P#` and the orbit directions.
//!
//! Tangent vectors at group points are left-trivialized; tangent vectors on
//! `g*` use the linear coordinates. Fundamental vector fields follow
//! `x_M(m) = d/dt|_0 exp(-t x) . m`.

use nalgebra::DVector;
use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{QhamError, Result};
use crate::lie::{AlgebraElement, GroupElement, LieGroupModel};
use crate::multivector::{cartan_trivector, schouten_field, Multivector};
use crate::numerics::{condition_number, numerical_rank, CMat, RMat, C64};

/// Which example space a [`ChartedSpace`] realizes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SpaceKind {
    /// G acting on itself by conjugation.
    Conjugation,
    /// G acting on g* = g by the coadjoint action.
    Coadjoint,
    /// G x G acting on D(G) = G x G by (g,h).(a,b) = (g a h^-1, h b h^-1).
    Double,
}

/// A point of a charted space.
#[derive(Debug, Clone, PartialEq)]
pub enum SpacePoint {
    Group(Vec<GroupElement>),
    Algebra(AlgebraElement),
}

/// Value of a moment map.
#[derive(Debug, Clone, PartialEq)]
pub enum MomentValue {
    Group(Vec<GroupElement>),
    Algebra(AlgebraElement),
}

/// A manifold with a group action, described by evaluators.
#[derive(Debug, Clone)]
pub struct ChartedSpace {
    model: LieGroupModel,
    kind: SpaceKind,
}

impl ChartedSpace {
    pub fn new(model: &LieGroupModel, kind: SpaceKind) -> Self {
        Self {
            model: model.clone(),
            kind,
        }
    }

    pub fn model(&self) -> &LieGroupModel {
        &self.model
    }
    pub fn kind(&self) -> SpaceKind {
        self.kind
    }

    pub fn chart_name(&self) -> &'static str {
        match self.kind {
            SpaceKind::Conjugation => "exponential chart of G",
            SpaceKind::Coadjoint => "linear coordinates on g*",
            SpaceKind::Double => "exponential chart of G x G",
        }
    }

    /// Number of group factors of a point (0 for algebra points).
    fn factors(&self) -> usize {
        match self.kind {
            SpaceKind::Conjugation => 1,
            SpaceKind::Coadjoint => 0,
            SpaceKind::Double => 2,
        }
    }

    pub fn dim(&self) -> usize {
        self.model.dim() * self.factors().max(1)
    }

    /// Dimension of the acting group.
    pub fn acting_dim(&self) -> usize {
        match self.kind {
            SpaceKind::Double => 2 * self.model.dim(),
            _ => self.model.dim(),
        }
    }

    fn group_parts<'a>(&self, p: &'a SpacePoint) -> Result<&'a [GroupElement]> {
        match p {
            SpacePoint::Group(parts) if parts.len() == self.factors() => Ok(parts),
            _ => Err(QhamError::TypeMismatch(format!(
                "expected a point of the {:?} space",
                self.kind
            ))),
        }
    }

    fn algebra_part<'a>(&self, p: &'a SpacePoint) -> Result<&'a AlgebraElement> {
        match p {
            SpacePoint::Algebra(y) if y.len() == self.model.dim() => Ok(y),
            _ => Err(QhamError::TypeMismatch("expected a point of g*".into())),
        }
    }

    /// Action of the acting group (one element, or two for the double).
    pub fn act(&self, k: &[GroupElement], p: &SpacePoint) -> Result<SpacePoint> {
        let m = &self.model;
        let need = if self.kind == SpaceKind::Double { 2 } else { 1 };
        if k.len() != need {
            return Err(QhamError::DimensionMismatch {
                expected: need,
                got: k.len(),
            });
        }
        match self.kind {
            SpaceKind::Conjugation => {
                let g = &self.group_parts(p)?[0];
                Ok(SpacePoint::Group(vec![m.mul(&m.mul(&k[0], g), &m.inv(&k[0]))]))
            }
            SpaceKind::Coadjoint => {
                let y = self.algebra_part(p)?;
                Ok(SpacePoint::Algebra(m.ad_group(&k[0], y)))
            }
            SpaceKind::Double => {
                let parts = self.group_parts(p)?;
                let (g, h) = (&k[0], &k[1]);
                let hi = m.inv(h);
                let a = m.mul(&m.mul(g, &parts[0]), &hi);
                let b = m.mul(&m.mul(h, &parts[1]), &hi);
                Ok(SpacePoint::Group(vec![a, b]))
            }
        }
    }

    /// Fundamental vector field of `x` (an element of the acting algebra).
    pub fn fundamental_field(&self, x: &DVector<f64>, p: &SpacePoint) -> Result<DVector<f64>> {
        if x.len() != self.acting_dim() {
            return Err(QhamError::DimensionMismatch {
                expected: self.acting_dim(),
                got: x.len(),
            });
        }
        let m = &self.model;
        let n = m.dim();
        match self.kind {
            SpaceKind::Conjugation => {
                let g = &self.group_parts(p)?[0];
                Ok(x - m.ad_group(&m.inv(g), x))
            }
            SpaceKind::Coadjoint => {
                let y = self.algebra_part(p)?;
                Ok(-m.bracket(x, y))
            }
            SpaceKind::Double => {
                let parts = self.group_parts(p)?;
                let x1 = x.rows(0, n).into_owned();
                let x2 = x.rows(n, n).into_owned();
                let alpha = &x2 - m.ad_group(&m.inv(&parts[0]), &x1);
                let beta = &x2 - m.ad_group(&m.inv(&parts[1]), &x2);
                let mut out = DVector::zeros(2 * n);
                out.rows_mut(0, n).copy_from(&alpha);
                out.rows_mut(n, n).copy_from(&beta);
                Ok(out)
            }
        }
    }

    /// Matrix whose columns are the fundamental fields of the acting basis.
    pub fn fundamental_matrix(&self, p: &SpacePoint) -> Result<RMat> {
        let d = self.acting_dim();
        let mut out = RMat::zeros(self.dim(), d);
        for i in 0..d {
            let mut e = DVector::zeros(d);
            e[i] = 1.0;
            out.set_column(i, &self.fundamental_field(&e, p)?);
        }
        Ok(out)
    }

    /// Tangent (in the frame) of a curve through `p` from its values at +-h.
    pub fn frame_difference(
        &self,
        p: &SpacePoint,
        plus: &SpacePoint,
        minus: &SpacePoint,
        h: f64,
    ) -> Result<DVector<f64>> {
        match self.kind {
            SpaceKind::Coadjoint => {
                let (a, b) = (self.algebra_part(plus)?, self.algebra_part(minus)?);
                Ok((a - b) / (2.0 * h))
            }
            _ => {
                let base = self.group_parts(p)?;
                let pp = self.group_parts(plus)?;
                let pm = self.group_parts(minus)?;
                let n = self.model.dim();
                let mut out = DVector::zeros(self.dim());
                for f in 0..base.len() {
                    let v = (pp[f].matrix() - pm[f].matrix()) / C64::new(2.0 * h, 0.0);
                    let xi = self.model.coords(&(base[f].matrix().adjoint() * v));
                    out.rows_mut(f * n, n).copy_from(&xi);
                }
                Ok(out)
            }
        }
    }

    /// Fundamental field by central differences of the action along exp(-t x).
    pub fn fd_fundamental_field(&self, x: &DVector<f64>, p: &SpacePoint, h: f64) -> Result<DVector<f64>> {
        let n = self.model.dim();
        let elems = |s: f64| -> Vec<GroupElement> {
            if self.kind == SpaceKind::Double {
                vec![
                    self.model.exp(&(x.rows(0, n).into_owned() * -s)),
                    self.model.exp(&(x.rows(n, n).into_owned() * -s)),
                ]
            } else {
                vec![self.model.exp(&(x * -s))]
            }
        };
        let plus = self.act(&elems(h), p)?;
        let minus = self.act(&elems(-h), p)?;
        self.frame_difference(p, &plus, &minus, h)
    }

    /// Point with the given chart coordinates.
    pub fn from_chart(&self, coords: &DVector<f64>) -> Result<SpacePoint> {
        if coords.len() != self.dim() {
            return Err(QhamError::DimensionMismatch {
                expected: self.dim(),
                got: coords.len(),
            });
        }
        let n = self.model.dim();
        match self.kind {
            SpaceKind::Coadjoint => Ok(SpacePoint::Algebra(coords.clone())),
            _ => Ok(SpacePoint::Group(
                (0..self.factors())
                    .map(|f| self.model.exp(&coords.rows(f * n, n).into_owned()))
                    .collect(),
            )),
        }
    }

    /// Chart coordinates of a point.
    pub fn to_chart(&self, p: &SpacePoint) -> Result<DVector<f64>> {
        match self.kind {
            SpaceKind::Coadjoint => Ok(self.algebra_part(p)?.clone()),
            _ => {
                let n = self.model.dim();
                let parts = self.group_parts(p)?;
                let mut out = DVector::zeros(self.dim());
                for (f, g) in parts.iter().enumerate() {
                    out.rows_mut(f * n, n).copy_from(&self.model.log(g)?);
                }
                Ok(out)
            }
        }
    }

    /// Jacobian taking frame components to chart components at a chart point.
    pub fn frame_to_chart(&self, coords: &DVector<f64>) -> Result<RMat> {
        let n = self.model.dim();
        match self.kind {
            SpaceKind::Coadjoint => Ok(RMat::identity(n, n)),
            _ => {
                let mut j = RMat::zeros(self.dim(), self.dim());
                for f in 0..self.factors() {
                    let eta = self.model.dexp_eta(&coords.rows(f * n, n).into_owned())?;
                    j.view_mut((f * n, f * n), (n, n)).copy_from(&eta);
                }
                Ok(j)
            }
        }
    }

    /// Random chart coordinates with entries in [-scale, scale].
    pub fn random_chart_point<R: Rng>(&self, rng: &mut R, scale: f64) -> DVector<f64> {
        DVector::from_fn(self.dim(), |_, _| rng.gen_range(-scale..=scale))
    }
}

/// Which bivector a [`QuasiPoissonBundle`] carries.
#[derive(Debug, Clone)]
enum BivectorKind {
    Pg,
    P0,
    Eq1(QuasiHamBundle),
}

/// `(M, P, phi_M, mu)` as evaluators.
#[derive(Debug, Clone)]
pub struct QuasiPoissonBundle {
    name: String,
    space: ChartedSpace,
    kind: BivectorKind,
    phi: Multivector,
}

/// `(G, P_G, phi_G, Id)`.
pub fn pg_bundle(model: &LieGroupModel) -> QuasiPoissonBundle {
    QuasiPoissonBundle {
        name: format!("PG:{}", model.name()),
        space: ChartedSpace::new(model, SpaceKind::Conjugation),
        kind: BivectorKind::Pg,
        phi: cartan_trivector(model),
    }
}

/// `(g*, P_0, Id)` with `phi = 0`.
pub fn p0_bundle(model: &LieGroupModel) -> QuasiPoissonBundle {
    QuasiPoissonBundle {
        name: format!("P0:{}", model.name()),
        space: ChartedSpace::new(model, SpaceKind::Coadjoint),
        kind: BivectorKind::P0,
        phi: Multivector::zero(model.dim(), 3),
    }
}

/// The double with the bivector obtained from its two-form.
pub fn eq1_bundle(double: &QuasiHamBundle) -> QuasiPoissonBundle {
    let model = double.space.model();
    QuasiPoissonBundle {
        name: format!("D:{}", model.name()),
        space: double.space.clone(),
        kind: BivectorKind::Eq1(double.clone()),
        phi: cartan_trivector(&model.doubled()),
    }
}

impl QuasiPoissonBundle {
    pub fn name(&self) -> &str {
        &self.name
    }
    pub fn space(&self) -> &ChartedSpace {
        &self.space
    }

    /// Cartan trivector of the acting algebra.
    pub fn phi(&self) -> &Multivector {
        &self.phi
    }

    /// Coefficient matrix of P in the frame at `p`.
    pub fn bivector(&self, p: &SpacePoint) -> Result<RMat> {
        let m = self.space.model();
        match &self.kind {
            BivectorKind::Pg => {
                // (1/2) sum_i Ad_{g^-1} e_i ^ e_i has coefficient matrix
                // (Ad_{g^-1} - Ad_g) / 4.
                let g = &self.space.group_parts(p)?[0];
                let a = m.ad_group_matrix(&m.inv(g));
                Ok((&a - a.transpose()) * 0.25)
            }
            BivectorKind::P0 => {
                let y = self.space.algebra_part(p)?;
                Ok(m.ad_matrix(y) * -0.5)
            }
            BivectorKind::Eq1(double) => {
                let c = eq1_candidate(double, p, f64::INFINITY)?;
                Ok((&c.coefficient - c.coefficient.transpose()) * 0.5)
            }
        }
    }

    /// phi_M in the frame: phi pushed through the fundamental fields.
    pub fn trivector(&self, p: &SpacePoint) -> Result<Multivector> {
        self.phi.push_forward(&self.space.fundamental_matrix(p)?)
    }

    pub fn moment(&self, p: &SpacePoint) -> Result<MomentValue> {
        match &self.kind {
            BivectorKind::Pg => Ok(MomentValue::Group(self.space.group_parts(p)?.to_vec())),
            BivectorKind::P0 => Ok(MomentValue::Algebra(self.space.algebra_part(p)?.clone())),
            BivectorKind::Eq1(double) => {
                let (u1, u2) = double.moment(p)?;
                Ok(MomentValue::Group(vec![u1, u2]))
            }
        }
    }

    /// Coefficient matrix of P in chart coordinates.
    pub fn chart_bivector(&self, coords: &DVector<f64>) -> Result<RMat> {
        let p = self.space.from_chart(coords)?;
        let c = self.bivector(&p)?;
        let j = self.space.frame_to_chart(coords)?;
        Ok(&j * c * j.transpose())
    }

    /// phi_M in chart coordinates.
    pub fn chart_trivector(&self, coords: &DVector<f64>) -> Result<Multivector> {
        let p = self.space.from_chart(coords)?;
        let f = self.space.fundamental_matrix(&p)?;
        let j = self.space.frame_to_chart(coords)?;
        self.phi.push_forward(&(j * f))
    }

    /// The bracket [P, P] at a chart point by finite differences.
    pub fn chart_bracket(&self, coords: &DVector<f64>, h: f64) -> Result<Multivector> {
        let eval = |x: &DVector<f64>| self.chart_bivector(x);
        schouten_field(eval, eval, coords, h)
    }
}

/// Least-squares constant `c` with `[P,P] ~ c phi_M` at one chart point.
pub fn measure_bracket_constant(bundle: &QuasiPoissonBundle, coords: &DVector<f64>, h: f64) -> Result<Option<f64>> {
    let s = bundle.chart_bracket(coords, h)?;
    let phi = bundle.chart_trivector(coords)?;
    let pp: f64 = phi.coeffs().iter().map(|v| v * v).sum();
    if pp < 1e-16 {
        return Ok(None);
    }
    let sp: f64 = s.coeffs().iter().zip(phi.coeffs()).map(|(a, b)| a * b).sum();
    Ok(Some(sp / pp))
}

/// Report of [`verify_quasi_poisson`].
#[derive(Debug, Clone, Serialize)]
pub struct QpReport {
    pub bundle: String,
    pub n_points: usize,
    pub seed: Option<u64>,
    pub c: f64,
    pub c_estimate: Option<f64>,
    pub max_residual: f64,
    pub tolerance: f64,
    pub pass: bool,
}

/// Checks `[P,P] = c phi_M` at the given chart points.
pub fn verify_quasi_poisson(
    bundle: &QuasiPoissonBundle,
    points: &[DVector<f64>],
    fd_step: f64,
    c: f64,
    tolerance: f64,
    seed: Option<u64>,
) -> Result<QpReport> {
    if points.is_empty() {
        return Err(QhamError::Domain("no points to verify".into()));
    }
    let residuals: Vec<f64> = points
        .par_iter()
        .map(|x| -> Result<f64> {
            let s = bundle.chart_bracket(x, fd_step)?;
            let phi = bundle.chart_trivector(x)?;
            Ok(s.sub(&phi.scale(c))?.frobenius_norm())
        })
        .collect::<Result<_>>()?;
    let mut c_estimate = None;
    for x in points {
        if let Some(v) = measure_bracket_constant(bundle, x, fd_step)? {
            c_estimate = Some(v);
            break;
        }
    }
    let max_residual = residuals.iter().cloned().fold(0.0, f64::max);
    Ok(QpReport {
        bundle: bundle.name.clone(),
        n_points: points.len(),
        seed,
        c,
        c_estimate,
        max_residual,
        tolerance,
        pass: max_residual < tolerance,
    })
}

/// `dim(Im P# + T(G.m))` by SVD rank.
pub fn distribution_dim(bundle: &QuasiPoissonBundle, p: &SpacePoint, tol: f64) -> Result<usize> {
    let c = bundle.bivector(p)?;
    let f = bundle.space.fundamental_matrix(p)?;
    let mut span = RMat::zeros(c.nrows(), c.ncols() + f.ncols());
    span.view_mut((0, 0), (c.nrows(), c.ncols())).copy_from(&c);
    span.view_mut((0, c.ncols()), (f.nrows(), f.ncols())).copy_from(&f);
    Ok(numerical_rank(&span, tol))
}

/// `(D(G), omega, mu)`.
#[derive(Debug, Clone)]
pub struct QuasiHamBundle {
    space: ChartedSpace,
}

/// The double D(G) with action (g,h).(a,b) = (g a h^-1, Ad_h b) and moment
/// map (a,b) -> (Ad_a b, b^-1).
pub fn double_bundle(model: &LieGroupModel) -> QuasiHamBundle {
    QuasiHamBundle {
        space: ChartedSpace::new(model, SpaceKind::Double),
    }
}

impl QuasiHamBundle {
    pub fn space(&self) -> &ChartedSpace {
        &self.space
    }

    fn parts<'a>(&self, p: &'a SpacePoint) -> Result<(&'a GroupElement, &'a GroupElement)> {
        let parts = self.space.group_parts(p)?;
        Ok((&parts[0], &parts[1]))
    }

    pub fn moment(&self, p: &SpacePoint) -> Result<(GroupElement, GroupElement)> {
        let m = self.space.model();
        let (a, b) = self.parts(p)?;
        let u1 = m.mul(&m.mul(a, b), &m.inv(a));
        Ok((u1, m.inv(b)))
    }

    /// omega on left-trivialized tangents (alpha, beta) in g + g.
    pub fn omega_left(&self, p: &SpacePoint, v1: &DVector<f64>, v2: &DVector<f64>) -> Result<f64> {
        let m = self.space.model();
        let n = m.dim();
        let (_, b) = self.parts(p)?;
        for v in [v1, v2] {
            if v.len() != 2 * n {
                return Err(QhamError::DimensionMismatch {
                    expected: 2 * n,
                    got: v.len(),
                });
            }
        }
        let (a1, b1) = (v1.rows(0, n).into_owned(), v1.rows(n, n).into_owned());
        let (a2, b2) = (v2.rows(0, n).into_owned(), v2.rows(n, n).into_owned());
        let adb = m.ad_group_matrix(b);
        // <Ad_b a*theta ^ a*theta>(v1, v2)
        let t1 = (&adb * &a1).dot(&a2) - (&adb * &a2).dot(&a1);
        // <a*theta ^ (b*theta^L + b*theta^R)>(v1, v2)
        let t2 = a1.dot(&(&b2 + &adb * &b2)) - a2.dot(&(&b1 + &adb * &b1));
        Ok(0.5 * (t1 + t2))
    }

    /// omega on matrix tangents `(va, vb)` at `(a, b)`.
    pub fn omega(&self, p: &SpacePoint, v1: (&CMat, &CMat), v2: (&CMat, &CMat)) -> Result<f64> {
        let m = self.space.model();
        let (a, b) = self.parts(p)?;
        let lift = |v: (&CMat, &CMat)| -> Result<DVector<f64>> {
            let xa = m.theta_l(a, v.0)?;
            let xb = m.theta_l(b, v.1)?;
            Ok(concat(&xa, &xb))
        };
        self.omega_left(p, &lift(v1)?, &lift(v2)?)
    }

    /// Matrix W with W_kl = omega(e_k, e_l) in the left-trivialized frame.
    pub fn omega_matrix(&self, p: &SpacePoint) -> Result<RMat> {
        let d = self.space.dim();
        let mut w = RMat::zeros(d, d);
        let basis = |i: usize| {
            let mut e = DVector::zeros(d);
            e[i] = 1.0;
            e
        };
        for k in 0..d {
            for l in k + 1..d {
                let v = self.omega_left(p, &basis(k), &basis(l))?;
                w[(k, l)] = v;
                w[(l, k)] = -v;
            }
        }
        Ok(w)
    }

    /// Left-trivialized differential of the moment map: frame tangent of D(G)
    /// to `(u1^-1 du1, u2^-1 du2)`.
    pub fn moment_differential(&self, p: &SpacePoint) -> Result<RMat> {
        let m = self.space.model();
        let n = m.dim();
        let (a, b) = self.parts(p)?;
        let ad_a = m.ad_group_matrix(a);
        let ad_b = m.ad_group_matrix(b);
        let ad_bi = ad_b.transpose();
        let ident = RMat::identity(n, n);
        let mut d = RMat::zeros(2 * n, 2 * n);
        // u1 = a b a^-1: u1^-1 du1 = Ad_a (Ad_{b^-1} alpha + beta - alpha)
        d.view_mut((0, 0), (n, n)).copy_from(&(&ad_a * (&ad_bi - &ident)));
        d.view_mut((0, n), (n, n)).copy_from(&ad_a);
        // u2 = b^-1: u2^-1 du2 = -Ad_b beta
        d.view_mut((n, n), (n, n)).copy_from(&(-&ad_b));
        Ok(d)
    }

    /// Matrix of mu*(theta^L - theta^R) (or `+` when `sum` is set) on the frame.
    fn pulled_back_theta(&self, p: &SpacePoint, sum: bool) -> Result<RMat> {
        let m = self.space.model();
        let n = m.dim();
        let (u1, u2) = self.moment(p)?;
        let s = if sum { 1.0 } else { -1.0 };
        let ident = RMat::identity(n, n);
        let mut k = RMat::zeros(2 * n, 2 * n);
        k.view_mut((0, 0), (n, n)).copy_from(&(&ident + m.ad_group_matrix(&u1) * s));
        k.view_mut((n, n), (n, n)).copy_from(&(&ident + m.ad_group_matrix(&u2) * s));
        Ok(k * self.moment_differential(p)?)
    }

    /// Residuals of `iota(x_M) omega = s mu*<theta^L + theta^R, x>` for the
    /// conventions s in {1/2, 1, -1/2, -1}.
    pub fn moment_axiom_residuals(&self, p: &SpacePoint, x: &DVector<f64>) -> Result<Vec<(f64, f64)>> {
        let w = self.omega_matrix(p)?;
        let xm = self.space.fundamental_field(x, p)?;
        let lhs = w.transpose() * &xm;
        let rhs = self.pulled_back_theta(p, true)?.transpose() * x;
        Ok([0.5, 1.0, -0.5, -1.0]
            .iter()
            .map(|s| (*s, (&lhs - &rhs * *s).norm()))
            .collect())
    }
}

/// Convention in {1/2, 1, -1/2, -1} with the smallest moment-axiom residual
/// at one point, with that residual.
pub fn scan_moment_axiom(bundle: &QuasiHamBundle, p: &SpacePoint, x: &DVector<f64>) -> Result<(f64, f64)> {
    let res = bundle.moment_axiom_residuals(p, x)?;
    Ok(res
        .into_iter()
        .min_by(|a, b| a.1.partial_cmp(&b.1).unwrap())
        .expect("four conventions"))
}

/// Pushforward of frame tangents of D(G) under the action of (g, h).
pub fn double_action_pushforward(model: &LieGroupModel, h: &GroupElement) -> RMat {
    let n = model.dim();
    let ad = model.ad_group_matrix(h);
    let mut t = RMat::zeros(2 * n, 2 * n);
    t.view_mut((0, 0), (n, n)).copy_from(&ad);
    t.view_mut((n, n), (n, n)).copy_from(&ad);
    t
}

fn concat(a: &DVector<f64>, b: &DVector<f64>) -> DVector<f64> {
    let mut out = DVector::zeros(a.len() + b.len());
    out.rows_mut(0, a.len()).copy_from(a);
    out.rows_mut(a.len(), b.len()).copy_from(b);
    out
}

/// `E = Id - 1/4 sum_i (e_i)_M (x) mu*(theta^L_i - theta^R_i)` in the frame.
pub fn eq1_operator(bundle: &QuasiHamBundle, p: &SpacePoint) -> Result<RMat> {
    let d = bundle.space.dim();
    let f = bundle.space.fundamental_matrix(p)?;
    let k = bundle.pulled_back_theta(p, false)?;
    Ok(RMat::identity(d, d) - f * k * 0.25)
}

/// Output of [`eq1_candidate`].
#[derive(Debug, Clone)]
pub struct Eq1Candidate {
    /// The operator E.
    pub operator: RMat,
    /// Matrix of `P# = E (omega^flat)^-1` acting on covector components.
    pub p_sharp: RMat,
    /// Coefficient matrix C of the candidate bivector.
    pub coefficient: RMat,
    /// |C + C^T|.
    pub antisymmetry_residual: f64,
    /// Condition number of omega at the point.
    pub condition: f64,
}

/// Candidate bivector solving `P# o omega^flat = E` at a regular point.
pub fn eq1_candidate(bundle: &QuasiHamBundle, p: &SpacePoint, max_condition: f64) -> Result<Eq1Candidate> {
    let w = bundle.omega_matrix(p)?;
    let condition = condition_number(&w);
    if !(condition < max_condition) {
        return Err(QhamError::Singular(format!(
            "omega degenerate at point (condition {condition:.3e})"
        )));
    }
    // omega^flat(v) = omega(v, .) has matrix W^T; P#(alpha) = P(alpha, .)
    // has matrix pi^T for the bilinear form pi = 2C.
    let flat = w.transpose();
    let flat_inv = flat
        .try_inverse()
        .ok_or_else(|| QhamError::Singular("omega not invertible".into()))?;
    let e = eq1_operator(bundle, p)?;
    let p_sharp = &e * flat_inv;
    let coefficient = p_sharp.transpose() * 0.5;
    let antisymmetry_residual = (&coefficient + coefficient.transpose()).norm();
    Ok(Eq1Candidate {
        operator: e,
        p_sharp,
        coefficient,
        antisymmetry_residual,
        condition,
    })
}

/// Draws a point of D(G) whose two-form has condition number below the bound.
pub fn sample_regular_point<R: Rng>(bundle: &QuasiHamBundle, rng: &mut R, max_condition: f64) -> Result<SpacePoint> {
    for _ in 0..1000 {
        let coords = bundle.space.random_chart_point(rng, 1.5);
        let p = bundle.space.from_chart(&coords)?;
        let w = bundle.omega_matrix(&p)?;
        if condition_number(&w) < max_condition {
            return Ok(p);
        }
    }
    Err(QhamError::Sampling("no regular point in 1000 draws".into()))
}

/// Second argument of [`conjugacy_family_member`].
#[derive(Debug, Clone)]
pub enum FiberPoint {
    Group(GroupElement),
    Algebra(AlgebraElement),
}

/// Membership in the fiber over t of the family of conjugacy classes
/// `C_{exp(tx)}` (t != 0) degenerating to the coadjoint orbit of x (t = 0).
pub fn conjugacy_family_member(
    model: &LieGroupModel,
    x: &AlgebraElement,
    t: f64,
    candidate: &FiberPoint,
    tol: f64,
) -> Result<bool> {
    if t != 0.0 {
        let g = match candidate {
            FiberPoint::Group(g) => g,
            FiberPoint::Algebra(_) => {
                return Err(QhamError::TypeMismatch("t != 0 needs a group element".into()))
            }
        };
        let base = model.exp(&(x * t));
        let s1 = model.block_spectra(g.matrix());
        let s2 = model.block_spectra(base.matrix());
        for ((fac, a), b) in model.factors().iter().zip(&s1).zip(&s2) {
            let same = match fac.kind {
                crate::lie::FactorKind::Torus(_) => {
                    a.iter().zip(b).all(|(u, v)| (u - v).norm() < tol)
                }
                _ => same_spectrum(a, b, tol),
            };
            if !same {
                return Ok(false);
            }
        }
        Ok(true)
    } else {
        let y = match candidate {
            FiberPoint::Algebra(y) => y,
            FiberPoint::Group(_) => {
                return Err(QhamError::TypeMismatch("t = 0 needs an algebra element".into()))
            }
        };
        let (mx, my) = (model.to_matrix(x), model.to_matrix(y));
        for fac in model.factors() {
            let (o, s) = (fac.mat_offset, fac.mat_size);
            let bx = mx.view((o, o), (s, s)).into_owned();
            let by = my.view((o, o), (s, s)).into_owned();
            if let crate::lie::FactorKind::Torus(_) = fac.kind {
                if (0..s).any(|i| (bx[(i, i)] - by[(i, i)]).norm() > tol) {
                    return Ok(false);
                }
                continue;
            }
            // Ad-invariant polynomials tr(X^k).
            let (mut px, mut py) = (bx.clone(), by.clone());
            for _ in 2..=s {
                px = &px * &bx;
                py = &py * &by;
                let (tx, ty) = (px.trace(), py.trace());
                if (tx - ty).norm() > tol * tx.norm().max(1.0) {
                    return Ok(false);
                }
            }
        }
        Ok(true)
    }
}

/// Multiset equality of two spectra up to `tol`.
fn same_spectrum(a: &[C64], b: &[C64], tol: f64) -> bool {
    if a.len() != b.len() {
        return false;
    }
    let mut used = vec![false; b.len()];
    for u in a {
        let best = b
            .iter()
            .enumerate()
            .filter(|(j, _)| !used[*j])
            .map(|(j, v)| (j, (u - v).norm()))
            .min_by(|x, y| x.1.partial_cmp(&y.1).unwrap());
        match best {
            Some((j, d)) if d < tol => used[j] = true,
            _ => return false,
        }
    }
    true
}
