//! The deformation family `G x R* ⊔ g x {0}` in the chart
//! `(x, t) -> (exp(tx), t)`: rescaled bivector and trivector, the fiberwise
//! multiplication, the fused family and convergence-order fits as t -> 0.

use std::f64::consts::PI;

use serde::Serialize;

use crate::error::{QhamError, Result};
use crate::lie::{AlgebraElement, GroupElement, LieGroupModel};
use crate::multivector::{cartan_trivector, Multivector};
use crate::numerics::{antisymmetric_function, eta_scalar, loglog_slope, RMat, C64};

/// Chart `(x, t) -> (exp(tx), t)` restricted to `|t x| < chart_radius`.
#[derive(Debug, Clone)]
pub struct DeformationChart {
    model: LieGroupModel,
}

/// Point of the chart domain.
#[derive(Debug, Clone, PartialEq)]
pub struct FamilyPoint {
    pub x: AlgebraElement,
    pub t: f64,
}

/// Point of the family: a group element over t != 0 or an algebra element
/// over t = 0.
#[derive(Debug, Clone, PartialEq)]
pub enum GPoint {
    Group { g: GroupElement, t: f64 },
    Algebra { x: AlgebraElement },
}

impl GPoint {
    pub fn t(&self) -> f64 {
        match self {
            GPoint::Group { t, .. } => *t,
            GPoint::Algebra { .. } => 0.0,
        }
    }
}

impl DeformationChart {
    pub fn new(model: &LieGroupModel) -> Self {
        Self { model: model.clone() }
    }

    pub fn model(&self) -> &LieGroupModel {
        &self.model
    }

    pub fn contains(&self, p: &FamilyPoint) -> bool {
        p.x.len() == self.model.dim() && p.t.is_finite() && (p.t * p.x.norm()).abs() < self.model.chart_radius()
    }

    pub fn map(&self, p: &FamilyPoint) -> Result<GPoint> {
        self.check(p)?;
        if p.t == 0.0 {
            Ok(GPoint::Algebra { x: p.x.clone() })
        } else {
            Ok(GPoint::Group {
                g: self.model.exp(&(&p.x * p.t)),
                t: p.t,
            })
        }
    }

    /// Inverse of [`Self::map`] on its image.
    pub fn inverse(&self, q: &GPoint) -> Result<FamilyPoint> {
        match q {
            GPoint::Algebra { x } => Ok(FamilyPoint { x: x.clone(), t: 0.0 }),
            GPoint::Group { g, t } => {
                if *t == 0.0 {
                    return Err(QhamError::Domain("group point over t = 0".into()));
                }
                let p = FamilyPoint {
                    x: self.model.log(g)? / *t,
                    t: *t,
                };
                self.check(&p)?;
                Ok(p)
            }
        }
    }

    fn check(&self, p: &FamilyPoint) -> Result<()> {
        if p.x.len() != self.model.dim() {
            return Err(QhamError::DimensionMismatch {
                expected: self.model.dim(),
                got: p.x.len(),
            });
        }
        if !self.contains(p) {
            return Err(QhamError::Domain(format!(
                "|t x| = {:.4} outside the chart radius {:.4}",
                (p.t * p.x.norm()).abs(),
                self.model.chart_radius()
            )));
        }
        Ok(())
    }
}

/// Coefficient matrix of the pullback of `t P_G` through the chart; the
/// linear Poisson structure `-1/2 ad_x` at t = 0.
///
/// With `s = t ad_x` the chart Jacobian is `eta(s) / t` and P_G at `exp(tx)`
/// is `(e^{-s} - e^{s}) / 4`, so the pullback is `-(s/2)(eta(s) - s/2) / t`.
pub fn family_bivector(model: &LieGroupModel, x: &AlgebraElement, t: f64) -> Result<RMat> {
    DeformationChart::new(model).check(&FamilyPoint { x: x.clone(), t })?;
    let ad = model.ad_matrix(x);
    if t == 0.0 {
        return Ok(ad * -0.5);
    }
    let s = &ad * t;
    antisymmetric_function(&s, |z| {
        if z.im.abs() >= 2.0 * PI {
            return Err(QhamError::Singular(format!("eta pole at {z}")));
        }
        Ok(-(z / 2.0) * (eta_scalar(z) - z / 2.0) / t)
    })
}

/// Pullback of `t P_G` by finite differences of `x -> exp(tx)`, for checking
/// [`family_bivector`].
pub fn family_bivector_fd(model: &LieGroupModel, x: &AlgebraElement, t: f64) -> Result<RMat> {
    if t == 0.0 {
        return Err(QhamError::Domain("finite-difference pullback needs t != 0".into()));
    }
    let n = model.dim();
    let g = model.exp(&(x * t));
    let gi = model.inv(&g);
    // effective step t*h in the group
    let h = 1e-4 / t.abs();
    let column = |i: usize, step: f64| {
        let mut xp = x.clone();
        let mut xm = x.clone();
        xp[i] += step;
        xm[i] -= step;
        let d = (model.exp(&(xp * t)).matrix() - model.exp(&(xm * t)).matrix()) / C64::new(2.0 * step, 0.0);
        model.coords(&(gi.matrix() * d))
    };
    let mut l = RMat::zeros(n, n);
    for i in 0..n {
        let c = (column(i, h / 2.0) * 4.0 - column(i, h)) / 3.0;
        l.set_column(i, &c);
    }
    let li = l
        .try_inverse()
        .ok_or_else(|| QhamError::Singular("chart Jacobian not invertible".into()))?;
    let a = model.ad_group_matrix(&gi);
    let c_left = (&a - a.transpose()) * 0.25;
    Ok(&li * c_left * li.transpose() * t)
}

/// Pullback of `t^2 phi_G` through the chart.
///
/// The conjugation fundamental field of `e_i` in the chart is `(ad_x)e_i`
/// for every t (`eta(s)(1 - e^{-s}) = s`), so this is `t^2 (ad_x)_* phi`.
pub fn family_trivector(model: &LieGroupModel, x: &AlgebraElement, t: f64) -> Result<Multivector> {
    DeformationChart::new(model).check(&FamilyPoint { x: x.clone(), t })?;
    if t == 0.0 {
        return Ok(Multivector::zero(model.dim(), 3));
    }
    Ok(cartan_trivector(model).push_forward(&model.ad_matrix(x))?.scale(t * t))
}

/// Fiberwise multiplication: `(ab, t)` for t != 0 and `(a + b, 0)` at t = 0.
pub fn mult_map(model: &LieGroupModel, a: &GPoint, b: &GPoint) -> Result<GPoint> {
    match (a, b) {
        (GPoint::Algebra { x }, GPoint::Algebra { x: y }) => Ok(GPoint::Algebra { x: x + y }),
        (GPoint::Group { g, t }, GPoint::Group { g: h, t: s }) if t == s => Ok(GPoint::Group {
            g: model.mul(g, h),
            t: *t,
        }),
        _ => Err(QhamError::Domain(format!(
            "points lie over different fibers ({} and {})",
            a.t(),
            b.t()
        ))),
    }
}

/// `|(1/t) log(exp(tx) exp(ty)) - (x + y) - (t/2)[x, y]|`.
pub fn mult_chart_residual(model: &LieGroupModel, x: &AlgebraElement, y: &AlgebraElement, t: f64) -> Result<f64> {
    if t == 0.0 {
        return Ok(0.0);
    }
    let prod = model.mul(&model.exp(&(x * t)), &model.exp(&(y * t)));
    let z = model.log(&prod)? / t;
    Ok((z - (x + y) - model.bracket(x, y) * (t / 2.0)).norm())
}

/// Chart expression of the fundamental `psi` bivector for G x G acting on
/// itself by conjugation: `1/2 sum_i (ad_{x1} e_i, 0) ^ (0, ad_{x2} e_i)`.
pub fn psi_chart(model: &LieGroupModel, x1: &AlgebraElement, x2: &AlgebraElement) -> RMat {
    let n = model.dim();
    let (a1, a2) = (model.ad_matrix(x1), model.ad_matrix(x2));
    let mut c = RMat::zeros(2 * n, 2 * n);
    // sum_i U_i W_i^T = [0, a1 a2^T; 0, 0]
    let block = &a1 * a2.transpose() * 0.25;
    c.view_mut((0, n), (n, n)).copy_from(&block);
    c.view_mut((n, 0), (n, n)).copy_from(&(-block.transpose()));
    c
}

/// Product family bivector on G x G minus `t psi`.
pub fn fused_family_bivector(model: &LieGroupModel, x1: &AlgebraElement, x2: &AlgebraElement, t: f64) -> Result<RMat> {
    let n = model.dim();
    let mut c = RMat::zeros(2 * n, 2 * n);
    c.view_mut((0, 0), (n, n)).copy_from(&family_bivector(model, x1, t)?);
    c.view_mut((n, n), (n, n)).copy_from(&family_bivector(model, x2, t)?);
    if t != 0.0 {
        c -= psi_chart(model, x1, x2) * t;
    }
    Ok(c)
}

/// Trivector the fused family is quasi-Poisson against: `t^2 D_* phi` with
/// `D = [ad_{x1}; ad_{x2}]` the diagonal conjugation fields.
pub fn fused_family_trivector(model: &LieGroupModel, x1: &AlgebraElement, x2: &AlgebraElement, t: f64) -> Result<Multivector> {
    let n = model.dim();
    let mut d = RMat::zeros(2 * n, n);
    d.view_mut((0, 0), (n, n)).copy_from(&model.ad_matrix(x1));
    d.view_mut((n, 0), (n, n)).copy_from(&model.ad_matrix(x2));
    Ok(cartan_trivector(model).push_forward(&d)?.scale(t * t))
}

/// Fused moment map: the product of the two family moment maps.
pub fn fused_moment(model: &LieGroupModel, x1: &AlgebraElement, x2: &AlgebraElement, t: f64) -> Result<GPoint> {
    let chart = DeformationChart::new(model);
    let a = chart.map(&FamilyPoint { x: x1.clone(), t })?;
    let b = chart.map(&FamilyPoint { x: x2.clone(), t })?;
    mult_map(model, &a, &b)
}

/// Norms and log-log slope of a quantity on a t-grid.
#[derive(Debug, Clone, Serialize)]
pub struct SlopeReport {
    pub group: String,
    pub x_seed: Option<u64>,
    pub t_grid: Vec<f64>,
    pub norms: Vec<f64>,
    pub slope: Option<f64>,
    pub pass: bool,
}

impl SlopeReport {
    /// Passes when the slope lies in `[lo, hi]`, or when every norm is zero.
    pub fn new(group: &str, x_seed: Option<u64>, t_grid: &[f64], norms: Vec<f64>, lo: f64, hi: f64) -> Self {
        let slope = loglog_slope(t_grid, &norms);
        let pass = match slope {
            None => true,
            Some(s) => s >= lo && s <= hi,
        };
        Self {
            group: group.to_string(),
            x_seed,
            t_grid: t_grid.to_vec(),
            norms,
            slope,
            pass,
        }
    }
}

/// `|family_bivector(x, t) - family_bivector(x, 0)|` on a grid.
pub fn bivector_limit_norms(model: &LieGroupModel, x: &AlgebraElement, grid: &[f64]) -> Result<Vec<f64>> {
    let p0 = family_bivector(model, x, 0.0)?;
    grid.iter()
        .map(|t| Ok((family_bivector(model, x, *t)? - &p0).norm()))
        .collect()
}

/// `|family_trivector(x, t)|` on a grid.
pub fn trivector_norms(model: &LieGroupModel, x: &AlgebraElement, grid: &[f64]) -> Result<Vec<f64>> {
    grid.iter()
        .map(|t| Ok(family_trivector(model, x, *t)?.frobenius_norm()))
        .collect()
}

/// [`mult_chart_residual`] on a grid.
pub fn mult_residual_norms(model: &LieGroupModel, x: &AlgebraElement, y: &AlgebraElement, grid: &[f64]) -> Result<Vec<f64>> {
    grid.iter().map(|t| mult_chart_residual(model, x, y, *t)).collect()
}

/// Largest `|closed form - finite-difference pullback|` over a grid.
pub fn family_fd_discrepancy(model: &LieGroupModel, x: &AlgebraElement, grid: &[f64]) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for t in grid {
        let d = (family_bivector(model, x, *t)? - family_bivector_fd(model, x, *t)?).norm();
        worst = worst.max(d);
    }
    Ok(worst)
}

/// Draws `x` scaled into the chart ball for every t in `[-1, 1]`.
pub fn random_chart_algebra<R: rand::Rng>(model: &LieGroupModel, rng: &mut R) -> AlgebraElement {
    let x = model.random_algebra(rng, 1.0);
    let cap = 0.5 * model.chart_radius().min(4.0);
    let norm = x.norm();
    if norm > cap {
        x * (cap / norm)
    } else {
        x
    }
}
