//! Dense linear-algebra helpers shared by the geometric modules.

use nalgebra::{Complex, DMatrix};

use crate::error::{QhamError, Result};

pub type C64 = Complex<f64>;
pub type CMat = DMatrix<C64>;
pub type RMat = DMatrix<f64>;

/// Bernoulli numbers B_0..B_20 (B_1 = -1/2).
const BERNOULLI: [f64; 21] = [
    1.0,
    -0.5,
    1.0 / 6.0,
    0.0,
    -1.0 / 30.0,
    0.0,
    1.0 / 42.0,
    0.0,
    -1.0 / 30.0,
    0.0,
    5.0 / 66.0,
    0.0,
    -691.0 / 2730.0,
    0.0,
    7.0 / 6.0,
    0.0,
    -3617.0 / 510.0,
    0.0,
    43867.0 / 798.0,
    0.0,
    -174611.0 / 330.0,
];

/// Taylor coefficients of eta(s) = s / (1 - e^{-s}) up to s^20.
pub fn eta_series_coefficients() -> [f64; 21] {
    let mut out = [0.0; 21];
    let mut factorial = 1.0;
    for (n, c) in out.iter_mut().enumerate() {
        if n > 0 {
            factorial *= n as f64;
        }
        let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
        *c = sign * BERNOULLI[n] / factorial;
    }
    out
}

/// eta(z) = z / (1 - e^{-z}) with eta(0) = 1.
pub fn eta_scalar(z: C64) -> C64 {
    if z.norm() < 1e-3 {
        let z2 = z * z;
        C64::new(1.0, 0.0) + z / 2.0 + z2 / 12.0 - z2 * z2 / 720.0 + z2 * z2 * z2 / 30240.0
    } else {
        z / (C64::new(1.0, 0.0) - (-z).exp())
    }
}

/// (1 - e^{-z}) / z, the reciprocal of eta; entire.
pub fn inv_eta_scalar(z: C64) -> C64 {
    if z.norm() < 1e-3 {
        let z2 = z * z;
        C64::new(1.0, 0.0) - z / 2.0 + z2 / 6.0 - z2 * z / 24.0 + z2 * z2 / 120.0
    } else {
        (C64::new(1.0, 0.0) - (-z).exp()) / z
    }
}

/// Polynomial evaluation sum_n c_n A^n for a real square matrix.
pub fn matrix_series(a: &RMat, coeffs: &[f64]) -> RMat {
    let n = a.nrows();
    let mut acc = RMat::zeros(n, n);
    let mut power = RMat::identity(n, n);
    for (k, c) in coeffs.iter().enumerate() {
        if k > 0 {
            power = &power * a;
        }
        if *c != 0.0 {
            acc += &power * *c;
        }
    }
    acc
}

/// Applies a scalar function to a real antisymmetric matrix through the
/// Hermitian eigendecomposition of `i A`. The eigenvalues handed to `f`
/// are those of `A` itself (purely imaginary).
pub fn antisymmetric_function<F>(a: &RMat, f: F) -> Result<RMat>
where
    F: Fn(C64) -> Result<C64>,
{
    let n = a.nrows();
    if n == 0 {
        return Ok(RMat::zeros(0, 0));
    }
    let h: CMat = a.map(|v| C64::new(0.0, v));
    let eig = h.symmetric_eigen();
    let mut diag = Vec::with_capacity(n);
    for lambda in eig.eigenvalues.iter() {
        // i A u = lambda u  =>  A u = -i lambda u
        diag.push(f(C64::new(0.0, -lambda))?);
    }
    let u = &eig.eigenvectors;
    let mut scaled = u.clone();
    for (j, d) in diag.iter().enumerate() {
        let mut col = scaled.column_mut(j);
        col *= *d;
    }
    let out = scaled * u.adjoint();
    Ok(out.map(|c| c.re))
}

/// Numerical rank: singular values above `tol * max(1, sigma_max)`.
pub fn numerical_rank(m: &RMat, tol: f64) -> usize {
    if m.nrows() == 0 || m.ncols() == 0 {
        return 0;
    }
    let sv = m.clone().svd(false, false).singular_values;
    let smax = sv.iter().cloned().fold(0.0, f64::max);
    let cut = tol * smax.max(1.0);
    sv.iter().filter(|s| **s > cut).count()
}

/// 2-norm condition number; infinite for singular matrices.
pub fn condition_number(m: &RMat) -> f64 {
    let sv = m.clone().svd(false, false).singular_values;
    let smax = sv.iter().cloned().fold(0.0, f64::max);
    let smin = sv.iter().cloned().fold(f64::INFINITY, f64::min);
    if smin <= 0.0 {
        f64::INFINITY
    } else {
        smax / smin
    }
}

/// Square root of a matrix with spectrum away from the negative real axis
/// by the Denman-Beavers iteration.
pub fn sqrtm(a: &CMat) -> Result<CMat> {
    let n = a.nrows();
    let mut y = a.clone();
    let mut z = CMat::identity(n, n);
    for _ in 0..100 {
        let yi = y
            .clone()
            .try_inverse()
            .ok_or_else(|| QhamError::Singular("square-root iteration".into()))?;
        let zi = z
            .clone()
            .try_inverse()
            .ok_or_else(|| QhamError::Singular("square-root iteration".into()))?;
        let y_next = (&y + zi) * C64::new(0.5, 0.0);
        let z_next = (&z + yi) * C64::new(0.5, 0.0);
        let delta = (&y_next - &y).norm();
        y = y_next;
        z = z_next;
        if delta <= 1e-15 * y.norm().max(1.0) {
            return Ok(y);
        }
    }
    Ok(y)
}

/// Principal matrix logarithm by inverse scaling and squaring: repeated
/// square roots bring the argument close to the identity, where the
/// Mercator series converges fast.
pub fn logm(a: &CMat) -> Result<CMat> {
    let n = a.nrows();
    let ident = CMat::identity(n, n);
    let mut b = a.clone();
    let mut k = 0u32;
    while (&b - &ident).norm() > 0.25 {
        b = sqrtm(&b)?;
        k += 1;
        if k > 64 {
            return Err(QhamError::LogDomain(
                "square-root reduction did not converge".into(),
            ));
        }
    }
    let x = &b - &ident;
    let mut acc = CMat::zeros(n, n);
    let mut power = x.clone();
    for m in 1..400 {
        let term = &power * C64::new(if m % 2 == 1 { 1.0 } else { -1.0 } / m as f64, 0.0);
        let tn = term.norm();
        acc += term;
        if tn < 1e-18 {
            break;
        }
        power = &power * &x;
    }
    Ok(acc * C64::new(2f64.powi(k as i32), 0.0))
}

/// Eigenvalues of a normal complex matrix from its Schur form.
pub fn normal_eigenvalues(a: &CMat) -> Vec<C64> {
    let (_, t) = nalgebra::linalg::Schur::new(a.clone()).unpack();
    (0..t.nrows()).map(|i| t[(i, i)]).collect()
}

/// Logarithm of a normal matrix through its Schur (= spectral) form.
/// Used as an independent cross-check of [`logm`].
pub fn logm_spectral(a: &CMat) -> CMat {
    let (q, t) = nalgebra::linalg::Schur::new(a.clone()).unpack();
    let n = t.nrows();
    let d = CMat::from_fn(n, n, |i, j| if i == j { t[(i, i)].ln() } else { C64::new(0.0, 0.0) });
    &q * d * q.adjoint()
}

/// Least-squares slope of log(y) against log(x).
///
/// Returns `None` when every `y` vanishes (exact convergence) and
/// `Some(NaN)` when only some do.
pub fn loglog_slope(xs: &[f64], ys: &[f64]) -> Option<f64> {
    if ys.iter().all(|y| *y == 0.0) {
        return None;
    }
    if ys.iter().any(|y| *y <= 0.0) {
        return Some(f64::NAN);
    }
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx) * (a - mx)).sum();
    Some(sxy / sxx)
}

/// Rejects matrices containing NaN or infinities.
pub fn ensure_finite(m: &RMat, what: &str) -> Result<()> {
    if m.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(QhamError::NonFinite(what.to_string()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eta_coefficients_match_known_expansion() {
        let c = eta_series_coefficients();
        assert!((c[0] - 1.0).abs() < 1e-15);
        assert!((c[1] - 0.5).abs() < 1e-15);
        assert!((c[2] - 1.0 / 12.0).abs() < 1e-15);
        assert!(c[3].abs() < 1e-15);
        assert!((c[4] + 1.0 / 720.0).abs() < 1e-15);
    }

    #[test]
    fn eta_scalar_branches_agree() {
        for z in [C64::new(0.0, 9e-4), C64::new(0.0, 1.1e-3), C64::new(5e-4, -8e-4)] {
            let direct = z / (C64::new(1.0, 0.0) - (-z).exp());
            assert!((eta_scalar(z) - direct).norm() < 1e-12);
            assert!((eta_scalar(z) * inv_eta_scalar(z) - 1.0).norm() < 1e-14);
        }
    }

    #[test]
    fn log_inverts_exp_on_a_rotation() {
        let a = CMat::from_row_slice(
            2,
            2,
            &[C64::new(0.0, 1.2), C64::new(0.3, 0.1), C64::new(-0.3, 0.1), C64::new(0.0, -1.2)],
        );
        let g = a.clone().exp();
        let l = logm(&g).unwrap();
        assert!((&l - &a).norm() < 1e-12);
        assert!((logm_spectral(&g) - &a).norm() < 1e-12);
    }

    #[test]
    fn slope_of_quadratic_is_two() {
        let xs = [1e-1, 1e-2, 1e-3];
        let ys: Vec<f64> = xs.iter().map(|x| 3.0 * x * x).collect();
        assert!((loglog_slope(&xs, &ys).unwrap() - 2.0).abs() < 1e-12);
        assert_eq!(loglog_slope(&xs, &[0.0, 0.0, 0.0]), None);
    }
}
