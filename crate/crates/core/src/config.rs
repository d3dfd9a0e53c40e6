//! Numerical tolerances and measured constants.

use serde::Serialize;

use crate::error::{QhamError, Result};

/// Constant `c` in `[P, P] = c phi_M` for bivectors given by coefficient
/// matrices. Measured with [`crate::qp::measure_bracket_constant`] on the
/// double of SU(2) (phi_G vanishes identically on SU(2) itself, whose
/// conjugacy classes have dimension at most 2) and asserted everywhere else.
pub const QP_BRACKET_CONSTANT: f64 = 1.0;

/// Factor `s` in `iota(x_M) omega = s mu*<theta^L + theta^R, x>` for the
/// double, found by [`crate::qp::scan_moment_axiom`] with the fundamental
/// field convention `x_M = d/dt exp(-t x).m`.
pub const MOMENT_AXIOM_SCALE: f64 = -0.5;

/// Tolerances for every numeric check. Names are the keys accepted by the
/// CLI `--tol.<name>` flags.
#[derive(Debug, Clone, Serialize)]
pub struct Tolerances {
    pub orthonormal: f64,
    pub ad_invariance: f64,
    pub round_trip: f64,
    pub ad_exp: f64,
    pub eta: f64,
    pub psi: f64,
    pub qp: f64,
    pub c_consistency: f64,
    pub jacobi: f64,
    pub eq1_antisymmetry: f64,
    pub eq1_invariance: f64,
    pub equivariance: f64,
    pub family_fd: f64,
    pub fiber: f64,
    pub rank: f64,
    pub jacobian_rank: f64,
    pub level_set: f64,
    pub freeness: f64,
    pub conjugacy: f64,
    pub omega_condition: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            orthonormal: 1e-12,
            ad_invariance: 1e-10,
            round_trip: 1e-10,
            ad_exp: 1e-8,
            eta: 1e-8,
            psi: 1e-12,
            qp: 1e-5,
            c_consistency: 1e-6,
            jacobi: 1e-6,
            eq1_antisymmetry: 1e-7,
            eq1_invariance: 1e-6,
            equivariance: 1e-6,
            family_fd: 1e-7,
            fiber: 1e-5,
            rank: 1e-8,
            jacobian_rank: 1e-7,
            level_set: 1e-9,
            freeness: 1e-9,
            conjugacy: 1e-8,
            omega_condition: 1e6,
        }
    }
}

impl Tolerances {
    /// Overrides one tolerance by name.
    pub fn set(&mut self, name: &str, value: f64) -> Result<()> {
        if !(value > 0.0) || !value.is_finite() {
            return Err(QhamError::Domain(format!("tolerance {name} = {value}")));
        }
        let slot = match name {
            "orthonormal" => &mut self.orthonormal,
            "ad_invariance" => &mut self.ad_invariance,
            "round_trip" => &mut self.round_trip,
            "ad_exp" => &mut self.ad_exp,
            "eta" => &mut self.eta,
            "psi" => &mut self.psi,
            "qp" => &mut self.qp,
            "c_consistency" => &mut self.c_consistency,
            "jacobi" => &mut self.jacobi,
            "eq1_antisymmetry" => &mut self.eq1_antisymmetry,
            "eq1_invariance" => &mut self.eq1_invariance,
            "equivariance" => &mut self.equivariance,
            "family_fd" => &mut self.family_fd,
            "fiber" => &mut self.fiber,
            "rank" => &mut self.rank,
            "jacobian_rank" => &mut self.jacobian_rank,
            "level_set" => &mut self.level_set,
            "freeness" => &mut self.freeness,
            "conjugacy" => &mut self.conjugacy,
            "omega_condition" => &mut self.omega_condition,
            _ => return Err(QhamError::Domain(format!("unknown tolerance `{name}`"))),
        };
        *slot = value;
        Ok(())
    }
}

/// Geometric t-grid used for convergence-order fits.
pub const DEFAULT_T_GRID: [f64; 4] = [1e-1, 1e-2, 1e-3, 1e-4];

/// Settings shared by the CLI drivers and the acceptance suite.
#[derive(Debug, Clone, Serialize)]
pub struct RunConfig {
    pub group: String,
    pub seed: u64,
    pub n_samples: usize,
    pub fd_step: f64,
    pub tolerances: Tolerances,
    pub t_grid: Vec<f64>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            group: "su2".into(),
            seed: 42,
            n_samples: 20,
            fd_step: crate::multivector::DEFAULT_FD_STEP,
            tolerances: Tolerances::default(),
            t_grid: DEFAULT_T_GRID.to_vec(),
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_samples == 0 {
            return Err(QhamError::Domain("samples must be at least 1".into()));
        }
        if !(self.fd_step > 0.0) || !self.fd_step.is_finite() {
            return Err(QhamError::Domain(format!("fd step {}", self.fd_step)));
        }
        if self.t_grid.is_empty()
            || self.t_grid.iter().any(|t| !(*t > 0.0) || !t.is_finite())
            || self.t_grid.windows(2).any(|w| w[1] >= w[0])
        {
            return Err(QhamError::Domain("t grid must be positive and strictly decreasing".into()));
        }
        Ok(())
    }
}
