//! Named numerical thresholds shared across the crate.

use serde::{Deserialize, Serialize};

/// Relative agreement between coefficients and grid samples.
pub const TOL_FFT: f64 = 1e-12;
/// Slack allowed on `|u| <= 1` and on `1 - |u|^2 >= 0`.
pub const TOL_POS: f64 = 1e-12;
/// Margin keeping `|u(0)|` (and `|alpha|`) away from 1.
pub const TOL_STRICT: f64 = 1e-10;
/// Orthonormality of model-space bases.
pub const TOL_ORTH: f64 = 1e-10;
/// Finite-order membership residual.
pub const TOL_MEMBER: f64 = 1e-8;
/// Relative cutoff for rank decisions on Gram data.
pub const EPS_RANK: f64 = 1e-10;
/// Closed-form versus projected distinguished vectors.
pub const TOL_VEC: f64 = 1e-9;
/// Points where `Delta <= EPS_DELTA` count as the zero set of `Delta`.
pub const EPS_DELTA: f64 = 1e-8;
/// Operator identities at matrix level.
pub const TOL_OP: f64 = 1e-8;
/// Singular-value classification threshold.
pub const TOL_SV: f64 = 1e-6;
/// Conjugation identities.
pub const TOL_CONJ: f64 = 1e-9;
/// Coefficient tail tolerance for Taylor re-expansions.
pub const TOL_EXP: f64 = 1e-12;
/// Fixed-point tolerance of the `S T S*` iteration.
pub const TOL_LIMIT: f64 = 1e-9;
/// Default acceptance threshold for invariance before decomposing.
pub const TOL_ACCEPT: f64 = 1e-6;
/// Floor for leak-calibrated tolerances; residuals at this level are rounding noise.
pub const ROUNDOFF_FLOOR: f64 = 1e-10;
/// Absolute slack used when checking that residual sequences do not increase.
pub const MONOTONE_NOISE: f64 = 1e-12;

/// Default grid for user-facing circle functions.
pub const DEFAULT_GRID: usize = 1024;
/// Quadrature grid used by model spaces for the Fourier coefficients of `Delta`.
pub const MODEL_GRID: usize = 1 << 16;

/// Overridable tolerance set, used by the batch driver.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Tolerances {
    pub tol_accept: f64,
    pub tol_op: f64,
    pub tol_conj: f64,
    pub tol_sv: f64,
    pub tol_limit: f64,
    pub eps_delta: f64,
    pub roundoff_floor: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            tol_accept: TOL_ACCEPT,
            tol_op: TOL_OP,
            tol_conj: TOL_CONJ,
            tol_sv: TOL_SV,
            tol_limit: TOL_LIMIT,
            eps_delta: EPS_DELTA,
            roundoff_floor: ROUNDOFF_FLOOR,
        }
    }
}

/// Leak-calibrated tolerance: ten times the measured defect-identity leak,
/// never below the rounding floor.
pub fn calibrated(leak: f64) -> f64 {
    (10.0 * leak).max(ROUNDOFF_FLOOR)
}

/// `true` when no entry exceeds its predecessor by more than [`MONOTONE_NOISE`].
pub fn non_increasing(values: &[f64]) -> bool {
    values.windows(2).all(|w| w[1] <= w[0] + MONOTONE_NOISE)
}
