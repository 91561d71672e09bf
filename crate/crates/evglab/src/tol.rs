//! Tolerances used across the checks. Kept in one place so reports can quote them.

/// Relative accuracy requested from the volume quadrature.
pub const VOLUME_REL: f64 = 1e-10;
/// Internal relative accuracy of the cached cumulative integrals.
pub const TABLE_REL: f64 = 1e-13;
/// Slack on `f'' <= 0` when validating a warping profile.
pub const CURVATURE: f64 = 1e-12;
/// Slack on monotonicity of the volume ratios.
pub const MONOTONE: f64 = 1e-10;
/// Slack on the exact upper inequality `tau_x - sigma <= sigma_x - sigma`.
pub const TXSX_UPPER: f64 = 1e-9;
/// Relative tolerance of the golden-section refinement in the tilde transform.
pub const TILDE_GOLDEN: f64 = 1e-8;
/// Relative tolerance (in `t`) of the root characterisation of the tilde transform.
pub const TILDE_ROOT: f64 = 1e-10;
/// Allowed drift of the total heat mass.
pub const MASS: f64 = 1e-6;
/// Residual of the `rho` calibration equation.
pub const CALIBRATION: f64 = 1e-8;
/// Relative slack of the theorem-level rearrangement inequalities.
pub const THEOREM_REL: f64 = 1e-6;
/// Closed-form identities between Riesz constants.
pub const CONSTANTS: f64 = 1e-12;
/// Mellin-transform reconstruction of the Riesz kernels.
pub const MELLIN: f64 = 1e-8;
/// Relative tolerance of fitted exponents against predicted rates.
pub const RATE_FIT: f64 = 0.05;
