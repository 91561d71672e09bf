//! Numerical laboratory for rotationally symmetric manifolds with nonnegative Ricci
//! curvature and Euclidean volume growth: volume geometry, the tilde transform of the
//! volume remainder, radial heat kernels, Green functions, rearrangements and
//! Moser-Trudinger functionals along extremal families.

pub mod config;
pub mod error;
pub mod green;
pub mod heat;
pub mod linalg;
pub mod manifold;
pub mod mt;
pub mod plot;
pub mod quad;
pub mod radial;
pub mod rearrange;
pub mod report;
pub mod roots;
pub mod scalar;
pub mod special;
pub mod suite;
pub mod tilde;
pub mod tol;

pub use error::{LabError, Result};
pub use manifold::Family;
pub use report::{CheckRecord, ExperimentReport, Kind, Table};
pub use scalar::Real;

/// Double precision model manifold; the instantiation used by all solvers.
pub type Manifold = manifold::ModelManifold<f64>;
/// Single precision model manifold, for quick geometry sweeps.
pub type Manifold32 = manifold::ModelManifold<f32>;
