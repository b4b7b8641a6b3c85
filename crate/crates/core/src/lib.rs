//! Numerical engine for hemi-slant submanifold geometry in metallic (and
//! Golden) Riemannian space.
//!
//! The crate realizes, at sampled points of a user-defined immersion into
//! flat R^m:
//!
//! * metallic structures J with J^2 = p J + q I and their induced operators
//!   T, N, t, n over the tangent/normal split,
//! * slant angles and the hemi-slant classification of declared
//!   distributions,
//! * second fundamental form, shape operator, induced and normal connections,
//!   all differentiated exactly through second-order forward jets,
//! * a registry of identity checks reporting per-identity residuals.
//!
//! Everything numeric is generic over the scalar type via [`scalar::Real`]
//! (`f32` or `f64`); the aliases below fix `f64`, which the CLI and the
//! shipped tolerances assume.

pub mod error;
pub mod exprdsl;
pub mod geometry;
pub mod metallic;
pub mod numlin;
pub mod propcheck;
pub(crate) mod sampling;
pub mod scalar;
pub mod slant;

#[cfg(test)]
pub(crate) mod testsupport;

pub use error::{Error, Result};

/// Second-order jet over `f64`.
pub type Jet64 = exprdsl::Jet2<f64>;
/// Dense matrix over `f64`.
pub type Mat64 = numlin::Mat<f64>;
/// Orthonormal subspace over `f64`.
pub type Subspace64 = numlin::Subspace<f64>;
/// Metallic parameters over `f64`.
pub type MetallicParams64 = metallic::MetallicParams<f64>;
/// Ambient structure operator over `f64`.
pub type Structure64 = metallic::StructureOp<f64>;
/// Immersion scenario over `f64`.
pub type Scenario64 = geometry::ImmersionScenario<f64>;
/// Pointwise frame data over `f64`.
pub type PointGeometry64 = geometry::PointGeometry<f64>;
/// Induced operators over `f64`.
pub type InducedOps64 = geometry::InducedOps<f64>;
/// Check report over `f64`.
pub type CheckReport64 = propcheck::CheckReport<f64>;
/// Hemi-slant classification over `f64`.
pub type Classification64 = slant::ScenarioClassification<f64>;
