//! Penetration-free elastodynamics with augmented-Lagrangian contact.
//!
//! Each time step minimizes the incremental potential subject to linearized
//! distance constraints gathered by continuous collision detection. The
//! accepted trajectory is assembled from CCD-clamped moves toward a sequence
//! of (possibly penetrating) solver iterates, and the step terminates once the
//! accumulated time of impact covers all but a fraction `epsilon` of the move.
//!
//! Module map:
//!
//! - [`mesh`]: tetrahedral meshes, rest-shape data, lumped masses, generators.
//! - [`geometry`]: primitive distances, additive CCD, linear BVH, intersection tests.
//! - [`elasticity`]: hyperelastic models and analytic PSD Hessian assembly.
//! - [`contact`]: augmented-Lagrangian constraint records, the active set, friction.
//! - [`solver`]: block-sparse assembly, block-Jacobi PCG, projected Newton.
//! - [`stepper`]: the outer time-stepping loop.
//! - [`scene`]: JSON scene configuration and simulation driver.
//! - [`validation`]: desk-scale validation fixtures.

pub mod contact;
pub mod driver;
pub mod elasticity;
pub mod error;
pub mod geometry;
pub mod io;
pub mod mesh;
pub mod scene;
pub mod solver;
pub mod stepper;
pub mod validation;

pub use error::{MeshError, SceneError, StepError};

/// 3-vector of `f64`.
pub type Vec3 = nalgebra::Vector3<f64>;
/// 3×3 matrix of `f64`.
pub type Mat3 = nalgebra::Matrix3<f64>;
/// 1×3 row vector of `f64`.
pub type Row3 = nalgebra::RowVector3<f64>;
