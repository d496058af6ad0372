//! Hyperelastic energies, stresses and PSD-projected element Hessians.

pub mod eigen;
pub mod hessian;
pub mod inversion;
pub mod material;
pub mod scalar;

pub use eigen::{rv_svd, EigenSystem, Svd3};
pub use hessian::{direct_psd_hessian, psd_block_hessian, psd_blocks, ElementHessian};
pub use inversion::{inversion_free_fraction, inversion_safe_step};
pub use material::{Material, MaterialError, Model};
