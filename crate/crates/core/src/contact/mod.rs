//! Linearized contact constraints, their augmented Lagrangian terms, the
//! active set and lagged friction.

pub mod active_set;
pub mod constraint;
pub mod friction;

pub use active_set::{filter_earliest, update_active_set, ActiveSet, AdmissionStats, PRUNE_THRESHOLD};
pub use constraint::{slack_update, AlTerm, Constraint, DecayRule};
pub use friction::FrictionContact;
