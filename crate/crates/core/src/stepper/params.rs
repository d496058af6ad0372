use serde::{Deserialize, Serialize};

use crate::contact::DecayRule;
use crate::error::SceneError;
use crate::Vec3;

/// Floor on the CCD separation relative to the contact offset.
pub const MIN_GAP_FRACTION: f64 = 1e-6;

/// Time-step and solver settings. SI units throughout.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StepParams {
    /// Time step (s).
    pub h: f64,
    /// Contact offset (m).
    pub delta: f64,
    /// Termination threshold on the accumulated weight of early iterates.
    pub epsilon: f64,
    /// Minimum number of outer iterations per step.
    pub k_min: usize,
    /// Decay rate of inactive constraints.
    pub decay: f64,
    pub decay_rule: DecayRule,
    /// Penalty scale relative to the largest Hessian diagonal entry.
    pub c_mu: f64,
    /// Fixed penalty stiffness; overrides `c_mu` when set.
    pub mu: Option<f64>,
    /// Relative residual tolerance of PCG.
    pub cg_tol: f64,
    /// Coulomb friction coefficient.
    pub friction: f64,
    /// Friction smoothing velocity (m/s).
    pub eps_v: f64,
    /// Gravitational acceleration (m/s²).
    pub gravity: [f64; 3],
    /// Keep only per-vertex earliest impacts when admitting constraints.
    pub filter: bool,
    pub max_outer: usize,
    pub max_newton: usize,
    /// Separation kept by continuous collision detection (m). The stepper
    /// never uses less than [`MIN_GAP_FRACTION`] times the current `delta`.
    pub ccd_min_gap: f64,
}

impl Default for StepParams {
    fn default() -> Self {
        StepParams {
            h: 0.01,
            delta: 1e-3,
            epsilon: 1e-3,
            k_min: 2,
            decay: 0.9,
            decay_rule: DecayRule::default(),
            c_mu: 0.1,
            mu: None,
            cg_tol: 1e-4,
            friction: 0.0,
            eps_v: 1e-3,
            gravity: [0.0, -9.81, 0.0],
            filter: true,
            max_outer: 1024,
            max_newton: 64,
            ccd_min_gap: 0.0,
        }
    }
}

fn invalid(field: &str, msg: impl Into<String>) -> SceneError {
    SceneError::Invalid {
        field: format!("step.{field}"),
        msg: msg.into(),
    }
}

impl StepParams {
    pub fn gravity(&self) -> Vec3 {
        Vec3::from(self.gravity)
    }

    pub fn validate(&self) -> Result<(), SceneError> {
        let positive = |v: f64| v > 0.0 && v.is_finite();
        if !positive(self.h) {
            return Err(invalid("h", "must be positive"));
        }
        if !positive(self.delta) {
            return Err(invalid("delta", "must be positive"));
        }
        if !(self.epsilon > 0.0 && self.epsilon < 1.0) {
            return Err(invalid("epsilon", "must lie in (0, 1)"));
        }
        if self.k_min < 1 {
            return Err(invalid("k_min", "must be at least 1"));
        }
        if !(0.0..=1.0).contains(&self.decay) {
            return Err(invalid("decay", "must lie in [0, 1]"));
        }
        if !positive(self.c_mu) {
            return Err(invalid("c_mu", "must be positive"));
        }
        if let Some(mu) = self.mu {
            if !positive(mu) {
                return Err(invalid("mu", "must be positive"));
            }
        }
        if !positive(self.cg_tol) {
            return Err(invalid("cg_tol", "must be positive"));
        }
        if !(self.friction >= 0.0 && self.friction.is_finite()) {
            return Err(invalid("friction", "must be non-negative"));
        }
        if !positive(self.eps_v) {
            return Err(invalid("eps_v", "must be positive"));
        }
        if self.gravity.iter().any(|g| !g.is_finite()) {
            return Err(invalid("gravity", "must be finite"));
        }
        if self.max_outer == 0 || self.max_newton == 0 {
            return Err(invalid("max_outer", "iteration caps must be positive"));
        }
        if !(self.ccd_min_gap >= 0.0 && self.ccd_min_gap < self.delta) {
            return Err(invalid("ccd_min_gap", "must lie in [0, delta)"));
        }
        Ok(())
    }
}
