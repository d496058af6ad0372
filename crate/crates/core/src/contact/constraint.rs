use serde::{Deserialize, Serialize};

use crate::geometry::PrimitivePair;
use crate::Vec3;

/// How the decay factor responds to a dual update.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DecayRule {
    /// Inactive constraints (`s > 0`) decay by `Gamma`; active ones reset to 1.
    #[default]
    DecayInactive,
    /// Active constraints decay and inactive ones reset to 1.
    AsPrinted,
}

/// Slack minimizing the augmented term for a fixed constraint value.
pub fn slack_update(c: f64, lambda: f64, mu: f64) -> f64 {
    (c - lambda / mu).max(0.0)
}

/// A linearized contact constraint with its multiplier state.
#[derive(Clone, Debug)]
pub struct Constraint {
    pub pair: PrimitivePair,
    pub lambda: f64,
    pub gamma: f64,
    pub slack: f64,
    /// Distance at the linearization point.
    pub anchor_d: f64,
    /// Distance gradient at the linearization point, per participating vertex.
    pub anchor_grad: [Vec3; 4],
    /// Positions of the four vertices at the linearization point.
    pub anchor_x: [Vec3; 4],
}

/// Augmented Lagrangian energy, gradient and Hessian scale of one constraint.
#[derive(Clone, Copy, Debug)]
pub struct AlTerm {
    pub energy: f64,
    pub grad: [Vec3; 4],
    /// The Hessian is `hess_scale * g g^T` with `g = anchor_grad`.
    pub hess_scale: f64,
}

impl Constraint {
    /// New constraint with `lambda = 0`, `gamma = 1`, linearized at `x`.
    pub fn new(pair: PrimitivePair, x: &[Vec3]) -> Self {
        let mut c = Constraint {
            pair,
            lambda: 0.0,
            gamma: 1.0,
            slack: 0.0,
            anchor_d: 0.0,
            anchor_grad: [Vec3::zeros(); 4],
            anchor_x: pair.positions(x),
        };
        c.linearize(x);
        c
    }

    /// Refreshes the anchor at `x`. Returns false (keeping the previous
    /// anchor) when the distance direction is undefined.
    pub fn linearize(&mut self, x: &[Vec3]) -> bool {
        let e = self.pair.distance(x);
        if e.degenerate {
            return false;
        }
        self.anchor_d = e.d;
        self.anchor_grad = e.grad;
        self.anchor_x = self.pair.positions(x);
        true
    }

    /// `c(x_hat) = d + grad . (x_hat - x) - delta`.
    pub fn value(&self, x_hat: &[Vec3], delta: f64) -> f64 {
        let mut c = self.anchor_d - delta;
        for k in 0..4 {
            c += self.anchor_grad[k].dot(&(x_hat[self.pair.verts[k]] - self.anchor_x[k]));
        }
        c
    }

    /// Energy with the slack minimized out, its gradient, and the Hessian scale.
    pub fn al_term(&self, c: f64, mu: f64) -> AlTerm {
        let s = slack_update(c, self.lambda, mu);
        let r = c - s;
        let energy = self.gamma * (0.5 * mu * r * r - self.lambda * r);
        let coef = mu * self.gamma * (c - self.lambda / mu - s);
        AlTerm {
            energy,
            grad: self.anchor_grad.map(|g| g * coef),
            hess_scale: mu * self.gamma,
        }
    }

    pub fn al_contribution(&self, x_hat: &[Vec3], delta: f64, mu: f64) -> AlTerm {
        self.al_term(self.value(x_hat, delta), mu)
    }

    /// Multiplier, slack and decay update after a subproblem solve.
    pub fn dual_update(&mut self, c: f64, mu: f64, decay: f64, rule: DecayRule) {
        self.slack = slack_update(c, self.lambda, mu);
        let active = self.slack == 0.0;
        if active {
            self.lambda -= mu * c;
        } else {
            self.lambda = 0.0;
        }
        self.gamma = match (rule, active) {
            (DecayRule::DecayInactive, true) | (DecayRule::AsPrinted, false) => 1.0,
            _ => decay * self.gamma,
        };
    }

    /// Normal force magnitude `h^-2 gamma max(0, lambda)` carried by the
    /// multiplier after a dual update.
    pub fn normal_force(&self, h: f64) -> f64 {
        self.gamma * self.lambda.max(0.0) / (h * h)
    }
}
