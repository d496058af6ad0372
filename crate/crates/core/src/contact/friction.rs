//! Lagged, smoothed Coulomb friction.
//!
//! Each contact freezes its normal force, closest-point weights and tangent
//! frame at the start of a step. The potential is `mu_f F f0(|u|)` with `u`
//! the tangential relative displacement since the frame was frozen.

use nalgebra::{Matrix2, Matrix3x2, Vector2};

use super::constraint::Constraint;
use crate::geometry::distance::closest_weights;
use crate::{Mat3, Vec3};

/// Smoothed norm: `y` for `y >= eps`, a C² cubic blend below.
pub fn f0(y: f64, eps: f64) -> f64 {
    if y >= eps {
        y
    } else {
        -y * y * y / (3.0 * eps * eps) + y * y / eps + eps / 3.0
    }
}

/// `f0'(y)`.
pub fn f1(y: f64, eps: f64) -> f64 {
    if y >= eps {
        1.0
    } else {
        -y * y / (eps * eps) + 2.0 * y / eps
    }
}

/// `f0'(y) / y`, finite at `y = 0`.
pub fn f1_over_y(y: f64, eps: f64) -> f64 {
    if y >= eps {
        1.0 / y
    } else {
        -y / (eps * eps) + 2.0 / eps
    }
}

/// `f0''(y)`.
pub fn f2(y: f64, eps: f64) -> f64 {
    if y >= eps {
        0.0
    } else {
        -2.0 * y / (eps * eps) + 2.0 / eps
    }
}

/// Orthonormal basis of the plane perpendicular to `n`.
pub fn tangent_basis(n: &Vec3) -> Matrix3x2<f64> {
    let helper = if n.x.abs() < 0.9 { Vec3::x() } else { Vec3::y() };
    let t0 = n.cross(&helper).normalize();
    let t1 = n.cross(&t0);
    Matrix3x2::from_columns(&[t0, t1])
}

#[derive(Clone, Debug)]
pub struct FrictionContact {
    pub verts: [usize; 4],
    pub weights: [f64; 4],
    pub basis: Matrix3x2<f64>,
    /// Positions at which the frame was frozen.
    pub anchor_x: [Vec3; 4],
    pub normal_force: f64,
}

/// Friction energy, per-vertex gradient and `(a, b)` Hessian blocks of one contact.
#[derive(Clone, Debug)]
pub struct FrictionTerm {
    pub energy: f64,
    pub grad: [Vec3; 4],
    pub hess: [[Mat3; 4]; 4],
}

impl FrictionContact {
    /// Freezes a contact from a converged constraint at `x`. Returns `None`
    /// when the constraint is inactive or carries no compressive force.
    pub fn from_constraint(c: &Constraint, x: &[Vec3], h: f64) -> Option<Self> {
        if c.slack > 0.0 {
            return None;
        }
        let force = c.normal_force(h);
        if force <= 0.0 {
            return None;
        }
        let p = c.pair.positions(x);
        let e = c.pair.distance(x);
        if e.degenerate {
            return None;
        }
        Some(FrictionContact {
            verts: c.pair.verts,
            weights: closest_weights(c.pair.kind, &p),
            basis: tangent_basis(&e.normal),
            anchor_x: p,
            normal_force: force,
        })
    }

    pub fn tangential_displacement(&self, x: &[Vec3]) -> Vector2<f64> {
        let rel: Vec3 = (0..4).map(|k| (x[self.verts[k]] - self.anchor_x[k]) * self.weights[k]).sum();
        self.basis.transpose() * rel
    }

    pub fn energy(&self, x: &[Vec3], mu_f: f64, eps: f64) -> f64 {
        mu_f * self.normal_force * f0(self.tangential_displacement(x).norm(), eps)
    }

    /// Energy, gradient and PSD-clamped Hessian at `x` with smoothing width `eps`.
    pub fn term(&self, x: &[Vec3], mu_f: f64, eps: f64) -> FrictionTerm {
        let u = self.tangential_displacement(x);
        let y = u.norm();
        let scale = mu_f * self.normal_force;
        let g2 = u * (scale * f1_over_y(y, eps));
        let gt = self.basis * g2;
        let h2 = if y > 0.0 {
            let uh = u / y;
            let a = f2(y, eps);
            let b = f1_over_y(y, eps);
            uh * uh.transpose() * a + (Matrix2::identity() - uh * uh.transpose()) * b
        } else {
            Matrix2::identity() * f1_over_y(0.0, eps)
        };
        let h2 = clamp_psd2(&(h2 * scale));
        let ht = self.basis * h2 * self.basis.transpose();
        FrictionTerm {
            energy: scale * f0(y, eps),
            grad: self.weights.map(|w| gt * w),
            hess: std::array::from_fn(|a| std::array::from_fn(|b| ht * (self.weights[a] * self.weights[b]))),
        }
    }
}

fn clamp_psd2(m: &Matrix2<f64>) -> Matrix2<f64> {
    let e = nalgebra::SymmetricEigen::new(*m);
    if e.eigenvalues.iter().all(|l| *l >= 0.0) {
        return *m;
    }
    let d = Matrix2::from_diagonal(&e.eigenvalues.map(|l| l.max(0.0)));
    e.eigenvectors * d * e.eigenvectors.transpose()
}
