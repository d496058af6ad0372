//! The augmented incremental potential minimized by each subproblem.

use rayon::prelude::*;

use super::bsr::{BlockSparseMatrix, BsrBuilder};
use crate::contact::{Constraint, FrictionContact};
use crate::elasticity::{psd_block_hessian, ElementHessian, Material};
use crate::mesh::RestData;
use crate::{Mat3, Vec3};

/// Step-constant data: mesh, materials, inertia target, boundary mask and
/// lagged friction.
#[derive(Clone, Copy)]
pub struct Problem<'a> {
    pub tets: &'a [[usize; 4]],
    pub rest: &'a RestData,
    /// Material of every tet.
    pub materials: &'a [Material],
    /// Tets that contribute elasticity (those with at least one free vertex).
    pub elements: &'a [usize],
    pub masses: &'a [f64],
    pub x_tilde: &'a [Vec3],
    pub h: f64,
    pub fixed: &'a [bool],
    pub friction: &'a [FrictionContact],
    pub mu_f: f64,
    /// Friction smoothing width `h * eps_v` (m).
    pub friction_eps: f64,
}

/// Problem plus the current constraint set and penalty.
pub struct Objective<'a> {
    pub problem: Problem<'a>,
    pub constraints: Vec<&'a Constraint>,
    pub mu: f64,
    pub delta: f64,
}

/// Energy, gradient (zero on prescribed vertices) and projected Hessian.
pub struct Assembled {
    pub energy: f64,
    pub gradient: Vec<Vec3>,
    pub hessian: BlockSparseMatrix,
}

impl<'a> Problem<'a> {
    fn element_energy(&self, e: usize, x: &[Vec3]) -> f64 {
        let t = &self.tets[e];
        let f = self.rest.deformation_gradient(e, t, x);
        self.materials[e].energy(&f, self.rest.volumes[e])
    }

    fn element_terms(&self, e: usize, x: &[Vec3]) -> ([Vec3; 4], ElementHessian) {
        let t = &self.tets[e];
        let f = self.rest.deformation_gradient(e, t, x);
        let m = &self.materials[e];
        let rows = &self.rest.shape_rows[e];
        let vol = self.rest.volumes[e];
        let es = m.eigen_system(&f);
        (m.gradient(&f, rows, vol), psd_block_hessian(&es, rows, vol))
    }

    /// `1/2 |x - x_tilde|_M^2 + h^2 (elastic + friction)`.
    pub fn energy(&self, x: &[Vec3]) -> f64 {
        let h2 = self.h * self.h;
        let inertia: f64 = (0..x.len())
            .map(|i| 0.5 * self.masses[i] * (x[i] - self.x_tilde[i]).norm_squared())
            .sum();
        let elastic: Vec<f64> = self.elements.par_iter().map(|&e| self.element_energy(e, x)).collect();
        let friction: f64 = self
            .friction
            .iter()
            .map(|f| f.energy(x, self.mu_f, self.friction_eps))
            .sum();
        inertia + h2 * (elastic.iter().sum::<f64>() + friction)
    }

    /// `energy(y) - energy(x)` summed term by term, so small changes are
    /// resolved even when the total is large.
    pub fn energy_difference(&self, x: &[Vec3], y: &[Vec3]) -> f64 {
        let h2 = self.h * self.h;
        let inertia: f64 = (0..x.len())
            .map(|i| {
                let d = y[i] - x[i];
                0.5 * self.masses[i] * d.dot(&(y[i] + x[i] - self.x_tilde[i] * 2.0))
            })
            .sum();
        let elastic: Vec<f64> = self
            .elements
            .par_iter()
            .map(|&e| self.element_energy(e, y) - self.element_energy(e, x))
            .collect();
        let friction: f64 = self
            .friction
            .iter()
            .map(|f| f.energy(y, self.mu_f, self.friction_eps) - f.energy(x, self.mu_f, self.friction_eps))
            .sum();
        inertia + h2 * (elastic.iter().sum::<f64>() + friction)
    }

    /// Gradient and Hessian of [`energy`](Self::energy) before boundary masking.
    pub fn assemble_into(&self, x: &[Vec3], grad: &mut [Vec3], builder: &mut BsrBuilder) {
        let h2 = self.h * self.h;
        for i in 0..x.len() {
            grad[i] += (x[i] - self.x_tilde[i]) * self.masses[i];
            builder.add(i, i, Mat3::identity() * self.masses[i]);
        }
        let terms: Vec<([Vec3; 4], ElementHessian)> =
            self.elements.par_iter().map(|&e| self.element_terms(e, x)).collect();
        for (&e, (g, hess)) in self.elements.iter().zip(terms) {
            let t = &self.tets[e];
            for k in 0..4 {
                grad[t[k]] += g[k] * h2;
            }
            let scaled: ElementHessian = hess.map(|row| row.map(|b| b * h2));
            builder.add_element(t, &scaled);
        }
        for f in self.friction {
            let term = f.term(x, self.mu_f, self.friction_eps);
            for k in 0..4 {
                grad[f.verts[k]] += term.grad[k] * h2;
            }
            let scaled = term.hess.map(|row| row.map(|b| b * h2));
            builder.add_element(&f.verts, &scaled);
        }
    }

    /// Inertia plus projected elasticity at `x`, masked for boundary vertices.
    pub fn inertia_elastic_hessian(&self, x: &[Vec3]) -> BlockSparseMatrix {
        let mut grad = vec![Vec3::zeros(); x.len()];
        let mut b = BsrBuilder::new(x.len());
        let no_friction = Problem { friction: &[], ..*self };
        no_friction.assemble_into(x, &mut grad, &mut b);
        let mut h = b.build();
        h.apply_dirichlet(self.fixed, self.masses);
        h
    }
}

impl<'a> Objective<'a> {
    pub fn constraint_values(&self, x: &[Vec3]) -> Vec<f64> {
        self.constraints.iter().map(|c| c.value(x, self.delta)).collect()
    }

    pub fn energy(&self, x: &[Vec3]) -> f64 {
        let base = self.problem.energy(x);
        let al: f64 = self
            .constraints
            .iter()
            .map(|c| c.al_term(c.value(x, self.delta), self.mu).energy)
            .sum();
        base + al
    }

    pub fn energy_difference(&self, x: &[Vec3], y: &[Vec3]) -> f64 {
        let base = self.problem.energy_difference(x, y);
        let al: f64 = self
            .constraints
            .iter()
            .map(|c| c.al_term(c.value(y, self.delta), self.mu).energy - c.al_term(c.value(x, self.delta), self.mu).energy)
            .sum();
        base + al
    }

    pub fn assemble(&self, x: &[Vec3]) -> Assembled {
        let n = x.len();
        let mut gradient = vec![Vec3::zeros(); n];
        let mut builder = BsrBuilder::with_capacity(n, n + 10 * (self.problem.elements.len() + self.constraints.len()));
        self.problem.assemble_into(x, &mut gradient, &mut builder);
        let mut energy = self.problem.energy(x);
        for c in &self.constraints {
            let term = c.al_term(c.value(x, self.delta), self.mu);
            energy += term.energy;
            let v = &c.pair.verts;
            for k in 0..4 {
                gradient[v[k]] += term.grad[k];
            }
            let g = &c.anchor_grad;
            let blocks: [[Mat3; 4]; 4] =
                std::array::from_fn(|a| std::array::from_fn(|b| g[a] * g[b].transpose() * term.hess_scale));
            builder.add_element(v, &blocks);
        }
        let mut hessian = builder.build();
        hessian.apply_dirichlet(self.problem.fixed, self.problem.masses);
        for (g, &f) in gradient.iter_mut().zip(self.problem.fixed) {
            if f {
                *g = Vec3::zeros();
            }
        }
        Assembled {
            energy,
            gradient,
            hessian,
        }
    }
}
