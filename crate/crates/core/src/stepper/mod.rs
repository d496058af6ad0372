//! The outer time-stepping loop.
//!
//! Every step builds an intersection-free piecewise-linear path
//! `x[0] = x^t, x[1], ...` where `x[k+1]` is the CCD-clamped move from `x[k]`
//! toward the subproblem iterate `x_hat[k+1]`. `beta` tracks the weight that
//! the first `k_min` states still carry in `x[k]`; the step ends once it falls
//! to `epsilon`.

mod boundary;
mod params;

use std::time::Instant;

use serde::Serialize;

pub use boundary::{apply_dbc, BoundaryCondition, Trajectory};
pub use params::{StepParams, MIN_GAP_FRACTION};

use crate::contact::{update_active_set, ActiveSet, FrictionContact};
use crate::elasticity::{inversion_free_fraction, Material};
use crate::error::{SceneError, StepError};
use crate::geometry::{max_step_size, static_intersection_test, ContactSurface};
use crate::mesh::{RestData, TetMesh};
use crate::solver::{solve_subproblem, AlParams, NewtonParams, Problem};
use crate::Vec3;

/// Steps below this TOI count as stagnant.
pub const STAGNATION_ALPHA: f64 = 1e-4;
/// Consecutive stagnant iterations before the penalty is doubled.
pub const STAGNATION_WINDOW: usize = 50;

/// `(1 - alpha) beta` once `k + 1 >= k_min`, else `beta`.
pub fn beta_update(beta: f64, alpha: f64, k: usize, k_min: usize) -> f64 {
    if k + 1 >= k_min {
        (1.0 - alpha) * beta
    } else {
        beta
    }
}

/// Initial penalty stiffness from the largest Hessian diagonal entry.
pub fn mu_init(max_diagonal: f64, c_mu: f64) -> f64 {
    c_mu * max_diagonal
}

pub fn velocity_update(x_new: &[Vec3], x_old: &[Vec3], h: f64) -> Vec<Vec3> {
    x_new.iter().zip(x_old).map(|(a, b)| (a - b) / h).collect()
}

/// Counts consecutive stagnant iterations and doubles `mu` (halving
/// `delta`) after [`STAGNATION_WINDOW`] of them.
#[derive(Clone, Copy, Debug, Default)]
pub struct StagnationGuard {
    pub counter: usize,
    pub triggers: usize,
}

impl StagnationGuard {
    /// Returns true when the penalty was adapted.
    pub fn observe(&mut self, alpha: f64, mu: &mut f64, delta: &mut f64) -> bool {
        if alpha >= STAGNATION_ALPHA {
            self.counter = 0;
            return false;
        }
        self.counter += 1;
        if self.counter < STAGNATION_WINDOW {
            return false;
        }
        self.counter = 0;
        self.triggers += 1;
        *mu *= 2.0;
        *delta *= 0.5;
        true
    }
}

/// Friction contacts for the next step from the converged constraint set.
pub fn friction_precompute(set: &ActiveSet, x: &[Vec3], h: f64) -> Vec<FrictionContact> {
    set.iter()
        .filter_map(|c| FrictionContact::from_constraint(c, x, h))
        .collect()
}

/// Position and velocity of every vertex.
#[derive(Clone, Debug)]
pub struct SimState {
    pub x: Vec<Vec3>,
    pub v: Vec<Vec3>,
    pub time: f64,
    pub step: usize,
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct IterationRecord {
    pub iter: usize,
    pub alpha: f64,
    pub beta: f64,
    pub n_constraints: usize,
    pub newton_iters: usize,
    pub cg_iters: usize,
    pub wall_ms: f64,
    pub admitted: usize,
    pub pruned: usize,
    pub stalled: bool,
}

/// Iterates of one step, kept on request for offline checks.
#[derive(Clone, Debug, Default)]
pub struct StepTrace {
    pub x_start: Vec<Vec3>,
    pub x_hats: Vec<Vec<Vec3>>,
    pub alphas: Vec<f64>,
    pub path: Vec<Vec<Vec3>>,
}

#[derive(Clone, Debug, Default)]
pub struct StepDiagnostics {
    pub step: usize,
    pub mu: f64,
    pub iterations: Vec<IterationRecord>,
    pub adaptive_triggers: usize,
    pub friction_contacts: usize,
    pub trace: Option<StepTrace>,
}

impl StepDiagnostics {
    pub fn outer_iterations(&self) -> usize {
        self.iterations.len()
    }

    pub fn newton_iterations(&self) -> usize {
        self.iterations.iter().map(|r| r.newton_iters).sum()
    }

    pub fn peak_constraints(&self) -> usize {
        self.iterations.iter().map(|r| r.n_constraints).max().unwrap_or(0)
    }

    pub fn final_beta(&self) -> f64 {
        self.iterations.last().map_or(1.0, |r| r.beta)
    }
}

/// Optional per-step checks.
#[derive(Clone, Copy, Debug, Default)]
pub struct StepOptions {
    /// Run the static intersection test on every accepted state.
    pub check_intersections: bool,
    /// Keep all iterates in [`StepDiagnostics::trace`].
    pub record_trace: bool,
}

/// A mesh with materials, boundary conditions and evolving state.
#[derive(Debug)]
pub struct Simulation {
    pub mesh: TetMesh,
    pub rest: RestData,
    pub materials: Vec<Material>,
    pub boundary: Vec<BoundaryCondition>,
    pub params: StepParams,
    pub options: StepOptions,
    pub state: SimState,
    pub active: ActiveSet,
    pub friction: Vec<FrictionContact>,
    surface: ContactSurface,
    fixed: Vec<bool>,
    elements: Vec<usize>,
}

impl Simulation {
    pub fn new(
        mesh: TetMesh,
        rest: RestData,
        materials: Vec<Material>,
        velocities: Vec<Vec3>,
        boundary: Vec<BoundaryCondition>,
        params: StepParams,
    ) -> Result<Self, SceneError> {
        params.validate()?;
        let n = mesh.num_vertices();
        let invalid = |field: &str, msg: String| SceneError::Invalid {
            field: field.to_string(),
            msg,
        };
        if materials.len() != mesh.tets.len() {
            return Err(invalid("materials", format!("{} materials for {} tets", materials.len(), mesh.tets.len())));
        }
        if velocities.len() != n {
            return Err(invalid("velocity", format!("{} velocities for {n} vertices", velocities.len())));
        }
        let mut fixed = vec![false; n];
        for bc in &boundary {
            for &v in &bc.vertices {
                if v >= n {
                    return Err(invalid("boundary", format!("vertex {v} out of range")));
                }
                if fixed[v] {
                    return Err(invalid("boundary", format!("vertex {v} is in two boundary sets")));
                }
                fixed[v] = true;
            }
        }
        let x = mesh.rest_positions.clone();
        let hits = static_intersection_test(&x, &mesh.surface_tris);
        if !hits.is_empty() {
            return Err(invalid("bodies", format!("initial configuration has {} intersecting triangle pairs", hits.len())));
        }
        let elements = mesh
            .tets
            .iter()
            .enumerate()
            .filter(|(_, t)| t.iter().any(|&v| !fixed[v]))
            .map(|(e, _)| e)
            .collect();
        let surface = ContactSurface {
            tris: mesh.surface_tris.clone(),
            edges: mesh.surface_edges.clone(),
            verts: mesh.surface_verts.clone(),
            fixed: fixed.clone(),
        };
        Ok(Simulation {
            state: SimState {
                x,
                v: velocities,
                time: 0.0,
                step: 0,
            },
            mesh,
            rest,
            materials,
            boundary,
            params,
            options: StepOptions::default(),
            active: ActiveSet::new(),
            friction: Vec::new(),
            surface,
            fixed,
            elements,
        })
    }

    pub fn fixed(&self) -> &[bool] {
        &self.fixed
    }

    /// Total linear momentum of the free vertices.
    pub fn momentum(&self) -> Vec3 {
        (0..self.state.x.len())
            .filter(|&i| !self.fixed[i])
            .map(|i| self.state.v[i] * self.rest.masses[i])
            .sum()
    }

    pub fn kinetic_energy(&self) -> f64 {
        (0..self.state.x.len())
            .filter(|&i| !self.fixed[i])
            .map(|i| 0.5 * self.rest.masses[i] * self.state.v[i].norm_squared())
            .sum()
    }

    /// Advances one time step. On error the state is left unchanged.
    pub fn step(&mut self) -> Result<StepDiagnostics, StepError> {
        let p = self.params.clone();
        let h = p.h;
        let t_next = self.state.time + h;
        let x_t = &self.state.x;
        let n = x_t.len();
        let g = p.gravity();
        let mut x_tilde: Vec<Vec3> = (0..n).map(|i| x_t[i] + self.state.v[i] * h + g * (h * h)).collect();
        apply_dbc(&mut x_tilde, &self.boundary, t_next);
        let mut x_hat = x_t.clone();
        apply_dbc(&mut x_hat, &self.boundary, t_next);

        let problem = Problem {
            tets: &self.mesh.tets,
            rest: &self.rest,
            materials: &self.materials,
            elements: &self.elements,
            masses: &self.rest.masses,
            x_tilde: &x_tilde,
            h,
            fixed: &self.fixed,
            friction: &self.friction,
            mu_f: p.friction,
            friction_eps: h * p.eps_v,
        };
        let fixed = &self.fixed;
        let mut mu = p.mu.unwrap_or_else(|| {
            let diag = problem.inertia_elastic_hessian(x_t).max_diagonal_entry(|i| !fixed[i]);
            mu_init(if diag > 0.0 { diag } else { 1.0 }, p.c_mu)
        });
        let mut delta = p.delta;
        let newton = NewtonParams {
            cg_tol: p.cg_tol,
            max_newton: p.max_newton,
            ..Default::default()
        };

        let mut diag = StepDiagnostics {
            step: self.state.step,
            mu,
            trace: self.options.record_trace.then(|| StepTrace {
                x_start: x_t.clone(),
                ..Default::default()
            }),
            ..Default::default()
        };
        let mut active = self.active.clone();
        let mut x = x_t.clone();
        let mut beta = 1.0;
        let mut k = 0;
        let mut guard = StagnationGuard::default();
        while beta > p.epsilon {
            if k >= p.max_outer {
                return Err(StepError::IterationCap {
                    iterations: k,
                    beta,
                    diagnostics: Box::new(diag),
                });
            }
            let started = Instant::now();
            active.linearize_all(&x);
            let al = AlParams {
                mu,
                delta,
                decay: p.decay,
                rule: p.decay_rule,
            };
            let (y, stats) = solve_subproblem(&problem, &mut active, &x_hat, &al, &newton);
            if y.iter().any(|v| !v.iter().all(|c| c.is_finite())) {
                return Err(StepError::NonFinite("subproblem iterate"));
            }
            x_hat = y;
            let bound = max_step_size(&self.surface, &x, &x_hat, p.ccd_min_gap.max(MIN_GAP_FRACTION * delta));
            let admission = update_active_set(&mut active, &bound.blocking, &x, p.filter);
            let dir: Vec<Vec3> = x_hat.iter().zip(&x).map(|(a, b)| a - b).collect();
            let alpha = bound.alpha.min(inversion_free_fraction(&self.mesh.tets, &self.materials, &x, &dir));
            for (xi, d) in x.iter_mut().zip(&dir) {
                *xi += d * alpha;
            }
            beta = beta_update(beta, alpha, k, p.k_min);
            k += 1;
            if guard.observe(alpha, &mut mu, &mut delta) {
                log::warn!("step {}: stagnation at iteration {k}, mu -> {mu:e}, delta -> {delta:e}", self.state.step);
            }
            if self.options.check_intersections {
                let hits = static_intersection_test(&x, &self.surface.tris);
                if !hits.is_empty() {
                    return Err(StepError::Penetration {
                        count: hits.len(),
                        diagnostics: Box::new(diag),
                    });
                }
            }
            if let Some(t) = diag.trace.as_mut() {
                t.x_hats.push(x_hat.clone());
                t.alphas.push(alpha);
                t.path.push(x.clone());
            }
            let record = IterationRecord {
                iter: k,
                alpha,
                beta,
                n_constraints: active.len(),
                newton_iters: stats.newton_iters,
                cg_iters: stats.cg_iters,
                wall_ms: started.elapsed().as_secs_f64() * 1e3,
                admitted: admission.admitted,
                pruned: admission.pruned,
                stalled: stats.stalled || stats.newton_capped,
            };
            log::debug!(
                "step {} iter {k}: alpha {alpha:.4} beta {beta:.3e} constraints {} newton {} cg {}",
                self.state.step,
                record.n_constraints,
                record.newton_iters,
                record.cg_iters
            );
            diag.iterations.push(record);
        }
        diag.adaptive_triggers = guard.triggers;

        let v = velocity_update(&x, x_t, h);
        self.friction = if p.friction > 0.0 {
            friction_precompute(&active, &x, h)
        } else {
            Vec::new()
        };
        diag.friction_contacts = self.friction.len();
        self.active = active;
        self.state.x = x;
        self.state.v = v;
        self.state.time = t_next;
        self.state.step += 1;
        Ok(diag)
    }
}
