//! Projected Newton on the augmented Lagrangian, followed by the dual update.

use super::objective::{Objective, Problem};
use super::pcg::pcg_solve;
use crate::contact::{ActiveSet, DecayRule};
use crate::elasticity::inversion_safe_step;
use crate::Vec3;

#[derive(Clone, Copy, Debug)]
pub struct NewtonParams {
    pub cg_tol: f64,
    pub max_newton: usize,
    pub max_halvings: usize,
    /// CG iteration cap; `None` means `10 * vertices`.
    pub cg_max_iter: Option<usize>,
}

impl Default for NewtonParams {
    fn default() -> Self {
        NewtonParams {
            cg_tol: 1e-4,
            max_newton: 64,
            max_halvings: 30,
            cg_max_iter: None,
        }
    }
}

/// Penalty and decay settings of the augmented terms.
#[derive(Clone, Copy, Debug)]
pub struct AlParams {
    pub mu: f64,
    pub delta: f64,
    pub decay: f64,
    pub rule: DecayRule,
}

#[derive(Clone, Debug, Default)]
pub struct SubproblemStats {
    pub newton_iters: usize,
    pub cg_iters: usize,
    /// A line search failed to decrease the energy.
    pub stalled: bool,
    /// The Newton cap was hit before a full step.
    pub newton_capped: bool,
    /// Some CG solve hit its iteration cap.
    pub cg_capped: bool,
    pub steepest_descent_fallbacks: usize,
    /// Energy of the initial guess followed by the running sum of accepted decreases.
    pub energies: Vec<f64>,
}

fn dot(a: &[Vec3], b: &[Vec3]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x.dot(y)).sum()
}

fn axpy(x: &[Vec3], r: f64, p: &[Vec3]) -> Vec<Vec3> {
    x.iter().zip(p).map(|(a, b)| a + b * r).collect()
}

/// Largest `r` in `{r0, r0/2, ...}` with `decrease(x + r p) < 0`, where
/// `decrease(y)` returns `L(y) - L(x)`. Gives up after `max_halvings` halvings.
pub fn line_search(decrease: impl Fn(&[Vec3]) -> f64, x: &[Vec3], p: &[Vec3], r0: f64, max_halvings: usize) -> Option<(f64, f64)> {
    let mut r = r0;
    for _ in 0..=max_halvings {
        let d = decrease(&axpy(x, r, p));
        if d < 0.0 {
            return Some((r, d));
        }
        r *= 0.5;
    }
    None
}

/// Minimizes the augmented Lagrangian from `x_hat0` with the constraints of
/// `set` (anchored at the current intersection-free state), then updates
/// every constraint's multiplier, slack and decay factor.
pub fn solve_subproblem(
    problem: &Problem,
    set: &mut ActiveSet,
    x_hat0: &[Vec3],
    al: &AlParams,
    params: &NewtonParams,
) -> (Vec<Vec3>, SubproblemStats) {
    let mut stats = SubproblemStats::default();
    let x_hat = {
        let obj = Objective {
            problem: *problem,
            constraints: set.iter().collect(),
            mu: al.mu,
            delta: al.delta,
        };
        newton_loop(&obj, x_hat0, params, &mut stats)
    };
    for c in set.iter_mut() {
        let value = c.value(&x_hat, al.delta);
        c.dual_update(value, al.mu, al.decay, al.rule);
    }
    (x_hat, stats)
}

fn newton_loop(obj: &Objective, x_hat0: &[Vec3], params: &NewtonParams, stats: &mut SubproblemStats) -> Vec<Vec3> {
    let problem = &obj.problem;
    let has_nh = problem.elements.iter().any(|&e| !problem.materials[e].is_invertible());
    let mut x = x_hat0.to_vec();
    loop {
        let asm = obj.assemble(&x);
        if stats.energies.is_empty() {
            stats.energies.push(obj.energy(&x));
        }
        let g = &asm.gradient;
        if g.iter().all(|v| *v == Vec3::zeros()) {
            break;
        }
        let rhs: Vec<Vec3> = g.iter().map(|v| -v).collect();
        let sol = pcg_solve(&asm.hessian, &rhs, params.cg_tol, params.cg_max_iter);
        stats.cg_iters += sol.iterations;
        stats.cg_capped |= !sol.converged;
        let mut p = sol.x;
        if dot(g, &p) >= 0.0 {
            // Preconditioned steepest descent.
            stats.steepest_descent_fallbacks += 1;
            p = (0..g.len())
                .map(|i| {
                    let d = asm.hessian.diagonal_block(i);
                    d.try_inverse().map(|inv| inv * rhs[i]).unwrap_or(rhs[i])
                })
                .collect();
        }
        stats.newton_iters += 1;
        if dot(g, &p) >= 0.0 {
            break;
        }
        let r0 = if has_nh {
            inversion_safe_step(problem.tets, problem.materials, &x, &p).min(1.0)
        } else {
            1.0
        };
        match line_search(|y| obj.energy_difference(&x, y), &x, &p, r0, params.max_halvings) {
            Some((r, d)) => {
                x = axpy(&x, r, &p);
                let last = *stats.energies.last().unwrap();
                stats.energies.push(last + d);
                if r == 1.0 {
                    break;
                }
            }
            None => {
                stats.stalled = true;
                break;
            }
        }
        if stats.newton_iters >= params.max_newton {
            stats.newton_capped = true;
            break;
        }
    }
    x
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::contact::Constraint;
    use crate::elasticity::{Material, Model};
    use crate::geometry::PrimitivePair;
    use crate::mesh::{generate, RestData};
    use crate::solver::objective::Problem;

    struct Fixture {
        tets: Vec<[usize; 4]>,
        rest: RestData,
        materials: Vec<Material>,
        elements: Vec<usize>,
        fixed: Vec<bool>,
        x: Vec<Vec3>,
    }

    fn cube(model: Model) -> Fixture {
        let mesh = generate::box_grid(Vec3::repeat(1.0), [2, 2, 2]);
        let rest = RestData::new(&mesh, &vec![1000.0; mesh.tets.len()]);
        let materials = vec![Material::new(model, 1e4, 0.3).unwrap(); mesh.tets.len()];
        Fixture {
            elements: (0..mesh.tets.len()).collect(),
            fixed: vec![false; mesh.num_vertices()],
            x: mesh.rest_positions.clone(),
            tets: mesh.tets,
            rest,
            materials,
        }
    }

    fn problem<'a>(f: &'a Fixture, x_tilde: &'a [Vec3], h: f64) -> Problem<'a> {
        Problem {
            tets: &f.tets,
            rest: &f.rest,
            materials: &f.materials,
            elements: &f.elements,
            masses: &f.rest.masses,
            x_tilde,
            h,
            fixed: &f.fixed,
            friction: &[],
            mu_f: 0.0,
            friction_eps: 1e-3,
        }
    }

    fn al() -> AlParams {
        AlParams {
            mu: 1.0,
            delta: 0.0,
            decay: 0.9,
            rule: DecayRule::DecayInactive,
        }
    }

    #[test]
    fn rest_pose_has_zero_gradient() {
        let f = cube(Model::StableNeoHookean);
        let p = problem(&f, &f.x, 0.01);
        let obj = Objective {
            problem: p,
            constraints: vec![],
            mu: 1.0,
            delta: 0.0,
        };
        let asm = obj.assemble(&f.x);
        assert!(asm.gradient.iter().all(|g| g.norm() < 1e-12));
    }

    #[test]
    fn linear_elasticity_solves_in_one_iteration() {
        let f = cube(Model::Linear);
        let x_tilde: Vec<Vec3> = f.x.iter().map(|p| p + Vec3::new(0.01 * p.y, -0.02 * p.x * p.z, 0.03)).collect();
        let p = problem(&f, &x_tilde, 0.01);
        let mut set = ActiveSet::new();
        let params = NewtonParams {
            cg_tol: 1e-12,
            ..Default::default()
        };
        let (x_hat, stats) = solve_subproblem(&p, &mut set, &f.x, &al(), &params);
        assert_eq!(stats.newton_iters, 1);
        let obj = Objective {
            problem: p,
            constraints: vec![],
            mu: 1.0,
            delta: 0.0,
        };
        let g = obj.assemble(&x_hat).gradient;
        let gmax = g.iter().map(|v| v.amax()).fold(0.0, f64::max);
        assert!(gmax < 1e-8, "{gmax}");
    }

    #[test]
    fn monotone_descent_and_fd_hessian() {
        let f = cube(Model::NeoHookean);
        let x_tilde: Vec<Vec3> = f.x.iter().map(|p| p * 1.2 + Vec3::new(0.0, 0.1 * p.x, 0.0)).collect();
        let p = problem(&f, &x_tilde, 0.05);
        let mut set = ActiveSet::new();
        let (_, stats) = solve_subproblem(&p, &mut set, &f.x, &al(), &NewtonParams::default());
        for w in stats.energies.windows(2) {
            assert!(w[1] < w[0]);
        }
        let obj = Objective {
            problem: p,
            constraints: vec![],
            mu: 1.0,
            delta: 0.0,
        };
        let x_hat = solve_subproblem(&p, &mut ActiveSet::new(), &f.x, &al(), &NewtonParams::default()).0;
        assert!(obj.energy(&x_hat) < obj.energy(&f.x));
        // Hessian columns against central differences of the gradient at a mild state.
        let x: Vec<Vec3> = f.x.iter().map(|q| q * 1.01).collect();
        let obj = Objective {
            problem: p,
            constraints: vec![],
            mu: 1.0,
            delta: 0.0,
        };
        let h = obj.assemble(&x).hessian.to_dense();
        let eps = 1e-6;
        for col in [0usize, 7, 20, 41] {
            let (mut xp, mut xm) = (x.clone(), x.clone());
            xp[col / 3][col % 3] += eps;
            xm[col / 3][col % 3] -= eps;
            let gp = obj.assemble(&xp).gradient;
            let gm = obj.assemble(&xm).gradient;
            for row in 0..3 * x.len() {
                let fd = (gp[row / 3][row % 3] - gm[row / 3][row % 3]) / (2.0 * eps);
                assert!((fd - h[(row, col)]).abs() <= 1e-5 * h.amax(), "({row},{col}) {fd} vs {}", h[(row, col)]);
            }
        }
    }

    #[test]
    fn vertex_settles_at_offset() {
        // One free particle pressed through a fixed triangle.
        let x = vec![
            Vec3::new(0.2, 0.2, 0.5),
            Vec3::new(-1.0, -1.0, 0.0),
            Vec3::new(2.0, -1.0, 0.0),
            Vec3::new(-1.0, 2.0, 0.0),
        ];
        let x_tilde = vec![Vec3::new(0.2, 0.2, -0.5), x[1], x[2], x[3]];
        let rest = RestData {
            dm_inv: vec![],
            volumes: vec![],
            shape_rows: vec![],
            masses: vec![1.0; 4],
        };
        let fixed = vec![false, true, true, true];
        let p = Problem {
            tets: &[],
            rest: &rest,
            materials: &[],
            elements: &[],
            masses: &rest.masses,
            x_tilde: &x_tilde,
            h: 0.01,
            fixed: &fixed,
            friction: &[],
            mu_f: 0.0,
            friction_eps: 1e-3,
        };
        let mut set = ActiveSet::new();
        set.insert(Constraint::new(PrimitivePair::vertex_face(0, [1, 2, 3]), &x));
        let al = AlParams {
            mu: 100.0,
            delta: 0.1,
            decay: 0.9,
            rule: DecayRule::DecayInactive,
        };
        let mut x_hat = x_tilde.clone();
        let mut prev = f64::INFINITY;
        for _ in 0..12 {
            let (y, _) = solve_subproblem(&p, &mut set, &x_hat, &al, &NewtonParams::default());
            x_hat = y;
            let c = set.iter().next().unwrap().value(&x_hat, al.delta).abs();
            assert!(c < prev || c < 1e-14, "{c} {prev}");
            prev = c;
            assert_eq!(x_hat[1], x[1]);
        }
        assert!((x_hat[0].z - 0.1).abs() < 1e-8, "{}", x_hat[0].z);
    }
}
