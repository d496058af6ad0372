//! Desk-scale validation fixtures with pass/fail thresholds and plot-ready
//! CSV tables.
//!
//! Every fixture runs with the static intersection test enabled on each
//! accepted iterate, so a [`Report`] also certifies that the run stayed
//! intersection-free.

use std::f64::consts::PI;
use std::path::Path;

use serde::Serialize;
use thiserror::Error;

use crate::contact::{ActiveSet, Constraint, DecayRule};
use crate::elasticity::Model;
use crate::error::{SceneError, StepError};
use crate::geometry::PrimitivePair;
use crate::mesh::RestData;
use crate::scene::{BodyConfig, BoundaryConfig, MaterialConfig, MeshSource, Scene, SceneConfig, Selection};
use crate::solver::{solve_subproblem, AlParams, NewtonParams, Problem};
use crate::stepper::{StepDiagnostics, StepParams, Trajectory};
use crate::{Mat3, Vec3};

/// Suites accepted by [`run_suite`].
pub const SUITES: [&str; 9] = [
    "bar-convergence",
    "momentum",
    "slope-friction",
    "arch",
    "high-res-delta",
    "stacked-plates",
    "well-decay",
    "impactor",
    "al-convergence",
];

pub const BAR_PERIOD: f64 = 0.2;
pub const BAR_STEP_DIVISORS: [f64; 4] = [50.0, 100.0, 200.0, 400.0];
pub const SLOPE_TAN: f64 = 0.5;
pub const ARCH_BLOCK_HEIGHT: f64 = 0.3;
pub const GRAVITY: f64 = 9.81;

#[derive(Debug, Error)]
pub enum ValidationError {
    #[error("unknown suite `{0}` (expected one of: {list})", list = SUITES.join(", "))]
    UnknownSuite(String),
    #[error(transparent)]
    Scene(#[from] SceneError),
}

#[derive(Clone, Debug)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    fn new(name: &str, passed: bool, detail: String) -> Self {
        Check {
            name: name.to_string(),
            passed,
            detail,
        }
    }
}

/// A named CSV document.
#[derive(Clone, Debug)]
pub struct Table {
    pub name: String,
    pub csv: String,
}

fn table<R: Serialize>(name: &str, rows: &[R]) -> Table {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    for r in rows {
        w.serialize(r).expect("in-memory csv");
    }
    Table {
        name: name.to_string(),
        csv: String::from_utf8(w.into_inner().expect("in-memory csv")).expect("utf-8 csv"),
    }
}

/// Aggregate solver statistics over every step a suite simulated.
#[derive(Clone, Debug, Default)]
pub struct RunStats {
    pub steps: usize,
    pub max_outer: usize,
    pub max_final_beta: f64,
    pub adaptive_triggers: usize,
    pub newton_iterations: usize,
    pub peak_constraints: usize,
    /// Checked iterates (each passed the static intersection test).
    pub checked_states: usize,
    /// Steps aborted because an iterate failed the intersection test.
    pub penetrations: usize,
    /// Aborted steps, as messages.
    pub failures: Vec<String>,
}

impl RunStats {
    fn absorb(&mut self, d: &StepDiagnostics) {
        self.steps += 1;
        self.max_outer = self.max_outer.max(d.outer_iterations());
        self.max_final_beta = self.max_final_beta.max(d.final_beta());
        self.adaptive_triggers += d.adaptive_triggers;
        self.newton_iterations += d.newton_iterations();
        self.peak_constraints = self.peak_constraints.max(d.peak_constraints());
        self.checked_states += d.outer_iterations();
    }

    pub fn merge(&mut self, o: &RunStats) {
        self.steps += o.steps;
        self.max_outer = self.max_outer.max(o.max_outer);
        self.max_final_beta = self.max_final_beta.max(o.max_final_beta);
        self.adaptive_triggers += o.adaptive_triggers;
        self.newton_iterations += o.newton_iterations;
        self.peak_constraints = self.peak_constraints.max(o.peak_constraints);
        self.checked_states += o.checked_states;
        self.penetrations += o.penetrations;
        self.failures.extend(o.failures.iter().cloned());
    }
}

#[derive(Clone, Debug)]
pub struct Report {
    pub suite: String,
    pub checks: Vec<Check>,
    pub tables: Vec<Table>,
    pub stats: RunStats,
}

impl Report {
    fn new(suite: &str) -> Self {
        Report {
            suite: suite.to_string(),
            checks: Vec::new(),
            tables: Vec::new(),
            stats: RunStats::default(),
        }
    }

    pub fn passed(&self) -> bool {
        self.stats.failures.is_empty() && self.checks.iter().all(|c| c.passed)
    }

    /// Writes each table as `<suite>_<name>.csv` into `dir`.
    pub fn write_tables(&self, dir: &Path) -> std::io::Result<Vec<std::path::PathBuf>> {
        std::fs::create_dir_all(dir)?;
        self.tables
            .iter()
            .map(|t| {
                let path = dir.join(format!("{}_{}.csv", self.suite, t.name));
                std::fs::write(&path, &t.csv).map(|_| path)
            })
            .collect()
    }

    /// One `PASS`/`FAIL` line per check.
    pub fn summary(&self) -> String {
        let mut lines: Vec<String> = self
            .checks
            .iter()
            .map(|c| {
                let tag = if c.passed { "PASS" } else { "FAIL" };
                format!("{tag} {} / {}: {}", self.suite, c.name, c.detail)
            })
            .collect();
        lines.extend(self.stats.failures.iter().map(|f| format!("FAIL {} / run: {f}", self.suite)));
        lines.join("\n")
    }
}

pub fn run_suite(name: &str) -> Result<Report, ValidationError> {
    Ok(match name {
        "bar-convergence" => bar_convergence(64)?,
        "momentum" => momentum()?,
        "slope-friction" => slope_friction()?,
        "arch" => arch()?,
        "high-res-delta" => high_res_delta()?,
        "stacked-plates" => stacked_plates()?,
        "well-decay" => well_decay()?,
        "impactor" => impactor()?,
        "al-convergence" => al_convergence(),
        other => return Err(ValidationError::UnknownSuite(other.to_string())),
    })
}

// ---------------------------------------------------------------------------
// Scene helpers

fn body(mesh: MeshSource, material: MaterialConfig) -> BodyConfig {
    BodyConfig {
        mesh,
        material,
        scale: 1.0,
        rotation: [0.0; 3],
        translation: [0.0; 3],
        velocity: [0.0; 3],
        boundary: Vec::new(),
        jitter: 0.0,
    }
}

fn fixed_box(extent: [f64; 3], cells: [usize; 3], translation: [f64; 3]) -> BodyConfig {
    BodyConfig {
        translation,
        boundary: vec![BoundaryConfig {
            select: Selection::All,
            trajectory: Trajectory::Fixed,
        }],
        ..body(MeshSource::Box { extent, cells }, MaterialConfig::default())
    }
}

fn material(model: Model, young: f64, poisson: f64, density: f64) -> MaterialConfig {
    MaterialConfig {
        model,
        young,
        poisson,
        density,
    }
}

fn scene(bodies: Vec<BodyConfig>, step: StepParams) -> SceneConfig {
    SceneConfig {
        bodies,
        step,
        frames: 100,
        output: "out".into(),
        seed: 0,
    }
}

fn build(cfg: &SceneConfig) -> Result<Scene, SceneError> {
    let mut s = cfg.build(Path::new("."))?;
    s.sim.options.check_intersections = true;
    Ok(s)
}

/// Steps `scene` up to `steps` times, stopping at the first aborted step.
/// `observe` sees the scene after every accepted step.
fn simulate(
    scene: &mut Scene,
    steps: usize,
    stats: &mut RunStats,
    label: &str,
    mut observe: impl FnMut(&Scene, &StepDiagnostics),
) -> Result<(), StepError> {
    for _ in 0..steps {
        match scene.sim.step() {
            Ok(d) => {
                stats.absorb(&d);
                observe(scene, &d);
            }
            Err(e) => {
                if matches!(e, StepError::Penetration { .. }) {
                    stats.penetrations += 1;
                }
                stats.failures.push(format!("{label}, step {}: {e}", scene.sim.state.step));
                return Err(e);
            }
        }
    }
    Ok(())
}

fn mass_weighted_mean(scene: &Scene, b: usize, f: impl Fn(usize) -> Vec3) -> Vec3 {
    let m = &scene.sim.rest.masses;
    let r = scene.bodies[b].vertices.clone();
    let total: f64 = r.clone().map(|i| m[i]).sum();
    r.map(|i| f(i) * m[i]).sum::<Vec3>() / total
}

fn max_drift(scene: &Scene, b: usize, start: &[Vec3]) -> f64 {
    let r = scene.bodies[b].vertices.clone();
    r.clone()
        .zip(start)
        .map(|(i, s)| (scene.sim.state.x[i] - s).norm())
        .fold(0.0, f64::max)
}

/// Least-squares slope of `y` against `x`.
pub fn fit_slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    sxy / sxx
}

// ---------------------------------------------------------------------------
// Bar drop

/// Linear-elastic column (1 m, wave speed 10 m/s) hitting a fixed block at
/// 1 m/s without gravity. The offset is tiny so the reference run does not
/// pick up spurious impact velocity.
pub fn bar_scene(h: f64) -> SceneConfig {
    let step = StepParams {
        h,
        delta: 1e-6,
        c_mu: 10.0,
        gravity: [0.0; 3],
        ..Default::default()
    };
    let bar = BodyConfig {
        translation: [0.0, 0.5501, 0.0],
        velocity: [0.0, -1.0, 0.0],
        ..body(
            MeshSource::Box {
                extent: [0.1, 1.0, 0.1],
                cells: [1, 6, 1],
            },
            material(Model::Linear, 1e5, 0.0, 1000.0),
        )
    };
    scene(vec![fixed_box([0.4, 0.1, 0.4], [1, 1, 1], [0.0; 3]), bar], step)
}

/// Cross-section averaged axial position and velocity of every bar layer,
/// sampled every `sample` seconds up to `t_end`.
fn bar_history(h: f64, t_end: f64, sample: f64, stats: &mut RunStats) -> Result<Vec<(Vec<f64>, Vec<f64>)>, ValidationError> {
    let mut s = build(&bar_scene(h))?;
    let r = s.bodies[1].vertices.clone();
    let mut layers: Vec<(i64, Vec<usize>)> = Vec::new();
    for v in r {
        let key = (s.sim.state.x[v].y * 1e6).round() as i64;
        match layers.iter_mut().find(|l| l.0 == key) {
            Some(l) => l.1.push(v),
            None => layers.push((key, vec![v])),
        }
    }
    layers.sort_by_key(|l| l.0);
    let per = (sample / h).round() as usize;
    let steps = (t_end / h).round() as usize;
    let mut out = Vec::new();
    let mut count = 0;
    let _ = simulate(&mut s, steps, stats, &format!("bar h={h:e}"), |sc, _| {
        count += 1;
        if count % per == 0 {
            let avg = |f: &dyn Fn(usize) -> f64| -> Vec<f64> {
                layers
                    .iter()
                    .map(|l| l.1.iter().map(|&i| f(i)).sum::<f64>() / l.1.len() as f64)
                    .collect()
            };
            out.push((avg(&|i| sc.sim.state.x[i].y), avg(&|i| sc.sim.state.v[i].y)));
        }
    });
    Ok(out)
}

#[derive(Serialize)]
struct BarRow {
    h: f64,
    position_error: f64,
    velocity_error: f64,
}

/// Temporal convergence of the bar drop against the same integrator at
/// `h_min / reference_divisor`. Errors are time integrals of the largest
/// layer deviation.
pub fn bar_convergence(reference_divisor: usize) -> Result<Report, ValidationError> {
    let mut rep = Report::new("bar-convergence");
    let t_end = 1.5 * BAR_PERIOD;
    let sample = BAR_PERIOD / BAR_STEP_DIVISORS[0];
    let hs: Vec<f64> = BAR_STEP_DIVISORS.iter().map(|d| BAR_PERIOD / d).collect();
    let h_ref = hs[hs.len() - 1] / reference_divisor as f64;
    let reference = bar_history(h_ref, t_end, sample, &mut rep.stats)?;
    let err = |a: &[(Vec<f64>, Vec<f64>)], pick: fn(&(Vec<f64>, Vec<f64>)) -> &Vec<f64>| -> f64 {
        a.iter()
            .zip(&reference)
            .map(|(p, q)| {
                pick(p)
                    .iter()
                    .zip(pick(q))
                    .map(|(u, w)| (u - w).abs())
                    .fold(0.0, f64::max)
                    * sample
            })
            .sum()
    };
    let mut rows = Vec::new();
    for &h in &hs {
        let hist = bar_history(h, t_end, sample, &mut rep.stats)?;
        if hist.len() != reference.len() {
            break;
        }
        rows.push(BarRow {
            h,
            position_error: err(&hist, |s| &s.0),
            velocity_error: err(&hist, |s| &s.1),
        });
    }
    if rows.len() == hs.len() {
        let lh: Vec<f64> = rows.iter().map(|r| r.h.ln()).collect();
        let sx = fit_slope(&lh, &rows.iter().map(|r| r.position_error.ln()).collect::<Vec<_>>());
        let sv = fit_slope(&lh, &rows.iter().map(|r| r.velocity_error.ln()).collect::<Vec<_>>());
        rep.checks.push(Check::new(
            "position slope",
            (sx - 1.0).abs() <= 0.2,
            format!("log-log slope {sx:.3} (target 1.0 +- 0.2)"),
        ));
        rep.checks.push(Check::new(
            "velocity slope",
            (sv - 1.0).abs() <= 0.2,
            format!("log-log slope {sv:.3} (target 1.0 +- 0.2)"),
        ));
    } else {
        rep.checks.push(Check::new("runs", false, "a bar run aborted".into()));
    }
    rep.tables.push(table("errors", &rows));
    Ok(rep)
}

// ---------------------------------------------------------------------------
// Momentum

fn friction_params(h: f64, friction: f64) -> StepParams {
    StepParams {
        h,
        friction,
        k_min: 6,
        ..Default::default()
    }
}

pub fn momentum_scene() -> SceneConfig {
    let step = StepParams {
        gravity: [0.0; 3],
        ..friction_params(0.01, 0.5)
    };
    let cube = |translation: [f64; 3], velocity: [f64; 3]| BodyConfig {
        translation,
        velocity,
        ..body(
            MeshSource::Box {
                extent: [0.2; 3],
                cells: [2; 3],
            },
            material(Model::StableNeoHookean, 1e5, 0.3, 1000.0),
        )
    };
    scene(
        vec![
            cube([-0.15, 0.0, 0.0], [3.0, 1.0, 0.0]),
            cube([0.15, 0.08, 0.03], [0.0, 0.0, 0.0]),
        ],
        step,
    )
}

#[derive(Serialize)]
struct MomentumRow {
    step: usize,
    time: f64,
    px: f64,
    py: f64,
    pz: f64,
    relative_drift: f64,
    constraints: usize,
}

/// Oblique frictional impact of two cubes in zero gravity.
pub fn momentum() -> Result<Report, ValidationError> {
    let mut rep = Report::new("momentum");
    let mut s = build(&momentum_scene())?;
    let p0 = s.sim.momentum();
    let mut rows = Vec::new();
    let mut drift: f64 = 0.0;
    let mut friction_steps = 0;
    let _ = simulate(&mut s, 100, &mut rep.stats, "momentum", |sc, d| {
        let p = sc.sim.momentum();
        let rel = (p - p0).norm() / p0.norm();
        drift = drift.max(rel);
        friction_steps += usize::from(d.friction_contacts > 0);
        rows.push(MomentumRow {
            step: sc.sim.state.step,
            time: sc.sim.state.time,
            px: p.x,
            py: p.y,
            pz: p.z,
            relative_drift: rel,
            constraints: d.peak_constraints(),
        });
    });
    rep.checks.push(Check::new(
        "frictional contact",
        friction_steps > 0,
        format!("{friction_steps} steps with friction contacts"),
    ));
    rep.checks.push(Check::new(
        "momentum drift",
        rows.len() == 100 && drift < 0.01,
        format!("max relative drift {drift:.3e} over {} steps (limit 1e-2)", rows.len()),
    ));
    rep.tables.push(table("momentum", &rows));
    Ok(rep)
}

// ---------------------------------------------------------------------------
// Slope

fn slope_angle() -> f64 {
    SLOPE_TAN.atan()
}

/// Cube resting on a fixed incline with `tan(theta) = 0.5`.
pub fn slope_scene(friction: f64) -> SceneConfig {
    let theta = slope_angle();
    let rot = |p: [f64; 3]| -> [f64; 3] {
        let (s, c) = theta.sin_cos();
        [c * p[0] - s * p[1], s * p[0] + c * p[1], p[2]]
    };
    let step = StepParams {
        eps_v: 1e-4,
        ..friction_params(0.01, friction)
    };
    let slab = BodyConfig {
        rotation: [0.0, 0.0, theta],
        ..fixed_box([3.0, 0.1, 1.0], [1, 1, 1], [0.0; 3])
    };
    let block = BodyConfig {
        rotation: [0.0, 0.0, theta],
        translation: rot([0.3, 0.05 + 0.1 + 1.5 * step.delta, -0.3]),
        ..body(
            MeshSource::Box {
                extent: [0.2; 3],
                cells: [2; 3],
            },
            material(Model::StableNeoHookean, 1e6, 0.3, 1000.0),
        )
    };
    scene(vec![slab, block], step)
}

/// Downhill speed of the block's centre of mass after each of `steps` steps.
fn slope_run(friction: f64, steps: usize, stats: &mut RunStats) -> Result<Vec<f64>, ValidationError> {
    let theta = slope_angle();
    let downhill = -Vec3::new(theta.cos(), theta.sin(), 0.0);
    let mut s = build(&slope_scene(friction))?;
    let mut speeds = Vec::new();
    let _ = simulate(&mut s, steps, stats, &format!("slope mu_f={friction}"), |sc, _| {
        speeds.push(mass_weighted_mean(sc, 1, |i| sc.sim.state.v[i]).dot(&downhill));
    });
    Ok(speeds)
}

#[derive(Serialize)]
struct SlopeRow {
    step: usize,
    time: f64,
    speed_sticking: f64,
    speed_sliding: f64,
    analytic_sliding: f64,
}

/// Stick/slip threshold on the incline: friction 0.55 holds, 0.45 slides
/// with `g (sin(theta) - 0.45 cos(theta))`.
pub fn slope_friction() -> Result<Report, ValidationError> {
    let mut rep = Report::new("slope-friction");
    let steps = 100;
    let h = 0.01;
    let stick = slope_run(0.55, steps, &mut rep.stats)?;
    let slide = slope_run(0.45, steps, &mut rep.stats)?;
    let theta = slope_angle();
    let expected = GRAVITY * (theta.sin() - 0.45 * theta.cos());

    let final_stick = stick.last().copied().unwrap_or(f64::NAN).abs();
    rep.checks.push(Check::new(
        "sticking speed",
        stick.len() == steps && final_stick < 1e-3,
        format!("mu_f=0.55 speed {final_stick:.3e} m/s after {} steps (limit 1e-3)", stick.len()),
    ));
    let fit_from = steps / 5;
    let accel = if slide.len() == steps {
        let t: Vec<f64> = (fit_from..steps).map(|k| (k + 1) as f64 * h).collect();
        fit_slope(&t, &slide[fit_from..])
    } else {
        f64::NAN
    };
    let rel = (accel - expected).abs() / expected;
    rep.checks.push(Check::new(
        "sliding acceleration",
        rel <= 0.05,
        format!("mu_f=0.45 acceleration {accel:.4} m/s^2 vs {expected:.4} (rel. error {rel:.3}, limit 0.05)"),
    ));
    let rows: Vec<SlopeRow> = (0..stick.len().min(slide.len()))
        .map(|k| SlopeRow {
            step: k + 1,
            time: (k + 1) as f64 * h,
            speed_sticking: stick[k],
            speed_sliding: slide[k],
            analytic_sliding: expected * (k + 1) as f64 * h,
        })
        .collect();
    rep.tables.push(table("speed", &rows));
    Ok(rep)
}

// ---------------------------------------------------------------------------
// Arch

pub const ARCH_BLOCKS: usize = 10;

/// Semicircular arch of hexahedral voussoirs with radial joints; the two
/// springing blocks are fixed.
pub fn arch_scene(friction: f64) -> SceneConfig {
    let (r_in, depth, gap) = (1.0, 0.3, 0.0012);
    let r_out = r_in + ARCH_BLOCK_HEIGHT;
    let span = PI / ARCH_BLOCKS as f64;
    let bodies = (0..ARCH_BLOCKS)
        .map(|k| {
            let a = [k as f64 * span + 0.5 * gap, (k + 1) as f64 * span - 0.5 * gap];
            let mut corners = [[0.0; 3]; 8];
            for (c, corner) in corners.iter_mut().enumerate() {
                let phi = a[c & 1];
                let r = if c & 2 == 0 { r_in } else { r_out };
                let z = if c & 4 == 0 { 0.0 } else { depth };
                *corner = [r * phi.cos(), r * phi.sin(), z];
            }
            let boundary = if k == 0 || k == ARCH_BLOCKS - 1 {
                vec![BoundaryConfig {
                    select: Selection::All,
                    trajectory: Trajectory::Fixed,
                }]
            } else {
                Vec::new()
            };
            BodyConfig {
                boundary,
                ..body(
                    MeshSource::Hex { corners, cells: [2, 2, 1] },
                    material(Model::StableNeoHookean, 1e7, 0.3, 2000.0),
                )
            }
        })
        .collect();
    scene(bodies, friction_params(0.01, friction))
}

/// Largest vertex displacement from the initial pose, per step.
fn arch_run(friction: f64, steps: usize, stats: &mut RunStats) -> Result<Vec<f64>, ValidationError> {
    let mut s = build(&arch_scene(friction))?;
    let start = s.sim.state.x.clone();
    let mut drifts = Vec::new();
    let _ = simulate(&mut s, steps, stats, &format!("arch mu_f={friction}"), |sc, _| {
        let d = (0..ARCH_BLOCKS).map(|b| max_drift(sc, b, &start[sc.bodies[b].vertices.clone()])).fold(0.0, f64::max);
        drifts.push(d);
    });
    Ok(drifts)
}

#[derive(Serialize)]
struct ArchRow {
    step: usize,
    drift_friction: f64,
    drift_frictionless: f64,
}

pub fn arch() -> Result<Report, ValidationError> {
    let mut rep = Report::new("arch");
    let steps = 200;
    let held = arch_run(0.5, steps, &mut rep.stats)?;
    let fell = arch_run(0.0, steps, &mut rep.stats)?;
    let held_max = held.iter().copied().fold(0.0, f64::max);
    let fell_max = fell.iter().copied().fold(0.0, f64::max);
    rep.checks.push(Check::new(
        "stable with friction",
        held.len() == steps && held_max < 0.05 * ARCH_BLOCK_HEIGHT,
        format!(
            "mu_f=0.5 max drift {:.3}% of block height over {} steps (limit 5%)",
            100.0 * held_max / ARCH_BLOCK_HEIGHT,
            held.len()
        ),
    ));
    rep.checks.push(Check::new(
        "collapse without friction",
        fell_max > ARCH_BLOCK_HEIGHT,
        format!(
            "mu_f=0 max drift {:.0}% of block height (needs > 100%)",
            100.0 * fell_max / ARCH_BLOCK_HEIGHT
        ),
    ));
    let rows: Vec<ArchRow> = (0..held.len().min(fell.len()))
        .map(|k| ArchRow {
            step: k + 1,
            drift_friction: held[k],
            drift_frictionless: fell[k],
        })
        .collect();
    rep.tables.push(table("drift", &rows));
    Ok(rep)
}

// ---------------------------------------------------------------------------
// Sphere drop over a range of offsets

pub const SPHERE_DELTAS: [f64; 3] = [2.5e-3, 5e-3, 1e-2];
pub const SPHERE_RADIUS: f64 = 0.1;

pub fn sphere_scene(delta: f64) -> SceneConfig {
    let step = StepParams {
        delta,
        ..Default::default()
    };
    let ball = BodyConfig {
        translation: [0.0, 0.05 + SPHERE_RADIUS + 0.02, 0.0],
        velocity: [0.0, -1.0, 0.0],
        ..body(
            MeshSource::Sphere {
                radius: SPHERE_RADIUS,
                subdivisions: 3,
            },
            material(Model::StableNeoHookean, 1e6, 0.3, 1000.0),
        )
    };
    scene(vec![fixed_box([1.0, 0.1, 1.0], [2, 1, 2], [0.0; 3]), ball], step)
}

#[derive(Serialize)]
struct SphereRow {
    delta: f64,
    peak_constraints: usize,
    final_constraints: usize,
    shape_drift: f64,
    outer_iterations: usize,
}

/// Largest vertex deviation from the best-fit rigid motion of `start`, in
/// units of the radius.
fn shape_drift(sc: &Scene, b: usize, start: &[Vec3], c0: &Vec3) -> f64 {
    let c = mass_weighted_mean(sc, b, |i| sc.sim.state.x[i]);
    let now: Vec<Vec3> = sc.bodies[b].vertices.clone().map(|i| sc.sim.state.x[i] - c).collect();
    let before: Vec<Vec3> = start.iter().map(|s| s - c0).collect();
    let rot = best_fit_rotation(&before, &now);
    now.iter()
        .zip(&before)
        .map(|(x, s)| (x - rot * s).norm())
        .fold(0.0, f64::max)
        / SPHERE_RADIUS
}

/// Rotation `R` minimizing `sum |R a_i - b_i|^2` for centred point sets.
pub fn best_fit_rotation(a: &[Vec3], b: &[Vec3]) -> Mat3 {
    let cov: Mat3 = a.iter().zip(b).map(|(p, q)| q * p.transpose()).sum();
    let svd = cov.svd(true, true);
    let (u, v_t) = (svd.u.unwrap_or_else(Mat3::identity), svd.v_t.unwrap_or_else(Mat3::identity));
    let d = (u * v_t).determinant().signum();
    u * Mat3::from_diagonal(&Vec3::new(1.0, 1.0, d)) * v_t
}

pub fn high_res_delta() -> Result<Report, ValidationError> {
    let mut rep = Report::new("high-res-delta");
    let mut rows = Vec::new();
    for &delta in &SPHERE_DELTAS {
        let mut s = build(&sphere_scene(delta))?;
        let r = s.bodies[1].vertices.clone();
        let start = s.sim.state.x[r].to_vec();
        let c0 = mass_weighted_mean(&s, 1, |i| s.sim.state.x[i]);
        let (mut peak, mut last, mut drift, mut outer) = (0, 0, 0.0_f64, 0);
        let _ = simulate(&mut s, 60, &mut rep.stats, &format!("sphere delta={delta}"), |sc, d| {
            peak = peak.max(d.peak_constraints());
            last = d.iterations.last().map_or(0, |r| r.n_constraints);
            drift = drift.max(shape_drift(sc, 1, &start, &c0));
            outer += d.outer_iterations();
        });
        rows.push(SphereRow {
            delta,
            peak_constraints: peak,
            final_constraints: last,
            shape_drift: drift,
            outer_iterations: outer,
        });
    }
    let lo = rows.iter().map(|r| r.peak_constraints).min().unwrap_or(0);
    let hi = rows.iter().map(|r| r.peak_constraints).max().unwrap_or(0);
    let ratio = hi as f64 / lo.max(1) as f64;
    rep.checks.push(Check::new(
        "constraint count stability",
        lo > 0 && ratio < 2.0,
        format!("peak active constraints {lo}..{hi} across delta x4 (ratio {ratio:.2}, limit 2)"),
    ));
    let worst = rows.iter().map(|r| r.shape_drift).fold(0.0, f64::max);
    rep.checks.push(Check::new(
        "surface sanity",
        worst < 0.1,
        format!("max vertex drift relative to rigid motion {worst:.4} radii (limit 0.1)"),
    ));
    rep.tables.push(table("delta", &rows));
    Ok(rep)
}

// ---------------------------------------------------------------------------
// Stacked plates

/// Four thin plates over a fixed floor; the top plate is thrown down fast
/// enough to sweep through the others within one step.
pub fn stacked_plates_scene(filter: bool) -> SceneConfig {
    let step = StepParams {
        filter,
        ..Default::default()
    };
    let mut bodies = vec![fixed_box([1.0, 0.1, 1.0], [2, 1, 2], [0.0; 3])];
    for i in 0..4 {
        let y = 0.05 + 0.01 + 0.01 + i as f64 * 0.03;
        bodies.push(BodyConfig {
            translation: [0.0, y, 0.0],
            velocity: if i == 3 { [0.0, -8.0, 0.0] } else { [0.0; 3] },
            ..body(
                MeshSource::Box {
                    extent: [0.5, 0.02, 0.5],
                    cells: [4, 1, 4],
                },
                material(Model::StableNeoHookean, 1e6, 0.3, 1000.0),
            )
        });
    }
    scene(bodies, step)
}

#[derive(Serialize)]
struct PlatesRow {
    step: usize,
    constraints_filtered: usize,
    constraints_unfiltered: usize,
}

pub fn stacked_plates() -> Result<Report, ValidationError> {
    let mut rep = Report::new("stacked-plates");
    let steps = 20;
    let mut counts = [Vec::new(), Vec::new()];
    for (slot, filter) in [true, false].into_iter().enumerate() {
        let mut s = build(&stacked_plates_scene(filter))?;
        let c = &mut counts[slot];
        let _ = simulate(&mut s, steps, &mut rep.stats, &format!("plates filter={filter}"), |_, d| {
            c.push(d.peak_constraints())
        });
    }
    let on = counts[0].iter().copied().max().unwrap_or(0);
    let off = counts[1].iter().copied().max().unwrap_or(0);
    let ratio = on as f64 / off.max(1) as f64;
    rep.checks.push(Check::new(
        "filtering efficacy",
        off > 0 && counts[0].len() == steps && counts[1].len() == steps && ratio <= 0.5,
        format!("peak constraints {on} filtered vs {off} unfiltered (ratio {ratio:.3}, limit 0.5)"),
    ));
    let rows: Vec<PlatesRow> = (0..counts[0].len().min(counts[1].len()))
        .map(|k| PlatesRow {
            step: k + 1,
            constraints_filtered: counts[0][k],
            constraints_unfiltered: counts[1][k],
        })
        .collect();
    rep.tables.push(table("constraints", &rows));
    Ok(rep)
}

// ---------------------------------------------------------------------------
// Well

pub const WELL_DECAYS: [f64; 3] = [0.0, 0.9, 1.0];

/// Soft cubes and balls dropped into an open fixed box.
pub fn well_scene(decay: f64) -> SceneConfig {
    let step = StepParams {
        decay,
        ..Default::default()
    };
    let (w, t, hgt, gap) = (0.7, 0.05, 0.4, 0.005);
    let y = t / 2.0 + gap + hgt / 2.0;
    let side = (w + t) / 2.0 + gap;
    let mut bodies = vec![
        fixed_box([w + 2.0 * t, t, w + 2.0 * t], [2, 1, 2], [0.0; 3]),
        fixed_box([t, hgt, w], [1, 2, 2], [-side, y, 0.0]),
        fixed_box([t, hgt, w], [1, 2, 2], [side, y, 0.0]),
        fixed_box([w, hgt, t], [2, 2, 1], [0.0, y, -side]),
        fixed_box([w, hgt, t], [2, 2, 1], [0.0, y, side]),
    ];
    let soft = material(Model::StableNeoHookean, 5e4, 0.4, 800.0);
    for k in 0..6 {
        let (i, j) = (k % 2, k / 2);
        let translation = [
            -0.15 + 0.3 * i as f64 + 0.02 * j as f64,
            0.2 + 0.3 * j as f64,
            -0.1 + 0.2 * ((k * 7) % 3) as f64 / 2.0,
        ];
        let mesh = if k % 3 == 1 {
            MeshSource::Sphere {
                radius: 0.08,
                subdivisions: 1,
            }
        } else {
            MeshSource::Box {
                extent: [0.15; 3],
                cells: [2; 3],
            }
        };
        bodies.push(BodyConfig {
            translation,
            rotation: [0.3 * k as f64, 0.2, 0.1 * j as f64],
            velocity: [0.0, -1.0, 0.0],
            ..body(mesh, soft.clone())
        });
    }
    scene(bodies, step)
}

#[derive(Serialize)]
struct WellRow {
    decay: f64,
    newton_iterations: usize,
    outer_iterations: usize,
    peak_constraints: usize,
}

pub fn well_decay() -> Result<Report, ValidationError> {
    let mut rep = Report::new("well-decay");
    let steps = 120;
    let mut rows = Vec::new();
    for &decay in &WELL_DECAYS {
        let mut s = build(&well_scene(decay))?;
        let mut local = RunStats::default();
        let mut outer = 0;
        let done = simulate(&mut s, steps, &mut local, &format!("well decay={decay}"), |_, d| {
            outer += d.outer_iterations()
        });
        rep.stats.merge(&local);
        rows.push(WellRow {
            decay,
            newton_iterations: if done.is_ok() { local.newton_iterations } else { usize::MAX },
            outer_iterations: outer,
            peak_constraints: local.peak_constraints,
        });
    }
    let (g0, g9, g1) = (&rows[0], &rows[1], &rows[2]);
    rep.checks.push(Check::new(
        "decay saves Newton iterations",
        g9.newton_iterations <= g0.newton_iterations,
        format!("Newton iterations {} at 0.9 vs {} at 0", g9.newton_iterations, g0.newton_iterations),
    ));
    rep.checks.push(Check::new(
        "no decay keeps more constraints",
        g1.peak_constraints >= g9.peak_constraints,
        format!("peak constraints {} at 1.0 vs {} at 0.9", g1.peak_constraints, g9.peak_constraints),
    ));
    rep.tables.push(table("decay", &rows));
    Ok(rep)
}

// ---------------------------------------------------------------------------
// High-speed impactor

pub const IMPACTOR_SIZE: f64 = 0.1;
pub const IMPACTOR_SPEED: f64 = 25.0;

/// Small cube travelling more than twice its size per step toward a thin
/// fixed plate.
pub fn impactor_scene() -> SceneConfig {
    let step = StepParams::default();
    let cube = BodyConfig {
        translation: [0.02, 0.4, -0.03],
        rotation: [0.2, 0.4, 0.1],
        velocity: [0.0, -IMPACTOR_SPEED, 0.0],
        ..body(
            MeshSource::Box {
                extent: [IMPACTOR_SIZE; 3],
                cells: [2; 3],
            },
            material(Model::StableNeoHookean, 1e6, 0.3, 1000.0),
        )
    };
    scene(vec![fixed_box([0.6, 0.02, 0.6], [3, 1, 3], [0.0; 3]), cube], step)
}

#[derive(Serialize)]
struct ImpactorRow {
    step: usize,
    min_height: f64,
    vertical_velocity: f64,
    constraints: usize,
}

pub fn impactor() -> Result<Report, ValidationError> {
    let mut rep = Report::new("impactor");
    let mut s = build(&impactor_scene())?;
    let per_step = IMPACTOR_SPEED * s.sim.params.h / IMPACTOR_SIZE;
    let mut rows = Vec::new();
    let steps = 30;
    let _ = simulate(&mut s, steps, &mut rep.stats, "impactor", |sc, d| {
        let r = sc.bodies[1].vertices.clone();
        rows.push(ImpactorRow {
            step: sc.sim.state.step,
            min_height: r.map(|i| sc.sim.state.x[i].y).fold(f64::INFINITY, f64::min),
            vertical_velocity: mass_weighted_mean(sc, 1, |i| sc.sim.state.v[i]).y,
            constraints: d.peak_constraints(),
        });
    });
    let lowest = rows.iter().map(|r| r.min_height).fold(f64::INFINITY, f64::min);
    rep.checks.push(Check::new(
        "no tunnelling",
        rows.len() == steps && lowest > 0.01,
        format!(
            "travel {per_step:.1} sizes per step; lowest impactor vertex at y={lowest:.4} (plate top 0.01), {} states checked",
            rep.stats.checked_states
        ),
    ));
    rep.tables.push(table("trajectory", &rows));
    Ok(rep)
}

// ---------------------------------------------------------------------------
// Augmented Lagrangian convergence

#[derive(Serialize)]
struct AlRow {
    iteration: usize,
    violation: f64,
    ratio: f64,
}

/// Violation history of a single vertex/triangle constraint under repeated
/// subproblem solves and multiplier updates with a fixed penalty.
pub fn al_violation_history(mu: f64, iterations: usize) -> Vec<f64> {
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
    let problem = Problem {
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
        mu,
        delta: 0.01,
        decay: 0.9,
        rule: DecayRule::default(),
    };
    let mut x_hat = x_tilde.clone();
    let mut out = Vec::with_capacity(iterations);
    for _ in 0..iterations {
        let (y, _) = solve_subproblem(&problem, &mut set, &x_hat, &al, &NewtonParams::default());
        x_hat = y;
        let c = set.iter().next().map_or(0.0, |c| c.value(&x_hat, al.delta));
        out.push(c.abs());
    }
    out
}

pub fn al_convergence() -> Report {
    let mut rep = Report::new("al-convergence");
    let hist = al_violation_history(1.0, 60);
    let mut rows = Vec::new();
    let mut worst: f64 = 0.0;
    let mut reached = None;
    for (k, &c) in hist.iter().enumerate() {
        let ratio = if k == 0 { f64::NAN } else { c / hist[k - 1] };
        if reached.is_none() && k > 0 {
            worst = worst.max(ratio);
        }
        if reached.is_none() && c < 1e-8 {
            reached = Some(k + 1);
        }
        rows.push(AlRow {
            iteration: k + 1,
            violation: c,
            ratio,
        });
    }
    rep.checks.push(Check::new(
        "geometric decrease",
        reached.is_some() && worst < 0.9,
        match reached {
            Some(n) => format!("|c| < 1e-8 after {n} iterations, worst ratio {worst:.3} (limit 0.9)"),
            None => format!("|c| = {:.3e} after {} iterations", hist.last().unwrap_or(&f64::NAN), hist.len()),
        },
    ));
    rep.tables.push(table("violation", &rows));
    rep
}
