//! JSON scene description and the frame-by-frame driver.
//!
//! ```json
//! {
//!   "frames": 100,
//!   "output": "out",
//!   "step": { "h": 0.01, "delta": 0.001, "friction": 0.2 },
//!   "bodies": [
//!     {
//!       "mesh": { "kind": "box", "extent": [1, 0.1, 1], "cells": [4, 1, 4] },
//!       "material": { "model": "snh", "young": 1e6, "poisson": 0.3, "density": 1000 },
//!       "boundary": [{ "select": { "kind": "all" }, "trajectory": { "kind": "fixed" } }]
//!     },
//!     {
//!       "mesh": { "kind": "file", "path": "bunny.tet" },
//!       "translation": [0, 0.5, 0],
//!       "velocity": [0, -1, 0]
//!     }
//!   ]
//! }
//! ```
//!
//! Relative mesh paths resolve against the scene file's directory.

use std::path::{Path, PathBuf};

use nalgebra::Rotation3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::elasticity::{Material, Model};
use crate::error::SceneError;
use crate::mesh::{generate, parse_gmsh, parse_tetmesh, RestData, TetMesh};
use crate::stepper::{BoundaryCondition, Simulation, StepParams, Trajectory};
use crate::Vec3;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum MeshSource {
    /// `tetmesh` text or Gmsh 2.2 ASCII file.
    File { path: PathBuf },
    /// Axis-aligned box centred at the origin.
    Box { extent: [f64; 3], cells: [usize; 3] },
    /// Hexahedral block with corners ordered `i + 2j + 4k`.
    Hex { corners: [[f64; 3]; 8], cells: [usize; 3] },
    Sphere { radius: f64, subdivisions: usize },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MaterialConfig {
    #[serde(default = "default_model")]
    pub model: Model,
    /// Young's modulus (Pa).
    pub young: f64,
    pub poisson: f64,
    /// Density (kg/m³).
    pub density: f64,
}

fn default_model() -> Model {
    Model::StableNeoHookean
}

impl Default for MaterialConfig {
    fn default() -> Self {
        MaterialConfig {
            model: default_model(),
            young: 1e5,
            poisson: 0.3,
            density: 1000.0,
        }
    }
}

/// Vertices of a body picked by a boundary condition.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Selection {
    All,
    /// Body-local vertex indices.
    Indices { indices: Vec<usize> },
    /// Vertices whose placed position lies in the box (inclusive).
    Box { min: [f64; 3], max: [f64; 3] },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundaryConfig {
    pub select: Selection,
    pub trajectory: Trajectory,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BodyConfig {
    pub mesh: MeshSource,
    #[serde(default)]
    pub material: MaterialConfig,
    #[serde(default = "one")]
    pub scale: f64,
    /// Rotation vector (axis times angle, radians) applied after scaling.
    #[serde(default)]
    pub rotation: [f64; 3],
    #[serde(default)]
    pub translation: [f64; 3],
    #[serde(default)]
    pub velocity: [f64; 3],
    #[serde(default)]
    pub boundary: Vec<BoundaryConfig>,
    /// Amplitude (m) of a seeded uniform perturbation of free vertices.
    #[serde(default)]
    pub jitter: f64,
}

fn one() -> f64 {
    1.0
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SceneConfig {
    #[serde(default)]
    pub bodies: Vec<BodyConfig>,
    #[serde(default)]
    pub step: StepParams,
    #[serde(default = "default_frames")]
    pub frames: usize,
    #[serde(default = "default_output")]
    pub output: PathBuf,
    #[serde(default)]
    pub seed: u64,
}

fn default_frames() -> usize {
    100
}

fn default_output() -> PathBuf {
    PathBuf::from("out")
}

/// Vertex and tet ranges of one body inside the merged mesh.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BodyRange {
    pub vertices: std::ops::Range<usize>,
    pub tets: std::ops::Range<usize>,
}

#[derive(Debug)]
pub struct Scene {
    pub sim: Simulation,
    pub bodies: Vec<BodyRange>,
}

impl SceneConfig {
    pub fn from_json(text: &str) -> Result<Self, SceneError> {
        serde_json::from_str(text).map_err(|e| SceneError::Parse {
            line: e.line(),
            column: e.column(),
            msg: e.to_string(),
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scene config serializes")
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, SceneError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| SceneError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_json(&text)
    }

    /// Builds the simulation; relative mesh paths resolve against `base`.
    pub fn build(&self, base: &Path) -> Result<Scene, SceneError> {
        let mut parts = Vec::with_capacity(self.bodies.len());
        let mut materials = Vec::new();
        let mut densities = Vec::new();
        let mut velocities = Vec::new();
        let mut ranges = Vec::new();
        let (mut nv, mut nt) = (0, 0);
        for (b, body) in self.bodies.iter().enumerate() {
            let mesh = body_mesh(body, base).map_err(|e| match e {
                SceneError::Invalid { field, msg } => SceneError::Invalid {
                    field: format!("bodies[{b}].{field}"),
                    msg,
                },
                other => other,
            })?;
            let m = &body.material;
            let material = Material::new(m.model, m.young, m.poisson).map_err(|e| SceneError::Invalid {
                field: format!("bodies[{b}].material"),
                msg: e.to_string(),
            })?;
            if !(m.density > 0.0 && m.density.is_finite()) {
                return Err(SceneError::Invalid {
                    field: format!("bodies[{b}].material.density"),
                    msg: "must be positive".into(),
                });
            }
            materials.extend(std::iter::repeat_n(material, mesh.tets.len()));
            densities.extend(std::iter::repeat_n(m.density, mesh.tets.len()));
            velocities.extend(std::iter::repeat_n(Vec3::from(body.velocity), mesh.num_vertices()));
            ranges.push(BodyRange {
                vertices: nv..nv + mesh.num_vertices(),
                tets: nt..nt + mesh.tets.len(),
            });
            nv += mesh.num_vertices();
            nt += mesh.tets.len();
            parts.push(mesh);
        }
        let mut merged = TetMesh::merge(&parts).map_err(|source| SceneError::Mesh { body: 0, source })?;

        let mut boundary = Vec::new();
        let mut fixed = vec![false; nv];
        for (b, body) in self.bodies.iter().enumerate() {
            let r = &ranges[b];
            for (k, bc) in body.boundary.iter().enumerate() {
                let verts: Vec<usize> = match &bc.select {
                    Selection::All => r.vertices.clone().collect(),
                    Selection::Indices { indices } => {
                        if let Some(bad) = indices.iter().find(|&&i| i >= r.vertices.len()) {
                            return Err(SceneError::Invalid {
                                field: format!("bodies[{b}].boundary[{k}].select"),
                                msg: format!("vertex {bad} out of range"),
                            });
                        }
                        indices.iter().map(|i| i + r.vertices.start).collect()
                    }
                    Selection::Box { min, max } => {
                        let (lo, hi) = (Vec3::from(*min), Vec3::from(*max));
                        r.vertices
                            .clone()
                            .filter(|&v| {
                                let p = merged.rest_positions[v];
                                (0..3).all(|a| p[a] >= lo[a] && p[a] <= hi[a])
                            })
                            .collect()
                    }
                };
                for &v in &verts {
                    fixed[v] = true;
                    velocities[v] = Vec3::zeros();
                }
                boundary.push(BoundaryCondition::new(verts, bc.trajectory.clone(), &merged.rest_positions));
            }
        }

        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let mut jittered = false;
        for (b, body) in self.bodies.iter().enumerate() {
            if body.jitter > 0.0 {
                jittered = true;
                for v in ranges[b].vertices.clone() {
                    if !fixed[v] {
                        let d = Vec3::from_fn(|_, _| rng.gen_range(-body.jitter..=body.jitter));
                        merged.rest_positions[v] += d;
                    }
                }
            }
        }
        if jittered {
            merged = TetMesh::new(merged.rest_positions, merged.tets).map_err(|source| SceneError::Mesh { body: 0, source })?;
        }

        let rest = RestData::new(&merged, &densities);
        let sim = Simulation::new(merged, rest, materials, velocities, boundary, self.step.clone())?;
        Ok(Scene { sim, bodies: ranges })
    }
}

fn body_mesh(body: &BodyConfig, base: &Path) -> Result<TetMesh, SceneError> {
    let invalid = |field: &str, msg: &str| SceneError::Invalid {
        field: field.into(),
        msg: msg.into(),
    };
    let mesh = match &body.mesh {
        MeshSource::File { path } => {
            let full = if path.is_absolute() { path.clone() } else { base.join(path) };
            let text = std::fs::read_to_string(&full).map_err(|source| SceneError::Io { path: full, source })?;
            let parsed = if text.trim_start().starts_with("$MeshFormat") {
                parse_gmsh(&text)
            } else {
                parse_tetmesh(&text)
            };
            let (positions, tets) = parsed.map_err(|e| invalid("mesh", &e.to_string()))?;
            TetMesh::new(positions, tets).map_err(|e| invalid("mesh", &e.to_string()))?
        }
        MeshSource::Box { extent, cells } => {
            if extent.iter().any(|e| *e <= 0.0) || cells.contains(&0) {
                return Err(invalid("mesh", "box needs positive extent and cell counts"));
            }
            generate::box_grid(Vec3::from(*extent), *cells)
        }
        MeshSource::Hex { corners, cells } => {
            if cells.contains(&0) {
                return Err(invalid("mesh", "hex needs positive cell counts"));
            }
            let (positions, tets) = generate::hex_block_parts(corners.map(Vec3::from), *cells);
            TetMesh::new(positions, tets).map_err(|e| invalid("mesh", &e.to_string()))?
        }
        MeshSource::Sphere { radius, subdivisions } => {
            if *radius <= 0.0 || *subdivisions == 0 {
                return Err(invalid("mesh", "sphere needs positive radius and subdivisions"));
            }
            generate::sphere(*radius, *subdivisions)
        }
    };
    if !(body.scale > 0.0) {
        return Err(invalid("scale", "must be positive"));
    }
    let rot = Rotation3::new(Vec3::from(body.rotation));
    let t = Vec3::from(body.translation);
    mesh.transformed(|p| rot * (p * body.scale) + t)
        .map_err(|e| invalid("mesh", &e.to_string()))
}
