use std::path::PathBuf;

use thiserror::Error;

use crate::stepper::StepDiagnostics;

#[derive(Debug, Error)]
pub enum MeshError {
    #[error("failed to read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("tetrahedron {index} is degenerate (volume {volume:e})")]
    DegenerateTet { index: usize, volume: f64 },
    #[error("tetrahedron {index} references vertex {vertex} but the mesh has {nverts} vertices")]
    BadIndex {
        index: usize,
        vertex: usize,
        nverts: usize,
    },
    #[error("mesh has no tetrahedra")]
    Empty,
}

#[derive(Debug, Error)]
pub enum SceneError {
    #[error("failed to read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("scene parse error at line {line}, column {column}: {msg}")]
    Parse {
        line: usize,
        column: usize,
        msg: String,
    },
    #[error("invalid scene field `{field}`: {msg}")]
    Invalid { field: String, msg: String },
    #[error("body {body}: {source}")]
    Mesh {
        body: usize,
        #[source]
        source: MeshError,
    },
}

#[derive(Debug, Error)]
pub enum StepError {
    #[error("step aborted after {iterations} outer iterations (beta = {beta:e})")]
    IterationCap {
        iterations: usize,
        beta: f64,
        diagnostics: Box<StepDiagnostics>,
    },
    #[error("accepted state contains {count} intersecting triangle pairs")]
    Penetration {
        count: usize,
        diagnostics: Box<StepDiagnostics>,
    },
    #[error("non-finite value encountered in {0}")]
    NonFinite(&'static str),
}
