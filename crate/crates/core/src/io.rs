//! OBJ surface frames and CSV logs.

use std::fmt::Write as _;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;
use thiserror::Error;

use crate::stepper::StepDiagnostics;
use crate::Vec3;

#[derive(Debug, Error)]
pub enum IoError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },
    #[error("{path}:{line}: {msg}")]
    Parse { path: PathBuf, line: usize, msg: String },
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> IoError + '_ {
    move |source| IoError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// OBJ text of a triangle surface. Positions are written with full
/// round-trip precision.
pub fn obj_string(positions: &[Vec3], tris: &[[usize; 3]]) -> String {
    let mut s = String::with_capacity(40 * (positions.len() + tris.len()));
    for p in positions {
        let _ = writeln!(s, "v {:?} {:?} {:?}", p.x, p.y, p.z);
    }
    for t in tris {
        let _ = writeln!(s, "f {} {} {}", t[0] + 1, t[1] + 1, t[2] + 1);
    }
    s
}

pub fn export_frame(path: &Path, positions: &[Vec3], tris: &[[usize; 3]]) -> Result<(), IoError> {
    std::fs::write(path, obj_string(positions, tris)).map_err(io_err(path))
}

/// Vertices and triangles of an OBJ file (`v` and `f` records only).
pub fn read_obj(path: &Path) -> Result<(Vec<Vec3>, Vec<[usize; 3]>), IoError> {
    let text = std::fs::read_to_string(path).map_err(io_err(path))?;
    let parse_err = |line: usize, msg: &str| IoError::Parse {
        path: path.to_path_buf(),
        line,
        msg: msg.to_string(),
    };
    let mut verts = Vec::new();
    let mut tris = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let mut it = line.split_whitespace();
        match it.next() {
            Some("v") => {
                let c: Vec<f64> = it
                    .take(3)
                    .map(|t| t.parse::<f64>())
                    .collect::<Result<_, _>>()
                    .map_err(|_| parse_err(i + 1, "bad coordinate"))?;
                if c.len() != 3 {
                    return Err(parse_err(i + 1, "vertex needs three coordinates"));
                }
                verts.push(Vec3::new(c[0], c[1], c[2]));
            }
            Some("f") => {
                let idx: Vec<usize> = it
                    .map(|t| t.split('/').next().unwrap_or("").parse::<usize>())
                    .collect::<Result<_, _>>()
                    .map_err(|_| parse_err(i + 1, "bad face index"))?;
                if idx.len() != 3 || idx.iter().any(|&k| k == 0 || k > verts.len()) {
                    return Err(parse_err(i + 1, "face must reference three existing vertices"));
                }
                tris.push([idx[0] - 1, idx[1] - 1, idx[2] - 1]);
            }
            _ => {}
        }
    }
    Ok((verts, tris))
}

/// One row of the per-iteration diagnostics log.
#[derive(Clone, Debug, Serialize)]
pub struct DiagnosticsRow {
    pub step: usize,
    pub iter: usize,
    pub alpha: f64,
    pub beta: f64,
    pub n_constraints: usize,
    pub newton_iters: usize,
    pub cg_iters: usize,
    pub wall_ms: f64,
}

pub fn diagnostics_rows(d: &StepDiagnostics) -> impl Iterator<Item = DiagnosticsRow> + '_ {
    d.iterations.iter().map(move |r| DiagnosticsRow {
        step: d.step,
        iter: r.iter,
        alpha: r.alpha,
        beta: r.beta,
        n_constraints: r.n_constraints,
        newton_iters: r.newton_iters,
        cg_iters: r.cg_iters,
        wall_ms: r.wall_ms,
    })
}

/// Per-frame summary: time, total momentum and contact statistics.
#[derive(Clone, Debug, Serialize)]
pub struct FrameRow {
    pub frame: usize,
    pub time: f64,
    pub px: f64,
    pub py: f64,
    pub pz: f64,
    pub kinetic_energy: f64,
    pub outer_iters: usize,
    pub newton_iters: usize,
    pub peak_constraints: usize,
}

/// Comma-separated, header-first CSV writer for serializable rows.
pub struct CsvLog<W: Write> {
    path: PathBuf,
    writer: csv::Writer<W>,
}

impl CsvLog<BufWriter<File>> {
    pub fn create(path: &Path) -> Result<Self, IoError> {
        let file = File::create(path).map_err(io_err(path))?;
        Ok(CsvLog {
            path: path.to_path_buf(),
            writer: csv::WriterBuilder::new()
                .terminator(csv::Terminator::Any(b'\n'))
                .from_writer(BufWriter::new(file)),
        })
    }
}

impl<W: Write> CsvLog<W> {
    pub fn write<R: Serialize>(&mut self, row: &R) -> Result<(), IoError> {
        self.writer.serialize(row).map_err(|source| IoError::Csv {
            path: self.path.clone(),
            source,
        })
    }

    pub fn flush(&mut self) -> Result<(), IoError> {
        self.writer.flush().map_err(io_err(&self.path))
    }
}
