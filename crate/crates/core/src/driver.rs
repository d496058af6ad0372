//! Frame loop: steps a scene, writes surface frames and CSV logs.

use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::error::StepError;
use crate::io::{diagnostics_rows, export_frame, CsvLog, FrameRow, IoError};
use crate::scene::Scene;
use crate::stepper::StepDiagnostics;

pub const DIAGNOSTICS_FILE: &str = "diagnostics.csv";
pub const FRAMES_FILE: &str = "frames.csv";

#[derive(Debug, Error)]
pub enum RunError {
    #[error("frame {frame}: {source}")]
    Step {
        frame: usize,
        #[source]
        source: StepError,
    },
    #[error(transparent)]
    Io(#[from] IoError),
}

#[derive(Clone, Debug)]
pub struct RunOptions {
    pub frames: usize,
    /// Write a surface frame every `dump_every` steps; 0 disables frame files.
    pub dump_every: usize,
    pub output: PathBuf,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct RunSummary {
    pub frames: usize,
    pub frame_files: usize,
    pub outer_iterations: usize,
    pub newton_iterations: usize,
    pub peak_constraints: usize,
    pub adaptive_triggers: usize,
}

pub fn frame_path(dir: &Path, frame: usize) -> PathBuf {
    dir.join(format!("frame_{frame:05}.obj"))
}

/// Simulates `opts.frames` steps. Frame files are numbered from 1; the
/// diagnostics log gets one row per outer iteration, including those of an
/// aborted step.
pub fn run(scene: &mut Scene, opts: &RunOptions) -> Result<RunSummary, RunError> {
    let out = &opts.output;
    std::fs::create_dir_all(out).map_err(|source| IoError::Io {
        path: out.clone(),
        source,
    })?;
    let mut diag_log = CsvLog::create(&out.join(DIAGNOSTICS_FILE))?;
    let mut frame_log = CsvLog::create(&out.join(FRAMES_FILE))?;
    let mut summary = RunSummary::default();
    let sim = &mut scene.sim;
    let surface = sim.mesh.surface_tris.clone();

    for frame in 1..=opts.frames {
        let diag = match sim.step() {
            Ok(d) => d,
            Err(source) => {
                if let Some(d) = aborted_diagnostics(&source) {
                    for row in diagnostics_rows(d) {
                        diag_log.write(&row)?;
                    }
                }
                diag_log.flush()?;
                frame_log.flush()?;
                return Err(RunError::Step { frame, source });
            }
        };
        for row in diagnostics_rows(&diag) {
            diag_log.write(&row)?;
        }
        let p = sim.momentum();
        frame_log.write(&FrameRow {
            frame,
            time: sim.state.time,
            px: p.x,
            py: p.y,
            pz: p.z,
            kinetic_energy: sim.kinetic_energy(),
            outer_iters: diag.outer_iterations(),
            newton_iters: diag.newton_iterations(),
            peak_constraints: diag.peak_constraints(),
        })?;
        if opts.dump_every > 0 && frame % opts.dump_every == 0 {
            export_frame(&frame_path(out, frame), &sim.state.x, &surface)?;
            summary.frame_files += 1;
        }
        summary.frames = frame;
        summary.outer_iterations += diag.outer_iterations();
        summary.newton_iterations += diag.newton_iterations();
        summary.peak_constraints = summary.peak_constraints.max(diag.peak_constraints());
        summary.adaptive_triggers += diag.adaptive_triggers;
        log::info!(
            "frame {frame}: {} outer, {} newton, {} constraints",
            diag.outer_iterations(),
            diag.newton_iterations(),
            diag.peak_constraints()
        );
    }
    diag_log.flush()?;
    frame_log.flush()?;
    Ok(summary)
}

fn aborted_diagnostics(e: &StepError) -> Option<&StepDiagnostics> {
    match e {
        StepError::IterationCap { diagnostics, .. } | StepError::Penetration { diagnostics, .. } => Some(diagnostics),
        StepError::NonFinite(_) => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scene::SceneConfig;

    const DROP: &str = r#"{
        "step": { "h": 0.01 },
        "bodies": [
            { "mesh": { "kind": "box", "extent": [1, 0.1, 1], "cells": [1, 1, 1] },
              "boundary": [{ "select": { "kind": "all" }, "trajectory": { "kind": "fixed" } }] },
            { "mesh": { "kind": "box", "extent": [0.2, 0.2, 0.2], "cells": [1, 1, 1] },
              "translation": [0, 0.2, 0], "velocity": [0, -2, 0] }
        ]
    }"#;

    #[test]
    fn diagnostics_rows_match_outer_iterations() {
        let dir = tempfile::tempdir().unwrap();
        let mut scene = SceneConfig::from_json(DROP).unwrap().build(dir.path()).unwrap();
        let opts = RunOptions {
            frames: 12,
            dump_every: 4,
            output: dir.path().join("out"),
        };
        let summary = run(&mut scene, &opts).unwrap();
        assert_eq!(summary.frame_files, 3);
        assert!(summary.peak_constraints > 0);
        let diag = std::fs::read_to_string(opts.output.join(DIAGNOSTICS_FILE)).unwrap();
        assert_eq!(diag.lines().count(), 1 + summary.outer_iterations);
        let frames = std::fs::read_to_string(opts.output.join(FRAMES_FILE)).unwrap();
        assert_eq!(frames.lines().count(), 13);
        assert!(frame_path(&opts.output, 12).exists());
        assert!(!frame_path(&opts.output, 11).exists());
    }
}
