use nalgebra::{Rotation3, Unit};
use serde::{Deserialize, Serialize};

use crate::Vec3;

/// Prescribed motion of a vertex set as a function of time.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Trajectory {
    /// Vertices stay at their initial positions.
    Fixed,
    /// Constant velocity (m/s), optionally stopping after `duration` seconds.
    Translate {
        velocity: [f64; 3],
        #[serde(default, skip_serializing_if = "Option::is_none")]
        duration: Option<f64>,
    },
    /// Rotation about `axis` through `center` at `rate` rad/s.
    Rotate {
        center: [f64; 3],
        axis: [f64; 3],
        rate: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        duration: Option<f64>,
    },
}

impl Trajectory {
    fn active_time(t: f64, duration: Option<f64>) -> f64 {
        duration.map_or(t, |d| t.min(d))
    }

    /// Position at time `t` of a vertex that started at `p0`.
    pub fn position(&self, p0: &Vec3, t: f64) -> Vec3 {
        match self {
            Trajectory::Fixed => *p0,
            Trajectory::Translate { velocity, duration } => p0 + Vec3::from(*velocity) * Self::active_time(t, *duration),
            Trajectory::Rotate {
                center,
                axis,
                rate,
                duration,
            } => {
                let c = Vec3::from(*center);
                let angle = rate * Self::active_time(t, *duration);
                let rot = Rotation3::from_axis_angle(&Unit::new_normalize(Vec3::from(*axis)), angle);
                c + rot * (p0 - c)
            }
        }
    }
}

/// Dirichlet boundary condition on a set of vertices.
#[derive(Clone, Debug, PartialEq)]
pub struct BoundaryCondition {
    pub vertices: Vec<usize>,
    pub trajectory: Trajectory,
    /// Positions of `vertices` at time zero.
    pub initial: Vec<Vec3>,
}

impl BoundaryCondition {
    pub fn new(vertices: Vec<usize>, trajectory: Trajectory, x0: &[Vec3]) -> Self {
        let initial = vertices.iter().map(|&v| x0[v]).collect();
        BoundaryCondition {
            vertices,
            trajectory,
            initial,
        }
    }

    /// `(vertex, target)` pairs at time `t`.
    pub fn targets(&self, t: f64) -> impl Iterator<Item = (usize, Vec3)> + '_ {
        self.vertices
            .iter()
            .zip(&self.initial)
            .map(move |(&v, p0)| (v, self.trajectory.position(p0, t)))
    }
}

/// Writes every boundary target at time `t` into `x`.
pub fn apply_dbc(x: &mut [Vec3], boundary: &[BoundaryCondition], t: f64) {
    for bc in boundary {
        for (v, p) in bc.targets(t) {
            x[v] = p;
        }
    }
}
