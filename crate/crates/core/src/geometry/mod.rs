//! Contact geometry: primitive-pair distances, additive CCD, the broad phase
//! and static intersection checks.

pub mod bvh;
pub mod ccd;
pub mod distance;
pub mod intersect;

use rayon::prelude::*;

use crate::Vec3;
pub use bvh::{Aabb, Bvh};
pub use ccd::{accd_toi, ACCD_SLACK};
pub use distance::{unsigned_distance, DistanceEval};
pub use intersect::static_intersection_test;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum PairKind {
    VertexFace,
    EdgeEdge,
}

/// A vertex-face pair `[v, f0, f1, f2]` or an edge-edge pair `[a0, a1, b0, b1]`.
///
/// Constructors canonicalize the index order (face and edge indices sorted,
/// the two edges ordered) so equal pairs compare equal. Distances are
/// unsigned, so the reordering does not change any geometric quantity.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PrimitivePair {
    pub kind: PairKind,
    pub verts: [usize; 4],
}

impl PrimitivePair {
    pub fn vertex_face(v: usize, mut face: [usize; 3]) -> Self {
        face.sort_unstable();
        PrimitivePair {
            kind: PairKind::VertexFace,
            verts: [v, face[0], face[1], face[2]],
        }
    }

    pub fn edge_edge(a: [usize; 2], b: [usize; 2]) -> Self {
        let a = [a[0].min(a[1]), a[0].max(a[1])];
        let b = [b[0].min(b[1]), b[0].max(b[1])];
        let (a, b) = if a <= b { (a, b) } else { (b, a) };
        PrimitivePair {
            kind: PairKind::EdgeEdge,
            verts: [a[0], a[1], b[0], b[1]],
        }
    }

    /// The two primitives share a vertex.
    pub fn is_adjacent(&self) -> bool {
        let v = &self.verts;
        match self.kind {
            PairKind::VertexFace => v[1..].contains(&v[0]),
            PairKind::EdgeEdge => v[0..2].iter().any(|a| v[2..4].contains(a)),
        }
    }

    pub fn positions(&self, x: &[Vec3]) -> [Vec3; 4] {
        self.verts.map(|v| x[v])
    }

    pub fn distance(&self, x: &[Vec3]) -> DistanceEval {
        unsigned_distance(self.kind, &self.positions(x))
    }
}

/// Collision primitives of a scene plus a per-vertex mask of prescribed
/// (Dirichlet) vertices.
#[derive(Clone, Debug, Default)]
pub struct ContactSurface {
    pub tris: Vec<[usize; 3]>,
    pub edges: Vec<[usize; 2]>,
    pub verts: Vec<usize>,
    pub fixed: Vec<bool>,
}

impl ContactSurface {
    fn admissible(&self, p: &PrimitivePair) -> bool {
        !p.is_adjacent() && !p.verts.iter().all(|&v| self.fixed.get(v).copied().unwrap_or(false))
    }
}

fn swept_box<'a>(start: &'a [Vec3], end: &'a [Vec3], verts: &[usize], margin: f64) -> Aabb {
    Aabb::from_points(verts.iter().flat_map(|&v| [&start[v], &end[v]])).inflated(margin)
}

/// Every admissible pair whose swept boxes (inflated by `margin`) overlap
/// along the motion `start -> end`. Deterministic order.
pub fn candidate_pairs(surface: &ContactSurface, start: &[Vec3], end: &[Vec3], margin: f64) -> Vec<PrimitivePair> {
    let half = 0.5 * margin;
    let tri_boxes: Vec<Aabb> = surface.tris.iter().map(|t| swept_box(start, end, t, half)).collect();
    let edge_boxes: Vec<Aabb> = surface.edges.iter().map(|e| swept_box(start, end, e, half)).collect();
    let tri_bvh = Bvh::build(&tri_boxes);
    let edge_bvh = Bvh::build(&edge_boxes);

    let vf = surface.verts.par_iter().flat_map_iter(|&v| {
        let b = swept_box(start, end, &[v], half);
        let mut out = Vec::new();
        tri_bvh.query(&b, |t| {
            let p = PrimitivePair::vertex_face(v, surface.tris[t]);
            if surface.admissible(&p) {
                out.push(p);
            }
        });
        out.sort_unstable();
        out
    });
    let ee = (0..surface.edges.len()).into_par_iter().flat_map_iter(|i| {
        let mut out = Vec::new();
        edge_bvh.query(&edge_boxes[i], |j| {
            if j > i {
                let p = PrimitivePair::edge_edge(surface.edges[i], surface.edges[j]);
                if surface.admissible(&p) {
                    out.push(p);
                }
            }
        });
        out.sort_unstable();
        out
    });
    let mut pairs: Vec<PrimitivePair> = vf.collect();
    pairs.extend(ee.collect::<Vec<_>>());
    pairs
}

/// Result of a CCD sweep along `x -> x_hat`.
#[derive(Clone, Debug)]
pub struct StepBound {
    /// Largest fraction of the motion that keeps every pair separated.
    pub alpha: f64,
    /// Pairs whose conservative TOI is below 1, with that TOI.
    pub blocking: Vec<(PrimitivePair, f64)>,
}

/// Conservative global step bound along `x -> x_hat` and the pairs that block it.
pub fn max_step_size(surface: &ContactSurface, x: &[Vec3], x_hat: &[Vec3], min_gap: f64) -> StepBound {
    let pairs = candidate_pairs(surface, x, x_hat, min_gap);
    let blocking: Vec<(PrimitivePair, f64)> = pairs
        .par_iter()
        .filter_map(|p| {
            let toi = accd_toi(p.kind, &p.positions(x), &p.positions(x_hat), min_gap);
            (toi < 1.0).then_some((*p, toi))
        })
        .collect();
    let alpha = blocking.iter().map(|(_, t)| *t).fold(1.0, f64::min);
    StepBound { alpha, blocking }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(x: f64, y: f64, z: f64) -> Vec3 {
        Vec3::new(x, y, z)
    }

    /// Two triangles in `z = 0` and two vertices above them.
    fn two_impacts() -> (ContactSurface, Vec<Vec3>, Vec<Vec3>) {
        let x = vec![
            v(0.0, 0.0, 0.0),
            v(1.0, 0.0, 0.0),
            v(0.0, 1.0, 0.0),
            v(10.0, 0.0, 0.0),
            v(11.0, 0.0, 0.0),
            v(10.0, 1.0, 0.0),
            v(0.2, 0.2, 0.3),
            v(10.2, 0.2, 0.7),
        ];
        let mut x_hat = x.clone();
        x_hat[6].z -= 1.0;
        x_hat[7].z -= 1.0;
        let surface = ContactSurface {
            tris: vec![[0, 1, 2], [3, 4, 5]],
            edges: vec![],
            verts: vec![6, 7],
            fixed: vec![false; 8],
        };
        (surface, x, x_hat)
    }

    #[test]
    fn two_independent_impacts() {
        let (s, x, x_hat) = two_impacts();
        let b = max_step_size(&s, &x, &x_hat, 0.0);
        assert!(b.alpha <= 0.3 && b.alpha >= 0.3 * (1.0 - ACCD_SLACK));
        assert_eq!(b.blocking.len(), 2);
        let mut tois: Vec<f64> = b.blocking.iter().map(|(_, t)| *t).collect();
        tois.sort_by(f64::total_cmp);
        assert!(tois[0] <= 0.3 && tois[0] >= 0.27);
        assert!(tois[1] <= 0.7 && tois[1] >= 0.63);
    }

    #[test]
    fn zero_motion_is_unblocked() {
        let (s, x, _) = two_impacts();
        let b = max_step_size(&s, &x, &x, 0.0);
        assert_eq!(b.alpha, 1.0);
        assert!(b.blocking.is_empty());
    }

    #[test]
    fn adjacent_and_fixed_pairs_are_excluded() {
        assert!(PrimitivePair::vertex_face(1, [0, 1, 2]).is_adjacent());
        assert!(PrimitivePair::edge_edge([0, 1], [1, 2]).is_adjacent());
        let (mut s, x, x_hat) = two_impacts();
        s.fixed = vec![true; 8];
        assert!(candidate_pairs(&s, &x, &x_hat, 0.0).is_empty());
    }

    #[test]
    fn canonical_pairs_compare_equal() {
        assert_eq!(PrimitivePair::edge_edge([5, 2], [1, 0]), PrimitivePair::edge_edge([0, 1], [2, 5]));
        assert_eq!(PrimitivePair::vertex_face(3, [2, 0, 1]), PrimitivePair::vertex_face(3, [0, 1, 2]));
        assert_ne!(PrimitivePair::edge_edge([0, 1], [2, 3]), PrimitivePair::edge_edge([0, 2], [1, 3]));
    }
}
