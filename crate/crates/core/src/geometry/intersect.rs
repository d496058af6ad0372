//! Exhaustive triangle-triangle intersection test over a surface.

use rayon::prelude::*;

use super::bvh::{Aabb, Bvh};
use crate::Vec3;

/// Relative distance below which a point counts as lying in a plane.
const COPLANAR_TOL: f64 = 1e-13;

/// 2D orientation of `(a, b, c)`.
fn orient2(a: [f64; 2], b: [f64; 2], c: [f64; 2]) -> f64 {
    (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])
}

fn on_segment2(a: [f64; 2], b: [f64; 2], p: [f64; 2]) -> bool {
    p[0] >= a[0].min(b[0]) && p[0] <= a[0].max(b[0]) && p[1] >= a[1].min(b[1]) && p[1] <= a[1].max(b[1])
}

fn segments_intersect2(p: [f64; 2], q: [f64; 2], a: [f64; 2], b: [f64; 2]) -> bool {
    let d1 = orient2(a, b, p);
    let d2 = orient2(a, b, q);
    let d3 = orient2(p, q, a);
    let d4 = orient2(p, q, b);
    if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0)) && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0)) {
        return true;
    }
    (d1 == 0.0 && on_segment2(a, b, p))
        || (d2 == 0.0 && on_segment2(a, b, q))
        || (d3 == 0.0 && on_segment2(p, q, a))
        || (d4 == 0.0 && on_segment2(p, q, b))
}

fn point_in_tri2(p: [f64; 2], t: [[f64; 2]; 3]) -> bool {
    let s0 = orient2(t[0], t[1], p);
    let s1 = orient2(t[1], t[2], p);
    let s2 = orient2(t[2], t[0], p);
    (s0 >= 0.0 && s1 >= 0.0 && s2 >= 0.0) || (s0 <= 0.0 && s1 <= 0.0 && s2 <= 0.0)
}

/// Drops the dominant axis of `n`.
fn projector(n: &Vec3) -> impl Fn(&Vec3) -> [f64; 2] {
    let drop = n.iamax();
    let (i, j) = ((drop + 1) % 3, (drop + 2) % 3);
    move |v: &Vec3| [v[i], v[j]]
}

/// Segment `(p, q)` against a coplanar triangle.
fn coplanar_segment_triangle(p: &Vec3, q: &Vec3, tri: [&Vec3; 3], n: &Vec3) -> bool {
    let pr = projector(n);
    let t = tri.map(&pr);
    let (p2, q2) = (pr(p), pr(q));
    point_in_tri2(p2, t)
        || point_in_tri2(q2, t)
        || (0..3).any(|k| segments_intersect2(p2, q2, t[k], t[(k + 1) % 3]))
}

/// Closed segment against closed triangle. Endpoints within a relative
/// `COPLANAR_TOL` of the triangle's plane count as lying in it.
pub fn segment_triangle(p: &Vec3, q: &Vec3, tri: [&Vec3; 3]) -> bool {
    let n = (tri[1] - tri[0]).cross(&(tri[2] - tri[0]));
    let area2 = n.norm();
    if area2 == 0.0 {
        return false;
    }
    let unit = n / area2;
    let dp = unit.dot(&(p - tri[0]));
    let dq = unit.dot(&(q - tri[0]));
    let scale = [(tri[1] - tri[0]).norm(), (tri[2] - tri[1]).norm(), (tri[0] - tri[2]).norm(), (q - p).norm()]
        .into_iter()
        .fold(0.0, f64::max);
    let tol = COPLANAR_TOL * scale;
    let side = |d: f64| -> i8 {
        if d > tol {
            1
        } else if d < -tol {
            -1
        } else {
            0
        }
    };
    let (sp, sq) = (side(dp), side(dq));
    if sp != 0 && sp == sq {
        return false;
    }
    if sp == 0 && sq == 0 {
        return coplanar_segment_triangle(p, q, tri, &n);
    }
    let t = match (sp, sq) {
        (0, _) => 0.0,
        (_, 0) => 1.0,
        _ => dp / (dp - dq),
    };
    let x = p + (q - p) * t;
    let pr = projector(&n);
    point_in_tri2(pr(&x), tri.map(&pr))
}

/// Closed triangles intersect or touch.
pub fn triangles_intersect(a: [&Vec3; 3], b: [&Vec3; 3]) -> bool {
    (0..3).any(|k| segment_triangle(a[k], a[(k + 1) % 3], b)) || (0..3).any(|k| segment_triangle(b[k], b[(k + 1) % 3], a))
}

/// All pairs of surface triangles (not sharing a vertex) that intersect at
/// `positions`. Pairs are reported as `(i, j)` with `i < j`, sorted.
pub fn static_intersection_test(positions: &[Vec3], tris: &[[usize; 3]]) -> Vec<(usize, usize)> {
    let boxes: Vec<Aabb> = tris
        .iter()
        .map(|t| Aabb::from_points(t.iter().map(|&v| &positions[v])))
        .collect();
    let bvh = Bvh::build(&boxes);
    let mut hits: Vec<(usize, usize)> = (0..tris.len())
        .into_par_iter()
        .flat_map_iter(|i| {
            let ti = tris[i];
            let a = ti.map(|v| &positions[v]);
            let mut local = Vec::new();
            bvh.query(&boxes[i], |j| {
                if j <= i {
                    return;
                }
                let tj = tris[j];
                if ti.iter().any(|v| tj.contains(v)) {
                    return;
                }
                if triangles_intersect(a, tj.map(|v| &positions[v])) {
                    local.push((i, j));
                }
            });
            local
        })
        .collect();
    hits.sort_unstable();
    hits
}
