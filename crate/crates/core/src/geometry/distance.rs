//! Unsigned distances between vertex-face and edge-edge primitive pairs.
//!
//! Every distance is evaluated as `|sum_i w_i p_i|` where the weights `w`
//! describe the closest points (`w = [1, -b0, -b1, -b2]` for a vertex and a
//! triangle with barycentric closest point `b`). Because the closest point
//! minimizes over the active feature's affine hull, the gradient of the active
//! closed form is `w_i n` for every input point `p_i`, with `n` the unit
//! direction between the closest points.

use super::PairKind;
use crate::Vec3;

/// Edges whose cross product is below this fraction of the length product
/// are treated as parallel.
pub const PARALLEL_TOLERANCE: f64 = 1e-10;

/// Distance value and gradient with respect to the four stacked points.
#[derive(Clone, Copy, Debug)]
pub struct DistanceEval {
    pub d: f64,
    pub grad: [Vec3; 4],
    /// Closest-point weights; `sum_i weights[i] * p_i` is the separation vector.
    pub weights: [f64; 4],
    /// Unit separation direction (zero when degenerate).
    pub normal: Vec3,
    /// Set when the primitives touch and the direction is undefined.
    pub degenerate: bool,
}

impl DistanceEval {
    fn from_weights(p: &[Vec3; 4], weights: [f64; 4]) -> Self {
        let sep: Vec3 = (0..4).map(|i| p[i] * weights[i]).sum();
        let d = sep.norm();
        let scale = (1..4).map(|i| (p[i] - p[0]).amax()).fold(0.0, f64::max);
        if d <= 8.0 * f64::EPSILON * scale || !d.is_finite() {
            return DistanceEval {
                d: if d.is_finite() { 0.0 } else { d },
                grad: [Vec3::zeros(); 4],
                weights,
                normal: Vec3::zeros(),
                degenerate: true,
            };
        }
        let n = sep / d;
        DistanceEval {
            d,
            grad: weights.map(|w| n * w),
            weights,
            normal: n,
            degenerate: false,
        }
    }
}

/// Barycentric weights of the point of triangle `(a, b, c)` closest to `p`.
pub fn point_triangle_weights(p: &Vec3, a: &Vec3, b: &Vec3, c: &Vec3) -> [f64; 3] {
    let ab = b - a;
    let ac = c - a;
    let ap = p - a;
    let d1 = ab.dot(&ap);
    let d2 = ac.dot(&ap);
    if d1 <= 0.0 && d2 <= 0.0 {
        return [1.0, 0.0, 0.0];
    }
    let bp = p - b;
    let d3 = ab.dot(&bp);
    let d4 = ac.dot(&bp);
    if d3 >= 0.0 && d4 <= d3 {
        return [0.0, 1.0, 0.0];
    }
    let vc = d1 * d4 - d3 * d2;
    if vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0 {
        let v = d1 / (d1 - d3);
        return [1.0 - v, v, 0.0];
    }
    let cp = p - c;
    let d5 = ab.dot(&cp);
    let d6 = ac.dot(&cp);
    if d6 >= 0.0 && d5 <= d6 {
        return [0.0, 0.0, 1.0];
    }
    let vb = d5 * d2 - d1 * d6;
    if vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0 {
        let w = d2 / (d2 - d6);
        return [1.0 - w, 0.0, w];
    }
    let va = d3 * d6 - d5 * d4;
    if va <= 0.0 && (d4 - d3) >= 0.0 && (d5 - d6) >= 0.0 {
        let w = (d4 - d3) / ((d4 - d3) + (d5 - d6));
        return [0.0, 1.0 - w, w];
    }
    let sum = va + vb + vc;
    if sum == 0.0 {
        // Zero-area triangle: nearest of its three edges.
        let edges = [(0, 1), (1, 2), (0, 2)];
        let pts = [a, b, c];
        let mut best = (f64::INFINITY, [1.0, 0.0, 0.0]);
        for (i, j) in edges {
            let t = point_segment_param(p, pts[i], pts[j]);
            let q = pts[i] * (1.0 - t) + pts[j] * t;
            let dist = (p - q).norm_squared();
            if dist < best.0 {
                let mut w = [0.0; 3];
                w[i] = 1.0 - t;
                w[j] = t;
                best = (dist, w);
            }
        }
        return best.1;
    }
    let v = vb / sum;
    let w = vc / sum;
    [1.0 - v - w, v, w]
}

/// Parameter of the point on segment `(a, b)` closest to `p`.
pub fn point_segment_param(p: &Vec3, a: &Vec3, b: &Vec3) -> f64 {
    let e = b - a;
    let len2 = e.norm_squared();
    if len2 == 0.0 {
        return 0.0;
    }
    ((p - a).dot(&e) / len2).clamp(0.0, 1.0)
}

/// Closest-point parameters `(s, t)` on segments `(a0, a1)` and `(b0, b1)`.
/// Near-parallel segments fall back to the best of the four point-segment
/// distances.
pub fn segment_segment_params(a0: &Vec3, a1: &Vec3, b0: &Vec3, b1: &Vec3) -> (f64, f64) {
    let da = a1 - a0;
    let db = b1 - b0;
    let r = a0 - b0;
    let a = da.norm_squared();
    let e = db.norm_squared();
    let f = db.dot(&r);
    if a == 0.0 && e == 0.0 {
        return (0.0, 0.0);
    }
    if a == 0.0 {
        return (0.0, (f / e).clamp(0.0, 1.0));
    }
    let c = da.dot(&r);
    if e == 0.0 {
        return ((-c / a).clamp(0.0, 1.0), 0.0);
    }
    if da.cross(&db).norm() < PARALLEL_TOLERANCE * (a * e).sqrt() {
        let candidates = [
            (0.0, point_segment_param(a0, b0, b1)),
            (1.0, point_segment_param(a1, b0, b1)),
            (point_segment_param(b0, a0, a1), 0.0),
            (point_segment_param(b1, a0, a1), 1.0),
        ];
        let dist = |(s, t): (f64, f64)| ((a0 + da * s) - (b0 + db * t)).norm_squared();
        return candidates
            .into_iter()
            .min_by(|x, y| dist(*x).total_cmp(&dist(*y)))
            .unwrap();
    }
    let b = da.dot(&db);
    let denom = a * e - b * b;
    let mut s = if denom > 0.0 {
        ((b * f - c * e) / denom).clamp(0.0, 1.0)
    } else {
        0.0
    };
    let mut t = (b * s + f) / e;
    if t < 0.0 {
        t = 0.0;
        s = (-c / a).clamp(0.0, 1.0);
    } else if t > 1.0 {
        t = 1.0;
        s = ((b - c) / a).clamp(0.0, 1.0);
    }
    (s, t)
}

/// Closest-point weights of a primitive pair.
pub fn closest_weights(kind: PairKind, p: &[Vec3; 4]) -> [f64; 4] {
    match kind {
        PairKind::VertexFace => {
            let b = point_triangle_weights(&p[0], &p[1], &p[2], &p[3]);
            [1.0, -b[0], -b[1], -b[2]]
        }
        PairKind::EdgeEdge => {
            let (s, t) = segment_segment_params(&p[0], &p[1], &p[2], &p[3]);
            [1.0 - s, s, -(1.0 - t), -t]
        }
    }
}

/// Unsigned distance and its gradient.
pub fn unsigned_distance(kind: PairKind, p: &[Vec3; 4]) -> DistanceEval {
    DistanceEval::from_weights(p, closest_weights(kind, p))
}

/// Squared unsigned distance.
pub fn distance_squared(kind: PairKind, p: &[Vec3; 4]) -> f64 {
    let w = closest_weights(kind, p);
    (0..4).map(|i| p[i] * w[i]).sum::<Vec3>().norm_squared()
}
