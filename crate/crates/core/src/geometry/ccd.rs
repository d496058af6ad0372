//! Additive continuous collision detection (conservative advancement).

use super::distance::distance_squared;
use super::PairKind;
use crate::Vec3;

/// Fraction of the remaining gap that each advancement may consume is `1 - ACCD_SLACK`.
pub const ACCD_SLACK: f64 = 0.1;
pub const ACCD_MAX_ITERS: usize = 100;

fn max_norm(v: &[Vec3]) -> f64 {
    v.iter().map(|d| d.norm()).fold(0.0, f64::max)
}

/// Conservative time of impact of the linear motion `start -> end` for a
/// primitive pair, with separation threshold `min_gap`.
///
/// The returned `t` satisfies `d(start + s (end - start)) > min_gap` for all
/// `s <= t`. Returns 1 when the pair never approaches closer than the stopping
/// gap and 0 when the pair already starts within `min_gap`.
pub fn accd_toi(kind: PairKind, start: &[Vec3; 4], end: &[Vec3; 4], min_gap: f64) -> f64 {
    let mut dx: [Vec3; 4] = std::array::from_fn(|i| end[i] - start[i]);
    let mean = dx.iter().sum::<Vec3>() / 4.0;
    for d in dx.iter_mut() {
        *d -= mean;
    }
    let l_p = match kind {
        PairKind::VertexFace => dx[0].norm() + max_norm(&dx[1..4]),
        PairKind::EdgeEdge => max_norm(&dx[0..2]) + max_norm(&dx[2..4]),
    };
    let d0 = distance_squared(kind, start).sqrt();
    if d0 <= min_gap {
        return 0.0;
    }
    if l_p == 0.0 {
        return 1.0;
    }
    let gap = ACCD_SLACK * (d0 - min_gap);
    let mut d = d0;
    let mut toi = 0.0;
    for _ in 0..ACCD_MAX_ITERS {
        let step = (1.0 - ACCD_SLACK) * (d - min_gap) / l_p;
        let t = toi + step;
        let x: [Vec3; 4] = std::array::from_fn(|i| start[i] + dx[i] * t);
        d = distance_squared(kind, &x).sqrt();
        if toi > 0.0 && d - min_gap < gap {
            return toi;
        }
        toi = t;
        if toi >= 1.0 {
            return 1.0;
        }
    }
    toi
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn v(x: f64, y: f64, z: f64) -> Vec3 {
        Vec3::new(x, y, z)
    }

    fn tri() -> [Vec3; 3] {
        [v(-1.0, -1.0, 0.0), v(2.0, -1.0, 0.0), v(-1.0, 2.0, 0.0)]
    }

    #[test]
    fn falling_vertex_stops_before_impact() {
        let [a, b, c] = tri();
        let start = [v(0.0, 0.0, 1.0), a, b, c];
        let end = [v(0.0, 0.0, -1.0), a, b, c];
        let t = accd_toi(PairKind::VertexFace, &start, &end, 0.0);
        assert!((0.5 * (1.0 - ACCD_SLACK)..=0.5).contains(&t), "{t}");
    }

    #[test]
    fn parallel_motion_is_free() {
        let [a, b, c] = tri();
        let start = [v(0.0, 0.0, 1.0), a, b, c];
        let end = [v(0.5, 0.3, 1.0), a, b, c];
        assert_eq!(accd_toi(PairKind::VertexFace, &start, &end, 0.0), 1.0);
    }

    #[test]
    fn start_at_min_gap_is_blocked() {
        let [a, b, c] = tri();
        let start = [v(0.0, 0.0, 0.25), a, b, c];
        let end = [v(0.0, 0.0, 0.5), a, b, c];
        assert_eq!(accd_toi(PairKind::VertexFace, &start, &end, 0.25), 0.0);
    }

    #[test]
    fn crossing_edges() {
        let start = [v(0.0, 0.0, 1.0), v(1.0, 0.0, 1.0), v(0.5, -0.5, 0.0), v(0.5, 0.5, 0.0)];
        let end = [v(0.0, 0.0, -1.0), v(1.0, 0.0, -1.0), start[2], start[3]];
        let t = accd_toi(PairKind::EdgeEdge, &start, &end, 0.0);
        assert!((0.45..=0.5).contains(&t), "{t}");
    }

    /// Sampled distance along `[0, toi]` never falls below the conservative bound.
    #[test]
    fn conservative_on_random_trajectories() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let mut p = || v(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
        for kind in [PairKind::VertexFace, PairKind::EdgeEdge] {
            for trial in 0..2000 {
                let start: [Vec3; 4] = std::array::from_fn(|_| p());
                let end: [Vec3; 4] = std::array::from_fn(|i| start[i] + p() * 2.0);
                let min_gap = if trial % 2 == 0 { 0.0 } else { 1e-3 };
                if distance_squared(kind, &start).sqrt() <= min_gap {
                    continue;
                }
                let toi = accd_toi(kind, &start, &end, min_gap);
                for k in 0..=100 {
                    let t = toi * k as f64 / 100.0;
                    let x: [Vec3; 4] = std::array::from_fn(|i| start[i] + (end[i] - start[i]) * t);
                    let d = distance_squared(kind, &x).sqrt();
                    assert!(d > min_gap * (1.0 - ACCD_SLACK), "{kind:?} trial {trial}: d={d} at t={t}");
                }
            }
        }
    }
}
