use pfsim_core::geometry::{accd_toi, unsigned_distance, Aabb, Bvh, PairKind, ACCD_SLACK};
use pfsim_core::Vec3;
use proptest::prelude::*;

fn vec3(r: f64) -> impl Strategy<Value = Vec3> {
    [-r..r, -r..r, -r..r].prop_map(|[x, y, z]| Vec3::new(x, y, z))
}

fn quad() -> impl Strategy<Value = [Vec3; 4]> {
    [vec3(1.0), vec3(1.0), vec3(1.0), vec3(1.0)]
}

fn kind() -> impl Strategy<Value = PairKind> {
    prop_oneof![Just(PairKind::VertexFace), Just(PairKind::EdgeEdge)]
}

proptest! {
    #[test]
    fn edge_edge_distance_is_symmetric(p in quad()) {
        let d = unsigned_distance(PairKind::EdgeEdge, &p).d;
        for q in [[p[2], p[3], p[0], p[1]], [p[1], p[0], p[2], p[3]], [p[0], p[1], p[3], p[2]], [p[3], p[2], p[1], p[0]]] {
            let e = unsigned_distance(PairKind::EdgeEdge, &q).d;
            prop_assert!((d - e).abs() <= 1e-12 * d.max(1e-12));
        }
    }

    #[test]
    fn distance_is_rigid_invariant(k in kind(), p in quad(), axis in vec3(3.0), shift in vec3(10.0)) {
        let rot = nalgebra::Rotation3::new(axis);
        let q = p.map(|v| rot * v + shift);
        let (a, b) = (unsigned_distance(k, &p).d, unsigned_distance(k, &q).d);
        prop_assert!((a - b).abs() <= 1e-10 * a.max(1e-3));
    }

    #[test]
    fn distance_gradient_is_translation_free(k in kind(), p in quad()) {
        let e = unsigned_distance(k, &p);
        prop_assume!(!e.degenerate);
        let sum: Vec3 = e.grad.iter().sum();
        prop_assert!(sum.norm() <= 1e-10);
    }

    #[test]
    fn distance_gradient_matches_differences(k in kind(), p in quad()) {
        let e = unsigned_distance(k, &p);
        prop_assume!(!e.degenerate && e.d > 1e-3);
        let h = 1e-7;
        for i in 0..4 {
            for c in 0..3 {
                let (mut a, mut b) = (p, p);
                a[i][c] += h;
                b[i][c] -= h;
                let fd = (unsigned_distance(k, &a).d - unsigned_distance(k, &b).d) / (2.0 * h);
                prop_assert!((fd - e.grad[i][c]).abs() <= 1e-5, "{fd} vs {}", e.grad[i][c]);
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(10_000))]

    #[test]
    fn accd_is_conservative(k in kind(), start in quad(), motion in quad(), gap in prop_oneof![Just(0.0), 1e-4f64..0.05]) {
        prop_assume!(unsigned_distance(k, &start).d > gap);
        let end: [Vec3; 4] = std::array::from_fn(|i| start[i] + motion[i] * 2.0);
        let toi = accd_toi(k, &start, &end, gap);
        prop_assert!((0.0..=1.0).contains(&toi));
        for s in 0..=100 {
            let t = toi * s as f64 / 100.0;
            let x: [Vec3; 4] = std::array::from_fn(|i| start[i] + (end[i] - start[i]) * t);
            let d = unsigned_distance(k, &x).d;
            prop_assert!(d >= gap * (1.0 - ACCD_SLACK) && d > 0.0, "d {d} at t {t} (toi {toi})");
        }
    }
}

proptest! {
    #[test]
    fn bvh_reports_every_overlap(
        centers in prop::collection::vec(vec3(2.0), 1..80),
        sizes in prop::collection::vec(vec3(0.3), 80),
        probe in vec3(2.0),
        margin in 0.0f64..0.2,
    ) {
        let boxes: Vec<Aabb> = centers
            .iter()
            .zip(&sizes)
            .map(|(c, s)| Aabb::from_points([c + s, c - s].iter()))
            .collect();
        let bvh = Bvh::build(&boxes);
        prop_assert!(bvh.check_containment());
        let query = Aabb::from_points([probe].iter()).inflated(margin);
        let mut found = bvh.query_vec(&query);
        found.sort_unstable();
        let brute: Vec<usize> = (0..boxes.len()).filter(|&i| boxes[i].overlaps(&query)).collect();
        prop_assert_eq!(found, brute);
    }
}
