use pfsim_core::contact::{filter_earliest, slack_update, Constraint, DecayRule};
use pfsim_core::geometry::PrimitivePair;
use pfsim_core::Vec3;
use proptest::prelude::*;
use std::collections::HashSet;

fn pair() -> impl Strategy<Value = PrimitivePair> {
    (0usize..12, 0usize..12, 0usize..12, 0usize..12, any::<bool>())
        .prop_filter("distinct", |(a, b, c, d, _)| HashSet::from([a, b, c, d]).len() == 4)
        .prop_map(|(a, b, c, d, vf)| {
            if vf {
                PrimitivePair::vertex_face(a, [b, c, d])
            } else {
                PrimitivePair::edge_edge([a, b], [c, d])
            }
        })
}

fn separated_points() -> Vec<Vec3> {
    (0..4).map(|i| Vec3::new(0.1 * i as f64, 1.0 + (i % 2) as f64, 0.3 * (i * i) as f64)).collect()
}

proptest! {
    #[test]
    fn earliest_filter_covers_every_vertex(pairs in prop::collection::vec((pair(), 0.0f64..1.0), 0..30)) {
        let kept = filter_earliest(&pairs);
        prop_assert!(kept.len() <= pairs.len());
        for (p, _) in &kept {
            prop_assert!(pairs.iter().any(|(q, _)| q == p));
        }
        let verts: HashSet<usize> = pairs.iter().flat_map(|(p, _)| p.verts).collect();
        for v in verts {
            let earliest = pairs.iter().filter(|(p, _)| p.verts.contains(&v)).map(|(_, t)| *t).fold(f64::INFINITY, f64::min);
            prop_assert!(kept.iter().any(|(p, t)| p.verts.contains(&v) && *t == earliest));
        }
    }

    #[test]
    fn slack_is_nonnegative_and_optimal(c in -1.0f64..1.0, lambda in -10.0f64..10.0, mu in 1e-3f64..1e3) {
        let s = slack_update(c, lambda, mu);
        prop_assert!(s >= 0.0);
        let f = |s: f64| 0.5 * mu * (c - s) * (c - s) - lambda * (c - s);
        for t in [0.0, s * 0.5, s * 2.0 + 1e-3, s + 1e-6] {
            prop_assert!(f(s) <= f(t) + 1e-9 * f(s).abs().max(1.0));
        }
    }

    #[test]
    fn decay_rules(values in prop::collection::vec(-0.05f64..0.05, 1..20), mu in 1.0f64..100.0, decay in 0.1f64..0.99) {
        let x = separated_points();
        let p = PrimitivePair::vertex_face(0, [1, 2, 3]);
        for rule in [DecayRule::DecayInactive, DecayRule::AsPrinted] {
            let mut c = Constraint::new(p, &x);
            for &v in &values {
                let before = c.gamma;
                c.dual_update(v, mu, decay, rule);
                prop_assert!(c.slack >= 0.0);
                let active = c.slack == 0.0;
                let resets = active == (rule == DecayRule::DecayInactive);
                if resets {
                    prop_assert_eq!(c.gamma, 1.0);
                } else {
                    prop_assert!(c.gamma <= before && c.gamma > 0.0);
                }
                if !active {
                    prop_assert_eq!(c.lambda, 0.0);
                }
            }
        }
    }
}
