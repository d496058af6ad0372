use std::collections::HashMap;

use indexmap::IndexMap;

use super::constraint::Constraint;
use crate::geometry::PrimitivePair;
use crate::Vec3;

/// Decay factor below which a constraint is dropped.
pub const PRUNE_THRESHOLD: f64 = 0.01;

/// Outcome of one active-set update.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct AdmissionStats {
    /// Blocking pairs not yet resident.
    pub candidates: usize,
    pub admitted: usize,
    pub pruned: usize,
}

/// Contact constraints keyed by their canonical pair, in insertion order.
#[derive(Clone, Debug, Default)]
pub struct ActiveSet {
    constraints: IndexMap<PrimitivePair, Constraint>,
}

impl ActiveSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.constraints.len()
    }

    pub fn is_empty(&self) -> bool {
        self.constraints.is_empty()
    }

    pub fn contains(&self, pair: &PrimitivePair) -> bool {
        self.constraints.contains_key(pair)
    }

    pub fn get(&self, pair: &PrimitivePair) -> Option<&Constraint> {
        self.constraints.get(pair)
    }

    pub fn iter(&self) -> impl Iterator<Item = &Constraint> {
        self.constraints.values()
    }

    pub fn iter_mut(&mut self) -> impl Iterator<Item = &mut Constraint> {
        self.constraints.values_mut()
    }

    pub fn as_slice(&self) -> &indexmap::map::Slice<PrimitivePair, Constraint> {
        self.constraints.as_slice()
    }

    /// Inserts a fresh constraint unless the pair is already resident.
    pub fn insert(&mut self, c: Constraint) -> bool {
        if self.constraints.contains_key(&c.pair) {
            return false;
        }
        self.constraints.insert(c.pair, c);
        true
    }

    /// Re-anchors every constraint at `x`. Returns the number of constraints
    /// that kept a stale anchor.
    pub fn linearize_all(&mut self, x: &[Vec3]) -> usize {
        self.constraints.values_mut().map(|c| !c.linearize(x)).filter(|&stale| stale).count()
    }

    pub fn prune(&mut self) -> usize {
        let before = self.constraints.len();
        self.constraints.retain(|_, c| c.gamma >= PRUNE_THRESHOLD);
        before - self.constraints.len()
    }
}

/// Pairs that are the earliest impact for at least one of their vertices.
///
/// Ties are kept: every pair whose TOI equals the per-vertex minimum passes.
pub fn filter_earliest(new_pairs: &[(PrimitivePair, f64)]) -> Vec<(PrimitivePair, f64)> {
    let mut earliest: HashMap<usize, f64> = HashMap::new();
    for (p, toi) in new_pairs {
        for &v in &p.verts {
            let e = earliest.entry(v).or_insert(f64::INFINITY);
            *e = e.min(*toi);
        }
    }
    new_pairs
        .iter()
        .filter(|(p, toi)| p.verts.iter().any(|v| earliest[v] == *toi))
        .copied()
        .collect()
}

/// Admits blocking pairs (optionally filtered by per-vertex earliest TOI),
/// linearized at `x` with `lambda = 0`, `gamma = 1`, then prunes decayed
/// constraints.
pub fn update_active_set(set: &mut ActiveSet, blocking: &[(PrimitivePair, f64)], x: &[Vec3], filter: bool) -> AdmissionStats {
    let mut seen = std::collections::HashSet::new();
    let fresh: Vec<(PrimitivePair, f64)> = blocking
        .iter()
        .filter(|(p, _)| !set.contains(p) && seen.insert(*p))
        .copied()
        .collect();
    let admitted = if filter { filter_earliest(&fresh) } else { fresh.clone() };
    let mut count = 0;
    for (p, _) in &admitted {
        let c = Constraint::new(*p, x);
        if c.anchor_d > 0.0 && set.insert(c) {
            count += 1;
        }
    }
    let pruned = set.prune();
    AdmissionStats {
        candidates: fresh.len(),
        admitted: count,
        pruned,
    }
}
