//! Linear bounding volume hierarchy over axis-aligned boxes, ordered by Morton codes.

use crate::Vec3;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Aabb {
    pub min: Vec3,
    pub max: Vec3,
}

impl Aabb {
    pub fn empty() -> Self {
        Aabb {
            min: Vec3::repeat(f64::INFINITY),
            max: Vec3::repeat(f64::NEG_INFINITY),
        }
    }

    pub fn from_points<'a>(pts: impl IntoIterator<Item = &'a Vec3>) -> Self {
        let mut b = Aabb::empty();
        for p in pts {
            b.include(p);
        }
        b
    }

    pub fn include(&mut self, p: &Vec3) {
        self.min = self.min.inf(p);
        self.max = self.max.sup(p);
    }

    pub fn union(&self, o: &Aabb) -> Aabb {
        Aabb {
            min: self.min.inf(&o.min),
            max: self.max.sup(&o.max),
        }
    }

    pub fn inflated(&self, margin: f64) -> Aabb {
        Aabb {
            min: self.min.add_scalar(-margin),
            max: self.max.add_scalar(margin),
        }
    }

    pub fn overlaps(&self, o: &Aabb) -> bool {
        (0..3).all(|k| self.min[k] <= o.max[k] && o.min[k] <= self.max[k])
    }

    pub fn contains(&self, o: &Aabb) -> bool {
        (0..3).all(|k| self.min[k] <= o.min[k] && o.max[k] <= self.max[k])
    }

    pub fn center(&self) -> Vec3 {
        (self.min + self.max) * 0.5
    }
}

#[derive(Clone, Debug)]
struct Node {
    bounds: Aabb,
    /// Child node indices, or `usize::MAX` for leaves.
    left: usize,
    right: usize,
    /// Primitive index for leaves.
    prim: usize,
}

impl Node {
    fn is_leaf(&self) -> bool {
        self.left == usize::MAX
    }
}

/// Binary hierarchy with one primitive per leaf. Children always have larger
/// indices than their parent, so a reverse sweep refits bottom-up.
#[derive(Clone, Debug, Default)]
pub struct Bvh {
    nodes: Vec<Node>,
}

/// Spreads the low 10 bits of `v` so they occupy every third bit.
fn expand_bits(v: u32) -> u32 {
    let mut v = v & 0x3ff;
    v = (v | (v << 16)) & 0x030000ff;
    v = (v | (v << 8)) & 0x0300f00f;
    v = (v | (v << 4)) & 0x030c30c3;
    v = (v | (v << 2)) & 0x09249249;
    v
}

/// 30-bit Morton code of a point given in unit-cube coordinates.
pub fn morton3(p: &Vec3) -> u32 {
    let q = |x: f64| (x.clamp(0.0, 1.0) * 1023.0) as u32;
    (expand_bits(q(p.x)) << 2) | (expand_bits(q(p.y)) << 1) | expand_bits(q(p.z))
}

impl Bvh {
    pub fn build(boxes: &[Aabb]) -> Self {
        if boxes.is_empty() {
            return Bvh::default();
        }
        let scene = boxes.iter().fold(Aabb::empty(), |acc, b| acc.union(b));
        let extent = (scene.max - scene.min).map(|e| if e > 0.0 { e } else { 1.0 });
        let mut order: Vec<(u32, usize)> = boxes
            .iter()
            .enumerate()
            .map(|(i, b)| {
                let c = (b.center() - scene.min).component_div(&extent);
                (morton3(&c), i)
            })
            .collect();
        order.sort_unstable();
        let mut bvh = Bvh {
            nodes: Vec::with_capacity(2 * boxes.len()),
        };
        bvh.build_range(&order, boxes);
        bvh
    }

    fn build_range(&mut self, order: &[(u32, usize)], boxes: &[Aabb]) -> usize {
        let id = self.nodes.len();
        if order.len() == 1 {
            let prim = order[0].1;
            self.nodes.push(Node {
                bounds: boxes[prim],
                left: usize::MAX,
                right: usize::MAX,
                prim,
            });
            return id;
        }
        self.nodes.push(Node {
            bounds: Aabb::empty(),
            left: 0,
            right: 0,
            prim: usize::MAX,
        });
        let split = split_point(order);
        let left = self.build_range(&order[..split], boxes);
        let right = self.build_range(&order[split..], boxes);
        let bounds = self.nodes[left].bounds.union(&self.nodes[right].bounds);
        let n = &mut self.nodes[id];
        n.left = left;
        n.right = right;
        n.bounds = bounds;
        id
    }

    /// Replaces leaf bounds and recomputes internal bounds. The topology is kept.
    pub fn refit(&mut self, boxes: &[Aabb]) {
        for i in (0..self.nodes.len()).rev() {
            let bounds = if self.nodes[i].is_leaf() {
                boxes[self.nodes[i].prim]
            } else {
                let n = &self.nodes[i];
                self.nodes[n.left].bounds.union(&self.nodes[n.right].bounds)
            };
            self.nodes[i].bounds = bounds;
        }
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn root_bounds(&self) -> Option<Aabb> {
        self.nodes.first().map(|n| n.bounds)
    }

    /// Calls `visit` for every primitive whose box overlaps `query`.
    pub fn query(&self, query: &Aabb, mut visit: impl FnMut(usize)) {
        if self.nodes.is_empty() {
            return;
        }
        let mut stack = vec![0usize];
        while let Some(i) = stack.pop() {
            let n = &self.nodes[i];
            if !n.bounds.overlaps(query) {
                continue;
            }
            if n.is_leaf() {
                visit(n.prim);
            } else {
                stack.push(n.right);
                stack.push(n.left);
            }
        }
    }

    pub fn query_vec(&self, query: &Aabb) -> Vec<usize> {
        let mut out = Vec::new();
        self.query(query, |i| out.push(i));
        out
    }

    /// Checks that every node's bounds contain its children's bounds.
    pub fn check_containment(&self) -> bool {
        self.nodes.iter().all(|n| {
            n.is_leaf() || (n.bounds.contains(&self.nodes[n.left].bounds) && n.bounds.contains(&self.nodes[n.right].bounds))
        })
    }
}

/// Index splitting a sorted Morton range at its highest differing bit.
fn split_point(order: &[(u32, usize)]) -> usize {
    let first = order[0].0;
    let last = order[order.len() - 1].0;
    if first == last {
        return order.len() / 2;
    }
    let prefix = (first ^ last).leading_zeros();
    // First element whose code has the differing bit set.
    order.partition_point(|(c, _)| (first ^ c).leading_zeros() > prefix)
}
