//! Implicit β-ary hierarchical partition of the domain.
//!
//! A node is identified by its depth and its index among the `β^depth` nodes
//! of that level; the base-β digits of the index are the child choices along
//! the path from the root. Level `k` splits dimension `k mod dim` into `β`
//! equal parts. Every interval is closed below and open above, except that
//! the upper boundary of the domain stays closed, so each point of the
//! domain lies in exactly one node per level.

use std::collections::{BTreeMap, BTreeSet, HashSet};

use smallvec::SmallVec;

use crate::error::{Error, Result};
use crate::stream::{Batch, Domain, Point};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct NodeId {
    depth: u32,
    index: u64,
}

impl NodeId {
    pub const ROOT: NodeId = NodeId { depth: 0, index: 0 };

    pub fn depth(self) -> u32 {
        self.depth
    }

    /// Position within its level, in child-index (breadth-first) order.
    pub fn index(self) -> u64 {
        self.index
    }

    pub fn is_root(self) -> bool {
        self.depth == 0
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
    pub closed_hi: bool,
}

impl Interval {
    pub fn contains(&self, x: f64) -> bool {
        self.lo <= x && (x < self.hi || (self.closed_hi && x == self.hi))
    }

    pub fn len(&self) -> f64 {
        self.hi - self.lo
    }

    fn edge(&self, c: u32, fanout: u32) -> f64 {
        if c == 0 {
            self.lo
        } else if c == fanout {
            self.hi
        } else {
            self.lo + (self.hi - self.lo) * (c as f64 / fanout as f64)
        }
    }

    fn part(&self, c: u32, fanout: u32) -> Interval {
        Interval {
            lo: self.edge(c, fanout),
            hi: self.edge(c + 1, fanout),
            closed_hi: self.closed_hi && c + 1 == fanout,
        }
    }

    /// Index of the part containing `x`, assuming `self.contains(x)`.
    fn part_of(&self, x: f64, fanout: u32) -> u32 {
        let guess = ((x - self.lo) / (self.hi - self.lo) * fanout as f64).floor();
        let mut c = if guess.is_nan() || guess < 0.0 {
            0
        } else {
            (guess as u32).min(fanout - 1)
        };
        while c > 0 && x < self.edge(c, fanout) {
            c -= 1;
        }
        while c + 1 < fanout && x >= self.edge(c + 1, fanout) {
            c += 1;
        }
        c
    }
}

/// Axis-aligned box of a tree node.
#[derive(Clone, Debug, PartialEq)]
pub struct Region {
    intervals: SmallVec<[Interval; 2]>,
}

impl Region {
    pub fn of_domain(domain: &Domain) -> Self {
        Region {
            intervals: domain
                .bounds()
                .iter()
                .map(|&(lo, hi)| Interval {
                    lo,
                    hi,
                    closed_hi: true,
                })
                .collect(),
        }
    }

    pub fn intervals(&self) -> &[Interval] {
        &self.intervals
    }

    pub fn contains(&self, p: &Point) -> bool {
        p.dim() == self.intervals.len()
            && self
                .intervals
                .iter()
                .zip(p.coords())
                .all(|(iv, &x)| iv.contains(x))
    }

    pub fn volume(&self) -> f64 {
        self.intervals.iter().map(Interval::len).product()
    }
}

/// The full (implicit) tree: domain, fanout β and a depth cap.
#[derive(Clone, Debug, PartialEq)]
pub struct PartitionTree {
    domain: Domain,
    fanout: u32,
    max_depth: u32,
    powers: Vec<u64>,
}

impl PartitionTree {
    pub const DEFAULT_FANOUT: u32 = 2;
    pub const DEFAULT_MAX_DEPTH: u32 = 20;

    pub fn new(domain: Domain, fanout: u32, max_depth: u32) -> Result<Self> {
        if fanout < 2 {
            return Err(Error::InvalidParameter(format!(
                "fanout must be >= 2, got {fanout}"
            )));
        }
        if max_depth == 0 {
            return Err(Error::InvalidParameter("max_depth must be >= 1".into()));
        }
        let mut powers = Vec::with_capacity(max_depth as usize + 1);
        let mut acc = 1u64;
        powers.push(acc);
        for _ in 0..max_depth {
            acc = acc.checked_mul(fanout as u64).ok_or_else(|| {
                Error::InvalidParameter(format!(
                    "fanout {fanout} at depth {max_depth} overflows node indices"
                ))
            })?;
            powers.push(acc);
        }
        Ok(PartitionTree {
            domain,
            fanout,
            max_depth,
            powers,
        })
    }

    pub fn domain(&self) -> &Domain {
        &self.domain
    }

    pub fn fanout(&self) -> u32 {
        self.fanout
    }

    pub fn max_depth(&self) -> u32 {
        self.max_depth
    }

    pub fn root(&self) -> NodeId {
        NodeId::ROOT
    }

    pub fn contains_node(&self, v: NodeId) -> bool {
        v.depth <= self.max_depth && v.index < self.powers[v.depth as usize]
    }

    fn check(&self, v: NodeId) -> Result<()> {
        if self.contains_node(v) {
            Ok(())
        } else {
            Err(Error::DepthExceeded {
                node: v,
                max_depth: self.max_depth,
            })
        }
    }

    /// Dimension split when going from `depth` to `depth + 1`.
    pub fn split_dim(&self, depth: u32) -> usize {
        depth as usize % self.domain.dim()
    }

    pub fn has_children(&self, v: NodeId) -> bool {
        v.depth < self.max_depth
    }

    pub fn child(&self, v: NodeId, c: u32) -> NodeId {
        debug_assert!(c < self.fanout);
        NodeId {
            depth: v.depth + 1,
            index: v.index * self.fanout as u64 + c as u64,
        }
    }

    /// Children in child-index order; empty at the depth cap.
    pub fn children(&self, v: NodeId) -> impl Iterator<Item = NodeId> + '_ {
        let n = if self.has_children(v) { self.fanout } else { 0 };
        (0..n).map(move |c| self.child(v, c))
    }

    pub fn parent(&self, v: NodeId) -> Option<NodeId> {
        (v.depth > 0).then(|| NodeId {
            depth: v.depth - 1,
            index: v.index / self.fanout as u64,
        })
    }

    /// Ancestor of `v` at `depth` (`v` itself when depths match).
    pub fn ancestor_at(&self, v: NodeId, depth: u32) -> NodeId {
        debug_assert!(depth <= v.depth);
        NodeId {
            depth,
            index: v.index / self.powers[(v.depth - depth) as usize],
        }
    }

    pub fn is_ancestor_or_self(&self, a: NodeId, v: NodeId) -> bool {
        a.depth <= v.depth && self.ancestor_at(v, a.depth) == a
    }

    /// Child digits from the root down to `v`.
    pub fn path(&self, v: NodeId) -> Vec<u32> {
        let mut digits = Vec::with_capacity(v.depth as usize);
        let mut idx = v.index;
        for _ in 0..v.depth {
            digits.push((idx % self.fanout as u64) as u32);
            idx /= self.fanout as u64;
        }
        digits.reverse();
        digits
    }

    pub fn node(&self, path: &[u32]) -> Result<NodeId> {
        let mut v = NodeId::ROOT;
        for &c in path {
            if c >= self.fanout {
                return Err(Error::InvalidParameter(format!(
                    "child digit {c} out of range for fanout {}",
                    self.fanout
                )));
            }
            if v.depth == self.max_depth {
                return Err(Error::DepthExceeded {
                    node: NodeId {
                        depth: path.len() as u32,
                        index: 0,
                    },
                    max_depth: self.max_depth,
                });
            }
            v = self.child(v, c);
        }
        Ok(v)
    }

    /// `+dist(v,u)` if `u` is a descendant of `v` (or `v` itself), else
    /// minus the graph distance between them.
    pub fn directed_distance(&self, v: NodeId, u: NodeId) -> i64 {
        if self.is_ancestor_or_self(v, u) {
            return (u.depth - v.depth) as i64;
        }
        let mut lca = v.depth.min(u.depth);
        while self.ancestor_at(v, lca) != self.ancestor_at(u, lca) {
            lca -= 1;
        }
        -((v.depth + u.depth - 2 * lca) as i64)
    }

    pub fn region(&self, v: NodeId) -> Result<Region> {
        self.check(v)?;
        let mut r = Region::of_domain(&self.domain);
        for (depth, c) in self.path(v).into_iter().enumerate() {
            r = self.child_region(&r, depth as u32, c);
        }
        Ok(r)
    }

    /// Region of child `c` of a node at `depth` whose region is `parent`.
    pub fn child_region(&self, parent: &Region, depth: u32, c: u32) -> Region {
        let dim = self.split_dim(depth);
        let mut r = parent.clone();
        r.intervals[dim] = parent.intervals[dim].part(c, self.fanout);
        r
    }

    /// Which child of a node at `depth` with region `parent` contains `p`.
    pub fn child_index(&self, parent: &Region, depth: u32, p: &Point) -> u32 {
        let dim = self.split_dim(depth);
        parent.intervals[dim].part_of(p[dim], self.fanout)
    }

    /// The depth-`depth` node whose region contains `p`.
    pub fn locate_leaf(&self, p: &Point, depth: u32) -> Result<NodeId> {
        if !self.domain.contains(p) {
            return Err(Error::OutOfDomain {
                point: p.coords().to_vec(),
            });
        }
        if depth > self.max_depth {
            return Err(Error::DepthExceeded {
                node: NodeId { depth, index: 0 },
                max_depth: self.max_depth,
            });
        }
        let mut v = NodeId::ROOT;
        let mut r = Region::of_domain(&self.domain);
        while v.depth < depth {
            let c = self.child_index(&r, v.depth, p);
            r = self.child_region(&r, v.depth, c);
            v = self.child(v, c);
        }
        Ok(v)
    }

    /// Weight with which a unit value at `v` reaches `u` under the
    /// consistent extension: 1 on proper ancestors, `β^-k` on descendants
    /// `k` levels down (including `v` itself at `k = 0`), 0 elsewhere.
    pub fn ext_weight(&self, v: NodeId, u: NodeId) -> f64 {
        if u.depth <= v.depth {
            if self.ancestor_at(v, u.depth) == u {
                1.0
            } else {
                0.0
            }
        } else if self.ancestor_at(u, v.depth) == v {
            1.0 / self.powers[(u.depth - v.depth) as usize] as f64
        } else {
            0.0
        }
    }
}

/// Sparse real function on tree nodes; absent nodes are 0. Iterates in
/// breadth-first node order.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct TreeFunction {
    values: BTreeMap<NodeId, f64>,
}

impl TreeFunction {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn get(&self, v: NodeId) -> f64 {
        self.values.get(&v).copied().unwrap_or(0.0)
    }

    pub fn set(&mut self, v: NodeId, value: f64) {
        self.values.insert(v, value);
    }

    pub fn add(&mut self, v: NodeId, value: f64) {
        *self.values.entry(v).or_insert(0.0) += value;
    }

    pub fn contains(&self, v: NodeId) -> bool {
        self.values.contains_key(&v)
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (NodeId, f64)> + '_ {
        self.values.iter().map(|(&v, &x)| (v, x))
    }

    pub fn keys(&self) -> impl Iterator<Item = NodeId> + '_ {
        self.values.keys().copied()
    }

    /// Nodes carrying a nonzero value.
    pub fn support(&self) -> impl Iterator<Item = NodeId> + '_ {
        self.values.iter().filter(|(_, &x)| x != 0.0).map(|(&v, _)| v)
    }

    pub fn sum(&self) -> f64 {
        self.values.values().sum()
    }

    pub fn max_abs_diff(&self, other: &TreeFunction) -> f64 {
        self.keys()
            .chain(other.keys())
            .map(|v| (self.get(v) - other.get(v)).abs())
            .fold(0.0, f64::max)
    }
}

impl FromIterator<(NodeId, f64)> for TreeFunction {
    fn from_iter<I: IntoIterator<Item = (NodeId, f64)>>(iter: I) -> Self {
        TreeFunction {
            values: iter.into_iter().collect(),
        }
    }
}

/// Signed event weight per requested node (`F(v) = Σ_{x∈v} f(x)`),
/// computed by scanning the batch against each node's region.
pub fn contract(
    tree: &PartitionTree,
    batch: &Batch,
    nodes: impl IntoIterator<Item = NodeId>,
) -> Result<TreeFunction> {
    let mut out = TreeFunction::new();
    for v in nodes {
        out.set(v, contract_node(tree, batch, v)?);
    }
    Ok(out)
}

pub(crate) fn contract_node(tree: &PartitionTree, batch: &Batch, v: NodeId) -> Result<f64> {
    let region = tree.region(v)?;
    Ok(batch
        .events
        .iter()
        .filter(|e| region.contains(&e.point))
        .map(|e| e.weight() as f64)
        .sum())
}

pub const CONSISTENCY_TOLERANCE: f64 = 1e-9;

/// Whether `F(v) = Σ_children F(u)` at every node of `nodes` that has a
/// child in `nodes`. The tolerance is `1e-9`, relative once `|F(v)| > 1`.
pub fn is_consistent(tree: &PartitionTree, f: &TreeFunction, nodes: &BTreeSet<NodeId>) -> bool {
    nodes.iter().all(|&v| {
        if !tree.children(v).any(|c| nodes.contains(&c)) {
            return true;
        }
        let parent = f.get(v);
        let sum: f64 = tree.children(v).map(|c| f.get(c)).sum();
        (parent - sum).abs() <= CONSISTENCY_TOLERANCE * parent.abs().max(1.0)
    })
}

/// Checks that no node of `nodes` is a proper ancestor of another.
pub fn check_antichain(
    tree: &PartitionTree,
    nodes: impl IntoIterator<Item = NodeId>,
) -> Result<()> {
    let set: HashSet<NodeId> = nodes.into_iter().collect();
    for &v in &set {
        let mut a = v;
        while let Some(p) = tree.parent(a) {
            if set.contains(&p) {
                return Err(Error::NotAntichain {
                    ancestor: p,
                    descendant: v,
                });
            }
            a = p;
        }
    }
    Ok(())
}

/// Consistent extension of a function supported on an antichain, evaluated
/// at `query_nodes`: values are pushed unchanged to every ancestor and
/// spread uniformly (factor `1/β` per level) to descendants.
pub fn ext(
    d: &TreeFunction,
    tree: &PartitionTree,
    query_nodes: impl IntoIterator<Item = NodeId>,
) -> Result<TreeFunction> {
    check_antichain(tree, d.support())?;
    let support: Vec<(NodeId, f64)> = d.iter().filter(|&(_, x)| x != 0.0).collect();
    Ok(query_nodes
        .into_iter()
        .map(|u| {
            let g = support
                .iter()
                .map(|&(v, x)| x * tree.ext_weight(v, u))
                .sum();
            (u, g)
        })
        .collect())
}
