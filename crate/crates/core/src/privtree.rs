//! PrivTree: differentially private selection of a subtree of the partition
//! tree from (possibly noisy) node counts.

use std::collections::{BTreeSet, HashMap, VecDeque};

use log::debug;

use crate::error::{Error, Result};
use crate::hierarchy::{NodeId, PartitionTree};
use crate::noise::{Channel, NoiseSource};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PrivTreeParams {
    epsilon: f64,
    theta: f64,
    fanout: u32,
    lambda: f64,
    delta: f64,
}

impl PrivTreeParams {
    pub fn new(epsilon: f64, theta: f64, fanout: u32) -> Result<Self> {
        if !(epsilon > 0.0) || !epsilon.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "privtree epsilon must be positive and finite, got {epsilon}"
            )));
        }
        if !(theta >= 0.0) || !theta.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "privtree threshold must be >= 0, got {theta}"
            )));
        }
        if fanout < 2 {
            return Err(Error::InvalidParameter(format!(
                "fanout must be >= 2, got {fanout}"
            )));
        }
        let b = fanout as f64;
        let lambda = (2.0 * b - 1.0) / (b - 1.0) * (2.0 / epsilon);
        Ok(PrivTreeParams {
            epsilon,
            theta,
            fanout,
            lambda,
            delta: lambda * b.ln(),
        })
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn fanout(&self) -> u32 {
        self.fanout
    }

    /// Laplace scale of the selection noise.
    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    /// Per-level decay of the biased count.
    pub fn delta(&self) -> f64 {
        self.delta
    }

    /// `max(count - depth·δ, θ - δ)`.
    pub fn biased_count(&self, count: f64, depth: u32) -> f64 {
        (count - depth as f64 * self.delta).max(self.theta - self.delta)
    }

    /// Draws the noisy biased count of a node and reports whether it
    /// clears the threshold (strictly).
    pub fn noisy_split<N: NoiseSource + ?Sized>(&self, count: f64, depth: u32, noise: &mut N) -> bool {
        let noisy = self.biased_count(count, depth) + noise.laplace(Channel::Selection, self.lambda);
        noisy > self.theta
    }
}

/// Parent-closed set of visited nodes, in visit (breadth-first) order. Every
/// node is either a leaf or has all of its children present.
#[derive(Clone, Debug, PartialEq)]
pub struct Subtree {
    nodes: Vec<NodeId>,
    expanded: Vec<bool>,
    position: HashMap<NodeId, usize>,
}

impl Subtree {
    pub fn root_only() -> Self {
        let mut s = Subtree::empty();
        s.push(NodeId::ROOT, false);
        s
    }

    pub(crate) fn empty() -> Self {
        Subtree {
            nodes: Vec::new(),
            expanded: Vec::new(),
            position: HashMap::new(),
        }
    }

    pub(crate) fn push(&mut self, v: NodeId, expanded: bool) {
        self.position.insert(v, self.nodes.len());
        self.nodes.push(v);
        self.expanded.push(expanded);
    }

    /// All nodes in visit order.
    pub fn nodes(&self) -> &[NodeId] {
        &self.nodes
    }

    /// Leaves in visit order.
    pub fn leaves(&self) -> impl Iterator<Item = NodeId> + '_ {
        self.nodes
            .iter()
            .zip(&self.expanded)
            .filter(|(_, &e)| !e)
            .map(|(&v, _)| v)
    }

    pub fn internal(&self) -> impl Iterator<Item = NodeId> + '_ {
        self.nodes
            .iter()
            .zip(&self.expanded)
            .filter(|(_, &e)| e)
            .map(|(&v, _)| v)
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn contains(&self, v: NodeId) -> bool {
        self.position.contains_key(&v)
    }

    pub fn is_leaf(&self, v: NodeId) -> bool {
        self.position.get(&v).is_some_and(|&i| !self.expanded[i])
    }

    pub fn node_set(&self) -> BTreeSet<NodeId> {
        self.nodes.iter().copied().collect()
    }

    pub fn leaf_set(&self) -> BTreeSet<NodeId> {
        self.leaves().collect()
    }

    pub fn depth(&self) -> u32 {
        self.nodes.iter().map(|v| v.depth()).max().unwrap_or(0)
    }
}

/// Grows a subtree breadth-first from the root. A node is expanded (all of
/// its children join the frontier) when its noisy biased count exceeds θ
/// and it sits above the tree's depth cap. One selection draw is spent per
/// visited node, including nodes at the cap.
pub fn priv_tree<F, N>(
    tree: &PartitionTree,
    params: &PrivTreeParams,
    mut count: F,
    noise: &mut N,
) -> Subtree
where
    F: FnMut(NodeId) -> f64,
    N: NoiseSource + ?Sized,
{
    let mut out = Subtree::empty();
    let mut queue = VecDeque::from([tree.root()]);
    while let Some(v) = queue.pop_front() {
        let split = params.noisy_split(count(v), v.depth(), noise);
        let expand = split && tree.has_children(v);
        if split && !expand {
            debug!("privtree: depth cap {} reached at {:?}", tree.max_depth(), v);
        }
        out.push(v, expand);
        if expand {
            queue.extend(tree.children(v));
        }
    }
    out
}

fn laplace_survival(z: f64, lambda: f64) -> f64 {
    // P{Lap(λ) > z}, in log space.
    if z >= 0.0 {
        -std::f64::consts::LN_2 - z / lambda
    } else {
        (-0.5 * (z / lambda).exp()).ln_1p()
    }
}

/// `ln(P{x + Lap(λ) > θ} / P{x - 1 + Lap(λ) > θ})`.
pub fn rho(x: f64, lambda: f64, theta: f64) -> f64 {
    laplace_survival(theta - x, lambda) - laplace_survival(theta - x + 1.0, lambda)
}

/// Upper bound on [`rho`]: `1/λ` below `θ + 1`, decaying as
/// `exp((θ + 1 - x)/λ)/λ` above.
pub fn rho_top(x: f64, lambda: f64, theta: f64) -> f64 {
    if x < theta + 1.0 {
        1.0 / lambda
    } else {
        ((theta + 1.0 - x) / lambda).exp() / lambda
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::noise::{Recorder, ZeroNoise};
    use crate::stream::Domain;

    fn tree(depth: u32) -> PartitionTree {
        PartitionTree::new(Domain::unit(2), 2, depth).unwrap()
    }

    #[test]
    fn params_from_budget() {
        let p = PrivTreeParams::new(0.5, 0.0, 2).unwrap();
        assert_eq!(p.lambda(), 12.0);
        assert!((p.delta() - 12.0 * std::f64::consts::LN_2).abs() < 1e-12);
        assert!((p.delta() - 8.3178).abs() < 1e-4);
        assert!(PrivTreeParams::new(0.0, 0.0, 2).is_err());
        assert!(PrivTreeParams::new(1.0, -1.0, 2).is_err());
    }

    #[test]
    fn hand_trace_expands_root_only() {
        let t = tree(4);
        let p = PrivTreeParams::new(0.5, 5.0, 2).unwrap();
        let left = t.node(&[0]).unwrap();
        let counts = |v: NodeId| match v {
            v if v.is_root() => 10.0,
            v if v == left => 6.0,
            _ => 4.0,
        };
        // b(child) = 6 - 8.3178 = -2.3178 > 5 - 8.3178, unclamped, below θ.
        assert!((p.biased_count(6.0, 1) + 2.3178).abs() < 1e-4);
        let s = priv_tree(&t, &p, counts, &mut ZeroNoise);
        assert_eq!(s.nodes(), &[t.root(), left, t.node(&[1]).unwrap()]);
        assert_eq!(s.leaves().count(), 2);
    }

    #[test]
    fn threshold_is_strict() {
        let t = tree(4);
        let p = PrivTreeParams::new(0.5, 0.0, 2).unwrap();
        let s = priv_tree(&t, &p, |_| 0.0, &mut ZeroNoise);
        assert_eq!(s, Subtree::root_only());
    }

    #[test]
    fn depth_cap_stops_growth_but_still_draws() {
        let t = tree(2);
        let p = PrivTreeParams::new(1.0, 0.0, 2).unwrap();
        let mut rec = Recorder::new(ZeroNoise);
        let s = priv_tree(&t, &p, |_| 1e9, &mut rec);
        assert_eq!(s.len(), 7);
        assert_eq!(s.leaves().count(), 4);
        assert_eq!(rec.count(Channel::Selection), 7);
        assert!(rec.draws().iter().all(|d| d.scale == p.lambda()));
    }

    #[test]
    fn rho_examples() {
        let lambda = 3.0;
        let theta = 2.0;
        assert!((rho(theta - 5.0, lambda, theta) - 1.0 / lambda).abs() < 1e-12);
        assert!(rho(1e6, lambda, theta).abs() < 1e-12);
        assert_eq!(rho_top(theta, lambda, theta), 1.0 / lambda);
        assert_eq!(rho_top(theta + 1.0, lambda, theta), 1.0 / lambda);
        let x = theta + 1.0 + lambda;
        assert!((rho_top(x, lambda, theta) - (-1.0f64).exp() / lambda).abs() < 1e-15);
    }

    #[test]
    fn rho_matches_direct_cdf() {
        // P{x + L > θ} for Laplace L, straight from the CDF.
        let surv = |z: f64, l: f64| if z >= 0.0 { 0.5 * (-z / l).exp() } else { 1.0 - 0.5 * (z / l).exp() };
        for &(x, l, th) in &[(2.5, 1.0, 2.0), (0.0, 4.0, 3.0), (10.0, 2.0, 0.0), (-3.0, 0.5, 1.0)] {
            let direct = (surv(th - x, l) / surv(th - x + 1.0, l)).ln();
            assert!((rho(x, l, th) - direct).abs() < 1e-12, "x={x}");
        }
    }

    #[test]
    fn rho_bounded_by_rho_top() {
        for &(lambda, theta) in &[(1.0, 0.0), (3.0, 5.0), (12.0, 50.0), (0.7, 2.0)] {
            for i in 0..1000 {
                let x = theta - 20.0 + 60.0 * i as f64 / 999.0;
                assert!(
                    rho(x, lambda, theta) <= rho_top(x, lambda, theta) + 1e-12,
                    "λ={lambda} θ={theta} x={x}"
                );
            }
        }
    }
}
