use std::collections::hash_map::Entry;
use std::collections::{HashMap, VecDeque};

use crate::counters::Counter;
use crate::error::Result;
use crate::hierarchy::{NodeId, PartitionTree, TreeFunction};
use crate::noise::NoiseSource;
use crate::privtree::{PrivTreeParams, Subtree};
use crate::stream::Batch;

use super::partition::EventPartition;
use super::{expect_time, Engine, EngineConfig, StepOutput};

/// Implicit representation of the synthetic tree function `G`:
///
/// * `own(v)`: everything released at `v` itself,
/// * `descendants(v)`: everything released strictly below `v`,
/// * `ancestors(v)`: the share of releases at proper ancestors that reaches
///   `v`, `Σ_a own(a)·β^-(depth v - depth a)`.
///
/// `G(v)` is the sum of the three. Entries exist only for nodes that have
/// been visited at some step.
#[derive(Clone, Debug, Default)]
pub struct ConsistencyState {
    ancestors: HashMap<NodeId, f64>,
    own: HashMap<NodeId, f64>,
    descendants: HashMap<NodeId, f64>,
}

impl ConsistencyState {
    /// Ancestor shares as of each node's most recent visit.
    pub fn ancestors(&self) -> &HashMap<NodeId, f64> {
        &self.ancestors
    }

    pub fn own(&self) -> &HashMap<NodeId, f64> {
        &self.own
    }

    pub fn descendants(&self) -> &HashMap<NodeId, f64> {
        &self.descendants
    }

    fn get(map: &HashMap<NodeId, f64>, v: NodeId) -> f64 {
        map.get(&v).copied().unwrap_or(0.0)
    }

    /// Current `G(u)` for any node, visited or not.
    pub fn synthetic_count(&self, tree: &PartitionTree, u: NodeId) -> f64 {
        let beta = tree.fanout() as f64;
        let mut share = 0.0;
        for depth in 0..u.depth() {
            let a = tree.ancestor_at(u, depth);
            share = (share + Self::get(&self.own, a)) / beta;
        }
        share + Self::get(&self.own, u) + Self::get(&self.descendants, u)
    }
}

/// Engine that only touches nodes of the current subtree. Batch counts come
/// from a lazy top-down bucketing of the batch, and each leaf's release is
/// the output increment of its continual counter.
#[derive(Clone, Debug)]
pub struct EfficientEngine {
    config: EngineConfig,
    params: PrivTreeParams,
    time: u64,
    state: ConsistencyState,
    counters: HashMap<NodeId, Counter>,
}

impl EfficientEngine {
    pub fn new(config: EngineConfig) -> Result<Self> {
        config.validate()?;
        Ok(EfficientEngine {
            params: config.tree_params()?,
            config,
            time: 0,
            state: ConsistencyState::default(),
            counters: HashMap::new(),
        })
    }

    pub fn config(&self) -> &EngineConfig {
        &self.config
    }

    pub fn state(&self) -> &ConsistencyState {
        &self.state
    }

    pub fn counter(&self, v: NodeId) -> Option<&Counter> {
        self.counters.get(&v)
    }

    /// `G(u)` after the last processed step.
    pub fn synthetic_count(&self, u: NodeId) -> f64 {
        self.state.synthetic_count(&self.config.tree, u)
    }
}

impl Engine for EfficientEngine {
    fn tree(&self) -> &PartitionTree {
        &self.config.tree
    }

    fn time(&self) -> u64 {
        self.time
    }

    fn step(&mut self, batch: &Batch, noise: &mut dyn NoiseSource) -> Result<StepOutput> {
        expect_time(self.time, batch)?;
        let tree = &self.config.tree;
        let beta = tree.fanout() as f64;
        let items = batch.events.iter().map(|e| (&e.point, e.weight() as f64)).collect();
        let mut fresh = EventPartition::new(tree, items);
        let st = &mut self.state;

        let mut subtree = Subtree::empty();
        let mut internal = Vec::new();
        let mut queue = VecDeque::from([tree.root()]);
        while let Some(v) = queue.pop_front() {
            let ca = match tree.parent(v) {
                None => 0.0,
                Some(p) => {
                    (ConsistencyState::get(&st.ancestors, p) + ConsistencyState::get(&st.own, p)) / beta
                }
            };
            st.ancestors.insert(v, ca);
            let cn = *st.own.entry(v).or_insert(0.0);
            let cd = *st.descendants.entry(v).or_insert(0.0);
            let h = fresh.count(v);

            let split = self.params.noisy_split(ca + cn + cd + h, v.depth(), noise);
            let expand = split && tree.has_children(v);
            subtree.push(v, expand);
            if expand {
                internal.push(v);
                queue.extend(tree.children(v));
                continue;
            }
            let counter = match self.counters.entry(v) {
                Entry::Occupied(e) => e.into_mut(),
                Entry::Vacant(e) => {
                    e.insert(Counter::new(self.config.counter_kind, self.config.count_epsilon())?)
                }
            };
            let before = counter.output();
            let delta = counter.feed(h, noise)? - before;
            *st.own.get_mut(&v).expect("inserted above") += delta;
        }

        for &v in internal.iter().rev() {
            let below = tree
                .children(v)
                .map(|c| ConsistencyState::get(&st.descendants, c) + ConsistencyState::get(&st.own, c))
                .sum();
            st.descendants.insert(v, below);
        }

        let node_counts: TreeFunction = subtree
            .nodes()
            .iter()
            .map(|&v| {
                let g = ConsistencyState::get(&st.ancestors, v)
                    + ConsistencyState::get(&st.own, v)
                    + ConsistencyState::get(&st.descendants, v);
                (v, g)
            })
            .collect();
        let leaf_counts = subtree.leaves().map(|v| (v, node_counts.get(v))).collect();
        self.time = batch.time;
        Ok(StepOutput {
            time: batch.time,
            subtree,
            leaf_counts,
            node_counts,
            synthetic_points: Vec::new(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::noise::ZeroNoise;
    use crate::stream::{Domain, Event, Point};

    fn engine(theta: f64) -> EfficientEngine {
        let tree = PartitionTree::new(Domain::unit(2), 2, 6).unwrap();
        let mut cfg = EngineConfig::new(tree, 1.0);
        cfg.theta = theta;
        EfficientEngine::new(cfg).unwrap()
    }

    #[test]
    fn split_then_spread() {
        let mut e = engine(5.0);
        let events = (0..10).map(|i| Event::add(Point::xy(0.05 + 0.04 * i as f64, 0.5))).collect();
        let out = e.step(&Batch::new(1, events), &mut ZeroNoise).unwrap();
        let tree = e.config.tree.clone();
        let l = tree.node(&[0]).unwrap();
        assert_eq!(out.leaf_counts.get(l), 10.0);
        assert_eq!(out.node_counts.get(NodeId::ROOT), 10.0);
        assert_eq!(e.state().descendants()[&NodeId::ROOT], 10.0);
        assert_eq!(e.synthetic_count(tree.node(&[0, 1, 1]).unwrap()), 2.5);

        // Root-only step afterwards folds descendants into the root count.
        let deletes = (0..9).map(|i| Event::delete(Point::xy(0.05 + 0.04 * i as f64, 0.5))).collect();
        let out = e.step(&Batch::new(2, deletes), &mut ZeroNoise).unwrap();
        assert_eq!(out.subtree, Subtree::root_only());
        assert_eq!(out.node_counts.get(NodeId::ROOT), 1.0);
        assert_eq!(e.synthetic_count(l), 10.0 + (-9.0) / 2.0);
    }

    #[test]
    fn state_only_holds_visited_nodes() {
        let mut e = engine(0.0);
        e.step(&Batch::empty(1), &mut ZeroNoise).unwrap();
        assert_eq!(e.state().own().len(), 1);
        assert_eq!(e.state().descendants().len(), 1);
    }
}
