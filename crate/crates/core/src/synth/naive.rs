use std::collections::HashMap;

use crate::counters::Counter;
use crate::error::Result;
use crate::hierarchy::{contract_node, ext, NodeId, PartitionTree, TreeFunction};
use crate::noise::{Channel, NoiseSource};
use crate::privtree::{priv_tree, PrivTreeParams};
use crate::stream::Batch;

use super::{expect_time, Engine, EngineConfig, StepOutput};

/// Reference engine. Keeps the cumulative leaf releases `Σ_t d(v,t)` and
/// evaluates the synthetic function `G(u)` as their consistent extension,
/// which by linearity equals accumulating `Ext(d(·,t))` step by step. Batch
/// counts are obtained by scanning every event against each node's region.
///
/// Query cost grows with the number of nodes ever released, so this engine
/// is meant for small trees and for cross-checking [`super::EfficientEngine`].
#[derive(Clone, Debug)]
pub struct NaiveEngine {
    config: EngineConfig,
    params: PrivTreeParams,
    time: u64,
    released: TreeFunction,
    counters: Option<HashMap<NodeId, Counter>>,
}

impl NaiveEngine {
    /// Leaves are counted with a fresh `Lap(2/ε)` per leaf and step.
    pub fn new(config: EngineConfig) -> Result<Self> {
        config.validate()?;
        Ok(NaiveEngine {
            params: config.tree_params()?,
            config,
            time: 0,
            released: TreeFunction::new(),
            counters: None,
        })
    }

    /// Leaves are counted by a per-node continual counter of
    /// `config.counter_kind` with budget ε/2, created on first use. The
    /// counter sees only the steps at which its node is a leaf.
    pub fn with_counters(config: EngineConfig) -> Result<Self> {
        let mut engine = NaiveEngine::new(config)?;
        engine.counters = Some(HashMap::new());
        Ok(engine)
    }

    pub fn config(&self) -> &EngineConfig {
        &self.config
    }

    /// `G(u)` after the last processed step.
    pub fn synthetic_count(&self, u: NodeId) -> f64 {
        self.released
            .iter()
            .map(|(v, x)| x * self.config.tree.ext_weight(v, u))
            .sum()
    }

    pub fn counter(&self, v: NodeId) -> Option<&Counter> {
        self.counters.as_ref()?.get(&v)
    }
}

impl Engine for NaiveEngine {
    fn tree(&self) -> &PartitionTree {
        &self.config.tree
    }

    fn time(&self) -> u64 {
        self.time
    }

    fn step(&mut self, batch: &Batch, noise: &mut dyn NoiseSource) -> Result<StepOutput> {
        expect_time(self.time, batch)?;
        let tree = &self.config.tree;

        let mut fresh: HashMap<NodeId, f64> = HashMap::new();
        let subtree = {
            let this = &*self;
            priv_tree(
                tree,
                &self.params,
                |v| {
                    let df = contract_node(tree, batch, v).expect("privtree stays inside the tree");
                    fresh.insert(v, df);
                    this.synthetic_count(v) + df
                },
                noise,
            )
        };

        let mut d = TreeFunction::new();
        for v in subtree.leaves() {
            let df = fresh[&v];
            let value = match &mut self.counters {
                None => df + noise.laplace(Channel::Count, self.config.count_scale()),
                Some(counters) => {
                    let counter = match counters.entry(v) {
                        std::collections::hash_map::Entry::Occupied(e) => e.into_mut(),
                        std::collections::hash_map::Entry::Vacant(e) => e.insert(Counter::new(
                            self.config.counter_kind,
                            self.config.count_epsilon(),
                        )?),
                    };
                    let before = counter.output();
                    counter.feed(df, noise)? - before
                }
            };
            d.set(v, value);
        }

        let update = ext(&d, tree, subtree.nodes().iter().copied())?;
        let node_counts: TreeFunction = subtree
            .nodes()
            .iter()
            .map(|&v| (v, self.synthetic_count(v) + update.get(v)))
            .collect();
        for (v, x) in d.iter() {
            self.released.add(v, x);
        }
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
    use crate::counters::CounterKind;
    use crate::noise::ZeroNoise;
    use crate::privtree::Subtree;
    use crate::stream::{Domain, Event, Point};

    fn config(theta: f64) -> EngineConfig {
        let tree = PartitionTree::new(Domain::unit(2), 2, 6).unwrap();
        let mut cfg = EngineConfig::new(tree, 1.0);
        cfg.theta = theta;
        cfg
    }

    fn left_batch(time: u64, n: usize) -> Batch {
        let events = (0..n)
            .map(|i| Event::add(Point::xy(0.05 + 0.04 * i as f64, 0.5)))
            .collect();
        Batch::new(time, events)
    }

    #[test]
    fn empty_batch_is_a_fixed_point() {
        let mut e = NaiveEngine::new(config(0.0)).unwrap();
        let out = e.step(&Batch::empty(1), &mut ZeroNoise).unwrap();
        assert_eq!(out.subtree, Subtree::root_only());
        assert_eq!(out.leaf_counts.get(NodeId::ROOT), 0.0);
        assert_eq!(e.synthetic_count(NodeId::ROOT), 0.0);
    }

    #[test]
    fn single_step_trace() {
        // ε = 1 gives PrivTree budget 0.5: λ = 12, δ ≈ 8.32. With θ = 5 the
        // root (count 10) splits and both halves (10 - δ, 0 - δ) stop.
        let mut e = NaiveEngine::new(config(5.0)).unwrap();
        let out = e.step(&left_batch(1, 10), &mut ZeroNoise).unwrap();
        let tree = &e.config.tree;
        let (l, r) = (tree.node(&[0]).unwrap(), tree.node(&[1]).unwrap());
        assert_eq!(out.subtree.nodes(), &[NodeId::ROOT, l, r]);
        assert_eq!(out.leaf_counts.get(l), 10.0);
        assert_eq!(out.leaf_counts.get(r), 0.0);
        assert_eq!(out.node_counts.get(NodeId::ROOT), 10.0);
        assert_eq!(e.synthetic_count(tree.node(&[0, 1]).unwrap()), 5.0);
    }

    #[test]
    fn repeated_batches_double_counts() {
        let mut e = NaiveEngine::new(config(5.0)).unwrap();
        let first = e.step(&left_batch(1, 10), &mut ZeroNoise).unwrap();
        let second = e.step(&left_batch(2, 10), &mut ZeroNoise).unwrap();
        for (v, g) in first.leaf_counts.iter() {
            if second.subtree.is_leaf(v) {
                assert_eq!(second.leaf_counts.get(v), 2.0 * g);
            }
        }
        assert_eq!(second.node_counts.get(NodeId::ROOT), 20.0);
    }

    #[test]
    fn counters_see_only_leaf_steps() {
        let mut cfg = config(5.0);
        cfg.counter_kind = CounterKind::Block(4);
        let mut e = NaiveEngine::with_counters(cfg).unwrap();
        let tree = e.config.tree.clone();
        let root = NodeId::ROOT;
        let l = tree.node(&[0]).unwrap();
        // Root is a leaf only at t=1; [0] is a leaf at t=2 and t=3.
        e.step(&Batch::empty(1), &mut ZeroNoise).unwrap();
        e.step(&left_batch(2, 10), &mut ZeroNoise).unwrap();
        let out = e
            .step(&Batch::new(3, vec![Event::delete(Point::xy(0.05, 0.5))]), &mut ZeroNoise)
            .unwrap();
        assert!(out.subtree.is_leaf(l));
        assert_eq!(e.counter(root).unwrap().time(), 1);
        assert_eq!(e.counter(l).unwrap().time(), 2);
        assert_eq!(out.leaf_counts.get(l), 9.0);
    }

    #[test]
    fn rejects_time_gaps() {
        let mut e = NaiveEngine::new(config(0.0)).unwrap();
        assert!(e.step(&Batch::empty(2), &mut ZeroNoise).is_err());
    }
}
