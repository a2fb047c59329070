//! Comparison methods built from the same parts as the synthesizer: offline
//! PrivTree + Counting rerun on the cumulative data, rerun on each batch,
//! or run once with counters afterwards.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use crate::counters::Counter;
use crate::error::{Error, Result};
use crate::hierarchy::{NodeId, PartitionTree, TreeFunction};
use crate::noise::{Channel, NoiseSource};
use crate::privtree::{priv_tree, Subtree};
use crate::stream::{Batch, Point, Snapshot, SnapshotTracker};
use crate::synth::partition::EventPartition;
use crate::synth::{expect_time, subtree_node_counts, Engine, EngineConfig, StepOutput};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum BaselineKind {
    /// Offline release of the full snapshot at every step. Not ε-DP over
    /// the horizon: the budget is spent again at every step.
    OfflineOnStream,
    /// Offline release of each batch, rescaled to the current total.
    OfflineOnDiff,
    /// Offline release at the first step, then per-leaf counters on a
    /// frozen subtree.
    InitThenCount,
}

impl BaselineKind {
    pub const ALL: [BaselineKind; 3] = [
        BaselineKind::OfflineOnStream,
        BaselineKind::OfflineOnDiff,
        BaselineKind::InitThenCount,
    ];

    pub fn name(self) -> &'static str {
        match self {
            BaselineKind::OfflineOnStream => "baseline1",
            BaselineKind::OfflineOnDiff => "baseline2",
            BaselineKind::InitThenCount => "baseline3",
        }
    }
}

impl fmt::Display for BaselineKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for BaselineKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        BaselineKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown baseline {s:?}")))
    }
}

/// Offline PrivTree + Counting on weighted points: PrivTree at ε/2 on the
/// exact node weights, then `Lap(2/ε)` on every leaf.
pub fn offline_release(
    config: &EngineConfig,
    items: Vec<(&Point, f64)>,
    time: u64,
    noise: &mut dyn NoiseSource,
) -> Result<StepOutput> {
    let tree = &config.tree;
    let params = config.tree_params()?;
    let mut part = EventPartition::new(tree, items);
    let subtree = priv_tree(tree, &params, |v| part.count(v), noise);
    let leaf_counts: TreeFunction = subtree
        .leaves()
        .map(|v| (v, part.count(v) + noise.laplace(Channel::Count, config.count_scale())))
        .collect();
    let node_counts = subtree_node_counts(tree, &subtree, &leaf_counts);
    Ok(StepOutput {
        time,
        subtree,
        leaf_counts,
        node_counts,
        synthetic_points: Vec::new(),
    })
}

fn snapshot_items(snapshot: &Snapshot) -> Vec<(&Point, f64)> {
    snapshot.iter().map(|(p, m)| (p, m as f64)).collect()
}

fn batch_items(batch: &Batch) -> Vec<(&Point, f64)> {
    batch.events.iter().map(|e| (&e.point, e.weight() as f64)).collect()
}

/// Offline release of the cumulative snapshot at time `time`.
pub fn baseline1_step(
    config: &EngineConfig,
    snapshot: &Snapshot,
    time: u64,
    noise: &mut dyn NoiseSource,
) -> Result<StepOutput> {
    offline_release(config, snapshot_items(snapshot), time, noise)
}

/// Offline release of the batch, with all counts multiplied by
/// `total / |batch|` where `|batch|` is the number of events. An empty batch
/// releases the root alone with count 0 and draws no noise.
pub fn baseline2_step(
    config: &EngineConfig,
    batch: &Batch,
    total: f64,
    noise: &mut dyn NoiseSource,
) -> Result<StepOutput> {
    let mass = batch.mass();
    if mass == 0 {
        log::debug!("baseline2: empty batch at t={}, releasing nothing", batch.time);
        let root_zero: TreeFunction = [(NodeId::ROOT, 0.0)].into_iter().collect();
        return Ok(StepOutput {
            time: batch.time,
            subtree: Subtree::root_only(),
            leaf_counts: root_zero.clone(),
            node_counts: root_zero,
            synthetic_points: Vec::new(),
        });
    }
    let scale = total / mass as f64;
    let mut out = offline_release(config, batch_items(batch), batch.time, noise)?;
    out.leaf_counts = out.leaf_counts.iter().map(|(v, x)| (v, x * scale)).collect();
    out.node_counts = out.node_counts.iter().map(|(v, x)| (v, x * scale)).collect();
    Ok(out)
}

/// [`baseline1_step`] driven by a stream of batches.
#[derive(Clone, Debug)]
pub struct Baseline1 {
    config: EngineConfig,
    tracker: SnapshotTracker,
}

impl Baseline1 {
    pub fn new(config: EngineConfig) -> Result<Self> {
        config.validate()?;
        Ok(Baseline1 {
            config,
            tracker: SnapshotTracker::new(),
        })
    }
}

impl Engine for Baseline1 {
    fn tree(&self) -> &PartitionTree {
        &self.config.tree
    }

    fn time(&self) -> u64 {
        self.tracker.time()
    }

    fn step(&mut self, batch: &Batch, noise: &mut dyn NoiseSource) -> Result<StepOutput> {
        expect_time(self.tracker.time(), batch)?;
        self.tracker.apply(batch)?;
        baseline1_step(&self.config, self.tracker.snapshot(), batch.time, noise)
    }
}

/// [`baseline2_step`] with the running total kept from the batches.
#[derive(Clone, Debug)]
pub struct Baseline2 {
    config: EngineConfig,
    time: u64,
    total: i64,
}

impl Baseline2 {
    pub fn new(config: EngineConfig) -> Result<Self> {
        config.validate()?;
        Ok(Baseline2 {
            config,
            time: 0,
            total: 0,
        })
    }
}

impl Engine for Baseline2 {
    fn tree(&self) -> &PartitionTree {
        &self.config.tree
    }

    fn time(&self) -> u64 {
        self.time
    }

    fn step(&mut self, batch: &Batch, noise: &mut dyn NoiseSource) -> Result<StepOutput> {
        expect_time(self.time, batch)?;
        self.total += batch.net_weight();
        self.time = batch.time;
        baseline2_step(&self.config, batch, self.total as f64, noise)
    }
}

/// Offline release at the first step fixes the subtree. Every later step
/// feeds each leaf's batch count to its own counter at the full effective
/// budget; the leaf's count is the initial release plus the counter output.
#[derive(Clone, Debug)]
pub struct Baseline3 {
    config: EngineConfig,
    time: u64,
    frozen: Option<(Subtree, TreeFunction)>,
    counters: HashMap<NodeId, Counter>,
}

impl Baseline3 {
    pub fn new(config: EngineConfig) -> Result<Self> {
        config.validate()?;
        Ok(Baseline3 {
            config,
            time: 0,
            frozen: None,
            counters: HashMap::new(),
        })
    }

    /// Subtree fixed at the first step.
    pub fn subtree(&self) -> Option<&Subtree> {
        self.frozen.as_ref().map(|(s, _)| s)
    }
}

impl Engine for Baseline3 {
    fn tree(&self) -> &PartitionTree {
        &self.config.tree
    }

    fn time(&self) -> u64 {
        self.time
    }

    fn step(&mut self, batch: &Batch, noise: &mut dyn NoiseSource) -> Result<StepOutput> {
        expect_time(self.time, batch)?;
        self.time = batch.time;
        let Some((subtree, base)) = &self.frozen else {
            let out = offline_release(&self.config, batch_items(batch), batch.time, noise)?;
            for v in out.subtree.leaves() {
                let counter = Counter::new(self.config.counter_kind, self.config.effective_epsilon())?;
                self.counters.insert(v, counter);
            }
            self.frozen = Some((out.subtree.clone(), out.leaf_counts.clone()));
            return Ok(out);
        };
        let tree = &self.config.tree;
        let mut part = EventPartition::new(tree, batch_items(batch));
        let mut leaf_counts = TreeFunction::new();
        for v in subtree.leaves() {
            let counter = self.counters.get_mut(&v).expect("counter per frozen leaf");
            let out = counter.feed(part.count(v), noise)?;
            leaf_counts.set(v, base.get(v) + out);
        }
        let node_counts = subtree_node_counts(tree, subtree, &leaf_counts);
        Ok(StepOutput {
            time: batch.time,
            subtree: subtree.clone(),
            leaf_counts,
            node_counts,
            synthetic_points: Vec::new(),
        })
    }
}
