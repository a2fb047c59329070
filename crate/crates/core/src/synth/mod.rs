//! Streaming synthesizers.
//!
//! Each time step runs PrivTree on the previously released synthetic counts
//! plus the new batch (budget ε/2), then privately counts the batch on the
//! leaves of the selected subtree (budget ε/2) and folds those counts into
//! a consistent synthetic tree function. Three interchangeable engines
//! implement this:
//!
//! * [`NaiveEngine::new`]: direct Laplace counting, synthetic counts kept as
//!   the consistent extension of everything released so far.
//! * [`NaiveEngine::with_counters`]: the same, with one continual counter per
//!   node whose output increments replace the direct noise.
//! * [`EfficientEngine`]: touches only nodes of the current subtree and keeps
//!   the extension implicit in three sparse maps (ancestor, own, descendant).
//!
//! Given the same noise draws per channel all three release the same counts.

mod efficient;
mod naive;
pub(crate) mod partition;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;

use crate::counters::CounterKind;
use crate::error::{Error, Result};
use crate::hierarchy::{PartitionTree, TreeFunction};
use crate::noise::{NoiseSource, SeededNoise};
use crate::privtree::{PrivTreeParams, Subtree};
use crate::stream::{apply_initialization, Batch, DiffStream, Point};

pub use efficient::{ConsistencyState, EfficientEngine};
pub use naive::NaiveEngine;

#[derive(Clone, Debug, PartialEq)]
pub struct EngineConfig {
    /// Total per-step budget.
    pub epsilon: f64,
    pub theta: f64,
    pub tree: PartitionTree,
    pub counter_kind: CounterKind,
    /// Events a single individual may contribute; the engine runs at ε/k.
    pub sensitivity: u32,
    pub seed: u64,
    /// Events up to this time are merged into the first processed batch.
    pub init_time: u64,
}

impl EngineConfig {
    pub fn new(tree: PartitionTree, epsilon: f64) -> Self {
        EngineConfig {
            epsilon,
            theta: 0.0,
            tree,
            counter_kind: CounterKind::Simple,
            sensitivity: 1,
            seed: 0,
            init_time: 1,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "epsilon must be positive, got {}",
                self.epsilon
            )));
        }
        if self.sensitivity == 0 {
            return Err(Error::InvalidParameter("sensitivity must be >= 1".into()));
        }
        if self.init_time == 0 {
            return Err(Error::InvalidParameter("init_time must be >= 1".into()));
        }
        self.counter_kind.validate()?;
        self.tree_params().map(|_| ())
    }

    pub fn effective_epsilon(&self) -> f64 {
        self.epsilon / self.sensitivity as f64
    }

    /// PrivTree parameters at half the effective budget.
    pub fn tree_params(&self) -> Result<PrivTreeParams> {
        PrivTreeParams::new(self.effective_epsilon() / 2.0, self.theta, self.tree.fanout())
    }

    /// Budget of each per-node counter.
    pub fn count_epsilon(&self) -> f64 {
        self.effective_epsilon() / 2.0
    }

    /// Laplace scale of direct leaf counting, `2/ε`.
    pub fn count_scale(&self) -> f64 {
        1.0 / self.count_epsilon()
    }
}

/// One released time step.
#[derive(Clone, Debug, PartialEq)]
pub struct StepOutput {
    pub time: u64,
    pub subtree: Subtree,
    /// Synthetic counts on the leaves of `subtree`.
    pub leaf_counts: TreeFunction,
    /// Synthetic counts on every node of `subtree`.
    pub node_counts: TreeFunction,
    pub synthetic_points: Vec<Point>,
}

impl StepOutput {
    pub fn total_leaf_count(&self) -> f64 {
        self.leaf_counts.sum()
    }
}

/// A per-step release mechanism over the partition tree.
pub trait Engine {
    fn tree(&self) -> &PartitionTree;

    /// Time of the last processed batch.
    fn time(&self) -> u64;

    /// Processes the batch for time `self.time() + 1`. Points are not
    /// sampled; see [`Synthesizer`].
    fn step(&mut self, batch: &Batch, noise: &mut dyn NoiseSource) -> Result<StepOutput>;
}

impl<E: Engine + ?Sized> Engine for Box<E> {
    fn tree(&self) -> &PartitionTree {
        (**self).tree()
    }

    fn time(&self) -> u64 {
        (**self).time()
    }

    fn step(&mut self, batch: &Batch, noise: &mut dyn NoiseSource) -> Result<StepOutput> {
        (**self).step(batch, noise)
    }
}

pub(crate) fn expect_time(current: u64, batch: &Batch) -> Result<()> {
    if batch.time != current + 1 {
        return Err(Error::TimeDiscontinuity {
            expected: current + 1,
            got: batch.time,
        });
    }
    Ok(())
}

/// Draws `max(0, ⌈G(v)⌉)` uniform points inside every leaf `v`.
pub fn sample_points<R: Rng + ?Sized>(
    leaf_counts: &TreeFunction,
    tree: &PartitionTree,
    rng: &mut R,
) -> Result<Vec<Point>> {
    let mut points = Vec::new();
    for (v, g) in leaf_counts.iter() {
        if !(g > 0.0) {
            continue;
        }
        let region = tree.region(v)?;
        for _ in 0..g.ceil() as u64 {
            let coords: Vec<f64> = region
                .intervals()
                .iter()
                .map(|iv| loop {
                    let x = iv.lo + rng.random::<f64>() * iv.len();
                    if iv.contains(x) {
                        break x;
                    }
                })
                .collect();
            points.push(Point::new(&coords));
        }
    }
    Ok(points)
}

/// Fills internal nodes of `subtree` with the sum of their children.
pub fn subtree_node_counts(
    tree: &PartitionTree,
    subtree: &Subtree,
    leaf_counts: &TreeFunction,
) -> TreeFunction {
    let mut out = TreeFunction::new();
    for &v in subtree.nodes().iter().rev() {
        let value = if subtree.is_leaf(v) {
            leaf_counts.get(v)
        } else {
            tree.children(v).map(|c| out.get(c)).sum()
        };
        out.set(v, value);
    }
    out
}

/// Rng for point sampling, independent of the noise stream of the same seed.
pub fn sampling_rng(seed: u64) -> ChaCha12Rng {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    rng.set_stream(1);
    rng
}

/// Drives an engine with its own seeded noise and samples points per step.
pub struct Synthesizer<E> {
    engine: E,
    noise: SeededNoise,
    sampler: ChaCha12Rng,
}

impl<E: Engine> Synthesizer<E> {
    pub fn new(engine: E, seed: u64) -> Self {
        Synthesizer {
            engine,
            noise: SeededNoise::new(seed),
            sampler: sampling_rng(seed),
        }
    }

    pub fn engine(&self) -> &E {
        &self.engine
    }

    pub fn step(&mut self, batch: &Batch) -> Result<StepOutput> {
        let mut out = self.engine.step(batch, &mut self.noise)?;
        out.synthetic_points = sample_points(&out.leaf_counts, self.engine.tree(), &mut self.sampler)?;
        Ok(out)
    }
}

/// Runs the efficient engine over the whole stream after merging the
/// initialization prefix; one output per time step.
pub fn run_stream(config: &EngineConfig, stream: &DiffStream) -> Result<Vec<StepOutput>> {
    config.validate()?;
    let stream = apply_initialization(stream, config.init_time)?;
    let mut synth = Synthesizer::new(EfficientEngine::new(config.clone())?, config.seed);
    stream.steps().map(|b| synth.step(&b)).collect()
}
