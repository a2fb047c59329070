//! Record the noise of the efficient engine and replay it through the
//! naive one: both release the same subtree and counts.

use phdstream::hierarchy::PartitionTree;
use phdstream::noise::{Recorder, Replay, SeededNoise};
use phdstream::stream::{Batch, DiffStream, Domain, Event, Point};
use phdstream::synth::{EfficientEngine, Engine, EngineConfig, NaiveEngine};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() -> phdstream::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let batches = (1..=10)
        .map(|t| Batch::new(t, (0..200).map(|_| Event::add(Point::xy(rng.random(), rng.random()))).collect()))
        .collect();
    let stream = DiffStream::new(Domain::unit(2), batches)?;
    let tree = PartitionTree::new(Domain::unit(2), 2, 8)?;
    let config = EngineConfig::new(tree, 1.0);

    let mut fast = EfficientEngine::new(config.clone())?;
    let mut recorder = Recorder::new(SeededNoise::new(3));
    let fast_out: Vec<_> = stream.steps().map(|b| fast.step(&b, &mut recorder)).collect::<Result<_, _>>()?;
    let draws = recorder.into_draws();

    let mut naive = NaiveEngine::new(config)?;
    let mut replay = Replay::new(&draws);
    for (b, f) in stream.steps().zip(&fast_out) {
        let n = naive.step(&b, &mut replay)?;
        println!(
            "t={:<2} nodes {:<4} same subtree {} max count difference {:.1e}",
            b.time,
            f.subtree.len(),
            f.subtree == n.subtree,
            f.node_counts.max_abs_diff(&n.node_counts)
        );
    }
    println!("{} draws replayed", draws.len());
    Ok(())
}
