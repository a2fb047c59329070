//! Feed a small add/delete stream through the synthesizer and print the
//! synthetic point count next to the true count at every step.

use phdstream::hierarchy::PartitionTree;
use phdstream::stream::{cumulative_snapshot, Batch, DiffStream, Domain, Event, Point};
use phdstream::synth::{run_stream, EngineConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() -> phdstream::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut alive = Vec::new();
    let mut batches = Vec::new();
    for t in 1..=12 {
        let mut events = Vec::new();
        // Delete a third of the points after step 6.
        if t > 6 {
            for _ in 0..alive.len() / 3 {
                let i = rng.random_range(0..alive.len());
                events.push(Event::delete(alive.swap_remove(i)));
            }
        }
        for _ in 0..400 {
            let p = Point::xy(rng.random::<f64>().powi(2), rng.random());
            alive.push(p.clone());
            events.push(Event::add(p));
        }
        batches.push(Batch::new(t, events));
    }
    let stream = DiffStream::new(Domain::unit(2), batches)?;

    let tree = PartitionTree::new(Domain::unit(2), 2, 12)?;
    let mut config = EngineConfig::new(tree, 1.0);
    config.seed = 7;
    let outputs = run_stream(&config, &stream)?;

    println!("t  true  synthetic  leaves");
    for out in &outputs {
        let truth = cumulative_snapshot(&stream, out.time)?.total();
        println!(
            "{:<2} {:<5} {:<10} {}",
            out.time,
            truth,
            out.synthetic_points.len(),
            out.subtree.leaves().count()
        );
    }
    Ok(())
}
