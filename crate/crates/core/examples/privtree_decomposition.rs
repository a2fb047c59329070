//! Private decomposition of a static point set: noise-free and noisy
//! subtrees side by side.

use phdstream::hierarchy::{contract, PartitionTree};
use phdstream::noise::{SeededNoise, ZeroNoise};
use phdstream::privtree::{priv_tree, PrivTreeParams};
use phdstream::stream::{Batch, Domain, Event, Point};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() -> phdstream::Result<()> {
    let tree = PartitionTree::new(Domain::unit(2), 4, 8)?;
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    // A dense cluster in one corner and a sparse background.
    let events: Vec<Event> = (0..5000)
        .map(|i| {
            let p = if i % 5 == 0 {
                Point::xy(rng.random(), rng.random())
            } else {
                Point::xy(0.1 + 0.1 * rng.random::<f64>(), 0.8 + 0.1 * rng.random::<f64>())
            };
            Event::add(p)
        })
        .collect();
    let batch = Batch::new(1, events);
    let count = |v| contract(&tree, &batch, [v]).map(|f| f.get(v)).unwrap_or(0.0);

    for epsilon in [0.1, 1.0] {
        let params = PrivTreeParams::new(epsilon, 0.0, tree.fanout())?;
        let exact = priv_tree(&tree, &params, count, &mut ZeroNoise);
        let noisy = priv_tree(&tree, &params, count, &mut SeededNoise::new(11));
        println!(
            "ε={epsilon}: λ={:.2} δ={:.2}; noise-free {} nodes (depth {}), noisy {} nodes (depth {})",
            params.lambda(),
            params.delta(),
            exact.len(),
            exact.depth(),
            noisy.len(),
            noisy.depth()
        );
    }
    Ok(())
}
