//! Empirical error of the three continual counters against their analytic
//! standard deviations.

use phdstream::counters::{counter_error_std, Counter, CounterKind};
use phdstream::noise::SeededNoise;

fn main() -> phdstream::Result<()> {
    let epsilon = 1.0;
    let horizon = 256;
    let runs = 2000;
    let kinds = [CounterKind::Simple, CounterKind::Block(16), CounterKind::BinaryTree(256)];
    println!("{:<16} {:>6} {:>10} {:>10}", "counter", "t", "rms", "analytic");
    for kind in kinds {
        let checkpoints = [16u64, 64, 256];
        let mut sq = [0.0; 3];
        for seed in 0..runs {
            let mut c = Counter::new(kind, epsilon)?;
            let mut noise = SeededNoise::new(seed);
            for t in 1..=horizon {
                let out = c.feed(1.0, &mut noise)?;
                if let Some(i) = checkpoints.iter().position(|&s| s == t) {
                    sq[i] += (out - t as f64).powi(2);
                }
            }
        }
        for (i, &t) in checkpoints.iter().enumerate() {
            let rms = (sq[i] / runs as f64).sqrt();
            println!(
                "{:<16} {:>6} {:>10.2} {:>10.2}",
                kind.to_string(),
                t,
                rms,
                counter_error_std(kind, epsilon, t)
            );
        }
    }
    Ok(())
}
