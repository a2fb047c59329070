//! The streaming engine next to the three baselines on a stream whose mass
//! moves from one half of the square to the other.

use phdstream::baselines::{Baseline1, Baseline2, Baseline3};
use phdstream::eval::{gen_queries, relative_error, QueryClass};
use phdstream::hierarchy::PartitionTree;
use phdstream::stream::{apply_initialization, cumulative_snapshot, Batch, DiffStream, Domain, Event, Point};
use phdstream::synth::{EfficientEngine, Engine, EngineConfig, Synthesizer};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn drifting_stream(seed: u64) -> phdstream::Result<DiffStream> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut left = Vec::new();
    let mut batches = Vec::new();
    for t in 1..=30 {
        let mut events = Vec::new();
        if t <= 10 {
            for _ in 0..300 {
                let p = Point::xy(0.5 * rng.random::<f64>(), rng.random());
                left.push(p.clone());
                events.push(Event::add(p));
            }
        } else {
            for _ in 0..150.min(left.len()) {
                let i = rng.random_range(0..left.len());
                events.push(Event::delete(left.swap_remove(i)));
                events.push(Event::add(Point::xy(0.5 + 0.5 * rng.random::<f64>(), rng.random())));
            }
        }
        batches.push(Batch::new(t, events));
    }
    DiffStream::new(Domain::unit(2), batches)
}

fn run<E: Engine>(engine: E, stream: &DiffStream, seed: u64) -> phdstream::Result<Vec<Vec<Point>>> {
    let mut synth = Synthesizer::new(engine, seed);
    stream.steps().map(|b| synth.step(&b).map(|o| o.synthetic_points)).collect()
}

fn main() -> phdstream::Result<()> {
    let stream = drifting_stream(2)?;
    let t0 = 3;
    let init = apply_initialization(&stream, t0)?;
    let tree = PartitionTree::new(Domain::unit(2), 2, 12)?;
    let mut config = EngineConfig::new(tree, 1.0);
    config.init_time = t0;
    let queries = gen_queries(&Domain::unit(2), QueryClass::Medium, &mut ChaCha8Rng::seed_from_u64(0))?;

    let runs = [
        ("phdstream", run(EfficientEngine::new(config.clone())?, &init, 1)?),
        ("baseline1", run(Baseline1::new(config.clone())?, &init, 1)?),
        ("baseline2", run(Baseline2::new(config.clone())?, &init, 1)?),
        ("baseline3", run(Baseline3::new(config.clone())?, &init, 1)?),
    ];
    println!("medium-query relative error by time");
    print!("{:>4}", "t");
    for (name, _) in &runs {
        print!(" {name:>10}");
    }
    println!();
    for (step, batch) in init.steps().enumerate() {
        let t = batch.time + t0 - 1;
        if t % 5 != 0 {
            continue;
        }
        let snapshot = cumulative_snapshot(&stream, t)?;
        let truth: Vec<(Point, f64)> = snapshot.iter().map(|(p, m)| (p.clone(), m as f64)).collect();
        print!("{t:>4}");
        for (_, points) in &runs {
            let e = relative_error(&queries, &truth[..], &points[step][..], snapshot.total() as f64)?;
            print!(" {e:>10.3}");
        }
        println!();
    }
    Ok(())
}
