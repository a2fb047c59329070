//! Generate the three query classes and score a noisy copy of a point set.

use phdstream::eval::{gen_queries, relative_error, QueryClass, RangeCounter, RangeIndex};
use phdstream::stream::{Domain, Point};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() -> phdstream::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let truth: Vec<Point> = (0..20_000).map(|_| Point::xy(rng.random(), rng.random::<f64>().sqrt())).collect();
    let jittered: Vec<Point> = truth
        .iter()
        .map(|p| {
            let x = (p[0] + 0.01 * (rng.random::<f64>() - 0.5)).clamp(0.0, 1.0);
            Point::xy(x, p[1])
        })
        .collect();
    let index = RangeIndex::from_points(&jittered);

    for class in QueryClass::ALL {
        let queries = gen_queries(&Domain::unit(2), class, &mut ChaCha8Rng::seed_from_u64(class as u64))?;
        let first = &queries.queries[0];
        let err = relative_error(&queries, &truth[..], &index, truth.len() as f64)?;
        println!(
            "{class}: {} queries, first has area {:.5} and holds {} points; error {err:.4}",
            queries.queries.len(),
            first.area(),
            truth[..].range_count(first)
        );
    }
    Ok(())
}
