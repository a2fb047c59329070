//! Selective counting: a selector routes each input to one of several
//! counters, and each counter only advances when it is chosen.

use phdstream::counters::{Counter, CounterKind, SelectiveCounter};
use phdstream::noise::SeededNoise;

fn main() -> phdstream::Result<()> {
    let counters = (0..3).map(|_| Counter::new(CounterKind::Block(4), 1.0)).collect::<Result<Vec<_>, _>>()?;
    // Route by the size of the input: small, medium, large.
    let selector = |x: &f64, _history: &[(usize, f64)]| match *x {
        x if x < 3.0 => 0,
        x if x < 6.0 => 1,
        _ => 2,
    };
    let mut sc = SelectiveCounter::new(counters, selector);
    let mut noise = SeededNoise::new(5);
    for x in [1.0, 7.0, 4.0, 2.0, 8.0, 5.0, 1.0, 9.0, 2.0] {
        let (l, value) = sc.step(&x, &mut noise)?;
        println!("t={} x={x} -> counter {l}: {value:.2}", sc.time());
    }
    for l in 0..3 {
        println!("counter {l} activated at {:?}", sc.activations(l));
    }
    Ok(())
}
