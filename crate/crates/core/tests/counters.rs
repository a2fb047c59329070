use phdstream::counters::{Counter, CounterKind, SelectiveCounter};
use phdstream::noise::SeededNoise;

/// Two-sample Kolmogorov-Smirnov statistic.
fn ks_statistic(mut a: Vec<f64>, mut b: Vec<f64>) -> f64 {
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (n, m) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j, mut d) = (0, 0, 0.0f64);
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / n - j as f64 / m).abs());
    }
    d
}

/// Critical value at the 1% level.
fn ks_critical(n: usize, m: usize) -> f64 {
    let (n, m) = (n as f64, m as f64);
    1.628 * ((n + m) / (n * m)).sqrt()
}

/// Error added at each step: output increment minus input.
fn step_errors(kind: CounterKind, epsilon: f64, seed: u64, steps: u64) -> Vec<f64> {
    let mut c = Counter::new(kind, epsilon).unwrap();
    let mut noise = SeededNoise::new(seed);
    let mut prev = 0.0;
    (0..steps)
        .map(|i| {
            let x = (i % 4) as f64;
            let out = c.feed(x, &mut noise).unwrap();
            let e = out - prev - x;
            prev = out;
            e
        })
        .collect()
}

#[test]
fn unit_blocks_match_simple_at_double_scale() {
    let eps = 1.5;
    let block = step_errors(CounterKind::Block(1), eps, 1, 20_000);
    let simple = step_errors(CounterKind::Simple, eps / 2.0, 2, 20_000);
    let d = ks_statistic(block, simple);
    assert!(d < ks_critical(20_000, 20_000), "D = {d}");
}

#[test]
fn ks_detects_a_scale_change() {
    let a = step_errors(CounterKind::Simple, 1.0, 3, 20_000);
    let b = step_errors(CounterKind::Simple, 0.8, 4, 20_000);
    assert!(ks_statistic(a, b) > ks_critical(20_000, 20_000));
}

#[test]
fn selected_subsequences_behave_like_standalone_counters() {
    // Data-independent selector: counter 0 on even steps, 1 on odd steps.
    let kind = CounterKind::Block(3);
    let (runs, local_t) = (5000, 7);
    let mut selected = Vec::with_capacity(runs);
    let mut standalone = Vec::with_capacity(runs);
    for seed in 0..runs as u64 {
        let counters = vec![Counter::new(kind, 1.0).unwrap(), Counter::new(kind, 1.0).unwrap()];
        let mut sc = SelectiveCounter::new(counters, |_: &f64, h: &[(usize, f64)]| h.len() % 2);
        let mut noise = SeededNoise::new(seed);
        let mut truth = 0.0;
        for t in 0..2 * local_t {
            let x = (t % 5) as f64;
            let (l, value) = sc.step(&x, &mut noise).unwrap();
            if l == 0 {
                truth += x;
                if sc.counters()[0].time() == local_t {
                    selected.push(value - truth);
                }
            }
        }
        let mut c = Counter::new(kind, 1.0).unwrap();
        let mut noise = SeededNoise::new(1_000_000 + seed);
        let mut truth = 0.0;
        let mut last = 0.0;
        for t in 0..local_t {
            let x = ((2 * t) % 5) as f64;
            truth += x;
            last = c.feed(x, &mut noise).unwrap();
        }
        standalone.push(last - truth);
    }
    assert_eq!(selected.len(), runs);
    let d = ks_statistic(selected, standalone);
    assert!(d < ks_critical(runs, runs), "D = {d}");
}
