#![allow(dead_code)]

use std::collections::BTreeSet;

use phdstream::hierarchy::{NodeId, PartitionTree};
use phdstream::privtree::PrivTreeParams;
use phdstream::stream::{Batch, DiffStream, Domain, Event, Point};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Mix of clustered, uniform and grid-snapped coordinates so that split
/// boundaries are hit regularly.
pub fn random_point<R: Rng>(rng: &mut R) -> Point {
    let coord = |rng: &mut R| match rng.random_range(0..4) {
        0 => rng.random_range(0..=64) as f64 / 64.0,
        1 => (0.3 + 0.05 * (rng.random::<f64>() - 0.5)).clamp(0.0, 1.0),
        _ => rng.random(),
    };
    let x = coord(rng);
    let y = coord(rng);
    Point::xy(x, y)
}

/// Prefix-positive stream over the unit square with up to `max_events`
/// events per step; deletions only remove currently present points.
pub fn random_stream(seed: u64, horizon: u64, max_events: usize) -> DiffStream {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut alive: Vec<Point> = Vec::new();
    let mut batches = Vec::new();
    for t in 1..=horizon {
        if rng.random_bool(0.1) {
            continue;
        }
        let n = rng.random_range(0..=max_events);
        let n_del = if alive.is_empty() { 0 } else { rng.random_range(0..=n.min(alive.len()) / 2) };
        let mut events = Vec::with_capacity(n);
        for _ in 0..n_del {
            let i = rng.random_range(0..alive.len());
            events.push(Event::delete(alive.swap_remove(i)));
        }
        for _ in n_del..n {
            let p = random_point(&mut rng);
            alive.push(p.clone());
            events.push(Event::add(p));
        }
        batches.push(Batch::new(t, events));
    }
    DiffStream::new(Domain::unit(2), batches).unwrap()
}

/// Recursive noise-free PrivTree: a node is expanded iff its biased count
/// exceeds θ and it is above the depth cap.
pub fn reference_privtree(
    tree: &PartitionTree,
    params: &PrivTreeParams,
    count: &mut dyn FnMut(NodeId) -> f64,
) -> BTreeSet<NodeId> {
    fn visit(
        tree: &PartitionTree,
        params: &PrivTreeParams,
        count: &mut dyn FnMut(NodeId) -> f64,
        v: NodeId,
        out: &mut BTreeSet<NodeId>,
    ) {
        out.insert(v);
        let b = (count(v) - v.depth() as f64 * params.delta()).max(params.theta() - params.delta());
        if b > params.theta() && v.depth() < tree.max_depth() {
            for c in tree.children(v).collect::<Vec<_>>() {
                visit(tree, params, count, c, out);
            }
        }
    }
    let mut out = BTreeSet::new();
    visit(tree, params, count, tree.root(), &mut out);
    out
}

/// Spearman rank correlation for samples without ties.
pub fn spearman(xs: &[f64], ys: &[f64]) -> f64 {
    let rank = |v: &[f64]| {
        let mut idx: Vec<usize> = (0..v.len()).collect();
        idx.sort_by(|&a, &b| v[a].total_cmp(&v[b]));
        let mut r = vec![0.0; v.len()];
        for (k, &i) in idx.iter().enumerate() {
            r[i] = k as f64;
        }
        r
    };
    let (rx, ry) = (rank(xs), rank(ys));
    let n = xs.len() as f64;
    let d2: f64 = rx.iter().zip(&ry).map(|(a, b)| (a - b).powi(2)).sum();
    1.0 - 6.0 * d2 / (n * (n * n - 1.0))
}
