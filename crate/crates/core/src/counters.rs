//! Continual-observation counters and selective counting.
//!
//! A counter consumes one real value per activation and releases a private
//! estimate of the running sum. Three classic constructions are provided:
//!
//! * `Simple`: fresh `Lap(1/ε)` on every increment; error grows as `√t`.
//! * `Block(B)`: within-block increments at `Lap(2/ε)`, and one `Lap(2/ε)`
//!   noise per completed block carried forward.
//! * `BinaryTree(T)`: dyadic partial sums, each noised at `Lap(log₂T/ε)`;
//!   needs the horizon `T` up front.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::noise::{Channel, NoiseSource};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum CounterKind {
    Simple,
    Block(u64),
    BinaryTree(u64),
}

impl Default for CounterKind {
    fn default() -> Self {
        CounterKind::Simple
    }
}

impl CounterKind {
    pub fn validate(self) -> Result<Self> {
        match self {
            CounterKind::Block(0) => Err(Error::InvalidParameter("block size must be >= 1".into())),
            CounterKind::BinaryTree(0) => {
                Err(Error::InvalidParameter("binary-tree horizon must be >= 1".into()))
            }
            k => Ok(k),
        }
    }
}

impl fmt::Display for CounterKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CounterKind::Simple => write!(f, "simple"),
            CounterKind::Block(b) => write!(f, "block:{b}"),
            CounterKind::BinaryTree(t) => write!(f, "binarytree:{t}"),
        }
    }
}

impl FromStr for CounterKind {
    type Err = Error;

    /// Parses `simple`, `block:B` or `binarytree:T`.
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Config(format!("unknown counter `{s}` (expected simple, block:B or binarytree:T)"));
        let (name, arg) = match s.split_once(':') {
            Some((n, a)) => (n, Some(a)),
            None => (s, None),
        };
        let num = |a: Option<&str>| -> Result<u64> { a.ok_or_else(bad)?.trim().parse().map_err(|_| bad()) };
        let kind = match (name.trim().to_ascii_lowercase().as_str(), arg) {
            ("simple", None) => CounterKind::Simple,
            ("block", a) => CounterKind::Block(num(a)?),
            ("binarytree", a) => CounterKind::BinaryTree(num(a)?),
            _ => return Err(bad()),
        };
        kind.validate().map_err(|e| Error::Config(e.to_string()))
    }
}

#[derive(Clone, Debug, PartialEq)]
enum State {
    Simple {
        total: f64,
    },
    Block {
        within: f64,
        running: f64,
        last_block: f64,
    },
    BinaryTree {
        partial: Vec<f64>,
        noisy: Vec<f64>,
    },
}

/// An ε-DP continual counter.
#[derive(Clone, Debug, PartialEq)]
pub struct Counter {
    kind: CounterKind,
    epsilon: f64,
    time: u64,
    output: f64,
    state: State,
}

impl Counter {
    pub fn new(kind: CounterKind, epsilon: f64) -> Result<Self> {
        let kind = kind.validate()?;
        if !(epsilon > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "counter epsilon must be positive, got {epsilon}"
            )));
        }
        let state = match kind {
            CounterKind::Simple => State::Simple { total: 0.0 },
            CounterKind::Block(_) => State::Block {
                within: 0.0,
                running: 0.0,
                last_block: 0.0,
            },
            CounterKind::BinaryTree(horizon) => {
                let bits = 64 - horizon.leading_zeros() as usize;
                State::BinaryTree {
                    partial: vec![0.0; bits],
                    noisy: vec![0.0; bits],
                }
            }
        };
        Ok(Counter {
            kind,
            epsilon,
            time: 0,
            output: 0.0,
            state,
        })
    }

    pub fn kind(&self) -> CounterKind {
        self.kind
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    /// Number of values fed so far.
    pub fn time(&self) -> u64 {
        self.time
    }

    /// Latest released estimate (0 before the first feed).
    pub fn output(&self) -> f64 {
        self.output
    }

    /// Laplace scale used by every draw of this counter.
    pub fn noise_scale(&self) -> f64 {
        match self.kind {
            CounterKind::Simple => 1.0 / self.epsilon,
            CounterKind::Block(_) => 2.0 / self.epsilon,
            CounterKind::BinaryTree(horizon) => (horizon as f64).log2() / self.epsilon,
        }
    }

    /// Advances time by one with increment `x` and returns the new estimate.
    pub fn feed<N: NoiseSource + ?Sized>(&mut self, x: f64, noise: &mut N) -> Result<f64> {
        if let CounterKind::BinaryTree(horizon) = self.kind {
            if self.time >= horizon {
                return Err(Error::HorizonExhausted { horizon });
            }
        }
        let scale = self.noise_scale();
        let t = self.time + 1;
        let output = match (&mut self.state, self.kind) {
            (State::Simple { total }, _) => {
                *total += x + noise.laplace(Channel::Count, scale);
                *total
            }
            (
                State::Block {
                    within,
                    running,
                    last_block,
                },
                CounterKind::Block(size),
            ) => {
                *running += x;
                if t % size == 0 {
                    *within = 0.0;
                    *running += noise.laplace(Channel::Count, scale);
                    *last_block = *running;
                } else {
                    *within += x + noise.laplace(Channel::Count, scale);
                }
                *last_block + *within
            }
            (State::BinaryTree { partial, noisy }, _) => {
                let j = t.trailing_zeros() as usize;
                partial[j] = partial[..j].iter().sum::<f64>() + x;
                noisy[j] = partial[j] + noise.laplace(Channel::Count, scale);
                for i in 0..j {
                    partial[i] = 0.0;
                    noisy[i] = 0.0;
                }
                (0..partial.len())
                    .filter(|&i| t >> i & 1 == 1)
                    .map(|i| noisy[i])
                    .sum()
            }
            (State::Block { .. }, _) => unreachable!("block state with non-block kind"),
        };
        self.time = t;
        self.output = output;
        Ok(output)
    }
}

/// Analytic standard deviation of a counter's error after `t` feeds.
///
/// Simple: `√(2t)/ε`. Block(B) with `t = kB + r`: `√(8(k + r))/ε`.
/// BinaryTree(T): `√(2·popcount(t))·log₂T/ε`.
pub fn counter_error_std(kind: CounterKind, epsilon: f64, t: u64) -> f64 {
    match kind {
        CounterKind::Simple => (2.0 * t as f64).sqrt() / epsilon,
        CounterKind::Block(size) => {
            let (k, r) = (t / size, t % size);
            (8.0 * (k + r) as f64).sqrt() / epsilon
        }
        CounterKind::BinaryTree(horizon) => {
            (2.0 * t.count_ones() as f64).sqrt() * (horizon as f64).log2() / epsilon
        }
    }
}

/// Something that can be fed one value per activation.
pub trait ContinualCounter {
    type Value;

    fn feed_value(&mut self, x: &Self::Value, noise: &mut dyn NoiseSource) -> Result<Self::Value>;

    fn time(&self) -> u64;
}

impl ContinualCounter for Counter {
    type Value = f64;

    fn feed_value(&mut self, x: &f64, noise: &mut dyn NoiseSource) -> Result<f64> {
        self.feed(*x, noise)
    }

    fn time(&self) -> u64 {
        self.time
    }
}

/// Independent counters fed componentwise.
#[derive(Clone, Debug, PartialEq)]
pub struct MultiCounter {
    counters: Vec<Counter>,
}

impl MultiCounter {
    pub fn new(counters: Vec<Counter>) -> Self {
        MultiCounter { counters }
    }

    pub fn uniform(dim: usize, kind: CounterKind, epsilon: f64) -> Result<Self> {
        let counters = (0..dim)
            .map(|_| Counter::new(kind, epsilon))
            .collect::<Result<_>>()?;
        Ok(MultiCounter { counters })
    }

    pub fn components(&self) -> &[Counter] {
        &self.counters
    }

    pub fn dim(&self) -> usize {
        self.counters.len()
    }

    pub fn feed<N: NoiseSource + ?Sized>(&mut self, xs: &[f64], noise: &mut N) -> Result<Vec<f64>> {
        if xs.len() != self.counters.len() {
            return Err(Error::LengthMismatch {
                expected: self.counters.len(),
                got: xs.len(),
            });
        }
        self.counters
            .iter_mut()
            .zip(xs)
            .map(|(c, &x)| c.feed(x, noise))
            .collect()
    }
}

impl ContinualCounter for MultiCounter {
    type Value = Vec<f64>;

    fn feed_value(&mut self, x: &Vec<f64>, noise: &mut dyn NoiseSource) -> Result<Vec<f64>> {
        self.feed(x, noise)
    }

    fn time(&self) -> u64 {
        self.counters.first().map_or(0, |c| c.time)
    }
}

/// Chooses which counter to activate at each step, given the current input
/// and all previous `(index, output)` releases.
pub trait Selector<V> {
    fn select(&mut self, input: &V, history: &[(usize, V)], noise: &mut dyn NoiseSource) -> usize;
}

impl<V, F> Selector<V> for F
where
    F: FnMut(&V, &[(usize, V)]) -> usize,
{
    fn select(&mut self, input: &V, history: &[(usize, V)], _noise: &mut dyn NoiseSource) -> usize {
        self(input, history)
    }
}

/// Online selective counting: exactly one counter (chosen by the selector)
/// consumes each input. Indices are 0-based.
pub struct SelectiveCounter<C: ContinualCounter, S> {
    counters: Vec<C>,
    selector: S,
    activations: Vec<Vec<u64>>,
    history: Vec<(usize, C::Value)>,
}

impl<C, S> SelectiveCounter<C, S>
where
    C: ContinualCounter,
    C::Value: Clone,
    S: Selector<C::Value>,
{
    pub fn new(counters: Vec<C>, selector: S) -> Self {
        let k = counters.len();
        SelectiveCounter {
            counters,
            selector,
            activations: vec![Vec::new(); k],
            history: Vec::new(),
        }
    }

    pub fn time(&self) -> u64 {
        self.history.len() as u64
    }

    pub fn counters(&self) -> &[C] {
        &self.counters
    }

    /// Times at which counter `l` was selected.
    pub fn activations(&self, l: usize) -> &[u64] {
        &self.activations[l]
    }

    pub fn history(&self) -> &[(usize, C::Value)] {
        &self.history
    }

    pub fn step(&mut self, x: &C::Value, noise: &mut dyn NoiseSource) -> Result<(usize, C::Value)> {
        let l = self.selector.select(x, &self.history, noise);
        if l >= self.counters.len() {
            return Err(Error::SelectorOutOfRange {
                index: l,
                count: self.counters.len(),
            });
        }
        let value = self.counters[l].feed_value(x, noise)?;
        let t = self.time() + 1;
        self.activations[l].push(t);
        self.history.push((l, value.clone()));
        Ok((l, value))
    }
}
