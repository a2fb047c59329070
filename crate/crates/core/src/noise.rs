//! Laplace noise sources.
//!
//! Every mechanism draws through [`NoiseSource`] and tags each draw with the
//! [`Channel`] it serves. Besides the seeded source used in production runs
//! there is a zero source for noise-free traces, a [`Recorder`] that logs
//! every draw (used to audit scales and draw counts), and a [`Replay`] that
//! feeds a recorded log back per channel so that two different engines can
//! be run on identical randomness.

use std::collections::VecDeque;

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha12Rng;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Channel {
    /// Noise on biased counts that decides the tree shape.
    Selection,
    /// Noise on released counts.
    Count,
}

pub trait NoiseSource {
    /// One draw from Laplace(0, `scale`).
    fn laplace(&mut self, channel: Channel, scale: f64) -> f64;
}

impl<N: NoiseSource + ?Sized> NoiseSource for &mut N {
    fn laplace(&mut self, channel: Channel, scale: f64) -> f64 {
        (**self).laplace(channel, scale)
    }
}

/// Inverse-CDF Laplace sample from one 64-bit uniform.
pub fn sample_laplace<R: RngCore + ?Sized>(rng: &mut R, scale: f64) -> f64 {
    // 53 random bits mapped to the open interval (0, 1).
    let u = ((rng.next_u64() >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64);
    if u < 0.5 {
        scale * (2.0 * u).ln()
    } else {
        -scale * (2.0 * (1.0 - u)).ln()
    }
}

/// Deterministic pseudo-random Laplace noise.
#[derive(Clone, Debug)]
pub struct SeededNoise {
    rng: ChaCha12Rng,
}

impl SeededNoise {
    pub fn new(seed: u64) -> Self {
        SeededNoise {
            rng: ChaCha12Rng::seed_from_u64(seed),
        }
    }

    pub fn uniform(&mut self) -> f64 {
        self.rng.random()
    }
}

impl NoiseSource for SeededNoise {
    fn laplace(&mut self, _channel: Channel, scale: f64) -> f64 {
        sample_laplace(&mut self.rng, scale)
    }
}

/// Always returns 0.
#[derive(Clone, Copy, Debug, Default)]
pub struct ZeroNoise;

impl NoiseSource for ZeroNoise {
    fn laplace(&mut self, _channel: Channel, _scale: f64) -> f64 {
        0.0
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Draw {
    pub channel: Channel,
    pub scale: f64,
    pub value: f64,
}

/// Wraps a source and logs every draw in order.
#[derive(Debug)]
pub struct Recorder<N> {
    inner: N,
    draws: Vec<Draw>,
}

impl<N: NoiseSource> Recorder<N> {
    pub fn new(inner: N) -> Self {
        Recorder {
            inner,
            draws: Vec::new(),
        }
    }

    pub fn draws(&self) -> &[Draw] {
        &self.draws
    }

    pub fn clear(&mut self) {
        self.draws.clear();
    }

    pub fn count(&self, channel: Channel) -> usize {
        self.draws.iter().filter(|d| d.channel == channel).count()
    }

    pub fn into_draws(self) -> Vec<Draw> {
        self.draws
    }
}

impl<N: NoiseSource> NoiseSource for Recorder<N> {
    fn laplace(&mut self, channel: Channel, scale: f64) -> f64 {
        let value = self.inner.laplace(channel, scale);
        self.draws.push(Draw {
            channel,
            scale,
            value,
        });
        value
    }
}

/// Replays recorded draws, per channel, in recording order.
///
/// Panics when a channel runs dry or when a requested scale differs from
/// the recorded one: either means the replaying mechanism diverged from the
/// recorded one.
#[derive(Clone, Debug)]
pub struct Replay {
    selection: VecDeque<Draw>,
    count: VecDeque<Draw>,
}

impl Replay {
    pub fn new(draws: &[Draw]) -> Self {
        let pick = |c: Channel| draws.iter().filter(|d| d.channel == c).copied().collect();
        Replay {
            selection: pick(Channel::Selection),
            count: pick(Channel::Count),
        }
    }

    pub fn remaining(&self) -> usize {
        self.selection.len() + self.count.len()
    }
}

impl NoiseSource for Replay {
    fn laplace(&mut self, channel: Channel, scale: f64) -> f64 {
        let queue = match channel {
            Channel::Selection => &mut self.selection,
            Channel::Count => &mut self.count,
        };
        let draw = queue
            .pop_front()
            .unwrap_or_else(|| panic!("replay exhausted on {channel:?} channel"));
        assert!(
            (draw.scale - scale).abs() <= 1e-12 * scale.abs().max(1.0),
            "replay scale mismatch on {channel:?}: recorded {}, requested {scale}",
            draw.scale
        );
        draw.value
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn laplace_moments() {
        let mut noise = SeededNoise::new(7);
        let n = 200_000;
        let scale = 3.0;
        let xs: Vec<f64> = (0..n).map(|_| noise.laplace(Channel::Count, scale)).collect();
        let mean = xs.iter().sum::<f64>() / n as f64;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n as f64;
        let mad = xs.iter().map(|x| x.abs()).sum::<f64>() / n as f64;
        assert!(mean.abs() < 0.05, "mean {mean}");
        assert!((var / (2.0 * scale * scale) - 1.0).abs() < 0.03, "var {var}");
        assert!((mad / scale - 1.0).abs() < 0.02, "mean abs {mad}");
    }

    #[test]
    fn seeded_is_deterministic() {
        let mut a = SeededNoise::new(42);
        let mut b = SeededNoise::new(42);
        for _ in 0..100 {
            assert_eq!(
                a.laplace(Channel::Selection, 1.0).to_bits(),
                b.laplace(Channel::Selection, 1.0).to_bits()
            );
        }
    }

    #[test]
    fn replay_is_per_channel() {
        let mut rec = Recorder::new(SeededNoise::new(1));
        let s1 = rec.laplace(Channel::Selection, 2.0);
        let c1 = rec.laplace(Channel::Count, 4.0);
        let s2 = rec.laplace(Channel::Selection, 2.0);
        let mut replay = Replay::new(rec.draws());
        assert_eq!(replay.laplace(Channel::Count, 4.0), c1);
        assert_eq!(replay.laplace(Channel::Selection, 2.0), s1);
        assert_eq!(replay.laplace(Channel::Selection, 2.0), s2);
        assert_eq!(replay.remaining(), 0);
    }

    #[test]
    #[should_panic(expected = "scale mismatch")]
    fn replay_checks_scale() {
        let mut rec = Recorder::new(ZeroNoise);
        rec.laplace(Channel::Count, 1.0);
        Replay::new(rec.draws()).laplace(Channel::Count, 2.0);
    }
}
