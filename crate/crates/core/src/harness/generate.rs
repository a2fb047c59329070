//! Simulated event streams.

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::stream::{Batch, DiffStream, Domain, Event, Point};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GeneratorSpec {
    #[serde(default)]
    pub seed: u64,
    #[serde(flatten)]
    pub kind: GeneratorKind,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GeneratorKind {
    ConcentricCircles(CirclesSpec),
    UniformBox { n_points: usize, batch_size: usize },
}

/// Two circles around `center` in the unit square.
///
/// Without deletion every batch adds `batch_size` points and the share that
/// lands on the outer circle falls linearly from 1 to 1/2 over the stream.
/// With deletion, `n_points` outer points are first added in batches; after
/// that every batch deletes `batch_size / 2` random surviving outer points
/// and adds as many inner points, until the outer circle is empty.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CirclesSpec {
    pub n_points: usize,
    pub batch_size: usize,
    pub with_deletion: bool,
    pub r_inner: f64,
    pub r_outer: f64,
    /// Standard deviation of the radial jitter.
    pub sigma: f64,
    pub center: (f64, f64),
}

impl Default for CirclesSpec {
    fn default() -> Self {
        CirclesSpec {
            n_points: 16_667,
            batch_size: 500,
            with_deletion: true,
            r_inner: 0.15,
            r_outer: 0.35,
            sigma: 0.03,
            center: (0.5, 0.5),
        }
    }
}

impl CirclesSpec {
    pub fn validate(&self) -> Result<()> {
        if self.batch_size == 0 || (self.with_deletion && self.batch_size < 2) {
            return Err(Error::Config(format!(
                "batch_size must be >= 1 (>= 2 with deletion), got {}",
                self.batch_size
            )));
        }
        if !(0.0 < self.r_inner && self.r_inner < self.r_outer && self.r_outer <= 0.5) {
            return Err(Error::Config(format!(
                "need 0 < r_inner < r_outer <= 0.5, got {} and {}",
                self.r_inner, self.r_outer
            )));
        }
        if !(self.sigma >= 0.0) || !self.sigma.is_finite() {
            return Err(Error::Config(format!("sigma must be >= 0, got {}", self.sigma)));
        }
        let (cx, cy) = self.center;
        if !((0.0..=1.0).contains(&cx) && (0.0..=1.0).contains(&cy)) {
            return Err(Error::Config(format!("center {:?} outside the unit square", self.center)));
        }
        Ok(())
    }
}

impl GeneratorSpec {
    pub fn validate(&self) -> Result<()> {
        match &self.kind {
            GeneratorKind::ConcentricCircles(c) => c.validate(),
            GeneratorKind::UniformBox { batch_size, .. } if *batch_size == 0 => {
                Err(Error::Config("batch_size must be >= 1".into()))
            }
            GeneratorKind::UniformBox { .. } => Ok(()),
        }
    }

    pub fn generate(&self) -> Result<DiffStream> {
        self.validate()?;
        let mut rng = ChaCha12Rng::seed_from_u64(self.seed);
        match &self.kind {
            GeneratorKind::ConcentricCircles(c) => gen_circles(c, &mut rng),
            GeneratorKind::UniformBox { n_points, batch_size } => gen_uniform(*n_points, *batch_size, &mut rng),
        }
    }
}

struct Circle {
    center: (f64, f64),
    radius: f64,
    jitter: Normal<f64>,
}

impl Circle {
    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Point {
        let angle = rng.random_range(0.0..std::f64::consts::TAU);
        let r = self.radius + self.jitter.sample(rng);
        let x = (self.center.0 + r * angle.cos()).clamp(0.0, 1.0);
        let y = (self.center.1 + r * angle.sin()).clamp(0.0, 1.0);
        Point::xy(x, y)
    }
}

pub fn gen_circles<R: Rng + ?Sized>(spec: &CirclesSpec, rng: &mut R) -> Result<DiffStream> {
    spec.validate()?;
    let jitter = Normal::new(0.0, spec.sigma).map_err(|e| Error::Config(e.to_string()))?;
    let inner = Circle {
        center: spec.center,
        radius: spec.r_inner,
        jitter,
    };
    let outer = Circle {
        center: spec.center,
        radius: spec.r_outer,
        jitter,
    };
    let mut batches = Vec::new();
    let time = |batches: &Vec<Batch>| batches.len() as u64 + 1;

    if !spec.with_deletion {
        let n_batches = spec.n_points.div_ceil(spec.batch_size);
        let mut remaining = spec.n_points;
        for b in 0..n_batches {
            let share = if n_batches > 1 {
                1.0 - 0.5 * b as f64 / (n_batches - 1) as f64
            } else {
                1.0
            };
            let size = remaining.min(spec.batch_size);
            remaining -= size;
            let events = (0..size)
                .map(|_| {
                    let c = if rng.random_bool(share) { &outer } else { &inner };
                    Event::add(c.sample(rng))
                })
                .collect();
            batches.push(Batch::new(time(&batches), events));
        }
        return DiffStream::new(Domain::unit(2), batches);
    }

    let mut alive: Vec<Point> = Vec::with_capacity(spec.n_points);
    while alive.len() < spec.n_points {
        let size = (spec.n_points - alive.len()).min(spec.batch_size);
        let added: Vec<Point> = (0..size).map(|_| outer.sample(rng)).collect();
        alive.extend(added.iter().cloned());
        batches.push(Batch::new(time(&batches), added.into_iter().map(Event::add).collect()));
    }
    let per_batch = spec.batch_size / 2;
    while !alive.is_empty() {
        let k = per_batch.min(alive.len());
        let mut picked = index::sample(rng, alive.len(), k).into_vec();
        picked.sort_unstable_by(|a, b| b.cmp(a));
        let mut events: Vec<Event> = picked.into_iter().map(|i| Event::delete(alive.swap_remove(i))).collect();
        events.extend((0..k).map(|_| Event::add(inner.sample(rng))));
        batches.push(Batch::new(time(&batches), events));
    }
    DiffStream::new(Domain::unit(2), batches)
}

/// Additions only, uniform over the unit square.
pub fn gen_uniform<R: Rng + ?Sized>(n_points: usize, batch_size: usize, rng: &mut R) -> Result<DiffStream> {
    if batch_size == 0 {
        return Err(Error::Config("batch_size must be >= 1".into()));
    }
    let mut batches = Vec::new();
    let mut remaining = n_points;
    while remaining > 0 {
        let size = remaining.min(batch_size);
        remaining -= size;
        let events = (0..size)
            .map(|_| Event::add(Point::xy(rng.random(), rng.random())))
            .collect();
        batches.push(Batch::new(batches.len() as u64 + 1, events));
    }
    DiffStream::new(Domain::unit(2), batches)
}
