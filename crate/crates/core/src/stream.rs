//! The turnstile data model: a bounded domain, unit add/delete events grouped
//! into timestamped batches, and the differential stream they form.

use std::borrow::Cow;
use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::hash::{Hash, Hasher};

use smallvec::SmallVec;

use crate::error::{Error, Result};

/// A coordinate vector. Equality, hashing and ordering are defined on the
/// bit patterns of the coordinates so points can key maps.
#[derive(Clone, Debug)]
pub struct Point(pub SmallVec<[f64; 2]>);

impl Point {
    pub fn new(coords: &[f64]) -> Self {
        Point(SmallVec::from_slice(coords))
    }

    pub fn xy(x: f64, y: f64) -> Self {
        Point(SmallVec::from_buf([x, y]))
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn coords(&self) -> &[f64] {
        &self.0
    }
}

impl std::ops::Index<usize> for Point {
    type Output = f64;

    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

impl PartialEq for Point {
    fn eq(&self, other: &Self) -> bool {
        self.0.len() == other.0.len()
            && self
                .0
                .iter()
                .zip(other.0.iter())
                .all(|(a, b)| a.to_bits() == b.to_bits())
    }
}

impl Eq for Point {}

impl Hash for Point {
    fn hash<H: Hasher>(&self, state: &mut H) {
        for c in &self.0 {
            c.to_bits().hash(state);
        }
    }
}

impl Ord for Point {
    fn cmp(&self, other: &Self) -> Ordering {
        for (a, b) in self.0.iter().zip(other.0.iter()) {
            match a.total_cmp(b) {
                Ordering::Equal => {}
                ord => return ord,
            }
        }
        self.0.len().cmp(&other.0.len())
    }
}

impl PartialOrd for Point {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Axis-aligned bounding box of the data, closed on both ends.
#[derive(Clone, Debug, PartialEq)]
pub struct Domain {
    bounds: Vec<(f64, f64)>,
}

impl Domain {
    pub fn new(bounds: Vec<(f64, f64)>) -> Result<Self> {
        if bounds.is_empty() {
            return Err(Error::InvalidParameter(
                "domain needs at least one dimension".into(),
            ));
        }
        for (i, &(lo, hi)) in bounds.iter().enumerate() {
            if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                return Err(Error::InvalidParameter(format!(
                    "dimension {i} has empty or non-finite interval [{lo}, {hi}]"
                )));
            }
        }
        Ok(Domain { bounds })
    }

    /// The unit cube `[0,1]^dim`.
    pub fn unit(dim: usize) -> Self {
        assert!(dim >= 1, "domain needs at least one dimension");
        Domain {
            bounds: vec![(0.0, 1.0); dim],
        }
    }

    pub fn dim(&self) -> usize {
        self.bounds.len()
    }

    pub fn bounds(&self) -> &[(f64, f64)] {
        &self.bounds
    }

    pub fn volume(&self) -> f64 {
        self.bounds.iter().map(|(lo, hi)| hi - lo).product()
    }

    pub fn contains(&self, p: &Point) -> bool {
        p.dim() == self.dim()
            && p
                .coords()
                .iter()
                .zip(&self.bounds)
                .all(|(&x, &(lo, hi))| lo <= x && x <= hi)
    }
}

/// A unit-weight insertion (+1) or deletion (-1) of a point.
#[derive(Clone, Debug, PartialEq)]
pub struct Event {
    pub point: Point,
    weight: i8,
}

impl Event {
    pub fn new(point: Point, weight: i64) -> Result<Self> {
        match weight {
            1 | -1 => Ok(Event {
                point,
                weight: weight as i8,
            }),
            w => Err(Error::InvalidParameter(format!(
                "event weight must be +1 or -1, got {w}"
            ))),
        }
    }

    pub fn add(point: Point) -> Self {
        Event { point, weight: 1 }
    }

    pub fn delete(point: Point) -> Self {
        Event { point, weight: -1 }
    }

    pub fn weight(&self) -> i64 {
        self.weight as i64
    }
}

/// All events arriving at one time step: the values of the differential
/// stream `f(·,t) - f(·,t-1)`.
#[derive(Clone, Debug, PartialEq)]
pub struct Batch {
    pub time: u64,
    pub events: Vec<Event>,
}

impl Batch {
    pub fn new(time: u64, events: Vec<Event>) -> Self {
        Batch { time, events }
    }

    pub fn empty(time: u64) -> Self {
        Batch {
            time,
            events: Vec::new(),
        }
    }

    /// Signed sum of weights.
    pub fn net_weight(&self) -> i64 {
        self.events.iter().map(Event::weight).sum()
    }

    /// Number of events, i.e. the l1 mass of the batch.
    pub fn mass(&self) -> usize {
        self.events.len()
    }
}

/// Time-ordered batches over a domain. Times not present are empty batches.
#[derive(Clone, Debug, PartialEq)]
pub struct DiffStream {
    domain: Domain,
    batches: Vec<Batch>,
}

impl DiffStream {
    /// Validates time ordering and domain membership. Prefix-positivity is
    /// checked separately by [`DiffStream::validate_prefix_positivity`].
    pub fn new(domain: Domain, batches: Vec<Batch>) -> Result<Self> {
        let mut prev = 0;
        for b in &batches {
            if b.time == 0 || b.time <= prev {
                return Err(Error::NonIncreasingTime {
                    prev,
                    next: b.time,
                });
            }
            prev = b.time;
            for e in &b.events {
                if !domain.contains(&e.point) {
                    return Err(Error::OutOfDomain {
                        point: e.point.coords().to_vec(),
                    });
                }
            }
        }
        Ok(DiffStream { domain, batches })
    }

    pub fn empty(domain: Domain) -> Self {
        DiffStream {
            domain,
            batches: Vec::new(),
        }
    }

    pub fn domain(&self) -> &Domain {
        &self.domain
    }

    pub fn batches(&self) -> &[Batch] {
        &self.batches
    }

    /// Last time with a batch, or 0 for an empty stream.
    pub fn horizon(&self) -> u64 {
        self.batches.last().map_or(0, |b| b.time)
    }

    pub fn batch_at(&self, time: u64) -> Option<&Batch> {
        self.batches
            .binary_search_by_key(&time, |b| b.time)
            .ok()
            .map(|i| &self.batches[i])
    }

    /// One batch per time step `1..=horizon`, with empty batches filling gaps.
    pub fn steps(&self) -> impl Iterator<Item = Cow<'_, Batch>> + '_ {
        let mut next = self.batches.iter().peekable();
        (1..=self.horizon()).map(move |t| match next.peek() {
            Some(b) if b.time == t => Cow::Borrowed(next.next().unwrap()),
            _ => Cow::Owned(Batch::empty(t)),
        })
    }

    pub fn total_events(&self) -> usize {
        self.batches.iter().map(Batch::mass).sum()
    }

    pub fn validate_prefix_positivity(&self) -> Result<()> {
        let mut tracker = SnapshotTracker::new();
        for b in &self.batches {
            tracker.apply(b)?;
        }
        Ok(())
    }

    /// Concatenates `other` after `self`, shifting its times past this horizon.
    pub fn concat(&self, other: &DiffStream) -> Result<DiffStream> {
        let shift = self.horizon();
        let mut batches = self.batches.clone();
        batches.extend(other.batches.iter().map(|b| Batch {
            time: b.time + shift,
            events: b.events.clone(),
        }));
        DiffStream::new(self.domain.clone(), batches)
    }
}

/// The ∇-seminorm of a stream: total absolute event weight over all times.
pub fn nabla_norm(stream: &DiffStream) -> f64 {
    stream
        .batches
        .iter()
        .flat_map(|b| b.events.iter())
        .map(|e| e.weight().abs() as f64)
        .sum()
}

/// Multiset of points with positive multiplicities.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Snapshot {
    counts: BTreeMap<Point, u64>,
    total: u64,
}

impl Snapshot {
    pub fn multiplicity(&self, p: &Point) -> u64 {
        self.counts.get(p).copied().unwrap_or(0)
    }

    /// Total multiplicity `|f(·,t)|`.
    pub fn total(&self) -> u64 {
        self.total
    }

    pub fn distinct(&self) -> usize {
        self.counts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.total == 0
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Point, u64)> {
        self.counts.iter().map(|(p, &c)| (p, c))
    }
}

/// Incrementally materializes `f(·,t)` from the differential stream.
#[derive(Clone, Debug, Default)]
pub struct SnapshotTracker {
    snapshot: Snapshot,
    time: u64,
}

impl SnapshotTracker {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn time(&self) -> u64 {
        self.time
    }

    pub fn snapshot(&self) -> &Snapshot {
        &self.snapshot
    }

    /// Applies a batch; fails if any multiplicity would become negative.
    /// On failure the tracker is left unchanged.
    pub fn apply(&mut self, batch: &Batch) -> Result<()> {
        let mut delta: BTreeMap<&Point, i64> = BTreeMap::new();
        for e in &batch.events {
            *delta.entry(&e.point).or_default() += e.weight();
        }
        for (p, d) in &delta {
            let m = self.snapshot.multiplicity(p) as i64 + d;
            if m < 0 {
                return Err(Error::NegativeMultiplicity {
                    time: batch.time,
                    point: p.coords().to_vec(),
                    multiplicity: m,
                });
            }
        }
        for (p, d) in delta {
            if d == 0 {
                continue;
            }
            let m = (self.snapshot.multiplicity(p) as i64 + d) as u64;
            if m == 0 {
                self.snapshot.counts.remove(p);
            } else {
                self.snapshot.counts.insert(p.clone(), m);
            }
            self.snapshot.total = (self.snapshot.total as i64 + d) as u64;
        }
        self.time = self.time.max(batch.time);
        Ok(())
    }
}

/// Materializes `f(·,t)` by accumulating every batch with time `<= t`.
pub fn cumulative_snapshot(stream: &DiffStream, t: u64) -> Result<Snapshot> {
    if t == 0 {
        return Err(Error::InvalidParameter("snapshot time must be >= 1".into()));
    }
    let mut tracker = SnapshotTracker::new();
    for b in stream.batches.iter().take_while(|b| b.time <= t) {
        tracker.apply(b)?;
    }
    Ok(tracker.snapshot)
}

/// Shifts the stream so that processing starts at `t0`: the new first batch
/// merges every event up to `t0`, and later batches move down by `t0 - 1`.
pub fn apply_initialization(stream: &DiffStream, t0: u64) -> Result<DiffStream> {
    if t0 == 0 {
        return Err(Error::InvalidParameter(
            "initialization time must be >= 1".into(),
        ));
    }
    let mut first = Vec::new();
    let mut rest = Vec::new();
    for b in &stream.batches {
        if b.time <= t0 {
            first.extend(b.events.iter().cloned());
        } else {
            rest.push(Batch {
                time: b.time - t0 + 1,
                events: b.events.clone(),
            });
        }
    }
    let mut batches = Vec::with_capacity(rest.len() + 1);
    if !first.is_empty() {
        batches.push(Batch::new(1, first));
    }
    batches.extend(rest);
    Ok(DiffStream {
        domain: stream.domain.clone(),
        batches,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(x: f64, y: f64) -> Point {
        Point::xy(x, y)
    }

    fn stream(batches: Vec<Batch>) -> DiffStream {
        DiffStream::new(Domain::unit(2), batches).unwrap()
    }

    #[test]
    fn nabla_norm_examples() {
        assert_eq!(nabla_norm(&stream(vec![])), 0.0);
        let three = stream(vec![Batch::new(
            1,
            vec![Event::add(p(0.1, 0.1)), Event::add(p(0.2, 0.2)), Event::add(p(0.3, 0.3))],
        )]);
        assert_eq!(nabla_norm(&three), 3.0);
        let in_out = stream(vec![
            Batch::new(1, vec![Event::add(p(0.5, 0.5))]),
            Batch::new(2, vec![Event::delete(p(0.5, 0.5))]),
        ]);
        assert_eq!(nabla_norm(&in_out), 2.0);
    }

    #[test]
    fn snapshot_examples() {
        let (a, b) = (p(0.1, 0.1), p(0.9, 0.9));
        let s = stream(vec![
            Batch::new(1, vec![Event::add(a.clone()), Event::add(b.clone())]),
            Batch::new(2, vec![Event::delete(a.clone())]),
        ]);
        let snap = cumulative_snapshot(&s, 2).unwrap();
        assert_eq!(snap.multiplicity(&a), 0);
        assert_eq!(snap.multiplicity(&b), 1);
        assert_eq!(snap.total(), 1);
        assert_eq!(snap.distinct(), 1);

        let late = stream(vec![Batch::new(3, vec![Event::add(a.clone())])]);
        assert!(cumulative_snapshot(&late, 2).unwrap().is_empty());

        let bad = stream(vec![
            Batch::new(1, vec![Event::add(a.clone())]),
            Batch::new(2, vec![Event::delete(a.clone()), Event::delete(a.clone())]),
        ]);
        assert!(matches!(
            cumulative_snapshot(&bad, 2),
            Err(Error::NegativeMultiplicity { time: 2, multiplicity: -1, .. })
        ));
        assert!(cumulative_snapshot(&bad, 1).is_ok());
        assert!(bad.validate_prefix_positivity().is_err());
    }

    #[test]
    fn add_and_delete_within_one_batch_nets_out() {
        let a = p(0.4, 0.4);
        let s = stream(vec![Batch::new(1, vec![Event::delete(a.clone()), Event::add(a.clone())])]);
        assert!(cumulative_snapshot(&s, 1).unwrap().is_empty());
    }

    #[test]
    fn initialization_examples() {
        let mk = |t: u64, x: f64| Batch::new(t, vec![Event::add(p(x, 0.5))]);
        let s = stream(vec![mk(1, 0.1), mk(2, 0.2), mk(3, 0.3), mk(4, 0.4)]);
        assert_eq!(apply_initialization(&s, 1).unwrap(), s);

        let init = apply_initialization(&s, 3).unwrap();
        assert_eq!(init.batches().len(), 2);
        assert_eq!(init.batches()[0].time, 1);
        assert_eq!(init.batches()[0].events.len(), 3);
        assert_eq!(init.batches()[1], mk(2, 0.4));

        let all = apply_initialization(&s, 10).unwrap();
        assert_eq!(all.batches().len(), 1);
        assert_eq!(all.batches()[0].events.len(), 4);
        assert_eq!(nabla_norm(&all), nabla_norm(&s));
        assert!(apply_initialization(&s, 0).is_err());
    }

    #[test]
    fn steps_fill_gaps() {
        let s = stream(vec![
            Batch::new(2, vec![Event::add(p(0.1, 0.1))]),
            Batch::new(5, vec![Event::add(p(0.2, 0.1))]),
        ]);
        let steps: Vec<_> = s.steps().map(|b| (b.time, b.events.len())).collect();
        assert_eq!(steps, vec![(1, 0), (2, 1), (3, 0), (4, 0), (5, 1)]);
    }

    #[test]
    fn rejects_bad_streams() {
        assert!(matches!(
            DiffStream::new(Domain::unit(2), vec![Batch::empty(2), Batch::empty(2)]),
            Err(Error::NonIncreasingTime { .. })
        ));
        assert!(matches!(
            DiffStream::new(Domain::unit(2), vec![Batch::new(1, vec![Event::add(p(1.5, 0.0))])]),
            Err(Error::OutOfDomain { .. })
        ));
        assert!(Event::new(p(0.0, 0.0), 2).is_err());
        assert!(Domain::new(vec![(1.0, 1.0)]).is_err());
    }
}
