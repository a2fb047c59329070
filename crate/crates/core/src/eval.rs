//! Range-query workloads and the relative-error metric.

use std::fmt;
use std::str::FromStr;

use rand::Rng;

use crate::error::{Error, Result};
use crate::stream::{Domain, Point};

/// Floor of the error denominator as a fraction of the true total.
pub const ERROR_FLOOR: f64 = 0.001;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum QueryClass {
    Small,
    Medium,
    Large,
}

impl QueryClass {
    pub const ALL: [QueryClass; 3] = [QueryClass::Small, QueryClass::Medium, QueryClass::Large];

    /// Number of queries in a set of this class.
    pub fn size(self) -> usize {
        match self {
            QueryClass::Small => 10_000,
            QueryClass::Medium => 5_000,
            QueryClass::Large => 1_000,
        }
    }

    /// Half-open range of the box area as a fraction of the domain.
    pub fn area_range(self) -> (f64, f64) {
        match self {
            QueryClass::Small => (1e-4, 1e-3),
            QueryClass::Medium => (1e-3, 1e-2),
            QueryClass::Large => (1e-2, 1e-1),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            QueryClass::Small => "small",
            QueryClass::Medium => "medium",
            QueryClass::Large => "large",
        }
    }
}

impl fmt::Display for QueryClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for QueryClass {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        QueryClass::ALL
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown query class {s:?} (small|medium|large)")))
    }
}

/// Axis-aligned box, closed below and open above in every dimension.
#[derive(Clone, Debug, PartialEq)]
pub struct RangeQuery {
    bounds: Vec<(f64, f64)>,
}

impl RangeQuery {
    pub fn new(bounds: Vec<(f64, f64)>) -> Result<Self> {
        if bounds.is_empty() || bounds.iter().any(|&(lo, hi)| !(lo < hi)) {
            return Err(Error::InvalidParameter(format!("degenerate query box {bounds:?}")));
        }
        Ok(RangeQuery { bounds })
    }

    pub fn bounds(&self) -> &[(f64, f64)] {
        &self.bounds
    }

    pub fn area(&self) -> f64 {
        self.bounds.iter().map(|(lo, hi)| hi - lo).product()
    }

    pub fn contains(&self, p: &Point) -> bool {
        self.bounds
            .iter()
            .zip(p.coords())
            .all(|(&(lo, hi), &x)| lo <= x && x < hi)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct QuerySet {
    pub class: QueryClass,
    pub queries: Vec<RangeQuery>,
}

/// Draws `class.size()` boxes inside a 2-D domain. Area fraction is uniform
/// over the class range and the aspect ratio log-uniform in [1/4, 4]; the
/// center is uniform and redrawn until the box fits.
pub fn gen_queries<R: Rng + ?Sized>(domain: &Domain, class: QueryClass, rng: &mut R) -> Result<QuerySet> {
    if domain.dim() != 2 {
        return Err(Error::InvalidParameter(format!(
            "range queries need a 2-D domain, got dimension {}",
            domain.dim()
        )));
    }
    let (lo, hi) = class.area_range();
    let volume = domain.volume();
    let b = domain.bounds();
    let span = [b[0].1 - b[0].0, b[1].1 - b[1].0];
    let max_log_aspect = 4f64.ln();
    let mut queries = Vec::with_capacity(class.size());
    while queries.len() < class.size() {
        let area = rng.random_range(lo..hi);
        let aspect = rng.random_range(-max_log_aspect..=max_log_aspect).exp();
        let w = [(area * aspect).sqrt() * span[0], (area / aspect).sqrt() * span[1]];
        let q = loop {
            let c = [
                b[0].0 + rng.random::<f64>() * span[0],
                b[1].0 + rng.random::<f64>() * span[1],
            ];
            let bounds = vec![
                (c[0] - w[0] / 2.0, c[0] + w[0] / 2.0),
                (c[1] - w[1] / 2.0, c[1] + w[1] / 2.0),
            ];
            if bounds.iter().zip(b).all(|(q, d)| q.0 >= d.0 && q.1 <= d.1) {
                break RangeQuery { bounds };
            }
        };
        // Rounding can push the realized fraction just outside the class.
        let frac = q.area() / volume;
        if lo <= frac && frac < hi {
            queries.push(q);
        }
    }
    Ok(QuerySet { class, queries })
}

/// Anything that can answer range counts.
pub trait RangeCounter {
    fn range_count(&self, q: &RangeQuery) -> f64;
}

/// Weighted point list answered by a full scan.
impl RangeCounter for [(Point, f64)] {
    fn range_count(&self, q: &RangeQuery) -> f64 {
        range_count(self.iter().map(|(p, w)| (p, *w)), q)
    }
}

/// Unit-weight point list answered by a full scan.
impl RangeCounter for [Point] {
    fn range_count(&self, q: &RangeQuery) -> f64 {
        range_count(self.iter().map(|p| (p, 1.0)), q)
    }
}

/// Total weight of the points inside `q`, by scanning.
pub fn range_count<'a>(points: impl IntoIterator<Item = (&'a Point, f64)>, q: &RangeQuery) -> f64 {
    points
        .into_iter()
        .filter(|(p, _)| q.contains(p))
        .map(|(_, w)| w)
        .sum()
}

const STRIP: usize = 128;

struct Strip {
    x_min: f64,
    x_max: f64,
    /// `(x, y, weight)` sorted by y.
    points: Vec<(f64, f64, f64)>,
    /// `prefix[i]` is the weight of the first `i` points.
    prefix: Vec<f64>,
}

/// Static 2-D index: points are cut into strips by x, each strip sorted by
/// y with prefix sums. A query binary-searches y inside every strip it
/// covers in x and scans the (at most two) strips it cuts. Answers equal [`range_count`]
/// whenever partial sums of the weights are exact, as for integer weights.
pub struct RangeIndex {
    strips: Vec<Strip>,
}

impl RangeIndex {
    pub fn new<'a>(points: impl IntoIterator<Item = (&'a Point, f64)>) -> Self {
        let mut pts: Vec<(f64, f64, f64)> = points.into_iter().map(|(p, w)| (p[0], p[1], w)).collect();
        pts.sort_by(|a, b| a.0.total_cmp(&b.0));
        let strips = pts
            .chunks(STRIP)
            .map(|chunk| {
                let mut points = chunk.to_vec();
                points.sort_by(|a, b| a.1.total_cmp(&b.1));
                let mut prefix = Vec::with_capacity(points.len() + 1);
                prefix.push(0.0);
                let mut acc = 0.0;
                for p in &points {
                    acc += p.2;
                    prefix.push(acc);
                }
                Strip {
                    x_min: chunk[0].0,
                    x_max: chunk[chunk.len() - 1].0,
                    points,
                    prefix,
                }
            })
            .collect();
        RangeIndex { strips }
    }

    pub fn from_points(points: &[Point]) -> Self {
        RangeIndex::new(points.iter().map(|p| (p, 1.0)))
    }
}

impl RangeCounter for RangeIndex {
    fn range_count(&self, q: &RangeQuery) -> f64 {
        let (x0, x1) = q.bounds[0];
        let (y0, y1) = q.bounds[1];
        let first = self.strips.partition_point(|s| s.x_max < x0);
        let mut total = 0.0;
        for s in &self.strips[first..] {
            if s.x_min >= x1 {
                break;
            }
            if x0 <= s.x_min && s.x_max < x1 {
                let lo = s.points.partition_point(|p| p.1 < y0);
                let hi = s.points.partition_point(|p| p.1 < y1);
                total += s.prefix[hi] - s.prefix[lo];
            } else {
                total += s
                    .points
                    .iter()
                    .filter(|p| x0 <= p.0 && p.0 < x1 && y0 <= p.1 && p.1 < y1)
                    .map(|p| p.2)
                    .sum::<f64>();
            }
        }
        total
    }
}

/// `(1/n) Σ |t_i - s_i| / max(t_i, 0.001·total)` over paired true and
/// synthetic query answers.
pub fn relative_error_from_counts(true_counts: &[f64], synth_counts: &[f64], total: f64) -> Result<f64> {
    if true_counts.len() != synth_counts.len() {
        return Err(Error::LengthMismatch {
            expected: true_counts.len(),
            got: synth_counts.len(),
        });
    }
    if !(total >= 0.0) {
        return Err(Error::InvalidParameter(format!("total must be >= 0, got {total}")));
    }
    if true_counts.is_empty() {
        return Err(Error::InvalidParameter("empty query set".into()));
    }
    let mut sum = 0.0;
    for (i, (&t, &s)) in true_counts.iter().zip(synth_counts).enumerate() {
        let denom = t.max(ERROR_FLOOR * total);
        if !(denom > 0.0) {
            return Err(Error::DegenerateEvaluation { query: i });
        }
        sum += (t - s).abs() / denom;
    }
    Ok(sum / true_counts.len() as f64)
}

/// Mean relative error of `synth` against `truth` over a query set.
pub fn relative_error<T, S>(queries: &QuerySet, truth: &T, synth: &S, total: f64) -> Result<f64>
where
    T: RangeCounter + ?Sized,
    S: RangeCounter + ?Sized,
{
    let t: Vec<f64> = queries.queries.iter().map(|q| truth.range_count(q)).collect();
    let s: Vec<f64> = queries.queries.iter().map(|q| synth.range_count(q)).collect();
    relative_error_from_counts(&t, &s, total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn unit_box(x0: f64, x1: f64, y0: f64, y1: f64) -> RangeQuery {
        RangeQuery::new(vec![(x0, x1), (y0, y1)]).unwrap()
    }

    #[test]
    fn class_sizes_and_areas() {
        let domain = Domain::unit(2);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for class in QueryClass::ALL {
            let set = gen_queries(&domain, class, &mut rng).unwrap();
            assert_eq!(set.queries.len(), class.size());
            let (lo, hi) = class.area_range();
            for q in &set.queries {
                let a = q.area();
                assert!(lo <= a && a < hi, "{class}: {a}");
                assert!(q.bounds().iter().all(|&(l, h)| 0.0 <= l && h <= 1.0));
                let r = (q.bounds[0].1 - q.bounds[0].0) / (q.bounds[1].1 - q.bounds[1].0);
                assert!((0.25 - 1e-9..=4.0 + 1e-9).contains(&r));
            }
        }
    }

    #[test]
    fn queries_are_seeded() {
        let d = Domain::new(vec![(-2.0, 2.0), (0.0, 10.0)]).unwrap();
        let a = gen_queries(&d, QueryClass::Large, &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
        let b = gen_queries(&d, QueryClass::Large, &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
        assert_eq!(a, b);
        assert!(a.queries.iter().all(|q| (0.01..0.1).contains(&(q.area() / d.volume()))));
    }

    #[test]
    fn edge_convention() {
        let q = unit_box(0.2, 0.4, 0.2, 0.4);
        let pts = [Point::xy(0.2, 0.2), Point::xy(0.4, 0.3), Point::xy(0.3, 0.4)];
        assert_eq!(pts[..].range_count(&q), 1.0);
        let no: [Point; 0] = [];
        assert_eq!(no[..].range_count(&q), 0.0);
        let inside = [Point::xy(0.25, 0.25), Point::xy(0.3, 0.3), Point::xy(0.35, 0.39)];
        let outside = [Point::xy(0.1, 0.3), Point::xy(0.5, 0.5)];
        let all: Vec<Point> = inside.iter().chain(&outside).cloned().collect();
        assert_eq!(all[..].range_count(&q), 3.0);
    }

    #[test]
    fn index_matches_scan() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..50 {
            let n = rng.random_range(0..2000);
            let pts: Vec<(Point, f64)> = (0..n)
                .map(|_| {
                    let snap = |x: f64| (x * 64.0).floor() / 64.0;
                    (Point::xy(snap(rng.random()), snap(rng.random())), rng.random_range(1..4) as f64)
                })
                .collect();
            let index = RangeIndex::new(pts.iter().map(|(p, w)| (p, *w)));
            for _ in 0..20 {
                let (a, b) = (rng.random::<f64>(), rng.random::<f64>());
                let (c, d) = (rng.random::<f64>(), rng.random::<f64>());
                let q = unit_box(a.min(b), a.max(b) + 1e-3, c.min(d), c.max(d) + 1e-3);
                assert_eq!(index.range_count(&q), pts[..].range_count(&q));
            }
        }
    }

    #[test]
    fn metric_examples() {
        assert_eq!(relative_error_from_counts(&[100.0], &[90.0], 10_000.0).unwrap(), 0.1);
        assert_eq!(relative_error_from_counts(&[0.0], &[5.0], 1000.0).unwrap(), 5.0);
        assert_eq!(relative_error_from_counts(&[3.0, 0.0], &[3.0, 0.0], 3.0).unwrap(), 0.0);
        assert!(matches!(
            relative_error_from_counts(&[0.0], &[1.0], 0.0),
            Err(Error::DegenerateEvaluation { query: 0 })
        ));
    }

    #[test]
    fn identical_data_has_zero_error() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let pts: Vec<Point> = (0..500).map(|_| Point::xy(rng.random(), rng.random())).collect();
        let set = gen_queries(&Domain::unit(2), QueryClass::Medium, &mut rng).unwrap();
        let index = RangeIndex::from_points(&pts);
        assert_eq!(relative_error(&set, &index, &pts[..], 500.0).unwrap(), 0.0);
    }
}
