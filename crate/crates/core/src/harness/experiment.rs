use std::path::{Path, PathBuf};

use log::{info, warn};
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::baselines::{Baseline1, Baseline2, Baseline3, BaselineKind};
use crate::error::{Error, Result};
use crate::eval::{gen_queries, relative_error_from_counts, QueryClass, QuerySet, RangeCounter, RangeIndex};
use crate::stream::{apply_initialization, DiffStream, SnapshotTracker};
use crate::synth::{EfficientEngine, Engine, EngineConfig, Synthesizer};

use super::config::{ExperimentConfig, InputSource, Method};
use super::io::{read_events_csv, write_points_csv};

pub const METRICS_HEADER: &str = "method,seed,epsilon,theta,t0,counter,t,query_class,rel_error,true_count,synth_count";

/// One line of the metrics table. `t` is in the input's time units;
/// `true_count` and `synth_count` are the total real and synthetic point
/// counts at that time.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MetricRow {
    pub method: String,
    pub seed: u64,
    pub epsilon: f64,
    pub theta: f64,
    pub t0: u64,
    pub counter: String,
    pub t: u64,
    pub query_class: String,
    pub rel_error: f64,
    pub true_count: u64,
    pub synth_count: u64,
}

/// Query rng for one seed and class; independent of the other classes so
/// that any subset of classes reproduces the same sets.
pub fn query_rng(seed: u64, class: QueryClass) -> ChaCha12Rng {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    rng.set_stream(2 + class as u64);
    rng
}

pub fn query_sets(seed: u64, classes: &[QueryClass]) -> Result<Vec<QuerySet>> {
    let domain = crate::stream::Domain::unit(2);
    classes
        .iter()
        .map(|&c| gen_queries(&domain, c, &mut query_rng(seed, c)))
        .collect()
}

/// `I, 2I, ...` up to the horizon, plus the horizon itself.
pub fn eval_times(horizon: u64, interval: u64) -> Vec<u64> {
    let mut times: Vec<u64> = (1..=horizon / interval).map(|k| k * interval).collect();
    if horizon % interval != 0 {
        times.push(horizon);
    }
    times
}

pub fn load_stream(config: &ExperimentConfig) -> Result<DiffStream> {
    match &config.input {
        Some(InputSource::Path(p)) => read_events_csv(p),
        Some(InputSource::Generator(spec)) => spec.generate(),
        None => Err(Error::Config("no input given".into())),
    }
}

pub fn build_engine(method: Method, config: EngineConfig) -> Result<Box<dyn Engine + Send>> {
    Ok(match method {
        Method::PhdStream => Box::new(EfficientEngine::new(config)?),
        Method::Baseline(BaselineKind::OfflineOnStream) => Box::new(Baseline1::new(config)?),
        Method::Baseline(BaselineKind::OfflineOnDiff) => Box::new(Baseline2::new(config)?),
        Method::Baseline(BaselineKind::InitThenCount) => Box::new(Baseline3::new(config)?),
    })
}

/// True query answers at one evaluation time.
struct Truth {
    step: u64,
    total: u64,
    counts: Vec<Vec<f64>>,
}

fn truths(stream: &DiffStream, times: &[u64], sets: &[QuerySet]) -> Result<Vec<Truth>> {
    let mut tracker = SnapshotTracker::new();
    let mut out = Vec::with_capacity(times.len());
    for b in stream.steps() {
        tracker.apply(&b)?;
        if times.binary_search(&b.time).is_ok() {
            let snap = tracker.snapshot();
            let index = RangeIndex::new(snap.iter().map(|(p, m)| (p, m as f64)));
            let counts = sets
                .iter()
                .map(|s| s.queries.iter().map(|q| index.range_count(q)).collect())
                .collect();
            out.push(Truth {
                step: b.time,
                total: snap.total(),
                counts,
            });
        }
    }
    Ok(out)
}

struct Cell<'a> {
    method: Method,
    seed: u64,
    sets: &'a [QuerySet],
    truths: &'a [Truth],
}

fn run_cell(config: &ExperimentConfig, stream: &DiffStream, t0: u64, cell: &Cell) -> Result<Vec<MetricRow>> {
    let engine = build_engine(cell.method, config.engine_config(t0, cell.seed)?)?;
    let mut synth = Synthesizer::new(engine, cell.seed);
    let offset = t0.max(1) - 1;
    let dump_dir = config.write_synthetic.then(|| {
        config
            .out_dir
            .join("synthetic")
            .join(cell.method.to_string())
            .join(format!("seed{}", cell.seed))
    });
    let mut rows = Vec::new();
    let mut truths = cell.truths.iter().peekable();
    for b in stream.steps() {
        let out = synth.step(&b)?;
        let t = b.time + offset;
        if let Some(dir) = &dump_dir {
            write_points_csv(dir.join(format!("t{t}.csv")), &out.synthetic_points)?;
        }
        let Some(truth) = truths.next_if(|tr| tr.step == b.time) else {
            continue;
        };
        let index = RangeIndex::from_points(&out.synthetic_points);
        for (set, true_counts) in cell.sets.iter().zip(&truth.counts) {
            let synth_counts: Vec<f64> = set.queries.iter().map(|q| index.range_count(q)).collect();
            let rel_error = match relative_error_from_counts(true_counts, &synth_counts, truth.total as f64) {
                Ok(e) => e,
                Err(Error::DegenerateEvaluation { .. }) => {
                    warn!("{} seed {}: empty data at t={t}, relative error undefined", cell.method, cell.seed);
                    f64::NAN
                }
                Err(e) => return Err(e),
            };
            rows.push(MetricRow {
                method: cell.method.to_string(),
                seed: cell.seed,
                epsilon: config.epsilon,
                theta: config.theta,
                t0,
                counter: config.counter.to_string(),
                t,
                query_class: set.class.to_string(),
                rel_error,
                true_count: truth.total,
                synth_count: out.synthetic_points.len() as u64,
            });
        }
    }
    Ok(rows)
}

/// Runs every (method, seed) cell in parallel and returns the metric rows
/// ordered by method, then seed, then time and query class.
pub fn run_experiment(config: &ExperimentConfig) -> Result<Vec<MetricRow>> {
    config.validate()?;
    let raw = load_stream(config).map_err(|e| e.context("loading input"))?;
    let t0 = config.resolve_t0(raw.horizon());
    let stream = apply_initialization(&raw, t0.max(1))?;
    let times = eval_times(stream.horizon(), config.eval_interval);
    info!(
        "{} events over {} steps, t0 = {t0}, {} evaluation times",
        raw.total_events(),
        raw.horizon(),
        times.len()
    );

    let per_seed: Vec<(Vec<QuerySet>, Vec<Truth>)> = config
        .seeds
        .par_iter()
        .map(|&seed| {
            let sets = query_sets(seed, &config.query_classes)?;
            let truth = truths(&stream, &times, &sets)?;
            Ok((sets, truth))
        })
        .collect::<Result<_>>()?;

    let cells: Vec<Cell> = config
        .methods
        .iter()
        .flat_map(|&method| {
            config.seeds.iter().zip(&per_seed).map(move |(&seed, (sets, truths))| Cell {
                method,
                seed,
                sets,
                truths,
            })
        })
        .collect();
    let rows: Vec<Vec<MetricRow>> = cells
        .par_iter()
        .map(|cell| {
            run_cell(config, &stream, t0, cell)
                .map_err(|e| e.context(format!("{} seed {}", cell.method, cell.seed)))
        })
        .collect::<Result<_>>()?;
    Ok(rows.into_iter().flatten().collect())
}

pub fn write_metrics_csv(path: impl AsRef<Path>, rows: &[MetricRow]) -> Result<()> {
    let path = path.as_ref();
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    let wrap = |e: csv::Error| Error::Config(format!("{}: {e}", path.display()));
    let mut out = csv::Writer::from_path(path).map_err(wrap)?;
    if rows.is_empty() {
        out.write_record(METRICS_HEADER.split(',')).map_err(wrap)?;
    }
    for r in rows {
        out.serialize(r).map_err(wrap)?;
    }
    out.flush().map_err(|e| Error::io(path, e))
}

/// Runs the experiment and writes `out_dir/metrics.csv`; returns its path.
pub fn run_to_dir(config: &ExperimentConfig) -> Result<PathBuf> {
    let rows = run_experiment(config)?;
    let path = config.out_dir.join("metrics.csv");
    write_metrics_csv(&path, &rows)?;
    info!("wrote {} rows to {}", rows.len(), path.display());
    Ok(path)
}
