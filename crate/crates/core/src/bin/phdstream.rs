use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use phdstream::counters::CounterKind;
use phdstream::eval::{relative_error_from_counts, QueryClass, RangeCounter, RangeIndex};
use phdstream::harness::{
    query_sets, read_events_csv, read_points_csv, run_to_dir, write_events_csv, ExperimentConfig, GeneratorSpec,
    Method,
};
use phdstream::stream::SnapshotTracker;
use phdstream::{Error, Result};

#[derive(Parser)]
#[command(version, about = "Private synthetic data for point streams with insertions and deletions")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment config and write metrics.csv to the output directory.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        epsilon: Option<f64>,
        #[arg(long)]
        theta: Option<f64>,
        #[arg(long)]
        t0: Option<u64>,
        /// One or more of phdstream, baseline1, baseline2, baseline3.
        #[arg(long, value_delimiter = ',')]
        method: Vec<Method>,
        /// simple, block:B or binarytree:T.
        #[arg(long)]
        counter: Option<CounterKind>,
        #[arg(long, value_delimiter = ',')]
        seed: Vec<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Also dump synthetic points for every step.
        #[arg(long)]
        write_synthetic: bool,
    },
    /// Generate an event stream from a generator spec (JSON).
    Generate {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Score a directory of t<N>.csv synthetic point files against an event file.
    Eval {
        #[arg(long = "true")]
        truth: PathBuf,
        #[arg(long)]
        synth: PathBuf,
        #[arg(long, value_delimiter = ',', default_value = "small,medium,large")]
        queries: Vec<QueryClass>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // Usage errors are configuration errors (1); 2 is reserved for bad data.
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn run(command: Command) -> Result<()> {
    match command {
        Command::Run {
            config,
            epsilon,
            theta,
            t0,
            method,
            counter,
            seed,
            out,
            write_synthetic,
        } => {
            let mut c = ExperimentConfig::from_file(&config)?;
            if let Some(x) = epsilon {
                c.epsilon = x;
            }
            if let Some(x) = theta {
                c.theta = x;
            }
            if let Some(x) = t0 {
                c.t0 = Some(x);
            }
            if !method.is_empty() {
                c.methods = method;
            }
            if let Some(x) = counter {
                c.counter = x;
            }
            if !seed.is_empty() {
                c.seeds = seed;
            }
            if let Some(x) = out {
                c.out_dir = x;
            }
            c.write_synthetic |= write_synthetic;
            let path = run_to_dir(&c)?;
            println!("{}", path.display());
            Ok(())
        }
        Command::Generate { spec, out } => {
            let text = std::fs::read_to_string(&spec).map_err(|e| Error::Io { path: spec.clone(), source: e })?;
            let spec: GeneratorSpec = serde_json::from_str(&text)
                .map_err(|e| Error::Config(format!("{}: {e}", spec.display())))?;
            let stream = spec.generate()?;
            write_events_csv(&out, &stream)?;
            log::info!("{} events in {} batches", stream.total_events(), stream.batches().len());
            Ok(())
        }
        Command::Eval {
            truth,
            synth,
            queries,
            seed,
        } => eval(&truth, &synth, &queries, seed),
    }
}

/// Synthetic files named `t<N>.csv`, sorted by `N`.
fn synthetic_files(dir: &Path) -> Result<Vec<(u64, PathBuf)>> {
    let entries = std::fs::read_dir(dir).map_err(|e| Error::Io { path: dir.to_path_buf(), source: e })?;
    let mut files = Vec::new();
    for entry in entries {
        let path = entry.map_err(|e| Error::Io { path: dir.to_path_buf(), source: e })?.path();
        let t = path
            .file_name()
            .and_then(|n| n.to_str())
            .and_then(|n| n.strip_prefix('t')?.strip_suffix(".csv")?.parse::<u64>().ok());
        if let Some(t) = t {
            files.push((t, path));
        }
    }
    files.sort();
    Ok(files)
}

fn eval(truth: &Path, synth: &Path, classes: &[QueryClass], seed: u64) -> Result<()> {
    let stream = read_events_csv(truth)?;
    let files = synthetic_files(synth)?;
    if files.is_empty() {
        return Err(Error::Config(format!("no t<N>.csv files in {}", synth.display())));
    }
    let sets = query_sets(seed, classes)?;
    let mut out = csv::Writer::from_writer(std::io::stdout());
    let wrap = |e: csv::Error| Error::Config(e.to_string());
    out.write_record(["t", "query_class", "rel_error", "true_count", "synth_count"]).map_err(wrap)?;
    let mut tracker = SnapshotTracker::new();
    let mut steps = stream.steps();
    for (t, path) in files {
        while tracker.time() < t {
            match steps.next() {
                Some(b) => tracker.apply(&b)?,
                None => break,
            }
        }
        let snap = tracker.snapshot();
        let real = RangeIndex::new(snap.iter().map(|(p, m)| (p, m as f64)));
        let points = read_points_csv(&path)?;
        let fake = RangeIndex::from_points(&points);
        for set in &sets {
            let a: Vec<f64> = set.queries.iter().map(|q| real.range_count(q)).collect();
            let b: Vec<f64> = set.queries.iter().map(|q| fake.range_count(q)).collect();
            let err = relative_error_from_counts(&a, &b, snap.total() as f64)?;
            out.serialize((t, set.class.to_string(), err, snap.total(), points.len()))
                .map_err(wrap)?;
        }
    }
    out.flush().map_err(|e| Error::Config(e.to_string()))
}
