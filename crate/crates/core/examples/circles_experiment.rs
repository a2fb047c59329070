//! A scaled-down concentric circles experiment through the harness,
//! printing the mean small-query error per method.

use phdstream::baselines::BaselineKind;
use phdstream::eval::QueryClass;
use phdstream::harness::{run_experiment, CirclesSpec, ExperimentConfig, GeneratorKind, GeneratorSpec, InputSource, Method};

fn main() -> phdstream::Result<()> {
    let config = ExperimentConfig {
        input: Some(InputSource::Generator(GeneratorSpec {
            seed: 0,
            kind: GeneratorKind::ConcentricCircles(CirclesSpec {
                n_points: 5000,
                ..CirclesSpec::default()
            }),
        })),
        methods: vec![
            Method::PhdStream,
            Method::Baseline(BaselineKind::OfflineOnDiff),
            Method::Baseline(BaselineKind::InitThenCount),
        ],
        t0_fraction: Some(0.1),
        seeds: (0..4).collect(),
        query_classes: vec![QueryClass::Small],
        eval_interval: 5,
        ..ExperimentConfig::default()
    };
    let rows = run_experiment(&config)?;
    let mut times: Vec<u64> = rows.iter().map(|r| r.t).collect();
    times.sort_unstable();
    times.dedup();
    println!("{:>4} {:>10} {:>10} {:>10}", "t", "phdstream", "baseline2", "baseline3");
    for t in times {
        print!("{t:>4}");
        for m in &config.methods {
            let name = m.to_string();
            let xs: Vec<f64> = rows.iter().filter(|r| r.t == t && r.method == name).map(|r| r.rel_error).collect();
            print!(" {:>10.3}", xs.iter().sum::<f64>() / xs.len() as f64);
        }
        println!();
    }
    Ok(())
}
