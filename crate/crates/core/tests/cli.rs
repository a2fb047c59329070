use std::path::Path;
use std::process::{Command, Output};

fn phdstream(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_phdstream"))
        .args(args)
        .current_dir(cwd)
        .env("RUST_LOG", "warn")
        .output()
        .unwrap()
}

fn write(dir: &Path, name: &str, text: &str) {
    std::fs::write(dir.join(name), text).unwrap();
}

#[test]
fn generate_run_eval_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    write(d, "gen.json", r#"{"seed": 2, "kind": "concentric_circles", "n_points": 600, "batch_size": 100}"#);
    let out = phdstream(&["generate", "--spec", "gen.json", "--out", "events.csv"], d);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let events = std::fs::read_to_string(d.join("events.csv")).unwrap();
    assert!(events.starts_with("t,x,y,w\n"));

    write(
        d,
        "exp.json",
        r#"{"input": {"path": "events.csv"}, "methods": ["phdstream"], "seeds": [1],
            "query_classes": ["large"], "eval_interval": 4, "out_dir": "ignored"}"#,
    );
    let out = phdstream(
        &[
            "run", "--config", "exp.json", "--epsilon", "2", "--method", "phdstream,baseline2", "--seed", "5,6",
            "--out", "out", "--write-synthetic",
        ],
        d,
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let metrics = std::fs::read_to_string(d.join("out/metrics.csv")).unwrap();
    let rows: Vec<&str> = metrics.lines().skip(1).collect();
    // 6 growth steps and 12 migration steps, evaluated at 4, 8, 12, 16, 18.
    assert_eq!(rows.len(), 2 * 2 * 5);
    assert!(rows.iter().all(|r| r.split(',').nth(2) == Some("2.0")));
    assert!(rows[0].starts_with("phdstream,5,"));

    let synth = d.join("out/synthetic/phdstream/seed5");
    assert_eq!(std::fs::read_dir(&synth).unwrap().count(), 18);
    let out = phdstream(
        &["eval", "--true", "events.csv", "--synth", synth.to_str().unwrap(), "--queries", "large,small", "--seed", "5"],
        d,
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let table = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<&str> = table.lines().collect();
    assert_eq!(lines[0], "t,query_class,rel_error,true_count,synth_count");
    assert_eq!(lines.len(), 1 + 18 * 2);
    // The eval subcommand reproduces the run's own numbers.
    let from_run: Vec<&str> = rows
        .iter()
        .filter(|r| r.starts_with("phdstream,5,") && r.contains(",8,large,"))
        .map(|r| r.split(',').nth(8).unwrap())
        .collect();
    let from_eval: Vec<&str> = lines
        .iter()
        .filter(|l| l.starts_with("8,large,"))
        .map(|l| l.split(',').nth(2).unwrap())
        .collect();
    assert_eq!(from_run, from_eval);
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    write(d, "bad.csv", "t,x,y,w\n1,0.5,0.5,1\n2,1.5,0.5,1\n");
    write(d, "neg.csv", "t,x,y,w\n1,0.5,0.5,-1\n");
    write(d, "cfg.json", r#"{"input": {"path": "bad.csv"}}"#);
    write(d, "neg.json", r#"{"input": {"path": "neg.csv"}}"#);
    write(d, "b3.json", r#"{"input": {"path": "neg.csv"}, "methods": ["baseline3"], "t0": 0}"#);
    write(d, "eps.json", r#"{"input": {"path": "neg.csv"}, "epsilon": -1}"#);

    let out = phdstream(&["run", "--config", "cfg.json"], d);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("bad.csv:3"));
    assert_eq!(phdstream(&["run", "--config", "neg.json"], d).status.code(), Some(2));

    let out = phdstream(&["run", "--config", "b3.json"], d);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("t0 > 0"));
    assert_eq!(phdstream(&["run", "--config", "eps.json"], d).status.code(), Some(1));
    assert_eq!(phdstream(&["run", "--config", "missing.json"], d).status.code(), Some(1));
    assert_eq!(phdstream(&["run", "--config", "cfg.json", "--counter", "block:x"], d).status.code(), Some(1));
    assert_eq!(phdstream(&["frobnicate"], d).status.code(), Some(1));
}
