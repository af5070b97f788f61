use std::io::Write;
use std::process::{Command, Output, Stdio};

use gini_seq::{DistributionSpec, SampleStream, SeedSpec};
use serde_json::Value;
use tempfile::NamedTempFile;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_gini-seq"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn run_stdin(args: &[&str], input: &str) -> Output {
    let mut child = bin()
        .args(args)
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .expect("binary runs");
    // The binary may exit on a config error before reading anything.
    let _ = child.stdin.take().unwrap().write_all(input.as_bytes());
    child.wait_with_output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn json(o: &Output) -> Value {
    serde_json::from_slice(&o.stdout)
        .unwrap_or_else(|e| panic!("stdout is not JSON ({e}): {}", stdout(o)))
}

fn data_file(values: impl IntoIterator<Item = f64>) -> NamedTempFile {
    let mut f = NamedTempFile::new().unwrap();
    for v in values {
        writeln!(f, "{v}").unwrap();
    }
    f.flush().unwrap();
    f
}

#[test]
fn constant_file_stops_at_pilot() {
    let f = data_file(std::iter::repeat_n(3.5, 500));
    let o = run(&[
        "estimate",
        "--input",
        f.path().to_str().unwrap(),
        "--alpha",
        "0.1",
        "--d",
        "0.1",
        "--format",
        "json",
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let v = json(&o);
    assert_eq!(v["n_final"], 17);
    assert_eq!(v["gini"], 0.0);
    assert_eq!(v["ci_low"], -0.1);
    assert_eq!(v["ci_high"], 0.1);
    assert!(stderr(&o).contains("\"pilot\":17"));
}

#[test]
fn text_report_fields() {
    let o = run_stdin(
        &["estimate", "--alpha", "0.1", "--d", "0.1"],
        &"2\n".repeat(40),
    );
    assert!(o.status.success());
    let out = stdout(&o);
    for key in ["n\t17", "gini\t0", "interval\t(-0.1, 0.1)", "v_sq\t"] {
        assert!(out.contains(key), "missing {key:?} in {out}");
    }
    assert!(!out.contains("config"), "config echo belongs on stderr");
}

#[test]
fn short_file_is_exhausted() {
    let f = data_file((1..=100).map(f64::from));
    let o = run(&[
        "estimate",
        "--input",
        f.path().to_str().unwrap(),
        "--alpha",
        "0.1",
        "--d",
        "0.01",
    ]);
    assert_eq!(o.status.code(), Some(3));
    assert!(stdout(&o).is_empty());
    let err = stderr(&o);
    assert!(err.contains("after 100 observations"), "{err}");
    assert!(err.contains("threshold 165"), "{err}");
}

#[test]
fn data_errors() {
    let o = run_stdin(&["estimate", "--alpha", "0.1", "--d", "0.1"], "1\n2\nabc\n");
    assert_eq!(o.status.code(), Some(4));
    assert!(stderr(&o).contains("line 3"));

    let o = run_stdin(&["estimate", "--alpha", "0.1", "--d", "0.1"], "1\n-2\n");
    assert_eq!(o.status.code(), Some(4));

    let o = run_stdin(
        &["estimate", "--alpha", "0.1", "--d", "0.1"],
        &"0\n".repeat(30),
    );
    assert_eq!(o.status.code(), Some(5));
}

#[test]
fn header_and_separators() {
    let mut text = String::from("income\n");
    for _ in 0..10 {
        text.push_str("1, 2 3\n\n");
    }
    let o = run_stdin(
        &[
            "estimate", "--alpha", "0.1", "--d", "0.3", "--header", "--format", "json", "--trace",
        ],
        &text,
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let v = json(&o);
    let n = v["n_final"].as_u64().unwrap();
    let trace = v["trace"].as_array().unwrap();
    assert_eq!(trace.last().unwrap()["n"].as_u64().unwrap(), n);
}

#[test]
fn cap_exceeded() {
    let values = (0..5000).map(|i| (i % 2) as f64);
    let f = data_file(values);
    let o = run(&[
        "estimate",
        "--input",
        f.path().to_str().unwrap(),
        "--alpha",
        "0.1",
        "--d",
        "0.001",
        "--n-max",
        "2000",
    ]);
    assert_eq!(o.status.code(), Some(6), "{}", stderr(&o));
}

#[test]
fn estimate_requires_alpha_and_d() {
    assert_eq!(run(&["estimate", "--d", "0.1"]).status.code(), Some(2));
    assert_eq!(run(&["estimate", "--alpha", "0.1"]).status.code(), Some(2));
    assert_eq!(
        run(&["estimate", "--alpha", "0.1", "--d", "0.1", "--bogus"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(
        run_stdin(&["estimate", "--alpha", "1.5", "--d", "0.1"], "1\n")
            .status
            .code(),
        Some(7)
    );
}

#[test]
fn gamma_files_stop_near_reference_size() {
    let mut total = 0u64;
    let seeds = 12;
    for seed in 0..seeds {
        let xs = SampleStream::new(&DistributionSpec::REFERENCE_GAMMA, SeedSpec::new(7, seed))
            .unwrap()
            .take(5000);
        let f = data_file(xs);
        let o = run(&[
            "estimate",
            "--input",
            f.path().to_str().unwrap(),
            "--alpha",
            "0.1",
            "--d",
            "0.01",
            "--format",
            "json",
        ]);
        assert!(o.status.success(), "{}", stderr(&o));
        total += json(&o)["n_final"].as_u64().unwrap();
    }
    let mean = total as f64 / seeds as f64;
    // Reference mean 1259; one run has sd near 80.
    assert!((mean - 1259.0).abs() < 75.0, "mean stopping size {mean}");
}

#[test]
fn simulate_gamma_reference_coverage() {
    let o = run(&[
        "simulate", "--family", "gamma", "--alpha", "0.1", "--d", "0.01", "--reps", "2000",
        "--seed", "42", "--format", "json",
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let p = json(&o)["p"].as_f64().unwrap();
    assert!((0.853..=0.903).contains(&p), "coverage {p}");
}

#[test]
fn simulate_single_replication() {
    let o = run(&[
        "simulate", "--family", "pareto", "--reps", "1", "--format", "json",
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let v = json(&o);
    assert_eq!(v["se_p"], 0.0);
    assert_eq!(v["se_n"], 0.0);
    assert_eq!(v["replications"], 1);
}

#[test]
fn simulate_all_csv() {
    let o = run(&[
        "simulate", "--family", "all", "--reps", "10", "--format", "csv",
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let out = stdout(&o);
    let lines: Vec<&str> = out.lines().collect();
    assert_eq!(lines.len(), 4);
    assert!(lines[0].starts_with("family,"));
    for (line, fam) in lines[1..].iter().zip(["gamma", "lognormal", "pareto"]) {
        assert!(line.starts_with(fam));
        assert_eq!(line.split(',').count(), lines[0].split(',').count());
    }
    assert_eq!(stderr(&o).matches("config: ").count(), 3);
}

#[test]
fn simulate_table() {
    let o = run(&["simulate", "--family", "lognormal", "--reps", "10"]);
    assert!(o.status.success());
    let out = stdout(&o);
    for col in ["N̄", "C", "N̄/C", "max(N)", "p", "s(N̄)", "s_p", "Log-normal"] {
        assert!(out.contains(col), "missing {col:?}");
    }
}

#[test]
fn simulate_is_reproducible_from_echoed_config() {
    let first = run(&[
        "simulate",
        "--family",
        "gamma",
        "--params",
        "2,1",
        "--reps",
        "40",
        "--seed",
        "9",
        "--workers",
        "1",
        "--format",
        "json",
    ]);
    assert!(first.status.success());
    let echoed = stderr(&first);
    let config = echoed
        .lines()
        .find_map(|l| l.strip_prefix("config: "))
        .unwrap();
    let mut f = NamedTempFile::new().unwrap();
    f.write_all(config.as_bytes()).unwrap();
    let out = NamedTempFile::new().unwrap();
    let second = run(&[
        "simulate",
        "--config",
        f.path().to_str().unwrap(),
        "--workers",
        "3",
        "--format",
        "json",
        "--output",
        out.path().to_str().unwrap(),
    ]);
    assert!(second.status.success(), "{}", stderr(&second));
    assert!(second.stdout.is_empty());
    assert_eq!(std::fs::read(out.path()).unwrap(), first.stdout);
}

#[test]
fn config_overrides_and_validation() {
    let mut f = NamedTempFile::new().unwrap();
    write!(f, r#"{{"distribution":{{"family":"pareto","params":{{"scale":1.0,"shape":6.0}}}},"replications":5}}"#).unwrap();
    let path = f.path().to_str().unwrap();
    let o = run(&[
        "simulate", "--config", path, "--d", "0.05", "--format", "json",
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let v = json(&o);
    assert_eq!(v["d"], 0.05);
    assert_eq!(v["replications"], 5);
    assert_eq!(v["distribution"]["params"]["shape"], 6.0);

    let mut bad = NamedTempFile::new().unwrap();
    write!(
        bad,
        r#"{{"distribution":{{"family":"gamma","params":{{"shape":2.0,"rate":1.0}}}},"reps":5}}"#
    )
    .unwrap();
    let o = run(&["simulate", "--config", bad.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(7));

    assert_eq!(run(&["simulate"]).status.code(), Some(2));
    assert_eq!(
        run(&["simulate", "--family", "all", "--params", "1,2"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(
        run(&["simulate", "--family", "gamma", "--reps", "0"])
            .status
            .code(),
        Some(7)
    );
    assert_eq!(
        run(&["simulate", "--family", "pareto", "--params", "1,3"])
            .status
            .code(),
        Some(7)
    );
}

#[test]
fn oracle_pareto() {
    let o = run(&["oracle", "--family", "pareto", "--params", "20000,5"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let v = json(&o);
    assert!((v["gini"].as_f64().unwrap() - 1.0 / 9.0).abs() < 1e-12);
    let c = v["c_opt"].as_f64().unwrap();
    assert!((c / 686.0 - 1.0).abs() <= 0.01, "C = {c}");
    assert!(v["monte_carlo"]["xi_sq_se"].as_f64().unwrap() > 0.0);
}

#[test]
fn oracle_gamma() {
    let o = run(&[
        "oracle",
        "--family",
        "gamma",
        "--params",
        "2.649,0.84",
        "--mc-budget",
        "200000",
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let c = json(&o)["c_opt"].as_f64().unwrap();
    assert!((c / 1267.0 - 1.0).abs() <= 0.01, "C = {c}");
}

#[test]
fn oracle_moment_condition() {
    let o = run(&["oracle", "--family", "pareto", "--params", "20000,3"]);
    assert_eq!(o.status.code(), Some(7));
    assert!(stderr(&o).contains("fourth moment"));
    assert!(stdout(&o).is_empty());
    assert_eq!(run(&["oracle", "--family", "all"]).status.code(), Some(2));
}
