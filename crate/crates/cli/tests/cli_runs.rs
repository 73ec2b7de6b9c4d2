use std::fs;
use std::path::PathBuf;
use std::process::{Command, Output};

use dris::experiments::{read_records, run_benchmarks, Deployment, CSV_HEADER};
use dris::Scenario;

fn dris(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dris")).args(args).output().expect("binary runs")
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("dris-cli-{}-{name}", std::process::id()));
    fs::create_dir_all(&dir).unwrap();
    dir
}

const SMALL: &str = "[system]\nbs_antennas = 4\nuser_antennas = 2\n[monte_carlo]\ntrials = 40\n[pso]\nswarm_size = 6\niterations = 5\n";

#[test]
fn echo_config_is_a_fixed_point() {
    let dir = scratch("echo");
    let first = dir.join("a.toml");
    fs::write(&first, SMALL).unwrap();
    let out = dris(&["echo-config", first.to_str().unwrap()]);
    assert!(out.status.success());
    let second = dir.join("b.toml");
    fs::write(&second, &out.stdout).unwrap();
    let again = dris(&["echo-config", second.to_str().unwrap()]);
    assert_eq!(out.stdout, again.stdout);
}

#[test]
fn sweep_csv_is_byte_identical_across_runs_and_thread_counts() {
    let dir = scratch("sweep");
    let cfg = dir.join("s.toml");
    fs::write(&cfg, SMALL).unwrap();
    let run = |threads: &str, name: &str| {
        let path = dir.join(name);
        let out = dris(&[
            "--threads",
            threads,
            "sweep",
            cfg.to_str().unwrap(),
            "--elements",
            "4",
            "--axis",
            "snr",
            "--values",
            "-10,0,10",
            "--methods",
            "asymptotic,monte_carlo",
            "-o",
            path.to_str().unwrap(),
        ]);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        fs::read(path).unwrap()
    };
    let a = run("1", "a.csv");
    let b = run("1", "b.csv");
    let c = run("3", "c.csv");
    assert_eq!(a, b);
    assert_eq!(a, c);
    let text = String::from_utf8(a).unwrap();
    assert_eq!(text.lines().next(), Some(CSV_HEADER));
    let records = read_records(text.as_bytes()).unwrap();
    assert_eq!(records.len(), 6);
    let axis: Vec<f64> = records.iter().map(|r| r.axis_value).collect();
    assert_eq!(axis, [-10.0, -10.0, 0.0, 0.0, 10.0, 10.0]);
}

#[test]
fn timing_column_only_on_request() {
    let out = dris(&["sweep", "--elements", "4", "--axis", "snr", "--values", "0", "--timing"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.lines().next().unwrap().ends_with(",wall_ms"));
}

#[test]
fn exit_codes_distinguish_errors_from_failed_checks() {
    let dir = scratch("exit");
    let bad = dir.join("bad.toml");
    fs::write(&bad, "[system]\nbs_antennas = 0\n").unwrap();
    let out = dris(&["validate", bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("system.bs_antennas"));

    let cfg = dir.join("ok.toml");
    fs::write(&cfg, SMALL).unwrap();
    let strict = dris(&["validate", cfg.to_str().unwrap(), "--elements", "4", "--snr", "0", "--threshold", "0"]);
    assert_eq!(strict.status.code(), Some(1));
    let loose = dris(&["validate", cfg.to_str().unwrap(), "--elements", "4", "--snr", "0", "--threshold", "1"]);
    assert_eq!(loose.status.code(), Some(0));
}

#[test]
fn optimize_writes_trace_and_dumps() {
    let dir = scratch("optimize");
    let cfg = dir.join("s.toml");
    fs::write(&cfg, SMALL).unwrap();
    let trace = dir.join("trace.csv");
    let dumps = dir.join("dump");
    let out = dris(&[
        "optimize",
        cfg.to_str().unwrap(),
        "--elements",
        "4",
        "-o",
        trace.to_str().unwrap(),
        "--dump-dir",
        dumps.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = fs::read_to_string(trace).unwrap();
    assert!(text.starts_with("iteration,rate_nats,rate_bits,q_hash,phase_hash\n"));
    let q = dris_core::io::read_matrix(std::io::BufReader::new(fs::File::open(dumps.join("q.csv")).unwrap())).unwrap();
    assert_eq!(q.shape(), (4, 4));
    let phases = fs::read_to_string(dumps.join("phases.csv")).unwrap();
    assert_eq!(phases.lines().count(), 1 + 8);
}

#[test]
fn single_reflection_deployment_equals_full_without_inter_surface_link() {
    let s = Scenario::from_toml_str(SMALL).unwrap().with_elements(4);
    let results = run_benchmarks(&s, false).unwrap();
    let rate = |d: Deployment| results.iter().find(|r| r.deployment == d).unwrap().baseline_nats;
    let profile = s.profile().unwrap();
    let stripped = Deployment::Full.apply(&profile.with_link_removed(dris_core::channel::Link::InterRis));
    let power = s.power_watts().unwrap();
    let direct = dris::experiments::baseline_rate(&s, &stripped, power).unwrap();
    assert!((direct - rate(Deployment::SingleReflection)).abs() < 1e-8);
}
