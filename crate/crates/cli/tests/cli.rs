use std::fs;
use std::path::PathBuf;
use std::process::{Command, Output};

use bellsim_cli::format::{flatten, scalar_text};
use serde_json::Value;

fn bellsim(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bellsim"))
        .args(args)
        .env_remove("BELLSIM_SEED")
        .output()
        .expect("bellsim should run")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn golden_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/golden").join(name)
}

/// Compares stdout with a golden file. Set `BELLSIM_UPDATE_GOLDEN=1` to
/// rewrite the files.
fn check_golden(name: &str, args: &[&str]) {
    let out = bellsim(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    let text = stdout(&out);
    let path = golden_path(name);
    if std::env::var_os("BELLSIM_UPDATE_GOLDEN").is_some() {
        fs::write(&path, &text).unwrap();
    }
    let expected = fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
    assert_eq!(text, expected, "golden mismatch for {name}");
}

const SIMULATE: &[&str] = &[
    "simulate", "--model", "lhv-ref", "--a-deg", "0", "--b-deg", "22.5", "--c-deg", "45", "--d-deg",
    "67.5", "--eps", "0.1", "--delta-a", "0.1", "--delta-b", "0.2", "--trials", "20000", "--seed", "11",
];
const COIN: &[&str] = &["coin", "--eps", "0.2", "--trials", "50000", "--seed", "5"];

#[test]
fn golden_analytic() {
    check_golden("analytic.json", &["analytic", "--model", "qm", "--optimal", "--eps", "0.05"]);
}

#[test]
fn golden_simulate_across_shards() {
    for shards in ["1", "8"] {
        let mut args = SIMULATE.to_vec();
        args.extend(["--shards", shards]);
        check_golden("simulate.json", &args);
    }
}

#[test]
fn golden_coin_across_shards() {
    for shards in ["1", "8"] {
        let mut args = COIN.to_vec();
        args.extend(["--shards", shards]);
        check_golden("coin.json", &args);
    }
}

#[test]
fn golden_loopholes() {
    check_golden("loopholes_threshold.json", &["loopholes", "threshold", "--s-ideal", "4"]);
    check_golden(
        "loopholes_overlap.json",
        &["loopholes", "overlap", "--n", "20000", "--ntot-list", "20000,100000,1000000"],
    );
    check_golden(
        "loopholes_s_delta_range.json",
        &["loopholes", "s-delta-range", "--corr", "0.5,-0.5,0.5,0.5", "--deltas", "2,-2,1,1"],
    );
    check_golden("loopholes_fair_sampling.json", &["loopholes", "fair-sampling", "--n", "4", "--phi", "0.5"]);
}

fn numeric_rows_from_json(text: &str) -> Vec<(String, String)> {
    let v: Value = serde_json::from_str(text).unwrap();
    flatten(&v).into_iter().map(|(k, v)| (k, scalar_text(&v))).collect()
}

fn rows_from_csv(text: &str) -> Vec<(String, String)> {
    let mut reader = csv::Reader::from_reader(text.as_bytes());
    reader
        .records()
        .map(|r| {
            let r = r.unwrap();
            (r[0].to_string(), r[1].to_string())
        })
        .collect()
}

#[test]
fn csv_and_json_carry_the_same_numbers() {
    let commands: Vec<Vec<&str>> = vec![
        vec!["analytic", "--model", "lhv-ref", "--a", "0", "--b", "0.4", "--c", "0.8", "--d", "1.2", "--eps", "0.1"],
        SIMULATE.to_vec(),
        COIN.to_vec(),
        vec!["loopholes", "overlap", "--n", "5", "--ntot-list", "5,10,100"],
    ];
    for args in commands {
        let json = stdout(&bellsim(&args));
        let mut csv_args = args.clone();
        csv_args.extend(["--format", "csv"]);
        let csv = stdout(&bellsim(&csv_args));
        let from_json = numeric_rows_from_json(&json);
        let from_csv = rows_from_csv(&csv);
        assert_eq!(from_json.len(), from_csv.len(), "{args:?}");
        for ((kj, vj), (kc, vc)) in from_json.iter().zip(&from_csv) {
            assert_eq!(kj, kc);
            match (vj.parse::<f64>(), vc.parse::<f64>()) {
                (Ok(a), Ok(b)) => assert_eq!(a.to_bits(), b.to_bits(), "{kj}"),
                _ => assert_eq!(vj, vc, "{kj}"),
            }
        }
    }
}

#[test]
fn report_round_trips() {
    let text = stdout(&bellsim(COIN));
    let report: bellsim_cli::report::Report = serde_json::from_str(&text).unwrap();
    assert_eq!(report.schema_version, "1");
    assert_eq!(report.command, "coin");
    assert_eq!(report.provenance.seed, Some(5));
    assert_eq!(report.render(bellsim_cli::args::Format::Json), text);
}

#[test]
fn exit_codes() {
    assert_eq!(bellsim(&["simulate", "--trials", "0"]).status.code(), Some(2));
    assert_eq!(bellsim(&["analytic", "--bogus"]).status.code(), Some(2));
    assert_eq!(bellsim(&["analytic", "--model", "qm"]).status.code(), Some(2));
    assert_eq!(
        bellsim(&["analytic", "--a", "0", "--b", "0", "--c", "0", "--d-deg", "3"]).status.code(),
        Some(2)
    );
    assert_eq!(bellsim(&["coin", "--eps", "1.5"]).status.code(), Some(2));
    assert_eq!(bellsim(&["loopholes", "threshold", "--s-ideal", "2"]).status.code(), Some(2));
    assert_eq!(bellsim(&["loopholes", "overlap", "--n", "5", "--ntot-list", "4"]).status.code(), Some(2));
    assert_eq!(bellsim(&["loopholes", "fair-sampling", "--n", "10", "--phi", "0.25"]).status.code(), Some(2));
    assert_eq!(bellsim(&["--help"]).status.code(), Some(0));
}

#[test]
fn self_check_failure_exits_three() {
    let mut args = bellsim_cli::args::SimulateArgs {
        analytic: bellsim_cli::args::AnalyticArgs {
            model: bellsim_cli::args::ModelArg::Qm,
            settings: bellsim_cli::args::SettingsArgs {
                optimal: true,
                a: None, b: None, c: None, d: None,
                a_deg: None, b_deg: None, c_deg: None, d_deg: None,
            },
            noise: bellsim_cli::args::NoiseArgs { eps: None, eps1: None, eps2: None, eps3: None, eps4: None },
            resolution: 1,
        },
        trials: 2_000,
        seed: 1,
        shards: Some(1),
        delta_a: None,
        delta_b: None,
        class_rates: None,
    };
    let ok = bellsim_cli::commands::cmd_simulate(&args).unwrap();
    assert!(ok.self_check_passed);
    // one quadrature node gives the LHV run a badly wrong expectation
    args.analytic.model = bellsim_cli::args::ModelArg::LhvRef;
    args.analytic.settings = bellsim_cli::args::SettingsArgs {
        optimal: false,
        a: Some(0.0), b: Some(0.3), c: Some(0.9), d: Some(1.4),
        a_deg: None, b_deg: None, c_deg: None, d_deg: None,
    };
    args.trials = 200_000;
    let bad = bellsim_cli::commands::cmd_simulate(&args).unwrap();
    assert!(!bad.self_check_passed);

    let out = bellsim(&[
        "simulate", "--model", "lhv-ref", "--a", "0", "--b", "0.3", "--c", "0.9", "--d", "1.4",
        "--resolution", "1", "--trials", "200000",
    ]);
    assert_eq!(out.status.code(), Some(3));
    assert!(!out.stdout.is_empty());
}

#[test]
fn seed_comes_from_environment() {
    let run = |env: Option<&str>, extra: &[&str]| {
        let mut cmd = Command::new(env!("CARGO_BIN_EXE_bellsim"));
        cmd.args(["coin", "--eps", "0.3", "--trials", "1000"]).args(extra);
        match env {
            Some(v) => cmd.env("BELLSIM_SEED", v),
            None => cmd.env_remove("BELLSIM_SEED"),
        };
        serde_json::from_slice::<Value>(&cmd.output().unwrap().stdout).unwrap()
    };
    assert_eq!(run(Some("42"), &[])["provenance"]["seed"], 42);
    assert_eq!(run(None, &[])["provenance"]["seed"], 0);
    assert_eq!(run(Some("42"), &["--seed", "9"])["provenance"]["seed"], 9);
}

#[test]
fn config_file_supplies_flags() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("run.conf");
    fs::write(
        &path,
        "# coin run\neps = 0.2\ntrials = 50000\nseed = 99\n",
    )
    .unwrap();
    let p = path.to_str().unwrap();

    let from_file = stdout(&bellsim(&["coin", "--config", p, "--seed", "5"]));
    let from_flags = stdout(&bellsim(COIN));
    assert_eq!(from_file, from_flags, "flags override file values");

    fs::write(&path, "optimal = true\nmodel = qm\neps = 0.05\n").unwrap();
    let out = bellsim(&["analytic", "--config", p]);
    assert!(out.status.success());
    assert_eq!(stdout(&out), fs::read_to_string(golden_path("analytic.json")).unwrap());

    // explicit angles on the command line replace the file's angle choice
    let out = bellsim(&["analytic", "--config", p, "--a-deg", "0", "--b-deg", "0", "--c-deg", "0", "--d-deg", "0"]);
    assert!(out.status.success());
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["results"]["correlations"]["e_ab"].as_f64(), Some(1.0));

    fs::write(&path, "trials = 10\n").unwrap();
    assert_eq!(bellsim(&["analytic", "--config", p, "--optimal"]).status.code(), Some(2));
    assert_eq!(bellsim(&["analytic", "--config", "/nonexistent/x.conf"]).status.code(), Some(2));
}
