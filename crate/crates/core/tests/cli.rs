use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use relay_bounds::sweep::{read_csv, CSV_HEADER};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_relay-bounds"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

const SMALL_SWEEP: &str = r#"
topology = "relay-near-tx"
theta_grid = [0.0, 0.7853981633974483, 1.5707963267948966]
quantities = ["upper", "lower", "sc", "pre"]
budget = 300
restarts = 1
seed = 3
"#;

fn write_config(dir: &Path, name: &str, text: &str) -> String {
    let path = dir.join(name);
    fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_owned()
}

#[test]
fn sweep_csv_is_byte_identical_across_runs_and_jobs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "s.toml", SMALL_SWEEP);
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    assert!(run(&["sweep", "--config", &cfg, "--out", a.to_str().unwrap()]).status.success());
    assert!(run(&["sweep", "--config", &cfg, "--jobs", "3", "--out", b.to_str().unwrap()]).status.success());
    let (ta, tb) = (fs::read(&a).unwrap(), fs::read(&b).unwrap());
    assert_eq!(ta, tb);

    let rows = read_csv(&a).unwrap();
    assert_eq!(rows.len(), 3);
    let text = String::from_utf8(ta).unwrap();
    assert_eq!(text.lines().next().unwrap(), CSV_HEADER.join(","));
    for line in text.lines() {
        assert_eq!(line.split(',').count(), 7);
    }
}

#[test]
fn sweep_to_stdout_leaves_unrequested_columns_empty() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "s.toml",
        "topology = \"equidistant\"\ntheta_grid = [0.0, 1.0]\nquantities = [\"lower\"]\n",
    );
    let out = run(&["sweep", "--config", &cfg, "--out", "-"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let body: Vec<&str> = text.lines().skip(1).collect();
    assert_eq!(body.len(), 2);
    for line in body {
        let f: Vec<&str> = line.split(',').collect();
        assert_eq!(f.len(), 7);
        assert!(f[1].is_empty() && f[3].is_empty() && f[4].is_empty());
        assert_eq!(f[2].parse::<f64>().unwrap(), 1.0);
    }
}

#[test]
fn svg_has_one_polyline_per_quantity() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "s.toml",
        "topology = \"relay-near-rx\"\ntheta_grid = [0.0, 1.0, 2.0]\nquantities = [\"lower\", \"sc\"]\nbudget = 200\nrestarts = 1\n",
    );
    let svg = dir.path().join("plot.svg");
    assert!(run(&["sweep", "--config", &cfg, "--format", "svg", "--out", svg.to_str().unwrap()]).status.success());
    let text = fs::read_to_string(&svg).unwrap();
    assert_eq!(text.matches("<polyline").count(), 2);
}

#[test]
fn gnuplot_writes_script_and_data() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "s.toml", "theta_grid = [0.0]\nquantities = [\"lower\"]\n");
    let gp = dir.path().join("plot.gp");
    assert!(run(&["sweep", "--config", &cfg, "--format", "gnuplot", "--out", gp.to_str().unwrap()]).status.success());
    assert!(gp.exists());
    assert_eq!(read_csv(&dir.path().join("plot.csv")).unwrap().len(), 1);
}

#[test]
fn bounds_command_prints_values() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "b.toml",
        "gamma1 = 0.5\ngamma2 = 0.5\ngamma3 = 0.5\nh1 = [[10.0, 0.0]]\nh2 = [[1.0, 0.0]]\nh3 = [[1.0]]\nquantities = [\"lower\"]\n",
    );
    let out = run(&["bounds", "--config", &cfg]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let lower = text
        .lines()
        .filter_map(|l| l.split_once('='))
        .find(|(k, _)| k.trim() == "lower_bits")
        .map(|(_, v)| v.trim().parse::<f64>().unwrap())
        .unwrap();
    assert!((lower - 1.0).abs() < 1e-9);
}

#[test]
fn small_verify_run_reports_each_expression() {
    let out = run(&["verify", "--profiles", "5", "--samples", "20000", "--seed", "1"]);
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.lines().count(), 7);
    assert!(matches!(text.lines().last(), Some("PASS") | Some("FAIL")));
}

#[test]
fn exit_codes_follow_error_kind() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(run(&["sweep", "--topology", "nowhere"]).status.code(), Some(2));

    let unknown = write_config(dir.path(), "u.toml", "colour = \"red\"\n");
    assert_eq!(run(&["sweep", "--config", &unknown]).status.code(), Some(2));

    let bad_gamma = write_config(
        dir.path(),
        "g.toml",
        "gamma1 = -0.5\ngamma2 = 0.5\ngamma3 = 0.5\nh1 = [[1.0]]\nh2 = [[1.0]]\nh3 = [[1.0]]\n",
    );
    let code = run(&["bounds", "--config", &bad_gamma]).status.code();
    assert!(matches!(code, Some(2) | Some(3)), "{code:?}");

    let missing = dir.path().join("absent.toml");
    assert_eq!(run(&["bounds", "--config", missing.to_str().unwrap()]).status.code(), Some(1));
}
