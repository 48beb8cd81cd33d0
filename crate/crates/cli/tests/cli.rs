use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn data(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/data").join(name)
}

fn golden(name: &str) -> String {
    std::fs::read_to_string(Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden").join(name)).unwrap()
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_saddle-h2")).args(args).output().unwrap()
}

fn ok(args: &[&str]) -> String {
    let out = run(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn ok_json(args: &[&str]) -> Value {
    serde_json::from_str(&ok(args)).unwrap()
}

/// Exit code and the error object printed on stderr.
fn fails(args: &[&str]) -> (i32, Value) {
    let out = run(args);
    let code = out.status.code().unwrap();
    let stderr = String::from_utf8(out.stderr).unwrap();
    let last = stderr.lines().last().unwrap_or_default();
    (code, serde_json::from_str(last).unwrap_or(Value::Null))
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn manifest_of(output: &Path) -> PathBuf {
    let mut s = output.as_os_str().to_owned();
    s.push(".manifest.json");
    PathBuf::from(s)
}

fn csv_rows(text: &str) -> Vec<csv::StringRecord> {
    csv::Reader::from_reader(text.as_bytes()).records().map(Result::unwrap).collect()
}

fn col(rows: &[csv::StringRecord], i: usize) -> Vec<f64> {
    rows.iter().map(|r| r[i].parse().unwrap()).collect()
}

#[test]
fn vanilla_uniform_problem_gives_three() {
    let v = data("vanilla.json");
    let r = ok_json(&["analyze", path_str(&v)]);
    assert!((r["h2sq_numeric"].as_f64().unwrap() - 3.0).abs() < 1e-9);
    assert!((r["h2sq_formula"].as_f64().unwrap() - 3.0).abs() < 1e-12);
    assert_eq!(r["hurwitz"], true);
    assert!(r["spectral_abscissa"].as_f64().unwrap() < 0.0);
    let x: Vec<f64> = serde_json::from_value(r["equilibrium"]["x"].clone()).unwrap();
    assert!(x.iter().all(|&xi| (xi - 0.4).abs() < 1e-12));
}

#[test]
fn regularization_lowers_the_norm() {
    let v = data("vanilla.json");
    let r = ok_json(&["analyze", path_str(&v), "--variant", "regularized", "--eps", "0.5"]);
    assert!(r["h2sq_numeric"].as_f64().unwrap() < 3.0);
    assert_eq!(r["eps"], 0.5);
}

#[test]
fn malformed_problem_files_exit_2_and_name_the_key() {
    let dir = TempDir::new().unwrap();
    let cases = [
        (r#"{"Q": [1, 1], "c": [0, 0], "S": [[1, "x"]], "W_b": [[1]], "b": [0]}"#, "S[0][1]"),
        (r#"{"Q": [1, 1], "c": [0, 0], "S": [[1, 1]], "b": [0]}"#, "W_b"),
        (r#"{"Q": [1, 1], "c": [0, 0], "S": [[1, 1]], "W_b": [[1]], "b": [0], "t_b": -1}"#, "t_b"),
        (r#"{"Q": [1, 1], "c": [0, 0], "#, "<root>"),
    ];
    for (i, (text, key)) in cases.iter().enumerate() {
        let p = dir.path().join(format!("bad{i}.json"));
        std::fs::write(&p, text).unwrap();
        let (code, err) = fails(&["analyze", path_str(&p)]);
        assert_eq!(code, 2, "{text}");
        assert_eq!(err["error"]["key"], *key, "{text}");
        assert_eq!(err["exit_code"], 2);
    }
}

#[test]
fn invalid_inputs_exit_2() {
    let v = data("vanilla.json");
    assert_eq!(fails(&["analyze", "/nonexistent/problem.json"]).0, 2);
    assert_eq!(fails(&["analyze", path_str(&v), "--variant", "regularized"]).0, 2);
    assert_eq!(fails(&["analyze", path_str(&v), "--variant", "add_sp"]).0, 2);
    assert_eq!(fails(&["analyze", path_str(&v), "--variant", "augmented", "--rho", "-1"]).0, 2);
    assert_eq!(fails(&["analyze", path_str(&v), "--variant", "bogus"]).0, 2);
    assert_eq!(fails(&["analyze", "--variant", "ra_dist", "--graph", "ring"]).0, 2);
}

#[test]
fn sweep_header_is_pinned() {
    let v = data("vanilla.json");
    let out = ok(&["sweep", path_str(&v), "--variant", "augmented", "--param", "rho", "--grid", "0:10:3"]);
    assert_eq!(out.lines().next().unwrap(), golden("sweep_header.csv").trim_end());
    let rows = csv_rows(&out);
    assert_eq!(col(&rows, 2), vec![0.0, 5.0, 10.0]);
    assert_eq!(col(&rows, 5)[0], 0.0);
}

#[test]
fn empty_or_malformed_grids_exit_2() {
    let v = data("vanilla.json");
    for grid in ["0:1:0", "1:2", "x:1:3"] {
        let (code, _) = fails(&["sweep", path_str(&v), "--variant", "augmented", "--param", "rho", "--grid", grid]);
        assert_eq!(code, 2, "{grid}");
    }
    let (code, _) = fails(&["sweep", path_str(&v), "--variant", "augmented", "--param", "eps", "--grid", "0:1:3"]);
    assert_eq!(code, 2);
}

fn eps_sweep(file: &str) -> (Vec<f64>, Vec<f64>) {
    let p = data(file);
    let out = ok(&[
        "sweep", path_str(&p), "--variant", "regularized", "--param", "eps", "--grid", "1e-3:1e2:12", "--scale", "log",
    ]);
    let rows = csv_rows(&out);
    for r in &rows {
        let (numeric, formula): (f64, f64) = (r[3].parse().unwrap(), r[4].parse().unwrap());
        assert!((numeric - formula).abs() < 1e-8 * numeric);
    }
    (col(&rows, 2), col(&rows, 5))
}

#[test]
fn regularization_gap_curves() {
    // q = 3: the gap rises toward t_b²/(2τ_ν) = 1/2.
    let (eps, gap) = eps_sweep("regularization_q3.json");
    assert!(gap.iter().all(|&g| g > 0.0));
    let rising: Vec<f64> = gap.iter().zip(&eps).filter(|(_, &e)| e <= 1.0).map(|(&g, _)| g).collect();
    assert!(rising.windows(2).all(|w| w[1] > w[0]));
    assert!((gap.last().unwrap() - 0.5).abs() < 0.01);

    // q = 0.05: the best gap sits at an interior ε.
    let (_, gap) = eps_sweep("regularization_q005.json");
    let max = gap.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    assert!(max > *gap.last().unwrap() && max > gap[0]);
}

#[test]
fn add_sp_sweep_stays_below_its_bound() {
    let p = data("agents_on_path.json");
    let out = ok(&["sweep", path_str(&p), "--variant", "add_sp", "--param", "rho", "--grid", "0:10:5"]);
    let rows = csv_rows(&out);
    let h2 = col(&rows, 3);
    assert!(h2[1..].iter().all(|&v| v < h2[0]));
    let r = ok_json(&["analyze", path_str(&p), "--variant", "add_sp", "--graph", "ring"]);
    assert_eq!(r["hurwitz"], true);
}

#[test]
fn table1_output_and_trends() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("table1.csv");
    let res = run(&["table1", "--n", "4", "--graph", "line", "--out", path_str(&out)]);
    assert!(res.status.success());
    let stderr = String::from_utf8(res.stderr).unwrap();
    assert!(stderr.contains("RA_dist_dual nonincreasing=true"));
    let text = std::fs::read_to_string(&out).unwrap();
    assert_eq!(text.lines().next().unwrap(), golden("table1_header.csv").trim_end());
    let rows = csv_rows(&text);
    assert_eq!(rows.len(), 24);
    for r in rows.iter().filter(|r| &r[1] == "0") {
        assert!((r[2].parse::<f64>().unwrap() - 2.0).abs() < 1e-9);
    }
    assert!(manifest_of(&out).exists());

    let ring = ok(&["table1", "--n", "4", "--graph", "ring", "--rho-grid", "0,1"]);
    let dist: Vec<_> = csv_rows(&ring).into_iter().filter(|r| &r[0] == "RA_dist").collect();
    assert!(dist.iter().all(|r| r[2].is_empty() && !r[5].is_empty()));
    assert_eq!(fails(&["table1", "--rho-grid", ""]).0, 2);
}

#[test]
fn two_agent_simulation_agrees_with_gramian() {
    let p = data("two_agents.json");
    for variant in ["ra_cent", "ra_dist", "ra_cent_dual", "ra_dist_dual"] {
        let r = ok_json(&["simulate", path_str(&p), "--variant", variant, "--seed", "2"]);
        let est = r["estimate"]["variance_estimate"].as_f64().unwrap();
        let se = r["estimate"]["standard_error"].as_f64().unwrap();
        let dt = r["config"]["dt"].as_f64().unwrap();
        assert!((r["agreement"]["h2sq_gramian"].as_f64().unwrap() - 1.0).abs() < 1e-9);
        assert!((est - 1.0).abs() < 3.0 * se + 2.0 * dt, "{variant}: {est} ± {se}");
    }
}

#[test]
fn simulation_reruns_are_identical() {
    let v = data("vanilla.json");
    let args = ["simulate", path_str(&v), "--dt", "0.01", "--horizon", "60", "--burn-in", "10", "--trials", "4", "--seed", "9"];
    assert_eq!(ok(&args), ok(&args));
}

#[test]
fn large_step_reports_overflow() {
    let v = data("vanilla.json");
    let (code, err) = fails(&["simulate", path_str(&v), "--dt", "10", "--horizon", "1000", "--burn-in", "10", "--trials", "2"]);
    assert_eq!(code, 3);
    assert_eq!(err["error"]["kind"], "simulation_overflow");
    assert!(err["error"]["message"].as_str().unwrap().contains("reduce dt"));
}

#[test]
fn trajectory_csv_has_labelled_columns() {
    let dir = TempDir::new().unwrap();
    let traj = dir.path().join("traj.csv");
    ok(&[
        "simulate", "--variant", "ra_dist_dual", "--n", "2", "--rho", "1", "--dt", "0.01", "--horizon", "20",
        "--burn-in", "5", "--trials", "2", "--trajectory", path_str(&traj), "--stride", "10",
    ]);
    let text = std::fs::read_to_string(&traj).unwrap();
    assert_eq!(text.lines().next().unwrap(), golden("trajectory_ra_dist_dual_n2_header.csv").trim_end());
    assert_eq!(csv_rows(&text).len(), 201);
    // A trajectory without --out still gets a manifest.
    assert!(manifest_of(&traj).exists());
}

#[test]
fn replay_reproduces_outputs() {
    let dir = TempDir::new().unwrap();
    let v = data("vanilla.json");
    let sim = dir.path().join("sim.json");
    let traj = dir.path().join("traj.csv");
    ok(&[
        "simulate", path_str(&v), "--variant", "augmented", "--rho", "2", "--dt", "0.01", "--horizon", "40",
        "--burn-in", "5", "--trials", "3", "--seed", "17", "--trajectory", path_str(&traj), "--stride", "50",
        "--out", path_str(&sim),
    ]);
    let manifest: Value = serde_json::from_str(&std::fs::read_to_string(manifest_of(&sim)).unwrap()).unwrap();
    assert_eq!(manifest["command"], "simulate");
    assert_eq!(manifest["seed"], 17);
    assert_eq!(manifest["version"], env!("CARGO_PKG_VERSION"));
    assert_eq!(manifest["problem"]["b"][0], 2);
    assert!(manifest["timestamp_unix"].as_u64().unwrap() > 0);

    let again = dir.path().join("again.json");
    ok(&["replay", path_str(&manifest_of(&sim)), "--out", path_str(&again)]);
    assert_eq!(std::fs::read(&sim).unwrap(), std::fs::read(&again).unwrap());
    let again_traj = dir.path().join("again.json.trajectory.csv");
    assert_eq!(std::fs::read(&traj).unwrap(), std::fs::read(again_traj).unwrap());

    // The problem is inlined, so the replay survives the file disappearing.
    let copy = dir.path().join("problem.json");
    std::fs::copy(&v, &copy).unwrap();
    let sweep = dir.path().join("sweep.csv");
    ok(&["sweep", path_str(&copy), "--variant", "augmented", "--param", "rho", "--grid", "0:4:5", "--out", path_str(&sweep)]);
    std::fs::remove_file(&copy).unwrap();
    let sweep2 = dir.path().join("sweep2.csv");
    ok(&["replay", path_str(&manifest_of(&sweep)), "--out", path_str(&sweep2)]);
    assert_eq!(std::fs::read(&sweep).unwrap(), std::fs::read(&sweep2).unwrap());
}
