use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn gica(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gica"))
        .args(args)
        .env_remove("GICA_SEED")
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str]) -> Output {
    let out = gica(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    out
}

fn simulate_open_loop(dir: &Path) -> String {
    let file = dir.join("open_loop.csv").display().to_string();
    ok(&["simulate", "--system", "open_loop", "--b", "1", "--c", "0.5", "--n", "500", "--seed", "7", "--out", &file]);
    file
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

fn profile_argmax(path: &Path) -> f64 {
    let text = fs::read_to_string(path).unwrap();
    let mut best = (f64::NAN, f64::NEG_INFINITY);
    for line in text.lines().skip(1) {
        let (f, v) = line.split_once(',').unwrap();
        let v: f64 = v.parse().unwrap();
        if v > best.1 {
            best = (f.parse().unwrap(), v);
        }
    }
    best.0
}

#[test]
fn analyze_simulated_open_loop() {
    let dir = TempDir::new().unwrap();
    let input = simulate_open_loop(dir.path());
    let out = dir.path().join("fixed");
    let stdout = ok(&["analyze", &input, "--order", "2", "--out", out.to_str().unwrap()]).stdout;
    assert!(!stdout.is_empty());
    let report = read_json(&out.join("report.json"));
    assert!(report["F_xy"].as_f64().unwrap() > 0.0);
    let peak = profile_argmax(&out.join("gc.csv"));
    assert!((0.25..=0.35).contains(&peak), "GC peak at {peak}");
    for name in ["psd_x", "psd_y", "gi", "ga", "ga_bar"] {
        assert!(out.join(format!("{name}.csv")).exists(), "{name}.csv");
    }
    assert!(out.join("model.json").exists());
}

#[test]
fn aic_order_is_recorded() {
    let dir = TempDir::new().unwrap();
    let input = simulate_open_loop(dir.path());
    let out = dir.path().join("aic");
    ok(&["analyze", &input, "--order", "aic", "--out", out.to_str().unwrap()]);
    let info = &read_json(&out.join("report.json"))["analysis"];
    let order = info["order"].as_u64().unwrap();
    assert!((2..=14).contains(&order), "order {order}");
    assert_eq!(info["aic"].as_array().unwrap().len(), 14);
}

#[test]
fn missing_input_names_the_path() {
    let dir = TempDir::new().unwrap();
    let missing = dir.path().join("no_such_file.csv");
    let out = gica(&["analyze", missing.to_str().unwrap(), "--out", dir.path().join("o").to_str().unwrap()]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("no_such_file.csv"));
}

#[test]
fn b_sweep_autonomy_increases() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("sweep");
    ok(&[
        "theoretical", "--system", "open_loop", "--c", "0.5", "--grid", "257",
        "--sweep", "b", "--values", "0,0.2,0.4,0.6,0.8,1", "--out", out.to_str().unwrap(),
    ]);
    let text = fs::read_to_string(out.join("sweep.csv")).unwrap();
    let mut lines = text.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    let col = header.iter().position(|h| *h == "A_y").unwrap();
    let a_y: Vec<f64> = lines.map(|l| l.split(',').nth(col).unwrap().parse().unwrap()).collect();
    assert_eq!(a_y.len(), 6);
    assert!(a_y.windows(2).all(|w| w[1] > w[0]), "{a_y:?}");
}

#[test]
fn repeated_runs_are_byte_identical() {
    let dir = TempDir::new().unwrap();
    let input = simulate_open_loop(dir.path());
    let again = dir.path().join("again.csv");
    ok(&["simulate", "--system", "open_loop", "--b", "1", "--c", "0.5", "--n", "500", "--seed", "7", "--out", again.to_str().unwrap()]);
    assert_eq!(fs::read(&input).unwrap(), fs::read(&again).unwrap());

    let run = |name: &str| {
        let out = dir.path().join(name);
        ok(&[
            "analyze", &input, "--order", "2", "--grid", "257", "--surrogates", "20",
            "--seed", "3", "--out", out.to_str().unwrap(),
        ]);
        out
    };
    let (a, b) = (run("a"), run("b"));
    for file in ["report.json", "model.json", "gc.csv", "ga.csv"] {
        assert_eq!(fs::read(a.join(file)).unwrap(), fs::read(b.join(file)).unwrap(), "{file}");
    }
    let report = read_json(&a.join("report.json"));
    assert!(!report["significance"].as_array().unwrap().is_empty());
}

#[test]
fn invalid_parameters_fail() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("x.csv");
    let res = gica(&["simulate", "--system", "open_loop", "--b", "1.5", "--out", out.to_str().unwrap()]);
    assert!(!res.status.success());
    assert!(!String::from_utf8_lossy(&res.stderr).is_empty());
}

#[test]
fn plot_data_has_one_row_per_grid_point() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("plot");
    ok(&["theoretical", "--system", "closed_loop", "--d", "1", "--grid", "129", "--plot-data", "--out", out.to_str().unwrap()]);
    let text = fs::read_to_string(out.join("plot_data.txt")).unwrap();
    let mut lines = text.lines();
    let header = lines.next().unwrap();
    assert!(header.starts_with("# frequency_hz") && header.contains(" gc") && header.contains(" ga"));
    let cols = header.split_whitespace().count() - 1;
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 129);
    assert!(rows.iter().all(|r| r.split_whitespace().count() == cols));
}

#[test]
fn c_sweep_causality_increases() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("csweep");
    ok(&[
        "theoretical", "--system", "open_loop", "--b", "1", "--grid", "257",
        "--sweep", "c", "--values", "0,0.2,0.4,0.6,0.8,1", "--out", out.to_str().unwrap(),
    ]);
    let text = fs::read_to_string(out.join("sweep.csv")).unwrap();
    let f_xy: Vec<f64> = text.lines().skip(1).map(|l| l.split(',').nth(1).unwrap().parse().unwrap()).collect();
    assert!(f_xy.windows(2).all(|w| w[1] > w[0]), "{f_xy:?}");
    assert!(out.join("c_0.4").join("report.json").exists());
}
