use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn bpc(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bpc"))
        .args(args)
        .env_remove("BPC_SEED")
        .env("SOURCE_DATE_EPOCH", "1700000000")
        .output()
        .expect("run bpc")
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| {
        panic!(
            "stdout is not JSON ({e}): {}\nstderr: {}",
            String::from_utf8_lossy(&out.stdout),
            String::from_utf8_lossy(&out.stderr)
        )
    })
}

fn write(dir: &TempDir, name: &str, body: &str) -> String {
    let path = dir.path().join(name);
    std::fs::write(&path, body).unwrap();
    path.display().to_string()
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn coefficient(y: &Value, k: usize) -> (f64, f64) {
    let c = &y["y"][k];
    (c[0].as_f64().unwrap(), c[1].as_f64().unwrap())
}

fn alternating_data(dir: &TempDir, kc: &str) -> String {
    let out = bpc(&[
        "generate",
        "--preset",
        "alternating",
        "--kc",
        kc,
        "-o",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    dir.path().join("y.json").display().to_string()
}

#[test]
fn generate_alternating_preset() {
    let dir = TempDir::new().unwrap();
    let y = read_json(&dir.path().join(alternating_data(&dir, "2")));
    assert_eq!(y["kc"], 2);
    let expected = [(0.0, 0.0), (0.0, 0.0), (4.0, 0.0)];
    for (k, (re, im)) in expected.into_iter().enumerate() {
        let (a, b) = coefficient(&y, k);
        assert!(
            (a - re).abs() < 1e-12 && (b - im).abs() < 1e-12,
            "k={k}: {a} {b}"
        );
    }
    assert_eq!(y["manifest"]["command"], "generate");
    let measure = read_json(&dir.path().join("measure.json"));
    assert_eq!(measure["atoms"].as_array().unwrap().len(), 4);
}

#[test]
fn generate_explicit_atom() {
    let out = bpc(&["generate", "--atoms", "0:1", "--kc", "2"]);
    assert_eq!(out.status.code(), Some(0));
    let bundle = json(&out);
    for k in 0..=2 {
        let c = &bundle["observations"]["y"][k];
        assert_eq!((c[0].as_f64().unwrap(), c[1].as_f64().unwrap()), (1.0, 0.0));
    }
}

#[test]
fn generate_is_deterministic_per_seed() {
    let a = bpc(&[
        "generate",
        "--random-nonneg",
        "3",
        "--kc",
        "8",
        "--seed",
        "7",
    ]);
    let b = bpc(&[
        "generate",
        "--random-nonneg",
        "3",
        "--kc",
        "8",
        "--seed",
        "7",
    ]);
    let c = bpc(&[
        "generate",
        "--random-nonneg",
        "3",
        "--kc",
        "8",
        "--seed",
        "8",
    ]);
    assert_eq!(a.stdout, b.stdout);
    assert_ne!(json(&a)["measure"], json(&c)["measure"]);
    assert_eq!(json(&a)["manifest"]["seed"], 7);
}

#[test]
fn seed_falls_back_to_environment() {
    let run = |seed: &str| {
        Command::new(env!("CARGO_BIN_EXE_bpc"))
            .args(["generate", "--random-signed", "3", "--kc", "4"])
            .env("BPC_SEED", seed)
            .env("SOURCE_DATE_EPOCH", "0")
            .output()
            .unwrap()
    };
    let from_env = json(&run("5"));
    let from_flag = json(&bpc(&[
        "generate",
        "--random-signed",
        "3",
        "--kc",
        "4",
        "--seed",
        "5",
    ]));
    assert_eq!(from_env["measure"], from_flag["measure"]);
    assert_eq!(from_env["manifest"]["seed"], 5);
}

#[test]
fn generate_rejects_bad_specs() {
    assert_eq!(
        bpc(&["generate", "--atoms", "0;1", "--kc", "2"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(
        bpc(&["generate", "--random-signed", "1", "--kc", "2"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(bpc(&["generate", "--kc", "2"]).status.code(), Some(2));
}

#[test]
fn classify_exit_codes() {
    let dir = TempDir::new().unwrap();
    let out = bpc(&["classify", &alternating_data(&dir, "2")]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(json(&out)["regime"], "Indefinite");

    let identity = write(&dir, "id.json", r#"{"kc":2,"y":[[1,0],[0,0],[0,0]]}"#);
    let out = bpc(&["classify", &identity]);
    assert_eq!(out.status.code(), Some(10));
    assert_eq!(json(&out)["regime"], "PositiveDefinite");

    let bad = write(&dir, "bad.json", "{not json");
    assert_eq!(bpc(&["classify", &bad]).status.code(), Some(2));
    let complex_mean = write(&dir, "c.json", r#"{"kc":1,"y":[[1,1],[0,0]]}"#);
    assert_eq!(bpc(&["classify", &complex_mean]).status.code(), Some(2));
    assert_eq!(
        bpc(&["classify", "/nonexistent/y.json"]).status.code(),
        Some(2)
    );
}

#[test]
fn solve_alternating_measure_with_certificate() {
    let dir = TempDir::new().unwrap();
    let out = bpc(&["solve", "--certify", &alternating_data(&dir, "2")]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert_eq!(v["kind"], "unique_signed");
    assert_eq!(v["solution"]["atoms"].as_array().unwrap().len(), 4);
    assert!((v["min_tv"].as_f64().unwrap() - 4.0).abs() < 1e-9);
    assert_eq!(v["certificate_check"]["certifies_uniqueness"], true);
    assert!(v["manifest"]["tolerances"]["certificate"].is_number());
}

#[test]
fn solve_single_atom() {
    let dir = TempDir::new().unwrap();
    let y = write(&dir, "y.json", r#"{"kc":2,"y":[[1,0],[1,0],[1,0]]}"#);
    let out = bpc(&["solve", &y]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert_eq!(v["kind"], "unique_nonnegative");
    assert_eq!(v["solution"]["atoms"].as_array().unwrap().len(), 1);
}

#[test]
fn solve_definite_data_with_oracle() {
    let dir = TempDir::new().unwrap();
    let y = write(&dir, "y.json", r#"{"kc":1,"y":[[2,0],[1,0]]}"#);
    let out = bpc(&["solve", "--oracle", "--certify", &y]);
    assert_eq!(out.status.code(), Some(10));
    let v = json(&out);
    assert_eq!(v["kind"], "infinitely_many_positive");
    assert!((v["min_tv"].as_f64().unwrap() - 2.0).abs() < 1e-12);
    assert!(v["oracle"]["gap"].as_f64().unwrap().abs() <= 1e-4);
    assert_eq!(v["certificate_check"]["certifies_optimality"], true);
}

#[test]
fn solve_accepts_generate_bundle() {
    let dir = TempDir::new().unwrap();
    let out = bpc(&["generate", "--atoms", "1:0.5,4:-0.8", "--kc", "3"]);
    let bundle = write(&dir, "bundle.json", &String::from_utf8(out.stdout).unwrap());
    let out = bpc(&["solve", &bundle]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(json(&out)["kind"], "unique_signed");
}

#[test]
fn payloads_are_reproducible_apart_from_the_timestamp() {
    let dir = TempDir::new().unwrap();
    let y = alternating_data(&dir, "3");
    let strip = |out: Output| {
        let mut v = json(&out);
        v["manifest"].as_object_mut().unwrap().remove("timestamp");
        v
    };
    let a = strip(bpc(&["solve", "--certify", "--oracle", &y]));
    let b = strip(
        Command::new(env!("CARGO_BIN_EXE_bpc"))
            .args(["solve", "--certify", "--oracle", &y])
            .env("SOURCE_DATE_EPOCH", "42")
            .output()
            .unwrap(),
    );
    assert_eq!(a, b);
}

#[test]
fn grid_solve_pins_the_mean() {
    let dir = TempDir::new().unwrap();
    let y = alternating_data(&dir, "2");
    let trace = dir.path().join("trace.csv");
    let out = bpc(&[
        "grid-solve",
        &y,
        "--m",
        "1",
        "--p",
        "64",
        "--trace",
        trace.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    let f: Vec<f64> = v["samples"]["f"]
        .as_array()
        .unwrap()
        .iter()
        .map(|x| x.as_f64().unwrap())
        .collect();
    let mean = f.iter().sum::<f64>() / f.len() as f64;
    assert!(mean.abs() < 1e-9, "mean {mean}");
    // Piecewise constant on 64 cells sampled 8 times each.
    for cell in f.chunks(8) {
        assert!(cell.iter().all(|&x| (x - cell[0]).abs() < 1e-12));
    }
    let innovation: f64 = v["innovation"]
        .as_array()
        .unwrap()
        .iter()
        .map(|x| x.as_f64().unwrap())
        .sum();
    assert!(innovation.abs() < 1e-9);
    let csv = std::fs::read_to_string(trace).unwrap();
    assert!(csv.starts_with("iter,objective,primal_res,dual_res\n"));
}

#[test]
fn grid_solve_rejects_coarse_grid() {
    let dir = TempDir::new().unwrap();
    let y = alternating_data(&dir, "2");
    assert_eq!(
        bpc(&["grid-solve", &y, "--m", "3", "--p", "2"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(
        bpc(&["grid-solve", &y, "--m", "2", "--p", "16", "--lambda", "-1"])
            .status
            .code(),
        Some(2)
    );
}

#[test]
fn bench_writes_csv_and_summary() {
    let dir = TempDir::new().unwrap();
    let csv = dir.path().join("conv.csv");
    let out = bpc(&[
        "bench-convergence",
        "--p-list",
        "16,32,64",
        "--runs",
        "2",
        "--seed",
        "3",
        "-o",
        csv.to_str().unwrap(),
    ]);
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let text = std::fs::read_to_string(&csv).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "P,mean_linf_error,std_linf_error,runs");
    assert_eq!(lines.len(), 4);
    assert!(lines[1].starts_with("16,"));
    let summary = read_json(&csv.with_extension("json"));
    assert!(summary["slope"].is_number());
    assert_eq!(summary["reference"], "minimizer");
    assert_eq!(summary["manifest"]["seed"], 3);
    assert!(String::from_utf8_lossy(&out.stderr).contains("slope"));

    let stdout = bpc(&[
        "bench-convergence",
        "--p-list",
        "16,32",
        "--runs",
        "1",
        "--reference",
        "truth",
    ]);
    assert_eq!(stdout.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&stdout.stdout).starts_with("P,mean_linf_error"));
    assert_eq!(
        bpc(&["bench-convergence", "--m", "1", "--runs", "1"])
            .status
            .code(),
        Some(2)
    );
}
