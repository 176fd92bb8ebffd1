use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn imd2(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_imd2"))
        .args(args)
        .output()
        .unwrap()
}

fn ok(args: &[&str]) -> Output {
    let out = imd2(args);
    assert!(
        out.status.success(),
        "imd2 {:?} failed: {}",
        args,
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn json(p: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(p).unwrap()).unwrap()
}

fn small_chain(dir: &Path) -> PathBuf {
    let p = dir.join("chain.toml");
    std::fs::write(
        &p,
        "[ofdm]\nn_symbols = 20\n[chain]\nnoise_floor_db = -20.0\n",
    )
    .unwrap();
    p
}

fn generate(dir: &Path, name: &str) -> PathBuf {
    let out = dir.join(name);
    let cfg = small_chain(dir);
    ok(&["generate", "--config", s(&cfg), "--out", s(&out)]);
    out.join("dataset.csv")
}

#[test]
fn generate_default_row_count_and_sidecar() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("g");
    ok(&["generate", "--out", s(&out)]);
    let text = std::fs::read_to_string(out.join("dataset.csv")).unwrap();
    assert_eq!(text.lines().count() - 1, 160 * (64 + 16));
    let side = json(&out.join("dataset.json"));
    assert_eq!(side["rows"], 12800);
    assert_eq!(side["sample_rate_hz"], 5e6);
    assert_eq!(side["config_hash"].as_str().unwrap().len(), 64);
}

#[test]
fn generate_is_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let a = generate(dir.path(), "a");
    let b = generate(dir.path(), "b");
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    assert_eq!(
        std::fs::read(a.with_extension("json")).unwrap(),
        std::fs::read(b.with_extension("json")).unwrap()
    );
}

#[test]
fn generate_binary_and_seed_override() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("bin");
    let cfg = small_chain(dir.path());
    ok(&[
        "generate",
        "--config",
        s(&cfg),
        "--out",
        s(&out),
        "--format",
        "bin",
        "--seed",
        "9",
    ]);
    let bytes = std::fs::read(out.join("dataset.bin")).unwrap();
    assert_eq!(&bytes[..4], b"IMD2");
    assert_eq!(bytes.len(), 8 + 1600 * 24);
    let other = dir.path().join("bin2");
    ok(&[
        "generate",
        "--config",
        s(&cfg),
        "--out",
        s(&other),
        "--format",
        "bin",
        "--seed",
        "10",
    ]);
    assert_ne!(bytes, std::fs::read(other.join("dataset.bin")).unwrap());
}

#[test]
fn invalid_cp_len_names_the_field() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    std::fs::write(&cfg, "[ofdm]\nn_subcarriers = 16\ncp_len = 16\n").unwrap();
    let out = imd2(&[
        "generate",
        "--config",
        s(&cfg),
        "--out",
        s(&dir.path().join("x")),
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("cp_len"));
}

#[test]
fn unknown_config_key_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    std::fs::write(&cfg, "[chain]\npa_gain = 3.0\n").unwrap();
    let out = imd2(&[
        "generate",
        "--config",
        s(&cfg),
        "--out",
        s(&dir.path().join("x")),
    ]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn nn_with_ls_exits_4() {
    let dir = tempfile::tempdir().unwrap();
    let data = generate(dir.path(), "d");
    let out = imd2(&[
        "train",
        "nn",
        "--optimizer",
        "ls",
        "--data",
        s(&data),
        "--out",
        s(&dir.path().join("t")),
    ]);
    assert_eq!(out.status.code(), Some(4));
}

#[test]
fn missing_dataset_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let out = imd2(&[
        "train",
        "chebyshev",
        "--data",
        s(&dir.path().join("nope.csv")),
        "--out",
        s(&dir.path().join("t")),
    ]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn adam_smoke_run_mostly_decreases() {
    let dir = tempfile::tempdir().unwrap();
    let data = generate(dir.path(), "d");
    let out = dir.path().join("t");
    ok(&[
        "train",
        "chebyshev",
        "--optimizer",
        "adam",
        "--data",
        s(&data),
        "--out",
        s(&out),
        "--checkpoints",
        "50,100",
    ]);
    let report = json(&out.join("report.json"));
    assert_eq!(report["iterations"], 100);
    assert_eq!(report["checkpoints"], serde_json::json!([50, 100]));
    let history = std::fs::read_to_string(out.join("history.csv")).unwrap();
    let losses: Vec<f64> = history
        .lines()
        .skip(1)
        .map(|l| l.split(',').nth(1).unwrap().parse().unwrap())
        .collect();
    assert_eq!(losses.len(), 100);
    let down = losses.windows(2).filter(|w| w[1] <= w[0]).count();
    assert!(
        down * 2 > losses.len() - 1,
        "{down} of {} steps decreased",
        losses.len() - 1
    );
}

#[test]
fn eval_reproduces_training_nmse() {
    let dir = tempfile::tempdir().unwrap();
    let data = generate(dir.path(), "d");
    let fit = dir.path().join("fit");
    ok(&[
        "train",
        "chebyshev",
        "--optimizer",
        "ls",
        "--data",
        s(&data),
        "--out",
        s(&fit),
    ]);
    let trained = json(&fit.join("report.json"))["final_suppression_db"]
        .as_f64()
        .unwrap();
    let ev = dir.path().join("ev");
    let out = ok(&[
        "eval",
        "--model",
        s(&fit.join("model.json")),
        "--data",
        s(&data),
        "--out",
        s(&ev),
    ]);
    assert!(String::from_utf8_lossy(&out.stderr).is_empty());
    let report = json(&ev.join("nmse.json"));
    let evald = report["suppression_db"].as_f64().unwrap();
    assert!((trained - evald).abs() <= 1e-9, "{trained} vs {evald}");
    assert_eq!(report["denominator_convention"], "reference_power");
    for name in ["psd_rx.csv", "psd_residual.csv"] {
        let text = std::fs::read_to_string(ev.join(name)).unwrap();
        assert!(text.starts_with("freq_hz,psd_db\n"));
        assert_eq!(text.lines().count(), 1 + 512 + 1);
    }
}

#[test]
fn zero_model_gives_zero_db_and_scale_warning() {
    let dir = tempfile::tempdir().unwrap();
    let data = generate(dir.path(), "d");
    let model = dir.path().join("zero.json");
    std::fs::write(
        &model,
        r#"{"type":"nn","delays":[0,1],"widths":[2,1],"activation":"tanh","input_scale":0.5,
            "weights":[[0,0,0,0],[0,0]]}"#,
    )
    .unwrap();
    let ev = dir.path().join("ev");
    let out = ok(&[
        "eval",
        "--model",
        s(&model),
        "--data",
        s(&data),
        "--out",
        s(&ev),
    ]);
    assert!(String::from_utf8_lossy(&out.stderr).contains("warning"));
    let report = json(&ev.join("nmse.json"));
    assert_eq!(report["nmse_db"].as_f64().unwrap(), 0.0);
    assert_eq!(report["scale_mismatch"], true);
}

#[test]
fn bench_has_six_rows_with_na() {
    let dir = tempfile::tempdir().unwrap();
    let suite = dir.path().join("suite.toml");
    std::fs::write(&suite, "checkpoints = [5, 20]\n[ofdm]\nn_symbols = 10\n").unwrap();
    let out = dir.path().join("b");
    let stdout = ok(&["bench", "--config", s(&suite), "--out", s(&out)]).stdout;
    let table = String::from_utf8(stdout).unwrap();
    assert_eq!(table.lines().count(), 7);
    assert!(table
        .lines()
        .any(|l| l.starts_with("nn") && l.contains("ls") && l.contains("N/A")));
    let report = json(&out.join("bench.json"));
    let rows = report["rows"].as_array().unwrap();
    assert_eq!(rows.len(), 6);
    let ls = &rows[0]["suppression_db"];
    assert_eq!(ls[0], ls[1]);
    assert_eq!(rows[3]["suppression_db"], serde_json::json!(["N/A", "N/A"]));
    assert!(out.join("bench_timing.json").exists());
    assert!(!std::fs::read_to_string(out.join("bench.json"))
        .unwrap()
        .contains("wall_time"));
}

#[test]
fn bench_failure_is_per_cell() {
    let dir = tempfile::tempdir().unwrap();
    let suite = dir.path().join("suite.toml");
    // K=3 duplicate T0 columns with no ridge: LS is rank deficient
    std::fs::write(
        &suite,
        "checkpoints = [5]\n[ofdm]\nn_symbols = 10\n[optimizer]\nlambda = 0.0\n\
         [[cells]]\nmodel = \"chebyshev\"\noptimizer = \"ls\"\n\
         [[cells]]\nmodel = \"chebyshev\"\noptimizer = \"adam\"\n",
    )
    .unwrap();
    let out = dir.path().join("b");
    ok(&["bench", "--config", s(&suite), "--out", s(&out)]);
    let report = json(&out.join("bench.json"));
    assert_eq!(
        report["rows"][0]["suppression_db"],
        serde_json::json!(["FAIL"])
    );
    assert!(report["rows"][1]["suppression_db"][0].is_number());
}

#[test]
fn thread_cap_does_not_change_results() {
    let dir = tempfile::tempdir().unwrap();
    let suite = dir.path().join("suite.toml");
    std::fs::write(&suite, "checkpoints = [10]\n[ofdm]\nn_symbols = 10\n").unwrap();
    let run = |threads: &str, name: &str| {
        let out = dir.path().join(name);
        let status = Command::new(env!("CARGO_BIN_EXE_imd2"))
            .args(["bench", "--config", s(&suite), "--out", s(&out)])
            .env("IMD2_THREADS", threads)
            .output()
            .unwrap();
        (status.status.code(), out.join("bench.json"))
    };
    let (c1, one) = run("1", "one");
    let (c4, four) = run("4", "four");
    assert_eq!((c1, c4), (Some(0), Some(0)));
    assert_eq!(std::fs::read(one).unwrap(), std::fs::read(four).unwrap());
    assert_eq!(run("zero", "bad").0, Some(2));
}
