use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use sparq::datapath::{exact_matmul, reference_matmul};
use sparq::tensorio::{read_npy, write_npy, Matrix, NpyArray, NpyData};
use sparq::{Mode, TrimConfig};

fn sparq(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sparq")).args(args).output().expect("binary runs")
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn write_operands(dir: &Path, a: &Matrix<u8>, b: &Matrix<i8>) {
    write_npy(dir.join("a.npy"), &NpyArray::new(a.shape().to_vec(), NpyData::U8(a.data().to_vec())).unwrap()).unwrap();
    write_npy(dir.join("b.npy"), &NpyArray::new(b.shape().to_vec(), NpyData::I8(b.data().to_vec())).unwrap()).unwrap();
}

fn operands() -> (Matrix<u8>, Matrix<i8>) {
    let a = Matrix::from_fn(5, 12, |i, j| if (i + j) % 3 == 0 { 0 } else { ((i * 41 + j * 17) % 256) as u8 });
    let b = Matrix::from_fn(12, 3, |i, j| (((i * 23 + j * 7) % 200) as i32 - 100) as i8);
    (a, b)
}

#[test]
fn matmul_writes_engine_output_and_report() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = operands();
    write_operands(dir.path(), &a, &b);
    let (out, report) = (dir.path().join("y.npy"), dir.path().join("r.json"));
    for engine in ["ref", "sa", "tc"] {
        let res = sparq(&[
            "matmul", "--a", p(&dir.path().join("a.npy")), "--b", p(&dir.path().join("b.npy")),
            "--config", "3opt", "--no-rounding", "--engine", engine, "--out", p(&out), "--report", p(&report),
        ]);
        assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));
        let (shape, y) = read_npy(&out).unwrap().into_i32().unwrap();
        assert_eq!(shape, vec![5, 3]);
        let want = reference_matmul(&a, &b, &Mode::sparq(TrimConfig::three_opt(), false, true)).unwrap();
        assert_eq!(y.iter().map(|&v| v as i64).collect::<Vec<_>>(), want.data());
        let json: serde_json::Value = serde_json::from_str(&fs::read_to_string(&report).unwrap()).unwrap();
        assert_eq!(json["config"], "3opt");
        assert_eq!(json["engine"], engine);
        assert_eq!(json["rounding"], false);
        assert_eq!(json["metadata_bits_per_activation"], 3);
    }
}

#[test]
fn no_trim_is_exact_and_reports_infinite_sqnr() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = operands();
    write_operands(dir.path(), &a, &b);
    let (out, report) = (dir.path().join("y.npy"), dir.path().join("r.json"));
    let res = sparq(&[
        "matmul", "--a", p(&dir.path().join("a.npy")), "--b", p(&dir.path().join("b.npy")),
        "--no-trim", "--out", p(&out), "--report", p(&report),
    ]);
    assert!(res.status.success());
    let (_, y) = read_npy(&out).unwrap().into_i32().unwrap();
    let exact = exact_matmul(&a, &b).unwrap();
    assert_eq!(y.iter().map(|&v| v as i64).collect::<Vec<_>>(), exact.data());
    let json: serde_json::Value = serde_json::from_str(&fs::read_to_string(&report).unwrap()).unwrap();
    assert_eq!(json["sqnr_db"], "inf");
    assert_eq!(json["mse"], 0.0);
}

#[test]
fn shape_mismatch_fails_without_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let (a, _) = operands();
    let b = Matrix::from_fn(7, 3, |_, _| 1i8);
    write_operands(dir.path(), &a, &b);
    let out = dir.path().join("y.npy");
    let res = sparq(&["matmul", "--a", p(&dir.path().join("a.npy")), "--b", p(&dir.path().join("b.npy")), "--out", p(&out)]);
    assert_eq!(res.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&res.stderr).contains("shape mismatch"));
    assert!(!out.exists());
}

#[test]
fn dtype_mismatch_is_a_validation_error() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = operands();
    write_operands(dir.path(), &a, &b);
    let res = sparq(&["matmul", "--a", p(&dir.path().join("b.npy")), "--b", p(&dir.path().join("a.npy"))]);
    assert_eq!(res.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&res.stderr).contains("dtype mismatch"));
}

#[test]
fn stc_with_explicit_mask() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = operands();
    write_operands(dir.path(), &a, &b);
    let mask = Matrix::from_fn(12, 3, |i, j| ((i + j) % 4 < 2) as u8);
    let mask_path = dir.path().join("mask.npy");
    write_npy(&mask_path, &NpyArray::new(vec![12, 3], NpyData::U8(mask.data().to_vec())).unwrap()).unwrap();
    let out = dir.path().join("y.npy");
    let res = sparq(&[
        "matmul", "--a", p(&dir.path().join("a.npy")), "--b", p(&dir.path().join("b.npy")),
        "--engine", "stc", "--mask", p(&mask_path), "--no-trim", "--out", p(&out),
    ]);
    assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));
    let pruned = Matrix::from_fn(12, 3, |i, j| if mask.get(i, j) != 0 { b.get(i, j) } else { 0 });
    let (_, y) = read_npy(&out).unwrap().into_i32().unwrap();
    assert_eq!(y.iter().map(|&v| v as i64).collect::<Vec<_>>(), exact_matmul(&a, &pruned).unwrap().data());

    let bad = Matrix::from_fn(12, 3, |i, _| (i % 4 < 3) as u8);
    write_npy(&mask_path, &NpyArray::new(vec![12, 3], NpyData::U8(bad.data().to_vec())).unwrap()).unwrap();
    let res = sparq(&["matmul", "--a", p(&dir.path().join("a.npy")), "--b", p(&dir.path().join("b.npy")), "--engine", "stc", "--mask", p(&mask_path)]);
    assert_eq!(res.status.code(), Some(1));
}

#[test]
fn synthetic_matmul_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let run = |name: &str| {
        let out = dir.path().join(name);
        let res = sparq(&["matmul", "--synthetic", "9x20x5", "--seed", "3", "--engine", "sa", "--out", p(&out)]);
        assert!(res.status.success());
        fs::read(out).unwrap()
    };
    assert_eq!(run("one.npy"), run("two.npy"));
}

#[test]
fn sweep_reports_every_label() {
    let dir = tempfile::tempdir().unwrap();
    let report = dir.path().join("sweep.json");
    let res = sparq(&[
        "sweep", "--configs", "5opt+R,3opt-R-vS,int8", "--rows", "64", "--inner", "32", "--cols", "4", "--report", p(&report),
    ]);
    assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));
    let text = String::from_utf8_lossy(&res.stdout);
    assert!(text.lines().next().unwrap().starts_with("config"));
    assert_eq!(text.lines().count(), 4);
    let json: serde_json::Value = serde_json::from_str(&fs::read_to_string(&report).unwrap()).unwrap();
    let labels: Vec<_> = json["results"].as_array().unwrap().iter().map(|r| r["label"].as_str().unwrap().to_string()).collect();
    assert_eq!(labels, ["5opt+R", "3opt-R-vS", "int8"]);
    assert_eq!(json["results"][2]["sqnr_db"], "inf");
    assert_eq!(json["inputs"]["synthetic"]["seed"], 0);

    let again = dir.path().join("again.json");
    sparq(&["sweep", "--configs", "5opt+R,3opt-R-vS,int8", "--rows", "64", "--inner", "32", "--cols", "4", "--report", p(&again)]);
    assert_eq!(fs::read(&report).unwrap(), fs::read(&again).unwrap());
}

#[test]
fn empty_sweep_is_a_usage_error() {
    let res = sparq(&["sweep", "--configs", ""]);
    assert_eq!(res.status.code(), Some(1));
    let res = sparq(&["sweep"]);
    assert_eq!(res.status.code(), Some(1));
    let res = sparq(&["sweep", "--configs", "9opt"]);
    assert_eq!(res.status.code(), Some(1));
}

#[test]
fn analyze_reports_statistics() {
    let dir = tempfile::tempdir().unwrap();
    let x: Vec<u8> = vec![0, 0, 16, 1, 0, 3, 128, 0];
    let input = dir.path().join("x.npy");
    write_npy(&input, &NpyArray::new(vec![2, 4], NpyData::U8(x)).unwrap()).unwrap();
    let report = dir.path().join("a.json");
    let res = sparq(&["analyze", "--input", p(&input), "--report", p(&report)]);
    assert!(res.status.success());
    let json: serde_json::Value = serde_json::from_str(&fs::read_to_string(&report).unwrap()).unwrap();
    assert_eq!(json["activation_sparsity"], 0.5);
    // Pairs per row of four: (0,0) (16,1) | (0,3) (128,0).
    assert_eq!(json["pair_zero_fraction"], 0.75);
    assert_eq!(json["empirical_window_probability"], 0.5);
    assert_eq!(json["window"], serde_json::json!([7, 4]));
}

#[test]
fn selftest_exit_codes() {
    let res = sparq(&["selftest", "--cases", "2"]);
    assert!(res.status.success());
    assert_eq!(String::from_utf8_lossy(&res.stdout).matches("PASS").count(), 3);
    let res = sparq(&["selftest", "--cases", "1", "--shifter-table", "3,0"]);
    assert_eq!(res.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&res.stderr).contains("FAIL recombination"));
}

#[test]
fn unknown_flags_and_configs_are_rejected() {
    assert_eq!(sparq(&["matmul", "--synthetic", "2x2x2", "--config", "4opt"]).status.code(), Some(1));
    assert_eq!(sparq(&["matmul", "--synthetic", "2x2x2", "--engine", "gpu"]).status.code(), Some(1));
    assert_eq!(sparq(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(sparq(&["--help"]).status.code(), Some(0));
}
