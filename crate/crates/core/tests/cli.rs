use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn rfskit(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rfskit"))
        .args(args)
        .env_remove("RFSKIT_OUTPUT_DIR")
        .output()
        .expect("spawn rfskit")
}

fn ok(args: &[&str]) -> String {
    let out = rfskit(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn uav_train(dir: &Path) -> PathBuf {
    let path = dir.join("train.jsonl");
    ok(&["synth", "--preset", "uav-train", "-o", path.to_str().unwrap()]);
    path
}

fn read_dir_sorted(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<_> = fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (e.file_name().to_string_lossy().into_owned(), fs::read(e.path()).unwrap())
        })
        .collect();
    files.sort();
    files
}

#[test]
fn factors_fire_row() {
    let dir = tempfile::tempdir().unwrap();
    let data = uav_train(dir.path());
    let table = ok(&[
        "factors", data.to_str().unwrap(), "--method", "eirfs", "--t", "0.0001", "--alpha", "2.0",
    ]);
    let fire: Vec<&str> = table
        .lines()
        .find(|l| l.starts_with("class\t") && l.contains("\tFire\t"))
        .expect("Fire row")
        .split('\t')
        .collect();
    let r: f64 = fire.last().unwrap().parse().unwrap();
    assert!((r - 1.03656).abs() < 5e-6, "{r}");
}

#[test]
fn coco_input_matches_index_input() {
    let dir = tempfile::tempdir().unwrap();
    let data = uav_train(dir.path());
    let coco = dir.path().join("train.json");
    ok(&["synth", "--preset", "uav-train", "--format", "coco", "-o", coco.to_str().unwrap()]);
    let a = ok(&["inspect", data.to_str().unwrap()]);
    let b = ok(&["inspect", coco.to_str().unwrap()]);
    assert_eq!(a.lines().filter(|l| !l.starts_with('#')).collect::<Vec<_>>(),
               b.lines().filter(|l| !l.starts_with('#')).collect::<Vec<_>>());
}

#[test]
fn sample_twice_is_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let data = uav_train(dir.path());
    let run = |name: &str| {
        let out = dir.path().join(name);
        ok(&[
            "sample", data.to_str().unwrap(), "--mode", "draw", "--size", "1000", "--seed", "42",
            "--epochs", "3", "--out-dir", out.to_str().unwrap(),
        ]);
        read_dir_sorted(&out)
    };
    let a = run("a");
    let b = run("b");
    assert_eq!(a.len(), 3);
    assert_eq!(a, b);
    assert_ne!(a[0].1, a[1].1, "epochs should differ");
}

#[test]
fn sample_from_table_matches_sample_from_dataset() {
    let dir = tempfile::tempdir().unwrap();
    let data = uav_train(dir.path());
    let table = dir.path().join("train.factors");
    ok(&["factors", data.to_str().unwrap(), "-o", table.to_str().unwrap()]);
    for (name, input) in [("d", &data), ("t", &table)] {
        let out = dir.path().join(name);
        ok(&[
            "sample", input.to_str().unwrap(), "--mode", "expand", "--seed", "7",
            "--out-dir", out.to_str().unwrap(),
        ]);
    }
    assert_eq!(read_dir_sorted(&dir.path().join("d")), read_dir_sorted(&dir.path().join("t")));
}

#[test]
fn output_dir_from_environment() {
    let dir = tempfile::tempdir().unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_rfskit"))
        .args(["synth", "--preset", "uav-val", "-o", "val.jsonl"])
        .env("RFSKIT_OUTPUT_DIR", dir.path())
        .output()
        .unwrap();
    assert!(out.status.success());
    assert!(dir.path().join("val.jsonl").is_file());
}

#[test]
fn verify_passes() {
    let text = ok(&["verify"]);
    assert!(text.lines().count() >= 10);
    assert!(text.lines().all(|l| l.starts_with("PASS ")), "{text}");
    let json: serde_json::Value = serde_json::from_str(&ok(&["verify", "--json"])).unwrap();
    assert!(json.to_string().contains("collapse_identity"));
}

#[test]
fn sweep_matrix_has_full_grid() {
    let dir = tempfile::tempdir().unwrap();
    let data = uav_train(dir.path());
    let m = ok(&[
        "sweep", data.to_str().unwrap(), "--format", "matrix", "--alphas", "0.5,1,2",
        "--thresholds", "0.1,0.01",
    ]);
    let rows: Vec<&str> = m.lines().filter(|l| !l.starts_with('#')).collect();
    assert_eq!(rows.len(), 4, "{m}");
    assert!(rows.iter().all(|r| r.split('\t').count() == 3));
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let data = uav_train(dir.path());
    let code = |args: &[&str]| rfskit(args).status.code();
    assert_eq!(code(&["factors", data.to_str().unwrap(), "--t", "0"]), Some(2));
    assert_eq!(code(&["factors", data.to_str().unwrap(), "--alpha", "-1"]), Some(2));
    assert_eq!(code(&["no-such-command"]), Some(2));
    let missing = dir.path().join("missing.json");
    assert_eq!(code(&["inspect", missing.to_str().unwrap()]), Some(3));
    let broken = dir.path().join("broken.json");
    fs::write(&broken, "{\"images\": [").unwrap();
    let out = rfskit(&["inspect", broken.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("broken.json:1:"));
}
