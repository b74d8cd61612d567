use std::path::Path;
use std::process::{Command, Output};

use exsum::datagen::{gen_vector, write_dataset, MagnitudeProfile};
use exsum::harness::{read_records, ExperimentRecord};

fn exsum(args: &[&str], threads: Option<&str>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_exsum"));
    cmd.args(args);
    match threads {
        Some(t) => cmd.env("EXSUM_THREADS", t),
        None => cmd.env_remove("EXSUM_THREADS"),
    };
    cmd.output().expect("failed to spawn exsum")
}

fn records(path: &Path) -> Vec<ExperimentRecord> {
    read_records(std::fs::File::open(path).unwrap()).unwrap()
}

/// CSV text with the wall-clock column blanked.
fn without_timing(path: &Path) -> String {
    let text = std::fs::read_to_string(path).unwrap();
    let mut reader = csv::Reader::from_reader(text.as_bytes());
    let header = reader.headers().unwrap().clone();
    let col = header.iter().position(|h| h == "wall_ns").unwrap();
    let mut out = header.iter().collect::<Vec<_>>().join(",");
    for row in reader.records() {
        let row = row.unwrap();
        let fields: Vec<&str> = row.iter().enumerate().map(|(i, f)| if i == col { "" } else { f }).collect();
        out.push('\n');
        out.push_str(&fields.join(","));
    }
    out
}

#[test]
fn simpson_sweep_writes_full_product() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("simpson.csv");
    let out = exsum(
        &[
            "simpson", "--strategy", "naive", "--strategy", "bucketed", "--strategy", "sorted", "--procs", "2",
            "--procs", "4", "--procs", "8", "--m", "2000", "--reps", "1", "--csv", csv.to_str().unwrap(),
        ],
        None,
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let rows = records(&csv);
    assert_eq!(rows.len(), 36);
    assert!(rows.iter().all(|r| r.kernel == "simpson" && r.fmt == "b32" && r.abs_error.is_some()));
}

#[test]
fn csv_is_identical_across_thread_caps() {
    let dir = tempfile::tempdir().unwrap();
    let mut texts = Vec::new();
    for threads in ["1", "4", "8"] {
        let csv = dir.path().join(format!("matmul-{threads}.csv"));
        let out = exsum(
            &[
                "matmul", "--n", "24", "--procs", "1", "--procs", "3", "--procs", "8", "--seed", "1", "--seed", "2",
                "--reps", "1", "--csv", csv.to_str().unwrap(),
            ],
            Some(threads),
        );
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        texts.push(without_timing(&csv));
    }
    assert_eq!(texts[0], texts[1]);
    assert_eq!(texts[0], texts[2]);
}

#[test]
fn jacobi_and_power_emit_gap_rows() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("jacobi.csv");
    let out = exsum(
        &["jacobi", "--n", "10", "--seed", "1", "--seed", "2", "--reps", "1", "--csv", csv.to_str().unwrap()],
        None,
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let rows = records(&csv);
    let gaps = rows.iter().filter(|r| r.strategy == "gap:bucketed").count();
    assert_eq!(gaps, 8);

    let csv = dir.path().join("power.csv");
    let out = exsum(
        &[
            "power", "--n", "20", "--d-from", "300", "--d-to", "340", "--d-step", "20", "--fmt", "b64", "--eps",
            "1e-9", "--procs", "4", "--reps", "1", "--csv", csv.to_str().unwrap(),
        ],
        None,
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let rows = records(&csv);
    assert_eq!(rows.len(), 9);
    for r in rows.iter().filter(|r| !r.strategy.starts_with("gap:")) {
        assert!(r.error_flag.is_empty(), "{r:?}");
        assert!(r.abs_error.unwrap() < 1e-3, "{r:?}");
    }
}

#[test]
fn dump_and_reload_agree() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("v.bin");
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    let out = exsum(
        &["sum", "--n", "5000", "--seed", "9", "--reps", "1", "--dump", data.to_str().unwrap(), "--csv", a.to_str().unwrap()],
        None,
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let out = exsum(
        &["sum", "--input", data.to_str().unwrap(), "--seed", "9", "--reps", "1", "--csv", b.to_str().unwrap()],
        None,
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(without_timing(&a), without_timing(&b));
    let xs: Vec<f32> = gen_vector(5000, &MagnitudeProfile::ill_conditioned(), 9);
    let mut expected = Vec::new();
    write_dataset(&mut expected, &xs).unwrap();
    assert_eq!(std::fs::read(&data).unwrap(), expected);
}

#[test]
fn exit_codes() {
    assert_eq!(exsum(&["--help"], None).status.code(), Some(0));
    assert_eq!(exsum(&["--version"], None).status.code(), Some(0));
    assert_eq!(exsum(&["nonsense"], None).status.code(), Some(1));
    assert_eq!(exsum(&["simpson", "--strategy", "fastest"], None).status.code(), Some(1));
    assert_eq!(exsum(&["simpson", "--m", "7"], None).status.code(), Some(1));
    assert_eq!(exsum(&["lu", "--procs", "0"], None).status.code(), Some(1));
    assert_eq!(exsum(&["power", "--d-from", "500", "--d-to", "300"], None).status.code(), Some(1));

    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("missing.bin");
    assert_eq!(exsum(&["sum", "--input", missing.to_str().unwrap()], None).status.code(), Some(2));
    let bad = dir.path().join("bad.bin");
    std::fs::write(&bad, b"NOTMAGIC").unwrap();
    assert_eq!(exsum(&["sum", "--input", bad.to_str().unwrap()], None).status.code(), Some(1));
    let unwritable = dir.path().join("no/such/dir/out.csv");
    assert_eq!(
        exsum(&["sum", "--n", "10", "--reps", "1", "--csv", unwritable.to_str().unwrap()], None).status.code(),
        Some(2)
    );
}

#[test]
fn stdout_when_no_csv_path() {
    let out = exsum(&["lu", "--n", "6", "--diag-boost", "--reps", "1"], None);
    assert!(out.status.success());
    let rows = read_records(&out.stdout[..]).unwrap();
    assert_eq!(rows.len(), 2);
    assert!(rows.iter().all(|r| r.error_flag.is_empty()));
}
