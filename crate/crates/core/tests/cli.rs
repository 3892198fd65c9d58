use std::path::Path;
use std::process::{Command, Output};

fn brainmr(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_brainmr")).args(args).output().unwrap()
}

fn code(out: &Output) -> i32 {
    out.status.code().unwrap()
}

fn run(dir: &Path, extra: &[&str]) -> Output {
    let mut args = vec!["run", "--exc", "40", "--inh", "10", "--ms", "60", "--out", dir.to_str().unwrap()];
    args.extend_from_slice(extra);
    brainmr(&args)
}

fn read(path: &Path) -> String {
    std::fs::read_to_string(path).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}

#[test]
fn usage_errors_exit_1() {
    assert_eq!(code(&brainmr(&[])), 1);
    assert_eq!(code(&brainmr(&["run", "--kill-prob", "0.95"])), 1);
    assert_eq!(code(&brainmr(&["run", "--mode", "oracle", "--partitions", "2"])), 1);
    assert_eq!(code(&brainmr(&["frobnicate"])), 1);
    assert_eq!(code(&brainmr(&["--help"])), 0);
}

#[test]
fn zero_ms_run_writes_initial_snapshot() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path().join("run");
    let out = brainmr(&["run", "--exc", "4", "--inh", "1", "--ms", "0", "--out", dir.to_str().unwrap()]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    assert!(dir.join("iter_0.snap").exists());
    assert!(dir.join("manifest.json").exists());
    assert_eq!(read(&dir.join("spikes.csv")), "iter,neuron_id\n");
}

#[test]
fn engine_and_oracle_runs_compare_identical() {
    let tmp = tempfile::tempdir().unwrap();
    let (a, b) = (tmp.path().join("engine"), tmp.path().join("oracle"));
    let out = run(&a, &["--partitions", "3", "--reduce-tasks", "2", "--kill-prob", "0.3", "--max-retries", "10", "--trace", "0,45"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let out = run(&b, &["--mode", "oracle", "--trace", "0,45"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));

    let cmp = brainmr(&["compare", a.to_str().unwrap(), b.to_str().unwrap()]);
    assert_eq!(code(&cmp), 0, "{}", String::from_utf8_lossy(&cmp.stderr));
    assert!(String::from_utf8_lossy(&cmp.stdout).contains("identical"));
    assert_eq!(read(&a.join("trace_v_45.csv")), read(&b.join("trace_v_45.csv")));
    assert_eq!(read(&a.join("trace_u_0.csv")).lines().count(), 61);

    let summary: serde_json::Value = serde_json::from_str(&read(&a.join("summary.json"))).unwrap();
    assert!(summary["retries"].as_u64().unwrap() > 0);
    assert!(a.join("metrics/iter_59.json").exists());
}

#[test]
fn different_seeds_mismatch_exit_3() {
    let tmp = tempfile::tempdir().unwrap();
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    assert_eq!(code(&run(&a, &["--mode", "oracle", "--seed", "1"])), 0);
    assert_eq!(code(&run(&b, &["--mode", "oracle", "--seed", "2"])), 0);
    let cmp = brainmr(&["compare", a.to_str().unwrap(), b.to_str().unwrap()]);
    assert_eq!(code(&cmp), 3);
    assert!(String::from_utf8_lossy(&cmp.stderr).contains("iteration 0"));
}

#[test]
fn compare_of_missing_dir_is_runtime_error() {
    let tmp = tempfile::tempdir().unwrap();
    let missing = tmp.path().join("nope");
    assert_eq!(code(&brainmr(&["compare", missing.to_str().unwrap(), missing.to_str().unwrap()])), 2);
}

#[test]
fn non_empty_output_dir_is_refused() {
    let tmp = tempfile::tempdir().unwrap();
    std::fs::write(tmp.path().join("junk"), "x").unwrap();
    assert_eq!(code(&run(tmp.path(), &[])), 1);
}

#[test]
fn analyze_writes_rate_and_spectrum() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path().join("run");
    assert_eq!(code(&run(&dir, &["--mode", "oracle", "--trace", "3"])), 0);
    let out_dir = tmp.path().join("analysis");
    let out = brainmr(&["analyze", dir.to_str().unwrap(), "--out", out_dir.to_str().unwrap()]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));

    let rate = read(&out_dir.join("rate.csv"));
    assert_eq!(rate.lines().next(), Some("iter,spikes"));
    assert_eq!(rate.lines().count(), 61);
    let spectrum = read(&out_dir.join("spectrum.csv"));
    assert_eq!(spectrum.lines().count(), 1 + 31);
    assert_eq!(read(&out_dir.join("raster.csv")), read(&dir.join("spikes.csv")));
    assert!(out_dir.join("trace_v_3.csv").exists());
    let summary: serde_json::Value = serde_json::from_str(&read(&out_dir.join("summary.json"))).unwrap();
    assert_eq!(summary["neurons"], 50);

    std::fs::remove_file(dir.join("spikes.csv")).unwrap();
    assert_eq!(code(&brainmr(&["analyze", dir.to_str().unwrap()])), 2);
}

#[test]
fn manifest_rerun_reproduces_directory() {
    let tmp = tempfile::tempdir().unwrap();
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    assert_eq!(code(&run(&a, &["--partitions", "2", "--combiner", "on", "--keep", "last", "--trace", "7"])), 0);
    let manifest = a.join("manifest.json");
    let out = brainmr(&["run", "--manifest", manifest.to_str().unwrap(), "--out", b.to_str().unwrap()]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));

    let mut names: Vec<String> = std::fs::read_dir(&a)
        .unwrap()
        .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
        .collect();
    names.sort();
    assert_eq!(names, ["iter_0.snap", "iter_60.snap", "manifest.json", "metrics", "spikes.csv", "summary.json", "trace_u_7.csv", "trace_v_7.csv"]);
    for name in &names {
        if name == "metrics" {
            assert_eq!(read(&a.join("metrics/iter_30.json")), read(&b.join("metrics/iter_30.json")));
            continue;
        }
        let (x, y) = (read(&a.join(name)), read(&b.join(name)));
        if name == "manifest.json" {
            let strip = |s: &str| s.lines().filter(|l| !l.contains("\"created\"")).collect::<Vec<_>>().join("\n");
            assert_eq!(strip(&x), strip(&y));
        } else {
            assert_eq!(x, y, "{name}");
        }
    }
}
