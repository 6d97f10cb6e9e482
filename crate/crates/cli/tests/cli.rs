use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use skillmem::data::load_dataset;
use skillmem_cli::report::ReportBundle;

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("skillmem-cli-{name}-{}", std::process::id()));
    let _ = std::fs::remove_dir_all(&dir);
    dir
}

fn skillmem(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_skillmem")).args(args).arg("--out").arg(out).output().expect("binary runs")
}

fn summary(dir: &Path) -> String {
    std::fs::read_to_string(dir.join("summary.json")).expect("summary written")
}

fn error_line(o: &Output) -> Value {
    assert!(!o.status.success());
    let stderr = String::from_utf8_lossy(&o.stderr);
    let last = stderr.lines().last().expect("an error line");
    serde_json::from_str(last).expect("machine-readable error line")
}

#[test]
fn smoke_train_is_reproducible_and_feeds_recall() {
    let (a, b) = (scratch("train-a"), scratch("train-b"));
    for dir in [&a, &b] {
        let o = skillmem(&["train", "--smoke", "--seeds", "3"], dir);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    }
    assert_eq!(summary(&a), summary(&b));
    assert_eq!(std::fs::read(a.join("model_seed3.txt")).unwrap(), std::fs::read(b.join("model_seed3.txt")).unwrap());
    let s = ReportBundle::parse_summary(&summary(&a)).unwrap();
    assert_eq!(s["command"], "train");
    assert_eq!(s["seeds"], Value::from(vec![3, 4]));
    assert!(s.contains_key("seed3.energy_reduction"));

    let r = scratch("recall");
    let o = skillmem(
        &["recall", "--smoke", "--seeds", "3", "--model-dir", a.to_str().unwrap(), "--fault", "lock:5:3:10"],
        &r,
    );
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let s = ReportBundle::parse_summary(&summary(&r)).unwrap();
    assert_eq!(s["seed3.push.trials"], 4);
    assert!(r.join("recall_trace_seed3.csv").exists());
    for d in [a, b, r] {
        std::fs::remove_dir_all(d).unwrap();
    }
}

#[test]
fn gen_data_writes_readable_datasets() {
    let dir = scratch("gen");
    let o = skillmem(&["gen-data", "--seeds", "1"], &dir);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let pp = load_dataset::<f64>(dir.join("pick_place_seed1.dataset")).unwrap();
    assert_eq!(pp.len(), 20);
    assert_eq!(pp[0].dim(), 14);
    for cond in ["plan-only", "plan-and-execute", "execute-only"] {
        let ft = load_dataset::<f64>(dir.join(format!("follow_through_{cond}_seed1.dataset"))).unwrap();
        assert_eq!(ft.len(), 24);
        assert_eq!(ft[0].dim(), 11);
    }
    std::fs::remove_dir_all(dir).unwrap();
}

#[test]
fn failures_exit_nonzero_with_a_json_line() {
    let dir = scratch("fail");
    let cfg = dir.join("bad.cfg");
    std::fs::create_dir_all(&dir).unwrap();
    std::fs::write(&cfg, "hidden = 16\nbogus = 2\n").unwrap();
    let e = error_line(&skillmem(&["train", "--config", cfg.to_str().unwrap()], &dir));
    assert_eq!(e["command"], "train");
    assert!(e["error"].as_str().unwrap().contains("bogus"));

    let e = error_line(&skillmem(&["fault-grid", "--model-dir", dir.to_str().unwrap()], &dir));
    assert_eq!(e["command"], "fault-grid");
    assert!(e["error"].as_str().unwrap().contains("model_seed0.txt"));

    let e = error_line(&skillmem(&["recall", "--fault", "lock:9"], &dir));
    assert!(e["error"].as_str().unwrap().contains("malformed fault"));

    let e = error_line(&skillmem(&["capacity", "--seeds", "x"], &dir));
    assert!(e["error"].as_str().unwrap().contains("seeds"));
    std::fs::remove_dir_all(dir).unwrap();
}
