use serde_json::Value;
use skillmem_cli::config::ExperimentConfig;
use skillmem_cli::report::{fingerprint, ReportBundle};

fn bundle() -> ReportBundle {
    let mut b = ReportBundle::new("train", &ExperimentConfig::default());
    b.set("seed0.energy_reduction", 0.1 + 0.2);
    b.set("seed0.max", f64::MAX);
    b.set("seed0.tiny", 5e-324);
    b.set("seed0.ok", true);
    b.set("seed0.list", Value::from(vec![1.0 / 3.0, -0.0, 2.5]));
    b.add_csv("curve.csv", "energy", "epoch,energy\n0,1\n".into());
    b
}

#[test]
fn summary_round_trip_is_exact() {
    let b = bundle();
    let parsed = ReportBundle::parse_summary(&b.summary_json()).unwrap();
    assert_eq!(parsed, b.summary);
    assert_eq!(parsed["seed0.energy_reduction"].as_f64().unwrap().to_bits(), (0.1f64 + 0.2).to_bits());
    assert_eq!(parsed["seed0.tiny"].as_f64(), Some(5e-324));
}

#[test]
fn written_bundle_reads_back() {
    let b = bundle();
    let dir = std::env::temp_dir().join(format!("skillmem-report-{}", std::process::id()));
    b.write_to(&dir).unwrap();
    let text = std::fs::read_to_string(dir.join("summary.json")).unwrap();
    assert_eq!(ReportBundle::parse_summary(&text).unwrap(), b.summary);
    assert_eq!(std::fs::read_to_string(dir.join("curve.csv")).unwrap(), b.files["curve.csv"]);
    assert!(b.files["curve.csv"].starts_with("# figure: energy\n"));
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn summary_is_stamped_and_sorted() {
    let b = bundle();
    assert_eq!(b.summary["command"], "train");
    assert_eq!(b.summary["seeds"], Value::from(vec![0]));
    let keys: Vec<&String> = b.summary.keys().collect();
    let mut sorted = keys.clone();
    sorted.sort();
    assert_eq!(keys, sorted);
    assert_eq!(b.get_bool("seed0.ok"), Some(true));
    assert_eq!(b.get_f64("missing"), None);
}

#[test]
fn fingerprint_tracks_the_config() {
    let a = ExperimentConfig::default();
    let f = fingerprint(&a);
    assert_eq!(f.len(), 64);
    assert!(f.chars().all(|c| c.is_ascii_hexdigit()));
    assert_eq!(f, fingerprint(&a.clone()));
    assert_ne!(f, fingerprint(&ExperimentConfig { hidden: 128, ..a }));
}

#[test]
fn absorb_prefixes_and_drops_stamps() {
    let mut a = ReportBundle::new("recall", &ExperimentConfig::default());
    a.absorb("inner", bundle());
    assert_eq!(a.summary["command"], "recall");
    assert!(a.summary.contains_key("inner.seed0.ok"));
    assert!(!a.summary.contains_key("inner.command"));
    assert!(a.files.contains_key("inner_curve.csv"));
    let mut b = ReportBundle::new("recall", &ExperimentConfig::default());
    b.absorb("", bundle());
    assert!(b.summary.contains_key("seed0.ok"));
}

#[test]
fn arbitrary_floats_survive_the_summary() {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
    let mut b = ReportBundle::new("train", &ExperimentConfig::default());
    let values: Vec<f64> = (0..5000).map(|_| f64::from_bits(rng.gen::<u64>() >> 2) * if rng.gen() { 1.0 } else { -1.0 }).collect();
    for (i, v) in values.iter().enumerate() {
        b.set(format!("v{i}"), *v);
    }
    let parsed = ReportBundle::parse_summary(&b.summary_json()).unwrap();
    for (i, v) in values.iter().enumerate() {
        assert_eq!(parsed[&format!("v{i}")].as_f64().unwrap().to_bits(), v.to_bits(), "{v:e}");
    }
}
