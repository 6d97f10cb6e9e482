use skillmem::arm::{FaultKind, FaultSpec};
use skillmem_cli::config::{fault_text, parse_fault, ConfigError, Experiment, ExperimentConfig};

#[test]
fn defaults_round_trip_through_text() {
    let cfg = ExperimentConfig::default();
    assert_eq!(ExperimentConfig::parse(&cfg.to_text()).unwrap(), cfg);
    assert_eq!(ExperimentConfig::parse("").unwrap(), cfg);
}

#[test]
fn edited_config_round_trips() {
    let text = "
# comment
experiment = capacity
seeds = 4, 5,6
weight_lr = 0.003
optimizer = sgd
update_mode = per-sequence
warm_start = zero
isolation_scope = all
isolation_units = raw
grid_times = 1.25,2.5
fault = push:3:2.5:-0.2:0.5
";
    let cfg = ExperimentConfig::parse(text).unwrap();
    assert_eq!(cfg.experiment, Experiment::Capacity);
    assert_eq!(cfg.seeds, vec![4, 5, 6]);
    assert_eq!(cfg.weight_lr, 0.003);
    assert_eq!(cfg.grid_times, vec![1.25, 2.5]);
    assert_eq!(ExperimentConfig::parse(&cfg.to_text()).unwrap(), cfg);
}

#[test]
fn per_experiment_seed_counts() {
    assert_eq!(ExperimentConfig::for_experiment(Experiment::FollowThrough).seeds.len(), 6);
    assert_eq!(ExperimentConfig::for_experiment(Experiment::SpeedAccuracy).seeds.len(), 6);
    assert_eq!(ExperimentConfig::for_experiment(Experiment::Capacity).seeds.len(), 3);
    assert_eq!(ExperimentConfig::for_experiment(Experiment::FaultGrid).seeds, vec![0]);
}

#[test]
fn default_grid_has_490_faults_per_skill() {
    let c = ExperimentConfig::default();
    assert_eq!(c.grid_joints.len() * c.grid_times.len() * c.grid_overshoots.len(), 490);
    assert_eq!(c.grid_times.first(), Some(&1.0));
    assert_eq!(c.grid_times.last(), Some(&5.5));
}

#[test]
fn errors_carry_line_and_key() {
    assert_eq!(
        ExperimentConfig::parse("hidden = 8\nbogus = 1\n").unwrap_err(),
        ConfigError::UnknownKey { line: 2, key: "bogus".into() }
    );
    assert!(matches!(ExperimentConfig::parse("\n\nno equals sign").unwrap_err(), ConfigError::Line { line: 3, .. }));
    assert!(matches!(ExperimentConfig::parse("hidden = many").unwrap_err(), ConfigError::Value { key, .. } if key == "hidden"));
    assert!(matches!(ExperimentConfig::parse("activation = relu").unwrap_err(), ConfigError::Value { key, .. } if key == "activation"));
    assert!(matches!(ExperimentConfig::parse("fault = lock:0:3:10").unwrap_err(), ConfigError::Value { key, .. } if key == "fault"));
}

#[test]
fn validation_rejects_inconsistent_values() {
    for (text, key) in [
        ("seeds = ", "seeds"),
        ("hidden = 0", "hidden"),
        ("grid_thresholds = 0.99,1.5", "grid_thresholds"),
        ("grid_joints = 8", "grid_joints"),
        ("n_skills = 5", "n_skills"),
        ("n_skills = 2\nrecall_skill = 3", "recall_skill"),
        ("weight_lr = -1", "weight_lr"),
        ("epochs_per_skill = 0", "weight_lr"),
        ("capacity_skills = 1,8", "capacity_skills"),
    ] {
        match ExperimentConfig::parse(text) {
            Err(ConfigError::Value { key: k, .. }) => assert_eq!(k, key, "{text}"),
            other => panic!("{text}: {other:?}"),
        }
    }
}

#[test]
fn missing_file_is_an_io_error() {
    assert!(matches!(ExperimentConfig::load("/nonexistent/skillmem.cfg"), Err(ConfigError::Io(_))));
}

#[test]
fn fault_text_round_trips() {
    assert_eq!(parse_fault("none").unwrap(), None);
    let lock = parse_fault("lock:5:3:10").unwrap().unwrap();
    assert_eq!((lock.kind, lock.joint, lock.time_s, lock.magnitude), (FaultKind::JointLock, 4, 3.0, 10.0));
    for f in [FaultSpec::lock(4, 3.0, 10.0), FaultSpec::push(0, 1.5, -0.2, 0.5)] {
        assert_eq!(parse_fault(&fault_text(Some(&f))).unwrap(), Some(f));
    }
    assert_eq!(fault_text(None), "none");
    for bad in ["lock:5:3", "push:1:2:3", "jam:1:2:3", "lock:x:3:10", "none:1"] {
        assert!(parse_fault(bad).is_err(), "{bad}");
    }
}

#[test]
fn smoke_profile_shrinks_counts() {
    let s = ExperimentConfig::default().smoke();
    assert_eq!(s.seeds, vec![0, 1]);
    assert_eq!(s.epochs_per_skill, 5);
    assert_eq!(s.ft_learning_trials, 100);
    let many = ExperimentConfig { seeds: vec![7, 8, 9], ..Default::default() }.smoke();
    assert_eq!(many.seeds, vec![7, 8]);
}
