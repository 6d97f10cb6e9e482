use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use skillmem::arm::ArmModel;
use skillmem::data::demo::{gen_pick_place, FollowThroughCondition};
use skillmem::data::save_dataset;
use skillmem::model_file::{load_model, save_model, StoredModel};
use skillmem_cli::config::{parse_fault, Experiment, ExperimentConfig};
use skillmem_cli::experiments::pick_place::{self, TrainedPickPlace};
use skillmem_cli::experiments::{
    capacity, fault_grid, follow_through, recall, speed_accuracy, Context, ExperimentError,
};
use skillmem_cli::report::ReportBundle;

/// Skill memories for a simulated arm: training, recall, fault monitoring
/// and the follow-through experiments.
#[derive(Debug, Parser)]
#[command(name = "skillmem", version)]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct Common {
    /// Configuration file of `key = value` lines.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Comma-separated seeds, overriding the configuration.
    #[arg(long, global = true)]
    seeds: Option<String>,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Reduced counts for a quick run.
    #[arg(long, global = true)]
    smoke: bool,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Write pick-and-place and follow-through demonstration files.
    GenData,
    /// Memorize the pick-and-place repertoire and score its recall.
    Train,
    /// Recall one skill, optionally under a fault, and run the push trials.
    Recall {
        /// Directory holding `model_seed<k>.txt` files from `train`.
        #[arg(long)]
        model_dir: Option<PathBuf>,
        /// Fault to inject, e.g. `lock:5:3:10` or `push:2:2:0.2:0.5`.
        #[arg(long)]
        fault: Option<String>,
    },
    /// Detection and isolation over the fault grid.
    FaultGrid {
        #[arg(long)]
        model_dir: Option<PathBuf>,
    },
    /// Planned versus executed follow-through.
    FollowThrough,
    /// Recall error against the inference budget.
    SpeedAccuracy,
    /// Learning speed against repertoire size.
    Capacity,
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::GenData => "gen-data",
            Command::Train => "train",
            Command::Recall { .. } => "recall",
            Command::FaultGrid { .. } => "fault-grid",
            Command::FollowThrough => "follow-through",
            Command::SpeedAccuracy => "speed-accuracy",
            Command::Capacity => "capacity",
        }
    }

    fn experiment(&self) -> Experiment {
        match self {
            Command::FaultGrid { .. } => Experiment::FaultGrid,
            Command::FollowThrough => Experiment::FollowThrough,
            Command::SpeedAccuracy => Experiment::SpeedAccuracy,
            Command::Capacity => Experiment::Capacity,
            _ => Experiment::PickPlace,
        }
    }
}

fn load_config(common: &Common, command: &Command) -> Result<ExperimentConfig, ExperimentError> {
    let mut cfg = ExperimentConfig::for_experiment(command.experiment());
    if let Some(path) = &common.config {
        cfg = cfg.load_onto(path)?;
    }
    if let Some(seeds) = &common.seeds {
        cfg.set("seeds", seeds)?;
    }
    if let Command::Recall { fault: Some(f), .. } = command {
        cfg.fault = parse_fault(f).map_err(ExperimentError::Invalid)?;
    }
    if common.smoke {
        cfg = cfg.smoke();
    }
    cfg.validate()?;
    Ok(cfg)
}

fn model_path(dir: &Path, seed: u64) -> PathBuf {
    dir.join(format!("model_seed{seed}.txt"))
}

fn trained_for(cfg: &ExperimentConfig, seed: u64, dir: Option<&Path>) -> Result<TrainedPickPlace, ExperimentError> {
    match dir {
        None => pick_place::train(cfg, seed),
        Some(dir) => {
            let path = model_path(dir, seed);
            if !path.exists() {
                return Err(ExperimentError::MissingModel(path.display().to_string()));
            }
            match load_model::<f64>(&path).ctx("model file")? {
                StoredModel::Tpc(m) => pick_place::with_model(cfg, seed, m),
                StoredModel::Rnn(_) => Err(ExperimentError::Invalid(format!("{} holds an RNN", path.display()))),
            }
        }
    }
}

fn gen_data(cfg: &ExperimentConfig, out: &Path) -> Result<ReportBundle, ExperimentError> {
    let arm = ArmModel::seven_link();
    let mut bundle = ReportBundle::new("gen-data", cfg);
    std::fs::create_dir_all(out).ctx("output directory")?;
    for &seed in &cfg.seeds {
        let demos = gen_pick_place(&arm, &pick_place::demo_config(cfg, seed)).ctx("pick-and-place demonstrations")?;
        save_dataset(out.join(format!("pick_place_seed{seed}.dataset")), &demos).ctx("dataset file")?;
        bundle.set(format!("seed{seed}.pick_place_sequences"), demos.len());
        for cond in FollowThroughCondition::ALL {
            let seqs = follow_through::demos(cfg, cond, cfg.ft_reps, seed)?;
            save_dataset(out.join(format!("follow_through_{}_seed{seed}.dataset", cond.tag())), &seqs)
                .ctx("dataset file")?;
        }
    }
    Ok(bundle)
}

fn run(cli: &Cli) -> Result<ReportBundle, ExperimentError> {
    let cfg = load_config(&cli.common, &cli.command)?;
    let out = &cli.common.out;
    match &cli.command {
        Command::GenData => gen_data(&cfg, out),
        Command::Train => {
            let (bundle, trained) = pick_place::run(&cfg)?;
            std::fs::create_dir_all(out).ctx("output directory")?;
            for t in trained {
                save_model(model_path(out, t.seed), &StoredModel::Tpc(t.model)).ctx("model file")?;
            }
            Ok(bundle)
        }
        Command::Recall { model_dir, .. } => {
            let mut bundle = ReportBundle::new("recall", &cfg);
            for &seed in &cfg.seeds {
                let trained = trained_for(&cfg, seed, model_dir.as_deref())?;
                bundle.absorb("", recall::run(&cfg, &trained)?);
            }
            Ok(bundle)
        }
        Command::FaultGrid { model_dir } => {
            let mut bundle = ReportBundle::new("fault-grid", &cfg);
            for &seed in &cfg.seeds {
                let trained = trained_for(&cfg, seed, model_dir.as_deref())?;
                fault_grid::record(&mut bundle, seed, &fault_grid::evaluate(&cfg, &trained)?);
            }
            Ok(bundle)
        }
        Command::FollowThrough => follow_through::run(&cfg),
        Command::SpeedAccuracy => speed_accuracy::run(&cfg),
        Command::Capacity => capacity::run(&cfg),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli).and_then(|bundle| bundle.write_to(&cli.common.out).ctx("report files").map(|_| bundle)) {
        Ok(bundle) => {
            println!("{}", bundle.summary_json());
            ExitCode::SUCCESS
        }
        Err(e) => {
            let line = serde_json::json!({ "error": e.to_string(), "command": cli.command.name() });
            eprintln!("{line}");
            ExitCode::FAILURE
        }
    }
}
