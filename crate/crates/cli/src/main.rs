//! `tactile-hand`: runs the simulated hand experiments.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use tactile_hand::harness::experiments::{training_panels, write_trajectory};
use tactile_hand::harness::plot::write_plot;
use tactile_hand::harness::{self, all_passed, Check, Profile, RunConfig, RunDir, OUT_DIR_ENV};

#[derive(Parser)]
#[command(name = "tactile-hand", version, about = "Simulated tactile hand: SSIM and pose feedback experiments")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// TOML config; unspecified keys take the profile defaults.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output root; each run creates a timestamped directory inside it.
    #[arg(long, global = true, env = OUT_DIR_ENV)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_parser = ["desk", "paper"])]
    profile: Option<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Synthesize a labelled contact dataset.
    Collect {
        /// Number of samples (overrides the config).
        #[arg(long)]
        n: Option<usize>,
    },
    /// Train the pose network on a collected dataset.
    Train {
        #[arg(long)]
        dataset: PathBuf,
    },
    /// Evaluate a trained model on the dataset's test split.
    Eval {
        #[arg(long)]
        dataset: PathBuf,
        #[arg(long, required_unless_present = "oracle")]
        model: Option<PathBuf>,
        /// Feed the labels back as predictions.
        #[arg(long)]
        oracle: bool,
    },
    /// SSIM set-point control on every object.
    Exp1,
    /// SSIM closure followed by an open-loop motor ramp.
    Exp3a {
        #[arg(long)]
        model: PathBuf,
    },
    /// SSIM closure followed by stepped depth set points.
    Exp3b {
        #[arg(long)]
        model: PathBuf,
    },
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Collect { .. } => "collect",
            Command::Train { .. } => "train",
            Command::Eval { .. } => "eval",
            Command::Exp1 => "exp1",
            Command::Exp3a { .. } => "exp3a",
            Command::Exp3b { .. } => "exp3b",
        }
    }
}

fn resolve_config(common: &Common) -> Result<RunConfig> {
    let profile = common.profile.as_deref().map(str::parse::<Profile>).transpose()?;
    let mut cfg = match &common.config {
        Some(path) => RunConfig::load(path, profile)?,
        None => RunConfig::for_profile(profile.unwrap_or(Profile::Desk)),
    };
    if let Some(seed) = common.seed {
        cfg.seed = seed;
    }
    Ok(cfg)
}

fn run(cli: Cli) -> Result<bool> {
    let mut cfg = resolve_config(&cli.common)?;
    let root = cli.common.out.clone().unwrap_or_else(harness::default_output_root);
    let name = cli.command.name();
    if let Command::Collect { n: Some(n) } = cli.command {
        cfg.posenet.dataset_size = n;
    }
    cfg.validate()?;
    let dir = RunDir::create(&root, name)?;
    eprintln!("{name}: writing to {}", dir.path().display());
    let checks = execute(&cli.command, &cfg, &dir)?;
    for c in &checks {
        println!("[{}] {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
    }
    dir.finish(name, &cfg, &checks)?;
    Ok(all_passed(&checks))
}

fn execute(command: &Command, cfg: &RunConfig, dir: &RunDir) -> Result<Vec<Check>> {
    match command {
        Command::Collect { .. } => {
            let summary = harness::exp2_collect(cfg, &dir.file("dataset"))?;
            dir.write_json("summary.json", &summary)?;
            println!("dataset: {}", dir.file("dataset").display());
            Ok(Vec::new())
        }
        Command::Train { dataset } => {
            let (model, log) = harness::exp2_train(cfg, dataset, |r| {
                eprintln!("epoch {:>3}  train {:.5}  val {:?}", r.epoch, r.train_loss, r.val_loss);
            })?;
            model.save(&dir.file("model.json"))?;
            log.write_csv(&dir.file("training_log.csv"))?;
            write_plot(&dir.file("training_log.png"), &training_panels(&log))?;
            dir.write_json(
                "summary.json",
                &serde_json::json!({ "selected_epoch": log.selected_epoch, "epochs": log.epochs.len(), "n_params": model.n_params() }),
            )?;
            println!("model: {}", dir.file("model.json").display());
            Ok(Vec::new())
        }
        Command::Eval { dataset, model, oracle } => {
            let (report, checks) = harness::exp2_eval(cfg, dataset, model.as_deref(), *oracle)?;
            print!("{report}");
            dir.write_text("report.txt", &report.to_string())?;
            dir.write_json("summary.json", &report)?;
            Ok(checks)
        }
        Command::Exp1 => {
            let out = harness::exp1(cfg)?;
            for r in &out.runs {
                write_trajectory(dir, &format!("exp1_{}", r.object), &r.log, false)?;
            }
            dir.write_json("summary.json", &out.runs)?;
            Ok(out.checks)
        }
        Command::Exp3a { model } => {
            let model = load(model)?;
            let out = harness::exp3a(cfg, &model)?;
            write_trajectory(dir, "exp3a", &out.log, true)?;
            dir.write_json("summary.json", &serde_json::json!({ "closure_rows": out.closure_rows, "saturation": out.saturation }))?;
            Ok(out.checks)
        }
        Command::Exp3b { model } => {
            let model = load(model)?;
            let out = harness::exp3b(cfg, &model)?;
            write_trajectory(dir, "exp3b", &out.log, true)?;
            dir.write_json("summary.json", &serde_json::json!({ "closure_rows": out.closure_rows, "plateaus": out.plateaus }))?;
            Ok(out.checks)
        }
    }
}

fn load(path: &Path) -> Result<tactile_hand::posenet::PoseNet> {
    harness::load_model(path).with_context(|| format!("loading model {}", path.display()))
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
