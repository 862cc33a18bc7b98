use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde::{Deserialize, Serialize};

use convsim::attribution::AttributionConfig;
use convsim::harness::report::read_report;
use convsim::harness::{
    emit_report, generate_logs, rank_schemes, run_ab_test, run_probe, train_agents, training_attribution,
    ExperimentSpec, HarnessError,
};
use convsim::logio::{load_agents, parse_config, read_log, save_agents};

#[derive(Parser)]
#[command(name = "convsim", version, about = "Conversion-aware recommendation simulator")]
struct Cli {
    /// Experiment config (TOML). Defaults are used when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides `env.master_seed`.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory; overrides `output_dir`.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads for simulation and training.
    #[arg(long, global = true, default_value_t = 1)]
    parallel: usize,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate training users under the logging policy and write `logs.jsonl`.
    Simulate,
    /// Train every agent on `logs.jsonl`; writes `models/` and `training.json`.
    Train,
    /// Evaluate trained agents on fresh users; writes `metrics.json`.
    Abtest,
    /// Forced-click incrementality probes; writes `probe.json`.
    Probe,
    /// Score attribution schemes against the oracle; writes `rankings.json`.
    Rank,
    /// Render `metrics.json` (and `rankings.json` if present) into `report/`.
    Report,
}

#[derive(Serialize, Deserialize)]
struct TrainingSummary {
    attribution: AttributionConfig,
    agents: Vec<AgentTraining>,
}

#[derive(Serialize, Deserialize)]
struct AgentTraining {
    agent: String,
    empty_input: bool,
    epoch_losses: Vec<f64>,
}

fn write_json<T: Serialize>(value: &T, path: &Path) -> Result<(), HarnessError> {
    let mut text = serde_json::to_string_pretty(value).expect("serializable");
    text.push('\n');
    std::fs::write(path, text).map_err(|e| HarnessError::io(path, e))
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T, HarnessError> {
    let text = std::fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| HarnessError::Format {
        path: path.to_path_buf(),
        message: e.to_string(),
    })
}

fn load_spec(cli: &Cli) -> Result<ExperimentSpec, HarnessError> {
    let mut spec = match &cli.config {
        Some(path) => parse_config(path)?,
        None => ExperimentSpec::default(),
    };
    if let Some(seed) = cli.seed {
        spec.env.master_seed = seed;
    }
    if let Some(out) = &cli.out {
        spec.output_dir = out.clone();
    }
    spec.validate()?;
    Ok(spec)
}

fn run(cli: &Cli) -> Result<(), HarnessError> {
    let spec = load_spec(cli)?;
    let out = spec.output_dir.clone();
    std::fs::create_dir_all(&out).map_err(|e| HarnessError::io(&out, e))?;
    let threads = cli.parallel.max(1);
    let logs_path = out.join("logs.jsonl");

    match cli.command {
        Command::Simulate => {
            let logs = generate_logs(&spec, &spec.build_catalog(), threads, Some(&logs_path))?;
            println!("wrote {} timelines to {}", logs.len(), logs_path.display());
        }
        Command::Train => {
            let logs = read_log(&logs_path)?;
            let attribution = training_attribution(&spec, &logs);
            let trained = train_agents(&spec, &logs, &attribution, threads);
            let agents: Vec<_> = trained.iter().map(|(a, _)| a.clone()).collect();
            let files = save_agents(&agents, &out.join("models"))?;
            let summary = TrainingSummary {
                attribution,
                agents: trained
                    .iter()
                    .map(|(agent, outcome)| AgentTraining {
                        agent: agent.label(),
                        empty_input: outcome.as_ref().is_some_and(|o| o.empty_input),
                        epoch_losses: outcome.as_ref().map(|o| o.epoch_losses.clone()).unwrap_or_default(),
                    })
                    .collect(),
            };
            for a in summary.agents.iter().filter(|a| a.empty_input) {
                eprintln!("warning: {} had no training examples; its model is all zeros", a.agent);
            }
            write_json(&summary, &out.join("training.json"))?;
            println!("trained {} agents, wrote {} model files", agents.len(), files.len());
        }
        Command::Abtest => {
            let training: TrainingSummary = read_json(&out.join("training.json"))?;
            let agents = load_agents(&spec.agents, spec.env.num_products, &out.join("models"))?;
            let report = run_ab_test(&spec, &spec.build_catalog(), &agents, &training.attribution, threads)?;
            write_json(&report, &out.join("metrics.json"))?;
            for m in &report.agents {
                println!(
                    "{:<28} sales/user {:.4} [{:.4}, {:.4}]",
                    m.agent, m.sales_per_user, m.sales_ci.lo, m.sales_ci.hi
                );
            }
        }
        Command::Probe => {
            let summary = run_probe(&spec, &spec.build_catalog(), threads)?;
            write_json(&summary, &out.join("probe.json"))?;
            println!(
                "mean delta {:.5} over {} users, 95% CI [{:.5}, {:.5}]",
                summary.mean_delta, summary.n_users, summary.ci.lo, summary.ci.hi
            );
        }
        Command::Rank => {
            let logs = read_log(&logs_path)?;
            let attribution = training_attribution(&spec, &logs);
            let rankings = rank_schemes(&spec, &spec.build_catalog(), &logs, &attribution)?;
            write_json(&rankings, &out.join("rankings.json"))?;
            for r in &rankings {
                match r.mean_tau {
                    Some(tau) => println!("{:<24} mean tau {tau:.4}", r.scheme.name()),
                    None => println!("{:<24} undefined (constant scores)", r.scheme.name()),
                }
            }
        }
        Command::Report => {
            let mut report = read_report(&out.join("metrics.json"))?;
            let rankings_path = out.join("rankings.json");
            if rankings_path.exists() {
                report.rankings = read_json(&rankings_path)?;
            }
            let files = emit_report(&report, &out.join("report"))?;
            for f in files {
                println!("{}", f.display());
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::FAILURE
        }
    }
}
