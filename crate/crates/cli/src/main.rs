use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use neo_core::config::{Config, FeedbackPolicy, Model, Overrides};
use neo_core::harness::{
    parse_groups, render_matrix_summary, run_episode, run_learning, run_matrix,
    write_matrix_reports, write_trajectory_csv, EpisodeOptions, Scenario,
};
use neo_core::personalization::{Personality, PreferenceStore, SimulatedUser};
use neo_core::{Error, Result};
use serde::Deserialize;

#[derive(Parser)]
#[command(
    name = "neo",
    version,
    about = "Joint observation decision engine and simulation harness"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate the occupation x disruption x sensor-group accuracy matrix.
    Matrix(MatrixArgs),
    /// Replay the learning scenario against simulated users.
    Learn(LearnArgs),
    /// Run a single scenario and print its decisions as JSON lines.
    Simulate(SimulateArgs),
}

#[derive(Args)]
struct Common {
    /// Configuration file merged over the built-in default.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Clock period in milliseconds.
    #[arg(long)]
    period: Option<u64>,
    /// Probability of losing any single reading.
    #[arg(long)]
    dropout: Option<f64>,
    #[arg(long)]
    vote_weight: Option<f64>,
    #[arg(long)]
    occupation_threshold: Option<f64>,
    #[arg(long)]
    action_threshold: Option<f64>,
}

impl Common {
    fn load(&self, trials: Option<u32>) -> Result<(Config, Model)> {
        let mut cfg = match &self.config {
            Some(p) => Config::load(p)?,
            None => Config::embedded(),
        };
        Overrides {
            period_ms: self.period,
            dropout: self.dropout,
            trials,
            vote_weight: self.vote_weight,
            occupation_threshold: self.occupation_threshold,
            action_threshold: self.action_threshold,
        }
        .apply(&mut cfg);
        let model = Model::from_config(cfg.clone())?;
        Ok((cfg, model))
    }
}

#[derive(Args)]
struct MatrixArgs {
    #[command(flatten)]
    common: Common,
    /// Groups, e.g. `S1..S10`, `S10,S7` or a category list such as `PU-VE`.
    #[arg(long, default_value = "S1..S10")]
    groups: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Trials per cell.
    #[arg(long)]
    trials: Option<u32>,
    /// Directory for matrix.csv, logs/ and effective-config.toml.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum PolicyArg {
    EveryRound,
    ActedOnly,
}

#[derive(Args)]
struct LearnArgs {
    #[command(flatten)]
    common: Common,
    /// Simulated user: A, B, C or `all`.
    #[arg(long, default_value = "all")]
    user: String,
    /// Feedback schedule file (`label` and `schedule` keys); replaces --user.
    #[arg(long)]
    schedule: Option<PathBuf>,
    #[arg(long, default_value_t = 10)]
    rounds: usize,
    /// Overrides the configured feedback policy.
    #[arg(long, value_enum)]
    policy: Option<PolicyArg>,
    /// Directory for trajectory-<user>.csv and preferences-<user>.toml.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ScenarioFile {
    occupation: String,
    disruption: String,
    #[serde(default = "default_group")]
    group: String,
}

fn default_group() -> String {
    "S10".into()
}

#[derive(Args)]
struct SimulateArgs {
    #[command(flatten)]
    common: Common,
    /// Scenario file with `occupation`, `disruption` and optional `group`.
    #[arg(long, conflicts_with_all = ["occupation", "disruption"])]
    scenario: Option<PathBuf>,
    #[arg(long, default_value = "O1")]
    occupation: String,
    #[arg(long, default_value = "D1")]
    disruption: String,
    #[arg(long, default_value = "S10")]
    group: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Print the effective configuration and exit.
    #[arg(long)]
    dry_run: bool,
}

fn write_file(path: &Path, body: &[u8]) -> Result<()> {
    std::fs::write(path, body).map_err(|e| Error::io(path, e))
}

fn cmd_matrix(a: &MatrixArgs) -> Result<()> {
    let (cfg, model) = a.common.load(a.trials)?;
    let groups = parse_groups(&a.groups)?;
    let matrix = run_matrix(&model, &groups, a.seed)?;
    print!("{}", render_matrix_summary(&matrix));
    if let Some(dir) = &a.out {
        write_matrix_reports(dir, &matrix, &cfg)?;
    }
    Ok(())
}

fn cmd_learn(a: &LearnArgs) -> Result<()> {
    let (_, model) = a.common.load(None)?;
    let users = match &a.schedule {
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| Error::io(p, e))?;
            vec![SimulatedUser::from_toml(&text)?]
        }
        None if a.user.eq_ignore_ascii_case("all") => {
            [Personality::A, Personality::B, Personality::C]
                .into_iter()
                .map(SimulatedUser::builtin)
                .collect()
        }
        None => vec![SimulatedUser::builtin(a.user.parse()?)],
    };
    let policy = match a.policy {
        Some(PolicyArg::EveryRound) => FeedbackPolicy::EveryRound,
        Some(PolicyArg::ActedOnly) => FeedbackPolicy::ActedOnly,
        None => model.config.learning.feedback_policy,
    };
    if let Some(dir) = &a.out {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    let mut stdout = std::io::stdout().lock();
    for user in &users {
        let t = run_learning(
            &model,
            user,
            a.rounds,
            policy,
            Some(PreferenceStore::new(model.config.preferences)),
        )?;
        let mut csv = Vec::new();
        write_trajectory_csv(&t, &mut csv).expect("vec write");
        let _ = writeln!(stdout, "user {}", t.user);
        let _ = stdout.write_all(&csv);
        if let Some(dir) = &a.out {
            write_file(&dir.join(format!("trajectory-{}.csv", t.user)), &csv)?;
            write_file(
                &dir.join(format!("preferences-{}.toml", t.user)),
                t.store.to_toml().as_bytes(),
            )?;
        }
    }
    Ok(())
}

fn cmd_simulate(a: &SimulateArgs) -> Result<()> {
    let (cfg, model) = a.common.load(None)?;
    if a.dry_run {
        print!("{}", cfg.to_toml_string());
        return Ok(());
    }
    let (occupation, disruption, group) = match &a.scenario {
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| Error::io(p, e))?;
            let s: ScenarioFile =
                toml::from_str(&text).map_err(|e| Error::config(e.to_string()))?;
            (s.occupation, s.disruption, s.group)
        }
        None => (a.occupation.clone(), a.disruption.clone(), a.group.clone()),
    };
    let scenario = Scenario {
        occupation,
        disruption,
        group: group.parse()?,
    };
    let opts = EpisodeOptions {
        seed: a.seed,
        trial: 0,
        dropout: cfg.harness.dropout,
    };
    let (log, _) = run_episode(
        &model,
        &scenario,
        PreferenceStore::new(cfg.preferences),
        opts,
    )?;
    let mut stdout = std::io::stdout().lock();
    for r in &log.records {
        let _ = writeln!(
            stdout,
            "{}",
            serde_json::to_string(r).expect("record serializes")
        );
    }
    let acc =
        neo_core::harness::accuracy(&log).map_or_else(|| "empty".to_owned(), |x| format!("{x:.4}"));
    eprintln!("ground truth {}, accuracy {acc}", log.ground_truth);
    Ok(())
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Io { .. } => 3,
        Error::Config(_) | Error::RoundOutOfRange { .. } => 2,
        _ => 1,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Matrix(a) => cmd_matrix(a),
        Command::Learn(a) => cmd_learn(a),
        Command::Simulate(a) => cmd_simulate(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("neo: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
