//! The `dpbandit` command line.
//!
//! ```text
//! dpbandit simulate --arms 0.9,0.8,0.7 --horizon 1000 --runs 20 --agent ts --seed 1 --out out/
//! dpbandit account  --horizon 1024 --out out/
//! dpbandit audit    --tape tape.csv --diff-round 0 --diff-arm 0 --alt-reward 0 \
//!                   --trials 1000000 --agent ts --seed 1 --out out/
//! ```
//!
//! `simulate` and `audit` also accept `--config <file.json>`, a JSON object
//! with the same keys as the flags (snake_case); explicit flags win and
//! unknown keys are rejected.
//!
//! Exit codes: 0 success, 1 I/O failure, 2 invalid input, 3 the audit's
//! empirical lower bound exceeded the analytical budget.

use std::ffi::OsString;
use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::accountant::{
    asymptotic_budget, compose, default_trajectory, step_privacies, Branch, CompositionInput,
    DeltaAllocation, StepRule,
};
use crate::audit::{analytical_budget, audit_algorithm, AuditSettings, NeighborPair, RewardTape};
use crate::bandit::{AgentSpec, BanditInstance};
use crate::error::{Error, Result};
use crate::harness::{
    regret_bound_privacy, run_many_with, write_runs_csv, ExperimentConfig, Parallelism,
    SummaryStats,
};
use crate::output::to_json;

pub const EXIT_OK: i32 = 0;
pub const EXIT_IO: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_PRIVACY_VIOLATION: i32 = 3;

#[derive(Debug, Parser)]
#[command(
    name = "dpbandit",
    version,
    about = "Private Thompson Sampling: simulate, account, audit"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run regret experiments and write runs.csv and summary.json.
    Simulate(SimulateArgs),
    /// Compose per-round privacy budgets and write account.json.
    Account(AccountArgs),
    /// Audit the privacy claim on neighboring reward tapes and write audit.json.
    Audit(AuditArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AgentArg {
    Ts,
    TsDp,
    Ucb1,
}

#[derive(Debug, clap::Args)]
pub struct SimulateArgs {
    /// JSON file with defaults for the flags below.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Comma-separated Bernoulli arm means.
    #[arg(long, value_delimiter = ',')]
    pub arms: Option<Vec<f64>>,
    #[arg(long)]
    pub horizon: Option<u64>,
    #[arg(long)]
    pub runs: Option<u64>,
    #[arg(long, value_enum)]
    pub agent: Option<AgentArg>,
    /// Privacy target of the ts-dp agent.
    #[arg(long)]
    pub epsilon: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateConfig {
    pub arms: Option<Vec<f64>>,
    pub horizon: Option<u64>,
    pub runs: Option<u64>,
    pub agent: Option<AgentArg>,
    pub epsilon: Option<f64>,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum StepRuleArg {
    ClosedForm,
    ExactRoot,
}

#[derive(Debug, clap::Args)]
pub struct AccountArgs {
    #[arg(long)]
    pub horizon: u64,
    /// CSV of pull counts (one per field, optional `count` header).
    #[arg(long)]
    pub trajectory: Option<PathBuf>,
    /// Per-step δ; defaults to T⁻⁵/2.
    #[arg(long)]
    pub delta_step: Option<f64>,
    /// Composition slack δ̃; defaults to T⁻⁴/2. Zero restricts to basic composition.
    #[arg(long)]
    pub slack: Option<f64>,
    #[arg(long, value_enum, default_value = "closed-form")]
    pub step_rule: StepRuleArg,
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
}

#[derive(Debug, clap::Args)]
pub struct AuditArgs {
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Reward tape CSV with header `t,arm0,arm1,...`.
    #[arg(long)]
    pub tape: Option<PathBuf>,
    #[arg(long)]
    pub diff_round: Option<usize>,
    #[arg(long)]
    pub diff_arm: Option<usize>,
    #[arg(long)]
    pub alt_reward: Option<f64>,
    #[arg(long)]
    pub trials: Option<u64>,
    #[arg(long, value_enum)]
    pub agent: Option<AgentArg>,
    #[arg(long)]
    pub epsilon: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Additive slack of the estimator; defaults to T⁻⁴.
    #[arg(long)]
    pub delta: Option<f64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AuditConfig {
    pub tape: Option<PathBuf>,
    pub diff_round: Option<usize>,
    pub diff_arm: Option<usize>,
    pub alt_reward: Option<f64>,
    pub trials: Option<u64>,
    pub agent: Option<AgentArg>,
    pub epsilon: Option<f64>,
    pub seed: Option<u64>,
    pub delta: Option<f64>,
    pub out: Option<PathBuf>,
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => {
                    EXIT_OK
                }
                _ => EXIT_USAGE,
            };
        }
    };
    let result = match cli.command {
        Command::Simulate(a) => cmd_simulate(a),
        Command::Account(a) => cmd_account(a),
        Command::Audit(a) => cmd_audit(a),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::Io(_) => EXIT_IO,
                _ => EXIT_USAGE,
            }
        }
    }
}

fn usage<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Config(msg.into()))
}

fn load_config<T: for<'de> Deserialize<'de> + Default>(path: Option<&Path>) -> Result<T> {
    let Some(path) = path else {
        return Ok(T::default());
    };
    let text = fs::read_to_string(path)?;
    serde_json::from_str(&text).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))
}

fn agent_spec(agent: AgentArg, epsilon: Option<f64>, horizon: u64) -> Result<AgentSpec> {
    match (agent, epsilon) {
        (AgentArg::Ts, _) => Ok(AgentSpec::TsStandard),
        (AgentArg::Ucb1, _) => Ok(AgentSpec::Ucb1),
        (AgentArg::TsDp, Some(eps)) => {
            let spec = AgentSpec::ts_privacy(eps, horizon)?;
            if spec.weaker_than_standard() {
                eprintln!(
                    "warning: epsilon {eps} exceeds (ln T)^2; the tuned variance is below the \
                     untuned one and the privacy target is weaker than the default agent's"
                );
            }
            Ok(spec)
        }
        (AgentArg::TsDp, None) => usage("--agent ts-dp requires --epsilon"),
    }
}

fn write_file(dir: &Path, name: &str, contents: &str) -> Result<()> {
    fs::create_dir_all(dir)?;
    fs::write(dir.join(name), contents)?;
    Ok(())
}

#[derive(Serialize)]
struct SimulateSummary<'a> {
    #[serde(flatten)]
    stats: &'a SummaryStats,
    /// Present for ts-dp; null when the bound is undefined (K = 1).
    #[serde(skip_serializing_if = "Option::is_none")]
    regret_bound_privacy: Option<Option<f64>>,
}

pub fn cmd_simulate(args: SimulateArgs) -> Result<i32> {
    let file: SimulateConfig = load_config(args.config.as_deref())?;
    let Some(arms) = args.arms.or(file.arms) else {
        return usage("--arms is required");
    };
    let Some(horizon) = args.horizon.or(file.horizon) else {
        return usage("--horizon is required");
    };
    let Some(agent) = args.agent.or(file.agent) else {
        return usage("--agent is required");
    };
    let runs = args.runs.or(file.runs).unwrap_or(1);
    let seed = args.seed.or(file.seed).unwrap_or(0);
    let epsilon = args.epsilon.or(file.epsilon);
    let out = args.out.or(file.out).unwrap_or_else(|| PathBuf::from("."));

    let cfg = ExperimentConfig {
        env: BanditInstance::bernoulli(arms)?,
        agent: agent_spec(agent, epsilon, horizon)?,
        horizon,
        runs,
        base_seed: seed,
    };
    cfg.validate()?;
    let exp = run_many_with(&cfg, Parallelism::from_env())?;

    let regret_bound_privacy = match cfg.agent {
        AgentSpec::TsPrivacy { epsilon, .. } => {
            Some(regret_bound_privacy(horizon, cfg.num_arms(), epsilon).ok())
        }
        _ => None,
    };
    let summary = to_json(&SimulateSummary {
        stats: &exp.summary,
        regret_bound_privacy,
    })
    .map_err(|e| Error::Io(e.into()))?;

    fs::create_dir_all(&out)?;
    write_runs_csv(
        &exp.records,
        BufWriter::new(File::create(out.join("runs.csv"))?),
    )?;
    write_file(&out, "summary.json", &summary)?;
    Ok(EXIT_OK)
}

/// Reads pull counts from CSV text: any layout of comma/newline separated
/// nonnegative integers, optionally preceded by a `count` header.
pub fn parse_trajectory(text: &str) -> Result<Vec<u64>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let mut counts = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| Error::Parse(e.to_string()))?;
        for field in rec.iter().filter(|f| !f.is_empty()) {
            match field.parse::<u64>() {
                Ok(k) => counts.push(k),
                Err(_) if i == 0 && field.eq_ignore_ascii_case("count") => {}
                Err(_) => return Err(Error::Parse(format!("bad pull count `{field}`"))),
            }
        }
    }
    if counts.is_empty() {
        return Err(Error::Parse("trajectory is empty".into()));
    }
    Ok(counts)
}

#[derive(Serialize)]
struct StepRecord {
    count: u64,
    epsilon: f64,
    delta: f64,
}

#[derive(Serialize)]
struct AccountReport {
    #[serde(rename = "T")]
    horizon: u64,
    eps_composed: f64,
    delta_total: f64,
    branch: Branch,
    eps_theorem1: f64,
    delta_theorem1: f64,
    per_step: Vec<StepRecord>,
}

pub fn cmd_account(args: AccountArgs) -> Result<i32> {
    if args.horizon < 2 {
        return usage(format!(
            "--horizon must be at least 2, got {}",
            args.horizon
        ));
    }
    let alloc = DeltaAllocation::for_horizon(args.horizon)?;
    let delta_step = args.delta_step.unwrap_or(alloc.delta_step);
    let slack = args.slack.unwrap_or(alloc.slack);
    if !(0.0..1.0).contains(&slack) {
        return usage(format!("--slack must lie in [0, 1), got {slack}"));
    }
    let trajectory = match &args.trajectory {
        Some(path) => parse_trajectory(&fs::read_to_string(path)?)?,
        None => default_trajectory(args.horizon),
    };
    let rule = match args.step_rule {
        StepRuleArg::ClosedForm => StepRule::ClosedForm,
        StepRuleArg::ExactRoot => StepRule::ExactRoot,
    };
    let steps = step_privacies(&trajectory, delta_step, rule)?;
    let per_step = trajectory
        .iter()
        .zip(&steps)
        .map(|(&count, s)| StepRecord {
            count,
            epsilon: s.epsilon,
            delta: s.delta,
        })
        .collect();
    let budget = compose(&CompositionInput { steps, slack });
    let theorem = asymptotic_budget(args.horizon)?;
    let report = AccountReport {
        horizon: args.horizon,
        eps_composed: budget.epsilon,
        delta_total: budget.delta,
        branch: budget.branch,
        eps_theorem1: theorem.epsilon,
        delta_theorem1: theorem.delta,
        per_step,
    };
    let json = to_json(&report).map_err(|e| Error::Io(e.into()))?;
    write_file(&args.out, "account.json", &json)?;
    Ok(EXIT_OK)
}

pub fn cmd_audit(args: AuditArgs) -> Result<i32> {
    let file: AuditConfig = load_config(args.config.as_deref())?;
    let Some(tape_path) = args.tape.or(file.tape) else {
        return usage("--tape is required");
    };
    let Some(round) = args.diff_round.or(file.diff_round) else {
        return usage("--diff-round is required");
    };
    let Some(arm) = args.diff_arm.or(file.diff_arm) else {
        return usage("--diff-arm is required");
    };
    let Some(alt) = args.alt_reward.or(file.alt_reward) else {
        return usage("--alt-reward is required");
    };
    let Some(trials) = args.trials.or(file.trials) else {
        return usage("--trials is required");
    };
    let agent = args.agent.or(file.agent).unwrap_or(AgentArg::Ts);
    let epsilon = args.epsilon.or(file.epsilon);
    let seed = args.seed.or(file.seed).unwrap_or(0);
    let out = args.out.or(file.out).unwrap_or_else(|| PathBuf::from("."));
    if trials == 0 {
        return usage("--trials must be positive");
    }

    let tape = RewardTape::from_csv(File::open(&tape_path)?)?;
    let horizon = tape.horizon();
    let pair = NeighborPair::new(tape, round, arm, alt)?;
    let spec = agent_spec(agent, epsilon, horizon as u64)?;
    let budget = analytical_budget(horizon, round)?;
    let mut settings = AuditSettings::for_horizon(trials, seed, horizon);
    if let Some(d) = args.delta.or(file.delta) {
        if !(0.0..1.0).contains(&d) {
            return usage(format!("--delta must lie in [0, 1), got {d}"));
        }
        settings.delta = d;
    }
    let report =
        Parallelism::from_env().install(|| audit_algorithm(&spec, &pair, &settings, &budget))?;
    let json = to_json(&report).map_err(|e| Error::Io(e.into()))?;
    write_file(&out, "audit.json", &json)?;
    Ok(if report.pass {
        EXIT_OK
    } else {
        EXIT_PRIVACY_VIOLATION
    })
}
