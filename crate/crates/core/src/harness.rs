//! Seeded Monte Carlo experiments.
//!
//! Run `r` of an experiment draws from sub-stream `r` of the base seed (see
//! [`crate::rng::derive_seed`]), so its record depends only on
//! `(config, r)`. Runs may execute on any number of threads; results are put
//! back in run order before aggregation, which always sums in that order.

use std::io::{self, Write};

use rayon::prelude::*;
use serde::Serialize;

use crate::bandit::{step, AgentSpec, AgentState, BanditInstance, Environment};
use crate::error::{config, domain, Error, Result};
use crate::output::fmt_f64;
use crate::rng;

/// Environment variable capping the number of worker threads.
pub const THREADS_ENV: &str = "DPBANDIT_THREADS";

/// One experiment: environment, agent, horizon, number of runs and seed.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub env: BanditInstance,
    pub agent: AgentSpec,
    pub horizon: u64,
    pub runs: u64,
    pub base_seed: u64,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.horizon == 0 {
            return config("horizon must be at least 1");
        }
        if self.runs == 0 {
            return config("runs must be at least 1");
        }
        self.agent.validate()?;
        if let AgentSpec::TsPrivacy { horizon, .. } = self.agent {
            if horizon != self.horizon {
                return config(format!(
                    "agent horizon {horizon} differs from experiment horizon {}",
                    self.horizon
                ));
            }
        }
        Ok(())
    }

    pub fn num_arms(&self) -> usize {
        self.env.num_arms()
    }
}

/// One simulated trajectory.
#[derive(Debug, Clone, PartialEq)]
pub struct RunRecord {
    pub run_id: u64,
    pub actions: Vec<usize>,
    pub rewards: Vec<f64>,
    /// Pseudo-regret after each round: cumulative gap of the chosen arms.
    pub cum_regret: Vec<f64>,
}

impl RunRecord {
    pub fn final_regret(&self) -> f64 {
        self.cum_regret.last().copied().unwrap_or(0.0)
    }

    pub fn pull_counts(&self, num_arms: usize) -> Vec<u64> {
        let mut counts = vec![0; num_arms];
        for &a in &self.actions {
            counts[a] += 1;
        }
        counts
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SummaryStats {
    pub mean_final_regret: f64,
    pub std_final_regret: f64,
    /// Normal-approximation 95% half-width of the mean final regret.
    pub ci95_halfwidth: f64,
    pub per_arm_pulls_mean: Vec<f64>,
}

/// Records of all runs plus their summary.
#[derive(Debug, Clone, PartialEq)]
pub struct Experiment {
    pub config: ExperimentConfig,
    pub records: Vec<RunRecord>,
    pub summary: SummaryStats,
}

/// How runs are scheduled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Parallelism {
    Sequential,
    /// Rayon's global pool.
    #[default]
    Machine,
    /// A dedicated pool with this many threads.
    Threads(usize),
}

impl Parallelism {
    /// [`Parallelism::Threads`] if `DPBANDIT_THREADS` holds a positive
    /// integer, the machine default otherwise.
    pub fn from_env() -> Self {
        match std::env::var(THREADS_ENV)
            .ok()
            .and_then(|v| v.trim().parse::<usize>().ok())
        {
            Some(n) if n > 0 => Parallelism::Threads(n),
            _ => Parallelism::Machine,
        }
    }

    /// Runs `f` with rayon parallel iterators bound to this setting.
    pub fn install<T, F>(self, f: F) -> T
    where
        T: Send,
        F: FnOnce() -> T + Send,
    {
        match self {
            Parallelism::Machine => f(),
            Parallelism::Sequential => pool(1).install(f),
            Parallelism::Threads(n) => pool(n).install(f),
        }
    }

    /// Maps `f` over `0..n` preserving index order.
    pub fn map_indexed<T, F>(self, n: u64, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(u64) -> T + Sync + Send,
    {
        match self {
            Parallelism::Sequential => (0..n).map(f).collect(),
            Parallelism::Machine => (0..n).into_par_iter().map(f).collect(),
            Parallelism::Threads(threads) => {
                pool(threads).install(|| (0..n).into_par_iter().map(f).collect())
            }
        }
    }
}

fn pool(threads: usize) -> rayon::ThreadPool {
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .expect("thread pool")
}

/// Simulates run `run_id` of `cfg`.
pub fn run_once(cfg: &ExperimentConfig, run_id: u64) -> Result<RunRecord> {
    cfg.validate()?;
    let t_max = cfg.horizon as usize;
    let mut stream = rng::sub_stream(cfg.base_seed, run_id);
    let mut state = AgentState::new(cfg.num_arms());
    let mut actions = Vec::with_capacity(t_max);
    let mut rewards = Vec::with_capacity(t_max);
    let mut cum_regret = Vec::with_capacity(t_max);
    let best = cfg.env.best_mean();
    let mut regret = 0.0;
    for _ in 0..t_max {
        let s = step(&cfg.env, &mut state, &cfg.agent, &mut stream)?;
        regret += best - cfg.env.arm_means()[s.action];
        actions.push(s.action);
        rewards.push(s.reward);
        cum_regret.push(regret);
    }
    Ok(RunRecord {
        run_id,
        actions,
        rewards,
        cum_regret,
    })
}

/// All runs of `cfg` on the machine's default parallelism.
pub fn run_many(cfg: &ExperimentConfig) -> Result<Experiment> {
    run_many_with(cfg, Parallelism::default())
}

pub fn run_many_with(cfg: &ExperimentConfig, parallelism: Parallelism) -> Result<Experiment> {
    cfg.validate()?;
    let records = parallelism
        .map_indexed(cfg.runs, |r| run_once(cfg, r))
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    let summary = summarize(&records, cfg.num_arms());
    Ok(Experiment {
        config: cfg.clone(),
        records,
        summary,
    })
}

/// Aggregates records in the order given.
pub fn summarize(records: &[RunRecord], num_arms: usize) -> SummaryStats {
    let n = records.len() as f64;
    let finals: Vec<f64> = records.iter().map(RunRecord::final_regret).collect();
    let mean = finals.iter().sum::<f64>() / n;
    let std = if records.len() > 1 {
        (finals.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0)).sqrt()
    } else {
        0.0
    };
    let mut pulls = vec![0u64; num_arms];
    for r in records {
        for (total, c) in pulls.iter_mut().zip(r.pull_counts(num_arms)) {
            *total += c;
        }
    }
    SummaryStats {
        mean_final_regret: mean,
        std_final_regret: std,
        ci95_halfwidth: 1.96 * std / n.sqrt(),
        per_arm_pulls_mean: pulls.iter().map(|&c| c as f64 / n).collect(),
    }
}

/// Regret order term `(ln T)²/ε + sqrt(K T ln K)` of the privacy-tuned agent.
pub fn regret_bound_privacy(horizon: u64, num_arms: usize, epsilon: f64) -> Result<f64> {
    if horizon < 2 {
        return domain(format!("horizon must be at least 2, got {horizon}"));
    }
    if num_arms < 2 {
        return domain(format!("the regret bound needs K >= 2, got {num_arms}"));
    }
    if epsilon.is_nan() || epsilon <= 0.0 {
        return domain(format!("epsilon must be positive, got {epsilon}"));
    }
    let k = num_arms as f64;
    let l = (horizon as f64).ln();
    Ok(l * l / epsilon + (k * horizon as f64 * k.ln()).sqrt())
}

/// Average number of pulls of arms whose mean is below the best mean.
pub fn mean_suboptimal_pulls(exp: &Experiment) -> f64 {
    let best = exp.config.env.best_mean();
    let means = exp.config.env.arm_means();
    let total: u64 = exp
        .records
        .iter()
        .map(|r| r.actions.iter().filter(|&&a| means[a] < best).count() as u64)
        .sum();
    total as f64 / exp.records.len() as f64
}

/// Extra suboptimal pulls of `privacy` relative to `standard`.
pub fn suboptimal_pull_inflation(standard: &Experiment, privacy: &Experiment) -> Result<f64> {
    if standard.config.env != privacy.config.env {
        return Err(Error::Config(
            "experiments use different environments".into(),
        ));
    }
    if standard.config.horizon != privacy.config.horizon {
        return config(format!(
            "experiments use different horizons ({} vs {})",
            standard.config.horizon, privacy.config.horizon
        ));
    }
    Ok(mean_suboptimal_pulls(privacy) - mean_suboptimal_pulls(standard))
}

/// Header of the per-round CSV.
pub const RUNS_CSV_HEADER: &str = "run_id,t,action,reward,cum_regret";

/// Writes one row per run per round, rounds numbered from 0.
pub fn write_runs_csv<W: Write>(records: &[RunRecord], mut out: W) -> io::Result<()> {
    writeln!(out, "{RUNS_CSV_HEADER}")?;
    for r in records {
        for (t, ((a, reward), regret)) in r
            .actions
            .iter()
            .zip(&r.rewards)
            .zip(&r.cum_regret)
            .enumerate()
        {
            writeln!(
                out,
                "{},{},{},{},{}",
                r.run_id,
                t,
                a,
                fmt_f64(*reward),
                fmt_f64(*regret)
            )?;
        }
    }
    out.flush()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn cfg(means: Vec<f64>, agent: AgentSpec, horizon: u64, runs: u64) -> ExperimentConfig {
        ExperimentConfig {
            env: BanditInstance::bernoulli(means).unwrap(),
            agent,
            horizon,
            runs,
            base_seed: 2024,
        }
    }

    #[test]
    fn equal_means_have_zero_regret() {
        let r = run_once(&cfg(vec![0.4; 3], AgentSpec::TsStandard, 500, 1), 0).unwrap();
        assert!(r.cum_regret.iter().all(|&x| x == 0.0));
    }

    #[test]
    fn single_arm_always_played() {
        let r = run_once(&cfg(vec![0.7], AgentSpec::Ucb1, 100, 1), 3).unwrap();
        assert!(r.actions.iter().all(|&a| a == 0));
        assert_eq!(r.actions.len(), 100);
    }

    #[test]
    fn run_once_is_deterministic() {
        let c = cfg(vec![0.9, 0.5, 0.2], AgentSpec::TsStandard, 300, 1);
        assert_eq!(run_once(&c, 5).unwrap(), run_once(&c, 5).unwrap());
        assert_ne!(
            run_once(&c, 5).unwrap().actions,
            run_once(&c, 6).unwrap().actions
        );
    }

    #[test]
    fn regret_is_monotone_and_bounded() {
        let c = cfg(vec![0.9, 0.5, 0.2], AgentSpec::Ucb1, 400, 1);
        let r = run_once(&c, 0).unwrap();
        let max_gap = 0.9 - 0.2;
        for (t, w) in r.cum_regret.windows(2).enumerate() {
            assert!(w[1] >= w[0]);
            assert!(w[1] <= (t + 2) as f64 * max_gap + 1e-12);
        }
    }

    #[test]
    fn single_run_summary() {
        let exp = run_many(&cfg(vec![0.9, 0.1], AgentSpec::TsStandard, 50, 1)).unwrap();
        assert_eq!(exp.summary.std_final_regret, 0.0);
        assert_eq!(exp.summary.ci95_halfwidth, 0.0);
        assert_eq!(exp.summary.mean_final_regret, exp.records[0].final_regret());
    }

    #[test]
    fn parallel_matches_sequential() {
        let c = cfg(vec![0.9, 0.6, 0.5], AgentSpec::TsStandard, 200, 16);
        let seq = run_many_with(&c, Parallelism::Sequential).unwrap();
        assert_eq!(seq, run_many_with(&c, Parallelism::Machine).unwrap());
        assert_eq!(seq, run_many_with(&c, Parallelism::Threads(3)).unwrap());
        assert!(seq
            .records
            .iter()
            .enumerate()
            .all(|(i, r)| r.run_id == i as u64));
    }

    #[test]
    fn pulls_sum_to_horizon() {
        let exp = run_many(&cfg(vec![0.9, 0.6, 0.5], AgentSpec::TsStandard, 333, 7)).unwrap();
        let total: f64 = exp.summary.per_arm_pulls_mean.iter().sum();
        assert_relative_eq!(total, 333.0, max_relative = 1e-14);
    }

    #[test]
    fn config_validation() {
        let mut c = cfg(
            vec![0.5, 0.4],
            AgentSpec::ts_privacy(1.0, 100).unwrap(),
            50,
            1,
        );
        assert!(c.validate().is_err());
        c.horizon = 100;
        assert!(c.validate().is_ok());
        c.runs = 0;
        assert!(c.validate().is_err());
    }

    #[test]
    fn bound_examples() {
        assert_relative_eq!(
            regret_bound_privacy(10_000, 5, 1.0).unwrap(),
            368.506_057_167_376_76,
            max_relative = 1e-12
        );
        let l2 = crate::bandit::log_horizon_squared(10_000);
        let core = (5.0 * 10_000.0 * 5f64.ln()).sqrt();
        assert_relative_eq!(
            regret_bound_privacy(10_000, 5, l2).unwrap(),
            1.0 + core,
            max_relative = 1e-14
        );
        assert!(regret_bound_privacy(10_000, 1, 1.0).is_err());
        assert!(regret_bound_privacy(1, 2, 1.0).is_err());
        let mut prev = f64::INFINITY;
        for eps in [0.01, 0.1, 1.0, 10.0, 100.0] {
            let b = regret_bound_privacy(1000, 3, eps).unwrap();
            assert!(b < prev);
            prev = b;
        }
    }

    #[test]
    fn inflation_is_zero_for_identity_and_zero_gap() {
        let horizon = 400;
        let eps = crate::bandit::log_horizon_squared(horizon);
        let std = run_many(&cfg(vec![0.8, 0.5], AgentSpec::TsStandard, horizon, 8)).unwrap();
        let tuned = run_many(&cfg(
            vec![0.8, 0.5],
            AgentSpec::ts_privacy(eps, horizon).unwrap(),
            horizon,
            8,
        ))
        .unwrap();
        assert_eq!(suboptimal_pull_inflation(&std, &tuned).unwrap(), 0.0);

        let flat_std = run_many(&cfg(vec![0.5; 3], AgentSpec::TsStandard, horizon, 4)).unwrap();
        let flat_priv = run_many(&cfg(
            vec![0.5; 3],
            AgentSpec::ts_privacy(0.5, horizon).unwrap(),
            horizon,
            4,
        ))
        .unwrap();
        assert_eq!(
            suboptimal_pull_inflation(&flat_std, &flat_priv).unwrap(),
            0.0
        );

        assert!(suboptimal_pull_inflation(&std, &flat_priv).is_err());
    }

    #[test]
    fn csv_layout() {
        let exp = run_many(&cfg(vec![0.5], AgentSpec::TsStandard, 3, 1)).unwrap();
        let mut buf = Vec::new();
        write_runs_csv(&exp.records, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], RUNS_CSV_HEADER);
        assert_eq!(lines.len(), 4);
        assert!(lines[1].starts_with("0,0,0,"));
        assert!(lines[3].starts_with("0,2,0,"));
    }
}
