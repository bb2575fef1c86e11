//! Empirical privacy audits on neighboring reward tapes.
//!
//! A [`RewardTape`] fixes, for every round and arm, the reward the agent
//! would observe. Two tapes differing in one entry form a [`NeighborPair`].
//! The agent is run many times on each tape and the full action sequences
//! are histogrammed; exact (Clopper-Pearson) bounds on each outcome's
//! probability then give a conservative lower bound on ε:
//!
//! ```text
//! ε̂ = max_o ln( (p̲_A(o) − δ) / p̄_B(o) ),   symmetrized over A ↔ B.
//! ```
//!
//! A correct `(ε, δ)` guarantee implies `ε̂ ≤ ε` with high probability.

use std::collections::BTreeMap;
use std::io::Read;

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;
use statrs::distribution::{Beta, ContinuousCDF};

use crate::accountant::{account_run, default_trajectory, Branch, DeltaAllocation, PrivacyBudget};
use crate::bandit::{step, AgentKind, AgentSpec, AgentState, Environment};
use crate::error::{config, domain, Error, Result};
use crate::rng;

/// Largest number of distinct action sequences (`K^T`) an audit may histogram.
pub const MAX_OUTCOMES: u64 = 4096;

/// Family-wise miscoverage of the outcome-probability bounds.
pub const FAMILY_ALPHA: f64 = 0.01;

/// Rewards indexed by `[round][arm]`, all in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct RewardTape {
    rewards: Vec<Vec<f64>>,
}

impl RewardTape {
    pub fn new(rewards: Vec<Vec<f64>>) -> Result<Self> {
        let Some(first) = rewards.first() else {
            return domain("a reward tape needs at least one round");
        };
        let k = first.len();
        if k == 0 {
            return domain("a reward tape needs at least one arm");
        }
        for (t, row) in rewards.iter().enumerate() {
            if row.len() != k {
                return domain(format!("round {t} has {} arms, expected {k}", row.len()));
            }
            if let Some(r) = row.iter().find(|r| !(0.0..=1.0).contains(*r)) {
                return domain(format!("reward {r} at round {t} outside [0, 1]"));
            }
        }
        Ok(Self { rewards })
    }

    /// Reads the CSV layout `t,arm0,arm1,...` with rounds in order from 0.
    pub fn from_csv<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .from_reader(reader);
        let headers = rdr.headers().map_err(parse_err)?.clone();
        let k = headers.len().saturating_sub(1);
        if headers.get(0) != Some("t") || k == 0 {
            return Err(Error::Parse("tape header must be `t,arm0,arm1,...`".into()));
        }
        for (i, h) in headers.iter().skip(1).enumerate() {
            if h != format!("arm{i}") {
                return Err(Error::Parse(format!(
                    "unexpected tape column `{h}`, expected `arm{i}`"
                )));
            }
        }
        let mut rows = Vec::new();
        for (i, rec) in rdr.records().enumerate() {
            let rec = rec.map_err(parse_err)?;
            let t: usize = rec[0]
                .parse()
                .map_err(|_| Error::Parse(format!("bad round `{}`", &rec[0])))?;
            if t != i {
                return Err(Error::Parse(format!(
                    "round {t} out of order, expected {i}"
                )));
            }
            let row = rec
                .iter()
                .skip(1)
                .map(|v| {
                    v.parse::<f64>()
                        .map_err(|_| Error::Parse(format!("bad reward `{v}`")))
                })
                .collect::<Result<Vec<_>>>()?;
            rows.push(row);
        }
        Self::new(rows)
    }

    pub fn horizon(&self) -> usize {
        self.rewards.len()
    }

    pub fn get(&self, round: usize, arm: usize) -> f64 {
        self.rewards[round][arm]
    }

    /// `K^T`, saturating.
    pub fn outcome_space(&self) -> u64 {
        (self.num_arms() as u64).saturating_pow(self.horizon() as u32)
    }
}

fn parse_err(e: csv::Error) -> Error {
    Error::Parse(e.to_string())
}

impl Environment for RewardTape {
    fn num_arms(&self) -> usize {
        self.rewards[0].len()
    }

    /// Reads the tape; consumes no randomness.
    fn reward<R: Rng + ?Sized>(&self, round: u64, arm: usize, _rng: &mut R) -> f64 {
        self.rewards[round as usize][arm]
    }
}

/// A tape and a single-entry modification of it.
#[derive(Debug, Clone, PartialEq)]
pub struct NeighborPair {
    base: RewardTape,
    round: usize,
    arm: usize,
    alt_reward: f64,
}

impl NeighborPair {
    pub fn new(base: RewardTape, round: usize, arm: usize, alt_reward: f64) -> Result<Self> {
        if round >= base.horizon() || arm >= base.num_arms() {
            return domain(format!(
                "entry ({round}, {arm}) outside a {}x{} tape",
                base.horizon(),
                base.num_arms()
            ));
        }
        if !(0.0..=1.0).contains(&alt_reward) {
            return domain(format!("alternative reward {alt_reward} outside [0, 1]"));
        }
        if alt_reward == base.get(round, arm) {
            return domain(
                "alternative reward equals the base reward; the tapes are not neighbors",
            );
        }
        Ok(Self {
            base,
            round,
            arm,
            alt_reward,
        })
    }

    pub fn base(&self) -> &RewardTape {
        &self.base
    }

    pub fn round(&self) -> usize {
        self.round
    }

    pub fn arm(&self) -> usize {
        self.arm
    }

    pub fn alt_reward(&self) -> f64 {
        self.alt_reward
    }

    pub fn neighbor(&self) -> RewardTape {
        let mut alt = self.base.clone();
        alt.rewards[self.round][self.arm] = self.alt_reward;
        alt
    }
}

/// Counts of full action sequences.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct OutcomeHistogram {
    counts: BTreeMap<Vec<usize>, u64>,
    trials: u64,
}

impl OutcomeHistogram {
    pub fn trials(&self) -> u64 {
        self.trials
    }

    pub fn count(&self, outcome: &[usize]) -> u64 {
        self.counts.get(outcome).copied().unwrap_or(0)
    }

    pub fn counts(&self) -> &BTreeMap<Vec<usize>, u64> {
        &self.counts
    }

    pub fn record(&mut self, outcome: Vec<usize>) {
        *self.counts.entry(outcome).or_default() += 1;
        self.trials += 1;
    }

    pub fn merge(&mut self, other: &OutcomeHistogram) {
        for (k, &c) in &other.counts {
            *self.counts.entry(k.clone()).or_default() += c;
        }
        self.trials += other.trials;
    }

    /// Builds a histogram from explicit counts (zero counts are dropped).
    pub fn from_counts(counts: impl IntoIterator<Item = (Vec<usize>, u64)>) -> Self {
        let mut h = Self::default();
        for (k, c) in counts {
            if c > 0 {
                *h.counts.entry(k).or_default() += c;
                h.trials += c;
            }
        }
        h
    }
}

fn encode(actions: &[usize], k: usize) -> usize {
    actions.iter().fold(0, |acc, &a| acc * k + a)
}

fn decode(mut code: usize, k: usize, t: usize) -> Vec<usize> {
    let mut out = vec![0; t];
    for slot in out.iter_mut().rev() {
        *slot = code % k;
        code /= k;
    }
    out
}

/// Runs `agent` on `tape` for `trials` independent trials; trial `i` uses
/// sub-stream `i` of `seed`.
pub fn run_on_tape(
    agent: &AgentSpec,
    tape: &RewardTape,
    trials: u64,
    seed: u64,
) -> Result<OutcomeHistogram> {
    agent.validate()?;
    let (k, t) = (tape.num_arms(), tape.horizon());
    let space = tape.outcome_space();
    if space > MAX_OUTCOMES {
        return config(format!(
            "K^T = {k}^{t} exceeds the audit limit of {MAX_OUTCOMES} outcomes"
        ));
    }
    if let AgentSpec::TsPrivacy { horizon, .. } = *agent {
        if (horizon as usize) < t {
            return config(format!(
                "agent horizon {horizon} shorter than tape length {t}"
            ));
        }
    }
    const CHUNK: u64 = 4096;
    let chunks = trials.div_ceil(CHUNK);
    let dense = (0..chunks)
        .into_par_iter()
        .map(|c| -> Result<Vec<u64>> {
            let mut counts = vec![0u64; space as usize];
            let mut actions = Vec::with_capacity(t);
            for i in c * CHUNK..((c + 1) * CHUNK).min(trials) {
                let mut stream = rng::sub_stream(seed, i);
                let mut state = AgentState::new(k);
                actions.clear();
                for _ in 0..t {
                    actions.push(step(tape, &mut state, agent, &mut stream)?.action);
                }
                counts[encode(&actions, k)] += 1;
            }
            Ok(counts)
        })
        .try_reduce(
            || vec![0u64; space as usize],
            |mut a, b| {
                a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
                Ok(a)
            },
        )?;
    Ok(OutcomeHistogram::from_counts(
        dense
            .into_iter()
            .enumerate()
            .map(|(code, c)| (decode(code, k, t), c)),
    ))
}

/// Exact two-sided `1 − alpha` binomial bounds for `successes` out of `trials`.
pub fn clopper_pearson(successes: u64, trials: u64, alpha: f64) -> (f64, f64) {
    assert!(trials > 0 && successes <= trials);
    let (x, n) = (successes as f64, trials as f64);
    let lower = if successes == 0 {
        0.0
    } else {
        Beta::new(x, n - x + 1.0)
            .expect("valid beta")
            .inverse_cdf(alpha / 2.0)
    };
    let upper = if successes == trials {
        1.0
    } else {
        Beta::new(x + 1.0, n - x)
            .expect("valid beta")
            .inverse_cdf(1.0 - alpha / 2.0)
    };
    (lower, upper)
}

/// Result of [`estimate_epsilon`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EpsilonEstimate {
    /// Conservative lower bound on ε, clamped at 0.
    pub eps_hat: f64,
    /// Optimistic companion using the opposite ends of the bounds, over
    /// outcomes observed in the denominator histogram; clamped at 0.
    pub ci_upper: f64,
    /// Outcome attaining `eps_hat`, if any numerator was positive.
    pub witness: Option<Vec<usize>>,
    /// Count of the witness outcome in the histogram giving the numerator,
    /// or the largest count anywhere when there is no witness.
    pub witness_count: u64,
}

/// Lower-bounds ε from two histograms with per-outcome confidence `1 − alpha`.
pub fn estimate_epsilon(
    a: &OutcomeHistogram,
    b: &OutcomeHistogram,
    delta: f64,
    alpha: f64,
) -> Result<EpsilonEstimate> {
    if a.trials == 0 || b.trials == 0 {
        return Err(Error::Estimation(
            "cannot estimate from an empty histogram".into(),
        ));
    }
    if a.trials != b.trials {
        return Err(Error::Estimation(format!(
            "histograms have different trial counts ({} vs {})",
            a.trials, b.trials
        )));
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return domain(format!("alpha must lie in (0, 1), got {alpha}"));
    }
    let outcomes: Vec<&Vec<usize>> = {
        let mut keys: Vec<&Vec<usize>> = a.counts.keys().chain(b.counts.keys()).collect();
        keys.sort();
        keys.dedup();
        keys
    };
    let mut eps_hat = f64::NEG_INFINITY;
    let mut ci_upper = f64::NEG_INFINITY;
    let mut witness = None;
    let mut witness_count = 0;
    for (num, den) in [(a, b), (b, a)] {
        for &o in &outcomes {
            let (num_lo, num_hi) = clopper_pearson(num.count(o), num.trials, alpha);
            let (den_lo, den_hi) = clopper_pearson(den.count(o), den.trials, alpha);
            let lower_num = num_lo - delta;
            if lower_num > 0.0 {
                let e = (lower_num / den_hi).ln();
                if e > eps_hat {
                    eps_hat = e;
                    witness = Some(o.clone());
                    witness_count = num.count(o);
                }
            }
            let upper_num = num_hi - delta;
            if upper_num > 0.0 && den_lo > 0.0 {
                ci_upper = ci_upper.max((upper_num / den_lo).ln());
            }
        }
    }
    if witness.is_none() {
        witness_count = a
            .counts
            .values()
            .chain(b.counts.values())
            .copied()
            .max()
            .unwrap_or(0);
    }
    Ok(EpsilonEstimate {
        eps_hat: eps_hat.max(0.0),
        ci_upper: ci_upper.max(0.0),
        witness,
        witness_count,
    })
}

/// Analytical budget for a neighbor pair changed at `round` of a
/// `horizon`-round tape: the affected arm may be released at every remaining
/// round, with the smallest possible counts `0, 1, ..., horizon − round − 1`,
/// and δ split as in [`DeltaAllocation::for_horizon`].
pub fn analytical_budget(horizon: usize, round: usize) -> Result<PrivacyBudget> {
    if round >= horizon {
        return domain(format!("round {round} outside horizon {horizon}"));
    }
    let alloc = DeltaAllocation::for_horizon(horizon as u64)?;
    account_run(
        &default_trajectory((horizon - round) as u64),
        alloc.delta_step,
        alloc.slack,
    )
}

/// Settings of one audit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AuditSettings {
    pub trials: u64,
    pub seed: u64,
    /// Additive slack subtracted from the numerator probabilities.
    pub delta: f64,
}

impl AuditSettings {
    /// `delta = T⁻⁴` for a tape of length `horizon`.
    pub fn for_horizon(trials: u64, seed: u64, horizon: usize) -> Self {
        Self {
            trials,
            seed,
            delta: (horizon as f64).powi(-4),
        }
    }
}

/// Fewer than this many observations of the witness outcome marks the audit underpowered.
pub const LOW_POWER_COUNT: u64 = 100;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AuditReport {
    pub agent: AgentKind,
    pub epsilon_target: Option<f64>,
    pub horizon: usize,
    pub arms: usize,
    pub diff_round: usize,
    pub diff_arm: usize,
    pub base_reward: f64,
    pub alt_reward: f64,
    pub trials: u64,
    pub seed: u64,
    pub audit_delta: f64,
    pub per_outcome_alpha: f64,
    pub eps_hat: f64,
    pub ci_upper: f64,
    pub eps_analytical: f64,
    pub delta_analytical: f64,
    pub branch: Branch,
    pub pass: bool,
    pub low_power: bool,
}

/// Runs both tapes of `pair` and compares the empirical lower bound with `budget`.
///
/// Per-outcome confidence is Bonferroni-corrected over all `K^T` outcomes.
pub fn audit_algorithm(
    agent: &AgentSpec,
    pair: &NeighborPair,
    settings: &AuditSettings,
    budget: &PrivacyBudget,
) -> Result<AuditReport> {
    if settings.trials == 0 {
        return config("an audit needs at least one trial");
    }
    let base = pair.base();
    let alt = pair.neighbor();
    let hist_a = run_on_tape(
        agent,
        base,
        settings.trials,
        rng::derive_seed(settings.seed, 0),
    )?;
    let hist_b = run_on_tape(
        agent,
        &alt,
        settings.trials,
        rng::derive_seed(settings.seed, 1),
    )?;
    let alpha = FAMILY_ALPHA / base.outcome_space() as f64;
    let est = estimate_epsilon(&hist_a, &hist_b, settings.delta, alpha)?;
    Ok(AuditReport {
        agent: agent.kind(),
        epsilon_target: match *agent {
            AgentSpec::TsPrivacy { epsilon, .. } => Some(epsilon),
            _ => None,
        },
        horizon: base.horizon(),
        arms: base.num_arms(),
        diff_round: pair.round(),
        diff_arm: pair.arm(),
        base_reward: base.get(pair.round(), pair.arm()),
        alt_reward: pair.alt_reward(),
        trials: settings.trials,
        seed: settings.seed,
        audit_delta: settings.delta,
        per_outcome_alpha: alpha,
        eps_hat: est.eps_hat,
        ci_upper: est.ci_upper,
        eps_analytical: budget.epsilon,
        delta_analytical: budget.delta,
        branch: budget.branch,
        pass: est.eps_hat <= budget.epsilon,
        low_power: est.witness_count < LOW_POWER_COUNT,
    })
}
