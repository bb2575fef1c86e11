use rand::Rng;
use serde::{Deserialize, Serialize};

use super::env::Environment;
use super::posterior::ArmPosterior;
use crate::error::{config, Result};
use crate::rng;

/// Algorithm family of an agent.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AgentKind {
    /// Gaussian-prior Thompson Sampling with variance `1/(k+1)`.
    TsStandard,
    /// Thompson Sampling with variance `(ln T)^2 / (ε (k+1))`.
    TsPrivacy,
    Ucb1,
}

/// Agent configuration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AgentSpec {
    TsStandard,
    /// `epsilon` is the privacy target and `horizon` the run length `T`
    /// entering `(ln T)^2`.
    TsPrivacy {
        epsilon: f64,
        horizon: u64,
    },
    Ucb1,
}

impl AgentSpec {
    /// Validated constructor for the privacy-tuned agent.
    pub fn ts_privacy(epsilon: f64, horizon: u64) -> Result<Self> {
        let spec = AgentSpec::TsPrivacy { epsilon, horizon };
        spec.validate()?;
        Ok(spec)
    }

    pub fn kind(&self) -> AgentKind {
        match self {
            AgentSpec::TsStandard => AgentKind::TsStandard,
            AgentSpec::TsPrivacy { .. } => AgentKind::TsPrivacy,
            AgentSpec::Ucb1 => AgentKind::Ucb1,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if let AgentSpec::TsPrivacy { epsilon, horizon } = *self {
            if !(epsilon > 0.0 && epsilon.is_finite()) {
                return config(format!(
                    "privacy target must be a positive finite ε, got {epsilon}"
                ));
            }
            if horizon < 2 {
                return config(format!(
                    "privacy mode needs horizon >= 2 (ln T > 0), got {horizon}"
                ));
            }
        }
        Ok(())
    }

    /// Multiplier `c` such that the sampling variance is `c / (k + 1)`.
    ///
    /// Exactly `1.0` for the standard agent, and for the privacy agent when
    /// `epsilon` is `(ln T)^2` computed as `ln(T) * ln(T)`.
    pub fn variance_scale(&self) -> Result<f64> {
        match *self {
            AgentSpec::TsStandard => Ok(1.0),
            AgentSpec::TsPrivacy { epsilon, horizon } => {
                self.validate()?;
                Ok(log_horizon_squared(horizon) / epsilon)
            }
            AgentSpec::Ucb1 => config("UCB1 has no sampling variance"),
        }
    }

    /// True when the privacy target is weaker than the untuned agent's
    /// (`ε > (ln T)^2`, so the variance drops below `1/(k+1)`).
    pub fn weaker_than_standard(&self) -> bool {
        match *self {
            AgentSpec::TsPrivacy { epsilon, horizon } if horizon >= 2 => {
                epsilon > log_horizon_squared(horizon)
            }
            _ => false,
        }
    }
}

/// `(ln T)^2`, evaluated as `ln(T) * ln(T)`.
pub(crate) fn log_horizon_squared(horizon: u64) -> f64 {
    let l = (horizon as f64).ln();
    l * l
}

/// Privacy-tuned variance `ln_horizon^2 / (epsilon (pulls + 1))` for an
/// arbitrary (not necessarily integral) horizon given by its logarithm.
pub fn tuned_variance(pulls: u64, ln_horizon: f64, epsilon: f64) -> f64 {
    (ln_horizon * ln_horizon / epsilon) / (pulls as f64 + 1.0)
}

/// Sampling variance of one arm under a Thompson agent.
pub fn posterior_variance(post: &ArmPosterior, spec: &AgentSpec) -> Result<f64> {
    Ok(spec.variance_scale()? / (post.pulls() as f64 + 1.0))
}

/// Per-arm statistics and round counter of a running agent.
#[derive(Debug, Clone, PartialEq)]
pub struct AgentState {
    posteriors: Vec<ArmPosterior>,
    round: u64,
}

impl AgentState {
    pub fn new(num_arms: usize) -> Self {
        assert!(num_arms >= 1, "an agent needs at least one arm");
        Self {
            posteriors: vec![ArmPosterior::default(); num_arms],
            round: 0,
        }
    }

    /// Builds a state from explicit posteriors; the round is their total pull count.
    pub fn from_posteriors(posteriors: Vec<ArmPosterior>) -> Self {
        assert!(!posteriors.is_empty(), "an agent needs at least one arm");
        let round = posteriors.iter().map(ArmPosterior::pulls).sum();
        Self { posteriors, round }
    }

    pub fn num_arms(&self) -> usize {
        self.posteriors.len()
    }

    pub fn round(&self) -> u64 {
        self.round
    }

    pub fn posteriors(&self) -> &[ArmPosterior] {
        &self.posteriors
    }

    fn observe(&mut self, arm: usize, reward: f64) -> Result<()> {
        self.posteriors[arm].update(reward)?;
        self.round += 1;
        Ok(())
    }
}

/// Index of the first maximum.
fn argmax(values: impl IntoIterator<Item = f64>) -> usize {
    let mut best = 0;
    let mut best_value = f64::NEG_INFINITY;
    for (i, v) in values.into_iter().enumerate() {
        if v > best_value {
            best = i;
            best_value = v;
        }
    }
    best
}

/// Thompson selection: one fresh Gaussian sample per arm, in arm order,
/// then the argmax (lowest index on ties). Consumes exactly `K` normal draws.
pub fn select_action<R: Rng + ?Sized>(
    state: &AgentState,
    spec: &AgentSpec,
    rng: &mut R,
) -> Result<usize> {
    let scale = spec.variance_scale()?;
    let samples: Vec<f64> = state
        .posteriors
        .iter()
        .map(|p| {
            let sd = (scale / (p.pulls() as f64 + 1.0)).sqrt();
            rng::normal(rng, p.mean(), sd)
        })
        .collect();
    Ok(argmax(samples))
}

/// UCB1: pull each arm once in index order, then maximize
/// `reward_sum/pulls + sqrt(2 ln t / pulls)`.
pub fn ucb1_select(state: &AgentState) -> usize {
    let k = state.num_arms() as u64;
    if state.round < k {
        return state.round as usize;
    }
    let ln_t = (state.round as f64).ln();
    argmax(state.posteriors.iter().map(|p| match p.sample_mean() {
        Some(m) => m + (2.0 * ln_t / p.pulls() as f64).sqrt(),
        None => f64::INFINITY,
    }))
}

/// Outcome of one interaction round.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Step {
    pub action: usize,
    pub reward: f64,
}

/// Plays one round: select, draw the reward, update the pulled arm.
pub fn step<E, R>(env: &E, state: &mut AgentState, spec: &AgentSpec, rng: &mut R) -> Result<Step>
where
    E: Environment + ?Sized,
    R: Rng + ?Sized,
{
    if env.num_arms() != state.num_arms() {
        return config(format!(
            "environment has {} arms but agent state has {}",
            env.num_arms(),
            state.num_arms()
        ));
    }
    if let AgentSpec::TsPrivacy { horizon, .. } = *spec {
        if state.round >= horizon {
            return config(format!(
                "round {} beyond privacy horizon {horizon}",
                state.round
            ));
        }
    }
    let action = match spec {
        AgentSpec::Ucb1 => ucb1_select(state),
        _ => select_action(state, spec, rng)?,
    };
    let reward = env.reward(state.round, action, rng);
    state.observe(action, reward)?;
    Ok(Step { action, reward })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bandit::BanditInstance;

    fn post(pulls: u64, sum: f64) -> ArmPosterior {
        ArmPosterior::new(pulls, sum).unwrap()
    }

    #[test]
    fn variance_examples() {
        assert_eq!(
            posterior_variance(&post(0, 0.0), &AgentSpec::TsStandard).unwrap(),
            1.0
        );

        let horizon = 1000;
        let eps = log_horizon_squared(horizon);
        let spec = AgentSpec::ts_privacy(eps, horizon).unwrap();
        assert_eq!(posterior_variance(&post(3, 1.0), &spec).unwrap(), 0.25);

        // ln T = 2 (T = e^2), ε = 1.
        assert_eq!(tuned_variance(0, 2.0, 1.0), 4.0);
    }

    #[test]
    fn privacy_spec_validation() {
        assert!(AgentSpec::ts_privacy(1.0, 1).is_err());
        assert!(AgentSpec::ts_privacy(0.0, 100).is_err());
        assert!(AgentSpec::ts_privacy(f64::INFINITY, 100).is_err());
        let bad = AgentSpec::TsPrivacy {
            epsilon: 1.0,
            horizon: 1,
        };
        assert!(posterior_variance(&post(0, 0.0), &bad).is_err());
        assert!(posterior_variance(&post(0, 0.0), &AgentSpec::Ucb1).is_err());
    }

    #[test]
    fn weaker_target_is_flagged() {
        assert!(AgentSpec::ts_privacy(100.0, 100)
            .unwrap()
            .weaker_than_standard());
        assert!(!AgentSpec::ts_privacy(1.0, 100)
            .unwrap()
            .weaker_than_standard());
        assert!(!AgentSpec::TsStandard.weaker_than_standard());
    }

    #[test]
    fn variance_decreases_with_pulls() {
        let spec = AgentSpec::ts_privacy(0.5, 64).unwrap();
        let mut prev = f64::INFINITY;
        for k in 0..2000 {
            let v = posterior_variance(&post(k, 0.0), &spec).unwrap();
            assert!(v > 0.0 && v < prev);
            prev = v;
        }
    }

    #[test]
    fn single_arm_always_selected() {
        let state = AgentState::new(1);
        let mut s = rng::stream(3);
        for _ in 0..100 {
            assert_eq!(
                select_action(&state, &AgentSpec::TsStandard, &mut s).unwrap(),
                0
            );
        }
    }

    #[test]
    fn seeded_selection_is_repeatable() {
        let state = AgentState::from_posteriors(vec![post(3, 1.0), post(5, 4.0), post(0, 0.0)]);
        let a = select_action(&state, &AgentSpec::TsStandard, &mut rng::stream(11)).unwrap();
        for _ in 0..10 {
            let b = select_action(&state, &AgentSpec::TsStandard, &mut rng::stream(11)).unwrap();
            assert_eq!(a, b);
        }
    }

    #[test]
    fn selection_consumes_one_normal_per_arm() {
        use rand::RngCore;
        let state = AgentState::new(4);
        let mut a = rng::stream(5);
        select_action(&state, &AgentSpec::TsStandard, &mut a).unwrap();
        let mut b = rng::stream(5);
        for _ in 0..4 {
            rng::normal(&mut b, 0.0, 1.0);
        }
        assert_eq!(a.next_u64(), b.next_u64());
    }

    #[test]
    fn well_separated_arms_never_swap() {
        // Δ ≈ 1 and σ² ≈ 1e-6: P(arm 1) = Φ(-Δ/√(2σ²)) is astronomically small.
        let n = 1_000_000u64;
        let state = AgentState::from_posteriors(vec![post(n, n as f64), post(n, 0.0)]);
        let mut s = rng::stream(99);
        for _ in 0..100_000 {
            assert_eq!(
                select_action(&state, &AgentSpec::TsStandard, &mut s).unwrap(),
                0
            );
        }
    }

    #[test]
    fn ucb1_initialization_order() {
        let mut state = AgentState::new(3);
        assert_eq!(ucb1_select(&state), 0);
        state.observe(0, 0.0).unwrap();
        assert_eq!(ucb1_select(&state), 1);
        state.observe(1, 0.0).unwrap();
        assert_eq!(ucb1_select(&state), 2);
    }

    #[test]
    fn ucb1_prefers_higher_mean_with_equal_counts() {
        let state = AgentState::from_posteriors(vec![post(10, 9.0), post(10, 1.0)]);
        assert_eq!(state.round(), 20);
        assert_eq!(ucb1_select(&state), 0);
        // Ties go to the lowest index.
        let tied = AgentState::from_posteriors(vec![post(10, 5.0), post(10, 5.0)]);
        assert_eq!(ucb1_select(&tied), 0);
    }

    #[test]
    fn step_in_degenerate_environments() {
        for (mean, expected) in [(0.0, 0.0), (1.0, 1.0)] {
            let env = BanditInstance::bernoulli(vec![mean; 3]).unwrap();
            let mut state = AgentState::new(3);
            let mut s = rng::stream(8);
            for t in 0..200 {
                let st = step(&env, &mut state, &AgentSpec::TsStandard, &mut s).unwrap();
                assert_eq!(st.reward, expected);
                assert_eq!(state.round(), t + 1);
            }
            let total: u64 = state.posteriors().iter().map(|p| p.pulls()).sum();
            assert_eq!(total, 200);
            if mean == 0.0 {
                assert!(state.posteriors().iter().all(|p| p.mean() == 0.0));
            }
        }
    }

    #[test]
    fn step_respects_privacy_horizon() {
        let env = BanditInstance::bernoulli(vec![0.5, 0.5]).unwrap();
        let spec = AgentSpec::ts_privacy(1.0, 2).unwrap();
        let mut state = AgentState::new(2);
        let mut s = rng::stream(0);
        step(&env, &mut state, &spec, &mut s).unwrap();
        step(&env, &mut state, &spec, &mut s).unwrap();
        assert!(step(&env, &mut state, &spec, &mut s).is_err());
    }

    #[test]
    fn step_rejects_arm_mismatch() {
        let env = BanditInstance::bernoulli(vec![0.5, 0.5]).unwrap();
        let mut state = AgentState::new(3);
        assert!(step(
            &env,
            &mut state,
            &AgentSpec::TsStandard,
            &mut rng::stream(0)
        )
        .is_err());
    }
}
