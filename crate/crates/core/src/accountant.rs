//! Privacy accounting for Gaussian-prior Thompson Sampling.
//!
//! A posterior sample `Normal(û_i, σ²)` is a Gaussian mechanism on the
//! arm's reward history: changing one reward in `[0, 1]` moves
//! `û_i = Σr / (k_i + 1)` by at most `w = 1/(k_i + 1)`. Such a sample is
//! `(ε, δ)`-DP whenever
//!
//! ```text
//! σ ≥ (w / ε) · sqrt(2 ln(1/(2δ)) + 2ε),     δ < 1/2.
//! ```
//!
//! With `σ = 1/sqrt(k+1)` the per-sample budget used by default is
//!
//! ```text
//! ε_k = 1/sqrt(k+1) + sqrt((1 + 2 ln(1/(2δ))) / (k+1)),
//! ```
//!
//! which meets the condition with equality at `k = 0` and is a valid
//! (slightly loose) budget for every `k ≥ 1`. The exact smallest root is
//! available through [`gaussian_mech_eps_min`] and [`StepRule::ExactRoot`].
//!
//! Per-round budgets are combined with the heterogeneous advanced
//! composition bound: the composed ε is the minimum of
//!
//! ```text
//! (basic)       Σ ε_i
//! (advanced-a)  Σ ε_i tanh(ε_i/2) + sqrt(2 Σ ε_i² · ln(e + sqrt(Σ ε_i²)/δ̃))
//! (advanced-b)  Σ ε_i tanh(ε_i/2) + sqrt(2 Σ ε_i² · ln(1/δ̃))
//! ```
//!
//! with total `δ = 1 − (1 − δ̃) ∏ (1 − δ_i)`. Note that
//! `ε (e^ε − 1)/(e^ε + 1) = ε tanh(ε/2)`; the tanh form does not overflow.

use serde::Serialize;

use crate::bandit::log_horizon_squared;
use crate::error::{domain, Result};

/// Relative rounding allowance of [`gaussian_mech_check`].
const CHECK_ULPS: f64 = 8.0 * f64::EPSILON;

/// Gaussian mechanism parameters: noise scale, sensitivity and per-release δ.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianMechParams {
    sigma: f64,
    sensitivity: f64,
    delta: f64,
}

impl GaussianMechParams {
    pub fn new(sigma: f64, sensitivity: f64, delta: f64) -> Result<Self> {
        if !(sigma > 0.0 && sigma.is_finite()) {
            return domain(format!("sigma must be positive, got {sigma}"));
        }
        if !(sensitivity > 0.0 && sensitivity.is_finite()) {
            return domain(format!("sensitivity must be positive, got {sensitivity}"));
        }
        check_delta(delta)?;
        Ok(Self {
            sigma,
            sensitivity,
            delta,
        })
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn sensitivity(&self) -> f64 {
        self.sensitivity
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }
}

fn check_delta(delta: f64) -> Result<()> {
    if !(delta > 0.0 && delta < 0.5) {
        return domain(format!(
            "per-release delta must lie in (0, 1/2), got {delta}"
        ));
    }
    Ok(())
}

/// `ln(1/(2δ))`.
fn log_inv_two_delta(delta: f64) -> f64 {
    -(2.0 * delta).ln()
}

/// Budget of one mechanism.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StepPrivacy {
    pub epsilon: f64,
    pub delta: f64,
}

impl StepPrivacy {
    pub fn new(epsilon: f64, delta: f64) -> Result<Self> {
        if !(epsilon > 0.0 && epsilon.is_finite()) {
            return domain(format!("step epsilon must be positive, got {epsilon}"));
        }
        if !(0.0..0.5).contains(&delta) {
            return domain(format!("step delta must lie in [0, 1/2), got {delta}"));
        }
        Ok(Self { epsilon, delta })
    }
}

/// Mechanisms to compose plus the composition slack `δ̃`.
#[derive(Debug, Clone, PartialEq)]
pub struct CompositionInput {
    pub steps: Vec<StepPrivacy>,
    pub slack: f64,
}

/// Which composition expression attained the minimum.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Branch {
    Basic,
    AdvancedA,
    AdvancedB,
}

/// A composed `(ε, δ)` guarantee.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PrivacyBudget {
    pub epsilon: f64,
    pub delta: f64,
    pub branch: Branch,
}

/// Sensitivity of the posterior mean after `pulls` observations.
pub fn sensitivity(pulls: u64) -> f64 {
    1.0 / (pulls as f64 + 1.0)
}

/// Whether `σ ≥ (w/ε) sqrt(2 ln(1/(2δ)) + 2ε)`, up to a few ulps of rounding.
pub fn gaussian_mech_check(p: &GaussianMechParams, epsilon: f64) -> bool {
    if epsilon.is_nan() || epsilon <= 0.0 {
        return false;
    }
    let l = log_inv_two_delta(p.delta);
    let required = p.sensitivity / epsilon * (2.0 * l + 2.0 * epsilon).sqrt();
    p.sigma >= required * (1.0 - CHECK_ULPS)
}

/// Smallest ε accepted by [`gaussian_mech_check`]: the positive root of
/// `s²ε² − 2ε − 2L = 0` with `s = σ/w`, `L = ln(1/(2δ))`.
pub fn gaussian_mech_eps_min(sigma: f64, sensitivity: f64, delta: f64) -> Result<f64> {
    let p = GaussianMechParams::new(sigma, sensitivity, delta)?;
    let s = p.sigma / p.sensitivity;
    let s2 = s * s;
    let l = log_inv_two_delta(p.delta);
    Ok((1.0 + (1.0 + 2.0 * s2 * l).sqrt()) / s2)
}

/// Closed-form per-sample budget after `pulls` observations of the arm.
pub fn eps_step_closed_form(pulls: u64, delta: f64) -> Result<f64> {
    check_delta(delta)?;
    let n = pulls as f64 + 1.0;
    let l = log_inv_two_delta(delta);
    Ok(1.0 / n.sqrt() + ((1.0 + 2.0 * l) / n).sqrt())
}

/// Exact minimal per-sample budget for `σ = 1/sqrt(k+1)`, `w = 1/(k+1)`.
pub fn eps_step_exact(pulls: u64, delta: f64) -> Result<f64> {
    let n = pulls as f64 + 1.0;
    gaussian_mech_eps_min(1.0 / n.sqrt(), 1.0 / n, delta)
}

/// Composes heterogeneous mechanisms.
///
/// With `slack <= 0` only the basic sum is admissible. An empty step list
/// costs `ε = 0` and `δ = max(slack, 0)`.
pub fn compose(input: &CompositionInput) -> PrivacyBudget {
    let slack = input.slack.max(0.0);
    let mut log_keep = (-slack).ln_1p();
    for s in &input.steps {
        log_keep += (-s.delta).ln_1p();
    }
    let delta = -log_keep.exp_m1();

    let basic: f64 = input.steps.iter().map(|s| s.epsilon).sum();
    let mut best = PrivacyBudget {
        epsilon: basic,
        delta,
        branch: Branch::Basic,
    };
    if slack > 0.0 && !input.steps.is_empty() {
        let drift: f64 = input
            .steps
            .iter()
            .map(|s| s.epsilon * (0.5 * s.epsilon).tanh())
            .sum();
        let sq: f64 = input.steps.iter().map(|s| s.epsilon * s.epsilon).sum();
        let a = drift + (2.0 * sq * (std::f64::consts::E + sq.sqrt() / slack).ln()).sqrt();
        let b = drift + (2.0 * sq * (1.0 / slack).ln()).sqrt();
        if a < best.epsilon {
            best = PrivacyBudget {
                epsilon: a,
                delta,
                branch: Branch::AdvancedA,
            };
        }
        if b < best.epsilon {
            best = PrivacyBudget {
                epsilon: b,
                delta,
                branch: Branch::AdvancedB,
            };
        }
    }
    best
}

/// How a pull count is turned into a per-sample ε.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum StepRule {
    /// [`eps_step_closed_form`].
    #[default]
    ClosedForm,
    /// [`eps_step_exact`].
    ExactRoot,
}

impl StepRule {
    pub fn epsilon(self, pulls: u64, delta: f64) -> Result<f64> {
        match self {
            StepRule::ClosedForm => eps_step_closed_form(pulls, delta),
            StepRule::ExactRoot => eps_step_exact(pulls, delta),
        }
    }
}

/// Per-step budgets of a pull-count trajectory.
pub fn step_privacies(
    trajectory: &[u64],
    delta_step: f64,
    rule: StepRule,
) -> Result<Vec<StepPrivacy>> {
    trajectory
        .iter()
        .map(|&k| StepPrivacy::new(rule.epsilon(k, delta_step)?, delta_step))
        .collect()
}

/// Composed budget of a run whose released samples had the given pull counts.
pub fn account_run(trajectory: &[u64], delta_step: f64, slack: f64) -> Result<PrivacyBudget> {
    account_run_with(trajectory, delta_step, slack, StepRule::ClosedForm)
}

pub fn account_run_with(
    trajectory: &[u64],
    delta_step: f64,
    slack: f64,
    rule: StepRule,
) -> Result<PrivacyBudget> {
    if trajectory.is_empty() {
        return domain("trajectory must be nonempty");
    }
    if !(0.0..1.0).contains(&slack) {
        return domain(format!("slack must lie in [0, 1), got {slack}"));
    }
    let steps = step_privacies(trajectory, delta_step, rule)?;
    Ok(compose(&CompositionInput { steps, slack }))
}

/// Worst-case trajectory `0, 1, ..., T-1`.
pub fn default_trajectory(horizon: u64) -> Vec<u64> {
    (0..horizon).collect()
}

/// Split of the total `δ = T⁻⁴` into per-step δ and composition slack.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DeltaAllocation {
    pub delta_step: f64,
    pub slack: f64,
}

impl DeltaAllocation {
    /// `δ_step = T⁻⁵/2`, `δ̃ = T⁻⁴/2`; composed over `T` steps the total
    /// stays below `T⁻⁴`.
    pub fn for_horizon(horizon: u64) -> Result<Self> {
        if horizon < 2 {
            return domain(format!("horizon must be at least 2, got {horizon}"));
        }
        let t = horizon as f64;
        Ok(Self {
            delta_step: 0.5 * t.powi(-5),
            slack: 0.5 * t.powi(-4),
        })
    }
}

/// The asymptotic budget `((ln T)², T⁻⁴)` stated for untuned Thompson Sampling.
pub fn asymptotic_budget(horizon: u64) -> Result<PrivacyBudget> {
    if horizon < 2 {
        return domain(format!("horizon must be at least 2, got {horizon}"));
    }
    Ok(PrivacyBudget {
        epsilon: log_horizon_squared(horizon),
        delta: (horizon as f64).powi(-4),
        branch: Branch::Basic,
    })
}
