use crate::error::{domain, Result};

/// Sufficient statistics of one arm: pull count and sum of observed rewards.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct ArmPosterior {
    pulls: u64,
    reward_sum: f64,
}

impl ArmPosterior {
    /// Builds a posterior from raw statistics. `reward_sum` must lie in `[0, pulls]`.
    pub fn new(pulls: u64, reward_sum: f64) -> Result<Self> {
        if !(reward_sum >= 0.0 && reward_sum <= pulls as f64) {
            return domain(format!(
                "reward sum {reward_sum} incompatible with {pulls} pulls of rewards in [0, 1]"
            ));
        }
        Ok(Self { pulls, reward_sum })
    }

    pub fn pulls(&self) -> u64 {
        self.pulls
    }

    pub fn reward_sum(&self) -> f64 {
        self.reward_sum
    }

    /// Posterior mean `reward_sum / (pulls + 1)`; zero for an unpulled arm.
    pub fn mean(&self) -> f64 {
        self.reward_sum / (self.pulls as f64 + 1.0)
    }

    /// Conventional empirical mean `reward_sum / pulls`, used by UCB1.
    /// `None` before the first pull.
    pub fn sample_mean(&self) -> Option<f64> {
        (self.pulls > 0).then(|| self.reward_sum / self.pulls as f64)
    }

    /// Records one observed reward.
    pub fn update(&mut self, reward: f64) -> Result<()> {
        if !(0.0..=1.0).contains(&reward) {
            return domain(format!("reward {reward} outside [0, 1]"));
        }
        self.pulls += 1;
        self.reward_sum += reward;
        Ok(())
    }

    /// Functional form of [`ArmPosterior::update`].
    pub fn updated(mut self, reward: f64) -> Result<Self> {
        self.update(reward)?;
        Ok(self)
    }
}
