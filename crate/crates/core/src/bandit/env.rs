use rand::Rng;

use crate::error::{domain, Result};
use crate::rng;

/// Source of rewards for a bandit run.
pub trait Environment {
    fn num_arms(&self) -> usize;

    /// Reward for pulling `arm` at `round`. Must lie in `[0, 1]`.
    fn reward<R: Rng + ?Sized>(&self, round: u64, arm: usize, rng: &mut R) -> f64;
}

/// A stochastic bandit with Bernoulli rewards.
#[derive(Debug, Clone, PartialEq)]
pub struct BanditInstance {
    arm_means: Vec<f64>,
}

impl BanditInstance {
    pub fn bernoulli(arm_means: Vec<f64>) -> Result<Self> {
        if arm_means.is_empty() {
            return domain("a bandit needs at least one arm");
        }
        if let Some(m) = arm_means.iter().find(|m| !(0.0..=1.0).contains(*m)) {
            return domain(format!("arm mean {m} outside [0, 1]"));
        }
        Ok(Self { arm_means })
    }

    pub fn arm_means(&self) -> &[f64] {
        &self.arm_means
    }

    pub fn best_mean(&self) -> f64 {
        self.arm_means
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// `best_mean - mean(arm)`.
    pub fn gap(&self, arm: usize) -> f64 {
        self.best_mean() - self.arm_means[arm]
    }
}

impl Environment for BanditInstance {
    fn num_arms(&self) -> usize {
        self.arm_means.len()
    }

    /// One uniform draw; 1 if it falls below the arm mean.
    fn reward<R: Rng + ?Sized>(&self, _round: u64, arm: usize, rng: &mut R) -> f64 {
        if rng::uniform(rng) < self.arm_means[arm] {
            1.0
        } else {
            0.0
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn validates_means() {
        assert!(BanditInstance::bernoulli(vec![]).is_err());
        assert!(BanditInstance::bernoulli(vec![0.5, 1.1]).is_err());
        assert!(BanditInstance::bernoulli(vec![f64::NAN]).is_err());
        assert!(BanditInstance::bernoulli(vec![0.0, 1.0]).is_ok());
    }

    #[test]
    fn bernoulli_draws_are_binary_and_degenerate_at_extremes() {
        let env = BanditInstance::bernoulli(vec![0.0, 1.0, 0.3]).unwrap();
        let mut s = rng::stream(1);
        let mut hits = 0;
        for t in 0..10_000 {
            assert_eq!(env.reward(t, 0, &mut s), 0.0);
            assert_eq!(env.reward(t, 1, &mut s), 1.0);
            let r = env.reward(t, 2, &mut s);
            assert!(r == 0.0 || r == 1.0);
            hits += r as u32;
        }
        // 0.3 * 10^4 with a 5-sigma window.
        assert!((2770..=3230).contains(&hits), "{hits}");
    }

    #[test]
    fn gaps() {
        let env = BanditInstance::bernoulli(vec![0.9, 0.5]).unwrap();
        assert_eq!(env.gap(0), 0.0);
        assert!((env.gap(1) - 0.4).abs() < 1e-15);
    }
}
