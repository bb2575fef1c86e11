//! Regret of standard vs. privacy-tuned Thompson Sampling (and UCB1) on a
//! five-armed Bernoulli bandit, with the extra suboptimal pulls each privacy
//! level costs.
//!
//! ```bash
//! cargo run --release -p dpbandit --example regret_experiment -- [horizon] [runs]
//! ```

use dpbandit::bandit::{AgentSpec, BanditInstance};
use dpbandit::harness::{
    mean_suboptimal_pulls, regret_bound_privacy, run_many, suboptimal_pull_inflation,
    ExperimentConfig,
};

fn main() -> dpbandit::Result<()> {
    let mut args = std::env::args().skip(1);
    let horizon: u64 = args.next().and_then(|a| a.parse().ok()).unwrap_or(10_000);
    let runs: u64 = args.next().and_then(|a| a.parse().ok()).unwrap_or(200);
    let env = BanditInstance::bernoulli(vec![0.9, 0.8, 0.7, 0.6, 0.5])?;
    let k = env.arm_means().len();
    let l2 = (horizon as f64).ln().powi(2);

    let config = |agent| ExperimentConfig {
        env: env.clone(),
        agent,
        horizon,
        runs,
        base_seed: 20180,
    };

    let standard = run_many(&config(AgentSpec::TsStandard))?;
    println!(
        "{:<18} regret {:>9.2} ± {:>6.2}   suboptimal pulls {:>9.1}",
        "ts",
        standard.summary.mean_final_regret,
        standard.summary.ci95_halfwidth,
        mean_suboptimal_pulls(&standard)
    );
    let ucb = run_many(&config(AgentSpec::Ucb1))?;
    println!(
        "{:<18} regret {:>9.2} ± {:>6.2}   suboptimal pulls {:>9.1}",
        "ucb1",
        ucb.summary.mean_final_regret,
        ucb.summary.ci95_halfwidth,
        mean_suboptimal_pulls(&ucb)
    );

    for eps in [l2, 4.0, 1.0, 0.25] {
        let tuned = run_many(&config(AgentSpec::ts_privacy(eps, horizon)?))?;
        let inflation = suboptimal_pull_inflation(&standard, &tuned)?;
        println!(
            "{:<18} regret {:>9.2} ± {:>6.2}   bound {:>9.2}   extra pulls {:>9.1}  (ln²T/ε = {:.1})",
            format!("ts-dp ε={eps:.3}"),
            tuned.summary.mean_final_regret,
            tuned.summary.ci95_halfwidth,
            regret_bound_privacy(horizon, k, eps)?,
            inflation,
            l2 / eps
        );
    }
    Ok(())
}
