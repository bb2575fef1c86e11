//! The privacy-tuned agent: same posterior mean, variance scaled by
//! `(ln T)^2 / ε`. At `ε = (ln T)^2` it reproduces the standard agent
//! exactly; smaller ε trades regret for privacy.
//!
//! ```bash
//! cargo run --release -p dpbandit --example privacy_tuned_agent
//! ```

use dpbandit::bandit::{AgentSpec, BanditInstance};
use dpbandit::harness::{regret_bound_privacy, run_many, ExperimentConfig};

fn main() -> dpbandit::Result<()> {
    let horizon = 2000;
    let env = BanditInstance::bernoulli(vec![0.7, 0.5])?;
    let l = (horizon as f64).ln();
    let run = |agent| {
        run_many(&ExperimentConfig {
            env: env.clone(),
            agent,
            horizon,
            runs: 50,
            base_seed: 1,
        })
    };

    let standard = run(AgentSpec::TsStandard)?;
    let same = run(AgentSpec::ts_privacy(l * l, horizon)?)?;
    println!(
        "ε = (ln T)² = {:.3}: action sequences identical to the standard agent: {}",
        l * l,
        standard.records == same.records
    );

    for eps in [16.0, 4.0, 1.0] {
        let spec = AgentSpec::ts_privacy(eps, horizon)?;
        let exp = run(spec)?;
        println!(
            "ε = {eps:>5}: variance x{:>6.2}, mean regret {:>7.2} (standard {:.2}), order bound {:.1}",
            spec.variance_scale()?,
            exp.summary.mean_final_regret,
            standard.summary.mean_final_regret,
            regret_bound_privacy(horizon, 2, eps)?
        );
    }
    Ok(())
}
