//! Empirical privacy audit: run the agent on two reward tapes that differ in
//! one entry, histogram the full action sequences, and compare the
//! empirical lower bound on ε with the analytical budget.
//!
//! ```bash
//! cargo run --release -p dpbandit --example privacy_audit -- [trials]
//! ```

use dpbandit::audit::{
    analytical_budget, audit_algorithm, AuditSettings, NeighborPair, RewardTape,
};
use dpbandit::bandit::AgentSpec;

fn main() -> dpbandit::Result<()> {
    let trials: u64 = std::env::args()
        .nth(1)
        .and_then(|a| a.parse().ok())
        .unwrap_or(200_000);
    let tape = RewardTape::new(vec![vec![1.0, 0.0]; 4])?;
    let pair = NeighborPair::new(tape, 0, 0, 0.0)?;
    let budget = analytical_budget(4, 0)?;
    let settings = AuditSettings::for_horizon(trials, 42, 4);

    for agent in [
        AgentSpec::TsStandard,
        AgentSpec::ts_privacy(1.0, 4)?,
        AgentSpec::ts_privacy(0.1, 4)?,
        AgentSpec::Ucb1,
    ] {
        let r = audit_algorithm(&agent, &pair, &settings, &budget)?;
        println!(
            "{:<22} ε̂ = {:>7.4}  (optimistic {:>7.4})  budget {:.4}  {}{}",
            match agent {
                AgentSpec::TsPrivacy { epsilon, .. } => format!("ts-dp (ε target {epsilon})"),
                AgentSpec::TsStandard => "ts".into(),
                AgentSpec::Ucb1 => "ucb1".into(),
            },
            r.eps_hat,
            r.ci_upper,
            r.eps_analytical,
            if r.pass { "pass" } else { "VIOLATION" },
            if r.low_power { " [low power]" } else { "" }
        );
    }
    Ok(())
}
