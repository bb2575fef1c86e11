//! Step-by-step Gaussian-prior Thompson Sampling on a three-armed Bernoulli
//! bandit, printing the posterior of every arm as the agent learns.
//!
//! ```bash
//! cargo run -p dpbandit --example thompson_sampling
//! ```

use dpbandit::bandit::{posterior_variance, step, AgentSpec, AgentState, BanditInstance};
use dpbandit::rng;

fn main() -> dpbandit::Result<()> {
    let env = BanditInstance::bernoulli(vec![0.3, 0.55, 0.6])?;
    let spec = AgentSpec::TsStandard;
    let mut state = AgentState::new(3);
    let mut stream = rng::stream(7);

    for t in 1..=2000u64 {
        step(&env, &mut state, &spec, &mut stream)?;
        if t.is_power_of_two() || t == 2000 {
            print!("t={t:>5}");
            for (i, p) in state.posteriors().iter().enumerate() {
                let sd = posterior_variance(p, &spec)?.sqrt();
                print!("  arm{i}: k={:>4} û={:.3}±{:.3}", p.pulls(), p.mean(), sd);
            }
            println!();
        }
    }
    Ok(())
}
