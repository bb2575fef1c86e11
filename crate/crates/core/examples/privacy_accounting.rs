//! Per-sample Gaussian-mechanism budgets and their composition over a run.
//!
//! ```bash
//! cargo run -p dpbandit --example privacy_accounting
//! ```

use dpbandit::accountant::{
    account_run, account_run_with, asymptotic_budget, default_trajectory, eps_step_closed_form,
    eps_step_exact, gaussian_mech_check, sensitivity, DeltaAllocation, GaussianMechParams,
    StepRule,
};

fn main() -> dpbandit::Result<()> {
    let delta = 1e-6;
    println!("per-sample budgets at δ = {delta:e}");
    println!(
        "{:>7} {:>10} {:>12} {:>12} {:>8}",
        "k", "w", "closed form", "exact root", "valid"
    );
    for k in [0u64, 1, 10, 100, 1000, 10_000] {
        let closed = eps_step_closed_form(k, delta)?;
        let n = k as f64 + 1.0;
        let params = GaussianMechParams::new(1.0 / n.sqrt(), sensitivity(k), delta)?;
        println!(
            "{k:>7} {:>10.3e} {closed:>12.6} {:>12.6} {:>8}",
            sensitivity(k),
            eps_step_exact(k, delta)?,
            gaussian_mech_check(&params, closed)
        );
    }

    println!("\ncomposed budgets over the worst-case trajectory 0, 1, ..., T-1");
    println!(
        "{:>7} {:>12} {:>12} {:>10} {:>10} {:>12}",
        "T", "ε composed", "ε exact", "branch", "(ln T)²", "δ total"
    );
    for p in [6, 8, 10, 12, 14] {
        let t = 1u64 << p;
        let alloc = DeltaAllocation::for_horizon(t)?;
        let traj = default_trajectory(t);
        let b = account_run(&traj, alloc.delta_step, alloc.slack)?;
        let exact = account_run_with(&traj, alloc.delta_step, alloc.slack, StepRule::ExactRoot)?;
        let thm = asymptotic_budget(t)?;
        println!(
            "{t:>7} {:>12.3} {:>12.3} {:>10} {:>10.3} {:>12.3e}",
            b.epsilon,
            exact.epsilon,
            format!("{:?}", b.branch),
            thm.epsilon,
            b.delta
        );
    }
    Ok(())
}
