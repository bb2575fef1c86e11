//! Frozen high-precision reference values.
//!
//! The constants were produced with mpmath at 50 significant digits (see
//! `tests/oracles/accountant_oracle.py`); the `reference_*` helpers below are
//! an independent plain-f64 re-evaluation using the `(e^ε − 1)/(e^ε + 1)`
//! form directly.

#![allow(clippy::excessive_precision)]

use approx::assert_relative_eq;
use dpbandit::accountant::{
    account_run, compose, default_trajectory, Branch, CompositionInput, DeltaAllocation,
    StepPrivacy,
};

fn reference_branches(eps: &[f64], slack: f64) -> (f64, f64, f64) {
    let basic: f64 = eps.iter().sum();
    let drift: f64 = eps
        .iter()
        .map(|&e| e * (e.exp() - 1.0) / (e.exp() + 1.0))
        .sum();
    let sq: f64 = eps.iter().map(|e| e * e).sum();
    let a = drift
        + (eps.iter().map(|e| 2.0 * e * e).sum::<f64>()
            * (std::f64::consts::E + sq.sqrt() / slack).ln())
        .sqrt();
    let b = drift + (2.0 * sq * (1.0 / slack).ln()).sqrt();
    (basic, a, b)
}

#[test]
fn thousand_small_steps() {
    let eps = vec![0.01; 1000];
    let (basic, a, b) = reference_branches(&eps, 1e-6);
    assert_relative_eq!(basic, 10.0, max_relative = 1e-12);
    assert_relative_eq!(a, 1.641_491_123_207_706_5, max_relative = 1e-9);
    assert_relative_eq!(b, 1.712_257_719_606_609_9, max_relative = 1e-9);

    let steps = vec![StepPrivacy::new(0.01, 0.0).unwrap(); 1000];
    let budget = compose(&CompositionInput { steps, slack: 1e-6 });
    assert_eq!(budget.branch, Branch::AdvancedA);
    assert_relative_eq!(budget.epsilon, 1.641_491_123_207_706_5, max_relative = 1e-9);
    assert!(budget.epsilon < 2.0);
    assert_relative_eq!(budget.delta, 1e-6, max_relative = 1e-12);
}

/// (T, basic, advanced-a, advanced-b) for the default trajectory with
/// δ_step = T⁻⁵/2 and δ̃ = T⁻⁴/2.
const DEFAULT_TRAJECTORY: [(u64, f64, f64, f64); 8] = [
    (4, 13.519231861296643, 40.87133247516547, 37.269008179253666),
    (
        256,
        260.263385316826,
        293.44029617097638,
        284.24340590885548,
    ),
    (
        512,
        392.65606570751372,
        358.56636545226817,
        348.56579436204007,
    ),
    (
        1024,
        587.10542139293631,
        430.03466509520745,
        419.2567620815653,
    ),
    (
        2048,
        871.8102017354748,
        507.74338217983451,
        496.21162441961085,
    ),
    (
        4096,
        1287.5999471742258,
        591.61026270199141,
        579.34571385888656,
    ),
    (
        8192,
        1893.5275451244507,
        681.56926514869348,
        668.59095434382518,
    ),
    (
        16384,
        2774.9181363982297,
        777.56667146910556,
        763.89190212950873,
    ),
];

#[test]
fn default_trajectory_budgets() {
    for (t, basic, a, b) in DEFAULT_TRAJECTORY {
        let alloc = DeltaAllocation::for_horizon(t).unwrap();
        let eps: Vec<f64> = (0..t)
            .map(|k| dpbandit::accountant::eps_step_closed_form(k, alloc.delta_step).unwrap())
            .collect();
        let (rb, ra, rc) = reference_branches(&eps, alloc.slack);
        assert_relative_eq!(rb, basic, max_relative = 1e-10);
        assert_relative_eq!(ra, a, max_relative = 1e-10);
        assert_relative_eq!(rc, b, max_relative = 1e-10);

        let budget = account_run(&default_trajectory(t), alloc.delta_step, alloc.slack).unwrap();
        let expected = basic.min(a).min(b);
        assert_relative_eq!(budget.epsilon, expected, max_relative = 1e-10);
        assert!(budget.delta <= (t as f64).powi(-4));
    }
}

#[test]
fn regression_t256() {
    let alloc = DeltaAllocation::for_horizon(256).unwrap();
    let budget = account_run(&default_trajectory(256), alloc.delta_step, alloc.slack).unwrap();
    assert_eq!(budget.branch, Branch::Basic);
    assert_relative_eq!(budget.epsilon, 260.263385316826, max_relative = 1e-10);
}
