use mprelay::gkernels::{c_b, c_be, cap};
use mprelay::validate::*;

// Frozen from runs of the oracle at seeds 1..=3: every comparison is finite
// and the largest discrepancy stays far below 1e-9.
#[test]
fn oracle_runs_are_stable() {
    for seed in 1..=3 {
        let r = kernel_oracle_check(seed, 1000).unwrap();
        assert_eq!((r.evaluated, r.skipped), (10_000, 0), "seed {seed}");
        assert!(r.max_abs_error < 1e-10, "seed {seed}: {r:?}");
    }
    assert_eq!(kernel_oracle_check(1, 50).unwrap(), kernel_oracle_check(1, 50).unwrap());
}

#[test]
fn reductions_hold() {
    let r = reduction_check(7, 200).unwrap();
    assert_eq!(r.errors.len(), 8);
    assert!(r.max_abs_error() <= 1e-12, "{r:?}");
}

#[test]
fn degraded_broadcast_example() {
    // P_r = 1, h_r1 = 1, h_r2 = 0.5, β₁ = 0.5.
    let a = 0.5 / 1.5;
    let r1 = [1.0, a];
    let r2 = [0.0, 1.0];
    let beta = [0.5, 0.5];
    let strong = c_b(1.0, 1.0, &r1, &beta) - c_be(&r1, &r2, &beta);
    let weak = c_b(1.0, 0.5, &r2, &beta);
    assert!((strong - cap(0.5)).abs() <= 1e-12);
    assert!((weak - cap(0.125 / 1.125)).abs() <= 1e-12);
    assert!(degraded_bc_check(1.0, 1.0, 0.5, 0.5).unwrap());
    assert!(degraded_bc_residuals(1.0, 0.5, 1.0, 0.5).is_err());
}

#[test]
fn degraded_grid() {
    assert!(degraded_bc_grid(1.0, 0.5, 10).unwrap() <= 1e-12);
    assert!(degraded_bc_grid(2.0, 0.05, 10).unwrap() <= 1e-12);
}

#[test]
fn lp_matches_vertex_enumeration() {
    let r = lp_equivalence_check(11, 100).unwrap();
    assert_eq!((r.compared, r.disagreements), (100, 0));
    assert!(r.max_abs_error <= 1e-10);
}

#[test]
fn no_draws_rejected() {
    assert_eq!(kernel_oracle_check(1, 0).unwrap_err(), ValidateError::NoDraws);
    assert_eq!(lp_equivalence_check(1, 0).unwrap_err(), ValidateError::NoDraws);
}
