//! Rate-region computation: an exact LP over rates (and phase durations)
//! for fixed coding parameters, wrapped in a multi-start Nelder–Mead search
//! over the remaining parameters.

pub mod hull;
pub mod lp;
pub mod nm;
mod search;


use thiserror::Error;

use crate::constraints::{ConstraintError, ConstraintSet, LinearSet};
use crate::model::{ModelError, PhaseSchedule, RatePoint};

pub use hull::{comprehensive_hull, hull2d, inside_hull, Point};
pub use search::{
    directions, optimize_point, outer_boundary, sub_seed, sum_rate_sweep, trace_boundary,
    BoundaryPoint, OptimizedPoint, PointSolution, RegionBoundary, SearchOptions, SumRateRow,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RegionError {
    #[error("constraint set is marked infeasible")]
    InfeasibleSet,
    #[error("minimum rates cannot be met (violation {0:e})")]
    Infeasible(f64),
    #[error("linear program is unbounded")]
    Unbounded,
    #[error("simplex pivot limit reached")]
    PivotLimit,
    #[error("simplex result violates a constraint by {0:e}")]
    Unstable(f64),
    #[error("weights must be finite, nonnegative and not all zero")]
    BadWeights,
    #[error("minimum rates must be finite and nonnegative")]
    BadMinRates,
    #[error("expected {expected} entries, got {got}")]
    Dimension { expected: usize, got: usize },
    #[error("search options must all be positive")]
    BadOptions,
    #[error(transparent)]
    Constraint(#[from] ConstraintError),
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// Maximizer of a weighted rate sum over a fixed constraint set.
#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution {
    pub rates: RatePoint,
    pub value: f64,
}

/// Maximizer over rates and phase durations jointly.
#[derive(Debug, Clone, PartialEq)]
pub struct JointSolution {
    pub rates: RatePoint,
    pub schedule: PhaseSchedule,
    pub value: f64,
}

fn check_inputs(dim: usize, weights: &[f64], min_rates: &[f64]) -> Result<(), RegionError> {
    if weights.len() != dim {
        return Err(RegionError::Dimension { expected: dim, got: weights.len() });
    }
    if min_rates.len() != dim {
        return Err(RegionError::Dimension { expected: dim, got: min_rates.len() });
    }
    if weights.iter().any(|w| !w.is_finite() || *w < 0.0) || weights.iter().all(|w| *w == 0.0) {
        return Err(RegionError::BadWeights);
    }
    if min_rates.iter().any(|r| !r.is_finite() || *r < 0.0) {
        return Err(RegionError::BadMinRates);
    }
    Ok(())
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn finish(status: lp::LpStatus) -> Result<(Vec<f64>, f64), RegionError> {
    match status {
        lp::LpStatus::Optimal { x, value } => Ok((x, value)),
        lp::LpStatus::Infeasible { residual } => Err(RegionError::Infeasible(residual)),
        lp::LpStatus::Unbounded => Err(RegionError::Unbounded),
        lp::LpStatus::PivotLimit => Err(RegionError::PivotLimit),
        lp::LpStatus::Unstable { violation } => Err(RegionError::Unstable(violation)),
    }
}

/// Exact maximizer of `weightsᵀR` over `cs` with `R ≥ min_rates`.
pub fn lp_max(cs: &ConstraintSet, weights: &[f64], min_rates: &[f64]) -> Result<LpSolution, RegionError> {
    check_inputs(cs.dim, weights, min_rates)?;
    if !cs.feasible {
        return Err(RegionError::InfeasibleSet);
    }
    // Shift to y = R - min_rates ≥ 0.
    let problem = lp::Lp {
        c: weights.to_vec(),
        a_ub: cs.constraints.iter().map(|c| c.coeff.clone()).collect(),
        b_ub: cs.constraints.iter().map(|c| c.rhs - dot(&c.coeff, min_rates)).collect(),
        ..Default::default()
    };
    let (y, _) = finish(lp::maximize(&problem))?;
    let r: Vec<f64> = y.iter().zip(min_rates).map(|(a, b)| a + b).collect();
    let value = dot(weights, &r);
    Ok(LpSolution { rates: RatePoint::from_stacked(&r), value })
}

fn joint_problem(set: &LinearSet, weights: &[f64], min_rates: &[f64]) -> lp::Lp {
    let (d, p) = (set.dim, set.n_phases);
    let mut a_ub = Vec::with_capacity(set.rows.len() + set.side.len());
    let mut b_ub = Vec::with_capacity(a_ub.capacity());
    for row in &set.rows {
        let mut a = row.coeff.clone();
        a.extend(row.per_phase.iter().map(|v| -v));
        b_ub.push(-dot(&row.coeff, min_rates));
        a_ub.push(a);
    }
    for s in &set.side {
        let mut a = vec![0.0; d];
        a.extend_from_slice(s);
        a_ub.push(a);
        b_ub.push(0.0);
    }
    let mut eq = vec![0.0; d];
    eq.extend(std::iter::repeat_n(1.0, p));
    let mut c = weights.to_vec();
    c.extend(std::iter::repeat_n(0.0, p));
    lp::Lp { c, a_ub, b_ub, a_eq: vec![eq], b_eq: vec![1.0] }
}

fn joint_solution(x: &[f64], set: &LinearSet, weights: &[f64], min_rates: &[f64]) -> Result<JointSolution, RegionError> {
    let d = set.dim;
    let r: Vec<f64> = x[..d].iter().zip(min_rates).map(|(a, b)| a + b).collect();
    let mut delta: Vec<f64> = x[d..d + set.n_phases].iter().map(|v| v.max(0.0)).collect();
    let total: f64 = delta.iter().sum();
    for v in &mut delta {
        *v /= total;
    }
    let value = dot(weights, &r);
    Ok(JointSolution { rates: RatePoint::from_stacked(&r), schedule: PhaseSchedule::new(delta)?, value })
}

/// Exact maximizer of `weightsᵀR` over rates and schedules of a
/// schedule-linear constraint set.
pub fn lp_max_joint(set: &LinearSet, weights: &[f64], min_rates: &[f64]) -> Result<JointSolution, RegionError> {
    check_inputs(set.dim, weights, min_rates)?;
    if !set.feasible {
        return Err(RegionError::InfeasibleSet);
    }
    let (x, _) = finish(lp::maximize(&joint_problem(set, weights, min_rates)))?;
    joint_solution(&x, set, weights, min_rates)
}

/// As [`lp_max_joint`], but when the optimum is a whole face, returns the
/// optimal point whose projection lies closest to the ray with slope
/// `w_up / w_down`. Falls back to the plain optimum if the second stage fails.
pub fn lp_max_joint_balanced(set: &LinearSet, weights: &[f64], min_rates: &[f64]) -> Result<JointSolution, RegionError> {
    let first = lp_max_joint(set, weights, min_rates)?;
    let m = set.dim / 2;
    let wd: f64 = weights[..m].iter().sum::<f64>() / m as f64;
    let wu: f64 = weights[m..].iter().sum::<f64>() / m as f64;
    if wd <= 0.0 || wu <= 0.0 {
        return Ok(first);
    }
    let mut problem = joint_problem(set, weights, min_rates);
    let n = problem.c.len();
    // Extra variable t with t ≤ Σdown / w_down and t ≤ Σup / w_up.
    for row in problem.a_ub.iter_mut() {
        row.push(0.0);
    }
    problem.a_eq[0].push(0.0);
    let slack = 1e-9 * (1.0 + first.value.abs());
    let mut keep: Vec<f64> = weights.iter().map(|w| -w).collect();
    keep.extend(std::iter::repeat_n(0.0, n - set.dim + 1));
    problem.a_ub.push(keep);
    problem.b_ub.push(-(first.value - slack - dot(weights, min_rates)));
    for (lo, w) in [(0, wd), (m, wu)] {
        let mut row = vec![0.0; n + 1];
        row[lo..lo + m].iter_mut().for_each(|v| *v = -1.0);
        row[n] = w;
        problem.a_ub.push(row);
        problem.b_ub.push(min_rates[lo..lo + m].iter().sum());
    }
    problem.c = vec![0.0; n + 1];
    problem.c[n] = 1.0;
    match lp::maximize(&problem) {
        lp::LpStatus::Optimal { x, .. } => joint_solution(&x, set, weights, min_rates),
        _ => Ok(first),
    }
}

/// `(Σ R_{0,i}, Σ R_{i,0})`.
pub fn project(r: &RatePoint) -> (f64, f64) {
    (r.down.iter().sum(), r.up.iter().sum())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constraints::{eval_feasible, Constraint};

    fn set(rows: &[([f64; 4], f64)]) -> ConstraintSet {
        ConstraintSet {
            dim: 4,
            constraints: rows.iter().map(|(c, r)| Constraint { coeff: c.to_vec(), rhs: *r }).collect(),
            feasible: true,
        }
    }

    #[test]
    fn lp_max_examples() {
        let cs = set(&[
            ([1.0, 0.0, 0.0, 0.0], 1.0),
            ([0.0, 0.0, 1.0, 0.0], 1.0),
            ([1.0, 0.0, 1.0, 0.0], 1.5),
            ([0.0, 1.0, 0.0, 1.0], 0.0),
        ]);
        let sol = lp_max(&cs, &[1.0, 0.0, 1.0, 0.0], &[0.0; 4]).unwrap();
        assert!((sol.value - 1.5).abs() < 1e-12);
        assert!(eval_feasible(&cs, &sol.rates, 1e-9).unwrap());

        let capped = set(&[([1.0, 1.0, 1.0, 1.0], 1.0), ([0.0, 1.0, 0.0, 0.0], 0.005)]);
        assert!(matches!(lp_max(&capped, &[1.0; 4], &[0.0, 0.01, 0.0, 0.0]), Err(RegionError::Infeasible(_))));
    }

    #[test]
    fn lp_max_rejects_bad_input() {
        let cs = set(&[([1.0, 1.0, 1.0, 1.0], 1.0)]);
        assert_eq!(lp_max(&cs, &[0.0; 4], &[0.0; 4]), Err(RegionError::BadWeights));
        assert_eq!(lp_max(&cs, &[1.0; 3], &[0.0; 4]), Err(RegionError::Dimension { expected: 4, got: 3 }));
        let mut bad = cs.clone();
        bad.feasible = false;
        assert_eq!(lp_max(&bad, &[1.0; 4], &[0.0; 4]), Err(RegionError::InfeasibleSet));
    }

    #[test]
    fn project_examples() {
        let r = RatePoint::new(vec![0.1, 0.2], vec![0.3, 0.4]).unwrap();
        let (d, u) = project(&r);
        assert!((d - 0.3).abs() < 1e-15 && (u - 0.7).abs() < 1e-15);
        assert_eq!(project(&RatePoint::zero(2)), (0.0, 0.0));
        assert_eq!(project(&RatePoint::new(vec![1.0, 0.0], vec![0.0, 1.0]).unwrap()), (1.0, 1.0));
    }
}
