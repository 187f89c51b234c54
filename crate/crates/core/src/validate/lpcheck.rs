//! Brute-force LP oracle and region nesting checks.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::ValidateError;
use crate::constraints::{build_achievable, build_outer, ConstraintSet};
use crate::model::{
    ChannelGains, CoopParams, MartonParams, OuterFamily, PhaseSchedule, PowerAllocation, Protocol, ProtocolParams,
};
use crate::region::{comprehensive_hull, inside_hull, lp_max, RegionBoundary, RegionError};

const VERTEX_TOL: f64 = 1e-9;

fn subsets(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur = Vec::with_capacity(k);
    fn rec(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            cur.push(i);
            rec(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    rec(0, n, k, &mut cur, &mut out);
    out
}

/// Maximum of `weightsᵀR` over `cs ∩ {R ≥ min_rates}` by enumerating every
/// basic solution. `None` when no vertex is feasible. Assumes the feasible
/// set is bounded.
pub fn vertex_enum_max(cs: &ConstraintSet, weights: &[f64], min_rates: &[f64]) -> Option<f64> {
    if !cs.feasible {
        return None;
    }
    let d = cs.dim;
    // Rows a·R ≤ b, then -R_i ≤ -min_i.
    let mut a: Vec<Vec<f64>> = cs.constraints.iter().map(|c| c.coeff.clone()).collect();
    let mut b: Vec<f64> = cs.constraints.iter().map(|c| c.rhs).collect();
    for i in 0..d {
        let mut row = vec![0.0; d];
        row[i] = -1.0;
        a.push(row);
        b.push(-min_rates[i]);
    }
    let mut best: Option<f64> = None;
    for idx in subsets(a.len(), d) {
        let m = DMatrix::from_fn(d, d, |i, j| a[idx[i]][j]);
        let rhs = DVector::from_iterator(d, idx.iter().map(|&i| b[i]));
        let Some(x) = m.lu().solve(&rhs) else { continue };
        if x.iter().any(|v| !v.is_finite()) {
            continue;
        }
        let feasible = a.iter().zip(&b).all(|(row, &bi)| {
            let lhs: f64 = row.iter().zip(x.iter()).map(|(p, q)| p * q).sum();
            lhs <= bi + VERTEX_TOL * (1.0 + bi.abs())
        });
        if feasible {
            let v: f64 = weights.iter().zip(x.iter()).map(|(w, r)| w * r).sum();
            best = Some(best.map_or(v, |c: f64| c.max(v)));
        }
    }
    best
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpCheckReport {
    pub max_abs_error: f64,
    pub compared: usize,
    /// Sets where one solver found a feasible optimum and the other did not.
    pub disagreements: usize,
}

fn simplex(rng: &mut ChaCha8Rng, k: usize) -> Vec<f64> {
    let e: Vec<f64> = (0..k).map(|_| -(1.0 - rng.gen::<f64>()).ln() + 1e-3).collect();
    let s: f64 = e.iter().sum();
    let mut v: Vec<f64> = e.iter().map(|x| x / s).collect();
    let drift: f64 = v.iter().sum::<f64>() - 1.0;
    v[0] -= drift;
    v
}

fn random_channel(rng: &mut ChaCha8Rng) -> Result<(ChannelGains, PowerAllocation), ValidateError> {
    let mut gain = vec![vec![0.0; 4]; 4];
    for (i, row) in gain.iter_mut().enumerate() {
        for (j, g) in row.iter_mut().enumerate() {
            if i != j {
                *g = rng.gen_range(0.05..2.0);
            }
        }
    }
    let db: Vec<f64> = (0..4).map(|_| rng.gen_range(-10.0..25.0)).collect();
    Ok((ChannelGains::new(2, gain)?, PowerAllocation::from_db(2, &db)?))
}

fn random_params(
    rng: &mut ChaCha8Rng,
    protocol: Protocol,
    ch: &ChannelGains,
    pw: &PowerAllocation,
) -> Result<ProtocolParams, ValidateError> {
    let mut marton = BTreeMap::new();
    for (node, phase, k) in protocol.marton_slots(2) {
        let lambda = (0..k).map(|_| (0..k).map(|_| rng.gen_range(-2.0..2.0)).collect()).collect();
        marton.insert((node, phase), MartonParams::new(lambda, simplex(rng, k))?);
    }
    let coop = if protocol.is_coop() {
        let r = ch.relay();
        let h = ch.gain(r, 1).max(ch.gain(r, 2));
        let p_y = h * h * pw.p(r) + 1.0;
        let p_yhat: f64 = rng.gen_range(-2.0f64..2.0).exp();
        let sigma = rng.gen_range(-0.95..0.95) * (p_yhat * p_y).sqrt();
        Some(CoopParams::new(p_yhat, sigma, p_y)?)
    } else {
        None
    };
    let schedule = PhaseSchedule::new(simplex(rng, crate::model::phase_count(protocol, 2)))?;
    Ok(ProtocolParams::new(protocol, 2, schedule, marton, coop)?)
}

/// Compares `lp_max` with vertex enumeration on `n_sets` random achievable
/// and outer constraint sets, with random nonnegative weights and minimum
/// rates of 0 or 0.01.
pub fn lp_equivalence_check(seed: u64, n_sets: usize) -> Result<LpCheckReport, ValidateError> {
    if n_sets == 0 {
        return Err(ValidateError::NoDraws);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rep = LpCheckReport { max_abs_error: 0.0, compared: 0, disagreements: 0 };
    while rep.compared + rep.disagreements < n_sets {
        let (ch, pw) = random_channel(&mut rng)?;
        let cs = if rng.gen_bool(0.75) {
            let protocol = Protocol::ALL[rng.gen_range(0..Protocol::ALL.len())];
            build_achievable(&random_params(&mut rng, protocol, &ch, &pw)?, &ch, &pw)?
        } else {
            let family = OuterFamily::ALL[rng.gen_range(0..OuterFamily::ALL.len())];
            let schedule = PhaseSchedule::new(simplex(&mut rng, family.phase_count(2)))?;
            build_outer(family, &ch, &pw, &schedule)?
        };
        if !cs.feasible {
            continue;
        }
        let weights: Vec<f64> = (0..4).map(|_| rng.gen_range(0.01..1.0)).collect();
        let min = if rng.gen_bool(0.5) { 0.0 } else { 0.01 };
        let min_rates = vec![min; 4];
        let brute = vertex_enum_max(&cs, &weights, &min_rates);
        match (lp_max(&cs, &weights, &min_rates), brute) {
            (Ok(sol), Some(v)) => {
                rep.compared += 1;
                rep.max_abs_error = rep.max_abs_error.max((sol.value - v).abs());
            }
            (Err(RegionError::Infeasible(_)), None) => rep.compared += 1,
            _ => rep.disagreements += 1,
        }
    }
    Ok(rep)
}

/// Whether every projected point of `inner` lies in the comprehensive hull
/// of `outer`'s points, grown by `tol`.
pub fn check_subset(inner: &RegionBoundary, outer: &RegionBoundary, tol: f64) -> bool {
    let hull = comprehensive_hull(&outer.projected());
    inner.projected().into_iter().all(|p| inside_hull(&hull, p, tol))
}
