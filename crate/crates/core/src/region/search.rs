use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{lp_max_joint, lp_max_joint_balanced, nm, project, JointSolution, RegionError};
use crate::constraints::{achievable_linear, outer_linear};
use crate::model::{
    ChannelGains, CoopParams, MartonParams, OuterFamily, PhaseSchedule, PowerAllocation, Protocol,
    ProtocolParams, RatePoint, BETA_FLOOR, LAMBDA_MAX,
};

/// Weight given to the suppressed direction at the two ends of a trace.
const EDGE_EPS: f64 = 1e-6;
const PENALTY_INFEASIBLE: f64 = 1e3;
const PENALTY_BROKEN: f64 = 1e6;
const MAX_RESTARTS: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SearchOptions {
    pub starts: usize,
    pub iters: usize,
    pub ftol: f64,
    pub seed: u64,
    pub directions: usize,
}

impl Default for SearchOptions {
    fn default() -> Self {
        Self { starts: 32, iters: 500, ftol: 1e-9, seed: 42, directions: 64 }
    }
}

impl SearchOptions {
    fn check(&self) -> Result<(), RegionError> {
        if self.starts == 0 || self.iters == 0 || self.directions == 0 || !(self.ftol > 0.0) {
            return Err(RegionError::BadOptions);
        }
        Ok(())
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of the `index`-th independent sub-task of `master`.
pub fn sub_seed(master: u64, index: u64) -> u64 {
    splitmix64(master ^ splitmix64(index.wrapping_add(1)))
}

/// Best point found for one weight vector.
#[derive(Debug, Clone, PartialEq)]
pub struct OptimizedPoint {
    pub params: ProtocolParams,
    pub rates: RatePoint,
    pub value: f64,
}

/// Maps a flat search vector to Marton and cooperation parameters.
struct Layout {
    protocol: Protocol,
    m: usize,
    slots: Vec<(usize, usize, usize)>,
    coop: bool,
    p_y: f64,
    dim: usize,
}

fn softplus(x: f64) -> f64 {
    if x > 30.0 {
        x
    } else {
        x.exp().ln_1p()
    }
}

impl Layout {
    fn new(protocol: Protocol, channel: &ChannelGains, powers: &PowerAllocation) -> Self {
        let m = channel.m();
        let slots = protocol.marton_slots(m);
        let coop = protocol.is_coop();
        let r = channel.relay();
        // The cooperating terminal is the one with the stronger relay link.
        let h = channel.gain(r, 1).max(channel.gain(r, 2.min(m)));
        let p_y = h * h * powers.p(r) + 1.0;
        let dim = slots.iter().map(|&(_, _, k)| k * k + k).sum::<usize>() + if coop { 2 } else { 0 };
        Self { protocol, m, slots, coop, p_y, dim }
    }

    fn bounds(&self) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
        let (mut lo, mut hi, mut step) = (Vec::new(), Vec::new(), Vec::new());
        for &(_, _, k) in &self.slots {
            for _ in 0..k * k {
                lo.push(-LAMBDA_MAX);
                hi.push(LAMBDA_MAX);
                step.push(0.5);
            }
            for _ in 0..k {
                lo.push(-30.0);
                hi.push(30.0);
                step.push(1.0);
            }
        }
        if self.coop {
            lo.extend([-20.0, -1.0]);
            hi.extend([20.0, 1.0]);
            step.extend([1.0, 0.3]);
        }
        (lo, hi, step)
    }

    fn identity_start(&self) -> Vec<f64> {
        let mut z = Vec::with_capacity(self.dim);
        for &(_, _, k) in &self.slots {
            for i in 0..k {
                for j in 0..k {
                    z.push(if i == j { 1.0 } else { 0.0 });
                }
            }
            z.extend(std::iter::repeat_n(0.0, k));
        }
        if self.coop {
            z.extend([0.0, 0.0]);
        }
        z
    }

    fn random_start(&self, rng: &mut ChaCha8Rng) -> Vec<f64> {
        let mut z = Vec::with_capacity(self.dim);
        for &(_, _, k) in &self.slots {
            for i in 0..k {
                for j in 0..k {
                    let base = if i == j { 1.0 } else { 0.0 };
                    z.push(base + rng.gen_range(-1.0..1.0));
                }
            }
            for _ in 0..k {
                z.push(rng.gen_range(-2.0..2.0));
            }
        }
        if self.coop {
            z.push(rng.gen_range(-2.0..2.0));
            z.push(rng.gen_range(-0.95..0.95));
        }
        z
    }

    fn params(&self, z: &[f64]) -> Result<ProtocolParams, RegionError> {
        let mut marton = BTreeMap::new();
        let mut at = 0;
        for &(node, phase, k) in &self.slots {
            let lambda: Vec<Vec<f64>> = (0..k)
                .map(|i| (0..k).map(|j| z[at + i * k + j].clamp(-LAMBDA_MAX, LAMBDA_MAX)).collect())
                .collect();
            at += k * k;
            let sp: Vec<f64> = z[at..at + k].iter().map(|&v| softplus(v)).collect();
            at += k;
            let total: f64 = sp.iter().sum();
            let free = 1.0 - k as f64 * BETA_FLOOR;
            let mut beta: Vec<f64> = sp.iter().map(|s| BETA_FLOOR + free * s / total).collect();
            let drift: f64 = beta.iter().sum::<f64>() - 1.0;
            let imax = (0..k).max_by(|&a, &b| beta[a].total_cmp(&beta[b])).unwrap_or(0);
            beta[imax] -= drift;
            marton.insert((node, phase), MartonParams::new(lambda, beta)?);
        }
        let coop = if self.coop {
            let p_yhat = z[at].clamp(-20.0, 20.0).exp();
            let rho = z[at + 1].clamp(-1.0, 1.0);
            let sigma = rho * (p_yhat * self.p_y).sqrt();
            Some(CoopParams::new(p_yhat, sigma, self.p_y)?)
        } else {
            None
        };
        let schedule = PhaseSchedule::uniform(crate::model::phase_count(self.protocol, self.m));
        Ok(ProtocolParams::new(self.protocol, self.m, schedule, marton, coop)?)
    }
}

fn solve_at(
    layout: &Layout,
    z: &[f64],
    channel: &ChannelGains,
    powers: &PowerAllocation,
    weights: &[f64],
    min_rates: &[f64],
    balanced: bool,
) -> Result<(ProtocolParams, JointSolution), RegionError> {
    let params = layout.params(z)?;
    let set = achievable_linear(&params, channel, powers)?;
    let sol = if balanced {
        lp_max_joint_balanced(&set, weights, min_rates)?
    } else {
        lp_max_joint(&set, weights, min_rates)?
    };
    Ok((params, sol))
}

fn objective(res: &Result<(ProtocolParams, JointSolution), RegionError>) -> f64 {
    match res {
        Ok((_, sol)) => -sol.value,
        Err(RegionError::Infeasible(v)) => PENALTY_INFEASIBLE + v,
        Err(_) => PENALTY_BROKEN,
    }
}

fn optimize_seeded(
    protocol: Protocol,
    channel: &ChannelGains,
    powers: &PowerAllocation,
    weights: &[f64],
    min_rates: &[f64],
    opts: &SearchOptions,
    seed: u64,
) -> Result<OptimizedPoint, RegionError> {
    opts.check()?;
    let layout = Layout::new(protocol, channel, powers);
    let (lo, hi, step) = layout.bounds();
    let mut eval = |z: &[f64]| objective(&solve_at(&layout, z, channel, powers, weights, min_rates, false));

    let mut best: Option<(Vec<f64>, f64)> = None;
    let starts = if layout.dim == 0 { 1 } else { opts.starts };
    for s in 0..starts {
        let x0 = if s == 0 {
            layout.identity_start()
        } else {
            let mut rng = ChaCha8Rng::seed_from_u64(sub_seed(seed, s as u64));
            layout.random_start(&mut rng)
        };
        let mut x = x0;
        let mut fx = f64::INFINITY;
        let mut left = opts.iters;
        for _ in 0..MAX_RESTARTS {
            let r = nm::minimize(&mut eval, &x, &step, &lo, &hi, left, opts.ftol);
            let improved = r.fx < fx - opts.ftol;
            left = left.saturating_sub(r.iterations.max(1));
            x = r.x;
            fx = fx.min(r.fx);
            if !improved || left == 0 || layout.dim == 0 {
                break;
            }
        }
        if best.as_ref().is_none_or(|(_, bf)| fx < *bf) {
            best = Some((x, fx));
        }
    }
    let (z, _) = best.expect("at least one start");
    let (params, sol) = solve_at(&layout, &z, channel, powers, weights, min_rates, true)?;
    let params = params.with_schedule(sol.schedule)?;
    Ok(OptimizedPoint { params, rates: sol.rates, value: sol.value })
}

/// Multi-start search for the protocol parameters maximizing `weightsᵀR`
/// subject to `R ≥ min_rates`. Phase durations are optimized exactly inside
/// the LP; Marton and cooperation parameters by Nelder–Mead.
pub fn optimize_point(
    protocol: Protocol,
    channel: &ChannelGains,
    powers: &PowerAllocation,
    weights: &[f64],
    min_rates: &[f64],
    opts: &SearchOptions,
) -> Result<OptimizedPoint, RegionError> {
    optimize_seeded(protocol, channel, powers, weights, min_rates, opts, opts.seed)
}

/// Scalarization angles in `(0, π/2)` with their weight vectors over
/// `2m` rates. The two end directions weight the other side by `1e-6`.
pub fn directions(k: usize, m: usize) -> Vec<(f64, Vec<f64>)> {
    let weights = |d: f64, u: f64| -> Vec<f64> {
        std::iter::repeat_n(d, m).chain(std::iter::repeat_n(u, m)).collect()
    };
    if k == 1 {
        let t = std::f64::consts::FRAC_PI_4;
        return vec![(t, weights(t.cos(), t.sin()))];
    }
    (0..k)
        .map(|i| {
            if i == 0 {
                (EDGE_EPS.atan(), weights(1.0, EDGE_EPS))
            } else if i == k - 1 {
                (std::f64::consts::FRAC_PI_2 - EDGE_EPS.atan(), weights(EDGE_EPS, 1.0))
            } else {
                let t = i as f64 / (k - 1) as f64 * std::f64::consts::FRAC_PI_2;
                (t, weights(t.cos(), t.sin()))
            }
        })
        .collect()
}

/// Solution recorded for one scalarization direction.
#[derive(Debug, Clone, PartialEq)]
pub struct PointSolution {
    pub down_sum: f64,
    pub up_sum: f64,
    pub rates: RatePoint,
    pub schedule: PhaseSchedule,
    /// Full parameters for achievable schemes; `None` for outer bounds.
    pub params: Option<ProtocolParams>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryPoint {
    pub theta: f64,
    /// `None` when the direction had no feasible point.
    pub solution: Option<PointSolution>,
}

/// Projected boundary of one protocol or outer bound, ordered by angle.
#[derive(Debug, Clone, PartialEq)]
pub struct RegionBoundary {
    pub label: String,
    pub points: Vec<BoundaryPoint>,
}

impl RegionBoundary {
    /// Feasible projected points in angle order.
    pub fn projected(&self) -> Vec<[f64; 2]> {
        self.points
            .iter()
            .filter_map(|p| p.solution.as_ref().map(|s| [s.down_sum, s.up_sum]))
            .collect()
    }
}

fn point_solution(rates: RatePoint, schedule: PhaseSchedule, params: Option<ProtocolParams>) -> PointSolution {
    let (down_sum, up_sum) = project(&rates);
    PointSolution { down_sum, up_sum, rates, schedule, params }
}

/// Traces the projected region of an achievable scheme along
/// `opts.directions` weight directions. Each direction uses its own seed.
pub fn trace_boundary(
    protocol: Protocol,
    channel: &ChannelGains,
    powers: &PowerAllocation,
    min_rates: &[f64],
    opts: &SearchOptions,
) -> Result<RegionBoundary, RegionError> {
    opts.check()?;
    let mut points = Vec::with_capacity(opts.directions);
    for (k, (theta, w)) in directions(opts.directions, channel.m()).into_iter().enumerate() {
        let seed = sub_seed(opts.seed, k as u64);
        let solution = match optimize_seeded(protocol, channel, powers, &w, min_rates, opts, seed) {
            Ok(p) => Some(point_solution(p.rates, p.params.schedule().clone(), Some(p.params))),
            Err(RegionError::Infeasible(_)) | Err(RegionError::InfeasibleSet) => None,
            Err(e) => return Err(e),
        };
        points.push(BoundaryPoint { theta, solution });
    }
    Ok(RegionBoundary { label: protocol.name().to_string(), points })
}

/// Traces a cut-set outer bound; only phase durations are free, and they
/// are optimized exactly.
pub fn outer_boundary(
    family: OuterFamily,
    channel: &ChannelGains,
    powers: &PowerAllocation,
    opts: &SearchOptions,
) -> Result<RegionBoundary, RegionError> {
    opts.check()?;
    let set = outer_linear(family, channel, powers)?;
    let zero = vec![0.0; set.dim];
    let mut points = Vec::with_capacity(opts.directions);
    for (theta, w) in directions(opts.directions, channel.m()) {
        let sol = lp_max_joint_balanced(&set, &w, &zero)?;
        points.push(BoundaryPoint { theta, solution: Some(point_solution(sol.rates, sol.schedule, None)) });
    }
    Ok(RegionBoundary { label: family.name().to_string(), points })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SumRateRow {
    pub power_db: f64,
    pub label: String,
    pub sum_rate: f64,
}

/// Maximum total rate per protocol and outer family at each uniform power.
pub fn sum_rate_sweep(
    protocols: &[Protocol],
    families: &[OuterFamily],
    channel: &ChannelGains,
    powers_db: &[f64],
    opts: &SearchOptions,
) -> Result<Vec<SumRateRow>, RegionError> {
    opts.check()?;
    let m = channel.m();
    let ones = vec![1.0; 2 * m];
    let zero = vec![0.0; 2 * m];
    let mut rows = Vec::new();
    for (pi, &db) in powers_db.iter().enumerate() {
        let powers = PowerAllocation::from_db(m, &vec![db; m + 2])?;
        for (qi, &protocol) in protocols.iter().enumerate() {
            let seed = sub_seed(opts.seed, (pi * 1000 + qi) as u64);
            let value = optimize_seeded(protocol, channel, &powers, &ones, &zero, opts, seed)?.value;
            rows.push(SumRateRow { power_db: db, label: protocol.name().to_string(), sum_rate: value });
        }
        for &family in families {
            let set = outer_linear(family, channel, &powers)?;
            let value = lp_max_joint(&set, &ones, &zero)?.value;
            rows.push(SumRateRow { power_db: db, label: family.name().to_string(), sum_rate: value });
        }
    }
    Ok(rows)
}
