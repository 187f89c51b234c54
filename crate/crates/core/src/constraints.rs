//! Linear rate constraints of each protocol's Gaussian inner bound and of
//! the cut-set outer bounds, for two terminal pairs.
//!
//! Rates are stacked as `(R_{0,1}, R_{0,2}, R_{1,0}, R_{2,0})`. Every
//! right-hand side is a sum of phase durations times mutual informations, so
//! builders first produce a [`LinearSet`] whose rows carry one coefficient
//! per phase; [`LinearSet::at`] evaluates it for a concrete schedule.

use thiserror::Error;

use crate::gkernels::{
    c_b, c_bc, c_be, c_be2, c_bi, c_bm, c_c, c_ci, c_compress, c_m, cap, KernelError,
};
use crate::model::{
    phase_count, ChannelGains, MartonParams, ModelError, OuterFamily, PhaseSchedule,
    PowerAllocation, Protocol, ProtocolParams, RatePoint,
};

const D1: usize = 0;
const D2: usize = 1;
const U1: usize = 2;
const U2: usize = 3;

/// Rows whose right-hand side dips below zero by less than this are clamped.
const NEG_RHS_TOL: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConstraintError {
    #[error("only two terminal pairs are supported, got m = {0}")]
    UnsupportedM(usize),
    #[error("{0} has no cooperation side condition")]
    NotCoop(Protocol),
    #[error("missing Marton parameters at node {node}, phase {phase}")]
    MissingMarton { node: usize, phase: usize },
    #[error("missing cooperation parameters")]
    MissingCoop,
    #[error("schedule has {got} phases, expected {expected}")]
    PhaseCount { expected: usize, got: usize },
    #[error("rate vector has {got} entries, expected {expected}")]
    Dimension { expected: usize, got: usize },
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// `coeffᵀ R ≤ rhs` with `coeff` entries in {0, 1}.
#[derive(Debug, Clone, PartialEq)]
pub struct Constraint {
    pub coeff: Vec<f64>,
    pub rhs: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConstraintSet {
    pub dim: usize,
    pub constraints: Vec<Constraint>,
    /// False when a side condition fails or a constraint is structurally
    /// violated; such sets are rejected without solving.
    pub feasible: bool,
}

impl ConstraintSet {
    pub fn len(&self) -> usize {
        self.constraints.len()
    }

    pub fn is_empty(&self) -> bool {
        self.constraints.is_empty()
    }
}

/// One constraint with right-hand side `Σ_l Δ_l · per_phase[l]`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearRow {
    pub coeff: Vec<f64>,
    pub per_phase: Vec<f64>,
}

/// Constraint rows linear in the schedule, plus side conditions
/// `Σ_l Δ_l · s[l] ≤ 0` on the schedule alone.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearSet {
    pub dim: usize,
    pub n_phases: usize,
    pub rows: Vec<LinearRow>,
    pub side: Vec<Vec<f64>>,
    pub feasible: bool,
}

impl LinearSet {
    fn new(dim: usize, n_phases: usize) -> Self {
        Self { dim, n_phases, rows: Vec::new(), side: Vec::new(), feasible: true }
    }

    /// Adds `Σ_{i∈rates} R_i ≤ Σ plus − Σ minus`, each term a `(phase, value)`
    /// pair with 1-based phase. An infinite positive term makes the row
    /// vacuous; an infinite subtracted term makes the whole set infeasible.
    fn push(&mut self, rates: &[usize], plus: &[(usize, f64)], minus: &[(usize, f64)]) {
        if minus.iter().any(|&(_, v)| v.is_infinite() || v.is_nan()) {
            self.feasible = false;
            return;
        }
        if plus.iter().any(|&(_, v)| v.is_infinite() || v.is_nan()) {
            return;
        }
        let mut coeff = vec![0.0; self.dim];
        for &i in rates {
            coeff[i] = 1.0;
        }
        let mut per_phase = vec![0.0; self.n_phases];
        for &(l, v) in plus {
            per_phase[l - 1] += v;
        }
        for &(l, v) in minus {
            per_phase[l - 1] -= v;
        }
        self.rows.push(LinearRow { coeff, per_phase });
    }

    /// Adds the side condition `Σ lhs ≤ Σ rhs` over `(phase, value)` terms.
    fn push_side(&mut self, lhs: &[(usize, f64)], rhs: &[(usize, f64)]) {
        if lhs.iter().any(|&(_, v)| !v.is_finite()) {
            self.feasible = false;
            return;
        }
        if rhs.iter().any(|&(_, v)| v.is_infinite()) {
            return;
        }
        let mut s = vec![0.0; self.n_phases];
        for &(l, v) in lhs {
            s[l - 1] += v;
        }
        for &(l, v) in rhs {
            s[l - 1] -= v;
        }
        self.side.push(s);
    }

    fn permute_rates(&mut self, perm: &[usize]) {
        for row in &mut self.rows {
            let old = row.coeff.clone();
            for (i, &p) in perm.iter().enumerate() {
                row.coeff[p] = old[i];
            }
        }
    }

    /// Whether every side condition holds at `delta`.
    pub fn side_ok(&self, delta: &[f64]) -> bool {
        self.feasible
            && self.side.iter().all(|s| {
                let v: f64 = s.iter().zip(delta).map(|(a, d)| a * d).sum();
                v <= 1e-12
            })
    }

    /// Evaluates every row at a concrete schedule.
    pub fn at(&self, schedule: &PhaseSchedule) -> Result<ConstraintSet, ConstraintError> {
        if schedule.len() != self.n_phases {
            return Err(ConstraintError::PhaseCount { expected: self.n_phases, got: schedule.len() });
        }
        let delta = schedule.delta();
        let mut feasible = self.side_ok(delta);
        let mut constraints = Vec::with_capacity(self.rows.len());
        for row in &self.rows {
            let mut rhs: f64 = row.per_phase.iter().zip(delta).map(|(a, d)| a * d).sum();
            if rhs < 0.0 {
                if rhs < -NEG_RHS_TOL {
                    feasible = false;
                }
                rhs = 0.0;
            }
            constraints.push(Constraint { coeff: row.coeff.clone(), rhs });
        }
        Ok(ConstraintSet { dim: self.dim, constraints, feasible })
    }
}

/// Per-link SNRs `|h_{i,j}|² P_i` of a two-pair network.
struct Links<'a> {
    ch: &'a ChannelGains,
    pw: &'a PowerAllocation,
    r: usize,
}

impl<'a> Links<'a> {
    fn new(ch: &'a ChannelGains, pw: &'a PowerAllocation) -> Result<Self, ConstraintError> {
        if ch.m() != 2 {
            return Err(ConstraintError::UnsupportedM(ch.m()));
        }
        if pw.as_slice().len() != ch.m() + 2 {
            return Err(ModelError::PowerLength { expected: ch.m() + 2, got: pw.as_slice().len() }.into());
        }
        Ok(Self { ch, pw, r: ch.relay() })
    }

    fn s(&self, i: usize, j: usize) -> f64 {
        let h = self.ch.gain(i, j);
        h * h * self.pw.p(i)
    }

    fn h(&self, i: usize, j: usize) -> f64 {
        self.ch.gain(i, j)
    }

    fn p(&self, i: usize) -> f64 {
        self.pw.p(i)
    }
}

fn slot(params: &ProtocolParams, node: usize, phase: usize) -> Result<&MartonParams, ConstraintError> {
    params.marton().get(&(node, phase)).ok_or(ConstraintError::MissingMarton { node, phase })
}

/// Whether terminals must be swapped internally so that `|h_{r,1}| ≥ |h_{r,2}|`.
fn needs_relabel(protocol: Protocol, ch: &ChannelGains) -> bool {
    protocol.is_coop() && ch.gain(ch.relay(), 1) < ch.gain(ch.relay(), 2)
}

/// Schedule-linear form of a protocol's achievable constraints. The
/// schedule stored in `params` is ignored.
///
/// For the cooperation protocols the terminal with the stronger relay link
/// acts as terminal 1; when the input has `|h_{r,1}| < |h_{r,2}|` the
/// parameters are interpreted in that swapped labelling and the returned
/// rows are mapped back to the caller's labels.
pub fn achievable_linear(
    params: &ProtocolParams,
    channel: &ChannelGains,
    powers: &PowerAllocation,
) -> Result<LinearSet, ConstraintError> {
    let protocol = params.protocol();
    if needs_relabel(protocol, channel) {
        let ch = channel.swap_nodes(1, 2);
        let pw = powers.swap_nodes(1, 2);
        let mut set = achievable_rows(params, &ch, &pw)?;
        set.permute_rates(&[D2, D1, U2, U1]);
        return Ok(set);
    }
    achievable_rows(params, channel, powers)
}

/// Constraint set of a protocol at the schedule stored in `params`.
pub fn build_achievable(
    params: &ProtocolParams,
    channel: &ChannelGains,
    powers: &PowerAllocation,
) -> Result<ConstraintSet, ConstraintError> {
    achievable_linear(params, channel, powers)?.at(params.schedule())
}

/// The cooperation side condition at the schedule stored in `params`.
pub fn build_coop_feasibility(
    params: &ProtocolParams,
    channel: &ChannelGains,
    powers: &PowerAllocation,
) -> Result<bool, ConstraintError> {
    if !params.protocol().is_coop() {
        return Err(ConstraintError::NotCoop(params.protocol()));
    }
    let set = achievable_linear(params, channel, powers)?;
    Ok(set.side_ok(params.schedule().delta()))
}

fn kernel_err(set: &mut LinearSet, r: Result<f64, KernelError>) -> f64 {
    match r {
        Ok(v) => v,
        Err(_) => {
            set.feasible = false;
            0.0
        }
    }
}

/// Seven-row Marton region of a three-receiver broadcast in phase `l`:
/// row 0 of `mp` serves node 0 (both uplink rates), rows 1 and 2 the
/// terminals.
fn marton3(set: &mut LinearSet, lk: &Links, mp: &MartonParams, l: usize) {
    let (r, pr) = (lk.r, lk.p(lk.r));
    let beta = mp.beta();
    let b1 = c_b(pr, lk.h(r, 0), mp.row(0), beta);
    let b2 = c_b(pr, lk.h(r, 1), mp.row(1), beta);
    let b3 = c_b(pr, lk.h(r, 2), mp.row(2), beta);
    let e12 = c_be(mp.row(0), mp.row(1), beta);
    let e13 = c_be(mp.row(0), mp.row(2), beta);
    let e23 = c_be(mp.row(1), mp.row(2), beta);
    let e312 = c_be2(mp.row(2), mp.row(0), mp.row(1), beta);
    set.push(&[U1, U2], &[(l, b1)], &[]);
    set.push(&[D1], &[(l, b2)], &[]);
    set.push(&[D2], &[(l, b3)], &[]);
    set.push(&[U1, U2, D1], &[(l, b1), (l, b2)], &[(l, e12)]);
    set.push(&[U1, U2, D2], &[(l, b1), (l, b3)], &[(l, e13)]);
    set.push(&[D1, D2], &[(l, b2), (l, b3)], &[(l, e23)]);
    set.push(&[D1, D2, U1, U2], &[(l, b1), (l, b2), (l, b3)], &[(l, e312), (l, e12)]);
}

/// Relay network-coded broadcast in phase `l`: each terminal decodes its
/// stream, node 0 decodes both with its own messages as side information.
fn relay_nc_uplink(set: &mut LinearSet, lk: &Links, mp: &MartonParams, l: usize) {
    let (r, pr) = (lk.r, lk.p(lk.r));
    let beta = mp.beta();
    set.push(&[U1], &[(l, c_c(pr, lk.h(r, 0), mp.row(0), mp.row(1), beta))], &[]);
    set.push(&[U2], &[(l, c_c(pr, lk.h(r, 0), mp.row(1), mp.row(0), beta))], &[]);
    set.push(&[U1, U2], &[(l, cap(lk.s(r, 0)))], &[]);
}

fn full_mac(set: &mut LinearSet, lk: &Links, l: usize) {
    let (a0, a1, a2) = (lk.s(0, lk.r), lk.s(1, lk.r), lk.s(2, lk.r));
    set.push(&[D1, D2], &[(l, cap(a0))], &[]);
    set.push(&[U1], &[(l, cap(a1))], &[]);
    set.push(&[U2], &[(l, cap(a2))], &[]);
    set.push(&[D1, D2, U1], &[(l, cap(a0 + a1))], &[]);
    set.push(&[D1, D2, U2], &[(l, cap(a0 + a2))], &[]);
    set.push(&[U1, U2], &[(l, cap(a1 + a2))], &[]);
    set.push(&[D1, D2, U1, U2], &[(l, cap(a0 + a1 + a2))], &[]);
}

/// Node 0 superposes `V_{0,1}, V_{0,2}` in phase `l`; the relay decodes one
/// stream with the other known.
fn node0_to_relay(set: &mut LinearSet, lk: &Links, mp: &MartonParams, l: usize) {
    let (r, p0) = (lk.r, lk.p(0));
    let beta = mp.beta();
    set.push(&[D1], &[(l, c_c(p0, lk.h(0, r), mp.row(0), mp.row(1), beta))], &[]);
    set.push(&[D2], &[(l, c_c(p0, lk.h(0, r), mp.row(1), mp.row(0), beta))], &[]);
    set.push(&[D1, D2], &[(l, cap(lk.s(0, r)))], &[]);
}

fn achievable_rows(
    params: &ProtocolParams,
    ch: &ChannelGains,
    pw: &PowerAllocation,
) -> Result<LinearSet, ConstraintError> {
    let lk = Links::new(ch, pw)?;
    let protocol = params.protocol();
    let (r, pr) = (lk.r, lk.p(lk.r));
    let n = phase_count(protocol, 2);
    let mut set = LinearSet::new(4, n);
    let (a0, a1, a2) = (lk.s(0, r), lk.s(1, r), lk.s(2, r));

    match protocol {
        Protocol::Simple => {
            set.push(&[D1, D2], &[(1, cap(a0))], &[]);
            set.push(&[U1], &[(2, cap(a1))], &[]);
            set.push(&[U2], &[(3, cap(a2))], &[]);
            set.push(&[U1, U2], &[(4, cap(lk.s(r, 0)))], &[]);
            set.push(&[D1], &[(5, cap(lk.s(r, 1)))], &[]);
            set.push(&[D2], &[(6, cap(lk.s(r, 2)))], &[]);
        }
        Protocol::Fmabc => {
            full_mac(&mut set, &lk, 1);
            marton3(&mut set, &lk, slot(params, r, 2)?, 2);
        }
        Protocol::FmabcN => {
            full_mac(&mut set, &lk, 1);
            let mp = slot(params, r, 2)?;
            relay_nc_downlink(&mut set, &lk, mp, 2, &[], &[], None);
            relay_nc_uplink(&mut set, &lk, mp, 2);
        }
        Protocol::Pmabc => {
            set.push(&[D1], &[(1, cap(a0))], &[]);
            set.push(&[D2], &[(2, cap(a0))], &[]);
            set.push(&[U1], &[(1, cap(a1))], &[]);
            set.push(&[U2], &[(2, cap(a2))], &[]);
            set.push(&[D1, U1], &[(1, cap(a0 + a1))], &[]);
            set.push(&[D2, U2], &[(2, cap(a0 + a2))], &[]);
            marton3(&mut set, &lk, slot(params, r, 3)?, 3);
        }
        Protocol::PmabcNr => {
            let l1 = slot(params, 0, 1)?;
            let l2 = slot(params, 0, 2)?;
            let mr = slot(params, r, 3)?;
            let p0 = lk.p(0);
            let cc = |mp: &MartonParams, i: usize, j: usize| c_c(p0, lk.h(0, r), mp.row(i), mp.row(j), mp.beta());
            let cm = |t: usize, mp: &MartonParams, known: usize| {
                c_m(lk.p(t), p0, lk.h(t, r), lk.h(0, r), mp.row(known), mp.beta())
            };
            set.push(&[U1], &[(1, cap(a1))], &[]);
            set.push(&[U2], &[(2, cap(a2))], &[]);
            for (d, own, other) in [(D1, 0, 1), (D2, 1, 0)] {
                let (x1, x2) = (cc(l1, own, other), cc(l2, own, other));
                let (m1, m2) = (cm(1, l1, other), cm(2, l2, other));
                set.push(&[d], &[(1, x1), (2, x2)], &[]);
                set.push(&[d, U1], &[(1, m1), (1, x1), (2, x2)], &[]);
                set.push(&[d, U2], &[(1, x1), (2, m2), (2, x2)], &[]);
                set.push(&[d, U1, U2], &[(1, m1), (1, x1), (2, m2), (2, x2)], &[]);
            }
            set.push(&[D1, D2], &[(1, cap(a0)), (2, cap(a0))], &[]);
            set.push(&[D1, D2, U1], &[(1, cap(a0 + a1)), (2, cap(a0))], &[]);
            set.push(&[D1, D2, U2], &[(1, cap(a0)), (2, cap(a0 + a2))], &[]);
            set.push(&[D1, D2, U1, U2], &[(1, cap(a0 + a1)), (2, cap(a0 + a2))], &[]);
            // Terminal 1 overhears node 0 in phase 2, terminal 2 in phase 1.
            let o1 = c_bi(p0, lk.p(2), lk.h(0, 1), lk.h(2, 1), l2.row(0), l2.beta());
            let o2 = c_bi(p0, lk.p(1), lk.h(0, 2), lk.h(1, 2), l1.row(1), l1.beta());
            let bins = [(1, c_be(l1.row(0), l1.row(1), l1.beta())), (2, c_be(l2.row(0), l2.row(1), l2.beta()))];
            relay_nc_downlink(&mut set, &lk, mr, 3, &[(2, o1)], &[(1, o2)], Some(&bins));
            relay_nc_uplink(&mut set, &lk, mr, 3);
        }
        Protocol::PmabcNrc => {
            let l1 = slot(params, 0, 1)?;
            let l2 = slot(params, 0, 2)?;
            let n1 = slot(params, 1, 1)?;
            let mr = slot(params, r, 3)?;
            let coop = params.coop().ok_or(ConstraintError::MissingCoop)?;
            let (p0, p1, p2) = (lk.p(0), lk.p(1), lk.p(2));
            let one = [1.0];
            for (d, own, other) in [(D1, 0, 1), (D2, 1, 0)] {
                let x1 = c_ci(
                    p0, p1, lk.h(0, r), lk.h(1, r), l1.row(own), l1.row(other), n1.row(0), l1.beta(), n1.beta(),
                );
                let x2 = c_ci(p0, p2, lk.h(0, r), lk.h(2, r), l2.row(own), l2.row(other), &one, l2.beta(), &one);
                set.push(&[d], &[(1, x1), (2, x2)], &[]);
            }
            set.push(
                &[D1, D2],
                &[(1, c_m(p0, p1, lk.h(0, r), lk.h(1, r), n1.row(0), n1.beta())), (2, cap(a0))],
                &[],
            );
            let up1 = c_bi(p1, p0, lk.h(1, r), lk.h(0, r), n1.row(0), n1.beta());
            set.push(&[U1], &[(1, up1)], &[]);
            set.push(&[U2], &[(2, c_bi(p2, p0, lk.h(2, r), lk.h(0, r), &one, &one))], &[]);

            let o1 = c_bi(p0, p2, lk.h(0, 1), lk.h(2, 1), l2.row(0), l2.beta());
            let b1 = c_b(pr, lk.h(r, 1), mr.row(0), mr.beta());
            let o2 = c_bm(p0, p1, lk.h(0, 2), lk.h(1, 2), l1.row(1), n1.row(1), l1.beta(), n1.beta());
            let r_bc = c_bc(pr, lk.h(r, 2), lk.h(r, 1), mr.row(1), mr.beta(), coop.p_yhat(), coop.sigma());
            let b2 = kernel_err(&mut set, r_bc);
            let e1 = c_be(l1.row(0), l1.row(1), l1.beta());
            let e2 = c_be(l2.row(0), l2.row(1), l2.beta());
            let er = c_be(mr.row(0), mr.row(1), mr.beta());
            set.push(&[D1], &[(2, o1), (3, b1)], &[]);
            set.push(&[D2], &[(1, o2), (3, b2)], &[]);
            set.push(&[D1, D2], &[(1, o2), (2, o1), (3, b1), (3, b2)], &[(1, e1), (2, e2), (3, er)]);
            relay_nc_uplink(&mut set, &lk, mr, 3);

            let helper = c_bi(p1, p0, lk.h(1, 2), lk.h(0, 2), n1.row(1), n1.beta());
            let comp_r = c_compress(pr, lk.h(r, 1), lk.h(r, 2), coop.p_yhat(), coop.sigma());
            let comp = kernel_err(&mut set, comp_r);
            let en = c_be(n1.row(0), n1.row(1), n1.beta());
            set.push(&[U1], &[(1, up1), (1, helper)], &[(1, en), (3, comp)]);
            set.push_side(&[(3, comp)], &[(1, helper)]);
        }
        Protocol::Ftdbc => {
            set.push(&[D1, D2], &[(1, cap(a0))], &[]);
            set.push(&[U1], &[(2, cap(a1))], &[]);
            set.push(&[U2], &[(3, cap(a2))], &[]);
            marton3(&mut set, &lk, slot(params, r, 4)?, 4);
        }
        Protocol::FtdbcNr => {
            let l0 = slot(params, 0, 1)?;
            let mr = slot(params, r, 4)?;
            node0_to_relay(&mut set, &lk, l0, 1);
            set.push(&[U1], &[(2, cap(a1))], &[]);
            set.push(&[U2], &[(3, cap(a2))], &[]);
            overheard_downlink(&mut set, &lk, l0, mr, 4, None);
            let (d10, d20) = (cap(lk.s(1, 0)), cap(lk.s(2, 0)));
            let beta = mr.beta();
            set.push(&[U1], &[(2, d10), (4, c_c(pr, lk.h(r, 0), mr.row(0), mr.row(1), beta))], &[]);
            set.push(&[U2], &[(3, d20), (4, c_c(pr, lk.h(r, 0), mr.row(1), mr.row(0), beta))], &[]);
            set.push(&[U1, U2], &[(2, d10), (3, d20), (4, cap(lk.s(r, 0)))], &[]);
        }
        Protocol::FtdbcNrc => {
            let l0 = slot(params, 0, 1)?;
            let n1 = slot(params, 1, 2)?;
            let mr = slot(params, r, 4)?;
            let coop = params.coop().ok_or(ConstraintError::MissingCoop)?;
            let p1 = lk.p(1);
            node0_to_relay(&mut set, &lk, l0, 1);
            let up1 = c_b(p1, lk.h(1, r), n1.row(0), n1.beta());
            set.push(&[U1], &[(2, up1)], &[]);
            set.push(&[U2], &[(3, cap(a2))], &[]);
            let r_bc = c_bc(pr, lk.h(r, 2), lk.h(r, 1), mr.row(1), mr.beta(), coop.p_yhat(), coop.sigma());
            let b2 = kernel_err(&mut set, r_bc);
            overheard_downlink(&mut set, &lk, l0, mr, 4, Some(b2));
            let d10 = c_b(p1, lk.h(1, 0), n1.row(0), n1.beta());
            let d20 = cap(lk.s(2, 0));
            let beta = mr.beta();
            set.push(&[U1], &[(2, d10), (4, c_c(pr, lk.h(r, 0), mr.row(0), mr.row(1), beta))], &[]);
            set.push(&[U2], &[(3, d20), (4, c_c(pr, lk.h(r, 0), mr.row(1), mr.row(0), beta))], &[]);
            set.push(&[U1, U2], &[(2, d10), (3, d20), (4, cap(lk.s(r, 0)))], &[]);

            let helper = c_b(p1, lk.h(1, 2), n1.row(1), n1.beta());
            let comp_r = c_compress(pr, lk.h(r, 1), lk.h(r, 2), coop.p_yhat(), coop.sigma());
            let comp = kernel_err(&mut set, comp_r);
            let en = c_be(n1.row(0), n1.row(1), n1.beta());
            set.push(&[U1], &[(2, up1), (2, helper)], &[(2, en), (4, comp)]);
            set.push_side(&[(4, comp)], &[(2, helper)]);
        }
        Protocol::Ptdbc => {
            set.push(&[D1, D2], &[(1, cap(a0))], &[]);
            set.push(&[U1], &[(2, cap(a1))], &[]);
            set.push(&[U2], &[(2, cap(a2))], &[]);
            set.push(&[U1, U2], &[(2, cap(a1 + a2))], &[]);
            marton3(&mut set, &lk, slot(params, r, 3)?, 3);
        }
        Protocol::PtdbcNr => {
            let l0 = slot(params, 0, 1)?;
            let mr = slot(params, r, 3)?;
            node0_to_relay(&mut set, &lk, l0, 1);
            set.push(&[U1], &[(2, cap(a1))], &[]);
            set.push(&[U2], &[(2, cap(a2))], &[]);
            set.push(&[U1, U2], &[(2, cap(a1 + a2))], &[]);
            overheard_downlink(&mut set, &lk, l0, mr, 3, None);
            let (d10, d20) = (cap(lk.s(1, 0)), cap(lk.s(2, 0)));
            let beta = mr.beta();
            set.push(&[U1], &[(2, d10), (3, c_c(pr, lk.h(r, 0), mr.row(0), mr.row(1), beta))], &[]);
            set.push(&[U2], &[(2, d20), (3, c_c(pr, lk.h(r, 0), mr.row(1), mr.row(0), beta))], &[]);
            set.push(&[U1, U2], &[(2, cap(lk.s(1, 0) + lk.s(2, 0))), (3, cap(lk.s(r, 0)))], &[]);
        }
    }
    Ok(set)
}

/// Relay downlink in phase `l` where the terminals decode their own relay
/// stream, optionally helped by terms overheard in earlier phases
/// (`extra1` for terminal 1, `extra2` for terminal 2) and penalised by the
/// earlier binning costs `bins`.
fn relay_nc_downlink(
    set: &mut LinearSet,
    lk: &Links,
    mp: &MartonParams,
    l: usize,
    extra1: &[(usize, f64)],
    extra2: &[(usize, f64)],
    bins: Option<&[(usize, f64)]>,
) {
    let (r, pr) = (lk.r, lk.p(lk.r));
    let beta = mp.beta();
    let b1 = c_b(pr, lk.h(r, 1), mp.row(0), beta);
    let b2 = c_b(pr, lk.h(r, 2), mp.row(1), beta);
    let er = c_be(mp.row(0), mp.row(1), beta);
    let mut t1 = extra1.to_vec();
    t1.push((l, b1));
    let mut t2 = extra2.to_vec();
    t2.push((l, b2));
    set.push(&[D1], &t1, &[]);
    set.push(&[D2], &t2, &[]);
    let both: Vec<_> = t1.iter().chain(&t2).copied().collect();
    let mut minus = bins.map(<[_]>::to_vec).unwrap_or_default();
    minus.push((l, er));
    set.push(&[D1, D2], &both, &minus);
}

/// Terminal downlink combining node 0's direct transmission in phase 1 with
/// the relay broadcast in phase `l`. `bc2` replaces terminal 2's relay term
/// when it is helped by a compressed observation.
fn overheard_downlink(
    set: &mut LinearSet,
    lk: &Links,
    l0: &MartonParams,
    mr: &MartonParams,
    l: usize,
    bc2: Option<f64>,
) {
    let (r, pr, p0) = (lk.r, lk.p(lk.r), lk.p(0));
    let d1 = c_b(p0, lk.h(0, 1), l0.row(0), l0.beta());
    let d2 = c_b(p0, lk.h(0, 2), l0.row(1), l0.beta());
    let b1 = c_b(pr, lk.h(r, 1), mr.row(0), mr.beta());
    let b2 = bc2.unwrap_or_else(|| c_b(pr, lk.h(r, 2), mr.row(1), mr.beta()));
    let e0 = c_be(l0.row(0), l0.row(1), l0.beta());
    let er = c_be(mr.row(0), mr.row(1), mr.beta());
    set.push(&[D1], &[(1, d1), (l, b1)], &[]);
    set.push(&[D2], &[(1, d2), (l, b2)], &[]);
    set.push(&[D1, D2], &[(1, d1), (1, d2), (l, b1), (l, b2)], &[(1, e0), (l, er)]);
}

/// Schedule-linear form of a cut-set outer bound.
pub fn outer_linear(
    family: OuterFamily,
    channel: &ChannelGains,
    powers: &PowerAllocation,
) -> Result<LinearSet, ConstraintError> {
    let lk = Links::new(channel, powers)?;
    let r = lk.r;
    let s = |i, j| lk.s(i, j);
    let mut set = LinearSet::new(4, family.phase_count(2));
    match family {
        OuterFamily::Fmabc => {
            set.push(&[D1, D2], &[(1, cap(s(0, r)))], &[]);
            set.push(&[U1, U2], &[(2, cap(s(r, 0)))], &[]);
            set.push(&[U1], &[(1, cap(s(1, r)))], &[]);
            set.push(&[U2], &[(1, cap(s(2, r)))], &[]);
            set.push(&[U1, U2], &[(1, cap(s(1, r) + s(2, r)))], &[]);
            set.push(&[D1], &[(2, cap(s(r, 1)))], &[]);
            set.push(&[D2], &[(2, cap(s(r, 2)))], &[]);
            set.push(&[D1, D2], &[(2, cap(s(r, 1) + s(r, 2)))], &[]);
        }
        OuterFamily::Pmabc => {
            set.push(&[D1, D2], &[(1, cap(s(0, r))), (2, cap(s(0, r)))], &[]);
            set.push(&[U1, U2], &[(3, cap(s(r, 0)))], &[]);
            set.push(&[U1], &[(1, cap(s(1, r) + s(1, 2)))], &[]);
            set.push(&[U2], &[(2, cap(s(2, r) + s(2, 1)))], &[]);
            set.push(&[U1, U2], &[(1, cap(s(1, r))), (2, cap(s(2, r)))], &[]);
            set.push(&[D1], &[(2, cap(s(0, 1) + s(2, 1))), (3, cap(s(r, 1)))], &[]);
            set.push(&[D2], &[(1, cap(s(0, 2) + s(1, 2))), (3, cap(s(r, 2)))], &[]);
            set.push(&[D1, D2], &[(1, cap(s(0, 2))), (2, cap(s(0, 1))), (3, cap(s(r, 1) + s(r, 2)))], &[]);
        }
        OuterFamily::Ftdbc => {
            set.push(&[D1], &[(1, cap(s(0, r) + s(0, 1))), (3, cap(s(2, r) + s(2, 1)))], &[]);
            set.push(&[D1], &[(1, cap(s(0, 1))), (3, cap(s(2, 1))), (4, cap(s(r, 1)))], &[]);
            set.push(&[D2], &[(1, cap(s(0, r) + s(0, 2))), (2, cap(s(1, r) + s(1, 2)))], &[]);
            set.push(&[D2], &[(1, cap(s(0, 2))), (2, cap(s(1, 2))), (4, cap(s(r, 2)))], &[]);
            set.push(&[D1, D2], &[(1, cap(s(0, r) + s(0, 1) + s(0, 2)))], &[]);
            set.push(&[D1, D2], &[(1, cap(s(0, 1) + s(0, 2))), (4, cap(s(r, 1) + s(r, 2)))], &[]);
            set.push(&[U1], &[(2, cap(s(1, 0) + s(1, 2))), (4, cap(s(r, 0) + s(r, 2)))], &[]);
            set.push(&[U1], &[(2, cap(s(1, 0) + s(1, 2) + s(1, r)))], &[]);
            set.push(&[U2], &[(3, cap(s(2, 0) + s(2, 1))), (4, cap(s(r, 0) + s(r, 1)))], &[]);
            set.push(&[U2], &[(3, cap(s(2, 0) + s(2, 1) + s(2, r)))], &[]);
            set.push(&[U1, U2], &[(2, cap(s(1, 0))), (3, cap(s(2, 0))), (4, cap(s(r, 0)))], &[]);
            set.push(&[U1, U2], &[(2, cap(s(1, 0) + s(1, r))), (3, cap(s(2, 0) + s(2, r)))], &[]);
        }
        OuterFamily::Ptdbc => {
            set.push(&[D1], &[(1, cap(s(0, r) + s(0, 1))), (2, cap(s(2, r)))], &[]);
            set.push(&[D1], &[(1, cap(s(0, 1))), (3, cap(s(r, 1)))], &[]);
            set.push(&[D2], &[(1, cap(s(0, r) + s(0, 2))), (2, cap(s(1, r)))], &[]);
            set.push(&[D2], &[(1, cap(s(0, 2))), (3, cap(s(r, 2)))], &[]);
            set.push(&[D1, D2], &[(1, cap(s(0, r) + s(0, 1) + s(0, 2)))], &[]);
            set.push(&[D1, D2], &[(1, cap(s(0, 1) + s(0, 2))), (3, cap(s(r, 1) + s(r, 2)))], &[]);
            set.push(&[U1], &[(2, cap(s(1, 0))), (3, cap(s(r, 0) + s(r, 2)))], &[]);
            set.push(&[U1], &[(2, cap(s(1, 0) + s(1, r)))], &[]);
            set.push(&[U2], &[(2, cap(s(2, 0))), (3, cap(s(r, 0) + s(r, 1)))], &[]);
            set.push(&[U2], &[(2, cap(s(2, 0) + s(2, r)))], &[]);
            set.push(&[U1, U2], &[(2, cap(s(1, 0) + s(2, 0))), (3, cap(s(r, 0)))], &[]);
            set.push(&[U1, U2], &[(2, cap(s(1, 0) + s(1, r) + s(2, 0) + s(2, r)))], &[]);
        }
    }
    Ok(set)
}

/// Outer-bound constraint set at a concrete schedule.
pub fn build_outer(
    family: OuterFamily,
    channel: &ChannelGains,
    powers: &PowerAllocation,
    schedule: &PhaseSchedule,
) -> Result<ConstraintSet, ConstraintError> {
    outer_linear(family, channel, powers)?.at(schedule)
}

/// Whether `rates` satisfies every constraint of `cs` within `tol`.
pub fn eval_feasible(cs: &ConstraintSet, rates: &RatePoint, tol: f64) -> Result<bool, ConstraintError> {
    let r = rates.stacked();
    if r.len() != cs.dim {
        return Err(ConstraintError::Dimension { expected: cs.dim, got: r.len() });
    }
    Ok(cs.feasible
        && cs.constraints.iter().all(|c| {
            let lhs: f64 = c.coeff.iter().zip(&r).map(|(a, x)| a * x).sum();
            lhs <= c.rhs + tol
        }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::CoopParams;
    use std::collections::BTreeMap;

    fn h1() -> ChannelGains {
        ChannelGains::new(
            2,
            vec![
                vec![0.0, 0.3, 0.05, 1.0],
                vec![0.3, 0.0, 1.5, 1.0],
                vec![0.05, 1.5, 0.0, 0.2],
                vec![1.0, 1.0, 0.2, 0.0],
            ],
        )
        .unwrap()
    }

    fn unit_power() -> PowerAllocation {
        PowerAllocation::uniform(2, 1.0).unwrap()
    }

    fn count(p: Protocol) -> usize {
        let params = ProtocolParams::default_for(p, 2);
        build_achievable(&params, &h1(), &unit_power()).unwrap().len()
    }

    #[test]
    fn achievable_counts() {
        assert_eq!(count(Protocol::Simple), 6);
        assert_eq!(count(Protocol::Fmabc), 14);
        assert_eq!(count(Protocol::FmabcN), 13);
        assert_eq!(count(Protocol::Pmabc), 13);
        assert_eq!(count(Protocol::PmabcNr), 20);
        assert_eq!(count(Protocol::PmabcNrc), 12);
        assert_eq!(count(Protocol::Ftdbc), 10);
        assert_eq!(count(Protocol::FtdbcNr), 11);
        assert_eq!(count(Protocol::FtdbcNrc), 12);
        assert_eq!(count(Protocol::Ptdbc), 11);
        assert_eq!(count(Protocol::PtdbcNr), 12);
    }

    #[test]
    fn outer_counts() {
        let expect = [(OuterFamily::Fmabc, 8), (OuterFamily::Pmabc, 8), (OuterFamily::Ftdbc, 12), (OuterFamily::Ptdbc, 12)];
        for (f, n) in expect {
            let cs = build_outer(f, &h1(), &unit_power(), &PhaseSchedule::uniform(f.phase_count(2))).unwrap();
            assert_eq!(cs.len(), n, "{f}");
        }
    }

    #[test]
    fn outer_all_zero_gains() {
        let ch = ChannelGains::uniform(2, 0.0).unwrap();
        for f in OuterFamily::ALL {
            let cs = build_outer(f, &ch, &unit_power(), &PhaseSchedule::uniform(f.phase_count(2))).unwrap();
            assert!(cs.constraints.iter().all(|c| c.rhs == 0.0));
        }
    }

    #[test]
    fn simple_rows() {
        let ch = ChannelGains::uniform(2, 1.0).unwrap();
        let params = ProtocolParams::default_for(Protocol::Simple, 2);
        let cs = build_achievable(&params, &ch, &unit_power()).unwrap();
        assert_eq!(cs.constraints[0].coeff, vec![1.0, 1.0, 0.0, 0.0]);
        for c in &cs.constraints {
            assert!((c.rhs - 1.0 / 6.0).abs() < 1e-15);
        }
    }

    #[test]
    fn fmabc_first_broadcast_row_selects_uplink_pair() {
        let params = ProtocolParams::default_for(Protocol::Fmabc, 2);
        let cs = build_achievable(&params, &h1(), &unit_power()).unwrap();
        assert_eq!(cs.constraints[7].coeff, vec![0.0, 0.0, 1.0, 1.0]);
        assert_eq!(cs.constraints[0].coeff, vec![1.0, 1.0, 0.0, 0.0]);
    }

    #[test]
    fn wrong_m_rejected() {
        let ch = ChannelGains::uniform(3, 1.0).unwrap();
        let pw = PowerAllocation::uniform(3, 1.0).unwrap();
        let params = ProtocolParams::default_for(Protocol::Simple, 2);
        assert_eq!(build_achievable(&params, &ch, &pw), Err(ConstraintError::UnsupportedM(3)));
    }

    #[test]
    fn coop_feasibility() {
        let ch = h1();
        let pw = unit_power();
        let params = ProtocolParams::default_for(Protocol::PmabcNrc, 2);
        assert!(build_coop_feasibility(&params, &ch, &pw).unwrap());
        let zero_bc = params.with_schedule(PhaseSchedule::new(vec![0.5, 0.5, 0.0]).unwrap()).unwrap();
        assert!(build_coop_feasibility(&zero_bc, &ch, &pw).unwrap());
        let p_y = ch.gain(3, 1).powi(2) * pw.p(3) + 1.0;
        let strong = ProtocolParams::new(
            Protocol::PmabcNrc,
            2,
            PhaseSchedule::new(vec![0.05, 0.05, 0.9]).unwrap(),
            params.marton().clone(),
            Some(CoopParams::new(1.0, 0.999 * p_y.sqrt(), p_y).unwrap()),
        )
        .unwrap();
        assert!(!build_coop_feasibility(&strong, &ch, &pw).unwrap());
        assert!(!build_achievable(&strong, &ch, &pw).unwrap().feasible);
        let plain = ProtocolParams::default_for(Protocol::FmabcN, 2);
        assert!(build_coop_feasibility(&plain, &ch, &pw).is_err());
    }

    #[test]
    fn relabel_maps_rates_back() {
        let ch = h1();
        let swapped = ch.swap_nodes(1, 2);
        let pw = unit_power();
        let params = ProtocolParams::default_for(Protocol::FtdbcNrc, 2);
        let a = build_achievable(&params, &ch, &pw).unwrap();
        let b = build_achievable(&params, &swapped, &pw).unwrap();
        assert_eq!(a.len(), b.len());
        for (x, y) in a.constraints.iter().zip(&b.constraints) {
            assert_eq!(x.rhs, y.rhs);
            assert_eq!(x.coeff, vec![y.coeff[1], y.coeff[0], y.coeff[3], y.coeff[2]]);
        }
    }

    #[test]
    fn subtracting_sentinel_marks_infeasible() {
        let mut marton = BTreeMap::new();
        marton.insert((3, 2), MartonParams::new(vec![vec![1.0, 0.0], vec![1.0, 0.0]], vec![0.5, 0.5]).unwrap());
        let params = ProtocolParams::new(Protocol::FmabcN, 2, PhaseSchedule::uniform(2), marton, None).unwrap();
        let cs = build_achievable(&params, &h1(), &unit_power()).unwrap();
        assert!(!cs.feasible);
    }

    #[test]
    fn eval_feasible_examples() {
        let params = ProtocolParams::default_for(Protocol::FmabcN, 2);
        let cs = build_achievable(&params, &h1(), &unit_power()).unwrap();
        assert!(eval_feasible(&cs, &RatePoint::zero(2), 0.0).unwrap());
        let big = RatePoint::new(vec![10.0, 0.0], vec![0.0, 0.0]).unwrap();
        assert!(!eval_feasible(&cs, &big, 1e-9).unwrap());
        assert!(eval_feasible(&cs, &RatePoint::zero(3), 0.0).is_err());
    }
}
