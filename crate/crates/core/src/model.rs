//! Network description and the optimization variables shared by all protocols.
//!
//! Nodes are indexed `0` (the base station), `1..=m` (terminals) and
//! `m + 1` (the relay). Phases are numbered from 1, matching the usual
//! protocol descriptions; `PhaseSchedule::delta()[l - 1]` is the duration of
//! phase `l`.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use thiserror::Error;

/// Upper bound on the magnitude of any Marton mixing coefficient.
pub const LAMBDA_MAX: f64 = 10.0;
/// Smallest admissible power fraction of a Marton stream.
pub const BETA_FLOOR: f64 = 1e-6;

const SUM_TOL: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("terminal count must be at least 1")]
    NoTerminals,
    #[error("gain matrix must be {expected}x{expected}")]
    GainShape { expected: usize },
    #[error("gain[{i}][{j}] = {value} is not a finite nonnegative number")]
    BadGain { i: usize, j: usize, value: f64 },
    #[error("gain[{i}][{i}] must be zero")]
    NonzeroDiagonal { i: usize },
    #[error("power vector must have {expected} entries, got {got}")]
    PowerLength { expected: usize, got: usize },
    #[error("power P[{i}] = {value} is not a finite nonnegative number")]
    BadPower { i: usize, value: f64 },
    #[error("schedule entry {value} is negative or not finite")]
    BadDelta { value: f64 },
    #[error("schedule sums to {sum}, expected 1")]
    DeltaSum { sum: f64 },
    #[error("schedule has {got} phases, protocol needs {expected}")]
    PhaseCount { expected: usize, got: usize },
    #[error("Marton matrix must be {k}x{k}")]
    LambdaShape { k: usize },
    #[error("Marton coefficient {value} outside [-{LAMBDA_MAX}, {LAMBDA_MAX}]")]
    LambdaRange { value: f64 },
    #[error("beta entry {value} below floor {BETA_FLOOR}")]
    BetaFloor { value: f64 },
    #[error("beta sums to {sum}, expected 1")]
    BetaSum { sum: f64 },
    #[error("compression power {p_yhat} must be positive and finite")]
    BadCompressionPower { p_yhat: f64 },
    #[error("sigma^2 = {sigma_sq} exceeds p_yhat * p_y = {bound}")]
    CoopNotPsd { sigma_sq: f64, bound: f64 },
    #[error("protocol {protocol} needs Marton parameters at node {node}, phase {phase}")]
    MissingMarton { protocol: Protocol, node: usize, phase: usize },
    #[error("protocol {protocol} does not use Marton parameters at node {node}, phase {phase}")]
    ExtraMarton { protocol: Protocol, node: usize, phase: usize },
    #[error("Marton parameters at node {node}, phase {phase} must have {expected} streams, got {got}")]
    MartonSize { node: usize, phase: usize, expected: usize, got: usize },
    #[error("protocol {0} requires cooperation parameters")]
    MissingCoop(Protocol),
    #[error("protocol {0} does not take cooperation parameters")]
    ExtraCoop(Protocol),
    #[error("rate vector entry {value} is negative or not finite")]
    BadRate { value: f64 },
    #[error("unknown protocol identifier `{0}`")]
    UnknownProtocol(String),
    #[error("unknown outer-bound family `{0}`")]
    UnknownFamily(String),
}

/// Achievable-scheme identifiers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Protocol {
    Simple,
    Fmabc,
    FmabcN,
    Pmabc,
    PmabcNr,
    PmabcNrc,
    Ftdbc,
    FtdbcNr,
    FtdbcNrc,
    Ptdbc,
    PtdbcNr,
}

impl Protocol {
    pub const ALL: [Protocol; 11] = [
        Protocol::Simple,
        Protocol::Fmabc,
        Protocol::FmabcN,
        Protocol::Pmabc,
        Protocol::PmabcNr,
        Protocol::PmabcNrc,
        Protocol::Ftdbc,
        Protocol::FtdbcNr,
        Protocol::FtdbcNrc,
        Protocol::Ptdbc,
        Protocol::PtdbcNr,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Protocol::Simple => "Simple",
            Protocol::Fmabc => "FMABC",
            Protocol::FmabcN => "FMABC_N",
            Protocol::Pmabc => "PMABC",
            Protocol::PmabcNr => "PMABC_NR",
            Protocol::PmabcNrc => "PMABC_NRC",
            Protocol::Ftdbc => "FTDBC",
            Protocol::FtdbcNr => "FTDBC_NR",
            Protocol::FtdbcNrc => "FTDBC_NRC",
            Protocol::Ptdbc => "PTDBC",
            Protocol::PtdbcNr => "PTDBC_NR",
        }
    }

    /// Outer-bound family sharing this protocol's phase structure.
    pub fn family(self) -> Option<OuterFamily> {
        match self {
            Protocol::Simple => None,
            Protocol::Fmabc | Protocol::FmabcN => Some(OuterFamily::Fmabc),
            Protocol::Pmabc | Protocol::PmabcNr | Protocol::PmabcNrc => Some(OuterFamily::Pmabc),
            Protocol::Ftdbc | Protocol::FtdbcNr | Protocol::FtdbcNrc => Some(OuterFamily::Ftdbc),
            Protocol::Ptdbc | Protocol::PtdbcNr => Some(OuterFamily::Ptdbc),
        }
    }

    pub fn is_coop(self) -> bool {
        matches!(self, Protocol::PmabcNrc | Protocol::FtdbcNrc)
    }

    /// `(node, phase, streams)` for every Marton parameter block the
    /// protocol's Gaussian listing references, with the relay at `m + 1`.
    pub fn marton_slots(self, m: usize) -> Vec<(usize, usize, usize)> {
        let r = m + 1;
        match self {
            Protocol::Simple => vec![],
            Protocol::Fmabc => vec![(r, 2, m + 1)],
            Protocol::FmabcN => vec![(r, 2, m)],
            Protocol::Pmabc => vec![(r, m + 1, m + 1)],
            Protocol::PmabcNr => vec![(0, 1, m), (0, 2, m), (r, m + 1, m)],
            Protocol::PmabcNrc => vec![(0, 1, m), (0, 2, m), (1, 1, m), (r, m + 1, m)],
            Protocol::Ftdbc => vec![(r, m + 2, m + 1)],
            Protocol::FtdbcNr => vec![(0, 1, m), (r, m + 2, m)],
            Protocol::FtdbcNrc => vec![(0, 1, m), (1, 2, m), (r, m + 2, m)],
            Protocol::Ptdbc => vec![(r, 3, m + 1)],
            Protocol::PtdbcNr => vec![(0, 1, m), (r, 3, m)],
        }
    }
}

impl fmt::Display for Protocol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Protocol {
    type Err = ModelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let key = s.trim().to_ascii_uppercase().replace('-', "_");
        Protocol::ALL
            .iter()
            .copied()
            .find(|p| p.name().to_ascii_uppercase() == key || (key == "SIMPLEST" && *p == Protocol::Simple))
            .ok_or_else(|| ModelError::UnknownProtocol(s.to_string()))
    }
}

/// Cut-set outer-bound families, one per phase structure.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum OuterFamily {
    Fmabc,
    Pmabc,
    Ftdbc,
    Ptdbc,
}

impl OuterFamily {
    pub const ALL: [OuterFamily; 4] =
        [OuterFamily::Fmabc, OuterFamily::Pmabc, OuterFamily::Ftdbc, OuterFamily::Ptdbc];

    pub fn name(self) -> &'static str {
        match self {
            OuterFamily::Fmabc => "FMABC_OUT",
            OuterFamily::Pmabc => "PMABC_OUT",
            OuterFamily::Ftdbc => "FTDBC_OUT",
            OuterFamily::Ptdbc => "PTDBC_OUT",
        }
    }

    pub fn phase_count(self, m: usize) -> usize {
        match self {
            OuterFamily::Fmabc => 2,
            OuterFamily::Pmabc => m + 1,
            OuterFamily::Ftdbc => m + 2,
            OuterFamily::Ptdbc => 3,
        }
    }
}

impl fmt::Display for OuterFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for OuterFamily {
    type Err = ModelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let key = s.trim().to_ascii_uppercase().replace('-', "_");
        OuterFamily::ALL
            .iter()
            .copied()
            .find(|f| f.name() == key || f.name().trim_end_matches("_OUT") == key)
            .ok_or_else(|| ModelError::UnknownFamily(s.to_string()))
    }
}

/// Number of temporal phases of `protocol` with `m` terminal pairs.
pub fn phase_count(protocol: Protocol, m: usize) -> usize {
    match protocol {
        Protocol::Simple => 2 * m + 2,
        Protocol::Fmabc | Protocol::FmabcN => 2,
        Protocol::Pmabc | Protocol::PmabcNr | Protocol::PmabcNrc => m + 1,
        Protocol::Ftdbc | Protocol::FtdbcNr | Protocol::FtdbcNrc => m + 2,
        Protocol::Ptdbc | Protocol::PtdbcNr => 3,
    }
}

/// Channel gain magnitudes `|h_{i,j}|` from transmitter `i` to receiver `j`.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelGains {
    m: usize,
    gain: Vec<Vec<f64>>,
}

impl ChannelGains {
    pub fn new(m: usize, gain: Vec<Vec<f64>>) -> Result<Self, ModelError> {
        if m == 0 {
            return Err(ModelError::NoTerminals);
        }
        let n = m + 2;
        if gain.len() != n || gain.iter().any(|row| row.len() != n) {
            return Err(ModelError::GainShape { expected: n });
        }
        for (i, row) in gain.iter().enumerate() {
            for (j, &value) in row.iter().enumerate() {
                if !value.is_finite() || value < 0.0 {
                    return Err(ModelError::BadGain { i, j, value });
                }
                if i == j && value != 0.0 {
                    return Err(ModelError::NonzeroDiagonal { i });
                }
            }
        }
        Ok(Self { m, gain })
    }

    /// Every off-diagonal link set to `g`.
    pub fn uniform(m: usize, g: f64) -> Result<Self, ModelError> {
        let n = m + 2;
        let gain = (0..n)
            .map(|i| (0..n).map(|j| if i == j { 0.0 } else { g }).collect())
            .collect();
        Self::new(m, gain)
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn relay(&self) -> usize {
        self.m + 1
    }

    pub fn gain(&self, i: usize, j: usize) -> f64 {
        self.gain[i][j]
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.gain
    }

    /// Copy with terminals `a` and `b` exchanged.
    pub fn swap_nodes(&self, a: usize, b: usize) -> Self {
        let n = self.m + 2;
        let idx = |i: usize| if i == a { b } else if i == b { a } else { i };
        let gain = (0..n)
            .map(|i| (0..n).map(|j| self.gain[idx(i)][idx(j)]).collect())
            .collect();
        Self { m: self.m, gain }
    }
}

/// Transmit powers per node, linear scale, unit noise.
#[derive(Debug, Clone, PartialEq)]
pub struct PowerAllocation {
    p: Vec<f64>,
}

impl PowerAllocation {
    pub fn new(m: usize, p: Vec<f64>) -> Result<Self, ModelError> {
        if p.len() != m + 2 {
            return Err(ModelError::PowerLength { expected: m + 2, got: p.len() });
        }
        for (i, &value) in p.iter().enumerate() {
            if !value.is_finite() || value < 0.0 {
                return Err(ModelError::BadPower { i, value });
            }
        }
        Ok(Self { p })
    }

    pub fn uniform(m: usize, p: f64) -> Result<Self, ModelError> {
        Self::new(m, vec![p; m + 2])
    }

    pub fn from_db(m: usize, db: &[f64]) -> Result<Self, ModelError> {
        Self::new(m, db.iter().map(|&d| db_to_linear(d)).collect())
    }

    pub fn p(&self, i: usize) -> f64 {
        self.p[i]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.p
    }

    pub fn swap_nodes(&self, a: usize, b: usize) -> Self {
        let mut p = self.p.clone();
        p.swap(a, b);
        Self { p }
    }
}

pub fn db_to_linear(db: f64) -> f64 {
    if db == f64::NEG_INFINITY {
        0.0
    } else {
        10f64.powf(db / 10.0)
    }
}

/// Phase durations, nonnegative and summing to one.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseSchedule {
    delta: Vec<f64>,
}

impl PhaseSchedule {
    pub fn new(delta: Vec<f64>) -> Result<Self, ModelError> {
        for &value in &delta {
            if !value.is_finite() || value < 0.0 {
                return Err(ModelError::BadDelta { value });
            }
        }
        let sum: f64 = delta.iter().sum();
        if (sum - 1.0).abs() > SUM_TOL {
            return Err(ModelError::DeltaSum { sum });
        }
        Ok(Self { delta })
    }

    pub fn uniform(n: usize) -> Self {
        Self { delta: vec![1.0 / n as f64; n] }
    }

    pub fn delta(&self) -> &[f64] {
        &self.delta
    }

    pub fn len(&self) -> usize {
        self.delta.len()
    }

    pub fn is_empty(&self) -> bool {
        self.delta.is_empty()
    }
}

/// Superposition parameters `U = Λ V`, `V_i ~ CN(0, β_i P)` of one node in
/// one phase.
#[derive(Debug, Clone, PartialEq)]
pub struct MartonParams {
    lambda: Vec<Vec<f64>>,
    beta: Vec<f64>,
}

impl MartonParams {
    pub fn new(lambda: Vec<Vec<f64>>, beta: Vec<f64>) -> Result<Self, ModelError> {
        let k = beta.len();
        if k == 0 || lambda.len() != k || lambda.iter().any(|row| row.len() != k) {
            return Err(ModelError::LambdaShape { k });
        }
        for &value in lambda.iter().flatten() {
            if !value.is_finite() || value.abs() > LAMBDA_MAX {
                return Err(ModelError::LambdaRange { value });
            }
        }
        for &value in &beta {
            if !(value >= BETA_FLOOR) {
                return Err(ModelError::BetaFloor { value });
            }
        }
        let sum: f64 = beta.iter().sum();
        if (sum - 1.0).abs() > SUM_TOL {
            return Err(ModelError::BetaSum { sum });
        }
        Ok(Self { lambda, beta })
    }

    /// Independent streams with equal power split.
    pub fn identity(k: usize) -> Self {
        let lambda = (0..k)
            .map(|i| (0..k).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
            .collect();
        Self { lambda, beta: vec![1.0 / k as f64; k] }
    }

    pub fn k(&self) -> usize {
        self.beta.len()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.lambda[i]
    }

    pub fn lambda(&self) -> &[Vec<f64>] {
        &self.lambda
    }

    pub fn beta(&self) -> &[f64] {
        &self.beta
    }
}

/// Compression parameters of the cooperating terminal: `p_yhat = E[Ŷ²]`,
/// `sigma = E[Ŷ Y]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoopParams {
    p_yhat: f64,
    sigma: f64,
}

impl CoopParams {
    /// `p_y` is the received power `E[Y²]` of the compressed observation.
    pub fn new(p_yhat: f64, sigma: f64, p_y: f64) -> Result<Self, ModelError> {
        if !(p_yhat > 0.0) || !p_yhat.is_finite() {
            return Err(ModelError::BadCompressionPower { p_yhat });
        }
        let bound = p_yhat * p_y;
        if !sigma.is_finite() || sigma * sigma > bound * (1.0 + 1e-12) {
            return Err(ModelError::CoopNotPsd { sigma_sq: sigma * sigma, bound });
        }
        Ok(Self { p_yhat, sigma })
    }

    /// No cooperation: the compression is independent of the observation.
    pub fn silent() -> Self {
        Self { p_yhat: 1.0, sigma: 0.0 }
    }

    pub fn p_yhat(&self) -> f64 {
        self.p_yhat
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }
}

/// Full parameter set of one protocol instance. Marton blocks are keyed by
/// `(node, phase)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ProtocolParams {
    protocol: Protocol,
    schedule: PhaseSchedule,
    marton: BTreeMap<(usize, usize), MartonParams>,
    coop: Option<CoopParams>,
}

impl ProtocolParams {
    pub fn new(
        protocol: Protocol,
        m: usize,
        schedule: PhaseSchedule,
        marton: BTreeMap<(usize, usize), MartonParams>,
        coop: Option<CoopParams>,
    ) -> Result<Self, ModelError> {
        let expected = phase_count(protocol, m);
        if schedule.len() != expected {
            return Err(ModelError::PhaseCount { expected, got: schedule.len() });
        }
        let slots = protocol.marton_slots(m);
        for &(node, phase, k) in &slots {
            match marton.get(&(node, phase)) {
                None => return Err(ModelError::MissingMarton { protocol, node, phase }),
                Some(mp) if mp.k() != k => {
                    return Err(ModelError::MartonSize { node, phase, expected: k, got: mp.k() })
                }
                Some(_) => {}
            }
        }
        if let Some(&(node, phase)) =
            marton.keys().find(|key| !slots.iter().any(|&(n, p, _)| (n, p) == **key))
        {
            return Err(ModelError::ExtraMarton { protocol, node, phase });
        }
        match (protocol.is_coop(), coop.is_some()) {
            (true, false) => return Err(ModelError::MissingCoop(protocol)),
            (false, true) => return Err(ModelError::ExtraCoop(protocol)),
            _ => {}
        }
        Ok(Self { protocol, schedule, marton, coop })
    }

    /// Uniform schedule, identity Marton blocks and silent cooperation.
    pub fn default_for(protocol: Protocol, m: usize) -> Self {
        let marton = protocol
            .marton_slots(m)
            .into_iter()
            .map(|(node, phase, k)| ((node, phase), MartonParams::identity(k)))
            .collect();
        Self {
            protocol,
            schedule: PhaseSchedule::uniform(phase_count(protocol, m)),
            marton,
            coop: protocol.is_coop().then(CoopParams::silent),
        }
    }

    pub fn protocol(&self) -> Protocol {
        self.protocol
    }

    pub fn schedule(&self) -> &PhaseSchedule {
        &self.schedule
    }

    pub fn marton(&self) -> &BTreeMap<(usize, usize), MartonParams> {
        &self.marton
    }

    pub fn coop(&self) -> Option<&CoopParams> {
        self.coop.as_ref()
    }

    pub fn with_schedule(&self, schedule: PhaseSchedule) -> Result<Self, ModelError> {
        let expected = self.schedule.len();
        if schedule.len() != expected {
            return Err(ModelError::PhaseCount { expected, got: schedule.len() });
        }
        Ok(Self { schedule, ..self.clone() })
    }
}

/// Rates `R_{0,i}` (downlink) and `R_{i,0}` (uplink), bits per channel use.
#[derive(Debug, Clone, PartialEq)]
pub struct RatePoint {
    pub down: Vec<f64>,
    pub up: Vec<f64>,
}

impl RatePoint {
    pub fn new(down: Vec<f64>, up: Vec<f64>) -> Result<Self, ModelError> {
        for &value in down.iter().chain(&up) {
            if !value.is_finite() || value < 0.0 {
                return Err(ModelError::BadRate { value });
            }
        }
        Ok(Self { down, up })
    }

    pub fn zero(m: usize) -> Self {
        Self { down: vec![0.0; m], up: vec![0.0; m] }
    }

    /// Splits a stacked vector `(R_{0,1..m}, R_{1..m,0})`.
    pub fn from_stacked(r: &[f64]) -> Self {
        let m = r.len() / 2;
        Self { down: r[..m].to_vec(), up: r[m..].to_vec() }
    }

    pub fn stacked(&self) -> Vec<f64> {
        self.down.iter().chain(&self.up).copied().collect()
    }

    pub fn m(&self) -> usize {
        self.down.len()
    }
}
