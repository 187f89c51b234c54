//! Closed-form kernels against covariance-level mutual informations.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::gauss::{cond_mi_logdet, mi_logdet, GaussBuilder, Lin};
use super::ValidateError;
use crate::gkernels::{self as gk, cap};

/// Outcome of an oracle comparison run.
#[derive(Debug, Clone, PartialEq)]
pub struct OracleReport {
    pub max_abs_error: f64,
    /// Kernel whose discrepancy was largest.
    pub worst: &'static str,
    pub evaluated: usize,
    /// Comparisons skipped because either side was the infinite sentinel.
    pub skipped: usize,
}

impl OracleReport {
    fn new() -> Self {
        Self { max_abs_error: 0.0, worst: "", evaluated: 0, skipped: 0 }
    }

    fn record(&mut self, name: &'static str, kernel: f64, oracle: f64) {
        if gk::is_sentinel(kernel) || oracle.is_infinite() {
            self.skipped += 1;
            return;
        }
        self.evaluated += 1;
        let e = (kernel - oracle).abs();
        if e > self.max_abs_error || e.is_nan() {
            self.max_abs_error = if e.is_nan() { f64::INFINITY } else { e };
            self.worst = name;
        }
    }
}

fn uniform(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    rng.gen_range(lo..hi)
}

/// Flat Dirichlet draw.
fn simplex(rng: &mut ChaCha8Rng, k: usize) -> Vec<f64> {
    let e: Vec<f64> = (0..k).map(|_| -(1.0 - rng.gen::<f64>()).ln()).collect();
    let s: f64 = e.iter().sum();
    e.iter().map(|v| v / s).collect()
}

fn row(rng: &mut ChaCha8Rng, k: usize) -> Vec<f64> {
    (0..k).map(|_| uniform(rng, -2.0, 2.0)).collect()
}

/// Marton transmitter: independent streams `V_i` of power `β_i P`.
struct Transmitter {
    streams: Vec<Lin>,
    x: Lin,
}

impl Transmitter {
    fn new(g: &mut GaussBuilder, p: f64, beta: &[f64]) -> Self {
        let streams: Vec<Lin> = beta.iter().map(|b| g.source(b * p)).collect();
        let x = streams.iter().fold(Lin::zero(), |acc, v| acc.add(v));
        Self { streams, x }
    }

    fn aux(&self, lam: &[f64]) -> Lin {
        let terms: Vec<(f64, &Lin)> = lam.iter().copied().zip(&self.streams).collect();
        Lin::combo(&terms)
    }
}

/// Compares every closed-form kernel with its log-det counterpart over
/// `n_draws` random parameter sets. Powers and gains are drawn from
/// `[0.05, 30]`.
pub fn kernel_oracle_check(seed: u64, n_draws: usize) -> Result<OracleReport, ValidateError> {
    if n_draws == 0 {
        return Err(ValidateError::NoDraws);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rep = OracleReport::new();
    for _ in 0..n_draws {
        let p_a = uniform(&mut rng, 0.05, 30.0);
        let p_b = uniform(&mut rng, 0.05, 30.0);
        let p_r = uniform(&mut rng, 0.05, 30.0);
        let [h_ac, h_ad, h_bc, h_1, h_2] = [(); 5].map(|_| uniform(&mut rng, 0.05, 30.0).sqrt());
        let beta_a = simplex(&mut rng, 3);
        let beta_b = simplex(&mut rng, 2);
        let la = [row(&mut rng, 3), row(&mut rng, 3), row(&mut rng, 3)];
        let lb = [row(&mut rng, 2), row(&mut rng, 2)];
        let p_y = h_ad * h_ad * p_a + 1.0;
        let p_yhat = uniform(&mut rng, -2.0, 2.0).exp();
        let sigma = uniform(&mut rng, -0.95, 0.95) * (p_yhat * p_y).sqrt();
        let p_y1 = h_1 * h_1 * p_r + 1.0;
        let q_yhat = uniform(&mut rng, -2.0, 2.0).exp();
        let q_sigma = uniform(&mut rng, -0.95, 0.95) * (q_yhat * p_y1).sqrt();

        let mut g = GaussBuilder::new();
        let a = Transmitter::new(&mut g, p_a, &beta_a);
        let b = Transmitter::new(&mut g, p_b, &beta_b);
        let xr = g.source(p_r);
        let noise: Vec<Lin> = (0..5).map(|_| g.source(1.0)).collect();
        let zq = g.source(p_yhat - sigma * sigma / p_y);
        let zq1 = g.source(q_yhat - q_sigma * q_sigma / p_y1);

        for (i, l) in la.iter().enumerate() {
            g.label(["Ua1", "Ua2", "Ua3"][i], &a.aux(l));
        }
        for (i, l) in lb.iter().enumerate() {
            g.label(["Ub1", "Ub2"][i], &b.aux(l));
        }
        g.label("Xa", &a.x);
        g.label("Yc", &Lin::combo(&[(h_ac, &a.x), (1.0, &noise[0])]));
        let yd = Lin::combo(&[(h_ad, &a.x), (1.0, &noise[1])]);
        g.label("Yhat", &Lin::combo(&[(sigma / p_y, &yd), (1.0, &zq)]));
        g.label("Ymac", &Lin::combo(&[(h_ac, &a.x), (h_bc, &b.x), (1.0, &noise[2])]));
        let y1 = Lin::combo(&[(h_1, &xr), (1.0, &noise[3])]);
        g.label("Y1", &y1);
        g.label("Y2", &Lin::combo(&[(h_2, &xr), (1.0, &noise[4])]));
        g.label("Y1hat", &Lin::combo(&[(q_sigma / p_y1, &y1), (1.0, &zq1)]));
        let sys = g.build()?;

        let mi = |x: &[&str], y: &[&str]| mi_logdet(&sys, x, y);
        let cmi = |x: &[&str], y: &[&str], z: &[&str]| cond_mi_logdet(&sys, x, y, z);

        rep.record("c_b", gk::c_b(p_a, h_ac, &la[0], &beta_a), mi(&["Ua1"], &["Yc"])?);
        rep.record("c_be", gk::c_be(&la[0], &la[1], &beta_a), mi(&["Ua1"], &["Ua2"])?);
        rep.record("c_be2", gk::c_be2(&la[0], &la[1], &la[2], &beta_a), mi(&["Ua1"], &["Ua2", "Ua3"])?);
        rep.record("c_c", gk::c_c(p_a, h_ac, &la[0], &la[1], &beta_a), mi(&["Ua1"], &["Yc", "Ua2"])?);
        let bc = gk::c_bc(p_a, h_ac, h_ad, &la[0], &beta_a, p_yhat, sigma)?;
        rep.record("c_bc", bc, mi(&["Ua1"], &["Yc", "Yhat"])?);
        rep.record("c_m", gk::c_m(p_a, p_b, h_ac, h_bc, &lb[0], &beta_b), cmi(&["Xa"], &["Ymac"], &["Ub1"])?);
        rep.record("c_bi", gk::c_bi(p_a, p_b, h_ac, h_bc, &la[0], &beta_a), mi(&["Ua1"], &["Ymac"])?);
        rep.record(
            "c_bm",
            gk::c_bm(p_a, p_b, h_ac, h_bc, &la[0], &lb[0], &beta_a, &beta_b),
            cmi(&["Ua1"], &["Ymac"], &["Ub1"])?,
        );
        rep.record(
            "c_ci",
            gk::c_ci(p_a, p_b, h_ac, h_bc, &la[0], &la[1], &lb[0], &beta_a, &beta_b),
            cmi(&["Ua1"], &["Ymac", "Ua2"], &["Ub1"])?,
        );
        let comp = gk::c_compress(p_r, h_1, h_2, q_yhat, q_sigma)?;
        rep.record("c_compress", comp, cmi(&["Y1"], &["Y1hat"], &["Y2"])?);
    }
    Ok(rep)
}

/// Largest deviation of each reduction identity over `n_draws` draws.
#[derive(Debug, Clone, PartialEq)]
pub struct ReductionReport {
    pub errors: Vec<(&'static str, f64)>,
    pub draws: usize,
}

impl ReductionReport {
    pub fn max_abs_error(&self) -> f64 {
        self.errors.iter().map(|e| e.1).fold(0.0, f64::max)
    }
}

/// Checks the closed-form special cases: single-stream `c_b`, orthogonal
/// `c_be`, silent compression, orthogonal third auxiliary, full
/// conditioning in `c_m`/`c_bm`/`c_ci`, and interference-free `c_bi`.
pub fn reduction_check(seed: u64, n_draws: usize) -> Result<ReductionReport, ValidateError> {
    if n_draws == 0 {
        return Err(ValidateError::NoDraws);
    }
    let names = ["c_b_single", "c_be_orth", "c_bc_silent", "c_be2_orth", "c_m_full", "c_bm_full", "c_ci_full", "c_bi_quiet"];
    let mut worst = [0.0f64; 8];
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..n_draws {
        let p = uniform(&mut rng, 0.05, 30.0);
        let q = uniform(&mut rng, 0.05, 30.0);
        let h = uniform(&mut rng, 0.05, 30.0).sqrt();
        let h2 = uniform(&mut rng, 0.05, 30.0).sqrt();
        let beta = simplex(&mut rng, 3);
        let (li, lj, lk) = (row(&mut rng, 3), row(&mut rng, 3), row(&mut rng, 3));
        let one = [1.0];
        let d = [
            (gk::c_b(p, h, &one, &one) - cap(h * h * p)).abs(),
            {
                let a = [li[0], li[1], 0.0];
                let b = [0.0, 0.0, lj[2]];
                gk::c_be(&a, &b, &beta).abs()
            },
            {
                let p_yhat = uniform(&mut rng, -2.0, 2.0).exp();
                (gk::c_bc(p, h, h2, &li, &beta, p_yhat, 0.0)? - gk::c_b(p, h, &li, &beta)).abs()
            },
            {
                let a = [li[0], li[1], 0.0];
                let b = [lj[0], lj[1], 0.0];
                let c = [0.0, 0.0, lk[2]];
                (gk::c_be2(&a, &b, &c, &beta) - gk::c_be(&a, &b, &beta)).abs()
            },
            (gk::c_m(p, q, h, h2, &one, &one) - cap(h * h * p)).abs(),
            (gk::c_bm(p, q, h, h2, &li, &one, &beta, &one) - gk::c_b(p, h, &li, &beta)).abs(),
            (gk::c_ci(p, q, h, h2, &li, &lj, &one, &beta, &one) - gk::c_c(p, h, &li, &lj, &beta)).abs(),
            (gk::c_bi(p, 0.0, h, h2, &li, &beta) - gk::c_b(p, h, &li, &beta)).abs(),
        ];
        for (w, e) in worst.iter_mut().zip(d) {
            // Both sides infinite counts as agreement.
            let e = if e.is_nan() { 0.0 } else { e };
            *w = w.max(e);
        }
    }
    Ok(ReductionReport { errors: names.into_iter().zip(worst).collect(), draws: n_draws })
}

/// Residuals of the two degraded broadcast identities for the
/// dirty-paper Marton choice `Λ = [[1, α], [0, 1]]`,
/// `α = β₁g₁/(β₁g₁+1)`, `g_i = |h_{r,i}|²P_r`:
/// the stronger receiver gets `C(β₁g₁)`, the weaker `C(β₂g₂/(β₁g₂+1))`.
pub fn degraded_bc_residuals(p_r: f64, h_r1: f64, h_r2: f64, beta1: f64) -> Result<[f64; 2], ValidateError> {
    let ok = p_r.is_finite() && p_r > 0.0 && h_r2 > 0.0 && h_r1 >= h_r2 && h_r1.is_finite() && beta1 > 0.0 && beta1 < 1.0;
    if !ok {
        return Err(ValidateError::DegradedPrecondition);
    }
    let g1 = h_r1 * h_r1 * p_r;
    let g2 = h_r2 * h_r2 * p_r;
    let beta2 = 1.0 - beta1;
    let alpha = beta1 * g1 / (beta1 * g1 + 1.0);
    let beta = [beta1, beta2];
    let row1 = [1.0, alpha];
    let row2 = [0.0, 1.0];
    let strong = gk::c_b(p_r, h_r1, &row1, &beta) - gk::c_be(&row1, &row2, &beta);
    let weak = gk::c_b(p_r, h_r2, &row2, &beta);
    Ok([(strong - cap(beta1 * g1)).abs(), (weak - cap(beta2 * g2 / (beta1 * g2 + 1.0))).abs()])
}

/// Whether both degraded broadcast identities hold to 1e-12.
pub fn degraded_bc_check(p_r: f64, h_r1: f64, h_r2: f64, beta1: f64) -> Result<bool, ValidateError> {
    let r = degraded_bc_residuals(p_r, h_r1, h_r2, beta1)?;
    Ok(r[0] <= 1e-12 && r[1] <= 1e-12)
}

/// Worst residual over an `n × n` grid of `β₁ ∈ (0, 1)` and `P_r` from
/// −10 dB to 30 dB.
pub fn degraded_bc_grid(h_r1: f64, h_r2: f64, n: usize) -> Result<f64, ValidateError> {
    let mut worst = 0.0f64;
    for i in 0..n {
        let beta1 = (i as f64 + 0.5) / n as f64;
        for j in 0..n {
            let db = if n > 1 { -10.0 + 40.0 * j as f64 / (n - 1) as f64 } else { 0.0 };
            let r = degraded_bc_residuals(crate::model::db_to_linear(db), h_r1, h_r2, beta1)?;
            worst = worst.max(r[0]).max(r[1]);
        }
    }
    Ok(worst)
}
