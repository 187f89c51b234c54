//! Dense two-phase simplex with Bland's rule.

use nalgebra::{DMatrix, DVector};

const PIVOT_TOL: f64 = 1e-12;
/// Pivot candidates below this fraction of the column's largest entry are
/// skipped; pivoting on them amplifies rounding by their inverse.
const PIVOT_REL: f64 = 1e-9;
/// Returned points violating a constraint by more than this (relative to
/// the row scale) are reported as numerically unstable.
const CHECK_TOL: f64 = 1e-7;
const COST_TOL: f64 = 1e-12;
const FEAS_TOL: f64 = 1e-9;
const MAX_PIVOTS: usize = 50_000;

/// `max cᵀx` subject to `a_ub x ≤ b_ub`, `a_eq x = b_eq`, `x ≥ 0`.
#[derive(Debug, Clone, Default)]
pub struct Lp {
    pub c: Vec<f64>,
    pub a_ub: Vec<Vec<f64>>,
    pub b_ub: Vec<f64>,
    pub a_eq: Vec<Vec<f64>>,
    pub b_eq: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum LpStatus {
    Optimal { x: Vec<f64>, value: f64 },
    /// `residual` is the smallest total constraint violation phase one found.
    Infeasible { residual: f64 },
    Unbounded,
    PivotLimit,
    /// The final point failed the feasibility re-check.
    Unstable { violation: f64 },
}

struct Tableau {
    rows: usize,
    cols: usize,
    t: Vec<f64>,
    obj: Vec<f64>,
    basis: Vec<usize>,
    active: Vec<bool>,
}

impl Tableau {
    fn at(&self, i: usize, j: usize) -> f64 {
        self.t[i * (self.cols + 1) + j]
    }

    fn rhs(&self, i: usize) -> f64 {
        self.at(i, self.cols)
    }

    fn pivot(&mut self, p: usize, q: usize) {
        let w = self.cols + 1;
        let inv = 1.0 / self.at(p, q);
        for j in 0..w {
            self.t[p * w + j] *= inv;
        }
        self.t[p * w + q] = 1.0;
        for i in 0..self.rows {
            if i == p {
                continue;
            }
            let f = self.t[i * w + q];
            if f != 0.0 {
                for j in 0..w {
                    self.t[i * w + j] -= f * self.t[p * w + j];
                }
                self.t[i * w + q] = 0.0;
            }
        }
        let f = self.obj[q];
        if f != 0.0 {
            for j in 0..w {
                self.obj[j] -= f * self.t[p * w + j];
            }
            self.obj[q] = 0.0;
        }
        self.basis[p] = q;
    }

    /// Sets the objective row to `z - c` for the current basis.
    fn price(&mut self, c: &[f64]) {
        let w = self.cols + 1;
        self.obj = vec![0.0; w];
        for j in 0..self.cols {
            self.obj[j] = -c[j];
        }
        for i in 0..self.rows {
            let cb = c[self.basis[i]];
            if cb != 0.0 {
                for j in 0..w {
                    self.obj[j] += cb * self.t[i * w + j];
                }
            }
        }
    }

    /// Runs simplex iterations on the current objective. Returns `false` if
    /// the problem is unbounded.
    fn optimize(&mut self, pivots: &mut usize) -> Option<bool> {
        loop {
            let entering = (0..self.cols).find(|&j| self.active[j] && self.obj[j] < -COST_TOL);
            let Some(q) = entering else { return Some(true) };
            let col_max = (0..self.rows).map(|i| self.at(i, q)).fold(0.0, f64::max);
            let floor = PIVOT_TOL.max(PIVOT_REL * col_max);
            let mut leave: Option<(usize, f64)> = None;
            for i in 0..self.rows {
                let a = self.at(i, q);
                if a > floor {
                    let ratio = self.rhs(i).max(0.0) / a;
                    leave = match leave {
                        None => Some((i, ratio)),
                        Some((k, best)) => {
                            let tie = (ratio - best).abs() <= 1e-14 * (1.0 + best.abs());
                            let ak = self.at(k, q);
                            let better_tie = a > 2.0 * ak || (a * 2.0 >= ak && self.basis[i] < self.basis[k]);
                            if ratio < best && !tie || tie && better_tie {
                                Some((i, ratio))
                            } else {
                                Some((k, best))
                            }
                        }
                    };
                }
            }
            let Some((p, _)) = leave else { return Some(false) };
            self.pivot(p, q);
            *pivots += 1;
            if *pivots > MAX_PIVOTS {
                return None;
            }
        }
    }
}

pub fn maximize(lp: &Lp) -> LpStatus {
    let n = lp.c.len();
    let n_ub = lp.a_ub.len();
    let n_eq = lp.a_eq.len();
    let rows = n_ub + n_eq;
    let n_art = lp.b_ub.iter().filter(|&&b| b < 0.0).count() + n_eq;
    let cols = n + n_ub + n_art;
    let w = cols + 1;
    let mut t = vec![0.0; rows * w];
    let mut basis = vec![0; rows];
    let mut art = n + n_ub;
    for i in 0..n_ub {
        let sign = if lp.b_ub[i] < 0.0 { -1.0 } else { 1.0 };
        for j in 0..n {
            t[i * w + j] = sign * lp.a_ub[i][j];
        }
        t[i * w + n + i] = sign;
        t[i * w + cols] = sign * lp.b_ub[i];
        if sign < 0.0 {
            t[i * w + art] = 1.0;
            basis[i] = art;
            art += 1;
        } else {
            basis[i] = n + i;
        }
    }
    for e in 0..n_eq {
        let i = n_ub + e;
        let sign = if lp.b_eq[e] < 0.0 { -1.0 } else { 1.0 };
        for j in 0..n {
            t[i * w + j] = sign * lp.a_eq[e][j];
        }
        t[i * w + cols] = sign * lp.b_eq[e];
        t[i * w + art] = 1.0;
        basis[i] = art;
        art += 1;
    }
    let orig = t.clone();
    let mut tab = Tableau { rows, cols, t, obj: vec![0.0; w], basis, active: vec![true; cols] };
    let mut pivots = 0;

    if n_art > 0 {
        let mut c1 = vec![0.0; cols];
        for c in c1.iter_mut().skip(n + n_ub) {
            *c = -1.0;
        }
        tab.price(&c1);
        if tab.optimize(&mut pivots).is_none() {
            return LpStatus::PivotLimit;
        }
        let residual = -tab.obj[cols];
        if residual > FEAS_TOL {
            return LpStatus::Infeasible { residual };
        }
        // Drive remaining artificials out of the basis; rows where that is
        // impossible are redundant and get zeroed.
        for i in 0..tab.rows {
            if tab.basis[i] >= n + n_ub {
                if let Some(q) = (0..n + n_ub).find(|&j| tab.at(i, j).abs() > 1e-9) {
                    tab.pivot(i, q);
                } else {
                    for j in 0..w {
                        tab.t[i * w + j] = 0.0;
                    }
                }
            }
        }
        for a in tab.active.iter_mut().skip(n + n_ub) {
            *a = false;
        }
    }

    let mut c2 = vec![0.0; cols];
    c2[..n].copy_from_slice(&lp.c);
    tab.price(&c2);
    match tab.optimize(&mut pivots) {
        None => LpStatus::PivotLimit,
        Some(false) => LpStatus::Unbounded,
        Some(true) => {
            let mut x = vec![0.0; n];
            let refined = refine(&orig, rows, cols, &tab.basis);
            for i in 0..tab.rows {
                if tab.basis[i] < n {
                    let v = refined.as_ref().map_or_else(|| tab.rhs(i), |r| r[i]);
                    x[tab.basis[i]] = v.max(0.0);
                }
            }
            let violation = max_violation(lp, &x);
            if violation > CHECK_TOL {
                return LpStatus::Unstable { violation };
            }
            let value = x.iter().zip(&lp.c).map(|(a, b)| a * b).sum();
            LpStatus::Optimal { x, value }
        }
    }
}

/// Basic variable values recomputed from the original constraint data,
/// discarding the rounding accumulated in the tableau.
fn refine(orig: &[f64], rows: usize, cols: usize, basis: &[usize]) -> Option<Vec<f64>> {
    let w = cols + 1;
    let b = DMatrix::from_fn(rows, rows, |i, k| orig[i * w + basis[k]]);
    let rhs = DVector::from_fn(rows, |i, _| orig[i * w + cols]);
    let x = b.lu().solve(&rhs)?;
    x.iter().all(|v| v.is_finite()).then(|| x.iter().copied().collect())
}

/// Largest scaled violation of the original constraints at `x`.
fn max_violation(lp: &Lp, x: &[f64]) -> f64 {
    let row = |a: &[f64], b: f64| -> (f64, f64) {
        let lhs: f64 = a.iter().zip(x).map(|(p, q)| p * q).sum();
        let scale = 1.0 + b.abs() + a.iter().zip(x).map(|(p, q)| (p * q).abs()).sum::<f64>();
        (lhs - b, scale)
    };
    let ub = lp.a_ub.iter().zip(&lp.b_ub).map(|(a, &b)| {
        let (d, s) = row(a, b);
        d.max(0.0) / s
    });
    let eq = lp.a_eq.iter().zip(&lp.b_eq).map(|(a, &b)| {
        let (d, s) = row(a, b);
        d.abs() / s
    });
    ub.chain(eq).fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn opt(s: LpStatus) -> (Vec<f64>, f64) {
        match s {
            LpStatus::Optimal { x, value } => (x, value),
            other => panic!("expected optimum, got {other:?}"),
        }
    }

    #[test]
    fn small_box() {
        let lp = Lp {
            c: vec![1.0, 1.0],
            a_ub: vec![vec![1.0, 0.0], vec![0.0, 1.0], vec![1.0, 1.0]],
            b_ub: vec![1.0, 1.0, 1.5],
            ..Default::default()
        };
        let (_, v) = opt(maximize(&lp));
        assert!((v - 1.5).abs() < 1e-12);
    }

    #[test]
    fn equality_and_negative_rhs() {
        // max x + 2y, x + y = 1, -x <= -0.25
        let lp = Lp {
            c: vec![1.0, 2.0],
            a_ub: vec![vec![-1.0, 0.0]],
            b_ub: vec![-0.25],
            a_eq: vec![vec![1.0, 1.0]],
            b_eq: vec![1.0],
        };
        let (x, v) = opt(maximize(&lp));
        assert!((x[0] - 0.25).abs() < 1e-12);
        assert!((v - 1.75).abs() < 1e-12);
    }

    #[test]
    fn infeasible() {
        let lp = Lp {
            c: vec![1.0],
            a_ub: vec![vec![1.0], vec![-1.0]],
            b_ub: vec![0.005, -0.01],
            ..Default::default()
        };
        assert!(matches!(maximize(&lp), LpStatus::Infeasible { .. }));
    }

    #[test]
    fn unbounded() {
        let lp = Lp { c: vec![1.0, 0.0], a_ub: vec![vec![0.0, 1.0]], b_ub: vec![1.0], ..Default::default() };
        assert_eq!(maximize(&lp), LpStatus::Unbounded);
    }

    #[test]
    fn tiny_pivot_in_degenerate_tie() {
        // max 0.97(a + b) + 0.22 c with a + b <= d1, b <= 1.5e-13 d2, c <= 4.5e-12 d2,
        // c <= d1, d1 + d2 = 1.
        let lp = Lp {
            c: vec![0.97, 0.97, 0.22, 0.0, 0.0],
            a_ub: vec![
                vec![1.0, 1.0, 0.0, -1.0, 0.0],
                vec![0.0, 1.0, 0.0, 0.0, -1.5e-13],
                vec![0.0, 0.0, 1.0, 0.0, -4.5e-12],
                vec![0.0, 0.0, 1.0, -1.0, 0.0],
            ],
            b_ub: vec![0.0; 4],
            a_eq: vec![vec![0.0, 0.0, 0.0, 1.0, 1.0]],
            b_eq: vec![1.0],
        };
        let (x, v) = opt(maximize(&lp));
        assert!(x[0] + x[1] <= x[3] + 1e-9);
        assert!((v - 0.97).abs() < 1e-9);
    }

    #[test]
    fn degenerate_redundant_equalities() {
        let lp = Lp {
            c: vec![1.0, 1.0],
            a_ub: vec![vec![1.0, 0.0]],
            b_ub: vec![0.3],
            a_eq: vec![vec![1.0, 1.0], vec![2.0, 2.0]],
            b_eq: vec![1.0, 2.0],
        };
        let (_, v) = opt(maximize(&lp));
        assert!((v - 1.0).abs() < 1e-12);
    }
}
