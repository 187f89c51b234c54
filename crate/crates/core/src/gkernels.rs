//! Closed-form Gaussian mutual informations for superposition (Marton)
//! codebooks.
//!
//! A transmitter with power `P` splits its input into independent streams
//! `V_i ~ CN(0, β_i P)` with `X = Σ V_i` and forms auxiliaries `U = Λ V`.
//! Every function below evaluates one mutual information between such
//! auxiliaries and noisy observations `Y = h X + Z` with unit noise, in bits
//! (complex circularly-symmetric convention, no ½ factor).
//!
//! Degenerate auxiliaries (variance factor `f(λ,λ,β) ≤ 1e-15`) carry no
//! information; conditioning on one is the same as not conditioning.
//! Perfectly correlated auxiliaries give an infinite value, returned as
//! `f64::INFINITY` (see [`is_sentinel`]).
//!
//! The numerators and denominators are Gram-type determinants that cancel
//! badly for nearly dependent auxiliaries, so they are evaluated in
//! double-double arithmetic and rounded once.

use thiserror::Error;

use dd::Dd;

const DEGENERATE: f64 = 1e-15;
const SINGULAR_REL: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum KernelError {
    #[error("compression parameters violate sigma^2 <= p_yhat * p_y ({sigma_sq} > {bound})")]
    CoopNotPsd { sigma_sq: f64, bound: f64 },
}

pub fn is_sentinel(x: f64) -> bool {
    x == f64::INFINITY
}

/// `Σ a_i b_i c_i`.
///
/// # Panics
/// If the three slices differ in length.
pub fn dot3(a: &[f64], b: &[f64], c: &[f64]) -> f64 {
    f3(a, b, c).hi()
}

/// `log2(1 + x)`.
pub fn cap(x: f64) -> f64 {
    debug_assert!(x >= 0.0 || x.is_nan(), "cap of negative argument {x}");
    (x.max(0.0)).ln_1p() / std::f64::consts::LN_2
}

mod dd {
    //! Unevaluated sums `hi + lo` of two doubles (about 106 significant bits).

    use std::ops::{Add, Mul, Neg, Sub};

    #[derive(Debug, Clone, Copy, PartialEq)]
    pub struct Dd {
        hi: f64,
        lo: f64,
    }

    fn two_sum(a: f64, b: f64) -> (f64, f64) {
        let s = a + b;
        let bb = s - a;
        (s, (a - (s - bb)) + (b - bb))
    }

    fn quick(a: f64, b: f64) -> Dd {
        let s = a + b;
        Dd { hi: s, lo: b - (s - a) }
    }

    impl Dd {
        pub const ZERO: Dd = Dd { hi: 0.0, lo: 0.0 };

        pub fn hi(self) -> f64 {
            self.hi
        }

        pub fn prod(a: f64, b: f64) -> Dd {
            let p = a * b;
            Dd { hi: p, lo: a.mul_add(b, -p) }
        }

        pub fn sq(self) -> Dd {
            self * self
        }
    }

    impl From<f64> for Dd {
        fn from(x: f64) -> Self {
            Dd { hi: x, lo: 0.0 }
        }
    }

    impl Add for Dd {
        type Output = Dd;
        fn add(self, o: Dd) -> Dd {
            let (s, e) = two_sum(self.hi, o.hi);
            let (t, f) = two_sum(self.lo, o.lo);
            let e = e + t;
            let r = quick(s, e);
            quick(r.hi, r.lo + f)
        }
    }

    impl Neg for Dd {
        type Output = Dd;
        fn neg(self) -> Dd {
            Dd { hi: -self.hi, lo: -self.lo }
        }
    }

    impl Sub for Dd {
        type Output = Dd;
        fn sub(self, o: Dd) -> Dd {
            self + (-o)
        }
    }

    impl Mul for Dd {
        type Output = Dd;
        fn mul(self, o: Dd) -> Dd {
            let p = Dd::prod(self.hi, o.hi);
            quick(p.hi, p.lo + (self.hi * o.lo + self.lo * o.hi))
        }
    }

    impl Mul<f64> for Dd {
        type Output = Dd;
        fn mul(self, o: f64) -> Dd {
            self * Dd::from(o)
        }
    }
}

/// `f(a, b, c) = Σ a_i b_i c_i` in double-double.
fn f3(a: &[f64], b: &[f64], c: &[f64]) -> Dd {
    assert!(a.len() == b.len() && b.len() == c.len(), "dot3 length mismatch");
    a.iter().zip(b).zip(c).fold(Dd::ZERO, |acc, ((x, y), z)| acc + Dd::prod(*x, *y) * *z)
}

/// `f(a, 1, c)`.
fn f1(a: &[f64], c: &[f64]) -> Dd {
    assert!(a.len() == c.len(), "dot3 length mismatch");
    a.iter().zip(c).fold(Dd::ZERO, |acc, (x, z)| acc + Dd::prod(*x, *z))
}

/// `|h|² P`.
fn gain(h: f64, p: f64) -> Dd {
    Dd::prod(h, h) * p
}

/// `C(num / den)`, or the sentinel when `den` vanishes relative to `num + den`.
fn cap_ratio(num: Dd, den: Dd) -> f64 {
    let (num, den) = (num.hi(), den.hi());
    if den <= SINGULAR_REL * (num.abs() + den.abs()) {
        f64::INFINITY
    } else {
        cap(num.max(0.0) / den)
    }
}

fn degenerate(f: Dd) -> bool {
    f.hi() <= DEGENERATE
}

/// `I(U_i; Y)` for `Y = h X + Z`.
pub fn c_b(p: f64, h: f64, lam: &[f64], beta: &[f64]) -> f64 {
    let fii = f3(lam, lam, beta);
    if degenerate(fii) {
        return 0.0;
    }
    let f1i = f1(lam, beta);
    let g = gain(h, p);
    cap_ratio(g * f1i.sq(), g * (fii - f1i.sq()) + fii)
}

/// `I(U_i; U_j)` for two auxiliaries of the same transmitter.
pub fn c_be(lam_i: &[f64], lam_j: &[f64], beta: &[f64]) -> f64 {
    let fii = f3(lam_i, lam_i, beta);
    let fjj = f3(lam_j, lam_j, beta);
    if degenerate(fii) || degenerate(fjj) {
        return 0.0;
    }
    let fij = f3(lam_i, lam_j, beta);
    cap_ratio(fij.sq(), fii * fjj - fij.sq())
}

/// `I(U_i; U_j, U_k)`.
pub fn c_be2(lam_i: &[f64], lam_j: &[f64], lam_k: &[f64], beta: &[f64]) -> f64 {
    let fii = f3(lam_i, lam_i, beta);
    let fjj = f3(lam_j, lam_j, beta);
    let fkk = f3(lam_k, lam_k, beta);
    if degenerate(fii) {
        return 0.0;
    }
    if degenerate(fjj) {
        return c_be(lam_i, lam_k, beta);
    }
    if degenerate(fkk) {
        return c_be(lam_i, lam_j, beta);
    }
    let fij = f3(lam_i, lam_j, beta);
    let fik = f3(lam_i, lam_k, beta);
    let fjk = f3(lam_j, lam_k, beta);
    let k1 = fii * fjj * fkk - fii * fjk.sq();
    let k2 = fjj * fik.sq() + fkk * fij.sq() - fij * fjk * fik * 2.0;
    cap_ratio(k2, k1 - k2)
}

/// `I(U_i; Y, U_j)` with `Y = √g X + N`, noise power `n`.
fn c_c_noise(g: Dd, n: Dd, lam_i: &[f64], lam_j: &[f64], beta: &[f64]) -> f64 {
    let fii = f3(lam_i, lam_i, beta);
    let fjj = f3(lam_j, lam_j, beta);
    let f1i = f1(lam_i, beta);
    let f1j = f1(lam_j, beta);
    let fij = f3(lam_i, lam_j, beta);
    let kc1 = fii * fjj - fii * f1j.sq();
    let kc2 = fij.sq() + fjj * f1i.sq() - fij * f1i * f1j * 2.0;
    let kc3 = fii * fjj;
    let kc4 = fij.sq();
    cap_ratio(g * kc2 + n * kc4, g * (kc1 - kc2) + n * (kc3 - kc4))
}

/// `I(U_i; Y, U_j)`: decoding `U_i` from the channel output with `U_j`
/// known.
pub fn c_c(p: f64, h: f64, lam_i: &[f64], lam_j: &[f64], beta: &[f64]) -> f64 {
    if degenerate(f3(lam_i, lam_i, beta)) {
        return 0.0;
    }
    if degenerate(f3(lam_j, lam_j, beta)) {
        return c_b(p, h, lam_i, beta);
    }
    c_c_noise(gain(h, p), Dd::from(1.0), lam_i, lam_j, beta)
}

/// `E[Ŷ²]·E[Y²]` and `σ²`, rejecting parameters that are not a valid
/// covariance.
fn coop_moments(p_yhat: f64, sigma: f64, p_y: Dd) -> Result<(Dd, Dd), KernelError> {
    let bound = p_y * p_yhat;
    let s2 = Dd::prod(sigma, sigma);
    if s2.hi() > bound.hi() * (1.0 + 1e-12) {
        return Err(KernelError::CoopNotPsd { sigma_sq: s2.hi(), bound: bound.hi() });
    }
    Ok((bound, s2))
}

/// `I(U_i; Y_c, Ŷ_d)` where `Y_c = h_ac X + Z_c`, `Y_d = h_ad X + Z_d` and
/// `Ŷ_d = (σ/p_y) Y_d + Z_q` with `p_y = |h_ad|² P + 1`,
/// `E[Ŷ_d²] = p_yhat` and `E[Ŷ_d Y_d] = σ`.
pub fn c_bc(
    p: f64,
    h_ac: f64,
    h_ad: f64,
    lam: &[f64],
    beta: &[f64],
    p_yhat: f64,
    sigma: f64,
) -> Result<f64, KernelError> {
    let g_ad = gain(h_ad, p);
    let p_y = g_ad + Dd::from(1.0);
    let (bound, s2) = coop_moments(p_yhat, sigma, p_y)?;
    let fii = f3(lam, lam, beta);
    if degenerate(fii) {
        return Ok(0.0);
    }
    let f1i = f1(lam, beta);
    let g_ac = gain(h_ac, p);
    // σ² g_ad / p_y, with the division done once in f64.
    let sq = Dd::from((s2 * g_ad).hi() / p_y.hi());
    let k1 = g_ac * (bound - sq) + bound;
    let k2 = g_ac * (bound - sq) + sq;
    Ok(cap_ratio(f1i.sq() * k2, fii * k1 - f1i.sq() * k2))
}

/// `I(X_a; Y_c, U_{b,i})` for `Y_c = h_ac X_a + h_bc X_b + Z`.
pub fn c_m(p_a: f64, p_b: f64, h_ac: f64, h_bc: f64, lam_bi: &[f64], beta_b: &[f64]) -> f64 {
    let ga = gain(h_ac, p_a);
    let gb = gain(h_bc, p_b);
    let fbb = f3(lam_bi, lam_bi, beta_b);
    if degenerate(fbb) {
        return cap_ratio(ga, gb + Dd::from(1.0));
    }
    let f1b = f1(lam_bi, beta_b);
    cap_ratio(ga * fbb, gb * (fbb - f1b.sq()) + fbb)
}

/// `I(U_{a,i}; Y_c)` with the whole of `X_b` as interference.
pub fn c_bi(p_a: f64, p_b: f64, h_ac: f64, h_bc: f64, lam_ai: &[f64], beta_a: &[f64]) -> f64 {
    let faa = f3(lam_ai, lam_ai, beta_a);
    if degenerate(faa) {
        return 0.0;
    }
    let f1a = f1(lam_ai, beta_a);
    let ga = gain(h_ac, p_a);
    let gb = gain(h_bc, p_b);
    let num = f1a.sq() * ga;
    cap_ratio(num, faa * (ga + gb + Dd::from(1.0)) - num)
}

/// `I(U_{a,i}; Y_c | U_{b,j})`.
#[allow(clippy::too_many_arguments)]
pub fn c_bm(
    p_a: f64,
    p_b: f64,
    h_ac: f64,
    h_bc: f64,
    lam_ai: &[f64],
    lam_bj: &[f64],
    beta_a: &[f64],
    beta_b: &[f64],
) -> f64 {
    let faa = f3(lam_ai, lam_ai, beta_a);
    if degenerate(faa) {
        return 0.0;
    }
    let fbb = f3(lam_bj, lam_bj, beta_b);
    if degenerate(fbb) {
        return c_bi(p_a, p_b, h_ac, h_bc, lam_ai, beta_a);
    }
    let f1a = f1(lam_ai, beta_a);
    let f1b = f1(lam_bj, beta_b);
    let ga = gain(h_ac, p_a);
    let gb = gain(h_bc, p_b);
    let k1 = fbb * f1a.sq();
    let k2 = fbb * (faa - f1a.sq());
    let k3 = faa * (fbb - f1b.sq());
    let k4 = faa * fbb;
    cap_ratio(ga * k1, ga * k2 + gb * k3 + k4)
}

/// `I(U_{a,i}; Y_c, U_{a,j} | U_{b,k})`.
#[allow(clippy::too_many_arguments)]
pub fn c_ci(
    p_a: f64,
    p_b: f64,
    h_ac: f64,
    h_bc: f64,
    lam_ai: &[f64],
    lam_aj: &[f64],
    lam_bk: &[f64],
    beta_a: &[f64],
    beta_b: &[f64],
) -> f64 {
    let fii = f3(lam_ai, lam_ai, beta_a);
    if degenerate(fii) {
        return 0.0;
    }
    let ga = gain(h_ac, p_a);
    let gb = gain(h_bc, p_b);
    let fkk = f3(lam_bk, lam_bk, beta_b);
    if degenerate(f3(lam_aj, lam_aj, beta_a)) {
        if degenerate(fkk) {
            return c_bi(p_a, p_b, h_ac, h_bc, lam_ai, beta_a);
        }
        return c_bm(p_a, p_b, h_ac, h_bc, lam_ai, lam_bk, beta_a, beta_b);
    }
    if degenerate(fkk) {
        return c_c_noise(ga, gb + Dd::from(1.0), lam_ai, lam_aj, beta_a);
    }
    let f1k = f1(lam_bk, beta_b);
    let fjj = f3(lam_aj, lam_aj, beta_a);
    let f1j = f1(lam_aj, beta_a);
    let f1i = f1(lam_ai, beta_a);
    let fij = f3(lam_ai, lam_aj, beta_a);
    let k1 = fkk * f1i.sq() * fjj + fkk * fij.sq() - fkk * fij * f1i * f1j * 2.0;
    let k2 = fij.sq() * (fkk - f1k.sq());
    let k3 = fij.sq() * fkk;
    let k4 = fii * fkk * (fjj - f1j.sq()) - k1;
    let k5 = fii * fjj * (fkk - f1k.sq()) - k2;
    let k6 = fii * fjj * fkk - k3;
    cap_ratio(ga * k1 + gb * k2 + k3, ga * k4 + gb * k5 + k6)
}

/// Product of the relay-to-terminal correlation factors
/// `(g₂/(g₂+1))·(g₁/(g₁+1))` with `g_i = |h_{r,i}|² P_r`.
pub fn pstar(h_r1: f64, h_r2: f64, p_r: f64) -> f64 {
    let g1 = h_r1 * h_r1 * p_r;
    let g2 = h_r2 * h_r2 * p_r;
    (g2 / (g2 + 1.0)) * (g1 / (g1 + 1.0))
}

/// Rate needed to convey the compression `Ŷ_1` of `Y_1` to a receiver that
/// already observes `Y_2`, i.e. `I(Y_1; Ŷ_1 | Y_2)` with both outputs driven
/// by the relay at power `p_r`.
pub fn c_compress(p_r: f64, h_r1: f64, h_r2: f64, p_yhat: f64, sigma: f64) -> Result<f64, KernelError> {
    let g1 = gain(h_r1, p_r);
    let g2 = gain(h_r2, p_r);
    let p_y = g1 + Dd::from(1.0);
    let (bound, s2) = coop_moments(p_yhat, sigma, p_y)?;
    if s2.hi() == 0.0 {
        return Ok(0.0);
    }
    // 1 − P** = (g₁ + g₂ + 1) / ((g₁ + 1)(g₂ + 1)), without the cancellation.
    let one = Dd::from(1.0);
    let rest = (g1 + g2 + one).hi() / ((g1 + one) * (g2 + one)).hi();
    Ok(cap_ratio(s2 * rest, bound - s2))
}
