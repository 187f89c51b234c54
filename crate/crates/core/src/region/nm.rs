//! Box-projected Nelder–Mead minimizer with dimension-adaptive coefficients.

#[derive(Debug, Clone)]
pub struct NmResult {
    pub x: Vec<f64>,
    pub fx: f64,
    pub iterations: usize,
}

fn project(x: &mut [f64], lo: &[f64], hi: &[f64]) {
    for ((v, &l), &h) in x.iter_mut().zip(lo).zip(hi) {
        *v = v.clamp(l, h);
    }
}

/// Minimizes `f` from `x0` with an axis-aligned initial simplex of size
/// `step`. Every trial point is clamped into `[lo, hi]`. Stops after
/// `max_iter` iterations or once the simplex's function spread is at most
/// `ftol`.
pub fn minimize<F: FnMut(&[f64]) -> f64>(
    f: &mut F,
    x0: &[f64],
    step: &[f64],
    lo: &[f64],
    hi: &[f64],
    max_iter: usize,
    ftol: f64,
) -> NmResult {
    let n = x0.len();
    let mut start = x0.to_vec();
    project(&mut start, lo, hi);
    if n == 0 {
        let fx = f(&start);
        return NmResult { x: start, fx, iterations: 0 };
    }
    let nf = n as f64;
    let (alpha, gamma, rho, sigma) = if n >= 2 {
        (1.0, 1.0 + 2.0 / nf, 0.75 - 0.5 / nf, 1.0 - 1.0 / nf)
    } else {
        (1.0, 2.0, 0.5, 0.5)
    };

    let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(n + 1);
    let f0 = f(&start);
    simplex.push((start.clone(), f0));
    for i in 0..n {
        let mut v = start.clone();
        v[i] += step[i];
        if v[i] > hi[i] {
            v[i] = start[i] - step[i];
        }
        project(&mut v, lo, hi);
        let fv = f(&v);
        simplex.push((v, fv));
    }

    let mut iterations = 0;
    while iterations < max_iter {
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        let best = simplex[0].1;
        let worst = simplex[n].1;
        if (worst - best).abs() <= ftol {
            break;
        }
        iterations += 1;

        let mut centroid = vec![0.0; n];
        for (v, _) in &simplex[..n] {
            for (c, x) in centroid.iter_mut().zip(v) {
                *c += x / nf;
            }
        }
        let along = |t: f64| -> Vec<f64> {
            let mut p: Vec<f64> = centroid.iter().zip(&simplex[n].0).map(|(c, w)| c + t * (c - w)).collect();
            project(&mut p, lo, hi);
            p
        };

        let xr = along(alpha);
        let fr = f(&xr);
        if fr < simplex[0].1 {
            let xe = along(alpha * gamma);
            let fe = f(&xe);
            simplex[n] = if fe < fr { (xe, fe) } else { (xr, fr) };
            continue;
        }
        if fr < simplex[n - 1].1 {
            simplex[n] = (xr, fr);
            continue;
        }
        let (xc, fc) = if fr < worst {
            let xc = along(alpha * rho);
            let fc = f(&xc);
            (xc, fc)
        } else {
            let xc = along(-rho);
            let fc = f(&xc);
            (xc, fc)
        };
        if fc < fr.min(worst) {
            simplex[n] = (xc, fc);
            continue;
        }
        let x_best = simplex[0].0.clone();
        for (v, fv) in simplex.iter_mut().skip(1) {
            for (x, b) in v.iter_mut().zip(&x_best) {
                *x = b + sigma * (*x - b);
            }
            *fv = f(v);
        }
    }
    simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
    let (x, fx) = simplex.swap_remove(0);
    NmResult { x, fx, iterations }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quadratic_bowl() {
        let mut f = |x: &[f64]| (x[0] - 1.0).powi(2) + 3.0 * (x[1] + 0.5).powi(2);
        let r = minimize(&mut f, &[0.0, 0.0], &[0.5, 0.5], &[-5.0; 2], &[5.0; 2], 500, 1e-14);
        assert!((r.x[0] - 1.0).abs() < 1e-5 && (r.x[1] + 0.5).abs() < 1e-5);
    }

    #[test]
    fn respects_box() {
        let mut f = |x: &[f64]| -x[0] - x[1];
        let r = minimize(&mut f, &[0.0, 0.0], &[0.5, 0.5], &[-1.0; 2], &[1.0; 2], 500, 1e-12);
        assert!(r.x.iter().all(|v| (-1.0..=1.0).contains(v)));
        assert!((r.fx + 2.0).abs() < 1e-6);
    }

    #[test]
    fn rosenbrock() {
        let mut f = |x: &[f64]| 100.0 * (x[1] - x[0] * x[0]).powi(2) + (1.0 - x[0]).powi(2);
        let r = minimize(&mut f, &[-1.2, 1.0], &[0.5, 0.5], &[-5.0; 2], &[5.0; 2], 5000, 1e-16);
        assert!(r.fx < 1e-8);
    }

    #[test]
    fn zero_dimensional() {
        let mut f = |_: &[f64]| 3.0;
        let r = minimize(&mut f, &[], &[], &[], &[], 10, 1e-9);
        assert_eq!(r.fx, 3.0);
    }
}
