//! Jointly Gaussian systems built from independent sources, and their
//! mutual informations by log-determinants.

use nalgebra::{DMatrix, SymmetricEigen};

use super::ValidateError;

/// Eigenvalues down to this are clipped to zero.
const PSD_SLACK: f64 = 1e-10;
/// Eigenvalues at or below this fraction of the largest count as zero.
const RANK_REL: f64 = 1e-12;
/// A variable whose residual, after projecting out the variables before
/// it, has at most this fraction of its norm counts as dependent.
const RESID_REL: f64 = 1e-6;

/// A linear combination of independent unit-variance sources.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Lin(Vec<f64>);

impl Lin {
    pub fn zero() -> Self {
        Self(Vec::new())
    }

    pub fn scale(&self, a: f64) -> Self {
        Self(self.0.iter().map(|v| v * a).collect())
    }

    pub fn add(&self, other: &Lin) -> Self {
        let n = self.0.len().max(other.0.len());
        Self((0..n).map(|i| self.0.get(i).unwrap_or(&0.0) + other.0.get(i).unwrap_or(&0.0)).collect())
    }

    /// `Σ a_i x_i`.
    pub fn combo(terms: &[(f64, &Lin)]) -> Self {
        terms.iter().fold(Lin::zero(), |acc, (a, x)| acc.add(&x.scale(*a)))
    }
}

/// Collects labeled linear combinations of fresh independent sources.
#[derive(Debug, Default)]
pub struct GaussBuilder {
    n_src: usize,
    vars: Vec<(String, Lin)>,
}

impl GaussBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    /// A fresh source independent of everything created so far.
    pub fn source(&mut self, variance: f64) -> Lin {
        let mut v = vec![0.0; self.n_src + 1];
        v[self.n_src] = variance.max(0.0).sqrt();
        self.n_src += 1;
        Lin(v)
    }

    pub fn label(&mut self, name: &str, x: &Lin) {
        self.vars.push((name.to_string(), x.clone()));
    }

    pub fn build(&self) -> Result<GaussSystem, ValidateError> {
        let n = self.vars.len();
        let mut cov = DMatrix::zeros(n, n);
        for i in 0..n {
            for j in 0..=i {
                let a = &self.vars[i].1 .0;
                let b = &self.vars[j].1 .0;
                let c: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
                cov[(i, j)] = c;
                cov[(j, i)] = c;
            }
        }
        let mut sys = GaussSystem::new(self.vars.iter().map(|(l, _)| l.clone()).collect(), cov)?;
        sys.factor = Some(DMatrix::from_fn(n, self.n_src, |i, j| *self.vars[i].1 .0.get(j).unwrap_or(&0.0)));
        Ok(sys)
    }
}

/// Covariance of labeled scalar jointly Gaussian variables.
#[derive(Debug, Clone)]
pub struct GaussSystem {
    labels: Vec<String>,
    cov: DMatrix<f64>,
    /// `cov = F Fᵀ` when the system was built from sources; determinants
    /// then come from `F` directly, which halves the conditioning loss.
    factor: Option<DMatrix<f64>>,
}

impl GaussSystem {
    /// Validates symmetry and PSD-ness; eigenvalues in `[-1e-10, 0)` are
    /// clipped to zero.
    pub fn new(labels: Vec<String>, cov: DMatrix<f64>) -> Result<Self, ValidateError> {
        let n = labels.len();
        if cov.nrows() != n || cov.ncols() != n {
            return Err(ValidateError::Shape { labels: n, rows: cov.nrows(), cols: cov.ncols() });
        }
        for (i, l) in labels.iter().enumerate() {
            if labels[..i].contains(l) {
                return Err(ValidateError::DuplicateLabel(l.clone()));
            }
        }
        let scale = cov.amax().max(1.0);
        for i in 0..n {
            for j in 0..i {
                if (cov[(i, j)] - cov[(j, i)]).abs() > 1e-12 * scale {
                    return Err(ValidateError::NotSymmetric);
                }
            }
        }
        let eig = SymmetricEigen::new(cov.clone());
        let min = eig.eigenvalues.min();
        if min < -PSD_SLACK {
            return Err(ValidateError::NotPsd(min));
        }
        let cov = if min < 0.0 {
            let clipped = eig.eigenvalues.map(|v| v.max(0.0));
            &eig.eigenvectors * DMatrix::from_diagonal(&clipped) * eig.eigenvectors.transpose()
        } else {
            cov
        };
        Ok(Self { labels, cov, factor: None })
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn cov(&self) -> &DMatrix<f64> {
        &self.cov
    }

    fn index(&self, names: &[&str]) -> Result<Vec<usize>, ValidateError> {
        names
            .iter()
            .map(|n| self.labels.iter().position(|l| l == n).ok_or_else(|| ValidateError::UnknownLabel(n.to_string())))
            .collect()
    }

    /// `(rank, log2 det)` of a sub-covariance, with dependent directions
    /// removed.
    fn entropy_part(&self, idx: &[usize]) -> (usize, f64) {
        match &self.factor {
            Some(f) => factor_part(f, idx),
            None => self.eigen_part(idx),
        }
    }

    fn eigen_part(&self, idx: &[usize]) -> (usize, f64) {
        let sub = DMatrix::from_fn(idx.len(), idx.len(), |i, j| self.cov[(idx[i], idx[j])]);
        let eig = SymmetricEigen::new(sub).eigenvalues;
        let top = eig.max().max(0.0);
        let mut rank = 0;
        let mut log = 0.0;
        for &v in eig.iter() {
            if v > RANK_REL * top && v > 0.0 {
                rank += 1;
                log += v.log2();
            }
        }
        (rank, log)
    }
}

/// Gram–Schmidt with one reorthogonalization pass over the factor rows, in
/// the order given.
fn factor_part(f: &DMatrix<f64>, idx: &[usize]) -> (usize, f64) {
    let mut basis: Vec<Vec<f64>> = Vec::new();
    let mut log = 0.0;
    for &i in idx {
        let v: Vec<f64> = f.row(i).iter().copied().collect();
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        let mut r = v;
        for _ in 0..2 {
            for q in &basis {
                let c: f64 = r.iter().zip(q).map(|(a, b)| a * b).sum();
                r.iter_mut().zip(q).for_each(|(a, b)| *a -= c * b);
            }
        }
        let rn = r.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 0.0 && rn > RESID_REL * norm {
            log += 2.0 * rn.log2();
            basis.push(r.iter().map(|x| x / rn).collect());
        }
    }
    (basis.len(), log)
}

/// `I(A; B)` in bits, complex convention (no ½ factor). Degenerate
/// directions inside `A` or `B` are dropped; a deterministic relation
/// between `A` and `B` gives `+∞`.
pub fn mi_logdet(sys: &GaussSystem, a: &[&str], b: &[&str]) -> Result<f64, ValidateError> {
    if a.is_empty() || b.is_empty() {
        return Err(ValidateError::EmptySet);
    }
    let ia = sys.index(a)?;
    let ib = sys.index(b)?;
    if ia.iter().any(|i| ib.contains(i)) {
        return Err(ValidateError::Overlap);
    }
    // B first, so that its own terms cancel exactly against `lb`.
    let iab: Vec<usize> = ib.iter().chain(&ia).copied().collect();
    let (ra, la) = sys.entropy_part(&ia);
    let (rb, lb) = sys.entropy_part(&ib);
    let (rab, lab) = sys.entropy_part(&iab);
    if rab < ra + rb {
        return Ok(f64::INFINITY);
    }
    Ok((la + lb - lab).max(0.0))
}

/// `I(A; B | C)` via the chain rule `I(A; B, C) − I(A; C)`.
pub fn cond_mi_logdet(sys: &GaussSystem, a: &[&str], b: &[&str], c: &[&str]) -> Result<f64, ValidateError> {
    if c.is_empty() {
        return mi_logdet(sys, a, b);
    }
    let bc: Vec<&str> = b.iter().chain(c).copied().collect();
    let joint = mi_logdet(sys, a, &bc)?;
    let side = mi_logdet(sys, a, c)?;
    if side.is_infinite() {
        return Err(ValidateError::InfiniteConditioning);
    }
    Ok((joint - side).max(0.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn awgn(p: f64) -> GaussSystem {
        let mut g = GaussBuilder::new();
        let x = g.source(p);
        let z = g.source(1.0);
        g.label("X", &x);
        g.label("Y", &x.add(&z));
        g.build().unwrap()
    }

    #[test]
    fn scalar_awgn_one_bit() {
        assert!((mi_logdet(&awgn(1.0), &["X"], &["Y"]).unwrap() - 1.0).abs() < 1e-12);
        assert!((mi_logdet(&awgn(3.0), &["Y"], &["X"]).unwrap() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn independent_is_zero() {
        let mut g = GaussBuilder::new();
        let a = g.source(2.0);
        let b = g.source(5.0);
        g.label("A", &a);
        g.label("B", &b);
        assert!(mi_logdet(&g.build().unwrap(), &["A"], &["B"]).unwrap().abs() < 1e-12);
    }

    #[test]
    fn independent_conditioning_is_neutral() {
        let mut g = GaussBuilder::new();
        let x = g.source(1.7);
        let z = g.source(1.0);
        let w = g.source(0.4);
        g.label("X", &x);
        g.label("Y", &x.scale(0.8).add(&z));
        g.label("W", &w);
        let sys = g.build().unwrap();
        let plain = mi_logdet(&sys, &["X"], &["Y"]).unwrap();
        let cond = cond_mi_logdet(&sys, &["X"], &["Y"], &["W"]).unwrap();
        assert!((plain - cond).abs() < 1e-12);
    }

    #[test]
    fn degenerate_and_deterministic() {
        let mut g = GaussBuilder::new();
        let x = g.source(1.0);
        g.label("X", &x);
        g.label("X2", &x.scale(2.0));
        g.label("K", &Lin::zero());
        let sys = g.build().unwrap();
        assert_eq!(mi_logdet(&sys, &["X"], &["X2"]).unwrap(), f64::INFINITY);
        assert_eq!(mi_logdet(&sys, &["X"], &["K"]).unwrap(), 0.0);
    }

    #[test]
    fn rejects_bad_input() {
        let sys = awgn(1.0);
        assert_eq!(mi_logdet(&sys, &["X"], &["X"]).unwrap_err(), ValidateError::Overlap);
        assert_eq!(mi_logdet(&sys, &[], &["X"]).unwrap_err(), ValidateError::EmptySet);
        assert!(matches!(mi_logdet(&sys, &["Q"], &["X"]), Err(ValidateError::UnknownLabel(_))));
        let bad = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]);
        assert!(matches!(GaussSystem::new(vec!["a".into(), "b".into()], bad), Err(ValidateError::NotPsd(_))));
    }
}
