//! Maximum-likelihood factor extraction.
//!
//! The loadings are profiled out: for fixed uniquenesses `ψ`, the optimal
//! loadings come from the leading eigenpairs of `Ψ^{-1/2} R Ψ^{-1/2}`, and
//! the discrepancy reduces to `Σ_{j>k} (e_j - ln e_j - 1)` over the trailing
//! eigenvalues. That one-dimensional-per-item problem is minimized over `ψ`
//! with bounded quasi-Newton steps.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::corr::CorrelationMatrix;
use crate::error::{Error, Result};
use crate::linalg;
use crate::optim::{self, Bounds, Objective};

/// Lower bound on uniquenesses; solutions touching it are Heywood cases.
pub const HEYWOOD_BOUND: f64 = 0.005;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlExtraction {
    #[serde(with = "crate::serde_matrix")]
    pub loadings: DMatrix<f64>,
    pub uniquenesses: Vec<f64>,
    /// ML discrepancy at the solution.
    pub objective: f64,
    pub converged: bool,
    pub iterations: usize,
    /// Items whose uniqueness sits on the lower bound.
    pub heywood: Vec<usize>,
}

/// Degrees of freedom of a k-factor model on p items.
pub fn efa_df(p: usize, k: usize) -> i64 {
    let (p, k) = (p as i64, k as i64);
    ((p - k) * (p - k) - p - k) / 2
}

struct Profile<'a> {
    r: &'a DMatrix<f64>,
    k: usize,
}

impl Profile<'_> {
    fn scaled_eigen(&self, psi: &DVector<f64>) -> (DVector<f64>, DMatrix<f64>) {
        let p = self.r.nrows();
        let inv_sqrt: Vec<f64> = psi.iter().map(|v| 1.0 / v.sqrt()).collect();
        let scaled = DMatrix::from_fn(p, p, |i, j| self.r[(i, j)] * inv_sqrt[i] * inv_sqrt[j]);
        linalg::sym_eigen_desc(&scaled)
    }

    fn loadings(&self, psi: &DVector<f64>) -> DMatrix<f64> {
        let (vals, vecs) = self.scaled_eigen(psi);
        let p = self.r.nrows();
        DMatrix::from_fn(p, self.k, |i, f| {
            psi[i].sqrt() * vecs[(i, f)] * (vals[f] - 1.0).max(0.0).sqrt()
        })
    }
}

impl Objective for Profile<'_> {
    fn value(&self, psi: &DVector<f64>) -> Option<f64> {
        if psi.iter().any(|&v| !(v > 0.0)) {
            return None;
        }
        let (vals, _) = self.scaled_eigen(psi);
        let mut f = 0.0;
        for &e in vals.iter().skip(self.k) {
            if e <= 0.0 {
                return None;
            }
            f += e - e.ln() - 1.0;
        }
        Some(f)
    }

    fn gradient(&self, psi: &DVector<f64>) -> Option<DVector<f64>> {
        if psi.iter().any(|&v| !(v > 0.0)) {
            return None;
        }
        let lam = self.loadings(psi);
        let p = self.r.nrows();
        Some(DVector::from_fn(p, |j, _| {
            let h2: f64 = lam.row(j).iter().map(|v| v * v).sum();
            (h2 + psi[j] - self.r[(j, j)]) / (psi[j] * psi[j])
        }))
    }
}

/// Fit a `k`-factor model by maximum likelihood. Starting uniquenesses are
/// `1 - SMC`.
pub fn extract_ml(
    r: &CorrelationMatrix,
    k: usize,
    max_iter: usize,
    tol: f64,
) -> Result<MlExtraction> {
    let p = r.p();
    if k == 0 || k >= p {
        return Err(Error::InvalidInput(format!(
            "factor count {k} must lie in 1..{p}"
        )));
    }
    let df = efa_df(p, k);
    if df < 0 {
        return Err(Error::OverParameterized(df));
    }
    let inv = linalg::spd_inverse(&r.values)?;
    let start = DVector::from_fn(p, |j, _| (1.0 / inv[(j, j)]).clamp(HEYWOOD_BOUND, 1.0));
    let bounds = Bounds {
        lower: DVector::from_element(p, HEYWOOD_BOUND),
        upper: DVector::from_element(p, 1.0),
    };
    let profile = Profile { r: &r.values, k };
    let opts = optim::Options {
        max_iter,
        gtol: tol,
        ..Default::default()
    };
    let min = optim::minimize(&profile, start, &bounds, opts)
        .ok_or_else(|| Error::InvalidInput("starting uniquenesses infeasible".into()))?;
    let loadings = profile.loadings(&min.x);
    let heywood = (0..p)
        .filter(|&j| min.x[j] <= HEYWOOD_BOUND * (1.0 + 1e-9))
        .collect();
    Ok(MlExtraction {
        loadings,
        uniquenesses: min.x.iter().copied().collect(),
        objective: min.value,
        converged: min.converged,
        iterations: min.iterations,
        heywood,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_residual_one_factor() {
        let lam = [0.8, 0.7, 0.6];
        let v = DMatrix::from_fn(3, 3, |i, j| if i == j { 1.0 } else { lam[i] * lam[j] });
        let r = CorrelationMatrix::new(vec!["a".into(), "b".into(), "c".into()], v, None).unwrap();
        let fit = extract_ml(&r, 1, 500, 1e-10).unwrap();
        assert!(fit.converged);
        assert!(fit.objective.abs() < 1e-10);
        let sign = fit.loadings[(0, 0)].signum();
        for i in 0..3 {
            assert!((sign * fit.loadings[(i, 0)] - lam[i]).abs() < 1e-5);
        }
    }

    #[test]
    fn df_guard() {
        assert_eq!(efa_df(8, 2), 13);
        assert_eq!(efa_df(4, 2), -1);
        let r = CorrelationMatrix::new(
            (0..4).map(|i| format!("x{i}")).collect(),
            DMatrix::from_fn(4, 4, |i, j| if i == j { 1.0 } else { 0.3 }),
            None,
        )
        .unwrap();
        assert!(matches!(
            extract_ml(&r, 2, 100, 1e-8),
            Err(Error::OverParameterized(-1))
        ));
    }
}
