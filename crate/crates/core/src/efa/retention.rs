use serde::{Deserialize, Serialize};

use crate::corr::CorrelationMatrix;
use crate::linalg;

/// Full spectrum of `r`, descending.
pub fn eigenvalues(r: &CorrelationMatrix) -> Vec<f64> {
    linalg::sym_eigenvalues_desc(&r.values)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FactorCountSuggestion {
    /// Eigenvalues strictly greater than one.
    pub kaiser: usize,
    /// Scree elbow from the acceleration (second-difference) rule.
    pub elbow: usize,
    pub converged: bool,
}

/// Kaiser count and scree elbow for a correlation matrix.
pub fn suggest_n_factors(r: &CorrelationMatrix) -> FactorCountSuggestion {
    suggest_from_eigenvalues(&eigenvalues(r))
}

pub fn suggest_from_eigenvalues(ev: &[f64]) -> FactorCountSuggestion {
    // ties at exactly 1 (identity) must not count
    let kaiser = ev.iter().filter(|&&e| e > 1.0 + 1e-10).count();
    let elbow = acceleration_elbow(ev);
    FactorCountSuggestion {
        kaiser,
        elbow,
        converged: kaiser == elbow,
    }
}

/// Number of components before the point of maximum acceleration
/// `e[i+1] - 2 e[i] + e[i-1]`; zero when the scree is flat.
pub fn acceleration_elbow(ev: &[f64]) -> usize {
    if ev.len() < 3 {
        return 0;
    }
    let mut best = (0usize, f64::NEG_INFINITY);
    for i in 1..ev.len() - 1 {
        let acc = ev[i + 1] - 2.0 * ev[i] + ev[i - 1];
        if acc > best.1 + 1e-12 {
            best = (i, acc);
        }
    }
    if best.1 <= 1e-10 {
        return 0;
    }
    // `best.0` is the 0-based index of the elbow point, i.e. the number of
    // components that precede it
    best.0
}

/// Two-column scree export: `component,eigenvalue`.
pub fn scree_csv(ev: &[f64]) -> String {
    let mut out = String::from("component,eigenvalue\n");
    for (i, e) in ev.iter().enumerate() {
        out.push_str(&format!("{},{:.10}\n", i + 1, e));
    }
    out
}
