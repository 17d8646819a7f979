use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::extract::{extract_ml, MlExtraction};
use super::retention::{eigenvalues, suggest_n_factors};
use super::rotate::{rotate_promax, rotate_varimax};
use crate::corr::CorrelationMatrix;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Rotation {
    None,
    Varimax,
    Promax,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FactorCount {
    Fixed(usize),
    /// Use the Kaiser count when it agrees with the scree elbow.
    Auto,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EfaConfig {
    pub n_factors: FactorCount,
    pub rotation: Rotation,
    pub promax_kappa: f64,
    pub max_iter: usize,
    pub tol: f64,
    pub min_loading: f64,
    pub cross_loading: f64,
    pub min_items_per_factor: usize,
}

impl Default for EfaConfig {
    fn default() -> Self {
        EfaConfig {
            n_factors: FactorCount::Auto,
            rotation: Rotation::Promax,
            promax_kappa: 4.0,
            max_iter: 1000,
            tol: 1e-9,
            min_loading: 0.32,
            cross_loading: 0.32,
            min_items_per_factor: 3,
        }
    }
}

impl EfaConfig {
    pub fn with_factors(k: usize) -> Self {
        EfaConfig {
            n_factors: FactorCount::Fixed(k),
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.min_loading > 0.0) || self.min_items_per_factor < 1 || !(self.tol > 0.0) {
            return Err(Error::InvalidInput(
                "min_loading and tol must be positive, min_items_per_factor at least 1".into(),
            ));
        }
        Ok(())
    }

    /// Resolve the factor count for `r`; `Auto` refuses when Kaiser and the
    /// scree elbow disagree.
    pub fn resolve_factors(&self, r: &CorrelationMatrix) -> Result<usize> {
        match self.n_factors {
            FactorCount::Fixed(k) => Ok(k),
            FactorCount::Auto => {
                let s = suggest_n_factors(r);
                if s.converged && s.kaiser > 0 {
                    Ok(s.kaiser)
                } else {
                    Err(Error::InvalidInput(format!(
                        "eigenvalue rule suggests {} factors but the scree elbow suggests {}; set the factor count explicitly",
                        s.kaiser, s.elbow
                    )))
                }
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "status", content = "factor", rename_all = "snake_case")]
pub enum Assignment {
    Factor(usize),
    LowLoading,
    CrossLoading,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VarianceAccounting {
    pub ss_loadings: Vec<f64>,
    pub proportion: Vec<f64>,
    pub cumulative: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FactorSolution {
    pub item_ids: Vec<String>,
    pub n_factors: usize,
    pub rotation: Rotation,
    #[serde(with = "crate::serde_matrix")]
    pub pattern: DMatrix<f64>,
    #[serde(with = "crate::serde_matrix")]
    pub phi: DMatrix<f64>,
    #[serde(with = "crate::serde_matrix")]
    pub structure: DMatrix<f64>,
    pub communalities: Vec<f64>,
    pub uniquenesses: Vec<f64>,
    pub eigenvalues: Vec<f64>,
    pub variance: VarianceAccounting,
    pub assignment: Vec<Assignment>,
    pub objective: f64,
    pub converged: bool,
    pub iterations: usize,
    pub heywood_items: Vec<String>,
}

impl FactorSolution {
    /// Items assigned to factor `f`, as positions.
    pub fn items_on(&self, f: usize) -> Vec<usize> {
        self.assignment
            .iter()
            .enumerate()
            .filter(|(_, a)| **a == Assignment::Factor(f))
            .map(|(i, _)| i)
            .collect()
    }

    /// Model-implied correlations `Λ Φ Λᵀ + Ψ`.
    pub fn implied(&self) -> DMatrix<f64> {
        let mut s = &self.pattern * &self.phi * self.pattern.transpose();
        for (j, u) in self.uniquenesses.iter().enumerate() {
            s[(j, j)] += u;
        }
        s
    }
}

/// Column sums of squared pattern loadings; proportions over the item count.
pub fn variance_accounting(pattern: &DMatrix<f64>) -> VarianceAccounting {
    let p = pattern.nrows() as f64;
    let ss_loadings: Vec<f64> = pattern.column_iter().map(|c| c.norm_squared()).collect();
    let proportion: Vec<f64> = ss_loadings.iter().map(|s| s / p).collect();
    let cumulative = proportion
        .iter()
        .scan(0.0, |acc, v| {
            *acc += v;
            Some(*acc)
        })
        .collect();
    VarianceAccounting {
        ss_loadings,
        proportion,
        cumulative,
    }
}

/// Assign each item to its dominant factor, or flag it.
pub fn assign_items(pattern: &DMatrix<f64>, config: &EfaConfig) -> Vec<Assignment> {
    pattern
        .row_iter()
        .map(|row| {
            let (best, best_abs) = row.iter().enumerate().map(|(f, v)| (f, v.abs())).fold(
                (0, f64::NEG_INFINITY),
                |acc, x| if x.1 > acc.1 { x } else { acc },
            );
            if best_abs < config.min_loading {
                Assignment::LowLoading
            } else if row
                .iter()
                .enumerate()
                .any(|(f, v)| f != best && v.abs() > config.cross_loading)
            {
                Assignment::CrossLoading
            } else {
                Assignment::Factor(best)
            }
        })
        .collect()
}

/// Order factors by descending SS loadings and reflect each so its pattern
/// column sums to a nonnegative value.
fn canonicalize(pattern: &mut DMatrix<f64>, phi: &mut DMatrix<f64>) {
    let k = pattern.ncols();
    let ss: Vec<f64> = pattern.column_iter().map(|c| c.norm_squared()).collect();
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&a, &b| ss[b].total_cmp(&ss[a]).then(a.cmp(&b)));
    let signs: Vec<f64> = order
        .iter()
        .map(|&f| {
            if pattern.column(f).sum() < 0.0 {
                -1.0
            } else {
                1.0
            }
        })
        .collect();
    let new_pattern =
        DMatrix::from_fn(pattern.nrows(), k, |i, f| pattern[(i, order[f])] * signs[f]);
    let new_phi = DMatrix::from_fn(k, k, |a, b| phi[(order[a], order[b])] * signs[a] * signs[b]);
    *pattern = new_pattern;
    *phi = new_phi;
}

/// Extract with maximum likelihood, rotate, canonicalize and summarize.
pub fn fit_efa(r: &CorrelationMatrix, config: &EfaConfig) -> Result<FactorSolution> {
    config.validate()?;
    let k = config.resolve_factors(r)?;
    let ml = extract_ml(r, k, config.max_iter, config.tol)?;
    solution_from_extraction(r, ml, config)
}

pub(crate) fn solution_from_extraction(
    r: &CorrelationMatrix,
    ml: MlExtraction,
    config: &EfaConfig,
) -> Result<FactorSolution> {
    let k = ml.loadings.ncols();
    let (mut pattern, mut phi) = match config.rotation {
        Rotation::None => (ml.loadings.clone(), DMatrix::identity(k, k)),
        Rotation::Varimax => (
            rotate_varimax(&ml.loadings, 1e-12, 1000).loadings,
            DMatrix::identity(k, k),
        ),
        Rotation::Promax => {
            let pm = rotate_promax(&ml.loadings, config.promax_kappa, 1e-12, 1000)?;
            (pm.pattern, pm.phi)
        }
    };
    canonicalize(&mut pattern, &mut phi);
    let structure = &pattern * &phi;
    let common = &pattern * &phi * pattern.transpose();
    let communalities = (0..r.p()).map(|j| common[(j, j)]).collect();
    let variance = variance_accounting(&pattern);
    let assignment = assign_items(&pattern, config);
    Ok(FactorSolution {
        item_ids: r.item_ids.clone(),
        n_factors: k,
        rotation: config.rotation,
        pattern,
        phi,
        structure,
        communalities,
        uniquenesses: ml.uniquenesses,
        eigenvalues: eigenvalues(r),
        variance,
        assignment,
        objective: ml.objective,
        converged: ml.converged,
        iterations: ml.iterations,
        heywood_items: ml.heywood.iter().map(|&j| r.item_ids[j].clone()).collect(),
    })
}
