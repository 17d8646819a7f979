use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::model::{CfaModel, ParamKind};
use crate::corr::{chi_square_sf, CorrelationMatrix};
use crate::error::{Error, Result};
use crate::ingest::RatingMatrix;
use crate::linalg;
use crate::optim::{minimize, Bounds, Objective, Options};

/// Lower bound on uniquenesses; estimates reaching it are flagged.
pub const UNIQUENESS_BOUND: f64 = 1e-3;

/// Sample covariance (or correlation) matrix with its case count.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleMoments {
    pub item_ids: Vec<String>,
    #[serde(with = "crate::serde_matrix")]
    pub cov: DMatrix<f64>,
    pub n: usize,
    /// A correlation matrix analyzed as if it were a covariance matrix.
    pub is_correlation: bool,
}

impl SampleMoments {
    pub fn from_correlation(r: &CorrelationMatrix, n: usize) -> Self {
        SampleMoments {
            item_ids: r.item_ids.clone(),
            cov: r.values.clone(),
            n,
            is_correlation: true,
        }
    }

    /// Unbiased (n - 1) covariance of complete data.
    pub fn from_data(data: &RatingMatrix) -> Result<Self> {
        let n = data.n();
        if n < 2 {
            return Err(Error::InvalidInput(
                "covariance needs at least 2 cases".into(),
            ));
        }
        let means = data.column_means();
        let centered = DMatrix::from_fn(n, data.p(), |i, j| data.values[(i, j)] - means[j]);
        let cov = centered.transpose() * &centered / (n as f64 - 1.0);
        for j in 0..data.p() {
            if cov[(j, j)] <= 0.0 {
                return Err(Error::ZeroVariance(data.item_ids[j].clone()));
            }
        }
        Ok(SampleMoments {
            item_ids: data.item_ids.clone(),
            cov,
            n,
            is_correlation: false,
        })
    }

    /// Reorder to `items`, failing on any unknown id.
    pub fn reordered(&self, items: &[String]) -> Result<SampleMoments> {
        let pos: Vec<usize> = items
            .iter()
            .map(|id| {
                self.item_ids.iter().position(|x| x == id).ok_or_else(|| {
                    Error::InvalidInput(format!("item `{id}` missing from the sample matrix"))
                })
            })
            .collect::<Result<_>>()?;
        Ok(SampleMoments {
            item_ids: items.to_vec(),
            cov: linalg::principal_submatrix(&self.cov, &pos),
            n: self.n,
            is_correlation: self.is_correlation,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Multiplier {
    NMinusOne,
    N,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CfaOptions {
    pub multiplier: Multiplier,
    pub max_iter: usize,
    pub gtol: f64,
}

impl Default for CfaOptions {
    fn default() -> Self {
        CfaOptions {
            multiplier: Multiplier::NMinusOne,
            max_iter: 2000,
            gtol: 1e-9,
        }
    }
}

impl CfaOptions {
    pub fn scale(&self, n: usize) -> f64 {
        match self.multiplier {
            Multiplier::NMinusOne => n as f64 - 1.0,
            Multiplier::N => n as f64,
        }
    }
}

/// ML discrepancy `ln|Σ| + tr(SΣ⁻¹) - ln|S| - p` over the free parameters.
pub struct Discrepancy<'a> {
    pub model: &'a CfaModel,
    pub s: &'a DMatrix<f64>,
    pub log_det_s: f64,
}

impl<'a> Discrepancy<'a> {
    pub fn new(model: &'a CfaModel, s: &'a DMatrix<f64>) -> Result<Self> {
        let log_det_s = linalg::spd_log_det(s).ok_or(Error::NotPositiveDefinite)?;
        Ok(Discrepancy {
            model,
            s,
            log_det_s,
        })
    }

    fn parts(&self, theta: &DVector<f64>) -> Option<(DMatrix<f64>, f64)> {
        let sigma = self.model.implied(theta);
        let chol = sigma.clone().cholesky()?;
        let log_det = 2.0 * chol.l().diagonal().iter().map(|d| d.ln()).sum::<f64>();
        let inv = chol.inverse();
        let f = log_det + (self.s * &inv).trace() - self.log_det_s - self.s.nrows() as f64;
        Some((inv, f))
    }
}

impl Objective for Discrepancy<'_> {
    fn value(&self, theta: &DVector<f64>) -> Option<f64> {
        self.parts(theta).map(|(_, f)| f)
    }

    fn gradient(&self, theta: &DVector<f64>) -> Option<DVector<f64>> {
        let (inv, _) = self.parts(theta)?;
        let sigma = self.model.implied(theta);
        // dF = tr(G dΣ) with G = Σ⁻¹(Σ - S)Σ⁻¹
        let g = &inv * (&sigma - self.s) * &inv;
        let (lam, phi, _) = self.model.matrices(theta);
        let lp = &lam * &phi;
        let gl = &g * &lam;
        Some(DVector::from_iterator(
            self.model.n_free(),
            self.model.params.iter().map(|param| match param.kind {
                ParamKind::Loading { item, factor } => 2.0 * (&g * lp.column(factor))[item],
                ParamKind::FactorVariance { factor } => lam.column(factor).dot(&gl.column(factor)),
                ParamKind::FactorCovariance { a, b } => 2.0 * lam.column(a).dot(&gl.column(b)),
                ParamKind::Uniqueness { item } => g[(item, item)],
            }),
        ))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub label: String,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitIndices {
    pub cfi: f64,
    pub tli: f64,
    pub rmsea: f64,
    pub srmr: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NaiveBlock {
    pub t: f64,
    pub df: i64,
    pub p: f64,
    pub baseline_t: f64,
    pub baseline_df: i64,
    /// `None` when the baseline statistic does not exceed its df.
    pub cfi: Option<f64>,
    pub tli: Option<f64>,
    pub rmsea: f64,
    pub srmr: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RobustBlock {
    pub scaling_factor: f64,
    pub baseline_scaling_factor: f64,
    pub t_scaled: f64,
    pub p: f64,
    pub baseline_t_scaled: f64,
    pub cfi: Option<f64>,
    pub tli: Option<f64>,
    pub rmsea: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StandardizedLoading {
    pub item: String,
    pub factor: String,
    pub estimate: f64,
    /// Unit factor variance.
    pub std_lv: f64,
    /// Unit factor and item variance.
    pub std_all: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardized {
    pub loadings: Vec<StandardizedLoading>,
    #[serde(with = "crate::serde_matrix")]
    pub factor_correlations: DMatrix<f64>,
}

impl Standardized {
    /// Completely standardized loadings of the items on factor `f`.
    pub fn factor_loadings(&self, factor: &str) -> Vec<f64> {
        self.loadings
            .iter()
            .filter(|l| l.factor == factor)
            .map(|l| l.std_all)
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CfaFit {
    pub model: CfaModel,
    pub n: usize,
    pub multiplier: Multiplier,
    pub correlation_input: bool,
    pub estimates: Vec<Estimate>,
    #[serde(skip)]
    pub theta: DVector<f64>,
    #[serde(with = "crate::serde_matrix")]
    pub sample: DMatrix<f64>,
    #[serde(with = "crate::serde_matrix")]
    pub implied: DMatrix<f64>,
    pub fmin: f64,
    pub baseline_fmin: f64,
    #[serde(skip)]
    pub baseline_theta: DVector<f64>,
    pub naive: NaiveBlock,
    pub robust: Option<RobustBlock>,
    pub standardized: Option<Standardized>,
    pub converged: bool,
    pub iterations: usize,
    pub gradient_max: f64,
    pub heywood_items: Vec<String>,
}

impl CfaFit {
    pub fn df(&self) -> i64 {
        self.naive.df
    }

    /// Standardized residual matrix `(s_ij - σ_ij)/√(s_ii s_jj)`.
    pub fn standardized_residuals(&self) -> DMatrix<f64> {
        standardized_residuals(&self.sample, &self.implied)
    }
}

pub fn standardized_residuals(s: &DMatrix<f64>, sigma: &DMatrix<f64>) -> DMatrix<f64> {
    DMatrix::from_fn(s.nrows(), s.ncols(), |i, j| {
        (s[(i, j)] - sigma[(i, j)]) / (s[(i, i)] * s[(j, j)]).sqrt()
    })
}

/// Root mean square of the standardized residuals over the unique entries.
pub fn srmr(residuals: &DMatrix<f64>) -> f64 {
    let idx = linalg::vech_indices(residuals.nrows());
    let ss: f64 = idx.iter().map(|&(i, j)| residuals[(i, j)].powi(2)).sum();
    (ss / idx.len() as f64).sqrt()
}

pub fn rmsea(t: f64, df: i64, n: usize) -> f64 {
    if df <= 0 {
        return 0.0;
    }
    ((t - df as f64).max(0.0) / (df as f64 * (n as f64 - 1.0))).sqrt()
}

/// CFI and TLI against the baseline; errors when the baseline statistic
/// does not exceed its degrees of freedom.
pub fn incremental_indices(t: f64, df: i64, t_base: f64, df_base: i64) -> Result<(f64, f64)> {
    if df_base <= 0 || t_base <= df_base as f64 {
        return Err(Error::BaselineUndefined);
    }
    let (dff, dfb) = (df as f64, df_base as f64);
    let num = (t - dff).max(0.0);
    let den = (t_base - dfb).max(t - dff).max(0.0);
    let cfi = if den > 0.0 { 1.0 - num / den } else { 1.0 };
    let tli = if df > 0 {
        let rb = t_base / dfb;
        ((rb - t / dff) / (rb - 1.0)).min(1.0)
    } else {
        1.0
    };
    Ok((cfi, tli))
}

pub fn fit_indices(
    t: f64,
    df: i64,
    t_base: f64,
    df_base: i64,
    n: usize,
    residuals: &DMatrix<f64>,
) -> Result<FitIndices> {
    let (cfi, tli) = incremental_indices(t, df, t_base, df_base)?;
    Ok(FitIndices {
        cfi,
        tli,
        rmsea: rmsea(t, df, n),
        srmr: srmr(residuals),
    })
}

struct RawFit {
    theta: DVector<f64>,
    fmin: f64,
    converged: bool,
    iterations: usize,
    gradient_max: f64,
}

fn minimize_discrepancy(model: &CfaModel, s: &DMatrix<f64>, opts: &CfaOptions) -> Result<RawFit> {
    let obj = Discrepancy::new(model, s)?;
    let q = model.n_free();
    let mut lower = DVector::from_element(q, f64::NEG_INFINITY);
    let upper = DVector::from_element(q, f64::INFINITY);
    for (i, param) in model.params.iter().enumerate() {
        match param.kind {
            ParamKind::Uniqueness { .. } => lower[i] = UNIQUENESS_BOUND,
            ParamKind::FactorVariance { .. } => lower[i] = 1e-6,
            _ => {}
        }
    }
    let bounds = Bounds { lower, upper };
    let x0 = model.start_values(s);
    let options = Options {
        max_iter: opts.max_iter,
        gtol: opts.gtol,
        ftol: 1e-15,
    };
    let m = minimize(&obj, x0, &bounds, options).ok_or_else(|| {
        Error::InvalidInput("start values give a non-positive-definite implied matrix".into())
    })?;
    let gradient_max = (0..q)
        .filter(|i| !m.at_bound.contains(i))
        .fold(0.0f64, |acc, i| acc.max(m.gradient[i].abs()));
    Ok(RawFit {
        theta: m.x,
        fmin: m.value.max(0.0),
        converged: m.converged,
        iterations: m.iterations,
        gradient_max,
    })
}

/// Normal-theory ML fit of `model` to `sample`, with the independence
/// baseline fitted by the same optimizer.
pub fn fit_ml(model: &CfaModel, sample: &SampleMoments, opts: &CfaOptions) -> Result<CfaFit> {
    let sample = sample.reordered(&model.items)?;
    let p = model.p();
    if sample.n <= p {
        return Err(Error::InvalidInput(format!(
            "CFA needs n > p (n = {}, p = {p})",
            sample.n
        )));
    }
    let df = model.df();
    if df < 0 {
        return Err(Error::OverParameterized(df));
    }
    let s = &sample.cov;
    let fit = minimize_discrepancy(model, s, opts)?;
    let baseline = CfaModel::independence(&model.items);
    let base = minimize_discrepancy(&baseline, s, opts)?;

    let scale = opts.scale(sample.n);
    let t = scale * fit.fmin;
    let t_base = scale * base.fmin;
    let implied = model.implied(&fit.theta);
    let residuals = standardized_residuals(s, &implied);
    let incremental = incremental_indices(t, df, t_base, baseline.df()).ok();
    let p_value = if df > 0 {
        chi_square_sf(t, df as u64)?
    } else {
        1.0
    };

    let heywood_items = model
        .params
        .iter()
        .zip(fit.theta.iter())
        .filter_map(|(param, &v)| match param.kind {
            ParamKind::Uniqueness { item } if v <= UNIQUENESS_BOUND * (1.0 + 1e-9) => {
                Some(model.items[item].clone())
            }
            _ => None,
        })
        .collect();

    let mut out = CfaFit {
        model: model.clone(),
        n: sample.n,
        multiplier: opts.multiplier,
        correlation_input: sample.is_correlation,
        estimates: model
            .params
            .iter()
            .zip(fit.theta.iter())
            .map(|(param, &value)| Estimate {
                label: param.label.clone(),
                value,
            })
            .collect(),
        theta: fit.theta,
        sample: s.clone(),
        implied,
        fmin: fit.fmin,
        baseline_fmin: base.fmin,
        baseline_theta: base.theta,
        naive: NaiveBlock {
            t,
            df,
            p: p_value,
            baseline_t: t_base,
            baseline_df: baseline.df(),
            cfi: incremental.map(|x| x.0),
            tli: incremental.map(|x| x.1),
            rmsea: rmsea(t, df, sample.n),
            srmr: srmr(&residuals),
        },
        robust: None,
        standardized: None,
        converged: fit.converged && base.converged,
        iterations: fit.iterations,
        gradient_max: fit.gradient_max,
        heywood_items,
    };
    out.standardized = standardize(&out).ok();
    Ok(out)
}

/// Rescale to unit factor variances (`std_lv`) and additionally unit
/// model-implied item variances (`std_all`).
pub fn standardize(fit: &CfaFit) -> Result<Standardized> {
    let model = &fit.model;
    let (lam, phi, _) = model.matrices(&fit.theta);
    let k = model.k();
    for f in 0..k {
        if !(phi[(f, f)] > 0.0) {
            return Err(Error::NonpositiveVariance(model.factors[f].clone()));
        }
    }
    for j in 0..model.p() {
        if !(fit.implied[(j, j)] > 0.0) {
            return Err(Error::NonpositiveVariance(model.items[j].clone()));
        }
    }
    let sd: Vec<f64> = (0..k).map(|f| phi[(f, f)].sqrt()).collect();
    let loadings = model
        .loading_map
        .iter()
        .enumerate()
        .map(|(j, &f)| {
            let est = lam[(j, f)];
            let std_lv = est * sd[f];
            StandardizedLoading {
                item: model.items[j].clone(),
                factor: model.factors[f].clone(),
                estimate: est,
                std_lv,
                std_all: std_lv / fit.implied[(j, j)].sqrt(),
            }
        })
        .collect();
    let factor_correlations = DMatrix::from_fn(k, k, |a, b| phi[(a, b)] / (sd[a] * sd[b]));
    Ok(Standardized {
        loadings,
        factor_correlations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cfa::model::{build_cfa, Identification, ModelSpec};
    use std::collections::BTreeMap;

    fn ids(p: usize) -> Vec<String> {
        (1..=p).map(|i| format!("i{i}")).collect()
    }

    fn spec(p: usize, first: usize) -> ModelSpec {
        ModelSpec {
            loadings: ids(p)
                .into_iter()
                .enumerate()
                .map(|(j, id)| (id, if j < first { "F1".into() } else { "F2".into() }))
                .collect(),
            markers: BTreeMap::new(),
        }
    }

    #[test]
    fn zero_residual_recovery() {
        let model = build_cfa(&ids(6), &spec(6, 3), Identification::Marker).unwrap();
        // λ (non-marker) 0.9, 1.1, 0.8, 1.2; φ 0.64, 0.49, 0.2; ψ 0.36 ...
        let theta0 = DVector::from_vec(vec![
            0.9, 1.1, 0.8, 1.2, 0.64, 0.49, 0.2, 0.36, 0.4, 0.3, 0.5, 0.45, 0.35,
        ]);
        let s = model.implied(&theta0);
        let sample = SampleMoments {
            item_ids: ids(6),
            cov: s,
            n: 500,
            is_correlation: false,
        };
        let fit = fit_ml(&model, &sample, &CfaOptions::default()).unwrap();
        assert!(fit.converged);
        assert!(fit.naive.t < 1e-8, "T = {}", fit.naive.t);
        assert!((&fit.theta - &theta0).amax() < 1e-4);
        assert!(fit.naive.rmsea == 0.0);
        assert_eq!(fit.naive.cfi, Some(1.0));
    }

    #[test]
    fn standardized_marker_example() {
        let model = build_cfa(
            &ids(3),
            &ModelSpec::single_factor(&ids(3), "F"),
            Identification::Marker,
        )
        .unwrap();
        // marker loading 1, φ = 0.64, ψ = 0.36 -> unit item variance
        let theta = DVector::from_vec(vec![1.0, 1.0, 0.64, 0.36, 0.36, 0.36]);
        let sample = SampleMoments {
            item_ids: ids(3),
            cov: model.implied(&theta),
            n: 100,
            is_correlation: true,
        };
        let fit = fit_ml(&model, &sample, &CfaOptions::default()).unwrap();
        let st = standardize(&fit).unwrap();
        for l in &st.loadings {
            assert!((l.std_all - 0.8).abs() < 1e-5);
        }
    }

    #[test]
    fn index_formulas() {
        let (cfi, tli) = incremental_indices(19.0, 19, 5000.0, 28).unwrap();
        assert_eq!(cfi, 1.0);
        assert!(tli > 1.0 - 1e-12 && tli <= 1.0);
        assert_eq!(rmsea(19.0, 19, 1000), 0.0);
        assert!(matches!(
            incremental_indices(10.0, 5, 20.0, 28),
            Err(Error::BaselineUndefined)
        ));
        let (cfi, _) = incremental_indices(119.0, 19, 1028.0, 28).unwrap();
        assert!((cfi - 0.9).abs() < 1e-12);
        assert!((rmsea(119.0, 19, 101) - (100.0f64 / 1900.0).sqrt()).abs() < 1e-12);
    }

    #[test]
    fn srmr_of_identical_matrices_is_zero() {
        let s = DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.5, 1.0]);
        assert_eq!(srmr(&standardized_residuals(&s, &s)), 0.0);
        let sigma = DMatrix::from_row_slice(2, 2, &[1.0, 0.2, 0.2, 1.0]);
        // one off-diagonal residual of 0.3 over 3 unique entries
        assert!((srmr(&standardized_residuals(&s, &sigma)) - (0.09f64 / 3.0).sqrt()).abs() < 1e-12);
    }
}
