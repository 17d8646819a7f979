use serde::{Deserialize, Serialize};

use crate::cfa::CfaFit;
use crate::corr::CorrelationMatrix;
use crate::efa::FactorSolution;
use crate::error::{Error, Result};

fn check_loadings(loadings: &[f64]) -> Result<()> {
    if loadings.is_empty() {
        return Err(Error::InvalidInput("empty loading list".into()));
    }
    if let Some(l) = loadings.iter().find(|l| !(l.abs() <= 1.0)) {
        return Err(Error::InvalidInput(format!(
            "standardized loading {l} outside [-1, 1]"
        )));
    }
    Ok(())
}

/// McDonald's omega from standardized loadings, uniqueness `1 - λ²`.
pub fn mcdonald_omega(loadings: &[f64]) -> Result<f64> {
    check_loadings(loadings)?;
    let sum: f64 = loadings.iter().sum();
    let unique: f64 = loadings.iter().map(|l| 1.0 - l * l).sum();
    let common = sum * sum;
    if common + unique == 0.0 {
        return Ok(1.0);
    }
    Ok(common / (common + unique))
}

/// Average variance extracted: mean squared standardized loading.
pub fn ave(loadings: &[f64]) -> Result<f64> {
    check_loadings(loadings)?;
    Ok(loadings.iter().map(|l| l * l).sum::<f64>() / loadings.len() as f64)
}

/// Standardized Cronbach's alpha `k r̄ / (1 + (k - 1) r̄)`.
pub fn cronbach_alpha(r: &CorrelationMatrix) -> Result<f64> {
    let k = r.p();
    if k < 2 {
        return Err(Error::InvalidInput("alpha needs at least 2 items".into()));
    }
    let off: f64 = r.values.sum() - k as f64;
    let r_bar = off / (k * (k - 1)) as f64;
    let kf = k as f64;
    Ok(kf * r_bar / (1.0 + (kf - 1.0) * r_bar))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FactorReliability {
    pub factor: String,
    pub items: Vec<String>,
    pub loadings: Vec<f64>,
    pub omega: f64,
    pub ave: f64,
    /// Absent when no correlation matrix was available or the factor has one item.
    pub alpha: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReliabilityReport {
    /// Analysis stage the loadings come from (`efa`, `cfa` or `table`).
    pub source: String,
    pub factors: Vec<FactorReliability>,
}

/// Reliability of one factor from its items' standardized loadings.
pub fn factor_reliability(
    factor: &str,
    items: &[String],
    loadings: &[f64],
    r: Option<&CorrelationMatrix>,
) -> Result<FactorReliability> {
    let alpha = match r {
        Some(r) if items.len() >= 2 => Some(cronbach_alpha(&r.select(items)?)?),
        _ => None,
    };
    Ok(FactorReliability {
        factor: factor.to_string(),
        items: items.to_vec(),
        loadings: loadings.to_vec(),
        omega: mcdonald_omega(loadings)?,
        ave: ave(loadings)?,
        alpha,
    })
}

/// Per-factor reliability of an EFA solution using the assigned items'
/// pattern loadings.
pub fn reliability_from_efa(
    sol: &FactorSolution,
    r: Option<&CorrelationMatrix>,
) -> Result<ReliabilityReport> {
    let mut factors = Vec::new();
    for f in 0..sol.n_factors {
        let pos = sol.items_on(f);
        if pos.is_empty() {
            continue;
        }
        let items: Vec<String> = pos.iter().map(|&j| sol.item_ids[j].clone()).collect();
        let loadings: Vec<f64> = pos
            .iter()
            .map(|&j| sol.pattern[(j, f)].clamp(-1.0, 1.0))
            .collect();
        factors.push(factor_reliability(
            &format!("F{}", f + 1),
            &items,
            &loadings,
            r,
        )?);
    }
    Ok(ReliabilityReport {
        source: "efa".into(),
        factors,
    })
}

/// Per-factor reliability from a CFA fit's completely standardized loadings.
pub fn reliability_from_cfa(
    fit: &CfaFit,
    r: Option<&CorrelationMatrix>,
) -> Result<ReliabilityReport> {
    let st = fit
        .standardized
        .as_ref()
        .ok_or_else(|| Error::InvalidInput("CFA fit has no standardized solution".into()))?;
    let mut factors = Vec::new();
    for f in &fit.model.factors {
        let rows: Vec<_> = st.loadings.iter().filter(|l| &l.factor == f).collect();
        let items: Vec<String> = rows.iter().map(|l| l.item.clone()).collect();
        let loadings: Vec<f64> = rows.iter().map(|l| l.std_all.clamp(-1.0, 1.0)).collect();
        factors.push(factor_reliability(f, &items, &loadings, r)?);
    }
    Ok(ReliabilityReport {
        source: "cfa".into(),
        factors,
    })
}
