//! Fourth-moment (Γ) estimation and the Satorra-Bentler scaled statistics.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::fit::{incremental_indices, rmsea, CfaFit, RobustBlock};
use super::model::CfaModel;
use crate::corr::chi_square_sf;
use crate::error::{Error, Result};
use crate::ingest::RatingMatrix;
use crate::linalg::{spd_inverse, vech_indices};

/// Asymptotic covariance matrix of the unique sample covariances, indexed in
/// `vech` order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GammaMatrix {
    pub item_ids: Vec<String>,
    #[serde(with = "crate::serde_matrix")]
    pub values: DMatrix<f64>,
    pub n: usize,
}

impl GammaMatrix {
    /// Reorder to `items`, permuting the `vech` index accordingly.
    pub fn reordered(&self, items: &[String]) -> Result<GammaMatrix> {
        let pos: Vec<usize> = items
            .iter()
            .map(|id| {
                self.item_ids
                    .iter()
                    .position(|x| x == id)
                    .ok_or_else(|| Error::InvalidInput(format!("item `{id}` missing from Γ")))
            })
            .collect::<Result<_>>()?;
        let old = vech_indices(self.item_ids.len());
        let locate = |a: usize, b: usize| {
            let (i, j) = if a >= b { (a, b) } else { (b, a) };
            old.iter()
                .position(|&x| x == (i, j))
                .expect("vech index present")
        };
        let new_idx: Vec<usize> = vech_indices(items.len())
            .into_iter()
            .map(|(i, j)| locate(pos[i], pos[j]))
            .collect();
        let m = new_idx.len();
        Ok(GammaMatrix {
            item_ids: items.to_vec(),
            values: DMatrix::from_fn(m, m, |r, c| self.values[(new_idx[r], new_idx[c])]),
            n: self.n,
        })
    }
}

/// Mergeable accumulator of centered outer-product moments. Partial
/// accumulators over disjoint case sets combine with [`GammaAccumulator::merge`].
#[derive(Debug, Clone)]
pub struct GammaAccumulator {
    means: Vec<f64>,
    idx: Vec<(usize, usize)>,
    n: usize,
    sum_w: DVector<f64>,
    sum_ww: DMatrix<f64>,
}

impl GammaAccumulator {
    pub fn new(means: Vec<f64>) -> Self {
        let idx = vech_indices(means.len());
        let m = idx.len();
        GammaAccumulator {
            means,
            idx,
            n: 0,
            sum_w: DVector::zeros(m),
            sum_ww: DMatrix::zeros(m, m),
        }
    }

    pub fn push(&mut self, row: &[f64]) {
        let d: Vec<f64> = row.iter().zip(&self.means).map(|(x, m)| x - m).collect();
        let w = DVector::from_iterator(self.idx.len(), self.idx.iter().map(|&(i, j)| d[i] * d[j]));
        self.sum_ww.syger(1.0, &w, &w, 1.0);
        self.sum_w += w;
        self.n += 1;
    }

    pub fn merge(&mut self, other: GammaAccumulator) {
        self.n += other.n;
        self.sum_w += other.sum_w;
        self.sum_ww += other.sum_ww;
    }

    /// `Γ = mean(w wᵀ) - mean(w) mean(w)ᵀ`.
    pub fn finish(self, item_ids: Vec<String>) -> GammaMatrix {
        let n = self.n as f64;
        let s = &self.sum_w / n;
        let mut values = self.sum_ww / n;
        values.fill_upper_triangle_with_lower_triangle();
        values -= &s * s.transpose();
        GammaMatrix {
            item_ids,
            values,
            n: self.n,
        }
    }
}

/// Empirical Γ from complete raw data, accumulated in chunks of `chunk`
/// cases and merged.
pub fn estimate_gamma_chunked(data: &RatingMatrix, chunk: usize) -> Result<GammaMatrix> {
    let (n, p) = (data.n(), data.p());
    if n < 2 {
        return Err(Error::InvalidInput("Γ needs at least 2 cases".into()));
    }
    if data.values.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput(
            "Γ needs complete data; apply listwise deletion first".into(),
        ));
    }
    let means = data.column_means();
    for j in 0..p {
        if data.values.column(j).iter().all(|&v| v == means[j]) {
            return Err(Error::ZeroVariance(data.item_ids[j].clone()));
        }
    }
    let chunk = chunk.max(1);
    let mut total = GammaAccumulator::new(means.clone());
    let mut start = 0;
    while start < n {
        let mut part = GammaAccumulator::new(means.clone());
        for i in start..(start + chunk).min(n) {
            let row: Vec<f64> = data.values.row(i).iter().copied().collect();
            part.push(&row);
        }
        total.merge(part);
        start += chunk;
    }
    Ok(total.finish(data.item_ids.clone()))
}

pub fn estimate_gamma(data: &RatingMatrix) -> Result<GammaMatrix> {
    estimate_gamma_chunked(data, 1024)
}

/// Normal-theory Γ: `σ_ik σ_jl + σ_il σ_jk` over `vech` pairs.
pub fn normal_theory_gamma(sigma: &DMatrix<f64>) -> DMatrix<f64> {
    let idx = vech_indices(sigma.nrows());
    let m = idx.len();
    DMatrix::from_fn(m, m, |r, c| {
        let (i, j) = idx[r];
        let (k, l) = idx[c];
        sigma[(i, k)] * sigma[(j, l)] + sigma[(i, l)] * sigma[(j, k)]
    })
}

/// `tr(UΓ)` with `U = W - WΔ(ΔᵀWΔ)⁻¹ΔᵀW`, `W = Γ_NT(Σ̂)⁻¹`.
fn trace_u_gamma(
    model: &CfaModel,
    theta: &DVector<f64>,
    sigma: &DMatrix<f64>,
    gamma: &DMatrix<f64>,
) -> Result<f64> {
    let w = spd_inverse(&normal_theory_gamma(sigma))?;
    let delta = model.jacobian(theta);
    let wd = &w * &delta;
    let info = delta.transpose() * &wd;
    let info_inv = spd_inverse(&info)?;
    let wg = (&w * gamma).trace();
    let correction = (&info_inv * wd.transpose() * gamma * &wd).trace();
    Ok(wg - correction)
}

/// Satorra-Bentler scaling of the target and baseline statistics, and the
/// robust indices recomputed from them.
pub fn satorra_bentler(fit: &CfaFit, gamma: &GammaMatrix) -> Result<RobustBlock> {
    let gamma = gamma.reordered(&fit.model.items)?;
    scaled_block(fit, &gamma.values, &gamma.values)
}

/// Scaling with each model's own normal-theory Γ (`Γ_NT(Σ̂)`), under which
/// every scaling factor is exactly one. A reference point for the robust
/// machinery.
pub fn satorra_bentler_normal_theory(fit: &CfaFit) -> Result<RobustBlock> {
    let baseline = CfaModel::independence(&fit.model.items);
    let base_sigma = baseline.implied(&fit.baseline_theta);
    scaled_block(
        fit,
        &normal_theory_gamma(&fit.implied),
        &normal_theory_gamma(&base_sigma),
    )
}

fn scaled_block(
    fit: &CfaFit,
    gamma: &DMatrix<f64>,
    gamma_base: &DMatrix<f64>,
) -> Result<RobustBlock> {
    let df = fit.naive.df;
    let c = if df > 0 {
        trace_u_gamma(&fit.model, &fit.theta, &fit.implied, gamma)? / df as f64
    } else {
        1.0
    };
    if !(c > 0.0) || !c.is_finite() {
        return Err(Error::InvalidScalingFactor(c));
    }
    let baseline = CfaModel::independence(&fit.model.items);
    let base_sigma = baseline.implied(&fit.baseline_theta);
    let df_b = fit.naive.baseline_df;
    let c_b = trace_u_gamma(&baseline, &fit.baseline_theta, &base_sigma, gamma_base)? / df_b as f64;
    if !(c_b > 0.0) || !c_b.is_finite() {
        return Err(Error::InvalidScalingFactor(c_b));
    }
    let t_scaled = fit.naive.t / c;
    let t_base_scaled = fit.naive.baseline_t / c_b;
    let incremental = incremental_indices(t_scaled, df, t_base_scaled, df_b).ok();
    Ok(RobustBlock {
        scaling_factor: c,
        baseline_scaling_factor: c_b,
        t_scaled,
        p: if df > 0 {
            chi_square_sf(t_scaled, df as u64)?
        } else {
            1.0
        },
        baseline_t_scaled: t_base_scaled,
        cfi: incremental.map(|x| x.0),
        tli: incremental.map(|x| x.1),
        rmsea: rmsea(t_scaled, df, fit.n),
    })
}

/// Attach the robust block to a fit.
pub fn with_robust(mut fit: CfaFit, gamma: &GammaMatrix) -> Result<CfaFit> {
    fit.robust = Some(satorra_bentler(&fit, gamma)?);
    Ok(fit)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScaledDifference {
    pub t_d: f64,
    pub df_d: i64,
    pub p: f64,
    pub c_d: f64,
}

/// Scaled difference from raw statistics and scaling factors of the
/// restricted (0) and full (1) models.
pub fn scaled_difference(
    t0: f64,
    df0: i64,
    c0: f64,
    t1: f64,
    df1: i64,
    c1: f64,
) -> Result<ScaledDifference> {
    let df_d = df0 - df1;
    if df_d <= 0 {
        return Err(Error::InvalidInput(format!(
            "restricted model must have more df than the full model ({df0} vs {df1})"
        )));
    }
    let t_diff = (t0 - t1).max(0.0);
    let c_d = (df0 as f64 * c0 - df1 as f64 * c1) / df_d as f64;
    if !(c_d > 0.0) {
        return Err(Error::ScaledDifferenceInvalid {
            c_d,
            t_diff,
            df: df_d,
            p: chi_square_sf(t_diff, df_d as u64)?,
        });
    }
    let t_d = t_diff / c_d;
    Ok(ScaledDifference {
        t_d,
        df_d,
        p: chi_square_sf(t_d, df_d as u64)?,
        c_d,
    })
}

/// Scaled chi-square difference between nested fits. Fits without a robust
/// block count as unscaled (c = 1).
pub fn scaled_chisq_diff(restricted: &CfaFit, full: &CfaFit) -> Result<ScaledDifference> {
    let c = |f: &CfaFit| f.robust.as_ref().map_or(1.0, |r| r.scaling_factor);
    scaled_difference(
        restricted.naive.t,
        restricted.naive.df,
        c(restricted),
        full.naive.t,
        full.naive.df,
        c(full),
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unit_scaling_gives_plain_difference() {
        let d = scaled_difference(350.0, 20, 1.0, 50.0, 19, 1.0).unwrap();
        assert!((d.t_d - 300.0).abs() < 1e-12);
        assert_eq!(d.df_d, 1);
        assert_eq!(d.c_d, 1.0);
    }

    #[test]
    fn nonpositive_cd_reports_fallback() {
        // 20*1.0 - 19*1.2 < 0
        match scaled_difference(350.0, 20, 1.0, 50.0, 19, 1.2) {
            Err(Error::ScaledDifferenceInvalid { t_diff, df, .. }) => {
                assert_eq!(t_diff, 300.0);
                assert_eq!(df, 1);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn normal_theory_gamma_of_identity() {
        let g = normal_theory_gamma(&DMatrix::identity(2, 2));
        // vech order (0,0), (1,0), (1,1): variances 2, covariance 1
        assert_eq!(
            g,
            DMatrix::from_diagonal(&DVector::from_vec(vec![2.0, 1.0, 2.0]))
        );
    }

    #[test]
    fn partition_independent() {
        let data = RatingMatrix::from_values(
            DMatrix::from_fn(37, 3, |i, j| ((i * 7 + j * 3) % 5) as f64 + 0.1 * j as f64),
            vec!["a".into(), "b".into(), "c".into()],
        )
        .unwrap();
        let one = estimate_gamma_chunked(&data, 37).unwrap();
        let many = estimate_gamma_chunked(&data, 4).unwrap();
        assert!((one.values - many.values).amax() < 1e-12);
    }

    #[test]
    fn constant_column_is_rejected() {
        let data = RatingMatrix::from_values(
            DMatrix::from_fn(10, 2, |i, j| if j == 0 { i as f64 } else { 3.0 }),
            vec!["a".into(), "b".into()],
        )
        .unwrap();
        assert!(matches!(estimate_gamma(&data), Err(Error::ZeroVariance(ref s)) if s == "b"));
    }

    #[test]
    fn reorder_roundtrip() {
        let sigma = DMatrix::from_row_slice(3, 3, &[1.0, 0.3, 0.2, 0.3, 1.5, 0.4, 0.2, 0.4, 2.0]);
        let g = GammaMatrix {
            item_ids: vec!["a".into(), "b".into(), "c".into()],
            values: normal_theory_gamma(&sigma),
            n: 1,
        };
        let order = vec!["c".to_string(), "a".to_string(), "b".to_string()];
        let perm = crate::linalg::principal_submatrix(&sigma, &[2, 0, 1]);
        assert!((g.reordered(&order).unwrap().values - normal_theory_gamma(&perm)).amax() < 1e-15);
    }
}
