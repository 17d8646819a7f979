use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF};

use super::matrix::CorrelationMatrix;
use crate::error::{Error, Result};
use crate::ingest::RatingMatrix;
use crate::linalg;

/// Product-moment correlations of the columns of a data matrix.
pub fn pearson_matrix(data: &RatingMatrix) -> Result<CorrelationMatrix> {
    let n = data.n();
    let p = data.p();
    if n < 3 {
        return Err(Error::InvalidInput(format!(
            "need at least 3 cases, have {n}"
        )));
    }
    let means = data.column_means();
    let centered = DMatrix::from_fn(n, p, |i, j| data.values[(i, j)] - means[j]);
    let cross = centered.transpose() * &centered;
    let sd: Vec<f64> = (0..p).map(|j| cross[(j, j)].sqrt()).collect();
    for (j, s) in sd.iter().enumerate() {
        if *s == 0.0 || !s.is_finite() {
            return Err(Error::ZeroVariance(data.item_ids[j].clone()));
        }
    }
    let mut r = DMatrix::from_fn(p, p, |i, j| {
        (cross[(i, j)] / (sd[i] * sd[j])).clamp(-1.0, 1.0)
    });
    for i in 0..p {
        r[(i, i)] = 1.0;
    }
    // product of two roundings can leave ~1e-16 asymmetry
    let r = (&r + r.transpose()) * 0.5;
    CorrelationMatrix::new(data.item_ids.clone(), r, Some(n))
}

/// Pearson correlation of two equally long slices.
pub fn pearson(x: &[f64], y: &[f64]) -> Option<f64> {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    if sxx == 0.0 || syy == 0.0 {
        return None;
    }
    Some(sxy / (sxx * syy).sqrt())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ItemTotal {
    pub item: String,
    /// Item against the total including itself.
    pub raw_r: f64,
    /// Item against the total of the remaining items.
    pub corrected_r: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ItemTotalReport {
    pub items: Vec<ItemTotal>,
}

pub fn item_total_correlations(data: &RatingMatrix) -> Result<ItemTotalReport> {
    let p = data.p();
    if p < 2 {
        return Err(Error::InvalidInput(
            "item-total correlations need at least 2 items".into(),
        ));
    }
    let totals: Vec<f64> = data.values.row_iter().map(|r| r.sum()).collect();
    let mut items = Vec::with_capacity(p);
    for j in 0..p {
        let col: Vec<f64> = data.values.column(j).iter().copied().collect();
        let rest: Vec<f64> = totals.iter().zip(&col).map(|(t, c)| t - c).collect();
        let raw_r = pearson(&col, &totals).ok_or_else(|| Error::ZeroVariance("total".into()))?;
        let corrected_r = pearson(&col, &rest)
            .ok_or_else(|| Error::ZeroVariance(format!("total without {}", data.item_ids[j])))?;
        items.push(ItemTotal {
            item: data.item_ids[j].clone(),
            raw_r,
            corrected_r,
        });
    }
    Ok(ItemTotalReport { items })
}

/// Item-total correlations implied by a correlation matrix, treating every
/// item as standardized (unit variance) before summing.
pub fn item_total_from_correlation(r: &CorrelationMatrix) -> ItemTotalReport {
    let p = r.p();
    let total_var: f64 = r.values.sum();
    let items = (0..p)
        .map(|j| {
            let row_sum: f64 = r.values.row(j).sum();
            let rest_var = total_var - 2.0 * row_sum + 1.0;
            ItemTotal {
                item: r.item_ids[j].clone(),
                raw_r: row_sum / total_var.sqrt(),
                corrected_r: (row_sum - 1.0) / rest_var.sqrt(),
            }
        })
        .collect();
    ItemTotalReport { items }
}

/// Items whose corrected item-total correlation falls below `threshold`.
pub fn flag_low_correlation_items(report: &ItemTotalReport, threshold: f64) -> Vec<String> {
    report
        .items
        .iter()
        .filter(|it| it.corrected_r < threshold)
        .map(|it| it.item.clone())
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BartlettTest {
    pub chi2: f64,
    pub df: u64,
    pub p: f64,
}

/// Bartlett's test of sphericity.
pub fn bartlett_test(r: &CorrelationMatrix, n: usize) -> Result<BartlettTest> {
    let p = r.p();
    if n <= p {
        return Err(Error::InvalidInput(format!(
            "Bartlett's test needs n > p (n = {n}, p = {p})"
        )));
    }
    let log_det = linalg::spd_log_det(&r.values).ok_or(Error::DeterminantNonpositive)?;
    let chi2 = (-(n as f64 - 1.0 - (2.0 * p as f64 + 5.0) / 6.0) * log_det).max(0.0);
    let df = (p * (p - 1) / 2) as u64;
    let p_value = if df == 0 {
        1.0
    } else {
        chi_square_sf(chi2, df)?
    };
    Ok(BartlettTest {
        chi2,
        df,
        p: p_value,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Kmo {
    pub overall: f64,
    /// Measure of sampling adequacy per item.
    pub per_item: Vec<f64>,
}

/// Kaiser-Meyer-Olkin sampling adequacy from anti-image partial correlations.
pub fn kmo(r: &CorrelationMatrix) -> Result<Kmo> {
    let p = r.p();
    let q = linalg::spd_inverse(&r.values).map_err(|_| Error::DeterminantNonpositive)?;
    let partial = |i: usize, j: usize| -q[(i, j)] / (q[(i, i)] * q[(j, j)]).sqrt();
    let mut r2_total = 0.0;
    let mut a2_total = 0.0;
    let mut per_item = Vec::with_capacity(p);
    for i in 0..p {
        let mut r2 = 0.0;
        let mut a2 = 0.0;
        for j in 0..p {
            if i != j {
                r2 += r.values[(i, j)].powi(2);
                a2 += partial(i, j).powi(2);
            }
        }
        if r2 + a2 == 0.0 {
            return Err(Error::InvalidInput(format!(
                "KMO undefined: `{}` is uncorrelated with every other item",
                r.item_ids[i]
            )));
        }
        per_item.push(r2 / (r2 + a2));
        r2_total += r2;
        a2_total += a2;
    }
    Ok(Kmo {
        overall: r2_total / (r2_total + a2_total),
        per_item,
    })
}

/// Upper-tail probability of the chi-square distribution.
pub fn chi_square_sf(x: f64, df: u64) -> Result<f64> {
    if df < 1 {
        return Err(Error::InvalidInput("chi-square needs df >= 1".into()));
    }
    if !(x >= 0.0) {
        return Err(Error::InvalidInput(format!(
            "chi-square statistic {x} must be >= 0"
        )));
    }
    let dist = ChiSquared::new(df as f64).map_err(|e| Error::InvalidInput(e.to_string()))?;
    Ok(dist.sf(x).clamp(0.0, 1.0))
}

pub fn chi_square_cdf(x: f64, df: u64) -> Result<f64> {
    Ok(1.0 - chi_square_sf(x, df)?)
}

/// p-value for display, clamped at `< 0.001`.
pub fn format_p(p: f64) -> String {
    if p < 0.001 {
        "< 0.001".to_string()
    } else {
        format!("{p:.3}")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FactorabilityReport {
    pub bartlett_chi2: f64,
    pub bartlett_df: u64,
    pub bartlett_p: f64,
    pub kmo_overall: f64,
    pub kmo_per_item: Vec<f64>,
    pub item_total: ItemTotalReport,
    pub low_correlation_items: Vec<String>,
    pub low_correlation_threshold: f64,
}

/// Bartlett, KMO and low item-total flags in one block. `item_total` defaults
/// to the standardized-item totals implied by `r`.
pub fn factorability(
    r: &CorrelationMatrix,
    n: usize,
    item_total: Option<ItemTotalReport>,
    threshold: f64,
) -> Result<FactorabilityReport> {
    let b = bartlett_test(r, n)?;
    let k = kmo(r)?;
    let item_total = item_total.unwrap_or_else(|| item_total_from_correlation(r));
    let low = flag_low_correlation_items(&item_total, threshold);
    Ok(FactorabilityReport {
        bartlett_chi2: b.chi2,
        bartlett_df: b.df,
        bartlett_p: b.p,
        kmo_overall: k.overall,
        kmo_per_item: k.per_item,
        item_total,
        low_correlation_items: low,
        low_correlation_threshold: threshold,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn equicorrelation(p: usize, r: f64) -> CorrelationMatrix {
        let v = DMatrix::from_fn(p, p, |i, j| if i == j { 1.0 } else { r });
        CorrelationMatrix::new((0..p).map(|i| format!("x{i}")).collect(), v, None).unwrap()
    }

    fn data(cols: &[&[f64]]) -> RatingMatrix {
        let n = cols[0].len();
        RatingMatrix::from_values(
            DMatrix::from_fn(n, cols.len(), |i, j| cols[j][i]),
            (0..cols.len()).map(|j| format!("c{j}")).collect(),
        )
        .unwrap()
    }

    /// Brute-force Pearson from the defining sums, kept apart from `pearson`.
    fn brute_pearson(x: &[f64], y: &[f64]) -> f64 {
        let n = x.len() as f64;
        let sx: f64 = x.iter().sum();
        let sy: f64 = y.iter().sum();
        let sxx: f64 = x.iter().map(|a| a * a).sum();
        let syy: f64 = y.iter().map(|a| a * a).sum();
        let sxy: f64 = x.iter().zip(y).map(|(a, b)| a * b).sum();
        (n * sxy - sx * sy) / ((n * sxx - sx * sx) * (n * syy - sy * sy)).sqrt()
    }

    #[test]
    fn pearson_examples() {
        let x = [1.0, 2.0, 3.0, 4.0];
        let y = [1.0, 3.0, 2.0, 4.0];
        assert!((brute_pearson(&x, &y) - 0.8).abs() < 1e-12);
        let m = pearson_matrix(&data(&[&x, &y])).unwrap();
        assert!((m.values[(0, 1)] - 0.8).abs() < 1e-12);
        assert_eq!(m.values[(0, 0)], 1.0);

        let m = pearson_matrix(&data(&[&[1.0, 2.0, 3.0], &[2.0, 4.0, 6.0]])).unwrap();
        assert!((m.values[(0, 1)] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn zero_variance_names_item() {
        let err = pearson_matrix(&data(&[&[1.0, 2.0, 3.0], &[2.0, 2.0, 2.0]])).unwrap_err();
        assert!(matches!(err, Error::ZeroVariance(ref s) if s == "c1"));
    }

    #[test]
    fn duplicate_items_correlate_fully_with_rest() {
        let x = [1.0, 4.0, 2.0, 5.0, 3.0];
        let rep = item_total_correlations(&data(&[&x, &x])).unwrap();
        for it in &rep.items {
            assert!((it.corrected_r - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn bartlett_identity_and_equicorrelation() {
        let id = equicorrelation(4, 0.0);
        let b = bartlett_test(&id, 50).unwrap();
        assert_eq!(b.chi2, 0.0);
        assert_eq!(b.p, 1.0);
        assert_eq!(b.df, 6);

        // |R| = (1 - r)^2 (1 + 2r) = 0.5 for r = 0.5
        let det = (1.0f64 - 0.5).powi(2) * (1.0 + 2.0 * 0.5);
        let expected = -(101.0 - 1.0 - 11.0 / 6.0) * det.ln();
        let b = bartlett_test(&equicorrelation(3, 0.5), 101).unwrap();
        assert_eq!(b.df, 3);
        assert!((b.chi2 - expected).abs() < 1e-9);
        assert!((b.chi2 - 68.04).abs() < 0.01);
    }

    #[test]
    fn bartlett_errors() {
        assert!(bartlett_test(&equicorrelation(3, 0.5), 3).is_err());
        let v = DMatrix::from_element(2, 2, 1.0);
        let singular = CorrelationMatrix::new(vec!["a".into(), "b".into()], v, None).unwrap();
        assert!(matches!(
            bartlett_test(&singular, 10),
            Err(Error::DeterminantNonpositive)
        ));
        assert!(kmo(&singular).is_err());
    }

    #[test]
    fn kmo_equicorrelation() {
        // R^-1 = 2I - 0.5J for p = 3, r = 0.5 -> partials all 1/3
        let k = kmo(&equicorrelation(3, 0.5)).unwrap();
        let expected = 1.5 / (1.5 + 6.0 / 9.0);
        assert!((k.overall - expected).abs() < 1e-12);
        assert!((k.overall - 0.692).abs() < 1e-3);
        assert!(k.per_item.iter().all(|m| (m - expected).abs() < 1e-12));
    }

    #[test]
    fn kmo_identity_is_an_error_not_nan() {
        assert!(kmo(&equicorrelation(3, 0.0)).is_err());
    }

    #[test]
    fn low_correlation_flags() {
        let rep = ItemTotalReport {
            items: (0..3)
                .map(|i| ItemTotal {
                    item: format!("x{i}"),
                    raw_r: 0.6,
                    corrected_r: 0.5,
                })
                .collect(),
        };
        assert!(flag_low_correlation_items(&rep, 0.30).is_empty());
        assert_eq!(flag_low_correlation_items(&rep, 1.0).len(), 3);
    }

    #[test]
    fn chi_square_tail() {
        assert_eq!(chi_square_sf(0.0, 3).unwrap(), 1.0);
        assert!((chi_square_sf(3.841, 1).unwrap() - 0.05).abs() < 1e-3);
        assert!(chi_square_sf(16788.03, 231).unwrap() < 0.001);
        assert!(chi_square_sf(1.0, 0).is_err());
        assert_eq!(format_p(1e-9), "< 0.001");
        assert_eq!(format_p(0.0423), "0.042");
    }

    #[test]
    fn item_total_from_correlation_matches_standardized_data() {
        let x = [1.0, 2.0, 4.0, 3.0, 5.0, 2.0];
        let y = [2.0, 1.0, 4.0, 4.0, 5.0, 3.0];
        let z = [1.0, 3.0, 3.0, 2.0, 4.0, 1.0];
        let std = |v: &[f64]| {
            let m = v.iter().sum::<f64>() / v.len() as f64;
            let s = (v.iter().map(|a| (a - m).powi(2)).sum::<f64>()).sqrt();
            v.iter().map(|a| (a - m) / s).collect::<Vec<_>>()
        };
        let d = data(&[&std(&x), &std(&y), &std(&z)]);
        let from_data = item_total_correlations(&d).unwrap();
        let from_r = item_total_from_correlation(&pearson_matrix(&d).unwrap());
        for (a, b) in from_data.items.iter().zip(&from_r.items) {
            assert!((a.corrected_r - b.corrected_r).abs() < 1e-12);
            assert!((a.raw_r - b.raw_r).abs() < 1e-12);
        }
    }
}
