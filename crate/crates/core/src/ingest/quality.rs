//! Data-quality filters: attention checks, completion-time outliers and
//! missing responses.

use serde::{Deserialize, Serialize};

use super::record::RatingRecord;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TimingRule {
    /// Report box-plot outliers but keep them.
    Flag,
    /// Remove box-plot outliers.
    Drop,
    Ignore,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MissingRule {
    /// Drop any record with a missing item.
    Listwise,
    /// Keep incomplete records (pairwise handling happens downstream).
    Keep,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QualityPolicy {
    pub attention_value: u8,
    pub timing: TimingRule,
    /// Whisker length in IQR units.
    pub whisker: f64,
    pub missing: MissingRule,
}

impl Default for QualityPolicy {
    fn default() -> Self {
        QualityPolicy {
            attention_value: 3,
            timing: TimingRule::Flag,
            whisker: 1.5,
            missing: MissingRule::Listwise,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct QualityReport {
    pub n_input: usize,
    pub n_removed_attention: usize,
    pub n_flagged_time: usize,
    pub n_removed_time: usize,
    pub n_removed_missing: usize,
    pub n_retained: usize,
    /// Lower and upper whisker of the completion-time box plot.
    pub time_whiskers: Option<(f64, f64)>,
    pub removed_attention: Vec<String>,
    pub flagged_time: Vec<String>,
    pub removed_time: Vec<String>,
    pub removed_missing: Vec<String>,
}

/// Apply the filters in order attention → missing → timing.
///
/// With the default policy (timing flagged, not dropped) the operation is
/// idempotent. Dropping timing outliers re-estimates the whiskers on each call.
pub fn apply_quality_filters(
    records: Vec<RatingRecord>,
    policy: &QualityPolicy,
) -> Result<(Vec<RatingRecord>, QualityReport)> {
    if records.is_empty() {
        return Err(Error::NoRecords);
    }
    let mut report = QualityReport {
        n_input: records.len(),
        ..Default::default()
    };

    let mut kept = Vec::with_capacity(records.len());
    for r in records {
        if r.attention_response != policy.attention_value {
            report.removed_attention.push(r.key());
        } else if policy.missing == MissingRule::Listwise && !r.is_complete() {
            report.removed_missing.push(r.key());
        } else {
            kept.push(r);
        }
    }

    if policy.timing != TimingRule::Ignore && !kept.is_empty() {
        let durations: Vec<f64> = kept.iter().map(|r| r.duration_seconds).collect();
        let (lo, hi) = whiskers(&durations, policy.whisker);
        report.time_whiskers = Some((lo, hi));
        let outlier = |r: &RatingRecord| r.duration_seconds < lo || r.duration_seconds > hi;
        report.flagged_time = kept
            .iter()
            .filter(|r| outlier(r))
            .map(RatingRecord::key)
            .collect();
        if policy.timing == TimingRule::Drop {
            report.removed_time = report.flagged_time.clone();
            kept.retain(|r| !outlier(r));
        }
    }

    report.n_removed_attention = report.removed_attention.len();
    report.n_removed_missing = report.removed_missing.len();
    report.n_flagged_time = report.flagged_time.len();
    report.n_removed_time = report.removed_time.len();
    report.n_retained = kept.len();
    Ok((kept, report))
}

/// Box-plot whiskers `Q1 - k·IQR`, `Q3 + k·IQR` with linearly interpolated
/// quartiles.
pub fn whiskers(values: &[f64], k: f64) -> (f64, f64) {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let q1 = quantile_sorted(&v, 0.25);
    let q3 = quantile_sorted(&v, 0.75);
    let iqr = q3 - q1;
    (q1 - k * iqr, q3 + k * iqr)
}

fn quantile_sorted(v: &[f64], q: f64) -> f64 {
    if v.len() == 1 {
        return v[0];
    }
    let h = (v.len() - 1) as f64 * q;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    v[lo] + (h - lo as f64) * (v[hi] - v[lo])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::instrument::InstrumentKind;
    use crate::ingest::record::Split;

    fn rec(id: &str, attention: u8, dur: f64, missing: bool) -> RatingRecord {
        let mut responses = vec![Some(3u8); 8];
        if missing {
            responses[2] = None;
        }
        RatingRecord {
            respondent_id: id.into(),
            feature_id: "bmi".into(),
            instrument: "fus-numerical".into(),
            kind: InstrumentKind::Numerical,
            responses,
            attention_response: attention,
            duration_seconds: dur,
            split: Split::Unassigned,
        }
    }

    #[test]
    fn attention_filter() {
        let recs = vec![rec("a", 3, 100.0, false), rec("b", 5, 100.0, false)];
        let (kept, rep) = apply_quality_filters(recs, &QualityPolicy::default()).unwrap();
        assert_eq!(kept.len(), 1);
        assert_eq!(rep.n_removed_attention, 1);
        assert_eq!(rep.removed_attention, vec!["b/bmi".to_string()]);
    }

    #[test]
    fn timing_flagged_not_removed_by_default() {
        let mut recs: Vec<_> = (0..20)
            .map(|i| rec(&format!("r{i}"), 3, 100.0 + i as f64, false))
            .collect();
        recs.push(rec("slow", 3, 5000.0, false));
        let (kept, rep) = apply_quality_filters(recs.clone(), &QualityPolicy::default()).unwrap();
        assert_eq!(kept.len(), 21);
        assert_eq!(rep.flagged_time, vec!["slow/bmi".to_string()]);

        let drop = QualityPolicy {
            timing: TimingRule::Drop,
            ..Default::default()
        };
        let (kept, rep) = apply_quality_filters(recs, &drop).unwrap();
        assert_eq!(kept.len(), 20);
        assert_eq!(rep.n_removed_time, 1);
    }

    #[test]
    fn listwise_missing() {
        let recs = vec![
            rec("a", 3, 1.0, true),
            rec("b", 3, 1.0, false),
            rec("c", 2, 1.0, true),
        ];
        let (kept, rep) = apply_quality_filters(recs, &QualityPolicy::default()).unwrap();
        assert_eq!(kept.len(), 1);
        // attention failure takes precedence; causes are disjoint
        assert_eq!(rep.n_removed_attention, 1);
        assert_eq!(rep.n_removed_missing, 1);
        assert_eq!(
            rep.n_retained + rep.n_removed_attention + rep.n_removed_missing,
            rep.n_input
        );
    }

    #[test]
    fn empty_input() {
        assert!(matches!(
            apply_quality_filters(vec![], &QualityPolicy::default()),
            Err(Error::NoRecords)
        ));
    }

    #[test]
    fn whisker_rule() {
        let (lo, hi) = whiskers(&[1.0, 2.0, 3.0, 4.0, 5.0], 1.5);
        // Q1 = 2, Q3 = 4
        assert_eq!((lo, hi), (-1.0, 7.0));
    }
}
