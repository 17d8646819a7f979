//! Seeded, stratified sample splitting.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::record::{RatingRecord, Split};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StratifyBy {
    /// Numerical vs categorical; a respondent's stratum is the sorted list of
    /// kinds they rated.
    InstrumentKind,
    FeatureId,
    None,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SplitUnit {
    /// All ratings of a respondent land on the same side.
    Respondent,
    Record,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitConfig {
    pub fraction: f64,
    pub stratify_by: StratifyBy,
    pub unit: SplitUnit,
    pub seed: u64,
}

impl Default for SplitConfig {
    fn default() -> Self {
        SplitConfig {
            fraction: 0.5,
            stratify_by: StratifyBy::InstrumentKind,
            unit: SplitUnit::Respondent,
            seed: 0,
        }
    }
}

/// Split records into an EFA side (`fraction` of the units) and a CFA side.
///
/// Units are sorted by key before shuffling so the assignment depends only on
/// the set of records and the seed, not on input order. The overall A-side
/// size is `round(fraction · units)`, allocated to strata by largest
/// remainder, which keeps every stratum within one unit of `fraction`.
pub fn split_sample(
    records: Vec<RatingRecord>,
    config: &SplitConfig,
) -> Result<(Vec<RatingRecord>, Vec<RatingRecord>)> {
    if !(config.fraction > 0.0 && config.fraction < 1.0) {
        return Err(Error::InvalidInput(format!(
            "split fraction {} must lie in (0, 1)",
            config.fraction
        )));
    }

    let unit_key = |r: &RatingRecord, idx: usize| match config.unit {
        SplitUnit::Respondent => r.respondent_id.clone(),
        SplitUnit::Record => format!("{}\u{1f}{}\u{1f}{idx}", r.respondent_id, r.feature_id),
    };
    let mut units: BTreeMap<String, Vec<usize>> = BTreeMap::new();
    for (i, r) in records.iter().enumerate() {
        units.entry(unit_key(r, i)).or_default().push(i);
    }

    let mut strata: BTreeMap<String, Vec<String>> = BTreeMap::new();
    for (key, idxs) in &units {
        let mut labels: Vec<String> = idxs
            .iter()
            .map(|&i| match config.stratify_by {
                StratifyBy::InstrumentKind => records[i].kind.as_str().to_string(),
                StratifyBy::FeatureId => records[i].feature_id.clone(),
                StratifyBy::None => String::new(),
            })
            .collect();
        labels.sort();
        strata
            .entry(labels.join("+"))
            .or_default()
            .push(key.clone());
    }

    let total: usize = strata.values().map(Vec::len).sum();
    let target = (config.fraction * total as f64).round() as usize;
    let mut quotas: Vec<(usize, f64)> = strata
        .values()
        .map(|u| {
            let exact = config.fraction * u.len() as f64;
            (exact.floor() as usize, exact - exact.floor())
        })
        .collect();
    let mut assigned: usize = quotas.iter().map(|q| q.0).sum();
    let mut order: Vec<usize> = (0..quotas.len()).collect();
    order.sort_by(|&a, &b| quotas[b].1.total_cmp(&quotas[a].1).then(a.cmp(&b)));
    for &s in order.iter().cycle().take(quotas.len() * 2) {
        if assigned >= target {
            break;
        }
        if quotas[s].0 < strata.values().nth(s).map_or(0, Vec::len) && quotas[s].1 > 0.0 {
            quotas[s].0 += 1;
            quotas[s].1 = 0.0;
            assigned += 1;
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut side = vec![Split::Cfa; records.len()];
    for ((_, mut keys), (quota, _)) in strata.into_iter().zip(quotas) {
        keys.shuffle(&mut rng);
        for key in keys.iter().take(quota) {
            for &i in &units[key] {
                side[i] = Split::Efa;
            }
        }
    }

    let mut a = Vec::new();
    let mut b = Vec::new();
    for (mut r, s) in records.into_iter().zip(side) {
        r.split = s;
        match s {
            Split::Efa => a.push(r),
            _ => b.push(r),
        }
    }
    Ok((a, b))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::instrument::InstrumentKind;

    fn rec(resp: &str, feature: &str, kind: InstrumentKind) -> RatingRecord {
        RatingRecord {
            respondent_id: resp.into(),
            feature_id: feature.into(),
            instrument: "x".into(),
            kind,
            responses: vec![Some(3)],
            attention_response: 3,
            duration_seconds: 1.0,
            split: Split::Unassigned,
        }
    }

    #[test]
    fn single_record_stratum() {
        let cfg = SplitConfig {
            seed: 7,
            ..Default::default()
        };
        let (a, b) = split_sample(vec![rec("r", "bmi", InstrumentKind::Numerical)], &cfg).unwrap();
        assert_eq!((a.len(), b.len()), (1, 0));
        assert_eq!(a[0].split, Split::Efa);
    }

    #[test]
    fn fraction_bounds() {
        for f in [0.0, 1.0, -0.2, f64::NAN] {
            let cfg = SplitConfig {
                fraction: f,
                ..Default::default()
            };
            assert!(split_sample(vec![], &cfg).is_err());
        }
    }

    #[test]
    fn respondents_stay_together() {
        let mut recs = Vec::new();
        for r in 0..40 {
            for f in ["bmi", "debt", "degree"] {
                let kind = if f == "degree" {
                    InstrumentKind::Categorical
                } else {
                    InstrumentKind::Numerical
                };
                recs.push(rec(&format!("R{r:03}"), f, kind));
            }
        }
        let (a, b) = split_sample(recs, &SplitConfig::default()).unwrap();
        assert_eq!(a.len(), 60);
        assert_eq!(b.len(), 60);
        for r in &a {
            assert!(b.iter().all(|x| x.respondent_id != r.respondent_id));
        }
    }
}
