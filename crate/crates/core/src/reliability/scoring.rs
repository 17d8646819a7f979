use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::ingest::{InstrumentDefinition, RatingRecord};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubscaleScore {
    pub subscale: String,
    pub mean: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UnderstandabilityScore {
    pub feature_id: String,
    pub subscales: Vec<SubscaleScore>,
    pub overall: f64,
    pub n_ratings: usize,
    /// 1-based; 0 until ranked.
    pub rank: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ScoreTable {
    pub instrument: String,
    pub subscales: Vec<String>,
    pub scores: Vec<UnderstandabilityScore>,
    pub warnings: Vec<String>,
}

#[derive(Default)]
struct Sums {
    ratings: usize,
    overall: (f64, usize),
    per_subscale: Vec<(f64, usize)>,
}

/// Mean ratings per feature and subscale over all retained ratings of
/// `instrument`, ranked.
pub fn score_features(records: &[RatingRecord], instrument: &InstrumentDefinition) -> ScoreTable {
    let subscale_of: Vec<usize> = instrument
        .items
        .iter()
        .map(|it| {
            instrument
                .subscales
                .iter()
                .position(|s| s.id == it.subscale)
                .expect("validated instrument")
        })
        .collect();
    let mut sums: BTreeMap<&str, Sums> = BTreeMap::new();
    for rec in records.iter().filter(|r| r.instrument == instrument.name) {
        let entry = sums.entry(rec.feature_id.as_str()).or_insert_with(|| Sums {
            per_subscale: vec![(0.0, 0); instrument.subscales.len()],
            ..Default::default()
        });
        let mut any = false;
        for (j, v) in rec.responses.iter().enumerate().take(instrument.len()) {
            if let Some(v) = v {
                let v = f64::from(*v);
                entry.overall.0 += v;
                entry.overall.1 += 1;
                let s = &mut entry.per_subscale[subscale_of[j]];
                s.0 += v;
                s.1 += 1;
                any = true;
            }
        }
        if any {
            entry.ratings += 1;
        }
    }

    let mut warnings = Vec::new();
    let mut scores = Vec::new();
    for (feature, s) in sums {
        if s.ratings == 0 {
            warnings.push(format!(
                "feature `{feature}` has no retained ratings and is excluded"
            ));
            continue;
        }
        scores.push(UnderstandabilityScore {
            feature_id: feature.to_string(),
            subscales: instrument
                .subscales
                .iter()
                .zip(&s.per_subscale)
                .map(|(sub, (sum, n))| SubscaleScore {
                    subscale: sub.id.clone(),
                    mean: if *n > 0 { sum / *n as f64 } else { f64::NAN },
                })
                .collect(),
            overall: s.overall.0 / s.overall.1 as f64,
            n_ratings: s.ratings,
            rank: 0,
        });
    }
    ScoreTable {
        instrument: instrument.name.clone(),
        subscales: instrument.subscales.iter().map(|s| s.id.clone()).collect(),
        scores: rank_features(scores),
        warnings,
    }
}

/// Sort by descending overall mean, ties by ascending feature id, and
/// number the ranks 1..m.
pub fn rank_features(mut scores: Vec<UnderstandabilityScore>) -> Vec<UnderstandabilityScore> {
    scores.sort_by(|a, b| {
        b.overall
            .total_cmp(&a.overall)
            .then_with(|| a.feature_id.cmp(&b.feature_id))
    });
    for (i, s) in scores.iter_mut().enumerate() {
        s.rank = i + 1;
    }
    scores
}

impl ScoreTable {
    /// `feature_id,<subscale>...,overall,n_ratings,rank`.
    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let mut header = vec!["feature_id".to_string()];
        header.extend(self.subscales.iter().cloned());
        header.extend(["overall", "n_ratings", "rank"].map(String::from));
        w.write_record(&header)?;
        for s in &self.scores {
            let mut row = vec![s.feature_id.clone()];
            row.extend(s.subscales.iter().map(|x| format!("{:.4}", x.mean)));
            row.push(format!("{:.4}", s.overall));
            row.push(s.n_ratings.to_string());
            row.push(s.rank.to_string());
            w.write_record(&row)?;
        }
        let bytes = w
            .into_inner()
            .map_err(|e| crate::error::Error::InvalidInput(e.to_string()))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scores serialize")
    }
}
