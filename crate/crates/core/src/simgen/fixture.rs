use std::collections::BTreeMap;

use nalgebra::DMatrix;
use rand::seq::{index, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, LogNormal};
use serde::{Deserialize, Serialize};

use super::model::{discretize_likert, generate_factor_data_with, PopulationModel};
use crate::efa::{fit_efa, EfaConfig};
use crate::error::{Error, Result};
use crate::ingest::{
    reference_features, InstrumentDefinition, InstrumentKind, RatingRecord, Split,
};
use crate::reference;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum AttentionPlan {
    /// Each rating fails independently with this probability.
    Rate { rate: f64 },
    /// Exactly this many failing ratings per instrument kind.
    Exact {
        numerical: usize,
        categorical: usize,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeaturePlan {
    pub feature_id: String,
    pub instrument: String,
    pub kind: InstrumentKind,
    /// Latent location shift; positive values raise the ratings.
    pub shift: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationPlan {
    /// Population model per instrument name.
    pub models: BTreeMap<String, PopulationModel>,
    pub features: Vec<FeaturePlan>,
    pub n_per_feature: usize,
    pub ratings_per_respondent: usize,
    pub attention: AttentionPlan,
    pub median_duration_s: f64,
    pub duration_sigma: f64,
    pub respondent_prefix: String,
    pub seed: u64,
}

impl SimulationPlan {
    pub fn from_json(text: &str) -> Result<Self> {
        let plan: SimulationPlan = serde_json::from_str(text)?;
        plan.validate()?;
        Ok(plan)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("plan serializes")
    }

    pub fn validate(&self) -> Result<()> {
        if self.features.is_empty() || self.n_per_feature == 0 {
            return Err(Error::InvalidInput(
                "plan needs at least one feature and one rating".into(),
            ));
        }
        if self.ratings_per_respondent == 0 || self.ratings_per_respondent > self.features.len() {
            return Err(Error::InvalidInput(format!(
                "ratings_per_respondent must lie in 1..={}",
                self.features.len()
            )));
        }
        if !(self.median_duration_s > 0.0) || !(self.duration_sigma >= 0.0) {
            return Err(Error::InvalidInput(
                "duration parameters must be positive".into(),
            ));
        }
        if let AttentionPlan::Rate { rate } = self.attention {
            if !(0.0..=1.0).contains(&rate) {
                return Err(Error::InvalidInput(format!(
                    "attention failure rate {rate} outside [0, 1]"
                )));
            }
        }
        for f in &self.features {
            let model = self.models.get(&f.instrument).ok_or_else(|| {
                Error::InvalidInput(format!(
                    "feature `{}` uses unknown instrument `{}`",
                    f.feature_id, f.instrument
                ))
            })?;
            model.validate()?;
        }
        Ok(())
    }

    /// Population mean rating of each feature (item means averaged).
    pub fn expected_scores(&self) -> Vec<(String, f64)> {
        self.features
            .iter()
            .map(|f| {
                let means = self.models[&f.instrument]
                    .shifted(f.shift)
                    .expected_likert_means();
                (
                    f.feature_id.clone(),
                    means.iter().sum::<f64>() / means.len() as f64,
                )
            })
            .collect()
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }
}

struct FeatureDraws {
    likert: DMatrix<u8>,
    attention: Vec<u8>,
    durations: Vec<f64>,
}

fn rng_stream(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

const FAILING: [u8; 4] = [1, 2, 4, 5];

/// All ratings of one feature from its own substream, so features can be
/// generated in any order or in parallel with identical results.
fn draw_feature(plan: &SimulationPlan, index: usize) -> Result<FeatureDraws> {
    let f = &plan.features[index];
    let model = plan.models[&f.instrument].shifted(f.shift);
    let mut rng = rng_stream(plan.seed, index as u64 + 1);
    let latent = generate_factor_data_with(&model, plan.n_per_feature, &mut rng)?;
    let likert = discretize_likert(&latent, &model.thresholds)?;
    let dist = LogNormal::new(plan.median_duration_s.ln(), plan.duration_sigma)
        .map_err(|e| Error::InvalidInput(e.to_string()))?;
    let mut attention = Vec::with_capacity(plan.n_per_feature);
    let mut durations = Vec::with_capacity(plan.n_per_feature);
    for _ in 0..plan.n_per_feature {
        let fail = match plan.attention {
            AttentionPlan::Rate { rate } => rng.gen::<f64>() < rate,
            AttentionPlan::Exact { .. } => false,
        };
        attention.push(if fail {
            *FAILING.choose(&mut rng).expect("nonempty")
        } else {
            3
        });
        // written with one decimal; round now so files round-trip exactly
        durations.push((dist.sample(&mut rng) * 10.0).round() / 10.0);
    }
    Ok(FeatureDraws {
        likert,
        attention,
        durations,
    })
}

/// Simulated rating records: respondents rate `ratings_per_respondent`
/// features each, every feature is rated `n_per_feature` times, and features
/// are dealt in shuffled rounds so they appear with equal frequency.
pub fn generate_rating_fixture(plan: &SimulationPlan) -> Result<Vec<RatingRecord>> {
    plan.validate()?;
    let draws = (0..plan.features.len())
        .map(|i| draw_feature(plan, i))
        .collect::<Result<Vec<_>>>()?;

    let mut rng = rng_stream(plan.seed, 0);
    let mut deal = Vec::with_capacity(plan.features.len() * plan.n_per_feature);
    for _ in 0..plan.n_per_feature {
        let mut round: Vec<usize> = (0..plan.features.len()).collect();
        round.shuffle(&mut rng);
        deal.extend(round);
    }

    let mut used = vec![0usize; plan.features.len()];
    let mut records = Vec::with_capacity(deal.len());
    for (pos, &fi) in deal.iter().enumerate() {
        let respondent = pos / plan.ratings_per_respondent;
        let k = used[fi];
        used[fi] += 1;
        let f = &plan.features[fi];
        let d = &draws[fi];
        records.push(RatingRecord {
            respondent_id: format!("{}{:05}", plan.respondent_prefix, respondent + 1),
            feature_id: f.feature_id.clone(),
            instrument: f.instrument.clone(),
            kind: f.kind,
            responses: d.likert.row(k).iter().map(|&v| Some(v)).collect(),
            attention_response: d.attention[k],
            duration_seconds: d.durations[k],
            split: Split::Unassigned,
        });
    }

    if let AttentionPlan::Exact {
        numerical,
        categorical,
    } = plan.attention
    {
        for (kind, count) in [
            (InstrumentKind::Numerical, numerical),
            (InstrumentKind::Categorical, categorical),
        ] {
            let candidates: Vec<usize> = (0..records.len())
                .filter(|&i| records[i].kind == kind)
                .collect();
            if count > candidates.len() {
                return Err(Error::InvalidInput(format!(
                    "{count} {} attention failures requested but only {} ratings exist",
                    kind.as_str(),
                    candidates.len()
                )));
            }
            let mut chosen: Vec<usize> =
                index::sample(&mut rng, candidates.len(), count).into_vec();
            chosen.sort_unstable();
            for c in chosen {
                records[candidates[c]].attention_response =
                    *FAILING.choose(&mut rng).expect("nonempty");
            }
        }
    }
    Ok(records)
}

/// Skewed cut points giving item means near 3.8 at zero shift.
pub const NUMERICAL_THRESHOLDS: [f64; 4] = [-2.0, -1.2, -0.5, 0.7];
/// Cut points giving item means near 3.5 at zero shift.
pub const CATEGORICAL_THRESHOLDS: [f64; 4] = [-1.8, -0.9, -0.2, 0.9];

/// Planted understandability shift per reference feature.
pub fn reference_shifts() -> BTreeMap<&'static str, f64> {
    [
        ("personality_score", -0.3),
        ("bmi", 0.4),
        ("total_cholesterol", 0.1),
        ("credit_score", 0.2),
        ("debt", 0.0),
        ("recruitment_strategy", -0.4),
        ("degree", 0.3),
        ("neoplasm_stage", 0.0),
        ("loan_type", -0.1),
    ]
    .into_iter()
    .collect()
}

fn table_model(
    instrument: &InstrumentDefinition,
    table: &[(usize, f64)],
    phi12: f64,
    thresholds: [f64; 4],
) -> Result<PopulationModel> {
    let lam = DMatrix::from_fn(table.len(), 2, |j, f| {
        if table[j].0 == f {
            table[j].1
        } else {
            0.0
        }
    });
    let phi = DMatrix::from_row_slice(2, 2, &[1.0, phi12, phi12, 1.0]);
    PopulationModel::standardized(
        instrument.item_labels(),
        lam,
        phi,
        vec![thresholds; table.len()],
        0,
    )
}

fn plan_for(
    models: BTreeMap<String, PopulationModel>,
    numerical: &str,
    categorical: &str,
    n_per_feature: usize,
    attention: AttentionPlan,
    seed: u64,
) -> SimulationPlan {
    let shifts = reference_shifts();
    let features = reference_features()
        .into_iter()
        .map(|f| FeaturePlan {
            instrument: match f.kind {
                InstrumentKind::Numerical => numerical.to_string(),
                InstrumentKind::Categorical => categorical.to_string(),
            },
            kind: f.kind,
            shift: shifts[f.id.as_str()],
            feature_id: f.id,
        })
        .collect();
    SimulationPlan {
        models,
        features,
        n_per_feature,
        ratings_per_respondent: 3,
        attention,
        median_duration_s: 180.0,
        duration_sigma: 0.4,
        respondent_prefix: "R".into(),
        seed,
    }
}

/// Final instruments with the reference two-factor loadings and factor
/// correlations as the population, nine reference features, and an
/// attention failure rate of 19 in 2160.
pub fn reference_plan(n_per_feature: usize, seed: u64) -> Result<SimulationPlan> {
    let num = InstrumentDefinition::numerical();
    let cat = InstrumentDefinition::categorical();
    let mut models = BTreeMap::new();
    models.insert(
        num.name.clone(),
        table_model(
            &num,
            &reference::NUMERICAL_LOADINGS,
            0.48,
            NUMERICAL_THRESHOLDS,
        )?,
    );
    models.insert(
        cat.name.clone(),
        table_model(
            &cat,
            &reference::CATEGORICAL_LOADINGS,
            0.65,
            CATEGORICAL_THRESHOLDS,
        )?,
    );
    Ok(plan_for(
        models,
        &num.name,
        &cat.name,
        n_per_feature,
        AttentionPlan::Rate {
            rate: 19.0 / 2160.0,
        },
        seed,
    ))
}

fn draft_model(
    instrument: &InstrumentDefinition,
    r: &crate::corr::CorrelationMatrix,
    k: usize,
    thresholds: [f64; 4],
) -> Result<PopulationModel> {
    let sol = fit_efa(r, &EfaConfig::with_factors(k))?;
    PopulationModel::standardized(
        instrument.item_labels(),
        sol.pattern,
        sol.phi,
        vec![thresholds; instrument.len()],
        0,
    )
}

/// Draft (pre-reduction) instruments with populations taken from ML + Promax
/// fits of the reference pre-reduction matrices (3 numerical factors, 2
/// categorical), and exactly 1 numerical and 18 categorical attention
/// failures.
pub fn efa_phase_plan(seed: u64) -> Result<SimulationPlan> {
    let num = InstrumentDefinition::numerical_draft();
    let cat = InstrumentDefinition::categorical_draft();
    let mut models = BTreeMap::new();
    models.insert(
        num.name.clone(),
        draft_model(
            &num,
            &reference::numerical_pre_efa(),
            3,
            NUMERICAL_THRESHOLDS,
        )?,
    );
    models.insert(
        cat.name.clone(),
        draft_model(
            &cat,
            &reference::categorical_pre_efa(),
            2,
            CATEGORICAL_THRESHOLDS,
        )?,
    );
    Ok(plan_for(
        models,
        &num.name,
        &cat.name,
        240,
        AttentionPlan::Exact {
            numerical: 1,
            categorical: 18,
        },
        seed,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn design_counts() {
        let plan = reference_plan(20, 3).unwrap();
        let recs = generate_rating_fixture(&plan).unwrap();
        assert_eq!(recs.len(), 180);
        let mut per_feature: BTreeMap<&str, usize> = BTreeMap::new();
        let mut per_resp: BTreeMap<&str, usize> = BTreeMap::new();
        for r in &recs {
            *per_feature.entry(&r.feature_id).or_default() += 1;
            *per_resp.entry(&r.respondent_id).or_default() += 1;
        }
        assert!(per_feature.values().all(|&c| c == 20));
        assert_eq!(per_resp.len(), 60);
        assert!(per_resp.values().all(|&c| c == 3));
    }

    #[test]
    fn clean_plan_has_no_failures() {
        let mut plan = reference_plan(10, 1).unwrap();
        plan.attention = AttentionPlan::Rate { rate: 0.0 };
        let recs = generate_rating_fixture(&plan).unwrap();
        assert!(recs.iter().all(|r| r.attention_response == 3));
    }

    #[test]
    fn exact_failures() {
        let mut plan = reference_plan(10, 1).unwrap();
        plan.attention = AttentionPlan::Exact {
            numerical: 2,
            categorical: 5,
        };
        let recs = generate_rating_fixture(&plan).unwrap();
        let fails = |k| {
            recs.iter()
                .filter(|r| r.kind == k && r.attention_response != 3)
                .count()
        };
        assert_eq!(fails(InstrumentKind::Numerical), 2);
        assert_eq!(fails(InstrumentKind::Categorical), 5);
    }

    #[test]
    fn feature_streams_are_independent_of_other_features() {
        let plan = reference_plan(15, 9).unwrap();
        let mut fewer = plan.clone();
        fewer.features.truncate(1);
        fewer.ratings_per_respondent = 1;
        let a = draw_feature(&plan, 0).unwrap();
        let b = draw_feature(&fewer, 0).unwrap();
        assert_eq!(a.likert, b.likert);
        assert_eq!(a.durations, b.durations);
    }

    #[test]
    fn plan_json_roundtrip() {
        let plan = reference_plan(5, 2).unwrap();
        let back = SimulationPlan::from_json(&plan.to_json()).unwrap();
        assert_eq!(back, plan);
    }
}
