use std::collections::BTreeMap;
use std::fs::File;
use std::io::BufReader;
use std::path::Path;
use std::time::Instant;

use super::config::{Input, PipelineConfig};
use super::report::{
    Block, CfaBlock, EfaBlock, Outcome, RunMetadata, ValidationReport, RAW_DATA_REQUIRED,
};
use crate::cfa::{
    build_cfa, estimate_gamma, fit_ml, scaled_chisq_diff, with_robust, CfaOptions, Identification,
    ModelSpec, SampleMoments,
};
use crate::corr::{
    factorability, item_total_correlations, pearson_matrix, CorrelationMatrix, FactorabilityReport,
};
use crate::efa::{
    eigenvalues, fit_efa, reduce_items, suggest_from_eigenvalues, Assignment, FactorCount,
    FactorSolution, ReductionConfig, ReductionTrace,
};
use crate::error::{Error, Result};
use crate::ingest::{
    apply_quality_filters, parse_responses, split_sample, to_matrix, InstrumentDefinition,
    QualityReport, RatingMatrix, RatingRecord, SplitConfig,
};
use crate::reliability::{reliability_from_cfa, score_features, ReliabilityReport};

/// Corrected item-total correlations below this are flagged.
pub const LOW_ITEM_TOTAL: f64 = 0.30;

/// Read a response CSV. Built-in instruments and `instrument` are known to
/// the parser; any malformed row is an error.
pub fn load_responses(path: &Path, instrument: &InstrumentDefinition) -> Result<Vec<RatingRecord>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut known = InstrumentDefinition::builtins();
    if !known.iter().any(|d| d.name == instrument.name) {
        known.push(instrument.clone());
    }
    let parsed = parse_responses(BufReader::new(file), &known)?;
    if let Some(e) = parsed.errors.into_iter().next() {
        return Err(Error::Row {
            line: e.line,
            message: e.message,
        });
    }
    Ok(parsed.records)
}

pub fn load_correlation(path: &Path, n: usize) -> Result<CorrelationMatrix> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    Ok(CorrelationMatrix::from_csv(BufReader::new(file))?.with_n(n))
}

/// Records of `instrument` as a data matrix and its correlation matrix.
pub fn instrument_data(
    records: &[RatingRecord],
    instrument: &InstrumentDefinition,
) -> Result<(RatingMatrix, CorrelationMatrix)> {
    let own: Vec<RatingRecord> = records
        .iter()
        .filter(|r| r.instrument == instrument.name)
        .cloned()
        .collect();
    if own.is_empty() {
        return Err(Error::NoRecords);
    }
    let (data, _) = to_matrix(&own, instrument)?;
    let r = pearson_matrix(&data)?;
    Ok((data, r))
}

pub fn factorability_stage(
    r: &CorrelationMatrix,
    data: Option<&RatingMatrix>,
) -> Result<FactorabilityReport> {
    let n =
        r.n.ok_or_else(|| Error::InvalidInput("factorability needs a sample size".into()))?;
    let item_total = data.map(item_total_correlations).transpose()?;
    factorability(r, n, item_total, LOW_ITEM_TOTAL)
}

/// Factor-count suggestion, extraction and (optionally) item reduction.
pub fn efa_stage(r: &CorrelationMatrix, config: &PipelineConfig) -> Result<EfaBlock> {
    let ev = eigenvalues(r);
    let suggestion = suggest_from_eigenvalues(&ev);
    let k0 = config.efa.resolve_factors(r)?;
    let efa = crate::efa::EfaConfig {
        n_factors: FactorCount::Fixed(k0),
        ..config.efa.clone()
    };
    let (items, trace, solution) = if config.reduce {
        let red = reduce_items(
            r,
            &ReductionConfig {
                efa,
                keep: config.keep.clone(),
                drop: config.drop.clone(),
            },
        )?;
        (red.items, red.trace, red.solution)
    } else {
        for id in &config.drop {
            if r.position(id).is_none() {
                return Err(Error::InvalidInput(format!(
                    "drop list names unknown item `{id}`"
                )));
            }
        }
        let items: Vec<String> = r
            .item_ids
            .iter()
            .filter(|id| !config.drop.contains(id))
            .cloned()
            .collect();
        let sol = fit_efa(&r.select(&items)?, &efa)?;
        (items, ReductionTrace::default(), sol)
    };
    Ok(EfaBlock {
        n: r.n.unwrap_or(0),
        eigenvalues: ev,
        suggestion,
        initial_factors: k0,
        trace,
        retained_items: items,
        solution,
    })
}

/// CFA structure implied by an EFA solution. A factor takes the name of the
/// instrument subscale shared by all its items, otherwise `F1`, `F2`, ...
/// Unassigned items are left out.
pub fn structure_from_efa(sol: &FactorSolution, instrument: &InstrumentDefinition) -> ModelSpec {
    let labels = instrument.item_labels();
    let subscale = |id: &str| {
        labels
            .iter()
            .position(|l| l == id)
            .map(|j| instrument.items[j].subscale.clone())
    };
    let mut names: Vec<String> = (0..sol.n_factors)
        .map(|f| {
            let subs: Vec<Option<String>> = sol
                .items_on(f)
                .iter()
                .map(|&j| subscale(&sol.item_ids[j]))
                .collect();
            match subs.first() {
                Some(Some(first)) if subs.iter().all(|s| s.as_deref() == Some(first)) => {
                    first.clone()
                }
                _ => format!("F{}", f + 1),
            }
        })
        .collect();
    let mut seen = std::collections::BTreeSet::new();
    if !names.iter().all(|n| seen.insert(n.clone())) {
        names = (1..=sol.n_factors).map(|f| format!("F{f}")).collect();
    }
    ModelSpec {
        loadings: sol
            .item_ids
            .iter()
            .zip(&sol.assignment)
            .filter_map(|(id, a)| match a {
                Assignment::Factor(f) => Some((id.clone(), names[*f].clone())),
                _ => None,
            })
            .collect(),
        markers: BTreeMap::new(),
    }
}

/// Target model, one-factor comparison and their difference test. Robust
/// statistics are added when raw data is given.
pub fn cfa_stage(
    sample: &SampleMoments,
    data: Option<&RatingMatrix>,
    spec: &ModelSpec,
) -> Result<CfaBlock> {
    // item order follows the sample, restricted to the modelled items
    let items: Vec<String> = sample
        .item_ids
        .iter()
        .filter(|id| spec.loadings.contains_key(*id))
        .cloned()
        .collect();
    let sample = sample.reordered(&items)?;
    let gamma = match data {
        Some(d) => {
            let cols: Vec<usize> = items
                .iter()
                .map(|id| {
                    d.item_ids
                        .iter()
                        .position(|x| x == id)
                        .expect("sample built from data")
                })
                .collect();
            Some(estimate_gamma(&d.select_columns(&cols))?)
        }
        None => None,
    };
    let opts = CfaOptions::default();
    let fit = |spec: &ModelSpec| -> Result<_> {
        let model = build_cfa(&items, spec, Identification::Marker)?;
        let f = fit_ml(&model, &sample, &opts)?;
        match &gamma {
            Some(g) => with_robust(f, g),
            None => Ok(f),
        }
    };
    let target = fit(spec)?;
    let (nested, difference) = if target.model.k() < 2 {
        let why = "target model has a single factor";
        (Block::skipped(why), Block::skipped(why))
    } else {
        match fit(&ModelSpec::single_factor(&items, "G")) {
            Ok(one) => {
                let diff = match scaled_chisq_diff(&one, &target) {
                    Ok(d) => Block::Done(d),
                    Err(e) => Block::skipped(e.to_string()),
                };
                (Block::Done(one), diff)
            }
            Err(e) => (
                Block::skipped(e.to_string()),
                Block::skipped("one-factor model failed"),
            ),
        }
    };
    Ok(CfaBlock {
        structure: spec.clone(),
        target,
        nested,
        difference,
    })
}

pub fn read_structure(path: &Path) -> Result<ModelSpec> {
    ModelSpec::from_json(&std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?)
}

/// Inputs after loading, quality filtering and (optionally) splitting.
#[derive(Debug, Clone)]
pub struct PreparedInput {
    pub quality: Option<QualityReport>,
    /// All retained records (every instrument), for scoring.
    pub retained: Option<Vec<RatingRecord>>,
    /// EFA-side correlation matrix with its sample size.
    pub r_efa: CorrelationMatrix,
    pub efa_data: Option<RatingMatrix>,
    pub cfa_data: Option<RatingMatrix>,
}

impl PreparedInput {
    /// CFA-side moments: covariances of the raw data, else the correlation
    /// matrix.
    pub fn cfa_sample(&self) -> Result<SampleMoments> {
        match &self.cfa_data {
            Some(d) => SampleMoments::from_data(d),
            None => Ok(SampleMoments::from_correlation(
                &self.r_efa,
                self.r_efa.n.unwrap_or(0),
            )),
        }
    }

    pub fn cfa_correlation(&self) -> Result<CorrelationMatrix> {
        match &self.cfa_data {
            Some(d) => pearson_matrix(d),
            None => Ok(self.r_efa.clone()),
        }
    }
}

pub fn prepare_input(
    config: &PipelineConfig,
    instrument: &InstrumentDefinition,
) -> Result<PreparedInput> {
    match config.input()? {
        Input::Responses(path) => {
            let records = load_responses(path, instrument)?;
            let (kept, quality) = apply_quality_filters(records, &config.quality)?;
            let (efa_side, cfa_side) = match &config.split {
                Some(split) => {
                    let cfg = SplitConfig {
                        seed: config.seed,
                        ..*split
                    };
                    split_sample(kept.clone(), &cfg)?
                }
                None => (kept.clone(), kept.clone()),
            };
            let (efa_data, r) = instrument_data(&efa_side, instrument)?;
            let (cfa_data, _) = instrument_data(&cfa_side, instrument)?;
            Ok(PreparedInput {
                quality: Some(quality),
                retained: Some(kept),
                r_efa: r.with_n(efa_data.n()),
                efa_data: Some(efa_data),
                cfa_data: Some(cfa_data),
            })
        }
        Input::Correlation(path, n) => Ok(PreparedInput {
            quality: None,
            retained: None,
            r_efa: load_correlation(path, n)?,
            efa_data: None,
            cfa_data: None,
        }),
    }
}

/// CFA structure: the configured model file, else the EFA structure.
pub fn resolve_structure(
    config: &PipelineConfig,
    efa: &EfaBlock,
    instrument: &InstrumentDefinition,
) -> Result<ModelSpec> {
    match &config.structure {
        Some(path) => read_structure(path),
        None => Ok(structure_from_efa(&efa.solution, instrument)),
    }
}

pub fn reliability_stage(prep: &PreparedInput, cfa: &CfaBlock) -> Result<ReliabilityReport> {
    let r = prep.cfa_correlation()?;
    reliability_from_cfa(&cfa.target, Some(&r.select(&cfa.target.model.items)?))
}

type StageError = (&'static str, Error);

struct Runner<'a> {
    config: &'a PipelineConfig,
    instrument: InstrumentDefinition,
    report: ValidationReport,
    meta: RunMetadata,
}

impl Runner<'_> {
    fn timed<T>(
        &mut self,
        stage: &'static str,
        f: impl FnOnce() -> Result<T>,
    ) -> Result<T, StageError> {
        let t0 = Instant::now();
        let out = f().map_err(|e| (stage, e));
        self.meta
            .stage_ms
            .insert(stage.to_string(), t0.elapsed().as_millis());
        out
    }

    fn run(&mut self) -> Result<(), StageError> {
        let config = self.config;
        let instrument = self.instrument.clone();
        let prep = self.timed("quality", || prepare_input(config, &instrument))?;
        self.report.quality = match &prep.quality {
            Some(q) => Block::Done(q.clone()),
            None => Block::skipped(RAW_DATA_REQUIRED),
        };

        let fact = self.timed("factorability", || {
            factorability_stage(&prep.r_efa, prep.efa_data.as_ref())
        })?;
        self.report.factorability = Block::Done(fact);

        let efa = self.timed("efa", || efa_stage(&prep.r_efa, config))?;
        let cfa = self.timed("cfa", || {
            let spec = resolve_structure(config, &efa, &instrument)?;
            cfa_stage(&prep.cfa_sample()?, prep.cfa_data.as_ref(), &spec)
        })?;
        self.report.efa = Block::Done(efa);

        let rel = self.timed("reliability", || reliability_stage(&prep, &cfa))?;
        self.report.cfa = Block::Done(cfa);
        self.report.reliability = Block::Done(rel);

        self.report.scores = match &prep.retained {
            Some(kept) => {
                Block::Done(self.timed("scores", || Ok(score_features(kept, &instrument)))?)
            }
            None => Block::skipped(RAW_DATA_REQUIRED),
        };
        Ok(())
    }
}
/// Run quality → factorability → EFA/reduction → CFA → reliability →
/// scoring. Configuration problems are returned as errors before any
/// computation; a failing stage yields a partial report whose outcome names
/// the stage.
pub fn run_pipeline(config: &PipelineConfig) -> Result<(ValidationReport, RunMetadata)> {
    config.validate()?;
    let instrument = config.resolve_instrument()?;
    fn pending<T>() -> Block<T> {
        Block::skipped("not run: an earlier stage failed")
    }
    let mut runner = Runner {
        config,
        report: ValidationReport {
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            config: config.clone(),
            instrument: instrument.name.clone(),
            outcome: Outcome::Complete,
            quality: pending(),
            factorability: pending(),
            efa: pending(),
            cfa: pending(),
            reliability: pending(),
            scores: pending(),
        },
        instrument,
        meta: RunMetadata::default(),
    };
    if let Err((stage, e)) = runner.run() {
        let (stage, message) = (stage.to_string(), e.to_string());
        runner.report.outcome = match e {
            Error::NoRecords => Outcome::DataQualityAbort { stage, message },
            _ => Outcome::AnalysisFailure { stage, message },
        };
    }
    Ok((runner.report, runner.meta))
}
