use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::config::PipelineConfig;
use crate::cfa::{CfaFit, ModelSpec, ScaledDifference};
use crate::corr::{format_p, FactorabilityReport};
use crate::efa::{scree_csv, FactorCountSuggestion, FactorSolution, ReductionTrace};
use crate::error::{Error, Result};
use crate::ingest::QualityReport;
use crate::reliability::{ReliabilityReport, ScoreTable};

pub const SECTIONS: [&str; 6] = [
    "quality",
    "factorability",
    "efa",
    "cfa",
    "reliability",
    "scores",
];

pub const RAW_DATA_REQUIRED: &str = "raw data required";

/// A report section that either ran or was skipped for a stated reason.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Block<T> {
    Done(T),
    Skipped(String),
}

impl<T> Block<T> {
    pub fn skipped(reason: impl Into<String>) -> Self {
        Block::Skipped(reason.into())
    }

    pub fn done(&self) -> Option<&T> {
        match self {
            Block::Done(v) => Some(v),
            Block::Skipped(_) => None,
        }
    }

    pub fn reason(&self) -> Option<&str> {
        match self {
            Block::Done(_) => None,
            Block::Skipped(r) => Some(r),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EfaBlock {
    pub n: usize,
    pub eigenvalues: Vec<f64>,
    pub suggestion: FactorCountSuggestion,
    pub initial_factors: usize,
    pub trace: ReductionTrace,
    pub retained_items: Vec<String>,
    pub solution: FactorSolution,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CfaBlock {
    pub structure: ModelSpec,
    pub target: CfaFit,
    /// All retained items on a single factor.
    pub nested: Block<CfaFit>,
    pub difference: Block<ScaledDifference>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum Outcome {
    Complete,
    AnalysisFailure { stage: String, message: String },
    DataQualityAbort { stage: String, message: String },
}

impl Outcome {
    pub fn exit_code(&self) -> i32 {
        match self {
            Outcome::Complete => 0,
            Outcome::AnalysisFailure { .. } => 1,
            Outcome::DataQualityAbort { .. } => 3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub tool_version: String,
    pub config: PipelineConfig,
    pub instrument: String,
    pub outcome: Outcome,
    pub quality: Block<QualityReport>,
    pub factorability: Block<FactorabilityReport>,
    pub efa: Block<EfaBlock>,
    pub cfa: Block<CfaBlock>,
    pub reliability: Block<ReliabilityReport>,
    pub scores: Block<ScoreTable>,
}

/// Wall-clock data kept apart from the report so the report stays
/// byte-stable across runs.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RunMetadata {
    pub stage_ms: BTreeMap<String, u128>,
}

impl ValidationReport {
    pub fn is_complete(&self) -> bool {
        self.outcome == Outcome::Complete
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    /// Human-readable summary.
    pub fn summary(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(
            s,
            "fus {} | instrument {}",
            self.tool_version, self.instrument
        );
        match &self.outcome {
            Outcome::Complete => {
                let _ = writeln!(s, "status: complete");
            }
            Outcome::AnalysisFailure { stage, message }
            | Outcome::DataQualityAbort { stage, message } => {
                let _ = writeln!(s, "status: INCOMPLETE ({stage} failed: {message})");
            }
        }

        for name in SECTIONS {
            s.push_str(&self.section_text(name));
        }
        s
    }

    /// One summary section by name (see [`SECTIONS`]); empty for unknown
    /// names.
    pub fn section_text(&self, name: &str) -> String {
        let mut s = String::new();
        match name {
            "quality" => section(&mut s, "quality", &self.quality, |s, q| {
                let _ = writeln!(
                    s,
                    "  {} in, {} attention failures, {} missing, {} timing outliers flagged, {} removed, {} retained",
                    q.n_input, q.n_removed_attention, q.n_removed_missing, q.n_flagged_time, q.n_removed_time, q.n_retained
                );
            }),
            "factorability" => section(&mut s, "factorability", &self.factorability, |s, f| {
                let _ = writeln!(
                    s,
                    "  Bartlett chi2({}) = {:.2}, p {}",
                    f.bartlett_df,
                    f.bartlett_chi2,
                    format_p(f.bartlett_p)
                );
                let _ = writeln!(s, "  KMO = {:.3}", f.kmo_overall);
                if !f.low_correlation_items.is_empty() {
                    let _ = writeln!(
                        s,
                        "  item-total r < {:.2}: {}",
                        f.low_correlation_threshold,
                        f.low_correlation_items.join(", ")
                    );
                }
            }),
            "efa" => section(&mut s, "efa", &self.efa, |s, e| {
                let _ = writeln!(
                    s,
                    "  n = {}, kaiser = {}, elbow = {}, initial k = {}, final k = {}",
                    e.n,
                    e.suggestion.kaiser,
                    e.suggestion.elbow,
                    e.initial_factors,
                    e.solution.n_factors
                );
                for step in &e.trace.steps {
                    let _ = writeln!(
                        s,
                        "  removed {} ({:?}, k = {})",
                        step.item.as_deref().unwrap_or("-"),
                        step.criterion,
                        step.n_factors
                    );
                }
                let sol = &e.solution;
                for (j, id) in sol.item_ids.iter().enumerate() {
                    let row: Vec<String> = (0..sol.n_factors)
                        .map(|f| format!("{:>6.3}", sol.pattern[(j, f)]))
                        .collect();
                    let _ = writeln!(
                        s,
                        "  {id:<6}{}  h2 = {:.3}",
                        row.join(" "),
                        sol.communalities[j]
                    );
                }
                let ss: Vec<String> = sol
                    .variance
                    .ss_loadings
                    .iter()
                    .map(|v| format!("{v:.3}"))
                    .collect();
                let _ = writeln!(s, "  SS loadings {}", ss.join(" / "));
            }),
            "cfa" => section(&mut s, "cfa", &self.cfa, |s, c| {
                fit_lines(s, "target", &c.target);
                match &c.nested {
                    Block::Done(f) => fit_lines(s, "one-factor", f),
                    Block::Skipped(r) => {
                        let _ = writeln!(s, "  one-factor: SKIPPED: {r}");
                    }
                }
                match &c.difference {
                    Block::Done(d) => {
                        let _ = writeln!(
                            s,
                            "  difference: chi2({}) = {:.3}, c_d = {:.4}, p {}",
                            d.df_d,
                            d.t_d,
                            d.c_d,
                            format_p(d.p)
                        );
                    }
                    Block::Skipped(r) => {
                        let _ = writeln!(s, "  difference: SKIPPED: {r}");
                    }
                }
            }),
            "reliability" => section(&mut s, "reliability", &self.reliability, |s, r| {
                for f in &r.factors {
                    let alpha = f
                        .alpha
                        .map(|a| format!("{a:.3}"))
                        .unwrap_or_else(|| "-".into());
                    let _ = writeln!(
                        s,
                        "  {}: omega = {:.3}, AVE = {:.3}, alpha = {alpha}",
                        f.factor, f.omega, f.ave
                    );
                }
            }),
            "scores" => section(&mut s, "scores", &self.scores, |s, t| {
                for sc in &t.scores {
                    let _ = writeln!(
                        s,
                        "  {:>2}. {:<24} {:.3} (n = {})",
                        sc.rank, sc.feature_id, sc.overall, sc.n_ratings
                    );
                }
                for w in &t.warnings {
                    let _ = writeln!(s, "  warning: {w}");
                }
            }),
            _ => {}
        }
        s
    }
}

fn section<T>(s: &mut String, name: &str, block: &Block<T>, body: impl FnOnce(&mut String, &T)) {
    let _ = writeln!(s, "\n[{name}]");
    match block {
        Block::Done(v) => body(s, v),
        Block::Skipped(reason) => {
            let _ = writeln!(s, "  SKIPPED: {reason}");
        }
    }
}

fn fit_lines(s: &mut String, name: &str, fit: &CfaFit) {
    let nv = &fit.naive;
    let _ = writeln!(
        s,
        "  {name}: chi2({}) = {:.3}, p {}, CFI = {}, TLI = {}, RMSEA = {:.3}, SRMR = {:.3}",
        nv.df,
        nv.t,
        format_p(nv.p),
        opt3(nv.cfi),
        opt3(nv.tli),
        nv.rmsea,
        nv.srmr
    );
    match &fit.robust {
        Some(r) => {
            let _ = writeln!(
                s,
                "    robust: c = {:.4}, chi2 = {:.3}, p {}, CFI = {}, TLI = {}, RMSEA = {:.3}",
                r.scaling_factor,
                r.t_scaled,
                format_p(r.p),
                opt3(r.cfi),
                opt3(r.tli),
                r.rmsea
            );
        }
        None => {
            let _ = writeln!(s, "    robust: SKIPPED: {RAW_DATA_REQUIRED}");
        }
    }
    if let Some(std) = &fit.standardized {
        let names = &fit.model.factors;
        for a in 0..names.len() {
            for b in a + 1..names.len() {
                let _ = writeln!(
                    s,
                    "    r({}, {}) = {:.3}",
                    names[a],
                    names[b],
                    std.factor_correlations[(a, b)]
                );
            }
        }
    }
}

fn opt3(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.3}")).unwrap_or_else(|| "-".into())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReportFormat {
    Json,
    Text,
    Csv,
}

/// Write the report in the requested formats and return the paths written.
///
/// `json` gives `report.json` (plus `metadata.json` when timings are given),
/// `text` gives `summary.txt`, and `csv` gives `scree.csv`, `scores.csv` and
/// `residuals.csv`. Skipped blocks yield header-only CSV files.
pub fn emit_report(
    report: &ValidationReport,
    metadata: Option<&RunMetadata>,
    out: &Path,
    formats: &[ReportFormat],
) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
    let mut written = Vec::new();
    let mut put = |name: &str, body: String| -> Result<()> {
        let path = out.join(name);
        std::fs::write(&path, body).map_err(|e| Error::io(&path, e))?;
        written.push(path);
        Ok(())
    };
    for fmt in formats {
        match fmt {
            ReportFormat::Json => {
                put("report.json", report.to_json())?;
                if let Some(m) = metadata {
                    put("metadata.json", serde_json::to_string_pretty(m)? + "\n")?;
                }
            }
            ReportFormat::Text => put("summary.txt", report.summary())?,
            ReportFormat::Csv => {
                let ev = report
                    .efa
                    .done()
                    .map(|e| e.eigenvalues.as_slice())
                    .unwrap_or(&[]);
                put("scree.csv", scree_csv(ev))?;
                let scores = match &report.scores {
                    Block::Done(t) => t.to_csv()?,
                    Block::Skipped(_) => ScoreTable::default().to_csv()?,
                };
                put("scores.csv", scores)?;
                put(
                    "residuals.csv",
                    residuals_csv(report.cfa.done().map(|c| &c.target)),
                )?;
            }
        }
    }
    Ok(written)
}

/// Long-format standardized residuals `item_a,item_b,residual` over the
/// lower triangle.
pub fn residuals_csv(fit: Option<&CfaFit>) -> String {
    let mut s = String::from("item_a,item_b,residual\n");
    if let Some(fit) = fit {
        let res = fit.standardized_residuals();
        let items = &fit.model.items;
        for b in 0..items.len() {
            for a in b..items.len() {
                let _ = writeln!(s, "{},{},{:.6}", items[a], items[b], res[(a, b)]);
            }
        }
    }
    s
}
