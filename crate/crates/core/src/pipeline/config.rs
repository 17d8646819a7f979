use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::efa::EfaConfig;
use crate::error::{Error, Result};
use crate::ingest::{InstrumentDefinition, QualityPolicy, SplitConfig};

/// Everything a pipeline run depends on. Echoed verbatim into the report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub responses: Option<PathBuf>,
    pub corr: Option<PathBuf>,
    pub n: Option<usize>,
    /// Built-in instrument name or a path to an instrument JSON file.
    pub instrument: String,
    pub quality: QualityPolicy,
    /// When set, EFA runs on one half of the respondents and CFA on the other.
    pub split: Option<SplitConfig>,
    pub efa: EfaConfig,
    pub reduce: bool,
    pub keep: Vec<String>,
    pub drop: Vec<String>,
    /// CFA model file; defaults to the structure found by EFA.
    pub structure: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub seed: u64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            responses: None,
            corr: None,
            n: None,
            instrument: "fus-numerical".into(),
            quality: QualityPolicy::default(),
            split: None,
            efa: EfaConfig::default(),
            reduce: true,
            keep: Vec::new(),
            drop: Vec::new(),
            structure: None,
            out: None,
            seed: 0,
        }
    }
}

pub(crate) enum Input<'a> {
    Responses(&'a Path),
    Correlation(&'a Path, usize),
}

impl PipelineConfig {
    /// Input-mode and output checks, run before any computation.
    pub fn validate(&self) -> Result<()> {
        self.input()?;
        self.efa.validate()?;
        if let Some(split) = &self.split {
            if !(split.fraction > 0.0 && split.fraction < 1.0) {
                return Err(Error::InvalidInput(format!(
                    "split fraction {} must lie in (0, 1)",
                    split.fraction
                )));
            }
            if self.corr.is_some() {
                return Err(Error::InvalidInput(
                    "a correlation matrix cannot be split".into(),
                ));
            }
        }
        if let Some(out) = &self.out {
            std::fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
            if std::fs::metadata(out)
                .map_err(|e| Error::io(out, e))?
                .permissions()
                .readonly()
            {
                return Err(Error::InvalidInput(format!(
                    "output directory {} is not writable",
                    out.display()
                )));
            }
        }
        Ok(())
    }

    pub(crate) fn input(&self) -> Result<Input<'_>> {
        match (&self.responses, &self.corr, self.n) {
            (Some(p), None, None) => Ok(Input::Responses(p)),
            (None, Some(p), Some(n)) => Ok(Input::Correlation(p, n)),
            (None, Some(_), None) => Err(Error::InvalidInput("--corr needs --n".into())),
            (None, None, _) => Err(Error::InvalidInput(
                "supply --responses or --corr with --n".into(),
            )),
            _ => Err(Error::InvalidInput(
                "--responses conflicts with --corr/--n".into(),
            )),
        }
    }

    pub fn resolve_instrument(&self) -> Result<InstrumentDefinition> {
        resolve_instrument(&self.instrument)
    }
}

/// A built-in instrument by name, otherwise an instrument JSON file.
pub fn resolve_instrument(spec: &str) -> Result<InstrumentDefinition> {
    if let Some(def) = InstrumentDefinition::builtin(spec) {
        return Ok(def);
    }
    let text = std::fs::read_to_string(spec).map_err(|e| Error::io(spec, e))?;
    InstrumentDefinition::from_json(&text)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn input_modes() {
        let mut c = PipelineConfig::default();
        assert!(c.validate().is_err());
        c.corr = Some("r.csv".into());
        assert!(c.validate().is_err());
        c.n = Some(100);
        assert!(c.validate().is_ok());
        c.responses = Some("x.csv".into());
        assert!(c.validate().is_err());
    }

    #[test]
    fn instrument_lookup() {
        assert_eq!(resolve_instrument("fus-categorical").unwrap().len(), 9);
        assert!(resolve_instrument("/nonexistent/instrument.json").is_err());
    }
}
