use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand, ValueEnum};
use fus_core::efa::{EfaConfig, FactorCount, Rotation};
use fus_core::ingest::{SplitConfig, StratifyBy};
use fus_core::pipeline::{
    cfa_stage, efa_stage, emit_report, factorability_stage, prepare_input, reliability_stage,
    resolve_structure, run_pipeline, Block, Outcome, PipelineConfig, PreparedInput, ReportFormat,
    ValidationReport,
};
use fus_core::reliability::score_features;
use fus_core::simgen::{efa_phase_plan, generate_rating_fixture, reference_plan, SimulationPlan};

#[derive(Parser)]
#[command(
    name = "fus",
    version,
    about = "Feature understandability scale validation"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Parse inputs and report data quality.
    Check(Stage),
    /// Bartlett's test, KMO and item-total diagnostics.
    Factorability(Stage),
    /// Factor extraction, rotation and item reduction.
    Efa(Stage),
    /// Confirmatory fit of the target and one-factor models.
    Cfa(Stage),
    /// Omega, AVE and alpha per factor of the CFA model.
    Reliability(Stage),
    /// Per-feature understandability scores.
    Score(Stage),
    /// Write a simulated response file.
    Simulate(Simulate),
    /// Run every stage and write the report files.
    Pipeline(Stage),
}

#[derive(Args)]
struct Stage {
    #[arg(long, value_name = "PATH")]
    responses: Option<PathBuf>,
    #[arg(long, value_name = "PATH")]
    corr: Option<PathBuf>,
    #[arg(long, value_name = "INT")]
    n: Option<usize>,
    /// Built-in instrument name or instrument JSON path.
    #[arg(long, default_value = "fus-numerical")]
    instrument: String,
    /// Number of factors, or `auto` (Kaiser and scree must agree).
    #[arg(long, default_value = "auto", value_parser = parse_factors)]
    factors: FactorCount,
    #[arg(long, value_enum, default_value_t = RotationArg::Promax)]
    rotation: RotationArg,
    /// CFA model JSON; defaults to the EFA structure.
    #[arg(long, value_name = "PATH")]
    structure: Option<PathBuf>,
    #[arg(long, num_args = 1.., value_name = "ITEM")]
    keep: Vec<String>,
    #[arg(long, num_args = 1.., value_name = "ITEM")]
    drop: Vec<String>,
    /// Skip automated item reduction.
    #[arg(long)]
    no_reduce: bool,
    /// Fit EFA on this fraction of respondents and CFA on the rest.
    #[arg(long, value_name = "FRACTION")]
    split: Option<f64>,
    #[arg(long, env = "FUS_SEED", default_value_t = 0)]
    seed: u64,
    /// Output file (single stages) or directory (`pipeline`).
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
    #[arg(long, value_enum, value_delimiter = ',')]
    format: Vec<FormatArg>,
}

#[derive(Args)]
struct Simulate {
    /// Simulation plan JSON; defaults to the built-in reference plan.
    #[arg(long, value_name = "PATH")]
    model: Option<PathBuf>,
    /// Use the draft-instrument plan with exact attention failures.
    #[arg(long, conflicts_with = "model")]
    draft: bool,
    #[arg(long)]
    n_per_feature: Option<usize>,
    #[arg(long, env = "FUS_SEED")]
    seed: Option<u64>,
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
    /// Write the plan JSON instead of responses.
    #[arg(long)]
    emit_plan: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum RotationArg {
    None,
    Varimax,
    Promax,
}

#[derive(Clone, Copy, PartialEq, ValueEnum)]
enum FormatArg {
    Json,
    Text,
    Csv,
}

fn parse_factors(s: &str) -> Result<FactorCount, String> {
    if s == "auto" {
        return Ok(FactorCount::Auto);
    }
    match s.parse::<usize>() {
        Ok(k) if k > 0 => Ok(FactorCount::Fixed(k)),
        _ => Err(format!("expected a positive integer or `auto`, got `{s}`")),
    }
}

/// Failure classes mapped to exit codes.
enum Failure {
    Usage(anyhow::Error),
    Analysis(anyhow::Error),
    DataQuality(anyhow::Error),
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        match e.downcast_ref::<fus_core::Error>() {
            Some(fus_core::Error::NoRecords) => Failure::DataQuality(e),
            _ => Failure::Analysis(e),
        }
    }
}

impl From<fus_core::Error> for Failure {
    fn from(e: fus_core::Error) -> Self {
        Failure::from(anyhow::Error::from(e))
    }
}

impl Stage {
    fn config(&self) -> Result<PipelineConfig, Failure> {
        let config = PipelineConfig {
            responses: self.responses.clone(),
            corr: self.corr.clone(),
            n: self.n,
            instrument: self.instrument.clone(),
            quality: Default::default(),
            split: self.split.map(|fraction| SplitConfig {
                fraction,
                stratify_by: StratifyBy::InstrumentKind,
                seed: self.seed,
                ..Default::default()
            }),
            efa: EfaConfig {
                n_factors: self.factors,
                rotation: match self.rotation {
                    RotationArg::None => Rotation::None,
                    RotationArg::Varimax => Rotation::Varimax,
                    RotationArg::Promax => Rotation::Promax,
                },
                ..Default::default()
            },
            reduce: !self.no_reduce,
            keep: self.keep.clone(),
            drop: self.drop.clone(),
            structure: self.structure.clone(),
            out: None,
            seed: self.seed,
        };
        config
            .validate()
            .and_then(|_| config.resolve_instrument().map(|_| ()))
            .map_err(|e| Failure::Usage(e.into()))?;
        Ok(config)
    }

    fn format(&self) -> FormatArg {
        self.format.first().copied().unwrap_or(FormatArg::Json)
    }
}

fn write_out(out: Option<&Path>, body: &str) -> anyhow::Result<()> {
    match out {
        Some(path) => {
            std::fs::write(path, body).with_context(|| format!("writing {}", path.display()))
        }
        None => {
            std::io::stdout().write_all(body.as_bytes())?;
            Ok(())
        }
    }
}

fn empty_report(config: &PipelineConfig) -> anyhow::Result<ValidationReport> {
    let skip = || "not requested".to_string();
    Ok(ValidationReport {
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        config: config.clone(),
        instrument: config.resolve_instrument()?.name,
        outcome: Outcome::Complete,
        quality: Block::Skipped(skip()),
        factorability: Block::Skipped(skip()),
        efa: Block::Skipped(skip()),
        cfa: Block::Skipped(skip()),
        reliability: Block::Skipped(skip()),
        scores: Block::Skipped(skip()),
    })
}

fn json<T: serde::Serialize>(v: &T) -> anyhow::Result<String> {
    Ok(serde_json::to_string_pretty(v)? + "\n")
}

/// Run one stage (and whatever it depends on), then print only its block.
fn single_stage(name: &str, args: &Stage) -> Result<(), Failure> {
    let config = args.config()?;
    let instrument = config.resolve_instrument()?;
    let prep: PreparedInput = prepare_input(&config, &instrument)?;
    let mut report = empty_report(&config)?;
    let fmt = args.format();
    let csv_unavailable = || Failure::Usage(anyhow::anyhow!("`{name}` has no csv output"));

    let body = match name {
        "check" => {
            let block = match &prep.quality {
                Some(q) => Block::Done(q.clone()),
                None => Block::Skipped(fus_core::pipeline::RAW_DATA_REQUIRED.to_string()),
            };
            let body = match fmt {
                FormatArg::Json => json(&block)?,
                FormatArg::Text => {
                    report.quality = block;
                    report.section_text("quality")
                }
                FormatArg::Csv => return Err(csv_unavailable()),
            };
            body
        }
        "factorability" => {
            let f = factorability_stage(&prep.r_efa, prep.efa_data.as_ref())?;
            match fmt {
                FormatArg::Json => json(&f)?,
                FormatArg::Text => {
                    report.factorability = Block::Done(f);
                    report.section_text(name)
                }
                FormatArg::Csv => return Err(csv_unavailable()),
            }
        }
        "efa" => {
            let e = efa_stage(&prep.r_efa, &config)?;
            match fmt {
                FormatArg::Json => json(&e)?,
                FormatArg::Csv => fus_core::efa::scree_csv(&e.eigenvalues),
                FormatArg::Text => {
                    report.efa = Block::Done(e);
                    report.section_text(name)
                }
            }
        }
        "cfa" | "reliability" => {
            let e = efa_stage(&prep.r_efa, &config)?;
            let spec = resolve_structure(&config, &e, &instrument)?;
            let c = cfa_stage(&prep.cfa_sample()?, prep.cfa_data.as_ref(), &spec)?;
            if name == "cfa" {
                match fmt {
                    FormatArg::Json => json(&c)?,
                    FormatArg::Csv => fus_core::pipeline::residuals_csv(Some(&c.target)),
                    FormatArg::Text => {
                        report.cfa = Block::Done(c);
                        report.section_text(name)
                    }
                }
            } else {
                let r = reliability_stage(&prep, &c)?;
                match fmt {
                    FormatArg::Json => json(&r)?,
                    FormatArg::Text => {
                        report.reliability = Block::Done(r);
                        report.section_text(name)
                    }
                    FormatArg::Csv => return Err(csv_unavailable()),
                }
            }
        }
        "score" => {
            let Some(kept) = &prep.retained else {
                return Err(Failure::Usage(anyhow::anyhow!("`score` needs --responses")));
            };
            let t = score_features(kept, &instrument);
            match fmt {
                FormatArg::Json => json(&t)?,
                FormatArg::Csv => t.to_csv()?,
                FormatArg::Text => {
                    report.scores = Block::Done(t);
                    report.section_text("scores")
                }
            }
        }
        _ => unreachable!("dispatch covers every stage"),
    };
    write_out(args.out.as_deref(), &body)?;
    Ok(())
}

fn pipeline(args: &Stage) -> Result<(), Failure> {
    let config = args.config()?;
    let (report, meta) = run_pipeline(&config)?;
    match &args.out {
        Some(dir) => {
            let formats: Vec<ReportFormat> = if args.format.is_empty() {
                vec![ReportFormat::Json, ReportFormat::Text, ReportFormat::Csv]
            } else {
                args.format
                    .iter()
                    .map(|f| match f {
                        FormatArg::Json => ReportFormat::Json,
                        FormatArg::Text => ReportFormat::Text,
                        FormatArg::Csv => ReportFormat::Csv,
                    })
                    .collect()
            };
            emit_report(&report, Some(&meta), dir, &formats)?;
        }
        None => match args.format() {
            FormatArg::Json => write_out(None, &report.to_json())?,
            _ => write_out(None, &report.summary())?,
        },
    }
    match &report.outcome {
        Outcome::Complete => Ok(()),
        Outcome::AnalysisFailure { stage, message } => {
            Err(Failure::Analysis(anyhow::anyhow!("{stage}: {message}")))
        }
        Outcome::DataQualityAbort { stage, message } => {
            Err(Failure::DataQuality(anyhow::anyhow!("{stage}: {message}")))
        }
    }
}

fn simulate(args: &Simulate) -> Result<(), Failure> {
    let mut plan = match (&args.model, args.draft) {
        (Some(path), _) => {
            let text = std::fs::read_to_string(path)
                .with_context(|| format!("reading {}", path.display()))
                .map_err(Failure::Usage)?;
            SimulationPlan::from_json(&text).map_err(|e| Failure::Usage(e.into()))?
        }
        (None, true) => efa_phase_plan(1)?,
        (None, false) => reference_plan(240, 1)?,
    };
    if let Some(seed) = args.seed {
        plan.seed = seed;
    }
    if let Some(n) = args.n_per_feature {
        plan.n_per_feature = n;
    }
    if args.emit_plan {
        write_out(args.out.as_deref(), &(plan.to_json() + "\n"))?;
        return Ok(());
    }
    let records = generate_rating_fixture(&plan)?;
    let mut buf = Vec::new();
    fus_core::ingest::write_responses(&mut buf, &records)?;
    write_out(
        args.out.as_deref(),
        &String::from_utf8(buf).context("fixture is utf-8")?,
    )?;
    Ok(())
}

fn run(cli: Cli) -> Result<(), Failure> {
    match &cli.command {
        Command::Check(a) => single_stage("check", a),
        Command::Factorability(a) => single_stage("factorability", a),
        Command::Efa(a) => single_stage("efa", a),
        Command::Cfa(a) => single_stage("cfa", a),
        Command::Reliability(a) => single_stage("reliability", a),
        Command::Score(a) => single_stage("score", a),
        Command::Simulate(a) => simulate(a),
        Command::Pipeline(a) => pipeline(a),
    }
}

fn main() -> ExitCode {
    // clap exits with code 2 on usage errors
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            let (code, e) = match f {
                Failure::Usage(e) => (2, e),
                Failure::Analysis(e) => (1, e),
                Failure::DataQuality(e) => (3, e),
            };
            eprintln!("error: {e:#}");
            ExitCode::from(code)
        }
    }
}
