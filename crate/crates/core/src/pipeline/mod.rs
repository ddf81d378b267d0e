//! End-to-end orchestration: file ingestion, per-area evaluation, and
//! deterministic report rendering.
//!
//! The pipeline has two entry modes. `run_evaluate` starts from raw staff,
//! publication and journal files and computes everything bottom-up;
//! `run_dea` starts from a pre-aggregated panel file and runs only the
//! frontier models. Both write the same report set under a run directory,
//! together with a manifest (configuration echo plus input digests) that
//! makes a run reproducible. Nothing in the pipeline depends on map
//! iteration order or wall-clock time, so identical inputs yield
//! byte-identical files.

pub mod ingest;
pub mod outputs;

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::bibliometrics::{
    average_over_period, compute_outputs, headcounts_by_year, match_authors,
    normalize_impact_factors, AmbiguityReport, BiblioError, HomonymPolicy,
};
use crate::dea::{evaluate_panel, CostVector, DeaError, DmuPanel, EfficiencyRecord};
use crate::report::{
    indicator_table, rank, rank_variation, IndicatorTable, OutputSelector, RankVariationStats,
    ReportError,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Csv,
    Json,
}

impl ReportFormat {
    pub fn parse(s: &str) -> Option<Self> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Some(ReportFormat::Csv),
            "json" => Some(ReportFormat::Json),
            _ => None,
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            ReportFormat::Csv => "csv",
            ReportFormat::Json => "json",
        }
    }
}

/// Analysis settings shared by all subcommands.
#[derive(Debug, Clone)]
pub struct RunConfig {
    /// Evaluation period; empty means every year present in the roster.
    pub years: Vec<i32>,
    pub cost_weights: CostVector,
    pub staff_threshold: f64,
    pub homonym_policy: HomonymPolicy,
    /// Converts weighted staff units into the monetary denominator of the
    /// output-per-cost ratio.
    pub cost_scale: f64,
    pub output_selector: OutputSelector,
    pub format: ReportFormat,
    pub out_dir: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            years: Vec::new(),
            cost_weights: CostVector::default(),
            staff_threshold: 5.0,
            homonym_policy: HomonymPolicy::Reject,
            cost_scale: 1.0,
            output_selector: OutputSelector::Pu,
            format: ReportFormat::Csv,
            out_dir: PathBuf::from("."),
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<(), PipelineError> {
        if !self.staff_threshold.is_finite() || self.staff_threshold < 0.0 {
            return Err(PipelineError::Config(format!(
                "staff threshold {} must be a nonnegative real",
                self.staff_threshold
            )));
        }
        if !self.cost_scale.is_finite() || self.cost_scale <= 0.0 {
            return Err(PipelineError::Config(format!(
                "cost scale {} must be a positive real",
                self.cost_scale
            )));
        }
        self.cost_weights
            .validate()
            .map_err(|e| PipelineError::Config(e.to_string()))?;
        Ok(())
    }
}

/// Paths of the three raw input files consumed by `ingest` and `evaluate`.
#[derive(Debug, Clone)]
pub struct InputPaths {
    pub staff: PathBuf,
    pub publications: PathBuf,
    pub journals: PathBuf,
}

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("{file}:{line}: parse error: {detail}")]
    Parse {
        file: String,
        line: u64,
        detail: String,
    },
    #[error("{file}:{line}: schema error: {detail}")]
    Schema {
        file: String,
        line: u64,
        detail: String,
    },
    #[error("referential error: {0}")]
    Referential(String),
    #[error(transparent)]
    Biblio(#[from] BiblioError),
    #[error(transparent)]
    Dea(#[from] DeaError),
    #[error(transparent)]
    Report(#[from] ReportError),
    #[error("{path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
}

impl PipelineError {
    /// Stable process exit code for each error class.
    pub fn exit_code(&self) -> i32 {
        match self {
            PipelineError::Config(_) => 2,
            PipelineError::Parse { .. } => 3,
            PipelineError::Schema { .. } => 4,
            PipelineError::Referential(_) => 5,
            PipelineError::Biblio(_) => 6,
            PipelineError::Dea(_) => 7,
            PipelineError::Report(_) => 8,
            PipelineError::Io { .. } => 9,
        }
    }
}

pub(crate) fn io_error(path: &Path, source: std::io::Error) -> PipelineError {
    PipelineError::Io {
        path: path.display().to_string(),
        source,
    }
}

/// Everything produced for one disciplinary area.
#[derive(Debug, Clone)]
pub struct PanelOutcome {
    pub panel: DmuPanel,
    pub records: Vec<EfficiencyRecord>,
    pub table: IndicatorTable,
}

/// Result of a full `evaluate` or `dea` run.
#[derive(Debug)]
pub struct EvaluationRun {
    pub outcomes: Vec<PanelOutcome>,
    pub ambiguity: Option<AmbiguityReport>,
    pub written: Vec<PathBuf>,
}

/// Counts reported by the validate-only `ingest` subcommand.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IngestSummary {
    pub staff_rows: usize,
    pub publication_rows: usize,
    pub journal_rows: usize,
    pub years: Vec<i32>,
}

/// Parses and validates the three raw input files without computing
/// anything.
pub fn run_ingest(paths: &InputPaths) -> Result<IngestSummary, PipelineError> {
    let datasets = ingest::read_datasets(paths)?;
    let mut years: Vec<i32> = datasets
        .roster
        .iter()
        .map(|s| s.year)
        .collect::<std::collections::BTreeSet<_>>()
        .into_iter()
        .collect();
    years.sort_unstable();
    Ok(IngestSummary {
        staff_rows: datasets.roster.len(),
        publication_rows: datasets.publications.len(),
        journal_rows: datasets.journals.len(),
        years,
    })
}

/// Full bottom-up run: ingestion, author matching, indicator construction,
/// per-area evaluation and report writing.
pub fn run_evaluate(
    config: &RunConfig,
    paths: &InputPaths,
) -> Result<EvaluationRun, PipelineError> {
    config.validate()?;
    let datasets = ingest::read_datasets(paths)?;

    let years = if config.years.is_empty() {
        datasets
            .roster
            .iter()
            .map(|s| s.year)
            .collect::<std::collections::BTreeSet<_>>()
            .into_iter()
            .collect()
    } else {
        config.years.clone()
    };
    if years.is_empty() {
        return Err(PipelineError::Config(
            "no evaluation years: pass --years or provide a non-empty roster".into(),
        ));
    }

    // Publications outside the period play no part, including in the
    // ambiguity report.
    let publications: Vec<_> = datasets
        .publications
        .iter()
        .filter(|p| years.contains(&p.year))
        .cloned()
        .collect();

    let (attributions, ambiguity) =
        match_authors(&publications, &datasets.roster, config.homonym_policy)?;
    let normalized = normalize_impact_factors(&datasets.journals)?;

    let mut yearly_outputs = BTreeMap::new();
    for &year in &years {
        yearly_outputs.insert(
            year,
            compute_outputs(&attributions, &publications, &normalized, year)?,
        );
    }
    let yearly_inputs = headcounts_by_year(&datasets.roster)?;
    let panels = average_over_period(
        &yearly_inputs,
        &yearly_outputs,
        &years,
        config.staff_threshold,
    )?;
    if panels.is_empty() {
        return Err(PipelineError::Config(
            "no research units found in the selected years".into(),
        ));
    }

    let outcomes = evaluate_panels(config, panels)?;
    let digests = outputs::digest_inputs(&[
        paths.staff.as_path(),
        paths.publications.as_path(),
        paths.journals.as_path(),
    ])?;
    let written = outputs::write_run(
        config,
        &outcomes,
        Some(&ambiguity),
        &digests,
        "evaluate",
        &years,
    )?;

    Ok(EvaluationRun {
        outcomes,
        ambiguity: Some(ambiguity),
        written,
    })
}

/// Frontier-only run on a pre-aggregated panel file.
pub fn run_dea(config: &RunConfig, panel_path: &Path) -> Result<EvaluationRun, PipelineError> {
    config.validate()?;
    let panels = ingest::read_panels(panel_path, config.staff_threshold)?;
    if panels.is_empty() {
        return Err(PipelineError::Config(format!(
            "{}: panel file contains no units",
            panel_path.display()
        )));
    }
    let outcomes = evaluate_panels(config, panels)?;
    let digests = outputs::digest_inputs(&[panel_path])?;
    let written = outputs::write_run(config, &outcomes, None, &digests, "dea", &config.years)?;
    Ok(EvaluationRun {
        outcomes,
        ambiguity: None,
        written,
    })
}

fn evaluate_panels(
    config: &RunConfig,
    panels: Vec<DmuPanel>,
) -> Result<Vec<PanelOutcome>, PipelineError> {
    let mut outcomes = Vec::with_capacity(panels.len());
    for panel in panels {
        let records = evaluate_panel(&panel, &config.cost_weights)?;
        let table = indicator_table(
            &panel,
            &records,
            &config.cost_weights,
            config.cost_scale,
            config.output_selector,
        )?;
        outcomes.push(PanelOutcome {
            panel,
            records,
            table,
        });
    }
    Ok(outcomes)
}

/// Re-renders the report files of an earlier run from its stored panel and
/// manifest, optionally in a different format. The manifest, panel echo and
/// ambiguity report of the original run are left untouched.
pub fn run_report(
    run_dir: &Path,
    format_override: Option<ReportFormat>,
) -> Result<EvaluationRun, PipelineError> {
    let manifest_path = run_dir.join("manifest.json");
    let bytes = std::fs::read(&manifest_path).map_err(|e| io_error(&manifest_path, e))?;
    let manifest: serde_json::Value =
        serde_json::from_slice(&bytes).map_err(|e| PipelineError::Parse {
            file: manifest_path.display().to_string(),
            line: e.line() as u64,
            detail: e.to_string(),
        })?;
    let mut config = config_from_manifest(&manifest, &manifest_path)?;
    config.out_dir = run_dir.to_path_buf();
    if let Some(format) = format_override {
        config.format = format;
    }

    let panel_path = run_dir.join("panel.csv");
    let panels = ingest::read_panels(&panel_path, config.staff_threshold)?;
    let outcomes = evaluate_panels(&config, panels)?;
    let written = outputs::write_reports(&config, &outcomes)?;
    Ok(EvaluationRun {
        outcomes,
        ambiguity: None,
        written,
    })
}

fn manifest_key<'v>(
    value: &'v serde_json::Value,
    path: &Path,
    key: &str,
) -> Result<&'v serde_json::Value, PipelineError> {
    value.get(key).ok_or_else(|| {
        PipelineError::Config(format!("{}: manifest lacks key {key:?}", path.display()))
    })
}

fn config_from_manifest(
    manifest: &serde_json::Value,
    path: &Path,
) -> Result<RunConfig, PipelineError> {
    let bad = |what: &str| {
        PipelineError::Config(format!(
            "{}: manifest field {what} is malformed",
            path.display()
        ))
    };
    let config = manifest_key(manifest, path, "config")?;
    let weights = manifest_key(config, path, "cost_weights")?
        .as_array()
        .filter(|a| a.len() == 3)
        .ok_or_else(|| bad("cost_weights"))?;
    let weight = |i: usize| weights[i].as_f64().ok_or_else(|| bad("cost_weights"));
    let years = manifest_key(config, path, "years")?
        .as_array()
        .ok_or_else(|| bad("years"))?
        .iter()
        .map(|y| y.as_i64().map(|y| y as i32).ok_or_else(|| bad("years")))
        .collect::<Result<Vec<i32>, _>>()?;
    let policy_str = manifest_key(config, path, "homonym_policy")?
        .as_str()
        .ok_or_else(|| bad("homonym_policy"))?;
    let selector_str = manifest_key(config, path, "output_selector")?
        .as_str()
        .ok_or_else(|| bad("output_selector"))?;
    let format_str = manifest_key(config, path, "format")?
        .as_str()
        .ok_or_else(|| bad("format"))?;

    Ok(RunConfig {
        years,
        cost_weights: CostVector {
            w_fp: weight(0)?,
            w_ap: weight(1)?,
            w_rf: weight(2)?,
        },
        staff_threshold: manifest_key(config, path, "staff_threshold")?
            .as_f64()
            .ok_or_else(|| bad("staff_threshold"))?,
        homonym_policy: HomonymPolicy::parse(policy_str).ok_or_else(|| bad("homonym_policy"))?,
        cost_scale: manifest_key(config, path, "cost_scale")?
            .as_f64()
            .ok_or_else(|| bad("cost_scale"))?,
        output_selector: OutputSelector::parse(selector_str)
            .ok_or_else(|| bad("output_selector"))?,
        format: ReportFormat::parse(format_str).ok_or_else(|| bad("format"))?,
        out_dir: PathBuf::new(),
    })
}

/// Rank-variation statistics between two indicator columns of a stored
/// efficiency table.
pub fn run_compare(
    table_path: &Path,
    indicator_a: &str,
    indicator_b: &str,
) -> Result<RankVariationStats, PipelineError> {
    let columns = ["te", "ae", "ce", "output_per_scientist", "output_per_cost"];
    for name in [indicator_a, indicator_b] {
        if !columns.contains(&name) {
            return Err(PipelineError::Config(format!(
                "unknown indicator {name:?}; choose one of {columns:?}"
            )));
        }
    }
    let scores = ingest::read_indicator_columns(table_path, indicator_a, indicator_b)?;
    let (scores_a, scores_b) = scores;
    let ranks_a = rank(&scores_a, true)?;
    let ranks_b = rank(&scores_b, true)?;
    Ok(rank_variation(&ranks_a, &ranks_b)?)
}
