//! Terminal front end over the evaluation pipeline.
//!
//! Each error class carries a stable exit code (configuration 2, parse 3,
//! schema 4, referential 5, bibliometrics 6, frontier models 7, reporting
//! 8, io 9) so scripted callers can branch on what went wrong.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use scifront_core::bibliometrics::HomonymPolicy;
use scifront_core::dea::CostVector;
use scifront_core::pipeline::{
    self, outputs, EvaluationRun, InputPaths, PipelineError, ReportFormat, RunConfig,
};
use scifront_core::report::OutputSelector;

#[derive(Parser)]
#[command(
    name = "scifront",
    version,
    about = "Measures technical, allocative and cost efficiency of research units from bibliometric data"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Validate the three raw input files without computing anything
    Ingest(RawInputArgs),
    /// Run the full pipeline from raw files to a report directory
    Evaluate {
        #[command(flatten)]
        inputs: RawInputArgs,
        #[command(flatten)]
        analysis: AnalysisArgs,
    },
    /// Evaluate a pre-aggregated panel file
    Dea {
        /// Panel CSV with one row per research unit
        #[arg(long)]
        panel: PathBuf,
        #[command(flatten)]
        analysis: AnalysisArgs,
    },
    /// Re-render the reports of an earlier run from its stored panel
    Report {
        /// Run directory containing manifest.json and panel.csv
        #[arg(long)]
        run: PathBuf,
        /// Override the stored report format: csv or json
        #[arg(long)]
        format: Option<String>,
    },
    /// Rank-variation statistics between two columns of a stored table
    Compare {
        /// Path to a stored per-area efficiency table
        #[arg(long)]
        table: PathBuf,
        /// First indicator column
        #[arg(long)]
        indicator_a: String,
        /// Second indicator column
        #[arg(long)]
        indicator_b: String,
    },
}

#[derive(Args)]
struct RawInputArgs {
    /// Roster CSV: staff_id, last_name, first_initial, university_id, uda, rank, year
    #[arg(long)]
    staff: PathBuf,
    /// Publication CSV: pub_id, year, journal_id, total_author_count, authors, claimed_universities
    #[arg(long)]
    publications: PathBuf,
    /// Journal CSV: journal_id, category, impact_factor
    #[arg(long)]
    journals: PathBuf,
}

impl RawInputArgs {
    fn into_paths(self) -> InputPaths {
        InputPaths {
            staff: self.staff,
            publications: self.publications,
            journals: self.journals,
        }
    }
}

#[derive(Args)]
struct AnalysisArgs {
    /// Comma-separated evaluation years; defaults to every roster year
    #[arg(long)]
    years: Option<String>,
    /// Comma-separated rank costs w_fp,w_ap,w_rf
    #[arg(long)]
    cost_weights: Option<String>,
    /// Minimum average research staff for a unit to be evaluated
    #[arg(long)]
    staff_threshold: Option<f64>,
    /// Homonym resolution: reject, split_equally or first_by_id
    #[arg(long)]
    homonym_policy: Option<String>,
    /// Multiplier converting weighted staff into the cost denominator
    #[arg(long)]
    cost_scale: Option<f64>,
    /// Output variable for the ratio indicators: pu, pc or ss
    #[arg(long)]
    output_selector: Option<String>,
    /// Report format: csv or json
    #[arg(long)]
    format: Option<String>,
    /// Directory the run is written into
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

fn config_error(detail: impl ToString) -> PipelineError {
    PipelineError::Config(detail.to_string())
}

fn parse_years(field: &str) -> Result<Vec<i32>, PipelineError> {
    let mut years = field
        .split(',')
        .map(|y| {
            y.trim()
                .parse::<i32>()
                .map_err(|e| config_error(format!("bad year {:?}: {e}", y.trim())))
        })
        .collect::<Result<Vec<i32>, _>>()?;
    years.sort_unstable();
    if years.windows(2).any(|w| w[0] == w[1]) {
        return Err(config_error("years must be distinct"));
    }
    Ok(years)
}

fn parse_weights(field: &str) -> Result<CostVector, PipelineError> {
    let parts = field
        .split(',')
        .map(|w| {
            w.trim()
                .parse::<f64>()
                .map_err(|e| config_error(format!("bad cost weight {:?}: {e}", w.trim())))
        })
        .collect::<Result<Vec<f64>, _>>()?;
    let [w_fp, w_ap, w_rf] = parts[..] else {
        return Err(config_error(format!(
            "--cost-weights needs exactly three values, got {}",
            parts.len()
        )));
    };
    Ok(CostVector { w_fp, w_ap, w_rf })
}

fn parse_format(field: &str) -> Result<ReportFormat, PipelineError> {
    ReportFormat::parse(field)
        .ok_or_else(|| config_error(format!("unknown format {field:?}; choose csv or json")))
}

fn build_config(analysis: &AnalysisArgs) -> Result<RunConfig, PipelineError> {
    let mut config = RunConfig::default();
    if let Some(years) = &analysis.years {
        config.years = parse_years(years)?;
    }
    if let Some(weights) = &analysis.cost_weights {
        config.cost_weights = parse_weights(weights)?;
    }
    if let Some(threshold) = analysis.staff_threshold {
        config.staff_threshold = threshold;
    }
    if let Some(policy) = &analysis.homonym_policy {
        config.homonym_policy = HomonymPolicy::parse(policy).ok_or_else(|| {
            config_error(format!(
                "unknown homonym policy {policy:?}; choose reject, split_equally or first_by_id"
            ))
        })?;
    }
    if let Some(scale) = analysis.cost_scale {
        config.cost_scale = scale;
    }
    if let Some(selector) = &analysis.output_selector {
        config.output_selector = OutputSelector::parse(selector).ok_or_else(|| {
            config_error(format!(
                "unknown output selector {selector:?}; choose pu, pc or ss"
            ))
        })?;
    }
    if let Some(format) = &analysis.format {
        config.format = parse_format(format)?;
    }
    config.out_dir = analysis.out.clone();
    config.validate()?;
    Ok(config)
}

fn print_run(run: &EvaluationRun, config: &RunConfig) {
    for outcome in &run.outcomes {
        print!("{}", outputs::render_indicator_table(outcome));
        println!();
    }
    print!("{}", outputs::render_run_summary(run));
    println!("run directory: {}", config.out_dir.display());
}

fn run(cli: Cli) -> Result<(), PipelineError> {
    match cli.command {
        Command::Ingest(inputs) => {
            let summary = pipeline::run_ingest(&inputs.into_paths())?;
            println!("staff rows: {}", summary.staff_rows);
            println!("publication rows: {}", summary.publication_rows);
            println!("journal rows: {}", summary.journal_rows);
            let years: Vec<String> = summary.years.iter().map(|y| y.to_string()).collect();
            println!("roster years: {}", years.join(" "));
            println!("ok");
        }
        Command::Evaluate { inputs, analysis } => {
            let config = build_config(&analysis)?;
            let run = pipeline::run_evaluate(&config, &inputs.into_paths())?;
            print_run(&run, &config);
        }
        Command::Dea { panel, analysis } => {
            let config = build_config(&analysis)?;
            let run = pipeline::run_dea(&config, &panel)?;
            print_run(&run, &config);
        }
        Command::Report { run, format } => {
            let format = format.as_deref().map(parse_format).transpose()?;
            let rerun = pipeline::run_report(&run, format)?;
            for path in &rerun.written {
                println!("wrote {}", path.display());
            }
        }
        Command::Compare {
            table,
            indicator_a,
            indicator_b,
        } => {
            let stats = pipeline::run_compare(&table, &indicator_a, &indicator_b)?;
            println!("units compared: {}", stats.total_count);
            println!("ranks changed: {}", stats.changed_count);
            println!("max variation: {}", stats.max_variation);
            println!("average variation: {:.3}", stats.average_variation);
            println!("median variation: {:.3}", stats.median_variation);
            println!(
                "coefficient of variation: {:.3}",
                stats.coefficient_of_variation
            );
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(u8::try_from(err.exit_code()).unwrap_or(1))
        }
    }
}
