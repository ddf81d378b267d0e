//! Report serialization: efficiency tables, cluster summaries, panel echo
//! and the run manifest.
//!
//! Every file is assembled in memory and written in one call, with fixed
//! row ordering and shortest round-trip float formatting, so a run is
//! reproducible byte for byte. Machine files carry full precision; the
//! three-decimal rendering lives only in the terminal helpers.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde_json::json;
use sha2::{Digest, Sha256};

use super::{io_error, EvaluationRun, PanelOutcome, PipelineError, ReportFormat, RunConfig};
use crate::bibliometrics::AmbiguityReport;
use crate::dea::UnitStatus;
use crate::report::{rank_variation, tertile_summary, IndicatorRow, ScoreKind};

/// SHA-256 digests of the input files, keyed by path, for the manifest.
pub fn digest_inputs(paths: &[&Path]) -> Result<BTreeMap<String, String>, PipelineError> {
    let mut digests = BTreeMap::new();
    for &path in paths {
        let bytes = fs::read(path).map_err(|e| io_error(path, e))?;
        let digest = Sha256::digest(&bytes);
        let hex: String = digest.iter().fold(String::new(), |mut acc, b| {
            let _ = write!(acc, "{b:02x}");
            acc
        });
        digests.insert(path.display().to_string(), hex);
    }
    Ok(digests)
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<(), PipelineError> {
    fs::write(path, bytes).map_err(|e| io_error(path, e))
}

fn csv_bytes(rows: &[Vec<String>]) -> Vec<u8> {
    let mut writer = csv::Writer::from_writer(Vec::new());
    for row in rows {
        writer.write_record(row).expect("in-memory csv write");
    }
    writer.flush().expect("in-memory csv flush");
    writer.into_inner().expect("in-memory csv buffer")
}

fn cell(v: f64) -> String {
    format!("{v}")
}

fn optional_cell(v: Option<f64>) -> String {
    v.map(cell).unwrap_or_default()
}

const EFFICIENCY_HEADER: [&str; 12] = [
    "university_id",
    "status",
    "te",
    "ae",
    "ce",
    "output_per_scientist",
    "output_per_cost",
    "te_rank",
    "ae_rank",
    "ce_rank",
    "output_per_scientist_rank",
    "output_per_cost_rank",
];

fn efficiency_csv(outcome: &PanelOutcome) -> Vec<u8> {
    let by_id: BTreeMap<&str, &IndicatorRow> = outcome
        .table
        .rows
        .iter()
        .map(|r| (r.dmu_id.as_str(), r))
        .collect();
    let mut rows = vec![EFFICIENCY_HEADER.iter().map(|s| s.to_string()).collect()];
    for record in &outcome.records {
        let row = match by_id.get(record.dmu_id.as_str()) {
            Some(r) => vec![
                record.dmu_id.clone(),
                record.status.as_str().to_string(),
                cell(r.te),
                cell(r.ae),
                cell(r.ce),
                cell(r.output_per_scientist),
                cell(r.output_per_cost),
                r.te_rank.to_string(),
                r.ae_rank.to_string(),
                r.ce_rank.to_string(),
                r.output_per_scientist_rank.to_string(),
                r.output_per_cost_rank.to_string(),
            ],
            None => {
                let mut row = vec![record.dmu_id.clone(), record.status.as_str().to_string()];
                row.extend(std::iter::repeat_n(String::new(), 10));
                row
            }
        };
        rows.push(row);
    }
    csv_bytes(&rows)
}

fn efficiency_json(outcome: &PanelOutcome) -> Vec<u8> {
    let by_id: BTreeMap<&str, &IndicatorRow> = outcome
        .table
        .rows
        .iter()
        .map(|r| (r.dmu_id.as_str(), r))
        .collect();
    let units: Vec<serde_json::Value> = outcome
        .records
        .iter()
        .map(|record| match by_id.get(record.dmu_id.as_str()) {
            Some(r) => json!({
                "university_id": record.dmu_id,
                "status": record.status.as_str(),
                "te": r.te,
                "ae": r.ae,
                "ce": r.ce,
                "output_per_scientist": r.output_per_scientist,
                "output_per_cost": r.output_per_cost,
                "ranks": {
                    "te": r.te_rank,
                    "ae": r.ae_rank,
                    "ce": r.ce_rank,
                    "output_per_scientist": r.output_per_scientist_rank,
                    "output_per_cost": r.output_per_cost_rank,
                },
                "peers": record.lambdas,
            }),
            None => json!({
                "university_id": record.dmu_id,
                "status": record.status.as_str(),
            }),
        })
        .collect();
    let document = json!({ "uda": outcome.uda(), "units": units });
    let mut bytes = serde_json::to_vec_pretty(&document).expect("efficiency json");
    bytes.push(b'\n');
    bytes
}

impl PanelOutcome {
    fn uda(&self) -> u8 {
        self.panel.uda
    }
}

fn tertiles_csv(outcomes: &[PanelOutcome]) -> Vec<u8> {
    let mut rows = vec![vec![
        "uda".to_string(),
        "score".to_string(),
        "efficient_count".to_string(),
        "inefficient_count".to_string(),
        "tertile1_mean".to_string(),
        "tertile2_mean".to_string(),
        "tertile3_mean".to_string(),
    ]];
    for outcome in outcomes {
        for kind in [ScoreKind::Te, ScoreKind::Ce] {
            let summary = tertile_summary(outcome.uda(), &outcome.records, kind);
            let means = summary.tertile_means;
            rows.push(vec![
                summary.uda.to_string(),
                summary.score.as_str().to_string(),
                summary.efficient_count.to_string(),
                summary.inefficient_count.to_string(),
                optional_cell(means.map(|m| m[0])),
                optional_cell(means.map(|m| m[1])),
                optional_cell(means.map(|m| m[2])),
            ]);
        }
    }
    csv_bytes(&rows)
}

fn descriptives_csv(outcomes: &[PanelOutcome]) -> Vec<u8> {
    let mut rows = vec![vec![
        "uda".to_string(),
        "variable".to_string(),
        "ave".to_string(),
        "min".to_string(),
        "max".to_string(),
        "std".to_string(),
    ]];
    for outcome in outcomes {
        for stats in crate::report::descriptive_stats(&outcome.panel) {
            rows.push(vec![
                outcome.uda().to_string(),
                stats.variable.to_string(),
                cell(stats.ave),
                cell(stats.min),
                cell(stats.max),
                cell(stats.std),
            ]);
        }
    }
    csv_bytes(&rows)
}

fn rank_variation_csv(outcomes: &[PanelOutcome]) -> Result<Vec<u8>, PipelineError> {
    let mut rows = vec![vec![
        "uda".to_string(),
        "indicator_a".to_string(),
        "indicator_b".to_string(),
        "changed_count".to_string(),
        "total_count".to_string(),
        "max_variation".to_string(),
        "average_variation".to_string(),
        "median_variation".to_string(),
        "coefficient_of_variation".to_string(),
    ]];
    type RankGetter = fn(&IndicatorRow) -> u32;
    let pairs: [(&str, RankGetter, &str, RankGetter); 2] = [
        (
            "te",
            |r| r.te_rank,
            "output_per_scientist",
            |r| r.output_per_scientist_rank,
        ),
        (
            "ce",
            |r| r.ce_rank,
            "output_per_cost",
            |r| r.output_per_cost_rank,
        ),
    ];
    for outcome in outcomes {
        for &(name_a, get_a, name_b, get_b) in &pairs {
            let ranks_a: BTreeMap<String, u32> = outcome
                .table
                .rows
                .iter()
                .map(|r| (r.dmu_id.clone(), get_a(r)))
                .collect();
            let ranks_b: BTreeMap<String, u32> = outcome
                .table
                .rows
                .iter()
                .map(|r| (r.dmu_id.clone(), get_b(r)))
                .collect();
            let stats = rank_variation(&ranks_a, &ranks_b)?;
            rows.push(vec![
                outcome.uda().to_string(),
                name_a.to_string(),
                name_b.to_string(),
                stats.changed_count.to_string(),
                stats.total_count.to_string(),
                stats.max_variation.to_string(),
                cell(stats.average_variation),
                cell(stats.median_variation),
                cell(stats.coefficient_of_variation),
            ]);
        }
    }
    Ok(csv_bytes(&rows))
}

fn panel_csv(outcomes: &[PanelOutcome]) -> Vec<u8> {
    let mut rows = vec![vec![
        "university_id".to_string(),
        "uda".to_string(),
        "fp".to_string(),
        "ap".to_string(),
        "rf".to_string(),
        "pu".to_string(),
        "pc".to_string(),
        "ss".to_string(),
    ]];
    for outcome in outcomes {
        for dmu in &outcome.panel.dmus {
            rows.push(vec![
                dmu.id.clone(),
                outcome.uda().to_string(),
                cell(dmu.inputs.fp),
                cell(dmu.inputs.ap),
                cell(dmu.inputs.rf),
                cell(dmu.outputs.pu),
                cell(dmu.outputs.pc),
                cell(dmu.outputs.ss),
            ]);
        }
    }
    csv_bytes(&rows)
}

fn manifest_bytes(
    config: &RunConfig,
    command: &str,
    years: &[i32],
    digests: &BTreeMap<String, String>,
    output_names: &[String],
) -> Vec<u8> {
    let document = json!({
        "command": command,
        "config": {
            "cost_scale": config.cost_scale,
            "cost_weights": [
                config.cost_weights.w_fp,
                config.cost_weights.w_ap,
                config.cost_weights.w_rf,
            ],
            "format": config.format.as_str(),
            "homonym_policy": config.homonym_policy.as_str(),
            "output_selector": config.output_selector.as_str(),
            "staff_threshold": config.staff_threshold,
            "years": years,
        },
        "inputs": digests,
        "outputs": output_names,
        "version": env!("CARGO_PKG_VERSION"),
    });
    let mut bytes = serde_json::to_vec_pretty(&document).expect("manifest json");
    bytes.push(b'\n');
    bytes
}

/// Writes the per-area efficiency tables plus the three cross-area
/// summaries, returning the paths in write order.
pub fn write_reports(
    config: &RunConfig,
    outcomes: &[PanelOutcome],
) -> Result<Vec<PathBuf>, PipelineError> {
    let dir = &config.out_dir;
    fs::create_dir_all(dir).map_err(|e| io_error(dir, e))?;
    let mut written = Vec::new();

    for outcome in outcomes {
        let (name, bytes) = match config.format {
            ReportFormat::Csv => (
                format!("efficiency_{}.csv", outcome.uda()),
                efficiency_csv(outcome),
            ),
            ReportFormat::Json => (
                format!("efficiency_{}.json", outcome.uda()),
                efficiency_json(outcome),
            ),
        };
        let path = dir.join(name);
        write_file(&path, &bytes)?;
        written.push(path);
    }

    for (name, bytes) in [
        ("tertiles.csv", tertiles_csv(outcomes)),
        ("descriptives.csv", descriptives_csv(outcomes)),
        ("rank_variation.csv", rank_variation_csv(outcomes)?),
    ] {
        let path = dir.join(name);
        write_file(&path, &bytes)?;
        written.push(path);
    }
    Ok(written)
}

/// Writes a complete run directory: reports, panel echo, optional
/// ambiguity report and the manifest.
pub fn write_run(
    config: &RunConfig,
    outcomes: &[PanelOutcome],
    ambiguity: Option<&AmbiguityReport>,
    digests: &BTreeMap<String, String>,
    command: &str,
    years: &[i32],
) -> Result<Vec<PathBuf>, PipelineError> {
    let dir = &config.out_dir;
    fs::create_dir_all(dir).map_err(|e| io_error(dir, e))?;
    let mut written = write_reports(config, outcomes)?;

    let panel_path = dir.join("panel.csv");
    write_file(&panel_path, &panel_csv(outcomes))?;
    written.push(panel_path);

    if let Some(report) = ambiguity {
        let mut bytes = serde_json::to_vec_pretty(report).expect("ambiguity json");
        bytes.push(b'\n');
        let path = dir.join("ambiguity_report.json");
        write_file(&path, &bytes)?;
        written.push(path);
    }

    let mut output_names: Vec<String> = written
        .iter()
        .filter_map(|p| p.file_name())
        .map(|n| n.to_string_lossy().into_owned())
        .collect();
    output_names.sort();
    let manifest_path = dir.join("manifest.json");
    write_file(
        &manifest_path,
        &manifest_bytes(config, command, years, digests, &output_names),
    )?;
    written.push(manifest_path);
    Ok(written)
}

fn render_score(v: f64) -> String {
    format!("{v:.3}")
}

/// Fixed-width terminal rendering of one area's scores, three decimals,
/// dashes for units that were not evaluated.
pub fn render_indicator_table(outcome: &PanelOutcome) -> String {
    let by_id: BTreeMap<&str, &IndicatorRow> = outcome
        .table
        .rows
        .iter()
        .map(|r| (r.dmu_id.as_str(), r))
        .collect();
    let id_width = outcome
        .records
        .iter()
        .map(|r| r.dmu_id.len())
        .chain(["unit".len()])
        .max()
        .unwrap_or(4);
    let status_width = outcome
        .records
        .iter()
        .map(|r| r.status.as_str().len())
        .chain(["status".len()])
        .max()
        .unwrap_or(6);

    let mut out = String::new();
    let _ = writeln!(out, "uda {}", outcome.uda());
    let _ = writeln!(
        out,
        "{:<id_width$}  {:<status_width$}  {:>7}  {:>7}  {:>7}  {:>11}  {:>11}",
        "unit", "status", "te", "ae", "ce", "out/staff", "out/cost"
    );
    for record in &outcome.records {
        match by_id.get(record.dmu_id.as_str()) {
            Some(r) => {
                let _ = writeln!(
                    out,
                    "{:<id_width$}  {:<status_width$}  {:>7}  {:>7}  {:>7}  {:>11}  {:>11}",
                    record.dmu_id,
                    record.status.as_str(),
                    render_score(r.te),
                    render_score(r.ae),
                    render_score(r.ce),
                    render_score(r.output_per_scientist),
                    render_score(r.output_per_cost),
                );
            }
            None => {
                let _ = writeln!(
                    out,
                    "{:<id_width$}  {:<status_width$}  {:>7}  {:>7}  {:>7}  {:>11}  {:>11}",
                    record.dmu_id,
                    record.status.as_str(),
                    "-",
                    "-",
                    "-",
                    "-",
                    "-",
                );
            }
        }
    }
    out
}

/// One-paragraph terminal summary of a finished run.
pub fn render_run_summary(run: &EvaluationRun) -> String {
    let mut out = String::new();
    for outcome in &run.outcomes {
        let total = outcome.records.len();
        let evaluated = outcome
            .records
            .iter()
            .filter(|r| r.status == UnitStatus::Evaluated)
            .count();
        let excluded = outcome
            .records
            .iter()
            .filter(|r| r.status == UnitStatus::ExcludedSmall)
            .count();
        let degenerate = total - evaluated - excluded;
        let _ = write!(
            out,
            "uda {}: {} units ({} evaluated, {} excluded_small, {} degenerate_zero_output)",
            outcome.uda(),
            total,
            evaluated,
            excluded,
            degenerate
        );
        if evaluated > 0 {
            let mean = |f: fn(&IndicatorRow) -> f64| {
                outcome.table.rows.iter().map(f).sum::<f64>() / evaluated as f64
            };
            let _ = write!(
                out,
                "; mean te {}, ae {}, ce {}",
                render_score(mean(|r| r.te)),
                render_score(mean(|r| r.ae)),
                render_score(mean(|r| r.ce))
            );
        }
        out.push('\n');
    }
    if let Some(ambiguity) = &run.ambiguity {
        let _ = writeln!(
            out,
            "homonyms: {} ({}), unattributed publications: {}",
            ambiguity.homonyms.len(),
            ambiguity.policy.as_str(),
            ambiguity.unattributed_publications.len()
        );
    }
    let _ = writeln!(out, "wrote {} files", run.written.len());
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dea::{evaluate_panel, CostVector, Dmu, DmuPanel, InputBundle, OutputBundle};
    use crate::report::indicator_table;
    use crate::report::OutputSelector;

    fn dmu(id: &str, fp: f64, ap: f64, pu: f64) -> Dmu {
        Dmu {
            id: id.to_string(),
            inputs: InputBundle { fp, ap, rf: 0.0 },
            outputs: OutputBundle {
                pu,
                pc: pu / 2.0,
                ss: pu,
            },
        }
    }

    fn outcome(threshold: f64) -> PanelOutcome {
        let panel = DmuPanel {
            uda: 1,
            dmus: vec![
                dmu("A", 2.0, 4.0, 1.0),
                dmu("B", 4.0, 2.0, 1.0),
                dmu("C", 4.0, 4.0, 1.0),
            ],
            min_staff_threshold: threshold,
        };
        let costs = CostVector {
            w_fp: 1.0,
            w_ap: 1.0,
            w_rf: 1.0,
        };
        let records = evaluate_panel(&panel, &costs).unwrap();
        let table = indicator_table(&panel, &records, &costs, 1.0, OutputSelector::Pu).unwrap();
        PanelOutcome {
            panel,
            records,
            table,
        }
    }

    fn config(dir: &Path, format: ReportFormat) -> RunConfig {
        RunConfig {
            out_dir: dir.to_path_buf(),
            format,
            ..RunConfig::default()
        }
    }

    #[test]
    fn run_directory_contains_the_full_report_set() {
        let dir = tempfile::tempdir().unwrap();
        let config = config(dir.path(), ReportFormat::Csv);
        let written =
            write_run(&config, &[outcome(0.0)], None, &BTreeMap::new(), "dea", &[]).unwrap();
        let names: Vec<String> = written
            .iter()
            .map(|p| p.file_name().unwrap().to_string_lossy().into_owned())
            .collect();
        assert_eq!(
            names,
            [
                "efficiency_1.csv",
                "tertiles.csv",
                "descriptives.csv",
                "rank_variation.csv",
                "panel.csv",
                "manifest.json"
            ]
        );
        let table = fs::read_to_string(dir.path().join("efficiency_1.csv")).unwrap();
        let mut lines = table.lines();
        assert_eq!(lines.next().unwrap(), EFFICIENCY_HEADER.join(","));
        assert_eq!(lines.count(), 3);
    }

    #[test]
    fn manifest_lists_outputs_and_echoes_config() {
        let dir = tempfile::tempdir().unwrap();
        let config = config(dir.path(), ReportFormat::Csv);
        write_run(
            &config,
            &[outcome(0.0)],
            None,
            &BTreeMap::from([("panel.csv".to_string(), "abc123".to_string())]),
            "dea",
            &[2001, 2002],
        )
        .unwrap();
        let manifest: serde_json::Value =
            serde_json::from_slice(&fs::read(dir.path().join("manifest.json")).unwrap()).unwrap();
        assert_eq!(manifest["command"], "dea");
        assert_eq!(manifest["config"]["years"], json!([2001, 2002]));
        assert_eq!(manifest["config"]["homonym_policy"], "reject");
        assert_eq!(manifest["inputs"]["panel.csv"], "abc123");
        let outputs: Vec<String> = manifest["outputs"]
            .as_array()
            .unwrap()
            .iter()
            .map(|v| v.as_str().unwrap().to_string())
            .collect();
        let mut sorted = outputs.clone();
        sorted.sort();
        assert_eq!(outputs, sorted);
        assert!(outputs.contains(&"efficiency_1.csv".to_string()));
        assert!(!outputs.contains(&"manifest.json".to_string()));
    }

    #[test]
    fn flagged_units_keep_their_row_with_empty_scores() {
        let dir = tempfile::tempdir().unwrap();
        let config = config(dir.path(), ReportFormat::Csv);
        write_run(&config, &[outcome(7.0)], None, &BTreeMap::new(), "dea", &[]).unwrap();
        let table = fs::read_to_string(dir.path().join("efficiency_1.csv")).unwrap();
        let excluded: Vec<&str> = table
            .lines()
            .filter(|l| l.contains("excluded_small"))
            .collect();
        assert_eq!(excluded.len(), 2);
        assert!(excluded[0].starts_with("A,excluded_small,,,,"));
    }

    #[test]
    fn json_format_writes_units_with_ranks_and_peers() {
        let dir = tempfile::tempdir().unwrap();
        let config = config(dir.path(), ReportFormat::Json);
        write_run(&config, &[outcome(0.0)], None, &BTreeMap::new(), "dea", &[]).unwrap();
        let doc: serde_json::Value =
            serde_json::from_slice(&fs::read(dir.path().join("efficiency_1.json")).unwrap())
                .unwrap();
        assert_eq!(doc["uda"], 1);
        let units = doc["units"].as_array().unwrap();
        assert_eq!(units.len(), 3);
        let c = units.iter().find(|u| u["university_id"] == "C").unwrap();
        assert!((c["te"].as_f64().unwrap() - 0.75).abs() < 1e-9);
        assert_eq!(c["ranks"]["te"], 3);
        let peers = c["peers"].as_object().unwrap();
        assert!((peers["A"].as_f64().unwrap() - 0.5).abs() < 1e-9);
        assert!((peers["B"].as_f64().unwrap() - 0.5).abs() < 1e-9);
    }

    #[test]
    fn two_writes_are_byte_identical() {
        let dir_a = tempfile::tempdir().unwrap();
        let dir_b = tempfile::tempdir().unwrap();
        let outcomes = [outcome(0.0)];
        let digests = BTreeMap::from([("panel.csv".to_string(), "d".repeat(64))]);
        let written_a = write_run(
            &config(dir_a.path(), ReportFormat::Csv),
            &outcomes,
            None,
            &digests,
            "dea",
            &[],
        )
        .unwrap();
        let written_b = write_run(
            &config(dir_b.path(), ReportFormat::Csv),
            &outcomes,
            None,
            &digests,
            "dea",
            &[],
        )
        .unwrap();
        for (a, b) in written_a.iter().zip(written_b.iter()) {
            assert_eq!(a.file_name(), b.file_name());
            assert_eq!(fs::read(a).unwrap(), fs::read(b).unwrap(), "{a:?}");
        }
    }

    #[test]
    fn tertile_rows_cover_te_and_ce_for_each_area() {
        let dir = tempfile::tempdir().unwrap();
        let config = config(dir.path(), ReportFormat::Csv);
        write_run(&config, &[outcome(0.0)], None, &BTreeMap::new(), "dea", &[]).unwrap();
        let tertiles = fs::read_to_string(dir.path().join("tertiles.csv")).unwrap();
        let lines: Vec<&str> = tertiles.lines().collect();
        assert_eq!(lines.len(), 3);
        assert!(lines[1].starts_with("1,te,"));
        assert!(lines[2].starts_with("1,ce,"));
    }

    #[test]
    fn panel_echo_round_trips_through_the_reader() {
        let dir = tempfile::tempdir().unwrap();
        let config = config(dir.path(), ReportFormat::Csv);
        let outcomes = [outcome(0.0)];
        write_run(&config, &outcomes, None, &BTreeMap::new(), "dea", &[]).unwrap();
        let panels = super::super::ingest::read_panels(&dir.path().join("panel.csv"), 0.0).unwrap();
        assert_eq!(panels.len(), 1);
        assert_eq!(panels[0].dmus.len(), 3);
        assert_eq!(panels[0].dmus[0].id, "A");
        assert_eq!(panels[0].dmus[0].inputs.fp, 2.0);
        assert_eq!(panels[0].dmus[0].outputs.pc, 0.5);
    }

    #[test]
    fn digests_are_hex_of_file_bytes() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("x.csv");
        fs::write(&path, b"abc").unwrap();
        let digests = digest_inputs(&[&path]).unwrap();
        let hex = digests.values().next().unwrap();
        // Well-known SHA-256 of "abc".
        assert_eq!(
            hex,
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
    }

    #[test]
    fn render_helpers_show_dashes_for_flagged_units() {
        let rendered = render_indicator_table(&outcome(7.0));
        assert!(rendered.contains("excluded_small"));
        assert!(rendered.contains('-'));
        let rendered_full = render_indicator_table(&outcome(0.0));
        assert!(rendered_full.contains("0.750"));
    }
}
