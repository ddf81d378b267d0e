//! CSV readers for the four input schemas.
//!
//! All files are UTF-8, comma-separated, with a required header row.
//! Failures distinguish parse errors (malformed CSV or unreadable values),
//! schema errors (readable values that break a field rule or a uniqueness
//! constraint) and referential errors (a record pointing at a missing id),
//! each reported with file and line.

use std::collections::{BTreeMap, BTreeSet};
use std::fs::File;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Deserialize;

use super::{io_error, InputPaths, PipelineError};
use crate::bibliometrics::{JournalRecord, PublicationRecord, Rank, StaffMember};
use crate::dea::{Dmu, DmuPanel, InputBundle, OutputBundle};

/// The three raw datasets, parsed and internally consistent.
#[derive(Debug, Clone)]
pub struct Datasets {
    pub roster: Vec<StaffMember>,
    pub publications: Vec<PublicationRecord>,
    pub journals: Vec<JournalRecord>,
}

fn parse_error(path: &Path, line: u64, detail: impl ToString) -> PipelineError {
    PipelineError::Parse {
        file: path.display().to_string(),
        line,
        detail: detail.to_string(),
    }
}

fn schema_error(path: &Path, line: u64, detail: impl ToString) -> PipelineError {
    PipelineError::Schema {
        file: path.display().to_string(),
        line,
        detail: detail.to_string(),
    }
}

fn read_rows<T: DeserializeOwned>(path: &Path) -> Result<Vec<(u64, T)>, PipelineError> {
    let file = File::open(path).map_err(|e| io_error(path, e))?;
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(file);
    let headers = reader
        .headers()
        .map_err(|e| parse_error(path, 1, &e))?
        .clone();
    let mut rows = Vec::new();
    for result in reader.records() {
        let record = result.map_err(|e| {
            let line = e.position().map_or(0, csv::Position::line);
            parse_error(path, line, &e)
        })?;
        let line = record.position().map_or(0, csv::Position::line);
        let row: T = record
            .deserialize(Some(&headers))
            .map_err(|e| parse_error(path, line, &e))?;
        rows.push((line, row));
    }
    Ok(rows)
}

fn single_letter(path: &Path, line: u64, field: &str, value: &str) -> Result<char, PipelineError> {
    let mut chars = value.chars();
    match (chars.next(), chars.next()) {
        (Some(c), None) if c.is_alphabetic() => Ok(c),
        _ => Err(schema_error(
            path,
            line,
            format!("{field} must be a single letter, got {value:?}"),
        )),
    }
}

fn required(path: &Path, line: u64, field: &str, value: &str) -> Result<(), PipelineError> {
    if value.is_empty() {
        return Err(schema_error(
            path,
            line,
            format!("{field} must not be empty"),
        ));
    }
    Ok(())
}

fn valid_uda(path: &Path, line: u64, uda: u8) -> Result<(), PipelineError> {
    if !(1..=9).contains(&uda) {
        return Err(schema_error(path, line, format!("uda {uda} outside 1..=9")));
    }
    Ok(())
}

#[derive(Deserialize)]
struct StaffRow {
    staff_id: String,
    last_name: String,
    first_initial: String,
    university_id: String,
    uda: u8,
    rank: String,
    year: i32,
}

pub fn read_staff(path: &Path) -> Result<Vec<StaffMember>, PipelineError> {
    let mut seen = BTreeSet::new();
    let mut roster = Vec::new();
    for (line, row) in read_rows::<StaffRow>(path)? {
        required(path, line, "staff_id", &row.staff_id)?;
        required(path, line, "last_name", &row.last_name)?;
        required(path, line, "university_id", &row.university_id)?;
        valid_uda(path, line, row.uda)?;
        let first_initial = single_letter(path, line, "first_initial", &row.first_initial)?;
        let rank = Rank::parse(&row.rank).ok_or_else(|| {
            schema_error(
                path,
                line,
                format!("rank must be FP, AP or RF, got {:?}", row.rank),
            )
        })?;
        if !seen.insert((row.staff_id.clone(), row.year)) {
            return Err(schema_error(
                path,
                line,
                format!(
                    "duplicate (staff_id, year) = ({}, {})",
                    row.staff_id, row.year
                ),
            ));
        }
        roster.push(StaffMember {
            staff_id: row.staff_id,
            last_name: row.last_name,
            first_initial,
            university_id: row.university_id,
            uda: row.uda,
            rank,
            year: row.year,
        });
    }
    Ok(roster)
}

#[derive(Deserialize)]
struct PublicationRow {
    pub_id: String,
    year: i32,
    journal_id: String,
    total_author_count: u32,
    /// Semicolon-joined "LAST,I" tokens.
    authors: String,
    /// Semicolon-joined university ids.
    claimed_universities: String,
}

fn parse_author_tokens(
    path: &Path,
    line: u64,
    field: &str,
) -> Result<Vec<(String, char)>, PipelineError> {
    if field.trim().is_empty() {
        return Ok(Vec::new());
    }
    let mut tokens = Vec::new();
    for raw in field.split(';') {
        let token = raw.trim();
        let Some((last, initial)) = token.rsplit_once(',') else {
            return Err(schema_error(
                path,
                line,
                format!("author token {token:?} is not in LAST,I form"),
            ));
        };
        let last = last.trim();
        required(path, line, "author last name", last)?;
        let initial = single_letter(path, line, "author initial", initial.trim())?;
        tokens.push((last.to_string(), initial));
    }
    Ok(tokens)
}

pub fn read_publications(path: &Path) -> Result<Vec<PublicationRecord>, PipelineError> {
    let mut seen = BTreeSet::new();
    let mut publications = Vec::new();
    for (line, row) in read_rows::<PublicationRow>(path)? {
        required(path, line, "pub_id", &row.pub_id)?;
        required(path, line, "journal_id", &row.journal_id)?;
        if row.total_author_count == 0 {
            return Err(schema_error(
                path,
                line,
                "total_author_count must be at least 1",
            ));
        }
        if !seen.insert(row.pub_id.clone()) {
            return Err(schema_error(
                path,
                line,
                format!("duplicate pub_id {}", row.pub_id),
            ));
        }
        let author_tokens = parse_author_tokens(path, line, &row.authors)?;
        let claimed: Vec<String> = row
            .claimed_universities
            .split(';')
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .map(str::to_string)
            .collect();
        if claimed.is_empty() {
            return Err(schema_error(
                path,
                line,
                "claimed_universities must list at least one university",
            ));
        }
        publications.push(PublicationRecord {
            pub_id: row.pub_id,
            year: row.year,
            journal_id: row.journal_id,
            author_tokens,
            claimed_universities: claimed,
            total_author_count: row.total_author_count,
        });
    }
    Ok(publications)
}

#[derive(Deserialize)]
struct JournalRow {
    journal_id: String,
    category: String,
    impact_factor: f64,
}

pub fn read_journals(path: &Path) -> Result<Vec<JournalRecord>, PipelineError> {
    let mut seen = BTreeSet::new();
    let mut journals = Vec::new();
    for (line, row) in read_rows::<JournalRow>(path)? {
        required(path, line, "journal_id", &row.journal_id)?;
        required(path, line, "category", &row.category)?;
        if !row.impact_factor.is_finite() || row.impact_factor < 0.0 {
            return Err(schema_error(
                path,
                line,
                format!(
                    "impact_factor {} must be a nonnegative real",
                    row.impact_factor
                ),
            ));
        }
        if !seen.insert(row.journal_id.clone()) {
            return Err(schema_error(
                path,
                line,
                format!("duplicate journal_id {}", row.journal_id),
            ));
        }
        journals.push(JournalRecord {
            journal_id: row.journal_id,
            category: row.category,
            impact_factor: row.impact_factor,
        });
    }
    Ok(journals)
}

/// Reads and cross-validates the three raw files; every publication must
/// cite a known journal.
pub fn read_datasets(paths: &InputPaths) -> Result<Datasets, PipelineError> {
    let roster = read_staff(&paths.staff)?;
    let publications = read_publications(&paths.publications)?;
    let journals = read_journals(&paths.journals)?;

    let known: BTreeSet<&str> = journals.iter().map(|j| j.journal_id.as_str()).collect();
    for p in &publications {
        if !known.contains(p.journal_id.as_str()) {
            return Err(PipelineError::Referential(format!(
                "publication {} cites unknown journal_id {}",
                p.pub_id, p.journal_id
            )));
        }
    }
    Ok(Datasets {
        roster,
        publications,
        journals,
    })
}

#[derive(Deserialize)]
struct PanelRow {
    university_id: String,
    uda: u8,
    fp: f64,
    ap: f64,
    rf: f64,
    pu: f64,
    pc: f64,
    ss: f64,
}

/// Reads a pre-aggregated panel file and groups it into one panel per
/// disciplinary area.
pub fn read_panels(path: &Path, staff_threshold: f64) -> Result<Vec<DmuPanel>, PipelineError> {
    let mut seen = BTreeSet::new();
    let mut by_uda: BTreeMap<u8, Vec<Dmu>> = BTreeMap::new();
    for (line, row) in read_rows::<PanelRow>(path)? {
        required(path, line, "university_id", &row.university_id)?;
        valid_uda(path, line, row.uda)?;
        for (name, v) in [
            ("fp", row.fp),
            ("ap", row.ap),
            ("rf", row.rf),
            ("pu", row.pu),
            ("pc", row.pc),
            ("ss", row.ss),
        ] {
            if !v.is_finite() || v < 0.0 {
                return Err(schema_error(
                    path,
                    line,
                    format!("{name} = {v} must be a nonnegative real"),
                ));
            }
        }
        if row.pc > row.pu + 1e-9 {
            return Err(schema_error(
                path,
                line,
                format!("pc = {} exceeds pu = {}", row.pc, row.pu),
            ));
        }
        if !seen.insert((row.university_id.clone(), row.uda)) {
            return Err(schema_error(
                path,
                line,
                format!("duplicate unit ({}, uda {})", row.university_id, row.uda),
            ));
        }
        by_uda.entry(row.uda).or_default().push(Dmu {
            id: row.university_id,
            inputs: InputBundle {
                fp: row.fp,
                ap: row.ap,
                rf: row.rf,
            },
            outputs: OutputBundle {
                pu: row.pu,
                pc: row.pc,
                ss: row.ss,
            },
        });
    }
    Ok(by_uda
        .into_iter()
        .map(|(uda, mut dmus)| {
            dmus.sort_by(|a, b| a.id.cmp(&b.id));
            DmuPanel {
                uda,
                dmus,
                min_staff_threshold: staff_threshold,
            }
        })
        .collect())
}

/// Scores of evaluated units keyed by university id.
pub type ScoreColumn = BTreeMap<String, f64>;

/// Pulls two score columns for evaluated units out of a stored efficiency
/// table.
pub fn read_indicator_columns(
    path: &Path,
    column_a: &str,
    column_b: &str,
) -> Result<(ScoreColumn, ScoreColumn), PipelineError> {
    let file = File::open(path).map_err(|e| io_error(path, e))?;
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(file);
    let headers = reader
        .headers()
        .map_err(|e| parse_error(path, 1, &e))?
        .clone();
    let find = |name: &str| {
        headers.iter().position(|h| h == name).ok_or_else(|| {
            schema_error(
                path,
                1,
                format!("missing column {name:?} in efficiency table"),
            )
        })
    };
    let id_idx = find("university_id")?;
    let status_idx = find("status")?;
    let a_idx = find(column_a)?;
    let b_idx = find(column_b)?;

    let mut scores_a = BTreeMap::new();
    let mut scores_b = BTreeMap::new();
    for result in reader.records() {
        let record = result.map_err(|e| {
            let line = e.position().map_or(0, csv::Position::line);
            parse_error(path, line, &e)
        })?;
        let line = record.position().map_or(0, csv::Position::line);
        if record.get(status_idx) != Some("evaluated") {
            continue;
        }
        let id = record
            .get(id_idx)
            .ok_or_else(|| schema_error(path, line, "missing university_id cell"))?
            .to_string();
        for (idx, name, target) in [
            (a_idx, column_a, &mut scores_a),
            (b_idx, column_b, &mut scores_b),
        ] {
            let cell = record
                .get(idx)
                .ok_or_else(|| schema_error(path, line, format!("missing {name} cell")))?;
            let value: f64 = cell
                .parse()
                .map_err(|e| parse_error(path, line, format!("column {name}: {e}")))?;
            target.insert(id.clone(), value);
        }
    }
    Ok((scores_a, scores_b))
}
