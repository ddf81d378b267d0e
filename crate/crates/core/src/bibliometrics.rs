//! Bottom-up computation of the publication outputs (PU, PC, SS).
//!
//! Source records carry no explicit link between a publication's author
//! list and its address list, so authors are matched to staff rosters by
//! name key: last name (case-insensitive), first initial, a university
//! appearing in the publication's address list, and the publication year.
//! Homonym collisions are resolved by an explicit, configurable policy and
//! every collision is logged, because any name-based rule is a judgement
//! call that downstream users may want to audit.

use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;
use thiserror::Error;

use crate::dea::{DmuPanel, InputBundle, OutputBundle};

/// (university_id, uda): the identity of one research unit.
pub type UnitKey = (String, u8);

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Rank {
    Fp,
    Ap,
    Rf,
}

impl Rank {
    pub fn parse(s: &str) -> Option<Self> {
        match s.to_ascii_uppercase().as_str() {
            "FP" => Some(Rank::Fp),
            "AP" => Some(Rank::Ap),
            "RF" => Some(Rank::Rf),
            _ => None,
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            Rank::Fp => "FP",
            Rank::Ap => "AP",
            Rank::Rf => "RF",
        }
    }
}

#[derive(Debug, Clone)]
pub struct StaffMember {
    pub staff_id: String,
    pub last_name: String,
    pub first_initial: char,
    pub university_id: String,
    pub uda: u8,
    pub rank: Rank,
    pub year: i32,
}

#[derive(Debug, Clone)]
pub struct PublicationRecord {
    pub pub_id: String,
    pub year: i32,
    pub journal_id: String,
    /// (last name, first initial) as printed in the source.
    pub author_tokens: Vec<(String, char)>,
    pub claimed_universities: Vec<String>,
    pub total_author_count: u32,
}

#[derive(Debug, Clone)]
pub struct JournalRecord {
    pub journal_id: String,
    pub category: String,
    pub impact_factor: f64,
}

/// A resolved author-to-unit link for one publication.
#[derive(Debug, Clone, PartialEq)]
pub struct Attribution {
    pub pub_id: String,
    pub staff_id: String,
    pub university_id: String,
    pub uda: u8,
    /// 1 for a unique match; 1/k when a homonym set of size k is split.
    pub credit_share: f64,
}

/// Journal impact factor divided by the mean of its category.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalizedIF {
    pub journal_id: String,
    pub value: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum HomonymPolicy {
    /// Drop the token entirely; no attribution.
    Reject,
    /// Attribute 1/k credit to each of the k candidates.
    SplitEqually,
    /// Attribute full credit to the candidate with the smallest staff id.
    FirstById,
}

impl HomonymPolicy {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "reject" => Some(HomonymPolicy::Reject),
            "split_equally" => Some(HomonymPolicy::SplitEqually),
            "first_by_id" => Some(HomonymPolicy::FirstById),
            _ => None,
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            HomonymPolicy::Reject => "reject",
            HomonymPolicy::SplitEqually => "split_equally",
            HomonymPolicy::FirstById => "first_by_id",
        }
    }
}

/// One author token that matched more than one roster entry.
#[derive(Debug, Clone, Serialize)]
pub struct HomonymEvent {
    pub pub_id: String,
    pub last_name: String,
    pub first_initial: char,
    pub candidate_staff_ids: Vec<String>,
    pub resolution: String,
}

/// Everything the matching pass could not decide cleanly: homonym
/// collisions (logged under every policy) and publications left with no
/// attribution at all.
#[derive(Debug, Clone, Serialize)]
pub struct AmbiguityReport {
    pub policy: HomonymPolicy,
    pub homonyms: Vec<HomonymEvent>,
    pub unattributed_publications: Vec<String>,
}

#[derive(Debug, Error)]
pub enum BiblioError {
    #[error("malformed staff record: {0}")]
    MalformedStaff(String),
    #[error("malformed publication record: {0}")]
    MalformedPublication(String),
    #[error("malformed journal record: {0}")]
    MalformedJournal(String),
    #[error("category {0} has zero mean impact factor")]
    ZeroCategoryMean(String),
    #[error("no normalized impact factor for journal {0}")]
    MissingJournal(String),
    #[error("attribution references unknown publication {0}")]
    UnknownPublication(String),
    #[error("averaging period is empty")]
    EmptyPeriod,
    #[error("duplicate year {0} in averaging period")]
    DuplicateYear(i32),
}

pub fn validate_roster(roster: &[StaffMember]) -> Result<(), BiblioError> {
    let mut seen = BTreeSet::new();
    for s in roster {
        if s.staff_id.is_empty() {
            return Err(BiblioError::MalformedStaff("empty staff_id".into()));
        }
        if !seen.insert((s.staff_id.clone(), s.year)) {
            return Err(BiblioError::MalformedStaff(format!(
                "duplicate (staff_id, year) = ({}, {})",
                s.staff_id, s.year
            )));
        }
        if s.last_name.is_empty() {
            return Err(BiblioError::MalformedStaff(format!(
                "staff {} has an empty last name",
                s.staff_id
            )));
        }
        if !s.first_initial.is_alphabetic() {
            return Err(BiblioError::MalformedStaff(format!(
                "staff {} has non-letter initial {:?}",
                s.staff_id, s.first_initial
            )));
        }
        if s.university_id.is_empty() {
            return Err(BiblioError::MalformedStaff(format!(
                "staff {} has an empty university_id",
                s.staff_id
            )));
        }
        if !(1..=9).contains(&s.uda) {
            return Err(BiblioError::MalformedStaff(format!(
                "staff {} has uda {} outside 1..=9",
                s.staff_id, s.uda
            )));
        }
    }
    Ok(())
}

pub fn validate_publications(publications: &[PublicationRecord]) -> Result<(), BiblioError> {
    let mut seen = BTreeSet::new();
    for p in publications {
        if p.pub_id.is_empty() {
            return Err(BiblioError::MalformedPublication("empty pub_id".into()));
        }
        if !seen.insert(p.pub_id.clone()) {
            return Err(BiblioError::MalformedPublication(format!(
                "duplicate pub_id {}",
                p.pub_id
            )));
        }
        if p.journal_id.is_empty() {
            return Err(BiblioError::MalformedPublication(format!(
                "publication {} has an empty journal_id",
                p.pub_id
            )));
        }
        if p.total_author_count == 0 {
            return Err(BiblioError::MalformedPublication(format!(
                "publication {} has total_author_count 0",
                p.pub_id
            )));
        }
        if p.claimed_universities.is_empty() || p.claimed_universities.iter().any(String::is_empty)
        {
            return Err(BiblioError::MalformedPublication(format!(
                "publication {} must claim at least one non-empty university",
                p.pub_id
            )));
        }
        for (last, initial) in &p.author_tokens {
            if last.is_empty() || !initial.is_alphabetic() {
                return Err(BiblioError::MalformedPublication(format!(
                    "publication {} has a malformed author token ({last:?}, {initial:?})",
                    p.pub_id
                )));
            }
        }
    }
    Ok(())
}

pub fn validate_journals(journals: &[JournalRecord]) -> Result<(), BiblioError> {
    let mut seen = BTreeSet::new();
    for j in journals {
        if j.journal_id.is_empty() {
            return Err(BiblioError::MalformedJournal("empty journal_id".into()));
        }
        if !seen.insert(j.journal_id.clone()) {
            return Err(BiblioError::MalformedJournal(format!(
                "duplicate journal_id {}",
                j.journal_id
            )));
        }
        if j.category.is_empty() {
            return Err(BiblioError::MalformedJournal(format!(
                "journal {} has an empty category",
                j.journal_id
            )));
        }
        if !j.impact_factor.is_finite() || j.impact_factor < 0.0 {
            return Err(BiblioError::MalformedJournal(format!(
                "journal {} has impact factor {}",
                j.journal_id, j.impact_factor
            )));
        }
    }
    Ok(())
}

fn name_key(last: &str, initial: char) -> (String, char) {
    (
        last.to_lowercase(),
        initial.to_uppercase().next().unwrap_or(initial),
    )
}

/// Resolves author tokens to roster entries.
///
/// A token matches a staff member when the name key is equal, the member's
/// university appears in the publication's address list, and the member was
/// on the roster in the publication year. Unmatched tokens are silently
/// dropped; publications ending up with no attribution at all are listed in
/// the report, as are all homonym collisions.
pub fn match_authors(
    publications: &[PublicationRecord],
    roster: &[StaffMember],
    policy: HomonymPolicy,
) -> Result<(Vec<Attribution>, AmbiguityReport), BiblioError> {
    validate_publications(publications)?;
    validate_roster(roster)?;

    // (name key, university, year) -> staff ids, kept sorted for
    // deterministic candidate ordering.
    let mut index: BTreeMap<(String, char, &str, i32), Vec<&StaffMember>> = BTreeMap::new();
    for s in roster {
        let (last, initial) = name_key(&s.last_name, s.first_initial);
        index
            .entry((last, initial, s.university_id.as_str(), s.year))
            .or_default()
            .push(s);
    }
    for candidates in index.values_mut() {
        candidates.sort_by(|a, b| a.staff_id.cmp(&b.staff_id));
    }

    let mut attributions = Vec::new();
    let mut homonyms = Vec::new();
    let mut unattributed = Vec::new();

    for p in publications {
        let claimed: BTreeSet<&str> = p.claimed_universities.iter().map(String::as_str).collect();
        let mut seen_tokens = BTreeSet::new();
        let mut matched_any = false;

        for (last, initial) in &p.author_tokens {
            let key = name_key(last, *initial);
            if !seen_tokens.insert(key.clone()) {
                continue;
            }
            let mut candidates: Vec<&StaffMember> = Vec::new();
            for &university in &claimed {
                if let Some(found) = index.get(&(key.0.clone(), key.1, university, p.year)) {
                    candidates.extend(found);
                }
            }
            candidates.sort_by(|a, b| a.staff_id.cmp(&b.staff_id));

            match candidates.len() {
                0 => {}
                1 => {
                    attributions.push(attribution(p, candidates[0], 1.0));
                    matched_any = true;
                }
                k => {
                    let ids: Vec<String> = candidates.iter().map(|s| s.staff_id.clone()).collect();
                    let resolution = match policy {
                        HomonymPolicy::Reject => "rejected".to_string(),
                        HomonymPolicy::SplitEqually => {
                            let share = 1.0 / k as f64;
                            for s in &candidates {
                                attributions.push(attribution(p, s, share));
                            }
                            matched_any = true;
                            format!("split across {k} candidates")
                        }
                        HomonymPolicy::FirstById => {
                            attributions.push(attribution(p, candidates[0], 1.0));
                            matched_any = true;
                            format!("assigned to {}", candidates[0].staff_id)
                        }
                    };
                    homonyms.push(HomonymEvent {
                        pub_id: p.pub_id.clone(),
                        last_name: key.0,
                        first_initial: key.1,
                        candidate_staff_ids: ids,
                        resolution,
                    });
                }
            }
        }
        if !matched_any {
            unattributed.push(p.pub_id.clone());
        }
    }

    attributions.sort_by(|a, b| (&a.pub_id, &a.staff_id).cmp(&(&b.pub_id, &b.staff_id)));
    homonyms.sort_by(|a, b| {
        (&a.pub_id, &a.last_name, a.first_initial).cmp(&(&b.pub_id, &b.last_name, b.first_initial))
    });
    unattributed.sort();

    Ok((
        attributions,
        AmbiguityReport {
            policy,
            homonyms,
            unattributed_publications: unattributed,
        },
    ))
}

fn attribution(p: &PublicationRecord, s: &StaffMember, share: f64) -> Attribution {
    Attribution {
        pub_id: p.pub_id.clone(),
        staff_id: s.staff_id.clone(),
        university_id: s.university_id.clone(),
        uda: s.uda,
        credit_share: share,
    }
}

/// Divides every impact factor by the mean of its category, so that each
/// category's normalized values average exactly 1.
pub fn normalize_impact_factors(
    journals: &[JournalRecord],
) -> Result<Vec<NormalizedIF>, BiblioError> {
    validate_journals(journals)?;
    let mut by_category: BTreeMap<&str, Vec<&JournalRecord>> = BTreeMap::new();
    for j in journals {
        by_category.entry(j.category.as_str()).or_default().push(j);
    }
    let mut result = Vec::with_capacity(journals.len());
    for (category, members) in by_category {
        let mean: f64 = members.iter().map(|j| j.impact_factor).sum::<f64>() / members.len() as f64;
        if mean <= 0.0 {
            return Err(BiblioError::ZeroCategoryMean(category.to_string()));
        }
        for j in members {
            result.push(NormalizedIF {
                journal_id: j.journal_id.clone(),
                value: j.impact_factor / mean,
            });
        }
    }
    result.sort_by(|a, b| a.journal_id.cmp(&b.journal_id));
    Ok(result)
}

/// Aggregates one year's attributions into per-unit output bundles.
///
/// For each unit: PU counts publications with at least one of the unit's
/// authors, PC adds each such publication's matched credit divided by its
/// total author count, SS adds the journal's normalized impact factor. A
/// publication counts once per unit in PU and SS however many of the unit's
/// authors it carries.
pub fn compute_outputs(
    attributions: &[Attribution],
    publications: &[PublicationRecord],
    normalized_if: &[NormalizedIF],
    year: i32,
) -> Result<BTreeMap<UnitKey, OutputBundle>, BiblioError> {
    validate_publications(publications)?;
    let pubs: BTreeMap<&str, &PublicationRecord> = publications
        .iter()
        .map(|p| (p.pub_id.as_str(), p))
        .collect();
    let nif: BTreeMap<&str, f64> = normalized_if
        .iter()
        .map(|n| (n.journal_id.as_str(), n.value))
        .collect();

    // (unit, pub) -> total credit of the unit's authors on that publication.
    let mut credit: BTreeMap<(UnitKey, &str), f64> = BTreeMap::new();
    for a in attributions {
        let Some(p) = pubs.get(a.pub_id.as_str()) else {
            return Err(BiblioError::UnknownPublication(a.pub_id.clone()));
        };
        if p.year != year {
            continue;
        }
        let unit = (a.university_id.clone(), a.uda);
        *credit.entry((unit, p.pub_id.as_str())).or_insert(0.0) += a.credit_share;
    }

    let mut outputs: BTreeMap<UnitKey, OutputBundle> = BTreeMap::new();
    for ((unit, pub_id), b) in credit {
        let p = pubs[pub_id];
        let Some(&journal_value) = nif.get(p.journal_id.as_str()) else {
            return Err(BiblioError::MissingJournal(p.journal_id.clone()));
        };
        let bundle = outputs.entry(unit).or_insert(OutputBundle {
            pu: 0.0,
            pc: 0.0,
            ss: 0.0,
        });
        bundle.pu += 1.0;
        bundle.pc += b / p.total_author_count as f64;
        bundle.ss += journal_value;
    }
    Ok(outputs)
}

/// Per-year staff headcounts by unit, derived from the roster.
pub fn headcounts_by_year(
    roster: &[StaffMember],
) -> Result<BTreeMap<i32, BTreeMap<UnitKey, InputBundle>>, BiblioError> {
    validate_roster(roster)?;
    let mut result: BTreeMap<i32, BTreeMap<UnitKey, InputBundle>> = BTreeMap::new();
    for s in roster {
        let unit = (s.university_id.clone(), s.uda);
        let bundle = result
            .entry(s.year)
            .or_default()
            .entry(unit)
            .or_insert(InputBundle {
                fp: 0.0,
                ap: 0.0,
                rf: 0.0,
            });
        match s.rank {
            Rank::Fp => bundle.fp += 1.0,
            Rank::Ap => bundle.ap += 1.0,
            Rank::Rf => bundle.rf += 1.0,
        }
    }
    Ok(result)
}

/// Averages per-year inputs and outputs over a fixed period and groups the
/// resulting units into one panel per disciplinary area.
///
/// A unit missing from some year of the period contributes zero for that
/// year; the divisor is always the period length.
pub fn average_over_period(
    yearly_inputs: &BTreeMap<i32, BTreeMap<UnitKey, InputBundle>>,
    yearly_outputs: &BTreeMap<i32, BTreeMap<UnitKey, OutputBundle>>,
    years: &[i32],
    staff_threshold: f64,
) -> Result<Vec<DmuPanel>, BiblioError> {
    if years.is_empty() {
        return Err(BiblioError::EmptyPeriod);
    }
    let mut distinct = BTreeSet::new();
    for &y in years {
        if !distinct.insert(y) {
            return Err(BiblioError::DuplicateYear(y));
        }
    }

    let mut units: BTreeSet<UnitKey> = BTreeSet::new();
    for &y in years {
        if let Some(map) = yearly_inputs.get(&y) {
            units.extend(map.keys().cloned());
        }
        if let Some(map) = yearly_outputs.get(&y) {
            units.extend(map.keys().cloned());
        }
    }

    let n = years.len() as f64;
    let mut by_uda: BTreeMap<u8, Vec<crate::dea::Dmu>> = BTreeMap::new();
    for unit in units {
        let mut inputs = InputBundle {
            fp: 0.0,
            ap: 0.0,
            rf: 0.0,
        };
        let mut outputs = OutputBundle {
            pu: 0.0,
            pc: 0.0,
            ss: 0.0,
        };
        for &y in years {
            if let Some(b) = yearly_inputs.get(&y).and_then(|m| m.get(&unit)) {
                inputs.fp += b.fp;
                inputs.ap += b.ap;
                inputs.rf += b.rf;
            }
            if let Some(b) = yearly_outputs.get(&y).and_then(|m| m.get(&unit)) {
                outputs.pu += b.pu;
                outputs.pc += b.pc;
                outputs.ss += b.ss;
            }
        }
        inputs.fp /= n;
        inputs.ap /= n;
        inputs.rf /= n;
        outputs.pu /= n;
        outputs.pc /= n;
        outputs.ss /= n;

        let (university_id, uda) = unit;
        by_uda.entry(uda).or_default().push(crate::dea::Dmu {
            id: university_id,
            inputs,
            outputs,
        });
    }

    Ok(by_uda
        .into_iter()
        .map(|(uda, dmus)| DmuPanel {
            uda,
            dmus,
            min_staff_threshold: staff_threshold,
        })
        .collect())
}
