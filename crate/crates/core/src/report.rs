//! Rankings, cluster summaries and comparison statistics over efficiency
//! scores.
//!
//! Everything here is a pure transformation with a fixed ordering, so the
//! same scores always produce the same tables.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::dea::{CostVector, DmuPanel, EfficiencyRecord, UnitStatus};

/// Which output variable feeds the simple ratio indicators.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum OutputSelector {
    #[default]
    Pu,
    Pc,
    Ss,
}

impl OutputSelector {
    pub fn parse(s: &str) -> Option<Self> {
        match s.to_ascii_lowercase().as_str() {
            "pu" => Some(OutputSelector::Pu),
            "pc" => Some(OutputSelector::Pc),
            "ss" => Some(OutputSelector::Ss),
            _ => None,
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            OutputSelector::Pu => "pu",
            OutputSelector::Pc => "pc",
            OutputSelector::Ss => "ss",
        }
    }
}

/// Which efficiency score a summary is built over.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScoreKind {
    Te,
    Ae,
    Ce,
}

impl ScoreKind {
    pub fn select(&self, record: &EfficiencyRecord) -> Option<f64> {
        match self {
            ScoreKind::Te => record.te,
            ScoreKind::Ae => record.ae,
            ScoreKind::Ce => record.ce,
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            ScoreKind::Te => "te",
            ScoreKind::Ae => "ae",
            ScoreKind::Ce => "ce",
        }
    }
}

/// One unit's five scores and five competition ranks.
#[derive(Debug, Clone)]
pub struct IndicatorRow {
    pub dmu_id: String,
    pub te: f64,
    pub ae: f64,
    pub ce: f64,
    pub output_per_scientist: f64,
    pub output_per_cost: f64,
    pub te_rank: u32,
    pub ae_rank: u32,
    pub ce_rank: u32,
    pub output_per_scientist_rank: u32,
    pub output_per_cost_rank: u32,
}

#[derive(Debug, Clone)]
pub struct IndicatorTable {
    pub uda: u8,
    pub rows: Vec<IndicatorRow>,
}

/// Efficient-versus-inefficient split with tertile means of the inefficient
/// scores; `tertile_means` is `None` when fewer than three units are
/// inefficient.
#[derive(Debug, Clone)]
pub struct TertileSummary {
    pub uda: u8,
    pub score: ScoreKind,
    pub efficient_count: usize,
    pub inefficient_count: usize,
    pub tertile_means: Option<[f64; 3]>,
}

/// How far two rankings of the same units disagree, in absolute rank
/// positions, aggregated over all compared units.
#[derive(Debug, Clone, PartialEq)]
pub struct RankVariationStats {
    pub changed_count: usize,
    pub total_count: usize,
    pub max_variation: u32,
    pub average_variation: f64,
    pub median_variation: f64,
    pub coefficient_of_variation: f64,
}

/// Mean, extrema and population standard deviation of one panel variable.
#[derive(Debug, Clone)]
pub struct VariableStats {
    pub variable: &'static str,
    pub ave: f64,
    pub min: f64,
    pub max: f64,
    pub std: f64,
}

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("dmu {0} has zero staff")]
    ZeroStaff(String),
    #[error("dmu {0} has zero weighted cost")]
    ZeroCost(String),
    #[error("invalid cost scale {0}; must be a positive real")]
    InvalidCostScale(f64),
    #[error("score for {0} is not finite")]
    NonFiniteScore(String),
    #[error("rankings cover different units: {0}")]
    KeyMismatch(String),
    #[error("dmu {0} carries no {1} score")]
    MissingScore(String, &'static str),
}

/// Simple ratio indicators: selected output per scientist and per cost
/// unit, where `cost_scale` converts weighted staff into the monetary
/// denominator (1 keeps assistant-professor units).
pub fn partial_indicators(
    panel: &DmuPanel,
    costs: &CostVector,
    cost_scale: f64,
    selector: OutputSelector,
) -> Result<BTreeMap<String, (f64, f64)>, ReportError> {
    if !cost_scale.is_finite() || cost_scale <= 0.0 {
        return Err(ReportError::InvalidCostScale(cost_scale));
    }
    let mut result = BTreeMap::new();
    for dmu in &panel.dmus {
        let staff = dmu.inputs.total();
        if staff <= 0.0 {
            return Err(ReportError::ZeroStaff(dmu.id.clone()));
        }
        let cost = cost_scale * costs.cost_of(&dmu.inputs);
        if cost <= 0.0 {
            return Err(ReportError::ZeroCost(dmu.id.clone()));
        }
        let output = match selector {
            OutputSelector::Pu => dmu.outputs.pu,
            OutputSelector::Pc => dmu.outputs.pc,
            OutputSelector::Ss => dmu.outputs.ss,
        };
        result.insert(dmu.id.clone(), (output / staff, output / cost));
    }
    Ok(result)
}

/// Competition ranking: tied scores share the smallest applicable rank and
/// the next distinct score skips past the tie block.
pub fn rank(
    scores: &BTreeMap<String, f64>,
    higher_is_better: bool,
) -> Result<BTreeMap<String, u32>, ReportError> {
    for (id, s) in scores {
        if !s.is_finite() {
            return Err(ReportError::NonFiniteScore(id.clone()));
        }
    }
    let mut ordered: Vec<(&String, f64)> = scores.iter().map(|(id, &s)| (id, s)).collect();
    ordered.sort_by(|a, b| {
        let by_score = if higher_is_better {
            b.1.total_cmp(&a.1)
        } else {
            a.1.total_cmp(&b.1)
        };
        by_score.then_with(|| a.0.cmp(b.0))
    });

    let mut ranks = BTreeMap::new();
    let mut current_rank = 0u32;
    let mut previous: Option<f64> = None;
    for (position, (id, score)) in ordered.into_iter().enumerate() {
        if previous != Some(score) {
            current_rank = position as u32 + 1;
            previous = Some(score);
        }
        ranks.insert(id.clone(), current_rank);
    }
    Ok(ranks)
}

/// Joins DEA scores with the ratio indicators and ranks all five columns.
/// Only evaluated units appear; rows are sorted by unit id.
pub fn indicator_table(
    panel: &DmuPanel,
    records: &[EfficiencyRecord],
    costs: &CostVector,
    cost_scale: f64,
    selector: OutputSelector,
) -> Result<IndicatorTable, ReportError> {
    let evaluated: Vec<&EfficiencyRecord> = records
        .iter()
        .filter(|r| r.status == UnitStatus::Evaluated)
        .collect();

    let sub_panel = DmuPanel {
        uda: panel.uda,
        dmus: panel
            .dmus
            .iter()
            .filter(|d| evaluated.iter().any(|r| r.dmu_id == d.id))
            .cloned()
            .collect(),
        min_staff_threshold: panel.min_staff_threshold,
    };
    let partials = partial_indicators(&sub_panel, costs, cost_scale, selector)?;

    let mut te = BTreeMap::new();
    let mut ae = BTreeMap::new();
    let mut ce = BTreeMap::new();
    let mut ops = BTreeMap::new();
    let mut opc = BTreeMap::new();
    for r in &evaluated {
        let score = |v: Option<f64>, name: &'static str| {
            v.ok_or_else(|| ReportError::MissingScore(r.dmu_id.clone(), name))
        };
        te.insert(r.dmu_id.clone(), score(r.te, "te")?);
        ae.insert(r.dmu_id.clone(), score(r.ae, "ae")?);
        ce.insert(r.dmu_id.clone(), score(r.ce, "ce")?);
        let &(per_scientist, per_cost) = partials
            .get(&r.dmu_id)
            .ok_or_else(|| ReportError::MissingScore(r.dmu_id.clone(), "ratio"))?;
        ops.insert(r.dmu_id.clone(), per_scientist);
        opc.insert(r.dmu_id.clone(), per_cost);
    }

    let te_ranks = rank(&te, true)?;
    let ae_ranks = rank(&ae, true)?;
    let ce_ranks = rank(&ce, true)?;
    let ops_ranks = rank(&ops, true)?;
    let opc_ranks = rank(&opc, true)?;

    let rows = te
        .keys()
        .map(|id| IndicatorRow {
            dmu_id: id.clone(),
            te: te[id],
            ae: ae[id],
            ce: ce[id],
            output_per_scientist: ops[id],
            output_per_cost: opc[id],
            te_rank: te_ranks[id],
            ae_rank: ae_ranks[id],
            ce_rank: ce_ranks[id],
            output_per_scientist_rank: ops_ranks[id],
            output_per_cost_rank: opc_ranks[id],
        })
        .collect();

    Ok(IndicatorTable {
        uda: panel.uda,
        rows,
    })
}

/// Counts units at the frontier (score within 1e-9 of 1) and averages the
/// rest in three near-equal descending groups, larger groups first.
pub fn tertile_summary(uda: u8, records: &[EfficiencyRecord], score: ScoreKind) -> TertileSummary {
    let mut inefficient: Vec<f64> = Vec::new();
    let mut efficient_count = 0usize;
    for r in records {
        let Some(value) = score.select(r) else {
            continue;
        };
        if value >= 1.0 - 1e-9 {
            efficient_count += 1;
        } else {
            inefficient.push(value);
        }
    }
    inefficient.sort_by(|a, b| b.total_cmp(a));

    let m = inefficient.len();
    let tertile_means = if m < 3 {
        None
    } else {
        let base = m / 3;
        let remainder = m % 3;
        let sizes = [
            base + usize::from(remainder > 0),
            base + usize::from(remainder > 1),
            base,
        ];
        let mut means = [0.0; 3];
        let mut start = 0;
        for (g, &size) in sizes.iter().enumerate() {
            let group = &inefficient[start..start + size];
            means[g] = group.iter().sum::<f64>() / size as f64;
            start += size;
        }
        Some(means)
    };

    TertileSummary {
        uda,
        score,
        efficient_count,
        inefficient_count: m,
        tertile_means,
    }
}

/// Statistics of the absolute rank differences between two rankings of the
/// same units; the coefficient of variation uses the population standard
/// deviation and is reported as 0 when every difference is 0.
pub fn rank_variation(
    ranks_a: &BTreeMap<String, u32>,
    ranks_b: &BTreeMap<String, u32>,
) -> Result<RankVariationStats, ReportError> {
    if ranks_a.len() != ranks_b.len() || ranks_a.keys().zip(ranks_b.keys()).any(|(a, b)| a != b) {
        let only_a: Vec<&String> = ranks_a
            .keys()
            .filter(|k| !ranks_b.contains_key(*k))
            .collect();
        let only_b: Vec<&String> = ranks_b
            .keys()
            .filter(|k| !ranks_a.contains_key(*k))
            .collect();
        return Err(ReportError::KeyMismatch(format!(
            "{only_a:?} missing from one side, {only_b:?} from the other"
        )));
    }

    let mut diffs: Vec<u32> = ranks_a
        .iter()
        .map(|(id, &a)| a.abs_diff(ranks_b[id]))
        .collect();
    diffs.sort_unstable();

    let total_count = diffs.len();
    let changed_count = diffs.iter().filter(|&&d| d > 0).count();
    let max_variation = diffs.last().copied().unwrap_or(0);
    let mean = if total_count == 0 {
        0.0
    } else {
        diffs.iter().map(|&d| d as f64).sum::<f64>() / total_count as f64
    };
    let median_variation = if total_count == 0 {
        0.0
    } else if total_count % 2 == 1 {
        diffs[total_count / 2] as f64
    } else {
        (diffs[total_count / 2 - 1] as f64 + diffs[total_count / 2] as f64) / 2.0
    };
    let coefficient_of_variation = if mean == 0.0 {
        0.0
    } else {
        let variance = diffs
            .iter()
            .map(|&d| (d as f64 - mean).powi(2))
            .sum::<f64>()
            / total_count as f64;
        variance.sqrt() / mean
    };

    Ok(RankVariationStats {
        changed_count,
        total_count,
        max_variation,
        average_variation: mean,
        median_variation,
        coefficient_of_variation,
    })
}

/// Mean / min / max / population std for each input and output variable
/// across the panel's units.
pub fn descriptive_stats(panel: &DmuPanel) -> Vec<VariableStats> {
    type ColumnGetter = fn(&crate::dea::Dmu) -> f64;
    let columns: [(&'static str, ColumnGetter); 6] = [
        ("fp", |d| d.inputs.fp),
        ("ap", |d| d.inputs.ap),
        ("rf", |d| d.inputs.rf),
        ("pu", |d| d.outputs.pu),
        ("pc", |d| d.outputs.pc),
        ("ss", |d| d.outputs.ss),
    ];
    columns
        .iter()
        .map(|&(variable, get)| {
            let values: Vec<f64> = panel.dmus.iter().map(get).collect();
            let n = values.len() as f64;
            let ave = values.iter().sum::<f64>() / n;
            let min = values.iter().copied().fold(f64::INFINITY, f64::min);
            let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let std = (values.iter().map(|v| (v - ave).powi(2)).sum::<f64>() / n).sqrt();
            VariableStats {
                variable,
                ave,
                min,
                max,
                std,
            }
        })
        .collect()
}
