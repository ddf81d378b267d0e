//! Input-oriented, constant-returns-to-scale efficiency models.
//!
//! Every decision-making unit (DMU) is one university observed in one
//! disciplinary area, described by three staff inputs and three publication
//! outputs. Technical efficiency is the radial envelopment score: the
//! largest equi-proportional shrinkage of the unit's inputs that still lets
//! a convex-conical combination of its peers produce its outputs. Cost
//! efficiency compares the unit's actual staff cost with the cheapest input
//! bundle able to produce the same outputs, and allocative efficiency is
//! their ratio.

use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

use crate::lp::{solve_lp, Constraint, LinearProgram, LpStatus, Relation, Sense, SolverOptions};

/// Peer weights below this are treated as zero everywhere they surface.
pub const LAMBDA_EPS: f64 = 1e-9;

/// Staff headcounts by academic rank, averaged over the observation period.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InputBundle {
    pub fp: f64,
    pub ap: f64,
    pub rf: f64,
}

impl InputBundle {
    pub fn total(&self) -> f64 {
        self.fp + self.ap + self.rf
    }

    pub fn as_array(&self) -> [f64; 3] {
        [self.fp, self.ap, self.rf]
    }

    fn check(&self) -> Result<(), String> {
        for (name, v) in [("fp", self.fp), ("ap", self.ap), ("rf", self.rf)] {
            if !v.is_finite() || v < 0.0 {
                return Err(format!("input {name} = {v} must be a nonnegative real"));
            }
        }
        Ok(())
    }
}

/// Publication outputs: raw count, fractional contribution, and
/// impact-weighted strength.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OutputBundle {
    pub pu: f64,
    pub pc: f64,
    pub ss: f64,
}

impl OutputBundle {
    pub fn as_array(&self) -> [f64; 3] {
        [self.pu, self.pc, self.ss]
    }

    pub fn is_zero(&self) -> bool {
        self.pu <= 0.0 && self.pc <= 0.0 && self.ss <= 0.0
    }

    fn check(&self) -> Result<(), String> {
        for (name, v) in [("pu", self.pu), ("pc", self.pc), ("ss", self.ss)] {
            if !v.is_finite() || v < 0.0 {
                return Err(format!("output {name} = {v} must be a nonnegative real"));
            }
        }
        if self.pc > self.pu + 1e-9 {
            return Err(format!(
                "pc = {} exceeds pu = {}; a publication adds at most 1 to pc and exactly 1 to pu",
                self.pc, self.pu
            ));
        }
        Ok(())
    }
}

/// Relative wage weights per rank, expressed in assistant-professor units.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CostVector {
    pub w_fp: f64,
    pub w_ap: f64,
    pub w_rf: f64,
}

impl Default for CostVector {
    fn default() -> Self {
        Self {
            w_fp: 1.814,
            w_ap: 1.370,
            w_rf: 1.000,
        }
    }
}

impl CostVector {
    pub fn as_array(&self) -> [f64; 3] {
        [self.w_fp, self.w_ap, self.w_rf]
    }

    /// Weighted staff cost of an input bundle.
    pub fn cost_of(&self, x: &InputBundle) -> f64 {
        self.w_fp * x.fp + self.w_ap * x.ap + self.w_rf * x.rf
    }

    pub fn validate(&self) -> Result<(), DeaError> {
        for (name, v) in [
            ("w_fp", self.w_fp),
            ("w_ap", self.w_ap),
            ("w_rf", self.w_rf),
        ] {
            if !v.is_finite() || v <= 0.0 {
                return Err(DeaError::InvalidCosts(format!(
                    "{name} = {v} must be a positive real"
                )));
            }
        }
        Ok(())
    }
}

/// One evaluated unit.
#[derive(Debug, Clone)]
pub struct Dmu {
    pub id: String,
    pub inputs: InputBundle,
    pub outputs: OutputBundle,
}

/// The evaluation set for one disciplinary area.
#[derive(Debug, Clone)]
pub struct DmuPanel {
    /// Disciplinary-area code, 1 through 9.
    pub uda: u8,
    pub dmus: Vec<Dmu>,
    /// Units with fewer total staff than this never enter the frontier.
    pub min_staff_threshold: f64,
}

impl DmuPanel {
    pub fn validate(&self) -> Result<(), DeaError> {
        if !(1..=9).contains(&self.uda) {
            return Err(DeaError::InvalidPanel(format!(
                "uda {} outside 1..=9",
                self.uda
            )));
        }
        if !self.min_staff_threshold.is_finite() || self.min_staff_threshold < 0.0 {
            return Err(DeaError::InvalidPanel(format!(
                "staff threshold {} must be a nonnegative real",
                self.min_staff_threshold
            )));
        }
        if self.dmus.is_empty() {
            return Err(DeaError::InvalidPanel("panel has no dmus".into()));
        }
        let mut seen = BTreeSet::new();
        for dmu in &self.dmus {
            if !seen.insert(dmu.id.as_str()) {
                return Err(DeaError::InvalidPanel(format!(
                    "duplicate dmu id {}",
                    dmu.id
                )));
            }
            dmu.inputs
                .check()
                .map_err(|e| DeaError::InvalidPanel(format!("dmu {}: {e}", dmu.id)))?;
            dmu.outputs
                .check()
                .map_err(|e| DeaError::InvalidPanel(format!("dmu {}: {e}", dmu.id)))?;
        }
        Ok(())
    }

    fn find(&self, dmu_id: &str) -> Result<&Dmu, DeaError> {
        self.dmus
            .iter()
            .find(|d| d.id == dmu_id)
            .ok_or_else(|| DeaError::UnknownDmu(dmu_id.to_string()))
    }

    /// Units allowed to shape the frontier: at or above the staff threshold
    /// (and nonempty), with at least one positive output.
    fn eligible(&self) -> Vec<&Dmu> {
        self.dmus
            .iter()
            .filter(|d| classify(d, self.min_staff_threshold) == UnitStatus::Evaluated)
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UnitStatus {
    Evaluated,
    ExcludedSmall,
    DegenerateZeroOutput,
}

impl UnitStatus {
    pub fn as_str(&self) -> &'static str {
        match self {
            UnitStatus::Evaluated => "evaluated",
            UnitStatus::ExcludedSmall => "excluded_small",
            UnitStatus::DegenerateZeroOutput => "degenerate_zero_output",
        }
    }
}

/// Efficiency scores for one unit. Scores are `None` unless the unit was
/// actually evaluated, and each is populated only by the model that
/// computes it.
#[derive(Debug, Clone)]
pub struct EfficiencyRecord {
    pub dmu_id: String,
    pub status: UnitStatus,
    pub te: Option<f64>,
    pub ae: Option<f64>,
    pub ce: Option<f64>,
    /// Peer weights from the technical-efficiency solve.
    pub lambdas: BTreeMap<String, f64>,
}

impl EfficiencyRecord {
    fn flagged(dmu_id: &str, status: UnitStatus) -> Self {
        Self {
            dmu_id: dmu_id.to_string(),
            status,
            te: None,
            ae: None,
            ce: None,
            lambdas: BTreeMap::new(),
        }
    }
}

#[derive(Debug, Error)]
pub enum DeaError {
    #[error("invalid panel: {0}")]
    InvalidPanel(String),
    #[error("invalid cost vector: {0}")]
    InvalidCosts(String),
    #[error("unknown dmu id {0}")]
    UnknownDmu(String),
    #[error("no evaluable dmus remain after exclusions")]
    PanelEmpty,
    #[error("dmu {0} has no positive output")]
    DegenerateZeroOutput(String),
    #[error("dmu {0} is below the staff threshold")]
    BelowThreshold(String),
    #[error("dmu {0} has nonpositive weighted cost")]
    NonpositiveActualCost(String),
    #[error("efficiency pair out of range: {0}")]
    Domain(String),
    #[error("lp solve failed for dmu {dmu_id}: {detail}")]
    SolverFailure { dmu_id: String, detail: String },
}

fn classify(dmu: &Dmu, threshold: f64) -> UnitStatus {
    let staff = dmu.inputs.total();
    if staff < threshold || staff <= 0.0 {
        UnitStatus::ExcludedSmall
    } else if dmu.outputs.is_zero() {
        UnitStatus::DegenerateZeroOutput
    } else {
        UnitStatus::Evaluated
    }
}

fn require_evaluated(dmu: &Dmu, threshold: f64) -> Result<(), DeaError> {
    match classify(dmu, threshold) {
        UnitStatus::Evaluated => Ok(()),
        UnitStatus::ExcludedSmall => Err(DeaError::BelowThreshold(dmu.id.clone())),
        UnitStatus::DegenerateZeroOutput => Err(DeaError::DegenerateZeroOutput(dmu.id.clone())),
    }
}

/// Envelopment LP for the radial score: variables are theta followed by one
/// intensity weight per eligible peer.
fn technical_lp(eligible: &[&Dmu], target: &Dmu) -> LinearProgram {
    let nvars = 1 + eligible.len();
    let x_t = target.inputs.as_array();
    let y_t = target.outputs.as_array();
    let mut constraints = Vec::with_capacity(6);
    for (d, &input) in x_t.iter().enumerate() {
        let mut coeffs = vec![0.0; nvars];
        coeffs[0] = -input;
        for (k, dmu) in eligible.iter().enumerate() {
            coeffs[1 + k] = dmu.inputs.as_array()[d];
        }
        constraints.push(Constraint {
            coeffs,
            relation: Relation::Le,
            rhs: 0.0,
        });
    }
    for (d, &output) in y_t.iter().enumerate() {
        let mut coeffs = vec![0.0; nvars];
        for (k, dmu) in eligible.iter().enumerate() {
            coeffs[1 + k] = dmu.outputs.as_array()[d];
        }
        constraints.push(Constraint {
            coeffs,
            relation: Relation::Ge,
            rhs: output,
        });
    }
    let mut objective = vec![0.0; nvars];
    objective[0] = 1.0;
    LinearProgram {
        sense: Sense::Minimize,
        objective,
        constraints,
    }
}

/// Cost-minimisation LP: variables are the three chosen input levels
/// followed by one intensity weight per eligible peer.
fn cost_lp(eligible: &[&Dmu], target: &Dmu, costs: &CostVector) -> LinearProgram {
    let nvars = 3 + eligible.len();
    let y_t = target.outputs.as_array();
    let mut constraints = Vec::with_capacity(6);
    for d in 0..3 {
        let mut coeffs = vec![0.0; nvars];
        coeffs[d] = -1.0;
        for (k, dmu) in eligible.iter().enumerate() {
            coeffs[3 + k] = dmu.inputs.as_array()[d];
        }
        constraints.push(Constraint {
            coeffs,
            relation: Relation::Le,
            rhs: 0.0,
        });
    }
    for (d, &output) in y_t.iter().enumerate() {
        let mut coeffs = vec![0.0; nvars];
        for (k, dmu) in eligible.iter().enumerate() {
            coeffs[3 + k] = dmu.outputs.as_array()[d];
        }
        constraints.push(Constraint {
            coeffs,
            relation: Relation::Ge,
            rhs: output,
        });
    }
    let mut objective = vec![0.0; nvars];
    objective[..3].copy_from_slice(&costs.as_array());
    LinearProgram {
        sense: Sense::Minimize,
        objective,
        constraints,
    }
}

fn solve_checked(problem: &LinearProgram, dmu_id: &str) -> Result<crate::lp::LpSolution, DeaError> {
    let options = SolverOptions::default();
    let solution = solve_lp(problem, &options).map_err(|e| DeaError::SolverFailure {
        dmu_id: dmu_id.to_string(),
        detail: e.to_string(),
    })?;
    if solution.status != LpStatus::Optimal {
        return Err(DeaError::SolverFailure {
            dmu_id: dmu_id.to_string(),
            detail: format!("terminated with status {:?}", solution.status),
        });
    }
    let report = crate::lp::verify_solution(problem, &solution);
    if !report.within(1e-6) {
        return Err(DeaError::SolverFailure {
            dmu_id: dmu_id.to_string(),
            detail: format!("solution failed the feasibility gate: {report:?}"),
        });
    }
    Ok(solution)
}

fn lambda_map(eligible: &[&Dmu], weights: &[f64]) -> BTreeMap<String, f64> {
    eligible
        .iter()
        .zip(weights)
        .filter(|(_, &w)| w > LAMBDA_EPS)
        .map(|(dmu, &w)| (dmu.id.clone(), w))
        .collect()
}

/// Radial technical efficiency of `target` against the panel's eligible
/// frontier. The returned record carries `te` and the peer weights; cost
/// and allocative scores stay unset.
pub fn technical_efficiency(panel: &DmuPanel, target: &str) -> Result<EfficiencyRecord, DeaError> {
    panel.validate()?;
    let dmu = panel.find(target)?;
    require_evaluated(dmu, panel.min_staff_threshold)?;
    let eligible = panel.eligible();
    if eligible.is_empty() {
        return Err(DeaError::PanelEmpty);
    }
    let solution = solve_checked(&technical_lp(&eligible, dmu), target)?;
    Ok(EfficiencyRecord {
        dmu_id: dmu.id.clone(),
        status: UnitStatus::Evaluated,
        te: Some(solution.objective_value.min(1.0)),
        ae: None,
        ce: None,
        lambdas: lambda_map(&eligible, &solution.x[1..]),
    })
}

/// Cost efficiency of `target`: minimum weighted cost of any input bundle
/// that the eligible frontier can stretch to the target's outputs, divided
/// by the target's actual weighted cost.
pub fn cost_efficiency(
    panel: &DmuPanel,
    target: &str,
    costs: &CostVector,
) -> Result<EfficiencyRecord, DeaError> {
    panel.validate()?;
    costs.validate()?;
    let dmu = panel.find(target)?;
    require_evaluated(dmu, panel.min_staff_threshold)?;
    let actual_cost = costs.cost_of(&dmu.inputs);
    if actual_cost <= 0.0 {
        return Err(DeaError::NonpositiveActualCost(dmu.id.clone()));
    }
    let eligible = panel.eligible();
    if eligible.is_empty() {
        return Err(DeaError::PanelEmpty);
    }
    let solution = solve_checked(&cost_lp(&eligible, dmu, costs), target)?;
    let ce = (solution.objective_value / actual_cost).min(1.0);
    Ok(EfficiencyRecord {
        dmu_id: dmu.id.clone(),
        status: UnitStatus::Evaluated,
        te: None,
        ae: None,
        ce: Some(ce),
        lambdas: lambda_map(&eligible, &solution.x[3..]),
    })
}

/// Allocative efficiency is the cost score net of radial waste. Requires
/// `0 < ce <= te <= 1` up to a 1e-9 slack.
pub fn allocative_efficiency(te: f64, ce: f64) -> Result<f64, DeaError> {
    let ordered =
        te.is_finite() && ce.is_finite() && ce > 0.0 && te <= 1.0 + 1e-9 && ce <= te + 1e-9;
    if !ordered {
        return Err(DeaError::Domain(format!(
            "need 0 < ce <= te <= 1, got te = {te}, ce = {ce}"
        )));
    }
    Ok((ce / te).min(1.0))
}

/// Scores every unit in the panel. Units under the staff threshold or with
/// all-zero outputs are flagged and kept out of the frontier; everything
/// else receives te, ce, ae and peer weights. Results are sorted by dmu id.
pub fn evaluate_panel(
    panel: &DmuPanel,
    costs: &CostVector,
) -> Result<Vec<EfficiencyRecord>, DeaError> {
    panel.validate()?;
    costs.validate()?;
    let eligible = panel.eligible();
    if eligible.is_empty() {
        return Err(DeaError::PanelEmpty);
    }

    let mut records = Vec::with_capacity(panel.dmus.len());
    for dmu in &panel.dmus {
        let status = classify(dmu, panel.min_staff_threshold);
        if status != UnitStatus::Evaluated {
            records.push(EfficiencyRecord::flagged(&dmu.id, status));
            continue;
        }
        let te_solution = solve_checked(&technical_lp(&eligible, dmu), &dmu.id)?;
        let te = te_solution.objective_value.min(1.0);

        let actual_cost = costs.cost_of(&dmu.inputs);
        if actual_cost <= 0.0 {
            return Err(DeaError::NonpositiveActualCost(dmu.id.clone()));
        }
        let ce_solution = solve_checked(&cost_lp(&eligible, dmu, costs), &dmu.id)?;
        let ce = (ce_solution.objective_value / actual_cost).min(1.0);
        let ae = allocative_efficiency(te, ce)?;

        records.push(EfficiencyRecord {
            dmu_id: dmu.id.clone(),
            status: UnitStatus::Evaluated,
            te: Some(te),
            ae: Some(ae),
            ce: Some(ce),
            lambdas: lambda_map(&eligible, &te_solution.x[1..]),
        });
    }
    records.sort_by(|a, b| a.dmu_id.cmp(&b.dmu_id));
    Ok(records)
}

/// Reference set of an evaluated unit: peers with weight above
/// [`LAMBDA_EPS`], heaviest first (ties by id).
pub fn frontier_peers(record: &EfficiencyRecord) -> Result<Vec<(String, f64)>, DeaError> {
    if record.status != UnitStatus::Evaluated {
        return Err(DeaError::Domain(format!(
            "dmu {} was not evaluated (status {})",
            record.dmu_id,
            record.status.as_str()
        )));
    }
    let mut peers: Vec<(String, f64)> = record
        .lambdas
        .iter()
        .filter(|(_, &w)| w > LAMBDA_EPS)
        .map(|(id, &w)| (id.clone(), w))
        .collect();
    peers.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    Ok(peers)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn dmu(id: &str, inputs: [f64; 3], outputs: [f64; 3]) -> Dmu {
        Dmu {
            id: id.to_string(),
            inputs: InputBundle {
                fp: inputs[0],
                ap: inputs[1],
                rf: inputs[2],
            },
            outputs: OutputBundle {
                pu: outputs[0],
                pc: outputs[1],
                ss: outputs[2],
            },
        }
    }

    fn panel(dmus: Vec<Dmu>, threshold: f64) -> DmuPanel {
        DmuPanel {
            uda: 1,
            dmus,
            min_staff_threshold: threshold,
        }
    }

    fn unit_costs() -> CostVector {
        CostVector {
            w_fp: 1.0,
            w_ap: 1.0,
            w_rf: 1.0,
        }
    }

    #[test]
    fn single_unit_is_its_own_frontier() {
        let p = panel(vec![dmu("A", [2.0, 1.0, 0.0], [3.0, 1.0, 4.0])], 0.0);
        let records = evaluate_panel(&p, &unit_costs()).unwrap();
        assert_eq!(records.len(), 1);
        let r = &records[0];
        assert!((r.te.unwrap() - 1.0).abs() < 1e-9);
        assert!((r.ce.unwrap() - 1.0).abs() < 1e-9);
        assert!((r.ae.unwrap() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn single_ratio_frontier() {
        // One input, one output: te is each unit's output/input ratio
        // divided by the best ratio.
        let p = panel(
            vec![
                dmu("A", [1.0, 0.0, 0.0], [1.0, 0.0, 0.0]),
                dmu("B", [2.0, 0.0, 0.0], [1.0, 0.0, 0.0]),
            ],
            0.0,
        );
        let a = technical_efficiency(&p, "A").unwrap();
        let b = technical_efficiency(&p, "B").unwrap();
        assert!((a.te.unwrap() - 1.0).abs() < 1e-9);
        assert!((b.te.unwrap() - 0.5).abs() < 1e-9);
    }

    #[test]
    fn two_input_frontier_mixes_peers() {
        // A and B span the frontier; C sits strictly inside and projects
        // onto their midpoint at theta = 0.75.
        let p = panel(
            vec![
                dmu("A", [2.0, 4.0, 0.0], [1.0, 0.0, 0.0]),
                dmu("B", [4.0, 2.0, 0.0], [1.0, 0.0, 0.0]),
                dmu("C", [4.0, 4.0, 0.0], [1.0, 0.0, 0.0]),
            ],
            0.0,
        );
        let c = technical_efficiency(&p, "C").unwrap();
        assert!((c.te.unwrap() - 0.75).abs() < 1e-9);
        let peers = frontier_peers(&c).unwrap();
        assert_eq!(peers.len(), 2);
        assert_eq!(peers[0].0, "A");
        assert_eq!(peers[1].0, "B");
        assert!((peers[0].1 - 0.5).abs() < 1e-9);
        assert!((peers[1].1 - 0.5).abs() < 1e-9);
    }

    #[test]
    fn asymmetric_costs_expose_mix_inefficiency() {
        // With weights (1, 3) the cheapest producer of one output unit is B
        // at cost 10; A spends 14, so ce(A) = 10/14 while te(A) = 1.
        let p = panel(
            vec![
                dmu("A", [2.0, 4.0, 0.0], [1.0, 0.0, 0.0]),
                dmu("B", [4.0, 2.0, 0.0], [1.0, 0.0, 0.0]),
            ],
            0.0,
        );
        let costs = CostVector {
            w_fp: 1.0,
            w_ap: 3.0,
            w_rf: 1.0,
        };
        let te = technical_efficiency(&p, "A").unwrap().te.unwrap();
        let ce = cost_efficiency(&p, "A", &costs).unwrap().ce.unwrap();
        assert!((te - 1.0).abs() < 1e-9);
        assert!((ce - 10.0 / 14.0).abs() < 1e-9);
        assert!((allocative_efficiency(te, ce).unwrap() - 10.0 / 14.0).abs() < 1e-9);
    }

    #[test]
    fn symmetric_costs_make_radial_projection_cost_optimal() {
        let p = panel(
            vec![
                dmu("A", [2.0, 4.0, 0.0], [1.0, 0.0, 0.0]),
                dmu("B", [4.0, 2.0, 0.0], [1.0, 0.0, 0.0]),
                dmu("C", [4.0, 4.0, 0.0], [1.0, 0.0, 0.0]),
            ],
            0.0,
        );
        let records = evaluate_panel(&p, &unit_costs()).unwrap();
        let c = records.iter().find(|r| r.dmu_id == "C").unwrap();
        assert!((c.te.unwrap() - 0.75).abs() < 1e-9);
        assert!((c.ce.unwrap() - 0.75).abs() < 1e-9);
        assert!((c.ae.unwrap() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn identical_units_are_all_efficient() {
        let p = panel(
            vec![
                dmu("A", [3.0, 2.0, 1.0], [5.0, 2.5, 7.0]),
                dmu("B", [3.0, 2.0, 1.0], [5.0, 2.5, 7.0]),
                dmu("C", [3.0, 2.0, 1.0], [5.0, 2.5, 7.0]),
            ],
            0.0,
        );
        for r in evaluate_panel(&p, &CostVector::default()).unwrap() {
            assert!((r.te.unwrap() - 1.0).abs() < 1e-9, "{}", r.dmu_id);
            assert!((r.ce.unwrap() - 1.0).abs() < 1e-9, "{}", r.dmu_id);
            assert!((r.ae.unwrap() - 1.0).abs() < 1e-9, "{}", r.dmu_id);
        }
    }

    #[test]
    fn under_threshold_unit_is_excluded_from_the_frontier() {
        // B dominates everyone but has only 4 staff; with threshold 5 it
        // must not shape anyone's score.
        let p = panel(
            vec![
                dmu("A", [5.0, 0.0, 0.0], [1.0, 0.0, 0.0]),
                dmu("B", [4.0, 0.0, 0.0], [100.0, 0.0, 0.0]),
            ],
            5.0,
        );
        let records = evaluate_panel(&p, &unit_costs()).unwrap();
        let a = records.iter().find(|r| r.dmu_id == "A").unwrap();
        let b = records.iter().find(|r| r.dmu_id == "B").unwrap();
        assert_eq!(b.status, UnitStatus::ExcludedSmall);
        assert!(b.te.is_none() && b.ce.is_none() && b.ae.is_none());
        assert!((a.te.unwrap() - 1.0).abs() < 1e-9);
        assert!(!a.lambdas.contains_key("B"));
    }

    #[test]
    fn zero_output_unit_is_flagged_and_never_a_peer() {
        let p = panel(
            vec![
                dmu("A", [5.0, 0.0, 0.0], [0.0, 0.0, 0.0]),
                dmu("B", [10.0, 0.0, 0.0], [1.0, 0.0, 0.0]),
            ],
            0.0,
        );
        let records = evaluate_panel(&p, &unit_costs()).unwrap();
        let a = records.iter().find(|r| r.dmu_id == "A").unwrap();
        assert_eq!(a.status, UnitStatus::DegenerateZeroOutput);
        assert!(a.te.is_none());
        for r in &records {
            assert!(!r.lambdas.contains_key("A"));
        }
        assert!(matches!(
            technical_efficiency(&p, "A"),
            Err(DeaError::DegenerateZeroOutput(_))
        ));
    }

    #[test]
    fn zero_staff_unit_is_excluded_even_without_threshold() {
        let p = panel(
            vec![
                dmu("A", [0.0, 0.0, 0.0], [1.0, 0.0, 0.0]),
                dmu("B", [1.0, 0.0, 0.0], [1.0, 0.0, 0.0]),
            ],
            0.0,
        );
        let records = evaluate_panel(&p, &unit_costs()).unwrap();
        let a = records.iter().find(|r| r.dmu_id == "A").unwrap();
        assert_eq!(a.status, UnitStatus::ExcludedSmall);
    }

    #[test]
    fn empty_frontier_is_an_error() {
        let p = panel(vec![dmu("A", [1.0, 0.0, 0.0], [1.0, 0.0, 0.0])], 5.0);
        assert!(matches!(
            evaluate_panel(&p, &unit_costs()),
            Err(DeaError::PanelEmpty)
        ));
    }

    #[test]
    fn allocative_requires_ordered_pair() {
        assert!((allocative_efficiency(1.0, 1.0).unwrap() - 1.0).abs() < 1e-12);
        assert!((allocative_efficiency(0.5, 0.25).unwrap() - 0.5).abs() < 1e-12);
        assert!(matches!(
            allocative_efficiency(0.5, 0.6),
            Err(DeaError::Domain(_))
        ));
        assert!(matches!(
            allocative_efficiency(1.2, 0.6),
            Err(DeaError::Domain(_))
        ));
        assert!(matches!(
            allocative_efficiency(0.5, 0.0),
            Err(DeaError::Domain(_))
        ));
    }

    #[test]
    fn panel_validation_rejects_bad_data() {
        let dup = panel(
            vec![
                dmu("A", [1.0, 0.0, 0.0], [1.0, 0.0, 0.0]),
                dmu("A", [2.0, 0.0, 0.0], [1.0, 0.0, 0.0]),
            ],
            0.0,
        );
        assert!(matches!(
            evaluate_panel(&dup, &unit_costs()),
            Err(DeaError::InvalidPanel(_))
        ));

        let pc_over_pu = panel(vec![dmu("A", [1.0, 0.0, 0.0], [1.0, 2.0, 0.0])], 0.0);
        assert!(matches!(
            evaluate_panel(&pc_over_pu, &unit_costs()),
            Err(DeaError::InvalidPanel(_))
        ));

        let negative = panel(vec![dmu("A", [-1.0, 0.0, 0.0], [1.0, 0.0, 0.0])], 0.0);
        assert!(matches!(
            evaluate_panel(&negative, &unit_costs()),
            Err(DeaError::InvalidPanel(_))
        ));

        let mut bad_uda = panel(vec![dmu("A", [1.0, 0.0, 0.0], [1.0, 0.0, 0.0])], 0.0);
        bad_uda.uda = 10;
        assert!(matches!(
            evaluate_panel(&bad_uda, &unit_costs()),
            Err(DeaError::InvalidPanel(_))
        ));
    }

    #[test]
    fn nonpositive_cost_weights_are_rejected() {
        let p = panel(vec![dmu("A", [1.0, 0.0, 0.0], [1.0, 0.0, 0.0])], 0.0);
        let costs = CostVector {
            w_fp: 0.0,
            w_ap: 1.0,
            w_rf: 1.0,
        };
        assert!(matches!(
            evaluate_panel(&p, &costs),
            Err(DeaError::InvalidCosts(_))
        ));
    }

    #[test]
    fn unknown_target_is_reported() {
        let p = panel(vec![dmu("A", [1.0, 0.0, 0.0], [1.0, 0.0, 0.0])], 0.0);
        assert!(matches!(
            technical_efficiency(&p, "Z"),
            Err(DeaError::UnknownDmu(_))
        ));
    }

    fn arb_panel() -> impl Strategy<Value = DmuPanel> {
        let unit = (
            prop::array::uniform3(1..=9i32),
            prop::array::uniform3(1..=9i32),
        );
        prop::collection::vec(unit, 2..=6).prop_map(|units| {
            let dmus = units
                .into_iter()
                .enumerate()
                .map(|(k, (i, o))| {
                    // Keep pc <= pu by sorting the two smallest outputs.
                    let pu = o[0].max(o[1]) as f64;
                    let pc = o[0].min(o[1]) as f64;
                    dmu(
                        &format!("D{k}"),
                        [i[0] as f64, i[1] as f64, i[2] as f64],
                        [pu, pc, o[2] as f64],
                    )
                })
                .collect();
            panel(dmus, 0.0)
        })
    }

    proptest! {
        #[test]
        fn every_panel_has_a_fully_efficient_unit(p in arb_panel()) {
            let records = evaluate_panel(&p, &CostVector::default()).unwrap();
            let best = records
                .iter()
                .filter_map(|r| r.te)
                .fold(0.0_f64, f64::max);
            prop_assert!((best - 1.0).abs() < 1e-9);
            for r in &records {
                let te = r.te.unwrap();
                let ce = r.ce.unwrap();
                prop_assert!(te > 0.0 && te <= 1.0);
                prop_assert!(ce > 0.0 && ce <= te + 1e-9);
                prop_assert!((r.ae.unwrap() - ce / te).abs() < 1e-9);
            }
        }

        #[test]
        fn adding_a_unit_never_raises_scores(p in arb_panel(), extra in (prop::array::uniform3(1..=9i32), prop::array::uniform3(1..=9i32))) {
            let before = evaluate_panel(&p, &CostVector::default()).unwrap();
            let mut grown = p.clone();
            let (i, o) = extra;
            grown.dmus.push(dmu(
                "EXTRA",
                [i[0] as f64, i[1] as f64, i[2] as f64],
                [o[0].max(o[1]) as f64, o[0].min(o[1]) as f64, o[2] as f64],
            ));
            let after = evaluate_panel(&grown, &CostVector::default()).unwrap();
            for b in &before {
                let a = after.iter().find(|r| r.dmu_id == b.dmu_id).unwrap();
                prop_assert!(a.te.unwrap() <= b.te.unwrap() + 1e-8);
                prop_assert!(a.ce.unwrap() <= b.ce.unwrap() + 1e-8);
            }
        }

        #[test]
        fn rescaling_a_column_preserves_technical_scores(p in arb_panel(), col in 0..6usize, k in 0.1f64..10.0) {
            let baseline = evaluate_panel(&p, &CostVector::default()).unwrap();
            let mut scaled = p.clone();
            for d in &mut scaled.dmus {
                match col {
                    0 => d.inputs.fp *= k,
                    1 => d.inputs.ap *= k,
                    2 => d.inputs.rf *= k,
                    3 => { d.outputs.pu *= k; d.outputs.pc *= k; }
                    4 => d.outputs.pc *= k * 0.1, // keeps pc <= pu for k near 10
                    _ => d.outputs.ss *= k,
                }
            }
            let rescored = evaluate_panel(&scaled, &CostVector::default()).unwrap();
            for (b, a) in baseline.iter().zip(&rescored) {
                prop_assert!((a.te.unwrap() - b.te.unwrap()).abs() < 1e-8);
            }
        }

        #[test]
        fn uniform_cost_rescaling_preserves_cost_scores(p in arb_panel(), k in 0.1f64..10.0) {
            let w = CostVector::default();
            let scaled = CostVector { w_fp: w.w_fp * k, w_ap: w.w_ap * k, w_rf: w.w_rf * k };
            let a = evaluate_panel(&p, &w).unwrap();
            let b = evaluate_panel(&p, &scaled).unwrap();
            for (ra, rb) in a.iter().zip(&b) {
                prop_assert!((ra.ce.unwrap() - rb.ce.unwrap()).abs() < 1e-9);
            }
        }
    }
}
