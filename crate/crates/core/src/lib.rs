//! Measurement toolkit for the research efficiency of university units.
//!
//! A unit is one university observed in one disciplinary area. The library
//! covers the whole path from raw rosters and publication records to ranked
//! efficiency tables:
//!
//! - [`lp`]: a deterministic two-phase simplex solver for small dense LPs;
//! - [`dea`]: input-oriented, constant-returns-to-scale technical and cost
//!   efficiency built on it;
//! - [`bibliometrics`]: name-based attribution of publications to units and
//!   the output indicators fed into the frontier models;
//! - [`report`]: rankings, tertile clustering, descriptive statistics and
//!   rank-variation summaries;
//! - [`pipeline`]: file ingestion, orchestration and deterministic output
//!   rendering shared by the command-line frontend.

pub mod bibliometrics;
pub mod dea;
pub mod lp;
pub mod pipeline;
pub mod report;

pub use dea::{
    evaluate_panel, CostVector, Dmu, DmuPanel, EfficiencyRecord, InputBundle, OutputBundle,
    UnitStatus,
};
pub use lp::{solve_lp, LinearProgram, LpSolution, LpStatus, SolverOptions};
