//! Dense linear-programming solver (two-phase primal simplex).
//!
//! Problems are stated over variables with fixed lower bounds of zero and
//! arbitrary `<=` / `>=` / `=` constraints. The solver is deterministic:
//! Bland's rule fixes every pivot choice, so identical inputs produce
//! bit-identical solutions.

mod simplex;

use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    Minimize,
    Maximize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Relation {
    Le,
    Ge,
    Eq,
}

/// One linear constraint `coeffs . x  (<= | >= | =)  rhs`.
#[derive(Debug, Clone)]
pub struct Constraint {
    pub coeffs: Vec<f64>,
    pub relation: Relation,
    pub rhs: f64,
}

/// A linear program over `n` variables, all bounded below by zero.
#[derive(Debug, Clone)]
pub struct LinearProgram {
    pub sense: Sense,
    pub objective: Vec<f64>,
    pub constraints: Vec<Constraint>,
}

impl LinearProgram {
    pub fn num_vars(&self) -> usize {
        self.objective.len()
    }

    pub fn num_constraints(&self) -> usize {
        self.constraints.len()
    }

    /// Checks the structural invariants: at least one variable and one
    /// constraint, consistent row lengths, all values finite.
    pub fn validate(&self) -> Result<(), LpError> {
        let n = self.num_vars();
        if n == 0 {
            return Err(LpError::MalformedProblem("objective is empty".into()));
        }
        if self.constraints.is_empty() {
            return Err(LpError::MalformedProblem("no constraints".into()));
        }
        if let Some(c) = self.objective.iter().find(|c| !c.is_finite()) {
            return Err(LpError::MalformedProblem(format!(
                "non-finite objective coefficient {c}"
            )));
        }
        for (i, row) in self.constraints.iter().enumerate() {
            if row.coeffs.len() != n {
                return Err(LpError::MalformedProblem(format!(
                    "constraint {i} has {} coefficients, expected {n}",
                    row.coeffs.len()
                )));
            }
            if row.coeffs.iter().any(|c| !c.is_finite()) || !row.rhs.is_finite() {
                return Err(LpError::MalformedProblem(format!(
                    "constraint {i} contains a non-finite value"
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy)]
pub struct SolverOptions {
    /// Constraint/bound violations up to this are treated as feasible.
    pub feasibility_tol: f64,
    /// Entries smaller than this never serve as pivots.
    pub pivot_tol: f64,
    /// Primal-dual gap accepted by [`verify_solution`].
    pub duality_gap_tol: f64,
    /// Pivot cap across both phases; hitting it yields `IterationLimit`.
    pub max_iterations: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            feasibility_tol: 1e-7,
            pivot_tol: 1e-9,
            duality_gap_tol: 1e-7,
            max_iterations: 10_000,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
    IterationLimit,
}

/// Solver output. `x` and the duals are meaningful only when `status` is
/// `Optimal`; otherwise they hold the last iterate for diagnostics.
#[derive(Debug, Clone)]
pub struct LpSolution {
    pub status: LpStatus,
    pub x: Vec<f64>,
    pub objective_value: f64,
    /// One multiplier per constraint, oriented so that the dual objective
    /// `rhs . dual_values` equals the primal optimum at an optimal point.
    pub dual_values: Vec<f64>,
    pub iterations: usize,
}

#[derive(Debug, Error)]
pub enum LpError {
    #[error("malformed problem: {0}")]
    MalformedProblem(String),
}

/// Post-solve diagnostics from [`verify_solution`].
#[derive(Debug, Clone, Copy)]
pub struct FeasibilityReport {
    pub max_constraint_violation: f64,
    pub max_bound_violation: f64,
    pub duality_gap: f64,
}

impl FeasibilityReport {
    pub fn within(&self, tol: f64) -> bool {
        self.max_constraint_violation <= tol
            && self.max_bound_violation <= tol
            && self.duality_gap <= tol
    }
}

/// Solves the program with the two-phase simplex method.
///
/// Termination is reported through [`LpSolution::status`]; only structural
/// defects (dimension mismatches, non-finite data) are errors.
pub fn solve_lp(problem: &LinearProgram, options: &SolverOptions) -> Result<LpSolution, LpError> {
    problem.validate()?;
    Ok(simplex::solve(problem, options))
}

/// Measures how well `solution` satisfies `problem`: worst constraint
/// violation, worst bound violation, and the primal-dual objective gap.
pub fn verify_solution(problem: &LinearProgram, solution: &LpSolution) -> FeasibilityReport {
    let mut max_constraint_violation: f64 = 0.0;
    for row in &problem.constraints {
        let lhs: f64 = row.coeffs.iter().zip(&solution.x).map(|(c, x)| c * x).sum();
        let violation = match row.relation {
            Relation::Le => (lhs - row.rhs).max(0.0),
            Relation::Ge => (row.rhs - lhs).max(0.0),
            Relation::Eq => (lhs - row.rhs).abs(),
        };
        max_constraint_violation = max_constraint_violation.max(violation);
    }

    let max_bound_violation = solution
        .x
        .iter()
        .map(|x| (-x).max(0.0))
        .fold(0.0_f64, f64::max);

    let dual_objective: f64 = problem
        .constraints
        .iter()
        .zip(&solution.dual_values)
        .map(|(row, y)| row.rhs * y)
        .sum();
    let primal_objective: f64 = problem
        .objective
        .iter()
        .zip(&solution.x)
        .map(|(c, x)| c * x)
        .sum();

    FeasibilityReport {
        max_constraint_violation,
        max_bound_violation,
        duality_gap: (primal_objective - dual_objective).abs(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lp(
        sense: Sense,
        objective: Vec<f64>,
        rows: Vec<(Vec<f64>, Relation, f64)>,
    ) -> LinearProgram {
        LinearProgram {
            sense,
            objective,
            constraints: rows
                .into_iter()
                .map(|(coeffs, relation, rhs)| Constraint {
                    coeffs,
                    relation,
                    rhs,
                })
                .collect(),
        }
    }

    fn solve(problem: &LinearProgram) -> LpSolution {
        solve_lp(problem, &SolverOptions::default()).unwrap()
    }

    #[test]
    fn single_variable_bound() {
        let p = lp(
            Sense::Minimize,
            vec![1.0],
            vec![(vec![1.0], Relation::Ge, 3.0)],
        );
        let s = solve(&p);
        assert_eq!(s.status, LpStatus::Optimal);
        assert!((s.x[0] - 3.0).abs() < 1e-9);
        assert!((s.objective_value - 3.0).abs() < 1e-9);
    }

    #[test]
    fn contradictory_constraints_are_infeasible() {
        let p = lp(
            Sense::Minimize,
            vec![0.0],
            vec![(vec![1.0], Relation::Le, -1.0)],
        );
        assert_eq!(solve(&p).status, LpStatus::Infeasible);
    }

    #[test]
    fn two_variable_maximum() {
        // Vertices (0,0), (3,0), (3,1), (0,4); the maximum of x1+x2 is 4.
        let p = lp(
            Sense::Maximize,
            vec![1.0, 1.0],
            vec![
                (vec![1.0, 1.0], Relation::Le, 4.0),
                (vec![1.0, 0.0], Relation::Le, 3.0),
            ],
        );
        let s = solve(&p);
        assert_eq!(s.status, LpStatus::Optimal);
        assert!((s.objective_value - 4.0).abs() < 1e-9);
        let report = verify_solution(&p, &s);
        assert!(report.within(1e-7), "{report:?}");
    }

    #[test]
    fn two_variable_maximum_duality_gap() {
        // Hand dual: min 4*y1 + 3*y2 s.t. y1 + y2 >= 1, y1 >= 1 gives y = (1, 0),
        // dual objective 4 matching the primal.
        let p = lp(
            Sense::Maximize,
            vec![1.0, 1.0],
            vec![
                (vec![1.0, 1.0], Relation::Le, 4.0),
                (vec![1.0, 0.0], Relation::Le, 3.0),
            ],
        );
        let s = solve(&p);
        let report = verify_solution(&p, &s);
        assert!(report.duality_gap <= 1e-7, "gap {}", report.duality_gap);
    }

    #[test]
    fn reports_constructed_violation() {
        let p = lp(
            Sense::Maximize,
            vec![1.0, 1.0],
            vec![
                (vec![1.0, 1.0], Relation::Le, 4.0),
                (vec![1.0, 0.0], Relation::Le, 3.0),
            ],
        );
        let mut s = solve(&p);
        s.x[0] += 1.0; // breaks the tight x1+x2 <= 4 row by ~1
        let report = verify_solution(&p, &s);
        assert!((report.max_constraint_violation - 1.0).abs() < 1e-6);
    }

    #[test]
    fn unbounded_maximum() {
        let p = lp(
            Sense::Maximize,
            vec![1.0],
            vec![(vec![-1.0], Relation::Le, 1.0)],
        );
        assert_eq!(solve(&p).status, LpStatus::Unbounded);
    }

    #[test]
    fn equality_constraint() {
        let p = lp(
            Sense::Minimize,
            vec![1.0, 1.0],
            vec![(vec![1.0, 1.0], Relation::Eq, 2.0)],
        );
        let s = solve(&p);
        assert_eq!(s.status, LpStatus::Optimal);
        assert!((s.objective_value - 2.0).abs() < 1e-9);
        assert!(verify_solution(&p, &s).within(1e-7));
    }

    #[test]
    fn degenerate_and_redundant_rows() {
        // Second row duplicates the first; the solver must drop the
        // redundant equality instead of failing.
        let p = lp(
            Sense::Minimize,
            vec![1.0, 2.0],
            vec![
                (vec![1.0, 1.0], Relation::Eq, 2.0),
                (vec![1.0, 1.0], Relation::Eq, 2.0),
            ],
        );
        let s = solve(&p);
        assert_eq!(s.status, LpStatus::Optimal);
        assert!((s.objective_value - 2.0).abs() < 1e-9);
        assert!(verify_solution(&p, &s).within(1e-7));
    }

    #[test]
    fn inconsistent_duplicate_rows_are_infeasible() {
        let p = lp(
            Sense::Minimize,
            vec![1.0, 2.0],
            vec![
                (vec![1.0, 1.0], Relation::Eq, 2.0),
                (vec![1.0, 1.0], Relation::Eq, 3.0),
            ],
        );
        assert_eq!(solve(&p).status, LpStatus::Infeasible);
    }

    #[test]
    fn iteration_limit_is_a_status_not_an_error() {
        let p = lp(
            Sense::Maximize,
            vec![1.0, 1.0],
            vec![
                (vec![1.0, 1.0], Relation::Le, 4.0),
                (vec![1.0, 0.0], Relation::Le, 3.0),
            ],
        );
        let options = SolverOptions {
            max_iterations: 0,
            ..SolverOptions::default()
        };
        let s = solve_lp(&p, &options).unwrap();
        assert_eq!(s.status, LpStatus::IterationLimit);
    }

    #[test]
    fn malformed_dimension_mismatch() {
        let p = lp(
            Sense::Minimize,
            vec![1.0, 1.0],
            vec![(vec![1.0], Relation::Le, 1.0)],
        );
        assert!(matches!(
            solve_lp(&p, &SolverOptions::default()),
            Err(LpError::MalformedProblem(_))
        ));
    }

    #[test]
    fn malformed_non_finite() {
        let p = lp(
            Sense::Minimize,
            vec![f64::NAN],
            vec![(vec![1.0], Relation::Ge, 0.0)],
        );
        assert!(matches!(
            solve_lp(&p, &SolverOptions::default()),
            Err(LpError::MalformedProblem(_))
        ));
    }

    #[test]
    fn solves_are_bit_identical() {
        let p = lp(
            Sense::Maximize,
            vec![3.0, 5.0, 4.0],
            vec![
                (vec![2.0, 3.0, 0.0], Relation::Le, 8.0),
                (vec![0.0, 2.0, 5.0], Relation::Le, 10.0),
                (vec![3.0, 2.0, 4.0], Relation::Le, 15.0),
            ],
        );
        let a = solve(&p);
        let b = solve(&p);
        assert_eq!(a.x, b.x);
        assert_eq!(a.objective_value.to_bits(), b.objective_value.to_bits());
    }

    #[test]
    fn row_scaling_preserves_objective() {
        let base = lp(
            Sense::Maximize,
            vec![3.0, 5.0, 4.0],
            vec![
                (vec![2.0, 3.0, 0.0], Relation::Le, 8.0),
                (vec![0.0, 2.0, 5.0], Relation::Le, 10.0),
                (vec![3.0, 2.0, 4.0], Relation::Le, 15.0),
            ],
        );
        let reference = solve(&base).objective_value;
        for k in [0.25, 3.0, 1000.0] {
            let mut scaled = base.clone();
            for c in &mut scaled.constraints[1].coeffs {
                *c *= k;
            }
            scaled.constraints[1].rhs *= k;
            let s = solve(&scaled);
            assert_eq!(s.status, LpStatus::Optimal);
            assert!(
                (s.objective_value - reference).abs() <= 1e-8,
                "k={k}: {} vs {reference}",
                s.objective_value
            );
        }
    }
}
