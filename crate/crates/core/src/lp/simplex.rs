//! Two-phase dense tableau simplex.
//!
//! Phase 1 minimises the sum of artificial variables from an all-slack /
//! all-artificial starting basis; phase 2 continues on the true objective.
//! Both phases pivot by Bland's rule: the entering column is the lowest
//! index with a sufficiently negative reduced cost, the leaving row is the
//! minimum-ratio row, ties broken by the lowest basic column index. Bland's
//! rule makes the method finite under degeneracy and, as a side effect,
//! fully deterministic.

use super::{LinearProgram, LpSolution, LpStatus, Relation, Sense, SolverOptions};

/// Standard-form tableau: `rows` holds the current `B^-1 A | B^-1 b`,
/// `cost` the phase-2 reduced-cost row with the negated objective in its
/// rhs cell, `phase1_cost` the same for the artificial objective.
struct Tableau {
    ncols: usize,
    art_start: usize,
    rows: Vec<Vec<f64>>,
    cost: Vec<f64>,
    phase1_cost: Vec<f64>,
    /// Column basic in each row.
    basis: Vec<usize>,
    /// Original constraint index for each surviving row.
    row_origin: Vec<usize>,
}

impl Tableau {
    fn rhs(&self, r: usize) -> f64 {
        self.rows[r][self.ncols]
    }

    fn pivot(&mut self, r: usize, j: usize) {
        let inv = 1.0 / self.rows[r][j];
        for v in &mut self.rows[r] {
            *v *= inv;
        }
        self.rows[r][j] = 1.0;
        let pivot_row = self.rows[r].clone();
        for (i, row) in self.rows.iter_mut().enumerate() {
            if i == r {
                continue;
            }
            let factor = row[j];
            if factor != 0.0 {
                for (v, p) in row.iter_mut().zip(&pivot_row) {
                    *v -= factor * p;
                }
                row[j] = 0.0;
            }
        }
        for costs in [&mut self.cost, &mut self.phase1_cost] {
            let factor = costs[j];
            if factor != 0.0 {
                for (v, p) in costs.iter_mut().zip(&pivot_row) {
                    *v -= factor * p;
                }
                costs[j] = 0.0;
            }
        }
        self.basis[r] = j;
    }
}

enum PhaseEnd {
    Optimal,
    Unbounded,
    IterationLimit,
}

/// Runs Bland-rule pivots on the selected cost row until no entering column
/// remains. Columns at or past `col_limit` never enter, which keeps the
/// artificials out of phase 2 (and out of phase 1 once they have left).
fn run_phase(
    t: &mut Tableau,
    phase1: bool,
    col_limit: usize,
    options: &SolverOptions,
    iterations: &mut usize,
) -> PhaseEnd {
    loop {
        let costs: &[f64] = if phase1 { &t.phase1_cost } else { &t.cost };
        let entering = (0..col_limit).find(|&j| costs[j] < -options.pivot_tol);
        let Some(j) = entering else {
            return PhaseEnd::Optimal;
        };
        if *iterations >= options.max_iterations {
            return PhaseEnd::IterationLimit;
        }

        let mut leave: Option<(usize, f64)> = None;
        for r in 0..t.rows.len() {
            let a = t.rows[r][j];
            if a <= options.pivot_tol {
                continue;
            }
            let ratio = t.rhs(r) / a;
            leave = match leave {
                None => Some((r, ratio)),
                Some((best_r, best)) => {
                    if ratio < best || (ratio == best && t.basis[r] < t.basis[best_r]) {
                        Some((r, ratio))
                    } else {
                        Some((best_r, best))
                    }
                }
            };
        }
        let Some((r, _)) = leave else {
            return PhaseEnd::Unbounded;
        };
        t.pivot(r, j);
        *iterations += 1;
    }
}

pub(super) fn solve(problem: &LinearProgram, options: &SolverOptions) -> LpSolution {
    let n = problem.num_vars();
    let m = problem.num_constraints();

    // Internally always minimise.
    let sense_sign = match problem.sense {
        Sense::Minimize => 1.0,
        Sense::Maximize => -1.0,
    };

    // Rows are negated where needed so every right-hand side is >= 0; the
    // slack of a `<=` row (or of a negated `>=` row) then enters the basis
    // directly, everything else gets an artificial.
    let num_slacks = problem
        .constraints
        .iter()
        .filter(|c| c.relation != Relation::Eq)
        .count();
    let art_start = n + num_slacks;

    let mut row_sign = vec![1.0; m];
    let mut slack_col = vec![usize::MAX; m];
    let mut standard: Vec<Vec<f64>> = Vec::with_capacity(m);
    let mut rhs = vec![0.0; m];
    {
        let mut next_slack = n;
        for (i, c) in problem.constraints.iter().enumerate() {
            let sign = if c.rhs < 0.0 { -1.0 } else { 1.0 };
            row_sign[i] = sign;
            let mut row = vec![0.0; art_start];
            for (j, &a) in c.coeffs.iter().enumerate() {
                row[j] = sign * a;
            }
            if c.relation != Relation::Eq {
                let dir = if c.relation == Relation::Le {
                    1.0
                } else {
                    -1.0
                };
                row[next_slack] = sign * dir;
                slack_col[i] = next_slack;
                next_slack += 1;
            }
            rhs[i] = sign * c.rhs;
            standard.push(row);
        }
    }

    // Pristine copy of the standard-form columns for the dual back-solve;
    // the tableau below is pivoted in place.
    let original = standard.clone();

    let mut basis = Vec::with_capacity(m);
    let mut artificial_of_row = vec![usize::MAX; m];
    let mut next_art = art_start;
    for (i, row) in standard.iter().enumerate() {
        let sc = slack_col[i];
        if sc != usize::MAX && row[sc] == 1.0 {
            basis.push(sc);
        } else {
            artificial_of_row[i] = next_art;
            basis.push(next_art);
            next_art += 1;
        }
    }
    let total_cols = next_art;

    let mut rows = Vec::with_capacity(m);
    for (i, mut row) in standard.into_iter().enumerate() {
        row.resize(total_cols + 1, 0.0);
        if artificial_of_row[i] != usize::MAX {
            row[artificial_of_row[i]] = 1.0;
        }
        row[total_cols] = rhs[i];
        rows.push(row);
    }

    let mut cost = vec![0.0; total_cols + 1];
    for (c, obj) in cost.iter_mut().zip(&problem.objective) {
        *c = sense_sign * obj;
    }
    let mut phase1_cost = vec![0.0; total_cols + 1];
    for v in &mut phase1_cost[art_start..total_cols] {
        *v = 1.0;
    }

    let mut t = Tableau {
        ncols: total_cols,
        art_start,
        rows,
        cost,
        phase1_cost,
        basis,
        row_origin: (0..m).collect(),
    };

    // Price the artificial objective out of the starting basis.
    for (r, &artificial) in artificial_of_row.iter().enumerate() {
        if artificial != usize::MAX {
            let row = t.rows[r].clone();
            for (v, p) in t.phase1_cost.iter_mut().zip(&row) {
                *v -= p;
            }
        }
    }

    let mut iterations = 0;

    match run_phase(&mut t, true, art_start, options, &mut iterations) {
        PhaseEnd::Optimal => {}
        PhaseEnd::Unbounded => unreachable!("phase-1 objective is bounded below by zero"),
        PhaseEnd::IterationLimit => {
            return extract(
                problem,
                &t,
                &original,
                LpStatus::IterationLimit,
                sense_sign,
                &row_sign,
                iterations,
            )
        }
    }
    let phase1_objective = -t.phase1_cost[t.ncols];
    if phase1_objective > options.feasibility_tol {
        return extract(
            problem,
            &t,
            &original,
            LpStatus::Infeasible,
            sense_sign,
            &row_sign,
            iterations,
        );
    }

    // Drive leftover artificials out of the basis; a row admitting no pivot
    // is linearly dependent on the others and is dropped.
    let mut r = 0;
    while r < t.rows.len() {
        if t.basis[r] < t.art_start {
            r += 1;
            continue;
        }
        let pivot_col = (0..t.art_start).find(|&j| t.rows[r][j].abs() > options.pivot_tol);
        match pivot_col {
            Some(j) => {
                t.pivot(r, j);
                r += 1;
            }
            None => {
                t.rows.remove(r);
                t.basis.remove(r);
                t.row_origin.remove(r);
            }
        }
    }

    let status = match run_phase(&mut t, false, art_start, options, &mut iterations) {
        PhaseEnd::Optimal => LpStatus::Optimal,
        PhaseEnd::Unbounded => LpStatus::Unbounded,
        PhaseEnd::IterationLimit => LpStatus::IterationLimit,
    };
    extract(
        problem, &t, &original, status, sense_sign, &row_sign, iterations,
    )
}

fn extract(
    problem: &LinearProgram,
    t: &Tableau,
    original: &[Vec<f64>],
    status: LpStatus,
    sense_sign: f64,
    row_sign: &[f64],
    iterations: usize,
) -> LpSolution {
    let n = problem.num_vars();
    let mut x = vec![0.0; n];
    for (r, &b) in t.basis.iter().enumerate() {
        if b < n {
            x[b] = t.rhs(r);
        }
    }
    let objective_value: f64 = problem.objective.iter().zip(&x).map(|(c, v)| c * v).sum();

    let dual_values = if status == LpStatus::Optimal {
        solve_duals(problem, t, original, sense_sign, row_sign)
    } else {
        vec![0.0; problem.num_constraints()]
    };

    LpSolution {
        status,
        x,
        objective_value,
        dual_values,
        iterations,
    }
}

/// Recovers the duals at an optimal basis by solving `B^T y = c_B` against
/// the unpivoted standard-form columns, then undoing the row and sense
/// normalisations. Rows dropped as redundant keep a multiplier of zero.
fn solve_duals(
    problem: &LinearProgram,
    t: &Tableau,
    original: &[Vec<f64>],
    sense_sign: f64,
    row_sign: &[f64],
) -> Vec<f64> {
    let n = problem.num_vars();
    let k = t.rows.len();

    // system[i][j] = B^T entry: column basis[i] valued on surviving row j.
    let mut system = vec![vec![0.0; k + 1]; k];
    for (i, &col) in t.basis.iter().enumerate() {
        for (j, &orig_row) in t.row_origin.iter().enumerate() {
            system[i][j] = original[orig_row][col];
        }
        system[i][k] = if col < n {
            sense_sign * problem.objective[col]
        } else {
            0.0
        };
    }

    // Gaussian elimination with partial pivoting; the basis matrix is
    // nonsingular by construction.
    for p in 0..k {
        let pivot_row = (p..k)
            .max_by(|&a, &b| system[a][p].abs().total_cmp(&system[b][p].abs()))
            .unwrap();
        system.swap(p, pivot_row);
        let (upper, lower) = system.split_at_mut(p + 1);
        let pivot_vals = &upper[p];
        let pv = pivot_vals[p];
        for row in lower.iter_mut() {
            let factor = row[p] / pv;
            if factor != 0.0 {
                for (cell, &coeff) in row[p..].iter_mut().zip(&pivot_vals[p..]) {
                    *cell -= factor * coeff;
                }
            }
        }
    }
    let mut y = vec![0.0; k];
    for p in (0..k).rev() {
        let mut acc = system[p][k];
        for j in p + 1..k {
            acc -= system[p][j] * y[j];
        }
        y[p] = acc / system[p][p];
    }

    let mut duals = vec![0.0; problem.num_constraints()];
    for (j, &orig_row) in t.row_origin.iter().enumerate() {
        duals[orig_row] = sense_sign * row_sign[orig_row] * y[j];
    }
    duals
}
