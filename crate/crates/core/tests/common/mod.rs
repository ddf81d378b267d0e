//! Exact reference solver used to cross-check the floating-point simplex.
//!
//! The reference path never pivots: it converts the problem to standard
//! form over `Ratio<i128>`, enumerates every basis, and keeps the best
//! feasible vertex. Unboundedness is decided separately on the recession
//! cone {Ad = 0, Σd = 1, d ≥ 0}, which is compact, so its own vertex
//! enumeration is complete. Requires integer problem data and a
//! full-row-rank standard form; generators must guarantee both.

use itertools::Itertools;
use num_rational::Ratio;
use scifront_core::lp::{LinearProgram, Relation, Sense};

pub type Q = Ratio<i128>;

pub fn q(n: i64) -> Q {
    Ratio::from_integer(i128::from(n))
}

pub fn to_f64(value: Q) -> f64 {
    *value.numer() as f64 / *value.denom() as f64
}

fn to_q(value: f64) -> Q {
    assert!(
        value.fract() == 0.0 && value.abs() < 1e15,
        "reference solver requires integer data, got {value}"
    );
    Ratio::from_integer(value as i128)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ReferenceOutcome {
    Optimal(Q),
    Infeasible,
    Unbounded,
}

/// Standard form min c·x s.t. Ax = b, x ≥ 0, as columns plus costs and
/// rhs; maximization is folded into the costs.
fn standard_form(lp: &LinearProgram) -> (Vec<Vec<Q>>, Vec<Q>, Vec<Q>) {
    let n = lp.num_vars();
    let m = lp.num_constraints();
    let sign = match lp.sense {
        Sense::Minimize => q(1),
        Sense::Maximize => q(-1),
    };
    let mut columns: Vec<Vec<Q>> = (0..n)
        .map(|j| lp.constraints.iter().map(|c| to_q(c.coeffs[j])).collect())
        .collect();
    let mut costs: Vec<Q> = lp.objective.iter().map(|&c| sign * to_q(c)).collect();
    for (i, constraint) in lp.constraints.iter().enumerate() {
        let slack = match constraint.relation {
            Relation::Le => q(1),
            Relation::Ge => q(-1),
            Relation::Eq => continue,
        };
        let mut column = vec![q(0); m];
        column[i] = slack;
        columns.push(column);
        costs.push(q(0));
    }
    let rhs = lp.constraints.iter().map(|c| to_q(c.rhs)).collect();
    (columns, costs, rhs)
}

/// Gaussian elimination with exact pivots; `None` when singular.
fn solve_square(matrix: &[Vec<Q>], rhs: &[Q]) -> Option<Vec<Q>> {
    let n = rhs.len();
    let mut a: Vec<Vec<Q>> = matrix
        .iter()
        .zip(rhs)
        .map(|(row, &b)| {
            let mut augmented = row.clone();
            augmented.push(b);
            augmented
        })
        .collect();
    for col in 0..n {
        let pivot = (col..n).find(|&r| a[r][col] != q(0))?;
        a.swap(col, pivot);
        let scale = a[col][col];
        for cell in &mut a[col][col..] {
            *cell /= scale;
        }
        let pivot_row = a[col].clone();
        for (r, row) in a.iter_mut().enumerate() {
            if r != col && row[col] != q(0) {
                let factor = row[col];
                for (cell, coeff) in row[col..].iter_mut().zip(&pivot_row[col..]) {
                    *cell -= factor * *coeff;
                }
            }
        }
    }
    Some(a.iter().map(|row| row[n]).collect())
}

/// Minimum of costs·x over all basic feasible solutions; `None` when no
/// basis is feasible.
fn best_vertex(columns: &[Vec<Q>], costs: &[Q], rhs: &[Q]) -> Option<Q> {
    let m = rhs.len();
    let n = columns.len();
    let mut best: Option<Q> = None;
    for basis in (0..n).combinations(m) {
        let matrix: Vec<Vec<Q>> = (0..m)
            .map(|r| basis.iter().map(|&j| columns[j][r]).collect())
            .collect();
        let Some(values) = solve_square(&matrix, rhs) else {
            continue;
        };
        if values.iter().any(|v| *v < q(0)) {
            continue;
        }
        let objective = basis
            .iter()
            .zip(&values)
            .fold(q(0), |acc, (&j, &v)| acc + costs[j] * v);
        best = Some(match best {
            None => objective,
            Some(current) => current.min(objective),
        });
    }
    best
}

/// True when some direction d ≥ 0 with Ad = 0, Σd = 1 improves the
/// objective without limit.
fn has_improving_ray(columns: &[Vec<Q>], costs: &[Q], m: usize) -> bool {
    let ray_columns: Vec<Vec<Q>> = columns
        .iter()
        .map(|col| {
            let mut extended = col.clone();
            extended.push(q(1));
            extended
        })
        .collect();
    let mut rhs = vec![q(0); m];
    rhs.push(q(1));
    matches!(best_vertex(&ray_columns, costs, &rhs), Some(v) if v < q(0))
}

/// Full reference solve of an integer-data problem whose standard form
/// has full row rank.
pub fn solve_reference(lp: &LinearProgram) -> ReferenceOutcome {
    let (columns, costs, rhs) = standard_form(lp);
    let sign = match lp.sense {
        Sense::Minimize => q(1),
        Sense::Maximize => q(-1),
    };
    match best_vertex(&columns, &costs, &rhs) {
        None => ReferenceOutcome::Infeasible,
        Some(best) => {
            if has_improving_ray(&columns, &costs, lp.num_constraints()) {
                ReferenceOutcome::Unbounded
            } else {
                ReferenceOutcome::Optimal(sign * best)
            }
        }
    }
}

/// Reference objective for a problem known to be feasible and bounded;
/// skips the recession check.
pub fn reference_optimum(lp: &LinearProgram) -> Q {
    let (columns, costs, rhs) = standard_form(lp);
    let sign = match lp.sense {
        Sense::Minimize => q(1),
        Sense::Maximize => q(-1),
    };
    sign * best_vertex(&columns, &costs, &rhs).expect("problem is feasible")
}

/// Rank of the standard-form matrix, used by generators to discard
/// instances the enumeration cannot decide.
pub fn standard_form_rank(lp: &LinearProgram) -> usize {
    let (columns, _, _) = standard_form(lp);
    let m = lp.num_constraints();
    let mut rows: Vec<Vec<Q>> = (0..m)
        .map(|r| columns.iter().map(|col| col[r]).collect())
        .collect();
    let width = columns.len();
    let mut rank = 0;
    for col in 0..width {
        let Some(pivot) = (rank..m).find(|&r| rows[r][col] != q(0)) else {
            continue;
        };
        rows.swap(rank, pivot);
        let scale = rows[rank][col];
        for cell in &mut rows[rank][col..] {
            *cell /= scale;
        }
        let pivot_row = rows[rank].clone();
        for (r, row) in rows.iter_mut().enumerate() {
            if r != rank && row[col] != q(0) {
                let factor = row[col];
                for (cell, coeff) in row[col..].iter_mut().zip(&pivot_row[col..]) {
                    *cell -= factor * *coeff;
                }
            }
        }
        rank += 1;
        if rank == m {
            break;
        }
    }
    rank
}
