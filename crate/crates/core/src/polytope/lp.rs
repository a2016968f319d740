//! Exact linear programming.
//!
//! Problems are given over free variables as `min c·x` subject to equality
//! and `≥` rows. Equalities are removed by exact substitution, the remaining
//! variables are reduced to a full-column-rank system, and the simplex method
//! runs on the dual (`max h·y`, `Gᵀy = c`, `y ≥ 0`). That tableau has one row
//! per remaining variable, which keeps it small when there are many more
//! inequalities than variables, as is the case for every system built here.

use super::linalg::{affine_solutions, nullspace, rref, solve_unique};
use crate::rational::{dot, Q};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LpOutcome {
    Optimal { value: Q, point: Vec<Q> },
    Unbounded,
    Infeasible,
}

impl LpOutcome {
    pub fn is_feasible(&self) -> bool {
        !matches!(self, LpOutcome::Infeasible)
    }
}

/// `min objective·x` s.t. `a·x = b` for `eqs`, `a·x ≥ b` for `ges`.
pub fn minimize(dim: usize, eqs: &[(Vec<Q>, Q)], ges: &[(Vec<Q>, Q)], objective: &[Q]) -> LpOutcome {
    assert_eq!(objective.len(), dim);
    let Some(param) = affine_solutions(eqs, dim) else {
        return LpOutcome::Infeasible;
    };
    let k = param.dim();
    let mut g_rows = Vec::with_capacity(ges.len());
    let mut h = Vec::with_capacity(ges.len());
    for (a, b) in ges {
        let (ra, rb) = param.pull_back(a, b);
        if ra.iter().all(Q::is_zero) {
            if rb.is_positive() {
                return LpOutcome::Infeasible;
            }
            continue;
        }
        g_rows.push(ra);
        h.push(rb);
    }
    let obj: Vec<Q> = param
        .directions
        .iter()
        .map(|d| dot(objective, d))
        .collect();
    let constant = dot(objective, &param.base);
    match min_free(&g_rows, &h, &obj, k) {
        FreeOutcome::Optimal(t) => {
            let point = param.eval(&t);
            let value = &dot(&obj, &t) + &constant;
            LpOutcome::Optimal { value, point }
        }
        FreeOutcome::Unbounded => LpOutcome::Unbounded,
        FreeOutcome::Infeasible => LpOutcome::Infeasible,
    }
}

/// Exact feasibility with a witness point.
pub fn find_point(dim: usize, eqs: &[(Vec<Q>, Q)], ges: &[(Vec<Q>, Q)]) -> Option<Vec<Q>> {
    match minimize(dim, eqs, ges, &vec![Q::zero(); dim]) {
        LpOutcome::Optimal { point, .. } => Some(point),
        _ => None,
    }
}

enum FreeOutcome {
    Optimal(Vec<Q>),
    Unbounded,
    Infeasible,
}

/// `min obj·s` s.t. `G s ≥ h`, `s ∈ Q^k` free.
fn min_free(g: &[Vec<Q>], h: &[Q], obj: &[Q], k: usize) -> FreeOutcome {
    if k == 0 {
        return if h.iter().all(|x| !x.is_positive()) {
            FreeOutcome::Optimal(Vec::new())
        } else {
            FreeOutcome::Infeasible
        };
    }
    let mut m = g.to_vec();
    let pivots = rref(&mut m, k);
    if pivots.len() < k {
        let null = nullspace(g, k);
        if null.iter().any(|n| !dot(obj, n).is_zero()) {
            // the objective decreases along a line of the feasible set
            let zero = vec![Q::zero(); k];
            return match min_free(g, h, &zero, k) {
                FreeOutcome::Optimal(_) => FreeOutcome::Unbounded,
                other => other,
            };
        }
    }
    let reduced: Vec<Vec<Q>> = g
        .iter()
        .map(|row| pivots.iter().map(|&c| row[c].clone()).collect())
        .collect();
    let reduced_obj: Vec<Q> = pivots.iter().map(|&c| obj[c].clone()).collect();
    match dual_simplex(&reduced, h, &reduced_obj) {
        FreeOutcome::Optimal(s) => {
            let mut full = vec![Q::zero(); k];
            for (v, &c) in s.into_iter().zip(&pivots) {
                full[c] = v;
            }
            FreeOutcome::Optimal(full)
        }
        FreeOutcome::Unbounded => FreeOutcome::Unbounded,
        FreeOutcome::Infeasible => {
            if reduced_obj.iter().all(Q::is_zero) {
                FreeOutcome::Infeasible
            } else {
                let zero = vec![Q::zero(); k];
                match min_free(g, h, &zero, k) {
                    FreeOutcome::Optimal(_) => FreeOutcome::Unbounded,
                    other => other,
                }
            }
        }
    }
}

/// Dense simplex tableau for `max c·y`, `A y = b`, `y ≥ 0`, with an identity
/// block of artificial columns appended after the structural ones.
struct Tableau {
    rows: Vec<Vec<Q>>,
    cost: Vec<Q>,
    basis: Vec<usize>,
    structural: usize,
}

const BLAND_AFTER: usize = 64;

impl Tableau {
    fn width(&self) -> usize {
        self.rows[0].len() - 1
    }

    fn pivot(&mut self, r: usize, e: usize) {
        let inv = self.rows[r][e].recip();
        if !inv.is_one() {
            for x in self.rows[r].iter_mut() {
                if !x.is_zero() {
                    *x = &*x * &inv;
                }
            }
        }
        let nz: Vec<usize> = (0..self.rows[r].len())
            .filter(|&j| !self.rows[r][j].is_zero())
            .collect();
        let prow = self.rows[r].clone();
        for (i, row) in self.rows.iter_mut().enumerate() {
            if i == r || row[e].is_zero() {
                continue;
            }
            let f = row[e].clone();
            for &j in &nz {
                row[j] -= &(&f * &prow[j]);
            }
        }
        if !self.cost[e].is_zero() {
            let f = self.cost[e].clone();
            for &j in &nz {
                self.cost[j] -= &(&f * &prow[j]);
            }
        }
        self.basis[r] = e;
    }

    /// Runs primal simplex on the current reduced-cost row. Columns at or past
    /// `limit` never enter. Returns false when unbounded.
    fn run(&mut self, limit: usize) -> bool {
        let rhs = self.width();
        let mut degenerate = 0usize;
        loop {
            let entering = if degenerate >= BLAND_AFTER {
                (0..limit).find(|&j| self.cost[j].is_positive())
            } else {
                let mut best: Option<usize> = None;
                for j in 0..limit {
                    if self.cost[j].is_positive()
                        && best.is_none_or(|b| self.cost[j] > self.cost[b])
                    {
                        best = Some(j);
                    }
                }
                best
            };
            let Some(e) = entering else {
                return true;
            };
            let mut leave: Option<(usize, Q)> = None;
            for (i, row) in self.rows.iter().enumerate() {
                if !row[e].is_positive() {
                    continue;
                }
                let ratio = &row[rhs] / &row[e];
                let better = match &leave {
                    None => true,
                    Some((li, lr)) => {
                        ratio < *lr || (ratio == *lr && self.basis[i] < self.basis[*li])
                    }
                };
                if better {
                    leave = Some((i, ratio));
                }
            }
            let Some((r, ratio)) = leave else {
                return false;
            };
            if ratio.is_zero() {
                degenerate += 1;
            } else {
                degenerate = 0;
            }
            self.pivot(r, e);
        }
    }
}

/// Simplex on the dual of `min obj·s`, `G s ≥ h`, with `G` of full column
/// rank. Returns the primal optimum recovered from the optimal basis.
fn dual_simplex(g: &[Vec<Q>], h: &[Q], obj: &[Q]) -> FreeOutcome {
    let r = obj.len();
    let m = g.len();
    if m == 0 {
        // full column rank with no rows only happens for r = 0
        return FreeOutcome::Optimal(Vec::new());
    }
    // rows: one per primal variable; columns: y_1..y_m, artificials, rhs
    let mut rows = Vec::with_capacity(r);
    for i in 0..r {
        let negate = obj[i].is_negative();
        let mut row = Vec::with_capacity(m + r + 1);
        for grow in g {
            row.push(if negate { -&grow[i] } else { grow[i].clone() });
        }
        for a in 0..r {
            row.push(if a == i { Q::one() } else { Q::zero() });
        }
        row.push(obj[i].abs());
        rows.push(row);
    }
    // phase 1: maximize -sum(artificials)
    let mut cost = vec![Q::zero(); m + r + 1];
    for row in &rows {
        for j in 0..m {
            if !row[j].is_zero() {
                cost[j] += &row[j];
            }
        }
        cost[m + r] += &row[m + r];
    }
    let mut t = Tableau {
        rows,
        cost,
        basis: (m..m + r).collect(),
        structural: m,
    };
    t.run(m);
    if !t.cost[m + r].is_zero() {
        return FreeOutcome::Infeasible;
    }
    // drive remaining (zero-level) artificials out of the basis
    for i in 0..r {
        if t.basis[i] >= t.structural {
            let Some(j) = (0..m).find(|&j| !t.rows[i][j].is_zero()) else {
                unreachable!("dual system has full row rank");
            };
            t.pivot(i, j);
        }
    }
    // phase 2 reduced costs: c_j - c_B B^{-1} A_j
    let mut cost = vec![Q::zero(); m + r + 1];
    cost[..m].clone_from_slice(h);
    for (i, row) in t.rows.iter().enumerate() {
        let cb = &h[t.basis[i]];
        if cb.is_zero() {
            continue;
        }
        for (j, x) in row.iter().enumerate().take(m) {
            if !x.is_zero() {
                cost[j] -= &(cb * x);
            }
        }
    }
    t.cost = cost;
    if !t.run(m) {
        return FreeOutcome::Infeasible;
    }
    // complementary slackness: basic dual variables mark tight primal rows
    let tight: Vec<(Vec<Q>, Q)> = t
        .basis
        .iter()
        .map(|&j| (g[j].clone(), h[j].clone()))
        .collect();
    let s = solve_unique(&tight, r).expect("optimal basis is nonsingular");
    FreeOutcome::Optimal(s)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(n: i64) -> Q {
        Q::from_int(n)
    }

    fn row(a: &[i64], b: i64) -> (Vec<Q>, Q) {
        (a.iter().map(|&x| q(x)).collect(), q(b))
    }

    #[test]
    fn box_minimum() {
        // 0 <= x, y <= 1, min -x - y
        let ges = vec![row(&[1, 0], 0), row(&[0, 1], 0), row(&[-1, 0], -1), row(&[0, -1], -1)];
        match minimize(2, &[], &ges, &[q(-1), q(-1)]) {
            LpOutcome::Optimal { value, point } => {
                assert_eq!(value, q(-2));
                assert_eq!(point, vec![q(1), q(1)]);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn infeasible_and_unbounded() {
        let ges = vec![row(&[1], 1), row(&[-1], 0)];
        assert_eq!(minimize(1, &[], &ges, &[q(1)]), LpOutcome::Infeasible);
        let ges = vec![row(&[1], 1)];
        assert_eq!(minimize(1, &[], &ges, &[q(-1)]), LpOutcome::Unbounded);
        // unbounded along a line that no inequality touches
        let ges = vec![row(&[1, 0], 0)];
        assert_eq!(minimize(2, &[], &ges, &[q(0), q(1)]), LpOutcome::Unbounded);
    }

    #[test]
    fn equalities_substituted() {
        // x + y + z = 1, all >= 0, min x - z
        let eqs = vec![row(&[1, 1, 1], 1)];
        let ges = vec![row(&[1, 0, 0], 0), row(&[0, 1, 0], 0), row(&[0, 0, 1], 0)];
        match minimize(3, &eqs, &ges, &[q(1), q(0), q(-1)]) {
            LpOutcome::Optimal { value, point } => {
                assert_eq!(value, q(-1));
                assert_eq!(point, vec![q(0), q(0), q(1)]);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn degenerate_cone() {
        // cone x >= 0, y >= 0, x + y >= 0 (redundant), min x + 2y -> 0
        let ges = vec![row(&[1, 0], 0), row(&[0, 1], 0), row(&[1, 1], 0)];
        match minimize(2, &[], &ges, &[q(1), q(2)]) {
            LpOutcome::Optimal { value, .. } => assert_eq!(value, q(0)),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn witness_satisfies_rows() {
        let ges = vec![row(&[1, 2], 3), row(&[3, -1], 1), row(&[-1, -1], -10)];
        let x = find_point(2, &[], &ges).unwrap();
        for (a, b) in &ges {
            assert!(dot(a, &x) >= *b);
        }
    }
}
