//! Fourier–Motzkin projection with history-based pruning and exact LP
//! redundancy removal.

use std::collections::HashMap;

use super::bitset::BitSet;
use super::linalg::rref;
use super::{remove_redundant, Budget, HPolyhedron, Limits, PolyError, Row};
use crate::rational::{make_primitive, Q};

#[derive(Clone)]
struct FmRow {
    coeffs: Vec<Q>,
    rhs: Q,
    history: BitSet,
}

impl FmRow {
    fn normalize(&mut self) {
        let mut v = std::mem::take(&mut self.coeffs);
        v.push(self.rhs.clone());
        make_primitive(&mut v);
        self.rhs = v.pop().unwrap();
        self.coeffs = v;
    }
}

/// Projects `h` onto the coordinates not listed in `drop`, keeping their
/// original relative order. The result is in canonical form.
pub fn eliminate(h: &HPolyhedron, drop: &[usize], limits: &Limits) -> Result<HPolyhedron, PolyError> {
    let n = h.dim();
    let mut is_drop = vec![false; n];
    for &d in drop {
        if d >= n {
            return Err(PolyError::BadIndex(d));
        }
        is_drop[d] = true;
    }
    let kept: Vec<usize> = (0..n).filter(|&i| !is_drop[i]).collect();
    let dropped: Vec<usize> = (0..n).filter(|&i| is_drop[i]).collect();
    let nd = dropped.len();
    // working column order: dropped coordinates first, then kept ones
    let perm: Vec<usize> = dropped.iter().chain(&kept).copied().collect();
    let permute = |r: &Row| -> Vec<Q> { perm.iter().map(|&c| r.coeffs[c].clone()).collect() };
    let budget = Budget::new(limits);

    let mut eqm: Vec<Vec<Q>> = h
        .equalities()
        .iter()
        .map(|r| {
            let mut v = permute(r);
            v.push(r.rhs.clone());
            v
        })
        .collect();
    let pivots = rref(&mut eqm, n);
    if eqm.len() > pivots.len() {
        return Ok(infeasible(kept.len()));
    }
    let mut subst: Vec<(usize, Vec<Q>)> = Vec::new();
    let mut kept_eqs: Vec<(Vec<Q>, Q)> = Vec::new();
    for (mut row, &p) in eqm.into_iter().zip(&pivots) {
        if p < nd {
            subst.push((p, row));
        } else {
            let rhs = row.pop().unwrap();
            kept_eqs.push((row, rhs));
        }
    }

    let m0 = h.inequalities().len();
    let mut rows: Vec<FmRow> = Vec::with_capacity(m0);
    for (i, r) in h.inequalities().iter().enumerate() {
        let mut coeffs = permute(r);
        let mut rhs = r.rhs.clone();
        for (p, s) in &subst {
            if coeffs[*p].is_zero() {
                continue;
            }
            let f = coeffs[*p].clone();
            for (x, y) in coeffs.iter_mut().zip(s.iter()) {
                if !y.is_zero() {
                    *x -= &(&f * y);
                }
            }
            rhs -= &(&f * &s[n]);
        }
        let mut row = FmRow {
            coeffs,
            rhs,
            history: BitSet::singleton(m0, i),
        };
        row.normalize();
        rows.push(row);
    }
    let Some(mut rows) = tidy(rows) else {
        return Ok(infeasible(kept.len()));
    };

    let mut remaining: Vec<usize> = (0..nd)
        .filter(|&c| !subst.iter().any(|(p, _)| *p == c))
        .collect();
    let total = remaining.len();
    let mut eliminated = 0usize;
    while !remaining.is_empty() {
        budget.check_time("fourier-motzkin", eliminated, rows.len())?;
        // greedy choice: fewest new rows
        let (idx, &var) = remaining
            .iter()
            .enumerate()
            .min_by_key(|&(_, &c)| {
                let p = rows.iter().filter(|r| r.coeffs[c].is_positive()).count();
                let q = rows.iter().filter(|r| r.coeffs[c].is_negative()).count();
                (p * q) as i64 - (p + q) as i64
            })
            .unwrap();
        remaining.remove(idx);
        eliminated += 1;
        let (mut zero, mut pos, mut neg) = (Vec::new(), Vec::new(), Vec::new());
        for r in rows {
            match r.coeffs[var].signum() {
                0 => zero.push(r),
                1 => pos.push(r),
                _ => neg.push(r),
            }
        }
        let mut next = zero;
        for p in &pos {
            for q in &neg {
                let history = p.history.union(&q.history);
                if history.count() > eliminated + 1 {
                    continue;
                }
                let a = -&q.coeffs[var];
                let b = p.coeffs[var].clone();
                let coeffs: Vec<Q> = p
                    .coeffs
                    .iter()
                    .zip(&q.coeffs)
                    .map(|(x, y)| &(&a * x) + &(&b * y))
                    .collect();
                let rhs = &(&a * &p.rhs) + &(&b * &q.rhs);
                let mut row = FmRow {
                    coeffs,
                    rhs,
                    history,
                };
                row.normalize();
                next.push(row);
            }
            budget.check_rows("fourier-motzkin", next.len())?;
        }
        let Some(mut next) = tidy(next) else {
            return Ok(infeasible(kept.len()));
        };
        if next.len() > limits.redundancy_threshold {
            next = lp_prune(next, &kept_eqs, n);
        }
        log::debug!(
            "fourier-motzkin: eliminated {eliminated}/{total}, {} rows",
            next.len()
        );
        budget.progress("fourier-motzkin", eliminated, total, next.len());
        rows = next;
    }

    let mut out = HPolyhedron::new(kept.len());
    for (c, r) in &kept_eqs {
        out.add_equality(c[nd..].to_vec(), r.clone())?;
    }
    for r in rows {
        out.add_inequality(r.coeffs[nd..].to_vec(), r.rhs)?;
    }
    Ok(out.canonical())
}

fn infeasible(dim: usize) -> HPolyhedron {
    let mut h = HPolyhedron::new(dim);
    h.add_inequality(vec![Q::zero(); dim], Q::one()).unwrap();
    h
}

/// Drops trivially true rows, keeps the tightest rhs among rows with equal
/// coefficients (preferring the smaller history on ties), and reports
/// infeasibility through `None`.
fn tidy(rows: Vec<FmRow>) -> Option<Vec<FmRow>> {
    let mut best: HashMap<Vec<Q>, FmRow> = HashMap::new();
    let mut order: Vec<Vec<Q>> = Vec::new();
    for r in rows {
        if r.coeffs.iter().all(Q::is_zero) {
            if r.rhs.is_positive() {
                return None;
            }
            continue;
        }
        match best.get_mut(&r.coeffs) {
            Some(b) => {
                if r.rhs > b.rhs || (r.rhs == b.rhs && r.history.count() < b.history.count()) {
                    *b = r;
                }
            }
            None => {
                order.push(r.coeffs.clone());
                best.insert(r.coeffs.clone(), r);
            }
        }
    }
    Some(order.into_iter().map(|c| best.remove(&c).unwrap()).collect())
}

/// Exact LP redundancy removal restricted to the columns still in use.
fn lp_prune(rows: Vec<FmRow>, eqs: &[(Vec<Q>, Q)], n: usize) -> Vec<FmRow> {
    let active: Vec<usize> = (0..n)
        .filter(|&c| {
            rows.iter().any(|r| !r.coeffs[c].is_zero()) || eqs.iter().any(|(a, _)| !a[c].is_zero())
        })
        .collect();
    let compress = |v: &[Q]| -> Vec<Q> { active.iter().map(|&c| v[c].clone()).collect() };
    let ceqs: Vec<(Vec<Q>, Q)> = eqs.iter().map(|(a, b)| (compress(a), b.clone())).collect();
    let compact: Vec<Row> = rows
        .iter()
        .map(|r| Row::new(compress(&r.coeffs), r.rhs.clone()))
        .collect();
    let kept = remove_redundant(active.len(), &ceqs, compact.clone());
    let mut keep_set: std::collections::HashSet<Row> = kept.into_iter().collect();
    rows.into_iter()
        .zip(compact)
        .filter_map(|(r, c)| keep_set.remove(&c).then_some(r))
        .collect()
}
