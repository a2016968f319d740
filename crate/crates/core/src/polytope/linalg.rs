//! Dense exact linear algebra over [`Q`].

use crate::rational::{make_primitive, Q};

/// Reduces `m` to reduced row echelon form in place, pivoting only within the
/// first `pivot_cols` columns (trailing columns, e.g. a right-hand side, are
/// carried along). Zero rows are removed. Returns the pivot column of each
/// remaining row.
pub fn rref(m: &mut Vec<Vec<Q>>, pivot_cols: usize) -> Vec<usize> {
    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..pivot_cols {
        if r == m.len() {
            break;
        }
        let Some(p) = (r..m.len()).find(|&i| !m[i][c].is_zero()) else {
            continue;
        };
        m.swap(r, p);
        let inv = m[r][c].recip();
        if !inv.is_one() {
            for x in m[r].iter_mut() {
                if !x.is_zero() {
                    *x = &*x * &inv;
                }
            }
        }
        let pivot_row = m[r].clone();
        for (i, row) in m.iter_mut().enumerate() {
            if i == r || row[c].is_zero() {
                continue;
            }
            let f = row[c].clone();
            for (x, y) in row.iter_mut().zip(&pivot_row) {
                if !y.is_zero() {
                    *x -= &(&f * y);
                }
            }
        }
        pivots.push(c);
        r += 1;
    }
    m.retain(|row| row.iter().any(|x| !x.is_zero()));
    pivots
}

pub fn rank(rows: &[Vec<Q>]) -> usize {
    if rows.is_empty() {
        return 0;
    }
    let n = rows[0].len();
    let mut m = rows.to_vec();
    rref(&mut m, n).len()
}

/// Basis of `{v : rows · v = 0}`, one primitive integer vector per free column.
pub fn nullspace(rows: &[Vec<Q>], n: usize) -> Vec<Vec<Q>> {
    let mut m = rows.to_vec();
    let pivots = rref(&mut m, n);
    let mut is_pivot = vec![false; n];
    for &p in &pivots {
        is_pivot[p] = true;
    }
    let mut basis = Vec::new();
    for f in (0..n).filter(|&c| !is_pivot[c]) {
        let mut v = vec![Q::zero(); n];
        v[f] = Q::one();
        for (row, &p) in m.iter().zip(&pivots) {
            if !row[f].is_zero() {
                v[p] = -&row[f];
            }
        }
        make_primitive(&mut v);
        basis.push(v);
    }
    basis
}

/// Solution set of an affine system `A x = b` written as `x = x0 + N t`.
#[derive(Debug, Clone)]
pub struct AffineParam {
    pub base: Vec<Q>,
    /// Column `j` of `N` is `directions[j]`; parameter `t_j` equals the free
    /// coordinate `free[j]` of `x`.
    pub directions: Vec<Vec<Q>>,
    pub free: Vec<usize>,
}

impl AffineParam {
    pub fn dim(&self) -> usize {
        self.directions.len()
    }

    pub fn eval(&self, t: &[Q]) -> Vec<Q> {
        let mut x = self.base.clone();
        for (tj, d) in t.iter().zip(&self.directions) {
            if tj.is_zero() {
                continue;
            }
            for (xi, di) in x.iter_mut().zip(d) {
                if !di.is_zero() {
                    *xi += &(tj * di);
                }
            }
        }
        x
    }

    /// Parameters of a point known to lie in the affine set.
    pub fn params_of(&self, x: &[Q]) -> Vec<Q> {
        self.free.iter().map(|&f| x[f].clone()).collect()
    }

    /// Pulls a row `a·x ⋈ b` back to `(a N)·t ⋈ b - a·x0`.
    pub fn pull_back(&self, coeffs: &[Q], rhs: &Q) -> (Vec<Q>, Q) {
        let a: Vec<Q> = self
            .directions
            .iter()
            .map(|d| crate::rational::dot(coeffs, d))
            .collect();
        (a, rhs - &crate::rational::dot(coeffs, &self.base))
    }
}

/// Parametrizes `{x : rows[i] · x = rhs[i]}` over `n` variables; `None` when
/// the system is inconsistent.
pub fn affine_solutions(rows: &[(Vec<Q>, Q)], n: usize) -> Option<AffineParam> {
    let mut m: Vec<Vec<Q>> = rows
        .iter()
        .map(|(a, b)| {
            let mut r = a.clone();
            r.push(b.clone());
            r
        })
        .collect();
    let pivots = rref(&mut m, n);
    if m.len() > pivots.len() {
        // a surviving row with zero coefficients and non-zero rhs
        return None;
    }
    let mut is_pivot = vec![false; n];
    for &p in &pivots {
        is_pivot[p] = true;
    }
    let mut base = vec![Q::zero(); n];
    for (row, &p) in m.iter().zip(&pivots) {
        base[p] = row[n].clone();
    }
    let free: Vec<usize> = (0..n).filter(|&c| !is_pivot[c]).collect();
    let directions = free
        .iter()
        .map(|&f| {
            let mut v = vec![Q::zero(); n];
            v[f] = Q::one();
            for (row, &p) in m.iter().zip(&pivots) {
                if !row[f].is_zero() {
                    v[p] = -&row[f];
                }
            }
            v
        })
        .collect();
    Some(AffineParam {
        base,
        directions,
        free,
    })
}

/// Solves a square or overdetermined consistent system; `None` if the system
/// has no solution or the solution is not unique.
pub fn solve_unique(rows: &[(Vec<Q>, Q)], n: usize) -> Option<Vec<Q>> {
    let p = affine_solutions(rows, n)?;
    if p.dim() == 0 {
        Some(p.base)
    } else {
        None
    }
}
