//! Double description method for polyhedral cones `{y : a_i · y ≥ 0}`.
//!
//! Rows are inserted one at a time in the given order. The current cone is
//! kept as a lineality basis plus extreme rays, each ray carrying the set of
//! inserted rows it makes tight. New rays come from pairs of adjacent rays on
//! opposite sides of the inserted hyperplane; adjacency is decided by the
//! combinatorial test on zero sets, which is exact for extreme rays.

use super::bitset::BitSet;
use super::{Budget, PolyError};
use crate::rational::{dot, make_primitive, Q};

#[derive(Debug, Clone)]
pub struct ConeGenerators {
    pub rays: Vec<Vec<Q>>,
    pub lineality: Vec<Vec<Q>>,
}

#[derive(Clone)]
struct Ray {
    v: Vec<Q>,
    zeros: BitSet,
}

pub fn double_description(
    dim: usize,
    rows: &[Vec<Q>],
    budget: &Budget,
) -> Result<ConeGenerators, PolyError> {
    let nrows = rows.len();
    let mut lineality: Vec<Vec<Q>> = (0..dim)
        .map(|i| {
            let mut v = vec![Q::zero(); dim];
            v[i] = Q::one();
            v
        })
        .collect();
    let mut rays: Vec<Ray> = Vec::new();

    for (ci, a) in rows.iter().enumerate() {
        budget.check_time("double description", ci, rays.len())?;
        let lin_vals: Vec<Q> = lineality.iter().map(|l| dot(a, l)).collect();
        if let Some(piv) = lin_vals.iter().position(|x| !x.is_zero()) {
            let mut l_star = lineality.remove(piv);
            let mut s = lin_vals[piv].clone();
            if s.is_negative() {
                for x in l_star.iter_mut() {
                    *x = -&*x;
                }
                s = -s;
            }
            let mut rest_vals = lin_vals;
            rest_vals.remove(piv);
            for (l, val) in lineality.iter_mut().zip(&rest_vals) {
                if val.is_zero() {
                    continue;
                }
                let f = val / &s;
                for (x, y) in l.iter_mut().zip(&l_star) {
                    if !y.is_zero() {
                        *x -= &(&f * y);
                    }
                }
                make_primitive(l);
            }
            for r in rays.iter_mut() {
                let val = dot(a, &r.v);
                if !val.is_zero() {
                    let f = &val / &s;
                    for (x, y) in r.v.iter_mut().zip(&l_star) {
                        if !y.is_zero() {
                            *x -= &(&f * y);
                        }
                    }
                    make_primitive(&mut r.v);
                }
                r.zeros.insert(ci);
            }
            // l_star is tight on every earlier row, as all lineality vectors were
            let mut zeros = BitSet::new(nrows);
            for j in 0..ci {
                zeros.insert(j);
            }
            make_primitive(&mut l_star);
            rays.push(Ray { v: l_star, zeros });
            continue;
        }

        let vals: Vec<i32> = rays.iter().map(|r| dot(a, &r.v).signum()).collect();
        let pos: Vec<usize> = (0..rays.len()).filter(|&i| vals[i] > 0).collect();
        let neg: Vec<usize> = (0..rays.len()).filter(|&i| vals[i] < 0).collect();
        if neg.is_empty() {
            for (r, &v) in rays.iter_mut().zip(&vals) {
                if v == 0 {
                    r.zeros.insert(ci);
                }
            }
            continue;
        }
        let pointed_dim = dim - lineality.len();
        let need = pointed_dim.saturating_sub(2);

        let mut new_rays: Vec<Ray> = Vec::new();
        for &p in &pos {
            for &n in &neg {
                let rp = &rays[p];
                let rn = &rays[n];
                if rp.zeros.intersection_count(&rn.zeros) < need {
                    continue;
                }
                let common = rp.zeros.intersection(&rn.zeros);
                let blocked = rays
                    .iter()
                    .enumerate()
                    .any(|(t, r)| t != p && t != n && common.is_subset(&r.zeros));
                if blocked {
                    continue;
                }
                let ap = dot(a, &rp.v);
                let an = -dot(a, &rn.v);
                let mut v: Vec<Q> = rn
                    .v
                    .iter()
                    .zip(&rp.v)
                    .map(|(x, y)| &(&ap * x) + &(&an * y))
                    .collect();
                make_primitive(&mut v);
                let mut zeros = common;
                zeros.insert(ci);
                new_rays.push(Ray { v, zeros });
            }
            budget.check_rays("double description", rays.len() + new_rays.len())?;
        }

        let mut next: Vec<Ray> = Vec::with_capacity(rays.len() - neg.len() + new_rays.len());
        for (mut r, v) in rays.into_iter().zip(vals) {
            match v {
                1 => next.push(r),
                0 => {
                    r.zeros.insert(ci);
                    next.push(r);
                }
                _ => {}
            }
        }
        next.extend(new_rays);
        rays = next;
        budget.check_rays("double description", rays.len())?;
        budget.progress("double description", ci + 1, nrows, rays.len());
    }
    Ok(ConeGenerators {
        rays: rays.into_iter().map(|r| r.v).collect(),
        lineality,
    })
}
