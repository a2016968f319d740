//! Exact Minkowski geometry in 1+1 to 3+1 dimensions (units with `c = 1`).
//!
//! The central predicate is [`intersection_within_cone`]: whether the
//! intersection of closed future light cones `K(a_1) ∩ … ∩ K(a_n)` lies inside
//! another cone `K(w)`. Writing `K(q)` through its support function
//! `t ≥ t_q + |x − x_q|`, the intersection is `t ≥ max_i (t_i + |x − x_i|)` and
//! containment can fail only far out along some spatial direction. Comparing
//! asymptotic slopes gives the criterion used here: containment fails iff
//! there is a unit vector `u` with `(x_i − x_w)·u > t_i − t_w` for every `i`.
//! That turns the question into whether an open polyhedron in at most three
//! variables meets the unit sphere, which is decided exactly.

use std::fmt;

use itertools::Itertools;
use num_traits::Signed;
use serde::{Deserialize, Serialize};

use crate::polytope::linalg::solve_unique;
use crate::polytope::lp::{minimize, LpOutcome};
use crate::rational::{dot, Q};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum GeometryError {
    #[error("spatial dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),
    #[error("spatial dimension must be 1, 2 or 3, got {0}")]
    BadDimension(usize),
    #[error("apex list is empty")]
    NoApexes,
    #[error("boost speed must be below light speed")]
    Superluminal,
    #[error("boost has no rational Lorentz factor")]
    IrrationalGamma,
    #[error("gamma does not satisfy gamma^2 (1 - beta^2) = 1 with gamma >= 1")]
    BadGamma,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SpacetimePoint {
    pub t: Q,
    pub x: Vec<Q>,
}

impl SpacetimePoint {
    pub fn new(t: Q, x: Vec<Q>) -> Result<Self, GeometryError> {
        if !(1..=3).contains(&x.len()) {
            return Err(GeometryError::BadDimension(x.len()));
        }
        Ok(SpacetimePoint { t, x })
    }

    /// Convenience constructor from `(numerator, denominator)` pairs, time first.
    pub fn from_ratios(coords: &[(i64, i64)]) -> Result<Self, GeometryError> {
        let mut it = coords.iter().map(|&(n, d)| Q::new(n, d));
        let t = it.next().ok_or(GeometryError::BadDimension(0))?;
        SpacetimePoint::new(t, it.collect())
    }

    pub fn dim(&self) -> usize {
        self.x.len()
    }

    fn check_same_dim(&self, other: &SpacetimePoint) -> Result<(), GeometryError> {
        if self.dim() != other.dim() {
            return Err(GeometryError::DimensionMismatch(self.dim(), other.dim()));
        }
        Ok(())
    }
}

impl fmt::Display for SpacetimePoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}", self.t)?;
        for c in &self.x {
            write!(f, ", {c}")?;
        }
        write!(f, ")")
    }
}

/// Whether `q` lies in the closed future light cone of `p`.
pub fn future_contains(p: &SpacetimePoint, q: &SpacetimePoint) -> Result<bool, GeometryError> {
    p.check_same_dim(q)?;
    let dt = &q.t - &p.t;
    if dt.is_negative() {
        return Ok(false);
    }
    let r2: Q = p.x.iter().zip(&q.x).map(|(a, b)| {
        let d = b - a;
        &d * &d
    }).sum();
    Ok(&dt * &dt >= r2)
}

/// Whether `∩ K(apexes) ⊆ K(witness)` for closed future cones `K`.
pub fn intersection_within_cone(
    apexes: &[SpacetimePoint],
    witness: &SpacetimePoint,
) -> Result<bool, GeometryError> {
    if apexes.is_empty() {
        return Err(GeometryError::NoApexes);
    }
    for a in apexes {
        a.check_same_dim(witness)?;
    }
    for a in apexes {
        if future_contains(witness, a)? {
            return Ok(true);
        }
    }
    let d = witness.dim();
    // open half-spaces d_i·u > c_i
    let mut rows: Vec<(Vec<Q>, Q)> = Vec::new();
    for a in apexes {
        let di: Vec<Q> = a.x.iter().zip(&witness.x).map(|(p, w)| p - w).collect();
        let ci = &a.t - &witness.t;
        if di.iter().all(Q::is_zero) {
            if ci.is_negative() {
                continue;
            }
            return Ok(true);
        }
        rows.push((di, ci));
    }
    Ok(!open_polyhedron_meets_sphere(d, &rows))
}

/// Decides whether `{u : d_i·u > c_i ∀i}` contains a unit vector. Every `d_i`
/// must be non-zero.
fn open_polyhedron_meets_sphere(d: usize, rows: &[(Vec<Q>, Q)]) -> bool {
    if d == 1 {
        return [Q::one(), -Q::one()]
            .iter()
            .any(|u| rows.iter().all(|(di, ci)| &(&di[0] * u) > ci));
    }
    if rows.is_empty() {
        return true;
    }
    if !strictly_feasible(d, rows) {
        return false;
    }
    // the open set is connected, so it meets the sphere iff its infimum norm is
    // below 1 and its supremum norm above 1; both are attained on the closure
    let min2 = min_norm_sq(d, rows);
    if min2 >= Q::one() {
        return false;
    }
    match max_norm_sq(d, rows) {
        None => true,
        Some(m) => m > Q::one(),
    }
}

fn strictly_feasible(d: usize, rows: &[(Vec<Q>, Q)]) -> bool {
    // maximize s subject to d_i·u − s ≥ c_i, s ≤ 1
    let n = d + 1;
    let mut ges: Vec<(Vec<Q>, Q)> = rows
        .iter()
        .map(|(di, ci)| {
            let mut r = di.clone();
            r.push(-Q::one());
            (r, ci.clone())
        })
        .collect();
    let mut cap = vec![Q::zero(); n];
    cap[d] = -Q::one();
    ges.push((cap.clone(), -Q::one()));
    match minimize(n, &[], &ges, &cap) {
        LpOutcome::Optimal { value, .. } => (-value).is_positive(),
        LpOutcome::Unbounded => true,
        LpOutcome::Infeasible => false,
    }
}

fn in_closure(u: &[Q], rows: &[(Vec<Q>, Q)]) -> bool {
    rows.iter().all(|(di, ci)| &dot(di, u) >= ci)
}

/// Minimum of `|u|²` over the closed polyhedron, via projections of the origin
/// onto the affine hulls of all faces.
fn min_norm_sq(d: usize, rows: &[(Vec<Q>, Q)]) -> Q {
    let origin = vec![Q::zero(); d];
    if in_closure(&origin, rows) {
        return Q::zero();
    }
    let mut best: Option<Q> = None;
    for k in 1..=d.min(rows.len()) {
        for face in (0..rows.len()).combinations(k) {
            let Some(u) = project_origin(d, face.iter().map(|&i| &rows[i])) else {
                continue;
            };
            if in_closure(&u, rows) {
                let n2 = dot(&u, &u);
                if best.as_ref().is_none_or(|b| &n2 < b) {
                    best = Some(n2);
                }
            }
        }
    }
    best.expect("a non-empty closed polyhedron has a nearest point")
}

/// Least-norm solution of `d_i·u = c_i` for the given rows, `u = Aᵀ(AAᵀ)⁻¹c`;
/// `None` if the rows are linearly dependent.
fn project_origin<'a>(d: usize, face: impl Iterator<Item = &'a (Vec<Q>, Q)>) -> Option<Vec<Q>> {
    let face: Vec<&(Vec<Q>, Q)> = face.collect();
    let k = face.len();
    let gram: Vec<(Vec<Q>, Q)> = face
        .iter()
        .map(|(a, c)| (face.iter().map(|(b, _)| dot(a, b)).collect(), c.clone()))
        .collect();
    let lam = solve_unique(&gram, k)?;
    let mut u = vec![Q::zero(); d];
    for (l, (a, _)) in lam.iter().zip(&face) {
        for (ui, ai) in u.iter_mut().zip(a) {
            *ui += &(l * ai);
        }
    }
    Some(u)
}

/// Maximum of `|u|²` over the closed polyhedron, `None` when it is unbounded.
fn max_norm_sq(d: usize, rows: &[(Vec<Q>, Q)]) -> Option<Q> {
    for j in 0..d {
        for s in [1i64, -1] {
            let mut obj = vec![Q::zero(); d];
            obj[j] = Q::from_int(s);
            if let LpOutcome::Unbounded = minimize(d, &[], rows, &obj) {
                return None;
            }
        }
    }
    let mut best = Q::zero();
    for face in (0..rows.len()).combinations(d) {
        let sys: Vec<(Vec<Q>, Q)> = face.iter().map(|&i| rows[i].clone()).collect();
        if let Some(u) = solve_unique(&sys, d) {
            if in_closure(&u, rows) {
                best = best.max(dot(&u, &u));
            }
        }
    }
    Some(best)
}

/// A Lorentz boost with exact rational velocity and Lorentz factor.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Boost {
    beta: Vec<Q>,
    gamma: Q,
}

impl Boost {
    /// Boost with velocity `beta`; fails unless `1/sqrt(1 − |beta|²)` is rational.
    pub fn new(beta: Vec<Q>) -> Result<Self, GeometryError> {
        let b2 = dot(&beta, &beta);
        let rest = &Q::one() - &b2;
        if !rest.is_positive() {
            return Err(GeometryError::Superluminal);
        }
        let root = rational_sqrt(&rest).ok_or(GeometryError::IrrationalGamma)?;
        Ok(Boost {
            beta,
            gamma: root.recip(),
        })
    }

    /// Boost with an explicitly supplied Lorentz factor, checked exactly.
    pub fn with_gamma(beta: Vec<Q>, gamma: Q) -> Result<Self, GeometryError> {
        let b2 = dot(&beta, &beta);
        if b2 >= Q::one() {
            return Err(GeometryError::Superluminal);
        }
        if gamma < Q::one() || &(&gamma * &gamma) * &(&Q::one() - &b2) != Q::one() {
            return Err(GeometryError::BadGamma);
        }
        Ok(Boost { beta, gamma })
    }

    /// Boost of speed `2mk/(m²+k²)` along the rational unit vector obtained
    /// from `dir_params` by inverse stereographic projection (0, 1 or 2
    /// parameters for 1, 2 or 3 spatial dimensions). Requires `m > k ≥ 0`.
    pub fn pythagorean(m: i64, k: i64, dir_params: &[Q]) -> Result<Self, GeometryError> {
        assert!(m > k && k >= 0, "need m > k >= 0");
        let speed = Q::new(2 * m * k, m * m + k * k);
        let dir = stereographic(dir_params);
        let beta = dir.iter().map(|c| c * &speed).collect();
        Boost::with_gamma(beta, Q::new(m * m + k * k, m * m - k * k))
    }

    pub fn beta(&self) -> &[Q] {
        &self.beta
    }

    pub fn gamma(&self) -> &Q {
        &self.gamma
    }
}

/// Rational unit vector of dimension `params.len() + 1`.
fn stereographic(params: &[Q]) -> Vec<Q> {
    let s: Q = params.iter().map(|p| p * p).sum();
    let den = &s + &Q::one();
    let mut v: Vec<Q> = params.iter().map(|p| &(p * &Q::from_int(2)) / &den).collect();
    v.push(&(&s - &Q::one()) / &den);
    v
}

fn rational_sqrt(x: &Q) -> Option<Q> {
    let (n, d) = (x.numer(), x.denom());
    if n.is_negative() {
        return None;
    }
    let (rn, rd) = (n.sqrt(), d.sqrt());
    (&rn * &rn == n && &rd * &rd == d).then(|| Q::from_bigints(rn, rd))
}

/// Applies `b` to `p`: `t' = γ(t − β·x)`, `x' = x + ((γ − 1)/β²)(β·x)β − γβt`.
pub fn boost_point(p: &SpacetimePoint, b: &Boost) -> Result<SpacetimePoint, GeometryError> {
    if p.dim() != b.beta.len() {
        return Err(GeometryError::DimensionMismatch(p.dim(), b.beta.len()));
    }
    let b2 = dot(&b.beta, &b.beta);
    if b2.is_zero() {
        return Ok(p.clone());
    }
    let bx = dot(&b.beta, &p.x);
    let t = &b.gamma * &(&p.t - &bx);
    let k = &(&(&b.gamma - &Q::one()) / &b2) * &bx;
    let gt = &b.gamma * &p.t;
    let x = p
        .x
        .iter()
        .zip(&b.beta)
        .map(|(xi, bi)| &(xi + &(&k * bi)) - &(&gt * bi))
        .collect();
    Ok(SpacetimePoint { t, x })
}

/// Float search for a point of `∩ K(apexes)` outside `K(witness)`. Candidates
/// are the earliest common-future points above `x_w + R u` over a grid of
/// directions `u` and radii `R`; a candidate only counts once it is confirmed
/// with exact arithmetic after rounding to a nearby rational point. Returns
/// `false` iff such a counterexample was confirmed.
pub fn sampling_oracle(apexes: &[SpacetimePoint], witness: &SpacetimePoint, sample_budget: usize) -> bool {
    if apexes.is_empty() || apexes.iter().any(|a| a.dim() != witness.dim()) {
        return true;
    }
    let d = witness.dim();
    let to_f = |p: &SpacetimePoint| -> (f64, Vec<f64>) { (p.t.to_f64(), p.x.iter().map(Q::to_f64).collect()) };
    let ap: Vec<(f64, Vec<f64>)> = apexes.iter().map(to_f).collect();
    let (tw, xw) = to_f(witness);
    let radii = [1e-3, 1e-2, 0.1, 0.5, 1.0, 2.0, 10.0, 100.0, 1e3, 1e4, 1e5];
    for u in direction_grid(d, sample_budget.max(1)) {
        for &r in &radii {
            let x: Vec<f64> = xw.iter().zip(&u).map(|(a, b)| a + r * b).collect();
            let t = ap
                .iter()
                .map(|(ta, xa)| ta + norm(&x.iter().zip(xa).map(|(p, q)| p - q).collect::<Vec<_>>()))
                .fold(f64::NEG_INFINITY, f64::max);
            if t - tw < r * (1.0 - 1e-12) && confirm(apexes, witness, t, &x) {
                return false;
            }
        }
    }
    true
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn round_q(x: f64) -> Q {
    const SCALE: i64 = 1 << 30;
    Q::new((x * SCALE as f64).round() as i64, SCALE)
}

fn confirm(apexes: &[SpacetimePoint], witness: &SpacetimePoint, t: f64, x: &[f64]) -> bool {
    let scale = 1.0 + t.abs() + x.iter().map(|v| v.abs()).sum::<f64>();
    let q = SpacetimePoint {
        t: round_q(t + 1e-7 * scale),
        x: x.iter().map(|&v| round_q(v)).collect(),
    };
    apexes.iter().all(|a| future_contains(a, &q).unwrap_or(false))
        && !future_contains(witness, &q).unwrap_or(true)
}

fn direction_grid(d: usize, n: usize) -> Vec<Vec<f64>> {
    match d {
        1 => vec![vec![1.0], vec![-1.0]],
        2 => (0..n.max(4))
            .map(|i| {
                let a = std::f64::consts::TAU * i as f64 / n.max(4) as f64;
                vec![a.cos(), a.sin()]
            })
            .collect(),
        _ => {
            // Fibonacci sphere
            let n = n.max(8);
            let golden = std::f64::consts::PI * (3.0 - 5f64.sqrt());
            (0..n)
                .map(|i| {
                    let z = 1.0 - 2.0 * (i as f64 + 0.5) / n as f64;
                    let r = (1.0 - z * z).sqrt();
                    let a = golden * i as f64;
                    vec![r * a.cos(), r * a.sin(), z]
                })
                .collect()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn pt(c: &[(i64, i64)]) -> SpacetimePoint {
        SpacetimePoint::from_ratios(c).unwrap()
    }

    #[test]
    fn cone_membership() {
        assert!(future_contains(&pt(&[(0, 1), (0, 1)]), &pt(&[(0, 1), (0, 1)])).unwrap());
        assert!(future_contains(&pt(&[(0, 1), (0, 1), (0, 1)]), &pt(&[(1, 1), (1, 2), (0, 1)])).unwrap());
        assert!(!future_contains(&pt(&[(0, 1), (0, 1), (0, 1)]), &pt(&[(1, 2), (1, 1), (0, 1)])).unwrap());
        assert!(future_contains(&pt(&[(0, 1), (0, 1)]), &pt(&[(0, 1), (0, 1), (0, 1)])).is_err());
    }

    fn worked_cases() -> Vec<(Vec<SpacetimePoint>, SpacetimePoint, bool)> {
        let pair2 = vec![pt(&[(0, 1), (0, 1), (0, 1)]), pt(&[(0, 1), (1, 1), (0, 1)])];
        vec![
            (vec![pt(&[(0, 1), (0, 1)]), pt(&[(0, 1), (1, 1)])], pt(&[(0, 1), (1, 2)]), true),
            (pair2.clone(), pt(&[(0, 1), (1, 2), (-1, 10)]), false),
            (pair2.clone(), pt(&[(1, 10), (1, 2), (0, 1)]), false),
            (pair2, pt(&[(0, 1), (1, 4), (0, 1)]), true),
            (vec![pt(&[(0, 1), (0, 1), (0, 1)])], pt(&[(0, 1), (0, 1), (0, 1)]), true),
        ]
    }

    #[test]
    fn worked_geometry_cases() {
        for (apexes, w, want) in worked_cases() {
            assert_eq!(intersection_within_cone(&apexes, &w).unwrap(), want, "{w}");
            assert_eq!(sampling_oracle(&apexes, &w, 256), want, "oracle {w}");
        }
    }

    #[test]
    fn midpoint_with_wider_window_in_2d() {
        // the midpoint stays inside for every shift |e| <= r/2 along the joining line
        let pair = vec![pt(&[(0, 1), (0, 1), (0, 1)]), pt(&[(0, 1), (1, 1), (0, 1)])];
        for e in [-2, -1, 0, 1, 2] {
            let w = pt(&[(0, 1), (2 + e, 4), (0, 1)]);
            assert!(intersection_within_cone(&pair, &w).unwrap());
        }
        assert!(!intersection_within_cone(&pair, &pt(&[(0, 1), (5, 4), (0, 1)])).unwrap());
    }

    #[test]
    fn empty_apex_list_is_an_error() {
        assert_eq!(
            intersection_within_cone(&[], &pt(&[(0, 1), (0, 1)])),
            Err(GeometryError::NoApexes)
        );
    }

    #[test]
    fn boost_examples() {
        let b = Boost::new(vec![Q::new(3, 5)]).unwrap();
        assert_eq!(b.gamma(), &Q::new(5, 4));
        let p = boost_point(&pt(&[(1, 1), (0, 1)]), &b).unwrap();
        assert_eq!(p, pt(&[(5, 4), (-3, 4)]));
        let zero = Boost::new(vec![Q::zero(), Q::zero()]).unwrap();
        let q = pt(&[(2, 3), (1, 7), (-5, 2)]);
        assert_eq!(boost_point(&q, &zero).unwrap(), q);
        assert_eq!(Boost::new(vec![Q::new(1, 2)]), Err(GeometryError::IrrationalGamma));
        assert_eq!(Boost::new(vec![Q::one()]), Err(GeometryError::Superluminal));
    }

    fn interval(p: &SpacetimePoint) -> Q {
        let x2: Q = p.x.iter().map(|c| c * c).sum();
        &(&p.t * &p.t) - &x2
    }

    fn random_boost(rng: &mut ChaCha8Rng, d: usize) -> Boost {
        let m = rng.gen_range(2..12);
        let k = rng.gen_range(0..m);
        let params: Vec<Q> = (0..d - 1)
            .map(|_| Q::new(rng.gen_range(-9..10), rng.gen_range(1..6)))
            .collect();
        Boost::pythagorean(m, k, &params).unwrap()
    }

    #[test]
    fn worked_cases_are_frame_independent() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for (apexes, w, want) in worked_cases() {
            for _ in 0..100 {
                let b = random_boost(&mut rng, w.dim());
                let ba: Vec<SpacetimePoint> = apexes.iter().map(|a| boost_point(a, &b).unwrap()).collect();
                let bw = boost_point(&w, &b).unwrap();
                assert_eq!(interval(&bw), interval(&w));
                assert_eq!(intersection_within_cone(&ba, &bw).unwrap(), want);
            }
        }
    }

    #[test]
    fn oracle_finds_most_exact_refutations() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut refuted = 0;
        let mut missed = 0;
        for _ in 0..1000 {
            let d = rng.gen_range(1..4);
            let mut rp = || {
                let c: Vec<(i64, i64)> = (0..=d).map(|_| (rng.gen_range(-6..7), rng.gen_range(1..4))).collect();
                SpacetimePoint::from_ratios(&c).unwrap()
            };
            let n = 1 + (rp().t.to_f64().abs() as usize) % 3;
            let apexes: Vec<SpacetimePoint> = (0..n).map(|_| rp()).collect();
            let w = rp();
            if !intersection_within_cone(&apexes, &w).unwrap() {
                refuted += 1;
                if sampling_oracle(&apexes, &w, 512) {
                    missed += 1;
                }
            }
        }
        assert!(refuted > 100);
        assert!(missed * 50 <= refuted, "oracle missed {missed} of {refuted}");
    }

    fn arb_point(d: usize) -> impl Strategy<Value = SpacetimePoint> {
        prop::collection::vec((-6i64..7, 1i64..4), d + 1)
            .prop_map(|c| SpacetimePoint::from_ratios(&c).unwrap())
    }

    fn arb_config() -> impl Strategy<Value = (Vec<SpacetimePoint>, SpacetimePoint)> {
        (1usize..4).prop_flat_map(|d| (prop::collection::vec(arb_point(d), 1..4), arb_point(d)))
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]

        #[test]
        fn oracle_never_contradicts_exact((apexes, w) in arb_config()) {
            let exact = intersection_within_cone(&apexes, &w).unwrap();
            let sampled = sampling_oracle(&apexes, &w, 64);
            if !sampled {
                prop_assert!(!exact);
            }
            if exact {
                prop_assert!(sampled);
            }
        }

        #[test]
        fn monotone_in_apexes((apexes, w) in arb_config(), extra in arb_point(3)) {
            if intersection_within_cone(&apexes, &w).unwrap() {
                let mut more = apexes.clone();
                let d = w.dim();
                more.push(SpacetimePoint { t: extra.t.clone(), x: extra.x[..d].to_vec() });
                prop_assert!(intersection_within_cone(&more, &w).unwrap());
            }
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(200))]

        #[test]
        fn boost_invariance((apexes, w) in arb_config(), seed in 0u64..1000) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let b = random_boost(&mut rng, w.dim());
            let ba: Vec<SpacetimePoint> = apexes.iter().map(|a| boost_point(a, &b).unwrap()).collect();
            let bw = boost_point(&w, &b).unwrap();
            prop_assert_eq!(
                intersection_within_cone(&apexes, &w).unwrap(),
                intersection_within_cone(&ba, &bw).unwrap()
            );
            for a in &apexes {
                prop_assert_eq!(future_contains(a, &w).unwrap(), future_contains(&boost_point(a, &b).unwrap(), &bw).unwrap());
            }
        }
    }
}
