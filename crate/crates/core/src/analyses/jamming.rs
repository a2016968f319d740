use serde::Serialize;

use super::AnalysisError;
use crate::polytope::lp::LpOutcome;
use crate::polytope::{feasible, HPolyhedron};
use crate::rational::Q;
use crate::scenario::{Party, Scenario};

/// Coefficients of `P(o_i ⊕ o_j = x)` where `x` is the low bit of input
/// party `k`, averaged uniformly over the input cells that `block` accepts.
fn parity_row(s: &Scenario, i: usize, j: usize, k: usize, block: impl Fn(&[usize]) -> bool) -> Vec<Q> {
    let layout = s.layout();
    let cells = layout.inputs().filter(|x| block(x)).count();
    let w = Q::new(1, cells as i64);
    (0..layout.len())
        .map(|idx| {
            let (o, x) = layout.decode(idx);
            if block(&x) && (o[i] ^ o[j]) == x[k] % 2 {
                w.clone()
            } else {
                Q::zero()
            }
        })
        .collect()
}

struct Compass {
    a: usize,
    b: usize,
    c: usize,
    x: usize,
    y: usize,
}

fn compass_parties(s: &Scenario) -> Result<Compass, AnalysisError> {
    let c = Compass {
        a: s.party_index("A")?,
        b: s.party_index("B")?,
        c: s.party_index("C")?,
        x: s.party_index("X")?,
        y: s.party_index("Y")?,
    };
    for k in [c.a, c.b, c.c] {
        if s.parties[k].output_card != 2 {
            return Err(AnalysisError::Mismatch("jamming needs binary outputs".into()));
        }
    }
    Ok(c)
}

fn check_p(p: &Q) -> Result<(), AnalysisError> {
    if p.is_negative() || *p > Q::one() {
        return Err(AnalysisError::OutOfRange(format!("p = {p}")));
    }
    Ok(())
}

/// The compass polytope with `P(B⊕C=Y) = 1 − p` under uniform inputs.
fn yanina_constrained(s: &Scenario, k: &Compass, p: &Q) -> Result<HPolyhedron, AnalysisError> {
    let mut h = s.polytope()?;
    h.add_equality(parity_row(s, k.b, k.c, k.y, |_| true), Q::one() - p.clone())?;
    Ok(h)
}

/// Whether the scenario admits `P(B⊕C=Y) = 1 − p` together with
/// `P(A⊕B=X) = 1 − p/2`, both under uniform binary inputs. Exact LP.
pub fn jamming_feasibility(s: &Scenario, p: &Q) -> Result<bool, AnalysisError> {
    check_p(p)?;
    let k = compass_parties(s)?;
    let mut h = yanina_constrained(s, &k, p)?;
    h.add_equality(parity_row(s, k.a, k.b, k.x, |_| true), Q::one() - p * &Q::new(1, 2))?;
    Ok(feasible(&h).is_some())
}

/// The same question in an extended scenario where `X` and `Y` carry a
/// second bit switching the mechanism on (`x' = x + 2 x_m`). The
/// requirements are imposed on the block `x_m = y_m = 1`, averaged over
/// uniform `x, y` inside it.
pub fn jamming_extended_feasibility(s: &Scenario, p: &Q) -> Result<bool, AnalysisError> {
    check_p(p)?;
    let k = compass_parties(s)?;
    for i in [k.x, k.y] {
        if s.parties[i].input_card != 2 {
            return Err(AnalysisError::Mismatch("jamming needs binary inputs".into()));
        }
    }
    let parties: Vec<Party> = s
        .parties
        .iter()
        .map(|q| {
            let mut q = q.clone();
            if q.input_card == 2 {
                q.input_card = 4;
            }
            q
        })
        .collect();
    let mut ext = Scenario::new(&format!("{}-switched", s.name), parties, s.mode)?;
    ext.dropped = s.dropped.clone();
    let on = |x: &[usize]| x[k.x] / 2 == 1 && x[k.y] / 2 == 1;
    let mut h = ext.polytope()?;
    h.add_equality(parity_row(&ext, k.b, k.c, k.y, on), Q::one() - p.clone())?;
    h.add_equality(parity_row(&ext, k.a, k.b, k.x, on), Q::one() - p * &Q::new(1, 2))?;
    Ok(feasible(&h).is_some())
}

/// Largest `P(A⊕B=X)` compatible with `P(B⊕C=Y) = 1 − p` (uniform inputs),
/// or `None` when that requirement alone is infeasible.
pub fn jamming_max_correlation(s: &Scenario, p: &Q) -> Result<Option<Q>, AnalysisError> {
    check_p(p)?;
    let k = compass_parties(s)?;
    let h = yanina_constrained(s, &k, p)?;
    let obj: Vec<Q> = parity_row(s, k.a, k.b, k.x, |_| true).into_iter().map(|q| -q).collect();
    Ok(match h.minimize(&obj) {
        LpOutcome::Optimal { value, .. } => Some(-value),
        LpOutcome::Unbounded => unreachable!("probabilities are bounded"),
        LpOutcome::Infeasible => None,
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct JammingPoint {
    pub p: Q,
    pub feasible: bool,
    pub extended_feasible: bool,
    /// LP maximum of `P(A⊕B=X)` given `P(B⊕C=Y) = 1 − p`.
    pub max_ab: Option<Q>,
    /// The heuristic bound `(1 − p)/2 + p`.
    pub heuristic_bound: Q,
    /// The value `1 − p/2` required when Xavier always switches on.
    pub required_ab: Q,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct JammingScan {
    pub points: Vec<JammingPoint>,
    pub feasible_at: Vec<Q>,
    pub variants_agree: bool,
}

/// Evaluates every `p = k/steps`, `k = 0..=steps`.
pub fn jamming_scan(s: &Scenario, steps: usize) -> Result<JammingScan, AnalysisError> {
    if steps == 0 {
        return Err(AnalysisError::OutOfRange("zero scan steps".into()));
    }
    let half = Q::new(1, 2);
    let points = (0..=steps)
        .map(|k| -> Result<JammingPoint, AnalysisError> {
            let p = Q::new(k as i64, steps as i64);
            log::debug!("jamming scan p = {p}");
            Ok(JammingPoint {
                feasible: jamming_feasibility(s, &p)?,
                extended_feasible: jamming_extended_feasibility(s, &p)?,
                max_ab: jamming_max_correlation(s, &p)?,
                heuristic_bound: (Q::one() - p.clone()) * half.clone() + p.clone(),
                required_ab: Q::one() - &p * &half,
                p,
            })
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(JammingScan {
        feasible_at: points.iter().filter(|q| q.feasible).map(|q| q.p.clone()).collect(),
        variants_agree: points.iter().all(|q| q.feasible == q.extended_feasible),
        points,
    })
}
