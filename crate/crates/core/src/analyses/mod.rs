//! Vertex censuses, monogamy maxima, orbit classification, cross-edge
//! marginal studies, jamming feasibility and entropic CHSH evaluation.

mod edge;
mod jamming;
mod projection;

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt::Write as _;

use rayon::prelude::*;
use serde::Serialize;

use crate::entropy::{chsh_entropic, shannon, EntropyError, EntropyForm, JointDistribution, TOL};
use crate::polytope::PolyError;
use crate::rational::Q;
use crate::scenario::{CondDistribution, Family, Scenario, ScenarioError};

pub use edge::{edge_marginal_study, relabel_relation, EdgeReport, EdgeTarget, TargetReport};
pub use projection::{audit_projection, ExpectedRow, ProjectionAudit};
pub use jamming::{
    jamming_extended_feasibility, jamming_feasibility, jamming_max_correlation, jamming_scan, JammingPoint,
    JammingScan,
};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum AnalysisError {
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
    #[error(transparent)]
    Poly(#[from] PolyError),
    #[error(transparent)]
    Entropy(#[from] EntropyError),
    #[error("{0}")]
    Mismatch(String),
    #[error("generator {0} is not a permutation of the coordinates")]
    BadPermutation(usize),
    #[error("generator {0} maps a vertex outside the vertex set")]
    NotClosed(usize),
    #[error("{0} is out of range")]
    OutOfRange(String),
}

/// How many vertices violate exactly each subset of the studied families.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Census {
    pub families: Vec<String>,
    pub total: usize,
    /// Bit `k` of the key is set when family `k` is violated.
    pub counts: BTreeMap<u32, usize>,
}

impl Census {
    pub fn count(&self, pattern: u32) -> usize {
        self.counts.get(&pattern).copied().unwrap_or(0)
    }

    /// Vertices violating exactly `k` of the families.
    pub fn with_violations(&self, k: u32) -> usize {
        self.counts
            .iter()
            .filter(|(p, _)| p.count_ones() == k)
            .map(|(_, c)| c)
            .sum()
    }

    pub fn to_json(&self) -> serde_json::Value {
        let patterns: Vec<serde_json::Value> = (0..1u32 << self.families.len())
            .map(|p| {
                let violated: Vec<&str> = (0..self.families.len())
                    .filter(|k| p >> k & 1 == 1)
                    .map(|k| self.families[k].as_str())
                    .collect();
                serde_json::json!({ "violated": violated, "count": self.count(p) })
            })
            .collect();
        serde_json::json!({ "families": self.families, "total": self.total, "patterns": patterns })
    }
}

/// Whether `p` satisfies family `f` exactly.
pub fn satisfies_family(s: &Scenario, f: &Family, p: &[Q]) -> bool {
    s.family_rows(f).satisfied_by(p)
}

/// Tests every vertex against each family and histograms the violation
/// patterns.
pub fn violation_census(s: &Scenario, vertices: &[Vec<Q>], families: &[Family]) -> Result<Census, AnalysisError> {
    let n = s.num_vars();
    if let Some(v) = vertices.iter().find(|v| v.len() != n) {
        return Err(AnalysisError::Mismatch(format!(
            "vertex has {} coordinates, scenario {} has {n}",
            v.len(),
            s.name
        )));
    }
    if families.len() > 16 {
        return Err(AnalysisError::OutOfRange(format!("{} families", families.len())));
    }
    let names = s.names();
    for f in families {
        if f.input >= names.len() || f.outputs.iter().any(|&o| o >= names.len()) {
            return Err(AnalysisError::Mismatch(format!("family {f:?} does not fit {}", s.name)));
        }
    }
    let systems: Vec<_> = families.iter().map(|f| s.family_rows(f)).collect();
    let patterns: Vec<u32> = vertices
        .par_iter()
        .map(|v| {
            systems
                .iter()
                .enumerate()
                .filter(|(_, sys)| !sys.satisfied_by(v))
                .fold(0u32, |m, (k, _)| m | 1 << k)
        })
        .collect();
    let mut counts = BTreeMap::new();
    for p in patterns {
        *counts.entry(p).or_insert(0) += 1;
    }
    Ok(Census {
        families: families.iter().map(|f| f.describe(&names)).collect(),
        total: vertices.len(),
        counts,
    })
}

/// Maximum of an entropic expression over a vertex list.
#[derive(Debug, Clone, Serialize)]
pub struct MonogamyResult {
    pub expression: String,
    pub max: f64,
    pub argmax: usize,
    pub vertex: Vec<Q>,
    /// True when the inputs were uniform, so that convexity of mutual
    /// information in the conditional marginals lifts the vertex maximum to
    /// the whole polytope.
    pub polytope_bound: bool,
    #[serde(skip)]
    pub values: Vec<f64>,
}

impl MonogamyResult {
    /// `vertex,value` lines with twelve decimals.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("vertex,value\n");
        for (i, v) in self.values.iter().enumerate() {
            let _ = writeln!(s, "{i},{v:.12}");
        }
        s
    }
}

/// Evaluates `expr` (over the scenario's entropy roster) on every vertex with
/// the given input distribution (uniform when `None`). With
/// `require_polytope_bound`, non-uniform inputs are rejected.
pub fn monogamy_max(
    s: &Scenario,
    vertices: &[Vec<Q>],
    expr: &EntropyForm,
    input_weights: Option<&[Q]>,
    require_polytope_bound: bool,
) -> Result<MonogamyResult, AnalysisError> {
    if vertices.is_empty() {
        return Err(AnalysisError::Mismatch("no vertices".into()));
    }
    let layout = s.layout();
    let uniform = vec![Q::new(1, layout.n_in() as i64); layout.n_in()];
    let weights = input_weights.unwrap_or(&uniform);
    let is_uniform = weights == uniform.as_slice();
    if require_polytope_bound && !is_uniform {
        return Err(AnalysisError::Mismatch(
            "the polytope-wide bound needs uniform inputs".into(),
        ));
    }
    let values: Vec<f64> = vertices
        .par_iter()
        .map(|v| -> Result<f64, AnalysisError> {
            let d = s.distribution(v.clone())?;
            let j = JointDistribution::from_scenario(s, &d, weights)?;
            if expr.roster != j.roster {
                return Err(EntropyError::RosterMismatch.into());
            }
            Ok(j.entropy_vector().eval(expr))
        })
        .collect::<Result<_, _>>()?;
    let mut argmax = 0;
    for (i, v) in values.iter().enumerate() {
        if *v > values[argmax] {
            argmax = i;
        }
    }
    Ok(MonogamyResult {
        expression: expr.to_string(),
        max: values[argmax],
        argmax,
        vertex: vertices[argmax].clone(),
        polytope_bound: is_uniform,
        values,
    })
}

/// One orbit of the vertex set under a permutation group.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Orbit {
    /// Lexicographically smallest member.
    pub representative: Vec<Q>,
    pub size: usize,
    /// Indices into the input vertex list, ascending.
    pub members: Vec<usize>,
}

/// `q[g[i]] = p[i]`.
pub fn apply_permutation(g: &[usize], p: &[Q]) -> Vec<Q> {
    let mut q = vec![Q::zero(); p.len()];
    for (i, x) in p.iter().enumerate() {
        q[g[i]] = x.clone();
    }
    q
}

/// Partitions `vertices` into orbits of the group generated by coordinate
/// permutations. Orbits are listed by representative.
pub fn classify_orbits(vertices: &[Vec<Q>], generators: &[Vec<usize>]) -> Result<Vec<Orbit>, AnalysisError> {
    let dim = vertices.first().map_or(0, Vec::len);
    for (k, g) in generators.iter().enumerate() {
        let mut seen = vec![false; g.len()];
        if g.len() != dim || g.iter().any(|&i| i >= dim || std::mem::replace(&mut seen[i], true)) {
            return Err(AnalysisError::BadPermutation(k));
        }
    }
    let index: HashMap<&[Q], usize> = vertices.iter().enumerate().map(|(i, v)| (v.as_slice(), i)).collect();
    let mut assigned = vec![false; vertices.len()];
    let mut orbits = Vec::new();
    for start in 0..vertices.len() {
        if assigned[start] {
            continue;
        }
        let mut members = vec![start];
        assigned[start] = true;
        let mut queue = vec![start];
        while let Some(i) = queue.pop() {
            for (k, g) in generators.iter().enumerate() {
                let img = apply_permutation(g, &vertices[i]);
                let j = *index.get(img.as_slice()).ok_or(AnalysisError::NotClosed(k))?;
                if !assigned[j] {
                    assigned[j] = true;
                    members.push(j);
                    queue.push(j);
                }
            }
        }
        members.sort_unstable();
        let representative = members.iter().map(|&i| &vertices[i]).min().unwrap().clone();
        orbits.push(Orbit {
            representative,
            size: members.len(),
            members,
        });
    }
    orbits.sort_by(|a, b| a.representative.cmp(&b.representative));
    Ok(orbits)
}

/// Order of the permutation group generated by `generators` acting on
/// coordinates (closure by breadth-first search; meant for small groups).
pub fn group_order(generators: &[Vec<usize>]) -> usize {
    let Some(first) = generators.first() else {
        return 1;
    };
    let id: Vec<usize> = (0..first.len()).collect();
    let mut seen: HashSet<Vec<usize>> = HashSet::from([id.clone()]);
    let mut queue = vec![id];
    while let Some(h) = queue.pop() {
        for g in generators {
            let c: Vec<usize> = h.iter().map(|&i| g[i]).collect();
            if seen.insert(c.clone()) {
                queue.push(c);
            }
        }
    }
    seen.len()
}

/// Coordinate map of a relabelling: party `k` becomes party `party_map[k]`,
/// its output `o` becomes `out_maps[k][o]` and its input `x` becomes
/// `in_maps[k][x]`. Returns `g` with `P'[g[i]] = P[i]`.
pub fn relabelling(
    s: &Scenario,
    party_map: &[usize],
    out_maps: &[Vec<usize>],
    in_maps: &[Vec<usize>],
) -> Result<Vec<usize>, AnalysisError> {
    let n = s.parties.len();
    let bad = || AnalysisError::Mismatch("relabelling does not fit the scenario".into());
    if party_map.len() != n || out_maps.len() != n || in_maps.len() != n {
        return Err(bad());
    }
    for k in 0..n {
        let (p, q) = (&s.parties[k], &s.parties[party_map[k]]);
        if p.output_card != q.output_card
            || p.input_card != q.input_card
            || out_maps[k].len() != p.output_card
            || in_maps[k].len() != p.input_card
        {
            return Err(bad());
        }
    }
    let layout = s.layout();
    let g: Vec<usize> = (0..layout.len())
        .map(|i| {
            let (o, x) = layout.decode(i);
            let mut o2 = vec![0; n];
            let mut x2 = vec![0; n];
            for k in 0..n {
                o2[party_map[k]] = out_maps[k][o[k]];
                x2[party_map[k]] = in_maps[k][x[k]];
            }
            layout.index(&o2, &x2)
        })
        .collect();
    let mut check = g.clone();
    check.sort_unstable();
    if check.iter().enumerate().any(|(i, &v)| i != v) {
        return Err(bad());
    }
    Ok(g)
}

/// Generators of the group of party swaps (each swap exchanges the listed
/// pairs simultaneously) together with all single-party input and output
/// relabellings (cyclic shift and transposition of the first two values).
pub fn symmetry_generators(s: &Scenario, swaps: &[&[(&str, &str)]]) -> Result<Vec<Vec<usize>>, AnalysisError> {
    let n = s.parties.len();
    let id_party: Vec<usize> = (0..n).collect();
    let id_out: Vec<Vec<usize>> = s.parties.iter().map(|p| (0..p.output_card).collect()).collect();
    let id_in: Vec<Vec<usize>> = s.parties.iter().map(|p| (0..p.input_card).collect()).collect();
    let mut gens = Vec::new();
    for swap in swaps {
        let mut pm = id_party.clone();
        for (a, b) in *swap {
            let (i, j) = (s.party_index(a)?, s.party_index(b)?);
            pm[i] = j;
            pm[j] = i;
        }
        gens.push(relabelling(s, &pm, &id_out, &id_in)?);
    }
    let value_perms = |card: usize| -> Vec<Vec<usize>> {
        let mut v = Vec::new();
        if card >= 2 {
            let mut t: Vec<usize> = (0..card).collect();
            t.swap(0, 1);
            v.push(t);
        }
        if card >= 3 {
            v.push((0..card).map(|i| (i + 1) % card).collect());
        }
        v
    };
    for k in 0..n {
        for perm in value_perms(s.parties[k].input_card) {
            let mut im = id_in.clone();
            im[k] = perm;
            gens.push(relabelling(s, &id_party, &id_out, &im)?);
        }
        for perm in value_perms(s.parties[k].output_card) {
            let mut om = id_out.clone();
            om[k] = perm;
            gens.push(relabelling(s, &id_party, &om, &id_in)?);
        }
    }
    Ok(gens)
}

/// Entropic CHSH expressions of a three-party line distribution with binary
/// inputs and outputs (parties in order A, B, C).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ChshMonogamy {
    pub chsh_ab: f64,
    pub chsh_bc: f64,
    /// `H^CHSH_AB + H^CHSH_BC`.
    pub ab_plus_bc: f64,
    /// `H^CHSH_AB + H(C₀|A₀,Y=1) + H(A₁|C₀,Y=1) + H(A₀|C₁,Y=0) − H(A₁|C₁,Y=0)`.
    pub weak: f64,
}

/// Evaluates both entropic monogamy expressions. Pair blocks must be well
/// defined: `P(ab|xyz)` may not depend on `z`, nor `P(bc|xyz)` on `x`.
pub fn entropic_chsh_monogamy(dist: &CondDistribution) -> Result<ChshMonogamy, AnalysisError> {
    let l = &dist.layout;
    if l.out_cards != [2, 2, 2] || l.in_cards != [2, 2, 2] {
        return Err(AnalysisError::Mismatch(
            "expected three parties with binary inputs and outputs".into(),
        ));
    }
    let ab = dist.marginalize(&[0, 1], &[0, 1])?;
    let bc = dist.marginalize(&[1, 2], &[1, 2])?;
    let chsh_ab = chsh_entropic(&ab)?;
    let chsh_bc = chsh_entropic(&bc)?;
    let ac = dist.marginalize(&[0, 2], &[0, 1, 2])?;
    // (H(A), H(C), H(AC)) at inputs (x, y, z)
    let block = |x: usize, y: usize, z: usize| {
        let mut a = [0.0; 2];
        let mut c = [0.0; 2];
        let mut joint = [0.0; 4];
        for i in 0..2 {
            for k in 0..2 {
                let v = ac.get(&[i, k], &[x, y, z]).to_f64();
                joint[2 * i + k] = v;
                a[i] += v;
                c[k] += v;
            }
        }
        (shannon(&a), shannon(&c), shannon(&joint))
    };
    let (a, _, ac010) = block(0, 1, 0);
    let (_, c, ac110) = block(1, 1, 0);
    let (_, c2, ac001) = block(0, 0, 1);
    let (_, c3, ac101) = block(1, 0, 1);
    let weak = chsh_ab + (ac010 - a) + (ac110 - c) + (ac001 - c2) - (ac101 - c3);
    Ok(ChshMonogamy {
        chsh_ab,
        chsh_bc,
        ab_plus_bc: chsh_ab + chsh_bc,
        weak,
    })
}

/// The three-party distribution violating CHSH monogamy: outputs `abc` are
/// `001`/`110` at inputs `011`, `011`/`100` at `110`, `010`/`101` at `111`,
/// and `000`/`111` otherwise, each with probability one half.
pub fn chsh_violating_distribution(s: &Scenario) -> Result<CondDistribution, AnalysisError> {
    let l = s.layout();
    if l.out_cards != [2, 2, 2] || l.in_cards != [2, 2, 2] {
        return Err(AnalysisError::Mismatch("needs three binary parties".into()));
    }
    let values = (0..l.len())
        .map(|i| {
            let (o, x) = l.decode(i);
            let support: [[usize; 3]; 2] = match (x[0], x[1], x[2]) {
                (0, 1, 1) => [[0, 0, 1], [1, 1, 0]],
                (1, 1, 0) => [[0, 1, 1], [1, 0, 0]],
                (1, 1, 1) => [[0, 1, 0], [1, 0, 1]],
                _ => [[0, 0, 0], [1, 1, 1]],
            };
            if support.iter().any(|s| s[..] == o[..]) {
                Q::new(1, 2)
            } else {
                Q::zero()
            }
        })
        .collect();
    Ok(s.distribution(values)?)
}

/// Whether `a` and `b` agree within the global entropy tolerance.
pub fn approx(a: f64, b: f64) -> bool {
    (a - b).abs() <= TOL
}
