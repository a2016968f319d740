use serde::Serialize;

use super::AnalysisError;
use crate::polytope::{eliminate, enumerate_vertices, facets, feasible, HPolyhedron, Limits, VPolyhedron};
use crate::rational::{dot, Q};
use crate::scenario::{dist, MarginalRelation, Scenario};

/// An edge of the network: a pair of output parties and the input whose
/// value the marginal is conditioned on.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct EdgeTarget {
    pub outputs: Vec<usize>,
    pub inputs: Vec<usize>,
}

impl EdgeTarget {
    pub fn new(s: &Scenario, outputs: &[&str], inputs: &[&str]) -> Result<Self, AnalysisError> {
        let look = |v: &[&str]| v.iter().map(|n| s.party_index(n)).collect::<Result<Vec<_>, _>>();
        Ok(EdgeTarget {
            outputs: look(outputs)?,
            inputs: look(inputs)?,
        })
    }

    pub fn label(&self, names: &[String]) -> String {
        let j = |v: &[usize]| v.iter().map(|&i| names[i].as_str()).collect::<Vec<_>>().join(" ");
        format!("{} | {}", j(&self.outputs), j(&self.inputs))
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct TargetReport {
    pub edge: String,
    /// Whether the constrained polytope admits the same marginal shape on
    /// this edge as well (exact LP).
    pub simultaneous_feasible: bool,
    /// Names of the marginal coordinates `P(outs|ins)`.
    pub coordinates: Vec<String>,
    /// The projection of the constrained polytope onto the edge marginal.
    pub projection: Vec<String>,
    /// The projection agrees with the hull of the projected vertices.
    pub hull_agrees: bool,
    /// Whether some point of the projection has the source shape.
    pub shape_in_projection: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct EdgeReport {
    pub source: String,
    pub vertex_count: usize,
    pub targets: Vec<TargetReport>,
}

/// Moves a relation to another edge, matching output and input parties by
/// position.
pub fn relabel_relation(rel: &MarginalRelation, target: &EdgeTarget) -> Result<MarginalRelation, AnalysisError> {
    if rel.outputs.len() != target.outputs.len() || rel.inputs.len() != target.inputs.len() {
        return Err(AnalysisError::Mismatch("relation and target edge differ in shape".into()));
    }
    Ok(MarginalRelation {
        outputs: target.outputs.clone(),
        inputs: target.inputs.clone(),
        ..rel.clone()
    })
}

/// Linear map from the full distribution to the edge marginal, evaluated
/// with every other input at 0. Rows are marginal cells in
/// `(outs, ins)` order.
fn marginal_map(s: &Scenario, edge: &EdgeTarget) -> (Vec<Vec<Q>>, Vec<String>) {
    let layout = s.layout();
    let names = s.names();
    let out_cards: Vec<usize> = edge.outputs.iter().map(|&p| s.parties[p].output_card).collect();
    let in_cards: Vec<usize> = edge.inputs.iter().map(|&p| s.parties[p].input_card).collect();
    let n_out: usize = out_cards.iter().product();
    let n_in: usize = in_cards.iter().product();
    let mut rows = Vec::new();
    let mut labels = Vec::new();
    let prefix: String = edge.outputs.iter().map(|&p| names[p].as_str()).collect();
    for a in 0..n_out {
        let av = dist::decode(a, &out_cards);
        for x in 0..n_in {
            let xv = dist::decode(x, &in_cards);
            let mut ins = vec![0; s.parties.len()];
            for (&p, &v) in edge.inputs.iter().zip(&xv) {
                ins[p] = v;
            }
            let mut row = vec![Q::zero(); layout.len()];
            for outs in layout.outputs() {
                if edge.outputs.iter().zip(&av).all(|(&p, &v)| outs[p] == v) {
                    row[layout.index(&outs, &ins)] = Q::one();
                }
            }
            rows.push(row);
            let digits = |v: &[usize]| v.iter().map(|d| d.to_string()).collect::<String>();
            labels.push(format!("P_{prefix}({}|{})", digits(&av), digits(&xv)));
        }
    }
    (rows, labels)
}

/// Projects `h` along the linear map `m = M p` by lifting to `(p, m)` and
/// eliminating `p`.
fn project(h: &HPolyhedron, map: &[Vec<Q>], limits: &Limits) -> Result<HPolyhedron, AnalysisError> {
    let n = h.dim();
    let k = map.len();
    let pad = |c: &[Q]| {
        let mut v = c.to_vec();
        v.resize(n + k, Q::zero());
        v
    };
    let mut lifted = HPolyhedron::new(n + k);
    for r in h.equalities() {
        lifted.add_equality(pad(&r.coeffs), r.rhs.clone())?;
    }
    for r in h.inequalities() {
        lifted.add_inequality(pad(&r.coeffs), r.rhs.clone())?;
    }
    for (j, row) in map.iter().enumerate() {
        let mut c: Vec<Q> = row.iter().map(|q| -q.clone()).collect();
        c.resize(n + k, Q::zero());
        c[n + j] = Q::one();
        lifted.add_equality(c, Q::zero())?;
    }
    let drop: Vec<usize> = (0..n).collect();
    Ok(eliminate(&lifted, &drop, limits)?)
}

/// Studies a marginal shape imposed on one edge: the vertex count of the
/// constrained polytope, whether the same shape fits simultaneously on each
/// target edge, and the projection onto each target marginal.
///
/// The base polytope is the scenario's causal constraints and supports;
/// the scenario's own marginal relations are ignored in favour of
/// `relations`.
pub fn edge_marginal_study(
    s: &Scenario,
    relations: &[MarginalRelation],
    targets: &[EdgeTarget],
    limits: &Limits,
) -> Result<EdgeReport, AnalysisError> {
    let names = s.names();
    let first = relations
        .first()
        .ok_or_else(|| AnalysisError::Mismatch("no source relations".into()))?;
    let source = EdgeTarget {
        outputs: first.outputs.clone(),
        inputs: first.inputs.clone(),
    };
    if relations
        .iter()
        .any(|r| r.outputs != source.outputs || r.inputs != source.inputs)
    {
        return Err(AnalysisError::Mismatch("source relations span several edges".into()));
    }
    let mut sys = s.constraints()?;
    for sup in &s.supports {
        sys.extend(s.support_constraint(|o, x| sup.holds(o, x)));
    }
    sys.extend(s.marginal_constraints(relations)?);
    let h = s.polytope_with(&sys)?;
    if feasible(&h).is_none() {
        return Err(AnalysisError::Mismatch("source relations are inconsistent".into()));
    }
    let v = enumerate_vertices(&h, limits)?;
    log::info!("constrained polytope has {} vertices", v.vertices.len());

    let mut reports = Vec::new();
    for t in targets {
        let moved: Vec<MarginalRelation> = relations
            .iter()
            .map(|r| relabel_relation(r, t))
            .collect::<Result<_, _>>()?;
        let mut both = sys.clone();
        both.extend(s.marginal_constraints(&moved)?);
        let simultaneous_feasible = feasible(&s.polytope_with(&both)?).is_some();

        let (map, coordinates) = marginal_map(s, t);
        let proj = project(&h, &map, limits)?;
        let projected: Vec<Vec<Q>> = v
            .vertices
            .iter()
            .map(|p| map.iter().map(|row| dot(row, p)).collect())
            .collect();
        let hull = facets(&VPolyhedron::from_points(map.len(), projected), limits)?;
        let hull_agrees = hull.same_set(&proj);

        // the source shape written in marginal coordinates
        let mut shaped = proj.clone();
        for r in s.marginal_constraints(&moved)?.rows {
            // only the copy with every other input at 0 is expressible
            if let Some(c) = express(&r.coeffs, &map) {
                shaped.add_equality(c, r.rhs.clone())?;
            }
        }
        let shape_in_projection = feasible(&shaped).is_some();
        reports.push(TargetReport {
            edge: t.label(&names),
            simultaneous_feasible,
            coordinates: coordinates.clone(),
            projection: proj.describe(&coordinates).lines().map(str::to_string).collect(),
            hull_agrees,
            shape_in_projection,
        });
    }
    Ok(EdgeReport {
        source: source.label(&names),
        vertex_count: v.vertices.len(),
        targets: reports,
    })
}

/// Writes `coeffs` as a combination of the rows of `map` when each row's
/// support is hit with one common coefficient.
fn express(coeffs: &[Q], map: &[Vec<Q>]) -> Option<Vec<Q>> {
    let mut out = vec![Q::zero(); map.len()];
    let mut covered = vec![false; coeffs.len()];
    for (j, row) in map.iter().enumerate() {
        let support: Vec<usize> = (0..row.len()).filter(|&i| !row[i].is_zero()).collect();
        let c = &coeffs[support[0]];
        if support.iter().any(|&i| &coeffs[i] != c) {
            return None;
        }
        out[j] = c.clone();
        for i in support {
            covered[i] = true;
        }
    }
    if coeffs.iter().zip(&covered).any(|(c, &cov)| !cov && !c.is_zero()) {
        return None;
    }
    Some(out)
}
