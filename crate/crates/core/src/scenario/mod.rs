//! Scenarios (parties, alphabets, space-time locations) and the exact linear
//! constraint systems they generate.
//!
//! Every constraint family is a pair `(J, i)`: the marginal over the outputs
//! of the parties in `J` does not depend on the input of party `i ∉ J`. Rows
//! are pairwise differences against input value `0` with all other inputs
//! held fixed, so independence from each removed input separately composes to
//! independence from all of them jointly. The full non-signalling system is
//! the set of all families; relativistic causality drops the families whose
//! outputs have their joint future inside the future of `i`.

pub mod dist;
pub mod expr;
mod parse;
pub mod presets;

use std::fmt;
use std::str::FromStr;

use itertools::Itertools;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::lightcone::{intersection_within_cone, GeometryError, SpacetimePoint};
use crate::polytope::{HPolyhedron, PolyError, Row};
use crate::rational::Q;
pub use dist::{CondDistribution, Layout};
pub use expr::{MarginalRelation, MarginalTerm, SupportExpr};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ScenarioError {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("{0}")]
    Invalid(String),
    #[error("unknown reference: {0}")]
    BadReference(String),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error("kept marginal depends on a dropped input")]
    IllDefinedMarginal,
    #[error("operation needs constraint mode {0}")]
    ModeMismatch(&'static str),
    #[error("unknown preset '{0}'")]
    UnknownPreset(String),
    #[error(transparent)]
    Poly(#[from] PolyError),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Party {
    pub name: String,
    pub input_card: usize,
    pub output_card: usize,
    pub location: Option<SpacetimePoint>,
}

impl Party {
    pub fn new(name: &str, input_card: usize, output_card: usize) -> Self {
        Party {
            name: name.to_string(),
            input_card,
            output_card,
            location: None,
        }
    }

    pub fn at(mut self, p: SpacetimePoint) -> Self {
        self.location = Some(p);
        self
    }

    pub fn has_input(&self) -> bool {
        self.input_card > 1
    }

    pub fn has_output(&self) -> bool {
        self.output_card > 1
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConstraintMode {
    FullNs,
    Line,
    GeometricRc,
    Explicit,
}

impl ConstraintMode {
    pub fn as_str(&self) -> &'static str {
        match self {
            ConstraintMode::FullNs => "full_ns",
            ConstraintMode::Line => "line",
            ConstraintMode::GeometricRc => "geometric_rc",
            ConstraintMode::Explicit => "explicit",
        }
    }
}

impl fmt::Display for ConstraintMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ConstraintMode {
    type Err = ScenarioError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s {
            "full_ns" => ConstraintMode::FullNs,
            "line" => ConstraintMode::Line,
            "geometric_rc" => ConstraintMode::GeometricRc,
            "explicit" => ConstraintMode::Explicit,
            _ => return Err(ScenarioError::Invalid(format!("unknown constraint mode '{s}'"))),
        })
    }
}

/// Which removed inputs the light-cone omission test looks at.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum OmissionRule {
    /// Only the input actually removed from the conditioning set.
    #[default]
    RemovedInput,
    /// Any input of a party outside the marginal: the removed input and the
    /// inputs of every other output-bearing party that is summed over.
    AnyOutside,
}

/// "The joint output marginal of `outputs` is independent of the input of
/// party `input`."
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Family {
    pub outputs: Vec<usize>,
    pub input: usize,
}

impl Family {
    pub fn new(mut outputs: Vec<usize>, input: usize) -> Self {
        outputs.sort_unstable();
        outputs.dedup();
        Family { outputs, input }
    }

    /// `A B | Z`
    pub fn describe(&self, names: &[String]) -> String {
        let o: Vec<&str> = self.outputs.iter().map(|&i| names[i].as_str()).collect();
        format!("{} | {}", o.join(" "), names[self.input])
    }

    fn mask(&self) -> u64 {
        self.outputs.iter().map(|&i| 1u64 << i).sum()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Omission {
    pub family: Family,
    pub reason: String,
}

/// Equality rows `coeffs · P = rhs` over flat distribution indices.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EqualitySystem {
    pub num_vars: usize,
    pub rows: Vec<Row>,
}

impl EqualitySystem {
    pub fn new(num_vars: usize) -> Self {
        EqualitySystem {
            num_vars,
            rows: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn extend(&mut self, other: EqualitySystem) {
        self.rows.extend(other.rows);
    }

    pub fn satisfied_by(&self, p: &[Q]) -> bool {
        self.rows.iter().all(|r| r.eval(p) == r.rhs)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Scenario {
    pub name: String,
    pub parties: Vec<Party>,
    pub dimension: Option<usize>,
    pub mode: ConstraintMode,
    /// Families dropped from full non-signalling in explicit mode.
    pub dropped: Vec<Family>,
    pub supports: Vec<SupportExpr>,
    pub marginals: Vec<MarginalRelation>,
}

impl Scenario {
    pub fn new(name: &str, parties: Vec<Party>, mode: ConstraintMode) -> Result<Self, ScenarioError> {
        let s = Scenario {
            name: name.to_string(),
            dimension: parties.iter().find_map(|p| p.location.as_ref().map(|l| l.dim())),
            parties,
            mode,
            dropped: Vec::new(),
            supports: Vec::new(),
            marginals: Vec::new(),
        };
        s.validate()?;
        Ok(s)
    }

    pub fn parse(text: &str) -> Result<Self, ScenarioError> {
        parse::parse(text)
    }

    pub fn preset(name: &str) -> Result<Self, ScenarioError> {
        presets::load(name)
    }

    pub(crate) fn validate(&self) -> Result<(), ScenarioError> {
        if self.parties.is_empty() {
            return Err(ScenarioError::Invalid("scenario has no parties".into()));
        }
        if self.parties.len() > 63 {
            return Err(ScenarioError::Invalid("at most 63 parties are supported".into()));
        }
        for (i, p) in self.parties.iter().enumerate() {
            if p.input_card == 0 || p.output_card == 0 {
                return Err(ScenarioError::Invalid(format!("party {}: cardinalities must be >= 1", p.name)));
            }
            if self.parties[..i].iter().any(|q| q.name == p.name) {
                return Err(ScenarioError::Invalid(format!("duplicate party name {}", p.name)));
            }
            if let (Some(d), Some(l)) = (self.dimension, &p.location) {
                if l.dim() != d {
                    return Err(GeometryError::DimensionMismatch(d, l.dim()).into());
                }
            }
        }
        if self.mode == ConstraintMode::GeometricRc && self.parties.iter().any(|p| p.location.is_none()) {
            return Err(ScenarioError::Invalid("geometric_rc mode needs a position for every party".into()));
        }
        let candidates = self.candidate_families();
        for f in &self.dropped {
            if !candidates.contains(f) {
                return Err(ScenarioError::BadReference(format!(
                    "dropped family {} is not a constraint family",
                    f.describe(&self.names())
                )));
            }
        }
        Ok(())
    }

    pub fn names(&self) -> Vec<String> {
        self.parties.iter().map(|p| p.name.clone()).collect()
    }

    pub fn party_index(&self, name: &str) -> Result<usize, ScenarioError> {
        self.parties
            .iter()
            .position(|p| p.name == name)
            .ok_or_else(|| ScenarioError::BadReference(format!("party {name}")))
    }

    pub fn layout(&self) -> Layout {
        Layout::new(
            self.parties.iter().map(|p| p.output_card).collect(),
            self.parties.iter().map(|p| p.input_card).collect(),
        )
    }

    pub fn num_vars(&self) -> usize {
        self.layout().len()
    }

    /// Every `(J, i)` with `J` a non-empty set of output-bearing parties and
    /// `i ∉ J` an input-bearing party, ordered by `J` as a bitmask, then `i`.
    pub fn candidate_families(&self) -> Vec<Family> {
        let outs: Vec<usize> = (0..self.parties.len()).filter(|&i| self.parties[i].has_output()).collect();
        let ins: Vec<usize> = (0..self.parties.len()).filter(|&i| self.parties[i].has_input()).collect();
        let mut fams = Vec::new();
        for k in 1..=outs.len() {
            for j in outs.iter().copied().combinations(k) {
                for &i in &ins {
                    if !j.contains(&i) {
                        fams.push(Family::new(j.clone(), i));
                    }
                }
            }
        }
        fams.sort_by_key(|f| (f.mask(), f.input));
        fams
    }

    /// Whether the joint future of the outputs in `outputs` lies inside the
    /// future of party `input`'s location.
    pub fn influences(&self, input: usize, outputs: &[usize]) -> Result<bool, ScenarioError> {
        let loc = |i: usize| {
            self.parties[i]
                .location
                .clone()
                .ok_or_else(|| ScenarioError::Invalid(format!("party {} has no position", self.parties[i].name)))
        };
        let apexes: Vec<SpacetimePoint> = outputs.iter().map(|&j| loc(j)).collect::<Result<_, _>>()?;
        Ok(intersection_within_cone(&apexes, &loc(input)?)?)
    }

    /// Retained and omitted families under the light-cone rule.
    pub fn geometric_families(&self, rule: OmissionRule) -> Result<(Vec<Family>, Vec<Omission>), ScenarioError> {
        let names = self.names();
        let mut kept = Vec::new();
        let mut omitted = Vec::new();
        for f in self.candidate_families() {
            let mut witnesses = vec![f.input];
            if rule == OmissionRule::AnyOutside {
                witnesses.extend(
                    (0..self.parties.len())
                        .filter(|&p| p != f.input && !f.outputs.contains(&p))
                        .filter(|&p| self.parties[p].has_input() && self.parties[p].has_output()),
                );
            }
            let mut reason = None;
            for w in witnesses {
                if self.influences(w, &f.outputs)? {
                    let o: Vec<String> = f
                        .outputs
                        .iter()
                        .map(|&j| format!("{} {}", names[j], self.parties[j].location.as_ref().unwrap()))
                        .collect();
                    reason = Some(format!(
                        "joint future of [{}] lies inside the future of {} {}",
                        o.join(", "),
                        names[w],
                        self.parties[w].location.as_ref().unwrap()
                    ));
                    break;
                }
            }
            match reason {
                Some(reason) => omitted.push(Omission { family: f, reason }),
                None => kept.push(f),
            }
        }
        Ok((kept, omitted))
    }

    /// Retained and omitted families for parties ordered along a line: the
    /// marginal of `J` is constrained against inputs outside the contiguous
    /// block of parties spanned by `J`.
    pub fn line_families(&self) -> (Vec<Family>, Vec<Omission>) {
        let mut kept = Vec::new();
        let mut omitted = Vec::new();
        for f in self.candidate_families() {
            let lo = *f.outputs.first().unwrap();
            let hi = *f.outputs.last().unwrap();
            if (lo..=hi).contains(&f.input) {
                omitted.push(Omission {
                    reason: format!(
                        "{} lies between {} and {} on the line",
                        self.parties[f.input].name, self.parties[lo].name, self.parties[hi].name
                    ),
                    family: f,
                });
            } else {
                kept.push(f);
            }
        }
        (kept, omitted)
    }

    /// Retained and omitted families for this scenario's constraint mode.
    pub fn families(&self) -> Result<(Vec<Family>, Vec<Omission>), ScenarioError> {
        Ok(match self.mode {
            ConstraintMode::FullNs => (self.candidate_families(), Vec::new()),
            ConstraintMode::Line => self.line_families(),
            ConstraintMode::GeometricRc => self.geometric_families(OmissionRule::RemovedInput)?,
            ConstraintMode::Explicit => {
                let (kept, dropped): (Vec<Family>, Vec<Family>) =
                    self.candidate_families().into_iter().partition(|f| !self.dropped.contains(f));
                let om = dropped
                    .into_iter()
                    .map(|family| Omission {
                        family,
                        reason: "dropped explicitly".into(),
                    })
                    .collect();
                (kept, om)
            }
        })
    }

    /// Rows asserting one family: for every other-input assignment, every
    /// value `v > 0` of the removed input and every marginal cell,
    /// `P(a_J | x_i = v, …) − P(a_J | x_i = 0, …) = 0`.
    pub fn family_rows(&self, f: &Family) -> EqualitySystem {
        let layout = self.layout();
        let n = layout.len();
        let j_cards: Vec<usize> = f.outputs.iter().map(|&j| self.parties[j].output_card).collect();
        let mut sys = EqualitySystem::new(n);
        for ins in layout.inputs().filter(|x| x[f.input] == 0) {
            for v in 1..self.parties[f.input].input_card {
                let mut alt = ins.clone();
                alt[f.input] = v;
                for cell in 0..j_cards.iter().product() {
                    let cell = dist::decode(cell, &j_cards);
                    let mut coeffs = vec![Q::zero(); n];
                    for outs in layout.outputs() {
                        if f.outputs.iter().zip(&cell).all(|(&j, &c)| outs[j] == c) {
                            coeffs[layout.index(&outs, &alt)] = Q::one();
                            coeffs[layout.index(&outs, &ins)] = -Q::one();
                        }
                    }
                    sys.rows.push(Row::new(coeffs, Q::zero()));
                }
            }
        }
        sys
    }

    fn rows_for(&self, fams: &[Family]) -> EqualitySystem {
        let mut sys = EqualitySystem::new(self.num_vars());
        for f in fams {
            sys.extend(self.family_rows(f));
        }
        sys
    }

    /// Full non-signalling system, regardless of mode.
    pub fn ns_constraints(&self) -> EqualitySystem {
        self.rows_for(&self.candidate_families())
    }

    /// Line constraints; the scenario must be in line mode.
    pub fn line_constraints(&self) -> Result<EqualitySystem, ScenarioError> {
        if self.mode != ConstraintMode::Line {
            return Err(ScenarioError::ModeMismatch("line"));
        }
        Ok(self.rows_for(&self.line_families().0))
    }

    /// Relativistic causality system from geometry (geometric_rc) or from the
    /// explicit dropped list (explicit).
    pub fn rc_constraints(&self) -> Result<EqualitySystem, ScenarioError> {
        match self.mode {
            ConstraintMode::GeometricRc | ConstraintMode::Explicit => Ok(self.rows_for(&self.families()?.0)),
            _ => Err(ScenarioError::ModeMismatch("geometric_rc or explicit")),
        }
    }

    /// Like [`Scenario::rc_constraints`] in geometric mode with a choice of
    /// omission rule.
    pub fn rc_constraints_with(&self, rule: OmissionRule) -> Result<EqualitySystem, ScenarioError> {
        Ok(self.rows_for(&self.geometric_families(rule)?.0))
    }

    /// Causal constraints for the scenario's mode.
    pub fn constraints(&self) -> Result<EqualitySystem, ScenarioError> {
        Ok(self.rows_for(&self.families()?.0))
    }

    /// Zero rows for every index whose (outputs, inputs) fail `pred`.
    pub fn support_constraint(&self, pred: impl Fn(&[usize], &[usize]) -> bool) -> EqualitySystem {
        let layout = self.layout();
        let mut sys = EqualitySystem::new(layout.len());
        for idx in 0..layout.len() {
            let (o, x) = layout.decode(idx);
            if !pred(&o, &x) {
                let mut coeffs = vec![Q::zero(); layout.len()];
                coeffs[idx] = Q::one();
                sys.rows.push(Row::new(coeffs, Q::zero()));
            }
        }
        sys
    }

    /// Expands marginal relations into rows over full-distribution indices,
    /// one copy per assignment of the inputs not named in the relation.
    pub fn marginal_constraints(&self, relations: &[MarginalRelation]) -> Result<EqualitySystem, ScenarioError> {
        let layout = self.layout();
        let n = layout.len();
        let mut sys = EqualitySystem::new(n);
        for rel in relations {
            let bad = |m: String| ScenarioError::BadReference(m);
            for t in &rel.terms {
                if t.outs.len() != rel.outputs.len() || t.ins.len() != rel.inputs.len() {
                    return Err(bad("marginal cell arity".into()));
                }
                for (&p, &v) in rel.outputs.iter().zip(&t.outs) {
                    if p >= self.parties.len() || v >= self.parties[p].output_card {
                        return Err(bad(format!("output value {v} of party #{p}")));
                    }
                }
                for (&p, &v) in rel.inputs.iter().zip(&t.ins) {
                    if p >= self.parties.len() || v >= self.parties[p].input_card {
                        return Err(bad(format!("input value {v} of party #{p}")));
                    }
                }
            }
            let others: Vec<usize> = (0..self.parties.len()).filter(|p| !rel.inputs.contains(p)).collect();
            let other_cards: Vec<usize> = others.iter().map(|&p| self.parties[p].input_card).collect();
            for oi in 0..other_cards.iter().product() {
                let ov = dist::decode(oi, &other_cards);
                let mut coeffs = vec![Q::zero(); n];
                for t in &rel.terms {
                    let mut ins = vec![0; self.parties.len()];
                    for (&p, &v) in others.iter().zip(&ov) {
                        ins[p] = v;
                    }
                    for (&p, &v) in rel.inputs.iter().zip(&t.ins) {
                        ins[p] = v;
                    }
                    for outs in layout.outputs() {
                        if rel.outputs.iter().zip(&t.outs).all(|(&p, &v)| outs[p] == v) {
                            coeffs[layout.index(&outs, &ins)] += &t.coeff;
                        }
                    }
                }
                sys.rows.push(Row::new(coeffs, rel.rhs.clone()));
            }
        }
        Ok(sys)
    }

    /// The correlation polytope: non-negativity, normalization per input,
    /// the mode's causal constraints, and the file's support and marginal
    /// constraints.
    pub fn polytope(&self) -> Result<HPolyhedron, ScenarioError> {
        let mut sys = self.constraints()?;
        for s in &self.supports {
            sys.extend(self.support_constraint(|o, x| s.holds(o, x)));
        }
        sys.extend(self.marginal_constraints(&self.marginals)?);
        self.polytope_with(&sys)
    }

    /// Non-negativity and normalization together with the given rows.
    pub fn polytope_with(&self, sys: &EqualitySystem) -> Result<HPolyhedron, ScenarioError> {
        let layout = self.layout();
        let n = layout.len();
        let mut h = HPolyhedron::new(n);
        for x in 0..layout.n_in() {
            let mut coeffs = vec![Q::zero(); n];
            for o in 0..layout.n_out() {
                coeffs[o * layout.n_in() + x] = Q::one();
            }
            h.add_equality(coeffs, Q::one())?;
        }
        for r in &sys.rows {
            h.add_equality(r.coeffs.clone(), r.rhs.clone())?;
        }
        for i in 0..n {
            let mut e = vec![Q::zero(); n];
            e[i] = Q::one();
            h.add_inequality(e, Q::zero())?;
        }
        Ok(h)
    }

    /// Wraps a point of the polytope as a distribution over all parties.
    pub fn distribution(&self, values: Vec<Q>) -> Result<CondDistribution, ScenarioError> {
        CondDistribution::new(self.names(), self.names(), self.layout(), values)
    }

    /// Canonical text form; parsing it gives back an equal scenario.
    pub fn to_text(&self) -> String {
        parse::write(self)
    }

    /// SHA-256 of the canonical text form, hex encoded.
    pub fn hash(&self) -> String {
        let digest = Sha256::digest(self.to_text().as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }
}

#[cfg(test)]
mod tests;
