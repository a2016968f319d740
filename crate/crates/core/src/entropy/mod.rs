//! Entropy vectors of distributions, Shannon cones with causality
//! equalities, projections, certificates and post-selected copy systems.
//!
//! Coordinates are indexed by non-empty subsets of a [`Roster`], encoded as
//! bitmasks (bit `k` is the `k`-th variable); dense vectors store subset `S`
//! at position `S − 1`.

mod cone;
mod form;
mod postselect;

use std::fmt;
use std::sync::Arc;

use crate::polytope::PolyError;
use crate::rational::Q;
use crate::scenario::{CondDistribution, Scenario, ScenarioError};

pub use cone::{
    certificate_check, certificate_details, elemental_rows, log2_upper, project_entropy_cone, rc_entropy_equalities,
    shannon_cone, CertificateReport, EntropyCone,
};
pub use form::{EntropyForm, Relation};
pub use postselect::{build_postselection_system, copy_network, Context, CopySpec, CopyVar, PostSelection};

/// Largest roster handled (4095 subset coordinates).
pub const MAX_VARS: usize = 12;

/// Tolerance for all floating point entropy comparisons.
pub const TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum EntropyError {
    #[error("roster of {0} variables exceeds the limit of {MAX_VARS}")]
    RosterTooLarge(usize),
    #[error("duplicate variable name '{0}'")]
    DuplicateName(String),
    #[error("unknown variable '{0}'")]
    UnknownVariable(String),
    #[error("negative probability mass")]
    NegativeMass,
    #[error("distribution sums to {0}, not 1")]
    BadNormalization(String),
    #[error("variable sets overlap")]
    Overlap,
    #[error("forms are over different rosters")]
    RosterMismatch,
    #[error("coordinate H({0}) is not part of this cone")]
    MissingCoordinate(String),
    #[error("cannot parse '{text}': {msg}")]
    Parse { text: String, msg: String },
    #[error("{0}")]
    Inconsistent(String),
    #[error("malformed distribution: {0}")]
    Malformed(String),
    #[error(transparent)]
    Poly(#[from] PolyError),
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
}

/// Ordered, uniquely named random variables.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Roster(Arc<Vec<String>>);

impl Roster {
    pub fn new<S: AsRef<str>>(names: &[S]) -> Result<Self, EntropyError> {
        if names.len() > MAX_VARS {
            return Err(EntropyError::RosterTooLarge(names.len()));
        }
        let names: Vec<String> = names.iter().map(|s| s.as_ref().to_string()).collect();
        for (i, n) in names.iter().enumerate() {
            if names[..i].contains(n) {
                return Err(EntropyError::DuplicateName(n.clone()));
            }
        }
        Ok(Roster(Arc::new(names)))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn names(&self) -> &[String] {
        &self.0
    }

    /// Number of subset coordinates, `2ⁿ − 1`.
    pub fn num_coords(&self) -> usize {
        (1usize << self.len()) - 1
    }

    pub fn full(&self) -> u32 {
        ((1u64 << self.len()) - 1) as u32
    }

    fn compact(&self) -> bool {
        self.0.iter().all(|n| n.chars().count() == 1)
    }

    /// Parses a variable set. With single-character names the set is written
    /// by juxtaposition (`ABZ`); otherwise names are separated by spaces or
    /// commas. The empty string is the empty set.
    pub fn mask(&self, text: &str) -> Result<u32, EntropyError> {
        let mut m = 0u32;
        let mut add = |name: &str| -> Result<(), EntropyError> {
            let k = self
                .0
                .iter()
                .position(|n| n == name)
                .ok_or_else(|| EntropyError::UnknownVariable(name.to_string()))?;
            m |= 1 << k;
            Ok(())
        };
        let text = text.trim();
        if self.compact() && !text.contains([' ', ',']) {
            for c in text.chars() {
                add(&c.to_string())?;
            }
        } else {
            for tok in text.split([' ', ',']).filter(|t| !t.is_empty()) {
                add(tok)?;
            }
        }
        Ok(m)
    }

    /// Display name of a subset: juxtaposed single-character names, or
    /// space-separated otherwise.
    pub fn subset_name(&self, mask: u32) -> String {
        let parts = (0..self.len()).filter(|k| mask >> k & 1 == 1).map(|k| self.0[k].as_str());
        if self.compact() {
            parts.collect()
        } else {
            parts.collect::<Vec<_>>().join(" ")
        }
    }

    /// `H(S)` as a form.
    pub fn h(&self, set: &str) -> Result<EntropyForm, EntropyError> {
        Ok(EntropyForm::entropy(self, self.mask(set)?))
    }

    /// `H(S|T) = H(ST) − H(T)`.
    pub fn cond(&self, s: &str, t: &str) -> Result<EntropyForm, EntropyError> {
        let (s, t) = (self.mask(s)?, self.mask(t)?);
        Ok(EntropyForm::entropy(self, s | t) - EntropyForm::entropy(self, t))
    }

    /// `I(S:T|V) = H(SV) + H(TV) − H(V) − H(STV)`; `given` may be empty.
    pub fn mi(&self, s: &str, t: &str, given: &str) -> Result<EntropyForm, EntropyError> {
        let (s, t, v) = (self.mask(s)?, self.mask(t)?, self.mask(given)?);
        if s & t != 0 || s & v != 0 || t & v != 0 {
            return Err(EntropyError::Overlap);
        }
        Ok(EntropyForm::mutual(self, s, t, v))
    }

    pub fn parse_form(&self, text: &str) -> Result<EntropyForm, EntropyError> {
        form::parse_form(self, text)
    }

    /// Parses `LHS >= RHS`, `LHS <= RHS` or `LHS = RHS` into a form `f` with
    /// `f ≥ 0` or `f = 0`.
    pub fn parse_relation(&self, text: &str) -> Result<(EntropyForm, Relation), EntropyError> {
        form::parse_relation(self, text)
    }
}

impl fmt::Display for Roster {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0.join(" "))
    }
}

/// Joint entropies of every non-empty subset, in bits.
#[derive(Debug, Clone, PartialEq)]
pub struct EntropyVector {
    pub roster: Roster,
    /// `values[S − 1] = H(S)`.
    pub values: Vec<f64>,
}

impl EntropyVector {
    pub fn get(&self, mask: u32) -> f64 {
        if mask == 0 {
            0.0
        } else {
            self.values[mask as usize - 1]
        }
    }

    pub fn eval(&self, f: &EntropyForm) -> f64 {
        assert_eq!(f.roster, self.roster, "form and vector rosters differ");
        f.terms().map(|(m, c)| c.to_f64() * self.get(m)).sum::<f64>() + f.constant.to_f64()
    }

    /// Smallest value of any elemental Shannon row; non-negative (up to
    /// rounding) for every vector coming from a distribution.
    pub fn min_elemental(&self) -> f64 {
        cone::elemental_rows(&self.roster)
            .iter()
            .map(|r| self.eval(r))
            .fold(f64::INFINITY, f64::min)
    }
}

/// Exact joint distribution over a roster; flat mixed-radix index with the
/// first variable most significant.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct JointDistribution {
    pub roster: Roster,
    pub cards: Vec<usize>,
    pub probs: Vec<Q>,
}

impl JointDistribution {
    pub fn new(roster: Roster, cards: Vec<usize>, probs: Vec<Q>) -> Result<Self, EntropyError> {
        if cards.len() != roster.len() {
            return Err(EntropyError::Malformed(format!(
                "{} cardinalities for {} variables",
                cards.len(),
                roster.len()
            )));
        }
        let size: usize = cards.iter().product();
        if probs.len() != size {
            return Err(EntropyError::Malformed(format!("{} entries, expected {size}", probs.len())));
        }
        if probs.iter().any(Q::is_negative) {
            return Err(EntropyError::NegativeMass);
        }
        let total: Q = probs.iter().cloned().sum();
        if !total.is_one() {
            return Err(EntropyError::BadNormalization(total.to_string()));
        }
        Ok(JointDistribution { roster, cards, probs })
    }

    /// `P(outputs, inputs) = P(outputs | inputs) · w(inputs)` over the
    /// scenario's [`entropy_roster`].
    pub fn from_scenario(s: &Scenario, dist: &CondDistribution, input_weights: &[Q]) -> Result<Self, EntropyError> {
        let (names, cards) = entropy_roster(s);
        if dist.layout != s.layout() {
            return Err(EntropyError::Malformed("distribution layout differs from the scenario".into()));
        }
        if input_weights.len() != dist.layout.n_in() {
            return Err(EntropyError::Malformed(format!(
                "{} input weights for {} input assignments",
                input_weights.len(),
                dist.layout.n_in()
            )));
        }
        // parties with trivial alphabets contribute factor-1 radix digits, so
        // the conditional layout's flat order is already the roster order
        Self::new(Roster::new(&names)?, cards, dist.joint(input_weights))
    }

    /// Entropy (bits) of every non-empty marginal.
    pub fn entropy_vector(&self) -> EntropyVector {
        let n = self.roster.len();
        let p: Vec<f64> = self.probs.iter().map(Q::to_f64).collect();
        let digits: Vec<Vec<usize>> = (0..p.len()).map(|i| crate::scenario::dist::decode(i, &self.cards)).collect();
        let mut values = Vec::with_capacity(self.roster.num_coords());
        for mask in 1..=self.roster.full() {
            let vars: Vec<usize> = (0..n).filter(|k| mask >> k & 1 == 1).collect();
            let sub: Vec<usize> = vars.iter().map(|&k| self.cards[k]).collect();
            let mut marg = vec![0.0; sub.iter().product()];
            for (pi, d) in p.iter().zip(&digits) {
                if *pi == 0.0 {
                    continue;
                }
                let idx = vars.iter().fold(0, |acc, &k| acc * self.cards[k] + d[k]);
                marg[idx] += pi;
            }
            values.push(shannon(&marg));
        }
        EntropyVector {
            roster: self.roster.clone(),
            values,
        }
    }
}

/// Entropy vector of a rational joint distribution.
pub fn entropy_vector(joint: &JointDistribution) -> EntropyVector {
    joint.entropy_vector()
}

/// `−Σ p log₂ p` with `0 log 0 = 0`.
pub fn shannon(p: &[f64]) -> f64 {
    -p.iter().filter(|&&x| x > 0.0).map(|&x| x * x.log2()).sum::<f64>()
}

/// `I(S:T|V)` evaluated on a vector; `given = 0` for the unconditional case.
pub fn mutual_information(v: &EntropyVector, s: u32, t: u32, given: u32) -> Result<f64, EntropyError> {
    if s & t != 0 || s & given != 0 || t & given != 0 {
        return Err(EntropyError::Overlap);
    }
    Ok(v.get(s | given) + v.get(t | given) - v.get(given) - v.get(s | t | given))
}

/// Variables of a scenario's entropy description with their cardinalities:
/// outputs of output-bearing parties, then inputs of input-bearing parties.
/// A party with both is split into `NAME` (output) and `NAME_in` (input).
pub fn entropy_roster(s: &Scenario) -> (Vec<String>, Vec<usize>) {
    let mut names = Vec::new();
    let mut cards = Vec::new();
    for p in s.parties.iter().filter(|p| p.has_output()) {
        names.push(p.name.clone());
        cards.push(p.output_card);
    }
    for p in s.parties.iter().filter(|p| p.has_input()) {
        names.push(if p.has_output() { format!("{}_in", p.name) } else { p.name.clone() });
        cards.push(p.input_card);
    }
    (names, cards)
}

/// `H(B₀|A₀) + H(A₁|B₀) + H(A₀|B₁) − H(A₁|B₁)` from a two-party conditional
/// distribution with binary inputs; the subscripts are the parties' inputs.
pub fn chsh_entropic(p: &CondDistribution) -> Result<f64, EntropyError> {
    if p.layout.out_cards.len() != 2 || p.layout.in_cards != [2, 2] {
        return Err(EntropyError::Malformed(
            "expected two output slots and two binary input slots".into(),
        ));
    }
    let h = |x: usize, y: usize| pair_entropies(p, x, y);
    let (a0, _, ab00) = h(0, 0);
    let (_, b0, ab10) = h(1, 0);
    let (_, b1, ab01) = h(0, 1);
    let (_, b1b, ab11) = h(1, 1);
    Ok((ab00 - a0) + (ab10 - b0) + (ab01 - b1) - (ab11 - b1b))
}

/// `(H(A), H(B), H(AB))` of the block at inputs `(x, y)`.
pub(crate) fn pair_entropies(p: &CondDistribution, x: usize, y: usize) -> (f64, f64, f64) {
    let (ca, cb) = (p.layout.out_cards[0], p.layout.out_cards[1]);
    let mut ab = vec![0.0; ca * cb];
    let mut a = vec![0.0; ca];
    let mut b = vec![0.0; cb];
    for i in 0..ca {
        for j in 0..cb {
            let v = p.get(&[i, j], &[x, y]).to_f64();
            ab[i * cb + j] = v;
            a[i] += v;
            b[j] += v;
        }
    }
    (shannon(&a), shannon(&b), shannon(&ab))
}

#[cfg(test)]
mod tests;
