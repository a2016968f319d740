use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use super::{EntropyError, Roster};
use crate::rational::Q;

/// Whether a form is constrained to be non-negative or zero.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Relation {
    Ge,
    Eq,
}

/// `Σ_S c_S H(S) + c₀` over the subsets of a roster, stored sparsely with
/// subsets in ascending bitmask order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EntropyForm {
    pub roster: Roster,
    coeffs: BTreeMap<u32, Q>,
    pub constant: Q,
}

impl EntropyForm {
    pub fn zero(roster: &Roster) -> Self {
        EntropyForm {
            roster: roster.clone(),
            coeffs: BTreeMap::new(),
            constant: Q::zero(),
        }
    }

    pub fn constant(roster: &Roster, c: Q) -> Self {
        let mut f = Self::zero(roster);
        f.constant = c;
        f
    }

    /// `H(S)`; `H(∅)` is the zero form.
    pub fn entropy(roster: &Roster, mask: u32) -> Self {
        let mut f = Self::zero(roster);
        f.add_term(mask, Q::one());
        f
    }

    /// `I(S:T|V)` for disjoint masks (unchecked).
    pub fn mutual(roster: &Roster, s: u32, t: u32, v: u32) -> Self {
        let mut f = Self::zero(roster);
        f.add_term(s | v, Q::one());
        f.add_term(t | v, Q::one());
        f.add_term(v, -Q::one());
        f.add_term(s | t | v, -Q::one());
        f
    }

    /// Builds a form from a dense coefficient vector indexed by `S − 1`.
    pub fn from_dense(roster: &Roster, dense: &[Q], constant: Q) -> Self {
        let mut f = Self::constant(roster, constant);
        for (i, c) in dense.iter().enumerate() {
            f.add_term(i as u32 + 1, c.clone());
        }
        f
    }

    pub fn add_term(&mut self, mask: u32, c: Q) {
        if mask == 0 || c.is_zero() {
            return;
        }
        let e = self.coeffs.entry(mask).or_insert_with(Q::zero);
        *e += &c;
        if e.is_zero() {
            self.coeffs.remove(&mask);
        }
    }

    pub fn coeff(&self, mask: u32) -> Q {
        self.coeffs.get(&mask).cloned().unwrap_or_else(Q::zero)
    }

    pub fn terms(&self) -> impl Iterator<Item = (u32, &Q)> {
        self.coeffs.iter().map(|(&m, c)| (m, c))
    }

    pub fn support(&self) -> impl Iterator<Item = u32> + '_ {
        self.coeffs.keys().copied()
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty() && self.constant.is_zero()
    }

    pub fn dense(&self) -> Vec<Q> {
        let mut v = vec![Q::zero(); self.roster.num_coords()];
        for (m, c) in self.terms() {
            v[m as usize - 1] = c.clone();
        }
        v
    }

    /// Rewrites the form over another roster that contains every variable of
    /// this one, matching variables by name.
    pub fn relabel(&self, target: &Roster) -> Result<EntropyForm, EntropyError> {
        let map: Vec<u32> = self
            .roster
            .names()
            .iter()
            .map(|n| target.mask(n))
            .collect::<Result<_, _>>()?;
        let mut out = EntropyForm::constant(target, self.constant.clone());
        for (m, c) in self.terms() {
            let tm = (0..map.len()).filter(|k| m >> k & 1 == 1).fold(0, |acc, k| acc | map[k]);
            out.add_term(tm, c.clone());
        }
        Ok(out)
    }

    fn combine(mut self, other: &EntropyForm, sign: i64) -> EntropyForm {
        assert_eq!(self.roster, other.roster, "forms over different rosters");
        let s = Q::from_int(sign);
        for (m, c) in other.terms() {
            self.add_term(m, c * &s);
        }
        self.constant += &(&other.constant * &s);
        self
    }
}

impl Add for EntropyForm {
    type Output = EntropyForm;
    fn add(self, rhs: EntropyForm) -> EntropyForm {
        self.combine(&rhs, 1)
    }
}

impl Sub for EntropyForm {
    type Output = EntropyForm;
    fn sub(self, rhs: EntropyForm) -> EntropyForm {
        self.combine(&rhs, -1)
    }
}

impl Neg for EntropyForm {
    type Output = EntropyForm;
    fn neg(self) -> EntropyForm {
        self * Q::from_int(-1)
    }
}

impl Mul<Q> for EntropyForm {
    type Output = EntropyForm;
    fn mul(mut self, rhs: Q) -> EntropyForm {
        if rhs.is_zero() {
            return EntropyForm::zero(&self.roster);
        }
        for c in self.coeffs.values_mut() {
            *c = &*c * &rhs;
        }
        self.constant = &self.constant * &rhs;
        self
    }
}

impl fmt::Display for EntropyForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        let mut emit = |f: &mut fmt::Formatter<'_>, c: &Q, body: Option<String>| -> fmt::Result {
            let neg = c.is_negative();
            let mag = c.abs();
            match (first, neg) {
                (true, true) => write!(f, "-")?,
                (true, false) => {}
                (false, true) => write!(f, " - ")?,
                (false, false) => write!(f, " + ")?,
            }
            first = false;
            match body {
                Some(b) if mag.is_one() => write!(f, "{b}"),
                Some(b) => write!(f, "{mag:?} {b}"),
                None => write!(f, "{mag:?}"),
            }
        };
        for (m, c) in self.terms() {
            emit(f, c, Some(format!("H({})", self.roster.subset_name(m))))?;
        }
        if !self.constant.is_zero() {
            emit(f, &self.constant, None)?;
        }
        if first {
            write!(f, "0")?;
        }
        Ok(())
    }
}

fn perr(text: &str, msg: impl Into<String>) -> EntropyError {
    EntropyError::Parse {
        text: text.to_string(),
        msg: msg.into(),
    }
}

/// Sums of `[coef] H(S)`, `[coef] H(S|T)`, `[coef] I(S:T)`, `[coef] I(S:T|V)`
/// and rational constants, joined by `+` and `-`.
pub(super) fn parse_form(roster: &Roster, text: &str) -> Result<EntropyForm, EntropyError> {
    let src = text;
    let mut rest = text.trim();
    let mut out = EntropyForm::zero(roster);
    if rest.is_empty() {
        return Err(perr(src, "empty expression"));
    }
    let mut first = true;
    while !rest.is_empty() {
        let mut sign = Q::one();
        if let Some(r) = rest.strip_prefix('+') {
            rest = r.trim_start();
        } else if let Some(r) = rest.strip_prefix('-') {
            sign = -sign;
            rest = r.trim_start();
        } else if !first {
            return Err(perr(src, format!("expected '+' or '-' before '{rest}'")));
        }
        first = false;
        let num_len = rest
            .find(|c: char| !(c.is_ascii_digit() || c == '/'))
            .unwrap_or(rest.len());
        let coef = if num_len > 0 {
            let q: Q = rest[..num_len].parse().map_err(|_| perr(src, "bad coefficient"))?;
            rest = rest[num_len..].trim_start();
            rest = rest.strip_prefix('*').unwrap_or(rest).trim_start();
            q
        } else {
            Q::one()
        };
        let coef = &coef * &sign;
        let term = if let Some(r) = rest.strip_prefix("H(") {
            let close = r.find(')').ok_or_else(|| perr(src, "missing ')'"))?;
            let inner = &r[..close];
            rest = r[close + 1..].trim_start();
            match inner.split_once('|') {
                Some((s, t)) => roster.cond(s, t)?,
                None => roster.h(inner)?,
            }
        } else if let Some(r) = rest.strip_prefix("I(") {
            let close = r.find(')').ok_or_else(|| perr(src, "missing ')'"))?;
            let inner = &r[..close];
            rest = r[close + 1..].trim_start();
            let (st, v) = inner.split_once('|').unwrap_or((inner, ""));
            let (s, t) = st.split_once(':').ok_or_else(|| perr(src, "I(..) needs ':'"))?;
            roster.mi(s, t, v)?
        } else if num_len > 0 {
            EntropyForm::constant(roster, Q::one())
        } else {
            return Err(perr(src, format!("unexpected '{rest}'")));
        };
        out = out + term * coef;
    }
    Ok(out)
}

pub(super) fn parse_relation(roster: &Roster, text: &str) -> Result<(EntropyForm, Relation), EntropyError> {
    for (op, flip, rel) in [(">=", false, Relation::Ge), ("<=", true, Relation::Ge), ("=", false, Relation::Eq)] {
        if let Some((l, r)) = text.split_once(op) {
            let (l, r) = (parse_form(roster, l)?, parse_form(roster, r)?);
            let f = if flip { r - l } else { l - r };
            return Ok((f, rel));
        }
    }
    Err(perr(text, "expected '>=', '<=' or '='"))
}
