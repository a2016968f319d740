use std::fmt::Write as _;

use itertools::Itertools;
use log::info;

use super::{EntropyError, EntropyForm, Relation, Roster};
use crate::polytope::linalg::affine_solutions;
use crate::polytope::{eliminate, implied, HPolyhedron, Limits, Row};
use crate::rational::Q;
use crate::scenario::Scenario;

/// A polyhedral cone (or polyhedron) over a chosen set of subset
/// coordinates of a roster. Coordinate `k` of `poly` is `H(coords[k])`.
#[derive(Debug, Clone)]
pub struct EntropyCone {
    pub roster: Roster,
    /// Subset masks, strictly increasing.
    pub coords: Vec<u32>,
    pub poly: HPolyhedron,
}

impl EntropyCone {
    /// The unconstrained space over all `2ⁿ − 1` coordinates.
    pub fn full_space(roster: &Roster) -> Self {
        let coords: Vec<u32> = (1..=roster.full()).collect();
        EntropyCone {
            roster: roster.clone(),
            poly: HPolyhedron::new(coords.len()),
            coords,
        }
    }

    pub fn over(roster: &Roster, mut coords: Vec<u32>) -> Self {
        coords.sort_unstable();
        coords.dedup();
        EntropyCone {
            roster: roster.clone(),
            poly: HPolyhedron::new(coords.len()),
            coords,
        }
    }

    pub fn position(&self, mask: u32) -> Option<usize> {
        self.coords.binary_search(&mask).ok()
    }

    pub fn coord_names(&self) -> Vec<String> {
        self.coords
            .iter()
            .map(|&m| format!("H({})", self.roster.subset_name(m)))
            .collect()
    }

    /// `f ≥ 0` (or `f = 0`) as a row over this cone's coordinates.
    pub fn row(&self, f: &EntropyForm) -> Result<Row, EntropyError> {
        if f.roster != self.roster {
            return Err(EntropyError::RosterMismatch);
        }
        let mut coeffs = vec![Q::zero(); self.coords.len()];
        for (m, c) in f.terms() {
            let k = self
                .position(m)
                .ok_or_else(|| EntropyError::MissingCoordinate(self.roster.subset_name(m)))?;
            coeffs[k] = c.clone();
        }
        Ok(Row::new(coeffs, -&f.constant))
    }

    pub fn form(&self, r: &Row) -> EntropyForm {
        let mut f = EntropyForm::constant(&self.roster, -&r.rhs);
        for (c, &m) in r.coeffs.iter().zip(&self.coords) {
            f.add_term(m, c.clone());
        }
        f
    }

    pub fn add(&mut self, f: &EntropyForm, rel: Relation) -> Result<(), EntropyError> {
        let r = self.row(f)?;
        match rel {
            Relation::Ge => self.poly.add_inequality(r.coeffs, r.rhs)?,
            Relation::Eq => self.poly.add_equality(r.coeffs, r.rhs)?,
        }
        Ok(())
    }

    /// Whether every point satisfies `f ≥ 0` (exact LP).
    pub fn implies(&self, f: &EntropyForm) -> Result<bool, EntropyError> {
        Ok(implied(&self.poly, &self.row(f)?).is_implied())
    }

    /// Whether every point satisfies `f = 0`.
    pub fn implies_equality(&self, f: &EntropyForm) -> Result<bool, EntropyError> {
        let r = self.row(f)?;
        Ok(implied(&self.poly, &r).is_implied() && implied(&self.poly, &r.negated()).is_implied())
    }

    /// Equalities (`= 0`) and inequalities (`≥ 0`) as forms.
    pub fn forms(&self) -> (Vec<EntropyForm>, Vec<EntropyForm>) {
        (
            self.poly.equalities().iter().map(|r| self.form(r)).collect(),
            self.poly.inequalities().iter().map(|r| self.form(r)).collect(),
        )
    }

    /// One row per line: `form = 0` or `form >= 0`.
    pub fn listing(&self) -> String {
        let (eqs, ineqs) = self.forms();
        let mut s = String::new();
        for f in eqs {
            let _ = writeln!(s, "{f} = 0");
        }
        for f in ineqs {
            let _ = writeln!(s, "{f} >= 0");
        }
        s
    }

    /// CSV table: a header of coordinate names, then one row per constraint
    /// with its relation, coefficients and constant.
    pub fn coefficient_table(&self) -> String {
        let mut s = String::from("relation");
        for n in self.coord_names() {
            let _ = write!(s, ",{n}");
        }
        s.push_str(",constant\n");
        let rows = self
            .poly
            .equalities()
            .iter()
            .map(|r| ("eq", r))
            .chain(self.poly.inequalities().iter().map(|r| ("ge", r)));
        for (rel, r) in rows {
            s.push_str(rel);
            for c in &r.coeffs {
                let _ = write!(s, ",{c:?}");
            }
            let _ = writeln!(s, ",{:?}", -&r.rhs);
        }
        s
    }
}

/// Elemental Shannon inequalities (each `≥ 0`): `H(N) − H(N∖i)` for every
/// variable, then `I(i:j|K)` for every pair `i < j` and `K ⊆ N∖{i,j}`.
pub fn elemental_rows(roster: &Roster) -> Vec<EntropyForm> {
    let n = roster.len();
    let full = roster.full();
    let mut rows = Vec::with_capacity(n + n * n.saturating_sub(1) / 2 * (1 << n.saturating_sub(2)));
    for i in 0..n {
        rows.push(EntropyForm::entropy(roster, full) - EntropyForm::entropy(roster, full & !(1 << i)));
    }
    for (i, j) in (0..n).tuple_combinations() {
        let rest = full & !(1 << i) & !(1 << j);
        let mut k = rest;
        // all submasks of rest, ascending
        let mut subs = Vec::new();
        loop {
            subs.push(k);
            if k == 0 {
                break;
            }
            k = (k - 1) & rest;
        }
        subs.reverse();
        for k in subs {
            rows.push(EntropyForm::mutual(roster, 1 << i, 1 << j, k));
        }
    }
    rows
}

/// Smallest rational `≥ log₂ c` on the grid `2⁻²⁰`; exact when `c` is a power
/// of two.
pub fn log2_upper(c: usize) -> Q {
    assert!(c >= 1);
    if c.is_power_of_two() {
        return Q::from_int(c.trailing_zeros() as i64);
    }
    let scale = 1i64 << 20;
    let n = ((c as f64).log2() * scale as f64 + 1e-6).ceil() as i64;
    Q::new(n, scale)
}

/// The Shannon cone over all subsets of `roster`, optionally with
/// `H(S) ≤ log₂|S|` for variables with a cardinality bound (`bounds` is empty
/// or has one entry per variable).
pub fn shannon_cone(roster: &Roster, bounds: &[Option<usize>]) -> Result<EntropyCone, EntropyError> {
    if !bounds.is_empty() && bounds.len() != roster.len() {
        return Err(EntropyError::Inconsistent(format!(
            "{} cardinality bounds for {} variables",
            bounds.len(),
            roster.len()
        )));
    }
    let mut cone = EntropyCone::full_space(roster);
    for f in elemental_rows(roster) {
        cone.add(&f, Relation::Ge)?;
    }
    for (k, b) in bounds.iter().enumerate() {
        if let Some(c) = b {
            let f = EntropyForm::constant(roster, log2_upper(*c)) - EntropyForm::entropy(roster, 1 << k);
            cone.add(&f, Relation::Ge)?;
        }
    }
    Ok(cone)
}

/// Causality equalities of a scenario over its entropy roster (see
/// [`super::entropy_roster`]), each meaning `f = 0`.
///
/// For every non-empty set `J` of output-bearing parties let `K` be the
/// inputs that may influence `J`'s joint marginal (own inputs and inputs of
/// omitted families) and `I` the remaining ones. The default emits
/// `H(A_J X_all) = H(A_J X_K) + Σ_{i∈I} H(X_i)` per `J` with non-empty `I`,
/// followed by mutual independence of all inputs. With `expand`, every input
/// subset `T` meeting `I` contributes `H(A_J X_T) = H(A_J X_{T∩K}) +
/// Σ_{i∈T∖K} H(X_i)`. Splitting `H(X_I)` into singletons relies on the inputs
/// being independent; both versions generate the same cone together with the
/// Shannon rows.
pub fn rc_entropy_equalities(s: &Scenario, expand: bool) -> Result<Vec<EntropyForm>, EntropyError> {
    let (names, _) = super::entropy_roster(s);
    let roster = Roster::new(&names)?;
    let (kept, _) = s.families()?;
    let out_parties: Vec<usize> = (0..s.parties.len()).filter(|&i| s.parties[i].has_output()).collect();
    let in_parties: Vec<usize> = (0..s.parties.len()).filter(|&i| s.parties[i].has_input()).collect();
    let n_out = out_parties.len();
    let in_bit = |party: usize| -> u32 { 1 << (n_out + in_parties.iter().position(|&p| p == party).unwrap()) };
    let all_inputs: u32 = in_parties.iter().fold(0, |m, &p| m | in_bit(p));
    let h = |m: u32| EntropyForm::entropy(&roster, m);
    let mut out: Vec<EntropyForm> = Vec::new();
    let mut push = |f: EntropyForm| {
        if !f.is_zero() && !out.contains(&f) {
            out.push(f);
        }
    };
    for k in 1..=n_out {
        for j in (0..n_out).combinations(k) {
            let j_parties: Vec<usize> = j.iter().map(|&q| out_parties[q]).collect();
            let j_mask: u32 = j.iter().fold(0, |m, &q| m | 1 << q);
            let free: u32 = in_parties
                .iter()
                .filter(|&&i| !j_parties.contains(&i) && kept.iter().any(|f| f.outputs == j_parties && f.input == i))
                .fold(0, |m, &i| m | in_bit(i));
            let infl = all_inputs & !free;
            if free == 0 {
                continue;
            }
            let subsets: Vec<u32> = if expand {
                submasks(all_inputs).into_iter().filter(|t| t & free != 0).collect()
            } else {
                vec![all_inputs]
            };
            for t in subsets {
                let mut f = h(j_mask | t) - h(j_mask | (t & infl));
                for b in (0..32).map(|k| 1u32 << k).filter(|b| t & free & b != 0) {
                    f = f - h(b);
                }
                push(f);
            }
        }
    }
    if in_parties.len() >= 2 {
        let mut f = h(all_inputs);
        for &i in &in_parties {
            f = f - h(in_bit(i));
        }
        push(f);
    }
    Ok(out)
}

/// Submasks of `m` in decreasing order, excluding 0.
fn submasks(m: u32) -> Vec<u32> {
    let mut v = Vec::new();
    let mut k = m;
    while k != 0 {
        v.push(k);
        k = (k - 1) & m;
    }
    v
}

/// Projects `cone` onto the coordinates `keep` by Fourier–Motzkin
/// elimination of all others. The result is canonical and irredundant.
pub fn project_entropy_cone(cone: &EntropyCone, keep: &[u32], limits: &Limits) -> Result<EntropyCone, EntropyError> {
    for &m in keep {
        if cone.position(m).is_none() {
            return Err(EntropyError::MissingCoordinate(cone.roster.subset_name(m)));
        }
    }
    let drop: Vec<usize> = (0..cone.coords.len()).filter(|&k| !keep.contains(&cone.coords[k])).collect();
    info!(
        "projecting {} coordinates onto {} ({} eliminated)",
        cone.coords.len(),
        cone.coords.len() - drop.len(),
        drop.len()
    );
    let poly = eliminate(&cone.poly, &drop, limits)?;
    let coords: Vec<u32> = (0..cone.coords.len())
        .filter(|k| !drop.contains(k))
        .map(|k| cone.coords[k])
        .collect();
    Ok(EntropyCone {
        roster: cone.roster.clone(),
        coords,
        poly,
    })
}

/// Outcome of a certificate check.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CertificateReport {
    /// `target − Σ terms` lies in the span of the equalities.
    pub decomposes: bool,
    /// Multipliers of the equalities when it does.
    pub multipliers: Option<Vec<Q>>,
    /// Per term: implied non-negative by the elemental Shannon rows together
    /// with the equalities.
    pub term_valid: Vec<bool>,
}

impl CertificateReport {
    pub fn passed(&self) -> bool {
        self.decomposes && self.term_valid.iter().all(|&b| b)
    }
}

/// Checks `target = Σ terms + Σ μ_k equalities_k` exactly and that every term
/// is non-negative on the Shannon cone cut by the equalities.
pub fn certificate_details(
    terms: &[EntropyForm],
    equalities: &[EntropyForm],
    target: &EntropyForm,
) -> Result<CertificateReport, EntropyError> {
    let roster = &target.roster;
    if terms.iter().chain(equalities).any(|f| &f.roster != roster) {
        return Err(EntropyError::RosterMismatch);
    }
    let mut diff = target.clone();
    for t in terms {
        diff = diff - t.clone();
    }
    // one linear equation per coordinate and one for the constant
    let mut d = diff.dense();
    d.push(diff.constant.clone());
    let cols: Vec<Vec<Q>> = equalities
        .iter()
        .map(|e| {
            let mut v = e.dense();
            v.push(e.constant.clone());
            v
        })
        .collect();
    let rows: Vec<(Vec<Q>, Q)> = (0..d.len())
        .map(|c| (cols.iter().map(|v| v[c].clone()).collect(), d[c].clone()))
        .collect();
    let multipliers = affine_solutions(&rows, equalities.len()).map(|p| p.base);

    let mut cone = shannon_cone(roster, &[])?;
    for e in equalities {
        cone.add(e, Relation::Eq)?;
    }
    let term_valid = terms.iter().map(|t| cone.implies(t)).collect::<Result<_, _>>()?;
    Ok(CertificateReport {
        decomposes: multipliers.is_some(),
        multipliers,
        term_valid,
    })
}

/// Boolean form of [`certificate_details`].
pub fn certificate_check(
    terms: &[EntropyForm],
    equalities: &[EntropyForm],
    target: &EntropyForm,
) -> Result<bool, EntropyError> {
    Ok(certificate_details(terms, equalities, target)?.passed())
}
