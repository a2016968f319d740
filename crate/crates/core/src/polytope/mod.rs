//! Exact rational polyhedra: vertex enumeration, convex hulls, projection,
//! feasibility and implication.

pub mod bitset;
pub mod dd;
pub mod fm;
pub mod linalg;
pub mod lp;

use std::collections::HashSet;
use std::fmt::Write as _;
use std::sync::Mutex;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::rational::{dot, make_primitive, Q};
use linalg::{affine_solutions, rref};
use lp::{minimize, LpOutcome};

pub use fm::eliminate;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum PolyError {
    #[error("row width {got} does not match dimension {expected}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("{stage}: {what} limit of {limit} exceeded ({progress})")]
    ResourceLimit {
        stage: String,
        what: &'static str,
        limit: String,
        progress: String,
    },
    #[error("coordinate index {0} out of range")]
    BadIndex(usize),
    #[error("cannot describe an empty vertex set")]
    EmptyInput,
}

/// Explicit resource caps. Exceeding any of them is a hard error, never a
/// silently truncated result.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Limits {
    pub max_rows: usize,
    pub max_vertices: usize,
    pub time_budget: Option<Duration>,
    /// Fourier–Motzkin runs LP redundancy removal after an elimination step
    /// once the row count exceeds this.
    pub redundancy_threshold: usize,
    /// Interval between progress lines on the log; `None` disables them.
    pub progress_interval: Option<Duration>,
}

impl Default for Limits {
    fn default() -> Self {
        Limits {
            max_rows: 2_000_000,
            max_vertices: 10_000_000,
            time_budget: None,
            redundancy_threshold: 64,
            progress_interval: Some(Duration::from_secs(10)),
        }
    }
}

/// Running budget derived from [`Limits`] for a single computation.
pub struct Budget {
    pub limits: Limits,
    start: Instant,
    last_report: Mutex<Instant>,
}

impl Budget {
    pub fn new(limits: &Limits) -> Self {
        let now = Instant::now();
        Budget {
            limits: limits.clone(),
            start: now,
            last_report: Mutex::new(now),
        }
    }

    pub fn check_time(&self, stage: &str, step: usize, size: usize) -> Result<(), PolyError> {
        if let Some(t) = self.limits.time_budget {
            if self.start.elapsed() > t {
                return Err(PolyError::ResourceLimit {
                    stage: stage.to_string(),
                    what: "time budget",
                    limit: format!("{}s", t.as_secs_f64()),
                    progress: format!("step {step}, {size} rows/rays alive"),
                });
            }
        }
        Ok(())
    }

    pub fn check_rays(&self, stage: &str, n: usize) -> Result<(), PolyError> {
        if n > self.limits.max_vertices {
            return Err(PolyError::ResourceLimit {
                stage: stage.to_string(),
                what: "vertex/ray",
                limit: self.limits.max_vertices.to_string(),
                progress: format!("{n} rays"),
            });
        }
        Ok(())
    }

    pub fn check_rows(&self, stage: &str, n: usize) -> Result<(), PolyError> {
        if n > self.limits.max_rows {
            return Err(PolyError::ResourceLimit {
                stage: stage.to_string(),
                what: "row",
                limit: self.limits.max_rows.to_string(),
                progress: format!("{n} rows"),
            });
        }
        Ok(())
    }

    pub fn progress(&self, stage: &str, done: usize, total: usize, alive: usize) {
        let Some(every) = self.limits.progress_interval else {
            return;
        };
        let mut last = self.last_report.lock().unwrap();
        if last.elapsed() >= every {
            *last = Instant::now();
            log::info!(
                "{stage}: {done}/{total} processed, {alive} alive, {:.1}s elapsed",
                self.start.elapsed().as_secs_f64()
            );
        }
    }
}

/// A single linear row `coeffs · x ⋈ rhs`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Row {
    pub coeffs: Vec<Q>,
    pub rhs: Q,
}

impl Row {
    pub fn new(coeffs: Vec<Q>, rhs: Q) -> Self {
        Row { coeffs, rhs }
    }

    pub fn is_trivial(&self) -> bool {
        self.coeffs.iter().all(Q::is_zero)
    }

    pub fn eval(&self, x: &[Q]) -> Q {
        dot(&self.coeffs, x)
    }

    fn as_pair(&self) -> (Vec<Q>, Q) {
        (self.coeffs.clone(), self.rhs.clone())
    }

    /// Positive rescaling to a primitive integer row.
    pub fn normalized_ineq(&self) -> Row {
        let mut v = self.coeffs.clone();
        v.push(self.rhs.clone());
        make_primitive(&mut v);
        let rhs = v.pop().unwrap();
        Row { coeffs: v, rhs }
    }

    /// Primitive integer row with a positive leading coefficient.
    pub fn normalized_eq(&self) -> Row {
        let mut r = self.normalized_ineq();
        let lead = r
            .coeffs
            .iter()
            .chain(std::iter::once(&r.rhs))
            .find(|x| !x.is_zero())
            .map(Q::signum)
            .unwrap_or(1);
        if lead < 0 {
            r.coeffs.iter_mut().for_each(|x| *x = -&*x);
            r.rhs = -&r.rhs;
        }
        r
    }

    pub fn negated(&self) -> Row {
        Row {
            coeffs: self.coeffs.iter().map(|x| -x).collect(),
            rhs: -&self.rhs,
        }
    }
}

/// `{x : E x = e, A x ≥ b}` over exact rationals.
///
/// Rows are normalized to primitive integer form on insertion and exact
/// duplicates are dropped; insertion order is otherwise preserved, which keeps
/// generation deterministic. [`HPolyhedron::canonical`] produces the fully
/// canonical irredundant form.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HPolyhedron {
    dim: usize,
    equalities: Vec<Row>,
    inequalities: Vec<Row>,
    #[serde(skip)]
    seen: HashSet<(bool, Row)>,
}

impl HPolyhedron {
    pub fn new(dim: usize) -> Self {
        HPolyhedron {
            dim,
            equalities: Vec::new(),
            inequalities: Vec::new(),
            seen: HashSet::new(),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn equalities(&self) -> &[Row] {
        &self.equalities
    }

    pub fn inequalities(&self) -> &[Row] {
        &self.inequalities
    }

    fn check_width(&self, coeffs: &[Q]) -> Result<(), PolyError> {
        if coeffs.len() != self.dim {
            return Err(PolyError::DimensionMismatch {
                expected: self.dim,
                got: coeffs.len(),
            });
        }
        Ok(())
    }

    /// Adds `coeffs · x = rhs`.
    pub fn add_equality(&mut self, coeffs: Vec<Q>, rhs: Q) -> Result<(), PolyError> {
        self.check_width(&coeffs)?;
        let r = Row::new(coeffs, rhs).normalized_eq();
        if r.is_trivial() && r.rhs.is_zero() {
            return Ok(());
        }
        if self.seen.insert((true, r.clone())) {
            self.equalities.push(r);
        }
        Ok(())
    }

    /// Adds `coeffs · x ≥ rhs`.
    pub fn add_inequality(&mut self, coeffs: Vec<Q>, rhs: Q) -> Result<(), PolyError> {
        self.check_width(&coeffs)?;
        let r = Row::new(coeffs, rhs).normalized_ineq();
        if r.is_trivial() && !r.rhs.is_positive() {
            return Ok(());
        }
        if self.seen.insert((false, r.clone())) {
            self.inequalities.push(r);
        }
        Ok(())
    }

    /// Adds `coeffs · x ≤ rhs`.
    pub fn add_upper(&mut self, coeffs: Vec<Q>, rhs: Q) -> Result<(), PolyError> {
        let neg: Vec<Q> = coeffs.iter().map(|x| -x).collect();
        self.add_inequality(neg, -rhs)
    }

    pub fn extend(&mut self, other: &HPolyhedron) -> Result<(), PolyError> {
        for r in &other.equalities {
            self.add_equality(r.coeffs.clone(), r.rhs.clone())?;
        }
        for r in &other.inequalities {
            self.add_inequality(r.coeffs.clone(), r.rhs.clone())?;
        }
        Ok(())
    }

    pub fn contains(&self, x: &[Q]) -> bool {
        x.len() == self.dim
            && self.equalities.iter().all(|r| r.eval(x) == r.rhs)
            && self.inequalities.iter().all(|r| r.eval(x) >= r.rhs)
    }

    fn eq_pairs(&self) -> Vec<(Vec<Q>, Q)> {
        self.equalities.iter().map(Row::as_pair).collect()
    }

    fn ge_pairs(&self) -> Vec<(Vec<Q>, Q)> {
        self.inequalities.iter().map(Row::as_pair).collect()
    }

    pub fn minimize(&self, objective: &[Q]) -> LpOutcome {
        minimize(self.dim, &self.eq_pairs(), &self.ge_pairs(), objective)
    }

    /// Lists the rows as text using the provided coordinate names.
    pub fn describe(&self, names: &[String]) -> String {
        let mut s = String::new();
        for r in &self.equalities {
            let _ = writeln!(s, "{} = {}", format_linear(&r.coeffs, names), r.rhs);
        }
        for r in &self.inequalities {
            let _ = writeln!(s, "{} >= {}", format_linear(&r.coeffs, names), r.rhs);
        }
        s
    }

    /// Canonical irredundant form: implicit equalities are detected and moved
    /// to the equality block, equalities are put in reduced row echelon form,
    /// inequalities are reduced modulo the equalities, redundant inequalities
    /// are removed and every block is sorted. Two descriptions of the same
    /// non-empty polyhedron have identical canonical forms.
    pub fn canonical(&self) -> HPolyhedron {
        let Some(_) = feasible(self) else {
            let mut out = HPolyhedron::new(self.dim);
            out.inequalities.push(Row::new(vec![Q::zero(); self.dim], Q::one()));
            return out;
        };
        let mut eqs = self.eq_pairs();
        let mut ineqs: Vec<Row> = self.inequalities.clone();
        // implicit equalities: rows whose maximum over P equals their rhs
        let mut i = 0;
        while i < ineqs.len() {
            let neg: Vec<Q> = ineqs[i].coeffs.iter().map(|x| -x).collect();
            let tight = match minimize(self.dim, &eqs, &pairs(&ineqs), &neg) {
                LpOutcome::Optimal { value, .. } => -value == ineqs[i].rhs,
                _ => false,
            };
            if tight {
                let r = ineqs.remove(i);
                eqs.push(r.as_pair());
                i = 0;
                continue;
            }
            i += 1;
        }
        let eq_rows = canonical_equalities(&eqs, self.dim);
        let mut reduced: Vec<Row> = ineqs
            .iter()
            .map(|r| reduce_modulo(r, &eq_rows).normalized_ineq())
            .filter(|r| !r.is_trivial())
            .collect();
        reduced.sort();
        reduced.dedup();
        let eq_pairs: Vec<(Vec<Q>, Q)> = eq_rows.iter().map(Row::as_pair).collect();
        let kept = remove_redundant(self.dim, &eq_pairs, reduced);
        let mut out = HPolyhedron::new(self.dim);
        for r in eq_rows {
            out.seen.insert((true, r.clone()));
            out.equalities.push(r);
        }
        for r in kept {
            out.seen.insert((false, r.clone()));
            out.inequalities.push(r);
        }
        out
    }

    /// Whether both polyhedra describe the same point set (checked by mutual
    /// implication of all rows).
    pub fn same_set(&self, other: &HPolyhedron) -> bool {
        let a_in_b = other.equalities.iter().all(|r| {
            implied(self, r).is_implied() && implied(self, &r.negated()).is_implied()
        }) && other.inequalities.iter().all(|r| implied(self, r).is_implied());
        let b_in_a = self.equalities.iter().all(|r| {
            implied(other, r).is_implied() && implied(other, &r.negated()).is_implied()
        }) && self.inequalities.iter().all(|r| implied(other, r).is_implied());
        a_in_b && b_in_a
    }
}

fn pairs(rows: &[Row]) -> Vec<(Vec<Q>, Q)> {
    rows.iter().map(Row::as_pair).collect()
}

/// Equalities in reduced row echelon form, each scaled to a primitive integer
/// row with positive pivot.
fn canonical_equalities(eqs: &[(Vec<Q>, Q)], dim: usize) -> Vec<Row> {
    let mut m: Vec<Vec<Q>> = eqs
        .iter()
        .map(|(a, b)| {
            let mut r = a.clone();
            r.push(b.clone());
            r
        })
        .collect();
    rref(&mut m, dim);
    m.into_iter()
        .map(|mut r| {
            let rhs = r.pop().unwrap();
            Row::new(r, rhs).normalized_eq()
        })
        .collect()
}

/// Subtracts multiples of RREF equality rows so the row has zeros in every
/// equality pivot column.
fn reduce_modulo(r: &Row, eq_rows: &[Row]) -> Row {
    let mut out = r.clone();
    for e in eq_rows {
        let Some(p) = e.coeffs.iter().position(|x| !x.is_zero()) else {
            continue;
        };
        if out.coeffs[p].is_zero() {
            continue;
        }
        let f = &out.coeffs[p] / &e.coeffs[p];
        for (x, y) in out.coeffs.iter_mut().zip(&e.coeffs) {
            if !y.is_zero() {
                *x -= &(&f * y);
            }
        }
        out.rhs -= &(&f * &e.rhs);
    }
    out
}

/// Sequential LP redundancy removal; the first pass checks every row against
/// all others, rows that survive it are irredundant for good.
pub(crate) fn remove_redundant(dim: usize, eqs: &[(Vec<Q>, Q)], rows: Vec<Row>) -> Vec<Row> {
    let all = pairs(&rows);
    let mut candidate = vec![false; rows.len()];
    for i in 0..rows.len() {
        let others: Vec<(Vec<Q>, Q)> = all
            .iter()
            .enumerate()
            .filter(|&(j, _)| j != i)
            .map(|(_, p)| p.clone())
            .collect();
        candidate[i] = row_implied(dim, eqs, &others, &rows[i]);
    }
    let mut alive = vec![true; rows.len()];
    for i in 0..rows.len() {
        if !candidate[i] {
            continue;
        }
        let others: Vec<(Vec<Q>, Q)> = (0..rows.len())
            .filter(|&j| j != i && alive[j])
            .map(|j| all[j].clone())
            .collect();
        if row_implied(dim, eqs, &others, &rows[i]) {
            alive[i] = false;
        }
    }
    rows.into_iter()
        .zip(alive)
        .filter_map(|(r, a)| a.then_some(r))
        .collect()
}

fn row_implied(dim: usize, eqs: &[(Vec<Q>, Q)], ges: &[(Vec<Q>, Q)], row: &Row) -> bool {
    match minimize(dim, eqs, ges, &row.coeffs) {
        LpOutcome::Optimal { value, .. } => value >= row.rhs,
        LpOutcome::Unbounded => false,
        LpOutcome::Infeasible => true,
    }
}

/// Result of asking whether a polyhedron implies `row · x ≥ rhs`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Implication {
    Implied,
    /// The row's minimum over the polyhedron is below its rhs; `witness`
    /// attains that minimum.
    Violated { minimum: Q, witness: Vec<Q> },
    /// The row is unbounded below over the polyhedron.
    Unbounded,
}

impl Implication {
    pub fn is_implied(&self) -> bool {
        matches!(self, Implication::Implied)
    }
}

/// Whether every point of `h` satisfies `row.coeffs · x ≥ row.rhs`. An empty
/// polyhedron implies everything.
pub fn implied(h: &HPolyhedron, row: &Row) -> Implication {
    assert_eq!(row.coeffs.len(), h.dim, "row width must match dimension");
    match h.minimize(&row.coeffs) {
        LpOutcome::Optimal { value, point } => {
            if value >= row.rhs {
                Implication::Implied
            } else {
                Implication::Violated {
                    minimum: value,
                    witness: point,
                }
            }
        }
        LpOutcome::Unbounded => Implication::Unbounded,
        LpOutcome::Infeasible => Implication::Implied,
    }
}

/// Exact feasibility; returns a witness point when non-empty.
pub fn feasible(h: &HPolyhedron) -> Option<Vec<Q>> {
    lp::find_point(h.dim, &h.eq_pairs(), &h.ge_pairs())
}

/// Vertices, extreme rays and lines of a polyhedron, in canonical order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VPolyhedron {
    pub dim: usize,
    pub vertices: Vec<Vec<Q>>,
    pub rays: Vec<Vec<Q>>,
    pub lines: Vec<Vec<Q>>,
}

impl VPolyhedron {
    pub fn empty(dim: usize) -> Self {
        VPolyhedron {
            dim,
            vertices: Vec::new(),
            rays: Vec::new(),
            lines: Vec::new(),
        }
    }

    pub fn from_points(dim: usize, points: Vec<Vec<Q>>) -> Self {
        let mut v = VPolyhedron {
            dim,
            vertices: points,
            rays: Vec::new(),
            lines: Vec::new(),
        };
        v.canonicalize();
        v
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn canonicalize(&mut self) {
        self.vertices.sort();
        self.vertices.dedup();
        for r in self.rays.iter_mut().chain(self.lines.iter_mut()) {
            make_primitive(r);
        }
        self.rays.sort();
        self.rays.dedup();
        self.lines.sort();
        self.lines.dedup();
    }

    /// One vertex per line, coordinates as `num/den` separated by single
    /// spaces, lexicographically sorted.
    pub fn export_vertices(&self) -> String {
        let mut s = String::new();
        for v in &self.vertices {
            let line: Vec<String> = v.iter().map(Q::to_string).collect();
            s.push_str(&line.join(" "));
            s.push('\n');
        }
        s
    }

    pub fn parse_vertices(text: &str) -> Result<VPolyhedron, String> {
        let mut pts = Vec::new();
        let mut dim = None;
        for (ln, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let v: Result<Vec<Q>, _> = line.split_whitespace().map(str::parse).collect();
            let v = v.map_err(|e| format!("line {}: {e}", ln + 1))?;
            match dim {
                None => dim = Some(v.len()),
                Some(d) if d != v.len() => {
                    return Err(format!("line {}: expected {d} coordinates, got {}", ln + 1, v.len()))
                }
                _ => {}
            }
            pts.push(v);
        }
        Ok(VPolyhedron::from_points(dim.unwrap_or(0), pts))
    }
}

/// Enumerates the vertices (and rays/lines) of `h` by double description in
/// the parameter space of its equality system.
pub fn enumerate_vertices(h: &HPolyhedron, limits: &Limits) -> Result<VPolyhedron, PolyError> {
    let budget = Budget::new(limits);
    let Some(param) = affine_solutions(&h.eq_pairs(), h.dim) else {
        return Ok(VPolyhedron::empty(h.dim));
    };
    let k = param.dim();
    // homogenized cone over (lambda, t): lambda >= 0 and a(x0 + N t) >= b lambda
    let mut rows: Vec<Vec<Q>> = Vec::with_capacity(h.inequalities.len() + 1);
    let mut lam = vec![Q::zero(); k + 1];
    lam[0] = Q::one();
    rows.push(lam);
    for r in &h.inequalities {
        let (a, b) = param.pull_back(&r.coeffs, &r.rhs);
        if a.iter().all(Q::is_zero) {
            if b.is_positive() {
                return Ok(VPolyhedron::empty(h.dim));
            }
            continue;
        }
        let mut row = Vec::with_capacity(k + 1);
        row.push(-b);
        row.extend(a);
        make_primitive(&mut row);
        rows.push(row);
    }
    rows.dedup();
    let cone = dd::double_description(k + 1, &rows, &budget)?;
    let mut out = VPolyhedron::empty(h.dim);
    let to_dir = |t: &[Q]| -> Vec<Q> {
        let mut x = vec![Q::zero(); h.dim];
        for (tj, d) in t.iter().zip(&param.directions) {
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
    };
    for l in &cone.lineality {
        debug_assert!(l[0].is_zero(), "lambda >= 0 is never a line direction");
        out.lines.push(to_dir(&l[1..]));
    }
    for r in &cone.rays {
        if r[0].is_zero() {
            out.rays.push(to_dir(&r[1..]));
        } else {
            let lam = &r[0];
            let t: Vec<Q> = r[1..].iter().map(|x| x / lam).collect();
            out.vertices.push(param.eval(&t));
        }
    }
    if out.vertices.is_empty() && !out.lines.is_empty() {
        // a pointless polyhedron with lines still has a minimal face; the
        // cone generators always include one positive-lambda ray in that case
        debug_assert!(false, "non-empty cone without a positive-lambda ray");
    }
    out.canonicalize();
    Ok(out)
}

/// Irredundant H-representation of the convex hull of the given generators.
pub fn facets(v: &VPolyhedron, limits: &Limits) -> Result<HPolyhedron, PolyError> {
    if v.vertices.is_empty() {
        return Err(PolyError::EmptyInput);
    }
    let n = v.dim;
    let budget = Budget::new(limits);
    // polar cone over (c0, c): c0 + c·v >= 0 per vertex, c·r >= 0 per ray
    let mut rows: Vec<Vec<Q>> = Vec::new();
    for p in &v.vertices {
        let mut row = Vec::with_capacity(n + 1);
        row.push(Q::one());
        row.extend(p.iter().cloned());
        rows.push(row);
    }
    for r in &v.rays {
        let mut row = vec![Q::zero()];
        row.extend(r.iter().cloned());
        rows.push(row);
    }
    for l in &v.lines {
        let mut row = vec![Q::zero()];
        row.extend(l.iter().cloned());
        rows.push(row.iter().map(|x| -x).collect());
        rows.push(row);
    }
    for r in rows.iter_mut() {
        make_primitive(r);
    }
    let cone = dd::double_description(n + 1, &rows, &budget)?;
    let mut h = HPolyhedron::new(n);
    for l in &cone.lineality {
        if l[1..].iter().all(Q::is_zero) {
            continue;
        }
        h.add_equality(l[1..].to_vec(), -&l[0])?;
    }
    for r in &cone.rays {
        if r[1..].iter().all(Q::is_zero) {
            continue;
        }
        h.add_inequality(r[1..].to_vec(), -&r[0])?;
    }
    Ok(h.canonical())
}

/// `a₁·x₁ + … ` with coordinate names, skipping zero coefficients.
pub fn format_linear(coeffs: &[Q], names: &[String]) -> String {
    let mut s = String::new();
    for (c, name) in coeffs.iter().zip(names) {
        if c.is_zero() {
            continue;
        }
        let mag = c.abs();
        let sign = if c.is_negative() { "-" } else { "+" };
        if s.is_empty() {
            if c.is_negative() {
                s.push('-');
            }
        } else {
            let _ = write!(s, " {sign} ");
        }
        if mag.is_one() {
            s.push_str(name);
        } else {
            let _ = write!(s, "{:?} {name}", mag);
        }
    }
    if s.is_empty() {
        s.push('0');
    }
    s
}
