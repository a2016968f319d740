use serde::Serialize;

use super::AnalysisError;
use crate::entropy::{EntropyCone, EntropyForm, Relation};

#[derive(Debug, Clone, Serialize)]
pub struct ExpectedRow {
    pub form: String,
    /// Implied by the projected cone (both directions for equalities).
    pub implied: bool,
    /// Some projected row is equivalent to it modulo the projected
    /// equalities.
    pub appears: bool,
}

/// Comparison of a projected cone with expected equalities and inequalities.
#[derive(Debug, Clone, Serialize)]
pub struct ProjectionAudit {
    pub equalities: Vec<ExpectedRow>,
    pub inequalities: Vec<ExpectedRow>,
    /// Projected equalities not implied by the expected ones.
    pub extra_equalities: Vec<String>,
    /// Projected inequalities equivalent to no expected inequality.
    pub other_rows: Vec<String>,
    /// Of those, the ones the reference cone does not imply.
    pub other_rows_unexplained: Vec<String>,
}

impl ProjectionAudit {
    pub fn passed(&self) -> bool {
        self.equalities.iter().all(|r| r.implied)
            && self.extra_equalities.is_empty()
            && self.inequalities.iter().all(|r| r.implied && r.appears)
            && self.other_rows_unexplained.is_empty()
    }
}

fn with(base: &EntropyCone, f: &EntropyForm, rel: Relation) -> Result<EntropyCone, AnalysisError> {
    let mut c = base.clone();
    c.add(f, rel)?;
    Ok(c)
}

/// Checks that `proj` has exactly the `expected_eq` equalities, that every
/// form in `expected_ge` is implied and present as a row, and that every
/// other row is implied by `reference` (a cone over any superset of the
/// coordinates, e.g. the unconstrained Shannon cone plus the equalities).
pub fn audit_projection(
    proj: &EntropyCone,
    expected_eq: &[EntropyForm],
    expected_ge: &[EntropyForm],
    reference: &EntropyCone,
) -> Result<ProjectionAudit, AnalysisError> {
    let (eqs, ineqs) = proj.forms();
    let mut eq_only = EntropyCone::over(&proj.roster, proj.coords.clone());
    for e in &eqs {
        eq_only.add(e, Relation::Eq)?;
    }
    let mut expected_only = EntropyCone::over(&proj.roster, proj.coords.clone());
    for e in expected_eq {
        expected_only.add(e, Relation::Eq)?;
    }
    let equalities = expected_eq
        .iter()
        .map(|e| -> Result<ExpectedRow, AnalysisError> {
            let implied = proj.implies_equality(e)?;
            Ok(ExpectedRow {
                form: e.to_string(),
                implied,
                appears: implied,
            })
        })
        .collect::<Result<Vec<_>, _>>()?;
    let extra_equalities = eqs
        .iter()
        .map(|e| Ok::<_, AnalysisError>((e, expected_only.implies_equality(e)?)))
        .filter_map(|r| match r {
            Ok((e, false)) => Some(Ok(e.to_string())),
            Ok(_) => None,
            Err(x) => Some(Err(x)),
        })
        .collect::<Result<Vec<_>, _>>()?;

    let equivalent = |a: &EntropyForm, b: &EntropyForm| -> Result<bool, AnalysisError> {
        Ok(with(&eq_only, a, Relation::Ge)?.implies(b)? && with(&eq_only, b, Relation::Ge)?.implies(a)?)
    };
    let mut matched = vec![false; ineqs.len()];
    let mut inequalities = Vec::new();
    for c in expected_ge {
        let implied = proj.implies(c)?;
        let mut appears = false;
        for (k, r) in ineqs.iter().enumerate() {
            if equivalent(r, c)? {
                matched[k] = true;
                appears = true;
            }
        }
        inequalities.push(ExpectedRow {
            form: c.to_string(),
            implied,
            appears,
        });
    }
    let mut other_rows = Vec::new();
    let mut other_rows_unexplained = Vec::new();
    for (k, r) in ineqs.iter().enumerate() {
        if matched[k] {
            continue;
        }
        other_rows.push(r.to_string());
        if !reference.implies(r)? {
            other_rows_unexplained.push(r.to_string());
        }
    }
    Ok(ProjectionAudit {
        equalities,
        inequalities,
        extra_equalities,
        other_rows,
        other_rows_unexplained,
    })
}
