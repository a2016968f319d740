use std::collections::BTreeSet;

use itertools::Itertools;

use super::cone::elemental_rows;
use super::{EntropyCone, EntropyError, EntropyForm, Relation, Roster};
use crate::polytope::Limits;
use crate::scenario::Scenario;
use crate::scenario::dist::decode;

/// One output variable of the network: its alphabet size, the inputs with an
/// arrow into it (each with its cardinality), and the subset of those that
/// may change its own marginal.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CopySpec {
    pub name: String,
    pub card: usize,
    pub influencers: Vec<(String, usize)>,
    pub marginal_influencers: Vec<String>,
}

impl CopySpec {
    pub fn new(name: &str, card: usize, influencers: &[(&str, usize)], marginal_influencers: &[&str]) -> Self {
        CopySpec {
            name: name.to_string(),
            card,
            influencers: influencers.iter().map(|(n, c)| (n.to_string(), *c)).collect(),
            marginal_influencers: marginal_influencers.iter().map(|s| s.to_string()).collect(),
        }
    }
}

/// The copy network of a scenario: every output-bearing party gets its own
/// input plus each input of an omitted family containing it as influencers;
/// its own input and the inputs of omitted single-party families are the
/// marginal influencers. Inputs are named as in [`super::entropy_roster`]
/// and listed in party order.
pub fn copy_network(s: &Scenario) -> Result<Vec<CopySpec>, EntropyError> {
    let (_, omitted) = s.families()?;
    let label = |k: usize| {
        let p = &s.parties[k];
        if p.has_output() {
            format!("{}_in", p.name)
        } else {
            p.name.clone()
        }
    };
    let mut out = Vec::new();
    for (j, p) in s.parties.iter().enumerate().filter(|(_, p)| p.has_output()) {
        let mut infl = Vec::new();
        let mut marg = Vec::new();
        for (i, q) in s.parties.iter().enumerate().filter(|(_, q)| q.has_input()) {
            let own = i == j;
            let joint = omitted.iter().any(|o| o.family.input == i && o.family.outputs.contains(&j));
            let single = omitted.iter().any(|o| o.family.input == i && o.family.outputs == [j]);
            if own || joint {
                infl.push((label(i), q.input_card));
            }
            if own || single {
                marg.push(label(i));
            }
        }
        out.push(CopySpec {
            name: p.name.clone(),
            card: p.output_card,
            influencers: infl,
            marginal_influencers: marg,
        });
    }
    Ok(out)
}

/// A copy `Var_(assignment)` of an output variable.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CopyVar {
    pub var: usize,
    pub name: String,
    /// Value of each influencing input, in influencer order.
    pub assignment: Vec<usize>,
}

/// A maximal set of copies that agree on every input they share.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Context {
    /// Indices into [`PostSelection::copies`], ascending.
    pub members: Vec<usize>,
    pub mask: u32,
}

#[derive(Debug, Clone)]
pub struct PostSelection {
    pub roster: Roster,
    pub copies: Vec<CopyVar>,
    pub contexts: Vec<Context>,
    /// Cross-context and independence equalities, each `= 0`.
    pub equalities: Vec<EntropyForm>,
    /// Shannon rows of every context plus the equalities, over the union of
    /// the contexts' subset coordinates.
    pub cone: EntropyCone,
}

/// Builds the post-selected copy system of a network.
///
/// Copies are named `NAME_v₁v₂…` with the influencing input values in network
/// order (just `NAME` without influencers). Contexts are the distinct copy
/// sets picked out by global input assignments, minus non-maximal ones.
/// Equalities: copies of one variable that agree on its marginal influencers
/// have equal entropy, and two copies in a common context with disjoint
/// influencer sets are independent.
pub fn build_postselection_system(network: &[CopySpec]) -> Result<PostSelection, EntropyError> {
    // global input list in order of first appearance
    let mut inputs: Vec<(String, usize)> = Vec::new();
    for spec in network {
        for (name, card) in &spec.influencers {
            match inputs.iter().find(|(n, _)| n == name) {
                Some((_, c)) if c != card => {
                    return Err(EntropyError::Inconsistent(format!(
                        "input {name} has cardinality {c} and {card}"
                    )))
                }
                Some(_) => {}
                None => inputs.push((name.clone(), *card)),
            }
        }
        if spec.card < 1 || spec.influencers.iter().any(|(_, c)| *c < 1) {
            return Err(EntropyError::Inconsistent(format!("empty alphabet in {}", spec.name)));
        }
        if let Some(m) = spec.marginal_influencers.iter().find(|m| !spec.influencers.iter().any(|(n, _)| n == *m)) {
            return Err(EntropyError::Inconsistent(format!(
                "{m} is a marginal influencer of {} but not an influencer",
                spec.name
            )));
        }
        if spec.influencers.iter().map(|(n, _)| n).duplicates().next().is_some() {
            return Err(EntropyError::Inconsistent(format!("repeated influencer of {}", spec.name)));
        }
    }
    let pos = |name: &str| inputs.iter().position(|(n, _)| n == name).unwrap();

    let mut copies = Vec::new();
    let mut first_copy = Vec::new();
    for (v, spec) in network.iter().enumerate() {
        first_copy.push(copies.len());
        let cards: Vec<usize> = spec.influencers.iter().map(|(_, c)| *c).collect();
        let count: usize = cards.iter().product();
        for idx in 0..count {
            let assignment = decode(idx, &cards);
            let suffix: String = assignment.iter().map(|d| d.to_string()).collect();
            let name = if suffix.is_empty() {
                spec.name.clone()
            } else {
                format!("{}_{suffix}", spec.name)
            };
            copies.push(CopyVar { var: v, name, assignment });
        }
    }
    let names: Vec<&str> = copies.iter().map(|c| c.name.as_str()).collect();
    let roster = Roster::new(&names)?;

    // contexts from global assignments
    let global_cards: Vec<usize> = inputs.iter().map(|(_, c)| *c).collect();
    let mut seen = BTreeSet::new();
    let mut sets: Vec<u32> = Vec::new();
    for g in 0..global_cards.iter().product::<usize>() {
        let values = decode(g, &global_cards);
        let mut mask = 0u32;
        for (v, spec) in network.iter().enumerate() {
            let cards: Vec<usize> = spec.influencers.iter().map(|(_, c)| *c).collect();
            let local: Vec<usize> = spec.influencers.iter().map(|(n, _)| values[pos(n)]).collect();
            let idx = local.iter().zip(&cards).fold(0, |acc, (d, c)| acc * c + d);
            mask |= 1 << (first_copy[v] + idx);
        }
        if seen.insert(mask) {
            sets.push(mask);
        }
    }
    let maximal: Vec<u32> = sets
        .iter()
        .copied()
        .filter(|&m| !sets.iter().any(|&o| o != m && o & m == m))
        .collect();
    let contexts: Vec<Context> = maximal
        .iter()
        .map(|&mask| Context {
            members: (0..copies.len()).filter(|k| mask >> k & 1 == 1).collect(),
            mask,
        })
        .collect();

    let h = |m: u32| EntropyForm::entropy(&roster, m);
    let mut equalities: Vec<EntropyForm> = Vec::new();
    for (v, spec) in network.iter().enumerate() {
        let key_slots: Vec<usize> = spec
            .marginal_influencers
            .iter()
            .map(|m| spec.influencers.iter().position(|(n, _)| n == m).unwrap())
            .collect();
        let group: Vec<usize> = (0..copies.len()).filter(|&k| copies[k].var == v).collect();
        let mut classes: Vec<(Vec<usize>, Vec<usize>)> = Vec::new();
        for &k in &group {
            let key: Vec<usize> = key_slots.iter().map(|&s| copies[k].assignment[s]).collect();
            match classes.iter_mut().find(|(kk, _)| *kk == key) {
                Some((_, m)) => m.push(k),
                None => classes.push((key, vec![k])),
            }
        }
        for (_, members) in classes {
            for w in members.windows(2) {
                equalities.push(h(1 << w[0]) - h(1 << w[1]));
            }
        }
    }
    let mut indep_pairs = BTreeSet::new();
    for ctx in &contexts {
        for (&a, &b) in ctx.members.iter().tuple_combinations() {
            let ia = &network[copies[a].var].influencers;
            let ib = &network[copies[b].var].influencers;
            if ia.iter().all(|(n, _)| !ib.iter().any(|(m, _)| m == n)) && indep_pairs.insert((a, b)) {
                equalities.push(h(1 << a | 1 << b) - h(1 << a) - h(1 << b));
            }
        }
    }

    let mut coords: BTreeSet<u32> = BTreeSet::new();
    for ctx in &contexts {
        let mut k = ctx.mask;
        while k != 0 {
            coords.insert(k);
            k = (k - 1) & ctx.mask;
        }
    }
    let mut cone = EntropyCone::over(&roster, coords.into_iter().collect());
    for ctx in &contexts {
        let local = Roster::new(&ctx.members.iter().map(|&k| copies[k].name.as_str()).collect::<Vec<_>>())?;
        for f in elemental_rows(&local) {
            cone.add(&f.relabel(&roster)?, Relation::Ge)?;
        }
    }
    for e in &equalities {
        cone.add(e, Relation::Eq)?;
    }
    Ok(PostSelection {
        roster,
        copies,
        contexts,
        equalities,
        cone,
    })
}

impl PostSelection {
    /// Coordinates over at most `max_size` copies, skipping subsets that
    /// contain copies of both variables of any pair in `excluded` (given as
    /// network variable indices).
    pub fn coordinates_upto(&self, max_size: u32, excluded: &[(usize, usize)]) -> Vec<u32> {
        self.cone
            .coords
            .iter()
            .copied()
            .filter(|&m| m.count_ones() <= max_size)
            .filter(|&m| {
                let has = |v: usize| (0..self.copies.len()).any(|k| m >> k & 1 == 1 && self.copies[k].var == v);
                !excluded.iter().any(|&(a, b)| has(a) && has(b))
            })
            .collect()
    }

    /// The trivially valid part of a projection onto `keep`: the elemental
    /// inequalities of every kept singleton and pair on its own, plus the
    /// equalities expressible on `keep`.
    pub fn pairwise_baseline(&self, keep: &[u32]) -> Result<EntropyCone, EntropyError> {
        let r = &self.roster;
        let mut base = EntropyCone::over(r, keep.to_vec());
        for &m in keep {
            match m.count_ones() {
                1 => base.add(&EntropyForm::entropy(r, m), Relation::Ge)?,
                2 => {
                    let a = m & m.wrapping_neg();
                    let b = m ^ a;
                    let h = |x| EntropyForm::entropy(r, x);
                    base.add(&(h(m) - h(a)), Relation::Ge)?;
                    base.add(&(h(m) - h(b)), Relation::Ge)?;
                    base.add(&EntropyForm::mutual(r, a, b, 0), Relation::Ge)?;
                }
                _ => {}
            }
        }
        for e in &self.equalities {
            if e.support().all(|m| base.position(m).is_some()) {
                base.add(e, Relation::Eq)?;
            }
        }
        Ok(base)
    }

    /// Projects the copy cone onto `keep` and returns it together with the
    /// projected inequalities the pairwise baseline does not imply.
    pub fn project_novel(&self, keep: &[u32], limits: &Limits) -> Result<(EntropyCone, Vec<EntropyForm>), EntropyError> {
        let proj = super::project_entropy_cone(&self.cone, keep, limits)?;
        let base = self.pairwise_baseline(keep)?;
        let mut novel = Vec::new();
        for f in proj.forms().1 {
            if !base.implies(&f)? {
                novel.push(f);
            }
        }
        Ok((proj, novel))
    }
}
