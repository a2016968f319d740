//! Scenario text format.
//!
//! ```text
//! # comment
//! [scenario]
//! name = triangle
//! dimension = 2            # optional, inferred from positions
//!
//! [party A]
//! inputs = 1               # default 1
//! outputs = 2              # default 1
//! position = 0 0 0         # t x [y [z]], exact rationals
//!
//! [constraints]
//! mode = geometric_rc      # full_ns | line | geometric_rc | explicit
//! drop = A C | B           # explicit mode: family "marginal of A C vs input of B"
//! support = Z.in = A.out ^ B.out
//! marginal = A C | Y : 3 P(10|1) = P(00|1)
//! ```
//!
//! `drop`, `support` and `marginal` may repeat.

use std::fmt::Write as _;

use super::{ConstraintMode, Family, MarginalRelation, Party, Scenario, ScenarioError, SupportExpr};
use crate::lightcone::SpacetimePoint;
use crate::rational::Q;

enum Section {
    None,
    Scenario,
    Party(usize),
    Constraints,
}

pub fn parse(text: &str) -> Result<Scenario, ScenarioError> {
    let mut name = String::from("unnamed");
    let mut dimension: Option<usize> = None;
    let mut parties: Vec<Party> = Vec::new();
    let mut mode: Option<ConstraintMode> = None;
    let mut drops: Vec<(usize, String)> = Vec::new();
    let mut supports: Vec<(usize, String)> = Vec::new();
    let mut marginals: Vec<(usize, String)> = Vec::new();
    let mut section = Section::None;

    for (ln, raw) in text.lines().enumerate() {
        let line_no = ln + 1;
        let err = |msg: String| ScenarioError::Parse { line: line_no, msg };
        let line = raw.split('#').next().unwrap().trim();
        if line.is_empty() {
            continue;
        }
        if let Some(head) = line.strip_prefix('[') {
            let head = head.strip_suffix(']').ok_or_else(|| err("unterminated section header".into()))?;
            let mut words = head.split_whitespace();
            section = match (words.next(), words.next(), words.next()) {
                (Some("scenario"), None, _) => Section::Scenario,
                (Some("constraints"), None, _) => Section::Constraints,
                (Some("party"), Some(pname), None) => {
                    if parties.iter().any(|p| p.name == pname) {
                        return Err(err(format!("duplicate party {pname}")));
                    }
                    parties.push(Party::new(pname, 1, 1));
                    Section::Party(parties.len() - 1)
                }
                _ => return Err(err(format!("unknown section [{head}]"))),
            };
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .map(|(k, v)| (k.trim(), v.trim()))
            .ok_or_else(|| err(format!("expected 'key = value', got '{line}'")))?;
        let card = |v: &str| -> Result<usize, ScenarioError> {
            match v.parse::<usize>() {
                Ok(c) if c >= 1 => Ok(c),
                _ => Err(err(format!("cardinality must be a positive integer, got '{v}'"))),
            }
        };
        match section {
            Section::None => return Err(err("key outside of any section".into())),
            Section::Scenario => match key {
                "name" => name = value.to_string(),
                "dimension" => {
                    let d: usize = value.parse().map_err(|_| err(format!("bad dimension '{value}'")))?;
                    if !(1..=3).contains(&d) {
                        return Err(err("dimension must be 1, 2 or 3".into()));
                    }
                    dimension = Some(d);
                }
                _ => return Err(err(format!("unknown key '{key}' in [scenario]"))),
            },
            Section::Party(i) => match key {
                "inputs" => parties[i].input_card = card(value)?,
                "outputs" => parties[i].output_card = card(value)?,
                "position" => {
                    let coords: Vec<Q> = value
                        .split_whitespace()
                        .map(|c| c.parse::<Q>())
                        .collect::<Result<_, _>>()
                        .map_err(|e| err(e.to_string()))?;
                    if coords.len() < 2 {
                        return Err(err("position needs a time and 1 to 3 spatial coordinates".into()));
                    }
                    let p = SpacetimePoint::new(coords[0].clone(), coords[1..].to_vec()).map_err(|e| err(e.to_string()))?;
                    parties[i].location = Some(p);
                }
                _ => return Err(err(format!("unknown key '{key}' in party block"))),
            },
            Section::Constraints => match key {
                "mode" => mode = Some(value.parse().map_err(|e: ScenarioError| err(e.to_string()))?),
                "drop" => drops.push((line_no, value.to_string())),
                "support" => supports.push((line_no, value.to_string())),
                "marginal" => marginals.push((line_no, value.to_string())),
                _ => return Err(err(format!("unknown key '{key}' in [constraints]"))),
            },
        }
    }

    let names: Vec<String> = parties.iter().map(|p| p.name.clone()).collect();
    let at = |line: usize| move |e: ScenarioError| ScenarioError::Parse { line, msg: e.to_string() };
    let inferred = parties.iter().find_map(|p| p.location.as_ref().map(|l| l.dim()));
    let mut s = Scenario {
        name,
        dimension: dimension.or(inferred),
        parties,
        mode: mode.unwrap_or(ConstraintMode::FullNs),
        dropped: Vec::new(),
        supports: Vec::new(),
        marginals: Vec::new(),
    };
    for (line, d) in drops {
        let (outs, input) = d.split_once('|').ok_or_else(|| ScenarioError::Parse {
            line,
            msg: "drop needs the form 'OUT OUT | IN'".into(),
        })?;
        let outs: Vec<usize> = outs
            .split_whitespace()
            .map(|n| s.party_index(n))
            .collect::<Result<_, _>>()
            .map_err(at(line))?;
        let input = s.party_index(input.trim()).map_err(at(line))?;
        s.dropped.push(Family::new(outs, input));
    }
    for (line, t) in supports {
        s.supports.push(SupportExpr::parse(&t, &names).map_err(at(line))?);
    }
    for (line, t) in marginals {
        s.marginals.push(MarginalRelation::parse(&t, &names).map_err(at(line))?);
    }
    s.validate()?;
    Ok(s)
}

pub fn write(s: &Scenario) -> String {
    let names = s.names();
    let mut out = String::new();
    let _ = writeln!(out, "[scenario]\nname = {}", s.name);
    if let Some(d) = s.dimension {
        let _ = writeln!(out, "dimension = {d}");
    }
    for p in &s.parties {
        let _ = writeln!(out, "\n[party {}]\ninputs = {}\noutputs = {}", p.name, p.input_card, p.output_card);
        if let Some(l) = &p.location {
            let coords: Vec<String> = std::iter::once(&l.t).chain(&l.x).map(Q::to_string).collect();
            let _ = writeln!(out, "position = {}", coords.join(" "));
        }
    }
    let _ = writeln!(out, "\n[constraints]\nmode = {}", s.mode);
    for f in &s.dropped {
        let _ = writeln!(out, "drop = {}", f.describe(&names));
    }
    for e in &s.supports {
        let _ = writeln!(out, "support = {e}");
    }
    for m in &s.marginals {
        let _ = writeln!(out, "marginal = {}", m.describe(&names));
    }
    out
}
