use std::collections::BTreeSet;

use anyhow::{anyhow, bail, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use rcausal_core::analyses::{self, EdgeTarget};
use rcausal_core::entropy::{
    build_postselection_system, certificate_details, copy_network, entropy_roster, project_entropy_cone,
    rc_entropy_equalities, shannon_cone, EntropyCone, EntropyForm, Relation, Roster,
};
use rcausal_core::lightcone::{boost_point, Boost};
use rcausal_core::polytope::{enumerate_vertices, VPolyhedron};
use rcausal_core::scenario::{ConstraintMode, Family, OmissionRule, Scenario};
use rcausal_core::Q;

use crate::config::{read_vertices, RunConfig};
use crate::{Analysis, EntropyCmd};

fn q_strings(v: &[Q]) -> Vec<String> {
    v.iter().map(Q::to_string).collect()
}

fn family_set(s: &Scenario) -> Result<BTreeSet<Family>> {
    Ok(s.families()?.0.into_iter().collect())
}

pub fn geometry(cfg: &RunConfig, boosts: usize) -> Result<()> {
    let s = &cfg.scenario;
    let names = s.names();
    let (kept, omitted) = s.families()?;
    println!("scenario {} ({} mode)", s.name, s.mode);
    println!("retained {} families:", kept.len());
    for f in &kept {
        println!("  {}", f.describe(&names));
    }
    println!("omitted {} families:", omitted.len());
    for o in &omitted {
        println!("  {}  [{}]", o.family.describe(&names), o.reason);
    }
    let mut body = json!({
        "mode": s.mode.as_str(),
        "retained": kept.iter().map(|f| f.describe(&names)).collect::<Vec<_>>(),
        "omitted": omitted.iter().map(|o| json!({"family": o.family.describe(&names), "reason": o.reason})).collect::<Vec<_>>(),
    });
    if boosts > 0 {
        if s.mode != ConstraintMode::GeometricRc || s.parties.iter().any(|p| p.location.is_none()) {
            bail!("--boosts needs a geometric scenario with every party located");
        }
        let d = s.dimension.unwrap_or(0);
        let reference = family_set(s)?;
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        let mut failures = Vec::new();
        for trial in 0..boosts {
            let m: i64 = rng.gen_range(2..=12);
            let k: i64 = rng.gen_range(0..m);
            let dir: Vec<Q> = (0..d.saturating_sub(1))
                .map(|_| Q::new(rng.gen_range(-5..=5), rng.gen_range(1..=5)))
                .collect();
            let b = Boost::pythagorean(m, k, &dir)?;
            let mut t = s.clone();
            for p in &mut t.parties {
                let loc = p.location.as_ref().expect("checked above");
                p.location = Some(boost_point(loc, &b)?);
            }
            if family_set(&t)? != reference
                || t.geometric_families(OmissionRule::RemovedInput)?.1.len() != omitted.len()
            {
                failures.push(trial);
            }
        }
        println!("boost invariance: {}/{} boosts agree", boosts - failures.len(), boosts);
        body["boosts"] = json!({"seed": cfg.seed, "trials": boosts, "failures": failures});
    }
    cfg.report("geometry", body)
}

fn enumerate(cfg: &RunConfig) -> Result<VPolyhedron> {
    let h = cfg.scenario.polytope()?;
    log::info!("enumerating vertices of {} ({} coordinates)", cfg.scenario.name, h.dim());
    Ok(enumerate_vertices(&h, &cfg.limits)?)
}

fn vertices_of(cfg: &RunConfig, file: &Option<std::path::PathBuf>) -> Result<Vec<Vec<Q>>> {
    match file {
        Some(p) => read_vertices(p, cfg.scenario.num_vars()),
        None => Ok(enumerate(cfg)?.vertices),
    }
}

pub fn vertices(cfg: &RunConfig) -> Result<()> {
    let v = enumerate(cfg)?;
    if !v.rays.is_empty() || !v.lines.is_empty() {
        bail!("polyhedron is unbounded; check the scenario's normalization");
    }
    cfg.write("vertices.txt", &v.export_vertices())?;
    cfg.report("vertices", json!({"dimension": v.dim, "count": v.vertices.len(), "file": "vertices.txt"}))?;
    println!("{} vertices", v.vertices.len());
    Ok(())
}

fn parse_family(s: &Scenario, text: &str) -> Result<Family> {
    let (outs, input) = text
        .split_once('|')
        .ok_or_else(|| anyhow!("family '{text}' needs the form 'A B | Z'"))?;
    let outputs = outs
        .split_whitespace()
        .map(|n| s.party_index(n))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(Family::new(outputs, s.party_index(input.trim())?))
}

fn two_party_omissions(s: &Scenario) -> Result<Vec<Family>> {
    Ok(s.families()?
        .1
        .into_iter()
        .map(|o| o.family)
        .filter(|f| f.outputs.len() == 2)
        .collect())
}

fn roster_of(s: &Scenario) -> Result<Roster> {
    Ok(Roster::new(&entropy_roster(s).0)?)
}

pub fn analyze(cfg: &RunConfig, a: Analysis) -> Result<()> {
    let s = &cfg.scenario;
    let names = s.names();
    match a {
        Analysis::Census { vertices, families } => {
            let fams = match families {
                Some(t) => t.split(';').map(|f| parse_family(s, f)).collect::<Result<Vec<_>>>()?,
                None => two_party_omissions(s)?,
            };
            if fams.is_empty() {
                bail!("no families to test; pass --families");
            }
            let v = vertices_of(cfg, &vertices)?;
            let c = analyses::violation_census(s, &v, &fams)?;
            for p in 0..1u32 << fams.len() {
                let violated: Vec<&str> = (0..fams.len())
                    .filter(|k| p >> k & 1 == 1)
                    .map(|k| c.families[k].as_str())
                    .collect();
                println!("{:>8}  violate {{{}}}", c.count(p), violated.join("; "));
            }
            println!("{:>8}  total", c.total);
            cfg.report("census", c.to_json())
        }
        Analysis::Monogamy { vertices, expr } => {
            let f = roster_of(s)?.parse_form(&expr)?;
            let v = vertices_of(cfg, &vertices)?;
            let m = analyses::monogamy_max(s, &v, &f, cfg.input_weights.as_deref(), false)?;
            println!("max {} = {:.12} at vertex {}", m.expression, m.max, m.argmax);
            if !m.polytope_bound {
                println!("inputs are not uniform: the maximum holds at the vertices only");
            }
            cfg.write("monogamy.csv", &m.to_csv())?;
            cfg.report("monogamy", serde_json::to_value(&m)?)
        }
        Analysis::Classify { vertices, swap } => {
            let pairs: Vec<Vec<(String, String)>> = swap
                .iter()
                .map(|g| {
                    g.split(',')
                        .map(|p| {
                            let (a, b) = p.split_once('=').ok_or_else(|| anyhow!("swap '{p}' needs 'A=C'"))?;
                            Ok((a.trim().to_string(), b.trim().to_string()))
                        })
                        .collect::<Result<Vec<_>>>()
                })
                .collect::<Result<_>>()?;
            let borrowed: Vec<Vec<(&str, &str)>> = pairs
                .iter()
                .map(|g| g.iter().map(|(a, b)| (a.as_str(), b.as_str())).collect())
                .collect();
            let slices: Vec<&[(&str, &str)]> = borrowed.iter().map(Vec::as_slice).collect();
            let gens = analyses::symmetry_generators(s, &slices)?;
            let v = vertices_of(cfg, &vertices)?;
            let orbits = analyses::classify_orbits(&v, &gens)?;
            let order = analyses::group_order(&gens);
            println!("group of order {order}: {} orbits", orbits.len());
            for o in &orbits {
                let values: BTreeSet<&Q> = o.representative.iter().collect();
                let vals: Vec<String> = values.iter().map(|q| q.to_string()).collect();
                println!("  size {:>3}  entries {{{}}}", o.size, vals.join(", "));
            }
            let table: Vec<Value> = orbits
                .iter()
                .map(|o| json!({"size": o.size, "members": o.members, "representative": q_strings(&o.representative)}))
                .collect();
            cfg.report("classify", json!({"group_order": order, "orbits": table}))
        }
        Analysis::EdgeStudy { target } => {
            if s.marginals.is_empty() {
                bail!("the scenario has no marginal relations to study");
            }
            let targets = if target.is_empty() {
                let src = &s.marginals[0];
                let mut t = vec![EdgeTarget {
                    outputs: src.outputs.clone(),
                    inputs: src.inputs.clone(),
                }];
                for f in two_party_omissions(s)? {
                    let e = EdgeTarget {
                        outputs: f.outputs,
                        inputs: vec![f.input],
                    };
                    if !t.contains(&e) {
                        t.push(e);
                    }
                }
                t
            } else {
                target
                    .iter()
                    .map(|t| {
                        let f = parse_family(s, t)?;
                        Ok(EdgeTarget {
                            outputs: f.outputs,
                            inputs: vec![f.input],
                        })
                    })
                    .collect::<Result<_>>()?
            };
            let rep = analyses::edge_marginal_study(s, &s.marginals, &targets, &cfg.limits)?;
            println!("source {}: {} vertices", rep.source, rep.vertex_count);
            for t in &rep.targets {
                println!(
                    "  {:<10} same shape feasible: {:<5}  in projection: {:<5}  hull check: {}",
                    t.edge, t.simultaneous_feasible, t.shape_in_projection, t.hull_agrees
                );
            }
            cfg.report("edge_study", serde_json::to_value(&rep)?)
        }
        Analysis::JammingScan { steps } => {
            let scan = analyses::jamming_scan(s, steps)?;
            for p in &scan.points {
                println!(
                    "p = {:<6} feasible {:<5} extended {:<5} max P(A+B=X) {:<6} heuristic {}",
                    p.p.to_string(),
                    p.feasible,
                    p.extended_feasible,
                    p.max_ab.as_ref().map_or("-".into(), Q::to_string),
                    p.heuristic_bound
                );
            }
            println!("feasible at {{{}}}", q_strings(&scan.feasible_at).join(", "));
            println!("variants agree: {}", scan.variants_agree);
            cfg.report("jamming_scan", serde_json::to_value(&scan)?)
        }
        Analysis::Chsh { dist } => {
            let d = match dist {
                Some(p) => {
                    let v = read_vertices(&p, s.num_vars())?;
                    let first = v.into_iter().next().ok_or_else(|| anyhow!("{}: empty", p.display()))?;
                    if !s.polytope()?.contains(&first) {
                        bail!("{}: the distribution is not in the scenario's polytope", p.display());
                    }
                    s.distribution(first)?
                }
                None => analyses::chsh_violating_distribution(s)?,
            };
            let m = analyses::entropic_chsh_monogamy(&d)?;
            println!("H_CHSH(AB) = {:.12}", m.chsh_ab);
            println!("H_CHSH(BC) = {:.12}", m.chsh_bc);
            println!("AB + BC    = {:.12}", m.ab_plus_bc);
            println!("weak form  = {:.12}", m.weak);
            let _ = names;
            cfg.report("chsh", serde_json::to_value(m)?)
        }
    }
}

fn scenario_cone(s: &Scenario, expand: bool, bounds: bool) -> Result<EntropyCone> {
    let (names, cards) = entropy_roster(s);
    let r = Roster::new(&names)?;
    let b: Vec<Option<usize>> = if bounds { cards.into_iter().map(Some).collect() } else { Vec::new() };
    let mut cone = shannon_cone(&r, &b)?;
    for e in rc_entropy_equalities(s, expand)? {
        cone.add(&e, Relation::Eq)?;
    }
    Ok(cone)
}

fn write_cone(cfg: &RunConfig, stem: &str, cone: &EntropyCone) -> Result<()> {
    cfg.write(&format!("{stem}.txt"), &cone.listing())?;
    cfg.write(&format!("{stem}.csv"), &cone.coefficient_table())
}

pub fn entropy(cfg: &RunConfig, e: EntropyCmd) -> Result<()> {
    let s = &cfg.scenario;
    match e {
        EntropyCmd::ShannonCone { expand, bounds } => {
            let cone = scenario_cone(s, expand, bounds)?;
            let (eqs, ineqs) = cone.forms();
            println!("{} variables: {} equalities, {} inequalities", cone.roster.len(), eqs.len(), ineqs.len());
            write_cone(cfg, "shannon_cone", &cone)?;
            cfg.report(
                "shannon_cone",
                json!({"roster": cone.roster.names(), "equalities": eqs.len(), "inequalities": ineqs.len()}),
            )
        }
        EntropyCmd::Project { keep, expand } => {
            let cone = scenario_cone(s, expand, false)?;
            let masks = keep
                .split(';')
                .map(|t| cone.roster.mask(t.trim()))
                .collect::<Result<Vec<_>, _>>()?;
            let proj = project_entropy_cone(&cone, &masks, &cfg.limits)?;
            print!("{}", proj.listing());
            let (eqs, ineqs) = proj.forms();
            write_cone(cfg, "projection", &proj)?;
            cfg.report(
                "projection",
                json!({
                    "kept": proj.coord_names(),
                    "equalities": eqs.iter().map(|f| f.to_string()).collect::<Vec<_>>(),
                    "inequalities": ineqs.iter().map(|f| f.to_string()).collect::<Vec<_>>(),
                }),
            )
        }
        EntropyCmd::Certify {
            target,
            term,
            equality,
            rc,
        } => {
            let r = roster_of(s)?;
            let t = r.parse_form(&target)?;
            let terms = term.iter().map(|x| r.parse_form(x)).collect::<Result<Vec<_>, _>>()?;
            let mut eqs = Vec::new();
            for x in &equality {
                let (f, rel) = r.parse_relation(x)?;
                if rel != Relation::Eq {
                    bail!("'{x}' is not an equality");
                }
                eqs.push(f);
            }
            if rc {
                eqs.extend(rc_entropy_equalities(s, true)?);
            }
            let rep = certificate_details(&terms, &eqs, &t)?;
            println!("{}", if rep.passed() { "PASS" } else { "FAIL" });
            if !rep.decomposes {
                println!("target minus the terms is not a combination of the equalities");
            }
            for (k, ok) in rep.term_valid.iter().enumerate() {
                if !ok {
                    println!("term {} is not implied non-negative: {}", k + 1, terms[k]);
                }
            }
            cfg.report(
                "certificate",
                json!({
                    "target": t.to_string(),
                    "passed": rep.passed(),
                    "decomposes": rep.decomposes,
                    "multipliers": rep.multipliers.as_deref().map(q_strings),
                    "term_valid": rep.term_valid,
                }),
            )
        }
        EntropyCmd::Postselect {
            max_size,
            exclude,
            check,
        } => {
            let net = copy_network(s)?;
            let ps = build_postselection_system(&net)?;
            let var = |n: &str| {
                net.iter()
                    .position(|c| c.name == n)
                    .ok_or_else(|| anyhow!("no output variable {n}"))
            };
            let excluded = exclude
                .iter()
                .map(|x| {
                    let (a, b) = x.split_once(':').ok_or_else(|| anyhow!("exclude '{x}' needs 'B:C'"))?;
                    Ok((var(a.trim())?, var(b.trim())?))
                })
                .collect::<Result<Vec<_>>>()?;
            let keep = ps.coordinates_upto(max_size, &excluded);
            let (proj, novel) = ps.project_novel(&keep, &cfg.limits)?;
            println!(
                "{} copies, {} contexts, {} equalities, {} coordinates ({} kept)",
                ps.copies.len(),
                ps.contexts.len(),
                ps.equalities.len(),
                ps.cone.coords.len(),
                keep.len()
            );
            println!("{} projected inequalities beyond the pairwise baseline:", novel.len());
            for f in &novel {
                println!("  {f} >= 0");
            }
            let mut checks = Vec::new();
            for c in &check {
                let f: EntropyForm = ps.roster.parse_form(c)?;
                let by_proj = proj.implies(&f)?;
                let by_full = ps.cone.implies(&f)?;
                println!("{c} >= 0: implied by projection {by_proj}, by copy cone {by_full}");
                checks.push(json!({"expression": c, "implied_by_projection": by_proj, "implied_by_copy_cone": by_full}));
            }
            write_cone(cfg, "postselect_projection", &proj)?;
            let contexts: Vec<Vec<&str>> = ps
                .contexts
                .iter()
                .map(|c| c.members.iter().map(|&k| ps.copies[k].name.as_str()).collect())
                .collect();
            cfg.report(
                "postselect",
                json!({
                    "copies": ps.copies.iter().map(|c| c.name.clone()).collect::<Vec<_>>(),
                    "contexts": contexts,
                    "equalities": ps.equalities.iter().map(|f| format!("{f} = 0")).collect::<Vec<_>>(),
                    "coordinates": ps.cone.coords.len(),
                    "kept": keep.len(),
                    "novel": novel.iter().map(|f| format!("{f} >= 0")).collect::<Vec<_>>(),
                    "checks": checks,
                }),
            )
        }
    }
}
