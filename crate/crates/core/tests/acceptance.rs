//! End-to-end acceptance run. Prints one PASS/FAIL line per criterion and
//! exits successfully either way; failures are reported, not asserted.

use std::collections::{BTreeMap, BTreeSet};
use std::time::{Duration, Instant};

use itertools::Itertools;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use rcausal_core::analyses::{
    audit_projection, classify_orbits, edge_marginal_study, group_order, jamming_scan, monogamy_max,
    symmetry_generators, violation_census, EdgeTarget,
};
use rcausal_core::entropy::{
    build_postselection_system, certificate_details, copy_network, entropy_roster, project_entropy_cone,
    rc_entropy_equalities, shannon_cone, EntropyForm, Relation, Roster,
};
use rcausal_core::lightcone::{boost_point, intersection_within_cone, Boost, SpacetimePoint};
use rcausal_core::polytope::linalg::{affine_solutions, solve_unique};
use rcausal_core::polytope::{enumerate_vertices, facets, HPolyhedron, Limits, VPolyhedron};
use rcausal_core::scenario::{Family, Scenario};
use rcausal_core::Q;

type Outcome = (bool, String);

fn q(n: i64, d: i64) -> Q {
    Q::new(n, d)
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-9
}

fn vertices(s: &Scenario) -> Vec<Vec<Q>> {
    enumerate_vertices(&s.polytope().unwrap(), &Limits::default()).unwrap().vertices
}

fn triangle_families(s: &Scenario) -> Vec<Family> {
    let i = |n| s.party_index(n).unwrap();
    vec![
        Family::new(vec![i("A"), i("B")], i("Z")),
        Family::new(vec![i("A"), i("C")], i("Y")),
        Family::new(vec![i("B"), i("C")], i("X")),
    ]
}

/// The polytope cut out by `P(o_O | x) = P(o_O | x restricted to K)` for
/// each `(O, K)`, written cell by cell from the layout.
fn hand_polytope(s: &Scenario, rules: &[(Vec<usize>, Vec<usize>)]) -> HPolyhedron {
    let l = s.layout();
    let mut h = HPolyhedron::new(l.len());
    for i in 0..l.len() {
        let mut e = vec![Q::zero(); l.len()];
        e[i] = Q::one();
        h.add_inequality(e, Q::zero()).unwrap();
    }
    for x in l.inputs() {
        let mut e = vec![Q::zero(); l.len()];
        for o in l.outputs() {
            e[l.index(&o, &x)] = Q::one();
        }
        h.add_equality(e, Q::one()).unwrap();
    }
    let n = l.out_cards.len();
    for (outs, keep) in rules {
        let marg_outs: Vec<Vec<usize>> = outs.iter().map(|&k| 0..l.out_cards[k]).multi_cartesian_product().collect();
        for x in l.inputs() {
            let base: Vec<usize> = (0..n).map(|k| if keep.contains(&k) { x[k] } else { 0 }).collect();
            if base == x {
                continue;
            }
            for m in &marg_outs {
                let mut e = vec![Q::zero(); l.len()];
                for o in l.outputs() {
                    if outs.iter().zip(m).all(|(&k, &v)| o[k] == v) {
                        e[l.index(&o, &x)] += Q::one();
                        e[l.index(&o, &base)] -= Q::one();
                    }
                }
                h.add_equality(e, Q::zero()).unwrap();
            }
        }
    }
    h
}

fn crit1(v: &[Vec<Q>], elapsed: Duration) -> Outcome {
    (
        v.len() == 11964 && elapsed <= Duration::from_secs(3600),
        format!("{} vertices in {:.1?}", v.len(), elapsed),
    )
}

fn crit2(tri: &Scenario, v: &[Vec<Q>]) -> Outcome {
    let c = violation_census(tri, v, &triangle_families(tri)).unwrap();
    let singles: Vec<usize> = [0b001, 0b010, 0b100].iter().map(|&p| c.count(p)).collect();
    let pairs: Vec<usize> = [0b011, 0b101, 0b110].iter().map(|&p| c.count(p)).collect();
    let ok = c.count(0) == 256
        && c.count(0b111) == 8624
        && singles.iter().all(|&n| n == 60)
        && pairs.iter().all(|&n| n == 968)
        && c.total == 11964;
    (
        ok,
        format!(
            "none {}, singles {:?}, pairs {:?}, all three {}, total {}",
            c.count(0),
            singles,
            pairs,
            c.count(0b111),
            c.total
        ),
    )
}

/// Whether some input carries the parity of a pair of outputs on the
/// support of `p`.
fn parity_type(s: &Scenario, p: &[Q]) -> bool {
    let l = s.layout();
    let i = |n| s.party_index(n).unwrap();
    [("A", "B", "Z"), ("A", "C", "Y"), ("B", "C", "X")].iter().any(|&(a, b, z)| {
        (0..2).any(|flip| {
            (0..l.len()).filter(|&k| !p[k].is_zero()).all(|k| {
                let (o, x) = l.decode(k);
                o[i(a)] ^ o[i(b)] ^ flip == x[i(z)]
            })
        })
    })
}

fn crit3(tri: &Scenario, v: &[Vec<Q>]) -> Outcome {
    let r = Roster::new(&entropy_roster(tri).0).unwrap();
    let mut ok = true;
    let mut parts = Vec::new();
    for e in ["I(AB:Z)+I(AC:Y)+I(BC:X)", "I(AB:Z)", "I(AC:Y)", "I(BC:X)"] {
        let m = monogamy_max(tri, v, &r.parse_form(e).unwrap(), None, true).unwrap();
        ok &= close(m.max, 1.0);
        if e.contains('+') {
            let typed = parity_type(tri, &m.vertex);
            ok &= typed;
            parts.push(format!("{e} = {:.9} (parity vertex: {typed})", m.max));
        } else {
            parts.push(format!("{e} = {:.9}", m.max));
        }
    }
    (ok, parts.join(", "))
}

fn crit4() -> Outcome {
    let s = Scenario::preset("triangle-xor").unwrap();
    let v = vertices(&s);
    let l = s.layout();
    let (a, b, c, z) = (0, 1, 2, s.party_index("Z").unwrap());
    let p = |cv: usize| -> Vec<Q> {
        (0..l.len())
            .map(|k| {
                let (o, x) = l.decode(k);
                if x[z] == o[a] ^ o[b] && o[c] == cv {
                    q(1, 2)
                } else {
                    Q::zero()
                }
            })
            .collect()
    };
    let mut want = vec![p(0), p(1)];
    want.sort();
    let mut got = v.clone();
    got.sort();
    let listed = got == want;
    let only_z = v.iter().all(|p| {
        (0..l.len()).all(|k| {
            let (o, x) = l.decode(k);
            let base: Vec<usize> = (0..x.len()).map(|j| if j == z { x[j] } else { 0 }).collect();
            p[k] == p[l.index(&o, &base)]
        })
    });
    // the same polytope from P(ab|z) = 1/2 when z = a xor b, 0 otherwise
    let tri = Scenario::preset("triangle").unwrap();
    let mut h = tri.polytope().unwrap();
    for x in l.inputs() {
        for (oa, ob) in [(0, 0), (0, 1), (1, 0), (1, 1)] {
            let mut e = vec![Q::zero(); l.len()];
            for o in l.outputs().filter(|o| o[a] == oa && o[b] == ob) {
                e[l.index(&o, &x)] = Q::one();
            }
            let rhs = if x[z] == oa ^ ob { q(1, 2) } else { Q::zero() };
            h.add_equality(e, rhs).unwrap();
        }
    }
    let same = h.same_set(&s.polytope().unwrap());
    (
        v.len() == 2 && listed && only_z && same,
        format!(
            "{} vertices, the two xor points: {listed}, P(abc|xyz)=P(abc|z): {only_z}, marginal form gives same polytope: {same}",
            v.len()
        ),
    )
}

fn crit5() -> Outcome {
    let t = Instant::now();
    let s = Scenario::preset("compass").unwrap();
    let v = vertices(&s);
    let gens = symmetry_generators(&s, &[&[("A", "C"), ("X", "Y")]]).unwrap();
    let orbits = classify_orbits(&v, &gens).unwrap();
    let elapsed = t.elapsed();
    let sizes: Vec<usize> = orbits.iter().map(|o| o.size).collect();
    let mut got = sizes.clone();
    got.sort();
    let mut want = vec![8, 10, 8, 16, 8, 32];
    want.sort();
    let sevenths: BTreeSet<Q> = [Q::zero(), q(1, 7), q(2, 7)].into_iter().collect();
    let type6 = orbits.iter().find(|o| o.representative.contains(&q(1, 7)));
    let type6_ok = type6.is_some_and(|o| o.representative.iter().all(|x| sevenths.contains(x)));
    (
        v.len() == 82 && got == want && type6_ok && elapsed <= Duration::from_secs(60),
        format!(
            "{} vertices, group order {}, {} orbits with sizes {:?}, sevenths orbit entries in {{0, 1/7, 2/7}}: {type6_ok}, {:.1?}",
            v.len(),
            group_order(&gens),
            orbits.len(),
            sizes,
            elapsed
        ),
    )
}

fn crit6() -> Outcome {
    let s = Scenario::preset("compass").unwrap();
    let v = vertices(&s);
    let r = Roster::new(&entropy_roster(&s).0).unwrap();
    let m = monogamy_max(&s, &v, &r.parse_form("I(X:AB)+I(Y:BC)").unwrap(), None, true).unwrap();
    let scan = jamming_scan(&s, 20).unwrap();
    let only_half = scan.feasible_at == vec![q(1, 2)];
    let at: Vec<String> = scan.feasible_at.iter().map(Q::to_string).collect();
    (
        close(m.max, 1.0) && only_half && scan.variants_agree,
        format!(
            "max I(X:AB)+I(Y:BC) = {:.9}, jamming feasible at [{}], extended scenario agrees: {}",
            m.max,
            at.join(", "),
            scan.variants_agree
        ),
    )
}

fn crit7() -> Outcome {
    let mut ok = true;
    let mut parts = Vec::new();
    for (name, want) in [("triangle-hr", 65), ("triangle-chsh", 23)] {
        let s = Scenario::preset(name).unwrap();
        let targets = [("A", "B", "Z"), ("B", "C", "X")]
            .iter()
            .map(|&(a, b, z)| EdgeTarget::new(&s, &[a, b], &[z]).unwrap())
            .collect_vec();
        let rep = edge_marginal_study(&s, &s.marginals, &targets, &Limits::default()).unwrap();
        let infeasible = rep.targets.iter().all(|t| !t.simultaneous_feasible);
        let excluded = rep.targets.iter().all(|t| !t.shape_in_projection);
        ok &= rep.vertex_count == want && infeasible && excluded;
        parts.push(format!(
            "{name}: {} vertices (want {want}), second edge infeasible: {infeasible}, shape excluded from projections: {excluded}",
            rep.vertex_count
        ));
    }
    (ok, parts.join("; "))
}

fn crit8() -> Outcome {
    let t = Instant::now();
    let s = Scenario::preset("triangle").unwrap();
    let r = Roster::new(&entropy_roster(&s).0).unwrap();
    let mut cone = shannon_cone(&r, &[]).unwrap();
    for e in rc_entropy_equalities(&s, false).unwrap() {
        cone.add(&e, Relation::Eq).unwrap();
    }
    let keep: Vec<u32> = [
        "A", "B", "C", "AB", "AC", "BC", "X", "Y", "Z", "AY", "AZ", "BX", "BZ", "CX", "CY", "ABZ", "ACY", "BCX",
    ]
    .iter()
    .map(|k| r.mask(k).unwrap())
    .collect();
    let proj = project_entropy_cone(&cone, &keep, &Limits::default()).unwrap();
    let rel = |t: &str| r.parse_relation(t).unwrap().0;
    let eqs: Vec<EntropyForm> = [
        "H(AY)=H(A)+H(Y)",
        "H(AZ)=H(A)+H(Z)",
        "H(BX)=H(B)+H(X)",
        "H(BZ)=H(B)+H(Z)",
        "H(CX)=H(C)+H(X)",
        "H(CY)=H(C)+H(Y)",
    ]
    .iter()
    .map(|t| rel(t))
    .collect();
    let class: Vec<EntropyForm> = [
        "H(C|B) >= I(X:BC)+I(Y:AC)",
        "H(C|A) >= I(X:BC)+I(Y:AC)",
        "H(B|A) >= I(Z:AB)+I(X:BC)",
        "H(B|C) >= I(Z:AB)+I(X:BC)",
        "H(A|C) >= I(Y:AC)+I(Z:AB)",
        "H(A|B) >= I(Y:AC)+I(Z:AB)",
    ]
    .iter()
    .map(|t| rel(t))
    .collect();
    // remaining rows must follow from Shannon, the equalities, independent
    // inputs and the class itself
    let mut reference = shannon_cone(&r, &[]).unwrap();
    for e in &eqs {
        reference.add(e, Relation::Eq).unwrap();
    }
    reference.add(&rel("H(XYZ)=H(X)+H(Y)+H(Z)"), Relation::Eq).unwrap();
    for f in &class {
        reference.add(f, Relation::Ge).unwrap();
    }
    let a = audit_projection(&proj, &eqs, &class, &reference).unwrap();
    let eq_found = a.equalities.iter().filter(|e| e.appears).count();
    let class_found = a.inequalities.iter().filter(|e| e.appears).count();
    (
        a.passed(),
        format!(
            "equalities {eq_found}/6 (extra {}), class rows {class_found}/6, other rows {} of which {} not implied, {:.1?}",
            a.extra_equalities.len(),
            a.other_rows.len(),
            a.other_rows_unexplained.len(),
            t.elapsed()
        ),
    )
}

fn crit9() -> Outcome {
    let r = Roster::new(&["A", "B", "C", "X", "Y", "Z"]).unwrap();
    let terms: Vec<EntropyForm> = [
        "I(X:Y|ABCZ)",
        "I(Y:Z|ABC)",
        "I(X:Z|ABC)",
        "I(X:A|BC)",
        "I(Y:B|AC)",
        "I(Z:C|AB)",
        "H(ABCXYZ) - H(X) - H(Y) - H(ABZ)",
    ]
    .iter()
    .map(|t| r.parse_form(t).unwrap())
    .collect();
    let eq = r.parse_relation("H(ABXYZ) = H(ABZ) + H(X) + H(Y)").unwrap().0;
    let target = r.parse_relation("I(X:BC) + I(Y:AC) <= H(C|AB)").unwrap().0;
    let rep = certificate_details(&terms, &[eq], &target).unwrap();
    (rep.passed(), format!("decomposes: {}, terms valid: {:?}", rep.decomposes, rep.term_valid))
}

fn crit10() -> Outcome {
    let s = Scenario::preset("line").unwrap();
    let ps = build_postselection_system(&copy_network(&s).unwrap()).unwrap();
    let keep = ps.coordinates_upto(2, &[(1, 2)]);
    let (proj, novel) = ps.project_novel(&keep, &Limits::default()).unwrap();
    let r = &ps.roster;
    let weak = r
        .parse_form("H(B_0|A_00)+H(A_10|B_0)+H(A_01|B_1)-H(A_11|B_1)+H(C_10|A_01)+H(A_11|C_10)+H(A_00|C_01)-H(A_10|C_01)")
        .unwrap();
    let ab_plus_bc = r
        .parse_form("H(B_0|A_00)+H(A_10|B_0)+H(A_01|B_1)-H(A_11|B_1)+H(C_00|B_0)+H(B_1|C_10)+H(B_0|C_01)-H(B_1|C_11)")
        .unwrap();
    let weak_ok = proj.implies(&weak).unwrap();
    let ab_plus_bc_ok = ps.cone.implies(&ab_plus_bc).unwrap();
    (
        novel.len() == 16 && weak_ok && !ab_plus_bc_ok,
        format!(
            "{} novel rows, weak form implied: {weak_ok}, AB+BC form implied: {ab_plus_bc_ok}",
            novel.len()
        ),
    )
}

fn pt(c: &[(i64, i64)]) -> SpacetimePoint {
    SpacetimePoint::from_ratios(c).unwrap()
}

fn crit11() -> Outcome {
    let tri = Scenario::preset("triangle").unwrap();
    let i = |n| tri.party_index(n).unwrap();
    let (a, b, c, x, y, z) = (i("A"), i("B"), i("C"), i("X"), i("Y"), i("Z"));
    let eq4 = hand_polytope(
        &tri,
        &[
            (vec![a, b], vec![z]),
            (vec![a, c], vec![y]),
            (vec![b, c], vec![x]),
            (vec![a], vec![]),
            (vec![b], vec![]),
            (vec![c], vec![]),
        ],
    );
    let tri_ok = eq4.same_set(&tri.polytope().unwrap());

    let line = Scenario::preset("line").unwrap();
    let n = line.parties.len();
    let ns_minus: Vec<(Vec<usize>, Vec<usize>)> = (1..n)
        .flat_map(|k| (0..n).combinations(k))
        .filter(|o| *o != vec![0, 2])
        .map(|o| (o.clone(), o))
        .collect();
    let line_ok = hand_polytope(&line, &ns_minus).same_set(&line.polytope().unwrap());
    let (_, omitted) = line.families().unwrap();
    let only_ac = omitted.len() == 1 && omitted[0].family.describe(&line.names()) == "A C | B";

    let pair = vec![pt(&[(0, 1), (0, 1), (0, 1)]), pt(&[(0, 1), (1, 1), (0, 1)])];
    let cases = [
        (vec![pt(&[(0, 1), (0, 1)]), pt(&[(0, 1), (1, 1)])], pt(&[(0, 1), (1, 2)]), true),
        (pair.clone(), pt(&[(0, 1), (1, 2), (-1, 10)]), false),
        (pair.clone(), pt(&[(1, 10), (1, 2), (0, 1)]), false),
        (pair, pt(&[(0, 1), (1, 4), (0, 1)]), true),
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut stated = true;
    let mut invariant = true;
    for (apexes, w, want) in &cases {
        stated &= intersection_within_cone(apexes, w).unwrap() == *want;
        for _ in 0..100 {
            let m = rng.gen_range(2..12);
            let k = rng.gen_range(0..m);
            let dir: Vec<Q> = (0..w.dim() - 1).map(|_| q(rng.gen_range(-9..10), rng.gen_range(1..6))).collect();
            let bst = Boost::pythagorean(m, k, &dir).unwrap();
            let ba: Vec<SpacetimePoint> = apexes.iter().map(|p| boost_point(p, &bst).unwrap()).collect();
            invariant &= intersection_within_cone(&ba, &boost_point(w, &bst).unwrap()).unwrap() == *want;
        }
    }
    (
        tri_ok && line_ok && only_ac && stated && invariant,
        format!(
            "triangle families match: {tri_ok}, line equals NS minus AC|B: {}, worked cases: {stated}, boost invariant: {invariant}",
            line_ok && only_ac
        ),
    )
}

/// Vertices by brute force: every choice of `d` zero coordinates whose
/// system has a unique non-negative solution.
fn brute_force_vertices(h: &HPolyhedron) -> Vec<Vec<Q>> {
    let n = h.dim();
    let eqs: Vec<(Vec<Q>, Q)> = h.equalities().iter().map(|r| (r.coeffs.clone(), r.rhs.clone())).collect();
    let d = affine_solutions(&eqs, n).unwrap().dim();
    let mut out: Vec<Vec<Q>> = (0..n)
        .combinations(d)
        .filter_map(|zeros| {
            let mut sys = eqs.clone();
            for z in zeros {
                let mut e = vec![Q::zero(); n];
                e[z] = Q::one();
                sys.push((e, Q::zero()));
            }
            solve_unique(&sys, n).filter(|x| x.iter().all(|v| !v.is_negative()))
        })
        .collect();
    out.sort();
    out.dedup();
    out
}

fn crit12() -> Outcome {
    let bip = Scenario::preset("bipartite").unwrap();
    let h = bip.polytope().unwrap();
    let mut v = vertices(&bip);
    v.sort();
    let oracle = v == brute_force_vertices(&h);
    let mut instances: Vec<(String, HPolyhedron)> = ["bipartite", "triangle-xor", "compass"]
        .iter()
        .map(|n| (n.to_string(), Scenario::preset(n).unwrap().polytope().unwrap()))
        .collect();
    let cube = {
        let mut c = HPolyhedron::new(3);
        for k in 0..3 {
            let mut e = vec![Q::zero(); 3];
            e[k] = Q::one();
            c.add_inequality(e.clone(), Q::zero()).unwrap();
            e[k] = -Q::one();
            c.add_inequality(e, -Q::one()).unwrap();
        }
        c
    };
    instances.push(("cube".into(), cube));
    let mut trips = BTreeMap::new();
    for (name, h) in &instances {
        let v = enumerate_vertices(h, &Limits::default()).unwrap();
        if v.vertices.len() > 100 {
            continue;
        }
        let f = facets(&v, &Limits::default()).unwrap();
        let back = enumerate_vertices(&f, &Limits::default()).unwrap();
        let same_v = VPolyhedron::from_points(v.dim, back.vertices).vertices == VPolyhedron::from_points(v.dim, v.vertices.clone()).vertices;
        trips.insert(name.clone(), f.same_set(h) && same_v);
    }
    (
        v.len() == 24 && oracle && trips.values().all(|&b| b),
        format!("bipartite {} vertices, brute force agrees: {oracle}, round trips {trips:?}", v.len()),
    )
}

fn main() {
    let t = Instant::now();
    let tri = Scenario::preset("triangle").unwrap();
    let tv = vertices(&tri);
    let enum_time = t.elapsed();
    let results: Vec<(usize, Outcome)> = vec![
        (1, crit1(&tv, enum_time)),
        (2, crit2(&tri, &tv)),
        (3, crit3(&tri, &tv)),
        (4, crit4()),
        (5, crit5()),
        (6, crit6()),
        (7, crit7()),
        (8, crit8()),
        (9, crit9()),
        (10, crit10()),
        (11, crit11()),
        (12, crit12()),
    ];
    println!();
    for (k, (ok, detail)) in &results {
        println!("criterion {k:>2}: {}  {detail}", if *ok { "PASS" } else { "FAIL" });
    }
    let passed = results.iter().filter(|(_, (ok, _))| *ok).count();
    println!("{passed}/{} criteria pass ({:.1?})", results.len(), t.elapsed());
}
