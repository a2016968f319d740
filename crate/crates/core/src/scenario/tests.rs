use super::*;
use crate::polytope::linalg::rank;
use crate::polytope::{enumerate_vertices, Limits};

/// Oracle rows, built independently of the generator: for every pair of input
/// assignments that agree on `keep`, the marginal of `outs` is equal.
fn depends_only_on(s: &Scenario, outs: &[&str], keep: &[&str]) -> Vec<Vec<Q>> {
    let outs: Vec<usize> = outs.iter().map(|n| s.party_index(n).unwrap()).collect();
    let keep: Vec<usize> = keep.iter().map(|n| s.party_index(n).unwrap()).collect();
    let l = s.layout();
    let all_ins: Vec<Vec<usize>> = l.inputs().collect();
    let mut rows = Vec::new();
    for x in &all_ins {
        for y in &all_ins {
            if x >= y || keep.iter().any(|&k| x[k] != y[k]) {
                continue;
            }
            let cell_cards: Vec<usize> = outs.iter().map(|&o| s.parties[o].output_card).collect();
            for c in 0..cell_cards.iter().product() {
                let cell = dist::decode(c, &cell_cards);
                let mut r = vec![Q::zero(); l.len()];
                for o in l.outputs() {
                    if outs.iter().zip(&cell).all(|(&p, &v)| o[p] == v) {
                        r[l.index(&o, x)] += &Q::one();
                        r[l.index(&o, y)] -= &Q::one();
                    }
                }
                rows.push(r);
            }
        }
    }
    rows
}

fn rows_of(sys: &EqualitySystem) -> Vec<Vec<Q>> {
    sys.rows.iter().map(|r| r.coeffs.clone()).collect()
}

fn same_span(a: &[Vec<Q>], b: &[Vec<Q>]) -> bool {
    let ra = rank(a);
    let rb = rank(b);
    let both: Vec<Vec<Q>> = a.iter().chain(b).cloned().collect();
    ra == rb && rank(&both) == ra
}

fn listed_rows(s: &Scenario, spec: &[(&[&str], &[&str])]) -> Vec<Vec<Q>> {
    spec.iter().flat_map(|(o, k)| depends_only_on(s, o, k)).collect()
}

#[test]
fn triangle_matches_its_jamming_relations() {
    let s = Scenario::preset("triangle").unwrap();
    let want = listed_rows(
        &s,
        &[
            (&["A", "B"], &["Z"]),
            (&["A", "C"], &["Y"]),
            (&["B", "C"], &["X"]),
            (&["A"], &[]),
            (&["B"], &[]),
            (&["C"], &[]),
        ],
    );
    assert!(same_span(&rows_of(&s.rc_constraints().unwrap()), &want));
    let (_, omitted) = s.families().unwrap();
    let names = s.names();
    let mut om: Vec<String> = omitted.iter().map(|o| o.family.describe(&names)).collect();
    om.sort();
    assert_eq!(
        om,
        vec!["A B C | X", "A B C | Y", "A B C | Z", "A B | Z", "A C | Y", "B C | X"]
    );
}

#[test]
fn compass_and_line_geometries() {
    let s = Scenario::preset("compass").unwrap();
    let compass = listed_rows(
        &s,
        &[
            (&["A", "B"], &["X"]),
            (&["A", "C"], &[]),
            (&["B", "C"], &["Y"]),
            (&["A"], &[]),
            (&["B"], &[]),
            (&["C"], &[]),
        ],
    );
    assert!(same_span(&rows_of(&s.rc_constraints().unwrap()), &compass));

    let l = Scenario::preset("line3").unwrap();
    let line = listed_rows(
        &l,
        &[(&["A", "B"], &["X"]), (&["B", "C"], &["Y"]), (&["A"], &[]), (&["B"], &[]), (&["C"], &[])],
    );
    assert!(same_span(&rows_of(&l.rc_constraints().unwrap()), &line));
    // the A C family is genuinely lost, not implied by the others
    let with_ac = listed_rows(&l, &[(&["A", "C"], &[])]);
    let all: Vec<Vec<Q>> = line.iter().chain(&with_ac).cloned().collect();
    assert!(rank(&all) > rank(&line));
}

#[test]
fn three_parties_on_a_line() {
    let s = Scenario::preset("line").unwrap();
    let rc = rows_of(&s.rc_constraints().unwrap());
    let want = listed_rows(
        &s,
        &[
            (&["A"], &["A"]),
            (&["B"], &["B"]),
            (&["C"], &["C"]),
            (&["A", "B"], &["A", "B"]),
            (&["B", "C"], &["B", "C"]),
        ],
    );
    assert!(same_span(&rc, &want));
    // exactly one non-signalling family is missing
    let ns = rows_of(&s.ns_constraints());
    let ac = listed_rows(&s, &[(&["A", "C"], &["A", "C"])]);
    let rc_plus: Vec<Vec<Q>> = rc.iter().chain(&ac).cloned().collect();
    assert!(same_span(&rc_plus, &ns));
    assert!(rank(&rc) < rank(&ns));

    let mut line = s.clone();
    line.mode = ConstraintMode::Line;
    assert!(same_span(&rows_of(&line.line_constraints().unwrap()), &rc));
    assert!(s.line_constraints().is_err());
}

#[test]
fn two_party_line_is_non_signalling() {
    let mut s = Scenario::preset("bipartite").unwrap();
    let ns = rows_of(&s.ns_constraints());
    assert!(same_span(&rows_of(&s.rc_constraints().unwrap()), &ns));
    s.mode = ConstraintMode::Line;
    assert!(same_span(&rows_of(&s.line_constraints().unwrap()), &ns));
}

#[test]
fn single_party_has_no_constraints() {
    let s = Scenario::new("one", vec![Party::new("A", 2, 2)], ConstraintMode::FullNs).unwrap();
    assert!(s.ns_constraints().is_empty());
    let mut l = s.clone();
    l.mode = ConstraintMode::Line;
    assert!(l.line_constraints().unwrap().is_empty());
}

#[test]
fn omission_rules_agree_on_presets() {
    for name in ["triangle", "compass", "line3", "line", "bipartite"] {
        let s = Scenario::preset(name).unwrap();
        let a = s.geometric_families(OmissionRule::RemovedInput).unwrap().0;
        let b = s.geometric_families(OmissionRule::AnyOutside).unwrap().0;
        assert!(
            same_span(&rows_of(&s.rows_for(&a)), &rows_of(&s.rows_for(&b))),
            "{name}"
        );
    }
}

#[test]
fn omission_rules_differ_when_a_summed_party_influences() {
    // B between A and C, with D far away: the summed-over B sits at the
    // midpoint of A and C, so the literal rule also drops "A C | D"
    let pt = |x: i64| SpacetimePoint::from_ratios(&[(0, 1), (x, 1)]).unwrap();
    let parties = vec![
        Party::new("A", 2, 2).at(pt(0)),
        Party::new("B", 2, 2).at(pt(1)),
        Party::new("C", 2, 2).at(pt(2)),
        Party::new("D", 2, 2).at(pt(10)),
    ];
    let s = Scenario::new("four", parties, ConstraintMode::GeometricRc).unwrap();
    let ac_d = Family::new(vec![0, 2], 3);
    assert!(s.geometric_families(OmissionRule::RemovedInput).unwrap().0.contains(&ac_d));
    assert!(!s.geometric_families(OmissionRule::AnyOutside).unwrap().0.contains(&ac_d));
}

#[test]
fn rc_is_weaker_than_ns() {
    for name in ["triangle", "compass", "line3", "line"] {
        let s = Scenario::preset(name).unwrap();
        let ns = rows_of(&s.ns_constraints());
        let rc = rows_of(&s.rc_constraints().unwrap());
        let both: Vec<Vec<Q>> = ns.iter().chain(&rc).cloned().collect();
        assert_eq!(rank(&both), rank(&ns), "{name}");
    }
}

#[test]
fn generation_is_deterministic() {
    let a = Scenario::preset("triangle").unwrap().rc_constraints().unwrap();
    let b = Scenario::preset("triangle").unwrap().rc_constraints().unwrap();
    assert_eq!(a, b);
}

/// All vertices by brute force: every set of coordinates forced to zero that
/// pins down a unique point of the affine hull.
fn brute_force_vertices(h: &HPolyhedron) -> Vec<Vec<Q>> {
    use crate::polytope::linalg::{affine_solutions, solve_unique};
    let n = h.dim();
    let eqs: Vec<(Vec<Q>, Q)> = h.equalities().iter().map(|r| (r.coeffs.clone(), r.rhs.clone())).collect();
    let dim = affine_solutions(&eqs, n).unwrap().dim();
    let mut out = Vec::new();
    for zeros in (0..n).combinations(dim) {
        let mut sys = eqs.clone();
        for &z in &zeros {
            let mut e = vec![Q::zero(); n];
            e[z] = Q::one();
            sys.push((e, Q::zero()));
        }
        if let Some(x) = solve_unique(&sys, n) {
            if x.iter().all(|v| !v.is_negative()) {
                out.push(x);
            }
        }
    }
    out.sort();
    out.dedup();
    out
}

#[test]
fn bipartite_no_signalling_polytope() {
    let s = Scenario::preset("bipartite").unwrap();
    let h = s.polytope().unwrap();
    let v = enumerate_vertices(&h, &Limits::default()).unwrap();
    assert_eq!(v.vertices.len(), 24);
    assert_eq!(v.vertices, brute_force_vertices(&h));
    let deterministic = v.vertices.iter().filter(|p| p.iter().all(|x| x.is_zero() || x.is_one())).count();
    assert_eq!(deterministic, 16);
}

#[test]
fn support_and_marginal_rows() {
    let s = Scenario::preset("compass").unwrap();
    let zero = s.support_constraint(|o, _| o.iter().all(|&a| a == 0));
    assert_eq!(zero.len(), 32 - 4);
    assert!(s.support_constraint(|_, _| true).is_empty());
    assert!(s.marginal_constraints(&[]).unwrap().is_empty());

    let t = Scenario::preset("triangle-xor").unwrap();
    assert_eq!(t.supports.len(), 1);
    let h = t.polytope().unwrap();
    // every surviving index has z = a xor b
    let l = t.layout();
    for r in h.equalities() {
        let nz: Vec<usize> = (0..l.len()).filter(|&i| !r.coeffs[i].is_zero()).collect();
        if nz.len() == 1 {
            let (o, x) = l.decode(nz[0]);
            assert_ne!(x[5], o[0] ^ o[1]);
        }
    }
}

#[test]
fn marginal_relation_expansion() {
    let s = Scenario::preset("triangle-hr").unwrap();
    let sys = s.marginal_constraints(&s.marginals).unwrap();
    // five relations, each replicated over the 4 assignments of X and Z
    assert_eq!(sys.len(), 20);
    let bad = MarginalRelation::parse("A C | Y : P(01|2) = 0", &s.names()).unwrap();
    assert!(s.marginal_constraints(&[bad]).is_err());
}

#[test]
fn text_round_trip_and_hash() {
    for name in presets::names() {
        let s = Scenario::preset(name).unwrap();
        let again = Scenario::parse(&s.to_text()).unwrap();
        assert_eq!(again, s, "{name}");
        assert_eq!(again.hash(), s.hash());
    }
    assert_ne!(Scenario::preset("triangle").unwrap().hash(), Scenario::preset("compass").unwrap().hash());
}

#[test]
fn parse_errors_carry_line_numbers() {
    let e = Scenario::parse("[scenario]\nname = x\n[party A]\ninputs = zero\n").unwrap_err();
    assert!(matches!(e, ScenarioError::Parse { line: 4, .. }), "{e}");
    let e = Scenario::parse("[party A]\n[party A]\n").unwrap_err();
    assert!(matches!(e, ScenarioError::Parse { line: 2, .. }));
    let e = Scenario::parse("[party A]\noutputs = 2\n[party B]\ninputs = 2\n[constraints]\nmode = geometric_rc\n").unwrap_err();
    assert!(matches!(e, ScenarioError::Invalid(_)));
    let e = Scenario::parse("[party A]\noutputs = 2\n[constraints]\nsupport = Q.out = 1\n").unwrap_err();
    assert!(matches!(e, ScenarioError::Parse { line: 4, .. }));
    assert!(matches!(Scenario::preset("nope"), Err(ScenarioError::UnknownPreset(_))));
}

#[test]
fn explicit_mode_drops_listed_families() {
    let text = "[party A]\ninputs = 2\noutputs = 2\n[party B]\ninputs = 2\noutputs = 2\n[party C]\ninputs = 2\noutputs = 2\n[constraints]\nmode = explicit\ndrop = A C | B\n";
    let e = Scenario::parse(text).unwrap();
    let g = Scenario::preset("line").unwrap();
    assert!(same_span(&rows_of(&e.rc_constraints().unwrap()), &rows_of(&g.rc_constraints().unwrap())));
    let bad = text.replace("A C | B", "A C | A");
    assert!(Scenario::parse(&bad).is_err());
}
