use proptest::prelude::*;

use super::*;
use crate::polytope::{enumerate_vertices, Limits};

fn roster(names: &[&str]) -> Roster {
    Roster::new(names).unwrap()
}

fn q(n: i64, d: i64) -> Q {
    Q::new(n, d)
}

fn joint(names: &[&str], cards: Vec<usize>, probs: Vec<Q>) -> JointDistribution {
    JointDistribution::new(roster(names), cards, probs).unwrap()
}

fn triangle_roster() -> Roster {
    roster(&["A", "B", "C", "X", "Y", "Z"])
}

#[test]
fn basic_entropies() {
    let bit = joint(&["A"], vec![2], vec![q(1, 2), q(1, 2)]).entropy_vector();
    assert!((bit.get(1) - 1.0).abs() < TOL);
    let two = joint(&["A", "B"], vec![2, 2], vec![q(1, 4); 4]).entropy_vector();
    assert!((two.get(1) - 1.0).abs() < TOL);
    assert!((two.get(2) - 1.0).abs() < TOL);
    assert!((two.get(3) - 2.0).abs() < TOL);
    assert!(mutual_information(&two, 1, 2, 0).unwrap().abs() < TOL);
    assert_eq!(mutual_information(&two, 1, 3, 0), Err(EntropyError::Overlap));
}

#[test]
fn joint_validation() {
    let r = roster(&["A"]);
    assert_eq!(
        JointDistribution::new(r.clone(), vec![2], vec![q(3, 2), q(-1, 2)]),
        Err(EntropyError::NegativeMass)
    );
    assert!(matches!(
        JointDistribution::new(r, vec![2], vec![q(1, 2), q(1, 3)]),
        Err(EntropyError::BadNormalization(_))
    ));
}

/// Independent marginal computation for a single subset.
fn oracle_entropy(j: &JointDistribution, vars: &[usize]) -> f64 {
    use std::collections::HashMap;
    let mut m: HashMap<Vec<usize>, f64> = HashMap::new();
    for (i, p) in j.probs.iter().enumerate() {
        let d = crate::scenario::dist::decode(i, &j.cards);
        *m.entry(vars.iter().map(|&k| d[k]).collect()).or_default() += p.to_f64();
    }
    m.values().filter(|&&p| p > 0.0).map(|&p| -p * p.log2()).sum()
}

#[test]
fn p1_saturates_ab_z() {
    // joint over A, B, C, Z with uniform z: P(abc|z) = 1/2 iff z = a ^ b, c = 0
    let mut probs = Vec::new();
    for a in 0..2 {
        for b in 0..2 {
            for c in 0..2 {
                for z in 0..2 {
                    let hit = z == a ^ b && c == 0;
                    probs.push(if hit { q(1, 4) } else { Q::zero() });
                }
            }
        }
    }
    let j = joint(&["A", "B", "C", "Z"], vec![2, 2, 2, 2], probs);
    let v = j.entropy_vector();
    let r = &j.roster;
    let i = v.eval(&r.mi("AB", "Z", "").unwrap());
    assert!((i - 1.0).abs() < TOL);
    for mask in 1..16u32 {
        let vars: Vec<usize> = (0..4).filter(|k| mask >> k & 1 == 1).collect();
        assert!((v.get(mask) - oracle_entropy(&j, &vars)).abs() < 1e-12);
    }
}

/// Triangle distribution `Z = A ⊕ B`, `C = 0`, uniform inputs.
fn xor_vertex(s: &Scenario) -> Vec<Q> {
    let l = s.layout();
    (0..l.len())
        .map(|i| {
            let (o, x) = l.decode(i);
            // parties: A B C X Y Z
            if x[5] == o[0] ^ o[1] && o[2] == 0 {
                q(1, 2)
            } else {
                Q::zero()
            }
        })
        .collect()
}

#[test]
fn xor_strategy_mutual_informations() {
    let s = Scenario::preset("triangle").unwrap();
    let p = xor_vertex(&s);
    let poly = s.polytope().unwrap();
    assert!(poly.contains(&p));
    let d = s.distribution(p).unwrap();
    let j = JointDistribution::from_scenario(&s, &d, &d.uniform_inputs()).unwrap();
    let v = j.entropy_vector();
    let r = &j.roster;
    assert_eq!(r.names(), triangle_roster().names());
    let val = |a: &str, b: &str| v.eval(&r.mi(a, b, "").unwrap());
    assert!((val("AB", "Z") - 1.0).abs() < TOL);
    assert!(val("AC", "Y").abs() < TOL);
    assert!(val("BC", "X").abs() < TOL);
    assert!(v.min_elemental() > -TOL);
}

#[test]
fn shannon_row_counts() {
    assert_eq!(elemental_rows(&roster(&["A", "B"])).len(), 3);
    assert_eq!(elemental_rows(&triangle_roster()).len(), 246);
    let c = shannon_cone(&triangle_roster(), &[]).unwrap();
    assert_eq!(c.poly.inequalities().len(), 246);
    assert_eq!(c.coords.len(), 63);
    let r = roster(&["S"]);
    let b = shannon_cone(&r, &[Some(2)]).unwrap();
    let (_, ineqs) = b.forms();
    assert!(ineqs.contains(&(EntropyForm::constant(&r, Q::one()) - r.h("S").unwrap())));
    assert_eq!(log2_upper(8), Q::from_int(3));
    let l3 = log2_upper(3).to_f64();
    assert!(l3 >= 3f64.log2() && l3 < 3f64.log2() + 1e-5);
}

#[test]
fn form_parsing_and_display() {
    let r = triangle_roster();
    let f = r.parse_form("I(X:BC) + I(Y:AC) - H(C|AB) + 1/2").unwrap();
    let g = r.mi("X", "BC", "").unwrap() + r.mi("Y", "AC", "").unwrap() - r.cond("C", "AB").unwrap()
        + EntropyForm::constant(&r, q(1, 2));
    assert_eq!(f, g);
    assert_eq!(r.parse_form(&f.to_string()).unwrap(), f);
    let (h, rel) = r.parse_relation("H(AY) = H(A) + H(Y)").unwrap();
    assert_eq!(rel, Relation::Eq);
    assert_eq!(h.to_string(), "-H(A) - H(Y) + H(AY)");
    let (h, rel) = r.parse_relation("2 H(A) <= H(AB)").unwrap();
    assert_eq!(rel, Relation::Ge);
    assert_eq!(h, r.h("AB").unwrap() - r.h("A").unwrap() * Q::from_int(2));
    assert!(r.parse_form("H(AW)").is_err());
    assert!(r.parse_form("I(A:AB)").is_err());
    let long = roster(&["A_00", "B_0"]);
    assert_eq!(long.subset_name(long.mask("B_0 A_00").unwrap()), "A_00 B_0");
}

const LISTED_EQUALITIES: [&str; 15] = [
    "H(ABXYZ)=H(ABZ)+H(X)+H(Y)",
    "H(ACXYZ)=H(ACY)+H(X)+H(Z)",
    "H(BCXYZ)=H(BCX)+H(Y)+H(Z)",
    "H(AXYZ)=H(A)+H(X)+H(Y)+H(Z)",
    "H(BXYZ)=H(B)+H(X)+H(Y)+H(Z)",
    "H(CXYZ)=H(C)+H(X)+H(Y)+H(Z)",
    "H(ACYZ)=H(ACY)+H(Z)",
    "H(ACXY)=H(ACY)+H(X)",
    "H(ACXZ)=H(AC)+H(X)+H(Z)",
    "H(ABYZ)=H(ABZ)+H(Y)",
    "H(ABXZ)=H(ABZ)+H(X)",
    "H(ABXY)=H(AB)+H(X)+H(Y)",
    "H(BCXY)=H(BCX)+H(Y)",
    "H(BCXZ)=H(BCX)+H(Z)",
    "H(BCYZ)=H(BC)+H(Y)+H(Z)",
];

fn same_up_to_sign(a: &EntropyForm, b: &EntropyForm) -> bool {
    a == b || *a == -b.clone()
}

#[test]
fn triangle_causality_equalities() {
    let s = Scenario::preset("triangle").unwrap();
    let r = triangle_roster();
    let listed: Vec<EntropyForm> = LISTED_EQUALITIES.iter().map(|t| r.parse_relation(t).unwrap().0).collect();
    let expanded = rc_entropy_equalities(&s, true).unwrap();
    for p in &listed {
        assert!(expanded.iter().any(|e| same_up_to_sign(e, p)), "missing {p}");
    }
    let default = rc_entropy_equalities(&s, false).unwrap();
    assert_eq!(default.len(), 7);
    // both generate the same cone as the listed equalities
    let cone_with = |eqs: &[EntropyForm]| {
        let mut c = shannon_cone(&r, &[]).unwrap();
        for e in eqs {
            c.add(e, Relation::Eq).unwrap();
        }
        c
    };
    let listed_cone = cone_with(&listed);
    let default_cone = cone_with(&default);
    for e in expanded.iter().chain(&default) {
        assert!(listed_cone.implies_equality(e).unwrap(), "{e}");
    }
    for e in &listed {
        assert!(default_cone.implies_equality(e).unwrap(), "{e}");
    }
}

#[test]
fn bipartite_and_single_party_equalities() {
    let s = Scenario::preset("bipartite").unwrap();
    let eqs = rc_entropy_equalities(&s, false).unwrap();
    let r = roster(&["A", "B", "A_in", "B_in"]);
    let want: Vec<EntropyForm> = [
        "H(A A_in B_in) = H(A A_in) + H(B_in)",
        "H(B A_in B_in) = H(B B_in) + H(A_in)",
        "H(A_in B_in) = H(A_in) + H(B_in)",
    ]
    .iter()
    .map(|t| r.parse_relation(t).unwrap().0)
    .collect();
    assert_eq!(eqs.len(), 3);
    for w in &want {
        assert!(eqs.iter().any(|e| same_up_to_sign(e, w)), "missing {w}");
    }
    let single = Scenario::parse("[party A]\ninputs = 2\noutputs = 2\n").unwrap();
    assert!(rc_entropy_equalities(&single, false).unwrap().is_empty());
    let lone = Scenario::parse("[party A]\noutputs = 2\n[party X]\ninputs = 2\n[party Y]\ninputs = 2\n").unwrap();
    let eqs = rc_entropy_equalities(&lone, false).unwrap();
    let r = roster(&["A", "X", "Y"]);
    assert!(eqs.iter().any(|e| same_up_to_sign(e, &r.parse_relation("H(XY) = H(X) + H(Y)").unwrap().0)));
}

#[test]
fn causality_equalities_vanish_on_vertices() {
    for name in ["bipartite", "compass", "triangle-xor"] {
        let s = Scenario::preset(name).unwrap();
        let v = enumerate_vertices(&s.polytope().unwrap(), &Limits::default()).unwrap();
        let eqs = rc_entropy_equalities(&s, true).unwrap();
        for p in v.vertices {
            let d = s.distribution(p).unwrap();
            let ev = JointDistribution::from_scenario(&s, &d, &d.uniform_inputs())
                .unwrap()
                .entropy_vector();
            assert!(ev.min_elemental() > -TOL);
            for e in &eqs {
                assert!(ev.eval(e).abs() < TOL, "{name}: {e} = {}", ev.eval(e));
            }
        }
    }
}

#[test]
fn monogamy_certificate() {
    let r = triangle_roster();
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
    let rep = certificate_details(&terms, std::slice::from_ref(&eq), &target).unwrap();
    assert!(rep.decomposes && rep.passed(), "{rep:?}");
    // the last term needs the equality
    let no_eq = certificate_details(&terms, &[], &target).unwrap();
    assert!(!no_eq.passed());

    let i_ab = r.mi("A", "B", "").unwrap();
    assert!(certificate_check(std::slice::from_ref(&i_ab), &[], &i_ab).unwrap());
    assert!(!certificate_check(&[], &[], &i_ab).unwrap());
    // decomposes but a term is not non-negative
    let bad = -r.h("A").unwrap();
    assert!(!certificate_check(std::slice::from_ref(&bad), &[], &bad).unwrap());
    let other = roster(&["A", "B"]);
    assert_eq!(
        certificate_check(&[other.h("A").unwrap()], &[], &i_ab),
        Err(EntropyError::RosterMismatch)
    );
}

#[test]
fn projection_trivial_cases() {
    let r = roster(&["A"]);
    let c = shannon_cone(&r, &[]).unwrap();
    let p = project_entropy_cone(&c, &[1], &Limits::default()).unwrap();
    assert_eq!(p.listing(), "H(A) >= 0\n");
    let r2 = roster(&["A", "B"]);
    let c2 = shannon_cone(&r2, &[]).unwrap();
    let all = project_entropy_cone(&c2, &[1, 2, 3], &Limits::default()).unwrap();
    assert!(all.poly.same_set(&c2.poly));
    let a_only = project_entropy_cone(&c2, &[1], &Limits::default()).unwrap();
    assert_eq!(a_only.listing(), "H(A) >= 0\n");
    assert!(project_entropy_cone(&c2, &[4], &Limits::default()).is_err());
    assert_eq!(a_only.coefficient_table(), "relation,H(A),constant\nge,1,0\n");
}

#[test]
fn projection_is_implied_both_ways() {
    // three variables with A independent of B; keep the pair coordinates
    let r = roster(&["A", "B", "C"]);
    let mut c = shannon_cone(&r, &[]).unwrap();
    c.add(&r.mi("A", "B", "").unwrap(), Relation::Eq).unwrap();
    let keep = [1, 2, 3, 4, 5, 6];
    let p = project_entropy_cone(&c, &keep, &Limits::default()).unwrap();
    let (eqs, ineqs) = p.forms();
    for f in &ineqs {
        assert!(c.implies(f).unwrap(), "{f}");
    }
    for f in &eqs {
        assert!(c.implies_equality(f).unwrap(), "{f}");
    }
    // and the original constraints living on kept coordinates follow from p
    for f in elemental_rows(&r) {
        if f.support().all(|m| keep.contains(&m)) {
            assert!(p.implies(&f).unwrap(), "{f}");
        }
    }
}

#[test]
fn line_postselection_structure() {
    let net = [
        CopySpec::new("A", 2, &[("X", 2), ("Y", 2)], &["X"]),
        CopySpec::new("B", 2, &[("Y", 2)], &["Y"]),
        CopySpec::new("C", 2, &[("Y", 2), ("Z", 2)], &["Z"]),
    ];
    let ps = build_postselection_system(&net).unwrap();
    let names: Vec<&str> = ps.copies.iter().map(|c| c.name.as_str()).collect();
    assert_eq!(
        names,
        ["A_00", "A_01", "A_10", "A_11", "B_0", "B_1", "C_00", "C_01", "C_10", "C_11"]
    );
    assert_eq!(ps.contexts.len(), 8);
    assert!(ps.contexts.iter().all(|c| c.members.len() == 3));
    assert_eq!(ps.cone.coords.len(), 34);
    let r = &ps.roster;
    let want: Vec<EntropyForm> = ["H(A_00) = H(A_01)", "H(A_10) = H(A_11)", "H(C_00) = H(C_10)", "H(C_01) = H(C_11)"]
        .iter()
        .map(|t| r.parse_relation(t).unwrap().0)
        .collect();
    assert_eq!(ps.equalities.len(), 4);
    for w in &want {
        assert!(ps.equalities.iter().any(|e| same_up_to_sign(e, w)), "missing {w}");
    }
}

#[test]
fn small_postselection_networks() {
    let one = build_postselection_system(&[CopySpec::new("A", 2, &[("X", 2)], &["X"])]).unwrap();
    assert_eq!(one.copies.len(), 2);
    assert_eq!(one.contexts.len(), 2);
    assert!(one.contexts.iter().all(|c| c.members.len() == 1));
    let none = build_postselection_system(&[CopySpec::new("A", 2, &[], &[])]).unwrap();
    assert_eq!(none.copies.len(), 1);
    assert_eq!(none.contexts.len(), 1);
    let bad = build_postselection_system(&[
        CopySpec::new("A", 2, &[("X", 2)], &[]),
        CopySpec::new("B", 2, &[("X", 3)], &[]),
    ]);
    assert!(matches!(bad, Err(EntropyError::Inconsistent(_))));
}

fn block(f: impl Fn(usize, usize, usize, usize) -> Q) -> CondDistribution {
    let l = crate::scenario::Layout::new(vec![2, 2], vec![2, 2]);
    let vals = (0..16)
        .map(|i| {
            let (o, x) = l.decode(i);
            f(o[0], o[1], x[0], x[1])
        })
        .collect();
    CondDistribution::new(vec!["A".into(), "B".into()], vec!["X".into(), "Y".into()], l, vals).unwrap()
}

#[test]
fn chsh_entropic_values() {
    let det = block(|a, b, _, _| if a == 0 && b == 0 { Q::one() } else { Q::zero() });
    assert!(chsh_entropic(&det).unwrap().abs() < TOL);
    let uni = block(|_, _, _, _| q(1, 4));
    assert!((chsh_entropic(&uni).unwrap() - 2.0).abs() < TOL);
    let pr = block(|a, b, x, y| if a ^ b == x & y { q(1, 2) } else { Q::zero() });
    assert!(chsh_entropic(&pr).unwrap().abs() < TOL);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn distributions_lie_in_the_shannon_cone(weights in prop::collection::vec(0u32..5, 16)) {
        prop_assume!(weights.iter().any(|&w| w > 0));
        let total: u32 = weights.iter().sum();
        let probs: Vec<Q> = weights.iter().map(|&w| Q::new(w as i64, total as i64)).collect();
        let j = joint(&["A", "B", "C", "D"], vec![2, 2, 2, 2], probs);
        let v = j.entropy_vector();
        prop_assert!(v.min_elemental() > -TOL);
        for s in 1..16u32 {
            for t in 1..16u32 {
                if s & t == 0 {
                    let g = 15 & !s & !t;
                    prop_assert!(mutual_information(&v, s, t, g).unwrap() > -TOL);
                }
            }
        }
    }
}

#[test]
fn line_projection_keeps_a_weak_monogamy() {
    let net = [
        CopySpec::new("A", 2, &[("X", 2), ("Y", 2)], &["X"]),
        CopySpec::new("B", 2, &[("Y", 2)], &["Y"]),
        CopySpec::new("C", 2, &[("Y", 2), ("Z", 2)], &["Z"]),
    ];
    let ps = build_postselection_system(&net).unwrap();
    let keep = ps.coordinates_upto(2, &[(1, 2)]);
    assert_eq!(keep.len(), 10 + 4 + 8);
    let (proj, novel) = ps.project_novel(&keep, &crate::polytope::Limits::default()).unwrap();
    assert_eq!(novel.len(), 16);
    let r = &ps.roster;
    let weak = r
        .parse_form("H(B_0|A_00)+H(A_10|B_0)+H(A_01|B_1)-H(A_11|B_1)+H(C_10|A_01)+H(A_11|C_10)+H(A_00|C_01)-H(A_10|C_01)")
        .unwrap();
    assert!(proj.implies(&weak).unwrap());
    assert!(!ps.pairwise_baseline(&keep).unwrap().implies(&weak).unwrap());
    let ab_plus_bc = r
        .parse_form("H(B_0|A_00)+H(A_10|B_0)+H(A_01|B_1)-H(A_11|B_1)+H(C_00|B_0)+H(B_1|C_10)+H(B_0|C_01)-H(B_1|C_11)")
        .unwrap();
    assert!(!ps.cone.implies(&ab_plus_bc).unwrap());
}

#[test]
fn copy_network_of_the_line() {
    let s = Scenario::preset("line").unwrap();
    let net = copy_network(&s).unwrap();
    let expect = [
        CopySpec::new("A", 2, &[("A_in", 2), ("B_in", 2)], &["A_in"]),
        CopySpec::new("B", 2, &[("B_in", 2)], &["B_in"]),
        CopySpec::new("C", 2, &[("B_in", 2), ("C_in", 2)], &["C_in"]),
    ];
    assert_eq!(net, expect);
    let tri = copy_network(&Scenario::preset("triangle").unwrap()).unwrap();
    // every input may steer the joint A B C marginal
    assert_eq!(tri[0].influencers.len(), 3);
    assert_eq!(tri[0].marginal_influencers, Vec::<String>::new());
}
