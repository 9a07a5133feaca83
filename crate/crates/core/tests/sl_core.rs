mod support;

use proptest::prelude::*;
use rand::rngs::StdRng;
use rand::SeedableRng;
use std::collections::BTreeMap;
use support::*;
use wslcheck_core::sl::{check_edh, check_sid, is_heap_reducing, is_qf_conjunctive};
use wslcheck_core::{parse_file, parse_problem, Formula, Symbol, Term};

fn formula(src: &str) -> Formula {
    let p = parse_problem(
        &format!(
            "data node {{ node next; }};
             pred lseg(x, y) := x = y \\/ x != y * exists u. x->node{{u}} * lseg(u, y);
             checkentail emp |- {src};"
        ),
        "f.sl",
    )
    .unwrap_or_else(|d| panic!("{d}"));
    p.consequent
}

#[test]
fn edh_examples() {
    let x = Symbol::loc("x");
    let y = Symbol::loc("y");
    let bad = Formula::forall(
        vec![x.clone()],
        Formula::exists(vec![y.clone()], Formula::Eq(Term::Var(x), Term::Var(y))),
    );
    let w = check_edh(&bad).unwrap_err();
    assert!(!w.reason.is_empty());
    assert!(check_edh(&formula("emp \\/ a->node{nil}")).is_ok());
    assert!(check_edh(&formula("exists v. a->node{v} * lseg(v, b)")).is_ok());
}

#[test]
fn generated_qf_conjunctive_formulas_are_edh() {
    let mut rng = StdRng::seed_from_u64(5);
    for _ in 0..200 {
        let f = gen_formula(&mut rng, 3, true);
        assert!(is_qf_conjunctive(&f));
        assert!(check_edh(&f).is_ok(), "{f}");
    }
}

#[test]
fn edh_is_invariant_under_bound_renaming() {
    for (a, b) in [
        ("exists v. a->node{v} * lseg(v, b)", "exists w. a->node{w} * lseg(w, b)"),
        ("forall v. lseg(v, b) \\/ emp", "forall q. lseg(q, b) \\/ emp"),
    ] {
        assert_eq!(check_edh(&formula(a)).is_ok(), check_edh(&formula(b)).is_ok());
    }
}

#[test]
fn sid_well_formedness() {
    assert!(check_sid(&lseg_problem().sid).is_ok());
    let mut sid = lseg_problem().sid;
    let mut def = sid.get("lseg").unwrap().clone();
    def.cases.push(Formula::or(vec![Formula::Emp, Formula::Emp]));
    sid.insert(def.clone());
    assert!(check_sid(&sid).is_err());
    def.cases.pop();
    def.cases.push(Formula::pred("missing", vec![Term::Var(Symbol::loc("x"))]));
    sid.insert(def);
    assert!(check_sid(&sid).is_err());
}

#[test]
fn heap_reducing_matches_hand_labels() {
    let labels: BTreeMap<String, bool> =
        serde_json::from_str(&std::fs::read_to_string(fixture("sids/labels.json")).unwrap()).unwrap();
    assert!(labels.len() >= 10);
    for (file, want) in labels {
        let p = parse_file(&fixture(&format!("sids/{file}"))).unwrap_or_else(|d| panic!("{d}"));
        assert_eq!(is_heap_reducing(&p.sid), want, "{file}");
    }
}

#[test]
fn base_case_only_sid_is_heap_reducing() {
    let p = parse_problem("data node { node next; };\npred e(x, y) := x = y;\ncheckentail emp |- emp;", "e.sl").unwrap();
    assert!(is_heap_reducing(&p.sid));
}

#[test]
fn heap_reducing_ignores_conjunct_order() {
    let mut sid = lseg_problem().sid;
    let before = is_heap_reducing(&sid);
    let mut def = sid.get("lseg").unwrap().clone();
    for c in &mut def.cases {
        if let Formula::Sep(parts) = c {
            parts.reverse();
        }
    }
    sid.insert(def);
    assert_eq!(is_heap_reducing(&sid), before);
}

proptest! {
    #[test]
    fn substitution_of_a_closed_term(seed in any::<u64>()) {
        let mut rng = StdRng::seed_from_u64(seed);
        let f = gen_open_formula(&mut rng, 3);
        let map: BTreeMap<String, Term> = [("a".to_string(), Term::nil())].into();
        let mut want = f.free_vars();
        want.remove(&Symbol::loc("a"));
        prop_assert_eq!(f.subst(&map).free_vars(), want);
    }
}
