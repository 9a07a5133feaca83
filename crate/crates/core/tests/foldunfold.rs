mod support;

use std::time::Duration;
use support::*;
use wslcheck_core::encode::base_signature;
use wslcheck_core::foldunfold::{enumerate_axioms, prove, AxiomKind, FoldUnfoldAxiom, ProveConfig, ProveOutcome};
use wslcheck_core::normalize::normalize;
use wslcheck_core::semantics::{
    all_valuations, decide_qf_entailment, eval_fo, satisfies, FoStructure, HeapStructure, Heaplet, OracleOptions,
    QfEntailment,
};
use wslcheck_core::{parse_problem, Problem, Symbol};

fn cfg(budget: usize) -> ProveConfig {
    ProveConfig { budget, cap: 2000, timeout_per_check: Duration::from_secs(20), transcript_dir: None }
}

fn prove_fixture(rel: &str, budget: usize) -> (Problem, ProveOutcome) {
    let p = load(rel);
    let e = &normalize(&p, 64).unwrap()[0];
    let sig = base_signature(&p.vocab.shape.sorts(), &p.sid, &p.vocab.constants);
    let out = prove(e, &p.sid, &sig, &p.vocab.shape, &cfg(budget), &solver()).unwrap();
    (p, out)
}

#[test]
fn unfold_example_is_proved_in_round_one() {
    if !solver().is_available() {
        return;
    }
    let (_, out) = prove_fixture("running/unfold_lseg.sl", 2);
    let ProveOutcome::Proved { proof, axioms } = out else { panic!("not proved: {out:?}") };
    assert_eq!(proof.round, 1);
    assert_eq!(axioms.len(), 1);
    assert_eq!(axioms[0].kind, AxiomKind::Unfold);
    assert!(proof.axioms[0].formula.starts_with("lseg(a, b) =>"), "{}", proof.axioms[0].formula);
}

#[test]
fn fold_example_is_proved_with_one_fold() {
    if !solver().is_available() {
        return;
    }
    let (p, out) = prove_fixture("running/fold_lseg.sl", 2);
    let ProveOutcome::Proved { proof, axioms } = out else { panic!("not proved: {out:?}") };
    assert_eq!(proof.round, 1);
    assert!(axioms.len() <= 2);
    // The oracle agrees the chosen axioms suffice, and that some axiom is needed.
    assert!(axioms.iter().any(|a| a.kind == AxiomKind::Fold));
    let e = &normalize(&p, 64).unwrap()[0];
    let q = QfEntailment {
        field_sorts: p.vocab.shape.sorts(),
        antecedents: vec![e.antecedent.clone()],
        axioms: axioms.iter().map(|a| a.sl.clone()).collect(),
        consequent: e.disjuncts[0].clone(),
    };
    assert!(decide_qf_entailment(&q, &OracleOptions::default()).unwrap().is_valid());
    let bare = QfEntailment { axioms: vec![], ..q };
    assert!(!decide_qf_entailment(&bare, &OracleOptions::default()).unwrap().is_valid());
}

#[test]
fn rogue_example_is_never_proved() {
    if !solver().is_available() {
        return;
    }
    for budget in [1, 2] {
        let (_, out) = prove_fixture("running/rogue_lseg.sl", budget);
        assert!(matches!(out, ProveOutcome::Exhausted { .. }), "budget {budget}: {out:?}");
    }
}

#[test]
fn budget_zero_enumerates_nothing() {
    let p = load("running/unfold_lseg.sl");
    let e = &normalize(&p, 64).unwrap()[0];
    let en = enumerate_axioms(&p.sid, e, 0, 2000).unwrap();
    assert_eq!(en.rounds(), 0);
    assert!(en.axioms.is_empty());
}

#[test]
fn axiom_sets_grow_monotonically() {
    let p = load("running/fold_lseg.sl");
    let e = &normalize(&p, 64).unwrap()[0];
    let en = enumerate_axioms(&p.sid, e, 3, 2000).unwrap();
    assert!(en.rounds() >= 1);
    for i in 1..en.rounds() {
        assert!(en.set(i).starts_with(en.set(i - 1)));
        assert!(en.set(i).len() >= en.set(i - 1).len());
    }
    let small = enumerate_axioms(&p.sid, e, 3, 50).unwrap();
    assert!(small.capped);
    assert!(small.axioms.len() <= 50);
}

#[test]
fn quantified_antecedents_and_theories_are_rejected() {
    let p = parse_problem(
        "data node { node next; };
         pred lseg(x, y) := x = y \\/ x != y * exists u. x->node{u} * lseg(u, y);
         checkentail exists v. a->node{v} |- lseg(a, b);",
        "q.sl",
    )
    .unwrap();
    let mut e = normalize(&p, 64).unwrap()[0].clone();
    // Undo skolemisation to get a quantified antecedent.
    e.antecedent = wslcheck_core::Formula::exists(vec![Symbol::loc("v")], e.antecedent.clone());
    assert!(enumerate_axioms(&p.sid, &e, 1, 2000).is_err());
    let q = load("sids/sll_len.sl");
    let e = &normalize(&q, 64).unwrap()[0];
    assert!(enumerate_axioms(&q.sid, e, 1, 2000).is_err());
}

fn axioms_of_round_one() -> (Problem, Vec<FoldUnfoldAxiom>) {
    let p = parse_problem(&LSEG.replace("emp |- emp", "lseg(a, b) |- lseg(b, a)"), "ab.sl").unwrap();
    let e = &normalize(&p, 64).unwrap()[0];
    let en = enumerate_axioms(&p.sid, e, 1, 2000).unwrap();
    (p, en.set(0).to_vec())
}

fn holds_everywhere(m: &HeapStructure, f: &wslcheck_core::Formula) -> bool {
    Heaplet::all(m.num_locs).all(|h| satisfies(m, &mut vec![], h, f).unwrap())
}

// Every axiom holds at every heaplet of every least-fixpoint structure on
// carriers of at most three locations; unfold axioms need their fresh
// constants chosen well.
#[test]
fn axioms_are_sound_on_small_fixpoint_structures() {
    let (p, axioms) = axioms_of_round_one();
    assert!(!axioms.is_empty());
    let structures = lfp_structures(&p.sid, 2);
    for ax in &axioms {
        let fresh: Vec<Symbol> = match ax.kind {
            AxiomKind::Unfold => {
                let mut out = std::collections::BTreeSet::new();
                ax.witnesses.iter().for_each(|t| t.constants_into(&mut out));
                out.into_iter().collect()
            }
            AxiomKind::Fold => vec![],
        };
        let outer: Vec<Symbol> =
            ax.sl.constants().into_iter().filter(|s| s.name != "nil" && !fresh.contains(s)).collect();
        for m0 in &structures {
            for v in all_valuations(m0.num_locs, &outer, &[]) {
                let ok = all_valuations(m0.num_locs, &fresh, &[]).into_iter().any(|w| {
                    let mut consts = v.clone();
                    consts.extend(w);
                    holds_everywhere(&HeapStructure { constants: consts, ..m0.clone() }, &ax.sl)
                });
                assert!(ok, "{} fails under {v:?} in {m0:?}", ax.render(&p.vocab.shape));
            }
        }
    }
}

// U_fo holds in M_fo exactly when U holds at every heaplet.
#[test]
fn axiom_encoding_matches_every_heaplet_reading() {
    let (p, axioms) = axioms_of_round_one();
    let structures = lfp_structures(&p.sid, 2);
    for ax in &axioms {
        let syms: Vec<Symbol> = ax.sl.constants().into_iter().filter(|s| s.name != "nil").collect();
        for m0 in &structures {
            for v in all_valuations(m0.num_locs, &syms, &[]) {
                let m = HeapStructure { constants: v, ..m0.clone() };
                let fo = eval_fo(&FoStructure::from_heap(&m), &vec![], &ax.fo).unwrap();
                assert_eq!(fo, holds_everywhere(&m, &ax.sl), "{}", ax.render(&p.vocab.shape));
            }
        }
    }
}
