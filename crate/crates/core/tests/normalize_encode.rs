mod support;

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use std::time::Duration;
use support::*;
use wslcheck_core::encode::fo::{xstar, Fo, Rel};
use wslcheck_core::encode::{base_signature, encode_entailment, Encoder, Role};
use wslcheck_core::normalize::{inline_points_to_existentials, normalize, skolemize, split_entailment};
use wslcheck_core::semantics::{decide_qf_entailment, OracleOptions, QfEntailment};
use wslcheck_core::{parse_problem, Formula, Sort, Symbol, Term};

fn c(n: &str) -> Term {
    Term::cnst(n, Sort::Loc)
}

fn with_header(query: &str) -> wslcheck_core::Problem {
    parse_problem(&LSEG.replace("checkentail emp |- emp;", &format!("checkentail {query};")), "q.sl")
        .unwrap_or_else(|d| panic!("{d}"))
}

#[test]
fn skolemize_examples() {
    let x = c("x");
    let y = Symbol::loc("y");
    let f = Formula::exists(vec![y.clone()], Formula::pto(x.clone(), vec![Term::Var(y)]));
    let mut counter = 0;
    let (out, sks) = skolemize(&[f], &mut counter);
    assert_eq!(sks.len(), 1);
    assert!(sks[0].name.starts_with("_sk"));
    assert_eq!(out[0], Formula::pto(x.clone(), vec![Term::Const(sks[0].clone())]));
    let qf = Formula::pto(x, vec![Term::nil()]);
    let (out, sks) = skolemize(&[qf.clone()], &mut counter);
    assert!(sks.is_empty());
    assert_eq!(out[0], qf);
}

#[test]
fn split_distributes_disjunctions() {
    let a = Formula::pto(c("a"), vec![Term::nil()]);
    let b = Formula::Emp;
    let cc = Formula::Eq(c("a"), c("b"));
    let out = split_entailment(&[Formula::or(vec![a.clone(), b.clone()]), cc.clone()], &Formula::Emp, 4096).unwrap();
    assert_eq!(out.len(), 2);
    assert_eq!(out[0].antecedent, Formula::and(vec![a, cc.clone()]));
    assert_eq!(out[1].antecedent, Formula::and(vec![b, cc]));
    let single = split_entailment(&[Formula::Emp], &Formula::Emp, 4096).unwrap();
    assert_eq!(single.len(), 1);
}

#[test]
fn split_guard() {
    let d = Formula::or(vec![Formula::Emp, Formula::Eq(c("a"), c("b"))]);
    let gamma = vec![d.clone(), d.clone(), d];
    assert!(split_entailment(&gamma, &Formula::Emp, 4).is_err());
    assert_eq!(split_entailment(&gamma, &Formula::Emp, 8).unwrap().len(), 8);
}

#[test]
fn rogue_example_normalizes_to_one_split() {
    let p = load("running/rogue_lseg.sl");
    let out = normalize(&p, 4096).unwrap();
    assert_eq!(out.len(), 1);
    assert_eq!(out[0].disjuncts.len(), 1);
    assert_eq!(
        out[0].disjuncts[0],
        Formula::sep(vec![Formula::pred("lseg", vec![c("a"), c("b")]), Formula::pto(c("b"), vec![Term::nil()])])
    );
}

// Splitting preserves oracle verdicts on theory-free inputs.
#[test]
fn split_preserves_oracle_verdicts() {
    let mut rng = StdRng::seed_from_u64(21);
    let opts = OracleOptions { bound: 2, ..OracleOptions::default() };
    for _ in 0..30 {
        let gamma = vec![
            Formula::or(vec![gen_formula_sized(&mut rng, 1, 2, false), gen_formula_sized(&mut rng, 1, 2, false)]),
            gen_formula_sized(&mut rng, 1, 2, false),
        ];
        let psi = gen_formula_sized(&mut rng, 1, 2, false);
        let q = |ants: Vec<Formula>| QfEntailment {
            field_sorts: vec![Sort::Loc],
            antecedents: ants,
            axioms: vec![],
            consequent: psi.clone(),
        };
        let whole = decide_qf_entailment(&q(gamma.clone()), &opts).unwrap().is_valid();
        let parts = split_entailment(&gamma, &psi, 4096).unwrap();
        let each = parts.iter().all(|e| decide_qf_entailment(&q(vec![e.antecedent.clone()]), &opts).unwrap().is_valid());
        assert_eq!(whole, each, "{gamma:?} |- {psi}");
    }
}

#[test]
fn table_rows() {
    let mut enc = Encoder::new();
    assert_eq!(enc.encode_uc(&Formula::Emp).unwrap(), (Fo::True, Fo::False));
    let (fo, eta) = enc.encode_uc(&Formula::pto(c("a"), vec![c("b")])).unwrap();
    let m1a = Term::field(0, Sort::Loc, c("a"));
    assert_eq!(fo, Fo::and(vec![Fo::neq(c("a"), Term::nil()), Fo::eq(c("b"), m1a)]));
    assert_eq!(eta, Fo::eq(Term::Var(xstar()), c("a")));
    let (fo, eta) = enc
        .encode_uc(&Formula::sep(vec![Formula::pred("lseg", vec![c("a"), c("c")]), Formula::pto(c("c"), vec![c("b")])]))
        .unwrap();
    let lseg = |r: Rel, extra: Option<Term>| {
        let mut args = vec![c("a"), c("c")];
        args.extend(extra);
        Fo::rel(r, args)
    };
    let Fo::And(parts) = &fo else { panic!("{fo:?}") };
    assert!(parts.contains(&lseg(Rel::fo("lseg"), None)), "{fo:?}");
    let x = Term::Var(xstar());
    assert_eq!(eta, Fo::or(vec![lseg(Rel::eta("lseg"), Some(x.clone())), Fo::eq(x, c("c"))]));
}

#[test]
fn pure_heaplets_are_false() {
    let mut rng = StdRng::seed_from_u64(2);
    for _ in 0..100 {
        let f = loop {
            let f = gen_formula(&mut rng, 2, false);
            if !f.any(&|g| matches!(g, Formula::PointsTo(..))) {
                break f;
            }
        };
        let (_, eta) = Encoder::new().encode_uc(&f).unwrap();
        assert_eq!(eta, Fo::False, "{f}");
    }
}

#[test]
fn sid_encoding_examples() {
    let p = parse_problem("data node { node next; };\npred e(x, y) := x = y;\ncheckentail emp |- emp;", "e.sl").unwrap();
    let f = Encoder::new().encode_sid(&p.sid).unwrap();
    let mut rels = std::collections::BTreeSet::new();
    f.relations(&mut rels);
    assert!(rels.contains(&Rel::fo("e")) && rels.contains(&Rel::eta("e")), "{f:?}");
    let p = parse_problem("data node { node next; };\npred p(x) := p(x);\ncheckentail emp |- emp;", "p.sl").unwrap();
    assert!(Encoder::new().encode_sid(&p.sid).is_ok());
}

#[test]
fn obligations_have_three_parts() {
    let p = load("running/rogue_lseg.sl");
    let e = &normalize(&p, 4096).unwrap()[0];
    let sig = base_signature(&p.vocab.shape.sorts(), &p.sid, &p.vocab.constants);
    let o = encode_entailment(e, &p.sid, &sig, None).unwrap();
    let roles: Vec<Role> = o.assertions.iter().map(|a| a.role).collect();
    assert_eq!(roles, vec![Role::Definitions, Role::Antecedent, Role::Refutation]);
    assert_eq!(o.refutation.as_ref().unwrap().disjuncts.len(), 1);

    let p = load("running/unfold_lseg.sl");
    let e = &normalize(&p, 4096).unwrap()[0];
    let o = encode_entailment(e, &p.sid, &sig, None).unwrap();
    assert_eq!(o.refutation.as_ref().unwrap().exists.len(), 1);
}

#[test]
fn reflexive_emp_is_unsat() {
    let s = solver();
    if !s.is_available() {
        return;
    }
    let p = with_header("emp |- emp");
    let e = &normalize(&p, 4096).unwrap()[0];
    let sig = base_signature(&p.vocab.shape.sorts(), &p.sid, &p.vocab.constants);
    let o = encode_entailment(e, &p.sid, &sig, None).unwrap();
    assert!(s.check(&o, Duration::from_secs(10), false).unwrap().is_unsat());
}

#[test]
fn inlining_examples() {
    let p = load("running/unfold_lseg.sl");
    let e = &normalize(&p, 4096).unwrap()[0];
    let inl = inline_points_to_existentials(e, &p.vocab.shape.sorts());
    assert!(inl.exists.is_empty());
    let m1a = Term::field(0, Sort::Loc, c("a"));
    assert_eq!(
        inl.disjuncts[0],
        Formula::sep(vec![Formula::pto(c("a"), vec![m1a.clone()]), Formula::pred("lseg", vec![m1a, c("b")])])
    );
    let q = with_header("emp |- exists v. lseg(a, v)");
    let e = &normalize(&q, 4096).unwrap()[0];
    assert_eq!(&inline_points_to_existentials(e, &[Sort::Loc]), e);
}

// Inlining keeps the oracle verdict.
#[test]
fn inlining_preserves_oracle_verdicts() {
    let mut rng = StdRng::seed_from_u64(8);
    let opts = OracleOptions { bound: 2, ..OracleOptions::default() };
    let v = Symbol::loc("v");
    for _ in 0..30 {
        let phi = gen_formula_sized(&mut rng, 1, 2, false);
        let base = ["a", "b"][rng.gen_range(0..2)];
        let rest = match rng.gen_range(0..3) {
            0 => Formula::Eq(Term::Var(v.clone()), c("b")),
            1 => Formula::pto(Term::Var(v.clone()), vec![Term::nil()]),
            _ => Formula::Emp,
        };
        let e = wslcheck_core::normalize::NormalizedEntailment {
            antecedent: phi.clone(),
            exists: vec![v.clone()],
            disjuncts: vec![Formula::sep(vec![Formula::pto(c(base), vec![Term::Var(v.clone())]), rest])],
            skolems: vec![],
        };
        let inl = inline_points_to_existentials(&e, &[Sort::Loc]);
        assert!(inl.exists.is_empty());
        let q = |cons: Formula| QfEntailment {
            field_sorts: vec![Sort::Loc],
            antecedents: vec![phi.clone()],
            axioms: vec![],
            consequent: cons,
        };
        let before = decide_qf_entailment(&q(Formula::exists(e.exists.clone(), e.disjuncts[0].clone())), &opts).unwrap();
        let after = decide_qf_entailment(&q(inl.disjuncts[0].clone()), &opts).unwrap();
        assert_eq!(before.is_valid(), after.is_valid(), "{phi} |- {}", e.disjuncts[0]);
    }
}
