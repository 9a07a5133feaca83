mod support;

use rand::rngs::StdRng;
use rand::SeedableRng;
use std::time::Duration;
use support::*;

#[test]
fn oracle_and_solver_never_contradict() {
    let s = solver();
    if !s.is_available() {
        eprintln!("solver not available, skipping");
        return;
    }
    let p = lseg_problem();
    let mut rng = StdRng::seed_from_u64(11);
    let mut acc = Agreement::default();
    for k in 0..60 {
        let (e, axioms) = gen_entailment(&mut rng, &p.sid, k % 2 == 1);
        agree_on(&p, &e, &axioms, &s, Duration::from_secs(10), &mut acc);
    }
    eprintln!(
        "{} instances, {} with axioms, {} oracle-valid, {} solver-unknown, {} oracle over budget",
        acc.instances, acc.with_axioms, acc.oracle_valid, acc.excluded, acc.oracle_budget
    );
    assert!(acc.contradictions.is_empty(), "{:#?}", acc.contradictions);
}
