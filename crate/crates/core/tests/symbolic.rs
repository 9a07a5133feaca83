mod support;

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use serde_json::json;
use std::time::{Duration, Instant};
use support::*;
use wslcheck_core::encode::fo::{Fo, Rel};
use wslcheck_core::encode::Encoder;
use wslcheck_core::normalize::normalize;
use wslcheck_core::semantics::eval_fo;
use wslcheck_core::solver::Solver;
use wslcheck_core::symbolic::{
    explicate, find_model, from_json, has_infinite_domain, infinite_nodes, model_check, to_json, validate_structure,
    StructureJson, SymbolicStructure, TemplateSpec,
};
use wslcheck_core::{Sort, Symbol, Term};

const T: Duration = Duration::from_secs(20);

fn structure(v: serde_json::Value) -> SymbolicStructure {
    let j: StructureJson = serde_json::from_value(v).unwrap();
    from_json(&j).unwrap()
}

fn lseg_ray() -> SymbolicStructure {
    let j: StructureJson = serde_json::from_str(&std::fs::read_to_string(fixture("models/lseg_ray.json")).unwrap()).unwrap();
    from_json(&j).unwrap()
}

fn c(n: &str) -> Term {
    Term::cnst(n, Sort::Loc)
}

fn with_solver() -> Option<Solver> {
    let s = solver();
    s.is_available().then_some(s)
}

#[test]
fn lseg_ray_model_checks() {
    let Some(s) = with_solver() else { return };
    let start = Instant::now();
    let m = lseg_ray();
    validate_structure(&m, &s, T).unwrap();
    let p = load("running/rogue_lseg.sl");
    let sid_fo = Encoder::new().encode_sid(&p.sid).unwrap();
    assert!(model_check(&m, &sid_fo, &s, T).unwrap());
    let e = &normalize(&p, 4096).unwrap()[0];
    let (phi_fo, _) = Encoder::new().encode_uc(&e.antecedent).unwrap();
    assert!(model_check(&m, &phi_fo, &s, T).unwrap());
    assert!(model_check(&m, &Fo::rel(Rel::fo("lseg"), vec![c("a"), c("c")]), &s, T).unwrap());
    assert!(!model_check(&m, &Fo::rel(Rel::fo("lseg"), vec![c("a"), c("b")]), &s, T).unwrap());
    assert!(has_infinite_domain(&m, &s, T).unwrap());
    assert_eq!(infinite_nodes(&m, &s, T).unwrap(), vec![m.node_index("r").unwrap()]);
    assert!(start.elapsed() < Duration::from_secs(5), "{:?}", start.elapsed());
}

#[test]
fn json_round_trip() {
    let m = lseg_ray();
    let j = to_json(&m);
    let text = serde_json::to_string(&j).unwrap();
    let back: StructureJson = serde_json::from_str(&text).unwrap();
    assert_eq!(from_json(&back).unwrap(), m);
    for entry in std::fs::read_dir(fixture("archetypes")).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().and_then(|e| e.to_str()) == Some("json") {
            let j: StructureJson = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
            let s = from_json(&j).unwrap();
            assert_eq!(from_json(&to_json(&s)).unwrap(), s, "{}", path.display());
        }
    }
}

fn two_nodes(bound: &str, term: &str, target_bound: &str) -> serde_json::Value {
    json!({
        "field_sorts": ["loc"],
        "nodes": [{"name": "nil", "bound": "i = 0"}, {"name": "n", "bound": bound}, {"name": "m", "bound": target_bound}],
        "null": "nil",
        "constants": {"nil": {"node": "nil", "index": 0}},
        "fields": [{"nil": {"node": "nil", "term": "0"}, "n": {"node": "m", "term": term}, "m": {"node": "nil", "term": "0"}}],
    })
}

#[test]
fn invalid_structures_are_reported() {
    let Some(s) = with_solver() else { return };
    let bad_bound = structure(two_nodes("i < i", "0", "i = 0"));
    assert!(validate_structure(&bad_bound, &s, T).is_err());
    let bad_closure = structure(two_nodes("i >= 0", "i + 1", "i = 0"));
    assert!(validate_structure(&bad_closure, &s, T).is_err());
    let ok = structure(two_nodes("i >= 0", "0", "i = 0"));
    validate_structure(&ok, &s, T).unwrap();
}

#[test]
fn infinite_domains() {
    let Some(s) = with_solver() else { return };
    assert!(has_infinite_domain(&structure(two_nodes("i >= 0", "0", "i = 0")), &s, T).unwrap());
    assert!(!has_infinite_domain(&structure(two_nodes("0 <= i && i <= 5", "0", "i = 0")), &s, T).unwrap());
}

#[test]
fn singleton_relation_holds_on_its_constant() {
    let Some(s) = with_solver() else { return };
    let mut v = two_nodes("i = 0", "0", "i = 0");
    v["constants"]["k"] = json!({"node": "n", "index": 0});
    v["relations"] = json!({"r_fo": [{"nodes": ["n"], "formula": "true"}]});
    let m = structure(v);
    assert!(model_check(&m, &Fo::rel(Rel::fo("r"), vec![c("k")]), &s, T).unwrap());
}

// Finite symbolic structures: nodes bounded by 0 <= i <= k with k <= 2.
fn random_finite(rng: &mut StdRng) -> serde_json::Value {
    let n = rng.gen_range(1..=3);
    let mut nodes = vec![json!({"name": "nil", "bound": "i = 0"})];
    let mut sizes = vec![0];
    for j in 0..n {
        let k = rng.gen_range(0..=2);
        sizes.push(k);
        nodes.push(json!({"name": format!("n{j}"), "bound": format!("0 <= i && i <= {k}")}));
    }
    let name = |j: usize| if j == 0 { "nil".to_string() } else { format!("n{}", j - 1) };
    let mut field = serde_json::Map::new();
    for src in 0..=n {
        let t = rng.gen_range(0..=n);
        let term = if sizes[t] >= sizes[src] && rng.gen_bool(0.5) {
            "i".to_string()
        } else {
            rng.gen_range(0..=sizes[t]).to_string()
        };
        field.insert(name(src), json!({"node": name(t), "term": term}));
    }
    let mut consts = serde_json::Map::new();
    consts.insert("nil".into(), json!({"node": "nil", "index": 0}));
    for k in ["a", "b"] {
        let t = rng.gen_range(0..=n);
        consts.insert(k.into(), json!({"node": name(t), "index": rng.gen_range(0..=sizes[t])}));
    }
    let forms = ["true", "false", "i1 <= i2", "i1 = i2", "i2 < i1 + 1"];
    let mut entries = vec![];
    for x in 0..=n {
        for y in 0..=n {
            if rng.gen_bool(0.5) {
                entries.push(json!({"nodes": [name(x), name(y)], "formula": forms[rng.gen_range(0..forms.len())]}));
            }
        }
    }
    json!({
        "field_sorts": ["loc"],
        "nodes": nodes,
        "null": "nil",
        "constants": consts,
        "fields": [field],
        "relations": {"r_fo": entries},
    })
}

fn random_term(rng: &mut StdRng, vars: &[Symbol]) -> Term {
    let base = match rng.gen_range(0..4) {
        0 => Term::nil(),
        1 => c("a"),
        2 => c("b"),
        _ if !vars.is_empty() => Term::Var(vars[rng.gen_range(0..vars.len())].clone()),
        _ => c("a"),
    };
    if rng.gen_bool(0.3) {
        Term::field(0, Sort::Loc, base)
    } else {
        base
    }
}

fn random_sentence(rng: &mut StdRng, depth: u32, vars: &mut Vec<Symbol>) -> Fo {
    if depth == 0 || rng.gen_bool(0.25) {
        let (t1, t2) = (random_term(rng, vars), random_term(rng, vars));
        return if rng.gen_bool(0.5) { Fo::eq(t1, t2) } else { Fo::rel(Rel::fo("r"), vec![t1, t2]) };
    }
    match rng.gen_range(0..5) {
        0 => Fo::not(random_sentence(rng, depth - 1, vars)),
        1 => Fo::and(vec![random_sentence(rng, depth - 1, vars), random_sentence(rng, depth - 1, vars)]),
        2 => Fo::or(vec![random_sentence(rng, depth - 1, vars), random_sentence(rng, depth - 1, vars)]),
        k => {
            let v = Symbol::loc(format!("x{}", vars.len()));
            vars.push(v.clone());
            let body = random_sentence(rng, depth - 1, vars);
            vars.pop();
            if k == 3 {
                Fo::forall(vec![v], body)
            } else {
                Fo::exists(vec![v], body)
            }
        }
    }
}

// model_check agrees with eval_fo on the explication of finite structures.
#[test]
fn explication_coherence() {
    let Some(s) = with_solver() else { return };
    let mut rng = StdRng::seed_from_u64(13);
    let mut checked = 0;
    for _ in 0..25 {
        let m = structure(random_finite(&mut rng));
        validate_structure(&m, &s, T).unwrap();
        let (fo, _) = explicate(&m, (0, 2)).unwrap();
        for _ in 0..6 {
            let sent = random_sentence(&mut rng, 4, &mut vec![]);
            let want = eval_fo(&fo, &vec![], &sent).unwrap();
            assert_eq!(model_check(&m, &sent, &s, T).unwrap(), want, "{sent:?} in {:?}", to_json(&m));
            checked += 1;
        }
    }
    assert_eq!(checked, 150);
}

#[test]
fn find_model_examples() {
    let Some(s) = with_solver() else { return };
    let prep = wslcheck_core::pipeline::prepare(&load("running/unfold_lseg.sl")).unwrap();
    let o = &prep.obligations[0];
    assert!(find_model(o, &TemplateSpec::default_family(), &s, Duration::from_secs(10)).unwrap().is_none());
    assert!(find_model(o, &TemplateSpec::default_family(), &s, Duration::ZERO).unwrap().is_none());

    let prep = wslcheck_core::pipeline::prepare(&load("running/rogue_lseg.sl")).unwrap();
    let o = &prep.obligations[0];
    let found = find_model(o, &TemplateSpec::default_family(), &s, Duration::from_secs(60)).unwrap().expect("model");
    validate_structure(&found.structure, &s, T).unwrap();
    for a in &o.assertions {
        assert!(model_check(&found.structure, &a.sentence, &s, T).unwrap(), "{}", a.name);
    }
    assert_eq!(infinite_nodes(&found.structure, &s, T).unwrap().len(), 1);
}
