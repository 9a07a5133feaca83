mod support;

use std::time::Duration;
use support::*;
use wslcheck_core::pipeline::{prepare, run_validate_model, RunConfig};
use wslcheck_core::rogue::{
    certificate_json, certify, classify_archetype, render, Archetype, CandidateModel, Certificate, CertifyOptions,
    Format, RogueError, Rogueness,
};
use wslcheck_core::symbolic::{from_json, infinite_nodes, StructureJson, SymbolicStructure};

const T: Duration = Duration::from_secs(20);

fn read_json(rel: &str) -> StructureJson {
    serde_json::from_str(&std::fs::read_to_string(fixture(rel)).unwrap()).unwrap()
}

fn validate(problem: &str, model: &str) -> Result<(usize, Certificate), Vec<String>> {
    let s = from_json(&read_json(model)).unwrap();
    run_validate_model(&load(problem), &s, &RunConfig::default()).unwrap()
}

#[test]
fn lseg_ray_certifies_against_both_rogue_examples() {
    if !solver().is_available() {
        return;
    }
    for problem in ["running/rogue_lseg.sl", "running/rogue_lseg_neq.sl"] {
        let (_, c) = validate(problem, "models/lseg_ray.json").unwrap_or_else(|r| panic!("{problem}: {r:?}"));
        assert!(c.verdicts.iter().all(|v| v.holds));
        assert_eq!(c.rogueness, Rogueness::Infinite { nodes: vec!["r".into()] });
        assert_eq!(c.classification.archetype, Archetype::ListMissesLocation);
    }
}

#[test]
fn lseg_ray_is_rejected_for_the_valid_example() {
    if !solver().is_available() {
        return;
    }
    let reasons = validate("running/unfold_lseg.sl", "models/lseg_ray.json").unwrap_err();
    assert!(!reasons.is_empty());
}

#[test]
fn archetype_fixtures_classify() {
    if !solver().is_available() {
        return;
    }
    let cases = [
        ("a1_list_no_null", 1),
        ("a2_list_misses_location", 2),
        ("a3_two_lists", 3),
        ("a4_tree_no_null", 4),
        ("a5_tree_misses_location", 5),
        ("a6_tree_misses_divergent", 6),
    ];
    for (name, want) in cases {
        let (_, c) = validate(&format!("archetypes/{name}.sl"), &format!("archetypes/{name}.json"))
            .unwrap_or_else(|r| panic!("{name}: {r:?}"));
        assert_eq!(c.classification.archetype.number(), Some(want), "{name}");
    }
}

fn renamed(j: &StructureJson) -> StructureJson {
    let r = |n: &str| format!("z_{n}");
    let mut out = j.clone();
    out.nodes.reverse();
    for n in &mut out.nodes {
        n.name = r(&n.name);
    }
    out.null = r(&out.null);
    for v in out.constants.values_mut() {
        v.node = r(&v.node);
    }
    out.fields = j
        .fields
        .iter()
        .map(|col| {
            col.iter()
                .map(|(k, f)| {
                    let mut f = f.clone();
                    if f.node != "int" {
                        f.node = r(&f.node);
                    }
                    (r(k), f)
                })
                .collect()
        })
        .collect();
    for entries in out.relations.values_mut() {
        for e in entries {
            e.nodes = e.nodes.iter().map(|n| if n == "int" { n.clone() } else { r(n) }).collect();
        }
    }
    out
}

#[test]
fn classification_is_invariant_under_renaming() {
    let s = solver();
    if !s.is_available() {
        return;
    }
    let mut files = vec!["models/lseg_ray.json".to_string()];
    for k in ["a1_list_no_null", "a3_two_lists", "a5_tree_misses_location", "a6_tree_misses_divergent"] {
        files.push(format!("archetypes/{k}.json"));
    }
    for f in files {
        let j = read_json(&f);
        let a: SymbolicStructure = from_json(&j).unwrap();
        let b: SymbolicStructure = from_json(&renamed(&j)).unwrap();
        let ca = classify_archetype(&a, &infinite_nodes(&a, &s, T).unwrap());
        let cb = classify_archetype(&b, &infinite_nodes(&b, &s, T).unwrap());
        assert_eq!(ca, cb, "{f}");
    }
}

#[test]
fn all_finite_is_unknown() {
    let s = from_json(&read_json("models/lseg_ray.json")).unwrap();
    assert_eq!(classify_archetype(&s, &[]).archetype, Archetype::Unknown);
}

#[test]
fn truncating_the_ray_breaks_the_definitions() {
    let s = solver();
    if !s.is_available() {
        return;
    }
    let prep = prepare(&load("running/rogue_lseg.sl")).unwrap();
    let mut j = read_json("models/lseg_ray.json");
    j.nodes.iter_mut().find(|n| n.name == "r").unwrap().bound = "0 <= i && i <= 3".into();
    j.fields[0].get_mut("r").unwrap().term = "0".into();
    let m = from_json(&j).unwrap();
    let opts = CertifyOptions {
        solver: &s,
        timeout: T,
        sid: Some(&prep.problem.sid),
        heap_reducing: true,
        disjunct_names: prep.disjunct_names[0].clone(),
    };
    let r = certify(CandidateModel::Symbolic(m), &prep.obligations[0], &opts);
    match r {
        Err(RogueError::Rejected { failing }) => assert!(failing.iter().any(|f| f.contains("definitions")), "{failing:?}"),
        other => panic!("{other:?}"),
    }
}

#[test]
fn renderings() {
    if !solver().is_available() {
        return;
    }
    let (_, c) = validate("running/rogue_lseg.sl", "models/lseg_ray.json").unwrap();
    let dot = render(&c, Format::Dot);
    assert_eq!(dot.matches("doublecircle").count(), 1, "{dot}");
    let text = render(&c, Format::Text);
    assert!(text.contains("violated: lseg(a, b) * b->node{nil}"), "{text}");
    assert!(text.contains("archetype 2"), "{text}");
    let j = certificate_json(&c);
    let back: StructureJson = serde_json::from_value(j["model"]["symbolic"].clone()).unwrap();
    let CandidateModel::Symbolic(s) = &c.model else { panic!() };
    assert_eq!(&from_json(&back).unwrap(), s);
    let again: serde_json::Value = serde_json::from_str(&render(&c, Format::Json)).unwrap();
    assert_eq!(again, j);
}
