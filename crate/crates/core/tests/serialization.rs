use proptest::prelude::*;

use cohexp::coherence::{check_coherence, SamplingSpec};
use cohexp::corpus::{coherent_pairs, incoherent_corpus};
use cohexp::experiments::{make_dataset, Setting, Split};
use cohexp::gamma::{apply_gamma, GammaSpec};
use cohexp::nn::{MlpModel, TrainConfig};
use cohexp::{Error, FuzzyExpr, Projection};

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn corpus_expressions_round_trip(seed in any::<u64>()) {
        let p = Projection::half();
        let mut exprs: Vec<FuzzyExpr> = incoherent_corpus(3, seed, &p).unwrap();
        exprs.extend(coherent_pairs(3, seed, &p).into_iter().flat_map(|(f, g)| [f, g]));
        for e in exprs {
            let back = FuzzyExpr::from_json(&e.to_json().unwrap()).unwrap();
            prop_assert_eq!(&back, &e);
        }
    }

    #[test]
    fn repaired_expressions_round_trip(seed in any::<u64>()) {
        let p = Projection::half();
        let spec = GammaSpec::domain_extension(p, SamplingSpec::random(500, seed).unwrap());
        for e in incoherent_corpus(2, seed, &p).unwrap() {
            let g = apply_gamma(&e, &spec).unwrap();
            let back = FuzzyExpr::from_json(&g.to_json().unwrap()).unwrap();
            prop_assert_eq!(back, g);
        }
    }
}

#[test]
fn weights_ref_is_resolved_relative_to_the_file() {
    let dir = tempfile::tempdir().unwrap();
    let model = MlpModel::init(2, &[4], 1, 9).unwrap();
    let inline = FuzzyExpr::mlp(model.clone());
    std::fs::create_dir(dir.path().join("nets")).unwrap();
    std::fs::write(dir.path().join("nets/w.json"), serde_json::to_string(&model).unwrap()).unwrap();

    let mut doc: serde_json::Value = serde_json::from_str(&inline.to_json().unwrap()).unwrap();
    let node = doc.as_object_mut().unwrap();
    node.remove("model");
    node.insert("weights_ref".into(), "nets/w.json".into());
    let path = dir.path().join("f.json");
    std::fs::write(&path, doc.to_string()).unwrap();

    let loaded = FuzzyExpr::load(&path).unwrap();
    for x in [[0.1, 0.9], [0.5, 0.5], [1.0, 0.0]] {
        assert_eq!(loaded.eval(&x).unwrap(), inline.eval(&x).unwrap());
    }
}

#[test]
fn missing_weights_are_reported() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("f.json");
    std::fs::write(&path, r#"{"in_arity":2,"out_arity":1,"node":"mlp"}"#).unwrap();
    assert!(matches!(FuzzyExpr::load(&path), Err(Error::Structure(_))));
    std::fs::write(&path, r#"{"in_arity":2,"out_arity":1,"node":"mlp","weights_ref":"nope.json"}"#).unwrap();
    assert!(matches!(FuzzyExpr::load(&path), Err(Error::Io(_))));
}

#[test]
fn malformed_and_inconsistent_documents_are_rejected() {
    assert!(FuzzyExpr::from_json("{").is_err());
    assert!(FuzzyExpr::from_json(r#"{"in_arity":2,"out_arity":1,"node":"t_norm","kind":"min"}"#).is_ok());
    assert!(FuzzyExpr::from_json(r#"{"in_arity":2,"out_arity":3,"node":"t_norm","kind":"min"}"#).is_err());
}

#[test]
fn configs_round_trip() {
    let cfg = TrainConfig::default();
    let back: TrainConfig = serde_json::from_str(&serde_json::to_string(&cfg).unwrap()).unwrap();
    assert_eq!(back, cfg);
    let r = check_coherence(&FuzzyExpr::identity(2), &Projection::half(), &SamplingSpec::grid(5).unwrap()).unwrap();
    let json: serde_json::Value = serde_json::from_str(&r.to_json().unwrap()).unwrap();
    assert!(json.is_object());
}

#[test]
fn dataset_csv_has_header_and_rows() {
    let d = make_dataset(Setting::Xor, Split::Test, 5, 0).unwrap();
    let mut buf = Vec::new();
    d.write_csv(&mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "x,y,label");
    assert_eq!(lines.len(), 6);
    for (line, l) in lines[1..].iter().zip(&d.labels) {
        assert!(line.ends_with(&format!(",{}", *l as u8)));
    }
}

#[test]
fn formula_documents_are_validated() {
    use cohexp::dnf::DnfFormula;
    let good = r#"{"n_inputs":2,"outputs":[[[{"var":1,"negated":false},{"var":0,"negated":true}]]],"names":["a","b"]}"#;
    let f: DnfFormula = serde_json::from_str(good).unwrap();
    assert_eq!(f.to_string(), "b ∧ ¬a");
    for bad in [
        r#"{"n_inputs":1,"outputs":[[[{"var":1,"negated":false}]]]}"#,
        r#"{"n_inputs":2,"outputs":[[[{"var":0,"negated":false}]]],"names":["a"]}"#,
        r#"{"n_inputs":2,"outputs":[]}"#,
    ] {
        assert!(serde_json::from_str::<DnfFormula>(bad).is_err(), "{bad}");
    }
}
