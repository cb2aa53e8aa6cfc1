use std::path::PathBuf;
use std::process::{Command, Output};

use cohexp::coherence::{check_coherence, CoherenceReport, SamplingSpec};
use cohexp::dnf::DnfFormula;
use cohexp::experiments::MetricsReport;
use cohexp::functor::FunctorLaw;
use cohexp::gamma::NonCompositional;
use cohexp::{FuzzyExpr, Projection};

fn fixture(name: &str) -> String {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("fixtures")
        .join(name)
        .display()
        .to_string()
}

fn cohexp(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cohexp"))
        .args(args)
        .env_remove("COHEXP_SEED")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn ok(args: &[&str]) -> String {
    let o = cohexp(args);
    assert_eq!(o.status.code(), Some(0), "stderr: {}", stderr(&o));
    stdout(&o)
}

fn fails_with(args: &[&str], exit: i32, code: &str) {
    let o = cohexp(args);
    assert_eq!(o.status.code(), Some(exit), "stdout: {}", stdout(&o));
    let err = stderr(&o);
    assert_eq!(err.lines().count(), 1, "{err}");
    assert!(err.starts_with(&format!("error[{code}]: ")), "{err}");
}

#[test]
fn check_reports_fraction_and_witnesses() {
    let out = ok(&["check", "--expr", &fixture("lukOR.fn"), "--alpha", "0.5", "--grid", "201"]);
    let line = out.lines().find(|l| l.starts_with("component 0")).unwrap();
    let fraction: f64 = line.split_whitespace().nth(4).unwrap().parse().unwrap();
    assert!((fraction - 0.875).abs() < 0.01, "{line}");
    assert!(out.contains("witness x = "));
    assert!(out.ends_with("verdict: incoherent\n"));
}

#[test]
fn check_structured_round_trips() {
    let lukor = fixture("lukOR.fn");
    let out = ok(&["check", "--expr", &lukor, "--grid", "21", "--format", "structured"]);
    let report: CoherenceReport = serde_json::from_str(&out).unwrap();
    let expr = FuzzyExpr::load(lukor.as_ref()).unwrap();
    let direct = check_coherence(&expr, &Projection::half(), &SamplingSpec::grid(21).unwrap()).unwrap();
    assert_eq!(report, direct);
}

#[test]
fn explain_min_is_a_conjunction() {
    assert_eq!(ok(&["explain", "--expr", &fixture("min.fn"), "--alpha", "0.5"]), "x ∧ y\n");
    let ascii = ok(&["explain", "--expr", &fixture("lukOR.fn"), "--gamma", "extend", "--ascii"]);
    assert_eq!(ascii, "x | y | c1\n");
}

#[test]
fn explain_without_simplification_lists_minterms() {
    let out = ok(&["explain", "--expr", &fixture("min.fn"), "--no-simplify", "--format", "structured"]);
    let dnf: DnfFormula = serde_json::from_str(&out).unwrap();
    assert_eq!(dnf.render(false), "x ∧ y");
    let lukor = ok(&["explain", "--expr", &fixture("lukOR.fn"), "--no-simplify"]);
    assert_eq!(lukor, "(x ∧ y) ∨ (x ∧ ¬y) ∨ (y ∧ ¬x)\n");
}

#[test]
fn demo_prints_the_witness() {
    let fallback = format!("output-mod:{}", fixture("const1.fn"));
    let out = ok(&["demo-noncomp", "--gamma", &fallback, "--alpha", "0.5"]);
    assert!(out.contains("Γ(g∘f) ≠ Γ(g)∘Γ(f)"), "{out}");
    let doc = ok(&["demo-noncomp", "--gamma", &fallback, "--format", "structured"]);
    match serde_json::from_str::<NonCompositional>(&doc).unwrap() {
        NonCompositional::Witness { lhs, rhs, .. } => assert_ne!(lhs, rhs),
        other => panic!("expected a witness, got {other:?}"),
    }
    let ext = ok(&["demo-noncomp", "--format", "structured"]);
    assert!(matches!(
        serde_json::from_str::<NonCompositional>(&ext).unwrap(),
        NonCompositional::ArityMismatch { gamma_g_in_arity: 2, f_out_arity: 1 }
    ));
}

#[test]
fn repaired_expression_checks_coherent() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("repaired.json").display().to_string();
    let o = cohexp(&["repair", "--expr", &fixture("lukOR.fn"), "--gamma", "extend", "--format", "structured", "--output", &out]);
    assert_eq!(o.status.code(), Some(0));
    assert!(o.stdout.is_empty());
    let repaired = FuzzyExpr::load(out.as_ref()).unwrap();
    assert_eq!(repaired.in_arity(), 3);
    let text = ok(&["check", "--expr", &out, "--random", "5000"]);
    assert!(text.ends_with("verdict: coherent on sample\n"), "{text}");
}

#[test]
fn functor_law_verdicts() {
    let law = ok(&["functor-law", "--expr", &fixture("min.fn"), "--outer", &fixture("const1.fn"), "--format", "structured"]);
    assert_eq!(serde_json::from_str::<FunctorLaw>(&law).unwrap(), FunctorLaw::Holds);
    fails_with(&["functor-law", "--expr", &fixture("min.fn"), "--outer", &fixture("min.fn")], 2, "structure");
}

#[test]
fn errors_map_to_exit_codes() {
    fails_with(&["check", "--expr", "/nonexistent/f.fn"], 2, "usage");
    fails_with(&["check", "--expr", &fixture("lukOR.fn"), "--alpha", "1.5"], 2, "invalid");
    fails_with(&["check", "--expr", &fixture("lukOR.fn"), "--grid", "3", "--random", "3"], 2, "usage");
    fails_with(&["frobnicate"], 2, "usage");
    fails_with(&["check"], 2, "usage");
    fails_with(&["explain", "--expr", &fixture("min.fn"), "--levels", "3"], 2, "invalid");
    let incoherent = format!("output-mod:{}", fixture("lukOR.fn"));
    fails_with(&["repair", "--expr", &fixture("lukOR.fn"), "--gamma", &incoherent], 3, "contract");
}

#[test]
fn config_supplies_flags_and_flags_win() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.json");
    std::fs::write(&cfg, r#"{"grid": 11, "format": "structured", "levels": 3, "setting": "xor"}"#).unwrap();
    let cfg = cfg.display().to_string();
    let lukor = fixture("lukOR.fn");

    let doc = ok(&["check", "--config", &cfg, "--expr", &lukor]);
    let report: CoherenceReport = serde_json::from_str(&doc).unwrap();
    assert_eq!(report.sample_count, 121);
    assert_eq!(report.projection, Projection::quantize(3).unwrap());

    let doc = ok(&["check", "--config", &cfg, "--expr", &lukor, "--alpha", "0.5", "--random", "50"]);
    let report: CoherenceReport = serde_json::from_str(&doc).unwrap();
    assert_eq!(report.sample_count, 50);
    assert_eq!(report.projection, Projection::half());

    let text = ok(&["check", "--config", &cfg, "--expr", &lukor, "--format", "text"]);
    assert!(text.starts_with("function: 2 -> 1"));

    std::fs::write(dir.path().join("bad.json"), "[1, 2]").unwrap();
    let bad = dir.path().join("bad.json").display().to_string();
    fails_with(&["check", "--config", &bad, "--expr", &lukor], 2, "usage");
}

#[test]
fn seed_comes_from_flag_then_environment() {
    let lukor = fixture("lukOR.fn");
    let args = ["check", "--expr", lukor.as_str(), "--random", "100", "--format", "structured"];
    let seed_of = |o: &Output| {
        let r: CoherenceReport = serde_json::from_slice(&o.stdout).unwrap();
        match r.sampling {
            SamplingSpec::Random { seed, .. } => seed,
            other => panic!("unexpected sampling {other:?}"),
        }
    };
    assert_eq!(seed_of(&cohexp(&args)), 0);
    let env = Command::new(env!("CARGO_BIN_EXE_cohexp")).args(args).env("COHEXP_SEED", "5").output().unwrap();
    assert_eq!(seed_of(&env), 5);
    let flag = Command::new(env!("CARGO_BIN_EXE_cohexp"))
        .args(args)
        .args(["--seed", "7"])
        .env("COHEXP_SEED", "5")
        .output()
        .unwrap();
    assert_eq!(seed_of(&flag), 7);
    let bad = Command::new(env!("CARGO_BIN_EXE_cohexp")).args(args).env("COHEXP_SEED", "x").output().unwrap();
    assert_eq!(bad.status.code(), Some(2));
}

#[test]
fn experiment_is_reproducible_and_exports_data() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("data").display().to_string();
    let model = dir.path().join("model.json").display().to_string();
    let args = [
        "experiment", "--setting", "fuzzy-or", "--seed", "1", "--epochs", "20", "--train-size", "200",
        "--val-size", "50", "--test-size", "100", "--hidden", "8,8", "--format", "structured",
        "--data-dir", &data, "--save-model", &model,
    ];
    let first = ok(&args);
    let second = ok(&args);
    assert_eq!(first, second);
    let report: MetricsReport = serde_json::from_str(&first).unwrap();
    assert_eq!(report.seed, 1);
    assert!(report.extended.is_some());
    for split in ["train", "val", "test"] {
        let csv = std::fs::read_to_string(dir.path().join("data").join(format!("{split}.csv"))).unwrap();
        assert!(csv.starts_with("x,y,label\n"));
    }
    let test_rows = std::fs::read_to_string(dir.path().join("data/test.csv")).unwrap().lines().count();
    assert_eq!(test_rows, 101);
    let net = FuzzyExpr::load(model.as_ref()).unwrap();
    assert_eq!((net.in_arity(), net.out_arity()), (2, 1));

    let table = ok(&["experiment", "--setting", "xor", "--epochs", "5", "--train-size", "50", "--val-size", "20", "--test-size", "20"]);
    assert!(table.starts_with("setting: xor  seed: 0"));
    fails_with(&["experiment", "--setting", "and"], 2, "usage");
}
