use std::fmt::Write as _;
use std::fs::File;
use std::io::Write as _;

use serde::Serialize;

use cohexp::coherence::{check_coherence, CoherenceReport};
use cohexp::dnf::{table_to_dnf, DnfFormula};
use cohexp::experiments::{run_experiment, ExperimentConfig, Setting, Split};
use cohexp::functor::{booleanize, counterexample_pair, verify_functor_law, FunctorLaw};
use cohexp::gamma::{apply_gamma, demo_noncompositional_with, explain, NonCompositional};
use cohexp::FuzzyExpr;

use crate::args::{
    gamma_spec, load_expr, CheckArgs, Common, DemoArgs, ExperimentArgs, ExplainArgs, Format,
    FunctorLawArgs, RepairArgs,
};
use crate::CliError;

const DEFAULT_WITNESSES: usize = 3;

fn emit(common: &Common, body: &str) -> Result<(), CliError> {
    let mut body = body.to_string();
    if !body.ends_with('\n') {
        body.push('\n');
    }
    match &common.output {
        Some(path) => std::fs::write(path, body)?,
        None => std::io::stdout().lock().write_all(body.as_bytes())?,
    }
    Ok(())
}

fn structured<T: Serialize>(value: &T) -> Result<String, CliError> {
    Ok(serde_json::to_string_pretty(value).map_err(cohexp::Error::from)?)
}

fn tuple(v: &[f64]) -> String {
    let parts: Vec<String> = v.iter().map(|x| format!("{x}")).collect();
    format!("({})", parts.join(", "))
}

fn bits(v: &[bool]) -> String {
    v.iter().map(|&b| if b { '1' } else { '0' }).collect()
}

pub fn check(args: CheckArgs) -> Result<(), CliError> {
    let f = args.input.load()?;
    let p = args.common.projection()?;
    let sampling = args.common.sampling(f.in_arity())?;
    let report = check_coherence(&f, &p, &sampling)?;
    let body = match args.common.format() {
        Format::Structured => structured(&report)?,
        Format::Text => check_text(&f, &report, args.witnesses.unwrap_or(DEFAULT_WITNESSES)),
    };
    emit(&args.common, &body)
}

fn check_text(f: &FuzzyExpr, r: &CoherenceReport, shown: usize) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "function: {} -> {}", f.in_arity(), f.out_arity());
    let _ = writeln!(out, "projection: {}", r.projection);
    let _ = writeln!(out, "sample: {} points", r.sample_count);
    for c in &r.per_component {
        let _ = writeln!(
            out,
            "component {}: coherent fraction {:.6} ({} of {})",
            c.component, c.coherent_fraction, c.coherent_count, r.sample_count
        );
        for w in c.witnesses.iter().take(shown) {
            let _ = writeln!(
                out,
                "  witness x = {}: f(x) = {}, δ(f(x)) = {}, δ(f(δ(x))) = {}",
                tuple(&w.point),
                w.output,
                w.projected,
                w.projected_at_projection
            );
        }
    }
    let verdict = if r.is_coherent() { "coherent on sample" } else { "incoherent" };
    let _ = write!(out, "verdict: {verdict}");
    out
}

pub fn explain_cmd(args: ExplainArgs) -> Result<(), CliError> {
    let f = args.input.load()?;
    let p = args.common.projection()?;
    if !p.is_boolean() {
        return Err(cohexp::Error::Invalid(format!("explanations need a projection onto {{0,1}}, got {p}")).into());
    }
    let simplify = !args.no_simplify;
    let dnf: DnfFormula = match &args.gamma {
        Some(g) => explain(&f, &gamma_spec(g, &args.common, f.in_arity())?, simplify)?,
        None => table_to_dnf(&booleanize(&f, &p)?, simplify)?,
    };
    let body = match args.common.format() {
        Format::Structured => structured(&dnf)?,
        Format::Text if dnf.n_outputs() == 1 => dnf.render_output(0, args.ascii),
        Format::Text => (0..dnf.n_outputs())
            .map(|i| format!("output {i}: {}", dnf.render_output(i, args.ascii)))
            .collect::<Vec<_>>()
            .join("\n"),
    };
    emit(&args.common, &body)
}

pub fn repair(args: RepairArgs) -> Result<(), CliError> {
    let f = args.input.load()?;
    let Some(g) = &args.gamma else {
        return Err(CliError::Usage("repair needs --gamma".into()));
    };
    let spec = gamma_spec(g, &args.common, f.in_arity())?;
    let repaired = apply_gamma(&f, &spec)?;
    let body = match args.common.format() {
        Format::Structured => repaired.to_json()?,
        Format::Text => {
            let changed = if repaired == f { "unchanged" } else { "repaired" };
            format!(
                "{changed}: {} -> {} became {} -> {}\n{repaired}",
                f.in_arity(),
                f.out_arity(),
                repaired.in_arity(),
                repaired.out_arity()
            )
        }
    };
    emit(&args.common, &body)
}

pub fn demo(args: DemoArgs) -> Result<(), CliError> {
    let g = match &args.expr {
        Some(path) => load_expr(path)?,
        None => counterexample_pair().1,
    };
    let spec = gamma_spec(args.gamma.as_deref().unwrap_or("extend"), &args.common, g.in_arity())?;
    let outcome = demo_noncompositional_with(&g, &spec)?;
    let body = match args.common.format() {
        Format::Structured => structured(&outcome)?,
        Format::Text => match &outcome {
            NonCompositional::Witness { g, point, lhs, rhs, .. } => format!(
                "g = {g}\nf = constant a = {a}\nΓ(g∘f)(a) = {}\n(Γ(g)∘Γ(f))(a) = {}\nΓ(g∘f) ≠ Γ(g)∘Γ(f)",
                tuple(lhs),
                tuple(rhs),
                a = tuple(point)
            ),
            NonCompositional::ArityMismatch { gamma_g_in_arity, f_out_arity } => format!(
                "Γ(g) takes {gamma_g_in_arity} inputs but f produces {f_out_arity}, so Γ(g)∘Γ(f) is undefined"
            ),
            NonCompositional::NotApplicable => "no witness: the repair leaves g unchanged on the sample".into(),
        },
    };
    emit(&args.common, &body)
}

pub fn functor_law(args: FunctorLawArgs) -> Result<(), CliError> {
    let (Some(f), Some(g)) = (&args.expr, &args.outer) else {
        return Err(CliError::Usage("functor-law needs --expr and --outer".into()));
    };
    let (f, g) = (load_expr(f)?, load_expr(g)?);
    let law = verify_functor_law(&f, &g, &args.common.projection()?)?;
    let body = match args.common.format() {
        Format::Structured => structured(&law)?,
        Format::Text => match &law {
            FunctorLaw::Holds => "holds: (g∘f)^δ = g^δ ∘ f^δ on every vertex".into(),
            FunctorLaw::Violated { witness, composite, composed } => format!(
                "violated at vertex {}: (g∘f)^δ = {}, g^δ ∘ f^δ = {}",
                bits(witness.bits()),
                bits(composite.bits()),
                bits(composed.bits())
            ),
        },
    };
    emit(&args.common, &body)
}

pub fn experiment(args: ExperimentArgs) -> Result<(), CliError> {
    let Some(setting) = args.setting else {
        return Err(CliError::Usage("experiment needs --setting xor|fuzzy-or".into()));
    };
    let cfg = experiment_config(&args, setting)?;
    let run = run_experiment(setting, &cfg)?;
    if let Some(dir) = &args.data_dir {
        std::fs::create_dir_all(dir)?;
        for (split, data) in [(Split::Train, &run.train), (Split::Val, &run.val), (Split::Test, &run.test)] {
            data.write_csv(File::create(dir.join(format!("{split}.csv")))?)?;
        }
    }
    if let Some(path) = &args.save_model {
        std::fs::write(path, run.model.to_json()?)?;
    }
    let body = match args.common.format() {
        Format::Structured => run.report.to_json()?,
        Format::Text => run.report.to_table(),
    };
    emit(&args.common, &body)
}

fn experiment_config(args: &ExperimentArgs, setting: Setting) -> Result<ExperimentConfig, CliError> {
    let mut cfg = ExperimentConfig::default_for(setting).with_seed(args.common.seed()?);
    let t = &mut cfg.train;
    t.projection = args.common.projection()?;
    if let Some(v) = args.epochs {
        t.epochs = v;
    }
    if let Some(v) = args.learning_rate {
        t.learning_rate = v;
    }
    if let Some(v) = args.lambda {
        t.coherence_lambda = v;
    }
    if let Some(v) = args.weight_decay {
        t.weight_decay = v;
    }
    if let Some(v) = &args.hidden {
        t.hidden_sizes = v.clone();
    }
    if let Some(v) = args.batch_size {
        t.batch_size = v;
    }
    if let Some(v) = args.patience {
        t.early_stopping_patience = v;
    }
    if let Some(v) = args.train_size {
        cfg.train_size = v;
    }
    if let Some(v) = args.val_size {
        cfg.val_size = v;
    }
    if let Some(v) = args.test_size {
        cfg.test_size = v;
    }
    if args.common.grid.is_some() || args.common.random.is_some() {
        cfg.gamma_sampling = args.common.sampling(2)?;
    }
    Ok(cfg)
}
