//! The two synthetic settings: an XOR classifier trained to be coherent, and
//! a fuzzy-OR classifier whose incoherent region is explained with an extra
//! `nc` feature.

use std::fmt::Write as _;
use std::io::Write;

use rand::{Rng, SeedableRng};
use rand::seq::SliceRandom;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::coherence::SamplingSpec;
use crate::dnf::{table_to_dnf, DnfFormula};
use crate::error::{Error, Result};
use crate::expr::{FuzzyExpr, TConorm};
use crate::functor::booleanize;
use crate::gamma::{gamma_extend, GammaSpec};
use crate::nn::{train_with_summary, Batch, TrainConfig};
use crate::projection::Projection;
use crate::truth_table::BoolVector;

/// Half-width of the test band around the XOR decision lines.
pub const XOR_BAND: f64 = 0.1;
/// Distance within which fuzzy-OR test points count as near the triangle.
pub const TRIANGLE_MARGIN: f64 = 0.05;
/// Share of fuzzy-OR test points drawn near the triangle.
pub const TRIANGLE_SHARE: f64 = 0.8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Setting {
    Xor,
    FuzzyOr,
}

impl std::str::FromStr for Setting {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "xor" => Ok(Setting::Xor),
            "fuzzy-or" | "fuzzy_or" => Ok(Setting::FuzzyOr),
            other => Err(Error::invalid(format!(
                "unknown setting '{other}' (expected xor or fuzzy-or)"
            ))),
        }
    }
}

impl std::fmt::Display for Setting {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Setting::Xor => "xor",
            Setting::FuzzyOr => "fuzzy-or",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Split {
    Train,
    Val,
    Test,
}

impl Split {
    fn salt(self) -> u64 {
        match self {
            Split::Train => 0x7261_696e,
            Split::Val => 0x7661_6c00,
            Split::Test => 0x7465_7374,
        }
    }
}

impl std::fmt::Display for Split {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Split::Train => "train",
            Split::Val => "val",
            Split::Test => "test",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    pub setting: Setting,
    pub split: Split,
    pub seed: u64,
    pub features: Vec<Vec<f64>>,
    /// `0.0` or `1.0`.
    pub labels: Vec<f64>,
}

/// Ground-truth label of a point.
pub fn label(setting: Setting, x: &[f64]) -> f64 {
    let d = Projection::half();
    match setting {
        Setting::Xor => f64::from(u8::from(d.apply_scalar(x[0]) != d.apply_scalar(x[1]))),
        Setting::FuzzyOr => d.apply_scalar(TConorm::Lukasiewicz.apply(x[0], x[1])),
    }
}

/// Euclidean distance from `p` to the closed triangle
/// `{x + y ≥ 0.5, x ≤ 0.5, y ≤ 0.5}`.
pub fn distance_to_triangle(p: &[f64]) -> f64 {
    let (x, y) = (p[0], p[1]);
    if x + y >= 0.5 && x <= 0.5 && y <= 0.5 {
        return 0.0;
    }
    let corners = [(0.5, 0.0), (0.0, 0.5), (0.5, 0.5)];
    (0..3)
        .map(|k| segment_distance((x, y), corners[k], corners[(k + 1) % 3]))
        .fold(f64::INFINITY, f64::min)
}

fn segment_distance(p: (f64, f64), a: (f64, f64), b: (f64, f64)) -> f64 {
    let (dx, dy) = (b.0 - a.0, b.1 - a.1);
    let t = (((p.0 - a.0) * dx + (p.1 - a.1) * dy) / (dx * dx + dy * dy)).clamp(0.0, 1.0);
    let (cx, cy) = (a.0 + t * dx, a.1 + t * dy);
    ((p.0 - cx).powi(2) + (p.1 - cy).powi(2)).sqrt()
}

/// True for points within [`XOR_BAND`] of the line `x = 0.5` or `y = 0.5`.
pub fn near_xor_lines(p: &[f64]) -> bool {
    (p[0] - 0.5).abs() <= XOR_BAND || (p[1] - 0.5).abs() <= XOR_BAND
}

pub fn near_triangle(p: &[f64]) -> bool {
    distance_to_triangle(p) <= TRIANGLE_MARGIN
}

fn uniform_point(rng: &mut ChaCha8Rng) -> Vec<f64> {
    vec![rng.gen(), rng.gen()]
}

fn sample_where(rng: &mut ChaCha8Rng, accept: fn(&[f64]) -> bool) -> Vec<f64> {
    loop {
        let p = uniform_point(rng);
        if accept(&p) {
            return p;
        }
    }
}

/// Train and validation points are uniform on the square. Test points for
/// XOR lie in the bands around the decision lines; for fuzzy-OR,
/// [`TRIANGLE_SHARE`] of them lie near the triangle and the rest are uniform.
pub fn make_dataset(setting: Setting, split: Split, size: usize, seed: u64) -> Result<Dataset> {
    if size == 0 {
        return Err(Error::invalid("dataset size must be at least 1"));
    }
    let setting_salt = match setting {
        Setting::Xor => 0x786f72,
        Setting::FuzzyOr => 0x666f72,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ split.salt() ^ (setting_salt << 32));
    let features: Vec<Vec<f64>> = match (split, setting) {
        (Split::Train | Split::Val, _) => (0..size).map(|_| uniform_point(&mut rng)).collect(),
        (Split::Test, Setting::Xor) => (0..size)
            .map(|_| sample_where(&mut rng, near_xor_lines))
            .collect(),
        (Split::Test, Setting::FuzzyOr) => {
            let near = (TRIANGLE_SHARE * size as f64).round() as usize;
            let mut pts: Vec<Vec<f64>> = (0..near)
                .map(|_| sample_where(&mut rng, near_triangle))
                .collect();
            pts.extend((near..size).map(|_| uniform_point(&mut rng)));
            pts.shuffle(&mut rng);
            pts
        }
    };
    let labels = features.iter().map(|p| label(setting, p)).collect();
    Ok(Dataset {
        setting,
        split,
        seed,
        features,
        labels,
    })
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn batch(&self) -> Batch<'_> {
        Batch {
            features: &self.features,
            labels: &self.labels,
        }
    }

    /// Rows `x,y,label`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["x", "y", "label"])?;
        for (p, &l) in self.features.iter().zip(&self.labels) {
            w.write_record([p[0].to_string(), p[1].to_string(), (l as u8).to_string()])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Accuracy and coherency of a model on one split.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitMetrics {
    pub split: Split,
    pub accuracy: f64,
    pub coherency: f64,
}

fn is_coherent_sample(model: &FuzzyExpr, projection: &Projection, x: &[f64]) -> bool {
    let y = projection.apply(&model.eval_unchecked(x));
    let yd = projection.apply(&model.eval_unchecked(&projection.apply(x)));
    y == yd
}

fn check_model(model: &FuzzyExpr, dataset: &Dataset) -> Result<()> {
    if model.out_arity() != 1 {
        return Err(Error::structure("scoring needs a single-output classifier"));
    }
    if let Some(p) = dataset.features.iter().find(|p| p.len() != model.in_arity()) {
        return Err(Error::structure(format!(
            "model takes {} inputs, sample has {}",
            model.in_arity(),
            p.len()
        )));
    }
    Ok(())
}

/// Accuracy of `δ(model(x))` against the labels, and the share of samples
/// where the model is coherent.
pub fn evaluate(model: &FuzzyExpr, dataset: &Dataset, projection: &Projection) -> Result<SplitMetrics> {
    check_model(model, dataset)?;
    let n = dataset.len().max(1) as f64;
    let mut hits = 0usize;
    let mut coherent = 0usize;
    for (x, &l) in dataset.features.iter().zip(&dataset.labels) {
        crate::expr::check_unit(x)?;
        if projection.apply_scalar(model.eval_unchecked(x)[0]) == l {
            hits += 1;
        }
        if is_coherent_sample(model, projection, x) {
            coherent += 1;
        }
    }
    Ok(SplitMetrics {
        split: dataset.split,
        accuracy: hits as f64 / n,
        coherency: coherent as f64 / n,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassExplanation {
    pub label: u8,
    pub formula: String,
    pub fidelity: f64,
}

/// Per-class formulas over `variables` and their fidelity on a dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Explanations {
    pub variables: Vec<String>,
    pub classes: Vec<ClassExplanation>,
}

impl Explanations {
    pub fn class(&self, label: u8) -> Option<&ClassExplanation> {
        self.classes.iter().find(|c| c.label == label)
    }
}

/// Class-1 and class-0 formulas of a single-output model's booleanization.
fn class_formulas(model: &FuzzyExpr, projection: &Projection, names: &[String]) -> Result<[DnfFormula; 2]> {
    let table = booleanize(model, projection)?;
    let one = table_to_dnf(&table, true)?.with_names(names.to_vec())?;
    let zero = table_to_dnf(&table.negated(), true)?.with_names(names.to_vec())?;
    Ok([zero, one])
}

fn score(
    formulas: &[DnfFormula; 2],
    inputs: &[Vec<bool>],
    targets: &[bool],
    names: Vec<String>,
) -> Result<Explanations> {
    let n = targets.len().max(1) as f64;
    let classes = [1u8, 0]
        .into_iter()
        .map(|l| {
            let f = &formulas[usize::from(l)];
            let mut agree = 0usize;
            for (v, &t) in inputs.iter().zip(targets) {
                if f.eval(v)?[0] == (t == (l == 1)) {
                    agree += 1;
                }
            }
            Ok(ClassExplanation {
                label: l,
                formula: f.render(false),
                fidelity: agree as f64 / n,
            })
        })
        .collect::<Result<_>>()?;
    Ok(Explanations {
        variables: names,
        classes,
    })
}

/// Extracts per-class DNFs from a single-output model and scores them on
/// `dataset`: fidelity is the share of samples where the formula on the
/// projected features agrees with the projected model output.
///
/// With a domain-extension `gamma` the formulas are read off the extended
/// model. Each extra variable is named `nc` (or `nc1`, `nc2`, …) and is bound
/// per sample to `δ(model(x))` where the model is incoherent at `x`, and to
/// `0` elsewhere.
pub fn extract_and_score(
    model: &FuzzyExpr,
    dataset: &Dataset,
    projection: &Projection,
    gamma: Option<&GammaSpec>,
) -> Result<Explanations> {
    check_model(model, dataset)?;
    if !projection.is_boolean() {
        return Err(Error::invalid("explanations need a projection onto {0,1}"));
    }
    let n = model.in_arity();
    let base_names: Vec<String> = (0..n).map(crate::dnf::default_name).collect();
    let targets: Vec<bool> = dataset
        .features
        .iter()
        .map(|x| projection.apply_scalar(model.eval_unchecked(x)[0]) == 1.0)
        .collect();
    let projected: Vec<Vec<bool>> = dataset
        .features
        .iter()
        .map(|x| BoolVector::from_reals(&projection.apply(x)).map(|v| v.bits().to_vec()))
        .collect::<Result<_>>()?;

    let Some(spec) = gamma else {
        let formulas = class_formulas(model, projection, &base_names)?;
        return score(&formulas, &projected, &targets, base_names);
    };
    if !spec.is_extension() {
        return Err(Error::invalid("extended explanations need a domain-extension spec"));
    }
    if spec.projection != *projection {
        return Err(Error::invalid("gamma projection differs from the scoring projection"));
    }
    let extended = gamma_extend(model, spec)?;
    let extra = extended.in_arity() - n;
    let mut names = base_names;
    names.extend((1..=extra).map(|j| if extra == 1 { "nc".to_string() } else { format!("nc{j}") }));
    let formulas = class_formulas(&extended, projection, &names)?;
    let inputs: Vec<Vec<bool>> = dataset
        .features
        .iter()
        .zip(projected)
        .zip(&targets)
        .map(|((x, mut v), &t)| {
            let nc = !is_coherent_sample(model, projection, x);
            v.extend(std::iter::repeat_n(nc && t, extra));
            v
        })
        .collect();
    score(&formulas, &inputs, &targets, names)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub seed: u64,
    pub train_size: usize,
    pub val_size: usize,
    pub test_size: usize,
    pub train: TrainConfig,
    /// Sample used to locate incoherent classes for the extended explainer.
    pub gamma_sampling: SamplingSpec,
}

impl ExperimentConfig {
    pub fn default_for(setting: Setting) -> Self {
        let coherence_lambda = match setting {
            Setting::Xor => 1.0,
            Setting::FuzzyOr => 0.0,
        };
        let train = TrainConfig {
            coherence_lambda,
            ..TrainConfig::default()
        };
        ExperimentConfig {
            seed: 0,
            train_size: 1000,
            val_size: 250,
            test_size: 1000,
            train,
            gamma_sampling: SamplingSpec::Grid {
                points_per_axis: 101,
            },
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub setting: Setting,
    pub seed: u64,
    pub splits: Vec<SplitMetrics>,
    /// Explanations of the trained model, scored on the test split.
    pub explanations: Explanations,
    /// Explanations of the domain-extended model (fuzzy-OR only).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub extended: Option<Explanations>,
    pub best_epoch: usize,
    pub notes: Vec<String>,
}

impl MetricsReport {
    pub fn split(&self, split: Split) -> Option<&SplitMetrics> {
        self.splits.iter().find(|s| s.split == split)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// Plain-text table: accuracy and coherency per split, then each class's
    /// formula and test fidelity. Percentages carry one decimal.
    pub fn to_table(&self) -> String {
        let pct = |v: f64| format!("{:.1}", 100.0 * v);
        let get = |s: Split, acc: bool| {
            self.split(s)
                .map_or_else(|| "-".into(), |m| pct(if acc { m.accuracy } else { m.coherency }))
        };
        let mut out = String::new();
        let _ = writeln!(out, "setting: {}  seed: {}", self.setting, self.seed);
        let _ = writeln!(
            out,
            "{:<10} {:>7} {:>7} {:>7} | {:>7} {:>7} {:>7}",
            "", "acc-tr", "acc-va", "acc-te", "coh-tr", "coh-va", "coh-te"
        );
        let _ = writeln!(
            out,
            "{:<10} {:>7} {:>7} {:>7} | {:>7} {:>7} {:>7}",
            "model",
            get(Split::Train, true),
            get(Split::Val, true),
            get(Split::Test, true),
            get(Split::Train, false),
            get(Split::Val, false),
            get(Split::Test, false)
        );
        let mut rows = vec![("naive", &self.explanations)];
        if let Some(ext) = &self.extended {
            rows.push(("extended", ext));
        }
        let _ = writeln!(out, "{:<10} {:>5} {:>8}  formula", "explainer", "class", "fidelity");
        for (name, ex) in rows {
            for c in &ex.classes {
                let _ = writeln!(out, "{:<10} {:>5} {:>8}  {}", name, c.label, pct(c.fidelity), c.formula);
            }
        }
        for n in &self.notes {
            let _ = writeln!(out, "note: {n}");
        }
        out
    }
}

/// Everything produced by one run.
#[derive(Debug, Clone)]
pub struct ExperimentRun {
    pub report: MetricsReport,
    pub model: FuzzyExpr,
    pub train: Dataset,
    pub val: Dataset,
    pub test: Dataset,
}

/// Datasets, training, per-split metrics and explanations for one seed.
pub fn run_experiment(setting: Setting, cfg: &ExperimentConfig) -> Result<ExperimentRun> {
    let seed = cfg.seed;
    let train = make_dataset(setting, Split::Train, cfg.train_size, seed)?;
    let val = make_dataset(setting, Split::Val, cfg.val_size, seed)?;
    let test = make_dataset(setting, Split::Test, cfg.test_size, seed)?;
    let tcfg = TrainConfig {
        seed,
        ..cfg.train.clone()
    };
    let summary = train_with_summary(&tcfg, &train.batch(), &val.batch())?;
    let model = FuzzyExpr::mlp(summary.model);
    let p = tcfg.projection;
    let splits = [&train, &val, &test]
        .into_iter()
        .map(|d| evaluate(&model, d, &p))
        .collect::<Result<_>>()?;
    let explanations = extract_and_score(&model, &test, &p, None)?;
    let extended = match setting {
        Setting::Xor => None,
        Setting::FuzzyOr => {
            let spec = GammaSpec::domain_extension(p, cfg.gamma_sampling);
            Some(extract_and_score(&model, &test, &p, Some(&spec))?)
        }
    };
    let notes = vec![match setting {
        Setting::Xor => format!("test points lie within {XOR_BAND} of x = 0.5 or y = 0.5"),
        Setting::FuzzyOr => format!(
            "{:.0}% of test points lie within {TRIANGLE_MARGIN} of the triangle x+y >= 0.5, x <= 0.5, y <= 0.5",
            100.0 * TRIANGLE_SHARE
        ),
    }];
    Ok(ExperimentRun {
        report: MetricsReport {
            setting,
            seed,
            splits,
            explanations,
            extended,
            best_epoch: summary.best_epoch,
            notes,
        },
        model,
        train,
        val,
        test,
    })
}
