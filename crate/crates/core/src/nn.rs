//! Small dense feedforward classifier with PReLU hidden layers and a sigmoid
//! output, trained by plain minibatch gradient descent.
//!
//! The loss adds a coherence penalty `λ · mean |f(x) − f(δ(x))|` to binary
//! cross-entropy, which pushes the network towards functions whose Boolean
//! explanation is consistent with its fuzzy behaviour.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::projection::Projection;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Activation {
    /// `z` for `z > 0`, `slope · z` otherwise; the slope is learnable.
    Prelu { slope: f64 },
    Sigmoid,
}

#[inline]
fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// `log(1 + e^z)` without overflow.
#[inline]
fn softplus(z: f64) -> f64 {
    if z > 0.0 {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}

impl Activation {
    #[inline]
    fn apply(&self, z: f64) -> f64 {
        match *self {
            Activation::Prelu { slope } => {
                if z > 0.0 {
                    z
                } else {
                    slope * z
                }
            }
            Activation::Sigmoid => sigmoid(z),
        }
    }

    /// Derivative with respect to `z`, given `z` and `a = apply(z)`.
    #[inline]
    fn derivative(&self, z: f64, a: f64) -> f64 {
        match *self {
            Activation::Prelu { slope } => {
                if z > 0.0 {
                    1.0
                } else {
                    slope
                }
            }
            Activation::Sigmoid => a * (1.0 - a),
        }
    }
}

/// Dense layer; `weights` is `out × in`, row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Layer {
    pub weights: Vec<Vec<f64>>,
    pub bias: Vec<f64>,
    pub activation: Activation,
}

impl Layer {
    fn in_dim(&self) -> usize {
        self.weights.first().map_or(0, Vec::len)
    }

    fn out_dim(&self) -> usize {
        self.weights.len()
    }

    fn pre_activation(&self, a: &[f64]) -> Vec<f64> {
        self.weights
            .iter()
            .zip(&self.bias)
            .map(|(row, b)| row.iter().zip(a).fold(*b, |acc, (w, x)| acc + w * x))
            .collect()
    }

    fn param_count(&self) -> usize {
        let slope = usize::from(matches!(self.activation, Activation::Prelu { .. }));
        self.out_dim() * self.in_dim() + self.out_dim() + slope
    }
}

#[derive(Deserialize)]
struct RawModel {
    layers: Vec<Layer>,
}

/// A frozen network `[0,1]^n -> (0,1)^m`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawModel")]
pub struct MlpModel {
    layers: Vec<Layer>,
}

impl TryFrom<RawModel> for MlpModel {
    type Error = Error;

    fn try_from(raw: RawModel) -> Result<Self> {
        MlpModel::new(raw.layers)
    }
}

/// Forward pass intermediates, one entry per layer.
struct Trace {
    input: Vec<f64>,
    pre: Vec<Vec<f64>>,
    post: Vec<Vec<f64>>,
}

impl MlpModel {
    pub fn new(layers: Vec<Layer>) -> Result<Self> {
        if layers.is_empty() {
            return Err(Error::structure("a network needs at least one layer"));
        }
        for (k, l) in layers.iter().enumerate() {
            if l.out_dim() == 0 || l.bias.len() != l.out_dim() {
                return Err(Error::structure(format!("layer {k}: bias/row count mismatch")));
            }
            if l.weights.iter().any(|r| r.len() != l.in_dim()) {
                return Err(Error::structure(format!("layer {k}: ragged weight matrix")));
            }
            if k > 0 && layers[k - 1].out_dim() != l.in_dim() {
                return Err(Error::structure(format!(
                    "layer {k} expects {} inputs but layer {} produces {}",
                    l.in_dim(),
                    k - 1,
                    layers[k - 1].out_dim()
                )));
            }
            let finite = l.weights.iter().flatten().chain(&l.bias).all(|v| v.is_finite());
            if !finite {
                return Err(Error::invalid(format!("layer {k}: non-finite parameter")));
            }
        }
        if layers.last().map(|l| l.activation) != Some(Activation::Sigmoid) {
            return Err(Error::structure("the output layer must use a sigmoid"));
        }
        Ok(MlpModel { layers })
    }

    /// Glorot-uniform weights, zero biases, PReLU slopes at 0.25.
    pub fn init(in_arity: usize, hidden: &[usize], out_arity: usize, seed: u64) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut dims = vec![in_arity];
        dims.extend_from_slice(hidden);
        dims.push(out_arity);
        let n_layers = dims.len() - 1;
        let layers = dims
            .windows(2)
            .enumerate()
            .map(|(k, w)| {
                let (fan_in, fan_out) = (w[0], w[1]);
                let limit = (6.0 / (fan_in + fan_out).max(1) as f64).sqrt();
                Layer {
                    weights: (0..fan_out)
                        .map(|_| (0..fan_in).map(|_| rng.gen_range(-limit..=limit)).collect())
                        .collect(),
                    bias: vec![0.0; fan_out],
                    activation: if k + 1 == n_layers {
                        Activation::Sigmoid
                    } else {
                        Activation::Prelu { slope: 0.25 }
                    },
                }
            })
            .collect();
        MlpModel::new(layers)
    }

    pub fn in_arity(&self) -> usize {
        self.layers[0].in_dim()
    }

    pub fn out_arity(&self) -> usize {
        self.layers[self.layers.len() - 1].out_dim()
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn forward(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.in_arity() {
            return Err(Error::structure(format!(
                "network expects {} inputs, got {}",
                self.in_arity(),
                x.len()
            )));
        }
        Ok(self.forward_unchecked(x))
    }

    pub(crate) fn forward_unchecked(&self, x: &[f64]) -> Vec<f64> {
        self.layers.iter().fold(x.to_vec(), |a, l| {
            l.pre_activation(&a)
                .into_iter()
                .map(|z| l.activation.apply(z))
                .collect()
        })
    }

    fn trace(&self, x: &[f64]) -> Trace {
        let mut pre = Vec::with_capacity(self.layers.len());
        let mut post: Vec<Vec<f64>> = Vec::with_capacity(self.layers.len());
        for l in &self.layers {
            let a_prev = post.last().map_or(x, Vec::as_slice);
            let z = l.pre_activation(a_prev);
            let a = z.iter().map(|&v| l.activation.apply(v)).collect();
            pre.push(z);
            post.push(a);
        }
        Trace {
            input: x.to_vec(),
            pre,
            post,
        }
    }

    pub fn param_count(&self) -> usize {
        self.layers.iter().map(Layer::param_count).sum()
    }

    /// Parameters flattened per layer: weights row-major, bias, PReLU slope.
    pub fn params(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.param_count());
        for l in &self.layers {
            out.extend(l.weights.iter().flatten());
            out.extend(&l.bias);
            if let Activation::Prelu { slope } = l.activation {
                out.push(slope);
            }
        }
        out
    }

    pub fn set_params(&mut self, p: &[f64]) -> Result<()> {
        if p.len() != self.param_count() {
            return Err(Error::structure(format!(
                "expected {} parameters, got {}",
                self.param_count(),
                p.len()
            )));
        }
        let mut it = p.iter().copied();
        for l in &mut self.layers {
            for w in l.weights.iter_mut().flatten() {
                *w = it.next().unwrap_or_default();
            }
            for b in &mut l.bias {
                *b = it.next().unwrap_or_default();
            }
            if let Activation::Prelu { slope } = &mut l.activation {
                *slope = it.next().unwrap_or_default();
            }
        }
        Ok(())
    }

    fn weight_norm_sq(&self) -> f64 {
        self.layers
            .iter()
            .flat_map(|l| l.weights.iter().flatten())
            .map(|w| w * w)
            .sum()
    }

    /// Accumulates `∂L/∂θ` into `grad` given `∂L/∂z` at the output layer.
    fn backprop(&self, trace: &Trace, mut dz: Vec<f64>, grad: &mut [f64]) {
        let offsets = self.layer_offsets();
        for k in (0..self.layers.len()).rev() {
            let l = &self.layers[k];
            let a_prev: &[f64] = if k == 0 { &trace.input } else { &trace.post[k - 1] };
            let base = offsets[k];
            let (n_in, n_out) = (l.in_dim(), l.out_dim());
            for r in 0..n_out {
                for c in 0..n_in {
                    grad[base + r * n_in + c] += dz[r] * a_prev[c];
                }
                grad[base + n_out * n_in + r] += dz[r];
            }
            if k == 0 {
                break;
            }
            let mut da = vec![0.0; n_in];
            for (r, row) in l.weights.iter().enumerate() {
                for (c, w) in row.iter().enumerate() {
                    da[c] += w * dz[r];
                }
            }
            let below = &self.layers[k - 1];
            let z_prev = &trace.pre[k - 1];
            if let Activation::Prelu { .. } = below.activation {
                let slope_idx = offsets[k] - 1;
                grad[slope_idx] += da
                    .iter()
                    .zip(z_prev)
                    .map(|(d, &z)| if z > 0.0 { 0.0 } else { d * z })
                    .sum::<f64>();
            }
            dz = da
                .iter()
                .zip(z_prev)
                .zip(a_prev)
                .map(|((d, &z), &a)| d * below.activation.derivative(z, a))
                .collect();
        }
    }

    fn layer_offsets(&self) -> Vec<usize> {
        self.layers
            .iter()
            .scan(0, |acc, l| {
                let start = *acc;
                *acc += l.param_count();
                Some(start)
            })
            .collect()
    }
}

/// Hyperparameters for [`train`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub hidden_sizes: Vec<usize>,
    pub learning_rate: f64,
    pub weight_decay: f64,
    pub coherence_lambda: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub seed: u64,
    pub early_stopping_patience: usize,
    pub projection: Projection,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            hidden_sizes: vec![16, 16],
            learning_rate: 0.05,
            weight_decay: 0.0,
            coherence_lambda: 0.0,
            epochs: 1500,
            batch_size: 32,
            seed: 0,
            early_stopping_patience: 300,
            projection: Projection::half(),
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let ok = |c: bool, msg: &str| if c { Ok(()) } else { Err(Error::invalid(msg)) };
        ok(
            self.learning_rate.is_finite() && self.learning_rate >= 0.0,
            "learning_rate must be a non-negative real",
        )?;
        ok(
            self.weight_decay.is_finite() && self.weight_decay >= 0.0,
            "weight_decay must be non-negative",
        )?;
        ok(
            self.coherence_lambda.is_finite() && self.coherence_lambda >= 0.0,
            "coherence_lambda must be non-negative",
        )?;
        ok(self.batch_size >= 1, "batch_size must be at least 1")?;
        ok(self.hidden_sizes.iter().all(|&h| h > 0), "hidden sizes must be positive")
    }
}

/// Features with binary labels, for a single-output classifier.
#[derive(Debug, Clone, Copy)]
pub struct Batch<'a> {
    pub features: &'a [Vec<f64>],
    pub labels: &'a [f64],
}

impl<'a> Batch<'a> {
    pub fn new(features: &'a [Vec<f64>], labels: &'a [f64]) -> Result<Self> {
        if features.len() != labels.len() {
            return Err(Error::structure(format!(
                "{} feature rows but {} labels",
                features.len(),
                labels.len()
            )));
        }
        if labels.iter().any(|&l| l != 0.0 && l != 1.0) {
            return Err(Error::invalid("labels must be 0 or 1"));
        }
        Ok(Batch { features, labels })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }
}

/// Loss terms reported separately; `total` is their weighted sum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossBreakdown {
    pub bce: f64,
    pub decay: f64,
    pub coherence: f64,
    pub total: f64,
}

fn check_model_batch(m: &MlpModel, batch: &Batch<'_>) -> Result<()> {
    if m.out_arity() != 1 {
        return Err(Error::structure("training supports single-output classifiers"));
    }
    if let Some(x) = batch.features.iter().find(|x| x.len() != m.in_arity()) {
        return Err(Error::structure(format!(
            "feature row has {} entries, model expects {}",
            x.len(),
            m.in_arity()
        )));
    }
    Ok(())
}

/// BCE (mean) + `weight_decay · ‖W‖²` + `coherence_lambda · mean |f(x) − f(δx)|`.
pub fn loss(m: &MlpModel, batch: &Batch<'_>, cfg: &TrainConfig) -> Result<LossBreakdown> {
    check_model_batch(m, batch)?;
    let n = batch.len().max(1) as f64;
    let mut bce = 0.0;
    let mut coh = 0.0;
    for (x, &y) in batch.features.iter().zip(batch.labels) {
        let t = m.trace(x);
        let z = t.pre[t.pre.len() - 1][0];
        bce += softplus(z) - y * z;
        if cfg.coherence_lambda > 0.0 {
            let px = t.post[t.post.len() - 1][0];
            let pd = m.forward_unchecked(&cfg.projection.apply(x))[0];
            coh += (px - pd).abs();
        }
    }
    let bce = bce / n;
    let coherence = coh / n;
    let decay = m.weight_norm_sq();
    Ok(LossBreakdown {
        bce,
        decay,
        coherence,
        total: bce + cfg.weight_decay * decay + cfg.coherence_lambda * coherence,
    })
}

/// Analytic gradient of [`loss`]`.total` in [`MlpModel::params`] order.
pub fn gradient(m: &MlpModel, batch: &Batch<'_>, cfg: &TrainConfig) -> Result<Vec<f64>> {
    check_model_batch(m, batch)?;
    let n = batch.len().max(1) as f64;
    let mut grad = vec![0.0; m.param_count()];
    for (x, &y) in batch.features.iter().zip(batch.labels) {
        let tx = m.trace(x);
        let px = tx.post[tx.post.len() - 1][0];
        let mut dz_x = (px - y) / n;
        if cfg.coherence_lambda > 0.0 {
            let dx = cfg.projection.apply(x);
            let td = m.trace(&dx);
            let pd = td.post[td.post.len() - 1][0];
            let s = sign(px - pd) * cfg.coherence_lambda / n;
            if s != 0.0 {
                dz_x += s * px * (1.0 - px);
                m.backprop(&td, vec![-s * pd * (1.0 - pd)], &mut grad);
            }
        }
        m.backprop(&tx, vec![dz_x], &mut grad);
    }
    if cfg.weight_decay > 0.0 {
        let offsets = m.layer_offsets();
        for (l, &base) in m.layers.iter().zip(&offsets) {
            for (k, w) in l.weights.iter().flatten().enumerate() {
                grad[base + k] += 2.0 * cfg.weight_decay * w;
            }
        }
    }
    Ok(grad)
}

#[inline]
fn sign(v: f64) -> f64 {
    if v > 0.0 {
        1.0
    } else if v < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// Max relative error between [`gradient`] and central finite differences
/// (step `1e-5`) of [`loss`].
pub fn gradient_check(m: &MlpModel, batch: &Batch<'_>, cfg: &TrainConfig) -> Result<f64> {
    const STEP: f64 = 1e-5;
    let analytic = gradient(m, batch, cfg)?;
    let base = m.params();
    let mut probe = m.clone();
    let mut worst: f64 = 0.0;
    for k in 0..base.len() {
        let mut p = base.clone();
        p[k] = base[k] + STEP;
        probe.set_params(&p)?;
        let up = loss(&probe, batch, cfg)?.total;
        p[k] = base[k] - STEP;
        probe.set_params(&p)?;
        let down = loss(&probe, batch, cfg)?.total;
        let numeric = (up - down) / (2.0 * STEP);
        let scale = analytic[k].abs().max(numeric.abs()).max(1e-8);
        worst = worst.max((analytic[k] - numeric).abs() / scale);
    }
    Ok(worst)
}

/// Fraction of samples whose projected prediction equals the label.
pub fn accuracy(m: &MlpModel, batch: &Batch<'_>, projection: &Projection) -> f64 {
    if batch.is_empty() {
        return 0.0;
    }
    let hits = batch
        .features
        .iter()
        .zip(batch.labels)
        .filter(|(x, &y)| projection.apply_scalar(m.forward_unchecked(x)[0]) == y)
        .count();
    hits as f64 / batch.len() as f64
}

#[derive(Debug, Clone)]
pub struct TrainSummary {
    pub model: MlpModel,
    /// Epoch that produced `model`; 0 means the initialization.
    pub best_epoch: usize,
    pub best_val_accuracy: f64,
    pub epochs_run: usize,
}

pub fn train(cfg: &TrainConfig, train_set: &Batch<'_>, val_set: &Batch<'_>) -> Result<MlpModel> {
    Ok(train_with_summary(cfg, train_set, val_set)?.model)
}

/// Minibatch gradient descent keeping the model with the best validation
/// accuracy; stops after `early_stopping_patience` epochs without a strict
/// improvement.
pub fn train_with_summary(
    cfg: &TrainConfig,
    train_set: &Batch<'_>,
    val_set: &Batch<'_>,
) -> Result<TrainSummary> {
    cfg.validate()?;
    if train_set.is_empty() || val_set.is_empty() {
        return Err(Error::invalid("training and validation sets must be non-empty"));
    }
    let in_arity = train_set.features[0].len();
    if val_set.features.iter().any(|x| x.len() != in_arity) {
        return Err(Error::structure("validation features differ in dimension"));
    }
    let mut model = MlpModel::init(in_arity, &cfg.hidden_sizes, 1, cfg.seed)?;
    check_model_batch(&model, train_set)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed.wrapping_add(1));

    let mut best = model.clone();
    let mut best_acc = accuracy(&model, val_set, &cfg.projection);
    let mut best_epoch = 0;
    let mut order: Vec<usize> = (0..train_set.len()).collect();
    let mut epochs_run = 0;
    let mut xs = Vec::with_capacity(cfg.batch_size);
    let mut ys = Vec::with_capacity(cfg.batch_size);

    for epoch in 1..=cfg.epochs {
        epochs_run = epoch;
        order.shuffle(&mut rng);
        for chunk in order.chunks(cfg.batch_size) {
            xs.clear();
            ys.clear();
            for &i in chunk {
                xs.push(train_set.features[i].clone());
                ys.push(train_set.labels[i]);
            }
            let mb = Batch {
                features: &xs,
                labels: &ys,
            };
            let grad = gradient(&model, &mb, cfg)?;
            if grad.iter().any(|g| !g.is_finite()) {
                return Err(Error::Training {
                    epoch,
                    reason: "non-finite gradient".into(),
                });
            }
            let mut p = model.params();
            for (w, g) in p.iter_mut().zip(&grad) {
                *w -= cfg.learning_rate * g;
            }
            if p.iter().any(|w| !w.is_finite()) {
                return Err(Error::Training {
                    epoch,
                    reason: "non-finite parameters".into(),
                });
            }
            model.set_params(&p)?;
        }
        let l = loss(&model, train_set, cfg)?.total;
        if !l.is_finite() {
            return Err(Error::Training {
                epoch,
                reason: format!("loss became {l}"),
            });
        }
        let acc = accuracy(&model, val_set, &cfg.projection);
        if acc > best_acc {
            best_acc = acc;
            best = model.clone();
            best_epoch = epoch;
        } else if epoch - best_epoch >= cfg.early_stopping_patience {
            break;
        }
    }
    Ok(TrainSummary {
        model: best,
        best_epoch,
        best_val_accuracy: best_acc,
        epochs_run,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn zero_model() -> MlpModel {
        let mut m = MlpModel::init(2, &[3], 1, 0).unwrap();
        let zeros = vec![0.0; m.param_count()];
        m.set_params(&zeros).unwrap();
        m
    }

    fn random_batch(n: usize, seed: u64) -> (Vec<Vec<f64>>, Vec<f64>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let xs: Vec<Vec<f64>> = (0..n).map(|_| vec![rng.gen(), rng.gen()]).collect();
        let ys = xs.iter().map(|_| f64::from(rng.gen::<bool>())).collect();
        (xs, ys)
    }

    #[test]
    fn zero_network_outputs_half() {
        let m = zero_model();
        assert_eq!(m.forward(&[0.3, 0.9]).unwrap(), vec![0.5]);
        assert_eq!(m.forward(&[1.0, 0.0]).unwrap(), vec![0.5]);
        assert!(m.forward(&[1.0]).is_err());
    }

    #[test]
    fn saturated_bias() {
        let m = MlpModel::new(vec![Layer {
            weights: vec![vec![0.0, 0.0]],
            bias: vec![50.0],
            activation: Activation::Sigmoid,
        }])
        .unwrap();
        assert!((m.forward(&[0.2, 0.2]).unwrap()[0] - 1.0).abs() < 1e-6);
    }

    #[test]
    fn rejects_bad_shapes() {
        let bad = MlpModel::new(vec![
            Layer {
                weights: vec![vec![1.0, 1.0]; 3],
                bias: vec![0.0; 3],
                activation: Activation::Prelu { slope: 0.25 },
            },
            Layer {
                weights: vec![vec![1.0, 1.0]],
                bias: vec![0.0],
                activation: Activation::Sigmoid,
            },
        ]);
        assert!(bad.is_err());
        let no_sigmoid = MlpModel::new(vec![Layer {
            weights: vec![vec![1.0]],
            bias: vec![0.0],
            activation: Activation::Prelu { slope: 0.1 },
        }]);
        assert!(no_sigmoid.is_err());
    }

    #[test]
    fn params_round_trip() {
        let m = MlpModel::init(2, &[4, 3], 1, 9).unwrap();
        let mut other = MlpModel::init(2, &[4, 3], 1, 10).unwrap();
        other.set_params(&m.params()).unwrap();
        assert_eq!(other, m);
        assert_eq!(m.param_count(), 2 * 4 + 4 + 1 + 4 * 3 + 3 + 1 + 3 + 1);
    }

    #[test]
    fn coherence_term_vanishes_on_vertices() {
        let m = MlpModel::init(2, &[4], 1, 1).unwrap();
        let xs = vec![vec![0.0, 0.0], vec![0.0, 1.0], vec![1.0, 0.0], vec![1.0, 1.0]];
        let ys = vec![0.0, 1.0, 1.0, 0.0];
        let b = Batch::new(&xs, &ys).unwrap();
        let on = TrainConfig {
            coherence_lambda: 3.0,
            ..TrainConfig::default()
        };
        let off = TrainConfig::default();
        let l = loss(&m, &b, &on).unwrap();
        assert_eq!(l.coherence, 0.0);
        assert_eq!(l.total, loss(&m, &b, &off).unwrap().total);
        assert_eq!(gradient(&m, &b, &on).unwrap(), gradient(&m, &b, &off).unwrap());
    }

    #[test]
    fn coherent_model_has_zero_penalty() {
        let m = zero_model();
        let (xs, ys) = random_batch(32, 4);
        let cfg = TrainConfig {
            coherence_lambda: 1.0,
            ..TrainConfig::default()
        };
        let l = loss(&m, &Batch::new(&xs, &ys).unwrap(), &cfg).unwrap();
        assert!(l.coherence.abs() < 1e-12);
    }

    #[test]
    fn loss_without_penalty_is_bce_plus_decay() {
        let m = MlpModel::init(2, &[4], 1, 2).unwrap();
        let (xs, ys) = random_batch(16, 5);
        let b = Batch::new(&xs, &ys).unwrap();
        let cfg = TrainConfig {
            weight_decay: 0.01,
            ..TrainConfig::default()
        };
        let l = loss(&m, &b, &cfg).unwrap();
        let bce: f64 = xs
            .iter()
            .zip(&ys)
            .map(|(x, y)| {
                let p = m.forward(x).unwrap()[0];
                -(y * p.ln() + (1.0 - y) * (1.0 - p).ln())
            })
            .sum::<f64>()
            / 16.0;
        assert!((l.bce - bce).abs() < 1e-12);
        assert!((l.total - (bce + 0.01 * l.decay)).abs() < 1e-12);
        assert!(l.total >= 0.0);
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let (xs, ys) = random_batch(12, 7);
        let b = Batch::new(&xs, &ys).unwrap();
        let cfg = TrainConfig {
            weight_decay: 0.003,
            coherence_lambda: 0.7,
            ..TrainConfig::default()
        };
        let mut m = MlpModel::init(2, &[4], 1, 3).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let p: Vec<f64> = m.params().iter().map(|w| w + rng.gen_range(-0.3..0.3)).collect();
        m.set_params(&p).unwrap();
        let err = gradient_check(&m, &b, &cfg).unwrap();
        assert!(err < 1e-4, "relative error {err}");
    }

    #[test]
    fn penalty_changes_gradient_off_vertices() {
        let (xs, ys) = random_batch(12, 8);
        let b = Batch::new(&xs, &ys).unwrap();
        let m = MlpModel::init(2, &[4], 1, 3).unwrap();
        let off = TrainConfig::default();
        let on = TrainConfig {
            coherence_lambda: 0.5,
            ..TrainConfig::default()
        };
        assert_ne!(gradient(&m, &b, &off).unwrap(), gradient(&m, &b, &on).unwrap());
    }

    #[test]
    fn zero_learning_rate_returns_initialization() {
        let (xs, ys) = random_batch(40, 1);
        let b = Batch::new(&xs, &ys).unwrap();
        let cfg = TrainConfig {
            learning_rate: 0.0,
            epochs: 5,
            hidden_sizes: vec![4],
            ..TrainConfig::default()
        };
        let m = train(&cfg, &b, &b).unwrap();
        assert_eq!(m, MlpModel::init(2, &[4], 1, cfg.seed).unwrap());
    }

    #[test]
    fn divergence_is_reported() {
        let (xs, ys) = random_batch(40, 1);
        let b = Batch::new(&xs, &ys).unwrap();
        let cfg = TrainConfig {
            learning_rate: 1e300,
            epochs: 5,
            hidden_sizes: vec![4],
            ..TrainConfig::default()
        };
        assert!(matches!(train(&cfg, &b, &b), Err(Error::Training { .. })));
    }

    #[test]
    fn serde_round_trip() {
        let m = MlpModel::init(2, &[3], 1, 5).unwrap();
        let text = serde_json::to_string(&m).unwrap();
        let back: MlpModel = serde_json::from_str(&text).unwrap();
        assert_eq!(back, m);
    }
}
