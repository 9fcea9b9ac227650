//! Dense feedforward networks trained with plain minibatch SGD on the
//! squared error against ±1 targets.
//!
//! Batches are stored column-major: an input batch is a `in_dim × batch`
//! matrix, one sample per column.

use std::path::Path;

use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::util::{read_json, seeded_rng, sign, write_json};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Linear,
    Relu,
    Tanh,
}

impl Activation {
    pub fn name(self) -> &'static str {
        match self {
            Activation::Linear => "linear",
            Activation::Relu => "relu",
            Activation::Tanh => "tanh",
        }
    }

    fn apply(self, m: &mut DMatrix<f64>) {
        match self {
            Activation::Linear => {}
            Activation::Relu => m.apply(|v| *v = v.max(0.0)),
            Activation::Tanh => m.apply(|v| *v = v.tanh()),
        }
    }

    /// Derivative expressed through the activation's output. The relu
    /// subgradient at zero is zero.
    fn derivative_from_output(self, out: f64) -> f64 {
        match self {
            Activation::Linear => 1.0,
            Activation::Relu => {
                if out > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Tanh => 1.0 - out * out,
        }
    }
}

impl std::str::FromStr for Activation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "linear" => Ok(Activation::Linear),
            "relu" => Ok(Activation::Relu),
            "tanh" => Ok(Activation::Tanh),
            other => Err(Error::config(format!("unknown activation `{other}`"))),
        }
    }
}

impl std::fmt::Display for Activation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

fn default_out_dim() -> usize {
    1
}

/// Architecture of a network. `depth = 0` is a single affine map.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct MlpConfig {
    pub depth: usize,
    pub width: usize,
    pub activation: Activation,
    pub in_dim: usize,
    #[serde(default = "default_out_dim")]
    pub out_dim: usize,
}

impl MlpConfig {
    /// Depth 8, width 128, relu hidden layers.
    pub fn default_for(in_dim: usize) -> Self {
        MlpConfig {
            depth: 8,
            width: 128,
            activation: Activation::Relu,
            in_dim,
            out_dim: 1,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.width == 0 {
            return Err(Error::config("width must be at least 1"));
        }
        if self.in_dim == 0 {
            return Err(Error::config("in_dim must be at least 1"));
        }
        if self.out_dim != 1 {
            return Err(Error::config("out_dim must be 1"));
        }
        Ok(())
    }

    /// `(rows, cols)` of every weight matrix, input side first.
    pub fn layer_shapes(&self) -> Vec<(usize, usize)> {
        let mut shapes = Vec::with_capacity(self.depth + 1);
        let mut fan_in = self.in_dim;
        for _ in 0..self.depth {
            shapes.push((self.width, fan_in));
            fan_in = self.width;
        }
        shapes.push((self.out_dim, fan_in));
        shapes
    }
}

fn default_epochs() -> usize {
    100
}
fn default_batch_size() -> usize {
    64
}
fn default_learning_rate() -> f64 {
    1e-2
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    #[serde(default = "default_epochs")]
    pub epochs: usize,
    #[serde(default = "default_batch_size")]
    pub batch_size: usize,
    #[serde(default = "default_learning_rate")]
    pub learning_rate: f64,
    #[serde(default)]
    pub shuffle_seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: default_epochs(),
            batch_size: default_batch_size(),
            learning_rate: default_learning_rate(),
            shuffle_seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 {
            return Err(Error::config("epochs must be at least 1"));
        }
        if self.batch_size == 0 {
            return Err(Error::config("batch_size must be at least 1"));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::config("learning_rate must be positive"));
        }
        Ok(())
    }
}

/// One affine layer `W a + b`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dense {
    pub weights: DMatrix<f64>,
    pub bias: DVector<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MlpModel {
    config: MlpConfig,
    layers: Vec<Dense>,
    init_seed: u64,
}

/// Parameter gradients, one entry per layer.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub layers: Vec<Dense>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainHistory {
    /// Running mean of the minibatch loss over each epoch.
    pub train_loss: Vec<f64>,
    /// Running minibatch accuracy over each epoch.
    pub train_acc: Vec<f64>,
    /// Validation accuracy after each epoch; empty when no validation split is given.
    pub val_acc: Vec<f64>,
}

impl TrainHistory {
    pub fn final_train_acc(&self) -> Option<f64> {
        self.train_acc.last().copied()
    }

    pub fn final_val_acc(&self) -> Option<f64> {
        self.val_acc.last().copied()
    }
}

/// Glorot-normal weights `N(0, 2 / (fan_in + fan_out))`, zero biases.
pub fn init(config: MlpConfig, seed: u64) -> Result<MlpModel> {
    config.validate()?;
    let mut rng = seeded_rng(seed, 0);
    let layers = config
        .layer_shapes()
        .into_iter()
        .map(|(rows, cols)| {
            let std = (2.0 / (rows + cols) as f64).sqrt();
            let normal = Normal::new(0.0, std).expect("positive std");
            // Filled row by row so the sample order matches the row-major file layout.
            let mut weights = DMatrix::zeros(rows, cols);
            for r in 0..rows {
                for c in 0..cols {
                    weights[(r, c)] = normal.sample(&mut rng);
                }
            }
            Dense {
                weights,
                bias: DVector::zeros(rows),
            }
        })
        .collect();
    Ok(MlpModel {
        config,
        layers,
        init_seed: seed,
    })
}

impl MlpModel {
    pub fn from_layers(config: MlpConfig, layers: Vec<Dense>, init_seed: u64) -> Result<Self> {
        config.validate()?;
        let shapes = config.layer_shapes();
        if shapes.len() != layers.len() {
            return Err(Error::config(format!(
                "expected {} layers, got {}",
                shapes.len(),
                layers.len()
            )));
        }
        for ((rows, cols), layer) in shapes.iter().zip(&layers) {
            if layer.weights.shape() != (*rows, *cols) || layer.bias.len() != *rows {
                return Err(Error::config(format!(
                    "layer shape {:?} does not match expected ({rows}, {cols})",
                    layer.weights.shape()
                )));
            }
        }
        Ok(MlpModel {
            config,
            layers,
            init_seed,
        })
    }

    pub fn config(&self) -> &MlpConfig {
        &self.config
    }

    pub fn layers(&self) -> &[Dense] {
        &self.layers
    }

    pub fn layers_mut(&mut self) -> &mut [Dense] {
        &mut self.layers
    }

    pub fn init_seed(&self) -> u64 {
        self.init_seed
    }

    pub fn parameter_count(&self) -> usize {
        self.layers
            .iter()
            .map(|l| l.weights.len() + l.bias.len())
            .sum()
    }

    /// Network output for a single input vector.
    pub fn forward(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.config.in_dim {
            return Err(Error::DimensionMismatch {
                expected: self.config.in_dim,
                got: x.len(),
            });
        }
        let batch = DMatrix::from_column_slice(x.len(), 1, x);
        Ok(self.forward_batch(&batch)?[0])
    }

    /// Outputs for every column of `inputs`.
    pub fn forward_batch(&self, inputs: &DMatrix<f64>) -> Result<Vec<f64>> {
        self.check_inputs(inputs)?;
        let acts = self.activations(inputs);
        Ok(acts.last().expect("output layer").iter().copied().collect())
    }

    pub fn predict_label(&self, x: &[f64]) -> Result<i8> {
        Ok(sign(self.forward(x)?))
    }

    pub fn predict_batch(&self, inputs: &DMatrix<f64>) -> Result<Vec<i8>> {
        Ok(self.forward_batch(inputs)?.into_iter().map(sign).collect())
    }

    /// `0.5 * mean((f(x) - y)^2)` over the columns of `inputs`.
    pub fn loss(&self, inputs: &DMatrix<f64>, targets: &[f64]) -> Result<f64> {
        let out = self.forward_batch(inputs)?;
        check_targets(targets, out.len())?;
        let n = out.len() as f64;
        Ok(out
            .iter()
            .zip(targets)
            .map(|(f, y)| 0.5 * (f - y) * (f - y))
            .sum::<f64>()
            / n)
    }

    pub fn accuracy(&self, inputs: &DMatrix<f64>, labels: &[i8]) -> Result<f64> {
        let pred = self.predict_batch(inputs)?;
        if pred.len() != labels.len() {
            return Err(Error::DimensionMismatch {
                expected: pred.len(),
                got: labels.len(),
            });
        }
        if pred.is_empty() {
            return Ok(0.0);
        }
        let hits = pred.iter().zip(labels).filter(|(p, y)| p == y).count();
        Ok(hits as f64 / pred.len() as f64)
    }

    fn check_inputs(&self, inputs: &DMatrix<f64>) -> Result<()> {
        if inputs.nrows() != self.config.in_dim {
            return Err(Error::DimensionMismatch {
                expected: self.config.in_dim,
                got: inputs.nrows(),
            });
        }
        Ok(())
    }

    /// Post-activation values of every layer, input first and output last.
    fn activations(&self, inputs: &DMatrix<f64>) -> Vec<DMatrix<f64>> {
        let mut acts = Vec::with_capacity(self.layers.len() + 1);
        acts.push(inputs.clone());
        let last = self.layers.len() - 1;
        for (i, layer) in self.layers.iter().enumerate() {
            let prev = acts.last().expect("nonempty");
            let mut z = &layer.weights * prev;
            for mut col in z.column_iter_mut() {
                col += &layer.bias;
            }
            if i < last {
                self.config.activation.apply(&mut z);
            }
            acts.push(z);
        }
        acts
    }

    /// Gradients of `0.5 * mean((f(x) - y)^2)` with respect to every parameter.
    pub fn backward(&self, inputs: &DMatrix<f64>, targets: &[f64]) -> Result<Gradients> {
        self.check_inputs(inputs)?;
        check_targets(targets, inputs.ncols())?;
        let acts = self.activations(inputs);
        Ok(self.backward_from(&acts, targets).0)
    }

    /// Backpropagates through cached activations; also returns the batch loss.
    fn backward_from(&self, acts: &[DMatrix<f64>], targets: &[f64]) -> (Gradients, f64) {
        let n = targets.len() as f64;
        let out = acts.last().expect("output");
        let mut loss = 0.0;
        let mut delta = DMatrix::from_fn(1, targets.len(), |_, j| {
            let r = out[(0, j)] - targets[j];
            loss += 0.5 * r * r;
            r / n
        });
        let mut grads: Vec<Dense> = Vec::with_capacity(self.layers.len());
        for (i, layer) in self.layers.iter().enumerate().rev() {
            let prev = &acts[i];
            let dw = &delta * prev.transpose();
            let db = delta.column_sum();
            if i > 0 {
                let mut next = layer.weights.transpose() * &delta;
                let act = self.config.activation;
                next.zip_apply(prev, |d, a| *d *= act.derivative_from_output(a));
                delta = next;
            }
            grads.push(Dense {
                weights: dw,
                bias: db,
            });
        }
        grads.reverse();
        (Gradients { layers: grads }, loss / n)
    }

    fn apply_gradients(&mut self, grads: &Gradients, lr: f64) {
        for (layer, g) in self.layers.iter_mut().zip(&grads.layers) {
            layer.weights.zip_apply(&g.weights, |w, d| *w -= lr * d);
            layer.bias.axpy(-lr, &g.bias, 1.0);
        }
    }

    /// Single affine map equivalent to a network with linear activations.
    pub fn collapse_linear(&self) -> Result<Dense> {
        if self.config.activation != Activation::Linear && self.config.depth > 0 {
            return Err(Error::Unsupported(
                "only linear-activation networks collapse to an affine map".into(),
            ));
        }
        let mut acc = self.layers[0].clone();
        for layer in &self.layers[1..] {
            acc = Dense {
                weights: &layer.weights * &acc.weights,
                bias: &layer.weights * &acc.bias + &layer.bias,
            };
        }
        Ok(acc)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        write_json(path, &ModelFile::from(self))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let file: ModelFile = read_json(path)?;
        file.try_into()
    }
}

fn check_targets(targets: &[f64], expected: usize) -> Result<()> {
    if targets.len() != expected {
        return Err(Error::DimensionMismatch {
            expected,
            got: targets.len(),
        });
    }
    Ok(())
}

fn gather_columns(src: &DMatrix<f64>, idx: &[usize]) -> DMatrix<f64> {
    let rows = src.nrows();
    let mut out = DMatrix::zeros(rows, idx.len());
    for (j, &i) in idx.iter().enumerate() {
        out.column_mut(j).copy_from(&src.column(i));
    }
    out
}

/// Labeled inputs, one sample per column.
#[derive(Debug, Clone, Copy)]
pub struct Labeled<'a> {
    pub inputs: &'a DMatrix<f64>,
    pub labels: &'a [i8],
}

impl<'a> Labeled<'a> {
    pub fn new(inputs: &'a DMatrix<f64>, labels: &'a [i8]) -> Result<Self> {
        if inputs.ncols() != labels.len() {
            return Err(Error::DimensionMismatch {
                expected: inputs.ncols(),
                got: labels.len(),
            });
        }
        Ok(Labeled { inputs, labels })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }
}

/// Plain SGD on `0.5 * mean((f - y)^2)`; the model after the final epoch is returned.
pub fn train(
    mut model: MlpModel,
    train_set: Labeled<'_>,
    val_set: Option<Labeled<'_>>,
    cfg: &TrainConfig,
) -> Result<(MlpModel, TrainHistory)> {
    cfg.validate()?;
    if train_set.is_empty() {
        return Err(Error::config("training set is empty"));
    }
    model.check_inputs(train_set.inputs)?;
    if let Some(v) = &val_set {
        model.check_inputs(v.inputs)?;
    }

    let n = train_set.len();
    let targets: Vec<f64> = train_set.labels.iter().map(|&y| f64::from(y)).collect();
    let mut order: Vec<usize> = (0..n).collect();
    let mut rng = seeded_rng(cfg.shuffle_seed, 1);
    let mut history = TrainHistory::default();

    for epoch in 1..=cfg.epochs {
        order.shuffle(&mut rng);
        let mut loss_sum = 0.0;
        let mut hits = 0usize;
        for chunk in order.chunks(cfg.batch_size) {
            let batch = gather_columns(train_set.inputs, chunk);
            let batch_targets: Vec<f64> = chunk.iter().map(|&i| targets[i]).collect();
            let acts = model.activations(&batch);
            hits += acts
                .last()
                .expect("output")
                .iter()
                .zip(&batch_targets)
                .filter(|(f, y)| f64::from(sign(**f)) == **y)
                .count();
            let (grads, loss) = model.backward_from(&acts, &batch_targets);
            if !loss.is_finite() {
                return Err(Error::Diverged { epoch, loss });
            }
            loss_sum += loss * chunk.len() as f64;
            model.apply_gradients(&grads, cfg.learning_rate);
        }
        let epoch_loss = loss_sum / n as f64;
        let params_finite = model
            .layers
            .iter()
            .all(|l| l.weights.iter().chain(l.bias.iter()).all(|v| v.is_finite()));
        if !epoch_loss.is_finite() || !params_finite {
            return Err(Error::Diverged {
                epoch,
                loss: epoch_loss,
            });
        }
        history.train_loss.push(epoch_loss);
        history.train_acc.push(hits as f64 / n as f64);
        if let Some(v) = &val_set {
            history.val_acc.push(model.accuracy(v.inputs, v.labels)?);
        }
    }
    Ok((model, history))
}

/// On-disk model layout: shapes plus row-major weights.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModelFile {
    pub config: MlpConfig,
    pub init_seed: u64,
    pub layers: Vec<LayerFile>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LayerFile {
    pub rows: usize,
    pub cols: usize,
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

impl From<&MlpModel> for ModelFile {
    fn from(m: &MlpModel) -> Self {
        ModelFile {
            config: m.config,
            init_seed: m.init_seed,
            layers: m
                .layers
                .iter()
                .map(|l| LayerFile {
                    rows: l.weights.nrows(),
                    cols: l.weights.ncols(),
                    weights: l.weights.transpose().as_slice().to_vec(),
                    bias: l.bias.as_slice().to_vec(),
                })
                .collect(),
        }
    }
}

impl TryFrom<ModelFile> for MlpModel {
    type Error = Error;

    fn try_from(f: ModelFile) -> Result<Self> {
        let layers = f
            .layers
            .into_iter()
            .map(|l| {
                if l.weights.len() != l.rows * l.cols || l.bias.len() != l.rows {
                    return Err(Error::config("layer data does not match its shape"));
                }
                Ok(Dense {
                    weights: DMatrix::from_row_slice(l.rows, l.cols, &l.weights),
                    bias: DVector::from_vec(l.bias),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        MlpModel::from_layers(f.config, layers, f.init_seed)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    fn random_batch(rows: usize, cols: usize, seed: u64) -> DMatrix<f64> {
        let mut rng = seeded_rng(seed, 9);
        DMatrix::from_fn(rows, cols, |_, _| rng.gen_range(-1.0..1.0))
    }

    #[test]
    fn depth_zero_is_single_affine_map() {
        let m = init(
            MlpConfig {
                depth: 0,
                width: 7,
                activation: Activation::Relu,
                in_dim: 100,
                out_dim: 1,
            },
            1,
        )
        .unwrap();
        assert_eq!(m.layers().len(), 1);
        assert_eq!(m.layers()[0].weights.shape(), (1, 100));
        assert_eq!(m.layers()[0].bias.len(), 1);
    }

    #[test]
    fn default_architecture_shapes() {
        let m = init(MlpConfig::default_for(100), 3).unwrap();
        let shapes: Vec<_> = m.layers().iter().map(|l| l.weights.shape()).collect();
        assert_eq!(shapes.len(), 9);
        assert_eq!(shapes[0], (128, 100));
        assert!(shapes[1..8].iter().all(|s| *s == (128, 128)));
        assert_eq!(shapes[8], (1, 128));
        assert!(m.layers().iter().all(|l| l.bias.iter().all(|b| *b == 0.0)));
    }

    #[test]
    fn glorot_variance() {
        let m = init(MlpConfig::default_for(128), 11).unwrap();
        let w = &m.layers()[1].weights;
        let n = w.len() as f64;
        let mean = w.iter().sum::<f64>() / n;
        let var = w.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
        let expected = 2.0 / 256.0;
        assert!((var / expected - 1.0).abs() < 0.2, "var {var}");
    }

    #[test]
    fn zero_weights_output_final_bias() {
        let mut m = init(MlpConfig::default_for(4), 0).unwrap();
        for l in m.layers_mut() {
            l.weights.fill(0.0);
        }
        m.layers_mut().last_mut().unwrap().bias[0] = 0.37;
        assert_eq!(m.forward(&[1.0, -2.0, 3.0, 0.5]).unwrap(), 0.37);
    }

    #[test]
    fn relu_positive_homogeneity() {
        let m = init(
            MlpConfig {
                depth: 3,
                width: 16,
                activation: Activation::Relu,
                in_dim: 5,
                out_dim: 1,
            },
            5,
        )
        .unwrap();
        let x = [0.3, -0.2, 0.9, 0.1, -0.7];
        let scaled: Vec<f64> = x.iter().map(|v| v * 2.5).collect();
        let a = m.forward(&x).unwrap();
        let b = m.forward(&scaled).unwrap();
        assert!((b - 2.5 * a).abs() < 1e-12);
    }

    #[test]
    fn dimension_mismatch_is_reported() {
        let m = init(MlpConfig::default_for(4), 0).unwrap();
        assert!(matches!(
            m.forward(&[1.0, 2.0]),
            Err(Error::DimensionMismatch { expected: 4, got: 2 })
        ));
    }

    #[test]
    fn zero_residual_gives_zero_gradients() {
        let m = init(
            MlpConfig {
                depth: 2,
                width: 6,
                activation: Activation::Tanh,
                in_dim: 3,
                out_dim: 1,
            },
            2,
        )
        .unwrap();
        let x = random_batch(3, 10, 1);
        let y = m.forward_batch(&x).unwrap();
        let g = m.backward(&x, &y).unwrap();
        for l in &g.layers {
            assert!(l.weights.iter().chain(l.bias.iter()).all(|v| *v == 0.0));
        }
    }

    #[test]
    fn duplicated_batch_leaves_mean_gradient_unchanged() {
        let m = init(
            MlpConfig {
                depth: 2,
                width: 6,
                activation: Activation::Relu,
                in_dim: 3,
                out_dim: 1,
            },
            4,
        )
        .unwrap();
        let x = random_batch(3, 8, 2);
        let y: Vec<f64> = (0..8).map(|i| if i % 2 == 0 { 1.0 } else { -1.0 }).collect();
        let mut x2 = DMatrix::zeros(3, 16);
        x2.columns_mut(0, 8).copy_from(&x);
        x2.columns_mut(8, 8).copy_from(&x);
        let y2: Vec<f64> = y.iter().chain(&y).copied().collect();
        let g1 = m.backward(&x, &y).unwrap();
        let g2 = m.backward(&x2, &y2).unwrap();
        for (a, b) in g1.layers.iter().zip(&g2.layers) {
            assert!((&a.weights - &b.weights).amax() < 1e-14);
            assert!((&a.bias - &b.bias).amax() < 1e-14);
        }
    }

    #[test]
    fn predict_label_boundary_and_flip() {
        let mut m = init(MlpConfig::default_for(3), 8).unwrap();
        for l in m.layers_mut() {
            l.weights.fill(0.0);
            l.bias.fill(0.0);
        }
        assert_eq!(m.predict_label(&[1.0, 2.0, 3.0]).unwrap(), 1);

        let mut m = init(MlpConfig::default_for(3), 8).unwrap();
        let x = [0.4, -1.2, 0.8];
        let before = m.forward(&x).unwrap();
        let last = m.layers_mut().last_mut().unwrap();
        last.weights.neg_mut();
        last.bias.neg_mut();
        let after = m.forward(&x).unwrap();
        assert_eq!(after, -before);
        if before != 0.0 {
            assert_eq!(sign(before), -sign(after));
        }
    }

    #[test]
    fn separable_toy_set_reaches_full_accuracy() {
        let mut rng = seeded_rng(21, 0);
        let n = 200;
        let mut x = DMatrix::zeros(2, n);
        let mut y = Vec::with_capacity(n);
        for j in 0..n {
            let label: i8 = if j % 2 == 0 { 1 } else { -1 };
            let l = f64::from(label);
            x[(0, j)] = l * rng.gen_range(0.5..2.0);
            x[(1, j)] = rng.gen_range(-1.0..1.0);
            y.push(label);
        }
        let model = init(
            MlpConfig {
                depth: 1,
                width: 8,
                activation: Activation::Relu,
                in_dim: 2,
                out_dim: 1,
            },
            3,
        )
        .unwrap();
        let cfg = TrainConfig {
            epochs: 100,
            batch_size: 16,
            learning_rate: 0.05,
            shuffle_seed: 1,
        };
        let (_, hist) = train(model, Labeled::new(&x, &y).unwrap(), None, &cfg).unwrap();
        assert_eq!(hist.final_train_acc(), Some(1.0));
    }

    #[test]
    fn divergence_is_reported() {
        let x = DMatrix::from_fn(2, 64, |i, j| ((i + j) % 5) as f64 * 100.0);
        let y: Vec<i8> = (0..64).map(|j| if j % 2 == 0 { 1 } else { -1 }).collect();
        let model = init(
            MlpConfig {
                depth: 2,
                width: 16,
                activation: Activation::Linear,
                in_dim: 2,
                out_dim: 1,
            },
            1,
        )
        .unwrap();
        let cfg = TrainConfig {
            epochs: 50,
            batch_size: 8,
            learning_rate: 1.0,
            shuffle_seed: 0,
        };
        let err = train(model, Labeled::new(&x, &y).unwrap(), None, &cfg).unwrap_err();
        assert!(matches!(err, Error::Diverged { .. }));
    }

    #[test]
    fn model_file_round_trip() {
        let m = init(
            MlpConfig {
                depth: 2,
                width: 5,
                activation: Activation::Tanh,
                in_dim: 3,
                out_dim: 1,
            },
            77,
        )
        .unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.json");
        m.save(&path).unwrap();
        assert_eq!(MlpModel::load(&path).unwrap(), m);
    }
}
