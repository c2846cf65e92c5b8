//! Five-layer feed-forward classifier trained by backpropagation.
//!
//! Two inputs (scaled hot and cold IFs), three ReLU hidden layers with more
//! than 60 units in total, and a two-unit softmax output `(p_safe, p_unsafe)`.
//! Loss is mean categorical cross-entropy with optional L2 on weights;
//! optimisation is plain mini-batch gradient descent.

use std::fmt::Write as _;

use log::warn;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Deserialize;
use thiserror::Error;

use crate::corpus::Label;
use crate::encoder::{fit_scaler, EncodeError, EncodedSample, IfVector, InputScaler, Target};

pub const MODEL_FORMAT_VERSION: u32 = 1;
/// Lower clamp applied to probabilities inside the log of the loss.
pub const LOG_FLOOR: f64 = 1e-12;
/// Minimum total hidden units across the three hidden layers (exclusive).
pub const MIN_HIDDEN_UNITS: usize = 60;

#[derive(Debug, Error)]
pub enum NetworkError {
    #[error("invalid shape {0:?}: {1}")]
    InvalidShape(Vec<usize>, &'static str),
    #[error("input contains a non-finite value")]
    NonFiniteInput,
    #[error("batch is empty")]
    EmptyBatch,
    #[error("training split is empty")]
    EmptySplit,
    #[error("invalid training config: {0}")]
    InvalidConfig(&'static str),
    #[error(transparent)]
    Encode(#[from] EncodeError),
    #[error("model file: {0}")]
    ModelFormat(String),
}

/// Layer widths from input to output.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NetworkShape(Vec<usize>);

impl NetworkShape {
    pub fn new(sizes: Vec<usize>) -> Result<Self, NetworkError> {
        if sizes.len() != 5 {
            return Err(NetworkError::InvalidShape(sizes, "need exactly 5 layers"));
        }
        if sizes[0] != 2 {
            return Err(NetworkError::InvalidShape(
                sizes,
                "input layer must have 2 units",
            ));
        }
        if sizes[4] != 2 {
            return Err(NetworkError::InvalidShape(
                sizes,
                "output layer must have 2 units",
            ));
        }
        if sizes[1..4].contains(&0) {
            return Err(NetworkError::InvalidShape(
                sizes,
                "hidden layers must be non-empty",
            ));
        }
        if sizes[1..4].iter().sum::<usize>() <= MIN_HIDDEN_UNITS {
            return Err(NetworkError::InvalidShape(
                sizes,
                "hidden layers must total more than 60 units",
            ));
        }
        Ok(NetworkShape(sizes))
    }

    pub fn sizes(&self) -> &[usize] {
        &self.0
    }
}

impl Default for NetworkShape {
    fn default() -> Self {
        NetworkShape(vec![2, 24, 24, 16, 2])
    }
}

/// Dense layer, `weights` row-major with `outputs` rows and `inputs` columns.
#[derive(Debug, Clone, PartialEq)]
pub struct Layer {
    pub inputs: usize,
    pub outputs: usize,
    pub weights: Vec<f64>,
    pub biases: Vec<f64>,
}

impl Layer {
    fn zeros(inputs: usize, outputs: usize) -> Self {
        Layer {
            inputs,
            outputs,
            weights: vec![0.0; inputs * outputs],
            biases: vec![0.0; outputs],
        }
    }

    fn affine(&self, x: &[f64]) -> Vec<f64> {
        self.weights
            .chunks_exact(self.inputs)
            .zip(&self.biases)
            .map(|(row, b)| row.iter().zip(x).map(|(w, v)| w * v).sum::<f64>() + b)
            .collect()
    }

    fn param_count(&self) -> usize {
        self.weights.len() + self.biases.len()
    }

    fn param_mut(&mut self, i: usize) -> &mut f64 {
        if i < self.weights.len() {
            &mut self.weights[i]
        } else {
            &mut self.biases[i - self.weights.len()]
        }
    }
}

/// Parameters of every layer in one flat index space: for each layer its
/// weights (row-major) followed by its biases.
#[derive(Debug, Clone, PartialEq)]
pub struct Parameters {
    pub layers: Vec<Layer>,
}

impl Parameters {
    fn zeros_like(shape: &NetworkShape) -> Self {
        Parameters {
            layers: shape
                .sizes()
                .windows(2)
                .map(|w| Layer::zeros(w[0], w[1]))
                .collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.layers.iter().map(Layer::param_count).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn get(&self, mut i: usize) -> f64 {
        for layer in &self.layers {
            if i < layer.param_count() {
                return if i < layer.weights.len() {
                    layer.weights[i]
                } else {
                    layer.biases[i - layer.weights.len()]
                };
            }
            i -= layer.param_count();
        }
        panic!("parameter index out of range");
    }

    pub fn get_mut(&mut self, mut i: usize) -> &mut f64 {
        for layer in &mut self.layers {
            if i < layer.param_count() {
                return layer.param_mut(i);
            }
            i -= layer.param_count();
        }
        panic!("parameter index out of range");
    }

    pub fn iter(&self) -> impl Iterator<Item = f64> + '_ {
        self.layers
            .iter()
            .flat_map(|l| l.weights.iter().chain(&l.biases).copied())
    }

    fn weight_sq_norm(&self) -> f64 {
        self.layers
            .iter()
            .flat_map(|l| &l.weights)
            .map(|w| w * w)
            .sum()
    }
}

/// Gradients share the parameter layout.
pub type Gradients = Parameters;

#[derive(Debug, Clone, PartialEq)]
pub struct NetworkModel {
    pub shape: NetworkShape,
    pub params: Parameters,
    pub scaler: InputScaler,
    pub seed: u64,
}

/// Glorot-uniform weights and zero biases, fully determined by `seed`.
/// The scaler is the identity until training fits one.
pub fn init(shape: &NetworkShape, seed: u64) -> NetworkModel {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut params = Parameters::zeros_like(shape);
    for layer in &mut params.layers {
        let limit = (6.0 / (layer.inputs + layer.outputs) as f64).sqrt();
        for w in &mut layer.weights {
            *w = rng.gen_range(-limit..limit);
        }
    }
    NetworkModel {
        shape: shape.clone(),
        params,
        scaler: InputScaler {
            hot_max: 1.0,
            cold_max: 1.0,
        },
        seed,
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Prediction {
    /// `(p_safe, p_unsafe)`
    pub probabilities: [f64; 2],
    pub predicted_label: Label,
}

impl Prediction {
    /// Ties resolve to `Unsafe`.
    pub fn from_logits(logits: [f64; 2]) -> Self {
        let probabilities = softmax(logits);
        let predicted_label = if probabilities[0] > probabilities[1] {
            Label::Safe
        } else {
            Label::Unsafe
        };
        Prediction {
            probabilities,
            predicted_label,
        }
    }
}

pub fn softmax(logits: [f64; 2]) -> [f64; 2] {
    let m = logits[0].max(logits[1]);
    let e = [(logits[0] - m).exp(), (logits[1] - m).exp()];
    let s = e[0] + e[1];
    [e[0] / s, e[1] / s]
}

/// Per-layer pre-activations and activations of one forward pass.
struct Trace {
    /// activations[0] is the input; activations[l] the output of layer l.
    activations: Vec<Vec<f64>>,
    pre: Vec<Vec<f64>>,
}

fn trace(params: &Parameters, input: [f64; 2]) -> Trace {
    let last = params.layers.len() - 1;
    let mut activations = vec![input.to_vec()];
    let mut pre = Vec::with_capacity(params.layers.len());
    for (l, layer) in params.layers.iter().enumerate() {
        let z = layer.affine(activations.last().unwrap());
        let a = if l == last {
            z.clone()
        } else {
            z.iter().map(|v| v.max(0.0)).collect()
        };
        pre.push(z);
        activations.push(a);
    }
    Trace { activations, pre }
}

impl NetworkModel {
    pub fn logits(&self, scaled_input: [f64; 2]) -> Result<[f64; 2], NetworkError> {
        if !scaled_input.iter().all(|v| v.is_finite()) {
            return Err(NetworkError::NonFiniteInput);
        }
        let out = trace(&self.params, scaled_input).activations.pop().unwrap();
        Ok([out[0], out[1]])
    }

    /// Forward pass on an already scaled input.
    pub fn forward(&self, scaled_input: [f64; 2]) -> Result<Prediction, NetworkError> {
        self.logits(scaled_input).map(Prediction::from_logits)
    }

    /// Applies the model's scaler to a raw IF vector, then runs `forward`.
    pub fn predict(&self, raw: &IfVector) -> Result<Prediction, NetworkError> {
        self.forward(self.scaler.apply(raw))
    }
}

pub type Batch = [([f64; 2], Target)];

/// Mean cross-entropy over the batch plus `l2/2 · ‖W‖²` (weights only).
pub fn loss(model: &NetworkModel, batch: &Batch, l2: f64) -> Result<f64, NetworkError> {
    if batch.is_empty() {
        return Err(NetworkError::EmptyBatch);
    }
    let mut total = 0.0;
    for (x, t) in batch {
        let p = model.forward(*x)?.probabilities;
        let t = t.values();
        total -= (0..2).map(|c| t[c] * p[c].max(LOG_FLOOR).ln()).sum::<f64>();
    }
    let mut value = total / batch.len() as f64;
    if l2 > 0.0 {
        value += 0.5 * l2 * model.params.weight_sq_norm();
    }
    Ok(value)
}

/// Analytic gradient of [`loss`] with respect to every parameter.
pub fn backward(model: &NetworkModel, batch: &Batch, l2: f64) -> Result<Gradients, NetworkError> {
    if batch.is_empty() {
        return Err(NetworkError::EmptyBatch);
    }
    let mut grads = Parameters::zeros_like(&model.shape);
    let n = batch.len() as f64;
    let layers = &model.params.layers;
    for (x, t) in batch {
        if !x.iter().all(|v| v.is_finite()) {
            return Err(NetworkError::NonFiniteInput);
        }
        let tr = trace(&model.params, *x);
        let logits = tr.activations.last().unwrap();
        let p = softmax([logits[0], logits[1]]);
        let t = t.values();
        let mut delta: Vec<f64> = (0..2).map(|c| (p[c] - t[c]) / n).collect();

        for l in (0..layers.len()).rev() {
            let layer = &layers[l];
            let input = &tr.activations[l];
            let g = &mut grads.layers[l];
            for (o, d) in delta.iter().enumerate() {
                g.biases[o] += d;
                let row = &mut g.weights[o * layer.inputs..(o + 1) * layer.inputs];
                for (gw, a) in row.iter_mut().zip(input) {
                    *gw += d * a;
                }
            }
            if l == 0 {
                break;
            }
            let z_prev = &tr.pre[l - 1];
            delta = (0..layer.inputs)
                .map(|i| {
                    if z_prev[i] <= 0.0 {
                        return 0.0;
                    }
                    delta
                        .iter()
                        .enumerate()
                        .map(|(o, d)| d * layer.weights[o * layer.inputs + i])
                        .sum()
                })
                .collect();
        }
    }
    if l2 > 0.0 {
        for (g, w) in grads.layers.iter_mut().zip(layers) {
            for (gw, ww) in g.weights.iter_mut().zip(&w.weights) {
                *gw += l2 * ww;
            }
        }
    }
    Ok(grads)
}

/// `params -= learning_rate · grads`
pub fn apply_step(model: &mut NetworkModel, grads: &Gradients, learning_rate: f64) {
    for (layer, g) in model.params.layers.iter_mut().zip(&grads.layers) {
        for (w, gw) in layer.weights.iter_mut().zip(&g.weights) {
            *w -= learning_rate * gw;
        }
        for (b, gb) in layer.biases.iter_mut().zip(&g.biases) {
            *b -= learning_rate * gb;
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub seed: u64,
    pub l2: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            learning_rate: 0.05,
            epochs: 500,
            batch_size: 16,
            seed: 0,
            l2: 0.0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), NetworkError> {
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return Err(NetworkError::InvalidConfig(
                "learning_rate must be positive",
            ));
        }
        if self.batch_size == 0 {
            return Err(NetworkError::InvalidConfig("batch_size must be positive"));
        }
        if !(self.l2.is_finite() && self.l2 >= 0.0) {
            return Err(NetworkError::InvalidConfig("l2 must be non-negative"));
        }
        Ok(())
    }
}

/// Fits the scaler on `samples`, initialises from `config.seed` and runs
/// mini-batch gradient descent with a seeded shuffle each epoch.
///
/// Bitwise deterministic for a fixed sample order and config.
pub fn train(
    samples: &[EncodedSample],
    config: &TrainConfig,
    shape: &NetworkShape,
) -> Result<NetworkModel, NetworkError> {
    config.validate()?;
    if samples.is_empty() {
        return Err(NetworkError::EmptySplit);
    }
    for label in [Label::Safe, Label::Unsafe] {
        if !samples.iter().any(|s| s.label == label) {
            warn!("training split has no {label} samples");
        }
    }

    let mut model = init(shape, config.seed);
    model.scaler = fit_scaler(samples.iter().map(|s| &s.input))?;
    let data: Vec<([f64; 2], Target)> = samples
        .iter()
        .map(|s| (s.scaled(&model.scaler), s.target()))
        .collect();

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    // keep the shuffle stream apart from the initialisation stream
    rng.set_stream(1);
    let mut order: Vec<usize> = (0..data.len()).collect();
    let mut batch = Vec::with_capacity(config.batch_size);
    for _ in 0..config.epochs {
        order.shuffle(&mut rng);
        for chunk in order.chunks(config.batch_size) {
            batch.clear();
            batch.extend(chunk.iter().map(|&i| data[i]));
            let grads = backward(&model, &batch, config.l2)?;
            apply_step(&mut model, &grads, config.learning_rate);
        }
    }
    Ok(model)
}

// ---- model file ----------------------------------------------------------

#[derive(Deserialize)]
struct ModelFile {
    format_version: u32,
    seed: u64,
    shape: Vec<usize>,
    scaler: ScalerFile,
    layers: Vec<LayerFile>,
}

#[derive(Deserialize)]
struct ScalerFile {
    hot_max: f64,
    cold_max: f64,
}

#[derive(Deserialize)]
struct LayerFile {
    weights: Vec<Vec<f64>>,
    biases: Vec<f64>,
}

/// 17 significant digits: enough to round-trip any f64.
fn num(v: f64) -> String {
    format!("{v:.16e}")
}

fn num_list(values: &[f64]) -> String {
    values
        .iter()
        .map(|&v| num(v))
        .collect::<Vec<_>>()
        .join(", ")
}

impl NetworkModel {
    pub fn to_json(&self) -> String {
        let mut out = String::new();
        out.push_str("{\n");
        let _ = writeln!(out, "  \"format_version\": {MODEL_FORMAT_VERSION},");
        let _ = writeln!(out, "  \"seed\": {},", self.seed);
        let sizes: Vec<String> = self.shape.sizes().iter().map(|s| s.to_string()).collect();
        let _ = writeln!(out, "  \"shape\": [{}],", sizes.join(", "));
        let _ = writeln!(
            out,
            "  \"scaler\": {{\"hot_max\": {}, \"cold_max\": {}}},",
            num(self.scaler.hot_max),
            num(self.scaler.cold_max)
        );
        out.push_str("  \"layers\": [\n");
        for (li, layer) in self.params.layers.iter().enumerate() {
            out.push_str("    {\n      \"weights\": [\n");
            let rows: Vec<String> = layer
                .weights
                .chunks_exact(layer.inputs)
                .map(|row| format!("        [{}]", num_list(row)))
                .collect();
            out.push_str(&rows.join(",\n"));
            out.push_str("\n      ],\n");
            let _ = writeln!(out, "      \"biases\": [{}]", num_list(&layer.biases));
            out.push_str(if li + 1 == self.params.layers.len() {
                "    }\n"
            } else {
                "    },\n"
            });
        }
        out.push_str("  ]\n}\n");
        out
    }

    pub fn from_json(text: &str) -> Result<Self, NetworkError> {
        let bad = |m: String| NetworkError::ModelFormat(m);
        let file: ModelFile = serde_json::from_str(text).map_err(|e| bad(e.to_string()))?;
        if file.format_version != MODEL_FORMAT_VERSION {
            return Err(bad(format!(
                "unsupported format_version {}",
                file.format_version
            )));
        }
        let shape = NetworkShape::new(file.shape)?;
        if file.layers.len() != shape.sizes().len() - 1 {
            return Err(bad("layer count does not match shape".into()));
        }
        let mut params = Parameters::zeros_like(&shape);
        for (layer, lf) in params.layers.iter_mut().zip(file.layers) {
            if lf.weights.len() != layer.outputs
                || lf.weights.iter().any(|r| r.len() != layer.inputs)
                || lf.biases.len() != layer.outputs
            {
                return Err(bad("layer dimensions do not match shape".into()));
            }
            layer.weights = lf.weights.into_iter().flatten().collect();
            layer.biases = lf.biases;
        }
        let scaler = InputScaler {
            hot_max: file.scaler.hot_max,
            cold_max: file.scaler.cold_max,
        };
        if !params.iter().all(f64::is_finite) {
            return Err(bad("non-finite parameter".into()));
        }
        if !(scaler.hot_max.is_finite() && scaler.hot_max > 0.0)
            || !(scaler.cold_max.is_finite() && scaler.cold_max > 0.0)
        {
            return Err(bad("scaler maxima must be positive".into()));
        }
        Ok(NetworkModel {
            shape,
            params,
            scaler,
            seed: file.seed,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn zero_model() -> NetworkModel {
        let shape = NetworkShape::default();
        NetworkModel {
            params: Parameters::zeros_like(&shape),
            shape,
            scaler: InputScaler {
                hot_max: 1.0,
                cold_max: 1.0,
            },
            seed: 0,
        }
    }

    #[test]
    fn default_shape_has_64_hidden_units() {
        let shape = NetworkShape::default();
        assert_eq!(shape.sizes(), [2, 24, 24, 16, 2]);
        assert!(NetworkShape::new(shape.sizes().to_vec()).is_ok());
    }

    #[test]
    fn rejects_shapes_violating_topology() {
        for sizes in [
            vec![2, 10, 10, 10, 2],
            vec![3, 24, 24, 16, 2],
            vec![2, 24, 24, 16, 3],
            vec![2, 40, 40, 2],
            vec![2, 20, 20, 20, 2],
            vec![2, 61, 0, 10, 2],
        ] {
            assert!(
                matches!(
                    NetworkShape::new(sizes.clone()),
                    Err(NetworkError::InvalidShape(..))
                ),
                "{sizes:?}"
            );
        }
        assert!(NetworkShape::new(vec![2, 21, 20, 20, 2]).is_ok());
    }

    #[test]
    fn init_is_deterministic_and_bounded() {
        let shape = NetworkShape::default();
        let a = init(&shape, 1);
        let b = init(&shape, 1);
        assert!(a
            .params
            .iter()
            .zip(b.params.iter())
            .all(|(x, y)| x.to_bits() == y.to_bits()));
        assert_ne!(a.params, init(&shape, 2).params);
        for layer in &a.params.layers {
            let limit = (6.0 / (layer.inputs + layer.outputs) as f64).sqrt();
            assert!(layer.weights.iter().all(|w| w.abs() <= limit));
            assert!(layer.biases.iter().all(|&b| b == 0.0));
            assert_eq!(layer.weights.len(), layer.inputs * layer.outputs);
        }
    }

    #[test]
    fn zero_model_ties_to_unsafe() {
        let p = zero_model().forward([0.3, 0.9]).unwrap();
        assert_eq!(p.probabilities, [0.5, 0.5]);
        assert_eq!(p.predicted_label, Label::Unsafe);
    }

    #[test]
    fn non_finite_input_rejected() {
        let m = init(&NetworkShape::default(), 3);
        assert!(matches!(
            m.forward([f64::NAN, 0.0]),
            Err(NetworkError::NonFiniteInput)
        ));
        assert!(matches!(
            m.forward([0.0, f64::INFINITY]),
            Err(NetworkError::NonFiniteInput)
        ));
    }

    #[test]
    fn softmax_handles_large_logits() {
        let p = softmax([1000.0, -1000.0]);
        assert_eq!(p, [1.0, 0.0]);
        let p = softmax([800.0, 800.0]);
        assert_eq!(p, [0.5, 0.5]);
    }

    #[test]
    fn uniform_prediction_loss_is_ln2() {
        let m = zero_model();
        let batch = [
            ([0.2, 0.4], Label::Safe.into()),
            ([0.9, 0.1], Label::Unsafe.into()),
        ];
        let l = loss(&m, &batch, 0.0).unwrap();
        assert!((l - std::f64::consts::LN_2).abs() < 1e-9);
    }

    #[test]
    fn confident_correct_prediction_has_near_zero_loss() {
        let mut m = zero_model();
        // push the safe logit far above the unsafe one
        m.params.layers.last_mut().unwrap().biases = vec![50.0, -50.0];
        let l = loss(&m, &[([0.1, 0.1], Label::Safe.into())], 0.0).unwrap();
        assert!(l <= 1e-9, "{l}");
    }

    #[test]
    fn wrong_confident_prediction_is_clamped() {
        let mut m = zero_model();
        m.params.layers.last_mut().unwrap().biases = vec![1000.0, -1000.0];
        let l = loss(&m, &[([0.1, 0.1], Label::Unsafe.into())], 0.0).unwrap();
        assert!((l - -LOG_FLOOR.ln()).abs() < 1e-9);
    }

    #[test]
    fn empty_batch_errors() {
        let m = zero_model();
        assert!(matches!(loss(&m, &[], 0.0), Err(NetworkError::EmptyBatch)));
        assert!(matches!(
            backward(&m, &[], 0.0),
            Err(NetworkError::EmptyBatch)
        ));
    }

    #[test]
    fn duplicated_batch_gives_same_gradient() {
        let m = init(&NetworkShape::default(), 11);
        let s = ([0.4, 0.7], Target::from(Label::Safe));
        let one = backward(&m, &[s], 0.0).unwrap();
        let two = backward(&m, &[s, s], 0.0).unwrap();
        for (a, b) in one.iter().zip(two.iter()) {
            assert!((a - b).abs() <= 1e-15 * a.abs().max(1.0));
        }
    }

    #[test]
    fn l2_adds_weight_decay() {
        let m = init(&NetworkShape::default(), 5);
        let batch = [([0.4, 0.7], Target::from(Label::Safe))];
        let plain = loss(&m, &batch, 0.0).unwrap();
        let reg = loss(&m, &batch, 0.1).unwrap();
        let expected = 0.05 * m.params.weight_sq_norm();
        assert!((reg - plain - expected).abs() < 1e-12);

        let g0 = backward(&m, &batch, 0.0).unwrap();
        let g1 = backward(&m, &batch, 0.1).unwrap();
        let w = m.params.layers[0].weights[3];
        assert!((g1.layers[0].weights[3] - g0.layers[0].weights[3] - 0.1 * w).abs() < 1e-15);
        assert_eq!(g1.layers[0].biases, g0.layers[0].biases);
    }

    #[test]
    fn config_validation() {
        let ok = TrainConfig::default();
        assert!(ok.validate().is_ok());
        for bad in [
            TrainConfig {
                learning_rate: 0.0,
                ..ok.clone()
            },
            TrainConfig {
                learning_rate: f64::NAN,
                ..ok.clone()
            },
            TrainConfig {
                batch_size: 0,
                ..ok.clone()
            },
            TrainConfig {
                l2: -1.0,
                ..ok.clone()
            },
        ] {
            assert!(bad.validate().is_err());
        }
    }

    #[test]
    fn parameter_indexing_covers_layout() {
        let mut m = init(&NetworkShape::default(), 2);
        let n = m.params.len();
        assert_eq!(n, 2 * 24 + 24 + 24 * 24 + 24 + 24 * 16 + 16 + 16 * 2 + 2);
        let flat: Vec<f64> = m.params.iter().collect();
        for i in [0, 47, 48, 71, 72, n - 1] {
            assert_eq!(m.params.get(i), flat[i]);
        }
        *m.params.get_mut(n - 1) = 9.0;
        assert_eq!(m.params.layers[3].biases[1], 9.0);
    }

    #[test]
    fn model_json_round_trip_is_byte_identical() {
        let mut m = init(&NetworkShape::default(), 99);
        m.scaler = InputScaler {
            hot_max: 1234.5678,
            cold_max: 0.1 + 0.2,
        };
        m.params.layers[0].biases[0] = -0.0;
        let text = m.to_json();
        let back = NetworkModel::from_json(&text).unwrap();
        assert_eq!(back.to_json(), text);
        assert!(back
            .params
            .iter()
            .zip(m.params.iter())
            .all(|(a, b)| a.to_bits() == b.to_bits()));
        assert_eq!(back.scaler, m.scaler);
    }

    #[test]
    fn model_json_rejects_bad_files() {
        let m = init(&NetworkShape::default(), 1);
        let text = m.to_json();
        assert!(NetworkModel::from_json(
            &text.replace("\"format_version\": 1", "\"format_version\": 2")
        )
        .is_err());
        assert!(
            NetworkModel::from_json(&text.replace("[2, 24, 24, 16, 2]", "[2, 24, 24, 17, 2]"))
                .is_err()
        );
        assert!(NetworkModel::from_json("{}").is_err());
    }
}
