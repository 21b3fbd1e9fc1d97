//! Fully connected networks with cached forward passes and manual backprop.

use ndarray::{Array1, Array2, Axis, Zip};
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::GanError;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Activation {
    Identity,
    Relu,
    LeakyRelu { slope: f64 },
    Sigmoid,
}

impl Activation {
    pub fn apply(self, z: f64) -> f64 {
        match self {
            Activation::Identity => z,
            Activation::Relu => z.max(0.0),
            Activation::LeakyRelu { slope } => {
                if z > 0.0 {
                    z
                } else {
                    slope * z
                }
            }
            Activation::Sigmoid => sigmoid(z),
        }
    }

    /// Derivative with respect to the pre-activation `z`.
    pub fn derivative(self, z: f64) -> f64 {
        match self {
            Activation::Identity => 1.0,
            Activation::Relu => {
                if z > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::LeakyRelu { slope } => {
                if z > 0.0 {
                    1.0
                } else {
                    slope
                }
            }
            Activation::Sigmoid => {
                let s = sigmoid(z);
                s * (1.0 - s)
            }
        }
    }
}

pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// `ln(1 + e^z)` without overflow.
pub fn softplus(z: f64) -> f64 {
    if z > 0.0 {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}

/// One dense layer: `activation(input · weights + bias)`, weights stored `in × out`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Layer {
    pub weights: Array2<f64>,
    pub bias: Array1<f64>,
    pub activation: Activation,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpParams {
    pub layers: Vec<Layer>,
}

/// Per-layer gradients, shaped like the layers they belong to.
#[derive(Debug, Clone, PartialEq)]
pub struct MlpGrads {
    pub weights: Vec<Array2<f64>>,
    pub bias: Vec<Array1<f64>>,
}

/// Layer inputs and pre-activations recorded by [`MlpParams::forward`].
#[derive(Debug, Clone)]
pub struct ForwardCache {
    pub inputs: Vec<Array2<f64>>,
    pub pre_activations: Vec<Array2<f64>>,
}

impl MlpParams {
    /// Network with layer widths `widths[0] -> widths[1] -> ...`. Hidden layers use
    /// `hidden`, the last layer uses `output`. Entries start uniform in ±1/sqrt(fan_in).
    pub fn init<R: Rng + ?Sized>(widths: &[usize], hidden: Activation, output: Activation, rng: &mut R) -> Self {
        let n = widths.len().saturating_sub(1);
        let layers = (0..n)
            .map(|l| {
                let (fan_in, fan_out) = (widths[l], widths[l + 1]);
                let bound = 1.0 / (fan_in as f64).sqrt();
                let weights = Array2::from_shape_simple_fn((fan_in, fan_out), || rng.random_range(-bound..=bound));
                let bias = Array1::from_shape_simple_fn(fan_out, || rng.random_range(-bound..=bound));
                let activation = if l + 1 == n { output } else { hidden };
                Layer { weights, bias, activation }
            })
            .collect();
        MlpParams { layers }
    }

    pub fn input_width(&self) -> usize {
        self.layers.first().map_or(0, |l| l.weights.nrows())
    }

    pub fn output_width(&self) -> usize {
        self.layers.last().map_or(0, |l| l.weights.ncols())
    }

    pub fn zeros_like(&self) -> MlpGrads {
        MlpGrads {
            weights: self.layers.iter().map(|l| Array2::zeros(l.weights.raw_dim())).collect(),
            bias: self.layers.iter().map(|l| Array1::zeros(l.bias.raw_dim())).collect(),
        }
    }

    pub fn is_finite(&self) -> bool {
        self.layers
            .iter()
            .all(|l| l.weights.iter().chain(l.bias.iter()).all(|v| v.is_finite()))
    }

    /// Forward pass over a batch (one row per sample).
    pub fn forward(&self, batch: &Array2<f64>) -> Result<(Array2<f64>, ForwardCache), GanError> {
        if batch.ncols() != self.input_width() {
            return Err(GanError::ShapeMismatch(format!(
                "network expects {} inputs, batch has {}",
                self.input_width(),
                batch.ncols()
            )));
        }
        let mut inputs = Vec::with_capacity(self.layers.len());
        let mut pre_activations = Vec::with_capacity(self.layers.len());
        let mut current = batch.clone();
        for layer in &self.layers {
            let z = current.dot(&layer.weights) + &layer.bias;
            let act = layer.activation;
            let out = z.mapv(|v| act.apply(v));
            inputs.push(current);
            pre_activations.push(z);
            current = out;
        }
        Ok((current, ForwardCache { inputs, pre_activations }))
    }

    /// Backward pass given dL/d(output). Returns parameter gradients and dL/d(input).
    pub fn backward(&self, cache: &ForwardCache, grad_output: &Array2<f64>) -> (MlpGrads, Array2<f64>) {
        let last = self.layers.len() - 1;
        let act = self.layers[last].activation;
        let mut grad_pre = grad_output.clone();
        Zip::from(&mut grad_pre)
            .and(&cache.pre_activations[last])
            .for_each(|g, &z| *g *= act.derivative(z));
        self.backward_from_pre_activation(cache, grad_pre)
    }

    /// Backward pass given dL/d(pre-activation of the last layer), e.g. a logit gradient.
    pub fn backward_from_pre_activation(
        &self,
        cache: &ForwardCache,
        grad_last_pre: Array2<f64>,
    ) -> (MlpGrads, Array2<f64>) {
        let mut grads = self.zeros_like();
        let mut grad_pre = grad_last_pre;
        for l in (0..self.layers.len()).rev() {
            grads.weights[l] = cache.inputs[l].t().dot(&grad_pre);
            grads.bias[l] = grad_pre.sum_axis(Axis(0));
            let mut grad_in = grad_pre.dot(&self.layers[l].weights.t());
            if l > 0 {
                let act = self.layers[l - 1].activation;
                Zip::from(&mut grad_in)
                    .and(&cache.pre_activations[l - 1])
                    .for_each(|g, &z| *g *= act.derivative(z));
            }
            grad_pre = grad_in;
        }
        (grads, grad_pre)
    }
}
