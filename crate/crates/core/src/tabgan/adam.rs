use serde::{Deserialize, Serialize};

use super::mlp::{MlpGrads, MlpParams};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdamConfig {
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig { beta1: 0.5, beta2: 0.999, epsilon: 1e-8 }
    }
}

/// First and second moment estimates plus the step counter.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub m: MlpGrads,
    pub v: MlpGrads,
    pub step: u64,
}

impl AdamState {
    pub fn new(params: &MlpParams) -> Self {
        AdamState { m: params.zeros_like(), v: params.zeros_like(), step: 0 }
    }
}

/// Bias-corrected Adam update of a flat parameter slice; `step` is the 1-based step number.
pub fn adam_update(
    params: &mut [f64],
    grads: &[f64],
    m: &mut [f64],
    v: &mut [f64],
    step: u64,
    lr: f64,
    cfg: &AdamConfig,
) {
    let c1 = 1.0 - cfg.beta1.powf(step as f64);
    let c2 = 1.0 - cfg.beta2.powf(step as f64);
    for i in 0..params.len() {
        let g = grads[i];
        m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * g;
        v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * g * g;
        let m_hat = m[i] / c1;
        let v_hat = v[i] / c2;
        params[i] -= lr * m_hat / (v_hat.sqrt() + cfg.epsilon);
    }
}

/// One Adam step over every weight and bias of `params`.
pub fn adam_step(params: &mut MlpParams, grads: &MlpGrads, state: &mut AdamState, lr: f64, cfg: &AdamConfig) {
    state.step += 1;
    let step = state.step;
    for (l, layer) in params.layers.iter_mut().enumerate() {
        let gw = grads.weights[l].as_standard_layout();
        let gb = grads.bias[l].as_standard_layout();
        adam_update(
            layer.weights.as_slice_mut().expect("standard layout"),
            gw.as_slice().expect("standard layout"),
            state.m.weights[l].as_slice_mut().expect("standard layout"),
            state.v.weights[l].as_slice_mut().expect("standard layout"),
            step,
            lr,
            cfg,
        );
        adam_update(
            layer.bias.as_slice_mut().expect("standard layout"),
            gb.as_slice().expect("standard layout"),
            state.m.bias[l].as_slice_mut().expect("standard layout"),
            state.v.bias[l].as_slice_mut().expect("standard layout"),
            step,
            lr,
            cfg,
        );
    }
}
