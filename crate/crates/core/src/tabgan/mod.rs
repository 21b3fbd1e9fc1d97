//! Tabular GAN for minority-class synthesis.
//!
//! A generator maps Gaussian noise to rows in a transformed feature space and
//! a discriminator scores rows as real or generated. Both are plain MLPs
//! trained with Adam on the non-saturating binary cross-entropy objective.
//! The copula variant trains on per-column normal scores; the vanilla variant
//! on standardized columns.

pub mod adam;
pub mod mlp;
pub mod transform;

use ndarray::{Array2, Axis};
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::data::{pearson_correlation, DataError, Table};
use crate::rng;
use adam::{adam_step, AdamConfig, AdamState};
use mlp::{sigmoid, softplus, Activation, MlpGrads, MlpParams};
pub use transform::{fit_transform, invert_transform, FeatureTransform, Variant};

#[derive(Debug, Error)]
pub enum GanError {
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("need at least 2 training rows, got {0}")]
    TooFewRows(usize),
    #[error("training rows must share one label")]
    MixedLabels,
    #[error("invalid gan config: {0}")]
    InvalidConfig(String),
    #[error("non-finite loss in epoch {epoch} (generator {gen_loss}, discriminator {disc_loss})")]
    NonFiniteLoss { epoch: usize, gen_loss: f64, disc_loss: f64 },
    #[error(transparent)]
    Data(#[from] DataError),
    #[error("model json: {0}")]
    Json(#[from] serde_json::Error),
}

pub const DISCRIMINATOR_LEAKY_SLOPE: f64 = 0.2;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GanConfig {
    pub epochs: usize,
    /// Hidden layer widths of the generator.
    pub generator_dims: Vec<usize>,
    /// Hidden layer widths of the discriminator.
    pub discriminator_dims: Vec<usize>,
    /// Length of the generator's noise input.
    pub embedding_dim: usize,
    pub generator_lr: f64,
    pub discriminator_lr: f64,
    pub batch_size: usize,
    pub variant: Variant,
    pub seed: u64,
}

impl Default for GanConfig {
    fn default() -> Self {
        GanConfig {
            epochs: 200,
            generator_dims: vec![32, 288],
            discriminator_dims: vec![224, 192],
            embedding_dim: 416,
            generator_lr: 1.091e-3,
            discriminator_lr: 5.402e-3,
            batch_size: 128,
            variant: Variant::Copula,
            seed: 0,
        }
    }
}

impl GanConfig {
    pub fn validate(&self) -> Result<(), GanError> {
        let bad = |msg: &str| Err(GanError::InvalidConfig(msg.to_string()));
        if self.epochs == 0 {
            return bad("epochs must be at least 1");
        }
        if self.embedding_dim == 0
            || self.generator_dims.iter().chain(&self.discriminator_dims).any(|&d| d == 0)
        {
            return bad("layer widths must be at least 1");
        }
        if !(self.generator_lr > 0.0 && self.discriminator_lr > 0.0) {
            return bad("learning rates must be positive");
        }
        if self.batch_size < 2 {
            return bad("batch size must be at least 2");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochLoss {
    pub gen_loss: f64,
    pub disc_loss: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GanModel {
    pub config: GanConfig,
    pub feature_names: Vec<String>,
    /// Label assigned to sampled rows.
    pub label: u8,
    pub transform: FeatureTransform,
    pub generator: MlpParams,
    pub discriminator: MlpParams,
    pub loss_history: Vec<EpochLoss>,
    pub discriminator_steps: usize,
    pub generator_steps: usize,
}

impl GanModel {
    pub fn to_json(&self) -> Result<String, GanError> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self, GanError> {
        let model: GanModel = serde_json::from_str(text)?;
        let width = model.feature_names.len();
        if model.generator.input_width() != model.config.embedding_dim
            || model.generator.output_width() != width
            || model.discriminator.input_width() != width
            || model.discriminator.output_width() != 1
            || model.transform.width() != width
        {
            return Err(GanError::ShapeMismatch("layer shapes disagree with the feature count".into()));
        }
        Ok(model)
    }
}

/// Discriminator loss `mean softplus(-D(real)) + mean softplus(D(fake))` on logits,
/// with its parameter gradients.
pub fn discriminator_loss(
    disc: &MlpParams,
    real: &Array2<f64>,
    fake: &Array2<f64>,
) -> Result<(f64, MlpGrads), GanError> {
    let (_, cache_r) = disc.forward(real)?;
    let (_, cache_f) = disc.forward(fake)?;
    let logits_r = cache_r.pre_activations.last().expect("non-empty network");
    let logits_f = cache_f.pre_activations.last().expect("non-empty network");
    let (nr, nf) = (real.nrows() as f64, fake.nrows() as f64);
    let loss = logits_r.iter().map(|&z| softplus(-z)).sum::<f64>() / nr
        + logits_f.iter().map(|&z| softplus(z)).sum::<f64>() / nf;
    let (mut grads, _) = disc.backward_from_pre_activation(&cache_r, logits_r.mapv(|z| (sigmoid(z) - 1.0) / nr));
    let (grads_f, _) = disc.backward_from_pre_activation(&cache_f, logits_f.mapv(|z| sigmoid(z) / nf));
    for (a, b) in grads.weights.iter_mut().zip(&grads_f.weights) {
        *a += b;
    }
    for (a, b) in grads.bias.iter_mut().zip(&grads_f.bias) {
        *a += b;
    }
    Ok((loss, grads))
}

/// Non-saturating generator loss `mean softplus(-D(G(noise)))`, with the
/// generator's parameter gradients (the discriminator is held fixed).
pub fn generator_loss(
    gen: &MlpParams,
    disc: &MlpParams,
    noise: &Array2<f64>,
) -> Result<(f64, MlpGrads), GanError> {
    let (fake, cache_g) = gen.forward(noise)?;
    let (_, cache_d) = disc.forward(&fake)?;
    let logits = cache_d.pre_activations.last().expect("non-empty network");
    let n = noise.nrows() as f64;
    let loss = logits.iter().map(|&z| softplus(-z)).sum::<f64>() / n;
    let (_, grad_fake) = disc.backward_from_pre_activation(&cache_d, logits.mapv(|z| (sigmoid(z) - 1.0) / n));
    let (grads, _) = gen.backward(&cache_g, &grad_fake);
    Ok((loss, grads))
}

pub fn build_generator<R: rand::Rng + ?Sized>(cfg: &GanConfig, width: usize, rng: &mut R) -> MlpParams {
    let mut widths = vec![cfg.embedding_dim];
    widths.extend(&cfg.generator_dims);
    widths.push(width);
    MlpParams::init(&widths, Activation::Relu, Activation::Identity, rng)
}

pub fn build_discriminator<R: rand::Rng + ?Sized>(cfg: &GanConfig, width: usize, rng: &mut R) -> MlpParams {
    let mut widths = vec![width];
    widths.extend(&cfg.discriminator_dims);
    widths.push(1);
    MlpParams::init(&widths, Activation::LeakyRelu { slope: DISCRIMINATOR_LEAKY_SLOPE }, Activation::Sigmoid, rng)
}

fn noise_matrix<R: rand::Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> Array2<f64> {
    Array2::from_shape_simple_fn((rows, cols), || rng::standard_normal(rng))
}

/// Trains on rows that all share one label.
///
/// Each epoch shuffles the rows and walks the minibatches (the last partial
/// batch included). Per batch: one discriminator step on the real batch
/// against an equally sized generated batch, then one generator step on fresh
/// noise. Random streams: stream 0 initializes the networks, stream `e + 1`
/// drives epoch `e`.
pub fn train_gan(rows: &Table, cfg: &GanConfig) -> Result<GanModel, GanError> {
    train_gan_with(rows, cfg, |_, _| {})
}

/// As [`train_gan`], calling `on_epoch(epoch, loss)` after every epoch.
pub fn train_gan_with(
    rows: &Table,
    cfg: &GanConfig,
    mut on_epoch: impl FnMut(usize, &EpochLoss),
) -> Result<GanModel, GanError> {
    cfg.validate()?;
    let n = rows.row_count();
    if n < 2 {
        return Err(GanError::TooFewRows(n));
    }
    let label = rows.labels()[0];
    if rows.labels().iter().any(|&l| l != label) {
        return Err(GanError::MixedLabels);
    }
    let (transform, data) = fit_transform(rows.features(), cfg.variant)?;
    let width = rows.col_count();

    let mut init_rng = rng::stream(cfg.seed, 0);
    let mut generator = build_generator(cfg, width, &mut init_rng);
    let mut discriminator = build_discriminator(cfg, width, &mut init_rng);
    let adam_cfg = AdamConfig::default();
    let mut gen_state = AdamState::new(&generator);
    let mut disc_state = AdamState::new(&discriminator);

    let mut order: Vec<usize> = (0..n).collect();
    let mut loss_history = Vec::with_capacity(cfg.epochs);
    let (mut d_steps, mut g_steps) = (0, 0);
    for epoch in 0..cfg.epochs {
        let mut rng = rng::stream(cfg.seed, epoch as u64 + 1);
        order.shuffle(&mut rng);
        let (mut g_sum, mut d_sum, mut batches) = (0.0, 0.0, 0usize);
        for chunk in order.chunks(cfg.batch_size) {
            let real = data.select(Axis(0), chunk);
            let b = chunk.len();

            let fake = generator.forward(&noise_matrix(b, cfg.embedding_dim, &mut rng))?.0;
            let (d_loss, d_grads) = discriminator_loss(&discriminator, &real, &fake)?;
            adam_step(&mut discriminator, &d_grads, &mut disc_state, cfg.discriminator_lr, &adam_cfg);
            d_steps += 1;

            let noise = noise_matrix(b, cfg.embedding_dim, &mut rng);
            let (g_loss, g_grads) = generator_loss(&generator, &discriminator, &noise)?;
            adam_step(&mut generator, &g_grads, &mut gen_state, cfg.generator_lr, &adam_cfg);
            g_steps += 1;

            g_sum += g_loss;
            d_sum += d_loss;
            batches += 1;
        }
        let loss = EpochLoss { gen_loss: g_sum / batches as f64, disc_loss: d_sum / batches as f64 };
        if !loss.gen_loss.is_finite() || !loss.disc_loss.is_finite() || !generator.is_finite() || !discriminator.is_finite() {
            return Err(GanError::NonFiniteLoss { epoch, gen_loss: loss.gen_loss, disc_loss: loss.disc_loss });
        }
        on_epoch(epoch, &loss);
        loss_history.push(loss);
    }
    Ok(GanModel {
        config: cfg.clone(),
        feature_names: rows.feature_names().to_vec(),
        label,
        transform,
        generator,
        discriminator,
        loss_history,
        discriminator_steps: d_steps,
        generator_steps: g_steps,
    })
}

/// Draws `n` rows from the generator and maps them back to feature space.
pub fn sample_synthetic(model: &GanModel, n: usize, seed: u64) -> Result<Table, GanError> {
    if n == 0 {
        return Ok(Table::empty(model.feature_names.clone())?);
    }
    let mut rng = rng::stream(seed, u64::MAX);
    let noise = noise_matrix(n, model.config.embedding_dim, &mut rng);
    let (scores, _) = model.generator.forward(&noise)?;
    let values = invert_transform(&model.transform, &scores)?;
    Ok(Table::new(model.feature_names.clone(), values, vec![model.label; n])?)
}

/// Marginal and dependence gaps between real and synthetic rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FidelityReport {
    pub mean_gaps: Vec<f64>,
    pub std_gaps: Vec<f64>,
    pub max_mean_gap: f64,
    pub max_std_gap: f64,
    /// Largest |r_real - r_synthetic| over column pairs.
    pub max_correlation_gap: f64,
}

impl FidelityReport {
    /// Scalar summary used as a tuning objective (lower is better): mean gaps
    /// scaled by each column's real spread, plus the correlation gap.
    pub fn overall_gap(&self, real_std: &[f64]) -> f64 {
        let d = self.mean_gaps.len().max(1) as f64;
        let marginal: f64 = self
            .mean_gaps
            .iter()
            .zip(&self.std_gaps)
            .zip(real_std)
            .map(|((m, s), &sd)| (m + s) / if sd > 0.0 { sd } else { 1.0 })
            .sum();
        marginal / d + self.max_correlation_gap
    }
}

pub fn fidelity_report(real: &Table, synthetic: &Table) -> Result<FidelityReport, GanError> {
    if real.feature_names() != synthetic.feature_names() {
        return Err(GanError::ShapeMismatch("real and synthetic columns differ".into()));
    }
    let stats = |t: &Table| -> (Vec<f64>, Vec<f64>) {
        if t.row_count() == 0 {
            return (vec![0.0; t.col_count()], vec![0.0; t.col_count()]);
        }
        let mean = t.features().mean_axis(Axis(0)).expect("rows present").to_vec();
        let std = t.features().std_axis(Axis(0), 0.0).to_vec();
        (mean, std)
    };
    let (rm, rs) = stats(real);
    let (sm, ss) = stats(synthetic);
    let mean_gaps: Vec<f64> = rm.iter().zip(&sm).map(|(a, b)| (a - b).abs()).collect();
    let std_gaps: Vec<f64> = rs.iter().zip(&ss).map(|(a, b)| (a - b).abs()).collect();
    let max_correlation_gap = if real.row_count() >= 2 && synthetic.row_count() >= 2 {
        let cr = pearson_correlation(real)?;
        let cs = pearson_correlation(synthetic)?;
        (&cr.values - &cs.values).iter().fold(0.0f64, |acc, v| acc.max(v.abs()))
    } else {
        0.0
    };
    Ok(FidelityReport {
        max_mean_gap: mean_gaps.iter().cloned().fold(0.0, f64::max),
        max_std_gap: std_gaps.iter().cloned().fold(0.0, f64::max),
        mean_gaps,
        std_gaps,
        max_correlation_gap,
    })
}

/// Real spread per column, for [`FidelityReport::overall_gap`].
pub fn column_std(t: &Table) -> Vec<f64> {
    if t.row_count() == 0 {
        return vec![0.0; t.col_count()];
    }
    t.features().std_axis(Axis(0), 0.0).to_vec()
}

#[cfg(test)]
mod tests;
