//! Dense autoencoder mapping images to a `[-1, 1]` latent space and back.

use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data_io::{Checkpoint, CheckpointKind};
use crate::error::{check_dim, Error, Result};
use crate::neural::{Activation, AdamConfig, AdamState, Mlp, MlpSpec};
use crate::rng;

pub const DEFAULT_LATENT_DIM: usize = 20;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AeConfig {
    pub input_dim: usize,
    /// Encoder hidden widths; the decoder mirrors them.
    pub hidden: Vec<usize>,
    pub latent_dim: usize,
}

impl Default for AeConfig {
    fn default() -> Self {
        AeConfig { input_dim: 784, hidden: vec![256, 64], latent_dim: DEFAULT_LATENT_DIM }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AeTrainConfig {
    pub epochs: usize,
    pub lr: f64,
    pub batch: usize,
    pub seed: u64,
}

impl Default for AeTrainConfig {
    fn default() -> Self {
        AeTrainConfig { epochs: 100, lr: 1e-3, batch: 64, seed: 0 }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct AutoEncoder {
    encoder: Mlp,
    decoder: Mlp,
}

#[derive(Serialize, Deserialize)]
struct AeCheckpointConfig {
    encoder: MlpSpec,
    decoder: MlpSpec,
}

/// Samples per matrix block in batched inference.
const BLOCK: usize = 256;

fn to_matrix(rows: &[Vec<f64>], dim: usize) -> Result<DMatrix<f64>> {
    for r in rows {
        check_dim(dim, r.len())?;
    }
    Ok(DMatrix::from_iterator(dim, rows.len(), rows.iter().flatten().copied()))
}

fn from_matrix(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    m.column_iter().map(|c| c.iter().copied().collect()).collect()
}

fn blocked(net: &Mlp, rows: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
    let parts: Vec<Vec<Vec<f64>>> = rows
        .par_chunks(BLOCK)
        .map(|chunk| Ok(from_matrix(&net.forward_batch(&to_matrix(chunk, net.input_dim())?)?)))
        .collect::<Result<_>>()?;
    Ok(parts.into_iter().flatten().collect())
}

impl AutoEncoder {
    /// Encoder `input → hidden… → latent` (LeakyReLU, Tanh head); decoder
    /// mirrors it with a logistic head.
    pub fn new(cfg: &AeConfig, seed: u64) -> Result<Self> {
        if cfg.latent_dim == 0 || cfg.input_dim == 0 {
            return Err(Error::invalid("autoencoder dimensions must be positive"));
        }
        let mut sizes = vec![cfg.input_dim];
        sizes.extend(&cfg.hidden);
        sizes.push(cfg.latent_dim);
        let encoder = Mlp::lecun(&sizes, Activation::leaky(), Activation::Tanh, rng::derive(seed, 0))?;
        sizes.reverse();
        let decoder = Mlp::lecun(&sizes, Activation::leaky(), Activation::Sigmoid, rng::derive(seed, 1))?;
        Ok(AutoEncoder { encoder, decoder })
    }

    pub fn from_parts(encoder: Mlp, decoder: Mlp) -> Result<Self> {
        check_dim(encoder.output_dim(), decoder.input_dim())?;
        check_dim(encoder.input_dim(), decoder.output_dim())?;
        Ok(AutoEncoder { encoder, decoder })
    }

    pub fn encoder(&self) -> &Mlp {
        &self.encoder
    }

    pub fn decoder(&self) -> &Mlp {
        &self.decoder
    }

    pub fn latent_dim(&self) -> usize {
        self.encoder.output_dim()
    }

    pub fn input_dim(&self) -> usize {
        self.encoder.input_dim()
    }

    pub fn encode(&self, image: &[f64]) -> Result<Vec<f64>> {
        self.encoder.forward(image)
    }

    pub fn decode(&self, feature: &[f64]) -> Result<Vec<f64>> {
        self.decoder.forward(feature)
    }

    pub fn encode_batch(&self, images: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
        blocked(&self.encoder, images)
    }

    pub fn decode_batch(&self, features: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
        blocked(&self.decoder, features)
    }

    /// Mean squared pixel error of `decode(encode(x))`.
    pub fn reconstruction_mse(&self, images: &[Vec<f64>]) -> Result<f64> {
        if images.is_empty() {
            return Err(Error::EmptyDataset);
        }
        let rec = self.decode_batch(&self.encode_batch(images)?)?;
        let total: f64 = images
            .iter()
            .zip(&rec)
            .map(|(a, b)| a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>())
            .sum();
        Ok(total / (images.len() * self.input_dim()) as f64)
    }

    pub fn to_checkpoint(&self) -> Result<Checkpoint> {
        let config = serde_json::to_value(AeCheckpointConfig { encoder: self.encoder.spec(), decoder: self.decoder.spec() })?;
        let mut params = self.encoder.params_flat();
        params.extend(self.decoder.params_flat());
        Ok(Checkpoint { kind: CheckpointKind::Autoencoder, config, params })
    }

    pub fn from_checkpoint(c: &Checkpoint) -> Result<Self> {
        if c.kind != CheckpointKind::Autoencoder {
            return Err(Error::KindMismatch { expected: CheckpointKind::Autoencoder.to_string(), found: c.kind.to_string() });
        }
        let cfg: AeCheckpointConfig = serde_json::from_value(c.config.clone())?;
        let enc = Mlp::from_spec(&cfg.encoder, &vec![0.0; spec_params(&cfg.encoder)])?;
        let n_enc = enc.param_count();
        if c.params.len() < n_enc {
            return Err(Error::Format("autoencoder payload too short".into()));
        }
        let encoder = Mlp::from_spec(&cfg.encoder, &c.params[..n_enc])?;
        let decoder = Mlp::from_spec(&cfg.decoder, &c.params[n_enc..])?;
        Self::from_parts(encoder, decoder)
    }
}

fn spec_params(s: &MlpSpec) -> usize {
    s.sizes.windows(2).map(|w| w[0] * w[1] + w[1]).sum()
}

/// Minibatch Adam on the reconstruction MSE; returns the mean training loss
/// of every epoch.
pub fn train_ae(ae: &mut AutoEncoder, images: &[Vec<f64>], cfg: &AeTrainConfig) -> Result<Vec<f64>> {
    train_ae_with(ae, images, cfg, |_, _| {})
}

/// [`train_ae`] with a per-epoch callback receiving `(epoch, loss)`.
pub fn train_ae_with(
    ae: &mut AutoEncoder,
    images: &[Vec<f64>],
    cfg: &AeTrainConfig,
    mut on_epoch: impl FnMut(usize, f64),
) -> Result<Vec<f64>> {
    if images.is_empty() {
        return Err(Error::EmptyDataset);
    }
    if cfg.batch == 0 {
        return Err(Error::invalid("batch size must be positive"));
    }
    let d = ae.input_dim();
    for im in images {
        check_dim(d, im.len())?;
    }
    let adam = AdamConfig { lr: cfg.lr, ..AdamConfig::default() };
    let n_enc = ae.encoder.param_count();
    let mut enc_opt = AdamState::new(n_enc, adam);
    let mut dec_opt = AdamState::new(ae.decoder.param_count(), adam);
    let mut order: Vec<usize> = (0..images.len()).collect();
    let mut losses = Vec::with_capacity(cfg.epochs);
    for epoch in 0..cfg.epochs {
        order.shuffle(&mut rng::stream(cfg.seed, epoch as u64));
        let mut total = 0.0;
        for idx in order.chunks(cfg.batch) {
            let x = DMatrix::from_iterator(d, idx.len(), idx.iter().flat_map(|&i| images[i].iter().copied()));
            let z = ae.encoder.forward_batch(&x)?;
            let y = ae.decoder.forward_batch(&z)?;
            let diff = &y - &x;
            total += diff.norm_squared();
            let scale = 2.0 / (idx.len() * d) as f64;
            let (g_dec, g_z) = ae.decoder.backward_batch(&z, &(diff * scale))?;
            let (g_enc, _) = ae.encoder.backward_batch(&x, &g_z)?;
            enc_opt.step_slices(ae.encoder.param_slices_mut(), &g_enc)?;
            dec_opt.step_slices(ae.decoder.param_slices_mut(), &g_dec)?;
        }
        let loss = total / (images.len() * d) as f64;
        if !loss.is_finite() {
            return Err(Error::Numeric(format!("autoencoder loss diverged at epoch {epoch}")));
        }
        on_epoch(epoch, loss);
        losses.push(loss);
    }
    Ok(losses)
}
