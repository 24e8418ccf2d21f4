//! WGAN-GP training of a quantum or classical generator against a dense critic.

use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rand::Rng as _;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::ansatz::{Shots, StyleConfig, StyleGenerator};
use crate::data_io::{Checkpoint, CheckpointKind};
use crate::error::{check_dim, Error, Result};
use crate::metrics::{frechet_distance_samples, jsd_features};
use crate::neural::{Activation, AdamConfig, AdamState, Mlp, MlpSpec};
use crate::rng;

/// Anything that maps latent noise to features and can be trained by a
/// vector-Jacobian product.
pub trait Generator: Send + Sync {
    fn latent_dim(&self) -> usize;
    fn feature_dim(&self) -> usize;
    fn param_count(&self) -> usize;
    fn params(&self) -> Vec<f64>;
    fn set_params(&mut self, params: &[f64]) -> Result<()>;
    /// Noise-free features for one latent vector.
    fn generate(&self, z: &[f64]) -> Result<Vec<f64>>;
    /// Features estimated from `shots` measurements; deterministic models
    /// ignore the shot budget.
    fn generate_with_shots(&self, z: &[f64], shots: Shots, seed: u64) -> Result<Vec<f64>> {
        let _ = (shots, seed);
        self.generate(z)
    }
    /// `upstreamᵀ · ∂features/∂params` at `z`.
    fn vjp(&self, z: &[f64], upstream: &[f64]) -> Result<Vec<f64>>;
    fn to_checkpoint(&self) -> Result<Checkpoint>;
}

impl Generator for StyleGenerator {
    fn latent_dim(&self) -> usize {
        self.config().latent_dim
    }

    fn feature_dim(&self) -> usize {
        StyleGenerator::feature_dim(self)
    }

    fn param_count(&self) -> usize {
        StyleGenerator::param_count(self)
    }

    fn params(&self) -> Vec<f64> {
        StyleGenerator::params(self).to_vec()
    }

    fn set_params(&mut self, params: &[f64]) -> Result<()> {
        StyleGenerator::set_params(self, params)
    }

    fn generate(&self, z: &[f64]) -> Result<Vec<f64>> {
        self.generate_features(z, Shots::Analytic, 0)
    }

    fn generate_with_shots(&self, z: &[f64], shots: Shots, seed: u64) -> Result<Vec<f64>> {
        self.generate_features(z, shots, seed)
    }

    fn vjp(&self, z: &[f64], upstream: &[f64]) -> Result<Vec<f64>> {
        self.feature_vjp(z, upstream)
    }

    fn to_checkpoint(&self) -> Result<Checkpoint> {
        let config = serde_json::to_value(GeneratorSpec::Quantum(*self.config()))?;
        Ok(Checkpoint { kind: CheckpointKind::Generator, config, params: self.params().to_vec() })
    }
}

/// Dense baseline generator: LeakyReLU hidden layers, Tanh head.
#[derive(Clone, Debug, PartialEq)]
pub struct ClassicalGenerator {
    net: Mlp,
}

impl ClassicalGenerator {
    pub fn new(latent_dim: usize, hidden: &[usize], feature_dim: usize, seed: u64) -> Result<Self> {
        let mut sizes = vec![latent_dim];
        sizes.extend(hidden);
        sizes.push(feature_dim);
        Ok(ClassicalGenerator { net: Mlp::lecun(&sizes, Activation::leaky(), Activation::Tanh, seed)? })
    }

    pub fn from_mlp(net: Mlp) -> Self {
        ClassicalGenerator { net }
    }

    pub fn network(&self) -> &Mlp {
        &self.net
    }
}

impl Generator for ClassicalGenerator {
    fn latent_dim(&self) -> usize {
        self.net.input_dim()
    }

    fn feature_dim(&self) -> usize {
        self.net.output_dim()
    }

    fn param_count(&self) -> usize {
        self.net.param_count()
    }

    fn params(&self) -> Vec<f64> {
        self.net.params_flat()
    }

    fn set_params(&mut self, params: &[f64]) -> Result<()> {
        self.net.set_params_flat(params)
    }

    fn generate(&self, z: &[f64]) -> Result<Vec<f64>> {
        self.net.forward(z)
    }

    fn vjp(&self, z: &[f64], upstream: &[f64]) -> Result<Vec<f64>> {
        Ok(self.net.backward(z, upstream)?.0)
    }

    fn to_checkpoint(&self) -> Result<Checkpoint> {
        let config = serde_json::to_value(GeneratorSpec::Classical(self.net.spec()))?;
        Ok(Checkpoint { kind: CheckpointKind::Generator, config, params: self.net.params_flat() })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", content = "spec", rename_all = "snake_case")]
pub enum GeneratorSpec {
    Quantum(StyleConfig),
    Classical(MlpSpec),
}

/// A generator of either family, as restored from a checkpoint.
#[derive(Clone, Debug, PartialEq)]
pub enum AnyGenerator {
    Quantum(StyleGenerator),
    Classical(ClassicalGenerator),
}

impl AnyGenerator {
    pub fn from_checkpoint(c: &Checkpoint) -> Result<Self> {
        if c.kind != CheckpointKind::Generator {
            return Err(Error::KindMismatch { expected: CheckpointKind::Generator.to_string(), found: c.kind.to_string() });
        }
        match serde_json::from_value(c.config.clone())? {
            GeneratorSpec::Quantum(cfg) => Ok(AnyGenerator::Quantum(StyleGenerator::from_params(cfg, c.params.clone())?)),
            GeneratorSpec::Classical(spec) => {
                Ok(AnyGenerator::Classical(ClassicalGenerator::from_mlp(Mlp::from_spec(&spec, &c.params)?)))
            }
        }
    }

    fn inner(&self) -> &dyn Generator {
        match self {
            AnyGenerator::Quantum(g) => g,
            AnyGenerator::Classical(g) => g,
        }
    }

    fn inner_mut(&mut self) -> &mut dyn Generator {
        match self {
            AnyGenerator::Quantum(g) => g,
            AnyGenerator::Classical(g) => g,
        }
    }
}

impl Generator for AnyGenerator {
    fn latent_dim(&self) -> usize {
        self.inner().latent_dim()
    }
    fn feature_dim(&self) -> usize {
        self.inner().feature_dim()
    }
    fn param_count(&self) -> usize {
        self.inner().param_count()
    }
    fn params(&self) -> Vec<f64> {
        self.inner().params()
    }
    fn set_params(&mut self, params: &[f64]) -> Result<()> {
        self.inner_mut().set_params(params)
    }
    fn generate(&self, z: &[f64]) -> Result<Vec<f64>> {
        self.inner().generate(z)
    }
    fn generate_with_shots(&self, z: &[f64], shots: Shots, seed: u64) -> Result<Vec<f64>> {
        self.inner().generate_with_shots(z, shots, seed)
    }
    fn vjp(&self, z: &[f64], upstream: &[f64]) -> Result<Vec<f64>> {
        self.inner().vjp(z, upstream)
    }
    fn to_checkpoint(&self) -> Result<Checkpoint> {
        self.inner().to_checkpoint()
    }
}

/// Critic `D_ℓ → hidden… → 1`, LeakyReLU hidden layers, linear output.
pub fn new_critic(feature_dim: usize, hidden: &[usize], seed: u64) -> Result<Mlp> {
    let mut sizes = vec![feature_dim];
    sizes.extend(hidden);
    sizes.push(1);
    Mlp::lecun(&sizes, Activation::leaky(), Activation::Identity, seed)
}

pub fn critic_to_checkpoint(d: &Mlp) -> Result<Checkpoint> {
    Ok(Checkpoint { kind: CheckpointKind::Discriminator, config: serde_json::to_value(d.spec())?, params: d.params_flat() })
}

pub fn critic_from_checkpoint(c: &Checkpoint) -> Result<Mlp> {
    if c.kind != CheckpointKind::Discriminator {
        return Err(Error::KindMismatch { expected: CheckpointKind::Discriminator.to_string(), found: c.kind.to_string() });
    }
    Mlp::from_spec(&serde_json::from_value(c.config.clone())?, &c.params)
}

fn batch_matrix(rows: &[Vec<f64>], dim: usize) -> Result<DMatrix<f64>> {
    if rows.is_empty() {
        return Err(Error::EmptyDataset);
    }
    for r in rows {
        check_dim(dim, r.len())?;
    }
    Ok(DMatrix::from_iterator(dim, rows.len(), rows.iter().flatten().copied()))
}

fn mean_output(d: &Mlp, rows: &[Vec<f64>]) -> Result<f64> {
    let out = d.forward_batch(&batch_matrix(rows, d.input_dim())?)?;
    Ok(out.mean())
}

/// `-mean D(fake)`.
pub fn generator_loss(d: &Mlp, fake: &[Vec<f64>]) -> Result<f64> {
    Ok(-mean_output(d, fake)?)
}

fn interpolate(real: &[f64], fake: &[f64], eps: f64) -> Vec<f64> {
    real.iter().zip(fake).map(|(x, y)| eps * x + (1.0 - eps) * y).collect()
}

fn check_pairs(real: &[Vec<f64>], fake: &[Vec<f64>], eps: &[f64]) -> Result<()> {
    if real.is_empty() {
        return Err(Error::EmptyDataset);
    }
    check_dim(real.len(), fake.len())?;
    check_dim(real.len(), eps.len())
}

/// `-mean D(real) + mean D(fake) + λ·mean (‖∇D(x̂)‖ - 1)²` with
/// `x̂ = ε·real + (1-ε)·fake`.
pub fn critic_loss(d: &Mlp, real: &[Vec<f64>], fake: &[Vec<f64>], eps: &[f64], lambda: f64) -> Result<f64> {
    Ok(critic_loss_and_grad(d, real, fake, eps, lambda)?.0)
}

/// [`critic_loss`] together with its gradient over the critic parameters.
pub fn critic_loss_and_grad(
    d: &Mlp,
    real: &[Vec<f64>],
    fake: &[Vec<f64>],
    eps: &[f64],
    lambda: f64,
) -> Result<(f64, Vec<f64>)> {
    check_pairs(real, fake, eps)?;
    let b = real.len() as f64;
    let xr = batch_matrix(real, d.input_dim())?;
    let xf = batch_matrix(fake, d.input_dim())?;
    let loss_w = -d.forward_batch(&xr)?.mean() + d.forward_batch(&xf)?.mean();
    let (gr, _) = d.backward_batch(&xr, &DMatrix::from_element(1, real.len(), -1.0 / b))?;
    let (gf, _) = d.backward_batch(&xf, &DMatrix::from_element(1, fake.len(), 1.0 / b))?;
    let mut grad: Vec<f64> = gr.iter().zip(&gf).map(|(a, c)| a + c).collect();
    if lambda == 0.0 {
        return Ok((loss_w, grad));
    }
    let parts: Vec<(f64, Vec<f64>)> = real
        .par_iter()
        .zip(fake.par_iter())
        .zip(eps.par_iter())
        .map(|((r, f), &e)| d.gp_gradients(&interpolate(r, f, e)))
        .collect::<Result<_>>()?;
    let mut penalty = 0.0;
    for (p, g) in parts {
        penalty += p;
        for (acc, v) in grad.iter_mut().zip(g) {
            *acc += lambda * v / b;
        }
    }
    Ok((loss_w + lambda * penalty / b, grad))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GanConfig {
    pub lambda: f64,
    pub batch: usize,
    pub epochs: usize,
    pub n_critic: usize,
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    /// Quantum generator init range `U(-δ, δ)`.
    pub delta: f64,
    pub seed: u64,
    /// Held-out samples per side for per-epoch metrics; 0 disables them.
    pub eval_size: usize,
    pub jsd_k: usize,
    /// Save checkpoints every this many epochs; 0 only at the end.
    pub checkpoint_every: usize,
}

impl Default for GanConfig {
    fn default() -> Self {
        GanConfig {
            lambda: 10.0,
            batch: 64,
            epochs: 50,
            n_critic: 5,
            lr: 1e-3,
            beta1: 0.5,
            beta2: 0.999,
            delta: 0.01,
            seed: 0,
            eval_size: 512,
            jsd_k: 100,
            checkpoint_every: 0,
        }
    }
}

impl GanConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.lambda >= 0.0) {
            return Err(Error::invalid(format!("lambda must be non-negative, got {}", self.lambda)));
        }
        if self.n_critic == 0 || self.batch == 0 {
            return Err(Error::invalid("n_critic and batch must be at least 1"));
        }
        if !(self.lr >= 0.0) {
            return Err(Error::invalid(format!("learning rate must be non-negative, got {}", self.lr)));
        }
        Ok(())
    }

    fn adam(&self) -> AdamConfig {
        AdamConfig::new(self.lr, self.beta1, self.beta2)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepLosses {
    /// Critic loss of the last critic iteration, before its update.
    pub critic: f64,
    /// Generator loss on the batch used for the generator update.
    pub generator: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpochMetrics {
    pub epoch: usize,
    pub generator_loss: f64,
    pub critic_loss: f64,
    pub jsd: f64,
    pub frechet: f64,
}

pub fn sample_latent(count: usize, dim: usize, r: &mut rng::Rng) -> Vec<Vec<f64>> {
    (0..count)
        .map(|_| (0..dim).map(|_| StandardNormal.sample(&mut *r)).collect())
        .collect()
}

/// Analytic features for a batch of latent vectors, in order.
pub fn generate_batch<G: Generator + ?Sized>(g: &G, zs: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
    zs.par_iter().map(|z| g.generate(z)).collect()
}

/// Gradient of [`generator_loss`] with respect to the generator parameters.
pub fn generator_grad<G: Generator + ?Sized>(g: &G, d: &Mlp, zs: &[Vec<f64>]) -> Result<(f64, Vec<f64>)> {
    let fake = generate_batch(g, zs)?;
    let b = zs.len() as f64;
    let x = batch_matrix(&fake, d.input_dim())?;
    let loss = -d.forward_batch(&x)?.mean();
    let (_, dx) = d.backward_batch(&x, &DMatrix::from_element(1, zs.len(), -1.0 / b))?;
    let parts: Vec<Vec<f64>> = zs
        .par_iter()
        .enumerate()
        .map(|(i, z)| g.vjp(z, dx.column(i).as_slice()))
        .collect::<Result<_>>()?;
    let mut grad = vec![0.0; g.param_count()];
    for p in parts {
        for (a, v) in grad.iter_mut().zip(p) {
            *a += v;
        }
    }
    Ok((loss, grad))
}

/// Owns the critic, both optimizers and the run RNG.
pub struct GanTrainer<G: Generator> {
    pub generator: G,
    pub critic: Mlp,
    pub config: GanConfig,
    g_opt: AdamState,
    d_opt: AdamState,
    rng: rng::Rng,
}

impl<G: Generator> GanTrainer<G> {
    pub fn new(generator: G, critic: Mlp, config: GanConfig) -> Result<Self> {
        config.validate()?;
        check_dim(generator.feature_dim(), critic.input_dim())?;
        check_dim(1, critic.output_dim())?;
        let g_opt = AdamState::new(generator.param_count(), config.adam());
        let d_opt = AdamState::new(critic.param_count(), config.adam());
        let rng = rng::stream(config.seed, 1);
        Ok(GanTrainer { generator, critic, config, g_opt, d_opt, rng })
    }

    /// `n_critic` critic updates against `real`, then one generator update.
    pub fn step(&mut self, real: &[Vec<f64>]) -> Result<StepLosses> {
        if real.is_empty() {
            return Err(Error::EmptyDataset);
        }
        let b = real.len();
        let dz = self.generator.latent_dim();
        let mut critic = f64::NAN;
        for _ in 0..self.config.n_critic {
            let zs = sample_latent(b, dz, &mut self.rng);
            let eps: Vec<f64> = (0..b).map(|_| self.rng.random::<f64>()).collect();
            let fake = generate_batch(&self.generator, &zs)?;
            let (l, g) = critic_loss_and_grad(&self.critic, real, &fake, &eps, self.config.lambda)?;
            critic = l;
            self.d_opt.step_slices(self.critic.param_slices_mut(), &g)?;
        }
        let zs = sample_latent(b, dz, &mut self.rng);
        let (generator, grad) = generator_grad(&self.generator, &self.critic, &zs)?;
        let mut params = self.generator.params();
        self.g_opt.step(&mut params, &grad)?;
        self.generator.set_params(&params)?;
        if !(critic.is_finite() && generator.is_finite()) {
            return Err(Error::Numeric("GAN losses became non-finite".into()));
        }
        Ok(StepLosses { critic, generator })
    }

    /// JSD and Fréchet distance between `eval_real` and fresh samples.
    pub fn evaluate(&self, eval_real: &[Vec<f64>], seed: u64) -> Result<(f64, f64)> {
        let mut r = rng::stream(seed, 2);
        let zs = sample_latent(eval_real.len(), self.generator.latent_dim(), &mut r);
        let fake = generate_batch(&self.generator, &zs)?;
        let k = self.config.jsd_k.min(eval_real.len());
        Ok((jsd_features(eval_real, &fake, k, seed)?, frechet_distance_samples(eval_real, &fake)?))
    }

    /// Shuffled minibatch epochs. The evaluation set is split off the end of
    /// `data` before training; `on_epoch` runs after each epoch (epoch 0 is
    /// the untrained model) and may save checkpoints.
    pub fn train(
        &mut self,
        data: &[Vec<f64>],
        mut on_epoch: impl FnMut(&Self, &EpochMetrics) -> Result<()>,
    ) -> Result<Vec<EpochMetrics>> {
        if data.is_empty() {
            return Err(Error::EmptyDataset);
        }
        let eval_n = self.config.eval_size.min(data.len() / 2);
        let (train, eval) = data.split_at(data.len() - eval_n);
        let eval_seed = rng::derive(self.config.seed, 3);
        let metrics_at = |t: &Self, epoch: usize, gl: f64, cl: f64| -> Result<EpochMetrics> {
            let (jsd, frechet) = if eval_n >= 2 { t.evaluate(eval, eval_seed)? } else { (f64::NAN, f64::NAN) };
            Ok(EpochMetrics { epoch, generator_loss: gl, critic_loss: cl, jsd, frechet })
        };
        let mut history = Vec::with_capacity(self.config.epochs + 1);
        let m0 = metrics_at(self, 0, f64::NAN, f64::NAN)?;
        on_epoch(self, &m0)?;
        history.push(m0);
        let mut order: Vec<usize> = (0..train.len()).collect();
        for epoch in 1..=self.config.epochs {
            order.shuffle(&mut rng::stream(self.config.seed, 1000 + epoch as u64));
            let (mut gl, mut cl, mut steps) = (0.0, 0.0, 0);
            for idx in order.chunks(self.config.batch) {
                let batch: Vec<Vec<f64>> = idx.iter().map(|&i| train[i].clone()).collect();
                let s = self.step(&batch)?;
                gl += s.generator;
                cl += s.critic;
                steps += 1;
            }
            let m = metrics_at(self, epoch, gl / steps as f64, cl / steps as f64)?;
            log::info!(
                "epoch {epoch}: L_G {:.4} L_D {:.4} JSD {:.4} FD {:.4}",
                m.generator_loss,
                m.critic_loss,
                m.jsd,
                m.frechet
            );
            on_epoch(self, &m)?;
            history.push(m);
        }
        Ok(history)
    }

    pub fn steps_taken(&self) -> u64 {
        self.g_opt.steps()
    }
}

/// Quantum generator with `W, b ~ U(-δ, δ)`.
pub fn init_style_generator(config: StyleConfig, delta: f64, seed: u64) -> Result<StyleGenerator> {
    let mut g = StyleGenerator::new(config)?;
    g.init_uniform(delta, seed);
    Ok(g)
}
