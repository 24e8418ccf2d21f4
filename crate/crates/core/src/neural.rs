//! Dense networks with reverse-mode gradients, the double-backprop gradient
//! penalty, and Adam.
//!
//! Batches are matrices with one sample per column. Flat parameter vectors
//! list each layer's weights (column-major) followed by its bias.

use nalgebra::{DMatrix, DVector};
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::rng;

pub const LEAKY_SLOPE: f64 = 0.2;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum Activation {
    Identity,
    LeakyRelu(f64),
    Tanh,
    Sigmoid,
}

impl Activation {
    pub fn leaky() -> Self {
        Activation::LeakyRelu(LEAKY_SLOPE)
    }

    #[inline]
    pub fn apply(self, z: f64) -> f64 {
        match self {
            Activation::Identity => z,
            Activation::LeakyRelu(s) => {
                if z >= 0.0 {
                    z
                } else {
                    s * z
                }
            }
            Activation::Tanh => z.tanh(),
            Activation::Sigmoid => 1.0 / (1.0 + (-z).exp()),
        }
    }

    /// First derivative, given pre-activation `z` and output `a`.
    #[inline]
    pub fn deriv(self, z: f64, a: f64) -> f64 {
        match self {
            Activation::Identity => 1.0,
            Activation::LeakyRelu(s) => {
                if z >= 0.0 {
                    1.0
                } else {
                    s
                }
            }
            Activation::Tanh => 1.0 - a * a,
            Activation::Sigmoid => a * (1.0 - a),
        }
    }

    /// Second derivative; piecewise-linear activations give 0.
    #[inline]
    pub fn deriv2(self, a: f64) -> f64 {
        match self {
            Activation::Identity | Activation::LeakyRelu(_) => 0.0,
            Activation::Tanh => -2.0 * a * (1.0 - a * a),
            Activation::Sigmoid => a * (1.0 - a) * (1.0 - 2.0 * a),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Dense {
    /// `out × in`.
    pub weights: DMatrix<f64>,
    pub bias: DVector<f64>,
    pub activation: Activation,
}

impl Dense {
    pub fn input_dim(&self) -> usize {
        self.weights.ncols()
    }

    pub fn output_dim(&self) -> usize {
        self.weights.nrows()
    }

    fn preact(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        let mut z = &self.weights * x;
        for mut col in z.column_iter_mut() {
            col += &self.bias;
        }
        z
    }
}

/// `N(0, 1/fan_in)` entries for an `fan_out × fan_in` matrix.
pub fn lecun_init(fan_out: usize, fan_in: usize, seed: u64) -> DMatrix<f64> {
    let mut r = rng::stream(seed, 0);
    let normal = Normal::new(0.0, 1.0 / (fan_in.max(1) as f64).sqrt()).expect("valid std");
    // column-major fill order
    DMatrix::from_iterator(fan_out, fan_in, (0..fan_out * fan_in).map(|_| normal.sample(&mut r)))
}

/// Layer widths and per-layer activations.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MlpSpec {
    pub sizes: Vec<usize>,
    pub activations: Vec<Activation>,
}

/// Multi-layer perceptron.
#[derive(Clone, Debug, PartialEq)]
pub struct Mlp {
    layers: Vec<Dense>,
}

struct Tape {
    /// `acts[0]` is the input, `acts[l+1]` the output of layer `l`.
    acts: Vec<DMatrix<f64>>,
    pre: Vec<DMatrix<f64>>,
}

impl Mlp {
    /// Zero-initialized network; `hidden` applies to all but the last layer.
    pub fn zeros(sizes: &[usize], hidden: Activation, output: Activation) -> Result<Self> {
        if sizes.len() < 2 || sizes.contains(&0) {
            return Err(Error::invalid(format!("bad layer sizes {sizes:?}")));
        }
        let last = sizes.len() - 2;
        let layers = sizes
            .windows(2)
            .enumerate()
            .map(|(l, w)| Dense {
                weights: DMatrix::zeros(w[1], w[0]),
                bias: DVector::zeros(w[1]),
                activation: if l == last { output } else { hidden },
            })
            .collect();
        Ok(Mlp { layers })
    }

    /// LeCun-normal weights, zero biases.
    pub fn lecun(sizes: &[usize], hidden: Activation, output: Activation, seed: u64) -> Result<Self> {
        let mut m = Self::zeros(sizes, hidden, output)?;
        for (l, layer) in m.layers.iter_mut().enumerate() {
            let (o, i) = layer.weights.shape();
            layer.weights = lecun_init(o, i, rng::derive(seed, l as u64));
        }
        Ok(m)
    }

    pub fn from_layers(layers: Vec<Dense>) -> Result<Self> {
        if layers.is_empty() {
            return Err(Error::invalid("network needs at least one layer"));
        }
        for w in layers.windows(2) {
            check_dim(w[0].output_dim(), w[1].input_dim())?;
        }
        for l in &layers {
            check_dim(l.output_dim(), l.bias.len())?;
        }
        Ok(Mlp { layers })
    }

    pub fn layers(&self) -> &[Dense] {
        &self.layers
    }

    pub fn sizes(&self) -> Vec<usize> {
        let mut s = vec![self.input_dim()];
        s.extend(self.layers.iter().map(Dense::output_dim));
        s
    }

    pub fn activations(&self) -> Vec<Activation> {
        self.layers.iter().map(|l| l.activation).collect()
    }

    pub fn spec(&self) -> MlpSpec {
        MlpSpec { sizes: self.sizes(), activations: self.activations() }
    }

    /// Rebuilds a network from its architecture and flat parameters.
    pub fn from_spec(spec: &MlpSpec, params: &[f64]) -> Result<Self> {
        check_dim(spec.sizes.len().saturating_sub(1), spec.activations.len())?;
        if spec.sizes.len() < 2 || spec.sizes.contains(&0) {
            return Err(Error::invalid(format!("bad layer sizes {:?}", spec.sizes)));
        }
        let layers = spec
            .sizes
            .windows(2)
            .zip(&spec.activations)
            .map(|(w, &activation)| Dense {
                weights: DMatrix::zeros(w[1], w[0]),
                bias: DVector::zeros(w[1]),
                activation,
            })
            .collect();
        let mut m = Mlp { layers };
        m.set_params_flat(params)?;
        Ok(m)
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].input_dim()
    }

    pub fn output_dim(&self) -> usize {
        self.layers[self.layers.len() - 1].output_dim()
    }

    pub fn param_count(&self) -> usize {
        self.layers.iter().map(|l| l.weights.len() + l.bias.len()).sum()
    }

    pub fn params_flat(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.param_count());
        for l in &self.layers {
            out.extend_from_slice(l.weights.as_slice());
            out.extend_from_slice(l.bias.as_slice());
        }
        out
    }

    pub fn set_params_flat(&mut self, p: &[f64]) -> Result<()> {
        check_dim(self.param_count(), p.len())?;
        let mut off = 0;
        for l in &mut self.layers {
            let nw = l.weights.len();
            l.weights.as_mut_slice().copy_from_slice(&p[off..off + nw]);
            off += nw;
            let nb = l.bias.len();
            l.bias.as_mut_slice().copy_from_slice(&p[off..off + nb]);
            off += nb;
        }
        Ok(())
    }

    /// Mutable views in flat-parameter order.
    pub fn param_slices_mut(&mut self) -> Vec<&mut [f64]> {
        let mut out = Vec::with_capacity(2 * self.layers.len());
        for l in &mut self.layers {
            out.push(l.weights.as_mut_slice());
            out.push(l.bias.as_mut_slice());
        }
        out
    }

    pub fn is_finite(&self) -> bool {
        self.layers
            .iter()
            .all(|l| l.weights.iter().chain(l.bias.iter()).all(|v| v.is_finite()))
    }

    fn run(&self, x: &DMatrix<f64>) -> Result<Tape> {
        check_dim(self.input_dim(), x.nrows())?;
        let mut acts = Vec::with_capacity(self.layers.len() + 1);
        let mut pre = Vec::with_capacity(self.layers.len());
        acts.push(x.clone());
        for l in &self.layers {
            let z = l.preact(acts.last().expect("input present"));
            let act = l.activation;
            acts.push(z.map(|v| act.apply(v)));
            pre.push(z);
        }
        Ok(Tape { acts, pre })
    }

    pub fn forward(&self, x: &[f64]) -> Result<Vec<f64>> {
        let out = self.forward_batch(&DMatrix::from_column_slice(x.len(), 1, x))?;
        Ok(out.as_slice().to_vec())
    }

    pub fn forward_batch(&self, x: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        check_dim(self.input_dim(), x.nrows())?;
        let mut a = x.clone();
        for l in &self.layers {
            let act = l.activation;
            a = l.preact(&a).map(|v| act.apply(v));
        }
        Ok(a)
    }

    /// Gradients of `Σ_samples upstreamᵀ·forward(x)` w.r.t. the parameters
    /// (flat) and the inputs.
    pub fn backward_batch(&self, x: &DMatrix<f64>, upstream: &DMatrix<f64>) -> Result<(Vec<f64>, DMatrix<f64>)> {
        check_dim(self.output_dim(), upstream.nrows())?;
        check_dim(x.ncols(), upstream.ncols())?;
        let tape = self.run(x)?;
        let mut grads: Vec<(DMatrix<f64>, DVector<f64>)> = Vec::with_capacity(self.layers.len());
        let mut up = upstream.clone();
        for (l, layer) in self.layers.iter().enumerate().rev() {
            let act = layer.activation;
            let delta = up.zip_zip_map(&tape.pre[l], &tape.acts[l + 1], |u, z, a| u * act.deriv(z, a));
            let gw = &delta * tape.acts[l].transpose();
            let gb = delta.column_sum();
            up = layer.weights.transpose() * &delta;
            grads.push((gw, gb));
        }
        grads.reverse();
        let mut flat = Vec::with_capacity(self.param_count());
        for (gw, gb) in grads {
            flat.extend_from_slice(gw.as_slice());
            flat.extend_from_slice(gb.as_slice());
        }
        Ok((flat, up))
    }

    pub fn backward(&self, x: &[f64], upstream: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
        let xm = DMatrix::from_column_slice(x.len(), 1, x);
        let um = DMatrix::from_column_slice(upstream.len(), 1, upstream);
        let (g, gx) = self.backward_batch(&xm, &um)?;
        Ok((g, gx.as_slice().to_vec()))
    }

    /// `∇_x m(x)` for a scalar-output network.
    pub fn input_gradient(&self, x: &[f64]) -> Result<Vec<f64>> {
        check_dim(1, self.output_dim())?;
        Ok(self.backward(x, &[1.0])?.1)
    }

    /// Penalty `(‖∇_x m(x)‖ - 1)²` and its gradient w.r.t. the parameters.
    pub fn gp_gradients(&self, x_hat: &[f64]) -> Result<(f64, Vec<f64>)> {
        check_dim(1, self.output_dim())?;
        let xm = DMatrix::from_column_slice(x_hat.len(), 1, x_hat);
        let tape = self.run(&xm)?;
        let nl = self.layers.len();
        let col = |m: &DMatrix<f64>| DVector::from_column_slice(m.as_slice());
        let pre: Vec<DVector<f64>> = tape.pre.iter().map(col).collect();
        let acts: Vec<DVector<f64>> = tape.acts.iter().map(col).collect();
        let fprime: Vec<DVector<f64>> = (0..nl)
            .map(|l| {
                let act = self.layers[l].activation;
                pre[l].zip_map(&acts[l + 1], |z, a| act.deriv(z, a))
            })
            .collect();

        // input gradient: u_L = 1, δ_l = f'_l ⊙ u_l, u_{l-1} = W_lᵀ δ_l
        let mut deltas = vec![DVector::zeros(0); nl];
        let mut u = DVector::from_element(1, 1.0);
        for l in (0..nl).rev() {
            deltas[l] = fprime[l].component_mul(&u);
            u = self.layers[l].weights.tr_mul(&deltas[l]);
        }
        let us = {
            // u_l for l = 1..=L, needed for the second-order term
            let mut v = vec![DVector::zeros(0); nl + 1];
            v[nl] = DVector::from_element(1, 1.0);
            for l in (1..nl).rev() {
                v[l] = self.layers[l].weights.tr_mul(&deltas[l]);
            }
            v
        };
        let g = u;
        let norm = g.norm();
        let penalty = (norm - 1.0).powi(2);

        let mut gw: Vec<DMatrix<f64>> = self.layers.iter().map(|l| DMatrix::zeros(l.weights.nrows(), l.weights.ncols())).collect();
        let mut gb: Vec<DVector<f64>> = self.layers.iter().map(|l| DVector::zeros(l.bias.len())).collect();
        let mut zbar_direct = vec![DVector::zeros(0); nl];

        // reverse of the input-gradient pass, running from layer 0 upwards
        let mut ubar = &g * (2.0 * (norm - 1.0) / norm.max(1e-12));
        for l in 0..nl {
            let w = &self.layers[l].weights;
            gw[l] += &deltas[l] * ubar.transpose();
            let dbar = w * &ubar;
            let act = self.layers[l].activation;
            let f2 = acts[l + 1].map(|a| act.deriv2(a));
            zbar_direct[l] = dbar.component_mul(&us[l + 1]).component_mul(&f2);
            ubar = dbar.component_mul(&fprime[l]);
        }

        // reverse of the forward pass
        let mut abar: DVector<f64> = DVector::zeros(self.output_dim());
        for l in (0..nl).rev() {
            let zbar = &zbar_direct[l] + abar.component_mul(&fprime[l]);
            gw[l] += &zbar * acts[l].transpose();
            gb[l] += &zbar;
            abar = self.layers[l].weights.tr_mul(&zbar);
        }

        let mut flat = Vec::with_capacity(self.param_count());
        for (w, b) in gw.iter().zip(&gb) {
            flat.extend_from_slice(w.as_slice());
            flat.extend_from_slice(b.as_slice());
        }
        Ok((penalty, flat))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl AdamConfig {
    pub fn new(lr: f64, beta1: f64, beta2: f64) -> Self {
        AdamConfig { lr, beta1, beta2, eps: 1e-8 }
    }
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig::new(1e-3, 0.9, 0.999)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct AdamState {
    pub config: AdamConfig,
    m: Vec<f64>,
    v: Vec<f64>,
    t: u64,
}

impl AdamState {
    pub fn new(size: usize, config: AdamConfig) -> Self {
        AdamState { config, m: vec![0.0; size], v: vec![0.0; size], t: 0 }
    }

    pub fn steps(&self) -> u64 {
        self.t
    }

    pub fn step(&mut self, params: &mut [f64], grads: &[f64]) -> Result<()> {
        self.step_slices(vec![params], grads)
    }

    /// One update over parameters split across several buffers, in order.
    pub fn step_slices(&mut self, params: Vec<&mut [f64]>, grads: &[f64]) -> Result<()> {
        let total: usize = params.iter().map(|p| p.len()).sum();
        check_dim(self.m.len(), total)?;
        check_dim(total, grads.len())?;
        self.t += 1;
        let AdamConfig { lr, beta1, beta2, eps } = self.config;
        let c1 = 1.0 - beta1.powi(self.t as i32);
        let c2 = 1.0 - beta2.powi(self.t as i32);
        let mut i = 0;
        for slice in params {
            for p in slice.iter_mut() {
                let g = grads[i];
                self.m[i] = beta1 * self.m[i] + (1.0 - beta1) * g;
                self.v[i] = beta2 * self.v[i] + (1.0 - beta2) * g * g;
                let mhat = self.m[i] / c1;
                let vhat = self.v[i] / c2;
                *p -= lr * mhat / (vhat.sqrt() + eps);
                i += 1;
            }
        }
        Ok(())
    }
}

/// Functional form of one Adam update.
pub fn adam_step(state: &mut AdamState, params: &mut [f64], grads: &[f64]) -> Result<()> {
    state.step(params, grads)
}
