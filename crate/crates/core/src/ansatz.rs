//! Circuit layouts and the style-based generator built on them.

use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use rand::Rng as _;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::pauli::{CliffordGate, Pauli, PauliString};
use crate::rng;
use crate::statevector::{self, adjoint_gradient_observable, Circuit, Observable, StateVector};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum AnsatzKind {
    Circuit1,
    Circuit2,
    Circuit3,
    EfficientSu2Pairwise,
    EfficientSu2Circular,
}

impl AnsatzKind {
    pub const ALL: [AnsatzKind; 5] = [
        AnsatzKind::Circuit1,
        AnsatzKind::Circuit2,
        AnsatzKind::Circuit3,
        AnsatzKind::EfficientSu2Pairwise,
        AnsatzKind::EfficientSu2Circular,
    ];

    fn name(self) -> &'static str {
        match self {
            AnsatzKind::Circuit1 => "circuit1",
            AnsatzKind::Circuit2 => "circuit2",
            AnsatzKind::Circuit3 => "circuit3",
            AnsatzKind::EfficientSu2Pairwise => "esu2-pairwise",
            AnsatzKind::EfficientSu2Circular => "esu2-circular",
        }
    }
}

impl fmt::Display for AnsatzKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for AnsatzKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let key = s.trim().to_ascii_lowercase().replace('_', "-");
        AnsatzKind::ALL
            .into_iter()
            .find(|k| k.name() == key)
            .ok_or_else(|| Error::Parse(format!("unknown ansatz {s:?}")))
    }
}

/// The leading pair of orthogonal rotation layers, when the layout has one.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BaseBlock {
    /// Axis of the first rotation layer.
    pub first: Pauli,
    /// Axis of the second rotation layer.
    pub second: Pauli,
    /// The block occupies the first `gates` gates of the circuit.
    pub gates: usize,
}

/// A built circuit together with its angle grouping.
#[derive(Clone, Debug, PartialEq)]
pub struct Ansatz {
    pub kind: AnsatzKind,
    pub n: usize,
    pub depth: usize,
    pub circuit: Circuit,
    /// Angles per group; group 0 is the base block if there is one, then one
    /// group per layer. Slots are allocated contiguously in group order.
    pub group_sizes: Vec<usize>,
    pub base: Option<BaseBlock>,
}

fn rotation_layer(c: &mut Circuit, axis: Pauli) -> Result<()> {
    for q in 0..c.num_qubits() {
        c.push_axis_rotation(q, axis)?;
    }
    Ok(())
}

fn su4_block(c: &mut Circuit, a: usize, b: usize) -> Result<()> {
    let euler = |c: &mut Circuit, q: usize| -> Result<()> {
        c.push_axis_rotation(q, Pauli::Z)?;
        c.push_axis_rotation(q, Pauli::Y)?;
        c.push_axis_rotation(q, Pauli::Z)?;
        Ok(())
    };
    let n = c.num_qubits();
    euler(c, a)?;
    euler(c, b)?;
    for p in [Pauli::X, Pauli::Y, Pauli::Z] {
        let mut g = PauliString::identity(n);
        g.set(a, p)?;
        g.set(b, p)?;
        c.push_rotation(g)?;
    }
    euler(c, a)?;
    euler(c, b)?;
    Ok(())
}

/// Builds the gate layout for `kind` on `n` qubits with `depth` layers.
pub fn build_ansatz(kind: AnsatzKind, n: usize, depth: usize) -> Result<Ansatz> {
    if n < 2 {
        return Err(Error::Unsupported(format!("{kind} needs at least 2 qubits, got {n}")));
    }
    let esu2 = matches!(kind, AnsatzKind::EfficientSu2Pairwise | AnsatzKind::EfficientSu2Circular);
    if depth == 0 && !esu2 {
        return Err(Error::Unsupported(format!("{kind} needs depth >= 1")));
    }
    if kind == AnsatzKind::Circuit3 && n % 2 != 0 {
        return Err(Error::Unsupported(format!("circuit3 needs an even qubit count, got {n}")));
    }
    let mut c = Circuit::new(n);
    let mut group_sizes = Vec::with_capacity(depth + 1);
    let mut mark = 0usize;
    let mut close_group = |c: &Circuit, sizes: &mut Vec<usize>| {
        sizes.push(c.angle_count() - mark);
        mark = c.angle_count();
    };

    let base = match kind {
        AnsatzKind::Circuit1 | AnsatzKind::EfficientSu2Pairwise | AnsatzKind::EfficientSu2Circular => {
            rotation_layer(&mut c, Pauli::Y)?;
            rotation_layer(&mut c, Pauli::Z)?;
            Some(BaseBlock { first: Pauli::Y, second: Pauli::Z, gates: 2 * n })
        }
        AnsatzKind::Circuit2 => {
            rotation_layer(&mut c, Pauli::X)?;
            rotation_layer(&mut c, Pauli::Z)?;
            Some(BaseBlock { first: Pauli::X, second: Pauli::Z, gates: 2 * n })
        }
        AnsatzKind::Circuit3 => None,
    };
    if base.is_some() {
        close_group(&c, &mut group_sizes);
    }

    for layer in 0..depth {
        match kind {
            AnsatzKind::Circuit1 => {
                rotation_layer(&mut c, Pauli::Y)?;
                rotation_layer(&mut c, Pauli::Z)?;
                for q in 0..n - 1 {
                    c.push_clifford(CliffordGate::Cz { a: q, b: q + 1 })?;
                }
            }
            AnsatzKind::Circuit2 => {
                rotation_layer(&mut c, Pauli::Y)?;
                for q in 0..n - 1 {
                    c.push_clifford(CliffordGate::Cnot { control: q, target: q + 1 })?;
                }
            }
            AnsatzKind::Circuit3 => {
                let start = layer % 2;
                for k in 0..n / 2 {
                    let a = (start + 2 * k) % n;
                    su4_block(&mut c, a, (a + 1) % n)?;
                }
            }
            AnsatzKind::EfficientSu2Pairwise | AnsatzKind::EfficientSu2Circular => {
                if kind == AnsatzKind::EfficientSu2Pairwise {
                    for q in (0..n - 1).step_by(2) {
                        c.push_clifford(CliffordGate::Cnot { control: q, target: q + 1 })?;
                    }
                } else {
                    for q in 0..n {
                        let t = (q + 1) % n;
                        // n = 2 would repeat the same pair twice
                        if n == 2 && q == 1 {
                            break;
                        }
                        c.push_clifford(CliffordGate::Cnot { control: q, target: t })?;
                    }
                }
                rotation_layer(&mut c, Pauli::Y)?;
                rotation_layer(&mut c, Pauli::Z)?;
            }
        }
        close_group(&c, &mut group_sizes);
    }
    Ok(Ansatz { kind, n, depth, circuit: c, group_sizes, base })
}

pub fn build_circuit(kind: AnsatzKind, n: usize, depth: usize) -> Result<Circuit> {
    Ok(build_ansatz(kind, n, depth)?.circuit)
}

/// Readout mode for generated features.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Shots {
    Analytic,
    Finite(u64),
}

impl Shots {
    /// `0` is the analytic (infinite-shot) limit.
    pub fn from_count(count: u64) -> Self {
        if count == 0 {
            Shots::Analytic
        } else {
            Shots::Finite(count)
        }
    }

    pub fn count(self) -> u64 {
        match self {
            Shots::Analytic => 0,
            Shots::Finite(s) => s,
        }
    }
}

/// Static description of a style generator.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct StyleConfig {
    pub kind: AnsatzKind,
    pub n: usize,
    pub depth: usize,
    pub latent_dim: usize,
    pub rescale: bool,
}

/// Quantum generator whose angles are affine in the latent noise.
///
/// Parameters are stored flat: for each angle group, `W` (rows = angles,
/// cols = latent dim, row-major) followed by `b`.
#[derive(Clone, Debug, PartialEq)]
pub struct StyleGenerator {
    config: StyleConfig,
    ansatz: Ansatz,
    params: Vec<f64>,
    readout: Vec<PauliString>,
}

impl StyleGenerator {
    /// Generator with all parameters zero.
    pub fn new(config: StyleConfig) -> Result<Self> {
        if config.latent_dim == 0 {
            return Err(Error::invalid("latent dimension must be positive"));
        }
        let ansatz = build_ansatz(config.kind, config.n, config.depth)?;
        let count = ansatz.circuit.angle_count() * (config.latent_dim + 1);
        let n = config.n;
        let mut readout = Vec::with_capacity(2 * n);
        for axis in [Pauli::X, Pauli::Z] {
            for q in 0..n {
                readout.push(PauliString::single(n, q, axis)?);
            }
        }
        Ok(StyleGenerator { config, ansatz, params: vec![0.0; count], readout })
    }

    pub fn from_params(config: StyleConfig, params: Vec<f64>) -> Result<Self> {
        let mut g = Self::new(config)?;
        g.set_params(&params)?;
        Ok(g)
    }

    /// Draws every `W` and `b` entry from `U[-delta, delta]`.
    pub fn init_uniform(&mut self, delta: f64, seed: u64) {
        let mut r = rng::stream(seed, 0);
        for p in &mut self.params {
            *p = if delta > 0.0 { r.random_range(-delta..=delta) } else { 0.0 };
        }
    }

    pub fn config(&self) -> &StyleConfig {
        &self.config
    }

    pub fn ansatz(&self) -> &Ansatz {
        &self.ansatz
    }

    pub fn circuit(&self) -> &Circuit {
        &self.ansatz.circuit
    }

    pub fn feature_dim(&self) -> usize {
        2 * self.config.n
    }

    pub fn param_count(&self) -> usize {
        self.params.len()
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    pub fn set_params(&mut self, params: &[f64]) -> Result<()> {
        check_dim(self.params.len(), params.len())?;
        self.params.copy_from_slice(params);
        Ok(())
    }

    /// Range of flat parameter indices belonging to angle group `g`.
    pub fn group_param_range(&self, g: usize) -> std::ops::Range<usize> {
        let d1 = self.config.latent_dim + 1;
        let start: usize = self.ansatz.group_sizes[..g].iter().sum::<usize>() * d1;
        start..start + self.ansatz.group_sizes[g] * d1
    }

    fn scale(&self) -> f64 {
        if self.config.rescale {
            1.0 / (self.config.latent_dim as f64).sqrt()
        } else {
            1.0
        }
    }

    /// `θ_ℓ = s·W_ℓ z + b_ℓ` over all groups, `s = 1/√D_z` when rescaling.
    pub fn embed_angles(&self, z: &[f64]) -> Result<Vec<f64>> {
        let dz = self.config.latent_dim;
        check_dim(dz, z.len())?;
        let s = self.scale();
        let mut theta = Vec::with_capacity(self.ansatz.circuit.angle_count());
        let mut off = 0;
        for &k in &self.ansatz.group_sizes {
            let (w, b) = self.params[off..off + k * (dz + 1)].split_at(k * dz);
            for row in 0..k {
                let dot: f64 = w[row * dz..(row + 1) * dz].iter().zip(z).map(|(a, b)| a * b).sum();
                theta.push(s * dot + b[row]);
            }
            off += k * (dz + 1);
        }
        Ok(theta)
    }

    pub fn state(&self, z: &[f64]) -> Result<StateVector> {
        statevector::run(&self.ansatz.circuit, &self.embed_angles(z)?)
    }

    /// `(<X_1>..<X_n>, <Z_1>..<Z_n>)`; finite shots draw one batch per component.
    pub fn generate_features(&self, z: &[f64], shots: Shots, seed: u64) -> Result<Vec<f64>> {
        let s = self.state(z)?;
        self.readout
            .iter()
            .enumerate()
            .map(|(c, p)| match shots {
                Shots::Analytic => statevector::expectation(&s, p),
                Shots::Finite(k) => {
                    let mut r = rng::stream(seed, c as u64);
                    statevector::sample_expectation_with(&s, p, k, &mut r)
                }
            })
            .collect()
    }

    /// Features for many latent vectors; sample `i` uses seed stream `i`.
    pub fn generate_batch(&self, zs: &[Vec<f64>], shots: Shots, seed: u64) -> Result<Vec<Vec<f64>>> {
        zs.par_iter()
            .enumerate()
            .map(|(i, z)| self.generate_features(z, shots, rng::derive(seed, i as u64)))
            .collect()
    }

    /// Maps a gradient over angles to a gradient over the flat parameters.
    fn chain_angles(&self, z: &[f64], dtheta: &[f64], out: &mut [f64]) {
        let dz = self.config.latent_dim;
        let s = self.scale();
        let (mut off, mut a) = (0, 0);
        for &k in &self.ansatz.group_sizes {
            for row in 0..k {
                let g = dtheta[a + row];
                for (j, zj) in z.iter().enumerate() {
                    out[off + row * dz + j] += g * s * zj;
                }
                out[off + k * dz + row] += g;
            }
            off += k * (dz + 1);
            a += k;
        }
    }

    /// Exact `2n × N_Θ` Jacobian of the analytic features.
    pub fn feature_jacobian(&self, z: &[f64]) -> Result<DMatrix<f64>> {
        let theta = self.embed_angles(z)?;
        let mut jac = DMatrix::zeros(self.feature_dim(), self.param_count());
        for (c, p) in self.readout.iter().enumerate() {
            let dtheta = adjoint_gradient_observable(&self.ansatz.circuit, &theta, &Observable::from(p.clone()))?;
            let mut row = vec![0.0; self.param_count()];
            self.chain_angles(z, &dtheta, &mut row);
            for (j, v) in row.into_iter().enumerate() {
                jac[(c, j)] = v;
            }
        }
        Ok(jac)
    }

    /// `upstreamᵀ · J` in a single adjoint sweep.
    pub fn feature_vjp(&self, z: &[f64], upstream: &[f64]) -> Result<Vec<f64>> {
        check_dim(self.feature_dim(), upstream.len())?;
        let theta = self.embed_angles(z)?;
        let terms = self
            .readout
            .iter()
            .zip(upstream)
            .map(|(p, &u)| (u, p.clone()))
            .collect();
        let o = Observable::new(terms)?;
        let dtheta = adjoint_gradient_observable(&self.ansatz.circuit, &theta, &o)?;
        let mut out = vec![0.0; self.param_count()];
        self.chain_angles(z, &dtheta, &mut out);
        Ok(out)
    }
}
