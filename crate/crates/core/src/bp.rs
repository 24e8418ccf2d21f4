//! Barren-plateau analysis: Gaussian moments, anticommutation counting,
//! closed-form expectations and variance bounds, Monte-Carlo estimators.

use std::fmt;

use rand::Rng as _;
use rand_distr::{Distribution, Normal, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::ansatz::{build_ansatz, Ansatz, AnsatzKind, StyleConfig, StyleGenerator};
use crate::error::{check_dim, Error, Result};
use crate::neural::{Activation, Mlp};
use crate::pauli::{clifford_conjugate, commutes, Pauli, PauliString};
use crate::rng;
use crate::statevector::{self, Gate, Observable};
use crate::stats::{mean_column_variance, variance_estimate, VarianceEstimate};

/// `E[cos ω]` for `ω ~ N(0, σ²)`.
pub fn gaussian_cos_moment(sigma: f64) -> f64 {
    (-0.5 * sigma * sigma).exp()
}

/// `E[sin² ω]` for `ω ~ N(0, σ²)`.
pub fn gaussian_sin2_moment(sigma: f64) -> f64 {
    -(-2.0 * sigma * sigma).exp_m1() / 2.0
}

/// `E[cos² ω]`; adds to [`gaussian_sin2_moment`] to exactly one.
pub fn gaussian_cos2_moment(sigma: f64) -> f64 {
    1.0 - gaussian_sin2_moment(sigma)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitDistribution {
    /// `U(-width, width)`
    Uniform,
    /// `N(0, width²)`
    Normal,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitScaling {
    Fixed,
    /// Width divided by the qubit count.
    InverseN,
}

/// Distribution of i.i.d. circuit angles.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct InitSpec {
    pub distribution: InitDistribution,
    pub width: f64,
    pub scaling: InitScaling,
}

impl InitSpec {
    pub fn normal(sigma: f64) -> Result<Self> {
        Self::new(InitDistribution::Normal, sigma, InitScaling::Fixed)
    }

    pub fn uniform(delta: f64) -> Result<Self> {
        Self::new(InitDistribution::Uniform, delta, InitScaling::Fixed)
    }

    pub fn new(distribution: InitDistribution, width: f64, scaling: InitScaling) -> Result<Self> {
        if !(width > 0.0 && width.is_finite()) {
            return Err(Error::invalid(format!("init width must be positive and finite, got {width}")));
        }
        Ok(InitSpec { distribution, width, scaling })
    }

    pub fn inverse_n(self) -> Self {
        InitSpec { scaling: InitScaling::InverseN, ..self }
    }

    /// Effective width on `n` qubits.
    pub fn width_for(&self, n: usize) -> f64 {
        match self.scaling {
            InitScaling::Fixed => self.width,
            InitScaling::InverseN => self.width / n as f64,
        }
    }

    /// `E[cos ω]` under this distribution on `n` qubits.
    pub fn cos_moment(&self, n: usize) -> f64 {
        let w = self.width_for(n);
        match self.distribution {
            InitDistribution::Normal => gaussian_cos_moment(w),
            InitDistribution::Uniform => w.sin() / w,
        }
    }

    pub fn sample_angles(&self, n: usize, count: usize, r: &mut rng::Rng) -> Vec<f64> {
        let w = self.width_for(n);
        match self.distribution {
            InitDistribution::Normal => (0..count)
                .map(|_| w * Distribution::<f64>::sample(&StandardNormal, r))
                .collect::<Vec<f64>>(),
            InitDistribution::Uniform => (0..count).map(|_| r.random_range(-w..=w)).collect(),
        }
    }
}

impl fmt::Display for InitSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let d = match self.distribution {
            InitDistribution::Uniform => "uniform",
            InitDistribution::Normal => "normal",
        };
        match self.scaling {
            InitScaling::Fixed => write!(f, "{d}({})", self.width),
            InitScaling::InverseN => write!(f, "{d}({}/n)", self.width),
        }
    }
}

/// Product state given by one Bloch vector `(x, y, z)` per qubit.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProductStateSpec {
    bloch: Vec<[f64; 3]>,
}

impl ProductStateSpec {
    pub fn zero(n: usize) -> Self {
        ProductStateSpec { bloch: vec![[0.0, 0.0, 1.0]; n] }
    }

    pub fn new(bloch: Vec<[f64; 3]>) -> Result<Self> {
        for (q, v) in bloch.iter().enumerate() {
            let norm = v.iter().map(|a| a * a).sum::<f64>().sqrt();
            if !(norm <= 1.0 + 1e-12) {
                return Err(Error::invalid(format!("Bloch vector of qubit {q} has norm {norm} > 1")));
            }
        }
        Ok(ProductStateSpec { bloch })
    }

    pub fn num_qubits(&self) -> usize {
        self.bloch.len()
    }

    pub fn bloch(&self) -> &[[f64; 3]] {
        &self.bloch
    }

    /// `Tr(ρ P)` for a Hermitian Pauli string.
    pub fn coefficient(&self, p: &PauliString) -> Result<f64> {
        check_dim(self.num_qubits(), p.num_qubits())?;
        let sign = p
            .phase()
            .sign()
            .ok_or_else(|| Error::invalid(format!("observable {p} is not Hermitian")))?;
        let mut c = sign;
        for (q, v) in self.bloch.iter().enumerate() {
            c *= match p.get(q) {
                Pauli::I => 1.0,
                Pauli::X => v[0],
                Pauli::Y => v[1],
                Pauli::Z => v[2],
            };
        }
        Ok(c)
    }
}

/// Result of walking an observable backwards through a circuit.
#[derive(Clone, Debug, PartialEq)]
pub struct AnticommutingCount {
    /// Rotations whose generator anticommutes with the running Pauli.
    pub count: usize,
    /// The observable conjugated back to the walk's stopping point.
    pub pauli: PauliString,
}

/// Walks `c` from the measurement back to its first gate.
pub fn count_anticommuting(c: &statevector::Circuit, observable: &PauliString) -> Result<AnticommutingCount> {
    count_anticommuting_from(c, observable, 0)
}

/// Same walk, stopping once only the first `stop` gates remain.
pub fn count_anticommuting_from(
    c: &statevector::Circuit,
    observable: &PauliString,
    stop: usize,
) -> Result<AnticommutingCount> {
    check_dim(c.num_qubits(), observable.num_qubits())?;
    if stop > c.gates().len() {
        return Err(Error::invalid(format!("stop {stop} past the end of a {}-gate circuit", c.gates().len())));
    }
    let mut p = observable.clone();
    let mut count = 0;
    for gate in c.gates()[stop..].iter().rev() {
        match gate {
            // conjugating by a self-inverse Clifford either way round is the same map
            Gate::Clifford(g) => p = clifford_conjugate(&p, g)?,
            Gate::Rotation(r) => {
                if !commutes(r.generator(), &p)? {
                    count += 1;
                }
            }
        }
    }
    Ok(AnticommutingCount { count, pauli: p })
}

/// Exact `E_θ[Tr(ρ U† P U)]` for i.i.d. symmetric angles.
///
/// Each rotation either commutes with the running Pauli or contributes a
/// `cos`/`sin` split whose `sin` branch averages to zero, so only the
/// all-`cos` path survives.
pub fn expected_loss_analytic(
    ansatz: &Ansatz,
    observable: &PauliString,
    rho: &ProductStateSpec,
    init: &InitSpec,
) -> Result<f64> {
    check_dim(ansatz.n, rho.num_qubits())?;
    if !observable.phase().is_real() {
        return Err(Error::invalid(format!("observable {observable} carries an imaginary phase")));
    }
    let stop = ansatz.base.map_or(0, |b| b.gates);
    let walk = count_anticommuting_from(&ansatz.circuit, observable, stop)?;
    let mut exponent = walk.count;
    if let Some(base) = ansatz.base {
        for q in 0..ansatz.n {
            let eta = walk.pauli.get(q);
            exponent += anticommutes(eta, base.first) as usize + anticommutes(eta, base.second) as usize;
        }
    }
    let m = init.cos_moment(ansatz.n);
    Ok(rho.coefficient(&walk.pauli)? * m.powi(exponent as i32))
}

fn anticommutes(a: Pauli, b: Pauli) -> bool {
    a != Pauli::I && b != Pauli::I && a != b
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundBranch {
    /// Exponent `n²/2 + n`.
    AverageCase,
    /// Exponent `n² + n`.
    ExtremeCase,
    Single,
    /// `2^{-n}` once `σ ≥ 1`.
    Fallback,
}

impl fmt::Display for BoundBranch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BoundBranch::AverageCase => "average",
            BoundBranch::ExtremeCase => "extreme",
            BoundBranch::Single => "single",
            BoundBranch::Fallback => "fallback",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct VarianceBound {
    pub value: f64,
    pub branch: BoundBranch,
    /// Both local-Z branches, `(average, extreme)`, when they were evaluated.
    pub branches: Option<(f64, f64)>,
}

fn check_bound_args(n: usize, sigma: f64) -> Result<()> {
    if n == 0 {
        return Err(Error::invalid("bound needs at least one qubit"));
    }
    if !(sigma >= 0.0 && sigma.is_finite()) {
        return Err(Error::invalid(format!("sigma must be finite and non-negative, got {sigma}")));
    }
    Ok(())
}

fn fallback(n: usize) -> VarianceBound {
    VarianceBound { value: 0.5f64.powi(n as i32), branch: BoundBranch::Fallback, branches: None }
}

/// `min_k [c²A^k − cE^k]` over `k ∈ {n²/2 + n, n² + n}`.
pub fn variance_lower_bound_local_z(n: usize, sigma: f64, c: f64) -> Result<VarianceBound> {
    check_bound_args(n, sigma)?;
    if sigma >= 1.0 {
        return Ok(fallback(n));
    }
    let a = gaussian_cos2_moment(sigma);
    let e = (-sigma * sigma).exp();
    let nf = n as f64;
    let term = |k: f64| c * c * a.powf(k) - c * e.powf(k);
    let avg = term(nf * nf / 2.0 + nf);
    let ext = term(nf * nf + nf);
    let (value, branch) = if avg <= ext { (avg, BoundBranch::AverageCase) } else { (ext, BoundBranch::ExtremeCase) };
    Ok(VarianceBound { value, branch, branches: Some((avg, ext)) })
}

/// `c·A^{n²+n}·S` with `S = E[sin² ω]`.
pub fn variance_lower_bound_local_x(n: usize, sigma: f64, c: f64) -> Result<VarianceBound> {
    check_bound_args(n, sigma)?;
    if sigma >= 1.0 {
        return Ok(fallback(n));
    }
    let nf = n as f64;
    let value = c * gaussian_cos2_moment(sigma).powf(nf * nf + nf) * gaussian_sin2_moment(sigma);
    Ok(VarianceBound { value, branch: BoundBranch::Single, branches: None })
}

/// Loss values `<P>` at `draws` i.i.d. angle vectors; draw `d` uses stream `d`.
pub fn mc_loss_samples(
    ansatz: &Ansatz,
    observable: &Observable,
    init: &InitSpec,
    draws: usize,
    seed: u64,
) -> Result<Vec<f64>> {
    check_dim(ansatz.n, observable.num_qubits())?;
    let count = ansatz.circuit.angle_count();
    (0..draws)
        .into_par_iter()
        .map(|d| {
            let mut r = rng::stream(seed, d as u64);
            let angles = init.sample_angles(ansatz.n, count, &mut r);
            observable.expectation(&statevector::run(&ansatz.circuit, &angles)?)
        })
        .collect()
}

/// Sample mean and variance of the loss with jackknife errors.
pub fn mc_loss_variance(
    ansatz: &Ansatz,
    observable: &Observable,
    init: &InitSpec,
    draws: usize,
    seed: u64,
) -> Result<VarianceEstimate> {
    variance_estimate(&mc_loss_samples(ansatz, observable, init, draws, seed)?)
}

/// How circuit depth grows with the qubit count in a scan.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DepthRule {
    /// `⌊log₂ n⌋`, at least one.
    Log,
    /// `n`
    Poly,
    Constant(usize),
}

impl DepthRule {
    pub fn depth(self, n: usize) -> usize {
        match self {
            DepthRule::Log => (usize::BITS - 1 - n.max(1).leading_zeros()).max(1) as usize,
            DepthRule::Poly => n,
            DepthRule::Constant(d) => d,
        }
    }
}

impl fmt::Display for DepthRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DepthRule::Log => f.write_str("log"),
            DepthRule::Poly => f.write_str("poly"),
            DepthRule::Constant(d) => write!(f, "{d}"),
        }
    }
}

impl std::str::FromStr for DepthRule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "log" => Ok(DepthRule::Log),
            "poly" => Ok(DepthRule::Poly),
            other => other
                .parse()
                .map(DepthRule::Constant)
                .map_err(|_| Error::Parse(format!("depth rule must be log, poly or an integer, got {other:?}"))),
        }
    }
}

/// Setup for the generator-gradient variance experiment.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GradientScanSpec {
    pub kind: AnsatzKind,
    pub n: usize,
    pub depth: usize,
    /// `W, b ~ U(-delta, delta)`.
    pub delta: f64,
    /// Hidden widths of the freshly drawn critic.
    pub critic_hidden: Vec<usize>,
}

impl GradientScanSpec {
    pub fn new(kind: AnsatzKind, n: usize, depth: usize, delta: f64) -> Self {
        GradientScanSpec { kind, n, depth, delta, critic_hidden: vec![100, 50] }
    }

    fn style_config(&self) -> StyleConfig {
        StyleConfig { kind: self.kind, n: self.n, depth: self.depth, latent_dim: self.n, rescale: true }
    }
}

/// One draw: fresh generator parameters, critic and latent vector, returning
/// `∂L_G/∂Θ` restricted to the first angle group.
fn generator_gradient_draw(spec: &GradientScanSpec, template: &StyleGenerator, seed: u64, d: u64) -> Result<Vec<f64>> {
    let mut r = rng::stream(seed, d);
    let mut g = template.clone();
    let delta = spec.delta;
    for p in g.params_mut() {
        *p = r.random_range(-delta..=delta);
    }
    let mut sizes = vec![2 * spec.n];
    sizes.extend(&spec.critic_hidden);
    sizes.push(1);
    let critic = Mlp::lecun(&sizes, Activation::leaky(), Activation::Identity, r.random())?;
    let normal = Normal::new(0.0, 1.0).map_err(|e| Error::Numeric(e.to_string()))?;
    let z: Vec<f64> = (0..spec.n).map(|_| normal.sample(&mut r)).collect();
    let x = g.generate_features(&z, crate::ansatz::Shots::Analytic, 0)?;
    // L_G = -D(G(z))
    let dx: Vec<f64> = critic.input_gradient(&x)?.into_iter().map(|v| -v).collect();
    let grad = g.feature_vjp(&z, &dx)?;
    Ok(grad[g.group_param_range(0)].to_vec())
}

/// Variance of `∂L_G/∂Θ` over generator parameters, critic and latent
/// draws, averaged over first-layer parameters.
pub fn mc_generator_gradient_variance(spec: &GradientScanSpec, draws: usize, seed: u64) -> Result<VarianceEstimate> {
    if !(spec.delta > 0.0 && spec.delta.is_finite()) {
        return Err(Error::invalid(format!("delta must be positive, got {}", spec.delta)));
    }
    let template = StyleGenerator::new(spec.style_config())?;
    let rows: Vec<Vec<f64>> = (0..draws)
        .into_par_iter()
        .map(|d| generator_gradient_draw(spec, &template, seed, d as u64))
        .collect::<Result<_>>()?;
    mean_column_variance(&rows)
}

/// `Z` on qubit 0.
pub fn local_z(n: usize) -> Result<PauliString> {
    PauliString::single(n, 0, Pauli::Z)
}

/// `X` on qubit 0.
pub fn local_x(n: usize) -> Result<PauliString> {
    PauliString::single(n, 0, Pauli::X)
}

pub fn global(n: usize, axis: Pauli) -> PauliString {
    let mut p = PauliString::identity(n);
    for q in 0..n {
        p.set(q, axis).expect("qubit in range");
    }
    p
}

/// One row of a loss-variance scan.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LossScanPoint {
    pub n: usize,
    pub depth: usize,
    pub width: f64,
    pub estimate: VarianceEstimate,
    pub analytic_mean: f64,
    pub bound: Option<VarianceBound>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScanObservable {
    LocalZ,
    LocalX,
    GlobalZ,
    GlobalX,
}

impl ScanObservable {
    pub fn pauli(self, n: usize) -> Result<PauliString> {
        match self {
            ScanObservable::LocalZ => local_z(n),
            ScanObservable::LocalX => local_x(n),
            ScanObservable::GlobalZ => Ok(global(n, Pauli::Z)),
            ScanObservable::GlobalX => Ok(global(n, Pauli::X)),
        }
    }

    /// Closed-form lower bound on the loss variance, when one exists.
    pub fn bound(self, n: usize, sigma: f64) -> Result<Option<VarianceBound>> {
        match self {
            ScanObservable::LocalZ => variance_lower_bound_local_z(n, sigma, 1.0).map(Some),
            ScanObservable::LocalX => variance_lower_bound_local_x(n, sigma, 1.0).map(Some),
            _ => Ok(None),
        }
    }
}

impl std::str::FromStr for ScanObservable {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "local-z" => Ok(ScanObservable::LocalZ),
            "local-x" => Ok(ScanObservable::LocalX),
            "global-z" => Ok(ScanObservable::GlobalZ),
            "global-x" => Ok(ScanObservable::GlobalX),
            _ => Err(Error::Parse(format!("unknown observable {s:?}"))),
        }
    }
}

impl fmt::Display for ScanObservable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ScanObservable::LocalZ => "local-z",
            ScanObservable::LocalX => "local-x",
            ScanObservable::GlobalZ => "global-z",
            ScanObservable::GlobalX => "global-x",
        })
    }
}

/// Loss variance at one `(n, depth)` point on the zero state, with the
/// analytic mean and, for Gaussian inits, the matching bound.
pub fn loss_scan_point(
    kind: AnsatzKind,
    n: usize,
    depth: usize,
    observable: ScanObservable,
    init: &InitSpec,
    draws: usize,
    seed: u64,
) -> Result<LossScanPoint> {
    let ansatz = build_ansatz(kind, n, depth)?;
    let p = observable.pauli(n)?;
    let estimate = mc_loss_variance(&ansatz, &Observable::from(p.clone()), init, draws, seed)?;
    let analytic_mean = expected_loss_analytic(&ansatz, &p, &ProductStateSpec::zero(n), init)?;
    let width = init.width_for(n);
    let bound = match init.distribution {
        InitDistribution::Normal => observable.bound(n, width)?,
        InitDistribution::Uniform => None,
    };
    Ok(LossScanPoint { n, depth, width, estimate, analytic_mean, bound })
}
