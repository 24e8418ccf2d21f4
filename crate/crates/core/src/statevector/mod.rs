//! Dense statevector simulator. Qubit 0 is the least significant bit of
//! the basis index.

mod circuit;
mod gradient;

pub use circuit::{Circuit, Gate, RotationGate};
pub use gradient::{adjoint_gradient, adjoint_gradient_observable, parameter_shift_gradient};

use num_complex::Complex64;
use rand_distr::{Binomial, Distribution};

use crate::error::{check_dim, Error, Result};
use crate::pauli::{CliffordGate, Pauli, PauliString};
use crate::rng;

pub const DEFAULT_MAX_QUBITS: usize = 16;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

#[derive(Clone, Debug, PartialEq)]
pub struct StateVector {
    n: usize,
    amps: Vec<Complex64>,
}

/// Precomputed action `P|k> = f(k) |k ^ x>` of a Pauli string on basis states.
#[derive(Clone, Copy, Debug)]
pub(crate) struct PauliAction {
    x: usize,
    z: usize,
    base: Complex64,
}

impl PauliAction {
    pub(crate) fn new(p: &PauliString) -> Result<Self> {
        let (x, z) = p.masks().ok_or(Error::QubitBudget {
            requested: p.num_qubits(),
            max: 64,
        })?;
        let n_y = (x & z).count_ones() as i64;
        let base = p.phase().to_complex() * crate::pauli::Phase::from_power(n_y).to_complex();
        Ok(PauliAction { x: x as usize, z: z as usize, base })
    }

    #[inline]
    fn factor(&self, k: usize) -> Complex64 {
        if (k & self.z).count_ones() % 2 == 0 {
            self.base
        } else {
            -self.base
        }
    }
}

impl StateVector {
    /// `|0...0>` on `n` qubits, subject to [`DEFAULT_MAX_QUBITS`].
    pub fn zero(n: usize) -> Result<Self> {
        Self::zero_with_budget(n, DEFAULT_MAX_QUBITS)
    }

    pub fn zero_with_budget(n: usize, max_qubits: usize) -> Result<Self> {
        if n > max_qubits || n >= usize::BITS as usize - 1 {
            return Err(Error::QubitBudget { requested: n, max: max_qubits });
        }
        let mut amps = vec![ZERO; 1 << n];
        amps[0] = ONE;
        Ok(StateVector { n, amps })
    }

    /// Wraps raw amplitudes; the length must be a power of two and the norm 1.
    pub fn from_amplitudes(amps: Vec<Complex64>) -> Result<Self> {
        let len = amps.len();
        if len == 0 || !len.is_power_of_two() {
            return Err(Error::invalid(format!("amplitude count {len} is not a power of two")));
        }
        let s = StateVector { n: len.trailing_zeros() as usize, amps };
        if (s.norm_sqr() - 1.0).abs() > 1e-10 {
            return Err(Error::Numeric(format!("state norm {} is not 1", s.norm_sqr())));
        }
        Ok(s)
    }

    pub fn num_qubits(&self) -> usize {
        self.n
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    pub fn inner(&self, other: &StateVector) -> Result<Complex64> {
        check_dim(self.n, other.n)?;
        Ok(self.amps.iter().zip(&other.amps).map(|(a, b)| a.conj() * b).sum())
    }

    pub fn apply_clifford(&mut self, gate: &CliffordGate) -> Result<()> {
        gate.validate(self.n)?;
        match *gate {
            CliffordGate::H(q) => self.apply_h(q),
            CliffordGate::Cnot { control, target } => {
                let (c, t) = (1usize << control, 1usize << target);
                for k in 0..self.amps.len() {
                    if k & c != 0 && k & t == 0 {
                        self.amps.swap(k, k | t);
                    }
                }
            }
            CliffordGate::Cz { a, b } => {
                let m = (1usize << a) | (1usize << b);
                for (k, amp) in self.amps.iter_mut().enumerate() {
                    if k & m == m {
                        *amp = -*amp;
                    }
                }
            }
        }
        Ok(())
    }

    fn apply_h(&mut self, q: usize) {
        let bit = 1usize << q;
        let r = std::f64::consts::FRAC_1_SQRT_2;
        for k in 0..self.amps.len() {
            if k & bit == 0 {
                let (a, b) = (self.amps[k], self.amps[k | bit]);
                self.amps[k] = (a + b) * r;
                self.amps[k | bit] = (a - b) * r;
            }
        }
    }

    fn apply_sdg(&mut self, q: usize) {
        let bit = 1usize << q;
        for (k, amp) in self.amps.iter_mut().enumerate() {
            if k & bit != 0 {
                *amp *= Complex64::new(0.0, -1.0);
            }
        }
    }

    /// `exp(-i θ P / 2)`; `P` must carry a real phase.
    pub fn apply_rotation(&mut self, generator: &PauliString, angle: f64) -> Result<()> {
        check_dim(self.n, generator.num_qubits())?;
        if !generator.phase().is_real() {
            return Err(Error::invalid("rotation generator must be Hermitian"));
        }
        let act = PauliAction::new(generator)?;
        self.rotate(&act, angle);
        Ok(())
    }

    pub(crate) fn rotate(&mut self, act: &PauliAction, angle: f64) {
        let (s, c) = (angle / 2.0).sin_cos();
        let mis = Complex64::new(0.0, -s);
        if act.x == 0 {
            for (k, amp) in self.amps.iter_mut().enumerate() {
                *amp *= c + mis * act.factor(k);
            }
            return;
        }
        let hi = 1usize << (usize::BITS - 1 - act.x.leading_zeros());
        for k in 0..self.amps.len() {
            if k & hi != 0 {
                continue;
            }
            let j = k ^ act.x;
            let (a, b) = (self.amps[k], self.amps[j]);
            self.amps[k] = a * c + mis * act.factor(j) * b;
            self.amps[j] = b * c + mis * act.factor(k) * a;
        }
    }

    /// Replaces the state by `P|ψ>`.
    pub fn apply_pauli(&mut self, p: &PauliString) -> Result<()> {
        check_dim(self.n, p.num_qubits())?;
        let act = PauliAction::new(p)?;
        let old = self.amps.clone();
        for (k, a) in old.into_iter().enumerate() {
            self.amps[k ^ act.x] = act.factor(k) * a;
        }
        Ok(())
    }

    /// `<λ|P|ψ>` for two states of equal size.
    pub(crate) fn matrix_element(lambda: &[Complex64], act: &PauliAction, psi: &[Complex64]) -> Complex64 {
        let mut acc = ZERO;
        for (k, a) in psi.iter().enumerate() {
            acc += lambda[k ^ act.x].conj() * act.factor(k) * a;
        }
        acc
    }

    /// Adds `w·P|ψ>` into `out`.
    pub(crate) fn accumulate_pauli(&self, act: &PauliAction, w: f64, out: &mut [Complex64]) {
        for (k, a) in self.amps.iter().enumerate() {
            out[k ^ act.x] += act.factor(k) * a * w;
        }
    }
}

fn real_sign(p: &PauliString) -> Result<f64> {
    p.phase()
        .sign()
        .ok_or_else(|| Error::invalid(format!("observable {p} has an imaginary phase")))
}

/// `<ψ|P|ψ>` for a Hermitian Pauli string.
pub fn expectation(s: &StateVector, p: &PauliString) -> Result<f64> {
    check_dim(s.n, p.num_qubits())?;
    real_sign(p)?;
    let act = PauliAction::new(p)?;
    Ok(StateVector::matrix_element(&s.amps, &act, &s.amps).re)
}

/// Empirical mean of `shots` projective measurements of `p`, seeded.
pub fn sample_expectation(s: &StateVector, p: &PauliString, shots: u64, seed: u64) -> Result<f64> {
    let mut r = rng::stream(seed, 0);
    sample_expectation_with(s, p, shots, &mut r)
}

/// As [`sample_expectation`], drawing from a caller-owned generator.
///
/// The state is rotated so that `p` becomes a Z-string, the parity
/// distribution is read off the Born probabilities, and the number of
/// `+1` outcomes is drawn as one binomial variate.
pub fn sample_expectation_with(
    s: &StateVector,
    p: &PauliString,
    shots: u64,
    r: &mut rng::Rng,
) -> Result<f64> {
    if shots == 0 {
        return Err(Error::invalid("shot count must be at least 1"));
    }
    check_dim(s.n, p.num_qubits())?;
    let sign = real_sign(p)?;
    let mut rotated = s.clone();
    let mut mask = 0usize;
    for q in p.support() {
        match p.get(q) {
            Pauli::X => rotated.apply_h(q),
            Pauli::Y => {
                rotated.apply_sdg(q);
                rotated.apply_h(q);
            }
            _ => {}
        }
        mask |= 1 << q;
    }
    let p_even: f64 = rotated
        .amps
        .iter()
        .enumerate()
        .filter(|(k, _)| (k & mask).count_ones() % 2 == 0)
        .map(|(_, a)| a.norm_sqr())
        .sum();
    let p_even = p_even.clamp(0.0, 1.0);
    let dist = Binomial::new(shots, p_even).map_err(|e| Error::Numeric(e.to_string()))?;
    let plus = dist.sample(r) as f64;
    let n = shots as f64;
    Ok(sign * (2.0 * plus - n) / n)
}

/// Apply every gate of `c` to `|0...0>`.
pub fn run(c: &Circuit, angles: &[f64]) -> Result<StateVector> {
    let mut s = StateVector::zero(c.num_qubits())?;
    evolve(&mut s, c, angles)?;
    Ok(s)
}

/// Apply the gates of `c` to an existing state.
pub fn evolve(s: &mut StateVector, c: &Circuit, angles: &[f64]) -> Result<()> {
    check_dim(c.angle_count(), angles.len())?;
    check_dim(c.num_qubits(), s.n)?;
    for gate in c.gates() {
        match gate {
            Gate::Clifford(g) => s.apply_clifford(g)?,
            Gate::Rotation(r) => {
                let act = PauliAction::new(r.generator())?;
                s.rotate(&act, angles[r.slot()]);
            }
        }
    }
    Ok(())
}

/// Real linear combination of Pauli strings.
#[derive(Clone, Debug, PartialEq)]
pub struct Observable {
    terms: Vec<(f64, PauliString)>,
}

impl Observable {
    pub fn new(terms: Vec<(f64, PauliString)>) -> Result<Self> {
        let n = terms
            .first()
            .map(|(_, p)| p.num_qubits())
            .ok_or_else(|| Error::invalid("observable needs at least one term"))?;
        for (_, p) in &terms {
            check_dim(n, p.num_qubits())?;
            real_sign(p)?;
        }
        Ok(Observable { terms })
    }

    pub fn num_qubits(&self) -> usize {
        self.terms[0].1.num_qubits()
    }

    pub fn terms(&self) -> &[(f64, PauliString)] {
        &self.terms
    }

    pub fn expectation(&self, s: &StateVector) -> Result<f64> {
        self.terms
            .iter()
            .map(|(w, p)| expectation(s, p).map(|e| w * e))
            .sum()
    }

    /// `O|ψ>`.
    pub fn apply(&self, s: &StateVector) -> Result<StateVector> {
        check_dim(self.num_qubits(), s.n)?;
        let mut out = vec![ZERO; s.amps.len()];
        for (w, p) in &self.terms {
            s.accumulate_pauli(&PauliAction::new(p)?, *w, &mut out);
        }
        Ok(StateVector { n: s.n, amps: out })
    }
}

impl From<PauliString> for Observable {
    fn from(p: PauliString) -> Self {
        Observable { terms: vec![(1.0, p)] }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn ps(s: &str) -> PauliString {
        s.parse().unwrap()
    }

    fn ry(theta: f64) -> (Circuit, Vec<f64>) {
        let mut c = Circuit::new(1);
        c.push_axis_rotation(0, Pauli::Y).unwrap();
        (c, vec![theta])
    }

    #[test]
    fn empty_circuit_is_zero_state() {
        let s = run(&Circuit::new(1), &[]).unwrap();
        assert_eq!(s.amplitudes(), &[ONE, ZERO]);
    }

    #[test]
    fn ry_bloch_rotation() {
        let (c, a) = ry(std::f64::consts::FRAC_PI_2);
        let s = run(&c, &a).unwrap();
        assert!(expectation(&s, &ps("Z")).unwrap().abs() < 1e-12);
        assert!((expectation(&s, &ps("X")).unwrap() - 1.0).abs() < 1e-12);
        for theta in [0.3, 1.1] {
            let (c, a) = ry(theta);
            let s = run(&c, &a).unwrap();
            assert!((expectation(&s, &ps("Z")).unwrap() - theta.cos()).abs() < 1e-12);
        }
    }

    #[test]
    fn bell_state_stabilizer() {
        let mut c = Circuit::new(2);
        c.push_clifford(CliffordGate::H(0)).unwrap();
        c.push_clifford(CliffordGate::Cnot { control: 0, target: 1 }).unwrap();
        let s = run(&c, &[]).unwrap();
        assert!((expectation(&s, &ps("ZZ")).unwrap() - 1.0).abs() < 1e-12);
        assert!((expectation(&s, &ps("XX")).unwrap() - 1.0).abs() < 1e-12);
        assert!((expectation(&s, &ps("YY")).unwrap() + 1.0).abs() < 1e-12);
        assert!(expectation(&s, &ps("ZI")).unwrap().abs() < 1e-12);
    }

    #[test]
    fn errors() {
        let (c, _) = ry(0.0);
        assert!(matches!(run(&c, &[0.0, 1.0]), Err(Error::Dimension { .. })));
        assert!(matches!(StateVector::zero(17), Err(Error::QubitBudget { .. })));
        let s = StateVector::zero(1).unwrap();
        assert!(expectation(&s, &ps("iZ")).is_err());
        assert!(sample_expectation(&s, &ps("Z"), 0, 1).is_err());
    }

    #[test]
    fn sampling_eigenstate_is_exact() {
        let s = StateVector::zero(2).unwrap();
        for shots in [1, 7, 1000] {
            assert_eq!(sample_expectation(&s, &ps("ZZ"), shots, 3).unwrap(), 1.0);
            assert_eq!(sample_expectation(&s, &ps("-IZ"), shots, 3).unwrap(), -1.0);
        }
    }

    #[test]
    fn sampling_plus_state() {
        let mut s = StateVector::zero(1).unwrap();
        s.apply_clifford(&CliffordGate::H(0)).unwrap();
        let shots = 10_000;
        let v = sample_expectation(&s, &ps("Z"), shots, 11).unwrap();
        assert!(v.abs() < 4.0 / (shots as f64).sqrt());
        assert_eq!(v, sample_expectation(&s, &ps("Z"), shots, 11).unwrap());
        assert_eq!(sample_expectation(&s, &ps("X"), shots, 11).unwrap(), 1.0);
    }

    #[test]
    fn sampling_y_basis() {
        let mut c = Circuit::new(1);
        c.push_axis_rotation(0, Pauli::X).unwrap();
        let s = run(&c, &[-std::f64::consts::FRAC_PI_2]).unwrap();
        assert!((expectation(&s, &ps("Y")).unwrap() - 1.0).abs() < 1e-12);
        assert_eq!(sample_expectation(&s, &ps("Y"), 50, 0).unwrap(), 1.0);
    }

    #[test]
    fn sampling_mean_converges() {
        let mut c = Circuit::new(2);
        c.push_axis_rotation(0, Pauli::Y).unwrap();
        c.push_axis_rotation(1, Pauli::X).unwrap();
        c.push_clifford(CliffordGate::Cnot { control: 0, target: 1 }).unwrap();
        let s = run(&c, &[0.7, 1.9]).unwrap();
        let p = ps("ZY");
        let exact = expectation(&s, &p).unwrap();
        let shots = 256u64;
        let draws: Vec<f64> = (0..100)
            .map(|seed| sample_expectation(&s, &p, shots, seed).unwrap())
            .collect();
        let mean = draws.iter().sum::<f64>() / 100.0;
        let bound = 2.0 / (100.0 * shots as f64).sqrt() * 1.1;
        assert!((mean - exact).abs() < 3.0 * bound, "{mean} vs {exact}");
    }

    #[test]
    fn observable_sums_terms() {
        let (c, a) = ry(0.4);
        let s = run(&c, &a).unwrap();
        let o = Observable::new(vec![(2.0, ps("Z")), (-0.5, ps("X"))]).unwrap();
        let want = 2.0 * 0.4f64.cos() - 0.5 * 0.4f64.sin();
        assert!((o.expectation(&s).unwrap() - want).abs() < 1e-12);
        let os = o.apply(&s).unwrap();
        assert!((s.inner(&os).unwrap().re - want).abs() < 1e-12);
    }

    fn random_circuit(n: usize, len: usize, seed: u64) -> (Circuit, Vec<f64>) {
        use rand::Rng as _;
        let mut r = rng::stream(seed, 0);
        let mut c = Circuit::new(n);
        for _ in 0..len {
            let q = r.random_range(0..n);
            match r.random_range(0..5) {
                0 if n > 1 => {
                    let t = (q + r.random_range(1..n)) % n;
                    c.push_clifford(CliffordGate::Cnot { control: q, target: t }).unwrap();
                }
                1 if n > 1 => {
                    let t = (q + r.random_range(1..n)) % n;
                    c.push_clifford(CliffordGate::Cz { a: q, b: t }).unwrap();
                }
                2 => c.push_clifford(CliffordGate::H(q)).unwrap(),
                _ => {
                    let letters: Vec<Pauli> = (0..n)
                        .map(|_| [Pauli::I, Pauli::X, Pauli::Y, Pauli::Z][r.random_range(0..4)])
                        .collect();
                    let mut g = PauliString::from_letters(&letters);
                    if g.is_identity() {
                        g.set(q, Pauli::Y).unwrap();
                    }
                    c.push_rotation(g).unwrap();
                }
            }
        }
        let angles = (0..c.angle_count()).map(|_| r.random_range(-3.0..3.0)).collect();
        (c, angles)
    }

    #[test]
    fn norm_preserved_over_many_gates() {
        let (c, a) = random_circuit(5, 1200, 9);
        let s = run(&c, &a).unwrap();
        assert!((s.norm_sqr() - 1.0).abs() < 1e-10);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn zero_angle_rotation_is_identity(seed in any::<u64>(), q in 0usize..3) {
            let (c, a) = random_circuit(3, 12, seed);
            let mut c2 = c.clone();
            c2.push_axis_rotation(q, Pauli::X).unwrap();
            let mut a2 = a.clone();
            a2.push(0.0);
            let p = ps("ZXY");
            let e1 = expectation(&run(&c, &a).unwrap(), &p).unwrap();
            let e2 = expectation(&run(&c2, &a2).unwrap(), &p).unwrap();
            prop_assert!((e1 - e2).abs() < 1e-12);
        }

        #[test]
        fn expectations_stay_in_range(seed in any::<u64>()) {
            let (c, a) = random_circuit(4, 20, seed);
            let s = run(&c, &a).unwrap();
            prop_assert!((s.norm_sqr() - 1.0).abs() < 1e-10);
            for p in ["ZIII", "XXYZ", "-IYIX"] {
                let e = expectation(&s, &ps(p)).unwrap();
                prop_assert!((-1.0 - 1e-12..=1.0 + 1e-12).contains(&e));
            }
        }
    }
}
