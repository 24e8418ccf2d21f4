//! Dense-matrix reference implementations shared by the integration tests.
#![allow(dead_code)]

use lsqgan::pauli::{CliffordGate, Pauli, PauliString, Phase};
use lsqgan::{Circuit, Gate};
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;

pub type CMat = DMatrix<Complex64>;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

pub fn single(p: Pauli) -> CMat {
    let o = c(0.0, 0.0);
    let l = c(1.0, 0.0);
    let i = c(0.0, 1.0);
    match p {
        Pauli::I => CMat::from_row_slice(2, 2, &[l, o, o, l]),
        Pauli::X => CMat::from_row_slice(2, 2, &[o, l, l, o]),
        Pauli::Y => CMat::from_row_slice(2, 2, &[o, -i, i, o]),
        Pauli::Z => CMat::from_row_slice(2, 2, &[l, o, o, -l]),
    }
}

/// Kronecker product with qubit 0 as the least significant factor.
pub fn dense_pauli(p: &PauliString) -> CMat {
    let n = p.num_qubits();
    let mut m = CMat::identity(1, 1);
    for q in (0..n).rev() {
        m = m.kronecker(&single(p.get(q)));
    }
    m * p.phase().to_complex()
}

pub fn dense_clifford(g: &CliffordGate, n: usize) -> CMat {
    let dim = 1usize << n;
    let mut m = CMat::zeros(dim, dim);
    match *g {
        CliffordGate::Cnot { control, target } => {
            for k in 0..dim {
                let out = if k >> control & 1 == 1 { k ^ (1 << target) } else { k };
                m[(out, k)] = c(1.0, 0.0);
            }
        }
        CliffordGate::Cz { a, b } => {
            for k in 0..dim {
                let s = if (k >> a & 1) & (k >> b & 1) == 1 { -1.0 } else { 1.0 };
                m[(k, k)] = c(s, 0.0);
            }
        }
        CliffordGate::H(q) => {
            let r = std::f64::consts::FRAC_1_SQRT_2;
            let h = CMat::from_row_slice(2, 2, &[c(r, 0.0), c(r, 0.0), c(r, 0.0), c(-r, 0.0)]);
            let mut acc = CMat::identity(1, 1);
            for j in (0..n).rev() {
                acc = acc.kronecker(&if j == q { h.clone() } else { CMat::identity(2, 2) });
            }
            m = acc;
        }
    }
    m
}

/// `exp(-iθP/2)` for a Hermitian Pauli string.
pub fn dense_rotation(p: &PauliString, theta: f64) -> CMat {
    let dim = 1usize << p.num_qubits();
    CMat::identity(dim, dim) * c((theta / 2.0).cos(), 0.0) - dense_pauli(p) * c(0.0, (theta / 2.0).sin())
}

pub fn max_abs_diff(a: &CMat, b: &CMat) -> f64 {
    (a - b).iter().map(|z| z.norm()).fold(0.0, f64::max)
}

pub const LETTERS: [Pauli; 4] = [Pauli::I, Pauli::X, Pauli::Y, Pauli::Z];
pub const PHASES: [Phase; 4] = [Phase::ONE, Phase::I, Phase::MINUS_ONE, Phase::MINUS_I];

/// Every unsigned Pauli string on `n` qubits.
pub fn all_strings(n: usize) -> Vec<PauliString> {
    (0..4usize.pow(n as u32))
        .map(|mut code| {
            let letters: Vec<Pauli> = (0..n)
                .map(|_| {
                    let l = LETTERS[code % 4];
                    code /= 4;
                    l
                })
                .collect();
            PauliString::from_letters(&letters)
        })
        .collect()
}

pub fn random_string<R: Rng>(n: usize, rng: &mut R) -> PauliString {
    let letters: Vec<Pauli> = (0..n).map(|_| LETTERS[rng.random_range(0..4)]).collect();
    PauliString::from_letters(&letters).with_phase(PHASES[rng.random_range(0..4)])
}

pub fn random_hermitian_string<R: Rng>(n: usize, rng: &mut R) -> PauliString {
    let letters: Vec<Pauli> = (0..n).map(|_| LETTERS[rng.random_range(0..4)]).collect();
    PauliString::from_letters(&letters)
}

/// Every supported Clifford gate placement on `n` qubits.
pub fn all_gates(n: usize) -> Vec<CliffordGate> {
    let mut out: Vec<CliffordGate> = (0..n).map(CliffordGate::H).collect();
    for a in 0..n {
        for b in 0..n {
            if a != b {
                out.push(CliffordGate::Cnot { control: a, target: b });
                if a < b {
                    out.push(CliffordGate::Cz { a, b });
                }
            }
        }
    }
    out
}

/// Outcome of checking one pair `(p, q)` and one gate against the dense oracle.
pub fn pauli_case_errors(p: &PauliString, q: &PauliString, g: &CliffordGate) -> Vec<String> {
    use lsqgan::pauli::{clifford_conjugate, commutator_pauli, commutes, pauli_product};
    let mut errs = Vec::new();
    let (dp, dq) = (dense_pauli(p), dense_pauli(q));
    let prod = pauli_product(p, q).expect("product");
    if max_abs_diff(&dense_pauli(&prod), &(&dp * &dq)) != 0.0 {
        errs.push(format!("product {p} * {q} = {prod}"));
    }
    let dense_commutes = max_abs_diff(&(&dp * &dq), &(&dq * &dp)) == 0.0;
    if commutes(p, q).expect("commutes") != dense_commutes {
        errs.push(format!("commutes({p}, {q})"));
    }
    if !dense_commutes {
        let t = commutator_pauli(p, q).expect("commutator");
        let want = (&dp * &dq - &dq * &dp) * c(0.0, 0.5);
        if max_abs_diff(&dense_pauli(&t), &want) != 0.0 {
            errs.push(format!("commutator ({p}, {q}) = {t}"));
        }
    }
    let weight = (0..p.num_qubits()).filter(|&k| p.get(k) != Pauli::I).count();
    if p.weight() != weight {
        errs.push(format!("weight {p}"));
    }
    let n = p.num_qubits();
    let dg = dense_clifford(g, n);
    let conj = clifford_conjugate(p, g).expect("conjugate");
    let want = dg.adjoint() * &dp * &dg;
    // H carries 1/sqrt(2) twice; every other entry is exact
    if max_abs_diff(&dense_pauli(&conj), &want) > 1e-15 {
        errs.push(format!("conjugate {p} by {g:?} = {conj}"));
    }
    errs
}

pub fn random_circuit<R: Rng>(n: usize, gates: usize, r: &mut R) -> Circuit {
    let cliffords = all_gates(n);
    let mut c = Circuit::new(n);
    for _ in 0..gates {
        match r.random_range(0..10) {
            0..=4 => {
                let axis = [Pauli::X, Pauli::Y, Pauli::Z][r.random_range(0..3)];
                c.push_axis_rotation(r.random_range(0..n), axis).unwrap();
            }
            5 | 6 => {
                let mut p = random_hermitian_string(n, r);
                if p.is_identity() {
                    p = PauliString::single(n, 0, Pauli::X).unwrap();
                }
                if c.angle_count() > 0 && r.random_bool(0.3) {
                    let slot = r.random_range(0..c.angle_count());
                    c.push_shared_rotation(p, slot).unwrap();
                } else {
                    c.push_rotation(p).unwrap();
                }
            }
            _ if cliffords.is_empty() => {}
            _ => c.push_clifford(cliffords[r.random_range(0..cliffords.len())]).unwrap(),
        }
    }
    if c.angle_count() == 0 {
        c.push_axis_rotation(0, Pauli::Y).unwrap();
    }
    c
}

pub fn dense_run(c: &Circuit, angles: &[f64]) -> DVector<Complex64> {
    let dim = 1usize << c.num_qubits();
    let mut psi = DVector::from_element(dim, Complex64::new(0.0, 0.0));
    psi[0] = Complex64::new(1.0, 0.0);
    for g in c.gates() {
        let m = match g {
            Gate::Clifford(cg) => dense_clifford(cg, c.num_qubits()),
            Gate::Rotation(rg) => dense_rotation(rg.generator(), angles[rg.slot()]),
        };
        psi = m * psi;
    }
    psi
}
