//! Pauli strings in symplectic form and their Clifford conjugation.
//!
//! A string is stored as two bit vectors `x`, `z` plus a global phase
//! `i^k`. The bit pair `(1, 1)` denotes the Hermitian `Y`, not `XZ`.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};

/// A power of `i`, stored mod 4.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub struct Phase(u8);

impl Phase {
    pub const ONE: Phase = Phase(0);
    pub const I: Phase = Phase(1);
    pub const MINUS_ONE: Phase = Phase(2);
    pub const MINUS_I: Phase = Phase(3);

    pub fn from_power(k: i64) -> Self {
        Phase(k.rem_euclid(4) as u8)
    }

    pub fn power(self) -> u8 {
        self.0
    }

    pub fn is_real(self) -> bool {
        self.0 % 2 == 0
    }

    /// `+1.0` or `-1.0` for real phases.
    pub fn sign(self) -> Option<f64> {
        match self.0 {
            0 => Some(1.0),
            2 => Some(-1.0),
            _ => None,
        }
    }

    pub fn to_complex(self) -> Complex64 {
        match self.0 {
            0 => Complex64::new(1.0, 0.0),
            1 => Complex64::new(0.0, 1.0),
            2 => Complex64::new(-1.0, 0.0),
            _ => Complex64::new(0.0, -1.0),
        }
    }
}

impl std::ops::Mul for Phase {
    type Output = Phase;
    fn mul(self, rhs: Phase) -> Phase {
        Phase((self.0 + rhs.0) % 4)
    }
}

impl std::ops::Neg for Phase {
    type Output = Phase;
    fn neg(self) -> Phase {
        Phase((self.0 + 2) % 4)
    }
}

/// Single-qubit Pauli letter.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Pauli {
    I,
    X,
    Y,
    Z,
}

impl Pauli {
    pub fn from_bits(x: bool, z: bool) -> Self {
        match (x, z) {
            (false, false) => Pauli::I,
            (true, false) => Pauli::X,
            (true, true) => Pauli::Y,
            (false, true) => Pauli::Z,
        }
    }

    pub fn bits(self) -> (bool, bool) {
        match self {
            Pauli::I => (false, false),
            Pauli::X => (true, false),
            Pauli::Y => (true, true),
            Pauli::Z => (false, true),
        }
    }

    pub fn letter(self) -> char {
        match self {
            Pauli::I => 'I',
            Pauli::X => 'X',
            Pauli::Y => 'Y',
            Pauli::Z => 'Z',
        }
    }

    fn from_letter(c: char) -> Option<Self> {
        match c {
            'I' => Some(Pauli::I),
            'X' => Some(Pauli::X),
            'Y' => Some(Pauli::Y),
            'Z' => Some(Pauli::Z),
            _ => None,
        }
    }
}

const WORD: usize = 64;

fn words_for(n: usize) -> usize {
    n.div_ceil(WORD)
}

/// n-qubit Pauli string with a phase in {±1, ±i}.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PauliString {
    n: usize,
    x: Vec<u64>,
    z: Vec<u64>,
    phase: Phase,
}

impl PauliString {
    pub fn identity(n: usize) -> Self {
        PauliString {
            n,
            x: vec![0; words_for(n)],
            z: vec![0; words_for(n)],
            phase: Phase::ONE,
        }
    }

    /// `letter` on qubit `q`, identity elsewhere.
    pub fn single(n: usize, q: usize, letter: Pauli) -> Result<Self> {
        let mut p = Self::identity(n);
        p.set(q, letter)?;
        Ok(p)
    }

    pub fn from_letters(letters: &[Pauli]) -> Self {
        let mut p = Self::identity(letters.len());
        for (q, &l) in letters.iter().enumerate() {
            p.put(q, l);
        }
        p
    }

    pub fn num_qubits(&self) -> usize {
        self.n
    }

    pub fn phase(&self) -> Phase {
        self.phase
    }

    pub fn with_phase(mut self, phase: Phase) -> Self {
        self.phase = phase;
        self
    }

    pub fn get(&self, q: usize) -> Pauli {
        let (w, b) = (q / WORD, q % WORD);
        Pauli::from_bits((self.x[w] >> b) & 1 == 1, (self.z[w] >> b) & 1 == 1)
    }

    pub fn set(&mut self, q: usize, letter: Pauli) -> Result<()> {
        self.check_qubit(q)?;
        self.put(q, letter);
        Ok(())
    }

    fn put(&mut self, q: usize, letter: Pauli) {
        let (w, b) = (q / WORD, q % WORD);
        let (xb, zb) = letter.bits();
        self.x[w] = (self.x[w] & !(1 << b)) | ((xb as u64) << b);
        self.z[w] = (self.z[w] & !(1 << b)) | ((zb as u64) << b);
    }

    fn xbit(&self, q: usize) -> bool {
        (self.x[q / WORD] >> (q % WORD)) & 1 == 1
    }

    fn zbit(&self, q: usize) -> bool {
        (self.z[q / WORD] >> (q % WORD)) & 1 == 1
    }

    fn flip_x(&mut self, q: usize) {
        self.x[q / WORD] ^= 1 << (q % WORD);
    }

    fn flip_z(&mut self, q: usize) {
        self.z[q / WORD] ^= 1 << (q % WORD);
    }

    fn check_qubit(&self, q: usize) -> Result<()> {
        if q < self.n {
            Ok(())
        } else {
            Err(Error::QubitIndex { index: q, n: self.n })
        }
    }

    pub fn letters(&self) -> Vec<Pauli> {
        (0..self.n).map(|q| self.get(q)).collect()
    }

    /// Number of non-identity factors.
    pub fn weight(&self) -> usize {
        self.x
            .iter()
            .zip(&self.z)
            .map(|(x, z)| (x | z).count_ones() as usize)
            .sum()
    }

    pub fn is_identity(&self) -> bool {
        self.weight() == 0
    }

    /// Qubits carrying a non-identity factor, ascending.
    pub fn support(&self) -> Vec<usize> {
        (0..self.n).filter(|&q| self.xbit(q) || self.zbit(q)).collect()
    }

    /// Bit masks for strings of at most 64 qubits.
    pub fn masks(&self) -> Option<(u64, u64)> {
        if self.n <= WORD {
            Some((
                self.x.first().copied().unwrap_or(0),
                self.z.first().copied().unwrap_or(0),
            ))
        } else {
            None
        }
    }

    /// Same letters with phase +1.
    pub fn unsigned(&self) -> Self {
        self.clone().with_phase(Phase::ONE)
    }
}

/// Letter-wise phase exponent of `P(x1,z1) · P(x2,z2)` in the Hermitian-Y
/// convention: the result is `i^g · P(x1^x2, z1^z2)`.
fn g(x1: bool, z1: bool, x2: bool, z2: bool) -> i64 {
    let (x2, z2) = (x2 as i64, z2 as i64);
    match (x1, z1) {
        (false, false) => 0,
        (true, true) => z2 - x2,
        (true, false) => z2 * (2 * x2 - 1),
        (false, true) => x2 * (1 - 2 * z2),
    }
}

/// `p · q` with the accumulated phase.
pub fn pauli_product(p: &PauliString, q: &PauliString) -> Result<PauliString> {
    check_dim(p.n, q.n)?;
    let mut k = p.phase.power() as i64 + q.phase.power() as i64;
    for i in 0..p.n {
        k += g(p.xbit(i), p.zbit(i), q.xbit(i), q.zbit(i));
    }
    Ok(PauliString {
        n: p.n,
        x: p.x.iter().zip(&q.x).map(|(a, b)| a ^ b).collect(),
        z: p.z.iter().zip(&q.z).map(|(a, b)| a ^ b).collect(),
        phase: Phase::from_power(k),
    })
}

pub fn commutes(p: &PauliString, q: &PauliString) -> Result<bool> {
    check_dim(p.n, q.n)?;
    let parity: u32 = (0..p.x.len())
        .map(|w| ((p.x[w] & q.z[w]) ^ (p.z[w] & q.x[w])).count_ones())
        .sum();
    Ok(parity % 2 == 0)
}

/// The Pauli string `(i/2)[p, q]`, defined when `p` and `q` anticommute.
///
/// For anticommuting strings `[p, q] = 2pq`, so this is `i·p·q`.
pub fn commutator_pauli(p: &PauliString, q: &PauliString) -> Result<PauliString> {
    if commutes(p, q)? {
        return Err(Error::invalid("commutator of commuting Pauli strings is zero"));
    }
    let pq = pauli_product(p, q)?;
    let phase = pq.phase * Phase::I;
    Ok(pq.with_phase(phase))
}

pub fn weight(p: &PauliString) -> usize {
    p.weight()
}

/// Clifford gates supported by the ansätze.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum CliffordGate {
    Cnot { control: usize, target: usize },
    Cz { a: usize, b: usize },
    H(usize),
}

impl CliffordGate {
    pub fn qubits(&self) -> Vec<usize> {
        match *self {
            CliffordGate::Cnot { control, target } => vec![control, target],
            CliffordGate::Cz { a, b } => vec![a, b],
            CliffordGate::H(q) => vec![q],
        }
    }

    /// Checks indices against `n` and distinctness.
    pub fn validate(&self, n: usize) -> Result<()> {
        let qs = self.qubits();
        for &q in &qs {
            if q >= n {
                return Err(Error::QubitIndex { index: q, n });
            }
        }
        if qs.len() == 2 && qs[0] == qs[1] {
            return Err(Error::invalid(format!("two-qubit gate on repeated qubit {}", qs[0])));
        }
        Ok(())
    }
}

/// `c† · p · c` (all supported gates are self-inverse, so also `c p c†`).
pub fn clifford_conjugate(p: &PauliString, c: &CliffordGate) -> Result<PauliString> {
    c.validate(p.n)?;
    let mut out = p.clone();
    match *c {
        CliffordGate::H(q) => {
            let (x, z) = (out.xbit(q), out.zbit(q));
            if x != z {
                out.flip_x(q);
                out.flip_z(q);
            }
            if x && z {
                out.phase = -out.phase;
            }
        }
        CliffordGate::Cnot { control, target } => {
            let (xc, zc) = (out.xbit(control), out.zbit(control));
            let (xt, zt) = (out.xbit(target), out.zbit(target));
            if xc && zt && (xt == zc) {
                out.phase = -out.phase;
            }
            if xc {
                out.flip_x(target);
            }
            if zt {
                out.flip_z(control);
            }
        }
        CliffordGate::Cz { a, b } => {
            let (xa, za) = (out.xbit(a), out.zbit(a));
            let (xb, zb) = (out.xbit(b), out.zbit(b));
            if xa && xb && (za != zb) {
                out.phase = -out.phase;
            }
            if xb {
                out.flip_z(a);
            }
            if xa {
                out.flip_z(b);
            }
        }
    }
    Ok(out)
}

impl fmt::Display for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let prefix = match self.phase.power() {
            0 => "+",
            1 => "+i",
            2 => "-",
            _ => "-i",
        };
        f.write_str(prefix)?;
        for q in 0..self.n {
            write!(f, "{}", self.get(q).letter())?;
        }
        Ok(())
    }
}

impl FromStr for PauliString {
    type Err = Error;

    /// Parses `"+XIZY"`, `"-iZZ"`, or bare letters; qubit 0 is leftmost.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let (phase, rest) = if let Some(r) = s.strip_prefix("+i") {
            (Phase::I, r)
        } else if let Some(r) = s.strip_prefix("-i") {
            (Phase::MINUS_I, r)
        } else if let Some(r) = s.strip_prefix('+') {
            (Phase::ONE, r)
        } else if let Some(r) = s.strip_prefix('-') {
            (Phase::MINUS_ONE, r)
        } else if let Some(r) = s.strip_prefix('i') {
            (Phase::I, r)
        } else {
            (Phase::ONE, s)
        };
        if rest.is_empty() {
            return Err(Error::Parse(format!("no Pauli letters in {s:?}")));
        }
        let letters = rest
            .chars()
            .map(|c| Pauli::from_letter(c).ok_or_else(|| Error::Parse(format!("bad Pauli letter {c:?} in {s:?}"))))
            .collect::<Result<Vec<_>>>()?;
        Ok(PauliString::from_letters(&letters).with_phase(phase))
    }
}
