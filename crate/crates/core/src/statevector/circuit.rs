use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::pauli::{CliffordGate, Pauli, PauliString};

/// `exp(-i θ P / 2)` with θ read from `angles[slot]`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RotationGate {
    generator: PauliString,
    slot: usize,
}

impl RotationGate {
    pub fn generator(&self) -> &PauliString {
        &self.generator
    }

    pub fn slot(&self) -> usize {
        self.slot
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Gate {
    Clifford(CliffordGate),
    Rotation(RotationGate),
}

/// Ordered gate list acting on `|0...0>`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Circuit {
    n: usize,
    gates: Vec<Gate>,
    angle_count: usize,
}

impl Circuit {
    pub fn new(n: usize) -> Self {
        Circuit { n, gates: Vec::new(), angle_count: 0 }
    }

    pub fn num_qubits(&self) -> usize {
        self.n
    }

    pub fn gates(&self) -> &[Gate] {
        &self.gates
    }

    pub fn angle_count(&self) -> usize {
        self.angle_count
    }

    pub fn rotation_count(&self) -> usize {
        self.gates.iter().filter(|g| matches!(g, Gate::Rotation(_))).count()
    }

    pub fn clifford_count(&self) -> usize {
        self.gates.len() - self.rotation_count()
    }

    pub fn push_clifford(&mut self, gate: CliffordGate) -> Result<()> {
        gate.validate(self.n)?;
        self.gates.push(Gate::Clifford(gate));
        Ok(())
    }

    /// Appends a rotation with a fresh angle slot and returns the slot.
    pub fn push_rotation(&mut self, generator: PauliString) -> Result<usize> {
        let slot = self.angle_count;
        self.angle_count += 1;
        if let Err(e) = self.push_shared_rotation(generator, slot) {
            self.angle_count -= 1;
            return Err(e);
        }
        Ok(slot)
    }

    /// Single-qubit rotation about `axis` on qubit `q`.
    pub fn push_axis_rotation(&mut self, q: usize, axis: Pauli) -> Result<usize> {
        let generator = PauliString::single(self.n, q, axis)?;
        self.push_rotation(generator)
    }

    /// Appends a rotation reading an existing slot.
    pub fn push_shared_rotation(&mut self, generator: PauliString, slot: usize) -> Result<()> {
        check_dim(self.n, generator.num_qubits())?;
        if generator.is_identity() {
            return Err(Error::invalid("rotation generator must not be the identity"));
        }
        if !generator.phase().is_real() {
            return Err(Error::invalid("rotation generator must be Hermitian"));
        }
        if slot >= self.angle_count {
            return Err(Error::invalid(format!(
                "angle slot {slot} out of range ({} slots)",
                self.angle_count
            )));
        }
        self.gates.push(Gate::Rotation(RotationGate { generator, slot }));
        Ok(())
    }
}
