//! Fixtures shared by the benches.

use lsqgan::ansatz::{build_ansatz, Ansatz, AnsatzKind};
use lsqgan::rng;
use rand::Rng;

/// A Circuit1 layout with deterministic random angles.
pub fn circuit1(n: usize, depth: usize) -> (Ansatz, Vec<f64>) {
    let a = build_ansatz(AnsatzKind::Circuit1, n, depth).expect("valid layout");
    let mut r = rng::stream(17, n as u64);
    let angles = (0..a.circuit.angle_count()).map(|_| r.random_range(-1.0..1.0)).collect();
    (a, angles)
}
