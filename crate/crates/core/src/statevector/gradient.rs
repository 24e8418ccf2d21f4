use std::f64::consts::FRAC_PI_2;

use super::{run, Circuit, Gate, Observable, PauliAction, StateVector};
use crate::error::{check_dim, Result};
use crate::pauli::PauliString;

/// Gradient of `<P>` with respect to every angle slot by a reverse sweep.
pub fn adjoint_gradient(c: &Circuit, angles: &[f64], observable: &PauliString) -> Result<Vec<f64>> {
    adjoint_gradient_observable(c, angles, &Observable::from(observable.clone()))
}

/// Gradient of `<O>` for a weighted Pauli sum, one forward and one
/// backward pass regardless of the number of terms.
pub fn adjoint_gradient_observable(c: &Circuit, angles: &[f64], o: &Observable) -> Result<Vec<f64>> {
    check_dim(c.num_qubits(), o.num_qubits())?;
    let mut psi = run(c, angles)?;
    let mut lambda = o.apply(&psi)?;
    let mut grad = vec![0.0; c.angle_count()];
    for gate in c.gates().iter().rev() {
        match gate {
            Gate::Clifford(g) => {
                psi.apply_clifford(g)?;
                lambda.apply_clifford(g)?;
            }
            Gate::Rotation(r) => {
                let act = PauliAction::new(r.generator())?;
                // d/dθ exp(-iθP/2) = (-i/2) P exp(-iθP/2)
                grad[r.slot()] += StateVector::matrix_element(&lambda.amps, &act, &psi.amps).im;
                let theta = angles[r.slot()];
                psi.rotate(&act, -theta);
                lambda.rotate(&act, -theta);
            }
        }
    }
    Ok(grad)
}

/// Two-term shift rule applied per gate, so slots shared by several gates
/// still get exact derivatives.
pub fn parameter_shift_gradient(c: &Circuit, angles: &[f64], observable: &PauliString) -> Result<Vec<f64>> {
    check_dim(c.angle_count(), angles.len())?;
    let o = Observable::from(observable.clone());
    let mut grad = vec![0.0; c.angle_count()];
    for (idx, gate) in c.gates().iter().enumerate() {
        let Gate::Rotation(r) = gate else { continue };
        let shifted = |delta: f64| -> Result<f64> {
            let mut s = StateVector::zero(c.num_qubits())?;
            for (j, g) in c.gates().iter().enumerate() {
                match g {
                    Gate::Clifford(cg) => s.apply_clifford(cg)?,
                    Gate::Rotation(rg) => {
                        let extra = if j == idx { delta } else { 0.0 };
                        s.rotate(&PauliAction::new(rg.generator())?, angles[rg.slot()] + extra);
                    }
                }
            }
            o.expectation(&s)
        };
        grad[r.slot()] += (shifted(FRAC_PI_2)? - shifted(-FRAC_PI_2)?) / 2.0;
    }
    Ok(grad)
}
