mod common;

use common::*;
use lsqgan::statevector::{adjoint_gradient, parameter_shift_gradient, run};
use lsqgan::{rng, Observable, Pauli, PauliString};
use rand::Rng;

#[test]
fn simulator_matches_dense_products() {
    let mut r = rng::stream(5, 0);
    for case in 0..60 {
        let n = 1 + case % 5;
        let c = random_circuit(n, 25, &mut r);
        let angles: Vec<f64> = (0..c.angle_count()).map(|_| r.random_range(-3.0..3.0)).collect();
        let got = run(&c, &angles).unwrap();
        let want = dense_run(&c, &angles);
        let err = got.amplitudes().iter().zip(want.iter()).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
        assert!(err < 1e-12, "case {case}: {err}");
    }
}

#[test]
fn adjoint_shift_and_finite_differences_agree() {
    let mut r = rng::stream(6, 0);
    let h = 1e-5;
    let mut worst = 0.0f64;
    for case in 0..50 {
        let n = 1 + case % 5;
        let c = random_circuit(n, 30, &mut r);
        let mut p = random_hermitian_string(n, &mut r);
        if p.is_identity() {
            p = PauliString::single(n, n - 1, Pauli::Z).unwrap();
        }
        let o = Observable::from(p.clone());
        let angles: Vec<f64> = (0..c.angle_count()).map(|_| r.random_range(-3.0..3.0)).collect();
        let adj = adjoint_gradient(&c, &angles, &p).unwrap();
        let shift = parameter_shift_gradient(&c, &angles, &p).unwrap();
        for k in 0..angles.len() {
            let mut plus = angles.clone();
            let mut minus = angles.clone();
            plus[k] += h;
            minus[k] -= h;
            let fd = (o.expectation(&run(&c, &plus).unwrap()).unwrap() - o.expectation(&run(&c, &minus).unwrap()).unwrap())
                / (2.0 * h);
            let scale = adj[k].abs().max(1e-3);
            let rel = [(adj[k] - shift[k]).abs(), (adj[k] - fd).abs(), (shift[k] - fd).abs()]
                .into_iter()
                .fold(0.0, f64::max)
                / scale;
            worst = worst.max(rel);
            assert!(rel < 1e-5, "case {case} slot {k}: adjoint {} shift {} fd {fd}", adj[k], shift[k]);
        }
    }
    assert!(worst < 1e-5);
}
