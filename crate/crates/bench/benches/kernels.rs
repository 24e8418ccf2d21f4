use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use lsqgan::gan::new_critic;
use lsqgan::pauli::{clifford_conjugate, CliffordGate};
use lsqgan::statevector::{adjoint_gradient, parameter_shift_gradient, run};
use lsqgan::{Pauli, PauliString};
use lsqgan_bench::circuit1;

fn statevector(c: &mut Criterion) {
    let mut g = c.benchmark_group("run");
    for n in [6, 10, 14] {
        let (a, angles) = circuit1(n, 2);
        g.bench_with_input(BenchmarkId::from_parameter(n), &n, |b, _| b.iter(|| run(&a.circuit, black_box(&angles)).unwrap()));
    }
    g.finish();
}

fn gradients(c: &mut Criterion) {
    let mut g = c.benchmark_group("gradient");
    let (a, angles) = circuit1(8, 2);
    let z = PauliString::single(8, 0, Pauli::Z).unwrap();
    g.bench_function("adjoint", |b| b.iter(|| adjoint_gradient(&a.circuit, black_box(&angles), &z).unwrap()));
    g.bench_function("shift", |b| b.iter(|| parameter_shift_gradient(&a.circuit, black_box(&angles), &z).unwrap()));
    g.finish();
}

fn conjugation(c: &mut Criterion) {
    let n = 64;
    let mut p = PauliString::identity(n);
    for q in 0..n {
        p.set(q, [Pauli::X, Pauli::Y, Pauli::Z][q % 3]).unwrap();
    }
    let gates: Vec<CliffordGate> = (0..n - 1).map(|q| CliffordGate::Cnot { control: q, target: q + 1 }).collect();
    c.bench_function("conjugate_cnot_chain_64", |b| {
        b.iter(|| gates.iter().fold(p.clone(), |acc, g| clifford_conjugate(&acc, g).unwrap()))
    });
}

fn mlp(c: &mut Criterion) {
    let critic = new_critic(20, &[100, 50], 1).unwrap();
    let x = vec![0.1; 20];
    c.bench_function("critic_forward", |b| b.iter(|| critic.forward(black_box(&x)).unwrap()));
    c.bench_function("critic_gp_gradients", |b| b.iter(|| critic.gp_gradients(black_box(&x)).unwrap()));
}

criterion_group!(benches, statevector, gradients, conjugation, mlp);
criterion_main!(benches);
