use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};
use opsize::mitigation::richardson_weights;
use opsize::noise::{run_noisy_dm, run_noisy_trajectories};
use opsize::oracle::{build_hamiltonian, pauli_coefficients, HeisenbergEvolver};
use opsize::simulator::run_protocol;
use opsize::{DenseOperator, ModelParams, NoiseModel, NoiseScope, Pauli, PauliString};
use opsize_bench::protocol;

fn statevector(c: &mut Criterion) {
    let mut g = c.benchmark_group("statevector_protocol");
    for n in [3, 5, 7] {
        let p = protocol(n, 1.0, 10);
        g.bench_with_input(BenchmarkId::from_parameter(n), &p, |b, p| {
            b.iter(|| run_protocol(black_box(p)).unwrap())
        });
    }
    g.finish();
}

fn density_matrix(c: &mut Criterion) {
    let noise = NoiseModel::new(1e-3, NoiseScope::All).unwrap();
    let mut g = c.benchmark_group("dm_protocol");
    g.sample_size(10);
    for n in [3, 4, 5] {
        let p = protocol(n, 0.5, 5);
        g.bench_with_input(BenchmarkId::from_parameter(n), &p, |b, p| {
            b.iter(|| run_noisy_dm(black_box(p), &noise).unwrap())
        });
    }
    g.finish();
}

fn trajectories(c: &mut Criterion) {
    let noise = NoiseModel::new(1e-2, NoiseScope::All).unwrap();
    let p = protocol(4, 1.0, 10);
    c.bench_function("trajectories_n4_x100", |b| {
        b.iter(|| run_noisy_trajectories(black_box(&p), &noise, 100, 7).unwrap())
    });
}

fn oracle(c: &mut Criterion) {
    let params = ModelParams {
        n: 6,
        ..ModelParams::default()
    };
    let h = build_hamiltonian(&params).unwrap();
    let evolver = HeisenbergEvolver::new(&h).unwrap();
    let o0 = DenseOperator::from_pauli(&PauliString::single(6, 3, Pauli::X).unwrap()).unwrap();
    let ot = evolver.evolve(&o0, 2.0).unwrap();
    c.bench_function("oracle_evolve_n6", |b| {
        b.iter(|| evolver.evolve(black_box(&o0), 2.0).unwrap())
    });
    c.bench_function("pauli_coefficients_n6", |b| {
        b.iter(|| pauli_coefficients(black_box(&ot)).unwrap())
    });
}

fn richardson(c: &mut Criterion) {
    let scales = [1.0, 2.0, 3.0, 4.0, 5.0];
    c.bench_function("richardson_weights_5", |b| {
        b.iter(|| richardson_weights(black_box(&scales)).unwrap())
    });
}

criterion_group!(
    benches,
    statevector,
    density_matrix,
    trajectories,
    oracle,
    richardson
);
criterion_main!(benches);
