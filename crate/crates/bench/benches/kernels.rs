use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BatchSize, Criterion};
use shardsim::compiler::compile;
use shardsim::simulator::Executor;
use shardsim::{Gate, PassConfig, QubitPermutation, RandomCircuitSpec, ShardConfig, ShardedState};

const N: usize = 20;

fn state() -> ShardedState {
    ShardedState::new(ShardConfig::new(N, 16).unwrap()).unwrap()
}

fn gates(c: &mut Criterion) {
    let mut group = c.benchmark_group("apply_gate_n20_k16");
    for (name, gate) in [
        ("h_local", Gate::h(3)),
        ("h_global", Gate::h(N - 1)),
        ("cnot_local", Gate::cnot(N - 1, 3)),
        ("cnot_global", Gate::cnot(3, N - 1)),
    ] {
        let mut s = state();
        group.bench_function(name, |b| b.iter(|| s.apply_gate(black_box(&gate)).unwrap()));
    }
    group.finish();
}

fn permutes(c: &mut Criterion) {
    let mut group = c.benchmark_group("permute_n20_k16");
    let id = QubitPermutation::identity(N);
    let one_pair = id.with_positions_swapped(0, N - 1);
    let reversed = QubitPermutation::from_map((0..N).rev().collect()).unwrap();
    for (name, target) in [("one_exchange", one_pair), ("reversal", reversed)] {
        group.bench_function(name, |b| {
            b.iter_batched(
                state,
                |mut s| {
                    s.permute_qubits(&target).unwrap();
                    s
                },
                BatchSize::LargeInput,
            )
        });
    }
    group.finish();
}

fn compiler(c: &mut Criterion) {
    let circuit = RandomCircuitSpec {
        num_qubits: 35,
        num_gates: 1050,
        p: 0.3,
        seed: 0,
    }
    .generate()
    .unwrap();
    let pc = PassConfig::new(ShardConfig::new(35, 128).unwrap());
    c.bench_function("compile_n35_1050_gates", |b| {
        b.iter(|| compile(black_box(&circuit), &pc).unwrap())
    });
}

criterion_group!(benches, gates, permutes, compiler);
criterion_main!(benches);
