use shardsim::compiler::compile;
use shardsim::costmodel::{estimate_circuit, estimate_reduction, step_reduction, CostModel};
use shardsim::{
    Circuit, Gate, PassConfig, QubitPermutation, RandomCircuitSpec, ShardConfig, StepCostModel,
    TableCostModel,
};

const FIXTURE: &str = concat!(
    env!("CARGO_MANIFEST_DIR"),
    "/tests/fixtures/cost_table_n35.csv"
);

fn fixture() -> TableCostModel {
    TableCostModel::load(FIXTURE).unwrap()
}

#[test]
fn fixture_covers_every_position() {
    let t = fixture();
    assert_eq!(t.num_qubits(), 35);
    for a in 0..35 {
        assert!(t.one_qubit_cost(a).is_some());
        for b in (0..35).filter(|&b| b != a) {
            assert!(t.two_qubit_cost(a, b).is_some());
            assert_eq!(t.swap_cost(a, b), t.swap_cost(b, a));
        }
    }
}

#[test]
fn estimates_depend_on_position_not_qubit() {
    let t = fixture();
    let cfg = ShardConfig::new(35, 128).unwrap();
    let id = QubitPermutation::identity(35);
    let cost_at = |p: usize| t.gate_cost(&Gate::h(p), &id, &cfg).unwrap();
    assert!(cost_at(0) < cost_at(28));
    assert!(cost_at(28) < cost_at(34));
    // Same gate, different layout: moving qubit 0 onto position 30 makes
    // it as expensive as a gate at position 30.
    let moved = id.with_positions_swapped(0, 30);
    assert_eq!(t.gate_cost(&Gate::h(0), &moved, &cfg).unwrap(), cost_at(30));
    // Two local positions still differ, which the step model cannot express.
    assert_ne!(cost_at(0), cost_at(3));
}

#[test]
fn compiled_circuits_are_cheaper_under_the_table() {
    let t = fixture();
    let cfg = ShardConfig::new(35, 128).unwrap();
    for seed in 0..5 {
        let c = RandomCircuitSpec {
            num_qubits: 35,
            num_gates: 1050,
            p: 0.3,
            seed,
        }
        .generate()
        .unwrap();
        let compiled = compile(&c, &PassConfig::new(cfg)).unwrap();
        let est = estimate_reduction(&c, &compiled.circuit, &cfg, &t).unwrap();
        assert!(
            est.reduction > 0.2 && est.reduction < 1.0,
            "seed {seed}: {}",
            est.reduction
        );
    }
}

#[test]
fn step_model_exported_as_table_gives_identical_estimates() {
    for (n, m, r) in [(10, 7, 8.0), (12, 9, 3.5), (35, 28, 8.0)] {
        let cfg = ShardConfig::with_local(n, m).unwrap();
        let step = StepCostModel::with_overhead(r).unwrap();
        let table = TableCostModel::from_step(&step, &cfg);
        let reloaded = TableCostModel::parse(&table.to_csv()).unwrap();
        assert_eq!(reloaded, table);
        for seed in 0..5 {
            let c = RandomCircuitSpec {
                num_qubits: n,
                num_gates: 30 * n,
                p: 0.4,
                seed,
            }
            .generate()
            .unwrap();
            let compiled = compile(&c, &PassConfig::new(cfg)).unwrap().circuit;
            for circ in [&c, &compiled] {
                let a = estimate_circuit(circ, &cfg, &step).unwrap();
                let b = estimate_circuit(circ, &cfg, &table).unwrap();
                assert_eq!(a, b, "n {n} seed {seed}");
            }
        }
    }
}

#[test]
fn missing_row_is_named() {
    let text = std::fs::read_to_string(FIXTURE).unwrap();
    let without = |prefix: &str| -> String {
        text.lines()
            .filter(|l| !l.starts_with(prefix))
            .map(|l| format!("{l}\n"))
            .collect()
    };
    let cases = [
        ("1q,17,", "1q position 17"),
        ("2q,3,30,", "2q control 3 target 30"),
        ("swap,5,29,", "swap 5 29"),
        ("reorder,global,", "reorder global"),
    ];
    for (row, name) in cases {
        let err = TableCostModel::parse(&without(row))
            .unwrap_err()
            .to_string();
        assert!(err.contains(name), "{err}");
    }
}

#[test]
fn table_narrower_than_circuit_is_rejected() {
    let cfg = ShardConfig::with_local(36, 29).unwrap();
    let c = RandomCircuitSpec {
        num_qubits: 36,
        num_gates: 10,
        p: 0.0,
        seed: 0,
    }
    .generate()
    .unwrap();
    assert!(estimate_circuit(&c, &cfg, &fixture()).is_err());
}

/// `global` gates on a global qubit followed by `total - global` gates on a
/// local one.
fn fraction_circuit(n: usize, m: usize, total: usize, global: usize) -> Circuit {
    let gates = (0..total).map(|i| if i < global { Gate::h(m) } else { Gate::y(0) });
    Circuit::from_gates(n, gates).unwrap()
}

#[test]
fn synthetic_fractions_match_closed_form() {
    let (n, m) = (8, 5);
    let cfg = ShardConfig::with_local(n, m).unwrap();
    for r in [1.0, 2.0, 8.0, 13.5] {
        let model = StepCostModel::with_overhead(r).unwrap();
        for (orig, opt) in [(200, 35), (100, 0), (1000, 999), (7, 3)] {
            let total = 1000;
            let a = fraction_circuit(n, m, total, orig);
            let b = fraction_circuit(n, m, total, opt);
            let est = estimate_reduction(&a, &b, &cfg, &model).unwrap();
            let closed = step_reduction(orig as f64 / total as f64, opt as f64 / total as f64, r);
            assert!((est.reduction - closed).abs() <= 1e-12);
        }
    }
}
