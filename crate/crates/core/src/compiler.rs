//! Greedy communication-avoiding scheduling pass.
//!
//! Starting from the identity layout, the pass alternates between two moves:
//! drain every ready gate that runs without communication under the current
//! layout, then look at all layouts one local/global exchange away and adopt
//! the one that unlocks the most gates. When no exchange helps, the earliest
//! ready gate is emitted as-is and pays for its communication.

use std::collections::{BTreeSet, HashMap};

use rayon::prelude::*;

use crate::circuit::{Circuit, Gate, Instruction};
use crate::dag::{build_dag, CircuitDag, DagRules};
use crate::error::Result;
use crate::layout::{needs_communication, QubitPermutation, ShardConfig};

/// How a candidate layout is scored.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum CountMode {
    /// Ready gates that become local.
    Ready,
    /// Gates that can run locally one after another, starting from the
    /// ready ones.
    #[default]
    Cascade,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PassConfig {
    pub shards: ShardConfig,
    pub count_mode: CountMode,
    pub dag_rules: DagRules,
}

impl PassConfig {
    pub fn new(shards: ShardConfig) -> Self {
        Self {
            shards,
            count_mode: CountMode::default(),
            dag_rules: DagRules::default(),
        }
    }
}

/// Output of [`compile`]: gates interleaved with `PERMUTE` instructions.
#[derive(Debug, Clone, PartialEq)]
pub struct CompiledCircuit {
    pub circuit: Circuit,
    pub final_layout: QubitPermutation,
}

impl CompiledCircuit {
    pub fn instructions(&self) -> &[Instruction] {
        self.circuit.instructions()
    }

    pub fn num_permutes(&self) -> usize {
        self.circuit.num_permutes()
    }
}

/// A gate runs without communication when its target is local.
fn runs_locally(gate: &Gate, layout: &QubitPermutation, cfg: &ShardConfig) -> bool {
    !needs_communication(gate, layout, cfg)
}

/// Like [`runs_locally`] but under `layout` with positions `a` and `b`
/// exchanged, without materializing that layout.
fn runs_locally_swapped(
    gate: &Gate,
    layout: &QubitPermutation,
    a: usize,
    b: usize,
    m: usize,
) -> bool {
    let mut p = layout.position(gate.target());
    if p == a {
        p = b;
    } else if p == b {
        p = a;
    }
    p < m
}

pub fn compile(circuit: &Circuit, pc: &PassConfig) -> Result<CompiledCircuit> {
    let cfg = &pc.shards;
    let n = circuit.num_qubits();
    if cfg.num_qubits() != n {
        return Err(crate::Error::SizeMismatch {
            expected: cfg.num_qubits(),
            found: n,
        });
    }
    let mut dag = build_dag(circuit, pc.dag_rules)?;
    let mut layout = QubitPermutation::identity(n);
    let mut out = Circuit::new(n);

    while !dag.is_empty() {
        drain_local(&mut dag, &layout, cfg, &mut out);
        if dag.is_empty() {
            break;
        }
        let (best, score) = best_exchange(&dag, &layout, pc);
        if score > 0 {
            let (l, g) = best.expect("positive score comes from a candidate");
            layout = layout.with_positions_swapped(l, g);
            out.push(Instruction::Permute(layout.clone()))?;
        } else {
            let v = *dag
                .ready()
                .first()
                .expect("a non-empty DAG has a ready vertex");
            out.push_gate(dag.gate(v).clone())?;
            dag.remove_vertex(v)?;
        }
    }

    Ok(CompiledCircuit {
        circuit: out,
        final_layout: layout,
    })
}

/// Emits ready local gates, smallest circuit position first, until none is
/// left.
fn drain_local(
    dag: &mut CircuitDag,
    layout: &QubitPermutation,
    cfg: &ShardConfig,
    out: &mut Circuit,
) {
    let mut work: BTreeSet<usize> = dag
        .ready()
        .iter()
        .copied()
        .filter(|&v| runs_locally(dag.gate(v), layout, cfg))
        .collect();
    while let Some(v) = work.pop_first() {
        out.push_gate(dag.gate(v).clone())
            .expect("gate came from a valid circuit");
        dag.remove_vertex(v).expect("worklist holds ready vertices");
        for &s in dag.successors(v) {
            if dag.pending_in_degree(s) == 0 && runs_locally(dag.gate(s), layout, cfg) {
                work.insert(s);
            }
        }
    }
}

/// Best `(local position, global position)` exchange and its score; ties go
/// to the smallest local, then smallest global position.
fn best_exchange(
    dag: &CircuitDag,
    layout: &QubitPermutation,
    pc: &PassConfig,
) -> (Option<(usize, usize)>, usize) {
    let m = pc.shards.num_local();
    let n = pc.shards.num_qubits();
    let candidates: Vec<(usize, usize)> =
        (0..m).flat_map(|l| (m..n).map(move |g| (l, g))).collect();
    let scores: Vec<usize> = candidates
        .par_iter()
        .map(|&(l, g)| score_exchange(dag, layout, l, g, pc))
        .collect();
    let mut best = None;
    let mut best_score = 0;
    for (cand, score) in candidates.into_iter().zip(scores) {
        if score > best_score {
            best = Some(cand);
            best_score = score;
        }
    }
    (best, best_score)
}

fn score_exchange(
    dag: &CircuitDag,
    layout: &QubitPermutation,
    l: usize,
    g: usize,
    pc: &PassConfig,
) -> usize {
    let m = pc.shards.num_local();
    count_unlocked(dag, pc.count_mode, |v| {
        runs_locally_swapped(dag.gate(v), layout, l, g, m)
    })
}

/// Counts ready vertices accepted by `local`, and in cascade mode everything
/// they release transitively through accepted vertices.
fn count_unlocked(dag: &CircuitDag, mode: CountMode, local: impl Fn(usize) -> bool) -> usize {
    let mut stack: Vec<usize> = dag.ready().iter().copied().filter(|&v| local(v)).collect();
    if mode == CountMode::Ready || stack.is_empty() {
        return stack.len();
    }
    let mut pending: HashMap<usize, u32> = HashMap::new();
    let mut count = 0;
    while let Some(v) = stack.pop() {
        count += 1;
        for &s in dag.successors(v) {
            let left = pending.entry(s).or_insert_with(|| dag.pending_in_degree(s));
            *left -= 1;
            if *left == 0 && local(s) {
                stack.push(s);
            }
        }
    }
    count
}

/// Score of adopting `candidate` as the layout, for a DAG whose ready set
/// may contain gates of any locality.
pub fn score_candidate(dag: &CircuitDag, candidate: &QubitPermutation, pc: &PassConfig) -> usize {
    count_unlocked(dag, pc.count_mode, |v| {
        runs_locally(dag.gate(v), candidate, &pc.shards)
    })
}

/// Instructions that involve communication, counted along the evolving
/// layout, over the number of gates. Each `PERMUTE` counts once.
pub fn comm_gate_fraction(circuit: &Circuit, cfg: &ShardConfig) -> f64 {
    let gates = circuit.num_gates();
    if gates == 0 {
        return 0.0;
    }
    comm_instruction_count(circuit, cfg) as f64 / gates as f64
}

pub fn comm_instruction_count(circuit: &Circuit, cfg: &ShardConfig) -> usize {
    let mut layout = QubitPermutation::identity(circuit.num_qubits());
    let mut count = 0;
    for instr in circuit.instructions() {
        match instr {
            Instruction::Gate(g) => count += usize::from(needs_communication(g, &layout, cfg)),
            Instruction::Permute(p) => {
                layout = p.clone();
                count += 1;
            }
        }
    }
    count
}

/// Summary printed by `compile --report`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PassReport {
    pub gates: usize,
    pub permutes: usize,
    pub comm_before: usize,
    pub comm_after: usize,
    pub fraction_before: f64,
    pub fraction_after: f64,
}

impl PassReport {
    pub fn new(original: &Circuit, compiled: &CompiledCircuit, cfg: &ShardConfig) -> Self {
        Self {
            gates: original.num_gates(),
            permutes: compiled.num_permutes(),
            comm_before: comm_instruction_count(original, cfg),
            comm_after: comm_instruction_count(&compiled.circuit, cfg),
            fraction_before: comm_gate_fraction(original, cfg),
            fraction_after: comm_gate_fraction(&compiled.circuit, cfg),
        }
    }
}
