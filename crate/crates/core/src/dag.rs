//! Gate dependency graph with commutation-aware pruning.
//!
//! Vertex ids are gate indices in circuit order, so ordering ready vertices
//! by id is ordering them by original position.

use std::collections::{BTreeSet, HashSet};
use std::fmt::Write as _;

use crate::circuit::{Circuit, Gate, GateKind, Instruction};
use crate::error::{Error, Result};

/// Which commutation rules prune edges.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum DagRules {
    /// Only gates on disjoint qubits commute.
    Disjoint,
    /// Also CNOTs sharing only their control, or only their target.
    #[default]
    Full,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Role {
    Control,
    Target,
    Other,
}

fn cnot_role(g: &Gate, q: usize) -> Role {
    if g.kind() != GateKind::Cnot {
        Role::Other
    } else if g.control() == Some(q) {
        Role::Control
    } else {
        Role::Target
    }
}

/// Whether two gates may be reordered under `rules`.
pub fn commutes(a: &Gate, b: &Gate, rules: DagRules) -> bool {
    let shared: Vec<usize> = a.qubits().filter(|q| b.qubits().any(|r| r == *q)).collect();
    if shared.is_empty() {
        return true;
    }
    if rules == DagRules::Disjoint || a.kind() != GateKind::Cnot || b.kind() != GateKind::Cnot {
        return false;
    }
    match shared[..] {
        [q] => {
            let (ra, rb) = (cnot_role(a, q), cnot_role(b, q));
            ra == rb
        }
        _ => false,
    }
}

/// Dependency DAG over the gates of a circuit, consumed vertex by vertex.
#[derive(Debug, Clone)]
pub struct CircuitDag {
    gates: Vec<Gate>,
    preds: Vec<Vec<usize>>,
    succs: Vec<Vec<usize>>,
    pending_in: Vec<u32>,
    removed: Vec<bool>,
    ready: BTreeSet<usize>,
    live: usize,
}

#[derive(Default)]
struct QubitHistory {
    /// Gates of the segment before the current one.
    prev: Vec<usize>,
    /// Current segment: one non-commuting gate, or a run of CNOTs that all
    /// use this qubit in the same role.
    cur: Vec<usize>,
    role: Option<Role>,
}

pub fn build_dag(c: &Circuit, rules: DagRules) -> Result<CircuitDag> {
    let mut gates = Vec::with_capacity(c.instructions().len());
    for (pos, instr) in c.instructions().iter().enumerate() {
        match instr {
            Instruction::Gate(g) => gates.push(g.clone()),
            Instruction::Permute(_) => return Err(Error::UnexpectedPermute(pos)),
        }
    }
    Ok(CircuitDag::from_gates(gates, c.num_qubits(), rules))
}

impl CircuitDag {
    fn from_gates(gates: Vec<Gate>, num_qubits: usize, rules: DagRules) -> Self {
        let count = gates.len();
        let mut history: Vec<QubitHistory> =
            (0..num_qubits).map(|_| QubitHistory::default()).collect();
        let mut preds: Vec<Vec<usize>> = Vec::with_capacity(count);
        let mut succs: Vec<Vec<usize>> = vec![Vec::new(); count];
        let mut candidates = Vec::new();
        let mut visited = HashSet::new();
        let mut stack = Vec::new();

        for (v, gate) in gates.iter().enumerate() {
            candidates.clear();
            for q in gate.qubits() {
                let h = &mut history[q];
                let role = cnot_role(gate, q);
                let joins_run = rules == DagRules::Full
                    && role != Role::Other
                    && h.role == Some(role)
                    && !h.cur.is_empty();
                if joins_run {
                    candidates.extend_from_slice(&h.prev);
                    candidates.extend(
                        h.cur
                            .iter()
                            .copied()
                            .filter(|&u| !commutes(&gates[u], gate, rules)),
                    );
                    h.cur.push(v);
                } else {
                    candidates.extend_from_slice(&h.cur);
                    h.prev = std::mem::replace(&mut h.cur, vec![v]);
                    h.role = Some(if rules == DagRules::Full {
                        role
                    } else {
                        Role::Other
                    });
                }
            }
            candidates.sort_unstable_by(|a, b| b.cmp(a));
            candidates.dedup();

            // Transitive reduction: walk ancestors of kept candidates,
            // newest first, never below the oldest candidate.
            let floor = candidates.last().copied().unwrap_or(0);
            visited.clear();
            let mut kept = Vec::new();
            for &u in &candidates {
                if visited.contains(&u) {
                    continue;
                }
                kept.push(u);
                stack.push(u);
                while let Some(w) = stack.pop() {
                    for &a in &preds[w] {
                        if a >= floor && visited.insert(a) {
                            stack.push(a);
                        }
                    }
                }
            }
            kept.reverse();
            for &u in &kept {
                succs[u].push(v);
            }
            preds.push(kept);
        }

        let pending_in: Vec<u32> = preds.iter().map(|p| p.len() as u32).collect();
        let ready = (0..count).filter(|&v| pending_in[v] == 0).collect();
        Self {
            gates,
            preds,
            succs,
            pending_in,
            removed: vec![false; count],
            ready,
            live: count,
        }
    }

    /// Number of vertices not yet removed.
    pub fn len(&self) -> usize {
        self.live
    }

    pub fn is_empty(&self) -> bool {
        self.live == 0
    }

    /// Number of vertices the graph was built with.
    pub fn num_gates(&self) -> usize {
        self.gates.len()
    }

    pub fn gate(&self, id: usize) -> &Gate {
        &self.gates[id]
    }

    pub fn predecessors(&self, id: usize) -> &[usize] {
        &self.preds[id]
    }

    pub fn successors(&self, id: usize) -> &[usize] {
        &self.succs[id]
    }

    /// Incoming edges from vertices not yet removed.
    pub fn pending_in_degree(&self, id: usize) -> u32 {
        self.pending_in[id]
    }

    pub fn is_removed(&self, id: usize) -> bool {
        self.removed[id]
    }

    /// All edges of the build, including those of removed vertices.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.succs
            .iter()
            .enumerate()
            .flat_map(|(u, s)| s.iter().map(move |&v| (u, v)))
    }

    pub fn num_edges(&self) -> usize {
        self.succs.iter().map(Vec::len).sum()
    }

    /// Ready vertices in original circuit order.
    pub fn ready(&self) -> &BTreeSet<usize> {
        &self.ready
    }

    pub fn ready_vertices(&self) -> Vec<usize> {
        self.ready.iter().copied().collect()
    }

    pub fn is_ready(&self, id: usize) -> bool {
        self.ready.contains(&id)
    }

    /// Removes a ready vertex, releasing its successors.
    pub fn remove_vertex(&mut self, id: usize) -> Result<()> {
        if !self.ready.remove(&id) {
            return Err(Error::NotReady(id));
        }
        self.removed[id] = true;
        self.live -= 1;
        for &s in &self.succs[id] {
            self.pending_in[s] -= 1;
            if self.pending_in[s] == 0 {
                self.ready.insert(s);
            }
        }
        Ok(())
    }

    /// Graphviz rendering of the full graph.
    pub fn to_dot(&self) -> String {
        let mut out = String::from("digraph circuit {\n");
        for (v, g) in self.gates.iter().enumerate() {
            let _ = writeln!(out, "  g{v} [label=\"{v}: {g}\"];");
        }
        for (u, v) in self.edges() {
            let _ = writeln!(out, "  g{u} -> g{v};");
        }
        out.push_str("}\n");
        out
    }
}
