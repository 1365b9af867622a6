//! Simulated-time estimation by summing per-instruction costs.
//!
//! Cost table CSV (no header, `#` comments):
//!
//! ```text
//! 1q,<position>,<cost>
//! 2q,<control position>,<target position>,<cost>
//! swap,<position a>,<position b>,<cost>
//! reorder,local,<cost>
//! reorder,global,<cost>
//! ```
//!
//! The width `n` is one more than the largest position mentioned; every
//! position, every ordered control/target pair and every unordered swap
//! pair must then be present exactly once.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::Path;

use crate::circuit::{Circuit, Gate, Instruction};
use crate::error::{Error, Result};
use crate::layout::{
    decompose_permutation, needs_communication, permutation_distance, QubitPermutation, ShardConfig,
};

pub trait CostModel {
    fn gate_cost(&self, gate: &Gate, layout: &QubitPermutation, cfg: &ShardConfig) -> Result<f64>;

    fn permute_cost(
        &self,
        from: &QubitPermutation,
        to: &QubitPermutation,
        cfg: &ShardConfig,
    ) -> Result<f64>;
}

/// Two-level model: a local cost and a communication overhead factor.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepCostModel {
    t_local: f64,
    overhead: f64,
}

impl Default for StepCostModel {
    fn default() -> Self {
        Self {
            t_local: 1.0,
            overhead: 8.0,
        }
    }
}

impl StepCostModel {
    pub fn new(t_local: f64, overhead: f64) -> Result<Self> {
        if !(t_local > 0.0 && t_local.is_finite()) {
            return Err(Error::CostTable(format!(
                "local cost {t_local} must be positive"
            )));
        }
        if !(overhead >= 1.0 && overhead.is_finite()) {
            return Err(Error::CostTable(format!(
                "overhead {overhead} must be at least 1"
            )));
        }
        Ok(Self { t_local, overhead })
    }

    pub fn with_overhead(overhead: f64) -> Result<Self> {
        Self::new(1.0, overhead)
    }

    pub fn t_local(&self) -> f64 {
        self.t_local
    }

    pub fn overhead(&self) -> f64 {
        self.overhead
    }

    fn t_global(&self) -> f64 {
        self.overhead * self.t_local
    }
}

impl CostModel for StepCostModel {
    fn gate_cost(&self, gate: &Gate, layout: &QubitPermutation, cfg: &ShardConfig) -> Result<f64> {
        Ok(if needs_communication(gate, layout, cfg) {
            self.t_global()
        } else {
            self.t_local
        })
    }

    fn permute_cost(
        &self,
        from: &QubitPermutation,
        to: &QubitPermutation,
        cfg: &ShardConfig,
    ) -> Result<f64> {
        let d = permutation_distance(from, to, cfg)?;
        let mut cost = 0.0;
        if d.local_changed {
            cost += self.t_local;
        }
        if d.global_changed {
            cost += self.t_global();
        }
        Ok(cost + self.t_global() * d.num_pairs as f64)
    }
}

/// Placement-resolved costs, typically measured.
#[derive(Debug, Clone, PartialEq)]
pub struct TableCostModel {
    num_qubits: usize,
    one_qubit: Vec<f64>,
    /// `control * n + target`; the unused diagonal holds 0.
    two_qubit: Vec<f64>,
    /// Symmetric, `a * n + b`.
    swap: Vec<f64>,
    local_reorder: f64,
    global_reorder: f64,
}

impl TableCostModel {
    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn one_qubit_cost(&self, position: usize) -> Option<f64> {
        self.one_qubit.get(position).copied()
    }

    pub fn two_qubit_cost(&self, control: usize, target: usize) -> Option<f64> {
        let n = self.num_qubits;
        (control < n && target < n && control != target)
            .then(|| self.two_qubit[control * n + target])
    }

    pub fn swap_cost(&self, a: usize, b: usize) -> Option<f64> {
        let n = self.num_qubits;
        (a < n && b < n && a != b).then(|| self.swap[a * n + b])
    }

    /// The step model written out position by position for `cfg`.
    pub fn from_step(step: &StepCostModel, cfg: &ShardConfig) -> Self {
        let n = cfg.num_qubits();
        let cost = |global: bool| {
            if global {
                step.t_global()
            } else {
                step.t_local
            }
        };
        let global = |p: usize| !cfg.is_local_position(p);
        let mut two_qubit = vec![0.0; n * n];
        let mut swap = vec![0.0; n * n];
        for a in 0..n {
            for b in 0..n {
                if a != b {
                    two_qubit[a * n + b] = cost(global(b));
                    swap[a * n + b] = cost(global(a) != global(b));
                }
            }
        }
        Self {
            num_qubits: n,
            one_qubit: (0..n).map(|p| cost(global(p))).collect(),
            two_qubit,
            swap,
            local_reorder: step.t_local,
            global_reorder: step.t_global(),
        }
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::CostTable(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(false)
            .flexible(true)
            .comment(Some(b'#'))
            .trim(csv::Trim::All)
            .from_reader(text.as_bytes());

        let mut one: HashMap<usize, f64> = HashMap::new();
        let mut two: HashMap<(usize, usize), f64> = HashMap::new();
        let mut swap: HashMap<(usize, usize), f64> = HashMap::new();
        let mut reorder: HashMap<&'static str, f64> = HashMap::new();
        let mut width = 0usize;

        for (row_idx, record) in reader.records().enumerate() {
            let record = record.map_err(|e| Error::CostTable(e.to_string()))?;
            let line = record.position().map_or(row_idx + 1, |p| p.line() as usize);
            let fail = |msg: String| Error::CostTable(format!("line {line}: {msg}"));
            let fields: Vec<&str> = record.iter().collect();
            let pos = |s: &str| {
                s.parse::<usize>()
                    .map_err(|_| fail(format!("bad position `{s}`")))
            };
            let cost = |s: &str| -> Result<f64> {
                let v = s
                    .parse::<f64>()
                    .map_err(|_| fail(format!("bad cost `{s}`")))?;
                if v > 0.0 && v.is_finite() {
                    Ok(v)
                } else {
                    Err(fail(format!("cost {v} must be positive and finite")))
                }
            };
            let duplicate = || fail("duplicate entry".into());
            match fields.as_slice() {
                ["1q", p, c] => {
                    let p = pos(p)?;
                    width = width.max(p + 1);
                    if one.insert(p, cost(c)?).is_some() {
                        return Err(duplicate());
                    }
                }
                ["2q", a, b, c] => {
                    let (a, b) = (pos(a)?, pos(b)?);
                    if a == b {
                        return Err(fail("control and target positions coincide".into()));
                    }
                    width = width.max(a.max(b) + 1);
                    if two.insert((a, b), cost(c)?).is_some() {
                        return Err(duplicate());
                    }
                }
                ["swap", a, b, c] => {
                    let (a, b) = (pos(a)?, pos(b)?);
                    if a == b {
                        return Err(fail("swap positions coincide".into()));
                    }
                    width = width.max(a.max(b) + 1);
                    if swap.insert((a.min(b), a.max(b)), cost(c)?).is_some() {
                        return Err(duplicate());
                    }
                }
                ["reorder", which @ ("local" | "global"), c] => {
                    let key = if *which == "local" { "local" } else { "global" };
                    if reorder.insert(key, cost(c)?).is_some() {
                        return Err(duplicate());
                    }
                }
                _ => return Err(fail(format!("unrecognized row `{}`", fields.join(",")))),
            }
        }

        let n = width;
        if n == 0 {
            return Err(Error::CostTable("table defines no positions".into()));
        }
        let missing = |what: String| Error::CostTable(format!("missing entry for {what}"));
        let mut one_qubit = Vec::with_capacity(n);
        for p in 0..n {
            one_qubit.push(
                *one.get(&p)
                    .ok_or_else(|| missing(format!("1q position {p}")))?,
            );
        }
        let mut two_qubit = vec![0.0; n * n];
        let mut swap_table = vec![0.0; n * n];
        for a in 0..n {
            for b in 0..n {
                if a == b {
                    continue;
                }
                two_qubit[a * n + b] = *two
                    .get(&(a, b))
                    .ok_or_else(|| missing(format!("2q control {a} target {b}")))?;
                swap_table[a * n + b] = *swap
                    .get(&(a.min(b), a.max(b)))
                    .ok_or_else(|| missing(format!("swap {} {}", a.min(b), a.max(b))))?;
            }
        }
        let local_reorder = *reorder
            .get("local")
            .ok_or_else(|| missing("reorder local".into()))?;
        let global_reorder = *reorder
            .get("global")
            .ok_or_else(|| missing("reorder global".into()))?;
        Ok(Self {
            num_qubits: n,
            one_qubit,
            two_qubit,
            swap: swap_table,
            local_reorder,
            global_reorder,
        })
    }

    pub fn to_csv(&self) -> String {
        let n = self.num_qubits;
        let mut out = String::new();
        for (p, c) in self.one_qubit.iter().enumerate() {
            let _ = writeln!(out, "1q,{p},{c}");
        }
        for a in 0..n {
            for b in 0..n {
                if a != b {
                    let _ = writeln!(out, "2q,{a},{b},{}", self.two_qubit[a * n + b]);
                }
            }
        }
        for a in 0..n {
            for b in a + 1..n {
                let _ = writeln!(out, "swap,{a},{b},{}", self.swap[a * n + b]);
            }
        }
        let _ = writeln!(out, "reorder,local,{}", self.local_reorder);
        let _ = writeln!(out, "reorder,global,{}", self.global_reorder);
        out
    }

    fn check_width(&self, cfg: &ShardConfig) -> Result<()> {
        if cfg.num_qubits() > self.num_qubits {
            return Err(Error::CostTable(format!(
                "table covers {} positions, circuit needs {}",
                self.num_qubits,
                cfg.num_qubits()
            )));
        }
        Ok(())
    }
}

impl CostModel for TableCostModel {
    fn gate_cost(&self, gate: &Gate, layout: &QubitPermutation, cfg: &ShardConfig) -> Result<f64> {
        self.check_width(cfg)?;
        let t = layout.position(gate.target());
        let found = match gate.control() {
            None => self.one_qubit_cost(t),
            Some(c) => self.two_qubit_cost(layout.position(c), t),
        };
        found.ok_or_else(|| {
            Error::CostTable(format!("no entry for gate `{gate}` at target position {t}"))
        })
    }

    fn permute_cost(
        &self,
        from: &QubitPermutation,
        to: &QubitPermutation,
        cfg: &ShardConfig,
    ) -> Result<f64> {
        self.check_width(cfg)?;
        let steps = decompose_permutation(from, to, cfg)?;
        let mut cost = 0.0;
        if steps.local_changed(from) {
            cost += self.local_reorder;
        }
        if steps.global_changed() {
            cost += self.global_reorder;
        }
        for &(l, g) in &steps.exchanges {
            cost += self
                .swap_cost(l, g)
                .ok_or_else(|| Error::CostTable(format!("no swap entry for {l} {g}")))?;
        }
        Ok(cost)
    }
}

/// Cost of one instruction executed while `layout` is in effect.
pub fn instruction_cost(
    instr: &Instruction,
    layout: &QubitPermutation,
    cfg: &ShardConfig,
    model: &dyn CostModel,
) -> Result<f64> {
    match instr {
        Instruction::Gate(g) => model.gate_cost(g, layout, cfg),
        Instruction::Permute(p) => model.permute_cost(layout, p, cfg),
    }
}

/// Sum of instruction costs, starting from the identity layout.
pub fn estimate_circuit(
    circuit: &Circuit,
    cfg: &ShardConfig,
    model: &dyn CostModel,
) -> Result<f64> {
    estimate_from(
        circuit,
        &QubitPermutation::identity(circuit.num_qubits()),
        cfg,
        model,
    )
    .map(|(t, _)| t)
}

/// Sum of instruction costs starting from `layout`; also returns the layout
/// in effect afterwards.
pub fn estimate_from(
    circuit: &Circuit,
    layout: &QubitPermutation,
    cfg: &ShardConfig,
    model: &dyn CostModel,
) -> Result<(f64, QubitPermutation)> {
    let mut layout = layout.clone();
    let mut total = 0.0;
    for instr in circuit.instructions() {
        total += instruction_cost(instr, &layout, cfg, model)?;
        if let Instruction::Permute(p) = instr {
            layout = p.clone();
        }
    }
    Ok((total, layout))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeEstimate {
    pub t_orig: f64,
    pub t_opt: f64,
    /// `1 − t_opt / t_orig`.
    pub reduction: f64,
}

impl TimeEstimate {
    pub fn new(t_orig: f64, t_opt: f64) -> Self {
        Self {
            t_orig,
            t_opt,
            reduction: 1.0 - t_opt / t_orig,
        }
    }
}

pub fn estimate_reduction(
    original: &Circuit,
    optimized: &Circuit,
    cfg: &ShardConfig,
    model: &dyn CostModel,
) -> Result<TimeEstimate> {
    Ok(TimeEstimate::new(
        estimate_circuit(original, cfg, model)?,
        estimate_circuit(optimized, cfg, model)?,
    ))
}

/// Closed-form reduction of the step model for circuits whose communicating
/// fractions are `f_orig` and `f_opt` of the original gate count.
pub fn step_reduction(f_orig: f64, f_opt: f64, overhead: f64) -> f64 {
    1.0 - ((1.0 - f_opt) + f_opt * overhead) / ((1.0 - f_orig) + f_orig * overhead)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg() -> ShardConfig {
        ShardConfig::with_local(4, 2).unwrap()
    }

    #[test]
    fn step_gate_costs() {
        let model = StepCostModel::default();
        let id = QubitPermutation::identity(4);
        assert_eq!(model.gate_cost(&Gate::h(0), &id, &cfg()).unwrap(), 1.0);
        assert_eq!(model.gate_cost(&Gate::h(3), &id, &cfg()).unwrap(), 8.0);
        assert_eq!(
            model.gate_cost(&Gate::cnot(3, 0), &id, &cfg()).unwrap(),
            1.0
        );
    }

    #[test]
    fn step_permute_cost_single_pair() {
        let model = StepCostModel::default();
        let id = QubitPermutation::identity(4);
        let to = id.with_positions_swapped(1, 2);
        assert_eq!(model.permute_cost(&id, &to, &cfg()).unwrap(), 8.0);
        assert_eq!(model.permute_cost(&id, &id, &cfg()).unwrap(), 0.0);
        let local_only = id.with_positions_swapped(0, 1);
        assert_eq!(model.permute_cost(&id, &local_only, &cfg()).unwrap(), 1.0);
        let global_only = id.with_positions_swapped(2, 3);
        assert_eq!(model.permute_cost(&id, &global_only, &cfg()).unwrap(), 8.0);
    }

    #[test]
    fn step_validation() {
        assert!(StepCostModel::new(0.0, 8.0).is_err());
        assert!(StepCostModel::new(1.0, 0.5).is_err());
        assert!(StepCostModel::new(1.0, f64::NAN).is_err());
    }

    #[test]
    fn local_gates_sum() {
        let c = Circuit::from_gates(4, (0..10).map(|i| Gate::h(i % 2))).unwrap();
        assert_eq!(
            estimate_circuit(&c, &cfg(), &StepCostModel::default()).unwrap(),
            10.0
        );
    }

    #[test]
    fn worked_instance_at_overhead_eight() {
        let r = step_reduction(0.2, 0.035, 8.0);
        assert!((r - 0.48125).abs() < 1e-12, "{r}");
    }

    #[test]
    fn table_round_trip_and_equivalence() {
        let step = StepCostModel::default();
        let table = TableCostModel::from_step(&step, &cfg());
        let back = TableCostModel::parse(&table.to_csv()).unwrap();
        assert_eq!(back.to_csv(), table.to_csv());
        let id = QubitPermutation::identity(4);
        let to = QubitPermutation::from_map(vec![2, 3, 1, 0]).unwrap();
        assert_eq!(
            back.permute_cost(&id, &to, &cfg()).unwrap(),
            step.permute_cost(&id, &to, &cfg()).unwrap()
        );
    }

    #[test]
    fn table_errors() {
        let table = TableCostModel::from_step(&StepCostModel::default(), &cfg()).to_csv();
        let without = |needle: &str| {
            table
                .lines()
                .filter(|l| !l.starts_with(needle))
                .collect::<Vec<_>>()
                .join("\n")
        };
        let e = TableCostModel::parse(&without("1q,2,")).unwrap_err();
        assert_eq!(
            e,
            Error::CostTable("missing entry for 1q position 2".into())
        );
        let e = TableCostModel::parse(&without("2q,3,1,")).unwrap_err();
        assert_eq!(
            e,
            Error::CostTable("missing entry for 2q control 3 target 1".into())
        );
        let e = TableCostModel::parse(&without("swap,0,3,")).unwrap_err();
        assert_eq!(e, Error::CostTable("missing entry for swap 0 3".into()));
        assert!(TableCostModel::parse(&without("reorder,global")).is_err());
        assert!(TableCostModel::parse(&format!("{table}1q,0,1\n")).is_err());
        assert!(TableCostModel::parse(&table.replace("1q,0,1", "1q,0,-1")).is_err());
        assert!(TableCostModel::parse(&table.replace("1q,0,1", "1q,0,x")).is_err());
        assert!(TableCostModel::parse(&format!("{table}bogus,1\n")).is_err());
        assert!(TableCostModel::parse("").is_err());
    }

    #[test]
    fn table_too_narrow() {
        let table = TableCostModel::from_step(&StepCostModel::default(), &cfg());
        let wide = ShardConfig::with_local(6, 4).unwrap();
        let id = QubitPermutation::identity(6);
        assert!(table.gate_cost(&Gate::h(5), &id, &wide).is_err());
    }
}
