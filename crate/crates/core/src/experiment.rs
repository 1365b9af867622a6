//! Sweeps over families of random circuits.
//!
//! Each cell of a sweep generates one circuit, compiles it, and records the
//! communicating fraction and estimated time before and after. Nothing here
//! allocates amplitudes, so sweeps reach sizes a state vector cannot.
//!
//! Seeds for the circuits of a sweep point are `base_seed + index`.

use std::fmt::Write as _;
use std::time::Instant;

use rayon::prelude::*;

use crate::circuit::RandomCircuitSpec;
use crate::compiler::{comm_gate_fraction, compile, CountMode, PassConfig};
use crate::costmodel::{estimate_reduction, CostModel};
use crate::dag::DagRules;
use crate::error::{Error, Result};
use crate::layout::ShardConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sweep {
    /// Vary the two-qubit gate probability.
    P,
    /// Vary the share of global qubits at fixed width.
    GlobalFrac,
    /// Vary the width at a fixed global share.
    N,
}

impl Sweep {
    pub fn name(self) -> &'static str {
        match self {
            Sweep::P => "p",
            Sweep::GlobalFrac => "globalfrac",
            Sweep::N => "n",
        }
    }
}

/// One point of a sweep; `param` is the swept value as reported.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepPoint {
    pub param: f64,
    pub num_qubits: usize,
    pub num_global: usize,
    pub p: f64,
    pub gates: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentSpec {
    pub sweep: Sweep,
    pub points: Vec<SweepPoint>,
    pub seeds: usize,
    pub base_seed: u64,
    pub count_mode: CountMode,
    pub dag_rules: DagRules,
}

/// Number of gates used when none is given: thirty per qubit.
pub fn default_gates(num_qubits: usize) -> usize {
    30 * num_qubits
}

impl ExperimentSpec {
    fn with_points(sweep: Sweep, points: Vec<SweepPoint>) -> Result<Self> {
        let spec = Self {
            sweep,
            points,
            seeds: 20,
            base_seed: 0,
            count_mode: CountMode::default(),
            dag_rules: DagRules::default(),
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn p_sweep(
        num_qubits: usize,
        num_global: usize,
        ps: &[f64],
        gates: Option<usize>,
    ) -> Result<Self> {
        let gates = gates.unwrap_or_else(|| default_gates(num_qubits));
        let points = ps
            .iter()
            .map(|&p| SweepPoint {
                param: p,
                num_qubits,
                num_global,
                p,
                gates,
            })
            .collect();
        Self::with_points(Sweep::P, points)
    }

    /// `fracs` are shares of global qubits; each is rounded to a whole
    /// qubit count.
    pub fn global_frac_sweep(
        num_qubits: usize,
        fracs: &[f64],
        p: f64,
        gates: Option<usize>,
    ) -> Result<Self> {
        let gates = gates.unwrap_or_else(|| default_gates(num_qubits));
        let points = fracs
            .iter()
            .map(|&f| SweepPoint {
                param: f,
                num_qubits,
                num_global: (f * num_qubits as f64).round() as usize,
                p,
                gates,
            })
            .collect();
        Self::with_points(Sweep::GlobalFrac, points)
    }

    /// Global qubit count per width is `round(n · global_share)`.
    pub fn n_sweep(ns: &[usize], global_share: f64, p: f64, gates: Option<usize>) -> Result<Self> {
        let points = ns
            .iter()
            .map(|&n| SweepPoint {
                param: n as f64,
                num_qubits: n,
                num_global: (global_share * n as f64).round() as usize,
                p,
                gates: gates.unwrap_or_else(|| default_gates(n)),
            })
            .collect();
        Self::with_points(Sweep::N, points)
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |m: String| Err(Error::InvalidExperiment(m));
        if self.points.is_empty() {
            return fail("sweep has no points".into());
        }
        if self.seeds == 0 {
            return fail("at least one seed is required".into());
        }
        for pt in &self.points {
            if pt.gates == 0 {
                return fail("gate count must be at least 1".into());
            }
            if !(0.0..=1.0).contains(&pt.p) {
                return fail(format!("p = {} outside [0, 1]", pt.p));
            }
            if pt.num_global >= pt.num_qubits {
                return fail(format!(
                    "{} global qubits leave none local out of {}",
                    pt.num_global, pt.num_qubits
                ));
            }
            if pt.num_qubits < 2 && pt.p > 0.0 {
                return fail("two-qubit gates need at least 2 qubits".into());
            }
        }
        Ok(())
    }
}

/// Result for one `(point, seed)` cell.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CellResult {
    pub param: f64,
    pub seed: u64,
    pub frac_orig: f64,
    pub frac_opt: f64,
    pub t_orig: f64,
    pub t_opt: f64,
    pub reduction: f64,
    pub permutes: usize,
    pub runtime_ms: f64,
}

pub fn run_cell(
    point: &SweepPoint,
    seed: u64,
    spec: &ExperimentSpec,
    model: &(dyn CostModel + Sync),
) -> Result<CellResult> {
    let start = Instant::now();
    let circuit = RandomCircuitSpec {
        num_qubits: point.num_qubits,
        num_gates: point.gates,
        p: point.p,
        seed,
    }
    .generate()?;
    let shards = ShardConfig::with_local(point.num_qubits, point.num_qubits - point.num_global)?;
    let pc = PassConfig {
        shards,
        count_mode: spec.count_mode,
        dag_rules: spec.dag_rules,
    };
    let compiled = compile(&circuit, &pc)?;
    let est = estimate_reduction(&circuit, &compiled.circuit, &shards, model)?;
    Ok(CellResult {
        param: point.param,
        seed,
        frac_orig: comm_gate_fraction(&circuit, &shards),
        frac_opt: comm_gate_fraction(&compiled.circuit, &shards),
        t_orig: est.t_orig,
        t_opt: est.t_opt,
        reduction: est.reduction,
        permutes: compiled.num_permutes(),
        runtime_ms: start.elapsed().as_secs_f64() * 1e3,
    })
}

/// Runs every cell, in parallel; results come back ordered by point, then
/// seed.
pub fn run(spec: &ExperimentSpec, model: &(dyn CostModel + Sync)) -> Result<Vec<CellResult>> {
    spec.validate()?;
    let cells: Vec<(usize, u64)> = (0..spec.points.len())
        .flat_map(|i| (0..spec.seeds as u64).map(move |s| (i, spec.base_seed + s)))
        .collect();
    cells
        .par_iter()
        .map(|&(i, seed)| run_cell(&spec.points[i], seed, spec, model))
        .collect()
}

/// Mean and sample standard deviation of each column for one sweep point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PointSummary {
    pub param: f64,
    /// Permute columns are left at 0 here; see `permutes_mean`.
    pub mean: CellResult,
    pub std: CellResult,
    pub permutes_mean: f64,
    pub permutes_std: f64,
}

fn mean_std(values: impl Iterator<Item = f64> + Clone) -> (f64, f64) {
    let n = values.clone().count() as f64;
    let mean = values.clone().sum::<f64>() / n;
    let var = if n > 1.0 {
        values.map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)
    } else {
        0.0
    };
    (mean, var.sqrt())
}

/// Groups consecutive cells with the same `param`.
pub fn summarize(cells: &[CellResult]) -> Vec<PointSummary> {
    let mut out = Vec::new();
    let mut start = 0;
    while start < cells.len() {
        let param = cells[start].param;
        let end = start
            + cells[start..]
                .iter()
                .take_while(|c| c.param == param)
                .count();
        let group = &cells[start..end];
        let col = |f: fn(&CellResult) -> f64| mean_std(group.iter().map(f));
        let fields: [fn(&CellResult) -> f64; 7] = [
            |c| c.frac_orig,
            |c| c.frac_opt,
            |c| c.t_orig,
            |c| c.t_opt,
            |c| c.reduction,
            |c| c.permutes as f64,
            |c| c.runtime_ms,
        ];
        let stats: Vec<(f64, f64)> = fields.iter().map(|f| col(*f)).collect();
        let build = |pick: fn(&(f64, f64)) -> f64| CellResult {
            param,
            seed: 0,
            frac_orig: pick(&stats[0]),
            frac_opt: pick(&stats[1]),
            t_orig: pick(&stats[2]),
            t_opt: pick(&stats[3]),
            reduction: pick(&stats[4]),
            permutes: 0,
            runtime_ms: pick(&stats[6]),
        };
        out.push(PointSummary {
            param,
            mean: build(|s| s.0),
            std: build(|s| s.1),
            permutes_mean: stats[5].0,
            permutes_std: stats[5].1,
        });
        start = end;
    }
    out
}

pub const CSV_COLUMNS: [&str; 9] = [
    "sweep_param",
    "seed",
    "frac_orig",
    "frac_opt",
    "t_orig",
    "t_opt",
    "reduction",
    "permutes",
    "runtime_ms",
];

/// Renders cells plus `mean`/`std` rows per point. With `timing` off the
/// runtime column is left empty so identical inputs give identical bytes.
pub fn to_csv(cells: &[CellResult], comment: &str, timing: bool) -> String {
    let mut out = String::new();
    for line in comment.lines() {
        let _ = writeln!(out, "# {line}");
    }
    out.push_str(&CSV_COLUMNS.join(","));
    out.push('\n');
    let runtime = |ms: f64| {
        if timing {
            format!("{ms:.3}")
        } else {
            String::new()
        }
    };
    for c in cells {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{}",
            c.param,
            c.seed,
            c.frac_orig,
            c.frac_opt,
            c.t_orig,
            c.t_opt,
            c.reduction,
            c.permutes,
            runtime(c.runtime_ms)
        );
    }
    for s in summarize(cells) {
        for (label, row, permutes) in [
            ("mean", &s.mean, s.permutes_mean),
            ("std", &s.std, s.permutes_std),
        ] {
            let _ = writeln!(
                out,
                "{},{label},{},{},{},{},{},{permutes},{}",
                s.param,
                row.frac_orig,
                row.frac_opt,
                row.t_orig,
                row.t_opt,
                row.reduction,
                runtime(row.runtime_ms)
            );
        }
    }
    out
}

/// Spearman rank correlation with average ranks for ties.
pub fn spearman(xs: &[f64], ys: &[f64]) -> f64 {
    fn ranks(v: &[f64]) -> Vec<f64> {
        let mut idx: Vec<usize> = (0..v.len()).collect();
        idx.sort_by(|&a, &b| v[a].total_cmp(&v[b]));
        let mut r = vec![0.0; v.len()];
        let mut i = 0;
        while i < idx.len() {
            let mut j = i;
            while j + 1 < idx.len() && v[idx[j + 1]] == v[idx[i]] {
                j += 1;
            }
            let avg = (i + j) as f64 / 2.0 + 1.0;
            for &k in &idx[i..=j] {
                r[k] = avg;
            }
            i = j + 1;
        }
        r
    }
    assert_eq!(xs.len(), ys.len());
    let (rx, ry) = (ranks(xs), ranks(ys));
    let n = xs.len() as f64;
    let (mx, my) = (rx.iter().sum::<f64>() / n, ry.iter().sum::<f64>() / n);
    let cov: f64 = rx.iter().zip(&ry).map(|(a, b)| (a - mx) * (b - my)).sum();
    let vx: f64 = rx.iter().map(|a| (a - mx).powi(2)).sum();
    let vy: f64 = ry.iter().map(|b| (b - my).powi(2)).sum();
    cov / (vx * vy).sqrt()
}
