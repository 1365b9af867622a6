//! Execution backends.
//!
//! [`ShardedState`] holds `k` shard buffers of `2^m` amplitudes; shard `r`
//! stores vector indices `r·2^m .. (r+1)·2^m`. Any amplitude that has to
//! cross a shard boundary is counted as communication. [`CountingState`]
//! performs the same bookkeeping without storing amplitudes, and
//! [`DenseState`] is a single-buffer reference in identity layout.

use rayon::prelude::*;

use crate::circuit::{Circuit, Gate, Instruction, Matrix2};
use crate::error::{Error, Result};
use crate::layout::{
    decompose_permutation, needs_communication, PermuteSteps, QubitPermutation, ShardConfig,
};
use crate::C64;

/// Largest register [`ShardedState`] allocates by default.
pub const MAX_FULL_QUBITS: usize = 30;
/// Largest register the dense reference accepts.
pub const MAX_DENSE_QUBITS: usize = 14;
/// Largest register whose traffic [`CountingState`] can account in bytes.
pub const MAX_COUNTING_QUBITS: usize = 120;

const AMPLITUDE_BYTES: u128 = std::mem::size_of::<C64>() as u128;
/// Below this many amplitudes per shard the kernels stay single-threaded.
const PARALLEL_THRESHOLD: usize = 1 << 14;
/// Smallest slice handed to one worker.
const PARALLEL_BLOCK: usize = 1 << 12;

/// Communication and execution counters. All fields only ever grow.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct CommStats {
    pub gates_local: u64,
    pub gates_comm: u64,
    pub local_reorders: u64,
    pub global_reorders: u64,
    pub pair_exchanges: u64,
    pub bytes_crossed: u128,
}

impl CommStats {
    pub const FIELDS: [&'static str; 6] = [
        "gates_local",
        "gates_comm",
        "local_reorders",
        "global_reorders",
        "pair_exchanges",
        "bytes_crossed",
    ];

    pub fn values(&self) -> [u128; 6] {
        [
            self.gates_local.into(),
            self.gates_comm.into(),
            self.local_reorders.into(),
            self.global_reorders.into(),
            self.pair_exchanges.into(),
            self.bytes_crossed,
        ]
    }

    /// `key=value` lines.
    pub fn to_key_values(&self) -> String {
        Self::FIELDS
            .iter()
            .zip(self.values())
            .map(|(k, v)| format!("{k}={v}\n"))
            .collect()
    }

    fn record_gate(&mut self, gate: &Gate, sigma: &QubitPermutation, cfg: &ShardConfig) {
        if !needs_communication(gate, sigma, cfg) {
            self.gates_local += 1;
            return;
        }
        self.gates_comm += 1;
        let n = cfg.num_qubits() as u32;
        // Every amplitude crosses unless a control halves the active set.
        let moved = if gate.control().is_some() {
            1u128 << (n - 1)
        } else {
            1u128 << n
        };
        self.bytes_crossed += moved * AMPLITUDE_BYTES;
    }

    fn record_permute(&mut self, from: &QubitPermutation, steps: &PermuteSteps, cfg: &ShardConfig) {
        if steps.local_changed(from) {
            self.local_reorders += 1;
        }
        if steps.global_changed() {
            self.global_reorders += 1;
            let displaced = shard_relabeling(&steps.after_local, &steps.after_global, cfg)
                .iter()
                .enumerate()
                .filter(|(r, &to)| *r as u64 != to)
                .count() as u128;
            self.bytes_crossed += displaced * (1u128 << cfg.num_local()) * AMPLITUDE_BYTES;
        }
        let pairs = steps.exchanges.len() as u128;
        self.pair_exchanges += pairs as u64;
        // Half of every shard moves per exchanged pair.
        self.bytes_crossed += pairs * (1u128 << (cfg.num_qubits() - 1)) * AMPLITUDE_BYTES;
    }
}

/// New index of every shard when the global positions are relabeled
/// from `from` to `to`.
fn shard_relabeling(from: &QubitPermutation, to: &QubitPermutation, cfg: &ShardConfig) -> Vec<u64> {
    let m = cfg.num_local();
    let moves = from.transition_to(to);
    (0..cfg.num_shards())
        .map(|r| {
            let mut out = 0u64;
            for g in 0..cfg.num_global() {
                if r >> g & 1 == 1 {
                    out |= 1 << (moves[m + g] - m);
                }
            }
            out
        })
        .collect()
}

fn check_gate(gate: &Gate, n: usize) -> Result<()> {
    let q = gate.max_qubit();
    if q >= n {
        return Err(Error::QubitOutOfRange {
            qubit: q,
            num_qubits: n,
        });
    }
    Ok(())
}

/// Something a circuit can be run on.
pub trait Executor {
    fn apply_gate(&mut self, gate: &Gate) -> Result<()>;

    fn permute_qubits(&mut self, target: &QubitPermutation) -> Result<()>;

    fn apply_instruction(&mut self, instr: &Instruction) -> Result<()> {
        match instr {
            Instruction::Gate(g) => self.apply_gate(g),
            Instruction::Permute(p) => self.permute_qubits(p),
        }
    }

    fn run(&mut self, circuit: &Circuit) -> Result<()> {
        circuit
            .instructions()
            .iter()
            .try_for_each(|i| self.apply_instruction(i))
    }
}

#[inline]
fn mix(m: &Matrix2, a0: C64, a1: C64) -> (C64, C64) {
    (m[0][0] * a0 + m[0][1] * a1, m[1][0] * a0 + m[1][1] * a1)
}

/// Applies `m` to the pairs inside one buffer that differ at bit `t`,
/// restricted to indices with every bit of `need` set.
fn apply_in_buffer(buf: &mut [C64], m: &Matrix2, t: usize, need: usize) {
    let stride = 1usize << t;
    let kernel = |block: &mut [C64], start: usize| {
        for (c, chunk) in block.chunks_mut(2 * stride).enumerate() {
            let base = start + c * 2 * stride;
            let (lo, hi) = chunk.split_at_mut(stride);
            for (o, (a0, a1)) in lo.iter_mut().zip(hi.iter_mut()).enumerate() {
                if (base + o) & need == need {
                    (*a0, *a1) = mix(m, *a0, *a1);
                }
            }
        }
    };
    if buf.len() >= PARALLEL_THRESHOLD {
        let block = (2 * stride).max(PARALLEL_BLOCK);
        buf.par_chunks_mut(block)
            .enumerate()
            .for_each(|(b, chunk)| kernel(chunk, b * block));
    } else {
        kernel(buf, 0);
    }
}

/// Applies `m` across two shards holding the `0` and `1` halves of a global
/// target, restricted to offsets with every bit of `need` set.
fn apply_across(zero: &mut [C64], one: &mut [C64], m: &Matrix2, need: usize) {
    let kernel = |(o, (a0, a1)): (usize, (&mut C64, &mut C64))| {
        if o & need == need {
            (*a0, *a1) = mix(m, *a0, *a1);
        }
    };
    if zero.len() >= PARALLEL_THRESHOLD {
        zero.par_iter_mut()
            .zip(one.par_iter_mut())
            .enumerate()
            .with_min_len(PARALLEL_BLOCK)
            .for_each(kernel);
    } else {
        zero.iter_mut()
            .zip(one.iter_mut())
            .enumerate()
            .for_each(kernel);
    }
}

fn two_mut<T>(v: &mut [T], a: usize, b: usize) -> (&mut T, &mut T) {
    debug_assert!(a < b);
    let (lo, hi) = v.split_at_mut(b);
    (&mut lo[a], &mut hi[0])
}

/// A `2^n` state vector split into `k` shards under an explicit layout.
#[derive(Debug, Clone)]
pub struct ShardedState {
    cfg: ShardConfig,
    layout: QubitPermutation,
    shards: Vec<Vec<C64>>,
    stats: CommStats,
}

impl ShardedState {
    /// `|0…0⟩` in identity layout.
    pub fn new(cfg: ShardConfig) -> Result<Self> {
        Self::with_limit(cfg, MAX_FULL_QUBITS)
    }

    pub fn with_limit(cfg: ShardConfig, max_qubits: usize) -> Result<Self> {
        let n = cfg.num_qubits();
        if n > max_qubits || n >= usize::BITS as usize {
            return Err(Error::TooManyQubits {
                num_qubits: n,
                max: max_qubits,
            });
        }
        let shard_len = 1usize << cfg.num_local();
        let mut shards = vec![vec![C64::new(0.0, 0.0); shard_len]; cfg.num_shards() as usize];
        shards[0][0] = C64::new(1.0, 0.0);
        Ok(Self {
            cfg,
            layout: QubitPermutation::identity(n),
            shards,
            stats: CommStats::default(),
        })
    }

    /// Loads basis-ordered amplitudes in identity layout. The vector is taken
    /// as given; normalizing it is the caller's business.
    pub fn from_amplitudes(cfg: ShardConfig, amplitudes: &[C64]) -> Result<Self> {
        let mut state = Self::new(cfg)?;
        let n = cfg.num_qubits();
        if amplitudes.len() != 1 << n {
            return Err(Error::InvalidShardConfig(format!(
                "{} amplitudes given for {n} qubits",
                amplitudes.len()
            )));
        }
        let m = cfg.num_local();
        for (shard, chunk) in state.shards.iter_mut().zip(amplitudes.chunks(1 << m)) {
            shard.copy_from_slice(chunk);
        }
        Ok(state)
    }

    pub fn config(&self) -> &ShardConfig {
        &self.cfg
    }

    pub fn layout(&self) -> &QubitPermutation {
        &self.layout
    }

    pub fn stats(&self) -> &CommStats {
        &self.stats
    }

    pub fn shards(&self) -> &[Vec<C64>] {
        &self.shards
    }

    /// Amplitude of basis state `i`, whatever the current layout.
    pub fn read_amplitude(&self, i: usize) -> Result<C64> {
        let n = self.cfg.num_qubits();
        if i >> n != 0 {
            return Err(Error::IndexOutOfRange {
                index: i,
                num_qubits: n,
            });
        }
        let j = self.layout.amplitude_index(i);
        let m = self.cfg.num_local();
        Ok(self.shards[j >> m][j & ((1 << m) - 1)])
    }

    /// All amplitudes in basis (identity) order.
    pub fn amplitudes(&self) -> Vec<C64> {
        let n = self.cfg.num_qubits();
        (0..1usize << n)
            .map(|i| self.read_amplitude(i).expect("index in range"))
            .collect()
    }

    pub fn norm_sqr(&self) -> f64 {
        self.shards.iter().flatten().map(|a| a.norm_sqr()).sum()
    }

    fn step_local_reorder(&mut self, to: &QubitPermutation) {
        let m = self.cfg.num_local();
        let moves = self.layout.transition_to(to);
        let remap: Vec<usize> = (0..1usize << m)
            .map(|off| {
                let mut out = 0;
                for (p, &dest) in moves.iter().enumerate().take(m) {
                    out |= (off >> p & 1) << dest;
                }
                out
            })
            .collect();
        self.shards.par_iter_mut().for_each(|shard| {
            let mut next = vec![C64::new(0.0, 0.0); shard.len()];
            for (off, a) in shard.iter().enumerate() {
                next[remap[off]] = *a;
            }
            *shard = next;
        });
    }

    fn step_global_reorder(&mut self, to: &QubitPermutation) {
        let relabel = shard_relabeling(&self.layout, to, &self.cfg);
        let mut next: Vec<Vec<C64>> = vec![Vec::new(); self.shards.len()];
        for (r, shard) in self.shards.drain(..).enumerate() {
            next[relabel[r] as usize] = shard;
        }
        self.shards = next;
    }

    fn step_exchange(&mut self, local: usize, global: usize) {
        let m = self.cfg.num_local();
        let shard_bit = 1usize << (global - m);
        let lbit = 1usize << local;
        for r in 0..self.shards.len() {
            if r & shard_bit != 0 {
                continue;
            }
            let (zero, one) = two_mut(&mut self.shards, r, r | shard_bit);
            for off in 0..zero.len() {
                if off & lbit != 0 {
                    std::mem::swap(&mut zero[off], &mut one[off ^ lbit]);
                }
            }
        }
    }
}

impl Executor for ShardedState {
    fn apply_gate(&mut self, gate: &Gate) -> Result<()> {
        check_gate(gate, self.cfg.num_qubits())?;
        self.stats.record_gate(gate, &self.layout, &self.cfg);
        let m = self.cfg.num_local();
        let t = self.layout.position(gate.target());
        let ctl = gate.control().map(|c| self.layout.position(c));
        // Control on a local bit filters offsets; on a global bit it filters shards.
        let need_off = match ctl {
            Some(c) if c < m => 1usize << c,
            _ => 0,
        };
        let need_shard = match ctl {
            Some(c) if c >= m => 1usize << (c - m),
            _ => 0,
        };
        let matrix = gate.matrix();
        if t < m {
            self.shards
                .par_iter_mut()
                .enumerate()
                .filter(|(r, _)| r & need_shard == need_shard)
                .for_each(|(_, shard)| apply_in_buffer(shard, matrix, t, need_off));
        } else {
            let tbit = 1usize << (t - m);
            for r in 0..self.shards.len() {
                if r & tbit != 0 || r & need_shard != need_shard {
                    continue;
                }
                let (zero, one) = two_mut(&mut self.shards, r, r | tbit);
                apply_across(zero, one, matrix, need_off);
            }
        }
        Ok(())
    }

    fn permute_qubits(&mut self, target: &QubitPermutation) -> Result<()> {
        let steps = decompose_permutation(&self.layout, target, &self.cfg)?;
        self.stats.record_permute(&self.layout, &steps, &self.cfg);
        if steps.local_changed(&self.layout) {
            self.step_local_reorder(&steps.after_local);
            self.layout = steps.after_local.clone();
        }
        if steps.global_changed() {
            self.step_global_reorder(&steps.after_global);
            self.layout = steps.after_global.clone();
        }
        for &(l, g) in &steps.exchanges {
            self.step_exchange(l, g);
        }
        self.layout = target.clone();
        Ok(())
    }
}

/// Schedule and traffic bookkeeping without amplitudes.
#[derive(Debug, Clone)]
pub struct CountingState {
    cfg: ShardConfig,
    layout: QubitPermutation,
    stats: CommStats,
}

impl CountingState {
    pub fn new(cfg: ShardConfig) -> Result<Self> {
        if cfg.num_qubits() > MAX_COUNTING_QUBITS {
            return Err(Error::TooManyQubits {
                num_qubits: cfg.num_qubits(),
                max: MAX_COUNTING_QUBITS,
            });
        }
        Ok(Self {
            layout: QubitPermutation::identity(cfg.num_qubits()),
            cfg,
            stats: CommStats::default(),
        })
    }

    pub fn layout(&self) -> &QubitPermutation {
        &self.layout
    }

    pub fn stats(&self) -> &CommStats {
        &self.stats
    }
}

impl Executor for CountingState {
    fn apply_gate(&mut self, gate: &Gate) -> Result<()> {
        check_gate(gate, self.cfg.num_qubits())?;
        self.stats.record_gate(gate, &self.layout, &self.cfg);
        Ok(())
    }

    fn permute_qubits(&mut self, target: &QubitPermutation) -> Result<()> {
        let steps = decompose_permutation(&self.layout, target, &self.cfg)?;
        self.stats.record_permute(&self.layout, &steps, &self.cfg);
        self.layout = target.clone();
        Ok(())
    }
}

/// Single-buffer reference state in identity layout.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseState {
    num_qubits: usize,
    amplitudes: Vec<C64>,
}

impl DenseState {
    pub fn new(num_qubits: usize) -> Result<Self> {
        if num_qubits > MAX_DENSE_QUBITS {
            return Err(Error::TooManyQubits {
                num_qubits,
                max: MAX_DENSE_QUBITS,
            });
        }
        let mut amplitudes = vec![C64::new(0.0, 0.0); 1 << num_qubits];
        amplitudes[0] = C64::new(1.0, 0.0);
        Ok(Self {
            num_qubits,
            amplitudes,
        })
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amplitudes
    }

    pub fn apply_gate(&mut self, gate: &Gate) -> Result<()> {
        check_gate(gate, self.num_qubits)?;
        let t = gate.target();
        let m = gate.matrix();
        for i in 0..self.amplitudes.len() {
            if i >> t & 1 == 1 {
                continue;
            }
            if let Some(c) = gate.control() {
                if i >> c & 1 == 0 {
                    continue;
                }
            }
            let i1 = i | 1 << t;
            let (a0, a1) = (self.amplitudes[i], self.amplitudes[i1]);
            self.amplitudes[i] = m[0][0] * a0 + m[0][1] * a1;
            self.amplitudes[i1] = m[1][0] * a0 + m[1][1] * a1;
        }
        Ok(())
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum()
    }
}

/// Runs `circuit` on a [`DenseState`]. `PERMUTE` only relabels storage, so
/// it leaves the basis-ordered amplitudes untouched and is skipped here.
pub fn dense_reference_run(circuit: &Circuit) -> Result<DenseState> {
    let mut state = DenseState::new(circuit.num_qubits())?;
    for g in circuit.gates() {
        state.apply_gate(g)?;
    }
    Ok(state)
}

/// Largest `|α_i^sharded − α_i^dense|` over all basis states.
pub fn max_deviation(sharded: &ShardedState, dense: &DenseState) -> Result<f64> {
    if sharded.config().num_qubits() != dense.num_qubits() {
        return Err(Error::SizeMismatch {
            expected: dense.num_qubits(),
            found: sharded.config().num_qubits(),
        });
    }
    let mut worst = 0.0f64;
    for (i, d) in dense.amplitudes().iter().enumerate() {
        worst = worst.max((sharded.read_amplitude(i)? - d).norm());
    }
    Ok(worst)
}
