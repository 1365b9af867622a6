//! Sharded state-vector simulation with an explicit qubit layout.
//!
//! The state of `n` qubits is stored as `2^n` amplitudes split into `k`
//! contiguous shards. A [`QubitPermutation`] decides which bit of the stored
//! index each qubit occupies; qubits landing on the top `log2(k)` bits are
//! *global* and gates on them move data between shards. The [`compiler`]
//! module inserts `PERMUTE` instructions so that most gates run on local
//! qubits, and [`costmodel`] estimates what that buys.
//!
//! Modules, bottom-up:
//!
//! * [`layout`]: permutations, amplitude indexing, locality, and the
//!   three-step decomposition of a layout change.
//! * [`circuit`]: gates, circuits, the text format and the random generator.
//! * [`dag`]: commutation-aware dependency graph.
//! * [`simulator`]: sharded execution, counting-only execution and a dense
//!   reference.
//! * [`compiler`]: the greedy local-first scheduling pass.
//! * [`costmodel`]: per-instruction time estimation.
//! * [`experiment`]: sweeps over random circuits, emitted as CSV.

pub mod circuit;
pub mod compiler;
pub mod costmodel;
pub mod dag;
mod error;
pub mod experiment;
pub mod layout;
pub mod simulator;

pub use circuit::{Circuit, Gate, GateKind, Instruction, RandomCircuitSpec};
pub use compiler::{CompiledCircuit, CountMode, PassConfig};
pub use costmodel::{CostModel, StepCostModel, TableCostModel, TimeEstimate};
pub use dag::{CircuitDag, DagRules};
pub use error::{Error, Result};
pub use layout::{QubitPermutation, ShardConfig};
pub use simulator::{CommStats, CountingState, DenseState, ShardedState};

/// Double-precision complex amplitude.
pub type C64 = num_complex::Complex64;
