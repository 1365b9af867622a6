//! Gates, circuits, the line-oriented text format and the random circuit
//! generator.
//!
//! Text format, one instruction per line, `#` starts a comment:
//!
//! ```text
//! qubits 3
//! H 0
//! Y 2
//! CNOT 0 1
//! U1 2 <8 reals>          # row-major re/im pairs of the 2x2 matrix
//! CU 1 2 <8 reals>        # block applied when the control is 1
//! PERMUTE 2,0,1           # σ(0),σ(1),σ(2)
//! ```
//!
//! Random circuits are drawn with `ChaCha8Rng::seed_from_u64(seed)` from
//! `rand_chacha`; per gate, one `f64` decides CNOT (`< p`) against a 1-qubit
//! gate, then the operands are drawn (control, then target among the other
//! qubits; or kind `H`/`Y` by a fair coin, then the qubit).

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::layout::QubitPermutation;
use crate::C64;

pub type Matrix2 = [[C64; 2]; 2];

const UNITARY_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum GateKind {
    H,
    Y,
    Cnot,
    /// Arbitrary 1-qubit unitary.
    U1,
    /// Arbitrary controlled 1-qubit unitary.
    Cu,
}

impl GateKind {
    pub fn mnemonic(self) -> &'static str {
        match self {
            GateKind::H => "H",
            GateKind::Y => "Y",
            GateKind::Cnot => "CNOT",
            GateKind::U1 => "U1",
            GateKind::Cu => "CU",
        }
    }

    pub fn is_controlled(self) -> bool {
        matches!(self, GateKind::Cnot | GateKind::Cu)
    }
}

/// A 1-qubit gate or a controlled 1-qubit gate.
#[derive(Debug, Clone, PartialEq)]
pub struct Gate {
    kind: GateKind,
    target: usize,
    control: Option<usize>,
    matrix: Matrix2,
}

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

fn hadamard() -> Matrix2 {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    [[c(s, 0.0), c(s, 0.0)], [c(s, 0.0), c(-s, 0.0)]]
}

fn pauli_y() -> Matrix2 {
    [[c(0.0, 0.0), c(0.0, -1.0)], [c(0.0, 1.0), c(0.0, 0.0)]]
}

fn pauli_x() -> Matrix2 {
    [[c(0.0, 0.0), c(1.0, 0.0)], [c(1.0, 0.0), c(0.0, 0.0)]]
}

/// Largest entry of `M†M − I` in magnitude.
pub fn unitarity_deviation(m: &Matrix2) -> f64 {
    let mut worst = 0.0f64;
    for i in 0..2 {
        for j in 0..2 {
            let mut s = m[0][i].conj() * m[0][j] + m[1][i].conj() * m[1][j];
            if i == j {
                s -= 1.0;
            }
            worst = worst.max(s.norm());
        }
    }
    worst
}

fn check_unitary(m: &Matrix2) -> Result<()> {
    let dev = unitarity_deviation(m);
    // NaN fails this comparison too.
    if dev <= UNITARY_TOL {
        Ok(())
    } else {
        Err(Error::NotUnitary(dev))
    }
}

impl Gate {
    pub fn h(q: usize) -> Self {
        Self {
            kind: GateKind::H,
            target: q,
            control: None,
            matrix: hadamard(),
        }
    }

    pub fn y(q: usize) -> Self {
        Self {
            kind: GateKind::Y,
            target: q,
            control: None,
            matrix: pauli_y(),
        }
    }

    /// Panics if `control == target`; use [`Gate::controlled`] for a
    /// checked constructor.
    pub fn cnot(control: usize, target: usize) -> Self {
        assert_ne!(control, target, "CNOT control equals target");
        Self {
            kind: GateKind::Cnot,
            target,
            control: Some(control),
            matrix: pauli_x(),
        }
    }

    pub fn unitary(q: usize, matrix: Matrix2) -> Result<Self> {
        check_unitary(&matrix)?;
        Ok(Self {
            kind: GateKind::U1,
            target: q,
            control: None,
            matrix,
        })
    }

    pub fn controlled(control: usize, target: usize, matrix: Matrix2) -> Result<Self> {
        if control == target {
            return Err(Error::ControlEqualsTarget(control));
        }
        check_unitary(&matrix)?;
        Ok(Self {
            kind: GateKind::Cu,
            target,
            control: Some(control),
            matrix,
        })
    }

    pub fn kind(&self) -> GateKind {
        self.kind
    }

    pub fn target(&self) -> usize {
        self.target
    }

    pub fn control(&self) -> Option<usize> {
        self.control
    }

    pub fn matrix(&self) -> &Matrix2 {
        &self.matrix
    }

    /// Control (if any) followed by target.
    pub fn qubits(&self) -> impl Iterator<Item = usize> + '_ {
        self.control.into_iter().chain(std::iter::once(self.target))
    }

    pub fn max_qubit(&self) -> usize {
        self.control.map_or(self.target, |c| c.max(self.target))
    }
}

impl fmt::Display for Gate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.kind.mnemonic())?;
        if let Some(c) = self.control {
            write!(f, " {c}")?;
        }
        write!(f, " {}", self.target)?;
        if matches!(self.kind, GateKind::U1 | GateKind::Cu) {
            for row in &self.matrix {
                for z in row {
                    write!(f, " {} {}", z.re, z.im)?;
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Instruction {
    Gate(Gate),
    Permute(QubitPermutation),
}

impl fmt::Display for Instruction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Instruction::Gate(g) => g.fmt(f),
            Instruction::Permute(p) => write!(f, "PERMUTE {p}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Circuit {
    num_qubits: usize,
    instructions: Vec<Instruction>,
}

impl Circuit {
    pub fn new(num_qubits: usize) -> Self {
        Self {
            num_qubits,
            instructions: Vec::new(),
        }
    }

    pub fn from_gates(num_qubits: usize, gates: impl IntoIterator<Item = Gate>) -> Result<Self> {
        let mut c = Self::new(num_qubits);
        for g in gates {
            c.push_gate(g)?;
        }
        Ok(c)
    }

    pub fn push(&mut self, instr: Instruction) -> Result<()> {
        match &instr {
            Instruction::Gate(g) => {
                for q in g.qubits() {
                    if q >= self.num_qubits {
                        return Err(Error::QubitOutOfRange {
                            qubit: q,
                            num_qubits: self.num_qubits,
                        });
                    }
                }
            }
            Instruction::Permute(p) => {
                if p.len() != self.num_qubits {
                    return Err(Error::SizeMismatch {
                        expected: self.num_qubits,
                        found: p.len(),
                    });
                }
            }
        }
        self.instructions.push(instr);
        Ok(())
    }

    pub fn push_gate(&mut self, g: Gate) -> Result<()> {
        self.push(Instruction::Gate(g))
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn instructions(&self) -> &[Instruction] {
        &self.instructions
    }

    pub fn gates(&self) -> impl Iterator<Item = &Gate> + '_ {
        self.instructions.iter().filter_map(|i| match i {
            Instruction::Gate(g) => Some(g),
            Instruction::Permute(_) => None,
        })
    }

    pub fn num_gates(&self) -> usize {
        self.gates().count()
    }

    pub fn num_permutes(&self) -> usize {
        self.instructions.len() - self.num_gates()
    }

    /// Appends the instructions of `other`, which must have the same width.
    pub fn extend_from(&mut self, other: &Circuit) -> Result<()> {
        if other.num_qubits != self.num_qubits {
            return Err(Error::SizeMismatch {
                expected: self.num_qubits,
                found: other.num_qubits,
            });
        }
        self.instructions.extend(other.instructions.iter().cloned());
        Ok(())
    }
}

impl fmt::Display for Circuit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "qubits {}", self.num_qubits)?;
        for i in &self.instructions {
            write!(f, "\n{i}")?;
        }
        Ok(())
    }
}

impl FromStr for Circuit {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        parse_circuit(s)
    }
}

pub fn serialize_circuit(c: &Circuit) -> String {
    c.to_string()
}

pub fn parse_circuit(text: &str) -> Result<Circuit> {
    let mut circuit: Option<Circuit> = None;
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let err = |message: String| Error::Parse { line, message };
        let mut tokens = content.split_whitespace();
        let head = tokens.next().unwrap_or_default();
        let args: Vec<&str> = tokens.collect();

        let Some(c) = circuit.as_mut() else {
            if head != "qubits" || args.len() != 1 {
                return Err(err("expected `qubits <n>` header".into()));
            }
            let n = parse_usize(args[0]).map_err(err)?;
            if n == 0 {
                return Err(err("qubit count must be positive".into()));
            }
            circuit = Some(Circuit::new(n));
            continue;
        };

        let instr = parse_instruction(head, &args, c.num_qubits()).map_err(|e| match e {
            Error::Parse { message, .. } => err(message),
            other => err(other.to_string()),
        })?;
        c.push(instr).map_err(|e| err(e.to_string()))?;
    }
    circuit.ok_or(Error::Parse {
        line: text.lines().count().max(1),
        message: "missing `qubits <n>` header".into(),
    })
}

fn parse_usize(s: &str) -> std::result::Result<usize, String> {
    s.parse::<usize>()
        .map_err(|_| format!("expected a non-negative integer, found `{s}`"))
}

fn parse_matrix(reals: &[&str]) -> std::result::Result<Matrix2, String> {
    let mut v = [0.0f64; 8];
    for (slot, s) in v.iter_mut().zip(reals) {
        *slot = s
            .parse::<f64>()
            .map_err(|_| format!("expected a real number, found `{s}`"))?;
    }
    Ok([
        [c(v[0], v[1]), c(v[2], v[3])],
        [c(v[4], v[5]), c(v[6], v[7])],
    ])
}

fn parse_instruction(head: &str, args: &[&str], n: usize) -> Result<Instruction> {
    let fail = |message: String| Error::Parse { line: 0, message };
    let arity = |want: usize| {
        if args.len() == want {
            Ok(())
        } else {
            Err(fail(format!(
                "`{head}` takes {want} argument(s), found {}",
                args.len()
            )))
        }
    };
    let gate = match head {
        "H" | "Y" => {
            arity(1)?;
            let q = parse_usize(args[0]).map_err(fail)?;
            if head == "H" {
                Gate::h(q)
            } else {
                Gate::y(q)
            }
        }
        "CNOT" => {
            arity(2)?;
            let ctl = parse_usize(args[0]).map_err(fail)?;
            let tgt = parse_usize(args[1]).map_err(fail)?;
            if ctl == tgt {
                return Err(Error::ControlEqualsTarget(ctl));
            }
            Gate::cnot(ctl, tgt)
        }
        "U1" => {
            arity(9)?;
            let q = parse_usize(args[0]).map_err(fail)?;
            Gate::unitary(q, parse_matrix(&args[1..]).map_err(fail)?)?
        }
        "CU" => {
            arity(10)?;
            let ctl = parse_usize(args[0]).map_err(fail)?;
            let tgt = parse_usize(args[1]).map_err(fail)?;
            Gate::controlled(ctl, tgt, parse_matrix(&args[2..]).map_err(fail)?)?
        }
        "PERMUTE" => {
            arity(1)?;
            let map = args[0]
                .split(',')
                .map(parse_usize)
                .collect::<std::result::Result<Vec<_>, _>>()
                .map_err(fail)?;
            if map.len() != n {
                return Err(fail(format!(
                    "PERMUTE lists {} images for {n} qubits",
                    map.len()
                )));
            }
            return Ok(Instruction::Permute(QubitPermutation::from_map(map)?));
        }
        other => return Err(fail(format!("unknown instruction `{other}`"))),
    };
    Ok(Instruction::Gate(gate))
}

/// Parameters of the random circuit family used by all experiments.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RandomCircuitSpec {
    pub num_qubits: usize,
    pub num_gates: usize,
    /// Probability that a gate is a CNOT.
    pub p: f64,
    pub seed: u64,
}

impl RandomCircuitSpec {
    pub fn generate(&self) -> Result<Circuit> {
        generate_random_circuit(self)
    }
}

pub fn generate_random_circuit(spec: &RandomCircuitSpec) -> Result<Circuit> {
    let n = spec.num_qubits;
    if !(0.0..=1.0).contains(&spec.p) {
        return Err(Error::InvalidSpec(format!(
            "p = {} is outside [0, 1]",
            spec.p
        )));
    }
    if n == 0 {
        return Err(Error::InvalidSpec("qubit count must be positive".into()));
    }
    if n < 2 && spec.p > 0.0 {
        return Err(Error::InvalidSpec(
            "two-qubit gates need at least 2 qubits".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut circuit = Circuit::new(n);
    circuit.instructions.reserve(spec.num_gates);
    for _ in 0..spec.num_gates {
        let gate = if rng.random::<f64>() < spec.p {
            let control = rng.random_range(0..n);
            let mut target = rng.random_range(0..n - 1);
            if target >= control {
                target += 1;
            }
            Gate::cnot(control, target)
        } else if rng.random_bool(0.5) {
            Gate::h(rng.random_range(0..n))
        } else {
            Gate::y(rng.random_range(0..n))
        };
        circuit.instructions.push(Instruction::Gate(gate));
    }
    Ok(circuit)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn parses_gates() {
        let c = parse_circuit("qubits 2\nH 0\nCNOT 0 1").unwrap();
        assert_eq!(c.num_qubits(), 2);
        assert_eq!(
            c.instructions(),
            &[
                Instruction::Gate(Gate::h(0)),
                Instruction::Gate(Gate::cnot(0, 1))
            ]
        );
    }

    #[test]
    fn parses_permute() {
        let c = parse_circuit("qubits 3\nPERMUTE 2,0,1").unwrap();
        let Instruction::Permute(p) = &c.instructions()[0] else {
            panic!("expected PERMUTE");
        };
        assert_eq!((p.position(0), p.position(1), p.position(2)), (2, 0, 1));
    }

    #[test]
    fn parse_errors() {
        let e = parse_circuit("qubits 2\nCNOT 0 0").unwrap_err();
        assert_eq!(
            e,
            Error::Parse {
                line: 2,
                message: "control qubit 0 equals target".into()
            }
        );
        assert!(matches!(
            parse_circuit("qubits 2\n\nH 2"),
            Err(Error::Parse { line: 3, .. })
        ));
        assert!(matches!(
            parse_circuit("qubits 3\nPERMUTE 0,0,1"),
            Err(Error::Parse { line: 2, .. })
        ));
        assert!(matches!(
            parse_circuit("qubits 3\nPERMUTE 0,1"),
            Err(Error::Parse { .. })
        ));
        assert!(matches!(
            parse_circuit("H 0"),
            Err(Error::Parse { line: 1, .. })
        ));
        assert!(matches!(
            parse_circuit("qubits 1\nX 0"),
            Err(Error::Parse { .. })
        ));
        assert!(matches!(
            parse_circuit("# empty\n"),
            Err(Error::Parse { .. })
        ));
        assert!(matches!(
            parse_circuit("qubits 1\nU1 0 1 0 1 0 0 0 1 0"),
            Err(Error::Parse { .. })
        ));
    }

    #[test]
    fn comments_and_blank_lines() {
        let c = parse_circuit("# header\nqubits 2 # two\n\nY 1   # trailing\n").unwrap();
        assert_eq!(c.instructions(), &[Instruction::Gate(Gate::y(1))]);
    }

    #[test]
    fn serializes_examples() {
        assert_eq!(
            Circuit::from_gates(1, [Gate::h(0)]).unwrap().to_string(),
            "qubits 1\nH 0"
        );
        let mut c = Circuit::new(3);
        c.push(Instruction::Permute(
            QubitPermutation::identity(3).with_positions_swapped(0, 2),
        ))
        .unwrap();
        assert_eq!(c.to_string(), "qubits 3\nPERMUTE 2,1,0");
        assert_eq!(Circuit::new(5).to_string(), "qubits 5");
    }

    #[test]
    fn generic_gates_round_trip() {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let m = [[c(s, 0.0), c(0.0, s)], [c(0.0, s), c(s, 0.0)]];
        let mut circ = Circuit::new(3);
        circ.push_gate(Gate::unitary(2, m).unwrap()).unwrap();
        circ.push_gate(Gate::controlled(0, 1, m).unwrap()).unwrap();
        let text = circ.to_string();
        assert_eq!(parse_circuit(&text).unwrap(), circ);
    }

    #[test]
    fn rejects_non_unitary() {
        let m = [[c(1.0, 0.0), c(1.0, 0.0)], [c(0.0, 0.0), c(1.0, 0.0)]];
        assert!(matches!(Gate::unitary(0, m), Err(Error::NotUnitary(_))));
        assert!(matches!(
            Gate::controlled(1, 1, pauli_x()),
            Err(Error::ControlEqualsTarget(1))
        ));
    }

    #[test]
    fn canonical_matrices_are_unitary() {
        for m in [hadamard(), pauli_y(), pauli_x()] {
            assert!(unitarity_deviation(&m) <= UNITARY_TOL);
        }
    }

    #[test]
    fn generator_extremes() {
        let only_1q = RandomCircuitSpec {
            num_qubits: 4,
            num_gates: 10,
            p: 0.0,
            seed: 7,
        }
        .generate()
        .unwrap();
        assert_eq!(only_1q.num_gates(), 10);
        assert!(only_1q
            .gates()
            .all(|g| matches!(g.kind(), GateKind::H | GateKind::Y)));
        let only_2q = RandomCircuitSpec {
            num_qubits: 4,
            num_gates: 10,
            p: 1.0,
            seed: 7,
        }
        .generate()
        .unwrap();
        assert!(only_2q.gates().all(|g| g.kind() == GateKind::Cnot));
        assert!(RandomCircuitSpec {
            num_qubits: 1,
            num_gates: 3,
            p: 0.1,
            seed: 0
        }
        .generate()
        .is_err());
        assert!(RandomCircuitSpec {
            num_qubits: 1,
            num_gates: 3,
            p: 0.0,
            seed: 0
        }
        .generate()
        .is_ok());
    }

    #[test]
    fn generator_cnot_fraction_at_35_qubits() {
        for seed in 0..20 {
            let c = RandomCircuitSpec {
                num_qubits: 35,
                num_gates: 1050,
                p: 0.3,
                seed,
            }
            .generate()
            .unwrap();
            assert_eq!(c.num_gates(), 1050);
            let cnots = c.gates().filter(|g| g.kind() == GateKind::Cnot).count();
            let frac = cnots as f64 / 1050.0;
            assert!((frac - 0.3).abs() <= 0.05, "seed {seed}: {frac}");
        }
    }

    #[test]
    fn generator_cnot_fraction_large_sample() {
        let c = RandomCircuitSpec {
            num_qubits: 8,
            num_gates: 10_000,
            p: 0.5,
            seed: 99,
        }
        .generate()
        .unwrap();
        let cnots = c.gates().filter(|g| g.kind() == GateKind::Cnot).count();
        assert!((cnots as f64 / 10_000.0 - 0.5).abs() <= 0.02);
        let h = c.gates().filter(|g| g.kind() == GateKind::H).count();
        assert!((h as f64 / 10_000.0 - 0.25).abs() <= 0.02);
    }

    #[test]
    fn generator_is_deterministic() {
        let spec = RandomCircuitSpec {
            num_qubits: 12,
            num_gates: 300,
            p: 0.4,
            seed: 5,
        };
        assert_eq!(
            spec.generate().unwrap().to_string(),
            spec.generate().unwrap().to_string()
        );
        let other = RandomCircuitSpec { seed: 6, ..spec };
        assert_ne!(spec.generate().unwrap(), other.generate().unwrap());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]

        #[test]
        fn text_round_trip(n in 2usize..12, gates in 0usize..40, p in 0.0f64..=1.0, seed in any::<u64>()) {
            let c = RandomCircuitSpec { num_qubits: n, num_gates: gates, p, seed }.generate().unwrap();
            let text = serialize_circuit(&c);
            let back = parse_circuit(&text).unwrap();
            prop_assert_eq!(&back, &c);
            prop_assert_eq!(serialize_circuit(&back), text);
        }
    }
}
