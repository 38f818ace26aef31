//! Flat circuit representation shared by the canonicalizer, the scanner and
//! the simulator.

use std::collections::{BTreeSet, HashMap};
use std::fmt;

use serde::Serialize;
use thiserror::Error;

use crate::qasm::{GateKind, QasmAst, RegisterKind, SourceLocation};

/// Qubit index flattened across registers in declaration order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(transparent)]
pub struct QubitRef(pub usize);

impl fmt::Display for QubitRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "q{}", self.0)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum IrError {
    #[error("`{kind}` takes {expected} qubit(s), got {got}")]
    Arity {
        kind: GateKind,
        expected: usize,
        got: usize,
    },
    #[error("`{0}` operands must be distinct")]
    RepeatedOperand(GateKind),
    #[error("delay duration must be given exactly for `delay`")]
    Duration,
    #[error("qubit {qubit} out of range for a circuit of {qubit_count} qubits")]
    OutOfRange { qubit: usize, qubit_count: usize },
    #[error("a circuit needs at least one qubit")]
    NoQubits,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Instruction {
    pub kind: GateKind,
    pub operands: Vec<QubitRef>,
    pub duration_dt: Option<u64>,
    /// Flattened classical bit written by `measure`. Ignored by every pass.
    pub clbit: Option<usize>,
    /// Where this instruction came from, if it was parsed from source.
    pub location: Option<SourceLocation>,
}

impl Instruction {
    pub fn new(
        kind: GateKind,
        operands: Vec<QubitRef>,
        duration_dt: Option<u64>,
    ) -> Result<Self, IrError> {
        match kind.arity() {
            Some(n) if operands.len() != n => {
                return Err(IrError::Arity {
                    kind,
                    expected: n,
                    got: operands.len(),
                })
            }
            None if operands.is_empty() => {
                return Err(IrError::Arity {
                    kind,
                    expected: 1,
                    got: 0,
                })
            }
            _ => {}
        }
        for (i, q) in operands.iter().enumerate() {
            if operands[..i].contains(q) {
                return Err(IrError::RepeatedOperand(kind));
            }
        }
        if (kind == GateKind::Delay) != duration_dt.is_some() {
            return Err(IrError::Duration);
        }
        Ok(Instruction {
            kind,
            operands,
            duration_dt,
            clbit: None,
            location: None,
        })
    }

    pub fn gate1(kind: GateKind, q: usize) -> Self {
        Self::new(kind, vec![QubitRef(q)], None).expect("single-qubit gate")
    }

    pub fn gate2(kind: GateKind, a: usize, b: usize) -> Self {
        Self::new(kind, vec![QubitRef(a), QubitRef(b)], None).expect("two-qubit gate")
    }

    pub fn cx(control: usize, target: usize) -> Self {
        Self::gate2(GateKind::Cx, control, target)
    }

    pub fn delay(q: usize, duration_dt: u64) -> Self {
        Self::new(GateKind::Delay, vec![QubitRef(q)], Some(duration_dt)).expect("delay")
    }

    pub fn with_location(mut self, location: SourceLocation) -> Self {
        self.location = Some(location);
        self
    }

    pub fn touches(&self, q: QubitRef) -> bool {
        self.operands.contains(&q)
    }

    /// Same operation on the same qubits, ignoring location.
    ///
    /// `cz` is symmetric, so its operand order does not matter.
    pub fn same_operation(&self, other: &Instruction) -> bool {
        if self.kind != other.kind || self.duration_dt != other.duration_dt {
            return false;
        }
        match self.kind {
            GateKind::Cz => {
                let (a, b) = (&self.operands, &other.operands);
                a == b || (a[0] == b[1] && a[1] == b[0])
            }
            _ => self.operands == other.operands,
        }
    }
}

impl fmt::Display for Instruction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.kind)?;
        if let Some(d) = self.duration_dt {
            write!(f, "({d})")?;
        }
        for (i, q) in self.operands.iter().enumerate() {
            write!(f, "{}{q}", if i == 0 { " " } else { "," })?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Circuit {
    qubit_count: usize,
    instructions: Vec<Instruction>,
}

impl Circuit {
    pub fn new(qubit_count: usize, instructions: Vec<Instruction>) -> Result<Self, IrError> {
        if qubit_count == 0 {
            return Err(IrError::NoQubits);
        }
        for inst in &instructions {
            if let Some(q) = inst.operands.iter().find(|q| q.0 >= qubit_count) {
                return Err(IrError::OutOfRange {
                    qubit: q.0,
                    qubit_count,
                });
            }
        }
        Ok(Circuit {
            qubit_count,
            instructions,
        })
    }

    pub fn qubit_count(&self) -> usize {
        self.qubit_count
    }

    pub fn instructions(&self) -> &[Instruction] {
        &self.instructions
    }

    pub fn len(&self) -> usize {
        self.instructions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.instructions.is_empty()
    }

    pub fn count(&self, kind: GateKind) -> usize {
        self.instructions.iter().filter(|i| i.kind == kind).count()
    }

    /// Instructions touching at least one qubit of `qubits`, in program
    /// order, paired with their global index.
    pub fn timeline(&self, qubits: &BTreeSet<QubitRef>) -> Vec<(usize, &Instruction)> {
        self.instructions
            .iter()
            .enumerate()
            .filter(|(_, inst)| inst.operands.iter().any(|q| qubits.contains(q)))
            .collect()
    }

    /// Global instruction indices touching each qubit.
    pub fn qubit_timelines(&self) -> Vec<Vec<usize>> {
        let mut lines = vec![Vec::new(); self.qubit_count];
        for (i, inst) in self.instructions.iter().enumerate() {
            for q in &inst.operands {
                lines[q.0].push(i);
            }
        }
        lines
    }

    /// Applies a qubit relabeling; `perm[old] = new`.
    pub fn relabeled(&self, perm: &[usize]) -> Circuit {
        assert_eq!(perm.len(), self.qubit_count);
        let instructions = self
            .instructions
            .iter()
            .map(|inst| Instruction {
                operands: inst.operands.iter().map(|q| QubitRef(perm[q.0])).collect(),
                ..inst.clone()
            })
            .collect();
        Circuit {
            qubit_count: self.qubit_count,
            instructions,
        }
    }
}

/// Lowers a parsed program, flattening registers in declaration order.
pub fn lower(ast: &QasmAst) -> Circuit {
    let mut qubit_base = HashMap::new();
    let mut clbit_base = HashMap::new();
    let (mut nq, mut nc) = (0usize, 0usize);
    for reg in &ast.registers {
        match reg.kind {
            RegisterKind::Quantum => {
                qubit_base.insert(reg.name.as_str(), nq);
                nq += reg.size;
            }
            RegisterKind::Classical => {
                clbit_base.insert(reg.name.as_str(), nc);
                nc += reg.size;
            }
        }
    }
    let instructions = ast
        .statements
        .iter()
        .map(|st| Instruction {
            kind: st.gate,
            operands: st
                .qubits
                .iter()
                .map(|op| QubitRef(qubit_base[op.register.as_str()] + op.index))
                .collect(),
            duration_dt: st.duration,
            clbit: st
                .target
                .as_ref()
                .map(|op| clbit_base[op.register.as_str()] + op.index),
            location: Some(st.location),
        })
        .collect();
    Circuit {
        // A program with no qreg still lowers; it just has nothing to scan.
        qubit_count: nq.max(1),
        instructions,
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CouplingError {
    #[error("line {line}: {message}")]
    Format { line: usize, message: String },
    #[error("edge ({0}, {1}) is a self-loop")]
    SelfLoop(usize, usize),
    #[error("edge ({a}, {b}) does not fit a circuit of {qubit_count} qubits")]
    OutOfRange {
        a: usize,
        b: usize,
        qubit_count: usize,
    },
}

/// Undirected device connectivity.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct CouplingMap {
    edges: BTreeSet<(usize, usize)>,
}

impl CouplingMap {
    pub fn new(edges: impl IntoIterator<Item = (usize, usize)>) -> Result<Self, CouplingError> {
        let mut set = BTreeSet::new();
        for (a, b) in edges {
            if a == b {
                return Err(CouplingError::SelfLoop(a, b));
            }
            set.insert((a.min(b), a.max(b)));
        }
        Ok(CouplingMap { edges: set })
    }

    /// Reads `i j` pairs, one per line; `#` starts a comment.
    pub fn parse(text: &str) -> Result<Self, CouplingError> {
        let mut edges = Vec::new();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let fields: Vec<_> = line.split_whitespace().collect();
            let bad = |message: String| CouplingError::Format {
                line: n + 1,
                message,
            };
            if fields.len() != 2 {
                return Err(bad(format!("expected `i j`, found `{line}`")));
            }
            let mut ends = [0usize; 2];
            for (slot, f) in ends.iter_mut().zip(&fields) {
                *slot = f
                    .parse()
                    .map_err(|_| bad(format!("`{f}` is not a qubit index")))?;
            }
            if ends[0] == ends[1] {
                return Err(CouplingError::SelfLoop(ends[0], ends[1]));
            }
            edges.push((ends[0], ends[1]));
        }
        Self::new(edges)
    }

    pub fn contains(&self, a: usize, b: usize) -> bool {
        self.edges.contains(&(a.min(b), a.max(b)))
    }

    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.edges.iter().copied()
    }

    pub fn len(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }

    pub fn check(&self, circuit: &Circuit) -> Result<(), CouplingError> {
        let qubit_count = circuit.qubit_count();
        match self.edges.iter().find(|(_, b)| *b >= qubit_count) {
            Some(&(a, b)) => Err(CouplingError::OutOfRange { a, b, qubit_count }),
            None => Ok(()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qasm::parse;

    fn c(src: &str) -> Circuit {
        lower(&parse(src).unwrap())
    }

    #[test]
    fn flattening_across_registers() {
        let circ = c("OPENQASM 2.0; qreg a[2]; qreg b[1]; x b[0];");
        assert_eq!(circ.qubit_count(), 3);
        assert_eq!(circ.instructions()[0].operands, vec![QubitRef(2)]);
    }

    #[test]
    fn empty_program() {
        let circ = c("OPENQASM 2.0; qreg q[3];");
        assert_eq!(circ.qubit_count(), 3);
        assert!(circ.is_empty());
    }

    #[test]
    fn attacker_timeline_alternates() {
        let circ = c(
            "OPENQASM 2.0; qreg q[4]; cx q[2],q[3]; delay(1) q[2]; cx q[2],q[3]; delay(1) q[2];",
        );
        let set = BTreeSet::from([QubitRef(2), QubitRef(3)]);
        let kinds: Vec<_> = circ.timeline(&set).iter().map(|(_, i)| i.kind).collect();
        assert_eq!(
            kinds,
            vec![GateKind::Cx, GateKind::Delay, GateKind::Cx, GateKind::Delay]
        );
    }

    #[test]
    fn timeline_skips_other_qubits() {
        let circ = Circuit::new(
            5,
            vec![
                Instruction::cx(2, 3),
                Instruction::gate1(GateKind::H, 0),
                Instruction::delay(2, 1),
                Instruction::cx(2, 3),
            ],
        )
        .unwrap();
        let idx = |qs: &[usize]| -> Vec<usize> {
            let set = qs.iter().map(|&q| QubitRef(q)).collect();
            circ.timeline(&set).into_iter().map(|(i, _)| i).collect()
        };
        assert_eq!(idx(&[2, 3]), vec![0, 2, 3]);
        assert!(idx(&[4]).is_empty());
        assert_eq!(idx(&[0, 2]), vec![0, 1, 2, 3]);
    }

    #[test]
    fn measure_records_clbit() {
        let circ = c("OPENQASM 2.0; qreg q[2]; creg a[1]; creg b[2]; measure q[1] -> b[1];");
        assert_eq!(circ.instructions()[0].clbit, Some(2));
    }

    #[test]
    fn instruction_invariants() {
        assert!(matches!(
            Instruction::new(GateKind::Cx, vec![QubitRef(1), QubitRef(1)], None),
            Err(IrError::RepeatedOperand(_))
        ));
        assert!(matches!(
            Instruction::new(GateKind::Delay, vec![QubitRef(1)], None),
            Err(IrError::Duration)
        ));
        assert!(matches!(
            Instruction::new(GateKind::X, vec![QubitRef(1)], Some(3)),
            Err(IrError::Duration)
        ));
        assert!(Instruction::new(GateKind::Delay, vec![QubitRef(0)], Some(0)).is_ok());
        assert!(matches!(
            Instruction::new(GateKind::Barrier, vec![], None),
            Err(IrError::Arity { .. })
        ));
        assert!(matches!(
            Circuit::new(2, vec![Instruction::cx(0, 2)]),
            Err(IrError::OutOfRange { .. })
        ));
    }

    #[test]
    fn coupling_file() {
        let map = CouplingMap::parse("# lima-like\n0 1\n1 2 # bridge\n\n1 3\n3 4\n").unwrap();
        assert_eq!(map.len(), 4);
        assert!(map.contains(2, 1));
        assert!(!map.contains(0, 2));
        assert!(matches!(
            CouplingMap::parse("0 0"),
            Err(CouplingError::SelfLoop(0, 0))
        ));
        assert!(matches!(
            CouplingMap::parse("0 1 2"),
            Err(CouplingError::Format { line: 1, .. })
        ));
        assert!(matches!(
            CouplingMap::parse("0 x"),
            Err(CouplingError::Format { .. })
        ));
        let circ = Circuit::new(3, vec![]).unwrap();
        assert!(map.check(&circ).is_err());
    }
}
