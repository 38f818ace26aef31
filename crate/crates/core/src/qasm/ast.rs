use std::fmt;

use serde::Serialize;

/// Position of a token in a source file.
///
/// `line` and `column` are 1-based (column counts characters, not bytes);
/// `byte_offset` is 0-based.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct SourceLocation {
    pub line: u32,
    pub column: u32,
    pub byte_offset: usize,
}

impl SourceLocation {
    pub const START: SourceLocation = SourceLocation {
        line: 1,
        column: 1,
        byte_offset: 0,
    };
}

impl fmt::Display for SourceLocation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.column)
    }
}

/// Every operation the frontend accepts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum GateKind {
    Cx,
    X,
    Y,
    Z,
    Id,
    H,
    Cz,
    Barrier,
    Measure,
    Delay,
}

impl GateKind {
    pub const ALL: [GateKind; 10] = [
        GateKind::Cx,
        GateKind::X,
        GateKind::Y,
        GateKind::Z,
        GateKind::Id,
        GateKind::H,
        GateKind::Cz,
        GateKind::Barrier,
        GateKind::Measure,
        GateKind::Delay,
    ];

    /// Lowercase QASM mnemonic.
    pub fn name(self) -> &'static str {
        match self {
            GateKind::Cx => "cx",
            GateKind::X => "x",
            GateKind::Y => "y",
            GateKind::Z => "z",
            GateKind::Id => "id",
            GateKind::H => "h",
            GateKind::Cz => "cz",
            GateKind::Barrier => "barrier",
            GateKind::Measure => "measure",
            GateKind::Delay => "delay",
        }
    }

    /// Looks up a mnemonic. `CX` is accepted as the QASM 2.0 builtin spelling.
    pub fn from_name(name: &str) -> Option<GateKind> {
        match name {
            "CX" => Some(GateKind::Cx),
            _ => GateKind::ALL.into_iter().find(|k| k.name() == name),
        }
    }

    /// Fixed number of qubit operands, or `None` for variadic `barrier`.
    pub fn arity(self) -> Option<usize> {
        match self {
            GateKind::Cx | GateKind::Cz => Some(2),
            GateKind::Barrier => None,
            _ => Some(1),
        }
    }

    /// Unitary gates that are their own inverse.
    pub fn is_self_inverse(self) -> bool {
        matches!(
            self,
            GateKind::Cx
                | GateKind::X
                | GateKind::Y
                | GateKind::Z
                | GateKind::Id
                | GateKind::H
                | GateKind::Cz
        )
    }
}

impl fmt::Display for GateKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RegisterKind {
    Quantum,
    Classical,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RegisterDecl {
    pub kind: RegisterKind,
    pub name: String,
    pub size: usize,
    pub location: SourceLocation,
}

/// `name[index]`
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Operand {
    pub register: String,
    pub index: usize,
}

impl Operand {
    pub fn new(register: impl Into<String>, index: usize) -> Self {
        Operand {
            register: register.into(),
            index,
        }
    }
}

impl fmt::Display for Operand {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}[{}]", self.register, self.index)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Statement {
    pub gate: GateKind,
    pub qubits: Vec<Operand>,
    /// Delay length in dt, only for `delay`.
    pub duration: Option<u64>,
    /// Classical target, only for `measure`.
    pub target: Option<Operand>,
    pub location: SourceLocation,
}

impl Statement {
    fn same_shape(&self, other: &Statement) -> bool {
        self.gate == other.gate
            && self.qubits == other.qubits
            && self.duration == other.duration
            && self.target == other.target
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct QasmAst {
    pub registers: Vec<RegisterDecl>,
    pub statements: Vec<Statement>,
}

impl QasmAst {
    pub fn qregs(&self) -> impl Iterator<Item = &RegisterDecl> {
        self.registers
            .iter()
            .filter(|r| r.kind == RegisterKind::Quantum)
    }

    pub fn cregs(&self) -> impl Iterator<Item = &RegisterDecl> {
        self.registers
            .iter()
            .filter(|r| r.kind == RegisterKind::Classical)
    }

    /// Equality that ignores every `SourceLocation`.
    pub fn structurally_eq(&self, other: &QasmAst) -> bool {
        self.registers.len() == other.registers.len()
            && self.statements.len() == other.statements.len()
            && self
                .registers
                .iter()
                .zip(&other.registers)
                .all(|(a, b)| a.kind == b.kind && a.name == b.name && a.size == b.size)
            && self
                .statements
                .iter()
                .zip(&other.statements)
                .all(|(a, b)| a.same_shape(b))
    }
}
