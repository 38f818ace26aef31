//! Attack fixture generator: the victim Grover circuit on `q[0]`, `q[1]` plus
//! an attacker chain on other qubits of a `q` register.

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::qasm::{
    emit, GateKind, Operand, QasmAst, RegisterDecl, RegisterKind, SourceLocation, Statement,
};
use crate::sim::{AttackFamily, Pauli, GROVER2_GATES};

/// Smallest register emitted; matches a five-qubit device.
pub const MIN_REGISTER: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FixtureFamily {
    /// One of the simulated attack families.
    Attack(AttackFamily),
    /// K back-to-back CNOTs with nothing in between.
    CxChain,
}

impl FixtureFamily {
    pub fn name(self) -> &'static str {
        match self {
            FixtureFamily::Attack(f) => f.name(),
            FixtureFamily::CxChain => "cx-chain",
        }
    }

    /// Attacker qubits the family needs.
    pub fn width(self) -> usize {
        match self {
            FixtureFamily::Attack(AttackFamily::CxDelay) | FixtureFamily::CxChain => 2,
            FixtureFamily::Attack(_) => 1,
        }
    }
}

impl fmt::Display for FixtureFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for FixtureFamily {
    type Err = GenError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s == "cx-chain" {
            return Ok(FixtureFamily::CxChain);
        }
        s.parse::<AttackFamily>()
            .map(FixtureFamily::Attack)
            .map_err(|_| GenError::UnknownFamily(s.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GenError {
    #[error("unknown fixture family `{0}`")]
    UnknownFamily(String),
    #[error("family `{family}` needs {expected} attacker qubit(s), got {got}")]
    QubitCount {
        family: &'static str,
        expected: usize,
        got: usize,
    },
    #[error("attacker qubit {0} collides with the victim on q[0], q[1]")]
    VictimOverlap(usize),
    #[error("attacker qubit {0} given twice")]
    Repeated(usize),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FixtureSpec {
    pub family: FixtureFamily,
    pub k: usize,
    pub delay_dt: u64,
    pub qubits: Vec<usize>,
}

fn stmt(gate: GateKind, qubits: &[usize], duration: Option<u64>) -> Statement {
    Statement {
        gate,
        qubits: qubits.iter().map(|&i| Operand::new("q", i)).collect(),
        duration,
        target: None,
        location: SourceLocation::START,
    }
}

/// Builds the fixture AST.
pub fn fixture_ast(spec: &FixtureSpec) -> Result<QasmAst, GenError> {
    let width = spec.family.width();
    if spec.qubits.len() != width {
        return Err(GenError::QubitCount {
            family: spec.family.name(),
            expected: width,
            got: spec.qubits.len(),
        });
    }
    for (i, &q) in spec.qubits.iter().enumerate() {
        if q < 2 {
            return Err(GenError::VictimOverlap(q));
        }
        if spec.qubits[..i].contains(&q) {
            return Err(GenError::Repeated(q));
        }
    }
    let size = spec
        .qubits
        .iter()
        .map(|q| q + 1)
        .max()
        .unwrap_or(0)
        .max(MIN_REGISTER);
    let decl = |kind, name: &str, size| RegisterDecl {
        kind,
        name: name.into(),
        size,
        location: SourceLocation::START,
    };
    let mut statements: Vec<Statement> = GROVER2_GATES
        .iter()
        .map(|(gate, qs)| stmt(*gate, qs, None))
        .collect();
    let a = spec.qubits[0];
    let unit: Vec<Statement> = match spec.family {
        FixtureFamily::CxChain => vec![stmt(GateKind::Cx, &spec.qubits, None)],
        FixtureFamily::Attack(AttackFamily::CxDelay) => vec![
            stmt(GateKind::Cx, &spec.qubits, None),
            stmt(GateKind::Delay, &[a], Some(spec.delay_dt)),
        ],
        FixtureFamily::Attack(AttackFamily::DelayOnly) => {
            vec![stmt(GateKind::Delay, &[a], Some(spec.delay_dt))]
        }
        FixtureFamily::Attack(AttackFamily::PauliDelay(p)) => {
            let gate = match p {
                Pauli::X => GateKind::X,
                Pauli::Y => GateKind::Y,
                Pauli::Z => GateKind::Z,
                Pauli::I => GateKind::Id,
            };
            vec![
                stmt(gate, &[a], None),
                stmt(GateKind::Delay, &[a], Some(spec.delay_dt)),
            ]
        }
    };
    for _ in 0..spec.k {
        statements.extend(unit.iter().cloned());
    }
    for i in 0..2 {
        statements.push(Statement {
            target: Some(Operand::new("c", i)),
            ..stmt(GateKind::Measure, &[i], None)
        });
    }
    Ok(QasmAst {
        registers: vec![
            decl(RegisterKind::Quantum, "q", size),
            decl(RegisterKind::Classical, "c", 2),
        ],
        statements,
    })
}

/// Canonical-form QASM text of the fixture.
pub fn generate(spec: &FixtureSpec) -> Result<String, GenError> {
    Ok(emit(&fixture_ast(spec)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ir::{lower, QubitRef};
    use crate::qasm::parse;
    use std::collections::BTreeSet;

    fn spec(family: &str, k: usize, delay_dt: u64, qubits: &[usize]) -> FixtureSpec {
        FixtureSpec {
            family: family.parse().unwrap(),
            k,
            delay_dt,
            qubits: qubits.to_vec(),
        }
    }

    #[test]
    fn cx_delay_timeline() {
        let text = generate(&spec("cx-delay", 3, 1, &[2, 3])).unwrap();
        let circ = lower(&parse(&text).unwrap());
        let set = BTreeSet::from([QubitRef(2), QubitRef(3)]);
        let line: Vec<String> = circ
            .timeline(&set)
            .iter()
            .map(|(_, i)| i.to_string())
            .collect();
        assert_eq!(
            line,
            [
                "cx q2,q3",
                "delay(1) q2",
                "cx q2,q3",
                "delay(1) q2",
                "cx q2,q3",
                "delay(1) q2"
            ]
        );
    }

    #[test]
    fn delay_only_on_one_qubit() {
        let text = generate(&spec("delay-only", 5, 7, &[4])).unwrap();
        let circ = lower(&parse(&text).unwrap());
        let set = BTreeSet::from([QubitRef(4)]);
        let line = circ.timeline(&set);
        assert_eq!(line.len(), 5);
        assert!(line.iter().all(|(_, i)| i.kind == GateKind::Delay));
    }

    #[test]
    fn bad_qubits() {
        assert!(matches!(
            fixture_ast(&spec("cx-delay", 1, 1, &[1, 3])),
            Err(GenError::VictimOverlap(1))
        ));
        assert!(matches!(
            fixture_ast(&spec("cx-delay", 1, 1, &[3, 3])),
            Err(GenError::Repeated(3))
        ));
        assert!(matches!(
            fixture_ast(&spec("x-delay", 1, 1, &[2, 3])),
            Err(GenError::QubitCount { .. })
        ));
        assert!("cx-only".parse::<FixtureFamily>().is_err());
    }

    #[test]
    fn register_grows_for_far_qubits() {
        let ast = fixture_ast(&spec("cx-chain", 2, 0, &[2, 9])).unwrap();
        assert_eq!(ast.registers[0].size, 10);
    }
}
