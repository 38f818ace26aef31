use std::fmt::Write;

use super::ast::{GateKind, QasmAst, RegisterKind};

/// Serializes an AST in canonical form: header, declarations, then one
/// statement per line with lowercase mnemonics and single spaces.
pub fn emit(ast: &QasmAst) -> String {
    let mut out = String::from("OPENQASM 2.0;\n");
    for reg in &ast.registers {
        let kw = match reg.kind {
            RegisterKind::Quantum => "qreg",
            RegisterKind::Classical => "creg",
        };
        let _ = writeln!(out, "{kw} {}[{}];", reg.name, reg.size);
    }
    for st in &ast.statements {
        out.push_str(st.gate.name());
        if let (GateKind::Delay, Some(d)) = (st.gate, st.duration) {
            let _ = write!(out, "({d})");
        }
        out.push(' ');
        for (i, q) in st.qubits.iter().enumerate() {
            if i > 0 {
                out.push(',');
            }
            let _ = write!(out, "{q}");
        }
        if let Some(target) = &st.target {
            let _ = write!(out, " -> {target}");
        }
        out.push_str(";\n");
    }
    out
}
