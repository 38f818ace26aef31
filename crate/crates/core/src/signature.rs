//! Virus signatures: a repetition unit of gate templates plus the run lengths
//! at which a match becomes suspicious or malicious.
//!
//! Text format, one block per signature:
//!
//! ```text
//! version: 1
//! signature cx-delay
//!   unit: CX a b ; DELAY any @ a|b
//!   suspicious_at: 5
//!   malicious_at: 10
//!   note: CNOT chain kept alive by delays
//! end
//! ```
//!
//! Template classes are `CX`, `CZ` (two variables), `PAULI_X`, `PAULI_Y`,
//! `PAULI_Z`, `PAULI_XY`, `IDENT`, `H` (one variable) and
//! `DELAY <any|=n|>=n> @ <var>[|<var>...]`. A variable used only by delays must
//! be declared with a `vars:` line. `#` starts a comment.

use std::collections::HashSet;
use std::fmt::{self, Write};

use thiserror::Error;

use crate::ir::{Instruction, QubitRef};
use crate::qasm::GateKind;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum KindClass {
    Cx,
    Cz,
    PauliX,
    PauliY,
    PauliZ,
    /// X or Y.
    PauliXY,
    Ident,
    H,
    AnyDelay,
}

impl KindClass {
    fn keyword(self) -> &'static str {
        match self {
            KindClass::Cx => "CX",
            KindClass::Cz => "CZ",
            KindClass::PauliX => "PAULI_X",
            KindClass::PauliY => "PAULI_Y",
            KindClass::PauliZ => "PAULI_Z",
            KindClass::PauliXY => "PAULI_XY",
            KindClass::Ident => "IDENT",
            KindClass::H => "H",
            KindClass::AnyDelay => "DELAY",
        }
    }

    fn from_keyword(word: &str) -> Option<Self> {
        Some(match word {
            "CX" => KindClass::Cx,
            "CZ" => KindClass::Cz,
            "PAULI_X" | "X" => KindClass::PauliX,
            "PAULI_Y" | "Y" => KindClass::PauliY,
            "PAULI_Z" | "Z" => KindClass::PauliZ,
            "PAULI_XY" => KindClass::PauliXY,
            "IDENT" | "ID" => KindClass::Ident,
            "H" => KindClass::H,
            "DELAY" => KindClass::AnyDelay,
            _ => return None,
        })
    }

    /// Number of qubit variables a gate template of this class binds.
    pub fn arity(self) -> usize {
        match self {
            KindClass::Cx | KindClass::Cz => 2,
            _ => 1,
        }
    }

    pub fn admits(self, kind: GateKind) -> bool {
        matches!(
            (self, kind),
            (KindClass::Cx, GateKind::Cx)
                | (KindClass::Cz, GateKind::Cz)
                | (KindClass::PauliX, GateKind::X)
                | (KindClass::PauliY, GateKind::Y)
                | (KindClass::PauliZ, GateKind::Z)
                | (KindClass::PauliXY, GateKind::X | GateKind::Y)
                | (KindClass::Ident, GateKind::Id)
                | (KindClass::H, GateKind::H)
                | (KindClass::AnyDelay, GateKind::Delay)
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DurationConstraint {
    Any,
    Exact(u64),
    AtLeast(u64),
}

impl DurationConstraint {
    pub fn admits(self, dt: u64) -> bool {
        match self {
            DurationConstraint::Any => true,
            DurationConstraint::Exact(n) => dt == n,
            DurationConstraint::AtLeast(n) => dt >= n,
        }
    }
}

impl fmt::Display for DurationConstraint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DurationConstraint::Any => f.write_str("any"),
            DurationConstraint::Exact(n) => write!(f, "={n}"),
            DurationConstraint::AtLeast(n) => write!(f, ">={n}"),
        }
    }
}

/// One element of a signature's repetition unit.
///
/// Gate templates list their variables in operand order. A delay template
/// lists the variables it may sit on; any one of them matches.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct GateTemplate {
    pub class: KindClass,
    pub vars: Vec<String>,
    pub duration: DurationConstraint,
}

impl GateTemplate {
    pub fn gate(class: KindClass, vars: &[&str]) -> Self {
        GateTemplate {
            class,
            vars: vars.iter().map(|v| v.to_string()).collect(),
            duration: DurationConstraint::Any,
        }
    }

    pub fn delay(duration: DurationConstraint, on: &[&str]) -> Self {
        GateTemplate {
            class: KindClass::AnyDelay,
            vars: on.iter().map(|v| v.to_string()).collect(),
            duration,
        }
    }

    /// Whether `inst` realizes this template under the binding `bound`.
    pub fn matches(&self, inst: &Instruction, bound: impl Fn(&str) -> QubitRef) -> bool {
        if !self.class.admits(inst.kind) {
            return false;
        }
        match self.class {
            KindClass::AnyDelay => {
                self.duration.admits(inst.duration_dt.unwrap_or(0))
                    && self.vars.iter().any(|v| bound(v) == inst.operands[0])
            }
            KindClass::Cz => {
                let (a, b) = (bound(&self.vars[0]), bound(&self.vars[1]));
                inst.operands == [a, b] || inst.operands == [b, a]
            }
            _ => self
                .vars
                .iter()
                .zip(&inst.operands)
                .all(|(v, q)| bound(v) == *q),
        }
    }
}

impl fmt::Display for GateTemplate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.class {
            KindClass::AnyDelay => write!(f, "DELAY {} @ {}", self.duration, self.vars.join("|")),
            class => write!(f, "{} {}", class.keyword(), self.vars.join(" ")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Signature {
    pub id: String,
    pub unit: Vec<GateTemplate>,
    /// Variables in binding order: first appearance in the unit, then any
    /// declared-only ones.
    pub vars: Vec<String>,
    pub suspicious_at: usize,
    pub malicious_at: usize,
    pub severity_note: String,
}

impl Signature {
    pub fn var_index(&self, name: &str) -> usize {
        self.vars
            .iter()
            .position(|v| v == name)
            .expect("validated signature")
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SignatureDatabase {
    pub version: String,
    pub signatures: Vec<Signature>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SignatureError {
    #[error("line {line}: {message}")]
    Format { line: usize, message: String },
    #[error("line {line}: duplicate signature id `{id}`")]
    DuplicateId { line: usize, id: String },
    #[error("signature `{id}`: suspicious_at {suspicious_at} exceeds malicious_at {malicious_at}")]
    BadThresholds {
        id: String,
        suspicious_at: usize,
        malicious_at: usize,
    },
    #[error("line {line}: `{class}` takes {expected} variable(s), got {got}")]
    BadArity {
        line: usize,
        class: String,
        expected: usize,
        got: usize,
    },
}

pub const DEFAULT_DATABASE_VERSION: &str = "1";

/// The built-in database: CNOT+delay and X/Y+delay chains.
///
/// Delay-only, identity+delay and Z+delay chains are not listed; they do not
/// degrade a neighbouring circuit.
pub fn default_database() -> SignatureDatabase {
    SignatureDatabase {
        version: DEFAULT_DATABASE_VERSION.into(),
        signatures: vec![
            Signature {
                id: "cx-delay".into(),
                unit: vec![
                    GateTemplate::gate(KindClass::Cx, &["a", "b"]),
                    GateTemplate::delay(DurationConstraint::Any, &["a", "b"]),
                ],
                vars: vec!["a".into(), "b".into()],
                suspicious_at: 5,
                malicious_at: 10,
                severity_note: "CNOT chain kept alive past transpilation by interleaved delays; \
                                strongest observed crosstalk on neighbouring qubits"
                    .into(),
            },
            Signature {
                id: "xy-delay".into(),
                unit: vec![
                    GateTemplate::gate(KindClass::PauliXY, &["a"]),
                    GateTemplate::delay(DurationConstraint::Any, &["a"]),
                ],
                vars: vec!["a".into()],
                suspicious_at: 5,
                malicious_at: 10,
                severity_note: "X/Y chain kept alive by interleaved delays; weaker crosstalk \
                                than cx-delay"
                    .into(),
            },
        ],
    }
}

impl SignatureDatabase {
    pub fn get(&self, id: &str) -> Option<&Signature> {
        self.signatures.iter().find(|s| s.id == id)
    }

    /// Serializes in the loader's text format.
    pub fn to_text(&self) -> String {
        let mut out = format!("version: {}\n", self.version);
        for sig in &self.signatures {
            let _ = writeln!(out, "\nsignature {}", sig.id);
            let unit: Vec<String> = sig.unit.iter().map(|t| t.to_string()).collect();
            let _ = writeln!(out, "  unit: {}", unit.join(" ; "));
            let _ = writeln!(out, "  vars: {}", sig.vars.join(" "));
            let _ = writeln!(out, "  suspicious_at: {}", sig.suspicious_at);
            let _ = writeln!(out, "  malicious_at: {}", sig.malicious_at);
            if !sig.severity_note.is_empty() {
                let _ = writeln!(out, "  note: {}", sig.severity_note);
            }
            out.push_str("end\n");
        }
        out
    }

    /// Replaces thresholds on every signature. Re-validates the ordering.
    pub fn with_thresholds(
        mut self,
        suspicious_at: Option<usize>,
        malicious_at: Option<usize>,
    ) -> Result<Self, SignatureError> {
        for sig in &mut self.signatures {
            if let Some(s) = suspicious_at {
                sig.suspicious_at = s;
            }
            if let Some(m) = malicious_at {
                sig.malicious_at = m;
            }
            check_thresholds(sig)?;
        }
        Ok(self)
    }
}

fn check_thresholds(sig: &Signature) -> Result<(), SignatureError> {
    if sig.suspicious_at == 0 || sig.malicious_at == 0 || sig.suspicious_at > sig.malicious_at {
        return Err(SignatureError::BadThresholds {
            id: sig.id.clone(),
            suspicious_at: sig.suspicious_at,
            malicious_at: sig.malicious_at,
        });
    }
    Ok(())
}

#[derive(Default)]
struct Draft {
    id: String,
    line: usize,
    unit: Option<Vec<GateTemplate>>,
    declared: Vec<String>,
    suspicious_at: Option<usize>,
    malicious_at: Option<usize>,
    note: String,
}

fn format_err(line: usize, message: impl Into<String>) -> SignatureError {
    SignatureError::Format {
        line,
        message: message.into(),
    }
}

fn is_var_name(s: &str) -> bool {
    let mut chars = s.chars();
    chars
        .next()
        .is_some_and(|c| c.is_ascii_alphabetic() || c == '_')
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

fn parse_template(text: &str, line: usize) -> Result<GateTemplate, SignatureError> {
    let words: Vec<&str> = text.split_whitespace().collect();
    let Some((&head, rest)) = words.split_first() else {
        return Err(format_err(line, "empty template in unit"));
    };
    let class = KindClass::from_keyword(head)
        .ok_or_else(|| format_err(line, format!("unknown template class `{head}`")))?;
    if class == KindClass::AnyDelay {
        let [constraint, "@", vars] = rest else {
            return Err(format_err(
                line,
                format!("expected `DELAY <any|=n|>=n> @ <var>`, found `{text}`"),
            ));
        };
        let number = |s: &str| {
            s.parse::<u64>()
                .map_err(|_| format_err(line, format!("bad duration `{s}`")))
        };
        let duration = if *constraint == "any" {
            DurationConstraint::Any
        } else if let Some(n) = constraint.strip_prefix(">=") {
            DurationConstraint::AtLeast(number(n)?)
        } else if let Some(n) = constraint.strip_prefix('=') {
            DurationConstraint::Exact(number(n)?)
        } else {
            return Err(format_err(
                line,
                format!("bad duration constraint `{constraint}`"),
            ));
        };
        let vars: Vec<String> = vars.split('|').map(str::to_string).collect();
        if let Some(bad) = vars.iter().find(|v| !is_var_name(v)) {
            return Err(format_err(line, format!("bad variable name `{bad}`")));
        }
        return Ok(GateTemplate {
            class,
            vars,
            duration,
        });
    }
    if rest.len() != class.arity() {
        return Err(SignatureError::BadArity {
            line,
            class: class.keyword().into(),
            expected: class.arity(),
            got: rest.len(),
        });
    }
    if let Some(bad) = rest.iter().find(|v| !is_var_name(v)) {
        return Err(format_err(line, format!("bad variable name `{bad}`")));
    }
    if rest.len() == 2 && rest[0] == rest[1] {
        return Err(format_err(
            line,
            format!("`{head}` needs two distinct variables"),
        ));
    }
    Ok(GateTemplate::gate(class, rest))
}

fn finish(draft: Draft, end_line: usize) -> Result<Signature, SignatureError> {
    let unit = draft
        .unit
        .ok_or_else(|| format_err(end_line, format!("signature `{}` has no unit", draft.id)))?;
    if unit.is_empty() {
        return Err(format_err(end_line, "empty unit"));
    }
    let mut vars: Vec<String> = Vec::new();
    let mut gate_bound: HashSet<&str> = HashSet::new();
    for t in &unit {
        if t.class != KindClass::AnyDelay {
            for v in &t.vars {
                gate_bound.insert(v);
                if !vars.contains(v) {
                    vars.push(v.clone());
                }
            }
        }
    }
    for v in &draft.declared {
        if !vars.contains(v) {
            vars.push(v.clone());
        }
    }
    for t in unit.iter().filter(|t| t.class == KindClass::AnyDelay) {
        if let Some(free) = t.vars.iter().find(|v| !vars.contains(v)) {
            return Err(format_err(
                draft.line,
                format!(
                    "variable `{free}` in `{}` is not bound by a gate or a `vars:` line",
                    draft.id
                ),
            ));
        }
    }
    let suspicious_at = draft
        .suspicious_at
        .ok_or_else(|| format_err(end_line, format!("`{}` lacks suspicious_at", draft.id)))?;
    let malicious_at = draft
        .malicious_at
        .ok_or_else(|| format_err(end_line, format!("`{}` lacks malicious_at", draft.id)))?;
    let sig = Signature {
        id: draft.id,
        unit,
        vars,
        suspicious_at,
        malicious_at,
        severity_note: draft.note,
    };
    check_thresholds(&sig)?;
    Ok(sig)
}

/// Parses and validates a database. Any malformed block rejects the file.
pub fn load_database(text: &str) -> Result<SignatureDatabase, SignatureError> {
    let mut version = DEFAULT_DATABASE_VERSION.to_string();
    let mut signatures: Vec<Signature> = Vec::new();
    let mut draft: Option<Draft> = None;
    for (n, raw) in text.lines().enumerate() {
        let line = n + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        if let Some(d) = draft.as_mut() {
            if content == "end" {
                let sig = finish(draft.take().expect("open block"), line)?;
                signatures.push(sig);
                continue;
            }
            let (key, value) = content.split_once(':').ok_or_else(|| {
                format_err(line, format!("expected `key: value`, found `{content}`"))
            })?;
            let value = value.trim();
            let count = |v: &str| {
                v.parse::<usize>()
                    .map_err(|_| format_err(line, format!("`{v}` is not a positive integer")))
            };
            match key.trim() {
                "unit" => {
                    let unit = value
                        .split(';')
                        .map(|t| parse_template(t, line))
                        .collect::<Result<Vec<_>, _>>()?;
                    d.unit = Some(unit);
                }
                "vars" => {
                    let vars: Vec<String> = value.split_whitespace().map(str::to_string).collect();
                    if let Some(bad) = vars.iter().find(|v| !is_var_name(v)) {
                        return Err(format_err(line, format!("bad variable name `{bad}`")));
                    }
                    d.declared = vars;
                }
                "suspicious_at" => d.suspicious_at = Some(count(value)?),
                "malicious_at" => d.malicious_at = Some(count(value)?),
                "note" => d.note = value.to_string(),
                other => return Err(format_err(line, format!("unknown key `{other}`"))),
            }
            continue;
        }
        if let Some(id) = content.strip_prefix("signature ") {
            let id = id.trim();
            if id.is_empty() || id.contains(char::is_whitespace) {
                return Err(format_err(line, format!("bad signature id `{id}`")));
            }
            if signatures.iter().any(|s| s.id == id) {
                return Err(SignatureError::DuplicateId {
                    line,
                    id: id.to_string(),
                });
            }
            draft = Some(Draft {
                id: id.to_string(),
                line,
                ..Draft::default()
            });
        } else if let Some(v) = content.strip_prefix("version:") {
            version = v.trim().to_string();
        } else {
            return Err(format_err(line, format!("unexpected `{content}`")));
        }
    }
    if let Some(d) = draft {
        return Err(format_err(
            d.line,
            format!("signature `{}` is missing `end`", d.id),
        ));
    }
    Ok(SignatureDatabase {
        version,
        signatures,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_round_trips() {
        let db = default_database();
        let text = db.to_text();
        assert_eq!(load_database(&text).unwrap(), db);
    }

    #[test]
    fn default_contents() {
        let db = default_database();
        let ids: Vec<_> = db.signatures.iter().map(|s| s.id.as_str()).collect();
        assert_eq!(ids, ["cx-delay", "xy-delay"]);
        for s in &db.signatures {
            assert_eq!((s.suspicious_at, s.malicious_at), (5, 10));
            // every signature needs a real gate; delay-only chains are inert
            assert!(s.unit.iter().any(|t| t.class != KindClass::AnyDelay));
            assert!(!s
                .unit
                .iter()
                .any(|t| matches!(t.class, KindClass::PauliZ | KindClass::Ident)));
        }
    }

    #[test]
    fn example_block_loads() {
        let text = "signature cx-delay\n  unit: CX a b ; DELAY any @ a\n  suspicious_at: 5\n  malicious_at: 10\nend\n";
        let db = load_database(text).unwrap();
        let sig = &db.signatures[0];
        assert_eq!(sig.vars, ["a", "b"]);
        assert_eq!(
            sig.unit[1],
            GateTemplate::delay(DurationConstraint::Any, &["a"])
        );
    }

    #[test]
    fn empty_database() {
        let db = load_database("# nothing yet\n").unwrap();
        assert!(db.signatures.is_empty());
    }

    #[test]
    fn thresholds_must_be_ordered() {
        let text = "signature s\n unit: PAULI_XY a ; DELAY any @ a\n suspicious_at: 10\n malicious_at: 5\nend";
        assert!(matches!(
            load_database(text),
            Err(SignatureError::BadThresholds { .. })
        ));
    }

    #[test]
    fn duplicate_ids() {
        let block = "signature s\n unit: H a\n suspicious_at: 1\n malicious_at: 2\nend\n";
        let err = load_database(&format!("{block}{block}")).unwrap_err();
        assert!(matches!(err, SignatureError::DuplicateId { line: 6, .. }));
    }

    #[test]
    fn arity_errors() {
        let text = "signature s\n unit: CX a\n suspicious_at: 1\n malicious_at: 2\nend";
        assert!(matches!(
            load_database(text),
            Err(SignatureError::BadArity { line: 2, .. })
        ));
        let text = "signature s\n unit: PAULI_X a b\n suspicious_at: 1\n malicious_at: 2\nend";
        assert!(matches!(
            load_database(text),
            Err(SignatureError::BadArity { .. })
        ));
    }

    #[test]
    fn format_errors_carry_lines() {
        for (text, want) in [
            ("signature s\n unit: FOO a\n suspicious_at: 1\n malicious_at: 2\nend", 2),
            ("signature s\n unit: H a\n suspicious_at: x\n malicious_at: 2\nend", 3),
            ("signature s\n unit: H a\n malicious_at: 2\nend", 4),
            ("signature s\n unit: H a\n suspicious_at: 1\n malicious_at: 2\n", 1),
            ("bogus", 1),
            ("signature s\n unit: H a ; DELAY any @ z\n suspicious_at: 1\n malicious_at: 2\nend", 1),
            ("signature s\n unit: CX a a\n suspicious_at: 1\n malicious_at: 2\nend", 2),
            ("signature s\n unit: DELAY sometimes @ a\n vars: a\n suspicious_at: 1\n malicious_at: 2\nend", 2),
        ] {
            match load_database(text) {
                Err(SignatureError::Format { line, .. }) => assert_eq!(line, want, "{text}"),
                other => panic!("{text}: {other:?}"),
            }
        }
    }

    #[test]
    fn declared_delay_only_variable() {
        let text = "signature idle\n unit: DELAY >=100 @ a\n vars: a\n suspicious_at: 3\n malicious_at: 4\nend";
        let db = load_database(text).unwrap();
        assert_eq!(
            db.signatures[0].unit[0].duration,
            DurationConstraint::AtLeast(100)
        );
    }

    #[test]
    fn threshold_override() {
        let db = default_database().with_thresholds(Some(2), None).unwrap();
        assert!(db.signatures.iter().all(|s| s.suspicious_at == 2));
        assert!(default_database().with_thresholds(Some(20), None).is_err());
    }

    #[test]
    fn template_matching() {
        let bind = |v: &str| if v == "a" { QubitRef(2) } else { QubitRef(3) };
        let cx = GateTemplate::gate(KindClass::Cx, &["a", "b"]);
        assert!(cx.matches(&Instruction::cx(2, 3), bind));
        assert!(!cx.matches(&Instruction::cx(3, 2), bind));
        let d = GateTemplate::delay(DurationConstraint::Any, &["a", "b"]);
        assert!(d.matches(&Instruction::delay(3, 0), bind));
        assert!(!d.matches(&Instruction::delay(4, 0), bind));
        let exact = GateTemplate::delay(DurationConstraint::Exact(5), &["a"]);
        assert!(!exact.matches(&Instruction::delay(2, 4), bind));
        let xy = GateTemplate::gate(KindClass::PauliXY, &["a"]);
        assert!(xy.matches(&Instruction::gate1(GateKind::Y, 2), bind));
        assert!(!xy.matches(&Instruction::gate1(GateKind::Z, 2), bind));
    }
}
