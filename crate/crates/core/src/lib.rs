//! Transpile-aware antivirus for quantum circuits.
//!
//! The pipeline is [`qasm::parse`] → [`ir::lower`] → [`canon::canonicalize`] →
//! [`scan::scan`]. [`sim`] holds the crosstalk model used to justify the
//! built-in signatures, and [`gen`] writes attack fixtures.

pub mod canon;
pub mod gen;
pub mod ir;
pub mod qasm;
pub mod scan;
pub mod signature;
pub mod sim;

pub use canon::{canonicalize, CanonicalCircuit};
pub use ir::{lower, Circuit, CouplingMap, Instruction, QubitRef};
pub use qasm::{emit, parse, GateKind, ParseError, QasmAst, SourceLocation};
pub use scan::{brute_force_scan, scan, MatchRun, ScanError, ScanReport, Verdict};
pub use signature::{default_database, load_database, Signature, SignatureDatabase};
pub use sim::{AttackFamily, AttackSpec, NoiseModel};
