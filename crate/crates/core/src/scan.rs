//! Signature matching over canonical circuits.
//!
//! For a signature and a binding of its variables to concrete qubits, the
//! scanner walks the timeline of the bound qubits (every instruction touching
//! at least one of them, in program order). A run is a stretch of that timeline
//! that realizes the unit's templates cyclically, starting from the first
//! template; `k` counts complete repetitions. Instructions on other qubits are
//! invisible, and any bound-qubit instruction that is not the expected next
//! template ends the run. Runs are maximal: a run is reported at the first
//! start position from which no complete unit precedes it.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt;

use serde::Serialize;
use thiserror::Error;

use crate::canon::CanonicalCircuit;
use crate::ir::{Circuit, CouplingError, CouplingMap, Instruction, QubitRef};
use crate::qasm::{GateKind, SourceLocation};
use crate::signature::{DurationConstraint, KindClass, Signature, SignatureDatabase};

pub const DEFAULT_MAX_BINDINGS: usize = 1_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Verdict {
    Clean,
    Suspicious,
    Malicious,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Clean => "CLEAN",
            Verdict::Suspicious => "SUSPICIOUS",
            Verdict::Malicious => "MALICIOUS",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub struct MatchRun {
    pub signature_id: String,
    pub binding: BTreeMap<String, QubitRef>,
    /// Index into the scanned (canonical) circuit.
    pub start_instruction_index: usize,
    pub k: usize,
    /// Source of the first instruction of each repetition.
    pub source_locations: Vec<Option<SourceLocation>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub struct SignatureCount {
    pub occurrences: usize,
    pub max_k: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ScanReport {
    pub runs: Vec<MatchRun>,
    pub verdict: Verdict,
    pub per_signature_counts: BTreeMap<String, SignatureCount>,
}

impl ScanReport {
    /// Sorts runs and derives counts and the verdict from them.
    pub fn from_runs(mut runs: Vec<MatchRun>, db: &SignatureDatabase) -> Self {
        runs.sort();
        let mut per_signature_counts: BTreeMap<String, SignatureCount> = db
            .signatures
            .iter()
            .map(|s| (s.id.clone(), SignatureCount::default()))
            .collect();
        for run in &runs {
            let entry = per_signature_counts
                .entry(run.signature_id.clone())
                .or_default();
            entry.occurrences += 1;
            entry.max_k = entry.max_k.max(run.k);
        }
        let verdict = verdict_of(&runs, db);
        ScanReport {
            runs,
            verdict,
            per_signature_counts,
        }
    }
}

/// Most severe classification over all runs.
pub fn verdict_of(runs: &[MatchRun], db: &SignatureDatabase) -> Verdict {
    runs.iter()
        .filter_map(|run| {
            let sig = db.get(&run.signature_id)?;
            Some(if run.k >= sig.malicious_at {
                Verdict::Malicious
            } else if run.k >= sig.suspicious_at {
                Verdict::Suspicious
            } else {
                Verdict::Clean
            })
        })
        .max()
        .unwrap_or(Verdict::Clean)
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ScanError {
    #[error(
        "signature `{signature}` admits more than {limit} qubit bindings on this circuit; \
         supply a coupling map"
    )]
    BindingExplosion { signature: String, limit: usize },
    #[error("coupling map: {0}")]
    Coupling(#[from] CouplingError),
}

#[derive(Debug, Clone, Copy)]
pub struct ScanOptions<'a> {
    pub coupling: Option<&'a CouplingMap>,
    pub max_bindings: usize,
}

impl Default for ScanOptions<'_> {
    fn default() -> Self {
        ScanOptions {
            coupling: None,
            max_bindings: DEFAULT_MAX_BINDINGS,
        }
    }
}

/// Scans a canonical circuit with every signature of `db`.
pub fn scan(
    circuit: &CanonicalCircuit,
    db: &SignatureDatabase,
    coupling: Option<&CouplingMap>,
) -> Result<ScanReport, ScanError> {
    scan_with(
        circuit,
        db,
        ScanOptions {
            coupling,
            ..ScanOptions::default()
        },
    )
}

pub fn scan_with(
    circuit: &CanonicalCircuit,
    db: &SignatureDatabase,
    options: ScanOptions<'_>,
) -> Result<ScanReport, ScanError> {
    let circ = &circuit.circuit;
    if let Some(map) = options.coupling {
        map.check(circ)?;
    }
    let index = CircuitIndex::new(circ);
    let mut runs = Vec::new();
    for sig in &db.signatures {
        let compiled = Compiled::new(sig);
        let total = count_bindings(&compiled, circ.qubit_count(), options);
        if total > options.max_bindings {
            return Err(ScanError::BindingExplosion {
                signature: sig.id.clone(),
                limit: options.max_bindings,
            });
        }
        for binding in candidate_bindings(&compiled, &index, options.coupling) {
            find_runs(sig, &compiled, &binding, circuit, &index, &mut runs);
        }
    }
    Ok(ScanReport::from_runs(runs, db))
}

struct CompiledTemplate {
    class: KindClass,
    vars: Vec<usize>,
    duration: DurationConstraint,
}

struct Compiled {
    templates: Vec<CompiledTemplate>,
    var_count: usize,
}

impl Compiled {
    fn new(sig: &Signature) -> Self {
        let templates = sig
            .unit
            .iter()
            .map(|t| CompiledTemplate {
                class: t.class,
                vars: t.vars.iter().map(|v| sig.var_index(v)).collect(),
                duration: t.duration,
            })
            .collect();
        Compiled {
            templates,
            var_count: sig.vars.len(),
        }
    }
}

impl CompiledTemplate {
    fn matches(&self, inst: &Instruction, binding: &[QubitRef]) -> bool {
        if !self.class.admits(inst.kind) {
            return false;
        }
        match self.class {
            KindClass::AnyDelay => {
                self.duration.admits(inst.duration_dt.unwrap_or(0))
                    && self.vars.iter().any(|&v| binding[v] == inst.operands[0])
            }
            KindClass::Cz => {
                let (a, b) = (binding[self.vars[0]], binding[self.vars[1]]);
                inst.operands == [a, b] || inst.operands == [b, a]
            }
            _ => self
                .vars
                .iter()
                .zip(&inst.operands)
                .all(|(&v, q)| binding[v] == *q),
        }
    }

    fn is_gate(&self) -> bool {
        self.class != KindClass::AnyDelay
    }
}

/// Per-circuit lookups shared by every signature.
struct CircuitIndex<'c> {
    circuit: &'c Circuit,
    qubit_lines: Vec<Vec<usize>>,
    /// (kind, operands) of every non-delay instruction.
    gates: HashSet<(GateKind, Vec<QubitRef>)>,
    /// Delay durations per qubit.
    delays: Vec<Vec<u64>>,
}

impl<'c> CircuitIndex<'c> {
    fn new(circuit: &'c Circuit) -> Self {
        let mut gates = HashSet::new();
        let mut delays = vec![Vec::new(); circuit.qubit_count()];
        for inst in circuit.instructions() {
            if inst.kind == GateKind::Delay {
                delays[inst.operands[0].0].push(inst.duration_dt.unwrap_or(0));
            } else {
                gates.insert((inst.kind, inst.operands.clone()));
            }
        }
        CircuitIndex {
            circuit,
            qubit_lines: circuit.qubit_timelines(),
            gates,
            delays,
        }
    }

    /// Whether the template can match at least one instruction under a
    /// binding in which all of its variables are set.
    fn template_occurs(&self, t: &CompiledTemplate, binding: &[QubitRef]) -> bool {
        let qs: Vec<QubitRef> = t.vars.iter().map(|&v| binding[v]).collect();
        match t.class {
            KindClass::AnyDelay => qs
                .iter()
                .any(|q| self.delays[q.0].iter().any(|&d| t.duration.admits(d))),
            KindClass::Cz => {
                self.gates.contains(&(GateKind::Cz, qs.clone()))
                    || self.gates.contains(&(GateKind::Cz, vec![qs[1], qs[0]]))
            }
            class => GateKind::ALL
                .iter()
                .any(|&k| class.admits(k) && self.gates.contains(&(k, qs.clone()))),
        }
    }

    /// Merged, ordered timeline of a set of qubits.
    fn timeline(&self, qubits: &BTreeSet<QubitRef>) -> Vec<usize> {
        let mut idx: Vec<usize> = qubits
            .iter()
            .flat_map(|q| self.qubit_lines[q.0].iter().copied())
            .collect();
        idx.sort_unstable();
        idx.dedup();
        idx
    }
}

/// Whether a partial binding respects the coupling map for every two-qubit
/// template whose variables are all set.
fn coupled(c: &Compiled, binding: &[Option<QubitRef>], map: Option<&CouplingMap>) -> bool {
    let Some(map) = map else { return true };
    c.templates
        .iter()
        .filter(|t| t.is_gate() && t.vars.len() == 2)
        .all(|t| match (binding[t.vars[0]], binding[t.vars[1]]) {
            (Some(a), Some(b)) => map.contains(a.0, b.0),
            _ => true,
        })
}

/// Number of injective, coupling-respecting bindings, saturating just past
/// the configured limit.
fn count_bindings(c: &Compiled, qubit_count: usize, options: ScanOptions<'_>) -> usize {
    let cap = options.max_bindings.saturating_add(1);
    if options.coupling.is_none() {
        let mut total: usize = 1;
        for i in 0..c.var_count {
            let Some(choices) = qubit_count.checked_sub(i) else {
                return 0;
            };
            total = total.saturating_mul(choices).min(cap);
        }
        return total;
    }
    let mut count = 0;
    let mut binding = vec![None; c.var_count];
    let mut used = vec![false; qubit_count];
    count_rec(
        c,
        0,
        &mut binding,
        &mut used,
        options.coupling,
        cap,
        &mut count,
    );
    count
}

fn count_rec(
    c: &Compiled,
    var: usize,
    binding: &mut [Option<QubitRef>],
    used: &mut [bool],
    map: Option<&CouplingMap>,
    cap: usize,
    count: &mut usize,
) {
    if *count >= cap {
        return;
    }
    if var == c.var_count {
        *count += 1;
        return;
    }
    for q in 0..used.len() {
        if used[q] {
            continue;
        }
        binding[var] = Some(QubitRef(q));
        if coupled(c, binding, map) {
            used[q] = true;
            count_rec(c, var + 1, binding, used, map, cap, count);
            used[q] = false;
        }
        binding[var] = None;
    }
}

/// Injective bindings that respect the coupling map and under which every
/// template of the unit occurs somewhere in the circuit.
fn candidate_bindings(
    c: &Compiled,
    index: &CircuitIndex<'_>,
    map: Option<&CouplingMap>,
) -> Vec<Vec<QubitRef>> {
    let mut out = Vec::new();
    let mut binding = vec![None; c.var_count];
    let mut used = vec![false; index.circuit.qubit_count()];
    candidates_rec(c, index, map, 0, &mut binding, &mut used, &mut out);
    out
}

fn candidates_rec(
    c: &Compiled,
    index: &CircuitIndex<'_>,
    map: Option<&CouplingMap>,
    var: usize,
    binding: &mut Vec<Option<QubitRef>>,
    used: &mut Vec<bool>,
    out: &mut Vec<Vec<QubitRef>>,
) {
    if var == c.var_count {
        out.push(binding.iter().map(|q| q.expect("complete")).collect());
        return;
    }
    for q in 0..used.len() {
        if used[q] {
            continue;
        }
        binding[var] = Some(QubitRef(q));
        // Templates whose last variable is `var` become checkable now.
        let viable = coupled(c, binding, map)
            && c.templates
                .iter()
                .filter(|t| t.vars.iter().max() == Some(&var))
                .all(|t| {
                    // Unset variables are only those > var, so this is total.
                    let full: Vec<QubitRef> = binding
                        .iter()
                        .map(|b| b.unwrap_or(QubitRef(usize::MAX)))
                        .collect();
                    index.template_occurs(t, &full)
                });
        if viable {
            used[q] = true;
            candidates_rec(c, index, map, var + 1, binding, used, out);
            used[q] = false;
        }
        binding[var] = None;
    }
}

fn find_runs(
    sig: &Signature,
    c: &Compiled,
    binding: &[QubitRef],
    circuit: &CanonicalCircuit,
    index: &CircuitIndex<'_>,
    runs: &mut Vec<MatchRun>,
) {
    let qubits: BTreeSet<QubitRef> = binding.iter().copied().collect();
    let line = index.timeline(&qubits);
    let insts = circuit.circuit.instructions();
    let unit = c.templates.len();
    // reach[p * unit + j]: length of the cyclic match starting at timeline
    // position p with template j.
    let mut reach = vec![0usize; (line.len() + 1) * unit];
    for p in (0..line.len()).rev() {
        for j in 0..unit {
            if c.templates[j].matches(&insts[line[p]], binding) {
                reach[p * unit + j] = 1 + reach[(p + 1) * unit + (j + 1) % unit];
            }
        }
    }
    let whole = |p: usize| reach[p * unit] / unit;
    for s in 0..line.len() {
        let k = whole(s);
        if k == 0 || (s >= unit && whole(s - unit) > 0) {
            continue;
        }
        runs.push(MatchRun {
            signature_id: sig.id.clone(),
            binding: sig
                .vars
                .iter()
                .cloned()
                .zip(binding.iter().copied())
                .collect(),
            start_instruction_index: line[s],
            k,
            source_locations: (0..k)
                .map(|r| circuit.provenance[line[s + r * unit]])
                .collect(),
        });
    }
}

/// Reference matcher: enumerates every injective binding and every start
/// position directly. Meant for circuits of at most 8 qubits and 200
/// instructions.
pub fn brute_force_scan(circuit: &CanonicalCircuit, db: &SignatureDatabase) -> ScanReport {
    let circ = &circuit.circuit;
    let n = circ.qubit_count();
    let mut runs = Vec::new();
    for sig in &db.signatures {
        for assignment in injections(sig.vars.len(), n) {
            let lookup = |name: &str| assignment[sig.var_index(name)];
            let qubits: BTreeSet<QubitRef> = assignment.iter().copied().collect();
            let line = circ.timeline(&qubits);
            let u = sig.unit.len();
            let reps_from = |s: usize| -> usize {
                let mut p = s;
                while p < line.len() && sig.unit[(p - s) % u].matches(line[p].1, lookup) {
                    p += 1;
                }
                (p - s) / u
            };
            for s in 0..line.len() {
                let k = reps_from(s);
                if k == 0 {
                    continue;
                }
                let extends_left =
                    s >= u && (0..u).all(|j| sig.unit[j].matches(line[s - u + j].1, lookup));
                if extends_left {
                    continue;
                }
                runs.push(MatchRun {
                    signature_id: sig.id.clone(),
                    binding: sig
                        .vars
                        .iter()
                        .cloned()
                        .zip(assignment.iter().copied())
                        .collect(),
                    start_instruction_index: line[s].0,
                    k,
                    source_locations: (0..k)
                        .map(|r| circuit.provenance[line[s + r * u].0])
                        .collect(),
                });
            }
        }
    }
    ScanReport::from_runs(runs, db)
}

/// All injective maps from `vars` variables into `0..n`.
fn injections(vars: usize, n: usize) -> Vec<Vec<QubitRef>> {
    let mut out = vec![Vec::new()];
    for _ in 0..vars {
        out = out
            .into_iter()
            .flat_map(|prefix: Vec<QubitRef>| {
                (0..n)
                    .map(QubitRef)
                    .filter(|q| !prefix.contains(q))
                    .map(|q| {
                        let mut next = prefix.clone();
                        next.push(q);
                        next
                    })
                    .collect::<Vec<_>>()
            })
            .collect();
    }
    out
}
