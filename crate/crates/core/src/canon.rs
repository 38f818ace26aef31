//! Transpiler-style peephole canonicalization.
//!
//! Two rewrites are modelled:
//!
//! * a run of `K` identical self-inverse gates that is uninterrupted on its
//!   own qubits collapses to `K mod 2` copies (`id` always disappears);
//! * delays on a qubit merge when consecutive, and a qubit that only ever
//!   idles has its delay hoisted to the front of the program.
//!
//! Any `delay` (even of length 0), `barrier` or `measure` on a qubit interrupts
//! a cancellation run there. Interleaving delays is therefore enough to keep a
//! chain of CNOTs alive, which is exactly what the scanner has to see.

use crate::ir::{Circuit, Instruction};
use crate::qasm::{GateKind, SourceLocation};

/// A circuit in canonical form plus the mapping back to the input program.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CanonicalCircuit {
    pub circuit: Circuit,
    /// For each surviving instruction, its index in the input circuit.
    pub origins: Vec<usize>,
    /// For each surviving instruction, the source location of its origin.
    pub provenance: Vec<Option<SourceLocation>>,
}

impl CanonicalCircuit {
    /// Wraps a circuit untouched. Used by the raw diagnostic scan mode.
    pub fn raw(circuit: Circuit) -> Self {
        let origins = (0..circuit.len()).collect();
        let provenance = circuit.instructions().iter().map(|i| i.location).collect();
        CanonicalCircuit {
            circuit,
            origins,
            provenance,
        }
    }
}

/// Canonicalizes a circuit: gate cancellation then delay hoisting, to fixpoint.
pub fn canonicalize(circuit: &Circuit) -> CanonicalCircuit {
    let mut current = circuit.clone();
    let mut origins: Vec<usize> = (0..circuit.len()).collect();
    // Every productive round removes or moves at least one instruction.
    for _ in 0..=circuit.len() {
        let kept = cancel_pass(&current);
        let (next, order) = hoist_pass(&pick(&current, &kept));
        let next_origins: Vec<usize> = order.iter().map(|&i| origins[kept[i]]).collect();
        let done = next == current;
        current = next;
        origins = next_origins;
        if done {
            break;
        }
    }
    let provenance = origins
        .iter()
        .map(|&i| circuit.instructions()[i].location)
        .collect();
    CanonicalCircuit {
        circuit: current,
        origins,
        provenance,
    }
}

/// Collapses uninterrupted runs of identical self-inverse gates to their
/// parity and drops `id`, to fixpoint.
pub fn cancel_self_inverse_runs(circuit: &Circuit) -> Circuit {
    pick(circuit, &cancel_pass(circuit))
}

/// Merges consecutive delays per qubit and hoists delay-only qubits to the
/// front.
pub fn hoist_pure_delays(circuit: &Circuit) -> Circuit {
    hoist_pass(circuit).0
}

fn pick(circuit: &Circuit, indices: &[usize]) -> Circuit {
    let insts = indices
        .iter()
        .map(|&i| circuit.instructions()[i].clone())
        .collect();
    Circuit::new(circuit.qubit_count(), insts).expect("subset of a valid circuit")
}

/// Indices of the instructions that survive cancellation.
///
/// Each qubit keeps a stack of surviving instructions. A new self-inverse gate
/// annihilates with the instruction on top of all its qubits' stacks when that
/// instruction is the same operation; popping then re-exposes earlier gates, so
/// nested pairs such as `x; cx; cx; x` vanish in one sweep.
fn cancel_pass(circuit: &Circuit) -> Vec<usize> {
    let insts = circuit.instructions();
    let mut stacks: Vec<Vec<usize>> = vec![Vec::new(); circuit.qubit_count()];
    let mut alive = vec![false; insts.len()];
    for (i, inst) in insts.iter().enumerate() {
        if inst.kind == GateKind::Id {
            continue;
        }
        if inst.kind.is_self_inverse() {
            let top = stacks[inst.operands[0].0].last().copied();
            let partner = top.filter(|&j| {
                insts[j].same_operation(inst)
                    && inst.operands.iter().all(|q| stacks[q.0].last() == Some(&j))
            });
            if let Some(j) = partner {
                for q in &inst.operands {
                    stacks[q.0].pop();
                }
                alive[j] = false;
                continue;
            }
        }
        for q in &inst.operands {
            stacks[q.0].push(i);
        }
        alive[i] = true;
    }
    (0..insts.len()).filter(|&i| alive[i]).collect()
}

/// Returns the rewritten circuit and, for each output instruction, the index
/// of the input instruction it came from.
fn hoist_pass(circuit: &Circuit) -> (Circuit, Vec<usize>) {
    let insts = circuit.instructions();
    let mut merged: Vec<Option<Instruction>> = insts.iter().cloned().map(Some).collect();
    let mut open_delay: Vec<Option<usize>> = vec![None; circuit.qubit_count()];
    for (i, inst) in insts.iter().enumerate() {
        if inst.kind == GateKind::Delay {
            let q = inst.operands[0].0;
            match open_delay[q] {
                Some(head) => {
                    let add = inst.duration_dt.unwrap_or(0);
                    let target = merged[head].as_mut().expect("open delay is alive");
                    target.duration_dt = Some(target.duration_dt.unwrap_or(0).saturating_add(add));
                    merged[i] = None;
                }
                None => open_delay[q] = Some(i),
            }
        } else {
            for q in &inst.operands {
                open_delay[q.0] = None;
            }
        }
    }

    // A qubit whose whole timeline is one merged delay only idles.
    let mut busy = vec![false; circuit.qubit_count()];
    let mut idle_delay: Vec<Option<usize>> = vec![None; circuit.qubit_count()];
    for (i, inst) in merged.iter().enumerate() {
        let Some(inst) = inst else { continue };
        if inst.kind == GateKind::Delay {
            idle_delay[inst.operands[0].0] = Some(i);
        } else {
            for q in &inst.operands {
                busy[q.0] = true;
            }
        }
    }
    let hoisted: Vec<usize> = (0..circuit.qubit_count())
        .filter(|&q| !busy[q])
        .filter_map(|q| idle_delay[q])
        .collect();
    let mut order = hoisted.clone();
    order.extend((0..insts.len()).filter(|i| merged[*i].is_some() && !hoisted.contains(i)));
    let out = order
        .iter()
        .map(|&i| merged[i].clone().expect("alive"))
        .collect();
    (
        Circuit::new(circuit.qubit_count(), out).expect("rewrite of a valid circuit"),
        order,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ir::QubitRef;
    use GateKind::*;

    fn circ(n: usize, insts: Vec<Instruction>) -> Circuit {
        Circuit::new(n, insts).unwrap()
    }

    #[test]
    fn even_chain_vanishes_odd_keeps_one() {
        for k in 0..12 {
            let c = circ(4, (0..k).map(|_| Instruction::cx(2, 3)).collect());
            assert_eq!(cancel_self_inverse_runs(&c).count(Cx), k % 2, "k={k}");
        }
    }

    #[test]
    fn zero_delay_blocks_cancellation() {
        let mut insts = Vec::new();
        for _ in 0..6 {
            insts.push(Instruction::cx(2, 3));
            insts.push(Instruction::delay(2, 0));
        }
        let out = canonicalize(&circ(4, insts));
        assert_eq!(out.circuit.count(Cx), 6);
        assert_eq!(out.circuit.count(Delay), 6);
    }

    #[test]
    fn unrelated_qubit_does_not_interrupt() {
        let c = circ(
            4,
            vec![
                Instruction::cx(2, 3),
                Instruction::gate1(H, 0),
                Instruction::cx(2, 3),
            ],
        );
        let out = cancel_self_inverse_runs(&c);
        assert_eq!(out.count(Cx), 0);
        assert_eq!(out.count(H), 1);
    }

    #[test]
    fn reversed_cx_is_a_different_gate() {
        let c = circ(2, vec![Instruction::cx(0, 1), Instruction::cx(1, 0)]);
        assert_eq!(cancel_self_inverse_runs(&c).count(Cx), 2);
    }

    #[test]
    fn cz_is_symmetric() {
        let c = circ(
            2,
            vec![Instruction::gate2(Cz, 0, 1), Instruction::gate2(Cz, 1, 0)],
        );
        assert!(cancel_self_inverse_runs(&c).is_empty());
    }

    #[test]
    fn nested_pairs_cascade() {
        let c = circ(
            2,
            vec![
                Instruction::gate1(X, 0),
                Instruction::cx(0, 1),
                Instruction::cx(0, 1),
                Instruction::gate1(X, 0),
            ],
        );
        assert!(cancel_self_inverse_runs(&c).is_empty());
    }

    #[test]
    fn identity_is_dropped_and_transparent() {
        let c = circ(
            2,
            vec![
                Instruction::cx(0, 1),
                Instruction::gate1(Id, 1),
                Instruction::cx(0, 1),
            ],
        );
        assert!(cancel_self_inverse_runs(&c).is_empty());
    }

    #[test]
    fn barrier_and_measure_interrupt() {
        let barrier = Instruction::new(Barrier, vec![QubitRef(0), QubitRef(1)], None).unwrap();
        let c = circ(
            2,
            vec![Instruction::cx(0, 1), barrier, Instruction::cx(0, 1)],
        );
        assert_eq!(cancel_self_inverse_runs(&c).count(Cx), 2);
        let c = circ(
            2,
            vec![
                Instruction::gate1(X, 0),
                Instruction::gate1(Measure, 0),
                Instruction::gate1(X, 0),
            ],
        );
        assert_eq!(cancel_self_inverse_runs(&c).count(X), 2);
    }

    #[test]
    fn idle_delays_merge_and_hoist() {
        let c = circ(
            5,
            vec![
                Instruction::cx(2, 3),
                Instruction::delay(4, 10),
                Instruction::cx(2, 3),
                Instruction::delay(4, 20),
                Instruction::gate1(X, 0),
            ],
        );
        let out = canonicalize(&c);
        let insts = out.circuit.instructions();
        assert_eq!(insts[0], Instruction::delay(4, 30));
        assert_eq!(insts.len(), 2);
        assert_eq!(out.origins, vec![1, 4]);
    }

    #[test]
    fn interleaved_delays_stay_in_place() {
        let c = circ(
            4,
            vec![
                Instruction::cx(2, 3),
                Instruction::delay(2, 1),
                Instruction::cx(2, 3),
            ],
        );
        assert_eq!(hoist_pure_delays(&c), c);
        assert_eq!(canonicalize(&c).circuit, c);
    }

    #[test]
    fn consecutive_delays_between_gates_merge() {
        let c = circ(
            2,
            vec![
                Instruction::gate1(X, 0),
                Instruction::delay(0, 1),
                Instruction::delay(0, 2),
                Instruction::gate1(X, 0),
            ],
        );
        let out = hoist_pure_delays(&c);
        assert_eq!(out.instructions()[1], Instruction::delay(0, 3));
        assert_eq!(out.len(), 3);
    }

    #[test]
    fn empty_is_identity() {
        let c = circ(3, vec![]);
        assert_eq!(hoist_pure_delays(&c), c);
        assert_eq!(canonicalize(&c).circuit, c);
    }

    #[test]
    fn pure_chain_of_100_disappears() {
        let c = circ(4, (0..100).map(|_| Instruction::cx(2, 3)).collect());
        assert_eq!(canonicalize(&c).circuit.count(Cx), 0);
    }

    #[test]
    fn odd_survivor_is_last_of_run() {
        let loc = |line| SourceLocation {
            line,
            column: 1,
            byte_offset: line as usize * 10,
        };
        let c = circ(
            2,
            (1..=3)
                .map(|l| Instruction::cx(0, 1).with_location(loc(l)))
                .collect(),
        );
        let out = canonicalize(&c);
        assert_eq!(out.provenance, vec![Some(loc(3))]);
    }
}
