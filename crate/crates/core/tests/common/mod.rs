//! Helpers shared by the integration tests and the acceptance target.
//!
//! The unitary builder here deliberately avoids the crate's simulator: it
//! works on plain arrays and bit arithmetic so it can serve as an oracle.

#![allow(dead_code)]

use std::path::PathBuf;

use num_complex::Complex64;
use qshield::{Circuit, GateKind, Instruction, QubitRef};
use rand::seq::SliceRandom;
use rand::Rng;

pub const DIM: usize = 8;
pub type Unitary = [[Complex64; DIM]; DIM];

fn identity() -> Unitary {
    let mut u = [[Complex64::new(0.0, 0.0); DIM]; DIM];
    for (i, row) in u.iter_mut().enumerate() {
        row[i] = Complex64::new(1.0, 0.0);
    }
    u
}

/// Left-multiplies every column of `u` by a one-qubit gate on qubit `q`.
#[allow(clippy::needless_range_loop)]
fn apply_1q(u: &mut Unitary, q: usize, g: [[Complex64; 2]; 2]) {
    let bit = 1 << q;
    for col in 0..DIM {
        for row in 0..DIM {
            if row & bit != 0 {
                continue;
            }
            let (a, b) = (u[row][col], u[row | bit][col]);
            u[row][col] = g[0][0] * a + g[0][1] * b;
            u[row | bit][col] = g[1][0] * a + g[1][1] * b;
        }
    }
}

/// Unitary of a circuit over at most three qubits, qubit `q` being bit `q`
/// of the basis index. Delays, barriers and identities contribute nothing.
pub fn unitary(circuit: &Circuit) -> Unitary {
    assert!(circuit.qubit_count() <= 3);
    let zero = Complex64::new(0.0, 0.0);
    let one = Complex64::new(1.0, 0.0);
    let i = Complex64::new(0.0, 1.0);
    let s = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
    let mut u = identity();
    for inst in circuit.instructions() {
        let q: Vec<usize> = inst.operands.iter().map(|q| q.0).collect();
        match inst.kind {
            GateKind::X => apply_1q(&mut u, q[0], [[zero, one], [one, zero]]),
            GateKind::Y => apply_1q(&mut u, q[0], [[zero, -i], [i, zero]]),
            GateKind::Z => apply_1q(&mut u, q[0], [[one, zero], [zero, -one]]),
            GateKind::H => apply_1q(&mut u, q[0], [[s, s], [s, -s]]),
            GateKind::Cx => {
                let (c, t) = (1 << q[0], 1 << q[1]);
                for row in 0..DIM {
                    if row & c != 0 && row & t == 0 {
                        u.swap(row, row | t);
                    }
                }
            }
            GateKind::Cz => {
                let both = (1 << q[0]) | (1 << q[1]);
                for row in u.iter_mut().enumerate().filter(|(r, _)| r & both == both) {
                    for x in row.1.iter_mut() {
                        *x = -*x;
                    }
                }
            }
            GateKind::Id | GateKind::Delay | GateKind::Barrier => {}
            GateKind::Measure => panic!("measure has no unitary"),
        }
    }
    u
}

/// Largest entry of |a - e^{iφ} b| after fixing φ from the largest entry of b.
pub fn phase_distance(a: &Unitary, b: &Unitary) -> f64 {
    let (mut r, mut c) = (0, 0);
    for row in 0..DIM {
        for col in 0..DIM {
            if b[row][col].norm() > b[r][c].norm() {
                (r, c) = (row, col);
            }
        }
    }
    let phase = a[r][c] / b[r][c];
    let mut worst: f64 = 0.0;
    for row in 0..DIM {
        for col in 0..DIM {
            worst = worst.max((a[row][col] - phase * b[row][col]).norm());
        }
    }
    worst
}

/// Random circuit on 1..=3 qubits with up to `max_len` instructions, biased
/// toward repeats so cancellation has something to do.
pub fn random_small_circuit(rng: &mut impl Rng, max_len: usize) -> Circuit {
    let nq = rng.gen_range(1..=3);
    let len = rng.gen_range(0..=max_len);
    let mut out: Vec<Instruction> = Vec::with_capacity(len);
    while out.len() < len {
        if let Some(last) = out.last() {
            if rng.gen_bool(0.35) {
                out.push(last.clone());
                continue;
            }
        }
        out.push(random_gate(rng, nq, true));
    }
    Circuit::new(nq, out).unwrap()
}

/// One random unitary-or-idle instruction on `nq` qubits.
pub fn random_gate(rng: &mut impl Rng, nq: usize, allow_two_qubit: bool) -> Instruction {
    let mut qubits: Vec<usize> = (0..nq).collect();
    qubits.shuffle(rng);
    let two = allow_two_qubit && nq >= 2;
    match rng.gen_range(0..10) {
        0 | 1 if two => Instruction::cx(qubits[0], qubits[1]),
        2 if two => Instruction::gate2(GateKind::Cz, qubits[0], qubits[1]),
        3 => Instruction::delay(qubits[0], rng.gen_range(0..3)),
        4 if nq >= 1 => {
            let n = rng.gen_range(1..=nq);
            Instruction::new(
                GateKind::Barrier,
                qubits[..n].iter().map(|&q| QubitRef(q)).collect(),
                None,
            )
            .unwrap()
        }
        _ => {
            let kind = *[
                GateKind::X,
                GateKind::Y,
                GateKind::Z,
                GateKind::H,
                GateKind::Id,
            ]
            .choose(rng)
            .unwrap();
            Instruction::gate1(kind, qubits[0])
        }
    }
}

/// Random circuit on up to 8 qubits and up to 200 instructions, seeded with
/// attacker-style units so the default signatures fire at varied k.
pub fn random_scan_circuit(rng: &mut impl Rng) -> Circuit {
    let nq = rng.gen_range(1..=8);
    let len = rng.gen_range(0..=200);
    let mut out: Vec<Instruction> = Vec::with_capacity(len);
    while out.len() < len {
        let room = len - out.len();
        let mut qubits: Vec<usize> = (0..nq).collect();
        qubits.shuffle(rng);
        match rng.gen_range(0..6) {
            0 if nq >= 2 && room >= 2 => {
                let (a, b) = (qubits[0], qubits[1]);
                let reps = rng.gen_range(1..=(room / 2).min(14));
                for _ in 0..reps {
                    out.push(Instruction::cx(a, b));
                    let on = if rng.gen_bool(0.8) { a } else { b };
                    out.push(Instruction::delay(on, rng.gen_range(0..4)));
                }
            }
            1 if room >= 2 => {
                let a = qubits[0];
                let reps = rng.gen_range(1..=(room / 2).min(14));
                for _ in 0..reps {
                    let kind = if rng.gen_bool(0.5) {
                        GateKind::X
                    } else {
                        GateKind::Y
                    };
                    out.push(Instruction::gate1(kind, a));
                    out.push(Instruction::delay(a, rng.gen_range(0..4)));
                }
            }
            2 => out.push(
                Instruction::new(GateKind::Measure, vec![QubitRef(qubits[0])], None).unwrap(),
            ),
            _ => out.push(random_gate(rng, nq, true)),
        }
    }
    out.truncate(len);
    Circuit::new(nq, out).unwrap()
}

pub fn fixture_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures")
}

/// Every `.qasm` file of the fixture corpus with its contents, sorted by name.
pub fn fixture_corpus() -> Vec<(PathBuf, String)> {
    let mut files: Vec<PathBuf> = std::fs::read_dir(fixture_dir())
        .expect("fixture directory")
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|x| x == "qasm"))
        .collect();
    files.sort();
    files
        .into_iter()
        .map(|p| {
            let text = std::fs::read_to_string(&p).unwrap();
            (p, text)
        })
        .collect()
}
