//! Inputs for the criterion benchmarks in `benches/`.

use qshield::gen::{generate, FixtureSpec};

/// QASM text of a CNOT+delay attacker with `k` repetitions next to the
/// victim circuit.
pub fn attacker_source(k: usize) -> String {
    generate(&FixtureSpec {
        family: "cx-delay".parse().expect("known family"),
        k,
        delay_dt: 1,
        qubits: vec![2, 3],
    })
    .expect("valid fixture")
}

/// A wide program: `width` qubits, every neighbouring pair running a short
/// attacker chain, so the scanner has many bindings to try.
pub fn wide_source(width: usize, k: usize) -> String {
    let mut text = format!("OPENQASM 2.0;\nqreg q[{width}];\n");
    for _ in 0..k {
        for a in 0..width - 1 {
            text.push_str(&format!("cx q[{a}],q[{}];\ndelay(1) q[{a}];\n", a + 1));
        }
    }
    text
}
