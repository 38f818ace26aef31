//! Two-qubit density-matrix model of a victim Grover circuit next to an
//! attacker.
//!
//! The attacker is not simulated as quantum state. Each attacker repetition
//! injects noise channels into the victim's two qubits after the victim
//! circuit has run: a CNOT repetition applies depolarizing(`lambda_cx`) then
//! amplitude damping(`gamma`) to each victim qubit, an X or Y repetition
//! applies depolarizing(`lambda_xy`), and delays, Z and I inject nothing.
//! Baseline device noise is a depolarizing channel of strength `p_base` on the
//! operands of every victim gate.

pub mod density;
mod params;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::{self, Write};
use std::str::FromStr;

use thiserror::Error;

use crate::ir::{Circuit, Instruction};
use crate::qasm::GateKind;
pub use density::{Channel, DensityMatrix};
pub use params::{SHIPPED_GAMMA, SHIPPED_LAMBDA_CX, SHIPPED_LAMBDA_XY, SHIPPED_P_BASE};

/// Victim output probability with no attack, which the baseline noise is
/// calibrated to.
pub const BASELINE_TARGET: f64 = 0.87;

/// Where the CNOT+delay curve should settle.
pub const PLATEAU_TARGET: f64 = 0.20;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimError {
    #[error("{field} = {value} is not a probability in [0, 1]")]
    InvalidProbability { field: &'static str, value: f64 },
    #[error("target {target} is outside the attainable range [{low:.6}, {high:.6}]")]
    Unreachable { target: f64, low: f64, high: f64 },
    #[error("unknown attack family `{0}`")]
    UnknownFamily(String),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseModel {
    pub p_base: f64,
    pub lambda_cx: f64,
    pub lambda_xy: f64,
    pub gamma: f64,
}

impl NoiseModel {
    /// Parameters produced by `calibrate_baseline` and `calibrate_crosstalk`.
    pub fn shipped() -> Self {
        NoiseModel {
            p_base: SHIPPED_P_BASE,
            lambda_cx: SHIPPED_LAMBDA_CX,
            lambda_xy: SHIPPED_LAMBDA_XY,
            gamma: SHIPPED_GAMMA,
        }
    }

    pub fn baseline_only(p_base: f64) -> Self {
        NoiseModel {
            p_base,
            lambda_cx: 0.0,
            lambda_xy: 0.0,
            gamma: 0.0,
        }
    }

    pub fn validate(&self) -> Result<(), SimError> {
        for (field, value) in [
            ("p_base", self.p_base),
            ("lambda_cx", self.lambda_cx),
            ("lambda_xy", self.lambda_xy),
            ("gamma", self.gamma),
        ] {
            if !(0.0..=1.0).contains(&value) {
                return Err(SimError::InvalidProbability { field, value });
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Pauli {
    X,
    Y,
    Z,
    I,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum AttackFamily {
    CxDelay,
    DelayOnly,
    PauliDelay(Pauli),
}

impl AttackFamily {
    pub const ALL: [AttackFamily; 6] = [
        AttackFamily::CxDelay,
        AttackFamily::DelayOnly,
        AttackFamily::PauliDelay(Pauli::X),
        AttackFamily::PauliDelay(Pauli::Y),
        AttackFamily::PauliDelay(Pauli::Z),
        AttackFamily::PauliDelay(Pauli::I),
    ];

    pub fn name(self) -> &'static str {
        match self {
            AttackFamily::CxDelay => "cx-delay",
            AttackFamily::DelayOnly => "delay-only",
            AttackFamily::PauliDelay(Pauli::X) => "x-delay",
            AttackFamily::PauliDelay(Pauli::Y) => "y-delay",
            AttackFamily::PauliDelay(Pauli::Z) => "z-delay",
            AttackFamily::PauliDelay(Pauli::I) => "i-delay",
        }
    }
}

impl fmt::Display for AttackFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for AttackFamily {
    type Err = SimError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        AttackFamily::ALL
            .into_iter()
            .find(|f| f.name() == s)
            .ok_or_else(|| SimError::UnknownFamily(s.to_string()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AttackSpec {
    pub family: AttackFamily,
    pub k: u64,
    pub delay_dt: u64,
}

/// Gates of the two-qubit Grover search for |11⟩: one oracle call and one
/// diffusion step.
pub const GROVER2_GATES: [(GateKind, &[usize]); 10] = [
    (GateKind::H, &[0]),
    (GateKind::H, &[1]),
    (GateKind::Cz, &[0, 1]),
    (GateKind::H, &[0]),
    (GateKind::H, &[1]),
    (GateKind::Z, &[0]),
    (GateKind::Z, &[1]),
    (GateKind::Cz, &[0, 1]),
    (GateKind::H, &[0]),
    (GateKind::H, &[1]),
];

pub fn grover2_circuit() -> Circuit {
    let insts = GROVER2_GATES
        .iter()
        .map(|(kind, qs)| match qs {
            [q] => Instruction::gate1(*kind, *q),
            [a, b] => Instruction::gate2(*kind, *a, *b),
            _ => unreachable!(),
        })
        .collect();
    Circuit::new(2, insts).expect("static circuit")
}

/// Worst-case invariant deviations seen across every step of a run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InvariantStats {
    pub max_trace_error: f64,
    pub max_hermiticity_error: f64,
    pub min_eigenvalue: f64,
    pub steps: usize,
}

impl Default for InvariantStats {
    fn default() -> Self {
        InvariantStats {
            max_trace_error: 0.0,
            max_hermiticity_error: 0.0,
            min_eigenvalue: f64::INFINITY,
            steps: 0,
        }
    }
}

impl InvariantStats {
    fn observe(&mut self, rho: &DensityMatrix) {
        self.max_trace_error = self.max_trace_error.max(rho.trace_error());
        self.max_hermiticity_error = self.max_hermiticity_error.max(rho.hermiticity_error());
        self.min_eigenvalue = self.min_eigenvalue.min(rho.min_eigenvalue());
        self.steps += 1;
    }

    pub fn merge(&mut self, other: &InvariantStats) {
        self.max_trace_error = self.max_trace_error.max(other.max_trace_error);
        self.max_hermiticity_error = self.max_hermiticity_error.max(other.max_hermiticity_error);
        self.min_eigenvalue = self.min_eigenvalue.min(other.min_eigenvalue);
        self.steps += other.steps;
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Simulation {
    /// Probability of reading the marked state |11⟩.
    pub probability: f64,
    pub outcomes: [f64; 4],
    pub invariants: InvariantStats,
}

fn gate_unitary(inst: &Instruction) -> Option<density::Mat4> {
    use density::*;
    let q = |i: usize| inst.operands[i].0;
    Some(match inst.kind {
        GateKind::X => on_qubit(&pauli_x(), q(0)),
        GateKind::Y => on_qubit(&pauli_y(), q(0)),
        GateKind::Z => on_qubit(&pauli_z(), q(0)),
        GateKind::H => on_qubit(&hadamard(), q(0)),
        GateKind::Id => on_qubit(&identity2(), q(0)),
        GateKind::Cz => cz(),
        GateKind::Cx => cx(q(0), q(1)),
        GateKind::Delay | GateKind::Barrier | GateKind::Measure => return None,
    })
}

/// Runs the victim, then applies attack repetitions one at a time, calling
/// `at_k` with the state after 0, 1, ..., `max_k` repetitions.
fn evolve(
    victim: &Circuit,
    noise: &NoiseModel,
    family: AttackFamily,
    max_k: u64,
    check: bool,
    mut at_k: impl FnMut(u64, &DensityMatrix),
) -> Result<InvariantStats, SimError> {
    noise.validate()?;
    assert_eq!(
        victim.qubit_count(),
        2,
        "victim must be a two-qubit circuit"
    );
    let mut stats = InvariantStats::default();
    let mut rho = DensityMatrix::ground();
    let apply = |rho: &mut DensityMatrix, ch: &Channel, stats: &mut InvariantStats| {
        rho.apply(ch);
        if check {
            stats.observe(rho);
        }
    };
    let base: Vec<Channel> = (0..2)
        .map(|q| Channel::depolarizing(noise.p_base, q))
        .collect();
    for inst in victim.instructions() {
        let Some(u) = gate_unitary(inst) else {
            continue;
        };
        rho.apply_unitary(&u);
        if check {
            stats.observe(&rho);
        }
        if noise.p_base > 0.0 {
            for q in &inst.operands {
                apply(&mut rho, &base[q.0], &mut stats);
            }
        }
    }
    // Delay length plays no part: idling injects nothing.
    let mut injection: Vec<Channel> = Vec::new();
    for q in 0..2 {
        match family {
            AttackFamily::CxDelay => {
                if noise.lambda_cx > 0.0 {
                    injection.push(Channel::depolarizing(noise.lambda_cx, q));
                }
                if noise.gamma > 0.0 {
                    injection.push(Channel::amplitude_damping(noise.gamma, q));
                }
            }
            AttackFamily::PauliDelay(Pauli::X | Pauli::Y) => {
                if noise.lambda_xy > 0.0 {
                    injection.push(Channel::depolarizing(noise.lambda_xy, q));
                }
            }
            AttackFamily::DelayOnly | AttackFamily::PauliDelay(Pauli::Z | Pauli::I) => {}
        }
    }
    at_k(0, &rho);
    for k in 1..=max_k {
        for ch in &injection {
            apply(&mut rho, ch, &mut stats);
        }
        at_k(k, &rho);
    }
    Ok(stats)
}

fn run(noise: &NoiseModel, attack: &AttackSpec, check: bool) -> Result<Simulation, SimError> {
    let mut outcomes = [0.0; 4];
    let invariants = evolve(
        &grover2_circuit(),
        noise,
        attack.family,
        attack.k,
        check,
        |k, rho| {
            if k == attack.k {
                outcomes = rho.probabilities();
            }
        },
    )?;
    Ok(Simulation {
        probability: outcomes[3],
        outcomes,
        invariants,
    })
}

/// P(|11⟩) of the victim Grover circuit under `noise` and `attack`.
pub fn simulate_victim(noise: &NoiseModel, attack: &AttackSpec) -> Result<f64, SimError> {
    Ok(run(noise, attack, false)?.probability)
}

/// Like [`simulate_victim`], also checking density-matrix invariants after
/// every gate and channel.
pub fn simulate_victim_checked(
    noise: &NoiseModel,
    attack: &AttackSpec,
) -> Result<Simulation, SimError> {
    run(noise, attack, true)
}

/// Bisects the baseline depolarizing strength that yields `target` with no
/// attack.
pub fn calibrate_baseline(target: f64) -> Result<f64, SimError> {
    let none = AttackSpec {
        family: AttackFamily::DelayOnly,
        k: 0,
        delay_dt: 0,
    };
    let prob = |p: f64| simulate_victim(&NoiseModel::baseline_only(p), &none);
    let high = prob(0.0)?;
    let low = prob(1.0)?;
    if !(target > low && target <= high + 1e-12) {
        return Err(SimError::Unreachable { target, low, high });
    }
    if (high - target).abs() <= 1e-12 {
        return Ok(0.0);
    }
    // prob is continuous and decreasing in p
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if prob(mid)? > target {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-15 {
            break;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Grid search for the CNOT crosstalk channel.
///
/// Scans `lambda_cx` over 0.005..=0.100 (step 0.005) and `gamma` over
/// 0.0001..=0.0200 (step 0.0001). Among pairs whose k=300 value is within
/// 0.001 of [`PLATEAU_TARGET`] and whose curve has settled (k=150 and k=300
/// within 0.005), picks the smallest `lambda_cx`, then the closest value.
/// Returns `(lambda_cx, gamma)`.
pub fn calibrate_crosstalk(p_base: f64) -> Result<(f64, f64), SimError> {
    let mut best: Option<(f64, f64, f64)> = None;
    for li in 1..=20u32 {
        let lambda_cx = f64::from(li) * 0.005;
        for gi in 1..=200u32 {
            let gamma = f64::from(gi) * 0.0001;
            let noise = NoiseModel {
                p_base,
                lambda_cx,
                lambda_xy: 0.0,
                gamma,
            };
            let pts = sweep_k(&noise, AttackFamily::CxDelay, 1, &[150, 300])?;
            let (mid, end) = (pts[0].1, pts[1].1);
            let miss = (end - PLATEAU_TARGET).abs();
            if miss > 0.001 || (mid - end).abs() > 0.005 {
                continue;
            }
            if best.is_none_or(|(_, _, m)| miss < m) {
                best = Some((lambda_cx, gamma, miss));
            }
        }
        if let Some((l, g, _)) = best {
            return Ok((l, g));
        }
    }
    Err(SimError::Unreachable {
        target: PLATEAU_TARGET,
        low: 0.0,
        high: 1.0,
    })
}

/// Victim probability for each requested k, in the order given.
///
/// The state after k repetitions does not depend on how many more follow, so
/// every point is read off one trajectory; the values are identical to
/// separate [`simulate_victim`] calls.
pub fn sweep_k(
    noise: &NoiseModel,
    family: AttackFamily,
    delay_dt: u64,
    k_values: &[u64],
) -> Result<Vec<(u64, f64)>, SimError> {
    Ok(sweep(noise, family, delay_dt, k_values, false)?.0)
}

/// [`sweep_k`] plus the invariant statistics of the whole trajectory.
pub fn sweep_k_checked(
    noise: &NoiseModel,
    family: AttackFamily,
    delay_dt: u64,
    k_values: &[u64],
) -> Result<(Vec<(u64, f64)>, InvariantStats), SimError> {
    sweep(noise, family, delay_dt, k_values, true)
}

fn sweep(
    noise: &NoiseModel,
    family: AttackFamily,
    _delay_dt: u64,
    k_values: &[u64],
    check: bool,
) -> Result<(Vec<(u64, f64)>, InvariantStats), SimError> {
    let wanted: BTreeSet<u64> = k_values.iter().copied().collect();
    let max_k = wanted.last().copied().unwrap_or(0);
    let mut found: BTreeMap<u64, f64> = BTreeMap::new();
    let stats = evolve(&grover2_circuit(), noise, family, max_k, check, |k, rho| {
        if wanted.contains(&k) {
            found.insert(k, rho.probabilities()[3]);
        }
    })?;
    Ok((k_values.iter().map(|k| (*k, found[k])).collect(), stats))
}

/// `k<TAB>probability` lines, six decimals.
pub fn format_sweep(points: &[(u64, f64)]) -> String {
    let mut out = String::new();
    for (k, p) in points {
        let _ = writeln!(out, "{k}\t{p:.6}");
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn attack(family: AttackFamily, k: u64) -> AttackSpec {
        AttackSpec {
            family,
            k,
            delay_dt: 1,
        }
    }

    #[test]
    fn noiseless_grover_finds_marked_state() {
        let p = simulate_victim(
            &NoiseModel::baseline_only(0.0),
            &attack(AttackFamily::DelayOnly, 0),
        )
        .unwrap();
        assert!((p - 1.0).abs() < 1e-12);
    }

    #[test]
    fn grover_shape() {
        let c = grover2_circuit();
        assert_eq!(c.count(GateKind::Cz), 2);
        assert_eq!(c.len() - c.count(GateKind::Cz), 8);
        assert!(c
            .instructions()
            .iter()
            .flat_map(|i| &i.operands)
            .all(|q| q.0 < 2));
    }

    #[test]
    fn rejects_bad_probabilities() {
        let mut noise = NoiseModel::shipped();
        noise.gamma = 1.5;
        assert!(matches!(
            simulate_victim(&noise, &attack(AttackFamily::CxDelay, 1)),
            Err(SimError::InvalidProbability { field: "gamma", .. })
        ));
        noise.gamma = 0.0;
        noise.p_base = -0.1;
        assert!(simulate_victim(&noise, &attack(AttackFamily::CxDelay, 1)).is_err());
    }

    #[test]
    fn no_channel_means_flat_curve() {
        let noise = NoiseModel::baseline_only(SHIPPED_P_BASE);
        let ks: Vec<u64> = (0..50).collect();
        let pts = sweep_k(&noise, AttackFamily::CxDelay, 1, &ks).unwrap();
        assert!(pts.iter().all(|(_, p)| *p == pts[0].1));
    }

    #[test]
    fn depolarizing_only_tends_to_uniform() {
        let noise = NoiseModel {
            p_base: SHIPPED_P_BASE,
            lambda_cx: 0.05,
            lambda_xy: 0.0,
            gamma: 0.0,
        };
        let p = simulate_victim(&noise, &attack(AttackFamily::CxDelay, 2000)).unwrap();
        assert!((p - 0.25).abs() < 1e-9);
    }

    #[test]
    fn damping_pushes_plateau_below_uniform() {
        let noise = NoiseModel {
            gamma: 0.01,
            ..NoiseModel::shipped()
        };
        let p = simulate_victim(&noise, &attack(AttackFamily::CxDelay, 5000)).unwrap();
        assert!(p < 0.25);
    }

    #[test]
    fn calibration_edges() {
        assert_eq!(calibrate_baseline(1.0).unwrap(), 0.0);
        assert!(matches!(
            calibrate_baseline(0.1),
            Err(SimError::Unreachable { .. })
        ));
        assert!(calibrate_baseline(1.2).is_err());
        let p = calibrate_baseline(BASELINE_TARGET).unwrap();
        assert!(p > 0.0 && p < 1.0);
        let got = simulate_victim(
            &NoiseModel::baseline_only(p),
            &attack(AttackFamily::DelayOnly, 0),
        )
        .unwrap();
        assert!((got - BASELINE_TARGET).abs() < 1e-6);
    }

    #[test]
    fn family_names_round_trip() {
        for f in AttackFamily::ALL {
            assert_eq!(f.name().parse::<AttackFamily>().unwrap(), f);
        }
        assert!("cx-chain".parse::<AttackFamily>().is_err());
    }

    #[test]
    fn sweep_matches_independent_runs() {
        let noise = NoiseModel::shipped();
        let ks = [7, 0, 40, 3, 40];
        for family in AttackFamily::ALL {
            let pts = sweep_k(&noise, family, 2, &ks).unwrap();
            for (k, p) in pts {
                let direct = simulate_victim(&noise, &attack(family, k)).unwrap();
                assert_eq!(p.to_bits(), direct.to_bits(), "{family} k={k}");
            }
        }
    }

    #[test]
    fn sweep_format() {
        assert_eq!(
            format_sweep(&[(0, 0.87), (1, 0.5)]),
            "0\t0.870000\n1\t0.500000\n"
        );
    }
}
