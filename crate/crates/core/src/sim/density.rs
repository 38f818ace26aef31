use nalgebra::{Matrix2, Matrix4};
use num_complex::Complex64;

pub type Mat2 = Matrix2<Complex64>;
pub type Mat4 = Matrix4<Complex64>;

fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

pub fn identity2() -> Mat2 {
    Mat2::identity()
}

pub fn pauli_x() -> Mat2 {
    Mat2::new(c(0.0), c(1.0), c(1.0), c(0.0))
}

pub fn pauli_y() -> Mat2 {
    let i = Complex64::i();
    Mat2::new(c(0.0), -i, i, c(0.0))
}

pub fn pauli_z() -> Mat2 {
    Mat2::new(c(1.0), c(0.0), c(0.0), c(-1.0))
}

pub fn hadamard() -> Mat2 {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    Mat2::new(c(s), c(s), c(s), c(-s))
}

/// Lifts a one-qubit operator onto qubit `q` of the pair. Basis index is
/// `2 * q1 + q0`.
pub fn on_qubit(op: &Mat2, q: usize) -> Mat4 {
    match q {
        0 => identity2().kronecker(op),
        1 => op.kronecker(&identity2()),
        _ => panic!("two-qubit register has no qubit {q}"),
    }
}

pub fn cz() -> Mat4 {
    Mat4::from_diagonal(&nalgebra::Vector4::new(c(1.0), c(1.0), c(1.0), c(-1.0)))
}

/// CNOT with the given control and target.
pub fn cx(control: usize, target: usize) -> Mat4 {
    assert!(control != target && control < 2 && target < 2);
    let mut m = Mat4::zeros();
    for col in 0..4 {
        let ctrl_set = (col >> control) & 1 == 1;
        let row = if ctrl_set { col ^ (1 << target) } else { col };
        m[(row, col)] = c(1.0);
    }
    m
}

/// A one-qubit channel lifted onto one qubit of the pair, as Kraus operators.
#[derive(Debug, Clone, PartialEq)]
pub struct Channel {
    ops: Vec<Mat4>,
}

impl Channel {
    pub fn from_kraus(kraus: &[Mat2], q: usize) -> Self {
        Channel {
            ops: kraus.iter().map(|k| on_qubit(k, q)).collect(),
        }
    }

    /// ρ ↦ (1-λ)ρ + λ·(I/2 ⊗ Tr_q ρ) on qubit `q`.
    pub fn depolarizing(lambda: f64, q: usize) -> Self {
        let keep = c((1.0 - 0.75 * lambda).sqrt());
        let flip = c((lambda / 4.0).sqrt());
        Self::from_kraus(
            &[
                identity2() * keep,
                pauli_x() * flip,
                pauli_y() * flip,
                pauli_z() * flip,
            ],
            q,
        )
    }

    /// Relaxation toward |0⟩ with probability γ on qubit `q`.
    pub fn amplitude_damping(gamma: f64, q: usize) -> Self {
        let k0 = Mat2::new(c(1.0), c(0.0), c(0.0), c((1.0 - gamma).sqrt()));
        let k1 = Mat2::new(c(0.0), c(gamma.sqrt()), c(0.0), c(0.0));
        Self::from_kraus(&[k0, k1], q)
    }
}

/// Two-qubit density matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    rho: Mat4,
}

impl DensityMatrix {
    /// |00⟩⟨00|
    pub fn ground() -> Self {
        let mut rho = Mat4::zeros();
        rho[(0, 0)] = c(1.0);
        DensityMatrix { rho }
    }

    pub fn maximally_mixed() -> Self {
        DensityMatrix {
            rho: Mat4::identity() * c(0.25),
        }
    }

    pub fn from_matrix(rho: Mat4) -> Self {
        DensityMatrix { rho }
    }

    pub fn matrix(&self) -> &Mat4 {
        &self.rho
    }

    pub fn apply_unitary(&mut self, u: &Mat4) {
        self.rho = u * self.rho * u.adjoint();
    }

    /// ρ ↦ Σ K ρ K†
    pub fn apply(&mut self, channel: &Channel) {
        let mut out = Mat4::zeros();
        for k in &channel.ops {
            out += k * self.rho * k.adjoint();
        }
        self.rho = out;
    }

    pub fn depolarize(&mut self, lambda: f64, q: usize) {
        if lambda != 0.0 {
            self.apply(&Channel::depolarizing(lambda, q));
        }
    }

    pub fn amplitude_damp(&mut self, gamma: f64, q: usize) {
        if gamma != 0.0 {
            self.apply(&Channel::amplitude_damping(gamma, q));
        }
    }

    /// Outcome probabilities for |00⟩, |01⟩, |10⟩, |11⟩ (basis index order).
    pub fn probabilities(&self) -> [f64; 4] {
        [0, 1, 2, 3].map(|i| self.rho[(i, i)].re)
    }

    pub fn trace_error(&self) -> f64 {
        (self.rho.trace() - c(1.0)).norm()
    }

    pub fn hermiticity_error(&self) -> f64 {
        (self.rho - self.rho.adjoint()).camax()
    }

    pub fn min_eigenvalue(&self) -> f64 {
        // Symmetrize so the Hermitian solver sees exact input.
        let herm = (self.rho + self.rho.adjoint()) * c(0.5);
        herm.symmetric_eigenvalues().min()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64) -> bool {
        (a - b).abs() < 1e-12
    }

    #[test]
    fn depolarizing_fixes_maximally_mixed() {
        let mut rho = DensityMatrix::maximally_mixed();
        for lambda in [0.1, 0.5, 1.0] {
            rho.depolarize(lambda, 0);
            rho.depolarize(lambda, 1);
        }
        let diff = (rho.matrix() - DensityMatrix::maximally_mixed().matrix()).camax();
        assert!(diff < 1e-14);
    }

    #[test]
    fn full_damping_resets_to_zero() {
        let mut rho = DensityMatrix::ground();
        rho.apply_unitary(&on_qubit(&hadamard(), 0));
        rho.apply_unitary(&on_qubit(&pauli_x(), 1));
        rho.amplitude_damp(1.0, 0);
        rho.amplitude_damp(1.0, 1);
        let p = rho.probabilities();
        assert!(close(p[0], 1.0));
        assert!(rho.matrix().camax() <= 1.0 + 1e-12);
        assert!(close(rho.matrix()[(0, 1)].norm(), 0.0));
    }

    #[test]
    fn full_depolarizing_gives_uniform_marginal() {
        let mut rho = DensityMatrix::ground();
        rho.apply_unitary(&on_qubit(&pauli_x(), 1));
        rho.depolarize(1.0, 1);
        let p = rho.probabilities();
        assert!(close(p[0], 0.5) && close(p[2], 0.5));
    }

    #[test]
    fn cx_flips_target_when_control_set() {
        let mut rho = DensityMatrix::ground();
        rho.apply_unitary(&on_qubit(&pauli_x(), 0));
        rho.apply_unitary(&cx(0, 1));
        assert!(close(rho.probabilities()[3], 1.0));
    }

    #[test]
    fn invariants_after_noise() {
        let mut rho = DensityMatrix::ground();
        rho.apply_unitary(&on_qubit(&hadamard(), 0));
        rho.apply_unitary(&cx(0, 1));
        rho.depolarize(0.3, 1);
        rho.amplitude_damp(0.2, 0);
        assert!(rho.trace_error() < 1e-12);
        assert!(rho.hermiticity_error() < 1e-12);
        assert!(rho.min_eigenvalue() > -1e-12);
        assert!(close(rho.probabilities().iter().sum::<f64>(), 1.0));
    }
}
