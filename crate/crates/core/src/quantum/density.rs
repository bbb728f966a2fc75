use nalgebra::DMatrix;
use num_complex::Complex64;

pub type DensityMatrix = DMatrix<Complex64>;

/// ½‖ρ₁ − ρ₂‖₁ via the eigenvalues of the Hermitian difference.
pub fn trace_distance(rho1: &DensityMatrix, rho2: &DensityMatrix) -> f64 {
    assert_eq!(rho1.shape(), rho2.shape(), "density matrices of different dimension");
    let diff = rho1 - rho2;
    let herm = (&diff + diff.adjoint()) * Complex64::new(0.5, 0.0);
    let eig = herm.symmetric_eigen();
    (0.5 * eig.eigenvalues.iter().map(|l| l.abs()).sum::<f64>()).clamp(0.0, 1.0)
}

/// Trace distance between two sub-normalised states each extended by a
/// classical ⊥ flag carrying the missing weight.
pub fn trace_distance_with_bottom(rho1: &DensityMatrix, rho2: &DensityMatrix) -> f64 {
    let bot1 = 1.0 - rho1.trace().re;
    let bot2 = 1.0 - rho2.trace().re;
    let diff = rho1 - rho2;
    let herm = (&diff + diff.adjoint()) * Complex64::new(0.5, 0.0);
    let eig = herm.symmetric_eigen();
    let quantum: f64 = eig.eigenvalues.iter().map(|l| l.abs()).sum();
    (0.5 * ((bot1 - bot2).abs() + quantum)).clamp(0.0, 1.0)
}

pub fn zero_density(qubits: usize) -> DensityMatrix {
    let d = 1usize << qubits;
    DMatrix::zeros(d, d)
}

/// Kronecker product, first factor most significant.
pub fn kron(a: &DensityMatrix, b: &DensityMatrix) -> DensityMatrix {
    a.kronecker(b)
}

/// Single-qubit eigenstate projector: basis Z or X, eigenvalue index `bit`.
pub fn qubit_eigenstate(hadamard: bool, bit: bool) -> DensityMatrix {
    let h = 0.5;
    let m = if !hadamard {
        if bit {
            [0.0, 0.0, 0.0, 1.0]
        } else {
            [1.0, 0.0, 0.0, 0.0]
        }
    } else {
        let s = if bit { -h } else { h };
        [h, s, s, h]
    };
    DMatrix::from_row_slice(2, 2, &m.map(|x| Complex64::new(x, 0.0)))
}

pub fn maximally_mixed(qubits: usize) -> DensityMatrix {
    let d = 1usize << qubits;
    DMatrix::identity(d, d) * Complex64::new(1.0 / d as f64, 0.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bits::bits;
    use crate::quantum::{Bb84Descriptor, SparseState};

    #[test]
    fn basic_distances() {
        let zero = SparseState::new(1).density_matrix(&[0]).unwrap();
        let one = SparseState::basis_state(&bits("1")).density_matrix(&[0]).unwrap();
        let plus = SparseState::prep_bb84(&Bb84Descriptor::new(bits("0"), bits("1")).unwrap())
            .density_matrix(&[0])
            .unwrap();
        assert!(trace_distance(&zero, &zero).abs() < 1e-12);
        assert!((trace_distance(&zero, &one) - 1.0).abs() < 1e-12);
        // Pure-state oracle: √(1 − |⟨0|+⟩|²).
        let overlap: f64 = 0.5f64.sqrt();
        let oracle = (1.0 - overlap * overlap).sqrt();
        assert!((trace_distance(&zero, &plus) - oracle).abs() < 1e-9);
        assert!((trace_distance(&plus, &zero) - trace_distance(&zero, &plus)).abs() < 1e-15);
    }

    #[test]
    fn eigenstate_helpers_match_simulator() {
        for (t, y) in [("0", "0"), ("0", "1"), ("1", "0"), ("1", "1")] {
            let s = SparseState::prep_bb84(&Bb84Descriptor::new(bits(y), bits(t)).unwrap());
            let rho = s.density_matrix(&[0]).unwrap();
            let h = qubit_eigenstate(t == "1", y == "1");
            assert!(trace_distance(&rho, &h) < 1e-12);
        }
    }

    #[test]
    fn bottom_augmented_distance() {
        let zero = SparseState::new(1).density_matrix(&[0]).unwrap();
        let half = &zero * Complex64::new(0.5, 0.0);
        assert!((trace_distance_with_bottom(&zero, &half) - 0.5).abs() < 1e-12);
        assert!((trace_distance_with_bottom(&zero_density(1), &zero_density(1))).abs() < 1e-12);
    }
}
