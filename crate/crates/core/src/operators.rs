//! Standard single-qubit operators.
//!
//! Basis order is (|0⟩, |1⟩) with σ_z|0⟩ = |0⟩, so |0⟩⟨0| has Bloch vector
//! (0, 0, 1). The lowering operator maps |1⟩ to |0⟩.

use num_complex::Complex64 as C64;

use crate::linalg::ComplexMatrix;

fn m2(a: [[C64; 2]; 2]) -> ComplexMatrix {
    ComplexMatrix::from_fn(2, 2, |i, j| a[i][j])
}

const O: C64 = C64 { re: 0.0, im: 0.0 };
const R1: C64 = C64 { re: 1.0, im: 0.0 };
const I1: C64 = C64 { re: 0.0, im: 1.0 };

pub fn identity2() -> ComplexMatrix {
    ComplexMatrix::identity(2)
}

pub fn sigma_x() -> ComplexMatrix {
    m2([[O, R1], [R1, O]])
}

pub fn sigma_y() -> ComplexMatrix {
    m2([[O, -I1], [I1, O]])
}

pub fn sigma_z() -> ComplexMatrix {
    m2([[R1, O], [O, -R1]])
}

/// σ₊ = |1⟩⟨0|.
pub fn sigma_plus() -> ComplexMatrix {
    m2([[O, O], [R1, O]])
}

/// σ₋ = |0⟩⟨1|.
pub fn sigma_minus() -> ComplexMatrix {
    m2([[O, R1], [O, O]])
}

/// (I, σ_x, σ_y, σ_z) indexed 0..4.
pub fn pauli(index: usize) -> ComplexMatrix {
    match index {
        0 => identity2(),
        1 => sigma_x(),
        2 => sigma_y(),
        3 => sigma_z(),
        _ => panic!("Pauli index {index} out of range"),
    }
}

/// |ψ⟩⟨ψ| for a (not necessarily normalized) state vector, normalized to unit trace.
pub fn projector(psi: &[C64]) -> ComplexMatrix {
    let n2: f64 = psi.iter().map(|z| z.norm_sqr()).sum();
    ComplexMatrix::from_fn(psi.len(), psi.len(), |i, j| psi[i] * psi[j].conj() / n2)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pauli_algebra() {
        let (x, y, z) = (sigma_x(), sigma_y(), sigma_z());
        let i2 = identity2();
        for p in [&x, &y, &z] {
            assert_eq!(p.matmul(p), i2);
            assert_eq!(p.hermitian_defect(), 0.0);
        }
        // σ_x σ_y = i σ_z
        assert_eq!(x.matmul(&y), z.scale(I1));
    }

    #[test]
    fn ladder_operators() {
        let up = [R1, O];
        let down = [O, R1];
        assert_eq!(sigma_minus().matvec(&down), up.to_vec());
        assert_eq!(sigma_plus().matvec(&up), down.to_vec());
        assert_eq!(sigma_minus().adjoint(), sigma_plus());
    }
}
