//! Cyclic Jacobi eigensolver for small Hermitian matrices.

use num_complex::Complex64 as C64;

use super::matrix::{ComplexMatrix, ZERO};
use crate::error::{Error, Result};

/// Eigen-pairs of a Hermitian matrix, eigenvalues ascending.
#[derive(Clone, Debug)]
pub struct HermitianEigen {
    pub values: Vec<f64>,
    pub vectors: ComplexMatrix,
}

/// Diagonalize a Hermitian matrix. The input is symmetrized first; the
/// caller is responsible for it being Hermitian to the accuracy it needs.
pub fn eig_hermitian(a: &ComplexMatrix) -> Result<HermitianEigen> {
    let n = a.require_square()?;
    a.check_finite("Hermitian eigensolver input")?;
    let mut m = ComplexMatrix::from_fn(n, n, |i, j| 0.5 * (a[(i, j)] + a[(j, i)].conj()));
    let mut v = ComplexMatrix::identity(n);
    let scale = m.frobenius_norm();
    if n <= 1 || scale == 0.0 {
        return Ok(finish(m, v));
    }
    for _sweep in 0..60 {
        let off: f64 = (0..n)
            .flat_map(|j| (0..n).filter(move |&i| i != j).map(move |i| (i, j)))
            .map(|(i, j)| m[(i, j)].norm_sqr())
            .sum::<f64>()
            .sqrt();
        if off <= 1e-16 * scale {
            return Ok(finish(m, v));
        }
        for p in 0..n - 1 {
            for q in p + 1..n {
                let apq = m[(p, q)];
                let r = apq.norm();
                if r <= 1e-300 {
                    continue;
                }
                let phase = apq / r;
                let app = m[(p, p)].re;
                let aqq = m[(q, q)].re;
                let tau = (aqq - app) / (2.0 * r);
                let t = if tau >= 0.0 {
                    1.0 / (tau + (1.0 + tau * tau).sqrt())
                } else {
                    -1.0 / (-tau + (1.0 + tau * tau).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                let e = phase.conj();
                let (u_pp, u_pq, u_qp, u_qq) = (C64::new(c, 0.0), C64::new(s, 0.0), -e * s, e * c);
                for k in 0..n {
                    let akp = m[(k, p)];
                    let akq = m[(k, q)];
                    m[(k, p)] = akp * u_pp + akq * u_qp;
                    m[(k, q)] = akp * u_pq + akq * u_qq;
                }
                for k in 0..n {
                    let apk = m[(p, k)];
                    let aqk = m[(q, k)];
                    m[(p, k)] = u_pp.conj() * apk + u_qp.conj() * aqk;
                    m[(q, k)] = u_pq.conj() * apk + u_qq.conj() * aqk;
                }
                m[(p, q)] = ZERO;
                m[(q, p)] = ZERO;
                for k in 0..n {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = vkp * u_pp + vkq * u_qp;
                    v[(k, q)] = vkp * u_pq + vkq * u_qq;
                }
            }
        }
    }
    Err(Error::NonConvergence(
        "Jacobi sweeps exhausted for Hermitian eigenproblem".into(),
    ))
}

fn finish(m: ComplexMatrix, v: ComplexMatrix) -> HermitianEigen {
    let n = m.rows();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| m[(i, i)].re.total_cmp(&m[(j, j)].re));
    let values = order.iter().map(|&i| m[(i, i)].re).collect();
    let vectors = ComplexMatrix::from_fn(n, n, |i, j| v[(i, order[j])]);
    HermitianEigen { values, vectors }
}

/// Eigenvalues only, ascending.
pub fn eigvals_hermitian(a: &ComplexMatrix) -> Result<Vec<f64>> {
    eig_hermitian(a).map(|e| e.values)
}

/// 2-norm condition number of the Gram matrix VᴴV of the columns of `v`,
/// i.e. the square of the condition number of `v`.
pub fn gram_condition(v: &ComplexMatrix) -> f64 {
    let g = v.adjoint().matmul(v);
    match eigvals_hermitian(&g) {
        Ok(vals) => {
            let lo = vals.first().copied().unwrap_or(0.0);
            let hi = vals.last().copied().unwrap_or(0.0);
            if lo <= 0.0 {
                f64::INFINITY
            } else {
                hi / lo
            }
        }
        Err(_) => f64::INFINITY,
    }
}
