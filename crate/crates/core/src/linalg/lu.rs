//! LU factorization with partial pivoting and the linear solves built on it.

use num_complex::Complex64 as C64;

use super::matrix::{vec_norm, ComplexMatrix, ZERO};
use crate::error::{Error, Result};

/// PA = LU with unit lower L, both packed into one matrix.
#[derive(Clone, Debug)]
pub struct Lu {
    lu: ComplexMatrix,
    perm: Vec<usize>,
}

impl Lu {
    /// Factorize `a`. A pivot below `n·ε·max|a_ij|` counts as rank deficiency.
    pub fn new(a: &ComplexMatrix) -> Result<Self> {
        let n = a.require_square()?;
        a.check_finite("LU input")?;
        let mut lu = a.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        let floor = (n as f64) * f64::EPSILON * a.max_abs();
        for k in 0..n {
            let (p, pmax) = (k..n)
                .map(|i| (i, lu[(i, k)].norm()))
                .fold((k, -1.0), |best, cur| if cur.1 > best.1 { cur } else { best });
            if pmax <= floor || pmax == 0.0 {
                return Err(Error::Singular {
                    column: k,
                    pivot: pmax,
                });
            }
            if p != k {
                perm.swap(p, k);
                for j in 0..n {
                    let t = lu[(k, j)];
                    lu[(k, j)] = lu[(p, j)];
                    lu[(p, j)] = t;
                }
            }
            let inv = lu[(k, k)].inv();
            for i in k + 1..n {
                lu[(i, k)] *= inv;
            }
            for j in k + 1..n {
                let ukj = lu[(k, j)];
                if ukj == ZERO {
                    continue;
                }
                for i in k + 1..n {
                    let lik = lu[(i, k)];
                    lu[(i, j)] -= lik * ukj;
                }
            }
        }
        Ok(Self { lu, perm })
    }

    pub fn dim(&self) -> usize {
        self.perm.len()
    }

    pub fn solve(&self, b: &[C64]) -> Result<Vec<C64>> {
        let n = self.dim();
        if b.len() != n {
            return Err(Error::DimensionMismatch {
                context: "right-hand side",
                expected: n,
                got: b.len(),
            });
        }
        let mut x: Vec<C64> = self.perm.iter().map(|&p| b[p]).collect();
        for k in 0..n {
            let xk = x[k];
            for i in k + 1..n {
                x[i] -= self.lu[(i, k)] * xk;
            }
        }
        for k in (0..n).rev() {
            x[k] /= self.lu[(k, k)];
            let xk = x[k];
            for i in 0..k {
                x[i] -= self.lu[(i, k)] * xk;
            }
        }
        if x.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
            Ok(x)
        } else {
            Err(Error::NonFinite {
                context: "linear solve",
            })
        }
    }

    pub fn solve_matrix(&self, b: &ComplexMatrix) -> Result<ComplexMatrix> {
        let mut out = ComplexMatrix::zeros(b.rows(), b.cols());
        for j in 0..b.cols() {
            let x = self.solve(b.column(j))?;
            out.set_column(j, &x);
        }
        Ok(out)
    }

    pub fn inverse(&self) -> Result<ComplexMatrix> {
        self.solve_matrix(&ComplexMatrix::identity(self.dim()))
    }
}

/// Solve `A x = b`, verifying ‖Ax − b‖₂ ≤ tol·‖A‖_F·‖x‖₂ with tol = 1e3·n·ε.
pub fn solve_linear(a: &ComplexMatrix, b: &[C64]) -> Result<Vec<C64>> {
    let lu = Lu::new(a)?;
    let x = lu.solve(b)?;
    let r: Vec<C64> = a.matvec(&x).iter().zip(b).map(|(ax, bi)| ax - bi).collect();
    let tol = 1e3 * (a.rows() as f64) * f64::EPSILON;
    let bound = tol * a.frobenius_norm() * vec_norm(&x);
    if vec_norm(&r) > bound.max(f64::MIN_POSITIVE) && vec_norm(&x) > 0.0 {
        return Err(Error::Singular {
            column: a.rows(),
            pivot: vec_norm(&r),
        });
    }
    Ok(x)
}

/// Inverse through LU.
pub fn inverse(a: &ComplexMatrix) -> Result<ComplexMatrix> {
    Lu::new(a)?.inverse()
}

/// 1-norm condition number ‖A‖₁‖A⁻¹‖₁; infinite when A is singular.
pub fn condition_number_1(a: &ComplexMatrix) -> f64 {
    match inverse(a) {
        Ok(inv) => a.norm_one() * inv.norm_one(),
        Err(_) => f64::INFINITY,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64) -> C64 {
        C64::new(re, 0.0)
    }

    #[test]
    fn identity_and_diagonal_solves() {
        let x = solve_linear(&ComplexMatrix::identity(2), &[c(1.0), c(2.0)]).unwrap();
        assert_eq!(x, vec![c(1.0), c(2.0)]);
        let d = ComplexMatrix::from_diagonal(&[c(2.0), c(4.0)]);
        let x = solve_linear(&d, &[c(2.0), c(2.0)]).unwrap();
        assert_eq!(x, vec![c(1.0), c(0.5)]);
    }

    #[test]
    fn singular_is_reported() {
        let a = ComplexMatrix::from_real_rows(&[vec![1.0, 2.0], vec![2.0, 4.0]]).unwrap();
        assert!(matches!(solve_linear(&a, &[c(1.0), c(1.0)]), Err(Error::Singular { .. })));
        assert!(matches!(
            solve_linear(&ComplexMatrix::zeros(3, 3), &[c(0.0); 3]),
            Err(Error::Singular { .. })
        ));
    }

    #[test]
    fn non_square_is_rejected() {
        let a = ComplexMatrix::zeros(2, 3);
        assert!(matches!(Lu::new(&a), Err(Error::NonSquare { .. })));
    }

    #[test]
    fn random_systems_have_small_residual() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for n in [1, 3, 10, 40] {
            let a = ComplexMatrix::from_fn(n, n, |_, _| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
            let b: Vec<C64> = (0..n).map(|_| C64::new(rng.gen(), rng.gen())).collect();
            let x = solve_linear(&a, &b).unwrap();
            let r: Vec<C64> = a.matvec(&x).iter().zip(&b).map(|(p, q)| p - q).collect();
            assert!(vec_norm(&r) <= 1e-12 * a.frobenius_norm() * vec_norm(&x));
            let inv = inverse(&a).unwrap();
            assert!((&a * &inv).max_abs_diff(&ComplexMatrix::identity(n)) < 1e-10);
        }
    }
}
