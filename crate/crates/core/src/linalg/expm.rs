//! Matrix exponential by scaling and squaring with diagonal Padé approximants.

use num_complex::Complex64 as C64;

use super::lu::Lu;
use super::matrix::ComplexMatrix;
use crate::error::{Error, Result};

const THETA: [(usize, f64); 4] = [
    (3, 1.495585217958292e-2),
    (5, 2.539398330063230e-1),
    (7, 9.504178996162932e-1),
    (9, 2.097847961257068e0),
];
const THETA_13: f64 = 5.371920351148152e0;

const B3: [f64; 4] = [120.0, 60.0, 12.0, 1.0];
const B5: [f64; 6] = [30240.0, 15120.0, 3360.0, 420.0, 30.0, 1.0];
const B7: [f64; 8] = [
    17297280.0, 8648640.0, 1995840.0, 277200.0, 25200.0, 1512.0, 56.0, 1.0,
];
const B9: [f64; 10] = [
    17643225600.0,
    8821612800.0,
    2075673600.0,
    302702400.0,
    30270240.0,
    2162160.0,
    110880.0,
    3960.0,
    90.0,
    1.0,
];
const B13: [f64; 14] = [
    64764752532480000.0,
    32382376266240000.0,
    7771770303897600.0,
    1187353796428800.0,
    129060195264000.0,
    10559470521600.0,
    670442572800.0,
    33522128640.0,
    1323241920.0,
    40840800.0,
    960960.0,
    16380.0,
    182.0,
    1.0,
];

fn add_scaled(acc: &mut ComplexMatrix, m: &ComplexMatrix, s: f64) {
    for (a, b) in acc.as_mut_slice().iter_mut().zip(m.as_slice()) {
        *a += b * s;
    }
}

fn add_identity(acc: &mut ComplexMatrix, s: f64) {
    for i in 0..acc.rows() {
        acc[(i, i)] += C64::new(s, 0.0);
    }
}

/// U and V of the [m/m] approximant for m ≤ 9: r = (V − U)⁻¹(V + U).
fn pade_low(a: &ComplexMatrix, b: &[f64]) -> (ComplexMatrix, ComplexMatrix) {
    let n = a.rows();
    let a2 = a.matmul(a);
    let mut powers = vec![ComplexMatrix::identity(n), a2.clone()];
    while 2 * powers.len() < b.len() {
        let next = powers.last().unwrap().matmul(&a2);
        powers.push(next);
    }
    let mut u_inner = ComplexMatrix::zeros(n, n);
    let mut v = ComplexMatrix::zeros(n, n);
    for (k, p) in powers.iter().enumerate() {
        add_scaled(&mut v, p, b[2 * k]);
        add_scaled(&mut u_inner, p, b[2 * k + 1]);
    }
    (a.matmul(&u_inner), v)
}

fn pade13(a: &ComplexMatrix) -> (ComplexMatrix, ComplexMatrix) {
    let n = a.rows();
    let b = &B13;
    let a2 = a.matmul(a);
    let a4 = a2.matmul(&a2);
    let a6 = a4.matmul(&a2);

    let mut t = ComplexMatrix::zeros(n, n);
    add_scaled(&mut t, &a6, b[13]);
    add_scaled(&mut t, &a4, b[11]);
    add_scaled(&mut t, &a2, b[9]);
    let mut u_inner = a6.matmul(&t);
    add_scaled(&mut u_inner, &a6, b[7]);
    add_scaled(&mut u_inner, &a4, b[5]);
    add_scaled(&mut u_inner, &a2, b[3]);
    add_identity(&mut u_inner, b[1]);
    let u = a.matmul(&u_inner);

    let mut t = ComplexMatrix::zeros(n, n);
    add_scaled(&mut t, &a6, b[12]);
    add_scaled(&mut t, &a4, b[10]);
    add_scaled(&mut t, &a2, b[8]);
    let mut v = a6.matmul(&t);
    add_scaled(&mut v, &a6, b[6]);
    add_scaled(&mut v, &a4, b[4]);
    add_scaled(&mut v, &a2, b[2]);
    add_identity(&mut v, b[0]);
    (u, v)
}

fn pade_solve(u: &ComplexMatrix, v: &ComplexMatrix) -> Result<ComplexMatrix> {
    let p = v + u;
    let q = v - u;
    Lu::new(&q).and_then(|lu| lu.solve_matrix(&p)).map_err(|e| match e {
        Error::Singular { .. } => Error::NonFinite {
            context: "matrix exponential (Padé denominator)",
        },
        other => other,
    })
}

/// exp(A). Degree and scaling follow the 1-norm thresholds of the [13/13] scheme.
pub fn matrix_exp(a: &ComplexMatrix) -> Result<ComplexMatrix> {
    let n = a.require_square()?;
    a.check_finite("matrix exponential input")?;
    if n == 0 {
        return Ok(ComplexMatrix::zeros(0, 0));
    }
    let norm = a.norm_one();
    if norm == 0.0 {
        return Ok(ComplexMatrix::identity(n));
    }
    for &(m, theta) in &THETA {
        if norm <= theta {
            let b: &[f64] = match m {
                3 => &B3,
                5 => &B5,
                7 => &B7,
                _ => &B9,
            };
            let (u, v) = pade_low(a, b);
            let r = pade_solve(&u, &v)?;
            r.check_finite("matrix exponential")?;
            return Ok(r);
        }
    }
    let s = (norm / THETA_13).log2().ceil().max(0.0) as i32;
    let scaled = a.scale_real(0.5f64.powi(s));
    let (u, v) = pade13(&scaled);
    let mut r = pade_solve(&u, &v)?;
    for _ in 0..s {
        r = r.matmul(&r);
    }
    r.check_finite("matrix exponential")?;
    Ok(r)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Independent oracle: Taylor series on A/2^k with many terms, then squaring.
    fn taylor_exp(a: &ComplexMatrix) -> ComplexMatrix {
        let k = 8;
        let s = a.scale_real(0.5f64.powi(k));
        let n = a.rows();
        let mut term = ComplexMatrix::identity(n);
        let mut sum = ComplexMatrix::identity(n);
        for j in 1..40 {
            term = term.matmul(&s).scale_real(1.0 / j as f64);
            sum += &term;
        }
        for _ in 0..k {
            sum = sum.matmul(&sum);
        }
        sum
    }

    fn random(rng: &mut ChaCha8Rng, n: usize, norm: f64) -> ComplexMatrix {
        let m = ComplexMatrix::from_fn(n, n, |_, _| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
        let f = m.norm_one();
        m.scale_real(norm / f)
    }

    #[test]
    fn zero_gives_identity() {
        let e = matrix_exp(&ComplexMatrix::zeros(3, 3)).unwrap();
        assert_eq!(e, ComplexMatrix::identity(3));
    }

    #[test]
    fn rotation_generator() {
        let th = 0.3;
        let a = ComplexMatrix::from_real_rows(&[vec![0.0, th], vec![-th, 0.0]]).unwrap();
        let e = matrix_exp(&a).unwrap();
        let want = ComplexMatrix::from_real_rows(&[vec![th.cos(), th.sin()], vec![-th.sin(), th.cos()]]).unwrap();
        assert!(e.max_abs_diff(&want) < 1e-15);
    }

    #[test]
    fn matches_taylor_oracle_across_degrees() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for norm in [1e-3, 0.1, 0.5, 1.5, 3.0, 10.0] {
            for n in [2, 4, 9] {
                let a = random(&mut rng, n, norm);
                let e = matrix_exp(&a).unwrap();
                let t = taylor_exp(&a);
                let rel = (&e - &t).frobenius_norm() / t.frobenius_norm();
                assert!(rel < 1e-12, "norm {norm} n {n}: rel {rel:e}");
            }
        }
    }

    #[test]
    fn diagonal_exact() {
        let d = ComplexMatrix::from_diagonal(&[C64::new(-20.0, 0.0), C64::new(0.0, 3.0), C64::new(1.0, -1.0)]);
        let e = matrix_exp(&d).unwrap();
        for (i, z) in d.diagonal().into_iter().enumerate() {
            let w = z.exp();
            assert!((e[(i, i)] - w).norm() <= 1e-13 * w.norm().max(1e-300));
        }
    }

    #[test]
    fn non_square_rejected() {
        assert!(matrix_exp(&ComplexMatrix::zeros(2, 3)).is_err());
    }
}
