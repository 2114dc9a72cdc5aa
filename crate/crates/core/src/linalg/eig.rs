//! General complex eigensolver.
//!
//! Balancing, Householder reduction to upper Hessenberg form, single-shift
//! complex QR with Wilkinson and exceptional shifts and aggressive-free
//! deflation, then eigenvectors of the triangular Schur factor by
//! back substitution.

use num_complex::Complex64 as C64;

use super::hermitian::gram_condition;
use super::matrix::{cabs1, vec_norm, ComplexMatrix, ONE, ZERO};
use crate::error::{Error, Result};

const DAT1: f64 = 0.75;
const KEXSH: usize = 10;
const RESCALE_AT: f64 = 1e100;

/// Tuning knobs for [`eig_general_with`].
#[derive(Clone, Copy, Debug)]
pub struct EigOptions {
    /// Also compute left eigenvectors.
    pub want_left: bool,
    /// Bound on max‖Av − λv‖₂/‖A‖_F; exceeding it is an error.
    pub tol: f64,
    /// Diagonal similarity scaling before the reduction.
    pub balance: bool,
    /// Iteration budget per eigenvalue, times max(10, n).
    pub iterations_per_eigenvalue: usize,
}

impl Default for EigOptions {
    fn default() -> Self {
        Self {
            want_left: false,
            tol: 1e-10,
            balance: true,
            iterations_per_eigenvalue: 30,
        }
    }
}

/// Eigenvalues with unit-norm right (and optionally left) eigenvectors.
#[derive(Clone, Debug)]
pub struct EigenDecomposition {
    pub values: Vec<C64>,
    /// Columns are the right eigenvectors, unit 2-norm.
    pub right_vectors: ComplexMatrix,
    /// Columns u with uᴴA = λuᴴ, unit 2-norm.
    pub left_vectors: Option<ComplexMatrix>,
    /// max over i of ‖A v_i − λ_i v_i‖₂ / ‖A‖_F.
    pub residual: f64,
}

impl EigenDecomposition {
    /// Condition number of the Gram matrix of the right eigenvectors.
    /// Grows without bound as eigenvectors coalesce. Intended for small matrices.
    pub fn gram_condition(&self) -> f64 {
        gram_condition(&self.right_vectors)
    }

    /// Per-eigenvalue condition numbers 1/|uᴴv|; `None` without left vectors.
    pub fn eigenvalue_conditions(&self) -> Option<Vec<f64>> {
        let left = self.left_vectors.as_ref()?;
        let n = self.values.len();
        Some(
            (0..n)
                .map(|i| {
                    let d: C64 = left
                        .column(i)
                        .iter()
                        .zip(self.right_vectors.column(i))
                        .map(|(u, v)| u.conj() * v)
                        .sum();
                    1.0 / d.norm()
                })
                .collect(),
        )
    }
}

/// Eigendecomposition with default options apart from `want_left` and `tol`.
pub fn eig_general(a: &ComplexMatrix, want_left: bool, tol: f64) -> Result<EigenDecomposition> {
    eig_general_with(
        a,
        &EigOptions {
            want_left,
            tol,
            ..EigOptions::default()
        },
    )
}

fn validate(a: &ComplexMatrix, tol: f64) -> Result<usize> {
    let n = a.require_square()?;
    if n == 0 {
        return Err(Error::InvalidArgument("eigenproblem of dimension 0".into()));
    }
    if !(tol > 0.0) {
        return Err(Error::InvalidArgument(format!("tolerance must be positive, got {tol}")));
    }
    a.check_finite("eigensolver input")?;
    Ok(n)
}

/// Full decomposition. Inputs whose sparsity graph splits into several
/// connected components are solved component by component; this is an exact
/// permutation similarity, so the contract is unchanged.
pub fn eig_general_with(a: &ComplexMatrix, opts: &EigOptions) -> Result<EigenDecomposition> {
    let n = validate(a, opts.tol)?;
    let comps = components(a);
    if comps.len() == 1 {
        return eig_dense(a, opts);
    }
    let mut values = Vec::with_capacity(n);
    let mut right = ComplexMatrix::zeros(n, n);
    let mut left = opts.want_left.then(|| ComplexMatrix::zeros(n, n));
    for idx in &comps {
        let sub = ComplexMatrix::from_fn(idx.len(), idx.len(), |i, j| a[(idx[i], idx[j])]);
        let part = eig_dense(&sub, &EigOptions { tol: f64::INFINITY, ..*opts })?;
        for (jj, &lam) in part.values.iter().enumerate() {
            let col = values.len();
            values.push(lam);
            for (ii, &row) in idx.iter().enumerate() {
                right[(row, col)] = part.right_vectors[(ii, jj)];
            }
            if let (Some(l), Some(pl)) = (left.as_mut(), part.left_vectors.as_ref()) {
                for (ii, &row) in idx.iter().enumerate() {
                    l[(row, col)] = pl[(ii, jj)];
                }
            }
        }
    }
    finish(a, values, right, left, opts.tol)
}

/// Connected components of the graph with an edge wherever a_ij or a_ji is nonzero.
fn components(a: &ComplexMatrix) -> Vec<Vec<usize>> {
    let n = a.rows();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(p: &mut [usize], mut x: usize) -> usize {
        while p[x] != x {
            p[x] = p[p[x]];
            x = p[x];
        }
        x
    }
    for j in 0..n {
        for (i, z) in a.column(j).iter().enumerate() {
            if i != j && *z != ZERO {
                let (ri, rj) = (find(&mut parent, i), find(&mut parent, j));
                if ri != rj {
                    parent[ri.max(rj)] = ri.min(rj);
                }
            }
        }
    }
    let mut groups: Vec<Vec<usize>> = Vec::new();
    let mut slot = vec![usize::MAX; n];
    for i in 0..n {
        let r = find(&mut parent, i);
        if slot[r] == usize::MAX {
            slot[r] = groups.len();
            groups.push(Vec::new());
        }
        groups[slot[r]].push(i);
    }
    groups
}

fn finish(
    a: &ComplexMatrix,
    values: Vec<C64>,
    right: ComplexMatrix,
    left: Option<ComplexMatrix>,
    tol: f64,
) -> Result<EigenDecomposition> {
    if !right.is_finite() || left.as_ref().is_some_and(|l| !l.is_finite()) {
        return Err(Error::NonFinite {
            context: "eigenvectors",
        });
    }
    let residual = residuals(a, &values, &right).into_iter().fold(0.0, f64::max);
    if !(residual <= tol) {
        return Err(Error::NonConvergence(format!(
            "eigenpair residual {residual:e} exceeds tolerance {tol:e}"
        )));
    }
    Ok(EigenDecomposition {
        values,
        right_vectors: right,
        left_vectors: left,
        residual,
    })
}

fn eig_dense(a: &ComplexMatrix, opts: &EigOptions) -> Result<EigenDecomposition> {
    let n = a.rows();
    let mut h = a.clone();
    let scale = if opts.balance {
        balance(&mut h)
    } else {
        vec![1.0; n]
    };
    let taus = hessenberg(&mut h);
    let mut z = form_q(&h, &taus);
    clear_below_subdiagonal(&mut h);
    let values = hqr(&mut h, Some(&mut z), true, opts.iterations_per_eigenvalue)?;
    for j in 0..n {
        for i in j + 1..n {
            h[(i, j)] = ZERO;
        }
    }

    let mut right = triangular_right_vectors(&h, &z);
    for j in 0..n {
        let col = right.column_mut(j);
        for (x, d) in col.iter_mut().zip(&scale) {
            *x *= *d;
        }
        normalize(col);
    }
    let left = if opts.want_left {
        let mut l = triangular_left_vectors(&h, &z);
        for j in 0..n {
            let col = l.column_mut(j);
            for (x, d) in col.iter_mut().zip(&scale) {
                *x /= *d;
            }
            normalize(col);
        }
        Some(l)
    } else {
        None
    };
    finish(a, values, right, left, opts.tol)
}

/// Eigenvalues only; cheaper than a full decomposition.
pub fn eigenvalues(a: &ComplexMatrix) -> Result<Vec<C64>> {
    let _ = validate(a, 1.0)?;
    let mut out = Vec::with_capacity(a.rows());
    for idx in components(a) {
        let mut h = ComplexMatrix::from_fn(idx.len(), idx.len(), |i, j| a[(idx[i], idx[j])]);
        balance(&mut h);
        hessenberg(&mut h);
        clear_below_subdiagonal(&mut h);
        out.extend(hqr(&mut h, None, false, EigOptions::default().iterations_per_eigenvalue)?);
    }
    Ok(out)
}

/// Per-pair relative residuals ‖A v_i − λ_i v_i‖₂ / ‖A‖_F. Sparse inputs
/// are multiplied through their nonzero pattern.
pub fn residuals(a: &ComplexMatrix, values: &[C64], vectors: &ComplexMatrix) -> Vec<f64> {
    let n = a.rows();
    let an = a.frobenius_norm();
    let nnz: Vec<Vec<(usize, C64)>> = (0..n)
        .map(|k| {
            a.column(k)
                .iter()
                .enumerate()
                .filter(|(_, z)| **z != ZERO)
                .map(|(i, z)| (i, *z))
                .collect()
        })
        .collect();
    let mut r = vec![ZERO; n];
    values
        .iter()
        .enumerate()
        .map(|(j, &lam)| {
            let v = vectors.column(j);
            for (ri, vi) in r.iter_mut().zip(v) {
                *ri = -lam * vi;
            }
            for (k, col) in nnz.iter().enumerate() {
                let vk = v[k];
                if vk == ZERO {
                    continue;
                }
                for &(i, aik) in col {
                    r[i] += aik * vk;
                }
            }
            if an == 0.0 {
                vec_norm(&r)
            } else {
                vec_norm(&r) / an
            }
        })
        .collect()
}

fn normalize(v: &mut [C64]) {
    let m = v.iter().map(|z| z.norm()).fold(0.0, f64::max);
    if m == 0.0 {
        return;
    }
    for x in v.iter_mut() {
        *x /= m;
    }
    let s = vec_norm(v);
    for x in v.iter_mut() {
        *x /= s;
    }
}

/// Scale rows and columns by powers of two so that off-diagonal row and
/// column 1-norms are comparable. Returns the diagonal D of A ← D⁻¹AD.
fn balance(a: &mut ComplexMatrix) -> Vec<f64> {
    let n = a.rows();
    let mut d = vec![1.0; n];
    let radix = 2.0;
    let mut converged = false;
    let mut sweeps = 0;
    while !converged && sweeps < 100 {
        converged = true;
        sweeps += 1;
        for i in 0..n {
            let mut c = 0.0;
            let mut r = 0.0;
            for j in 0..n {
                if j != i {
                    c += cabs1(a[(j, i)]);
                    r += cabs1(a[(i, j)]);
                }
            }
            if c == 0.0 || r == 0.0 {
                continue;
            }
            let s = c + r;
            let mut f = 1.0;
            let mut g = r / radix;
            while c < g && f < 1e150 {
                f *= radix;
                c *= radix;
                r /= radix;
                g /= radix;
            }
            g = c / radix;
            while g >= r && f > 1e-150 {
                f /= radix;
                c /= radix;
                g /= radix;
                r *= radix;
            }
            if c + r >= 0.95 * s {
                continue;
            }
            converged = false;
            d[i] *= f;
            for j in 0..n {
                a[(i, j)] /= f;
            }
            for j in 0..n {
                a[(j, i)] *= f;
            }
        }
    }
    d
}

/// Householder reduction in place. Reflector vectors are stored below the
/// subdiagonal; returns the tau factors.
fn hessenberg(a: &mut ComplexMatrix) -> Vec<C64> {
    let n = a.rows();
    let mut taus = vec![ZERO; n.saturating_sub(1)];
    if n < 3 {
        return taus;
    }
    let mut w = vec![ZERO; n];
    for k in 0..n - 2 {
        let alpha = a[(k + 1, k)];
        let xnorm = a.column(k)[k + 2..].iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if xnorm == 0.0 && alpha.im == 0.0 {
            continue;
        }
        let mut beta = alpha.norm().hypot(xnorm);
        if alpha.re >= 0.0 {
            beta = -beta;
        }
        let tau = C64::new((beta - alpha.re) / beta, -alpha.im / beta);
        let inv = ONE / (alpha - beta);
        {
            let col = a.column_mut(k);
            for x in col[k + 2..].iter_mut() {
                *x *= inv;
            }
            col[k + 1] = C64::new(beta, 0.0);
        }
        taus[k] = tau;
        // v = (1, a[k+2.., k])
        let v: Vec<C64> = std::iter::once(ONE)
            .chain(a.column(k)[k + 2..].iter().copied())
            .collect();

        // A ← A H on columns k+1.., all rows.
        for x in w.iter_mut() {
            *x = ZERO;
        }
        for (jj, &vj) in v.iter().enumerate() {
            let col = a.column(k + 1 + jj);
            for (wi, &aij) in w.iter_mut().zip(col) {
                *wi += aij * vj;
            }
        }
        for (jj, &vj) in v.iter().enumerate() {
            let f = tau * vj.conj();
            let col = a.column_mut(k + 1 + jj);
            for (aij, &wi) in col.iter_mut().zip(&w) {
                *aij -= wi * f;
            }
        }
        // A ← Hᴴ A on rows k+1.., columns k+1..
        let tc = tau.conj();
        for j in k + 1..n {
            let col = a.column_mut(j);
            let s: C64 = v.iter().zip(&col[k + 1..]).map(|(vi, x)| vi.conj() * x).sum();
            let f = tc * s;
            for (x, &vi) in col[k + 1..].iter_mut().zip(&v) {
                *x -= vi * f;
            }
        }
    }
    taus
}

/// Q = H(0) H(1) … from the stored reflectors.
fn form_q(h: &ComplexMatrix, taus: &[C64]) -> ComplexMatrix {
    let n = h.rows();
    let mut q = ComplexMatrix::identity(n);
    if n < 3 {
        return q;
    }
    for k in (0..n - 2).rev() {
        let tau = taus[k];
        if tau == ZERO {
            continue;
        }
        let v: Vec<C64> = std::iter::once(ONE)
            .chain(h.column(k)[k + 2..].iter().copied())
            .collect();
        // Q[k+1.., k+1..] ← H Q[k+1.., k+1..]
        for j in k + 1..n {
            let col = q.column_mut(j);
            let s: C64 = v.iter().zip(&col[k + 1..]).map(|(vi, x)| vi.conj() * x).sum();
            let f = tau * s;
            for (x, &vi) in col[k + 1..].iter_mut().zip(&v) {
                *x -= vi * f;
            }
        }
    }
    q
}

fn clear_below_subdiagonal(h: &mut ComplexMatrix) {
    let n = h.rows();
    for j in 0..n {
        for i in j + 2..n {
            h[(i, j)] = ZERO;
        }
    }
}

/// Householder for a 2-vector: returns (beta, tau, v2) with
/// (I − τ̄ u uᴴ)(alpha, x) = (beta, 0), u = (1, v2).
#[inline]
fn reflector2(alpha: C64, x: C64) -> (C64, C64, C64) {
    let xnorm = x.norm();
    if xnorm == 0.0 && alpha.im == 0.0 {
        return (alpha, ZERO, ZERO);
    }
    let mut beta = alpha.norm().hypot(xnorm);
    if alpha.re >= 0.0 {
        beta = -beta;
    }
    let tau = C64::new((beta - alpha.re) / beta, -alpha.im / beta);
    let v2 = x / (alpha - beta);
    (C64::new(beta, 0.0), tau, v2)
}

/// Complex Schur form by single-shift QR on a Hessenberg matrix. With
/// `want_t` the full triangular factor is produced; `z` accumulates the
/// transformations.
fn hqr(
    h: &mut ComplexMatrix,
    mut z: Option<&mut ComplexMatrix>,
    want_t: bool,
    iters_per_eig: usize,
) -> Result<Vec<C64>> {
    let n = h.rows();
    let mut w = vec![ZERO; n];
    if n == 1 {
        w[0] = h[(0, 0)];
        return Ok(w);
    }
    let ulp = f64::EPSILON;
    let smlnum = f64::MIN_POSITIVE * (n as f64 / ulp);
    let itmax = iters_per_eig * n.max(10);
    let mut kdefl = 0usize;
    let mut i = n - 1;
    loop {
        let mut l = 0;
        let mut converged = false;
        for _its in 0..=itmax {
            let mut k = i;
            while k > l {
                let hkk1 = cabs1(h[(k, k - 1)]);
                if hkk1 <= smlnum {
                    break;
                }
                let mut tst = cabs1(h[(k - 1, k - 1)]) + cabs1(h[(k, k)]);
                if tst == 0.0 {
                    if k >= 2 {
                        tst += cabs1(h[(k - 1, k - 2)]);
                    }
                    if k + 1 < n {
                        tst += cabs1(h[(k + 1, k)]);
                    }
                }
                if hkk1 <= ulp * tst {
                    let hk1k = cabs1(h[(k - 1, k)]);
                    let ab = hkk1.max(hk1k);
                    let ba = hkk1.min(hk1k);
                    let x1 = cabs1(h[(k, k)]);
                    let x2 = cabs1(h[(k - 1, k - 1)] - h[(k, k)]);
                    let aa = x1.max(x2);
                    let bb = x1.min(x2);
                    let s = aa + ab;
                    if ba * (ab / s) <= smlnum.max(ulp * (bb * (aa / s))) {
                        break;
                    }
                }
                k -= 1;
            }
            l = k;
            if l > 0 {
                h[(l, l - 1)] = ZERO;
            }
            if l >= i {
                converged = true;
                break;
            }
            kdefl += 1;
            let (i1, i2) = if want_t { (0, n - 1) } else { (l, i) };

            let t = if kdefl % (2 * KEXSH) == 0 {
                C64::new(DAT1 * cabs1(h[(i, i - 1)]), 0.0) + h[(i, i)]
            } else if kdefl % KEXSH == 0 {
                C64::new(DAT1 * cabs1(h[(l + 1, l)]), 0.0) + h[(l, l)]
            } else {
                let mut t = h[(i, i)];
                let u = h[(i - 1, i)].sqrt() * h[(i, i - 1)].sqrt();
                let s = cabs1(u);
                if s != 0.0 {
                    let x = 0.5 * (h[(i - 1, i - 1)] - t);
                    let sx = cabs1(x);
                    let s = s.max(sx);
                    let mut y = s * ((x / s) * (x / s) + (u / s) * (u / s)).sqrt();
                    if sx > 0.0 {
                        let xs = x / sx;
                        if xs.re * y.re + xs.im * y.im < 0.0 {
                            y = -y;
                        }
                    }
                    t -= u * (u / (x + y));
                }
                t
            };

            // Start the bulge where two consecutive subdiagonals are small.
            let mut m = l;
            let mut v = [ZERO; 2];
            let mut found = false;
            let mut mm = i - 1;
            while mm > l {
                let h11 = h[(mm, mm)];
                let h22 = h[(mm + 1, mm + 1)];
                let mut h11s = h11 - t;
                let mut h21 = h[(mm + 1, mm)];
                let s = cabs1(h11s) + cabs1(h21);
                h11s /= s;
                h21 /= s;
                let h10 = h[(mm, mm - 1)];
                if cabs1(h10) * cabs1(h21) <= ulp * (cabs1(h11s) * (cabs1(h11) + cabs1(h22))) {
                    m = mm;
                    v = [h11s, h21];
                    found = true;
                    break;
                }
                mm -= 1;
            }
            if !found {
                let h11s = h[(l, l)] - t;
                let h21 = h[(l + 1, l)];
                let s = cabs1(h11s) + cabs1(h21);
                v = [h11s / s, h21 / s];
                m = l;
            }

            for k in m..i {
                if k > m {
                    v = [h[(k, k - 1)], h[(k + 1, k - 1)]];
                }
                let (beta, tau, v2) = reflector2(v[0], v[1]);
                if k > m {
                    h[(k, k - 1)] = beta;
                    h[(k + 1, k - 1)] = ZERO;
                }
                if tau == ZERO {
                    continue;
                }
                let tc = tau.conj();
                let v2c = v2.conj();
                if k == m && m > l {
                    // The bulge starts below a negligible subdiagonal entry; rotate it
                    // with the rest of the row and drop the fill it creates.
                    let hm = h[(m, m - 1)];
                    h[(m, m - 1)] = hm - tc * hm;
                }
                for j in k..=i2 {
                    let s = h[(k, j)] + v2c * h[(k + 1, j)];
                    let f = tc * s;
                    h[(k, j)] -= f;
                    h[(k + 1, j)] -= f * v2;
                }
                let last = (k + 2).min(i);
                apply_right(h, k, i1, last, tau, v2);
                if let Some(zz) = z.as_deref_mut() {
                    apply_right(zz, k, 0, n - 1, tau, v2);
                }
            }
        }
        if !converged {
            return Err(Error::NonConvergence(format!(
                "QR iteration budget of {itmax} exhausted at eigenvalue index {i}"
            )));
        }
        w[i] = h[(i, i)];
        kdefl = 0;
        if l == 0 {
            break;
        }
        i = l - 1;
        if i == 0 {
            w[0] = h[(0, 0)];
            break;
        }
    }
    Ok(w)
}

/// Columns k, k+1 of rows lo..=hi ← (·)(I − τ u uᴴ), u = (1, v2).
#[inline]
fn apply_right(m: &mut ComplexMatrix, k: usize, lo: usize, hi: usize, tau: C64, v2: C64) {
    let rows = m.rows();
    let data = m.as_mut_slice();
    let (left, right) = data.split_at_mut((k + 1) * rows);
    let ck = &mut left[k * rows..];
    let ck1 = &mut right[..rows];
    let v2c = v2.conj();
    for j in lo..=hi {
        let s = ck[j] + v2 * ck1[j];
        let f = tau * s;
        ck[j] -= f;
        ck1[j] -= f * v2c;
    }
}

fn small_pivot(lam: C64, n: usize) -> f64 {
    let ulp = f64::EPSILON;
    (ulp * cabs1(lam)).max(f64::MIN_POSITIVE * (n as f64 / ulp))
}

/// Right eigenvectors Z·x where T x = λ x, x upper-triangular in shape.
fn triangular_right_vectors(t: &ComplexMatrix, z: &ComplexMatrix) -> ComplexMatrix {
    let n = t.rows();
    let mut out = ComplexMatrix::zeros(n, n);
    let mut x = vec![ZERO; n];
    let tnorm = t.max_abs().max(f64::MIN_POSITIVE);
    for ki in (0..n).rev() {
        let lam = t[(ki, ki)];
        let smin = small_pivot(lam, n).max(f64::EPSILON * tnorm * 1e-3);
        x[ki] = ONE;
        for (k, xk) in x.iter_mut().enumerate().take(ki) {
            *xk = -t[(k, ki)];
        }
        for k in (0..ki).rev() {
            let mut d = t[(k, k)] - lam;
            if cabs1(d) < smin {
                d = C64::new(smin, 0.0);
            }
            x[k] /= d;
            let xk = cabs1(x[k]);
            if xk > RESCALE_AT {
                let f = 1.0 / xk;
                for xi in x[..=ki].iter_mut() {
                    *xi *= f;
                }
            }
            let xk = x[k];
            if xk != ZERO {
                let col = t.column(k);
                for (xi, &tik) in x[..k].iter_mut().zip(col) {
                    *xi -= tik * xk;
                }
            }
        }
        let col = out.column_mut(ki);
        for (k, &xk) in x[..=ki].iter().enumerate() {
            if xk == ZERO {
                continue;
            }
            for (o, &zk) in col.iter_mut().zip(z.column(k)) {
                *o += zk * xk;
            }
        }
        normalize(col);
    }
    out
}

/// Left eigenvectors u = Z·conj(y) where yᵀ T = λ yᵀ.
fn triangular_left_vectors(t: &ComplexMatrix, z: &ComplexMatrix) -> ComplexMatrix {
    let n = t.rows();
    let mut out = ComplexMatrix::zeros(n, n);
    let mut y = vec![ZERO; n];
    let tnorm = t.max_abs().max(f64::MIN_POSITIVE);
    for ki in 0..n {
        let lam = t[(ki, ki)];
        let smin = small_pivot(lam, n).max(f64::EPSILON * tnorm * 1e-3);
        for v in y.iter_mut() {
            *v = ZERO;
        }
        y[ki] = ONE;
        for j in ki + 1..n {
            let col = t.column(j);
            let s: C64 = y[ki..j].iter().zip(&col[ki..j]).map(|(a, b)| a * b).sum();
            let mut d = t[(j, j)] - lam;
            if cabs1(d) < smin {
                d = C64::new(smin, 0.0);
            }
            y[j] = -s / d;
            let yj = cabs1(y[j]);
            if yj > RESCALE_AT {
                let f = 1.0 / yj;
                for v in y[ki..=j].iter_mut() {
                    *v *= f;
                }
            }
        }
        let col = out.column_mut(ki);
        for (k, &yk) in y.iter().enumerate().skip(ki) {
            if yk == ZERO {
                continue;
            }
            let w = yk.conj();
            for (o, &zk) in col.iter_mut().zip(z.column(k)) {
                *o += zk * w;
            }
        }
        normalize(col);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn random_matrix(rng: &mut ChaCha8Rng, n: usize) -> ComplexMatrix {
        ComplexMatrix::from_fn(n, n, |_, _| c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
    }

    fn sorted(mut v: Vec<C64>) -> Vec<C64> {
        v.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
        v
    }

    #[test]
    fn diagonal_matrix() {
        let a = ComplexMatrix::from_diagonal(&[c(1.0, 0.0), c(0.0, 2.0), c(-3.0, 0.0)]);
        let e = eig_general(&a, true, 1e-12).unwrap();
        let want = [c(1.0, 0.0), c(0.0, 2.0), c(-3.0, 0.0)];
        for (j, lam) in e.values.iter().enumerate() {
            let i = want.iter().position(|w| (w - lam).norm() < 1e-14).expect("eigenvalue present");
            assert!((e.right_vectors[(i, j)].norm() - 1.0).abs() < 1e-14);
        }
        assert_eq!(e.residual, 0.0);
    }

    #[test]
    fn pauli_y() {
        let a = ComplexMatrix::from_rows(&[vec![ZERO, c(0.0, -1.0)], vec![c(0.0, 1.0), ZERO]]).unwrap();
        let vals = sorted(eig_general(&a, false, 1e-12).unwrap().values);
        assert!((vals[0] - c(-1.0, 0.0)).norm() < 1e-14);
        assert!((vals[1] - c(1.0, 0.0)).norm() < 1e-14);
    }

    #[test]
    fn companion_matrix_roots() {
        // roots 1, 2, 3, 4 of x⁴ − 10x³ + 35x² − 50x + 24
        let a = ComplexMatrix::from_real_rows(&[
            vec![10.0, -35.0, 50.0, -24.0],
            vec![1.0, 0.0, 0.0, 0.0],
            vec![0.0, 1.0, 0.0, 0.0],
            vec![0.0, 0.0, 1.0, 0.0],
        ])
        .unwrap();
        let vals = sorted(eig_general(&a, false, 1e-12).unwrap().values);
        for (k, v) in vals.iter().enumerate() {
            assert!((v - c(k as f64 + 1.0, 0.0)).norm() < 1e-9, "{v}");
        }
    }

    #[test]
    fn jordan_block_still_returns_vectors() {
        let a = ComplexMatrix::from_real_rows(&[vec![2.0, 1.0], vec![0.0, 2.0]]).unwrap();
        let e = eig_general(&a, true, 1e-10).unwrap();
        assert!(e.values.iter().all(|v| (v - c(2.0, 0.0)).norm() < 1e-7));
        assert!(e.gram_condition() > 1e10);
    }

    #[test]
    fn random_residuals_and_left_vectors() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for n in [1, 2, 3, 7, 20, 50, 90] {
            let a = random_matrix(&mut rng, n);
            let e = eig_general(&a, true, 1e-12).unwrap();
            assert!(e.residual <= 1e-13, "n = {n}: {}", e.residual);
            let l = e.left_vectors.as_ref().unwrap();
            for (j, &lam) in e.values.iter().enumerate() {
                let u = l.column(j);
                // uᴴA − λuᴴ
                let mut worst = 0.0f64;
                for k in 0..n {
                    let s: C64 = (0..n).map(|i| u[i].conj() * a[(i, k)]).sum::<C64>() - lam * u[k].conj();
                    worst = worst.max(s.norm());
                }
                assert!(worst <= 1e-12 * a.frobenius_norm(), "left residual {worst:e}");
            }
            let trace: C64 = e.values.iter().sum();
            assert!((trace - a.trace()).norm() < 1e-11 * (n as f64));
        }
    }

    #[test]
    fn schur_factorization_reconstructs() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for n in [2, 3, 4, 5, 7, 20, 60] {
            let a = random_matrix(&mut rng, n);
            let mut h = a.clone();
            let taus = hessenberg(&mut h);
            let mut z = form_q(&h, &taus);
            clear_below_subdiagonal(&mut h);
            let rec = z.matmul(&h).matmul(&z.adjoint());
            assert!(rec.max_abs_diff(&a) < 1e-13);
            hqr(&mut h, Some(&mut z), true, 30).unwrap();
            let rec = z.matmul(&h).matmul(&z.adjoint());
            assert!(rec.max_abs_diff(&a) < 1e-13, "n = {n}");
            let unit = z.adjoint().matmul(&z);
            assert!(unit.max_abs_diff(&ComplexMatrix::identity(n)) < 1e-13);
            for j in 0..n {
                for i in j + 1..n {
                    assert_eq!(h[(i, j)], ZERO);
                }
            }
        }
    }

    #[test]
    fn decoupled_blocks_are_split_exactly() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let n = 12;
        // two interleaved blocks: even and odd indices
        let a = ComplexMatrix::from_fn(n, n, |i, j| {
            if (i + j) % 2 == 0 {
                c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
            } else {
                ZERO
            }
        });
        assert_eq!(components(&a).len(), 2);
        let e = eig_general(&a, true, 1e-12).unwrap();
        assert!(e.residual < 1e-13);
        let dense = eig_dense(&a, &EigOptions { want_left: false, tol: 1e-12, ..EigOptions::default() }).unwrap();
        let (x, y) = (sorted(e.values.clone()), sorted(dense.values));
        for (p, q) in x.iter().zip(&y) {
            assert!((p - q).norm() < 1e-12);
        }
        assert_eq!(e.eigenvalue_conditions().unwrap().len(), n);
    }

    #[test]
    fn values_only_matches_full() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let a = random_matrix(&mut rng, 40);
        let full = sorted(eig_general(&a, false, 1e-12).unwrap().values);
        let only = sorted(eigenvalues(&a).unwrap());
        for (x, y) in full.iter().zip(&only) {
            assert!((x - y).norm() < 1e-12);
        }
    }

    #[test]
    fn badly_scaled_matrix_is_balanced() {
        let a = ComplexMatrix::from_real_rows(&[
            vec![1.0, 1e8, 0.0],
            vec![1e-8, 2.0, 1e8],
            vec![0.0, 1e-8, 3.0],
        ])
        .unwrap();
        let e = eig_general(&a, false, 1e-12).unwrap();
        assert!(e.residual < 1e-14);
    }

    #[test]
    fn errors() {
        assert!(matches!(eig_general(&ComplexMatrix::zeros(2, 3), false, 1e-10), Err(Error::NonSquare { .. })));
        let mut a = ComplexMatrix::identity(2);
        a[(0, 1)] = c(f64::INFINITY, 0.0);
        assert!(matches!(eig_general(&a, false, 1e-10), Err(Error::NonFinite { .. })));
        assert!(eig_general(&ComplexMatrix::identity(2), false, 0.0).is_err());
    }
}
