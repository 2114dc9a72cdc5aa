//! Vectorized master equation.
//!
//! Density matrices are vectorized by stacking columns, so vec(AXB) =
//! (Bᵀ ⊗ A) vec(X) and a pure state maps to vec(|ψ⟩⟨ψ|) = ψ* ⊗ ψ. The
//! Liouvillian reproduces
//!
//! ρ̇ = −i[H, ρ] + Σ_k γ_k(t) (2 L_k ρ L_k† − {L_k† L_k, ρ})
//!
//! exactly, which in this convention reads
//!
//! 𝓛 = −i(I ⊗ H − Hᵀ ⊗ I) + Σ_k γ_k(t) [2 L̄_k ⊗ L_k − I ⊗ L_k†L_k − (L_k†L_k)ᵀ ⊗ I].

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::linalg::{
    eig_general, eig_hermitian, gram_condition, matrix_exp, ComplexMatrix, Lu, ZERO,
};

/// Time dependence of a channel rate.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum RateLaw {
    /// γ(t) = γ₀.
    Constant { gamma0: f64 },
    /// γ(t) = γ₀(1 + cos ωt).
    Cosine { gamma0: f64, omega: f64 },
}

impl RateLaw {
    pub fn gamma0(&self) -> f64 {
        match *self {
            RateLaw::Constant { gamma0 } | RateLaw::Cosine { gamma0, .. } => gamma0,
        }
    }

    /// Rate at time t. The cosine law is evaluated as 2γ₀cos²(ωt/2), which is
    /// the same function but never dips below zero through rounding.
    pub fn eval(&self, t: f64) -> f64 {
        match *self {
            RateLaw::Constant { gamma0 } => gamma0,
            RateLaw::Cosine { gamma0, omega } => {
                let c = (0.5 * omega * t).cos();
                2.0 * gamma0 * c * c
            }
        }
    }

    pub fn is_constant(&self) -> bool {
        matches!(self, RateLaw::Constant { .. })
            || matches!(self, RateLaw::Cosine { gamma0, omega } if *gamma0 == 0.0 || *omega == 0.0)
    }

    fn validate(&self) -> Result<()> {
        let (g, w) = match *self {
            RateLaw::Constant { gamma0 } => (gamma0, 0.0),
            RateLaw::Cosine { gamma0, omega } => (gamma0, omega),
        };
        if !(g.is_finite() && g >= 0.0) {
            return Err(Error::InvalidModel(format!("rate amplitude must be finite and >= 0, got {g}")));
        }
        if !(w.is_finite() && w >= 0.0) {
            return Err(Error::InvalidModel(format!("drive frequency must be finite and >= 0, got {w}")));
        }
        Ok(())
    }
}

/// A jump operator with its rate.
#[derive(Clone, Debug, PartialEq)]
pub struct Channel {
    pub op: ComplexMatrix,
    pub rate: RateLaw,
}

impl Channel {
    pub fn new(op: ComplexMatrix, rate: RateLaw) -> Self {
        Self { op, rate }
    }
}

/// Hamiltonian plus jump channels; every representation is derived from this.
#[derive(Clone, Debug, PartialEq)]
pub struct ModelSpec {
    dim: usize,
    hamiltonian: ComplexMatrix,
    channels: Vec<Channel>,
}

impl ModelSpec {
    pub fn new(hamiltonian: ComplexMatrix, channels: Vec<Channel>) -> Result<Self> {
        let dim = hamiltonian.require_square()?;
        if dim == 0 {
            return Err(Error::InvalidModel("Hilbert space dimension must be >= 1".into()));
        }
        hamiltonian.check_finite("Hamiltonian")?;
        let scale = hamiltonian.frobenius_norm();
        let defect = hamiltonian.hermitian_defect();
        if defect > 1e-12 * scale {
            return Err(Error::InvalidModel(format!(
                "Hamiltonian is not Hermitian (defect {defect:e}, norm {scale:e})"
            )));
        }
        for (k, ch) in channels.iter().enumerate() {
            if ch.op.rows() != dim || ch.op.cols() != dim {
                return Err(Error::DimensionMismatch {
                    context: "jump operator",
                    expected: dim,
                    got: if ch.op.rows() != dim { ch.op.rows() } else { ch.op.cols() },
                });
            }
            ch.op.check_finite("jump operator")?;
            ch.rate
                .validate()
                .map_err(|e| Error::InvalidModel(format!("channel {k}: {e}")))?;
        }
        Ok(Self {
            dim,
            hamiltonian,
            channels,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn hamiltonian(&self) -> &ComplexMatrix {
        &self.hamiltonian
    }

    pub fn channels(&self) -> &[Channel] {
        &self.channels
    }

    /// True when no rate depends on time.
    pub fn is_autonomous(&self) -> bool {
        self.channels.iter().all(|c| c.rate.is_constant())
    }
}

/// A validated density matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix {
    rho: ComplexMatrix,
}

impl DensityMatrix {
    /// Default validation tolerance for Hermiticity, trace and positivity.
    pub const TOL: f64 = 1e-10;

    pub fn new(rho: ComplexMatrix) -> Result<Self> {
        Self::with_tolerance(rho, Self::TOL)
    }

    /// Validate with a custom tolerance (e.g. for integrated states).
    pub fn with_tolerance(rho: ComplexMatrix, tol: f64) -> Result<Self> {
        let n = rho.require_square()?;
        if n == 0 {
            return Err(Error::InvalidDensity("empty matrix".into()));
        }
        rho.check_finite("density matrix")?;
        let herm = rho.hermitian_defect();
        if herm > tol {
            return Err(Error::InvalidDensity(format!("not Hermitian (defect {herm:e})")));
        }
        let tr = rho.trace();
        if (tr - 1.0).norm() > tol {
            return Err(Error::InvalidDensity(format!("trace {tr} differs from 1")));
        }
        let lo = eig_hermitian(&rho)?.values[0];
        if lo < -tol {
            return Err(Error::InvalidDensity(format!("negative eigenvalue {lo:e}")));
        }
        Ok(Self { rho })
    }

    pub fn maximally_mixed(dim: usize) -> Self {
        Self {
            rho: ComplexMatrix::identity(dim).scale_real(1.0 / dim as f64),
        }
    }

    /// |ψ⟩⟨ψ| after normalizing ψ.
    pub fn pure(psi: &[C64]) -> Result<Self> {
        let n2: f64 = psi.iter().map(|z| z.norm_sqr()).sum();
        if psi.is_empty() || !(n2 > 0.0) || !n2.is_finite() {
            return Err(Error::InvalidDensity("state vector must be nonzero and finite".into()));
        }
        Ok(Self {
            rho: crate::operators::projector(psi),
        })
    }

    pub fn dim(&self) -> usize {
        self.rho.rows()
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.rho
    }

    pub fn into_matrix(self) -> ComplexMatrix {
        self.rho
    }

    /// Tr ρ².
    pub fn purity(&self) -> f64 {
        self.rho.hs_inner(&self.rho).re
    }
}

/// Column-stacked vector of a density matrix.
pub fn vectorize(rho: &DensityMatrix) -> Vec<C64> {
    vectorize_matrix(rho.matrix())
}

/// Column stacking of an arbitrary square matrix.
pub fn vectorize_matrix(a: &ComplexMatrix) -> Vec<C64> {
    a.as_slice().to_vec()
}

/// Inverse of [`vectorize_matrix`]; the length must be a perfect square.
pub fn devectorize(v: &[C64]) -> Result<ComplexMatrix> {
    let d = (v.len() as f64).sqrt().round() as usize;
    if d * d != v.len() || d == 0 {
        return Err(Error::DimensionMismatch {
            context: "devectorize (length must be a nonzero perfect square)",
            expected: d.max(1) * d.max(1),
            got: v.len(),
        });
    }
    ComplexMatrix::from_column_major(d, d, v.to_vec())
}

/// Coherent part and per-channel dissipators, so 𝓛(t) can be assembled for
/// many times without recomputing Kronecker products.
#[derive(Clone, Debug)]
pub struct LiouvillianParts {
    pub coherent: ComplexMatrix,
    /// Unit-rate dissipator of each channel and its rate law.
    pub dissipators: Vec<(ComplexMatrix, RateLaw)>,
    /// Unit-rate jump terms 2L̄⊗L alone, used for the no-jump variant.
    jumps: Vec<ComplexMatrix>,
}

impl LiouvillianParts {
    pub fn new(model: &ModelSpec) -> Self {
        let d = model.dim();
        let id = ComplexMatrix::identity(d);
        let h = model.hamiltonian();
        let coherent = (&id.kron(h) - &h.transpose().kron(&id)).scale(C64::new(0.0, -1.0));
        let mut dissipators = Vec::with_capacity(model.channels().len());
        let mut jumps = Vec::with_capacity(model.channels().len());
        for ch in model.channels() {
            let l = &ch.op;
            let ldl = l.adjoint().matmul(l);
            let jump = l.conj().kron(l).scale_real(2.0);
            let mut dis = jump.clone();
            dis -= &id.kron(&ldl);
            dis -= &ldl.transpose().kron(&id);
            dissipators.push((dis, ch.rate));
            jumps.push(jump);
        }
        Self {
            coherent,
            dissipators,
            jumps,
        }
    }

    /// 𝓛(t).
    pub fn at(&self, t: f64) -> ComplexMatrix {
        let mut l = self.coherent.clone();
        for (dis, rate) in &self.dissipators {
            let g = rate.eval(t);
            if g != 0.0 {
                for (a, b) in l.as_mut_slice().iter_mut().zip(dis.as_slice()) {
                    *a += b * g;
                }
            }
        }
        l
    }

    /// 𝓛(t) with the jump terms 2L̄⊗L removed.
    pub fn no_jump_at(&self, t: f64) -> ComplexMatrix {
        let mut l = self.at(t);
        for ((_, rate), jump) in self.dissipators.iter().zip(&self.jumps) {
            let g = rate.eval(t);
            for (a, b) in l.as_mut_slice().iter_mut().zip(jump.as_slice()) {
                *a -= b * g;
            }
        }
        l
    }
}

/// 𝓛(t) as a D²×D² matrix.
pub fn build_liouvillian(model: &ModelSpec, t: f64) -> ComplexMatrix {
    LiouvillianParts::new(model).at(t)
}

/// Non-trace-preserving generator obtained by dropping the jump terms.
pub fn build_no_jump_liouvillian(model: &ModelSpec, t: f64) -> ComplexMatrix {
    LiouvillianParts::new(model).no_jump_at(t)
}

/// Right-hand side of the master equation in operator form. This route does
/// not use Kronecker products and serves as an independent check of 𝓛.
pub fn lindblad_rhs(model: &ModelSpec, t: f64, rho: &ComplexMatrix) -> ComplexMatrix {
    let h = model.hamiltonian();
    let mut out = h.commutator(rho).scale(C64::new(0.0, -1.0));
    for ch in model.channels() {
        let g = ch.rate.eval(t);
        if g == 0.0 {
            continue;
        }
        let l = &ch.op;
        let ld = l.adjoint();
        let ldl = ld.matmul(l);
        let mut term = l.matmul(rho).matmul(&ld).scale_real(2.0);
        term -= &ldl.matmul(rho);
        term -= &rho.matmul(&ldl);
        out += &term.scale_real(g);
    }
    out
}

/// ‖vec(I)ᴴ 𝓛‖_∞ of the row vector, i.e. Σ_j |Σ_i 𝓛_{ii',j}| over the
/// diagonal rows. Zero for a trace-preserving generator.
pub fn check_trace_preserving(l: &ComplexMatrix) -> f64 {
    let n = l.rows();
    let d = (n as f64).sqrt().round() as usize;
    if d * d != n || l.cols() != n {
        return f64::INFINITY;
    }
    (0..n)
        .map(|j| {
            let col = l.column(j);
            (0..d).map(|i| col[i * d + i]).sum::<C64>().norm()
        })
        .sum()
}

/// Eigen-analysis of a Liouvillian.
#[derive(Clone, Debug)]
pub struct DampingBasis {
    /// μ_n sorted by real part, descending.
    pub values: Vec<C64>,
    /// Columns are unit-norm right eigenvectors ⟦ϱ_n⟧.
    pub right: ComplexMatrix,
    /// Dual basis: leftᴴ · right = I when the right basis is invertible.
    pub left: ComplexMatrix,
    /// Indices with |μ| ≤ tol.
    pub steady: Vec<usize>,
    /// max_n min_m |μ_m − μ_n*|.
    pub conjugate_defect: f64,
    /// max over non-steady modes of |Tr ϱ_n| (unit-norm vectors).
    pub trace_defect: f64,
    /// Gram condition number of the right eigenvectors.
    pub gram_condition: f64,
    pub tol: f64,
}

impl DampingBasis {
    /// First steady index, if any.
    pub fn steady_index(&self) -> Option<usize> {
        self.steady.first().copied()
    }

    /// Expansion coefficients c_n = ⟨left_n, vec ρ⟩.
    pub fn project(&self, rho: &ComplexMatrix) -> Vec<C64> {
        let v = vectorize_matrix(rho);
        (0..self.values.len())
            .map(|n| self.left.column(n).iter().zip(&v).map(|(u, x)| u.conj() * x).sum())
            .collect()
    }

    /// Σ_n c_n ϱ_n.
    pub fn resum(&self, coeffs: &[C64]) -> Result<ComplexMatrix> {
        let n = self.right.rows();
        let mut v = vec![ZERO; n];
        for (k, c) in coeffs.iter().enumerate() {
            for (acc, x) in v.iter_mut().zip(self.right.column(k)) {
                *acc += c * x;
            }
        }
        devectorize(&v)
    }

    /// Σ_n c_n e^{μ_n t} ϱ_n for the autonomous problem.
    pub fn evolve(&self, rho: &ComplexMatrix, t: f64) -> Result<ComplexMatrix> {
        let c: Vec<C64> = self
            .project(rho)
            .into_iter()
            .zip(&self.values)
            .map(|(c, mu)| c * (mu * t).exp())
            .collect();
        self.resum(&c)
    }
}

/// Eigen-pairs of 𝓛 with steady modes flagged by |μ| ≤ tol. Conjugate-pair
/// symmetry and tracelessness are measured and reported, not enforced.
pub fn damping_basis(l: &ComplexMatrix, tol: f64) -> Result<DampingBasis> {
    let n = l.require_square()?;
    let d = (n as f64).sqrt().round() as usize;
    if d * d != n {
        return Err(Error::DimensionMismatch {
            context: "Liouvillian size must be a perfect square",
            expected: d * d,
            got: n,
        });
    }
    let eig = eig_general(l, true, 1e-9)?;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        eig.values[b]
            .re
            .total_cmp(&eig.values[a].re)
            .then(eig.values[b].im.total_cmp(&eig.values[a].im))
    });
    let values: Vec<C64> = order.iter().map(|&k| eig.values[k]).collect();
    let right = ComplexMatrix::from_fn(n, n, |i, j| eig.right_vectors[(i, order[j])]);
    let eig_left = eig.left_vectors.expect("left vectors requested");
    let left = match Lu::new(&right).and_then(|lu| lu.inverse()) {
        Ok(inv) => inv.adjoint(),
        Err(_) => {
            // Defective spectrum: fall back to the normalized left eigenvectors.
            let mut u = ComplexMatrix::from_fn(n, n, |i, j| eig_left[(i, order[j])]);
            for k in 0..n {
                let s: C64 = u.column(k).iter().zip(right.column(k)).map(|(a, b)| a.conj() * b).sum();
                if s.norm() > 0.0 {
                    let f = s.conj().inv();
                    for x in u.column_mut(k) {
                        *x *= f;
                    }
                }
            }
            u
        }
    };
    let steady: Vec<usize> = (0..n).filter(|&k| values[k].norm() <= tol).collect();
    let conjugate_defect = values
        .iter()
        .map(|mu| {
            values
                .iter()
                .map(|nu| (nu - mu.conj()).norm())
                .fold(f64::INFINITY, f64::min)
        })
        .fold(0.0, f64::max);
    let trace_defect = (0..n)
        .filter(|k| !steady.contains(k))
        .map(|k| {
            let col = right.column(k);
            (0..d).map(|i| col[i * d + i]).sum::<C64>().norm()
        })
        .fold(0.0, f64::max);
    let gram = gram_condition(&right);
    Ok(DampingBasis {
        values,
        right,
        left,
        steady,
        conjugate_defect,
        trace_defect,
        gram_condition: gram,
        tol,
    })
}

/// Default steady-mode tolerance, relative to ‖𝓛‖_F.
pub fn default_steady_tol(l: &ComplexMatrix) -> f64 {
    1e-10 * l.frobenius_norm().max(f64::MIN_POSITIVE)
}

/// Unique μ = 0 mode of 𝓛(t), normalized to unit trace.
pub fn steady_state(model: &ModelSpec, t: f64) -> Result<DensityMatrix> {
    let l = build_liouvillian(model, t);
    let tol = default_steady_tol(&l);
    let basis = damping_basis(&l, tol)?;
    match basis.steady.len() {
        0 => Err(Error::NoSteadyState {
            smallest: basis.values.iter().map(|z| z.norm()).fold(f64::INFINITY, f64::min),
        }),
        1 => {
            let k = basis.steady[0];
            let m = devectorize(basis.right.column(k))?;
            let tr = m.trace();
            if tr.norm() <= 1e-12 {
                return Err(Error::InvalidDensity("steady mode has zero trace".into()));
            }
            let m = m.scale(tr.inv());
            // Remove the rounding-level anti-Hermitian part.
            let m = (&m + &m.adjoint()).scale_real(0.5);
            DensityMatrix::new(m)
        }
        count => Err(Error::DegenerateSteadyState { count }),
    }
}

/// Midpoint-rule propagator from 0 to t: Π_k exp(𝓛(t_k + h/2) h) with
/// n = max(1, round(t/dt)) equal steps h = t/n.
pub fn propagator(model: &ModelSpec, t: f64, dt: f64) -> Result<ComplexMatrix> {
    propagator_between(model, 0.0, t, dt)
}

/// Midpoint-rule propagator from t0 to t1.
pub fn propagator_between(model: &ModelSpec, t0: f64, t1: f64, dt: f64) -> Result<ComplexMatrix> {
    if !(dt > 0.0) || !dt.is_finite() || !t0.is_finite() || !t1.is_finite() || t1 < t0 {
        return Err(Error::InvalidArgument(format!(
            "propagator needs dt > 0 and t1 >= t0 (dt = {dt}, span [{t0}, {t1}])"
        )));
    }
    let n2 = model.dim() * model.dim();
    if t1 == t0 {
        return Ok(ComplexMatrix::identity(n2));
    }
    let parts = LiouvillianParts::new(model);
    let span = t1 - t0;
    if model.is_autonomous() {
        return matrix_exp(&parts.at(t0).scale_real(span));
    }
    let steps = ((span / dt).round() as usize).max(1);
    let h = span / steps as f64;
    let mut s = ComplexMatrix::identity(n2);
    for k in 0..steps {
        let tm = t0 + (k as f64 + 0.5) * h;
        let step = matrix_exp(&parts.at(tm).scale_real(h))?;
        s = step.matmul(&s);
    }
    Ok(s)
}

/// Propagator together with ‖𝓢_dt − 𝓢_{dt/2}‖_F as a convergence estimate.
pub fn propagator_checked(model: &ModelSpec, t: f64, dt: f64) -> Result<(ComplexMatrix, f64)> {
    let coarse = propagator(model, t, dt)?;
    let fine = propagator(model, t, 0.5 * dt)?;
    let diff = (&coarse - &fine).frobenius_norm();
    Ok((fine, diff))
}
