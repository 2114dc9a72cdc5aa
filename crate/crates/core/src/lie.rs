//! Commutator closures of qubit superoperators and Wei–Norman propagators.
//!
//! Superoperators of a qubit are 4×4 matrices, expanded in the Pauli strings
//! P_{4a+b} = σ_a ⊗ σ_b (a, b ∈ {I, x, y, z}), which are orthonormal under
//! ⟨A, B⟩ = Tr(A†B)/4.
//!
//! The Wei–Norman ansatz is 𝓢(t) = e^{c(t)} Π_j exp(−i F_j(t) X_j) over an
//! orthonormal closure basis X_j, where c(t) integrates the component of 𝓛
//! along the (central) identity. With G = coords(i𝓛) and ξ(F) whose column j
//! holds the coordinates of (Π_{k<j} Ad_{exp(−iF_k X_k)}) X_j, the
//! coefficients obey ξ(F) Ḟ = G.

use num_complex::Complex64 as C64;

use crate::bloch::build_bloch_liouvillian;
use crate::error::{Error, Result};
use crate::linalg::{
    condition_number_1, eig_general, gram_condition, matrix_exp, ode_integrate, solve_linear, ComplexMatrix, OdeOptions,
};
use crate::operators::{pauli, sigma_minus, sigma_plus, sigma_z};
use crate::superop::{Channel, LiouvillianParts, ModelSpec, RateLaw};

const ZERO: C64 = C64 { re: 0.0, im: 0.0 };
const ONE: C64 = C64 { re: 1.0, im: 0.0 };

/// Orthogonality threshold for rank decisions.
pub const RANK_TOL: f64 = 1e-10;

const PAULI_NAMES: [&str; 4] = ["I", "x", "y", "z"];

fn pauli_string_matrix(k: usize) -> ComplexMatrix {
    pauli(k / 4).kron(&pauli(k % 4))
}

/// Cached Pauli-string matrices.
fn pauli_strings() -> &'static [ComplexMatrix; 16] {
    static CELL: std::sync::OnceLock<[ComplexMatrix; 16]> = std::sync::OnceLock::new();
    CELL.get_or_init(|| std::array::from_fn(pauli_string_matrix))
}

/// A 4×4 superoperator in Pauli-string coordinates.
#[derive(Clone, Debug, PartialEq)]
pub struct SuperOpElement {
    pub coeffs: [C64; 16],
    pub label: Option<String>,
}

impl SuperOpElement {
    pub fn zero() -> Self {
        Self {
            coeffs: [ZERO; 16],
            label: None,
        }
    }

    /// σ_a ⊗ σ_b with a, b ∈ 0..4 for (I, x, y, z).
    pub fn pauli_string(a: usize, b: usize) -> Self {
        assert!(a < 4 && b < 4, "Pauli index out of range");
        let mut coeffs = [ZERO; 16];
        coeffs[4 * a + b] = ONE;
        Self {
            coeffs,
            label: Some(format!("{}{}", PAULI_NAMES[a], PAULI_NAMES[b])),
        }
    }

    pub fn identity() -> Self {
        Self::pauli_string(0, 0)
    }

    pub fn with_label(mut self, label: &str) -> Self {
        self.label = Some(label.to_string());
        self
    }

    pub fn to_matrix(&self) -> ComplexMatrix {
        let mut m = ComplexMatrix::zeros(4, 4);
        for (c, p) in self.coeffs.iter().zip(pauli_strings()) {
            if *c != ZERO {
                for (a, b) in m.as_mut_slice().iter_mut().zip(p.as_slice()) {
                    *a += c * b;
                }
            }
        }
        m
    }

    pub fn inner(&self, other: &Self) -> C64 {
        self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a.conj() * b).sum()
    }

    pub fn norm(&self) -> f64 {
        self.coeffs.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn scale(&self, s: C64) -> Self {
        Self {
            coeffs: self.coeffs.map(|z| z * s),
            label: None,
        }
    }

    pub fn axpy(&mut self, s: C64, x: &Self) {
        for (a, b) in self.coeffs.iter_mut().zip(&x.coeffs) {
            *a += s * b;
        }
    }

    pub fn commutator(&self, other: &Self) -> Self {
        decompose_unchecked(&self.to_matrix().commutator(&other.to_matrix()))
    }

    /// Names of the Pauli strings with |coefficient| > tol.
    pub fn support(&self, tol: f64) -> Vec<usize> {
        (0..16).filter(|&k| self.coeffs[k].norm() > tol).collect()
    }
}

fn decompose_unchecked(a: &ComplexMatrix) -> SuperOpElement {
    let mut coeffs = [ZERO; 16];
    for (c, p) in coeffs.iter_mut().zip(pauli_strings()) {
        // Pauli strings are Hermitian, so Tr(P†A) = Σ conj(P_ij) A_ij.
        *c = p.as_slice().iter().zip(a.as_slice()).map(|(x, y)| x.conj() * y).sum::<C64>() / 4.0;
    }
    SuperOpElement { coeffs, label: None }
}

/// Pauli-string coordinates of a 4×4 matrix.
pub fn decompose(a: &ComplexMatrix) -> Result<SuperOpElement> {
    if a.rows() != 4 || a.cols() != 4 {
        return Err(Error::DimensionMismatch {
            context: "qubit superoperator must be 4x4",
            expected: 4,
            got: if a.rows() != 4 { a.rows() } else { a.cols() },
        });
    }
    a.check_finite("superoperator")?;
    Ok(decompose_unchecked(a))
}

/// Orthonormal basis of a commutator-closed span.
#[derive(Clone, Debug)]
pub struct LieClosure {
    pub basis: Vec<SuperOpElement>,
    pub dim: usize,
    /// c[i][j][k] with [X_i, X_j] = Σ_k c[i][j][k] X_k.
    pub structure_constants: Vec<Vec<Vec<C64>>>,
    /// Number of commutator passes that added new directions.
    pub generations: usize,
    /// How many leading basis elements came from the generators.
    pub generator_count: usize,
}

/// Remove the projection onto `basis` twice (classical Gram–Schmidt with
/// re-orthogonalization), returning the remainder.
fn orthogonal_remainder(basis: &[SuperOpElement], x: &SuperOpElement) -> SuperOpElement {
    let mut r = SuperOpElement {
        coeffs: x.coeffs,
        label: None,
    };
    for _ in 0..2 {
        for b in basis {
            let c = b.inner(&r);
            r.axpy(-c, b);
        }
    }
    r
}

/// Normalize and fix the phase so the largest coefficient is real positive.
fn normalize_phase(mut r: SuperOpElement) -> SuperOpElement {
    let n = r.norm();
    let big = r
        .coeffs
        .iter()
        .copied()
        .max_by(|a, b| a.norm().total_cmp(&b.norm()))
        .unwrap_or(ONE);
    let f = big.conj() / (big.norm() * n);
    for z in r.coeffs.iter_mut() {
        *z *= f;
        // Exact zeros keep Pauli strings exact.
        if z.norm() < 1e-15 {
            *z = ZERO;
        }
    }
    r
}

/// Iterated commutator closure. Directions whose orthogonal remainder has norm
/// above 1e−10 (relative to the commutator) are appended in discovery order.
pub fn closure(generators: &[SuperOpElement], max_dim: usize) -> Result<LieClosure> {
    if generators.is_empty() {
        return Err(Error::InvalidArgument("closure needs at least one generator".into()));
    }
    let mut basis: Vec<SuperOpElement> = Vec::new();
    for (k, g) in generators.iter().enumerate() {
        let n = g.norm();
        if !(n > 0.0) || !n.is_finite() {
            return Err(Error::InvalidArgument(format!("generator {k} is zero or non-finite")));
        }
        let r = orthogonal_remainder(&basis, g);
        if r.norm() <= RANK_TOL * n {
            return Err(Error::InvalidArgument(format!(
                "generator {k} is linearly dependent on the previous ones"
            )));
        }
        if basis.len() + 1 > max_dim {
            return Err(Error::ClosureOverflow { max_dim });
        }
        let mut e = normalize_phase(r);
        e.label = g.label.clone();
        basis.push(e);
    }
    let generator_count = basis.len();
    let mut generations = 0;
    // Pairs (i, j) with j ≥ first_new are the ones not yet commuted.
    let mut first_new = 0;
    loop {
        let end = basis.len();
        let mut added = false;
        for j in first_new..end {
            for i in 0..j {
                let c = basis[i].commutator(&basis[j]);
                let cn = c.norm();
                if cn <= RANK_TOL {
                    continue;
                }
                let r = orthogonal_remainder(&basis, &c);
                if r.norm() > RANK_TOL * cn.max(1.0) {
                    if basis.len() + 1 > max_dim {
                        return Err(Error::ClosureOverflow { max_dim });
                    }
                    basis.push(normalize_phase(r));
                    added = true;
                }
            }
        }
        if !added {
            break;
        }
        generations += 1;
        first_new = end;
    }
    let dim = basis.len();
    let structure_constants = compute_structure_constants(&basis);
    Ok(LieClosure {
        basis,
        dim,
        structure_constants,
        generations,
        generator_count,
    })
}

fn compute_structure_constants(basis: &[SuperOpElement]) -> Vec<Vec<Vec<C64>>> {
    let n = basis.len();
    let mut c = vec![vec![vec![ZERO; n]; n]; n];
    for i in 0..n {
        for j in 0..n {
            if i == j {
                continue;
            }
            let comm = basis[i].commutator(&basis[j]);
            for k in 0..n {
                c[i][j][k] = basis[k].inner(&comm);
            }
        }
    }
    c
}

impl LieClosure {
    /// Coordinates of a 4×4 matrix in the basis and the norm of what lies outside.
    pub fn coordinates(&self, a: &ComplexMatrix) -> Result<(Vec<C64>, f64)> {
        let e = decompose(a)?;
        Ok(self.coordinates_of(&e))
    }

    pub fn coordinates_of(&self, e: &SuperOpElement) -> (Vec<C64>, f64) {
        let coords: Vec<C64> = self.basis.iter().map(|b| b.inner(e)).collect();
        let mut r = e.clone();
        for (c, b) in coords.iter().zip(&self.basis) {
            r.axpy(-c, b);
        }
        (coords, r.norm())
    }

    /// Largest norm of a basis commutator outside the span.
    pub fn closure_residual(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..self.dim {
            for j in i + 1..self.dim {
                let c = self.basis[i].commutator(&self.basis[j]);
                worst = worst.max(self.coordinates_of(&c).1);
            }
        }
        worst
    }

    pub fn is_abelian(&self) -> bool {
        self.structure_constants
            .iter()
            .flatten()
            .flatten()
            .all(|z| z.norm() <= RANK_TOL)
    }
}

/// The structure-constant tensor of a closure.
pub fn structure_constants(c: &LieClosure) -> &Vec<Vec<Vec<C64>>> {
    &c.structure_constants
}

/// max |c_ijk + c_jik|.
pub fn antisymmetry_residual(c: &[Vec<Vec<C64>>]) -> f64 {
    let n = c.len();
    let mut worst: f64 = 0.0;
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                worst = worst.max((c[i][j][k] + c[j][i][k]).norm());
            }
        }
    }
    worst
}

/// max over i, j, k, m of |Σ_l (c_ij^l c_lk^m + c_jk^l c_li^m + c_ki^l c_lj^m)|.
pub fn jacobi_residual(c: &[Vec<Vec<C64>>]) -> f64 {
    let n = c.len();
    let mut worst: f64 = 0.0;
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                for m in 0..n {
                    let mut s = ZERO;
                    for l in 0..n {
                        s += c[i][j][l] * c[l][k][m] + c[j][k][l] * c[l][i][m] + c[k][i][l] * c[l][j][m];
                    }
                    worst = worst.max(s.norm());
                }
            }
        }
    }
    worst
}

/// Factors exp(−iF_j X_j) and their inverses.
fn factors(f: &[C64], closure: &LieClosure) -> Result<(Vec<ComplexMatrix>, Vec<ComplexMatrix>)> {
    let mut e = Vec::with_capacity(f.len());
    let mut einv = Vec::with_capacity(f.len());
    for (fj, x) in f.iter().zip(&closure.basis) {
        let xm = x.to_matrix();
        e.push(matrix_exp(&xm.scale(C64::new(0.0, -1.0) * fj))?);
        einv.push(matrix_exp(&xm.scale(C64::new(0.0, 1.0) * fj))?);
    }
    Ok((e, einv))
}

/// Ad_{P_j} X_j for every j, with P_j = E_1⋯E_{j−1}.
fn adjoint_columns(f: &[C64], closure: &LieClosure) -> Result<Vec<ComplexMatrix>> {
    let (e, einv) = factors(f, closure)?;
    let mut p = ComplexMatrix::identity(4);
    let mut pinv = ComplexMatrix::identity(4);
    let mut out = Vec::with_capacity(f.len());
    for j in 0..f.len() {
        let x = closure.basis[j].to_matrix();
        out.push(p.matmul(&x).matmul(&pinv));
        p = p.matmul(&e[j]);
        pinv = einv[j].matmul(&pinv);
    }
    Ok(out)
}

fn coords_matrix(cols: &[ComplexMatrix], closure: &LieClosure) -> ComplexMatrix {
    let n = closure.dim;
    let mut xi = ComplexMatrix::zeros(n, n);
    for (j, a) in cols.iter().enumerate() {
        let e = decompose_unchecked(a);
        for (i, b) in closure.basis.iter().enumerate() {
            xi[(i, j)] = b.inner(&e);
        }
    }
    xi
}

/// ξ(F): column j holds the coordinates of (Π_{k<j} Ad_{exp(−iF_k X_k)}) X_j.
pub fn wei_norman_xi(f: &[C64], closure: &LieClosure) -> Result<ComplexMatrix> {
    if f.len() != closure.dim {
        return Err(Error::DimensionMismatch {
            context: "Wei-Norman coefficient vector",
            expected: closure.dim,
            got: f.len(),
        });
    }
    Ok(coords_matrix(&adjoint_columns(f, closure)?, closure))
}

/// Directional derivative of ξ along `dir`, from
/// d(Ad_{P_j}X_j) = [Σ_{k<j} −i d_k Ad_{P_k}X_k, Ad_{P_j}X_j].
pub fn wei_norman_xi_derivative(f: &[C64], dir: &[C64], closure: &LieClosure) -> Result<ComplexMatrix> {
    if f.len() != closure.dim || dir.len() != closure.dim {
        return Err(Error::DimensionMismatch {
            context: "Wei-Norman coefficient vector",
            expected: closure.dim,
            got: f.len().min(dir.len()),
        });
    }
    let ad = adjoint_columns(f, closure)?;
    let mut acc = ComplexMatrix::zeros(4, 4);
    let mut cols = Vec::with_capacity(ad.len());
    for (j, a) in ad.iter().enumerate() {
        cols.push(acc.commutator(a));
        acc += &a.scale(C64::new(0.0, -1.0) * dir[j]);
    }
    Ok(coords_matrix(&cols, closure))
}

/// e^{c} Π_j exp(−iF_j X_j).
pub fn wei_norman_product(f: &[C64], scalar: C64, closure: &LieClosure) -> Result<ComplexMatrix> {
    let (e, _) = factors(f, closure)?;
    let mut s = ComplexMatrix::identity(4).scale(scalar.exp());
    for ej in &e {
        s = s.matmul(ej);
    }
    Ok(s)
}

/// Splits 𝓛 into closure coordinates plus a multiple of the identity.
struct Splitter<'a> {
    closure: &'a LieClosure,
    /// Identity made orthogonal to the span, normalized, with its span part.
    identity_dir: Option<(SuperOpElement, f64, Vec<C64>)>,
}

impl<'a> Splitter<'a> {
    fn new(closure: &'a LieClosure) -> Self {
        let id = SuperOpElement::identity();
        let (b, _) = closure.coordinates_of(&id);
        let r = orthogonal_remainder(&closure.basis, &id);
        let n = r.norm();
        let identity_dir = if n > RANK_TOL {
            Some((r.scale(C64::new(1.0 / n, 0.0)), n, b))
        } else {
            None
        };
        Self { closure, identity_dir }
    }

    /// (coordinates of 𝓛 without its identity part, identity coefficient, residual).
    fn split(&self, l: &ComplexMatrix) -> Result<(Vec<C64>, C64, f64)> {
        let e = decompose(l)?;
        let (mut coords, _) = self.closure.coordinates_of(&e);
        let mut scalar = ZERO;
        let mut rest = e.clone();
        for (c, b) in coords.iter().zip(&self.closure.basis) {
            rest.axpy(-c, b);
        }
        if let Some((u, n, b)) = &self.identity_dir {
            let cu = u.inner(&rest);
            rest.axpy(-cu, u);
            // cu·u = (cu/n)·I − (cu/n) Σ b_k X_k.
            scalar = cu / *n;
            for (c, bk) in coords.iter_mut().zip(b) {
                *c -= scalar * bk;
            }
        }
        Ok((coords, scalar, rest.norm()))
    }
}

/// Coefficient trajectory and reconstructed propagators.
#[derive(Clone, Debug)]
pub struct WeiNormanResult {
    pub times: Vec<f64>,
    /// F(t) per grid time.
    pub coefficients: Vec<Vec<C64>>,
    /// ∫₀ᵗ (identity component of 𝓛) dt′.
    pub scalar: Vec<C64>,
    /// e^{c(t)} Π exp(−iF_j(t) X_j).
    pub propagators: Vec<ComplexMatrix>,
    /// 1-norm condition number of ξ at each grid time.
    pub xi_condition: Vec<f64>,
}

/// Condition number of ξ above which the ansatz is declared broken.
pub const XI_COND_LIMIT: f64 = 1e10;

const MAX_REFUSALS: usize = 50;

/// Integrate ξ(F)Ḟ = coords(i𝓛(t)) from F(0) = 0 on `t_grid` (starting at 0)
/// and rebuild 𝓢(t). Fails with `OutsideAlgebra` when 𝓛(t) has a component
/// outside span(closure) ⊕ identity above 1e−10, and with `XiSingular` when
/// cond(ξ) exceeds 1e10 or ξ cannot be solved along the way.
pub fn wei_norman_propagate(model: &ModelSpec, closure: &LieClosure, t_grid: &[f64], rtol: f64) -> Result<WeiNormanResult> {
    if model.dim() != 2 {
        return Err(Error::InvalidArgument("Wei-Norman propagation is implemented for qubits".into()));
    }
    if t_grid.is_empty() || t_grid[0] != 0.0 || t_grid.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::InvalidArgument("grid must start at 0 and be strictly ascending".into()));
    }
    let parts = LiouvillianParts::new(model);
    let splitter = Splitter::new(closure);
    let n = closure.dim;
    let lscale = parts.at(0.0).frobenius_norm().max(1.0);
    // Probe the span condition on the grid before integrating.
    for &t in t_grid {
        let (_, _, res) = splitter.split(&parts.at(t))?;
        if res > RANK_TOL * lscale {
            return Err(Error::OutsideAlgebra { residual: res });
        }
    }

    let failure = std::cell::Cell::new(None::<(f64, f64)>);
    let refusals = std::cell::Cell::new(0usize);
    let rhs = |t: f64, y: &[C64], dy: &mut [C64]| {
        let fail = |dy: &mut [C64]| dy.iter_mut().for_each(|z| *z = C64::new(f64::NAN, f64::NAN));
        let f = &y[..n];
        let (coords, scalar, _) = match splitter.split(&parts.at(t)) {
            Ok(v) => v,
            Err(_) => return fail(dy),
        };
        let g: Vec<C64> = coords.iter().map(|c| C64::new(0.0, 1.0) * c).collect();
        let xi = match wei_norman_xi(f, closure) {
            Ok(x) => x,
            Err(_) => return fail(dy),
        };
        // Past the hard cap the coordinates are running into a pole. Refuse
        // such states; once that has happened often enough to rule out a
        // stray trial step, refuse everything so the step size underflows.
        if refusals.get() >= MAX_REFUSALS {
            return fail(dy);
        }
        let cond = condition_number_1(&xi);
        if !(cond <= XI_COND_LIMIT) {
            failure.set(Some((t, cond)));
            refusals.set(refusals.get() + 1);
            return fail(dy);
        }
        match solve_linear(&xi, &g) {
            Ok(fd) => {
                dy[..n].copy_from_slice(&fd);
                dy[n] = scalar;
            }
            Err(_) => {
                failure.set(Some((t, cond)));
                fail(dy)
            }
        }
    };
    let y0 = vec![ZERO; n + 1];
    let t_end = *t_grid.last().unwrap_or(&0.0);
    let states = if t_end == 0.0 {
        vec![y0]
    } else {
        let opts = OdeOptions::new(rtol, rtol * 1e-3);
        match ode_integrate(rhs, &y0, (0.0, t_end), t_grid, &opts) {
            Ok(tr) => tr.states,
            Err(e) => {
                let cond = failure.get().map_or(f64::INFINITY, |f| f.1);
                return Err(match e {
                    Error::StepUnderflow { t, .. } | Error::StepBudget { t, .. } => Error::XiSingular { t, cond },
                    Error::NonFinite { .. } => Error::XiSingular {
                        t: failure.get().map_or(0.0, |f| f.0),
                        cond,
                    },
                    other => other,
                });
            }
        }
    };
    let mut out = WeiNormanResult {
        times: t_grid.to_vec(),
        coefficients: Vec::with_capacity(states.len()),
        scalar: Vec::with_capacity(states.len()),
        propagators: Vec::with_capacity(states.len()),
        xi_condition: Vec::with_capacity(states.len()),
    };
    for (t, y) in t_grid.iter().zip(&states) {
        let f = y[..n].to_vec();
        let cond = condition_number_1(&wei_norman_xi(&f, closure)?);
        if !(cond <= XI_COND_LIMIT) {
            return Err(Error::XiSingular { t: *t, cond });
        }
        out.propagators.push(wei_norman_product(&f, y[n], closure)?);
        out.coefficients.push(f);
        out.scalar.push(y[n]);
        out.xi_condition.push(cond);
    }
    Ok(out)
}

/// Which operators seed the closure of a model.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GeneratorMode {
    /// Every traceless Pauli string present in 𝓛(t) at some sampled time.
    PauliStrings,
    /// The coherent superoperator and one unit-rate dissipator per channel.
    Physical,
}

/// Seed generators of a qubit model.
pub fn model_generators(model: &ModelSpec, mode: GeneratorMode, period: f64) -> Result<Vec<SuperOpElement>> {
    if model.dim() != 2 {
        return Err(Error::InvalidArgument("generator sets are defined for qubits".into()));
    }
    let parts = LiouvillianParts::new(model);
    match mode {
        GeneratorMode::PauliStrings => {
            let mut seen = [false; 16];
            for k in 0..7 {
                let t = period * k as f64 / 7.0;
                let e = decompose(&parts.at(t))?;
                for s in e.support(1e-14 * e.norm().max(1.0)) {
                    seen[s] = true;
                }
            }
            Ok((1..16)
                .filter(|&k| seen[k])
                .map(|k| SuperOpElement::pauli_string(k / 4, k % 4))
                .collect())
        }
        GeneratorMode::Physical => {
            let mut gens = Vec::new();
            let h = decompose(&parts.coherent)?;
            if h.norm() > 0.0 {
                gens.push(h.with_label("H"));
            }
            for (k, (d, _)) in parts.dissipators.iter().enumerate() {
                let e = decompose(d)?;
                if e.norm() > 0.0 {
                    gens.push(e.with_label(&format!("D{k}")));
                }
            }
            Ok(gens)
        }
    }
}

/// σz⊗𝟙, 𝟙⊗σz, σy⊗σy, σy⊗𝟙, 𝟙⊗σy: the seed set that generates all of su(4).
pub fn five_generator_set() -> Vec<SuperOpElement> {
    [(3, 0), (0, 3), (2, 2), (2, 0), (0, 2)]
        .iter()
        .map(|&(a, b)| SuperOpElement::pauli_string(a, b))
        .collect()
}

/// H = −Ωσz/2 with constant-rate jumps σ₊, σ₋, σz. Its coherent part and
/// dissipators close on a four-dimensional algebra (three elements plus the
/// identity direction).
pub fn relaxation_model(omega: f64, rates: [f64; 3]) -> Result<ModelSpec> {
    ModelSpec::new(
        sigma_z().scale_real(-0.5 * omega),
        vec![
            Channel::new(sigma_plus(), RateLaw::Constant { gamma0: rates[0] }),
            Channel::new(sigma_minus(), RateLaw::Constant { gamma0: rates[1] }),
            Channel::new(sigma_z(), RateLaw::Constant { gamma0: rates[2] }),
        ],
    )
}

/// One model in an EP/closure survey.
#[derive(Clone, Debug)]
pub struct ProbePoint {
    pub label: String,
    pub model: ModelSpec,
    /// Scan window [0, period).
    pub period: f64,
}

/// Survey result for one model.
#[derive(Clone, Debug, PartialEq)]
pub struct ProbeResult {
    pub label: String,
    pub has_ep: bool,
    /// Smallest eigenvalue gap of M(t) found.
    pub min_gap: f64,
    pub t_min_gap: f64,
    /// Gram condition of the eigenvectors at that time.
    pub gram_condition: f64,
    pub closure_dim: usize,
}

fn bloch_gap(model: &ModelSpec, t: f64) -> Result<(f64, f64)> {
    let m = build_bloch_liouvillian(model, t)?.m.to_complex();
    let eig = eig_general(&m, false, 1e-8)?;
    let v = &eig.values;
    let mut gap = f64::INFINITY;
    for i in 0..v.len() {
        for j in i + 1..v.len() {
            gap = gap.min((v[i] - v[j]).norm());
        }
    }
    Ok((gap, gram_condition(&eig.right_vectors)))
}

/// Gap threshold and eigenvector condition threshold for an EP flag.
pub const EP_GAP: f64 = 1e-6;
pub const EP_GRAM: f64 = 1e6;

/// For each model, scan one period for the smallest eigenvalue gap of the
/// Bloch matrix (grid of `samples` points, each local minimum refined by
/// golden-section search) and flag an EP when the gap falls below 1e−6 with
/// eigenvector Gram condition above 1e6. Each point is paired with the
/// closure dimension of its generator set.
pub fn ep_existence_probe(points: &[ProbePoint], mode: GeneratorMode, samples: usize) -> Result<Vec<ProbeResult>> {
    let samples = samples.max(8);
    let mut out = Vec::with_capacity(points.len());
    for pt in points {
        let gens = model_generators(&pt.model, mode, pt.period)?;
        let closure_dim = if gens.is_empty() {
            0
        } else {
            closure(&gens, 16)?.dim
        };
        let h = pt.period / samples as f64;
        let ts: Vec<f64> = (0..=samples).map(|k| k as f64 * h).collect();
        let scan: Vec<(f64, f64)> = ts.iter().map(|&t| bloch_gap(&pt.model, t)).collect::<Result<_>>()?;
        let gaps: Vec<f64> = scan.iter().map(|g| g.0).collect();
        let grams: Vec<f64> = scan.iter().map(|g| g.1).collect();
        // Best overall minimum, and best minimum that also meets the EP test.
        let mut best = (f64::INFINITY, 0.0, 0.0);
        let mut best_ep: Option<(f64, f64, f64)> = None;
        for k in 0..=samples {
            let left = if k == 0 { f64::INFINITY } else { gaps[k - 1] };
            let right = if k == samples { f64::INFINITY } else { gaps[k + 1] };
            // A diagonalizable crossing can sit next to an EP and mask its gap
            // minimum on the grid, so peaks of the Gram condition are refined too.
            let gram_peak = (k == 0 || grams[k] >= grams[k - 1]) && (k == samples || grams[k] >= grams[k + 1]);
            if (gaps[k] <= left && gaps[k] <= right) || gram_peak {
                let a = ts[k.saturating_sub(1)];
                let b = ts[(k + 1).min(samples)];
                let t_gap = golden_min(|t| bloch_gap(&pt.model, t).map(|g| g.0).unwrap_or(f64::INFINITY), a, b);
                let t_gram = golden_min(|t| bloch_gap(&pt.model, t).map(|g| -g.1).unwrap_or(f64::INFINITY), a, b);
                let mut cand = (gaps[k], ts[k], grams[k]);
                for t in [t_gap, t_gram] {
                    let (g, gram) = bloch_gap(&pt.model, t)?;
                    if g < cand.0 {
                        cand = (g, t, gram);
                    }
                }
                if cand.0 < best.0 {
                    best = cand;
                }
                if cand.0 <= EP_GAP && cand.2 > EP_GRAM && best_ep.map_or(true, |b| cand.0 < b.0) {
                    best_ep = Some(cand);
                }
            }
        }
        let has_ep = best_ep.is_some();
        let best = best_ep.unwrap_or(best);
        out.push(ProbeResult {
            label: pt.label.clone(),
            has_ep,
            min_gap: best.0,
            t_min_gap: best.1,
            gram_condition: best.2,
            closure_dim,
        });
    }
    Ok(out)
}

fn golden_min(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> f64 {
    let r = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..200 {
        if (b - a).abs() <= 4.0 * f64::EPSILON * (a.abs() + b.abs()).max(1e-300) {
            break;
        }
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - r * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + r * (b - a);
            fd = f(d);
        }
    }
    if fc <= fd {
        c
    } else {
        d
    }
}
