//! Generalized Bloch vectors.
//!
//! A D×D density matrix is written ρ = (1/D)(I + c Σ_i R_i λ_i) with
//! c = √(D(D−1)/2) and Hermitian traceless generators normalized to
//! Tr[λ_i λ_j] = D δ_ij. These are the generalized Gell-Mann matrices
//! multiplied by √(D/2); for a qubit they are σ_x, σ_y, σ_z and c = 1.
//! The master equation becomes Ṙ = M R + b.

use std::collections::HashMap;
use std::sync::{Arc, OnceLock, RwLock};

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::linalg::{ComplexMatrix, Lu, RealMatrix, ZERO};
use crate::superop::{build_liouvillian, lindblad_rhs, DensityMatrix, ModelSpec};

/// Hermitian traceless generators with Tr[λ_i λ_j] = D δ_ij.
#[derive(Debug)]
pub struct GeneratorBasis {
    dim: usize,
    lambdas: Vec<ComplexMatrix>,
}

impl GeneratorBasis {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn lambdas(&self) -> &[ComplexMatrix] {
        &self.lambdas
    }

    pub fn len(&self) -> usize {
        self.lambdas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lambdas.is_empty()
    }

    /// The factor c = √(D(D−1)/2) multiplying R in the expansion of ρ.
    pub fn bloch_scale(&self) -> f64 {
        let d = self.dim as f64;
        (d * (d - 1.0) / 2.0).sqrt()
    }
}

fn build_basis(d: usize) -> GeneratorBasis {
    let s = (d as f64 / 2.0).sqrt();
    let unit = |i: usize, j: usize, z: C64| {
        let mut m = ComplexMatrix::zeros(d, d);
        m[(i, j)] = z;
        m
    };
    let mut lambdas = Vec::with_capacity(d * d - 1);
    for k in 1..d {
        for j in 0..k {
            let sym = &unit(j, k, C64::new(s, 0.0)) + &unit(k, j, C64::new(s, 0.0));
            let anti = &unit(j, k, C64::new(0.0, -s)) + &unit(k, j, C64::new(0.0, s));
            lambdas.push(sym);
            lambdas.push(anti);
        }
        let f = s * (2.0 / (k * (k + 1)) as f64).sqrt();
        let mut diag = ComplexMatrix::zeros(d, d);
        for j in 0..k {
            diag[(j, j)] = C64::new(f, 0.0);
        }
        diag[(k, k)] = C64::new(-(k as f64) * f, 0.0);
        lambdas.push(diag);
    }
    GeneratorBasis { dim: d, lambdas }
}

fn cache() -> &'static RwLock<HashMap<usize, Arc<GeneratorBasis>>> {
    static CACHE: OnceLock<RwLock<HashMap<usize, Arc<GeneratorBasis>>>> = OnceLock::new();
    CACHE.get_or_init(|| RwLock::new(HashMap::new()))
}

/// Generator basis for dimension D ≥ 2, built once per dimension.
///
/// Ordering: for k = 1..D−1, the pairs (j, k) with j < k contribute a
/// symmetric then an antisymmetric generator, followed by the k-th diagonal one.
pub fn generator_basis(d: usize) -> Result<Arc<GeneratorBasis>> {
    if d < 2 {
        return Err(Error::InvalidArgument(format!("generator basis needs D >= 2, got {d}")));
    }
    if let Some(b) = cache().read().unwrap_or_else(|e| e.into_inner()).get(&d) {
        return Ok(Arc::clone(b));
    }
    let mut w = cache().write().unwrap_or_else(|e| e.into_inner());
    Ok(Arc::clone(w.entry(d).or_insert_with(|| Arc::new(build_basis(d)))))
}

/// Real Bloch coordinates R.
#[derive(Clone, Debug, PartialEq)]
pub struct BlochState {
    pub r: Vec<f64>,
}

impl BlochState {
    pub fn new(r: Vec<f64>) -> Self {
        Self { r }
    }

    pub fn norm(&self) -> f64 {
        self.r.iter().map(|x| x * x).sum::<f64>().sqrt()
    }
}

/// Complex coordinates Tr(ρ λ_i)/c of any square matrix; real for Hermitian input.
pub fn bloch_components(rho: &ComplexMatrix) -> Result<Vec<C64>> {
    let d = rho.require_square()?;
    let basis = generator_basis(d)?;
    let c = basis.bloch_scale();
    Ok(basis
        .lambdas()
        .iter()
        .map(|l| trace_product(l, rho) / c)
        .collect())
}

/// Tr(A B) without forming the product.
fn trace_product(a: &ComplexMatrix, b: &ComplexMatrix) -> C64 {
    let n = a.rows();
    let mut s = ZERO;
    for i in 0..n {
        for k in 0..n {
            s += a[(i, k)] * b[(k, i)];
        }
    }
    s
}

pub fn to_bloch(rho: &DensityMatrix) -> BlochState {
    let comps = bloch_components(rho.matrix()).expect("density matrices are square with D >= 1");
    BlochState::new(comps.into_iter().map(|z| z.re).collect())
}

/// ρ = (1/D)(I + c R·λ). Positivity is not checked.
pub fn from_bloch(r: &BlochState, d: usize) -> Result<ComplexMatrix> {
    let basis = generator_basis(d)?;
    if r.r.len() != basis.len() {
        return Err(Error::DimensionMismatch {
            context: "Bloch vector length",
            expected: basis.len(),
            got: r.r.len(),
        });
    }
    let c = basis.bloch_scale();
    let mut rho = ComplexMatrix::identity(d);
    for (x, l) in r.r.iter().zip(basis.lambdas()) {
        if *x != 0.0 {
            rho += &l.scale_real(c * x);
        }
    }
    Ok(rho.scale_real(1.0 / d as f64))
}

/// Tr ρ² from the Bloch vector: (1 + c²|R|²)/D.
pub fn purity(r: &BlochState, d: usize) -> f64 {
    let c2 = (d * (d - 1)) as f64 / 2.0;
    let n2: f64 = r.r.iter().map(|x| x * x).sum();
    (1.0 + c2 * n2) / d as f64
}

/// The pair (M, b) of Ṙ = M R + b.
#[derive(Clone, Debug, PartialEq)]
pub struct BlochLiouvillian {
    pub m: RealMatrix,
    pub b: Vec<f64>,
}

impl BlochLiouvillian {
    pub fn rhs(&self, r: &[f64], out: &mut [f64]) {
        let n = self.b.len();
        for i in 0..n {
            let mut acc = self.b[i];
            for (j, x) in r.iter().enumerate() {
                acc += self.m[(i, j)] * x;
            }
            out[i] = acc;
        }
    }
}

/// Limit on the imaginary residue of projected coefficients.
const REALITY_TOL: f64 = 1e-12;

/// Projection of a superoperator (given as an operator-valued map) onto the
/// generator basis.
fn project_map(d: usize, map: impl Fn(&ComplexMatrix) -> ComplexMatrix) -> Result<BlochLiouvillian> {
    let basis = generator_basis(d)?;
    let n = basis.len();
    let c = basis.bloch_scale();
    let df = d as f64;
    let images: Vec<ComplexMatrix> = basis.lambdas().iter().map(&map).collect();
    let pump = map(&ComplexMatrix::identity(d));
    let mut m = RealMatrix::zeros(n, n);
    let mut b = vec![0.0; n];
    let mut worst: f64 = 0.0;
    let mut scale: f64 = 0.0;
    for (i, li) in basis.lambdas().iter().enumerate() {
        for (j, img) in images.iter().enumerate() {
            let z = trace_product(li, img) / df;
            worst = worst.max(z.im.abs());
            scale = scale.max(z.re.abs());
            m[(i, j)] = z.re;
        }
        let z = trace_product(li, &pump) / (c * df);
        worst = worst.max(z.im.abs());
        b[i] = z.re;
    }
    if worst > REALITY_TOL * scale.max(1.0) {
        return Err(Error::InvalidModel(format!(
            "Bloch generator has imaginary part {worst:e}; Hamiltonian or channels are not admissible"
        )));
    }
    Ok(BlochLiouvillian { m, b })
}

/// (M, b) at time t, obtained by projecting the master-equation right-hand side
/// on the generator basis: M_ij = Tr(λ_i 𝓛[λ_j])/D and b_i = Tr(λ_i 𝓛[I])/(cD).
pub fn build_bloch_liouvillian(model: &ModelSpec, t: f64) -> Result<BlochLiouvillian> {
    project_map(model.dim(), |x| lindblad_rhs(model, t, x))
}

/// Coherent and unit-rate per-channel (M, b) contributions, for fast
/// evaluation along a trajectory.
#[derive(Clone, Debug)]
pub struct BlochParts {
    coherent: BlochLiouvillian,
    channels: Vec<(BlochLiouvillian, crate::superop::RateLaw)>,
}

impl BlochParts {
    pub fn new(model: &ModelSpec) -> Result<Self> {
        let d = model.dim();
        let h = model.hamiltonian().clone();
        let coherent = project_map(d, |x| h.commutator(x).scale(C64::new(0.0, -1.0)))?;
        let mut channels = Vec::with_capacity(model.channels().len());
        for ch in model.channels() {
            let single = ModelSpec::new(
                ComplexMatrix::zeros(d, d),
                vec![crate::superop::Channel::new(ch.op.clone(), crate::superop::RateLaw::Constant { gamma0: 1.0 })],
            )?;
            channels.push((project_map(d, |x| lindblad_rhs(&single, 0.0, x))?, ch.rate));
        }
        Ok(Self { coherent, channels })
    }

    pub fn at(&self, t: f64) -> BlochLiouvillian {
        let mut out = self.coherent.clone();
        let n = out.b.len();
        for (part, rate) in &self.channels {
            let g = rate.eval(t);
            if g == 0.0 {
                continue;
            }
            for i in 0..n {
                for j in 0..n {
                    out.m[(i, j)] += g * part.m[(i, j)];
                }
                out.b[i] += g * part.b[i];
            }
        }
        out
    }
}

/// M̃ acting on (α, R): first row zero, first column b, lower-right block M.
pub fn extend(bl: &BlochLiouvillian) -> RealMatrix {
    let n = bl.b.len();
    RealMatrix::from_fn(n + 1, n + 1, |i, j| match (i, j) {
        (0, _) => 0.0,
        (i, 0) => bl.b[i - 1],
        (i, j) => bl.m[(i - 1, j - 1)],
    })
}

/// Qubit map V with vec(ρ) = V (α, x, y, z)ᵀ for ρ = ½(αI + xσ_x + yσ_y + zσ_z),
/// in column-stacking order (ρ₀₀, ρ₁₀, ρ₀₁, ρ₁₁). V⁻¹ = 2Vᴴ.
pub fn qubit_similarity() -> ComplexMatrix {
    let o = ZERO;
    let h = C64::new(0.5, 0.0);
    let ih = C64::new(0.0, 0.5);
    ComplexMatrix::from_rows(&[
        vec![h, o, o, h],
        vec![o, h, ih, o],
        vec![o, h, -ih, o],
        vec![h, o, o, -h],
    ])
    .expect("4x4 literal")
}

/// ‖V M̃ V⁻¹ − 𝓛(t)‖_F for a qubit model.
pub fn similarity_check(model: &ModelSpec, t: f64) -> Result<f64> {
    if model.dim() != 2 {
        return Err(Error::InvalidArgument(format!(
            "similarity check is defined for qubits only, got D = {}",
            model.dim()
        )));
    }
    let mt = extend(&build_bloch_liouvillian(model, t)?).to_complex();
    let v = qubit_similarity();
    let vinv = Lu::new(&v)?.inverse()?;
    let l = build_liouvillian(model, t);
    Ok((&v.matmul(&mt).matmul(&vinv) - &l).frobenius_norm())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::eigenvalues;
    use crate::operators::*;
    use crate::superop::{steady_state, Channel, RateLaw};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_density(rng: &mut ChaCha8Rng, d: usize) -> ComplexMatrix {
        let g = ComplexMatrix::from_fn(d, d, |_, _| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
        let p = g.matmul(&g.adjoint());
        p.scale(p.trace().inv())
    }

    fn m1_model(delta: f64, g: f64, gamma0: f64, omega: f64) -> ModelSpec {
        let h = (&sigma_z().scale_real(delta) + &sigma_x().scale_real(g)).scale_real(0.5);
        ModelSpec::new(h, vec![Channel::new(sigma_y().scale_real(0.5), RateLaw::Cosine { gamma0, omega })]).unwrap()
    }

    #[test]
    fn qubit_basis_is_pauli() {
        let b = generator_basis(2).unwrap();
        assert_eq!(b.lambdas(), &[sigma_x(), sigma_y(), sigma_z()]);
        assert_eq!(b.bloch_scale(), 1.0);
    }

    #[test]
    fn basis_orthogonality() {
        for d in [2, 3, 4, 5] {
            let b = generator_basis(d).unwrap();
            assert_eq!(b.len(), d * d - 1);
            for (i, li) in b.lambdas().iter().enumerate() {
                assert!(li.hermitian_defect() < 1e-15);
                assert!(li.trace().norm() < 1e-14);
                for (j, lj) in b.lambdas().iter().enumerate() {
                    let want = if i == j { d as f64 } else { 0.0 };
                    assert!((trace_product(li, lj) - want).norm() < 1e-13);
                }
            }
        }
        assert!(generator_basis(1).is_err());
    }

    #[test]
    fn conversions() {
        assert!(to_bloch(&DensityMatrix::maximally_mixed(3)).norm() < 1e-15);
        let ground = DensityMatrix::pure(&[C64::new(1.0, 0.0), ZERO]).unwrap();
        assert_eq!(to_bloch(&ground).r, vec![0.0, 0.0, 1.0]);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..20 {
            let psi = [C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)), C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))];
            let r = to_bloch(&DensityMatrix::pure(&psi).unwrap());
            assert!((r.norm() - 1.0).abs() < 1e-12);
        }
        for d in [2, 3, 4] {
            let rho = random_density(&mut rng, d);
            let dm = DensityMatrix::new(rho.clone()).unwrap();
            let r = to_bloch(&dm);
            assert!(from_bloch(&r, d).unwrap().max_abs_diff(&rho) < 1e-12);
            assert!((purity(&r, d) - dm.purity()).abs() < 1e-12);
        }
    }

    #[test]
    fn dephasing_model_matrix() {
        let (delta, g, gamma0, omega) = (0.05, 0.3, 10.0, 0.05);
        let m = m1_model(delta, g, gamma0, omega);
        for t in [0.0, 17.0, 60.0] {
            let gt = 2.0 * gamma0 * (0.5 * omega * t).cos().powi(2);
            let bl = build_bloch_liouvillian(&m, t).unwrap();
            let want = RealMatrix::from_rows(&[
                vec![-gt, -delta, 0.0],
                vec![delta, 0.0, -g],
                vec![0.0, g, -gt],
            ])
            .unwrap();
            assert!(bl.m.max_abs_diff(&want) < 1e-13);
            assert!(bl.b.iter().all(|x| x.abs() < 1e-15));
        }
    }

    #[test]
    fn amplitude_damping_pump_and_steady_state() {
        let gamma = 0.4;
        let model = ModelSpec::new(sigma_z().scale_real(0.3), vec![Channel::new(sigma_minus(), RateLaw::Constant { gamma0: gamma })]).unwrap();
        let bl = build_bloch_liouvillian(&model, 0.0).unwrap();
        // Closed form for γ(2σ₋ρσ₊ − {σ₊σ₋, ρ}) and H = hσ_z.
        let h = 0.3;
        let want_m = RealMatrix::from_rows(&[
            vec![-gamma, -2.0 * h, 0.0],
            vec![2.0 * h, -gamma, 0.0],
            vec![0.0, 0.0, -2.0 * gamma],
        ])
        .unwrap();
        assert!(bl.m.max_abs_diff(&want_m) < 1e-14);
        assert!((bl.b[2] - 2.0 * gamma).abs() < 1e-14);
        let mc = bl.m.to_complex();
        let rhs: Vec<C64> = bl.b.iter().map(|x| C64::new(-x, 0.0)).collect();
        let rss = crate::linalg::solve_linear(&mc, &rhs).unwrap();
        let ss = to_bloch(&steady_state(&model, 0.0).unwrap());
        for (a, b) in rss.iter().zip(&ss.r) {
            assert!((a.re - b).abs() < 1e-10);
        }
    }

    #[test]
    fn hermitian_channels_have_no_pump() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let g = ComplexMatrix::from_fn(3, 3, |_, _| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
        let l = &g + &g.adjoint();
        let model = ModelSpec::new(ComplexMatrix::zeros(3, 3), vec![Channel::new(l, RateLaw::Constant { gamma0: 1.0 })]).unwrap();
        let bl = build_bloch_liouvillian(&model, 0.0).unwrap();
        assert!(bl.b.iter().all(|x| x.abs() < 1e-13));
    }

    #[test]
    fn parts_match_direct_projection() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let g = ComplexMatrix::from_fn(3, 3, |_, _| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
        let h = (&g + &g.adjoint()).scale_real(0.5);
        let l = ComplexMatrix::from_fn(3, 3, |_, _| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
        let model = ModelSpec::new(h, vec![Channel::new(l, RateLaw::Cosine { gamma0: 0.5, omega: 1.3 })]).unwrap();
        let parts = BlochParts::new(&model).unwrap();
        for t in [0.0, 0.4, 2.0] {
            let a = parts.at(t);
            let b = build_bloch_liouvillian(&model, t).unwrap();
            assert!(a.m.max_abs_diff(&b.m) < 1e-13);
            assert!(a.b.iter().zip(&b.b).all(|(x, y)| (x - y).abs() < 1e-13));
        }
    }

    #[test]
    fn extended_spectrum_contains_zero() {
        let m = m1_model(0.05, 0.0, 10.0, 0.05);
        let bl = build_bloch_liouvillian(&m, 3.0).unwrap();
        let ext = extend(&bl);
        assert!((0..4).all(|j| ext[(0, j)] == 0.0));
        let mut ev = eigenvalues(&ext.to_complex()).unwrap();
        ev.sort_by(|a, b| a.re.total_cmp(&b.re));
        assert!(ev[3].norm() < 1e-13);
    }

    #[test]
    fn similarity_on_models() {
        let m = m1_model(0.05, 0.2, 10.0, 0.05);
        for t in [0.0, 30.0, 60.0] {
            assert!(similarity_check(&m, t).unwrap() < 1e-10);
        }
        let unitary = m1_model(0.05, 0.2, 0.0, 0.05);
        assert!(similarity_check(&unitary, 1.0).unwrap() < 1e-12);
        let v = qubit_similarity();
        // V⁻¹ = 2Vᴴ.
        assert!(v.adjoint().scale_real(2.0).matmul(&v).max_abs_diff(&ComplexMatrix::identity(4)) < 1e-15);
        let qutrit = ModelSpec::new(ComplexMatrix::zeros(3, 3), vec![]).unwrap();
        assert!(similarity_check(&qutrit, 0.0).is_err());
    }
}
