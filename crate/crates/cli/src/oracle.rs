//! Randomized cross-checks between independent routes through the library.
//!
//! Every check draws from a ChaCha stream seeded by the caller, so a report is
//! reproducible from (seed, samples).

use floqlind_core::bloch::{build_bloch_liouvillian, extend, similarity_check, BlochState};
use floqlind_core::dynamics::{evolve_bloch, evolve_superop};
use floqlind_core::linalg::eigenvalues;
use floqlind_core::qubit::{adiabatic_eigenvalues, bloch_matrix_complex, model_spec, DrivenQubitParams};
use floqlind_core::lie::{
    closure, five_generator_set, jacobi_residual, model_generators, relaxation_model, wei_norman_propagate, GeneratorMode,
    SuperOpElement,
};
use floqlind_core::linalg::matrix_exp;
use floqlind_core::superop::{
    build_liouvillian, check_trace_preserving, damping_basis, default_steady_tol, propagator_between, steady_state,
};
use floqlind_core::{bloch, Channel, ComplexMatrix, DensityMatrix, Error, ModelSpec, RateLaw, C64};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Clone, Debug, PartialEq)]
pub struct CheckResult {
    pub name: String,
    pub passed: bool,
    /// Largest observed defect.
    pub worst: f64,
    pub threshold: f64,
    pub samples: usize,
}

impl CheckResult {
    fn new(name: &str, worst: f64, threshold: f64, samples: usize) -> Self {
        Self {
            name: name.to_string(),
            passed: worst <= threshold,
            worst,
            threshold,
            samples,
        }
    }

    /// A check whose defect is "smaller is better" but must stay above a bound.
    fn at_least(name: &str, worst: f64, bound: f64, samples: usize) -> Self {
        Self {
            name: name.to_string(),
            passed: worst >= bound,
            worst,
            threshold: bound,
            samples,
        }
    }
}

#[derive(Clone, Debug, Default)]
pub struct OracleReport {
    pub checks: Vec<CheckResult>,
}

impl OracleReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn get(&self, name: &str) -> Option<&CheckResult> {
        self.checks.iter().find(|c| c.name == name)
    }
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn gaussian_c(rng: &mut ChaCha8Rng) -> C64 {
    // Box–Muller pair as one complex normal.
    let u: f64 = rng.gen_range(f64::EPSILON..1.0);
    let v: f64 = rng.gen();
    let r = (-2.0 * u.ln()).sqrt();
    let a = 2.0 * std::f64::consts::PI * v;
    C64::new(r * a.cos(), r * a.sin())
}

/// A qubit model with random Hermitian H and one to three random channels,
/// each with a constant or cosine-modulated rate.
pub fn random_qubit_model(rng: &mut ChaCha8Rng) -> ModelSpec {
    let a = ComplexMatrix::from_fn(2, 2, |_, _| gaussian_c(rng));
    let h = (&a + &a.adjoint()).scale_real(0.5);
    let n = rng.gen_range(1..=3);
    let channels = (0..n)
        .map(|_| {
            let op = ComplexMatrix::from_fn(2, 2, |_, _| gaussian_c(rng).scale(0.7));
            let gamma0 = rng.gen_range(0.05..1.0);
            let rate = if rng.gen_bool(0.5) {
                RateLaw::Constant { gamma0 }
            } else {
                RateLaw::Cosine {
                    gamma0,
                    omega: rng.gen_range(0.2..2.0),
                }
            };
            Channel::new(op, rate)
        })
        .collect();
    ModelSpec::new(h, channels).expect("random model is valid")
}

pub fn random_pure_state(rng: &mut ChaCha8Rng) -> DensityMatrix {
    let psi = [gaussian_c(rng), gaussian_c(rng)];
    DensityMatrix::pure(&psi).expect("nonzero vector")
}

pub fn random_params(rng: &mut ChaCha8Rng) -> DrivenQubitParams {
    DrivenQubitParams {
        delta: rng.gen_range(-1.0..1.0),
        g: rng.gen_range(-1.0..1.0),
        gamma0: rng.gen_range(0.0..5.0),
        omega: rng.gen_range(0.01..1.0),
    }
}

/// Distance between two spectra under greedy nearest matching.
pub fn spectrum_mismatch(a: &[C64], b: &[C64]) -> f64 {
    if a.len() != b.len() {
        return f64::INFINITY;
    }
    let mut used = vec![false; b.len()];
    let mut worst: f64 = 0.0;
    for x in a {
        let (k, d) = b
            .iter()
            .enumerate()
            .filter(|(k, _)| !used[*k])
            .map(|(k, y)| (k, (x - y).norm()))
            .min_by(|p, q| p.1.total_cmp(&q.1))
            .expect("equal lengths");
        used[k] = true;
        worst = worst.max(d);
    }
    worst
}

/// Closed-form adiabatic eigenvalues against the general eigensolver, and the
/// sum and product identities of the pair.
pub fn check_adiabatic_eigenvalues(rng: &mut ChaCha8Rng, samples: usize) -> floqlind_core::Result<Vec<CheckResult>> {
    let (mut eig, mut sum, mut prod) = (0.0f64, 0.0f64, 0.0f64);
    for _ in 0..samples {
        let p = random_params(rng);
        let t = rng.gen_range(0.0..2.0 * p.period());
        let tr = adiabatic_eigenvalues(&p, t);
        let gamma = floqlind_core::qubit::gamma_of_t(&p, t);
        let numeric = eigenvalues(&bloch_matrix_complex(&p, t))?;
        eig = eig.max(spectrum_mismatch(&[tr.nu0, tr.nu_plus, tr.nu_minus], &numeric));
        sum = sum.max((tr.nu_plus + tr.nu_minus + gamma).norm());
        prod = prod.max((tr.nu_plus * tr.nu_minus - (p.g * p.g + p.delta * p.delta)).norm());
    }
    Ok(vec![
        CheckResult::new("adiabatic_closed_form_vs_eig", eig, 1e-10, samples),
        CheckResult::new("adiabatic_pair_sum", sum, 1e-12, samples),
        CheckResult::new("adiabatic_pair_product", prod, 1e-12, samples),
    ])
}

/// Superoperator and Bloch routes: trajectories, spectra, similarity.
pub fn check_representations(rng: &mut ChaCha8Rng, samples: usize) -> floqlind_core::Result<Vec<CheckResult>> {
    let grid: Vec<f64> = (0..=12).map(|k| 0.25 * k as f64).collect();
    let (mut traj, mut spec, mut sim) = (0.0f64, 0.0f64, 0.0f64);
    for _ in 0..samples {
        let model = random_qubit_model(rng);
        let rho0 = random_pure_state(rng);
        let r0 = bloch::to_bloch(&rho0);
        let a = evolve_bloch(&model, &r0, &grid, 1e-11, 1e-13)?;
        let b = evolve_superop(&model, &rho0, &grid, 1e-11, 1e-13)?;
        for c in ["rx", "ry", "rz"] {
            let (x, y) = (a.get(c)?, b.get(c)?);
            traj = traj.max(x.iter().zip(y).map(|(p, q)| (p - q).abs()).fold(0.0, f64::max));
        }
        let t = rng.gen_range(0.0..3.0);
        let l = build_liouvillian(&model, t);
        let ext = extend(&build_bloch_liouvillian(&model, t)?).to_complex();
        spec = spec.max(spectrum_mismatch(
            &eigenvalues(&l)?,
            &eigenvalues(&ext)?,
        ));
        sim = sim.max(similarity_check(&model, t)?);
    }
    Ok(vec![
        CheckResult::new("trajectory_superop_vs_bloch", traj, 1e-8, samples),
        CheckResult::new("spectrum_extended_bloch_vs_liouvillian", spec, 1e-9, samples),
        CheckResult::new("similarity_mismatch", sim, 1e-10, samples),
    ])
}

/// Complete positivity and trace preservation along random trajectories,
/// damping-basis structure, and the preset steady states.
pub fn check_cptp(rng: &mut ChaCha8Rng, samples: usize) -> floqlind_core::Result<Vec<CheckResult>> {
    let grid: Vec<f64> = (0..=12).map(|k| 0.25 * k as f64).collect();
    let (mut trace, mut min_eig, mut conj, mut traceless, mut generator) = (0.0f64, f64::INFINITY, 0.0f64, 0.0f64, 0.0f64);
    for _ in 0..samples {
        let model = random_qubit_model(rng);
        let rho0 = random_pure_state(rng);
        let ts = evolve_superop(&model, &rho0, &grid, 1e-11, 1e-13)?;
        trace = trace.max(ts.get("trace")?.iter().map(|x| (x - 1.0).abs()).fold(0.0, f64::max));
        min_eig = min_eig.min(ts.get("min_eigenvalue")?.iter().copied().fold(f64::INFINITY, f64::min));
        let t = rng.gen_range(0.0..3.0);
        let l = build_liouvillian(&model, t);
        generator = generator.max(check_trace_preserving(&l) / l.frobenius_norm().max(1.0));
        let basis = damping_basis(&l, default_steady_tol(&l))?;
        conj = conj.max(basis.conjugate_defect / l.frobenius_norm().max(1.0));
        traceless = traceless.max(basis.trace_defect);
    }
    let mut steady: f64 = 0.0;
    let mut steady_samples = 0;
    for name in ["fig1", "fig3a", "fig3b"] {
        let p = crate::presets::preset(name).expect("known preset").params;
        for frac in [0.0, 0.2, 0.35] {
            let rho = steady_state(&model_spec(&p), frac * p.period())?;
            steady = steady.max(BlochState::norm(&bloch::to_bloch(&rho)));
            steady_samples += 1;
        }
    }
    Ok(vec![
        CheckResult::new("trace_preserved", trace, 1e-9, samples),
        CheckResult::at_least("min_eigenvalue", min_eig, -1e-7, samples),
        CheckResult::new("generator_trace_preserving", generator, 1e-12, samples),
        CheckResult::new("conjugate_pair_spectrum", conj, 1e-9, samples),
        CheckResult::new("damping_modes_traceless", traceless, 1e-8, samples),
        CheckResult::new("preset_steady_state_maximally_mixed", steady, 1e-9, steady_samples),
    ])
}

/// Closure dimensions of the reference generator sets, including random
/// reorderings of the five-generator set, and the Jacobi identity.
pub fn check_closures(rng: &mut ChaCha8Rng, samples: usize) -> floqlind_core::Result<Vec<CheckResult>> {
    let five = five_generator_set();
    let full = closure(&five, 16)?;
    let mut dim_defect = (full.dim as f64 - 15.0).abs();
    let pair = [SuperOpElement::pauli_string(3, 0), SuperOpElement::pauli_string(0, 3)];
    dim_defect = dim_defect.max((closure(&pair, 16)?.dim as f64 - 2.0).abs());
    let mut perm_defect: f64 = 0.0;
    for _ in 0..samples {
        let mut g = five.clone();
        g.shuffle(rng);
        perm_defect = perm_defect.max((closure(&g, 16)?.dim as f64 - full.dim as f64).abs());
    }
    Ok(vec![
        CheckResult::new("closure_reference_dimensions", dim_defect, 0.0, 2),
        CheckResult::new("closure_permutation_invariant", perm_defect, 0.0, samples),
        CheckResult::new("closure_jacobi", jacobi_residual(&full.structure_constants), 1e-9, 1),
    ])
}

/// Largest deviation of the product-ansatz propagator of the relaxation
/// model from exp(𝓛t) on t ∈ [0, 5/Ω].
pub fn wei_norman_vs_exp(omega: f64, rates: [f64; 3], points: usize, rtol: f64) -> floqlind_core::Result<f64> {
    let model = relaxation_model(omega, rates)?;
    let c = closure(&model_generators(&model, GeneratorMode::Physical, 1.0)?, 16)?;
    let grid: Vec<f64> = (0..=points).map(|k| 5.0 / omega * k as f64 / points as f64).collect();
    let wn = wei_norman_propagate(&model, &c, &grid, rtol)?;
    let l = build_liouvillian(&model, 0.0);
    let mut worst: f64 = 0.0;
    for (t, s) in grid.iter().zip(&wn.propagators) {
        worst = worst.max(s.max_abs_diff(&matrix_exp(&l.scale_real(*t))?));
    }
    Ok(worst)
}

/// Product-ansatz propagator of a driven model against the stepped one.
#[derive(Clone, Debug, PartialEq)]
pub struct WeiNormanCheck {
    pub closure_dim: usize,
    pub times: Vec<f64>,
    /// max |𝓢_WN − 𝓢_stepped| per checkpoint reached.
    pub errors: Vec<f64>,
    /// Time at which the ξ matrix became singular, if it did.
    pub breakdown: Option<f64>,
    pub breakdown_condition: Option<f64>,
}

impl WeiNormanCheck {
    pub fn max_error(&self) -> f64 {
        self.errors.iter().copied().fold(0.0, f64::max)
    }
}

/// Midpoint products with steps h and h/2, combined by Richardson
/// extrapolation, accumulated checkpoint to checkpoint.
pub fn stepped_reference(model: &ModelSpec, times: &[f64], h: f64) -> floqlind_core::Result<Vec<ComplexMatrix>> {
    let n2 = model.dim() * model.dim();
    let (mut coarse, mut fine) = (ComplexMatrix::identity(n2), ComplexMatrix::identity(n2));
    let mut out = Vec::with_capacity(times.len());
    let mut prev = times.first().copied().unwrap_or(0.0);
    for &t in times {
        if t > prev {
            coarse = propagator_between(model, prev, t, h)?.matmul(&coarse);
            fine = propagator_between(model, prev, t, 0.5 * h)?.matmul(&fine);
        }
        prev = t;
        out.push((&fine.scale_real(4.0) - &coarse).scale_real(1.0 / 3.0));
    }
    Ok(out)
}

/// Wei–Norman over one drive period of `p` (Pauli-string closure) against
/// [`stepped_reference`]. A singular ξ matrix ends the comparison and is
/// reported with its time instead of an error.
pub fn wei_norman_vs_stepped(p: &DrivenQubitParams, checkpoints: usize, rtol: f64) -> floqlind_core::Result<WeiNormanCheck> {
    let model = model_spec(p);
    let period = p.period();
    let c = closure(&model_generators(&model, GeneratorMode::PauliStrings, period)?, 16)?;
    let times: Vec<f64> = (0..=checkpoints).map(|k| period * k as f64 / checkpoints as f64).collect();
    // On breakdown, retry on the checkpoints before it until the prefix
    // integrates cleanly; the earliest reported time is kept.
    let mut grid = times;
    let mut breakdown: Option<(f64, f64)> = None;
    let reached = loop {
        match wei_norman_propagate(&model, &c, &grid, rtol) {
            Ok(wn) => break wn.propagators,
            Err(Error::XiSingular { t, cond }) => {
                if breakdown.map_or(true, |b| t < b.0) {
                    breakdown = Some((t, cond));
                }
                grid.retain(|&s| s < t);
                // Compare on points spread up to the breakdown as well.
                grid.extend((1..=16).map(|k| 0.95 * t * k as f64 / 16.0));
                grid.sort_by(|a, b| a.total_cmp(b));
                grid.dedup_by(|a, b| (*a - *b).abs() <= 1e-12 * period);
            }
            Err(e) => return Err(e),
        }
    };
    let h = period / 131_072.0;
    let reference = stepped_reference(&model, &grid, h)?;
    let errors = reached.iter().zip(&reference).map(|(a, b)| a.max_abs_diff(b)).collect();
    Ok(WeiNormanCheck {
        closure_dim: c.dim,
        times: grid,
        errors,
        breakdown: breakdown.map(|b| b.0),
        breakdown_condition: breakdown.map(|b| b.1),
    })
}

/// The full suite with `samples` random draws per family.
pub fn run_suite(seed: u64, samples: usize) -> floqlind_core::Result<OracleReport> {
    let mut r = rng(seed);
    let mut checks = check_adiabatic_eigenvalues(&mut r, 10 * samples)?;
    checks.extend(check_representations(&mut r, samples)?);
    checks.extend(check_cptp(&mut r, samples)?);
    checks.extend(check_closures(&mut r, samples.min(24))?);
    let wn = wei_norman_vs_exp(1.3, [0.2, 0.5, 0.3], 50, 1e-12)?;
    checks.push(CheckResult::new("wei_norman_vs_exp", wn, 1e-8, 51));
    Ok(OracleReport { checks })
}
