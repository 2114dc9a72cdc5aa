//! Property tests for the structural invariants of each representation.

use proptest::prelude::*;

use floqlind_core::bloch::{build_bloch_liouvillian, extend, from_bloch, to_bloch};
use floqlind_core::dynamics::evolve_superop;
use floqlind_core::floquet::{build_floquet, floquet_spectrum, ipr};
use floqlind_core::lie::{antisymmetry_residual, closure, jacobi_residual};
use floqlind_core::linalg::eigenvalues;
use floqlind_core::qubit::{adiabatic_eigenvalues, gamma_of_t, locate_eps};
use floqlind_core::superop::{build_liouvillian, check_trace_preserving, lindblad_rhs};
use floqlind_core::{Channel, ComplexMatrix, DensityMatrix, DrivenQubitParams, ModelSpec, RateLaw, SuperOpElement, C64};

fn c64() -> impl Strategy<Value = C64> {
    (-1.0..1.0f64, -1.0..1.0f64).prop_map(|(re, im)| C64::new(re, im))
}

fn matrix2() -> impl Strategy<Value = ComplexMatrix> {
    prop::collection::vec(c64(), 4).prop_map(|v| ComplexMatrix::from_column_major(2, 2, v).unwrap())
}

fn rate() -> impl Strategy<Value = RateLaw> {
    (0.0..1.5f64, prop::option::of(0.1..3.0f64)).prop_map(|(gamma0, omega)| match omega {
        Some(omega) => RateLaw::Cosine { gamma0, omega },
        None => RateLaw::Constant { gamma0 },
    })
}

prop_compose! {
    fn qubit_model()(a in matrix2(), chans in prop::collection::vec((matrix2(), rate()), 1..4)) -> ModelSpec {
        let h = (&a + &a.adjoint()).scale_real(0.5);
        ModelSpec::new(h, chans.into_iter().map(|(op, r)| Channel::new(op, r)).collect()).unwrap()
    }
}

prop_compose! {
    fn pure_state()(v in prop::collection::vec(c64(), 2)) -> DensityMatrix {
        let v = if v.iter().all(|z| z.norm() < 1e-3) { vec![C64::new(1.0, 0.0), C64::new(0.0, 0.0)] } else { v };
        DensityMatrix::pure(&v).unwrap()
    }
}

prop_compose! {
    fn driven()(delta in -1.0..1.0f64, g in -1.0..1.0f64, gamma0 in 0.0..5.0f64, omega in 0.05..2.0f64) -> DrivenQubitParams {
        DrivenQubitParams { delta, g, gamma0, omega }
    }
}

/// Multiset distance by greedy nearest matching.
fn mismatch(a: &[C64], b: &[C64]) -> f64 {
    let mut used = vec![false; b.len()];
    let mut worst: f64 = 0.0;
    for z in a {
        let (k, d) = b
            .iter()
            .enumerate()
            .filter(|(k, _)| !used[*k])
            .map(|(k, w)| (k, (z - w).norm()))
            .min_by(|x, y| x.1.total_cmp(&y.1))
            .unwrap();
        used[k] = true;
        worst = worst.max(d);
    }
    worst
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn liouvillian_preserves_trace(model in qubit_model(), t in 0.0..10.0f64) {
        let l = build_liouvillian(&model, t);
        prop_assert!(check_trace_preserving(&l) <= 1e-12 * l.frobenius_norm().max(1.0));
    }

    #[test]
    fn rhs_is_hermitian_and_traceless(model in qubit_model(), rho in pure_state(), t in 0.0..10.0f64) {
        let d = lindblad_rhs(&model, t, rho.matrix());
        let scale = d.frobenius_norm().max(1.0);
        prop_assert!(d.hermitian_defect() <= 1e-12 * scale);
        prop_assert!(d.trace().norm() <= 1e-12 * scale);
    }

    #[test]
    fn evolution_stays_physical(model in qubit_model(), rho in pure_state()) {
        let grid: Vec<f64> = (0..=8).map(|k| 0.5 * k as f64).collect();
        let ts = evolve_superop(&model, &rho, &grid, 1e-10, 1e-12).unwrap();
        for x in ts.get("trace").unwrap() {
            prop_assert!((x - 1.0).abs() <= 1e-9);
        }
        for x in ts.get("min_eigenvalue").unwrap() {
            prop_assert!(*x >= -1e-7);
        }
    }

    #[test]
    fn bloch_and_liouvillian_spectra_agree(model in qubit_model(), t in 0.0..10.0f64) {
        let l = build_liouvillian(&model, t);
        let ext = extend(&build_bloch_liouvillian(&model, t).unwrap()).to_complex();
        let scale = l.frobenius_norm().max(1.0);
        prop_assert!(mismatch(&eigenvalues(&l).unwrap(), &eigenvalues(&ext).unwrap()) <= 1e-9 * scale);
    }

    #[test]
    fn bloch_round_trip(rho in pure_state()) {
        let back = from_bloch(&to_bloch(&rho), 2).unwrap();
        prop_assert!(back.max_abs_diff(rho.matrix()) <= 1e-14);
    }

    #[test]
    fn closure_ignores_generator_order(
        picks in prop::sample::subsequence((1usize..16).map(|k| (k / 4, k % 4)).collect::<Vec<_>>(), 2..5),
        seed in any::<u64>(),
    ) {
        let gens: Vec<SuperOpElement> = picks.iter().map(|&(a, b)| SuperOpElement::pauli_string(a, b)).collect();
        let mut shuffled = gens.clone();
        // Deterministic Fisher–Yates from the seed.
        let mut s = seed;
        for i in (1..shuffled.len()).rev() {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            shuffled.swap(i, (s >> 33) as usize % (i + 1));
        }
        let a = closure(&gens, 16).unwrap();
        let b = closure(&shuffled, 16).unwrap();
        prop_assert_eq!(a.dim, b.dim);
        prop_assert!(antisymmetry_residual(&a.structure_constants) <= 1e-12);
        prop_assert!(jacobi_residual(&a.structure_constants) <= 1e-9);
    }

    #[test]
    fn adiabatic_pair_identities(p in driven(), t in 0.0..100.0f64) {
        let tr = adiabatic_eigenvalues(&p, t);
        let gamma = gamma_of_t(&p, t);
        let scale = 1.0 + gamma * gamma + p.coupling() * p.coupling();
        prop_assert!((tr.nu_plus + tr.nu_minus + gamma).norm() <= 1e-12 * scale);
        prop_assert!((tr.nu_plus * tr.nu_minus - p.coupling() * p.coupling()).norm() <= 1e-12 * scale);
        prop_assert!((tr.nu0 + gamma).norm() == 0.0);
    }

    #[test]
    fn eps_sit_on_threshold(p in driven(), n_max in 0usize..3) {
        let eps = locate_eps(&p, n_max);
        let rho = p.coupling();
        for &t in &eps {
            prop_assert!(t >= 0.0 && t < (n_max + 1) as f64 * p.period());
            prop_assert!((gamma_of_t(&p, t) - 2.0 * rho).abs() <= 1e-8 * p.gamma0.max(1.0));
        }
        prop_assert!(eps.windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn ipr_bounds_and_scale_invariance(v in prop::collection::vec(c64(), 1..40), s in 0.1..10.0f64) {
        prop_assume!(v.iter().any(|z| z.norm() > 1e-6));
        let x = ipr(&v);
        prop_assert!(x >= 1.0 - 1e-12 && x <= v.len() as f64 * (1.0 + 1e-12));
        let scaled: Vec<C64> = v.iter().map(|z| z * s).collect();
        prop_assert!((ipr(&scaled) - x).abs() <= 1e-12 * x);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    /// Well inside the truncation, shifting a rung-localized state by one rung
    /// moves its quasienergy by exactly ω.
    #[test]
    fn floquet_translation_covariance(
        delta in -0.1..0.1f64,
        g in -0.1..0.1f64,
        rel_gamma in 0.0..0.3f64,
        omega in 0.2..1.0f64,
    ) {
        let p = DrivenQubitParams { delta, g, gamma0: rel_gamma * omega, omega };
        let hf = build_floquet(&p, 16).unwrap();
        let spec = floquet_spectrum(&hf, 1e-12).unwrap();
        for (z, com) in spec.eigenvalues.iter().zip(&spec.center_of_mass) {
            if com.abs() > 4.0 {
                continue;
            }
            let target = z + omega;
            let d = spec.eigenvalues.iter().map(|w| (w - target).norm()).fold(f64::INFINITY, f64::min);
            prop_assert!(d <= 1e-8 * omega, "eps {z}, gap {d:e}");
        }
    }
}
