//! The driven dephasing qubit.
//!
//! H = ½(δσ_z + gσ_x), a single jump operator L = ½σ_y and rate
//! γ(t) = γ₀(1 + cos ωt). Its Bloch matrix is
//!
//! M(t) = [[−γ, −δ, 0], [δ, 0, −g], [0, g, −γ]],  b = 0,
//!
//! with adiabatic eigenvalues ν₀ = −γ and ν± = −γ/2 ± √(γ²/4 − g² − δ²).
//! Exceptional points sit where γ(t) = 2√(g² + δ²).

use std::f64::consts::PI;

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::linalg::{eig_general, ComplexMatrix, RealMatrix};
use crate::operators::{sigma_x, sigma_y, sigma_z};
use crate::superop::{Channel, ModelSpec, RateLaw};

/// Parameters of the driven qubit (ħ = 1).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DrivenQubitParams {
    pub delta: f64,
    pub g: f64,
    pub gamma0: f64,
    pub omega: f64,
}

impl DrivenQubitParams {
    pub fn new(delta: f64, g: f64, gamma0: f64, omega: f64) -> Result<Self> {
        let p = Self {
            delta,
            g,
            gamma0,
            omega,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if ![self.delta, self.g, self.gamma0, self.omega].iter().all(|x| x.is_finite()) {
            return Err(Error::InvalidModel("qubit parameters must be finite".into()));
        }
        if self.gamma0 < 0.0 {
            return Err(Error::InvalidModel(format!("gamma0 must be >= 0, got {}", self.gamma0)));
        }
        if !(self.omega > 0.0) {
            return Err(Error::InvalidModel(format!("omega must be > 0, got {}", self.omega)));
        }
        Ok(())
    }

    /// √(g² + δ²), half the EP threshold of γ.
    pub fn coupling(&self) -> f64 {
        self.g.hypot(self.delta)
    }

    pub fn period(&self) -> f64 {
        2.0 * PI / self.omega
    }

    pub fn rate_law(&self) -> RateLaw {
        RateLaw::Cosine {
            gamma0: self.gamma0,
            omega: self.omega,
        }
    }

    /// True when γ(t) reaches the EP threshold during a period.
    pub fn has_eps(&self) -> bool {
        let rho = self.coupling();
        rho > 0.0 && rho <= self.gamma0
    }
}

/// The master-equation model with these parameters.
pub fn model_spec(p: &DrivenQubitParams) -> ModelSpec {
    let h = (&sigma_z().scale_real(p.delta) + &sigma_x().scale_real(p.g)).scale_real(0.5);
    ModelSpec::new(h, vec![Channel::new(sigma_y().scale_real(0.5), p.rate_law())])
        .expect("driven qubit model is valid by construction")
}

/// γ(t) = γ₀(1 + cos ωt).
pub fn gamma_of_t(p: &DrivenQubitParams, t: f64) -> f64 {
    p.rate_law().eval(t)
}

/// Closed-form Bloch matrix M(t).
pub fn bloch_matrix(p: &DrivenQubitParams, t: f64) -> RealMatrix {
    bloch_matrix_for_rate(p, gamma_of_t(p, t))
}

/// M for a frozen rate γ.
pub fn bloch_matrix_for_rate(p: &DrivenQubitParams, gamma: f64) -> RealMatrix {
    RealMatrix::from_fn(3, 3, |i, j| match (i, j) {
        (0, 0) | (2, 2) => -gamma,
        (0, 1) => -p.delta,
        (1, 0) => p.delta,
        (1, 2) => -p.g,
        (2, 1) => p.g,
        _ => 0.0,
    })
}

/// Instantaneous eigenvalues of M(t).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AdiabaticTriple {
    pub t: f64,
    pub nu0: C64,
    pub nu_plus: C64,
    pub nu_minus: C64,
}

/// γ²/4 − g² − δ², factored to avoid cancellation near the EP.
fn radicand(p: &DrivenQubitParams, gamma: f64) -> f64 {
    let rho = p.coupling();
    (0.5 * gamma - rho) * (0.5 * gamma + rho)
}

/// Adiabatic eigenvalues for a frozen rate γ.
pub fn adiabatic_eigenvalues_for_rate(p: &DrivenQubitParams, gamma: f64) -> (C64, C64, C64) {
    let rad = radicand(p, gamma);
    let nu0 = C64::new(-gamma, 0.0);
    if rad > 0.0 && gamma > 0.0 {
        // Real pair: take the larger-magnitude root directly and the other
        // from ν₊ν₋ = g² + δ², avoiding cancellation in −γ/2 + √rad.
        let far = -0.5 * gamma - rad.sqrt();
        let rho = p.coupling();
        return (nu0, C64::new(rho * rho / far, 0.0), C64::new(far, 0.0));
    }
    let root = if rad >= 0.0 {
        C64::new(rad.sqrt(), 0.0)
    } else {
        C64::new(0.0, (-rad).sqrt())
    };
    let half = C64::new(-0.5 * gamma, 0.0);
    (nu0, half + root, half - root)
}

/// ν₀ = −γ(t), ν± = −γ(t)/2 ± √(γ(t)²/4 − g² − δ²) with the principal root.
pub fn adiabatic_eigenvalues(p: &DrivenQubitParams, t: f64) -> AdiabaticTriple {
    let (nu0, nu_plus, nu_minus) = adiabatic_eigenvalues_for_rate(p, gamma_of_t(p, t));
    AdiabaticTriple {
        t,
        nu0,
        nu_plus,
        nu_minus,
    }
}

/// Times of the exceptional points inside drive periods n = 0..=n_max, that
/// is t ∈ [0, (n_max + 1)T), ascending.
///
/// Within period n the solutions are ωt = 2πn + θ and 2π(n + 1) − θ with
/// θ = arccos(2√(g²+δ²)/γ₀ − 1); both are polished by Newton steps on
/// γ(t)/2 − √(g²+δ²). When √(g²+δ²) = γ₀ the radicand only touches zero, at
/// ωt = 2πn. Empty when γ₀ < √(g²+δ²) or g = δ = 0 (then M stays
/// diagonalizable).
pub fn locate_eps(p: &DrivenQubitParams, n_max: usize) -> Vec<f64> {
    let rho = p.coupling();
    if !p.has_eps() {
        return Vec::new();
    }
    let x = (2.0 * rho / p.gamma0 - 1.0).clamp(-1.0, 1.0);
    let theta = x.acos();
    let period = p.period();
    let mut times = Vec::with_capacity(2 * n_max + 2);
    for n in 0..=n_max {
        let base = 2.0 * PI * n as f64;
        times.push(polish_ep(p, (base + theta) / p.omega));
        if theta > 0.0 {
            times.push(polish_ep(p, (base + 2.0 * PI - theta) / p.omega));
        }
    }
    times.sort_by(|a, b| a.total_cmp(b));
    times.dedup_by(|a, b| (*a - *b).abs() <= 1e-9 * period);
    times
}

fn polish_ep(p: &DrivenQubitParams, mut t: f64) -> f64 {
    let rho = p.coupling();
    let f = |t: f64| 0.5 * gamma_of_t(p, t) - rho;
    for _ in 0..8 {
        let fv = f(t);
        let df = -0.5 * p.gamma0 * p.omega * (p.omega * t).sin();
        if fv == 0.0 || df.abs() < 1e-300 {
            break;
        }
        let step = fv / df;
        // Tangential roots have df ≈ 0; only accept steps that improve |f|.
        if !step.is_finite() || f(t - step).abs() >= fv.abs() {
            break;
        }
        t -= step;
    }
    t
}

/// Eigenvalue branch of M(t).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Branch {
    /// ν₀ = −γ.
    Zero,
    /// ν₊, the slowest decaying branch while the radicand is positive.
    Plus,
    /// ν₋.
    Minus,
}

impl Branch {
    pub fn eigenvalue(self, triple: &AdiabaticTriple) -> C64 {
        match self {
            Branch::Zero => triple.nu0,
            Branch::Plus => triple.nu_plus,
            Branch::Minus => triple.nu_minus,
        }
    }

    /// The branch whose eigenvalue at t = 0 has the largest real part.
    pub fn slowest(p: &DrivenQubitParams) -> Branch {
        let tr = adiabatic_eigenvalues(p, 0.0);
        [Branch::Plus, Branch::Minus, Branch::Zero]
            .into_iter()
            .max_by(|a, b| a.eigenvalue(&tr).re.total_cmp(&b.eigenvalue(&tr).re))
            .unwrap_or(Branch::Plus)
    }
}

impl std::str::FromStr for Branch {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "0" | "zero" => Ok(Branch::Zero),
            "+" | "plus" => Ok(Branch::Plus),
            "-" | "minus" => Ok(Branch::Minus),
            other => Err(Error::InvalidArgument(format!("unknown branch {other:?}"))),
        }
    }
}

/// A grid point where continuity tracking could not be trusted.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BranchCrossing {
    pub t: f64,
    /// Smallest gap between the tracked eigenvalue and another one.
    pub gap: f64,
}

/// Tracked adiabatic state R^(ad)(t) = exp(∫₀ᵗ ν dt′) R(t).
#[derive(Clone, Debug)]
pub struct AdiabaticTrack {
    pub branch: Branch,
    pub times: Vec<f64>,
    /// Tracked eigenvalue ν(t).
    pub nu: Vec<C64>,
    /// R^(ad)(t); complex once the tracked eigenvalue leaves the real axis.
    pub states: Vec<[C64; 3]>,
    /// True where the state has a non-negligible imaginary part.
    pub complex: Vec<bool>,
    pub crossings: Vec<BranchCrossing>,
}

impl AdiabaticTrack {
    /// Real part of R^(ad)(t).
    pub fn real_states(&self) -> Vec<[f64; 3]> {
        self.states.iter().map(|s| [s[0].re, s[1].re, s[2].re]).collect()
    }
}

/// Gap below which a grid point is reported as a crossing.
const CROSSING_GAP: f64 = 1e-6;

fn dot_conj(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

/// Follow one eigenvector of M(t) along `t_grid` (starting at 0) by maximal
/// overlap with the previous point, with unit norm and the phase of each
/// vector aligned to its predecessor. The exponential factor uses the
/// trapezoid rule on the grid.
pub fn adiabatic_state(p: &DrivenQubitParams, branch: Branch, t_grid: &[f64]) -> Result<AdiabaticTrack> {
    p.validate()?;
    if t_grid.is_empty() || t_grid[0] != 0.0 {
        return Err(Error::InvalidArgument("adiabatic state grid must start at t = 0".into()));
    }
    if t_grid.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::InvalidArgument("adiabatic state grid must be strictly ascending".into()));
    }
    let start = branch.eigenvalue(&adiabatic_eigenvalues(p, 0.0));
    let scale = (2.0 * p.gamma0).max(p.coupling()).max(f64::MIN_POSITIVE);
    if start.im.abs() > 1e-12 * scale {
        return Err(Error::InvalidArgument(format!(
            "branch {branch:?} is complex at t = 0 (nu = {start}); no real initial state"
        )));
    }

    let n = t_grid.len();
    let mut track = AdiabaticTrack {
        branch,
        times: t_grid.to_vec(),
        nu: Vec::with_capacity(n),
        states: Vec::with_capacity(n),
        complex: Vec::with_capacity(n),
        crossings: Vec::new(),
    };
    let mut prev: Option<Vec<C64>> = None;
    let mut integral = C64::new(0.0, 0.0);
    let mut prev_nu = start;
    for (k, &t) in t_grid.iter().enumerate() {
        let m = bloch_matrix(p, t).to_complex();
        let eig = eig_general(&m, false, 1e-8)?;
        let (idx, mut v) = match &prev {
            None => {
                let idx = (0..3)
                    .min_by(|&a, &b| (eig.values[a] - start).norm().total_cmp(&(eig.values[b] - start).norm()))
                    .unwrap_or(0);
                let v = eig.right_vectors.column(idx).to_vec();
                (idx, v)
            }
            Some(pv) => {
                let idx = (0..3)
                    .max_by(|&a, &b| {
                        dot_conj(pv, eig.right_vectors.column(a))
                            .norm()
                            .total_cmp(&dot_conj(pv, eig.right_vectors.column(b)).norm())
                    })
                    .unwrap_or(0);
                (idx, eig.right_vectors.column(idx).to_vec())
            }
        };
        // Phase: largest component real positive at t = 0, then continuity.
        let phase = match &prev {
            None => {
                let big = v.iter().copied().max_by(|a, b| a.norm().total_cmp(&b.norm())).unwrap_or(C64::new(1.0, 0.0));
                big.conj() / big.norm()
            }
            Some(pv) => {
                let o = dot_conj(&v, pv);
                if o.norm() > 0.0 {
                    o / o.norm()
                } else {
                    C64::new(1.0, 0.0)
                }
            }
        };
        let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        for z in v.iter_mut() {
            *z *= phase / norm;
        }
        let nu = eig.values[idx];
        let gap = (0..3)
            .filter(|&j| j != idx)
            .map(|j| (eig.values[j] - nu).norm())
            .fold(f64::INFINITY, f64::min);
        if gap <= CROSSING_GAP * scale.max(1.0) {
            track.crossings.push(BranchCrossing { t, gap });
        }
        if k > 0 {
            integral += 0.5 * (nu + prev_nu) * (t - t_grid[k - 1]);
        }
        prev_nu = nu;
        let f = integral.exp();
        let state = [v[0] * f, v[1] * f, v[2] * f];
        let imag = state.iter().map(|z| z.im.abs()).fold(0.0, f64::max);
        let mag = state.iter().map(|z| z.norm()).fold(0.0, f64::max);
        track.complex.push(nu.im.abs() > 1e-12 * scale || imag > 1e-9 * mag.max(f64::MIN_POSITIVE));
        track.nu.push(nu);
        track.states.push(state);
        prev = Some(v);
    }
    Ok(track)
}

/// M(t) as a complex matrix, for eigen-analysis.
pub fn bloch_matrix_complex(p: &DrivenQubitParams, t: f64) -> ComplexMatrix {
    bloch_matrix(p, t).to_complex()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bloch::build_bloch_liouvillian;
    use crate::linalg::eigenvalues;

    fn fig1() -> DrivenQubitParams {
        DrivenQubitParams::new(0.05, 0.0, 10.0, 0.05).unwrap()
    }

    #[test]
    fn rate_examples() {
        let p = fig1();
        assert!((gamma_of_t(&p, 0.0) - 20.0).abs() < 1e-14);
        assert!(gamma_of_t(&p, PI / p.omega).abs() < 1e-14);
        assert!((gamma_of_t(&p, 60.0) - 10.0 * (1.0 + 3.0f64.cos())).abs() < 1e-12);
    }

    #[test]
    fn closed_form_matches_projection() {
        let p = DrivenQubitParams::new(0.07, 0.2, 3.0, 0.4).unwrap();
        let model = model_spec(&p);
        for t in [0.0, 1.3, 7.7] {
            let bl = build_bloch_liouvillian(&model, t).unwrap();
            assert!(bl.m.max_abs_diff(&bloch_matrix(&p, t)) < 1e-14);
        }
    }

    #[test]
    fn eigenvalue_examples() {
        let p = fig1();
        let tr = adiabatic_eigenvalues(&p, 0.0);
        // Expansion of −γ/2 + √(γ²/4 − δ²) for δ ≪ γ: −δ²/γ − δ⁴/γ³ − 2δ⁶/γ⁵.
        let (d, g) = (0.05f64, 20.0f64);
        let want = -d.powi(2) / g - d.powi(4) / g.powi(3) - 2.0 * d.powi(6) / g.powi(5);
        assert!((tr.nu_plus.re - want).abs() < 1e-17);
        assert!((tr.nu_minus.re + 20.0 + want).abs() < 1e-13);
        assert_eq!(tr.nu0.re, -20.0);
        let unitary = DrivenQubitParams::new(0.3, 0.4, 0.0, 1.0).unwrap();
        let u = adiabatic_eigenvalues(&unitary, 2.0);
        assert!((u.nu_plus - C64::new(0.0, 0.5)).norm() < 1e-15);
        assert!((u.nu_minus - C64::new(0.0, -0.5)).norm() < 1e-15);
        // γ = 2√(g²+δ²): the radicand vanishes.
        let (_, a, b) = adiabatic_eigenvalues_for_rate(&unitary, 1.0);
        assert_eq!(a, b);
    }

    #[test]
    fn eigenvalues_agree_with_eigensolver() {
        let p = DrivenQubitParams::new(0.05, 0.02, 10.0, 0.05).unwrap();
        for k in 0..50 {
            let t = k as f64 * 2.7;
            let tr = adiabatic_eigenvalues(&p, t);
            let mut ev = eigenvalues(&bloch_matrix_complex(&p, t)).unwrap();
            for want in [tr.nu0, tr.nu_plus, tr.nu_minus] {
                let (i, d) = ev
                    .iter()
                    .enumerate()
                    .map(|(i, z)| (i, (z - want).norm()))
                    .min_by(|a, b| a.1.total_cmp(&b.1))
                    .unwrap();
                // Near an EP the eigensolver itself is only √ε accurate.
                assert!(d < 1e-6, "t {t}: {d:e}");
                ev.remove(i);
            }
        }
    }

    #[test]
    fn fig1_ep_pair() {
        let p = fig1();
        assert_eq!(locate_eps(&p, 0).len(), 2);
        let eps = locate_eps(&p, 1);
        assert_eq!(eps.len(), 4);
        assert!((eps[0] - 60.00).abs() < 5e-3, "{eps:?}");
        assert!((eps[1] - 65.66).abs() < 5e-3, "{eps:?}");
        for &t in &eps {
            let tr = adiabatic_eigenvalues(&p, t);
            let gap = (tr.nu_plus - tr.nu_minus).norm();
            assert!(gap <= 1e-8 * p.gamma0, "t {t}: gap {gap:e}");
        }
        assert_eq!(locate_eps(&p, 3).len(), 8);
        assert!(eps.iter().all(|&t| t < 2.0 * p.period()));
        assert!((eps[2] - eps[0] - p.period()).abs() < 1e-9);
    }

    #[test]
    fn ep_edge_cases() {
        let below = DrivenQubitParams::new(0.05, 0.0, 0.04, 0.05).unwrap();
        assert!(locate_eps(&below, 4).is_empty());
        let bare = DrivenQubitParams::new(0.0, 0.0, 1.0, 0.05).unwrap();
        assert!(locate_eps(&bare, 4).is_empty());
        // Equality: the radicand touches zero at ωt = 2πn only.
        let touch = DrivenQubitParams::new(0.05, 0.0, 0.05, 0.05).unwrap();
        let eps = locate_eps(&touch, 2);
        assert_eq!(eps.len(), 3);
        for (n, t) in eps.iter().enumerate() {
            assert!((t - n as f64 * touch.period()).abs() < 1e-9);
        }
    }

    #[test]
    fn slow_branch_eigenvector() {
        let p = fig1();
        assert_eq!(Branch::slowest(&p), Branch::Plus);
        let grid: Vec<f64> = (0..=100).map(|k| k as f64 * 0.5).collect();
        let tr = adiabatic_state(&p, Branch::Plus, &grid).unwrap();
        let r0 = tr.states[0];
        assert!((r0[1].re - 1.0).abs() < 1e-5);
        assert!((r0[0].re + 0.0025).abs() < 1e-5);
        assert!(r0[2].norm() < 1e-15);
        assert!(tr.crossings.is_empty());
        assert!(!tr.complex.iter().any(|&c| c));
    }

    #[test]
    fn unitary_branch_keeps_norm() {
        let p = DrivenQubitParams::new(0.3, 0.4, 0.0, 1.0).unwrap();
        let grid: Vec<f64> = (0..=40).map(|k| k as f64 * 0.25).collect();
        let tr = adiabatic_state(&p, Branch::Zero, &grid).unwrap();
        for s in &tr.states {
            let n: f64 = s.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            assert!((n - 1.0).abs() < 1e-12);
        }
        // ± branches are complex at t = 0 in the unitary limit.
        assert!(adiabatic_state(&p, Branch::Plus, &grid).is_err());
    }

    #[test]
    fn tracking_flags_complex_after_ep() {
        let p = fig1();
        let grid: Vec<f64> = (0..=1400).map(|k| k as f64 * 0.05).collect();
        let tr = adiabatic_state(&p, Branch::Plus, &grid).unwrap();
        let first_complex = tr.times[tr.complex.iter().position(|&c| c).unwrap()];
        assert!((first_complex - 60.0).abs() < 0.1, "{first_complex}");
    }

    #[test]
    fn parse_branch() {
        assert_eq!("+".parse::<Branch>().unwrap(), Branch::Plus);
        assert_eq!("minus".parse::<Branch>().unwrap(), Branch::Minus);
        assert!("x".parse::<Branch>().is_err());
    }
}
