//! Time evolution and observables.
//!
//! Bloch trajectories are integrated in real arithmetic from Ṙ = M(t)R + b(t);
//! density-matrix trajectories use the vectorized Liouvillian. Both are
//! reported as named channels on a common time grid.

use num_complex::Complex64 as C64;

use crate::bloch::{bloch_components, generator_basis, BlochParts, BlochState};
use crate::error::{Error, Result};
use crate::linalg::{eigvals_hermitian, ode_integrate, ComplexMatrix, OdeOptions};
use crate::qubit::{adiabatic_state, model_spec, Branch, DrivenQubitParams};
use crate::superop::{devectorize, vectorize, DensityMatrix, LiouvillianParts, ModelSpec};

/// Named real channels sampled on a strictly ascending time grid.
#[derive(Clone, Debug, PartialEq)]
pub struct TimeSeries {
    pub times: Vec<f64>,
    pub channels: Vec<(String, Vec<f64>)>,
}

impl TimeSeries {
    pub fn new(times: Vec<f64>) -> Result<Self> {
        check_grid(&times)?;
        Ok(Self {
            times,
            channels: Vec::new(),
        })
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Add or replace a channel.
    pub fn push(&mut self, name: &str, values: Vec<f64>) -> Result<()> {
        if values.len() != self.times.len() {
            return Err(Error::DimensionMismatch {
                context: "time series channel length",
                expected: self.times.len(),
                got: values.len(),
            });
        }
        match self.channels.iter_mut().find(|(n, _)| n == name) {
            Some(slot) => slot.1 = values,
            None => self.channels.push((name.to_string(), values)),
        }
        Ok(())
    }

    pub fn get(&self, name: &str) -> Result<&[f64]> {
        self.channels
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, v)| v.as_slice())
            .ok_or_else(|| Error::MissingChannel(name.to_string()))
    }

    pub fn names(&self) -> Vec<&str> {
        self.channels.iter().map(|(n, _)| n.as_str()).collect()
    }
}

fn check_grid(times: &[f64]) -> Result<()> {
    if times.is_empty() {
        return Err(Error::InvalidArgument("time grid is empty".into()));
    }
    if times.iter().any(|t| !t.is_finite()) {
        return Err(Error::NonFinite { context: "time grid" });
    }
    if times.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::InvalidArgument("time grid must be strictly ascending".into()));
    }
    Ok(())
}

/// Uniform grid t0, t0 + dt, ... up to and including t1 (within rounding).
pub fn uniform_grid(t0: f64, t1: f64, dt: f64) -> Vec<f64> {
    let n = ((t1 - t0) / dt).round().max(0.0) as usize;
    (0..=n).map(|k| t0 + k as f64 * (t1 - t0) / n.max(1) as f64).collect()
}

/// Channel names of the Bloch components: rx, ry, rz for a qubit, r1..rN otherwise.
pub fn component_names(dim: usize) -> Vec<String> {
    if dim == 2 {
        vec!["rx".into(), "ry".into(), "rz".into()]
    } else {
        (1..dim * dim).map(|i| format!("r{i}")).collect()
    }
}

fn bloch_channels(ts: &mut TimeSeries, dim: usize, states: &[Vec<f64>]) -> Result<()> {
    let names = component_names(dim);
    for (i, name) in names.iter().enumerate() {
        ts.push(name, states.iter().map(|r| r[i]).collect())?;
    }
    let norms: Vec<f64> = states.iter().map(|r| r.iter().map(|x| x * x).sum::<f64>().sqrt()).collect();
    let c2 = (dim * (dim - 1)) as f64 / 2.0;
    let purity = norms.iter().map(|n| (1.0 + c2 * n * n) / dim as f64).collect();
    ts.push("bloch_norm", norms)?;
    ts.push("purity", purity)?;
    Ok(())
}

fn ode_options(rtol: f64, atol: f64) -> OdeOptions {
    OdeOptions::new(rtol, atol)
}

/// Integrate Ṙ = M(t)R + b(t) from R0 at t_grid[0] and sample on t_grid.
/// Channels: Bloch components, bloch_norm (|R|), purity (Tr ρ²).
pub fn evolve_bloch(model: &ModelSpec, r0: &BlochState, t_grid: &[f64], rtol: f64, atol: f64) -> Result<TimeSeries> {
    check_grid(t_grid)?;
    let d = model.dim();
    let n = generator_basis(d)?.len();
    if r0.r.len() != n {
        return Err(Error::DimensionMismatch {
            context: "initial Bloch vector",
            expected: n,
            got: r0.r.len(),
        });
    }
    let parts = BlochParts::new(model)?;
    let states = integrate_bloch(&parts, &r0.r, t_grid, rtol, atol)?;
    let mut ts = TimeSeries::new(t_grid.to_vec())?;
    bloch_channels(&mut ts, d, &states)?;
    Ok(ts)
}

fn integrate_bloch(parts: &BlochParts, r0: &[f64], t_grid: &[f64], rtol: f64, atol: f64) -> Result<Vec<Vec<f64>>> {
    let t0 = t_grid[0];
    let t1 = *t_grid.last().unwrap_or(&t0);
    if t1 == t0 {
        return Ok(vec![r0.to_vec()]);
    }
    let traj = ode_integrate(
        |t, y: &[f64], dy: &mut [f64]| parts.at(t).rhs(y, dy),
        r0,
        (t0, t1),
        t_grid,
        &ode_options(rtol, atol),
    )?;
    Ok(traj.states)
}

/// Integrate d⟦ρ⟧/dt = 𝓛(t)⟦ρ⟧ and return ρ on the grid.
pub fn evolve_density(model: &ModelSpec, rho0: &DensityMatrix, t_grid: &[f64], rtol: f64, atol: f64) -> Result<Vec<ComplexMatrix>> {
    check_grid(t_grid)?;
    if rho0.dim() != model.dim() {
        return Err(Error::DimensionMismatch {
            context: "initial density matrix",
            expected: model.dim(),
            got: rho0.dim(),
        });
    }
    let parts = LiouvillianParts::new(model);
    let y0 = vectorize(rho0);
    let t0 = t_grid[0];
    let t1 = *t_grid.last().unwrap_or(&t0);
    let states = if t1 == t0 {
        vec![y0]
    } else {
        let mut l = parts.at(t0);
        let mut l_time = t0;
        ode_integrate(
            |t, y: &[C64], dy: &mut [C64]| {
                if t != l_time {
                    l = parts.at(t);
                    l_time = t;
                }
                dy.copy_from_slice(&l.matvec(y));
            },
            &y0,
            (t0, t1),
            t_grid,
            &ode_options(rtol, atol),
        )?
        .states
    };
    states.iter().map(|v| devectorize(v)).collect()
}

/// Superoperator evolution reported like [`evolve_bloch`], plus trace,
/// hermiticity defect, smallest eigenvalue and the largest imaginary part of
/// the Bloch components.
pub fn evolve_superop(model: &ModelSpec, rho0: &DensityMatrix, t_grid: &[f64], rtol: f64, atol: f64) -> Result<TimeSeries> {
    let rhos = evolve_density(model, rho0, t_grid, rtol, atol)?;
    let d = model.dim();
    let mut states = Vec::with_capacity(rhos.len());
    let mut imag = Vec::with_capacity(rhos.len());
    let mut trace = Vec::with_capacity(rhos.len());
    let mut herm = Vec::with_capacity(rhos.len());
    let mut min_eig = Vec::with_capacity(rhos.len());
    for rho in &rhos {
        let comps = bloch_components(rho)?;
        imag.push(comps.iter().map(|z| z.im.abs()).fold(0.0, f64::max));
        states.push(comps.iter().map(|z| z.re).collect::<Vec<f64>>());
        trace.push(rho.trace().re);
        herm.push(rho.hermitian_defect());
        min_eig.push(eigvals_hermitian(rho)?[0]);
    }
    let mut ts = TimeSeries::new(t_grid.to_vec())?;
    bloch_channels(&mut ts, d, &states)?;
    ts.push("trace", trace)?;
    ts.push("hermitian_defect", herm)?;
    ts.push("min_eigenvalue", min_eig)?;
    ts.push("bloch_imag", imag)?;
    Ok(ts)
}

/// T = ½ Σ|λ_i(ρ₁ − ρ₂)|.
pub fn trace_distance(rho1: &DensityMatrix, rho2: &DensityMatrix) -> Result<f64> {
    trace_distance_matrices(rho1.matrix(), rho2.matrix())
}

/// Trace distance of two Hermitian matrices of equal size.
pub fn trace_distance_matrices(a: &ComplexMatrix, b: &ComplexMatrix) -> Result<f64> {
    if a.rows() != b.rows() || a.cols() != b.cols() {
        return Err(Error::DimensionMismatch {
            context: "trace distance operands",
            expected: a.rows(),
            got: b.rows(),
        });
    }
    let diff = a - b;
    Ok(0.5 * eigvals_hermitian(&diff)?.iter().map(|x| x.abs()).sum::<f64>())
}

/// Qubit trace distance from Bloch vectors: |R₁ − R₂|/2.
pub fn trace_distance_bloch(r1: &[f64], r2: &[f64]) -> f64 {
    0.5 * r1.iter().zip(r2).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt()
}

/// Evolve the driven qubit from the real initial state of `branch` and compare
/// with the tracked adiabatic state. Channels: rx, ry, rz, bloch_norm, purity,
/// adiabatic_norm, trace_distance (|R − Re R^(ad)|/2) and complex_flag (1 where
/// the adiabatic state is complex and only its real part was used).
pub fn adiabaticity_diagnostic(p: &DrivenQubitParams, branch: Branch, t_grid: &[f64], rtol: f64) -> Result<TimeSeries> {
    check_grid(t_grid)?;
    let track = adiabatic_state(p, branch, t_grid)?;
    let real = track.real_states();
    let r0 = BlochState::new(real[0].to_vec());
    let mut ts = evolve_bloch(&model_spec(p), &r0, t_grid, rtol, 1e-3 * rtol)?;
    let (rx, ry, rz) = (ts.get("rx")?.to_vec(), ts.get("ry")?.to_vec(), ts.get("rz")?.to_vec());
    let td = (0..t_grid.len())
        .map(|k| trace_distance_bloch(&[rx[k], ry[k], rz[k]], &real[k]))
        .collect();
    let ad_norm = real.iter().map(|r| r.iter().map(|x| x * x).sum::<f64>().sqrt()).collect();
    ts.push("adiabatic_norm", ad_norm)?;
    ts.push("trace_distance", td)?;
    ts.push("complex_flag", track.complex.iter().map(|&c| if c { 1.0 } else { 0.0 }).collect())?;
    Ok(ts)
}

/// ⟨σ_z⟩(t) = r_z(t) as channel "inversion". In this basis σ_z|0⟩ = |0⟩, so
/// the state |0⟩ has inversion +1.
pub fn inversion_series(ts: &TimeSeries) -> Result<TimeSeries> {
    let rz = ts.get("rz")?.to_vec();
    let mut out = TimeSeries::new(ts.times.clone())?;
    out.push("inversion", rz)?;
    Ok(out)
}

/// A window of rapid decay of |R|.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DropEvent {
    pub start: f64,
    pub end: f64,
    /// Largest decay rate −d|R|/dt inside the window.
    pub peak_rate: f64,
}

impl DropEvent {
    /// Distance from t to the window (zero inside).
    pub fn distance_to(&self, t: f64) -> f64 {
        if t < self.start {
            self.start - t
        } else if t > self.end {
            t - self.end
        } else {
            0.0
        }
    }
}

/// Maximal runs of grid intervals whose decay rate −Δ|R|/Δt exceeds `factor`
/// times the median decay rate over the run.
pub fn drop_events(times: &[f64], norm: &[f64], factor: f64) -> Vec<DropEvent> {
    if times.len() < 3 || norm.len() != times.len() {
        return Vec::new();
    }
    let rates: Vec<f64> = times
        .windows(2)
        .zip(norm.windows(2))
        .map(|(t, n)| -(n[1] - n[0]) / (t[1] - t[0]))
        .collect();
    let mut sorted = rates.clone();
    sorted.sort_by(|a, b| a.total_cmp(b));
    let median = sorted[sorted.len() / 2];
    let threshold = factor * median.max(0.0);
    let mut events = Vec::new();
    let mut current: Option<DropEvent> = None;
    for (k, &r) in rates.iter().enumerate() {
        if r > threshold && r > 0.0 {
            let e = current.get_or_insert(DropEvent {
                start: times[k],
                end: times[k + 1],
                peak_rate: r,
            });
            e.end = times[k + 1];
            e.peak_rate = e.peak_rate.max(r);
        } else if let Some(e) = current.take() {
            events.push(e);
        }
    }
    events.extend(current);
    events
}

/// Least-squares line y ≈ slope·x + intercept with coefficient of determination.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

pub fn linear_fit(x: &[f64], y: &[f64]) -> Result<LinearFit> {
    if x.len() != y.len() || x.len() < 2 {
        return Err(Error::InvalidArgument("linear fit needs at least two paired samples".into()));
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let syy: f64 = y.iter().map(|b| (b - my) * (b - my)).sum();
    if sxx == 0.0 {
        return Err(Error::InvalidArgument("linear fit with constant abscissa".into()));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_res: f64 = x.iter().zip(y).map(|(a, b)| (b - slope * a - intercept).powi(2)).sum();
    let r_squared = if syy == 0.0 { 1.0 } else { 1.0 - ss_res / syy };
    Ok(LinearFit {
        slope,
        intercept,
        r_squared,
    })
}

/// Fit of ln y against t; non-positive samples are rejected.
pub fn log_linear_fit(times: &[f64], values: &[f64]) -> Result<LinearFit> {
    if values.iter().any(|v| !(*v > 0.0)) {
        return Err(Error::InvalidArgument("log-linear fit needs positive samples".into()));
    }
    let logs: Vec<f64> = values.iter().map(|v| v.ln()).collect();
    linear_fit(times, &logs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bloch::{from_bloch, to_bloch};
    use crate::operators::*;
    use crate::qubit::locate_eps;
    use crate::superop::{Channel, RateLaw};

    fn fig1() -> DrivenQubitParams {
        DrivenQubitParams::new(0.05, 0.0, 10.0, 0.05).unwrap()
    }

    #[test]
    fn zero_vector_is_fixed() {
        let model = model_spec(&fig1());
        let ts = evolve_bloch(&model, &BlochState::new(vec![0.0; 3]), &uniform_grid(0.0, 50.0, 1.0), 1e-9, 1e-12).unwrap();
        assert!(ts.get("bloch_norm").unwrap().iter().all(|&x| x == 0.0));
        let inv = inversion_series(&ts).unwrap();
        assert!(inv.get("inversion").unwrap().iter().all(|&x| x == 0.0));
    }

    #[test]
    fn bloch_and_superop_agree() {
        let model = ModelSpec::new(
            (&sigma_z().scale_real(0.3) + &sigma_x().scale_real(0.2)).scale_real(0.5),
            vec![
                Channel::new(sigma_minus(), RateLaw::Cosine { gamma0: 0.3, omega: 0.7 }),
                Channel::new(sigma_y().scale_real(0.5), RateLaw::Constant { gamma0: 0.1 }),
            ],
        )
        .unwrap();
        let r0 = BlochState::new(vec![0.3, -0.5, 0.6]);
        let grid = uniform_grid(0.0, 10.0, 0.1);
        let a = evolve_bloch(&model, &r0, &grid, 1e-11, 1e-13).unwrap();
        let rho0 = DensityMatrix::new(from_bloch(&r0, 2).unwrap()).unwrap();
        let b = evolve_superop(&model, &rho0, &grid, 1e-11, 1e-13).unwrap();
        for name in ["rx", "ry", "rz"] {
            let d = a.get(name).unwrap().iter().zip(b.get(name).unwrap()).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
            assert!(d < 1e-8, "{name}: {d:e}");
        }
        assert!(b.get("bloch_imag").unwrap().iter().all(|&x| x < 1e-9));
        assert!(b.get("trace").unwrap().iter().all(|&x| (x - 1.0).abs() < 1e-9));
    }

    #[test]
    fn trace_distance_examples() {
        let ground = DensityMatrix::pure(&[C64::new(1.0, 0.0), C64::new(0.0, 0.0)]).unwrap();
        let excited = DensityMatrix::pure(&[C64::new(0.0, 0.0), C64::new(1.0, 0.0)]).unwrap();
        let mixed = DensityMatrix::maximally_mixed(2);
        assert_eq!(trace_distance(&ground, &ground).unwrap(), 0.0);
        assert!((trace_distance(&ground, &mixed).unwrap() - 0.5).abs() < 1e-15);
        assert!((trace_distance(&ground, &excited).unwrap() - 1.0).abs() < 1e-15);
        let plus = DensityMatrix::pure(&[C64::new(1.0, 0.0), C64::new(0.0, 1.0)]).unwrap();
        let via_bloch = trace_distance_bloch(&to_bloch(&plus).r, &to_bloch(&ground).r);
        assert!((trace_distance(&plus, &ground).unwrap() - via_bloch).abs() < 1e-14);
        assert!(trace_distance(&ground, &DensityMatrix::maximally_mixed(3)).is_err());
    }

    #[test]
    fn unitary_ground_state_inversion() {
        let model = ModelSpec::new(sigma_z().scale_real(0.4), vec![]).unwrap();
        let ts = evolve_bloch(&model, &BlochState::new(vec![0.0, 0.0, 1.0]), &uniform_grid(0.0, 20.0, 0.5), 1e-10, 1e-13).unwrap();
        let inv = inversion_series(&ts).unwrap();
        assert!(inv.get("inversion").unwrap().iter().all(|&x| (x - 1.0).abs() < 1e-9));
        assert!(matches!(inversion_series(&TimeSeries::new(vec![0.0]).unwrap()), Err(Error::MissingChannel(_))));
    }

    #[test]
    fn staircase_in_first_period() {
        let p = fig1();
        let grid = uniform_grid(0.0, p.period(), 0.05);
        let ts = adiabaticity_diagnostic(&p, Branch::Plus, &grid, 1e-10).unwrap();
        let norm = ts.get("bloch_norm").unwrap();
        assert!(norm.windows(2).all(|w| w[1] <= w[0] + 1e-7));
        let events = drop_events(&ts.times, norm, 5.0);
        let eps = locate_eps(&p, 1);
        let near: Vec<_> = events.iter().filter(|e| eps.iter().any(|&t| e.distance_to(t) <= 2.0)).collect();
        assert!(near.len() >= 2, "{events:?}");
        // Before the first EP the evolution follows the adiabatic state.
        let td = ts.get("trace_distance").unwrap();
        let before = ts.times.iter().position(|&t| t >= 55.0).unwrap();
        assert!(td[..before].iter().all(|&x| x < 0.02));
        assert_eq!(td[0], 0.0);
    }

    #[test]
    fn fits() {
        let x = [0.0, 1.0, 2.0, 3.0];
        let f = linear_fit(&x, &[1.0, 3.0, 5.0, 7.0]).unwrap();
        assert!((f.slope - 2.0).abs() < 1e-15 && (f.intercept - 1.0).abs() < 1e-15 && (f.r_squared - 1.0).abs() < 1e-15);
        let e: Vec<f64> = x.iter().map(|t| (-0.5 * t).exp()).collect();
        assert!((log_linear_fit(&x, &e).unwrap().slope + 0.5).abs() < 1e-14);
        assert!(log_linear_fit(&x, &[1.0, 0.0, 1.0, 1.0]).is_err());
    }

    #[test]
    fn drop_detector_on_synthetic_staircase() {
        let t: Vec<f64> = (0..200).map(|k| k as f64).collect();
        let n: Vec<f64> = t.iter().map(|&x| 1.0 - 1e-4 * x - if x > 50.0 { 0.3 } else { 0.0 } - if x > 120.0 { 0.3 } else { 0.0 }).collect();
        let ev = drop_events(&t, &n, 5.0);
        assert_eq!(ev.len(), 2);
        assert_eq!((ev[0].start, ev[0].end), (50.0, 51.0));
        assert_eq!(ev[1].distance_to(100.0), 20.0);
    }

    #[test]
    fn grid_validation() {
        assert!(TimeSeries::new(vec![0.0, 0.0]).is_err());
        let mut ts = TimeSeries::new(vec![0.0, 1.0]).unwrap();
        assert!(ts.push("a", vec![1.0]).is_err());
        assert_eq!(uniform_grid(0.0, 1.0, 0.25), vec![0.0, 0.25, 0.5, 0.75, 1.0]);
    }
}
