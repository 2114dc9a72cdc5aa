//! Dormand–Prince 5(4) integrator with FSAL and continuous output.

use std::ops::{Add, Mul, Sub};

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};

/// Scalar field the integrator works over (`f64` or `C64`).
pub trait OdeScalar:
    Copy + Add<Output = Self> + Sub<Output = Self> + Mul<f64, Output = Self> + Default + 'static
{
    fn magnitude(self) -> f64;
    fn is_finite(self) -> bool;
}

impl OdeScalar for f64 {
    #[inline]
    fn magnitude(self) -> f64 {
        self.abs()
    }
    #[inline]
    fn is_finite(self) -> bool {
        f64::is_finite(self)
    }
}

impl OdeScalar for C64 {
    #[inline]
    fn magnitude(self) -> f64 {
        self.norm()
    }
    #[inline]
    fn is_finite(self) -> bool {
        self.re.is_finite() && self.im.is_finite()
    }
}

/// Tolerances and limits.
#[derive(Clone, Copy, Debug)]
pub struct OdeOptions {
    pub rtol: f64,
    pub atol: f64,
    /// First trial step; chosen automatically when `None`.
    pub h0: Option<f64>,
    pub h_max: Option<f64>,
    pub max_steps: usize,
}

impl OdeOptions {
    pub fn new(rtol: f64, atol: f64) -> Self {
        Self {
            rtol,
            atol,
            h0: None,
            h_max: None,
            max_steps: 5_000_000,
        }
    }
}

/// Dense samples plus step statistics.
#[derive(Clone, Debug)]
pub struct Trajectory<T> {
    pub times: Vec<f64>,
    pub states: Vec<Vec<T>>,
    pub accepted: usize,
    pub rejected: usize,
}

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;
const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

fn inf_norm<T: OdeScalar>(v: &[T]) -> f64 {
    v.iter().map(|x| x.magnitude()).fold(0.0, f64::max)
}

fn combo<T: OdeScalar>(out: &mut [T], y: &[T], h: f64, terms: &[(f64, &[T])]) {
    for i in 0..out.len() {
        let mut acc = T::default();
        for &(c, k) in terms {
            if c != 0.0 {
                acc = acc + k[i] * c;
            }
        }
        out[i] = y[i] + acc * h;
    }
}

/// Integrate y' = f(t, y) over `t_span`, reporting the solution at each time of
/// `dense_grid` (which must lie in the span). The step is accepted when the
/// embedded error satisfies ‖e‖∞ ≤ max(rtol·‖y‖∞, atol).
pub fn ode_integrate<T, F>(
    mut f: F,
    y0: &[T],
    t_span: (f64, f64),
    dense_grid: &[f64],
    opts: &OdeOptions,
) -> Result<Trajectory<T>>
where
    T: OdeScalar,
    F: FnMut(f64, &[T], &mut [T]),
{
    let (t0, t1) = t_span;
    if !(t1 > t0) || !t0.is_finite() || !t1.is_finite() {
        return Err(Error::InvalidArgument(format!("invalid time span [{t0}, {t1}]")));
    }
    if !(opts.rtol > 0.0 && opts.atol > 0.0) {
        return Err(Error::InvalidArgument("rtol and atol must be positive".into()));
    }
    if dense_grid.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::InvalidArgument("dense grid must be ascending".into()));
    }
    if let (Some(&lo), Some(&hi)) = (dense_grid.first(), dense_grid.last()) {
        let slack = 1e-12 * (t1 - t0).max(1.0);
        if lo < t0 - slack || hi > t1 + slack {
            return Err(Error::InvalidArgument("dense grid outside the time span".into()));
        }
    }
    if !y0.iter().all(|x| x.is_finite()) {
        return Err(Error::NonFinite { context: "ODE initial state" });
    }

    let n = y0.len();
    let mut y = y0.to_vec();
    let mut y_new = vec![T::default(); n];
    let mut tmp = vec![T::default(); n];
    let mut k: Vec<Vec<T>> = (0..7).map(|_| vec![T::default(); n]).collect();
    let mut out = Trajectory {
        times: Vec::with_capacity(dense_grid.len()),
        states: Vec::with_capacity(dense_grid.len()),
        accepted: 0,
        rejected: 0,
    };
    let mut next = 0;
    while next < dense_grid.len() && dense_grid[next] <= t0 {
        out.times.push(dense_grid[next]);
        out.states.push(y.clone());
        next += 1;
    }

    let span = t1 - t0;
    let h_max = opts.h_max.unwrap_or(span).min(span);
    let mut t = t0;
    f(t, &y, &mut k[0]);
    if !k[0].iter().all(|x| x.is_finite()) {
        return Err(Error::NonFinite { context: "ODE right-hand side" });
    }
    let mut h = opts
        .h0
        .unwrap_or_else(|| initial_step(&mut f, t, &y, &k[0], opts, &mut tmp))
        .min(h_max);
    let mut steps = 0usize;
    let mut last_rejected = false;

    while t < t1 {
        if steps >= opts.max_steps {
            return Err(Error::StepBudget { t, max_steps: opts.max_steps });
        }
        steps += 1;
        if t + h > t1 || (t1 - (t + h)) < 1e-12 * h {
            h = t1 - t;
        }
        if h <= 16.0 * f64::EPSILON * t.abs().max(1.0) {
            return Err(Error::StepUnderflow { t, h });
        }

        let (k1, rest) = k.split_first_mut().unwrap();
        let (k2, rest) = rest.split_first_mut().unwrap();
        let (k3, rest) = rest.split_first_mut().unwrap();
        let (k4, rest) = rest.split_first_mut().unwrap();
        let (k5, rest) = rest.split_first_mut().unwrap();
        let (k6, rest) = rest.split_first_mut().unwrap();
        let k7 = &mut rest[0];

        combo(&mut tmp, &y, h, &[(A21, k1)]);
        f(t + C2 * h, &tmp, k2);
        combo(&mut tmp, &y, h, &[(A31, k1), (A32, k2)]);
        f(t + C3 * h, &tmp, k3);
        combo(&mut tmp, &y, h, &[(A41, k1), (A42, k2), (A43, k3)]);
        f(t + C4 * h, &tmp, k4);
        combo(&mut tmp, &y, h, &[(A51, k1), (A52, k2), (A53, k3), (A54, k4)]);
        f(t + C5 * h, &tmp, k5);
        combo(&mut tmp, &y, h, &[(A61, k1), (A62, k2), (A63, k3), (A64, k4), (A65, k5)]);
        f(t + h, &tmp, k6);
        combo(&mut y_new, &y, h, &[(A71, k1), (A73, k3), (A74, k4), (A75, k5), (A76, k6)]);
        f(t + h, &y_new, k7);

        let mut err = 0.0f64;
        for i in 0..n {
            let e = (k1[i] * E1 + k3[i] * E3 + k4[i] * E4 + k5[i] * E5 + k6[i] * E6 + k7[i] * E7) * h;
            err = err.max(e.magnitude());
        }
        if !err.is_finite() || !y_new.iter().all(|x| x.is_finite()) {
            // treat as a rejected step; repeated failure ends in underflow
            h *= 0.1;
            out.rejected += 1;
            last_rejected = true;
            continue;
        }
        let sc = (opts.rtol * inf_norm(&y).max(inf_norm(&y_new))).max(opts.atol);
        let ratio = err / sc;

        if ratio <= 1.0 {
            out.accepted += 1;
            let t_new = t + h;
            if next < dense_grid.len() && dense_grid[next] <= t_new {
                let mut r5 = vec![T::default(); n];
                for i in 0..n {
                    r5[i] = (k1[i] * D1 + k3[i] * D3 + k4[i] * D4 + k5[i] * D5 + k6[i] * D6 + k7[i] * D7) * h;
                }
                while next < dense_grid.len() && dense_grid[next] <= t_new {
                    let tq = dense_grid[next];
                    let th = ((tq - t) / h).clamp(0.0, 1.0);
                    let th1 = 1.0 - th;
                    let state: Vec<T> = (0..n)
                        .map(|i| {
                            let r2 = y_new[i] - y[i];
                            let r3 = k1[i] * h - r2;
                            let r4 = r2 - k7[i] * h - r3;
                            y[i] + (r2 + (r3 + (r4 + r5[i] * th1) * th) * th1) * th
                        })
                        .collect();
                    out.times.push(tq);
                    out.states.push(state);
                    next += 1;
                }
            }
            t = t_new;
            std::mem::swap(&mut y, &mut y_new);
            std::mem::swap(k1, k7);
            let mut fac = if ratio == 0.0 { 10.0 } else { 0.9 * ratio.powf(-0.2) };
            fac = fac.clamp(0.2, 10.0);
            if last_rejected {
                fac = fac.min(1.0);
            }
            h = (h * fac).min(h_max);
            last_rejected = false;
        } else {
            out.rejected += 1;
            let fac = (0.9 * ratio.powf(-0.2)).clamp(0.2, 1.0);
            h *= fac;
            last_rejected = true;
        }
    }
    while next < dense_grid.len() {
        out.times.push(dense_grid[next]);
        out.states.push(y.clone());
        next += 1;
    }
    Ok(out)
}

/// Starting step from the local scales of y and f (Hairer–Wanner heuristic).
fn initial_step<T, F>(f: &mut F, t: f64, y: &[T], f0: &[T], opts: &OdeOptions, tmp: &mut [T]) -> f64
where
    T: OdeScalar,
    F: FnMut(f64, &[T], &mut [T]),
{
    let sc = |x: f64| opts.atol + opts.rtol * x;
    let d0 = y.iter().map(|v| v.magnitude() / sc(v.magnitude())).fold(0.0, f64::max);
    let d1 = y
        .iter()
        .zip(f0)
        .map(|(v, fv)| fv.magnitude() / sc(v.magnitude()))
        .fold(0.0, f64::max);
    let h0 = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
    let y1: Vec<T> = y.iter().zip(f0).map(|(&v, &fv)| v + fv * h0).collect();
    f(t + h0, &y1, tmp);
    let d2 = tmp
        .iter()
        .zip(f0)
        .zip(y)
        .map(|((a, b), v)| (*a - *b).magnitude() / sc(v.magnitude()))
        .fold(0.0, f64::max)
        / h0;
    let h1 = if d1.max(d2) <= 1e-15 {
        (h0 * 1e-3).max(1e-6)
    } else {
        (0.01 / d1.max(d2)).powf(0.2)
    };
    (100.0 * h0).min(h1)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exponential_decay() {
        let opts = OdeOptions::new(1e-10, 1e-12);
        let tr = ode_integrate(|_, y: &[f64], dy: &mut [f64]| dy[0] = -y[0], &[1.0], (0.0, 1.0), &[0.5, 1.0], &opts).unwrap();
        assert!((tr.states[1][0] - (-1.0f64).exp()).abs() < 1e-9);
        assert!((tr.states[0][0] - (-0.5f64).exp()).abs() < 1e-9);
    }

    #[test]
    fn rotation_preserves_modulus() {
        let w = 3.0;
        let opts = OdeOptions::new(1e-10, 1e-12);
        let grid: Vec<f64> = (0..=100).map(|i| i as f64 * 0.1).collect();
        let tr = ode_integrate(
            |_, y: &[C64], dy: &mut [C64]| dy[0] = C64::new(0.0, w) * y[0],
            &[C64::new(1.0, 0.0)],
            (0.0, 10.0),
            &grid,
            &opts,
        )
        .unwrap();
        for (t, s) in tr.times.iter().zip(&tr.states) {
            assert!((s[0].norm() - 1.0).abs() < 1e-8);
            assert!((s[0] - C64::new(0.0, w * t).exp()).norm() < 1e-7);
        }
    }

    #[test]
    fn dense_output_between_steps_is_accurate() {
        // y = sin t over a long step sequence, sampled densely
        let opts = OdeOptions::new(1e-9, 1e-12);
        let grid: Vec<f64> = (0..=1000).map(|i| i as f64 * 0.01).collect();
        let tr = ode_integrate(
            |_, y: &[f64], dy: &mut [f64]| {
                dy[0] = y[1];
                dy[1] = -y[0];
            },
            &[0.0, 1.0],
            (0.0, 10.0),
            &grid,
            &opts,
        )
        .unwrap();
        assert_eq!(tr.times.len(), grid.len());
        let worst = tr.times.iter().zip(&tr.states).map(|(t, s)| (s[0] - t.sin()).abs()).fold(0.0, f64::max);
        assert!(worst < 1e-7, "{worst:e}");
    }

    #[test]
    fn tighter_rtol_reduces_error() {
        let exact = (-2.0f64).exp() * 2f64.cos();
        let mut last = f64::INFINITY;
        for rtol in [1e-4, 1e-6, 1e-8, 1e-10] {
            let opts = OdeOptions::new(rtol, 1e-14);
            let tr = ode_integrate(
                |_, y: &[C64], dy: &mut [C64]| dy[0] = C64::new(-1.0, 1.0) * y[0],
                &[C64::new(1.0, 0.0)],
                (0.0, 2.0),
                &[2.0],
                &opts,
            )
            .unwrap();
            let err = (tr.states[0][0].re - exact).abs();
            assert!(err < last, "rtol {rtol}: {err:e} vs {last:e}");
            last = err;
        }
    }

    #[test]
    fn invalid_inputs() {
        let opts = OdeOptions::new(1e-6, 1e-9);
        let f = |_: f64, y: &[f64], dy: &mut [f64]| dy[0] = y[0];
        assert!(ode_integrate(f, &[1.0], (1.0, 0.0), &[], &opts).is_err());
        assert!(ode_integrate(f, &[f64::NAN], (0.0, 1.0), &[], &opts).is_err());
        assert!(ode_integrate(f, &[1.0], (0.0, 1.0), &[2.0], &opts).is_err());
    }

    #[test]
    fn blow_up_is_reported() {
        let opts = OdeOptions::new(1e-8, 1e-10);
        let r = ode_integrate(|_, y: &[f64], dy: &mut [f64]| dy[0] = y[0] * y[0], &[1.0], (0.0, 2.0), &[], &opts);
        assert!(matches!(r, Err(Error::StepUnderflow { .. }) | Err(Error::StepBudget { .. })));
    }
}
