//! Truncated Floquet Hamiltonian of the driven qubit, its spectrum, ladder
//! classification and size sensitivity.
//!
//! With γ(t) = γ₀(1 + cos ωt) the Bloch matrix splits as M(t) = M̄ + M_c cos ωt,
//! where M̄ is M at γ = γ₀ and M_c = −γ₀Λ, Λ = diag(1, 0, 1). A Floquet solution
//! R(t) = e^{−iεt} Σ_m u_m e^{−imωt} turns dR/dt = MR into the static problem
//! (ωm + iM̄) u_m + (iM_c/2)(u_{m−1} + u_{m+1}) = ε u_m on rungs |m| ≤ m_max.
//! Components are indexed 3(m + m_max) + k.

use std::collections::HashMap;

use num_complex::Complex64 as C64;

use crate::dynamics::{linear_fit, LinearFit};
use crate::error::{Error, Result};
use crate::linalg::{eig_general, eigenvalues, ode_integrate, ComplexMatrix, OdeOptions};
use crate::qubit::{adiabatic_eigenvalues_for_rate, bloch_matrix_for_rate, DrivenQubitParams};

const I: C64 = C64 { re: 0.0, im: 1.0 };

/// Bloch components per rung.
pub const BLOCK_DIM: usize = 3;

/// Default number of rungs dropped at each truncation edge.
pub const DEFAULT_EDGE_MARGIN: usize = 25;

#[derive(Clone, Debug)]
pub struct FloquetHamiltonian {
    pub params: DrivenQubitParams,
    pub m_max: usize,
    pub block_dim: usize,
    pub matrix: ComplexMatrix,
    /// iM̄, the rung-diagonal block without the ωm shift.
    pub a_diag: ComplexMatrix,
    /// iM_c/2, the block coupling neighbouring rungs.
    pub a_hop: ComplexMatrix,
    pub omega: f64,
}

impl FloquetHamiltonian {
    pub fn dim(&self) -> usize {
        self.matrix.rows()
    }

    pub fn rungs(&self) -> usize {
        2 * self.m_max + 1
    }

    /// Rung m of a basis index.
    pub fn rung_of(&self, index: usize) -> i64 {
        (index / BLOCK_DIM) as i64 - self.m_max as i64
    }
}

/// Block-tridiagonal Floquet Hamiltonian with a hard cutoff at ±m_max.
pub fn build_floquet(p: &DrivenQubitParams, m_max: usize) -> Result<FloquetHamiltonian> {
    p.validate()?;
    if m_max < 1 {
        return Err(Error::InvalidArgument("m_max must be at least 1".into()));
    }
    let mbar = bloch_matrix_for_rate(p, p.gamma0);
    let a_diag = ComplexMatrix::from_fn(3, 3, |i, j| I * mbar[(i, j)]);
    let lambda = [1.0, 0.0, 1.0];
    let a_hop = ComplexMatrix::from_fn(3, 3, |i, j| if i == j { I * (-0.5 * p.gamma0 * lambda[i]) } else { C64::new(0.0, 0.0) });
    let rungs = 2 * m_max + 1;
    let n = BLOCK_DIM * rungs;
    let mut h = ComplexMatrix::zeros(n, n);
    for r in 0..rungs {
        let m = r as f64 - m_max as f64;
        let o = BLOCK_DIM * r;
        for a in 0..3 {
            for b in 0..3 {
                h[(o + a, o + b)] = a_diag[(a, b)];
                if r + 1 < rungs {
                    h[(o + a, o + 3 + b)] = a_hop[(a, b)];
                    h[(o + 3 + a, o + b)] = a_hop[(a, b)];
                }
            }
            h[(o + a, o + a)] += p.omega * m;
        }
    }
    Ok(FloquetHamiltonian {
        params: *p,
        m_max,
        block_dim: BLOCK_DIM,
        matrix: h,
        a_diag,
        a_hop,
        omega: p.omega,
    })
}

/// Classification of a Floquet state.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum LadderLabel {
    Ladder(usize),
    Scattered,
    EdgeArtifact,
}

impl std::fmt::Display for LadderLabel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            LadderLabel::Ladder(k) => write!(f, "{k}"),
            LadderLabel::Scattered => f.write_str("scattered"),
            LadderLabel::EdgeArtifact => f.write_str("edge"),
        }
    }
}

#[derive(Clone, Debug)]
pub struct FloquetSpectrum {
    pub m_max: usize,
    pub omega: f64,
    pub eigenvalues: Vec<C64>,
    /// 1/Σ|c|⁴ of the unit-normalized right eigenvector.
    pub ipr: Vec<f64>,
    /// Σ m |c_m|² per state.
    pub center_of_mass: Vec<f64>,
    /// Filled in by [`ladder_fit`]; empty before.
    pub ladder_id: Vec<LadderLabel>,
    /// Eigensolver residual max‖Hv − εv‖/‖H‖_F.
    pub residual: f64,
}

/// Inverse participation ratio of a vector, after normalization.
pub fn ipr(c: &[C64]) -> f64 {
    let n2: f64 = c.iter().map(|z| z.norm_sqr()).sum();
    let n4: f64 = c.iter().map(|z| z.norm_sqr() * z.norm_sqr()).sum();
    n2 * n2 / n4
}

/// Full eigendecomposition with per-state IPR and centre of mass.
pub fn floquet_spectrum(hf: &FloquetHamiltonian, tol: f64) -> Result<FloquetSpectrum> {
    let eig = eig_general(&hf.matrix, false, tol)?;
    let n = hf.dim();
    let mut ipr_v = Vec::with_capacity(n);
    let mut com = Vec::with_capacity(n);
    for j in 0..n {
        let v = eig.right_vectors.column(j);
        ipr_v.push(ipr(v));
        let norm2: f64 = v.iter().map(|z| z.norm_sqr()).sum();
        let s: f64 = v
            .iter()
            .enumerate()
            .map(|(i, z)| hf.rung_of(i) as f64 * z.norm_sqr())
            .sum();
        com.push(s / norm2);
    }
    Ok(FloquetSpectrum {
        m_max: hf.m_max,
        omega: hf.omega,
        eigenvalues: eig.values,
        ipr: ipr_v,
        center_of_mass: com,
        ladder_id: Vec::new(),
        residual: eig.residual,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct Ladder {
    /// ε ≈ ωm + offset; Re(offset) ∈ (−ω/2, ω/2].
    pub offset: C64,
    /// Members in the bulk.
    pub count: usize,
    /// Number of coincident ladders folded into this cluster.
    pub multiplicity: usize,
    /// max |ε − ωm_nearest − offset| over members.
    pub residual: f64,
}

#[derive(Clone, Debug)]
pub struct LadderReport {
    pub ladders: Vec<Ladder>,
    /// Σ multiplicity.
    pub ladder_count: usize,
    /// Indices of bulk states in no ladder.
    pub scattered: Vec<usize>,
    /// Scattered states whose Im ε lies between the lowest and highest ladder offset.
    pub scattered_between: usize,
    pub bulk_count: usize,
    pub edge_count: usize,
    /// Rung count each ladder would have in the bulk.
    pub expected_per_ladder: usize,
    pub cluster_tol: f64,
    pub labels: Vec<LadderLabel>,
}

impl LadderReport {
    pub fn scattered_fraction(&self) -> f64 {
        if self.bulk_count == 0 {
            0.0
        } else {
            self.scattered.len() as f64 / self.bulk_count as f64
        }
    }

    pub fn max_residual(&self) -> f64 {
        self.ladders.iter().map(|l| l.residual).fold(0.0, f64::max)
    }
}

/// Share of the expected rung count a cluster needs to count as a ladder.
pub const LADDER_FILL: f64 = 0.8;

/// Relative folding tolerance used by [`ladder_fit`].
pub const CLUSTER_TOL: f64 = 1e-7;

struct UnionFind(Vec<usize>);

impl UnionFind {
    fn find(&mut self, mut i: usize) -> usize {
        while self.0[i] != i {
            self.0[i] = self.0[self.0[i]];
            i = self.0[i];
        }
        i
    }
    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            // Smaller index wins so roots do not depend on merge order.
            let (lo, hi) = if ra < rb { (ra, rb) } else { (rb, ra) };
            self.0[hi] = lo;
        }
    }
}

/// Classify bulk states into ladders.
///
/// States with |⟨m⟩| > m_max − bulk_margin are edge artifacts. The rest are
/// folded to (Re ε mod ω, Im ε) and linked when closer than
/// `CLUSTER_TOL·max(ω, max|ε|)` (with wraparound in the folded coordinate).
/// A cluster is a ladder when it holds at least 80% of the 2(m_max − margin) + 1
/// expected rungs; a cluster holding several times that is counted with the
/// matching multiplicity (coincident ladders).
pub fn ladder_fit(spec: &mut FloquetSpectrum, bulk_margin: usize) -> Result<LadderReport> {
    ladder_fit_with_tol(spec, bulk_margin, CLUSTER_TOL)
}

pub fn ladder_fit_with_tol(spec: &mut FloquetSpectrum, bulk_margin: usize, rel_tol: f64) -> Result<LadderReport> {
    if bulk_margin >= spec.m_max {
        return Err(Error::NoBulk {
            m_max: spec.m_max,
            margin: bulk_margin,
        });
    }
    let omega = spec.omega;
    let n = spec.eigenvalues.len();
    let bound = (spec.m_max - bulk_margin) as f64;
    let bulk: Vec<usize> = (0..n).filter(|&i| spec.center_of_mass[i].abs() <= bound + 1e-9).collect();
    let scale = spec.eigenvalues.iter().map(|z| z.norm()).fold(omega, f64::max);
    let tol = rel_tol * scale;
    let fold = |z: C64| (z.re.rem_euclid(omega), z.im);
    let pts: Vec<(f64, f64)> = bulk.iter().map(|&i| fold(spec.eigenvalues[i])).collect();

    // Grid hashing with cells of size tol; neighbours within one cell.
    let ncell_x = ((omega / tol).floor() as i64).max(1);
    let cell = |p: (f64, f64)| (((p.0 / tol).floor() as i64).rem_euclid(ncell_x), (p.1 / tol).floor() as i64);
    let mut grid: HashMap<(i64, i64), Vec<usize>> = HashMap::new();
    for (k, &p) in pts.iter().enumerate() {
        grid.entry(cell(p)).or_default().push(k);
    }
    let dist = |a: (f64, f64), b: (f64, f64)| {
        let dx = (a.0 - b.0).abs();
        let dx = dx.min(omega - dx);
        dx.hypot(a.1 - b.1)
    };
    let mut uf = UnionFind((0..pts.len()).collect());
    for (k, &p) in pts.iter().enumerate() {
        let (cx, cy) = cell(p);
        for dx in -1..=1 {
            for dy in -1..=1 {
                let key = ((cx + dx).rem_euclid(ncell_x), cy + dy);
                if let Some(members) = grid.get(&key) {
                    for &q in members {
                        if q > k && dist(p, pts[q]) <= tol {
                            uf.union(k, q);
                        }
                    }
                }
            }
        }
    }
    let mut clusters: Vec<Vec<usize>> = Vec::new();
    let mut root_slot: HashMap<usize, usize> = HashMap::new();
    for k in 0..pts.len() {
        let r = uf.find(k);
        let slot = *root_slot.entry(r).or_insert_with(|| {
            clusters.push(Vec::new());
            clusters.len() - 1
        });
        clusters[slot].push(k);
    }

    let expected = 2 * (spec.m_max - bulk_margin) + 1;
    let mut labels = vec![LadderLabel::EdgeArtifact; n];
    for &i in &bulk {
        labels[i] = LadderLabel::Scattered;
    }
    let mut ladders = Vec::new();
    for members in &clusters {
        if (members.len() as f64) < LADDER_FILL * expected as f64 {
            continue;
        }
        // Representative: member closest to the lattice centre.
        let rep = *members
            .iter()
            .min_by(|&&a, &&b| {
                spec.center_of_mass[bulk[a]]
                    .abs()
                    .total_cmp(&spec.center_of_mass[bulk[b]].abs())
                    .then(a.cmp(&b))
            })
            .expect("nonempty cluster");
        let z = spec.eigenvalues[bulk[rep]];
        let offset = C64::new(z.re - omega * (z.re / omega).round(), z.im);
        let residual = members
            .iter()
            .map(|&k| {
                let e = spec.eigenvalues[bulk[k]] - offset;
                (e - omega * (e.re / omega).round()).norm()
            })
            .fold(0.0, f64::max);
        let id = ladders.len();
        for &k in members {
            labels[bulk[k]] = LadderLabel::Ladder(id);
        }
        ladders.push(Ladder {
            offset,
            count: members.len(),
            multiplicity: ((members.len() as f64 / expected as f64).round() as usize).max(1),
            residual,
        });
    }
    // Deterministic order by offset.
    let mut order: Vec<usize> = (0..ladders.len()).collect();
    order.sort_by(|&a, &b| {
        ladders[a]
            .offset
            .im
            .total_cmp(&ladders[b].offset.im)
            .then(ladders[a].offset.re.total_cmp(&ladders[b].offset.re))
    });
    let mut remap = vec![0; ladders.len()];
    for (new, &old) in order.iter().enumerate() {
        remap[old] = new;
    }
    for l in labels.iter_mut() {
        if let LadderLabel::Ladder(k) = l {
            *k = remap[*k];
        }
    }
    let ladders: Vec<Ladder> = order.iter().map(|&k| ladders[k].clone()).collect();
    let scattered: Vec<usize> = (0..n).filter(|&i| labels[i] == LadderLabel::Scattered).collect();
    let scattered_between = match (ladders.first(), ladders.last()) {
        (Some(lo), Some(hi)) => scattered
            .iter()
            .filter(|&&i| {
                let y = spec.eigenvalues[i].im;
                y >= lo.offset.im && y <= hi.offset.im
            })
            .count(),
        _ => 0,
    };
    spec.ladder_id = labels.clone();
    Ok(LadderReport {
        ladder_count: ladders.iter().map(|l| l.multiplicity).sum(),
        ladders,
        scattered,
        scattered_between,
        bulk_count: bulk.len(),
        edge_count: n - bulk.len(),
        expected_per_ladder: expected,
        cluster_tol: tol,
        labels,
    })
}

/// Scattered states whose Im ε lies within the span of `offsets` (for example
/// the fitted ladders together with [`monodromy_offsets`]).
pub fn scattered_between(spec: &FloquetSpectrum, report: &LadderReport, offsets: &[C64]) -> usize {
    let lo = offsets.iter().map(|z| z.im).fold(f64::INFINITY, f64::min);
    let hi = offsets.iter().map(|z| z.im).fold(f64::NEG_INFINITY, f64::max);
    report
        .scattered
        .iter()
        .filter(|&&i| {
            let y = spec.eigenvalues[i].im;
            y >= lo && y <= hi
        })
        .count()
}

/// Real 3×3 propagator of dX/dt = A(t)X over [0, T], renormalized after each
/// of `substeps` pieces. Returns the scaled matrix (column-major) and the
/// accumulated log of the scale factors.
fn scaled_period_map(a: impl Fn(f64) -> [[f64; 3]; 3], period: f64, substeps: usize, rtol: f64) -> Result<([f64; 9], f64)> {
    let mut x = [1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0];
    let mut log_scale = 0.0;
    let h = period / substeps as f64;
    for k in 0..substeps {
        let (t0, t1) = (k as f64 * h, (k + 1) as f64 * h);
        let rhs = |t: f64, y: &[f64], dy: &mut [f64]| {
            let m = a(t);
            for c in 0..3 {
                for i in 0..3 {
                    dy[3 * c + i] = (0..3).map(|j| m[i][j] * y[3 * c + j]).sum();
                }
            }
        };
        let tr = ode_integrate(rhs, &x, (t0, t1), &[t1], &OdeOptions::new(rtol, rtol * 1e-3))?;
        let y = &tr.states[0];
        let s = y.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if !(s > 0.0) || !s.is_finite() {
            return Err(Error::NonFinite { context: "period map" });
        }
        for (xi, yi) in x.iter_mut().zip(y) {
            *xi = yi / s;
        }
        log_scale += s.ln();
    }
    Ok((x, log_scale))
}

/// A real number as (sign, ln|value|).
#[derive(Clone, Copy, Debug)]
struct LogReal {
    sign: f64,
    ln: f64,
}

impl LogReal {
    fn new(value: f64, log_scale: f64) -> Self {
        Self {
            sign: value.signum(),
            ln: value.abs().ln() + log_scale,
        }
    }
}

/// Roots of μ³ − c₁μ² + c₂μ − c₃ given in log form, returned as ln μ.
/// Roots of very different modulus are separated along the Newton polygon
/// and each group is solved from its own rescaled sub-polynomial.
fn cubic_log_roots(c: [LogReal; 3]) -> Result<Vec<C64>> {
    // Coefficients of μ^{3−k}: 1, −c₁, c₂, −c₃.
    let coef: Vec<LogReal> = vec![
        LogReal { sign: 1.0, ln: 0.0 },
        LogReal { sign: -c[0].sign, ln: c[0].ln },
        LogReal { sign: c[1].sign, ln: c[1].ln },
        LogReal { sign: -c[2].sign, ln: c[2].ln },
    ];
    // Upper convex hull of (k, ln|coef_k|).
    let mut hull = vec![0usize];
    for k in 1..4 {
        if coef[k].ln == f64::NEG_INFINITY {
            continue;
        }
        while hull.len() >= 2 {
            let (i, j) = (hull[hull.len() - 2], hull[hull.len() - 1]);
            let s1 = (coef[j].ln - coef[i].ln) / (j - i) as f64;
            let s2 = (coef[k].ln - coef[j].ln) / (k - j) as f64;
            if s2 >= s1 - 1e-9 * s1.abs().max(1.0) {
                hull.pop();
            } else {
                break;
            }
        }
        hull.push(k);
    }
    if *hull.last().unwrap_or(&0) != 3 {
        return Err(Error::NonFinite { context: "vanishing determinant in period map" });
    }
    // Adjacent hull segments whose slopes differ by less than GROUP_GAP hold
    // roots that interfere at double precision; solve those together.
    const GROUP_GAP: f64 = 40.0;
    let slope = |i: usize, j: usize| (coef[j].ln - coef[i].ln) / (j - i) as f64;
    let mut groups = vec![hull[0]];
    for w in hull.windows(3) {
        if slope(w[0], w[1]) - slope(w[1], w[2]) >= GROUP_GAP {
            groups.push(w[1]);
        }
    }
    groups.push(3);
    let mut roots = Vec::with_capacity(3);
    for w in groups.windows(2) {
        let (i, j) = (w[0], w[1]);
        let deg = j - i;
        let ln_r = (coef[j].ln - coef[i].ln) / deg as f64;
        // Σ_{k=i..j} coef_k r^{j−k} x^{j−k}, divided by coef_i r^{deg}.
        let scaled: Vec<f64> = (i..=j)
            .map(|k| {
                let c = coef[k];
                if c.ln == f64::NEG_INFINITY {
                    0.0
                } else {
                    c.sign * (c.ln + (j - k) as f64 * ln_r - coef[i].ln - deg as f64 * ln_r).exp()
                }
            })
            .collect();
        // Monic companion matrix of x^deg + a₁x^{deg−1} + … with a_k = scaled[k]/scaled[0].
        let companion = ComplexMatrix::from_fn(deg, deg, |r, col| {
            if r == 0 {
                C64::new(-scaled[col + 1] / scaled[0], 0.0)
            } else if col + 1 == r {
                C64::new(1.0, 0.0)
            } else {
                C64::new(0.0, 0.0)
            }
        });
        for x in eigenvalues(&companion)? {
            roots.push(x.ln() + ln_r);
        }
    }
    Ok(roots)
}

/// Quasienergy offsets ε = iλ mod ω of the exact periodic problem, where e^{λT}
/// are the Floquet multipliers of dR/dt = M(t)R. Sorted by Im then Re.
///
/// The multipliers can span hundreds of orders of magnitude, so they are not
/// read off a single period map. Instead the characteristic polynomial is
/// assembled from tr Φ(T), the trace of its cofactor matrix (which obeys
/// Ψ' = (tr M − Mᵀ)Ψ) and det Φ(T) = exp∫tr M, each carried in log form.
pub fn monodromy_offsets(p: &DrivenQubitParams, rtol: f64) -> Result<Vec<C64>> {
    p.validate()?;
    let period = p.period();
    let m_of = |t: f64| {
        let m = crate::qubit::bloch_matrix(p, t);
        std::array::from_fn::<[f64; 3], 3, _>(|i| std::array::from_fn(|j| m[(i, j)]))
    };
    let cof_gen = |t: f64| {
        let m = m_of(t);
        let tr = m[0][0] + m[1][1] + m[2][2];
        std::array::from_fn::<[f64; 3], 3, _>(|i| std::array::from_fn(|j| if i == j { tr - m[j][i] } else { -m[j][i] }))
    };
    let substeps = 64;
    let (phi, lp) = scaled_period_map(m_of, period, substeps, rtol)?;
    let (psi, ls) = scaled_period_map(cof_gen, period, substeps, rtol)?;
    // Periodic integrand: the trapezoid rule converges geometrically.
    let nq = 512;
    let ln_det = (0..nq)
        .map(|k| {
            let m = m_of(period * k as f64 / nq as f64);
            m[0][0] + m[1][1] + m[2][2]
        })
        .sum::<f64>()
        * period
        / nq as f64;
    let c1 = LogReal::new(phi[0] + phi[4] + phi[8], lp);
    let c2 = LogReal::new(psi[0] + psi[4] + psi[8], ls);
    let c3 = LogReal { sign: 1.0, ln: ln_det };
    let omega = p.omega;
    let mut out: Vec<C64> = cubic_log_roots([c1, c2, c3])?
        .into_iter()
        .map(|ln_mu| {
            let eps = I * ln_mu / period;
            C64::new(eps.re - omega * (eps.re / omega).round(), eps.im)
        })
        .collect();
    out.sort_by(|a, b| a.im.total_cmp(&b.im).then(a.re.total_cmp(&b.re)));
    Ok(out)
}

/// iν for the frozen adiabatic eigenvalues at rate γ, as quasienergy offsets.
pub fn adiabatic_offsets(p: &DrivenQubitParams, gamma: f64) -> Vec<C64> {
    let (a, b, c) = adiabatic_eigenvalues_for_rate(p, gamma);
    let omega = p.omega;
    let mut out: Vec<C64> = [a, b, c]
        .iter()
        .map(|nu| {
            let eps = I * nu;
            C64::new(eps.re - omega * (eps.re / omega).round(), eps.im)
        })
        .collect();
    out.sort_by(|a, b| a.im.total_cmp(&b.im).then(a.re.total_cmp(&b.re)));
    out
}

/// (Re ε, IPR, label) for every non-edge state; requires a fitted spectrum.
pub fn ipr_vs_spectrum(spec: &FloquetSpectrum) -> Vec<(f64, f64, LadderLabel)> {
    spec.eigenvalues
        .iter()
        .zip(&spec.ipr)
        .zip(&spec.ladder_id)
        .filter(|(_, l)| **l != LadderLabel::EdgeArtifact)
        .map(|((z, ipr), l)| (z.re, *ipr, *l))
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SensitivityMode {
    /// γ₀ → γ₀ + ε.
    RateShift,
    /// ε added to the corner entry linking the two truncation edges.
    CornerCoupling,
}

impl std::str::FromStr for SensitivityMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "rate_shift" | "rate-shift" => Ok(Self::RateShift),
            "corner_coupling" | "corner-coupling" => Ok(Self::CornerCoupling),
            other => Err(Error::InvalidArgument(format!("unknown sensitivity mode '{other}'"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SensitivityRow {
    pub m_max: usize,
    /// Displacement over all bulk states.
    pub d_bulk: f64,
    /// Over ladder members only.
    pub d_ladder: Option<f64>,
    /// Over scattered states only.
    pub d_scattered: Option<f64>,
    pub scattered: usize,
    pub bulk: usize,
}

#[derive(Clone, Debug)]
pub struct SensitivityReport {
    pub mode: SensitivityMode,
    pub epsilon: f64,
    pub rows: Vec<SensitivityRow>,
    /// log d_bulk against m_max.
    pub fit: LinearFit,
    /// s > 0 with R² > 0.9 and d growing at least twofold across the sizes.
    pub exponential: bool,
}

/// Spectral displacement of the bulk under a small perturbation, per size.
///
/// d is the largest distance from a bulk eigenvalue of H_F to the nearest
/// eigenvalue of the perturbed H_F′, floored at machine precision times
/// ‖H_F‖_F so that log d stays finite.
pub fn sensitivity_probe(
    p: &DrivenQubitParams,
    m_max_list: &[usize],
    epsilon: f64,
    mode: SensitivityMode,
    edge_margin: usize,
    tol: f64,
) -> Result<SensitivityReport> {
    if !(epsilon > 0.0) {
        return Err(Error::InvalidArgument("epsilon must be positive".into()));
    }
    if m_max_list.len() < 3 {
        return Err(Error::InvalidArgument("sensitivity needs at least three sizes".into()));
    }
    let mut rows = Vec::with_capacity(m_max_list.len());
    for &m in m_max_list {
        let hf = build_floquet(p, m)?;
        let mut spec = floquet_spectrum(&hf, tol)?;
        let report = ladder_fit(&mut spec, edge_margin)?;
        let perturbed = match mode {
            SensitivityMode::RateShift => {
                let mut q = *p;
                q.gamma0 += epsilon;
                build_floquet(&q, m)?.matrix
            }
            SensitivityMode::CornerCoupling => {
                let mut h = hf.matrix.clone();
                let n = h.rows();
                h[(n - 1, 0)] += C64::new(epsilon, 0.0);
                h
            }
        };
        let shifted = eigenvalues(&perturbed)?;
        let floor = f64::EPSILON * hf.matrix.frobenius_norm();
        let disp = |i: usize| {
            let z = spec.eigenvalues[i];
            shifted.iter().map(|w| (z - w).norm()).fold(f64::INFINITY, f64::min).max(floor)
        };
        let mut d_bulk: f64 = 0.0;
        let mut d_ladder: Option<f64> = None;
        let mut d_scattered: Option<f64> = None;
        for (i, l) in report.labels.iter().enumerate() {
            let slot = match l {
                LadderLabel::EdgeArtifact => continue,
                LadderLabel::Ladder(_) => &mut d_ladder,
                LadderLabel::Scattered => &mut d_scattered,
            };
            let d = disp(i);
            d_bulk = d_bulk.max(d);
            *slot = Some(slot.map_or(d, |s: f64| s.max(d)));
        }
        rows.push(SensitivityRow {
            m_max: m,
            d_bulk,
            d_ladder,
            d_scattered,
            scattered: report.scattered.len(),
            bulk: report.bulk_count,
        });
    }
    let x: Vec<f64> = rows.iter().map(|r| r.m_max as f64).collect();
    let y: Vec<f64> = rows.iter().map(|r| r.d_bulk.ln()).collect();
    let fit = linear_fit(&x, &y)?;
    // A perfect fit to rounding-level drift is not growth.
    let span = x.iter().copied().fold(f64::NEG_INFINITY, f64::max) - x.iter().copied().fold(f64::INFINITY, f64::min);
    let exponential = fit.slope > 0.0 && fit.r_squared > 0.9 && fit.slope * span >= std::f64::consts::LN_2;
    Ok(SensitivityReport {
        mode,
        epsilon,
        exponential,
        rows,
        fit,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fig3a() -> DrivenQubitParams {
        DrivenQubitParams::new(0.05, 0.0, 0.1, 0.05).unwrap()
    }

    #[test]
    fn block_structure() {
        let p = DrivenQubitParams::new(0.05, 0.02, 0.1, 0.05).unwrap();
        let hf = build_floquet(&p, 3).unwrap();
        assert_eq!(hf.dim(), 21);
        let h = &hf.matrix;
        for i in 0..21 {
            for j in 0..21 {
                let (ri, rj): (usize, usize) = (i / 3, j / 3);
                if ri.abs_diff(rj) > 1 {
                    assert_eq!(h[(i, j)], C64::new(0.0, 0.0));
                }
            }
        }
        // Rung m = −3 diagonal: ωm + i(−γ₀, 0, −γ₀).
        assert!((h[(0, 0)] - C64::new(-0.15, -0.1)).norm() < 1e-15);
        assert!((h[(1, 1)] - C64::new(-0.15, 0.0)).norm() < 1e-15);
        assert_eq!(h[(0, 3)], C64::new(0.0, -0.05));
        assert_eq!(h[(1, 4)], C64::new(0.0, 0.0));
        assert_eq!(h[(0, 1)], C64::new(0.0, -0.05));
        assert!(build_floquet(&p, 0).is_err());
    }

    #[test]
    fn unitary_limit_closed_form() {
        let p = DrivenQubitParams::new(0.05, 0.03, 0.0, 0.07).unwrap();
        let m_max = 6;
        let spec = floquet_spectrum(&build_floquet(&p, m_max).unwrap(), 1e-12).unwrap();
        let rho = p.coupling();
        let mut want = Vec::new();
        for m in -(m_max as i64)..=m_max as i64 {
            for s in [-1.0, 0.0, 1.0] {
                want.push(0.07 * m as f64 + s * rho);
            }
        }
        let mut got: Vec<C64> = spec.eigenvalues.clone();
        got.sort_by(|a, b| a.re.total_cmp(&b.re));
        want.sort_by(f64::total_cmp);
        for (g, w) in got.iter().zip(&want) {
            assert!((g - C64::new(*w, 0.0)).norm() < 1e-10, "{g} vs {w}");
        }
    }

    #[test]
    fn ipr_limits() {
        let mut e = vec![C64::new(0.0, 0.0); 9];
        e[4] = C64::new(0.0, 2.0);
        assert_eq!(ipr(&e), 1.0);
        let flat = vec![C64::new(0.3, -0.1); 9];
        assert!((ipr(&flat) - 9.0).abs() < 1e-12);
        // δ = g = 0 with γ₀ = 0: every state sits on one site.
        let p = DrivenQubitParams::new(0.0, 0.0, 0.0, 0.1).unwrap();
        let spec = floquet_spectrum(&build_floquet(&p, 4).unwrap(), 1e-12).unwrap();
        assert!(spec.ipr.iter().all(|&x| (x - 1.0).abs() < 1e-12));
    }

    #[test]
    fn middle_component_exact_ladder() {
        let p = DrivenQubitParams::new(0.0, 0.0, 0.3, 0.1).unwrap();
        let spec = floquet_spectrum(&build_floquet(&p, 10).unwrap(), 1e-12).unwrap();
        for m in -10..=10 {
            let target = C64::new(0.1 * m as f64, 0.0);
            assert!(spec.eigenvalues.iter().any(|z| (z - target).norm() < 1e-12));
        }
    }

    #[test]
    fn unitary_ladders_fold_to_three() {
        let p = DrivenQubitParams::new(0.02, 0.01, 0.0, 0.05).unwrap();
        let mut spec = floquet_spectrum(&build_floquet(&p, 40).unwrap(), 1e-12).unwrap();
        let rep = ladder_fit(&mut spec, 10).unwrap();
        assert_eq!(rep.ladder_count, 3);
        assert_eq!(rep.ladders.len(), 3);
        assert!(rep.scattered.is_empty());
        assert!(rep.max_residual() <= 1e-10);
        assert!(matches!(ladder_fit(&mut spec, 40), Err(Error::NoBulk { .. })));
    }

    #[test]
    fn fig3a_three_ladders_small() {
        let p = fig3a();
        let mut spec = floquet_spectrum(&build_floquet(&p, 60).unwrap(), 1e-10).unwrap();
        let rep = ladder_fit(&mut spec, 25).unwrap();
        assert_eq!(rep.ladder_count, 3, "{:?}", rep.ladders);
        assert!(rep.scattered.is_empty());
        assert!(rep.max_residual() <= 1e-6 * p.omega);
        let refs = monodromy_offsets(&p, 1e-12).unwrap();
        let mut got: Vec<C64> = Vec::new();
        for l in &rep.ladders {
            for _ in 0..l.multiplicity {
                got.push(l.offset);
            }
        }
        for r in refs {
            let fold = |z: C64| {
                let d = z - r;
                C64::new(d.re - p.omega * (d.re / p.omega).round(), d.im).norm()
            };
            assert!(got.iter().any(|g| fold(*g) < 1e-8), "reference {r} missing from {got:?}");
        }
    }

    #[test]
    fn translation_covariance() {
        let p = DrivenQubitParams::new(0.05, 0.02, 0.1, 0.05).unwrap();
        let hf = build_floquet(&p, 40).unwrap();
        let mut spec = floquet_spectrum(&hf, 1e-10).unwrap();
        let rep = ladder_fit(&mut spec, 15).unwrap();
        let bound = (40 - 15 - 1) as f64;
        for (i, z) in spec.eigenvalues.iter().enumerate() {
            if rep.labels[i] == LadderLabel::EdgeArtifact || spec.center_of_mass[i].abs() > bound {
                continue;
            }
            let shifted = z + p.omega;
            let d = spec.eigenvalues.iter().map(|w| (w - shifted).norm()).fold(f64::INFINITY, f64::min);
            assert!(d < 1e-6, "{z}: {d:e}");
        }
    }

    #[test]
    fn monodromy_strong_damping() {
        // g = 0: the z component decays at the mean rate, and the exponents sum to ∫tr M/T.
        let p = DrivenQubitParams::new(0.05, 0.0, 5.0, 0.05).unwrap();
        let offs = monodromy_offsets(&p, 1e-12).unwrap();
        let sum: f64 = offs.iter().map(|z| z.im).sum();
        assert!((sum + 10.0).abs() < 1e-8, "{offs:?}");
        assert!(offs.iter().any(|z| (z - C64::new(0.0, -5.0)).norm() < 1e-6), "{offs:?}");
        assert!(offs[2].im < 0.0 && offs[2].im > -0.01);
    }

    #[test]
    fn monodromy_matches_unitary_and_frozen_limits() {
        let p = DrivenQubitParams::new(0.03, 0.04, 0.0, 0.2).unwrap();
        let offs = monodromy_offsets(&p, 1e-12).unwrap();
        for b in adiabatic_offsets(&p, 0.0) {
            assert!(offs.iter().any(|a| (a - b).norm() < 1e-9), "{b} not in {offs:?}");
        }
    }

    #[test]
    fn sensitivity_flat_for_unitary_tilt() {
        let p = DrivenQubitParams::new(0.05, 0.02, 0.0, 0.05).unwrap();
        let rep = sensitivity_probe(&p, &[20, 30, 40], 1e-8, SensitivityMode::RateShift, 8, 1e-10).unwrap();
        assert!(rep.fit.slope.abs() < 0.01, "{:?}", rep.rows);
        assert!(!rep.exponential, "{:?} {:?}", rep.fit, rep.rows);
        assert!(sensitivity_probe(&p, &[20, 30], 1e-8, SensitivityMode::RateShift, 8, 1e-10).is_err());
        assert!("corner_coupling".parse::<SensitivityMode>().is_ok());
    }
}
