//! Command dispatch and artifact writing.
//!
//! Every run writes `{command}_{preset}.{csv,json,svg}` for the requested
//! formats plus `{command}_{preset}.manifest`, which holds the code version,
//! wall time and worker count as comments followed by the resolved config.
//! CSV and JSON contents depend only on the config and seed.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde_json::{json, Value};

use floqlind_core::dynamics::{adiabaticity_diagnostic, drop_events, inversion_series, uniform_grid, DropEvent};
use floqlind_core::floquet::{
    adiabatic_offsets, build_floquet, floquet_spectrum, ipr_vs_spectrum, ladder_fit, monodromy_offsets,
    scattered_between, sensitivity_probe, LadderReport, SensitivityMode,
};
use floqlind_core::lie::{
    closure, ep_existence_probe, five_generator_set, jacobi_residual, model_generators, relaxation_model,
    GeneratorMode, LieClosure, ProbePoint, SuperOpElement,
};
use floqlind_core::qubit::{adiabatic_eigenvalues, gamma_of_t, locate_eps, model_spec, Branch, DrivenQubitParams};
use floqlind_core::{FloquetSpectrum, LadderLabel, C64};

use crate::config::{Command, ConfigError, RunConfig};
use crate::emit::{complex, emit_csv, emit_json, emit_svg, num, Cell, EmitError, Table};
use crate::oracle::{run_suite, wei_norman_vs_exp, wei_norman_vs_stepped};
use crate::svg::{Plot, Series, Style, PALETTE};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

pub const EXIT_OK: i32 = 0;
pub const EXIT_COMPUTE: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_CHECK_FAILED: i32 = 3;
pub const EXIT_IO: i32 = 4;

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("computation failed: {0}")]
    Compute(#[from] floqlind_core::Error),
    #[error(transparent)]
    Emit(#[from] EmitError),
    #[error("cannot create output directory {path}: {source}")]
    OutDir {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl RunError {
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Config(_) => EXIT_CONFIG,
            RunError::Compute(_) => EXIT_COMPUTE,
            RunError::Emit(_) | RunError::OutDir { .. } => EXIT_IO,
        }
    }

    /// Short machine-readable category.
    pub fn kind(&self) -> &'static str {
        match self {
            RunError::Config(ConfigError::Parse { .. }) => "parse",
            RunError::Config(ConfigError::Validation { .. }) => "validation",
            RunError::Config(ConfigError::Io { .. }) => "io",
            RunError::Compute(_) => "compute",
            RunError::Emit(_) | RunError::OutDir { .. } => "io",
        }
    }

    /// `{schema, command, kind, message, exit_code}`.
    pub fn to_json(&self, command: Option<Command>) -> Value {
        json!({
            "schema": 1,
            "command": command.map(|c| c.name()),
            "kind": self.kind(),
            "message": self.to_string(),
            "exit_code": self.exit_code(),
        })
    }
}

#[derive(Clone, Debug)]
pub struct RunOutcome {
    pub files: Vec<PathBuf>,
    /// Human-readable result lines.
    pub summary: Vec<String>,
    pub exit_code: i32,
}

/// What a command produced before it is written out.
#[derive(Default)]
struct Artifacts {
    table: Option<Table>,
    json: Option<Value>,
    plot: Option<Plot>,
    summary: Vec<String>,
    /// A self-check did not pass.
    failed: bool,
}

/// Write the error JSON for a failed run into `out`.
pub fn write_error(out: &Path, command: Option<Command>, err: &RunError) -> Result<PathBuf, EmitError> {
    std::fs::create_dir_all(out).map_err(|source| EmitError::Io {
        path: out.display().to_string(),
        source,
    })?;
    emit_json(&out.join("error.json"), &err.to_json(command))
}

/// Execute one command and write its artifacts.
pub fn run(cfg: &RunConfig) -> Result<RunOutcome, RunError> {
    let start = Instant::now();
    cfg.params.validate()?;
    let art = match cfg.command {
        Command::Evolve => evolve(cfg)?,
        Command::Adiabatic => adiabatic(cfg)?,
        Command::Ep => ep(cfg)?,
        Command::Floquet => floquet(cfg)?,
        Command::Ipr => ipr(cfg)?,
        Command::Algebra => algebra(cfg)?,
        Command::Sensitivity => sensitivity(cfg)?,
        Command::OracleCheck => oracle_check(cfg)?,
    };
    std::fs::create_dir_all(&cfg.out).map_err(|source| RunError::OutDir {
        path: cfg.out.display().to_string(),
        source,
    })?;
    let stem = format!("{}_{}", cfg.command.name(), cfg.preset);
    let mut files = Vec::new();
    if let (true, Some(t)) = (cfg.formats.csv, &art.table) {
        files.push(emit_csv(&cfg.out.join(format!("{stem}.csv")), t)?);
    }
    if let (true, Some(v)) = (cfg.formats.json, &art.json) {
        files.push(emit_json(&cfg.out.join(format!("{stem}.json")), v)?);
    }
    if let (true, Some(p)) = (cfg.formats.svg, &art.plot) {
        files.push(emit_svg(&cfg.out.join(format!("{stem}.svg")), p)?);
    }
    let manifest = cfg.out.join(format!("{stem}.manifest"));
    let mut text = String::new();
    let _ = writeln!(text, "# floqlind {VERSION}");
    let _ = writeln!(text, "# wall_time_s = {:.3}", start.elapsed().as_secs_f64());
    let _ = writeln!(text, "# workers = 1");
    for f in &files {
        let name = f.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
        let _ = writeln!(text, "# file = {name}");
    }
    text.push_str(&cfg.to_ini());
    std::fs::write(&manifest, text).map_err(|source| {
        RunError::Emit(EmitError::Io {
            path: manifest.display().to_string(),
            source,
        })
    })?;
    files.push(manifest);
    Ok(RunOutcome {
        files,
        summary: art.summary,
        exit_code: if art.failed { EXIT_CHECK_FAILED } else { EXIT_OK },
    })
}

fn branch_name(b: Branch) -> &'static str {
    match b {
        Branch::Zero => "0",
        Branch::Plus => "+",
        Branch::Minus => "-",
    }
}

fn label_name(l: LadderLabel) -> String {
    l.to_string()
}

fn median(mut v: Vec<f64>) -> Option<f64> {
    if v.is_empty() {
        return None;
    }
    v.sort_by(|a, b| a.total_cmp(b));
    let n = v.len();
    Some(if n % 2 == 1 { v[n / 2] } else { 0.5 * (v[n / 2 - 1] + v[n / 2]) })
}

/// EP times up to `t_end`.
fn eps_until(p: &DrivenQubitParams, t_end: f64) -> Vec<f64> {
    let n = (t_end / p.period()).ceil().max(1.0) as usize;
    locate_eps(p, n).into_iter().filter(|&t| t <= t_end).collect()
}

fn evolve(cfg: &RunConfig) -> Result<Artifacts, RunError> {
    let (p, n) = (&cfg.params, &cfg.numeric);
    let branch = cfg.branch.unwrap_or_else(|| Branch::slowest(p));
    let grid = uniform_grid(0.0, n.t_end, n.dt);
    let ts = adiabaticity_diagnostic(p, branch, &grid, n.rtol)?;
    let inversion = inversion_series(&ts)?;
    let cols = [
        "rx",
        "ry",
        "rz",
        "bloch_norm",
        "purity",
        "trace_distance",
        "adiabatic_norm",
        "complex_flag",
    ];
    let data: Vec<&[f64]> = cols.iter().map(|c| ts.get(c)).collect::<Result<_, _>>()?;
    let inv = inversion.get("inversion")?;
    let mut header = vec!["t"];
    header.extend(cols);
    header.push("inversion");
    let mut table = Table::new(&header);
    for (k, t) in ts.times.iter().enumerate() {
        let mut row: Vec<Cell> = vec![(*t).into()];
        row.extend(data.iter().map(|c| Cell::Num(c[k])));
        row.push(inv[k].into());
        table.push(row);
    }
    let norm = ts.get("bloch_norm")?;
    let eps = eps_until(p, n.t_end);
    let drops = drop_events(&ts.times, norm, n.drop_factor);
    let nearest = |d: &DropEvent| eps.iter().map(|&t| d.distance_to(t)).fold(f64::INFINITY, f64::min);
    let increase = norm.windows(2).map(|w| w[1] - w[0]).fold(0.0, f64::max);
    let final_norm = *norm.last().unwrap_or(&f64::NAN);
    let json = json!({
        "schema": 1,
        "command": "evolve",
        "preset": cfg.preset,
        "branch": branch_name(branch),
        "period": num(p.period()),
        "ep_times": eps.iter().map(|&t| num(t)).collect::<Vec<_>>(),
        "drop_events": drops.iter().map(|d| json!({
            "start": num(d.start),
            "end": num(d.end),
            "peak_rate": num(d.peak_rate),
            "distance_to_ep": num(nearest(d)),
        })).collect::<Vec<_>>(),
        "max_norm_increase": num(increase),
        "final_bloch_norm": num(final_norm),
    });
    let pts = |v: &[f64]| -> Vec<(f64, f64)> { ts.times.iter().copied().zip(v.iter().copied()).collect() };
    let plot = Plot {
        title: format!("Relaxation from adiabatic branch {} ({})", branch_name(branch), cfg.preset),
        x_label: "t".into(),
        y_label: "value".into(),
        series: vec![
            Series {
                name: "|R|".into(),
                points: pts(norm),
                style: Style::Line,
                color: PALETTE[0],
            },
            Series {
                name: "trace distance".into(),
                points: pts(ts.get("trace_distance")?),
                style: Style::Line,
                color: PALETTE[1],
            },
            Series {
                name: "<sz>".into(),
                points: pts(inv),
                style: Style::Line,
                color: PALETTE[2],
            },
        ],
        markers: eps.clone(),
    };
    let summary = vec![
        format!("branch {} over t in [0, {}]", branch_name(branch), n.t_end),
        format!("{} drop events, {} EPs, final |R| = {:e}", drops.len(), eps.len(), final_norm),
    ];
    Ok(Artifacts {
        table: Some(table),
        json: Some(json),
        plot: Some(plot),
        summary,
        failed: false,
    })
}

fn adiabatic(cfg: &RunConfig) -> Result<Artifacts, RunError> {
    let (p, n) = (&cfg.params, &cfg.numeric);
    let grid = uniform_grid(0.0, n.t_end, n.dt);
    let mut table = Table::new(&[
        "t",
        "gamma",
        "nu0_re",
        "nu0_im",
        "nu_plus_re",
        "nu_plus_im",
        "nu_minus_re",
        "nu_minus_im",
    ]);
    let mut series: [Vec<(f64, f64)>; 4] = Default::default();
    for &t in &grid {
        let tr = adiabatic_eigenvalues(p, t);
        table.push(vec![
            t.into(),
            gamma_of_t(p, t).into(),
            tr.nu0.re.into(),
            tr.nu0.im.into(),
            tr.nu_plus.re.into(),
            tr.nu_plus.im.into(),
            tr.nu_minus.re.into(),
            tr.nu_minus.im.into(),
        ]);
        series[0].push((t, tr.nu0.re));
        series[1].push((t, tr.nu_plus.re));
        series[2].push((t, tr.nu_minus.re));
        series[3].push((t, tr.nu_plus.im));
    }
    let eps = eps_until(p, n.t_end);
    let names = ["Re nu0", "Re nu+", "Re nu-", "Im nu+"];
    let plot = Plot {
        title: format!("Adiabatic eigenvalues ({})", cfg.preset),
        x_label: "t".into(),
        y_label: "nu".into(),
        series: series
            .into_iter()
            .zip(names)
            .enumerate()
            .map(|(k, (points, name))| Series {
                name: name.into(),
                points,
                style: Style::Line,
                color: PALETTE[k],
            })
            .collect(),
        markers: eps.clone(),
    };
    let json = json!({
        "schema": 1,
        "command": "adiabatic",
        "preset": cfg.preset,
        "samples": grid.len(),
        "ep_times": eps.iter().map(|&t| num(t)).collect::<Vec<_>>(),
    });
    Ok(Artifacts {
        summary: vec![format!("{} samples, {} EPs", grid.len(), eps.len())],
        table: Some(table),
        json: Some(json),
        plot: Some(plot),
        failed: false,
    })
}

/// ωt = ±arccos(2√(g²+δ²)/γ₀ − 1) + 2πn for n = 0..periods, ascending.
fn closed_form_eps(p: &DrivenQubitParams, periods: usize) -> Vec<f64> {
    if !p.has_eps() {
        return Vec::new();
    }
    let phi = (2.0 * p.coupling() / p.gamma0 - 1.0).clamp(-1.0, 1.0).acos();
    let mut out = Vec::new();
    for k in 0..periods {
        let base = 2.0 * std::f64::consts::PI * k as f64;
        out.push((base + phi) / p.omega);
        if phi > 0.0 {
            out.push((base + 2.0 * std::f64::consts::PI - phi) / p.omega);
        }
    }
    out.sort_by(|a, b| a.total_cmp(b));
    out
}

fn ep(cfg: &RunConfig) -> Result<Artifacts, RunError> {
    let (p, n) = (&cfg.params, &cfg.numeric);
    let periods = n.periods;
    let eps = locate_eps(p, periods - 1);
    let closed = closed_form_eps(p, periods);
    let mut table = Table::new(&["index", "t", "gamma", "gap", "period", "t_closed_form"]);
    for (k, &t) in eps.iter().enumerate() {
        let tr = adiabatic_eigenvalues(p, t);
        table.push(vec![
            k.into(),
            t.into(),
            gamma_of_t(p, t).into(),
            (tr.nu_plus - tr.nu_minus).norm().into(),
            ((t / p.period()).floor() as usize).into(),
            closed.get(k).copied().into(),
        ]);
    }
    if table.rows.is_empty() {
        return Err(floqlind_core::Error::InvalidArgument(format!(
            "no exceptional points: gamma0 = {} < sqrt(g^2 + delta^2) = {}",
            p.gamma0,
            p.coupling()
        ))
        .into());
    }
    let t_end = periods as f64 * p.period();
    let grid = uniform_grid(0.0, t_end, t_end / 2000.0);
    let plot = Plot {
        title: format!("Dephasing rate and EP threshold ({})", cfg.preset),
        x_label: "t".into(),
        y_label: "gamma".into(),
        series: vec![
            Series {
                name: "gamma(t)".into(),
                points: grid.iter().map(|&t| (t, gamma_of_t(p, t))).collect(),
                style: Style::Line,
                color: PALETTE[0],
            },
            Series {
                name: "2 sqrt(g^2+delta^2)".into(),
                points: vec![(0.0, 2.0 * p.coupling()), (t_end, 2.0 * p.coupling())],
                style: Style::Line,
                color: PALETTE[1],
            },
        ],
        markers: eps.clone(),
    };
    let json = json!({
        "schema": 1,
        "command": "ep",
        "preset": cfg.preset,
        "threshold_gamma": num(2.0 * p.coupling()),
        "ep_times": eps.iter().map(|&t| num(t)).collect::<Vec<_>>(),
        "closed_form": closed.iter().map(|&t| num(t)).collect::<Vec<_>>(),
    });
    let first: Vec<String> = eps.iter().take(2).map(|t| format!("{t:.4}")).collect();
    Ok(Artifacts {
        summary: vec![format!("{} EPs in {} period(s); first: {}", eps.len(), periods, first.join(", "))],
        table: Some(table),
        json: Some(json),
        plot: Some(plot),
        failed: false,
    })
}

/// Diagonalized and ladder-fitted Floquet spectrum of the config.
pub fn fitted_spectrum(cfg: &RunConfig) -> floqlind_core::Result<(FloquetSpectrum, LadderReport)> {
    let n = &cfg.numeric;
    let hf = build_floquet(&cfg.params, n.m_max)?;
    let mut spec = floquet_spectrum(&hf, n.tol)?;
    let report = ladder_fit(&mut spec, n.edge_margin)?;
    Ok((spec, report))
}

/// Scatter series grouped by label: one per ladder, then scattered, then edge.
fn label_series(points: &[(f64, f64, LadderLabel)], ladders: usize) -> Vec<Series> {
    let mut out = Vec::new();
    let mut groups: Vec<(LadderLabel, String, &'static str)> = (0..ladders)
        .map(|k| (LadderLabel::Ladder(k), format!("ladder {k}"), PALETTE[k % 4]))
        .collect();
    groups.push((LadderLabel::Scattered, "scattered".into(), PALETTE[4]));
    groups.push((LadderLabel::EdgeArtifact, "edge".into(), PALETTE[5]));
    for (label, name, color) in groups {
        let pts: Vec<(f64, f64)> = points.iter().filter(|q| q.2 == label).map(|q| (q.0, q.1)).collect();
        if !pts.is_empty() {
            out.push(Series {
                name,
                points: pts,
                style: Style::Points,
                color,
            });
        }
    }
    out
}

fn floquet(cfg: &RunConfig) -> Result<Artifacts, RunError> {
    let p = &cfg.params;
    let (spec, report) = fitted_spectrum(cfg)?;
    let mono = monodromy_offsets(p, 1e-12)?;
    let mut offsets: Vec<C64> = report.ladders.iter().map(|l| l.offset).collect();
    offsets.extend(mono.iter().copied());
    let between = scattered_between(&spec, &report, &offsets);
    let mut table = Table::new(&["index", "re", "im", "ipr", "center_of_mass", "ladder_id"]);
    for (k, z) in spec.eigenvalues.iter().enumerate() {
        table.push(vec![
            k.into(),
            z.re.into(),
            z.im.into(),
            spec.ipr[k].into(),
            spec.center_of_mass[k].into(),
            label_name(spec.ladder_id[k]).into(),
        ]);
    }
    let json = json!({
        "schema": 1,
        "command": "floquet",
        "preset": cfg.preset,
        "m_max": spec.m_max,
        "omega": num(spec.omega),
        "edge_margin": cfg.numeric.edge_margin,
        "eigensolver_residual": num(spec.residual),
        "eigenvalues": spec.eigenvalues.iter().map(|&z| complex(z)).collect::<Vec<_>>(),
        "ipr": spec.ipr.iter().map(|&x| num(x)).collect::<Vec<_>>(),
        "ladder_id": spec.ladder_id.iter().map(|&l| label_name(l)).collect::<Vec<_>>(),
        "center_of_mass": spec.center_of_mass.iter().map(|&x| num(x)).collect::<Vec<_>>(),
        "ladders": report.ladders.iter().map(|l| json!({
            "offset": complex(l.offset),
            "count": l.count,
            "multiplicity": l.multiplicity,
            "residual": num(l.residual),
        })).collect::<Vec<_>>(),
        "ladder_count": report.ladder_count,
        "reference_offsets": {
            "monodromy": mono.iter().map(|&z| complex(z)).collect::<Vec<_>>(),
            "adiabatic_peak_rate": adiabatic_offsets(p, 2.0 * p.gamma0).into_iter().map(complex).collect::<Vec<_>>(),
            "adiabatic_mean_rate": adiabatic_offsets(p, p.gamma0).into_iter().map(complex).collect::<Vec<_>>(),
        },
        "bulk_count": report.bulk_count,
        "edge_count": report.edge_count,
        "expected_per_ladder": report.expected_per_ladder,
        "cluster_tol": num(report.cluster_tol),
        "scattered": {
            "count": report.scattered.len(),
            "fraction": num(report.scattered_fraction()),
            "between_offsets": between,
        },
    });
    let points: Vec<(f64, f64, LadderLabel)> = spec
        .eigenvalues
        .iter()
        .zip(&spec.ladder_id)
        .map(|(z, l)| (z.re, z.im, *l))
        .collect();
    let plot = Plot {
        title: format!("Floquet spectrum, m_max = {} ({})", spec.m_max, cfg.preset),
        x_label: "Re eps".into(),
        y_label: "Im eps".into(),
        series: label_series(&points, report.ladders.len()),
        markers: Vec::new(),
    };
    let summary = vec![
        format!(
            "{} states, {} bulk, {} ladders (states {}), max ladder residual {:e}",
            spec.eigenvalues.len(),
            report.bulk_count,
            report.ladder_count,
            report.ladders.len(),
            report.max_residual()
        ),
        format!(
            "scattered {} ({:.3} of bulk), {} between ladder offsets",
            report.scattered.len(),
            report.scattered_fraction(),
            between
        ),
    ];
    Ok(Artifacts {
        table: Some(table),
        json: Some(json),
        plot: Some(plot),
        summary,
        failed: false,
    })
}

fn ipr(cfg: &RunConfig) -> Result<Artifacts, RunError> {
    let (spec, report) = fitted_spectrum(cfg)?;
    let rows = ipr_vs_spectrum(&spec);
    let mut table = Table::new(&["re", "ipr", "ladder_id"]);
    for (re, ipr, l) in &rows {
        table.push(vec![(*re).into(), (*ipr).into(), label_name(*l).into()]);
    }
    let ladder_ipr: Vec<f64> = rows.iter().filter(|r| matches!(r.2, LadderLabel::Ladder(_))).map(|r| r.1).collect();
    let scattered_ipr: Vec<f64> = rows.iter().filter(|r| r.2 == LadderLabel::Scattered).map(|r| r.1).collect();
    let bulk_ipr: Vec<f64> = rows.iter().map(|r| r.1).collect();
    let json = json!({
        "schema": 1,
        "command": "ipr",
        "preset": cfg.preset,
        "m_max": spec.m_max,
        "states": spec.eigenvalues.len(),
        "plotted": rows.len(),
        "edge_count": report.edge_count,
        "median_ipr": {
            "bulk": median(bulk_ipr.clone()).map(num),
            "ladder": median(ladder_ipr.clone()).map(num),
            "scattered": median(scattered_ipr.clone()).map(num),
        },
        "ipr_range": [num(bulk_ipr.iter().copied().fold(f64::INFINITY, f64::min)),
                      num(bulk_ipr.iter().copied().fold(0.0, f64::max))],
    });
    let plot = Plot {
        title: format!("IPR against Re eps, m_max = {} ({})", spec.m_max, cfg.preset),
        x_label: "Re eps".into(),
        y_label: "IPR".into(),
        series: label_series(&rows, report.ladders.len()),
        markers: Vec::new(),
    };
    let fmt_med = |v: Vec<f64>| median(v).map_or("-".to_string(), |m| format!("{m:.4}"));
    Ok(Artifacts {
        summary: vec![format!(
            "{} non-edge states; median IPR ladder {} scattered {}",
            rows.len(),
            fmt_med(ladder_ipr),
            fmt_med(scattered_ipr)
        )],
        table: Some(table),
        json: Some(json),
        plot: Some(plot),
        failed: false,
    })
}

fn closure_json(name: &str, gens: &[SuperOpElement], c: &LieClosure) -> Value {
    json!({
        "name": name,
        "generators": gens.iter().map(|g| g.label.clone().unwrap_or_default()).collect::<Vec<_>>(),
        "dim": c.dim,
        "generations": c.generations,
        "closure_residual": num(c.closure_residual()),
        "jacobi_residual": num(jacobi_residual(&c.structure_constants)),
        "abelian": c.is_abelian(),
    })
}

fn algebra(cfg: &RunConfig) -> Result<Artifacts, RunError> {
    let (p, n) = (&cfg.params, &cfg.numeric);
    let model = model_spec(p);
    let relax = relaxation_model(1.0, [0.2, 0.5, 0.3])?;
    let sets: Vec<(&str, Vec<SuperOpElement>)> = vec![
        ("model_pauli_strings", model_generators(&model, GeneratorMode::PauliStrings, p.period())?),
        ("model_physical", model_generators(&model, GeneratorMode::Physical, p.period())?),
        ("five_generator_set", five_generator_set()),
        (
            "commuting_pair",
            vec![SuperOpElement::pauli_string(3, 0), SuperOpElement::pauli_string(0, 3)],
        ),
        ("relaxation_model", model_generators(&relax, GeneratorMode::Physical, 1.0)?),
    ];
    let mut table = Table::new(&["section", "name", "quantity", "value"]);
    let mut closures = Vec::new();
    for (name, gens) in &sets {
        let c = closure(gens, 16)?;
        table.push(vec!["closure".into(), (*name).into(), "dim".into(), c.dim.into()]);
        table.push(vec![
            "closure".into(),
            (*name).into(),
            "jacobi_residual".into(),
            jacobi_residual(&c.structure_constants).into(),
        ]);
        closures.push(closure_json(name, gens, &c));
    }
    let small = wei_norman_vs_exp(1.0, [0.2, 0.5, 0.3], 50, 1e-12)?;
    table.push(vec!["wei_norman".into(), "relaxation_model".into(), "max_error".into(), small.into()]);
    let driven = wei_norman_vs_stepped(p, 64, n.rtol.min(1e-10))?;
    table.push(vec![
        "wei_norman".into(),
        "driven_one_period".into(),
        "max_error".into(),
        driven.max_error().into(),
    ]);
    table.push(vec![
        "wei_norman".into(),
        "driven_one_period".into(),
        "breakdown_t".into(),
        driven.breakdown.into(),
    ]);
    let points = vec![
        ProbePoint {
            label: "model".into(),
            model: model.clone(),
            period: p.period(),
        },
        ProbePoint {
            label: "relaxation_model".into(),
            model: relax,
            period: 1.0,
        },
    ];
    let mut probes = Vec::new();
    for mode in [GeneratorMode::PauliStrings, GeneratorMode::Physical] {
        let mode_name = match mode {
            GeneratorMode::PauliStrings => "pauli_strings",
            GeneratorMode::Physical => "physical",
        };
        for r in ep_existence_probe(&points, mode, n.samples)? {
            let name = format!("{}/{}", r.label, mode_name);
            table.push(vec!["probe".into(), name.clone().into(), "closure_dim".into(), r.closure_dim.into()]);
            table.push(vec!["probe".into(), name.clone().into(), "has_ep".into(), (r.has_ep as usize).into()]);
            table.push(vec!["probe".into(), name.clone().into(), "min_gap".into(), r.min_gap.into()]);
            probes.push(json!({
                "label": r.label,
                "mode": mode_name,
                "has_ep": r.has_ep,
                "closure_dim": r.closure_dim,
                "min_gap": num(r.min_gap),
                "t_min_gap": num(r.t_min_gap),
                "gram_condition": num(r.gram_condition),
            }));
        }
    }
    let curve: Vec<(f64, f64)> = driven
        .times
        .iter()
        .zip(&driven.errors)
        .map(|(&t, &e)| (t, e.max(1e-300).log10()))
        .collect();
    let plot = Plot {
        title: format!("Wei-Norman propagator error over one period ({})", cfg.preset),
        x_label: "t".into(),
        y_label: "log10 max |S_WN - S_stepped|".into(),
        series: vec![Series {
            name: "driven".into(),
            points: curve,
            style: Style::Line,
            color: PALETTE[0],
        }],
        markers: driven.breakdown.into_iter().collect(),
    };
    let json = json!({
        "schema": 1,
        "command": "algebra",
        "preset": cfg.preset,
        "closures": closures,
        "wei_norman": {
            "relaxation_model_max_error": num(small),
            "driven": {
                "closure_dim": driven.closure_dim,
                "checkpoints": driven.times.len(),
                "max_error": num(driven.max_error()),
                "breakdown_t": driven.breakdown.map(num),
                "breakdown_condition": driven.breakdown_condition.map(num),
            },
        },
        "probe": probes,
    });
    let mut summary: Vec<String> = sets
        .iter()
        .zip(&closures)
        .map(|((name, _), c)| format!("closure {name}: dim {}", c["dim"]))
        .collect();
    summary.push(format!("Wei-Norman relaxation model max error {small:e}"));
    summary.push(match driven.breakdown {
        Some(t) => format!("Wei-Norman driven: xi singular at t = {t}"),
        None => format!("Wei-Norman driven over one period max error {:e}", driven.max_error()),
    });
    Ok(Artifacts {
        table: Some(table),
        json: Some(json),
        plot: Some(plot),
        summary,
        failed: false,
    })
}

fn sensitivity(cfg: &RunConfig) -> Result<Artifacts, RunError> {
    let n = &cfg.numeric;
    let rep = sensitivity_probe(&cfg.params, &n.sizes, n.epsilon, n.mode, n.edge_margin, n.tol)?;
    let mut table = Table::new(&["m_max", "d_bulk", "d_ladder", "d_scattered", "scattered", "bulk"]);
    for r in &rep.rows {
        table.push(vec![
            r.m_max.into(),
            r.d_bulk.into(),
            r.d_ladder.into(),
            r.d_scattered.into(),
            r.scattered.into(),
            r.bulk.into(),
        ]);
    }
    let mode = match rep.mode {
        SensitivityMode::RateShift => "rate_shift",
        SensitivityMode::CornerCoupling => "corner_coupling",
    };
    let json = json!({
        "schema": 1,
        "command": "sensitivity",
        "preset": cfg.preset,
        "mode": mode,
        "epsilon": num(rep.epsilon),
        "rows": rep.rows.iter().map(|r| json!({
            "m_max": r.m_max,
            "d_bulk": num(r.d_bulk),
            "d_ladder": r.d_ladder.map(num),
            "d_scattered": r.d_scattered.map(num),
            "scattered": r.scattered,
            "bulk": r.bulk,
        })).collect::<Vec<_>>(),
        "fit": {
            "slope": num(rep.fit.slope),
            "intercept": num(rep.fit.intercept),
            "r_squared": num(rep.fit.r_squared),
        },
        "exponential": rep.exponential,
    });
    let plot = Plot {
        title: format!("Spectral displacement under {mode} ({})", cfg.preset),
        x_label: "m_max".into(),
        y_label: "log10 d".into(),
        series: vec![Series {
            name: "bulk".into(),
            points: rep.rows.iter().map(|r| (r.m_max as f64, r.d_bulk.log10())).collect(),
            style: Style::Line,
            color: PALETTE[0],
        }],
        markers: Vec::new(),
    };
    Ok(Artifacts {
        summary: vec![format!(
            "log-slope {:e}, R^2 {:.4}, exponential: {}",
            rep.fit.slope, rep.fit.r_squared, rep.exponential
        )],
        table: Some(table),
        json: Some(json),
        plot: Some(plot),
        failed: false,
    })
}

fn oracle_check(cfg: &RunConfig) -> Result<Artifacts, RunError> {
    let report = run_suite(cfg.seed, cfg.numeric.samples)?;
    let mut table = Table::new(&["check", "passed", "worst", "threshold", "samples"]);
    for c in &report.checks {
        table.push(vec![
            c.name.as_str().into(),
            (c.passed as usize).into(),
            c.worst.into(),
            c.threshold.into(),
            c.samples.into(),
        ]);
    }
    let json = json!({
        "schema": 1,
        "command": "oracle-check",
        "seed": cfg.seed,
        "samples": cfg.numeric.samples,
        "all_passed": report.all_passed(),
        "checks": report.checks.iter().map(|c| json!({
            "name": c.name,
            "passed": c.passed,
            "worst": num(c.worst),
            "threshold": num(c.threshold),
            "samples": c.samples,
        })).collect::<Vec<_>>(),
    });
    let summary = report
        .checks
        .iter()
        .map(|c| {
            format!(
                "{} {}: worst {:e} (bound {:e})",
                if c.passed { "PASS" } else { "FAIL" },
                c.name,
                c.worst,
                c.threshold
            )
        })
        .collect();
    Ok(Artifacts {
        table: Some(table),
        json: Some(json),
        plot: None,
        summary,
        failed: !report.all_passed(),
    })
}
