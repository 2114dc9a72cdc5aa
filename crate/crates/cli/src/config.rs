//! Run configuration: INI-style files, presets and command-line overrides.
//!
//! Grammar, one item per line:
//!
//! ```text
//! # comment            (also ';')
//! key = value          (top level: command, preset)
//! [params]             delta, g, gamma0, omega, branch
//! [numeric]            rtol, atol, dt, t_end, periods, m_max, edge_margin,
//!                      tol, epsilon, sizes, drop_factor, samples, mode
//! [io]                 out, format, seed
//! ```
//!
//! Keys are case-sensitive, whitespace around keys and values is ignored, a
//! later assignment wins, and unknown sections or keys are errors. Values
//! given on the command line override the file, which overrides the preset.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use floqlind_core::floquet::SensitivityMode;
use floqlind_core::qubit::{Branch, DrivenQubitParams};

use crate::presets::{preset, Preset, PRESET_NAMES};

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("{file}:{line}: {message}")]
    Parse { file: String, line: usize, message: String },
    #[error("invalid value for '{field}': {constraint}")]
    Validation { field: String, constraint: String },
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Command {
    Evolve,
    Adiabatic,
    Ep,
    Floquet,
    Ipr,
    Algebra,
    Sensitivity,
    OracleCheck,
}

impl Command {
    pub const ALL: [Command; 8] = [
        Command::Evolve,
        Command::Adiabatic,
        Command::Ep,
        Command::Floquet,
        Command::Ipr,
        Command::Algebra,
        Command::Sensitivity,
        Command::OracleCheck,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Command::Evolve => "evolve",
            Command::Adiabatic => "adiabatic",
            Command::Ep => "ep",
            Command::Floquet => "floquet",
            Command::Ipr => "ipr",
            Command::Algebra => "algebra",
            Command::Sensitivity => "sensitivity",
            Command::OracleCheck => "oracle-check",
        }
    }
}

impl std::str::FromStr for Command {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        Command::ALL
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or_else(|| format!("unknown command '{s}'"))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Formats {
    pub csv: bool,
    pub json: bool,
    pub svg: bool,
}

impl Formats {
    pub const ALL: Formats = Formats {
        csv: true,
        json: true,
        svg: true,
    };

    pub fn parse(s: &str) -> Result<Self, String> {
        let mut f = Formats {
            csv: false,
            json: false,
            svg: false,
        };
        for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            match part {
                "csv" => f.csv = true,
                "json" => f.json = true,
                "svg" => f.svg = true,
                other => return Err(format!("unknown format '{other}' (expected csv, json, svg)")),
            }
        }
        if !(f.csv || f.json || f.svg) {
            return Err("at least one format is required".into());
        }
        Ok(f)
    }

    pub fn list(&self) -> String {
        let mut v = Vec::new();
        if self.csv {
            v.push("csv");
        }
        if self.json {
            v.push("json");
        }
        if self.svg {
            v.push("svg");
        }
        v.join(",")
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Numeric {
    pub rtol: f64,
    pub atol: f64,
    /// Output sampling step for time series.
    pub dt: f64,
    /// Time horizon for time series.
    pub t_end: f64,
    /// Drive periods scanned for exceptional points.
    pub periods: usize,
    pub m_max: usize,
    pub edge_margin: usize,
    /// Eigensolver residual bound.
    pub tol: f64,
    /// Perturbation size for the sensitivity probe.
    pub epsilon: f64,
    /// Truncations for the sensitivity probe.
    pub sizes: Vec<usize>,
    pub mode: SensitivityMode,
    /// Drop detector threshold in units of the median decay rate.
    pub drop_factor: f64,
    /// Random models per oracle check, and scan points for the algebra probe.
    pub samples: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub command: Command,
    pub preset: String,
    pub params: DrivenQubitParams,
    /// Initial adiabatic branch; `None` picks the slowest one.
    pub branch: Option<Branch>,
    pub numeric: Numeric,
    pub out: PathBuf,
    pub formats: Formats,
    pub seed: u64,
}

/// Values from the command line, applied last.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub command: Option<Command>,
    pub preset: Option<String>,
    pub out: Option<PathBuf>,
    pub formats: Option<String>,
    pub seed: Option<u64>,
    pub m_max: Option<usize>,
    pub rtol: Option<f64>,
    /// Extra `section.key=value` assignments.
    pub set: Vec<String>,
}

pub const DEFAULT_RTOL: f64 = 1e-9;
pub const DEFAULT_ATOL: f64 = 1e-12;
pub const DEFAULT_M_MAX: usize = 200;
pub const DEFAULT_EDGE_MARGIN: usize = 25;
pub const DEFAULT_OUT: &str = "floqlind-out";
pub const OUT_ENV: &str = "FLOQLIND_OUT";

/// Output directory: flag, then file, then `FLOQLIND_OUT`, then the default.
pub fn resolve_out_dir(flag: Option<&Path>, file: Option<&str>) -> PathBuf {
    if let Some(o) = flag {
        o.to_path_buf()
    } else if let Some(v) = file {
        PathBuf::from(v)
    } else if let Ok(v) = std::env::var(OUT_ENV) {
        PathBuf::from(v)
    } else {
        PathBuf::from(DEFAULT_OUT)
    }
}

/// Raw key/value pairs by section, keeping the line of the last assignment.
type Raw = BTreeMap<(String, String), (String, usize)>;

const KEYS: &[(&str, &[&str])] = &[
    ("", &["command", "preset"]),
    ("params", &["delta", "g", "gamma0", "omega", "branch"]),
    (
        "numeric",
        &[
            "rtol",
            "atol",
            "dt",
            "t_end",
            "periods",
            "m_max",
            "edge_margin",
            "tol",
            "epsilon",
            "sizes",
            "mode",
            "drop_factor",
            "samples",
        ],
    ),
    ("io", &["out", "format", "seed"]),
];

fn parse_text(text: &str, file: &str) -> Result<Raw, ConfigError> {
    let mut raw = Raw::new();
    let mut section = String::new();
    for (idx, line) in text.lines().enumerate() {
        let lineno = idx + 1;
        let err = |message: String| ConfigError::Parse {
            file: file.to_string(),
            line: lineno,
            message,
        };
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') || line.starts_with(';') {
            continue;
        }
        if let Some(rest) = line.strip_prefix('[') {
            let name = rest
                .strip_suffix(']')
                .ok_or_else(|| err(format!("unterminated section header '{line}'")))?
                .trim();
            if !KEYS.iter().any(|(s, _)| *s == name) || name.is_empty() {
                return Err(err(format!("unknown section '[{name}]'")));
            }
            section = name.to_string();
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| err(format!("expected 'key = value', found '{line}'")))?;
        let (key, value) = (key.trim(), value.trim());
        let allowed = KEYS.iter().find(|(s, _)| *s == section).map(|(_, k)| *k).unwrap_or(&[]);
        if !allowed.contains(&key) {
            let where_ = if section.is_empty() { "top level".to_string() } else { format!("[{section}]") };
            return Err(err(format!("unknown key '{key}' in {where_}")));
        }
        raw.insert((section.clone(), key.to_string()), (value.to_string(), lineno));
    }
    Ok(raw)
}

fn parse_overrides(set: &[String], raw: &mut Raw) -> Result<(), ConfigError> {
    for (k, item) in set.iter().enumerate() {
        let err = |message: String| ConfigError::Parse {
            file: "--set".into(),
            line: k + 1,
            message,
        };
        let (path, value) = item
            .split_once('=')
            .ok_or_else(|| err(format!("expected 'section.key=value', found '{item}'")))?;
        let (section, key) = path.trim().rsplit_once('.').unwrap_or(("", path.trim()));
        let allowed = KEYS.iter().find(|(s, _)| *s == section).map(|(_, k)| *k);
        match allowed {
            Some(keys) if keys.contains(&key) => {
                raw.insert((section.to_string(), key.to_string()), (value.trim().to_string(), 0));
            }
            _ => return Err(err(format!("unknown key '{path}'"))),
        }
    }
    Ok(())
}

fn invalid(field: &str, constraint: impl Into<String>) -> ConfigError {
    ConfigError::Validation {
        field: field.to_string(),
        constraint: constraint.into(),
    }
}

fn positive_f64(field: &str, value: &str) -> Result<f64, ConfigError> {
    let x: f64 = value.parse().map_err(|_| invalid(field, format!("'{value}' is not a number")))?;
    if !(x > 0.0) || !x.is_finite() {
        return Err(invalid(field, format!("must be positive and finite, got {value}")));
    }
    Ok(x)
}

fn finite_f64(field: &str, value: &str) -> Result<f64, ConfigError> {
    let x: f64 = value.parse().map_err(|_| invalid(field, format!("'{value}' is not a number")))?;
    if !x.is_finite() {
        return Err(invalid(field, "must be finite"));
    }
    Ok(x)
}

fn nonneg_f64(field: &str, value: &str) -> Result<f64, ConfigError> {
    let x = finite_f64(field, value)?;
    if x < 0.0 {
        return Err(invalid(field, format!("must be non-negative, got {value}")));
    }
    Ok(x)
}

fn positive_usize(field: &str, value: &str) -> Result<usize, ConfigError> {
    let x: usize = value
        .parse()
        .map_err(|_| invalid(field, format!("'{value}' is not a positive integer")))?;
    if x == 0 {
        return Err(invalid(field, "must be positive"));
    }
    Ok(x)
}

/// Parse a config file and apply overrides.
pub fn parse_config(path: Option<&Path>, overrides: &Overrides) -> Result<RunConfig, ConfigError> {
    let mut raw = match path {
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|source| ConfigError::Io {
                path: p.display().to_string(),
                source,
            })?;
            parse_text(&text, &p.display().to_string())?
        }
        None => Raw::new(),
    };
    parse_overrides(&overrides.set, &mut raw)?;
    resolve(raw, overrides)
}

/// Parse config text (as if read from `name`) and apply overrides.
pub fn parse_config_str(text: &str, name: &str, overrides: &Overrides) -> Result<RunConfig, ConfigError> {
    let mut raw = parse_text(text, name)?;
    parse_overrides(&overrides.set, &mut raw)?;
    resolve(raw, overrides)
}

fn resolve(raw: Raw, ov: &Overrides) -> Result<RunConfig, ConfigError> {
    let get = |s: &str, k: &str| raw.get(&(s.to_string(), k.to_string())).map(|(v, _)| v.as_str());
    let command = match (ov.command, get("", "command")) {
        (Some(c), _) => c,
        (None, Some(v)) => v.parse().map_err(|e: String| invalid("command", e))?,
        (None, None) => return Err(invalid("command", "no command given")),
    };
    let preset_name = ov
        .preset
        .clone()
        .or_else(|| get("", "preset").map(str::to_string))
        .unwrap_or_else(|| "fig1".to_string());
    let Preset { params, numeric, branch } = preset(&preset_name)
        .ok_or_else(|| invalid("preset", format!("unknown preset '{preset_name}' (known: {})", PRESET_NAMES.join(", "))))?;
    let mut params = params;
    let mut numeric = numeric;
    let mut branch = branch;

    if let Some(v) = get("params", "delta") {
        params.delta = finite_f64("params.delta", v)?;
    }
    if let Some(v) = get("params", "g") {
        params.g = finite_f64("params.g", v)?;
    }
    if let Some(v) = get("params", "gamma0") {
        params.gamma0 = nonneg_f64("params.gamma0", v)?;
    }
    if let Some(v) = get("params", "omega") {
        params.omega = positive_f64("params.omega", v)?;
    }
    if let Some(v) = get("params", "branch") {
        branch = if v == "slowest" {
            None
        } else {
            Some(v.parse().map_err(|_| invalid("params.branch", format!("'{v}' is not one of 0, +, -, slowest")))?)
        };
    }
    params
        .validate()
        .map_err(|e| invalid("params", e.to_string()))?;

    macro_rules! num {
        ($key:literal, $field:ident, $parse:ident) => {
            if let Some(v) = get("numeric", $key) {
                numeric.$field = $parse(concat!("numeric.", $key), v)?;
            }
        };
    }
    num!("rtol", rtol, positive_f64);
    num!("atol", atol, positive_f64);
    num!("dt", dt, positive_f64);
    num!("t_end", t_end, positive_f64);
    num!("periods", periods, positive_usize);
    num!("m_max", m_max, positive_usize);
    num!("edge_margin", edge_margin, positive_usize);
    num!("tol", tol, positive_f64);
    num!("epsilon", epsilon, positive_f64);
    num!("drop_factor", drop_factor, positive_f64);
    num!("samples", samples, positive_usize);
    if let Some(v) = get("numeric", "sizes") {
        let sizes = v
            .split(',')
            .map(|s| positive_usize("numeric.sizes", s.trim()))
            .collect::<Result<Vec<_>, _>>()?;
        numeric.sizes = sizes;
    }
    if let Some(v) = get("numeric", "mode") {
        numeric.mode = v.parse().map_err(|_| invalid("numeric.mode", format!("'{v}' is not rate_shift or corner_coupling")))?;
    }
    if let Some(m) = ov.m_max {
        numeric.m_max = positive_usize("m_max", &m.to_string())?;
    }
    if let Some(r) = ov.rtol {
        numeric.rtol = positive_f64("rtol", &r.to_string())?;
    }
    if numeric.sizes.len() < 3 {
        return Err(invalid("numeric.sizes", "at least three truncations are needed"));
    }
    if numeric.edge_margin >= numeric.m_max {
        return Err(invalid("numeric.edge_margin", format!("must be below m_max = {}", numeric.m_max)));
    }
    if let Some(&m) = numeric.sizes.iter().find(|&&m| m <= numeric.edge_margin) {
        return Err(invalid("numeric.sizes", format!("size {m} leaves no bulk after edge_margin = {}", numeric.edge_margin)));
    }

    let out = resolve_out_dir(ov.out.as_deref(), get("io", "out"));
    let formats = match ov.formats.as_deref().or(get("io", "format")) {
        Some(v) => Formats::parse(v).map_err(|e| invalid("io.format", e))?,
        None => Formats::ALL,
    };
    let seed = match (ov.seed, get("io", "seed")) {
        (Some(s), _) => s,
        (None, Some(v)) => v.parse().map_err(|_| invalid("io.seed", format!("'{v}' is not an unsigned integer")))?,
        (None, None) => 0,
    };
    Ok(RunConfig {
        command,
        preset: preset_name,
        params,
        branch,
        numeric,
        out,
        formats,
        seed,
    })
}

impl RunConfig {
    /// The resolved configuration in the file grammar above.
    pub fn to_ini(&self) -> String {
        let n = &self.numeric;
        let mut s = String::new();
        let _ = writeln!(s, "command = {}", self.command.name());
        let _ = writeln!(s, "preset = {}", self.preset);
        let _ = writeln!(s, "\n[params]");
        let _ = writeln!(s, "delta = {}", self.params.delta);
        let _ = writeln!(s, "g = {}", self.params.g);
        let _ = writeln!(s, "gamma0 = {}", self.params.gamma0);
        let _ = writeln!(s, "omega = {}", self.params.omega);
        let branch = match self.branch {
            None => "slowest",
            Some(Branch::Zero) => "0",
            Some(Branch::Plus) => "+",
            Some(Branch::Minus) => "-",
        };
        let _ = writeln!(s, "branch = {branch}");
        let _ = writeln!(s, "\n[numeric]");
        let _ = writeln!(s, "rtol = {}", n.rtol);
        let _ = writeln!(s, "atol = {}", n.atol);
        let _ = writeln!(s, "dt = {}", n.dt);
        let _ = writeln!(s, "t_end = {}", n.t_end);
        let _ = writeln!(s, "periods = {}", n.periods);
        let _ = writeln!(s, "m_max = {}", n.m_max);
        let _ = writeln!(s, "edge_margin = {}", n.edge_margin);
        let _ = writeln!(s, "tol = {}", n.tol);
        let _ = writeln!(s, "epsilon = {}", n.epsilon);
        let sizes: Vec<String> = n.sizes.iter().map(|m| m.to_string()).collect();
        let _ = writeln!(s, "sizes = {}", sizes.join(","));
        let mode = match n.mode {
            SensitivityMode::RateShift => "rate_shift",
            SensitivityMode::CornerCoupling => "corner_coupling",
        };
        let _ = writeln!(s, "mode = {mode}");
        let _ = writeln!(s, "drop_factor = {}", n.drop_factor);
        let _ = writeln!(s, "samples = {}", n.samples);
        let _ = writeln!(s, "\n[io]");
        let _ = writeln!(s, "out = {}", self.out.display());
        let _ = writeln!(s, "format = {}", self.formats.list());
        let _ = writeln!(s, "seed = {}", self.seed);
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> Result<RunConfig, ConfigError> {
        parse_config_str(text, "test.ini", &Overrides::default())
    }

    #[test]
    fn minimal_file_gets_fig1_defaults() {
        let c = parse("command = evolve\n").unwrap();
        assert_eq!(c.command, Command::Evolve);
        assert_eq!(c.preset, "fig1");
        assert_eq!((c.params.delta, c.params.g, c.params.gamma0, c.params.omega), (0.05, 0.0, 10.0, 0.05));
        assert_eq!(c.numeric.rtol, 1e-9);
        assert_eq!(c.numeric.atol, 1e-12);
        assert_eq!(c.numeric.m_max, 200);
        assert_eq!(c.numeric.edge_margin, 25);
    }

    #[test]
    fn negative_rate_rejected() {
        let e = parse("command = evolve\n[params]\ngamma0 = -1\n").unwrap_err();
        assert!(matches!(e, ConfigError::Validation { ref field, .. } if field == "params.gamma0"), "{e}");
    }

    #[test]
    fn unknown_key_named() {
        let e = parse("command = ep\n[numeric]\nfoo = 3\n").unwrap_err();
        let msg = e.to_string();
        assert!(msg.contains("foo") && msg.contains("test.ini:3"), "{msg}");
        assert!(parse("[nope]\n").is_err());
        assert!(parse("command = ep\njunk\n").is_err());
    }

    #[test]
    fn precedence_and_round_trip() {
        let text = "command = floquet\npreset = fig3a\n[numeric]\nm_max = 80\n[io]\nformat = json\n";
        let ov = Overrides {
            m_max: Some(60),
            seed: Some(7),
            set: vec!["numeric.edge_margin=10".into()],
            ..Default::default()
        };
        let c = parse_config_str(text, "t", &ov).unwrap();
        assert_eq!(c.numeric.m_max, 60);
        assert_eq!(c.numeric.edge_margin, 10);
        assert_eq!(c.params.gamma0, 0.1);
        assert_eq!(c.seed, 7);
        assert!(c.formats.json && !c.formats.csv);
        let again = parse_config_str(&c.to_ini(), "echo", &Overrides::default()).unwrap();
        assert_eq!(again, c);
    }

    #[test]
    fn numeric_validation() {
        assert!(parse("command = ep\n[numeric]\nrtol = 0\n").is_err());
        assert!(parse("command = ep\n[numeric]\nm_max = 20\n").is_err());
        assert!(parse("command = ep\n[numeric]\nsizes = 50,100\n").is_err());
        assert!(parse("command = bogus\n").is_err());
        assert!(parse("command = ep\npreset = fig9\n").is_err());
        assert!(parse("command = ep\n[io]\nformat = png\n").is_err());
    }
}
