//! Named parameter sets for the figures.

use floqlind_core::floquet::SensitivityMode;
use floqlind_core::qubit::{Branch, DrivenQubitParams};

use crate::config::{Numeric, DEFAULT_ATOL, DEFAULT_EDGE_MARGIN, DEFAULT_M_MAX, DEFAULT_RTOL};

pub const PRESET_NAMES: [&str; 6] = ["fig1", "fig2", "fig3a", "fig3b", "fig4a", "fig4b"];

#[derive(Clone, Debug)]
pub struct Preset {
    pub params: DrivenQubitParams,
    pub numeric: Numeric,
    pub branch: Option<Branch>,
}

fn params(delta: f64, g: f64, gamma0: f64, omega: f64) -> DrivenQubitParams {
    DrivenQubitParams { delta, g, gamma0, omega }
}

fn numeric(t_end: f64) -> Numeric {
    Numeric {
        rtol: DEFAULT_RTOL,
        atol: DEFAULT_ATOL,
        dt: 0.05,
        t_end,
        periods: 1,
        m_max: DEFAULT_M_MAX,
        edge_margin: DEFAULT_EDGE_MARGIN,
        tol: 1e-10,
        epsilon: 1e-8,
        sizes: vec![50, 100, 200],
        mode: SensitivityMode::RateShift,
        drop_factor: 5.0,
        samples: 100,
    }
}

/// Look up a preset by name.
pub fn preset(name: &str) -> Option<Preset> {
    let period = |omega: f64| 2.0 * std::f64::consts::PI / omega;
    let p = match name {
        // Adiabatic spectrum and exceptional points over one period.
        "fig1" => Preset {
            params: params(0.05, 0.0, 10.0, 0.05),
            numeric: numeric(period(0.05)),
            branch: None,
        },
        // Staircase relaxation from the slowest adiabatic state over two periods.
        "fig2" => Preset {
            params: params(0.05, 0.0, 10.0, 0.05),
            numeric: numeric(2.0 * period(0.05)),
            branch: None,
        },
        // Weak dephasing: three Wannier–Stark ladders, localized states.
        "fig3a" | "fig4a" => Preset {
            params: params(0.05, 0.0, 0.1, 0.05),
            numeric: numeric(period(0.05)),
            branch: None,
        },
        // Strong dephasing: ladders dissolve into scattered states.
        "fig3b" | "fig4b" => Preset {
            params: params(0.05, 0.0, 5.0, 0.05),
            numeric: numeric(period(0.05)),
            branch: None,
        },
        _ => return None,
    };
    Some(p)
}
