//! Benchmark fixtures shared by the criterion targets.

use floqlind_core::qubit::DrivenQubitParams;

/// Weak-dephasing ladder regime.
pub fn weak() -> DrivenQubitParams {
    DrivenQubitParams {
        delta: 0.05,
        g: 0.0,
        gamma0: 0.1,
        omega: 0.05,
    }
}

/// Regime with exceptional points inside every period.
pub fn strong() -> DrivenQubitParams {
    DrivenQubitParams {
        delta: 0.05,
        g: 0.0,
        gamma0: 10.0,
        omega: 0.05,
    }
}
