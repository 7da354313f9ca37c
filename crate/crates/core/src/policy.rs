//! Process-wide numerical tolerances.
//!
//! Every tolerance the library checks against lives in one record. It can be
//! replaced wholesale (the CLI does this from a config file) but never
//! piecemeal from inside the library.

use std::sync::RwLock;

use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NumericalPolicy {
    /// |tr ρ − 1| allowed for a density matrix.
    pub trace_tol: f64,
    /// max |A − A†| allowed for operators flagged Hermitian.
    pub hermiticity_tol: f64,
    /// Smallest eigenvalue allowed for a density matrix is `-positivity_tol`.
    pub positivity_tol: f64,
    /// Smallest eigenvalue allowed for a Choi matrix is `-choi_tol`.
    pub choi_tol: f64,
    /// Relative pivot below which a fixed-point system is called singular.
    pub singular_pivot_tol: f64,
    /// Largest |X_limit − X_repeated| that still counts as converged.
    pub convergence_tol: f64,
    /// Residual allowed for stationary and fixed-point solves.
    pub residual_tol: f64,
}

impl NumericalPolicy {
    pub const DEFAULT: NumericalPolicy = NumericalPolicy {
        trace_tol: 1e-10,
        hermiticity_tol: 1e-12,
        positivity_tol: 1e-10,
        choi_tol: 1e-8,
        singular_pivot_tol: 1e-10,
        convergence_tol: 1e-4,
        residual_tol: 1e-10,
    };

    pub fn current() -> NumericalPolicy {
        *POLICY.read().unwrap_or_else(|e| e.into_inner())
    }

    /// Replace the global policy, returning the previous one.
    pub fn install(policy: NumericalPolicy) -> NumericalPolicy {
        let mut guard = POLICY.write().unwrap_or_else(|e| e.into_inner());
        std::mem::replace(&mut *guard, policy)
    }
}

impl Default for NumericalPolicy {
    fn default() -> Self {
        Self::DEFAULT
    }
}

static POLICY: RwLock<NumericalPolicy> = RwLock::new(NumericalPolicy::DEFAULT);
