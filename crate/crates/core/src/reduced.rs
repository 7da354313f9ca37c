//! Markovian limit with both qubits eliminated.
//!
//! When the qubit correlations decay much faster than the couplings, each
//! qubit acts on the qutrit as a thermal reservoir with Lorentzian spectrum.
//! The resulting rates are in [`ReducedRates`]; the 6-level qutrit ⊗ memory
//! model itself is [`DemonModel::reduced`].

use serde::{Deserialize, Serialize};

use crate::engine::Simulator;
use crate::error::{Error, Result};
use crate::model::DemonModel;
pub use crate::model::ReducedRates;
use crate::observables::{cycle_result, CycleResult, Side};
use crate::params::SystemParams;
use crate::tensor::C64;

fn side_constants(p: &SystemParams, side: Side) -> Result<(f64, f64, f64)> {
    let d = p.derive()?;
    Ok(match side {
        Side::Cold => (p.omega_c, d.n_c, d.lambda_c),
        Side::Hot => (p.omega_h, d.n_h, d.lambda_h),
    })
}

/// (⟨σ⁺(t)σ⁻⟩, ⟨σ⁻(t)σ⁺⟩) of a thermal qubit damped at rate γ.
pub fn bath_correlation(p: &SystemParams, side: Side, t: f64) -> Result<(C64, C64)> {
    if t < 0.0 || t.is_nan() {
        return Err(Error::NegativeDuration(t));
    }
    let (omega, n, lambda) = side_constants(p, side)?;
    let decay = (-p.gamma * (n + 0.5) * t).exp();
    let phase = C64::new(0.0, omega * t).exp();
    Ok((phase * (lambda * decay), phase.conj() * ((1.0 - lambda) * decay)))
}

/// (γ⁺(ω), γ⁻(ω)): twice the real part of the one-sided transforms.
pub fn correlation_spectra(p: &SystemParams, side: Side, omega: f64) -> Result<(f64, f64)> {
    if !omega.is_finite() {
        return Err(Error::InvalidParams(format!("frequency {omega} is not finite")));
    }
    let (w, n, lambda) = side_constants(p, side)?;
    let width2 = (p.gamma * (n + 0.5)).powi(2);
    let num = p.gamma * (2.0 * n + 1.0);
    Ok((
        num * lambda / ((w - omega).powi(2) + width2),
        num * (1.0 - lambda) / ((w + omega).powi(2) + width2),
    ))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Regime {
    Markovian,
    Borderline,
    NonMarkovian,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MarkovValidity {
    /// γ(n_C + ½)/(√2 J).
    pub cold_ratio: f64,
    /// γ(n_H + ½)/J.
    pub hot_ratio: f64,
    pub regime: Regime,
}

/// Both ratios ≥ 10 is Markovian, both ≥ 1 borderline, anything else not.
pub fn markov_validity(p: &SystemParams) -> Result<MarkovValidity> {
    let d = p.derive()?;
    let cold_ratio = p.gamma * (d.n_c + 0.5) / (std::f64::consts::SQRT_2 * p.j);
    let hot_ratio = p.gamma * (d.n_h + 0.5) / p.j;
    let worst = cold_ratio.min(hot_ratio);
    let regime = if worst >= 10.0 {
        Regime::Markovian
    } else if worst >= 1.0 {
        Regime::Borderline
    } else {
        Regime::NonMarkovian
    };
    Ok(MarkovValidity {
        cold_ratio,
        hot_ratio,
        regime,
    })
}

/// Limit-cycle transfer of the reduced model; same record as the full model.
pub fn build_reduced_cycle(p: &SystemParams) -> Result<CycleResult> {
    cycle_result(&Simulator::new(DemonModel::reduced(p)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn correlation_at_zero_is_thermal() {
        let p = SystemParams::default();
        let d = p.derive().unwrap();
        let (a, b) = bath_correlation(&p, Side::Cold, 0.0).unwrap();
        assert_abs_diff_eq!(a.re, d.lambda_c, epsilon = 1e-15);
        assert_abs_diff_eq!(b.re, 1.0 - d.lambda_c, epsilon = 1e-15);
        assert!(bath_correlation(&p, Side::Cold, -1.0).is_err());
    }

    #[test]
    fn correlation_half_life() {
        let p = SystemParams::default();
        let d = p.derive().unwrap();
        let t = std::f64::consts::LN_2 / (p.gamma * (d.n_c + 0.5));
        let (a0, _) = bath_correlation(&p, Side::Cold, 0.0).unwrap();
        let (a1, _) = bath_correlation(&p, Side::Cold, t).unwrap();
        assert_abs_diff_eq!(a1.norm(), 0.5 * a0.norm(), epsilon = 1e-14);
    }

    #[test]
    fn spectra_reproduce_rates() {
        let p = SystemParams {
            gamma: 30.0,
            ..Default::default()
        };
        let d = p.derive().unwrap();
        let r = ReducedRates::new(&p).unwrap();
        let (up_c, _) = correlation_spectra(&p, Side::Cold, p.omega_c).unwrap();
        let (_, down_c) = correlation_spectra(&p, Side::Cold, -p.omega_c).unwrap();
        assert_abs_diff_eq!(up_c, 4.0 * d.lambda_c / (p.gamma * (2.0 * d.n_c + 1.0)), epsilon = 1e-14);
        assert_abs_diff_eq!(2.0 * down_c, r.cold_down, epsilon = 1e-10);
        assert_abs_diff_eq!(2.0 * up_c, r.cold_up, epsilon = 1e-10);
        let (up_h, _) = correlation_spectra(&p, Side::Hot, p.omega_h).unwrap();
        let (_, down_h) = correlation_spectra(&p, Side::Hot, -p.omega_h).unwrap();
        assert_abs_diff_eq!(up_h, r.hot_up, epsilon = 1e-10);
        assert_abs_diff_eq!(down_h, r.hot_down, epsilon = 1e-10);
        let (far, _) = correlation_spectra(&p, Side::Cold, p.omega_c + 1e6).unwrap();
        assert!(far < 1e-9);
    }

    #[test]
    fn validity_regimes() {
        let at = |g| markov_validity(&SystemParams { gamma: g, ..Default::default() }).unwrap();
        let v30 = at(30.0);
        assert_abs_diff_eq!(v30.cold_ratio, 15.07, epsilon = 0.01);
        assert_eq!(v30.regime, Regime::Markovian);
        let v2 = at(2.0);
        assert_abs_diff_eq!(v2.cold_ratio, 1.005, epsilon = 1e-3);
        assert_eq!(v2.regime, Regime::Borderline);
        assert_eq!(at(1e-3).regime, Regime::NonMarkovian);
    }
}
