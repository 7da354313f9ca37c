//! Entropies, excitation currents and transferred excitations.

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::engine::Simulator;
use crate::error::{Error, Result};
use crate::model::{gibbs_qutrit_weights, DemonModel, ModelKind};
use crate::params::SystemParams;
use crate::policy::NumericalPolicy;
use crate::protocol::{build_cycle, Schedule};
use crate::tensor::{DensityMatrix, OperatorMatrix, Subsystem};

/// Von Neumann entropy in nats from a spectrum; negative eigenvalues count as 0.
pub fn entropy_of_spectrum(eigenvalues: &[f64]) -> f64 {
    eigenvalues
        .iter()
        .filter(|&&l| l > 0.0)
        .map(|&l| -l * l.ln())
        .sum()
}

pub fn entropy(rho: &DensityMatrix) -> f64 {
    entropy_of_spectrum(&rho.eigenvalues())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SubsystemEntropies {
    /// Baths and qutrit with the memory traced out.
    pub s_cmh: f64,
    pub s_d: f64,
    pub s_tot: f64,
}

pub fn subsystem_entropies(rho: &DensityMatrix) -> Result<SubsystemEntropies> {
    let rest: Vec<Subsystem> = rho
        .layout()
        .slots()
        .iter()
        .copied()
        .filter(|s| *s != Subsystem::Demon)
        .collect();
    if !rho.layout().contains(Subsystem::Demon) {
        return Err(Error::MissingSubsystem(Subsystem::Demon));
    }
    Ok(SubsystemEntropies {
        s_cmh: entropy(&rho.partial_trace(&rest)?),
        s_d: entropy(&rho.partial_trace(&[Subsystem::Demon])?),
        s_tot: entropy(rho),
    })
}

/// Excitation currents from the cold side into the qutrit and from the qutrit into the hot side.
///
/// In the full model both are commutators with the coupling and therefore
/// traceless. In the reduced model they are adjoint dissipators, which are not.
#[derive(Clone, Debug, PartialEq)]
pub struct CurrentOperators {
    pub cold: OperatorMatrix,
    pub hot: OperatorMatrix,
}

impl CurrentOperators {
    pub fn new(cold: OperatorMatrix, hot: OperatorMatrix) -> Result<Self> {
        let tol = NumericalPolicy::current().hermiticity_tol;
        for (name, op) in [("cold", &cold), ("hot", &hot)] {
            if op.hermiticity_defect() > tol {
                return Err(Error::InvalidParams(format!("{name} current is not Hermitian")));
            }
        }
        Ok(CurrentOperators { cold, hot })
    }

    pub fn side(&self, side: Side) -> &OperatorMatrix {
        match side {
            Side::Cold => &self.cold,
            Side::Hot => &self.hot,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Cold,
    Hot,
}

impl Side {
    fn row(self) -> usize {
        match self {
            Side::Cold => 0,
            Side::Hot => 1,
        }
    }
}

/// ∫ tr(j ρ(t)) dt over the schedule starting from `start`.
pub fn integrate_transfer(sim: &Simulator, schedule: &Schedule, start: &DensityMatrix, side: Side) -> Result<f64> {
    let v = sim.model().coords(start)?;
    let (_, acc) = sim.evolve(schedule, &v)?;
    Ok(acc[side.row()])
}

/// Transferred excitations for instantaneous gates: the steady-state P(2_M).
pub fn x_ss_inst(p: &SystemParams) -> f64 {
    gibbs_qutrit_weights(p)[2]
}

/// Cycles used by the repeated-propagation cross-check, as a half-open range.
///
/// The window is 10 cycles long. Its start lies in [100, 200] (or [200, 400]
/// for γ ≥ 30) and moves towards the upper end for short periods:
/// start = lo + round((hi − lo) · min(1, 0.5/T)).
pub fn validation_window(p: &SystemParams) -> (usize, usize) {
    let (lo, hi) = if p.gamma >= 30.0 { (200.0, 400.0) } else { (100.0, 200.0) };
    let frac = (0.5 / p.period).min(1.0);
    let start = (lo + ((hi - lo) * frac).round()) as usize;
    (start, start + 10)
}

/// Transferred excitations on the limit cycle, with the repeated-propagation check.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CycleResult {
    pub model: ModelKind,
    pub period: f64,
    pub gamma: f64,
    /// Cold-side integral over one period of the limit cycle.
    pub x_c: f64,
    pub x_h: f64,
    /// Reported value, equal to `x_c`.
    pub x: f64,
    /// X / T.
    pub j_av: f64,
    /// Cold-side X averaged over the window after repeated propagation from ρ_ss.
    pub x_brute: f64,
    /// max − min of X_{C,n} over the window.
    pub x_cn_spread: f64,
    pub window: (usize, usize),
    /// |x − x_brute|.
    pub discrepancy: f64,
    /// Trace distance between the fixed point and the state at the end of the window.
    pub state_distance: f64,
    pub converged: bool,
}

/// Limit-cycle transfer for an arbitrary simulator; the schedule is its default cycle.
pub fn cycle_result(sim: &Simulator) -> Result<CycleResult> {
    let p = *sim.params();
    let schedule = build_cycle(&p)?;
    let map = sim.cycle_map(&schedule)?;
    let fixed = map.fixed_point()?;
    let acc = map.accumulate(&fixed);
    let (x_c, x_h) = (acc[0], acc[1]);

    let window = validation_window(&p);
    let mut v = sim.steady_coords()?;
    let mut window_x = Vec::with_capacity(10);
    for n in 0..window.1 {
        if n >= window.0 {
            window_x.push(map.accumulate(&v)[0]);
        }
        v = map.apply(&v);
    }
    let x_brute = window_x.iter().sum::<f64>() / window_x.len() as f64;
    let spread = window_x.iter().copied().fold(f64::NEG_INFINITY, f64::max)
        - window_x.iter().copied().fold(f64::INFINITY, f64::min);
    let state_distance = coords_trace_distance(sim.model(), &fixed, &v)?;
    let discrepancy = (x_c - x_brute).abs();
    Ok(CycleResult {
        model: sim.model().kind(),
        period: p.period,
        gamma: p.gamma,
        x_c,
        x_h,
        x: x_c,
        j_av: x_c / p.period,
        x_brute,
        x_cn_spread: spread,
        window,
        discrepancy,
        state_distance,
        converged: discrepancy <= NumericalPolicy::current().convergence_tol,
    })
}

pub(crate) fn coords_trace_distance(model: &DemonModel, a: &DVector<f64>, b: &DVector<f64>) -> Result<f64> {
    model.state_unchecked(a).trace_distance(&model.state_unchecked(b))
}

/// Limit-cycle transfer of the full model.
pub fn converged_transfer(p: &SystemParams) -> Result<CycleResult> {
    cycle_result(&Simulator::new(DemonModel::full(p)?))
}

/// Per-cycle (X_{C,n}, X_{H,n}) for n = 0..cycles, starting from ρ_ss.
pub fn cycle_series(sim: &Simulator, cycles: usize) -> Result<Vec<[f64; 2]>> {
    let map = sim.cycle_map(&build_cycle(sim.params())?)?;
    let mut v = sim.steady_coords()?;
    let mut out = Vec::with_capacity(cycles);
    for _ in 0..cycles {
        let a = map.accumulate(&v);
        out.push([a[0], a[1]]);
        v = map.apply(&v);
    }
    Ok(out)
}

/// −J_av,f / J_av,r, with forward bias obtained by swapping the bath temperatures.
pub fn rectification(p: &SystemParams) -> Result<f64> {
    if p.j == 0.0 {
        return Err(Error::UndefinedRectification(0.0));
    }
    let forward = SystemParams {
        temp_c: p.temp_h,
        temp_h: p.temp_c,
        ..*p
    };
    let j_r = converged_transfer(p)?.j_av;
    if j_r.abs() <= 1e-12 {
        return Err(Error::UndefinedRectification(j_r));
    }
    let j_f = converged_transfer(&forward)?.j_av;
    Ok(-j_f / j_r)
}

/// Interior local maxima after a [1, 2, 1]/4 smoothing pass.
///
/// Meant for a uniform grid; maxima flatter than `1e-9` relative to the
/// curve's range are ignored.
pub fn find_peaks(ts: &[f64], xs: &[f64]) -> Vec<f64> {
    let n = xs.len();
    if n < 3 {
        return vec![];
    }
    let mut s = xs.to_vec();
    for i in 1..n - 1 {
        s[i] = 0.25 * xs[i - 1] + 0.5 * xs[i] + 0.25 * xs[i + 1];
    }
    let range = s.iter().copied().fold(f64::NEG_INFINITY, f64::max) - s.iter().copied().fold(f64::INFINITY, f64::min);
    let eps = 1e-9 * range.max(1e-300);
    (1..n - 1)
        .filter(|&i| s[i] > s[i - 1] + eps && s[i] >= s[i + 1] + eps)
        .map(|i| ts[i])
        .collect()
}

/// Amplitude of the Fourier component of period `period` in a sampled
/// series. Works on the finite-difference slope, which suppresses a slowly
/// saturating baseline, and divides by the angular frequency again.
pub fn spectral_amplitude(ts: &[f64], xs: &[f64], period: f64) -> f64 {
    if ts.len() < 3 {
        return 0.0;
    }
    let mids: Vec<(f64, f64, f64)> = ts
        .windows(2)
        .zip(xs.windows(2))
        .map(|(t, x)| (0.5 * (t[0] + t[1]), (x[1] - x[0]) / (t[1] - t[0]), t[1] - t[0]))
        .collect();
    let span: f64 = mids.iter().map(|m| m.2).sum();
    let mean = mids.iter().map(|m| m.1 * m.2).sum::<f64>() / span;
    let w = 2.0 * std::f64::consts::PI / period;
    let (mut re, mut im) = (0.0, 0.0);
    for &(t, d, h) in &mids {
        re += (d - mean) * (w * t).cos() * h;
        im += (d - mean) * (w * t).sin() * h;
    }
    2.0 * (re * re + im * im).sqrt() / (span * w)
}
