//! Single and double demon operations starting from the steady state.

use serde::{Deserialize, Serialize};

use crate::engine::Simulator;
use crate::error::{Error, Result};
use crate::model::DemonModel;
use crate::observables::subsystem_entropies;
use crate::output::Fig2Row;
use crate::params::SystemParams;
use crate::protocol::{gate_sequence, PulseSegment};
use crate::tensor::{DensityMatrix, Subsystem};

/// Time at which an excitation starting in the cold qubit has made k half
/// swings to the qutrit and back: kπ/(2√2 J).
pub fn oscillation_time(k: f64, j: f64) -> f64 {
    k * std::f64::consts::PI / (2.0 * std::f64::consts::SQRT_2 * j)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShotOptions {
    /// Largest sampling step, units of 1/J.
    pub dt: f64,
    /// End of the record, units of 1/J.
    pub t_end: f64,
}

impl Default for ShotOptions {
    fn default() -> Self {
        ShotOptions { dt: 0.01, t_end: 5.0 }
    }
}

#[derive(Clone, Debug)]
pub struct SingleShot {
    pub times: Vec<f64>,
    pub states: Vec<DensityMatrix>,
    pub t1: f64,
    pub t2: f64,
}

impl SingleShot {
    /// Index of the last sample at or before `t`.
    pub fn index_at(&self, t: f64) -> usize {
        self.times.iter().rposition(|&s| s <= t + 1e-12).unwrap_or(0)
    }

    pub fn state_at(&self, t: f64) -> &DensityMatrix {
        &self.states[self.index_at(t)]
    }

    pub fn rows(&self) -> Result<Vec<Fig2Row>> {
        self.times
            .iter()
            .zip(&self.states)
            .map(|(&t, rho)| {
                let s = subsystem_entropies(rho)?;
                Ok(Fig2Row {
                    t,
                    p_1c: rho.level_population(Subsystem::Cold, 1)?,
                    p_2m: rho.level_population(Subsystem::Qutrit, 2)?,
                    p_1h: rho.level_population(Subsystem::Hot, 1)?,
                    p_1d: rho.level_population(Subsystem::Demon, 1)?,
                    s_cmh: s.s_cmh,
                    s_d: s.s_d,
                    s_tot: s.s_tot,
                })
            })
            .collect()
    }
}

/// Steps 1 and 2 applied once to ρ_ss, then free evolution until `t_end`.
pub fn single_shot(p: &SystemParams, opts: ShotOptions) -> Result<SingleShot> {
    let sim = Simulator::new(DemonModel::full(p)?);
    let gates = gate_sequence(p)?;
    let mut segments = gates.segments.clone();
    if opts.t_end > gates.t2 {
        segments.push(PulseSegment::free(opts.t_end - gates.t2)?);
    }
    let v0 = sim.steady_coords()?;
    let traj = sim.trajectory(&segments, &v0, opts.dt)?;
    let (times, states) = traj
        .into_iter()
        .map(|(t, v)| (t, sim.model().state_unchecked(&v)))
        .unzip();
    Ok(SingleShot {
        times,
        states,
        t1: gates.t1,
        t2: gates.t2,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DoubleShot {
    /// Start of the second operation.
    pub t_tilde: f64,
    /// Net excitations leaving the cold side from t = 0 until the system
    /// has relaxed back to ρ_ss after the second operation.
    pub x_total: f64,
    /// Cold-side transfer from t = 0 to the end of the second operation.
    pub x_until_second: f64,
    /// Drop of P(2_M) across step 2 of each operation.
    pub removed: [f64; 2],
}

/// Two demon operations, the second starting at `t_tilde`, with the memory
/// reset in between and after.
pub fn double_shot(p: &SystemParams, t_tilde: f64) -> Result<DoubleShot> {
    let sim = Simulator::new(DemonModel::full(p)?);
    let gates = gate_sequence(p)?;
    if !(t_tilde > gates.t2) {
        return Err(Error::InvalidParams(format!(
            "second operation at {t_tilde} must start after the first ends at {}",
            gates.t2
        )));
    }
    let reset = PulseSegment::reset(t_tilde - gates.t2)?;
    let p2m = sim
        .model()
        .basis()
        .functional(crate::tensor::embed(&crate::tensor::local::projector(3, 2), Subsystem::Qutrit, sim.model().layout())?.matrix());
    let mut v = sim.steady_coords()?;
    let mut x = 0.0;
    let mut removed = [0.0; 2];
    for (shot, removed_k) in removed.iter_mut().enumerate() {
        for (k, seg) in gates.segments.iter().enumerate() {
            if k == 3 {
                *removed_k = p2m.dot(&v);
            }
            let prop = sim.segment_propagator(seg)?;
            x += prop.accumulate(&v)[0];
            v = prop.apply(&v);
        }
        *removed_k -= p2m.dot(&v);
        if shot == 0 {
            let prop = sim.segment_propagator(&reset)?;
            x += prop.accumulate(&v)[0];
            v = prop.apply(&v);
        }
    }
    let tail = sim.relaxation_transfer(&reset, &v)?;
    Ok(DoubleShot {
        t_tilde,
        x_total: x + tail[0],
        x_until_second: x,
        removed,
    })
}

/// Populations and entropies through two operations, the second at
/// `t_tilde`, sampled until `opts.t_end` (or the end of the second
/// operation if later).
pub fn double_shot_trajectory(p: &SystemParams, t_tilde: f64, opts: ShotOptions) -> Result<SingleShot> {
    let sim = Simulator::new(DemonModel::full(p)?);
    let gates = gate_sequence(p)?;
    if !(t_tilde > gates.t2) {
        return Err(Error::InvalidParams(format!(
            "second operation at {t_tilde} must start after the first ends at {}",
            gates.t2
        )));
    }
    let mut segments = gates.segments.clone();
    segments.push(PulseSegment::reset(t_tilde - gates.t2)?);
    segments.extend(gates.segments.iter().cloned());
    let end = t_tilde + gates.t2;
    if opts.t_end > end {
        segments.push(PulseSegment::reset(opts.t_end - end)?);
    }
    let traj = sim.trajectory(&segments, &sim.steady_coords()?, opts.dt)?;
    let (times, states) = traj
        .into_iter()
        .map(|(t, v)| (t, sim.model().state_unchecked(&v)))
        .unzip();
    Ok(SingleShot {
        times,
        states,
        t1: gates.t1,
        t2: gates.t2,
    })
}
