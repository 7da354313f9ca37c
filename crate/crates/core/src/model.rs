//! Hamiltonians, jump operators and current operators of the demon circuit.
//!
//! Everything is written in the rotating frame of the bare level splittings.
//! The couplings are resonant and the drive phases cancel the frame rotation,
//! so each pulse segment has a time-independent generator.

use std::sync::Arc;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::liouville::{DissipatorSet, Generator, Jump, LiouvilleBasis};
use crate::observables::CurrentOperators;
use crate::params::{DerivedParams, SystemParams};
use crate::tensor::{
    embed, embed_product, local, CMatrix, DensityMatrix, OperatorMatrix, Subsystem, SubsystemLayout, C64,
};

/// Control amplitudes of the drive Hamiltonian, in units of J.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Controls {
    /// Y drive on the qutrit 1↔2 transition.
    pub a_ym: f64,
    /// Y drive on the demon memory.
    pub a_yd: f64,
    /// Phase on |2_M 1_D⟩.
    pub a_cz: f64,
}

impl Controls {
    pub const NONE: Controls = Controls {
        a_ym: 0.0,
        a_yd: 0.0,
        a_cz: 0.0,
    };

    pub fn active_count(&self) -> usize {
        [self.a_ym, self.a_yd, self.a_cz].iter().filter(|a| **a != 0.0).count()
    }

    pub fn is_finite(&self) -> bool {
        self.a_ym.is_finite() && self.a_yd.is_finite() && self.a_cz.is_finite()
    }

    pub fn is_zero(&self) -> bool {
        self.active_count() == 0
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    /// Cold qubit, qutrit, hot qubit and demon (24 levels).
    Full,
    /// Qubits eliminated in the Born–Markov–secular limit; qutrit and demon (6 levels).
    Reduced,
}

impl ModelKind {
    pub fn label(self) -> &'static str {
        match self {
            ModelKind::Full => "full",
            ModelKind::Reduced => "reduced",
        }
    }
}

impl std::str::FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "full" => Ok(ModelKind::Full),
            "reduced" => Ok(ModelKind::Reduced),
            _ => Err(Error::InvalidParams(format!("unknown model {s:?}"))),
        }
    }
}

/// Rates of the qutrit master equation after eliminating the qubits.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReducedRates {
    /// |2_M⟩ → |0_M⟩, excitation handed to the cold qubit.
    pub cold_down: f64,
    pub cold_up: f64,
    /// |1_M⟩ → |0_M⟩, excitation handed to the hot qubit.
    pub hot_down: f64,
    pub hot_up: f64,
}

impl ReducedRates {
    pub fn new(p: &SystemParams) -> Result<Self> {
        if !(p.gamma > 0.0) {
            return Err(Error::InvalidParams(format!(
                "reduced model needs gamma > 0, got {}",
                p.gamma
            )));
        }
        let d = p.derive()?;
        let j2 = p.j * p.j;
        let cold = 8.0 * j2 / (p.gamma * (2.0 * d.n_c + 1.0));
        let hot = 4.0 * j2 / (p.gamma * (2.0 * d.n_h + 1.0));
        Ok(ReducedRates {
            cold_down: cold * (1.0 - d.lambda_c),
            cold_up: cold * d.lambda_c,
            hot_down: hot * (1.0 - d.lambda_h),
            hot_up: hot * d.lambda_h,
        })
    }
}

/// Operators and generators for one parameter point.
#[derive(Clone, Debug)]
pub struct DemonModel {
    kind: ModelKind,
    params: SystemParams,
    derived: DerivedParams,
    layout: SubsystemLayout,
    basis: Arc<LiouvilleBasis>,
    coupling: CMatrix,
    drive_m: CMatrix,
    drive_d: Option<CMatrix>,
    cz: Option<CMatrix>,
    cold_jumps: Vec<Jump>,
    hot_jumps: Vec<Jump>,
    demon_jump: Option<Jump>,
    currents: CurrentOperators,
    functionals: Vec<DVector<f64>>,
}

/// Conserved excitation number used to restrict the Liouville space.
fn charges(layout: &SubsystemLayout) -> Vec<i32> {
    (0..layout.dim())
        .map(|i| {
            let label = |s| layout.label_of(i, s).unwrap_or(0) as i32;
            let m = layout.label_of(i, Subsystem::Qutrit).unwrap_or(0);
            label(Subsystem::Cold) + i32::from(m > 0) + label(Subsystem::Hot)
        })
        .collect()
}

impl DemonModel {
    pub fn new(kind: ModelKind, params: &SystemParams) -> Result<Self> {
        Self::build(kind, params, true)
    }

    pub fn full(params: &SystemParams) -> Result<Self> {
        Self::new(ModelKind::Full, params)
    }

    pub fn reduced(params: &SystemParams) -> Result<Self> {
        Self::new(ModelKind::Reduced, params)
    }

    /// The same model without the demon memory, used for steady states.
    pub fn without_demon(kind: ModelKind, params: &SystemParams) -> Result<Self> {
        Self::build(kind, params, false)
    }

    /// Same operators on the unrestricted Liouville space (all coherences,
    /// including those between excitation sectors).
    pub fn with_full_basis(mut self) -> Self {
        let basis = Arc::new(LiouvilleBasis::full(self.layout.dim()));
        self.functionals = vec![
            basis.functional(self.currents.cold.matrix()),
            basis.functional(self.currents.hot.matrix()),
        ];
        self.basis = basis;
        self
    }

    fn build(kind: ModelKind, params: &SystemParams, with_demon: bool) -> Result<Self> {
        params.validate_physics()?;
        let derived = params.derive()?;
        let mut slots = match kind {
            ModelKind::Full => vec![Subsystem::Cold, Subsystem::Qutrit, Subsystem::Hot],
            ModelKind::Reduced => vec![Subsystem::Qutrit],
        };
        if with_demon {
            slots.push(Subsystem::Demon);
        }
        let layout = SubsystemLayout::new(slots)?;
        let basis = Arc::new(LiouvilleBasis::sector(&charges(&layout)));
        let m = |to, from| local::transition(3, to, from);
        let j = params.j;

        let (coupling, cold_jumps, hot_jumps, currents) = match kind {
            ModelKind::Full => {
                let cm = embed_product(
                    &[(Subsystem::Cold, &local::sigma_minus()), (Subsystem::Qutrit, &m(2, 0))],
                    &layout,
                )?
                .into_matrix();
                let mh = embed_product(
                    &[(Subsystem::Qutrit, &m(0, 1)), (Subsystem::Hot, &local::sigma_plus())],
                    &layout,
                )?
                .into_matrix();
                let s2 = std::f64::consts::SQRT_2;
                let coupling = (&cm + cm.adjoint()) * C64::new(s2 * j, 0.0) + (&mh + mh.adjoint()) * C64::new(j, 0.0);
                let lower = |s| embed(&local::sigma_minus(), s, &layout).map(OperatorMatrix::into_matrix);
                let raise = |s| embed(&local::sigma_plus(), s, &layout).map(OperatorMatrix::into_matrix);
                let g = params.gamma;
                let cold = vec![
                    Jump::new(g * (derived.n_c + 1.0), lower(Subsystem::Cold)?),
                    Jump::new(g * derived.n_c, raise(Subsystem::Cold)?),
                ];
                let hot = vec![
                    Jump::new(g * (derived.n_h + 1.0), lower(Subsystem::Hot)?),
                    Jump::new(g * derived.n_h, raise(Subsystem::Hot)?),
                ];
                let minus_i = C64::new(0.0, -1.0);
                let j_c = (&cm - cm.adjoint()) * (minus_i * s2 * j);
                let j_h = (&mh - mh.adjoint()) * (minus_i * j);
                let currents = CurrentOperators::new(
                    OperatorMatrix::hermitian(layout.clone(), j_c)?,
                    OperatorMatrix::hermitian(layout.clone(), j_h)?,
                )?;
                (coupling, cold, hot, currents)
            }
            ModelKind::Reduced => {
                let rates = ReducedRates::new(params)?;
                let op = |to, from| embed(&m(to, from), Subsystem::Qutrit, &layout).map(OperatorMatrix::into_matrix);
                let cold = vec![
                    Jump::new(rates.cold_down, op(0, 2)?),
                    Jump::new(rates.cold_up, op(2, 0)?),
                ];
                let hot = vec![Jump::new(rates.hot_down, op(0, 1)?), Jump::new(rates.hot_up, op(1, 0)?)];
                // Currents are the bath parts of d⟨P_2⟩/dt and −d⟨P_1⟩/dt.
                let p2 = op(2, 2)?;
                let p1 = op(1, 1)?;
                let j_c = adjoint_dissipator(&cold, &p2);
                let j_h = -adjoint_dissipator(&hot, &p1);
                let currents = CurrentOperators::new(
                    OperatorMatrix::hermitian(layout.clone(), j_c)?,
                    OperatorMatrix::hermitian(layout.clone(), j_h)?,
                )?;
                let d = layout.dim();
                (CMatrix::zeros(d, d), cold, hot, currents)
            }
        };

        let drive_m = embed(&local::y_drive(3, 2, 1), Subsystem::Qutrit, &layout)?.into_matrix();
        let (drive_d, cz, demon_jump) = if with_demon {
            (
                Some(embed(&local::y_drive(2, 1, 0), Subsystem::Demon, &layout)?.into_matrix()),
                Some(
                    embed_product(
                        &[
                            (Subsystem::Qutrit, &local::projector(3, 2)),
                            (Subsystem::Demon, &local::projector(2, 1)),
                        ],
                        &layout,
                    )?
                    .into_matrix(),
                ),
                Some(Jump::new(
                    params.gamma_d,
                    embed(&local::sigma_minus(), Subsystem::Demon, &layout)?.into_matrix(),
                )),
            )
        } else {
            (None, None, None)
        };
        let functionals = vec![
            basis.functional(currents.cold.matrix()),
            basis.functional(currents.hot.matrix()),
        ];
        Ok(DemonModel {
            kind,
            params: *params,
            derived,
            layout,
            basis,
            coupling,
            drive_m,
            drive_d,
            cz,
            cold_jumps,
            hot_jumps,
            demon_jump,
            currents,
            functionals,
        })
    }

    pub fn kind(&self) -> ModelKind {
        self.kind
    }

    pub fn params(&self) -> &SystemParams {
        &self.params
    }

    pub fn derived(&self) -> &DerivedParams {
        &self.derived
    }

    pub fn layout(&self) -> &SubsystemLayout {
        &self.layout
    }

    pub fn basis(&self) -> &Arc<LiouvilleBasis> {
        &self.basis
    }

    pub fn has_demon(&self) -> bool {
        self.drive_d.is_some()
    }

    pub fn currents(&self) -> &CurrentOperators {
        &self.currents
    }

    /// Rows giving tr(j_C ρ) and tr(j_H ρ) in Liouville coordinates.
    pub fn current_functionals(&self) -> &[DVector<f64>] {
        &self.functionals
    }

    pub fn hamiltonian(&self, controls: Controls) -> Result<OperatorMatrix> {
        if !controls.is_finite() {
            return Err(Error::InvalidSegment(format!("non-finite amplitudes {controls:?}")));
        }
        let mut h = self.coupling.clone();
        if controls.a_ym != 0.0 {
            h += &self.drive_m * C64::new(controls.a_ym, 0.0);
        }
        for (amp, term) in [(controls.a_yd, &self.drive_d), (controls.a_cz, &self.cz)] {
            if amp == 0.0 {
                continue;
            }
            let term = term.as_ref().ok_or(Error::MissingSubsystem(Subsystem::Demon))?;
            h += term * C64::new(amp, 0.0);
        }
        OperatorMatrix::hermitian(self.layout.clone(), h)
    }

    pub fn jumps(&self, dissipators: DissipatorSet) -> Vec<Jump> {
        let mut out = Vec::new();
        if dissipators.cold {
            out.extend(self.cold_jumps.iter().cloned());
        }
        if dissipators.hot {
            out.extend(self.hot_jumps.iter().cloned());
        }
        if dissipators.demon {
            out.extend(self.demon_jump.iter().cloned());
        }
        out
    }

    pub fn generator(&self, controls: Controls, dissipators: DissipatorSet) -> Result<Generator> {
        let h = self.hamiltonian(controls)?;
        Generator::lindblad(self.basis.clone(), h.matrix(), &self.jumps(dissipators), dissipators)
    }

    pub fn coords(&self, rho: &DensityMatrix) -> Result<DVector<f64>> {
        if rho.layout() != &self.layout {
            return Err(Error::InvalidLayout(format!(
                "state on {} given to model on {}",
                rho.layout(),
                self.layout
            )));
        }
        self.basis.to_coords(rho.matrix())
    }

    /// State from Liouville coordinates, validated against the global policy.
    pub fn state(&self, v: &DVector<f64>) -> Result<DensityMatrix> {
        DensityMatrix::new(self.layout.clone(), self.basis.from_coords(v))
    }

    pub(crate) fn state_unchecked(&self, v: &DVector<f64>) -> DensityMatrix {
        DensityMatrix::new_unchecked(self.layout.clone(), self.basis.from_coords(v))
    }

    /// Undriven stationary state of the baths and qutrit, with the demon in |0_D⟩.
    pub fn steady_state(&self) -> Result<DensityMatrix> {
        let passive = Self::build(self.kind, &self.params, false)?;
        let g = passive.generator(Controls::NONE, DissipatorSet::BATHS)?;
        let v = g.stationary_state()?;
        let rho = passive.state_unchecked(&v);
        if !self.has_demon() {
            return Ok(rho);
        }
        let ground = DensityMatrix::basis_state(&SubsystemLayout::single(Subsystem::Demon), &[0])?;
        DensityMatrix::product(&[&rho, &ground])
    }
}

/// D†(A) = Σ rate (L†AL − ½{L†L, A}).
fn adjoint_dissipator(jumps: &[Jump], a: &CMatrix) -> CMatrix {
    let mut out = CMatrix::zeros(a.nrows(), a.ncols());
    for j in jumps {
        let ld = j.op.adjoint();
        let k = &ld * &j.op;
        out += (&ld * a * &j.op - (&k * a + a * &k) * C64::new(0.5, 0.0)) * C64::new(j.rate, 0.0);
    }
    out
}

/// Full-model Hamiltonian for the given controls.
pub fn build_hamiltonian(p: &SystemParams, controls: Controls) -> Result<OperatorMatrix> {
    DemonModel::full(p)?.hamiltonian(controls)
}

/// Full-model generator with the chosen dissipators switched on.
pub fn build_generator(p: &SystemParams, controls: Controls, dissipators: DissipatorSet) -> Result<Generator> {
    DemonModel::full(p)?.generator(controls, dissipators)
}

/// P(2_M) of the undriven steady state, e^{−ω_C/T_C}/(1 + e^{−ω_H/T_H} + e^{−ω_C/T_C}).
pub fn gibbs_qutrit_weights(p: &SystemParams) -> [f64; 3] {
    let c = (-p.omega_c / p.temp_c).exp();
    let h = (-p.omega_h / p.temp_h).exp();
    let z = 1.0 + h + c;
    [1.0 / z, h / z, c / z]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::expectation;
    use approx::assert_abs_diff_eq;

    #[test]
    fn full_sector_size() {
        let m = DemonModel::full(&SystemParams::default()).unwrap();
        assert_eq!(m.layout().dim(), 24);
        // charge blocks of sizes 2, 8, 10, 4
        assert_eq!(m.basis().len(), 4 + 64 + 100 + 16);
        assert!(!m.basis().is_full());
    }

    #[test]
    fn bare_hamiltonian_is_coupling_only() {
        let h = build_hamiltonian(&SystemParams::default(), Controls::NONE).unwrap();
        assert_abs_diff_eq!(h.max_abs(), std::f64::consts::SQRT_2, epsilon = 1e-15);
        assert!(h.hermiticity_defect() == 0.0);
    }

    #[test]
    fn cz_term_sits_on_two_states() {
        let p = SystemParams {
            j: 0.0,
            ..Default::default()
        };
        let a = std::f64::consts::PI / p.tau_cz;
        let h = build_hamiltonian(
            &p,
            Controls {
                a_cz: a,
                ..Controls::NONE
            },
        )
        .unwrap();
        let layout = SubsystemLayout::canonical();
        let mut hits = 0;
        for i in 0..24 {
            let l = layout.labels(i);
            let expect = if l[1] == 2 && l[3] == 1 { a } else { 0.0 };
            assert_abs_diff_eq!(h.matrix()[(i, i)].re, expect, epsilon = 1e-12);
            hits += usize::from(expect != 0.0);
        }
        // |2_M 1_D⟩ with either cold and hot label
        assert_eq!(hits, 4);
    }

    #[test]
    fn generator_is_trace_preserving_and_sector_closed() {
        let m = DemonModel::full(&SystemParams::default()).unwrap();
        for c in [
            Controls::NONE,
            Controls { a_ym: 3.0, ..Controls::NONE },
            Controls { a_yd: 3.0, ..Controls::NONE },
            Controls { a_cz: 3.0, ..Controls::NONE },
        ] {
            let g = m.generator(c, DissipatorSet::ALL).unwrap();
            assert!(g.trace_defect() < 1e-12 * g.matrix().amax());
        }
    }

    #[test]
    fn steady_state_matches_gibbs() {
        let p = SystemParams::default();
        let m = DemonModel::full(&p).unwrap();
        let rho = m.steady_state().unwrap();
        let w = gibbs_qutrit_weights(&p);
        assert_abs_diff_eq!(w[2], 0.1030, epsilon = 1e-4);
        assert_abs_diff_eq!(rho.level_population(Subsystem::Qutrit, 2).unwrap(), w[2], epsilon = 1e-10);
        assert_abs_diff_eq!(rho.level_population(Subsystem::Demon, 1).unwrap(), 0.0, epsilon = 1e-15);
        let g = m.generator(Controls::NONE, DissipatorSet::BATHS).unwrap();
        let r = g.apply(&m.coords(&rho).unwrap()).amax();
        assert!(r < 1e-10, "residual {r}");
    }

    #[test]
    fn reduced_steady_state_matches_gibbs() {
        let p = SystemParams {
            gamma: 30.0,
            ..Default::default()
        };
        let m = DemonModel::reduced(&p).unwrap();
        let rho = m.steady_state().unwrap();
        let w = gibbs_qutrit_weights(&p);
        for (k, wk) in w.iter().enumerate() {
            assert_abs_diff_eq!(rho.level_population(Subsystem::Qutrit, k).unwrap(), *wk, epsilon = 1e-8);
        }
    }

    #[test]
    fn stationary_currents_vanish() {
        for kind in [ModelKind::Full, ModelKind::Reduced] {
            let m = DemonModel::new(kind, &SystemParams::default()).unwrap();
            let rho = m.steady_state().unwrap();
            for op in [&m.currents().cold, &m.currents().hot] {
                assert!(expectation(op, &rho).unwrap().norm() < 1e-10);
            }
        }
    }

    #[test]
    fn reduced_rates_detailed_balance() {
        let p = SystemParams {
            gamma: 30.0,
            ..Default::default()
        };
        let r = ReducedRates::new(&p).unwrap();
        assert_abs_diff_eq!(r.cold_down, 0.1599, epsilon = 1e-4);
        assert_abs_diff_eq!(r.cold_down / r.cold_up, (p.omega_c / p.temp_c).exp(), epsilon = 1e-10);
        assert_abs_diff_eq!(r.hot_down / r.hot_up, (p.omega_h / p.temp_h).exp(), epsilon = 1e-10);
        assert!(ReducedRates::new(&SystemParams { gamma: 0.0, ..p }).is_err());
    }

    #[test]
    fn demon_controls_need_demon() {
        let m = DemonModel::without_demon(ModelKind::Full, &SystemParams::default()).unwrap();
        assert!(m.hamiltonian(Controls { a_cz: 1.0, ..Controls::NONE }).is_err());
        assert!(m.hamiltonian(Controls { a_ym: 1.0, ..Controls::NONE }).is_ok());
    }
}
