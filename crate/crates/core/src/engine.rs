//! Evolution of the demon circuit under piecewise-constant schedules.

use std::collections::HashMap;
use std::sync::{Arc, Mutex};

use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::liouville::{DissipatorSet, Generator, Propagator, PropagatorCache};
use crate::model::{Controls, DemonModel};
use crate::params::SystemParams;
use crate::protocol::{PulseSegment, Schedule};
use crate::tensor::DensityMatrix;

type GeneratorKey = (u64, u64, u64, DissipatorSet);

/// A model plus cached generators and propagators.
///
/// Every propagator carries two accumulator rows: the time integrals of
/// tr(j_C ρ) and tr(j_H ρ) over the segment.
pub struct Simulator {
    model: DemonModel,
    cache: Arc<PropagatorCache>,
    generators: Mutex<HashMap<GeneratorKey, Arc<Generator>>>,
}

impl Simulator {
    pub fn new(model: DemonModel) -> Self {
        Self::with_cache(model, Arc::new(PropagatorCache::default()))
    }

    pub fn with_cache(model: DemonModel, cache: Arc<PropagatorCache>) -> Self {
        Simulator {
            model,
            cache,
            generators: Mutex::new(HashMap::new()),
        }
    }

    pub fn model(&self) -> &DemonModel {
        &self.model
    }

    pub fn params(&self) -> &SystemParams {
        self.model.params()
    }

    pub fn cache(&self) -> &Arc<PropagatorCache> {
        &self.cache
    }

    pub fn generator(&self, controls: Controls, dissipators: DissipatorSet) -> Result<Arc<Generator>> {
        let key = (
            controls.a_ym.to_bits(),
            controls.a_yd.to_bits(),
            controls.a_cz.to_bits(),
            dissipators,
        );
        if let Some(g) = self.generators.lock().unwrap_or_else(|e| e.into_inner()).get(&key) {
            return Ok(g.clone());
        }
        let g = Arc::new(self.model.generator(controls, dissipators)?);
        self.generators
            .lock()
            .unwrap_or_else(|e| e.into_inner())
            .insert(key, g.clone());
        Ok(g)
    }

    pub fn segment_generator(&self, seg: &PulseSegment) -> Result<Arc<Generator>> {
        let dissipators = DissipatorSet {
            demon: seg.demon_reset,
            ..DissipatorSet::BATHS
        };
        self.generator(seg.controls, dissipators)
    }

    /// Propagator for `tau` under the segment's generator.
    pub fn propagator(&self, seg: &PulseSegment, tau: f64) -> Result<Arc<Propagator>> {
        let g = self.segment_generator(seg)?;
        self.cache.get_or_compute(&g, tau, self.model.current_functionals())
    }

    pub fn segment_propagator(&self, seg: &PulseSegment) -> Result<Arc<Propagator>> {
        self.propagator(seg, seg.duration)
    }

    /// Ordered product of the segment propagators.
    pub fn cycle_map(&self, schedule: &Schedule) -> Result<Propagator> {
        let (first, rest) = schedule.segments.split_first().ok_or(Error::EmptySchedule)?;
        let mut map = (*self.segment_propagator(first)?).clone();
        for seg in rest {
            map = map.then(&*self.segment_propagator(seg)?)?;
        }
        Ok(map)
    }

    pub fn steady_state(&self) -> Result<DensityMatrix> {
        self.model.steady_state()
    }

    pub fn steady_coords(&self) -> Result<DVector<f64>> {
        self.model.coords(&self.model.steady_state()?)
    }

    /// State after the whole schedule and the integrated (cold, hot) currents.
    pub fn evolve(&self, schedule: &Schedule, v: &DVector<f64>) -> Result<(DVector<f64>, [f64; 2])> {
        let mut v = v.clone();
        let mut acc = [0.0; 2];
        for seg in &schedule.segments {
            let p = self.segment_propagator(seg)?;
            let a = p.accumulate(&v);
            acc[0] += a[0];
            acc[1] += a[1];
            v = p.apply(&v);
        }
        Ok((v, acc))
    }

    /// States along the segments, sampled at each boundary and on a grid of
    /// spacing at most `dt` inside each segment.
    pub fn trajectory(&self, segments: &[PulseSegment], v0: &DVector<f64>, dt: f64) -> Result<Vec<(f64, DVector<f64>)>> {
        if !(dt > 0.0) {
            return Err(Error::InvalidParams(format!("sampling step {dt} must be positive")));
        }
        let mut out = vec![(0.0, v0.clone())];
        let mut t0 = 0.0;
        let mut v = v0.clone();
        for seg in segments {
            let steps = (seg.duration / dt).ceil().max(1.0) as usize;
            let h = seg.duration / steps as f64;
            let p = self.propagator(seg, h)?;
            for k in 1..=steps {
                v = p.apply(&v);
                out.push((t0 + h * k as f64, v.clone()));
            }
            t0 += seg.duration;
            if let Some(last) = out.last_mut() {
                last.0 = t0;
            }
        }
        Ok(out)
    }

    /// ∫₀^∞ of the (cold, hot) currents while free evolution with `seg`'s
    /// generator relaxes `v` back to its stationary state.
    pub fn relaxation_transfer(&self, seg: &PulseSegment, v: &DVector<f64>) -> Result<[f64; 2]> {
        let g = self.segment_generator(seg)?;
        let basis = g.basis();
        let v_ss = g.stationary_state()?;
        let mut m = g.matrix().clone();
        m += &v_ss * basis.trace_functional().transpose();
        let rhs = -(v - &v_ss);
        let x = m
            .lu()
            .solve(&rhs)
            .ok_or(Error::DegenerateFixedPoint {
                unit_eigenvalues: 2,
                tolerance: 0.0,
            })?;
        let f = self.model.current_functionals();
        Ok([f[0].dot(&x), f[1].dot(&x)])
    }
}

/// exp(gen·τ) applied to ρ. The output is validated as a density matrix.
pub fn propagate_segment(gen: &Generator, tau: f64, rho: &DensityMatrix) -> Result<DensityMatrix> {
    if tau < 0.0 || tau.is_nan() {
        return Err(Error::NegativeDuration(tau));
    }
    if tau == 0.0 {
        return Ok(rho.clone());
    }
    let basis = gen.basis();
    let v = basis.to_coords(rho.matrix())?;
    let p = gen.propagator(tau, &[])?;
    DensityMatrix::new(rho.layout().clone(), basis.from_coords(&p.apply(&v)))
}

/// Undriven stationary state of the full model with the memory in |0_D⟩.
pub fn steady_state(p: &SystemParams) -> Result<DensityMatrix> {
    DemonModel::full(p)?.steady_state()
}

/// Coordinates of the unique fixed point of a one-period map.
pub fn limit_cycle(map: &Propagator) -> Result<DVector<f64>> {
    map.fixed_point()
}

/// The fixed point as a density matrix of `model`.
pub fn limit_cycle_state(model: &DemonModel, map: &Propagator) -> Result<DensityMatrix> {
    if map.basis() != model.basis() {
        return Err(Error::InvalidLayout("map and model use different Liouville bases".into()));
    }
    model.state(&limit_cycle(map)?)
}
