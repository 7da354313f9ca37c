//! Independent reference integrators and random-state helpers.
#![allow(dead_code)]

use demonlab::liouville::Jump;
use demonlab::tensor::{CMatrix, C64};
use demonlab::{DensityMatrix, Simulator, SubsystemLayout};
use demonlab::protocol::Schedule;
use nalgebra::DVector;
use rand::Rng;
use rand_distr::StandardNormal;

/// −i[H, ρ] + Σ rate (LρL† − ½{L†L, ρ}).
pub fn lindblad_rhs(h: &CMatrix, jumps: &[(f64, CMatrix, CMatrix)], rho: &CMatrix) -> CMatrix {
    let mi = C64::new(0.0, -1.0);
    let mut out = (h * rho - rho * h) * mi;
    for (rate, l, ldl) in jumps {
        let r = C64::new(*rate, 0.0);
        out += (l * rho * l.adjoint() - (ldl * rho + rho * ldl) * C64::new(0.5, 0.0)) * r;
    }
    out
}

fn prepared(jumps: &[Jump]) -> Vec<(f64, CMatrix, CMatrix)> {
    jumps
        .iter()
        .filter(|j| j.rate != 0.0)
        .map(|j| (j.rate, j.op.clone(), j.op.adjoint() * &j.op))
        .collect()
}

/// Classical fourth-order Runge–Kutta with a step no larger than `step`.
pub fn rk4(h: &CMatrix, jumps: &[Jump], rho0: &CMatrix, tau: f64, step: f64) -> CMatrix {
    let jumps = prepared(jumps);
    let n = (tau / step).ceil().max(1.0) as usize;
    let dt = tau / n as f64;
    let half = C64::new(0.5 * dt, 0.0);
    let full = C64::new(dt, 0.0);
    let sixth = C64::new(dt / 6.0, 0.0);
    let mut rho = rho0.clone();
    for _ in 0..n {
        let k1 = lindblad_rhs(h, &jumps, &rho);
        let k2 = lindblad_rhs(h, &jumps, &(&rho + &k1 * half));
        let k3 = lindblad_rhs(h, &jumps, &(&rho + &k2 * half));
        let k4 = lindblad_rhs(h, &jumps, &(&rho + &k3 * full));
        rho += (k1 + (k2 + k3) * C64::new(2.0, 0.0) + k4) * sixth;
    }
    rho
}

/// Composite Simpson rule on samples f(a), f(a+h), …, f(b); needs an even
/// number of intervals.
pub fn simpson(samples: &[f64], h: f64) -> f64 {
    let n = samples.len() - 1;
    assert!(n >= 2 && n % 2 == 0, "simpson needs an even interval count, got {n}");
    let mut s = samples[0] + samples[n];
    for (k, f) in samples.iter().enumerate().take(n).skip(1) {
        s += if k % 2 == 1 { 4.0 } else { 2.0 } * f;
    }
    s * h / 3.0
}

/// Repeats the schedule segment by segment `cycles` times from `v0`,
/// returning the final state and the (cold, hot) transfer of every cycle.
pub fn repeated_cycles(sim: &Simulator, schedule: &Schedule, v0: &DVector<f64>, cycles: usize) -> (DVector<f64>, Vec<[f64; 2]>) {
    let mut v = v0.clone();
    let mut per_cycle = Vec::with_capacity(cycles);
    for _ in 0..cycles {
        let mut x = [0.0; 2];
        for seg in &schedule.segments {
            let p = sim.segment_propagator(seg).unwrap();
            let a = p.accumulate(&v);
            x[0] += a[0];
            x[1] += a[1];
            v = p.apply(&v);
        }
        per_cycle.push(x);
    }
    (v, per_cycle)
}

/// Random density matrix GG†/tr with a complex Gaussian G of the given rank.
pub fn random_density<R: Rng>(rng: &mut R, dim: usize, rank: usize) -> CMatrix {
    let g = CMatrix::from_fn(dim, rank, |_, _| {
        C64::new(rng.sample::<f64, _>(StandardNormal), rng.sample::<f64, _>(StandardNormal))
    });
    let m = &g * g.adjoint();
    let tr = m.trace();
    m / tr
}

/// Drops coherences between different excitation sectors.
pub fn dephase(m: &CMatrix, charges: &[i32]) -> CMatrix {
    CMatrix::from_fn(m.nrows(), m.ncols(), |i, j| if charges[i] == charges[j] { m[(i, j)] } else { C64::new(0.0, 0.0) })
}

/// c + [m > 0] + h for every index of the canonical layout.
pub fn canonical_charges() -> Vec<i32> {
    let l = SubsystemLayout::canonical();
    (0..l.dim())
        .map(|i| {
            let lab = l.labels(i);
            lab[0] as i32 + i32::from(lab[1] > 0) + lab[2] as i32
        })
        .collect()
}

pub fn density(m: CMatrix) -> DensityMatrix {
    DensityMatrix::new(SubsystemLayout::canonical(), m).unwrap()
}

pub mod checks {
    use super::*;
    use demonlab::liouville::DissipatorSet;
    use demonlab::observables::validation_window;
    use demonlab::protocol::build_cycle;
    use demonlab::{Controls, DemonModel, SystemParams};
    use rand::rngs::StdRng;
    use rand::SeedableRng;

    fn random_segment(rng: &mut StdRng) -> (Controls, DissipatorSet, f64) {
        let amp = rng.random_range(-40.0..40.0);
        let controls = match rng.random_range(0..4) {
            0 => Controls::NONE,
            1 => Controls { a_ym: amp, ..Controls::NONE },
            2 => Controls { a_yd: amp, ..Controls::NONE },
            _ => Controls { a_cz: amp.abs(), ..Controls::NONE },
        };
        let set = if rng.random_bool(0.5) { DissipatorSet::ALL } else { DissipatorSet::BATHS };
        (controls, set, rng.random_range(0.02..0.2))
    }

    /// Largest trace distance between exponential and RK4 propagation over
    /// `cases` random segments, parameters and starting states. The last
    /// case runs on the unrestricted Liouville space.
    pub fn expm_vs_rk4(cases: usize, seed: u64) -> f64 {
        let mut rng = StdRng::seed_from_u64(seed);
        let charges = canonical_charges();
        let mut worst: f64 = 0.0;
        for case in 0..cases {
            let p = SystemParams {
                gamma: [0.1, 2.0, 30.0][case % 3],
                ..Default::default()
            };
            let full_space = case + 1 == cases;
            let mut model = DemonModel::full(&p).unwrap();
            if full_space {
                model = model.with_full_basis();
            }
            let (controls, set, tau) = random_segment(&mut rng);
            let rho0 = random_density(&mut rng, 24, 3);
            let rho0 = if full_space { rho0 } else { dephase(&rho0, &charges) };
            let g = model.generator(controls, set).unwrap();
            let v = g.propagator(tau, &[]).unwrap().apply(&model.coords(&density(rho0.clone())).unwrap());
            let exact = model.state(&v).unwrap();
            let h = model.hamiltonian(controls).unwrap();
            let reference = density(rk4(h.matrix(), &model.jumps(set), &rho0, tau, 1e-4));
            worst = worst.max(exact.trace_distance(&reference).unwrap());
        }
        worst
    }

    /// Largest |accumulator − Simpson| over every segment of the cycle at
    /// each parameter point, for both currents.
    pub fn accumulators_vs_simpson(points: &[(f64, f64)]) -> f64 {
        let mut worst: f64 = 0.0;
        for &(gamma, period) in points {
            let p = SystemParams { gamma, period, ..Default::default() };
            let sim = Simulator::new(DemonModel::full(&p).unwrap());
            let schedule = build_cycle(&p).unwrap();
            let f = sim.model().current_functionals().to_vec();
            let mut v = sim.steady_coords().unwrap();
            for seg in &schedule.segments {
                let n = 2 * (seg.duration / 2e-3).ceil() as usize;
                let h = seg.duration / n as f64;
                let step = sim.propagator(seg, h).unwrap();
                let mut samples = [Vec::with_capacity(n + 1), Vec::with_capacity(n + 1)];
                let mut w = v.clone();
                for k in 0..=n {
                    if k > 0 {
                        w = step.apply(&w);
                    }
                    samples[0].push(f[0].dot(&w));
                    samples[1].push(f[1].dot(&w));
                }
                let whole = sim.segment_propagator(seg).unwrap();
                let acc = whole.accumulate(&v);
                for side in 0..2 {
                    worst = worst.max((acc[side] - simpson(&samples[side], h)).abs());
                }
                v = whole.apply(&v);
            }
        }
        worst
    }

    /// Largest difference between the fixed point of the composed cycle map
    /// and brute-force repetition through the validation window: state
    /// coordinates and the 10-cycle mean of the cold transfer.
    pub fn fixed_point_vs_repetition(points: &[(f64, f64)]) -> f64 {
        let mut worst: f64 = 0.0;
        for &(gamma, period) in points {
            let p = SystemParams { gamma, period, ..Default::default() };
            let sim = Simulator::new(DemonModel::full(&p).unwrap());
            let schedule = build_cycle(&p).unwrap();
            let map = sim.cycle_map(&schedule).unwrap();
            let fp = map.fixed_point().unwrap();
            let x_fp = map.accumulate(&fp)[0];
            let (start, end) = validation_window(&p);
            let (v, xs) = repeated_cycles(&sim, &schedule, &sim.steady_coords().unwrap(), end);
            let mean = xs[start..].iter().map(|x| x[0]).sum::<f64>() / (end - start) as f64;
            worst = worst.max((&v - &fp).amax()).max((mean - x_fp).abs());
        }
        worst
    }
}
