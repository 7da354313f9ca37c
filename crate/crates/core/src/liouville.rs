//! Lindblad generators and their exponentials in a real Hermitian basis.
//!
//! A Hermitian d×d matrix ρ is stored as a real vector of coordinates:
//! `Diag(a) = ρ_aa`, `Re(a,b) = Re ρ_ab` and `Im(a,b) = Im ρ_ab` for a < b,
//! ordered row by row over the upper triangle. The matching basis matrices
//! are |a⟩⟨a|, |a⟩⟨b| + |b⟩⟨a| and i|a⟩⟨b| − i|b⟩⟨a|. Lindblad generators map
//! Hermitian matrices to Hermitian matrices, so in these coordinates both the
//! generator and its exponential are real d²×d² matrices.
//!
//! A basis may be restricted to a *sector*: only coherences between basis
//! states of equal charge are kept. When the dynamics conserves that charge
//! up to jumps that shift bra and ket together, the sector is invariant and
//! the restriction is exact; [`Generator::lindblad`] verifies this.
//!
//! The complex superoperator in the column-major convention,
//! `vec(ρ)[i + j·d] = ρ_ij`, is available from [`Generator::to_superoperator`]
//! for full bases.

use std::collections::hash_map::DefaultHasher;
use std::collections::{HashMap, VecDeque};
use std::hash::{Hash, Hasher};
use std::sync::{Arc, RwLock};

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::policy::NumericalPolicy;
use crate::tensor::{CMatrix, C64, I, ZERO};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Coord {
    Diag(usize),
    Re(usize, usize),
    Im(usize, usize),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LiouvilleBasis {
    dim: usize,
    coords: Vec<Coord>,
    /// Coordinate index of `Diag(a)` or `Re(a,b)` for every kept pair a ≤ b.
    pair_index: Vec<Option<usize>>,
}

impl LiouvilleBasis {
    /// All d² coordinates.
    pub fn full(dim: usize) -> Self {
        Self::sector(&vec![0; dim])
    }

    /// Coordinates for pairs of basis states with equal charge.
    pub fn sector(charges: &[i32]) -> Self {
        let dim = charges.len();
        let mut coords = Vec::new();
        let mut pair_index = vec![None; dim * dim];
        for a in 0..dim {
            for b in a..dim {
                if charges[a] != charges[b] {
                    continue;
                }
                pair_index[a * dim + b] = Some(coords.len());
                if a == b {
                    coords.push(Coord::Diag(a));
                } else {
                    coords.push(Coord::Re(a, b));
                    coords.push(Coord::Im(a, b));
                }
            }
        }
        LiouvilleBasis {
            dim,
            coords,
            pair_index,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.coords.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn is_full(&self) -> bool {
        self.coords.len() == self.dim * self.dim
    }

    pub fn coords(&self) -> &[Coord] {
        &self.coords
    }

    pub fn contains_pair(&self, a: usize, b: usize) -> bool {
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        self.pair_index[lo * self.dim + hi].is_some()
    }

    /// Largest entry of `m` outside the sector.
    pub fn leakage(&self, m: &CMatrix) -> f64 {
        let mut worst: f64 = 0.0;
        for a in 0..self.dim {
            for b in 0..self.dim {
                if !self.contains_pair(a, b) {
                    worst = worst.max(m[(a, b)].norm());
                }
            }
        }
        worst
    }

    /// Coordinates of a Hermitian matrix. Fails if it has weight outside the sector.
    pub fn to_coords(&self, m: &CMatrix) -> Result<DVector<f64>> {
        if m.nrows() != self.dim || m.ncols() != self.dim {
            return Err(Error::DimensionMismatch {
                context: "Liouville coordinates".into(),
                expected: self.dim,
                actual: m.nrows(),
            });
        }
        if !self.is_full() {
            let leak = self.leakage(m);
            let scale = m.iter().map(|z| z.norm()).fold(1e-300, f64::max);
            if leak > 1e-12 * scale.max(1.0) {
                return Err(Error::OutOfSector { residual: leak });
            }
        }
        Ok(self.read_coords(m))
    }

    fn read_coords(&self, m: &CMatrix) -> DVector<f64> {
        DVector::from_iterator(
            self.coords.len(),
            self.coords.iter().map(|c| match *c {
                Coord::Diag(a) => m[(a, a)].re,
                Coord::Re(a, b) => m[(a, b)].re,
                Coord::Im(a, b) => m[(a, b)].im,
            }),
        )
    }

    pub fn from_coords(&self, v: &DVector<f64>) -> CMatrix {
        let mut m = CMatrix::zeros(self.dim, self.dim);
        for (c, &x) in self.coords.iter().zip(v.iter()) {
            match *c {
                Coord::Diag(a) => m[(a, a)].re = x,
                Coord::Re(a, b) => {
                    m[(a, b)].re = x;
                    m[(b, a)].re = x;
                }
                Coord::Im(a, b) => {
                    m[(a, b)].im = x;
                    m[(b, a)].im = -x;
                }
            }
        }
        m
    }

    /// Basis matrix of coordinate `k`.
    pub fn element(&self, k: usize) -> CMatrix {
        let mut m = CMatrix::zeros(self.dim, self.dim);
        match self.coords[k] {
            Coord::Diag(a) => m[(a, a)] = C64::new(1.0, 0.0),
            Coord::Re(a, b) => {
                m[(a, b)] = C64::new(1.0, 0.0);
                m[(b, a)] = C64::new(1.0, 0.0);
            }
            Coord::Im(a, b) => {
                m[(a, b)] = I;
                m[(b, a)] = -I;
            }
        }
        m
    }

    /// Row `r` with `r · coords(ρ) = tr ρ`.
    pub fn trace_functional(&self) -> DVector<f64> {
        DVector::from_iterator(
            self.coords.len(),
            self.coords
                .iter()
                .map(|c| if matches!(c, Coord::Diag(_)) { 1.0 } else { 0.0 }),
        )
    }

    /// Row `r` with `r · coords(ρ) = tr(K ρ)` for Hermitian `K`.
    pub fn functional(&self, k: &CMatrix) -> DVector<f64> {
        DVector::from_iterator(
            self.coords.len(),
            self.coords.iter().map(|c| match *c {
                Coord::Diag(a) => k[(a, a)].re,
                Coord::Re(a, b) => 2.0 * k[(a, b)].re,
                Coord::Im(a, b) => 2.0 * k[(a, b)].im,
            }),
        )
    }

    /// Coordinates of 1/d.
    pub fn maximally_mixed(&self) -> DVector<f64> {
        self.trace_functional() / self.dim as f64
    }
}

/// A jump operator with its rate.
#[derive(Clone, Debug)]
pub struct Jump {
    pub rate: f64,
    pub op: CMatrix,
}

impl Jump {
    pub fn new(rate: f64, op: CMatrix) -> Self {
        Jump { rate, op }
    }
}

/// Which Markovian channels contribute to a generator.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct DissipatorSet {
    pub cold: bool,
    pub hot: bool,
    pub demon: bool,
}

impl DissipatorSet {
    pub const NONE: DissipatorSet = DissipatorSet {
        cold: false,
        hot: false,
        demon: false,
    };
    pub const BATHS: DissipatorSet = DissipatorSet {
        cold: true,
        hot: true,
        demon: false,
    };
    pub const ALL: DissipatorSet = DissipatorSet {
        cold: true,
        hot: true,
        demon: true,
    };
}

/// L(E_ab) for the elementary matrix E_ab = |a⟩⟨b|.
fn lindblad_on_elementary(h: &CMatrix, jumps: &[(f64, CMatrix, CMatrix)], a: usize, b: usize) -> CMatrix {
    let d = h.nrows();
    let mut out = CMatrix::zeros(d, d);
    // −i(H E_ab − E_ab H)
    for i in 0..d {
        out[(i, b)] += -I * h[(i, a)];
        out[(a, i)] += I * h[(b, i)];
    }
    for (rate, l, k) in jumps {
        let g = C64::new(*rate, 0.0);
        let half = C64::new(0.5 * rate, 0.0);
        // L E_ab L† = L|a⟩ (L|b⟩)†
        for i in 0..d {
            let la = l[(i, a)];
            if la == ZERO {
                continue;
            }
            for j in 0..d {
                let lb = l[(j, b)];
                if lb != ZERO {
                    out[(i, j)] += g * la * lb.conj();
                }
            }
        }
        for i in 0..d {
            out[(i, b)] -= half * k[(i, a)];
            out[(a, i)] -= half * k[(b, i)];
        }
    }
    out
}

fn fingerprint_matrix(m: &DMatrix<f64>) -> u64 {
    let mut h = DefaultHasher::new();
    m.nrows().hash(&mut h);
    m.ncols().hash(&mut h);
    for x in m.iter() {
        x.to_bits().hash(&mut h);
    }
    h.finish()
}

fn fingerprint_rows(rows: &[DVector<f64>]) -> u64 {
    let mut h = DefaultHasher::new();
    rows.len().hash(&mut h);
    for r in rows {
        for x in r.iter() {
            x.to_bits().hash(&mut h);
        }
    }
    h.finish()
}

/// Real matrix of the Lindblad generator on a (possibly restricted) basis.
#[derive(Clone, Debug)]
pub struct Generator {
    basis: Arc<LiouvilleBasis>,
    matrix: DMatrix<f64>,
    dissipators: DissipatorSet,
    fingerprint: u64,
}

impl Generator {
    /// ρ̇ = −i[H, ρ] + Σ rate (L ρ L† − ½{L†L, ρ}).
    pub fn lindblad(
        basis: Arc<LiouvilleBasis>,
        hamiltonian: &CMatrix,
        jumps: &[Jump],
        dissipators: DissipatorSet,
    ) -> Result<Self> {
        let d = basis.dim();
        if hamiltonian.nrows() != d {
            return Err(Error::DimensionMismatch {
                context: "Hamiltonian vs Liouville basis".into(),
                expected: d,
                actual: hamiltonian.nrows(),
            });
        }
        let prepared: Vec<(f64, CMatrix, CMatrix)> = jumps
            .iter()
            .filter(|j| j.rate != 0.0)
            .map(|j| (j.rate, j.op.clone(), j.op.adjoint() * &j.op))
            .collect();
        let n = basis.len();
        let mut matrix = DMatrix::zeros(n, n);
        let mut leak: f64 = 0.0;
        for (k, c) in basis.coords().iter().enumerate() {
            let image = match *c {
                Coord::Diag(a) => lindblad_on_elementary(hamiltonian, &prepared, a, a),
                Coord::Re(a, b) => {
                    lindblad_on_elementary(hamiltonian, &prepared, a, b)
                        + lindblad_on_elementary(hamiltonian, &prepared, b, a)
                }
                Coord::Im(a, b) => {
                    (lindblad_on_elementary(hamiltonian, &prepared, a, b)
                        - lindblad_on_elementary(hamiltonian, &prepared, b, a))
                        * I
                }
            };
            if !basis.is_full() {
                leak = leak.max(basis.leakage(&image));
            }
            matrix.set_column(k, &basis.read_coords(&image));
        }
        if leak > 1e-12 {
            return Err(Error::OutOfSector { residual: leak });
        }
        let fingerprint = fingerprint_matrix(&matrix);
        Ok(Generator {
            basis,
            matrix,
            dissipators,
            fingerprint,
        })
    }

    pub fn basis(&self) -> &Arc<LiouvilleBasis> {
        &self.basis
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn dissipators(&self) -> DissipatorSet {
        self.dissipators
    }

    pub fn fingerprint(&self) -> u64 {
        self.fingerprint
    }

    pub fn apply(&self, v: &DVector<f64>) -> DVector<f64> {
        &self.matrix * v
    }

    /// max |tr(L(B_k))| over basis elements; zero for trace preservation.
    pub fn trace_defect(&self) -> f64 {
        let row = self.basis.trace_functional().transpose() * &self.matrix;
        row.amax()
    }

    /// exp(Gτ), with each functional row integrated along the trajectory.
    pub fn propagator(&self, tau: f64, functionals: &[DVector<f64>]) -> Result<Propagator> {
        if !(tau >= 0.0) {
            return Err(Error::NegativeDuration(tau));
        }
        let n = self.basis.len();
        let k = functionals.len();
        for f in functionals {
            if f.len() != n {
                return Err(Error::DimensionMismatch {
                    context: "accumulator functional".into(),
                    expected: n,
                    actual: f.len(),
                });
            }
        }
        if tau == 0.0 {
            return Ok(Propagator::identity(self.basis.clone(), k));
        }
        let mut aug = DMatrix::zeros(n + k, n + k);
        aug.view_mut((0, 0), (n, n)).copy_from(&(&self.matrix * tau));
        for (r, f) in functionals.iter().enumerate() {
            aug.view_mut((n + r, 0), (1, n)).copy_from(&(f.transpose() * tau));
        }
        let e = aug.exp();
        Ok(Propagator {
            basis: self.basis.clone(),
            tau,
            map: e.view((0, 0), (n, n)).into_owned(),
            accumulators: e.view((n, 0), (k, n)).into_owned(),
        })
    }

    /// Coordinates of the unique stationary state, normalized to unit trace.
    pub fn stationary_state(&self) -> Result<DVector<f64>> {
        bordered_null_vector(&self.matrix, &self.basis, false)
    }

    /// Complex superoperator acting on column-major vec(ρ). Needs a full basis.
    pub fn to_superoperator(&self) -> Result<CMatrix> {
        let images = elementary_images(&self.basis, &self.matrix)?;
        let d = self.basis.dim();
        let mut s = CMatrix::zeros(d * d, d * d);
        for a in 0..d {
            for b in 0..d {
                let img = &images[a + b * d];
                for j in 0..d {
                    for i in 0..d {
                        s[(i + j * d, a + b * d)] = img[(i, j)];
                    }
                }
            }
        }
        Ok(s)
    }
}

/// Images Φ(|a⟩⟨b|) indexed by a + b·d, reconstructed from a real map on a full basis.
fn elementary_images(basis: &LiouvilleBasis, map: &DMatrix<f64>) -> Result<Vec<CMatrix>> {
    if !basis.is_full() {
        return Err(Error::InvalidLayout(
            "complex superoperator needs the full Liouville basis".into(),
        ));
    }
    let d = basis.dim();
    let column_image = |k: usize| basis.from_coords(&map.column(k).into_owned());
    let mut images = vec![CMatrix::zeros(d, d); d * d];
    let half = C64::new(0.5, 0.0);
    let mut k = 0;
    while k < basis.len() {
        match basis.coords()[k] {
            Coord::Diag(a) => {
                images[a + a * d] = column_image(k);
                k += 1;
            }
            Coord::Re(a, b) => {
                let re = column_image(k);
                let im = column_image(k + 1);
                images[a + b * d] = (&re - &im * I) * half;
                images[b + a * d] = (&re + &im * I) * half;
                k += 2;
            }
            Coord::Im(..) => unreachable!("Im always follows Re"),
        }
    }
    Ok(images)
}

/// Solves (A + e·tᵀ) v = e with t the trace row and e = 1/d.
///
/// For A = G this gives G v = 0, tr v = 1. For A = P − I it gives P v = v.
/// The bordered matrix is singular exactly when the kernel of A has
/// dimension above one.
fn bordered_null_vector(a: &DMatrix<f64>, basis: &LiouvilleBasis, is_map: bool) -> Result<DVector<f64>> {
    let policy = NumericalPolicy::current();
    let t = basis.trace_functional();
    let e = basis.maximally_mixed();
    let mut m = a.clone();
    if is_map {
        for i in 0..m.nrows() {
            m[(i, i)] -= 1.0;
        }
    }
    let m_plain = m.clone();
    m += &e * t.transpose();
    let lu = m.lu();
    let u = lu.u();
    let diag = u.diagonal();
    let max_pivot = diag.amax();
    let min_pivot = diag.iter().map(|x| x.abs()).fold(f64::INFINITY, f64::min);
    if !(min_pivot > policy.singular_pivot_tol * max_pivot.max(1.0)) {
        return Err(Error::DegenerateFixedPoint {
            unit_eigenvalues: kernel_dimension_estimate(&m_plain),
            tolerance: policy.singular_pivot_tol,
        });
    }
    let mut v = lu.solve(&e).ok_or(Error::DegenerateFixedPoint {
        unit_eigenvalues: 2,
        tolerance: policy.singular_pivot_tol,
    })?;
    let tr = t.dot(&v);
    v /= tr;
    let residual = (&m_plain * &v).amax();
    let scale = if is_map { 1.0 } else { a.amax().max(1.0) };
    if residual > policy.residual_tol * scale {
        return Err(Error::Residual {
            residual,
            tolerance: policy.residual_tol * scale,
        });
    }
    Ok(v)
}

fn kernel_dimension_estimate(m: &DMatrix<f64>) -> usize {
    let sv = m.clone().singular_values();
    let max = sv.amax().max(1.0);
    sv.iter().filter(|s| **s < 1e-8 * max).count()
}

/// Exact map of one piecewise-constant segment (or a composition of them),
/// with optional integrated functionals.
#[derive(Clone, Debug)]
pub struct Propagator {
    basis: Arc<LiouvilleBasis>,
    tau: f64,
    map: DMatrix<f64>,
    /// k×n: row r applied to the start state gives ∫ f_r(ρ(t)) dt.
    accumulators: DMatrix<f64>,
}

impl Propagator {
    pub fn identity(basis: Arc<LiouvilleBasis>, accumulators: usize) -> Self {
        let n = basis.len();
        Propagator {
            basis,
            tau: 0.0,
            map: DMatrix::identity(n, n),
            accumulators: DMatrix::zeros(accumulators, n),
        }
    }

    pub fn basis(&self) -> &Arc<LiouvilleBasis> {
        &self.basis
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn map(&self) -> &DMatrix<f64> {
        &self.map
    }

    pub fn accumulators(&self) -> &DMatrix<f64> {
        &self.accumulators
    }

    pub fn apply(&self, v: &DVector<f64>) -> DVector<f64> {
        &self.map * v
    }

    /// Integrated functionals over the span of this propagator, starting from `v`.
    pub fn accumulate(&self, v: &DVector<f64>) -> DVector<f64> {
        &self.accumulators * v
    }

    /// `next` applied after `self`.
    pub fn then(&self, next: &Propagator) -> Result<Propagator> {
        if self.basis != next.basis || self.accumulators.nrows() != next.accumulators.nrows() {
            return Err(Error::InvalidLayout(
                "composing propagators on different spaces".into(),
            ));
        }
        Ok(Propagator {
            basis: self.basis.clone(),
            tau: self.tau + next.tau,
            map: &next.map * &self.map,
            accumulators: &self.accumulators + &next.accumulators * &self.map,
        })
    }

    /// max |tr Φ(B_k) − tr B_k|.
    pub fn trace_defect(&self) -> f64 {
        let t = self.basis.trace_functional();
        let row = t.transpose() * &self.map - t.transpose();
        row.amax()
    }

    /// Coordinates of the unique fixed point with unit trace.
    pub fn fixed_point(&self) -> Result<DVector<f64>> {
        bordered_null_vector(&self.map, &self.basis, true)
    }

    /// Eigenvalues of the map within `tol` of 1.
    pub fn unit_eigenvalue_count(&self, tol: f64) -> usize {
        let ev = self.map.clone().complex_eigenvalues();
        ev.iter().filter(|z| (*z - C64::new(1.0, 0.0)).norm() < tol).count()
    }

    /// Choi matrix Σ_ab |a⟩⟨b| ⊗ Φ(|a⟩⟨b|). Needs a full basis.
    pub fn choi_matrix(&self) -> Result<CMatrix> {
        let images = elementary_images(&self.basis, &self.map)?;
        let d = self.basis.dim();
        let mut c = CMatrix::zeros(d * d, d * d);
        for a in 0..d {
            for b in 0..d {
                let img = &images[a + b * d];
                for i in 0..d {
                    for j in 0..d {
                        c[(a * d + i, b * d + j)] = img[(i, j)];
                    }
                }
            }
        }
        Ok(c)
    }

    /// Smallest eigenvalue of the Hermitian part of the Choi matrix.
    pub fn choi_min_eigenvalue(&self) -> Result<f64> {
        let c = self.choi_matrix()?;
        let h = (&c + c.adjoint()) * C64::new(0.5, 0.0);
        Ok(h.symmetric_eigenvalues().iter().copied().fold(f64::INFINITY, f64::min))
    }

    /// True when the Choi matrix has no eigenvalue below `-tol`.
    ///
    /// Tested by a Cholesky factorization of C + tol·1, which is much cheaper
    /// than a full eigensolve at d² = 576.
    pub fn choi_is_psd(&self, tol: f64) -> Result<bool> {
        let c = self.choi_matrix()?;
        let n = c.nrows();
        let h = (&c + c.adjoint()) * C64::new(0.5, 0.0) + CMatrix::identity(n, n) * C64::new(tol, 0.0);
        Ok(h.cholesky().is_some())
    }
}

type CacheKey = (u64, u64, u64);

#[derive(Default)]
struct CacheInner {
    map: HashMap<CacheKey, Arc<Propagator>>,
    order: VecDeque<CacheKey>,
    bytes: usize,
}

/// Propagators keyed by (generator, τ, functionals), shared across threads.
///
/// Lookups take a read lock; inserts take the write lock. The oldest entries
/// are dropped once the stored matrices exceed `max_bytes`.
pub struct PropagatorCache {
    inner: RwLock<CacheInner>,
    max_bytes: usize,
}

impl Default for PropagatorCache {
    fn default() -> Self {
        Self::new(256 << 20)
    }
}

impl PropagatorCache {
    pub fn new(max_bytes: usize) -> Self {
        PropagatorCache {
            inner: RwLock::new(CacheInner::default()),
            max_bytes,
        }
    }

    pub fn get_or_compute(
        &self,
        generator: &Generator,
        tau: f64,
        functionals: &[DVector<f64>],
    ) -> Result<Arc<Propagator>> {
        let key = (generator.fingerprint(), tau.to_bits(), fingerprint_rows(functionals));
        if let Some(p) = self.inner.read().unwrap_or_else(|e| e.into_inner()).map.get(&key) {
            return Ok(p.clone());
        }
        let fresh = Arc::new(generator.propagator(tau, functionals)?);
        let size = 8 * (fresh.map.len() + fresh.accumulators.len());
        let mut inner = self.inner.write().unwrap_or_else(|e| e.into_inner());
        if let Some(p) = inner.map.get(&key) {
            return Ok(p.clone());
        }
        while inner.bytes + size > self.max_bytes {
            let Some(old) = inner.order.pop_front() else { break };
            if let Some(p) = inner.map.remove(&old) {
                inner.bytes -= 8 * (p.map.len() + p.accumulators.len());
            }
        }
        inner.map.insert(key, fresh.clone());
        inner.order.push_back(key);
        inner.bytes += size;
        Ok(fresh)
    }

    pub fn len(&self) -> usize {
        self.inner.read().unwrap_or_else(|e| e.into_inner()).map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn entries(&self) -> Vec<Arc<Propagator>> {
        let inner = self.inner.read().unwrap_or_else(|e| e.into_inner());
        inner.order.iter().filter_map(|k| inner.map.get(k).cloned()).collect()
    }
}
