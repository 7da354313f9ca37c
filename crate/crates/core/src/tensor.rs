//! Composite Hilbert-space bookkeeping for the cold qubit, qutrit, hot qubit
//! and demon memory.
//!
//! Basis indices are mixed-radix with the first slot most significant, so in
//! the canonical C, M, H, D layout `index = ((c·3 + m)·2 + h)·2 + d`.

use std::fmt;

use nalgebra::{Complex, DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::policy::NumericalPolicy;

pub type C64 = Complex<f64>;
pub type CMatrix = DMatrix<C64>;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);
pub const I: C64 = C64::new(0.0, 1.0);

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Subsystem {
    Cold,
    Qutrit,
    Hot,
    Demon,
}

impl Subsystem {
    pub const CANONICAL: [Subsystem; 4] = [
        Subsystem::Cold,
        Subsystem::Qutrit,
        Subsystem::Hot,
        Subsystem::Demon,
    ];

    pub fn dim(self) -> usize {
        match self {
            Subsystem::Qutrit => 3,
            _ => 2,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Subsystem::Cold => "C",
            Subsystem::Qutrit => "M",
            Subsystem::Hot => "H",
            Subsystem::Demon => "D",
        }
    }
}

/// Ordered list of subsystems making up a tensor-product space.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct SubsystemLayout {
    slots: Vec<Subsystem>,
}

impl SubsystemLayout {
    pub fn new(slots: Vec<Subsystem>) -> Result<Self> {
        if slots.is_empty() {
            return Err(Error::InvalidLayout("no subsystems".into()));
        }
        for (i, s) in slots.iter().enumerate() {
            if slots[..i].contains(s) {
                return Err(Error::InvalidLayout(format!("{s:?} listed twice")));
            }
        }
        Ok(SubsystemLayout { slots })
    }

    /// C ⊗ M ⊗ H ⊗ D, dimension 24.
    pub fn canonical() -> Self {
        SubsystemLayout {
            slots: Subsystem::CANONICAL.to_vec(),
        }
    }

    /// C ⊗ M ⊗ H, the demon factored out.
    pub fn baths_and_qutrit() -> Self {
        SubsystemLayout {
            slots: vec![Subsystem::Cold, Subsystem::Qutrit, Subsystem::Hot],
        }
    }

    /// M ⊗ D, the qubits traced out.
    pub fn qutrit_and_demon() -> Self {
        SubsystemLayout {
            slots: vec![Subsystem::Qutrit, Subsystem::Demon],
        }
    }

    pub fn single(s: Subsystem) -> Self {
        SubsystemLayout { slots: vec![s] }
    }

    pub fn slots(&self) -> &[Subsystem] {
        &self.slots
    }

    pub fn dims(&self) -> Vec<usize> {
        self.slots.iter().map(|s| s.dim()).collect()
    }

    pub fn dim(&self) -> usize {
        self.slots.iter().map(|s| s.dim()).product()
    }

    pub fn contains(&self, s: Subsystem) -> bool {
        self.slots.contains(&s)
    }

    pub fn position(&self, s: Subsystem) -> Option<usize> {
        self.slots.iter().position(|&x| x == s)
    }

    /// Local labels of a basis index, one per slot.
    pub fn labels(&self, mut index: usize) -> Vec<usize> {
        let mut out = vec![0; self.slots.len()];
        for (k, s) in self.slots.iter().enumerate().rev() {
            out[k] = index % s.dim();
            index /= s.dim();
        }
        out
    }

    pub fn index(&self, labels: &[usize]) -> Result<usize> {
        if labels.len() != self.slots.len() {
            return Err(Error::DimensionMismatch {
                context: "label tuple length".into(),
                expected: self.slots.len(),
                actual: labels.len(),
            });
        }
        let mut idx = 0;
        for (s, &l) in self.slots.iter().zip(labels) {
            if l >= s.dim() {
                return Err(Error::DimensionMismatch {
                    context: format!("label for slot {}", s.label()),
                    expected: s.dim(),
                    actual: l,
                });
            }
            idx = idx * s.dim() + l;
        }
        Ok(idx)
    }

    /// Label of subsystem `s` in basis state `index`.
    pub fn label_of(&self, index: usize, s: Subsystem) -> Option<usize> {
        let pos = self.position(s)?;
        Some(self.labels(index)[pos])
    }

    /// Sub-layout of the given subsystems, keeping this layout's order.
    pub fn restrict(&self, keep: &[Subsystem]) -> Result<Self> {
        if keep.is_empty() {
            return Err(Error::EmptyKeepSet);
        }
        for &s in keep {
            if !self.contains(s) {
                return Err(Error::MissingSubsystem(s));
            }
        }
        Ok(SubsystemLayout {
            slots: self
                .slots
                .iter()
                .copied()
                .filter(|s| keep.contains(s))
                .collect(),
        })
    }

    pub fn concat(&self, other: &SubsystemLayout) -> Result<Self> {
        let mut slots = self.slots.clone();
        slots.extend_from_slice(&other.slots);
        SubsystemLayout::new(slots)
    }
}

impl fmt::Display for SubsystemLayout {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self
            .slots
            .iter()
            .map(|s| format!("{}:{}", s.label(), s.dim()))
            .collect();
        write!(f, "{}", parts.join("⊗"))
    }
}

/// Single-subsystem building blocks.
pub mod local {
    use super::*;

    pub fn identity(dim: usize) -> CMatrix {
        CMatrix::identity(dim, dim)
    }

    /// |to⟩⟨from| on a `dim`-level system.
    pub fn transition(dim: usize, to: usize, from: usize) -> CMatrix {
        let mut m = CMatrix::zeros(dim, dim);
        m[(to, from)] = ONE;
        m
    }

    pub fn projector(dim: usize, level: usize) -> CMatrix {
        transition(dim, level, level)
    }

    /// σ⁻ = |0⟩⟨1|.
    pub fn sigma_minus() -> CMatrix {
        transition(2, 0, 1)
    }

    /// σ⁺ = |1⟩⟨0|.
    pub fn sigma_plus() -> CMatrix {
        transition(2, 1, 0)
    }

    /// i|up⟩⟨down| − i|down⟩⟨up|, the Y-type drive between two levels.
    pub fn y_drive(dim: usize, up: usize, down: usize) -> CMatrix {
        transition(dim, up, down) * I - transition(dim, down, up) * I
    }
}

/// Dense operator on a composite space.
#[derive(Clone, Debug, PartialEq)]
pub struct OperatorMatrix {
    layout: SubsystemLayout,
    matrix: CMatrix,
}

impl OperatorMatrix {
    pub fn new(layout: SubsystemLayout, matrix: CMatrix) -> Result<Self> {
        let d = layout.dim();
        if matrix.nrows() != d || matrix.ncols() != d {
            return Err(Error::DimensionMismatch {
                context: format!("operator on {layout}"),
                expected: d,
                actual: matrix.nrows().max(matrix.ncols()),
            });
        }
        Ok(OperatorMatrix { layout, matrix })
    }

    /// Constructs an operator and verifies it is Hermitian to the policy tolerance.
    pub fn hermitian(layout: SubsystemLayout, matrix: CMatrix) -> Result<Self> {
        let op = Self::new(layout, matrix)?;
        let tol = NumericalPolicy::current().hermiticity_tol;
        let dev = op.hermiticity_defect();
        if dev > tol {
            return Err(Error::InvalidState(format!(
                "operator not Hermitian: max |A − A†| = {dev:.3e}"
            )));
        }
        Ok(op)
    }

    pub fn identity(layout: &SubsystemLayout) -> Self {
        let d = layout.dim();
        OperatorMatrix {
            layout: layout.clone(),
            matrix: CMatrix::identity(d, d),
        }
    }

    pub fn zeros(layout: &SubsystemLayout) -> Self {
        let d = layout.dim();
        OperatorMatrix {
            layout: layout.clone(),
            matrix: CMatrix::zeros(d, d),
        }
    }

    pub fn layout(&self) -> &SubsystemLayout {
        &self.layout
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> CMatrix {
        self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn trace(&self) -> C64 {
        self.matrix.trace()
    }

    pub fn adjoint(&self) -> Self {
        OperatorMatrix {
            layout: self.layout.clone(),
            matrix: self.matrix.adjoint(),
        }
    }

    pub fn hermiticity_defect(&self) -> f64 {
        max_abs(&(&self.matrix - self.matrix.adjoint()))
    }

    pub fn scale(&self, a: C64) -> Self {
        OperatorMatrix {
            layout: self.layout.clone(),
            matrix: &self.matrix * a,
        }
    }

    pub fn mul(&self, rhs: &OperatorMatrix) -> Result<Self> {
        self.check_same_layout(rhs)?;
        Ok(OperatorMatrix {
            layout: self.layout.clone(),
            matrix: &self.matrix * &rhs.matrix,
        })
    }

    pub fn add(&self, rhs: &OperatorMatrix) -> Result<Self> {
        self.check_same_layout(rhs)?;
        Ok(OperatorMatrix {
            layout: self.layout.clone(),
            matrix: &self.matrix + &rhs.matrix,
        })
    }

    pub fn max_abs(&self) -> f64 {
        max_abs(&self.matrix)
    }

    fn check_same_layout(&self, rhs: &OperatorMatrix) -> Result<()> {
        if self.layout != rhs.layout {
            return Err(Error::InvalidLayout(format!(
                "operators on {} and {}",
                self.layout, rhs.layout
            )));
        }
        Ok(())
    }

    /// The same operator expressed on a layout with the slots permuted.
    pub fn reorder(&self, target: &SubsystemLayout) -> Result<Self> {
        let perm = permutation(&self.layout, target)?;
        let d = self.dim();
        let mut out = CMatrix::zeros(d, d);
        for i in 0..d {
            for j in 0..d {
                out[(perm[i], perm[j])] = self.matrix[(i, j)];
            }
        }
        Ok(OperatorMatrix {
            layout: target.clone(),
            matrix: out,
        })
    }
}

/// Maps each basis index of `from` to the matching index of `to`.
fn permutation(from: &SubsystemLayout, to: &SubsystemLayout) -> Result<Vec<usize>> {
    if from.slots.len() != to.slots.len() || from.slots.iter().any(|s| !to.contains(*s)) {
        return Err(Error::InvalidLayout(format!(
            "{to} is not a permutation of {from}"
        )));
    }
    let order: Vec<usize> = to
        .slots
        .iter()
        .map(|s| from.position(*s).expect("checked above"))
        .collect();
    (0..from.dim())
        .map(|i| {
            let labels = from.labels(i);
            let permuted: Vec<usize> = order.iter().map(|&k| labels[k]).collect();
            to.index(&permuted)
        })
        .collect()
}

pub(crate) fn max_abs(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// identity ⊗ … ⊗ `local_op` ⊗ … ⊗ identity with `local_op` in `slot`.
pub fn embed(local_op: &CMatrix, slot: Subsystem, layout: &SubsystemLayout) -> Result<OperatorMatrix> {
    let pos = layout.position(slot).ok_or(Error::MissingSubsystem(slot))?;
    if local_op.nrows() != slot.dim() || local_op.ncols() != slot.dim() {
        return Err(Error::DimensionMismatch {
            context: format!("local operator for slot {}", slot.label()),
            expected: slot.dim(),
            actual: local_op.nrows().max(local_op.ncols()),
        });
    }
    let dims = layout.dims();
    let before: usize = dims[..pos].iter().product();
    let after: usize = dims[pos + 1..].iter().product();
    let m = CMatrix::identity(before, before)
        .kronecker(local_op)
        .kronecker(&CMatrix::identity(after, after));
    OperatorMatrix::new(layout.clone(), m)
}

/// Product of per-slot local operators; slots not listed get the identity.
pub fn embed_product(parts: &[(Subsystem, &CMatrix)], layout: &SubsystemLayout) -> Result<OperatorMatrix> {
    let mut out = OperatorMatrix::identity(layout);
    for (slot, op) in parts {
        out = out.mul(&embed(op, *slot, layout)?)?;
    }
    Ok(out)
}

/// tr(op · ρ).
pub fn expectation(op: &OperatorMatrix, rho: &DensityMatrix) -> Result<C64> {
    if op.dim() != rho.dim() {
        return Err(Error::DimensionMismatch {
            context: "expectation value".into(),
            expected: rho.dim(),
            actual: op.dim(),
        });
    }
    if op.layout() != rho.layout() {
        return Err(Error::InvalidLayout(format!(
            "operator on {} measured in state on {}",
            op.layout(),
            rho.layout()
        )));
    }
    // tr(AB) = Σ_ij A_ij B_ji
    let a = op.matrix();
    let b = rho.matrix();
    let d = op.dim();
    let mut acc = ZERO;
    for i in 0..d {
        for j in 0..d {
            acc += a[(i, j)] * b[(j, i)];
        }
    }
    Ok(acc)
}

/// Hermitian, unit-trace, positive semidefinite state.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix {
    op: OperatorMatrix,
}

impl DensityMatrix {
    /// Validates trace, Hermiticity and positivity against the global policy.
    pub fn new(layout: SubsystemLayout, matrix: CMatrix) -> Result<Self> {
        let rho = DensityMatrix {
            op: OperatorMatrix::new(layout, matrix)?,
        };
        rho.validate(&NumericalPolicy::current())?;
        Ok(rho)
    }

    pub(crate) fn new_unchecked(layout: SubsystemLayout, matrix: CMatrix) -> Self {
        DensityMatrix {
            op: OperatorMatrix { layout, matrix },
        }
    }

    pub fn validate(&self, policy: &NumericalPolicy) -> Result<()> {
        let tr = self.op.trace();
        if (tr.re - 1.0).abs() > policy.trace_tol || tr.im.abs() > policy.trace_tol {
            return Err(Error::InvalidState(format!("trace {tr}")));
        }
        let herm = self.op.hermiticity_defect();
        if herm > policy.hermiticity_tol {
            return Err(Error::InvalidState(format!(
                "not Hermitian: max |ρ − ρ†| = {herm:.3e}"
            )));
        }
        let min_ev = self.min_eigenvalue();
        if min_ev < -policy.positivity_tol {
            return Err(Error::InvalidState(format!(
                "negative eigenvalue {min_ev:.3e}"
            )));
        }
        Ok(())
    }

    /// The pure state |labels⟩⟨labels|.
    pub fn basis_state(layout: &SubsystemLayout, labels: &[usize]) -> Result<Self> {
        let idx = layout.index(labels)?;
        let d = layout.dim();
        let mut m = CMatrix::zeros(d, d);
        m[(idx, idx)] = ONE;
        Ok(Self::new_unchecked(layout.clone(), m))
    }

    /// |ψ⟩⟨ψ| for a (not necessarily normalized) state vector.
    pub fn pure(layout: &SubsystemLayout, psi: &[C64]) -> Result<Self> {
        let d = layout.dim();
        if psi.len() != d {
            return Err(Error::DimensionMismatch {
                context: "state vector".into(),
                expected: d,
                actual: psi.len(),
            });
        }
        let norm2: f64 = psi.iter().map(|z| z.norm_sqr()).sum();
        if norm2 == 0.0 {
            return Err(Error::InvalidState("zero state vector".into()));
        }
        let v = nalgebra::DVector::from_column_slice(psi) / C64::new(norm2.sqrt(), 0.0);
        Self::new(layout.clone(), &v * v.adjoint())
    }

    pub fn maximally_mixed(layout: &SubsystemLayout) -> Self {
        let d = layout.dim();
        Self::new_unchecked(
            layout.clone(),
            CMatrix::identity(d, d) / C64::new(d as f64, 0.0),
        )
    }

    /// ρ₁ ⊗ ρ₂ ⊗ … in the order given.
    pub fn product(factors: &[&DensityMatrix]) -> Result<Self> {
        let (first, rest) = factors
            .split_first()
            .ok_or_else(|| Error::InvalidLayout("empty product".into()))?;
        let mut layout = first.layout().clone();
        let mut m = first.matrix().clone();
        for f in rest {
            layout = layout.concat(f.layout())?;
            m = m.kronecker(f.matrix());
        }
        Ok(Self::new_unchecked(layout, m))
    }

    pub fn layout(&self) -> &SubsystemLayout {
        self.op.layout()
    }

    pub fn matrix(&self) -> &CMatrix {
        self.op.matrix()
    }

    pub fn as_operator(&self) -> &OperatorMatrix {
        &self.op
    }

    pub fn dim(&self) -> usize {
        self.op.dim()
    }

    pub fn trace(&self) -> C64 {
        self.op.trace()
    }

    /// Eigenvalues in ascending order.
    pub fn eigenvalues(&self) -> Vec<f64> {
        let herm = (self.matrix() + self.matrix().adjoint()) * C64::new(0.5, 0.0);
        let mut ev: Vec<f64> = SymmetricEigen::new(herm).eigenvalues.iter().copied().collect();
        ev.sort_by(|a, b| a.total_cmp(b));
        ev
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues().first().copied().unwrap_or(0.0)
    }

    pub fn purity(&self) -> f64 {
        let m = self.matrix();
        m.iter().map(|z| z.norm_sqr()).sum()
    }

    /// Population of a basis state.
    pub fn population(&self, labels: &[usize]) -> Result<f64> {
        let idx = self.layout().index(labels)?;
        Ok(self.matrix()[(idx, idx)].re)
    }

    /// Probability that subsystem `s` is found in `level`.
    pub fn level_population(&self, s: Subsystem, level: usize) -> Result<f64> {
        let layout = self.layout();
        let pos = layout.position(s).ok_or(Error::MissingSubsystem(s))?;
        Ok((0..self.dim())
            .filter(|&i| layout.labels(i)[pos] == level)
            .map(|i| self.matrix()[(i, i)].re)
            .sum())
    }

    /// Reduced state on `keep`; the result follows this layout's slot order.
    pub fn partial_trace(&self, keep: &[Subsystem]) -> Result<DensityMatrix> {
        let layout = self.layout();
        let kept = layout.restrict(keep)?;
        let keep_pos: Vec<usize> = kept
            .slots()
            .iter()
            .map(|s| layout.position(*s).expect("restricted"))
            .collect();
        let traced_pos: Vec<usize> = (0..layout.slots().len())
            .filter(|p| !keep_pos.contains(p))
            .collect();
        let d = self.dim();
        // (kept index, traced index) for every full basis index
        let split: Vec<(usize, usize)> = (0..d)
            .map(|i| {
                let l = layout.labels(i);
                let k = keep_pos
                    .iter()
                    .fold(0, |acc, &p| acc * layout.slots()[p].dim() + l[p]);
                let t = traced_pos
                    .iter()
                    .fold(0, |acc, &p| acc * layout.slots()[p].dim() + l[p]);
                (k, t)
            })
            .collect();
        let dk = kept.dim();
        let mut out = CMatrix::zeros(dk, dk);
        let m = self.matrix();
        for i in 0..d {
            for j in 0..d {
                if split[i].1 == split[j].1 {
                    out[(split[i].0, split[j].0)] += m[(i, j)];
                }
            }
        }
        Ok(DensityMatrix::new_unchecked(kept, out))
    }

    /// ½‖ρ − σ‖₁.
    pub fn trace_distance(&self, other: &DensityMatrix) -> Result<f64> {
        if self.layout() != other.layout() {
            return Err(Error::InvalidLayout(format!(
                "trace distance between {} and {}",
                self.layout(),
                other.layout()
            )));
        }
        let diff = self.matrix() - other.matrix();
        let herm = (&diff + diff.adjoint()) * C64::new(0.5, 0.0);
        Ok(0.5 * SymmetricEigen::new(herm).eigenvalues.iter().map(|x| x.abs()).sum::<f64>())
    }
}
