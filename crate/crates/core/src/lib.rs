//! Simulation of a qutrit-mediated quantum Maxwell demon.
//!
//! A cold qubit and a hot qubit, each damped by its own Markovian reservoir,
//! couple to a qutrit. A demon memory qubit reads the qutrit, conditionally
//! moves its excitation from the cold-side level to the hot-side level, and
//! is then reset. All quantities are in units of the coupling J.
//!
//! The crate is layered bottom-up:
//!
//! - [`tensor`]: composite-space bookkeeping (layouts, embeddings, partial traces)
//! - [`liouville`]: generators, propagators, fixed points
//! - [`model`], [`protocol`], [`engine`]: the circuit, its pulse schedule, evolution
//! - [`observables`], [`shots`], [`reduced`]: reported quantities
//! - [`sweep`], [`output`]: parameter grids and CSV/JSON emission

pub mod engine;
pub mod error;
pub mod liouville;
pub mod model;
pub mod observables;
pub mod output;
pub mod params;
pub mod policy;
pub mod protocol;
pub mod reduced;
pub mod shots;
pub mod sweep;
pub mod tensor;

pub use engine::Simulator;
pub use error::{Error, Result};
pub use model::{Controls, DemonModel, ModelKind};
pub use observables::CycleResult;
pub use params::{DerivedParams, SystemParams};
pub use policy::NumericalPolicy;
pub use tensor::{DensityMatrix, OperatorMatrix, Subsystem, SubsystemLayout};

/// Crate version, recorded in every run manifest.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
