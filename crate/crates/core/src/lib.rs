//! Analysis toolkit for cavity-coupled solid-state emitters.
//!
//! The crate covers the quantitative chain from emitter physics to measured
//! data:
//!
//! - [`quantities`]: frequency/lifetime/efficiency newtypes and constants.
//! - [`purcell`]: decay-channel budgets, quantum efficiency, Debye–Waller
//!   factor, cooperativity and Purcell factors.
//! - [`dynamics`]: Lindblad master-equation simulation of a two-level emitter
//!   coupled to a lossy cavity mode, and its weak-excitation analytic rate.
//! - [`coupling`]: mode volume, zero-point field, dipole moments and
//!   ensemble-averaged vacuum coupling over a sampled field map.
//! - [`fitting`]: a Levenberg–Marquardt engine with the decay, detuning,
//!   spectral and transmission models used on experimental data.
//! - [`linkbudget`]: cascaded transmission-efficiency accounting.
//!
//! All frequencies in public records are *ordinary* frequencies (Hz, i.e. the
//! "ω/2π" value). Rates written as inverse lifetimes (`gamma1`, `gamma_phi`)
//! are in s⁻¹.

// `!(x > 0.0)` is used on purpose so NaN falls into the error branch.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod coupling;
pub mod dynamics;
mod error;
pub mod fitting;
pub mod io;
pub mod linkbudget;
pub(crate) mod numeric;
pub mod purcell;
pub mod quantities;
pub mod synthetic;

pub use coupling::{EmitterDipole, FieldGrid, WeightingConfig};
pub use dynamics::{AtomCavityParams, DecayTrace, DensityState, TraceKind};
pub use error::{Error, Result};
pub use fitting::{FitModel, FitOptions, FitResult};
pub use linkbudget::{LinkChain, LinkElement};
pub use purcell::{EfficiencyFactors, PurcellResult, RateBudget};
pub use quantities::{AngularFrequency, Duration, Efficiency, OrdinaryFrequency, PhysicalConstants};

/// Version tag written into every JSON document this crate emits.
pub const SCHEMA_VERSION: u32 = 1;
