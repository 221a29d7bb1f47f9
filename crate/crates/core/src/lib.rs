//! Truncated stochastic KP three-wave lattice dynamics and the linearised
//! wave-kinetic equations that describe their fluctuations around
//! Rayleigh-Jeans equilibrium.

// `!(x > 0.0)` style guards are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod census;
pub mod dynamics;
pub mod freq;
pub mod harness;
pub mod kinetic;
pub mod manifold;
pub mod measures;
pub mod rng;

pub use census::{EtaValue, ResonanceReport, ResonantModulus};
pub use dynamics::{Backend, Diagnostics, Integrator, IntegratorConfig, ModeField};
pub use freq::{
    CoarsePartition, DispersionParams, DomainSpec, FrequencyGrid, Mode, Wavevector,
};
pub use harness::{ExperimentConfig, ExperimentKind, HarnessError};
pub use kinetic::{KernelConvention, KineticForm, KineticMesh, KineticOperator};
pub use measures::{InitLaw, InitSampler, PerturbationProfile};
