//! Exact-arithmetic census of discrete three- and four-wave resonances on `D_N`.

mod eta;
mod modulus;
mod scan;

pub use eta::{EtaValue, Rational};
pub use modulus::{
    brute_force_modulus, cardinality_slope, enumerate_resonant_modulus, structural_modulus,
    verify_triple, IndexPair, ResonantModulus, ResonantTriple, TripleClass,
};
pub use scan::{
    fit_decay, scan_series, scan_small_denominators, DecayFit, DenominatorSeries, HistogramBin,
    ResonanceReport, ScanOrder, TUPLE_BUDGET,
};

use thiserror::Error;

use crate::freq::FreqError;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CensusError {
    #[error("invalid eta: {0}")]
    InvalidEta(String),
    #[error("eta {census} does not match the grid's dispersion eta {grid}")]
    EtaMismatch { census: f64, grid: f64 },
    #[error("scan needs {needed} tuple evaluations, budget is {budget}")]
    BudgetExceeded { needed: u128, budget: u128 },
    #[error("base mode ({0}, {1}) is not in D_N⁺")]
    NotInDomain(i64, i64),
    #[error("structural enumeration requires an irrational eta, got {0}")]
    RequiresIrrational(String),
    #[error("exact resonance test requires an exact eta, got {0}")]
    RequiresExact(String),
    #[error("structural and brute-force moduli differ: {missing} missing, {extra} extra")]
    StructuralMismatch { missing: usize, extra: usize },
    #[error(transparent)]
    Grid(#[from] FreqError),
}

/// Signed leg of a resonance sum: `±ω` of the mode with integer indices `(i, j)`.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Leg {
    pub sign: i128,
    pub i: i128,
    pub j: i128,
}

/// Integer parts of `Σ ±ω_leg`: value `P/N³ + η·Q/(N·D)`.
pub(crate) fn leg_sum(legs: &[Leg]) -> (i128, i128, i128) {
    let p = legs.iter().map(|l| l.sign * l.i * l.i * l.i).sum();
    let d: i128 = legs.iter().map(|l| l.i).product();
    let q = legs.iter().map(|l| l.sign * l.j * l.j * (d / l.i)).sum();
    (p, q, d)
}

fn check_eta(eta: &EtaValue, grid_eta: f64) -> Result<(), CensusError> {
    let e = eta.to_f64();
    if (e - grid_eta).abs() > 1e-12 * grid_eta.abs().max(1.0) {
        return Err(CensusError::EtaMismatch { census: e, grid: grid_eta });
    }
    Ok(())
}
