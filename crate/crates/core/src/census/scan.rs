use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::eta::{combine, float_value};
use super::{check_eta, leg_sum, CensusError, EtaValue, Leg};
use crate::freq::{DispersionParams, DomainSpec, FrequencyGrid};

/// Upper bound on tuple evaluations for one scan.
pub const TUPLE_BUDGET: u128 = 1_000_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScanOrder {
    /// `ω_{k+j} − ω_k − ω_j`.
    ThreeWave,
    /// `ω_m + ω_j − ω_k − ω_ℓ` with `ℓ = m − k + j`, exact resonances excluded.
    FourWaveOffres,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct HistogramBin {
    /// Bin holds denominators in `[10^decade, 10^(decade+1))`.
    pub decade: i32,
    pub count: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResonanceReport {
    pub eta: EtaValue,
    pub n: u32,
    pub order: ScanOrder,
    /// Tuples examined, up to the global sign flip `k ↦ −k`.
    pub tuples: u64,
    /// Minimum over nonzero denominators.
    pub min_denominator: Option<f64>,
    /// Lattice indices of the minimising tuple, in the order of the sum.
    pub argmin: Option<Vec<(i64, i64)>>,
    /// Exact zeros for this η; `None` in float mode.
    pub exact_zeros: Option<u64>,
    /// Tuples whose denominator vanishes for every η.
    pub identical_zeros: u64,
    pub histogram: Vec<HistogramBin>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecayFit {
    /// Fitted exponent in `min ≈ c / N^ν`.
    pub nu: f64,
    pub c: f64,
    /// Root-mean-square residual of the fit in natural-log units.
    pub residual: f64,
    pub points: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DenominatorSeries {
    pub reports: Vec<ResonanceReport>,
    pub fit: Option<DecayFit>,
}

#[derive(Debug, Clone, Default)]
struct Partial {
    tuples: u64,
    min: Option<(f64, Vec<(i64, i64)>)>,
    zeros: u64,
    identical: u64,
    hist: std::collections::BTreeMap<i32, u64>,
}

impl Partial {
    fn record(&mut self, legs: &[(i64, i64)], value: Option<f64>, identical: bool, zero: bool) {
        self.tuples += 1;
        if identical {
            self.identical += 1;
        }
        if zero {
            self.zeros += 1;
            return;
        }
        let Some(v) = value else { return };
        if v == 0.0 {
            return;
        }
        *self.hist.entry(v.log10().floor() as i32).or_default() += 1;
        let better = match &self.min {
            None => true,
            Some((m, arg)) => v < *m || (v == *m && legs < arg.as_slice()),
        };
        if better {
            self.min = Some((v, legs.to_vec()));
        }
    }

    fn merge(mut self, other: Partial) -> Partial {
        self.tuples += other.tuples;
        self.zeros += other.zeros;
        self.identical += other.identical;
        for (k, c) in other.hist {
            *self.hist.entry(k).or_default() += c;
        }
        self.min = match (self.min, other.min) {
            (None, b) => b,
            (a, None) => a,
            (Some(a), Some(b)) => {
                if b.0 < a.0 || (b.0 == a.0 && b.1 < a.1) {
                    Some(b)
                } else {
                    Some(a)
                }
            }
        };
        self
    }
}

/// Membership in `D_N = D_N⁺ ∪ −D_N⁺`.
fn in_full(grid: &FrequencyGrid, i: i64, j: i64) -> bool {
    if i > 0 {
        grid.slot(i, j).is_some()
    } else if i < 0 {
        grid.slot(-i, -j).is_some()
    } else {
        false
    }
}

fn evaluate(
    eta: &EtaValue,
    n: i128,
    legs: &[Leg],
) -> (Option<f64>, bool, bool) {
    let (p, q, d) = leg_sum(legs);
    let identical = p == 0 && q == 0;
    match eta {
        EtaValue::Float(x) => {
            let v = if identical { None } else { Some(float_value(*x, p, q, d, n)) };
            (v, identical, identical)
        }
        _ => {
            let z = combine(eta, p, q, d, n).expect("exact eta");
            let zero = z.is_zero();
            (if zero { None } else { Some(z.abs_f64()) }, identical, zero)
        }
    }
}

/// Brute-force minimum of the resonance denominators over all tuples with legs in `D_N`.
///
/// Tuples are enumerated with the first leg in `D_N⁺`; the global sign flip maps
/// every other tuple onto one of these without changing `|denominator|`.
pub fn scan_small_denominators(
    grid: &FrequencyGrid,
    eta: &EtaValue,
    order: ScanOrder,
) -> Result<ResonanceReport, CensusError> {
    check_eta(eta, grid.dispersion().eta)?;
    let plus: Vec<(i64, i64)> = grid.modes().iter().map(|m| (m.i, m.j)).collect();
    let full: Vec<(i64, i64)> = plus
        .iter()
        .copied()
        .chain(plus.iter().map(|&(i, j)| (-i, -j)))
        .collect();
    let (p, f) = (plus.len() as u128, full.len() as u128);
    let needed = match order {
        ScanOrder::ThreeWave => p * f,
        ScanOrder::FourWaveOffres => p * f * f,
    };
    if needed > TUPLE_BUDGET {
        return Err(CensusError::BudgetExceeded { needed, budget: TUPLE_BUDGET });
    }
    let n = grid.refinement() as i128;
    let leg = |sign: i128, (i, j): (i64, i64)| Leg { sign, i: i as i128, j: j as i128 };

    let total = plus
        .par_iter()
        .map(|&a| {
            let mut acc = Partial::default();
            match order {
                ScanOrder::ThreeWave => {
                    for &b in &full {
                        let s = (a.0 + b.0, a.1 + b.1);
                        if !in_full(grid, s.0, s.1) {
                            continue;
                        }
                        let (v, ident, zero) =
                            evaluate(eta, n, &[leg(1, s), leg(-1, a), leg(-1, b)]);
                        acc.record(&[a, b], v, ident, zero);
                    }
                }
                ScanOrder::FourWaveOffres => {
                    for &j in &full {
                        for &k in &full {
                            let l = (a.0 - k.0 + j.0, a.1 - k.1 + j.1);
                            if !in_full(grid, l.0, l.1) {
                                continue;
                            }
                            let (v, ident, zero) = evaluate(
                                eta,
                                n,
                                &[leg(1, a), leg(1, j), leg(-1, k), leg(-1, l)],
                            );
                            acc.record(&[a, j, k, l], v, ident, zero);
                        }
                    }
                }
            }
            acc
        })
        .reduce(Partial::default, Partial::merge);

    Ok(ResonanceReport {
        eta: *eta,
        n: grid.refinement(),
        order,
        tuples: total.tuples,
        min_denominator: total.min.as_ref().map(|m| m.0),
        argmin: total.min.map(|m| m.1),
        exact_zeros: eta.is_exact().then_some(total.zeros),
        identical_zeros: total.identical,
        histogram: total
            .hist
            .into_iter()
            .map(|(decade, count)| HistogramBin { decade, count })
            .collect(),
    })
}

/// Least-squares fit of `log min = log c − ν log N`.
pub fn fit_decay(points: &[(u32, f64)]) -> Option<DecayFit> {
    let pts: Vec<(f64, f64)> = points
        .iter()
        .filter(|(_, m)| *m > 0.0 && m.is_finite())
        .map(|&(n, m)| ((n as f64).ln(), m.ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let k = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / k;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / k;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let residual = (pts
        .iter()
        .map(|p| (p.1 - intercept - slope * p.0).powi(2))
        .sum::<f64>()
        / k)
        .sqrt();
    Some(DecayFit { nu: -slope, c: intercept.exp(), residual, points: pts.len() })
}

/// Scans each refinement in `ns` and fits the decay of the minimum denominator.
pub fn scan_series(
    spec: DomainSpec,
    eta: &EtaValue,
    order: ScanOrder,
    ns: &[u32],
) -> Result<DenominatorSeries, CensusError> {
    let dispersion = DispersionParams::new(eta.to_f64())?;
    let mut reports = Vec::with_capacity(ns.len());
    for &n in ns {
        let grid = FrequencyGrid::build(spec, dispersion, n)?;
        reports.push(scan_small_denominators(&grid, eta, order)?);
    }
    let pts: Vec<(u32, f64)> = reports
        .iter()
        .filter_map(|r| r.min_denominator.map(|m| (r.n, m)))
        .collect();
    Ok(DenominatorSeries { fit: fit_decay(&pts), reports })
}
