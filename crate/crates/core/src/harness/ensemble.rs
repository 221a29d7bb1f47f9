use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::{ExperimentConfig, ExperimentPlan};
use super::HarnessError;
use crate::dynamics::{DynamicsError, Integrator};
use crate::freq::{CoarsePartition, FrequencyGrid};
use crate::measures::InitSampler;
use crate::rng::{init_stream, noise_stream};

/// Members reduced sequentially inside one block.
const BLOCK: usize = 16;
/// Blocks evaluated in parallel before folding; fixed so results do not depend on the pool size.
const BATCH: usize = 32;

/// Running mean and centred second moment over a flat array of observables.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Welford {
    pub count: u64,
    pub mean: Vec<f64>,
    pub m2: Vec<f64>,
}

impl Welford {
    pub fn new(len: usize) -> Self {
        Welford { count: 0, mean: vec![0.0; len], m2: vec![0.0; len] }
    }

    pub fn push(&mut self, x: &[f64]) {
        self.count += 1;
        let n = self.count as f64;
        for ((m, s), &v) in self.mean.iter_mut().zip(&mut self.m2).zip(x) {
            let d = v - *m;
            *m += d / n;
            *s += d * (v - *m);
        }
    }

    /// Chan et al. pairwise combination.
    pub fn merge(&mut self, other: &Welford) {
        if other.count == 0 {
            return;
        }
        if self.count == 0 {
            *self = other.clone();
            return;
        }
        let (na, nb) = (self.count as f64, other.count as f64);
        let n = na + nb;
        for i in 0..self.mean.len() {
            let d = other.mean[i] - self.mean[i];
            self.mean[i] += d * nb / n;
            self.m2[i] += other.m2[i] + d * d * na * nb / n;
        }
        self.count += other.count;
    }

    /// Standard error of the mean of entry `i`.
    pub fn std_error(&self, i: usize) -> f64 {
        if self.count < 2 {
            return f64::NAN;
        }
        let n = self.count as f64;
        (self.m2[i] / (n - 1.0) / n).sqrt()
    }
}

/// Ensemble means per save time, per mode and per coarse cell.
///
/// The per-member observable is `|V_k|²` (uncoupled) or the coupled difference
/// `|V_k^pert|² − |V_k^base|²`, minus the control-variate term when enabled.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawTable {
    pub save_steps: Vec<usize>,
    pub save_times: Vec<f64>,
    pub modes: usize,
    pub requested: usize,
    pub coupled: bool,
    pub control_variate: bool,
    /// Flattened `[save][mode]`.
    pub mode_stats: Welford,
    /// Cell side of `cell_stats`.
    pub cell_h: f64,
    /// Flattened `[save][cell]`, per-member cell averages with the `h²N²` convention.
    pub cell_stats: Welford,
    /// Set when the wall-clock limit stopped the run early.
    pub partial: bool,
}

impl RawTable {
    pub fn members(&self) -> usize {
        self.mode_stats.count as usize
    }

    pub fn mode_mean(&self, save: usize) -> &[f64] {
        &self.mode_stats.mean[save * self.modes..(save + 1) * self.modes]
    }
}

struct Member<'a> {
    grid: &'a FrequencyGrid,
    sampler: InitSampler,
    integrator: Integrator,
    partition: CoarsePartition,
    seed: u64,
    coupled: bool,
    /// `β_k/γ_k − 1` when the control variate is active.
    cv: Option<Vec<f64>>,
    save_times: Vec<f64>,
}

impl Member<'_> {
    fn observe(&self, r: u64) -> Result<(Vec<f64>, Vec<f64>), DynamicsError> {
        let (pert, base) = self.sampler.sample(&mut init_stream(self.seed, r), self.coupled);
        let snaps = self
            .integrator
            .integrate_member(&pert, &mut noise_stream(self.seed, r), &self.save_times)?;
        let base_snaps = match &base {
            Some(b) => Some(self.integrator.integrate_member(
                b,
                &mut noise_stream(self.seed, r),
                &self.save_times,
            )?),
            None => None,
        };
        let m = self.grid.len();
        let correction: Option<Vec<f64>> = match (&self.cv, &base) {
            (Some(c), Some(b)) => Some(
                self.grid
                    .modes()
                    .iter()
                    .zip(c)
                    .zip(&b.values)
                    .map(|((md, c), v)| c * (v.norm_sqr() - md.gamma))
                    .collect(),
            ),
            _ => None,
        };
        let mut modes = Vec::with_capacity(snaps.len() * m);
        let mut cells = Vec::with_capacity(snaps.len() * self.partition.len());
        for (s, snap) in snaps.iter().enumerate() {
            let start = modes.len();
            modes.extend(snap.values.iter().map(|v| v.norm_sqr()));
            if let Some(bs) = &base_snaps {
                for (x, v) in modes[start..].iter_mut().zip(&bs[s].values) {
                    *x -= v.norm_sqr();
                }
            }
            if let Some(c) = &correction {
                for (x, c) in modes[start..].iter_mut().zip(c) {
                    *x -= c;
                }
            }
            let avg = self
                .partition
                .average(&modes[start..])
                .expect("partition matches grid");
            cells.extend(avg);
        }
        Ok((modes, cells))
    }
}

/// Runs `config.run.ensemble` members and reduces them in member-index order.
///
/// The result is a pure function of the config: blocks of members have fixed
/// boundaries and are folded in index order whatever the worker count.
pub fn run_ensemble(config: &ExperimentConfig, plan: &ExperimentPlan) -> Result<RawTable, HarnessError> {
    let grid = FrequencyGrid::build(config.domain, config.dispersion()?, config.grid.n)?;
    let sampler = InitSampler::new(&grid, &config.init_law())?;
    let integrator = Integrator::new(&grid, config.integrator_config())?;
    let partition = CoarsePartition::new(&grid, config.coarse.h)?;
    let cv = config.uses_control_variate().then(|| {
        let betas = config.init_law().target_variances(&grid);
        grid.modes().iter().zip(betas).map(|(m, b)| b / m.gamma - 1.0).collect()
    });
    let member = Member {
        grid: &grid,
        sampler,
        integrator,
        partition,
        seed: config.run.seed,
        coupled: config.run.coupled,
        cv,
        save_times: plan.save_times.clone(),
    };
    let saves = plan.save_times.len();
    let mode_len = saves * grid.len();
    let cell_len = saves * member.partition.len();
    let requested = config.run.ensemble;

    let body = || -> Result<RawTable, HarnessError> {
        let start = Instant::now();
        let mut modes = Welford::new(mode_len);
        let mut cells = Welford::new(cell_len);
        let n_blocks = requested.div_ceil(BLOCK);
        let mut partial = false;
        let mut b0 = 0;
        while b0 < n_blocks {
            let b1 = (b0 + BATCH).min(n_blocks);
            let results: Vec<Result<(Welford, Welford), HarnessError>> = (b0..b1)
                .into_par_iter()
                .map(|b| {
                    let mut wm = Welford::new(mode_len);
                    let mut wc = Welford::new(cell_len);
                    for r in b * BLOCK..((b + 1) * BLOCK).min(requested) {
                        let (xm, xc) = member
                            .observe(r as u64)
                            .map_err(|source| HarnessError::Member { member: r as u64, source })?;
                        wm.push(&xm);
                        wc.push(&xc);
                    }
                    Ok((wm, wc))
                })
                .collect();
            for res in results {
                let (wm, wc) = res?;
                modes.merge(&wm);
                cells.merge(&wc);
            }
            b0 = b1;
            if let Some(limit) = config.run.wall_clock_limit_s {
                if b0 < n_blocks && start.elapsed().as_secs_f64() > limit {
                    partial = true;
                    break;
                }
            }
        }
        Ok(RawTable {
            save_steps: plan.save_steps.clone(),
            save_times: plan.save_times.clone(),
            modes: grid.len(),
            requested,
            coupled: config.run.coupled,
            control_variate: member.cv.is_some(),
            mode_stats: modes,
            cell_h: config.coarse.h,
            cell_stats: cells,
            partial,
        })
    };

    match config.run.workers {
        Some(w) => rayon::ThreadPoolBuilder::new()
            .num_threads(w)
            .build()
            .map_err(|e| HarnessError::Runtime(e.to_string()))?
            .install(body),
        None => body(),
    }
}
