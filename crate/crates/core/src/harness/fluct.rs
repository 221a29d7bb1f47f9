use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::ensemble::RawTable;
use super::HarnessError;
use crate::freq::{CoarsePartition, FrequencyGrid};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CellId {
    pub ax: i64,
    pub ay: i64,
    /// Lower-left corner `K = h·(ax, ay)`.
    pub kx: f64,
    pub ky: f64,
}

/// `F_k^N(t)` per mode and `F_K^{N,h}(t)` per coarse cell, with standard errors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FluctuationSeries {
    pub save_times: Vec<f64>,
    pub taus: Vec<f64>,
    pub n: u32,
    pub alpha: f64,
    pub h: f64,
    pub members: usize,
    /// Lattice indices of each mode, `k = (i, j)/N`.
    pub modes: Vec<(i64, i64)>,
    /// `[save][mode]`.
    pub mode_f: Vec<Vec<f64>>,
    pub mode_se: Vec<Vec<f64>>,
    pub cells: Vec<CellId>,
    /// `[save][cell]`.
    pub cell_f: Vec<Vec<f64>>,
    pub cell_se: Vec<Vec<f64>>,
    /// Whether `cell_se` came from per-member cell averages; otherwise modes
    /// were treated as independent.
    pub cell_se_exact: bool,
}

pub fn cell_ids(partition: &CoarsePartition) -> Vec<CellId> {
    partition
        .cells()
        .iter()
        .map(|c| CellId { ax: c.ax, ay: c.ay, kx: c.node.x, ky: c.node.y })
        .collect()
}

/// Rescales the raw means by `N^α`, subtracts `γ_k` for uncoupled runs and
/// coarse-averages on cells of side `h` with the `h²N²` convention.
pub fn compute_fluctuations(
    raw: &RawTable,
    grid: &FrequencyGrid,
    alpha: f64,
    eps: f64,
    h: f64,
) -> Result<FluctuationSeries, HarnessError> {
    if raw.modes != grid.len() {
        return Err(HarnessError::Validation(format!(
            "raw table has {} modes, grid has {}",
            raw.modes,
            grid.len()
        )));
    }
    let saves = raw.save_times.len();
    if raw.mode_stats.mean.len() != saves * raw.modes {
        return Err(HarnessError::Validation("raw table is incomplete".into()));
    }
    let partition = CoarsePartition::new(grid, h)?;
    let scale = (grid.refinement() as f64).powf(alpha);
    let gammas = grid.gammas();
    let exact = raw.cell_h == h && raw.cell_stats.mean.len() == saves * partition.len();
    let mut mode_f = Vec::with_capacity(saves);
    let mut mode_se = Vec::with_capacity(saves);
    let mut cell_f = Vec::with_capacity(saves);
    let mut cell_se = Vec::with_capacity(saves);
    for s in 0..saves {
        let f: Vec<f64> = raw
            .mode_mean(s)
            .iter()
            .zip(&gammas)
            .map(|(m, g)| scale * if raw.coupled { *m } else { m - g })
            .collect();
        let se: Vec<f64> = (0..raw.modes)
            .map(|k| scale * raw.mode_stats.std_error(s * raw.modes + k))
            .collect();
        let cf = partition.average(&f)?;
        let cse = if exact {
            let nc = partition.len();
            (0..nc).map(|c| scale * raw.cell_stats.std_error(s * nc + c)).collect()
        } else {
            let inv = 1.0 / partition.nominal_size();
            partition
                .cells()
                .iter()
                .map(|c| inv * c.members.iter().map(|&k| se[k] * se[k]).sum::<f64>().sqrt())
                .collect()
        };
        mode_f.push(f);
        mode_se.push(se);
        cell_f.push(cf);
        cell_se.push(cse);
    }
    Ok(FluctuationSeries {
        taus: raw.save_times.iter().map(|t| PI * eps * eps * t).collect(),
        save_times: raw.save_times.clone(),
        n: grid.refinement(),
        alpha,
        h,
        members: raw.members(),
        modes: grid.modes().iter().map(|m| (m.i, m.j)).collect(),
        mode_f,
        mode_se,
        cells: cell_ids(&partition),
        cell_f,
        cell_se,
        cell_se_exact: exact,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::freq::{DispersionParams, DomainSpec};
    use crate::harness::ensemble::Welford;

    fn grid(n: u32) -> FrequencyGrid {
        FrequencyGrid::build(DomainSpec::default(), DispersionParams::default(), n).unwrap()
    }

    fn table(grid: &FrequencyGrid, means: Vec<f64>, coupled: bool) -> RawTable {
        let mut w = Welford::new(means.len());
        w.push(&means);
        RawTable {
            save_steps: vec![0],
            save_times: vec![0.0],
            modes: grid.len(),
            requested: 1,
            coupled,
            control_variate: false,
            mode_stats: w,
            cell_h: 0.0,
            cell_stats: Welford::new(0),
            partial: false,
        }
    }

    #[test]
    fn constant_offset_gives_exact_interior_cells() {
        let g = grid(8);
        let v = 0.37;
        let means: Vec<f64> = g.modes().iter().map(|m| m.gamma + v / 8.0).collect();
        let f = compute_fluctuations(&table(&g, means, false), &g, 1.0, 0.1, 0.25).unwrap();
        assert!(f.mode_f[0].iter().all(|x| (x - v).abs() < 1e-12));
        let p = CoarsePartition::new(&g, 0.25).unwrap();
        let mut interior = 0;
        for (c, cell) in p.cells().iter().enumerate() {
            if cell.members.len() as f64 == p.nominal_size() {
                interior += 1;
                assert!((f.cell_f[0][c] - v).abs() < 1e-12);
            }
        }
        assert!(interior > 10);
    }

    /// Halving `h` re-aggregates: four child cells average to the parent.
    #[test]
    fn refinement_reaggregates() {
        let g = grid(16);
        let means: Vec<f64> = g.modes().iter().map(|m| m.k.x.sin() + m.k.y * m.k.y).collect();
        let raw = table(&g, means, true);
        let coarse = compute_fluctuations(&raw, &g, 1.0, 0.1, 0.5).unwrap();
        let fine = compute_fluctuations(&raw, &g, 1.0, 0.1, 0.25).unwrap();
        let pc = CoarsePartition::new(&g, 0.5).unwrap();
        let pf = CoarsePartition::new(&g, 0.25).unwrap();
        let mut checked = 0;
        for (c, cell) in pc.cells().iter().enumerate() {
            if cell.members.len() as f64 != pc.nominal_size() {
                continue;
            }
            let mut sum = 0.0;
            for (dx, dy) in [(0, 0), (0, 1), (1, 0), (1, 1)] {
                let child = pf
                    .cells()
                    .iter()
                    .position(|f| f.ax == 2 * cell.ax + dx && f.ay == 2 * cell.ay + dy)
                    .unwrap();
                sum += fine.cell_f[0][child];
            }
            assert!((sum / 4.0 - coarse.cell_f[0][c]).abs() < 1e-12);
            checked += 1;
        }
        assert!(checked > 3);
        assert!(!coarse.cell_se_exact);
    }

    #[test]
    fn rejects_mismatched_tables() {
        let g = grid(8);
        let raw = table(&grid(4), vec![1.0; grid(4).len()], false);
        assert!(compute_fluctuations(&raw, &g, 1.0, 0.1, 0.25).is_err());
    }
}
