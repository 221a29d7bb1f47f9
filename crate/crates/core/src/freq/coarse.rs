use std::collections::BTreeMap;

use super::{FreqError, FrequencyGrid, Wavevector};

/// One coarse cell `C_K = {m : K ≤ m < K + h}` restricted to `D_N⁺`.
#[derive(Debug, Clone, PartialEq)]
pub struct CoarseCell {
    /// Integer coarse coordinates, `K = h·(ax, ay)`.
    pub ax: i64,
    pub ay: i64,
    pub node: Wavevector,
    /// Storage slots of the fine modes inside the cell.
    pub members: Vec<usize>,
}

/// Partition of `D_N⁺` into half-open squares of side `h`.
///
/// Coarse nodes are the points `hα` whose cell holds at least one fine mode
/// of `D_N⁺`. Values on `D⁻` follow by evenness and are not stored. Averages
/// always divide by `h²N²`, so partially occupied boundary cells are damped.
#[derive(Debug, Clone)]
pub struct CoarsePartition {
    h: f64,
    n: u32,
    cells: Vec<CoarseCell>,
    cell_of_mode: Vec<usize>,
}

// Lattice points that sit exactly on a cell edge must land in the upper cell
// despite rounding in `i/N / h`.
const EDGE_TOL: f64 = 1e-9;

impl CoarsePartition {
    pub fn new(grid: &FrequencyGrid, h: f64) -> Result<Self, FreqError> {
        let n = grid.refinement();
        let spacing = 1.0 / n as f64;
        if !(h.is_finite() && h >= spacing * (1.0 - EDGE_TOL)) {
            return Err(FreqError::CoarseMeshTooFine { h, spacing });
        }
        let mut by_node: BTreeMap<(i64, i64), Vec<usize>> = BTreeMap::new();
        for (s, m) in grid.modes().iter().enumerate() {
            let ax = (m.k.x / h + EDGE_TOL).floor() as i64;
            let ay = (m.k.y / h + EDGE_TOL).floor() as i64;
            by_node.entry((ax, ay)).or_default().push(s);
        }
        let mut cell_of_mode = vec![0; grid.len()];
        let cells: Vec<CoarseCell> = by_node
            .into_iter()
            .enumerate()
            .map(|(c, ((ax, ay), members))| {
                for &s in &members {
                    cell_of_mode[s] = c;
                }
                CoarseCell {
                    ax,
                    ay,
                    node: Wavevector::new(ax as f64 * h, ay as f64 * h),
                    members,
                }
            })
            .collect();
        Ok(CoarsePartition {
            h,
            n,
            cells,
            cell_of_mode,
        })
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn cells(&self) -> &[CoarseCell] {
        &self.cells
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    /// Index of the cell containing the fine mode in storage slot `slot`.
    pub fn cell_of(&self, slot: usize) -> usize {
        self.cell_of_mode[slot]
    }

    /// Nominal cell population `h²N²`.
    pub fn nominal_size(&self) -> f64 {
        let hn = self.h * self.n as f64;
        hn * hn
    }

    /// `(1/h²N²) Σ_{k ∈ C_K} values[k]` for every cell.
    pub fn average(&self, values: &[f64]) -> Result<Vec<f64>, FreqError> {
        if values.len() != self.cell_of_mode.len() {
            return Err(FreqError::LengthMismatch {
                expected: self.cell_of_mode.len(),
                got: values.len(),
            });
        }
        let scale = 1.0 / self.nominal_size();
        Ok(self
            .cells
            .iter()
            .map(|c| c.members.iter().map(|&s| values[s]).sum::<f64>() * scale)
            .collect())
    }

    pub fn find(&self, node: Wavevector) -> Option<usize> {
        let ax = (node.x / self.h + EDGE_TOL).floor() as i64;
        let ay = (node.y / self.h + EDGE_TOL).floor() as i64;
        self.cells
            .binary_search_by(|c| (c.ax, c.ay).cmp(&(ax, ay)))
            .ok()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::freq::{DispersionParams, DomainSpec};

    fn grid(n: u32) -> FrequencyGrid {
        FrequencyGrid::build(DomainSpec::default(), DispersionParams::default(), n).unwrap()
    }

    #[test]
    fn interior_cell_constant_average() {
        let g = grid(8);
        let p = CoarsePartition::new(&g, 0.25).unwrap();
        let avg = p.average(&vec![3.5; g.len()]).unwrap();
        let c = p.find(Wavevector::new(1.0, 0.0)).unwrap();
        assert_eq!(p.cells()[c].members.len(), 4);
        assert_eq!(avg[c], 3.5);
    }

    #[test]
    fn boundary_cell_is_damped_by_occupancy() {
        let g = grid(8);
        let p = CoarsePartition::new(&g, 0.25).unwrap();
        // lattice sites of [0.5, 0.75) × [0, 0.25): x ∈ {4/8, 5/8}, y ∈ {0, 1/8};
        // x = 4/8 sits on the open edge of D⁺, so two of four sites remain.
        let mut occupancy = 0;
        for i in 4..6 {
            for j in 0..2 {
                if g.spec().contains_plus(Wavevector::new(i as f64 / 8.0, j as f64 / 8.0)) {
                    occupancy += 1;
                }
            }
        }
        assert_eq!(occupancy, 2);
        let c = p.find(Wavevector::new(0.5, 0.0)).unwrap();
        let avg = p.average(&vec![2.0; g.len()]).unwrap();
        assert_eq!(avg[c], 2.0 * occupancy as f64 / 4.0);
    }

    #[test]
    fn zero_values_average_to_zero() {
        let g = grid(4);
        let p = CoarsePartition::new(&g, 0.5).unwrap();
        assert!(p.average(&vec![0.0; g.len()]).unwrap().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn cells_partition_the_grid() {
        let g = grid(16);
        let p = CoarsePartition::new(&g, 0.25).unwrap();
        let total: usize = p.cells().iter().map(|c| c.members.len()).sum();
        assert_eq!(total, g.len());
        for c in p.cells() {
            assert!(c.members.len() <= 16);
            for &s in &c.members {
                let k = g.modes()[s].k;
                assert!(c.node.x <= k.x + 1e-12 && k.x < c.node.x + 0.25 - 1e-12);
                assert!(c.node.y <= k.y + 1e-12 && k.y < c.node.y + 0.25 - 1e-12);
            }
        }
    }

    #[test]
    fn too_fine_mesh_rejected() {
        let g = grid(4);
        assert!(matches!(
            CoarsePartition::new(&g, 0.1),
            Err(FreqError::CoarseMeshTooFine { .. })
        ));
        assert!(CoarsePartition::new(&g, 0.25).is_ok());
    }
}
