use crate::freq::{psi_plus, DomainSpec, Wavevector};

use super::KineticError;

/// Uniform mesh of spacing `dx` covering the closed bounding box of `D⁺`.
///
/// Nodes sit at integer multiples of `dx`, so the mirror image of a mesh
/// cell and the difference `m − cell` of a node and a cell are again mesh
/// cells. Values on `D⁻` follow from the even extension `f(−m) = f(m)`, and
/// evaluation outside the box returns 0.
#[derive(Debug, Clone)]
pub struct KineticMesh {
    spec: DomainSpec,
    dx: f64,
    ix0: i64,
    iy0: i64,
    nx: usize,
    ny: usize,
    active: Vec<bool>,
}

impl KineticMesh {
    pub fn new(spec: DomainSpec, dx: f64) -> Result<Self, KineticError> {
        spec.validate()
            .map_err(|e| KineticError::InvalidMesh(e.to_string()))?;
        if !(dx > 0.0 && dx.is_finite() && dx < spec.b - spec.a) {
            return Err(KineticError::InvalidMesh(format!(
                "mesh spacing must lie in (0, b - a), got {dx}"
            )));
        }
        let tol = 1e-9;
        let ix0 = (spec.a / dx + tol).floor() as i64;
        let ix1 = (spec.b / dx - tol).ceil() as i64;
        let iy0 = (-spec.c / dx + tol).floor() as i64;
        let iy1 = (spec.c / dx - tol).ceil() as i64;
        let nx = (ix1 - ix0 + 1) as usize;
        let ny = (iy1 - iy0 + 1) as usize;
        let mut mesh = KineticMesh {
            spec,
            dx,
            ix0,
            iy0,
            nx,
            ny,
            active: Vec::new(),
        };
        mesh.active = (0..nx * ny)
            .map(|n| psi_plus(mesh.node(n), &spec) > 0.0)
            .collect();
        Ok(mesh)
    }

    pub fn spec(&self) -> &DomainSpec {
        &self.spec
    }

    pub fn dx(&self) -> f64 {
        self.dx
    }

    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.nx, self.ny)
    }

    /// Integer coordinates of the lower-left node.
    pub fn origin(&self) -> (i64, i64) {
        (self.ix0, self.iy0)
    }

    pub fn node(&self, n: usize) -> Wavevector {
        let (ix, iy) = (n / self.ny, n % self.ny);
        Wavevector::new(
            (self.ix0 + ix as i64) as f64 * self.dx,
            (self.iy0 + iy as i64) as f64 * self.dx,
        )
    }

    pub fn index(&self, ix: i64, iy: i64) -> Option<usize> {
        let (rx, ry) = (ix - self.ix0, iy - self.iy0);
        (rx >= 0 && ry >= 0 && (rx as usize) < self.nx && (ry as usize) < self.ny)
            .then(|| rx as usize * self.ny + ry as usize)
    }

    /// Nodes where `ψ⁺ > 0`; only these carry dynamics.
    pub fn is_active(&self, n: usize) -> bool {
        self.active[n]
    }

    pub fn active_count(&self) -> usize {
        self.active.iter().filter(|&&a| a).count()
    }

    pub fn sample<F: Fn(Wavevector) -> f64>(&self, f: F) -> Vec<f64> {
        (0..self.len()).map(|n| f(self.node(n))).collect()
    }

    /// Bilinear weights of the four corners of the cell containing `q`,
    /// after folding `q` into the right half-plane. Corners outside the box
    /// are reported as `None` and carry value 0.
    pub fn weights(&self, q: Wavevector) -> Option<[(Option<usize>, f64); 4]> {
        let q = if q.x < 0.0 { -q } else { q };
        let fx = q.x / self.dx;
        let fy = q.y / self.dx;
        let cx = fx.floor();
        let cy = fy.floor();
        let (ix, iy) = (cx as i64, cy as i64);
        if ix + 1 < self.ix0
            || iy + 1 < self.iy0
            || ix > self.ix0 + self.nx as i64 - 1
            || iy > self.iy0 + self.ny as i64 - 1
        {
            return None;
        }
        let (tx, ty) = (fx - cx, fy - cy);
        Some([
            (self.index(ix, iy), (1.0 - tx) * (1.0 - ty)),
            (self.index(ix + 1, iy), tx * (1.0 - ty)),
            (self.index(ix, iy + 1), (1.0 - tx) * ty),
            (self.index(ix + 1, iy + 1), tx * ty),
        ])
    }

    pub fn interpolate(&self, values: &[f64], q: Wavevector) -> f64 {
        match self.weights(q) {
            None => 0.0,
            Some(ws) => ws
                .iter()
                .map(|&(n, w)| n.map_or(0.0, |n| w * values[n]))
                .sum(),
        }
    }
}
