use std::f64::consts::PI;

use rayon::prelude::*;

use crate::freq::{phi, DispersionParams, Wavevector};
use crate::manifold::{CurveQuadrature, WeightRule};

use super::kernels::{kernels_with_coupling, KernelConvention};
use super::{KineticError, KineticMesh};

/// Lorentzian subcells per axis are chosen so that the mismatch varies by
/// about `λ / LORENTZ_RESOLUTION` between neighbouring quadrature points.
const LORENTZ_RESOLUTION: f64 = 2.0;
const MAX_SUBDIVISION: usize = 256;

/// Sparse linear operator `f ↦ df/dτ` on mesh values (CSR).
#[derive(Debug, Clone)]
pub struct KineticOperator {
    n: usize,
    row_ptr: Vec<usize>,
    cols: Vec<u32>,
    vals: Vec<f64>,
}

/// Dense accumulator for one operator row.
struct RowScratch {
    dense: Vec<f64>,
    seen: Vec<bool>,
    touched: Vec<u32>,
}

impl RowScratch {
    fn new(n: usize) -> Self {
        RowScratch {
            dense: vec![0.0; n],
            seen: vec![false; n],
            touched: Vec::new(),
        }
    }

    #[inline]
    fn add(&mut self, col: usize, v: f64) {
        if v == 0.0 {
            return;
        }
        if !self.seen[col] {
            self.seen[col] = true;
            self.touched.push(col as u32);
        }
        self.dense[col] += v;
    }

    fn drain(&mut self) -> Vec<(u32, f64)> {
        self.touched.sort_unstable();
        let out = self
            .touched
            .iter()
            .map(|&c| (c, self.dense[c as usize]))
            .collect();
        for &c in &self.touched {
            self.dense[c as usize] = 0.0;
            self.seen[c as usize] = false;
        }
        self.touched.clear();
        out
    }
}

impl KineticOperator {
    fn assemble<F>(mesh: &KineticMesh, build_row: F) -> Result<Self, KineticError>
    where
        F: Fn(usize, &mut RowScratch) -> Result<(), KineticError> + Sync,
    {
        let n = mesh.len();
        let rows: Vec<Vec<(u32, f64)>> = (0..n)
            .into_par_iter()
            .map_init(
                || RowScratch::new(n),
                |scratch, row| {
                    if !mesh.is_active(row) {
                        return Ok(Vec::new());
                    }
                    build_row(row, scratch)?;
                    Ok(scratch.drain())
                },
            )
            .collect::<Result<_, KineticError>>()?;
        let mut row_ptr = Vec::with_capacity(n + 1);
        row_ptr.push(0);
        let nnz: usize = rows.iter().map(Vec::len).sum();
        let mut cols = Vec::with_capacity(nnz);
        let mut vals = Vec::with_capacity(nnz);
        for r in rows {
            for (c, v) in r {
                cols.push(c);
                vals.push(v);
            }
            row_ptr.push(cols.len());
        }
        Ok(KineticOperator {
            n,
            row_ptr,
            cols,
            vals,
        })
    }

    /// Resonant form: kernels integrated over `Γ(0, m)` with the curve
    /// quadrature, `f(p)` and `f(m − p)` interpolated bilinearly.
    pub fn resonant(
        mesh: &KineticMesh,
        params: &DispersionParams,
        n_sigma: usize,
        convention: KernelConvention,
    ) -> Result<Self, KineticError> {
        let spec = *mesh.spec();
        Self::assemble(mesh, |row, scratch| {
            let m = mesh.node(row);
            let q = CurveQuadrature::new(m, 0.0, n_sigma, params, &spec, WeightRule::CoArea)?;
            let pm = phi(m, &spec);
            for node in &q.nodes {
                let psi = pm * phi(node.p, &spec) * phi(node.j, &spec);
                if psi == 0.0 {
                    continue;
                }
                let k = kernels_with_coupling(m, node.j, node.p, psi * psi, convention);
                scratch.add(row, node.weight * k.l);
                for (leg, coef) in [(node.p, k.s_p), (node.j, k.s_j)] {
                    if let Some(ws) = mesh.weights(leg) {
                        for (c, w) in ws {
                            if let Some(c) = c {
                                scratch.add(c, node.weight * coef * w);
                            }
                        }
                    }
                }
            }
            Ok(())
        })
    }

    /// Quasi-resonant form: the kernels weighted by `(1/π) λ/(Ω² + λ²)` and
    /// integrated over the whole `p`-plane by adaptive midpoint quadrature
    /// on mesh-aligned cells.
    pub fn lorentzian(
        mesh: &KineticMesh,
        params: &DispersionParams,
        lambda: f64,
        convention: KernelConvention,
    ) -> Result<Self, KineticError> {
        if !(lambda > 0.0 && lambda.is_finite()) {
            return Err(KineticError::InvalidLambda(lambda));
        }
        let spec = *mesh.spec();
        let dx = mesh.dx();
        let kx_lo = (-spec.b / dx).floor() as i64;
        let kx_hi = (spec.b / dx).ceil() as i64 - 1;
        let ky_lo = (-spec.c / dx).floor() as i64;
        let ky_hi = (spec.c / dx).ceil() as i64 - 1;
        // an open cell [x0, x0 + dx] can meet supp ψ only if it meets a < |x| < b
        let x_ok = |x0: f64| {
            let x1 = x0 + dx;
            (x1 > spec.a && x0 < spec.b) || (x0 < -spec.a && x1 > -spec.b)
        };
        let y_ok = |y0: f64| y0 + dx > -spec.c && y0 < spec.c;
        let (ox, oy) = mesh.origin();
        Self::assemble(mesh, |row, scratch| {
            let m = mesh.node(row);
            let (mi, mj) = (
                ox + (row / mesh.shape().1) as i64,
                oy + (row % mesh.shape().1) as i64,
            );
            let pm = phi(m, &spec);
            let wm = params.omega(m);
            for kx in kx_lo..=kx_hi {
                let x0 = kx as f64 * dx;
                if !x_ok(x0) || !x_ok(m.x - x0 - dx) {
                    continue;
                }
                for ky in ky_lo..=ky_hi {
                    let y0 = ky as f64 * dx;
                    if !y_ok(y0) || !y_ok(m.y - y0 - dx) {
                        continue;
                    }
                    let centre = Wavevector::new(x0 + 0.5 * dx, y0 + 0.5 * dx);
                    let jc = m - centre;
                    let omega_c = wm - params.omega(jc) - params.omega(centre);
                    let (_, jgx, jgy) = params.omega_and_grad(jc).expect("cell centres avoid k_x = 0");
                    let (_, pgx, pgy) = params.omega_and_grad(centre).expect("cell centres avoid k_x = 0");
                    let grad = (jgx - pgx).hypot(jgy - pgy);
                    let sub = ((LORENTZ_RESOLUTION * grad * dx / (omega_c.abs() + lambda)).ceil() as usize)
                        .clamp(1, MAX_SUBDIVISION);
                    let h = dx / sub as f64;
                    let mut diag = 0.0;
                    let mut a = [0.0; 4];
                    let mut b = [0.0; 4];
                    for sx in 0..sub {
                        let tx = (sx as f64 + 0.5) / sub as f64;
                        let px = x0 + tx * dx;
                        for sy in 0..sub {
                            let ty = (sy as f64 + 0.5) / sub as f64;
                            let p = Wavevector::new(px, y0 + ty * dx);
                            let j = m - p;
                            let psi = pm * phi(p, &spec) * phi(j, &spec);
                            if psi == 0.0 {
                                continue;
                            }
                            let om = wm - params.omega(j) - params.omega(p);
                            let w = lambda / (om * om + lambda * lambda) * h * h / PI;
                            let k = kernels_with_coupling(m, j, p, psi * psi, convention);
                            diag += w * k.l;
                            let bw = [
                                (1.0 - tx) * (1.0 - ty),
                                tx * (1.0 - ty),
                                (1.0 - tx) * ty,
                                tx * ty,
                            ];
                            for c in 0..4 {
                                a[c] += w * k.s_p * bw[c];
                                b[c] += w * k.s_j * bw[c];
                            }
                        }
                    }
                    scratch.add(row, diag);
                    for (c, (cx, cy)) in [(0, 0), (1, 0), (0, 1), (1, 1)].into_iter().enumerate() {
                        let (pi, pj) = (kx + cx, ky + cy);
                        if let Some(col) = folded_index(mesh, pi, pj) {
                            scratch.add(col, a[c]);
                        }
                        if let Some(col) = folded_index(mesh, mi - pi, mj - pj) {
                            scratch.add(col, b[c]);
                        }
                    }
                }
            }
            Ok(())
        })
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    pub fn apply(&self, f: &[f64], out: &mut [f64]) {
        for (r, o) in out.iter_mut().enumerate() {
            let (lo, hi) = (self.row_ptr[r], self.row_ptr[r + 1]);
            *o = self.cols[lo..hi]
                .iter()
                .zip(&self.vals[lo..hi])
                .map(|(&c, &v)| v * f[c as usize])
                .sum();
        }
    }

    pub fn apply_vec(&self, f: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.n];
        self.apply(f, &mut out);
        out
    }

    /// Maximum absolute row sum, the induced sup-norm.
    pub fn row_sum_norm(&self) -> f64 {
        (0..self.n)
            .map(|r| {
                self.vals[self.row_ptr[r]..self.row_ptr[r + 1]]
                    .iter()
                    .map(|v| v.abs())
                    .sum::<f64>()
            })
            .fold(0.0, f64::max)
    }

    /// Diagonal entry of row `r` (the integrated decay coefficient).
    pub fn diagonal(&self, r: usize) -> f64 {
        let (lo, hi) = (self.row_ptr[r], self.row_ptr[r + 1]);
        self.cols[lo..hi]
            .iter()
            .position(|&c| c as usize == r)
            .map_or(0.0, |i| self.vals[lo + i])
    }
}

/// Mesh index of integer point `(i, j) dx`, folded into the right half-plane.
fn folded_index(mesh: &KineticMesh, i: i64, j: i64) -> Option<usize> {
    if i < 0 {
        mesh.index(-i, -j)
    } else {
        mesh.index(i, j)
    }
}
