use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::freq::FrequencyGrid;

/// How the quadratic interaction is evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Backend {
    /// Sum over the precomputed triad table.
    #[default]
    Direct,
    /// Zero-padded 2-D FFT convolution and correlation.
    Fft,
}

impl Backend {
    /// The faster backend for a lattice of refinement `n` (measured on one core).
    pub fn preferred(n: u32) -> Backend {
        if n <= 8 {
            Backend::Direct
        } else {
            Backend::Fft
        }
    }
}

/// One unordered sum triad `c = a + b` with `a ≤ b` (storage order).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Triad {
    pub a: u32,
    pub b: u32,
    pub c: u32,
    /// `Ψ⁺ = φ⁺(a) φ⁺(b) φ⁺(c)`.
    pub coupling: f64,
}

/// All sum triads of `D_N⁺` with nonzero coupling.
pub fn sum_triads(grid: &FrequencyGrid) -> Vec<Triad> {
    let modes = grid.modes();
    let mut out = Vec::new();
    for (a, ma) in modes.iter().enumerate() {
        if ma.phi == 0.0 {
            continue;
        }
        for (b, mb) in modes.iter().enumerate().skip(a) {
            if mb.phi == 0.0 {
                continue;
            }
            if let Some(c) = grid.slot(ma.i + mb.i, ma.j + mb.j) {
                let coupling = ma.phi * mb.phi * modes[c].phi;
                if coupling != 0.0 {
                    out.push(Triad {
                        a: a as u32,
                        b: b as u32,
                        c: c as u32,
                        coupling,
                    });
                }
            }
        }
    }
    out
}

struct FftBox {
    px: usize,
    py: usize,
    /// Box position of every mode, `(i − i0) py + (j − j0)`.
    cell: Vec<usize>,
    /// Box position of `n − 2·origin` for the sum convolution, if in range.
    sum_cell: Vec<Option<usize>>,
    /// Box position of `n` for the correlation, if some pair can realise it.
    diff_cell: Vec<Option<usize>>,
    fwd_x: Arc<dyn Fft<f64>>,
    inv_x: Arc<dyn Fft<f64>>,
    fwd_y: Arc<dyn Fft<f64>>,
    inv_y: Arc<dyn Fft<f64>>,
}

impl FftBox {
    fn new(grid: &FrequencyGrid) -> Self {
        let ((i0, i1), (j0, j1)) = grid.index_box();
        let lx = (i1 - i0 + 1).max(1) as usize;
        let ly = (j1 - j0 + 1).max(1) as usize;
        let px = (2 * lx - 1).next_power_of_two();
        let py = (2 * ly - 1).next_power_of_two();
        let wrap = |d: i64, p: usize| d.rem_euclid(p as i64) as usize;
        let mut cell = Vec::with_capacity(grid.len());
        let mut sum_cell = Vec::with_capacity(grid.len());
        let mut diff_cell = Vec::with_capacity(grid.len());
        for m in grid.modes() {
            cell.push((m.i - i0) as usize * py + (m.j - j0) as usize);
            let (si, sj) = (m.i - 2 * i0, m.j - 2 * j0);
            sum_cell.push(
                (si >= 0 && si < 2 * lx as i64 - 1 && sj >= 0 && sj < 2 * ly as i64 - 1)
                    .then(|| si as usize * py + sj as usize),
            );
            // differences of two box points lie in (−L, L) on each axis
            diff_cell.push(
                (m.i.abs() < lx as i64 && m.j.abs() < ly as i64)
                    .then(|| wrap(m.i, px) * py + wrap(m.j, py)),
            );
        }
        let mut planner = FftPlanner::new();
        FftBox {
            px,
            py,
            cell,
            sum_cell,
            diff_cell,
            fwd_x: planner.plan_fft_forward(px),
            inv_x: planner.plan_fft_inverse(px),
            fwd_y: planner.plan_fft_forward(py),
            inv_y: planner.plan_fft_inverse(py),
        }
    }

    fn transform(&self, data: &mut [Complex64], col: &mut [Complex64], scratch: &mut Vec<Complex64>, inverse: bool) {
        let (fx, fy) = if inverse {
            (&self.inv_x, &self.inv_y)
        } else {
            (&self.fwd_x, &self.fwd_y)
        };
        let need = fx.get_inplace_scratch_len().max(fy.get_inplace_scratch_len());
        if scratch.len() < need {
            scratch.resize(need, Complex64::new(0.0, 0.0));
        }
        // rows are contiguous along y
        for row in data.chunks_exact_mut(self.py) {
            fy.process_with_scratch(row, scratch);
        }
        for y in 0..self.py {
            for x in 0..self.px {
                col[x] = data[x * self.py + y];
            }
            fx.process_with_scratch(col, scratch);
            for x in 0..self.px {
                data[x * self.py + y] = col[x];
            }
        }
    }
}

/// Per-worker scratch space for [`Nonlinear::rhs_into`].
#[derive(Debug, Default, Clone)]
pub struct Workspace {
    spectrum: Vec<Complex64>,
    product: Vec<Complex64>,
    col: Vec<Complex64>,
    scratch: Vec<Complex64>,
}

/// The quadratic interaction `i(ε/N)[Σ_{k+ℓ=n} Ψ⁺V_kV_ℓ + 2Σ_{ℓ−k=n} Ψ⁺ V̄_kV_ℓ]`.
pub struct Nonlinear {
    backend: Backend,
    len: usize,
    scale: f64,
    phi: Vec<f64>,
    triads: Vec<Triad>,
    fft: Option<FftBox>,
}

impl std::fmt::Debug for Nonlinear {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Nonlinear")
            .field("backend", &self.backend)
            .field("len", &self.len)
            .field("scale", &self.scale)
            .field("triads", &self.triads.len())
            .finish()
    }
}

impl Nonlinear {
    pub fn new(grid: &FrequencyGrid, eps: f64, backend: Backend) -> Self {
        let scale = eps / grid.refinement() as f64;
        let phi = grid.modes().iter().map(|m| m.phi).collect();
        let (triads, fft) = match backend {
            Backend::Direct => (sum_triads(grid), None),
            Backend::Fft => (Vec::new(), Some(FftBox::new(grid))),
        };
        Nonlinear {
            backend,
            len: grid.len(),
            scale,
            phi,
            triads,
            fft,
        }
    }

    pub fn backend(&self) -> Backend {
        self.backend
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn rhs(&self, v: &[Complex64]) -> Vec<Complex64> {
        let mut out = vec![Complex64::new(0.0, 0.0); self.len];
        self.rhs_into(v, &mut out, &mut Workspace::default());
        out
    }

    pub fn rhs_into(&self, v: &[Complex64], out: &mut [Complex64], ws: &mut Workspace) {
        assert_eq!(v.len(), self.len);
        assert_eq!(out.len(), self.len);
        match &self.fft {
            None => self.rhs_direct(v, out),
            Some(b) => self.rhs_fft(b, v, out, ws),
        }
    }

    fn rhs_direct(&self, v: &[Complex64], out: &mut [Complex64]) {
        out.fill(Complex64::new(0.0, 0.0));
        for t in &self.triads {
            let (a, b, c) = (t.a as usize, t.b as usize, t.c as usize);
            let (va, vb, vc) = (v[a], v[b], v[c]);
            if a == b {
                out[c] += va * va * t.coupling;
                out[a] += va.conj() * vc * (2.0 * t.coupling);
            } else {
                out[c] += va * vb * (2.0 * t.coupling);
                out[a] += vb.conj() * vc * (2.0 * t.coupling);
                out[b] += va.conj() * vc * (2.0 * t.coupling);
            }
        }
        let s = Complex64::new(0.0, self.scale);
        for o in out.iter_mut() {
            *o *= s;
        }
    }

    fn rhs_fft(&self, b: &FftBox, v: &[Complex64], out: &mut [Complex64], ws: &mut Workspace) {
        let total = b.px * b.py;
        let zero = Complex64::new(0.0, 0.0);
        ws.spectrum.clear();
        ws.spectrum.resize(total, zero);
        ws.product.resize(total, zero);
        ws.col.resize(b.px, zero);
        for (s, &pos) in b.cell.iter().enumerate() {
            ws.spectrum[pos] = v[s] * self.phi[s];
        }
        b.transform(&mut ws.spectrum, &mut ws.col, &mut ws.scratch, false);

        let norm = 1.0 / total as f64;
        for (p, g) in ws.product.iter_mut().zip(&ws.spectrum) {
            *p = g * g;
        }
        b.transform(&mut ws.product, &mut ws.col, &mut ws.scratch, true);
        for (s, o) in out.iter_mut().enumerate() {
            *o = b.sum_cell[s].map_or(zero, |pos| ws.product[pos] * norm);
        }

        for (p, g) in ws.product.iter_mut().zip(&ws.spectrum) {
            *p = Complex64::new(g.norm_sqr(), 0.0);
        }
        b.transform(&mut ws.product, &mut ws.col, &mut ws.scratch, true);
        // IFFT(|G|²)[d] = Σ_x conj(g[x]) g[x + d] on the periodic box.
        for (s, o) in out.iter_mut().enumerate() {
            if let Some(pos) = b.diff_cell[s] {
                *o += ws.product[pos] * (2.0 * norm);
            }
            *o *= Complex64::new(0.0, self.scale * self.phi[s]);
        }
    }
}
