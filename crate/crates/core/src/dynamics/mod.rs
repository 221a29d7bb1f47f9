//! Stochastic truncated KP three-wave system on `D_N⁺`.

mod field;
mod integrator;
mod nonlinear;

pub use field::ModeField;
pub use integrator::{phase_step, Integrator, IntegratorConfig, StepWorkspace};
pub use nonlinear::{sum_triads, Backend, Nonlinear, Triad, Workspace};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::freq::FrequencyGrid;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DynamicsError {
    #[error("cannot integrate on an empty grid")]
    EmptyGrid,
    #[error("invalid integrator config: {0}")]
    InvalidConfig(String),
    #[error("field has {got} modes, grid has {expected}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("save time {0} is not a whole number of steps")]
    SaveTimeOffGrid(f64),
    #[error("relative mass drift {drift:.3e} exceeds tolerance at step {step} (t = {t})")]
    MassDrift { step: usize, t: f64, drift: f64 },
    #[error("non-finite amplitude at step {step} (t = {t})")]
    NonFinite { step: usize, t: f64 },
}

/// Conserved quantities of the deterministic flow.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    /// `M = Σ k_x |V_k|²`.
    pub mass: f64,
    /// `Ω = ½ Σ ω_k |V_k|²`.
    pub quadratic: f64,
    /// `K = (1/2N) Σ_{k+ℓ=m} Ψ⁺ 2 Re(V_k V_ℓ V̄_m)`.
    pub cubic: f64,
    /// `H = Ω + ε K`.
    pub hamiltonian: f64,
}

/// Reusable evaluator; building the triad table is `O(M²)`.
#[derive(Debug, Clone)]
pub struct DiagnosticsEvaluator {
    kx: Vec<f64>,
    omega: Vec<f64>,
    n: f64,
    triads: Vec<Triad>,
}

impl Diagnostics {
    pub fn evaluator(grid: &FrequencyGrid) -> DiagnosticsEvaluator {
        DiagnosticsEvaluator {
            kx: grid.modes().iter().map(|m| m.k.x).collect(),
            omega: grid.omegas(),
            n: grid.refinement() as f64,
            triads: sum_triads(grid),
        }
    }
}

impl DiagnosticsEvaluator {
    pub fn eval(&self, v: &[Complex64], eps: f64) -> Diagnostics {
        let mass = v.iter().zip(&self.kx).map(|(z, k)| k * z.norm_sqr()).sum();
        let quadratic = 0.5 * v.iter().zip(&self.omega).map(|(z, w)| w * z.norm_sqr()).sum::<f64>();
        let mut cubic = 0.0;
        for t in &self.triads {
            let (a, b, c) = (t.a as usize, t.b as usize, t.c as usize);
            let mult = if a == b { 1.0 } else { 2.0 };
            cubic += mult * t.coupling * 2.0 * (v[a] * v[b] * v[c].conj()).re;
        }
        cubic /= 2.0 * self.n;
        Diagnostics {
            mass,
            quadratic,
            cubic,
            hamiltonian: quadratic + eps * cubic,
        }
    }
}

pub fn diagnostics(field: &ModeField, grid: &FrequencyGrid, eps: f64) -> Diagnostics {
    Diagnostics::evaluator(grid).eval(&field.values, eps)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::freq::{DispersionParams, DomainSpec};
    use crate::measures::sample_invariant;
    use crate::rng::init_stream;

    fn grid(n: u32) -> FrequencyGrid {
        FrequencyGrid::build(DomainSpec::default(), DispersionParams::default(), n).unwrap()
    }

    #[test]
    fn single_mode_values() {
        let g = grid(4);
        let s = g.slot(3, 2).unwrap();
        let mut f = ModeField::zeros(g.len());
        f.values[s] = Complex64::new(1.0, 0.0);
        let d = diagnostics(&f, &g, 0.3);
        assert!((d.mass - 0.75).abs() < 1e-15);
        assert!((d.quadratic - 0.5 * (0.421875 + 0.25 / 0.75)).abs() < 1e-15);
        assert!((d.quadratic - 0.377604).abs() < 1e-6);
        assert_eq!(d.cubic, 0.0);

        let mut f = ModeField::zeros(g.len());
        f.values[g.slot(3, 0).unwrap()] = Complex64::new(1.0, 0.0);
        assert_eq!(diagnostics(&f, &g, 1.0).cubic, 0.0);
    }

    /// `K` from the literal double sum over ordered pairs.
    #[test]
    fn cubic_matches_literal_sum() {
        let g = grid(4);
        let f = sample_invariant(&g, &mut init_stream(3, 0)).unwrap();
        let modes = g.modes();
        let mut k = 0.0;
        for (a, ma) in modes.iter().enumerate() {
            for (b, mb) in modes.iter().enumerate() {
                if let Some(c) = g.slot(ma.i + mb.i, ma.j + mb.j) {
                    let psi = ma.phi * mb.phi * modes[c].phi;
                    k += psi * 2.0 * (f.values[a] * f.values[b] * f.values[c].conj()).re;
                }
            }
        }
        k /= 8.0;
        let d = diagnostics(&f, &g, 1.0);
        assert!((d.cubic - k).abs() < 1e-12 * k.abs().max(1.0));
    }

    /// The interaction is the Hamiltonian vector field `2i ∂K/∂V̄` of the cubic part.
    #[test]
    fn rhs_is_gradient_of_cubic() {
        let g = grid(4);
        let f = sample_invariant(&g, &mut init_stream(6, 0)).unwrap();
        let eval = Diagnostics::evaluator(&g);
        let rhs = Nonlinear::new(&g, 1.0, Backend::Direct).rhs(&f.values);
        let h = 1e-6;
        for s in [0, 7, 20, 40] {
            let mut re = f.values.clone();
            re[s] += h;
            let mut re_m = f.values.clone();
            re_m[s] -= h;
            let mut im = f.values.clone();
            im[s] += Complex64::new(0.0, h);
            let mut im_m = f.values.clone();
            im_m[s] -= Complex64::new(0.0, h);
            let dre = (eval.eval(&re, 1.0).cubic - eval.eval(&re_m, 1.0).cubic) / (2.0 * h);
            let dim = (eval.eval(&im, 1.0).cubic - eval.eval(&im_m, 1.0).cubic) / (2.0 * h);
            // ∂/∂V̄ = ½(∂/∂re + i ∂/∂im)
            let grad = Complex64::new(dre, dim) * 0.5;
            let expect = Complex64::new(0.0, 2.0) * grad;
            assert!((rhs[s] - expect).norm() < 1e-6 * (1.0 + expect.norm()), "{s}");
        }
    }
}
