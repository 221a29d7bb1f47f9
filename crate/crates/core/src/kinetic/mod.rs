//! Linearised wave-kinetic equation around the Rayleigh-Jeans profile, in a
//! resonant (curve quadrature) and a quasi-resonant (Lorentzian) form.

mod kernels;
mod mesh;
mod operator;
mod solve;

pub use kernels::{kernels_with_coupling, linearized_kernels, nonlinear_integrand, KernelConvention, Kernels};
pub use mesh::KineticMesh;
pub use operator::KineticOperator;
pub use solve::{guarded_step, solve, solve_at, KineticState, KineticTrajectory};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::freq::{DispersionParams, Wavevector};
use crate::manifold::ManifoldError;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum KineticError {
    #[error("invalid kinetic mesh: {0}")]
    InvalidMesh(String),
    #[error("Lorentzian width lambda must be positive, got {0}")]
    InvalidLambda(f64),
    #[error("time step {0} cannot satisfy the stability guard")]
    InvalidStep(f64),
    #[error("output times must be finite, nonnegative and nondecreasing")]
    InvalidHorizon,
    #[error("expected {expected} nodal values, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("solution blew up at tau = {tau} (sup norm {norm:.3e})")]
    Blowup { tau: f64, norm: f64 },
    #[error("profile must be positive, got r <= 0 at {0}")]
    NonPositiveProfile(Wavevector),
    #[error(transparent)]
    Manifold(#[from] ManifoldError),
}

/// Which collision operator to discretise.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "form", rename_all = "snake_case")]
pub enum KineticForm {
    Resonant,
    Lorentzian { lambda: f64 },
}

impl KineticForm {
    pub fn build(
        &self,
        mesh: &KineticMesh,
        params: &DispersionParams,
        n_sigma: usize,
        convention: KernelConvention,
    ) -> Result<KineticOperator, KineticError> {
        match *self {
            KineticForm::Resonant => KineticOperator::resonant(mesh, params, n_sigma, convention),
            KineticForm::Lorentzian { lambda } => {
                KineticOperator::lorentzian(mesh, params, lambda, convention)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::freq::DomainSpec;
    use crate::manifold::integrate_curve;

    fn mesh(dx: f64) -> KineticMesh {
        KineticMesh::new(DomainSpec::default(), dx).unwrap()
    }

    fn gamma_on(mesh: &KineticMesh) -> Vec<f64> {
        mesh.sample(|k| 1.0 / k.x)
    }

    fn sup(v: &[f64]) -> f64 {
        v.iter().fold(0.0, |a, x| a.max(x.abs()))
    }

    #[test]
    fn zero_in_zero_out() {
        let m = mesh(0.1);
        let d = DispersionParams::default();
        for form in [KineticForm::Resonant, KineticForm::Lorentzian { lambda: 0.2 }] {
            let op = form.build(&m, &d, 100, KernelConvention::StationaryPairing).unwrap();
            assert!(op.apply_vec(&vec![0.0; m.len()]).iter().all(|&v| v == 0.0));
            let traj = solve(&op, &vec![0.0; m.len()], 0.1, 0.01).unwrap();
            assert!(traj.states.iter().all(|s| s.values.iter().all(|&v| v == 0.0)));
        }
    }

    #[test]
    fn rayleigh_jeans_is_nearly_stationary() {
        let d = DispersionParams::default();
        let mut prev = f64::INFINITY;
        for dx in [0.1, 0.05] {
            let m = mesh(dx);
            let g = gamma_on(&m);
            let op = KineticOperator::resonant(&m, &d, 400, KernelConvention::StationaryPairing).unwrap();
            let r = sup(&op.apply_vec(&g));
            let bound = 1e-2 * op.row_sum_norm() * sup(&g);
            assert!(r <= bound, "dx {dx}: {r} vs {bound}");
            assert!(r < prev);
            prev = r;
        }
    }

    #[test]
    fn lorentzian_rejects_nonpositive_width() {
        let m = mesh(0.1);
        let d = DispersionParams::default();
        assert!(matches!(
            KineticOperator::lorentzian(&m, &d, 0.0, KernelConvention::StationaryPairing),
            Err(KineticError::InvalidLambda(_))
        ));
    }

    #[test]
    fn isolated_bump_sees_only_decay() {
        let spec = DomainSpec::default();
        let d = DispersionParams::default();
        let m = mesh(0.05);
        let row = m.index(24, 0).unwrap();
        let centre = m.node(row);
        // support inside one mesh spacing of the node
        let f: Vec<f64> = (0..m.len()).map(|n| if n == row { 1.0 } else { 0.0 }).collect();
        let op = KineticOperator::resonant(&m, &d, 400, KernelConvention::StationaryPairing).unwrap();
        let out = op.apply_vec(&f);
        let decay = integrate_curve(
            |mm, j, p| linearized_kernels(mm, j, p, &spec, KernelConvention::StationaryPairing).l,
            centre,
            0.0,
            400,
            &d,
            &spec,
        )
        .unwrap();
        // Γ(0, m) never passes within a mesh cell of m itself or of m/2 ± cell here
        assert!((out[row] - decay).abs() <= 1e-12 * decay.abs(), "{} vs {decay}", out[row]);
        assert!(decay < 0.0);
    }

    #[test]
    fn solve_is_linear() {
        let m = mesh(0.1);
        let d = DispersionParams::default();
        let op = KineticOperator::resonant(&m, &d, 200, KernelConvention::StationaryPairing).unwrap();
        let f0 = m.sample(|k| (-((k.x - 1.2).powi(2) + k.y * k.y) / 0.1).exp());
        let f2: Vec<f64> = f0.iter().map(|v| 2.0 * v).collect();
        let a = solve(&op, &f0, 0.3, 0.01).unwrap();
        let b = solve(&op, &f2, 0.3, 0.01).unwrap();
        for (x, y) in a.states.last().unwrap().values.iter().zip(&b.states.last().unwrap().values) {
            assert!((2.0 * x - y).abs() <= 1e-10 * y.abs().max(1.0));
        }
    }

    #[test]
    fn stability_guard_halves() {
        assert_eq!(guarded_step(0.01, 10.0).unwrap(), 0.01);
        assert_eq!(guarded_step(0.01, 150.0).unwrap(), 0.005);
        assert!(guarded_step(-1.0, 1.0).is_err());
    }

    #[test]
    fn solve_at_lands_on_requested_times() {
        let m = mesh(0.1);
        let d = DispersionParams::default();
        let op = KineticOperator::resonant(&m, &d, 100, KernelConvention::StationaryPairing).unwrap();
        let f0 = m.sample(|k| 1.0 / k.x);
        let traj = solve_at(&op, &f0, &[0.0, 0.013, 0.2], 0.01).unwrap();
        let taus: Vec<f64> = traj.states.iter().map(|s| s.tau).collect();
        assert_eq!(taus, vec![0.0, 0.013, 0.2]);
        assert_eq!(traj.states[0].values, f0);
    }
}
