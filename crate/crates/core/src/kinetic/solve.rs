use serde::{Deserialize, Serialize};

use super::{KineticError, KineticOperator};

/// Nodal values `f` at rescaled time `τ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KineticState {
    pub tau: f64,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct KineticTrajectory {
    pub states: Vec<KineticState>,
    /// Step actually used after the stability guard.
    pub dtau: f64,
    pub operator_norm: f64,
}

fn sup(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |a, x| a.max(x.abs()))
}

/// Largest step `≤ dtau`, obtained by halving, with `dτ ‖A‖ < 1`.
pub fn guarded_step(dtau: f64, norm: f64) -> Result<f64, KineticError> {
    if !(dtau > 0.0 && dtau.is_finite()) {
        return Err(KineticError::InvalidStep(dtau));
    }
    let mut h = dtau;
    for _ in 0..60 {
        if h * norm < 1.0 {
            return Ok(h);
        }
        h /= 2.0;
    }
    Err(KineticError::InvalidStep(dtau))
}

fn rk4_step(op: &KineticOperator, f: &mut [f64], h: f64, k: &mut [Vec<f64>; 4], stage: &mut [f64]) {
    let n = f.len();
    let [k1, k2, k3, k4] = k;
    op.apply(f, k1);
    for i in 0..n {
        stage[i] = f[i] + 0.5 * h * k1[i];
    }
    op.apply(stage, k2);
    for i in 0..n {
        stage[i] = f[i] + 0.5 * h * k2[i];
    }
    op.apply(stage, k3);
    for i in 0..n {
        stage[i] = f[i] + h * k3[i];
    }
    op.apply(stage, k4);
    for i in 0..n {
        f[i] += h / 6.0 * (k1[i] + 2.0 * (k2[i] + k3[i]) + k4[i]);
    }
}

/// Classical RK4 for `df/dτ = A f`, reporting the state at each of `taus`
/// (nondecreasing, starting from 0). Steps are at most `dtau` after the
/// stability guard and are shortened to land on every requested time.
pub fn solve_at(
    op: &KineticOperator,
    f0: &[f64],
    taus: &[f64],
    dtau: f64,
) -> Result<KineticTrajectory, KineticError> {
    if f0.len() != op.len() {
        return Err(KineticError::LengthMismatch {
            expected: op.len(),
            got: f0.len(),
        });
    }
    if taus.iter().any(|t| !(t.is_finite() && *t >= 0.0)) || taus.windows(2).any(|w| w[1] < w[0]) {
        return Err(KineticError::InvalidHorizon);
    }
    let norm = op.row_sum_norm();
    let h_max = guarded_step(dtau, norm)?;
    let limit = 1e6 * sup(f0).max(f64::MIN_POSITIVE);
    let n = f0.len();
    let mut f = f0.to_vec();
    let mut k = [vec![0.0; n], vec![0.0; n], vec![0.0; n], vec![0.0; n]];
    let mut stage = vec![0.0; n];
    let mut tau = 0.0;
    let mut states = Vec::with_capacity(taus.len());
    for &target in taus {
        let span = target - tau;
        if span > 0.0 {
            let steps = (span / h_max - 1e-9).ceil().max(1.0) as usize;
            let h = span / steps as f64;
            for s in 1..=steps {
                rk4_step(op, &mut f, h, &mut k, &mut stage);
                if !(sup(&f) <= limit) {
                    return Err(KineticError::Blowup {
                        tau: tau + s as f64 * h,
                        norm: sup(&f),
                    });
                }
            }
        }
        tau = target;
        states.push(KineticState {
            tau,
            values: f.clone(),
        });
    }
    Ok(KineticTrajectory {
        states,
        dtau: h_max,
        operator_norm: norm,
    })
}

/// States at every step `0, dτ, 2dτ, …, horizon`.
pub fn solve(
    op: &KineticOperator,
    f0: &[f64],
    horizon: f64,
    dtau: f64,
) -> Result<KineticTrajectory, KineticError> {
    if !(horizon >= 0.0 && horizon.is_finite()) {
        return Err(KineticError::InvalidHorizon);
    }
    let h = guarded_step(dtau, op.row_sum_norm())?;
    let steps = (horizon / h - 1e-9).ceil().max(0.0) as usize;
    let taus: Vec<f64> = (0..=steps)
        .map(|s| (s as f64 * h).min(horizon))
        .collect();
    solve_at(op, f0, &taus, h)
}
