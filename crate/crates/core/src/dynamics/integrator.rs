use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::nonlinear::{Backend, Nonlinear, Workspace};
use super::{DynamicsError, ModeField};
use crate::freq::FrequencyGrid;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntegratorConfig {
    pub dt: f64,
    /// RK4 steps per nonlinear stage of one macro step.
    pub substeps: u32,
    pub eps: f64,
    pub delta: f64,
    pub backend: Backend,
    /// Abort when `|M(t)/M(0) − 1|` exceeds this.
    pub mass_tolerance: Option<f64>,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        IntegratorConfig {
            dt: 0.05,
            substeps: 1,
            eps: 0.1,
            delta: 0.0,
            backend: Backend::Direct,
            mass_tolerance: Some(1e-6),
        }
    }
}

impl IntegratorConfig {
    pub fn validate(&self) -> Result<(), DynamicsError> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(DynamicsError::InvalidConfig(format!("dt must be positive, got {}", self.dt)));
        }
        if self.substeps == 0 {
            return Err(DynamicsError::InvalidConfig("substeps must be at least 1".into()));
        }
        if !(self.eps >= 0.0 && self.eps.is_finite()) {
            return Err(DynamicsError::InvalidConfig(format!("eps must be >= 0, got {}", self.eps)));
        }
        if !(self.delta >= 0.0 && self.delta.is_finite()) {
            return Err(DynamicsError::InvalidConfig(format!(
                "delta must be >= 0, got {}",
                self.delta
            )));
        }
        Ok(())
    }
}

/// `V_n ← exp(i ω_n dt_sub + i √(2δ) ΔW_n) V_n`, the exact linear-plus-noise flow.
pub fn phase_step(
    values: &mut [Complex64],
    omega: &[f64],
    dt_sub: f64,
    increments: Option<&[f64]>,
    delta: f64,
) {
    let amp = (2.0 * delta).sqrt();
    for (s, v) in values.iter_mut().enumerate() {
        let mut theta = omega[s] * dt_sub;
        if let Some(dw) = increments {
            theta += amp * dw[s];
        }
        *v *= Complex64::cis(theta);
    }
}

/// Scratch buffers for one member's time stepping.
#[derive(Debug, Default, Clone)]
pub struct StepWorkspace {
    k: [Vec<Complex64>; 4],
    stage: Vec<Complex64>,
    nl: Workspace,
}

/// Strang-split integrator for one ensemble member.
///
/// Each macro step applies the exact phase/noise flow over `dt/2`, RK4 on
/// the quadratic interaction over `dt`, then the phase/noise flow over `dt/2`
/// with fresh increments `ΔW ~ N(0, dt/2)`.
#[derive(Debug)]
pub struct Integrator {
    config: IntegratorConfig,
    half_phase: Vec<Complex64>,
    kx: Vec<f64>,
    nonlinear: Nonlinear,
}

impl Integrator {
    pub fn new(grid: &FrequencyGrid, config: IntegratorConfig) -> Result<Self, DynamicsError> {
        config.validate()?;
        if grid.is_empty() {
            return Err(DynamicsError::EmptyGrid);
        }
        let half = config.dt / 2.0;
        Ok(Integrator {
            config,
            half_phase: grid
                .modes()
                .iter()
                .map(|m| Complex64::cis(m.omega * half))
                .collect(),
            kx: grid.modes().iter().map(|m| m.k.x).collect(),
            nonlinear: Nonlinear::new(grid, config.eps, config.backend),
        })
    }

    pub fn config(&self) -> &IntegratorConfig {
        &self.config
    }

    pub fn nonlinear(&self) -> &Nonlinear {
        &self.nonlinear
    }

    pub fn mass(&self, values: &[Complex64]) -> f64 {
        values.iter().zip(&self.kx).map(|(v, k)| k * v.norm_sqr()).sum()
    }

    fn half_phase<R: Rng + ?Sized>(&self, values: &mut [Complex64], noise: &mut R) {
        if self.config.delta > 0.0 {
            let sd = (self.config.dt / 2.0).sqrt() * (2.0 * self.config.delta).sqrt();
            for (v, p) in values.iter_mut().zip(&self.half_phase) {
                let dw: f64 = noise.sample(StandardNormal);
                *v *= p * Complex64::cis(sd * dw);
            }
        } else {
            for (v, p) in values.iter_mut().zip(&self.half_phase) {
                *v *= p;
            }
        }
    }

    fn rk4(&self, values: &mut [Complex64], h: f64, ws: &mut StepWorkspace) {
        let m = values.len();
        for k in ws.k.iter_mut() {
            k.resize(m, Complex64::new(0.0, 0.0));
        }
        ws.stage.resize(m, Complex64::new(0.0, 0.0));
        let [k1, k2, k3, k4] = &mut ws.k;
        self.nonlinear.rhs_into(values, k1, &mut ws.nl);
        for s in 0..m {
            ws.stage[s] = values[s] + k1[s] * (h / 2.0);
        }
        self.nonlinear.rhs_into(&ws.stage, k2, &mut ws.nl);
        for s in 0..m {
            ws.stage[s] = values[s] + k2[s] * (h / 2.0);
        }
        self.nonlinear.rhs_into(&ws.stage, k3, &mut ws.nl);
        for s in 0..m {
            ws.stage[s] = values[s] + k3[s] * h;
        }
        self.nonlinear.rhs_into(&ws.stage, k4, &mut ws.nl);
        for s in 0..m {
            values[s] += (k1[s] + (k2[s] + k3[s]) * 2.0 + k4[s]) * (h / 6.0);
        }
    }

    /// One macro step of length `dt`.
    pub fn step<R: Rng + ?Sized>(&self, values: &mut [Complex64], noise: &mut R, ws: &mut StepWorkspace) {
        self.half_phase(values, noise);
        if self.config.eps > 0.0 {
            let h = self.config.dt / self.config.substeps as f64;
            for _ in 0..self.config.substeps {
                self.rk4(values, h, ws);
            }
        }
        self.half_phase(values, noise);
    }

    /// Advances `field` by `n_steps` macro steps, calling `on_save` after every
    /// `save_every`-th step (and once before the first step).
    pub fn run<R, F>(
        &self,
        field: &mut ModeField,
        noise: &mut R,
        n_steps: usize,
        save_every: usize,
        mut on_save: F,
    ) -> Result<(), DynamicsError>
    where
        R: Rng + ?Sized,
        F: FnMut(usize, &ModeField),
    {
        if field.len() != self.kx.len() {
            return Err(DynamicsError::LengthMismatch {
                expected: self.kx.len(),
                got: field.len(),
            });
        }
        let save_every = save_every.max(1);
        let mass0 = self.mass(&field.values);
        let t0 = field.t;
        let mut ws = StepWorkspace::default();
        on_save(0, field);
        for step in 1..=n_steps {
            self.step(&mut field.values, noise, &mut ws);
            field.t = t0 + step as f64 * self.config.dt;
            if step % save_every == 0 || step == n_steps {
                if !field.is_finite() {
                    return Err(DynamicsError::NonFinite { step, t: field.t });
                }
                if let Some(tol) = self.config.mass_tolerance {
                    let drift = if mass0 > 0.0 {
                        (self.mass(&field.values) / mass0 - 1.0).abs()
                    } else {
                        0.0
                    };
                    if drift > tol {
                        return Err(DynamicsError::MassDrift {
                            step,
                            t: field.t,
                            drift,
                        });
                    }
                }
            }
            if step % save_every == 0 {
                on_save(step / save_every, field);
            }
        }
        Ok(())
    }

    /// Integrates from `field0` and returns snapshots at `save_times`, each of
    /// which must be a whole number of macro steps.
    pub fn integrate_member<R: Rng + ?Sized>(
        &self,
        field0: &ModeField,
        noise: &mut R,
        save_times: &[f64],
    ) -> Result<Vec<ModeField>, DynamicsError> {
        let dt = self.config.dt;
        let mut steps = Vec::with_capacity(save_times.len());
        for &t in save_times {
            let n = ((t - field0.t) / dt).round();
            if n < 0.0 || ((field0.t + n * dt) - t).abs() > 1e-9 * dt.max(t.abs()) {
                return Err(DynamicsError::SaveTimeOffGrid(t));
            }
            steps.push(n as usize);
        }
        if steps.windows(2).any(|w| w[1] < w[0]) {
            return Err(DynamicsError::InvalidConfig("save times must be nondecreasing".into()));
        }
        let mut field = field0.clone();
        let mut snaps = Vec::with_capacity(steps.len());
        let mut done = 0;
        let mut next = 0;
        let total = steps.last().copied().unwrap_or(0);
        while next < steps.len() && steps[next] == 0 {
            snaps.push(field.clone());
            next += 1;
        }
        while done < total {
            let chunk = steps[next] - done;
            self.run(&mut field, noise, chunk, chunk, |_, _| {})?;
            done += chunk;
            while next < steps.len() && steps[next] == done {
                snaps.push(field.clone());
                next += 1;
            }
        }
        Ok(snaps)
    }
}
