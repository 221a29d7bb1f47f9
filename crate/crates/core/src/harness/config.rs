use std::f64::consts::PI;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use super::HarnessError;
use crate::census::EtaValue;
use crate::dynamics::{Backend, IntegratorConfig};
use crate::freq::{DispersionParams, DomainSpec};
use crate::kinetic::{KernelConvention, KineticForm};
use crate::measures::{InitLaw, PerturbationProfile};

/// Which pipeline a config drives; controls time mapping and validation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    /// Ensemble and fluctuations only, `t_max = T/(πε²)`.
    Simulate,
    /// Stochastic kinetic limit, `t_max = T/(πε²)`, `λ = 3δ`.
    Theorem1,
    /// Deterministic action preservation, `δ = 0`, `t_max = T/ε²`.
    Theorem2,
    /// Moment check of the initial law at `t = 0`.
    SampleCheck,
    /// Kinetic solve only, `τ ∈ [0, T]`.
    Kinetic,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum InitKind {
    Invariant,
    #[default]
    Product,
    Mixture,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum FormKind {
    #[default]
    Lorentzian,
    Resonant,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    #[serde(rename = "N")]
    pub n: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhysicsSection {
    pub eta: EtaValue,
    pub eps: f64,
    pub delta: f64,
    pub alpha: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunSection {
    /// Rescaled horizon.
    #[serde(rename = "T")]
    pub horizon: f64,
    /// Physical horizon; overrides the mapping from `T` when set.
    pub t_max: Option<f64>,
    pub dt: f64,
    pub substeps: u32,
    pub ensemble: usize,
    pub seed: u64,
    pub coupled: bool,
    /// Subtract the zero-mean baseline term `(β/γ − 1)(|V^base(0)|² − γ)`;
    /// only used for coupled runs from the product law.
    pub control_variate: bool,
    pub init: InitKind,
    pub save_every: usize,
    pub backend: Option<Backend>,
    pub mass_tolerance: Option<f64>,
    /// Stop after the batch that crosses this wall-clock limit and keep the partial ensemble.
    pub wall_clock_limit_s: Option<f64>,
    /// Worker threads; `None` uses the global pool.
    pub workers: Option<usize>,
}

impl Default for RunSection {
    fn default() -> Self {
        RunSection {
            horizon: 0.5,
            t_max: None,
            dt: 0.05,
            substeps: 1,
            ensemble: 100_000,
            seed: 1,
            coupled: true,
            control_variate: true,
            init: InitKind::Product,
            save_every: 10,
            backend: None,
            mass_tolerance: Some(1e-6),
            wall_clock_limit_s: None,
            workers: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CoarseSection {
    pub h: f64,
    pub override_h_constraint: bool,
}

impl Default for CoarseSection {
    fn default() -> Self {
        CoarseSection { h: 0.25, override_h_constraint: false }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct KineticSection {
    pub mesh_dx: f64,
    pub dtau: f64,
    pub n_sigma: usize,
    pub form: FormKind,
    pub convention: KernelConvention,
    /// Also compare against the resonant-form solution.
    pub also_resonant: bool,
}

impl Default for KineticSection {
    fn default() -> Self {
        KineticSection {
            mesh_dx: 0.05,
            dtau: 0.01,
            n_sigma: 400,
            form: FormKind::Lorentzian,
            convention: KernelConvention::StationaryPairing,
            also_resonant: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputSection {
    pub dir: PathBuf,
    pub svg: bool,
}

impl Default for OutputSection {
    fn default() -> Self {
        OutputSection { dir: PathBuf::from("out"), svg: true }
    }
}

/// A complete experiment description. Defaults are the compliant desk-scale
/// stochastic-limit run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub domain: DomainSpec,
    pub grid: GridSection,
    pub physics: PhysicsSection,
    pub g0: PerturbationProfile,
    pub run: RunSection,
    pub coarse: CoarseSection,
    pub kinetic: KineticSection,
    pub output: OutputSection,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            domain: DomainSpec::default(),
            grid: GridSection { n: 16 },
            physics: PhysicsSection {
                eta: EtaValue::sqrt(2).expect("2 is not a square"),
                eps: 0.2,
                delta: 0.55,
                alpha: 1.0,
            },
            g0: PerturbationProfile::default(),
            run: RunSection::default(),
            coarse: CoarseSection::default(),
            kinetic: KineticSection::default(),
            output: OutputSection::default(),
        }
    }
}

/// Error-budget terms `ε/(hδ²)`, `1/(hδN)`, `δ/N^{2−α}` of the stochastic limit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BudgetTerms {
    pub eps_over_h_delta2: f64,
    pub inv_h_delta_n: f64,
    pub delta_over_n_pow: f64,
}

impl BudgetTerms {
    pub fn new(eps: f64, delta: f64, h: f64, n: u32, alpha: f64) -> Self {
        let nf = n as f64;
        BudgetTerms {
            eps_over_h_delta2: eps / (h * delta * delta),
            inv_h_delta_n: 1.0 / (h * delta * nf),
            delta_over_n_pow: delta / nf.powf(2.0 - alpha),
        }
    }
}

/// The resolved schedule of a run, printed by `--dry-run`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentPlan {
    pub kind: ExperimentKind,
    pub modes: usize,
    pub members: usize,
    pub t_max: f64,
    pub n_steps: usize,
    pub save_steps: Vec<usize>,
    pub save_times: Vec<f64>,
    /// Rescaled time `πε²t` of each save.
    pub taus: Vec<f64>,
    pub backend: Backend,
    pub lambda: Option<f64>,
    pub budget: Option<BudgetTerms>,
    pub warnings: Vec<String>,
}

fn invalid(msg: impl Into<String>) -> HarnessError {
    HarnessError::Validation(msg.into())
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self, HarnessError> {
        serde_json::from_str(text).map_err(|e| HarnessError::Parse(e.to_string()))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn dispersion(&self) -> Result<DispersionParams, HarnessError> {
        DispersionParams::new(self.physics.eta.to_f64()).map_err(|e| invalid(e.to_string()))
    }

    pub fn backend(&self) -> Backend {
        self.run.backend.unwrap_or_else(|| Backend::preferred(self.grid.n))
    }

    pub fn init_law(&self) -> InitLaw {
        match self.run.init {
            InitKind::Invariant => InitLaw::Invariant,
            InitKind::Product => InitLaw::ProductPerturbed {
                profile: self.g0.clone(),
                alpha: self.physics.alpha,
            },
            InitKind::Mixture => InitLaw::MixturePerturbed { profile: self.g0.clone() },
        }
    }

    /// Whether the control-variate correction is applied.
    pub fn uses_control_variate(&self) -> bool {
        self.run.control_variate && self.run.coupled && self.run.init == InitKind::Product
    }

    pub fn integrator_config(&self) -> IntegratorConfig {
        IntegratorConfig {
            dt: self.run.dt,
            substeps: self.run.substeps,
            eps: self.physics.eps,
            delta: self.physics.delta,
            backend: self.backend(),
            mass_tolerance: self.run.mass_tolerance,
        }
    }

    pub fn kinetic_form(&self) -> KineticForm {
        match self.kinetic.form {
            FormKind::Lorentzian => KineticForm::Lorentzian { lambda: 3.0 * self.physics.delta },
            FormKind::Resonant => KineticForm::Resonant,
        }
    }

    fn physical_horizon(&self, kind: ExperimentKind) -> Result<f64, HarnessError> {
        if let Some(t) = self.run.t_max {
            return Ok(t);
        }
        let eps = self.physics.eps;
        match kind {
            ExperimentKind::SampleCheck | ExperimentKind::Kinetic => Ok(0.0),
            _ if eps == 0.0 => Err(invalid("eps = 0 needs an explicit run.t_max")),
            ExperimentKind::Theorem2 => Ok(self.run.horizon / (eps * eps)),
            _ => Ok(self.run.horizon / (PI * eps * eps)),
        }
    }

    /// Checks every invariant for `kind` and resolves the schedule.
    pub fn plan(&self, kind: ExperimentKind) -> Result<ExperimentPlan, HarnessError> {
        let mut warnings = Vec::new();
        self.domain.require_interacting().map_err(|e| invalid(e.to_string()))?;
        self.g0.validate().map_err(|e| invalid(e.to_string()))?;
        let n = self.grid.n;
        if n == 0 {
            return Err(invalid("grid.N must be at least 1"));
        }
        self.dispersion()?;
        let p = &self.physics;
        if !(p.eps >= 0.0 && p.eps.is_finite()) {
            return Err(invalid(format!("physics.eps must be >= 0, got {}", p.eps)));
        }
        if !(p.delta >= 0.0 && p.delta.is_finite()) {
            return Err(invalid(format!("physics.delta must be >= 0, got {}", p.delta)));
        }
        if !(1.0..=2.0).contains(&p.alpha) {
            return Err(invalid(format!("physics.alpha must lie in [1, 2], got {}", p.alpha)));
        }
        let h = self.coarse.h;
        let spacing = 1.0 / n as f64;
        if !(h.is_finite() && h >= spacing * (1.0 - 1e-9)) {
            return Err(invalid(format!("coarse.h = {h} violates h >= 1/N = {spacing}")));
        }
        let r = &self.run;
        if !(r.horizon > 0.0 && r.horizon.is_finite()) {
            return Err(invalid(format!("run.T must be positive, got {}", r.horizon)));
        }
        if let Some(t) = r.t_max {
            if !(t >= 0.0 && t.is_finite()) {
                return Err(invalid(format!("run.t_max must be >= 0, got {t}")));
            }
        }
        if r.ensemble == 0 {
            return Err(invalid("run.ensemble must be at least 1"));
        }
        if r.save_every == 0 {
            return Err(invalid("run.save_every must be at least 1"));
        }
        if r.workers == Some(0) {
            return Err(invalid("run.workers must be at least 1"));
        }
        self.integrator_config().validate().map_err(|e| invalid(e.to_string()))?;
        let k = &self.kinetic;
        if !(k.mesh_dx > 0.0 && k.mesh_dx.is_finite()) {
            return Err(invalid(format!("kinetic.mesh_dx must be positive, got {}", k.mesh_dx)));
        }
        if !(k.dtau > 0.0 && k.dtau.is_finite()) {
            return Err(invalid(format!("kinetic.dtau must be positive, got {}", k.dtau)));
        }
        if k.n_sigma == 0 {
            return Err(invalid("kinetic.n_sigma must be at least 1"));
        }

        let mut lambda = None;
        let mut budget = None;
        match kind {
            ExperimentKind::Theorem1 => {
                if p.delta <= 0.0 {
                    return Err(invalid("the stochastic-limit comparison needs physics.delta > 0"));
                }
                if h > p.delta * p.delta {
                    let msg = format!("coarse.h = {h} violates h <= delta^2 = {}", p.delta * p.delta);
                    if !self.coarse.override_h_constraint {
                        return Err(invalid(msg));
                    }
                    warnings.push(format!("{msg} (overridden)"));
                }
                lambda = Some(3.0 * p.delta);
                budget = Some(BudgetTerms::new(p.eps, p.delta, h, n, p.alpha));
            }
            ExperimentKind::Theorem2 => {
                if p.delta != 0.0 {
                    return Err(invalid("the flatness experiment needs physics.delta = 0"));
                }
                if !p.eta.is_irrational() {
                    warnings.push(format!("eta = {} is not irrational", p.eta));
                }
            }
            ExperimentKind::Kinetic => {
                if self.kinetic.form == FormKind::Lorentzian {
                    if p.delta <= 0.0 {
                        return Err(invalid("the Lorentzian form needs physics.delta > 0 (lambda = 3 delta)"));
                    }
                    lambda = Some(3.0 * p.delta);
                }
            }
            ExperimentKind::Simulate | ExperimentKind::SampleCheck => {}
        }
        if !r.coupled {
            let threshold = 100.0 * (n as f64).powf(2.0 * p.alpha);
            if (r.ensemble as f64) < threshold {
                warnings.push(format!(
                    "uncoupled ensemble of {} members is below 100 N^(2 alpha) = {threshold}",
                    r.ensemble
                ));
            }
        }
        if r.control_variate && r.coupled && r.init != InitKind::Product {
            warnings.push("control variate applies only to the product law; disabled".into());
        }

        let t_max = self.physical_horizon(kind)?;
        let (n_steps, save_steps) = if kind == ExperimentKind::Kinetic {
            (0, Vec::new())
        } else {
            let n_steps = (t_max / r.dt).round() as usize;
            let mut s: Vec<usize> = (0..=n_steps).step_by(r.save_every).collect();
            if s.last() != Some(&n_steps) {
                s.push(n_steps);
            }
            (n_steps, s)
        };
        let save_times: Vec<f64> = save_steps.iter().map(|&s| s as f64 * r.dt).collect();
        let taus = if kind == ExperimentKind::Kinetic {
            let steps = (r.horizon / 0.05).ceil().max(1.0) as usize;
            (0..=steps).map(|i| r.horizon * i as f64 / steps as f64).collect()
        } else {
            save_times.iter().map(|t| PI * p.eps * p.eps * t).collect()
        };
        let grid = crate::freq::FrequencyGrid::build(self.domain, self.dispersion()?, n)
            .map_err(|e| invalid(e.to_string()))?;
        if grid.is_empty() {
            return Err(invalid("the grid D_N+ is empty"));
        }
        Ok(ExperimentPlan {
            kind,
            modes: grid.len(),
            members: r.ensemble,
            t_max: n_steps as f64 * r.dt,
            n_steps,
            save_steps,
            save_times,
            taus,
            backend: self.backend(),
            lambda,
            budget,
            warnings,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_sectioned_json() {
        let text = r#"{
            "domain": {"a": 0.5, "b": 2, "c": 1.5, "w": 0.15},
            "grid": {"N": 8},
            "physics": {"eta": "sqrt2", "eps": 0.01, "delta": 0, "alpha": 1},
            "g0": {"kind": "gaussian_bump", "amplitude": 1, "center": [1.2, 0], "width": 0.25},
            "run": {"T": 0.3, "dt": 0.05, "ensemble": 20000, "seed": 7, "coupled": true, "save_every": 6000},
            "coarse": {"h": 0.25, "override_h_constraint": false},
            "kinetic": {"mesh_dx": 0.05, "dtau": 0.01, "n_sigma": 400, "form": "resonant"}
        }"#;
        let c = ExperimentConfig::from_json(text).unwrap();
        assert_eq!(c.grid.n, 8);
        assert_eq!(c.physics.eta, EtaValue::sqrt(2).unwrap());
        let plan = c.plan(ExperimentKind::Theorem2).unwrap();
        assert_eq!(plan.n_steps, 60_000);
        assert_eq!(plan.save_steps, (0..=10).map(|i| i * 6000).collect::<Vec<_>>());
        assert!((plan.t_max - 3000.0).abs() < 1e-9);
        assert!((plan.taus[10] - PI * 0.3).abs() < 1e-12);
        assert_eq!(plan.backend, Backend::Direct);
        let back = ExperimentConfig::from_json(&c.to_json()).unwrap();
        assert_eq!(back, c);
    }

    #[test]
    fn default_is_compliant_theorem1_run() {
        let c = ExperimentConfig::default();
        let plan = c.plan(ExperimentKind::Theorem1).unwrap();
        assert_eq!(plan.lambda, Some(3.0 * 0.55));
        assert!(plan.warnings.is_empty(), "{:?}", plan.warnings);
        assert_eq!(plan.n_steps, 80);
        assert_eq!(*plan.save_steps.last().unwrap(), 80);
        let b = plan.budget.unwrap();
        assert!((b.eps_over_h_delta2 - 0.2 / (0.25 * 0.3025)).abs() < 1e-12);
        assert!((b.inv_h_delta_n - 1.0 / (0.25 * 0.55 * 16.0)).abs() < 1e-12);
        assert!((b.delta_over_n_pow - 0.55 / 16.0).abs() < 1e-12);
    }

    #[test]
    fn violations_name_the_invariant() {
        let mut c = ExperimentConfig::default();
        c.coarse.h = 0.05;
        let e = c.plan(ExperimentKind::Simulate).unwrap_err().to_string();
        assert!(e.contains("h >= 1/N"), "{e}");

        let mut c = ExperimentConfig::default();
        c.physics.delta = 0.3;
        let e = c.plan(ExperimentKind::Theorem1).unwrap_err().to_string();
        assert!(e.contains("h <= delta^2"), "{e}");
        c.coarse.override_h_constraint = true;
        let plan = c.plan(ExperimentKind::Theorem1).unwrap();
        assert!(plan.warnings[0].contains("overridden"));

        let mut c = ExperimentConfig::default();
        c.physics.alpha = 2.5;
        assert!(c.plan(ExperimentKind::Simulate).unwrap_err().to_string().contains("alpha"));

        let c = ExperimentConfig::default();
        assert!(c.plan(ExperimentKind::Theorem2).unwrap_err().to_string().contains("delta = 0"));

        let mut c = ExperimentConfig::default();
        c.physics.eps = 0.0;
        assert!(c.plan(ExperimentKind::Simulate).is_err());
        c.run.t_max = Some(1.0);
        assert_eq!(c.plan(ExperimentKind::Simulate).unwrap().n_steps, 20);

        assert!(matches!(
            ExperimentConfig::from_json(r#"{"grid": {"N": 8, "typo": 1}}"#),
            Err(HarnessError::Parse(_))
        ));
    }

    #[test]
    fn uncoupled_small_ensemble_warns() {
        let mut c = ExperimentConfig::default();
        c.run.coupled = false;
        c.run.ensemble = 1000;
        let plan = c.plan(ExperimentKind::Simulate).unwrap();
        assert!(plan.warnings.iter().any(|w| w.contains("100 N^(2 alpha)")));
    }
}
