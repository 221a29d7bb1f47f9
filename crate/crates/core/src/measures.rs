//! Initial laws: the invariant Gaussian measure and its two perturbations.

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dynamics::ModeField;
use crate::freq::{psi_plus, DomainSpec, FrequencyGrid, Wavevector};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MeasureError {
    #[error("cannot sample on an empty grid")]
    EmptyGrid,
    #[error("perturbation exponent alpha must lie in [1, 2], got {0}")]
    InvalidAlpha(f64),
    #[error("perturbed variance {beta} at mode {k} is not positive")]
    NonPositiveVariance { k: Wavevector, beta: f64 },
    #[error("chi-square factor diverges at mode {k}: |g0| N^-alpha = {ratio} >= gamma = {gamma}")]
    DivergentChiSquare { k: Wavevector, ratio: f64, gamma: f64 },
    #[error("invalid perturbation profile: {0}")]
    InvalidProfile(String),
}

/// The perturbation `g₀` applied to the Rayleigh-Jeans variances.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PerturbationProfile {
    Zero,
    /// `A exp(−|k − center|²/(2 s²)) ψ⁺(k)`, extended evenly to `D⁻`.
    GaussianBump {
        amplitude: f64,
        center: Wavevector,
        width: f64,
    },
}

impl Default for PerturbationProfile {
    fn default() -> Self {
        PerturbationProfile::GaussianBump {
            amplitude: 1.0,
            center: Wavevector::new(1.2, 0.0),
            width: 0.25,
        }
    }
}

impl PerturbationProfile {
    pub fn validate(&self) -> Result<(), MeasureError> {
        match *self {
            PerturbationProfile::Zero => Ok(()),
            PerturbationProfile::GaussianBump {
                amplitude,
                center,
                width,
            } => {
                if !(amplitude.is_finite() && center.x.is_finite() && center.y.is_finite()) {
                    return Err(MeasureError::InvalidProfile("non-finite parameter".into()));
                }
                if !(width > 0.0 && width.is_finite()) {
                    return Err(MeasureError::InvalidProfile(format!(
                        "bump width must be positive, got {width}"
                    )));
                }
                Ok(())
            }
        }
    }

    pub fn eval(&self, k: Wavevector, spec: &DomainSpec) -> f64 {
        let k = if k.x < 0.0 { -k } else { k };
        match *self {
            PerturbationProfile::Zero => 0.0,
            PerturbationProfile::GaussianBump {
                amplitude,
                center,
                width,
            } => {
                let d = k - center;
                amplitude * (-d.dot(d) / (2.0 * width * width)).exp() * psi_plus(k, spec)
            }
        }
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, PerturbationProfile::Zero)
            || matches!(self, PerturbationProfile::GaussianBump { amplitude, .. } if *amplitude == 0.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum InitLaw {
    Invariant,
    /// Independent modes with variances `γ_k + g₀(k) N^{−α}`.
    ProductPerturbed {
        profile: PerturbationProfile,
        alpha: f64,
    },
    /// One uniformly chosen mode `j` gets variance `γ_j + (card D_N⁺/N²) g₀(j)`.
    MixturePerturbed { profile: PerturbationProfile },
}

impl InitLaw {
    /// Mean action `E|V_k|²` of this law at every mode.
    pub fn target_variances(&self, grid: &FrequencyGrid) -> Vec<f64> {
        let nf = grid.refinement() as f64;
        grid.modes()
            .iter()
            .map(|m| match self {
                InitLaw::Invariant => m.gamma,
                InitLaw::ProductPerturbed { profile, alpha } => {
                    m.gamma + profile.eval(m.k, grid.spec()) * nf.powf(-alpha)
                }
                InitLaw::MixturePerturbed { profile } => {
                    m.gamma + profile.eval(m.k, grid.spec()) / (nf * nf)
                }
            })
            .collect()
    }
}

/// Precomputed per-mode scales for repeated draws from one law.
///
/// A draw takes two standard normals per mode, `(P_k, Q_k) = s_k (ξ, ζ)`. The
/// coupled baseline reuses the same normals with the invariant scale
/// `√(γ_k/2)`, so the pair differs only through the initial law.
#[derive(Debug, Clone)]
pub struct InitSampler {
    base_scale: Vec<f64>,
    pert_scale: Vec<f64>,
    mixture: bool,
}

impl InitSampler {
    pub fn new(grid: &FrequencyGrid, law: &InitLaw) -> Result<Self, MeasureError> {
        if grid.is_empty() {
            return Err(MeasureError::EmptyGrid);
        }
        let base_scale: Vec<f64> = grid.modes().iter().map(|m| (m.gamma / 2.0).sqrt()).collect();
        let nf = grid.refinement() as f64;
        let (betas, mixture): (Vec<f64>, bool) = match law {
            InitLaw::Invariant => (grid.gammas(), false),
            InitLaw::ProductPerturbed { profile, alpha } => {
                if !(1.0..=2.0).contains(alpha) {
                    return Err(MeasureError::InvalidAlpha(*alpha));
                }
                profile.validate()?;
                (law.target_variances(grid), false)
            }
            InitLaw::MixturePerturbed { profile } => {
                profile.validate()?;
                let weight = grid.len() as f64 / (nf * nf);
                let b = grid
                    .modes()
                    .iter()
                    .map(|m| m.gamma + weight * profile.eval(m.k, grid.spec()))
                    .collect();
                (b, true)
            }
        };
        for (m, &beta) in grid.modes().iter().zip(&betas) {
            if !(beta > 0.0) {
                return Err(MeasureError::NonPositiveVariance { k: m.k, beta });
            }
        }
        let pert_scale = betas.iter().map(|b| (b / 2.0).sqrt()).collect();
        Ok(InitSampler {
            base_scale,
            pert_scale,
            mixture,
        })
    }

    pub fn len(&self) -> usize {
        self.base_scale.len()
    }

    pub fn is_empty(&self) -> bool {
        self.base_scale.is_empty()
    }

    /// Draws one member; the second field is the coupled invariant baseline
    /// when `coupled` is set.
    pub fn sample<R: Rng + ?Sized>(
        &self,
        rng: &mut R,
        coupled: bool,
    ) -> (ModeField, Option<ModeField>) {
        let m = self.len();
        let chosen = if self.mixture {
            Some(rng.random_range(0..m))
        } else {
            None
        };
        let mut pert = Vec::with_capacity(m);
        let mut base = if coupled { Vec::with_capacity(m) } else { Vec::new() };
        for s in 0..m {
            let xi: f64 = rng.sample(StandardNormal);
            let zeta: f64 = rng.sample(StandardNormal);
            let scale = match chosen {
                Some(j) if j != s => self.base_scale[s],
                _ => self.pert_scale[s],
            };
            pert.push(Complex64::new(scale * xi, scale * zeta));
            if coupled {
                let b = self.base_scale[s];
                base.push(Complex64::new(b * xi, b * zeta));
            }
        }
        (
            ModeField::from_values(pert),
            coupled.then(|| ModeField::from_values(base)),
        )
    }
}

pub fn sample_invariant<R: Rng + ?Sized>(
    grid: &FrequencyGrid,
    rng: &mut R,
) -> Result<ModeField, MeasureError> {
    Ok(InitSampler::new(grid, &InitLaw::Invariant)?.sample(rng, false).0)
}

pub fn sample_perturbed_product<R: Rng + ?Sized>(
    grid: &FrequencyGrid,
    profile: &PerturbationProfile,
    alpha: f64,
    rng: &mut R,
    coupled: bool,
) -> Result<(ModeField, Option<ModeField>), MeasureError> {
    let law = InitLaw::ProductPerturbed {
        profile: profile.clone(),
        alpha,
    };
    Ok(InitSampler::new(grid, &law)?.sample(rng, coupled))
}

pub fn sample_perturbed_mixture<R: Rng + ?Sized>(
    grid: &FrequencyGrid,
    profile: &PerturbationProfile,
    rng: &mut R,
) -> Result<ModeField, MeasureError> {
    let law = InitLaw::MixturePerturbed {
        profile: profile.clone(),
    };
    Ok(InitSampler::new(grid, &law)?.sample(rng, false).0)
}

/// `Π_k γ_k²/(γ_k² − g_k²) − 1` for per-mode `(γ_k, g_k)` pairs, in log space.
pub fn chi_square_from_pairs(
    pairs: impl IntoIterator<Item = (Wavevector, f64, f64)>,
) -> Result<f64, MeasureError> {
    let mut log_sum = 0.0;
    for (k, gamma, g) in pairs {
        let r = g / gamma;
        if r.abs() >= 1.0 {
            return Err(MeasureError::DivergentChiSquare {
                k,
                ratio: g.abs(),
                gamma,
            });
        }
        log_sum -= (-r * r).ln_1p();
    }
    Ok(log_sum.exp_m1())
}

/// χ² distance between the product-perturbed law and the invariant measure.
pub fn chi_square_product(
    grid: &FrequencyGrid,
    profile: &PerturbationProfile,
    alpha: f64,
) -> Result<f64, MeasureError> {
    let scale = (grid.refinement() as f64).powf(-alpha);
    chi_square_from_pairs(
        grid.modes()
            .iter()
            .map(|m| (m.k, m.gamma, profile.eval(m.k, grid.spec()) * scale)),
    )
}
