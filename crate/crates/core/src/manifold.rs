//! Quasi-resonant sets `Γ(z, m) = {p : Ω(m, p) = z}` of the KP three-wave
//! mismatch `Ω(m, p) = ω_m − ω_{m−p} − ω_p`, their explicit two-branch
//! parametrisation by `σ = p_x`, and quadrature against the microcanonical
//! measure.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::freq::{DispersionParams, DomainSpec, Wavevector};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ManifoldError {
    #[error("base point m = {0} has |m_x| outside (a, b)")]
    OutsideDomain(Wavevector),
    #[error("level |z| = {z} must be below z0 = {z0}")]
    LevelTooLarge { z: f64, z0: f64 },
    #[error("square-root argument {arg} is not positive at sigma = {sigma}")]
    NegativeRoot { sigma: f64, arg: f64 },
    #[error("mismatch gradient vanishes at p = {0}")]
    DegenerateGradient(Wavevector),
    #[error("mismatch has a pole: m = {m}, p = {p}")]
    Pole { m: Wavevector, p: Wavevector },
}

/// Which of the two curve branches `κ^±`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Branch {
    Plus,
    Minus,
}

impl Branch {
    pub const BOTH: [Branch; 2] = [Branch::Plus, Branch::Minus];

    fn sign(self) -> f64 {
        match self {
            Branch::Plus => 1.0,
            Branch::Minus => -1.0,
        }
    }
}

/// Density used to turn `dσ` into the microcanonical measure.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum WeightRule {
    /// `√(1 + (∂_σκ_y)²)/‖∇_pΩ‖ = 1/|∂_{p_y}Ω|`: arc length over gradient
    /// norm, the density for which `∫ w φ dσ = lim_{λ→0} (1/π)∫ λ/(Ω²+λ²) φ dp`.
    #[default]
    CoArea,
    /// `|∂_σκ_y|/‖∇_pΩ‖`, which drops the unit horizontal component of the
    /// tangent. Kept for comparison; it vanishes at the parabola vertex.
    SlopeOverGradient,
}

/// `z₀ = (3/16) a⁴`, the largest admissible level.
pub fn level_bound(spec: &DomainSpec) -> f64 {
    3.0 / 16.0 * spec.a.powi(4)
}

/// `Ω(m, p) = ω_m − ω_{m−p} − ω_p`.
pub fn big_omega(m: Wavevector, p: Wavevector, params: &DispersionParams) -> Result<f64, ManifoldError> {
    let j = m - p;
    if m.x == 0.0 || p.x == 0.0 || j.x == 0.0 {
        return Err(ManifoldError::Pole { m, p });
    }
    Ok(params.omega(m) - params.omega(j) - params.omega(p))
}

/// `∇_pΩ(m, p) = ∇ω(m − p) − ∇ω(p)`.
pub fn big_omega_grad(
    m: Wavevector,
    p: Wavevector,
    params: &DispersionParams,
) -> Result<(f64, f64), ManifoldError> {
    let pole = || ManifoldError::Pole { m, p };
    let (_, jx, jy) = params.omega_and_grad(m - p).map_err(|_| pole())?;
    let (_, px, py) = params.omega_and_grad(p).map_err(|_| pole())?;
    if m.x == 0.0 {
        return Err(pole());
    }
    Ok((jx - px, jy - py))
}

/// Pieces of `I_m = (−∞, −a/2) ∪ (a/2, m_x − a/2) ∪ (m_x + a/2, ∞)` clipped
/// to `(−b, b)`. Empty pieces are dropped.
pub fn sigma_interval(m: Wavevector, spec: &DomainSpec) -> Result<Vec<(f64, f64)>, ManifoldError> {
    if !(spec.a < m.x && m.x < spec.b) {
        return Err(ManifoldError::OutsideDomain(m));
    }
    let (a, b) = (spec.a, spec.b);
    Ok([(-b, -a / 2.0), (a / 2.0, m.x - a / 2.0), (m.x + a / 2.0, b)]
        .into_iter()
        .filter(|(lo, hi)| lo < hi)
        .collect())
}

/// One point of `Γ(z, m)` with everything needed for quadrature.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurvePoint {
    pub p: Wavevector,
    /// `j = m − p`.
    pub j: Wavevector,
    /// `∂_σ κ_y`.
    pub slope: f64,
    pub grad: (f64, f64),
    /// Microcanonical density with respect to `dσ`.
    pub weight: f64,
}

impl CurvePoint {
    pub fn grad_norm(&self) -> f64 {
        self.grad.0.hypot(self.grad.1)
    }
}

/// `κ^±(σ, z, m)` and its microcanonical density, for `m_x > 0`.
pub fn curve_point_and_weight(
    sigma: f64,
    z: f64,
    m: Wavevector,
    branch: Branch,
    params: &DispersionParams,
    rule: WeightRule,
) -> Result<CurvePoint, ManifoldError> {
    let u = (m.x - sigma) * sigma;
    let arg = 1.0 - z / (3.0 * m.x * u);
    if !(arg > 0.0) || u == 0.0 {
        return Err(ManifoldError::NegativeRoot { sigma, arg });
    }
    let root = arg.sqrt();
    let c = (3.0 / params.eta).sqrt() * branch.sign();
    let py = sigma * m.y / m.x + c * u * root;
    let du = m.x - 2.0 * sigma;
    let slope = m.y / m.x + c * du * (root + z / (6.0 * m.x * u * root));
    let p = Wavevector::new(sigma, py);
    let grad = big_omega_grad(m, p, params)?;
    let norm = grad.0.hypot(grad.1);
    if norm == 0.0 {
        return Err(ManifoldError::DegenerateGradient(p));
    }
    let weight = match rule {
        WeightRule::CoArea => (1.0 + slope * slope).sqrt() / norm,
        WeightRule::SlopeOverGradient => slope.abs() / norm,
    };
    Ok(CurvePoint {
        p,
        j: m - p,
        slope,
        grad,
        weight,
    })
}

/// One quadrature node on `Γ(z, m)`; `weight` already includes `dσ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurveNode {
    pub sigma: f64,
    pub branch: Branch,
    pub p: Wavevector,
    pub j: Wavevector,
    pub weight: f64,
}

/// Composite-midpoint nodes of `Γ(z, m)` over every piece of `I_m` and both
/// branches.
#[derive(Debug, Clone)]
pub struct CurveQuadrature {
    pub m: Wavevector,
    pub z: f64,
    pub nodes: Vec<CurveNode>,
}

impl CurveQuadrature {
    /// Builds the quadrature for any `m ∈ D`. Points of `D⁻` use
    /// `p ∈ Γ(z, m) ⇔ −p ∈ Γ(−z, −m)`.
    pub fn new(
        m: Wavevector,
        z: f64,
        n_sigma: usize,
        params: &DispersionParams,
        spec: &DomainSpec,
        rule: WeightRule,
    ) -> Result<Self, ManifoldError> {
        let z0 = level_bound(spec);
        if z.abs() >= z0 {
            return Err(ManifoldError::LevelTooLarge { z: z.abs(), z0 });
        }
        let flip = m.x < 0.0;
        let (mm, zz) = if flip { (-m, -z) } else { (m, z) };
        let pieces = sigma_interval(mm, spec).map_err(|_| ManifoldError::OutsideDomain(m))?;
        let mut nodes = Vec::with_capacity(pieces.len() * 2 * n_sigma);
        for (lo, hi) in pieces {
            let h = (hi - lo) / n_sigma as f64;
            for branch in Branch::BOTH {
                for i in 0..n_sigma {
                    let sigma = lo + (i as f64 + 0.5) * h;
                    let pt = curve_point_and_weight(sigma, zz, mm, branch, params, rule)?;
                    let (p, j) = if flip { (-pt.p, -pt.j) } else { (pt.p, pt.j) };
                    nodes.push(CurveNode {
                        sigma,
                        branch,
                        p,
                        j,
                        weight: pt.weight * h,
                    });
                }
            }
        }
        Ok(CurveQuadrature { m, z, nodes })
    }

    /// `Σ_nodes w φ(m, j, p)`.
    pub fn integrate<F>(&self, mut f: F) -> f64
    where
        F: FnMut(Wavevector, Wavevector, Wavevector) -> f64,
    {
        self.nodes
            .iter()
            .map(|n| n.weight * f(self.m, n.j, n.p))
            .sum()
    }
}

/// `Φ(z, m) = ∫_{Γ(z,m)} φ(m, m−p, p) dΣ(p)` with `n_sigma` nodes per piece.
pub fn integrate_curve<F>(
    f: F,
    m: Wavevector,
    z: f64,
    n_sigma: usize,
    params: &DispersionParams,
    spec: &DomainSpec,
) -> Result<f64, ManifoldError>
where
    F: FnMut(Wavevector, Wavevector, Wavevector) -> f64,
{
    Ok(CurveQuadrature::new(m, z, n_sigma, params, spec, WeightRule::CoArea)?.integrate(f))
}
