//! Bounded frequency domain, its lattice `D_N`, the KP dispersion relation,
//! smooth cutoffs and coupling coefficients.
//!
//! Only the right half `D_N⁺` is stored. The left half is the mirror image
//! `k ↦ −k` and is never materialised.

mod coarse;
mod wavevector;

pub use coarse::{CoarseCell, CoarsePartition};
pub use wavevector::Wavevector;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FreqError {
    #[error("invalid domain: {0}")]
    InvalidDomain(String),
    #[error("dispersion parameter eta must be positive, got {0}")]
    InvalidEta(f64),
    #[error("lattice refinement N must be at least 1")]
    InvalidRefinement,
    #[error("dispersion has a pole at k_x = 0 (k = {0})")]
    SingularPoint(Wavevector),
    #[error("coarse mesh h = {h} is smaller than the lattice spacing 1/N = {spacing}")]
    CoarseMeshTooFine { h: f64, spacing: f64 },
    #[error("expected {expected} per-mode values, got {got}")]
    LengthMismatch { expected: usize, got: usize },
}

/// Rectangle `D⁺ = (a, b) × (−c, c)` with cutoff ramps of width `ramp_width`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DomainSpec {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    #[serde(rename = "w", alias = "ramp_width")]
    pub ramp_width: f64,
}

impl Default for DomainSpec {
    fn default() -> Self {
        DomainSpec {
            a: 0.5,
            b: 2.0,
            c: 1.5,
            ramp_width: 0.15,
        }
    }
}

impl DomainSpec {
    pub fn new(a: f64, b: f64, c: f64, ramp_width: f64) -> Result<Self, FreqError> {
        let spec = DomainSpec {
            a,
            b,
            c,
            ramp_width,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<(), FreqError> {
        let DomainSpec {
            a,
            b,
            c,
            ramp_width: w,
        } = *self;
        if !(a.is_finite() && b.is_finite() && c.is_finite() && w.is_finite()) {
            return Err(FreqError::InvalidDomain("non-finite bound".into()));
        }
        if !(0.0 < a && a < b) {
            return Err(FreqError::InvalidDomain(format!(
                "need 0 < a < b, got a = {a}, b = {b}"
            )));
        }
        if c <= 0.0 {
            return Err(FreqError::InvalidDomain(format!("need c > 0, got {c}")));
        }
        let w_max = (b - a).min(2.0 * c) / 2.0;
        if !(0.0 < w && w < w_max) {
            return Err(FreqError::InvalidDomain(format!(
                "need 0 < w < min(b - a, 2c)/2 = {w_max}, got w = {w}"
            )));
        }
        Ok(())
    }

    /// Sum triads `n = k + l` with all legs in `D⁺` only exist when `b > 2a`.
    /// Lattice construction does not need this; dynamics and configs do.
    pub fn require_interacting(&self) -> Result<(), FreqError> {
        self.validate()?;
        if self.b <= 2.0 * self.a {
            return Err(FreqError::InvalidDomain(format!(
                "need b > 2a for a nonempty quadratic interaction, got a = {}, b = {}",
                self.a, self.b
            )));
        }
        Ok(())
    }

    /// Strict membership in the open rectangle `D⁺`.
    pub fn contains_plus(&self, k: Wavevector) -> bool {
        self.a < k.x && k.x < self.b && k.y.abs() < self.c
    }

    /// Strict membership in `D = D⁺ ∪ D⁻`.
    pub fn contains(&self, k: Wavevector) -> bool {
        self.contains_plus(Wavevector::new(k.x.abs(), k.y))
    }

    pub fn area_plus(&self) -> f64 {
        (self.b - self.a) * 2.0 * self.c
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DispersionParams {
    pub eta: f64,
}

impl Default for DispersionParams {
    fn default() -> Self {
        DispersionParams { eta: 1.0 }
    }
}

impl DispersionParams {
    pub fn new(eta: f64) -> Result<Self, FreqError> {
        if eta > 0.0 && eta.is_finite() {
            Ok(DispersionParams { eta })
        } else {
            Err(FreqError::InvalidEta(eta))
        }
    }

    /// `ω_k = k_x³ + η k_y²/k_x`.
    #[inline]
    pub fn omega(&self, k: Wavevector) -> f64 {
        k.x * k.x * k.x + self.eta * k.y * k.y / k.x
    }

    /// `ω` together with its gradient `(∂ω/∂k_x, ∂ω/∂k_y)`.
    pub fn omega_and_grad(&self, k: Wavevector) -> Result<(f64, f64, f64), FreqError> {
        if k.x == 0.0 {
            return Err(FreqError::SingularPoint(k));
        }
        let (kx, ky, eta) = (k.x, k.y, self.eta);
        let w = kx * kx * kx + eta * ky * ky / kx;
        let dx = 3.0 * kx * kx - eta * ky * ky / (kx * kx);
        let dy = 2.0 * eta * ky / kx;
        Ok((w, dx, dy))
    }
}

/// Rayleigh-Jeans profile `γ_k = 1/|k_x|`.
pub fn gamma(k: Wavevector) -> Result<f64, FreqError> {
    if k.x == 0.0 {
        Err(FreqError::SingularPoint(k))
    } else {
        Ok(1.0 / k.x.abs())
    }
}

/// C¹ smoothstep: 0 below 0, `3x² − 2x³` on (0, 1), 1 above 1.
#[inline]
pub fn smoothstep(x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else if x >= 1.0 {
        1.0
    } else {
        x * x * (3.0 - 2.0 * x)
    }
}

/// Mollified indicator `ψ⁺` of `D⁺`.
#[inline]
pub fn psi_plus(k: Wavevector, spec: &DomainSpec) -> f64 {
    let w = spec.ramp_width;
    smoothstep((k.x - spec.a) / w)
        * smoothstep((spec.b - k.x) / w)
        * smoothstep((k.y + spec.c) / w)
        * smoothstep((spec.c - k.y) / w)
}

/// `ψ(k) = ψ⁺(k) + ψ⁺(−k_x, k_y)`.
#[inline]
pub fn psi_cutoff(k: Wavevector, spec: &DomainSpec) -> f64 {
    psi_plus(k, spec) + psi_plus(Wavevector::new(-k.x, k.y), spec)
}

/// `φ(k) = √|k_x| ψ(k)`, the per-leg factor of the coupling.
#[inline]
pub fn phi(k: Wavevector, spec: &DomainSpec) -> f64 {
    k.x.abs().sqrt() * psi_cutoff(k, spec)
}

#[inline]
pub fn phi_plus(k: Wavevector, spec: &DomainSpec) -> f64 {
    k.x.abs().sqrt() * psi_plus(k, spec)
}

/// Coupling coefficients `(Ψ_{nkl}, Ψ⁺_{nkl})`.
///
/// Both factorise over the legs, `Ψ = φ(n)φ(k)φ(l)`, so they are symmetric
/// in their arguments; `Ψ` is also invariant under sign flips of any leg.
pub fn coupling_psi(
    n: Wavevector,
    k: Wavevector,
    l: Wavevector,
    spec: &DomainSpec,
) -> (f64, f64) {
    let full = phi(n, spec) * phi(k, spec) * phi(l, spec);
    let plus = phi_plus(n, spec) * phi_plus(k, spec) * phi_plus(l, spec);
    (full, plus)
}

/// One lattice point of `D_N⁺` with its cached per-mode quantities.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mode {
    /// Integer lattice coordinates, `k = (i, j)/N`.
    pub i: i64,
    pub j: i64,
    pub k: Wavevector,
    pub omega: f64,
    pub gamma: f64,
    pub psi: f64,
    /// `√|k_x| ψ⁺(k)`.
    pub phi: f64,
}

/// Lattice `D_N⁺ = D⁺ ∩ Z²/N` in lexicographic `(i, j)` order.
#[derive(Debug, Clone)]
pub struct FrequencyGrid {
    spec: DomainSpec,
    dispersion: DispersionParams,
    n: u32,
    modes: Vec<Mode>,
    i_range: (i64, i64),
    j_range: (i64, i64),
    /// Dense lookup over the index box; `u32::MAX` marks an empty slot.
    slots: Vec<u32>,
}

impl FrequencyGrid {
    pub fn build(
        spec: DomainSpec,
        dispersion: DispersionParams,
        n: u32,
    ) -> Result<Self, FreqError> {
        spec.validate()?;
        DispersionParams::new(dispersion.eta)?;
        if n == 0 {
            return Err(FreqError::InvalidRefinement);
        }
        let nf = n as f64;
        let i_lo = (spec.a * nf).floor() as i64;
        let i_hi = (spec.b * nf).ceil() as i64;
        let j_hi = (spec.c * nf).ceil() as i64;
        let mut modes = Vec::new();
        for i in i_lo..=i_hi {
            for j in -j_hi..=j_hi {
                let k = Wavevector::new(i as f64 / nf, j as f64 / nf);
                if !spec.contains_plus(k) {
                    continue;
                }
                let psi = psi_plus(k, &spec);
                modes.push(Mode {
                    i,
                    j,
                    k,
                    omega: dispersion.omega(k),
                    gamma: 1.0 / k.x,
                    psi,
                    phi: k.x.sqrt() * psi,
                });
            }
        }
        let (i_range, j_range) = if modes.is_empty() {
            ((0, -1), (0, -1))
        } else {
            let i_min = modes.iter().map(|m| m.i).min().unwrap();
            let i_max = modes.iter().map(|m| m.i).max().unwrap();
            let j_min = modes.iter().map(|m| m.j).min().unwrap();
            let j_max = modes.iter().map(|m| m.j).max().unwrap();
            ((i_min, i_max), (j_min, j_max))
        };
        let width = (j_range.1 - j_range.0 + 1).max(0) as usize;
        let height = (i_range.1 - i_range.0 + 1).max(0) as usize;
        let mut slots = vec![u32::MAX; width * height];
        for (s, m) in modes.iter().enumerate() {
            let row = (m.i - i_range.0) as usize;
            let col = (m.j - j_range.0) as usize;
            slots[row * width + col] = s as u32;
        }
        Ok(FrequencyGrid {
            spec,
            dispersion,
            n,
            modes,
            i_range,
            j_range,
            slots,
        })
    }

    pub fn spec(&self) -> &DomainSpec {
        &self.spec
    }

    pub fn dispersion(&self) -> &DispersionParams {
        &self.dispersion
    }

    pub fn refinement(&self) -> u32 {
        self.n
    }

    pub fn modes(&self) -> &[Mode] {
        &self.modes
    }

    pub fn len(&self) -> usize {
        self.modes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.modes.is_empty()
    }

    /// `card(D_N) = 2 card(D_N⁺)`.
    pub fn full_len(&self) -> usize {
        2 * self.modes.len()
    }

    /// Inclusive ranges of the integer coordinates occupied by `D_N⁺`.
    pub fn index_box(&self) -> ((i64, i64), (i64, i64)) {
        (self.i_range, self.j_range)
    }

    /// Storage slot of the lattice point `(i, j)/N`, if it lies in `D_N⁺`.
    #[inline]
    pub fn slot(&self, i: i64, j: i64) -> Option<usize> {
        if i < self.i_range.0 || i > self.i_range.1 || j < self.j_range.0 || j > self.j_range.1 {
            return None;
        }
        let width = (self.j_range.1 - self.j_range.0 + 1) as usize;
        let s = self.slots[(i - self.i_range.0) as usize * width + (j - self.j_range.0) as usize];
        (s != u32::MAX).then_some(s as usize)
    }

    pub fn omegas(&self) -> Vec<f64> {
        self.modes.iter().map(|m| m.omega).collect()
    }

    pub fn gammas(&self) -> Vec<f64> {
        self.modes.iter().map(|m| m.gamma).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn grid(n: u32) -> FrequencyGrid {
        FrequencyGrid::build(DomainSpec::default(), DispersionParams::default(), n).unwrap()
    }

    #[test]
    fn default_grid_n4_has_55_modes() {
        // brute-force count of integers with 0.5 < i/4 < 2 and |j/4| < 1.5
        let mut count = 0;
        for i in -100..100 {
            for j in -100..100 {
                let (x, y) = (i as f64 / 4.0, j as f64 / 4.0);
                if 0.5 < x && x < 2.0 && y.abs() < 1.5 {
                    count += 1;
                }
            }
        }
        assert_eq!(count, 55);
        let g = grid(4);
        assert_eq!(g.len(), 55);
        assert_eq!(g.full_len(), 110);
        assert_eq!(g.index_box(), ((3, 7), (-5, 5)));
    }

    #[test]
    fn unit_lattice_between_one_and_two_is_empty() {
        let spec = DomainSpec::new(1.0, 2.0, 1.0, 0.1).unwrap();
        let g = FrequencyGrid::build(spec, DispersionParams::default(), 1).unwrap();
        assert!(g.is_empty());
        assert_eq!(g.full_len(), 0);
        assert!(spec.require_interacting().is_err());
    }

    #[test]
    fn modes_are_lexicographic_and_strictly_inside() {
        let g = grid(8);
        for w in g.modes().windows(2) {
            assert!((w[0].i, w[0].j) < (w[1].i, w[1].j));
        }
        for (s, m) in g.modes().iter().enumerate() {
            assert!(g.spec().contains_plus(m.k));
            assert_eq!(g.slot(m.i, m.j), Some(s));
            assert!(m.psi > 0.0);
        }
        assert_eq!(g.slot(4, 0), None);
    }

    #[test]
    fn cardinality_tracks_area() {
        let spec = DomainSpec::default();
        for n in [16u32, 32, 64] {
            let g = grid(n);
            let ratio = g.len() as f64 / (n as f64 * n as f64);
            assert!(
                (ratio / spec.area_plus() - 1.0).abs() < 0.10,
                "N = {n}: {ratio}"
            );
        }
    }

    #[test]
    fn omega_examples() {
        let d = DispersionParams::new(1.0).unwrap();
        assert_eq!(d.omega_and_grad(Wavevector::new(1.0, 0.0)).unwrap().0, 1.0);
        assert_eq!(d.omega_and_grad(Wavevector::new(2.0, 1.0)).unwrap().0, 8.5);
        let d = DispersionParams::new(2f64.sqrt()).unwrap();
        let k = Wavevector::new(0.75, 0.5);
        assert_relative_eq!(d.omega(-k), -d.omega(k), max_relative = 1e-15);
        assert!(matches!(
            d.omega_and_grad(Wavevector::new(0.0, 1.0)),
            Err(FreqError::SingularPoint(_))
        ));
        assert!(DispersionParams::new(0.0).is_err());
    }

    #[test]
    fn omega_gradient_matches_finite_differences() {
        let spec = DomainSpec::default();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let h = 1e-5;
        for eta in [1.0, 2f64.sqrt(), 2.7] {
            let d = DispersionParams::new(eta).unwrap();
            for _ in 0..100 {
                let k = Wavevector::new(
                    rng.random_range(spec.a..spec.b),
                    rng.random_range(-spec.c..spec.c),
                );
                let (_, gx, gy) = d.omega_and_grad(k).unwrap();
                let fx = (d.omega(k + Wavevector::new(h, 0.0)) - d.omega(k - Wavevector::new(h, 0.0)))
                    / (2.0 * h);
                let fy = (d.omega(k + Wavevector::new(0.0, h)) - d.omega(k - Wavevector::new(0.0, h)))
                    / (2.0 * h);
                let scale = gx.abs().max(gy.abs()).max(1.0);
                assert!((gx - fx).abs() / scale <= 1e-6, "{gx} vs {fx}");
                assert!((gy - fy).abs() / scale <= 1e-6, "{gy} vs {fy}");
            }
        }
    }

    #[test]
    fn psi_examples() {
        let spec = DomainSpec::default();
        assert_eq!(psi_cutoff(Wavevector::new(1.2, 0.0), &spec), 1.0);
        assert_eq!(psi_cutoff(Wavevector::new(0.5, 0.0), &spec), 0.0);
        assert_relative_eq!(
            psi_cutoff(Wavevector::new(0.575, 0.0), &spec),
            0.5,
            max_relative = 1e-12
        );
        assert_eq!(psi_cutoff(Wavevector::new(-1.2, 0.3), &spec), 1.0);
    }

    #[test]
    fn psi_halves_have_disjoint_support() {
        let spec = DomainSpec::default();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..10_000 {
            let k = Wavevector::new(rng.random_range(-2.5..2.5), rng.random_range(-2.0..2.0));
            let mirrored = Wavevector::new(-k.x, k.y);
            assert_eq!(psi_plus(k, &spec) * psi_plus(mirrored, &spec), 0.0);
        }
    }

    #[test]
    fn coupling_examples_and_symmetries() {
        let spec = DomainSpec::default();
        let n = Wavevector::new(1.5, 0.0);
        let k = Wavevector::new(0.75, 0.0);
        let (full, plus) = coupling_psi(n, k, k, &spec);
        assert_relative_eq!(plus, (1.5f64 * 0.75 * 0.75).sqrt(), max_relative = 1e-15);
        assert_relative_eq!(plus, 0.918559, max_relative = 1e-6);
        assert_eq!(full, plus);
        // a leg on the cutoff boundary kills the coupling
        let (full, plus) = coupling_psi(n, Wavevector::new(0.5, 0.0), k, &spec);
        assert_eq!((full, plus), (0.0, 0.0));

        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut draw = || {
            Wavevector::new(
                rng.random_range(-2.2..2.2),
                rng.random_range(-1.7..1.7),
            )
        };
        for _ in 0..1000 {
            let (a, b, c) = (draw(), draw(), draw());
            let (p1, _) = coupling_psi(a, b, c, &spec);
            let (p2, _) = coupling_psi(c, a, b, &spec);
            let (p3, _) = coupling_psi(-a, b, -c, &spec);
            assert_relative_eq!(p1, p2, max_relative = 1e-15);
            assert_eq!(p1, p3);
            assert_eq!(p1, phi(a, &spec) * phi(b, &spec) * phi(c, &spec));
        }
    }

    #[test]
    fn gamma_examples() {
        assert_relative_eq!(gamma(Wavevector::new(0.75, 0.5)).unwrap(), 4.0 / 3.0);
        assert_eq!(gamma(Wavevector::new(2.0, -1.0)).unwrap(), 0.5);
        let k = Wavevector::new(0.9, 0.1);
        assert_eq!(gamma(-k).unwrap(), gamma(k).unwrap());
        assert!(gamma(Wavevector::new(0.0, 0.2)).is_err());
    }

    #[test]
    fn domain_validation() {
        assert!(DomainSpec::new(0.5, 2.0, 1.5, 0.15).is_ok());
        assert!(DomainSpec::new(0.5, 0.9, 1.5, 0.1).unwrap().require_interacting().is_err());
        assert!(DomainSpec::default().require_interacting().is_ok());
        assert!(DomainSpec::new(0.5, 2.0, 1.5, 0.8).is_err());
        assert!(DomainSpec::new(-0.5, 2.0, 1.5, 0.1).is_err());
        assert!(DomainSpec::new(0.5, 2.0, 0.0, 0.1).is_err());
    }
}
