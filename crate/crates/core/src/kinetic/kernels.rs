use serde::{Deserialize, Serialize};

use crate::freq::{phi, DomainSpec, Wavevector};

use super::KineticError;

/// Sign pairing of the full-plane linearised kernels.
///
/// Both conventions agree on triads with all three legs in `D⁺`; they differ
/// on difference triads, where one leg lies in `D⁻`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum KernelConvention {
    /// `L = −2Ψ²(s_j γ_p + s_p γ_j)`, `S_p = 2Ψ²(γ_j − s_j γ_m)`,
    /// `S_j = 2Ψ²(γ_p − s_p γ_m)` with `s_q = sign(m_x q_x)`. This is the
    /// linearisation of the half-plane collision integrand, and it makes
    /// `L γ_m + S_p γ_p + S_j γ_j = 0` for every triad `j = m − p`.
    #[default]
    StationaryPairing,
    /// `L = −2Ψ²(s_j γ_j + s_p γ_p)`, `S_p = 2Ψ²(γ_j − s_p γ_m)`,
    /// `S_j = 2Ψ²(γ_p − s_j γ_m)`: the pairing as printed for the full-plane
    /// equation. Not stationary at `γ` on difference triads.
    Literal,
}

/// Coefficients of `f(m)`, `f(p)` and `f(j)` in the linearised integrand.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Kernels {
    pub l: f64,
    pub s_p: f64,
    pub s_j: f64,
}

#[inline]
fn sgn(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else {
        -1.0
    }
}

/// Kernels for a given squared coupling `Ψ²`.
#[inline]
pub fn kernels_with_coupling(
    m: Wavevector,
    j: Wavevector,
    p: Wavevector,
    psi_sq: f64,
    convention: KernelConvention,
) -> Kernels {
    if psi_sq == 0.0 || m.x == 0.0 || j.x == 0.0 || p.x == 0.0 {
        return Kernels::default();
    }
    let (gm, gj, gp) = (1.0 / m.x.abs(), 1.0 / j.x.abs(), 1.0 / p.x.abs());
    let sj = sgn(m.x * j.x);
    let sp = sgn(m.x * p.x);
    let c = 2.0 * psi_sq;
    match convention {
        KernelConvention::StationaryPairing => Kernels {
            l: -c * (sj * gp + sp * gj),
            s_p: c * (gj - sj * gm),
            s_j: c * (gp - sp * gm),
        },
        KernelConvention::Literal => Kernels {
            l: -c * (sj * gj + sp * gp),
            s_p: c * (gj - sp * gm),
            s_j: c * (gp - sj * gm),
        },
    }
}

/// Kernels with `Ψ = φ(m)φ(j)φ(p)`; all vanish when a leg leaves `supp ψ`.
pub fn linearized_kernels(
    m: Wavevector,
    j: Wavevector,
    p: Wavevector,
    spec: &DomainSpec,
    convention: KernelConvention,
) -> Kernels {
    let psi = phi(m, spec) * phi(j, spec) * phi(p, spec);
    kernels_with_coupling(m, j, p, psi * psi, convention)
}

/// The three-wave collision integrand `2Ψ²(r_p r_j − s_j r_m r_p − s_p r_m r_j)`.
pub fn nonlinear_integrand<R: Fn(Wavevector) -> f64>(
    r: R,
    m: Wavevector,
    j: Wavevector,
    p: Wavevector,
    spec: &DomainSpec,
) -> Result<f64, KineticError> {
    let (rm, rj, rp) = (r(m), r(j), r(p));
    for (q, v) in [(m, rm), (j, rj), (p, rp)] {
        if !(v > 0.0) {
            return Err(KineticError::NonPositiveProfile(q));
        }
    }
    let psi = phi(m, spec) * phi(j, spec) * phi(p, spec);
    let sj = sgn(m.x * j.x);
    let sp = sgn(m.x * p.x);
    Ok(2.0 * psi * psi * (rp * rj - sj * rm * rp - sp * rm * rj))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::freq::{gamma, DispersionParams};
    use crate::manifold::{curve_point_and_weight, Branch, WeightRule};
    use proptest::prelude::*;

    fn rj_gamma(k: Wavevector) -> f64 {
        gamma(k).unwrap()
    }

    #[test]
    fn symmetric_pair_example() {
        let m = Wavevector::new(1.2, 0.0);
        let p = Wavevector::new(0.6, 3f64.sqrt() * 0.36);
        let j = m - p;
        let k = kernels_with_coupling(m, j, p, 1.0, KernelConvention::StationaryPairing);
        assert!((k.l + 20.0 / 3.0).abs() < 1e-13);
        assert!((k.s_p - 5.0 / 3.0).abs() < 1e-13);
        assert!((k.s_j - 5.0 / 3.0).abs() < 1e-13);
        let id = k.l * 5.0 / 6.0 + k.s_p * 5.0 / 3.0 + k.s_j * 5.0 / 3.0;
        assert!(id.abs() < 1e-13);
    }

    #[test]
    fn cutoff_kills_kernels() {
        let spec = DomainSpec::default();
        let m = Wavevector::new(1.0, 0.0);
        let p = Wavevector::new(0.5, 0.1);
        let k = linearized_kernels(m, m - p, p, &spec, KernelConvention::StationaryPairing);
        assert_eq!(k, Kernels::default());
    }

    #[test]
    fn nonlinear_integrand_examples() {
        let spec = DomainSpec::default();
        let d = DispersionParams::new(1.0).unwrap();
        let m = Wavevector::new(1.2, 0.0);
        let pt = curve_point_and_weight(0.6, 0.0, m, Branch::Plus, &d, WeightRule::CoArea).unwrap();
        let v = nonlinear_integrand(rj_gamma, m, pt.j, pt.p, &spec).unwrap();
        assert!(v.abs() <= 1e-12);
        let flat = nonlinear_integrand(|_| 1.0, m, pt.j, pt.p, &spec).unwrap();
        let psi = phi(m, &spec) * phi(pt.j, &spec) * phi(pt.p, &spec);
        assert!((flat + 2.0 * psi * psi).abs() < 1e-14);
        // difference triad: p = m + j with m, j in D⁺, viewed from m
        let pt = curve_point_and_weight(1.6, 0.0, m, Branch::Plus, &d, WeightRule::CoArea).unwrap();
        assert!(pt.j.x < 0.0);
        let v = nonlinear_integrand(rj_gamma, m, pt.j, pt.p, &spec).unwrap();
        assert!(v.abs() <= 1e-12);
        assert!(nonlinear_integrand(|_| 0.0, m, pt.j, pt.p, &spec).is_err());
    }

    #[test]
    fn literal_pairing_breaks_stationarity_on_difference_triads() {
        let m = Wavevector::new(1.2, 0.0);
        let p = Wavevector::new(1.6, 0.4);
        let j = m - p;
        let g = |k: Wavevector| 1.0 / k.x.abs();
        let lit = kernels_with_coupling(m, j, p, 1.0, KernelConvention::Literal);
        let res = lit.l * g(m) + lit.s_p * g(p) + lit.s_j * g(j);
        assert!(res.abs() > 0.1, "{res}");
    }

    proptest! {
        #[test]
        fn rayleigh_jeans_identity(
            mx in prop_oneof![-1.99f64..-0.51, 0.51f64..1.99],
            my in -1.4f64..1.4,
            px in prop_oneof![-1.99f64..-0.51, 0.51f64..1.99],
            py in -1.4f64..1.4,
            psi_sq in 0.01f64..5.0,
        ) {
            let m = Wavevector::new(mx, my);
            let p = Wavevector::new(px, py);
            let j = m - p;
            prop_assume!(j.x.abs() > 1e-3);
            let g = |k: Wavevector| 1.0 / k.x.abs();
            let k = kernels_with_coupling(m, j, p, psi_sq, KernelConvention::StationaryPairing);
            let res = k.l * g(m) + k.s_p * g(p) + k.s_j * g(j);
            let scale = k.l.abs() * g(m) + k.s_p.abs() * g(p) + k.s_j.abs() * g(j);
            prop_assert!(res.abs() <= 1e-12 * scale.max(1.0));
        }

        #[test]
        fn swapping_legs_swaps_sources(
            mx in 0.51f64..1.99, my in -1.4f64..1.4,
            px in prop_oneof![-1.99f64..-0.51, 0.51f64..1.99], py in -1.4f64..1.4,
        ) {
            let m = Wavevector::new(mx, my);
            let p = Wavevector::new(px, py);
            let j = m - p;
            prop_assume!(j.x.abs() > 1e-3);
            for conv in [KernelConvention::StationaryPairing, KernelConvention::Literal] {
                let a = kernels_with_coupling(m, j, p, 1.0, conv);
                let b = kernels_with_coupling(m, p, j, 1.0, conv);
                prop_assert!((a.l - b.l).abs() <= 1e-12 * a.l.abs().max(1.0));
                prop_assert!((a.s_p - b.s_j).abs() <= 1e-12 * a.s_p.abs().max(1.0));
                prop_assert!((a.s_j - b.s_p).abs() <= 1e-12 * a.s_j.abs().max(1.0));
            }
        }
    }
}
