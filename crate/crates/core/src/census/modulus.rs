use std::collections::BTreeSet;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::eta::combine;
use super::{check_eta, leg_sum, CensusError, EtaValue, Leg};
use crate::freq::FrequencyGrid;

/// Lattice indices `(i, j)` of the wavevector `(i/N, j/N)`.
pub type IndexPair = (i64, i64);

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TripleClass {
    /// `(k, ℓ) = (m, j)` or `(k, ℓ) = (j, m)`.
    TrivialPairing,
    /// `{k_x, ℓ_x} = {m_x, j_x}` with the second root of the y-quadratic.
    XSwapFamily,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct ResonantTriple {
    pub j: IndexPair,
    pub k: IndexPair,
    pub l: IndexPair,
    pub class: TripleClass,
}

/// `R_m^N`: exact four-wave resonances `ω_m + ω_j = ω_k + ω_ℓ`, `m = k − j + ℓ`, legs in `D_N⁺`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResonantModulus {
    pub m: IndexPair,
    pub n: u32,
    pub eta: EtaValue,
    pub triples: Vec<ResonantTriple>,
}

impl ResonantModulus {
    pub fn len(&self) -> usize {
        self.triples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.triples.is_empty()
    }

    pub fn count(&self, class: TripleClass) -> usize {
        self.triples.iter().filter(|t| t.class == class).count()
    }
}

fn classify(m: IndexPair, j: IndexPair, k: IndexPair, l: IndexPair) -> TripleClass {
    if (k == m && l == j) || (k == j && l == m) {
        TripleClass::TrivialPairing
    } else {
        TripleClass::XSwapFamily
    }
}

/// Integer test of momentum balance and `ω_m + ω_j − ω_k − ω_ℓ = 0`.
///
/// For irrational η both the cubic part and the η-part vanish separately.
pub fn verify_triple(
    m: IndexPair,
    j: IndexPair,
    k: IndexPair,
    l: IndexPair,
    n: u32,
    eta: &EtaValue,
) -> Result<bool, CensusError> {
    if !eta.is_exact() {
        return Err(CensusError::RequiresExact(eta.to_string()));
    }
    if (m.0 != k.0 - j.0 + l.0) || (m.1 != k.1 - j.1 + l.1) {
        return Ok(false);
    }
    if [m, j, k, l].iter().any(|p| p.0 == 0) {
        return Ok(false);
    }
    let legs = [leg(1, m), leg(1, j), leg(-1, k), leg(-1, l)];
    let (p, q, d) = leg_sum(&legs);
    if eta.is_irrational() {
        return Ok(p == 0 && q == 0);
    }
    Ok(combine(eta, p, q, d, n as i128).expect("exact eta").is_zero())
}

fn leg(sign: i128, (i, j): IndexPair) -> Leg {
    Leg { sign, i: i as i128, j: j as i128 }
}

fn base_checks(grid: &FrequencyGrid, m: IndexPair, eta: &EtaValue) -> Result<(), CensusError> {
    check_eta(eta, grid.dispersion().eta)?;
    if !eta.is_exact() {
        return Err(CensusError::RequiresExact(eta.to_string()));
    }
    if grid.slot(m.0, m.1).is_none() {
        return Err(CensusError::NotInDomain(m.0, m.1));
    }
    Ok(())
}

/// `O(card²)` scan over `(j, k)` with `ℓ = m − k + j`.
pub fn brute_force_modulus(
    grid: &FrequencyGrid,
    m: IndexPair,
    eta: &EtaValue,
) -> Result<BTreeSet<(IndexPair, IndexPair, IndexPair)>, CensusError> {
    base_checks(grid, m, eta)?;
    let n = grid.refinement();
    let plus: Vec<IndexPair> = grid.modes().iter().map(|md| (md.i, md.j)).collect();
    let found: Vec<Vec<_>> = plus
        .par_iter()
        .map(|&j| {
            let mut out = Vec::new();
            for &k in &plus {
                let l = (m.0 - k.0 + j.0, m.1 - k.1 + j.1);
                if grid.slot(l.0, l.1).is_none() {
                    continue;
                }
                if verify_triple(m, j, k, l, n, eta).expect("exact eta") {
                    out.push((j, k, l));
                }
            }
            out
        })
        .collect();
    Ok(found.into_iter().flatten().collect())
}

/// Enumeration by the x-multiset reduction `{k_x, ℓ_x} = {m_x, j_x}`.
///
/// Given `j`, the y-components solve a quadratic with roots `m_y` (trivial pairing)
/// and `2(m_y + j_y)m_x/(m_x + j_x) − m_y`, kept when integral and on the lattice.
pub fn structural_modulus(
    grid: &FrequencyGrid,
    m: IndexPair,
    eta: &EtaValue,
) -> Result<BTreeSet<(IndexPair, IndexPair, IndexPair)>, CensusError> {
    base_checks(grid, m, eta)?;
    if !eta.is_irrational() {
        return Err(CensusError::RequiresIrrational(eta.to_string()));
    }
    let mut out = BTreeSet::new();
    for md in grid.modes() {
        let j = (md.i, md.j);
        let s = m.1 + j.1;
        let num = 2 * s * m.0;
        let den = m.0 + j.0;
        let mut roots = vec![m.1];
        if num % den == 0 {
            roots.push(num / den - m.1);
        }
        for &r in &roots {
            // k_x = m_x, ℓ_x = j_x with k_y = r
            let (k, l) = ((m.0, r), (j.0, s - r));
            if grid.slot(k.0, k.1).is_some() && grid.slot(l.0, l.1).is_some() {
                out.insert((j, k, l));
            }
            // k_x = j_x, ℓ_x = m_x with ℓ_y = r
            let (k, l) = ((j.0, s - r), (m.0, r));
            if grid.slot(k.0, k.1).is_some() && grid.slot(l.0, l.1).is_some() {
                out.insert((j, k, l));
            }
        }
    }
    Ok(out)
}

/// Structural enumeration cross-validated against brute force; a mismatch is a hard fault.
pub fn enumerate_resonant_modulus(
    grid: &FrequencyGrid,
    m: IndexPair,
    eta: &EtaValue,
) -> Result<ResonantModulus, CensusError> {
    let structural = structural_modulus(grid, m, eta)?;
    let brute = brute_force_modulus(grid, m, eta)?;
    if structural != brute {
        return Err(CensusError::StructuralMismatch {
            missing: brute.difference(&structural).count(),
            extra: structural.difference(&brute).count(),
        });
    }
    let triples = structural
        .into_iter()
        .map(|(j, k, l)| ResonantTriple { j, k, l, class: classify(m, j, k, l) })
        .collect();
    Ok(ResonantModulus { m, n: grid.refinement(), eta: *eta, triples })
}

/// Least-squares slope of `log card` against `log N`.
pub fn cardinality_slope(counts: &[(u32, usize)]) -> Option<f64> {
    let pts: Vec<(u32, f64)> = counts
        .iter()
        .filter(|c| c.1 > 0)
        .map(|&(n, c)| (n, c as f64))
        .collect();
    super::fit_decay(&pts).map(|f| -f.nu)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::census::Rational;
    use crate::freq::{DispersionParams, DomainSpec};

    fn grid(n: u32, eta: &EtaValue) -> FrequencyGrid {
        FrequencyGrid::build(DomainSpec::default(), DispersionParams::new(eta.to_f64()).unwrap(), n)
            .unwrap()
    }

    /// Base mode `(1.5, 0.5)` on the lattice of refinement `n`.
    fn m_at(n: u32) -> IndexPair {
        (3 * n as i64 / 2, n as i64 / 2)
    }

    #[test]
    fn known_nontrivial_triple_is_resonant() {
        let s2 = EtaValue::sqrt(2).unwrap();
        let (m, j, k, l) = ((6, 2), (3, -2), (6, -2), (3, 2));
        assert!(verify_triple(m, j, k, l, 4, &s2).unwrap());
        assert!(verify_triple(m, j, k, l, 4, &EtaValue::Rational(Rational::from_integer(1))).unwrap());
        assert_eq!(classify(m, j, k, l), TripleClass::XSwapFamily);
        // wrong momentum
        assert!(!verify_triple(m, j, k, (3, 1), 4, &s2).unwrap());
        let r = enumerate_resonant_modulus(&grid(4, &s2), m, &s2).unwrap();
        assert!(r
            .triples
            .contains(&ResonantTriple { j, k, l, class: TripleClass::XSwapFamily }));
    }

    #[test]
    fn trivial_pairings_count() {
        let s2 = EtaValue::sqrt(2).unwrap();
        for n in [4, 8] {
            let g = grid(n, &s2);
            let r = enumerate_resonant_modulus(&g, m_at(n), &s2).unwrap();
            assert_eq!(r.count(TripleClass::TrivialPairing), 2 * g.len() - 1);
            assert!(r.count(TripleClass::XSwapFamily) > 0);
        }
    }

    /// Set equality with brute force at several base modes, including edge modes.
    #[test]
    fn structural_equals_brute_force() {
        let s2 = EtaValue::sqrt(2).unwrap();
        for n in [4, 8] {
            let g = grid(n, &s2);
            let picks = [0, g.len() / 3, g.len() / 2, g.len() - 1];
            for &p in &picks {
                let md = &g.modes()[p];
                let m = (md.i, md.j);
                assert_eq!(
                    structural_modulus(&g, m, &s2).unwrap(),
                    brute_force_modulus(&g, m, &s2).unwrap(),
                    "N={n} m={m:?}"
                );
            }
        }
    }

    #[test]
    fn every_triple_reverifies() {
        let s2 = EtaValue::sqrt(2).unwrap();
        let r = enumerate_resonant_modulus(&grid(8, &s2), m_at(8), &s2).unwrap();
        for t in &r.triples {
            assert!(verify_triple(r.m, t.j, t.k, t.l, 8, &s2).unwrap());
        }
    }

    #[test]
    fn cardinality_grows_like_n_squared() {
        let s2 = EtaValue::sqrt(2).unwrap();
        let counts: Vec<(u32, usize)> = [4, 8, 16]
            .iter()
            .map(|&n| (n, enumerate_resonant_modulus(&grid(n, &s2), m_at(n), &s2).unwrap().len()))
            .collect();
        for &(n, c) in &counts {
            let ratio = c as f64 / (n * n) as f64;
            assert!(ratio > 1.0 && ratio < 20.0, "{counts:?}");
        }
        assert!(cardinality_slope(&counts).unwrap() <= 2.3);
    }

    #[test]
    fn rejects_bad_inputs() {
        let s2 = EtaValue::sqrt(2).unwrap();
        let one = EtaValue::Rational(Rational::from_integer(1));
        let g1 = grid(4, &one);
        assert!(matches!(
            structural_modulus(&g1, (6, 2), &one),
            Err(CensusError::RequiresIrrational(_))
        ));
        assert!(brute_force_modulus(&g1, (6, 2), &one).is_ok());
        let g = grid(4, &s2);
        assert!(matches!(
            enumerate_resonant_modulus(&g, (1, 0), &s2),
            Err(CensusError::NotInDomain(1, 0))
        ));
        let fl = EtaValue::Float(s2.to_f64());
        assert!(matches!(
            brute_force_modulus(&g, (6, 2), &fl),
            Err(CensusError::RequiresExact(_))
        ));
    }
}
