use std::fmt;
use std::str::FromStr;

use num_rational::Ratio;
use num_traits::Zero;
use serde::{Deserialize, Serialize};

use super::CensusError;

pub type Rational = Ratio<i64>;

/// Anisotropy coefficient in a form that supports exact resonance tests.
///
/// Quadratic irrationals are stored as `u + v√d` with `d ≥ 2` squarefree and `v ≠ 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "EtaRepr", into = "String")]
pub enum EtaValue {
    Rational(Rational),
    QuadraticIrrational { u: Rational, v: Rational, d: i64 },
    Float(f64),
}

impl EtaValue {
    pub fn sqrt(d: i64) -> Result<Self, CensusError> {
        Self::quadratic(Rational::zero(), Rational::from_integer(1), d)
    }

    /// `u + v√d`, reduced so that `d` is squarefree; collapses to a rational when possible.
    pub fn quadratic(u: Rational, v: Rational, d: i64) -> Result<Self, CensusError> {
        if d < 0 {
            return Err(CensusError::InvalidEta(format!("negative radicand {d}")));
        }
        let mut core = d;
        let mut outside = 1i64;
        let mut f = 2i64;
        while f * f <= core {
            while core % (f * f) == 0 {
                core /= f * f;
                outside *= f;
            }
            f += 1;
        }
        let v = v * Rational::from_integer(outside);
        if core <= 1 || v.is_zero() {
            let r = if core == 1 { u + v } else { u };
            return Ok(EtaValue::Rational(r));
        }
        Ok(EtaValue::QuadraticIrrational { u, v, d: core })
    }

    pub fn to_f64(&self) -> f64 {
        match *self {
            EtaValue::Rational(r) => ratio_f64(r),
            EtaValue::QuadraticIrrational { u, v, d } => {
                ratio_f64(u) + ratio_f64(v) * (d as f64).sqrt()
            }
            EtaValue::Float(x) => x,
        }
    }

    pub fn is_exact(&self) -> bool {
        !matches!(self, EtaValue::Float(_))
    }

    pub fn is_irrational(&self) -> bool {
        matches!(self, EtaValue::QuadraticIrrational { .. })
    }
}

fn ratio_f64(r: Rational) -> f64 {
    *r.numer() as f64 / *r.denom() as f64
}

fn parse_rational(s: &str) -> Option<Rational> {
    let s = s.trim();
    if let Some((p, q)) = s.split_once('/') {
        let p: i64 = p.trim().parse().ok()?;
        let q: i64 = q.trim().parse().ok()?;
        return (q != 0).then(|| Rational::new(p, q));
    }
    let (neg, body) = match s.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, s.strip_prefix('+').unwrap_or(s)),
    };
    let (int, frac) = body.split_once('.').unwrap_or((body, ""));
    if int.is_empty() && frac.is_empty() {
        return None;
    }
    if !int.chars().chain(frac.chars()).all(|c| c.is_ascii_digit()) || frac.len() > 15 {
        return None;
    }
    let digits = format!("{int}{frac}");
    let num: i64 = if digits.is_empty() { 0 } else { digits.parse().ok()? };
    let r = Rational::new(num, 10i64.pow(frac.len() as u32));
    Some(if neg { -r } else { r })
}

fn parse_sqrt(s: &str) -> Option<i64> {
    let rest = s.strip_prefix("sqrt").or_else(|| s.strip_prefix('√'))?;
    let rest = rest.trim();
    let inner = rest
        .strip_prefix('(')
        .and_then(|r| r.strip_suffix(')'))
        .unwrap_or(rest);
    inner.trim().parse().ok()
}

impl FromStr for EtaValue {
    type Err = CensusError;

    /// Accepts `sqrt2`, `sqrt(d)`, `√d`, `v*sqrt(d)`, `p/q`, decimals and `float:x`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let t = s.trim();
        let bad = || CensusError::InvalidEta(s.to_string());
        if let Some(x) = t.strip_prefix("float:") {
            let x: f64 = x.trim().parse().map_err(|_| bad())?;
            return if x.is_finite() && x > 0.0 { Ok(EtaValue::Float(x)) } else { Err(bad()) };
        }
        let eta = if let Some(d) = parse_sqrt(t) {
            EtaValue::sqrt(d)?
        } else if let Some((v, rad)) = t.split_once('*') {
            let v = parse_rational(v).ok_or_else(bad)?;
            let d = parse_sqrt(rad.trim()).ok_or_else(bad)?;
            EtaValue::quadratic(Rational::zero(), v, d)?
        } else {
            EtaValue::Rational(parse_rational(t).ok_or_else(bad)?)
        };
        if eta.to_f64() > 0.0 {
            Ok(eta)
        } else {
            Err(bad())
        }
    }
}

impl fmt::Display for EtaValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EtaValue::Rational(r) => write!(f, "{r}"),
            EtaValue::QuadraticIrrational { u, v, d } => {
                if !u.is_zero() {
                    write!(f, "{u}+")?;
                }
                if *v != Rational::from_integer(1) {
                    write!(f, "{v}*")?;
                }
                write!(f, "sqrt({d})")
            }
            EtaValue::Float(x) => write!(f, "float:{x}"),
        }
    }
}

/// Strings use the `FromStr` grammar; bare numbers are read as exact decimals.
#[derive(Deserialize)]
#[serde(untagged)]
enum EtaRepr {
    Text(String),
    Number(f64),
}

impl TryFrom<EtaRepr> for EtaValue {
    type Error = CensusError;

    fn try_from(r: EtaRepr) -> Result<Self, Self::Error> {
        match r {
            EtaRepr::Text(s) => s.parse(),
            EtaRepr::Number(x) => match x.to_string().parse() {
                Ok(e) => Ok(e),
                Err(_) if x.is_finite() && x > 0.0 => Ok(EtaValue::Float(x)),
                Err(e) => Err(e),
            },
        }
    }
}

impl From<EtaValue> for String {
    fn from(e: EtaValue) -> String {
        e.to_string()
    }
}

/// Exact value `(x + y√d) / den` of a denominator, `den > 0`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) struct QuadNumber {
    pub x: i128,
    pub y: i128,
    pub d: i128,
    pub den: i128,
}

impl QuadNumber {
    pub fn is_zero(&self) -> bool {
        self.x == 0 && self.y == 0
    }

    /// `|x + y√d| / den` without cancellation when the parts have opposite signs.
    pub fn abs_f64(&self) -> f64 {
        let den = self.den as f64;
        if self.y == 0 || self.d == 0 {
            return (self.x as f64).abs() / den;
        }
        let sd = (self.d as f64).sqrt();
        if self.x == 0 || (self.x > 0) == (self.y > 0) {
            return ((self.x as f64).abs() + (self.y as f64).abs() * sd) / den;
        }
        let norm = self.x * self.x - self.d * self.y * self.y;
        (norm as f64).abs() / ((self.x as f64).abs() + (self.y as f64).abs() * sd) / den
    }
}

/// Exact evaluation of `P/N³ + η·Q/(N·D)` for integer `P`, `Q`, `D ≠ 0`.
pub(crate) fn combine(eta: &EtaValue, p: i128, q: i128, d: i128, n: i128) -> Option<QuadNumber> {
    let (u, v, rad) = match *eta {
        EtaValue::Rational(r) => (r, Rational::zero(), 0i64),
        EtaValue::QuadraticIrrational { u, v, d } => (u, v, d),
        EtaValue::Float(_) => return None,
    };
    let (ud, vd) = (*u.denom() as i128, *v.denom() as i128);
    let l = ud * vd / gcd(ud, vd);
    let sign = d.signum();
    let dd = d.abs();
    let n2 = n * n;
    // common denominator N³·|D|·l
    let x = p * dd * l + sign * n2 * q * (*u.numer() as i128) * (l / ud);
    let y = sign * n2 * q * (*v.numer() as i128) * (l / vd);
    Some(QuadNumber {
        x,
        y,
        d: rad as i128,
        den: n2 * n * dd * l,
    })
}

fn gcd(a: i128, b: i128) -> i128 {
    if b == 0 {
        a.abs()
    } else {
        gcd(b, a % b)
    }
}

pub(crate) fn float_value(eta: f64, p: i128, q: i128, d: i128, n: i128) -> f64 {
    let n = n as f64;
    (p as f64 / (n * n * n) + eta * q as f64 / (n * d as f64)).abs()
}
