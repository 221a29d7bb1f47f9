use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

/// A point of the frequency plane.
///
/// Deserializes from either `{"x": .., "y": ..}` or `[x, y]`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(from = "WavevectorRepr")]
pub struct Wavevector {
    pub x: f64,
    pub y: f64,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum WavevectorRepr {
    Pair([f64; 2]),
    Named { x: f64, y: f64 },
}

impl From<WavevectorRepr> for Wavevector {
    fn from(r: WavevectorRepr) -> Self {
        match r {
            WavevectorRepr::Pair([x, y]) | WavevectorRepr::Named { x, y } => Wavevector { x, y },
        }
    }
}

impl Wavevector {
    #[inline]
    pub const fn new(x: f64, y: f64) -> Self {
        Wavevector { x, y }
    }

    #[inline]
    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    #[inline]
    pub fn dot(self, other: Wavevector) -> f64 {
        self.x * other.x + self.y * other.y
    }
}

impl fmt::Display for Wavevector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.x, self.y)
    }
}

impl Add for Wavevector {
    type Output = Wavevector;
    #[inline]
    fn add(self, o: Wavevector) -> Wavevector {
        Wavevector::new(self.x + o.x, self.y + o.y)
    }
}

impl Sub for Wavevector {
    type Output = Wavevector;
    #[inline]
    fn sub(self, o: Wavevector) -> Wavevector {
        Wavevector::new(self.x - o.x, self.y - o.y)
    }
}

impl Neg for Wavevector {
    type Output = Wavevector;
    #[inline]
    fn neg(self) -> Wavevector {
        Wavevector::new(-self.x, -self.y)
    }
}

impl Mul<f64> for Wavevector {
    type Output = Wavevector;
    #[inline]
    fn mul(self, s: f64) -> Wavevector {
        Wavevector::new(self.x * s, self.y * s)
    }
}

impl From<(f64, f64)> for Wavevector {
    fn from((x, y): (f64, f64)) -> Self {
        Wavevector::new(x, y)
    }
}
