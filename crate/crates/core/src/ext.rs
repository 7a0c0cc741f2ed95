//! Extended reals used for Green-function values at the radius of convergence.

use std::fmt;

use serde::{Serialize, Serializer};

/// A real number or a signed infinity.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Ext {
    Finite(f64),
    PosInf,
    NegInf,
}

impl Ext {
    pub fn finite(self) -> Option<f64> {
        match self {
            Ext::Finite(x) => Some(x),
            _ => None,
        }
    }

    pub fn is_finite(self) -> bool {
        matches!(self, Ext::Finite(_))
    }

    pub fn is_pos_inf(self) -> bool {
        matches!(self, Ext::PosInf)
    }

    /// Lossy conversion for plotting and sorting.
    pub fn to_f64(self) -> f64 {
        match self {
            Ext::Finite(x) => x,
            Ext::PosInf => f64::INFINITY,
            Ext::NegInf => f64::NEG_INFINITY,
        }
    }

    /// Product with a positive finite scalar.
    pub fn scale(self, c: f64) -> Ext {
        debug_assert!(c > 0.0);
        match self {
            Ext::Finite(x) => Ext::Finite(x * c),
            other => other,
        }
    }

    /// Quotient by a positive finite scalar.
    pub fn div(self, c: f64) -> Ext {
        self.scale(1.0 / c)
    }

    pub fn min(self, other: Ext) -> Ext {
        if other.lt(self) {
            other
        } else {
            self
        }
    }

    pub fn lt(self, other: Ext) -> bool {
        self.to_f64() < other.to_f64()
    }

    /// `c / (c + d)` with `c/(c+∞) := 0` and `∞/(∞+c) := 1`.
    pub fn share(c: Ext, d: Ext) -> Option<f64> {
        match (c, d) {
            (Ext::Finite(a), Ext::Finite(b)) => Some(a / (a + b)),
            (Ext::Finite(_), Ext::PosInf) => Some(0.0),
            (Ext::PosInf, Ext::Finite(_)) => Some(1.0),
            _ => None,
        }
    }
}

impl std::ops::Add for Ext {
    type Output = Ext;

    /// Panics on `∞ - ∞`.
    fn add(self, rhs: Ext) -> Ext {
        match (self, rhs) {
            (Ext::Finite(a), Ext::Finite(b)) => Ext::Finite(a + b),
            (Ext::PosInf, Ext::NegInf) | (Ext::NegInf, Ext::PosInf) => {
                panic!("indeterminate sum of opposite infinities")
            }
            (Ext::PosInf, _) | (_, Ext::PosInf) => Ext::PosInf,
            _ => Ext::NegInf,
        }
    }
}

impl From<f64> for Ext {
    fn from(x: f64) -> Self {
        if x == f64::INFINITY {
            Ext::PosInf
        } else if x == f64::NEG_INFINITY {
            Ext::NegInf
        } else {
            Ext::Finite(x)
        }
    }
}

impl fmt::Display for Ext {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Ext::Finite(x) => write!(f, "{}", fmt_sig(*x)),
            Ext::PosInf => f.write_str("inf"),
            Ext::NegInf => f.write_str("-inf"),
        }
    }
}

impl Serialize for Ext {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            Ext::Finite(x) => s.serialize_f64(round_sig(*x)),
            Ext::PosInf => s.serialize_str("inf"),
            Ext::NegInf => s.serialize_str("-inf"),
        }
    }
}

/// Rounds to 12 significant digits.
pub fn round_sig(x: f64) -> f64 {
    if !x.is_finite() || x == 0.0 {
        return x;
    }
    format!("{:.11e}", x).parse().unwrap_or(x)
}

/// Formats with 12 significant digits; infinities print as `inf`.
pub fn fmt_sig(x: f64) -> String {
    if x == f64::INFINITY {
        "inf".to_string()
    } else if x == f64::NEG_INFINITY {
        "-inf".to_string()
    } else if x == 0.0 {
        "0".to_string()
    } else {
        format!("{:.11e}", x)
    }
}
