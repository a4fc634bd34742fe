//! Extended reals: finite values plus an explicit negative-infinity sentinel.
//!
//! Pole logic branches on exact `-inf` hits, so the sentinel is a dedicated
//! enum variant rather than a large negative float or `f64::NEG_INFINITY`
//! smuggled through arithmetic.

use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use std::cmp::Ordering;
use std::fmt;

/// A real number extended by `-inf`. `+inf` never arises for the quantities
/// represented here (indicator values, log-modulus sums).
///
/// JSON form: a plain number, or the string `"-inf"`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ExtReal {
    NegInf,
    Finite(f64),
}

impl Serialize for ExtReal {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        match self {
            ExtReal::NegInf => serializer.serialize_str("-inf"),
            ExtReal::Finite(x) => serializer.serialize_f64(*x),
        }
    }
}

impl<'de> Deserialize<'de> for ExtReal {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Repr {
            Number(f64),
            Text(String),
        }
        match Repr::deserialize(deserializer)? {
            Repr::Number(x) => Ok(ExtReal::Finite(x)),
            Repr::Text(s) if s == "-inf" => Ok(ExtReal::NegInf),
            Repr::Text(s) => Err(D::Error::custom(format!("invalid extended real: {s}"))),
        }
    }
}

impl ExtReal {
    pub fn is_neg_inf(&self) -> bool {
        matches!(self, ExtReal::NegInf)
    }

    /// Finite value, or `None` for `-inf`.
    pub fn finite(&self) -> Option<f64> {
        match self {
            ExtReal::NegInf => None,
            ExtReal::Finite(x) => Some(*x),
        }
    }

    /// Finite value, panicking on `-inf`. For contexts where the caller has
    /// already excluded the pole hit.
    pub fn expect_finite(&self) -> f64 {
        self.finite().expect("unexpected -inf")
    }

    pub fn max(self, other: ExtReal) -> ExtReal {
        match (self, other) {
            (ExtReal::NegInf, x) | (x, ExtReal::NegInf) => x,
            (ExtReal::Finite(a), ExtReal::Finite(b)) => ExtReal::Finite(a.max(b)),
        }
    }

    /// Addition with `-inf` absorbing.
    pub fn add(self, other: ExtReal) -> ExtReal {
        match (self, other) {
            (ExtReal::NegInf, _) | (_, ExtReal::NegInf) => ExtReal::NegInf,
            (ExtReal::Finite(a), ExtReal::Finite(b)) => ExtReal::Finite(a + b),
        }
    }
}

impl PartialOrd for ExtReal {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        match (self, other) {
            (ExtReal::NegInf, ExtReal::NegInf) => Some(Ordering::Equal),
            (ExtReal::NegInf, ExtReal::Finite(_)) => Some(Ordering::Less),
            (ExtReal::Finite(_), ExtReal::NegInf) => Some(Ordering::Greater),
            (ExtReal::Finite(a), ExtReal::Finite(b)) => a.partial_cmp(b),
        }
    }
}

impl From<f64> for ExtReal {
    fn from(x: f64) -> Self {
        ExtReal::Finite(x)
    }
}

impl fmt::Display for ExtReal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExtReal::NegInf => write!(f, "-inf"),
            ExtReal::Finite(x) => write!(f, "{x}"),
        }
    }
}
