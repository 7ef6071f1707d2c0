use std::fmt;

use serde::{de::Error, Deserialize, Deserializer, Serialize, Serializer};

const UNDEFINED: &str = "undefined";

/// A ratio or conditional probability that may be undefined because its
/// denominator (or conditioning event) has probability zero.
///
/// Undefined values are never encoded as NaN or infinity.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Quantity {
    Value(f64),
    Undefined,
}

impl Quantity {
    /// `num / den`, undefined when `den == 0`.
    pub fn ratio(num: f64, den: f64) -> Self {
        if den == 0.0 {
            Quantity::Undefined
        } else {
            Quantity::Value(num / den)
        }
    }

    pub fn value(self) -> Option<f64> {
        match self {
            Quantity::Value(v) => Some(v),
            Quantity::Undefined => None,
        }
    }

    pub fn is_defined(self) -> bool {
        matches!(self, Quantity::Value(_))
    }

    pub fn map(self, f: impl FnOnce(f64) -> f64) -> Self {
        match self {
            Quantity::Value(v) => Quantity::Value(f(v)),
            Quantity::Undefined => Quantity::Undefined,
        }
    }
}

impl fmt::Display for Quantity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Quantity::Value(v) => write!(f, "{v}"),
            Quantity::Undefined => f.write_str(UNDEFINED),
        }
    }
}

impl Serialize for Quantity {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            Quantity::Value(v) => s.serialize_f64(*v),
            Quantity::Undefined => s.serialize_str(UNDEFINED),
        }
    }
}

impl<'de> Deserialize<'de> for Quantity {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Repr {
            Num(f64),
            Text(String),
        }
        match Repr::deserialize(d)? {
            Repr::Num(v) => Ok(Quantity::Value(v)),
            Repr::Text(t) if t == UNDEFINED => Ok(Quantity::Undefined),
            Repr::Text(t) => Err(D::Error::custom(format!(
                "expected a number or \"{UNDEFINED}\", got {t:?}"
            ))),
        }
    }
}
