//! Unit-suffixed scalar values such as `"775 nm"` or `"5 THz"`.

use std::fmt;
use std::marker::PhantomData;

use serde::de::{self, Deserialize, Deserializer};

/// A physical dimension with a fixed set of accepted unit suffixes.
pub trait Dimension {
    const NAME: &'static str;
    /// (suffix, factor to SI).
    const UNITS: &'static [(&'static str, f64)];
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LengthDim;
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TimeDim;
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AngularFrequencyDim;
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AngleDim;

impl Dimension for LengthDim {
    const NAME: &'static str = "length";
    const UNITS: &'static [(&'static str, f64)] = &[
        ("nm", 1e-9),
        ("um", 1e-6),
        ("μm", 1e-6),
        ("mm", 1e-3),
        ("cm", 1e-2),
        ("m", 1.0),
    ];
}

impl Dimension for TimeDim {
    const NAME: &'static str = "time";
    const UNITS: &'static [(&'static str, f64)] =
        &[("fs", 1e-15), ("ps", 1e-12), ("ns", 1e-9), ("s", 1.0)];
}

impl Dimension for AngularFrequencyDim {
    const NAME: &'static str = "angular frequency";
    // THz here is 10¹² rad/s, not 10¹² cycles/s
    const UNITS: &'static [(&'static str, f64)] = &[("THz", 1e12), ("rad/s", 1.0)];
}

impl Dimension for AngleDim {
    const NAME: &'static str = "angle";
    const UNITS: &'static [(&'static str, f64)] = &[
        ("rad", 1.0),
        ("mrad", 1e-3),
        ("deg", std::f64::consts::PI / 180.0),
    ];
}

/// A value converted to SI on parse.
pub struct Quantity<D> {
    si: f64,
    _dim: PhantomData<D>,
}

impl<D> Clone for Quantity<D> {
    fn clone(&self) -> Self {
        *self
    }
}

impl<D> Copy for Quantity<D> {}

impl<D> PartialEq for Quantity<D> {
    fn eq(&self, other: &Self) -> bool {
        self.si == other.si
    }
}

pub type Length = Quantity<LengthDim>;
pub type Time = Quantity<TimeDim>;
pub type AngularFrequency = Quantity<AngularFrequencyDim>;
pub type Angle = Quantity<AngleDim>;

impl<D: Dimension> Quantity<D> {
    pub fn from_si(si: f64) -> Self {
        Self {
            si,
            _dim: PhantomData,
        }
    }

    pub fn si(self) -> f64 {
        self.si
    }

    pub fn parse(text: &str) -> Result<Self, String> {
        let text = text.trim();
        let split = text
            .find(|c: char| !(c.is_ascii_digit() || matches!(c, '.' | '-' | '+' | 'e' | 'E')))
            .ok_or_else(|| missing_unit::<D>(text))?;
        let (number, unit) = text.split_at(split);
        let unit = unit.trim();
        let value: f64 = number
            .trim()
            .parse()
            .map_err(|_| format!("cannot read a number from {text:?}"))?;
        if !value.is_finite() {
            return Err(format!("{text:?} is not finite"));
        }
        let factor = D::UNITS
            .iter()
            .find(|(suffix, _)| *suffix == unit)
            .map(|(_, f)| *f)
            .ok_or_else(|| {
                format!(
                    "unknown {} unit {unit:?} in {text:?}; expected one of {}",
                    D::NAME,
                    unit_list::<D>()
                )
            })?;
        Ok(Self::from_si(value * factor))
    }
}

fn unit_list<D: Dimension>() -> String {
    D::UNITS.iter().map(|(s, _)| *s).collect::<Vec<_>>().join(", ")
}

fn missing_unit<D: Dimension>(text: &str) -> String {
    format!(
        "{} {text:?} needs an explicit unit ({})",
        D::NAME,
        unit_list::<D>()
    )
}

impl<D: Dimension> fmt::Debug for Quantity<D> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:e} (SI {})", self.si, D::NAME)
    }
}

impl<'de, D: Dimension> Deserialize<'de> for Quantity<D> {
    fn deserialize<De: Deserializer<'de>>(deserializer: De) -> Result<Self, De::Error> {
        struct Visitor<D>(PhantomData<D>);

        impl<D: Dimension> de::Visitor<'_> for Visitor<D> {
            type Value = Quantity<D>;

            fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                write!(f, "a {} string with a unit such as \"{} {}\"", D::NAME, 1, D::UNITS[0].0)
            }

            fn visit_str<E: de::Error>(self, v: &str) -> Result<Self::Value, E> {
                Quantity::parse(v).map_err(E::custom)
            }

            fn visit_i64<E: de::Error>(self, v: i64) -> Result<Self::Value, E> {
                Err(E::custom(missing_unit::<D>(&v.to_string())))
            }

            fn visit_f64<E: de::Error>(self, v: f64) -> Result<Self::Value, E> {
                Err(E::custom(missing_unit::<D>(&v.to_string())))
            }
        }

        deserializer.deserialize_any(Visitor(PhantomData))
    }
}

/// A quantity that must be strictly positive.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Positive<D: Dimension>(pub Quantity<D>);

impl<D: Dimension> Positive<D> {
    pub fn si(self) -> f64 {
        self.0.si()
    }
}

impl<'de, D: Dimension> Deserialize<'de> for Positive<D> {
    fn deserialize<De: Deserializer<'de>>(deserializer: De) -> Result<Self, De::Error> {
        let q = Quantity::<D>::deserialize(deserializer)?;
        if q.si() > 0.0 {
            Ok(Positive(q))
        } else {
            Err(de::Error::custom(format!(
                "{} must be positive, got {:e} in SI units",
                D::NAME,
                q.si()
            )))
        }
    }
}
