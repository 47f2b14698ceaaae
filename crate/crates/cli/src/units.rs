//! Dimensioned config values written as `"<number> <unit>"`.

use std::fmt;
use std::marker::PhantomData;

use serde::de::{self, Deserializer};
use serde::{Deserialize, Serialize, Serializer};

pub trait Dimension {
    /// Unit used when serializing; parsing it applies factor 1.
    const CANONICAL: &'static str;
    const NAME: &'static str;
    /// `(suffix, multiplier, divisor)` to canonical. Powers of ten go in the
    /// divisor so that e.g. `15 ns` parses to exactly `15e-9 s`.
    fn units() -> &'static [(&'static str, f64, f64)];
}

macro_rules! dimension {
    ($ty:ident, $name:literal, $canon:literal, [$(($u:literal, $m:expr, $d:expr)),* $(,)?]) => {
        #[derive(Clone, Copy, Debug, PartialEq)]
        pub struct $ty;
        impl Dimension for $ty {
            const CANONICAL: &'static str = $canon;
            const NAME: &'static str = $name;
            fn units() -> &'static [(&'static str, f64, f64)] {
                &[($canon, 1.0, 1.0), $(($u, $m, $d)),*]
            }
        }
    };
}

dimension!(Kelvin, "temperature", "K", []);
dimension!(PerCm3, "number density", "cm^-3", [("m^-3", 1.0, 1e6)]);
dimension!(Seconds, "time", "s", [
    ("ms", 1.0, 1e3),
    ("us", 1.0, 1e6),
    ("μs", 1.0, 1e6),
    ("ns", 1.0, 1e9),
    ("ps", 1.0, 1e12),
]);
dimension!(Wavenumber, "energy", "cm^-1", [("meV", 8.065_543_937_349_212, 1.0), ("K", 0.695_034_8, 1.0)]);
dimension!(Bohr, "length", "bohr", [("angstrom", 1.0, 0.529_177_210_903), ("Å", 1.0, 0.529_177_210_903)]);

/// A value in the canonical unit of `D`.
#[derive(Clone, Copy, PartialEq)]
pub struct Quantity<D> {
    pub value: f64,
    _d: PhantomData<D>,
}

impl<D> Quantity<D> {
    pub const fn new(value: f64) -> Self {
        Quantity { value, _d: PhantomData }
    }
}

impl<D: Dimension> fmt::Debug for Quantity<D> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

/// Shortest exact text; exponent form outside `[1e-3, 1e7)`.
impl<D: Dimension> fmt::Display for Quantity<D> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let v = self.value;
        if v == 0.0 || (1e-3..1e7).contains(&v.abs()) {
            write!(f, "{v} {}", D::CANONICAL)
        } else {
            write!(f, "{v:e} {}", D::CANONICAL)
        }
    }
}

impl<D: Dimension> std::str::FromStr for Quantity<D> {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let s = s.trim();
        let split = s
            .find(|c: char| c.is_whitespace())
            .ok_or_else(|| format!("{} {s:?} needs a unit suffix, e.g. \"1.0 {}\"", D::NAME, D::CANONICAL))?;
        let (num, unit) = (&s[..split], s[split..].trim());
        let value: f64 = num.parse().map_err(|_| format!("{} {s:?}: {num:?} is not a number", D::NAME))?;
        if !value.is_finite() {
            return Err(format!("{} {s:?} is not finite", D::NAME));
        }
        let (_, mul, div) = D::units().iter().find(|(u, ..)| *u == unit).ok_or_else(|| {
            let known: Vec<&str> = D::units().iter().map(|(u, ..)| *u).collect();
            format!("{} {s:?}: unknown unit {unit:?} (expected one of {known:?})", D::NAME)
        })?;
        Ok(Quantity::new(value * mul / div))
    }
}

impl<D: Dimension> Serialize for Quantity<D> {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de, D: Dimension> Deserialize<'de> for Quantity<D> {
    fn deserialize<De: Deserializer<'de>>(d: De) -> Result<Self, De::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(de::Error::custom)
    }
}

pub type Temperature = Quantity<Kelvin>;
pub type Density = Quantity<PerCm3>;
pub type Time = Quantity<Seconds>;
pub type Energy = Quantity<Wavenumber>;
pub type Length = Quantity<Bohr>;
