use std::fmt;

use serde::{Deserialize, Serialize};

/// An angular momentum quantum number stored as twice its value, so that
/// integer and half-integer values are both exact.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct HalfInt(i32);

impl HalfInt {
    pub const ZERO: HalfInt = HalfInt(0);

    /// Build from the doubled value (`twice = 3` is 3/2).
    pub const fn from_twice(twice: i32) -> Self {
        HalfInt(twice)
    }

    pub const fn int(value: i32) -> Self {
        HalfInt(2 * value)
    }

    pub const fn twice(self) -> i32 {
        self.0
    }

    pub const fn is_integer(self) -> bool {
        self.0 % 2 == 0
    }

    pub fn value(self) -> f64 {
        self.0 as f64 / 2.0
    }

    /// `2j + 1`
    pub const fn multiplicity(self) -> i32 {
        self.0 + 1
    }

    /// True when `m` is an allowed projection of the magnitude `self`.
    pub fn admits_projection(self, m: HalfInt) -> bool {
        self.0 >= 0 && m.0.abs() <= self.0 && (self.0 - m.0) % 2 == 0
    }
}

impl From<u32> for HalfInt {
    fn from(value: u32) -> Self {
        HalfInt::int(value as i32)
    }
}

impl std::ops::Neg for HalfInt {
    type Output = HalfInt;
    fn neg(self) -> HalfInt {
        HalfInt(-self.0)
    }
}

impl std::ops::Add for HalfInt {
    type Output = HalfInt;
    fn add(self, rhs: HalfInt) -> HalfInt {
        HalfInt(self.0 + rhs.0)
    }
}

impl std::ops::Sub for HalfInt {
    type Output = HalfInt;
    fn sub(self, rhs: HalfInt) -> HalfInt {
        HalfInt(self.0 - rhs.0)
    }
}

impl fmt::Display for HalfInt {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_integer() {
            write!(f, "{}", self.0 / 2)
        } else {
            write!(f, "{}/2", self.0)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn projections() {
        let j = HalfInt::from_twice(3);
        assert!(j.admits_projection(HalfInt::from_twice(-1)));
        assert!(j.admits_projection(HalfInt::from_twice(3)));
        assert!(!j.admits_projection(HalfInt::from_twice(5)));
        assert!(!j.admits_projection(HalfInt::int(1)));
        assert_eq!(j.to_string(), "3/2");
        assert_eq!(HalfInt::int(2).to_string(), "2");
    }
}
