use serde::{Deserialize, Serialize};

use super::PesError;

/// Radial coefficient `v(R)` of one expansion term, R in bohr, v in cm⁻¹.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "form", rename_all = "snake_case")]
pub enum RadialFunction {
    /// `a e^{-beta R} - c6 / R^6`
    ExpDispersion { a: f64, beta: f64, c6: f64 },
    /// Monotone cubic interpolation through knots with a `C/R^n` tail beyond
    /// the last knot.
    Tabulated(TabulatedRadial),
}

impl RadialFunction {
    /// Exp-6 well with minimum exactly `-depth` at `r_min` and steepness `alpha`.
    pub fn from_well(depth: f64, r_min: f64, alpha: f64) -> Self {
        assert!(alpha > 6.0, "exp-6 steepness must exceed 6");
        let a = depth * 6.0 / (alpha - 6.0) * alpha.exp();
        let c6 = depth * alpha / (alpha - 6.0) * r_min.powi(6);
        RadialFunction::ExpDispersion {
            a,
            beta: alpha / r_min,
            c6,
        }
    }

    pub fn scaled(&self, factor: f64) -> Self {
        match self {
            RadialFunction::ExpDispersion { a, beta, c6 } => RadialFunction::ExpDispersion {
                a: a * factor,
                beta: *beta,
                c6: c6 * factor,
            },
            RadialFunction::Tabulated(t) => {
                let values = t.values.iter().map(|v| v * factor).collect();
                RadialFunction::Tabulated(
                    TabulatedRadial::new(t.r.clone(), values, t.tail_power).expect("scaling keeps a valid table"),
                )
            }
        }
    }

    pub fn value(&self, r: f64) -> Result<f64, PesError> {
        match self {
            RadialFunction::ExpDispersion { a, beta, c6 } => {
                if !(r > 0.0) {
                    return Err(PesError::NonPositiveDistance(r));
                }
                Ok(a * (-beta * r).exp() - c6 / r.powi(6))
            }
            RadialFunction::Tabulated(t) => t.value(r),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "TabulatedRaw", into = "TabulatedRaw")]
pub struct TabulatedRadial {
    r: Vec<f64>,
    values: Vec<f64>,
    slopes: Vec<f64>,
    tail_power: i32,
    tail_coeff: f64,
}

#[derive(Clone, Serialize, Deserialize)]
struct TabulatedRaw {
    r: Vec<f64>,
    values: Vec<f64>,
    #[serde(default = "default_tail_power")]
    tail_power: i32,
}

fn default_tail_power() -> i32 {
    6
}

impl TryFrom<TabulatedRaw> for TabulatedRadial {
    type Error = PesError;
    fn try_from(raw: TabulatedRaw) -> Result<Self, PesError> {
        TabulatedRadial::new(raw.r, raw.values, raw.tail_power)
    }
}

impl From<TabulatedRadial> for TabulatedRaw {
    fn from(t: TabulatedRadial) -> Self {
        TabulatedRaw {
            r: t.r,
            values: t.values,
            tail_power: t.tail_power,
        }
    }
}

impl TabulatedRadial {
    pub fn new(r: Vec<f64>, values: Vec<f64>, tail_power: i32) -> Result<Self, PesError> {
        if r.len() != values.len() || r.len() < 2 {
            return Err(PesError::InvalidTable("need at least two knots with matching values".into()));
        }
        if !r.windows(2).all(|w| w[0] < w[1]) || r[0] <= 0.0 {
            return Err(PesError::InvalidTable("knots must be positive and strictly increasing".into()));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(PesError::InvalidTable("non-finite value".into()));
        }
        if tail_power <= 3 {
            return Err(PesError::InvalidTable("tail power must exceed 3".into()));
        }
        let slopes = pchip_slopes(&r, &values);
        let last = r.len() - 1;
        let tail_coeff = values[last] * r[last].powi(tail_power);
        Ok(TabulatedRadial {
            r,
            values,
            slopes,
            tail_power,
            tail_coeff,
        })
    }

    pub fn knots(&self) -> (&[f64], &[f64]) {
        (&self.r, &self.values)
    }

    pub fn value(&self, x: f64) -> Result<f64, PesError> {
        let n = self.r.len();
        if x < self.r[0] {
            return Err(PesError::BelowTabulatedRange { r: x, first: self.r[0] });
        }
        if x > self.r[n - 1] {
            return Ok(self.tail_coeff / x.powi(self.tail_power));
        }
        let k = match self.r.binary_search_by(|p| p.total_cmp(&x)) {
            Ok(i) => return Ok(self.values[i]),
            Err(i) => i - 1,
        };
        let h = self.r[k + 1] - self.r[k];
        let t = (x - self.r[k]) / h;
        let (t2, t3) = (t * t, t * t * t);
        let h00 = 2.0 * t3 - 3.0 * t2 + 1.0;
        let h10 = t3 - 2.0 * t2 + t;
        let h01 = -2.0 * t3 + 3.0 * t2;
        let h11 = t3 - t2;
        Ok(h00 * self.values[k] + h10 * h * self.slopes[k] + h01 * self.values[k + 1] + h11 * h * self.slopes[k + 1])
    }
}

/// Fritsch-Butland slopes with shape-preserving one-sided end conditions.
fn pchip_slopes(x: &[f64], y: &[f64]) -> Vec<f64> {
    let n = x.len();
    let h: Vec<f64> = x.windows(2).map(|w| w[1] - w[0]).collect();
    let delta: Vec<f64> = (0..n - 1).map(|k| (y[k + 1] - y[k]) / h[k]).collect();
    if n == 2 {
        return vec![delta[0], delta[0]];
    }
    let mut d = vec![0.0; n];
    for k in 1..n - 1 {
        let (a, b) = (delta[k - 1], delta[k]);
        if a == 0.0 || b == 0.0 || a.signum() != b.signum() {
            d[k] = 0.0;
        } else {
            let w1 = 2.0 * h[k] + h[k - 1];
            let w2 = h[k] + 2.0 * h[k - 1];
            d[k] = (w1 + w2) / (w1 / a + w2 / b);
        }
    }
    let end = |h0: f64, h1: f64, m0: f64, m1: f64| {
        let d = ((2.0 * h0 + h1) * m0 - h0 * m1) / (h0 + h1);
        if d.signum() != m0.signum() {
            0.0
        } else if m0.signum() != m1.signum() && d.abs() > 3.0 * m0.abs() {
            3.0 * m0
        } else {
            d
        }
    };
    d[0] = end(h[0], h[1], delta[0], delta[1]);
    d[n - 1] = end(h[n - 2], h[n - 3], delta[n - 2], delta[n - 3]);
    d
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exp6_minimum_is_exact() {
        let f = RadialFunction::from_well(88.5, 7.5, 13.0);
        assert!((f.value(7.5).unwrap() + 88.5).abs() < 1e-9);
        let lo = f.value(7.5 - 1e-4).unwrap();
        let hi = f.value(7.5 + 1e-4).unwrap();
        assert!(lo > -88.5 && hi > -88.5);
    }

    #[test]
    fn pchip_reproduces_knots_and_stays_monotone() {
        let r = vec![3.0, 4.0, 5.0, 7.0, 10.0, 15.0];
        let v = vec![500.0, 100.0, 10.0, -50.0, -10.0, -1.0];
        let t = TabulatedRadial::new(r.clone(), v.clone(), 6).unwrap();
        for (x, y) in r.iter().zip(&v) {
            assert_eq!(t.value(*x).unwrap(), *y);
        }
        let mut prev = t.value(3.0).unwrap();
        let mut x: f64 = 3.0;
        while x < 7.0 {
            x += 0.01;
            let y = t.value(x.min(7.0)).unwrap();
            assert!(y <= prev + 1e-12);
            prev = y;
        }
        assert!(matches!(t.value(2.9), Err(PesError::BelowTabulatedRange { .. })));
        assert!((t.value(30.0).unwrap() + 1.0 * (15.0f64 / 30.0).powi(6)).abs() < 1e-15);
    }
}
