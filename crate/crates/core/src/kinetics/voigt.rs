//! Voigt line shape through a rational approximation of the Faddeeva function.

use std::f64::consts::PI;
use std::sync::OnceLock;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

/// Gaussian standard deviation and Lorentzian half width, both in cm⁻¹.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct VoigtShape {
    pub gaussian_sigma: f64,
    pub lorentzian_gamma: f64,
}

impl VoigtShape {
    pub fn validate(&self) -> Result<(), String> {
        let (s, g) = (self.gaussian_sigma, self.lorentzian_gamma);
        if !(s >= 0.0 && g >= 0.0) || !s.is_finite() || !g.is_finite() || (s == 0.0 && g == 0.0) {
            return Err(format!("Voigt widths must be finite, non-negative and not both zero (σ={s}, γ={g})"));
        }
        Ok(())
    }

    /// Full width at half maximum (Olivero-Longbothum, about 0.02% accurate).
    pub fn fwhm(&self) -> f64 {
        let fl = 2.0 * self.lorentzian_gamma;
        let fg = 2.0 * self.gaussian_sigma * (2.0 * std::f64::consts::LN_2).sqrt();
        0.5346 * fl + (0.2166 * fl * fl + fg * fg).sqrt()
    }
}

/// Unit-area Voigt profile at offset `x` from the line center.
pub fn voigt_profile(x: f64, shape: &VoigtShape) -> f64 {
    let (s, g) = (shape.gaussian_sigma, shape.lorentzian_gamma);
    if s == 0.0 {
        return g / (PI * (x * x + g * g));
    }
    let scale = s * std::f64::consts::SQRT_2;
    if g == 0.0 {
        return (-(x / scale).powi(2)).exp() / (s * (2.0 * PI).sqrt());
    }
    let z = Complex64::new(x / scale, g / scale);
    faddeeva(z).re / (s * (2.0 * PI).sqrt())
}

const TERMS: usize = 40;
/// Beyond this modulus the asymptotic continued fraction is used.
const FAR: f64 = 12.0;

struct Weideman {
    l: f64,
    coeffs: [f64; TERMS],
}

/// Profile value and its derivatives `(V, ∂V/∂x, ∂V/∂σ, ∂V/∂γ)` from one
/// Faddeeva evaluation, using `w'(z) = -2 z w(z) + 2i/√π`. Needs `σ > 0`.
pub fn voigt_with_gradient(x: f64, shape: &VoigtShape) -> [f64; 4] {
    let (s, g) = (shape.gaussian_sigma, shape.lorentzian_gamma);
    debug_assert!(s > 0.0);
    let scale = s * std::f64::consts::SQRT_2;
    let norm = s * (2.0 * PI).sqrt();
    let z = Complex64::new(x / scale, g / scale);
    let w = faddeeva(z);
    let dw = -2.0 * z * w + Complex64::new(0.0, 2.0 / PI.sqrt());
    let v = w.re / norm;
    [
        v,
        dw.re / (scale * norm),
        -v / s - (dw * z).re / (s * norm),
        -dw.im / (scale * norm),
    ]
}

fn weideman() -> &'static Weideman {
    static TABLE: OnceLock<Weideman> = OnceLock::new();
    TABLE.get_or_init(|| {
        let n = TERMS;
        let m = 2 * n;
        let l = (n as f64 / std::f64::consts::SQRT_2).sqrt();
        // f_k = e^{-t²}(L² + t²), t = L tan(kπ/2M), k = -M+1 .. M-1 (f_{-M} = 0).
        let f = |k: i64| {
            let t = l * (k as f64 * PI / (2 * m) as f64).tan();
            (-t * t).exp() * (l * l + t * t)
        };
        let mut coeffs = [0.0; TERMS];
        for (idx, c) in coeffs.iter_mut().enumerate() {
            let j = (idx + 1) as f64;
            let mut s = 0.0;
            for k in -(m as i64) + 1..m as i64 {
                s += f(k) * (PI * k as f64 * j / m as f64).cos();
            }
            *c = s / (2 * m) as f64;
        }
        Weideman { l, coeffs }
    })
}

/// Faddeeva function `w(z) = e^{-z²} erfc(-iz)` for `Im z ≥ 0`.
pub fn faddeeva(z: Complex64) -> Complex64 {
    debug_assert!(z.im >= 0.0);
    let i = Complex64::i();
    if z.norm_sqr() > FAR * FAR {
        // Laplace continued fraction, evaluated bottom-up; eight levels
        // reach full precision beyond FAR.
        let mut tail = Complex64::new(0.0, 0.0);
        for k in (1..=8).rev() {
            tail = (k as f64 * 0.5) / (z - tail);
        }
        return i / (PI.sqrt() * (z - tail));
    }
    let w = weideman();
    let lz = w.l - i * z;
    let big_z = (w.l + i * z) / lz;
    let mut p = Complex64::new(0.0, 0.0);
    for &c in w.coeffs.iter().rev() {
        p = p * big_z + c;
    }
    2.0 * p / (lz * lz) + 1.0 / (PI.sqrt() * lz)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn faddeeva_special_values() {
        // w(0) = 1, w(iy) = e^{y²} erfc(y) is real.
        assert!((faddeeva(Complex64::new(0.0, 0.0)) - 1.0).norm() < 1e-12);
        let y = 1.0;
        let expect = 0.427_583_576_155_807; // e·erfc(1)
        assert!((faddeeva(Complex64::new(0.0, y)).re - expect).abs() < 1e-10);
        // Continuity across the switch to the continued fraction.
        for phase in [0.05, 0.4, 1.2] {
            let z1 = Complex64::from_polar(FAR * (1.0 - 1e-13), phase);
            let z2 = Complex64::from_polar(FAR * (1.0 + 1e-13), phase);
            assert!((faddeeva(z1) - faddeeva(z2)).norm() < 1e-10 * faddeeva(z1).norm());
        }
    }

    #[test]
    fn gradient_matches_differences() {
        let shape = VoigtShape {
            gaussian_sigma: 0.3,
            lorentzian_gamma: 0.2,
        };
        let h = 1e-6;
        for x in [-1.3, -0.1, 0.0, 0.4, 2.5] {
            let [v, dx, ds, dg] = voigt_with_gradient(x, &shape);
            assert!((v - voigt_profile(x, &shape)).abs() < 1e-15);
            let fd = |f: &dyn Fn(f64) -> f64| (f(h) - f(-h)) / (2.0 * h);
            let ex = fd(&|d| voigt_profile(x + d, &shape));
            let es = fd(&|d| voigt_profile(x, &VoigtShape { gaussian_sigma: 0.3 + d, ..shape }));
            let eg = fd(&|d| voigt_profile(x, &VoigtShape { lorentzian_gamma: 0.2 + d, ..shape }));
            for (a, b) in [(dx, ex), (ds, es), (dg, eg)] {
                assert!((a - b).abs() < 1e-7, "{a} vs {b}");
            }
        }
    }
}
