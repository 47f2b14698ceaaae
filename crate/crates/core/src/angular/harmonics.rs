use std::f64::consts::PI;

use num_complex::Complex64;

use super::clebsch_gordan;

/// Normalized associated Legendre function with the Condon-Shortley phase,
/// so that `Y_lm(θ, φ) = P̄_l^m(cos θ) e^{imφ}` for `m >= 0`.
pub fn legendre_normalized(l: u32, m: i32, x: f64) -> f64 {
    let am = m.unsigned_abs();
    if am > l {
        return 0.0;
    }
    let s = (1.0 - x * x).max(0.0).sqrt();
    let mut pmm = 1.0 / (4.0 * PI).sqrt();
    for k in 1..=am {
        let k = k as f64;
        pmm *= -((2.0 * k + 1.0) / (2.0 * k)).sqrt() * s;
    }
    let value = if l == am {
        pmm
    } else {
        let mf = am as f64;
        let mut prev = pmm;
        let mut cur = x * (2.0 * mf + 3.0).sqrt() * pmm;
        let mut a_prev = (2.0 * mf + 3.0).sqrt();
        for ll in (am + 2)..=l {
            let lf = ll as f64;
            let a = ((4.0 * lf * lf - 1.0) / (lf * lf - mf * mf)).sqrt();
            let next = a * (x * cur - prev / a_prev);
            prev = cur;
            cur = next;
            a_prev = a;
        }
        cur
    };
    if m < 0 && am % 2 == 1 {
        -value
    } else {
        value
    }
}

pub fn spherical_harmonic(l: u32, m: i32, theta: f64, phi: f64) -> Complex64 {
    let p = legendre_normalized(l, m, theta.cos());
    Complex64::from_polar(1.0, m as f64 * phi) * p
}

/// Body-fixed bispherical function `A_{l1 l2 l}(θ1, θ2, φ)`; see the module
/// documentation for the normalization.
pub fn bispherical(l1: u32, l2: u32, l: u32, theta1: f64, theta2: f64, phi: f64) -> f64 {
    let (c1, c2) = (theta1.cos(), theta2.cos());
    let (l1i, l2i, li) = (l1 as i32, l2 as i32, l as i32);
    let mut sum = clebsch_gordan(l1i, 0, l2i, 0, li, 0)
        * legendre_normalized(l1, 0, c1)
        * legendre_normalized(l2, 0, c2);
    for m in 1..=(l1.min(l2) as i32) {
        let cg = clebsch_gordan(l1i, m, l2i, -m, li, 0);
        if cg == 0.0 {
            continue;
        }
        let sign = if m % 2 == 0 { 1.0 } else { -1.0 };
        sum += 2.0
            * sign
            * cg
            * legendre_normalized(l1, m, c1)
            * legendre_normalized(l2, m, c2)
            * (m as f64 * phi).cos();
    }
    4.0 * PI / ((2 * l + 1) as f64).sqrt() * sum
}

/// `∫ A_{l1 l2 l}² d(cos θ1) d(cos θ2) dφ`
pub fn bispherical_norm(l: u32) -> f64 {
    8.0 * PI / (2 * l + 1) as f64
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn low_order_harmonics() {
        let (t, p) = (0.7, 1.3);
        let y10 = spherical_harmonic(1, 0, t, p);
        assert!((y10.re - (3.0 / (4.0 * PI)).sqrt() * t.cos()).abs() < 1e-15);
        let y11 = spherical_harmonic(1, 1, t, p);
        let expect = -(3.0 / (8.0 * PI)).sqrt() * t.sin();
        assert!((y11.re - expect * p.cos()).abs() < 1e-15);
        assert!((y11.im - expect * p.sin()).abs() < 1e-15);
        let y2m2 = spherical_harmonic(2, -2, t, p);
        let expect = 0.25 * (15.0 / (2.0 * PI)).sqrt() * t.sin().powi(2);
        assert!((y2m2.re - expect * (2.0 * p).cos()).abs() < 1e-14);
    }

    #[test]
    fn bispherical_special_cases() {
        let (t1, t2, p) = (0.4, 2.1, 0.9);
        assert!((bispherical(0, 0, 0, t1, t2, p) - 1.0).abs() < 1e-14);
        let p2 = 0.5 * (3.0 * t1.cos().powi(2) - 1.0);
        assert!((bispherical(2, 0, 2, t1, t2, p) - p2).abs() < 1e-14);
        assert!((bispherical(0, 1, 1, t1, t2, p) - t2.cos()).abs() < 1e-14);
    }
}
