//! Independent reference implementations used only by the test suites.
#![allow(dead_code)]

use std::f64::consts::PI;
use std::sync::OnceLock;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

fn fact_table() -> &'static [BigInt] {
    static TABLE: OnceLock<Vec<BigInt>> = OnceLock::new();
    TABLE.get_or_init(|| {
        let mut t = vec![BigInt::one()];
        for k in 1..=128 {
            let next = &t[k - 1] * k;
            t.push(next);
        }
        t
    })
}

fn fact(n: i32) -> BigInt {
    assert!(n >= 0);
    fact_table()[n as usize].clone()
}

/// n!/m! for n >= m.
fn falling(n: i32, m: i32) -> BigInt {
    debug_assert!(n >= m);
    (m + 1..=n).fold(BigInt::one(), |acc, k| acc * k)
}

fn tri(a: i32, b: i32, c: i32) -> bool {
    c >= (a - b).abs() && c <= a + b && (a + b + c) % 2 == 0
}

/// Triangle coefficient on doubled arguments.
fn delta(a: i32, b: i32, c: i32) -> BigRational {
    BigRational::new(
        fact((a + b - c) / 2) * fact((a - b + c) / 2) * fact((b + c - a) / 2),
        fact((a + b + c) / 2 + 1),
    )
}

/// Alternating sum Σ_k (-1)^k Π num(k)! / Π den(k)! over k in [lo, hi],
/// returned as an integer numerator over a common denominator.
fn alternating_sum(
    lo: i32,
    hi: i32,
    num: impl Fn(i32) -> Vec<i32>,
    den: impl Fn(i32) -> Vec<i32>,
) -> (BigInt, BigInt) {
    let slots = den(lo).len();
    let top: Vec<i32> = (0..slots).map(|i| (lo..=hi).map(|k| den(k)[i]).max().unwrap()).collect();
    let common = top.iter().fold(BigInt::one(), |acc, &n| acc * fact(n));
    let mut s = BigInt::zero();
    for k in lo..=hi {
        let mut term = num(k).iter().fold(BigInt::one(), |acc, &n| acc * fact(n));
        for (d, &t) in den(k).iter().zip(&top) {
            term *= falling(t, *d);
        }
        if k % 2 == 0 {
            s += term
        } else {
            s -= term
        }
    }
    (s, common)
}

/// `(s/d) * sqrt(p)` as f64, rounded once from the exact square.
fn signed_sqrt(s: &BigInt, d: &BigInt, p: &BigRational) -> f64 {
    if s.is_zero() {
        return 0.0;
    }
    let sq = BigRational::new(s * s * p.numer(), d * d * p.denom());
    let v = sq.to_f64().unwrap().sqrt();
    if s.is_negative() {
        -v
    } else {
        v
    }
}

/// Racah's formula for the 3j symbol, doubled arguments.
pub fn three_j(tj: [i32; 3], tm: [i32; 3]) -> f64 {
    for i in 0..3 {
        if tm[i].abs() > tj[i] || (tj[i] - tm[i]) % 2 != 0 {
            panic!("invalid projection");
        }
    }
    if !tri(tj[0], tj[1], tj[2]) || tm.iter().sum::<i32>() != 0 {
        return 0.0;
    }
    let [j1, j2, j3] = tj;
    let [m1, m2, m3] = tm;
    let mut p = delta(j1, j2, j3);
    for i in 0..3 {
        p *= BigRational::from_integer(fact((tj[i] + tm[i]) / 2) * fact((tj[i] - tm[i]) / 2));
    }
    let den = |k: i32| {
        vec![
            k,
            (j3 - j2 + m1) / 2 + k,
            (j3 - j1 - m2) / 2 + k,
            (j1 + j2 - j3) / 2 - k,
            (j1 - m1) / 2 - k,
            (j2 + m2) / 2 - k,
        ]
    };
    let lo = (0..=(j1 + j2 + j3)).find(|&k| den(k).iter().all(|&x| x >= 0));
    let Some(lo) = lo else { return 0.0 };
    let hi = (lo..=(j1 + j2 + j3)).take_while(|&k| den(k).iter().all(|&x| x >= 0)).last().unwrap();
    let (mut s, d) = alternating_sum(lo, hi, |_| Vec::new(), den);
    if ((j1 - j2 - m3) / 2).rem_euclid(2) == 1 {
        s = -s;
    }
    signed_sqrt(&s, &d, &p)
}

/// Racah sum and radicand of a 6j symbol: value = (s/d) * sqrt(p).
fn six_j_parts(t: [i32; 6]) -> Option<(BigInt, BigInt, BigRational)> {
    let [a, b, c, d, e, f] = t;
    if !(tri(a, b, c) && tri(a, e, f) && tri(d, b, f) && tri(d, e, c)) {
        return None;
    }
    let p = delta(a, b, c) * delta(a, e, f) * delta(d, b, f) * delta(d, e, c);
    let lo = [a + b + c, a + e + f, d + b + f, d + e + c].into_iter().max().unwrap() / 2;
    let hi = [a + b + d + e, b + c + e + f, c + a + f + d].into_iter().min().unwrap() / 2;
    let (s, dd) = alternating_sum(
        lo,
        hi,
        |k| vec![k + 1],
        |k| {
            vec![
                k - (a + b + c) / 2,
                k - (a + e + f) / 2,
                k - (d + b + f) / 2,
                k - (d + e + c) / 2,
                (a + b + d + e) / 2 - k,
                (b + c + e + f) / 2 - k,
                (c + a + f + d) / 2 - k,
            ]
        },
    );
    Some((s, dd, p))
}

/// Racah's formula for the 6j symbol, doubled arguments.
pub fn six_j(t: [i32; 6]) -> f64 {
    match six_j_parts(t) {
        Some((s, d, p)) => signed_sqrt(&s, &d, &p),
        None => 0.0,
    }
}

/// 9j symbol as a sum over products of three 6j symbols, doubled arguments,
/// accumulated in floating point.
pub fn nine_j(t: [i32; 9]) -> f64 {
    let [a, b, c, d, e, f, g, h, i] = t;
    let rows = tri(a, b, c) && tri(d, e, f) && tri(g, h, i);
    let cols = tri(a, d, g) && tri(b, e, h) && tri(c, f, i);
    if !(rows && cols) {
        return 0.0;
    }
    let mut sum = 0.0;
    let lo = (a - i).abs().max((d - h).abs()).max((b - f).abs());
    let hi = (a + i).min(d + h).min(b + f);
    let mut x = lo;
    while x <= hi {
        let sign = if x % 2 == 0 { 1.0 } else { -1.0 };
        sum += sign
            * (x + 1) as f64
            * six_j([a, b, c, f, i, x])
            * six_j([d, e, f, b, x, h])
            * six_j([g, h, i, x, a, d]);
        x += 2;
    }
    sum
}

/// 9j symbol evaluated exactly. In the three-6j sum every triangle
/// coefficient that depends on the summation index appears squared, so each
/// term is a rational multiple of one common radicand built from the six
/// row and column triads.
pub fn nine_j_exact(t: [i32; 9]) -> f64 {
    let [a, b, c, d, e, f, g, h, i] = t;
    let rows = tri(a, b, c) && tri(d, e, f) && tri(g, h, i);
    let cols = tri(a, d, g) && tri(b, e, h) && tri(c, f, i);
    if !(rows && cols) {
        return 0.0;
    }
    let radicand = delta(a, b, c) * delta(d, e, f) * delta(g, h, i) * delta(a, d, g) * delta(b, e, h) * delta(c, f, i);
    let mut sum = BigRational::zero();
    let lo = (a - i).abs().max((d - h).abs()).max((b - f).abs());
    let hi = (a + i).min(d + h).min(b + f);
    let mut x = lo;
    while x <= hi {
        let parts = [
            six_j_parts([a, b, c, f, i, x]),
            six_j_parts([d, e, f, b, x, h]),
            six_j_parts([g, h, i, x, a, d]),
        ];
        if parts.iter().all(Option::is_some) {
            let mut term = BigRational::from_integer(BigInt::from(x + 1));
            for (s, dd, _) in parts.into_iter().flatten() {
                term *= BigRational::new(s, dd);
            }
            term *= delta(a, i, x) * delta(b, f, x) * delta(d, h, x);
            if x % 2 == 0 {
                sum += term
            } else {
                sum -= term
            }
        }
        x += 2;
    }
    signed_sqrt(sum.numer(), sum.denom(), &radicand)
}

/// 6j by brute-force contraction of four 3j symbols over all projections,
/// integer arguments.
pub fn six_j_by_contraction(j: [i32; 6]) -> f64 {
    let [j1, j2, j3, j4, j5, j6] = j;
    let mut sum = 0.0;
    for m1 in -j1..=j1 {
        for m2 in -j2..=j2 {
            let m3 = -m1 - m2;
            if m3.abs() > j3 {
                continue;
            }
            for m6 in -j6..=j6 {
                let m5 = m1 + m6;
                let m4 = m6 - m2;
                if m5.abs() > j5 || m4.abs() > j4 {
                    continue;
                }
                // (-1)^{Σ(j-m)} (j1 j2 j3; -m1 -m2 -m3)(j1 j5 j6; m1 -m5 m6)
                //   (j4 j2 j6; m4 m2 -m6)(j4 j5 j3; -m4 m5 m3)
                let w = three_j([2 * j1, 2 * j2, 2 * j3], [-2 * m1, -2 * m2, -2 * m3])
                    * three_j([2 * j1, 2 * j5, 2 * j6], [2 * m1, -2 * m5, 2 * m6])
                    * three_j([2 * j4, 2 * j2, 2 * j6], [2 * m4, 2 * m2, -2 * m6])
                    * three_j([2 * j4, 2 * j5, 2 * j3], [-2 * m4, 2 * m5, 2 * m3]);
                let e = (j1 - m1) + (j2 - m2) + (j3 - m3) + (j4 - m4) + (j5 - m5) + (j6 - m6);
                sum += if e.rem_euclid(2) == 0 { w } else { -w };
            }
        }
    }
    sum
}

pub fn clebsch(j1: i32, m1: i32, j2: i32, m2: i32, j: i32, m: i32) -> f64 {
    let sign = if (j1 - j2 + m).rem_euclid(2) == 0 { 1.0 } else { -1.0 };
    sign * ((2 * j + 1) as f64).sqrt() * three_j([2 * j1, 2 * j2, 2 * j], [2 * m1, 2 * m2, -2 * m])
}

/// Gauss-Legendre nodes and weights on [-1, 1] (Golub-Welsch free variant by
/// Newton iteration from Chebyshev guesses).
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n {
        let mut z = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (z * p1 - p0) / (z * z - 1.0);
            let dz = p1 / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        x[i] = z;
        w[i] = 2.0 / ((1.0 - z * z) * dp * dp);
    }
    (x, w)
}

/// Spherical harmonic from the explicit finite-sum form of the associated
/// Legendre function (no recurrences), returned as (re, im).
pub fn ylm(l: i32, m: i32, cos_t: f64, phi: f64) -> (f64, f64) {
    let am = m.abs();
    let sin_t = (1.0 - cos_t * cos_t).max(0.0).sqrt();
    let f = |n: i32| (1..=n).fold(1.0f64, |a, k| a * k as f64);
    // P_l^m(x) = (-1)^m 2^l (1-x²)^{m/2} Σ_k k!/(k-m)! x^{k-m} C(l,k) C((l+k-1)/2, l)
    let mut sum = 0.0;
    for k in am..=l {
        let gen_binom = {
            let top = (l + k - 1) as f64 / 2.0;
            let mut b = 1.0;
            for i in 0..l {
                b *= (top - i as f64) / (i + 1) as f64;
            }
            b
        };
        let binom = f(l) / (f(k) * f(l - k));
        sum += f(k) / f(k - am) * cos_t.powi(k - am) * binom * gen_binom;
    }
    let mut p = 2f64.powi(l) * sin_t.powi(am) * sum;
    if am % 2 == 1 {
        p = -p;
    }
    let norm = ((2 * l + 1) as f64 / (4.0 * PI) * f(l - am) / f(l + am)).sqrt();
    let mut y = norm * p;
    if m < 0 && am % 2 == 1 {
        y = -y;
    }
    (y * (m as f64 * phi).cos(), y * (m as f64 * phi).sin())
}
