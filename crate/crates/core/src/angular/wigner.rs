//! Wigner 3j, 6j and 9j symbols.
//!
//! Arguments with every `2j <= EXACT_TWICE_LIMIT` go through exact
//! prime-factorized rational arithmetic and are rounded to `f64` once at the
//! end. Larger arguments use a log-factorial floating-point evaluation of the
//! same single-sum formulas. Results are memoized on canonicalized arguments.

use std::collections::HashMap;
use std::sync::{LazyLock, RwLock};

use num_rational::BigRational;
use num_traits::{One, Zero};

use super::exact::{alternating_sum, ln_factorial, PrimeExponents, SqrtRational};
use super::{AngularError, HalfInt};

/// Above this doubled angular momentum the floating-point path is used.
pub const EXACT_TWICE_LIMIT: i32 = 100;

type Cache<const N: usize> = LazyLock<RwLock<HashMap<[i32; N], f64>>>;

static CACHE_3J: Cache<6> = LazyLock::new(|| RwLock::new(HashMap::new()));
static CACHE_6J: Cache<6> = LazyLock::new(|| RwLock::new(HashMap::new()));
static CACHE_9J: Cache<9> = LazyLock::new(|| RwLock::new(HashMap::new()));

pub fn clear_caches() {
    CACHE_3J.write().unwrap().clear();
    CACHE_6J.write().unwrap().clear();
    CACHE_9J.write().unwrap().clear();
}

fn cached<const N: usize>(cache: &Cache<N>, key: [i32; N], compute: impl FnOnce() -> f64) -> f64 {
    if let Some(&v) = cache.read().unwrap().get(&key) {
        return v;
    }
    let v = compute();
    // Concurrent writers can only insert the same deterministic value.
    cache.write().unwrap().insert(key, v);
    v
}

fn check_magnitude(j: HalfInt) -> Result<(), AngularError> {
    if j.twice() < 0 {
        Err(AngularError::NegativeMagnitude(j))
    } else {
        Ok(())
    }
}

/// Triangle rule on doubled values, including integrality of the sum.
pub(crate) fn triangle(a: i32, b: i32, c: i32) -> bool {
    c >= (a - b).abs() && c <= a + b && (a + b + c) % 2 == 0
}

fn phase(twice_exponent: i32) -> i32 {
    debug_assert!(twice_exponent % 2 == 0);
    if (twice_exponent / 2).rem_euclid(2) == 0 {
        1
    } else {
        -1
    }
}

fn triangle_factor(e: &mut PrimeExponents, a: i32, b: i32, c: i32) {
    e.mul_factorial(((a + b - c) / 2) as i64, 1);
    e.mul_factorial(((a - b + c) / 2) as i64, 1);
    e.mul_factorial(((-a + b + c) / 2) as i64, 1);
    e.mul_factorial(((a + b + c) / 2 + 1) as i64, -1);
}

fn ln_triangle(a: i32, b: i32, c: i32) -> f64 {
    ln_factorial(((a + b - c) / 2) as i64) + ln_factorial(((a - b + c) / 2) as i64)
        + ln_factorial(((-a + b + c) / 2) as i64)
        - ln_factorial(((a + b + c) / 2 + 1) as i64)
}

// ---------------------------------------------------------------- 3j

/// Wigner 3j symbol `(j1 j2 j3; m1 m2 m3)`.
pub fn wigner_3j(
    j1: HalfInt,
    j2: HalfInt,
    j3: HalfInt,
    m1: HalfInt,
    m2: HalfInt,
    m3: HalfInt,
) -> Result<f64, AngularError> {
    for (j, m) in [(j1, m1), (j2, m2), (j3, m3)] {
        check_magnitude(j)?;
        if !j.admits_projection(m) {
            return Err(AngularError::InvalidProjection { j, m });
        }
    }
    let (tj, tm) = ([j1.twice(), j2.twice(), j3.twice()], [m1.twice(), m2.twice(), m3.twice()]);
    if !triangle(tj[0], tj[1], tj[2]) || tm.iter().sum::<i32>() != 0 {
        return Ok(0.0);
    }
    if tm == [0, 0, 0] && (tj.iter().sum::<i32>() / 2) % 2 == 1 {
        return Ok(0.0);
    }
    let (key, sign) = canonical_3j(tj, tm);
    let value = cached(&CACHE_3J, key, || {
        let (j, m) = ([key[0], key[1], key[2]], [key[3], key[4], key[5]]);
        if j.iter().all(|&x| x <= EXACT_TWICE_LIMIT) {
            three_j_exact_raw(j, m).to_f64()
        } else {
            three_j_float(j, m)
        }
    });
    Ok(sign as f64 * value)
}

/// Integer-argument convenience for `(a b c; 0 0 0)`.
pub fn wigner_3j_zero(a: u32, b: u32, c: u32) -> f64 {
    wigner_3j(
        HalfInt::from(a),
        HalfInt::from(b),
        HalfInt::from(c),
        HalfInt::ZERO,
        HalfInt::ZERO,
        HalfInt::ZERO,
    )
    .expect("zero projections are always valid")
}

/// Exact 3j value for arguments within the exact range.
pub fn wigner_3j_exact(
    j1: HalfInt,
    j2: HalfInt,
    j3: HalfInt,
    m1: HalfInt,
    m2: HalfInt,
    m3: HalfInt,
) -> Result<SqrtRational, AngularError> {
    for (j, m) in [(j1, m1), (j2, m2), (j3, m3)] {
        check_magnitude(j)?;
        if !j.admits_projection(m) {
            return Err(AngularError::InvalidProjection { j, m });
        }
        if j.twice() > EXACT_TWICE_LIMIT {
            return Err(AngularError::BeyondExactRange(j));
        }
    }
    let (tj, tm) = ([j1.twice(), j2.twice(), j3.twice()], [m1.twice(), m2.twice(), m3.twice()]);
    if !triangle(tj[0], tj[1], tj[2]) || tm.iter().sum::<i32>() != 0 {
        return Ok(SqrtRational::zero());
    }
    Ok(three_j_exact_raw(tj, tm))
}

/// Canonical representative under column permutations and `m -> -m`.
fn canonical_3j(tj: [i32; 3], tm: [i32; 3]) -> ([i32; 6], i32) {
    const PERMS: [([usize; 3], bool); 6] = [
        ([0, 1, 2], false),
        ([1, 2, 0], false),
        ([2, 0, 1], false),
        ([1, 0, 2], true),
        ([0, 2, 1], true),
        ([2, 1, 0], true),
    ];
    let odd_sign = phase(tj.iter().sum());
    let mut best: Option<([i32; 6], i32)> = None;
    for (p, odd) in PERMS {
        for flip in [false, true] {
            let s = if flip { -1 } else { 1 };
            let key = [
                tj[p[0]],
                tj[p[1]],
                tj[p[2]],
                s * tm[p[0]],
                s * tm[p[1]],
                s * tm[p[2]],
            ];
            let sign = if odd ^ flip { odd_sign } else { 1 };
            if best.map_or(true, |(b, _)| key > b) {
                best = Some((key, sign));
            }
        }
    }
    best.unwrap()
}

fn three_j_k_range(tj: [i32; 3], tm: [i32; 3]) -> (i32, i32) {
    let k_min = 0
        .max((tj[1] - tj[2] - tm[0]) / 2)
        .max((tj[0] - tj[2] + tm[1]) / 2);
    let k_max = ((tj[0] + tj[1] - tj[2]) / 2)
        .min((tj[0] - tm[0]) / 2)
        .min((tj[1] + tm[1]) / 2);
    (k_min, k_max)
}

fn three_j_denominators(tj: [i32; 3], tm: [i32; 3], k: i32) -> [i64; 6] {
    [
        k as i64,
        ((tj[2] - tj[1] + tm[0]) / 2 + k) as i64,
        ((tj[2] - tj[0] - tm[1]) / 2 + k) as i64,
        ((tj[0] + tj[1] - tj[2]) / 2 - k) as i64,
        ((tj[0] - tm[0]) / 2 - k) as i64,
        ((tj[1] + tm[1]) / 2 - k) as i64,
    ]
}

fn three_j_exact_raw(tj: [i32; 3], tm: [i32; 3]) -> SqrtRational {
    let mut pref = PrimeExponents::one();
    triangle_factor(&mut pref, tj[0], tj[1], tj[2]);
    for i in 0..3 {
        pref.mul_factorial(((tj[i] + tm[i]) / 2) as i64, 1);
        pref.mul_factorial(((tj[i] - tm[i]) / 2) as i64, 1);
    }
    let (k_min, k_max) = three_j_k_range(tj, tm);
    if k_min > k_max {
        return SqrtRational::zero();
    }
    let sum = alternating_sum(
        (k_min..=k_max).map(|k| (k as i64, vec![], three_j_denominators(tj, tm, k).to_vec())),
    );
    let (outer, radicand) = pref.sqrt_split();
    let sign = phase(tj[0] - tj[1] - tm[2]);
    let mut coeff = outer * sum;
    if sign < 0 {
        coeff = -coeff;
    }
    SqrtRational { coeff, radicand }
}

fn three_j_float(tj: [i32; 3], tm: [i32; 3]) -> f64 {
    let mut ln_pref = ln_triangle(tj[0], tj[1], tj[2]);
    for i in 0..3 {
        ln_pref += ln_factorial(((tj[i] + tm[i]) / 2) as i64);
        ln_pref += ln_factorial(((tj[i] - tm[i]) / 2) as i64);
    }
    let half = 0.5 * ln_pref;
    let (k_min, k_max) = three_j_k_range(tj, tm);
    let mut sum = 0.0;
    for k in k_min..=k_max {
        let ln_den: f64 = three_j_denominators(tj, tm, k).iter().map(|&n| ln_factorial(n)).sum();
        let term = (half - ln_den).exp();
        sum += if k % 2 == 0 { term } else { -term };
    }
    phase(tj[0] - tj[1] - tm[2]) as f64 * sum
}

// ---------------------------------------------------------------- 6j

/// Wigner 6j symbol `{j1 j2 j3; j4 j5 j6}`.
pub fn wigner_6j(
    j1: HalfInt,
    j2: HalfInt,
    j3: HalfInt,
    j4: HalfInt,
    j5: HalfInt,
    j6: HalfInt,
) -> Result<f64, AngularError> {
    let args = [j1, j2, j3, j4, j5, j6];
    for j in args {
        check_magnitude(j)?;
    }
    let t = args.map(|j| j.twice());
    if !six_j_triads_ok(t) {
        return Ok(0.0);
    }
    let key = canonical_6j(t);
    Ok(cached(&CACHE_6J, key, || {
        if key.iter().all(|&x| x <= EXACT_TWICE_LIMIT) {
            six_j_exact_raw(key).to_f64()
        } else {
            six_j_float(key)
        }
    }))
}

pub fn wigner_6j_exact(args: [HalfInt; 6]) -> Result<SqrtRational, AngularError> {
    for j in args {
        check_magnitude(j)?;
        if j.twice() > EXACT_TWICE_LIMIT {
            return Err(AngularError::BeyondExactRange(j));
        }
    }
    let t = args.map(|j| j.twice());
    if !six_j_triads_ok(t) {
        return Ok(SqrtRational::zero());
    }
    Ok(six_j_exact_raw(t))
}

fn six_j_triads_ok(t: [i32; 6]) -> bool {
    triangle(t[0], t[1], t[2])
        && triangle(t[0], t[4], t[5])
        && triangle(t[3], t[1], t[5])
        && triangle(t[3], t[4], t[2])
}

/// Smallest representative among the 24 tetrahedral symmetries.
fn canonical_6j(t: [i32; 6]) -> [i32; 6] {
    const PERMS: [[usize; 3]; 6] = [[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]];
    // Swapping upper/lower entries in two columns.
    const SWAPS: [[bool; 3]; 4] = [
        [false, false, false],
        [true, true, false],
        [true, false, true],
        [false, true, true],
    ];
    let mut best = t;
    for p in PERMS {
        for s in SWAPS {
            let mut key = [0; 6];
            for col in 0..3 {
                let (up, low) = (t[p[col]], t[p[col] + 3]);
                let (up, low) = if s[col] { (low, up) } else { (up, low) };
                key[col] = up;
                key[col + 3] = low;
            }
            if key < best {
                best = key;
            }
        }
    }
    best
}

fn six_j_sum_terms(t: [i32; 6]) -> Vec<(i64, Vec<i64>, Vec<i64>)> {
    let [a, b, c, d, e, f] = t;
    let triads = [(a + b + c) / 2, (a + e + f) / 2, (d + b + f) / 2, (d + e + c) / 2];
    let quads = [(a + b + d + e) / 2, (b + c + e + f) / 2, (c + a + f + d) / 2];
    let k_min = *triads.iter().max().unwrap();
    let k_max = *quads.iter().min().unwrap();
    (k_min..=k_max)
        .map(|k| {
            let mut den: Vec<i64> = triads.iter().map(|&x| (k - x) as i64).collect();
            den.extend(quads.iter().map(|&x| (x - k) as i64));
            (k as i64, vec![(k + 1) as i64], den)
        })
        .collect()
}

fn six_j_prefactor(t: [i32; 6]) -> PrimeExponents {
    let [a, b, c, d, e, f] = t;
    let mut pref = PrimeExponents::one();
    triangle_factor(&mut pref, a, b, c);
    triangle_factor(&mut pref, a, e, f);
    triangle_factor(&mut pref, d, b, f);
    triangle_factor(&mut pref, d, e, c);
    pref
}

fn six_j_exact_raw(t: [i32; 6]) -> SqrtRational {
    let sum = alternating_sum(six_j_sum_terms(t));
    let (outer, radicand) = six_j_prefactor(t).sqrt_split();
    SqrtRational {
        coeff: outer * sum,
        radicand,
    }
}

fn six_j_float(t: [i32; 6]) -> f64 {
    let [a, b, c, d, e, f] = t;
    let half = 0.5
        * (ln_triangle(a, b, c) + ln_triangle(a, e, f) + ln_triangle(d, b, f) + ln_triangle(d, e, c));
    let mut sum = 0.0;
    for (k, num, den) in six_j_sum_terms(t) {
        let ln_t: f64 = num.iter().map(|&n| ln_factorial(n)).sum::<f64>()
            - den.iter().map(|&n| ln_factorial(n)).sum::<f64>();
        let term = (half + ln_t).exp();
        sum += if k % 2 == 0 { term } else { -term };
    }
    sum
}

// ---------------------------------------------------------------- 9j

/// Wigner 9j symbol `{j1 j2 j3; j4 j5 j6; j7 j8 j9}` (row-major arguments).
pub fn wigner_9j(args: [HalfInt; 9]) -> Result<f64, AngularError> {
    for j in args {
        check_magnitude(j)?;
    }
    let t = args.map(|j| j.twice());
    if !nine_j_triads_ok(t) {
        return Ok(0.0);
    }
    // The transpose has the same value.
    let tr = [t[0], t[3], t[6], t[1], t[4], t[7], t[2], t[5], t[8]];
    let key = if tr < t { tr } else { t };
    Ok(cached(&CACHE_9J, key, || {
        if key.iter().all(|&x| x <= EXACT_TWICE_LIMIT) {
            nine_j_exact_raw(key).to_f64()
        } else {
            nine_j_float(key)
        }
    }))
}

pub fn wigner_9j_exact(args: [HalfInt; 9]) -> Result<SqrtRational, AngularError> {
    for j in args {
        check_magnitude(j)?;
        if j.twice() > EXACT_TWICE_LIMIT {
            return Err(AngularError::BeyondExactRange(j));
        }
    }
    let t = args.map(|j| j.twice());
    if !nine_j_triads_ok(t) {
        return Ok(SqrtRational::zero());
    }
    Ok(nine_j_exact_raw(t))
}

fn nine_j_triads_ok(t: [i32; 9]) -> bool {
    (0..3).all(|r| triangle(t[3 * r], t[3 * r + 1], t[3 * r + 2]))
        && (0..3).all(|c| triangle(t[c], t[c + 3], t[c + 6]))
}

/// Range of doubled `x` in the single-sum reduction over 6j products.
fn nine_j_x_range(t: [i32; 9]) -> impl Iterator<Item = i32> {
    let [a, b, _c, d, _e, f, _g, h, i] = t;
    let lo = (a - i).abs().max((d - h).abs()).max((b - f).abs());
    let hi = (a + i).min(d + h).min(b + f);
    (lo..=hi).step_by(2)
}

fn nine_j_exact_raw(t: [i32; 9]) -> SqrtRational {
    let [a, b, c, d, e, f, g, h, i] = t;
    // 9j = sqrt(prod of the six row/column triangle factors)
    //      * sum_x (-1)^{2x} (2x+1) D(a,i,x) D(f,b,x) D(d,h,x) R1 R2 R3
    // where R are the Racah sums of the three 6j factors and D the triangle
    // factors that appear squared.
    let mut pref = PrimeExponents::one();
    triangle_factor(&mut pref, a, b, c);
    triangle_factor(&mut pref, d, e, f);
    triangle_factor(&mut pref, g, h, i);
    triangle_factor(&mut pref, a, d, g);
    triangle_factor(&mut pref, b, e, h);
    triangle_factor(&mut pref, c, f, i);

    let mut total = BigRational::zero();
    for x in nine_j_x_range(t) {
        let s1 = [a, b, c, f, i, x];
        let s2 = [d, e, f, b, x, h];
        let s3 = [g, h, i, x, a, d];
        if !(six_j_triads_ok(s1) && six_j_triads_ok(s2) && six_j_triads_ok(s3)) {
            continue;
        }
        let r = alternating_sum(six_j_sum_terms(s1))
            * alternating_sum(six_j_sum_terms(s2))
            * alternating_sum(six_j_sum_terms(s3));
        if r.is_zero() {
            continue;
        }
        let mut dsq = PrimeExponents::one();
        for _ in 0..2 {
            triangle_factor(&mut dsq, a, i, x);
            triangle_factor(&mut dsq, f, b, x);
            triangle_factor(&mut dsq, d, h, x);
        }
        let (outer, radicand) = dsq.sqrt_split();
        debug_assert!(radicand.is_one());
        let mut term = r * outer * BigRational::from_integer((x + 1).into());
        if x % 2 != 0 {
            term = -term;
        }
        total += term;
    }
    let (outer, radicand) = pref.sqrt_split();
    SqrtRational {
        coeff: outer * total,
        radicand,
    }
}

fn nine_j_float(t: [i32; 9]) -> f64 {
    let [a, b, c, d, e, f, g, h, i] = t;
    let mut total = 0.0;
    for x in nine_j_x_range(t) {
        let s1 = [a, b, c, f, i, x];
        let s2 = [d, e, f, b, x, h];
        let s3 = [g, h, i, x, a, d];
        if !(six_j_triads_ok(s1) && six_j_triads_ok(s2) && six_j_triads_ok(s3)) {
            continue;
        }
        let sign = if x % 2 != 0 { -1.0 } else { 1.0 };
        total += sign * (x + 1) as f64 * six_j_float(s1) * six_j_float(s2) * six_j_float(s3);
    }
    total
}

#[cfg(test)]
mod tests {
    use super::*;

    fn h(t: i32) -> HalfInt {
        HalfInt::from_twice(t)
    }

    fn j(v: i32) -> HalfInt {
        HalfInt::int(v)
    }

    #[test]
    fn three_j_known_values() {
        let v = wigner_3j(j(1), j(1), j(0), j(0), j(0), j(0)).unwrap();
        assert!((v + 1.0 / 3f64.sqrt()).abs() < 1e-15);
        let v = wigner_3j(j(1), j(1), j(2), j(0), j(0), j(0)).unwrap();
        assert!((v - (2.0f64 / 15.0).sqrt()).abs() < 1e-15);
        assert_eq!(wigner_3j(j(1), j(1), j(3), j(0), j(0), j(0)).unwrap(), 0.0);
        // m-sum violated
        assert_eq!(wigner_3j(j(1), j(1), j(2), j(1), j(0), j(0)).unwrap(), 0.0);
        let v = wigner_3j(h(1), h(1), j(1), h(1), h(-1), j(0)).unwrap();
        assert!((v - 1.0 / 6f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn three_j_rejects_bad_projection() {
        assert!(matches!(
            wigner_3j(j(1), j(1), j(0), j(2), j(-2), j(0)),
            Err(AngularError::InvalidProjection { .. })
        ));
        assert!(matches!(
            wigner_3j(j(1), j(1), j(0), h(1), h(-1), j(0)),
            Err(AngularError::InvalidProjection { .. })
        ));
    }

    #[test]
    fn six_j_known_values() {
        let v = wigner_6j(j(1), j(1), j(1), j(1), j(1), j(1)).unwrap();
        assert!((v - 1.0 / 6.0).abs() < 1e-15);
        // {0 b b; c d d} = (-1)^(b+c+d) / sqrt((2b+1)(2d+1))
        for (b, c, d) in [(1, 1, 1), (2, 1, 2), (3, 2, 2), (2, 3, 4)] {
            let v = wigner_6j(j(0), j(b), j(b), j(c), j(d), j(d)).unwrap();
            let sign = if (b + c + d) % 2 == 0 { 1.0 } else { -1.0 };
            let expect = sign / (((2 * b + 1) * (2 * d + 1)) as f64).sqrt();
            assert!((v - expect).abs() < 1e-15, "{b} {c} {d}: {v} vs {expect}");
        }
    }

    #[test]
    fn nine_j_with_zero_reduces_to_six_j() {
        // {a b e; c d e; f f 0} = (-1)^(b+c+e+f) / sqrt((2e+1)(2f+1)) {a b e; d c f}
        for (a, b, c, d, e, f) in [(1, 1, 1, 1, 1, 1), (2, 1, 1, 2, 2, 1), (3, 2, 2, 1, 2, 3), (2, 2, 2, 2, 2, 2)] {
            let nine = wigner_9j([j(a), j(b), j(e), j(c), j(d), j(e), j(f), j(f), j(0)]).unwrap();
            let six = wigner_6j(j(a), j(b), j(e), j(d), j(c), j(f)).unwrap();
            let sign = if (b + c + e + f) % 2 == 0 { 1.0 } else { -1.0 };
            let expect = sign * six / (((2 * e + 1) * (2 * f + 1)) as f64).sqrt();
            assert!((nine - expect).abs() < 1e-14, "{nine} vs {expect}");
        }
    }

    #[test]
    fn float_path_matches_exact_path() {
        let exact = three_j_exact_raw([40, 60, 80], [10, -30, 20]).to_f64();
        let float = three_j_float([40, 60, 80], [10, -30, 20]);
        assert!((exact - float).abs() < 1e-10 * exact.abs().max(1e-3));
        let exact = six_j_exact_raw([20, 30, 40, 24, 36, 30]).to_f64();
        let float = six_j_float([20, 30, 40, 24, 36, 30]);
        assert!((exact - float).abs() < 1e-10);
        let t = [4, 6, 8, 6, 4, 6, 6, 6, 4];
        let exact = nine_j_exact_raw(t).to_f64();
        assert!((exact - nine_j_float(t)).abs() < 1e-12 && exact != 0.0);
    }

    #[test]
    fn large_arguments_use_float_path() {
        // (j j 0; m -m 0) = (-1)^(j-m)/sqrt(2j+1)
        let v = wigner_3j(j(70), j(70), j(0), j(3), j(-3), j(0)).unwrap();
        let expect = -1.0 / 141f64.sqrt();
        assert!((v - expect).abs() < 1e-10);
    }
}
