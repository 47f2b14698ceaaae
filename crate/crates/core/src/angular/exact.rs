//! Exact arithmetic backing the Wigner symbols: prime-factorized square-root
//! prefactors and big-rational alternating sums.

use std::sync::LazyLock;

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

/// Largest factorial argument available to the exact path.
pub(crate) const MAX_FACTORIAL: usize = 640;

static PRIMES: LazyLock<Vec<u32>> = LazyLock::new(|| {
    let n = MAX_FACTORIAL + 1;
    let mut sieve = vec![true; n + 1];
    sieve[0] = false;
    sieve[1] = false;
    let mut i = 2;
    while i * i <= n {
        if sieve[i] {
            let mut k = i * i;
            while k <= n {
                sieve[k] = false;
                k += i;
            }
        }
        i += 1;
    }
    (0..=n).filter(|&k| sieve[k]).map(|k| k as u32).collect()
});

static FACTORIALS: LazyLock<Vec<BigInt>> = LazyLock::new(|| {
    let mut out = Vec::with_capacity(MAX_FACTORIAL + 1);
    let mut acc = BigInt::one();
    out.push(acc.clone());
    for k in 1..=MAX_FACTORIAL {
        acc *= k;
        out.push(acc.clone());
    }
    out
});

pub(crate) fn factorial(n: i64) -> &'static BigInt {
    &FACTORIALS[n as usize]
}

/// A rational number stored as exponents over the primes up to `MAX_FACTORIAL`.
#[derive(Clone, Debug)]
pub(crate) struct PrimeExponents(Vec<i32>);

impl PrimeExponents {
    pub fn one() -> Self {
        PrimeExponents(vec![0; PRIMES.len()])
    }

    /// Multiply by `n!` (`sign = 1`) or divide by it (`sign = -1`).
    pub fn mul_factorial(&mut self, n: i64, sign: i32) {
        debug_assert!(n >= 0 && n as usize <= MAX_FACTORIAL);
        let n = n as u64;
        for (idx, &p) in PRIMES.iter().enumerate() {
            let p = p as u64;
            if p > n {
                break;
            }
            let mut e = 0u64;
            let mut q = p;
            while q <= n {
                e += n / q;
                q *= p;
            }
            self.0[idx] += sign * e as i32;
        }
    }

    /// Split `sqrt(self)` into a rational factor and a square-free integer
    /// radicand: `sqrt(self) = outer * sqrt(radicand)`.
    pub fn sqrt_split(&self) -> (BigRational, BigUint) {
        let mut num = BigUint::one();
        let mut den = BigUint::one();
        let mut radicand = BigUint::one();
        for (&e, &p) in self.0.iter().zip(PRIMES.iter()) {
            if e == 0 {
                continue;
            }
            let half = e.div_euclid(2);
            let rem = e.rem_euclid(2);
            if half > 0 {
                num *= BigUint::from(p).pow(half as u32);
            } else if half < 0 {
                den *= BigUint::from(p).pow((-half) as u32);
            }
            if rem == 1 {
                radicand *= p;
            }
        }
        (
            BigRational::new(BigInt::from(num), BigInt::from(den)),
            radicand,
        )
    }
}

/// `coeff * sqrt(radicand)` with a square-free positive integer radicand.
#[derive(Clone, Debug)]
pub struct SqrtRational {
    pub coeff: BigRational,
    pub radicand: BigUint,
}

impl SqrtRational {
    pub fn zero() -> Self {
        SqrtRational {
            coeff: BigRational::zero(),
            radicand: BigUint::one(),
        }
    }

    pub fn is_zero(&self) -> bool {
        self.coeff.is_zero()
    }

    /// The exact square of the value, with its sign.
    pub fn signed_square(&self) -> (i32, BigRational) {
        let sign = if self.coeff.is_negative() {
            -1
        } else if self.coeff.is_zero() {
            0
        } else {
            1
        };
        let sq = &self.coeff * &self.coeff * BigRational::from_integer(BigInt::from(self.radicand.clone()));
        (sign, sq)
    }

    pub fn to_f64(&self) -> f64 {
        if self.coeff.is_zero() {
            return 0.0;
        }
        let c = rational_to_f64(&self.coeff);
        let r = self.radicand.to_f64().unwrap_or(f64::INFINITY);
        c * r.sqrt()
    }
}

/// Correctly scaled conversion that survives numerators and denominators
/// beyond the f64 range.
pub(crate) fn rational_to_f64(r: &BigRational) -> f64 {
    if r.is_zero() {
        return 0.0;
    }
    if let Some(v) = r.to_f64() {
        if v.is_finite() && v != 0.0 {
            return v;
        }
    }
    let sign = if r.is_negative() { -1.0 } else { 1.0 };
    let num = r.numer().abs();
    let den = r.denom().abs();
    let shift = num.bits() as i64 - den.bits() as i64;
    // Bring the quotient into [2^52, 2^54) before the division.
    let scale = 53 - shift;
    let q = if scale >= 0 {
        (num << scale as usize) / den
    } else {
        num / (den << (-scale) as usize)
    };
    sign * q.to_f64().unwrap_or(f64::NAN) * 2f64.powi(-scale as i32)
}

/// Exact alternating sum `sum_k (-1)^k num_k / den_k` where each term is a
/// ratio of factorial products.
pub(crate) fn alternating_sum<I>(terms: I) -> BigRational
where
    I: IntoIterator<Item = (i64, Vec<i64>, Vec<i64>)>,
{
    let mut acc = BigRational::zero();
    for (k, num_facts, den_facts) in terms {
        let mut num = BigInt::one();
        for n in num_facts {
            num *= factorial(n);
        }
        let mut den = BigInt::one();
        for n in den_facts {
            den *= factorial(n);
        }
        let term = BigRational::new(num, den);
        if k % 2 == 0 {
            acc += term;
        } else {
            acc -= term;
        }
    }
    acc
}

static LN_FACTORIALS: LazyLock<Vec<f64>> = LazyLock::new(|| {
    let mut out = Vec::with_capacity(8193);
    let mut acc = 0.0f64;
    out.push(0.0);
    for k in 1..=8192usize {
        acc += (k as f64).ln();
        out.push(acc);
    }
    out
});

pub(crate) fn ln_factorial(n: i64) -> f64 {
    let n = n as usize;
    if n < LN_FACTORIALS.len() {
        LN_FACTORIALS[n]
    } else {
        // Stirling series beyond the table.
        let x = n as f64 + 1.0;
        (x - 0.5) * x.ln() - x + 0.5 * (2.0 * std::f64::consts::PI).ln() + 1.0 / (12.0 * x)
            - 1.0 / (360.0 * x.powi(3))
    }
}
