//! Riccati-Bessel functions for asymptotic matching.
//!
//! `ĵ_l(x) = x j_l(x) ~ sin(x - lπ/2)` and `n̂_l(x) = x y_l(x) ~ -cos(x - lπ/2)`,
//! with Wronskian `ĵ n̂' - ĵ' n̂ = 1`.

/// `(ĵ_l, ĵ_l', n̂_l, n̂_l')` at `x > 0`.
pub fn riccati(l: u32, x: f64) -> (f64, f64, f64, f64) {
    assert!(x > 0.0, "Riccati-Bessel argument must be positive");
    let (s, c) = x.sin_cos();
    // n̂ by upward recurrence (stable for the irregular solution).
    let mut n_prev = -c;
    let mut n_cur = -c / x - s;
    if l == 0 {
        let (j, jp) = (s, c);
        return (j, jp, n_prev, s);
    }
    for k in 1..l {
        let next = (2 * k + 1) as f64 / x * n_cur - n_prev;
        n_prev = n_cur;
        n_cur = next;
    }
    let n = n_cur;
    let np = n_prev - l as f64 / x * n;

    if (l as f64) < x {
        let mut j_prev = s;
        let mut j_cur = s / x - c;
        for k in 1..l {
            let next = (2 * k + 1) as f64 / x * j_cur - j_prev;
            j_prev = j_cur;
            j_cur = next;
        }
        let jp = j_prev - l as f64 / x * j_cur;
        return (j_cur, jp, n, np);
    }

    // Ratio r_k = ĵ_k / ĵ_{k-1} by downward recurrence, then the Wronskian.
    let top = l + 40 + (2.0 * x) as u32;
    let mut r = 0.0;
    for k in (l + 1..=top).rev() {
        r = 1.0 / ((2 * k + 1) as f64 / x - r);
    }
    // r now holds ĵ_{l+1}/ĵ_l; the log-derivative of ĵ_l is
    // (l+1)/x - ĵ_{l+1}/ĵ_l.
    let rho = (l + 1) as f64 / x - r;
    let j = 1.0 / (np - rho * n);
    (j, rho * j, n, np)
}

/// Log-derivative `d ln k̂_l / dx` of the exponentially decaying Riccati
/// function `k̂_l(x) ~ e^{-x}`.
pub fn decaying_logderiv(l: u32, x: f64) -> f64 {
    if l == 0 {
        return -1.0;
    }
    // q_k = k̂_{k-1} / k̂_k, q_1 = x/(x+1), q_{k+1} = 1/(q_k + (2k+1)/x).
    let mut q = x / (x + 1.0);
    for k in 1..l {
        q = 1.0 / (q + (2 * k + 1) as f64 / x);
    }
    -q - l as f64 / x
}

/// A solution value and its derivative stored as `e^s (m, dm)` so that
/// functions far beyond the floating-point range stay representable.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Scaled {
    pub s: f64,
    pub m: f64,
    pub dm: f64,
}

const RESCALE: f64 = 1e150;

/// Two independent solutions `(u, v)` of `f'' = (l(l+1)/r² + p) f` at `r > 0`,
/// with `u` the one that grows outward from the origin. Derivatives are
/// with respect to `r`. Normalizations are arbitrary but fixed per `(l, p)`.
pub fn reference_pair(l: u32, p: f64, r: f64) -> (Scaled, Scaled) {
    let lf = l as f64;
    if p == 0.0 {
        let u = Scaled {
            s: (lf + 1.0) * r.ln(),
            m: 1.0,
            dm: (lf + 1.0) / r,
        };
        let v = Scaled {
            s: -lf * r.ln(),
            m: 1.0,
            dm: -lf / r,
        };
        return (u, v);
    }
    if p < 0.0 {
        let k = (-p).sqrt();
        let (u, v) = oscillating(l, k * r);
        (u.deriv_scale(k), v.deriv_scale(k))
    } else {
        let kappa = p.sqrt();
        let (u, v) = modified(l, kappa * r);
        (u.deriv_scale(kappa), v.deriv_scale(kappa))
    }
}

impl Scaled {
    fn deriv_scale(mut self, k: f64) -> Self {
        self.dm *= k;
        self
    }
}

/// Upward recurrence `f_{k+1} = (2k+1)/x f_k + sign f_{k-1}` with rescaling;
/// returns `(s, f_{l-1}, f_l)` scaled by `e^{-s}`.
fn upward(l: u32, x: f64, f0: f64, f1: f64, sign: f64) -> (f64, f64, f64) {
    let (mut s, mut prev, mut cur) = (0.0, f0, f1);
    for k in 1..l {
        let next = (2 * k + 1) as f64 / x * cur + sign * prev;
        prev = cur;
        cur = next;
        if cur.abs() > RESCALE {
            let a = cur.abs();
            prev /= a;
            cur /= a;
            s += a.ln();
        }
    }
    (s, prev, cur)
}

/// `(ĵ_l, n̂_l)` at `x` in scaled form, x-derivatives.
fn oscillating(l: u32, x: f64) -> (Scaled, Scaled) {
    let (sn, cs) = x.sin_cos();
    if l == 0 {
        return (
            Scaled { s: 0.0, m: sn, dm: cs },
            Scaled { s: 0.0, m: -cs, dm: sn },
        );
    }
    let (s, nprev, n) = upward(l, x, -cs, -cs / x - sn, -1.0);
    let nd = nprev - l as f64 / x * n;
    let v = Scaled { s, m: n, dm: nd };
    if (l as f64) < x {
        let (_, jprev, j) = upward(l, x, sn, sn / x - cs, -1.0);
        let jd = jprev - l as f64 / x * j;
        return (Scaled { s: 0.0, m: j, dm: jd }, v);
    }
    // Log-derivative of ĵ_l from the downward ratio, magnitude from the
    // Wronskian ĵ n̂' - ĵ' n̂ = 1.
    let top = l + 40 + (2.0 * x) as u32;
    let mut r = 0.0;
    for k in (l + 1..=top).rev() {
        r = 1.0 / ((2 * k + 1) as f64 / x - r);
    }
    let rho = (l + 1) as f64 / x - r;
    let m = 1.0 / (nd - rho * n);
    (Scaled { s: -s, m, dm: rho * m }, v)
}

/// `(x i_l(x), x k_l(x))` up to normalization, in scaled form.
fn modified(l: u32, x: f64) -> (Scaled, Scaled) {
    let (s, v, vd) = if l == 0 {
        (-x, 1.0, -1.0)
    } else {
        let (s, vprev, v) = upward(l, x, 1.0, 1.0 + 1.0 / x, 1.0);
        (s - x, v, -vprev - l as f64 / x * v)
    };
    // i_{l+1}/i_l = 1/(b_{l+1} + 1/(b_{l+2} + ...)), b_k = (2k+1)/x, by
    // the modified Lentz method.
    let tiny = 1e-300;
    let (mut ratio, mut c, mut d) = (tiny, tiny, 0.0);
    for k in l + 1..l + 100_000 {
        let b = (2 * k + 1) as f64 / x;
        d = b + d;
        if d == 0.0 {
            d = tiny;
        }
        c = b + 1.0 / c;
        if c == 0.0 {
            c = tiny;
        }
        d = 1.0 / d;
        let delta = c * d;
        ratio *= delta;
        if (delta - 1.0).abs() < 1e-16 {
            break;
        }
    }
    let big_l = (l + 1) as f64 / x + ratio;
    let m = -1.0 / (vd - big_l * v);
    (Scaled { s: -s, m, dm: big_l * m }, Scaled { s, m: v, dm: vd })
}
