mod common;

use std::f64::consts::PI;

use proptest::prelude::*;
use retkit_core::angular::{
    bispherical, coupling_coefficient, wigner_3j, wigner_6j, wigner_9j, Channel, HalfInt,
};

fn h(twice: i32) -> HalfInt {
    HalfInt::from_twice(twice)
}

fn w3(t: [i32; 6]) -> f64 {
    wigner_3j(h(t[0]), h(t[1]), h(t[2]), h(t[3]), h(t[4]), h(t[5])).unwrap()
}

fn w6(t: [i32; 6]) -> f64 {
    wigner_6j(h(t[0]), h(t[1]), h(t[2]), h(t[3]), h(t[4]), h(t[5])).unwrap()
}

#[test]
fn documented_three_j_values() {
    assert!((w3([2, 2, 0, 0, 0, 0]) + 0.5773502692).abs() < 1e-10);
    assert_eq!(w3([2, 2, 6, 0, 0, 0]), 0.0);
    assert!((w3([2, 2, 4, 0, 0, 0]) - 0.3651483717).abs() < 1e-10);
    assert!((w3([2, 2, 0, 0, 0, 0]) - common::three_j([2, 2, 0], [0, 0, 0])).abs() < 1e-15);
}

#[test]
fn six_j_against_projection_contraction() {
    for j in [[1, 1, 1, 1, 1, 1], [2, 1, 2, 1, 2, 1], [2, 2, 2, 2, 2, 2], [3, 2, 1, 1, 2, 3], [0, 2, 2, 3, 1, 1]] {
        let direct = common::six_j_by_contraction(j);
        let lib = w6(j.map(|x| 2 * x));
        assert!((direct - lib).abs() < 1e-12, "{j:?}: {direct} vs {lib}");
    }
    assert!((w6([2; 6]) - 1.0 / 6.0).abs() < 1e-15);
}

#[test]
fn nine_j_reduction_identity() {
    // {a b e; c d e; f f 0} = (-1)^{b+c+e+f} {a b e; d c f} / sqrt((2e+1)(2f+1))
    for a in 0..4 {
        for b in 0..4 {
            for c in 0..4 {
                for d in 0..4 {
                    for e in 0..5 {
                        for f in 0..5 {
                            let t = [a, b, e, c, d, e, f, f, 0].map(|x| h(2 * x));
                            let nine = wigner_9j(t).unwrap();
                            let sign = if (b + c + e + f) % 2 == 0 { 1.0 } else { -1.0 };
                            let six = w6([a, b, e, d, c, f].map(|x| 2 * x));
                            let expect = sign * six / (((2 * e + 1) * (2 * f + 1)) as f64).sqrt();
                            assert!((nine - expect).abs() < 1e-13);
                        }
                    }
                }
            }
        }
    }
}

#[test]
fn invalid_projection_is_domain_error() {
    assert!(wigner_3j(h(2), h(2), h(0), h(1), h(-1), h(0)).is_err());
    assert!(wigner_3j(h(2), h(2), h(0), h(4), h(-4), h(0)).is_err());
    assert!(wigner_6j(h(-2), h(2), h(2), h(2), h(2), h(2)).is_err());
}

fn triad_strategy() -> impl Strategy<Value = ([i32; 3], [i32; 3])> {
    (0..=12i32, 0..=12i32, 0..=24i32, any::<u64>()).prop_filter_map("triad", |(a, b, c, seed)| {
        if c < (a - b).abs() || c > a + b || (a + b + c) % 2 != 0 {
            return None;
        }
        let ma = -a + 2 * ((seed % (a as u64 + 1)) as i32);
        let mb = -b + 2 * (((seed / 97) % (b as u64 + 1)) as i32);
        let mc = -ma - mb;
        if mc.abs() > c {
            return None;
        }
        Some(([a, b, c], [ma, mb, mc]))
    })
}

proptest! {
    #[test]
    fn three_j_permutation_symmetry((j, m) in triad_strategy()) {
        let base = w3([j[0], j[1], j[2], m[0], m[1], m[2]]);
        let odd = if ((j[0] + j[1] + j[2]) / 2) % 2 == 0 { 1.0 } else { -1.0 };
        let variants = [
            (w3([j[1], j[2], j[0], m[1], m[2], m[0]]), 1.0),
            (w3([j[2], j[0], j[1], m[2], m[0], m[1]]), 1.0),
            (w3([j[1], j[0], j[2], m[1], m[0], m[2]]), odd),
            (w3([j[0], j[2], j[1], m[0], m[2], m[1]]), odd),
            (w3([j[0], j[1], j[2], -m[0], -m[1], -m[2]]), odd),
        ];
        for (v, s) in variants {
            prop_assert!((v * s - base).abs() <= 1e-13 * base.abs().max(1e-300));
        }
        let oracle = common::three_j(j, m);
        prop_assert!((base - oracle).abs() < 1e-13);
    }

    #[test]
    fn three_j_orthogonality(a in 0..=10i32, b in 0..=10i32, c in 0..=20i32, pick in 0..=20i32) {
        prop_assume!(c >= (a - b).abs() && c <= a + b && (a + b + c) % 2 == 0);
        // Fixed m3; sum over the (m1, m2) pairs compatible with it.
        let mc = -c + 2 * (pick % (c + 1));
        let mut sum = 0.0;
        let mut ma = -a;
        while ma <= a {
            let mb = -ma - mc;
            if mb.abs() <= b {
                sum += (c + 1) as f64 * w3([a, b, c, ma, mb, mc]).powi(2);
            }
            ma += 2;
        }
        prop_assert!((sum - 1.0).abs() < 1e-12);
    }

    #[test]
    fn six_j_tetrahedral_symmetry(t in proptest::array::uniform6(0..=10i32)) {
        let v = w6(t);
        let [a, b, c, d, e, f] = t;
        prop_assert!((w6([b, a, c, e, d, f]) - v).abs() < 1e-14);
        prop_assert!((w6([a, e, f, d, b, c]) - v).abs() < 1e-14);
        prop_assert!((w6([c, b, a, f, e, d]) - v).abs() < 1e-14);
        prop_assert!((common::six_j(t) - v).abs() < 1e-13);
    }
}

// ---------------------------------------------------------------- coupling

struct Quadrature {
    cos_t: Vec<f64>,
    w_t: Vec<f64>,
    phi: Vec<f64>,
}

impl Quadrature {
    fn new(n: usize) -> Self {
        let (cos_t, w_t) = common::gauss_legendre(n);
        let phi = (0..2 * n).map(|k| 2.0 * PI * k as f64 / (2 * n) as f64).collect();
        Quadrature { cos_t, w_t, phi }
    }

    /// ∫ conj(Y_a) Y_b Y_c dΩ by product quadrature.
    fn gaunt(&self, a: (i32, i32), b: (i32, i32), c: (i32, i32)) -> f64 {
        let dphi = 2.0 * PI / self.phi.len() as f64;
        let mut re = 0.0;
        for (x, w) in self.cos_t.iter().zip(&self.w_t) {
            for &p in &self.phi {
                let ya = common::ylm(a.0, a.1, *x, p);
                let yb = common::ylm(b.0, b.1, *x, p);
                let yc = common::ylm(c.0, c.1, *x, p);
                let bc = (yb.0 * yc.0 - yb.1 * yc.1, yb.0 * yc.1 + yb.1 * yc.0);
                re += w * dphi * (ya.0 * bc.0 + ya.1 * bc.1);
            }
        }
        re
    }
}

/// (m1, m2, ml, weight) expansion of |(j1 j2) j12, l; J M=0>.
fn components(c: &Channel, jt: i32) -> Vec<(i32, i32, i32, f64)> {
    let (j1, j2, j12, l) = (c.j1 as i32, c.j2 as i32, c.j12 as i32, c.l as i32);
    let mut out = Vec::new();
    for m1 in -j1..=j1 {
        for m2 in -j2..=j2 {
            let m12 = m1 + m2;
            let ml = -m12;
            if m12.abs() > j12 || ml.abs() > l {
                continue;
            }
            let w = common::clebsch(j1, m1, j2, m2, j12, m12) * common::clebsch(j12, m12, l, ml, jt, 0);
            if w != 0.0 {
                out.push((m1, m2, ml, w));
            }
        }
    }
    out
}

fn quadrature_element(bra: &Channel, ket: &Channel, term: (i32, i32, i32), jt: i32) -> f64 {
    let q = Quadrature::new(12);
    let (l1, l2, lam) = term;
    let pref = if (l1 - l2).rem_euclid(2) == 0 { 1.0 } else { -1.0 } * (4.0 * PI).powf(1.5)
        / ((2 * lam + 1) as f64).sqrt();
    let mut total = 0.0;
    for (a1, a2, al, wa) in components(bra, jt) {
        for (b1, b2, bl, wb) in components(ket, jt) {
            let (u1, u2, u) = (a1 - b1, a2 - b2, al - bl);
            if u1.abs() > l1 || u2.abs() > l2 || u.abs() > lam {
                continue;
            }
            let c = common::three_j([2 * l1, 2 * l2, 2 * lam], [2 * u1, 2 * u2, 2 * u]);
            if c == 0.0 {
                continue;
            }
            let g1 = q.gaunt((bra.j1 as i32, a1), (l1, u1), (ket.j1 as i32, b1));
            let g2 = q.gaunt((bra.j2 as i32, a2), (l2, u2), (ket.j2 as i32, b2));
            let g3 = q.gaunt((bra.l as i32, al), (lam, u), (ket.l as i32, bl));
            total += wa * wb * pref * c * g1 * g2 * g3;
        }
    }
    total
}

fn ch(j1: u32, j2: u32, j12: u32, l: u32) -> Channel {
    Channel { j1, j2, j12, l, internal_energy: 0.0 }
}

#[test]
fn coupling_matches_angular_quadrature() {
    let cases: Vec<(Channel, Channel, (u32, u32, u32), u32)> = vec![
        (ch(0, 0, 0, 1), ch(1, 0, 1, 0), (1, 0, 1), 1),
        (ch(0, 0, 0, 1), ch(1, 0, 1, 2), (1, 0, 1), 1),
        (ch(1, 0, 1, 1), ch(1, 0, 1, 1), (2, 0, 2), 1),
        (ch(2, 0, 2, 1), ch(0, 0, 0, 3), (2, 0, 2), 3),
        (ch(1, 1, 1, 1), ch(1, 1, 2, 1), (0, 2, 2), 2),
        (ch(1, 1, 2, 1), ch(2, 1, 2, 2), (1, 2, 3), 2),
        (ch(2, 2, 3, 2), ch(1, 0, 1, 1), (1, 2, 3), 2),
        (ch(0, 2, 2, 2), ch(2, 0, 2, 2), (2, 2, 4), 2),
        (ch(1, 2, 2, 1), ch(1, 2, 3, 1), (2, 2, 0), 3),
    ];
    for (bra, ket, term, jt) in cases {
        let lib = coupling_coefficient(&bra, &ket, term, HalfInt::int(jt as i32)).unwrap();
        let quad = quadrature_element(&bra, &ket, (term.0 as i32, term.1 as i32, term.2 as i32), jt as i32);
        assert!((lib - quad).abs() < 1e-10, "{bra:?} {ket:?} {term:?}: {lib} vs {quad}");
        let rev = coupling_coefficient(&ket, &bra, term, HalfInt::int(jt as i32)).unwrap();
        assert!((rev - lib).abs() < 1e-14);
    }
}

#[test]
fn bispherical_matches_space_fixed_contraction() {
    // With R̂ along z the space-fixed contraction reduces to the body-fixed form.
    for (l1, l2, l) in [(1i32, 0i32, 1i32), (2, 2, 0), (2, 2, 4), (3, 2, 1), (1, 1, 2)] {
        for (t1, t2, p) in [(0.3, 1.1, 0.4), (2.0, 0.7, 2.5)] {
            let mut re = 0.0;
            for m1 in -l1..=l1 {
                let m2 = -m1;
                if m2.abs() > l2 {
                    continue;
                }
                let c = common::three_j([2 * l1, 2 * l2, 2 * l], [2 * m1, 2 * m2, 0]);
                let y1 = common::ylm(l1, m1, f64::cos(t1), 0.0);
                let y2 = common::ylm(l2, m2, f64::cos(t2), p);
                let yl = common::ylm(l, 0, 1.0, 0.0).0;
                re += c * yl * (y1.0 * y2.0 - y1.1 * y2.1);
            }
            let sign = if (l1 - l2) % 2 == 0 { 1.0 } else { -1.0 };
            let expect = sign * (4.0 * PI).powf(1.5) / ((2 * l + 1) as f64).sqrt() * re;
            let got = bispherical(l1 as u32, l2 as u32, l as u32, t1, t2, p);
            assert!((got - expect).abs() < 1e-12, "({l1},{l2},{l}): {got} vs {expect}");
        }
    }
}
