use std::f64::consts::PI;

use proptest::prelude::*;
use retkit_core::angular::bispherical;
use retkit_core::pes::{
    iso88, project, AnisoDemo, ExpansionTerm, PotentialExpansion, ProjectionOptions, RadialFunction,
    ISO88_RMIN,
};

fn knots() -> Vec<f64> {
    (0..40).map(|k| 3.0 + 0.5 * k as f64).collect()
}

#[test]
fn iso88_well_depth_and_decay() {
    let p = iso88();
    assert!((p.evaluate(ISO88_RMIN, 0.3, 1.2, 0.4).unwrap() + 88.5).abs() < 1e-6);
    // The minimum is the minimum.
    for dr in [-0.01, 0.01, -0.3, 0.5] {
        assert!(p.evaluate(ISO88_RMIN + dr, 0.0, 0.0, 0.0).unwrap() > -88.5);
    }
    assert!(p.evaluate(200.0, 0.3, 1.2, 0.4).unwrap().abs() < 1e-6);
    let demo = AnisoDemo::default().build().unwrap();
    for (t1, t2, ph) in [(0.0, 0.0, 0.0), (1.0, 2.0, 3.0), (PI, 0.5, 1.0)] {
        assert!(demo.evaluate(200.0, t1, t2, ph).unwrap().abs() < 1e-6);
    }
    let rc = p.radial_coefficients(200.0).unwrap();
    assert_eq!(rc.len(), 1);
    assert!(rc[0].1.abs() < 1e-6);
}

#[test]
fn pure_p2_model_projects_to_one_term() {
    let f = |r: f64| 100.0 * (-0.5 * r).exp();
    let model = move |r: f64, t1: f64, _t2: f64, _p: f64| f(r) * 0.5 * (3.0 * t1.cos().powi(2) - 1.0);
    let opts = ProjectionOptions::exact_for(4, 2, (2, 0));
    let (exp, warnings) = project(model, 4, 2, &knots(), &opts, 6).unwrap();
    assert!(warnings.is_empty());
    for (triple, _) in exp.radial_coefficients(3.0).unwrap() {
        for r in knots() {
            let v = exp.terms().iter().find(|t| t.triple() == triple).unwrap().radial.value(r).unwrap();
            if triple == (2, 0, 2) {
                assert!((v - f(r)).abs() < 1e-12 * f(r).abs().max(1.0));
            } else {
                assert!(v.abs() < 1e-12, "{triple:?} at {r}: {v}");
            }
        }
    }
}

#[test]
fn even_l1_model_has_no_odd_l1_terms() {
    let model = |r: f64, t1: f64, t2: f64, p: f64| {
        (-(r - 5.0).powi(2)).exp() * (1.0 + t1.cos().powi(2) + 0.3 * t1.cos().powi(4) * t2.cos().powi(2) + 0.1 * (t1.sin() * t2.sin() * p.cos()).powi(2))
    };
    let opts = ProjectionOptions::exact_for(5, 4, (6, 4));
    let (exp, _) = project(model, 5, 4, &knots(), &opts, 6).unwrap();
    for t in exp.terms() {
        if t.l1 % 2 == 1 {
            for r in knots() {
                assert!(t.radial.value(r).unwrap().abs() < 1e-12);
            }
        }
    }
}

#[test]
fn homonuclear_partner_gives_even_l2_only() {
    // Symmetric under θ2 → π − θ2, φ → π − φ.
    let model = |r: f64, t1: f64, t2: f64, p: f64| {
        let c = t1.cos() * t2.cos() + t1.sin() * t2.sin() * p.cos();
        (-0.3 * r).exp() * (1.0 + t1.cos() + c * c + 0.2 * t1.cos() * c * c)
    };
    let opts = ProjectionOptions::exact_for(4, 4, (3, 2));
    let (exp, _) = project(model, 4, 4, &knots(), &opts, 6).unwrap();
    let mut saw_odd_l1 = false;
    for t in exp.terms() {
        let peak = knots().iter().map(|&r| t.radial.value(r).unwrap().abs()).fold(0.0, f64::max);
        if t.l2 % 2 == 1 {
            assert!(peak < 1e-12, "{:?}", t.triple());
        }
        if t.l1 % 2 == 1 && peak > 1e-6 {
            saw_odd_l1 = true;
        }
    }
    assert!(saw_odd_l1);
}

fn reference_expansion() -> PotentialExpansion {
    let mk = |l1, l2, l, a: f64, beta: f64| ExpansionTerm {
        l1,
        l2,
        l,
        radial: RadialFunction::ExpDispersion { a, beta, c6: 0.0 },
    };
    PotentialExpansion::new(
        vec![
            mk(0, 0, 0, 2000.0, 0.8),
            mk(1, 0, 1, 300.0, 0.7),
            mk(2, 0, 2, -500.0, 0.9),
            mk(3, 0, 3, 100.0, 0.6),
            mk(0, 2, 2, 80.0, 0.8),
            mk(2, 2, 4, 40.0, 0.7),
            mk(1, 2, 1, 60.0, 0.8),
            mk(3, 2, 5, 20.0, 0.75),
        ],
        "reference",
    )
    .unwrap()
}

#[test]
fn projection_round_trip() {
    let reference = reference_expansion();
    let model = |r: f64, t1: f64, t2: f64, p: f64| reference.evaluate(r, t1, t2, p).unwrap();
    let k = knots();
    let opts = ProjectionOptions::exact_for(3, 2, (3, 2));
    let (exp, w) = project(model, 3, 2, &k, &opts, 6).unwrap();
    assert!(w.is_empty());
    for &r in &k {
        for (t1, t2, p) in [(0.1, 0.2, 0.3), (1.3, 2.2, 2.9), (2.8, 0.9, 5.0), (PI / 2.0, PI / 2.0, 0.0)] {
            let a = exp.evaluate(r, t1, t2, p).unwrap();
            let b = reference.evaluate(r, t1, t2, p).unwrap();
            assert!((a - b).abs() < 1e-8 * b.abs().max(1.0), "{r} {a} {b}");
        }
    }
}

#[test]
fn underresolved_quadrature_warns() {
    let mut opts = ProjectionOptions::exact_for(4, 2, (4, 2));
    opts.n_theta1 = 2;
    let (_, w) = project(|_, _, _, _| 1.0, 4, 2, &knots(), &opts, 6).unwrap();
    assert_eq!(w.len(), 1);
}

#[test]
fn delimited_round_trip() {
    let demo = AnisoDemo::default().build().unwrap();
    let grid: Vec<f64> = (0..60).map(|k| 3.0 + 0.25 * k as f64).collect();
    let text = demo.to_delimited(&grid).unwrap();
    assert!(text.starts_with("R_bohr,v_0_0_0,v_1_0_1,v_2_0_2,v_2_2_4"));
    let back = PotentialExpansion::from_delimited(&text, 6, "file").unwrap();
    for &r in &grid {
        assert_eq!(back.radial_coefficients(r).unwrap(), demo.radial_coefficients(r).unwrap());
    }
    assert!(back.evaluate(2.0, 0.0, 0.0, 0.0).is_err());
    assert!(back.evaluate(100.0, 0.0, 0.0, 0.0).unwrap().is_finite());
}

proptest! {
    #[test]
    fn evaluate_is_linear(s in -3.0f64..3.0, r in 3.0f64..30.0, t1 in 0.0f64..PI, t2 in 0.0f64..PI, p in 0.0f64..6.28) {
        let base = AnisoDemo::default().build().unwrap();
        let terms: Vec<ExpansionTerm> = base
            .terms()
            .iter()
            .map(|t| ExpansionTerm { radial: t.radial.scaled(s), ..t.clone() })
            .collect();
        let scaled = PotentialExpansion::new(terms, "scaled").unwrap();
        let a = scaled.evaluate(r, t1, t2, p).unwrap();
        let b = s * base.evaluate(r, t1, t2, p).unwrap();
        prop_assert!((a - b).abs() <= 1e-12 * b.abs().max(1.0));
    }
}

#[test]
fn bispherical_orthogonality() {
    let (x, w) = retkit_core::quadrature::gauss_legendre(8);
    let np = 8;
    for l1 in 0u32..4 {
        for l2 in 0u32..3 {
            let ls: Vec<u32> = (l1.abs_diff(l2)..=l1 + l2).filter(|l| (l1 + l2 + l) % 2 == 0).collect();
            for &la in &ls {
                for &lb in &ls {
                    let mut s = 0.0;
                    for (c1, w1) in x.iter().zip(&w) {
                        for (c2, w2) in x.iter().zip(&w) {
                            for k in 0..np {
                                let p = 2.0 * PI * k as f64 / np as f64;
                                s += w1 * w2 * 2.0 * PI / np as f64
                                    * bispherical(l1, l2, la, c1.acos(), c2.acos(), p)
                                    * bispherical(l1, l2, lb, c1.acos(), c2.acos(), p);
                            }
                        }
                    }
                    let expect = if la == lb { 8.0 * PI / (2 * la + 1) as f64 } else { 0.0 };
                    assert!((s - expect).abs() < 1e-12, "({l1},{l2}) {la} {lb}: {s}");
                }
            }
        }
    }
}
