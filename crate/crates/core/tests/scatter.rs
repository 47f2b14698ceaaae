use std::collections::BTreeMap;
use std::sync::Arc;

use nalgebra::DMatrix;
use retkit_core::constants::wavenumber_scale;
use retkit_core::molsys::{level_energy, RigidRotorSpecies};
use retkit_core::pes::{iso88, AnisoDemo, ExpansionTerm, PotentialExpansion, RadialFunction};
use retkit_core::scatter::*;

fn quick_grid() -> PropagationGrid {
    PropagationGrid {
        r_min: 3.0,
        r_max: 40.0,
        max_step: 0.1,
    }
}

fn system(j1max: u32, j2set: Vec<u32>, expansion: PotentialExpansion) -> ScatteringSystem {
    ScatteringSystem::new(
        RigidRotorSpecies::co(),
        RigidRotorSpecies::h2(),
        j1max,
        j2set,
        expansion,
        quick_grid(),
    )
    .unwrap()
}

fn zero_potential() -> PotentialExpansion {
    PotentialExpansion::new(
        vec![ExpansionTerm {
            l1: 0,
            l2: 0,
            l: 0,
            radial: RadialFunction::ExpDispersion {
                a: 0.0,
                beta: 1.0,
                c6: 0.0,
            },
        }],
        "zero",
    )
    .unwrap()
}

fn max_abs_diff(a: &DMatrix<num_complex::Complex64>, b: &DMatrix<num_complex::Complex64>) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

#[test]
fn basis_matches_brute_force_enumeration() {
    let co = RigidRotorSpecies::co();
    let h2 = RigidRotorSpecies::h2();
    for total_j in [0u32, 1, 4, 9] {
        let mut expected = 0;
        let mut both = 0;
        for j1 in 0..=5u32 {
            for j2 in [0u32, 2] {
                for j12 in 0..=20u32 {
                    for l in 0..=40u32 {
                        let tri = |a: u32, b: u32, c: u32| c >= a.abs_diff(b) && c <= a + b;
                        if tri(j1, j2, j12) && tri(j12, l, total_j) {
                            both += 1;
                            if (j1 + j2 + l) % 2 == 0 {
                                expected += 1;
                            }
                        }
                    }
                }
            }
        }
        let even = build_basis(&co, &h2, 5, &[0, 2], total_j, 1);
        let odd = build_basis(&co, &h2, 5, &[0, 2], total_j, -1);
        assert_eq!(even.len(), expected);
        assert_eq!(even.len() + odd.len(), both);
        let energies: Vec<f64> = even.channels.iter().map(|c| c.internal_energy).collect();
        assert!(energies.windows(2).all(|w| w[0] <= w[1]));
    }
}

#[test]
fn coupling_matrix_is_symmetric_and_isotropic_term_is_diagonal() {
    let co = RigidRotorSpecies::co();
    let basis = build_basis(&co, &RigidRotorSpecies::h2(), 4, &[0, 2], 3, -1);
    let v = coupling_matrix(&basis, &iso88(), 7.5).unwrap();
    for i in 0..basis.len() {
        for j in 0..basis.len() {
            let expect = if i == j { -88.5 } else { 0.0 };
            assert!((v[(i, j)] - expect).abs() < 1e-9);
        }
    }
    let v = coupling_matrix(&basis, &AnisoDemo::default().build().unwrap(), 6.0).unwrap();
    assert!((&v - v.transpose()).amax() < 1e-12);
    assert!(v.iter().filter(|x| **x != 0.0).count() > basis.len());
}

#[test]
fn zero_potential_gives_identity() {
    // The regular free solution vanishes at the origin, so start there.
    let sys = system(3, vec![0, 2], zero_potential());
    let grid = PropagationGrid {
        r_min: 0.0,
        ..quick_grid()
    };
    for (j, p) in [(0, 1), (2, -1), (5, 1)] {
        let s = sys.solve_block_on(500.0, j, p, &grid).unwrap();
        assert!(!s.all_closed());
        let id = DMatrix::<num_complex::Complex64>::identity(s.matrix.nrows(), s.matrix.ncols());
        let d = max_abs_diff(&s.matrix, &id);
        assert!(d < 1e-9, "J={j}: {d:e}");
    }
}

/// Single channel of orbital momentum `l` with `W(r)` supplied directly.
struct OneChannel<F: Fn(f64) -> f64>(u32, F);

impl<F: Fn(f64) -> f64> CoupledEquations for OneChannel<F> {
    fn dim(&self) -> usize {
        1
    }
    fn fill_w(&self, r: f64, w: &mut DMatrix<f64>) -> Result<(), ScatterError> {
        w[(0, 0)] = (self.1)(r);
        Ok(())
    }
    fn orbital_momenta(&self) -> Vec<u32> {
        vec![self.0]
    }
}

#[test]
fn square_well_phase_shift() {
    // Attractive well of depth q² out to a, s-wave at wavenumber k.
    let (a, q2, k) = (2.0, 3.0, 0.7f64);
    let eqs = OneChannel(0, |r: f64| if r < a { -(q2 + k * k) } else { -(k * k) });
    let grid = PropagationGrid {
        r_min: 0.0,
        r_max: 12.0,
        max_step: 0.05,
    };
    let y = propagate_logderiv(&eqs, &grid).unwrap();
    let (_, kmat) = k_matrix(&y, grid.r_max, &[0], &[k * k]).unwrap();
    let kin = (q2 + k * k).sqrt();
    let delta = (k / kin * (kin * a).tan()).atan() - k * a;
    assert!((kmat[(0, 0)] - delta.tan()).abs() < 1e-9, "{} vs {}", kmat[(0, 0)], delta.tan());
}

#[test]
fn constant_barrier_p_wave() {
    // Repulsive step V0 > E out to a for l = 1: compare with modified
    // spherical Bessel interior solution matched to free waves.
    let (a, v0, k) = (1.5, 4.0, 1.1f64);
    let kap = (v0 - k * k).sqrt();
    let eqs = OneChannel(1, |r: f64| {
        let cent = 2.0 / (r * r);
        if r < a {
            kap * kap + cent
        } else {
            -(k * k) + cent
        }
    });
    let grid = PropagationGrid {
        r_min: 0.0,
        r_max: 15.0,
        max_step: 0.1,
    };
    let y = propagate_logderiv(&eqs, &grid).unwrap();
    let (_, kmat) = k_matrix(&y, grid.r_max, &[1], &[k * k]).unwrap();
    // Interior regular solution x i_1(x) = cosh x - sinh x / x, x = κr.
    let x = kap * a;
    let u = x.cosh() - x.sinh() / x;
    let du = kap * (x.sinh() - x.cosh() / x + x.sinh() / (x * x));
    let ld = du / u;
    // Exterior: ĵ1(z) = sin z/z - cos z, n̂1(z) = -cos z/z - sin z.
    let z = k * a;
    let j1 = z.sin() / z - z.cos();
    let dj1 = k * (z.cos() / z - z.sin() / (z * z) + z.sin());
    let n1 = -z.cos() / z - z.sin();
    let dn1 = k * (z.sin() / z + z.cos() / (z * z) - z.cos());
    // ψ = ĵ - K n̂ outside.
    let kexp = (dj1 - ld * j1) / (dn1 - ld * n1);
    assert!((kmat[(0, 0)] - kexp).abs() < 1e-10, "{} vs {}", kmat[(0, 0)], kexp);
}

#[test]
fn smatrix_is_unitary_and_symmetric() {
    let sys = system(4, vec![0, 2], AnisoDemo::default().build().unwrap());
    for (j, p) in [(0, 1), (1, -1), (3, 1), (6, -1)] {
        let s = sys.solve_block(420.0, j, p).unwrap();
        assert!(s.unitarity_defect() < 1e-10);
        assert!(s.symmetry_defect() < 1e-10);
    }
}

#[test]
fn convergence_order_under_step_refinement() {
    let sys = system(3, vec![0], AnisoDemo::default().build().unwrap());
    let run = |h: f64| {
        let g = PropagationGrid { max_step: h, ..quick_grid() };
        sys.solve_block_on(150.0, 2, 1, &g).unwrap().matrix
    };
    let (s1, s2, s3) = (run(0.04), run(0.02), run(0.01));
    let ratio = max_abs_diff(&s1, &s2) / max_abs_diff(&s2, &s3);
    assert!(ratio > 12.0 && ratio < 20.0, "ratio {ratio}");
}

#[test]
fn cross_sections_obey_microreversibility() {
    let sys = system(4, vec![0, 2], AnisoDemo::default().build().unwrap());
    let e = 520.0;
    let res = sys.energy_cross_sections(e, &JSelection::Fixed((0..6).collect())).unwrap();
    let scale = wavenumber_scale(sys.reduced_mass);
    let mut checked = 0;
    for (&(i, f), &sig) in &res.sigma {
        if i == f || sig < 1e-6 {
            continue;
        }
        let back = res.sigma[&(f, i)];
        let g = |k: LevelKey| ((2 * k.0 + 1) * (2 * k.1 + 1)) as f64;
        let lhs = g(i) * scale * (e - sys.level_energy(i)) * sig;
        let rhs = g(f) * scale * (e - sys.level_energy(f)) * back;
        assert!((lhs - rhs).abs() <= 1e-8 * lhs, "{i:?}->{f:?}");
        checked += 1;
    }
    assert!(checked > 10);
}

#[test]
fn channel_order_does_not_change_s() {
    let sys = system(3, vec![0, 2], AnisoDemo::default().build().unwrap());
    let e = 300.0;
    let reference = sys.solve_block(e, 2, 1).unwrap();

    let mut basis = sys.basis(2, 1);
    basis.channels.reverse();
    let angular = AngularCoupling::new(&basis, &sys.expansion).unwrap();
    let block = Arc::new(Block { basis, angular });
    let eqs = BlockEquations {
        block: &block,
        expansion: &sys.expansion,
        scale: wavenumber_scale(sys.reduced_mass),
        e_total: e,
    };
    let y = propagate_logderiv(&eqs, &sys.grid).unwrap();
    let s = s_matrix(&y, &block.basis, e, sys.grid.r_max, sys.reduced_mass).unwrap();
    let pos = |c: &retkit_core::angular::Channel| reference.open_channels.iter().position(|d| d == c).unwrap();
    let n = s.open_channels.len();
    for a in 0..n {
        for b in 0..n {
            let (ra, rb) = (pos(&s.open_channels[a]), pos(&s.open_channels[b]));
            assert!((s.matrix[(a, b)] - reference.matrix[(ra, rb)]).norm() < 1e-10);
        }
    }
}

#[test]
fn atom_rotor_reduction_agrees() {
    let exp = AnisoDemo::default().build().unwrap();
    let sys = system(4, vec![0], exp.clone());
    let atom = AtomRotorSystem::new(RigidRotorSpecies::co(), sys.reduced_mass, 4, exp).unwrap();
    for (j, p) in [(0, 1), (3, -1), (4, 1)] {
        let a = sys.solve_block(200.0, j, p).unwrap();
        let b = atom.solve_block(200.0, j, p, &sys.grid).unwrap();
        assert_eq!(a.open_channels.len(), b.open_channels.len());
        let key = |c: &retkit_core::angular::Channel| (c.j1, c.l);
        for x in 0..a.open_channels.len() {
            for y in 0..a.open_channels.len() {
                let bx = b.open_channels.iter().position(|c| key(c) == key(&a.open_channels[x])).unwrap();
                let by = b.open_channels.iter().position(|c| key(c) == key(&a.open_channels[y])).unwrap();
                assert!((a.matrix[(x, y)] - b.matrix[(bx, by)]).norm() < 1e-10);
            }
        }
    }
}

#[test]
fn even_anisotropy_forbids_odd_transitions() {
    let sys = system(4, vec![0, 2], AnisoDemo::even_only(0.4).build().unwrap());
    let res = sys.energy_cross_sections(350.0, &JSelection::Fixed(vec![0, 1, 2, 3])).unwrap();
    let mut even_nonzero = 0;
    for (&(i, f), &sig) in &res.sigma {
        if (i.0 + f.0) % 2 == 1 {
            assert_eq!(sig, 0.0, "{i:?}->{f:?}");
        } else if i != f && sig > 0.0 {
            even_nonzero += 1;
        }
    }
    assert!(even_nonzero > 0);
}

#[test]
fn threshold_energies_are_nudged() {
    let sys = system(3, vec![0], iso88());
    let e1 = level_energy(&sys.rotor, 2);
    let (e, note) = sys.guard_threshold(e1 + 1e-8);
    assert!(e > e1 && note.is_some());
    assert_eq!(sys.guard_threshold(e1 + 1.0).0, e1 + 1.0);
}

#[test]
fn j_convergence_reports_partial_result() {
    let sys = system(2, vec![0], AnisoDemo::default().build().unwrap());
    let sel = JSelection::Converge {
        j_cap: 2,
        tolerance: 1e-3,
        window: 2,
    };
    match sys.energy_cross_sections(300.0, &sel) {
        Err(ScatterError::Unconverged(partial)) => assert_eq!(partial.j_values, vec![0, 1, 2]),
        other => panic!("expected a convergence error, got {other:?}"),
    }
}

#[test]
fn cross_section_table_round_trips_to_text() {
    let sys = system(2, vec![0], AnisoDemo::default().build().unwrap());
    let table = sys.cross_section_table(&[60.0, 120.0], &JSelection::Fixed(vec![0, 1])).unwrap();
    let text = table.to_delimited();
    assert!(text.starts_with("E_coll_cm1,j1,j2,j1p,j2p,sigma_A2,E_total_cm1"));
    assert_eq!(CrossSectionTable::from_delimited(&text).unwrap(), table);
    let by_key: BTreeMap<_, _> = table.entries.iter().map(|e| ((e.initial, e.final_level, e.e_total.to_bits()), e.sigma)).collect();
    assert_eq!(by_key.len(), table.entries.len());
    assert!(table.get((0, 0), (1, 0), 60.0).unwrap() > 0.0);
}
