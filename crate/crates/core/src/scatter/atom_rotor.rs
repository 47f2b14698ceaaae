//! Atom-rotor close coupling in the `|j l; J>` basis, used as an
//! independent reference for rotor-rotor runs with a spinless partner.

use nalgebra::DMatrix;

use super::propagator::{propagate_logderiv, CoupledEquations, PropagationGrid};
use super::smatrix::{k_matrix, s_from_k, SMatrix};
use super::ScatterError;
use crate::angular::{wigner_3j_zero, wigner_6j, Channel, HalfInt};
use crate::constants::wavenumber_scale;
use crate::molsys::{level_energy, RigidRotorSpecies};
use crate::pes::PotentialExpansion;

/// `<j' l'; J| P_λ(cos θ) |j l; J>`.
pub fn atom_rotor_coupling(jp: u32, lp: u32, j: u32, l: u32, lambda: u32, total_j: u32) -> Result<f64, ScatterError> {
    let tj = wigner_3j_zero(jp, lambda, j);
    let tl = wigner_3j_zero(lp, lambda, l);
    if tj == 0.0 || tl == 0.0 {
        return Ok(0.0);
    }
    let h = |x: u32| HalfInt::from(x);
    let six = wigner_6j(h(j), h(l), h(total_j), h(lp), h(jp), h(lambda))?;
    let sign = if (j + jp + total_j) % 2 == 0 { 1.0 } else { -1.0 };
    let dims = ((2 * j + 1) * (2 * jp + 1) * (2 * l + 1) * (2 * lp + 1)) as f64;
    Ok(sign * dims.sqrt() * tj * tl * six)
}

pub struct AtomRotorSystem {
    pub rotor: RigidRotorSpecies,
    pub reduced_mass: f64,
    pub jmax: u32,
    /// Legendre terms `(λ, expansion term index)`.
    legendre: Vec<(u32, usize)>,
    pub expansion: PotentialExpansion,
}

struct Equations<'a> {
    sys: &'a AtomRotorSystem,
    channels: Vec<(u32, u32, f64)>,
    matrices: Vec<(usize, DMatrix<f64>)>,
    e_total: f64,
}

impl CoupledEquations for Equations<'_> {
    fn dim(&self) -> usize {
        self.channels.len()
    }

    fn orbital_momenta(&self) -> Vec<u32> {
        self.channels.iter().map(|c| c.1).collect()
    }

    fn fill_w(&self, r: f64, w: &mut DMatrix<f64>) -> Result<(), ScatterError> {
        let s = wavenumber_scale(self.sys.reduced_mass);
        w.fill(0.0);
        for (idx, m) in &self.matrices {
            let v = self.sys.expansion.terms()[*idx].radial.value(r)?;
            w.zip_apply(m, |a, b| *a += s * v * b);
        }
        for (i, &(_, l, eps)) in self.channels.iter().enumerate() {
            let l = l as f64;
            w[(i, i)] += s * (eps - self.e_total) + l * (l + 1.0) / (r * r);
        }
        Ok(())
    }
}

impl AtomRotorSystem {
    /// Terms `(λ, 0, λ)` reduce to `P_λ(cos θ1)`. Terms with `l2 > 0` cannot
    /// couple a partner held in `j2 = 0` and are dropped.
    pub fn new(
        rotor: RigidRotorSpecies,
        reduced_mass: f64,
        jmax: u32,
        expansion: PotentialExpansion,
    ) -> Result<Self, ScatterError> {
        let mut legendre = Vec::new();
        for (i, t) in expansion.terms().iter().enumerate() {
            let (l1, l2, l) = t.triple();
            if l2 == 0 {
                debug_assert_eq!(l1, l);
                legendre.push((l1, i));
            }
        }
        Ok(AtomRotorSystem {
            rotor,
            reduced_mass,
            jmax,
            legendre,
            expansion,
        })
    }

    fn channels(&self, total_j: u32, parity: i32) -> Vec<(u32, u32, f64)> {
        let mut out = Vec::new();
        for j in 0..=self.jmax {
            for l in j.abs_diff(total_j)..=(j + total_j) {
                if (if (j + l) % 2 == 0 { 1 } else { -1 }) == parity {
                    out.push((j, l, level_energy(&self.rotor, j)));
                }
            }
        }
        out
    }

    pub fn solve_block(
        &self,
        e_total: f64,
        total_j: u32,
        parity: i32,
        grid: &PropagationGrid,
    ) -> Result<SMatrix, ScatterError> {
        let channels = self.channels(total_j, parity);
        let n = channels.len();
        let mut matrices = Vec::new();
        for &(lambda, idx) in &self.legendre {
            let mut m = DMatrix::zeros(n, n);
            for (a, &(ja, la, _)) in channels.iter().enumerate() {
                for (b, &(jb, lb, _)) in channels.iter().enumerate() {
                    m[(a, b)] = atom_rotor_coupling(ja, la, jb, lb, lambda, total_j)?;
                }
            }
            matrices.push((idx, m));
        }
        let eqs = Equations {
            sys: self,
            channels,
            matrices,
            e_total,
        };
        let y = if n == 0 {
            DMatrix::zeros(0, 0)
        } else {
            propagate_logderiv(&eqs, grid)?
        };
        let s = wavenumber_scale(self.reduced_mass);
        let ls: Vec<u32> = eqs.channels.iter().map(|c| c.1).collect();
        let k2: Vec<f64> = eqs.channels.iter().map(|c| s * (e_total - c.2)).collect();
        let (open, k) = k_matrix(&y, grid.r_max, &ls, &k2)?;
        Ok(SMatrix {
            energy: e_total,
            total_j,
            parity,
            open_channels: open
                .iter()
                .map(|&i| {
                    let (j, l, eps) = eqs.channels[i];
                    Channel {
                        j1: j,
                        j2: 0,
                        j12: j,
                        l,
                        internal_energy: eps,
                    }
                })
                .collect(),
            matrix: s_from_k(&k),
            k_matrix: k,
        })
    }
}
