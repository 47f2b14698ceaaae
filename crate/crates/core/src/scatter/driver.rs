use std::collections::{BTreeMap, HashMap};
use std::sync::{Arc, Mutex};

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::coupling::AngularCoupling;
use super::propagator::{propagate_logderiv, CoupledEquations, PropagationGrid};
use super::smatrix::{s_matrix, SMatrix};
use super::xsec::{accumulate_block, finalize, CrossSectionEntry, CrossSectionTable, LevelKey, TransitionKey};
use super::{build_basis, pair_levels, ChannelBasis, ScatterError};
use crate::constants::wavenumber_scale;
use crate::molsys::{reduced_mass, RigidRotorSpecies};
use crate::pes::PotentialExpansion;

/// Collision energies closer than this to a threshold are moved above it.
pub const THRESHOLD_GUARD: f64 = 1e-6;

/// One `(J, parity)` block with its angular couplings.
#[derive(Debug)]
pub struct Block {
    pub basis: ChannelBasis,
    pub angular: AngularCoupling,
}

/// Coupled equations of one block at a fixed total energy.
pub struct BlockEquations<'a> {
    pub block: &'a Block,
    pub expansion: &'a PotentialExpansion,
    /// `2μ/ħ²` in bohr⁻² per cm⁻¹.
    pub scale: f64,
    pub e_total: f64,
}

impl CoupledEquations for BlockEquations<'_> {
    fn dim(&self) -> usize {
        self.block.basis.len()
    }

    fn orbital_momenta(&self) -> Vec<u32> {
        self.block.basis.channels.iter().map(|c| c.l).collect()
    }

    fn fill_w(&self, r: f64, w: &mut DMatrix<f64>) -> Result<(), ScatterError> {
        let mut radial = Vec::with_capacity(self.expansion.terms().len());
        self.expansion.radial_values(r, &mut radial)?;
        self.block.angular.potential_into(&radial, w);
        *w *= self.scale;
        let inv_r2 = 1.0 / (r * r);
        for (i, c) in self.block.basis.channels.iter().enumerate() {
            let l = c.l as f64;
            w[(i, i)] += self.scale * (c.internal_energy - self.e_total) + l * (l + 1.0) * inv_r2;
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum JSelection {
    /// Sum J upward until the last `window` values jointly contribute less
    /// than `tolerance` of every inelastic cross section.
    Converge { j_cap: u32, tolerance: f64, window: usize },
    /// Sum exactly these J values.
    Fixed(Vec<u32>),
}

impl Default for JSelection {
    fn default() -> Self {
        JSelection::Converge {
            j_cap: 150,
            tolerance: 1e-3,
            window: 3,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnergyResult {
    /// Total energy actually used (after any threshold nudge), cm⁻¹.
    pub e_total: f64,
    /// Cross sections in Å² for every open `(initial, final)` pair.
    #[serde(with = "crate::serde_pairs")]
    pub sigma: BTreeMap<TransitionKey, f64>,
    pub j_values: Vec<u32>,
    pub converged: bool,
    pub notes: Vec<String>,
}

pub struct ScatteringSystem {
    pub rotor: RigidRotorSpecies,
    pub partner: RigidRotorSpecies,
    /// u
    pub reduced_mass: f64,
    pub j1max: u32,
    pub j2set: Vec<u32>,
    pub expansion: PotentialExpansion,
    pub grid: PropagationGrid,
    blocks: Mutex<HashMap<(u32, i32), Arc<Block>>>,
}

impl ScatteringSystem {
    pub fn new(
        rotor: RigidRotorSpecies,
        partner: RigidRotorSpecies,
        j1max: u32,
        j2set: Vec<u32>,
        expansion: PotentialExpansion,
        grid: PropagationGrid,
    ) -> Result<Self, ScatterError> {
        rotor.validate()?;
        grid.validate()?;
        if j2set.is_empty() {
            return Err(ScatterError::InvalidInput("partner level set is empty".into()));
        }
        let mu = reduced_mass(rotor.mass, partner.mass);
        Ok(ScatteringSystem {
            rotor,
            partner,
            reduced_mass: mu,
            j1max,
            j2set,
            expansion,
            grid,
            blocks: Mutex::new(HashMap::new()),
        })
    }

    /// Rotor-pair levels of the basis with their internal energies.
    pub fn levels(&self) -> Vec<(LevelKey, f64)> {
        pair_levels(&self.rotor, &self.partner, self.j1max, &self.j2set)
    }

    pub fn level_energy(&self, key: LevelKey) -> f64 {
        self.levels()
            .into_iter()
            .find(|(k, _)| *k == key)
            .map(|(_, e)| e)
            .unwrap_or(f64::NAN)
    }

    pub fn basis(&self, total_j: u32, parity: i32) -> ChannelBasis {
        build_basis(&self.rotor, &self.partner, self.j1max, &self.j2set, total_j, parity)
    }

    pub fn block(&self, total_j: u32, parity: i32) -> Result<Arc<Block>, ScatterError> {
        if let Some(b) = self.blocks.lock().unwrap().get(&(total_j, parity)) {
            return Ok(b.clone());
        }
        let basis = self.basis(total_j, parity);
        let angular = AngularCoupling::new(&basis, &self.expansion)?;
        let block = Arc::new(Block { basis, angular });
        self.blocks.lock().unwrap().insert((total_j, parity), block.clone());
        Ok(block)
    }

    /// Log-derivative matrix at `r_max` for one block.
    pub fn propagate(
        &self,
        e_total: f64,
        total_j: u32,
        parity: i32,
        grid: &PropagationGrid,
    ) -> Result<DMatrix<f64>, ScatterError> {
        let block = self.block(total_j, parity)?;
        let eqs = BlockEquations {
            block: &block,
            expansion: &self.expansion,
            scale: wavenumber_scale(self.reduced_mass),
            e_total,
        };
        propagate_logderiv(&eqs, grid)
    }

    pub fn solve_block(&self, e_total: f64, total_j: u32, parity: i32) -> Result<SMatrix, ScatterError> {
        self.solve_block_on(e_total, total_j, parity, &self.grid)
    }

    pub fn solve_block_on(
        &self,
        e_total: f64,
        total_j: u32,
        parity: i32,
        grid: &PropagationGrid,
    ) -> Result<SMatrix, ScatterError> {
        let block = self.block(total_j, parity)?;
        if block.basis.is_empty() || block.basis.open_indices(e_total).is_empty() {
            return s_matrix(&DMatrix::zeros(block.basis.len(), block.basis.len()), &block.basis, e_total, grid.r_max, self.reduced_mass);
        }
        let y = self.propagate(e_total, total_j, parity, grid)?;
        s_matrix(&y, &block.basis, e_total, grid.r_max, self.reduced_mass)
    }

    /// Move `e_total` above any threshold it lies within the guard distance of.
    pub fn guard_threshold(&self, e_total: f64) -> (f64, Option<String>) {
        for (key, eps) in self.levels() {
            if (e_total - eps).abs() < THRESHOLD_GUARD {
                let moved = eps + THRESHOLD_GUARD;
                let note = format!(
                    "total energy {e_total} cm-1 within {THRESHOLD_GUARD} cm-1 of the ({}, {}) threshold; moved to {moved}",
                    key.0, key.1
                );
                log::info!("{note}");
                return (moved, Some(note));
            }
        }
        (e_total, None)
    }

    /// Cross sections at one total energy, summed over J.
    pub fn energy_cross_sections(&self, e_total: f64, selection: &JSelection) -> Result<EnergyResult, ScatterError> {
        let (e_total, note) = self.guard_threshold(e_total);
        let mut notes: Vec<String> = note.into_iter().collect();
        let levels = self.levels();
        let energy_of = |k: LevelKey| levels.iter().find(|(l, _)| *l == k).map(|(_, e)| *e).unwrap_or(f64::NAN);

        let block_sum = |j: u32| -> Result<BTreeMap<TransitionKey, f64>, ScatterError> {
            let (even, odd) = rayon::join(|| self.solve_block(e_total, j, 1), || self.solve_block(e_total, j, -1));
            let mut acc = BTreeMap::new();
            accumulate_block(&even?, &mut acc);
            accumulate_block(&odd?, &mut acc);
            Ok(acc)
        };

        let mut total: BTreeMap<TransitionKey, f64> = BTreeMap::new();
        let mut j_values = Vec::new();
        let converged = match selection {
            JSelection::Fixed(js) => {
                for &j in js {
                    for (k, v) in block_sum(j)? {
                        *total.entry(k).or_insert(0.0) += v;
                    }
                    j_values.push(j);
                }
                true
            }
            JSelection::Converge {
                j_cap,
                tolerance,
                window,
            } => {
                let mut history: Vec<BTreeMap<TransitionKey, f64>> = Vec::new();
                let mut done = false;
                for j in 0..=*j_cap {
                    let contrib = block_sum(j)?;
                    for (k, v) in &contrib {
                        *total.entry(*k).or_insert(0.0) += v;
                    }
                    history.push(contrib);
                    j_values.push(j);
                    if history.len() >= (*window).max(1) && j_sum_converged(&total, &history, *window, *tolerance) {
                        done = true;
                        break;
                    }
                }
                done
            }
        };
        let sigma = finalize(&total, energy_of, e_total, self.reduced_mass);
        let result = EnergyResult {
            e_total,
            sigma,
            j_values,
            converged,
            notes: std::mem::take(&mut notes),
        };
        if !converged {
            return Err(ScatterError::Unconverged(Box::new(result)));
        }
        Ok(result)
    }

    /// Cross-section table over a list of total energies, in parallel.
    pub fn cross_section_table(&self, energies: &[f64], selection: &JSelection) -> Result<CrossSectionTable, ScatterError> {
        self.cross_section_scan(energies, selection).map(|(t, _)| t)
    }

    /// As [`Self::cross_section_table`], also returning the per-energy
    /// results in input order for convergence diagnostics.
    pub fn cross_section_scan(
        &self,
        energies: &[f64],
        selection: &JSelection,
    ) -> Result<(CrossSectionTable, Vec<EnergyResult>), ScatterError> {
        let results: Vec<EnergyResult> = energies
            .par_iter()
            .map(|&e| self.energy_cross_sections(e, selection))
            .collect::<Result<_, _>>()?;
        let levels = self.levels();
        let mut table = CrossSectionTable::default();
        for r in &results {
            for (&(i, f), &sigma) in &r.sigma {
                let eps = levels.iter().find(|(k, _)| *k == i).map(|(_, e)| *e).unwrap_or(f64::NAN);
                table.entries.push(CrossSectionEntry {
                    initial: i,
                    final_level: f,
                    e_total: r.e_total,
                    e_collision: r.e_total - eps,
                    sigma,
                });
            }
        }
        table.sort();
        Ok((table, results))
    }
}

/// Joint contribution of the last `window` J values relative to the running
/// total, over inelastic transitions that are not negligibly small.
fn j_sum_converged(
    total: &BTreeMap<TransitionKey, f64>,
    history: &[BTreeMap<TransitionKey, f64>],
    window: usize,
    tolerance: f64,
) -> bool {
    let largest = total
        .iter()
        .filter(|((i, f), _)| i != f)
        .map(|(_, v)| *v)
        .fold(0.0f64, f64::max);
    let recent = &history[history.len() - window.max(1)..];
    total.iter().filter(|((i, f), _)| i != f).all(|(k, &t)| {
        if t <= 1e-12 * largest {
            return true;
        }
        let tail: f64 = recent.iter().map(|h| h.get(k).copied().unwrap_or(0.0)).sum();
        tail <= tolerance * t
    })
}

/// Default collision-energy grid: logarithmic below `split`, linear above.
pub fn energy_grid(e_min: f64, e_max: f64, points: usize, split: f64) -> Vec<f64> {
    assert!(points >= 2 && e_min > 0.0 && e_max > e_min);
    if split <= e_min || split >= e_max {
        let r = (e_max / e_min).ln();
        return (0..points).map(|k| e_min * (r * k as f64 / (points - 1) as f64).exp()).collect();
    }
    let n_log = points / 2;
    let n_lin = points - n_log;
    let r = (split / e_min).ln();
    let mut out: Vec<f64> = (0..n_log).map(|k| e_min * (r * k as f64 / n_log as f64).exp()).collect();
    out.extend((0..n_lin).map(|k| split + (e_max - split) * k as f64 / (n_lin - 1) as f64));
    out
}
