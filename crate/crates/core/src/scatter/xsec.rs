use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::SMatrix;
use crate::constants::{wavenumber_scale, BOHR_ANGSTROM};

/// Rotor-pair level `(j1, j2)`.
pub type LevelKey = (u32, u32);
pub type TransitionKey = (LevelKey, LevelKey);

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CrossSectionEntry {
    pub initial: LevelKey,
    pub final_level: LevelKey,
    /// cm⁻¹
    pub e_total: f64,
    /// Collision energy relative to the initial level, cm⁻¹.
    pub e_collision: f64,
    /// Å²
    pub sigma: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct CrossSectionTable {
    pub entries: Vec<CrossSectionEntry>,
}

impl CrossSectionTable {
    pub fn sort(&mut self) {
        self.entries.sort_by(|a, b| {
            a.initial
                .cmp(&b.initial)
                .then(a.final_level.cmp(&b.final_level))
                .then(a.e_collision.total_cmp(&b.e_collision))
        });
    }

    /// `(E_collision, σ)` pairs of one transition in ascending energy.
    pub fn series(&self, initial: LevelKey, final_level: LevelKey) -> Vec<(f64, f64)> {
        let mut out: Vec<(f64, f64)> = self
            .entries
            .iter()
            .filter(|e| e.initial == initial && e.final_level == final_level)
            .map(|e| (e.e_collision, e.sigma))
            .collect();
        out.sort_by(|a, b| a.0.total_cmp(&b.0));
        out
    }

    pub fn get(&self, initial: LevelKey, final_level: LevelKey, e_total: f64) -> Option<f64> {
        self.entries
            .iter()
            .find(|e| e.initial == initial && e.final_level == final_level && (e.e_total - e_total).abs() < 1e-9)
            .map(|e| e.sigma)
    }

    /// Columns `E_coll_cm1, j1, j2, j1p, j2p, sigma_A2, E_total_cm1`.
    pub fn to_delimited(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["E_coll_cm1", "j1", "j2", "j1p", "j2p", "sigma_A2", "E_total_cm1"])
            .expect("in-memory write");
        for e in &self.entries {
            w.write_record([
                format!("{:?}", e.e_collision),
                e.initial.0.to_string(),
                e.initial.1.to_string(),
                e.final_level.0.to_string(),
                e.final_level.1.to_string(),
                format!("{:?}", e.sigma),
                format!("{:?}", e.e_total),
            ])
            .expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8")
    }

    /// Inverse of [`Self::to_delimited`].
    pub fn from_delimited(text: &str) -> Result<Self, String> {
        let mut rdr = csv::Reader::from_reader(text.as_bytes());
        let header = rdr.headers().map_err(|e| e.to_string())?;
        if header.iter().collect::<Vec<_>>() != ["E_coll_cm1", "j1", "j2", "j1p", "j2p", "sigma_A2", "E_total_cm1"] {
            return Err(format!("unexpected header {header:?}"));
        }
        let mut table = CrossSectionTable::default();
        for (row, rec) in rdr.records().enumerate() {
            let rec = rec.map_err(|e| e.to_string())?;
            let f = |i: usize| rec[i].parse::<f64>().map_err(|e| format!("row {}: {e}", row + 2));
            let j = |i: usize| rec[i].parse::<u32>().map_err(|e| format!("row {}: {e}", row + 2));
            table.entries.push(CrossSectionEntry {
                initial: (j(1)?, j(2)?),
                final_level: (j(3)?, j(4)?),
                e_total: f(6)?,
                e_collision: f(0)?,
                sigma: f(5)?,
            });
        }
        table.sort();
        Ok(table)
    }
}

/// Add `(2J+1) Σ |δ - S|²` of one block to `acc`, keyed by level transition.
pub fn accumulate_block(s: &SMatrix, acc: &mut BTreeMap<TransitionKey, f64>) {
    let weight = (2 * s.total_j + 1) as f64;
    let n = s.open_channels.len();
    for a in 0..n {
        let fa = (s.open_channels[a].j1, s.open_channels[a].j2);
        for b in 0..n {
            let ib = (s.open_channels[b].j1, s.open_channels[b].j2);
            let mut t = -s.matrix[(a, b)];
            if a == b {
                t += 1.0;
            }
            let v = t.norm_sqr();
            *acc.entry((ib, fa)).or_insert(0.0) += weight * v;
        }
    }
}

/// Convert accumulated `Σ_J (2J+1) Σ |δ - S|²` into cross sections in Å².
pub fn finalize(
    acc: &BTreeMap<TransitionKey, f64>,
    level_energy: impl Fn(LevelKey) -> f64,
    e_total: f64,
    reduced_mass: f64,
) -> BTreeMap<TransitionKey, f64> {
    let scale = wavenumber_scale(reduced_mass);
    acc.iter()
        .map(|(&(i, f), &v)| {
            let k2 = scale * (e_total - level_energy(i));
            let g = ((2 * i.0 + 1) * (2 * i.1 + 1)) as f64;
            let sigma = std::f64::consts::PI / (k2 * g) * v * BOHR_ANGSTROM * BOHR_ANGSTROM;
            ((i, f), sigma)
        })
        .collect()
}

/// Cross sections from a set of S-matrix blocks at one total energy.
pub fn cross_sections(
    blocks: &[SMatrix],
    level_energy: impl Fn(LevelKey) -> f64,
    reduced_mass: f64,
) -> BTreeMap<TransitionKey, f64> {
    let mut acc = BTreeMap::new();
    let mut e_total = f64::NAN;
    for s in blocks {
        e_total = s.energy;
        accumulate_block(s, &mut acc);
    }
    finalize(&acc, level_energy, e_total, reduced_mass)
}
