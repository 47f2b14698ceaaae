//! Even/odd propensity and energy-gap diagnostics for one initial level.

use serde::{Deserialize, Serialize};

use crate::molsys::{level_energy, RigidRotorSpecies};
use crate::thermal::RateTable;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Branch {
    /// `j_f > j_i`
    Up,
    /// `j_f < j_i`
    Down,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Propensity {
    Even,
    Odd,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PropensityEntry {
    pub branch: Branch,
    pub j_f: u32,
    pub delta_j: u32,
    /// cm³ s⁻¹
    pub k: f64,
    /// `|E(j_f) - E(j_i)|`, cm⁻¹.
    pub energy_gap: f64,
    /// `k(Δj) / mean(k(Δj-1), k(Δj+1))` over the neighbors present in the
    /// same branch.
    pub contrast: Option<f64>,
    /// `ln k(Δj) - mean(ln k(Δj±1))` with both neighbors present; zero for
    /// a geometric sequence.
    pub alternation: Option<f64>,
    /// Residual `ln k - (ln A - β|ΔE|)` of the energy-gap fit.
    pub gap_residual: Option<f64>,
}

/// `k = A e^{-β|ΔE|}` fitted to `ln k` by linear least squares.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnergyGapFit {
    /// cm³ s⁻¹
    pub amplitude: f64,
    /// cm
    pub beta: f64,
    /// RMS of the `ln k` residuals.
    pub rms_residual: f64,
}

/// A rate that exceeds both of its Δj neighbors in the same branch.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PropensityFlag {
    pub branch: Branch,
    pub delta_j: u32,
    pub kind: Propensity,
    pub k: f64,
    pub neighbors: [f64; 2],
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PropensityReport {
    pub j_i: u32,
    pub temperature: f64,
    pub entries: Vec<PropensityEntry>,
    pub flags: Vec<PropensityFlag>,
    pub energy_gap: Option<EnergyGapFit>,
    pub warnings: Vec<String>,
}

impl PropensityReport {
    pub fn entry(&self, j_f: u32) -> Option<&PropensityEntry> {
        self.entries.iter().find(|e| e.j_f == j_f)
    }

    pub fn flagged(&self, branch: Branch, delta_j: u32) -> bool {
        self.flags.iter().any(|f| f.branch == branch && f.delta_j == delta_j)
    }
}

/// Build the diagnostic report for the rates out of `j_i`. Zero rates are
/// kept in the contrasts but left out of the logarithmic quantities.
pub fn propensity_report(table: &RateTable, j_i: u32, species: &RigidRotorSpecies) -> PropensityReport {
    let e_i = level_energy(species, j_i);
    let mut entries: Vec<PropensityEntry> = table
        .entries
        .range((j_i, 0)..=(j_i, u32::MAX))
        .filter(|(key, _)| key.1 != j_i)
        .map(|(&(_, j_f), v)| PropensityEntry {
            branch: if j_f > j_i { Branch::Up } else { Branch::Down },
            j_f,
            delta_j: j_f.abs_diff(j_i),
            k: v.k,
            energy_gap: (level_energy(species, j_f) - e_i).abs(),
            contrast: None,
            alternation: None,
            gap_residual: None,
        })
        .collect();
    let mut warnings = Vec::new();
    let mut flags = Vec::new();

    for branch in [Branch::Up, Branch::Down] {
        let mut idx: Vec<usize> = (0..entries.len()).filter(|&i| entries[i].branch == branch).collect();
        idx.sort_by_key(|&i| entries[i].delta_j);
        if idx.windows(2).any(|w| entries[w[1]].delta_j != entries[w[0]].delta_j + 1) {
            warnings.push(format!("{branch:?} branch of j_i={j_i} has gaps in Δj; neighbors across gaps are ignored"));
        }
        let lookup = |dj: u32| idx.iter().map(|&i| &entries[i]).find(|e| e.delta_j == dj).map(|e| e.k);
        let mut updates = Vec::new();
        for &i in &idx {
            let dj = entries[i].delta_j;
            let below = if dj > 1 { lookup(dj - 1) } else { None };
            let above = lookup(dj + 1);
            let k = entries[i].k;
            let present: Vec<f64> = [below, above].into_iter().flatten().collect();
            let contrast = if present.is_empty() {
                None
            } else {
                let mean = present.iter().sum::<f64>() / present.len() as f64;
                (mean > 0.0).then(|| k / mean)
            };
            let mut alternation = None;
            if let (Some(b), Some(a)) = (below, above) {
                if k > 0.0 && b > 0.0 && a > 0.0 {
                    alternation = Some(k.ln() - 0.5 * (b.ln() + a.ln()));
                }
                if k > b && k > a {
                    flags.push(PropensityFlag {
                        branch,
                        delta_j: dj,
                        kind: if dj % 2 == 0 { Propensity::Even } else { Propensity::Odd },
                        k,
                        neighbors: [b, a],
                    });
                }
            }
            updates.push((i, contrast, alternation));
        }
        for (i, c, a) in updates {
            entries[i].contrast = c;
            entries[i].alternation = a;
        }
    }

    let energy_gap = fit_energy_gap(&entries);
    if let Some(fit) = energy_gap {
        for e in entries.iter_mut().filter(|e| e.k > 0.0) {
            e.gap_residual = Some(e.k.ln() - (fit.amplitude.ln() - fit.beta * e.energy_gap));
        }
    } else if !entries.is_empty() {
        warnings.push(format!("energy-gap fit for j_i={j_i} needs two positive rates at distinct gaps"));
    }
    PropensityReport {
        j_i,
        temperature: table.temperature,
        entries,
        flags,
        energy_gap,
        warnings,
    }
}

fn fit_energy_gap(entries: &[PropensityEntry]) -> Option<EnergyGapFit> {
    let pts: Vec<(f64, f64)> = entries.iter().filter(|e| e.k > 0.0).map(|e| (e.energy_gap, e.k.ln())).collect();
    let n = pts.len() as f64;
    if pts.len() < 2 {
        return None;
    }
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx <= 0.0 {
        return None;
    }
    let slope = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum::<f64>() / sxx;
    let intercept = my - slope * mx;
    let rms = (pts.iter().map(|p| (p.1 - intercept - slope * p.0).powi(2)).sum::<f64>() / n).sqrt();
    Some(EnergyGapFit {
        amplitude: intercept.exp(),
        beta: -slope,
        rms_residual: rms,
    })
}
