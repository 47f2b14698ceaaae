//! Entry-by-entry comparison of two rate tables.

use serde::{Deserialize, Serialize};

use crate::thermal::{Provenance, RateTable};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Deviation {
    pub j_i: u32,
    pub j_f: u32,
    pub k: f64,
    pub k_reference: f64,
    /// `k / k_reference`; `None` when the reference is zero.
    pub ratio: Option<f64>,
    /// `k - k_reference`, cm³ s⁻¹.
    pub difference: f64,
    /// Quadrature sum of whichever 2σ errors the two tables carry.
    pub combined_err2sigma: Option<f64>,
    /// `difference / (combined 2σ / 2)`.
    pub z: Option<f64>,
    /// `|difference|` exceeds the combined 2σ.
    pub flagged: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CompareSummary {
    pub count: usize,
    pub flagged: usize,
    pub mean_ratio: Option<f64>,
    pub max_abs_log_ratio: Option<f64>,
    pub rms_z: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CompareReport {
    pub provenance: Provenance,
    pub reference_provenance: Provenance,
    pub deviations: Vec<Deviation>,
    pub summary: CompareSummary,
    /// Set when the two tables share no entries.
    pub disjoint: bool,
}

impl CompareReport {
    pub fn get(&self, j_i: u32, j_f: u32) -> Option<&Deviation> {
        self.deviations.iter().find(|d| d.j_i == j_i && d.j_f == j_f)
    }
}

/// Compare every `(j_i, j_f)` present in both tables, optionally restricted
/// to an explicit transition set.
pub fn compare_to_reference(table: &RateTable, reference: &RateTable, only: Option<&[(u32, u32)]>) -> CompareReport {
    let mut deviations = Vec::new();
    for (key, v) in &table.entries {
        if only.is_some_and(|set| !set.contains(key)) {
            continue;
        }
        let Some(r) = reference.entries.get(key) else { continue };
        let errs: Vec<f64> = [v.err2sigma, r.err2sigma].into_iter().flatten().collect();
        let combined = (!errs.is_empty()).then(|| errs.iter().map(|e| e * e).sum::<f64>().sqrt());
        let difference = v.k - r.k;
        let z = combined.filter(|&c| c > 0.0).map(|c| difference / (0.5 * c));
        deviations.push(Deviation {
            j_i: key.0,
            j_f: key.1,
            k: v.k,
            k_reference: r.k,
            ratio: (r.k != 0.0).then(|| v.k / r.k),
            difference,
            combined_err2sigma: combined,
            z,
            flagged: combined.is_some_and(|c| difference.abs() > c),
        });
    }
    let ratios: Vec<f64> = deviations.iter().filter_map(|d| d.ratio).collect();
    let zs: Vec<f64> = deviations.iter().filter_map(|d| d.z).collect();
    let summary = CompareSummary {
        count: deviations.len(),
        flagged: deviations.iter().filter(|d| d.flagged).count(),
        mean_ratio: (!ratios.is_empty()).then(|| ratios.iter().sum::<f64>() / ratios.len() as f64),
        max_abs_log_ratio: ratios
            .iter()
            .filter(|r| **r > 0.0)
            .map(|r| r.ln().abs())
            .fold(None, |m: Option<f64>, v| Some(m.map_or(v, |m| m.max(v)))),
        rms_z: (!zs.is_empty()).then(|| (zs.iter().map(|z| z * z).sum::<f64>() / zs.len() as f64).sqrt()),
    };
    let disjoint = deviations.is_empty();
    if disjoint {
        log::warn!("tables share no transitions; comparison is empty");
    }
    CompareReport {
        provenance: table.provenance,
        reference_provenance: reference.provenance,
        deviations,
        summary,
        disjoint,
    }
}
