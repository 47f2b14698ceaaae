//! Thermal rate coefficients from cross sections, nuclear-spin weighting and
//! detailed-balance completion of rate tables.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::constants::{AMU_KG, K_B_CM, K_B_J};
use crate::molsys::{level_energy, RigidRotorSpecies};
use crate::scatter::{CrossSectionTable, LevelKey};

/// Energy coverage required by the quadrature, in units of `k_B T`.
pub const TAIL_COVERAGE_KT: f64 = 8.0;
/// Para and ortho weights of normal hydrogen.
pub const PARA_WEIGHT: f64 = 0.25;
pub const ORTHO_WEIGHT: f64 = 0.75;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ThermalError {
    #[error("energy grid ends at {e_max} cm-1 but {TAIL_COVERAGE_KT} kT = {needed} cm-1 is required")]
    TailCoverage { e_max: f64, needed: f64 },
    #[error("invalid cross-section samples: {0}")]
    InvalidSamples(String),
    #[error("temperature must be positive, got {0} K")]
    NonPositiveTemperature(f64),
    #[error("spin weighting needs matching transitions and temperatures: {0}")]
    Mismatch(String),
    #[error("rate table: {0}")]
    Format(String),
}

/// Mean relative speed `√(8 k_B T / π μ)` in cm s⁻¹.
pub fn mean_speed(reduced_mass: f64, temperature: f64) -> f64 {
    let mu = reduced_mass * AMU_KG;
    (8.0 * K_B_J * temperature / (std::f64::consts::PI * mu)).sqrt() * 100.0
}

/// Maxwell-Boltzmann rate coefficient in cm³ s⁻¹ from `(E_collision cm⁻¹,
/// σ Å²)` samples of one transition.
///
/// `P(E) = σ(E) E` is interpolated linearly between samples and integrated
/// exactly against `e^{-E/kT}`. Below the first sample `P` falls linearly to
/// zero at `threshold` (0 for exoergic and elastic transitions). Beyond the
/// last sample σ is held constant. The grid must reach `8 kT`.
pub fn rate_from_sigma(
    samples: &[(f64, f64)],
    threshold: f64,
    reduced_mass: f64,
    temperature: f64,
) -> Result<f64, ThermalError> {
    if !(temperature > 0.0) {
        return Err(ThermalError::NonPositiveTemperature(temperature));
    }
    if samples.is_empty() {
        return Err(ThermalError::InvalidSamples("no samples".into()));
    }
    let kt = K_B_CM * temperature;
    let threshold = threshold.max(0.0);
    let mut prev_e = threshold;
    for &(e, s) in samples {
        if !e.is_finite() || !s.is_finite() || s < 0.0 {
            return Err(ThermalError::InvalidSamples(format!("sample ({e}, {s})")));
        }
        if e <= prev_e && !(e == threshold && prev_e == threshold) {
            return Err(ThermalError::InvalidSamples(format!(
                "energies must increase from the threshold {threshold}; got {e} after {prev_e}"
            )));
        }
        prev_e = e;
    }
    let (e_last, s_last) = *samples.last().unwrap();
    let needed = TAIL_COVERAGE_KT * kt;
    if e_last < needed {
        return Err(ThermalError::TailCoverage { e_max: e_last, needed });
    }

    // Work in x = E/kT; the integral is ∫ σ(x) x e^{-x} dx.
    let mut nodes = Vec::with_capacity(samples.len() + 1);
    if samples[0].0 > threshold {
        nodes.push((threshold / kt, 0.0));
    }
    nodes.extend(samples.iter().map(|&(e, s)| (e / kt, s * e / kt)));
    let mut integral = 0.0;
    for pair in nodes.windows(2) {
        let ((x0, p0), (x1, p1)) = (pair[0], pair[1]);
        integral += linear_times_exp(x0, p0, x1, p1);
    }
    let xn = e_last / kt;
    integral += s_last * (xn + 1.0) * (-xn).exp();
    Ok(mean_speed(reduced_mass, temperature) * integral * 1e-16)
}

/// `∫_{x0}^{x1} P(x) e^{-x} dx` for `P` linear between `(x0, p0)` and `(x1, p1)`.
fn linear_times_exp(x0: f64, p0: f64, x1: f64, p1: f64) -> f64 {
    let h = x1 - x0;
    if h <= 0.0 {
        return 0.0;
    }
    let slope = (p1 - p0) / h;
    // ∫ (p0 + m t) e^{-(x0+t)} dt over [0, h]
    let e0 = (-x0).exp();
    let decay = -(-h).exp_m1(); // 1 - e^{-h}
    e0 * (p0 * decay + slope * (decay - h * (-h).exp()))
}

/// `k_normal = ¼ k_para + ¾ k_ortho`.
pub fn spin_weighted_rate(k_para: f64, k_ortho: f64) -> f64 {
    PARA_WEIGHT * k_para + ORTHO_WEIGHT * k_ortho
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Provenance {
    Computed,
    Reference,
    Extracted,
}

impl fmt::Display for Provenance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Provenance::Computed => "computed",
            Provenance::Reference => "reference",
            Provenance::Extracted => "extracted",
        })
    }
}

impl FromStr for Provenance {
    type Err = ThermalError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "computed" => Ok(Provenance::Computed),
            "reference" => Ok(Provenance::Reference),
            "extracted" => Ok(Provenance::Extracted),
            other => Err(ThermalError::Format(format!("unknown provenance {other:?}"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RateValue {
    /// cm³ s⁻¹
    pub k: f64,
    /// Two-standard-deviation uncertainty, cm³ s⁻¹.
    pub err2sigma: Option<f64>,
}

/// State-to-state rate coefficients of one rotor at one temperature, keyed by
/// `(j_i, j_f)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RateTable {
    /// K
    pub temperature: f64,
    #[serde(with = "crate::serde_pairs")]
    pub entries: BTreeMap<(u32, u32), RateValue>,
    pub provenance: Provenance,
}

impl RateTable {
    pub fn new(temperature: f64, provenance: Provenance) -> Self {
        RateTable {
            temperature,
            entries: BTreeMap::new(),
            provenance,
        }
    }

    pub fn insert(&mut self, j_i: u32, j_f: u32, k: f64, err2sigma: Option<f64>) {
        self.entries.insert((j_i, j_f), RateValue { k, err2sigma });
    }

    pub fn rate(&self, j_i: u32, j_f: u32) -> Option<f64> {
        self.entries.get(&(j_i, j_f)).map(|v| v.k)
    }

    /// Initial levels present in the table.
    pub fn initial_levels(&self) -> Vec<u32> {
        let mut v: Vec<u32> = self.entries.keys().map(|k| k.0).collect();
        v.dedup();
        v
    }

    /// Sum over final levels of the rates out of `j_i`, excluding elastic entries.
    pub fn total_out(&self, j_i: u32) -> f64 {
        self.entries
            .range((j_i, 0)..=(j_i, u32::MAX))
            .filter(|(k, _)| k.1 != j_i)
            .map(|(_, v)| v.k)
            .sum()
    }

    pub fn validate(&self) -> Result<(), ThermalError> {
        if !(self.temperature > 0.0) {
            return Err(ThermalError::NonPositiveTemperature(self.temperature));
        }
        for (&(i, f), v) in &self.entries {
            if !(v.k >= 0.0) || !v.k.is_finite() {
                return Err(ThermalError::Format(format!("rate {i}->{f} is {} (must be finite and >= 0)", v.k)));
            }
            if let Some(e) = v.err2sigma {
                if !(e >= 0.0) {
                    return Err(ThermalError::Format(format!("uncertainty {i}->{f} is {e}")));
                }
            }
        }
        Ok(())
    }

    /// Largest relative violation of detailed balance over pairs present in
    /// both directions.
    pub fn detailed_balance_violation(&self, species: &RigidRotorSpecies) -> f64 {
        let kt = K_B_CM * self.temperature;
        let mut worst = 0.0f64;
        for (&(i, f), v) in &self.entries {
            if i >= f {
                continue;
            }
            if let Some(r) = self.entries.get(&(f, i)) {
                let expect = reverse_rate(species, i, f, v.k, kt);
                let scale = expect.abs().max(r.k.abs());
                if scale > 0.0 {
                    worst = worst.max((expect - r.k).abs() / scale);
                }
            }
        }
        worst
    }

    /// Delimited text with header `T_K,j_i,j_f,k_cm3s,err2sigma_cm3s,provenance`.
    /// Numbers use the shortest representation that round-trips exactly.
    pub fn to_delimited(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["T_K", "j_i", "j_f", "k_cm3s", "err2sigma_cm3s", "provenance"])
            .expect("in-memory write");
        for (&(i, f), v) in &self.entries {
            w.write_record([
                format!("{:?}", self.temperature),
                i.to_string(),
                f.to_string(),
                format!("{:e}", v.k),
                v.err2sigma.map(|e| format!("{e:e}")).unwrap_or_default(),
                self.provenance.to_string(),
            ])
            .expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8")
    }

    pub fn from_delimited(text: &str) -> Result<Self, ThermalError> {
        let mut r = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(text.as_bytes());
        let header = r.headers().map_err(|e| ThermalError::Format(e.to_string()))?.clone();
        let expected = ["T_K", "j_i", "j_f", "k_cm3s", "err2sigma_cm3s", "provenance"];
        if header.iter().collect::<Vec<_>>() != expected {
            return Err(ThermalError::Format(format!("unexpected header {:?}", header)));
        }
        let mut table: Option<RateTable> = None;
        for (line, rec) in r.records().enumerate() {
            let rec = rec.map_err(|e| ThermalError::Format(e.to_string()))?;
            let bad = |what: &str| ThermalError::Format(format!("row {}: bad {what}", line + 2));
            let t: f64 = rec[0].parse().map_err(|_| bad("T_K"))?;
            let i: u32 = rec[1].parse().map_err(|_| bad("j_i"))?;
            let f: u32 = rec[2].parse().map_err(|_| bad("j_f"))?;
            let k: f64 = rec[3].parse().map_err(|_| bad("k_cm3s"))?;
            let err = if rec[4].is_empty() {
                None
            } else {
                Some(rec[4].parse::<f64>().map_err(|_| bad("err2sigma_cm3s"))?)
            };
            let prov: Provenance = rec[5].parse()?;
            let tab = table.get_or_insert_with(|| RateTable::new(t, prov));
            if tab.temperature != t || tab.provenance != prov {
                return Err(ThermalError::Format(format!(
                    "row {}: mixed temperatures or provenances in one table",
                    line + 2
                )));
            }
            tab.insert(i, f, k, err);
        }
        let table = table.ok_or_else(|| ThermalError::Format("no rows".into()))?;
        table.validate()?;
        Ok(table)
    }
}

fn reverse_rate(species: &RigidRotorSpecies, i: u32, f: u32, k_forward: f64, kt: f64) -> f64 {
    let gi = (2 * i + 1) as f64;
    let gf = (2 * f + 1) as f64;
    let de = level_energy(species, f) - level_energy(species, i);
    k_forward * gi / gf * (de / kt).exp()
}

/// Fill every missing reverse entry by detailed balance at `temperature`;
/// entries already present are left untouched.
pub fn detailed_balance_complete(table: &RateTable, species: &RigidRotorSpecies, temperature: f64) -> RateTable {
    let kt = K_B_CM * temperature;
    let mut out = table.clone();
    for (&(i, f), v) in &table.entries {
        if i == f || table.entries.contains_key(&(f, i)) {
            continue;
        }
        let ratio = reverse_rate(species, i, f, 1.0, kt);
        out.entries.insert(
            (f, i),
            RateValue {
                k: v.k * ratio,
                err2sigma: v.err2sigma.map(|e| e * ratio),
            },
        );
    }
    out
}

/// Spin-weighted combination of para and ortho tables with identical keys.
pub fn spin_weighted_table(para: &RateTable, ortho: &RateTable) -> Result<RateTable, ThermalError> {
    spin_weighted_table_with(para, ortho, PARA_WEIGHT, ORTHO_WEIGHT)
}

/// As [`spin_weighted_table`] with explicit isomer weights.
pub fn spin_weighted_table_with(
    para: &RateTable,
    ortho: &RateTable,
    para_weight: f64,
    ortho_weight: f64,
) -> Result<RateTable, ThermalError> {
    if para.temperature != ortho.temperature {
        return Err(ThermalError::Mismatch(format!(
            "temperatures {} K and {} K",
            para.temperature, ortho.temperature
        )));
    }
    if para.entries.keys().ne(ortho.entries.keys()) {
        return Err(ThermalError::Mismatch("transition sets differ".into()));
    }
    let mut out = RateTable::new(para.temperature, Provenance::Computed);
    for (key, p) in &para.entries {
        let o = &ortho.entries[key];
        let err = match (p.err2sigma, o.err2sigma) {
            (Some(a), Some(b)) => Some(((para_weight * a).powi(2) + (ortho_weight * b).powi(2)).sqrt()),
            _ => None,
        };
        out.entries.insert(
            *key,
            RateValue {
                k: para_weight * p.k + ortho_weight * o.k,
                err2sigma: err,
            },
        );
    }
    Ok(out)
}

/// Rotor rate table from a rotor-pair cross-section table: the partner's
/// initial levels are Boltzmann-averaged and its final levels summed.
///
/// `partner_levels` lists the partner levels to average over (for example
/// the even levels for para-H2). Transitions whose samples are all zero give
/// exactly zero rates.
pub fn rotor_rates(
    table: &CrossSectionTable,
    rotor: &RigidRotorSpecies,
    partner: &RigidRotorSpecies,
    partner_levels: &[u32],
    reduced_mass: f64,
    temperature: f64,
) -> Result<RateTable, ThermalError> {
    if !(temperature > 0.0) {
        return Err(ThermalError::NonPositiveTemperature(temperature));
    }
    let kt = K_B_CM * temperature;
    let weights: Vec<(u32, f64)> = partner_levels
        .iter()
        .map(|&j| (j, (2 * j + 1) as f64 * (-level_energy(partner, j) / kt).exp()))
        .collect();
    let norm: f64 = weights.iter().map(|w| w.1).sum();

    let mut transitions: BTreeMap<(LevelKey, LevelKey), ()> = BTreeMap::new();
    for e in &table.entries {
        if partner_levels.contains(&e.initial.1) {
            transitions.insert((e.initial, e.final_level), ());
        }
    }
    let pair_energy = |k: LevelKey| level_energy(rotor, k.0) + level_energy(partner, k.1);
    let mut out = RateTable::new(temperature, Provenance::Computed);
    for &(i, f) in transitions.keys() {
        let samples = table.series(i, f);
        let threshold = (pair_energy(f) - pair_energy(i)).max(0.0);
        let k = if samples.iter().all(|s| s.1 == 0.0) {
            0.0
        } else {
            rate_from_sigma(&samples, threshold, reduced_mass, temperature)?
        };
        let w = weights.iter().find(|x| x.0 == i.1).map(|x| x.1).unwrap_or(0.0) / norm;
        let entry = out.entries.entry((i.0, f.0)).or_insert(RateValue { k: 0.0, err2sigma: None });
        entry.k += w * k;
    }
    Ok(out)
}
