//! Rigid-rotor species, level energies and Boltzmann statistics.

use serde::{Deserialize, Serialize};

use crate::constants::K_B_CM;

/// Default partition-function cutoff.
pub const DEFAULT_JMAX: u32 = 60;
/// Default bound on the neglected partition-function tail, relative to `Q`.
pub const DEFAULT_TAIL_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum MolsysError {
    #[error("invalid species {label}: {reason}")]
    InvalidSpecies { label: String, reason: String },
    #[error("temperature must be positive, got {0} K")]
    NonPositiveTemperature(f64),
    #[error("level j = {j} exceeds the cutoff jmax = {jmax}")]
    LevelAboveCutoff { j: u32, jmax: u32 },
    #[error("partition function not converged at jmax = {jmax}: tail {tail:.3e} exceeds {tolerance:.1e}")]
    Unconverged { jmax: u32, tail: f64, tolerance: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum JParity {
    Even,
    Odd,
}

impl JParity {
    pub fn admits(self, j: u32) -> bool {
        match self {
            JParity::Even => j % 2 == 0,
            JParity::Odd => j % 2 == 1,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpinIsomer {
    pub label: String,
    pub parity: JParity,
    pub weight: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RigidRotorSpecies {
    pub label: String,
    /// Rotational constant in cm⁻¹.
    pub rotational_constant: f64,
    /// Mass in u.
    pub mass: f64,
    #[serde(default)]
    pub spin_isomers: Option<Vec<SpinIsomer>>,
}

impl RigidRotorSpecies {
    /// ¹²C¹⁶O.
    pub fn co() -> Self {
        RigidRotorSpecies {
            label: "CO".into(),
            rotational_constant: 1.8875,
            mass: 27.9949,
            spin_isomers: None,
        }
    }

    /// ¹H₂ with para (even j) and ortho (odd j) modifications at 1:3.
    pub fn h2() -> Self {
        RigidRotorSpecies {
            label: "H2".into(),
            rotational_constant: 59.322,
            mass: 2.01565,
            spin_isomers: Some(vec![
                SpinIsomer {
                    label: "para".into(),
                    parity: JParity::Even,
                    weight: 0.25,
                },
                SpinIsomer {
                    label: "ortho".into(),
                    parity: JParity::Odd,
                    weight: 0.75,
                },
            ]),
        }
    }

    /// A structureless partner (atom) for reference calculations.
    pub fn atom(label: &str, mass: f64) -> Self {
        RigidRotorSpecies {
            label: label.into(),
            rotational_constant: f64::MIN_POSITIVE,
            mass,
            spin_isomers: None,
        }
    }

    pub fn validate(&self) -> Result<(), MolsysError> {
        let bad = |reason: &str| MolsysError::InvalidSpecies {
            label: self.label.clone(),
            reason: reason.into(),
        };
        if !(self.rotational_constant > 0.0 && self.rotational_constant.is_finite()) {
            return Err(bad("rotational constant must be positive"));
        }
        if !(self.mass > 0.0) {
            return Err(bad("mass must be positive"));
        }
        if let Some(isomers) = &self.spin_isomers {
            let total: f64 = isomers.iter().map(|i| i.weight).sum();
            if (total - 1.0).abs() > 1e-12 || isomers.iter().any(|i| i.weight < 0.0) {
                return Err(bad("spin-isomer weights must be non-negative and sum to 1"));
            }
        }
        Ok(())
    }

    pub fn isomer(&self, label: &str) -> Option<&SpinIsomer> {
        self.spin_isomers.as_ref()?.iter().find(|i| i.label == label)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RotorLevel {
    pub j: u32,
    pub energy: f64,
    pub degeneracy: u32,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ThermalContext {
    /// Kelvin.
    pub temperature: f64,
    /// Reduced mass of the collision pair in u.
    pub reduced_mass: f64,
}

impl ThermalContext {
    pub fn new(temperature: f64, reduced_mass: f64) -> Result<Self, MolsysError> {
        if !(temperature > 0.0) {
            return Err(MolsysError::NonPositiveTemperature(temperature));
        }
        Ok(ThermalContext {
            temperature,
            reduced_mass,
        })
    }

    pub fn boltzmann_constant_cm(&self) -> f64 {
        K_B_CM
    }

    /// `k_B T` in cm⁻¹.
    pub fn kt(&self) -> f64 {
        K_B_CM * self.temperature
    }
}

pub fn level_energy(species: &RigidRotorSpecies, j: u32) -> f64 {
    let j = j as f64;
    species.rotational_constant * j * (j + 1.0)
}

pub fn level(species: &RigidRotorSpecies, j: u32) -> RotorLevel {
    RotorLevel {
        j,
        energy: level_energy(species, j),
        degeneracy: 2 * j + 1,
    }
}

pub fn reduced_mass(mass_a: f64, mass_b: f64) -> f64 {
    if mass_a.is_infinite() {
        return mass_b;
    }
    if mass_b.is_infinite() {
        return mass_a;
    }
    mass_a * mass_b / (mass_a + mass_b)
}

fn weight(species: &RigidRotorSpecies, j: u32, kt: f64) -> f64 {
    (2 * j + 1) as f64 * (-level_energy(species, j) / kt).exp()
}

/// Unnormalized Boltzmann weights `(2j+1) e^{-E_j/kT}` for `j = 0..=jmax`
/// together with the neglected tail relative to the full sum.
fn weights_with_tail(species: &RigidRotorSpecies, jmax: u32, t: f64) -> (Vec<f64>, f64) {
    let kt = K_B_CM * t;
    let w: Vec<f64> = (0..=jmax).map(|j| weight(species, j, kt)).collect();
    let q: f64 = w.iter().sum();
    let mut tail = 0.0;
    let mut j = jmax + 1;
    loop {
        let term = weight(species, j, kt);
        tail += term;
        if term <= 1e-17 * (q + tail) || j > jmax + 100_000 {
            break;
        }
        j += 1;
    }
    (w, tail / (q + tail))
}

/// Partition function summed to `jmax`.
pub fn partition_function(species: &RigidRotorSpecies, jmax: u32, t: f64) -> Result<f64, MolsysError> {
    if !(t > 0.0) {
        return Err(MolsysError::NonPositiveTemperature(t));
    }
    Ok(weights_with_tail(species, jmax, t).0.iter().sum())
}

/// Relative size of the partition-function tail beyond `jmax`.
pub fn tail_bound(species: &RigidRotorSpecies, jmax: u32, t: f64) -> f64 {
    weights_with_tail(species, jmax, t).1
}

/// Boltzmann fractions for `j = 0..=jmax`, normalized over that range, with a
/// convergence check on the neglected tail.
pub fn boltzmann_fractions_checked(
    species: &RigidRotorSpecies,
    jmax: u32,
    t: f64,
    tolerance: f64,
) -> Result<Vec<f64>, MolsysError> {
    if !(t > 0.0) {
        return Err(MolsysError::NonPositiveTemperature(t));
    }
    let (w, tail) = weights_with_tail(species, jmax, t);
    if tail > tolerance {
        return Err(MolsysError::Unconverged {
            jmax,
            tail,
            tolerance,
        });
    }
    let q: f64 = w.iter().sum();
    Ok(w.into_iter().map(|x| x / q).collect())
}

/// Boltzmann fractions normalized over `j = 0..=jmax` without a tail check,
/// for truncated level ladders whose equilibrium is defined on the ladder.
pub fn boltzmann_fractions_truncated(species: &RigidRotorSpecies, jmax: u32, t: f64) -> Vec<f64> {
    let (w, _) = weights_with_tail(species, jmax, t);
    let q: f64 = w.iter().sum();
    w.into_iter().map(|x| x / q).collect()
}

/// `(2j+1) e^{-E_j/kT} / Q` with `Q` summed to `jmax`.
pub fn boltzmann_fraction(species: &RigidRotorSpecies, jmax: u32, t: f64, j: u32) -> Result<f64, MolsysError> {
    if j > jmax {
        return Err(MolsysError::LevelAboveCutoff { j, jmax });
    }
    Ok(boltzmann_fractions_checked(species, jmax, t, DEFAULT_TAIL_TOLERANCE)?[j as usize])
}
