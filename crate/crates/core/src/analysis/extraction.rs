//! State-to-state rates from short-delay and equilibrated line areas.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::spectra::{refit_multipeak_voigt, LineGuess, MultiPeakFit, VoigtFitOptions};
use super::AnalysisError;
use crate::thermal::{Provenance, RateTable};

/// Everything one extracted rate was computed from.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExtractionInputs {
    pub j_f: u32,
    pub area_short: f64,
    pub area_eq: f64,
    /// Equilibrium fraction of `j_f`.
    pub f_eq: f64,
    /// s
    pub delay: f64,
    /// cm⁻³
    pub density: f64,
}

impl ExtractionInputs {
    /// `k = (A(δt) / A(eq)) f_eq / (δt [H2])`; `None` when the
    /// equilibrated area vanishes.
    pub fn rate(&self) -> Option<f64> {
        if self.area_eq.abs() == 0.0 {
            return None;
        }
        Some(self.area_short / self.area_eq * self.f_eq / (self.delay * self.density))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "snake_case")]
pub enum UncertaintyMethod {
    /// Linear propagation of the fit covariances of both spectra.
    Covariance,
    /// Wild residual bootstrap: both spectra refitted with sign-flipped residuals.
    Bootstrap { replicates: usize, seed: u64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExtractionResult {
    pub j_i: u32,
    pub table: RateTable,
    pub inputs: Vec<ExtractionInputs>,
    /// Levels whose equilibrated area is zero; no rate is reported for them.
    pub undefined: Vec<u32>,
    pub uncertainty: Option<UncertaintyMethod>,
    pub warnings: Vec<String>,
}

impl ExtractionResult {
    pub fn rate(&self, j_f: u32) -> Option<f64> {
        self.table.rate(self.j_i, j_f)
    }
}

/// Apply the short-delay extraction formula to every final level present in
/// both area lists, skipping `j_i` itself.
#[allow(clippy::too_many_arguments)]
pub fn state_to_state_rates(
    j_i: u32,
    areas_short: &[(u32, f64)],
    areas_eq: &[(u32, f64)],
    f_eq: &BTreeMap<u32, f64>,
    delay: f64,
    density: f64,
    temperature: f64,
) -> Result<ExtractionResult, AnalysisError> {
    if !(delay > 0.0) || !(density > 0.0) || !(temperature > 0.0) {
        return Err(AnalysisError::Domain("delay, density and temperature must be positive".into()));
    }
    let eq: BTreeMap<u32, f64> = areas_eq.iter().copied().collect();
    let mut inputs = Vec::new();
    let mut undefined = Vec::new();
    let mut warnings = Vec::new();
    let mut table = RateTable::new(temperature, Provenance::Extracted);
    for &(j_f, area_short) in areas_short {
        if j_f == j_i {
            continue;
        }
        let (Some(&area_eq), Some(&f)) = (eq.get(&j_f), f_eq.get(&j_f)) else {
            continue;
        };
        let input = ExtractionInputs {
            j_f,
            area_short,
            area_eq,
            f_eq: f,
            delay,
            density,
        };
        inputs.push(input);
        match input.rate() {
            Some(k) => table.insert(j_i, j_f, k, None),
            None => {
                let w = format!("equilibrated area of j={j_f} is zero; rate to j={j_f} is undefined");
                log::warn!("{w}");
                warnings.push(w);
                undefined.push(j_f);
            }
        }
    }
    let total: f64 = table.entries.values().map(|v| v.k).sum();
    if total * density * delay > 0.1 {
        let w = format!(
            "depletion at the short delay is {:.2}; the single-collision approximation is poor",
            total * density * delay
        );
        log::warn!("{w}");
        warnings.push(w);
    }
    Ok(ExtractionResult {
        j_i,
        table,
        inputs,
        undefined,
        uncertainty: None,
        warnings,
    })
}

/// Two-sigma errors from the area standard errors of both fits, treated as
/// independent.
pub fn covariance_uncertainty(result: &mut ExtractionResult, short: &MultiPeakFit, eq: &MultiPeakFit) {
    for input in &result.inputs {
        let Some(k) = input.rate() else { continue };
        let (Some(es), Some(ee)) = (short.area_error(input.j_f), eq.area_error(input.j_f)) else {
            continue;
        };
        let rel_s = if input.area_short != 0.0 { es / input.area_short } else { f64::INFINITY };
        let rel_e = ee / input.area_eq;
        let err = 2.0 * k.abs() * (rel_s * rel_s + rel_e * rel_e).sqrt();
        if let Some(v) = result.table.entries.get_mut(&(result.j_i, input.j_f)) {
            v.err2sigma = Some(err);
        }
    }
    result.uncertainty = Some(UncertaintyMethod::Covariance);
}

/// One spectrum with its fit, for bootstrap resampling.
pub struct FittedSpectrum<'a> {
    pub axis: &'a [f64],
    pub intensity: &'a [f64],
    pub fit: &'a MultiPeakFit,
}

/// Residual bootstrap of both spectra. Each replicate adds sign-flipped
/// residuals to the fitted curves, refits both and recomputes the rates;
/// the reported error is twice the replicate standard deviation.
#[allow(clippy::too_many_arguments)]
pub fn bootstrap_uncertainty(
    result: &mut ExtractionResult,
    short: FittedSpectrum<'_>,
    eq: FittedSpectrum<'_>,
    lines: &[LineGuess],
    options: &VoigtFitOptions,
    replicates: usize,
    seed: u64,
) -> Result<(), AnalysisError> {
    if replicates < 2 {
        return Err(AnalysisError::InvalidInput("bootstrap needs at least 2 replicates".into()));
    }
    // Wild bootstrap: each residual keeps its sample, is inflated by its
    // leverage and gets a random sign, so noise that varies across the
    // spectrum is reproduced.
    let resample = |spec: &FittedSpectrum<'_>, rng: &mut ChaCha8Rng| -> Vec<f64> {
        let h = &spec.fit.fit.leverage;
        spec.intensity
            .iter()
            .zip(&spec.fit.fitted)
            .enumerate()
            .map(|(i, (&y, &f))| {
                let r = (y - f) / (1.0 - h.get(i).copied().unwrap_or(0.0)).sqrt();
                if rng.gen::<bool>() {
                    f + r
                } else {
                    f - r
                }
            })
            .collect()
    };
    let samples: Vec<BTreeMap<u32, f64>> = (0..replicates)
        .into_par_iter()
        .filter_map(|b| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(b as u64));
            let ys = resample(&short, &mut rng);
            let ye = resample(&eq, &mut rng);
            let fs = refit_multipeak_voigt(short.axis, &ys, lines, options, short.fit).ok()?;
            let fe = refit_multipeak_voigt(eq.axis, &ye, lines, options, eq.fit).ok()?;
            let rates = result
                .inputs
                .iter()
                .filter_map(|inp| {
                    let replica = ExtractionInputs {
                        area_short: fs.area(inp.j_f)?,
                        area_eq: fe.area(inp.j_f)?,
                        ..*inp
                    };
                    Some((inp.j_f, replica.rate()?))
                })
                .collect();
            Some(rates)
        })
        .collect();
    if samples.len() < 2 {
        return Err(AnalysisError::NonConvergence("too few bootstrap refits converged".into()));
    }
    if samples.len() < replicates {
        let w = format!("{} of {replicates} bootstrap refits failed and were dropped", replicates - samples.len());
        log::warn!("{w}");
        result.warnings.push(w);
    }
    for ((_, j_f), value) in result.table.entries.iter_mut() {
        let xs: Vec<f64> = samples.iter().filter_map(|s| s.get(j_f).copied()).collect();
        if xs.len() < 2 {
            continue;
        }
        let mean = xs.iter().sum::<f64>() / xs.len() as f64;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (xs.len() - 1) as f64;
        value.err2sigma = Some(2.0 * var.sqrt());
    }
    result.uncertainty = Some(UncertaintyMethod::Bootstrap { replicates, seed });
    Ok(())
}
