//! Simulate-then-analyse round trips on a known rate table.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::decay::{fit_exponential, total_rate_from_decay, ExponentialFit};
use super::extraction::{
    bootstrap_uncertainty, covariance_uncertainty, state_to_state_rates, ExtractionResult, FittedSpectrum,
};
use super::lm::LmOptions;
use super::spectra::{fit_multipeak_voigt, LineGuess, MultiPeakFit, VoigtFitOptions};
use super::AnalysisError;
use crate::kinetics::{
    build_rate_matrix, synth_decay, synth_spectra, BackgroundModel, BandModel, DecayTrace, GroundTruth, NoiseModel,
    Propagator, RateMatrix, SpectraTiming, Spectrum, SpectrumModel, VoigtShape, DEFAULT_LADDER_JMAX,
};
use crate::molsys::{boltzmann_fractions_checked, RigidRotorSpecies, DEFAULT_JMAX, DEFAULT_TAIL_TOLERANCE};
use crate::thermal::RateTable;

/// Number of slowest relaxation times used for an automatic long delay.
pub const AUTO_EQUILIBRATION_TIMES: f64 = 20.0;
/// Fewer relaxation times than this at the long delay triggers a warning.
pub const MIN_EQUILIBRATION_TIMES: f64 = 10.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeqSource {
    /// Boltzmann fraction at the configured temperature.
    Boltzmann,
    /// `baseline / (amplitude + baseline)` of the decay fit (initial level only).
    DecayAsymptote,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "snake_case")]
pub enum UncertaintyChoice {
    None,
    Covariance,
    Bootstrap { replicates: usize },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RoundTripConfig {
    /// K
    pub temperature: f64,
    /// cm⁻³
    pub density: f64,
    /// s
    pub short_delay: f64,
    /// s; `None` picks [`AUTO_EQUILIBRATION_TIMES`] slowest relaxation times.
    pub long_delay: Option<f64>,
    pub ladder_jmax: u32,
    pub background: BackgroundModel,
    /// Highest probed final level.
    pub probe_jmax: u32,
    pub band: BandModel,
    pub shape: VoigtShape,
    pub decay_samples: usize,
    /// Decay trace length in units of the initial-level lifetime.
    pub decay_span_lifetimes: f64,
    pub noise: NoiseModel,
    pub f_eq_source: FeqSource,
    pub uncertainty: UncertaintyChoice,
    /// Spectrum fits: one shared Voigt shape, linear baseline.
    pub shared_shape: bool,
    pub baseline: bool,
    pub lm: LmOptions,
}

impl Default for RoundTripConfig {
    fn default() -> Self {
        RoundTripConfig {
            temperature: 293.0,
            density: 1.6e16,
            short_delay: 15e-9,
            long_delay: None,
            ladder_jmax: DEFAULT_LADDER_JMAX,
            background: BackgroundModel::reference_default(),
            probe_jmax: 12,
            band: BandModel::default(),
            shape: VoigtShape {
                gaussian_sigma: 0.08,
                lorentzian_gamma: 0.02,
            },
            decay_samples: 200,
            decay_span_lifetimes: 6.0,
            noise: NoiseModel::noiseless(),
            f_eq_source: FeqSource::Boltzmann,
            uncertainty: UncertaintyChoice::Covariance,
            shared_shape: true,
            baseline: true,
            lm: LmOptions::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RateDeviation {
    pub j_f: u32,
    pub k_input: f64,
    pub k_extracted: Option<f64>,
    pub err2sigma: Option<f64>,
    /// `(extracted - input) / input`
    pub relative: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RoundTripReport {
    pub j_i: u32,
    pub config: RoundTripConfig,
    pub long_delay: f64,
    pub truth: GroundTruth,
    pub extraction: ExtractionResult,
    pub decay_fit: ExponentialFit,
    /// Total rate from the decay fit, cm³ s⁻¹.
    pub k_total_decay: f64,
    /// Sum of the extracted state-to-state rates, cm³ s⁻¹.
    pub k_sum_extracted: f64,
    pub deviations: Vec<RateDeviation>,
    pub warnings: Vec<String>,
}

impl RoundTripReport {
    pub fn deviation(&self, j_f: u32) -> Option<&RateDeviation> {
        self.deviations.iter().find(|d| d.j_f == j_f)
    }

    /// `(k_total_decay - truth.total_out) / truth.total_out`
    pub fn total_relative(&self) -> f64 {
        (self.k_total_decay - self.truth.total_out) / self.truth.total_out
    }
}

/// Synthetic data of one pumped level: a decay trace and a spectrum pair.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SyntheticDataset {
    pub decay: DecayTrace,
    pub short: Spectrum,
    pub long: Spectrum,
}

/// Long delay actually used for `config` on `matrix`.
pub fn long_delay_for(config: &RoundTripConfig, matrix: &RateMatrix) -> Result<(f64, Vec<String>), AnalysisError> {
    let slowest = Propagator::new(matrix, config.density)
        .map_err(|e| AnalysisError::InvalidInput(e.to_string()))?
        .slowest_rate();
    let mut warnings = Vec::new();
    let delay = match config.long_delay {
        Some(d) => {
            if slowest > 0.0 && d * slowest < MIN_EQUILIBRATION_TIMES {
                let w = format!(
                    "long delay {d:.3e} s is only {:.1} relaxation times; populations may not be equilibrated",
                    d * slowest
                );
                log::warn!("{w}");
                warnings.push(w);
            }
            d
        }
        None if slowest > 0.0 => AUTO_EQUILIBRATION_TIMES / slowest,
        None => 1e3 * config.short_delay,
    };
    Ok((delay, warnings))
}

/// Build the ladder, then the decay trace and both spectra for `j_i`.
pub fn simulate(
    table: &RateTable,
    species: &RigidRotorSpecies,
    j_i: u32,
    config: &RoundTripConfig,
) -> Result<(SyntheticDataset, Vec<String>), AnalysisError> {
    let matrix = build_rate_matrix(table, species, config.temperature, config.ladder_jmax, config.background)
        .map_err(|e| AnalysisError::InvalidInput(e.to_string()))?;
    let (long_delay, warnings) = long_delay_for(config, &matrix)?;
    let truth = GroundTruth::of(&matrix, j_i);
    let decay_rate = config.density * truth.total_out;
    let span = if decay_rate > 0.0 {
        config.decay_span_lifetimes / decay_rate
    } else {
        long_delay
    };
    let m = config.decay_samples.max(2);
    let times: Vec<f64> = (0..m).map(|i| span * i as f64 / (m - 1) as f64).collect();
    let kin = |e: crate::kinetics::KineticsError| AnalysisError::InvalidInput(e.to_string());
    let decay = synth_decay(j_i, &matrix, config.density, config.noise, &times).map_err(kin)?;
    let levels: Vec<u32> = (0..=config.probe_jmax.min(config.ladder_jmax)).collect();
    let model = SpectrumModel::from_band(&config.band, &levels, config.shape);
    let decay_noise = config.noise;
    let spectra_noise = NoiseModel {
        seed: decay_noise.seed.wrapping_add(1),
        ..decay_noise
    };
    let (short, long) = synth_spectra(
        j_i,
        &matrix,
        config.density,
        SpectraTiming {
            short_delay: config.short_delay,
            long_delay,
        },
        &model,
        spectra_noise,
    )
    .map_err(kin)?;
    Ok((SyntheticDataset { decay, short, long }, warnings))
}

/// Everything needed to analyse one dataset.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AnalysisInputs {
    pub j_i: u32,
    pub temperature: f64,
    pub density: f64,
    pub short_delay: f64,
    pub species: RigidRotorSpecies,
    pub lines: Vec<LineGuess>,
    /// Spectrum fit settings; the decay fit shares `fit.lm`.
    pub fit: VoigtFitOptions,
    pub f_eq_source: FeqSource,
    pub uncertainty: UncertaintyChoice,
    pub seed: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AnalysisOutput {
    pub extraction: ExtractionResult,
    pub decay_fit: ExponentialFit,
    pub f_eq_initial: f64,
    pub k_total_decay: f64,
    pub short_fit: MultiPeakFit,
    pub long_fit: MultiPeakFit,
}

/// Decay fit, both spectrum fits, state-to-state extraction and errors.
pub fn analyse(
    inputs: &AnalysisInputs,
    decay_times: &[f64],
    decay_signal: &[f64],
    short: (&[f64], &[f64]),
    long: (&[f64], &[f64]),
) -> Result<AnalysisOutput, AnalysisError> {
    let fractions =
        boltzmann_fractions_checked(&inputs.species, DEFAULT_JMAX, inputs.temperature, DEFAULT_TAIL_TOLERANCE)
            .map_err(|e| AnalysisError::Domain(e.to_string()))?;
    let f_eq: BTreeMap<u32, f64> = inputs
        .lines
        .iter()
        .filter_map(|l| fractions.get(l.j as usize).map(|f| (l.j, *f)))
        .collect();

    let decay_fit = fit_exponential(decay_times, decay_signal, &inputs.fit.lm)?;
    let f_eq_initial = match inputs.f_eq_source {
        FeqSource::Boltzmann => *fractions
            .get(inputs.j_i as usize)
            .ok_or_else(|| AnalysisError::Domain(format!("level {} above partition cutoff", inputs.j_i)))?,
        FeqSource::DecayAsymptote => {
            let start = decay_fit.amplitude + decay_fit.baseline;
            decay_fit.baseline / start
        }
    };
    let k_total_decay = total_rate_from_decay(decay_fit.k_exp, f_eq_initial, inputs.density)?;

    let options = inputs.fit;
    let short_fit = fit_multipeak_voigt(short.0, short.1, &inputs.lines, &options)?;
    let long_fit = fit_multipeak_voigt(long.0, long.1, &inputs.lines, &options)?;
    let areas = |f: &MultiPeakFit| f.lines.iter().map(|l| (l.j, l.area)).collect::<Vec<_>>();
    let mut extraction = state_to_state_rates(
        inputs.j_i,
        &areas(&short_fit),
        &areas(&long_fit),
        &f_eq,
        inputs.short_delay,
        inputs.density,
        inputs.temperature,
    )?;
    extraction.warnings.extend(short_fit.warnings.iter().cloned());
    extraction.warnings.extend(long_fit.warnings.iter().cloned());
    match inputs.uncertainty {
        UncertaintyChoice::None => {}
        UncertaintyChoice::Covariance => covariance_uncertainty(&mut extraction, &short_fit, &long_fit),
        UncertaintyChoice::Bootstrap { replicates } => bootstrap_uncertainty(
            &mut extraction,
            FittedSpectrum {
                axis: short.0,
                intensity: short.1,
                fit: &short_fit,
            },
            FittedSpectrum {
                axis: long.0,
                intensity: long.1,
                fit: &long_fit,
            },
            &inputs.lines,
            &options,
            replicates,
            inputs.seed,
        )?,
    }
    Ok(AnalysisOutput {
        extraction,
        decay_fit,
        f_eq_initial,
        k_total_decay,
        short_fit,
        long_fit,
    })
}

/// Line list of a synthetic spectrum.
pub fn lines_of(model: &SpectrumModel) -> Vec<LineGuess> {
    model
        .lines
        .iter()
        .map(|l| LineGuess {
            j: l.j,
            center: l.center,
        })
        .collect()
}

/// Simulate `j_i` from `table`, analyse the synthetic data and compare the
/// extracted rates with the generator's own rates.
pub fn roundtrip(
    table: &RateTable,
    species: &RigidRotorSpecies,
    j_i: u32,
    config: &RoundTripConfig,
) -> Result<RoundTripReport, AnalysisError> {
    let (data, mut warnings) = simulate(table, species, j_i, config)?;
    let inputs = AnalysisInputs {
        j_i,
        temperature: config.temperature,
        density: config.density,
        short_delay: config.short_delay,
        species: species.clone(),
        lines: lines_of(&data.short.model),
        fit: VoigtFitOptions {
            shared_shape: config.shared_shape,
            baseline: config.baseline,
            initial_shape: config.shape,
            lm: config.lm,
        },
        f_eq_source: config.f_eq_source,
        uncertainty: config.uncertainty,
        seed: config.noise.seed,
    };
    let out = analyse(
        &inputs,
        &data.decay.times,
        &data.decay.signal,
        (&data.short.axis, &data.short.intensity),
        (&data.long.axis, &data.long.intensity),
    )?;
    warnings.extend(out.extraction.warnings.iter().cloned());
    warnings.extend(out.decay_fit.warnings.iter().cloned());
    let truth = data.short.meta.truth.clone();
    let deviations = truth
        .rates
        .iter()
        .filter(|(j_f, _)| out.extraction.inputs.iter().any(|i| i.j_f == *j_f) || out.extraction.undefined.contains(j_f))
        .map(|&(j_f, k_input)| {
            let k_extracted = out.extraction.rate(j_f);
            RateDeviation {
                j_f,
                k_input,
                k_extracted,
                err2sigma: out.extraction.table.entries.get(&(j_i, j_f)).and_then(|v| v.err2sigma),
                relative: k_extracted.filter(|_| k_input > 0.0).map(|k| (k - k_input) / k_input),
            }
        })
        .collect();
    let k_sum_extracted = out.extraction.table.total_out(j_i);
    Ok(RoundTripReport {
        j_i,
        config: config.clone(),
        long_delay: data.long.meta.delay,
        truth,
        k_total_decay: out.k_total_decay,
        k_sum_extracted,
        extraction: out.extraction,
        decay_fit: out.decay_fit,
        deviations,
        warnings,
    })
}
