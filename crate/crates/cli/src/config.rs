//! Run configuration: TOML with one table per pipeline stage. Unknown keys
//! are rejected and dimensioned values carry explicit unit suffixes.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::error::CliError;
use crate::units::{Density, Energy, Length, Temperature, Time};

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub species: SpeciesConfig,
    pub pes: PesConfig,
    pub scattering: ScatteringConfig,
    pub thermal: ThermalConfig,
    pub kinetics: KineticsConfig,
    pub analysis: AnalysisConfig,
    pub io: IoConfig,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SpeciesConfig {
    /// Rotational constant of the rotor.
    pub rotor_b: Energy,
    /// u
    pub rotor_mass: f64,
    pub partner_b: Energy,
    /// u
    pub partner_mass: f64,
}

impl Default for SpeciesConfig {
    fn default() -> Self {
        SpeciesConfig {
            rotor_b: Energy::new(1.8875),
            rotor_mass: 27.9949,
            partner_b: Energy::new(59.322),
            partner_mass: 2.01565,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PesModel {
    /// Isotropic model only: no inelastic transitions.
    Iso88,
    /// Isotropic model plus scaled anisotropic terms from `strengths`.
    AnisoDemo,
    /// Tabulated radial coefficients from `file`.
    File,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PesConfig {
    pub model: PesModel,
    /// `[l1, l2, l, strength]` rows for `aniso-demo`.
    pub strengths: Vec<(u32, u32, u32, f64)>,
    pub file: Option<PathBuf>,
    /// Inverse power of the long-range tail beyond the last knot.
    pub tail_power: i32,
}

impl Default for PesConfig {
    fn default() -> Self {
        PesConfig {
            model: PesModel::AnisoDemo,
            strengths: retkit_core::pes::AnisoDemo::default()
                .strengths
                .into_iter()
                .map(|((a, b, c), s)| (a, b, c, s))
                .collect(),
            file: None,
            tail_power: 6,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScatteringConfig {
    pub j1max: u32,
    /// Partner levels in the basis.
    pub j2: Vec<u32>,
    pub r_min: Length,
    pub r_max: Length,
    pub step: Length,
    /// Collision-energy grid above the lowest pair level.
    pub e_min: Energy,
    pub e_max: Energy,
    pub e_points: usize,
    /// Logarithmic spacing below, linear above.
    pub e_split: Energy,
    /// Highest total J tried when converging the partial-wave sum.
    pub j_cap: u32,
    pub j_tolerance: f64,
    pub j_window: usize,
    /// Sum exactly these J instead of converging.
    pub j_fixed: Option<Vec<u32>>,
}

impl Default for ScatteringConfig {
    fn default() -> Self {
        ScatteringConfig {
            j1max: 6,
            j2: vec![0, 1, 2, 3],
            r_min: Length::new(3.0),
            r_max: Length::new(200.0),
            step: Length::new(0.25),
            e_min: Energy::new(1.0),
            e_max: Energy::new(2200.0),
            e_points: 48,
            e_split: Energy::new(100.0),
            j_cap: 150,
            j_tolerance: 1e-3,
            j_window: 3,
            j_fixed: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ThermalConfig {
    pub temperature: Temperature,
    pub para_weight: f64,
    pub ortho_weight: f64,
}

impl Default for ThermalConfig {
    fn default() -> Self {
        ThermalConfig {
            temperature: Temperature::new(293.0),
            para_weight: 0.25,
            ortho_weight: 0.75,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RateSource {
    /// Bundled reference theory rates.
    ReferenceTheory,
    /// Bundled reference measured rates.
    ReferenceMeasured,
    /// A rate table file.
    File(PathBuf),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BackgroundChoice {
    /// Fixed default fitted to the bundled theory rates.
    Reference,
    /// Fitted to the downward rates of the input table.
    Fit,
    None,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct KineticsConfig {
    pub rates: RateSource,
    pub j_initial: Vec<u32>,
    pub density: Density,
    pub short_delay: Time,
    /// `None` picks an automatic equilibration delay.
    pub long_delay: Option<Time>,
    pub ladder_jmax: u32,
    pub background: BackgroundChoice,
    pub probe_jmax: u32,
    pub band_origin: Energy,
    pub upper_b: Energy,
    pub lower_b: Energy,
    pub gaussian_sigma: Energy,
    pub lorentzian_gamma: Energy,
    pub decay_samples: usize,
    /// Trace length in lifetimes of the pumped level.
    pub decay_span: f64,
    /// Additive noise standard deviation relative to the peak.
    pub noise_sigma: f64,
    /// Multiplicative per-sample noise standard deviation.
    pub noise_jitter: f64,
    pub seed: u64,
}

impl Default for KineticsConfig {
    fn default() -> Self {
        let band = retkit_core::kinetics::BandModel::default();
        KineticsConfig {
            rates: RateSource::ReferenceTheory,
            j_initial: vec![0, 1, 4],
            density: Density::new(1.6e16),
            short_delay: Time::new(15e-9),
            long_delay: None,
            ladder_jmax: retkit_core::kinetics::DEFAULT_LADDER_JMAX,
            background: BackgroundChoice::Reference,
            probe_jmax: 12,
            band_origin: Energy::new(band.origin),
            upper_b: Energy::new(band.upper_b),
            lower_b: Energy::new(band.lower_b),
            gaussian_sigma: Energy::new(0.08),
            lorentzian_gamma: Energy::new(0.02),
            decay_samples: 200,
            decay_span: 6.0,
            noise_sigma: 0.0,
            noise_jitter: 0.0,
            seed: 1,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum UncertaintyConfig {
    Bootstrap,
    Covariance,
    None,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FeqConfig {
    Boltzmann,
    DecayAsymptote,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AnalysisConfig {
    pub uncertainty: UncertaintyConfig,
    pub bootstrap_replicates: usize,
    pub f_eq: FeqConfig,
    pub max_iterations: usize,
    pub tolerance: f64,
    pub shared_shape: bool,
    pub baseline: bool,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        AnalysisConfig {
            uncertainty: UncertaintyConfig::Bootstrap,
            bootstrap_replicates: 200,
            f_eq: FeqConfig::Boltzmann,
            max_iterations: 200,
            tolerance: 1e-10,
            shared_shape: true,
            baseline: true,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct IoConfig {
    pub output_dir: PathBuf,
}

impl Default for IoConfig {
    fn default() -> Self {
        IoConfig {
            output_dir: PathBuf::from("retkit-out"),
        }
    }
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| CliError::Validation(format!("config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config is serializable")
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let bad = |m: String| Err(CliError::Validation(m));
        let s = &self.species;
        if !(s.rotor_b.value > 0.0 && s.rotor_mass > 0.0 && s.partner_b.value > 0.0 && s.partner_mass > 0.0) {
            return bad("species: rotational constants and masses must be positive".into());
        }
        if self.pes.model == PesModel::File && self.pes.file.is_none() {
            return bad("pes: model \"file\" needs `file`".into());
        }
        let sc = &self.scattering;
        if sc.j2.is_empty() {
            return bad("scattering: j2 must list at least one partner level".into());
        }
        if !(sc.r_min.value >= 0.0 && sc.r_max.value > sc.r_min.value && sc.step.value > 0.0) {
            return bad("scattering: need 0 <= r_min < r_max and step > 0".into());
        }
        if !(sc.e_min.value > 0.0 && sc.e_max.value > sc.e_min.value && sc.e_points >= 2) {
            return bad("scattering: need 0 < e_min < e_max and e_points >= 2".into());
        }
        if !(sc.j_tolerance > 0.0) || sc.j_window == 0 {
            return bad("scattering: j_tolerance must be positive and j_window at least 1".into());
        }
        let t = &self.thermal;
        if !(t.temperature.value > 0.0) {
            return bad("thermal: temperature must be positive".into());
        }
        if !(t.para_weight >= 0.0 && t.ortho_weight >= 0.0 && (t.para_weight + t.ortho_weight - 1.0).abs() < 1e-12) {
            return bad("thermal: spin weights must be non-negative and sum to 1".into());
        }
        let k = &self.kinetics;
        if !(k.density.value > 0.0 && k.short_delay.value > 0.0) {
            return bad("kinetics: density and short_delay must be positive".into());
        }
        if k.long_delay.is_some_and(|d| d.value <= k.short_delay.value) {
            return bad("kinetics: long_delay must exceed short_delay".into());
        }
        if k.j_initial.iter().any(|&j| j > k.ladder_jmax) || k.probe_jmax > k.ladder_jmax {
            return bad("kinetics: levels must lie on the ladder (<= ladder_jmax)".into());
        }
        if !(k.gaussian_sigma.value >= 0.0 && k.lorentzian_gamma.value >= 0.0)
            || k.gaussian_sigma.value + k.lorentzian_gamma.value == 0.0
        {
            return bad("kinetics: line widths must be >= 0 and not both zero".into());
        }
        if k.decay_samples < 8 || !(k.decay_span > 0.0) {
            return bad("kinetics: decay_samples >= 8 and decay_span > 0 required".into());
        }
        if !(k.noise_sigma >= 0.0 && k.noise_jitter >= 0.0) {
            return bad("kinetics: noise levels must be >= 0".into());
        }
        let a = &self.analysis;
        if a.uncertainty == UncertaintyConfig::Bootstrap && a.bootstrap_replicates < 2 {
            return bad("analysis: bootstrap needs at least 2 replicates".into());
        }
        if a.max_iterations == 0 || !(a.tolerance > 0.0) {
            return bad("analysis: max_iterations and tolerance must be positive".into());
        }
        Ok(())
    }
}
