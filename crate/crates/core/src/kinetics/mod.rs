//! Forward model of the double-resonance experiment: rotational populations
//! relaxing under a collisional master equation, LIF decay traces and
//! short/long-delay probe spectra.

mod voigt;

pub use voigt::{faddeeva, voigt_profile, voigt_with_gradient, VoigtShape};

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::constants::K_B_CM;
use crate::molsys::{boltzmann_fractions_truncated, level_energy, RigidRotorSpecies};
use crate::thermal::{RateTable, ThermalError};

/// Default top level of the kinetic ladder.
pub const DEFAULT_LADDER_JMAX: u32 = 60;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum KineticsError {
    #[error("invalid rate table: {0}")]
    InvalidTable(String),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error(transparent)]
    Thermal(#[from] ThermalError),
}

/// Rates for transitions absent from a table: downward rates
/// `A e^{-β |Δj|}`, upward rates by detailed balance.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BackgroundModel {
    /// cm³ s⁻¹
    pub amplitude: f64,
    pub decay: f64,
}

impl BackgroundModel {
    /// Rounded result of [`BackgroundModel::fit_downward`] on the bundled
    /// reference theory rates.
    pub fn reference_default() -> Self {
        BackgroundModel {
            amplitude: 1.3e-10,
            decay: 0.52,
        }
    }

    /// Least-squares fit of `ln k = ln A - β|Δj|` to the downward entries
    /// of `table` after detailed-balance completion. `None` with fewer than
    /// two distinct |Δj| values.
    pub fn fit_downward(table: &RateTable, species: &RigidRotorSpecies, temperature: f64) -> Option<Self> {
        let done = crate::thermal::detailed_balance_complete(table, species, temperature);
        let pts: Vec<(f64, f64)> = done
            .entries
            .iter()
            .filter(|(&(i, f), v)| i > f && v.k > 0.0)
            .map(|(&(i, f), v)| ((i - f) as f64, v.k.ln()))
            .collect();
        let n = pts.len() as f64;
        let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
        let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
        let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
        if pts.len() < 2 || sxx == 0.0 {
            return None;
        }
        let slope = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum::<f64>() / sxx;
        Some(BackgroundModel {
            amplitude: (my - slope * mx).exp(),
            decay: -slope,
        })
    }

    pub fn none() -> Self {
        BackgroundModel {
            amplitude: 0.0,
            decay: 0.0,
        }
    }
}

/// Collisional generator over levels `0..=jmax`: `G[f][i] = k(i→f)`,
/// `G[i][i] = -Σ_f k(i→f)`, in cm³ s⁻¹.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RateMatrix {
    pub temperature: f64,
    pub species: RigidRotorSpecies,
    pub generator: DMatrix<f64>,
}

impl RateMatrix {
    pub fn jmax(&self) -> u32 {
        self.generator.nrows() as u32 - 1
    }

    pub fn rate(&self, j_i: u32, j_f: u32) -> f64 {
        self.generator[(j_f as usize, j_i as usize)]
    }

    /// Boltzmann fractions on the ladder.
    pub fn boltzmann(&self) -> Vec<f64> {
        boltzmann_fractions_truncated(&self.species, self.jmax(), self.temperature)
    }

    /// Largest relative column-sum residual.
    pub fn conservation_residual(&self) -> f64 {
        let n = self.generator.nrows();
        (0..n)
            .map(|i| {
                let col = self.generator.column(i);
                let scale = col.iter().map(|v| v.abs()).sum::<f64>().max(f64::MIN_POSITIVE);
                col.sum().abs() / scale
            })
            .fold(0.0, f64::max)
    }

    /// Largest relative violation of `G_fi π_i = G_if π_f`.
    pub fn detailed_balance_residual(&self) -> f64 {
        let pi = self.boltzmann();
        let n = pi.len();
        let mut worst = 0.0f64;
        for i in 0..n {
            for f in i + 1..n {
                let a = self.generator[(f, i)] * pi[i];
                let b = self.generator[(i, f)] * pi[f];
                let s = a.abs().max(b.abs());
                if s > 0.0 {
                    worst = worst.max((a - b).abs() / s);
                }
            }
        }
        worst
    }
}

/// Assemble a detailed-balance generator from a rate table.
///
/// For each level pair the rate out of the lower level is authoritative:
/// it is taken from the table when present, otherwise derived from the
/// table's downward rate, otherwise from `background`. The opposite
/// direction always follows by detailed balance at `temperature`, so the
/// Boltzmann vector of the ladder is stationary to rounding.
pub fn build_rate_matrix(
    table: &RateTable,
    species: &RigidRotorSpecies,
    temperature: f64,
    jmax: u32,
    background: BackgroundModel,
) -> Result<RateMatrix, KineticsError> {
    if !(temperature > 0.0) {
        return Err(KineticsError::InvalidInput(format!("temperature {temperature} K")));
    }
    for (&(i, f), v) in &table.entries {
        if !(v.k >= 0.0) || !v.k.is_finite() {
            return Err(KineticsError::InvalidTable(format!("rate {i}->{f} = {}", v.k)));
        }
        if i.max(f) > jmax {
            return Err(KineticsError::InvalidTable(format!("transition {i}->{f} is above jmax = {jmax}")));
        }
    }
    if !(background.amplitude >= 0.0) || !background.decay.is_finite() {
        return Err(KineticsError::InvalidInput("background model must be non-negative and finite".into()));
    }
    let kt = K_B_CM * temperature;
    let n = jmax as usize + 1;
    let mut g = DMatrix::<f64>::zeros(n, n);
    for lo in 0..=jmax {
        for hi in lo + 1..=jmax {
            // Upward factor k(lo→hi)/k(hi→lo).
            let up = (2 * hi + 1) as f64 / (2 * lo + 1) as f64
                * (-(level_energy(species, hi) - level_energy(species, lo)) / kt).exp();
            let k_up = if let Some(k) = table.rate(lo, hi) {
                k
            } else if let Some(k) = table.rate(hi, lo) {
                k * up
            } else {
                background.amplitude * (-background.decay * (hi - lo) as f64).exp() * up
            };
            g[(hi as usize, lo as usize)] = k_up;
            g[(lo as usize, hi as usize)] = if up > 0.0 { k_up / up } else { 0.0 };
        }
    }
    for i in 0..n {
        let out: f64 = (0..n).filter(|&f| f != i).map(|f| g[(f, i)]).sum();
        g[(i, i)] = -out;
    }
    Ok(RateMatrix {
        temperature,
        species: species.clone(),
        generator: g,
    })
}

/// Populations at each requested time.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PopulationTrajectory {
    /// s
    pub times: Vec<f64>,
    pub populations: Vec<Vec<f64>>,
}

/// Spectral solution of `dp/dt = n G p` through the symmetrized generator
/// `Π^{-1/2} G Π^{1/2}`, which is exact for any time.
pub struct Propagator {
    sqrt_pi: DVector<f64>,
    vectors: DMatrix<f64>,
    /// Eigenvalues of `n G` in s⁻¹.
    rates: DVector<f64>,
    /// Index of the stationary mode.
    stationary: usize,
}

impl Propagator {
    pub fn new(matrix: &RateMatrix, density: f64) -> Result<Self, KineticsError> {
        if !(density >= 0.0) || !density.is_finite() {
            return Err(KineticsError::InvalidInput(format!("density {density}")));
        }
        let pi = matrix.boltzmann();
        if pi.iter().any(|&p| !(p > 0.0)) {
            return Err(KineticsError::InvalidInput(
                "Boltzmann weights underflow on this ladder; lower jmax or raise T".into(),
            ));
        }
        let sqrt_pi = DVector::from_iterator(pi.len(), pi.iter().map(|p| p.sqrt()));
        let n = pi.len();
        let g = &matrix.generator;
        let mut s = DMatrix::<f64>::from_fn(n, n, |f, i| g[(f, i)] * sqrt_pi[i] / sqrt_pi[f]);
        // Symmetric up to rounding; average the halves.
        let st = s.transpose();
        s = (s + st) * 0.5;
        let eig = s.symmetric_eigen();
        let mut vectors = eig.eigenvectors;
        let mut values = eig.eigenvalues;
        // The stationary mode is √π exactly (unit norm since Σπ = 1). Put it
        // in analytically and orthogonalize the rest against it, so that
        // population conservation does not depend on eigensolver round-off.
        let top = values.imax();
        values[top] = 0.0;
        vectors.set_column(top, &sqrt_pi);
        // Modified Gram-Schmidt with √π first; columns from other eigenspaces
        // barely move, and a degenerate null space stays orthonormal.
        let order: Vec<usize> = std::iter::once(top).chain((0..n).filter(|&k| k != top)).collect();
        for (pos, &k) in order.iter().enumerate().skip(1) {
            let mut col = vectors.column(k).clone_owned();
            for &done in &order[..pos] {
                let overlap = col.dot(&vectors.column(done));
                col -= vectors.column(done) * overlap;
            }
            let norm = col.norm();
            col /= norm;
            vectors.set_column(k, &col);
        }
        Ok(Propagator {
            sqrt_pi,
            vectors,
            rates: values * density,
            stationary: top,
        })
    }

    pub fn at(&self, p0: &[f64], t: f64) -> Vec<f64> {
        let n = self.sqrt_pi.len();
        let total: f64 = p0.iter().sum();
        // Project the stationary component out exactly before propagating.
        let q0 = DVector::from_fn(n, |i, _| p0[i] / self.sqrt_pi[i] - self.sqrt_pi[i] * total);
        let mut c = self.vectors.tr_mul(&q0);
        for k in 0..n {
            c[k] = if k == self.stationary { 0.0 } else { c[k] * (self.rates[k] * t).exp() };
        }
        let q = &self.vectors * c;
        (0..n).map(|i| self.sqrt_pi[i] * (q[i] + self.sqrt_pi[i] * total)).collect()
    }

    /// Slowest non-zero relaxation rate, s⁻¹.
    pub fn slowest_rate(&self) -> f64 {
        self.rates
            .iter()
            .enumerate()
            .filter(|&(k, _)| k != self.stationary)
            .map(|(_, r)| -r)
            .fold(f64::INFINITY, f64::min)
    }
}

pub fn evolve(matrix: &RateMatrix, density: f64, p0: &[f64], times: &[f64]) -> Result<PopulationTrajectory, KineticsError> {
    let n = matrix.generator.nrows();
    if p0.len() != n {
        return Err(KineticsError::InvalidInput(format!("initial vector has {} entries, ladder has {n}", p0.len())));
    }
    if p0.iter().any(|&p| !(p >= 0.0)) || (p0.iter().sum::<f64>() - 1.0).abs() > 1e-12 {
        return Err(KineticsError::InvalidInput("initial populations must be non-negative and sum to 1".into()));
    }
    let prop = Propagator::new(matrix, density)?;
    Ok(PopulationTrajectory {
        times: times.to_vec(),
        populations: times.iter().map(|&t| prop.at(p0, t)).collect(),
    })
}

/// Seeded noise: additive Gaussian with standard deviation `relative_sigma`
/// times the noiseless peak, and multiplicative shot-to-shot jitter.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NoiseModel {
    pub relative_sigma: f64,
    #[serde(default)]
    pub amplitude_jitter: f64,
    pub seed: u64,
}

impl NoiseModel {
    pub fn noiseless() -> Self {
        NoiseModel {
            relative_sigma: 0.0,
            amplitude_jitter: 0.0,
            seed: 0,
        }
    }

    pub fn apply(&self, signal: &mut [f64]) {
        if self.relative_sigma == 0.0 && self.amplitude_jitter == 0.0 {
            return;
        }
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let peak = signal.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let additive = Normal::new(0.0, self.relative_sigma * peak).expect("finite sigma");
        let jitter = Normal::new(1.0, self.amplitude_jitter).expect("finite jitter");
        for v in signal.iter_mut() {
            let scale = if self.amplitude_jitter > 0.0 { jitter.sample(&mut rng) } else { 1.0 };
            *v = *v * scale + if self.relative_sigma > 0.0 { additive.sample(&mut rng) } else { 0.0 };
        }
    }
}

/// Ground-truth rates of the generator out of one level, cm³ s⁻¹.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub temperature: f64,
    pub j_i: u32,
    /// `(j_f, k(j_i→j_f))` for every other ladder level.
    pub rates: Vec<(u32, f64)>,
    pub total_out: f64,
    pub f_eq: f64,
}

impl GroundTruth {
    pub fn of(matrix: &RateMatrix, j_i: u32) -> Self {
        let n = matrix.jmax();
        let rates: Vec<(u32, f64)> = (0..=n).filter(|&f| f != j_i).map(|f| (f, matrix.rate(j_i, f))).collect();
        GroundTruth {
            temperature: matrix.temperature,
            j_i,
            total_out: rates.iter().map(|r| r.1).sum(),
            rates,
            f_eq: matrix.boltzmann()[j_i as usize],
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceMeta {
    pub j_i: u32,
    pub probe_line: String,
    /// cm⁻³
    pub density: f64,
    pub noise: NoiseModel,
    pub truth: GroundTruth,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecayTrace {
    /// s
    pub times: Vec<f64>,
    pub signal: Vec<f64>,
    pub meta: TraceMeta,
}

impl DecayTrace {
    /// Columns `t_s, signal`.
    pub fn to_delimited(&self) -> String {
        two_columns(["t_s", "signal"], &self.times, &self.signal)
    }
}

pub(crate) fn two_columns(header: [&str; 2], x: &[f64], y: &[f64]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).expect("in-memory write");
    for (a, b) in x.iter().zip(y) {
        w.write_record([format!("{a:e}"), format!("{b:e}")]).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8")
}

fn validate_level(matrix: &RateMatrix, j: u32) -> Result<(), KineticsError> {
    if j > matrix.jmax() {
        return Err(KineticsError::InvalidInput(format!("level {j} above ladder top {}", matrix.jmax())));
    }
    Ok(())
}

/// Population of the pumped level `j_i` after pumping all population into
/// it, scaled to unit initial signal, with noise applied afterwards.
pub fn synth_decay(
    j_i: u32,
    matrix: &RateMatrix,
    density: f64,
    noise: NoiseModel,
    times: &[f64],
) -> Result<DecayTrace, KineticsError> {
    validate_level(matrix, j_i)?;
    if times.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(KineticsError::InvalidInput("times must be strictly increasing".into()));
    }
    let n = matrix.generator.nrows();
    let mut p0 = vec![0.0; n];
    p0[j_i as usize] = 1.0;
    let prop = Propagator::new(matrix, density)?;
    let mut signal: Vec<f64> = times.iter().map(|&t| prop.at(&p0, t)[j_i as usize]).collect();
    noise.apply(&mut signal);
    Ok(DecayTrace {
        times: times.to_vec(),
        signal,
        meta: TraceMeta {
            j_i,
            probe_line: probe_label(j_i),
            density,
            noise,
            truth: GroundTruth::of(matrix, j_i),
        },
    })
}

/// Decays are probed on Q lines, which do not exist for `j = 0`; R(0) is used there.
pub fn probe_label(j: u32) -> String {
    if j == 0 {
        "R(0)".into()
    } else {
        format!("Q({j})")
    }
}

/// Probe line positions from a two-state rigid-rotor band model:
/// `Q(j) = ν0 + (B' - B'') j(j+1)` and `R(0) = ν0 + 2B'`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BandModel {
    /// cm⁻¹
    pub origin: f64,
    pub upper_b: f64,
    pub lower_b: f64,
}

impl Default for BandModel {
    /// Illustrative constants that keep every line resolvable.
    fn default() -> Self {
        BandModel {
            origin: 64_750.0,
            upper_b: 1.6115,
            lower_b: 1.9050,
        }
    }
}

impl BandModel {
    pub fn center(&self, j: u32) -> f64 {
        if j == 0 {
            return self.origin + 2.0 * self.upper_b;
        }
        let jj = (j * (j + 1)) as f64;
        self.origin + (self.upper_b - self.lower_b) * jj
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectralLine {
    pub j: u32,
    /// cm⁻¹
    pub center: f64,
    pub strength: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectrumModel {
    pub lines: Vec<SpectralLine>,
    pub shape: VoigtShape,
    /// Axis step in cm⁻¹.
    pub step: f64,
    /// Axis margin beyond the outermost lines, cm⁻¹.
    pub margin: f64,
}

impl SpectrumModel {
    /// One line per level in `levels`, unit strengths.
    pub fn from_band(band: &BandModel, levels: &[u32], shape: VoigtShape) -> Self {
        SpectrumModel {
            lines: levels
                .iter()
                .map(|&j| SpectralLine {
                    j,
                    center: band.center(j),
                    strength: 1.0,
                })
                .collect(),
            shape,
            step: 0.01,
            margin: 2.0,
        }
    }

    pub fn axis(&self) -> Vec<f64> {
        let lo = self.lines.iter().map(|l| l.center).fold(f64::INFINITY, f64::min) - self.margin;
        let hi = self.lines.iter().map(|l| l.center).fold(f64::NEG_INFINITY, f64::max) + self.margin;
        let n = ((hi - lo) / self.step).round() as usize + 1;
        (0..n).map(|k| lo + k as f64 * self.step).collect()
    }

    /// Pairs of lines closer than half the Voigt FWHM.
    pub fn overlaps(&self) -> Vec<(u32, u32)> {
        let limit = 0.5 * self.shape.fwhm();
        let mut out = Vec::new();
        for (a, la) in self.lines.iter().enumerate() {
            for lb in &self.lines[a + 1..] {
                if (la.center - lb.center).abs() < limit {
                    out.push((la.j, lb.j));
                }
            }
        }
        out
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectrumMeta {
    pub j_i: u32,
    /// s
    pub delay: f64,
    pub density: f64,
    pub noise: NoiseModel,
    /// Noiseless line areas (strength × population).
    pub true_areas: Vec<(u32, f64)>,
    pub populations: Vec<f64>,
    pub truth: GroundTruth,
    pub warnings: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Spectrum {
    /// cm⁻¹
    pub axis: Vec<f64>,
    pub intensity: Vec<f64>,
    pub model: SpectrumModel,
    pub meta: SpectrumMeta,
}

impl Spectrum {
    /// Columns `nu_cm1, intensity`.
    pub fn to_delimited(&self) -> String {
        two_columns(["nu_cm1", "intensity"], &self.axis, &self.intensity)
    }
}

/// Delays and settings of a short/long-delay spectrum pair.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectraTiming {
    /// s
    pub short_delay: f64,
    /// s
    pub long_delay: f64,
}

/// Short- and long-delay spectra after pumping `j_i`. Line areas are
/// `strength × population(j)` at the respective delay. The two spectra get
/// independent noise streams (`seed` and `seed + 1`).
pub fn synth_spectra(
    j_i: u32,
    matrix: &RateMatrix,
    density: f64,
    timing: SpectraTiming,
    model: &SpectrumModel,
    noise: NoiseModel,
) -> Result<(Spectrum, Spectrum), KineticsError> {
    validate_level(matrix, j_i)?;
    model.shape.validate().map_err(KineticsError::InvalidInput)?;
    if model.lines.is_empty() || model.lines.iter().any(|l| !(l.strength > 0.0) || l.j > matrix.jmax()) {
        return Err(KineticsError::InvalidInput("lines need positive strengths and levels on the ladder".into()));
    }
    if !(timing.short_delay > 0.0 && timing.long_delay > timing.short_delay) {
        return Err(KineticsError::InvalidInput("delays must satisfy 0 < short < long".into()));
    }
    let mut warnings = Vec::new();
    for (a, b) in model.overlaps() {
        let w = format!("lines j={a} and j={b} are closer than half the line width");
        log::warn!("{w}");
        warnings.push(w);
    }
    let n = matrix.generator.nrows();
    let mut p0 = vec![0.0; n];
    p0[j_i as usize] = 1.0;
    let prop = Propagator::new(matrix, density)?;
    let axis = model.axis();
    let make = |delay: f64, seed: u64| -> Spectrum {
        let pops = prop.at(&p0, delay);
        let areas: Vec<(u32, f64)> = model.lines.iter().map(|l| (l.j, l.strength * pops[l.j as usize])).collect();
        let mut intensity: Vec<f64> = axis
            .iter()
            .map(|&x| {
                model
                    .lines
                    .iter()
                    .zip(&areas)
                    .map(|(l, a)| a.1 * voigt_profile(x - l.center, &model.shape))
                    .sum()
            })
            .collect();
        let noise = NoiseModel { seed, ..noise };
        noise.apply(&mut intensity);
        Spectrum {
            axis: axis.clone(),
            intensity,
            model: model.clone(),
            meta: SpectrumMeta {
                j_i,
                delay,
                density,
                noise,
                true_areas: areas,
                populations: pops,
                truth: GroundTruth::of(matrix, j_i),
                warnings: warnings.clone(),
            },
        }
    };
    Ok((make(timing.short_delay, noise.seed), make(timing.long_delay, noise.seed.wrapping_add(1))))
}
