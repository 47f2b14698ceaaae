//! Subcommands. Each one reads the resolved [`RunConfig`], writes its
//! results into the output directory and prints a short summary.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;

use retkit_core::analysis::{
    analyse, compare_to_reference, lines_of, propensity_report, roundtrip, simulate, AnalysisInputs, FeqSource,
    LmOptions, PropensityReport, RoundTripConfig, RoundTripReport, UncertaintyChoice, VoigtFitOptions,
};
use retkit_core::dataset::{read_dataset, write_dataset};
use retkit_core::kinetics::{BackgroundModel, BandModel, NoiseModel, VoigtShape};
use retkit_core::molsys::{reduced_mass, RigidRotorSpecies};
use retkit_core::pes::{iso88, AnisoDemo, PotentialExpansion};
use retkit_core::reference::{ReferenceDataset, ReferenceEntry};
use retkit_core::scatter::{energy_grid, CrossSectionTable, JSelection, PropagationGrid, ScatteringSystem};
use retkit_core::thermal::{rotor_rates, spin_weighted_table_with, Provenance, RateTable};

use crate::config::{BackgroundChoice, FeqConfig, PesModel, RateSource, RunConfig, UncertaintyConfig};
use crate::error::CliError;
use crate::output::{read_text, Output};

#[derive(Debug, Parser)]
#[command(
    name = "retkit",
    version,
    about = "Rotational energy transfer: close-coupling rates, double-resonance simulation and rate extraction"
)]
pub struct Cli {
    /// TOML run configuration; built-in defaults when absent.
    #[arg(long, global = true, env = "RETKIT_CONFIG")]
    pub config: Option<PathBuf>,
    /// Override the noise and bootstrap seed.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Override the output directory.
    #[arg(long, global = true)]
    pub output_dir: Option<PathBuf>,
    /// Also write two-column files for plotting.
    #[arg(long, global = true)]
    pub emit_plot_data: bool,
    /// Print the resolved configuration and exit.
    #[arg(long, global = true)]
    pub print_config: bool,
    /// More log output (-v info, -vv debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Close-coupling cross sections on the configured energy grid.
    Scatter,
    /// Thermal rate coefficients from cross sections (computed unless given).
    Rates {
        /// Cross-section file for the para partner levels.
        #[arg(long)]
        xsec_para: Option<PathBuf>,
        /// Cross-section file for the ortho partner levels.
        #[arg(long)]
        xsec_ortho: Option<PathBuf>,
    },
    /// Synthetic decay traces and spectra for each configured initial level.
    Simulate,
    /// Extract state-to-state rates from datasets.
    Extract {
        /// Dataset sidecar files; default: every `dataset_j*.json` in the output directory.
        #[arg(long = "dataset")]
        datasets: Vec<PathBuf>,
    },
    /// Simulate, extract and compare with the generating rates.
    Roundtrip,
    /// Compare a rate table with a reference table.
    Compare {
        /// `theory`, `measured` or a rate-table file.
        #[arg(long)]
        table: String,
        /// `theory`, `measured` or a rate-table file.
        #[arg(long, default_value = "measured")]
        reference: String,
        /// Restrict to these transitions, e.g. `1:0,1:2,1:3`.
        #[arg(long, value_delimiter = ',')]
        only: Vec<String>,
    },
    /// Propensity diagnostics of a rate table.
    Propensity {
        /// `theory`, `measured` or a rate-table file; default from the config.
        #[arg(long)]
        table: Option<String>,
        /// Initial levels; default from the config.
        #[arg(long, value_delimiter = ',')]
        j_initial: Vec<u32>,
    },
    /// Dump the bundled reference rate data.
    Reference {
        #[arg(long, value_enum, default_value_t = ReferenceFormat::Raw)]
        format: ReferenceFormat,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum ReferenceFormat {
    /// The bundled file verbatim.
    Raw,
    /// Parsed dataset with recomputed sums.
    Json,
    /// Theory entries as a rate table.
    Theory,
    /// Measured entries as a rate table.
    Measured,
}

/// Load the config, apply command-line overrides and dispatch.
pub fn run(cli: Cli) -> Result<(), CliError> {
    let mut cfg = match &cli.config {
        Some(p) => RunConfig::from_toml(&read_text(p)?)?,
        None => RunConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.kinetics.seed = seed;
    }
    if let Some(dir) = &cli.output_dir {
        cfg.io.output_dir = dir.clone();
    }
    cfg.validate()?;
    if cli.print_config {
        return emit(&cfg.to_toml());
    }
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(CliError::Validation("--threads must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Validation(format!("thread pool: {e}")))?;
    }
    if let Command::Reference { format } = cli.command {
        return cmd_reference(format);
    }
    let out = Output::new(cfg.io.output_dir.clone(), cli.emit_plot_data)?;
    out.text("resolved_config.toml", &cfg.to_toml())?;
    match cli.command {
        Command::Scatter => cmd_scatter(&cfg, &out).map(|_| ()),
        Command::Rates { xsec_para, xsec_ortho } => cmd_rates(&cfg, &out, xsec_para, xsec_ortho),
        Command::Simulate => cmd_simulate(&cfg, &out),
        Command::Extract { datasets } => cmd_extract(&cfg, &out, datasets),
        Command::Roundtrip => cmd_roundtrip(&cfg, &out),
        Command::Compare { table, reference, only } => cmd_compare(&out, &table, &reference, &only),
        Command::Propensity { table, j_initial } => cmd_propensity(&cfg, &out, table, j_initial),
        Command::Reference { .. } => unreachable!(),
    }
}

// ---------------------------------------------------------------------------
// Shared builders

pub fn rotor(cfg: &RunConfig) -> RigidRotorSpecies {
    RigidRotorSpecies {
        rotational_constant: cfg.species.rotor_b.value,
        mass: cfg.species.rotor_mass,
        ..RigidRotorSpecies::co()
    }
}

pub fn partner(cfg: &RunConfig) -> RigidRotorSpecies {
    RigidRotorSpecies {
        rotational_constant: cfg.species.partner_b.value,
        mass: cfg.species.partner_mass,
        ..RigidRotorSpecies::h2()
    }
}

fn expansion(cfg: &RunConfig) -> Result<PotentialExpansion, CliError> {
    let pes = &cfg.pes;
    Ok(match pes.model {
        PesModel::Iso88 => iso88(),
        PesModel::AnisoDemo => AnisoDemo {
            strengths: pes.strengths.iter().map(|&(a, b, c, s)| ((a, b, c), s)).collect(),
        }
        .build()?,
        PesModel::File => {
            let path = pes.file.as_deref().expect("validated");
            PotentialExpansion::from_delimited(&read_text(path)?, pes.tail_power, &path.display().to_string())?
        }
    })
}

/// Partner levels of the configured basis, grouped by spin isomer.
fn isomer_levels(cfg: &RunConfig) -> Vec<(String, Vec<u32>)> {
    let partner = partner(cfg);
    partner
        .spin_isomers
        .iter()
        .flatten()
        .map(|iso| {
            let levels: Vec<u32> = cfg.scattering.j2.iter().copied().filter(|&j| iso.parity.admits(j)).collect();
            (iso.label.clone(), levels)
        })
        .filter(|(_, l)| !l.is_empty())
        .collect()
}

fn parse_source(s: &str) -> RateSource {
    match s {
        "theory" | "reference-theory" => RateSource::ReferenceTheory,
        "measured" | "reference-measured" => RateSource::ReferenceMeasured,
        path => RateSource::File(PathBuf::from(path)),
    }
}

pub fn load_table(source: &RateSource) -> Result<RateTable, CliError> {
    Ok(match source {
        RateSource::ReferenceTheory => ReferenceDataset::load()?.theory_table(),
        RateSource::ReferenceMeasured => ReferenceDataset::load()?.measured_table(),
        RateSource::File(p) => RateTable::from_delimited(&read_text(p)?)?,
    })
}

/// Distinct noise streams per initial level.
fn level_seed(seed: u64, j_i: u32) -> u64 {
    seed.wrapping_add(0x9E37_79B9_7F4A_7C15u64.wrapping_mul(j_i as u64))
}

pub fn roundtrip_config(cfg: &RunConfig, table: &RateTable, j_i: u32) -> Result<RoundTripConfig, CliError> {
    let k = &cfg.kinetics;
    let a = &cfg.analysis;
    let t = cfg.thermal.temperature.value;
    let background = match k.background {
        BackgroundChoice::Reference => BackgroundModel::reference_default(),
        BackgroundChoice::None => BackgroundModel::none(),
        BackgroundChoice::Fit => BackgroundModel::fit_downward(table, &rotor(cfg), t).ok_or_else(|| {
            CliError::Validation("kinetics: background \"fit\" needs downward rates with two distinct |Δj|".into())
        })?,
    };
    Ok(RoundTripConfig {
        temperature: t,
        density: k.density.value,
        short_delay: k.short_delay.value,
        long_delay: k.long_delay.map(|d| d.value),
        ladder_jmax: k.ladder_jmax,
        background,
        probe_jmax: k.probe_jmax,
        band: BandModel {
            origin: k.band_origin.value,
            upper_b: k.upper_b.value,
            lower_b: k.lower_b.value,
        },
        shape: shape(cfg),
        decay_samples: k.decay_samples,
        decay_span_lifetimes: k.decay_span,
        noise: NoiseModel {
            relative_sigma: k.noise_sigma,
            amplitude_jitter: k.noise_jitter,
            seed: level_seed(k.seed, j_i),
        },
        f_eq_source: feq_source(cfg),
        uncertainty: uncertainty(cfg),
        shared_shape: a.shared_shape,
        baseline: a.baseline,
        lm: lm(cfg),
    })
}

fn shape(cfg: &RunConfig) -> VoigtShape {
    VoigtShape {
        gaussian_sigma: cfg.kinetics.gaussian_sigma.value,
        lorentzian_gamma: cfg.kinetics.lorentzian_gamma.value,
    }
}

fn feq_source(cfg: &RunConfig) -> FeqSource {
    match cfg.analysis.f_eq {
        FeqConfig::Boltzmann => FeqSource::Boltzmann,
        FeqConfig::DecayAsymptote => FeqSource::DecayAsymptote,
    }
}

fn uncertainty(cfg: &RunConfig) -> UncertaintyChoice {
    match cfg.analysis.uncertainty {
        UncertaintyConfig::None => UncertaintyChoice::None,
        UncertaintyConfig::Covariance => UncertaintyChoice::Covariance,
        UncertaintyConfig::Bootstrap => UncertaintyChoice::Bootstrap {
            replicates: cfg.analysis.bootstrap_replicates,
        },
    }
}

fn lm(cfg: &RunConfig) -> LmOptions {
    LmOptions {
        max_iterations: cfg.analysis.max_iterations,
        tolerance: cfg.analysis.tolerance,
    }
}

/// Tolerances echoed into every analysis summary.
#[derive(Serialize)]
struct Tolerances {
    lm_max_iterations: usize,
    lm_relative_tolerance: f64,
    uncertainty: UncertaintyConfig,
    bootstrap_replicates: usize,
}

fn tolerances(cfg: &RunConfig) -> Tolerances {
    Tolerances {
        lm_max_iterations: cfg.analysis.max_iterations,
        lm_relative_tolerance: cfg.analysis.tolerance,
        uncertainty: cfg.analysis.uncertainty,
        bootstrap_replicates: cfg.analysis.bootstrap_replicates,
    }
}

fn merge(into: &mut RateTable, from: &RateTable) {
    for (k, v) in &from.entries {
        into.entries.insert(*k, *v);
    }
}

// ---------------------------------------------------------------------------
// Theory pipeline

#[derive(Serialize)]
struct EnergyDiagnostic {
    e_total: f64,
    j_blocks: usize,
    j_last: Option<u32>,
    converged: bool,
    notes: Vec<String>,
}

#[derive(Serialize)]
struct IsomerSummary {
    isomer: String,
    partner_levels: Vec<u32>,
    file: PathBuf,
    energies: Vec<EnergyDiagnostic>,
}

#[derive(Serialize)]
struct ScatterSummary {
    pes: String,
    j1max: u32,
    grid: PropagationGrid,
    j_selection: JSelection,
    isomers: Vec<IsomerSummary>,
}

pub struct IsomerTable {
    pub label: String,
    pub levels: Vec<u32>,
    pub table: CrossSectionTable,
}

pub fn cmd_scatter(cfg: &RunConfig, out: &Output) -> Result<Vec<IsomerTable>, CliError> {
    let sc = &cfg.scattering;
    let expansion = expansion(cfg)?;
    let grid = PropagationGrid {
        r_min: sc.r_min.value,
        r_max: sc.r_max.value,
        max_step: sc.step.value,
    };
    let selection = match &sc.j_fixed {
        Some(js) => JSelection::Fixed(js.clone()),
        None => JSelection::Converge {
            j_cap: sc.j_cap,
            tolerance: sc.j_tolerance,
            window: sc.j_window,
        },
    };
    let collision = energy_grid(sc.e_min.value, sc.e_max.value, sc.e_points, sc.e_split.value);
    let mut tables = Vec::new();
    let mut summaries = Vec::new();
    for (label, levels) in isomer_levels(cfg) {
        let system =
            ScatteringSystem::new(rotor(cfg), partner(cfg), sc.j1max, levels.clone(), expansion.clone(), grid)?;
        let e0 = system.levels().iter().map(|l| l.1).fold(f64::INFINITY, f64::min);
        let energies: Vec<f64> = collision.iter().map(|e| e + e0).collect();
        log::info!("{label}: {} energies, partner levels {levels:?}", energies.len());
        let (table, results) = system.cross_section_scan(&energies, &selection)?;
        let name = format!("xsec_{label}.csv");
        let file = out.text(&name, &table.to_delimited())?;
        if out.plot_data {
            let ground = (0, levels[0]);
            for j1p in 1..=sc.j1max {
                let (x, y): (Vec<f64>, Vec<f64>) = table
                    .entries
                    .iter()
                    .filter(|e| e.initial == ground && e.final_level == (j1p, levels[0]))
                    .map(|e| (e.e_collision, e.sigma))
                    .unzip();
                out.plot(&format!("plot_xsec_{label}_0_{j1p}.dat"), ["E_coll_cm1", "sigma_A2"], &x, &y)?;
            }
        }
        println!("{label}: {} cross sections over {} energies -> {}", table.entries.len(), energies.len(), file.display());
        summaries.push(IsomerSummary {
            isomer: label.clone(),
            partner_levels: levels.clone(),
            file,
            energies: results
                .into_iter()
                .map(|r| EnergyDiagnostic {
                    e_total: r.e_total,
                    j_blocks: r.j_values.len(),
                    j_last: r.j_values.last().copied(),
                    converged: r.converged,
                    notes: r.notes,
                })
                .collect(),
        });
        tables.push(IsomerTable { label, levels, table });
    }
    if tables.is_empty() {
        return Err(CliError::Validation("scattering: j2 lists no level of any partner spin isomer".into()));
    }
    out.json(
        "scatter_summary.json",
        &ScatterSummary {
            pes: expansion.provenance.clone(),
            j1max: sc.j1max,
            grid,
            j_selection: selection,
            isomers: summaries,
        },
    )?;
    Ok(tables)
}

fn read_xsec(label: &str, path: &Path) -> Result<IsomerTable, CliError> {
    let table = CrossSectionTable::from_delimited(&read_text(path)?)
        .map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))?;
    let mut levels: Vec<u32> = table.entries.iter().map(|e| e.initial.1).collect();
    levels.sort_unstable();
    levels.dedup();
    Ok(IsomerTable {
        label: label.into(),
        levels,
        table,
    })
}

#[derive(Serialize)]
struct RatesSummary {
    temperature: f64,
    isomers: Vec<String>,
    weights: BTreeMap<String, f64>,
    detailed_balance_violation: f64,
    total_out: BTreeMap<u32, f64>,
    warnings: Vec<String>,
}

fn cmd_rates(
    cfg: &RunConfig,
    out: &Output,
    para: Option<PathBuf>,
    ortho: Option<PathBuf>,
) -> Result<(), CliError> {
    let tables = if para.is_none() && ortho.is_none() {
        cmd_scatter(cfg, out)?
    } else {
        let mut v = Vec::new();
        if let Some(p) = para {
            v.push(read_xsec("para", &p)?);
        }
        if let Some(p) = ortho {
            v.push(read_xsec("ortho", &p)?);
        }
        v
    };
    let rotor = rotor(cfg);
    let partner = partner(cfg);
    let mu = reduced_mass(rotor.mass, partner.mass);
    let t = cfg.thermal.temperature.value;
    let mut per_isomer = BTreeMap::new();
    for it in &tables {
        let r = rotor_rates(&it.table, &rotor, &partner, &it.levels, mu, t)?;
        out.text(&format!("rates_{}.csv", it.label), &r.to_delimited())?;
        per_isomer.insert(it.label.clone(), r);
    }
    let mut warnings = Vec::new();
    let mut weights = BTreeMap::new();
    let table = match (per_isomer.get("para"), per_isomer.get("ortho")) {
        (Some(p), Some(o)) => {
            weights.insert("para".into(), cfg.thermal.para_weight);
            weights.insert("ortho".into(), cfg.thermal.ortho_weight);
            spin_weighted_table_with(p, o, cfg.thermal.para_weight, cfg.thermal.ortho_weight)?
        }
        _ => {
            let (label, only) = per_isomer.iter().next().expect("at least one isomer");
            let w = format!("only {label} partner levels present; spin weights not applied");
            log::warn!("{w}");
            warnings.push(w);
            weights.insert(label.clone(), 1.0);
            only.clone()
        }
    };
    let path = out.text("rates.csv", &table.to_delimited())?;
    let total_out: BTreeMap<u32, f64> = table.initial_levels().into_iter().map(|j| (j, table.total_out(j))).collect();
    for (&j_i, &tot) in &total_out {
        let row: Vec<String> = table
            .entries
            .range((j_i, 0)..=(j_i, u32::MAX))
            .map(|(&(_, f), v)| format!("{f}:{:.3e}", v.k))
            .collect();
        println!("k({j_i}->*) total {tot:.4e}  {}", row.join(" "));
        let (x, y): (Vec<f64>, Vec<f64>) = table
            .entries
            .range((j_i, 0)..=(j_i, u32::MAX))
            .map(|(&(_, f), v)| (f as f64, v.k))
            .unzip();
        out.plot(&format!("plot_rates_j{j_i}.dat"), ["j_f", "k_cm3s"], &x, &y)?;
    }
    println!("rate table -> {}", path.display());
    out.json(
        "rates_summary.json",
        &RatesSummary {
            temperature: t,
            isomers: per_isomer.keys().cloned().collect(),
            weights,
            detailed_balance_violation: table.detailed_balance_violation(&rotor),
            total_out,
            warnings,
        },
    )?;
    Ok(())
}

// ---------------------------------------------------------------------------
// Kinetics and analysis

#[derive(Serialize)]
struct SimulatedEntry {
    j_i: u32,
    sidecar: PathBuf,
    long_delay: f64,
    total_out: f64,
    warnings: Vec<String>,
}

fn cmd_simulate(cfg: &RunConfig, out: &Output) -> Result<(), CliError> {
    let table = load_table(&cfg.kinetics.rates)?;
    let species = rotor(cfg);
    let mut entries = Vec::new();
    for &j_i in &cfg.kinetics.j_initial {
        let rt = roundtrip_config(cfg, &table, j_i)?;
        let (data, warnings) = simulate(&table, &species, j_i, &rt)?;
        let sidecar = write_dataset(&out.dir, &format!("dataset_j{j_i}"), &data)?;
        println!("j_i = {j_i}: dataset -> {}", sidecar.display());
        entries.push(SimulatedEntry {
            j_i,
            sidecar,
            long_delay: data.long.meta.delay,
            total_out: data.decay.meta.truth.total_out,
            warnings,
        });
    }
    out.json("simulate_summary.json", &entries)?;
    Ok(())
}

fn default_datasets(dir: &Path) -> Result<Vec<PathBuf>, CliError> {
    let mut v: Vec<PathBuf> = std::fs::read_dir(dir)
        .map_err(|e| CliError::io(dir, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| {
            p.file_name()
                .and_then(|n| n.to_str())
                .is_some_and(|n| n.starts_with("dataset_j") && n.ends_with(".json"))
        })
        .collect();
    v.sort();
    if v.is_empty() {
        return Err(CliError::Io(format!("no dataset_j*.json files in {}", dir.display())));
    }
    Ok(v)
}

#[derive(Serialize)]
struct ExtractSummary<'a> {
    tolerances: Tolerances,
    results: Vec<&'a retkit_core::analysis::AnalysisOutput>,
}

fn cmd_extract(cfg: &RunConfig, out: &Output, datasets: Vec<PathBuf>) -> Result<(), CliError> {
    let datasets = if datasets.is_empty() {
        default_datasets(&out.dir)?
    } else {
        datasets
    };
    let species = rotor(cfg);
    let mut merged = RateTable::new(cfg.thermal.temperature.value, Provenance::Extracted);
    let mut outputs = Vec::new();
    for path in &datasets {
        let data = read_dataset(path)?;
        let j_i = data.decay.meta.j_i;
        let inputs = AnalysisInputs {
            j_i,
            temperature: cfg.thermal.temperature.value,
            density: data.short.meta.density,
            short_delay: data.short.meta.delay,
            species: species.clone(),
            lines: lines_of(&data.short.model),
            fit: VoigtFitOptions {
                shared_shape: cfg.analysis.shared_shape,
                baseline: cfg.analysis.baseline,
                initial_shape: shape(cfg),
                lm: lm(cfg),
            },
            f_eq_source: feq_source(cfg),
            uncertainty: uncertainty(cfg),
            seed: level_seed(cfg.kinetics.seed, j_i),
        };
        let res = analyse(
            &inputs,
            &data.decay.times,
            &data.decay.signal,
            (&data.short.axis, &data.short.intensity),
            (&data.long.axis, &data.long.intensity),
        )?;
        println!(
            "j_i = {j_i}: k_tot(decay) {:.4e}, sum k(extracted) {:.4e}",
            res.k_total_decay,
            res.extraction.table.total_out(j_i)
        );
        for (&(_, f), v) in &res.extraction.table.entries {
            println!("  {j_i} -> {f}: {:.4e} (2σ {:.1e})", v.k, v.err2sigma.unwrap_or(f64::NAN));
        }
        merge(&mut merged, &res.extraction.table);
        if out.plot_data {
            let d = &res.decay_fit;
            let curve: Vec<f64> =
                data.decay.times.iter().map(|t| d.amplitude * (-d.k_exp * t).exp() + d.baseline).collect();
            out.plot(&format!("plot_decay_j{j_i}.dat"), ["t_s", "signal"], &data.decay.times, &data.decay.signal)?;
            out.plot(&format!("plot_decay_fit_j{j_i}.dat"), ["t_s", "fit"], &data.decay.times, &curve)?;
            out.plot(&format!("plot_spectrum_short_j{j_i}.dat"), ["nu_cm1", "intensity"], &data.short.axis, &data.short.intensity)?;
            out.plot(&format!("plot_spectrum_short_fit_j{j_i}.dat"), ["nu_cm1", "fit"], &data.short.axis, &res.short_fit.fitted)?;
            out.plot(&format!("plot_spectrum_long_j{j_i}.dat"), ["nu_cm1", "intensity"], &data.long.axis, &data.long.intensity)?;
            out.plot(&format!("plot_spectrum_long_fit_j{j_i}.dat"), ["nu_cm1", "fit"], &data.long.axis, &res.long_fit.fitted)?;
            let (x, y): (Vec<f64>, Vec<f64>) =
                res.extraction.table.entries.iter().map(|(&(_, f), v)| (f as f64, v.k)).unzip();
            out.plot(&format!("plot_extracted_j{j_i}.dat"), ["j_f", "k_cm3s"], &x, &y)?;
        }
        outputs.push(res);
    }
    out.text("extracted.csv", &merged.to_delimited())?;
    out.json(
        "extract_summary.json",
        &ExtractSummary {
            tolerances: tolerances(cfg),
            results: outputs.iter().collect(),
        },
    )?;
    Ok(())
}

#[derive(Serialize)]
struct RoundTripSummary<'a> {
    tolerances: Tolerances,
    reports: &'a [RoundTripReport],
}

fn cmd_roundtrip(cfg: &RunConfig, out: &Output) -> Result<(), CliError> {
    let table = load_table(&cfg.kinetics.rates)?;
    let species = rotor(cfg);
    let mut reports = Vec::new();
    let mut merged = RateTable::new(cfg.thermal.temperature.value, Provenance::Extracted);
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["j_i", "j_f", "k_input_cm3s", "k_extracted_cm3s", "err2sigma_cm3s", "relative"])
        .expect("in-memory write");
    for &j_i in &cfg.kinetics.j_initial {
        let rt = roundtrip_config(cfg, &table, j_i)?;
        let rep = roundtrip(&table, &species, j_i, &rt)?;
        println!(
            "j_i = {j_i}: k_tot(decay) {:.4e} vs generator {:.4e} ({:+.2}%), sum k(extracted) {:.4e}",
            rep.k_total_decay,
            rep.truth.total_out,
            100.0 * rep.total_relative(),
            rep.k_sum_extracted
        );
        let opt = |v: Option<f64>| v.map(|x| format!("{x:e}")).unwrap_or_default();
        for d in &rep.deviations {
            w.write_record([
                j_i.to_string(),
                d.j_f.to_string(),
                format!("{:e}", d.k_input),
                opt(d.k_extracted),
                opt(d.err2sigma),
                opt(d.relative),
            ])
            .expect("in-memory write");
            if let Some(rel) = d.relative {
                println!("  {j_i} -> {}: input {:.4e} extracted {:.4e} ({:+.2}%)", d.j_f, d.k_input, d.k_input * (1.0 + rel), 100.0 * rel);
            }
        }
        if out.plot_data {
            let (x, y): (Vec<f64>, Vec<f64>) = rep.deviations.iter().map(|d| (d.j_f as f64, d.k_input)).unzip();
            out.plot(&format!("plot_rates_input_j{j_i}.dat"), ["j_f", "k_cm3s"], &x, &y)?;
            let (x, y): (Vec<f64>, Vec<f64>) = rep
                .deviations
                .iter()
                .filter_map(|d| d.k_extracted.map(|k| (d.j_f as f64, k)))
                .unzip();
            out.plot(&format!("plot_rates_extracted_j{j_i}.dat"), ["j_f", "k_cm3s"], &x, &y)?;
        }
        merge(&mut merged, &rep.extraction.table);
        reports.push(rep);
    }
    out.text("roundtrip.csv", &String::from_utf8(w.into_inner().expect("flush")).expect("utf-8"))?;
    out.text("extracted.csv", &merged.to_delimited())?;
    out.json(
        "roundtrip_summary.json",
        &RoundTripSummary {
            tolerances: tolerances(cfg),
            reports: &reports,
        },
    )?;
    Ok(())
}

// ---------------------------------------------------------------------------
// Comparisons and diagnostics

fn parse_pairs(only: &[String]) -> Result<Vec<(u32, u32)>, CliError> {
    only.iter()
        .map(|s| {
            let (a, b) = s
                .split_once(':')
                .ok_or_else(|| CliError::Validation(format!("--only: expected j_i:j_f, got {s:?}")))?;
            let p = |x: &str| {
                x.trim()
                    .parse::<u32>()
                    .map_err(|_| CliError::Validation(format!("--only: bad level in {s:?}")))
            };
            Ok((p(a)?, p(b)?))
        })
        .collect()
}

/// Stored sum and total rows of the bundled data, reported as they are.
#[derive(Serialize)]
struct ReferenceRows {
    sums: BTreeMap<u32, ReferenceEntry>,
    totals: BTreeMap<u32, ReferenceEntry>,
}

#[derive(Serialize)]
struct CompareOutput {
    report: retkit_core::analysis::CompareReport,
    #[serde(skip_serializing_if = "Option::is_none")]
    reference_rows: Option<ReferenceRows>,
}

fn cmd_compare(out: &Output, table: &str, reference: &str, only: &[String]) -> Result<(), CliError> {
    let (src, ref_src) = (parse_source(table), parse_source(reference));
    let a = load_table(&src)?;
    let b = load_table(&ref_src)?;
    let pairs = parse_pairs(only)?;
    let report = compare_to_reference(&a, &b, (!pairs.is_empty()).then_some(pairs.as_slice()));
    if report.disjoint {
        log::warn!("tables share no transitions");
    }
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["j_i", "j_f", "k_cm3s", "k_reference_cm3s", "ratio", "combined_err2sigma_cm3s", "z", "flagged"])
        .expect("in-memory write");
    let opt = |v: Option<f64>| v.map(|x| format!("{x:e}")).unwrap_or_default();
    for d in &report.deviations {
        w.write_record([
            d.j_i.to_string(),
            d.j_f.to_string(),
            format!("{:e}", d.k),
            format!("{:e}", d.k_reference),
            opt(d.ratio),
            opt(d.combined_err2sigma),
            opt(d.z),
            d.flagged.to_string(),
        ])
        .expect("in-memory write");
        println!(
            "{} -> {}: {:.3e} vs {:.3e}  ratio {}{}",
            d.j_i,
            d.j_f,
            d.k,
            d.k_reference,
            d.ratio.map(|r| format!("{r:.3}")).unwrap_or_else(|| "-".into()),
            if d.flagged { "  *" } else { "" }
        );
    }
    let s = &report.summary;
    println!("{} transitions, {} flagged", s.count, s.flagged);
    let bundled = |s: &RateSource| !matches!(s, RateSource::File(_));
    let reference_rows = if bundled(&src) || bundled(&ref_src) {
        let data = ReferenceDataset::load()?;
        for (j_i, row) in &data.totals {
            if let (Some(m), Some(sum)) = (row.measured, data.sums.get(j_i).and_then(|r| r.measured)) {
                println!(
                    "reference j_i = {j_i}: measured sum of state-to-state {:.1} vs measured total {:.1} (1e-11 cm^3 s^-1)",
                    sum.value, m.value
                );
            }
        }
        Some(ReferenceRows {
            sums: data.sums,
            totals: data.totals,
        })
    } else {
        None
    };
    out.text("compare.csv", &String::from_utf8(w.into_inner().expect("flush")).expect("utf-8"))?;
    out.json("compare.json", &CompareOutput { report, reference_rows })?;
    Ok(())
}

fn cmd_propensity(cfg: &RunConfig, out: &Output, table: Option<String>, j_initial: Vec<u32>) -> Result<(), CliError> {
    let source = table.as_deref().map(parse_source).unwrap_or_else(|| cfg.kinetics.rates.clone());
    let table = load_table(&source)?;
    let species = rotor(cfg);
    let present = table.initial_levels();
    let levels: Vec<u32> = if j_initial.is_empty() {
        cfg.kinetics.j_initial.iter().copied().filter(|j| present.contains(j)).collect()
    } else {
        j_initial
    };
    let mut reports: Vec<PropensityReport> = Vec::new();
    for j_i in levels {
        let rep = propensity_report(&table, j_i, &species);
        if rep.entries.is_empty() {
            log::warn!("no rates out of j_i = {j_i}");
        }
        for f in &rep.flags {
            println!(
                "j_i = {j_i}: {:?} Δj = {} {:?} propensity (k {:.3e} vs neighbors {:.3e}, {:.3e})",
                f.branch, f.delta_j, f.kind, f.k, f.neighbors[0], f.neighbors[1]
            );
        }
        if let Some(g) = rep.energy_gap {
            println!("j_i = {j_i}: energy-gap fit β {:.4} cm, rms ln-residual {:.3}", g.beta, g.rms_residual);
        }
        reports.push(rep);
    }
    out.json("propensity.json", &reports)?;
    Ok(())
}

#[derive(Serialize)]
struct ReferenceDump {
    dataset: ReferenceDataset,
    theory_sums: BTreeMap<u32, f64>,
    measured_sums: BTreeMap<u32, f64>,
}

fn cmd_reference(format: ReferenceFormat) -> Result<(), CliError> {
    let data = ReferenceDataset::load()?;
    match format {
        ReferenceFormat::Raw => emit(ReferenceDataset::raw()),
        ReferenceFormat::Theory => emit(&data.theory_table().to_delimited()),
        ReferenceFormat::Measured => emit(&data.measured_table().to_delimited()),
        ReferenceFormat::Json => {
            let levels = data.initial_levels();
            let dump = ReferenceDump {
                theory_sums: levels.iter().map(|&j| (j, data.theory_sum(j))).collect(),
                measured_sums: levels.iter().map(|&j| (j, data.measured_sum(j))).collect(),
                dataset: data,
            };
            emit(&(serde_json::to_string_pretty(&dump).expect("serializable") + "\n"))
        }
    }
}

/// Write to stdout; a closed pipe (e.g. `| head`) is not an error.
fn emit(text: &str) -> Result<(), CliError> {
    use std::io::Write;
    match std::io::stdout().lock().write_all(text.as_bytes()) {
        Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => Err(CliError::Io(format!("stdout: {e}"))),
        _ => Ok(()),
    }
}
