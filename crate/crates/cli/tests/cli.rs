use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use retkit_cli::config::{PesModel, RateSource, RunConfig};
use retkit_cli::units::Time;
use retkit_core::reference::ReferenceDataset;
use retkit_core::thermal::RateTable;

fn retkit(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_retkit"))
        .current_dir(dir)
        .env_remove("RETKIT_CONFIG")
        .args(args)
        .output()
        .expect("spawn retkit")
}

fn error_record(out: &Output) -> serde_json::Value {
    let stderr = String::from_utf8_lossy(&out.stderr);
    let line = stderr.lines().last().expect("error record on stderr");
    serde_json::from_str(line).unwrap_or_else(|_| panic!("not a JSON record: {line}"))
}

/// Small even-only scattering setup that runs in about a second.
const TINY: &str = r#"
[pes]
model = "aniso-demo"
strengths = [[2, 0, 2, 0.4]]

[scattering]
j1max = 3
j2 = [0]
r_max = "30 bohr"
e_min = "5 cm^-1"
e_max = "400 cm^-1"
e_points = 4
j_fixed = [0, 1, 2]

[thermal]
temperature = "40 K"
"#;

#[test]
fn config_round_trips_through_toml() {
    let mut cfg = RunConfig::default();
    assert_eq!(RunConfig::from_toml(&cfg.to_toml()).unwrap(), cfg);

    cfg.kinetics.short_delay = "2.5 us".parse().unwrap();
    cfg.kinetics.long_delay = Some("40 us".parse::<Time>().unwrap());
    cfg.kinetics.rates = RateSource::File("rates.csv".into());
    cfg.pes.model = PesModel::Iso88;
    cfg.scattering.j_fixed = Some(vec![0, 5, 10]);
    let once = RunConfig::from_toml(&cfg.to_toml()).unwrap();
    assert_eq!(once, cfg);
    assert_eq!(once.to_toml(), cfg.to_toml());
}

#[test]
fn config_units_are_converted_and_required() {
    let cfg = RunConfig::from_toml("[kinetics]\nshort_delay = \"15 ns\"\ndensity = \"1.6e22 m^-3\"\n").unwrap();
    assert!((cfg.kinetics.short_delay.value - 15e-9).abs() < 1e-22);
    assert!((cfg.kinetics.density.value - 1.6e16).abs() < 1.0);
    assert!(RunConfig::from_toml("[kinetics]\nshort_delay = \"15\"\n").is_err());
    assert!(RunConfig::from_toml("[thermal]\ntemperature = \"293 furlongs\"\n").is_err());
}

#[test]
fn unknown_keys_are_rejected() {
    for text in ["[kinetics]\nbogus = 1\n", "[nonsense]\n", "[scattering]\nj1_max = 4\n"] {
        let err = RunConfig::from_toml(text).unwrap_err();
        assert_eq!(err.exit_code(), 2, "{text}");
    }
}

#[test]
fn invalid_values_are_rejected() {
    for text in [
        "[thermal]\ntemperature = \"-5 K\"\n",
        "[thermal]\npara_weight = 0.5\n",
        "[kinetics]\nlong_delay = \"1 ns\"\n",
        "[pes]\nmodel = \"file\"\n",
        "[scattering]\nj2 = []\n",
    ] {
        assert!(RunConfig::from_toml(text).is_err(), "{text}");
    }
}

#[test]
fn exit_codes_and_error_records() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("bad.toml"), "[kinetics]\nbogus = 1\n").unwrap();
    let out = retkit(dir.path(), &["--config", "bad.toml", "simulate"]);
    assert_eq!(out.status.code(), Some(2));
    let rec = error_record(&out);
    assert_eq!(rec["error"], "validation");
    assert_eq!(rec["exit_code"], 2);
    assert!(rec["message"].as_str().unwrap().contains("bogus"));

    let out = retkit(dir.path(), &["--config", "missing.toml", "simulate"]);
    assert_eq!(out.status.code(), Some(4));
    assert_eq!(error_record(&out)["error"], "io");

    let out = retkit(dir.path(), &["compare", "--table", "no-such-table.csv"]);
    assert_eq!(out.status.code(), Some(4));

    // Three J values cannot satisfy a three-value convergence window that
    // must be followed by a smaller tail.
    let unconverged = format!("{}\n", TINY.replace("j_fixed = [0, 1, 2]", "j_cap = 1"));
    fs::write(dir.path().join("unconverged.toml"), unconverged).unwrap();
    let out = retkit(dir.path(), &["--config", "unconverged.toml", "scatter"]);
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(error_record(&out)["error"], "convergence");
}

#[test]
fn env_var_supplies_default_config() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("c.toml"), "[kinetics]\nseed = 4242\n").unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_retkit"))
        .current_dir(dir.path())
        .env("RETKIT_CONFIG", "c.toml")
        .args(["--print-config", "simulate"])
        .output()
        .unwrap();
    assert!(out.status.success());
    let cfg = RunConfig::from_toml(&String::from_utf8(out.stdout).unwrap()).unwrap();
    assert_eq!(cfg.kinetics.seed, 4242);
}

#[test]
fn reference_dump_matches_bundled_data() {
    let dir = tempfile::tempdir().unwrap();
    let out = retkit(dir.path(), &["reference"]);
    assert!(out.status.success());
    assert_eq!(String::from_utf8(out.stdout).unwrap(), ReferenceDataset::raw());

    let out = retkit(dir.path(), &["reference", "--format", "json"]);
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    for (j, expected) in [("0", 56.3), ("1", 45.1), ("4", 49.0)] {
        let s = v["theory_sums"][j].as_f64().unwrap();
        assert!((s - expected).abs() <= 0.05, "j_i = {j}: {s}");
    }

    let out = retkit(dir.path(), &["reference", "--format", "theory"]);
    let table = RateTable::from_delimited(&String::from_utf8(out.stdout).unwrap()).unwrap();
    assert_eq!(table, ReferenceDataset::load().unwrap().theory_table());
}

#[test]
fn self_comparison_is_identity() {
    let dir = tempfile::tempdir().unwrap();
    let out = retkit(dir.path(), &["compare", "--table", "measured", "--reference", "measured", "--output-dir", "o"]);
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.path().join("o/compare.json")).unwrap()).unwrap();
    let devs = v["report"]["deviations"].as_array().unwrap();
    assert!(!devs.is_empty());
    for d in devs {
        assert_eq!(d["ratio"].as_f64().unwrap(), 1.0);
        assert_eq!(d["difference"].as_f64().unwrap(), 0.0);
        assert_eq!(d["flagged"], false);
    }
    // The stored sums and totals are carried along untouched.
    assert_eq!(v["reference_rows"]["totals"]["0"]["measured"]["value"].as_f64(), Some(32.2));
}

#[test]
fn compare_respects_transition_subset() {
    let dir = tempfile::tempdir().unwrap();
    let out = retkit(dir.path(), &["compare", "--table", "theory", "--only", "1:0,1:2,1:3", "--output-dir", "o"]);
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.path().join("o/compare.json")).unwrap()).unwrap();
    let pairs: Vec<(u64, u64)> = v["report"]["deviations"]
        .as_array()
        .unwrap()
        .iter()
        .map(|d| (d["j_i"].as_u64().unwrap(), d["j_f"].as_u64().unwrap()))
        .collect();
    // Neither bundled table lists 1 -> 0, so it drops out.
    assert_eq!(pairs, [(1, 2), (1, 3)]);

    let out = retkit(dir.path(), &["compare", "--table", "theory", "--only", "1-0"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn propensity_flags_on_theory_rates() {
    let dir = tempfile::tempdir().unwrap();
    let out = retkit(dir.path(), &["propensity", "--table", "theory", "--j-initial", "0", "--output-dir", "o"]);
    assert!(out.status.success());
    let v: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("o/propensity.json")).unwrap()).unwrap();
    let flags = v[0]["flags"].as_array().unwrap();
    assert!(flags.iter().any(|f| f["branch"] == "up" && f["delta_j"] == 2), "{flags:?}");
}

#[test]
fn simulation_is_seeded_and_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = "[kinetics]\nj_initial = [0, 4]\nprobe_jmax = 5\nnoise_sigma = 0.01\nnoise_jitter = 0.02\n";
    fs::write(dir.path().join("c.toml"), cfg).unwrap();
    for (sub, seed) in [("a", "7"), ("b", "7"), ("c", "8")] {
        let out = retkit(dir.path(), &["--config", "c.toml", "--seed", seed, "--output-dir", sub, "simulate"]);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    }
    let read = |sub: &str, f: &str| fs::read(dir.path().join(sub).join(f)).unwrap();
    for f in ["dataset_j0.json", "dataset_j0_decay.csv", "dataset_j0_short.csv", "dataset_j4_long.csv"] {
        assert_eq!(read("a", f), read("b", f), "{f}");
    }
    assert_ne!(read("a", "dataset_j0_short.csv"), read("c", "dataset_j0_short.csv"));
    // Different levels draw different noise.
    let noise = |f: &str| {
        let text = String::from_utf8(read("a", f)).unwrap();
        text.lines().nth(1).unwrap().to_string()
    };
    assert_ne!(noise("dataset_j0_decay.csv"), noise("dataset_j4_decay.csv"));
}

#[test]
fn zero_rate_table_gives_flat_outputs() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(
        dir.path().join("zero.csv"),
        "T_K,j_i,j_f,k_cm3s,err2sigma_cm3s,provenance\n293.0,0,1,0e0,,reference\n",
    )
    .unwrap();
    let cfg = "[kinetics]\nrates = { file = \"zero.csv\" }\nbackground = \"none\"\nj_initial = [0]\nprobe_jmax = 3\n";
    fs::write(dir.path().join("c.toml"), cfg).unwrap();
    let out = retkit(dir.path(), &["--config", "c.toml", "--output-dir", "o", "simulate"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let data = retkit_core::dataset::read_dataset(&dir.path().join("o/dataset_j0.json")).unwrap();
    let first = data.decay.signal[0];
    assert!(data.decay.signal.iter().all(|&s| s == first));
    assert_eq!(data.short.intensity, data.long.intensity);
}

#[test]
fn extract_reads_simulated_datasets() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = "[kinetics]\nj_initial = [1]\nprobe_jmax = 4\n\n[analysis]\nuncertainty = \"covariance\"\n";
    fs::write(dir.path().join("c.toml"), cfg).unwrap();
    assert!(retkit(dir.path(), &["--config", "c.toml", "--output-dir", "o", "simulate"]).status.success());
    let out = retkit(dir.path(), &["--config", "c.toml", "--output-dir", "o", "--emit-plot-data", "extract"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let table = RateTable::from_delimited(&fs::read_to_string(dir.path().join("o/extracted.csv")).unwrap()).unwrap();
    let theory = ReferenceDataset::load().unwrap().theory_table();
    let k = table.rate(1, 3).unwrap();
    let k0 = theory.rate(1, 3).unwrap();
    assert!((k / k0 - 1.0).abs() < 0.15, "{k} vs {k0}");
    assert!(dir.path().join("o/plot_decay_fit_j1.dat").exists());
    let summary = fs::read_to_string(dir.path().join("o/extract_summary.json")).unwrap();
    assert!(summary.contains("lm_relative_tolerance"));
}

#[test]
fn rates_from_even_only_model_have_zero_odd_rows() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("tiny.toml"), TINY).unwrap();
    for sub in ["a", "b"] {
        let out = retkit(dir.path(), &["--config", "tiny.toml", "--output-dir", sub, "rates"]);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    }
    let text = fs::read_to_string(dir.path().join("a/rates.csv")).unwrap();
    assert_eq!(text, fs::read_to_string(dir.path().join("b/rates.csv")).unwrap());
    let table = RateTable::from_delimited(&text).unwrap();
    for (&(i, f), v) in &table.entries {
        if (i + f) % 2 == 1 {
            assert_eq!(v.k, 0.0, "{i}->{f}");
        } else if i != f {
            assert!(v.k > 0.0, "{i}->{f}");
        }
    }

    // Rates can be recomputed from the written cross sections alone.
    let out = retkit(
        dir.path(),
        &["--config", "tiny.toml", "--output-dir", "c", "rates", "--xsec-para", "a/xsec_para.csv"],
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(fs::read_to_string(dir.path().join("c/rates.csv")).unwrap(), text);
}

#[test]
fn isotropic_model_gives_zero_inelastic_rates() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = TINY.replace("model = \"aniso-demo\"\nstrengths = [[2, 0, 2, 0.4]]", "model = \"iso88\"");
    fs::write(dir.path().join("iso.toml"), cfg).unwrap();
    let out = retkit(dir.path(), &["--config", "iso.toml", "--output-dir", "o", "rates"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let table = RateTable::from_delimited(&fs::read_to_string(dir.path().join("o/rates.csv")).unwrap()).unwrap();
    for (&(i, f), v) in &table.entries {
        if i != f {
            assert_eq!(v.k, 0.0, "{i}->{f}");
        }
    }
}
