//! Synthetic datasets on disk: one delimited file per array plus a JSON
//! sidecar with metadata, ground truth, seeds and units.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::analysis::SyntheticDataset;
use crate::kinetics::{DecayTrace, Spectrum, SpectrumMeta, SpectrumModel, TraceMeta};

#[derive(Debug, thiserror::Error)]
pub enum DatasetError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}: {reason}")]
    Format { path: PathBuf, reason: String },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
struct SpectrumSidecar {
    file: String,
    model: SpectrumModel,
    meta: SpectrumMeta,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
struct Sidecar {
    format: String,
    units: Units,
    decay_file: String,
    decay: TraceMeta,
    short: SpectrumSidecar,
    long: SpectrumSidecar,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
struct Units {
    time: String,
    wavenumber: String,
    density: String,
    rate: String,
}

const FORMAT: &str = "retkit-dataset-1";

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> DatasetError + '_ {
    move |source| DatasetError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Write `<stem>.json`, `<stem>_decay.csv`, `<stem>_short.csv` and
/// `<stem>_long.csv` into `dir`. Returns the sidecar path.
pub fn write_dataset(dir: &Path, stem: &str, data: &SyntheticDataset) -> Result<PathBuf, DatasetError> {
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    let files = [
        (format!("{stem}_decay.csv"), data.decay.to_delimited()),
        (format!("{stem}_short.csv"), data.short.to_delimited()),
        (format!("{stem}_long.csv"), data.long.to_delimited()),
    ];
    for (name, body) in &files {
        let p = dir.join(name);
        fs::write(&p, body).map_err(io_err(&p))?;
    }
    let sidecar = Sidecar {
        format: FORMAT.into(),
        units: Units {
            time: "s".into(),
            wavenumber: "cm^-1".into(),
            density: "cm^-3".into(),
            rate: "cm^3 s^-1".into(),
        },
        decay_file: files[0].0.clone(),
        decay: data.decay.meta.clone(),
        short: SpectrumSidecar {
            file: files[1].0.clone(),
            model: data.short.model.clone(),
            meta: data.short.meta.clone(),
        },
        long: SpectrumSidecar {
            file: files[2].0.clone(),
            model: data.long.model.clone(),
            meta: data.long.meta.clone(),
        },
    };
    let p = dir.join(format!("{stem}.json"));
    let json = serde_json::to_string_pretty(&sidecar).expect("serializable sidecar");
    fs::write(&p, json).map_err(io_err(&p))?;
    Ok(p)
}

/// Read a dataset back from its sidecar path.
pub fn read_dataset(sidecar: &Path) -> Result<SyntheticDataset, DatasetError> {
    let text = fs::read_to_string(sidecar).map_err(io_err(sidecar))?;
    let meta: Sidecar = serde_json::from_str(&text).map_err(|e| DatasetError::Format {
        path: sidecar.to_path_buf(),
        reason: e.to_string(),
    })?;
    if meta.format != FORMAT {
        return Err(DatasetError::Format {
            path: sidecar.to_path_buf(),
            reason: format!("unknown format tag {:?}", meta.format),
        });
    }
    let dir = sidecar.parent().unwrap_or(Path::new("."));
    let (times, signal) = read_columns(&dir.join(&meta.decay_file))?;
    let spectrum = |s: SpectrumSidecar| -> Result<Spectrum, DatasetError> {
        let (axis, intensity) = read_columns(&dir.join(&s.file))?;
        Ok(Spectrum {
            axis,
            intensity,
            model: s.model,
            meta: s.meta,
        })
    };
    Ok(SyntheticDataset {
        decay: DecayTrace {
            times,
            signal,
            meta: meta.decay,
        },
        short: spectrum(meta.short)?,
        long: spectrum(meta.long)?,
    })
}

/// Two numeric columns with a header row.
pub fn read_columns(path: &Path) -> Result<(Vec<f64>, Vec<f64>), DatasetError> {
    let fmt = |reason: String| DatasetError::Format {
        path: path.to_path_buf(),
        reason,
    };
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    let mut reader = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(text.as_bytes());
    let (mut a, mut b) = (Vec::new(), Vec::new());
    for (i, rec) in reader.records().enumerate() {
        let rec = rec.map_err(|e| fmt(e.to_string()))?;
        if rec.len() != 2 {
            return Err(fmt(format!("row {}: expected 2 columns, found {}", i + 2, rec.len())));
        }
        let parse = |s: &str| s.trim().parse::<f64>().map_err(|e| fmt(format!("row {}: {e}", i + 2)));
        a.push(parse(&rec[0])?);
        b.push(parse(&rec[1])?);
    }
    Ok((a, b))
}
