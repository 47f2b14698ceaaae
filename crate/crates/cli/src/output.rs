//! Output directory handling. Every write is logged so a run leaves an
//! audit trail of the files it produced.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::error::CliError;

pub struct Output {
    pub dir: PathBuf,
    pub plot_data: bool,
}

impl Output {
    pub fn new(dir: PathBuf, plot_data: bool) -> Result<Self, CliError> {
        fs::create_dir_all(&dir).map_err(|e| CliError::io(&dir, e))?;
        Ok(Output { dir, plot_data })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }

    pub fn text(&self, name: &str, body: &str) -> Result<PathBuf, CliError> {
        let p = self.path(name);
        fs::write(&p, body).map_err(|e| CliError::io(&p, e))?;
        log::info!("wrote {}", p.display());
        Ok(p)
    }

    pub fn json<T: Serialize>(&self, name: &str, value: &T) -> Result<PathBuf, CliError> {
        let body = serde_json::to_string_pretty(value).map_err(|e| CliError::Io(format!("{name}: {e}")))?;
        self.text(name, &(body + "\n"))
    }

    /// Two-column plot file, written only with `--emit-plot-data`.
    pub fn plot(&self, name: &str, header: [&str; 2], x: &[f64], y: &[f64]) -> Result<(), CliError> {
        if !self.plot_data {
            return Ok(());
        }
        let mut body = format!("# {} {}\n", header[0], header[1]);
        for (a, b) in x.iter().zip(y) {
            body.push_str(&format!("{a:e} {b:e}\n"));
        }
        self.text(name, &body).map(|_| ())
    }
}

pub fn read_text(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| CliError::io(path, e))
}
