//! Bundled measured and theoretical state-to-state rate coefficients of
//! CO + normal H2 at 293 K.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::constants::RATE_DISPLAY_UNIT;
use crate::thermal::{Provenance, RateTable};

const TABLE: &str = include_str!("../data/table1.csv");
/// Temperature of the bundled data, K.
pub const REFERENCE_TEMPERATURE: f64 = 293.0;
/// Allowed difference between a stored sum row and the sum of its entries
/// (last-digit rounding), in display units.
pub const SUM_TOLERANCE: f64 = 0.05;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ReferenceError {
    #[error("reference data line {line}: {reason}")]
    Parse { line: usize, reason: String },
    #[error("theory entries for j_i = {j_i} sum to {sum:.3}, stored sum row is {stored}")]
    SumMismatch { j_i: u32, sum: f64, stored: f64 },
}

/// A value with its two-standard-deviation error, in units of 10⁻¹¹ cm³ s⁻¹.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Measured {
    pub value: f64,
    pub err2sigma: f64,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ReferenceEntry {
    pub measured: Option<Measured>,
    pub theory: Option<f64>,
}

/// Entries are in display units of 10⁻¹¹ cm³ s⁻¹.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReferenceDataset {
    pub temperature: f64,
    /// Keyed by `(j_i, j_f)`; listed cells without values are kept as empty entries.
    #[serde(with = "crate::serde_pairs")]
    pub entries: BTreeMap<(u32, u32), ReferenceEntry>,
    /// Stored "sum of state-to-state rates" rows, by `j_i`.
    pub sums: BTreeMap<u32, ReferenceEntry>,
    /// Stored equivalent total rate rows, by `j_i`.
    pub totals: BTreeMap<u32, ReferenceEntry>,
}

fn cell(s: &str, line: usize, what: &str) -> Result<Option<f64>, ReferenceError> {
    if s.is_empty() {
        return Ok(None);
    }
    s.parse().map(Some).map_err(|_| ReferenceError::Parse {
        line,
        reason: format!("bad {what} {s:?}"),
    })
}

impl ReferenceDataset {
    /// Parse and verify the bundled data.
    pub fn load() -> Result<Self, ReferenceError> {
        Self::parse(TABLE)
    }

    /// The bundled data file, verbatim.
    pub fn raw() -> &'static str {
        TABLE
    }

    pub fn parse(text: &str) -> Result<Self, ReferenceError> {
        let mut reader = csv::ReaderBuilder::new()
            .comment(Some(b'#'))
            .trim(csv::Trim::All)
            .from_reader(text.as_bytes());
        let mut out = ReferenceDataset {
            temperature: REFERENCE_TEMPERATURE,
            entries: BTreeMap::new(),
            sums: BTreeMap::new(),
            totals: BTreeMap::new(),
        };
        for rec in reader.records() {
            let rec = rec.map_err(|e| ReferenceError::Parse {
                line: e.position().map(|p| p.line() as usize).unwrap_or(0),
                reason: e.to_string(),
            })?;
            let line = rec.position().map(|p| p.line() as usize).unwrap_or(0);
            if rec.len() != 6 {
                return Err(ReferenceError::Parse {
                    line,
                    reason: format!("expected 6 fields, found {}", rec.len()),
                });
            }
            let j_i: u32 = rec[1].parse().map_err(|_| ReferenceError::Parse {
                line,
                reason: format!("bad j_i {:?}", &rec[1]),
            })?;
            let measured = match (cell(&rec[3], line, "measured")?, cell(&rec[4], line, "err2sigma")?) {
                (Some(value), Some(err2sigma)) => Some(Measured { value, err2sigma }),
                (None, None) => None,
                _ => {
                    return Err(ReferenceError::Parse {
                        line,
                        reason: "measured value and error must both be present or both absent".into(),
                    })
                }
            };
            let entry = ReferenceEntry {
                measured,
                theory: cell(&rec[5], line, "theory")?,
            };
            match &rec[0] {
                "state" => {
                    let j_f: u32 = rec[2].parse().map_err(|_| ReferenceError::Parse {
                        line,
                        reason: format!("bad j_f {:?}", &rec[2]),
                    })?;
                    out.entries.insert((j_i, j_f), entry);
                }
                "sum" => {
                    out.sums.insert(j_i, entry);
                }
                "total" => {
                    out.totals.insert(j_i, entry);
                }
                other => {
                    return Err(ReferenceError::Parse {
                        line,
                        reason: format!("unknown row kind {other:?}"),
                    })
                }
            }
        }
        out.verify()?;
        Ok(out)
    }

    /// Sum of the theory entries out of `j_i`, display units.
    pub fn theory_sum(&self, j_i: u32) -> f64 {
        self.entries
            .range((j_i, 0)..=(j_i, u32::MAX))
            .filter_map(|(_, e)| e.theory)
            .sum()
    }

    pub fn measured_sum(&self, j_i: u32) -> f64 {
        self.entries
            .range((j_i, 0)..=(j_i, u32::MAX))
            .filter_map(|(_, e)| e.measured.map(|m| m.value))
            .sum()
    }

    /// Every stored theory sum row must match its entries to [`SUM_TOLERANCE`].
    pub fn verify(&self) -> Result<(), ReferenceError> {
        for (&j_i, row) in &self.sums {
            if let Some(stored) = row.theory {
                let sum = self.theory_sum(j_i);
                if (sum - stored).abs() > SUM_TOLERANCE {
                    return Err(ReferenceError::SumMismatch { j_i, sum, stored });
                }
            }
        }
        Ok(())
    }

    pub fn initial_levels(&self) -> Vec<u32> {
        let mut v: Vec<u32> = self.entries.keys().map(|k| k.0).collect();
        v.dedup();
        v
    }

    /// Theory entries as a rate table in cm³ s⁻¹.
    pub fn theory_table(&self) -> RateTable {
        let mut t = RateTable::new(self.temperature, Provenance::Reference);
        for (&(i, f), e) in &self.entries {
            if let Some(v) = e.theory {
                t.insert(i, f, v * RATE_DISPLAY_UNIT, None);
            }
        }
        t
    }

    /// Measured entries with their 2σ errors as a rate table in cm³ s⁻¹.
    pub fn measured_table(&self) -> RateTable {
        let mut t = RateTable::new(self.temperature, Provenance::Reference);
        for (&(i, f), e) in &self.entries {
            if let Some(m) = e.measured {
                t.insert(i, f, m.value * RATE_DISPLAY_UNIT, Some(m.err2sigma * RATE_DISPLAY_UNIT));
            }
        }
        t
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tampered_sum_is_rejected() {
        let bad = TABLE.replace("sum,1,,63.5,3.0,45.1", "sum,1,,63.5,3.0,45.3");
        assert!(matches!(
            ReferenceDataset::parse(&bad),
            Err(ReferenceError::SumMismatch { j_i: 1, .. })
        ));
        let half = TABLE.replace("state,4,0,0.34,0.1,0.7", "state,4,0,0.34,,0.7");
        assert!(matches!(ReferenceDataset::parse(&half), Err(ReferenceError::Parse { .. })));
    }
}
