//! Bispherical expansion of the rotor-rotor interaction,
//! `V(R, θ1, θ2, φ) = Σ v_{l1 l2 l}(R) A_{l1 l2 l}(θ1, θ2, φ)`, with `A` as
//! defined in [`crate::angular`].

mod radial;

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

pub use radial::{RadialFunction, TabulatedRadial};

use crate::angular::bispherical;
use crate::quadrature::gauss_legendre;

/// Well depth of the bundled isotropic model, cm⁻¹.
pub const ISO88_DEPTH: f64 = 88.5;
/// Position of the isotropic minimum, bohr.
pub const ISO88_RMIN: f64 = 7.5;
/// Exp-6 steepness parameter of the isotropic model.
pub const ISO88_ALPHA: f64 = 13.0;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum PesError {
    #[error("expansion term ({0}, {1}, {2}) violates the triangle or parity rule")]
    InvalidTerm(u32, u32, u32),
    #[error("duplicate expansion term ({0}, {1}, {2})")]
    DuplicateTerm(u32, u32, u32),
    #[error("expansion must contain exactly one isotropic (0,0,0) term")]
    MissingIsotropic,
    #[error("R = {r} bohr lies below the first tabulated knot {first} bohr")]
    BelowTabulatedRange { r: f64, first: f64 },
    #[error("R = {0} bohr must be positive")]
    NonPositiveDistance(f64),
    #[error("invalid radial table: {0}")]
    InvalidTable(String),
    #[error("model term ({0}, {1}, {2}) is not one of the configurable anisotropies")]
    UnsupportedModelTerm(u32, u32, u32),
}

pub type Triple = (u32, u32, u32);

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExpansionTerm {
    pub l1: u32,
    pub l2: u32,
    pub l: u32,
    pub radial: RadialFunction,
}

impl ExpansionTerm {
    pub fn triple(&self) -> Triple {
        (self.l1, self.l2, self.l)
    }
}

pub fn valid_triple((l1, l2, l): Triple) -> bool {
    l >= l1.abs_diff(l2) && l <= l1 + l2 && (l1 + l2 + l) % 2 == 0
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PotentialExpansion {
    terms: Vec<ExpansionTerm>,
    pub provenance: String,
}

impl PotentialExpansion {
    pub fn new(terms: Vec<ExpansionTerm>, provenance: impl Into<String>) -> Result<Self, PesError> {
        let mut seen = BTreeSet::new();
        for t in &terms {
            if !valid_triple(t.triple()) {
                return Err(PesError::InvalidTerm(t.l1, t.l2, t.l));
            }
            if !seen.insert(t.triple()) {
                return Err(PesError::DuplicateTerm(t.l1, t.l2, t.l));
            }
        }
        if !seen.contains(&(0, 0, 0)) {
            return Err(PesError::MissingIsotropic);
        }
        Ok(PotentialExpansion {
            terms,
            provenance: provenance.into(),
        })
    }

    pub fn terms(&self) -> &[ExpansionTerm] {
        &self.terms
    }

    pub fn triples(&self) -> Vec<Triple> {
        self.terms.iter().map(|t| t.triple()).collect()
    }

    /// Largest `l2` present; zero means the partner's orientation does not enter.
    pub fn max_l2(&self) -> u32 {
        self.terms.iter().map(|t| t.l2).max().unwrap_or(0)
    }

    pub fn radial_coefficients(&self, r: f64) -> Result<Vec<(Triple, f64)>, PesError> {
        self.terms.iter().map(|t| Ok((t.triple(), t.radial.value(r)?))).collect()
    }

    /// Coefficient values only, in term order.
    pub fn radial_values(&self, r: f64, out: &mut Vec<f64>) -> Result<(), PesError> {
        out.clear();
        for t in &self.terms {
            out.push(t.radial.value(r)?);
        }
        Ok(())
    }

    pub fn evaluate(&self, r: f64, theta1: f64, theta2: f64, phi: f64) -> Result<f64, PesError> {
        let mut v = 0.0;
        for t in &self.terms {
            v += t.radial.value(r)? * bispherical(t.l1, t.l2, t.l, theta1, theta2, phi);
        }
        Ok(v)
    }

    /// Header `R_bohr, v_l1_l2_l, ...` followed by one row per grid point.
    pub fn to_delimited(&self, grid: &[f64]) -> Result<String, PesError> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let mut header = vec!["R_bohr".to_string()];
        header.extend(self.terms.iter().map(|t| format!("v_{}_{}_{}", t.l1, t.l2, t.l)));
        w.write_record(&header).map_err(|e| PesError::InvalidTable(e.to_string()))?;
        for &r in grid {
            let mut row = vec![format!("{r:?}")];
            for t in &self.terms {
                row.push(format!("{:?}", t.radial.value(r)?));
            }
            w.write_record(&row).map_err(|e| PesError::InvalidTable(e.to_string()))?;
        }
        let bytes = w.into_inner().map_err(|e| PesError::InvalidTable(e.to_string()))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }

    /// Read tabulated radial coefficients written as by [`Self::to_delimited`].
    pub fn from_delimited(text: &str, tail_power: i32, provenance: &str) -> Result<Self, PesError> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(text.as_bytes());
        let header = rdr.headers().map_err(|e| PesError::InvalidTable(e.to_string()))?.clone();
        if header.get(0) != Some("R_bohr") {
            return Err(PesError::InvalidTable("first column must be R_bohr".into()));
        }
        let mut triples = Vec::new();
        for name in header.iter().skip(1) {
            let parts: Vec<&str> = name.split('_').collect();
            let parsed = match parts.as_slice() {
                ["v", a, b, c] => (a.parse::<u32>(), b.parse::<u32>(), c.parse::<u32>()),
                _ => return Err(PesError::InvalidTable(format!("bad column name {name}"))),
            };
            match parsed {
                (Ok(a), Ok(b), Ok(c)) => triples.push((a, b, c)),
                _ => return Err(PesError::InvalidTable(format!("bad column name {name}"))),
            }
        }
        let mut r = Vec::new();
        let mut cols = vec![Vec::new(); triples.len()];
        for rec in rdr.records() {
            let rec = rec.map_err(|e| PesError::InvalidTable(e.to_string()))?;
            let nums: Result<Vec<f64>, _> = rec.iter().map(str::parse::<f64>).collect();
            let nums = nums.map_err(|e| PesError::InvalidTable(e.to_string()))?;
            if nums.len() != triples.len() + 1 {
                return Err(PesError::InvalidTable("ragged row".into()));
            }
            r.push(nums[0]);
            for (c, v) in cols.iter_mut().zip(&nums[1..]) {
                c.push(*v);
            }
        }
        let terms = triples
            .into_iter()
            .zip(cols)
            .map(|((l1, l2, l), v)| {
                Ok(ExpansionTerm {
                    l1,
                    l2,
                    l,
                    radial: RadialFunction::Tabulated(TabulatedRadial::new(r.clone(), v, tail_power)?),
                })
            })
            .collect::<Result<Vec<_>, PesError>>()?;
        PotentialExpansion::new(terms, provenance)
    }
}

/// Isotropic exp-6 model with a well of 88.5 cm⁻¹.
pub fn iso88() -> PotentialExpansion {
    PotentialExpansion::new(
        vec![ExpansionTerm {
            l1: 0,
            l2: 0,
            l: 0,
            radial: RadialFunction::from_well(ISO88_DEPTH, ISO88_RMIN, ISO88_ALPHA),
        }],
        "model:iso88",
    )
    .expect("iso88 is a valid expansion")
}

/// Relative strengths of the anisotropic terms of the demonstration model.
/// Each anisotropic radial function is the isotropic one scaled by its strength.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AnisoDemo {
    pub strengths: Vec<(Triple, f64)>,
}

impl Default for AnisoDemo {
    fn default() -> Self {
        AnisoDemo {
            strengths: vec![((1, 0, 1), 0.1), ((2, 0, 2), 0.4), ((2, 2, 4), 0.05)],
        }
    }
}

impl AnisoDemo {
    pub fn even_only(s202: f64) -> Self {
        AnisoDemo {
            strengths: vec![((2, 0, 2), s202)],
        }
    }

    pub fn with(mut self, triple: Triple, strength: f64) -> Self {
        self.strengths.retain(|(t, _)| *t != triple);
        self.strengths.push((triple, strength));
        self
    }

    pub fn build(&self) -> Result<PotentialExpansion, PesError> {
        let iso = RadialFunction::from_well(ISO88_DEPTH, ISO88_RMIN, ISO88_ALPHA);
        let mut terms = vec![ExpansionTerm {
            l1: 0,
            l2: 0,
            l: 0,
            radial: iso.clone(),
        }];
        for &((l1, l2, l), s) in &self.strengths {
            let allowed = matches!((l1, l2, l), (1, 0, 1) | (2, 0, 2)) || (l1 == 2 && l2 == 2 && valid_triple((2, 2, l)));
            if !allowed {
                return Err(PesError::UnsupportedModelTerm(l1, l2, l));
            }
            if s == 0.0 {
                continue;
            }
            terms.push(ExpansionTerm {
                l1,
                l2,
                l,
                radial: iso.scaled(s),
            });
        }
        PotentialExpansion::new(terms, "model:aniso-demo")
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProjectionOptions {
    pub n_theta1: usize,
    pub n_theta2: usize,
    pub n_phi: usize,
    /// Maximal `(l1, l2)` content of the model, when known.
    pub model_band_limit: Option<(u32, u32)>,
    /// Terms whose largest |coefficient| over the knots is at or below this
    /// value (cm⁻¹) are dropped; the isotropic term is always kept.
    pub drop_below: f64,
}

impl ProjectionOptions {
    /// Orders that integrate products of the model with every retained
    /// function exactly, given the model's band limit.
    pub fn exact_for(l1max: u32, l2max: u32, model: (u32, u32)) -> Self {
        ProjectionOptions {
            n_theta1: ((l1max + model.0) / 2 + 1) as usize,
            n_theta2: ((l2max + model.1) / 2 + 1) as usize,
            n_phi: (l1max.min(l2max) + model.0.min(model.1) + 1) as usize,
            model_band_limit: Some(model),
            drop_below: 0.0,
        }
    }
}

/// Project a closed-form potential onto all valid terms with `l1 <= l1max`,
/// `l2 <= l2max`, on the radial knots `r_knots`. Returns the tabulated
/// expansion and any accuracy warnings.
pub fn project<F>(
    model: F,
    l1max: u32,
    l2max: u32,
    r_knots: &[f64],
    options: &ProjectionOptions,
    tail_power: i32,
) -> Result<(PotentialExpansion, Vec<String>), PesError>
where
    F: Fn(f64, f64, f64, f64) -> f64,
{
    let mut warnings = Vec::new();
    let (n1, n2, np) = (options.n_theta1, options.n_theta2, options.n_phi);
    let (need1, need2, needp) = match options.model_band_limit {
        Some((m1, m2)) => ((l1max + m1) / 2 + 1, (l2max + m2) / 2 + 1, l1max.min(l2max) + m1.min(m2) + 1),
        None => (l1max + 1, l2max + 1, 2 * l1max.min(l2max) + 1),
    };
    if n1 < need1 as usize || n2 < need2 as usize || np < needp as usize {
        let msg = format!(
            "projection quadrature ({n1}, {n2}, {np}) is below the band limit ({need1}, {need2}, {needp}); coefficients are approximate"
        );
        log::warn!("{msg}");
        warnings.push(msg);
    }

    let mut triples = Vec::new();
    for l1 in 0..=l1max {
        for l2 in 0..=l2max {
            for l in l1.abs_diff(l2)..=(l1 + l2) {
                if valid_triple((l1, l2, l)) {
                    triples.push((l1, l2, l));
                }
            }
        }
    }

    let (x1, w1) = gauss_legendre(n1);
    let (x2, w2) = gauss_legendre(n2);
    let dphi = 2.0 * std::f64::consts::PI / np as f64;
    let mut points = Vec::with_capacity(n1 * n2 * np);
    for (c1, a1) in x1.iter().zip(&w1) {
        for (c2, a2) in x2.iter().zip(&w2) {
            for k in 0..np {
                points.push((c1.acos(), c2.acos(), k as f64 * dphi, a1 * a2 * dphi));
            }
        }
    }
    let basis: Vec<Vec<f64>> = triples
        .iter()
        .map(|&(l1, l2, l)| points.iter().map(|&(t1, t2, p, _)| bispherical(l1, l2, l, t1, t2, p)).collect())
        .collect();

    let mut columns = vec![Vec::with_capacity(r_knots.len()); triples.len()];
    for &r in r_knots {
        let v: Vec<f64> = points.iter().map(|&(t1, t2, p, w)| w * model(r, t1, t2, p)).collect();
        for (k, &(_, _, l)) in triples.iter().enumerate() {
            let s: f64 = v.iter().zip(&basis[k]).map(|(a, b)| a * b).sum();
            columns[k].push(s * (2 * l + 1) as f64 / (8.0 * std::f64::consts::PI));
        }
    }

    let mut terms = Vec::new();
    for (triple, col) in triples.into_iter().zip(columns) {
        let peak = col.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if triple != (0, 0, 0) && peak <= options.drop_below {
            continue;
        }
        terms.push(ExpansionTerm {
            l1: triple.0,
            l2: triple.1,
            l: triple.2,
            radial: RadialFunction::Tabulated(TabulatedRadial::new(r_knots.to_vec(), col, tail_power)?),
        });
    }
    Ok((PotentialExpansion::new(terms, "projected")?, warnings))
}
