//! Multipeak Voigt fits of probe spectra.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::lm::{levenberg_marquardt, FitResult, LeastSquares, LmOptions};
use super::AnalysisError;
use crate::kinetics::{voigt_profile, voigt_with_gradient, VoigtShape};

/// A line to fit with its starting center, cm⁻¹.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LineGuess {
    pub j: u32,
    pub center: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct VoigtFitOptions {
    /// One Voigt shape for all lines instead of one per line.
    pub shared_shape: bool,
    /// Fit a linear baseline.
    pub baseline: bool,
    pub initial_shape: VoigtShape,
    pub lm: LmOptions,
}

impl VoigtFitOptions {
    pub fn new(initial_shape: VoigtShape) -> Self {
        VoigtFitOptions {
            shared_shape: true,
            baseline: true,
            initial_shape,
            lm: LmOptions::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LineArea {
    pub j: u32,
    pub center: f64,
    /// Integrated intensity (intensity × cm⁻¹), never negative.
    pub area: f64,
    /// One standard error of the area from the sandwich covariance, which
    /// stays valid when the noise varies across the spectrum.
    pub area_error: f64,
    pub shape: VoigtShape,
    /// Levels sharing this area because their lines could not be resolved.
    pub joint_with: Vec<u32>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MultiPeakFit {
    pub lines: Vec<LineArea>,
    pub fit: FitResult,
    pub fitted: Vec<f64>,
    pub warnings: Vec<String>,
    /// Fitted components in the scaled parameterization, used to restart.
    #[serde(skip)]
    start: Option<Start>,
}

impl MultiPeakFit {
    pub fn area(&self, j: u32) -> Option<f64> {
        self.lines.iter().find(|l| l.j == j).map(|l| l.area)
    }

    pub fn area_error(&self, j: u32) -> Option<f64> {
        self.lines.iter().find(|l| l.j == j).map(|l| l.area_error)
    }
}

#[derive(Clone, Debug, PartialEq)]
struct Start {
    params: DVector<f64>,
}

/// Lines fitted as one component.
#[derive(Clone, Debug)]
struct Group {
    members: Vec<u32>,
    center: f64,
}

/// Parameter layout: areas, center offsets, shape widths, baseline.
struct Layout {
    n: usize,
    shared: bool,
    baseline: bool,
}

impl Layout {
    fn n_shape(&self) -> usize {
        if self.shared {
            2
        } else {
            2 * self.n
        }
    }
    fn len(&self) -> usize {
        2 * self.n + self.n_shape() + if self.baseline { 2 } else { 0 }
    }
    fn area(&self, k: usize) -> usize {
        k
    }
    fn center(&self, k: usize) -> usize {
        self.n + k
    }
    fn sigma(&self, k: usize) -> usize {
        2 * self.n + if self.shared { 0 } else { 2 * k }
    }
    fn gamma(&self, k: usize) -> usize {
        self.sigma(k) + 1
    }
    fn base(&self) -> usize {
        2 * self.n + self.n_shape()
    }
}

struct Problem<'a> {
    x: &'a [f64],
    y: Vec<f64>,
    x0: f64,
    centers: Vec<f64>,
    layout: Layout,
    width_step: f64,
}

impl Problem<'_> {
    fn shape(&self, p: &DVector<f64>, k: usize) -> VoigtShape {
        VoigtShape {
            gaussian_sigma: p[self.layout.sigma(k)].abs(),
            lorentzian_gamma: p[self.layout.gamma(k)].abs(),
        }
    }

    fn profile(&self, center: f64, shape: &VoigtShape) -> DVector<f64> {
        DVector::from_iterator(self.x.len(), self.x.iter().map(|&x| voigt_profile(x - center, shape)))
    }

    fn model(&self, p: &DVector<f64>) -> DVector<f64> {
        let l = &self.layout;
        let mut out = DVector::zeros(self.x.len());
        for k in 0..l.n {
            out.axpy(p[l.area(k)], &self.profile(self.centers[k] + p[l.center(k)], &self.shape(p, k)), 1.0);
        }
        if l.baseline {
            let b = l.base();
            for (o, &x) in out.iter_mut().zip(self.x) {
                *o += p[b] + p[b + 1] * (x - self.x0);
            }
        }
        out
    }
}

impl LeastSquares for Problem<'_> {
    fn residuals(&self, p: &DVector<f64>) -> DVector<f64> {
        let mut r = self.model(p);
        for (v, y) in r.iter_mut().zip(&self.y) {
            *v -= y;
        }
        r
    }

    /// Analytic columns from the Faddeeva derivative; central differences
    /// when the Gaussian width is zero.
    fn jacobian(&self, p: &DVector<f64>) -> DMatrix<f64> {
        let l = &self.layout;
        let m = self.x.len();
        let mut jac = DMatrix::zeros(m, l.len());
        let h = self.width_step;
        for k in 0..l.n {
            let c = self.centers[k] + p[l.center(k)];
            let shape = self.shape(p, k);
            let a = p[l.area(k)];
            if shape.gaussian_sigma > 0.0 {
                let ss = if p[l.sigma(k)] < 0.0 { -a } else { a };
                let sg = if p[l.gamma(k)] < 0.0 { -a } else { a };
                for (i, &x) in self.x.iter().enumerate() {
                    let [v, dx, ds, dg] = voigt_with_gradient(x - c, &shape);
                    jac[(i, l.area(k))] = v;
                    jac[(i, l.center(k))] = -a * dx;
                    jac[(i, l.sigma(k))] += ss * ds;
                    jac[(i, l.gamma(k))] += sg * dg;
                }
                continue;
            }
            jac.set_column(l.area(k), &self.profile(c, &shape));
            let d = (self.profile(c + h, &shape) - self.profile(c - h, &shape)) * (p[l.area(k)] / (2.0 * h));
            jac.set_column(l.center(k), &d);
            for (idx, is_sigma) in [(l.sigma(k), true), (l.gamma(k), false)] {
                let sign = if p[idx] < 0.0 { -1.0 } else { 1.0 };
                let bump = |delta: f64| {
                    let mut s = shape;
                    if is_sigma {
                        s.gaussian_sigma = (s.gaussian_sigma + delta).max(0.0);
                    } else {
                        s.lorentzian_gamma = (s.lorentzian_gamma + delta).max(0.0);
                    }
                    s
                };
                let (up, down) = (bump(h), bump(-h));
                let span = (if is_sigma {
                    up.gaussian_sigma - down.gaussian_sigma
                } else {
                    up.lorentzian_gamma - down.lorentzian_gamma
                })
                .max(f64::MIN_POSITIVE);
                let valid = |s: &VoigtShape| s.gaussian_sigma > 0.0 || s.lorentzian_gamma > 0.0;
                if !valid(&up) || !valid(&down) {
                    continue;
                }
                let d = (self.profile(c, &up) - self.profile(c, &down)) * (sign * p[l.area(k)] / span);
                let mut col = jac.column_mut(idx);
                col += d;
            }
        }
        if l.baseline {
            let b = l.base();
            for (i, &x) in self.x.iter().enumerate() {
                jac[(i, b)] = 1.0;
                jac[(i, b + 1)] = x - self.x0;
            }
        }
        jac
    }
}

fn group_lines(lines: &[LineGuess], limit: f64) -> Vec<Group> {
    let mut sorted: Vec<LineGuess> = lines.to_vec();
    sorted.sort_by(|a, b| a.center.total_cmp(&b.center));
    let mut groups: Vec<Vec<LineGuess>> = Vec::new();
    for line in sorted {
        match groups.last_mut() {
            Some(g) if line.center - g.last().unwrap().center < limit => g.push(line),
            _ => groups.push(vec![line]),
        }
    }
    groups
        .into_iter()
        .map(|g| Group {
            center: g.iter().map(|l| l.center).sum::<f64>() / g.len() as f64,
            members: g.iter().map(|l| l.j).collect(),
        })
        .collect()
}

/// Fit a sum of Voigt lines plus an optional linear baseline.
///
/// Lines closer than half the initial FWHM are fitted as one component and
/// reported with their joint area and a warning.
pub fn fit_multipeak_voigt(
    axis: &[f64],
    intensity: &[f64],
    lines: &[LineGuess],
    options: &VoigtFitOptions,
) -> Result<MultiPeakFit, AnalysisError> {
    fit_inner(axis, intensity, lines, options, None)
}

/// Refit new data starting from a previous fit of the same line list.
pub fn refit_multipeak_voigt(
    axis: &[f64],
    intensity: &[f64],
    lines: &[LineGuess],
    options: &VoigtFitOptions,
    previous: &MultiPeakFit,
) -> Result<MultiPeakFit, AnalysisError> {
    fit_inner(axis, intensity, lines, options, previous.start.as_ref())
}

fn fit_inner(
    axis: &[f64],
    intensity: &[f64],
    lines: &[LineGuess],
    options: &VoigtFitOptions,
    start: Option<&Start>,
) -> Result<MultiPeakFit, AnalysisError> {
    if axis.len() != intensity.len() {
        return Err(AnalysisError::InvalidInput("axis and intensity differ in length".into()));
    }
    if lines.is_empty() {
        return Err(AnalysisError::InvalidInput("no lines to fit".into()));
    }
    options.initial_shape.validate().map_err(AnalysisError::InvalidInput)?;
    let mut warnings = Vec::new();
    let groups = group_lines(lines, 0.5 * options.initial_shape.fwhm());
    for g in groups.iter().filter(|g| g.members.len() > 1) {
        let w = format!("lines {:?} overlap within half a line width; fitted with a joint area", g.members);
        log::warn!("{w}");
        warnings.push(w);
    }
    let n = groups.len();
    let layout = Layout {
        n,
        shared: options.shared_shape,
        baseline: options.baseline,
    };
    let ys = intensity.iter().fold(0.0f64, |a, v| a.max(v.abs())).max(f64::MIN_POSITIVE);
    let x0 = axis.iter().sum::<f64>() / axis.len() as f64;
    let problem = Problem {
        x: axis,
        y: intensity.iter().map(|v| v / ys).collect(),
        x0,
        centers: groups.iter().map(|g| g.center).collect(),
        width_step: 1e-5 * options.initial_shape.fwhm(),
        layout,
    };
    if axis.len() < problem.layout.len() {
        return Err(AnalysisError::InsufficientData(format!(
            "{} samples for {} parameters",
            axis.len(),
            problem.layout.len()
        )));
    }
    let p0 = match start {
        Some(s) if s.params.len() == problem.layout.len() => s.params.clone(),
        _ => initial_parameters(&problem, options),
    };
    let l = &problem.layout;
    let mut names = Vec::with_capacity(l.len());
    names.extend(groups.iter().map(|g| format!("area_{}", g.members[0])));
    names.extend(groups.iter().map(|g| format!("center_{}", g.members[0])));
    if l.shared {
        names.extend(["sigma".to_string(), "gamma".to_string()]);
    } else {
        for g in &groups {
            names.push(format!("sigma_{}", g.members[0]));
            names.push(format!("gamma_{}", g.members[0]));
        }
    }
    if l.baseline {
        names.extend(["baseline_0".to_string(), "baseline_1".to_string()]);
    }
    let scaled = levenberg_marquardt(&problem, p0, names.clone(), &options.lm);
    if !scaled.converged {
        return Err(AnalysisError::NonConvergence(format!(
            "multipeak Voigt fit did not converge in {} iterations",
            scaled.iterations
        )));
    }
    let p = DVector::from_vec(scaled.parameters.clone());
    let fitted: Vec<f64> = problem.model(&p).iter().map(|v| v * ys).collect();

    // Back to physical units: areas and baseline scale with ys, centers are
    // absolute, widths are positive.
    let mut phys = scaled.parameters.clone();
    let mut unit = vec![1.0; l.len()];
    for k in 0..n {
        unit[l.area(k)] = ys;
        phys[l.center(k)] += problem.centers[k];
    }
    if l.baseline {
        unit[l.base()] = ys;
        unit[l.base() + 1] = ys;
    }
    for (v, u) in phys.iter_mut().zip(&unit) {
        *v *= u;
    }
    let rescale = |c: &DMatrix<f64>| DMatrix::from_fn(l.len(), l.len(), |i, j| c[(i, j)] * unit[i] * unit[j]);
    let cov = rescale(&scaled.covariance);
    let robust = rescale(&scaled.robust_covariance);

    let mut out_lines = Vec::new();
    for (k, g) in groups.iter().enumerate() {
        let shape = problem.shape(&p, k);
        let mut area = phys[l.area(k)];
        if area < 0.0 {
            let w = format!("area of line {:?} fitted negative ({area:.3e}); reported as 0", g.members);
            log::warn!("{w}");
            warnings.push(w);
            area = 0.0;
        }
        let err = robust[(l.area(k), l.area(k))].max(0.0).sqrt();
        for &j in &g.members {
            out_lines.push(LineArea {
                j,
                center: phys[l.center(k)],
                area,
                area_error: err,
                shape,
                joint_with: g.members.iter().copied().filter(|&o| o != j).collect(),
            });
        }
    }
    out_lines.sort_by_key(|la| la.j);
    Ok(MultiPeakFit {
        lines: out_lines,
        fit: FitResult {
            names,
            parameters: phys,
            covariance: cov,
            robust_covariance: robust,
            leverage: scaled.leverage.clone(),
            residual_norm: scaled.residual_norm * ys,
            iterations: scaled.iterations,
            converged: true,
        },
        fitted,
        warnings,
        start: Some(Start { params: p }),
    })
}

fn initial_parameters(problem: &Problem<'_>, options: &VoigtFitOptions) -> DVector<f64> {
    let l = &problem.layout;
    let mut p = DVector::zeros(l.len());
    let mut sorted = problem.y.clone();
    sorted.sort_by(|a, b| a.total_cmp(b));
    let floor = sorted[sorted.len() / 10];
    let peak = voigt_profile(0.0, &options.initial_shape);
    for k in 0..l.n {
        let idx = problem
            .x
            .iter()
            .enumerate()
            .min_by(|a, b| (a.1 - problem.centers[k]).abs().total_cmp(&(b.1 - problem.centers[k]).abs()))
            .map(|(i, _)| i)
            .unwrap_or(0);
        p[l.area(k)] = ((problem.y[idx] - floor) / peak).max(0.0);
        if l.shared && k > 0 {
            continue;
        }
        p[l.sigma(k)] = options.initial_shape.gaussian_sigma;
        p[l.gamma(k)] = options.initial_shape.lorentzian_gamma;
    }
    if l.baseline {
        p[l.base()] = floor;
    }
    p
}
