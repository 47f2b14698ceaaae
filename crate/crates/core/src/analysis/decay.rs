//! Single-exponential fits of decay traces and the total rate they imply.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::lm::{levenberg_marquardt, FitResult, LeastSquares, LmOptions};
use super::AnalysisError;

/// Fitted `a e^{-k t} + c` in physical units (k in s⁻¹).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExponentialFit {
    pub amplitude: f64,
    pub k_exp: f64,
    pub baseline: f64,
    /// Fit in physical units; parameters `amplitude`, `k_exp`, `baseline`.
    pub fit: FitResult,
    pub warnings: Vec<String>,
}

impl ExponentialFit {
    /// One standard error of `k_exp`.
    pub fn k_exp_error(&self) -> f64 {
        self.fit.std_error("k_exp").unwrap_or(f64::NAN)
    }
}

/// Decay model in scaled variables `τ = t / t_s`, `y / y_s`.
struct Scaled<'a> {
    tau: &'a [f64],
    y: &'a [f64],
}

impl LeastSquares for Scaled<'_> {
    fn residuals(&self, p: &DVector<f64>) -> DVector<f64> {
        DVector::from_iterator(
            self.tau.len(),
            self.tau.iter().zip(self.y).map(|(&t, &y)| p[0] * (-p[1] * t).exp() + p[2] - y),
        )
    }

    fn jacobian(&self, p: &DVector<f64>) -> DMatrix<f64> {
        DMatrix::from_fn(self.tau.len(), 3, |i, j| {
            let e = (-p[1] * self.tau[i]).exp();
            match j {
                0 => e,
                1 => -p[0] * self.tau[i] * e,
                _ => 1.0,
            }
        })
    }
}

/// Fit `a e^{-k t} + c` by Levenberg-Marquardt with an analytic Jacobian.
pub fn fit_exponential(times: &[f64], signal: &[f64], options: &LmOptions) -> Result<ExponentialFit, AnalysisError> {
    let m = times.len();
    if m != signal.len() {
        return Err(AnalysisError::InvalidInput("times and signal differ in length".into()));
    }
    if m < 8 {
        return Err(AnalysisError::InsufficientData(format!("{m} samples; at least 8 are needed")));
    }
    if times.windows(2).any(|w| !(w[1] > w[0])) || signal.iter().any(|v| !v.is_finite()) {
        return Err(AnalysisError::InvalidInput("times must increase and samples must be finite".into()));
    }
    let t0 = times[0];
    let ts = times[m - 1] - t0;
    let ys = signal.iter().fold(0.0f64, |a, v| a.max(v.abs())).max(f64::MIN_POSITIVE);
    let (lo, hi) = signal.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
    if hi - lo <= 1e-9 * ys {
        return Err(AnalysisError::Degenerate("flat trace: decay amplitude is zero".into()));
    }
    let tau: Vec<f64> = times.iter().map(|t| (t - t0) / ts).collect();
    let y: Vec<f64> = signal.iter().map(|v| v / ys).collect();

    // Start: baseline from the last tenth, rate from where the excess
    // first drops below 1/e.
    let tail = (m / 10).max(1);
    let c0 = y[m - tail..].iter().sum::<f64>() / tail as f64;
    let a0 = y[0] - c0;
    let k0 = match y.iter().position(|&v| (v - c0).abs() < a0.abs() / std::f64::consts::E) {
        Some(i) if i > 0 => 1.0 / tau[i],
        _ => 1.0,
    };
    let problem = Scaled { tau: &tau, y: &y };
    let names = vec!["amplitude".to_string(), "k_exp".to_string(), "baseline".to_string()];
    let scaled = levenberg_marquardt(&problem, DVector::from_vec(vec![a0, k0, c0]), names.clone(), options);
    if !scaled.converged {
        return Err(AnalysisError::NonConvergence(format!(
            "exponential fit did not converge in {} iterations",
            scaled.iterations
        )));
    }

    // Physical units; the amplitude is the excess at the first sample time.
    let scale = DVector::from_vec(vec![ys, 1.0 / ts, ys]);
    let p: Vec<f64> = scaled.parameters.iter().zip(scale.iter()).map(|(v, s)| v * s).collect();
    let rescale = |c: &DMatrix<f64>| DMatrix::from_fn(3, 3, |i, j| c[(i, j)] * scale[i] * scale[j]);
    let mut warnings = Vec::new();
    let (amplitude, k_exp, baseline) = (p[0], p[1], p[2]);
    if amplitude.abs() < 1e-6 * ys {
        warnings.push("degenerate trace: fitted amplitude is essentially zero".to_string());
    }
    if k_exp * ts < 2.0 {
        warnings.push(format!(
            "trace spans {:.2} decay times; at least 2 are recommended",
            k_exp * ts
        ));
    }
    if !(k_exp > 0.0) {
        return Err(AnalysisError::NonConvergence(format!("fitted decay rate is not positive ({k_exp})")));
    }
    for w in &warnings {
        log::warn!("{w}");
    }
    Ok(ExponentialFit {
        amplitude,
        k_exp,
        baseline,
        fit: FitResult {
            names,
            parameters: p,
            covariance: rescale(&scaled.covariance),
            robust_covariance: rescale(&scaled.robust_covariance),
            leverage: scaled.leverage.clone(),
            residual_norm: scaled.residual_norm * ys,
            iterations: scaled.iterations,
            converged: true,
        },
        warnings,
    })
}

/// `k_tot = k_exp (1 - f_eq) / [H2]` in cm³ s⁻¹.
pub fn total_rate_from_decay(k_exp: f64, f_eq: f64, density: f64) -> Result<f64, AnalysisError> {
    if !(f_eq < 1.0) || f_eq < 0.0 {
        return Err(AnalysisError::Domain(format!("equilibrium fraction {f_eq} must lie in [0, 1)")));
    }
    if !(k_exp > 0.0) || !(density > 0.0) {
        return Err(AnalysisError::Domain("decay rate and density must be positive".into()));
    }
    Ok(k_exp * (1.0 - f_eq) / density)
}
