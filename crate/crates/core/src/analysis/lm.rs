//! Levenberg-Marquardt least squares with Nielsen's damping update.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

/// A least-squares problem: residuals `r(p)` and their Jacobian.
pub trait LeastSquares {
    fn residuals(&self, p: &DVector<f64>) -> DVector<f64>;

    /// Analytic Jacobian if available; central differences otherwise.
    fn jacobian(&self, p: &DVector<f64>) -> DMatrix<f64> {
        finite_difference_jacobian(|q| self.residuals(q), p)
    }
}

pub fn finite_difference_jacobian<F: Fn(&DVector<f64>) -> DVector<f64>>(f: F, p: &DVector<f64>) -> DMatrix<f64> {
    let mut cols = Vec::with_capacity(p.len());
    for i in 0..p.len() {
        let h = 1e-6 * p[i].abs().max(1e-3);
        let mut a = p.clone();
        let mut b = p.clone();
        a[i] += h;
        b[i] -= h;
        cols.push((f(&a) - f(&b)) / (2.0 * h));
    }
    DMatrix::from_columns(&cols)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LmOptions {
    pub max_iterations: usize,
    /// Relative tolerance on parameter steps and cost reduction.
    pub tolerance: f64,
}

impl Default for LmOptions {
    fn default() -> Self {
        LmOptions {
            max_iterations: 200,
            tolerance: 1e-10,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub names: Vec<String>,
    pub parameters: Vec<f64>,
    /// `s² (JᵀJ)⁻¹` with `s² = ‖r‖² / (m - n)`.
    pub covariance: DMatrix<f64>,
    /// Heteroscedasticity-consistent sandwich estimate
    /// `(JᵀJ)⁻¹ Jᵀ diag(r²/(1-h)) J (JᵀJ)⁻¹` with leverages `h`.
    pub robust_covariance: DMatrix<f64>,
    /// Leverage `h_i = J_i (JᵀJ)⁻¹ J_iᵀ` of every residual.
    #[serde(skip)]
    pub leverage: Vec<f64>,
    pub residual_norm: f64,
    pub iterations: usize,
    pub converged: bool,
}

impl FitResult {
    pub fn get(&self, name: &str) -> Option<f64> {
        self.names.iter().position(|n| n == name).map(|i| self.parameters[i])
    }

    pub fn std_error(&self, name: &str) -> Option<f64> {
        self.names
            .iter()
            .position(|n| n == name)
            .map(|i| self.covariance[(i, i)].max(0.0).sqrt())
    }

    pub fn robust_std_error(&self, name: &str) -> Option<f64> {
        self.names
            .iter()
            .position(|n| n == name)
            .map(|i| self.robust_covariance[(i, i)].max(0.0).sqrt())
    }
}

/// Minimize `½‖r(p)‖²` from `p0`.
pub fn levenberg_marquardt<P: LeastSquares + ?Sized>(
    problem: &P,
    p0: DVector<f64>,
    names: Vec<String>,
    options: &LmOptions,
) -> FitResult {
    let n = p0.len();
    let mut p = p0;
    let mut r = problem.residuals(&p);
    let m = r.len();
    let mut cost = 0.5 * r.norm_squared();
    let mut jac = problem.jacobian(&p);
    let mut jtj = jac.tr_mul(&jac);
    let mut grad = jac.tr_mul(&r);
    let mut lambda = 1e-3 * (0..n).map(|i| jtj[(i, i)]).fold(0.0f64, f64::max).max(f64::MIN_POSITIVE);
    let mut nu = 2.0;
    let mut converged = false;
    let mut iterations = 0;

    while iterations < options.max_iterations {
        iterations += 1;
        if grad.amax() <= 1e-15 * (1.0 + cost) {
            converged = true;
            break;
        }
        let mut a = jtj.clone();
        for i in 0..n {
            a[(i, i)] += lambda * jtj[(i, i)].max(1e-12 * (1.0 + jtj[(i, i)]));
        }
        let step = match solve_spd(&a, &(-&grad)) {
            Some(s) => s,
            None => {
                lambda *= nu;
                nu *= 2.0;
                continue;
            }
        };
        let trial = &p + &step;
        let r_trial = problem.residuals(&trial);
        let cost_trial = 0.5 * r_trial.norm_squared();
        // Predicted reduction of the linear model.
        let predicted = -(step.dot(&grad) + 0.5 * step.dot(&(&jtj * &step)));
        let rho = if predicted > 0.0 { (cost - cost_trial) / predicted } else { -1.0 };
        if rho > 0.0 && cost_trial.is_finite() {
            let small_step = step.norm() <= options.tolerance * (p.norm() + options.tolerance);
            let small_gain = (cost - cost_trial) <= options.tolerance * cost;
            p = trial;
            r = r_trial;
            cost = cost_trial;
            jac = problem.jacobian(&p);
            jtj = jac.tr_mul(&jac);
            grad = jac.tr_mul(&r);
            lambda *= (1.0f64 / 3.0).max(1.0 - (2.0 * rho - 1.0).powi(3));
            nu = 2.0;
            if small_step || small_gain {
                converged = true;
                break;
            }
        } else {
            lambda *= nu;
            nu *= 2.0;
            if !lambda.is_finite() || lambda > 1e300 {
                break;
            }
        }
    }
    let dof = m.saturating_sub(n).max(1) as f64;
    let s2 = 2.0 * cost / dof;
    let bread = pseudo_inverse(&jtj);
    let projected = &jac * &bread;
    let leverage: Vec<f64> = (0..m)
        .map(|i| projected.row(i).dot(&jac.row(i)).clamp(0.0, 1.0 - 1e-12))
        .collect();
    let weighted = DMatrix::from_fn(m, n, |i, j| jac[(i, j)] * r[i] / (1.0 - leverage[i]).sqrt());
    let meat = weighted.tr_mul(&weighted);
    let robust_covariance = &bread * meat * &bread;
    FitResult {
        names,
        parameters: p.iter().copied().collect(),
        covariance: bread * s2,
        robust_covariance,
        leverage,
        residual_norm: (2.0 * cost).sqrt(),
        iterations,
        converged,
    }
}

fn solve_spd(a: &DMatrix<f64>, b: &DVector<f64>) -> Option<DVector<f64>> {
    if let Some(ch) = a.clone().cholesky() {
        return Some(ch.solve(b));
    }
    a.clone().lu().solve(b).filter(|x| x.iter().all(|v| v.is_finite()))
}

fn pseudo_inverse(a: &DMatrix<f64>) -> DMatrix<f64> {
    // Scale to unit diagonal first so parameters of very different size are
    // treated alike.
    let n = a.nrows();
    let d = DVector::from_fn(n, |i, _| {
        let v = a[(i, i)];
        if v > 0.0 {
            1.0 / v.sqrt()
        } else {
            1.0
        }
    });
    let scaled = DMatrix::from_fn(n, n, |i, j| a[(i, j)] * d[i] * d[j]);
    let inv = scaled
        .clone()
        .pseudo_inverse(1e-13)
        .unwrap_or_else(|_| DMatrix::from_element(n, n, f64::NAN));
    DMatrix::from_fn(n, n, |i, j| inv[(i, j)] * d[i] * d[j])
}

#[cfg(test)]
mod tests {
    use super::*;

    struct Rosenbrock;
    impl LeastSquares for Rosenbrock {
        fn residuals(&self, p: &DVector<f64>) -> DVector<f64> {
            DVector::from_vec(vec![10.0 * (p[1] - p[0] * p[0]), 1.0 - p[0]])
        }
    }

    #[test]
    fn rosenbrock_minimum() {
        let fit = levenberg_marquardt(
            &Rosenbrock,
            DVector::from_vec(vec![-1.2, 1.0]),
            vec!["x".into(), "y".into()],
            &LmOptions::default(),
        );
        assert!(fit.converged);
        assert!((fit.parameters[0] - 1.0).abs() < 1e-8 && (fit.parameters[1] - 1.0).abs() < 1e-8);
    }
}
