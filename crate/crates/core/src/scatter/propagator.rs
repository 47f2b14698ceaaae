//! Fixed-step modified log-derivative propagation of `ψ'' = W(R) ψ`.
//!
//! Each sector of width `2h` uses a diagonal reference
//! `W_ref,i(R) = l_i(l_i+1)/R² + p_i`, with `p_i` chosen so that the
//! reference equals `W_ii` at the sector midpoint. The reference is
//! propagated exactly through Riccati-Bessel (or modified) solutions, so the
//! centrifugal term never contributes to the discretization error. The
//! residual `U = W - W_ref` enters through Simpson-weighted kicks at the
//! sector ends and an improved midpoint kick `(8/h)[(I - h²U/6)^{-1} - I]`.

use faer::linalg::solvers::DenseSolveCore;
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::bessel::{reference_pair, Scaled};
use super::ScatterError;

/// Source of the matrix `W(R)` in `ψ'' = W ψ`, in bohr⁻².
pub trait CoupledEquations {
    fn dim(&self) -> usize;
    fn fill_w(&self, r: f64, w: &mut DMatrix<f64>) -> Result<(), ScatterError>;
    /// Orbital momentum of each channel, whose centrifugal term `W` is
    /// assumed to contain. Zero means the reference is constant per sector.
    fn orbital_momenta(&self) -> Vec<u32> {
        vec![0; self.dim()]
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PropagationGrid {
    /// bohr
    pub r_min: f64,
    /// bohr
    pub r_max: f64,
    /// Largest sector width, bohr.
    pub max_step: f64,
}

impl Default for PropagationGrid {
    fn default() -> Self {
        PropagationGrid {
            r_min: 3.0,
            r_max: 200.0,
            max_step: 0.25,
        }
    }
}

impl PropagationGrid {
    pub fn validate(&self) -> Result<(), ScatterError> {
        if !(self.r_min >= 0.0 && self.r_min < self.r_max && self.max_step > 0.0) {
            return Err(ScatterError::InvalidGrid(*self));
        }
        Ok(())
    }

    pub fn sectors(&self) -> usize {
        ((self.r_max - self.r_min) / self.max_step).ceil().max(1.0) as usize
    }
}

/// Largest allowed phase `λh` across a half sector in open channels.
const MAX_HALF_PHASE: f64 = 1.4;
/// Largest allowed `h² |U_ii|` at a sector end before the sector is split.
const MAX_REFERENCE_VARIATION: f64 = 0.02;
/// Refinement depth cap.
const MAX_DEPTH: u32 = 48;
/// Bound on `n max|X|` below which the midpoint kick uses a two-term series.
const MIDPOINT_SERIES_LIMIT: f64 = 1e-3;

/// Propagator of one channel's reference across `[a, b]`:
/// `ψ'(a) = A ψ(a) + B ψ(b)`, `ψ'(b) = -B ψ(a) + D ψ(b)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub(crate) struct SectorCoefficients {
    pub a: f64,
    pub b: f64,
    pub d: f64,
}

#[cfg(test)]
pub(crate) fn sector_coefficients(l: u32, p: f64, a: f64, b: f64) -> SectorCoefficients {
    let at_b = reference_pair(l, p, b);
    if a <= 0.0 {
        return from_origin(at_b.0);
    }
    coefficients_between(reference_pair(l, p, a), at_b)
}

/// Only the regular solution survives at the origin.
fn from_origin(ub: Scaled) -> SectorCoefficients {
    SectorCoefficients {
        a: 0.0,
        b: 0.0,
        d: ub.dm / ub.m,
    }
}

fn coefficients_between((ua, va): (Scaled, Scaled), (ub, vb): (Scaled, Scaled)) -> SectorCoefficients {
    let r = (ua.s + vb.s - ub.s - va.s).exp();
    let den = r * ua.m * vb.m - ub.m * va.m;
    SectorCoefficients {
        a: (r * ua.dm * vb.m - ub.m * va.dm) / den,
        b: (ua.s - ub.s).exp() * (ua.m * va.dm - ua.dm * va.m) / den,
        d: (r * ua.m * vb.dm - va.m * ub.dm) / den,
    }
}

/// Both half-sector propagators of one channel, sharing the midpoint.
fn half_sectors(l: u32, p: f64, a: f64, c: f64, b: f64) -> (SectorCoefficients, SectorCoefficients) {
    let at_c = reference_pair(l, p, c);
    let first = if a <= 0.0 {
        from_origin(at_c.0)
    } else {
        coefficients_between(reference_pair(l, p, a), at_c)
    };
    (first, coefficients_between(at_c, reference_pair(l, p, b)))
}

struct Workspace {
    w: DMatrix<f64>,
    wa: DMatrix<f64>,
    wb: DMatrix<f64>,
    u: DMatrix<f64>,
    scratch: DMatrix<f64>,
    ls: Vec<u32>,
    /// False until the first half sector has imposed `ψ(r_min) = 0`.
    started: bool,
}

/// Propagate the log-derivative matrix from `r_min` (where ψ vanishes) to
/// `r_max` and return `Y(r_max)`.
pub fn propagate_logderiv<E: CoupledEquations + ?Sized>(
    eqs: &E,
    grid: &PropagationGrid,
) -> Result<DMatrix<f64>, ScatterError> {
    grid.validate()?;
    let n = eqs.dim();
    let mut y = DMatrix::<f64>::zeros(n, n);
    let mut ws = Workspace {
        w: DMatrix::zeros(n, n),
        wa: DMatrix::zeros(n, n),
        wb: DMatrix::zeros(n, n),
        u: DMatrix::zeros(n, n),
        scratch: DMatrix::zeros(n, n),
        ls: eqs.orbital_momenta(),
        started: false,
    };
    if ws.ls.len() != n {
        return Err(ScatterError::InvalidInput("orbital momenta do not match the dimension".into()));
    }
    let sectors = grid.sectors();
    let width = (grid.r_max - grid.r_min) / sectors as f64;
    for s in 0..sectors {
        let a = grid.r_min + s as f64 * width;
        let b = if s + 1 == sectors { grid.r_max } else { a + width };
        propagate_sector(eqs, a, b, &mut y, &mut ws, 0)?;
    }
    Ok(y)
}

fn centrifugal(l: u32, r: f64) -> f64 {
    (l * (l + 1)) as f64 / (r * r)
}

fn propagate_sector<E: CoupledEquations + ?Sized>(
    eqs: &E,
    a: f64,
    b: f64,
    y: &mut DMatrix<f64>,
    ws: &mut Workspace,
    depth: u32,
) -> Result<(), ScatterError> {
    let n = y.nrows();
    let h = 0.5 * (b - a);
    let c = a + h;
    // Endpoints are sampled just inside the sector so that a potential
    // discontinuity placed on a sector boundary is seen from each side.
    let eps = 1e-9 * h;
    eqs.fill_w(c, &mut ws.w)?;
    eqs.fill_w(a + eps, &mut ws.wa)?;
    eqs.fill_w(b - eps, &mut ws.wb)?;
    let p: Vec<f64> = (0..n).map(|i| ws.w[(i, i)] - centrifugal(ws.ls[i], c)).collect();
    let wref = |i: usize, r: f64| centrifugal(ws.ls[i], r) + p[i];
    let ra = DVector::from_fn(n, |i, _| wref(i, a + eps));
    let rb = DVector::from_fn(n, |i, _| wref(i, b - eps));

    let most_open = (0..n).map(|i| ws.w[(i, i)]).fold(0.0f64, f64::min);
    let phase = (-most_open).sqrt() * h / MAX_HALF_PHASE;
    let variation = (0..n)
        .map(|i| (ws.wa[(i, i)] - ra[i]).abs().max((ws.wb[(i, i)] - rb[i]).abs()))
        .fold(0.0f64, f64::max)
        * h
        * h
        / MAX_REFERENCE_VARIATION;
    if depth < MAX_DEPTH && (phase > 1.0 || variation > 1.0) {
        // Local refinement keeps the open-channel phase per half sector small
        // and the reference close to W across the sector.
        let parts = (phase.ceil() as usize + 1).max(if variation > 1.0 { 2 } else { 1 });
        let dw = (b - a) / parts as f64;
        for k in 0..parts {
            let lo = a + k as f64 * dw;
            let hi = if k + 1 == parts { b } else { lo + dw };
            propagate_sector(eqs, lo, hi, y, ws, depth + 1)?;
        }
        return Ok(());
    }
    let (first, second): (Vec<SectorCoefficients>, Vec<SectorCoefficients>) =
        (0..n).map(|i| half_sectors(ws.ls[i], p[i], a, c, b)).unzip();

    let has_offdiag = (0..n).any(|j| (0..n).any(|i| i != j && ws.w[(i, j)] != 0.0));

    if ws.started {
        kick(&mut ws.wa, &ra, h / 3.0, y);
        step(y, &first, &mut ws.scratch)?;
    } else {
        // ψ(a) = 0: the incoming log-derivative is infinite.
        y.fill(0.0);
        for i in 0..n {
            y[(i, i)] = first[i].d;
        }
        ws.started = true;
    }
    if has_offdiag {
        // Midpoint kick from the residual, whose diagonal vanishes at c.
        ws.u.copy_from(&ws.w);
        for i in 0..n {
            ws.u[(i, i)] = 0.0;
        }
        let x = &ws.u * (h * h / 6.0);
        let size = x.iter().fold(0.0f64, |m, v| m.max(v.abs())) * n as f64;
        let m = if size < MIDPOINT_SERIES_LIMIT {
            // (I - X)^{-1} - I = X + X² + O(X³); the remainder is far below
            // the local error of the scheme.
            &x * &x + &x
        } else {
            let mut m = DMatrix::<f64>::identity(n, n) - &x;
            if !invert(&mut m) {
                return Err(ScatterError::NonFinite { r: c });
            }
            for i in 0..n {
                m[(i, i)] -= 1.0;
            }
            m
        };
        y.zip_apply(&m, |a, b| *a += 8.0 / h * b);
    }
    step(y, &second, &mut ws.scratch)?;
    kick(&mut ws.wb, &rb, h / 3.0, y);
    symmetrize(y);
    if y.iter().any(|v| !v.is_finite()) {
        return Err(ScatterError::NonFinite { r: b });
    }
    Ok(())
}

/// `Y += weight (W - W_ref)`, consuming `w`.
fn kick(w: &mut DMatrix<f64>, wref: &DVector<f64>, weight: f64, y: &mut DMatrix<f64>) {
    for i in 0..wref.len() {
        w[(i, i)] -= wref[i];
    }
    y.zip_apply(w, |a, b| *a += weight * b);
}

/// `Y <- D - B (Y - A)^{-1} B` with diagonal `A`, `B`, `D`.
fn step(y: &mut DMatrix<f64>, sc: &[SectorCoefficients], z: &mut DMatrix<f64>) -> Result<(), ScatterError> {
    let n = y.nrows();
    z.copy_from(y);
    for i in 0..n {
        z[(i, i)] -= sc[i].a;
    }
    if !invert(z) {
        return Err(ScatterError::NonFinite { r: f64::NAN });
    }
    for j in 0..n {
        for i in 0..n {
            y[(i, j)] = -sc[i].b * z[(i, j)] * sc[j].b;
        }
        y[(j, j)] += sc[j].d;
    }
    Ok(())
}

/// In-place inverse of a symmetric matrix by Bunch-Kaufman LBLᵀ; false when
/// the result is not finite.
fn invert(m: &mut DMatrix<f64>) -> bool {
    let n = m.nrows();
    let inv = faer::MatRef::from_column_major_slice(m.as_slice(), n, n)
        .lblt(faer::Side::Lower)
        .inverse();
    for j in 0..n {
        for i in 0..n {
            m[(i, j)] = inv[(i, j)];
        }
    }
    m.iter().all(|v| v.is_finite())
}

fn symmetrize(y: &mut DMatrix<f64>) {
    let n = y.nrows();
    for i in 0..n {
        for j in i + 1..n {
            let m = 0.5 * (y[(i, j)] + y[(j, i)]);
            y[(i, j)] = m;
            y[(j, i)] = m;
        }
    }
}
