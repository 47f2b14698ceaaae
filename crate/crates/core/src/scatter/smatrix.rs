use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::bessel::{decaying_logderiv, riccati};
use super::{ChannelBasis, ScatterError};
use crate::angular::Channel;
use crate::constants::wavenumber_scale;

/// Unitary scattering matrix over the open channels of one block.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SMatrix {
    /// Total energy, cm⁻¹.
    pub energy: f64,
    pub total_j: u32,
    pub parity: i32,
    pub open_channels: Vec<Channel>,
    pub matrix: DMatrix<Complex64>,
    /// Reactance matrix `K` with `S = (1 + iK)(1 - iK)^{-1}`.
    pub k_matrix: DMatrix<f64>,
}

impl SMatrix {
    pub fn all_closed(&self) -> bool {
        self.open_channels.is_empty()
    }

    pub fn unitarity_defect(&self) -> f64 {
        let n = self.matrix.nrows();
        let p = self.matrix.adjoint() * &self.matrix;
        let mut worst = 0.0f64;
        for i in 0..n {
            for j in 0..n {
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((p[(i, j)] - target).norm());
            }
        }
        worst
    }

    pub fn symmetry_defect(&self) -> f64 {
        let n = self.matrix.nrows();
        let mut worst = 0.0f64;
        for i in 0..n {
            for j in 0..n {
                worst = worst.max((self.matrix[(i, j)] - self.matrix[(j, i)]).norm());
            }
        }
        worst
    }
}

/// Reactance matrix over the open channels from the log-derivative `y` at
/// radius `r`. `ls` are the orbital momenta and `k2` the channel wavenumbers
/// squared (negative when closed), both in channel order. Returns the open
/// channel indices with `K_oo`.
pub fn k_matrix(y: &DMatrix<f64>, r: f64, ls: &[u32], k2: &[f64]) -> Result<(Vec<usize>, DMatrix<f64>), ScatterError> {
    let n = ls.len();
    let open: Vec<usize> = (0..n).filter(|&i| k2[i] > 0.0).collect();
    if open.is_empty() {
        return Ok((open, DMatrix::zeros(0, 0)));
    }
    let mut jv = vec![0.0; n];
    let mut jd = vec![0.0; n];
    let mut nv = vec![0.0; n];
    let mut nd = vec![0.0; n];
    for i in 0..n {
        if k2[i] > 0.0 {
            let k = k2[i].sqrt();
            let (j, jp, nn, np) = riccati(ls[i], k * r);
            let s = k.sqrt().recip();
            jv[i] = s * j;
            jd[i] = s * k * jp;
            nv[i] = s * nn;
            nd[i] = s * k * np;
        } else {
            let kappa = (-k2[i]).sqrt();
            nv[i] = 1.0;
            nd[i] = kappa * decaying_logderiv(ls[i], kappa * r);
        }
    }
    // (Y N - N') K = (Y J - J') restricted to open columns.
    let mut lhs = DMatrix::zeros(n, n);
    for c in 0..n {
        for rr in 0..n {
            lhs[(rr, c)] = y[(rr, c)] * nv[c];
        }
        lhs[(c, c)] -= nd[c];
    }
    let mut rhs = DMatrix::zeros(n, open.len());
    for (col, &c) in open.iter().enumerate() {
        for rr in 0..n {
            rhs[(rr, col)] = y[(rr, c)] * jv[c];
        }
        rhs[(c, col)] -= jd[c];
    }
    let lu = lhs.lu();
    let sol = lu.solve(&rhs).ok_or(ScatterError::NonFinite { r })?;
    let mut k = DMatrix::zeros(open.len(), open.len());
    for (a, &i) in open.iter().enumerate() {
        for b in 0..open.len() {
            k[(a, b)] = sol[(i, b)];
        }
    }
    // Symmetric in exact arithmetic.
    let k = (&k + k.transpose()) * 0.5;
    Ok((open, k))
}

/// `S = (1 + iK)(1 - iK)^{-1}`.
pub fn s_from_k(k: &DMatrix<f64>) -> DMatrix<Complex64> {
    let n = k.nrows();
    let ik: DMatrix<Complex64> = k.map(|v| Complex64::new(0.0, v));
    let id = DMatrix::<Complex64>::identity(n, n);
    let num = &id + &ik;
    let den = &id - &ik;
    // (1 - iK) and (1 + iK) commute, so S = (1 - iK)^{-1}(1 + iK).
    den.lu().solve(&num).expect("1 - iK is invertible for real symmetric K")
}

/// Match the propagated log-derivative of a channel basis to free solutions.
pub fn s_matrix(
    y: &DMatrix<f64>,
    basis: &ChannelBasis,
    e_total: f64,
    r_max: f64,
    reduced_mass: f64,
) -> Result<SMatrix, ScatterError> {
    let scale = wavenumber_scale(reduced_mass);
    let ls: Vec<u32> = basis.channels.iter().map(|c| c.l).collect();
    let k2: Vec<f64> = basis.channels.iter().map(|c| scale * (e_total - c.internal_energy)).collect();
    let (open, k) = k_matrix(y, r_max, &ls, &k2)?;
    let s = s_from_k(&k);
    Ok(SMatrix {
        energy: e_total,
        total_j: basis.total_j,
        parity: basis.parity,
        open_channels: open.iter().map(|&i| basis.channels[i]).collect(),
        matrix: s,
        k_matrix: k,
    })
}
