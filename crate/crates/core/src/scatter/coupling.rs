use nalgebra::DMatrix;

use super::{ChannelBasis, ScatterError};
use crate::angular::{coupling_coefficient, HalfInt};
use crate::pes::{PotentialExpansion, Triple};

/// Angular matrices `<a| A_t |b>` for each expansion term, precomputed per
/// block. Terms whose matrix vanishes identically are omitted.
#[derive(Clone, Debug)]
pub struct AngularCoupling {
    /// Index into the expansion's term list, with the term's matrix.
    pub terms: Vec<(usize, Triple, DMatrix<f64>)>,
}

impl AngularCoupling {
    pub fn new(basis: &ChannelBasis, expansion: &PotentialExpansion) -> Result<Self, ScatterError> {
        let n = basis.len();
        let jt = HalfInt::from(basis.total_j);
        let mut terms = Vec::new();
        for (idx, t) in expansion.terms().iter().enumerate() {
            let triple = t.triple();
            let mut m = DMatrix::zeros(n, n);
            let mut any = false;
            for a in 0..n {
                for b in a..n {
                    let c = coupling_coefficient(&basis.channels[a], &basis.channels[b], triple, jt)?;
                    if c != 0.0 {
                        any = true;
                        m[(a, b)] = c;
                        m[(b, a)] = c;
                    }
                }
            }
            if any {
                terms.push((idx, triple, m));
            }
        }
        Ok(AngularCoupling { terms })
    }

    /// `Σ_t v_t(R) <a|A_t|b>` given radial values in expansion term order.
    pub fn potential_into(&self, radial: &[f64], out: &mut DMatrix<f64>) {
        out.fill(0.0);
        for (idx, _, m) in &self.terms {
            let v = radial[*idx];
            if v != 0.0 {
                out.zip_apply(m, |a, b| *a += v * b);
            }
        }
    }
}

/// Potential coupling matrix in cm⁻¹ at distance `r` (no centrifugal or
/// internal-energy terms).
pub fn coupling_matrix(
    basis: &ChannelBasis,
    expansion: &PotentialExpansion,
    r: f64,
) -> Result<DMatrix<f64>, ScatterError> {
    let ang = AngularCoupling::new(basis, expansion)?;
    let mut radial = Vec::new();
    expansion.radial_values(r, &mut radial)?;
    let mut out = DMatrix::zeros(basis.len(), basis.len());
    ang.potential_into(&radial, &mut out);
    Ok(out)
}
