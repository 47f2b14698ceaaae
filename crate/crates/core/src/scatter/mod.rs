//! Close-coupling scattering of a linear rotor with a linear rotor partner
//! (or an atom) in the space-fixed total-angular-momentum representation.
//!
//! Channels are `|j1 j2 j12 l; J M>` with parity `(-1)^{j1+j2+l}`. The
//! coupled radial equations are propagated with a modified log-derivative
//! method and matched to Riccati-Bessel functions at `r_max`.

mod atom_rotor;
mod basis;
pub mod bessel;
mod coupling;
mod driver;
mod propagator;
mod smatrix;
mod xsec;

pub use atom_rotor::{atom_rotor_coupling, AtomRotorSystem};
pub use basis::{build_basis, pair_levels, ChannelBasis};
pub use coupling::{coupling_matrix, AngularCoupling};
pub use driver::{energy_grid, Block, BlockEquations, EnergyResult, JSelection, ScatteringSystem, THRESHOLD_GUARD};
pub use propagator::{propagate_logderiv, CoupledEquations, PropagationGrid};
pub use smatrix::{k_matrix, s_from_k, s_matrix, SMatrix};
pub use xsec::{
    accumulate_block, cross_sections, finalize, CrossSectionEntry, CrossSectionTable, LevelKey, TransitionKey,
};

use crate::angular::AngularError;
use crate::molsys::MolsysError;
use crate::pes::PesError;

#[derive(Debug, thiserror::Error)]
pub enum ScatterError {
    #[error(transparent)]
    Pes(#[from] PesError),
    #[error(transparent)]
    Angular(#[from] AngularError),
    #[error(transparent)]
    Molsys(#[from] MolsysError),
    #[error("propagation produced non-finite values near R = {r} bohr")]
    NonFinite { r: f64 },
    #[error("invalid propagation grid {0:?}")]
    InvalidGrid(PropagationGrid),
    #[error("partial-wave sum not converged after J = {}", .0.j_values.last().copied().unwrap_or(0))]
    Unconverged(Box<EnergyResult>),
    #[error("{0}")]
    InvalidInput(String),
}
