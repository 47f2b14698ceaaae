//! Rotational energy transfer in rotor-rotor collisions: close-coupling
//! scattering, thermal rates, kinetic forward modelling of double-resonance
//! experiments, and the matching rate-extraction analysis.

pub mod angular;
pub mod constants;
pub mod molsys;
pub mod quadrature;
pub mod pes;
pub mod scatter;
pub mod thermal;
pub mod kinetics;
pub mod reference;
pub mod analysis;
pub mod dataset;
mod serde_pairs;
