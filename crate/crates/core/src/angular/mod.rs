//! Angular-momentum algebra.
//!
//! # Normalization convention
//!
//! The interaction is expanded in body-fixed bispherical functions (R along z)
//!
//! ```text
//! A_{l1 l2 l}(θ1, θ2, φ) = 4π / sqrt(2l+1) Σ_m <l1 m l2 -m | l 0> Y_{l1 m}(θ1, 0) Y_{l2 -m}(θ2, φ)
//! ```
//!
//! which is the space-fixed contraction
//! `(4π)^{3/2} / sqrt(2l+1) (-1)^{l1-l2} Σ (l1 l2 l; m1 m2 m) Y_{l1 m1}(r̂1) Y_{l2 m2}(r̂2) Y_{l m}(R̂)`
//! evaluated at `R̂ = ẑ`. With this choice `A_000 = 1`, `A_{l 0 l} = P_l(cos θ1)`,
//! `A_{0 l l} = P_l(cos θ2)`, and over `(cos θ1, cos θ2, φ)` the functions are
//! orthogonal with `∫ A² = 8π / (2l+1)`. Channel functions are unit-normalized
//! coupled spherical harmonics `|(j1 j2) j12, l; J M>`. The PES projection and
//! the coupling coefficients both use this convention.

mod coupling;
mod exact;
mod halfint;
mod harmonics;
mod wigner;

pub use coupling::{coupling_coefficient, Channel};
pub use exact::SqrtRational;
pub use halfint::HalfInt;
pub use harmonics::{bispherical, bispherical_norm, legendre_normalized, spherical_harmonic};
pub use wigner::{
    clear_caches, wigner_3j, wigner_3j_exact, wigner_3j_zero, wigner_6j, wigner_6j_exact, wigner_9j,
    wigner_9j_exact, EXACT_TWICE_LIMIT,
};

pub(crate) use wigner::triangle;

/// Clebsch-Gordan coefficient `<j1 m1 j2 m2 | j m>` on integer arguments.
pub fn clebsch_gordan(j1: i32, m1: i32, j2: i32, m2: i32, j: i32, m: i32) -> f64 {
    let phase = if (j1 - j2 + m).rem_euclid(2) == 0 { 1.0 } else { -1.0 };
    let three_j = wigner_3j(
        HalfInt::int(j1),
        HalfInt::int(j2),
        HalfInt::int(j),
        HalfInt::int(m1),
        HalfInt::int(m2),
        HalfInt::int(-m),
    )
    .unwrap_or(0.0);
    phase * ((2 * j + 1) as f64).sqrt() * three_j
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum AngularError {
    #[error("negative angular momentum magnitude {0}")]
    NegativeMagnitude(HalfInt),
    #[error("projection {m} is not allowed for magnitude {j}")]
    InvalidProjection { j: HalfInt, m: HalfInt },
    #[error("argument {0} exceeds the exact-arithmetic range")]
    BeyondExactRange(HalfInt),
    #[error("channels do not belong to the same (J, parity) block: {0}")]
    BlockMismatch(String),
    #[error("expansion term ({0}, {1}, {2}) is not a valid triad")]
    InvalidTerm(u32, u32, u32),
}
