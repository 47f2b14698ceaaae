//! Physical constants and unit conversions. Internal units are cm⁻¹, bohr,
//! u and K; conversions to SI happen at reporting boundaries.

/// Boltzmann constant in cm⁻¹ K⁻¹.
pub const K_B_CM: f64 = 0.69503480;
/// Boltzmann constant in J K⁻¹.
pub const K_B_J: f64 = 1.380649e-23;
/// Unified atomic mass unit in kg.
pub const AMU_KG: f64 = 1.66053906660e-27;
/// Unified atomic mass unit in electron masses.
pub const AMU_ME: f64 = 1822.888486;
/// Hartree in cm⁻¹.
pub const HARTREE_CM: f64 = 219474.6313632;
/// Bohr radius in Å.
pub const BOHR_ANGSTROM: f64 = 0.529177210903;
/// Bohr radius in cm.
pub const BOHR_CM: f64 = 0.529177210903e-8;
/// Speed of light in cm s⁻¹.
pub const C_CM_S: f64 = 2.99792458e10;
/// Display scale used for rate coefficients (10⁻¹¹ cm³ s⁻¹).
pub const RATE_DISPLAY_UNIT: f64 = 1e-11;

/// `2 μ / ħ²` in bohr⁻² per cm⁻¹ for a reduced mass in u.
pub fn wavenumber_scale(reduced_mass_u: f64) -> f64 {
    2.0 * reduced_mass_u * AMU_ME / HARTREE_CM
}

/// Square of the channel wavenumber in bohr⁻² for a kinetic energy in cm⁻¹.
pub fn k_squared(reduced_mass_u: f64, kinetic_cm: f64) -> f64 {
    wavenumber_scale(reduced_mass_u) * kinetic_cm
}

pub fn kelvin_to_cm(t: f64) -> f64 {
    K_B_CM * t
}
