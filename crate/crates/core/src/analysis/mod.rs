//! Analysis of decay traces and probe spectra: exponential and multipeak
//! Voigt fits, total and state-to-state rates with 2σ errors, propensity
//! diagnostics and table comparisons.

pub mod compare;
pub mod decay;
pub mod extraction;
pub mod lm;
pub mod pipeline;
pub mod propensity;
pub mod spectra;

pub use compare::{compare_to_reference, CompareReport, CompareSummary, Deviation};
pub use decay::{fit_exponential, total_rate_from_decay, ExponentialFit};
pub use extraction::{
    bootstrap_uncertainty, covariance_uncertainty, state_to_state_rates, ExtractionInputs, ExtractionResult,
    FittedSpectrum, UncertaintyMethod,
};
pub use lm::{levenberg_marquardt, FitResult, LeastSquares, LmOptions};
pub use pipeline::{
    analyse, lines_of, long_delay_for, roundtrip, simulate, AnalysisInputs, AnalysisOutput, FeqSource, RoundTripConfig,
    RoundTripReport, RateDeviation,
    SyntheticDataset, UncertaintyChoice,
};
pub use propensity::{propensity_report, Branch, EnergyGapFit, Propensity, PropensityFlag, PropensityReport};
pub use spectra::{fit_multipeak_voigt, refit_multipeak_voigt, LineArea, LineGuess, MultiPeakFit, VoigtFitOptions};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum AnalysisError {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("insufficient data: {0}")]
    InsufficientData(String),
    #[error("fit did not converge: {0}")]
    NonConvergence(String),
    #[error("degenerate data: {0}")]
    Degenerate(String),
    #[error("domain error: {0}")]
    Domain(String),
}
