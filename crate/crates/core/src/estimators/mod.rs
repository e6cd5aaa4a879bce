//! Lyapunov-exponent estimators, the Fisher-information identity and
//! stationarity diagnostics.

pub mod batch;
pub mod ensemble;
pub mod exponents;
pub mod fisher;

pub use batch::{BatchMeans, BatchStats};
pub use ensemble::{
    ensemble_benettin, ensemble_fk, ensemble_samples, ensemble_spectrum, ensemble_tightness, initial_condition, EnsembleEstimate,
    EnsembleSpec,
};
pub use exponents::{
    estimate_fk_average, estimate_spectrum_qr, estimate_top_benettin, lambda_sigma_analytic, ExponentEstimate,
    Horizon, Method, Spectrum, DEFAULT_BATCHES, DEFAULT_BURN_IN_FRACTION,
};
pub use fisher::{
    estimate_fi_plugin, fisher_from_exponents, tightness_diagnostic, Bandwidth, Measured, PluginOptions, SampleSet,
    Tightness,
};
