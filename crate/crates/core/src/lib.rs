//! Minimum-risk solutions of linear systems whose coefficients and right-hand
//! sides are observed with Gaussian noise.
//!
//! The optimal estimator is a ridge solution scaled up by an extension factor:
//! `x̂ = α (RᵀR + tI)⁻¹ Rᵀ y` with `α = 1/θ ≥ 1`, `t = s/θ²`, where
//! `θ = a/(a+p)` and `s = ap/(a+p) + q` come from the noise model. The crate
//! also evaluates the theoretical risk of any spectral filter on a pooled
//! eigenvalue distribution and validates it by simulation.

pub mod error;
pub mod filter;
pub mod linalg;
pub mod model;
pub mod montecarlo;
pub mod risk;
pub mod rng;
pub mod stats;

pub use error::{Error, Result};
pub use filter::{
    apply_filter, class_k_witness, solve_optimal, solve_standard, FilterKind, SpectralFilter,
    SpectralSystem,
};
pub use linalg::{eigh, eigvalsh, gram, matmul, solve_spd, EigenDecomposition, Matrix, Vector};
pub use model::{
    derive_params, sample_instance, stein_check, DerivedParams, NoiseModel, ProblemSample,
    SteinReport,
};
pub use montecarlo::{
    rhs_quadratic_form_check, risk_curve, run_experiment, CurveRow, EmpiricalRisk,
    ExperimentConfig, ExperimentResult, FilterOutcome, QuadraticFormReport,
};
pub use risk::{
    inverse_trace_oracle, pool_spectrum, risk_functional, risk_gap, risk_opt, risk_std, RiskReport,
    Spectrum,
};
pub use rng::RngSpec;
pub use stats::MeanEstimate;
