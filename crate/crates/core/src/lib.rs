//! Path travel-time distribution estimation on arterial roads.
//!
//! Per-segment travel times are modelled by finite Gaussian mixtures and
//! coupled into a path distribution by a fitted copula (Gaussian, Student-t,
//! Clayton, or Gumbel), with the independence convolution as the baseline.
//! Two-sample Kolmogorov-Smirnov and Cramer-von-Mises statistics compare
//! each model against the empirical path distribution.
//!
//! The pipeline is: ingest per-segment trips ([`trip_data`]), fit mixture
//! marginals ([`marginals`]), build pseudo-observations and measure rank
//! dependence ([`dependence`]), fit copulas by maximum likelihood
//! ([`copulas`]), aggregate to path distributions ([`path_agg`]), and score
//! the fits ([`gof`]). All sampling is seed-deterministic.

pub mod copulas;
pub mod dependence;
pub mod error;
pub mod gof;
pub mod marginals;
pub mod matrix;
pub mod path_agg;
pub mod presets;
pub mod trip_data;

mod numeric;
#[cfg(test)]
mod testutil;

pub use copulas::{fit_copula, CdfEstimate, CopulaModel, Family, FitResult};
pub use dependence::{
    adjacent_taus, kendall_tau, tau_to_param, PairTau, PseudoObservations, PseudoSource,
};
pub use error::{Error, Result};
pub use gof::{cvm_statistic, ks_against_cdf, ks_two_sample, GofReport};
pub use marginals::{fit_gmm, fit_gmm_with, GmmFit, GmmFitOptions, GmmParams};
pub use matrix::Matrix;
pub use path_agg::{
    empirical_path, estimate_convolution_path, estimate_copula_path, EstimateMethod, PathSummary,
    PathTtdEstimate,
};
pub use trip_data::{
    assemble_series, load_trips, synthesize, write_trips, SegmentSeries, SeriesAssembly,
    SynthSpec, TripRecord,
};
