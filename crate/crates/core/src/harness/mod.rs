//! Convergence experiments for quadrature rules applied to integrands that
//! are less smooth than the space the rule was built for.
//!
//! A run sweeps `n = 2^j` (lattice methods round up to a prime, grid methods
//! to a perfect power), repeats each size over seeded replicates, records the
//! absolute integration error and the rule's worst-case error, and fits the
//! slope of `log2(mean error)` against `log2(n)`.

mod config;
mod integrand;
mod rates;
mod run;
mod table;

pub use config::{ExperimentConfig, IntegrandFamily, Method};
pub use integrand::{
    constant_integrand, make_fourier_integrand, make_integrand, make_matern_integrand, Integrand,
};
pub use rates::{
    aggregate_and_fit, fit_groups, mean_errors, predicted_exponent, predicted_rate,
    predicted_rate_sobolev, GroupKey, RateFit, TheoreticalRate,
};
pub use run::{
    run_convergence, run_convergence_with, CellFailure, ConvergenceRecord, ConvergenceRun,
};
pub use table::{export_table, import_table, read_table, write_table, CSV_HEADER};
