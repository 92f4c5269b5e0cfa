//! Forecasting toolkit for functional time series cut from a long seasonal
//! univariate series.
//!
//! The pipeline follows the usual functional principal component regression
//! recipe: segment the series into daily curves, decompose them with
//! (robust) FPCA, forecast the principal component scores with per-component
//! ARIMA or a joint VAR, and map the forecast scores back to curves. Two
//! dynamic updating methods refine the remaining part of a partially observed
//! day: block moving ([`update::bm_rotate`]) and functional linear regression
//! ([`update::flr_fit`]). Interval forecasts come from residual bootstraps
//! ([`uncertainty`]).
//!
//! Monte Carlo loops (bootstrap replicates, rolling origins, simulation
//! replications) run through [`par`], which uses rayon when the `parallel`
//! feature is enabled and plain iteration otherwise. Results are identical
//! either way.

pub mod data;
pub mod error;
pub mod eval;
pub mod fpca;
pub mod linalg;
pub mod par;
pub mod pipeline;
pub mod rng;
pub mod scorecast;
pub mod sim;
pub mod uncertainty;
pub mod update;

pub use data::{FunctionalTimeSeries, Grid, PartialCurve, UnivariateSeries};
pub use error::{Error, Result};
pub use fpca::{FpcaModel, FpcaVariant, RobustConfig, Truncation};
pub use scorecast::{ArimaModel, Forecaster, VarModel};
