//! Statistics on Monte Carlo ensembles: finite increments, the discrete
//! Besov functional, kernel density estimates, the smoothing-criterion probe,
//! Hölder exponent fits, moment bounds and the frozen-coefficient error curve.

pub mod approx;
pub mod besov;
pub mod hoelder;
pub mod increments;
pub mod kde;
pub mod moments;
pub mod regression;
pub mod smoothing;

pub use approx::{approx_error_curve, ApproxErrorCurve, ApproxPoint};
pub use besov::{besov_functional, default_order, dyadic_lags, BesovValue};
pub use hoelder::{hoelder_fit, increment_moment, HoelderFit};
pub use increments::{nth_increment, SampledFunction};
pub use kde::{kde, silverman_bandwidth, Bandwidth, DensityEstimate, EnsembleSamples, KdeOptions};
pub use moments::{absolute_moment, moment_sup, MomentSup};
pub use regression::{log_log, ols, LinearFit};
pub use smoothing::{smoothing_probe, LagEstimate, SmoothingFit, TestFunction, DEFAULT_SMOOTHING_ORDER};
