//! Laws of Brownian-bridge extrema.
//!
//! The crate evaluates the asymptotic distributions behind the
//! Kolmogorov-Smirnov and Kuiper statistics, together with the joint law of
//! the maximum and the negated minimum of a standard Brownian bridge, the
//! law of their difference, their quotient, and their covariance.
//!
//! Every closed form can be checked through three routes:
//!
//! * [`distributions`]: truncated theta-type series with a reported bound on
//!   the truncation error,
//! * [`laplace`]: the same laws after multiplying by `sqrt(gamma)` with
//!   `gamma ~ Gamma(1/2, theta)`, where they become hyperbolic functions; a
//!   gamma-mixture quadrature ties the two scales together,
//! * [`mc`]: Monte Carlo simulation of bridges, killed Brownian motion,
//!   last-zero times and the Vervaat transform.
//!
//! [`gof`] applies the laws to goodness-of-fit testing and [`verify`] bundles
//! the cross-checks into reproducible reports.

pub mod distributions;
pub mod error;
pub mod gof;
pub mod laplace;
pub mod mc;
pub mod quadrature;
pub mod rng;
mod series;
pub mod special;
pub mod types;
pub mod verify;

pub use error::{Error, Result};
pub use types::{Accuracy, Evaluation, Prob};
