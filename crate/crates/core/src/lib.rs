//! Normal exponential-family (NEF) mixture laws.
//!
//! A NEF law is the distribution of `Y = mu W + sigma sqrt(W) Z` where `Z`
//! is standard normal and `W` is a unit-mean exponential-family latent
//! factor with dispersion `phi` — the class that arises as the weak limit of
//! normalized mixed-Poisson random sums. The crate provides:
//!
//! * [`special`]: log-scale Bessel `K`, its order derivative, and GIG
//!   normalizers/moments;
//! * [`mixing`]/[`nef`]: the latent families, densities, characteristic
//!   functions, cumulants and exact samplers;
//! * [`mp_sums`]: mixed-Poisson counts (negative binomial, Poisson
//!   inverse-Gaussian), normalized random sums and KS convergence
//!   diagnostics;
//! * [`stability`]: the stable-composition characteristic functions whose
//!   fixed points are the NEF laws;
//! * [`estimation`]: method of moments, EM with GIG posterior expectations,
//!   and observed-information standard errors;
//! * [`study`]: deterministic Monte Carlo study harness.

pub mod error;
pub mod estimation;
pub mod mixing;
pub mod mp_sums;
pub mod nef;
pub mod quad;
pub mod special;
pub mod stability;
pub mod study;

pub use error::{Error, Result};
pub use mixing::MixingFamily;
pub use nef::NefParams;

/// Re-export of the complex type used by the characteristic functions.
pub use num_complex::Complex64;
