//! Special functions: log-scale Bessel `K`, its order derivative, and
//! generalized inverse Gaussian (GIG) normalizers and moments.
//!
//! The GIG kernel `u^{p-1} exp(-(a u + b/u)/2)` on `u > 0` is the posterior
//! of the latent factor in every E-step of this crate, so its moments are the
//! workhorse of estimation. Plain power moments reduce to Bessel ratios;
//! log-moments are integrated by quadrature after `u = exp(s)`, where the
//! integrand decays double-exponentially.

mod bessel;

pub use bessel::{dlog_bessel_k_dorder, log_bessel_k};

use crate::error::{Error, Result};
use crate::quad;
use statrs::function::gamma::{digamma, ln_gamma};

/// Parameters `(a, b, p)` of the GIG kernel `u^{p-1} exp(-(a u + b/u)/2)`.
///
/// `b = 0` is the gamma limit and requires `p > 0` for the kernel to be
/// normalizable.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GigParams {
    a: f64,
    b: f64,
    p: f64,
}

impl GigParams {
    pub fn new(a: f64, b: f64, p: f64) -> Result<Self> {
        if !(a.is_finite() && b.is_finite() && p.is_finite()) {
            return Err(Error::domain("GigParams::new", "parameters must be finite"));
        }
        if a <= 0.0 {
            return Err(Error::domain(
                "GigParams::new",
                format!("a must be positive, got {a}"),
            ));
        }
        if b < 0.0 {
            return Err(Error::domain(
                "GigParams::new",
                format!("b must be nonnegative, got {b}"),
            ));
        }
        if b == 0.0 && p <= 0.0 {
            return Err(Error::domain(
                "GigParams::new",
                format!("the gamma limit b = 0 requires p > 0, got p = {p}"),
            ));
        }
        Ok(Self { a, b, p })
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn b(&self) -> f64 {
        self.b
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    /// Mode of the integrand of `E[U^k ...]` in the variable `s = log u`.
    fn log_mode(&self, extra_power: f64) -> f64 {
        let p = self.p + extra_power;
        if self.b == 0.0 {
            (2.0 * p.max(1e-12) / self.a).ln()
        } else {
            ((p + (p * p + self.a * self.b).sqrt()) / self.a).ln()
        }
    }
}

/// `log( integral u^{p-1} exp(-(a u + b/u)/2) du )` over `(0, inf)`.
///
/// For `b > 0` this is `log 2 + (p/2) log(b/a) + log K_p(sqrt(a b))`; the
/// `b = 0` gamma limit is routed to `log Gamma(p) - p log(a/2)` instead of
/// pushing a vanishing `b` through the Bessel code, which is singular there.
pub fn gig_log_normalizer(g: &GigParams) -> f64 {
    if g.b == 0.0 {
        ln_gamma(g.p) - g.p * (0.5 * g.a).ln()
    } else {
        let z = (g.a * g.b).sqrt();
        std::f64::consts::LN_2
            + 0.5 * g.p * (g.b.ln() - g.a.ln())
            + log_bessel_k(g.p, z).expect("a, b > 0 give a positive argument")
    }
}

/// `E[U^K (log U)^L]` under the normalized GIG law.
///
/// `L = 0` is a pure Bessel ratio (or a gamma-function ratio when `b = 0`);
/// `L >= 1` multiplies that ratio by a quadrature of `(log u)^L` against the
/// power-tilted kernel. Returns a domain error when the moment does not
/// exist, which can only happen in the gamma limit with `p + K <= 0`.
pub fn gig_moment(g: &GigParams, power_k: i32, log_power_l: u32) -> Result<f64> {
    let k = f64::from(power_k);
    let pk = g.p + k;
    if g.b == 0.0 && pk <= 0.0 {
        return Err(Error::domain(
            "gig_moment",
            format!(
                "E[U^{power_k} (log U)^{log_power_l}] does not exist for b = 0, p = {}",
                g.p
            ),
        ));
    }
    // E[U^K]: ratio of normalizers at powers p+K and p.
    let power_part = if g.b == 0.0 {
        (ln_gamma(pk) - ln_gamma(g.p) - k * (0.5 * g.a).ln()).exp()
    } else {
        let z = (g.a * g.b).sqrt();
        (0.5 * k * (g.b.ln() - g.a.ln()) + log_bessel_k(pk, z)? - log_bessel_k(g.p, z)?).exp()
    };
    if log_power_l == 0 {
        return Ok(power_part);
    }
    // E[U^K (log U)^L] = E[U^K] * E_{tilted}[(log U)^L] where the tilted law
    // is the GIG with power p+K.
    let (a, b) = (g.a, g.b);
    let l = log_power_l;
    let log_weight = quad::expect_exp(
        move |s| (pk - 0.0) * s - 0.5 * (a * s.exp() + b * (-s).exp()),
        move |s| s.powi(l as i32),
        g.log_mode(k),
    );
    Ok(power_part * log_weight)
}

/// `E[log U]` under the GIG law, through the identity
/// `d/dp log Z(p) = (1/2) log(b/a) + d/dp log K_p(sqrt(ab))`.
///
/// This is the closed(-ish) route the E-step uses; `gig_moment(g, 0, 1)` is
/// the quadrature route to the same number.
pub fn gig_expected_log(g: &GigParams) -> Result<f64> {
    if g.b == 0.0 {
        return Ok(digamma(g.p) - (0.5 * g.a).ln());
    }
    let z = (g.a * g.b).sqrt();
    Ok(0.5 * (g.b.ln() - g.a.ln()) + dlog_bessel_k_dorder(g.p, z)?)
}
