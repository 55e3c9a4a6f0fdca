//! Stability transform for mixed-Poisson random sums.
//!
//! A law is a weak limit of normalized mixed-Poisson sums exactly when its
//! characteristic function is `exp(-phi [b(xi0) - b(xi0 + log Psi(t)/phi)])`
//! for the characteristic function `Psi` of some alpha-stable law. The two
//! stable inputs the demos need are built in; `log Psi` is always formed
//! analytically, never by taking a complex log of an evaluated `Psi`, so the
//! branch is unambiguous by construction.

use crate::error::{Error, Result};
use crate::mixing::{self, MixingFamily};
use crate::nef;
use crate::special::log_bessel_k;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

/// A stable characteristic function the transform can compose with.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum StableCfSpec {
    /// `Psi(t) = exp(-c |t|^alpha)`, `c > 0`, `alpha` in `(0, 2]`.
    SymmetricAlphaStable { c: f64, alpha: f64 },
    /// `Psi(t) = exp(i mu t - sigma^2 t^2 / 2)` (the alpha = 2 member with
    /// drift).
    NormalDrift { mu: f64, sigma2: f64 },
}

impl StableCfSpec {
    pub fn symmetric_alpha_stable(c: f64, alpha: f64) -> Result<Self> {
        if !(c > 0.0 && c.is_finite()) {
            return Err(Error::domain("StableCfSpec", format!("c = {c}")));
        }
        if !(alpha > 0.0 && alpha <= 2.0) {
            return Err(Error::domain(
                "StableCfSpec",
                format!("alpha must lie in (0, 2], got {alpha}"),
            ));
        }
        Ok(StableCfSpec::SymmetricAlphaStable { c, alpha })
    }

    pub fn normal_drift(mu: f64, sigma2: f64) -> Result<Self> {
        if !(mu.is_finite() && sigma2 >= 0.0 && sigma2.is_finite()) {
            return Err(Error::domain(
                "StableCfSpec",
                format!("mu = {mu}, sigma2 = {sigma2}"),
            ));
        }
        Ok(StableCfSpec::NormalDrift { mu, sigma2 })
    }

    /// `log Psi(t)`, continuous through `t = 0` with `log Psi(0) = 0`.
    pub fn log_cf(&self, t: f64) -> Complex64 {
        match *self {
            StableCfSpec::SymmetricAlphaStable { c, alpha } => {
                Complex64::new(-c * t.abs().powf(alpha), 0.0)
            }
            StableCfSpec::NormalDrift { mu, sigma2 } => {
                Complex64::new(-0.5 * sigma2 * t * t, mu * t)
            }
        }
    }

    /// `Psi(t)` itself.
    pub fn cf(&self, t: f64) -> Complex64 {
        self.log_cf(t).exp()
    }
}

/// The composed characteristic function
/// `exp(-phi [b(xi0) - b(xi0 + log Psi(t) / phi)])`.
pub fn mp_stable_cf(
    fam: MixingFamily,
    phi: f64,
    psi: &StableCfSpec,
    t: f64,
) -> Result<Complex64> {
    if fam == MixingFamily::Ghs {
        return Err(Error::UnsupportedFamily {
            family: fam,
            op: "mp_stable_cf",
        });
    }
    if !(phi > 0.0 && phi.is_finite()) {
        return Err(Error::domain("mp_stable_cf", format!("phi = {phi}")));
    }
    Ok(mixing::mixing_cf_at(fam, phi, psi.log_cf(t)))
}

/// Density of the symmetric gamma-composed law with `alpha = 2`:
/// characteristic function `(1 + (c/phi) t^2)^(-phi)`, density
/// `(phi/c)^{phi/2 + 1/4} 2^{1/2 - phi} K_{phi - 1/2}(|y| sqrt(phi/c))
///  |y|^{phi - 1/2} / (sqrt(pi) Gamma(phi))`.
///
/// The `y` power is taken on `|y|`: the law is even and a signed power would
/// be undefined for non-integer exponents. At `y = 0` the density is the
/// finite limit `sqrt(phi/c) Gamma(phi - 1/2) / (2 sqrt(pi) Gamma(phi))`
/// when `phi > 1/2` and diverges otherwise.
pub fn nb_stable_symmetric_pdf(c: f64, phi: f64, y: f64) -> Result<f64> {
    if !(c > 0.0 && c.is_finite()) {
        return Err(Error::domain("nb_stable_symmetric_pdf", format!("c = {c}")));
    }
    if !(phi > 0.0 && phi.is_finite()) {
        return Err(Error::domain(
            "nb_stable_symmetric_pdf",
            format!("phi = {phi}"),
        ));
    }
    let half_pi_ln = 0.5 * std::f64::consts::PI.ln();
    if y == 0.0 {
        if phi > 0.5 {
            return Ok((0.5 * (phi / c).ln() + ln_gamma(phi - 0.5)
                - std::f64::consts::LN_2
                - half_pi_ln
                - ln_gamma(phi))
            .exp());
        }
        return Ok(f64::INFINITY);
    }
    let z = y.abs() * (phi / c).sqrt();
    let lf = (0.5 * phi + 0.25) * (phi / c).ln() + (0.5 - phi) * std::f64::consts::LN_2
        + log_bessel_k(phi - 0.5, z)?
        + (phi - 0.5) * y.abs().ln()
        - half_pi_ln
        - ln_gamma(phi);
    Ok(lf.exp())
}

/// Convenience: the NEF characteristic function reached through the
/// stability route must coincide with [`nef::nef_cf`]; this returns the
/// largest pointwise modulus difference on a `t` grid.
pub fn fixed_point_gap(
    p: &nef::NefParams,
    fam: MixingFamily,
    ts: &[f64],
) -> Result<f64> {
    let psi = StableCfSpec::normal_drift(p.mu, p.sigma2)?;
    let mut worst: f64 = 0.0;
    for &t in ts {
        let composed = mp_stable_cf(fam, p.phi, &psi, t)?;
        let direct = nef::nef_cf(p, fam, t)?;
        worst = worst.max((composed - direct).norm());
    }
    Ok(worst)
}
