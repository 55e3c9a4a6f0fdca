//! Exponential-family mixing laws for the latent factor `W_phi`.
//!
//! Every family is pinned to the unit-mean parameterization: the density is
//! `exp(phi [w xi0 - b(xi0)] + d(phi) + phi g(w) + h(w))` with `b'(xi0) = 1`,
//! so `E(W) = 1` and `Var(W) = b''(xi0) / phi`.

use crate::error::{Error, Result};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, Gamma as GammaDist, InverseGaussian};
use serde::{Deserialize, Serialize};
use statrs::function::gamma::{digamma, ln_gamma};

/// Which exponential family drives the mixture.
///
/// `Ghs` (generalized hyperbolic secant) is carried only as far as its
/// cumulant constants; density, characteristic-function composition,
/// sampling and estimation reject it with [`Error::UnsupportedFamily`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MixingFamily {
    Gamma,
    InverseGaussian,
    Ghs,
}

impl MixingFamily {
    /// Natural-parameter anchor `xi0` with `b'(xi0) = 1`.
    pub fn xi0(self) -> f64 {
        match self {
            MixingFamily::Gamma => -1.0,
            MixingFamily::InverseGaussian => -0.5,
            MixingFamily::Ghs => -3.0 * std::f64::consts::FRAC_PI_4,
        }
    }

    /// `b(xi0)`.
    pub fn b_at_xi0(self) -> f64 {
        match self {
            MixingFamily::Gamma => 0.0,
            MixingFamily::InverseGaussian => -1.0,
            // b(theta) = log(1 + tan^2 theta) / 2, tan(-3 pi/4) = 1
            MixingFamily::Ghs => 0.5 * std::f64::consts::LN_2,
        }
    }

    /// `b''(xi0)`.
    pub fn b2(self) -> f64 {
        match self {
            MixingFamily::Gamma => 1.0,
            MixingFamily::InverseGaussian => 1.0,
            MixingFamily::Ghs => 2.0,
        }
    }

    /// Third derivative of `b` at `xi0`.
    pub fn b3(self) -> f64 {
        match self {
            MixingFamily::Gamma => 2.0,
            MixingFamily::InverseGaussian => 3.0,
            MixingFamily::Ghs => 4.0,
        }
    }

    /// Fourth derivative of `b` at `xi0`.
    pub fn b4(self) -> f64 {
        match self {
            MixingFamily::Gamma => 6.0,
            MixingFamily::InverseGaussian => 15.0,
            MixingFamily::Ghs => 16.0,
        }
    }

    /// `b` on the real axis, around `xi0`. Used by tests to verify the
    /// tabulated derivatives numerically.
    pub fn b_real(self, theta: f64) -> f64 {
        match self {
            MixingFamily::Gamma => -(-theta).ln(),
            MixingFamily::InverseGaussian => -(-2.0 * theta).sqrt(),
            MixingFamily::Ghs => 0.5 * (1.0 + theta.tan().powi(2)).ln(),
        }
    }

    /// Analytic extension of `b` to complex arguments with negative real
    /// part, on the principal branch. Only the two estimable families have
    /// an unambiguous extension here; GHS does not need one.
    pub(crate) fn b_complex(self, z: Complex64) -> Complex64 {
        match self {
            MixingFamily::Gamma => -(-z).ln(),
            MixingFamily::InverseGaussian => -(-2.0 * z).sqrt(),
            MixingFamily::Ghs => unreachable!("no complex extension for GHS"),
        }
    }

    /// `d(phi)` of the carrier `c(w; phi) = d(phi) + phi g(w) + h(w)`.
    pub(crate) fn d(self, phi: f64) -> f64 {
        match self {
            MixingFamily::Gamma => phi * phi.ln() - ln_gamma(phi),
            MixingFamily::InverseGaussian => 0.5 * phi.ln(),
            MixingFamily::Ghs => unreachable!("GHS carrier is out of scope"),
        }
    }

    /// `d'(phi)`.
    pub(crate) fn d_prime(self, phi: f64) -> f64 {
        match self {
            MixingFamily::Gamma => phi.ln() + 1.0 - digamma(phi),
            MixingFamily::InverseGaussian => 0.5 / phi,
            MixingFamily::Ghs => unreachable!("GHS carrier is out of scope"),
        }
    }

    /// `d''(phi)`.
    pub(crate) fn d_second(self, phi: f64) -> f64 {
        match self {
            MixingFamily::Gamma => 1.0 / phi - trigamma(phi),
            MixingFamily::InverseGaussian => -0.5 / (phi * phi),
            MixingFamily::Ghs => unreachable!("GHS carrier is out of scope"),
        }
    }

    /// `g(w)`, the `phi`-linked carrier term.
    pub(crate) fn g(self, w: f64) -> f64 {
        match self {
            MixingFamily::Gamma => w.ln(),
            MixingFamily::InverseGaussian => -0.5 / w,
            MixingFamily::Ghs => unreachable!("GHS carrier is out of scope"),
        }
    }

    /// `h(w)`, the parameter-free carrier term.
    pub(crate) fn h(self, w: f64) -> f64 {
        match self {
            MixingFamily::Gamma => -w.ln(),
            MixingFamily::InverseGaussian => {
                -0.5 * (2.0 * std::f64::consts::PI * w.powi(3)).ln()
            }
            MixingFamily::Ghs => unreachable!("GHS carrier is out of scope"),
        }
    }

    /// Inverse of `d'`: solves `d'(phi) = x` for `phi > 0`.
    ///
    /// For the inverse Gaussian family this is `1/(2x)`. For the gamma
    /// family `d'(phi) = log phi + 1 - digamma(phi)` decreases strictly from
    /// infinity to 1, so the root is found by bisection-safeguarded Newton on
    /// a bracket that always contains it.
    pub(crate) fn v_inverse(self, x: f64) -> Result<f64> {
        match self {
            MixingFamily::InverseGaussian => {
                if x <= 0.0 {
                    return Err(Error::MStepDomain {
                        arg: x,
                        iteration: None,
                    });
                }
                Ok(0.5 / x)
            }
            MixingFamily::Gamma => {
                if x <= 1.0 {
                    // d' maps (0, inf) onto (1, inf); anything at or below 1
                    // cannot come from a valid E-step.
                    return Err(Error::MStepDomain {
                        arg: x,
                        iteration: None,
                    });
                }
                // d'(phi) ~ 1 + 1/(2 phi) for large phi and ~ 1/phi for
                // small phi; either gives a usable starting point.
                let mut lo = 1e-12;
                let mut hi = 1e12;
                let mut phi = if x > 2.0 {
                    1.0 / x
                } else {
                    0.5 / (x - 1.0)
                };
                for _ in 0..200 {
                    let f = self.d_prime(phi) - x;
                    if f > 0.0 {
                        lo = phi;
                    } else {
                        hi = phi;
                    }
                    let deriv = self.d_second(phi);
                    let step = f / deriv;
                    let mut next = phi - step;
                    if !(next > lo && next < hi) {
                        next = 0.5 * (lo + hi);
                    }
                    if (next - phi).abs() <= 1e-14 * phi.abs() {
                        phi = next;
                        break;
                    }
                    phi = next;
                }
                Ok(phi)
            }
            MixingFamily::Ghs => Err(Error::UnsupportedFamily {
                family: self,
                op: "v_inverse",
            }),
        }
    }
}

/// Density of the unit-mean latent `W_phi` at `w`.
///
/// Gamma: Gamma(shape `phi`, rate `phi`). Inverse Gaussian: mean 1, shape
/// `phi`. GHS is rejected: its density is out of scope.
pub fn mixing_pdf(fam: MixingFamily, phi: f64, w: f64) -> Result<f64> {
    mixing_log_pdf(fam, phi, w).map(f64::exp)
}

/// Log of [`mixing_pdf`], assembled from the exponential-family pieces.
pub fn mixing_log_pdf(fam: MixingFamily, phi: f64, w: f64) -> Result<f64> {
    if fam == MixingFamily::Ghs {
        return Err(Error::UnsupportedFamily {
            family: fam,
            op: "mixing_pdf",
        });
    }
    if !(phi > 0.0 && phi.is_finite()) {
        return Err(Error::domain("mixing_pdf", format!("phi = {phi}")));
    }
    if !(w > 0.0 && w.is_finite()) {
        return Err(Error::domain("mixing_pdf", format!("w = {w}")));
    }
    Ok(phi * (w * fam.xi0() - fam.b_at_xi0()) + fam.d(phi) + phi * fam.g(w) + fam.h(w))
}

/// Characteristic function of `W_phi` evaluated at the complex point `z`,
/// i.e. `exp(-phi [b(xi0) - b(xi0 + z/phi)])` — the analytic continuation
/// that both the observable law and the stability transform plug into.
pub(crate) fn mixing_cf_at(fam: MixingFamily, phi: f64, z: Complex64) -> Complex64 {
    let xi0 = Complex64::new(fam.xi0(), 0.0);
    (-phi * (fam.b_at_xi0() - fam.b_complex(xi0 + z / phi))).exp()
}

/// Characteristic function of `W_phi` at real `t`.
pub fn mixing_cf(fam: MixingFamily, phi: f64, t: f64) -> Complex64 {
    match fam {
        MixingFamily::Gamma | MixingFamily::InverseGaussian => {
            mixing_cf_at(fam, phi, Complex64::new(0.0, t))
        }
        // The principal-branch form along the imaginary offset:
        // psi_W(t) = (1 - i sinh(2t/phi))^(-phi/2); 1 - i sinh keeps a
        // positive real part, so the branch never jumps.
        MixingFamily::Ghs => {
            let s = (2.0 * t / phi).sinh();
            (Complex64::new(1.0, -s)).powf(-0.5 * phi)
        }
    }
}

/// One draw of the unit-mean latent `W_phi`.
pub fn sample_latent<R: Rng + ?Sized>(fam: MixingFamily, phi: f64, rng: &mut R) -> Result<f64> {
    match fam {
        MixingFamily::Gamma => {
            let d = GammaDist::new(phi, 1.0 / phi)
                .map_err(|e| Error::domain("sample_latent", e.to_string()))?;
            Ok(d.sample(rng))
        }
        MixingFamily::InverseGaussian => {
            let d = InverseGaussian::new(1.0, phi)
                .map_err(|e| Error::domain("sample_latent", e.to_string()))?;
            Ok(d.sample(rng))
        }
        MixingFamily::Ghs => Err(Error::UnsupportedFamily {
            family: fam,
            op: "sample_latent",
        }),
    }
}

/// Trigamma function `psi_1(x)` by recurrence plus the asymptotic series.
pub(crate) fn trigamma(x: f64) -> f64 {
    let mut x = x;
    let mut acc = 0.0;
    while x < 6.0 {
        acc += 1.0 / (x * x);
        x += 1.0;
    }
    let inv = 1.0 / x;
    let inv2 = inv * inv;
    // 1/x + 1/(2x^2) + 1/(6x^3) - 1/(30x^5) + 1/(42x^7) - 1/(30x^9)
    acc + inv * (1.0
        + inv * (0.5
            + inv * (1.0 / 6.0 + inv2 * (-1.0 / 30.0 + inv2 * (1.0 / 42.0 - inv2 / 30.0)))))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    #[test]
    fn unit_rate_exponential_density() {
        // Gamma with phi = 1 is the unit-rate exponential.
        let f = mixing_pdf(MixingFamily::Gamma, 1.0, 2.0).unwrap();
        assert!((f - (-2.0f64).exp()).abs() < 1e-15);
    }

    #[test]
    fn ig_density_spot_value() {
        // phi = 2, w = 1: sqrt(phi/(2 pi w^3)) e^{phi - phi (w + 1/w)/2} = 1/sqrt(pi)
        let f = mixing_pdf(MixingFamily::InverseGaussian, 2.0, 1.0).unwrap();
        assert!((f - 1.0 / std::f64::consts::PI.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn ghs_density_rejected() {
        let err = mixing_pdf(MixingFamily::Ghs, 1.0, 1.0).unwrap_err();
        assert!(matches!(err, Error::UnsupportedFamily { .. }));
    }

    #[test]
    fn cf_at_zero_is_one() {
        for fam in [
            MixingFamily::Gamma,
            MixingFamily::InverseGaussian,
            MixingFamily::Ghs,
        ] {
            let c = mixing_cf(fam, 2.0, 0.0);
            assert!((c - Complex64::new(1.0, 0.0)).norm() < 1e-15);
        }
    }

    #[test]
    fn gamma_cf_closed_form() {
        // phi = 2, t = 1: (1 - i/2)^{-2}
        let c = mixing_cf(MixingFamily::Gamma, 2.0, 1.0);
        let expect = Complex64::new(1.0, -0.5).powf(-2.0);
        assert!((c - expect).norm() < 1e-14);
    }

    #[test]
    fn ig_cf_closed_form() {
        // phi = 2, t = 1: exp(2 (1 - sqrt(1 - i)))
        let c = mixing_cf(MixingFamily::InverseGaussian, 2.0, 1.0);
        let expect = (2.0 * (Complex64::new(1.0, 0.0) - Complex64::new(1.0, -1.0).sqrt())).exp();
        assert!((c - expect).norm() < 1e-14);
    }

    #[test]
    fn unit_mean_via_cf_derivative() {
        // b'(xi0) = 1 in every family: psi'(0)/i = 1.
        let h = 1e-5;
        for fam in [
            MixingFamily::Gamma,
            MixingFamily::InverseGaussian,
            MixingFamily::Ghs,
        ] {
            let d = (mixing_cf(fam, 3.0, h) - mixing_cf(fam, 3.0, -h)) / (2.0 * h);
            assert!(
                (d / Complex64::i() - Complex64::new(1.0, 0.0)).norm() < 1e-8,
                "{fam:?}"
            );
        }
    }

    #[test]
    fn latent_samplers_have_unit_mean() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for fam in [MixingFamily::Gamma, MixingFamily::InverseGaussian] {
            let n = 200_000;
            let mean: f64 = (0..n)
                .map(|_| sample_latent(fam, 2.0, &mut rng).unwrap())
                .sum::<f64>()
                / n as f64;
            // Var(W) = b''(xi0)/phi = 1/2; 3 sigma band.
            assert!((mean - 1.0).abs() < 3.0 * (0.5f64 / n as f64).sqrt(), "{fam:?}: {mean}");
        }
        assert!(sample_latent(MixingFamily::Ghs, 2.0, &mut rng).is_err());
    }

    #[test]
    fn gamma_dprime_inverse_round_trips() {
        for &phi in &[0.05, 0.5, 1.0, 2.0, 17.0, 4000.0] {
            let x = MixingFamily::Gamma.d_prime(phi);
            let back = MixingFamily::Gamma.v_inverse(x).unwrap();
            assert!((back - phi).abs() < 1e-9 * phi, "phi={phi}, got {back}");
        }
        assert!(MixingFamily::Gamma.v_inverse(0.99).is_err());
        assert!(MixingFamily::InverseGaussian.v_inverse(-0.1).is_err());
    }

    #[test]
    fn trigamma_against_reflection() {
        // psi_1(x) + psi_1(1 - x) = pi^2 / sin^2(pi x)
        let x = 0.3;
        let lhs = trigamma(x) + trigamma(1.0 - x);
        let pi = std::f64::consts::PI;
        let rhs = (pi / (pi * x).sin()).powi(2);
        assert!((lhs - rhs).abs() < 1e-10 * rhs);
    }
}
