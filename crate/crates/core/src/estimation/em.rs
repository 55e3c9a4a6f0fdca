//! E-step posterior expectations, M-step closed-form updates, and the EM
//! driver.
//!
//! Given `Y = y`, the latent `W` has a GIG posterior in both estimable
//! families:
//!
//! * gamma latent: `GIG(mu^2/sigma^2 + 2 phi, y^2/sigma^2, phi - 1/2)`,
//! * inverse-Gaussian latent: `GIG(mu^2/sigma^2 + phi, y^2/sigma^2 + phi, -1)`,
//!
//! so every conditional expectation is a Bessel ratio, an order-derivative
//! of `log K`, or (for the squared-log moment, which has no closed form) a
//! GIG quadrature.

use crate::error::{Error, Result};
use crate::mixing::MixingFamily;
use crate::nef::NefParams;
use crate::special::{dlog_bessel_k_dorder, gig_moment, log_bessel_k, GigParams};
use crate::estimation::{loglik, FitMethod, FitResult};
use crate::estimation::method_of_moments;
use crate::estimation::information::louis_std_errors_at;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::digamma;

/// Per-observation posterior expectations.
///
/// `alpha = E[W|y]`, `gamma = E[1/W|y]`, `delta = E[g(W)|y]` feed the EM
/// update; the second-order block feeds the information matrix and is filled
/// only on request.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EStepRecord {
    pub alpha: f64,
    pub gamma: f64,
    pub delta: f64,
    pub second: Option<EStepSecondMoments>,
}

/// `lambda2 = E[W^2|y]`, `tau = E[W g(W)|y]`, `nu = E[g(W)^2|y]`,
/// `rho = E[W^-2|y]`, `varphi = E[g(W)/W|y]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EStepSecondMoments {
    pub lambda2: f64,
    pub tau: f64,
    pub nu: f64,
    pub rho: f64,
    pub varphi: f64,
}

/// Posterior expectations for every observation. With `full = false` only
/// the EM block `(alpha, gamma, delta)` is computed.
pub fn e_step(
    data: &[f64],
    p: &NefParams,
    fam: MixingFamily,
    full: bool,
) -> Result<Vec<EStepRecord>> {
    match fam {
        MixingFamily::Gamma => data.iter().map(|&y| e_step_gamma(y, p, full)).collect(),
        MixingFamily::InverseGaussian => {
            data.iter().map(|&y| e_step_ig(y, p, full)).collect()
        }
        MixingFamily::Ghs => Err(Error::UnsupportedFamily {
            family: fam,
            op: "e_step",
        }),
    }
}

fn e_step_gamma(y: f64, p: &NefParams, full: bool) -> Result<EStepRecord> {
    let (mu, s2, phi) = (p.mu, p.sigma2, p.phi);
    let a = mu * mu / s2 + 2.0 * phi;
    let b = y * y / s2;
    let ord = phi - 0.5;
    if b == 0.0 {
        // y = 0 collapses the posterior to Gamma(ord, rate a/2); the inverse
        // moments only exist for large enough phi.
        return e_step_gamma_limit(a, ord, full);
    }
    let z = (a * b).sqrt();
    let half_log_ba = 0.5 * (b.ln() - a.ln());
    let lk = log_bessel_k(ord, z)?;
    let alpha = (half_log_ba + log_bessel_k(ord + 1.0, z)? - lk).exp();
    let gamma = (-half_log_ba + log_bessel_k(ord - 1.0, z)? - lk).exp();
    let delta = half_log_ba + dlog_bessel_k_dorder(ord, z)?;
    let second = if full {
        let lambda2 = (2.0 * half_log_ba + log_bessel_k(ord + 2.0, z)? - lk).exp();
        let rho = (-2.0 * half_log_ba + log_bessel_k(ord - 2.0, z)? - lk).exp();
        let tau = alpha * (half_log_ba + dlog_bessel_k_dorder(ord + 1.0, z)?);
        let varphi = gamma * (half_log_ba + dlog_bessel_k_dorder(ord - 1.0, z)?);
        // E[(log W)^2 | y] has no Bessel closed form; quadrature it is.
        let nu = gig_moment(&GigParams::new(a, b, ord)?, 0, 2)?;
        Some(EStepSecondMoments {
            lambda2,
            tau,
            nu,
            rho,
            varphi,
        })
    } else {
        None
    };
    Ok(EStepRecord {
        alpha,
        gamma,
        delta,
        second,
    })
}

/// Gamma-posterior limit at `y = 0`. Requires the involved moments to
/// exist: `E[W^-1]` needs `ord > 1`, `E[W^-2]` needs `ord > 2`.
fn e_step_gamma_limit(a: f64, ord: f64, full: bool) -> Result<EStepRecord> {
    let half_a = 0.5 * a;
    let need = |cond: bool, what: &str| {
        if cond {
            Ok(())
        } else {
            Err(Error::domain(
                "e_step",
                format!("{what} does not exist at y = 0 with phi = {}", ord + 0.5),
            ))
        }
    };
    need(ord > 0.0, "the posterior")?;
    need(ord > 1.0, "E[1/W | y]")?;
    let alpha = ord / half_a;
    let gamma = half_a / (ord - 1.0);
    let delta = digamma(ord) - half_a.ln();
    let second = if full {
        need(ord > 2.0, "E[1/W^2 | y]")?;
        let lambda2 = ord * (ord + 1.0) / (half_a * half_a);
        let rho = half_a * half_a / ((ord - 1.0) * (ord - 2.0));
        let tau = alpha * (digamma(ord + 1.0) - half_a.ln());
        let varphi = gamma * (digamma(ord - 1.0) - half_a.ln());
        let mean_log = digamma(ord) - half_a.ln();
        let nu = crate::mixing::trigamma(ord) + mean_log * mean_log;
        Some(EStepSecondMoments {
            lambda2,
            tau,
            nu,
            rho,
            varphi,
        })
    } else {
        None
    };
    Ok(EStepRecord {
        alpha,
        gamma,
        delta,
        second,
    })
}

fn e_step_ig(y: f64, p: &NefParams, full: bool) -> Result<EStepRecord> {
    let (mu, s2, phi) = (p.mu, p.sigma2, p.phi);
    let a = mu * mu / s2 + phi;
    let b = y * y / s2 + phi;
    let z = (a * b).sqrt();
    let half_log_ba = 0.5 * (b.ln() - a.ln());
    let lk1 = log_bessel_k(1.0, z)?;
    let alpha = (half_log_ba + log_bessel_k(0.0, z)? - lk1).exp();
    let gamma = (-half_log_ba + log_bessel_k(2.0, z)? - lk1).exp();
    // g(w) = -1/(2w) makes delta, tau, nu, varphi elementary:
    let delta = -0.5 * gamma;
    let second = if full {
        let lambda2 = b / a;
        let rho = (a / b) * (log_bessel_k(3.0, z)? - lk1).exp();
        Some(EStepSecondMoments {
            lambda2,
            tau: -0.5,
            nu: 0.25 * rho,
            rho,
            // E[g(W)/W | y] = -rho/2: the expectation of a negative quantity
            // is negative, whatever sign convention a tabulation uses.
            varphi: -0.5 * rho,
        })
    } else {
        None
    };
    Ok(EStepRecord {
        alpha,
        gamma,
        delta,
        second,
    })
}

/// Closed-form M-step update.
pub fn m_step(data: &[f64], estep: &[EStepRecord], fam: MixingFamily) -> Result<NefParams> {
    if data.len() != estep.len() || data.is_empty() {
        return Err(Error::domain(
            "m_step",
            "E-step records must align with the data",
        ));
    }
    if fam == MixingFamily::Ghs {
        return Err(Error::UnsupportedFamily {
            family: fam,
            op: "m_step",
        });
    }
    let n = data.len() as f64;
    let sum_y: f64 = data.iter().sum();
    let sum_alpha: f64 = estep.iter().map(|r| r.alpha).sum();
    let mu = sum_y / sum_alpha;
    let sigma2 = data
        .iter()
        .zip(estep)
        .map(|(&y, r)| y * y * r.gamma - 2.0 * mu * y + mu * mu * r.alpha)
        .sum::<f64>()
        / n;
    if !(sigma2 > 0.0 && sigma2.is_finite()) {
        return Err(Error::domain(
            "m_step",
            format!("scale update produced sigma2 = {sigma2}"),
        ));
    }
    let mean_delta = estep.iter().map(|r| r.delta).sum::<f64>() / n;
    let arg = fam.b_at_xi0() - fam.xi0() * (sum_alpha / n) - mean_delta;
    let phi = fam.v_inverse(arg)?;
    NefParams::new(mu, sigma2, phi)
}

/// EM stopping rule and iteration cap.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EmOptions {
    /// Relative-norm convergence threshold on the parameter vector.
    pub epsilon: f64,
    pub max_iter: usize,
}

impl Default for EmOptions {
    fn default() -> Self {
        Self {
            epsilon: 1e-4,
            max_iter: 500,
        }
    }
}

/// Maximum-likelihood fit by EM.
///
/// Starts from `init` when given, otherwise from the method of moments,
/// falling back to `(M1, sample variance, 1)` when the moment estimate is
/// inadmissible. Stops when `||psi_new - psi_old|| / ||psi_old|| < epsilon`
/// or after `max_iter` iterations; the observed log-likelihood is recorded
/// at the start and after every update. Louis standard errors are attached
/// at the final estimate when the information matrix is invertible.
pub fn em_fit(
    data: &[f64],
    fam: MixingFamily,
    init: Option<NefParams>,
    opts: &EmOptions,
) -> Result<FitResult> {
    if data.len() < 3 {
        return Err(Error::InsufficientData {
            op: "em_fit",
            needed: 3,
            got: data.len(),
        });
    }
    let start = match init {
        Some(p) => p,
        None => match method_of_moments(data, fam) {
            Ok(est) => est.params,
            Err(_) => fallback_init(data)?,
        },
    };
    let mut current = start;
    let mut trace = vec![loglik(data, &current, fam)?];
    let mut converged = false;
    let mut iterations = 0;
    for r in 0..opts.max_iter {
        let records = e_step(data, &current, fam, false)?;
        let next = m_step(data, &records, fam).map_err(|e| match e {
            Error::MStepDomain { arg, .. } => Error::MStepDomain {
                arg,
                iteration: Some(r),
            },
            other => other,
        })?;
        trace.push(loglik(data, &next, fam)?);
        iterations = r + 1;
        let old = current.as_array();
        let new = next.as_array();
        let diff: f64 = old
            .iter()
            .zip(&new)
            .map(|(o, n)| (o - n) * (o - n))
            .sum::<f64>()
            .sqrt();
        let norm: f64 = old.iter().map(|o| o * o).sum::<f64>().sqrt();
        current = next;
        if diff / norm < opts.epsilon {
            converged = true;
            break;
        }
    }
    let std_errors = louis_std_errors_at(data, &current, fam).ok().flatten();
    Ok(FitResult {
        params: current,
        std_errors,
        loglik_trace: trace,
        iterations,
        converged,
        method: FitMethod::Em,
    })
}

fn fallback_init(data: &[f64]) -> Result<NefParams> {
    let n = data.len() as f64;
    let mean = data.iter().sum::<f64>() / n;
    let var = data.iter().map(|y| (y - mean) * (y - mean)).sum::<f64>() / (n - 1.0);
    NefParams::new(mean, var, 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nef::sample_nef;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn ig_tau_is_exactly_minus_half() {
        let p = NefParams::new(1.2, 0.8, 2.0).unwrap();
        let recs = e_step(&[0.3, -1.0, 4.0], &p, MixingFamily::InverseGaussian, true).unwrap();
        for r in recs {
            assert_eq!(r.second.unwrap().tau, -0.5);
            assert!(r.alpha * r.gamma >= 1.0);
        }
    }

    #[test]
    fn gamma_records_satisfy_cauchy_schwarz() {
        let p = NefParams::new(3.0, 4.0, 2.0).unwrap();
        let ys = [-2.0, -0.1, 0.5, 1.0, 7.0];
        let recs = e_step(&ys, &p, MixingFamily::Gamma, true).unwrap();
        for r in &recs {
            let s = r.second.unwrap();
            assert!(r.alpha * r.gamma >= 1.0);
            assert!(s.lambda2 >= r.alpha * r.alpha - 1e-12);
            assert!(s.rho >= r.gamma * r.gamma - 1e-12);
            assert!(s.nu >= r.delta * r.delta - 1e-12);
        }
    }

    #[test]
    fn gamma_zero_observation_needs_enough_dispersion() {
        // ord = phi - 1/2: gamma = E[1/W|0] exists only for phi > 3/2.
        let small = NefParams::new(1.0, 1.0, 1.2).unwrap();
        assert!(e_step(&[0.0], &small, MixingFamily::Gamma, false).is_err());
        let big = NefParams::new(1.0, 1.0, 4.0).unwrap();
        assert!(e_step(&[0.0], &big, MixingFamily::Gamma, false).is_ok());
        assert!(e_step(&[0.0], &big, MixingFamily::Gamma, true).is_ok());
        let mid = NefParams::new(1.0, 1.0, 2.2).unwrap();
        // rho needs phi > 5/2.
        assert!(e_step(&[0.0], &mid, MixingFamily::Gamma, false).is_ok());
        assert!(e_step(&[0.0], &mid, MixingFamily::Gamma, true).is_err());
    }

    #[test]
    fn ig_phi_update_matches_alpha_gamma_form() {
        // v(-1 + mean(alpha)/2 + mean(gamma)/2) for the IG family.
        let p = NefParams::new(0.5, 1.5, 1.3).unwrap();
        let data = [0.4, -0.2, 2.0, 1.0];
        let recs = e_step(&data, &p, MixingFamily::InverseGaussian, false).unwrap();
        let next = m_step(&data, &recs, MixingFamily::InverseGaussian).unwrap();
        let ma = recs.iter().map(|r| r.alpha).sum::<f64>() / 4.0;
        let mg = recs.iter().map(|r| r.gamma).sum::<f64>() / 4.0;
        let expect = 0.5 / (-1.0 + 0.5 * ma + 0.5 * mg);
        assert!((next.phi - expect).abs() < 1e-12 * expect);
    }

    #[test]
    fn em_trace_is_monotone() {
        let truth = NefParams::new(3.0, 4.0, 2.0).unwrap();
        for fam in [MixingFamily::Gamma, MixingFamily::InverseGaussian] {
            let mut rng = ChaCha8Rng::seed_from_u64(123);
            let data = sample_nef(&truth, fam, 400, &mut rng).unwrap();
            let fit = em_fit(&data, fam, None, &EmOptions::default()).unwrap();
            assert!(fit.converged, "{fam:?}");
            for w in fit.loglik_trace.windows(2) {
                assert!(w[1] >= w[0] - 1e-8, "{fam:?}: {} -> {}", w[0], w[1]);
            }
        }
    }

    #[test]
    fn em_is_scale_equivariant() {
        let truth = NefParams::new(1.0, 1.0, 2.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        let data = sample_nef(&truth, MixingFamily::Gamma, 300, &mut rng).unwrap();
        let c = 2.5;
        let scaled: Vec<f64> = data.iter().map(|y| c * y).collect();
        let opts = EmOptions {
            epsilon: 1e-10,
            max_iter: 2000,
        };
        let base = em_fit(&data, MixingFamily::Gamma, None, &opts).unwrap();
        let big = em_fit(&scaled, MixingFamily::Gamma, None, &opts).unwrap();
        assert!((big.params.mu - c * base.params.mu).abs() < 1e-6 * base.params.mu.abs());
        assert!((big.params.sigma2 - c * c * base.params.sigma2).abs() < 1e-6 * base.params.sigma2);
        assert!((big.params.phi - base.params.phi).abs() < 1e-6 * base.params.phi);
    }
}
