//! Observed information via the conditional decomposition
//! `I(psi) = E[-d2 lc | Y] - E[dlc dlc^T | Y]`.
//!
//! Rather than transcribing the expanded double-sum displays (which are easy
//! to mistype), the score outer products are assembled from the
//! per-observation score contributions: conditionally on `Y` the latents are
//! independent, so `E[S S^T|Y] = sum_i Cov_i + (sum_i E s_i)(sum_i E s_i)^T`,
//! and every covariance is a small combination of the posterior moments in
//! an [`EStepRecord`].

use crate::error::{Error, Result};
use crate::estimation::em::{e_step, EStepRecord};
use crate::mixing::MixingFamily;
use crate::nef::NefParams;
use nalgebra::{Matrix3, Vector3};

/// The two Louis components, in parameter order `(mu, sigma2, phi)`:
/// the conditional expected negative complete-data Hessian, and the
/// conditional second moment of the complete-data score.
pub fn louis_components(
    data: &[f64],
    p: &NefParams,
    fam: MixingFamily,
) -> Result<(Matrix3<f64>, Matrix3<f64>)> {
    if fam == MixingFamily::Ghs {
        return Err(Error::UnsupportedFamily {
            family: fam,
            op: "observed_information",
        });
    }
    let records = e_step(data, p, fam, true)?;
    Ok(components_from_records(data, &records, p, fam))
}

fn components_from_records(
    data: &[f64],
    records: &[EStepRecord],
    p: &NefParams,
    fam: MixingFamily,
) -> (Matrix3<f64>, Matrix3<f64>) {
    let (mu, s2, phi) = (p.mu, p.sigma2, p.phi);
    let n = data.len() as f64;
    let xi0 = fam.xi0();
    let dp = fam.d_prime(phi);
    let b0 = fam.b_at_xi0();

    let mut sum_alpha = 0.0;
    let mut sum_resid = 0.0; // y^2 gamma - 2 mu y + mu^2 alpha
    let mut sum_y_mu_alpha = 0.0; // y - mu alpha
    let mut mean_score = Vector3::zeros();
    let mut cov = Matrix3::zeros();

    for (&y, r) in data.iter().zip(records) {
        let sec = r.second.expect("full e-step records");
        let (alpha, gamma, delta) = (r.alpha, r.gamma, r.delta);
        let (lambda2, tau, nu, rho, varphi) =
            (sec.lambda2, sec.tau, sec.nu, sec.rho, sec.varphi);

        sum_alpha += alpha;
        sum_resid += y * y * gamma - 2.0 * mu * y + mu * mu * alpha;
        sum_y_mu_alpha += y - mu * alpha;

        // Per-observation score contributions:
        //   s_mu    = (y - mu W) / s2
        //   s_sigma = -1/(2 s2) + (y^2/W - 2 mu y + mu^2 W) / (2 s2^2)
        //   s_phi   = d'(phi) - b(xi0) + xi0 W + g(W)
        mean_score[0] += (y - mu * alpha) / s2;
        mean_score[1] += -0.5 / s2 + (y * y * gamma - 2.0 * mu * y + mu * mu * alpha)
            / (2.0 * s2 * s2);
        mean_score[2] += dp - b0 + xi0 * alpha + delta;

        let var_w = lambda2 - alpha * alpha;
        let var_winv = rho - gamma * gamma;
        let cov_w_winv = 1.0 - alpha * gamma;
        let cov_w_g = tau - alpha * delta;
        let var_g = nu - delta * delta;
        let cov_winv_g = varphi - gamma * delta;

        let s4 = s2 * s2;
        cov[(0, 0)] += mu * mu * var_w / s4;
        cov[(1, 1)] += (y.powi(4) * var_winv
            + mu.powi(4) * var_w
            + 2.0 * y * y * mu * mu * cov_w_winv)
            / (4.0 * s4 * s4);
        cov[(2, 2)] += xi0 * xi0 * var_w + var_g + 2.0 * xi0 * cov_w_g;
        cov[(0, 1)] += -mu * (y * y * cov_w_winv + mu * mu * var_w) / (2.0 * s4 * s2);
        cov[(0, 2)] += -mu * (xi0 * var_w + cov_w_g) / s2;
        cov[(1, 2)] += (y * y * (xi0 * cov_w_winv + cov_winv_g)
            + mu * mu * (xi0 * var_w + cov_w_g))
            / (2.0 * s4);
    }
    cov[(1, 0)] = cov[(0, 1)];
    cov[(2, 0)] = cov[(0, 2)];
    cov[(2, 1)] = cov[(1, 2)];

    let s4 = s2 * s2;
    let mut hess = Matrix3::zeros();
    hess[(0, 0)] = sum_alpha / s2;
    hess[(1, 1)] = sum_resid / (s4 * s2) - 0.5 * n / s4;
    hess[(2, 2)] = -n * fam.d_second(phi);
    hess[(0, 1)] = sum_y_mu_alpha / s4;
    hess[(1, 0)] = hess[(0, 1)];
    // The mu-phi and sigma2-phi blocks of the conditional Hessian vanish
    // identically; the assembled information still couples them through the
    // score covariance.

    let score_sq = cov + mean_score * mean_score.transpose();
    (hess, score_sq)
}

/// Observed information matrix `I(psi)` in parameter order
/// `(mu, sigma2, phi)`. At a stationary point of the likelihood this equals
/// the negative Hessian of the observed log-likelihood.
pub fn observed_information(
    data: &[f64],
    p: &NefParams,
    fam: MixingFamily,
) -> Result<Matrix3<f64>> {
    let (hess, score_sq) = louis_components(data, p, fam)?;
    Ok(hess - score_sq)
}

/// Wald standard errors `sqrt(diag(I^-1))`, or `None` when the matrix is
/// singular or the inverse has nonpositive diagonal entries.
pub fn louis_std_errors(info: &Matrix3<f64>) -> Option<[f64; 3]> {
    let inv = info.try_inverse()?;
    let d = [inv[(0, 0)], inv[(1, 1)], inv[(2, 2)]];
    if d.iter().all(|&v| v > 0.0 && v.is_finite()) {
        Some([d[0].sqrt(), d[1].sqrt(), d[2].sqrt()])
    } else {
        None
    }
}

/// One-call helper: information at `p`, then standard errors.
pub(crate) fn louis_std_errors_at(
    data: &[f64],
    p: &NefParams,
    fam: MixingFamily,
) -> Result<Option<[f64; 3]>> {
    Ok(louis_std_errors(&observed_information(data, p, fam)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nef::sample_nef;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn conditional_hessian_cross_blocks_vanish() {
        let p = NefParams::new(1.0, 2.0, 1.5).unwrap();
        let data = [0.3, -1.0, 2.0, 0.9];
        for fam in [MixingFamily::Gamma, MixingFamily::InverseGaussian] {
            let (hess, _) = louis_components(&data, &p, fam).unwrap();
            assert_eq!(hess[(0, 2)], 0.0);
            assert_eq!(hess[(1, 2)], 0.0);
        }
    }

    #[test]
    fn information_is_symmetric_and_invertible_at_fit() {
        let truth = NefParams::new(3.0, 4.0, 2.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let data = sample_nef(&truth, MixingFamily::Gamma, 500, &mut rng).unwrap();
        let info = observed_information(&data, &truth, MixingFamily::Gamma).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                assert!((info[(i, j)] - info[(j, i)]).abs() < 1e-9 * info[(i, i)].abs().max(1.0));
            }
        }
        assert!(louis_std_errors(&info).is_some());
    }
}
