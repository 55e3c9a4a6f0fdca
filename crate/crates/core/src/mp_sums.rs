//! Mixed-Poisson counting laws and normalized random sums.
//!
//! A mixed-Poisson count draws `W` from the latent family and then
//! `N ~ Poisson(lambda W)`: negative binomial for the gamma latent, Poisson
//! inverse-Gaussian (PIG) for the inverse-Gaussian latent. The normalized
//! sum `(1/sqrt(lambda)) sum_{i<=N} (X_i + mu (1/sqrt(lambda) - 1))`
//! converges weakly to the NEF law with the summands' `(mu, sigma^2)` and
//! the latent's `phi`; [`ks_distance`] quantifies how close a sample is.

use crate::error::{Error, Result};
use crate::mixing::{self, MixingFamily};
use crate::nef::{self, NefParams};
use crate::quad;
use rand::{Rng, RngCore};
use rand_distr::{Distribution, Exp, Normal, Poisson};
use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

/// Rate and mixing parameters of a mixed-Poisson count.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MpCountParams {
    pub lambda: f64,
    pub phi: f64,
    pub family: MixingFamily,
}

impl MpCountParams {
    pub fn new(lambda: f64, phi: f64, family: MixingFamily) -> Result<Self> {
        if !(lambda > 0.0 && lambda.is_finite()) {
            return Err(Error::domain("MpCountParams::new", format!("lambda = {lambda}")));
        }
        if !(phi > 0.0 && phi.is_finite()) {
            return Err(Error::domain("MpCountParams::new", format!("phi = {phi}")));
        }
        Ok(Self { lambda, phi, family })
    }
}

/// The i.i.d. summand sequence: anything with a finite mean and variance
/// that can be drawn from. The two built-ins cover the standard demos.
pub trait Summand {
    fn mean(&self) -> f64;
    fn variance(&self) -> f64;
    fn draw(&self, rng: &mut dyn RngCore) -> f64;
}

/// Built-in summand distributions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum SummandSpec {
    Exponential { mean: f64 },
    Normal { mu: f64, sigma2: f64 },
}

impl SummandSpec {
    pub fn exponential(mean: f64) -> Result<Self> {
        if !(mean > 0.0 && mean.is_finite()) {
            return Err(Error::domain("SummandSpec", format!("mean = {mean}")));
        }
        Ok(SummandSpec::Exponential { mean })
    }

    pub fn normal(mu: f64, sigma2: f64) -> Result<Self> {
        if !(mu.is_finite() && sigma2 > 0.0 && sigma2.is_finite()) {
            return Err(Error::domain(
                "SummandSpec",
                format!("mu = {mu}, sigma2 = {sigma2}"),
            ));
        }
        Ok(SummandSpec::Normal { mu, sigma2 })
    }
}

impl Summand for SummandSpec {
    fn mean(&self) -> f64 {
        match *self {
            SummandSpec::Exponential { mean } => mean,
            SummandSpec::Normal { mu, .. } => mu,
        }
    }

    fn variance(&self) -> f64 {
        match *self {
            SummandSpec::Exponential { mean } => mean * mean,
            SummandSpec::Normal { sigma2, .. } => sigma2,
        }
    }

    fn draw(&self, rng: &mut dyn RngCore) -> f64 {
        match *self {
            SummandSpec::Exponential { mean } => {
                Exp::new(1.0 / mean).expect("validated").sample(rng)
            }
            SummandSpec::Normal { mu, sigma2 } => {
                Normal::new(mu, sigma2.sqrt()).expect("validated").sample(rng)
            }
        }
    }
}

/// The NEF limit law of the normalized sum built from these counts and
/// summands.
pub fn limit_params(c: &MpCountParams, s: &dyn Summand) -> Result<NefParams> {
    NefParams::new(s.mean(), s.variance(), c.phi)
}

/// Probability mass at `n`.
///
/// The negative binomial case has the classical closed form. The PIG case is
/// integrated from the Poisson-IG mixture by log-domain quadrature: the
/// integrand is exactly a GIG kernel, so the quadrature is exact to
/// tolerance and independent of any tabulated closed expression.
pub fn mp_pmf(c: &MpCountParams, n: u64) -> Result<f64> {
    let (lambda, phi) = (c.lambda, c.phi);
    match c.family {
        MixingFamily::Gamma => {
            let nf = n as f64;
            Ok((ln_gamma(nf + phi) - ln_gamma(nf + 1.0) - ln_gamma(phi)
                + nf * (lambda.ln() - (lambda + phi).ln())
                + phi * (phi.ln() - (lambda + phi).ln()))
            .exp())
        }
        MixingFamily::InverseGaussian => {
            let nf = n as f64;
            // log integrand in s = log w, Jacobian included:
            // const + (n - 1/2) s - ((2 lambda + phi) e^s + phi e^{-s}) / 2
            let const_part =
                nf * lambda.ln() - ln_gamma(nf + 1.0) + phi
                    + 0.5 * (phi / (2.0 * std::f64::consts::PI)).ln();
            let p = nf - 0.5;
            let a = 2.0 * lambda + phi;
            let b = phi;
            let guess = ((p + (p * p + a * b).sqrt()) / a).ln();
            let log_int = quad::log_integral_exp(
                move |s| p * s - 0.5 * (a * s.exp() + b * (-s).exp()),
                guess,
            );
            Ok((const_part + log_int).exp())
        }
        MixingFamily::Ghs => Err(Error::UnsupportedFamily {
            family: c.family,
            op: "mp_pmf",
        }),
    }
}

/// One draw of the mixed-Poisson count: `W` from the latent family, then
/// `Poisson(lambda W)`. Exact by construction for any `lambda, phi`.
pub fn sample_mp_count<R: Rng + ?Sized>(c: &MpCountParams, rng: &mut R) -> Result<u64> {
    let w = mixing::sample_latent(c.family, c.phi, rng)?;
    let rate = c.lambda * w;
    let d = Poisson::new(rate).map_err(|e| Error::domain("sample_mp_count", e.to_string()))?;
    let draw: f64 = d.sample(rng);
    Ok(draw.round() as u64)
}

/// One draw of the normalized sum
/// `S = (1/sqrt(lambda)) sum_{i=1}^{N} (X_i + mu (1/sqrt(lambda) - 1))`,
/// with `S = 0` when `N = 0`.
pub fn sample_normalized_sum<R: Rng>(
    c: &MpCountParams,
    s: &dyn Summand,
    rng: &mut R,
) -> Result<f64> {
    let n = sample_mp_count(c, rng)?;
    if n == 0 {
        return Ok(0.0);
    }
    let a = 1.0 / c.lambda.sqrt();
    let d = s.mean() * (a - 1.0);
    let mut acc = 0.0;
    for _ in 0..n {
        acc += s.draw(rng) + d;
    }
    Ok(a * acc)
}

/// Kolmogorov-Smirnov distance between the empirical CDF of `sample` and
/// the NEF CDF, the latter integrated from [`nef::nef_pdf`] on a fine grid.
pub fn ks_distance(sample: &[f64], p: &NefParams, fam: MixingFamily) -> Result<f64> {
    if sample.is_empty() {
        return Err(Error::domain("ks_distance", "empty sample"));
    }
    let mut sorted = sample.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("non-NaN sample"));
    let cdf = NefCdf::build(p, fam, sorted[0], sorted[sorted.len() - 1])?;
    let n = sorted.len() as f64;
    let mut dist: f64 = 0.0;
    for (i, &x) in sorted.iter().enumerate() {
        let f = cdf.eval(x);
        let above = (i as f64 + 1.0) / n - f;
        let below = f - i as f64 / n;
        dist = dist.max(above).max(below);
    }
    Ok(dist.clamp(0.0, 1.0))
}

/// Tabulated CDF of a NEF law on a fixed grid, linearly interpolated.
pub(crate) struct NefCdf {
    lo: f64,
    step: f64,
    values: Vec<f64>,
}

impl NefCdf {
    const POINTS: usize = 20_001;

    pub(crate) fn build(
        p: &NefParams,
        fam: MixingFamily,
        sample_lo: f64,
        sample_hi: f64,
    ) -> Result<Self> {
        let k = nef::nef_cumulants(p, fam);
        let spread = 40.0 * k[1].sqrt();
        let lo = (p.mu - spread).min(sample_lo - k[1].sqrt());
        let hi = (p.mu + spread).max(sample_hi + k[1].sqrt());
        let step = (hi - lo) / (Self::POINTS - 1) as f64;
        let mut pdf = Vec::with_capacity(Self::POINTS);
        for i in 0..Self::POINTS {
            pdf.push(nef::nef_pdf(p, fam, lo + i as f64 * step)?);
        }
        let mut values = Vec::with_capacity(Self::POINTS);
        let mut acc = 0.0;
        values.push(0.0);
        for i in 1..Self::POINTS {
            acc += 0.5 * (pdf[i - 1] + pdf[i]) * step;
            values.push(acc.min(1.0));
        }
        Ok(Self { lo, step, values })
    }

    pub(crate) fn eval(&self, x: f64) -> f64 {
        let pos = (x - self.lo) / self.step;
        if pos <= 0.0 {
            return 0.0;
        }
        let last = (self.values.len() - 1) as f64;
        if pos >= last {
            return 1.0;
        }
        let i = pos.floor() as usize;
        let frac = pos - i as f64;
        self.values[i] + frac * (self.values[i + 1] - self.values[i])
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn nb_pmf_geometric_case() {
        // lambda = 2, phi = 1, n = 0: (phi/(lambda+phi))^phi = 1/3.
        let c = MpCountParams::new(2.0, 1.0, MixingFamily::Gamma).unwrap();
        assert!((mp_pmf(&c, 0).unwrap() - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn pmf_normalizes() {
        for fam in [MixingFamily::Gamma, MixingFamily::InverseGaussian] {
            let c = MpCountParams::new(2.0, 2.0, fam).unwrap();
            let mut total = 0.0;
            for n in 0..200 {
                total += mp_pmf(&c, n).unwrap();
            }
            assert!((total - 1.0).abs() < 1e-10, "{fam:?}: {total}");
        }
    }

    #[test]
    fn pig_mean_is_lambda() {
        let c = MpCountParams::new(2.0, 2.0, MixingFamily::InverseGaussian).unwrap();
        let mut mean = 0.0;
        for n in 0..200 {
            mean += n as f64 * mp_pmf(&c, n).unwrap();
        }
        assert!((mean - 2.0).abs() < 1e-8, "{mean}");
    }

    #[test]
    fn count_sampling_reproducible() {
        let c = MpCountParams::new(30.0, 2.0, MixingFamily::Gamma).unwrap();
        let mut a = ChaCha8Rng::seed_from_u64(5);
        let mut b = ChaCha8Rng::seed_from_u64(5);
        let xs: Vec<u64> = (0..50).map(|_| sample_mp_count(&c, &mut a).unwrap()).collect();
        let ys: Vec<u64> = (0..50).map(|_| sample_mp_count(&c, &mut b).unwrap()).collect();
        assert_eq!(xs, ys);
    }

    #[test]
    fn zero_count_gives_zero_sum() {
        // With lambda tiny, N = 0 almost always; the sum must be exactly 0.
        let c = MpCountParams::new(1e-9, 2.0, MixingFamily::Gamma).unwrap();
        let s = SummandSpec::exponential(1.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..20 {
            assert_eq!(sample_normalized_sum(&c, &s, &mut rng).unwrap(), 0.0);
        }
    }

    #[test]
    fn zero_mean_summand_drops_the_shift() {
        // With mu = 0 the shift d vanishes, so the sum is exactly
        // (1/sqrt(lambda)) * sum X_i; replay the stream to check.
        let c = MpCountParams::new(40.0, 2.0, MixingFamily::Gamma).unwrap();
        let s = SummandSpec::normal(0.0, 1.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let v = sample_normalized_sum(&c, &s, &mut rng).unwrap();
        let mut replay = ChaCha8Rng::seed_from_u64(11);
        let n = sample_mp_count(&c, &mut replay).unwrap();
        let mut acc = 0.0;
        for _ in 0..n {
            acc += s.draw(&mut replay);
        }
        assert_eq!(v, acc / c.lambda.sqrt());
    }

    #[test]
    fn ks_of_constant_sample_is_at_least_half() {
        let p = NefParams::new(1.0, 1.0, 2.0).unwrap();
        let sample = vec![0.7; 64];
        let d = ks_distance(&sample, &p, MixingFamily::Gamma).unwrap();
        assert!(d >= 0.5);
    }

    #[test]
    fn ks_rejects_empty_sample() {
        let p = NefParams::new(1.0, 1.0, 2.0).unwrap();
        assert!(ks_distance(&[], &p, MixingFamily::Gamma).is_err());
    }
}
