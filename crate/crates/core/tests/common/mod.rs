//! Shared oracles for the integration tests.
//!
//! Everything here is deliberately independent of the library's numerical
//! machinery: integrals use recursive adaptive Simpson (the crate uses a
//! uniform trapezoid), the Bessel oracle uses the `cosh` integral
//! representation (the crate uses Temme/continued fractions plus
//! recurrence), and posterior expectations are assembled from the raw
//! normal and latent densities.

#![allow(dead_code)]

use nef_core::{MixingFamily, NefParams};

/// Recursive adaptive Simpson with Richardson correction.
pub fn asimp(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    fn rec(
        f: &dyn Fn(f64) -> f64,
        a: f64,
        m: f64,
        b: f64,
        fa: f64,
        fm: f64,
        fb: f64,
        whole: f64,
        tol: f64,
        depth: u32,
    ) -> f64 {
        let lm = 0.5 * (a + m);
        let rm = 0.5 * (m + b);
        let flm = f(lm);
        let frm = f(rm);
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            left + right + delta / 15.0
        } else {
            rec(f, a, lm, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
                + rec(f, m, rm, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
        }
    }
    let m = 0.5 * (a + b);
    let (fa, fm, fb) = (f(a), f(m), f(b));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    rec(f, a, m, b, fa, fm, fb, whole, tol, 48)
}

/// Adaptive Simpson chained over a list of break points.
pub fn asimp_segments(f: &dyn Fn(f64) -> f64, pts: &[f64], tol: f64) -> f64 {
    pts.windows(2).map(|w| asimp(f, w[0], w[1], tol)).sum()
}

/// `log K_nu(x)` from `K_nu(x) = int_0^inf exp(-x cosh t) cosh(nu t) dt`,
/// peak-normalized so that large orders do not overflow.
pub fn ln_bessel_k_oracle(nu: f64, x: f64) -> f64 {
    let nu = nu.abs();
    // maximum of nu t - x cosh t
    let tstar = (nu / x).asinh();
    let m = nu * tstar - x * tstar.cosh();
    let ln_half = |t: f64| nu * t - x * t.cosh();
    // expand until both exponentials are negligible relative to the peak
    let mut hi = tstar + 1.0;
    while ln_half(hi) - m > -120.0 {
        hi += 1.0;
    }
    let g = |t: f64| {
        0.5 * ((ln_half(t) - m).exp() + (-nu * t - x * t.cosh() - m).exp())
    };
    let val = asimp_segments(&g, &[0.0, 0.5 * tstar, tstar, 0.5 * (tstar + hi), hi], 1e-14);
    m + val.ln()
}

/// Log joint density `log[N(y; mu w, sigma^2 w) f_W(w)]` written out from
/// scratch for the two estimable families.
pub fn log_joint(y: f64, p: &NefParams, fam: MixingFamily, w: f64) -> f64 {
    let (mu, s2, phi) = (p.mu, p.sigma2, p.phi);
    let ln_norm =
        -0.5 * (2.0 * std::f64::consts::PI * s2 * w).ln() - (y - mu * w).powi(2) / (2.0 * s2 * w);
    let ln_latent = match fam {
        MixingFamily::Gamma => {
            phi * phi.ln() - statrs::function::gamma::ln_gamma(phi) + (phi - 1.0) * w.ln()
                - phi * w
        }
        MixingFamily::InverseGaussian => {
            0.5 * (phi / (2.0 * std::f64::consts::PI * w.powi(3))).ln() + phi
                - 0.5 * phi * (w + 1.0 / w)
        }
        MixingFamily::Ghs => panic!("no GHS latent density"),
    };
    ln_norm + ln_latent
}

/// Posterior expectation `E[h(W) | Y = y]` by peak-normalized adaptive
/// Simpson in `s = log w`.
pub fn posterior_expect_oracle(
    y: f64,
    p: &NefParams,
    fam: MixingFamily,
    h: &dyn Fn(f64) -> f64,
) -> f64 {
    let l = |s: f64| log_joint(y, p, fam, s.exp()) + s;
    // coarse scan for the peak
    let mut m = f64::NEG_INFINITY;
    let mut smax = 0.0;
    let mut s = -40.0;
    while s <= 15.0 {
        let v = l(s);
        if v > m {
            m = v;
            smax = s;
        }
        s += 0.05;
    }
    let mut lo = smax;
    while l(lo) - m > -80.0 && lo > -900.0 {
        lo -= 0.5;
    }
    let mut hi = smax;
    while l(hi) - m > -80.0 && hi < 900.0 {
        hi += 0.5;
    }
    let num = asimp_segments(
        &|s: f64| (l(s) - m).exp() * h(s.exp()),
        &[lo, 0.5 * (lo + smax), smax, 0.5 * (smax + hi), hi],
        1e-13,
    );
    let den = asimp_segments(
        &|s: f64| (l(s) - m).exp(),
        &[lo, 0.5 * (lo + smax), smax, 0.5 * (smax + hi), hi],
        1e-13,
    );
    num / den
}

/// Observed-data log-density by integrating the joint, in log scale.
pub fn log_pdf_oracle(y: f64, p: &NefParams, fam: MixingFamily) -> f64 {
    let l = |s: f64| log_joint(y, p, fam, s.exp()) + s;
    let mut m = f64::NEG_INFINITY;
    let mut smax = 0.0;
    let mut s = -40.0;
    while s <= 15.0 {
        let v = l(s);
        if v > m {
            m = v;
            smax = s;
        }
        s += 0.05;
    }
    let mut lo = smax;
    while l(lo) - m > -90.0 && lo > -900.0 {
        lo -= 0.5;
    }
    let mut hi = smax;
    while l(hi) - m > -90.0 && hi < 900.0 {
        hi += 0.5;
    }
    let v = asimp_segments(
        &|s: f64| (l(s) - m).exp(),
        &[lo, 0.5 * (lo + smax), smax, 0.5 * (smax + hi), hi],
        1e-13,
    );
    m + v.ln()
}

pub fn rel_err(got: f64, expect: f64) -> f64 {
    (got - expect).abs() / expect.abs().max(f64::MIN_POSITIVE)
}

/// Central finite-difference gradient and Hessian of a scalar function of
/// three parameters, with per-coordinate steps.
pub fn fd_hessian(f: &dyn Fn(&[f64; 3]) -> f64, x: &[f64; 3], steps: &[f64; 3]) -> [[f64; 3]; 3] {
    let mut h = [[0.0; 3]; 3];
    let eval = |dx: [f64; 3]| {
        let mut p = *x;
        for i in 0..3 {
            p[i] += dx[i];
        }
        f(&p)
    };
    for i in 0..3 {
        for j in 0..3 {
            if i == j {
                let mut d = [0.0; 3];
                d[i] = steps[i];
                let up = eval(d);
                d[i] = -steps[i];
                let down = eval(d);
                h[i][i] = (up - 2.0 * f(x) + down) / (steps[i] * steps[i]);
            } else if j > i {
                let mut d = [0.0; 3];
                d[i] = steps[i];
                d[j] = steps[j];
                let pp = eval(d);
                d[j] = -steps[j];
                let pm = eval(d);
                d[i] = -steps[i];
                let mm = eval(d);
                d[j] = steps[j];
                let mp = eval(d);
                h[i][j] = (pp - pm - mp + mm) / (4.0 * steps[i] * steps[j]);
                h[j][i] = h[i][j];
            }
        }
    }
    h
}
