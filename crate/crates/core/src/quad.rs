//! Log-domain quadrature over the real line.
//!
//! All continuous integrals in this crate are taken over `(0, inf)` in a
//! variable `u` and become integrals over the real line after the
//! substitution `u = exp(s)`. The transformed integrands decay at least
//! exponentially in `|s|`, so a uniform trapezoidal rule on a window around
//! the maximum converges geometrically. Everything is carried in log scale:
//! the caller supplies `f(s) = log(integrand(s))` and gets back
//! `log(integral exp(f))`.

/// Step size of the trapezoidal rule. For integrands of the kind handled
/// here (double- or single-exponential decay, analytic on a strip) the
/// discretization error at this step is far below 1e-12 relative.
const STEP: f64 = 0.02;

/// Stop expanding the window once the integrand has dropped this many nats
/// below its maximum.
const DROP: f64 = 60.0;

/// Widest half-window we are willing to scan, in units of `s`.
const MAX_HALF_WIDTH: f64 = 6.0e3;

/// Locates the maximum of a unimodal `f` starting from `guess`.
fn refine_max<F: Fn(f64) -> f64>(f: &F, guess: f64) -> f64 {
    let mut s = guess;
    let mut f_best = f(s);
    // If the guess landed in a region where the integrand underflows to
    // -inf, walk toward finite values first.
    let mut probe = 1.0;
    while !f_best.is_finite() && probe < MAX_HALF_WIDTH {
        let (l, r) = (f(s - probe), f(s + probe));
        if l.is_finite() || r.is_finite() {
            if r >= l {
                s += probe;
            } else {
                s -= probe;
            }
            f_best = f(s);
        } else {
            probe *= 2.0;
        }
    }
    let mut step = 1.0;
    for _ in 0..200 {
        let fl = f(s - step);
        let fr = f(s + step);
        if fr > f_best && fr >= fl {
            s += step;
            f_best = fr;
        } else if fl > f_best {
            s -= step;
            f_best = fl;
        } else {
            step *= 0.5;
            if step < 1e-4 {
                break;
            }
        }
    }
    s
}

fn expand<F: Fn(f64) -> f64>(f: &F, from: f64, fmax: f64, dir: f64) -> f64 {
    let mut s = from;
    let mut step = 0.5;
    while f(s) > fmax - DROP {
        s += dir * step;
        step = (step * 1.25).min(16.0);
        if (s - from).abs() > MAX_HALF_WIDTH {
            break;
        }
    }
    s
}

/// Returns `log( integral over R of exp(f(s)) ds )`.
///
/// `guess` should be near the maximizer of `f`; an analytic mode is ideal
/// but any point within a few units works.
pub fn log_integral_exp<F: Fn(f64) -> f64>(f: F, guess: f64) -> f64 {
    let smax = refine_max(&f, guess);
    let fmax = f(smax);
    if !fmax.is_finite() {
        return f64::NEG_INFINITY;
    }
    let lo = expand(&f, smax, fmax, -1.0);
    let hi = expand(&f, smax, fmax, 1.0);
    let n = (((hi - lo) / STEP).ceil() as usize).max(8);
    let h = (hi - lo) / n as f64;
    let mut sum = 0.0;
    for i in 0..=n {
        let w = if i == 0 || i == n { 0.5 } else { 1.0 };
        sum += w * (f(lo + i as f64 * h) - fmax).exp();
    }
    fmax + (sum * h).ln()
}

/// Returns `E[w(s)]` where `s` has density proportional to `exp(f(s))`.
///
/// Numerator and denominator are accumulated on the same grid, so the ratio
/// is insensitive to the window and step choices.
pub fn expect_exp<F: Fn(f64) -> f64, W: Fn(f64) -> f64>(f: F, weight: W, guess: f64) -> f64 {
    let smax = refine_max(&f, guess);
    let fmax = f(smax);
    if !fmax.is_finite() {
        return f64::NAN;
    }
    let lo = expand(&f, smax, fmax, -1.0);
    let hi = expand(&f, smax, fmax, 1.0);
    let n = (((hi - lo) / STEP).ceil() as usize).max(8);
    let h = (hi - lo) / n as f64;
    let mut num = 0.0;
    let mut den = 0.0;
    for i in 0..=n {
        let w = if i == 0 || i == n { 0.5 } else { 1.0 };
        let s = lo + i as f64 * h;
        let e = w * (f(s) - fmax).exp();
        num += e * weight(s);
        den += e;
    }
    num / den
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gaussian_normalizer() {
        // integral exp(-s^2/2) = sqrt(2 pi)
        let v = log_integral_exp(|s| -0.5 * s * s, 0.0);
        let expect = 0.5 * (2.0 * std::f64::consts::PI).ln();
        assert!((v - expect).abs() < 1e-12, "{v} vs {expect}");
    }

    #[test]
    fn gamma_normalizer_shifted_mode() {
        // integral over (0,inf) of u^{4} e^{-u} du/u = Gamma(4) = 6, via u = e^s
        let v = log_integral_exp(|s| 4.0 * s - s.exp(), 30.0);
        assert!((v - 6.0f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn expectation_matches_moment() {
        // E[s] under exp(-(s-3)^2/2) is 3.
        let m = expect_exp(|s| -0.5 * (s - 3.0) * (s - 3.0), |s| s, 0.0);
        assert!((m - 3.0).abs() < 1e-12);
    }
}
