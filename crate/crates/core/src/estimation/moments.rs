//! Method-of-moments estimation from the first three raw moments.

use crate::error::{Error, Result};
use crate::mixing::MixingFamily;
use crate::nef::NefParams;
use serde::{Deserialize, Serialize};

/// A moment estimate plus a flag for the rare case where both quadratic
/// roots were admissible (the larger-`sigma2` root is returned then).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MmEstimate {
    pub params: NefParams,
    pub multiple_admissible: bool,
}

/// Method of moments from data.
///
/// `mu~ = M1`; `phi~` solves the quadratic
/// `(3 M1 M2 - 2 M1^3 - M3) phi^2 + b''(xi0)(3 M1 M2 - 3 M1^3) phi
///   + M1^3 (b'''(xi0) - 3 b''(xi0)^2) = 0`;
/// `sigma2~ = M2 - M1^2 (1 + b''(xi0)/phi~)`. The admissible root is the
/// positive real root giving `sigma2~ > 0`; with two admissible roots the
/// one with the larger `sigma2~` wins and [`MmEstimate::multiple_admissible`]
/// is set.
pub fn method_of_moments(data: &[f64], fam: MixingFamily) -> Result<MmEstimate> {
    if data.len() < 3 {
        return Err(Error::InsufficientData {
            op: "method_of_moments",
            needed: 3,
            got: data.len(),
        });
    }
    let n = data.len() as f64;
    let m1 = data.iter().sum::<f64>() / n;
    let m2 = data.iter().map(|y| y * y).sum::<f64>() / n;
    let m3 = data.iter().map(|y| y * y * y).sum::<f64>() / n;
    if m2 - m1 * m1 <= 0.0 {
        return Err(Error::domain(
            "method_of_moments",
            "sample variance must be positive",
        ));
    }
    method_of_moments_from_raw([m1, m2, m3], fam)
}

/// Method of moments from raw moments `[M1, M2, M3]` directly. Useful for
/// exactness checks against population moments.
pub fn method_of_moments_from_raw(m: [f64; 3], fam: MixingFamily) -> Result<MmEstimate> {
    let [m1, m2, m3] = m;
    let b2 = fam.b2();
    let b3 = fam.b3();
    let qa = 3.0 * m1 * m2 - 2.0 * m1.powi(3) - m3;
    let qb = b2 * (3.0 * m1 * m2 - 3.0 * m1.powi(3));
    let qc = m1.powi(3) * (b3 - 3.0 * b2 * b2);
    let scale = (3.0 * m1 * m2).abs() + 2.0 * m1.abs().powi(3) + m3.abs() + f64::MIN_POSITIVE;

    let mut roots: Vec<f64> = Vec::with_capacity(2);
    if qa.abs() <= 1e-12 * scale {
        // Degenerate leading coefficient (symmetric-looking data): the
        // quadratic collapses to a linear equation.
        if qb.abs() <= 1e-12 * scale {
            return Err(Error::MmInadmissible {
                detail: "moment quadratic degenerates to a constant".into(),
            });
        }
        roots.push(-qc / qb);
    } else {
        let disc = qb * qb - 4.0 * qa * qc;
        if disc < 0.0 {
            return Err(Error::MmInadmissible {
                detail: format!("complex roots (discriminant {disc:.6e})"),
            });
        }
        let sq = disc.sqrt();
        // Stable quadratic roots: q/a and c/q.
        let q = -0.5 * (qb + qb.signum() * sq);
        if q == 0.0 {
            roots.push(0.0);
        } else {
            roots.push(q / qa);
            roots.push(qc / q);
        }
    }

    let sigma2_of = |phi: f64| m2 - m1 * m1 * (1.0 + b2 / phi);
    let mut best: Option<(f64, f64)> = None;
    let mut admissible = 0usize;
    for &phi in &roots {
        if !(phi > 0.0 && phi.is_finite()) {
            continue;
        }
        let s2 = sigma2_of(phi);
        if !(s2 > 0.0 && s2.is_finite()) {
            continue;
        }
        admissible += 1;
        if best.map_or(true, |(_, s)| s2 > s) {
            best = Some((phi, s2));
        }
    }
    match best {
        Some((phi, s2)) => Ok(MmEstimate {
            params: NefParams::new(m1, s2, phi)?,
            multiple_admissible: admissible > 1,
        }),
        None => Err(Error::MmInadmissible {
            detail: format!("roots {roots:?} leave no positive (sigma2, phi) pair"),
        }),
    }
}
