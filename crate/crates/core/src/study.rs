//! Monte Carlo study harness: replicate sampling, moment initialization, EM
//! fitting and Louis standard errors, with deterministic per-replica random
//! streams.

use crate::error::Result;
use crate::estimation::{em_fit, method_of_moments, EmOptions};
use crate::mixing::MixingFamily;
use crate::nef::{sample_nef, NefParams};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// The stream-splitting rule used by every study and demo in this crate:
/// the master seed keys the cipher and the replica index selects the ChaCha
/// stream, so replicas are independent and the set of draws does not depend
/// on how the replicas are scheduled across threads.
pub fn replica_rng(master_seed: u64, replica: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(replica);
    rng
}

/// Draws `replicas` normalized mixed-Poisson sums for one sweep entry.
/// Entry `sweep_index` of a lambda sweep uses the ChaCha stream of the same
/// index, so sweeps are reproducible entry by entry.
pub fn sums_demo_sample(
    counts: &crate::mp_sums::MpCountParams,
    summand: &crate::mp_sums::SummandSpec,
    replicas: usize,
    seed: u64,
    sweep_index: u64,
) -> Result<Vec<f64>> {
    let mut rng = replica_rng(seed, sweep_index);
    (0..replicas)
        .map(|_| crate::mp_sums::sample_normalized_sum(counts, summand, &mut rng))
        .collect()
}

/// Configuration of a simulation study.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StudyConfig {
    pub family: MixingFamily,
    pub truth: NefParams,
    pub n: usize,
    pub replicas: usize,
    pub seed: u64,
    pub em: EmOptions,
}

/// Aggregates over the retained replicas.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudySummary {
    pub family: MixingFamily,
    pub truth: [f64; 3],
    pub n: usize,
    pub replicas_requested: usize,
    /// Replicas that produced an EM estimate (requested minus discards).
    pub replicas_used: usize,
    /// Replicas discarded because the moment estimate was inadmissible.
    pub mm_inadmissible: usize,
    pub mm_inadmissible_rate: f64,
    /// Replicas discarded because the EM iteration failed numerically.
    pub em_failures: usize,
    /// Retained replicas whose information matrix gave no standard errors.
    pub se_failures: usize,
    /// Retained replicas that stopped at the iteration cap.
    pub nonconverged: usize,
    /// Log-likelihood ascent violations (beyond 1e-8 slack) over all fits.
    pub monotonicity_violations: usize,
    /// Standard deviation of the estimates across retained replicas;
    /// `None` when fewer than two replicas were retained.
    pub empirical_sd: Option<[f64; 3]>,
    /// Mean of the Louis standard errors across replicas that had them.
    pub mean_theoretical_se: Option<[f64; 3]>,
    /// Mean estimate minus truth.
    pub bias: Option<[f64; 3]>,
    pub mean_iterations: f64,
    /// Wall-clock time; reported out of band so that artifacts with the same
    /// configuration stay byte-identical.
    #[serde(skip)]
    pub runtime_secs: f64,
}

/// Per-replica outcome, for the study CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicaOutcome {
    pub index: usize,
    pub mm: Option<[f64; 3]>,
    pub em: Option<[f64; 3]>,
    pub std_errors: Option<[f64; 3]>,
    pub iterations: usize,
    pub converged: bool,
    pub ascent_violation: bool,
    pub discard: Option<String>,
}

/// Output of [`mc_study`].
#[derive(Debug, Clone, PartialEq)]
pub struct StudyOutput {
    pub summary: StudySummary,
    pub replicas: Vec<ReplicaOutcome>,
}

/// Runs the study: per replica, draw `n` observations from the true law,
/// initialize with the method of moments, fit by EM, and evaluate Louis
/// standard errors. Replicas with inadmissible moment estimates are
/// discarded (and counted), mirroring how such runs are usually dropped
/// from reported tables; EM failures are likewise counted, not fatal.
pub fn mc_study(cfg: &StudyConfig) -> Result<StudyOutput> {
    let start = std::time::Instant::now();
    let replicas: Vec<ReplicaOutcome> = (0..cfg.replicas)
        .into_par_iter()
        .map(|i| run_replica(cfg, i))
        .collect::<Result<Vec<_>>>()?;

    let mut summary = StudySummary {
        family: cfg.family,
        truth: cfg.truth.as_array(),
        n: cfg.n,
        replicas_requested: cfg.replicas,
        replicas_used: 0,
        mm_inadmissible: 0,
        mm_inadmissible_rate: 0.0,
        em_failures: 0,
        se_failures: 0,
        nonconverged: 0,
        monotonicity_violations: 0,
        empirical_sd: None,
        mean_theoretical_se: None,
        bias: None,
        mean_iterations: 0.0,
        runtime_secs: 0.0,
    };

    let mut estimates: Vec<[f64; 3]> = Vec::new();
    let mut ses: Vec<[f64; 3]> = Vec::new();
    let mut iter_sum = 0usize;
    for r in &replicas {
        if r.ascent_violation {
            summary.monotonicity_violations += 1;
        }
        match (&r.discard, r.em) {
            (Some(reason), _) => {
                if reason.starts_with("mm") {
                    summary.mm_inadmissible += 1;
                } else {
                    summary.em_failures += 1;
                }
            }
            (None, Some(est)) => {
                estimates.push(est);
                iter_sum += r.iterations;
                if !r.converged {
                    summary.nonconverged += 1;
                }
                match r.std_errors {
                    Some(se) => ses.push(se),
                    None => summary.se_failures += 1,
                }
            }
            (None, None) => unreachable!("non-discarded replica without estimate"),
        }
    }
    summary.replicas_used = estimates.len();
    summary.mm_inadmissible_rate = summary.mm_inadmissible as f64 / cfg.replicas as f64;
    if !estimates.is_empty() {
        summary.mean_iterations = iter_sum as f64 / estimates.len() as f64;
        let mean = column_mean(&estimates);
        summary.bias = Some([
            mean[0] - cfg.truth.mu,
            mean[1] - cfg.truth.sigma2,
            mean[2] - cfg.truth.phi,
        ]);
        if estimates.len() >= 2 {
            summary.empirical_sd = Some(column_sd(&estimates, &mean));
        }
    }
    if !ses.is_empty() {
        summary.mean_theoretical_se = Some(column_mean(&ses));
    }
    summary.runtime_secs = start.elapsed().as_secs_f64();
    Ok(StudyOutput { summary, replicas })
}

fn run_replica(cfg: &StudyConfig, index: usize) -> Result<ReplicaOutcome> {
    let mut rng = replica_rng(cfg.seed, index as u64);
    let data = sample_nef(&cfg.truth, cfg.family, cfg.n, &mut rng)?;
    let mut out = ReplicaOutcome {
        index,
        mm: None,
        em: None,
        std_errors: None,
        iterations: 0,
        converged: false,
        ascent_violation: false,
        discard: None,
    };
    let mm = match method_of_moments(&data, cfg.family) {
        Ok(est) => est,
        Err(e) => {
            out.discard = Some(format!("mm: {e}"));
            return Ok(out);
        }
    };
    out.mm = Some(mm.params.as_array());
    let fit = match em_fit(&data, cfg.family, Some(mm.params), &cfg.em) {
        Ok(fit) => fit,
        Err(e) => {
            out.discard = Some(format!("em: {e}"));
            return Ok(out);
        }
    };
    out.ascent_violation = fit.loglik_trace.windows(2).any(|w| w[1] < w[0] - 1e-8);
    out.em = Some(fit.params.as_array());
    out.std_errors = fit.std_errors;
    out.iterations = fit.iterations;
    out.converged = fit.converged;
    Ok(out)
}

fn column_mean(rows: &[[f64; 3]]) -> [f64; 3] {
    let n = rows.len() as f64;
    let mut acc = [0.0; 3];
    for r in rows {
        for j in 0..3 {
            acc[j] += r[j];
        }
    }
    acc.map(|v| v / n)
}

fn column_sd(rows: &[[f64; 3]], mean: &[f64; 3]) -> [f64; 3] {
    let n = rows.len() as f64;
    let mut acc = [0.0; 3];
    for r in rows {
        for j in 0..3 {
            let d = r[j] - mean[j];
            acc[j] += d * d;
        }
    }
    acc.map(|v| (v / (n - 1.0)).sqrt())
}
