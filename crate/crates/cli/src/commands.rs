//! Subcommand implementations.

use crate::ingest;
use crate::output::{csv_artifact, json_artifact, sibling, write_file, Meta};
use crate::{
    CliError, DensityArgs, FitArgs, McStudyArgs, SampleArgs, StabilityArgs, SumsDemoArgs,
};
use nef_core::estimation::{em_fit, method_of_moments, normal_mle, EmOptions, FitResult};
use nef_core::mp_sums::{ks_distance, limit_params, MpCountParams, SummandSpec};
use nef_core::nef::{nef_cf, nef_cumulants, nef_pdf, sample_nef, NefParams};
use nef_core::stability::{mp_stable_cf, StableCfSpec};
use nef_core::study::{mc_study as run_mc_study, replica_rng, sums_demo_sample, StudyConfig};
use nef_core::{Complex64, MixingFamily};
use serde::Serialize;
use std::path::Path;

fn emit(out: Option<&Path>, content: &str) -> Result<(), CliError> {
    match out {
        Some(path) => write_file(path, content),
        None => {
            print!("{content}");
            Ok(())
        }
    }
}

// ---------------------------------------------------------------- fit ----

#[derive(Serialize)]
struct ParamsOut {
    mu: f64,
    sigma2: f64,
    /// `None` marks the normal (phi -> infinity) limit.
    phi: Option<f64>,
}

impl ParamsOut {
    fn from(p: &NefParams) -> Self {
        ParamsOut {
            mu: p.mu,
            sigma2: p.sigma2,
            phi: p.phi.is_finite().then_some(p.phi),
        }
    }
}

#[derive(Serialize)]
struct FitBlock {
    params: ParamsOut,
    std_errors: Option<[f64; 3]>,
    loglik: f64,
    iterations: usize,
    converged: bool,
}

impl FitBlock {
    fn from(fit: &FitResult) -> Self {
        FitBlock {
            params: ParamsOut::from(&fit.params),
            std_errors: fit.std_errors.map(|se| {
                let mut se = se;
                if !se[2].is_finite() {
                    se[2] = f64::NAN; // serialized as null
                }
                se
            }),
            loglik: *fit.loglik_trace.last().expect("nonempty trace"),
            iterations: fit.iterations,
            converged: fit.converged,
        }
    }
}

#[derive(Serialize)]
struct FitReport {
    meta: Meta,
    family: String,
    n: usize,
    ingest: &'static str,
    mm_init: Option<ParamsOut>,
    mm_multiple_admissible: Option<bool>,
    mm_error: Option<String>,
    em: Option<FitBlock>,
    em_loglik_trace: Option<Vec<f64>>,
    normal: FitBlock,
    error: Option<String>,
}

pub fn fit(args: &FitArgs) -> Result<(), CliError> {
    let fam: MixingFamily = args.family.into();
    let raw = ingest::read_column(&args.input)?;
    let data = if args.prices {
        ingest::prices_to_returns(&raw)?
    } else {
        raw
    };
    if data.len() < 3 {
        return Err(CliError::Input(format!(
            "need at least 3 observations, got {}",
            data.len()
        )));
    }
    let meta = Meta::new(args.seed);
    let normal = normal_mle(&data).map_err(|e| CliError::Input(e.to_string()))?;

    let mm = method_of_moments(&data, fam);
    let (mm_init, mm_multiple, mm_error, init) = match &mm {
        Ok(est) => (
            Some(ParamsOut::from(&est.params)),
            Some(est.multiple_admissible),
            None,
            Some(est.params),
        ),
        Err(e) => (None, None, Some(e.to_string()), None),
    };

    let opts = EmOptions {
        epsilon: args.epsilon,
        max_iter: args.max_iter,
    };
    let em = em_fit(&data, fam, init, &opts);

    let mut report = FitReport {
        meta,
        family: format!("{fam:?}"),
        n: data.len(),
        ingest: if args.prices { "prices" } else { "returns" },
        mm_init,
        mm_multiple_admissible: mm_multiple,
        mm_error,
        em: None,
        em_loglik_trace: None,
        normal: FitBlock::from(&normal),
        error: None,
    };

    match em {
        Ok(fit) => {
            report.em = Some(FitBlock::from(&fit));
            report.em_loglik_trace = Some(fit.loglik_trace.clone());
            emit(args.out.as_deref(), &json_artifact(&report)?)?;
            if args.plots {
                let out = args.out.as_ref().expect("clap: --plots requires --out");
                write_plot_data(out, &report.meta, &data, &fit.params, fam, args.seed)?;
            }
            Ok(())
        }
        Err(e) => {
            report.error = Some(e.to_string());
            emit(args.out.as_deref(), &json_artifact(&report)?)?;
            Err(CliError::Numeric(format!("EM failed: {e}")))
        }
    }
}

fn write_plot_data(
    out: &Path,
    meta: &Meta,
    data: &[f64],
    fitted: &NefParams,
    fam: MixingFamily,
    seed: u64,
) -> Result<(), CliError> {
    // Histogram bins with the fitted density at bin centers.
    let n = data.len();
    let (lo, hi) = data
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| {
            (a.min(v), b.max(v))
        });
    let bins = 60usize;
    let width = (hi - lo) / bins as f64;
    let mut counts = vec![0usize; bins];
    for &v in data {
        let idx = (((v - lo) / width) as usize).min(bins - 1);
        counts[idx] += 1;
    }
    let hist_rows: Vec<Vec<f64>> = (0..bins)
        .map(|i| {
            let a = lo + i as f64 * width;
            let b = a + width;
            let mid = 0.5 * (a + b);
            let dens = counts[i] as f64 / (n as f64 * width);
            let fit_pdf = nef_pdf(fitted, fam, mid).unwrap_or(f64::NAN);
            vec![a, b, counts[i] as f64, dens, fit_pdf]
        })
        .collect();
    write_file(
        &sibling(out, "hist"),
        &csv_artifact(meta, "bin_lo,bin_hi,count,density,fitted_pdf", &hist_rows),
    )?;

    // QQ pairs: empirical quantiles against fitted quantiles at levels
    // k/(n+1), the fitted ones from a 1e6-draw Monte Carlo (stream 1 of
    // the run seed).
    let mut sorted = data.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("non-NaN data"));
    let m = 1_000_000usize;
    let mut rng = replica_rng(seed, 1);
    let mut draws =
        sample_nef(fitted, fam, m, &mut rng).map_err(|e| CliError::Numeric(e.to_string()))?;
    draws.sort_by(|a, b| a.partial_cmp(b).expect("non-NaN draws"));
    let qq_rows: Vec<Vec<f64>> = (1..=n)
        .map(|k| {
            let p = k as f64 / (n as f64 + 1.0);
            let idx = ((p * m as f64).ceil() as usize).clamp(1, m) - 1;
            vec![p, sorted[k - 1], draws[idx]]
        })
        .collect();
    write_file(
        &sibling(out, "qq"),
        &csv_artifact(meta, "level,empirical,fitted", &qq_rows),
    )
}

// ----------------------------------------------------------- mc-study ----

pub fn mc_study(args: &McStudyArgs) -> Result<(), CliError> {
    let truth = NefParams::new(args.mu, args.sigma2, args.phi)
        .map_err(|e| CliError::Input(e.to_string()))?;
    let cfg = StudyConfig {
        family: args.family.into(),
        truth,
        n: args.n,
        replicas: args.replicas,
        seed: args.seed,
        em: EmOptions {
            epsilon: args.epsilon,
            max_iter: args.max_iter,
        },
    };
    let out = run_mc_study(&cfg).map_err(|e| CliError::Numeric(e.to_string()))?;
    eprintln!("runtime: {:.1}s", out.summary.runtime_secs);

    #[derive(Serialize)]
    struct StudyReport<'a> {
        meta: Meta,
        summary: &'a nef_core::study::StudySummary,
    }
    let report = StudyReport {
        meta: Meta::new(args.seed),
        summary: &out.summary,
    };
    emit(args.out.as_deref(), &json_artifact(&report)?)?;

    if let Some(path) = &args.out {
        let rows: Vec<Vec<f64>> = out
            .replicas
            .iter()
            .map(|r| {
                let nan3 = [f64::NAN; 3];
                let mm = r.mm.unwrap_or(nan3);
                let em = r.em.unwrap_or(nan3);
                let se = r.std_errors.unwrap_or(nan3);
                vec![
                    r.index as f64,
                    mm[0], mm[1], mm[2],
                    em[0], em[1], em[2],
                    se[0], se[1], se[2],
                    r.iterations as f64,
                    if r.converged { 1.0 } else { 0.0 },
                    if r.discard.is_some() { 1.0 } else { 0.0 },
                ]
            })
            .collect();
        write_file(
            &sibling(path, "replicas"),
            &csv_artifact(
                &report.meta,
                "replica,mm_mu,mm_sigma2,mm_phi,em_mu,em_sigma2,em_phi,se_mu,se_sigma2,se_phi,iterations,converged,discarded",
                &rows,
            ),
        )?;
    }
    Ok(())
}

// ---------------------------------------------------------- sums-demo ----

fn parse_summand(text: &str) -> Result<SummandSpec, CliError> {
    let (kind, rest) = text
        .split_once(':')
        .ok_or_else(|| CliError::Input(format!("bad summand spec {text:?}")))?;
    let nums: Vec<f64> = rest
        .split(',')
        .map(|s| {
            s.trim()
                .parse::<f64>()
                .map_err(|_| CliError::Input(format!("bad summand number {s:?}")))
        })
        .collect::<Result<_, _>>()?;
    match (kind, nums.as_slice()) {
        ("exp", [mean]) => {
            SummandSpec::exponential(*mean).map_err(|e| CliError::Input(e.to_string()))
        }
        ("normal", [mu, s2]) => {
            SummandSpec::normal(*mu, *s2).map_err(|e| CliError::Input(e.to_string()))
        }
        _ => Err(CliError::Input(format!(
            "summand must be exp:MEAN or normal:MU,SIGMA2, got {text:?}"
        ))),
    }
}

pub fn sums_demo(args: &SumsDemoArgs) -> Result<(), CliError> {
    let fam: MixingFamily = args.family.into();
    let summand = parse_summand(&args.summand)?;
    let lambdas: Vec<f64> = args
        .lambdas
        .split(',')
        .map(|s| {
            s.trim()
                .parse::<f64>()
                .map_err(|_| CliError::Input(format!("bad lambda {s:?}")))
        })
        .collect::<Result<_, _>>()?;
    if lambdas.is_empty() || args.replicas == 0 {
        return Err(CliError::Input("need lambdas and replicas".into()));
    }
    let meta = Meta::new(args.seed);
    let mut ks_rows = Vec::new();
    for (i, &lambda) in lambdas.iter().enumerate() {
        let counts = MpCountParams::new(lambda, args.phi, fam)
            .map_err(|e| CliError::Input(e.to_string()))?;
        let limit = limit_params(&counts, &summand).map_err(|e| CliError::Input(e.to_string()))?;
        let sample = sums_demo_sample(&counts, &summand, args.replicas, args.seed, i as u64)
            .map_err(|e| CliError::Numeric(e.to_string()))?;
        let ks = ks_distance(&sample, &limit, fam).map_err(|e| CliError::Numeric(e.to_string()))?;
        ks_rows.push(vec![lambda, ks]);

        if let Some(out) = &args.out {
            let tag = format!("lambda{lambda}");
            write_file(
                &sibling(out, &format!("{tag}_samples")),
                &csv_artifact(&meta, "value", &sample.iter().map(|&v| vec![v]).collect::<Vec<_>>()),
            )?;
            // histogram and limiting-density overlay
            let (lo, hi) = sample
                .iter()
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| {
                    (a.min(v), b.max(v))
                });
            let width = (hi - lo) / args.bins as f64;
            let mut counts_h = vec![0usize; args.bins];
            for &v in &sample {
                let idx = (((v - lo) / width) as usize).min(args.bins - 1);
                counts_h[idx] += 1;
            }
            let rows: Vec<Vec<f64>> = (0..args.bins)
                .map(|b| {
                    let a = lo + b as f64 * width;
                    let mid = a + 0.5 * width;
                    vec![
                        a,
                        a + width,
                        counts_h[b] as f64,
                        counts_h[b] as f64 / (sample.len() as f64 * width),
                        nef_pdf(&limit, fam, mid).unwrap_or(f64::NAN),
                    ]
                })
                .collect();
            write_file(
                &sibling(out, &format!("{tag}_hist")),
                &csv_artifact(&meta, "bin_lo,bin_hi,count,density,limit_pdf", &rows),
            )?;
        }
    }
    if let Some(out) = &args.out {
        // the limiting density curve on a common grid
        let limit = limit_params(
            &MpCountParams::new(lambdas[0], args.phi, fam).expect("validated above"),
            &summand,
        )
        .map_err(|e| CliError::Input(e.to_string()))?;
        let k = nef_cumulants(&limit, fam);
        let (lo, hi) = (limit.mu - 8.0 * k[1].sqrt(), limit.mu + 8.0 * k[1].sqrt());
        let pts = 801usize;
        let rows: Vec<Vec<f64>> = (0..pts)
            .map(|i| {
                let y = lo + (hi - lo) * i as f64 / (pts - 1) as f64;
                vec![y, nef_pdf(&limit, fam, y).unwrap_or(f64::NAN)]
            })
            .collect();
        write_file(
            &sibling(out, "density"),
            &csv_artifact(&meta, "y,limit_pdf", &rows),
        )?;
        write_file(
            &sibling(out, "ks"),
            &csv_artifact(&meta, "lambda,ks_distance", &ks_rows),
        )?;
    }
    // KS table always goes to stdout
    print!("{}", csv_artifact(&meta, "lambda,ks_distance", &ks_rows));
    Ok(())
}

// ----------------------------------------------------- stability-check ----

fn parse_stable(text: &str) -> Result<StableCfSpec, CliError> {
    let (kind, rest) = text
        .split_once(':')
        .ok_or_else(|| CliError::Input(format!("bad stable spec {text:?}")))?;
    let nums: Vec<f64> = rest
        .split(',')
        .map(|s| {
            s.trim()
                .parse::<f64>()
                .map_err(|_| CliError::Input(format!("bad stable number {s:?}")))
        })
        .collect::<Result<_, _>>()?;
    match (kind, nums.as_slice()) {
        ("normal", [mu, s2]) => {
            StableCfSpec::normal_drift(*mu, *s2).map_err(|e| CliError::Input(e.to_string()))
        }
        ("sas", [c, alpha]) => StableCfSpec::symmetric_alpha_stable(*c, *alpha)
            .map_err(|e| CliError::Input(e.to_string())),
        _ => Err(CliError::Input(format!(
            "stable must be normal:MU,SIGMA2 or sas:C,ALPHA, got {text:?}"
        ))),
    }
}

/// The per-family closed form of the composed cf, used as the "direct"
/// column when the stable input has no NEF counterpart.
fn composed_closed_form(fam: MixingFamily, phi: f64, psi: &StableCfSpec, t: f64) -> Complex64 {
    let logpsi = psi.log_cf(t);
    match fam {
        MixingFamily::Gamma => (Complex64::new(1.0, 0.0) - logpsi / phi).powf(-phi),
        MixingFamily::InverseGaussian => {
            let inner = Complex64::new(1.0, 0.0) - 2.0 * logpsi / phi;
            (phi * (Complex64::new(1.0, 0.0) - inner.sqrt())).exp()
        }
        MixingFamily::Ghs => unreachable!("CLI families are gamma | ig"),
    }
}

pub fn stability_check(args: &StabilityArgs) -> Result<(), CliError> {
    let fam: MixingFamily = args.family.into();
    let psi = parse_stable(&args.stable)?;
    if args.points < 2 || !(args.tmin < args.tmax) {
        return Err(CliError::Input("need tmin < tmax and points >= 2".into()));
    }
    let meta = Meta::new(args.seed);
    let direct_params = match psi {
        StableCfSpec::NormalDrift { mu, sigma2 } if sigma2 > 0.0 => {
            Some(NefParams::new(mu, sigma2, args.phi).map_err(|e| CliError::Input(e.to_string()))?)
        }
        _ => None,
    };
    let mut rows = Vec::with_capacity(args.points);
    let mut max_err = 0.0f64;
    for i in 0..args.points {
        let t = args.tmin + (args.tmax - args.tmin) * i as f64 / (args.points - 1) as f64;
        let composed =
            mp_stable_cf(fam, args.phi, &psi, t).map_err(|e| CliError::Numeric(e.to_string()))?;
        let direct = match &direct_params {
            Some(p) => nef_cf(p, fam, t).map_err(|e| CliError::Numeric(e.to_string()))?,
            None => composed_closed_form(fam, args.phi, &psi, t),
        };
        let err = (composed - direct).norm();
        max_err = max_err.max(err);
        rows.push(vec![t, composed.re, composed.im, direct.re, direct.im, err]);
    }
    let csv = csv_artifact(
        &meta,
        "t,re_composed,im_composed,re_direct,im_direct,abs_error",
        &rows,
    );
    match &args.out {
        Some(path) => write_file(path, &csv)?,
        None if !args.json => print!("{csv}"),
        None => {}
    }
    if args.json {
        #[derive(Serialize)]
        struct Summary {
            meta: Meta,
            points: usize,
            max_error: f64,
        }
        print!(
            "{}",
            json_artifact(&Summary {
                meta,
                points: args.points,
                max_error: max_err,
            })?
        );
    }
    Ok(())
}

// ------------------------------------------------------------- density ----

pub fn density(args: &DensityArgs) -> Result<(), CliError> {
    let fam: MixingFamily = args.family.into();
    let p = NefParams::new(args.mu, args.sigma2, args.phi)
        .map_err(|e| CliError::Input(e.to_string()))?;
    if args.points < 2 {
        return Err(CliError::Input("need points >= 2".into()));
    }
    let k = nef_cumulants(&p, fam);
    let lo = args.ymin.unwrap_or(p.mu - 40.0 * k[1].sqrt());
    let hi = args.ymax.unwrap_or(p.mu + 40.0 * k[1].sqrt());
    if !(lo < hi) {
        return Err(CliError::Input("need ymin < ymax".into()));
    }
    let meta = Meta::new(args.seed);
    let rows: Vec<Vec<f64>> = (0..args.points)
        .map(|i| {
            let y = lo + (hi - lo) * i as f64 / (args.points - 1) as f64;
            vec![y, nef_pdf(&p, fam, y).unwrap_or(f64::NAN)]
        })
        .collect();
    emit(args.out.as_deref(), &csv_artifact(&meta, "y,pdf", &rows))
}

// -------------------------------------------------------------- sample ----

pub fn sample(args: &SampleArgs) -> Result<(), CliError> {
    let fam: MixingFamily = args.family.into();
    let p = NefParams::new(args.mu, args.sigma2, args.phi)
        .map_err(|e| CliError::Input(e.to_string()))?;
    if args.n == 0 {
        return Err(CliError::Input("need n >= 1".into()));
    }
    let mut rng = replica_rng(args.seed, 0);
    let draws = sample_nef(&p, fam, args.n, &mut rng)
        .map_err(|e| CliError::Numeric(e.to_string()))?;
    let meta = Meta::new(args.seed);
    emit(
        args.out.as_deref(),
        &csv_artifact(&meta, "value", &draws.iter().map(|&v| vec![v]).collect::<Vec<_>>()),
    )
}
