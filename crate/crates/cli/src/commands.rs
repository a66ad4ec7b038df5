use std::collections::BTreeMap;
use std::io::Write;

use clap::{Args, ValueEnum};
use hidden_failure::coin::{coin_posterior, fair_mass, BiasPrior, PriorKind, DEFAULT_GRID_SIZE};
use hidden_failure::crypto::{
    bit_flip_probability, false_acceptance_rate, security_gap_log2, Ecc, FaultScenario, Log2Prob,
    SECONDS_PER_MONTH, SECURITY_LEVEL_LOG2,
};
use hidden_failure::curve::{asymptote, conviction_band, converged_curve, find_peak};
use hidden_failure::oracle::estimate_posterior;
use hidden_failure::{posterior, posterior_curve, CurveMode, Evidence, ScenarioId};
use serde::Serialize;
use serde_json::json;

use crate::config::{ModelArgs, OutputFormat, RunConfig};
use crate::CliError;

type Out<'a> = &'a mut dyn Write;

/// 17 significant digits: enough to round-trip any `f64`.
fn num(x: f64) -> String {
    format!("{x:.16e}")
}

fn write_json(out: Out, value: &impl Serialize) -> Result<(), CliError> {
    serde_json::to_writer_pretty(&mut *out, value)?;
    writeln!(out)?;
    Ok(())
}

#[derive(Debug, Args)]
pub struct CurveArgs {
    #[command(flatten)]
    model: ModelArgs,
    /// Largest number of tests on the curve.
    #[arg(long, default_value_t = 30)]
    n_max: u64,
    /// Evaluate at k = round(fraction * n) positives instead of k = n.
    #[arg(long)]
    fraction: Option<f64>,
}

pub fn curve(args: &CurveArgs, format: OutputFormat, out: Out) -> Result<(), CliError> {
    let cfg = RunConfig::resolve(&args.model, None)?;
    let mode = match args.fraction {
        Some(r) => CurveMode::FixedFraction(r),
        None => CurveMode::Unanimous,
    };
    let curve = posterior_curve(&cfg.model, cfg.target, args.n_max, mode)?;
    match format {
        OutputFormat::Csv => {
            writeln!(out, "n,posterior")?;
            for (n, v) in curve.values().iter().enumerate() {
                writeln!(out, "{n},{}", num(*v))?;
            }
        }
        OutputFormat::Json => {
            let points: Vec<_> = curve
                .values()
                .iter()
                .enumerate()
                .map(|(n, &v)| json!({ "n": n, "posterior": v }))
                .collect();
            write_json(
                out,
                &json!({
                    "scenario": cfg.label,
                    "target": cfg.target_label(),
                    "mode": mode,
                    "n_max": args.n_max,
                    "points": points,
                }),
            )?;
        }
    }
    Ok(())
}

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    #[command(flatten)]
    model: ModelArgs,
    /// Confidence level for the ceiling check.
    #[arg(long, default_value_t = 0.95)]
    tau: f64,
}

#[derive(Debug, Serialize)]
struct Analysis<'a> {
    scenario: &'a str,
    target: &'a str,
    peak_n: u64,
    peak_value: f64,
    limit: f64,
    tau: f64,
    ceiling_reached: bool,
    max_value: f64,
    n_evaluated: u64,
}

pub fn analyze(args: &AnalyzeArgs, format: OutputFormat, out: Out) -> Result<(), CliError> {
    if !(0.0..=1.0).contains(&args.tau) {
        return Err(CliError::Usage(format!("--tau {} is not in [0, 1]", args.tau)));
    }
    let cfg = RunConfig::resolve(&args.model, None)?;
    let limit = asymptote(&cfg.model, cfg.target)?;
    let curve = converged_curve(&cfg.model, cfg.target)?;
    let (peak_n, peak_value) = find_peak(&curve);
    // past the end of a rising curve the supremum is the limit itself
    let max_value = peak_value.max(limit);
    let a = Analysis {
        scenario: &cfg.label,
        target: cfg.target_label(),
        peak_n,
        peak_value,
        limit,
        tau: args.tau,
        ceiling_reached: max_value >= args.tau,
        max_value,
        n_evaluated: curve.n_max(),
    };
    match format {
        OutputFormat::Csv => {
            writeln!(
                out,
                "scenario,target,peak_n,peak_value,limit,tau,ceiling_reached,max_value,n_evaluated"
            )?;
            writeln!(
                out,
                "{},{},{},{},{},{},{},{},{}",
                a.scenario,
                a.target,
                a.peak_n,
                num(a.peak_value),
                num(a.limit),
                a.tau,
                a.ceiling_reached,
                num(a.max_value),
                a.n_evaluated
            )?;
        }
        OutputFormat::Json => write_json(out, &a)?,
    }
    Ok(())
}

#[derive(Debug, Args)]
pub struct SanhedrinArgs {
    /// Panel size.
    #[arg(long, default_value_t = 23)]
    n: u64,
    /// Lowest vote count that convicts.
    #[arg(long, default_value_t = 13)]
    k_min: u64,
    /// Highest vote count that convicts.
    #[arg(long, default_value_t = 22)]
    k_max: u64,
    #[arg(long = "p-c")]
    p_c: Option<f64>,
    #[arg(long)]
    false_positive: Option<f64>,
    #[arg(long)]
    false_negative: Option<f64>,
    #[arg(long)]
    theta_biased: Option<f64>,
}

pub fn sanhedrin(args: &SanhedrinArgs, format: OutputFormat, out: Out) -> Result<(), CliError> {
    let overrides: BTreeMap<String, f64> = [
        ("p_c", args.p_c),
        ("false_positive", args.false_positive),
        ("false_negative", args.false_negative),
        ("theta_biased", args.theta_biased),
    ]
    .into_iter()
    .filter_map(|(k, v)| v.map(|v| (k.to_string(), v)))
    .collect();
    if !(args.k_min <= args.k_max && args.k_max <= args.n) {
        return Err(CliError::Usage(format!(
            "conviction window [{}, {}] must lie inside [0, {}]",
            args.k_min, args.k_max, args.n
        )));
    }
    let model = ScenarioId::Sanhedrin.build(&overrides)?;
    let all = conviction_band(&model, 0, args.n, 0, args.n)?;
    let band = conviction_band(&model, 0, args.n, args.k_min, args.k_max)?;
    match format {
        OutputFormat::Csv => {
            writeln!(out, "k,posterior,in_conviction_band")?;
            for &(k, v) in &all.points {
                writeln!(out, "{k},{},{}", num(v), band.contains(k))?;
            }
        }
        OutputFormat::Json => {
            let rows: Vec<_> = all
                .points
                .iter()
                .map(|&(k, v)| json!({ "k": k, "posterior": v, "in_conviction_band": band.contains(k) }))
                .collect();
            write_json(
                out,
                &json!({
                    "n": args.n,
                    "k_min": args.k_min,
                    "k_max": args.k_max,
                    "band_min": { "k": band.min.0, "posterior": band.min.1 },
                    "rows": rows,
                }),
            )?;
        }
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum EccArg {
    None,
    Parity,
    TwoBit,
}

impl From<EccArg> for Ecc {
    fn from(e: EccArg) -> Self {
        match e {
            EccArg::None => Ecc::None,
            EccArg::Parity => Ecc::Parity,
            EccArg::TwoBit => Ecc::TwoBit,
        }
    }
}

#[derive(Debug, Args)]
pub struct CryptoArgs {
    /// Per-bit, per-second flip probability.
    #[arg(long, default_value_t = 1e-19)]
    lambda: f64,
    /// Residence time in seconds.
    #[arg(long, conflicts_with = "months")]
    exposure: Option<f64>,
    /// Residence time in months (default 1).
    #[arg(long)]
    months: Option<f64>,
    #[arg(long, value_enum, default_value = "none")]
    ecc: EccArg,
    /// Seconds between scrubs; required with --ecc parity or two-bit.
    #[arg(long)]
    scrub_interval: Option<f64>,
    #[arg(long, default_value_t = 0)]
    k_min: u64,
    #[arg(long, default_value_t = 64)]
    k_max: u64,
    /// Security target as a base-2 exponent.
    #[arg(long, default_value_t = SECURITY_LEVEL_LOG2, allow_hyphen_values = true)]
    target_log2: f64,
}

/// Plain decimal where an `f64` can hold it, `2^x` below that.
fn prob_cell(p: Log2Prob) -> String {
    let v = p.value();
    if v >= 1e-300 {
        num(v)
    } else {
        p.to_string()
    }
}

pub fn crypto(args: &CryptoArgs, format: OutputFormat, out: Out) -> Result<(), CliError> {
    if args.k_min > args.k_max {
        return Err(CliError::Usage(format!(
            "--k-min {} exceeds --k-max {}",
            args.k_min, args.k_max
        )));
    }
    let exposure = match (args.exposure, args.months) {
        (Some(s), _) => s,
        (None, Some(m)) => m * SECONDS_PER_MONTH,
        (None, None) => SECONDS_PER_MONTH,
    };
    let ecc = Ecc::from(args.ecc);
    if ecc != Ecc::None && args.scrub_interval.is_none() {
        return Err(CliError::Usage("--scrub-interval is required with error correction".into()));
    }
    let scenario = FaultScenario::new(args.lambda, exposure, args.scrub_interval, ecc)?;
    let p_f = bit_flip_probability(&scenario);
    let target = Log2Prob::from_log2(args.target_log2)?;
    let floor = Log2Prob::from_prob(p_f)?;
    let gap = if p_f > 0.0 {
        Some(security_gap_log2(floor, target)?)
    } else {
        None
    };
    let rows = (args.k_min..=args.k_max)
        .map(|k| false_acceptance_rate(k, p_f).map(|p| (k, p)))
        .collect::<Result<Vec<_>, _>>()?;
    match format {
        OutputFormat::Csv => {
            writeln!(out, "# p_f={}", num(p_f))?;
            writeln!(out, "# log2_p_f={}", floor.log2())?;
            match gap {
                Some(g) => writeln!(out, "# floor_over_target_log2={}", g.log2_ratio)?,
                None => writeln!(out, "# floor_over_target_log2=-inf")?,
            }
            writeln!(out, "k,p_fa,log2_p_fa")?;
            for (k, p) in &rows {
                writeln!(out, "{k},{},{}", prob_cell(*p), p.log2())?;
            }
        }
        OutputFormat::Json => {
            let rows: Vec<_> = rows
                .iter()
                .map(|(k, p)| {
                    let v = p.value();
                    json!({ "k": k, "p_fa": (v >= 1e-300).then_some(v), "log2_p_fa": p.log2() })
                })
                .collect();
            write_json(
                out,
                &json!({
                    "lambda": args.lambda,
                    "exposure_seconds": exposure,
                    "ecc": ecc,
                    "scrub_interval": args.scrub_interval,
                    "effective_rate": scenario.effective_rate(),
                    "p_f": p_f,
                    "log2_p_f": (p_f > 0.0).then(|| floor.log2()),
                    "target_log2": args.target_log2,
                    "floor_over_target": gap,
                    "rows": rows,
                }),
            )?;
        }
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum PriorArg {
    Uniform,
    Beta,
    NearFair,
    Mixture,
}

#[derive(Debug, Args)]
pub struct CoinArgs {
    /// Number of tosses.
    #[arg(long)]
    n: u64,
    /// Number of heads.
    #[arg(long)]
    x: u64,
    #[arg(long, value_enum, default_value = "uniform")]
    prior: PriorArg,
    /// First Beta shape (beta prior, or mixture background).
    #[arg(long, default_value_t = 1.0)]
    a: f64,
    /// Second Beta shape (beta prior, or mixture background).
    #[arg(long, default_value_t = 1.0)]
    b: f64,
    /// Weight of the fair component (mixture prior).
    #[arg(long, default_value_t = 0.99)]
    weight_fair: f64,
    /// Concentration c of the fair Beta(c, c) component (mixture prior).
    #[arg(long, default_value_t = 500.0)]
    fair_concentration: f64,
    /// Odd number of grid points on [0, 1].
    #[arg(long, default_value_t = DEFAULT_GRID_SIZE)]
    grid_size: usize,
    /// Half-width of the window around 1/2 counted as fair.
    #[arg(long, default_value_t = 0.05)]
    epsilon: f64,
    /// Print every k-th grid point.
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u64).range(1..))]
    every: u64,
}

pub fn coin(args: &CoinArgs, format: OutputFormat, out: Out) -> Result<(), CliError> {
    let kind = match args.prior {
        PriorArg::Uniform => PriorKind::Uniform,
        PriorArg::Beta => PriorKind::Beta { a: args.a, b: args.b },
        PriorArg::NearFair => PriorKind::near_fair(),
        PriorArg::Mixture => PriorKind::Mixture {
            weight_fair: args.weight_fair,
            fair_concentration: args.fair_concentration,
            background_a: args.a,
            background_b: args.b,
        },
    };
    let prior = BiasPrior::new(kind, args.grid_size)?;
    let post = coin_posterior(&prior, args.n, args.x)?;
    let summary = post.summary();
    let fair = fair_mass(&post, args.epsilon)?;
    let rows = post
        .grid()
        .iter()
        .zip(post.density())
        .step_by(args.every as usize);
    match format {
        OutputFormat::Csv => {
            writeln!(out, "# mean={}", num(summary.mean))?;
            writeln!(out, "# map={}", num(summary.map))?;
            writeln!(out, "# ci95=[{},{}]", num(summary.ci_low), num(summary.ci_high))?;
            writeln!(out, "# fair_mass(eps={})={}", args.epsilon, num(fair))?;
            writeln!(out, "q,density")?;
            for (q, d) in rows {
                writeln!(out, "{},{}", num(*q), num(*d))?;
            }
        }
        OutputFormat::Json => {
            let (q, d): (Vec<f64>, Vec<f64>) = rows.map(|(q, d)| (*q, *d)).unzip();
            write_json(
                out,
                &json!({
                    "n": args.n,
                    "x": args.x,
                    "prior": kind,
                    "grid_size": args.grid_size,
                    "summary": summary,
                    "epsilon": args.epsilon,
                    "fair_mass": fair,
                    "q": q,
                    "density": d,
                }),
            )?;
        }
    }
    Ok(())
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[command(flatten)]
    model: ModelArgs,
    /// Number of tests.
    #[arg(long)]
    n: u64,
    /// Number of positives (default: n).
    #[arg(long)]
    k: Option<u64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Accepted samples to collect before stopping.
    #[arg(long, default_value_t = 10_000)]
    min_accepted: u64,
    /// Total draw budget.
    #[arg(long, default_value_t = 100_000_000)]
    max_total: u64,
    /// Agreement tolerance in standard errors.
    #[arg(long, default_value_t = 3.0)]
    sigmas: f64,
    /// Shift every positive rate in the sampled model by this amount,
    /// clamped to [0, 1]. A negative control: verification should fail.
    #[arg(long, allow_hyphen_values = true)]
    inject_theta_error: Option<f64>,
}

#[derive(Debug, Serialize)]
struct Verification<'a> {
    scenario: &'a str,
    target: &'a str,
    n: u64,
    k: u64,
    analytic: f64,
    estimate: f64,
    standard_error: f64,
    z_score: f64,
    accepted: u64,
    total: u64,
    seed: u64,
    theta_error: f64,
    pass: bool,
}

pub fn verify(args: &VerifyArgs, format: OutputFormat, out: Out) -> Result<(), CliError> {
    let cfg = RunConfig::resolve(&args.model, None)?;
    let evidence = Evidence::new(args.n, args.k.unwrap_or(args.n))?;
    let delta = args.inject_theta_error.unwrap_or(0.0);
    if !delta.is_finite() {
        return Err(CliError::Usage("--inject-theta-error must be finite".into()));
    }
    if args.sigmas.is_nan() || args.sigmas <= 0.0 {
        return Err(CliError::Usage("--sigmas must be positive".into()));
    }
    let sampled = if delta == 0.0 {
        cfg.model.clone()
    } else {
        let shifted = cfg
            .model
            .positive_prob()
            .iter()
            .map(|row| row.iter().map(|t| (t + delta).clamp(0.0, 1.0)).collect())
            .collect();
        cfg.model.with_positive_prob(shifted)?
    };
    let exact = posterior(&cfg.model, evidence)?.hypothesis_marginal;
    let est = estimate_posterior(&sampled, evidence, args.min_accepted, args.max_total, args.seed)?;
    let i = cfg.target;
    let v = Verification {
        scenario: &cfg.label,
        target: cfg.target_label(),
        n: evidence.n(),
        k: evidence.k(),
        analytic: exact[i],
        estimate: est.estimate[i],
        standard_error: est.effective_standard_error(i),
        z_score: est.z_score(i, exact[i]),
        accepted: est.accepted_samples,
        total: est.total_samples,
        seed: args.seed,
        theta_error: delta,
        pass: est.agrees_with(&exact, args.sigmas),
    };
    match format {
        OutputFormat::Csv => {
            writeln!(
                out,
                "scenario,target,n,k,analytic,estimate,standard_error,z_score,accepted,total,seed,theta_error,pass"
            )?;
            writeln!(
                out,
                "{},{},{},{},{},{},{},{},{},{},{},{},{}",
                v.scenario,
                v.target,
                v.n,
                v.k,
                num(v.analytic),
                num(v.estimate),
                num(v.standard_error),
                num(v.z_score),
                v.accepted,
                v.total,
                v.seed,
                v.theta_error,
                v.pass
            )?;
        }
        OutputFormat::Json => write_json(out, &v)?,
    }
    if v.pass {
        Ok(())
    } else {
        Err(CliError::VerificationFailed)
    }
}
