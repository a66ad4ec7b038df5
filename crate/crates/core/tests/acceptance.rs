//! End-to-end acceptance criteria. Runs without the libtest harness so each
//! criterion prints exactly one PASS/FAIL line; exits non-zero on any FAIL.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use hidden_failure::coin::{coin_posterior, BiasPrior, PriorKind, DEFAULT_GRID_SIZE};
use hidden_failure::crypto::{
    bit_flip_probability, false_acceptance_rate, relative_excess, security_gap_log2, Ecc,
    FaultScenario, Log2Prob, SECONDS_PER_MONTH, SECURITY_LEVEL_LOG2,
};
use hidden_failure::curve::{asymptote, converged_ceiling, find_peak};
use hidden_failure::model::{posterior, posterior_curve, Evidence};
use hidden_failure::oracle::estimate_posterior;
use hidden_failure::presets::{
    lineup_model, pot_asymmetric_prior_model, pot_model, sanhedrin_model, ScenarioId,
};
use hidden_failure::{CurveMode, Error};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn check(cond: bool, detail: String) -> Outcome {
    if cond {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn unanimous(model: &hidden_failure::FailureModel, n_max: u64) -> Vec<f64> {
    posterior_curve(model, 0, n_max, CurveMode::Unanimous)
        .expect("curve")
        .values()
        .to_vec()
}

fn ac1_pot_peak() -> Outcome {
    let model = pot_model(1e-2, 0.3, 0.9).map_err(|e| e.to_string())?;
    let curve = posterior_curve(&model, 0, 200, CurveMode::Unanimous).map_err(|e| e.to_string())?;
    let (peak_n, peak_value) = find_peak(&curve);
    let limit = asymptote(&model, 0).map_err(|e| e.to_string())?;
    let tail = curve.last();
    check(
        peak_n == 5 && (limit - 0.5).abs() <= 1e-9 && (tail - limit).abs() <= 1e-9,
        format!("peak n={peak_n} value={peak_value:.6}; limit={limit}; P(n=200)={tail:.12}"),
    )
}

fn ac2_asymmetric_prior() -> Outcome {
    let model = pot_asymmetric_prior_model(1e-2, 0.3, 0.9, 0.8).map_err(|e| e.to_string())?;
    let limit = asymptote(&model, 0).map_err(|e| e.to_string())?;
    check(limit == 0.8, format!("limit={limit:.17}"))
}

fn ac3_lineup() -> Outcome {
    let biased = lineup_model(0.01, 0.48, 0.8, 6, 0.9).map_err(|e| e.to_string())?;
    let ceiling = converged_ceiling(&biased, 0, 0.95).map_err(|e| e.to_string())?;
    let rare = lineup_model(1e-4, 0.48, 0.8, 6, 0.9).map_err(|e| e.to_string())?;
    let c = unanimous(&rare, 50);
    let curve = posterior_curve(&rare, 0, 50, CurveMode::Unanimous).map_err(|e| e.to_string())?;
    let (peak_n, _) = find_peak(&curve);
    check(
        ceiling.max_value < 0.95 && !ceiling.reached && peak_n == 5 && c[10] < c[3],
        format!(
            "p_c=0.01 sup={:.6} over n<={}; p_c=1e-4 peak n={peak_n}, P(10)={:.6} < P(3)={:.6}",
            ceiling.max_value, ceiling.n_max, c[10], c[3]
        ),
    )
}

fn ac4_lineup_rate() -> Outcome {
    let model = lineup_model(0.01, 0.48, 0.8, 6, 0.9).map_err(|e| e.to_string())?;
    let p_fp = model.positive_prob()[1][0];
    check(
        p_fp == 0.8 / 6.0 && (p_fp - 0.133).abs() < 5e-4,
        format!("p_fp={p_fp:.17}"),
    )
}

fn ac5_sanhedrin() -> Outcome {
    let model = sanhedrin_model(0.01, 0.14, 0.25, 0.95).map_err(|e| e.to_string())?;
    let values: Vec<f64> = (0..=23)
        .map(|k| posterior(&model, Evidence::new(23, k).unwrap()).map(|p| p.hypothesis_marginal[0]))
        .collect::<Result<_, Error>>()
        .map_err(|e| e.to_string())?;
    let k_star = (13..=23)
        .max_by(|&a, &b| values[a].total_cmp(&values[b]).then(b.cmp(&a)))
        .unwrap();
    let rising = (13..k_star).all(|k| values[k + 1] > values[k]);
    let falling = (k_star..23).all(|k| values[k + 1] < values[k]);
    check(
        k_star > 13 && k_star < 22 && rising && falling && values[23] < values[22],
        format!(
            "k*={k_star} P(13)={:.6} P(k*)={:.8} P(22)={:.6} P(23)={:.6}",
            values[13], values[k_star], values[22], values[23]
        ),
    )
}

fn ac6_crypto_floor() -> Outcome {
    let scenario = FaultScenario::unprotected(1e-19, SECONDS_PER_MONTH).map_err(|e| e.to_string())?;
    let p_f = bit_flip_probability(&scenario);
    let floor = p_f.log2();
    let mut worst = f64::INFINITY;
    for k in 0..=10_000u64 {
        let p = false_acceptance_rate(k, p_f).map_err(|e| e.to_string())?;
        worst = worst.min(p.log2() - floor);
    }
    let p_fa = false_acceptance_rate(10_000, p_f).map_err(|e| e.to_string())?;
    let gap = security_gap_log2(p_fa, Log2Prob::from_log2(SECURITY_LEVEL_LOG2).unwrap())
        .map_err(|e| e.to_string())?;
    check(
        (p_f - 2.6e-13).abs() <= 0.05 * 2.6e-13 && worst >= 0.0 && gap.log2_ratio > 80.0,
        format!(
            "p_f={p_f:.4e}; min log2(p_fa/p_f) over k<=1e4 = {worst:.3e}; gap=2^{:.2}",
            gap.log2_ratio
        ),
    )
}

fn ac7_ecc() -> Outcome {
    let parity = FaultScenario::new(1e-19, SECONDS_PER_MONTH, Some(0.1), Ecc::Parity)
        .map_err(|e| e.to_string())?;
    let parity_p = bit_flip_probability(&parity);
    let ratio = parity_p / (-108.0f64).exp2();
    let two_bit = FaultScenario::new(1e-19, SECONDS_PER_MONTH, Some(0.1), Ecc::TwoBit)
        .map_err(|e| e.to_string())?;
    let excess = relative_excess(64, bit_flip_probability(&two_bit)).map_err(|e| e.to_string())?;
    let excess_ratio = excess / 1e-14;
    check(
        (0.5..=2.0).contains(&ratio) && (0.1..=10.0).contains(&excess_ratio),
        format!(
            "parity p_f=2^{:.2} ({ratio:.3}x 2^-108); two-bit excess over 2^-128 = {excess:.3e}",
            parity_p.log2()
        ),
    )
}

fn ac8_coin() -> Outcome {
    let post = coin_posterior(&BiasPrior::uniform(), 10, 10).map_err(|e| e.to_string())?;
    let mean = post.summary().mean;
    let prior = BiasPrior::new(PriorKind::Beta { a: 3.0, b: 3.0 }, DEFAULT_GRID_SIZE)
        .map_err(|e| e.to_string())?;
    let a = coin_posterior(&prior, 40, 29).map_err(|e| e.to_string())?;
    let b = coin_posterior(&prior, 40, 11).map_err(|e| e.to_string())?;
    let m = a.density().len();
    let peak = a.density().iter().copied().fold(0.0, f64::max);
    let mirror_err = (0..m)
        .map(|j| (a.density()[j] - b.density()[m - 1 - j]).abs())
        .fold(0.0, f64::max)
        / peak;
    check(
        (mean - 11.0 / 12.0).abs() <= 1e-6 && mirror_err <= 1e-12,
        format!(
            "mean={mean:.10} (|err|={:.2e}); mirror max rel deviation={mirror_err:.2e}",
            (mean - 11.0 / 12.0).abs()
        ),
    )
}

fn ac9_oracle() -> Outcome {
    const SEEDS: u64 = 20;
    const MIN_ACCEPTED: u64 = 10_000;
    const BUDGET: u64 = 100_000_000;
    let start = Instant::now();
    let mut notes = Vec::new();
    let mut ok = true;
    let mut cases = 0;
    for id in ScenarioId::ALL {
        let model = id.default_model();
        for (n, k) in [(3, 3), (5, 5), (13, 13), (23, 13)] {
            let ev = Evidence::new(n, k).unwrap();
            let exact = posterior(&model, ev).map_err(|e| e.to_string())?.hypothesis_marginal;
            let mut passes = 0;
            let mut skipped = false;
            for seed in 0..SEEDS {
                match estimate_posterior(&model, ev, MIN_ACCEPTED, BUDGET, 1_000 + seed) {
                    Ok(est) => passes += est.agrees_with(&exact, 3.0) as u64,
                    Err(Error::InsufficientAcceptance { .. }) => {
                        skipped = true;
                        break;
                    }
                    Err(e) => return Err(e.to_string()),
                }
            }
            if skipped {
                notes.push(format!("{id}({n},{k}) skipped: too rare"));
                continue;
            }
            cases += 1;
            if passes < 19 {
                ok = false;
                notes.push(format!("{id}({n},{k}) {passes}/20"));
            }
        }
    }
    let elapsed = start.elapsed();
    ok &= elapsed < Duration::from_secs(60);
    let mut detail = format!("{cases} cases x 20 seeds in {:.1}s", elapsed.as_secs_f64());
    if !notes.is_empty() {
        detail.push_str(&format!("; {}", notes.join(", ")));
    }
    check(ok, detail)
}

fn ac10_stability() -> Outcome {
    let model = pot_model(1e-2, 0.3, 0.9).map_err(|e| e.to_string())?;
    let p = posterior(&model, Evidence::unanimous(100_000)).map_err(|e| e.to_string())?;
    let value = p.hypothesis_marginal[0];
    let limit = asymptote(&model, 0).map_err(|e| e.to_string())?;
    check(
        value.is_finite() && (value - limit).abs() <= 1e-9,
        format!("P(n=1e5)={value:.15}; limit={limit}"),
    )
}

fn main() -> ExitCode {
    let criteria: [Criterion; 10] = [
        ("AC1  pot peak at n=5, limit 0.5", ac1_pot_peak),
        ("AC2  asymmetric prior limit 0.8", ac2_asymmetric_prior),
        ("AC3  line-up ceiling and early peak", ac3_lineup),
        ("AC4  line-up false-positive rate 0.8/6", ac4_lineup_rate),
        ("AC5  sanhedrin rise-then-fall", ac5_sanhedrin),
        ("AC6  crypto fault floor", ac6_crypto_floor),
        ("AC7  parity and two-bit ECC", ac7_ecc),
        ("AC8  coin conjugacy and mirror", ac8_coin),
        ("AC9  oracle concordance", ac9_oracle),
        ("AC10 numerical stability n=1e5", ac10_stability),
    ];
    let mut failed = 0;
    for (name, run) in criteria {
        match run() {
            Ok(detail) => println!("PASS  {name}: {detail}"),
            Err(detail) => {
                failed += 1;
                println!("FAIL  {name}: {detail}");
            }
        }
    }
    println!("{} of {} acceptance criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
