//! Posterior-versus-evidence curves and their summaries: peak, limit,
//! achievable confidence and vote-count bands.

use std::ops::RangeInclusive;

use serde::{Deserialize, Serialize};

use crate::error::{check_probability, Error, Result};
use crate::model::{posterior, posterior_curve, Evidence, FailureModel};

/// Tolerance used when deciding whether two cells share the dominant
/// positive-response probability.
pub const THETA_TIE_TOLERANCE: f64 = 1e-12;

/// Distance from the analytic limit at which an adaptive curve is
/// considered converged.
pub const CONVERGENCE_TOLERANCE: f64 = 1e-6;

/// Largest trial count an adaptive curve may grow to.
pub const MAX_ADAPTIVE_N: u64 = 1_000_000;

/// How many positives accompany `n` trials along a curve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CurveMode {
    /// Every trial positive.
    Unanimous,
    /// `round(r * n)` positives.
    FixedFraction(f64),
}

impl CurveMode {
    pub fn positives(self, n: u64) -> Result<u64> {
        match self {
            CurveMode::Unanimous => Ok(n),
            CurveMode::FixedFraction(r) => {
                check_probability("fixed fraction", r)?;
                Ok(((r * n as f64).round() as u64).min(n))
            }
        }
    }
}

/// Posterior of one hypothesis for `n = 0..=n_max`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PosteriorCurve {
    values: Vec<f64>,
    target: usize,
    mode: CurveMode,
}

impl PosteriorCurve {
    pub fn new(values: Vec<f64>, target: usize, mode: CurveMode) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::Range("a curve needs at least the n = 0 point".into()));
        }
        for (n, &v) in values.iter().enumerate() {
            check_probability(&format!("curve value at n = {n}"), v)?;
        }
        Ok(Self {
            values,
            target,
            mode,
        })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn target(&self) -> usize {
        self.target
    }

    pub fn mode(&self) -> CurveMode {
        self.mode
    }

    pub fn n_max(&self) -> u64 {
        self.values.len() as u64 - 1
    }

    pub fn last(&self) -> f64 {
        self.values[self.values.len() - 1]
    }

    /// Maximal runs of `n` whose value is at least `tau`.
    pub fn threshold_band(&self, tau: f64) -> Vec<RangeInclusive<u64>> {
        let mut runs = Vec::new();
        let mut start = None;
        for (n, &v) in self.values.iter().enumerate() {
            match (v >= tau, start) {
                (true, None) => start = Some(n as u64),
                (false, Some(s)) => {
                    runs.push(s..=n as u64 - 1);
                    start = None;
                }
                _ => {}
            }
        }
        if let Some(s) = start {
            runs.push(s..=self.n_max());
        }
        runs
    }
}

/// Smallest `n` attaining the maximum of the curve, and that maximum.
pub fn find_peak(curve: &PosteriorCurve) -> (u64, f64) {
    let mut best = (0, curve.values[0]);
    for (n, &v) in curve.values.iter().enumerate().skip(1) {
        if v > best.1 {
            best = (n as u64, v);
        }
    }
    best
}

/// Limit of `P[target | k = n]` as `n → ∞`.
///
/// Only the cells with the largest positive-response probability (among
/// those with prior mass) survive; the limit is the target row's share of
/// their prior mass.
pub fn asymptote(model: &FailureModel, target: usize) -> Result<f64> {
    if target >= model.num_hypotheses() {
        return Err(Error::Range(format!("target hypothesis {target} out of range")));
    }
    let dominant = model
        .cells()
        .filter(|&(_, _, prior, _)| prior > 0.0)
        .map(|(_, _, _, theta)| theta)
        .fold(0.0, f64::max);
    if dominant == 0.0 {
        return Err(Error::UndefinedLimit(
            "no cell with prior mass has a positive response probability".into(),
        ));
    }
    let (mut on_target, mut total) = (0.0, 0.0);
    for (i, _, prior, theta) in model.cells() {
        if prior > 0.0 && (dominant - theta).abs() <= THETA_TIE_TOLERANCE {
            total += prior;
            if i == target {
                on_target += prior;
            }
        }
    }
    Ok(on_target / total)
}

/// Peak, limit and threshold summary of a unanimous curve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveSummary {
    pub peak_n: u64,
    pub peak_value: f64,
    pub limit_value: f64,
    pub max_value: f64,
    pub threshold: f64,
    pub threshold_band: Vec<RangeInclusive<u64>>,
}

pub fn summarize(curve: &PosteriorCurve, model: &FailureModel, tau: f64) -> Result<CurveSummary> {
    let (peak_n, peak_value) = find_peak(curve);
    Ok(CurveSummary {
        peak_n,
        peak_value,
        limit_value: asymptote(model, curve.target)?,
        max_value: peak_value,
        threshold: tau,
        threshold_band: curve.threshold_band(tau),
    })
}

/// Whether a curve ever reaches a confidence level.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Ceiling {
    pub tau: f64,
    pub reached: bool,
    pub max_value: f64,
    pub n_max: u64,
}

pub fn confidence_ceiling(curve: &PosteriorCurve, tau: f64) -> Ceiling {
    let (_, max_value) = find_peak(curve);
    Ceiling {
        tau,
        reached: max_value >= tau,
        max_value,
        n_max: curve.n_max(),
    }
}

/// Unanimous curve long enough to be past its peak and within
/// [`CONVERGENCE_TOLERANCE`] of the analytic limit.
///
/// Starts at `n_max = 64` and doubles up to [`MAX_ADAPTIVE_N`].
pub fn converged_curve(model: &FailureModel, target: usize) -> Result<PosteriorCurve> {
    let limit = asymptote(model, target)?;
    let mut n_max = 64;
    loop {
        let curve = posterior_curve(model, target, n_max, CurveMode::Unanimous)?;
        let (peak_n, peak_value) = find_peak(&curve);
        let settled = (curve.last() - limit).abs() <= CONVERGENCE_TOLERANCE;
        // a curve still rising at the end has its supremum at the limit
        let past_peak = peak_n < n_max || (limit - peak_value).abs() <= CONVERGENCE_TOLERANCE;
        if settled && past_peak {
            return Ok(curve);
        }
        if n_max >= MAX_ADAPTIVE_N {
            return Err(Error::Convergence(format!(
                "curve still {} from its limit {limit} at n = {n_max}",
                (curve.last() - limit).abs()
            )));
        }
        n_max = (n_max * 2).min(MAX_ADAPTIVE_N);
    }
}

/// [`confidence_ceiling`] over an adaptively extended unanimous curve.
pub fn converged_ceiling(model: &FailureModel, target: usize, tau: f64) -> Result<Ceiling> {
    Ok(confidence_ceiling(&converged_curve(model, target)?, tau))
}

/// Posteriors for every vote count in a window at fixed panel size.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvictionBand {
    pub n: u64,
    pub points: Vec<(u64, f64)>,
    /// Lowest posterior in the window and where it occurs (first on ties).
    pub min: (u64, f64),
}

impl ConvictionBand {
    pub fn contains(&self, k: u64) -> bool {
        self.points.first().is_some_and(|p| p.0 <= k) && self.points.last().is_some_and(|p| k <= p.0)
    }
}

pub fn conviction_band(
    model: &FailureModel,
    target: usize,
    n: u64,
    k_min: u64,
    k_max: u64,
) -> Result<ConvictionBand> {
    if !(k_min <= k_max && k_max <= n) {
        return Err(Error::Range(format!(
            "band [{k_min}, {k_max}] is not inside [0, {n}]"
        )));
    }
    if target >= model.num_hypotheses() {
        return Err(Error::Range(format!("target hypothesis {target} out of range")));
    }
    let points = (k_min..=k_max)
        .map(|k| {
            posterior(model, Evidence::new(n, k)?).map(|p| (k, p.hypothesis_marginal[target]))
        })
        .collect::<Result<Vec<_>>>()?;
    let min = points
        .iter()
        .copied()
        .fold(points[0], |best, p| if p.1 < best.1 { p } else { best });
    Ok(ConvictionBand { n, points, min })
}
