//! Hidden-failure-state evidence model and exact posterior computation.
//!
//! A [`FailureModel`] places a joint prior over `(hypothesis, failure state)`
//! cells and gives, for each cell, the probability that a single measurement
//! comes back positive. Measurements are exchangeable Bernoulli trials, so
//! the evidence reduces to a count of positives out of `n` ([`Evidence`]).
//!
//! The posterior over every cell is
//!
//! ```text
//! P[H_i, F=f | X] = Bin(k; n, θ_if) P[H_i, F=f] / Σ_{j,g} Bin(k; n, θ_jg) P[H_j, F=g]
//! ```
//!
//! evaluated in log space so that `n` in the millions neither underflows nor
//! loses the cells whose likelihood is exactly zero.

use serde::{Deserialize, Serialize};

use crate::curve::{CurveMode, PosteriorCurve};
use crate::error::{check_probability, Error, Result};

/// Tolerance on the total mass of a joint prior.
pub const PRIOR_SUM_TOLERANCE: f64 = 1e-12;

/// Joint prior over hypotheses and failure states plus per-cell
/// positive-response probabilities. Rows are hypotheses, columns are states.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawFailureModel")]
pub struct FailureModel {
    hypothesis_labels: Vec<String>,
    state_labels: Vec<String>,
    joint_prior: Vec<Vec<f64>>,
    positive_prob: Vec<Vec<f64>>,
}

#[derive(Deserialize)]
struct RawFailureModel {
    hypothesis_labels: Vec<String>,
    state_labels: Vec<String>,
    joint_prior: Vec<Vec<f64>>,
    positive_prob: Vec<Vec<f64>>,
}

impl TryFrom<RawFailureModel> for FailureModel {
    type Error = Error;

    fn try_from(raw: RawFailureModel) -> Result<Self> {
        FailureModel::new(
            raw.hypothesis_labels,
            raw.state_labels,
            raw.joint_prior,
            raw.positive_prob,
        )
    }
}

impl FailureModel {
    pub fn new<H, S>(
        hypothesis_labels: Vec<H>,
        state_labels: Vec<S>,
        joint_prior: Vec<Vec<f64>>,
        positive_prob: Vec<Vec<f64>>,
    ) -> Result<Self>
    where
        H: Into<String>,
        S: Into<String>,
    {
        let hypothesis_labels: Vec<String> =
            hypothesis_labels.into_iter().map(Into::into).collect();
        let state_labels: Vec<String> = state_labels.into_iter().map(Into::into).collect();

        if hypothesis_labels.len() < 2 {
            return Err(Error::Shape(format!(
                "need at least 2 hypotheses, got {}",
                hypothesis_labels.len()
            )));
        }
        if state_labels.is_empty() {
            return Err(Error::Shape("need at least 1 failure state".into()));
        }
        let (h, s) = (hypothesis_labels.len(), state_labels.len());
        for (name, matrix) in [("joint_prior", &joint_prior), ("positive_prob", &positive_prob)] {
            if matrix.len() != h || matrix.iter().any(|row| row.len() != s) {
                return Err(Error::Shape(format!("{name} must be {h}x{s}")));
            }
        }

        let mut total = 0.0;
        for (i, row) in joint_prior.iter().enumerate() {
            for (f, &p) in row.iter().enumerate() {
                if !(p >= 0.0 && p.is_finite()) {
                    return Err(Error::Domain(format!("joint_prior[{i}][{f}] = {p} is negative")));
                }
                total += p;
            }
        }
        if (total - 1.0).abs() > PRIOR_SUM_TOLERANCE {
            return Err(Error::Domain(format!("joint_prior sums to {total}, not 1")));
        }
        for (i, row) in positive_prob.iter().enumerate() {
            for (f, &p) in row.iter().enumerate() {
                check_probability(&format!("positive_prob[{i}][{f}]"), p)?;
            }
        }

        Ok(Self {
            hypothesis_labels,
            state_labels,
            joint_prior,
            positive_prob,
        })
    }

    pub fn hypothesis_labels(&self) -> &[String] {
        &self.hypothesis_labels
    }

    pub fn state_labels(&self) -> &[String] {
        &self.state_labels
    }

    pub fn joint_prior(&self) -> &[Vec<f64>] {
        &self.joint_prior
    }

    pub fn positive_prob(&self) -> &[Vec<f64>] {
        &self.positive_prob
    }

    pub fn num_hypotheses(&self) -> usize {
        self.hypothesis_labels.len()
    }

    pub fn num_states(&self) -> usize {
        self.state_labels.len()
    }

    /// Index of the hypothesis carrying `label`, if any.
    pub fn hypothesis_index(&self, label: &str) -> Option<usize> {
        self.hypothesis_labels.iter().position(|l| l == label)
    }

    /// Prior probability of each hypothesis (row sums of the joint prior).
    pub fn prior_marginal(&self) -> Vec<f64> {
        self.joint_prior.iter().map(|row| row.iter().sum()).collect()
    }

    /// Same model with a different positive-response matrix.
    pub fn with_positive_prob(&self, positive_prob: Vec<Vec<f64>>) -> Result<Self> {
        Self::new(
            self.hypothesis_labels.clone(),
            self.state_labels.clone(),
            self.joint_prior.clone(),
            positive_prob,
        )
    }

    /// Reorders hypotheses so that row `i` of the result is row `order[i]`
    /// of `self`.
    pub fn permute_hypotheses(&self, order: &[usize]) -> Result<Self> {
        let h = self.num_hypotheses();
        let mut seen = vec![false; h];
        if order.len() != h || !order.iter().all(|&i| i < h && !std::mem::replace(&mut seen[i], true)) {
            return Err(Error::Range(format!("{order:?} is not a permutation of 0..{h}")));
        }
        Ok(Self {
            hypothesis_labels: order.iter().map(|&i| self.hypothesis_labels[i].clone()).collect(),
            state_labels: self.state_labels.clone(),
            joint_prior: order.iter().map(|&i| self.joint_prior[i].clone()).collect(),
            positive_prob: order.iter().map(|&i| self.positive_prob[i].clone()).collect(),
        })
    }

    /// Iterates `(hypothesis, state, prior, positive_prob)` over every cell.
    pub fn cells(&self) -> impl Iterator<Item = (usize, usize, f64, f64)> + '_ {
        self.joint_prior
            .iter()
            .zip(&self.positive_prob)
            .enumerate()
            .flat_map(|(i, (prior_row, theta_row))| {
                prior_row
                    .iter()
                    .zip(theta_row)
                    .enumerate()
                    .map(move |(f, (&prior, &theta))| (i, f, prior, theta))
            })
    }
}

/// Binomial summary of a run of exchangeable measurements: `k` positives
/// out of `n` trials.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub struct Evidence {
    n: u64,
    k: u64,
}

impl Evidence {
    pub fn new(n: u64, k: u64) -> Result<Self> {
        if k > n {
            return Err(Error::Domain(format!("k = {k} exceeds n = {n}")));
        }
        Ok(Self { n, k })
    }

    /// `n` trials, all positive.
    pub fn unanimous(n: u64) -> Self {
        Self { n, k: n }
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    pub fn k(&self) -> u64 {
        self.k
    }
}

/// Posterior over every `(hypothesis, state)` cell and both marginals.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PosteriorResult {
    pub joint: Vec<Vec<f64>>,
    pub hypothesis_marginal: Vec<f64>,
    pub state_marginal: Vec<f64>,
}

/// `ln P[X = k]` for `X ~ Bin(n, p)`.
///
/// Exact at `p ∈ {0, 1}`: returns `-inf` for impossible outcomes and `0`
/// for forced ones.
pub fn log_binomial_pmf(n: u64, k: u64, p: f64) -> Result<f64> {
    if k > n {
        return Err(Error::Domain(format!("k = {k} exceeds n = {n}")));
    }
    check_probability("p", p)?;
    let kernel = log_bernoulli_kernel(n, k, p);
    if kernel == f64::NEG_INFINITY {
        return Ok(kernel);
    }
    Ok(log_choose(n, k) + kernel)
}

fn log_choose(n: u64, k: u64) -> f64 {
    use libm::lgamma as ln_gamma;
    if k == 0 || k == n {
        return 0.0;
    }
    ln_gamma(n as f64 + 1.0) - ln_gamma(k as f64 + 1.0) - ln_gamma((n - k) as f64 + 1.0)
}

/// `k ln p + (n - k) ln(1 - p)` with the convention `0 · ln 0 = 0`.
pub(crate) fn log_bernoulli_kernel(n: u64, k: u64, p: f64) -> f64 {
    let positives = if k == 0 { 0.0 } else { k as f64 * p.ln() };
    let negatives = if k == n { 0.0 } else { (n - k) as f64 * (-p).ln_1p() };
    positives + negatives
}

/// Exact posterior of `model` given `evidence`.
///
/// The binomial coefficient is common to every cell and cancels in the
/// normalization, so only the Bernoulli kernel enters the log weights.
pub fn posterior(model: &FailureModel, evidence: Evidence) -> Result<PosteriorResult> {
    let (n, k) = (evidence.n, evidence.k);
    let log_weights: Vec<Vec<f64>> = model
        .joint_prior
        .iter()
        .zip(&model.positive_prob)
        .map(|(prior_row, theta_row)| {
            prior_row
                .iter()
                .zip(theta_row)
                .map(|(&prior, &theta)| {
                    if prior == 0.0 {
                        f64::NEG_INFINITY
                    } else {
                        prior.ln() + log_bernoulli_kernel(n, k, theta)
                    }
                })
                .collect()
        })
        .collect();

    let max = log_weights
        .iter()
        .flatten()
        .copied()
        .fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return Err(Error::DegenerateEvidence(format!("n = {n}, k = {k}")));
    }

    let mut joint: Vec<Vec<f64>> = log_weights
        .iter()
        .map(|row| row.iter().map(|&w| (w - max).exp()).collect())
        .collect();
    let total: f64 = joint.iter().flatten().sum();
    for cell in joint.iter_mut().flatten() {
        *cell /= total;
    }

    let hypothesis_marginal = joint.iter().map(|row| row.iter().sum()).collect();
    let state_marginal = (0..model.num_states())
        .map(|f| joint.iter().map(|row| row[f]).sum())
        .collect();

    Ok(PosteriorResult {
        joint,
        hypothesis_marginal,
        state_marginal,
    })
}

/// Posterior of hypothesis `target` for `n = 0..=n_max`.
pub fn posterior_curve(
    model: &FailureModel,
    target: usize,
    n_max: u64,
    mode: CurveMode,
) -> Result<PosteriorCurve> {
    if target >= model.num_hypotheses() {
        return Err(Error::Range(format!(
            "target hypothesis {target} out of range for {} hypotheses",
            model.num_hypotheses()
        )));
    }
    let values = (0..=n_max)
        .map(|n| {
            let evidence = Evidence::new(n, mode.positives(n)?)?;
            posterior(model, evidence).map(|p| p.hypothesis_marginal[target])
        })
        .collect::<Result<Vec<_>>>()?;
    PosteriorCurve::new(values, target, mode)
}
