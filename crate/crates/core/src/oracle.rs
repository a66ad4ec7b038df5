//! Rejection-sampling check on the analytic posterior.
//!
//! Simulates the generative model directly: draw a `(hypothesis, state)`
//! cell from the joint prior, draw the number of positives from
//! `Bin(n, θ)` for that cell, and keep the draw only when it reproduces the
//! observed count. Accepted hypothesis frequencies estimate the posterior
//! without touching the likelihood formula.
//!
//! Draws are generated in fixed-size chunks, each with its own ChaCha stream
//! derived from the seed. Chunks may run in parallel, but the result is the
//! in-order prefix of chunks that first reaches the acceptance target, so it
//! does not depend on the number of worker threads.

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::Binomial;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Evidence, FailureModel};

/// Draws per chunk.
pub const CHUNK_DRAWS: u64 = 1 << 16;

/// Smallest acceptance target the oracle will run with.
pub const MIN_ACCEPTED_FLOOR: u64 = 100;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleEstimate {
    /// Accepted-sample frequency of each hypothesis.
    pub estimate: Vec<f64>,
    /// `sqrt(p̂ (1 - p̂) / accepted)` per hypothesis.
    pub standard_error: Vec<f64>,
    /// Accepted draws per hypothesis.
    pub counts: Vec<u64>,
    pub accepted_samples: u64,
    pub total_samples: u64,
    pub seed: u64,
}

impl OracleEstimate {
    /// Standard error used for agreement checks. When every accepted sample
    /// falls on one side the plug-in error is zero, so it is floored at the
    /// sampling resolution `1 / accepted`.
    pub fn effective_standard_error(&self, hypothesis: usize) -> f64 {
        self.standard_error[hypothesis].max(1.0 / self.accepted_samples as f64)
    }

    /// `(estimate - analytic) / effective standard error`.
    pub fn z_score(&self, hypothesis: usize, analytic: f64) -> f64 {
        (self.estimate[hypothesis] - analytic) / self.effective_standard_error(hypothesis)
    }

    /// Whether `analytic` lies within `sigmas` standard errors of the
    /// estimate for every hypothesis.
    pub fn agrees_with(&self, analytic: &[f64], sigmas: f64) -> bool {
        analytic
            .iter()
            .enumerate()
            .all(|(i, &a)| self.z_score(i, a).abs() <= sigmas)
    }

    fn from_counts(counts: Vec<u64>, total_samples: u64, seed: u64) -> Self {
        let accepted: u64 = counts.iter().sum();
        let estimate: Vec<f64> = counts
            .iter()
            .map(|&c| c as f64 / accepted as f64)
            .collect();
        let standard_error = estimate
            .iter()
            .map(|&p| (p * (1.0 - p) / accepted as f64).sqrt())
            .collect();
        Self {
            estimate,
            standard_error,
            counts,
            accepted_samples: accepted,
            total_samples,
            seed,
        }
    }
}

enum Response {
    Never,
    Always,
    Random(Binomial),
}

struct Sampler {
    cells: Vec<(usize, Response)>,
    picker: WeightedIndex<f64>,
    n: u64,
    k: u64,
    hypotheses: usize,
}

#[derive(Clone)]
struct ChunkTally {
    counts: Vec<u64>,
    draws: u64,
}

impl Sampler {
    fn new(model: &FailureModel, evidence: Evidence) -> Result<Self> {
        let n = evidence.n();
        let mut cells = Vec::new();
        let mut weights = Vec::new();
        for (i, _, prior, theta) in model.cells() {
            let response = if theta <= 0.0 {
                Response::Never
            } else if theta >= 1.0 {
                Response::Always
            } else {
                Response::Random(
                    Binomial::new(n, theta)
                        .map_err(|e| Error::Domain(format!("theta = {theta}: {e}")))?,
                )
            };
            cells.push((i, response));
            weights.push(prior);
        }
        let picker = WeightedIndex::new(&weights)
            .map_err(|e| Error::Domain(format!("joint prior cannot be sampled: {e}")))?;
        Ok(Self {
            cells,
            picker,
            n,
            k: evidence.k(),
            hypotheses: model.num_hypotheses(),
        })
    }

    fn positives(&self, response: &Response, rng: &mut ChaCha8Rng) -> u64 {
        match response {
            Response::Never => 0,
            Response::Always => self.n,
            Response::Random(binomial) => binomial.sample(rng),
        }
    }

    fn run_chunk(&self, seed: u64, chunk: u64, draws: u64) -> ChunkTally {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(chunk);
        let mut counts = vec![0; self.hypotheses];
        for _ in 0..draws {
            let (hypothesis, response) = &self.cells[self.picker.sample(&mut rng)];
            if self.positives(response, &mut rng) == self.k {
                counts[*hypothesis] += 1;
            }
        }
        ChunkTally { counts, draws }
    }
}

/// Estimates `P[H_i | evidence]` by rejection sampling.
///
/// Stops at the end of the first chunk that brings the accepted count to
/// `min_accepted`, or when `max_total` draws have been made.
pub fn estimate_posterior(
    model: &FailureModel,
    evidence: Evidence,
    min_accepted: u64,
    max_total: u64,
    seed: u64,
) -> Result<OracleEstimate> {
    if min_accepted < MIN_ACCEPTED_FLOOR {
        return Err(Error::Domain(format!(
            "min_accepted = {min_accepted} is below {MIN_ACCEPTED_FLOOR}"
        )));
    }
    let sampler = Sampler::new(model, evidence)?;
    let mut counts = vec![0u64; model.num_hypotheses()];
    let mut total = 0u64;
    let mut next_chunk = 0u64;

    while total < max_total {
        let remaining_chunks = (max_total - total).div_ceil(CHUNK_DRAWS);
        // round size only affects wasted work past the stopping chunk
        let round = remaining_chunks.min(rayon::current_num_threads() as u64);
        let first = next_chunk;
        let base = total;
        let tallies: Vec<ChunkTally> = (0..round)
            .into_par_iter()
            .map(|offset| {
                let chunk = first + offset;
                let start = base + offset * CHUNK_DRAWS;
                let draws = CHUNK_DRAWS.min(max_total - start);
                sampler.run_chunk(seed, chunk, draws)
            })
            .collect();
        for tally in tallies {
            for (c, t) in counts.iter_mut().zip(&tally.counts) {
                *c += t;
            }
            total += tally.draws;
            next_chunk += 1;
            if counts.iter().sum::<u64>() >= min_accepted {
                return Ok(OracleEstimate::from_counts(counts, total, seed));
            }
        }
    }

    Err(Error::InsufficientAcceptance {
        accepted: counts.iter().sum(),
        total,
        needed: min_accepted,
    })
}
