//! Posterior over a coin's heads probability `Q` on a uniform grid.
//!
//! `P[Q | x heads in n] ∝ Q^x (1 - Q)^(n - x) P[Q]`, evaluated in log space
//! and normalized with the trapezoidal rule. Conjugate Beta priors give
//! closed forms that the tests use as oracles.

use serde::{Deserialize, Serialize};

use crate::error::{check_probability, Error, Result};

/// Grid resolution used unless a prior asks for another.
pub const DEFAULT_GRID_SIZE: usize = 10_001;

/// Smallest accepted grid.
pub const MIN_GRID_SIZE: usize = 101;

/// Shape of a coin-bias prior.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum PriorKind {
    Uniform,
    /// Beta density; both shapes must be at least 1 so the density stays
    /// finite at the grid endpoints.
    Beta { a: f64, b: f64 },
    /// `weight_fair · Beta(c, c) + (1 - weight_fair) · background`.
    Mixture {
        weight_fair: f64,
        fair_concentration: f64,
        background_a: f64,
        background_b: f64,
    },
}

impl PriorKind {
    /// 99% on `Beta(500, 500)`, 1% uniform: a coin almost surely fair.
    pub fn near_fair() -> Self {
        PriorKind::Mixture {
            weight_fair: 0.99,
            fair_concentration: 500.0,
            background_a: 1.0,
            background_b: 1.0,
        }
    }
}

fn check_shape(name: &str, value: f64) -> Result<()> {
    if value >= 1.0 && value.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!("{name} = {value} must be a finite shape >= 1")))
    }
}

/// The grid shared by priors and posteriors: `q_j = j / (m - 1)` with
/// `ln q` and `ln(1 - q)` precomputed so that mirror images are bitwise
/// symmetric.
#[derive(Debug, Clone, PartialEq)]
struct Grid {
    q: Vec<f64>,
    ln_q: Vec<f64>,
    ln_1mq: Vec<f64>,
}

impl Grid {
    fn new(size: usize) -> Self {
        let last = (size - 1) as f64;
        let q: Vec<f64> = (0..size).map(|j| j as f64 / last).collect();
        let ln_q: Vec<f64> = (0..size)
            .map(|j| {
                // take the small side of the pair for accuracy
                let mirror = size - 1 - j;
                if j <= mirror {
                    (j as f64 / last).ln()
                } else {
                    (-(mirror as f64 / last)).ln_1p()
                }
            })
            .collect();
        let ln_1mq = ln_q.iter().rev().copied().collect();
        Self { q, ln_q, ln_1mq }
    }

    fn spacing(&self) -> f64 {
        1.0 / (self.q.len() - 1) as f64
    }

    fn log_beta_density(&self, a: f64, b: f64) -> Vec<f64> {
        let norm = ln_beta(a, b);
        self.ln_q
            .iter()
            .zip(&self.ln_1mq)
            .map(|(&lq, &l1q)| {
                let head = if a == 1.0 { 0.0 } else { (a - 1.0) * lq };
                let tail = if b == 1.0 { 0.0 } else { (b - 1.0) * l1q };
                head + tail - norm
            })
            .collect()
    }
}

fn ln_beta(a: f64, b: f64) -> f64 {
    libm::lgamma(a) + libm::lgamma(b) - libm::lgamma(a + b)
}

fn trapezoid(values: &[f64], h: f64) -> f64 {
    let n = values.len();
    let inner: f64 = values[1..n - 1].iter().sum();
    h * (inner + 0.5 * (values[0] + values[n - 1]))
}

/// Exponentiates log densities and normalizes them to unit trapezoidal mass.
fn normalize_log(log_density: &[f64], h: f64) -> Result<Vec<f64>> {
    let max = log_density.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return Err(Error::DegenerateEvidence(
            "density vanishes on every grid point".into(),
        ));
    }
    let unnormalized: Vec<f64> = log_density.iter().map(|&l| (l - max).exp()).collect();
    let mass = trapezoid(&unnormalized, h);
    if mass.is_nan() || mass <= 0.0 {
        return Err(Error::DegenerateEvidence(
            "density has no trapezoidal mass".into(),
        ));
    }
    Ok(unnormalized.into_iter().map(|d| d / mass).collect())
}

/// A prior over `Q`, tabulated on the grid and normalized.
#[derive(Debug, Clone, PartialEq)]
pub struct BiasPrior {
    kind: PriorKind,
    grid: Grid,
    density: Vec<f64>,
}

impl BiasPrior {
    pub fn new(kind: PriorKind, grid_size: usize) -> Result<Self> {
        if grid_size < MIN_GRID_SIZE || grid_size.is_multiple_of(2) {
            return Err(Error::Domain(format!(
                "grid_size = {grid_size} must be odd and at least {MIN_GRID_SIZE}"
            )));
        }
        let grid = Grid::new(grid_size);
        let log_density = match kind {
            PriorKind::Uniform => vec![0.0; grid_size],
            PriorKind::Beta { a, b } => {
                check_shape("a", a)?;
                check_shape("b", b)?;
                grid.log_beta_density(a, b)
            }
            PriorKind::Mixture {
                weight_fair,
                fair_concentration,
                background_a,
                background_b,
            } => {
                check_probability("weight_fair", weight_fair)?;
                check_shape("fair_concentration", fair_concentration)?;
                check_shape("background_a", background_a)?;
                check_shape("background_b", background_b)?;
                let fair = grid.log_beta_density(fair_concentration, fair_concentration);
                let background = grid.log_beta_density(background_a, background_b);
                let (lw, lv) = (weight_fair.ln(), (1.0 - weight_fair).ln());
                fair.iter()
                    .zip(&background)
                    .map(|(&f, &g)| log_add(lw + f, lv + g))
                    .collect()
            }
        };
        let density = normalize_log(&log_density, grid.spacing())?;
        Ok(Self { kind, grid, density })
    }

    pub fn uniform() -> Self {
        Self::new(PriorKind::Uniform, DEFAULT_GRID_SIZE).expect("default grid is valid")
    }

    pub fn kind(&self) -> PriorKind {
        self.kind
    }

    pub fn grid(&self) -> &[f64] {
        &self.grid.q
    }

    pub fn density(&self) -> &[f64] {
        &self.density
    }

    pub fn grid_size(&self) -> usize {
        self.grid.q.len()
    }
}

fn log_add(a: f64, b: f64) -> f64 {
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    if hi == f64::NEG_INFINITY {
        hi
    } else {
        hi + (lo - hi).exp().ln_1p()
    }
}

/// Point summaries of a [`BiasPosterior`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BiasSummary {
    pub mean: f64,
    /// Grid point with the highest density (first on ties).
    pub map: f64,
    /// Central 95% credible interval.
    pub ci_low: f64,
    pub ci_high: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BiasPosterior {
    grid: Vec<f64>,
    density: Vec<f64>,
    summary: BiasSummary,
}

impl BiasPosterior {
    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    pub fn density(&self) -> &[f64] {
        &self.density
    }

    pub fn summary(&self) -> BiasSummary {
        self.summary
    }

    fn spacing(&self) -> f64 {
        1.0 / (self.grid.len() - 1) as f64
    }

    /// Trapezoidal mass of the density.
    pub fn total_mass(&self) -> f64 {
        trapezoid(&self.density, self.spacing())
    }

    /// Trapezoidal mass on `[lo, hi]`, interpolating linearly at endpoints
    /// that fall between grid points.
    pub fn mass_between(&self, lo: f64, hi: f64) -> f64 {
        let h = self.spacing();
        let last = self.grid.len() - 1;
        let lo = lo.clamp(0.0, 1.0);
        let hi = hi.clamp(0.0, 1.0);
        if hi <= lo {
            return 0.0;
        }
        let at = |q: f64| {
            let pos = q / h;
            let j = (pos.floor() as usize).min(last - 1);
            let t = pos - j as f64;
            self.density[j] * (1.0 - t) + self.density[j + 1] * t
        };
        // snap endpoints sitting on a grid node to avoid a zero-width sliver
        let first = ((lo / h) - 1e-9).ceil().max(0.0) as usize;
        let end = (((hi / h) + 1e-9).floor() as usize).min(last);
        let mut points: Vec<(f64, f64)> = Vec::with_capacity(end.saturating_sub(first) + 3);
        points.push((lo, at(lo)));
        for j in first..=end {
            let q = self.grid[j];
            if q > lo && q < hi {
                points.push((q, self.density[j]));
            }
        }
        points.push((hi, at(hi)));
        points
            .windows(2)
            .map(|w| 0.5 * (w[1].0 - w[0].0) * (w[0].1 + w[1].1))
            .sum()
    }
}

/// Posterior of the coin's heads probability after `x` heads in `n` tosses.
pub fn coin_posterior(prior: &BiasPrior, n: u64, x: u64) -> Result<BiasPosterior> {
    if x > n {
        return Err(Error::Domain(format!("x = {x} heads exceeds n = {n} tosses")));
    }
    let grid = &prior.grid;
    let (heads, tails) = (x as f64, (n - x) as f64);
    let log_density: Vec<f64> = prior
        .density
        .iter()
        .zip(grid.ln_q.iter().zip(&grid.ln_1mq))
        .map(|(&d, (&lq, &l1q))| {
            let like = if x == 0 { 0.0 } else { heads * lq } + if x == n { 0.0 } else { tails * l1q };
            d.ln() + like
        })
        .collect();
    let density = normalize_log(&log_density, grid.spacing())?;
    let summary = summarize(&grid.q, &density, grid.spacing());
    Ok(BiasPosterior {
        grid: grid.q.clone(),
        density,
        summary,
    })
}

fn summarize(q: &[f64], density: &[f64], h: f64) -> BiasSummary {
    let weighted: Vec<f64> = q.iter().zip(density).map(|(q, d)| q * d).collect();
    let mean = trapezoid(&weighted, h);

    let mut map_j = 0;
    for (j, &d) in density.iter().enumerate() {
        if d > density[map_j] {
            map_j = j;
        }
    }

    // cumulative trapezoid, normalized against its own total
    let mut cdf = Vec::with_capacity(q.len());
    cdf.push(0.0);
    for w in density.windows(2) {
        let prev = *cdf.last().unwrap();
        cdf.push(prev + 0.5 * h * (w[0] + w[1]));
    }
    let total = *cdf.last().unwrap();
    let quantile = |p: f64| {
        let target = p * total;
        let j = cdf.partition_point(|&c| c < target).clamp(1, q.len() - 1);
        let (c0, c1) = (cdf[j - 1], cdf[j]);
        let t = if c1 > c0 { (target - c0) / (c1 - c0) } else { 0.0 };
        q[j - 1] + t * h
    };

    BiasSummary {
        mean,
        map: q[map_j],
        ci_low: quantile(0.025),
        ci_high: quantile(0.975),
    }
}

/// Posterior mass within `epsilon` of a fair coin.
pub fn fair_mass(posterior: &BiasPosterior, epsilon: f64) -> Result<f64> {
    if !(epsilon > 0.0 && epsilon <= 0.5) {
        return Err(Error::Range(format!("epsilon = {epsilon} must be in (0, 0.5]")));
    }
    Ok(posterior.mass_between(0.5 - epsilon, 0.5 + epsilon))
}
