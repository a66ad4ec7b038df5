//! Hardware-fault floor on the false-acceptance rate of iterated
//! probabilistic primality testing.
//!
//! A single bit flip in the test's machine code is assumed to make it accept
//! every composite. With per-bit flip rate `λ` and the code resident for `T`
//! seconds, the fault probability is `p_f = 1 - exp(-λ_eff T)`. Parity
//! checked every `R` seconds needs two flips between checks
//! (`λ_eff = λ²R`); a code detecting two-bit errors needs three
//! (`λ_eff = λ³R²`).
//!
//! An adversarially chosen composite passes `k` correct iterations with
//! probability `4^-k`, so overall `p_fa = 4^-k (1 - p_f) + p_f`. Values reach
//! far below `f64` range for large `k`, so they are carried as base-2
//! logarithms ([`Log2Prob`]).

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{check_probability, Error, Result};

/// Nominal month of uptime, 30.4 days.
pub const SECONDS_PER_MONTH: f64 = 2.63e6;

/// Seconds per year used to convert annual module error rates.
pub const SECONDS_PER_YEAR: f64 = 3.156e7;

/// `log2` of the customary cryptographic acceptance target `2^-128`.
pub const SECURITY_LEVEL_LOG2: f64 = -128.0;

/// Error-correction applied to the memory holding the code.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Ecc {
    None,
    Parity,
    TwoBit,
}

impl std::str::FromStr for Ecc {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "none" => Ok(Ecc::None),
            "parity" => Ok(Ecc::Parity),
            "two-bit" => Ok(Ecc::TwoBit),
            other => Err(Error::Domain(format!("unknown ECC mode `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FaultScenario {
    /// Per-bit, per-second flip probability.
    pub lambda: f64,
    /// Seconds the code stays resident.
    pub exposure: f64,
    /// Seconds between integrity checks; required unless `ecc` is `None`.
    pub scrub_interval: Option<f64>,
    pub ecc: Ecc,
}

impl FaultScenario {
    pub fn new(lambda: f64, exposure: f64, scrub_interval: Option<f64>, ecc: Ecc) -> Result<Self> {
        if !(lambda >= 0.0 && lambda.is_finite()) {
            return Err(Error::Domain(format!("lambda = {lambda} must be a non-negative rate")));
        }
        if !(exposure >= 0.0 && exposure.is_finite()) {
            return Err(Error::Domain(format!("exposure = {exposure} must be non-negative")));
        }
        match (ecc, scrub_interval) {
            (Ecc::None, _) => {}
            (_, Some(r)) if r > 0.0 && r.is_finite() => {}
            (_, r) => {
                return Err(Error::Domain(format!(
                    "ECC mode {ecc:?} needs a positive scrub interval, got {r:?}"
                )))
            }
        }
        Ok(Self {
            lambda,
            exposure,
            scrub_interval,
            ecc,
        })
    }

    /// Unprotected memory.
    pub fn unprotected(lambda: f64, exposure: f64) -> Result<Self> {
        Self::new(lambda, exposure, None, Ecc::None)
    }

    /// Rate of undetected flips per second after error correction.
    pub fn effective_rate(&self) -> f64 {
        let l = self.lambda;
        match (self.ecc, self.scrub_interval) {
            (Ecc::None, _) => l,
            (Ecc::Parity, Some(r)) => l * l * r,
            (Ecc::TwoBit, Some(r)) => l * l * l * r * r,
            (_, None) => unreachable!("validated at construction"),
        }
    }
}

/// Probability that the fault has occurred by the end of the exposure.
pub fn bit_flip_probability(scenario: &FaultScenario) -> f64 {
    -(-scenario.effective_rate() * scenario.exposure).exp_m1()
}

/// A probability stored as its base-2 logarithm.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Log2Prob(f64);

impl Log2Prob {
    pub const ZERO: Log2Prob = Log2Prob(f64::NEG_INFINITY);
    pub const ONE: Log2Prob = Log2Prob(0.0);

    pub fn from_prob(p: f64) -> Result<Self> {
        check_probability("probability", p)?;
        Ok(Self(p.log2()))
    }

    pub fn from_log2(log2: f64) -> Result<Self> {
        if log2.is_nan() || log2 > 0.0 {
            return Err(Error::Domain(format!("log2 probability {log2} is not <= 0")));
        }
        Ok(Self(log2))
    }

    pub fn log2(self) -> f64 {
        self.0
    }

    /// The probability as an `f64`; underflows to 0 below about `2^-1074`.
    pub fn value(self) -> f64 {
        self.0.exp2()
    }

    /// `log2(2^a + 2^b)`.
    fn add(self, other: Self) -> Self {
        let (hi, lo) = if self.0 >= other.0 { (self.0, other.0) } else { (other.0, self.0) };
        if hi == f64::NEG_INFINITY {
            return Self::ZERO;
        }
        Self(hi + (lo - hi).exp2().ln_1p() / std::f64::consts::LN_2)
    }
}

impl fmt::Display for Log2Prob {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "2^{}", self.0)
    }
}

/// `4^-k (1 - p_f) + p_f`.
pub fn false_acceptance_rate(k: u64, p_f: f64) -> Result<Log2Prob> {
    check_probability("p_f", p_f)?;
    let algorithmic = Log2Prob(-2.0 * k as f64 + (-p_f).ln_1p() / std::f64::consts::LN_2);
    // the exact sum never exceeds 1; rounding in the log-sum can
    let sum = algorithmic.add(Log2Prob(p_f.log2()));
    Ok(Log2Prob(sum.0.min(0.0)))
}

/// How far the fault floor lifts `p_fa[k]` above the fault-free `4^-k`,
/// relative to `4^-k`: `p_f (4^k - 1)`.
pub fn relative_excess(k: u64, p_f: f64) -> Result<f64> {
    check_probability("p_f", p_f)?;
    Ok(p_f * (2.0 * k as f64).exp2() - p_f)
}

/// Ratio between an achieved false-acceptance rate and a target level.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SecurityGap {
    /// `p_fa / target`; may overflow to infinity when only `log2_ratio` is
    /// meaningful.
    pub ratio: f64,
    pub log2_ratio: f64,
}

pub fn security_gap(p_fa: f64, target: f64) -> Result<SecurityGap> {
    if target.is_nan() || target <= 0.0 {
        return Err(Error::Domain(format!("target = {target} must be positive")));
    }
    security_gap_log2(Log2Prob::from_prob(p_fa)?, Log2Prob::from_prob(target)?)
}

pub fn security_gap_log2(p_fa: Log2Prob, target: Log2Prob) -> Result<SecurityGap> {
    if target.0 == f64::NEG_INFINITY {
        return Err(Error::Domain("target must be positive".into()));
    }
    let log2_ratio = p_fa.0 - target.0;
    Ok(SecurityGap {
        ratio: log2_ratio.exp2(),
        log2_ratio,
    })
}

/// Per-bit, per-second flip rate implied by an annual per-module error
/// probability spread evenly across `module_bits` bits.
pub fn google_lambda(module_error_rate_per_year: f64, module_bits: f64) -> Result<f64> {
    if !(module_error_rate_per_year >= 0.0 && module_error_rate_per_year.is_finite()) {
        return Err(Error::Domain(format!(
            "annual error rate {module_error_rate_per_year} must be non-negative"
        )));
    }
    if !(module_bits > 0.0 && module_bits.is_finite()) {
        return Err(Error::Domain(format!("module_bits = {module_bits} must be positive")));
    }
    Ok(module_error_rate_per_year / (module_bits * SECONDS_PER_YEAR))
}
