//! Ready-made models for the worked scenarios: a pot of uncertain origin,
//! an identity parade, a 23-judge panel and iterated Rabin-Miller testing.
//!
//! Every constructor takes the failure probability explicitly; the
//! remaining parameters have published defaults exposed through
//! [`ScenarioId::defaults`].

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{check_probability, Error, Result};
use crate::model::FailureModel;

/// Prior probability that a random 2000-bit candidate is prime.
pub const PRIME_DENSITY: f64 = 1.0 / 1000.0;

/// Per-iteration acceptance probability of a composite by a correct
/// Rabin-Miller round (the worst case allowed by the 3/4 rejection bound).
pub const COMPOSITE_ACCEPTANCE: f64 = 0.25;

fn independent_prior(target_share: f64, p_fail: f64) -> Vec<Vec<f64>> {
    vec![
        vec![target_share * (1.0 - p_fail), target_share * p_fail],
        vec![(1.0 - target_share) * (1.0 - p_fail), (1.0 - target_share) * p_fail],
    ]
}

/// Pot found in Britain; a trace-element test points to British clay with
/// error rate `p_e`. A fraction `p_c` of pots come from contaminating
/// workshops, split evenly by origin, whose clay tests positive with
/// probability `theta_contaminated` regardless of origin.
pub fn pot_model(p_c: f64, p_e: f64, theta_contaminated: f64) -> Result<FailureModel> {
    pot_asymmetric_prior_model(p_c, p_e, theta_contaminated, 0.5)
}

/// [`pot_model`] with a `british_share` fraction of contaminated pots being
/// British; uncontaminated pots remain evenly split.
pub fn pot_asymmetric_prior_model(
    p_c: f64,
    p_e: f64,
    theta_contaminated: f64,
    british_share: f64,
) -> Result<FailureModel> {
    check_probability("p_c", p_c)?;
    check_probability("p_e", p_e)?;
    check_probability("theta_contaminated", theta_contaminated)?;
    check_probability("british_share", british_share)?;
    FailureModel::new(
        vec!["Britain", "Italy"],
        vec!["nominal", "contaminated"],
        vec![
            vec![(1.0 - p_c) / 2.0, p_c * british_share],
            vec![(1.0 - p_c) / 2.0, p_c * (1.0 - british_share)],
        ],
        vec![
            vec![1.0 - p_e, theta_contaminated],
            vec![p_e, theta_contaminated],
        ],
    )
}

/// [`pot_model`] where contaminated clay still responds differently by
/// origin.
pub fn pot_asymmetric_response_model(
    p_c: f64,
    p_e: f64,
    theta_contaminated_britain: f64,
    theta_contaminated_italy: f64,
) -> Result<FailureModel> {
    check_probability("p_c", p_c)?;
    check_probability("p_e", p_e)?;
    check_probability("theta_contaminated", theta_contaminated_britain)?;
    check_probability("theta_contaminated_italy", theta_contaminated_italy)?;
    FailureModel::new(
        vec!["Britain", "Italy"],
        vec!["nominal", "contaminated"],
        independent_prior(0.5, p_c),
        vec![
            vec![1.0 - p_e, theta_contaminated_britain],
            vec![p_e, theta_contaminated_italy],
        ],
    )
}

/// False-positive rate of a fair line-up when a witness facing an innocent
/// suspect picks uniformly among the `lineup_size` members.
pub fn lineup_false_positive(selection_rate: f64, lineup_size: u32) -> Result<f64> {
    check_probability("selection_rate", selection_rate)?;
    if lineup_size == 0 {
        return Err(Error::Domain("lineup_size must be at least 1".into()));
    }
    Ok(selection_rate / lineup_size as f64)
}

/// Identity parade with a 50% prior of guilt. With probability `p_c` the
/// parade is biased and every witness picks the suspect with probability
/// `theta_biased`.
pub fn lineup_model(
    p_c: f64,
    p_fn: f64,
    selection_rate: f64,
    lineup_size: u32,
    theta_biased: f64,
) -> Result<FailureModel> {
    check_probability("p_c", p_c)?;
    check_probability("p_fn", p_fn)?;
    check_probability("theta_biased", theta_biased)?;
    let p_fp = lineup_false_positive(selection_rate, lineup_size)?;
    FailureModel::new(
        vec!["guilty", "innocent"],
        vec!["unbiased", "biased"],
        independent_prior(0.5, p_c),
        vec![vec![1.0 - p_fn, theta_biased], vec![p_fp, theta_biased]],
    )
}

/// Judicial panel with a 50% prior of guilt and jury-style error rates.
pub fn sanhedrin_model(
    p_c: f64,
    false_positive: f64,
    false_negative: f64,
    theta_biased: f64,
) -> Result<FailureModel> {
    check_probability("p_c", p_c)?;
    check_probability("false_positive", false_positive)?;
    check_probability("false_negative", false_negative)?;
    check_probability("theta_biased", theta_biased)?;
    FailureModel::new(
        vec!["guilty", "innocent"],
        vec!["nominal", "contaminated"],
        independent_prior(0.5, p_c),
        vec![
            vec![1.0 - false_negative, theta_biased],
            vec![false_positive, theta_biased],
        ],
    )
}

/// Rabin-Miller on random 2000-bit candidates. A "positive" is one passed
/// iteration; a fault (probability `p_f`) makes every iteration pass.
///
/// This treats the 3/4 rejection bound as exact and candidates as random,
/// so it does not describe an adversary; see [`crate::crypto`] for that.
pub fn rabin_miller_model(p_f: f64) -> Result<FailureModel> {
    check_probability("p_f", p_f)?;
    FailureModel::new(
        vec!["prime", "composite"],
        vec!["nominal", "fault"],
        independent_prior(PRIME_DENSITY, p_f),
        vec![vec![1.0, 1.0], vec![COMPOSITE_ACCEPTANCE, 1.0]],
    )
}

/// Named preset scenarios.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScenarioId {
    Pot,
    PotAsymmetricPrior,
    PotAsymmetricResponse,
    Lineup,
    Sanhedrin,
    RabinMiller,
}

impl ScenarioId {
    pub const ALL: [ScenarioId; 6] = [
        ScenarioId::Pot,
        ScenarioId::PotAsymmetricPrior,
        ScenarioId::PotAsymmetricResponse,
        ScenarioId::Lineup,
        ScenarioId::Sanhedrin,
        ScenarioId::RabinMiller,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ScenarioId::Pot => "pot",
            ScenarioId::PotAsymmetricPrior => "pot-asymmetric-prior",
            ScenarioId::PotAsymmetricResponse => "pot-asymmetric-response",
            ScenarioId::Lineup => "lineup",
            ScenarioId::Sanhedrin => "sanhedrin",
            ScenarioId::RabinMiller => "rabin-miller",
        }
    }

    /// Parameter names and default values, in constructor order.
    pub fn defaults(self) -> &'static [(&'static str, f64)] {
        match self {
            ScenarioId::Pot => &[("p_c", 1e-2), ("p_e", 0.3), ("theta_contaminated", 0.9)],
            ScenarioId::PotAsymmetricPrior => &[
                ("p_c", 1e-2),
                ("p_e", 0.3),
                ("theta_contaminated", 0.9),
                ("british_share", 0.8),
            ],
            ScenarioId::PotAsymmetricResponse => &[
                ("p_c", 1e-2),
                ("p_e", 0.3),
                ("theta_contaminated", 0.9),
                ("theta_contaminated_italy", 0.88),
            ],
            ScenarioId::Lineup => &[
                ("p_c", 1e-2),
                ("p_fn", 0.48),
                ("selection_rate", 0.8),
                ("lineup_size", 6.0),
                ("theta_biased", 0.9),
            ],
            ScenarioId::Sanhedrin => &[
                ("p_c", 1e-2),
                ("false_positive", 0.14),
                ("false_negative", 0.25),
                ("theta_biased", 0.95),
            ],
            ScenarioId::RabinMiller => &[("p_f", 2.6e-13)],
        }
    }

    pub fn accepts(self, parameter: &str) -> bool {
        self.defaults().iter().any(|(name, _)| *name == parameter)
    }

    pub fn default_model(self) -> FailureModel {
        self.build(&BTreeMap::new())
            .expect("preset defaults are valid")
    }

    /// Builds the preset with `overrides` replacing defaults. Unknown
    /// parameter names are rejected.
    pub fn build(self, overrides: &BTreeMap<String, f64>) -> Result<FailureModel> {
        if let Some(unknown) = overrides.keys().find(|k| !self.accepts(k)) {
            return Err(Error::Domain(format!(
                "parameter `{unknown}` is not defined for scenario `{self}`"
            )));
        }
        let p: Vec<f64> = self
            .defaults()
            .iter()
            .map(|(name, default)| overrides.get(*name).copied().unwrap_or(*default))
            .collect();
        match self {
            ScenarioId::Pot => pot_model(p[0], p[1], p[2]),
            ScenarioId::PotAsymmetricPrior => pot_asymmetric_prior_model(p[0], p[1], p[2], p[3]),
            ScenarioId::PotAsymmetricResponse => {
                pot_asymmetric_response_model(p[0], p[1], p[2], p[3])
            }
            ScenarioId::Lineup => {
                let size = p[3];
                if size.fract() != 0.0 || !(1.0..=u32::MAX as f64).contains(&size) {
                    return Err(Error::Domain(format!(
                        "lineup_size = {size} is not a positive integer"
                    )));
                }
                lineup_model(p[0], p[1], p[2], size as u32, p[4])
            }
            ScenarioId::Sanhedrin => sanhedrin_model(p[0], p[1], p[2], p[3]),
            ScenarioId::RabinMiller => rabin_miller_model(p[0]),
        }
    }
}

impl fmt::Display for ScenarioId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ScenarioId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ScenarioId::ALL
            .into_iter()
            .find(|id| id.name() == s)
            .ok_or_else(|| Error::Domain(format!("unknown scenario `{s}`")))
    }
}
