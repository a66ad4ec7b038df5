use std::collections::BTreeMap;

use clap::{Args, ValueEnum};
use hidden_failure::{FailureModel, ScenarioId};

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OutputFormat {
    Csv,
    Json,
}

/// Model selection shared by the model-driven subcommands: a preset with
/// parameter overrides, or an inline JSON model.
#[derive(Debug, Clone, Args)]
pub struct ModelArgs {
    /// Preset scenario: pot, pot-asymmetric-prior, pot-asymmetric-response,
    /// lineup, sanhedrin, rabin-miller.
    #[arg(long, conflicts_with = "model_json")]
    pub scenario: Option<String>,

    /// Inline model as JSON with keys hypothesis_labels, state_labels,
    /// joint_prior and positive_prob.
    #[arg(long)]
    pub model_json: Option<String>,

    /// Hypothesis whose posterior is reported, by label or index.
    #[arg(long, default_value = "0")]
    pub target: String,

    #[command(flatten)]
    pub overrides: Overrides,
}

/// Preset parameters. Each one is only valid for the scenarios that define
/// it.
#[derive(Debug, Clone, Default, Args)]
pub struct Overrides {
    /// Failure-state (contamination) probability.
    #[arg(long = "p-c")]
    pub p_c: Option<f64>,
    /// Nominal test error rate (pot scenarios).
    #[arg(long = "p-e")]
    pub p_e: Option<f64>,
    /// Positive rate of contaminated (British) pots.
    #[arg(long)]
    pub theta_contaminated: Option<f64>,
    /// Positive rate of contaminated Italian pots (pot-asymmetric-response).
    #[arg(long)]
    pub theta_contaminated_italy: Option<f64>,
    /// Share of contaminated pots that are British (pot-asymmetric-prior).
    #[arg(long)]
    pub british_share: Option<f64>,
    /// Line-up false-negative rate.
    #[arg(long = "p-fn")]
    pub p_fn: Option<f64>,
    /// Perpetrator-absent selection rate (line-up).
    #[arg(long)]
    pub selection_rate: Option<f64>,
    /// Number of people in the line-up.
    #[arg(long)]
    pub lineup_size: Option<u32>,
    /// Positive rate under a biased procedure (line-up, sanhedrin).
    #[arg(long)]
    pub theta_biased: Option<f64>,
    /// Panel false-positive rate (sanhedrin).
    #[arg(long)]
    pub false_positive: Option<f64>,
    /// Panel false-negative rate (sanhedrin).
    #[arg(long)]
    pub false_negative: Option<f64>,
    /// Fault probability (rabin-miller).
    #[arg(long = "p-f")]
    pub p_f: Option<f64>,
}

impl Overrides {
    pub fn to_map(&self) -> BTreeMap<String, f64> {
        let entries = [
            ("p_c", self.p_c),
            ("p_e", self.p_e),
            ("theta_contaminated", self.theta_contaminated),
            ("theta_contaminated_italy", self.theta_contaminated_italy),
            ("british_share", self.british_share),
            ("p_fn", self.p_fn),
            ("selection_rate", self.selection_rate),
            ("lineup_size", self.lineup_size.map(f64::from)),
            ("theta_biased", self.theta_biased),
            ("false_positive", self.false_positive),
            ("false_negative", self.false_negative),
            ("p_f", self.p_f),
        ];
        entries
            .into_iter()
            .filter_map(|(name, value)| value.map(|v| (name.to_string(), v)))
            .collect()
    }
}

fn flag(name: &str) -> String {
    format!("--{}", name.replace('_', "-"))
}

/// A fully resolved model plus the name it is reported under.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub label: String,
    pub model: FailureModel,
    pub target: usize,
}

impl RunConfig {
    /// Validates flags against each other before building anything.
    pub fn resolve(args: &ModelArgs, default: Option<ScenarioId>) -> Result<Self, CliError> {
        let overrides = args.overrides.to_map();
        let (label, model) = match (&args.scenario, &args.model_json) {
            (Some(_), Some(_)) => {
                return Err(CliError::Usage("--scenario and --model-json are exclusive".into()))
            }
            (None, Some(json)) => {
                if let Some(name) = overrides.keys().next() {
                    return Err(CliError::Usage(format!(
                        "{} cannot be combined with --model-json",
                        flag(name)
                    )));
                }
                let model: FailureModel = serde_json::from_str(json).map_err(|e| {
                    let msg = format!("invalid --model-json: {e}");
                    match e.classify() {
                        // well-formed JSON that fails model validation
                        serde_json::error::Category::Data => {
                            CliError::Model(hidden_failure::Error::Domain(msg))
                        }
                        _ => CliError::Usage(msg),
                    }
                })?;
                ("inline".to_string(), model)
            }
            (scenario, None) => {
                let id = match (scenario, default) {
                    (Some(name), _) => name
                        .parse::<ScenarioId>()
                        .map_err(|e| CliError::Usage(e.to_string()))?,
                    (None, Some(id)) => id,
                    (None, None) => {
                        return Err(CliError::Usage(
                            "one of --scenario or --model-json is required".into(),
                        ))
                    }
                };
                if let Some(name) = overrides.keys().find(|k| !id.accepts(k)) {
                    return Err(CliError::Usage(format!(
                        "{} is not a parameter of scenario `{id}`",
                        flag(name)
                    )));
                }
                (id.name().to_string(), id.build(&overrides)?)
            }
        };
        let target = resolve_target(&model, &args.target)?;
        Ok(Self {
            label,
            model,
            target,
        })
    }

    pub fn target_label(&self) -> &str {
        &self.model.hypothesis_labels()[self.target]
    }
}

fn resolve_target(model: &FailureModel, target: &str) -> Result<usize, CliError> {
    if let Some(i) = model.hypothesis_index(target) {
        return Ok(i);
    }
    match target.parse::<usize>() {
        Ok(i) if i < model.num_hypotheses() => Ok(i),
        _ => Err(CliError::Usage(format!(
            "--target `{target}` matches no hypothesis (labels: {})",
            model.hypothesis_labels().join(", ")
        ))),
    }
}
