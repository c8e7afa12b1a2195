//! Run configuration: a versioned JSON document. Unknown keys are rejected.
//!
//! Relative paths (system files and outputs) are resolved against the
//! directory holding the config file.

use std::path::{Path, PathBuf};

use cascade_core::io::SystemFile;
use cascade_core::scenario::{BalanceSheetSpec, GridCell, NetworkSpec, TriggerSpec};
use cascade_core::{
    apply_trigger, default_alpha, Composition, FinancialSystem, ImpactParams, Model, ModelConfig, SolverConfig,
    ThresholdKind, Thresholds, TriggerShock,
};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

pub const CONFIG_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub version: u32,
    #[serde(default)]
    pub model: Option<Model>,
    #[serde(default)]
    pub system: Option<SystemSource>,
    #[serde(default)]
    pub trigger: Option<TriggerSource>,
    /// One threshold for all four fractions.
    #[serde(default)]
    pub threshold: Option<ThresholdKind>,
    /// Per-fraction thresholds; exclusive with `threshold`.
    #[serde(default)]
    pub thresholds: Option<Thresholds>,
    #[serde(default)]
    pub composition: Composition,
    #[serde(default)]
    pub impact: Option<ImpactConfig>,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default)]
    pub outputs: Outputs,
    /// Seed for generated systems and random trigger targets.
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub monte_carlo: Option<MonteCarloConfig>,
}

/// Where the post-trigger (or nominal, if a trigger follows) system comes from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum SystemSource {
    File(PathBuf),
    Inline(SystemFile),
    Generate {
        network: NetworkSpec,
        #[serde(default)]
        balance_sheets: BalanceSheetSpec,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum TriggerSource {
    /// Explicit per-bank shocks.
    Shock(TriggerShock),
    /// Proportional shocks at chosen banks.
    Spec(TriggerSpec),
}

/// Market depth: a number, or `"default"` for `ln 2 / total fixed assets`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Alpha {
    Value(f64),
    Named(AlphaName),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AlphaName {
    Default,
}

impl Default for Alpha {
    fn default() -> Self {
        Alpha::Value(0.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ImpactConfig {
    pub alpha: Alpha,
    pub beta: f64,
    pub beta_prime: f64,
    pub alpha_tilde: f64,
    pub beta_tilde: f64,
    pub beta_tilde_prime: f64,
}

impl ImpactConfig {
    /// Concrete parameters; a `"default"` depth is taken from `system`.
    pub fn resolve(&self, system: &FinancialSystem) -> Result<ImpactParams> {
        let alpha = match self.alpha {
            Alpha::Value(a) => a,
            Alpha::Named(AlphaName::Default) => default_alpha(system)?,
        };
        let p = ImpactParams {
            alpha,
            beta: self.beta,
            beta_prime: self.beta_prime,
            alpha_tilde: self.alpha_tilde,
            beta_tilde: self.beta_tilde,
            beta_tilde_prime: self.beta_tilde_prime,
        };
        p.validate()?;
        Ok(p)
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Outputs {
    pub trajectory_csv: Option<PathBuf>,
    pub market_csv: Option<PathBuf>,
    pub summary_json: Option<PathBuf>,
    pub audit_jsonl: Option<PathBuf>,
    /// Monte Carlo summary, one row per grid cell.
    pub summary_csv: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MonteCarloConfig {
    pub n_seeds: usize,
    /// First seed; defaults to the top-level `seed`.
    #[serde(default)]
    pub base_seed: Option<u64>,
    pub cells: Vec<GridCell>,
}

impl RunConfig {
    pub fn parse(json: &str) -> Result<Self> {
        let cfg: RunConfig = serde_json::from_str(json).map_err(|e| CliError::Config(format!("config: {e}")))?;
        if cfg.version != CONFIG_VERSION {
            return Err(CliError::Config(format!(
                "unsupported config version {} (expected {CONFIG_VERSION})",
                cfg.version
            )));
        }
        cfg.check_shape()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::parse(&text)
    }

    fn check_shape(&self) -> Result<()> {
        if self.threshold.is_some() && self.thresholds.is_some() {
            return Err(CliError::Config("give either `threshold` or `thresholds`, not both".into()));
        }
        match (&self.monte_carlo, &self.system) {
            (Some(mc), None) => {
                if self.model.is_some() || self.trigger.is_some() || self.impact.is_some() {
                    return Err(CliError::Config(
                        "a Monte Carlo config sets model, trigger and impact per grid cell".into(),
                    ));
                }
                if mc.n_seeds == 0 || mc.cells.is_empty() {
                    return Err(CliError::Config("monte_carlo needs n_seeds >= 1 and at least one cell".into()));
                }
                if self.outputs.summary_csv.is_none() && self.outputs.summary_json.is_none() {
                    return Err(CliError::Config("monte_carlo needs outputs.summary_csv or outputs.summary_json".into()));
                }
                if self.outputs.trajectory_csv.is_some()
                    || self.outputs.market_csv.is_some()
                    || self.outputs.audit_jsonl.is_some()
                {
                    return Err(CliError::Config("per-run outputs are not available for Monte Carlo configs".into()));
                }
                for c in &mc.cells {
                    if c.model == Model::Esl && c.impact.is_none() {
                        return Err(CliError::Config(format!("cell `{}`: model esl requires impact", c.label)));
                    }
                }
            }
            (None, Some(_)) => {
                let model = self.model.ok_or_else(|| CliError::Config("missing `model`".into()))?;
                if model == Model::Esl && self.impact.is_none() {
                    return Err(CliError::Config("model esl requires `impact` (zeros allowed)".into()));
                }
                if self.outputs.summary_csv.is_some() {
                    return Err(CliError::Config("outputs.summary_csv is only for Monte Carlo configs".into()));
                }
            }
            (Some(_), Some(_)) => {
                return Err(CliError::Config("give either `system` or `monte_carlo`, not both".into()));
            }
            (None, None) => return Err(CliError::Config("missing `system` (or `monte_carlo`)".into())),
        }
        Ok(())
    }

    pub fn model_config(&self) -> ModelConfig {
        let thresholds = match (self.threshold, self.thresholds) {
            (Some(k), _) => Thresholds::uniform(k),
            (None, Some(t)) => t,
            (None, None) => Thresholds::default(),
        };
        ModelConfig {
            thresholds,
            solver: self.solver,
            composition: self.composition,
            ..ModelConfig::default()
        }
    }

    /// The system to simulate, after the trigger (if any) is applied.
    pub fn load_system(&self, base: &Path) -> Result<FinancialSystem> {
        let source = self.system.as_ref().ok_or_else(|| CliError::Config("missing `system`".into()))?;
        let system = match source {
            SystemSource::File(p) => {
                let path = base.join(p);
                let text = std::fs::read_to_string(&path).map_err(|e| CliError::io(&path, e))?;
                cascade_core::io::parse_system(&text)?
            }
            SystemSource::Inline(f) => f.to_system()?,
            SystemSource::Generate {
                network,
                balance_sheets,
            } => cascade_core::scenario::generate_system(
                &NetworkSpec {
                    seed: self.seed,
                    ..*network
                },
                balance_sheets,
            )?,
        };
        let shock = match &self.trigger {
            None => return Ok(system),
            Some(TriggerSource::Shock(s)) => s.clone(),
            Some(TriggerSource::Spec(spec)) => cascade_core::scenario::build_trigger(&system, spec, self.seed)?,
        };
        Ok(apply_trigger(&system, &shock)?)
    }
}
