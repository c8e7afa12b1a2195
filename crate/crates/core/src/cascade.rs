//! Model selection and the fixed-point driver shared by all four cascades.

use serde::{Deserialize, Serialize};

use crate::error::{CascadeError, Result};
use crate::liquidity::liquidity_step;
use crate::market::{esl_step, ImpactParams};
use crate::sl::sl_step;
use crate::solvency::solvency_step;
use crate::state::{CascadeState, CascadeTrajectory, ModelConfig, StepRecord};
use crate::system::FinancialSystem;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Model {
    /// Solvency cascade only.
    En,
    /// Liquidity cascade only.
    Gl,
    /// Joint solvency-liquidity cascade.
    Sl,
    /// Joint cascade with fire sales and depositor panics.
    Esl,
}

impl Model {
    pub fn name(&self) -> &'static str {
        match self {
            Model::En => "en",
            Model::Gl => "gl",
            Model::Sl => "sl",
            Model::Esl => "esl",
        }
    }
}

/// Apply one day of `model`.
pub fn day_step(
    state: &CascadeState,
    model: Model,
    config: &ModelConfig,
    impact: Option<&ImpactParams>,
) -> Result<(CascadeState, StepRecord)> {
    match model {
        Model::En => solvency_step(state, config),
        Model::Gl => liquidity_step(state, config),
        Model::Sl => sl_step(state, config),
        Model::Esl => {
            let params = impact.ok_or_else(|| CascadeError::Config("the esl model needs impact parameters".into()))?;
            esl_step(state, params, config)
        }
    }
}

/// Iterate `model` from the post-trigger `system` until no tracked quantity
/// moves by more than the solver tolerance, or the budget runs out.
///
/// A non-converged trajectory is returned as such (see
/// [`CascadeTrajectory::converged`]); only audit failures and bad
/// configuration are errors.
pub fn simulate(
    system: &FinancialSystem,
    model: Model,
    config: &ModelConfig,
    impact: Option<&ImpactParams>,
) -> Result<CascadeTrajectory> {
    config.validate()?;
    if let Some(p) = impact {
        p.validate()?;
    }
    let initial = CascadeState::initial(system);
    initial.audit("initial", config.audit_tol)?;
    let budget = config.solver.budget(system.n_banks());
    let mut states = vec![initial];
    let mut records = Vec::new();
    let mut residual = f64::INFINITY;
    let mut converged = false;
    for _ in 0..budget {
        let last = states.last().expect("nonempty");
        let (next, rec) = day_step(last, model, config, impact)?;
        residual = next.change_from(last);
        states.push(next);
        records.push(rec);
        if residual <= config.solver.tol {
            converged = true;
            break;
        }
    }
    Ok(CascadeTrajectory {
        states,
        records,
        converged,
        residual,
    })
}

/// Run any model and require convergence.
pub fn run_model(
    system: &FinancialSystem,
    model: Model,
    config: &ModelConfig,
    impact: Option<&ImpactParams>,
) -> Result<CascadeTrajectory> {
    simulate(system, model, config, impact)?.require_converged(config.solver.budget(system.n_banks()))
}
