//! Joint solvency-liquidity cascade: each day restructures insolvent banks and
//! then liquidates for illiquid ones.

use crate::cascade::{simulate, Model};
use crate::error::Result;
use crate::liquidity::liquidate;
use crate::solvency::restructure;
use crate::state::{CascadeState, CascadeTrajectory, Composition, ModelConfig, StepRecord};
use crate::system::FinancialSystem;

/// One day of the joint cascade.
pub fn sl_step(state: &CascadeState, config: &ModelConfig) -> Result<(CascadeState, StepRecord)> {
    let th = &config.thresholds;
    let tol = config.audit_tol;
    let ((mid, r1), (mut next, r2)) = match config.composition {
        Composition::SolvencyFirst => {
            let first = restructure(state, th, tol)?;
            let second = liquidate(&first.0, th, tol)?;
            (first, second)
        }
        Composition::LiquidityFirst => {
            let first = liquidate(state, th, tol)?;
            let second = restructure(&first.0, th, tol)?;
            (first, second)
        }
    };
    drop(mid);
    next.close_day(state);
    Ok((next, r1.merge(r2)))
}

/// Iterate the joint cascade to its fixed point.
pub fn run_sl_cascade(system: &FinancialSystem, config: &ModelConfig) -> Result<CascadeTrajectory> {
    let t = simulate(system, Model::Sl, config, None)?;
    t.require_converged(config.solver.budget(system.n_banks()))
}
