//! Liquidity cascade: illiquid banks recall interbank loans and sell fixed
//! assets; their debtors repay the recalled loans out of cash.
//!
//! Mirror image of the solvency step under the asset/liability duality.
//! Fractions are set from the liquidity buffer (cash less everything already
//! raised). With soft thresholds a bank raises exactly its overdraft; hard
//! thresholds (e.g. a liquidity freeze) may make it raise more, and the excess
//! is hoarded as cash. Sales realize full value here; price impact lives in
//! the market module.

use crate::cascade::{simulate, Model};
use crate::error::Result;
use crate::solvency::{lowered, ratio, settle};
use crate::state::{CascadeState, CascadeTrajectory, ModelConfig, StepRecord};
use crate::system::FinancialSystem;
use crate::threshold::Thresholds;

/// Liquidation sub-step (no day bookkeeping).
pub(crate) fn liquidate(prev: &CascadeState, th: &Thresholds, audit_tol: f64) -> Result<(CascadeState, StepRecord)> {
    let n = prev.n_banks();
    let init = &prev.initial;
    let omega = &init.exposures;
    let pi = prev.market.pi;
    let mut rec = StepRecord::new(prev.day + 1, "L", prev.max_identity_residual());
    let mut next = prev.clone();

    // interbank assets each bank would hold had it never recalled, at current debtor fractions
    let z_full = omega.weighted_col_sums(&prev.p);
    let mut pt_dot = vec![1.0; n];
    let mut qt_dot = vec![1.0; n];
    for i in 0..n {
        if prev.is_fictitious(i) {
            continue;
        }
        let s = &prev.balance_sheets[i];
        let a_full = pi * init.balance_sheets[i].a;
        let buffer = s.c - (z_full[i] - s.z) - (a_full - s.a);
        if s.z > 0.0 {
            let target = th.interbank_assets.eval(buffer / z_full[i]);
            next.p_tilde[i] = lowered(target, prev.p_tilde[i]);
            pt_dot[i] = ratio(next.p_tilde[i], prev.p_tilde[i]);
        }
        if s.a > 0.0 {
            let target = th.fixed_assets.eval((buffer + z_full[i]) / a_full);
            next.q_tilde[i] = lowered(target, prev.q_tilde[i]);
            qt_dot[i] = ratio(next.q_tilde[i], prev.q_tilde[i]);
        }
    }

    // creditor side: cash raised covers the overdraft, any excess is kept
    let dpt: Vec<f64> = (0..n).map(|i| prev.p_tilde[i] - next.p_tilde[i]).collect();
    for i in 0..n {
        if dpt[i] == 0.0 && next.q_tilde[i] == prev.q_tilde[i] {
            continue;
        }
        let s = &mut next.balance_sheets[i];
        let dz = dpt[i] * z_full[i];
        let da = (prev.q_tilde[i] - next.q_tilde[i]) * pi * init.balance_sheets[i].a;
        let raised = dz + da;
        let (absorbed, excess) = settle(raised, (-s.c).max(0.0), init.balance_sheets[i].scale());
        s.z -= dz;
        s.a -= da;
        s.c += absorbed;
        s.c += excess;
        next.cumulative_overdraft[i] += absorbed;
        if s.c < 0.0 && s.z <= 0.0 && s.a <= 0.0 {
            next.terminally_illiquid[i] = true;
        }
    }

    // debtor side: recalled loans are repaid out of cash
    let recalled = omega.weighted_row_sums(&dpt);
    for (j, s) in next.balance_sheets.iter_mut().enumerate() {
        let r = prev.p[j] * recalled[j];
        if r != 0.0 {
            s.x -= r;
            s.c -= r;
        }
    }

    rec.identity_residual_post = next.audit("liquidity", audit_tol)?;
    rec.p_tilde_dot = Some(pt_dot);
    rec.q_tilde_dot = Some(qt_dot);
    Ok((next, rec))
}

/// One day of the liquidity cascade.
pub fn liquidity_step(state: &CascadeState, config: &ModelConfig) -> Result<(CascadeState, StepRecord)> {
    let (mut next, rec) = liquidate(state, &config.thresholds, config.audit_tol)?;
    next.close_day(state);
    Ok((next, rec))
}

/// Run the liquidity cascade to its fixed point.
pub fn run_gl_cascade(system: &FinancialSystem, config: &ModelConfig) -> Result<CascadeTrajectory> {
    let t = simulate(system, Model::Gl, config, None)?;
    t.require_converged(config.solver.budget(system.n_banks()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exposure::ExposureMatrix;
    use crate::system::BalanceSheet;

    // bank 0 is overdrawn by 5 and has lent 10 to bank 1
    fn two_bank() -> FinancialSystem {
        let omega = ExposureMatrix::from_dense(&[vec![0.0, 0.0], vec![10.0, 0.0]]).unwrap();
        FinancialSystem::new(
            vec![
                BalanceSheet::new(10.0, 0.0, -5.0, 0.0, 0.0, 5.0),
                BalanceSheet::new(0.0, 0.0, 13.0, 10.0, 0.0, 3.0),
            ],
            omega,
        )
        .unwrap()
    }

    #[test]
    fn recall_covers_overdraft() {
        let t = run_gl_cascade(&two_bank(), &ModelConfig::default()).unwrap();
        let end = t.terminal();
        assert_eq!(end.p_tilde, vec![0.5, 0.0]);
        assert_eq!(end.cash(), vec![0.0, 8.0]);
        assert_eq!(end.balance_sheets[1].x, 5.0);
        assert_eq!(end.equity(), vec![5.0, 3.0]);
    }

    #[test]
    fn duality_with_solvency_step() {
        let sys = two_bank();
        let cfg = ModelConfig::default();
        let s0 = CascadeState::initial(&sys);
        let (l, _) = liquidity_step(&s0, &cfg).unwrap();
        let dual0 = CascadeState::initial(&crate::system::al_dual(&sys));
        let (s, _) = crate::solvency::solvency_step(&dual0, &cfg).unwrap();
        assert_eq!(s.al_dual(), l);
    }
}
