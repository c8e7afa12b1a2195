//! Solvency cascade: restructuring of insolvent banks' debts and the resulting
//! losses on their creditors.
//!
//! A restructuring step keeps the exposure matrix in factorized form
//! `omega_ij = p_i * p~_j * omega0_ij`, so only the fractions move; interbank
//! assets and debts are updated by the flows implied by the change in `p`.
//!
//! The surviving fraction of a bank's debt is set from its *buffer*: equity
//! plus everything already written off plus any bankruptcy charges paid. For
//! the soft threshold this is the same as scaling the current debt by
//! `h(E / X)`, and an insolvent bank ends the step with exactly zero equity.
//! Hard thresholds may write off more than the shortfall; the excess is a
//! deadweight bankruptcy charge paid out of cash.

use crate::cascade::{simulate, Model};
use crate::error::{CascadeError, Result};
use crate::state::{CascadeState, CascadeTrajectory, ModelConfig, SolverConfig, StepRecord};
use crate::system::FinancialSystem;
use crate::threshold::{ThresholdKind, Thresholds};

const SNAP: f64 = 1e-12;

/// Split a write-down (or cash raise) into the part that closes a shortfall
/// and the excess. Flows within rounding of the shortfall close it exactly and
/// leave no excess; "rounding" is measured against the bank's balance-sheet
/// `scale`, since the flow is computed from stocks of that size.
pub(crate) fn settle(flow: f64, shortfall: f64, scale: f64) -> (f64, f64) {
    if flow <= 0.0 {
        return (0.0, 0.0);
    }
    if shortfall <= 0.0 {
        return (0.0, flow);
    }
    if (flow - shortfall).abs() <= SNAP * shortfall.max(flow).max(scale) {
        (shortfall, 0.0)
    } else if flow < shortfall {
        (flow, 0.0)
    } else {
        (shortfall, flow - shortfall)
    }
}

/// New fraction from a target, never above the current one.
pub(crate) fn lowered(target: f64, current: f64) -> f64 {
    target.min(current).max(0.0)
}

pub(crate) fn ratio(new: f64, old: f64) -> f64 {
    if old > 0.0 {
        new / old
    } else {
        1.0
    }
}

/// Restructuring sub-step (no day bookkeeping).
pub(crate) fn restructure(prev: &CascadeState, th: &Thresholds, audit_tol: f64) -> Result<(CascadeState, StepRecord)> {
    let n = prev.n_banks();
    let init = &prev.initial;
    let omega = &init.exposures;
    let pi_tilde = prev.market.pi_tilde;
    let mut rec = StepRecord::new(prev.day + 1, "S", prev.max_identity_residual());
    let mut next = prev.clone();

    // debt each bank would owe had it never restructured, at current creditor fractions
    let x_full = omega.weighted_row_sums(&prev.p_tilde);
    let mut p_dot = vec![1.0; n];
    let mut q_dot = vec![1.0; n];
    for i in 0..n {
        if prev.is_fictitious(i) {
            continue;
        }
        let s = &prev.balance_sheets[i];
        let d_full = pi_tilde * init.balance_sheets[i].d;
        let buffer = s.e - (x_full[i] - s.x) - (d_full - s.d) + prev.bankruptcy_charges[i];
        if s.x > 0.0 {
            let target = th.interbank_debt.eval(buffer / x_full[i]);
            next.p[i] = lowered(target, prev.p[i]);
            p_dot[i] = ratio(next.p[i], prev.p[i]);
        }
        if s.d > 0.0 {
            let target = th.external_debt.eval((buffer + x_full[i]) / d_full);
            next.q[i] = lowered(target, prev.q[i]);
            q_dot[i] = ratio(next.q[i], prev.q[i]);
        }
    }

    // debtor side: write-downs, absorbed by negative equity, any excess charged to cash
    let dp: Vec<f64> = (0..n).map(|i| prev.p[i] - next.p[i]).collect();
    let mut charges = vec![0.0; n];
    for i in 0..n {
        if dp[i] == 0.0 && next.q[i] == prev.q[i] {
            continue;
        }
        let s = &mut next.balance_sheets[i];
        let dx = dp[i] * x_full[i];
        let dd = (prev.q[i] - next.q[i]) * pi_tilde * init.balance_sheets[i].d;
        let written = dx + dd;
        let (absorbed, charge) = settle(written, (-s.e).max(0.0), init.balance_sheets[i].scale());
        s.x -= dx;
        s.d -= dd;
        s.e += absorbed;
        s.c -= charge;
        next.cumulative_negative_equity[i] += absorbed;
        next.bankruptcy_charges[i] += charge;
        charges[i] = charge;
    }

    // creditor side: interbank assets lose what their debtors wrote off
    let loss = omega.weighted_col_sums(&dp);
    for (j, s) in next.balance_sheets.iter_mut().enumerate() {
        let l = prev.p_tilde[j] * loss[j];
        if l != 0.0 {
            s.z -= l;
            s.e -= l;
        }
    }

    rec.identity_residual_post = next.audit("solvency", audit_tol)?;
    rec.p_dot = Some(p_dot);
    rec.q_dot = Some(q_dot);
    rec.bankruptcy_charges = Some(charges);
    Ok((next, rec))
}

/// One day of the solvency cascade.
pub fn solvency_step(state: &CascadeState, config: &ModelConfig) -> Result<(CascadeState, StepRecord)> {
    let (mut next, rec) = restructure(state, &config.thresholds, config.audit_tol)?;
    next.close_day(state);
    Ok((next, rec))
}

/// Run the solvency cascade to its fixed point.
///
/// Errors with [`CascadeError::NonConvergence`] when the budget runs out.
pub fn run_en_cascade(system: &FinancialSystem, config: &ModelConfig) -> Result<CascadeTrajectory> {
    let t = simulate(system, Model::En, config, None)?;
    t.require_converged(config.solver.budget(system.n_banks()))
}

/// Clearing map `F(p)_i = 1(X_i > 0) h((E_i - sum_j omega_ji (1 - p_j)) / X_i)`.
///
/// The fictitious bank, if present, always pays in full.
pub fn clearing_map(system: &FinancialSystem, p: &[f64], h: ThresholdKind) -> Result<Vec<f64>> {
    let n = system.n_banks();
    if p.len() != n {
        return Err(CascadeError::LengthMismatch {
            what: "recovery vector",
            got: p.len(),
            expected: n,
        });
    }
    let unpaid: Vec<f64> = p.iter().map(|v| 1.0 - v).collect();
    let lost = system.exposures.weighted_col_sums(&unpaid);
    Ok((0..n)
        .map(|i| {
            let s = &system.balance_sheets[i];
            if s.x <= 0.0 {
                0.0
            } else if system.is_fictitious(i) {
                1.0
            } else {
                h.eval((s.e - lost[i]) / s.x)
            }
        })
        .collect())
}

fn picard(system: &FinancialSystem, mut p: Vec<f64>, h: ThresholdKind, solver: &SolverConfig) -> Result<Vec<f64>> {
    let budget = solver.budget(system.n_banks());
    let mut residual = f64::INFINITY;
    for _ in 0..budget {
        let next = clearing_map(system, &p, h)?;
        residual = next.iter().zip(&p).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        p = next;
        if residual <= solver.tol {
            return Ok(p);
        }
    }
    Err(CascadeError::NonConvergence {
        iterations: budget,
        residual,
        last_iterate: p,
    })
}

/// Greatest fixed point of the clearing map, by monotone iteration from full payment.
pub fn greatest_clearing_vector(system: &FinancialSystem, h: ThresholdKind, solver: &SolverConfig) -> Result<Vec<f64>> {
    picard(system, vec![1.0; system.n_banks()], h, solver)
}

/// Least fixed point of the clearing map, by monotone iteration from zero payment.
pub fn least_clearing_vector(system: &FinancialSystem, h: ThresholdKind, solver: &SolverConfig) -> Result<Vec<f64>> {
    picard(system, vec![0.0; system.n_banks()], h, solver)
}
