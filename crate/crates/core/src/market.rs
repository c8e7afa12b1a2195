//! Indirect contagion: fire sales of a common fixed asset and depositor panics.
//!
//! The fire-sale step runs a liquidation and then reprices the fixed asset,
//! `Pi <- Pi * exp(-alpha ds - beta dZ - beta' dC+)`, marking every holder's
//! equity to market. The panic step runs a restructuring and then shrinks the
//! common deposit pool, `Pi~ <- Pi~ * exp(-alpha~ ds~ - beta~ dX - beta~' dE+)`,
//! paying the withdrawals out of every bank's cash. Here `ds`, `ds~` are units
//! sold or restructured that day and `dZ`, `dC+`, `dX`, `dE+` are system-wide
//! decreases since the previous observation.

use serde::{Deserialize, Serialize};

use crate::cascade::{simulate, Model};
use crate::error::{CascadeError, Result};
use crate::liquidity::liquidate;
use crate::solvency::restructure;
use crate::state::{CascadeState, CascadeTrajectory, Composition, ModelConfig, StepRecord};
use crate::system::FinancialSystem;

/// Price-impact and confidence parameters, all in inverse money units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct ImpactParams {
    /// Depth of the fixed-asset market.
    pub alpha: f64,
    /// Demand lost per unit of interbank assets withdrawn.
    pub beta: f64,
    /// Demand lost per unit of positive cash lost.
    pub beta_prime: f64,
    /// Withdrawals per unit of external debt restructured.
    pub alpha_tilde: f64,
    /// Withdrawals per unit of interbank debt lost.
    pub beta_tilde: f64,
    /// Withdrawals per unit of positive equity lost.
    pub beta_tilde_prime: f64,
}

impl ImpactParams {
    /// Fire sales only.
    pub fn fire_sale(alpha: f64) -> Self {
        Self {
            alpha,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let all = [
            self.alpha,
            self.beta,
            self.beta_prime,
            self.alpha_tilde,
            self.beta_tilde,
            self.beta_tilde_prime,
        ];
        if all.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(CascadeError::Config("impact parameters must be finite and nonnegative".into()));
        }
        if self.beta > self.alpha || self.beta_prime > self.alpha {
            return Err(CascadeError::Config(
                "demand couplings beta, beta_prime may not exceed alpha".into(),
            ));
        }
        Ok(())
    }

    pub fn is_zero(&self) -> bool {
        *self == Self::default()
    }
}

/// Market depth at which selling every fixed asset halves the price.
pub fn default_alpha(system: &FinancialSystem) -> Result<f64> {
    let total = system.total_fixed_assets();
    if total > 0.0 {
        Ok(std::f64::consts::LN_2 / total)
    } else {
        Err(CascadeError::UndefinedDepth)
    }
}

/// Panic sub-step: restructuring, then withdrawals from the deposit pool.
/// Does not close the day.
pub fn sd_step(state: &CascadeState, params: &ImpactParams, config: &ModelConfig) -> Result<(CascadeState, StepRecord)> {
    let (mut next, mut rec) = restructure(state, &config.thresholds, config.audit_tol)?;
    let init = next.initial.clone();
    let n = next.n_banks();

    let restructured: f64 = (0..n)
        .map(|i| (state.q[i] - next.q[i]) * init.balance_sheets[i].d)
        .sum();
    let (mut debt_drop, mut equity_drop) = (0.0, 0.0);
    let (mut d_tilde, mut e_tilde) = (0.0, 0.0);
    {
        let m = &mut next.market;
        for i in 0..n {
            let s = &next.balance_sheets[i];
            let x = s.x;
            let e = s.e.max(0.0);
            debt_drop += m.debt_seen[i] - x;
            equity_drop += m.equity_seen[i] - e;
            m.debt_seen[i] = x;
            m.equity_seen[i] = e;
            d_tilde += init.balance_sheets[i].x - x;
            e_tilde += init.balance_sheets[i].e.max(0.0) - e;
        }
        m.s_tilde += restructured;
        m.d_tilde = d_tilde;
        m.e_tilde = e_tilde;
    }

    let before = next.market.pi_tilde;
    let exponent = params.alpha_tilde * restructured + params.beta_tilde * debt_drop + params.beta_tilde_prime * equity_drop;
    let after = before * (-exponent).exp();
    if after != before {
        next.market.pi_tilde = after;
        for i in 0..n {
            let s = &mut next.balance_sheets[i];
            let d = after * next.q[i] * init.balance_sheets[i].d;
            let withdrawn = s.d - d;
            s.d = d;
            s.c -= withdrawn;
        }
    }
    rec.stage = "SD".into();
    rec.identity_residual_post = next.audit("panic", config.audit_tol)?;
    rec.market = Some(next.market.snapshot());
    Ok((next, rec))
}

/// Fire-sale sub-step: liquidation, then repricing of the fixed asset.
/// Does not close the day.
pub fn la_step(state: &CascadeState, params: &ImpactParams, config: &ModelConfig) -> Result<(CascadeState, StepRecord)> {
    let (mut next, mut rec) = liquidate(state, &config.thresholds, config.audit_tol)?;
    let init = next.initial.clone();
    let n = next.n_banks();

    let sold: f64 = (0..n)
        .map(|i| (state.q_tilde[i] - next.q_tilde[i]) * init.balance_sheets[i].a)
        .sum();
    let (mut asset_drop, mut cash_drop) = (0.0, 0.0);
    let (mut ell, mut ell_prime) = (0.0, 0.0);
    {
        let m = &mut next.market;
        for i in 0..n {
            let s = &next.balance_sheets[i];
            let z = s.z;
            let c = s.c.max(0.0);
            asset_drop += m.assets_seen[i] - z;
            cash_drop += m.cash_seen[i] - c;
            m.assets_seen[i] = z;
            m.cash_seen[i] = c;
            ell += z - init.balance_sheets[i].z;
            ell_prime += c - init.balance_sheets[i].c.max(0.0);
        }
        m.s += sold;
        m.ell = ell;
        m.ell_prime = ell_prime;
    }

    let before = next.market.pi;
    let exponent = params.alpha * sold + params.beta * asset_drop + params.beta_prime * cash_drop;
    let after = before * (-exponent).exp();
    if after != before {
        next.market.pi = after;
        for i in 0..n {
            let s = &mut next.balance_sheets[i];
            let a = after * next.q_tilde[i] * init.balance_sheets[i].a;
            let loss = s.a - a;
            s.a = a;
            s.e -= loss;
        }
    }
    rec.stage = "LA".into();
    rec.identity_residual_post = next.audit("fire sale", config.audit_tol)?;
    rec.market = Some(next.market.snapshot());
    Ok((next, rec))
}

/// One day of the extended model: panic sub-step, then fire-sale sub-step.
pub fn esl_step(state: &CascadeState, params: &ImpactParams, config: &ModelConfig) -> Result<(CascadeState, StepRecord)> {
    type SubStep = fn(&CascadeState, &ImpactParams, &ModelConfig) -> Result<(CascadeState, StepRecord)>;
    let ((mid, r1), second): (_, SubStep) = match config.composition {
        Composition::SolvencyFirst => (sd_step(state, params, config)?, la_step),
        Composition::LiquidityFirst => (la_step(state, params, config)?, sd_step),
    };
    let (mut next, r2) = second(&mid, params, config)?;
    next.close_day(state);
    Ok((next, r1.merge(r2)))
}

/// Iterate the extended model to its fixed point.
pub fn run_esl_cascade(system: &FinancialSystem, params: &ImpactParams, config: &ModelConfig) -> Result<CascadeTrajectory> {
    let t = simulate(system, Model::Esl, config, Some(params))?;
    t.require_converged(config.solver.budget(system.n_banks()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exposure::ExposureMatrix;
    use crate::system::BalanceSheet;

    fn ln2_over(total: f64) -> f64 {
        std::f64::consts::LN_2 / total
    }

    #[test]
    fn default_alpha_halves_price() {
        let omega = ExposureMatrix::zeros(2);
        let sys = FinancialSystem::from_external(omega, &[(60.0, 0.0, 0.0), (40.0, 0.0, 0.0)]).unwrap();
        let a = default_alpha(&sys).unwrap();
        assert!((a - 0.006931471805599453).abs() < 1e-15);
        assert!(((-a * 100.0).exp() - 0.5).abs() < 1e-15);
        let empty = FinancialSystem::from_external(ExposureMatrix::zeros(1), &[(0.0, 1.0, 0.0)]).unwrap();
        assert_eq!(default_alpha(&empty), Err(CascadeError::UndefinedDepth));
    }

    #[test]
    fn parameter_domain() {
        assert!(ImpactParams::fire_sale(0.1).validate().is_ok());
        let bad = ImpactParams {
            alpha: 0.1,
            beta: 0.2,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
        assert!(ImpactParams::fire_sale(-1.0).validate().is_err());
    }

    #[test]
    fn half_sale_marks_holders_down() {
        // bank 0 must sell 50 of its 60 units; bank 1 holds 40 and is a bystander
        let sys = FinancialSystem::new(
            vec![
                BalanceSheet::new(0.0, 60.0, -50.0, 0.0, 0.0, 10.0),
                BalanceSheet::new(0.0, 40.0, 0.0, 0.0, 0.0, 40.0),
            ],
            ExposureMatrix::zeros(2),
        )
        .unwrap();
        let params = ImpactParams::fire_sale(ln2_over(100.0));
        let (st, _) = la_step(&CascadeState::initial(&sys), &params, &ModelConfig::default()).unwrap();
        let pi = st.market.pi;
        assert!((pi - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-15);
        assert_eq!(st.market.s, 50.0);
        let loss1 = 40.0 - st.balance_sheets[1].a;
        assert!((loss1 - 0.29289321881345254 * 40.0).abs() < 1e-12);
        assert!((st.balance_sheets[1].e - (40.0 - loss1)).abs() < 1e-12);
    }

    #[test]
    fn demand_channel_moves_price_without_sales() {
        // bank 0 recalls its 10 interbank loan; no fixed assets are sold
        let omega = ExposureMatrix::from_dense(&[vec![0.0, 0.0], vec![10.0, 0.0]]).unwrap();
        let sys = FinancialSystem::new(
            vec![
                BalanceSheet::new(10.0, 5.0, -10.0, 0.0, 0.0, 5.0),
                BalanceSheet::new(0.0, 5.0, 20.0, 10.0, 0.0, 15.0),
            ],
            omega,
        )
        .unwrap();
        let params = ImpactParams {
            alpha: 0.01,
            beta: 0.01,
            ..Default::default()
        };
        let (st, _) = la_step(&CascadeState::initial(&sys), &params, &ModelConfig::default()).unwrap();
        assert_eq!(st.market.s, 0.0);
        assert!((st.market.pi - (-0.1f64).exp()).abs() < 1e-15);
    }

    #[test]
    fn panic_withdrawals_hit_all_cash() {
        // bank 0 is insolvent by 5 with external debt only; bank 1 is a bystander depositor-funded bank
        let sys = FinancialSystem::new(
            vec![
                BalanceSheet::new(0.0, 5.0, 0.0, 0.0, 10.0, -5.0),
                BalanceSheet::new(0.0, 10.0, 20.0, 0.0, 20.0, 10.0),
            ],
            ExposureMatrix::zeros(2),
        )
        .unwrap();
        let params = ImpactParams {
            alpha_tilde: 0.02,
            ..Default::default()
        };
        let (st, _) = sd_step(&CascadeState::initial(&sys), &params, &ModelConfig::default()).unwrap();
        assert_eq!(st.market.s_tilde, 5.0);
        let factor = (-0.1f64).exp();
        assert!((st.market.pi_tilde - factor).abs() < 1e-15);
        let hit = (1.0 - factor) * 20.0;
        assert!((st.balance_sheets[1].c - (20.0 - hit)).abs() < 1e-12);
        assert!((st.balance_sheets[0].c + (1.0 - factor) * 5.0).abs() < 1e-12);
    }
}
