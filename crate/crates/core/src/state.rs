//! Cascade state, model configuration, step records and trajectories.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{CascadeError, Result};
use crate::exposure::ExposureMatrix;
use crate::system::{BalanceSheet, BankStatus, FinancialSystem, DEFAULT_TOL};
use crate::threshold::Thresholds;

/// Iteration controls.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    /// Stop when no tracked quantity moves by more than this in one day.
    /// Fractions are compared absolutely, money relative to each bank's scale.
    pub tol: f64,
    /// Iteration budget; `None` means `100 N + 1000`.
    pub max_iter: Option<usize>,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            tol: 1e-12,
            max_iter: None,
        }
    }
}

impl SolverConfig {
    pub fn budget(&self, n: usize) -> usize {
        self.max_iter.unwrap_or(100 * n + 1000)
    }
}

/// Order of the two direct-contagion sub-steps within a day.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Composition {
    /// Restructure insolvent banks, then liquidate for illiquid ones.
    #[default]
    SolvencyFirst,
    /// Liquidation first. Not the canonical model; for sensitivity runs.
    LiquidityFirst,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelConfig {
    pub thresholds: Thresholds,
    pub solver: SolverConfig,
    pub composition: Composition,
    /// Relative tolerance of the per-step accounting audit.
    pub audit_tol: f64,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            thresholds: Thresholds::default(),
            solver: SolverConfig::default(),
            composition: Composition::default(),
            audit_tol: DEFAULT_TOL,
        }
    }
}

impl ModelConfig {
    pub fn with_thresholds(thresholds: Thresholds) -> Self {
        Self {
            thresholds,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.thresholds.validate()?;
        if !(self.solver.tol > 0.0) || !(self.audit_tol > 0.0) {
            return Err(CascadeError::Config("tolerances must be positive".into()));
        }
        Ok(())
    }
}

/// Common fixed-asset price, depositor confidence, and the flows that drive them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarketState {
    /// Fixed-asset price.
    pub pi: f64,
    /// Fraction of external deposits not withdrawn.
    pub pi_tilde: f64,
    /// Cumulative fixed-asset units sold.
    pub s: f64,
    /// Cumulative change in interbank assets (nonpositive).
    pub ell: f64,
    /// Cumulative change in positive cash (nonpositive).
    pub ell_prime: f64,
    /// Cumulative restructured external debt, in nominal units.
    pub s_tilde: f64,
    /// Cumulative interbank debt lost.
    pub d_tilde: f64,
    /// Cumulative positive equity lost.
    pub e_tilde: f64,
    // interbank debt and positive equity as last seen by the panic sub-step
    #[serde(skip)]
    pub(crate) debt_seen: Vec<f64>,
    #[serde(skip)]
    pub(crate) equity_seen: Vec<f64>,
    // interbank assets and positive cash as last seen by the fire-sale sub-step
    #[serde(skip)]
    pub(crate) assets_seen: Vec<f64>,
    #[serde(skip)]
    pub(crate) cash_seen: Vec<f64>,
}

impl MarketState {
    pub fn initial(sheets: &[BalanceSheet]) -> Self {
        Self {
            pi: 1.0,
            pi_tilde: 1.0,
            s: 0.0,
            ell: 0.0,
            ell_prime: 0.0,
            s_tilde: 0.0,
            d_tilde: 0.0,
            e_tilde: 0.0,
            debt_seen: sheets.iter().map(|s| s.x).collect(),
            equity_seen: sheets.iter().map(|s| s.e.max(0.0)).collect(),
            assets_seen: sheets.iter().map(|s| s.z).collect(),
            cash_seen: sheets.iter().map(|s| s.c.max(0.0)).collect(),
        }
    }

    /// Scalar summary, without the per-bank observation vectors.
    pub fn snapshot(&self) -> MarketState {
        MarketState {
            debt_seen: Vec::new(),
            equity_seen: Vec::new(),
            assets_seen: Vec::new(),
            cash_seen: Vec::new(),
            ..self.clone()
        }
    }
}

/// Full system state at the end of a day (or between sub-steps).
#[derive(Debug, Clone, PartialEq)]
pub struct CascadeState {
    pub day: usize,
    pub balance_sheets: Vec<BalanceSheet>,
    /// Cumulative interbank debt recovery.
    pub p: Vec<f64>,
    /// Cumulative external debt recovery.
    pub q: Vec<f64>,
    /// Fraction of initial interbank assets unsold.
    pub p_tilde: Vec<f64>,
    /// Fraction of initial fixed assets unsold.
    pub q_tilde: Vec<f64>,
    /// Default buffers: equity less all negative equity closed so far by
    /// restructuring. Equals `E - sum_{m<n} (E^m)^-` whenever each day's
    /// negative equity is closed in full, which is always the case with soft
    /// thresholds and repayable overdrafts.
    pub delta: Vec<f64>,
    /// Liquidity buffers: cash less all overdrafts repaid so far by liquidation.
    pub sigma: Vec<f64>,
    /// Negative equity closed by restructuring, cumulated.
    pub cumulative_negative_equity: Vec<f64>,
    /// Overdrafts repaid by liquidation, cumulated.
    pub cumulative_overdraft: Vec<f64>,
    /// Deadweight losses of restructurings that wrote off more than the
    /// equity shortfall (non-soft thresholds), paid out of cash.
    pub bankruptcy_charges: Vec<f64>,
    /// Banks left with an overdraft after selling everything.
    pub terminally_illiquid: Vec<bool>,
    pub market: MarketState,
    /// The post-trigger system the cascade started from.
    pub initial: Arc<FinancialSystem>,
}

fn indicator_vec(v: impl Iterator<Item = f64>) -> Vec<f64> {
    v.map(|x| if x > 0.0 { 1.0 } else { 0.0 }).collect()
}

impl CascadeState {
    /// Day-0 state of a post-trigger system. Fractions start at 1, except that
    /// banks without the underlying position start (and stay) at 0.
    pub fn initial(system: &FinancialSystem) -> Self {
        let sheets = system.balance_sheets.clone();
        let n = sheets.len();
        Self {
            day: 0,
            p: indicator_vec(sheets.iter().map(|s| s.x)),
            q: indicator_vec(sheets.iter().map(|s| s.d)),
            p_tilde: indicator_vec(sheets.iter().map(|s| s.z)),
            q_tilde: indicator_vec(sheets.iter().map(|s| s.a)),
            delta: sheets.iter().map(|s| s.e).collect(),
            sigma: sheets.iter().map(|s| s.c).collect(),
            cumulative_negative_equity: vec![0.0; n],
            cumulative_overdraft: vec![0.0; n],
            bankruptcy_charges: vec![0.0; n],
            terminally_illiquid: vec![false; n],
            market: MarketState::initial(&sheets),
            balance_sheets: sheets,
            initial: Arc::new(system.clone()),
        }
    }

    pub fn n_banks(&self) -> usize {
        self.balance_sheets.len()
    }

    pub fn is_fictitious(&self, i: usize) -> bool {
        self.initial.is_fictitious(i)
    }

    pub fn equity(&self) -> Vec<f64> {
        self.balance_sheets.iter().map(|s| s.e).collect()
    }

    pub fn cash(&self) -> Vec<f64> {
        self.balance_sheets.iter().map(|s| s.c).collect()
    }

    /// Current exposures `p_i * p~_j * omega0_ij`.
    pub fn exposures(&self) -> ExposureMatrix {
        self.initial.exposures.scaled(&self.p, &self.p_tilde)
    }

    /// Current state as a standalone financial system.
    pub fn to_system(&self) -> FinancialSystem {
        FinancialSystem {
            balance_sheets: self.balance_sheets.clone(),
            exposures: self.exposures(),
            fictitious_bank: self.initial.fictitious_bank,
        }
    }

    pub fn status(&self, tol: f64) -> Vec<BankStatus> {
        self.balance_sheets
            .iter()
            .enumerate()
            .map(|(i, s)| {
                if self.is_fictitious(i) {
                    BankStatus::healthy()
                } else {
                    BankStatus::classify(s, tol)
                }
            })
            .collect()
    }

    /// Largest relative accounting-identity residual over all banks.
    pub fn max_identity_residual(&self) -> f64 {
        self.balance_sheets
            .iter()
            .map(|s| s.identity_residual().abs() / s.scale())
            .fold(0.0, f64::max)
    }

    /// Check the identity at every bank; the first offender becomes an audit failure.
    pub(crate) fn audit(&self, stage: &'static str, tol: f64) -> Result<f64> {
        let mut worst = 0.0f64;
        for (i, s) in self.balance_sheets.iter().enumerate() {
            let r = s.identity_residual();
            if !(r.abs() <= tol * s.scale()) {
                return Err(CascadeError::AuditFailure {
                    day: self.day,
                    stage,
                    bank: i,
                    residual: r,
                });
            }
            worst = worst.max(r.abs() / s.scale());
        }
        Ok(worst)
    }

    /// Close the day that turned `prev` into `self`: advance the day counter
    /// and recompute the buffers.
    pub(crate) fn close_day(&mut self, prev: &CascadeState) {
        self.day = prev.day + 1;
        for i in 0..self.n_banks() {
            self.delta[i] = self.balance_sheets[i].e - self.cumulative_negative_equity[i];
            self.sigma[i] = self.balance_sheets[i].c - self.cumulative_overdraft[i];
        }
    }

    /// Largest one-day movement between two states: fractions and prices
    /// absolutely, equity and cash relative to each bank's initial scale.
    pub fn change_from(&self, other: &CascadeState) -> f64 {
        let mut m = 0.0f64;
        for i in 0..self.n_banks() {
            for (a, b) in [
                (self.p[i], other.p[i]),
                (self.q[i], other.q[i]),
                (self.p_tilde[i], other.p_tilde[i]),
                (self.q_tilde[i], other.q_tilde[i]),
            ] {
                m = m.max((a - b).abs());
            }
            let scale = self.initial.balance_sheets[i].scale();
            let (s, o) = (&self.balance_sheets[i], &other.balance_sheets[i]);
            m = m.max((s.e - o.e).abs() / scale).max((s.c - o.c).abs() / scale);
        }
        m.max((self.market.pi - other.market.pi).abs())
            .max((self.market.pi_tilde - other.market.pi_tilde).abs())
    }

    /// Asset/liability dual state: balance sheets dualized and
    /// `(p, q, Delta) <-> (p~, q~, Sigma)`, `Pi <-> Pi~`.
    pub fn al_dual(&self) -> CascadeState {
        let m = &self.market;
        CascadeState {
            day: self.day,
            balance_sheets: self.balance_sheets.iter().map(BalanceSheet::al_dual).collect(),
            p: self.p_tilde.clone(),
            q: self.q_tilde.clone(),
            p_tilde: self.p.clone(),
            q_tilde: self.q.clone(),
            delta: self.sigma.clone(),
            sigma: self.delta.clone(),
            cumulative_negative_equity: self.cumulative_overdraft.clone(),
            cumulative_overdraft: self.cumulative_negative_equity.clone(),
            bankruptcy_charges: self.bankruptcy_charges.clone(),
            terminally_illiquid: self.terminally_illiquid.clone(),
            market: MarketState {
                pi: m.pi_tilde,
                pi_tilde: m.pi,
                s: m.s_tilde,
                s_tilde: m.s,
                debt_seen: m.assets_seen.clone(),
                assets_seen: m.debt_seen.clone(),
                equity_seen: m.cash_seen.clone(),
                cash_seen: m.equity_seen.clone(),
                ..m.clone()
            },
            initial: Arc::new(crate::system::al_dual(&self.initial)),
        }
    }
}

/// Audit record of one day (or sub-step).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub day: usize,
    pub stage: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub p_dot: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub q_dot: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub p_tilde_dot: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub q_tilde_dot: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bankruptcy_charges: Option<Vec<f64>>,
    /// Largest relative identity residual before and after the step.
    pub identity_residual_pre: f64,
    pub identity_residual_post: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub market: Option<MarketState>,
}

impl StepRecord {
    pub(crate) fn new(day: usize, stage: &str, pre: f64) -> Self {
        Self {
            day,
            stage: stage.to_string(),
            p_dot: None,
            q_dot: None,
            p_tilde_dot: None,
            q_tilde_dot: None,
            bankruptcy_charges: None,
            identity_residual_pre: pre,
            identity_residual_post: pre,
            market: None,
        }
    }

    /// Fold a later sub-step of the same day into this record.
    pub(crate) fn merge(mut self, later: StepRecord) -> Self {
        self.stage = format!("{}+{}", self.stage, later.stage);
        self.p_dot = later.p_dot.or(self.p_dot);
        self.q_dot = later.q_dot.or(self.q_dot);
        self.p_tilde_dot = later.p_tilde_dot.or(self.p_tilde_dot);
        self.q_tilde_dot = later.q_tilde_dot.or(self.q_tilde_dot);
        self.bankruptcy_charges = later.bankruptcy_charges.or(self.bankruptcy_charges);
        self.identity_residual_post = later.identity_residual_post;
        self.market = later.market.or(self.market);
        self
    }
}

/// Terminal state summary of a cascade.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Equilibrium {
    pub p: Vec<f64>,
    pub q: Vec<f64>,
    pub p_tilde: Vec<f64>,
    pub q_tilde: Vec<f64>,
    pub equity: Vec<f64>,
    pub cash: Vec<f64>,
    pub status: Vec<BankStatus>,
    pub pi: f64,
    pub pi_tilde: f64,
    pub converged: bool,
    /// Largest one-day movement at the last iteration.
    pub residual: f64,
}

/// Sequence of daily states plus the audit record of each day.
#[derive(Debug, Clone)]
pub struct CascadeTrajectory {
    /// `states[0]` is the post-trigger state; `states[n]` the end of day `n`.
    pub states: Vec<CascadeState>,
    /// `records[n - 1]` describes day `n`.
    pub records: Vec<StepRecord>,
    pub converged: bool,
    /// Change measured on the last day.
    pub residual: f64,
}

impl CascadeTrajectory {
    pub fn terminal(&self) -> &CascadeState {
        self.states.last().expect("trajectory holds the initial state")
    }

    /// Days applied, including the final day that confirmed convergence.
    pub fn iterations(&self) -> usize {
        self.states.len() - 1
    }

    /// Days on which the state actually moved.
    pub fn days(&self) -> usize {
        if self.converged {
            self.iterations().saturating_sub(1)
        } else {
            self.iterations()
        }
    }

    pub fn equilibrium(&self, status_tol: f64) -> Equilibrium {
        let t = self.terminal();
        Equilibrium {
            p: t.p.clone(),
            q: t.q.clone(),
            p_tilde: t.p_tilde.clone(),
            q_tilde: t.q_tilde.clone(),
            equity: t.equity(),
            cash: t.cash(),
            status: t.status(status_tol),
            pi: t.market.pi,
            pi_tilde: t.market.pi_tilde,
            converged: self.converged,
            residual: self.residual,
        }
    }

    /// Dual trajectory, state by state.
    pub fn al_dual(&self) -> CascadeTrajectory {
        CascadeTrajectory {
            states: self.states.iter().map(CascadeState::al_dual).collect(),
            records: self.records.clone(),
            converged: self.converged,
            residual: self.residual,
        }
    }

    /// Turn a non-converged trajectory into the corresponding error.
    pub fn require_converged(self, budget: usize) -> Result<Self> {
        if self.converged {
            Ok(self)
        } else {
            Err(CascadeError::NonConvergence {
                iterations: budget,
                residual: self.residual,
                last_iterate: self.terminal().p.clone(),
            })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn initial_fractions_follow_position_convention() {
        let omega = ExposureMatrix::from_dense(&[vec![0.0, 10.0], vec![0.0, 0.0]]).unwrap();
        let sys = FinancialSystem::from_external(omega, &[(5.0, 0.0, 0.0), (0.0, 0.0, 3.0)]).unwrap();
        let st = CascadeState::initial(&sys);
        assert_eq!(st.p, vec![1.0, 0.0]);
        assert_eq!(st.q, vec![0.0, 1.0]);
        assert_eq!(st.p_tilde, vec![0.0, 1.0]);
        assert_eq!(st.delta, vec![-5.0, 7.0]);
        assert_eq!(st.exposures(), sys.exposures);
        assert_eq!(st.al_dual().al_dual(), st);
    }

    #[test]
    fn budget_default() {
        assert_eq!(SolverConfig::default().budget(10), 2000);
        let s = SolverConfig {
            tol: 1e-9,
            max_iter: Some(7),
        };
        assert_eq!(s.budget(10), 7);
    }
}
