//! Stock-flow consistent simulation of contagion in interbank networks.
//!
//! Four cascade models share one engine:
//!
//! * [`Model::En`] — solvency cascade: insolvent banks restructure their debt
//!   and creditors absorb the losses.
//! * [`Model::Gl`] — liquidity cascade: illiquid banks recall interbank loans
//!   and sell fixed assets; debtors repay out of cash.
//! * [`Model::Sl`] — both channels, one after the other each day.
//! * [`Model::Esl`] — adds fire-sale price impact and depositor panics.
//!
//! Every step is audited against the balance-sheet identity
//! `Z + A + C = X + D + E`.
//!
//! ```
//! use cascade_core::{ExposureMatrix, FinancialSystem, ModelConfig, run_en_cascade};
//!
//! // bank 0 owes bank 1 10 but has only 5 of fixed assets
//! let omega = ExposureMatrix::from_dense(&[vec![0.0, 10.0], vec![0.0, 0.0]]).unwrap();
//! let system = FinancialSystem::from_external(omega, &[(5.0, 0.0, 0.0), (0.0, 0.0, 3.0)]).unwrap();
//! let t = run_en_cascade(&system, &ModelConfig::default()).unwrap();
//! assert_eq!(t.terminal().p, vec![0.5, 0.0]);
//! assert_eq!(t.terminal().equity(), vec![0.0, 2.0]);
//! ```

pub mod cascade;
pub mod error;
pub mod exposure;
pub mod io;
pub mod liquidity;
pub mod market;
pub mod scenario;
pub mod sl;
pub mod solvency;
pub mod state;
pub mod system;
pub mod threshold;

pub use cascade::{day_step, run_model, simulate, Model};
pub use error::{CascadeError, Result};
pub use exposure::ExposureMatrix;
pub use liquidity::{liquidity_step, run_gl_cascade};
pub use market::{default_alpha, esl_step, la_step, run_esl_cascade, sd_step, ImpactParams};
pub use sl::{run_sl_cascade, sl_step};
pub use solvency::{clearing_map, greatest_clearing_vector, least_clearing_vector, run_en_cascade, solvency_step};
pub use state::{
    CascadeState, CascadeTrajectory, Composition, Equilibrium, MarketState, ModelConfig, SolverConfig, StepRecord,
};
pub use system::{
    add_fictitious_bank, add_fictitious_bank_with, al_dual, apply_trigger, cash_as_fictitious_loans, validate_nominal,
    validate_system, BalanceSheet, BankStatus, FictitiousBank, FinancialSystem, TriggerShock, ValidationReport,
    Violation, DEFAULT_TOL,
};
pub use threshold::{ThresholdKind, Thresholds};
