//! Normalized threshold functions mapping a scaled buffer to a surviving fraction.

use serde::{Deserialize, Serialize};

use crate::error::{CascadeError, Result};

/// Recovery regime applied when a buffer turns negative.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ThresholdKind {
    /// `h(x) = min(1, max(0, x + 1))`: no deadweight losses.
    #[default]
    Soft,
    /// `1(x >= 0)`: nothing is recovered once the buffer is negative.
    ZeroRecovery,
    /// `(1 - R) 1(x >= 0) + R h(x / R)`.
    FractionalRecovery {
        #[serde(rename = "R")]
        r: f64,
    },
    /// `lambda 1(x > 0) + (1 - lambda)`: a fixed fraction is withdrawn on stress.
    Freeze { lambda: f64 },
}

#[inline]
pub fn soft(x: f64) -> f64 {
    (x + 1.0).clamp(0.0, 1.0)
}

impl ThresholdKind {
    pub fn validate(&self) -> Result<()> {
        match *self {
            ThresholdKind::FractionalRecovery { r } if !(r > 0.0 && r < 1.0) => Err(CascadeError::Config(format!(
                "fractional_recovery needs R in (0,1), got {r}"
            ))),
            ThresholdKind::Freeze { lambda } if !(0.0..=1.0).contains(&lambda) => Err(CascadeError::Config(format!(
                "freeze needs lambda in [0,1], got {lambda}"
            ))),
            _ => Ok(()),
        }
    }

    /// Evaluate at `x` on the extended real line.
    pub fn eval(&self, x: f64) -> f64 {
        debug_assert!(!x.is_nan(), "threshold evaluated at NaN");
        match *self {
            ThresholdKind::Soft => soft(x),
            ThresholdKind::ZeroRecovery => indicator(x >= 0.0),
            ThresholdKind::FractionalRecovery { r } => (1.0 - r) * indicator(x >= 0.0) + r * soft(x / r),
            ThresholdKind::Freeze { lambda } => lambda * indicator(x > 0.0) + (1.0 - lambda),
        }
    }

    pub fn is_soft(&self) -> bool {
        matches!(self, ThresholdKind::Soft)
    }
}

#[inline]
fn indicator(b: bool) -> f64 {
    if b {
        1.0
    } else {
        0.0
    }
}

/// Threshold used for each of the four surviving fractions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct Thresholds {
    /// Interbank debt recovery `p`.
    pub interbank_debt: ThresholdKind,
    /// External debt recovery `q`.
    pub external_debt: ThresholdKind,
    /// Unsold interbank assets `p~`.
    pub interbank_assets: ThresholdKind,
    /// Unsold fixed assets `q~`.
    pub fixed_assets: ThresholdKind,
}

impl Thresholds {
    pub fn uniform(kind: ThresholdKind) -> Self {
        Self {
            interbank_debt: kind,
            external_debt: kind,
            interbank_assets: kind,
            fixed_assets: kind,
        }
    }

    /// Zero recovery on interbank debt only.
    pub fn zero_recovery() -> Self {
        Self {
            interbank_debt: ThresholdKind::ZeroRecovery,
            ..Self::default()
        }
    }

    /// Fractional recovery `r1` on interbank debt and `r2` on external debt.
    pub fn recovery(r1: f64, r2: f64) -> Self {
        Self {
            interbank_debt: ThresholdKind::FractionalRecovery { r: r1 },
            external_debt: ThresholdKind::FractionalRecovery { r: r2 },
            ..Self::default()
        }
    }

    /// Liquidity freeze with withdrawal fraction `lambda` on interbank assets.
    pub fn freeze(lambda: f64) -> Self {
        Self {
            interbank_assets: ThresholdKind::Freeze { lambda },
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.interbank_debt.validate()?;
        self.external_debt.validate()?;
        self.interbank_assets.validate()?;
        self.fixed_assets.validate()
    }

    pub fn all_soft(&self) -> bool {
        self.interbank_debt.is_soft()
            && self.external_debt.is_soft()
            && self.interbank_assets.is_soft()
            && self.fixed_assets.is_soft()
    }

    /// Thresholds of the asset/liability dual model.
    pub fn al_dual(&self) -> Self {
        Self {
            interbank_debt: self.interbank_assets,
            external_debt: self.fixed_assets,
            interbank_assets: self.interbank_debt,
            fixed_assets: self.external_debt,
        }
    }
}
