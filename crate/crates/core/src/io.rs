//! Serialized forms: the system JSON schema and plot-ready CSV / JSON-lines
//! exports of trajectories and Monte Carlo summaries.
//!
//! Numbers are written with Rust's shortest round-trip formatting, so
//! re-running a simulation reproduces every export byte for byte.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{CascadeError, Result};
use crate::exposure::ExposureMatrix;
use crate::scenario::{Stats, SummaryTable};
use crate::state::{CascadeTrajectory, StepRecord};
use crate::system::{BalanceSheet, FinancialSystem};

pub const SYSTEM_FORMAT_VERSION: u32 = 1;

/// Bank label: a number or a name.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum BankId {
    Number(u64),
    Name(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BankRecord {
    pub id: BankId,
    #[serde(flatten)]
    pub sheet: BalanceSheet,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExposureEntry {
    pub debtor: usize,
    pub creditor: usize,
    pub amount: f64,
}

/// Exposures as a dense row-major matrix or a list of entries.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ExposureData {
    Dense(Vec<Vec<f64>>),
    Sparse(Vec<ExposureEntry>),
}

/// On-disk form of a [`FinancialSystem`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemFile {
    pub version: u32,
    pub banks: Vec<BankRecord>,
    pub exposures: ExposureData,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub fictitious_bank: bool,
}

impl SystemFile {
    pub fn from_system(system: &FinancialSystem, sparse: bool) -> Self {
        let banks = system
            .balance_sheets
            .iter()
            .enumerate()
            .map(|(i, s)| BankRecord {
                id: BankId::Number(i as u64),
                sheet: *s,
            })
            .collect();
        let exposures = if sparse {
            ExposureData::Sparse(
                system
                    .exposures
                    .triplets()
                    .map(|(debtor, creditor, amount)| ExposureEntry {
                        debtor,
                        creditor,
                        amount,
                    })
                    .collect(),
            )
        } else {
            ExposureData::Dense(system.exposures.to_dense())
        };
        Self {
            version: SYSTEM_FORMAT_VERSION,
            banks,
            exposures,
            fictitious_bank: system.fictitious_bank,
        }
    }

    pub fn to_system(&self) -> Result<FinancialSystem> {
        if self.version != SYSTEM_FORMAT_VERSION {
            return Err(CascadeError::Config(format!(
                "unsupported system format version {} (expected {SYSTEM_FORMAT_VERSION})",
                self.version
            )));
        }
        let n = self.banks.len();
        let omega = match &self.exposures {
            ExposureData::Dense(rows) => {
                // an empty list is ambiguous; treat it as "no exposures"
                if rows.is_empty() {
                    ExposureMatrix::zeros(n)
                } else {
                    ExposureMatrix::from_dense(rows)?
                }
            }
            ExposureData::Sparse(entries) => {
                ExposureMatrix::from_triplets(n, entries.iter().map(|e| (e.debtor, e.creditor, e.amount)))?
            }
        };
        let mut sys = FinancialSystem::new(self.banks.iter().map(|b| b.sheet).collect(), omega)?;
        sys.fictitious_bank = self.fictitious_bank;
        Ok(sys)
    }
}

pub fn parse_system(json: &str) -> Result<FinancialSystem> {
    let file: SystemFile = serde_json::from_str(json).map_err(|e| CascadeError::Config(format!("system file: {e}")))?;
    file.to_system()
}

pub fn system_to_json(system: &FinancialSystem, sparse: bool) -> String {
    serde_json::to_string_pretty(&SystemFile::from_system(system, sparse)).expect("plain data serializes")
}

fn io_err(e: std::io::Error) -> CascadeError {
    CascadeError::Config(format!("write failed: {e}"))
}

/// One row per bank per day: fractions, equity, cash, buffers and book values.
pub fn write_trajectory_csv<W: Write>(t: &CascadeTrajectory, mut w: W) -> Result<()> {
    writeln!(w, "day,bank,p,p_tilde,q,q_tilde,E,C,Delta,Sigma,Z,A,X,D").map_err(io_err)?;
    for st in &t.states {
        for (i, s) in st.balance_sheets.iter().enumerate() {
            writeln!(
                w,
                "{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
                st.day,
                i,
                st.p[i],
                st.p_tilde[i],
                st.q[i],
                st.q_tilde[i],
                s.e,
                s.c,
                st.delta[i],
                st.sigma[i],
                s.z,
                s.a,
                s.x,
                s.d
            )
            .map_err(io_err)?;
        }
    }
    Ok(())
}

/// One row per day with the market state.
pub fn write_market_csv<W: Write>(t: &CascadeTrajectory, mut w: W) -> Result<()> {
    writeln!(w, "day,pi,pi_tilde,s,s_tilde,ell,ell_prime,d_tilde,e_tilde").map_err(io_err)?;
    for st in &t.states {
        let m = &st.market;
        writeln!(
            w,
            "{},{},{},{},{},{},{},{},{}",
            st.day, m.pi, m.pi_tilde, m.s, m.s_tilde, m.ell, m.ell_prime, m.d_tilde, m.e_tilde
        )
        .map_err(io_err)?;
    }
    Ok(())
}

/// Step records as JSON lines.
pub fn write_audit_jsonl<W: Write>(records: &[StepRecord], mut w: W) -> Result<()> {
    for r in records {
        serde_json::to_writer(&mut w, r).map_err(|e| CascadeError::Config(format!("write failed: {e}")))?;
        writeln!(w).map_err(io_err)?;
    }
    Ok(())
}

/// One row per grid cell, with mean and quantiles of each metric.
pub fn write_summary_csv<W: Write>(table: &SummaryTable, mut w: W) -> Result<()> {
    let metrics = ["defaults", "illiquid", "equity_loss", "pi", "pi_tilde", "days"];
    let stats = ["mean", "min", "q05", "q50", "q95", "max"];
    let mut header = vec!["label".to_string(), "model".into(), "runs".into(), "non_converged".into()];
    for m in metrics {
        for s in stats {
            header.push(format!("{m}_{s}"));
        }
    }
    writeln!(w, "{}", header.join(",")).map_err(io_err)?;
    for row in &table.rows {
        let mut cells = vec![
            csv_field(&row.label),
            row.model.name().to_string(),
            row.runs.to_string(),
            row.non_converged.to_string(),
        ];
        for st in [&row.defaults, &row.illiquid, &row.equity_loss, &row.pi, &row.pi_tilde, &row.days] {
            let Stats {
                mean,
                min,
                q05,
                q50,
                q95,
                max,
            } = *st;
            cells.extend([mean, min, q05, q50, q95, max].iter().map(|v| v.to_string()));
        }
        writeln!(w, "{}", cells.join(",")).map_err(io_err)?;
    }
    Ok(())
}

/// Quote a CSV field if it needs it.
pub fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}
