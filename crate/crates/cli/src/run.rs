//! The `run` subcommand: one simulation or a Monte Carlo grid.

use std::path::Path;

use cascade_core::io::{write_audit_jsonl, write_market_csv, write_summary_csv, write_trajectory_csv};
use cascade_core::scenario::{monte_carlo, seed_partition, SummaryTable};
use cascade_core::{
    simulate, validate_system, CascadeTrajectory, FinancialSystem, ImpactParams, Model, DEFAULT_TOL,
};
use serde::Serialize;

use crate::config::{MonteCarloConfig, RunConfig};
use crate::error::{CliError, Result};
use crate::output::{resolve, Artifacts};

#[derive(Debug, Serialize)]
pub struct BankSummary {
    pub bank: usize,
    pub p: f64,
    pub p_tilde: f64,
    pub q: f64,
    pub q_tilde: f64,
    #[serde(rename = "E")]
    pub e: f64,
    #[serde(rename = "C")]
    pub c: f64,
    pub solvent: bool,
    pub liquid: bool,
}

#[derive(Debug, Serialize)]
pub struct Counts {
    pub insolvent: usize,
    pub illiquid: usize,
    pub impaired: usize,
}

#[derive(Debug, Serialize)]
pub struct AuditSummary {
    pub max_identity_residual: f64,
    pub tolerance: f64,
    pub passed: bool,
}

#[derive(Debug, Serialize)]
pub struct RunSummary {
    pub model: &'static str,
    pub n_banks: usize,
    pub converged: bool,
    pub iterations: usize,
    pub days: usize,
    pub residual: f64,
    pub counts: Counts,
    /// Positive equity lost during the cascade, measured from the post-trigger state.
    pub total_equity_loss: f64,
    pub pi_path: Vec<f64>,
    pub pi_tilde_path: Vec<f64>,
    pub audit: AuditSummary,
    pub banks: Vec<BankSummary>,
}

impl RunSummary {
    pub fn new(system: &FinancialSystem, model: Model, t: &CascadeTrajectory, audit_tol: f64) -> Self {
        let end = t.terminal();
        let status = end.status(DEFAULT_TOL);
        let real: Vec<usize> = (0..system.n_banks()).filter(|&i| !system.is_fictitious(i)).collect();
        let count = |f: &dyn Fn(usize) -> bool| real.iter().filter(|&&i| f(i)).count();
        let max_residual = t.states.iter().map(|s| s.max_identity_residual()).fold(0.0, f64::max);
        RunSummary {
            model: model.name(),
            n_banks: real.len(),
            converged: t.converged,
            iterations: t.iterations(),
            days: t.days(),
            residual: t.residual,
            counts: Counts {
                insolvent: count(&|i| !status[i].solvent),
                illiquid: count(&|i| !status[i].liquid),
                impaired: count(&|i| status[i].impaired),
            },
            total_equity_loss: real
                .iter()
                .map(|&i| system.balance_sheets[i].e.max(0.0) - end.balance_sheets[i].e.max(0.0))
                .sum(),
            pi_path: t.states.iter().map(|s| s.market.pi).collect(),
            pi_tilde_path: t.states.iter().map(|s| s.market.pi_tilde).collect(),
            audit: AuditSummary {
                max_identity_residual: max_residual,
                tolerance: audit_tol,
                passed: max_residual <= audit_tol,
            },
            banks: real
                .iter()
                .map(|&i| BankSummary {
                    bank: i,
                    p: end.p[i],
                    p_tilde: end.p_tilde[i],
                    q: end.q[i],
                    q_tilde: end.q_tilde[i],
                    e: end.balance_sheets[i].e,
                    c: end.balance_sheets[i].c,
                    solvent: status[i].solvent,
                    liquid: status[i].liquid,
                })
                .collect(),
        }
    }
}

/// A completed single run.
pub struct Outcome {
    pub system: FinancialSystem,
    pub model: Model,
    pub trajectory: CascadeTrajectory,
    pub summary: RunSummary,
}

/// Load, validate and simulate the system of a single-run config.
pub fn simulate_config(cfg: &RunConfig, base: &Path) -> Result<Outcome> {
    let model = cfg
        .model
        .ok_or_else(|| CliError::Config("a single run needs `model`".into()))?;
    let system = cfg.load_system(base)?;
    let report = validate_system(&system, DEFAULT_TOL)?;
    if !report.is_valid() {
        let detail = serde_json::to_string(&report.violations).expect("plain data serializes");
        return Err(CliError::Validation(detail));
    }
    let impact: Option<ImpactParams> = match (&cfg.impact, model) {
        (Some(i), Model::Esl) => Some(i.resolve(&system)?),
        (Some(_), m) => {
            log::warn!("model {} ignores impact parameters", m.name());
            None
        }
        (None, _) => None,
    };
    let mc = cfg.model_config();
    let trajectory = simulate(&system, model, &mc, impact.as_ref())?;
    let summary = RunSummary::new(&system, model, &trajectory, mc.audit_tol);
    Ok(Outcome {
        system,
        model,
        trajectory,
        summary,
    })
}

fn render<F>(f: F) -> Result<Vec<u8>>
where
    F: FnOnce(&mut Vec<u8>) -> cascade_core::Result<()>,
{
    let mut buf = Vec::new();
    f(&mut buf)?;
    Ok(buf)
}

fn pretty<T: Serialize>(value: &T) -> Vec<u8> {
    let mut s = serde_json::to_vec_pretty(value).expect("plain data serializes");
    s.push(b'\n');
    s
}

/// Execute a config file. Returns the JSON printed on standard output.
pub fn run(config_path: &Path) -> Result<String> {
    let cfg = RunConfig::load(config_path)?;
    let base = config_path.parent().unwrap_or(Path::new("."));
    match &cfg.monte_carlo {
        Some(mc) => run_monte_carlo(&cfg, mc, base),
        None => run_single(&cfg, base),
    }
}

fn run_single(cfg: &RunConfig, base: &Path) -> Result<String> {
    let out = simulate_config(cfg, base)?;
    let t = &out.trajectory;
    let o = &cfg.outputs;
    let mut artifacts = Artifacts::default();
    if let Some(p) = &o.trajectory_csv {
        artifacts.add(resolve(base, p), render(|w| write_trajectory_csv(t, w))?);
    }
    if let Some(p) = &o.market_csv {
        artifacts.add(resolve(base, p), render(|w| write_market_csv(t, w))?);
    }
    if let Some(p) = &o.audit_jsonl {
        artifacts.add(resolve(base, p), render(|w| write_audit_jsonl(&t.records, w))?);
    }
    if let Some(p) = &o.summary_json {
        artifacts.add(resolve(base, p), pretty(&out.summary));
    }
    artifacts.commit()?;
    let text = serde_json::to_string_pretty(&out.summary).expect("plain data serializes");
    if !t.converged {
        return Err(CliError::NonConvergence(format!(
            "{} did not converge within {} iterations (last change {:e}); artifacts hold the last iterate",
            out.model.name(),
            t.iterations(),
            t.residual
        )));
    }
    Ok(text)
}

fn run_monte_carlo(cfg: &RunConfig, mc: &MonteCarloConfig, base: &Path) -> Result<String> {
    let seeds = seed_partition(mc.base_seed.unwrap_or(cfg.seed), mc.n_seeds);
    let table: SummaryTable = monte_carlo(&mc.cells, &seeds)?;
    let mut artifacts = Artifacts::default();
    if let Some(p) = &cfg.outputs.summary_csv {
        artifacts.add(resolve(base, p), render(|w| write_summary_csv(&table, w))?);
    }
    if let Some(p) = &cfg.outputs.summary_json {
        artifacts.add(resolve(base, p), pretty(&table));
    }
    artifacts.commit()?;
    let non_converged: usize = table.rows.iter().map(|r| r.non_converged).sum();
    if non_converged > 0 {
        // the summary is written and flags them per cell; the exit status flags them too
        return Err(CliError::NonConvergence(format!(
            "{non_converged} Monte Carlo runs did not converge (see non_converged in the summary)"
        )));
    }
    Ok(serde_json::to_string_pretty(&table.rows).expect("plain data serializes"))
}
