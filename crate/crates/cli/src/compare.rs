//! The `compare` subcommand: per-bank and aggregate differences `b - a`
//! between two single-run configs, as CSV.

use std::fmt::Write;
use std::path::Path;

use crate::config::RunConfig;
use crate::error::{CliError, Result};
use crate::run::{simulate_config, Outcome};

fn outcome(path: &Path) -> Result<Outcome> {
    let cfg = RunConfig::load(path)?;
    if cfg.monte_carlo.is_some() {
        return Err(CliError::Config(format!("{}: compare needs single-run configs", path.display())));
    }
    let base = path.parent().unwrap_or(Path::new("."));
    simulate_config(&cfg, base)
}

pub fn compare(a: &Path, b: &Path) -> Result<String> {
    let (a, b) = (outcome(a)?, outcome(b)?);
    diff_csv(&a, &b)
}

/// CSV with one row per bank and a final `total` row. Columns are `b - a`;
/// `extra_equity_loss` is the additional equity (positive part) lost in run b,
/// each run measured from its own post-trigger state.
pub fn diff_csv(a: &Outcome, b: &Outcome) -> Result<String> {
    let n = a.system.n_banks();
    if n != b.system.n_banks() || a.system.fictitious_bank != b.system.fictitious_bank {
        return Err(CliError::Incompatible(format!(
            "{} banks vs {} banks",
            a.summary.n_banks, b.summary.n_banks
        )));
    }
    let (ta, tb) = (a.trajectory.terminal(), b.trajectory.terminal());
    let loss = |o: &Outcome, i: usize| {
        o.system.balance_sheets[i].e.max(0.0) - o.trajectory.terminal().balance_sheets[i].e.max(0.0)
    };
    let mut out = String::from("bank,d_p,d_p_tilde,d_q,d_q_tilde,d_E,d_C,extra_equity_loss,d_pi,d_pi_tilde,d_days\n");
    let mut total = [0.0f64; 7];
    for i in (0..n).filter(|&i| !a.system.is_fictitious(i)) {
        let row = [
            tb.p[i] - ta.p[i],
            tb.p_tilde[i] - ta.p_tilde[i],
            tb.q[i] - ta.q[i],
            tb.q_tilde[i] - ta.q_tilde[i],
            tb.balance_sheets[i].e - ta.balance_sheets[i].e,
            tb.balance_sheets[i].c - ta.balance_sheets[i].c,
            loss(b, i) - loss(a, i),
        ];
        for (t, v) in total.iter_mut().zip(row) {
            *t += v;
        }
        let cells: Vec<String> = row.iter().map(|v| v.to_string()).collect();
        writeln!(out, "{i},{},,,", cells.join(",")).expect("write to string");
    }
    let cells: Vec<String> = total.iter().map(|v| v.to_string()).collect();
    writeln!(
        out,
        "total,{},{},{},{}",
        cells.join(","),
        tb.market.pi - ta.market.pi,
        tb.market.pi_tilde - ta.market.pi_tilde,
        b.trajectory.days() as i64 - a.trajectory.days() as i64
    )
    .expect("write to string");
    Ok(out)
}
