//! Random interbank networks, balance-sheet completion, trigger construction
//! and a Monte Carlo harness over seeds.
//!
//! Every generated amount lies on a dyadic grid (multiples of 2^-16), so sums
//! and differences are exact in floating point and generated systems satisfy
//! the accounting identity with zero residual.
//!
//! Randomness is split into independent ChaCha streams: one per bank for its
//! outgoing exposures and one per bank for its balance sheet. A bank's draws
//! therefore do not depend on how many other banks are generated.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, LogNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cascade::{simulate, Model};
use crate::error::{CascadeError, Result};
use crate::exposure::ExposureMatrix;
use crate::market::ImpactParams;
use crate::state::ModelConfig;
use crate::system::{apply_trigger, BalanceSheet, FinancialSystem, TriggerShock, DEFAULT_TOL};

const GRID: f64 = 65536.0;
const MAX_DRAWS: usize = 64;
const SHEET_STREAM: u64 = 1 << 32;
const TRIGGER_STREAM: u64 = 1 << 33;

fn quantize(x: f64) -> f64 {
    (x * GRID).round() / GRID
}

fn stream(seed: u64, id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id);
    rng
}

/// Graph model for who lends to whom.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Topology {
    /// Each ordered pair is linked independently with probability `p_edge`.
    ErdosRenyi { p_edge: f64 },
    /// Banks `0..n_core` form the core; link probabilities depend on the pair type.
    CorePeriphery { n_core: usize, p_cc: f64, p_cp: f64, p_pp: f64 },
}

/// Lognormal amount with the given mean and log-scale dispersion.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AmountDistribution {
    pub mean: f64,
    pub dispersion: f64,
}

impl AmountDistribution {
    fn validate(&self, what: &str) -> Result<()> {
        if !(self.mean > 0.0 && self.mean.is_finite()) || !(self.dispersion >= 0.0 && self.dispersion.is_finite()) {
            return Err(CascadeError::Config(format!(
                "{what}: mean must be positive and dispersion nonnegative"
            )));
        }
        Ok(())
    }

    fn sampler(&self) -> LogNormal<f64> {
        let sigma = self.dispersion;
        LogNormal::new(self.mean.ln() - sigma * sigma / 2.0, sigma).expect("validated parameters")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetworkSpec {
    pub n_banks: usize,
    pub topology: Topology,
    pub exposure_scale: AmountDistribution,
    #[serde(default)]
    pub seed: u64,
}

impl NetworkSpec {
    pub fn validate(&self) -> Result<()> {
        if self.n_banks == 0 {
            return Err(CascadeError::Empty);
        }
        let probs: Vec<f64> = match self.topology {
            Topology::ErdosRenyi { p_edge } => vec![p_edge],
            Topology::CorePeriphery { n_core, p_cc, p_cp, p_pp } => {
                if n_core > self.n_banks {
                    return Err(CascadeError::Config(format!(
                        "n_core = {n_core} exceeds n_banks = {}",
                        self.n_banks
                    )));
                }
                vec![p_cc, p_cp, p_pp]
            }
        };
        if probs.iter().any(|p| !(0.0..=1.0).contains(p)) {
            return Err(CascadeError::Config("link probabilities must lie in [0, 1]".into()));
        }
        self.exposure_scale.validate("exposure_scale")
    }

    fn link_probability(&self, i: usize, j: usize) -> f64 {
        match self.topology {
            Topology::ErdosRenyi { p_edge } => p_edge,
            Topology::CorePeriphery { n_core, p_cc, p_cp, p_pp } => match (i < n_core, j < n_core) {
                (true, true) => p_cc,
                (false, false) => p_pp,
                _ => p_cp,
            },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BalanceSheetSpec {
    /// Equity over total assets.
    pub capital_ratio: f64,
    /// Cash over total assets.
    pub cash_ratio: f64,
    /// Minimum share of fixed assets within external assets.
    pub fixed_asset_share: f64,
    /// Size of each bank's external asset holdings.
    #[serde(default = "default_external_assets")]
    pub external_assets: AmountDistribution,
}

fn default_external_assets() -> AmountDistribution {
    AmountDistribution {
        mean: 100.0,
        dispersion: 0.5,
    }
}

impl Default for BalanceSheetSpec {
    fn default() -> Self {
        Self {
            capital_ratio: 0.05,
            cash_ratio: 0.05,
            fixed_asset_share: 0.5,
            external_assets: default_external_assets(),
        }
    }
}

impl BalanceSheetSpec {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("capital_ratio", self.capital_ratio),
            ("cash_ratio", self.cash_ratio),
            ("fixed_asset_share", self.fixed_asset_share),
        ] {
            if !(v > 0.0 && v < 1.0) {
                return Err(CascadeError::Config(format!("{name} must lie in (0, 1), got {v}")));
            }
        }
        if self.cash_ratio + self.fixed_asset_share >= 1.0 {
            return Err(CascadeError::Config(
                "cash_ratio + fixed_asset_share must be below 1".into(),
            ));
        }
        self.external_assets.validate("external_assets")
    }
}

/// Draw the nominal exposure matrix.
pub fn generate_exposures(net: &NetworkSpec) -> Result<ExposureMatrix> {
    net.validate()?;
    let n = net.n_banks;
    let weights = net.exposure_scale.sampler();
    let mut triplets = Vec::new();
    for i in 0..n {
        let mut rng = stream(net.seed, i as u64);
        for j in 0..n {
            if j == i {
                continue;
            }
            if rng.random::<f64>() < net.link_probability(i, j) {
                let w = quantize(weights.sample(&mut rng));
                if w > 0.0 {
                    triplets.push((i, j, w));
                }
            }
        }
    }
    ExposureMatrix::from_triplets(n, triplets)
}

/// Complete the balance sheet of bank `i`, given its interbank positions.
fn complete_sheet(i: usize, z: f64, x: f64, spec: &BalanceSheetSpec, rng: &mut ChaCha8Rng) -> Result<BalanceSheet> {
    let sizes = spec.external_assets.sampler();
    let mut binding = String::new();
    for _ in 0..MAX_DRAWS {
        let ext = quantize(sizes.sample(rng));
        let total = z + ext;
        let c = quantize(spec.cash_ratio * total);
        let a = total - z - c;
        if a < 0.0 {
            binding = "cash_ratio: cash would exceed external assets".into();
            continue;
        }
        if a < spec.fixed_asset_share * (a + c) {
            binding = "fixed_asset_share: fixed assets below the required share of external assets".into();
            continue;
        }
        let e = quantize(spec.capital_ratio * total);
        let d = total - x - e;
        if d < 0.0 {
            binding = "capital_ratio: interbank debt plus equity exceed total assets".into();
            continue;
        }
        return Ok(BalanceSheet::new(z, a, c, x, d, e));
    }
    Err(CascadeError::Generation { bank: i, constraint: binding })
}

/// Generate a nominal (pre-trigger) financial system.
pub fn generate_system(net: &NetworkSpec, sheets: &BalanceSheetSpec) -> Result<FinancialSystem> {
    sheets.validate()?;
    let omega = generate_exposures(net)?;
    let z = omega.col_sums();
    let x = omega.row_sums();
    let balance_sheets = (0..net.n_banks)
        .map(|i| {
            let mut rng = stream(net.seed, SHEET_STREAM + i as u64);
            complete_sheet(i, z[i], x[i], sheets, &mut rng)
        })
        .collect::<Result<Vec<_>>>()?;
    FinancialSystem::new(balance_sheets, omega)
}

/// Which banks a trigger hits.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Targets {
    #[default]
    All,
    /// `count` banks chosen uniformly at random.
    Random { count: usize },
    Banks { ids: Vec<usize> },
}

/// Proportional shocks: a fraction of fixed assets lost and a fraction of
/// external debt withdrawn, at the targeted banks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct TriggerSpec {
    pub asset_loss: f64,
    pub withdrawal: f64,
    pub targets: Targets,
}

impl TriggerSpec {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("asset_loss", self.asset_loss), ("withdrawal", self.withdrawal)] {
            if !(0.0..=1.0).contains(&v) {
                return Err(CascadeError::Config(format!("{name} must lie in [0, 1], got {v}")));
            }
        }
        Ok(())
    }
}

/// Build the trigger shock for `system`; random targets use `seed`.
pub fn build_trigger(system: &FinancialSystem, spec: &TriggerSpec, seed: u64) -> Result<TriggerShock> {
    spec.validate()?;
    let n = system.n_banks();
    let mut hit = vec![false; n];
    match &spec.targets {
        Targets::All => hit.iter_mut().for_each(|h| *h = true),
        Targets::Random { count } => {
            if *count > n {
                return Err(CascadeError::Config(format!("cannot target {count} of {n} banks")));
            }
            let mut rng = stream(seed, TRIGGER_STREAM);
            for i in rand::seq::index::sample(&mut rng, n, *count) {
                hit[i] = true;
            }
        }
        Targets::Banks { ids } => {
            for &i in ids {
                if i >= n {
                    return Err(CascadeError::Config(format!("trigger target {i} out of range")));
                }
                hit[i] = true;
            }
        }
    }
    let mut shock = TriggerShock::zero(n);
    for i in 0..n {
        if hit[i] && !system.is_fictitious(i) {
            let s = &system.balance_sheets[i];
            shock.delta_a[i] = -quantize(spec.asset_loss * s.a).min(s.a);
            shock.delta_d[i] = -quantize(spec.withdrawal * s.d).min(s.d);
        }
    }
    Ok(shock)
}

/// A fully specified random scenario (the seed is supplied per run).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioSpec {
    pub network: NetworkSpec,
    #[serde(default)]
    pub balance_sheets: BalanceSheetSpec,
    #[serde(default)]
    pub trigger: TriggerSpec,
}

impl ScenarioSpec {
    /// Nominal system and its post-trigger counterpart for one seed.
    pub fn realize(&self, seed: u64) -> Result<(FinancialSystem, FinancialSystem)> {
        let net = NetworkSpec { seed, ..self.network };
        let nominal = generate_system(&net, &self.balance_sheets)?;
        let shock = build_trigger(&nominal, &self.trigger, seed)?;
        let shocked = apply_trigger(&nominal, &shock)?;
        Ok((nominal, shocked))
    }
}

/// One Monte Carlo grid cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridCell {
    pub label: String,
    pub scenario: ScenarioSpec,
    pub model: Model,
    #[serde(default)]
    pub config: ModelConfig,
    #[serde(default)]
    pub impact: Option<ImpactParams>,
}

/// Outcome of one seeded run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunMetrics {
    pub seed: u64,
    pub defaults: usize,
    pub illiquid: usize,
    /// Positive equity lost during the cascade, `sum ((E0)+ - (E)+)` over the post-trigger state.
    pub equity_loss: f64,
    pub pi: f64,
    pub pi_tilde: f64,
    pub days: usize,
    pub converged: bool,
}

/// Simulate one post-trigger system and summarize it.
pub fn run_metrics(
    seed: u64,
    system: &FinancialSystem,
    model: Model,
    config: &ModelConfig,
    impact: Option<&ImpactParams>,
) -> Result<RunMetrics> {
    let t = simulate(system, model, config, impact)?;
    let end = t.terminal();
    let status = end.status(DEFAULT_TOL);
    let real = |i: &usize| !system.is_fictitious(*i);
    let n = system.n_banks();
    let equity_loss = (0..n)
        .filter(real)
        .map(|i| system.balance_sheets[i].e.max(0.0) - end.balance_sheets[i].e.max(0.0))
        .sum();
    Ok(RunMetrics {
        seed,
        defaults: (0..n).filter(real).filter(|&i| !status[i].solvent).count(),
        illiquid: (0..n).filter(real).filter(|&i| !status[i].liquid).count(),
        equity_loss,
        pi: end.market.pi,
        pi_tilde: end.market.pi_tilde,
        days: t.days(),
        converged: t.converged,
    })
}

/// Order-free summary statistics of a sample.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Stats {
    pub mean: f64,
    pub min: f64,
    pub q05: f64,
    pub q50: f64,
    pub q95: f64,
    pub max: f64,
}

impl Stats {
    /// Statistics of `values`; computed from the sorted sample so the result
    /// does not depend on input order. Quantiles interpolate linearly.
    pub fn of(values: &[f64]) -> Stats {
        let mut v = values.to_vec();
        v.sort_by(f64::total_cmp);
        let n = v.len();
        if n == 0 {
            return Stats {
                mean: f64::NAN,
                min: f64::NAN,
                q05: f64::NAN,
                q50: f64::NAN,
                q95: f64::NAN,
                max: f64::NAN,
            };
        }
        let q = |p: f64| {
            let h = p * (n - 1) as f64;
            let lo = h.floor() as usize;
            let hi = h.ceil() as usize;
            v[lo] + (h - lo as f64) * (v[hi] - v[lo])
        };
        Stats {
            mean: v.iter().sum::<f64>() / n as f64,
            min: v[0],
            q05: q(0.05),
            q50: q(0.5),
            q95: q(0.95),
            max: v[n - 1],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub label: String,
    pub model: Model,
    pub runs: usize,
    pub non_converged: usize,
    pub defaults: Stats,
    pub illiquid: Stats,
    pub equity_loss: Stats,
    pub pi: Stats,
    pub pi_tilde: Stats,
    pub days: Stats,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryTable {
    pub rows: Vec<SummaryRow>,
    /// Per-run outcomes, one list per row, in seed order.
    pub runs: Vec<Vec<RunMetrics>>,
}

/// Seeds of a Monte Carlo study: `base_seed, base_seed + 1, ...`. Every
/// cell sees the same seeds, so cells can be compared run by run.
pub fn seed_partition(base_seed: u64, n_seeds: usize) -> Vec<u64> {
    (0..n_seeds as u64).map(|k| base_seed.wrapping_add(k)).collect()
}

fn summarize(cell: &GridCell, runs: Vec<RunMetrics>) -> SummaryRow {
    let col = |f: &dyn Fn(&RunMetrics) -> f64| runs.iter().map(f).collect::<Vec<_>>();
    SummaryRow {
        label: cell.label.clone(),
        model: cell.model,
        runs: runs.len(),
        non_converged: runs.iter().filter(|r| !r.converged).count(),
        defaults: Stats::of(&col(&|r| r.defaults as f64)),
        illiquid: Stats::of(&col(&|r| r.illiquid as f64)),
        equity_loss: Stats::of(&col(&|r| r.equity_loss)),
        pi: Stats::of(&col(&|r| r.pi)),
        pi_tilde: Stats::of(&col(&|r| r.pi_tilde)),
        days: Stats::of(&col(&|r| r.days as f64)),
    }
}

/// Run every cell on every seed (in parallel on the current rayon pool) and
/// summarize per cell. Non-converged runs are kept and counted.
pub fn monte_carlo(cells: &[GridCell], seeds: &[u64]) -> Result<SummaryTable> {
    if seeds.is_empty() {
        return Err(CascadeError::Config("a Monte Carlo study needs at least one seed".into()));
    }
    let jobs: Vec<(usize, u64)> = (0..cells.len()).flat_map(|c| seeds.iter().map(move |&s| (c, s))).collect();
    let results: Vec<Result<RunMetrics>> = jobs
        .par_iter()
        .map(|&(c, seed)| {
            let cell = &cells[c];
            let (_, shocked) = cell.scenario.realize(seed)?;
            run_metrics(seed, &shocked, cell.model, &cell.config, cell.impact.as_ref())
        })
        .collect();
    let mut per_cell: Vec<Vec<RunMetrics>> = vec![Vec::with_capacity(seeds.len()); cells.len()];
    for ((c, _), r) in jobs.iter().zip(results) {
        per_cell[*c].push(r?);
    }
    let rows = cells.iter().zip(&per_cell).map(|(cell, runs)| summarize(cell, runs.clone())).collect();
    Ok(SummaryTable { rows, runs: per_cell })
}
