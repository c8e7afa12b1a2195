//! Independent reference implementations and random instance builders shared
//! by the integration tests. Nothing here calls into the cascade engine.
#![allow(dead_code)]

use cascade_core::{BalanceSheet, ExposureMatrix, FinancialSystem, ThresholdKind};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Direct solvency recursion on the initial balance sheets.
///
/// `p(n) = 1(X0 > 0) h_p(Delta(n-1) / X0)`,
/// `q(n) = 1(D0 > 0) h_q((Delta(n-1) + X0) / D0)`,
/// `Delta(n) = Delta(0) - sum_j omega0_ji (1 - p_j(n))`.
#[derive(Debug, Clone)]
pub struct DirectPath {
    pub p: Vec<Vec<f64>>,
    pub q: Vec<Vec<f64>>,
    pub delta: Vec<Vec<f64>>,
}

pub fn direct_solvency(sys: &FinancialSystem, hp: ThresholdKind, hq: ThresholdKind, steps: usize) -> DirectPath {
    let n = sys.balance_sheets.len();
    let dense = sys.exposures.to_dense();
    let x0: Vec<f64> = (0..n).map(|i| dense[i].iter().sum()).collect();
    let d0: Vec<f64> = sys.balance_sheets.iter().map(|s| s.d).collect();
    let delta0: Vec<f64> = sys.balance_sheets.iter().map(|s| s.e).collect();
    let ind = |v: f64| if v > 0.0 { 1.0 } else { 0.0 };
    let mut path = DirectPath {
        p: vec![x0.iter().map(|&x| ind(x)).collect()],
        q: vec![d0.iter().map(|&d| ind(d)).collect()],
        delta: vec![delta0.clone()],
    };
    for _ in 0..steps {
        let prev = path.delta.last().unwrap().clone();
        let p: Vec<f64> = (0..n)
            .map(|i| if x0[i] > 0.0 { hp.eval(prev[i] / x0[i]) } else { 0.0 })
            .collect();
        let q: Vec<f64> = (0..n)
            .map(|i| if d0[i] > 0.0 { hq.eval((prev[i] + x0[i]) / d0[i]) } else { 0.0 })
            .collect();
        let delta: Vec<f64> = (0..n)
            .map(|i| delta0[i] - (0..n).map(|j| dense[j][i] * (1.0 - p[j])).sum::<f64>())
            .collect();
        path.p.push(p);
        path.q.push(q);
        path.delta.push(delta);
    }
    path
}

/// Direct liquidity recursion: the mirror image of [`direct_solvency`] with
/// `(Z, A, C)` in place of `(X, D, E)` and the exposures read by column.
#[derive(Debug, Clone)]
pub struct DirectLiquidityPath {
    pub p_tilde: Vec<Vec<f64>>,
    pub q_tilde: Vec<Vec<f64>>,
    pub sigma: Vec<Vec<f64>>,
}

pub fn direct_liquidity(sys: &FinancialSystem, h: ThresholdKind, steps: usize) -> DirectLiquidityPath {
    let n = sys.balance_sheets.len();
    let dense = sys.exposures.to_dense();
    let z0: Vec<f64> = (0..n).map(|j| (0..n).map(|i| dense[i][j]).sum()).collect();
    let a0: Vec<f64> = sys.balance_sheets.iter().map(|s| s.a).collect();
    let sigma0: Vec<f64> = sys.balance_sheets.iter().map(|s| s.c).collect();
    let ind = |v: f64| if v > 0.0 { 1.0 } else { 0.0 };
    let mut path = DirectLiquidityPath {
        p_tilde: vec![z0.iter().map(|&z| ind(z)).collect()],
        q_tilde: vec![a0.iter().map(|&a| ind(a)).collect()],
        sigma: vec![sigma0.clone()],
    };
    for _ in 0..steps {
        let prev = path.sigma.last().unwrap().clone();
        let pt: Vec<f64> = (0..n)
            .map(|i| if z0[i] > 0.0 { h.eval(prev[i] / z0[i]) } else { 0.0 })
            .collect();
        let qt: Vec<f64> = (0..n)
            .map(|i| if a0[i] > 0.0 { h.eval((prev[i] + z0[i]) / a0[i]) } else { 0.0 })
            .collect();
        let sigma: Vec<f64> = (0..n)
            .map(|i| sigma0[i] - (0..n).map(|j| dense[i][j] * (1.0 - pt[j])).sum::<f64>())
            .collect();
        path.p_tilde.push(pt);
        path.q_tilde.push(qt);
        path.sigma.push(sigma);
    }
    path
}

/// Clearing map evaluated densely: `F(p)_i = 1(X_i > 0) h((E_i - sum_j omega_ji (1 - p_j)) / X_i)`.
pub fn clearing_map_dense(sys: &FinancialSystem, p: &[f64], h: ThresholdKind) -> Vec<f64> {
    let n = p.len();
    let dense = sys.exposures.to_dense();
    (0..n)
        .map(|i| {
            let x: f64 = dense[i].iter().sum();
            if x <= 0.0 {
                return 0.0;
            }
            let lost: f64 = (0..n).map(|j| dense[j][i] * (1.0 - p[j])).sum();
            h.eval((sys.balance_sheets[i].e - lost) / x)
        })
        .collect()
}

/// Knobs for random post-trigger systems.
#[derive(Debug, Clone, Copy)]
pub struct RandomSpec {
    pub max_banks: usize,
    pub link_probability: f64,
    /// Cash drawn uniformly from this range (before the repayability cap).
    pub cash: (f64, f64),
    /// Cap every overdraft at the bank's interbank plus fixed assets.
    pub repayable_overdrafts: bool,
}

impl RandomSpec {
    /// Solvency-only systems with zero cash.
    pub fn solvency(max_banks: usize) -> Self {
        Self {
            max_banks,
            link_probability: 0.4,
            cash: (0.0, 0.0),
            repayable_overdrafts: true,
        }
    }

    /// Mixed triggers: negative equity and negative cash both occur.
    pub fn mixed(max_banks: usize) -> Self {
        Self {
            max_banks,
            link_probability: 0.3,
            cash: (-10.0, 10.0),
            repayable_overdrafts: true,
        }
    }
}

/// A random post-trigger system: exposures, fixed assets and external debt
/// are drawn, cash per `spec`, and equity closes the identity (it may be
/// negative).
pub fn random_system(rng: &mut ChaCha8Rng, spec: &RandomSpec) -> FinancialSystem {
    let n = rng.random_range(2..=spec.max_banks);
    let mut t = Vec::new();
    for i in 0..n {
        for j in 0..n {
            if i != j && rng.random::<f64>() < spec.link_probability {
                t.push((i, j, rng.random_range(0.5..10.0)));
            }
        }
    }
    let omega = ExposureMatrix::from_triplets(n, t).unwrap();
    let z = omega.col_sums();
    let x = omega.row_sums();
    let sheets = (0..n)
        .map(|i| {
            let a = if rng.random::<f64>() < 0.1 { 0.0 } else { rng.random_range(0.0..15.0) };
            let d = if rng.random::<f64>() < 0.1 { 0.0 } else { rng.random_range(0.0..12.0) };
            let mut c = if spec.cash.0 < spec.cash.1 {
                rng.random_range(spec.cash.0..spec.cash.1)
            } else {
                spec.cash.0
            };
            if spec.repayable_overdrafts {
                c = c.max(-(z[i] + a));
            }
            let e = z[i] + a + c - x[i] - d;
            BalanceSheet::new(z[i], a, c, x[i], d, e)
        })
        .collect();
    FinancialSystem::new(sheets, omega).unwrap()
}

/// Largest absolute difference between two vectors.
pub fn max_diff(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// The two-bank solvency fixture: bank 0 owes bank 1 10 and holds 5 of fixed
/// assets; bank 1 owes 3 externally.
pub fn two_bank_fixture() -> FinancialSystem {
    let omega = ExposureMatrix::from_dense(&[vec![0.0, 10.0], vec![0.0, 0.0]]).unwrap();
    FinancialSystem::new(
        vec![
            BalanceSheet::new(0.0, 5.0, 0.0, 10.0, 0.0, -5.0),
            BalanceSheet::new(10.0, 0.0, 0.0, 0.0, 3.0, 7.0),
        ],
        omega,
    )
    .unwrap()
}

/// Three-bank fire-sale spillover fixture, post-trigger.
///
/// * bank 0: Z=10, A=100, C=-20, X=0, D=40, E=50 — a withdrawal of 30 from
///   C=10, D=70 left it overdrawn; it has lent 10 to bank 2.
/// * bank 1: A=100, C=10, D=105, E=5 — thinly capitalized fixed-asset holder.
/// * bank 2: A=10, C=15, X=10, D=10, E=5 — owes bank 0 10.
///
/// Without price impact only bank 0 is impaired: it recalls 10 and sells 10
/// of fixed assets. With fire sales the price falls to `exp(-10 alpha)` and
/// bank 1 loses `100 (1 - exp(-10 alpha))`, so it fails once
/// `alpha > -ln(0.95) / 10`.
pub fn spillover_fixture() -> FinancialSystem {
    let omega = ExposureMatrix::from_dense(&[vec![0.0; 3], vec![0.0; 3], vec![10.0, 0.0, 0.0]]).unwrap();
    FinancialSystem::new(
        vec![
            BalanceSheet::new(10.0, 100.0, -20.0, 0.0, 40.0, 50.0),
            BalanceSheet::new(0.0, 100.0, 10.0, 0.0, 105.0, 5.0),
            BalanceSheet::new(0.0, 10.0, 15.0, 10.0, 10.0, 5.0),
        ],
        omega,
    )
    .unwrap()
}

/// Fire-sale onset for bank 1 of [`spillover_fixture`], by hand.
pub fn spillover_threshold() -> f64 {
    -(0.95f64).ln() / 10.0
}

/// Bisection for the smallest parameter at which `fails` turns true, given
/// `fails(lo) == false` and `fails(hi) == true`.
pub fn bisect(mut lo: f64, mut hi: f64, tol: f64, fails: impl Fn(f64) -> bool) -> f64 {
    assert!(!fails(lo) && fails(hi), "bisection bracket does not straddle the threshold");
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if fails(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    0.5 * (lo + hi)
}

/// A random mixed-trigger system: a valid nominal system (all stocks
/// nonnegative) hit by fixed-asset losses and deposit withdrawals, so both
/// negative equity and overdrafts occur.
pub fn random_triggered_system(rng: &mut ChaCha8Rng, max_banks: usize) -> FinancialSystem {
    let n = rng.random_range(2..=max_banks);
    let mut t = Vec::new();
    for i in 0..n {
        for j in 0..n {
            if i != j && rng.random::<f64>() < 0.3 {
                t.push((i, j, rng.random_range(0.5..10.0)));
            }
        }
    }
    let omega = ExposureMatrix::from_triplets(n, t).unwrap();
    let z = omega.col_sums();
    let x = omega.row_sums();
    let sheets = (0..n)
        .map(|i| {
            let mut a = if rng.random::<f64>() < 0.1 { 0.0 } else { rng.random_range(0.0..15.0) };
            let mut c = rng.random_range(0.0..5.0);
            let mut d = if rng.random::<f64>() < 0.1 { 0.0 } else { rng.random_range(0.0..12.0) };
            let short = x[i] + d - z[i] - a - c;
            if short > 0.0 {
                a += short + rng.random_range(0.0..2.0);
            }
            let mut e = z[i] + a + c - x[i] - d;
            if rng.random::<f64>() < 0.5 {
                let loss = a * rng.random_range(0.0..0.6);
                a -= loss;
                e -= loss;
            }
            if rng.random::<f64>() < 0.5 {
                let run = d * rng.random_range(0.0..0.6);
                d -= run;
                c -= run;
            }
            BalanceSheet::new(z[i], a, c, x[i], d, e)
        })
        .collect();
    FinancialSystem::new(sheets, omega).unwrap()
}
