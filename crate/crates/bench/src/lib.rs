//! Benchmark fixtures: seeded post-trigger systems of a given size.

use cascade_core::scenario::{
    AmountDistribution, BalanceSheetSpec, GridCell, NetworkSpec, ScenarioSpec, Targets, Topology, TriggerSpec,
};
use cascade_core::{FinancialSystem, ImpactParams, Model, ModelConfig};

/// A stressed Erdős–Rényi scenario with an expected out-degree of about 5.
pub fn scenario(n_banks: usize) -> ScenarioSpec {
    ScenarioSpec {
        network: NetworkSpec {
            n_banks,
            topology: Topology::ErdosRenyi {
                p_edge: (5.0 / n_banks as f64).min(1.0),
            },
            exposure_scale: AmountDistribution {
                mean: 4.0,
                dispersion: 0.7,
            },
            seed: 0,
        },
        balance_sheets: BalanceSheetSpec::default(),
        trigger: TriggerSpec {
            asset_loss: 0.4,
            withdrawal: 0.4,
            targets: Targets::Random {
                count: (n_banks / 10).max(1),
            },
        },
    }
}

/// The post-trigger system of [`scenario`] for `seed`.
pub fn stressed_system(n_banks: usize, seed: u64) -> FinancialSystem {
    scenario(n_banks).realize(seed).expect("benchmark scenario is feasible").1
}

/// A two-cell grid comparing the joint cascade with and without fire sales.
pub fn grid(n_banks: usize) -> Vec<GridCell> {
    vec![
        GridCell {
            label: "sl".into(),
            scenario: scenario(n_banks),
            model: Model::Sl,
            config: ModelConfig::default(),
            impact: None,
        },
        GridCell {
            label: "esl".into(),
            scenario: scenario(n_banks),
            model: Model::Esl,
            config: ModelConfig::default(),
            impact: Some(ImpactParams::fire_sale(1e-4)),
        },
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fixtures_are_valid_and_stressed() {
        let sys = stressed_system(100, 1);
        assert!(cascade_core::validate_system(&sys, cascade_core::DEFAULT_TOL).unwrap().is_valid());
        assert!(sys.balance_sheets.iter().any(|s| s.c < 0.0 || s.e < 0.0));
    }
}
