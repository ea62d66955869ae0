//! Registry of built-in scenarios.

pub mod common;
pub mod hybrid;
pub mod lbm;
pub mod transfer;

use crate::config::ScenarioConfig;
use crate::error::{Result, ScenarioError};
use crate::report::RunReport;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ScenarioInfo {
    pub name: &'static str,
    pub uses_lbm: bool,
    pub coupled: bool,
}

const REGISTRY: &[ScenarioInfo] = &[
    ScenarioInfo { name: "lbm-dirichlet-neumann", uses_lbm: true, coupled: false },
    ScenarioInfo { name: "lbm-box-h-theorem", uses_lbm: true, coupled: false },
    ScenarioInfo { name: "lbm-bc-comparison", uses_lbm: true, coupled: false },
    ScenarioInfo { name: "transfer-study", uses_lbm: false, coupled: false },
    ScenarioInfo { name: "gauss-1d", uses_lbm: true, coupled: true },
    ScenarioInfo { name: "gauss-1d-table1", uses_lbm: true, coupled: true },
    ScenarioInfo { name: "gauss-1d-table2", uses_lbm: true, coupled: true },
    ScenarioInfo { name: "gauss-1d-table3", uses_lbm: true, coupled: true },
    ScenarioInfo { name: "gauss-1d-table4", uses_lbm: true, coupled: true },
    ScenarioInfo { name: "gauss-1d-table5", uses_lbm: true, coupled: true },
    ScenarioInfo { name: "gauss-1d-table6", uses_lbm: true, coupled: true },
    ScenarioInfo { name: "bimolecular-1d", uses_lbm: true, coupled: true },
    ScenarioInfo { name: "homogeneous-2d-pe20", uses_lbm: true, coupled: true },
    ScenarioInfo { name: "homogeneous-2d-pe200", uses_lbm: true, coupled: true },
    ScenarioInfo { name: "calcite-2d", uses_lbm: true, coupled: true },
];

pub fn names() -> impl Iterator<Item = &'static str> {
    REGISTRY.iter().map(|i| i.name)
}

pub fn info(name: &str) -> Option<ScenarioInfo> {
    REGISTRY.iter().copied().find(|i| i.name == name)
}

/// Default configuration of a registered scenario.
pub fn builtin_config(name: &str) -> Option<ScenarioConfig> {
    let c = match name {
        "lbm-dirichlet-neumann" => lbm::dirichlet_neumann_config(),
        "lbm-box-h-theorem" => lbm::box_h_theorem_config(),
        "lbm-bc-comparison" => lbm::bc_comparison_config(),
        "transfer-study" => transfer::config(),
        "gauss-1d" => hybrid::gauss_config(),
        "bimolecular-1d" => hybrid::bimolecular_config(),
        "homogeneous-2d-pe20" => hybrid::pe20_config(),
        "homogeneous-2d-pe200" => hybrid::pe200_config(),
        "calcite-2d" => hybrid::calcite_config(),
        other => {
            let k: usize = other.strip_prefix("gauss-1d-table")?.parse().ok()?;
            if !(1..=6).contains(&k) {
                return None;
            }
            hybrid::gauss_table_config(k)
        }
    };
    Some(c)
}

/// Dispatches a validated config to its runner.
pub fn run_scenario(cfg: &ScenarioConfig) -> Result<RunReport> {
    let name = cfg.scenario.name.as_str();
    match name {
        "lbm-dirichlet-neumann" => lbm::run_dirichlet_neumann(cfg),
        "lbm-box-h-theorem" => lbm::run_box_h_theorem(cfg),
        "lbm-bc-comparison" => lbm::run_bc_comparison(cfg),
        "transfer-study" => transfer::run(cfg),
        "bimolecular-1d" => hybrid::run_bimolecular(cfg),
        "calcite-2d" => hybrid::run_calcite(cfg),
        _ if info(name).is_some() => hybrid::run_scalar(cfg),
        _ => Err(ScenarioError::UnknownScenario(name.into())),
    }
}
