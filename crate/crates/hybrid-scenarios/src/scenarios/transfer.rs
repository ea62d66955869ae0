//! Interpolation errors between a P1 mesh and a lattice on the unit square.

use std::collections::BTreeMap;

use hybrid_core::fem::{ElementLocator, Mesh};
use hybrid_core::lbm::LbmGrid;
use hybrid_core::transfer::{build_transfer_map, fem_to_lbm, lbm_to_fem};

use super::common::{cells, runtime};
use crate::config::{InitialSpec, ScenarioConfig, ScenarioSection, StudySpec};
use crate::error::Result;
use crate::exact::transfer_probe;
use crate::report::RunReport;

pub fn run(cfg: &ScenarioConfig) -> Result<RunReport> {
    let d = &cfg.discretization;
    let (lo, hi) = ([cfg.domain.lo[0], cfg.domain.lo[1]], [cfg.domain.hi[0], cfg.domain.hi[1]]);
    let go = || -> hybrid_core::Result<(f64, f64)> {
        let mesh = Mesh::rectangle(lo, hi, [cells(hi[0] - lo[0], d.h_c), cells(hi[1] - lo[1], d.h_c)])?;
        let loc = ElementLocator::new(&mesh);
        let grid = LbmGrid::covering(&lo, &hi, d.h_f)?;
        let fem_nodes: Vec<usize> = (0..mesh.node_count()).collect();
        let lbm_nodes: Vec<usize> = (0..grid.node_count()).collect();
        let map = build_transfer_map(&mesh, &loc, &grid, &fem_nodes, &lbm_nodes)?;
        let g_fem: Vec<f64> = mesh.nodes.iter().map(|p| transfer_probe(*p)).collect();
        let g_lbm: Vec<f64> = (0..grid.node_count()).map(|n| transfer_probe(grid.coords(n))).collect();
        let at_lbm = fem_to_lbm(&map, &g_fem);
        let e_c2f = map.fem_to_lbm.iter().zip(&at_lbm).map(|(e, v)| (v - g_lbm[e.lbm_node]).abs()).fold(0.0, f64::max);
        let at_fem = lbm_to_fem(&map, &g_lbm);
        let e_f2c = map.lbm_to_fem.iter().zip(&at_fem).map(|(e, v)| (v - g_fem[e.fem_node]).abs()).fold(0.0, f64::max);
        Ok((e_c2f, e_f2c))
    };
    let (a, b) = go().map_err(runtime(cfg))?;
    let mut r = RunReport::new(&cfg.scenario.name);
    r.errors.insert("E_fem2lbm".into(), a);
    r.errors.insert("E_lbm2fem".into(), b);
    Ok(r)
}

pub fn config() -> ScenarioConfig {
    let level = |hc: f64, hf: f64| {
        BTreeMap::from([
            ("discretization.h_c".to_string(), toml::Value::Float(hc)),
            ("discretization.h_f".to_string(), toml::Value::Float(hf)),
        ])
    };
    let mut c = ScenarioConfig {
        scenario: ScenarioSection {
            name: "transfer-study".into(),
            description: "transfer of sin(2 pi x) sin(2 pi y) between a P1 mesh and a lattice".into(),
        },
        domain: Default::default(),
        discretization: Default::default(),
        physics: Default::default(),
        initial: Default::default(),
        chemistry: Default::default(),
        output: Default::default(),
        study: Vec::new(),
    };
    c.discretization.h_c = 4e-2;
    c.discretization.h_f = 1e-2;
    c.initial.species = vec![InitialSpec::default()];
    c.output.t_end = 1.0;
    c.study = vec![
        StudySpec {
            name: "fem2lbm".into(),
            metric: "E_fem2lbm".into(),
            abscissa: "discretization.h_c".into(),
            levels: [0.1, 0.04, 0.02].iter().map(|&h| level(h, 1e-2)).collect(),
        },
        StudySpec {
            name: "lbm2fem".into(),
            metric: "E_lbm2fem".into(),
            abscissa: "discretization.h_f".into(),
            levels: [0.02, 0.01, 0.005].iter().map(|&h| level(0.04, h)).collect(),
        },
    ];
    c
}
