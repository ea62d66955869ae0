//! Coupled lattice / finite element scenarios.

use std::collections::BTreeMap;

use hybrid_core::chemistry::{bimolecular_recover, calcite_recover, BimolecularSystem, CalciteSystem};
use hybrid_core::coupling::HybridSystem;

use super::common::{build_hybrid, fine_velocity, fluid_points, hybrid_snapshot, initial_fn, partitioned_integral, runtime};
use crate::config::{InitialSpec, ScenarioConfig, ScenarioSection, StudySpec, SubdomainKind};
use crate::error::{Result, ScenarioError};
use crate::exact::exact_gaussian_hill;
use crate::report::{FieldSnapshot, RunReport, Sample};

/// Advances every system to `output.t_end`, calling `observe` after each
/// step (and once before the first).
fn march(
    cfg: &ScenarioConfig,
    systems: &mut [HybridSystem],
    mut observe: impl FnMut(u64, &[HybridSystem]) -> Result<()>,
) -> Result<()> {
    let steps = cfg.steps(cfg.discretization.dt_c);
    observe(0, systems)?;
    for n in 1..=steps {
        for s in systems.iter_mut() {
            s.advance().map_err(runtime(cfg))?;
        }
        observe(n, systems)?;
        if steps >= 10 && n % (steps / 10) == 0 {
            log::info!("{}: step {n}/{steps}", cfg.scenario.name);
        }
    }
    Ok(())
}

fn is_sample(cfg: &ScenarioConfig, n: u64) -> Option<f64> {
    cfg.sample_steps(cfg.discretization.dt_c).iter().position(|&s| s == n).map(|k| cfg.output.sample_times[k])
}

fn lattice_counters(report: &mut RunReport, systems: &[HybridSystem]) {
    let mut excess = 0;
    let mut zero_mass = 0;
    for s in systems {
        for f in &s.fine {
            excess += f.field.stats.boundary.dirichlet_excess_events;
            zero_mass += f.field.stats.boundary.neumann_zero_mass_events;
        }
    }
    report.counters.insert("dirichlet_excess_events".into(), excess);
    report.counters.insert("neumann_zero_mass_events".into(), zero_mass);
    report.counters.insert("coarse_steps".into(), systems.first().map(|s| s.steps).unwrap_or(0));
}

/// Single transported scalar: Gaussian hill and homogeneous-medium runs.
pub fn run_scalar(cfg: &ScenarioConfig) -> Result<RunReport> {
    let dim = cfg.dim();
    let u0 = initial_fn(&cfg.initial.species[0], dim);
    let vel = fine_velocity(cfg)?;
    let sys = build_hybrid(cfg, &u0, None, vel.as_deref()).map_err(runtime(cfg))?;
    let mut report = RunReport::new(&cfg.scenario.name);
    let mut systems = vec![sys];
    let mut worst = 0.0f64;
    march(cfg, &mut systems, |n, s| {
        let sys = &s[0];
        if n > 0 {
            let inc = sys.overlap_incompatibility();
            worst = worst.max(inc);
            report.push_trace("incompatibility", sys.time(), inc);
        }
        if let Some(t) = is_sample(cfg, n) {
            report.samples.push(Sample { time: t, fields: hybrid_snapshot(sys, "u") });
        }
        Ok(())
    })?;
    let sys = &systems[0];
    report.metrics.insert("max_incompatibility".into(), worst);
    report.metrics.insert("time".into(), sys.time());
    let all: Vec<f64> = sys.coarse.iter().flat_map(|c| c.state.d.clone()).chain(sys.fine.iter().flat_map(|f| f.field.concentration())).collect();
    report.metrics.insert("min_u".into(), all.iter().copied().fold(f64::INFINITY, f64::min));
    report.metrics.insert("max_u".into(), all.iter().copied().fold(f64::NEG_INFINITY, f64::max));
    if let Some(g) = gaussian_reference(cfg) {
        let g = &g;
        let t = sys.time();
        let e_c = sys.coarse.iter().flat_map(|c| c.mesh.nodes.iter().zip(&c.state.d).map(|(x, u)| (u - g(x[0], t)).abs())).fold(0.0, f64::max);
        let e_f = sys
            .fine
            .iter()
            .flat_map(|f| {
                let u = f.field.concentration();
                (0..f.field.grid.node_count()).map(move |n| (u[n] - g(f.field.grid.coords(n)[0], t)).abs()).collect::<Vec<_>>()
            })
            .fold(0.0, f64::max);
        report.errors.insert("E_c".into(), e_c);
        report.errors.insert("E_f".into(), e_f);
    }
    lattice_counters(&mut report, &systems);
    Ok(report)
}

/// Free-space reference when the single species is a 1D Gaussian.
fn gaussian_reference(cfg: &ScenarioConfig) -> Option<impl Fn(f64, f64) -> f64> {
    let s = &cfg.initial.species[0];
    if cfg.dim() != 1 || s.kind != "gaussian" {
        return None;
    }
    let (phi, sigma, x0) = (s.amplitude, s.sigma, s.center[0]);
    let (v, d) = (cfg.physics.velocity[0], cfg.physics.diffusivity);
    Some(move |x: f64, t: f64| exact_gaussian_hill(x, t, phi, sigma, x0, v, d))
}

/// Nodal invariant values of every subdomain: coarse first, then fine.
fn nodal(sys: &HybridSystem) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
    (sys.coarse.iter().map(|c| c.state.d.clone()).collect(), sys.fine.iter().map(|f| f.field.concentration()).collect())
}

type Recover<'a> = dyn Fn(f64, f64) -> hybrid_core::Result<(f64, f64, f64)> + 'a;

/// Two invariants transported by identical systems, species recovered per node.
fn run_reactive(
    cfg: &ScenarioConfig,
    invariants: &dyn Fn(f64, f64, f64) -> (f64, f64),
    recover: &Recover<'_>,
    species: [&str; 3],
    inlet: [Option<f64>; 2],
) -> Result<RunReport> {
    let dim = cfg.dim();
    let u: Vec<_> = cfg.initial.species.iter().map(|s| initial_fn(s, dim)).collect();
    let u = &u;
    let inv0 = |k: usize| move |x: [f64; 2]| {
        let (a, b) = invariants(u[0](x), u[1](x), u[2](x));
        if k == 0 {
            a
        } else {
            b
        }
    };
    let vel = fine_velocity(cfg)?;
    let mut systems = Vec::new();
    for k in 0..2 {
        systems.push(build_hybrid(cfg, &inv0(k), inlet[k], vel.as_deref()).map_err(runtime(cfg))?);
    }
    let inv_names = ["psi1", "psi2"];
    let mut report = RunReport::new(&cfg.scenario.name);
    let mut min_species = f64::INFINITY;
    let mut infeasible = 0u64;
    march(cfg, &mut systems, |n, s| {
        let t = s[0].time();
        let (ca, fa) = nodal(&s[0]);
        let (cb, fb) = nodal(&s[1]);
        let mut sp_c: Vec<[Vec<f64>; 3]> = Vec::new();
        let mut sp_f: Vec<[Vec<f64>; 3]> = Vec::new();
        let fluid: Vec<Vec<bool>> =
            s[0].fine.iter().map(|f| (0..f.field.grid.node_count()).map(|n| f.field.grid.is_fluid(n)).collect()).collect();
        let all_fluid: Vec<Vec<bool>> = ca.iter().map(|v| vec![true; v.len()]).collect();
        for (dst, a, b, mask) in [(&mut sp_c, &ca, &cb, &all_fluid), (&mut sp_f, &fa, &fb, &fluid)] {
            for ((va, vb), m) in a.iter().zip(b.iter()).zip(mask) {
                let mut out = [Vec::with_capacity(va.len()), Vec::with_capacity(va.len()), Vec::with_capacity(va.len())];
                for ((&x, &y), &keep) in va.iter().zip(vb).zip(m) {
                    let (p, q, r) = if !keep {
                        (0.0, 0.0, 0.0)
                    } else {
                        recover(x, y).unwrap_or_else(|_| {
                            infeasible += 1;
                            (f64::NAN, f64::NAN, f64::NAN)
                        })
                    };
                    out[0].push(p);
                    out[1].push(q);
                    out[2].push(r);
                }
                dst.push(out);
            }
        }
        for (k, name) in species.iter().enumerate() {
            let c: Vec<Vec<f64>> = sp_c.iter().map(|s| s[k].clone()).collect();
            let f: Vec<Vec<f64>> = sp_f.iter().map(|s| finite_or_zero(&s[k])).collect();
            report.push_trace(&format!("total_{name}"), t, partitioned_integral(&s[0], &c, &f));
        }
        report.push_trace(&format!("total_{}", inv_names[0]), t, partitioned_integral(&s[0], &ca, &fa));
        report.push_trace(&format!("total_{}", inv_names[1]), t, partitioned_integral(&s[1], &cb, &fb));
        for sp in sp_c.iter().chain(&sp_f) {
            for v in sp.iter().flatten() {
                if v.is_finite() {
                    min_species = min_species.min(*v);
                }
            }
        }
        if let Some(ts) = is_sample(cfg, n) {
            let mut fields = Vec::new();
            for (k, c) in s[0].coarse.iter().enumerate() {
                let mut cols = vec![(inv_names[0].to_string(), ca[k].clone()), (inv_names[1].to_string(), cb[k].clone())];
                cols.extend(species.iter().zip(sp_c[k].iter()).map(|(n, v)| (n.to_string(), v.clone())));
                fields.push(FieldSnapshot { subdomain: c.id.clone(), points: c.mesh.nodes.clone(), columns: cols });
            }
            for (k, f) in s[0].fine.iter().enumerate() {
                let (nodes, points) = fluid_points(&f.field.grid);
                let pick = |v: &Vec<f64>| nodes.iter().map(|&i| v[i]).collect::<Vec<f64>>();
                let mut cols = vec![(inv_names[0].to_string(), pick(&fa[k])), (inv_names[1].to_string(), pick(&fb[k]))];
                cols.extend(species.iter().zip(sp_f[k].iter()).map(|(n, v)| (n.to_string(), pick(v))));
                fields.push(FieldSnapshot { subdomain: f.id.clone(), points, columns: cols });
            }
            report.samples.push(Sample { time: ts, fields });
        }
        Ok(())
    })?;
    report.metrics.insert("min_species".into(), min_species);
    report.metrics.insert("max_incompatibility_psi1".into(), systems[0].overlap_incompatibility());
    report.metrics.insert("max_incompatibility_psi2".into(), systems[1].overlap_incompatibility());
    for (name, pts) in report.traces.clone() {
        if let (Some(first), Some(last)) = (pts.first(), pts.last()) {
            report.metrics.insert(format!("{name}_initial"), first.1);
            report.metrics.insert(format!("{name}_final"), last.1);
            if first.1 != 0.0 {
                report.metrics.insert(format!("{name}_drift"), (last.1 - first.1).abs() / first.1.abs());
            }
        }
    }
    report.counters.insert("infeasible_recoveries".into(), infeasible);
    lattice_counters(&mut report, &systems);
    Ok(report)
}

fn finite_or_zero(v: &[f64]) -> Vec<f64> {
    v.iter().map(|x| if x.is_finite() { *x } else { 0.0 }).collect()
}

/// Invariants `alpha`, `beta` reported as `psi1`, `psi2`.
pub fn run_bimolecular(cfg: &ScenarioConfig) -> Result<RunReport> {
    let [a, b, c] = cfg.chemistry.stoichiometry;
    let sys = BimolecularSystem::new(a, b, c).map_err(runtime(cfg))?;
    run_reactive(cfg, &|x, y, z| sys.invariants(x, y, z), &|p, q| bimolecular_recover(&sys, p, q), ["A", "B", "C"], [None, None])
}

pub fn run_calcite(cfg: &ScenarioConfig) -> Result<RunReport> {
    let sys = CalciteSystem::new(cfg.chemistry.k_sp).map_err(runtime(cfg))?;
    let inlet = [cfg.chemistry.inlet.first().copied(), cfg.chemistry.inlet.get(1).copied()];
    if inlet.iter().any(Option::is_none) {
        return Err(ScenarioError::Invalid(vec!["chemistry.inlet must give two values".into()]));
    }
    run_reactive(cfg, &|x, y, z| sys.invariants(x, y, z), &|p, q| calcite_recover(&sys, p, q), ["u1", "u2", "u3"], inlet)
}

fn base(name: &str, description: &str) -> ScenarioConfig {
    ScenarioConfig {
        scenario: ScenarioSection { name: name.into(), description: description.into() },
        domain: Default::default(),
        discretization: Default::default(),
        physics: Default::default(),
        initial: Default::default(),
        chemistry: Default::default(),
        output: Default::default(),
        study: Vec::new(),
    }
}

const GAUSS_D: f64 = 1e-2;

/// Overrides for one table row.
#[allow(clippy::too_many_arguments)]
fn row(h_c: f64, dt_c: f64, h_f: f64, dt_f: f64, eta: usize, overlap: f64, max_iter: usize) -> BTreeMap<String, toml::Value> {
    BTreeMap::from([
        ("discretization.h_c".into(), toml::Value::Float(h_c)),
        ("discretization.dt_c".into(), toml::Value::Float(dt_c)),
        ("discretization.h_f".into(), toml::Value::Float(h_f)),
        ("discretization.dt_f".into(), toml::Value::Float(dt_f)),
        ("discretization.eta".into(), toml::Value::Integer(eta as i64)),
        ("discretization.overlap".into(), toml::Value::Float(overlap)),
        ("discretization.max_iter".into(), toml::Value::Integer(max_iter as i64)),
    ])
}

/// Row with `dt = h^2 / (2 D)` in both subdomains and `h_f = h_c / 2`.
fn diffusive_row(h_c: f64, overlap: f64) -> BTreeMap<String, toml::Value> {
    let h_f = h_c / 2.0;
    let dt_c = h_c * h_c / (2.0 * GAUSS_D);
    row(h_c, dt_c, h_f, dt_c / 4.0, 4, overlap, 10)
}

/// Refinement schedules of the Gaussian hill tables, keyed `table1`..`table6`.
pub fn gauss_tables() -> Vec<StudySpec> {
    let study = |name: &str, metric: &str, abscissa: &str, levels: Vec<BTreeMap<String, toml::Value>>| StudySpec {
        name: name.into(),
        metric: metric.into(),
        abscissa: abscissa.into(),
        levels,
    };
    let hf1 = [(5e-3, 1.25e-3, 4), (2.5e-3, 3.125e-4, 16), (1.25e-3, 7.8125e-5, 64), (6.25e-4, 1.953125e-5, 256)];
    let hc2 = [(1e-2, 5e-3, 64), (5e-3, 1.25e-3, 16), (2.5e-3, 3.125e-4, 4), (1.25e-3, 7.8125e-5, 1)];
    vec![
        study("table1", "E_f", "discretization.h_f", hf1.iter().map(|&(h, dt, eta)| row(1e-2, 5e-3, h, dt, eta, 0.1, 4)).collect()),
        study("table2", "E_c", "discretization.h_c", hc2.iter().map(|&(h, dt, eta)| row(h, dt, 1.25e-3, 7.8125e-5, eta, 0.1, 4)).collect()),
        study(
            "table3",
            "E_c",
            "discretization.overlap",
            [0.02, 0.04, 0.08, 0.1].iter().map(|&l| row(1e-2, 5e-3, 1.25e-3, 7.8125e-5, 64, l, 4)).collect(),
        ),
        study("table4", "E_c", "discretization.h_c", (0..6).map(|k| diffusive_row(1e-2 / 2f64.powi(k), 0.04)).collect()),
        study("table5", "E_c", "discretization.h_c", (0..4).map(|k| diffusive_row(5e-3 / 2f64.powi(k), 0.01)).collect()),
        study("table6", "E_c", "discretization.h_c", (0..5).map(|k| diffusive_row(1e-2 / 2f64.powi(k), 0.1)).collect()),
    ]
}

/// Gaussian hill with every table schedule attached; the base is the
/// first row of the first table.
pub fn gauss_config() -> ScenarioConfig {
    let mut c = base("gauss-1d", "advected Gaussian hill, Galerkin P1 on the left, D1Q2 on the right");
    c.domain.lo = vec![0.0, 0.0];
    c.domain.hi = vec![1.0, 0.0];
    c.domain.splits = vec![0.5];
    c.domain.first = SubdomainKind::Coarse;
    let d = &mut c.discretization;
    d.lattice = "D1Q2".into();
    d.h_c = 1e-2;
    d.dt_c = 5e-3;
    d.h_f = 5e-3;
    d.dt_f = 1.25e-3;
    d.eta = 4;
    d.overlap = 0.1;
    d.max_iter = 4;
    c.physics.diffusivity = GAUSS_D;
    c.physics.velocity = [1.0, 0.0];
    c.initial.species =
        vec![InitialSpec { kind: "gaussian".into(), amplitude: 0.1, sigma: 1e-2, center: vec![0.3], ..Default::default() }];
    c.output.t_end = 0.4;
    c.output.sample_times = vec![0.0, 0.2, 0.4];
    c.study = gauss_tables();
    c
}

/// One table as its own scenario: the base is its first row.
pub fn gauss_table_config(k: usize) -> ScenarioConfig {
    let mut c = gauss_config();
    let spec = gauss_tables().swap_remove(k - 1);
    c = c.with_overrides(&spec.levels[0]).expect("table rows use known keys");
    c.scenario.name = format!("gauss-1d-table{k}");
    c.scenario.description = format!("Gaussian hill, refinement schedule {k}");
    c.study = vec![StudySpec { name: "rows".into(), ..spec }];
    c
}

fn homogeneous(name: &str, v: f64, h_c: f64, dt_c: f64, h_f: f64, dt_f: f64, eta: usize, t_end: f64, samples: Vec<f64>) -> ScenarioConfig {
    let mut c = base(name, "front entering (0,2)x(0,1/4) from x = 0; SUPG P1 on the left, D2Q4 on the right");
    c.domain.lo = vec![0.0, 0.0];
    c.domain.hi = vec![2.0, 0.25];
    c.domain.splits = vec![1.0];
    let d = &mut c.discretization;
    d.lattice = "D2Q4".into();
    d.formulation = "supg".into();
    d.h_c = h_c;
    d.dt_c = dt_c;
    d.h_f = h_f;
    d.dt_f = dt_f;
    d.eta = eta;
    d.overlap = 0.04;
    d.max_iter = 5;
    c.physics.diffusivity = 5e-3;
    c.physics.velocity = [v, 0.0];
    c.physics.boundaries.insert("x-min".into(), "dirichlet:1".into());
    c.initial.species = vec![InitialSpec::default()];
    c.output.t_end = t_end;
    c.output.sample_times = samples;
    c
}

pub fn pe20_config() -> ScenarioConfig {
    let dt = 0.51;
    homogeneous("homogeneous-2d-pe20", 0.05, 7e-2, dt, 1e-2, 1e-2, 51, 60.0 * dt, vec![20.0 * dt, 40.0 * dt, 60.0 * dt])
}

pub fn pe200_config() -> ScenarioConfig {
    homogeneous("homogeneous-2d-pe200", 0.5, 2.5e-2, 0.1, 2e-3, 4e-4, 250, 4.0, vec![1.0, 2.0, 3.0, 4.0])
}

pub fn bimolecular_config() -> ScenarioConfig {
    let mut c = base("bimolecular-1d", "fast reaction A + 2B -> C across two coarse and one fine subdomain");
    c.domain.lo = vec![0.0, 0.0];
    c.domain.hi = vec![1.0, 0.0];
    c.domain.splits = vec![0.395, 0.605];
    let d = &mut c.discretization;
    d.lattice = "D1Q2".into();
    d.h_c = 1e-2;
    d.dt_c = 5e-3;
    d.h_f = 1e-3;
    d.dt_f = 5e-5;
    d.eta = 100;
    d.overlap = 0.01;
    d.max_iter = 10;
    c.physics.diffusivity = 1e-2;
    let g = |name: &str, phi: f64, x0: f64| InitialSpec {
        name: name.into(),
        kind: "gaussian".into(),
        amplitude: phi,
        sigma: 0.1,
        center: vec![x0],
        ..Default::default()
    };
    c.initial.species = vec![g("A", 0.1, 0.3), g("B", 0.05, 0.7), InitialSpec { name: "C".into(), ..Default::default() }];
    c.chemistry.kind = "bimolecular".into();
    c.chemistry.stoichiometry = [1, 2, 1];
    c.output.t_end = 0.5;
    c.output.sample_times = vec![0.0, 0.1, 0.25, 0.5];
    c
}

pub fn calcite_config() -> ScenarioConfig {
    let mut c = base("calcite-2d", "calcite equilibrium transported through a porous block and an open channel");
    c.domain.lo = vec![0.0, 0.0];
    c.domain.hi = vec![2.0, 1.0];
    c.domain.periodic = vec![false, true];
    c.domain.splits = vec![1.0];
    c.domain.first = SubdomainKind::Fine;
    c.domain.obstacles = vec![[0.3, 0.25, 0.1], [0.3, 0.75, 0.1], [0.7, 0.5, 0.1]];
    let d = &mut c.discretization;
    d.lattice = "D2Q9".into();
    d.formulation = "supg".into();
    d.h_c = 5e-2;
    d.dt_c = 0.1;
    d.h_f = 1e-2;
    d.dt_f = 1e-3;
    d.eta = 100;
    d.overlap = 0.1;
    d.max_iter = 3;
    c.physics.diffusivity = 0.1;
    c.physics.velocity = [1.0, 0.0];
    c.physics.boundaries.insert("x-min".into(), "dirichlet:0".into());
    let k = hybrid_core::chemistry::CALCITE_KSP;
    let uni = |name: &str, v: f64| InitialSpec { name: name.into(), kind: "uniform".into(), value: v, ..Default::default() };
    c.initial.species = vec![uni("u1", 1e-6), uni("u2", 1e-3), uni("u3", k * 1e-6 / 1e-3)];
    c.chemistry.kind = "calcite".into();
    c.chemistry.k_sp = k;
    c.chemistry.inlet = vec![1.0, 1.0];
    c.output.t_end = 2.0;
    c.output.sample_times = vec![0.1, 0.5, 1.0, 2.0];
    c
}
