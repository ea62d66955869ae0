//! Single-lattice scenarios on the domain box.

use std::collections::BTreeMap;

use hybrid_core::lattice::builtin_model;
use hybrid_core::lbm::{LbmField, LbmGrid, LbmParams};

use super::common::{box_lattice_patches, fluid_points, initial_fn, lattice_grid, runtime};
use crate::config::{InitialSpec, ScenarioConfig, ScenarioSection, StudySpec};
use crate::error::Result;
use crate::exact::{mixed_mode, MIXED_MODE_DIFFUSIVITY};
use crate::report::{FieldSnapshot, RunReport, Sample};

fn field_for(cfg: &ScenarioConfig) -> hybrid_core::Result<LbmField> {
    let model = builtin_model(cfg.lattice().map_err(hybrid_core::Error::InvalidArgument)?);
    let dim = model.dim;
    let lo = [cfg.domain.lo[0], cfg.domain.lo.get(1).copied().unwrap_or(0.0)];
    let hi = [cfg.domain.hi[0], cfg.domain.hi.get(1).copied().unwrap_or(0.0)];
    let grid: LbmGrid = lattice_grid(dim, lo, hi, cfg.discretization.h_f, &cfg.domain.periodic)?;
    let u0f = initial_fn(&cfg.initial.species[0], dim);
    let u0: Vec<f64> = (0..grid.node_count()).map(|n| u0f(grid.coords(n))).collect();
    let vel = LbmField::uniform_velocity(&grid, cfg.physics.velocity);
    LbmField::from_equilibrium(grid, model, &LbmParams::new(cfg.physics.diffusivity, cfg.discretization.dt_f), vel, &u0)
}

fn snapshot(field: &LbmField, name: &str) -> FieldSnapshot {
    let (nodes, points) = fluid_points(&field.grid);
    let u = field.concentration();
    FieldSnapshot { subdomain: "lattice".into(), points, columns: vec![(name.into(), nodes.iter().map(|&n| u[n]).collect())] }
}

struct Outcome {
    field: LbmField,
    samples: Vec<Sample>,
    h_trace: Vec<f64>,
    min_population: f64,
    min_concentration: f64,
}

fn integrate(cfg: &ScenarioConfig, track_h: bool) -> hybrid_core::Result<Outcome> {
    let mut field = field_for(cfg)?;
    let patches = box_lattice_patches(cfg, &field.grid)?;
    let dt = cfg.discretization.dt_f;
    let steps = cfg.steps(dt);
    let sample_at = cfg.sample_steps(dt);
    let mut samples = Vec::new();
    let mut h_trace = Vec::new();
    let mut min_pop = f64::INFINITY;
    let mut min_u = f64::INFINITY;
    let mut observe = |field: &LbmField, n: u64, samples: &mut Vec<Sample>, h_trace: &mut Vec<f64>| -> hybrid_core::Result<()> {
        if track_h {
            h_trace.push(field.h_function()?);
        }
        min_pop = min_pop.min(field.min_population().0);
        min_u = min_u.min(field.concentration().into_iter().fold(f64::INFINITY, f64::min));
        for (k, &s) in sample_at.iter().enumerate() {
            if s == n {
                samples.push(Sample { time: cfg.output.sample_times[k], fields: vec![snapshot(field, "u")] });
            }
        }
        Ok(())
    };
    observe(&field, 0, &mut samples, &mut h_trace)?;
    for n in 1..=steps {
        field.step(&patches).map_err(|e| e.context(format!("step {n} (t = {:e})", n as f64 * dt)))?;
        observe(&field, n, &mut samples, &mut h_trace)?;
        if steps >= 10 && n % (steps / 10) == 0 {
            log::info!("{}: step {n}/{steps}", cfg.scenario.name);
        }
    }
    Ok(Outcome { field, samples, h_trace, min_population: min_pop, min_concentration: min_u })
}

fn counters(report: &mut RunReport, field: &LbmField) {
    let b = &field.stats.boundary;
    report.counters.insert("steps".into(), field.stats.steps);
    report.counters.insert("closures".into(), b.closures);
    report.counters.insert("dirichlet_excess_events".into(), b.dirichlet_excess_events);
    report.counters.insert("neumann_zero_mass_events".into(), b.neumann_zero_mass_events);
}

pub fn run_dirichlet_neumann(cfg: &ScenarioConfig) -> Result<RunReport> {
    let out = integrate(cfg, false).map_err(runtime(cfg))?;
    let t = out.field.stats.steps as f64 * cfg.discretization.dt_f;
    let u = out.field.concentration();
    let grid = &out.field.grid;
    let amp = cfg.initial.species[0].amplitude;
    let t_end = cfg.output.t_end;
    let err_at = |s: f64| (0..grid.node_count()).map(|n| (u[n] - amp * mixed_mode(grid.coords(n), s)).abs()).fold(0.0, f64::max);
    let mut r = RunReport::new(&cfg.scenario.name);
    r.errors.insert("E".into(), err_at(t_end));
    r.errors.insert("E_at_step_time".into(), err_at(t));
    r.metrics.insert("time".into(), t);
    r.metrics.insert("tau".into(), out.field.tau);
    r.metrics.insert("min_population".into(), out.min_population);
    counters(&mut r, &out.field);
    r.samples = out.samples;
    Ok(r)
}

pub fn run_box_h_theorem(cfg: &ScenarioConfig) -> Result<RunReport> {
    let out = integrate(cfg, true).map_err(runtime(cfg))?;
    let mut r = RunReport::new(&cfg.scenario.name);
    let worst = out.h_trace.windows(2).map(|w| w[1] - w[0]).fold(f64::NEG_INFINITY, f64::max);
    r.metrics.insert("max_h_increase".into(), worst);
    r.metrics.insert("min_population".into(), out.min_population);
    r.metrics.insert("min_concentration".into(), out.min_concentration);
    r.metrics.insert("mass_final".into(), out.field.total_mass());
    counters(&mut r, &out.field);
    r.h_trace = out.h_trace;
    r.samples = out.samples;
    Ok(r)
}

/// Runs the box with each wall closure and reports field differences
/// against the entropy Neumann closure.
pub fn run_bc_comparison(cfg: &ScenarioConfig) -> Result<RunReport> {
    let mut r = RunReport::new(&cfg.scenario.name);
    let mut finals: BTreeMap<&str, Vec<f64>> = BTreeMap::new();
    let mut samples: Vec<Sample> = Vec::new();
    for wall in ["entropy-neumann", "bounce-back", "specular"] {
        let mut c = cfg.clone();
        c.physics.wall = wall.into();
        let out = integrate(&c, false).map_err(runtime(cfg))?;
        finals.insert(wall, out.field.concentration());
        r.metrics.insert(format!("min_population_{wall}"), out.min_population);
        for s in out.samples {
            let f = s.fields.into_iter().map(|mut f| {
                f.columns[0].0 = format!("u_{wall}");
                f
            });
            match samples.iter_mut().find(|x| x.time == s.time) {
                Some(x) => x.fields[0].columns.extend(f.flat_map(|f| f.columns)),
                None => samples.push(Sample { time: s.time, fields: f.collect() }),
            }
        }
    }
    let base = &finals["entropy-neumann"];
    for wall in ["bounce-back", "specular"] {
        let d = finals[wall].iter().zip(base).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        r.metrics.insert(format!("max_diff_{wall}"), d);
    }
    r.samples = samples;
    Ok(r)
}

fn pulse_box(name: &str, description: &str, t_end: f64, samples: Vec<f64>) -> ScenarioConfig {
    let mut c = base(name, description);
    c.discretization.lattice = "D2Q9".into();
    c.discretization.h_f = 1e-2;
    c.discretization.dt_f = 1.0 / 3.0 * 1e-4 / (2.0 * 1e-2);
    c.physics.diffusivity = 1e-2;
    c.initial.species = vec![InitialSpec { kind: "pulse".into(), value: 1.0, lo: vec![0.4, 0.4], hi: vec![0.6, 0.6], ..Default::default() }];
    c.output.t_end = t_end;
    c.output.sample_times = samples;
    c
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

pub fn dirichlet_neumann_config() -> ScenarioConfig {
    let mut c = base("lbm-dirichlet-neumann", "decaying mode with zero flux at x = 0 and zero value elsewhere");
    let d = MIXED_MODE_DIFFUSIVITY;
    let dt = |h: f64| h * h / (6.0 * d);
    c.discretization.lattice = "D2Q9".into();
    c.discretization.h_f = 4e-2;
    c.discretization.dt_f = dt(4e-2);
    c.physics.diffusivity = d;
    for f in ["x-max", "y-min", "y-max"] {
        c.physics.boundaries.insert(f.into(), "dirichlet:0".into());
    }
    c.physics.boundaries.insert("x-min".into(), "zero-flux".into());
    c.initial.species = vec![InitialSpec { kind: "mode".into(), amplitude: 1.0, ..Default::default() }];
    c.output.t_end = 0.25;
    c.output.sample_times = vec![0.0];
    c.study = vec![StudySpec {
        name: "refinement".into(),
        metric: "E".into(),
        abscissa: "discretization.h_f".into(),
        levels: [4e-2, 2e-2, 1e-2, 5e-3]
            .iter()
            .map(|&h| {
                BTreeMap::from([
                    ("discretization.h_f".to_string(), toml::Value::Float(h)),
                    ("discretization.dt_f".to_string(), toml::Value::Float(dt(h))),
                ])
            })
            .collect(),
    }];
    c
}

pub fn box_h_theorem_config() -> ScenarioConfig {
    let dt = 1.0 / 3.0 * 1e-4 / (2.0 * 1e-2);
    pulse_box("lbm-box-h-theorem", "square pulse in a zero-flux box; H trace per step", 1000.0 * dt, vec![0.0, 300.0 * dt, 1000.0 * dt])
}

pub fn bc_comparison_config() -> ScenarioConfig {
    let mut c = pulse_box("lbm-bc-comparison", "square pulse in a box with entropy Neumann, bounce-back and specular walls", 0.5, vec![0.5]);
    c.discretization.dt_f = 5e-3;
    c
}
