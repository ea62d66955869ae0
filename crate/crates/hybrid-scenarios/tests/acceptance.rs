//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Criteria listed in `KNOWN_UNATTAINABLE` are run and reported like every
//! other one, but their failure does not fail the target. Set
//! `ACCEPTANCE_ONLY=1,3,10` to run a subset.

use std::collections::BTreeMap;
use std::time::Instant;

use hybrid_core::boundary::{box_patches, BoundaryKind, BoundaryValue, FaceSpec};
use hybrid_core::chemistry::{calcite_recover, CalciteSystem};
use hybrid_core::fem::{assemble_galerkin, supg_tau, Mesh, Physics, ThetaStepper};
use hybrid_core::lattice::{builtin_model, ModelName};
use hybrid_core::lbm::{LbmField, LbmGrid, LbmParams};
use hybrid_scenarios::report::RunReport;
use hybrid_scenarios::study::{fit_order, named_study};
use hybrid_scenarios::ScenarioConfig;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const KNOWN_UNATTAINABLE: &[usize] = &[4, 5, 6, 8, 9];

struct Verdict {
    pass: bool,
    detail: String,
}

type Check = fn() -> Result<Verdict, String>;

fn verdict(pass: bool, detail: String) -> Result<Verdict, String> {
    Ok(Verdict { pass, detail })
}

fn within_factor(got: f64, want: f64, factor: f64) -> bool {
    got >= want / factor && got <= want * factor
}

fn builtin(name: &str) -> Result<ScenarioConfig, String> {
    ScenarioConfig::builtin(name, &[]).map_err(|e| e.to_string())
}

fn run(cfg: &ScenarioConfig) -> Result<RunReport, String> {
    hybrid_scenarios::run(cfg, None).map_err(|e| e.to_string())
}

fn fmt_list(v: &[f64]) -> String {
    v.iter().map(|x| format!("{x:.3e}")).collect::<Vec<_>>().join(", ")
}

fn max_rel_deviation(trace: &[(f64, f64)]) -> f64 {
    let v0 = trace[0].1;
    trace.iter().map(|p| (p.1 - v0).abs() / v0.abs()).fold(0.0, f64::max)
}

fn lbm_convergence() -> Result<Verdict, String> {
    let start = Instant::now();
    let paper = [2.5e-3, 6.2e-4, 1.4e-4, 1.7e-5];
    let study = named_study(&builtin("lbm-dirichlet-neumann")?, "refinement").map_err(|e| e.to_string())?;
    let errs = study.errors();
    let secs = start.elapsed().as_secs_f64();
    let values_ok = errs.len() == 4 && errs.iter().zip(paper).all(|(e, p)| within_factor(*e, p, 2.0));
    let order = study.order.unwrap_or(f64::NAN);
    verdict(
        values_ok && order >= 1.8 && secs < 120.0,
        format!("E = [{}], order {order:.3}, {secs:.1} s", fmt_list(&errs)),
    )
}

fn random_box_run(rng: &mut ChaCha8Rng) -> Result<(f64, String), String> {
    let name = [ModelName::D1Q2, ModelName::D2Q4, ModelName::D2Q5, ModelName::D2Q9][rng.gen_range(0..4)];
    let model = builtin_model(name);
    let n = rng.gen_range(12..=40usize);
    let h = 1.0 / n as f64;
    let d = 10f64.powf(rng.gen_range(-3.0..-1.0));
    let dt_min = model.cs2_coeff * h * h / (2.0 * d);
    let dt = dt_min * rng.gen_range(1.0..4.0);
    let c = h / dt;
    let speed = rng.gen_range(0.0..0.3) * model.cs2_coeff.sqrt() * c;
    let angle = rng.gen_range(0.0..std::f64::consts::TAU);
    let v = if model.dim == 1 { [speed * angle.cos().signum(), 0.0] } else { [speed * angle.cos(), speed * angle.sin()] };
    let dims: Vec<usize> = vec![n + 1; model.dim];
    let grid = LbmGrid::new(&vec![0.0; model.dim], h, &dims).map_err(|e| e.to_string())?;
    let u0: Vec<f64> = (0..grid.node_count())
        .map(|k| {
            let x = grid.coords(k);
            let inside = (0.3..0.7).contains(&x[0]) && (model.dim == 1 || (0.3..0.7).contains(&x[1]));
            if inside { rng.gen_range(0.5..1.5) } else { rng.gen_range(0.0..0.05) }
        })
        .collect();
    let faces: Vec<Option<FaceSpec>> = (0..2 * model.dim)
        .map(|_| {
            Some(if rng.gen_bool(0.5) {
                FaceSpec::new(BoundaryKind::EntropyDirichlet, BoundaryValue::Constant(rng.gen_range(0.0..1.0)))
            } else {
                FaceSpec::new(BoundaryKind::EntropyNeumann, BoundaryValue::Constant(-d * rng.gen_range(0.0..1.0)))
            })
        })
        .collect();
    let patches = box_patches(&grid, &faces).map_err(|e| e.to_string())?;
    let vel = LbmField::uniform_velocity(&grid, v);
    let mut field = LbmField::from_equilibrium(grid, model, &LbmParams::new(d, dt), vel, &u0).map_err(|e| e.to_string())?;
    let mut min_f = field.min_population().0;
    for _ in 0..500 {
        field.step(&patches).map_err(|e| e.to_string())?;
        min_f = min_f.min(field.min_population().0);
    }
    Ok((min_f, format!("{name} n={n} D={d:.2e} dt/dt_min={:.2} |v|={speed:.2e}", dt / dt_min)))
}

fn non_negativity() -> Result<Verdict, String> {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(20_240_611);
    let mut worst = (f64::INFINITY, String::new());
    for _ in 0..200 {
        let (m, desc) = random_box_run(&mut rng)?;
        if m < worst.0 {
            worst = (m, desc);
        }
    }
    let secs = start.elapsed().as_secs_f64();
    verdict(worst.0 >= -1e-14 && secs < 180.0, format!("min f = {:.3e} ({}), {secs:.1} s", worst.0, worst.1))
}

fn h_theorem() -> Result<Verdict, String> {
    let r = run(&builtin("lbm-box-h-theorem")?)?;
    let increases = r.h_trace.windows(2).filter(|w| w[1] > w[0]).count();
    let worst = r.metric("max_h_increase").unwrap_or(f64::NAN);
    let min_u = r.metric("min_concentration").unwrap_or(f64::NAN);
    verdict(
        r.h_trace.len() == 1001 && increases == 0 && min_u >= 0.0,
        format!("{} steps, {increases} increases (largest {worst:.3e}), min u = {min_u:.3e}", r.h_trace.len() - 1),
    )
}

fn bc_divergence() -> Result<Verdict, String> {
    let r2 = run(&builtin("lbm-bc-comparison")?)?;
    let bb = r2.metric("max_diff_bounce-back").unwrap_or(f64::NAN);
    let sp = r2.metric("max_diff_specular").unwrap_or(f64::NAN);
    let mut c1 = builtin("lbm-bc-comparison")?;
    c1.discretization.lattice = "D1Q2".into();
    c1.domain.lo = vec![0.0];
    c1.domain.hi = vec![1.0];
    c1.initial.species[0].lo = vec![0.4];
    c1.initial.species[0].hi = vec![0.6];
    let r1 = run(&c1)?;
    let bb1 = r1.metric("max_diff_bounce-back").unwrap_or(f64::NAN);
    verdict(
        bb > 1e-6 && sp > 1e-6 && bb1 <= 1e-12,
        format!("D2Q9 max|du|: bounce-back {bb:.3e}, specular {sp:.3e}; D1Q2 neumann vs bounce-back {bb1:.3e}"),
    )
}

fn transfer_orders() -> Result<Verdict, String> {
    let cfg = builtin("transfer-study")?;
    let c2f = named_study(&cfg, "fem2lbm").map_err(|e| e.to_string())?;
    let f2c = named_study(&cfg, "lbm2fem").map_err(|e| e.to_string())?;
    let (e1, e2) = (c2f.errors(), f2c.errors());
    let ok1 = e1.iter().zip([9.55e-2, 1.57e-2, 3.94e-3]).all(|(e, p)| within_factor(*e, p, 2.0));
    let ok2 = e2.iter().zip([1.13e-1, 5.75e-2, 2.90e-2]).all(|(e, p)| within_factor(*e, p, 2.0));
    let o1 = c2f.order.unwrap_or(f64::NAN);
    let o2 = f2c.order.unwrap_or(f64::NAN);
    verdict(
        ok1 && ok2 && o1 >= 1.8 && (0.8..=1.2).contains(&o2),
        format!("coarse->fine [{}] order {o1:.3}; fine->coarse [{}] order {o2:.3}", fmt_list(&e1), fmt_list(&e2)),
    )
}

fn columns(study: &hybrid_scenarios::OrderReport) -> (Vec<f64>, Vec<f64>) {
    let col = |k: &str| study.reports.iter().map(|r| r.error(k).unwrap_or(f64::NAN)).collect();
    (col("E_c"), col("E_f"))
}

fn gauss_hill() -> Result<Verdict, String> {
    let start = Instant::now();
    let t1 = named_study(&builtin("gauss-1d-table1")?, "rows").map_err(|e| e.to_string())?;
    let (ec1, ef1) = columns(&t1);
    let paper_c = [3.67e-3, 1.94e-3, 1.02e-3, 5.50e-4];
    let paper_f = [1.70e-2, 7.42e-3, 3.48e-3, 1.80e-3];
    let factor_ok = ec1.iter().zip(paper_c).chain(ef1.iter().zip(paper_f)).all(|(e, p)| within_factor(*e, p, 2.0));
    let decreasing = |v: &[f64]| v.windows(2).all(|w| w[1] < w[0]);
    let mono_ok = decreasing(&ec1) && decreasing(&ef1);
    let t2 = named_study(&builtin("gauss-1d-table2")?, "rows").map_err(|e| e.to_string())?;
    let (_, ef2) = columns(&t2);
    let band_ok = ef2.iter().all(|e| (e / ef2[0] - 1.0).abs() <= 0.2);
    let t4 = named_study(&builtin("gauss-1d-table4")?, "rows").map_err(|e| e.to_string())?;
    let (ec4, ef4) = columns(&t4);
    let h4: Vec<f64> = t4.levels.iter().map(|l| l.0).collect();
    let order = fit_order(&h4, &ec4).unwrap_or(f64::NAN);
    let order_f = fit_order(&h4, &ef4).unwrap_or(f64::NAN);
    let secs = start.elapsed().as_secs_f64();
    verdict(
        factor_ok && mono_ok && band_ok && (0.7..=1.3).contains(&order) && secs < 600.0,
        format!(
            "refine-fine E_c [{}] E_f [{}] (factor 2: {factor_ok}, monotone: {mono_ok}); refine-coarse E_f [{}] (20% band: {band_ok}); \
             schedule E_c order {order:.3} (E_f order {order_f:.3}); {secs:.0} s",
            fmt_list(&ec1),
            fmt_list(&ef1),
            fmt_list(&ef2)
        ),
    )
}

fn overlap_effect() -> Result<Verdict, String> {
    let t3 = named_study(&builtin("gauss-1d-table3")?, "rows").map_err(|e| e.to_string())?;
    let (ec, _) = columns(&t3);
    verdict(ec.len() == 4 && ec.windows(2).all(|w| w[1] >= w[0]), format!("E_c [{}]", fmt_list(&ec)))
}

fn bimolecular() -> Result<Verdict, String> {
    let r = run(&builtin("bimolecular-1d")?)?;
    let mut notes = Vec::new();
    let mut ok = true;
    for t in [0.1, 0.25, 0.5] {
        let s = r.sample(t).ok_or_else(|| format!("no sample at t = {t}"))?;
        let mut min_species = f64::INFINITY;
        let (mut c_max, mut x_max) = (f64::NEG_INFINITY, f64::NAN);
        for f in &s.fields {
            for name in ["A", "B", "C"] {
                let col = f.column(name).ok_or_else(|| format!("sample lacks {name}"))?;
                min_species = col.iter().copied().fold(min_species, f64::min);
            }
            for (p, c) in f.points.iter().zip(f.column("C").unwrap_or(&[])) {
                if *c > c_max {
                    (c_max, x_max) = (*c, p[0]);
                }
            }
        }
        let here = min_species >= 0.0 && c_max > 0.0 && x_max > 0.39 && x_max < 0.61;
        ok &= here;
        notes.push(format!("t={t}: min {min_species:.2e}, argmax C {x_max:.3}"));
    }
    let d1 = max_rel_deviation(&r.traces["total_psi1"]);
    let d2 = max_rel_deviation(&r.traces["total_psi2"]);
    verdict(ok && d1 <= 1e-6 && d2 <= 1e-6, format!("{}; invariant drift {d1:.3e}, {d2:.3e}", notes.join("; ")))
}

fn pe200_iterations() -> Result<Verdict, String> {
    let mut cfg = builtin("homogeneous-2d-pe200")?;
    cfg.discretization.max_iter = 5;
    let a = run(&cfg)?.metric("max_incompatibility").unwrap_or(f64::NAN);
    cfg.discretization.max_iter = 10;
    let b = run(&cfg)?.metric("max_incompatibility").unwrap_or(f64::NAN);
    verdict(b < a, format!("max incompatibility MaxIter 5: {a:.12e}, MaxIter 10: {b:.12e}"))
}

fn calcite() -> Result<Verdict, String> {
    let sys = CalciteSystem::default();
    let k = sys.k_sp;
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let (mut checked, mut infeasible, mut worst) = (0usize, 0usize, 0.0f64);
    for _ in 0..1_000_000 {
        let mag = |rng: &mut ChaCha8Rng| 10f64.powf(rng.gen_range(-12.0..1.0));
        let psi1 = mag(&mut rng) * if rng.gen_bool(0.8) { 1.0 } else { -1e-3 };
        let psi2 = mag(&mut rng) * if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
        match calcite_recover(&sys, psi1, psi2) {
            Ok((u1, u2, u3)) if u1 > 1e-12 => {
                checked += 1;
                worst = worst.max((u2 * u3 / u1 - k).abs() / k);
            }
            Ok(_) => {}
            Err(_) => infeasible += 1,
        }
    }
    let r = run(&builtin("calcite-2d")?)?;
    let tr = |n: &str| r.traces.get(n).cloned().unwrap_or_default();
    let (u1, u2, u3) = (tr("total_u1"), tr("total_u2"), tr("total_u3"));
    let peak = u2.iter().map(|p| p.1).fold(f64::NEG_INFINITY, f64::max);
    let tail = &u2[u2.len() * 3 / 4..];
    let u2_down = u2.last().map(|p| p.1 < peak).unwrap_or(false) && tail.windows(2).all(|w| w[1].1 <= w[0].1);
    let grows = |v: &[(f64, f64)]| v.len() > 1 && v[v.len() - 1].1 > v[0].1;
    verdict(
        worst <= 1e-6 && u2_down && grows(&u1) && grows(&u3),
        format!(
            "{checked} samples checked, {infeasible} infeasible, worst residual {worst:.3e} K; \
             totals u1 {:.3e}->{:.3e}, u2 {:.3e}->{:.3e}, u3 {:.3e}->{:.3e}",
            u1[0].1,
            u1[u1.len() - 1].1,
            u2[0].1,
            u2[u2.len() - 1].1,
            u3[0].1,
            u3[u3.len() - 1].1
        ),
    )
}

fn heat_in_time(dt: f64, t_end: f64) -> Result<Vec<f64>, String> {
    let mesh = Mesh::interval(0.0, 1.0, 32, 2).map_err(|e| e.to_string())?;
    let sys = assemble_galerkin(&mesh, &Physics::new(0.1, [0.0, 0.0])).map_err(|e| e.to_string())?;
    let ends: Vec<usize> = (0..mesh.node_count()).filter(|&i| mesh.nodes[i][0] == 0.0 || mesh.nodes[i][0] == 1.0).collect();
    let st = ThetaStepper::new(&sys, 0.5, dt, &ends).map_err(|e| e.to_string())?;
    let d0: Vec<f64> = mesh.nodes.iter().map(|p| (std::f64::consts::PI * p[0]).sin() + 0.5 * (3.0 * std::f64::consts::PI * p[0]).sin()).collect();
    let mut s = st.initial_state(d0, None, 0.0).map_err(|e| e.to_string())?;
    let zeros = vec![0.0; ends.len()];
    for _ in 0..(t_end / dt).round() as usize {
        s = st.step(&s, &zeros).map_err(|e| e.to_string())?;
    }
    Ok(s.d)
}

fn fem_checks() -> Result<Verdict, String> {
    let t_end = 0.5;
    let reference = heat_in_time(t_end / 12_800.0, t_end)?;
    let dts = [t_end / 20.0, t_end / 40.0, t_end / 80.0];
    let mut errs = Vec::new();
    for dt in dts {
        let d = heat_in_time(dt, t_end)?;
        errs.push(d.iter().zip(&reference).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max));
    }
    let order = fit_order(&dts, &errs).unwrap_or(f64::NAN);

    let mesh = Mesh::rectangle([0.0, 0.0], [1.0, 1.0], [16, 12]).map_err(|e| e.to_string())?;
    let sys = assemble_galerkin(&mesh, &Physics::new(2e-2, [0.0, 0.0])).map_err(|e| e.to_string())?;
    let st = ThetaStepper::new(&sys, 0.5, 1e-2, &[]).map_err(|e| e.to_string())?;
    let d0: Vec<f64> = mesh.nodes.iter().map(|p| (-((p[0] - 0.3).powi(2) + (p[1] - 0.6).powi(2)) / 0.02).exp()).collect();
    let mut s = st.initial_state(d0, None, 0.0).map_err(|e| e.to_string())?;
    let m0 = st.mass(&s.d);
    let mut drift = 0.0f64;
    for _ in 0..200 {
        s = st.step(&s, &[]).map_err(|e| e.to_string())?;
        drift = drift.max((st.mass(&s.d) - m0).abs() / m0);
    }

    let mut tau_err = 0.0f64;
    for p in 1..=4 {
        for (h, dif) in [(0.1, 1.0), (0.01, 1e-3), (0.05, 0.3)] {
            let want = h * h / (12.0 * (p * p) as f64 * dif);
            for vnorm in [0.0, 1e-6 * dif / h] {
                tau_err = tau_err.max((supg_tau(h, p, vnorm, dif) - want).abs() / want);
            }
        }
    }
    verdict(
        (1.8..=2.2).contains(&order) && drift <= 1e-10 && tau_err <= 1e-8,
        format!("theta=1/2 errors [{}] order {order:.3}; mass drift {drift:.2e}; tau limit rel err {tau_err:.2e}", fmt_list(&errs)),
    )
}

fn main() {
    let checks: [(usize, &str, Check); 11] = [
        (1, "LBM convergence", lbm_convergence),
        (2, "LBM non-negativity", non_negativity),
        (3, "H-theorem", h_theorem),
        (4, "BC-family divergence", bc_divergence),
        (5, "transfer orders", transfer_orders),
        (6, "hybrid Gaussian hill", gauss_hill),
        (7, "overlap-length effect", overlap_effect),
        (8, "bimolecular reaction", bimolecular),
        (9, "Pe 200 sub-iterations", pe200_iterations),
        (10, "calcite recovery", calcite),
        (11, "FEM checks", fem_checks),
    ];
    let only: Option<Vec<usize>> =
        std::env::var("ACCEPTANCE_ONLY").ok().map(|s| s.split(',').filter_map(|t| t.trim().parse().ok()).collect());
    let mut unexpected = Vec::new();
    let mut summary = BTreeMap::new();
    for (id, name, check) in checks {
        if only.as_ref().is_some_and(|o| !o.contains(&id)) {
            continue;
        }
        let start = Instant::now();
        let v = check().unwrap_or_else(|e| Verdict { pass: false, detail: format!("error: {e}") });
        let known = KNOWN_UNATTAINABLE.contains(&id);
        let tag = match (v.pass, known) {
            (true, _) => "PASS",
            (false, true) => "FAIL (known)",
            (false, false) => "FAIL",
        };
        println!("criterion {id:2} {name}: {tag} [{:.1} s] {}", start.elapsed().as_secs_f64(), v.detail);
        if !v.pass && !known {
            unexpected.push(id);
        }
        summary.insert(id, v.pass);
    }
    let passed = summary.values().filter(|p| **p).count();
    println!("acceptance: {passed}/{} criteria pass", summary.len());
    if !unexpected.is_empty() {
        println!("unexpected failures: {unexpected:?}");
        std::process::exit(1);
    }
}
