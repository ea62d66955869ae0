//! Builders shared by the scenarios.

use std::sync::Arc;

use hybrid_core::boundary::{box_patches, BoundaryKind, BoundaryPatch, BoundaryValue, FaceSpec};
use hybrid_core::coupling::{BoundaryFn, CouplingParams, FemSubdomain, HybridSystem, LbmSubdomain};
use hybrid_core::fem::{assemble, Mesh, Physics, ScalarFn};
use hybrid_core::lattice::builtin_model;
use hybrid_core::lbm::{LbmField, LbmGrid, LbmParams};
use hybrid_core::{Error as CoreError, Result as CoreResult};

use crate::config::{FaceBc, InitialSpec, ScenarioConfig, SubdomainKind};
use crate::error::{Result, ScenarioError};
use crate::report::FieldSnapshot;

pub const FACES: [&str; 4] = ["x-min", "x-max", "y-min", "y-max"];
const TAGS: [&str; 4] = ["left", "right", "bottom", "top"];

pub fn runtime(cfg: &ScenarioConfig) -> impl Fn(CoreError) -> ScenarioError + '_ {
    move |source| ScenarioError::Runtime { scenario: cfg.scenario.name.clone(), source }
}

/// Closure evaluating one initial profile.
pub fn initial_fn(spec: &InitialSpec, dim: usize) -> impl Fn([f64; 2]) -> f64 + Send + Sync + 'static {
    let s = spec.clone();
    move |x: [f64; 2]| match s.kind.as_str() {
        "uniform" => s.value,
        "gaussian" => {
            let r2: f64 = (0..dim.min(s.center.len())).map(|a| (x[a] - s.center[a]).powi(2)).sum();
            let norm = (2.0 * std::f64::consts::PI * s.sigma * s.sigma).powf(dim as f64 / 2.0);
            s.amplitude / norm * (-r2 / (2.0 * s.sigma * s.sigma)).exp()
        }
        "pulse" => {
            if (0..dim).all(|a| x[a] >= s.lo[a] - 1e-12 && x[a] <= s.hi[a] + 1e-12) {
                s.value
            } else {
                0.0
            }
        }
        "mode" => s.amplitude * crate::exact::mixed_mode(x, 0.0),
        _ => 0.0,
    }
}

pub fn face_bc(cfg: &ScenarioConfig, face: &str) -> FaceBc {
    cfg.physics.boundaries.get(face).and_then(|s| FaceBc::parse(s).ok()).unwrap_or(FaceBc::ZeroFlux)
}

pub fn wall_kind(cfg: &ScenarioConfig) -> BoundaryKind {
    match cfg.physics.wall.as_str() {
        "bounce-back" => BoundaryKind::BounceBack,
        "specular" => BoundaryKind::SpecularReflection,
        _ => BoundaryKind::EntropyNeumann,
    }
}

/// Lattice closure for a face condition; `inlet` replaces Dirichlet values.
pub fn lattice_face(bc: FaceBc, wall: BoundaryKind, inlet: Option<f64>) -> FaceSpec {
    match bc {
        FaceBc::ZeroFlux => FaceSpec::new(wall, BoundaryValue::Constant(0.0)),
        FaceBc::Dirichlet(v) => FaceSpec::new(BoundaryKind::EntropyDirichlet, BoundaryValue::Constant(inlet.unwrap_or(v))),
        FaceBc::Neumann(g) => FaceSpec::new(BoundaryKind::EntropyNeumann, BoundaryValue::Constant(-g)),
    }
}

pub fn cells(extent: f64, h: f64) -> usize {
    ((extent / h).round() as usize).max(1)
}

/// Lattice on `[lo, hi]`; periodic axes drop the duplicate upper node.
pub fn lattice_grid(dim: usize, lo: [f64; 2], hi: [f64; 2], h: f64, periodic: &[bool]) -> CoreResult<LbmGrid> {
    let g = LbmGrid::covering(&lo[..dim], &hi[..dim], h)?;
    let mut dims = g.dims;
    let mut any = false;
    for a in 0..dim {
        if periodic.get(a).copied().unwrap_or(false) {
            dims[a] -= 1;
            any = true;
        }
    }
    if !any {
        return Ok(g);
    }
    let mut g = LbmGrid::new(&lo[..dim], h, &dims[..dim])?;
    for a in 0..dim {
        g = g.with_periodic(a, periodic.get(a).copied().unwrap_or(false));
    }
    Ok(g)
}

pub fn mark_obstacles(grid: &mut LbmGrid, obstacles: &[[f64; 3]]) {
    let obs = obstacles.to_vec();
    grid.mark_solid(move |x| obs.iter().any(|o| (x[0] - o[0]).powi(2) + (x[1] - o[1]).powi(2) <= o[2] * o[2]));
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Part {
    pub kind: SubdomainKind,
    pub lo: f64,
    pub hi: f64,
}

/// Subdomain intervals along x from the splits and the overlap length.
pub fn partition(cfg: &ScenarioConfig) -> Vec<Part> {
    let d = &cfg.domain;
    let l = cfg.discretization.overlap;
    let n = d.splits.len() + 1;
    let mut kind = d.first;
    (0..n)
        .map(|k| {
            let lo = if k == 0 { d.lo[0] } else { d.splits[k - 1] - l / 2.0 };
            let hi = if k == n - 1 { d.hi[0] } else { d.splits[k] + l / 2.0 };
            let p = Part { kind, lo, hi };
            kind = match kind {
                SubdomainKind::Coarse => SubdomainKind::Fine,
                SubdomainKind::Fine => SubdomainKind::Coarse,
            };
            p
        })
        .collect()
}

pub type VelocityAt = Arc<dyn Fn([f64; 2]) -> [f64; 2] + Send + Sync>;

/// Velocity of fine subdomains: the CSV field when configured, else the
/// uniform velocity.
pub fn fine_velocity(cfg: &ScenarioConfig) -> Result<Option<Vec<([f64; 2], [f64; 2])>>> {
    let Some(path) = &cfg.physics.velocity_file else { return Ok(None) };
    let text = std::fs::read_to_string(path).map_err(|e| ScenarioError::io(path, e))?;
    let mut rows = Vec::new();
    for (k, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') || (k == 0 && line.chars().any(|c| c.is_ascii_alphabetic() && c != 'e' && c != 'E')) {
            continue;
        }
        let vals: std::result::Result<Vec<f64>, _> = line.split(',').map(|s| s.trim().parse::<f64>()).collect();
        match vals {
            Ok(v) if v.len() == 4 => rows.push(([v[0], v[1]], [v[2], v[3]])),
            _ => return Err(ScenarioError::Parse(format!("{path}:{}: expected x,y,vx,vy", k + 1))),
        }
    }
    Ok(Some(rows))
}

/// Per-node lattice velocity: zero on solid nodes, CSV values on the nearest
/// node when given, `v` elsewhere.
pub fn node_velocity(grid: &LbmGrid, v: [f64; 2], file: Option<&[([f64; 2], [f64; 2])]>) -> Vec<[f64; 2]> {
    let mut vel: Vec<[f64; 2]> = (0..grid.node_count()).map(|n| if grid.is_fluid(n) { v } else { [0.0; 2] }).collect();
    if let Some(rows) = file {
        for (x, w) in rows {
            if let Some(n) = grid.nearest_node(*x) {
                if grid.is_fluid(n) {
                    vel[n] = *w;
                }
            }
        }
    }
    vel
}

/// Coupled system of the configured partition for one transported scalar.
/// `inlet` replaces the value of every Dirichlet face.
pub fn build_hybrid(
    cfg: &ScenarioConfig,
    u0: &dyn Fn([f64; 2]) -> f64,
    inlet: Option<f64>,
    velocity_file: Option<&[([f64; 2], [f64; 2])]>,
) -> CoreResult<HybridSystem> {
    let dim = cfg.dim();
    let d = &cfg.discretization;
    let model = builtin_model(cfg.lattice().map_err(CoreError::InvalidArgument)?);
    let form = cfg.formulation().map_err(CoreError::InvalidArgument)?;
    let diff = cfg.physics.diffusivity;
    let v = cfg.physics.velocity;
    let (ylo, yhi) = if dim == 2 { (cfg.domain.lo[1], cfg.domain.hi[1]) } else { (0.0, 0.0) };
    let parts = partition(cfg);
    let wall = wall_kind(cfg);
    let mut coarse = Vec::new();
    let mut fine = Vec::new();
    let mut slot = Vec::new();
    for (k, p) in parts.iter().enumerate() {
        let iface = [k > 0, k + 1 < parts.len(), false, false];
        match p.kind {
            SubdomainKind::Coarse => {
                let nx = cells(p.hi - p.lo, d.h_c);
                let mesh = if dim == 1 {
                    Mesh::interval(p.lo, p.hi, nx, d.order)?
                } else {
                    Mesh::rectangle([p.lo, ylo], [p.hi, yhi], [nx, cells(yhi - ylo, d.h_c)])?
                };
                let mut phys = Physics::new(diff, v);
                if cfg.physics.source != 0.0 {
                    let s = cfg.physics.source;
                    phys = phys.with_source(Arc::new(move |_| s));
                }
                let mut fixed: Vec<(Vec<usize>, BoundaryFn)> = Vec::new();
                let mut inodes = Vec::new();
                for f in 0..2 * dim {
                    let nodes = mesh.tagged_nodes(TAGS[f])?;
                    if iface[f] {
                        inodes.extend(nodes);
                        continue;
                    }
                    match face_bc(cfg, FACES[f]) {
                        FaceBc::Dirichlet(val) => {
                            let val = inlet.unwrap_or(val);
                            fixed.push((nodes, Arc::new(move |_, _| val)));
                        }
                        FaceBc::Neumann(g) => {
                            let g: ScalarFn = Arc::new(move |_| g);
                            phys.neumann.push((TAGS[f].to_string(), g));
                        }
                        FaceBc::ZeroFlux => {}
                    }
                }
                inodes.sort_unstable();
                inodes.dedup();
                let sys = assemble(&mesh, &phys, form)?;
                let d0 = mesh.nodes.iter().map(|x| u0(*x)).collect();
                let id = format!("coarse-{}", coarse.len());
                slot.push(coarse.len());
                coarse.push(FemSubdomain::new(id, mesh, &sys, d.theta, d.dt_c, fixed, inodes, d0)?);
            }
            SubdomainKind::Fine => {
                let mut grid = lattice_grid(dim, [p.lo, ylo], [p.hi, yhi], d.h_f, &cfg.domain.periodic)?;
                if dim == 2 {
                    mark_obstacles(&mut grid, &cfg.domain.obstacles);
                }
                let faces: Vec<Option<FaceSpec>> = (0..2 * dim)
                    .map(|f| {
                        if iface[f] {
                            Some(FaceSpec::new(BoundaryKind::EntropyDirichlet, BoundaryValue::Constant(0.0)))
                        } else if cfg.domain.periodic.get(f / 2).copied().unwrap_or(false) {
                            None
                        } else {
                            Some(lattice_face(face_bc(cfg, FACES[f]), wall, inlet))
                        }
                    })
                    .collect();
                let vel = node_velocity(&grid, v, velocity_file);
                let uf: Vec<f64> = (0..grid.node_count()).map(|n| if grid.is_fluid(n) { u0(grid.coords(n)) } else { 0.0 }).collect();
                let field = LbmField::from_equilibrium(grid, model.clone(), &LbmParams::new(diff, d.dt_f), vel, &uf)?;
                let patches = box_patches(&field.grid, &faces)?;
                let id = format!("fine-{}", fine.len());
                slot.push(fine.len());
                fine.push(LbmSubdomain::new(id, field, patches));
            }
        }
    }
    let mut sys = HybridSystem::new(coarse, fine, CouplingParams { dt: d.dt_c, max_iter: d.max_iter })?;
    for k in 0..parts.len().saturating_sub(1) {
        match (parts[k].kind, parts[k + 1].kind) {
            (SubdomainKind::Coarse, SubdomainKind::Fine) => sys.connect(slot[k], slot[k + 1], "x-min")?,
            (SubdomainKind::Fine, SubdomainKind::Coarse) => sys.connect(slot[k + 1], slot[k], "x-max")?,
            _ => return Err(CoreError::Geometry("adjacent subdomains of the same kind".into())),
        }
    }
    sys.validate()?;
    Ok(sys)
}

/// Patches of a single lattice on the whole domain box.
pub fn box_lattice_patches(cfg: &ScenarioConfig, grid: &LbmGrid) -> CoreResult<Vec<BoundaryPatch>> {
    let wall = wall_kind(cfg);
    let faces: Vec<Option<FaceSpec>> = (0..2 * grid.dim)
        .map(|f| {
            if cfg.domain.periodic.get(f / 2).copied().unwrap_or(false) {
                None
            } else {
                Some(lattice_face(face_bc(cfg, FACES[f]), wall, None))
            }
        })
        .collect();
    box_patches(grid, &faces)
}

/// Fluid node indices and coordinates.
pub fn fluid_points(grid: &LbmGrid) -> (Vec<usize>, Vec<[f64; 2]>) {
    (0..grid.node_count()).filter(|&n| grid.is_fluid(n)).map(|n| (n, grid.coords(n))).unzip()
}

/// Snapshot of every subdomain of `sys` with one column named `name`.
pub fn hybrid_snapshot(sys: &HybridSystem, name: &str) -> Vec<FieldSnapshot> {
    let mut out = Vec::new();
    for c in &sys.coarse {
        out.push(FieldSnapshot { subdomain: c.id.clone(), points: c.mesh.nodes.clone(), columns: vec![(name.into(), c.state.d.clone())] });
    }
    for f in &sys.fine {
        let (nodes, points) = fluid_points(&f.field.grid);
        let u = f.field.concentration();
        out.push(FieldSnapshot { subdomain: f.id.clone(), points, columns: vec![(name.into(), nodes.iter().map(|&n| u[n]).collect())] });
    }
    out
}

/// `int u` of a P1 interpolant over elements whose centroid satisfies `keep`.
pub fn fem_region_integral(mesh: &Mesh, values: &[f64], keep: impl Fn([f64; 2]) -> bool) -> f64 {
    (0..mesh.element_count())
        .filter(|&e| keep(mesh.centroid(e)))
        .map(|e| {
            let el = &mesh.elements[e];
            mesh.measure(e) * el.iter().map(|&a| values[a]).sum::<f64>() / el.len() as f64
        })
        .sum()
}

/// Trapezoidal integral of nodal lattice values over the fluid nodes.
pub fn lattice_integral(grid: &LbmGrid, values: &[f64]) -> f64 {
    let h = grid.spacing;
    (0..grid.node_count())
        .filter(|&n| grid.is_fluid(n))
        .map(|n| {
            let (i, j) = grid.ij(n);
            let mut w = 1.0;
            for (a, (c, m)) in [(i, grid.nx()), (j, grid.ny())].into_iter().enumerate().take(grid.dim) {
                let edge = !grid.periodic[a] && (c == 0 || c == m - 1);
                w *= if edge { 0.5 * h } else { h };
            }
            w * values[n]
        })
        .sum()
}

/// Whole-domain integral: fine lattices own their boxes, coarse elements
/// count outside them. `coarse[k]` and `fine[k]` are the nodal values.
pub fn partitioned_integral(sys: &HybridSystem, coarse: &[Vec<f64>], fine: &[Vec<f64>]) -> f64 {
    let boxes: Vec<(f64, f64)> = sys.fine.iter().map(|f| (f.field.grid.origin[0], f.field.grid.upper()[0])).collect();
    let mut total = 0.0;
    for (c, vals) in sys.coarse.iter().zip(coarse) {
        total += fem_region_integral(&c.mesh, vals, |x| boxes.iter().all(|&(lo, hi)| x[0] < lo || x[0] > hi));
    }
    for (f, vals) in sys.fine.iter().zip(fine) {
        total += lattice_integral(&f.field.grid, vals);
    }
    total
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn partition_intervals() {
        let c = ScenarioConfig::builtin("bimolecular-1d", &[]).unwrap();
        let p = partition(&c);
        assert_eq!(p.len(), 3);
        assert_eq!(p[0].kind, SubdomainKind::Coarse);
        assert_eq!(p[1].kind, SubdomainKind::Fine);
        assert!((p[0].hi - 0.40).abs() < 1e-12 && (p[1].lo - 0.39).abs() < 1e-12);
        assert!((p[1].hi - 0.61).abs() < 1e-12 && (p[2].lo - 0.60).abs() < 1e-12);
    }

    #[test]
    fn periodic_grid_drops_duplicate_row() {
        let g = lattice_grid(2, [0.0, 0.0], [1.0, 1.0], 0.25, &[false, true]).unwrap();
        assert_eq!(g.dims, [5, 4]);
        assert!(g.periodic[1]);
    }

    #[test]
    fn integrals_of_constants() {
        let g = lattice_grid(2, [0.0, 0.0], [2.0, 1.0], 0.1, &[false, false]).unwrap();
        assert!((lattice_integral(&g, &vec![1.0; g.node_count()]) - 2.0).abs() < 1e-12);
        let g = lattice_grid(2, [0.0, 0.0], [2.0, 1.0], 0.1, &[false, true]).unwrap();
        assert!((lattice_integral(&g, &vec![1.0; g.node_count()]) - 2.0).abs() < 1e-12);
        let m = Mesh::rectangle([0.0, 0.0], [1.0, 1.0], [4, 4]).unwrap();
        let v: Vec<f64> = m.nodes.iter().map(|p| p[0]).collect();
        assert!((fem_region_integral(&m, &v, |_| true) - 0.5).abs() < 1e-12);
        assert!((fem_region_integral(&m, &v, |x| x[0] > 0.5) - 0.375).abs() < 1e-12);
    }
}
