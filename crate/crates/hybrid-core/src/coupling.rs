//! Overlapping Schwarz coupling of finite element and lattice Boltzmann
//! subdomains with multirate time stepping.
//!
//! Each system step restarts every subdomain from its saved state and runs a
//! fixed number of sub-iterations. Within a sub-iteration all coarse
//! subdomains advance first, with interface values taken from the current
//! lattice fields; the fine subdomains then take `eta` substeps each, with
//! interface values interpolated linearly in time between the coarse
//! solutions at the start and end of the step. Subdomains run in list order.

use std::fmt::Write as _;
use std::sync::Arc;

use crate::boundary::{BoundaryKind, BoundaryPatch};
use crate::error::{Error, Result};
use crate::fem::{ElementLocator, FemState, FemSystem, Mesh, ThetaStepper};
use crate::lbm::LbmField;
use crate::transfer::{build_transfer_map, fem_to_lbm, lbm_to_fem, TransferMap};

/// Prescribed value as a function of position and time.
pub type BoundaryFn = Arc<dyn Fn([f64; 2], f64) -> f64 + Send + Sync>;

/// Relative tolerance for `eta dt_f = dt`.
pub const ETA_TOL: f64 = 1e-12;

/// Finite element subdomain.
pub struct FemSubdomain {
    pub id: String,
    pub mesh: Mesh,
    pub locator: ElementLocator,
    pub stepper: ThetaStepper,
    pub state: FemState,
    fixed: Vec<(usize, BoundaryFn)>,
    interface_nodes: Vec<usize>,
}

impl std::fmt::Debug for FemSubdomain {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("FemSubdomain")
            .field("id", &self.id)
            .field("nodes", &self.mesh.node_count())
            .field("fixed", &self.fixed.len())
            .field("interface", &self.interface_nodes.len())
            .finish()
    }
}

impl FemSubdomain {
    /// `fixed` lists true-boundary Dirichlet node sets; `interface` the nodes
    /// receiving lattice data. Nodes in both are treated as interface nodes.
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        id: impl Into<String>,
        mesh: Mesh,
        system: &FemSystem,
        theta: f64,
        dt: f64,
        fixed: Vec<(Vec<usize>, BoundaryFn)>,
        interface: Vec<usize>,
        d0: Vec<f64>,
    ) -> Result<Self> {
        let id = id.into();
        if d0.len() != mesh.node_count() {
            return Err(Error::InvalidArgument(format!("subdomain '{id}': initial data length mismatch")));
        }
        let mut is_iface = vec![false; mesh.node_count()];
        for &a in &interface {
            if a >= mesh.node_count() {
                return Err(Error::InvalidArgument(format!("subdomain '{id}': interface node {a} out of range")));
            }
            is_iface[a] = true;
        }
        let mut seen = is_iface.clone();
        let mut fixed_nodes = Vec::new();
        for (nodes, g) in fixed {
            for a in nodes {
                if a >= mesh.node_count() {
                    return Err(Error::InvalidArgument(format!("subdomain '{id}': Dirichlet node {a} out of range")));
                }
                if !std::mem::replace(&mut seen[a], true) {
                    fixed_nodes.push((a, g.clone()));
                }
            }
        }
        let mut constrained: Vec<usize> = fixed_nodes.iter().map(|(a, _)| *a).collect();
        constrained.extend(&interface);
        let stepper = ThetaStepper::new(system, theta, dt, &constrained).map_err(|e| e.context(format!("subdomain '{id}'")))?;
        let locator = ElementLocator::new(&mesh);
        let mut d0 = d0;
        for (a, g) in &fixed_nodes {
            d0[*a] = g(mesh.nodes[*a], 0.0);
        }
        let state = stepper.initial_state(d0, None, 0.0)?;
        Ok(FemSubdomain { id, mesh, locator, stepper, state, fixed: fixed_nodes, interface_nodes: interface })
    }

    pub fn interface_nodes(&self) -> &[usize] {
        &self.interface_nodes
    }

    pub fn dt(&self) -> f64 {
        self.stepper.dt
    }

    fn constraint_values(&self, t: f64, interface: &[f64]) -> Vec<f64> {
        let mut v: Vec<f64> = self.fixed.iter().map(|(a, g)| g(self.mesh.nodes[*a], t)).collect();
        v.extend_from_slice(interface);
        v
    }

    /// Interpolant at arbitrary points, failing outside the mesh.
    pub fn evaluate(&self, x: [f64; 2]) -> Result<f64> {
        crate::fem::interpolate_at(&self.mesh, &self.locator, &self.state.d, x)
    }
}

/// Lattice Boltzmann subdomain.
#[derive(Debug)]
pub struct LbmSubdomain {
    pub id: String,
    pub field: LbmField,
    pub patches: Vec<BoundaryPatch>,
}

impl LbmSubdomain {
    pub fn new(id: impl Into<String>, field: LbmField, patches: Vec<BoundaryPatch>) -> Self {
        LbmSubdomain { id: id.into(), field, patches }
    }

    /// Index of the patch with the given name.
    pub fn patch_index(&self, name: &str) -> Result<usize> {
        self.patches
            .iter()
            .position(|p| p.name == name)
            .ok_or_else(|| Error::InvalidArgument(format!("subdomain '{}' has no boundary patch '{name}'", self.id)))
    }
}

/// Axis-aligned overlap of one coarse/fine pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Overlap {
    pub lo: [f64; 2],
    pub hi: [f64; 2],
    pub axis: usize,
    /// True when the lattice boundary inside the mesh is at `lo[axis]`.
    pub lattice_edge_low: bool,
}

impl Overlap {
    /// Blend weight of the finite element value: 1 on the lattice boundary,
    /// 0 on the mesh boundary, linear in between.
    pub fn beta(&self, x: [f64; 2]) -> f64 {
        let a = self.axis;
        let w = self.hi[a] - self.lo[a];
        let s = ((x[a] - self.lo[a]) / w).clamp(0.0, 1.0);
        if self.lattice_edge_low {
            1.0 - s
        } else {
            s
        }
    }
}

/// Data exchange between one coarse and one fine subdomain.
#[derive(Debug, Clone)]
pub struct Interface {
    pub coarse: usize,
    pub fine: usize,
    pub map: TransferMap,
    /// Fine patch fed from the mesh; its node order matches `map.fem_to_lbm`.
    pub lbm_patch: usize,
    /// Position of each `map.lbm_to_fem` entry among the coarse interface nodes.
    fem_slots: Vec<usize>,
    pub probes: TransferMap,
    pub overlap: Overlap,
}

/// Sub-iteration controls.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CouplingParams {
    /// System (coarse) time step.
    pub dt: f64,
    pub max_iter: usize,
}

/// One reporting sample of the blended overlap field.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlendSample {
    pub x: [f64; 2],
    pub u_fem: f64,
    pub u_lbm: f64,
    pub beta: f64,
    pub blended: f64,
}

/// A decomposed problem with its current states.
#[derive(Debug)]
pub struct HybridSystem {
    pub coarse: Vec<FemSubdomain>,
    pub fine: Vec<LbmSubdomain>,
    pub interfaces: Vec<Interface>,
    pub params: CouplingParams,
    pub steps: u64,
    etas: Vec<usize>,
}

/// `dt_c / dt_f` as an exact integer.
pub fn substep_ratio(dt_coarse: f64, dt_fine: f64) -> Result<usize> {
    if !(dt_coarse > 0.0 && dt_fine > 0.0) {
        return Err(Error::InvalidArgument(format!("time steps {dt_coarse}, {dt_fine} must be positive")));
    }
    let r = dt_coarse / dt_fine;
    let eta = r.round();
    if eta < 1.0 || (eta * dt_fine - dt_coarse).abs() > ETA_TOL * dt_coarse {
        return Err(Error::InvalidArgument(format!(
            "time step ratio {r} is not a positive integer (dt_c = {dt_coarse}, dt_f = {dt_fine})"
        )));
    }
    Ok(eta as usize)
}

/// Interface value at substep `j` of `eta`.
pub fn mts_blend(u_start: f64, u_end: f64, j: usize, eta: usize) -> f64 {
    if j == eta {
        return u_end;
    }
    let s = j as f64 / eta as f64;
    s * u_end + (1.0 - s) * u_start
}

fn grid_box(field: &LbmField) -> ([f64; 2], [f64; 2]) {
    let g = &field.grid;
    let mut hi = g.upper();
    for a in 0..g.dim {
        if g.periodic[a] {
            hi[a] += g.spacing;
        }
    }
    (g.origin, hi)
}

impl HybridSystem {
    pub fn new(coarse: Vec<FemSubdomain>, fine: Vec<LbmSubdomain>, params: CouplingParams) -> Result<Self> {
        if params.max_iter == 0 {
            return Err(Error::InvalidArgument("at least one sub-iteration is required".into()));
        }
        for c in &coarse {
            if (c.dt() - params.dt).abs() > ETA_TOL * params.dt {
                return Err(Error::InvalidArgument(format!(
                    "coarse subdomain '{}' uses dt = {} but the system step is {}",
                    c.id,
                    c.dt(),
                    params.dt
                )));
            }
        }
        let etas = fine
            .iter()
            .map(|f| substep_ratio(params.dt, f.field.dt).map_err(|e| e.context(format!("fine subdomain '{}'", f.id))))
            .collect::<Result<Vec<_>>>()?;
        Ok(HybridSystem { coarse, fine, interfaces: Vec::new(), params, steps: 0, etas })
    }

    pub fn eta(&self, fine: usize) -> usize {
        self.etas[fine]
    }

    pub fn time(&self) -> f64 {
        self.steps as f64 * self.params.dt
    }

    /// Couples coarse `c` and fine `f`; `patch` names the fine boundary patch
    /// fed from the mesh. Coarse interface nodes inside the fine grid's
    /// bounding box receive lattice data.
    pub fn connect(&mut self, c: usize, f: usize, patch: &str) -> Result<()> {
        let cs = self.coarse.get(c).ok_or_else(|| Error::InvalidArgument(format!("no coarse subdomain {c}")))?;
        let fs = self.fine.get(f).ok_or_else(|| Error::InvalidArgument(format!("no fine subdomain {f}")))?;
        let lbm_patch = fs.patch_index(patch)?;
        let p = &fs.patches[lbm_patch];
        if p.kind != BoundaryKind::EntropyDirichlet {
            return Err(Error::InvalidArgument(format!("interface patch '{patch}' must be an entropy Dirichlet patch")));
        }
        let (glo, ghi) = grid_box(&fs.field);
        let (mlo, mhi) = cs.mesh.bounds();
        let dim = cs.mesh.dim;
        let tol = 1e-9 * fs.field.grid.spacing;
        let inside_grid = |x: [f64; 2]| (0..dim).all(|a| x[a] >= glo[a] - tol && x[a] <= ghi[a] + tol);
        let inside_mesh = |x: [f64; 2]| (0..dim).all(|a| x[a] >= mlo[a] - tol && x[a] <= mhi[a] + tol);
        let fem_iface: Vec<(usize, usize)> = cs
            .interface_nodes
            .iter()
            .enumerate()
            .filter(|(_, &a)| inside_grid(cs.mesh.nodes[a]))
            .map(|(k, &a)| (k, a))
            .collect();
        let fem_nodes: Vec<usize> = fem_iface.iter().map(|&(_, a)| a).collect();
        let map = build_transfer_map(&cs.mesh, &cs.locator, &fs.field.grid, &fem_nodes, &p.nodes)
            .map_err(|e| e.context(format!("interface {} <-> {}", cs.id, fs.id)))?;
        let fem_slots = fem_iface.iter().map(|&(k, _)| k).collect();
        let grid = &fs.field.grid;
        let probe_lbm: Vec<usize> =
            (0..grid.node_count()).filter(|&n| grid.is_fluid(n) && inside_mesh(grid.coords(n))).collect();
        let probe_fem: Vec<usize> = (0..cs.mesh.node_count()).filter(|&a| inside_grid(cs.mesh.nodes[a])).collect();
        let probes = build_transfer_map(&cs.mesh, &cs.locator, grid, &probe_fem, &probe_lbm)
            .map_err(|e| e.context(format!("overlap probes {} <-> {}", cs.id, fs.id)))?;
        let mut lo = [0.0; 2];
        let mut hi = [0.0; 2];
        let mut axis = 0;
        let mut best = f64::INFINITY;
        for a in 0..dim {
            lo[a] = glo[a].max(mlo[a]);
            hi[a] = ghi[a].min(mhi[a]);
            if hi[a] <= lo[a] {
                return Err(Error::Geometry(format!("subdomains '{}' and '{}' do not overlap", cs.id, fs.id)));
            }
            let rel = (hi[a] - lo[a]) / (ghi[a].max(mhi[a]) - glo[a].min(mlo[a]));
            if rel < best - 1e-12 {
                best = rel;
                axis = a;
            }
        }
        let lattice_edge_low = glo[axis] > mlo[axis] + tol;
        self.interfaces.push(Interface {
            coarse: c,
            fine: f,
            map,
            lbm_patch,
            fem_slots,
            probes,
            overlap: Overlap { lo, hi, axis, lattice_edge_low },
        });
        Ok(())
    }

    /// Checks that every coarse interface node is fed exactly once and that
    /// every fine subdomain is coupled.
    pub fn validate(&self) -> Result<()> {
        for (ci, c) in self.coarse.iter().enumerate() {
            let mut count = vec![0usize; c.interface_nodes.len()];
            for i in self.interfaces.iter().filter(|i| i.coarse == ci) {
                for &s in &i.fem_slots {
                    count[s] += 1;
                }
            }
            if let Some(k) = count.iter().position(|&n| n != 1) {
                let a = c.interface_nodes[k];
                return Err(Error::Geometry(format!(
                    "interface node {a} of '{}' at {:?} is fed by {} lattice subdomains",
                    c.id, c.mesh.nodes[a], count[k]
                )));
            }
        }
        for (fi, f) in self.fine.iter().enumerate() {
            if !self.interfaces.iter().any(|i| i.fine == fi) {
                return Err(Error::Geometry(format!("fine subdomain '{}' overlaps no coarse subdomain", f.id)));
            }
        }
        Ok(())
    }

    fn coarse_interface_values(&self, ci: usize, fields: &[LbmField]) -> Vec<f64> {
        let mut vals = vec![0.0; self.coarse[ci].interface_nodes.len()];
        for i in self.interfaces.iter().filter(|i| i.coarse == ci) {
            let u = fields[i.fine].concentration();
            for (s, v) in i.fem_slots.iter().zip(lbm_to_fem(&i.map, &u)) {
                vals[*s] = v;
            }
        }
        vals
    }

    fn step_coarse(&self, ci: usize, saved: &FemState, iface: &[f64], t1: f64) -> Result<FemState> {
        let c = &self.coarse[ci];
        c.stepper.step(saved, &c.constraint_values(t1, iface))
    }

    fn run_fine(
        &self,
        fj: usize,
        saved: &LbmField,
        field: &mut LbmField,
        ends: &[(usize, Vec<f64>, Vec<f64>)],
        ctx: &str,
    ) -> Result<()> {
        let eta = self.etas[fj];
        field.copy_state_from(saved);
        let mut patches = self.fine[fj].patches.clone();
        let mut buf = Vec::new();
        for j in 1..=eta {
            for (p, a, b) in ends {
                buf.clear();
                buf.extend(a.iter().zip(b).map(|(x, y)| mts_blend(*x, *y, j, eta)));
                patches[*p].set_values(&buf)?;
            }
            field.step(&patches).map_err(|e| e.context(format!("{ctx}, substep {j}")))?;
        }
        field.time = saved.time + self.params.dt;
        Ok(())
    }

    /// One coarse step of the two-subdomain algorithm.
    pub fn advance_two_domain(&mut self) -> Result<()> {
        if self.coarse.len() != 1 || self.fine.len() != 1 || self.interfaces.len() != 1 {
            return Err(Error::InvalidArgument("two-domain stepping needs one coarse, one fine and one interface".into()));
        }
        let t = self.time();
        let t1 = (self.steps + 1) as f64 * self.params.dt;
        let iface = &self.interfaces[0];
        let saved_c = self.coarse[0].state.clone();
        let saved_f = self.fine[0].field.clone();
        let start = fem_to_lbm(&iface.map, &saved_c.d);
        let mut fem = saved_c.clone();
        let mut lbm = saved_f.clone();
        for k in 1..=self.params.max_iter {
            let ctx = format!("step at t = {t}, iteration {k}");
            let vals = self.coarse_interface_values(0, std::slice::from_ref(&lbm));
            fem = self.step_coarse(0, &saved_c, &vals, t1).map_err(|e| e.context(ctx.clone()))?;
            let end = fem_to_lbm(&iface.map, &fem.d);
            self.run_fine(0, &saved_f, &mut lbm, &[(iface.lbm_patch, start.clone(), end)], &ctx)?;
        }
        self.coarse[0].state = fem;
        self.fine[0].field = lbm;
        self.steps += 1;
        Ok(())
    }

    /// One system step of the many-subdomain algorithm.
    pub fn advance_multi(&mut self) -> Result<()> {
        let t = self.time();
        let t1 = (self.steps + 1) as f64 * self.params.dt;
        let saved_c: Vec<FemState> = self.coarse.iter().map(|c| c.state.clone()).collect();
        let saved_f: Vec<LbmField> = self.fine.iter().map(|f| f.field.clone()).collect();
        let starts: Vec<Vec<f64>> = self.interfaces.iter().map(|i| fem_to_lbm(&i.map, &saved_c[i.coarse].d)).collect();
        let mut fem = saved_c.clone();
        let mut lbm = saved_f.clone();
        for k in 1..=self.params.max_iter {
            for ci in 0..self.coarse.len() {
                let ctx = format!("coarse '{}' at t = {t}, iteration {k}", self.coarse[ci].id);
                let vals = self.coarse_interface_values(ci, &lbm);
                fem[ci] = self.step_coarse(ci, &saved_c[ci], &vals, t1).map_err(|e| e.context(ctx))?;
            }
            for fj in 0..self.fine.len() {
                let ends: Vec<(usize, Vec<f64>, Vec<f64>)> = self
                    .interfaces
                    .iter()
                    .enumerate()
                    .filter(|(_, i)| i.fine == fj)
                    .map(|(ii, i)| (i.lbm_patch, starts[ii].clone(), fem_to_lbm(&i.map, &fem[i.coarse].d)))
                    .collect();
                let ctx = format!("fine '{}' at t = {t}, iteration {k}", self.fine[fj].id);
                self.run_fine(fj, &saved_f[fj], &mut lbm[fj], &ends, &ctx)?;
            }
        }
        for (c, s) in self.coarse.iter_mut().zip(fem) {
            c.state = s;
        }
        for (f, s) in self.fine.iter_mut().zip(lbm) {
            f.field = s;
        }
        self.steps += 1;
        Ok(())
    }

    /// One system step with the algorithm that fits the layout.
    pub fn advance(&mut self) -> Result<()> {
        if self.coarse.len() == 1 && self.fine.len() == 1 && self.interfaces.len() == 1 {
            self.advance_two_domain()
        } else {
            self.advance_multi()
        }
    }

    /// Largest `|u_FEM - u_LBM|` over the overlap probes of all interfaces.
    pub fn overlap_incompatibility(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for i in &self.interfaces {
            let c = &self.coarse[i.coarse];
            let u = self.fine[i.fine].field.concentration();
            let fem_at_lbm = fem_to_lbm(&i.probes, &c.state.d);
            for (e, v) in i.probes.fem_to_lbm.iter().zip(&fem_at_lbm) {
                worst = worst.max((v - u[e.lbm_node]).abs());
            }
            let lbm_at_fem = lbm_to_fem(&i.probes, &u);
            for (e, v) in i.probes.lbm_to_fem.iter().zip(&lbm_at_fem) {
                worst = worst.max((v - c.state.d[e.fem_node]).abs());
            }
        }
        worst
    }

    /// Reporting-only blend `beta u_FEM + (1 - beta) u_LBM` at the lattice
    /// probes of interface `k`.
    pub fn blended_overlap_report(&self, k: usize) -> Result<Vec<BlendSample>> {
        let i = self.interfaces.get(k).ok_or_else(|| Error::InvalidArgument(format!("no interface {k}")))?;
        let field = &self.fine[i.fine].field;
        let u = field.concentration();
        let fem_vals = fem_to_lbm(&i.probes, &self.coarse[i.coarse].state.d);
        Ok(i.probes
            .fem_to_lbm
            .iter()
            .zip(&fem_vals)
            .map(|(e, &uf)| {
                let x = field.grid.coords(e.lbm_node);
                let beta = i.overlap.beta(x);
                let ul = u[e.lbm_node];
                BlendSample { x, u_fem: uf, u_lbm: ul, beta, blended: beta * uf + (1.0 - beta) * ul }
            })
            .collect())
    }

    /// Text dump of all subdomain states.
    pub fn checkpoint(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "hybrid-checkpoint 1");
        let _ = writeln!(s, "steps {}", self.steps);
        for c in &self.coarse {
            let _ = writeln!(s, "fem {} {} {:e}", c.id, c.state.d.len(), c.state.time);
            write_row(&mut s, "d", &c.state.d);
            write_row(&mut s, "v", &c.state.v);
        }
        for f in &self.fine {
            let _ = writeln!(s, "lbm {} {} {:e}", f.id, f.field.f.len(), f.field.time);
            write_row(&mut s, "f", &f.field.f);
        }
        let _ = writeln!(s, "end");
        s
    }

    /// Restores states written by [`HybridSystem::checkpoint`] into a system
    /// with the same layout.
    pub fn restore(&mut self, text: &str) -> Result<()> {
        let bad = |m: String| Error::InvalidArgument(format!("checkpoint: {m}"));
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        if lines.next().map(str::trim) != Some("hybrid-checkpoint 1") {
            return Err(bad("missing header".into()));
        }
        let steps_line = lines.next().ok_or_else(|| bad("missing steps".into()))?;
        let steps = steps_line
            .strip_prefix("steps ")
            .and_then(|v| v.trim().parse::<u64>().ok())
            .ok_or_else(|| bad(format!("bad steps line '{steps_line}'")))?;
        let mut coarse_states = Vec::new();
        for c in &self.coarse {
            let head = lines.next().ok_or_else(|| bad(format!("missing subdomain '{}'", c.id)))?;
            let time = parse_head(head, "fem", &c.id, c.state.d.len()).map_err(bad)?;
            let d = parse_row(lines.next(), "d", c.state.d.len()).map_err(bad)?;
            let v = parse_row(lines.next(), "v", c.state.v.len()).map_err(bad)?;
            coarse_states.push(FemState { d, v, time });
        }
        let mut fine_states = Vec::new();
        for f in &self.fine {
            let head = lines.next().ok_or_else(|| bad(format!("missing subdomain '{}'", f.id)))?;
            let time = parse_head(head, "lbm", &f.id, f.field.f.len()).map_err(bad)?;
            let pops = parse_row(lines.next(), "f", f.field.f.len()).map_err(bad)?;
            fine_states.push((pops, time));
        }
        if lines.next().map(str::trim) != Some("end") {
            return Err(bad("missing end marker".into()));
        }
        for (c, s) in self.coarse.iter_mut().zip(coarse_states) {
            c.state = s;
        }
        for (f, (pops, time)) in self.fine.iter_mut().zip(fine_states) {
            f.field.f = pops;
            f.field.time = time;
        }
        self.steps = steps;
        Ok(())
    }
}

fn write_row(s: &mut String, tag: &str, v: &[f64]) {
    s.push_str(tag);
    for x in v {
        let _ = write!(s, " {x:e}");
    }
    s.push('\n');
}

fn parse_head(line: &str, kind: &str, id: &str, len: usize) -> std::result::Result<f64, String> {
    let parts: Vec<&str> = line.split_whitespace().collect();
    if parts.len() != 4 || parts[0] != kind || parts[1] != id {
        return Err(format!("expected '{kind} {id} ...', found '{line}'"));
    }
    if parts[2].parse::<usize>().ok() != Some(len) {
        return Err(format!("subdomain '{id}' expects {len} values"));
    }
    parts[3].parse::<f64>().map_err(|e| format!("bad time in '{line}': {e}"))
}

fn parse_row(line: Option<&str>, tag: &str, len: usize) -> std::result::Result<Vec<f64>, String> {
    let line = line.ok_or_else(|| format!("missing '{tag}' row"))?;
    let mut it = line.split_whitespace();
    if it.next() != Some(tag) {
        return Err(format!("expected '{tag}' row"));
    }
    let v = it.map(|x| x.parse::<f64>().map_err(|e| format!("bad value '{x}': {e}"))).collect::<std::result::Result<Vec<_>, _>>()?;
    if v.len() != len {
        return Err(format!("'{tag}' row has {} values, expected {len}", v.len()));
    }
    Ok(v)
}
