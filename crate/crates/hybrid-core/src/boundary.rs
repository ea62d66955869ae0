//! Wall closures for the populations that stream in from outside the domain.
//!
//! The entropy closures pick the unknown populations (directions with
//! `e_i . n < 0`) by minimising `sum f log(f/w)` under a concentration or a
//! normal-flux constraint. Bounce-back and specular reflection are provided
//! as baselines.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::lattice::LatticeModel;
use crate::lbm::LbmGrid;

/// Closure family.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundaryKind {
    EntropyDirichlet,
    EntropyNeumann,
    BounceBack,
    SpecularReflection,
}

impl std::str::FromStr for BoundaryKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "entropy-dirichlet" | "dirichlet" => Ok(BoundaryKind::EntropyDirichlet),
            "entropy-neumann" | "neumann" => Ok(BoundaryKind::EntropyNeumann),
            "bounce-back" => Ok(BoundaryKind::BounceBack),
            "specular" | "specular-reflection" => Ok(BoundaryKind::SpecularReflection),
            other => Err(Error::InvalidArgument(format!("unknown boundary kind '{other}'"))),
        }
    }
}

/// What the Dirichlet closure does when the known populations already
/// carry more than the prescribed concentration.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DirichletExcess {
    /// Unknowns set to zero and knowns scaled by `u_p / sum(known)`, the
    /// minimiser of the relative entropy onto `sum f = u_p`.
    #[default]
    Rescale,
    /// Unknowns set to zero; the constraint is left unmet.
    Clamp,
}

/// Prescribed concentration or outward normal flux.
#[derive(Clone, Default)]
pub enum BoundaryValue {
    #[default]
    None,
    Constant(f64),
    PerNode(Vec<f64>),
    Function(Arc<dyn Fn([f64; 2], f64) -> f64 + Send + Sync>),
}

impl fmt::Debug for BoundaryValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BoundaryValue::None => write!(f, "None"),
            BoundaryValue::Constant(c) => write!(f, "Constant({c})"),
            BoundaryValue::PerNode(v) => write!(f, "PerNode(len {})", v.len()),
            BoundaryValue::Function(_) => write!(f, "Function"),
        }
    }
}

impl BoundaryValue {
    fn at(&self, k: usize, x: [f64; 2], t: f64) -> Result<f64> {
        match self {
            BoundaryValue::None => Err(Error::InvalidArgument("closure needs a prescribed value".into())),
            BoundaryValue::Constant(c) => Ok(*c),
            BoundaryValue::PerNode(v) => v
                .get(k)
                .copied()
                .ok_or_else(|| Error::InvalidArgument(format!("no prescribed value for patch entry {k}"))),
            BoundaryValue::Function(g) => Ok(g(x, t)),
        }
    }
}

/// Event counters for the closures.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct BoundaryStats {
    pub closures: u64,
    pub dirichlet_excess_events: u64,
    pub neumann_zero_mass_events: u64,
    pub max_flux_residual: f64,
}

impl BoundaryStats {
    pub fn merge(&mut self, o: &BoundaryStats) {
        self.closures += o.closures;
        self.dirichlet_excess_events += o.dirichlet_excess_events;
        self.neumann_zero_mass_events += o.neumann_zero_mass_events;
        self.max_flux_residual = self.max_flux_residual.max(o.max_flux_residual);
    }
}

/// Outcome of a single-node closure.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ClosureEvent {
    Exact,
    DirichletExcess,
    ZeroMass,
}

/// A set of wall nodes sharing one closure.
#[derive(Debug, Clone)]
pub struct BoundaryPatch {
    pub name: String,
    pub kind: BoundaryKind,
    pub nodes: Vec<usize>,
    pub normals: Vec<[f64; 2]>,
    pub value: BoundaryValue,
    pub dirichlet_excess: DirichletExcess,
}

impl BoundaryPatch {
    pub fn new(name: impl Into<String>, kind: BoundaryKind, nodes: Vec<usize>, normals: Vec<[f64; 2]>, value: BoundaryValue) -> Result<Self> {
        if nodes.len() != normals.len() {
            return Err(Error::InvalidArgument("one normal per boundary node required".into()));
        }
        let needs_value = matches!(kind, BoundaryKind::EntropyDirichlet | BoundaryKind::EntropyNeumann);
        if needs_value && matches!(value, BoundaryValue::None) {
            return Err(Error::InvalidArgument(format!("{kind:?} patch needs a prescribed value")));
        }
        if let BoundaryValue::PerNode(v) = &value {
            if v.len() != nodes.len() {
                return Err(Error::InvalidArgument("per-node values must match the node list".into()));
            }
        }
        Ok(BoundaryPatch { name: name.into(), kind, nodes, normals, value, dirichlet_excess: DirichletExcess::default() })
    }

    pub fn with_excess(mut self, mode: DirichletExcess) -> Self {
        self.dirichlet_excess = mode;
        self
    }

    /// Replaces per-node prescribed values in place.
    pub fn set_values(&mut self, values: &[f64]) -> Result<()> {
        if values.len() != self.nodes.len() {
            return Err(Error::InvalidArgument("value count does not match the node list".into()));
        }
        match &mut self.value {
            BoundaryValue::PerNode(v) => v.copy_from_slice(values),
            other => *other = BoundaryValue::PerNode(values.to_vec()),
        }
        Ok(())
    }

    /// Applies the closure at every node. Flux values are converted to
    /// lattice units with `flux_scale = dt/dx`.
    pub fn apply(&self, model: &LatticeModel, grid: &LbmGrid, f: &mut [f64], t: f64, flux_scale: f64) -> Result<BoundaryStats> {
        let q = model.q();
        let mut stats = BoundaryStats::default();
        let mut buf = [0.0f64; 9];
        for (k, (&node, normal)) in self.nodes.iter().zip(&self.normals).enumerate() {
            let n = &normal[..model.dim];
            let pops = &mut f[node * q..(node + 1) * q];
            let x = grid.coords(node);
            let unknown = model.incoming_set(n)?;
            let event = match self.kind {
                BoundaryKind::EntropyDirichlet => {
                    let up = self.value.at(k, x, t)?;
                    dirichlet_in_place(model, &unknown, pops, up, self.dirichlet_excess)?
                }
                BoundaryKind::EntropyNeumann => {
                    let qp = self.value.at(k, x, t)? * flux_scale;
                    let (ev, res) = neumann_in_place(model, n, &unknown, pops, qp)
                        .map_err(|e| relabel_node(e, node))?;
                    stats.max_flux_residual = stats.max_flux_residual.max(res);
                    ev
                }
                BoundaryKind::BounceBack => {
                    buf[..q].copy_from_slice(pops);
                    for &i in &unknown {
                        pops[i] = buf[model.opposite[i]];
                    }
                    ClosureEvent::Exact
                }
                BoundaryKind::SpecularReflection => {
                    buf[..q].copy_from_slice(pops);
                    for &i in &unknown {
                        pops[i] = buf[model.mirror(i, n)?];
                    }
                    ClosureEvent::Exact
                }
            };
            stats.closures += 1;
            match event {
                ClosureEvent::DirichletExcess => stats.dirichlet_excess_events += 1,
                ClosureEvent::ZeroMass => stats.neumann_zero_mass_events += 1,
                ClosureEvent::Exact => {}
            }
        }
        if stats.neumann_zero_mass_events > 0 {
            log::debug!("{}: {} zero-mass Neumann closures", self.name, stats.neumann_zero_mass_events);
        }
        Ok(stats)
    }
}

fn relabel_node(e: Error, node: usize) -> Error {
    match e {
        Error::InfeasibleFlux { detail, .. } => Error::InfeasibleFlux { node, detail },
        other => other.context(format!("node {node}")),
    }
}

fn dirichlet_in_place(model: &LatticeModel, unknown: &[usize], pops: &mut [f64], up: f64, mode: DirichletExcess) -> Result<ClosureEvent> {
    if unknown.is_empty() {
        return Err(Error::InvalidArgument("normal yields no incoming directions".into()));
    }
    let q = model.q();
    let mut is_unknown = [false; 9];
    for &i in unknown {
        is_unknown[i] = true;
    }
    let known: f64 = (0..q).filter(|&i| !is_unknown[i]).map(|i| pops[i]).sum();
    let wsum: f64 = unknown.iter().map(|&i| model.weights[i]).sum();
    let deficit = up - known;
    if deficit >= 0.0 {
        for &i in unknown {
            pops[i] = model.weights[i] / wsum * deficit;
        }
        return Ok(ClosureEvent::Exact);
    }
    for &i in unknown {
        pops[i] = 0.0;
    }
    if mode == DirichletExcess::Rescale {
        let s = if known > 0.0 { up.max(0.0) / known } else { 0.0 };
        for i in 0..q {
            if !is_unknown[i] {
                pops[i] *= s;
            }
        }
    }
    Ok(ClosureEvent::DirichletExcess)
}

/// Entropy Dirichlet closure for one node.
///
/// `pops` holds the node's populations; entries in the incoming set are
/// ignored and overwritten. Returns the closed vector and whether the
/// known populations exceeded `u_p`.
pub fn entropy_dirichlet(pops: &[f64], model: &LatticeModel, normal: &[f64], u_p: f64, mode: DirichletExcess) -> Result<(Vec<f64>, ClosureEvent)> {
    let unknown = model.incoming_set(normal)?;
    let mut out = pops.to_vec();
    let ev = dirichlet_in_place(model, &unknown, &mut out, u_p, mode)?;
    Ok((out, ev))
}

/// Maximum Newton/bisection iterations for the flux multiplier.
pub const NEUMANN_MAX_ITER: usize = 100;

/// Solves `sum_{M-} w_i b_i exp(gamma b_i - 1) = p` with `b_i = |e_i . n|`
/// for `gamma`, by safeguarded Newton on the logarithm.
fn solve_gamma(w: &[f64], b: &[f64], p: f64, tol: f64) -> Result<f64> {
    let lhs = |g: f64| -> f64 { w.iter().zip(b).map(|(wi, bi)| wi * bi * (g * bi - 1.0).exp()).sum() };
    // log-residual and its derivative (the b-weighted mean of b)
    let phi = |g: f64| -> (f64, f64) {
        let bmax = b.iter().cloned().fold(0.0, f64::max);
        let mut s = 0.0;
        let mut ds = 0.0;
        for (wi, bi) in w.iter().zip(b) {
            let term = wi * bi * ((g * bi - 1.0) - (g * bmax - 1.0)).exp();
            s += term;
            ds += term * bi;
        }
        (s.ln() + (g * bmax - 1.0) - p.ln(), ds / s)
    };
    let (mut lo, mut hi) = (-50.0f64, 50.0f64);
    let mut grow = 0;
    while phi(lo).0 > 0.0 {
        lo *= 2.0;
        grow += 1;
        if grow > 60 {
            return Err(Error::Numeric("flux multiplier bracket did not close below".into()));
        }
    }
    while phi(hi).0 < 0.0 {
        hi *= 2.0;
        grow += 1;
        if grow > 60 {
            return Err(Error::Numeric("flux multiplier bracket did not close above".into()));
        }
    }
    let mut g = 0.0f64.clamp(lo, hi);
    for _ in 0..NEUMANN_MAX_ITER {
        let (r, dr) = phi(g);
        if r == 0.0 {
            return Ok(g);
        }
        if r < 0.0 {
            lo = g;
        } else {
            hi = g;
        }
        let mut next = g - r / dr;
        if !(next > lo && next < hi) || !next.is_finite() {
            next = 0.5 * (lo + hi);
        }
        let converged = (next - g).abs() <= 1e-15 * (1.0 + g.abs());
        g = next;
        if converged && (lhs(g) - p).abs() <= tol {
            return Ok(g);
        }
    }
    if (lhs(g) - p).abs() <= tol {
        return Ok(g);
    }
    Err(Error::Numeric(format!(
        "flux multiplier did not converge in {NEUMANN_MAX_ITER} iterations (residual {:e})",
        (lhs(g) - p).abs()
    )))
}

fn neumann_in_place(model: &LatticeModel, normal: &[f64], unknown: &[usize], pops: &mut [f64], q_lat: f64) -> Result<(ClosureEvent, f64)> {
    if unknown.is_empty() {
        return Err(Error::InvalidArgument("normal yields no incoming directions".into()));
    }
    let q = model.q();
    let mut is_unknown = [false; 9];
    for &i in unknown {
        is_unknown[i] = true;
    }
    let mut known_flux = 0.0;
    let mut scale = q_lat.abs();
    for i in (0..q).filter(|&i| !is_unknown[i]) {
        let a = model.dot(i, normal);
        known_flux += a * pops[i];
        scale += (a * pops[i]).abs();
    }
    let rhs = q_lat - known_flux;
    if rhs > 1e-14 * scale.max(f64::MIN_POSITIVE) {
        return Err(Error::InfeasibleFlux {
            node: usize::MAX,
            detail: format!("required incoming normal flux {rhs:e} cannot be carried by non-negative populations"),
        });
    }
    if rhs >= -1e-300 {
        for &i in unknown {
            pops[i] = 0.0;
        }
        return Ok((ClosureEvent::ZeroMass, rhs.abs()));
    }
    let w: Vec<f64> = unknown.iter().map(|&i| model.weights[i]).collect();
    let b: Vec<f64> = unknown.iter().map(|&i| -model.dot(i, normal)).collect();
    let p = -rhs;
    let tol = 1e-12 * p.max(1.0);
    let gamma = solve_gamma(&w, &b, p, tol)?;
    let mut flux = known_flux;
    for (k, &i) in unknown.iter().enumerate() {
        pops[i] = w[k] * (gamma * b[k] - 1.0).exp();
        flux -= b[k] * pops[i];
    }
    Ok((ClosureEvent::Exact, (flux - q_lat).abs()))
}

/// Entropy Neumann closure for one node, `q_lattice` in lattice units
/// (outward normal flux times `dt/dx`).
///
/// The unknowns take the form `w_i exp(-1 - gamma e_i.n)` with the
/// multiplier chosen so that the total normal flux equals `q_lattice`.
pub fn entropy_neumann(pops: &[f64], model: &LatticeModel, normal: &[f64], q_lattice: f64) -> Result<(Vec<f64>, ClosureEvent)> {
    let unknown = model.incoming_set(normal)?;
    let mut out = pops.to_vec();
    let (ev, _) = neumann_in_place(model, &normal[..model.dim], &unknown, &mut out, q_lattice)?;
    Ok((out, ev))
}

/// Incoming populations copied from their opposite directions.
pub fn bounce_back(pops: &[f64], model: &LatticeModel, normal: &[f64]) -> Result<Vec<f64>> {
    let unknown = model.incoming_set(normal)?;
    let mut out = pops.to_vec();
    for i in unknown {
        out[i] = pops[model.opposite[i]];
    }
    Ok(out)
}

/// Incoming populations copied from their mirror images about the wall.
pub fn specular_reflection(pops: &[f64], model: &LatticeModel, normal: &[f64]) -> Result<Vec<f64>> {
    let unknown = model.incoming_set(normal)?;
    let mut out = pops.to_vec();
    for i in unknown {
        out[i] = pops[model.mirror(i, normal)?];
    }
    Ok(out)
}

/// Total normal flux `sum f_i e_i . n` in lattice units.
pub fn normal_flux(pops: &[f64], model: &LatticeModel, normal: &[f64]) -> f64 {
    pops.iter().enumerate().map(|(i, f)| f * model.dot(i, normal)).sum()
}

/// Assignment of closures to the faces of a box domain.
#[derive(Debug, Clone)]
pub struct FaceSpec {
    pub kind: BoundaryKind,
    pub value: BoundaryValue,
}

impl FaceSpec {
    pub fn new(kind: BoundaryKind, value: BoundaryValue) -> Self {
        FaceSpec { kind, value }
    }

    pub fn zero_flux() -> Self {
        FaceSpec::new(BoundaryKind::EntropyNeumann, BoundaryValue::Constant(0.0))
    }

    fn priority(&self) -> u8 {
        match self.kind {
            BoundaryKind::EntropyDirichlet => 3,
            BoundaryKind::EntropyNeumann => 2,
            BoundaryKind::SpecularReflection => 1,
            BoundaryKind::BounceBack => 0,
        }
    }
}

fn face_normal(face: usize) -> [f64; 2] {
    match face {
        0 => [-1.0, 0.0],
        1 => [1.0, 0.0],
        2 => [0.0, -1.0],
        _ => [0.0, 1.0],
    }
}

/// Patches for the faces of a box grid, ordered x-min, x-max, y-min, y-max.
///
/// `None` leaves a face without a closure (use for periodic axes). A corner
/// node belongs to the adjacent face of higher priority (Dirichlet, then
/// Neumann, specular, bounce-back; ties go to the y-faces) and uses the
/// normalised sum of both face normals. Solid nodes are skipped.
pub fn box_patches(grid: &LbmGrid, faces: &[Option<FaceSpec>]) -> Result<Vec<BoundaryPatch>> {
    let nfaces = 2 * grid.dim;
    if faces.len() != nfaces {
        return Err(Error::InvalidArgument(format!("expected {nfaces} face specs, got {}", faces.len())));
    }
    let mut owner: Vec<Vec<(usize, [f64; 2])>> = vec![Vec::new(); nfaces];
    let mut seen = vec![usize::MAX; grid.node_count()];
    let mut order: Vec<usize> = (0..nfaces).collect();
    order.sort_by_key(|&fi| std::cmp::Reverse((faces[fi].as_ref().map(|s| s.priority()).unwrap_or(0), fi)));
    for &fi in &order {
        let Some(_) = &faces[fi] else { continue };
        for n in grid.face_nodes(fi) {
            if grid.solid[n] || seen[n] != usize::MAX {
                continue;
            }
            seen[n] = fi;
            let mut nv = face_normal(fi);
            if grid.dim == 2 {
                let (i, j) = grid.ij(n);
                let on_x = (i == 0 && faces[0].is_some()) || (i == grid.nx() - 1 && faces[1].is_some());
                let on_y = (j == 0 && faces[2].is_some()) || (j == grid.ny() - 1 && faces[3].is_some());
                if on_x && on_y {
                    let sx = if i == 0 { -1.0 } else { 1.0 };
                    let sy = if j == 0 { -1.0 } else { 1.0 };
                    let r = std::f64::consts::FRAC_1_SQRT_2;
                    nv = [sx * r, sy * r];
                }
            }
            owner[fi].push((n, nv));
        }
    }
    let names = ["x-min", "x-max", "y-min", "y-max"];
    let mut patches = Vec::new();
    for &fi in &order {
        let Some(spec) = &faces[fi] else { continue };
        if owner[fi].is_empty() {
            continue;
        }
        let (nodes, normals): (Vec<usize>, Vec<[f64; 2]>) = owner[fi].iter().cloned().unzip();
        let value = match &spec.value {
            BoundaryValue::PerNode(v) => {
                let face = grid.face_nodes(fi);
                BoundaryValue::PerNode(
                    nodes.iter().map(|n| v[face.iter().position(|m| m == n).expect("face node")]).collect(),
                )
            }
            other => other.clone(),
        };
        patches.push(BoundaryPatch::new(names[fi], spec.kind, nodes, normals, value)?);
    }
    Ok(patches)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{builtin_model, ModelName};
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn h_of(model: &LatticeModel, f: &[f64]) -> f64 {
        f.iter().zip(&model.weights).filter(|(x, _)| **x > 0.0).map(|(x, w)| x * (x / w).ln()).sum()
    }

    #[test]
    fn d1q2_dirichlet_single_unknown() {
        let m = builtin_model(ModelName::D1Q2);
        let (f, ev) = entropy_dirichlet(&[f64::NAN, 0.3], &m, &[-1.0], 1.0, DirichletExcess::Rescale).unwrap();
        assert_relative_eq!(f[0], 0.7, epsilon = 1e-15);
        assert_eq!(ev, ClosureEvent::Exact);
    }

    #[test]
    fn d2q9_bottom_wall_split() {
        let m = builtin_model(ModelName::D2Q9);
        let mut pops = vec![0.0; 9];
        pops[0] = 0.5;
        pops[1] = 0.1;
        pops[3] = 0.1;
        pops[4] = 0.05;
        pops[7] = 0.025;
        pops[8] = 0.025;
        let (f, _) = entropy_dirichlet(&pops, &m, &[0.0, -1.0], 1.0, DirichletExcess::Rescale).unwrap();
        assert_relative_eq!(f[2], 2.0 / 15.0, epsilon = 1e-15);
        assert_relative_eq!(f[5], 1.0 / 30.0, epsilon = 1e-15);
        assert_relative_eq!(f[6], 1.0 / 30.0, epsilon = 1e-15);
        assert_relative_eq!(f.iter().sum::<f64>(), 1.0, epsilon = 1e-15);
    }

    /// Minimises H over the unknowns on a grid of the mass simplex.
    fn numeric_dirichlet_minimiser(m: &LatticeModel, unknown: &[usize], deficit: f64) -> Vec<f64> {
        let w: Vec<f64> = unknown.iter().map(|&i| m.weights[i]).collect();
        let obj = |x: &[f64]| -> f64 {
            x.iter().zip(&w).filter(|(a, _)| **a > 0.0).map(|(a, wi)| a * (a / wi).ln()).sum()
        };
        let n = 400;
        let mut best = (f64::INFINITY, vec![0.0; 3]);
        for a in 0..=n {
            for b in 0..=(n - a) {
                let x = [deficit * a as f64 / n as f64, deficit * b as f64 / n as f64, deficit * (n - a - b) as f64 / n as f64];
                let v = obj(&x);
                if v < best.0 {
                    best = (v, x.to_vec());
                }
            }
        }
        best.1
    }

    #[test]
    fn dirichlet_matches_numeric_minimiser() {
        let m = builtin_model(ModelName::D2Q9);
        let unknown = m.incoming_set(&[0.0, -1.0]).unwrap();
        let x = numeric_dirichlet_minimiser(&m, &unknown, 0.2);
        let want = [2.0 / 15.0, 1.0 / 30.0, 1.0 / 30.0];
        for (a, b) in x.iter().zip(&want) {
            assert!((a - b).abs() < 1.5e-3, "{a} vs {b}");
        }
    }

    #[test]
    fn dirichlet_excess_modes() {
        let m = builtin_model(ModelName::D2Q9);
        let pops = vec![0.4, 0.2, 0.1, 0.2, 0.3, 0.1, 0.1, 0.1, 0.1];
        let (f, ev) = entropy_dirichlet(&pops, &m, &[0.0, -1.0], 0.5, DirichletExcess::Clamp).unwrap();
        assert_eq!(ev, ClosureEvent::DirichletExcess);
        assert_eq!((f[2], f[5], f[6]), (0.0, 0.0, 0.0));
        let (g, _) = entropy_dirichlet(&pops, &m, &[0.0, -1.0], 0.5, DirichletExcess::Rescale).unwrap();
        assert_relative_eq!(g.iter().sum::<f64>(), 0.5, epsilon = 1e-15);
        assert!(g.iter().all(|&x| x >= 0.0));
    }

    #[test]
    fn neumann_d1q2_reduces_to_bounce_back() {
        let m = builtin_model(ModelName::D1Q2);
        let (f, _) = entropy_neumann(&[0.0, 0.4], &m, &[-1.0], 0.0).unwrap();
        assert!((f[0] - 0.4).abs() < 1e-14);
        let bb = bounce_back(&[0.0, 0.4], &m, &[-1.0]).unwrap();
        assert!((f[0] - bb[0]).abs() < 1e-14);
    }

    #[test]
    fn neumann_d2q5_flat_wall() {
        let m = builtin_model(ModelName::D2Q5);
        let pops = vec![0.3, 0.12, 0.2, 0.15, 0.0];
        // bottom wall: unknown is N (index 2), outgoing S (index 4)
        let pops = { let mut p = pops; p[4] = 0.17; p };
        let (f, _) = entropy_neumann(&pops, &m, &[0.0, -1.0], 0.0).unwrap();
        assert!((f[2] - 0.17).abs() < 1e-14);
    }

    #[test]
    fn neumann_zero_mass() {
        let m = builtin_model(ModelName::D2Q9);
        let (f, ev) = entropy_neumann(&[0.0; 9], &m, &[0.0, -1.0], 0.0).unwrap();
        assert_eq!(ev, ClosureEvent::ZeroMass);
        assert!(f.iter().all(|&x| x == 0.0));
    }

    #[test]
    fn neumann_infeasible() {
        let m = builtin_model(ModelName::D2Q9);
        let r = entropy_neumann(&[0.0; 9], &m, &[0.0, -1.0], 0.1);
        assert!(matches!(r, Err(Error::InfeasibleFlux { .. })));
    }

    #[test]
    fn neumann_corner_flux() {
        let m = builtin_model(ModelName::D2Q9);
        let r = std::f64::consts::FRAC_1_SQRT_2;
        let n = [-r, -r];
        let pops = vec![0.4, 0.1, 0.1, 0.12, 0.13, 0.03, 0.02, 0.04, 0.03];
        for q in [0.0, -0.05, 0.01] {
            let (f, _) = entropy_neumann(&pops, &m, &n, q).unwrap();
            assert!((normal_flux(&f, &m, &n) - q).abs() < 1e-12);
        }
    }

    #[test]
    fn baselines() {
        let m = builtin_model(ModelName::D2Q9);
        let pops: Vec<f64> = (0..9).map(|i| 0.01 * (i + 1) as f64).collect();
        let n = [0.0, -1.0];
        let bb = bounce_back(&pops, &m, &n).unwrap();
        let sp = specular_reflection(&pops, &m, &n).unwrap();
        for i in m.incoming_set(&n).unwrap() {
            assert_eq!(bb[i], pops[m.opposite[i]]);
        }
        let ne = m.index_of([1, 1]).unwrap();
        let se = m.index_of([1, -1]).unwrap();
        assert_eq!(sp[ne], pops[se]);
        assert_eq!(sp[2], pops[4]);
        assert_eq!(sp[1], pops[1]);
        assert!(bounce_back(&[0.0; 9], &m, &n).unwrap().iter().all(|&x| x == 0.0));
    }

    #[test]
    fn box_patch_corners() {
        let g = LbmGrid::new(&[0.0, 0.0], 0.25, &[5, 5]).unwrap();
        let faces = vec![
            Some(FaceSpec::zero_flux()),
            Some(FaceSpec::new(BoundaryKind::EntropyDirichlet, BoundaryValue::Constant(0.0))),
            Some(FaceSpec::new(BoundaryKind::EntropyDirichlet, BoundaryValue::Constant(0.0))),
            Some(FaceSpec::zero_flux()),
        ];
        let p = box_patches(&g, &faces).unwrap();
        let total: usize = p.iter().map(|x| x.nodes.len()).sum();
        assert_eq!(total, 16);
        let corner = g.index(0, 0);
        let owner = p.iter().find(|x| x.nodes.contains(&corner)).unwrap();
        assert_eq!(owner.kind, BoundaryKind::EntropyDirichlet);
        let k = owner.nodes.iter().position(|&n| n == corner).unwrap();
        assert_relative_eq!(owner.normals[k][0], -std::f64::consts::FRAC_1_SQRT_2);
    }

    proptest! {
        #[test]
        fn dirichlet_nonnegative_and_exact(known in proptest::collection::vec(0.0f64..1.0, 9), up in 0.0f64..3.0) {
            let m = builtin_model(ModelName::D2Q9);
            for n in [[0.0, -1.0], [1.0, 0.0], [-std::f64::consts::FRAC_1_SQRT_2, std::f64::consts::FRAC_1_SQRT_2]] {
                let unknown = m.incoming_set(&n).unwrap();
                let ks: f64 = (0..9).filter(|i| !unknown.contains(i)).map(|i| known[i]).sum();
                let (f, _) = entropy_dirichlet(&known, &m, &n, up, DirichletExcess::Rescale).unwrap();
                prop_assert!(f.iter().all(|&x| x >= 0.0));
                prop_assert!((f.iter().sum::<f64>() - up).abs() <= 1e-13 * (1.0 + up));
                if up >= ks {
                    // KKT: unknowns proportional to weights
                    let r0 = f[unknown[0]] / m.weights[unknown[0]];
                    for &i in &unknown {
                        prop_assert!((f[i] / m.weights[i] - r0).abs() <= 1e-12 * (1.0 + r0));
                    }
                }
            }
        }

        #[test]
        fn dirichlet_kkt_beats_perturbations(known in proptest::collection::vec(0.0f64..0.2, 9), extra in 0.01f64..1.0, d0 in -1.0f64..1.0, d1 in -1.0f64..1.0) {
            let m = builtin_model(ModelName::D2Q9);
            let n = [0.0, 1.0];
            let unknown = m.incoming_set(&n).unwrap();
            let ks: f64 = (0..9).filter(|i| !unknown.contains(i)).map(|i| known[i]).sum();
            let (f, _) = entropy_dirichlet(&known, &m, &n, ks + extra, DirichletExcess::Rescale).unwrap();
            let mut g = f.clone();
            let eps = 1e-3 * extra;
            g[unknown[0]] += eps * d0;
            g[unknown[1]] += eps * d1;
            g[unknown[2]] -= eps * (d0 + d1);
            if g.iter().all(|&x| x >= 0.0) {
                prop_assert!(h_of(&m, &g) >= h_of(&m, &f) - 1e-15);
            }
        }

        #[test]
        fn neumann_flux_residual(known in proptest::collection::vec(0.0f64..1.0, 9), qfrac in -1.0f64..0.9, diag in proptest::bool::ANY) {
            let m = builtin_model(ModelName::D2Q9);
            let r = std::f64::consts::FRAC_1_SQRT_2;
            let n = if diag { [r, -r] } else { [0.0, -1.0] };
            let unknown = m.incoming_set(&n).unwrap();
            let out: f64 = (0..9).filter(|i| !unknown.contains(i)).map(|i| known[i] * m.dot(i, &n)).sum();
            let q = qfrac * out;
            let (f, _) = entropy_neumann(&known, &m, &n, q).unwrap();
            prop_assert!(f.iter().all(|&x| x >= 0.0));
            prop_assert!((normal_flux(&f, &m, &n) - q).abs() <= 1e-10);
        }

        #[test]
        fn neumann_d1q2_equals_bounce_back(fm in 0.0f64..10.0) {
            let m = builtin_model(ModelName::D1Q2);
            let (f, _) = entropy_neumann(&[0.0, fm], &m, &[-1.0], 0.0).unwrap();
            prop_assert!((f[0] - fm).abs() <= 1e-14 * fm.max(1.0));
            let (g, _) = entropy_neumann(&[fm, 0.0], &m, &[1.0], 0.0).unwrap();
            prop_assert!((g[1] - fm).abs() <= 1e-14 * fm.max(1.0));
        }
    }
}
