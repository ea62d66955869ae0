use std::sync::Arc;

use rayon::prelude::*;

use super::mesh::Mesh;
use super::quadrature::{gauss_legendre, triangle_degree4};
use super::sparse::CsrMatrix;
use crate::error::{Error, Result};

pub type VelocityFn = Arc<dyn Fn([f64; 2]) -> [f64; 2] + Send + Sync>;
pub type ScalarFn = Arc<dyn Fn([f64; 2]) -> f64 + Send + Sync>;

/// Weak-form variant.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Formulation {
    #[default]
    Galerkin,
    Supg,
}

impl std::str::FromStr for Formulation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "galerkin" => Ok(Formulation::Galerkin),
            "supg" => Ok(Formulation::Supg),
            other => Err(Error::InvalidArgument(format!("unknown formulation '{other}'"))),
        }
    }
}

/// Coefficients of `du/dt + v.grad u - D lap u = s`.
///
/// `neumann` pairs a facet tag with the natural boundary datum
/// `D grad u . n`, added to the load as `int phi_a g`.
#[derive(Clone)]
pub struct Physics {
    pub diffusivity: f64,
    pub velocity: VelocityFn,
    pub source: Option<ScalarFn>,
    pub neumann: Vec<(String, ScalarFn)>,
}

impl std::fmt::Debug for Physics {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Physics")
            .field("diffusivity", &self.diffusivity)
            .field("source", &self.source.is_some())
            .field("neumann", &self.neumann.iter().map(|(t, _)| t.as_str()).collect::<Vec<_>>())
            .finish()
    }
}

impl Physics {
    pub fn new(diffusivity: f64, velocity: [f64; 2]) -> Self {
        Physics { diffusivity, velocity: Arc::new(move |_| velocity), source: None, neumann: Vec::new() }
    }

    pub fn with_velocity_fn(diffusivity: f64, velocity: VelocityFn) -> Self {
        Physics { diffusivity, velocity, source: None, neumann: Vec::new() }
    }

    pub fn with_source(mut self, s: ScalarFn) -> Self {
        self.source = Some(s);
        self
    }
}

/// Semi-discrete system `M u' + K u = load`.
#[derive(Debug, Clone)]
pub struct FemSystem {
    pub m: CsrMatrix,
    pub k: CsrMatrix,
    pub load: Vec<f64>,
    pub formulation: Formulation,
}

/// `coth(a) - 1/a`, with its series below `1e-2`.
pub fn chi(alpha: f64) -> f64 {
    let a = alpha.abs();
    if a < 1e-2 {
        let a2 = alpha * alpha;
        alpha * (1.0 / 3.0 - a2 * (1.0 / 45.0 - a2 * 2.0 / 945.0))
    } else {
        let c = 1.0 / a.tanh() - 1.0 / a;
        c.copysign(alpha)
    }
}

/// Threshold on the element Peclet number below which the series branch
/// of the stabilisation parameter is used.
pub const SUPG_SERIES_PECLET: f64 = 1e-4;

/// `tau_e = h/(2 p |v|) chi(Pe)` with `Pe = |v| h / (2 p D)`; the small
/// Peclet branch evaluates `h^2/(12 p^2 D) (1 - Pe^2/15)`.
pub fn supg_tau(h: f64, p: usize, vnorm: f64, diffusivity: f64) -> f64 {
    let pf = p as f64;
    let pe = vnorm * h / (2.0 * pf * diffusivity);
    if pe < SUPG_SERIES_PECLET {
        h * h / (12.0 * pf * pf * diffusivity) * (1.0 - pe * pe / 15.0)
    } else {
        h / (2.0 * pf * vnorm) * chi(pe)
    }
}

/// Lagrange basis on `[0, 1]` with equispaced nodes: values, first and
/// second derivatives at `xi`.
pub fn lagrange_1d(p: usize, xi: f64) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    let nodes: Vec<f64> = (0..=p).map(|k| k as f64 / p as f64).collect();
    let mut val = vec![0.0; p + 1];
    let mut d1 = vec![0.0; p + 1];
    let mut d2 = vec![0.0; p + 1];
    for a in 0..=p {
        let denom: f64 = (0..=p).filter(|&m| m != a).map(|m| nodes[a] - nodes[m]).product();
        let others: Vec<usize> = (0..=p).filter(|&m| m != a).collect();
        let prod_except = |skip: &[usize]| -> f64 {
            others.iter().filter(|m| !skip.contains(m)).map(|&m| xi - nodes[m]).product()
        };
        val[a] = prod_except(&[]) / denom;
        d1[a] = others.iter().map(|&m| prod_except(&[m])).sum::<f64>() / denom;
        let mut s2 = 0.0;
        for &m in &others {
            for &k in &others {
                if k != m {
                    s2 += prod_except(&[m, k]);
                }
            }
        }
        d2[a] = s2 / denom;
    }
    (val, d1, d2)
}

struct Local {
    nodes: Vec<usize>,
    m: Vec<f64>,
    k: Vec<f64>,
    f: Vec<f64>,
}

fn element_1d(mesh: &Mesh, e: usize, phys: &Physics, form: Formulation) -> Local {
    let el = &mesh.elements[e];
    let p = mesh.order;
    let n = p + 1;
    let x0 = mesh.nodes[el[0]][0];
    let len = mesh.measure(e);
    let (qx, qw) = gauss_legendre(p + 2);
    let d = phys.diffusivity;
    let tau = if form == Formulation::Supg {
        let vc = (phys.velocity)(mesh.centroid(e));
        supg_tau(len, p, vc[0].abs(), d)
    } else {
        0.0
    };
    let mut loc = Local { nodes: el.clone(), m: vec![0.0; n * n], k: vec![0.0; n * n], f: vec![0.0; n] };
    for (xi, wq) in qx.iter().zip(&qw) {
        let x = [x0 + len * xi, 0.0];
        let (phi, dphi, ddphi) = lagrange_1d(p, *xi);
        let g: Vec<f64> = dphi.iter().map(|v| v / len).collect();
        let gg: Vec<f64> = ddphi.iter().map(|v| v / (len * len)).collect();
        let v = (phys.velocity)(x)[0];
        let s = phys.source.as_ref().map(|s| s(x)).unwrap_or(0.0);
        let w = wq * len;
        for a in 0..n {
            let test_supg = tau * v * g[a];
            for b in 0..n {
                loc.m[a * n + b] += w * (phi[a] * phi[b] + test_supg * phi[b]);
                loc.k[a * n + b] += w * (phi[a] * v * g[b] + d * g[a] * g[b] + test_supg * (v * g[b] - d * gg[b]));
            }
            loc.f[a] += w * (phi[a] + test_supg) * s;
        }
    }
    loc
}

fn element_2d(mesh: &Mesh, e: usize, phys: &Physics, form: Formulation) -> Local {
    let el = &mesh.elements[e];
    let [a, b, c] = [mesh.nodes[el[0]], mesh.nodes[el[1]], mesh.nodes[el[2]]];
    let area = mesh.measure(e);
    let inv2a = 1.0 / (2.0 * area);
    let grads = [
        [(b[1] - c[1]) * inv2a, (c[0] - b[0]) * inv2a],
        [(c[1] - a[1]) * inv2a, (a[0] - c[0]) * inv2a],
        [(a[1] - b[1]) * inv2a, (b[0] - a[0]) * inv2a],
    ];
    let d = phys.diffusivity;
    let tau = if form == Formulation::Supg {
        let vc = (phys.velocity)(mesh.centroid(e));
        let vn = (vc[0] * vc[0] + vc[1] * vc[1]).sqrt();
        let proj: f64 = grads.iter().map(|g| (vc[0] * g[0] + vc[1] * g[1]).abs()).sum();
        let h = if vn > 0.0 && proj > 0.0 { 2.0 * vn / proj } else { mesh.diameter(e) };
        supg_tau(h, 1, vn, d)
    } else {
        0.0
    };
    let mut loc = Local { nodes: el.clone(), m: vec![0.0; 9], k: vec![0.0; 9], f: vec![0.0; 3] };
    for (pt, wq) in triangle_degree4() {
        let lam = [1.0 - pt[0] - pt[1], pt[0], pt[1]];
        let x = [
            a[0] + pt[0] * (b[0] - a[0]) + pt[1] * (c[0] - a[0]),
            a[1] + pt[0] * (b[1] - a[1]) + pt[1] * (c[1] - a[1]),
        ];
        let v = (phys.velocity)(x);
        let s = phys.source.as_ref().map(|s| s(x)).unwrap_or(0.0);
        let w = wq * 2.0 * area;
        let vg: Vec<f64> = grads.iter().map(|g| v[0] * g[0] + v[1] * g[1]).collect();
        for i in 0..3 {
            let test_supg = tau * vg[i];
            for j in 0..3 {
                let diff = d * (grads[i][0] * grads[j][0] + grads[i][1] * grads[j][1]);
                loc.m[i * 3 + j] += w * (lam[i] * lam[j] + test_supg * lam[j]);
                loc.k[i * 3 + j] += w * (lam[i] * vg[j] + diff + test_supg * vg[j]);
            }
            loc.f[i] += w * (lam[i] + test_supg) * s;
        }
    }
    loc
}

/// Assembles mass, transport and load for the chosen formulation.
pub fn assemble(mesh: &Mesh, phys: &Physics, form: Formulation) -> Result<FemSystem> {
    if !(phys.diffusivity > 0.0) {
        return Err(Error::InvalidArgument(format!("diffusivity must be positive (got {})", phys.diffusivity)));
    }
    mesh.validate()?;
    let locals: Vec<Local> = (0..mesh.element_count())
        .into_par_iter()
        .map(|e| if mesh.dim == 1 { element_1d(mesh, e, phys, form) } else { element_2d(mesh, e, phys, form) })
        .collect();
    let n = mesh.node_count();
    let mut mt = Vec::new();
    let mut kt = Vec::new();
    let mut load = vec![0.0; n];
    for loc in &locals {
        let k = loc.nodes.len();
        for a in 0..k {
            load[loc.nodes[a]] += loc.f[a];
            for b in 0..k {
                mt.push((loc.nodes[a], loc.nodes[b], loc.m[a * k + b]));
                kt.push((loc.nodes[a], loc.nodes[b], loc.k[a * k + b]));
            }
        }
    }
    for (tag, g) in &phys.neumann {
        let facets = mesh
            .facet_tags
            .get(tag)
            .ok_or_else(|| Error::InvalidArgument(format!("Neumann data on unknown tag '{tag}'")))?;
        for f in facets {
            if mesh.dim == 1 {
                load[f[0]] += g(mesh.nodes[f[0]]);
            } else {
                let (p0, p1) = (mesh.nodes[f[0]], mesh.nodes[f[1]]);
                let len = ((p1[0] - p0[0]).powi(2) + (p1[1] - p0[1]).powi(2)).sqrt();
                let (qx, qw) = gauss_legendre(3);
                for (t, w) in qx.iter().zip(&qw) {
                    let x = [p0[0] + t * (p1[0] - p0[0]), p0[1] + t * (p1[1] - p0[1])];
                    let gv = g(x) * w * len;
                    load[f[0]] += (1.0 - t) * gv;
                    load[f[1]] += t * gv;
                }
            }
        }
    }
    Ok(FemSystem { m: CsrMatrix::from_triplets(n, n, mt), k: CsrMatrix::from_triplets(n, n, kt), load, formulation: form })
}

pub fn assemble_galerkin(mesh: &Mesh, phys: &Physics) -> Result<FemSystem> {
    assemble(mesh, phys, Formulation::Galerkin)
}

pub fn assemble_supg(mesh: &Mesh, phys: &Physics) -> Result<FemSystem> {
    assemble(mesh, phys, Formulation::Supg)
}
