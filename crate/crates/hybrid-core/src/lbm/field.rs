use rayon::prelude::*;

use super::{check_mach, equilibrium_lattice, node_h, relaxation_time, EquilibriumForm, LbmGrid};
use crate::boundary::{BoundaryPatch, BoundaryStats};
use crate::error::{Error, Result};
use crate::lattice::LatticeModel;

const SRC_OUTSIDE: u32 = u32::MAX;
const SRC_SOLID: u32 = u32::MAX - 1;
/// Grids below this size step on the calling thread.
const PAR_MIN_NODES: usize = 16384;

/// Physical parameters of a lattice Boltzmann field.
#[derive(Debug, Clone, PartialEq)]
pub struct LbmParams {
    pub diffusivity: f64,
    pub dt: f64,
    pub equilibrium: EquilibriumForm,
    /// Reject `tau < 1`.
    pub require_nonnegativity: bool,
}

impl LbmParams {
    pub fn new(diffusivity: f64, dt: f64) -> Self {
        LbmParams { diffusivity, dt, equilibrium: EquilibriumForm::Standard, require_nonnegativity: true }
    }
}

/// Counters accumulated over the life of a field.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct StepStats {
    pub steps: u64,
    pub boundary: BoundaryStats,
    /// Mass carried out of the box by streaming, summed over steps.
    pub escaped_mass: f64,
}

/// Populations on a uniform grid together with the scheme parameters.
#[derive(Debug, Clone)]
pub struct LbmField {
    pub grid: LbmGrid,
    pub model: LatticeModel,
    pub f: Vec<f64>,
    post: Vec<f64>,
    pub dt: f64,
    pub tau: f64,
    pub diffusivity: f64,
    pub equilibrium: EquilibriumForm,
    /// Physical advection velocity per node.
    pub velocity: Vec<[f64; 2]>,
    vel_lattice: Vec<[f64; 2]>,
    /// `f_eq = u * eq_coeff[n * q + i]`, built for `eq_form`.
    eq_coeff: Vec<f64>,
    eq_form: EquilibriumForm,
    sources: Vec<u32>,
    /// Flat index into the post-collision array per population; `SRC_SOLID` gives zero.
    gather: Vec<u32>,
    escapes: Vec<usize>,
    pub time: f64,
    pub stats: StepStats,
}

fn relax<const Q: usize>(f: &mut [f64], coeff: &[f64], solid: &[bool], omega: f64) {
    let body = |((fs, cs), &s): ((&mut [f64], &[f64]), &bool)| {
        if s {
            return;
        }
        let fs: &mut [f64; Q] = fs.try_into().expect("chunk of Q");
        let cs: &[f64; Q] = cs.try_into().expect("chunk of Q");
        let u: f64 = fs.iter().sum();
        for i in 0..Q {
            fs[i] += omega * (u * cs[i] - fs[i]);
        }
    };
    if solid.len() < PAR_MIN_NODES {
        f.chunks_exact_mut(Q).zip(coeff.chunks_exact(Q)).zip(solid).for_each(body);
    } else {
        f.par_chunks_exact_mut(Q).zip(coeff.par_chunks_exact(Q)).zip(solid.par_iter()).for_each(body);
    }
}

fn relax_dyn(f: &mut [f64], coeff: &[f64], solid: &[bool], omega: f64, q: usize) {
    for ((fs, cs), &s) in f.chunks_exact_mut(q).zip(coeff.chunks_exact(q)).zip(solid) {
        if s {
            continue;
        }
        let u: f64 = fs.iter().sum();
        for (fi, c) in fs.iter_mut().zip(cs) {
            *fi += omega * (u * c - *fi);
        }
    }
}

impl LbmField {
    /// Equilibrium field for initial concentration `u0` and per-node velocity.
    pub fn from_equilibrium(
        grid: LbmGrid,
        model: LatticeModel,
        params: &LbmParams,
        velocity: Vec<[f64; 2]>,
        u0: &[f64],
    ) -> Result<Self> {
        if grid.dim != model.dim {
            return Err(Error::InvalidArgument(format!(
                "{} model on a {}-dimensional grid",
                model.name, grid.dim
            )));
        }
        let n = grid.node_count();
        if velocity.len() != n || u0.len() != n {
            return Err(Error::InvalidArgument(format!(
                "velocity/initial data lengths {}/{} do not match {n} nodes",
                velocity.len(),
                u0.len()
            )));
        }
        let h = grid.spacing;
        let c = h / params.dt;
        let cs2 = model.cs2_coeff * c * c;
        let tau = relaxation_time(params.diffusivity, cs2, params.dt)?;
        if params.require_nonnegativity && tau < 1.0 - 1e-12 {
            let dt_min = super::min_admissible_dt(params.diffusivity, model.cs2_coeff, h)?;
            return Err(Error::StabilityViolation(format!(
                "tau = {tau:.6} < 1; the time step must be at least {dt_min:e}"
            )));
        }
        let mut field = LbmField {
            f: vec![0.0; n * model.q()],
            post: vec![0.0; n * model.q()],
            dt: params.dt,
            tau,
            diffusivity: params.diffusivity,
            equilibrium: params.equilibrium,
            velocity: Vec::new(),
            vel_lattice: Vec::new(),
            eq_coeff: Vec::new(),
            eq_form: params.equilibrium,
            sources: Vec::new(),
            gather: Vec::new(),
            escapes: Vec::new(),
            time: 0.0,
            stats: StepStats::default(),
            grid,
            model,
        };
        field.set_velocity(velocity)?;
        field.build_sources();
        field.reset_to_equilibrium(u0)?;
        Ok(field)
    }

    /// Uniform velocity helper.
    pub fn uniform_velocity(grid: &LbmGrid, v: [f64; 2]) -> Vec<[f64; 2]> {
        (0..grid.node_count()).map(|n| if grid.solid[n] { [0.0; 2] } else { v }).collect()
    }

    pub fn q(&self) -> usize {
        self.model.q()
    }

    /// Lattice speed `dx/dt`.
    pub fn lattice_speed(&self) -> f64 {
        self.grid.spacing / self.dt
    }

    /// Physical squared sound speed.
    pub fn cs2(&self) -> f64 {
        let c = self.lattice_speed();
        self.model.cs2_coeff * c * c
    }

    pub fn set_velocity(&mut self, velocity: Vec<[f64; 2]>) -> Result<()> {
        if velocity.len() != self.grid.node_count() {
            return Err(Error::InvalidArgument("velocity length does not match node count".into()));
        }
        let c = self.lattice_speed();
        let mut vl = Vec::with_capacity(velocity.len());
        for (n, v) in velocity.iter().enumerate() {
            let l = [v[0] / c, if self.model.dim == 2 { v[1] / c } else { 0.0 }];
            if self.grid.is_fluid(n) {
                check_mach(&self.model, l).map_err(|e| e.context(format!("node {n}")))?;
            }
            vl.push(l);
        }
        self.velocity = velocity;
        self.vel_lattice = vl;
        self.build_eq_coeff();
        Ok(())
    }

    fn build_eq_coeff(&mut self) {
        let q = self.q();
        let mut c = vec![0.0; self.grid.node_count() * q];
        for (n, cs) in c.chunks_mut(q).enumerate() {
            equilibrium_lattice(&self.model, 1.0, self.vel_lattice[n], self.equilibrium, cs);
        }
        self.eq_coeff = c;
        self.eq_form = self.equilibrium;
    }

    /// Copies populations, clock and counters from a field on the same grid.
    pub fn copy_state_from(&mut self, other: &LbmField) {
        self.f.copy_from_slice(&other.f);
        self.post.copy_from_slice(&other.post);
        self.time = other.time;
        self.stats = other.stats.clone();
    }

    /// Overwrites the populations with the equilibrium of `u`.
    pub fn reset_to_equilibrium(&mut self, u: &[f64]) -> Result<()> {
        if u.len() != self.grid.node_count() {
            return Err(Error::InvalidArgument("concentration length does not match node count".into()));
        }
        let q = self.q();
        let model = &self.model;
        let form = self.equilibrium;
        let solid = &self.grid.solid;
        let vl = &self.vel_lattice;
        self.f.par_chunks_mut(q).enumerate().for_each(|(n, fs)| {
            if solid[n] {
                fs.fill(0.0);
            } else {
                equilibrium_lattice(model, u[n], vl[n], form, fs);
            }
        });
        Ok(())
    }

    fn build_sources(&mut self) {
        let q = self.q();
        let grid = &self.grid;
        let mut src = vec![SRC_OUTSIDE; grid.node_count() * q];
        let mut escapes = Vec::new();
        for n in 0..grid.node_count() {
            let (i, j) = grid.ij(n);
            for (k, e) in self.model.velocities.iter().enumerate() {
                src[n * q + k] = match grid.shifted(i, j, -e[0], -e[1]) {
                    Some(m) if grid.solid[m] => SRC_SOLID,
                    Some(m) => m as u32,
                    None => SRC_OUTSIDE,
                };
                if !grid.solid[n] && grid.shifted(i, j, e[0], e[1]).is_none() {
                    escapes.push(n * q + k);
                }
            }
        }
        let opp = &self.model.opposite;
        self.gather = (0..src.len())
            .map(|k| {
                let (n, i) = (k / q, k % q);
                if grid.solid[n] {
                    return SRC_SOLID;
                }
                match src[k] {
                    SRC_OUTSIDE => k as u32,
                    SRC_SOLID => (n * q + opp[i]) as u32,
                    m => m * q as u32 + i as u32,
                }
            })
            .collect();
        self.sources = src;
        self.escapes = escapes;
    }

    /// True when direction `i` at `node` streams in from outside the box.
    pub fn is_unfilled(&self, node: usize, i: usize) -> bool {
        self.sources[node * self.q() + i] == SRC_OUTSIDE
    }

    /// BGK relaxation at every fluid node.
    pub fn collide(&mut self) {
        if self.eq_form != self.equilibrium {
            self.build_eq_coeff();
        }
        let omega = 1.0 / self.tau;
        let (f, coeff, solid) = (&mut self.f, &self.eq_coeff, &self.grid.solid);
        match self.model.q() {
            2 => relax::<2>(f, coeff, solid, omega),
            3 => relax::<3>(f, coeff, solid, omega),
            4 => relax::<4>(f, coeff, solid, omega),
            5 => relax::<5>(f, coeff, solid, omega),
            9 => relax::<9>(f, coeff, solid, omega),
            q => relax_dyn(f, coeff, solid, omega, q),
        }
    }

    /// Moves populations one link along their velocities.
    ///
    /// Links from solid nodes are closed by halfway bounce-back. Links from
    /// outside a non-periodic box keep the node's own post-collision value
    /// until a boundary closure overwrites them.
    pub fn stream(&mut self) {
        std::mem::swap(&mut self.f, &mut self.post);
        let post = &self.post;
        let solid = &self.grid.solid;
        let gather = &self.gather;
        let pull = |(fk, &g): (&mut f64, &u32)| *fk = if g == SRC_SOLID { 0.0 } else { post[g as usize] };
        if solid.len() < PAR_MIN_NODES {
            self.f.iter_mut().zip(gather).for_each(pull);
        } else {
            self.f.par_iter_mut().zip(gather).for_each(pull);
        }
        let escaped: f64 = self.escapes.iter().map(|&k| post[k]).sum();
        self.stats.escaped_mass += escaped;
    }

    /// Post-collision populations of the most recent step.
    pub fn post_collision(&self) -> &[f64] {
        &self.post
    }

    /// Applies the closures in order to the freshly streamed populations.
    pub fn apply_boundaries(&mut self, patches: &[BoundaryPatch]) -> Result<()> {
        let t = self.time + self.dt;
        let flux_scale = self.dt / self.grid.spacing;
        for patch in patches {
            let s = patch
                .apply(&self.model, &self.grid, &mut self.f, t, flux_scale)
                .map_err(|e| e.context(format!("boundary '{}' at t = {t}", patch.name)))?;
            self.stats.boundary.merge(&s);
        }
        Ok(())
    }

    /// One collide-stream-close cycle; the patches see time `t + dt`.
    pub fn step(&mut self, patches: &[BoundaryPatch]) -> Result<()> {
        self.collide();
        self.stream();
        self.apply_boundaries(patches)?;
        self.time += self.dt;
        self.stats.steps += 1;
        Ok(())
    }

    /// Zeroth moment per node.
    pub fn concentration(&self) -> Vec<f64> {
        if self.grid.node_count() < PAR_MIN_NODES {
            self.f.chunks_exact(self.q()).map(|fs| fs.iter().sum()).collect()
        } else {
            self.f.par_chunks(self.q()).map(|fs| fs.iter().sum()).collect()
        }
    }

    /// Concentration at one node.
    pub fn concentration_at(&self, node: usize) -> f64 {
        let q = self.q();
        self.f[node * q..(node + 1) * q].iter().sum()
    }

    /// `(u, q)` with `q = sum_i f_i e_i dx/dt` in physical units.
    pub fn moments(&self) -> (Vec<f64>, Vec<[f64; 2]>) {
        let c = self.lattice_speed();
        let model = &self.model;
        let (u, flux): (Vec<f64>, Vec<[f64; 2]>) = self
            .f
            .par_chunks(self.q())
            .map(|fs| {
                let mut s = 0.0;
                let mut j = [0.0; 2];
                for (fi, e) in fs.iter().zip(&model.velocities) {
                    s += fi;
                    j[0] += fi * e[0] as f64;
                    j[1] += fi * e[1] as f64;
                }
                (s, [j[0] * c, j[1] * c])
            })
            .unzip();
        (u, flux)
    }

    /// Boltzmann H functional over fluid nodes.
    pub fn h_function(&self) -> Result<f64> {
        let q = self.q();
        let solid = &self.grid.solid;
        let per_node: Vec<f64> = self
            .f
            .par_chunks(q)
            .enumerate()
            .map(|(n, fs)| if solid[n] { Ok(0.0) } else { node_h(&self.model, fs, n) })
            .collect::<Result<_>>()?;
        // sequential sum keeps the value independent of the thread count
        Ok(per_node.iter().sum())
    }

    /// Most negative population and its location, if any is below `-tol`.
    pub fn min_population(&self) -> (f64, usize, usize) {
        let q = self.q();
        let mut best = (f64::INFINITY, 0, 0);
        for (k, &v) in self.f.iter().enumerate() {
            if v < best.0 {
                best = (v, k / q, k % q);
            }
        }
        best
    }

    /// Total mass `sum f` over fluid nodes.
    pub fn total_mass(&self) -> f64 {
        self.f.iter().sum()
    }

    /// Read access to one node's populations.
    pub fn node(&self, n: usize) -> &[f64] {
        let q = self.q();
        &self.f[n * q..(n + 1) * q]
    }

    pub fn node_mut(&mut self, n: usize) -> &mut [f64] {
        let q = self.q();
        &mut self.f[n * q..(n + 1) * q]
    }
}
