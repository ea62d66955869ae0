use super::assembly::FemSystem;
use super::sparse::{CsrMatrix, LinearSolver};
use crate::error::{Error, Result};

/// Nodal values `d`, rates `v` and the time level.
#[derive(Debug, Clone, PartialEq)]
pub struct FemState {
    pub d: Vec<f64>,
    pub v: Vec<f64>,
    pub time: f64,
}

/// Theta-method integrator with strongly imposed values on a fixed node set.
///
/// Each step solves `(M + theta dt K)_ff v_f = s_f - K_f. d* - M_fc v_c`
/// where `d*` is the predictor `d + dt (1 - theta) v` on free nodes and the
/// prescribed values on constrained ones, and the constrained rates are
/// `(d_c^{n+1} - d_c^n) / dt`.
#[derive(Debug)]
pub struct ThetaStepper {
    pub theta: f64,
    pub dt: f64,
    pub constrained: Vec<usize>,
    free: Vec<usize>,
    free_pos: Vec<usize>,
    m: CsrMatrix,
    k: CsrMatrix,
    load: Vec<f64>,
    solver: LinearSolver,
}

impl ThetaStepper {
    pub fn new(system: &FemSystem, theta: f64, dt: f64, constrained: &[usize]) -> Result<Self> {
        if !(0.0..=1.0).contains(&theta) {
            return Err(Error::InvalidArgument(format!("theta = {theta} outside [0, 1]")));
        }
        if !(dt > 0.0) {
            return Err(Error::InvalidArgument(format!("time step {dt} must be positive")));
        }
        let n = system.m.nrows;
        let mut is_c = vec![false; n];
        for &c in constrained {
            if c >= n {
                return Err(Error::InvalidArgument(format!("constrained node {c} out of range")));
            }
            is_c[c] = true;
        }
        let free: Vec<usize> = (0..n).filter(|&i| !is_c[i]).collect();
        let mut free_pos = vec![usize::MAX; n];
        for (k, &i) in free.iter().enumerate() {
            free_pos[i] = k;
        }
        let a = system.m.axpby(1.0, &system.k, theta * dt);
        let a_ff = a.select(&free_pos, free.len(), &free_pos, free.len());
        let solver = LinearSolver::new(&a_ff).map_err(|e| e.context("theta-method system"))?;
        Ok(ThetaStepper {
            theta,
            dt,
            constrained: constrained.to_vec(),
            free,
            free_pos,
            m: system.m.clone(),
            k: system.k.clone(),
            load: system.load.clone(),
            solver,
        })
    }

    /// State at `t0` with consistent initial rates: `M_ff v_f = s_f - K_f. d0`,
    /// constrained rates taken as `v_c` (zero if `None`).
    pub fn initial_state(&self, d0: Vec<f64>, v_c: Option<&[f64]>, t0: f64) -> Result<FemState> {
        let n = d0.len();
        let mut v = vec![0.0; n];
        if let Some(vc) = v_c {
            for (k, &c) in self.constrained.iter().enumerate() {
                v[c] = vc[k];
            }
        }
        if !self.free.is_empty() {
            let kd = self.k.matvec(&d0);
            let mv = self.m.matvec(&v);
            let rhs: Vec<f64> = self.free.iter().map(|&i| self.load[i] - kd[i] - mv[i]).collect();
            let m_ff = self.m.select(&self.free_pos, self.free.len(), &self.free_pos, self.free.len());
            let vf = LinearSolver::new(&m_ff)?.solve(&rhs).map_err(|e| e.context("initial rate solve"))?;
            for (k, &i) in self.free.iter().enumerate() {
                v[i] = vf[k];
            }
        }
        Ok(FemState { d: d0, v, time: t0 })
    }

    /// Advances by `dt`; `values[k]` is the prescribed value at
    /// `constrained[k]` at the new time level.
    pub fn step(&self, state: &FemState, values: &[f64]) -> Result<FemState> {
        if values.len() != self.constrained.len() {
            return Err(Error::InvalidArgument(format!(
                "{} prescribed values for {} constrained nodes",
                values.len(),
                self.constrained.len()
            )));
        }
        let n = state.d.len();
        let dt = self.dt;
        let mut dstar: Vec<f64> = state.d.iter().zip(&state.v).map(|(d, v)| d + dt * (1.0 - self.theta) * v).collect();
        let mut vnew = vec![0.0; n];
        for (k, &c) in self.constrained.iter().enumerate() {
            dstar[c] = values[k];
            vnew[c] = (values[k] - state.d[c]) / dt;
        }
        let kd = self.k.matvec(&dstar);
        let mv = self.m.matvec(&vnew);
        let rhs: Vec<f64> = self.free.iter().map(|&i| self.load[i] - kd[i] - mv[i]).collect();
        let vf = self.solver.solve(&rhs).map_err(|e| e.context(format!("theta step at t = {}", state.time + dt)))?;
        let mut d = dstar;
        for (k, &i) in self.free.iter().enumerate() {
            vnew[i] = vf[k];
            d[i] += self.theta * dt * vf[k];
        }
        Ok(FemState { d, v: vnew, time: state.time + dt })
    }

    /// `sum_a (M d)_a`, the discrete total mass.
    pub fn mass(&self, d: &[f64]) -> f64 {
        self.m.matvec(d).iter().sum()
    }
}
