//! BGK lattice Boltzmann scheme for the advection-diffusion equation.
//!
//! Populations are stored node-major (`f[node * q + i]`). A step is
//! collide, stream (two-array), then the boundary closures of
//! [`crate::boundary`]. Solid obstacles use halfway bounce-back inside
//! the streaming pass.

mod field;
mod grid;

pub use field::{LbmField, LbmParams, StepStats};
pub use grid::LbmGrid;

use crate::error::{Error, Result};
use crate::lattice::LatticeModel;

/// Ratio `|v| / c_s` above which the equilibrium is rejected.
pub const MACH_LIMIT: f64 = 0.3;

/// Populations in `[-NEG_TOL, 0)` are treated as zero by [`h_function`].
pub const NEG_TOL: f64 = 1e-14;

/// Equilibrium polynomial variant.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum EquilibriumForm {
    /// Second-order form with `-v.v/(2 c_s^2)`; conserves mass exactly.
    #[default]
    Standard,
    /// Variant with `-v.v/c_s^2`; its zeroth moment is `u (1 - |v|^2/(2 c_s^2))`.
    PaperVerbatim,
}

impl std::str::FromStr for EquilibriumForm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "standard" => Ok(EquilibriumForm::Standard),
            "paper-verbatim" => Ok(EquilibriumForm::PaperVerbatim),
            other => Err(Error::InvalidArgument(format!("unknown equilibrium form '{other}'"))),
        }
    }
}

/// `tau = 1/2 + D / (c_s^2 dt)`.
pub fn relaxation_time(diffusivity: f64, cs2: f64, dt: f64) -> Result<f64> {
    if !(diffusivity > 0.0 && cs2 > 0.0 && dt > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "relaxation time needs positive D, cs2, dt (got {diffusivity}, {cs2}, {dt})"
        )));
    }
    Ok(0.5 + diffusivity / (cs2 * dt))
}

/// Smallest time step for which `tau >= 1`, i.e. `kappa h^2 / (2 D)`.
pub fn min_admissible_dt(diffusivity: f64, cs2_coeff: f64, h: f64) -> Result<f64> {
    if !(diffusivity > 0.0 && cs2_coeff > 0.0 && h > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "time step bound needs positive D, kappa, h (got {diffusivity}, {cs2_coeff}, {h})"
        )));
    }
    Ok(cs2_coeff * h * h / (2.0 * diffusivity))
}

/// Equilibrium populations for concentration `u` and physical velocity `v`.
///
/// `cs2` is the physical squared sound speed; the lattice speed is
/// recovered as `sqrt(cs2 / kappa)`.
pub fn equilibrium(model: &LatticeModel, u: f64, v: [f64; 2], cs2: f64, form: EquilibriumForm) -> Result<Vec<f64>> {
    if !(cs2 > 0.0) || !u.is_finite() {
        return Err(Error::InvalidArgument(format!("equilibrium needs cs2 > 0 and finite u (got {cs2}, {u})")));
    }
    let c = (cs2 / model.cs2_coeff).sqrt();
    let vl = [v[0] / c, if model.dim == 2 { v[1] / c } else { 0.0 }];
    check_mach(model, vl)?;
    let mut out = vec![0.0; model.q()];
    equilibrium_lattice(model, u, vl, form, &mut out);
    Ok(out)
}

/// Rejects lattice velocities with `|v| > MACH_LIMIT c_s`.
pub fn check_mach(model: &LatticeModel, vl: [f64; 2]) -> Result<()> {
    let speed = (vl[0] * vl[0] + vl[1] * vl[1]).sqrt();
    let cs = model.cs2_coeff.sqrt();
    if speed > MACH_LIMIT * cs * (1.0 + 1e-12) {
        return Err(Error::StabilityViolation(format!(
            "|v|/c_s = {:.4} exceeds {MACH_LIMIT}",
            speed / cs
        )));
    }
    Ok(())
}

/// Equilibrium with the velocity already in lattice units.
#[inline]
pub fn equilibrium_lattice(model: &LatticeModel, u: f64, vl: [f64; 2], form: EquilibriumForm, out: &mut [f64]) {
    let k = model.cs2_coeff;
    let vv = vl[0] * vl[0] + vl[1] * vl[1];
    let last = match form {
        EquilibriumForm::Standard => vv / (2.0 * k),
        EquilibriumForm::PaperVerbatim => vv / k,
    };
    for (i, e) in model.velocities.iter().enumerate() {
        let ev = e[0] as f64 * vl[0] + e[1] as f64 * vl[1];
        out[i] = model.weights[i] * u * (1.0 + ev / k + ev * ev / (2.0 * k * k) - last);
    }
}

/// `sum_i f_i log(f_i / w_i)` for one node, with `0 log 0 = 0`.
pub fn node_h(model: &LatticeModel, f: &[f64], node: usize) -> Result<f64> {
    let mut h = 0.0;
    for (i, &fi) in f.iter().enumerate() {
        if fi < -NEG_TOL {
            return Err(Error::Negativity { node, direction: i, value: fi });
        }
        if fi > 0.0 {
            h += fi * (fi / model.weights[i]).ln();
        }
    }
    Ok(h)
}

/// Boltzmann H functional summed over the fluid nodes of a field.
pub fn h_function(field: &LbmField) -> Result<f64> {
    field.h_function()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{builtin_model, ModelName};
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn tau_from_table_case() {
        let d = 4.0 / (5.0 * std::f64::consts::PI.powi(2));
        let (h, dt) = (1e-2, 2.1e-4);
        let cs2 = h * h / (3.0 * dt * dt);
        let tau = relaxation_time(d, cs2, dt).unwrap();
        assert_relative_eq!(tau, 1.0107, epsilon = 1e-4);
        assert!(tau >= 1.0);
    }

    #[test]
    fn tau_limits() {
        let (cs2, dt) = (2.0, 0.1);
        assert_eq!(relaxation_time(cs2 * dt / 2.0, cs2, dt).unwrap(), 1.0);
        assert!((relaxation_time(1.0, 1.0, 1e12).unwrap() - 0.5).abs() < 1e-11);
        assert!(relaxation_time(0.0, 1.0, 1.0).is_err());
    }

    #[test]
    fn min_dt_examples() {
        let d = 4.0 / (5.0 * std::f64::consts::PI.powi(2));
        let dt = min_admissible_dt(d, 1.0 / 3.0, 1e-2).unwrap();
        assert_relative_eq!(dt, 1e-4 / (6.0 * d), max_relative = 1e-14);
        assert_relative_eq!(dt, 2.056e-4, max_relative = 1e-3);
        assert!(2.1e-4 >= dt);
        assert_relative_eq!(min_admissible_dt(0.5, 1.0, 0.1).unwrap(), 0.01, max_relative = 1e-15);
        assert!(min_admissible_dt(-1.0, 1.0, 0.1).is_err());
    }

    #[test]
    fn equilibrium_rest() {
        let m = builtin_model(ModelName::D2Q9);
        let f = equilibrium(&m, 0.7, [0.0, 0.0], 1.0, EquilibriumForm::Standard).unwrap();
        for (fi, w) in f.iter().zip(&m.weights) {
            assert_eq!(*fi, 0.7 * w);
        }
        let z = equilibrium(&m, 0.0, [0.1, 0.0], 1.0, EquilibriumForm::Standard).unwrap();
        assert!(z.iter().all(|&x| x == 0.0));
    }

    #[test]
    fn mach_guard() {
        let m = builtin_model(ModelName::D2Q9);
        let cs = (1.0f64 / 3.0).sqrt();
        assert!(equilibrium(&m, 1.0, [0.29 * cs, 0.0], 1.0 / 3.0, EquilibriumForm::Standard).is_ok());
        assert!(matches!(
            equilibrium(&m, 1.0, [0.31 * cs, 0.0], 1.0 / 3.0, EquilibriumForm::Standard),
            Err(Error::StabilityViolation(_))
        ));
    }

    #[test]
    fn verbatim_form_loses_mass() {
        let m = builtin_model(ModelName::D2Q9);
        let cs2 = 1.0 / 3.0;
        let v = [0.1, 0.05];
        let f = equilibrium(&m, 1.0, v, cs2, EquilibriumForm::PaperVerbatim).unwrap();
        let s: f64 = f.iter().sum();
        let vv = v[0] * v[0] + v[1] * v[1];
        assert_relative_eq!(s, 1.0 - vv / (2.0 * cs2), epsilon = 1e-14);
    }

    #[test]
    fn node_h_cases() {
        let m = builtin_model(ModelName::D2Q9);
        assert_eq!(node_h(&m, &m.weights.clone(), 0).unwrap(), 0.0);
        let u = 2.5;
        let f: Vec<f64> = m.weights.iter().map(|w| w * u).collect();
        assert_relative_eq!(node_h(&m, &f, 0).unwrap(), u * u.ln(), epsilon = 1e-14);
        assert_eq!(node_h(&m, &[0.0; 9], 0).unwrap(), 0.0);
        let mut g = vec![0.0; 9];
        g[3] = -5e-15;
        assert_eq!(node_h(&m, &g, 0).unwrap(), 0.0);
        g[3] = -1e-13;
        assert!(matches!(node_h(&m, &g, 4), Err(Error::Negativity { node: 4, direction: 3, .. })));
    }

    fn model_strategy() -> impl Strategy<Value = ModelName> {
        prop_oneof![
            Just(ModelName::D1Q2),
            Just(ModelName::D2Q4),
            Just(ModelName::D2Q5),
            Just(ModelName::D2Q9)
        ]
    }

    proptest! {
        #[test]
        fn equilibrium_moments(name in model_strategy(), u in 0.0f64..10.0, a in 0.0f64..1.0, theta in 0.0f64..6.3, c in 0.1f64..10.0) {
            let m = builtin_model(name);
            let cs2 = m.cs2_coeff * c * c;
            let speed = 0.3 * cs2.sqrt() * a;
            let v = if m.dim == 1 { [speed * theta.cos(), 0.0] } else { [speed * theta.cos(), speed * theta.sin()] };
            let f = equilibrium(&m, u, v, cs2, EquilibriumForm::Standard).unwrap();
            let s0: f64 = f.iter().sum();
            prop_assert!((s0 - u).abs() <= 1e-13 * (1.0 + u));
            for ax in 0..m.dim {
                let s1: f64 = f.iter().zip(&m.velocities).map(|(fi, e)| fi * e[ax] as f64 * c).sum();
                prop_assert!((s1 - u * v[ax]).abs() <= 1e-12 * (1.0 + u * c));
            }
        }
    }
}
