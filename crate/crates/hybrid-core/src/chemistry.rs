//! Species recovery from transported reaction invariants.

use crate::error::{Error, Result};

/// Inputs in `[-CLAMP_TOL, 0)` are treated as round-off and set to zero.
pub const CLAMP_TOL: f64 = 1e-12;

/// Default solubility product for calcite at room temperature.
pub const CALCITE_KSP: f64 = 3.36e-9;

/// Fast irreversible reaction `nA A + nB B -> nC C`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BimolecularSystem {
    pub n_a: u32,
    pub n_b: u32,
    pub n_c: u32,
}

impl BimolecularSystem {
    pub fn new(n_a: u32, n_b: u32, n_c: u32) -> Result<Self> {
        if n_a == 0 || n_b == 0 || n_c == 0 {
            return Err(Error::InvalidArgument(format!("stoichiometry ({n_a}, {n_b}, {n_c}) must be positive")));
        }
        Ok(BimolecularSystem { n_a, n_b, n_c })
    }

    /// `(alpha, beta) = (uA + nA/nC uC, uB + nB/nC uC)`.
    pub fn invariants(&self, u_a: f64, u_b: f64, u_c: f64) -> (f64, f64) {
        let (a, b, c) = (self.n_a as f64, self.n_b as f64, self.n_c as f64);
        (u_a + a / c * u_c, u_b + b / c * u_c)
    }
}

fn clamp_input(name: &str, v: f64) -> Result<f64> {
    if v.is_nan() {
        return Err(Error::InvalidArgument(format!("{name} is NaN")));
    }
    if v < -CLAMP_TOL {
        return Err(Error::InvalidArgument(format!("{name} = {v:e} is negative")));
    }
    Ok(v.max(0.0))
}

/// Species `(uA, uB, uC)` from the invariants of a complete reaction.
pub fn bimolecular_recover(sys: &BimolecularSystem, alpha: f64, beta: f64) -> Result<(f64, f64, f64)> {
    let alpha = clamp_input("alpha", alpha)?;
    let beta = clamp_input("beta", beta)?;
    let (a, b, c) = (sys.n_a as f64, sys.n_b as f64, sys.n_c as f64);
    let excess = alpha - a / b * beta;
    let u_a = excess.max(0.0);
    let u_b = b / a * (-excess).max(0.0);
    let u_c = c / a * (alpha - u_a);
    Ok((u_a, u_b, u_c))
}

/// Calcite dissolution equilibrium `u2 u3 / u1 = K_sp` with
/// `psi1 = u1 - u2`, `psi2 = u3 - u2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CalciteSystem {
    pub k_sp: f64,
}

impl Default for CalciteSystem {
    fn default() -> Self {
        CalciteSystem { k_sp: CALCITE_KSP }
    }
}

impl CalciteSystem {
    pub fn new(k_sp: f64) -> Result<Self> {
        if !(k_sp > 0.0 && k_sp.is_finite()) {
            return Err(Error::InvalidArgument(format!("solubility product {k_sp} must be positive")));
        }
        Ok(CalciteSystem { k_sp })
    }

    pub fn invariants(&self, u1: f64, u2: f64, u3: f64) -> (f64, f64) {
        (u1 - u2, u3 - u2)
    }
}

/// Non-negative root of `x^2 + b x - c = 0` with `c >= 0`, without cancellation.
fn positive_root(b: f64, c: f64) -> Result<f64> {
    let disc = b * b + 4.0 * c;
    if !(disc >= 0.0) {
        return Err(Error::InfeasibleState(format!("negative discriminant {disc:e}")));
    }
    let s = disc.sqrt();
    Ok(if b > 0.0 { 2.0 * c / (b + s) } else { 0.5 * (s - b) })
}

/// Species `(u1, u2, u3)` at equilibrium for the given invariants.
///
/// `u2` and `u3` are the non-negative roots of
/// `u2^2 + (psi2 - K) u2 - K psi1 = 0` and
/// `u3^2 - (psi2 + K) u3 - K (psi1 - psi2) = 0`, each evaluated in the
/// cancellation-free form; `u1 = psi1 + u2`. Zero invariants give the
/// empty state.
pub fn calcite_recover(sys: &CalciteSystem, psi1: f64, psi2: f64) -> Result<(f64, f64, f64)> {
    if !psi1.is_finite() || !psi2.is_finite() {
        return Err(Error::InvalidArgument(format!("non-finite invariants ({psi1}, {psi2})")));
    }
    let k = sys.k_sp;
    if psi1 == 0.0 && psi2 == 0.0 {
        return Ok((0.0, 0.0, 0.0));
    }
    let psi1 = if (-CLAMP_TOL..0.0).contains(&psi1) { 0.0 } else { psi1 };
    let c2 = k * psi1;
    let c3 = k * (psi1 - psi2);
    if c2 < 0.0 || c3 < 0.0 {
        let b = psi2 - k;
        let disc = b * b + 4.0 * c2;
        if disc < 0.0 {
            return Err(Error::InfeasibleState(format!(
                "no real equilibrium for psi1 = {psi1:e}, psi2 = {psi2:e} (discriminant {disc:e})"
            )));
        }
    }
    let u2 = if c2 >= 0.0 {
        positive_root(psi2 - k, c2)?
    } else {
        // psi1 < 0: the larger root keeps u1 = psi1 + u2 non-negative
        let b = psi2 - k;
        0.5 * (-b + (b * b + 4.0 * c2).sqrt())
    };
    let u3 = if c3 >= 0.0 { positive_root(-(psi2 + k), c3)? } else { psi2 + u2 };
    let u1 = psi1 + u2;
    if u1 < -CLAMP_TOL || u2 < 0.0 || u3 < -CLAMP_TOL {
        return Err(Error::InfeasibleState(format!(
            "negative species ({u1:e}, {u2:e}, {u3:e}) for psi1 = {psi1:e}, psi2 = {psi2:e}"
        )));
    }
    Ok((u1.max(0.0), u2, u3.max(0.0)))
}

/// `sum_k u_k w_k` for nodal values and their measure weights.
pub fn total_concentration(values: &[f64], weights: &[f64]) -> Result<f64> {
    if values.len() != weights.len() {
        return Err(Error::InvalidArgument(format!("{} values against {} weights", values.len(), weights.len())));
    }
    Ok(values.iter().zip(weights).map(|(u, w)| u * w).sum())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn bimolecular_example() {
        let s = BimolecularSystem::new(1, 2, 1).unwrap();
        let (a, b, c) = bimolecular_recover(&s, 0.3, 0.4).unwrap();
        assert_relative_eq!(a, 0.1, epsilon = 1e-15);
        assert_eq!(b, 0.0);
        assert_relative_eq!(c, 0.2, epsilon = 1e-15);
        let (al, be) = s.invariants(a, b, c);
        assert_relative_eq!(al, 0.3, epsilon = 1e-15);
        assert_relative_eq!(be, 0.4, epsilon = 1e-15);
    }

    #[test]
    fn bimolecular_limits() {
        let s = BimolecularSystem::new(1, 2, 1).unwrap();
        assert_eq!(bimolecular_recover(&s, 0.0, 0.0).unwrap(), (0.0, 0.0, 0.0));
        let (a, b, c) = bimolecular_recover(&s, 0.0, 0.7).unwrap();
        assert_eq!((a, c), (0.0, 0.0));
        assert_relative_eq!(b, 0.7, epsilon = 1e-15);
        assert_eq!(bimolecular_recover(&s, -5e-13, 0.1).unwrap().0, 0.0);
        assert!(bimolecular_recover(&s, -1e-9, 0.1).is_err());
        assert!(BimolecularSystem::new(0, 1, 1).is_err());
    }

    #[test]
    fn calcite_zero_and_reference() {
        let s = CalciteSystem::default();
        assert_eq!(calcite_recover(&s, 0.0, 0.0).unwrap(), (0.0, 0.0, 0.0));
        let (u1, u2, u3) = calcite_recover(&s, 1e-3, 0.0).unwrap();
        let want = 0.5 * (s.k_sp + (s.k_sp * s.k_sp + 4.0 * s.k_sp * 1e-3).sqrt());
        assert_relative_eq!(u2, want, max_relative = 1e-14);
        assert_relative_eq!(u2, 1.8347e-6, max_relative = 1e-4);
        assert_relative_eq!(u2 * u3 / u1, s.k_sp, max_relative = 1e-12);
    }

    #[test]
    fn calcite_asymptote() {
        let s = CalciteSystem::default();
        let (_, u2, _) = calcite_recover(&s, 1e-6, 1.0).unwrap();
        let approx = s.k_sp * 1e-6 / 1.0;
        assert!((u2 / approx - 1.0).abs() < 0.01);
    }

    #[test]
    fn calcite_negative_psi2_no_cancellation() {
        let s = CalciteSystem::default();
        let (u1, u2, u3) = calcite_recover(&s, 1e-12, -1.0).unwrap();
        assert!(u3 > 0.0);
        assert_relative_eq!(u2 * u3 / u1, s.k_sp, max_relative = 1e-9);
    }

    #[test]
    fn calcite_rejects_infeasible() {
        let s = CalciteSystem::new(1.0).unwrap();
        assert!(matches!(calcite_recover(&s, -1.0, 1.5), Err(Error::InfeasibleState(_))));
        assert!(CalciteSystem::new(0.0).is_err());
    }

    #[test]
    fn totals() {
        let w = vec![0.01; 100];
        assert_relative_eq!(total_concentration(&vec![1.0; 100], &w).unwrap(), 1.0, epsilon = 1e-12);
        assert_eq!(total_concentration(&vec![0.0; 100], &w).unwrap(), 0.0);
        assert!(total_concentration(&[1.0], &[]).is_err());
    }

    proptest! {
        #[test]
        fn bimolecular_roundtrip(a in 0.0f64..1.0, c in 0.0f64..1.0, b in 0.0f64..1.0, pick in 0usize..2) {
            let s = BimolecularSystem::new(1, 2, 1).unwrap();
            // complete reaction leaves at most one reagent
            let (ua, ub) = if pick == 0 { (a, 0.0) } else { (0.0, b) };
            let (al, be) = s.invariants(ua, ub, c);
            let (ra, rb, rc) = bimolecular_recover(&s, al, be).unwrap();
            prop_assert!((ra - ua).abs() < 1e-12 && (rb - ub).abs() < 1e-12 && (rc - c).abs() < 1e-12);
        }

        #[test]
        fn bimolecular_invariants_and_sign(al in 0.0f64..2.0, be in 0.0f64..2.0, na in 1u32..4, nb in 1u32..4, nc in 1u32..4) {
            let s = BimolecularSystem::new(na, nb, nc).unwrap();
            let (a, b, c) = bimolecular_recover(&s, al, be).unwrap();
            prop_assert!(a >= 0.0 && b >= 0.0 && c >= 0.0);
            let (ra, rb) = s.invariants(a, b, c);
            prop_assert!((ra - al).abs() < 1e-12 && (rb - be).abs() < 1e-12);
        }

        #[test]
        fn calcite_residual(lp1 in -12.0f64..0.0, lp2 in -12.0f64..0.0, sign in prop::bool::ANY) {
            let s = CalciteSystem::default();
            let psi1 = 10f64.powf(lp1);
            let psi2 = if sign { 10f64.powf(lp2) } else { -10f64.powf(lp2) };
            if let Ok((u1, u2, u3)) = calcite_recover(&s, psi1, psi2) {
                prop_assert!(u1 >= 0.0 && u2 >= 0.0 && u3 >= 0.0);
                if u1 > 1e-12 {
                    prop_assert!((u2 * u3 / u1 - s.k_sp).abs() <= 1e-6 * s.k_sp);
                }
            }
        }

        #[test]
        fn calcite_roundtrip(u1 in 1e-9f64..1.0, u3 in 1e-9f64..1.0) {
            let s = CalciteSystem::default();
            let u2 = s.k_sp * u1 / u3;
            let (p1, p2) = s.invariants(u1, u2, u3);
            let (r1, r2, r3) = calcite_recover(&s, p1, p2).unwrap();
            prop_assert!((r1 - u1).abs() <= 1e-9 * u1 && (r3 - u3).abs() <= 1e-9 * u3);
            prop_assert!((r2 - u2).abs() <= 1e-8 * u2);
        }
    }
}
