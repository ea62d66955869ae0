//! Discrete velocity sets for advection-diffusion lattice Boltzmann schemes.
//!
//! Weights are tabulated as exact rationals and converted to `f64` once at
//! construction. The lattice sound speed is `c_s^2 = kappa * (dx/dt)^2`.
//!
//! The D2Q4 and D2Q5 tables use the standard literature values
//! (D2Q4: four axis weights of 1/4, kappa = 1/2; D2Q5: rest 1/3,
//! axis 1/6, kappa = 1/3).

use num_rational::Ratio;

use crate::error::{Error, Result};

/// Supported lattice models.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ModelName {
    D1Q2,
    D2Q4,
    D2Q5,
    D2Q9,
}

impl ModelName {
    pub const ALL: [ModelName; 4] = [ModelName::D1Q2, ModelName::D2Q4, ModelName::D2Q5, ModelName::D2Q9];

    pub fn as_str(self) -> &'static str {
        match self {
            ModelName::D1Q2 => "D1Q2",
            ModelName::D2Q4 => "D2Q4",
            ModelName::D2Q5 => "D2Q5",
            ModelName::D2Q9 => "D2Q9",
        }
    }
}

impl std::fmt::Display for ModelName {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for ModelName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_uppercase().as_str() {
            "D1Q2" => Ok(ModelName::D1Q2),
            "D2Q4" => Ok(ModelName::D2Q4),
            "D2Q5" => Ok(ModelName::D2Q5),
            "D2Q9" => Ok(ModelName::D2Q9),
            other => Err(Error::InvalidArgument(format!("unknown lattice model '{other}'"))),
        }
    }
}

/// A DnQm velocity set.
///
/// Velocities are stored as 2-vectors for every model; one-dimensional
/// models leave the second component at zero.
#[derive(Debug, Clone, PartialEq)]
pub struct LatticeModel {
    pub name: ModelName,
    pub dim: usize,
    pub velocities: Vec<[i32; 2]>,
    pub weights_exact: Vec<Ratio<i64>>,
    pub weights: Vec<f64>,
    pub cs2_coeff_exact: Ratio<i64>,
    /// `kappa` in `c_s^2 = kappa (dx/dt)^2`.
    pub cs2_coeff: f64,
    /// `opposite[i]` is the index of `-e_i`.
    pub opposite: Vec<usize>,
}

fn r(n: i64, d: i64) -> Ratio<i64> {
    Ratio::new(n, d)
}

fn to_f64(q: Ratio<i64>) -> f64 {
    *q.numer() as f64 / *q.denom() as f64
}

/// Rounded weights with the largest one moved by a few ulps so that their
/// sequential floating-point sum is exactly one.
fn unit_sum_weights(exact: &[Ratio<i64>]) -> Vec<f64> {
    let mut w: Vec<f64> = exact.iter().copied().map(to_f64).collect();
    let k = (0..w.len()).max_by(|&a, &b| w[a].total_cmp(&w[b])).unwrap_or(0);
    for _ in 0..16 {
        let s: f64 = w.iter().sum();
        if s == 1.0 {
            break;
        }
        w[k] = if s > 1.0 { w[k].next_down() } else { w[k].next_up() };
    }
    w
}

/// Builds one of the tabulated lattice models.
pub fn builtin_model(name: ModelName) -> LatticeModel {
    let (dim, velocities, weights_exact, kappa): (usize, Vec<[i32; 2]>, Vec<Ratio<i64>>, Ratio<i64>) = match name {
        ModelName::D1Q2 => (1, vec![[1, 0], [-1, 0]], vec![r(1, 2), r(1, 2)], r(1, 1)),
        ModelName::D2Q4 => (
            2,
            vec![[1, 0], [0, 1], [-1, 0], [0, -1]],
            vec![r(1, 4); 4],
            r(1, 2),
        ),
        ModelName::D2Q5 => (
            2,
            vec![[0, 0], [1, 0], [0, 1], [-1, 0], [0, -1]],
            vec![r(1, 3), r(1, 6), r(1, 6), r(1, 6), r(1, 6)],
            r(1, 3),
        ),
        ModelName::D2Q9 => (
            2,
            vec![[0, 0], [1, 0], [0, 1], [-1, 0], [0, -1], [1, 1], [-1, 1], [-1, -1], [1, -1]],
            vec![
                r(4, 9),
                r(1, 9),
                r(1, 9),
                r(1, 9),
                r(1, 9),
                r(1, 36),
                r(1, 36),
                r(1, 36),
                r(1, 36),
            ],
            r(1, 3),
        ),
    };
    let opposite = velocities
        .iter()
        .map(|e| {
            velocities
                .iter()
                .position(|o| o[0] == -e[0] && o[1] == -e[1])
                .expect("builtin velocity sets are symmetric")
        })
        .collect();
    LatticeModel {
        name,
        dim,
        weights: unit_sum_weights(&weights_exact),
        velocities,
        weights_exact,
        cs2_coeff_exact: kappa,
        cs2_coeff: to_f64(kappa),
        opposite,
    }
}

impl LatticeModel {
    /// Number of discrete velocities.
    pub fn q(&self) -> usize {
        self.velocities.len()
    }

    /// Index of the rest velocity, if the model has one.
    pub fn rest_index(&self) -> Option<usize> {
        self.velocities.iter().position(|e| e[0] == 0 && e[1] == 0)
    }

    /// `e_i . n` for a normal given with `dim` components.
    pub fn dot(&self, i: usize, normal: &[f64]) -> f64 {
        let e = self.velocities[i];
        let mut s = e[0] as f64 * normal[0];
        if self.dim == 2 {
            s += e[1] as f64 * normal[1];
        }
        s
    }

    /// Index of the velocity equal to `e`, if present.
    pub fn index_of(&self, e: [i32; 2]) -> Option<usize> {
        self.velocities.iter().position(|v| *v == e)
    }

    /// Directions pointing into the domain at a wall with outward unit normal
    /// `normal` (strictly negative `e_i . n`).
    pub fn incoming_set(&self, normal: &[f64]) -> Result<Vec<usize>> {
        check_normal(self.dim, normal)?;
        Ok((0..self.q()).filter(|&i| self.dot(i, normal) < -1e-12).collect())
    }

    /// Mirror image of direction `i` about the plane with unit normal `normal`.
    pub fn mirror(&self, i: usize, normal: &[f64]) -> Result<usize> {
        check_normal(self.dim, normal)?;
        let en = self.dot(i, normal);
        let e = self.velocities[i];
        let mut m = [0i32; 2];
        for a in 0..self.dim {
            let c = e[a] as f64 - 2.0 * en * normal[a];
            let ci = c.round();
            if (c - ci).abs() > 1e-9 {
                return Err(Error::InvalidArgument(format!(
                    "mirror of direction {i} about {normal:?} is not a lattice vector"
                )));
            }
            m[a] = ci as i32;
        }
        self.index_of(m).ok_or_else(|| {
            Error::InvalidArgument(format!("mirror of direction {i} about {normal:?} is not in {}", self.name))
        })
    }
}

/// Validates a unit normal with `dim` components.
pub fn check_normal(dim: usize, normal: &[f64]) -> Result<()> {
    if normal.len() < dim {
        return Err(Error::InvalidArgument(format!(
            "normal has {} components, expected {dim}",
            normal.len()
        )));
    }
    let norm2: f64 = normal[..dim].iter().map(|c| c * c).sum();
    if norm2 == 0.0 || !norm2.is_finite() {
        return Err(Error::InvalidArgument("zero-length normal".into()));
    }
    if (norm2.sqrt() - 1.0).abs() > 1e-12 {
        return Err(Error::InvalidArgument(format!("normal {normal:?} is not unit length")));
    }
    Ok(())
}
