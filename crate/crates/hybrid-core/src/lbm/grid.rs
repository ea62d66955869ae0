use crate::error::{Error, Result};

/// Uniform lattice with optional solid obstacle mask.
///
/// Nodes are indexed `i + nx * j`. One-dimensional grids have `ny = 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct LbmGrid {
    pub dim: usize,
    pub origin: [f64; 2],
    pub spacing: f64,
    pub dims: [usize; 2],
    pub solid: Vec<bool>,
    pub periodic: [bool; 2],
}

impl LbmGrid {
    /// Creates a grid with `dims.len()` axes (1 or 2) and no obstacles.
    pub fn new(origin: &[f64], spacing: f64, dims: &[usize]) -> Result<Self> {
        let dim = dims.len();
        if !(1..=2).contains(&dim) || origin.len() < dim {
            return Err(Error::InvalidArgument(format!("grid dims {dims:?} must have one or two axes")));
        }
        if !(spacing > 0.0 && spacing.is_finite()) {
            return Err(Error::InvalidArgument(format!("grid spacing {spacing} must be positive")));
        }
        if dims.iter().any(|&n| n < 2) {
            return Err(Error::InvalidArgument(format!("grid dims {dims:?} need at least 2 nodes per axis")));
        }
        let d = [dims[0], if dim == 2 { dims[1] } else { 1 }];
        let o = [origin[0], if dim == 2 { origin[1] } else { 0.0 }];
        Ok(LbmGrid { dim, origin: o, spacing, dims: d, solid: vec![false; d[0] * d[1]], periodic: [false; 2] })
    }

    /// Grid covering `[lo, hi]` per axis with spacing `h`; the extent must be a
    /// whole number of cells.
    pub fn covering(lo: &[f64], hi: &[f64], h: f64) -> Result<Self> {
        let mut dims = Vec::with_capacity(lo.len());
        for a in 0..lo.len() {
            let cells = (hi[a] - lo[a]) / h;
            let n = cells.round();
            if (cells - n).abs() > 1e-6 * cells.max(1.0) || n < 1.0 {
                return Err(Error::InvalidArgument(format!(
                    "extent {} on axis {a} is not a multiple of spacing {h}",
                    hi[a] - lo[a]
                )));
            }
            dims.push(n as usize + 1);
        }
        LbmGrid::new(lo, h, &dims)
    }

    pub fn with_periodic(mut self, axis: usize, periodic: bool) -> Self {
        self.periodic[axis] = periodic;
        self
    }

    pub fn with_solid_mask(mut self, mask: Vec<bool>) -> Result<Self> {
        if mask.len() != self.node_count() {
            return Err(Error::InvalidArgument(format!(
                "solid mask has {} entries for {} nodes",
                mask.len(),
                self.node_count()
            )));
        }
        self.solid = mask;
        Ok(self)
    }

    /// Marks nodes where `pred(x)` holds as solid.
    pub fn mark_solid(&mut self, pred: impl Fn([f64; 2]) -> bool) {
        for n in 0..self.node_count() {
            if pred(self.coords(n)) {
                self.solid[n] = true;
            }
        }
    }

    pub fn nx(&self) -> usize {
        self.dims[0]
    }

    pub fn ny(&self) -> usize {
        self.dims[1]
    }

    pub fn node_count(&self) -> usize {
        self.dims[0] * self.dims[1]
    }

    pub fn index(&self, i: usize, j: usize) -> usize {
        i + self.dims[0] * j
    }

    pub fn ij(&self, n: usize) -> (usize, usize) {
        (n % self.dims[0], n / self.dims[0])
    }

    pub fn coords(&self, n: usize) -> [f64; 2] {
        let (i, j) = self.ij(n);
        [self.origin[0] + i as f64 * self.spacing, self.origin[1] + j as f64 * self.spacing]
    }

    /// Upper corner of the bounding box.
    pub fn upper(&self) -> [f64; 2] {
        [
            self.origin[0] + (self.dims[0] - 1) as f64 * self.spacing,
            self.origin[1] + (self.dims[1] - 1) as f64 * self.spacing,
        ]
    }

    pub fn is_fluid(&self, n: usize) -> bool {
        !self.solid[n]
    }

    /// Neighbour of `(i, j)` shifted by `(di, dj)`, honouring periodic axes.
    pub fn shifted(&self, i: usize, j: usize, di: i32, dj: i32) -> Option<usize> {
        let wrap = |c: usize, d: i32, n: usize, periodic: bool| -> Option<usize> {
            let t = c as i64 + d as i64;
            if t >= 0 && (t as usize) < n {
                Some(t as usize)
            } else if periodic {
                Some(t.rem_euclid(n as i64) as usize)
            } else {
                None
            }
        };
        let ii = wrap(i, di, self.dims[0], self.periodic[0])?;
        let jj = wrap(j, dj, self.dims[1], self.periodic[1] || self.dim == 1)?;
        Some(self.index(ii, jj))
    }

    /// Node indices on one face of the box: 0 = x-min, 1 = x-max, 2 = y-min, 3 = y-max.
    pub fn face_nodes(&self, face: usize) -> Vec<usize> {
        let (nx, ny) = (self.dims[0], self.dims[1]);
        match face {
            0 => (0..ny).map(|j| self.index(0, j)).collect(),
            1 => (0..ny).map(|j| self.index(nx - 1, j)).collect(),
            2 => (0..nx).map(|i| self.index(i, 0)).collect(),
            3 => (0..nx).map(|i| self.index(i, ny - 1)).collect(),
            _ => Vec::new(),
        }
    }

    /// Fluid nodes with a solid neighbour along an axis direction.
    pub fn solid_interface_nodes(&self) -> Vec<usize> {
        (0..self.node_count())
            .filter(|&n| {
                if self.solid[n] {
                    return false;
                }
                let (i, j) = self.ij(n);
                [(1, 0), (-1, 0), (0, 1), (0, -1)]
                    .iter()
                    .any(|&(di, dj)| self.shifted(i, j, di, dj).is_some_and(|m| self.solid[m]))
            })
            .collect()
    }

    /// Index of the node nearest to `x`, if inside the bounding box.
    pub fn nearest_node(&self, x: [f64; 2]) -> Option<usize> {
        let mut ij = [0usize; 2];
        for a in 0..self.dim {
            let s = (x[a] - self.origin[a]) / self.spacing;
            let k = s.round();
            if k < -1e-9 || k > (self.dims[a] - 1) as f64 + 1e-9 {
                return None;
            }
            ij[a] = k.max(0.0) as usize;
        }
        Some(self.index(ij[0], ij[1]))
    }
}
