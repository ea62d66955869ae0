use super::assembly::lagrange_1d;
use super::mesh::Mesh;
use crate::error::{Error, Result};

/// Containing element of a point and the basis values there.
#[derive(Debug, Clone, PartialEq)]
pub struct Located {
    pub element: usize,
    pub weights: Vec<f64>,
}

/// Uniform bucket grid over element bounding boxes.
#[derive(Debug, Clone)]
pub struct ElementLocator {
    lo: [f64; 2],
    cell: [f64; 2],
    n: [usize; 2],
    buckets: Vec<Vec<usize>>,
    tol: f64,
}

impl ElementLocator {
    pub fn new(mesh: &Mesh) -> Self {
        let (lo, hi) = mesh.bounds();
        let ne = mesh.element_count().max(1);
        let ext = [(hi[0] - lo[0]).max(1e-300), (hi[1] - lo[1]).max(1e-300)];
        let n = if mesh.dim == 1 {
            [ne.clamp(1, 1 << 20), 1]
        } else {
            let per = ((ne as f64 / 2.0).sqrt().ceil() as usize).clamp(1, 4096);
            let aspect = ext[0] / ext[1];
            let nx = ((per as f64 * aspect.sqrt()).ceil() as usize).clamp(1, 4096);
            let ny = ((per as f64 / aspect.sqrt()).ceil() as usize).clamp(1, 4096);
            [nx, ny]
        };
        let cell = [ext[0] / n[0] as f64, ext[1] / n[1] as f64];
        let hmin = (0..mesh.element_count()).map(|e| mesh.diameter(e)).fold(f64::INFINITY, f64::min);
        let tol = 1e-10 * if hmin.is_finite() { hmin } else { 1.0 };
        let mut loc = ElementLocator { lo, cell, n, buckets: vec![Vec::new(); n[0] * n[1]], tol };
        for (e, el) in mesh.elements.iter().enumerate() {
            let mut blo = [f64::INFINITY; 2];
            let mut bhi = [f64::NEG_INFINITY; 2];
            for &v in el {
                for a in 0..2 {
                    blo[a] = blo[a].min(mesh.nodes[v][a]);
                    bhi[a] = bhi[a].max(mesh.nodes[v][a]);
                }
            }
            let (i0, j0) = loc.cell_of([blo[0] - tol, blo[1] - tol]);
            let (i1, j1) = loc.cell_of([bhi[0] + tol, bhi[1] + tol]);
            for j in j0..=j1 {
                for i in i0..=i1 {
                    loc.buckets[i + n[0] * j].push(e);
                }
            }
        }
        loc
    }

    fn cell_of(&self, x: [f64; 2]) -> (usize, usize) {
        let c = |a: usize| -> usize {
            let s = ((x[a] - self.lo[a]) / self.cell[a]).floor();
            if s < 0.0 {
                0
            } else {
                (s as usize).min(self.n[a] - 1)
            }
        };
        (c(0), c(1))
    }

    /// Finds the element containing `x` (boundary within `1e-10 h`).
    pub fn locate(&self, mesh: &Mesh, x: [f64; 2]) -> Result<Located> {
        let (i, j) = self.cell_of(x);
        let mut best: Option<(f64, Located)> = None;
        for &e in &self.buckets[i + self.n[0] * j] {
            if let Some((slack, loc)) = self.try_element(mesh, e, x) {
                if slack >= -self.tol {
                    // prefer the element with the point most inside, lowest index on ties
                    if best.as_ref().is_none_or(|(s, _)| slack > *s + 1e-14) {
                        best = Some((slack, loc));
                    }
                }
            }
        }
        if let Some((_, loc)) = best {
            return Ok(loc);
        }
        let nearest = (0..mesh.element_count())
            .min_by(|&a, &b| {
                let da = dist2(mesh.centroid(a), x);
                let db = dist2(mesh.centroid(b), x);
                da.partial_cmp(&db).unwrap_or(std::cmp::Ordering::Equal)
            })
            .unwrap_or(0);
        if let Some((slack, loc)) = self.try_element(mesh, nearest, x) {
            if slack >= -self.tol {
                return Ok(loc);
            }
        }
        Err(Error::OutOfDomain { x: x[0], y: x[1], nearest })
    }

    /// Minimum barycentric coordinate (scaled to length) and the basis weights.
    fn try_element(&self, mesh: &Mesh, e: usize, x: [f64; 2]) -> Option<(f64, Located)> {
        let el = &mesh.elements[e];
        if mesh.dim == 1 {
            let (a, b) = (mesh.nodes[el[0]][0], mesh.nodes[*el.last()?][0]);
            let len = b - a;
            let xi = (x[0] - a) / len;
            let slack = (x[0] - a).min(b - x[0]);
            let xi = xi.clamp(0.0, 1.0);
            let (w, _, _) = lagrange_1d(mesh.order, xi);
            return Some((slack, Located { element: e, weights: w }));
        }
        let [a, b, c] = [mesh.nodes[el[0]], mesh.nodes[el[1]], mesh.nodes[el[2]]];
        let det = (b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]);
        let l1 = ((x[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (x[1] - a[1])) / det;
        let l2 = ((b[0] - a[0]) * (x[1] - a[1]) - (x[0] - a[0]) * (b[1] - a[1])) / det;
        let l0 = 1.0 - l1 - l2;
        let h = mesh.diameter(e);
        let slack = l0.min(l1).min(l2) * h;
        let mut w = [l0, l1, l2];
        if slack < 0.0 && slack >= -self.tol {
            for v in &mut w {
                *v = v.max(0.0);
            }
            let s: f64 = w.iter().sum();
            for v in &mut w {
                *v /= s;
            }
        }
        Some((slack, Located { element: e, weights: w.to_vec() }))
    }
}

fn dist2(a: [f64; 2], b: [f64; 2]) -> f64 {
    (a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)
}

/// Evaluates the finite element function with nodal values `d` at `x`.
pub fn interpolate_at(mesh: &Mesh, locator: &ElementLocator, d: &[f64], x: [f64; 2]) -> Result<f64> {
    let loc = locator.locate(mesh, x)?;
    Ok(mesh.elements[loc.element].iter().zip(&loc.weights).map(|(&n, w)| d[n] * w).sum())
}
