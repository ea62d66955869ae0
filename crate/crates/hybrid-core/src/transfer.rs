//! Pointwise transfer of concentrations between a finite element mesh and a
//! lattice grid that overlap.
//!
//! Coarse to fine: the finite element interpolant is evaluated at lattice
//! nodes. Fine to coarse: lattice values are interpolated bilinearly (linearly
//! in 1D) from the cell that contains each mesh node.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fem::{ElementLocator, Mesh};
use crate::lbm::LbmGrid;

/// Relative distance to a lattice line below which a point counts as on it.
const SNAP: f64 = 1e-9;

/// Lattice node receiving the finite element interpolant.
#[derive(Debug, Clone, PartialEq)]
pub struct FemToLbmEntry {
    pub lbm_node: usize,
    pub element: usize,
    /// Mesh nodes of `element`, aligned with `weights`.
    pub fem_nodes: Vec<usize>,
    pub weights: Vec<f64>,
}

/// Mesh node receiving the lattice interpolant.
#[derive(Debug, Clone, PartialEq)]
pub struct LbmToFemEntry {
    pub fem_node: usize,
    /// Cell corners in the order `(0,0), (1,0), (1,1), (0,1)`; two in 1D.
    pub corners: Vec<usize>,
    pub weights: Vec<f64>,
    pub gamma: [f64; 2],
}

/// Precomputed correspondences for one mesh/grid pair.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct TransferMap {
    pub fem_to_lbm: Vec<FemToLbmEntry>,
    pub lbm_to_fem: Vec<LbmToFemEntry>,
}

impl TransferMap {
    pub fn lbm_nodes(&self) -> Vec<usize> {
        self.fem_to_lbm.iter().map(|e| e.lbm_node).collect()
    }

    pub fn fem_nodes(&self) -> Vec<usize> {
        self.lbm_to_fem.iter().map(|e| e.fem_node).collect()
    }
}

/// Builds the map for the given receiving node sets.
///
/// `interface_lbm` are lattice nodes fed from the mesh, `interface_fem` mesh
/// nodes fed from the lattice. Duplicates in either list are rejected.
pub fn build_transfer_map(
    mesh: &Mesh,
    locator: &ElementLocator,
    grid: &LbmGrid,
    interface_fem: &[usize],
    interface_lbm: &[usize],
) -> Result<TransferMap> {
    check_unique(interface_fem, mesh.node_count(), "mesh")?;
    check_unique(interface_lbm, grid.node_count(), "lattice")?;
    let mut map = TransferMap::default();
    for &n in interface_lbm {
        let x = grid.coords(n);
        let loc = locator.locate(mesh, x).map_err(|e| {
            Error::Geometry(format!("lattice node {n} at ({}, {}) is not inside the mesh: {e}", x[0], x[1]))
        })?;
        map.fem_to_lbm.push(FemToLbmEntry {
            lbm_node: n,
            element: loc.element,
            fem_nodes: mesh.elements[loc.element].clone(),
            weights: loc.weights,
        });
    }
    for &a in interface_fem {
        let x = mesh.nodes[a];
        let (corners, weights, gamma) = patch_weights(grid, x)
            .map_err(|e| Error::Geometry(format!("mesh node {a} at ({}, {}): {e}", x[0], x[1])))?;
        map.lbm_to_fem.push(LbmToFemEntry { fem_node: a, corners, weights, gamma });
    }
    Ok(map)
}

fn check_unique(nodes: &[usize], count: usize, what: &str) -> Result<()> {
    let mut seen = vec![false; count];
    for &n in nodes {
        if n >= count {
            return Err(Error::Geometry(format!("{what} node {n} out of range")));
        }
        if std::mem::replace(&mut seen[n], true) {
            return Err(Error::Geometry(format!("{what} node {n} listed twice")));
        }
    }
    Ok(())
}

/// Lower cell index and local coordinate along one axis.
///
/// Points on a lattice line belong to the cell below it (`gamma = 1`),
/// except on the first line.
fn axis_cell(s: f64, n: usize, periodic: bool) -> std::result::Result<(usize, usize, f64), String> {
    let last = (n - 1) as f64;
    let upper = if periodic { n as f64 } else { last };
    if s < -SNAP || s > upper + SNAP {
        return Err("outside the lattice bounding box".into());
    }
    let s = s.clamp(0.0, upper);
    let k = s.round();
    let (i0, g) = if (s - k).abs() <= SNAP {
        if k == 0.0 {
            (0.0, 0.0)
        } else {
            (k - 1.0, 1.0)
        }
    } else {
        (s.floor(), s - s.floor())
    };
    let i0 = i0 as usize;
    if n == 1 {
        return if g == 0.0 { Ok((0, 0, 0.0)) } else { Err("degenerate lattice axis".into()) };
    }
    let i1 = if i0 + 1 < n { i0 + 1 } else { 0 };
    Ok((i0, i1, g))
}

fn patch_weights(grid: &LbmGrid, x: [f64; 2]) -> std::result::Result<(Vec<usize>, Vec<f64>, [f64; 2]), String> {
    let h = grid.spacing;
    let (i0, i1, gx) = axis_cell((x[0] - grid.origin[0]) / h, grid.nx(), grid.periodic[0])?;
    let (corners, mut weights, gamma) = if grid.dim == 1 {
        (vec![grid.index(i0, 0), grid.index(i1, 0)], vec![1.0 - gx, gx], [gx, 0.0])
    } else {
        let (j0, j1, gy) = axis_cell((x[1] - grid.origin[1]) / h, grid.ny(), grid.periodic[1])?;
        (
            vec![grid.index(i0, j0), grid.index(i1, j0), grid.index(i1, j1), grid.index(i0, j1)],
            vec![(1.0 - gx) * (1.0 - gy), gx * (1.0 - gy), gx * gy, (1.0 - gx) * gy],
            [gx, gy],
        )
    };
    let fluid: f64 = corners.iter().zip(&weights).filter(|(c, _)| grid.is_fluid(**c)).map(|(_, w)| w).sum();
    let solid_weight = 1.0 - fluid;
    if solid_weight > 0.0 {
        if fluid <= 1e-12 {
            return Err("all surrounding lattice nodes are solid".into());
        }
        for (c, w) in corners.iter().zip(weights.iter_mut()) {
            *w = if grid.is_fluid(*c) { *w / fluid } else { 0.0 };
        }
    }
    Ok((corners, weights, gamma))
}

/// Finite element values at the mapped lattice nodes.
pub fn fem_to_lbm(map: &TransferMap, d: &[f64]) -> Vec<f64> {
    map.fem_to_lbm
        .par_iter()
        .map(|e| e.fem_nodes.iter().zip(&e.weights).map(|(&a, w)| d[a] * w).sum())
        .collect()
}

/// Lattice values at the mapped mesh nodes.
pub fn lbm_to_fem(map: &TransferMap, u: &[f64]) -> Vec<f64> {
    map.lbm_to_fem
        .par_iter()
        .map(|e| e.corners.iter().zip(&e.weights).map(|(&c, w)| u[c] * w).sum())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn square(nc: usize, nf: usize) -> (Mesh, ElementLocator, LbmGrid) {
        let mesh = Mesh::structured(&[0.0, 0.0], &[1.0, 1.0], &[nc, nc], 1).unwrap();
        let loc = ElementLocator::new(&mesh);
        let grid = LbmGrid::covering(&[0.0, 0.0], &[1.0, 1.0], 1.0 / nf as f64).unwrap();
        (mesh, loc, grid)
    }

    fn all(n: usize) -> Vec<usize> {
        (0..n).collect()
    }

    #[test]
    fn matching_grids_are_indicators() {
        let (mesh, loc, grid) = square(4, 4);
        let map = build_transfer_map(&mesh, &loc, &grid, &all(mesh.node_count()), &all(grid.node_count())).unwrap();
        for e in &map.fem_to_lbm {
            assert!(e.weights.iter().all(|w| w.abs() < 1e-12 || (w - 1.0).abs() < 1e-12));
        }
        for e in &map.lbm_to_fem {
            assert!(e.weights.iter().all(|w| w.abs() < 1e-12 || (w - 1.0).abs() < 1e-12));
        }
        let d: Vec<f64> = (0..mesh.node_count()).map(|i| (i as f64).cos()).collect();
        let u = fem_to_lbm(&map, &d);
        let mut on_lattice = vec![0.0; grid.node_count()];
        for (e, v) in map.fem_to_lbm.iter().zip(&u) {
            on_lattice[e.lbm_node] = *v;
        }
        let back = lbm_to_fem(&map, &on_lattice);
        for (e, v) in map.lbm_to_fem.iter().zip(&back) {
            assert_relative_eq!(*v, d[e.fem_node], epsilon = 1e-13);
        }
    }

    #[test]
    fn cell_centre_gamma() {
        let grid = LbmGrid::covering(&[0.0, 0.0], &[1.0, 1.0], 0.25).unwrap();
        let (c, w, g) = patch_weights(&grid, [0.375, 0.625]).unwrap();
        assert_eq!(g, [0.5, 0.5]);
        assert_eq!(c, vec![grid.index(1, 2), grid.index(2, 2), grid.index(2, 3), grid.index(1, 3)]);
        let u = [0.0, 1.0, 1.0, 0.0];
        assert_relative_eq!(w.iter().zip(&u).map(|(a, b)| a * b).sum::<f64>(), 0.5, epsilon = 1e-15);
    }

    #[test]
    fn one_d_quarter_point() {
        let grid = LbmGrid::covering(&[0.0], &[1.0], 0.1).unwrap();
        let (c, w, _) = patch_weights(&grid, [0.325, 0.0]).unwrap();
        assert_eq!(c, vec![3, 4]);
        assert_relative_eq!(w[0], 0.75, epsilon = 1e-12);
        assert_relative_eq!(w[1], 0.25, epsilon = 1e-12);
    }

    #[test]
    fn edge_points_take_lower_cell() {
        let grid = LbmGrid::covering(&[0.0], &[1.0], 0.25).unwrap();
        let (c, w, g) = patch_weights(&grid, [0.5, 0.0]).unwrap();
        assert_eq!((c, g[0]), (vec![1, 2], 1.0));
        assert_eq!(w, vec![0.0, 1.0]);
        let (c, _, g) = patch_weights(&grid, [0.0, 0.0]).unwrap();
        assert_eq!((c, g[0]), (vec![0, 1], 0.0));
    }

    #[test]
    fn solid_corners_renormalised() {
        let mut grid = LbmGrid::covering(&[0.0, 0.0], &[1.0, 1.0], 0.5).unwrap();
        let s = grid.index(1, 1);
        grid.solid[s] = true;
        let (c, w, _) = patch_weights(&grid, [0.25, 0.25]).unwrap();
        assert_eq!(w[2], 0.0);
        assert_relative_eq!(w.iter().sum::<f64>(), 1.0, epsilon = 1e-15);
        assert!(w.iter().zip(&c).all(|(w, c)| *w == 0.0 || grid.is_fluid(*c)));
    }

    #[test]
    fn periodic_wraps_last_cell() {
        let grid = LbmGrid::new(&[0.0, 0.0], 0.25, &[3, 4]).unwrap().with_periodic(1, true);
        let (c, w, _) = patch_weights(&grid, [0.3, 0.875]).unwrap();
        assert_eq!(c, vec![grid.index(1, 3), grid.index(2, 3), grid.index(2, 0), grid.index(1, 0)]);
        assert_relative_eq!(w[2] + w[3], 0.5, epsilon = 1e-12);
        assert!(patch_weights(&grid, [0.25, 1.1]).is_err());
    }

    #[test]
    fn unlocatable_nodes_are_named() {
        let (mesh, loc, _) = square(2, 2);
        let big = LbmGrid::covering(&[0.0, 0.0], &[2.0, 1.0], 0.5).unwrap();
        let far = big.index(4, 0);
        let err = build_transfer_map(&mesh, &loc, &big, &[], &[far]).unwrap_err();
        assert!(matches!(&err, Error::Geometry(m) if m.contains(&format!("node {far}"))));
        let small = LbmGrid::covering(&[0.0, 0.0], &[0.5, 0.5], 0.25).unwrap();
        assert!(build_transfer_map(&mesh, &loc, &small, &[8], &[]).is_err());
        assert!(build_transfer_map(&mesh, &loc, &small, &[0, 0], &[]).is_err());
    }

    proptest! {
        #[test]
        fn affine_fem_field_exact_at_lattice(a in -2.0f64..2.0, b in -2.0f64..2.0, c in -2.0f64..2.0, nc in 2usize..7, nf in 3usize..13) {
            let (mesh, loc, grid) = square(nc, nf);
            let map = build_transfer_map(&mesh, &loc, &grid, &[], &all(grid.node_count())).unwrap();
            let d: Vec<f64> = mesh.nodes.iter().map(|p| a + b * p[0] + c * p[1]).collect();
            let u = fem_to_lbm(&map, &d);
            for (e, v) in map.fem_to_lbm.iter().zip(&u) {
                let x = grid.coords(e.lbm_node);
                prop_assert!((v - (a + b * x[0] + c * x[1])).abs() < 1e-12);
                prop_assert!(e.weights.iter().all(|w| *w >= 0.0));
            }
        }

        #[test]
        fn bilinear_field_exact_at_mesh(a in -2.0f64..2.0, b in -2.0f64..2.0, c in -2.0f64..2.0, dd in -2.0f64..2.0,
                                         nc in 2usize..9, nf in 2usize..11) {
            let (mesh, loc, grid) = square(nc, nf);
            let map = build_transfer_map(&mesh, &loc, &grid, &all(mesh.node_count()), &[]).unwrap();
            let g = |x: [f64; 2]| a + b * x[0] + c * x[1] + dd * x[0] * x[1];
            let u: Vec<f64> = (0..grid.node_count()).map(|n| g(grid.coords(n))).collect();
            let v = lbm_to_fem(&map, &u);
            for (e, val) in map.lbm_to_fem.iter().zip(&v) {
                prop_assert!((val - g(mesh.nodes[e.fem_node])).abs() < 1e-12);
                prop_assert!((e.weights.iter().sum::<f64>() - 1.0).abs() < 1e-14);
                prop_assert!(e.weights.iter().all(|w| *w >= 0.0));
            }
        }

        #[test]
        fn constants_reproduced(k in -5.0f64..5.0, nc in 1usize..6, nf in 1usize..9) {
            let (mesh, loc, grid) = square(nc, nf);
            let map = build_transfer_map(&mesh, &loc, &grid, &all(mesh.node_count()), &all(grid.node_count())).unwrap();
            prop_assert!(fem_to_lbm(&map, &vec![k; mesh.node_count()]).iter().all(|v| (v - k).abs() < 1e-12));
            prop_assert!(lbm_to_fem(&map, &vec![k; grid.node_count()]).iter().all(|v| (v - k).abs() < 1e-12));
        }
    }
}
