use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use crate::error::{Error, Result};

/// Interval or triangle mesh.
///
/// 1D elements of order `p` list their `p + 1` nodes left to right.
/// Triangles are P1 with counter-clockwise vertices. Boundary facets
/// (end points in 1D, edges in 2D) carry string tags.
#[derive(Debug, Clone, PartialEq)]
pub struct Mesh {
    pub dim: usize,
    pub order: usize,
    pub nodes: Vec<[f64; 2]>,
    pub elements: Vec<Vec<usize>>,
    pub facet_tags: BTreeMap<String, Vec<Vec<usize>>>,
}

impl Mesh {
    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn element_count(&self) -> usize {
        self.elements.len()
    }

    /// Uniform mesh of `[lo, hi]` (1D, any order) or of the box
    /// `[lo0, hi0] x [lo1, hi1]` (2D, P1, each cell cut along its rising
    /// diagonal). Facet tags: `left`, `right`, `bottom`, `top`.
    pub fn structured(lo: &[f64], hi: &[f64], divisions: &[usize], order: usize) -> Result<Self> {
        match divisions.len() {
            1 => Mesh::interval(lo[0], hi[0], divisions[0], order),
            2 => {
                if order != 1 {
                    return Err(Error::InvalidArgument("triangle meshes support order 1 only".into()));
                }
                Mesh::rectangle([lo[0], lo[1]], [hi[0], hi[1]], [divisions[0], divisions[1]])
            }
            _ => Err(Error::InvalidArgument("structured meshes are 1D or 2D".into())),
        }
    }

    pub fn interval(a: f64, b: f64, n: usize, order: usize) -> Result<Self> {
        if n == 0 || !(b > a) {
            return Err(Error::InvalidArgument(format!("degenerate interval [{a}, {b}] with {n} divisions")));
        }
        if !(1..=5).contains(&order) {
            return Err(Error::InvalidArgument(format!("element order {order} outside 1..=5")));
        }
        let count = n * order + 1;
        let nodes: Vec<[f64; 2]> = (0..count)
            .map(|k| {
                let x = if k == count - 1 { b } else { a + (b - a) * k as f64 / (count - 1) as f64 };
                [x, 0.0]
            })
            .collect();
        let elements = (0..n).map(|e| (0..=order).map(|k| e * order + k).collect()).collect();
        let mut facet_tags = BTreeMap::new();
        facet_tags.insert("left".to_string(), vec![vec![0]]);
        facet_tags.insert("right".to_string(), vec![vec![count - 1]]);
        Ok(Mesh { dim: 1, order, nodes, elements, facet_tags })
    }

    pub fn rectangle(lo: [f64; 2], hi: [f64; 2], n: [usize; 2]) -> Result<Self> {
        if n[0] == 0 || n[1] == 0 || !(hi[0] > lo[0]) || !(hi[1] > lo[1]) {
            return Err(Error::InvalidArgument(format!("degenerate box {lo:?}..{hi:?} with {n:?} divisions")));
        }
        let (nx, ny) = (n[0] + 1, n[1] + 1);
        let coord = |k: usize, m: usize, a: f64, b: f64| if k == m - 1 { b } else { a + (b - a) * k as f64 / (m - 1) as f64 };
        let mut nodes = Vec::with_capacity(nx * ny);
        for j in 0..ny {
            for i in 0..nx {
                nodes.push([coord(i, nx, lo[0], hi[0]), coord(j, ny, lo[1], hi[1])]);
            }
        }
        let id = |i: usize, j: usize| i + nx * j;
        let mut elements = Vec::with_capacity(2 * n[0] * n[1]);
        for j in 0..n[1] {
            for i in 0..n[0] {
                elements.push(vec![id(i, j), id(i + 1, j), id(i + 1, j + 1)]);
                elements.push(vec![id(i, j), id(i + 1, j + 1), id(i, j + 1)]);
            }
        }
        let mut facet_tags = BTreeMap::new();
        facet_tags.insert("bottom".to_string(), (0..n[0]).map(|i| vec![id(i, 0), id(i + 1, 0)]).collect());
        facet_tags.insert("top".to_string(), (0..n[0]).map(|i| vec![id(i + 1, ny - 1), id(i, ny - 1)]).collect());
        facet_tags.insert("left".to_string(), (0..n[1]).map(|j| vec![id(0, j + 1), id(0, j)]).collect());
        facet_tags.insert("right".to_string(), (0..n[1]).map(|j| vec![id(nx - 1, j), id(nx - 1, j + 1)]).collect());
        Ok(Mesh { dim: 2, order: 1, nodes, elements, facet_tags })
    }

    /// Signed length (1D) or area (2D) of an element.
    pub fn measure(&self, e: usize) -> f64 {
        let el = &self.elements[e];
        if self.dim == 1 {
            self.nodes[el[el.len() - 1]][0] - self.nodes[el[0]][0]
        } else {
            let [a, b, c] = [self.nodes[el[0]], self.nodes[el[1]], self.nodes[el[2]]];
            0.5 * ((b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]))
        }
    }

    /// Longest edge (2D) or length (1D).
    pub fn diameter(&self, e: usize) -> f64 {
        let el = &self.elements[e];
        if self.dim == 1 {
            return self.measure(e).abs();
        }
        let d = |p: usize, q: usize| {
            let (a, b) = (self.nodes[el[p]], self.nodes[el[q]]);
            ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt()
        };
        d(0, 1).max(d(1, 2)).max(d(2, 0))
    }

    pub fn centroid(&self, e: usize) -> [f64; 2] {
        let el = &self.elements[e];
        let (first, last) = (self.nodes[el[0]], self.nodes[*el.last().expect("element nodes")]);
        if self.dim == 1 {
            return [0.5 * (first[0] + last[0]), 0.0];
        }
        let mut c = [0.0; 2];
        for &n in el {
            c[0] += self.nodes[n][0] / 3.0;
            c[1] += self.nodes[n][1] / 3.0;
        }
        c
    }

    /// Nodes touched by the facets of one tag.
    pub fn tagged_nodes(&self, tag: &str) -> Result<Vec<usize>> {
        let facets = self
            .facet_tags
            .get(tag)
            .ok_or_else(|| Error::InvalidArgument(format!("mesh has no boundary tag '{tag}'")))?;
        let set: BTreeSet<usize> = facets.iter().flatten().copied().collect();
        Ok(set.into_iter().collect())
    }

    /// Bounding box `(lo, hi)`.
    pub fn bounds(&self) -> ([f64; 2], [f64; 2]) {
        let mut lo = [f64::INFINITY; 2];
        let mut hi = [f64::NEG_INFINITY; 2];
        for p in &self.nodes {
            for a in 0..2 {
                lo[a] = lo[a].min(p[a]);
                hi[a] = hi[a].max(p[a]);
            }
        }
        (lo, hi)
    }

    /// Checks connectivity, orientation and tag uniqueness.
    pub fn validate(&self) -> Result<()> {
        let per = if self.dim == 1 { self.order + 1 } else { 3 };
        for (e, el) in self.elements.iter().enumerate() {
            if el.len() != per {
                return Err(Error::Geometry(format!("element {e} has {} nodes, expected {per}", el.len())));
            }
            if let Some(&bad) = el.iter().find(|&&n| n >= self.nodes.len()) {
                return Err(Error::Geometry(format!("element {e} references missing node {bad}")));
            }
            if !(self.measure(e) > 0.0) {
                return Err(Error::Geometry(format!("element {e} has non-positive measure {}", self.measure(e))));
            }
        }
        let mut seen = BTreeSet::new();
        for (tag, facets) in &self.facet_tags {
            for f in facets {
                let mut key = f.clone();
                key.sort_unstable();
                if !seen.insert(key) {
                    return Err(Error::Geometry(format!("facet {f:?} tagged more than once (last tag '{tag}')")));
                }
                if f.iter().any(|&n| n >= self.nodes.len()) {
                    return Err(Error::Geometry(format!("facet {f:?} in '{tag}' references a missing node")));
                }
            }
        }
        Ok(())
    }

    /// Plain-text form, one record per line:
    ///
    /// ```text
    /// mesh <dim> <order>
    /// node <x> <y>
    /// element <n0> <n1> ...
    /// facet <tag> <n0> [<n1>]
    /// ```
    ///
    /// Lines starting with `#` are comments. Node and element indices are
    /// the record order, zero based.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "mesh {} {}", self.dim, self.order);
        for p in &self.nodes {
            let _ = writeln!(s, "node {:e} {:e}", p[0], p[1]);
        }
        for el in &self.elements {
            let ids: Vec<String> = el.iter().map(|n| n.to_string()).collect();
            let _ = writeln!(s, "element {}", ids.join(" "));
        }
        for (tag, facets) in &self.facet_tags {
            for f in facets {
                let ids: Vec<String> = f.iter().map(|n| n.to_string()).collect();
                let _ = writeln!(s, "facet {tag} {}", ids.join(" "));
            }
        }
        s
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let bad = |line: usize, msg: &str| Error::InvalidArgument(format!("mesh text line {}: {msg}", line + 1));
        let mut mesh = Mesh { dim: 0, order: 1, nodes: Vec::new(), elements: Vec::new(), facet_tags: BTreeMap::new() };
        for (ln, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let mut it = line.split_whitespace();
            let rec = it.next().unwrap_or_default();
            let rest: Vec<&str> = it.collect();
            let ints = |v: &[&str]| -> Result<Vec<usize>> {
                v.iter().map(|t| t.parse::<usize>().map_err(|_| bad(ln, &format!("bad index '{t}'")))).collect()
            };
            match rec {
                "mesh" => {
                    let v = ints(&rest)?;
                    if v.len() != 2 || !(1..=2).contains(&v[0]) {
                        return Err(bad(ln, "expected 'mesh <dim> <order>'"));
                    }
                    mesh.dim = v[0];
                    mesh.order = v[1];
                }
                "node" => {
                    let v: Vec<f64> = rest
                        .iter()
                        .map(|t| t.parse::<f64>().map_err(|_| bad(ln, &format!("bad coordinate '{t}'"))))
                        .collect::<Result<_>>()?;
                    if v.is_empty() || v.len() > 2 {
                        return Err(bad(ln, "expected one or two coordinates"));
                    }
                    mesh.nodes.push([v[0], v.get(1).copied().unwrap_or(0.0)]);
                }
                "element" => mesh.elements.push(ints(&rest)?),
                "facet" => {
                    let (tag, ids) = rest.split_first().ok_or_else(|| bad(ln, "facet needs a tag"))?;
                    mesh.facet_tags.entry(tag.to_string()).or_default().push(ints(ids)?);
                }
                other => return Err(bad(ln, &format!("unknown record '{other}'"))),
            }
        }
        if mesh.dim == 0 {
            return Err(Error::InvalidArgument("mesh text lacks a 'mesh' header".into()));
        }
        mesh.validate()?;
        Ok(mesh)
    }
}
