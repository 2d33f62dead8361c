use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::linalg::{cross, det, inverse, norm, sub, Mat3, Point};

/// A boundary facet: `dim` vertex ids (unused slots are `usize::MAX`) and a
/// patch tag.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BoundaryFacet {
    pub verts: [usize; 3],
    pub tag: u32,
}

/// Conforming simplicial mesh in two or three dimensions. Points always carry
/// three coordinates; in 2D the last one is zero.
#[derive(Clone, Debug)]
pub struct Mesh {
    pub dim: usize,
    pub nodes: Vec<Point>,
    pub cells: Vec<[usize; 4]>,
    pub bfacets: Vec<BoundaryFacet>,
    /// Sorted ids of nodes lying on the boundary.
    pub boundary_nodes: Vec<usize>,
    /// Position of each node in `boundary_nodes`, or `usize::MAX` if interior.
    pub boundary_pos: Vec<usize>,
}

/// Volume and barycentric gradients of one cell.
#[derive(Clone, Copy, Debug)]
pub struct CellGeometry {
    pub volume: f64,
    pub grads: [Point; 4],
}

impl Mesh {
    /// Builds a mesh from nodes and cells: orients every cell positively,
    /// extracts the boundary facets (faces used by exactly one cell) and
    /// orients them outward.
    pub fn from_cells(dim: usize, nodes: Vec<Point>, mut cells: Vec<[usize; 4]>) -> Result<Self> {
        if dim != 2 && dim != 3 {
            return Err(Error::Mesh(format!("dimension {dim} not supported")));
        }
        for c in cells.iter_mut() {
            if c[..=dim].iter().any(|&v| v >= nodes.len()) {
                return Err(Error::Mesh("cell references a missing node".into()));
            }
            let s = signed_measure(dim, &nodes, c);
            if s == 0.0 {
                return Err(Error::Mesh("degenerate cell with zero volume".into()));
            }
            if s < 0.0 {
                c.swap(0, 1);
            }
            if dim == 2 {
                c[3] = usize::MAX;
            }
        }

        let mut faces: HashMap<[usize; 3], (usize, usize, u32)> = HashMap::new();
        for (ci, c) in cells.iter().enumerate() {
            for skip in 0..=dim {
                let mut f = [usize::MAX; 3];
                let mut k = 0;
                for (j, &v) in c[..=dim].iter().enumerate() {
                    if j != skip {
                        f[k] = v;
                        k += 1;
                    }
                }
                f[..dim].sort_unstable();
                let e = faces.entry(f).or_insert((ci, skip, 0));
                e.2 += 1;
            }
        }
        let mut bfacets: Vec<BoundaryFacet> = faces
            .into_iter()
            .filter(|(_, (_, _, count))| *count == 1)
            .map(|(f, (ci, skip, _))| {
                let mut verts = f;
                let opposite = cells[ci][skip];
                orient_outward(dim, &nodes, &mut verts, opposite);
                BoundaryFacet { verts, tag: 0 }
            })
            .collect();
        bfacets.sort_unstable_by_key(|f| {
            let mut k = f.verts;
            k[..dim].sort_unstable();
            k
        });
        Ok(Self::assemble(dim, nodes, cells, bfacets))
    }

    /// Builds a mesh with explicitly given boundary facets (e.g. from a file).
    pub fn from_parts(
        dim: usize,
        nodes: Vec<Point>,
        cells: Vec<[usize; 4]>,
        bfacets: Vec<BoundaryFacet>,
    ) -> Result<Self> {
        let mut m = Self::from_cells(dim, nodes, cells)?;
        if !bfacets.is_empty() {
            // keep the declared tags on matching facets
            let mut tags = HashMap::new();
            for f in &bfacets {
                let mut k = f.verts;
                k[..dim].sort_unstable();
                tags.insert(k, f.tag);
            }
            for f in m.bfacets.iter_mut() {
                let mut k = f.verts;
                k[..dim].sort_unstable();
                match tags.get(&k) {
                    Some(t) => f.tag = *t,
                    None => {
                        return Err(Error::Mesh(
                            "declared boundary facets do not match the mesh boundary".into(),
                        ))
                    }
                }
            }
            if tags.len() != m.bfacets.len() {
                return Err(Error::Mesh(
                    "declared boundary facets do not match the mesh boundary".into(),
                ));
            }
        }
        Ok(m)
    }

    fn assemble(dim: usize, nodes: Vec<Point>, cells: Vec<[usize; 4]>, bfacets: Vec<BoundaryFacet>) -> Self {
        let mut on_b = vec![false; nodes.len()];
        for f in &bfacets {
            for &v in &f.verts[..dim] {
                on_b[v] = true;
            }
        }
        let boundary_nodes: Vec<usize> = (0..nodes.len()).filter(|&i| on_b[i]).collect();
        let mut boundary_pos = vec![usize::MAX; nodes.len()];
        for (k, &i) in boundary_nodes.iter().enumerate() {
            boundary_pos[i] = k;
        }
        Mesh { dim, nodes, cells, bfacets, boundary_nodes, boundary_pos }
    }

    /// Same topology, nodes moved by `f`.
    pub fn mapped(&self, f: impl Fn(&Point) -> Point) -> Result<Self> {
        let nodes: Vec<Point> = self.nodes.iter().map(f).collect();
        for c in &self.cells {
            if signed_measure(self.dim, &nodes, c) <= 0.0 {
                return Err(Error::Mesh("mapping inverted a cell".into()));
            }
        }
        let mut m = self.clone();
        m.nodes = nodes;
        Ok(m)
    }

    #[inline]
    pub fn cell(&self, c: usize) -> &[usize] {
        &self.cells[c][..=self.dim]
    }

    #[inline]
    pub fn facet(&self, f: usize) -> &[usize] {
        &self.bfacets[f].verts[..self.dim]
    }

    pub fn n_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn n_boundary(&self) -> usize {
        self.boundary_nodes.len()
    }

    pub fn is_boundary(&self, i: usize) -> bool {
        self.boundary_pos[i] != usize::MAX
    }

    pub fn interior_nodes(&self) -> Vec<usize> {
        (0..self.nodes.len()).filter(|&i| !self.is_boundary(i)).collect()
    }

    pub fn cell_geometry(&self, c: usize) -> CellGeometry {
        let d = self.dim;
        let v = self.cell(c);
        let x0 = self.nodes[v[0]];
        // J has columns x_i - x_0; barycentric gradients are rows of J⁻¹
        let mut j: Mat3 = [[0.0; 3]; 3];
        for k in 0..d {
            let e = sub(&self.nodes[v[k + 1]], &x0);
            for r in 0..d {
                j[r][k] = e[r];
            }
        }
        let dj = det(&j, d);
        let fact = if d == 2 { 2.0 } else { 6.0 };
        let inv = inverse(&j, d).unwrap_or([[0.0; 3]; 3]);
        let mut grads = [[0.0; 3]; 4];
        for k in 0..d {
            for r in 0..d {
                grads[k + 1][r] = inv[k][r];
                grads[0][r] -= inv[k][r];
            }
        }
        CellGeometry { volume: dj.abs() / fact, grads }
    }

    pub fn cell_centroid(&self, c: usize) -> Point {
        let v = self.cell(c);
        let mut p = [0.0; 3];
        for &i in v {
            for r in 0..3 {
                p[r] += self.nodes[i][r];
            }
        }
        let k = v.len() as f64;
        [p[0] / k, p[1] / k, p[2] / k]
    }

    pub fn cell_diameter(&self, c: usize) -> f64 {
        let v = self.cell(c);
        let mut h: f64 = 0.0;
        for a in 0..v.len() {
            for b in a + 1..v.len() {
                h = h.max(norm(&sub(&self.nodes[v[a]], &self.nodes[v[b]])));
            }
        }
        h
    }

    /// Largest edge length over all cells.
    pub fn h_max(&self) -> f64 {
        (0..self.cells.len()).map(|c| self.cell_diameter(c)).fold(0.0, f64::max)
    }

    /// Outward unit normal and measure (length or area) of a boundary facet.
    pub fn facet_normal(&self, f: usize) -> (Point, f64) {
        let v = self.facet(f);
        if self.dim == 2 {
            let t = sub(&self.nodes[v[1]], &self.nodes[v[0]]);
            let l = norm(&t);
            ([t[1] / l, -t[0] / l, 0.0], l)
        } else {
            let n = cross(
                &sub(&self.nodes[v[1]], &self.nodes[v[0]]),
                &sub(&self.nodes[v[2]], &self.nodes[v[0]]),
            );
            let a = norm(&n);
            ([n[0] / a, n[1] / a, n[2] / a], 0.5 * a)
        }
    }

    pub fn total_volume(&self) -> f64 {
        (0..self.cells.len()).map(|c| self.cell_geometry(c).volume).sum()
    }

    /// Lumped (row-sum) mass per node.
    pub fn lumped_mass(&self) -> Vec<f64> {
        let mut m = vec![0.0; self.nodes.len()];
        let k = (self.dim + 1) as f64;
        for c in 0..self.cells.len() {
            let vol = self.cell_geometry(c).volume;
            for &i in self.cell(c) {
                m[i] += vol / k;
            }
        }
        m
    }

    /// Checks positivity of all cells and the outward orientation of facets.
    pub fn validate(&self) -> Result<()> {
        for c in 0..self.cells.len() {
            if signed_measure(self.dim, &self.nodes, &self.cells[c]) <= 0.0 {
                return Err(Error::Mesh(format!("cell {c} has non-positive volume")));
            }
        }
        if self.bfacets.is_empty() {
            return Err(Error::Mesh("mesh has no boundary".into()));
        }
        // divergence theorem: sum of outward normals times areas vanishes
        let mut s = [0.0; 3];
        let mut total = 0.0;
        for f in 0..self.bfacets.len() {
            let (n, a) = self.facet_normal(f);
            total += a;
            for r in 0..3 {
                s[r] += n[r] * a;
            }
        }
        if norm(&s) > 1e-9 * total.max(1.0) {
            return Err(Error::Mesh("boundary facets are not consistently oriented".into()));
        }
        Ok(())
    }
}

pub(crate) fn signed_measure(dim: usize, nodes: &[Point], c: &[usize; 4]) -> f64 {
    let x0 = nodes[c[0]];
    let mut j: Mat3 = [[0.0; 3]; 3];
    for k in 0..dim {
        let e = sub(&nodes[c[k + 1]], &x0);
        for r in 0..dim {
            j[r][k] = e[r];
        }
    }
    det(&j, dim)
}

fn orient_outward(dim: usize, nodes: &[Point], verts: &mut [usize; 3], opposite: usize) {
    let p0 = nodes[verts[0]];
    let to_opp = sub(&nodes[opposite], &p0);
    let n = if dim == 2 {
        let t = sub(&nodes[verts[1]], &p0);
        [t[1], -t[0], 0.0]
    } else {
        cross(&sub(&nodes[verts[1]], &p0), &sub(&nodes[verts[2]], &p0))
    };
    if crate::linalg::dot(&n, &to_opp) > 0.0 {
        verts.swap(0, 1);
    }
}

/// Edgewise (Freudenthal) refinement of a coarse simplicial complex: every
/// coarse simplex is cut into `n^dim` congruent-shape pieces. Lattice points
/// are keyed by their barycentric weights relative to globally ordered
/// vertices, which makes the subdivision conforming across shared faces.
pub fn refine(dim: usize, nodes: &[Point], cells: &[[usize; 4]], n: usize) -> (Vec<Point>, Vec<[usize; 4]>) {
    assert!(n >= 1);
    let mut out_nodes: Vec<Point> = Vec::new();
    let mut index: HashMap<Vec<(usize, usize)>, usize> = HashMap::new();
    let mut out_cells = Vec::new();

    // ordered coordinates k with n >= k1 >= ... >= kd >= 0
    let in_region = |k: &[usize]| k.iter().all(|&x| x <= n) && k.windows(2).all(|w| w[0] >= w[1]);

    let perms = permutations(dim);
    for cell in cells {
        let mut v: Vec<usize> = cell[..=dim].to_vec();
        v.sort_unstable();
        let mut lookup = |k: &[usize]| -> usize {
            // weights: w0 = n - k1, wi = k_i - k_{i+1}, wd = kd
            let mut key = Vec::with_capacity(dim + 1);
            for i in 0..=dim {
                let w = if i == 0 {
                    n - k[0]
                } else if i == dim {
                    k[dim - 1]
                } else {
                    k[i - 1] - k[i]
                };
                if w > 0 {
                    key.push((v[i], w));
                }
            }
            if let Some(&id) = index.get(&key) {
                return id;
            }
            let mut p = [0.0; 3];
            for &(vi, w) in &key {
                for r in 0..3 {
                    p[r] += nodes[vi][r] * w as f64 / n as f64;
                }
            }
            let id = out_nodes.len();
            out_nodes.push(p);
            index.insert(key, id);
            id
        };

        let mut base = vec![0usize; dim];
        loop {
            for perm in &perms {
                let mut pts = Vec::with_capacity(dim + 1);
                let mut cur = base.clone();
                pts.push(cur.clone());
                for &axis in perm {
                    cur[axis] += 1;
                    pts.push(cur.clone());
                }
                if pts.iter().all(|p| in_region(p)) {
                    let mut c = [usize::MAX; 4];
                    for (j, p) in pts.iter().enumerate() {
                        c[j] = lookup(p);
                    }
                    out_cells.push(c);
                }
            }
            // next base in {0..n-1}^dim
            let mut k = 0;
            while k < dim {
                base[k] += 1;
                if base[k] < n {
                    break;
                }
                base[k] = 0;
                k += 1;
            }
            if k == dim {
                break;
            }
        }
    }
    (out_nodes, out_cells)
}

fn permutations(d: usize) -> Vec<Vec<usize>> {
    fn rec(cur: &mut Vec<usize>, used: &mut Vec<bool>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == used.len() {
            out.push(cur.clone());
            return;
        }
        for i in 0..used.len() {
            if !used[i] {
                used[i] = true;
                cur.push(i);
                rec(cur, used, out);
                cur.pop();
                used[i] = false;
            }
        }
    }
    let mut out = Vec::new();
    rec(&mut Vec::new(), &mut vec![false; d], &mut out);
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn refined_triangle_has_n_squared_cells() {
        let nodes = vec![[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0]];
        let cells = vec![[0, 1, 2, usize::MAX]];
        let (n, c) = refine(2, &nodes, &cells, 4);
        assert_eq!(c.len(), 16);
        assert_eq!(n.len(), 15);
        let m = Mesh::from_cells(2, n, c).unwrap();
        m.validate().unwrap();
        assert!((m.total_volume() - 0.5).abs() < 1e-14);
    }

    #[test]
    fn refined_tets_conform_across_shared_face() {
        let nodes = vec![
            [0.0, 0.0, 0.0],
            [1.0, 0.0, 0.0],
            [0.0, 1.0, 0.0],
            [0.0, 0.0, 1.0],
            [1.0, 1.0, 1.0],
        ];
        let cells = vec![[0, 1, 2, 3], [4, 3, 2, 1]];
        let (n, c) = refine(3, &nodes, &cells, 3);
        assert_eq!(c.len(), 54);
        let m = Mesh::from_cells(3, n, c).unwrap();
        m.validate().unwrap();
        // an interface that does not conform shows up as extra boundary facets
        assert_eq!(m.bfacets.len(), 6 * 9);
    }
}
