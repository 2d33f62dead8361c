use crate::geometry::mesh::Mesh;
use crate::linalg::{sub, Point};

/// Uniform-bin point locator over the cells of a mesh.
pub struct Locator<'m> {
    mesh: &'m Mesh,
    lo: Point,
    cell_size: f64,
    dims: [usize; 3],
    bins: Vec<Vec<usize>>,
}

impl<'m> Locator<'m> {
    pub fn new(mesh: &'m Mesh) -> Self {
        let d = mesh.dim;
        let mut lo = [f64::INFINITY; 3];
        let mut hi = [f64::NEG_INFINITY; 3];
        for p in &mesh.nodes {
            for r in 0..d {
                lo[r] = lo[r].min(p[r]);
                hi[r] = hi[r].max(p[r]);
            }
        }
        for r in d..3 {
            lo[r] = 0.0;
            hi[r] = 0.0;
        }
        let ncell = mesh.cells.len().max(1) as f64;
        let mut vol = 1.0;
        for r in 0..d {
            vol *= (hi[r] - lo[r]).max(1e-12);
        }
        let cell_size = (vol / ncell).powf(1.0 / d as f64) * 2.0;
        let mut dims = [1usize; 3];
        for r in 0..d {
            dims[r] = (((hi[r] - lo[r]) / cell_size).ceil() as usize).max(1);
        }
        let mut bins = vec![Vec::new(); dims[0] * dims[1] * dims[2]];
        let mut loc = Locator { mesh, lo, cell_size, dims, bins: Vec::new() };
        for c in 0..mesh.cells.len() {
            let mut clo = [f64::INFINITY; 3];
            let mut chi = [f64::NEG_INFINITY; 3];
            for &v in mesh.cell(c) {
                for r in 0..3 {
                    clo[r] = clo[r].min(mesh.nodes[v][r]);
                    chi[r] = chi[r].max(mesh.nodes[v][r]);
                }
            }
            let a = loc.bin_coords(&clo);
            let b = loc.bin_coords(&chi);
            for i in a[0]..=b[0] {
                for j in a[1]..=b[1] {
                    for k in a[2]..=b[2] {
                        bins[(k * dims[1] + j) * dims[0] + i].push(c);
                    }
                }
            }
        }
        loc.bins = bins;
        loc
    }

    fn bin_coords(&self, p: &Point) -> [usize; 3] {
        let mut out = [0usize; 3];
        for r in 0..3 {
            let t = ((p[r] - self.lo[r]) / self.cell_size).floor();
            out[r] = (t.max(0.0) as usize).min(self.dims[r] - 1);
        }
        out
    }

    /// Barycentric coordinates of `p` in cell `c`.
    pub fn barycentric(&self, c: usize, p: &Point) -> [f64; 4] {
        let g = self.mesh.cell_geometry(c);
        let v = self.mesh.cell(c);
        let x0 = self.mesh.nodes[v[0]];
        let dp = sub(p, &x0);
        let mut lam = [0.0; 4];
        let mut s = 0.0;
        for k in 1..v.len() {
            lam[k] = crate::linalg::dot(&g.grads[k], &dp);
            s += lam[k];
        }
        lam[0] = 1.0 - s;
        lam
    }

    /// Cell containing `p` and its barycentric coordinates. Points slightly
    /// outside the mesh snap to the cell with the least violation among
    /// nearby candidates.
    pub fn locate(&self, p: &Point) -> Option<(usize, [f64; 4])> {
        let b = self.bin_coords(p);
        let n = self.mesh.dim + 1;
        let mut best: Option<(usize, [f64; 4], f64)> = None;
        let search = |best: &mut Option<(usize, [f64; 4], f64)>, bins: &[usize]| {
            for &c in bins {
                let lam = self.barycentric(c, p);
                let viol = lam[..n].iter().fold(0.0f64, |m, &l| m.max(-l));
                if best.as_ref().is_none_or(|bb| viol < bb.2) {
                    *best = Some((c, lam, viol));
                }
            }
        };
        search(&mut best, &self.bins[(b[2] * self.dims[1] + b[1]) * self.dims[0] + b[0]]);
        if best.as_ref().is_none_or(|bb| bb.2 > 1e-10) {
            // widen to neighbouring bins
            for dk in -1i64..=1 {
                for dj in -1i64..=1 {
                    for di in -1i64..=1 {
                        let i = b[0] as i64 + di;
                        let j = b[1] as i64 + dj;
                        let k = b[2] as i64 + dk;
                        if i < 0 || j < 0 || k < 0 {
                            continue;
                        }
                        let (i, j, k) = (i as usize, j as usize, k as usize);
                        if i >= self.dims[0] || j >= self.dims[1] || k >= self.dims[2] {
                            continue;
                        }
                        search(&mut best, &self.bins[(k * self.dims[1] + j) * self.dims[0] + i]);
                    }
                }
            }
        }
        best.filter(|bb| bb.2 < 1e-6).map(|(c, l, _)| (c, l))
    }

    /// P1 interpolation of nodal values at `p`.
    pub fn interpolate(&self, values: &[f64], p: &Point) -> Option<f64> {
        let (c, lam) = self.locate(p)?;
        Some(self.mesh.cell(c).iter().zip(lam).map(|(&v, l)| values[v] * l).sum())
    }

    /// Strict containment test (tolerance relative to barycentric coordinates).
    pub fn contains(&self, p: &Point, tol: f64) -> bool {
        let b = self.bin_coords(p);
        let n = self.mesh.dim + 1;
        let inside_bounds = (0..self.mesh.dim).all(|r| {
            p[r] >= self.lo[r] - tol && p[r] <= self.lo[r] + self.cell_size * self.dims[r] as f64 + tol
        });
        if !inside_bounds {
            return false;
        }
        self.bins[(b[2] * self.dims[1] + b[1]) * self.dims[0] + b[0]]
            .iter()
            .any(|&c| self.barycentric(c, p)[..n].iter().all(|&l| l >= -tol))
    }
}
