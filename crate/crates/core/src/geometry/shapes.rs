use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::mesh::{refine, Mesh};
use crate::linalg::{add, cross, dot, norm, normalize, scale, sub, Point};

/// Builtin domain shapes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum Shape {
    /// Unit disk centred at the origin.
    Disk,
    /// Unit ball centred at the origin.
    Ball,
    /// Convex polygon, vertices counter-clockwise.
    Polygon(Vec<[f64; 2]>),
    /// Convex polyhedron given by vertices and outward-oriented triangles.
    Polyhedron { vertices: Vec<Point>, faces: Vec<[usize; 3]> },
}

impl Shape {
    pub fn dim(&self) -> usize {
        match self {
            Shape::Disk | Shape::Polygon(_) => 2,
            Shape::Ball | Shape::Polyhedron { .. } => 3,
        }
    }

    pub fn is_round(&self) -> bool {
        matches!(self, Shape::Disk | Shape::Ball)
    }

    /// The cube [-r, r]^3 as a triangulated polyhedron.
    pub fn cube(r: f64) -> Shape {
        let mut vertices = Vec::new();
        for i in 0..8 {
            vertices.push([
                if i & 1 == 0 { -r } else { r },
                if i & 2 == 0 { -r } else { r },
                if i & 4 == 0 { -r } else { r },
            ]);
        }
        let quads = [
            [0, 2, 3, 1],
            [4, 5, 7, 6],
            [0, 1, 5, 4],
            [2, 6, 7, 3],
            [0, 4, 6, 2],
            [1, 3, 7, 5],
        ];
        let mut faces = Vec::new();
        for q in quads {
            faces.push([q[0], q[1], q[2]]);
            faces.push([q[0], q[2], q[3]]);
        }
        Shape::Polyhedron { vertices, faces }
    }

    pub fn centroid(&self) -> Point {
        match self {
            Shape::Disk | Shape::Ball => [0.0; 3],
            Shape::Polygon(v) => {
                let k = v.len() as f64;
                let s = v.iter().fold([0.0, 0.0], |a, p| [a[0] + p[0], a[1] + p[1]]);
                [s[0] / k, s[1] / k, 0.0]
            }
            Shape::Polyhedron { vertices, .. } => {
                let k = vertices.len() as f64;
                let s = vertices.iter().fold([0.0; 3], |a, p| add(&a, p));
                scale(&s, 1.0 / k)
            }
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            Shape::Polygon(v) => {
                if v.len() < 3 {
                    return Err(Error::Domain("polygon needs at least 3 vertices".into()));
                }
                let n = v.len();
                for i in 0..n {
                    let (a, b, c) = (v[i], v[(i + 1) % n], v[(i + 2) % n]);
                    let cr = (b[0] - a[0]) * (c[1] - b[1]) - (b[1] - a[1]) * (c[0] - b[0]);
                    if cr <= 0.0 {
                        return Err(Error::Domain(
                            "polygon must be strictly convex and counter-clockwise".into(),
                        ));
                    }
                }
                Ok(())
            }
            Shape::Polyhedron { vertices, faces } => {
                if faces.len() < 4 {
                    return Err(Error::Domain("polyhedron needs at least 4 faces".into()));
                }
                let c = self.centroid();
                for f in faces {
                    if f.iter().any(|&i| i >= vertices.len()) {
                        return Err(Error::Domain("face references a missing vertex".into()));
                    }
                    let (n, off) = plane(vertices, f);
                    if off - dot(&n, &c) <= 0.0 {
                        return Err(Error::Domain(
                            "polyhedron faces must be outward oriented around the centroid".into(),
                        ));
                    }
                    for v in vertices {
                        if dot(&n, v) > off + 1e-9 {
                            return Err(Error::Domain("polyhedron must be convex".into()));
                        }
                    }
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }

    /// Boundary point hit by the ray from the centroid in direction `dir`,
    /// with the outward unit normal there.
    pub fn ray_boundary(&self, dir: &Point) -> Result<(Point, Point)> {
        let d = normalize(dir);
        if norm(&d) == 0.0 {
            return Err(Error::Domain("zero direction for the marked point".into()));
        }
        let c = self.centroid();
        match self {
            Shape::Disk => Ok(([d[0], d[1], 0.0], [d[0], d[1], 0.0])),
            Shape::Ball => Ok((d, d)),
            Shape::Polygon(v) => {
                let (t, n) = (0..v.len())
                    .filter_map(|i| {
                        let a = [v[i][0], v[i][1], 0.0];
                        let b = [v[(i + 1) % v.len()][0], v[(i + 1) % v.len()][1], 0.0];
                        let e = sub(&b, &a);
                        let n = normalize(&[e[1], -e[0], 0.0]);
                        let den = dot(&n, &d);
                        (den > 1e-14).then(|| ((dot(&n, &a) - dot(&n, &c)) / den, n))
                    })
                    .fold((f64::INFINITY, [0.0; 3]), |acc, x| if x.0 < acc.0 { x } else { acc });
                Ok((add(&c, &scale(&d, t)), n))
            }
            Shape::Polyhedron { vertices, faces } => {
                let (t, n) = faces
                    .iter()
                    .filter_map(|f| {
                        let (n, off) = plane(vertices, f);
                        let den = dot(&n, &d);
                        (den > 1e-14).then(|| ((off - dot(&n, &c)) / den, n))
                    })
                    .fold((f64::INFINITY, [0.0; 3]), |acc, x| if x.0 < acc.0 { x } else { acc });
                Ok((add(&c, &scale(&d, t)), n))
            }
        }
    }

    /// Distance from a boundary point to the nearest corner/edge where the
    /// normal jumps (infinite for smooth shapes).
    pub fn distance_to_kinks(&self, x: &Point) -> f64 {
        match self {
            Shape::Disk | Shape::Ball => f64::INFINITY,
            Shape::Polygon(v) => v
                .iter()
                .map(|p| norm(&sub(&[p[0], p[1], 0.0], x)))
                .fold(f64::INFINITY, f64::min),
            Shape::Polyhedron { vertices, faces } => {
                // distance to the edges between non-coplanar faces
                let mut best = f64::INFINITY;
                for (i, f) in faces.iter().enumerate() {
                    let (ni, _) = plane(vertices, f);
                    for g in faces.iter().skip(i + 1) {
                        let shared: Vec<usize> = f.iter().copied().filter(|a| g.contains(a)).collect();
                        if shared.len() != 2 {
                            continue;
                        }
                        let (ng, _) = plane(vertices, g);
                        if norm(&cross(&ni, &ng)) < 1e-9 {
                            continue;
                        }
                        best = best.min(point_segment(x, &vertices[shared[0]], &vertices[shared[1]]));
                    }
                }
                best
            }
        }
    }

    /// Minimal curvature radius of the boundary (used for the tubular
    /// neighbourhood radius); `None` for flat-faced shapes.
    pub fn min_curvature_radius(&self) -> Option<f64> {
        match self {
            Shape::Disk | Shape::Ball => Some(1.0),
            _ => None,
        }
    }

    /// Scaled copy about the centroid.
    pub fn scaled(&self, s: f64) -> Shape {
        let c = self.centroid();
        let f = |p: &Point| add(&c, &scale(&sub(p, &c), s));
        match self {
            Shape::Disk | Shape::Ball => self.clone(),
            Shape::Polygon(v) => Shape::Polygon(
                v.iter()
                    .map(|p| {
                        let q = f(&[p[0], p[1], 0.0]);
                        [q[0], q[1]]
                    })
                    .collect(),
            ),
            Shape::Polyhedron { vertices, faces } => Shape::Polyhedron {
                vertices: vertices.iter().map(f).collect(),
                faces: faces.clone(),
            },
        }
    }

    /// Dense samples of the boundary (used for distance computations).
    pub fn boundary_samples(&self, per_unit: usize) -> Vec<Point> {
        let mut out = Vec::new();
        match self {
            Shape::Disk => {
                let m = (2.0 * PI * per_unit as f64) as usize;
                for i in 0..m {
                    let t = 2.0 * PI * i as f64 / m as f64;
                    out.push([t.cos(), t.sin(), 0.0]);
                }
            }
            Shape::Ball => {
                let m = (PI * per_unit as f64) as usize;
                for i in 0..=m {
                    let th = PI * i as f64 / m as f64;
                    let k = ((2.0 * PI * th.sin() * per_unit as f64) as usize).max(1);
                    for j in 0..k {
                        let ph = 2.0 * PI * j as f64 / k as f64;
                        out.push([th.sin() * ph.cos(), th.sin() * ph.sin(), th.cos()]);
                    }
                }
            }
            Shape::Polygon(v) => {
                for i in 0..v.len() {
                    let a = [v[i][0], v[i][1], 0.0];
                    let b = [v[(i + 1) % v.len()][0], v[(i + 1) % v.len()][1], 0.0];
                    let m = ((norm(&sub(&b, &a)) * per_unit as f64) as usize).max(1);
                    for j in 0..m {
                        out.push(add(&a, &scale(&sub(&b, &a), j as f64 / m as f64)));
                    }
                }
            }
            Shape::Polyhedron { vertices, faces } => {
                for f in faces {
                    let (a, b, c) = (vertices[f[0]], vertices[f[1]], vertices[f[2]]);
                    let l = norm(&sub(&b, &a)).max(norm(&sub(&c, &a)));
                    let m = ((l * per_unit as f64) as usize).max(1);
                    for i in 0..=m {
                        for j in 0..=(m - i) {
                            let (s, t) = (i as f64 / m as f64, j as f64 / m as f64);
                            out.push(add(&a, &add(&scale(&sub(&b, &a), s), &scale(&sub(&c, &a), t))));
                        }
                    }
                }
            }
        }
        out
    }

    /// Coarse fan template (nodes, cells) and the refinement factor used for
    /// target mesh size `h`.
    fn template(&self, h: f64) -> (Vec<Point>, Vec<[usize; 4]>, usize) {
        let c = self.centroid();
        match self {
            Shape::Disk => {
                let mut nodes = vec![[0.0; 3]];
                for k in 0..6 {
                    let t = k as f64 * PI / 3.0;
                    nodes.push([t.cos(), t.sin(), 0.0]);
                }
                let cells = (0..6).map(|k| [0, 1 + k, 1 + (k + 1) % 6, usize::MAX]).collect();
                (nodes, cells, (1.0 / h).ceil() as usize)
            }
            Shape::Ball => {
                let (nodes, faces) = icosahedron();
                let mut all = vec![[0.0; 3]];
                all.extend(nodes);
                let cells = faces.iter().map(|f| [0, f[0] + 1, f[1] + 1, f[2] + 1]).collect();
                (all, cells, (1.0 / h).ceil() as usize)
            }
            Shape::Polygon(v) => {
                let mut nodes = vec![c];
                nodes.extend(v.iter().map(|p| [p[0], p[1], 0.0]));
                let n = v.len();
                let cells = (0..n).map(|k| [0, 1 + k, 1 + (k + 1) % n, usize::MAX]).collect();
                let r = v.iter().map(|p| norm(&sub(&[p[0], p[1], 0.0], &c))).fold(0.0, f64::max);
                (nodes, cells, (r / h).ceil() as usize)
            }
            Shape::Polyhedron { vertices, faces } => {
                let mut nodes = vec![c];
                nodes.extend(vertices.iter().copied());
                let cells = faces.iter().map(|f| [0, f[0] + 1, f[1] + 1, f[2] + 1]).collect();
                let r = vertices.iter().map(|p| norm(&sub(p, &c))).fold(0.0, f64::max);
                (nodes, cells, (r / h).ceil() as usize)
            }
        }
    }

    /// Maps a point of the polygonal template onto the curved shape.
    fn template_map(&self) -> Box<dyn Fn(&Point) -> Point + Send + Sync> {
        match self {
            Shape::Disk => Box::new(disk_map),
            Shape::Ball => {
                let (nodes, faces) = icosahedron();
                let planes: Vec<(Point, f64)> = faces.iter().map(|f| plane(&nodes, f)).collect();
                Box::new(move |x: &Point| {
                    let r = norm(x);
                    if r == 0.0 {
                        return *x;
                    }
                    let mu = planes.iter().map(|(n, off)| dot(n, x) / off).fold(0.0, f64::max);
                    scale(x, mu / r)
                })
            }
            _ => Box::new(|x: &Point| *x),
        }
    }

    /// Builds a conforming simplicial mesh of the shape with size about `h`.
    pub fn mesh(&self, h: f64) -> Result<Mesh> {
        if !(h > 0.0) || !h.is_finite() {
            return Err(Error::Domain(format!("mesh size must be positive, got {h}")));
        }
        self.validate()?;
        let (nodes, cells, n) = self.template(h);
        if n > 400 {
            return Err(Error::Domain(format!("mesh size {h} is too fine for a desk-scale mesh")));
        }
        let (nodes, cells) = refine(self.dim(), &nodes, &cells, n.max(1));
        let map = self.template_map();
        let nodes: Vec<Point> = nodes.iter().map(|p| map(p)).collect();
        let mesh = Mesh::from_cells(self.dim(), nodes, cells)?;
        mesh.validate()?;
        Ok(mesh)
    }
}

/// Hexagon to disk: radial gauge plus an equal-angle reparametrization of
/// each sector, so boundary nodes are equally spaced in angle.
fn disk_map(x: &Point) -> Point {
    let r = (x[0] * x[0] + x[1] * x[1]).sqrt();
    if r == 0.0 {
        return *x;
    }
    let mut th = x[1].atan2(x[0]);
    if th < 0.0 {
        th += 2.0 * PI;
    }
    let sector = ((th / (PI / 3.0)).floor() as usize).min(5);
    let a0 = sector as f64 * PI / 3.0;
    let a1 = a0 + PI / 3.0;
    let (ax, ay) = (a0.cos(), a0.sin());
    let (bx, by) = (a1.cos(), a1.sin());
    // x = alpha A + beta B
    let d = ax * by - ay * bx;
    let alpha = (x[0] * by - x[1] * bx) / d;
    let beta = (ax * x[1] - ay * x[0]) / d;
    let mu = alpha + beta;
    let t = (beta / mu).clamp(0.0, 1.0);
    let ang = a0 + t * PI / 3.0;
    [mu * ang.cos(), mu * ang.sin(), 0.0]
}

fn icosahedron() -> (Vec<Point>, Vec<[usize; 3]>) {
    let p = (1.0 + 5f64.sqrt()) / 2.0;
    let raw = [
        [-1.0, p, 0.0],
        [1.0, p, 0.0],
        [-1.0, -p, 0.0],
        [1.0, -p, 0.0],
        [0.0, -1.0, p],
        [0.0, 1.0, p],
        [0.0, -1.0, -p],
        [0.0, 1.0, -p],
        [p, 0.0, -1.0],
        [p, 0.0, 1.0],
        [-p, 0.0, -1.0],
        [-p, 0.0, 1.0],
    ];
    let nodes: Vec<Point> = raw.iter().map(normalize).collect();
    let faces = vec![
        [0, 11, 5],
        [0, 5, 1],
        [0, 1, 7],
        [0, 7, 10],
        [0, 10, 11],
        [1, 5, 9],
        [5, 11, 4],
        [11, 10, 2],
        [10, 7, 6],
        [7, 1, 8],
        [3, 9, 4],
        [3, 4, 2],
        [3, 2, 6],
        [3, 6, 8],
        [3, 8, 9],
        [4, 9, 5],
        [2, 4, 11],
        [6, 2, 10],
        [8, 6, 7],
        [9, 8, 1],
    ];
    (nodes, faces)
}

/// Unit outward normal and offset of the plane through a triangle.
fn plane(v: &[Point], f: &[usize; 3]) -> (Point, f64) {
    let n = normalize(&cross(&sub(&v[f[1]], &v[f[0]]), &sub(&v[f[2]], &v[f[0]])));
    (n, dot(&n, &v[f[0]]))
}

fn point_segment(x: &Point, a: &Point, b: &Point) -> f64 {
    let ab = sub(b, a);
    let t = (dot(&sub(x, a), &ab) / dot(&ab, &ab)).clamp(0.0, 1.0);
    norm(&sub(x, &add(a, &scale(&ab, t))))
}

/// Möbius self-map of the unit ball pulling points toward the boundary point
/// `dir` (unit vector); the local mesh size near `dir` shrinks by
/// (1-t)/(1+t).
pub fn mobius_grading(x: &Point, dir: &Point, t: f64) -> Point {
    let a = scale(dir, t);
    let za = add(x, &a);
    let aa = dot(&a, &a);
    let num = add(&scale(&za, 1.0 - aa), &scale(&a, dot(&za, &za)));
    let den = 1.0 + 2.0 * dot(&a, x) + aa * dot(x, x);
    scale(&num, 1.0 / den)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn disk_mesh_boundary_on_circle_and_area_converges() {
        let m = Shape::Disk.mesh(0.1).unwrap();
        for &b in &m.boundary_nodes {
            assert!((norm(&m.nodes[b]) - 1.0).abs() < 1e-12);
        }
        assert_eq!(m.n_boundary(), 60);
        assert!((m.total_volume() - PI).abs() < 0.02);
    }

    #[test]
    fn ball_mesh_is_valid() {
        let m = Shape::Ball.mesh(0.25).unwrap();
        m.validate().unwrap();
        for &b in &m.boundary_nodes {
            assert!((norm(&m.nodes[b]) - 1.0).abs() < 1e-12);
        }
        assert!((m.total_volume() - 4.0 * PI / 3.0).abs() < 0.25);
    }

    #[test]
    fn mobius_keeps_sphere_and_fixes_pole() {
        let d = [1.0, 0.0, 0.0];
        let p = mobius_grading(&d, &d, 0.5);
        assert!((p[0] - 1.0).abs() < 1e-14);
        let q = mobius_grading(&normalize(&[0.3, 0.4, 0.5]), &d, 0.5);
        assert!((norm(&q) - 1.0).abs() < 1e-14);
    }

    #[test]
    fn cube_and_polygon_meshes() {
        let m = Shape::cube(1.0).mesh(0.5).unwrap();
        assert!((m.total_volume() - 8.0).abs() < 1e-12);
        let sq = Shape::Polygon(vec![[-1.0, -1.0], [1.0, -1.0], [1.0, 1.0], [-1.0, 1.0]]);
        let m = sq.mesh(0.2).unwrap();
        assert!((m.total_volume() - 4.0).abs() < 1e-12);
    }
}
