use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::geometry::mesh::Mesh;
use crate::linalg::{dot, norm, sub, Point};

/// Angle at `center` between the rays toward `x` and toward `x0`.
pub fn polar_angle(center: &Point, x0: &Point, x: &Point) -> f64 {
    let a = sub(x, center);
    let b = sub(x0, center);
    let (na, nb) = (norm(&a), norm(&b));
    if na == 0.0 || nb == 0.0 {
        return 0.0;
    }
    (dot(&a, &b) / (na * nb)).clamp(-1.0, 1.0).acos()
}

/// An open boundary patch: the boundary points whose polar angle around the
/// shape centre, measured from the marked point, is below `half_angle`.
/// A half angle of π or more means the whole boundary.
#[derive(Clone, Debug)]
pub struct BoundaryPatch {
    pub id: String,
    pub center: Point,
    pub x0: Point,
    pub half_angle: f64,
    /// Per boundary node (mesh boundary order): node lies in the open patch.
    pub node_mask: Vec<bool>,
    /// Boundary facets whose vertices all lie in the closed patch.
    pub facets: Vec<usize>,
}

impl BoundaryPatch {
    pub fn new(id: &str, mesh: &Mesh, center: Point, x0: Point, half_angle: f64) -> Result<Self> {
        if !(half_angle > 0.0) {
            return Err(Error::Domain(format!("patch {id}: half angle must be positive")));
        }
        let full = half_angle >= PI;
        let tol = 1e-9;
        let node_mask: Vec<bool> = mesh
            .boundary_nodes
            .iter()
            .map(|&i| full || polar_angle(&center, &x0, &mesh.nodes[i]) < half_angle - tol)
            .collect();
        let facets: Vec<usize> = (0..mesh.bfacets.len())
            .filter(|&f| {
                full || mesh
                    .facet(f)
                    .iter()
                    .all(|&v| polar_angle(&center, &x0, &mesh.nodes[v]) <= half_angle + tol)
            })
            .collect();
        let p = BoundaryPatch { id: id.to_string(), center, x0, half_angle, node_mask, facets };
        if p.node_mask.iter().all(|&b| !b) || p.area(mesh) <= 0.0 {
            return Err(Error::Domain(format!(
                "patch {id} contains no boundary node at this mesh size"
            )));
        }
        if !p.is_connected(mesh) {
            return Err(Error::Domain(format!("patch {id} is not connected")));
        }
        Ok(p)
    }

    pub fn is_full(&self) -> bool {
        self.half_angle >= PI
    }

    pub fn contains_point(&self, x: &Point) -> bool {
        self.is_full() || polar_angle(&self.center, &self.x0, x) < self.half_angle
    }

    pub fn angle_of(&self, x: &Point) -> f64 {
        polar_angle(&self.center, &self.x0, x)
    }

    pub fn area(&self, mesh: &Mesh) -> f64 {
        self.facets.iter().map(|&f| mesh.facet_normal(f).1).sum()
    }

    pub fn n_nodes(&self) -> usize {
        self.node_mask.iter().filter(|&&b| b).count()
    }

    /// Facet adjacency through shared vertices.
    fn is_connected(&self, mesh: &Mesh) -> bool {
        if self.facets.is_empty() {
            return false;
        }
        let mut owner: std::collections::HashMap<usize, Vec<usize>> = Default::default();
        for (k, &f) in self.facets.iter().enumerate() {
            for &v in mesh.facet(f) {
                owner.entry(v).or_default().push(k);
            }
        }
        let mut seen = vec![false; self.facets.len()];
        let mut stack = vec![0];
        seen[0] = true;
        while let Some(k) = stack.pop() {
            for &v in mesh.facet(self.facets[k]) {
                for &j in &owner[&v] {
                    if !seen[j] {
                        seen[j] = true;
                        stack.push(j);
                    }
                }
            }
        }
        seen.into_iter().all(|b| b)
    }
}

/// Nodal values on the boundary nodes of a mesh (mesh boundary order), with an
/// optional declared support patch.
#[derive(Clone, Debug)]
pub struct BoundaryFunction {
    pub values: Vec<f64>,
    pub support: Option<Vec<bool>>,
}

impl BoundaryFunction {
    pub fn new(values: Vec<f64>) -> Self {
        BoundaryFunction { values, support: None }
    }

    pub fn from_fn(mesh: &Mesh, f: impl Fn(&Point) -> f64) -> Self {
        Self::new(mesh.boundary_nodes.iter().map(|&i| f(&mesh.nodes[i])).collect())
    }

    pub fn constant(mesh: &Mesh, c: f64) -> Self {
        Self::new(vec![c; mesh.n_boundary()])
    }

    /// Attaches a support patch, zeroing values outside of it.
    pub fn restricted(mut self, patch: &BoundaryPatch) -> Self {
        for (v, &m) in self.values.iter_mut().zip(&patch.node_mask) {
            if !m {
                *v = 0.0;
            }
        }
        self.support = Some(patch.node_mask.clone());
        self
    }

    /// True if values vanish outside the declared support.
    pub fn respects_support(&self) -> bool {
        match &self.support {
            None => true,
            Some(mask) => self.values.iter().zip(mask).all(|(v, &m)| m || *v == 0.0),
        }
    }

    pub fn scaled(&self, s: f64) -> Self {
        BoundaryFunction { values: self.values.iter().map(|v| v * s).collect(), support: self.support.clone() }
    }

    pub fn axpy(&self, s: f64, other: &BoundaryFunction) -> Self {
        BoundaryFunction {
            values: self.values.iter().zip(&other.values).map(|(a, b)| a + s * b).collect(),
            support: None,
        }
    }
}

/// C² quintic smoothstep: 0 at s <= 0, 1 at s >= 1.
pub fn smoothstep(s: f64) -> f64 {
    let s = s.clamp(0.0, 1.0);
    s * s * s * (10.0 - 15.0 * s + 6.0 * s * s)
}

/// Boundary cutoff equal to 1 on the inner patch, 0 outside the outer patch,
/// blended by a C² polynomial in the polar angle.
pub fn boundary_cutoff(mesh: &Mesh, s: &BoundaryPatch, s_prime: &BoundaryPatch) -> Result<BoundaryFunction> {
    if s.is_full() {
        return Ok(BoundaryFunction::constant(mesh, 1.0).restricted(s));
    }
    if !(s_prime.half_angle < s.half_angle) {
        return Err(Error::Domain(
            "the inner patch must be compactly contained in the outer patch".into(),
        ));
    }
    let (a1, a2) = (s_prime.half_angle, s.half_angle);
    let f = BoundaryFunction::from_fn(mesh, |x| {
        let phi = s.angle_of(x);
        smoothstep((a2 - phi) / (a2 - a1))
    });
    Ok(f.restricted(s))
}
