//! Nested domains, boundary patches, exterior singular points and meshes.

pub mod io;
pub mod locate;
pub mod mesh;
pub mod patch;
pub mod shapes;

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

pub use locate::Locator;
pub use mesh::{BoundaryFacet, CellGeometry, Mesh};
pub use patch::{boundary_cutoff, polar_angle, smoothstep, BoundaryFunction, BoundaryPatch};
pub use shapes::{mobius_grading, Shape};

use crate::error::{Error, Result};
use crate::linalg::{add, dot, norm, scale, sub, Point};

/// Boundary facet tags written by [`build_domain`].
pub const TAG_OUTSIDE: u32 = 0;
pub const TAG_S: u32 = 1;
pub const TAG_S_PRIME: u32 = 2;

/// Everything needed to build a [`DomainTriple`].
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DomainSpec {
    pub shape: Shape,
    pub h: f64,
    /// Direction (from the shape centre) of the marked point x₀.
    pub x0_dir: Point,
    /// Half angle of the patch S around x₀ (π or more: whole boundary).
    pub s_half_angle: f64,
    /// Half angle of the inner patch S′.
    pub s_prime_half_angle: f64,
    /// Möbius grading strength toward x₀ in [0, 1); round shapes only.
    pub grading: f64,
    /// Tubular neighbourhood radius override.
    pub delta_prime: Option<f64>,
}

impl DomainSpec {
    pub fn new(shape: Shape, h: f64) -> Self {
        let x0_dir = [1.0, 0.0, 0.0];
        DomainSpec { shape, h, x0_dir, s_half_angle: PI, s_prime_half_angle: PI, grading: 0.0, delta_prime: None }
    }

    pub fn with_patches(mut self, s: f64, s_prime: f64) -> Self {
        self.s_half_angle = s;
        self.s_prime_half_angle = s_prime;
        self
    }

    pub fn with_grading(mut self, t: f64) -> Self {
        self.grading = t;
        self
    }

    pub fn with_x0(mut self, dir: Point) -> Self {
        self.x0_dir = dir;
        self
    }
}

/// The nested geometry Ω ⊂ Ω′ ⊂ Ω⋆ with patches S′ ⊂ S around x₀.
///
/// Ω′ is the image of the Ω mesh under a radial bulge supported over S′, so
/// the two meshes share node numbering and coincide on ∂Ω ∖ S′.
#[derive(Clone, Debug)]
pub struct DomainTriple {
    pub spec: DomainSpec,
    pub dim: usize,
    pub center: Point,
    pub x0: Point,
    pub normal_x0: Point,
    pub omega: Mesh,
    pub omega_prime: Mesh,
    pub omega_star: Mesh,
    pub s: BoundaryPatch,
    pub s_prime: BoundaryPatch,
    pub delta: f64,
    pub delta_prime: f64,
    pub bulge_height: f64,
    pub star_scale: f64,
    /// dist(x₀, ∂Ω′) measured on dense boundary samples.
    pub dist_x0_outer: f64,
}

fn bulge_profile(phi: f64, alpha: f64) -> f64 {
    if alpha >= PI {
        return 1.0;
    }
    if phi >= alpha {
        return 0.0;
    }
    let s = phi / alpha;
    (1.0 - s * s).powi(3)
}

fn bulge_map(center: &Point, x0: &Point, alpha: f64, height: f64, x: &Point) -> Point {
    let phi = polar_angle(center, x0, x);
    let f = 1.0 + height * bulge_profile(phi, alpha);
    add(center, &scale(&sub(x, center), f))
}

/// Builds Ω, Ω′, Ω⋆ with meshes, the patches S and S′, and the offset cap δ.
pub fn build_domain(spec: &DomainSpec) -> Result<DomainTriple> {
    let shape = &spec.shape;
    shape.validate()?;
    let dim = shape.dim();
    if !(spec.h > 0.0) {
        return Err(Error::Domain(format!("mesh size must be positive, got {}", spec.h)));
    }
    let (a_s, a_sp) = (spec.s_half_angle, spec.s_prime_half_angle);
    if !(a_s > 0.0) || !(a_sp > 0.0) {
        return Err(Error::Domain("patch half angles must be positive".into()));
    }
    if a_s < PI && a_sp >= a_s {
        return Err(Error::Domain("S′ must be compactly contained in S".into()));
    }
    if !(0.0..1.0).contains(&spec.grading) {
        return Err(Error::Domain("grading must lie in [0, 1)".into()));
    }
    if spec.grading > 0.0 && !shape.is_round() {
        return Err(Error::Unsupported("grading is available for the disk and ball only".into()));
    }

    let center = shape.centroid();
    let (x0, normal_x0) = shape.ray_boundary(&spec.x0_dir)?;
    let kink = shape.distance_to_kinks(&x0);
    if kink < 1e-6 {
        return Err(Error::Domain("the marked point sits on a corner or edge".into()));
    }

    let mut omega = shape.mesh(spec.h)?;
    if spec.grading > 0.0 {
        let t = spec.grading;
        let dir = crate::linalg::normalize(&sub(&x0, &center));
        omega = omega.mapped(|p| mobius_grading(p, &dir, t))?;
    }

    let delta_prime = match spec.delta_prime {
        Some(d) if d > 0.0 => d,
        Some(_) => return Err(Error::Domain("δ′ must be positive".into())),
        None => match shape.min_curvature_radius() {
            Some(r) => 0.5 * r,
            None => 0.5 * kink,
        },
    };

    // the largest bulge height H <= 3δ′ whose tip is not overhung by the
    // lateral walls, i.e. dist(x₀, ∂Ω′) ≈ H
    let samples = shape.boundary_samples(if dim == 2 { 4000 } else { 90 });
    let dist_for = |h: f64| -> f64 {
        samples
            .iter()
            .map(|p| norm(&sub(&bulge_map(&center, &x0, a_sp, h, p), &x0)))
            .fold(f64::INFINITY, f64::min)
    };
    let h_cap = 3.0 * delta_prime;
    let height = if dist_for(h_cap) >= 0.999 * h_cap {
        h_cap
    } else {
        let (mut lo, mut hi) = (0.0, h_cap);
        for _ in 0..40 {
            let mid = 0.5 * (lo + hi);
            if dist_for(mid) >= 0.999 * mid {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        lo
    };
    let dist_x0_outer = dist_for(height);
    let delta = (dist_x0_outer / 3.0).min(1.0).min(delta_prime);
    if !(delta > 0.0) {
        return Err(Error::Domain("S′ is too narrow for an outward bulge".into()));
    }

    let s = BoundaryPatch::new("S", &omega, center, x0, a_s)?;
    let s_prime = BoundaryPatch::new("S'", &omega, center, x0, a_sp)?;
    for f in 0..omega.bfacets.len() {
        omega.bfacets[f].tag = if s_prime.facets.contains(&f) {
            TAG_S_PRIME
        } else if s.facets.contains(&f) {
            TAG_S
        } else {
            TAG_OUTSIDE
        };
    }
    let s = BoundaryPatch::new("S", &omega, center, x0, a_s)?;
    let s_prime = BoundaryPatch::new("S'", &omega, center, x0, a_sp)?;

    let omega_prime = omega
        .mapped(|p| bulge_map(&center, &x0, a_sp, height, p))
        .map_err(|_| Error::Domain("h too coarse to resolve the bulge over S′".into()))?;

    let star_scale = 1.5f64.max(1.25 * (1.0 + height));
    let star_base = shape.mesh(spec.h.max(0.1))?;
    let omega_star = star_base.mapped(|p| add(&center, &scale(&sub(p, &center), star_scale)))?;

    let dom = DomainTriple {
        spec: spec.clone(),
        dim,
        center,
        x0,
        normal_x0,
        omega,
        omega_prime,
        omega_star,
        s,
        s_prime,
        delta,
        delta_prime,
        bulge_height: height,
        star_scale,
        dist_x0_outer,
    };
    dom.check_invariants()?;
    Ok(dom)
}

impl DomainTriple {
    /// Verifies the containment and shared-boundary invariants on vertices.
    pub fn check_invariants(&self) -> Result<()> {
        self.omega.validate()?;
        self.omega_prime.validate()?;
        self.omega_star.validate()?;
        let star = Locator::new(&self.omega_star);
        // every node inside, and boundary nodes still inside after a small
        // outward push, so ∂Ω′ stays off ∂Ω⋆
        let pushed = |p: &Point| add(&self.center, &scale(&sub(p, &self.center), 1.0 + 1e-3));
        let inside = self.omega_prime.nodes.iter().all(|p| star.contains(p, 1e-9))
            && self.omega_prime.boundary_nodes.iter().all(|&i| star.contains(&pushed(&self.omega_prime.nodes[i]), 1e-9));
        if !inside {
            return Err(Error::Domain("Ω′ is not compactly contained in Ω⋆".into()));
        }
        let outer = Locator::new(&self.omega_prime);
        if !self.omega.nodes.iter().all(|p| outer.contains(p, 1e-9)) {
            return Err(Error::Domain("Ω is not contained in Ω′".into()));
        }
        for (k, &i) in self.omega.boundary_nodes.iter().enumerate() {
            let in_sp = self.s_prime.node_mask[k];
            if !in_sp && norm(&sub(&self.omega.nodes[i], &self.omega_prime.nodes[i])) > 1e-12 {
                return Err(Error::Domain("∂Ω ∖ S′ is not part of ∂Ω′".into()));
            }
        }
        if !self.s_prime.contains_point(&self.x0) {
            return Err(Error::Domain("x₀ is not in S′".into()));
        }
        if self.delta > (self.dist_x0_outer / 3.0).min(1.0) + 1e-12 {
            return Err(Error::Domain("δ exceeds dist(x₀, ∂Ω′)/3".into()));
        }
        Ok(())
    }

    /// y_τ = x₀ + τ ν(x₀).
    pub fn exterior_point(&self, tau: f64) -> Result<Point> {
        if !(tau > 0.0 && tau < self.delta) {
            return Err(Error::OutOfRange(format!(
                "offset τ = {tau} must lie in (0, δ) with δ = {:.6}",
                self.delta
            )));
        }
        let y = add(&self.x0, &scale(&self.normal_x0, tau));
        // convex shapes: outward offset along the supporting normal is exterior
        debug_assert!(dot(&sub(&y, &self.x0), &self.normal_x0) > 0.0);
        Ok(y)
    }

    /// Cutoff χ on ∂Ω: 1 on S′, 0 outside S.
    pub fn cutoff(&self) -> Result<BoundaryFunction> {
        boundary_cutoff(&self.omega, &self.s, &self.s_prime)
    }

    /// Largest diameter of the Ω cells within `radius` of `p`.
    pub fn local_mesh_size(&self, p: &Point, radius: f64) -> f64 {
        let m = &self.omega;
        (0..m.cells.len())
            .filter(|&c| norm(&sub(&m.cell_centroid(c), p)) <= radius)
            .map(|c| m.cell_diameter(c))
            .fold(0.0, f64::max)
    }

    /// Mesh size near x₀ used by the singular-resolution rule τ ≥ 4h.
    pub fn mesh_size_near_x0(&self) -> f64 {
        let t = self.spec.grading;
        let nominal = self.spec.h * (1.0 - t) / (1.0 + t);
        let h = self.local_mesh_size(&self.x0, 2.0 * nominal);
        if h > 0.0 {
            h
        } else {
            nominal
        }
    }

    /// Geometric τ grid from δ/2 down to max(4h, δ/32).
    pub fn tau_schedule(&self, count: usize) -> Vec<f64> {
        let hi = self.delta / 2.0;
        let lo = (4.0 * self.mesh_size_near_x0()).max(self.delta / 32.0).min(hi);
        if count <= 1 {
            return vec![hi];
        }
        (0..count)
            .map(|i| hi * (lo / hi).powf(i as f64 / (count - 1) as f64))
            .collect()
    }

    /// Whether τ is resolved by the mesh near x₀ (τ ≥ 4h).
    pub fn resolves(&self, tau: f64) -> bool {
        tau >= 4.0 * self.mesh_size_near_x0() * (1.0 - 1e-9)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn full_boundary_disk_has_concentric_outer_domain() {
        let d = build_domain(&DomainSpec::new(Shape::Disk, 0.1)).unwrap();
        assert!((d.delta - 0.5).abs() < 1e-9);
        assert!((d.bulge_height - 1.5).abs() < 1e-9);
        for &i in &d.omega_prime.boundary_nodes {
            assert!((norm(&d.omega_prime.nodes[i]) - 2.5).abs() < 1e-9);
        }
    }

    #[test]
    fn exterior_point_range() {
        let d = build_domain(&DomainSpec::new(Shape::Disk, 0.1)).unwrap();
        let y = d.exterior_point(0.1).unwrap();
        assert!((y[0] - 1.1).abs() < 1e-15 && y[1] == 0.0);
        assert!(d.exterior_point(d.delta).is_err());
        assert!(d.exterior_point(0.0).is_err());
    }
}
