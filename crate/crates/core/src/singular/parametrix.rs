use std::sync::Arc;

use crate::error::{Error, Result};
use crate::fem::Assembler;
use crate::geometry::{Locator, Mesh};
use crate::linalg::{norm, sub, Mat3, Point};
use crate::pde::{CoefficientField, DirichletSystem, LinearProblem};
use crate::singular::kernel::SingularKernel;

/// P = H + R on the mesh of Ω′. R vanishes for constant a; otherwise it is
/// the discrete solution of −∇·(a∇R) = ∇·(a∇H) with R = 0 on ∂Ω′, the
/// source being cut off within `mollify` of the pole.
pub struct Parametrix<'m> {
    pub kernel: SingularKernel,
    pub mesh: &'m Mesh,
    /// Nodal correction on `mesh`, absent for constant a.
    pub correction: Option<Vec<f64>>,
    pub mollify: f64,
}

/// Pointwise ∇·(a∇H) away from the pole, with ∇a by central differences.
pub fn operator_on_kernel(a: &CoefficientField, kernel: &SingularKernel, x: &Point) -> f64 {
    let d = kernel.dim;
    let Ok(hs) = kernel.hessian(x) else { return 0.0 };
    let g = kernel.grad_at(x);
    let ax = a.eval(x);
    let mut s = 0.0;
    for i in 0..d {
        for j in 0..d {
            s += ax[i][j] * hs[i][j];
        }
    }
    if a.constant_value().is_none() {
        let e = 1e-6;
        for i in 0..d {
            let mut xp = *x;
            let mut xm = *x;
            xp[i] += e;
            xm[i] -= e;
            let (ap, am): (Mat3, Mat3) = (a.eval(&xp), a.eval(&xm));
            for j in 0..d {
                s += (ap[i][j] - am[i][j]) / (2.0 * e) * g[j];
            }
        }
    }
    s
}

impl<'m> Parametrix<'m> {
    /// Builds P for pole y on the Ω′ mesh using a factored Dirichlet system
    /// for ∇·(a∇·) on that mesh (shared across poles).
    pub fn new(
        a: &CoefficientField,
        y: Point,
        asm_prime: &Assembler<'m>,
        system: Option<&DirichletSystem<'m>>,
        mollify: f64,
    ) -> Result<Self> {
        let kernel = SingularKernel::new(a, y)?;
        let mesh = asm_prime.mesh;
        if a.constant_value().is_some() {
            return Ok(Parametrix { kernel, mesh, correction: None, mollify });
        }
        let near = local_h(mesh, &y, 4.0 * mollify.max(1e-3));
        if mollify < near {
            return Err(Error::Singularity(format!(
                "mollification radius {mollify:.3e} is below the local mesh size {near:.3e}"
            )));
        }
        let k2 = kernel.clone();
        let a2 = a.clone();
        let f = move |x: &Point| {
            if norm(&sub(x, &k2.y())) < mollify {
                0.0
            } else {
                operator_on_kernel(&a2, &k2, x)
            }
        };
        let load = asm_prime.load(&f);
        let zero = vec![0.0; mesh.n_boundary()];
        let r = match system {
            Some(s) => s.solve_with_load(&zero, &load)?,
            None => {
                let sys = LinearProblem::diffusion(1.0).with_source(Arc::new(f)).system(asm_prime)?;
                sys.solve(&zero)?
            }
        };
        Ok(Parametrix { kernel, mesh, correction: Some(r), mollify })
    }

    /// P at a node of the Ω′ mesh.
    pub fn at_node(&self, i: usize) -> f64 {
        let x = self.mesh.nodes[i];
        self.kernel.h_at(&x) + self.correction.as_ref().map_or(0.0, |r| r[i])
    }

    /// P at an arbitrary point of Ω′ (R interpolated).
    pub fn eval(&self, loc: &Locator<'_>, x: &Point) -> Result<f64> {
        let h = self.kernel.h(x)?;
        let r = match &self.correction {
            None => 0.0,
            Some(r) => loc
                .interpolate(r, x)
                .ok_or_else(|| Error::Domain(format!("point {x:?} lies outside Ω′")))?,
        };
        Ok(h + r)
    }
}

/// Largest cell diameter among cells within `radius` of p (the nearest
/// cell's diameter if none is that close).
pub fn local_h(mesh: &Mesh, p: &Point, radius: f64) -> f64 {
    let mut best = 0.0f64;
    let mut nearest = (f64::INFINITY, 0.0);
    for c in 0..mesh.cells.len() {
        let d = norm(&sub(&mesh.cell_centroid(c), p));
        let diam = mesh.cell_diameter(c);
        if d <= radius {
            best = best.max(diam);
        }
        if d < nearest.0 {
            nearest = (d, diam);
        }
    }
    if best > 0.0 {
        best
    } else {
        nearest.1
    }
}

/// Pointwise residual density of ∇·(a∇u_h) at free nodes farther than
/// `exclude` from the pole: sqrt(Σ rᵢ²/mᵢ) with r = K u the weak residual.
pub fn weak_residual_density(asm: &Assembler<'_>, u: &[f64], pole: &Point, exclude: f64) -> f64 {
    let k = asm.stiffness(1.0);
    let r = k.mul_vec(u);
    let mesh = asm.mesh;
    let mut s = 0.0;
    for i in mesh.interior_nodes() {
        if norm(&sub(&mesh.nodes[i], pole)) >= exclude {
            s += r[i] * r[i] / asm.lumped[i];
        }
    }
    s.sqrt()
}
