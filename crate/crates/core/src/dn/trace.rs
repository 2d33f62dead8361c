use crate::error::{Error, Result};
use crate::fem::Assembler;
use crate::geometry::{BoundaryPatch, Mesh};
use crate::linalg::{dot, mat_vec, Point};
use crate::pde::FieldSolution;

/// A boundary functional in dual (nodal-load) representation, restricted to
/// test functions supported in a patch.
#[derive(Clone, Debug, PartialEq)]
pub struct FluxTrace {
    /// One entry per boundary node (mesh boundary order); zero outside S.
    pub values: Vec<f64>,
    pub mask: Vec<bool>,
}

impl FluxTrace {
    pub fn from_residual(residual: &[f64], patch: &BoundaryPatch) -> Self {
        let values = residual
            .iter()
            .zip(&patch.node_mask)
            .map(|(&r, &m)| if m { r } else { 0.0 })
            .collect();
        FluxTrace { values, mask: patch.node_mask.clone() }
    }

    /// ⟨flux, f⟩ for a nodal boundary function f.
    pub fn pair(&self, f: &[f64]) -> f64 {
        self.values.iter().zip(f).map(|(a, b)| a * b).sum()
    }

    pub fn sub(&self, other: &FluxTrace) -> FluxTrace {
        FluxTrace {
            values: self.values.iter().zip(&other.values).map(|(a, b)| a - b).collect(),
            mask: self.mask.clone(),
        }
    }

    pub fn add(&self, other: &FluxTrace) -> FluxTrace {
        FluxTrace {
            values: self.values.iter().zip(&other.values).map(|(a, b)| a + b).collect(),
            mask: self.mask.clone(),
        }
    }

    pub fn scaled(&self, s: f64) -> FluxTrace {
        FluxTrace { values: self.values.iter().map(|a| a * s).collect(), mask: self.mask.clone() }
    }

    pub fn l2(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum::<f64>().sqrt()
    }
}

/// Variational flux of a solution restricted to the patch: the weak-form
/// residual of its tagged equation tested against boundary hat functions.
pub fn neumann_trace(sol: &FieldSolution, mesh: &Mesh, patch: &BoundaryPatch) -> Result<FluxTrace> {
    if sol.values.len() != mesh.n_nodes() || sol.boundary_residual.len() != mesh.n_boundary() {
        return Err(Error::Mismatch("solution does not live on this mesh".into()));
    }
    if patch.node_mask.len() != mesh.n_boundary() {
        return Err(Error::Mismatch("patch does not belong to this mesh".into()));
    }
    Ok(FluxTrace::from_residual(&sol.boundary_residual, patch))
}

/// Principal-part flux h ↦ ∫ w(x, u) a∇u·∇E(h) with E the zero extension of
/// boundary hat functions; equals w ∂_{ν_a}u for smooth solutions of a
/// divergence-form equation without lower-order terms.
pub fn weighted_conormal_trace(
    asm: &Assembler<'_>,
    u: &[f64],
    weight: &dyn Fn(&Point, f64) -> f64,
    patch: &BoundaryPatch,
) -> Result<FluxTrace> {
    let mesh = asm.mesh;
    if u.len() != mesh.n_nodes() {
        return Err(Error::Mismatch("nodal vector does not live on this mesh".into()));
    }
    let d = mesh.dim;
    let n = d + 1;
    let rule = crate::fem::quadrature::simplex_rule(d, 2);
    let mut r = vec![0.0; mesh.n_boundary()];
    for (c, cd) in asm.cells.iter().enumerate() {
        let v = mesh.cell(c);
        if !v.iter().any(|&i| mesh.is_boundary(i)) {
            continue;
        }
        let mut gu = [0.0; 3];
        for k in 1..n {
            let du = u[v[k]] - u[v[0]];
            for (x, g) in gu.iter_mut().zip(&cd.grads[k]).take(d) {
                *x += du * g;
            }
        }
        for (q, b) in rule.points.iter().enumerate() {
            let uq: f64 = (0..n).map(|k| b[k] * u[v[k]]).sum();
            let w = weight(&cd.qpts[q], uq) * rule.weights[q] * cd.volume;
            let flux = mat_vec(&cd.a_q[q], &gu, d);
            for i in 0..n {
                let bp = mesh.boundary_pos[v[i]];
                if bp != usize::MAX {
                    r[bp] += w * dot(&flux, &cd.grads[i]);
                }
            }
        }
    }
    Ok(FluxTrace::from_residual(&r, patch))
}
