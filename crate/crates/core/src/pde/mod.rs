//! Forward problems: quasilinear, semilinear, linear convection–diffusion and
//! Schrödinger-type equations with Dirichlet data.

pub mod fields;
pub mod laws;
pub mod linear;
pub mod newton;
pub mod problem;

use std::fmt::Write as _;

pub use fields::{check_ellipticity, CoefficientField};
pub use laws::{DriftLaw, QuasilinearLaw, SemilinearLaw};
pub use linear::{solve_linear, solve_schrodinger, DirichletSystem, LinearProblem};
pub use newton::{solve_quasilinear, solve_semilinear, NewtonOptions};
pub use problem::{Condition, ProblemSpec};

use crate::geometry::Mesh;

/// A discrete solution with its diagnostics.
#[derive(Clone, Debug)]
pub struct FieldSolution {
    /// Nodal values on the whole mesh.
    pub values: Vec<f64>,
    /// Dirichlet data actually imposed (boundary order).
    pub dirichlet: Vec<f64>,
    /// Weak-form residual at the boundary nodes: the variational flux.
    pub boundary_residual: Vec<f64>,
    /// l2 norm of the residual at the free nodes.
    pub residual_norm: f64,
    pub newton_iterations: usize,
    pub residual_history: Vec<f64>,
    /// Which equation this solves, e.g. "quasilinear", "linear-adjoint".
    pub tag: String,
    pub params: Vec<(String, String)>,
}

impl FieldSolution {
    /// Checks that boundary values equal the Dirichlet data exactly.
    pub fn matches_dirichlet(&self, mesh: &Mesh) -> bool {
        mesh.boundary_nodes
            .iter()
            .zip(&self.dirichlet)
            .all(|(&i, &g)| self.values[i] == g)
    }

    /// Text export: a provenance header followed by `field: node_id value`.
    pub fn export(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "# equation: {}", self.tag);
        for (k, v) in &self.params {
            let _ = writeln!(s, "# {k}: {v}");
        }
        let _ = writeln!(s, "# residual_norm: {:.6e}", self.residual_norm);
        let _ = writeln!(s, "# newton_iterations: {}", self.newton_iterations);
        for (i, v) in self.values.iter().enumerate() {
            let _ = writeln!(s, "field: {i} {:.17e}", v);
        }
        s
    }

    /// Parses the text export back into nodal values.
    pub fn parse_values(text: &str) -> crate::Result<Vec<f64>> {
        let mut vals = Vec::new();
        for (ln, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let rest = line.strip_prefix("field:").ok_or_else(|| crate::Error::Parse {
                source_name: "solution".into(),
                line: ln + 1,
                detail: "expected 'field:' record".into(),
            })?;
            let toks: Vec<&str> = rest.split_whitespace().collect();
            let bad = || crate::Error::Parse { source_name: "solution".into(), line: ln + 1, detail: "bad record".into() };
            if toks.len() != 2 {
                return Err(bad());
            }
            let id: usize = toks[0].parse().map_err(|_| bad())?;
            let v: f64 = toks[1].parse().map_err(|_| bad())?;
            if id != vals.len() {
                return Err(bad());
            }
            vals.push(v);
        }
        Ok(vals)
    }
}
