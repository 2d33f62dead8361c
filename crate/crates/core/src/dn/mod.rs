//! Partial Dirichlet-to-Neumann maps, their linearizations, boundary
//! fractional norms and operator-norm measurements.

pub mod dictionary;
pub mod frechet;
pub mod fractional;
pub mod measurement;
pub mod trace;

use std::sync::Arc;

pub use dictionary::{Dictionary, DictionaryKind};
pub use frechet::{frechet_ratio, linear_fit, loglog_slope, FrechetReport};
pub use fractional::FractionalSpace;
pub use measurement::{measurement_functional, sample_operator, BoundaryOperatorSample};
pub use trace::{neumann_trace, weighted_conormal_trace, FluxTrace};

use crate::error::{Error, Result};
use crate::fem::Assembler;
use crate::geometry::{BoundaryFunction, BoundaryPatch};
use crate::linalg::Point;
use crate::pde::{Condition, DirichletSystem, FieldSolution, LinearProblem, NewtonOptions, ProblemSpec};

/// Background state at which a DN map is linearized.
#[derive(Clone, Debug)]
pub enum Background {
    /// Constant Dirichlet data λ.
    Constant(f64),
    /// Dirichlet data λχ for a boundary cutoff χ.
    Cutoff { lambda: f64, chi: BoundaryFunction },
}

impl Background {
    pub fn lambda(&self) -> f64 {
        match self {
            Background::Constant(l) => *l,
            Background::Cutoff { lambda, .. } => *lambda,
        }
    }

    pub fn data(&self, n_boundary: usize) -> BoundaryFunction {
        match self {
            Background::Constant(l) => BoundaryFunction::new(vec![*l; n_boundary]),
            Background::Cutoff { lambda, chi } => chi.scaled(*lambda),
        }
    }

    pub fn describe(&self) -> String {
        match self {
            Background::Constant(l) => format!("constant {l}"),
            Background::Cutoff { lambda, .. } => format!("{lambda} * cutoff"),
        }
    }
}

/// N(g): the weighted variational flux of the forward solution on S.
pub fn dn_apply(
    asm: &Assembler<'_>,
    problem: &ProblemSpec,
    g: &BoundaryFunction,
    patch: &BoundaryPatch,
    opts: &NewtonOptions,
) -> Result<FluxTrace> {
    let sol = problem.solve(asm, g, opts)?;
    neumann_trace(&sol, asm.mesh, patch)
}

/// Linearized DN operator at a background: a factored linear problem whose
/// boundary residual is the linearized flux.
pub struct LinearizedOperator<'m> {
    pub system: DirichletSystem<'m>,
    pub problem: LinearProblem,
    pub patch: BoundaryPatch,
    pub lambda: f64,
    /// Background solution (condition ii) used to build the potential.
    pub background_solution: Option<FieldSolution>,
    pub description: String,
}

impl<'m> LinearizedOperator<'m> {
    /// Solution w of the linearized problem with data h.
    pub fn solve(&self, h: &[f64]) -> Result<Vec<f64>> {
        self.system.solve(h)
    }

    pub fn apply(&self, h: &[f64]) -> Result<FluxTrace> {
        let w = self.system.solve(h)?;
        Ok(FluxTrace::from_residual(&self.system.boundary_residual(&w), &self.patch))
    }

    pub fn apply_many(&self, hs: &[Vec<f64>]) -> Result<Vec<FluxTrace>> {
        let ws = self.system.solve_many(hs)?;
        Ok(ws
            .iter()
            .map(|w| FluxTrace::from_residual(&self.system.boundary_residual(w), &self.patch))
            .collect())
    }

    /// The discrete operator matrix A (full), for pairing identities.
    pub fn matrix(&self) -> &crate::linalg::Csr {
        &self.system.matrix
    }
}

/// Builds the linearized operator: Λ_{γ(λ), D(·,λ)} for the quasilinear
/// condition, or the Schrödinger DN map with q = G′(v) for the semilinear one.
pub fn linearize<'m>(
    asm: &Assembler<'m>,
    problem: &ProblemSpec,
    background: &Background,
    patch: &BoundaryPatch,
    adjoint: bool,
    opts: &NewtonOptions,
) -> Result<LinearizedOperator<'m>> {
    problem.validate()?;
    let lambda = background.lambda();
    let (lp, bg) = match problem.condition {
        Condition::Quasilinear => {
            if !matches!(background, Background::Constant(_)) {
                return Err(Error::Unsupported(
                    "the quasilinear linearization is taken at a constant background".into(),
                ));
            }
            let gam = problem.gamma.gamma(lambda);
            if !(gam > 0.0) {
                return Err(Error::LawViolation(format!("γ({lambda}) = {gam} is not positive")));
            }
            let mut lp = LinearProblem::diffusion(gam).adjoint(adjoint);
            if !problem.drift.is_zero() {
                let d = problem.drift.clone();
                lp = lp.with_drift(Arc::new(move |x: &Point| d.eval(x, lambda)));
            }
            (lp, None)
        }
        Condition::Semilinear => {
            let data = background.data(asm.mesh.n_boundary());
            let v = problem.solve(asm, &data, opts)?;
            let mut q = Vec::with_capacity(v.values.len());
            for &x in &v.values {
                let d = problem.g.dg(x);
                if d < -1e-12 {
                    return Err(Error::LawViolation(format!(
                        "computed potential G′(v) = {d} is negative; G must be non-decreasing"
                    )));
                }
                q.push(d.max(0.0));
            }
            (LinearProblem::diffusion(1.0).with_potential(q).adjoint(adjoint), Some(v))
        }
    };
    let system = lp.system(asm)?;
    Ok(LinearizedOperator {
        system,
        problem: lp,
        patch: patch.clone(),
        lambda,
        background_solution: bg,
        description: format!("linearized at {}", background.describe()),
    })
}

/// Linearized flux for one boundary direction h.
pub fn linearized_dn(
    asm: &Assembler<'_>,
    problem: &ProblemSpec,
    background: &Background,
    h: &BoundaryFunction,
    patch: &BoundaryPatch,
    opts: &NewtonOptions,
) -> Result<FluxTrace> {
    linearize(asm, problem, background, patch, false, opts)?.apply(&h.values)
}
