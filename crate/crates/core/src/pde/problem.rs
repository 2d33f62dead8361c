use crate::error::{Error, Result};
use crate::fem::Assembler;
use crate::geometry::BoundaryFunction;
use crate::linalg::identity3;
use crate::pde::{
    solve_quasilinear, solve_semilinear, CoefficientField, DriftLaw, FieldSolution, NewtonOptions, QuasilinearLaw,
    SemilinearLaw,
};

/// Which nonlinearity the forward problem carries.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Condition {
    /// −∇·(a γ(u)∇u) + D(x,u)·∇u = 0
    Quasilinear,
    /// −Δu + G(u) = 0
    Semilinear,
}

/// Coefficient matrix and laws of one forward problem.
#[derive(Clone, Debug)]
pub struct ProblemSpec {
    pub a: CoefficientField,
    pub gamma: QuasilinearLaw,
    pub drift: DriftLaw,
    pub g: SemilinearLaw,
    pub condition: Condition,
}

impl ProblemSpec {
    pub fn quasilinear(a: CoefficientField, gamma: QuasilinearLaw, drift: DriftLaw) -> Self {
        ProblemSpec { a, gamma, drift, g: SemilinearLaw::zero(), condition: Condition::Quasilinear }
    }

    pub fn semilinear(dim: usize, g: SemilinearLaw) -> Self {
        ProblemSpec {
            a: CoefficientField::identity(dim),
            gamma: QuasilinearLaw::constant(1.0),
            drift: DriftLaw::zero(),
            g,
            condition: Condition::Semilinear,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.condition == Condition::Semilinear && self.a.constant_value() != Some(identity3(self.a.dim)) {
            return Err(Error::Unsupported("semilinear problems require a = identity".into()));
        }
        Ok(())
    }

    /// Forward solve with Dirichlet data g.
    pub fn solve(&self, asm: &Assembler<'_>, g: &BoundaryFunction, opts: &NewtonOptions) -> Result<FieldSolution> {
        self.validate()?;
        match self.condition {
            Condition::Quasilinear => solve_quasilinear(asm, &self.gamma, &self.drift, g, None, opts),
            Condition::Semilinear => solve_semilinear(asm, &self.g, g, None, opts),
        }
    }
}
