use std::sync::Arc;

use crate::error::{Error, Result};
use crate::fem::{Assembler, Source, VectorField};
use crate::geometry::{BoundaryFunction, Mesh};
use crate::linalg::{Csr, SparseLu};
use crate::pde::FieldSolution;

/// A factored Dirichlet problem A u = f with u prescribed on the boundary.
/// The interior block is factored once and reused for every boundary datum.
pub struct DirichletSystem<'m> {
    pub mesh: &'m Mesh,
    pub matrix: Csr,
    pub load: Vec<f64>,
    free: Vec<usize>,
    lu: SparseLu,
}

impl<'m> DirichletSystem<'m> {
    pub fn new(mesh: &'m Mesh, matrix: Csr, load: Vec<f64>) -> Result<Self> {
        let free = mesh.interior_nodes();
        let lu = SparseLu::factor_sub(&matrix, &free)?;
        Ok(DirichletSystem { mesh, matrix, load, free, lu })
    }

    fn lift(&self, g: &[f64]) -> Vec<f64> {
        let mut u = vec![0.0; self.mesh.n_nodes()];
        for (&i, &v) in self.mesh.boundary_nodes.iter().zip(g) {
            u[i] = v;
        }
        u
    }

    fn rhs(&self, u: &[f64]) -> Vec<f64> {
        self.rhs_with(u, &self.load)
    }

    fn rhs_with(&self, u: &[f64], load: &[f64]) -> Vec<f64> {
        self.free
            .iter()
            .map(|&i| load[i] - self.matrix.row(i).map(|(j, v)| v * u[j]).sum::<f64>())
            .collect()
    }

    pub fn solve(&self, g: &[f64]) -> Result<Vec<f64>> {
        self.solve_with_load(g, &self.load)
    }

    /// Same operator, different load vector.
    pub fn solve_with_load(&self, g: &[f64], load: &[f64]) -> Result<Vec<f64>> {
        if g.len() != self.mesh.n_boundary() || load.len() != self.mesh.n_nodes() {
            return Err(Error::Mismatch("boundary data or load length differs from the mesh".into()));
        }
        let mut u = self.lift(g);
        let mut rhs = self.rhs_with(&u, load);
        self.lu.solve_in_place(&mut rhs)?;
        for (&i, v) in self.free.iter().zip(rhs) {
            u[i] = v;
        }
        Ok(u)
    }

    /// Solves for many boundary data at once.
    pub fn solve_many(&self, gs: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
        let nf = self.free.len();
        let mut lifts: Vec<Vec<f64>> = Vec::with_capacity(gs.len());
        let mut rhs = Vec::with_capacity(nf * gs.len());
        for g in gs {
            if g.len() != self.mesh.n_boundary() {
                return Err(Error::Mismatch("boundary data length differs from the mesh boundary".into()));
            }
            let u = self.lift(g);
            rhs.extend(self.rhs(&u));
            lifts.push(u);
        }
        if gs.is_empty() {
            return Ok(lifts);
        }
        self.lu.solve_many(&mut rhs, gs.len())?;
        for (k, u) in lifts.iter_mut().enumerate() {
            for (l, &i) in self.free.iter().enumerate() {
                u[i] = rhs[k * nf + l];
            }
        }
        Ok(lifts)
    }

    /// (A u - f) at the boundary nodes, boundary order.
    pub fn boundary_residual(&self, u: &[f64]) -> Vec<f64> {
        self.mesh
            .boundary_nodes
            .iter()
            .map(|&i| self.matrix.row(i).map(|(j, v)| v * u[j]).sum::<f64>() - self.load[i])
            .collect()
    }

    pub fn free_residual_norm(&self, u: &[f64]) -> f64 {
        self.free
            .iter()
            .map(|&i| {
                let r = self.matrix.row(i).map(|(j, v)| v * u[j]).sum::<f64>() - self.load[i];
                r * r
            })
            .sum::<f64>()
            .sqrt()
    }

    pub fn solution(&self, g: &[f64], tag: &str, params: Vec<(String, String)>) -> Result<FieldSolution> {
        let u = self.solve(g)?;
        Ok(self.wrap(u, g, tag, params))
    }

    pub fn wrap(&self, u: Vec<f64>, g: &[f64], tag: &str, params: Vec<(String, String)>) -> FieldSolution {
        let res = self.free_residual_norm(&u);
        FieldSolution {
            boundary_residual: self.boundary_residual(&u),
            residual_norm: res,
            residual_history: vec![res],
            values: u,
            dirichlet: g.to_vec(),
            newton_iterations: 0,
            tag: tag.to_string(),
            params,
        }
    }
}

/// −s∇·(a∇w) + B·∇w + q w = f (or the adjoint −s∇·(a∇w) − ∇·(B w) + q w = f).
#[derive(Clone, Default)]
pub struct LinearProblem {
    pub scale: f64,
    pub drift: Option<Arc<VectorField>>,
    /// Nodal non-negative potential q (mass-lumped).
    pub potential: Option<Vec<f64>>,
    pub adjoint: bool,
    pub source: Option<Arc<Source>>,
}

impl LinearProblem {
    pub fn diffusion(scale: f64) -> Self {
        LinearProblem { scale, ..Default::default() }
    }

    pub fn with_drift(mut self, b: Arc<VectorField>) -> Self {
        self.drift = Some(b);
        self
    }

    pub fn with_potential(mut self, q: Vec<f64>) -> Self {
        self.potential = Some(q);
        self
    }

    pub fn with_source(mut self, f: Arc<Source>) -> Self {
        self.source = Some(f);
        self
    }

    pub fn adjoint(mut self, flag: bool) -> Self {
        self.adjoint = flag;
        self
    }

    pub fn tag(&self) -> &'static str {
        match (self.potential.is_some(), self.adjoint) {
            (true, _) => "schrodinger",
            (false, true) => "linear-adjoint",
            (false, false) => "linear",
        }
    }

    /// Assembles the full matrix and load (direct form; transposed for the
    /// adjoint so the two are exact discrete adjoints).
    pub fn assemble(&self, asm: &Assembler<'_>) -> Result<(Csr, Vec<f64>)> {
        if !(self.scale > 0.0) {
            return Err(Error::OutOfRange(format!("diffusion scale must be positive, got {}", self.scale)));
        }
        let mut a = asm.stiffness(self.scale);
        if let Some(b) = &self.drift {
            let pe = asm.max_peclet(self.scale, b.as_ref());
            if pe > 2.0 {
                return Err(Error::Peclet { peclet: pe });
            }
            a = a.combine(1.0, &asm.convection(b.as_ref()), 1.0);
        }
        if self.adjoint {
            a = a.transpose();
        }
        if let Some(q) = &self.potential {
            if q.len() != asm.mesh.n_nodes() {
                return Err(Error::Mismatch("potential length differs from the node count".into()));
            }
            if let Some((i, v)) = q.iter().enumerate().find(|(_, v)| **v < 0.0 || !v.is_finite()) {
                return Err(Error::OutOfRange(format!("potential must be non-negative, q[{i}] = {v}")));
            }
            a = a.combine(1.0, &asm.lumped_potential(q), 1.0);
        }
        let load = match &self.source {
            Some(f) => asm.load(f.as_ref()),
            None => vec![0.0; asm.mesh.n_nodes()],
        };
        Ok((a, load))
    }

    pub fn system<'m>(&self, asm: &Assembler<'m>) -> Result<DirichletSystem<'m>> {
        let (a, load) = self.assemble(asm)?;
        DirichletSystem::new(asm.mesh, a, load)
    }

    fn params(&self) -> Vec<(String, String)> {
        vec![
            ("scale".into(), format!("{}", self.scale)),
            ("drift".into(), self.drift.is_some().to_string()),
            ("adjoint".into(), self.adjoint.to_string()),
        ]
    }
}

/// Solves the linear problem with Dirichlet data `g`.
pub fn solve_linear(asm: &Assembler<'_>, p: &LinearProblem, g: &BoundaryFunction) -> Result<FieldSolution> {
    let sys = p.system(asm)?;
    sys.solution(&g.values, p.tag(), p.params())
}

/// −Δw + q w = f with w = g on the boundary; requires q >= 0.
pub fn solve_schrodinger(
    asm: &Assembler<'_>,
    q: &[f64],
    g: &BoundaryFunction,
    source: Option<Arc<Source>>,
) -> Result<FieldSolution> {
    let mut p = LinearProblem::diffusion(1.0).with_potential(q.to_vec());
    p.source = source;
    let sys = p.system(asm)?;
    sys.solution(&g.values, "schrodinger", vec![("potential".into(), "nodal".into())])
}
