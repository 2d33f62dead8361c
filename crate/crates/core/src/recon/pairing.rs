use serde::Serialize;

use crate::dn::LinearizedOperator;
use crate::error::{Error, Result};
use crate::fem::Assembler;
use crate::linalg::Csr;

/// Both sides of the integral identity for two linearized problems tested
/// with the same boundary datum g.
#[derive(Clone, Debug, Serialize)]
pub struct PairingSample {
    pub lambda: f64,
    pub tau: Option<f64>,
    /// ⟨(Λ¹ − Λ²)g, g⟩
    pub boundary: f64,
    /// (s₁−s₂)∫a∇w₁·∇w₂* + ∫(B₁−B₂)·∇w₁ w₂* + ∫(q₁−q₂)w₁w₂*
    pub volume: f64,
    pub discrepancy: f64,
}

impl PairingSample {
    /// |boundary − volume| ≤ 1e−6(|boundary| + |volume|) + 1e−10.
    pub fn consistent(&self) -> bool {
        self.discrepancy <= 1e-6 * (self.boundary.abs() + self.volume.abs()) + 1e-10
    }
}

/// Evaluates the identity with w₁ solving problem 1 and w₂* the adjoint of
/// problem 2, both with Dirichlet data g.
pub fn pairing(
    asm: &Assembler<'_>,
    op1: &LinearizedOperator<'_>,
    op2: &LinearizedOperator<'_>,
    g: &[f64],
    tau: Option<f64>,
) -> Result<PairingSample> {
    if op1.system.mesh.nodes.len() != op2.system.mesh.nodes.len()
        || !std::ptr::eq(op1.system.mesh, asm.mesh)
        || !std::ptr::eq(op2.system.mesh, asm.mesh)
        || op1.patch.node_mask != op2.patch.node_mask
    {
        return Err(Error::Mismatch("pairing needs both problems on the same mesh and patch".into()));
    }
    if g.iter().zip(&op1.patch.node_mask).any(|(&v, &m)| !m && v != 0.0) {
        return Err(Error::Mismatch("pairing datum is not supported in S".into()));
    }
    let f1 = op1.apply(g)?;
    let f2 = op2.apply(g)?;
    let boundary = f1.sub(&f2).pair(g);

    let w1 = op1.solve(g)?;
    let adj = op2.problem.clone().adjoint(!op2.problem.adjoint);
    let w2 = adj.system(asm)?.solve(g)?;

    let p1 = &op1.problem;
    let p2 = &op2.problem;
    let mut volume = (p1.scale - p2.scale) * asm.stiffness(1.0).bilinear(&w2, &w1);
    let conv = |p: &crate::pde::LinearProblem| -> Option<Csr> { p.drift.as_ref().map(|b| asm.convection(b.as_ref())) };
    if let Some(c) = conv(p1) {
        volume += c.bilinear(&w2, &w1);
    }
    if let Some(c) = conv(p2) {
        volume -= c.bilinear(&w2, &w1);
    }
    let zero = vec![0.0; w1.len()];
    let q1 = p1.potential.as_deref().unwrap_or(&zero);
    let q2 = p2.potential.as_deref().unwrap_or(&zero);
    for i in 0..w1.len() {
        volume += asm.lumped[i] * (q1[i] - q2[i]) * w1[i] * w2[i];
    }
    Ok(PairingSample { lambda: op1.lambda, tau, boundary, volume, discrepancy: (boundary - volume).abs() })
}
