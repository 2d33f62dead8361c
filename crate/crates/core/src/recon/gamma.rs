use rayon::prelude::*;
use serde::Serialize;

use crate::dn::{linearize, Background};
use crate::error::{Error, Result};
use crate::fem::Assembler;
use crate::geometry::DomainTriple;
use crate::pde::{Condition, LinearProblem, NewtonOptions, ProblemSpec};
use crate::recon::{fit_power_extrapolation, PointDiagnostics, ReconstructionCurve};
use crate::singular::{make_g1, SingularData, SingularSetup};

/// Singular data and reference pairings shared by every λ of a γ
/// reconstruction on one geometry.
pub struct GammaContext<'d> {
    pub dom: &'d DomainTriple,
    pub asm: Assembler<'d>,
    pub data: Vec<SingularData>,
    /// ⟨Λ^{ref} g¹_τ, g¹_τ⟩ for γ ≡ 1, D ≡ 0 and the same a.
    pub reference: Vec<f64>,
    pub opts: NewtonOptions,
}

#[derive(Clone, Debug, Serialize)]
pub struct GammaEstimate {
    pub lambda: f64,
    pub gamma_hat: f64,
    pub taus: Vec<f64>,
    /// r(τ) = ⟨Λ g, g⟩ / ⟨Λ^{ref} g, g⟩
    pub ratios: Vec<f64>,
    pub diagnostics: PointDiagnostics,
}

impl<'d> GammaContext<'d> {
    pub fn new(
        dom: &'d DomainTriple,
        a: &crate::pde::CoefficientField,
        taus: &[f64],
        opts: NewtonOptions,
    ) -> Result<Self> {
        if taus.len() < 4 {
            return Err(Error::OutOfRange(format!("the τ schedule needs at least 4 values, got {}", taus.len())));
        }
        let setup = SingularSetup::new(dom, a)?;
        let data = taus.iter().map(|&t| make_g1(&setup, t)).collect::<Result<Vec<_>>>()?;
        let asm = Assembler::new(&dom.omega, a);
        let refsys = LinearProblem::diffusion(1.0).system(&asm)?;
        let cols: Vec<Vec<f64>> = data.iter().map(|d| d.values.values.clone()).collect();
        let ws = refsys.solve_many(&cols)?;
        let reference = ws
            .iter()
            .zip(&cols)
            .map(|(w, g)| crate::dn::FluxTrace::from_residual(&refsys.boundary_residual(w), &dom.s).pair(g))
            .collect();
        Ok(GammaContext { dom, asm, data, reference, opts })
    }

    pub fn taus(&self) -> Vec<f64> {
        self.data.iter().map(|d| d.tau).collect()
    }
}

/// γ̂(λ): τ → 0 extrapolation of the ratio of measured to reference
/// pairings on the singular data g¹_τ.
pub fn estimate_gamma_at(ctx: &GammaContext<'_>, problem: &ProblemSpec, lambda: f64) -> Result<GammaEstimate> {
    if problem.condition != Condition::Quasilinear {
        return Err(Error::Unsupported("γ recovery needs the quasilinear condition".into()));
    }
    let op = linearize(&ctx.asm, problem, &Background::Constant(lambda), &ctx.dom.s, false, &ctx.opts)?;
    let cols: Vec<Vec<f64>> = ctx.data.iter().map(|d| d.values.values.clone()).collect();
    let fluxes = op.apply_many(&cols)?;
    let ratios: Vec<f64> = fluxes
        .iter()
        .zip(&cols)
        .zip(&ctx.reference)
        .map(|((f, g), r)| f.pair(g) / r)
        .collect();
    let taus = ctx.taus();
    let fit = fit_power_extrapolation(&taus, &ratios);
    let unresolved = ctx.data.iter().any(|d| !d.resolved);
    let mut diagnostics = PointDiagnostics::from_fit(&fit, &taus);
    diagnostics.resolution_flag = unresolved;
    if !problem.drift.is_zero() && !problem.drift.admissible {
        diagnostics.out_of_theory = true;
    }
    Ok(GammaEstimate { lambda, gamma_hat: fit.limit, taus, ratios, diagnostics })
}

/// γ̂ on a λ grid (parallel over grid points).
pub fn reconstruct_gamma(ctx: &GammaContext<'_>, problem: &ProblemSpec, grid: &[f64]) -> Result<ReconstructionCurve> {
    ReconstructionCurve::check_grid(grid)?;
    let est: Vec<GammaEstimate> = grid
        .par_iter()
        .map(|&l| estimate_gamma_at(ctx, problem, l))
        .collect::<Result<Vec<_>>>()?;
    Ok(ReconstructionCurve {
        quantity: "gamma".into(),
        lambda: grid.to_vec(),
        values: est.iter().map(|e| e.gamma_hat).collect(),
        diagnostics: est.into_iter().map(|e| e.diagnostics).collect(),
        argmax: None,
    })
}

/// Difference mode: γ̂₁ − γ̂₂ on the grid with the arg-max λ_R recorded.
pub fn reconstruct_gamma_difference(
    ctx: &GammaContext<'_>,
    p1: &ProblemSpec,
    p2: &ProblemSpec,
    grid: &[f64],
) -> Result<ReconstructionCurve> {
    let c1 = reconstruct_gamma(ctx, p1, grid)?;
    let c2 = reconstruct_gamma(ctx, p2, grid)?;
    let values: Vec<f64> = c1.values.iter().zip(&c2.values).map(|(a, b)| a - b).collect();
    let argmax = values
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.abs().total_cmp(&b.1.abs()))
        .map(|(i, _)| grid[i]);
    let diagnostics = c1.diagnostics.into_iter().zip(c2.diagnostics).map(|(a, b)| a.merge(&b)).collect();
    Ok(ReconstructionCurve { quantity: "gamma-difference".into(), lambda: grid.to_vec(), values, diagnostics, argmax })
}
