use rayon::prelude::*;
use serde::Serialize;

use crate::dn::{linearize, Background, FluxTrace};
use crate::error::{Error, Result};
use crate::fem::Assembler;
use crate::geometry::{BoundaryFunction, DomainTriple};
use crate::linalg::identity3;
use crate::pde::{CoefficientField, Condition, DirichletSystem, LinearProblem, NewtonOptions, ProblemSpec};
use crate::recon::{fit_power_extrapolation, PointDiagnostics, ReconstructionCurve};
use crate::singular::{make_g2, SingularData, SingularKernel, SingularSetup};

/// The three derivative data g²_{k,τ} at one τ with their zero-potential
/// responses and the lumped denominator Σ_k Σ_i mᵢ ∂_kH(xᵢ,y_τ)².
pub struct DerivativeProbe {
    pub tau: f64,
    pub data: Vec<SingularData>,
    pub reference: Vec<FluxTrace>,
    pub denominator: f64,
    pub resolved: bool,
}

pub struct GprimeContext<'d> {
    pub dom: &'d DomainTriple,
    pub setup: SingularSetup<'d>,
    pub asm: Assembler<'d>,
    pub laplace: DirichletSystem<'d>,
    pub probes: Vec<DerivativeProbe>,
    pub chi: BoundaryFunction,
    pub opts: NewtonOptions,
}

#[derive(Clone, Debug, Serialize)]
pub struct GprimeEstimate {
    pub lambda: f64,
    /// τ → 0 extrapolation over the schedule.
    pub gprime_hat: f64,
    pub taus: Vec<f64>,
    pub ratios: Vec<f64>,
    /// Estimate at the single offset τ = clamp(m^{1/3}, [4h, δ/2]).
    pub rule_tau: Option<f64>,
    pub rule_value: Option<f64>,
    pub rule_clamped_low: bool,
    pub diagnostics: PointDiagnostics,
}

impl<'d> GprimeContext<'d> {
    pub fn new(dom: &'d DomainTriple, taus: &[f64], opts: NewtonOptions) -> Result<Self> {
        if dom.dim != 3 {
            return Err(Error::Unsupported("G′ recovery is implemented for n = 3".into()));
        }
        if taus.len() < 4 {
            return Err(Error::OutOfRange(format!("the τ schedule needs at least 4 values, got {}", taus.len())));
        }
        let a = CoefficientField::identity(3);
        let setup = SingularSetup::new(dom, &a)?;
        let asm = Assembler::new(&dom.omega, &a);
        let laplace = LinearProblem::diffusion(1.0).system(&asm)?;
        let chi = dom.cutoff()?;
        let mut ctx = GprimeContext { dom, setup, asm, laplace, probes: Vec::new(), chi, opts };
        let probes = taus.iter().map(|&t| ctx.probe(t)).collect::<Result<Vec<_>>>()?;
        ctx.probes = probes;
        Ok(ctx)
    }

    pub fn probe(&self, tau: f64) -> Result<DerivativeProbe> {
        let data = (0..3).map(|k| make_g2(&self.setup, tau, k)).collect::<Result<Vec<_>>>()?;
        let cols: Vec<Vec<f64>> = data.iter().map(|d| d.values.values.clone()).collect();
        let ws = self.laplace.solve_many(&cols)?;
        let reference = ws
            .iter()
            .map(|w| FluxTrace::from_residual(&self.laplace.boundary_residual(w), &self.dom.s))
            .collect();
        let kern = SingularKernel::new(&CoefficientField::identity(3), data[0].y)?;
        let mesh = &self.dom.omega;
        let denominator = mesh
            .nodes
            .iter()
            .zip(&self.asm.lumped)
            .map(|(x, m)| {
                let g = kern.grad_at(x);
                m * (g[0] * g[0] + g[1] * g[1] + g[2] * g[2])
            })
            .sum();
        let resolved = data.iter().all(|d| d.resolved);
        Ok(DerivativeProbe { tau, data, reference, denominator, resolved })
    }

    pub fn background(&self, lambda: f64) -> Background {
        Background::Cutoff { lambda, chi: self.chi.clone() }
    }

    fn ratio(&self, op: &crate::dn::LinearizedOperator<'_>, p: &DerivativeProbe) -> Result<f64> {
        let cols: Vec<Vec<f64>> = p.data.iter().map(|d| d.values.values.clone()).collect();
        let fl = op.apply_many(&cols)?;
        let num: f64 = fl.iter().zip(&p.reference).zip(&cols).map(|((f, r), g)| f.sub(r).pair(g)).sum();
        Ok(num / p.denominator)
    }
}

/// Ĝ′(λ) from Σ_k ⟨(D_{S,λ} − D⁰_{S,λ})g²_{k,τ}, g²_{k,τ}⟩ / Σ_k ∫|∂_kH|².
/// `m`, when given, is the measured operator-norm difference used for the
/// single-offset rule τ = m^{1/3}.
pub fn estimate_gprime_at(
    ctx: &GprimeContext<'_>,
    problem: &ProblemSpec,
    lambda: f64,
    m: Option<f64>,
) -> Result<GprimeEstimate> {
    if problem.condition != Condition::Semilinear || problem.a.constant_value() != Some(identity3(3)) {
        return Err(Error::Unsupported("G′ recovery needs the semilinear condition with a = identity".into()));
    }
    let op = linearize(&ctx.asm, problem, &ctx.background(lambda), &ctx.dom.s, false, &ctx.opts)?;
    let ratios = ctx.probes.iter().map(|p| ctx.ratio(&op, p)).collect::<Result<Vec<_>>>()?;
    let taus: Vec<f64> = ctx.probes.iter().map(|p| p.tau).collect();
    let fit = fit_power_extrapolation(&taus, &ratios);
    let mut diagnostics = PointDiagnostics::from_fit(&fit, &taus);
    diagnostics.resolution_flag = ctx.probes.iter().any(|p| !p.resolved);

    let (mut rule_tau, mut rule_value, mut rule_clamped_low) = (None, None, false);
    if let Some(m) = m {
        let lo = 4.0 * ctx.dom.mesh_size_near_x0();
        let hi = ctx.dom.delta / 2.0;
        let raw = m.max(0.0).cbrt();
        rule_clamped_low = raw < lo;
        let t = raw.clamp(lo.min(hi), hi);
        let p = ctx.probe(t)?;
        rule_tau = Some(t);
        rule_value = Some(ctx.ratio(&op, &p)?);
    }
    if fit.limit < -0.05 * fit.limit.abs().max(1.0) {
        diagnostics.consistency_flag = true;
    }
    Ok(GprimeEstimate {
        lambda,
        gprime_hat: fit.limit,
        taus,
        ratios,
        rule_tau,
        rule_value,
        rule_clamped_low,
        diagnostics,
    })
}

pub fn reconstruct_gprime(ctx: &GprimeContext<'_>, problem: &ProblemSpec, grid: &[f64]) -> Result<ReconstructionCurve> {
    ReconstructionCurve::check_grid(grid)?;
    let est: Vec<GprimeEstimate> = grid
        .par_iter()
        .map(|&l| estimate_gprime_at(ctx, problem, l, None))
        .collect::<Result<Vec<_>>>()?;
    Ok(ReconstructionCurve {
        quantity: "gprime".into(),
        lambda: grid.to_vec(),
        values: est.iter().map(|e| e.gprime_hat).collect(),
        diagnostics: est.into_iter().map(|e| e.diagnostics).collect(),
        argmax: None,
    })
}

/// Ĝ(λ) = G(0) + ∫₀^λ Ĝ′ by the trapezoidal rule on the grid.
pub fn reconstruct_semilinear(gprime: &ReconstructionCurve, anchor: f64) -> Result<ReconstructionCurve> {
    let l = &gprime.lambda;
    ReconstructionCurve::check_grid(l)?;
    let v = &gprime.values;
    let mut cum = vec![0.0; l.len()];
    for i in 1..l.len() {
        cum[i] = cum[i - 1] + 0.5 * (v[i] + v[i - 1]) * (l[i] - l[i - 1]);
    }
    // value of the cumulative integral at 0
    // off-grid zero: extend Ĝ′ linearly from the nearest two nodes
    let extend = |i: usize, j: usize| {
        if l.len() < 2 {
            v[i]
        } else {
            v[i] - l[i] * (v[j] - v[i]) / (l[j] - l[i])
        }
    };
    let at_zero = if l[0] >= 0.0 {
        -0.5 * (v[0] + extend(0, 1)) * l[0]
    } else if *l.last().unwrap() <= 0.0 {
        let n = l.len() - 1;
        cum[n] + 0.5 * (v[n] + extend(n, n.saturating_sub(1))) * (0.0 - l[n])
    } else {
        let j = l.iter().rposition(|&x| x <= 0.0).unwrap_or(0);
        let t = (0.0 - l[j]) / (l[j + 1] - l[j]);
        let v0 = v[j] + t * (v[j + 1] - v[j]);
        cum[j] + 0.5 * (v[j] + v0) * (0.0 - l[j])
    };
    Ok(ReconstructionCurve {
        quantity: "G".into(),
        lambda: l.clone(),
        values: cum.iter().map(|c| anchor + c - at_zero).collect(),
        diagnostics: gprime.diagnostics.clone(),
        argmax: None,
    })
}
