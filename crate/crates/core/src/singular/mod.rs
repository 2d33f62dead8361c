//! Fundamental solutions, parametrices, singular boundary data concentrating
//! at x₀ and the decomposition of the resulting singular solutions.

pub mod kernel;
pub mod parametrix;

use std::sync::Arc;

use serde::Serialize;

pub use kernel::{flux_through_sphere, FrozenMetric, SingularKernel};
pub use parametrix::{local_h, operator_on_kernel, weak_residual_density, Parametrix};

use crate::dn::frechet::loglog_slope;
use crate::dn::FractionalSpace;
use crate::error::{Error, Result};
use crate::fem::{Assembler, VectorField};
use crate::fem::quadrature::integrate;
use crate::geometry::{BoundaryFunction, DomainTriple, Locator};
use crate::linalg::{identity3, Csr, Point};
use crate::pde::{CoefficientField, DirichletSystem, FieldSolution, LinearProblem};
use crate::table::{num, Table};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum SingularKind {
    /// P(·,y_τ) − w⁰_τ
    G1,
    /// ∂_k H(·,y_τ) − v_{k,τ}, k zero-based
    G2 { k: usize },
}

/// Singular Dirichlet data on ∂Ω, vanishing outside S′.
#[derive(Clone, Debug)]
pub struct SingularData {
    pub kind: SingularKind,
    pub tau: f64,
    pub y: Point,
    pub values: BoundaryFunction,
    /// The sweep field on the Ω′ mesh.
    pub sweep: Vec<f64>,
    /// τ ≥ 4h near x₀.
    pub resolved: bool,
}

/// Everything reused across a τ sweep: assemblers and the factored
/// ∇·(a∇·) system on Ω′.
pub struct SingularSetup<'d> {
    pub dom: &'d DomainTriple,
    pub a: CoefficientField,
    pub asm_prime: Assembler<'d>,
    pub sweep_system: DirichletSystem<'d>,
    pub locator: Locator<'d>,
}

impl<'d> SingularSetup<'d> {
    pub fn new(dom: &'d DomainTriple, a: &CoefficientField) -> Result<Self> {
        if a.dim != dom.dim {
            return Err(Error::Mismatch("coefficient and domain dimensions differ".into()));
        }
        let asm_prime = Assembler::new(&dom.omega_prime, a);
        let sweep_system = LinearProblem::diffusion(1.0).system(&asm_prime)?;
        let locator = Locator::new(&dom.omega_prime);
        Ok(SingularSetup { dom, a: a.clone(), asm_prime, sweep_system, locator })
    }

    pub fn kernel_at(&self, tau: f64) -> Result<SingularKernel> {
        SingularKernel::new(&self.a, self.dom.exterior_point(tau)?)
    }

    fn mollify_radius(&self, y: &Point) -> f64 {
        2.0 * local_h(&self.dom.omega_prime, y, 0.25 * self.dom.delta)
    }

    pub fn parametrix(&self, tau: f64) -> Result<Parametrix<'d>> {
        let y = self.dom.exterior_point(tau)?;
        Parametrix::new(&self.a, y, &self.asm_prime, Some(&self.sweep_system), self.mollify_radius(&y))
    }

    /// Assembles data on ∂Ω from a function on Ω′ and its sweep: zero off
    /// S′ (those nodes are shared with ∂Ω′ where the two agree), the
    /// difference elsewhere.
    fn restrict(&self, f: impl Fn(&Point) -> Result<f64>, sweep: &[f64]) -> Result<Vec<f64>> {
        let om = &self.dom.omega;
        let mut out = vec![0.0; om.n_boundary()];
        for (k, &i) in om.boundary_nodes.iter().enumerate() {
            if !self.dom.s_prime.node_mask[k] {
                continue;
            }
            let x = om.nodes[i];
            let w = self
                .locator
                .interpolate(sweep, &x)
                .ok_or_else(|| Error::Domain(format!("∂Ω node {x:?} is not inside Ω′")))?;
            out[k] = f(&x)? - w;
        }
        Ok(out)
    }
}

/// g¹_τ = P(·,y_τ) − w⁰_τ on ∂Ω, with w⁰_τ the a-harmonic function on Ω′
/// equal to P on ∂Ω′.
pub fn make_g1(setup: &SingularSetup<'_>, tau: f64) -> Result<SingularData> {
    let p = setup.parametrix(tau)?;
    let op = &setup.dom.omega_prime;
    let bdata: Vec<f64> = op.boundary_nodes.iter().map(|&i| p.at_node(i)).collect();
    let sweep = setup.sweep_system.solve(&bdata)?;
    let values = setup.restrict(|x| p.eval(&setup.locator, x), &sweep)?;
    Ok(SingularData {
        kind: SingularKind::G1,
        tau,
        y: p.kernel.y(),
        values: BoundaryFunction::new(values),
        sweep,
        resolved: setup.dom.resolves(tau),
    })
}

/// g²_{k,τ} = ∂_k H(·,y_τ) − v_{k,τ} (n = 3, a = I).
pub fn make_g2(setup: &SingularSetup<'_>, tau: f64, k: usize) -> Result<SingularData> {
    if setup.dom.dim != 3 {
        return Err(Error::Unsupported("derivative singular data is defined for n = 3".into()));
    }
    if setup.a.constant_value() != Some(identity3(3)) {
        return Err(Error::Unsupported("derivative singular data requires a = identity".into()));
    }
    if k >= 3 {
        return Err(Error::OutOfRange(format!("component {k} (expected 0, 1 or 2)")));
    }
    let kern = setup.kernel_at(tau)?;
    let op = &setup.dom.omega_prime;
    let bdata: Vec<f64> = op.boundary_nodes.iter().map(|&i| kern.grad_at(&op.nodes[i])[k]).collect();
    let sweep = setup.sweep_system.solve(&bdata)?;
    let values = setup.restrict(|x| kern.dk(x, k), &sweep)?;
    Ok(SingularData {
        kind: SingularKind::G2 { k },
        tau,
        y: kern.y(),
        values: BoundaryFunction::new(values),
        sweep,
        resolved: setup.dom.resolves(tau),
    })
}

/// The equation a singular solution solves on Ω.
#[derive(Clone)]
pub enum SingularEquation {
    /// −s∇·(a∇w) + B·∇w = 0 (adjoint: −s∇·(a∇w) − ∇·(Bw) = 0)
    Scaled { s: f64, drift: Option<Arc<VectorField>> },
    /// −Δw + q w = 0
    Potential(Vec<f64>),
}

#[derive(Clone, Debug, Serialize)]
pub struct DecompositionReport {
    pub tau: f64,
    pub lead_l2: f64,
    pub lead_h1: f64,
    /// ‖w_h − I_h(lead)‖_{H¹} (z for g¹, J for g²).
    pub remainder_h1: f64,
    pub data_norm: f64,
    pub resolved: bool,
}

/// Leading singular part H or ∂_k H of the data kind.
fn lead(kern: &SingularKernel, kind: SingularKind, x: &Point) -> f64 {
    match kind {
        SingularKind::G1 => kern.h_at(x),
        SingularKind::G2 { k } => kern.grad_at(x)[k],
    }
}

fn lead_grad(kern: &SingularKernel, kind: SingularKind, x: &Point) -> Point {
    match kind {
        SingularKind::G1 => kern.grad_at(x),
        SingularKind::G2 { k } => {
            let h = kern.hessian(x).unwrap_or([[0.0; 3]; 3]);
            [h[k][0], h[k][1], h[k][2]]
        }
    }
}

/// ‖lead‖_{L²(Ω)} and ‖lead‖_{H¹(Ω)} by adaptive quadrature.
pub fn lead_norms(asm: &Assembler<'_>, kern: &SingularKernel, kind: SingularKind) -> (f64, f64) {
    let y = kern.y();
    let l2 = integrate(asm.mesh, |x| lead(kern, kind, x).powi(2), Some(y), 4, 3);
    let g2 = integrate(
        asm.mesh,
        |x| {
            let g = lead_grad(kern, kind, x);
            g[0] * g[0] + g[1] * g[1] + g[2] * g[2]
        },
        Some(y),
        4,
        3,
    );
    (l2.sqrt(), (l2 + g2).sqrt())
}

/// Discrete H¹ norm sqrt(vᵀ(M + K)v).
pub fn discrete_h1(mass: &Csr, lap: &Csr, v: &[f64]) -> f64 {
    (mass.bilinear(v, v) + lap.bilinear(v, v)).max(0.0).sqrt()
}

/// Solves the singular problem on Ω with the given data and decomposes the
/// solution into the leading singular part plus a remainder.
pub fn singular_solve(
    asm: &Assembler<'_>,
    eq: &SingularEquation,
    data: &SingularData,
    adjoint: bool,
    space: Option<&FractionalSpace>,
) -> Result<(FieldSolution, DecompositionReport)> {
    let lp = match eq {
        SingularEquation::Scaled { s, drift } => {
            if !(*s > 0.0) {
                return Err(Error::OutOfRange(format!("scale s = {s} must be positive")));
            }
            let mut lp = LinearProblem::diffusion(*s).adjoint(adjoint);
            if let Some(b) = drift {
                lp = lp.with_drift(b.clone());
            }
            lp
        }
        SingularEquation::Potential(q) => {
            if q.iter().any(|&v| v < 0.0) {
                return Err(Error::OutOfRange("potential must be non-negative".into()));
            }
            LinearProblem::diffusion(1.0).with_potential(q.clone()).adjoint(adjoint)
        }
    };
    let sys = lp.system(asm)?;
    let sol = sys.solution(&data.values.values, lp.tag(), vec![("tau".into(), format!("{}", data.tau))])?;
    let report = decompose(asm, &asm.a, data, &sol.values, space)?;
    Ok((sol, report))
}

/// Decomposition report of a field w against the leading part of `data`.
pub fn decompose(
    asm: &Assembler<'_>,
    a: &CoefficientField,
    data: &SingularData,
    w: &[f64],
    space: Option<&FractionalSpace>,
) -> Result<DecompositionReport> {
    let kern = SingularKernel::new(a, data.y)?;
    let mesh = asm.mesh;
    let z: Vec<f64> = mesh.nodes.iter().zip(w).map(|(x, wi)| wi - lead(&kern, data.kind, x)).collect();
    let remainder_h1 = discrete_h1(&asm.mass(), &asm.laplacian(), &z);
    let (lead_l2, lead_h1) = lead_norms(asm, &kern, data.kind);
    let data_norm = space.map_or(f64::NAN, |s| s.norm_plus(&data.values.values));
    Ok(DecompositionReport { tau: data.tau, lead_l2, lead_h1, remainder_h1, data_norm, resolved: data.resolved })
}

/// A τ sweep of decomposition reports with fitted growth.
#[derive(Clone, Debug, Serialize)]
pub struct SweepSummary {
    pub rows: Vec<DecompositionReport>,
    /// log–log fit of the data norm against τ over resolved rows.
    pub slope: Option<f64>,
    pub intercept: Option<f64>,
    pub r2: Option<f64>,
    /// Slope of data norm² against |ln τ| (the planar growth law).
    pub log_growth_slope: Option<f64>,
    /// ‖remainder‖/‖lead‖ decreases as τ decreases over resolved rows.
    pub ratio_monotone: bool,
}

impl SweepSummary {
    pub fn new(mut rows: Vec<DecompositionReport>) -> Result<Self> {
        rows.sort_by(|a, b| b.tau.total_cmp(&a.tau));
        let used: Vec<&DecompositionReport> = rows.iter().filter(|r| r.resolved).collect();
        if used.len() < 4 {
            return Err(Error::OutOfRange(format!("slope fits need at least 4 resolved τ values, got {}", used.len())));
        }
        let t: Vec<f64> = used.iter().map(|r| r.tau).collect();
        let g: Vec<f64> = used.iter().map(|r| r.data_norm).collect();
        let fit = loglog_slope(&t, &g);
        let lg: Vec<(f64, f64)> = used.iter().map(|r| (r.tau.ln().abs(), r.data_norm.powi(2))).collect();
        let log_growth_slope = crate::dn::frechet::linear_fit(&lg).map(|f| f.0);
        let ratios: Vec<f64> = used.iter().map(|r| r.remainder_h1 / r.lead_h1).collect();
        let ratio_monotone = ratios.windows(2).all(|w| w[1] < w[0]);
        Ok(SweepSummary {
            slope: fit.map(|f| f.0),
            intercept: fit.map(|f| f.1),
            r2: fit.map(|f| f.2),
            log_growth_slope,
            ratio_monotone,
            rows,
        })
    }

    pub fn table(&self) -> Table {
        let mut t = Table::new(&["tau", "lead_l2", "lead_h1", "remainder_h1", "data_h_half", "resolved"]);
        for r in &self.rows {
            t.push(vec![
                num(r.tau),
                num(r.lead_l2),
                num(r.lead_h1),
                num(r.remainder_h1),
                num(r.data_norm),
                r.resolved.to_string(),
            ]);
        }
        t
    }
}
