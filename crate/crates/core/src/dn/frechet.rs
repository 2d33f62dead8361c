use serde::Serialize;

use crate::dn::{linearize, neumann_trace, Background, FluxTrace};
use crate::error::Result;
use crate::fem::Assembler;
use crate::geometry::{BoundaryFunction, BoundaryPatch};
use crate::pde::{NewtonOptions, ProblemSpec};

/// Difference quotients of the DN map against its linearization.
#[derive(Clone, Debug, Serialize)]
pub struct FrechetReport {
    pub eps: Vec<f64>,
    /// ‖quotient − linearized‖ / ‖linearized‖ per ε (l2 of dual vectors).
    pub rel_gap: Vec<f64>,
    /// Relative solver-noise floor of the quotient per ε.
    pub floor: Vec<f64>,
    pub linearized_norm: f64,
    /// Log–log slope over the ε values above the floor (needs ≥ 3 points).
    pub order: Option<f64>,
    /// Every gap sits at the solver floor (exactly linear map).
    pub at_floor: bool,
    /// Some forward solve failed; entries after the failure are missing.
    pub partial: bool,
    #[serde(skip)]
    pub quotients: Vec<FluxTrace>,
    #[serde(skip)]
    pub linearized: Option<FluxTrace>,
}

/// Least-squares slope of log y against log x.
pub fn loglog_slope(x: &[f64], y: &[f64]) -> Option<(f64, f64, f64)> {
    let pts: Vec<(f64, f64)> = x
        .iter()
        .zip(y)
        .filter(|(a, b)| **a > 0.0 && **b > 0.0)
        .map(|(a, b)| (a.ln(), b.ln()))
        .collect();
    linear_fit(&pts)
}

/// Ordinary least-squares line through points: (slope, intercept, R²).
pub fn linear_fit(pts: &[(f64, f64)]) -> Option<(f64, f64, f64)> {
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let syy: f64 = pts.iter().map(|p| (p.1 - my).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let slope = sxy / sxx;
    let r2 = if syy == 0.0 { 1.0 } else { (sxy * sxy) / (sxx * syy) };
    Some((slope, my - slope * mx, r2))
}

/// Compares (N(b + εh) − N(b))/ε with the linearized flux for each ε.
pub fn frechet_ratio(
    asm: &Assembler<'_>,
    problem: &ProblemSpec,
    background: &Background,
    h: &BoundaryFunction,
    eps: &[f64],
    patch: &BoundaryPatch,
    opts: &NewtonOptions,
) -> Result<FrechetReport> {
    let nb = asm.mesh.n_boundary();
    let base_data = background.data(nb);
    let base_sol = problem.solve(asm, &base_data, opts)?;
    let base = neumann_trace(&base_sol, asm.mesh, patch)?;
    let round = 1e-14 * base.l2();
    let lin = linearize(asm, problem, background, patch, false, opts)?.apply(&h.values)?;
    let ln = lin.l2();
    let scale = ln.max(1e-300);
    let mut report = FrechetReport {
        eps: Vec::new(),
        rel_gap: Vec::new(),
        floor: Vec::new(),
        linearized_norm: ln,
        order: None,
        at_floor: false,
        partial: false,
        quotients: Vec::new(),
        linearized: Some(lin.clone()),
    };
    for &e in eps {
        let data = base_data.axpy(e, h);
        match problem.solve(asm, &data, opts).and_then(|sol| {
            let f = neumann_trace(&sol, asm.mesh, patch)?;
            Ok((f, sol.residual_norm))
        }) {
            Ok((f, res)) => {
                let q = f.sub(&base).scaled(1.0 / e);
                let gap = q.sub(&lin).l2();
                report.eps.push(e);
                report.rel_gap.push(gap / scale);
                // residuals actually reached by the two solves plus rounding
                // in the difference, divided by ε
                report.floor.push((base_sol.residual_norm + res + round) / e / scale);
                report.quotients.push(q);
            }
            Err(_) => {
                report.partial = true;
                break;
            }
        }
    }
    let above: Vec<(f64, f64)> = report
        .eps
        .iter()
        .zip(&report.rel_gap)
        .zip(&report.floor)
        .filter(|((_, g), f)| **g > 10.0 * **f)
        .map(|((e, g), _)| (*e, *g))
        .collect();
    report.at_floor = above.is_empty() || ln == 0.0;
    if above.len() >= 3 {
        let (x, y): (Vec<f64>, Vec<f64>) = above.into_iter().unzip();
        report.order = loglog_slope(&x, &y).map(|f| f.0);
    }
    Ok(report)
}
