use crate::error::{Error, Result};
use crate::fem::{Assembler, NonlinearTerms, Source};
use crate::geometry::BoundaryFunction;
use crate::linalg::{identity3, SparseLu};
use crate::pde::laws::{DriftLaw, QuasilinearLaw, SemilinearLaw};
use crate::pde::FieldSolution;

#[derive(Clone, Copy, Debug)]
pub struct NewtonOptions {
    /// Tolerance on the l2 norm of the free-node residual.
    pub tol: f64,
    pub max_iter: usize,
    /// Step halvings allowed in the line search.
    pub max_halvings: usize,
    /// Smallest continuation step in the boundary-data amplitude.
    pub min_step: f64,
}

impl Default for NewtonOptions {
    fn default() -> Self {
        NewtonOptions { tol: 1e-10, max_iter: 60, max_halvings: 40, min_step: 1.0 / 1024.0 }
    }
}

struct Outcome {
    u: Vec<f64>,
    history: Vec<f64>,
    iterations: usize,
    boundary_residual: Vec<f64>,
}

fn free_norm(r: &[f64], free: &[usize]) -> f64 {
    free.iter().map(|&i| r[i] * r[i]).sum::<f64>().sqrt()
}

/// Damped Newton from `u` (boundary values already set).
fn newton(
    asm: &Assembler<'_>,
    terms: &NonlinearTerms<'_>,
    mut u: Vec<f64>,
    opts: &NewtonOptions,
    check: &dyn Fn(&[f64]) -> Result<()>,
) -> Result<Outcome> {
    let free = asm.mesh.interior_nodes();
    let mut history = Vec::new();
    check(&u)?;
    let (mut r, _) = asm.nonlinear(&u, terms, false);
    let mut rn = free_norm(&r, &free);
    history.push(rn);
    for it in 0..opts.max_iter {
        if rn <= opts.tol {
            let boundary_residual = asm.mesh.boundary_nodes.iter().map(|&i| r[i]).collect();
            return Ok(Outcome { u, history, iterations: it, boundary_residual });
        }
        let (_, jac) = asm.nonlinear(&u, terms, true);
        let jac = jac.expect("jacobian requested");
        let lu = SparseLu::factor_sub(&jac, &free)?;
        let mut step: Vec<f64> = free.iter().map(|&i| -r[i]).collect();
        lu.solve_in_place(&mut step)?;
        let mut alpha = 1.0;
        let mut accepted = false;
        for _ in 0..=opts.max_halvings {
            let mut trial = u.clone();
            for (k, &i) in free.iter().enumerate() {
                trial[i] += alpha * step[k];
            }
            if check(&trial).is_ok() {
                let (rt, _) = asm.nonlinear(&trial, terms, false);
                let rtn = free_norm(&rt, &free);
                if rtn.is_finite() && (rtn < rn || rtn <= opts.tol) {
                    u = trial;
                    r = rt;
                    rn = rtn;
                    accepted = true;
                    break;
                }
            }
            alpha *= 0.5;
        }
        history.push(rn);
        if !accepted {
            // stagnation at the rounding floor still counts as converged
            if rn <= opts.tol * 1e3 && rn <= 1e-8 {
                let boundary_residual = asm.mesh.boundary_nodes.iter().map(|&i| r[i]).collect();
                return Ok(Outcome { u, history, iterations: it + 1, boundary_residual });
            }
            return Err(Error::NonConvergence { residual: rn, detail: "line search exhausted".into() });
        }
    }
    if rn <= opts.tol {
        let boundary_residual = asm.mesh.boundary_nodes.iter().map(|&i| r[i]).collect();
        return Ok(Outcome { u, history, iterations: opts.max_iter, boundary_residual });
    }
    Err(Error::NonConvergence { residual: rn, detail: "iteration limit reached".into() })
}

/// Newton with continuation in the amplitude of g - λ, λ = mean(g),
/// starting from the constant solution u ≡ λ.
fn continuation(
    asm: &Assembler<'_>,
    terms: &NonlinearTerms<'_>,
    g: &BoundaryFunction,
    opts: &NewtonOptions,
    check: &dyn Fn(&[f64]) -> Result<()>,
) -> Result<(Outcome, f64)> {
    let mesh = asm.mesh;
    if g.values.len() != mesh.n_boundary() {
        return Err(Error::Mismatch("boundary data length differs from the mesh boundary".into()));
    }
    let lambda = g.values.iter().sum::<f64>() / g.values.len() as f64;
    let set_boundary = |u: &mut Vec<f64>, theta: f64| {
        for (&i, &v) in mesh.boundary_nodes.iter().zip(&g.values) {
            u[i] = if theta == 1.0 { v } else { lambda + theta * (v - lambda) };
        }
    };
    // direct attempt first
    let mut u = vec![lambda; mesh.n_nodes()];
    set_boundary(&mut u, 1.0);
    let mut last_err = match newton(asm, terms, u, opts, check) {
        Ok(o) => return Ok((o, 1.0)),
        Err(e) => e,
    };
    let mut current = vec![lambda; mesh.n_nodes()];
    let mut theta: f64 = 0.0;
    let mut step: f64 = 0.25;
    let mut total_iters = 0;
    let mut history = Vec::new();
    while theta < 1.0 {
        let next = (theta + step).min(1.0);
        let mut guess = current.clone();
        set_boundary(&mut guess, next);
        match newton(asm, terms, guess, opts, check) {
            Ok(o) => {
                total_iters += o.iterations;
                history.extend(o.history.iter().copied());
                theta = next;
                if theta >= 1.0 {
                    return Ok((
                        Outcome { u: o.u, history, iterations: total_iters, boundary_residual: o.boundary_residual },
                        1.0,
                    ));
                }
                current = o.u;
                step = (step * 2.0).min(1.0);
            }
            Err(e) => {
                last_err = e;
                step *= 0.5;
                if step < opts.min_step {
                    return Err(match last_err {
                        Error::NonConvergence { residual, detail } => Error::NonConvergence {
                            residual,
                            detail: format!("{detail}; continuation stalled at amplitude {theta:.4}"),
                        },
                        e => e,
                    });
                }
            }
        }
    }
    Err(last_err)
}

/// −∇·(a γ(u)∇u) + D(x,u)·∇u = f, u = g on the boundary.
pub fn solve_quasilinear(
    asm: &Assembler<'_>,
    gamma: &QuasilinearLaw,
    drift: &DriftLaw,
    g: &BoundaryFunction,
    source: Option<&Source>,
    opts: &NewtonOptions,
) -> Result<FieldSolution> {
    let terms = NonlinearTerms {
        scale: 1.0,
        gamma: Some(gamma),
        drift: (!drift.is_zero()).then_some(drift),
        reaction: None,
        source,
    };
    let mesh = asm.mesh;
    let dim = mesh.dim;
    let check = |u: &[f64]| -> Result<()> {
        for c in 0..mesh.cells.len() {
            for &v in mesh.cell(c) {
                let gv = gamma.gamma(u[v]);
                if !(gv > 0.0) {
                    return Err(Error::LawViolation(format!(
                        "γ({}) = {gv} is not positive for law {}",
                        u[v], gamma.name
                    )));
                }
            }
        }
        Ok(())
    };
    if !drift.is_zero() {
        // Péclet check at the constant state and the extreme data values
        let (lo, hi) = g.values.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
        for t in [lo, hi] {
            let gam = gamma.gamma(t);
            if gam > 0.0 {
                let b = |x: &crate::linalg::Point| drift.eval(x, t);
                let pe = asm.max_peclet(gam, &b);
                if pe > 2.0 {
                    return Err(Error::Peclet { peclet: pe });
                }
            }
        }
    }
    let _ = dim;
    let (o, _) = continuation(asm, &terms, g, opts, &check)?;
    Ok(FieldSolution {
        residual_norm: *o.history.last().unwrap_or(&0.0),
        values: o.u,
        dirichlet: g.values.clone(),
        boundary_residual: o.boundary_residual,
        newton_iterations: o.iterations,
        residual_history: o.history,
        tag: "quasilinear".into(),
        params: vec![("gamma".into(), gamma.name.clone()), ("drift".into(), drift.name.clone())],
    })
}

/// −Δu + G(u) = f, u = g on the boundary (a must be the identity).
pub fn solve_semilinear(
    asm: &Assembler<'_>,
    law: &SemilinearLaw,
    g: &BoundaryFunction,
    source: Option<&Source>,
    opts: &NewtonOptions,
) -> Result<FieldSolution> {
    match asm.a.constant_value() {
        Some(m) if m == identity3(asm.dim()) => {}
        _ => return Err(Error::Unsupported("the semilinear solver requires a = identity".into())),
    }
    let terms = NonlinearTerms { scale: 1.0, gamma: None, drift: None, reaction: Some(law), source };
    let check = |u: &[f64]| -> Result<()> {
        for &v in u {
            if law.dg(v) < -1e-14 {
                return Err(Error::LawViolation(format!("G′({v}) < 0 for law {}", law.name)));
            }
        }
        Ok(())
    };
    let (o, _) = continuation(asm, &terms, g, opts, &check)?;
    Ok(FieldSolution {
        residual_norm: *o.history.last().unwrap_or(&0.0),
        values: o.u,
        dirichlet: g.values.clone(),
        boundary_residual: o.boundary_residual,
        newton_iterations: o.iterations,
        residual_history: o.history,
        tag: "semilinear".into(),
        params: vec![("G".into(), law.name.clone())],
    })
}
