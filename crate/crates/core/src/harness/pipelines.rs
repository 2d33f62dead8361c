//! One function per pipeline. Each computes on the current worker pool and
//! hands its artifacts to the sink; every pipeline ends with `summary.json`.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dn::{frechet_ratio, linearize, sample_operator, Background};
use crate::error::{Error, Result};
use crate::fem::Assembler;
use crate::geometry::{build_domain, BoundaryFunction, DomainTriple, Mesh};
use crate::harness::config::{ExperimentConfig, Pipeline};
use crate::harness::{catalog, Sink, SUMMARY};
use crate::pde::{Condition, NewtonOptions, ProblemSpec};
use crate::recon::{
    reconstruct_gamma, reconstruct_gamma_difference, reconstruct_gprime, reconstruct_semilinear, stability_sweep,
    GammaContext, GprimeContext, MeasurementContext, StabilityMode,
};
use crate::singular::{make_g1, make_g2, singular_solve, SingularEquation, SingularKind, SingularSetup, SweepSummary};
use crate::table::{num, Table};

/// Machine-readable result of one pipeline run, read back by the report.
#[derive(Clone, Debug, Default, Serialize, Deserialize, PartialEq)]
pub struct Summary {
    pub pipeline: String,
    pub config_hash: String,
    /// Finite scalar results only.
    pub metrics: BTreeMap<String, f64>,
    pub flags: BTreeMap<String, bool>,
    pub notes: Vec<String>,
}

impl Summary {
    fn new(c: &ExperimentConfig) -> Self {
        Summary { pipeline: c.pipeline.name().into(), config_hash: c.hash(), ..Default::default() }
    }

    fn metric(&mut self, k: &str, v: f64) {
        if v.is_finite() {
            self.metrics.insert(k.into(), v);
        }
    }

    fn flag(&mut self, k: &str, v: bool) {
        self.flags.insert(k.into(), v);
    }
}

fn newton(c: &ExperimentConfig) -> NewtonOptions {
    NewtonOptions { tol: c.newton_tol, max_iter: c.newton_max_iter, ..NewtonOptions::default() }
}

fn domain(c: &ExperimentConfig, sink: &mut Sink) -> Result<DomainTriple> {
    sink.step("mesh", |_| build_domain(&c.domain_spec()?))
}

fn background(p: &ProblemSpec, dom: &DomainTriple, lambda: f64) -> Result<Background> {
    Ok(match p.condition {
        Condition::Quasilinear => Background::Constant(lambda),
        Condition::Semilinear => Background::Cutoff { lambda, chi: dom.cutoff()? },
    })
}

/// Seeded smooth boundary function: random linear plus quadratic terms.
fn random_data(mesh: &Mesh, seed: u64) -> BoundaryFunction {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let d = mesh.dim;
    let lin: Vec<f64> = (0..d).map(|_| rng.random_range(-1.0..1.0)).collect();
    let quad: Vec<f64> = (0..d * d).map(|_| rng.random_range(-0.5..0.5)).collect();
    BoundaryFunction::from_fn(mesh, |x| {
        let mut v = 0.0;
        for i in 0..d {
            v += lin[i] * x[i];
            for j in 0..d {
                v += quad[i * d + j] * x[i] * x[j];
            }
        }
        v
    })
}

fn data(c: &ExperimentConfig, mesh: &Mesh) -> Result<BoundaryFunction> {
    if c.data == "random" {
        Ok(random_data(mesh, c.seed))
    } else {
        catalog::boundary_data(&c.data, mesh)
    }
}

pub fn run(c: &ExperimentConfig, sink: &mut Sink) -> Result<()> {
    let summary = match c.pipeline {
        Pipeline::Solve => solve(c, sink)?,
        Pipeline::Dnmap => dnmap(c, sink)?,
        Pipeline::FrechetCheck => frechet(c, sink)?,
        Pipeline::SingularCheck => singular(c, sink)?,
        Pipeline::ReconstructGamma => gamma(c, sink)?,
        Pipeline::ReconstructSemilinear => semilinear(c, sink)?,
        Pipeline::StabilitySweep => stability(c, sink)?,
    };
    sink.json(SUMMARY, &summary)
}

fn solve(c: &ExperimentConfig, sink: &mut Sink) -> Result<Summary> {
    let dom = domain(c, sink)?;
    let p = c.problem()?;
    let asm = Assembler::new(&dom.omega, &p.a);
    let g = data(c, &dom.omega)?.axpy(1.0, &BoundaryFunction::constant(&dom.omega, c.background));
    let sol = sink.step("solve", |_| p.solve(&asm, &g, &newton(c)))?;
    let mut t = Table::new(&["node", "x", "y", "z", "u"]);
    for (i, (x, u)) in dom.omega.nodes.iter().zip(&sol.values).enumerate() {
        t.push(vec![i.to_string(), num(x[0]), num(x[1]), num(x[2]), num(*u)]);
    }
    sink.table("solution.csv", &t)?;
    let mut s = Summary::new(c);
    s.metric("residual_norm", sol.residual_norm);
    s.metric("newton_iterations", sol.newton_iterations as f64);
    s.metric("nodes", dom.omega.n_nodes() as f64);
    s.metric("h_max", dom.omega.h_max());
    s.metric("newton_tol", c.newton_tol);
    s.flag("dirichlet_exact", sol.matches_dirichlet(&dom.omega));
    Ok(s)
}

fn dnmap(c: &ExperimentConfig, sink: &mut Sink) -> Result<Summary> {
    let dom = domain(c, sink)?;
    let p = c.problem()?;
    let p2 = c.second_problem()?;
    let ctx = sink.step("dictionary", |_| MeasurementContext::new(&dom, &p.a, c.dictionary_kind()?, newton(c)))?;
    let grid = c.lambda_grid();
    let sample = |q: &ProblemSpec, l: f64| -> Result<_> {
        let op = linearize(&ctx.asm, q, &ctx.background(q, l), &dom.s, false, &ctx.opts)?;
        sample_operator(&op, &ctx.dictionary, &ctx.space)
    };
    let samples = sink.step("operators", |_| {
        grid.par_iter()
            .map(|&l| {
                let s1 = sample(&p, l)?;
                let m = match &p2 {
                    Some(q) => Some(crate::dn::measurement_functional(&s1, &sample(q, l)?)?),
                    None => None,
                };
                Ok((s1, m))
            })
            .collect::<Result<Vec<_>>>()
    })?;
    let mut norms = Table::new(&["lambda", "operator_norm", "measurement"]);
    let mut max_norm: f64 = 0.0;
    let mut max_meas: f64 = 0.0;
    for (i, (s1, m)) in samples.iter().enumerate() {
        let (t, side) = s1.table();
        sink.table(&format!("operator_{i:03}.csv"), &t)?;
        sink.write(&format!("operator_{i:03}.json"), side.as_bytes())?;
        let n = s1.operator_norm()?;
        max_norm = max_norm.max(n);
        max_meas = max_meas.max(m.unwrap_or(0.0));
        norms.push(vec![num(s1.lambda), num(n), m.map_or(String::new(), num)]);
    }
    sink.table("operator_norms.csv", &norms)?;
    let mut s = Summary::new(c);
    s.metric("max_operator_norm", max_norm);
    s.metric("dictionary_size", ctx.dictionary.len() as f64);
    if p2.is_some() {
        s.metric("measurement_sup", max_meas);
    }
    Ok(s)
}

fn frechet(c: &ExperimentConfig, sink: &mut Sink) -> Result<Summary> {
    let dom = domain(c, sink)?;
    let p = c.problem()?;
    let asm = Assembler::new(&dom.omega, &p.a);
    let h = data(c, &dom.omega)?;
    let bg = background(&p, &dom, c.background)?;
    let r = sink.step("quotients", |_| frechet_ratio(&asm, &p, &bg, &h, &c.eps, &dom.s, &newton(c)))?;
    let mut t = Table::new(&["eps", "rel_gap", "floor"]);
    for ((e, g), f) in r.eps.iter().zip(&r.rel_gap).zip(&r.floor) {
        t.push(vec![num(*e), num(*g), num(*f)]);
    }
    sink.table("frechet.csv", &t)?;
    let mut s = Summary::new(c);
    if let Some(o) = r.order {
        s.metric("order", o);
    }
    let above: Vec<f64> = r.rel_gap.iter().zip(&r.floor).filter(|(g, f)| **g > 10.0 * **f).map(|(g, _)| *g).collect();
    s.metric("final_gap", above.last().or(r.rel_gap.last()).copied().unwrap_or(f64::NAN));
    s.metric("linearized_norm", r.linearized_norm);
    s.flag("at_floor", r.at_floor);
    s.flag("partial", r.partial);
    Ok(s)
}

fn singular(c: &ExperimentConfig, sink: &mut Sink) -> Result<Summary> {
    let dom = domain(c, sink)?;
    let kind = c.singular_kind()?;
    let a = catalog::coefficient(&c.coefficient, dom.dim)?;
    let setup = sink.step("setup", |_| SingularSetup::new(&dom, &a))?;
    let asm = Assembler::new(&dom.omega, &a);
    let space = sink.step("boundary-space", |_| crate::dn::FractionalSpace::new(&dom.omega))?;
    let eq = SingularEquation::Scaled { s: 1.0, drift: None };
    let rows = sink.step("sweep", |_| {
        c.taus
            .par_iter()
            .map(|&t| {
                let d = match kind {
                    SingularKind::G1 => make_g1(&setup, t)?,
                    SingularKind::G2 { k } => make_g2(&setup, t, k)?,
                };
                Ok(singular_solve(&asm, &eq, &d, false, Some(&space))?.1)
            })
            .collect::<Result<Vec<_>>>()
    })?;
    let mut s = Summary::new(c);
    let sweep = SweepSummary::new(rows.clone());
    let table = match &sweep {
        Ok(sw) => sw.table(),
        Err(_) => SweepSummary { rows, slope: None, intercept: None, r2: None, log_growth_slope: None, ratio_monotone: false }
            .table(),
    };
    sink.table("sweep.csv", &table)?;
    let sweep = sweep?;
    if let Some(v) = sweep.slope {
        s.metric("slope", v);
    }
    if let Some(v) = sweep.log_growth_slope {
        s.metric("log_growth_slope", v);
    }
    let n = dom.dim as f64;
    match (kind, dom.dim) {
        (SingularKind::G1, 3) => s.metric("target_slope", 1.0 - n / 2.0),
        (SingularKind::G2 { .. }, _) => s.metric("target_slope", -n / 2.0),
        _ => s.notes.push("planar growth: compare log_growth_slope (norm² against |ln τ|)".into()),
    }
    s.flag("ratio_monotone", sweep.ratio_monotone);
    s.flag("all_resolved", sweep.rows.iter().all(|r| r.resolved));
    s.metric("dimension", n);
    Ok(s)
}

fn gamma(c: &ExperimentConfig, sink: &mut Sink) -> Result<Summary> {
    if c.condition != Condition::Quasilinear {
        return Err(Error::Config("reconstruct-gamma needs condition = quasilinear".into()));
    }
    let dom = domain(c, sink)?;
    let p = c.problem()?;
    let ctx = sink.step("singular-data", |_| GammaContext::new(&dom, &p.a, &c.taus, newton(c)))?;
    let grid = c.lambda_grid();
    let curve = sink.step("reconstruct", |_| reconstruct_gamma(&ctx, &p, &grid))?;
    let exact = |l: f64| p.gamma.gamma(l);
    sink.table("gamma.csv", &curve.table(&[("exact", &exact)]))?;
    let mut s = Summary::new(c);
    s.metric("sup_error", curve.sup_error(exact));
    s.metric("relative_sup_error", curve.relative_sup_error(exact));
    s.flag("flagged", curve.diagnostics.iter().any(|d| d.flagged));
    s.flag("resolution_flag", curve.diagnostics.iter().any(|d| d.resolution_flag));
    s.flag("out_of_theory", curve.diagnostics.iter().any(|d| d.out_of_theory));
    if let Some(p2) = c.second_problem()? {
        let diff = sink.step("difference", |_| reconstruct_gamma_difference(&ctx, &p, &p2, &grid))?;
        let ex = |l: f64| p.gamma.gamma(l) - p2.gamma.gamma(l);
        sink.table("gamma_difference.csv", &diff.table(&[("exact", &ex)]))?;
        s.metric("difference_sup_error", diff.sup_error(ex));
        if let Some(a) = diff.argmax {
            s.metric("difference_argmax", a);
        }
    }
    Ok(s)
}

fn semilinear(c: &ExperimentConfig, sink: &mut Sink) -> Result<Summary> {
    if c.condition != Condition::Semilinear {
        return Err(Error::Config("reconstruct-semilinear needs condition = semilinear".into()));
    }
    let dom = domain(c, sink)?;
    let p = c.problem()?;
    let ctx = sink.step("singular-data", |_| GprimeContext::new(&dom, &c.taus, newton(c)))?;
    let grid = c.lambda_grid();
    let gp = sink.step("reconstruct", |_| reconstruct_gprime(&ctx, &p, &grid))?;
    let dg = |l: f64| p.g.dg(l);
    sink.table("gprime.csv", &gp.table(&[("exact", &dg)]))?;
    let g = reconstruct_semilinear(&gp, p.g.g(0.0))?;
    let gx = |l: f64| p.g.g(l);
    sink.table("g.csv", &g.table(&[("exact", &gx)]))?;
    let mut s = Summary::new(c);
    s.metric("gprime_sup_error", gp.sup_error(dg));
    s.metric("gprime_relative_sup_error", gp.relative_sup_error(dg));
    s.metric("g_sup_error", g.sup_error(gx));
    s.metric("g_relative_sup_error", g.relative_sup_error(gx));
    s.flag("flagged", gp.diagnostics.iter().any(|d| d.flagged));
    s.flag("resolution_flag", gp.diagnostics.iter().any(|d| d.resolution_flag));
    Ok(s)
}

fn stability(c: &ExperimentConfig, sink: &mut Sink) -> Result<Summary> {
    let dom = domain(c, sink)?;
    let base = c.problem()?;
    let ctx = sink.step("dictionary", |_| MeasurementContext::new(&dom, &base.a, c.dictionary_kind()?, newton(c)))?;
    let family = |s: f64| -> ProblemSpec {
        let mut q = base.clone();
        match q.condition {
            Condition::Quasilinear => q.gamma = base.gamma.perturbed_bump(s),
            Condition::Semilinear => q.g = base.g.plus_arctan(s),
        }
        q
    };
    let mode = c.stability_mode();
    let grid = c.lambda_grid();
    let rep = sink.step("sweep", |_| stability_sweep(&ctx, &base, &family, &c.s_list, &grid, c.lambda_r, mode))?;
    sink.table("stability.csv", &rep.table())?;
    let mut s = Summary::new(c);
    s.metric("constant", rep.constant);
    s.metric("spread", rep.spread);
    s.metric("consistency_constant", rep.consistency_constant);
    s.metric("dictionary_size", rep.dictionary_size as f64);
    s.flag("holds", rep.holds());
    s.flag("hoelder", mode == StabilityMode::Hoelder);
    Ok(s)
}
