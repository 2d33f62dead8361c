//! End-to-end acceptance checks. Each test prints a single
//! `criterion N: PASS|FAIL ...` line before asserting.

use std::sync::Arc;

use dnlab::dn::loglog_slope;
use dnlab::fem::Assembler;
use dnlab::geometry::{build_domain, BoundaryFunction, DomainSpec, Mesh, Shape};
use dnlab::linalg::Point;
use dnlab::pde::{
    solve_linear, solve_quasilinear, solve_schrodinger, solve_semilinear, CoefficientField, DriftLaw, LinearProblem,
    NewtonOptions, QuasilinearLaw, SemilinearLaw,
};

fn report(n: usize, pass: bool, detail: String) {
    // written to the raw handle so the line shows even when output is captured
    let line = format!("criterion {n}: {} {detail}\n", if pass { "PASS" } else { "FAIL" });
    std::io::Write::write_all(&mut std::io::stderr().lock(), line.as_bytes()).ok();
}

// ---------------------------------------------------------------- criterion 1

const SLOPE_TARGET: f64 = 2.0;
const SLOPE_TOL: f64 = 0.2;

fn exact(x: &Point) -> f64 {
    x[0].sin() * x[1].cos()
}

fn grad_exact(x: &Point) -> Point {
    [x[0].cos() * x[1].cos(), -x[0].sin() * x[1].sin(), 0.0]
}

fn l2_error(mesh: &Mesh, u: &[f64]) -> f64 {
    let m = mesh.lumped_mass();
    mesh.nodes.iter().zip(u).zip(&m).map(|((x, v), w)| w * (v - exact(x)).powi(2)).sum::<f64>().sqrt()
}

fn manufactured_errors(solver: &str) -> Vec<f64> {
    let opts = NewtonOptions::default();
    [0.1, 0.05, 0.025]
        .iter()
        .map(|&h| {
            let mesh = Shape::Disk.mesh(h).unwrap();
            let asm = Assembler::new(&mesh, &CoefficientField::identity(2));
            let g = BoundaryFunction::from_fn(&mesh, exact);
            let u = match solver {
                "quasilinear" => {
                    // −∇·((1+u²)∇u) = 2u(1+u²) − 2u|∇u|²
                    let f = |x: &Point| {
                        let u = exact(x);
                        let gu = grad_exact(x);
                        2.0 * u * (1.0 + u * u) - 2.0 * u * (gu[0] * gu[0] + gu[1] * gu[1])
                    };
                    solve_quasilinear(&asm, &QuasilinearLaw::one_plus_square(), &DriftLaw::zero(), &g, Some(&f), &opts)
                        .unwrap()
                        .values
                }
                "semilinear" => {
                    let f = |x: &Point| 2.0 * exact(x) + exact(x).powi(3) / 3.0;
                    solve_semilinear(&asm, &SemilinearLaw::cubic(), &g, Some(&f), &opts).unwrap().values
                }
                "linear" => {
                    let b = [1.0, 0.5, 0.0];
                    let f = move |x: &Point| {
                        let gu = grad_exact(x);
                        2.0 * exact(x) + b[0] * gu[0] + b[1] * gu[1]
                    };
                    let p = LinearProblem::diffusion(1.0)
                        .with_drift(Arc::new(move |_: &Point| b))
                        .with_source(Arc::new(f));
                    solve_linear(&asm, &p, &g).unwrap().values
                }
                "schrodinger" => {
                    let q: Vec<f64> = mesh.nodes.iter().map(|x| 1.0 + x[0] * x[0]).collect();
                    let f = |x: &Point| (3.0 + x[0] * x[0]) * exact(x);
                    solve_schrodinger(&asm, &q, &g, Some(Arc::new(f))).unwrap().values
                }
                _ => unreachable!(),
            };
            l2_error(&mesh, &u)
        })
        .collect()
}

#[test]
fn criterion_01_manufactured_convergence() {
    let hs = [0.1, 0.05, 0.025];
    let mut pass = true;
    let mut detail = String::new();
    for solver in ["quasilinear", "semilinear", "linear", "schrodinger"] {
        let e = manufactured_errors(solver);
        let (slope, _, _) = loglog_slope(&hs, &e).unwrap();
        pass &= (slope - SLOPE_TARGET).abs() <= SLOPE_TOL;
        detail.push_str(&format!("{solver}={slope:.3} "));
    }
    report(1, pass, format!("L2 slopes {detail}(target {SLOPE_TARGET} ± {SLOPE_TOL})"));
    assert!(pass);
}

// ---------------------------------------------------------------- criterion 2

const FRECHET_MIN_ORDER: f64 = 0.8;
const FRECHET_FINAL_GAP: f64 = 1e-3;

fn frechet_line(name: &str, r: &dnlab::dn::FrechetReport) -> (bool, String) {
    // last gap that is still above the solver floor, or the last gap when
    // the map is exactly linear and everything sits at the floor
    let last = r
        .rel_gap
        .iter()
        .zip(&r.floor)
        .filter(|(g, f)| **g > 10.0 * **f)
        .map(|(g, _)| *g)
        .last()
        .unwrap_or(*r.rel_gap.last().unwrap());
    let order_ok = r.at_floor || r.order.is_some_and(|o| o >= FRECHET_MIN_ORDER);
    let ok = !r.partial && order_ok && last <= FRECHET_FINAL_GAP && r.eps.len() == 4;
    (ok, format!("{name}: order={:?} at_floor={} final_gap={last:.2e}", r.order.map(|o| (o * 1000.0).round() / 1000.0), r.at_floor))
}

#[test]
fn criterion_02_frechet_quotient() {
    use dnlab::dn::{frechet_ratio, Background};
    use dnlab::pde::ProblemSpec;
    let eps = [1e-1, 1e-2, 1e-3, 1e-4];
    let opts = NewtonOptions::default();

    let disk = build_domain(&DomainSpec::new(Shape::Disk, 0.05)).unwrap();
    let asm = Assembler::new(&disk.omega, &CoefficientField::identity(2));
    let h = BoundaryFunction::from_fn(&disk.omega, |x| x[0] + 0.5 * x[0] * x[1]);
    let p = ProblemSpec::quasilinear(CoefficientField::identity(2), QuasilinearLaw::affine(1.0, 1.0), DriftLaw::zero());
    let rq = frechet_ratio(&asm, &p, &Background::Constant(0.5), &h, &eps, &disk.s, &opts).unwrap();
    let (ok_q, line_q) = frechet_line("gamma=1+u", &rq);

    let ball = build_domain(&DomainSpec::new(Shape::Ball, 0.15)).unwrap();
    let asm3 = Assembler::new(&ball.omega, &CoefficientField::identity(3));
    let h3 = BoundaryFunction::from_fn(&ball.omega, |x| x[0] + 0.5 * x[1] * x[2]);
    let bg = Background::Cutoff { lambda: 0.5, chi: ball.cutoff().unwrap() };
    let mut results = vec![(ok_q, line_q)];
    for (name, law) in [("G=u", SemilinearLaw::linear(1.0)), ("G=u+u^3/3", SemilinearLaw::linear_plus_cubic())] {
        let r = frechet_ratio(&asm3, &ProblemSpec::semilinear(3, law), &bg, &h3, &eps, &ball.s, &opts).unwrap();
        results.push(frechet_line(name, &r));
    }
    // the linear law must sit at the solver floor, the nonlinear one above it
    let pass = results.iter().all(|r| r.0);
    let detail: Vec<String> = results.into_iter().map(|r| r.1).collect();
    report(2, pass, detail.join("; "));
    assert!(pass);
}

// ---------------------------------------------------------------- criterion 3

const FLUX_TOL: f64 = 1e-2;
/// Parametrix residual may exceed the constant-coefficient discretization
/// residual on the same mesh by at most this factor.
const PARAMETRIX_FACTOR: f64 = 2.0;

#[test]
fn criterion_03_fundamental_solution() {
    use dnlab::singular::{flux_through_sphere, weak_residual_density, SingularKernel, SingularSetup};
    let mut pass = true;
    let mut detail = Vec::new();

    let a2 = [[2.0, 0.3, 0.0], [0.3, 1.0, 0.0], [0.0, 0.0, 1.0]];
    let a3 = [[2.0, 0.3, 0.1], [0.3, 1.0, -0.2], [0.1, -0.2, 1.5]];
    for (dim, a) in [(2, a2), (3, a3)] {
        let field = CoefficientField::constant(a, dim);
        let k = SingularKernel::new(&field, [0.3, -0.2, 0.1]).unwrap();
        let worst = [0.05, 0.3, 1.0]
            .iter()
            .map(|&r| (flux_through_sphere(&k, &a, r, 400) + 1.0).abs())
            .fold(0.0, f64::max);
        pass &= worst <= FLUX_TOL;
        detail.push(format!("n={dim} flux dev={worst:.1e}"));
    }

    for (shape, h) in [(Shape::Disk, 0.05), (Shape::Ball, 0.15)] {
        let dom = build_domain(&DomainSpec::new(shape, h)).unwrap();
        let dim = dom.dim;
        let tau = 0.2;
        let exclude = 0.25;
        let var = CoefficientField::scalar(dim, "1+0.2x1", |x| 1.0 + 0.2 * x[0]);
        let setup = SingularSetup::new(&dom, &var).unwrap();
        let p = setup.parametrix(tau).unwrap();
        let y = p.kernel.y();
        let mesh = &dom.omega_prime;
        let pv: Vec<f64> = (0..mesh.n_nodes()).map(|i| p.at_node(i)).collect();
        let hv: Vec<f64> = mesh.nodes.iter().map(|x| p.kernel.h_at(x)).collect();
        let res_p = weak_residual_density(&setup.asm_prime, &pv, &y, exclude);
        let res_h = weak_residual_density(&setup.asm_prime, &hv, &y, exclude);

        let id = CoefficientField::identity(dim);
        let asm_id = Assembler::new(mesh, &id);
        let k0 = SingularKernel::new(&id, y).unwrap();
        let h0: Vec<f64> = mesh.nodes.iter().map(|x| k0.h_at(x)).collect();
        let floor = weak_residual_density(&asm_id, &h0, &y, exclude);
        let ok = res_p <= PARAMETRIX_FACTOR * floor && res_p < res_h;
        pass &= ok;
        detail.push(format!("n={dim} residual P={res_p:.2e} H-only={res_h:.2e} const-a floor={floor:.2e}"));
    }
    report(3, pass, detail.join("; "));
    assert!(pass);
}

// ------------------------------------------------------------ criteria 4, 5

const TAUS: [f64; 4] = [0.2, 0.1, 0.05, 0.025];
const G1_SLOPE_3D: f64 = -0.5;
const G2_SLOPE_3D: f64 = -1.5;
const GROWTH_SLOPE_TOL: f64 = 0.15;
/// Minimum R² of the planar fit ‖g¹‖² = a + b|ln τ|.
const LOG_GROWTH_R2: f64 = 0.95;

struct Sweeps {
    g1_3d: dnlab::singular::SweepSummary,
    g2_3d: dnlab::singular::SweepSummary,
    g1_2d: dnlab::singular::SweepSummary,
}

fn sweep(
    dom: &dnlab::geometry::DomainTriple,
    make: impl Fn(&dnlab::singular::SingularSetup<'_>, f64) -> dnlab::singular::SingularData,
) -> dnlab::singular::SweepSummary {
    use dnlab::dn::FractionalSpace;
    use dnlab::singular::{singular_solve, SingularEquation, SingularSetup, SweepSummary};
    let a = CoefficientField::identity(dom.dim);
    let setup = SingularSetup::new(dom, &a).unwrap();
    let asm = Assembler::new(&dom.omega, &a);
    let space = FractionalSpace::new(&dom.omega).unwrap();
    let eq = SingularEquation::Scaled { s: 1.0, drift: None };
    let rows = TAUS
        .iter()
        .map(|&t| singular_solve(&asm, &eq, &make(&setup, t), false, Some(&space)).unwrap().1)
        .collect();
    SweepSummary::new(rows).unwrap()
}

fn sweeps() -> &'static Sweeps {
    use dnlab::singular::{make_g1, make_g2};
    static CELL: std::sync::OnceLock<Sweeps> = std::sync::OnceLock::new();
    CELL.get_or_init(|| {
        let ball = build_domain(&DomainSpec::new(Shape::Ball, 0.07).with_grading(0.92)).unwrap();
        let disk = build_domain(&DomainSpec::new(Shape::Disk, 0.025).with_grading(0.8)).unwrap();
        Sweeps {
            g1_3d: sweep(&ball, |s, t| make_g1(s, t).unwrap()),
            // normal component at x₀ = (1, 0, 0)
            g2_3d: sweep(&ball, |s, t| make_g2(s, t, 0).unwrap()),
            g1_2d: sweep(&disk, |s, t| make_g1(s, t).unwrap()),
        }
    })
}

#[test]
fn criterion_04_singular_data_growth() {
    use dnlab::dn::linear_fit;
    let s = sweeps();
    let g1 = s.g1_3d.slope.unwrap();
    let g2 = s.g2_3d.slope.unwrap();
    let pts: Vec<(f64, f64)> = s.g1_2d.rows.iter().map(|r| (r.tau.ln().abs(), r.data_norm.powi(2))).collect();
    let (b, _, r2) = linear_fit(&pts).unwrap();
    let increasing = s.g1_2d.rows.windows(2).all(|w| w[1].data_norm > w[0].data_norm);
    let all_resolved = [&s.g1_3d, &s.g2_3d, &s.g1_2d].iter().all(|x| x.rows.iter().all(|r| r.resolved));
    let pass = (g1 - G1_SLOPE_3D).abs() <= GROWTH_SLOPE_TOL
        && (g2 - G2_SLOPE_3D).abs() <= GROWTH_SLOPE_TOL
        && b > 0.0
        && r2 >= LOG_GROWTH_R2
        && increasing
        && all_resolved;
    report(
        4,
        pass,
        format!(
            "n=3 g1 slope={g1:.3} (target {G1_SLOPE_3D}), g2 slope={g2:.3} (target {G2_SLOPE_3D}), \
             n=2 |g1|^2 vs |ln tau| slope={b:.3} R2={r2:.4} increasing={increasing}"
        ),
    );
    assert!(pass);
}

#[test]
fn criterion_05_remainder_dominance() {
    let s = sweeps();
    let ratios = |x: &dnlab::singular::SweepSummary| -> Vec<String> {
        x.rows.iter().map(|r| format!("{:.3}", r.remainder_h1 / r.lead_h1)).collect()
    };
    let pass = s.g1_3d.ratio_monotone && s.g1_2d.ratio_monotone;
    report(
        5,
        pass,
        format!("|z|/|H| n=3 [{}] n=2 [{}] (tau {:?})", ratios(&s.g1_3d).join(", "), ratios(&s.g1_2d).join(", "), TAUS),
    );
    assert!(pass);
}

// ---------------------------------------------------------------- criterion 6

const CONSTANT_LAW_TOL: f64 = 1e-6;
const FOURIER_MEASUREMENT_TOL: f64 = 1e-3;

#[test]
fn criterion_06_constant_law() {
    use dnlab::dn::DictionaryKind;
    use dnlab::pde::ProblemSpec;
    use dnlab::recon::{estimate_gamma_at, GammaContext, MeasurementContext};
    let opts = NewtonOptions::default();
    let id = CoefficientField::identity(2);

    let dom = build_domain(&DomainSpec::new(Shape::Disk, 0.05)).unwrap();
    let ctx = GammaContext::new(&dom, &id, &[0.2, 0.15, 0.1, 0.05], opts).unwrap();
    let mut worst: f64 = 0.0;
    for c in [0.5, 1.0, 2.5] {
        let p = ProblemSpec::quasilinear(id.clone(), QuasilinearLaw::constant(c), DriftLaw::zero());
        for lambda in [-1.0, 0.0, 1.5] {
            worst = worst.max((estimate_gamma_at(&ctx, &p, lambda).unwrap().gamma_hat - c).abs());
        }
    }

    // the exact value: sup_k (2−1)k / sqrt(1+k²) on the H^{1/2} circle
    // scale, attained at k = 16
    let expected = 16.0 / 257f64.sqrt();
    let fine = build_domain(&DomainSpec::new(Shape::Disk, 0.004)).unwrap();
    let mctx = MeasurementContext::new(&fine, &id, DictionaryKind::Fourier { kmax: 16 }, opts).unwrap();
    let p2 = ProblemSpec::quasilinear(id.clone(), QuasilinearLaw::constant(2.0), DriftLaw::zero());
    let p1 = ProblemSpec::quasilinear(id.clone(), QuasilinearLaw::constant(1.0), DriftLaw::zero());
    let m = mctx.measure(&p2, &p1, 0.0).unwrap();

    let pass = worst <= CONSTANT_LAW_TOL && (m - expected).abs() <= FOURIER_MEASUREMENT_TOL;
    report(6, pass, format!("max |gamma_hat - c|={worst:.1e}; measurement={m:.6} expected={expected:.6}"));
    assert!(pass);
}

// ---------------------------------------------------------------- criterion 7

const SMOOTH_LAW_REL_ERROR: f64 = 0.05;
/// Allowed change of the relative error, in percentage points, when the
/// drift is switched on.
const DRIFT_SHIFT_POINTS: f64 = 2.0;

#[test]
fn criterion_07_smooth_law_with_drift() {
    use dnlab::pde::ProblemSpec;
    use dnlab::recon::{lambda_grid, reconstruct_gamma, GammaContext};
    let id = CoefficientField::identity(2);
    let dom = build_domain(&DomainSpec::new(Shape::Disk, 0.025).with_grading(0.75)).unwrap();
    let ctx = GammaContext::new(&dom, &id, &TAUS, NewtonOptions::default()).unwrap();
    let law = QuasilinearLaw::sine(2.0, 1.0);
    let grid = lambda_grid(2.0, 0.25);
    let exact = |l: f64| 2.0 + l.sin();

    let mut errors = Vec::new();
    let mut resolved = true;
    for c in [0.0, 0.05, 0.2] {
        let drift = if c == 0.0 { DriftLaw::zero() } else { DriftLaw::radial_sine(c, 2) };
        assert!(drift.admissible);
        let p = ProblemSpec::quasilinear(id.clone(), law.clone(), drift);
        let curve = reconstruct_gamma(&ctx, &p, &grid).unwrap();
        resolved &= curve.diagnostics.iter().all(|d| !d.resolution_flag);
        errors.push((c, curve.relative_sup_error(exact)));
    }
    let base = errors[0].1;
    let pass = resolved
        && errors.iter().all(|&(_, e)| e <= SMOOTH_LAW_REL_ERROR)
        && errors.iter().all(|&(_, e)| 100.0 * (e - base).abs() <= DRIFT_SHIFT_POINTS);
    let detail: Vec<String> = errors.iter().map(|(c, e)| format!("drift c={c}: {:.3}%", 100.0 * e)).collect();
    report(7, pass, format!("relative sup error {} (resolved={resolved})", detail.join(", ")));
    assert!(pass);
}

// ---------------------------------------------------------------- criterion 8

const S_LIST: [f64; 4] = [0.4, 0.2, 0.1, 0.05];
const LIPSCHITZ_SPREAD: f64 = 2.0;

#[test]
fn criterion_08_lipschitz_sweep() {
    use dnlab::dn::DictionaryKind;
    use dnlab::pde::ProblemSpec;
    use dnlab::recon::{lambda_grid, stability_sweep, MeasurementContext, StabilityMode};
    let id = CoefficientField::identity(2);
    let dom = build_domain(&DomainSpec::new(Shape::Disk, 0.05)).unwrap();
    let ctx = MeasurementContext::new(&dom, &id, DictionaryKind::Fourier { kmax: 8 }, NewtonOptions::default()).unwrap();
    let grid = lambda_grid(2.0, 0.25);
    let g1 = QuasilinearLaw::sine(2.0, 1.0);
    let mut pass = true;
    let mut detail = Vec::new();
    for c in [0.0, 0.2] {
        let drift = if c == 0.0 { DriftLaw::zero() } else { DriftLaw::radial_sine(c, 2) };
        let base = ProblemSpec::quasilinear(id.clone(), g1.clone(), drift.clone());
        let family = |s: f64| ProblemSpec::quasilinear(id.clone(), g1.perturbed_bump(s), drift.clone());
        let rep = stability_sweep(&ctx, &base, &family, &S_LIST, &grid, 2.0, StabilityMode::Lipschitz).unwrap();
        pass &= rep.members.len() == S_LIST.len() && rep.spread <= LIPSCHITZ_SPREAD && rep.holds();
        let ratios: Vec<String> = rep.members.iter().map(|m| format!("{:.4}", m.ratio)).collect();
        detail.push(format!("drift c={c}: ratios [{}] spread={:.4}", ratios.join(", "), rep.spread));
    }
    report(8, pass, detail.join("; "));
    assert!(pass);
}

// ---------------------------------------------------------------- criterion 9

#[test]
fn criterion_09_hoelder_sweep() {
    use dnlab::dn::DictionaryKind;
    use dnlab::pde::ProblemSpec;
    use dnlab::recon::{lambda_grid, stability_sweep, MeasurementContext, StabilityMode};
    let id = CoefficientField::identity(3);
    let dom = build_domain(&DomainSpec::new(Shape::Ball, 0.1)).unwrap();
    let ctx =
        MeasurementContext::new(&dom, &id, DictionaryKind::PatchModes { count: 16 }, NewtonOptions::default()).unwrap();
    let grid = lambda_grid(1.0, 0.25);
    let g1 = SemilinearLaw::linear(1.0);
    let base = ProblemSpec::semilinear(3, g1.clone());
    let family = |s: f64| ProblemSpec::semilinear(3, g1.plus_arctan(s));
    let rep = stability_sweep(&ctx, &base, &family, &S_LIST, &grid, 1.0, StabilityMode::Hoelder).unwrap();
    let pass = rep.members.len() == S_LIST.len() && rep.holds() && rep.constant.is_finite() && rep.constant > 0.0;
    let ratios: Vec<String> = rep.members.iter().map(|m| format!("{:.4}", m.ratio)).collect();
    report(
        9,
        pass,
        format!(
            "left/measurement^(1/3) [{}] single C={:.4} (spread {:.3}, {} dictionary functions)",
            ratios.join(", "),
            rep.constant,
            rep.spread,
            rep.dictionary_size
        ),
    );
    assert!(pass);
}

// --------------------------------------------------------------- criterion 10

const GPRIME_REL_TOL: f64 = 0.05;
const G_SUP_TOL: f64 = 0.05;

#[test]
fn criterion_10_semilinear_recovery() {
    use dnlab::pde::ProblemSpec;
    use dnlab::recon::{lambda_grid, reconstruct_gprime, reconstruct_semilinear, GprimeContext};
    let dom = build_domain(&DomainSpec::new(Shape::Ball, 0.07).with_grading(0.92)).unwrap();
    let ctx = GprimeContext::new(&dom, &TAUS, NewtonOptions::default()).unwrap();
    let p = ProblemSpec::semilinear(3, SemilinearLaw::linear(1.0));
    let grid = lambda_grid(1.0, 0.25);
    let gp = reconstruct_gprime(&ctx, &p, &grid).unwrap();
    let gp_err = gp.sup_error(|_| 1.0);
    let g = reconstruct_semilinear(&gp, 0.0).unwrap();
    let g_err = g.relative_sup_error(|l| l);
    let resolved = gp.diagnostics.iter().all(|d| !d.resolution_flag);
    let pass = resolved && gp_err <= GPRIME_REL_TOL && g_err <= G_SUP_TOL;
    report(
        10,
        pass,
        format!(
            "sup |G'_hat - 1|={gp_err:.4}, relative sup error of G_hat={g_err:.4} (resolved={resolved}, {} grid points)",
            grid.len()
        ),
    );
    assert!(pass);
}
