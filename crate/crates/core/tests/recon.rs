use dnlab::dn::{linearize, Background};
use dnlab::fem::Assembler;
use dnlab::geometry::{build_domain, BoundaryFunction, DomainSpec, Shape};
use dnlab::pde::{CoefficientField, DriftLaw, NewtonOptions, ProblemSpec, QuasilinearLaw};
use dnlab::recon::{
    fit_power_extrapolation, lambda_grid, pairing, reconstruct_gamma, reconstruct_gamma_difference,
    reconstruct_semilinear, GammaContext, PointDiagnostics, ReconstructionCurve, StabilityMode, BETA_MAX, BETA_MIN,
};
use proptest::prelude::*;

#[test]
fn lambda_grid_is_symmetric_and_uniform() {
    let g = lambda_grid(2.0, 0.25);
    assert_eq!(g.len(), 17);
    assert_eq!(g[0], -2.0);
    assert_eq!(g[16], 2.0);
    assert!(g.iter().any(|&l| l == 0.0));
    assert!(g.windows(2).all(|w| (w[1] - w[0] - 0.25).abs() < 1e-12));
    assert!(ReconstructionCurve::check_grid(&[]).is_err());
    assert!(ReconstructionCurve::check_grid(&[0.0, 0.0]).is_err());
}

#[test]
fn constant_data_extrapolate_to_themselves() {
    let f = fit_power_extrapolation(&[0.2, 0.1, 0.05, 0.025], &[1.5; 4]);
    assert_eq!(f.limit, 1.5);
    assert!(f.beta.is_none());
}

fn curve(lambda: Vec<f64>, values: Vec<f64>) -> ReconstructionCurve {
    let n = lambda.len();
    ReconstructionCurve { quantity: "gprime".into(), lambda, values, diagnostics: vec![PointDiagnostics::default(); n], argmax: None }
}

#[test]
fn trapezoid_integration_is_exact_for_linear_derivatives() {
    // G′ = 1 + 2λ integrates to G = G(0) + λ + λ²
    for grid in [lambda_grid(1.0, 0.25), vec![-1.0, -0.3, 0.4, 1.1], vec![0.5, 1.0, 1.5], vec![-1.5, -1.0, -0.5]] {
        let gp = curve(grid.clone(), grid.iter().map(|l| 1.0 + 2.0 * l).collect());
        let g = reconstruct_semilinear(&gp, 0.7).unwrap();
        for (l, v) in g.lambda.iter().zip(&g.values) {
            assert!((v - (0.7 + l + l * l)).abs() < 1e-12, "λ={l}: {v}");
        }
    }
}

#[test]
fn stability_exponents() {
    assert_eq!(StabilityMode::Lipschitz.exponent(), 1.0);
    assert!((StabilityMode::Hoelder.exponent() - 1.0 / 3.0).abs() < 1e-15);
}

#[test]
fn constant_and_difference_recovery_on_a_coarse_disk() {
    let dom = build_domain(&DomainSpec::new(Shape::Disk, 0.08)).unwrap();
    let id = CoefficientField::identity(2);
    let ctx = GammaContext::new(&dom, &id, &[0.2, 0.15, 0.1, 0.075], NewtonOptions::default()).unwrap();
    let p = |c: f64| ProblemSpec::quasilinear(id.clone(), QuasilinearLaw::constant(c), DriftLaw::zero());
    let grid = lambda_grid(1.0, 0.5);
    let g = reconstruct_gamma(&ctx, &p(1.7), &grid).unwrap();
    assert!(g.sup_error(|_| 1.7) < 1e-8, "{:?}", g.values);
    let d = reconstruct_gamma_difference(&ctx, &p(1.7), &p(1.2), &grid).unwrap();
    assert!(d.sup_error(|_| 0.5) < 1e-8);
    assert!(d.argmax.is_some());
    assert!(GammaContext::new(&dom, &id, &[0.2, 0.1, 0.05], NewtonOptions::default()).is_err());
}

#[test]
fn integral_identity_holds_with_drift() {
    let dom = build_domain(&DomainSpec::new(Shape::Disk, 0.08).with_patches(1.2, 0.6)).unwrap();
    let id = CoefficientField::identity(2);
    let asm = Assembler::new(&dom.omega, &id);
    let opts = NewtonOptions::default();
    let p1 = ProblemSpec::quasilinear(id.clone(), QuasilinearLaw::sine(2.0, 1.0), DriftLaw::radial_sine(0.2, 2));
    let p2 = ProblemSpec::quasilinear(id.clone(), QuasilinearLaw::constant(1.5), DriftLaw::zero());
    let bg = Background::Constant(0.4);
    let op1 = linearize(&asm, &p1, &bg, &dom.s, false, &opts).unwrap();
    let op2 = linearize(&asm, &p2, &bg, &dom.s, false, &opts).unwrap();
    let g = BoundaryFunction::from_fn(&dom.omega, |x| x[1] + x[0] * x[1]).restricted(&dom.s).values;
    let s = pairing(&asm, &op1, &op2, &g, None).unwrap();
    assert!(s.consistent(), "{s:?}");
    assert!(s.boundary.abs() > 1e-3);
    // data leaking outside S is refused
    let bad = BoundaryFunction::from_fn(&dom.omega, |x| x[0]).values;
    assert!(pairing(&asm, &op1, &op2, &bad, None).is_err());
}

proptest! {
    #[test]
    fn power_fit_recovers_exact_models(
        limit in -3.0f64..3.0,
        coef in prop_oneof![-2.0f64..-0.1, 0.1f64..2.0],
        step in 0usize..=60,
    ) {
        let beta = BETA_MIN + 0.025 * step as f64;
        prop_assume!(beta <= BETA_MAX + 1e-12);
        let taus = [0.2, 0.1, 0.05, 0.025];
        let r: Vec<f64> = taus.iter().map(|t: &f64| limit + coef * t.powf(beta)).collect();
        let fit = fit_power_extrapolation(&taus, &r);
        prop_assert!((fit.limit - limit).abs() < 1e-8 * (1.0 + limit.abs()));
        prop_assert!((fit.beta.unwrap() - beta).abs() < 1e-9);
        prop_assert!(fit.monotone);
        prop_assert_eq!(fit.at_edge, step == 0 || step == 60);
    }
}
