use std::sync::Arc;

use dnlab::fem::Assembler;
use dnlab::geometry::{BoundaryFunction, Mesh, Shape};
use dnlab::linalg::{norm, Point};
use dnlab::pde::laws::samples;
use dnlab::pde::{
    check_ellipticity, solve_linear, solve_quasilinear, solve_semilinear, CoefficientField, DriftLaw, FieldSolution,
    LinearProblem, NewtonOptions, ProblemSpec, QuasilinearLaw, SemilinearLaw,
};
use dnlab::Error;

fn max_err(mesh: &Mesh, u: &[f64], f: impl Fn(&Point) -> f64) -> f64 {
    mesh.nodes.iter().zip(u).map(|(x, v)| (v - f(x)).abs()).fold(0.0, f64::max)
}

#[test]
fn affine_data_is_reproduced_exactly() {
    let affine = |x: &Point| 0.3 + 1.2 * x[0] - 0.7 * x[1] + 0.4 * x[2];
    let meshes = [
        Shape::Disk.mesh(0.1).unwrap(),
        Shape::Ball.mesh(0.3).unwrap(),
        Shape::cube(0.5).mesh(0.25).unwrap(),
        Shape::Polygon(vec![[0.0, 0.0], [1.0, 0.0], [1.2, 0.8], [0.1, 1.0]]).mesh(0.1).unwrap(),
    ];
    for m in &meshes {
        // any constant coefficient matrix keeps affine functions a-harmonic
        let a = if m.dim == 2 {
            CoefficientField::constant([[2.0, 0.4, 0.0], [0.4, 1.0, 0.0], [0.0, 0.0, 1.0]], 2)
        } else {
            CoefficientField::constant([[2.0, 0.4, 0.1], [0.4, 1.0, 0.2], [0.1, 0.2, 1.5]], 3)
        };
        let asm = Assembler::new(m, &a);
        let g = BoundaryFunction::from_fn(m, affine);
        let u = solve_linear(&asm, &LinearProblem::diffusion(1.0), &g).unwrap();
        assert!(u.matches_dirichlet(m));
        assert!(max_err(m, &u.values, affine) < 1e-10);
    }
}

/// Inverse of Φ(u) = u + u³/3 by Newton's method.
fn phi_inv(y: f64) -> f64 {
    let mut u = y;
    for _ in 0..60 {
        u -= (u + u * u * u / 3.0 - y) / (1.0 + u * u);
    }
    u
}

#[test]
fn kirchhoff_transform_oracle() {
    // −∇·((1+u²)∇u) = 0 is Δ Φ(u) = 0, so data Φ⁻¹(x₁) gives u = Φ⁻¹(x₁)
    let exact = |x: &Point| phi_inv(1.5 * x[0]);
    let errs: Vec<f64> = [0.1, 0.05]
        .iter()
        .map(|&h| {
            let m = Shape::Disk.mesh(h).unwrap();
            let asm = Assembler::new(&m, &CoefficientField::identity(2));
            let g = BoundaryFunction::from_fn(&m, exact);
            let u = solve_quasilinear(
                &asm,
                &QuasilinearLaw::one_plus_square(),
                &DriftLaw::zero(),
                &g,
                None,
                &NewtonOptions::default(),
            )
            .unwrap();
            assert!(u.residual_norm <= NewtonOptions::default().tol);
            max_err(&m, &u.values, exact)
        })
        .collect();
    assert!(errs[1] < 2e-3, "max error {:?}", errs);
    assert!(errs[0] / errs[1] > 3.0, "no second-order decay: {errs:?}");
}

/// Modified Bessel function I₀ by its power series.
fn bessel_i0(x: f64) -> f64 {
    let q = x * x / 4.0;
    let (mut term, mut sum) = (1.0, 1.0);
    for k in 1..60 {
        term *= q / (k * k) as f64;
        sum += term;
    }
    sum
}

#[test]
fn radial_reaction_oracle() {
    // −Δu + c u = 0 with u = 1 on the unit circle: u = I₀(√c r)/I₀(√c)
    let c: f64 = 4.0;
    let exact = |x: &Point| bessel_i0(c.sqrt() * norm(x)) / bessel_i0(c.sqrt());
    let errs: Vec<f64> = [0.1, 0.05]
        .iter()
        .map(|&h| {
            let m = Shape::Disk.mesh(h).unwrap();
            let asm = Assembler::new(&m, &CoefficientField::identity(2));
            let g = BoundaryFunction::constant(&m, 1.0);
            let u = solve_semilinear(&asm, &SemilinearLaw::linear(c), &g, None, &NewtonOptions::default()).unwrap();
            max_err(&m, &u.values, exact)
        })
        .collect();
    assert!(errs[1] < 5e-3, "{errs:?}");
    assert!(errs[0] / errs[1] > 2.5, "{errs:?}");
}

#[test]
fn constant_law_scales_out() {
    let m = Shape::Disk.mesh(0.1).unwrap();
    let asm = Assembler::new(&m, &CoefficientField::identity(2));
    let g = BoundaryFunction::from_fn(&m, |x| (3.0 * x[1].atan2(x[0])).cos());
    let lap = solve_linear(&asm, &LinearProblem::diffusion(1.0), &g).unwrap();
    let q = solve_quasilinear(&asm, &QuasilinearLaw::constant(2.5), &DriftLaw::zero(), &g, None, &NewtonOptions::default())
        .unwrap();
    assert!(max_err(&m, &q.values, |_| 0.0) > 0.1);
    for (a, b) in lap.values.iter().zip(&q.values) {
        assert!((a - b).abs() < 1e-9);
    }
    // the variational flux scales with the constant
    for (a, b) in lap.boundary_residual.iter().zip(&q.boundary_residual) {
        assert!((2.5 * a - b).abs() < 1e-8);
    }
}

#[test]
fn invalid_inputs_are_rejected() {
    let m = Shape::Disk.mesh(0.2).unwrap();
    let id = CoefficientField::identity(2);
    let asm = Assembler::new(&m, &id);
    let opts = NewtonOptions::default();

    let bad = CoefficientField::scalar(2, "x1", |x| x[0]);
    assert!(matches!(check_ellipticity(&bad, &m), Err(Error::Coefficient(_))));

    let g = BoundaryFunction::constant(&m, -2.0);
    let r = solve_quasilinear(&asm, &QuasilinearLaw::affine(1.0, 1.0), &DriftLaw::zero(), &g, None, &opts);
    assert!(matches!(r, Err(Error::LawViolation(_))), "{r:?}");

    let aniso = CoefficientField::diagonal(&[2.0, 1.0]);
    let asm2 = Assembler::new(&m, &aniso);
    let r = solve_semilinear(&asm2, &SemilinearLaw::cubic(), &g, None, &opts);
    assert!(matches!(r, Err(Error::Unsupported(_))));

    let strong = DriftLaw::radial_linear(200.0, 2);
    let g1 = BoundaryFunction::constant(&m, 1.0);
    let r = solve_quasilinear(&asm, &QuasilinearLaw::constant(1.0), &strong, &g1, None, &opts);
    assert!(matches!(r, Err(Error::Peclet { .. })), "{r:?}");

    let dec = SemilinearLaw::linear(-1.0);
    assert!(matches!(dec.check(&samples(2.0, 41)), Err(Error::LawViolation(_))));
    let r = solve_semilinear(&asm, &dec, &g1, None, &opts);
    assert!(matches!(r, Err(Error::LawViolation(_))), "{r:?}");
    let aniso_semi = ProblemSpec { a: aniso, ..ProblemSpec::semilinear(2, SemilinearLaw::cubic()) };
    assert!(matches!(aniso_semi.validate(), Err(Error::Unsupported(_))));
}

#[test]
fn drift_problem_converges_and_exports() {
    let m = Shape::Disk.mesh(0.08).unwrap();
    let asm = Assembler::new(&m, &CoefficientField::identity(2));
    let g = BoundaryFunction::from_fn(&m, |x| x[0] * x[1]);
    let u = solve_quasilinear(
        &asm,
        &QuasilinearLaw::sine(2.0, 1.0),
        &DriftLaw::radial_sine(0.2, 2),
        &g,
        None,
        &NewtonOptions::default(),
    )
    .unwrap();
    assert!(u.residual_norm <= 1e-10 && u.newton_iterations > 0);
    assert!(u.matches_dirichlet(&m));
    let back = FieldSolution::parse_values(&u.export()).unwrap();
    assert_eq!(back, u.values);
}

#[test]
fn linear_problem_with_potential_and_source() {
    // −Δu + u = f with u = x₁² + x₂²: f = −4 + r²
    let exact = |x: &Point| x[0] * x[0] + x[1] * x[1];
    let m = Shape::Disk.mesh(0.05).unwrap();
    let asm = Assembler::new(&m, &CoefficientField::identity(2));
    let p = LinearProblem::diffusion(1.0)
        .with_potential(vec![1.0; m.n_nodes()])
        .with_source(Arc::new(move |x: &Point| -4.0 + exact(x)));
    let u = solve_linear(&asm, &p, &BoundaryFunction::from_fn(&m, exact)).unwrap();
    assert!(max_err(&m, &u.values, exact) < 5e-3);
}
