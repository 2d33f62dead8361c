use std::f64::consts::PI;
use std::sync::LazyLock;

use dnlab::dn::{
    dn_apply, linearize, measurement_functional, sample_operator, Background, Dictionary, DictionaryKind,
    FractionalSpace,
};
use dnlab::fem::Assembler;
use dnlab::geometry::{build_domain, BoundaryFunction, DomainSpec, DomainTriple, Shape};
use dnlab::linalg::Point;
use dnlab::pde::{CoefficientField, DriftLaw, NewtonOptions, ProblemSpec, QuasilinearLaw, SemilinearLaw};
use dnlab::recon::MeasurementContext;
use proptest::prelude::*;

static DISK: LazyLock<DomainTriple> = LazyLock::new(|| build_domain(&DomainSpec::new(Shape::Disk, 0.05)).unwrap());
static COARSE_DISK: LazyLock<DomainTriple> =
    LazyLock::new(|| build_domain(&DomainSpec::new(Shape::Disk, 0.1)).unwrap());

fn laplace(dim: usize) -> ProblemSpec {
    ProblemSpec::quasilinear(CoefficientField::identity(dim), QuasilinearLaw::constant(1.0), DriftLaw::zero())
}

fn angle(x: &Point) -> f64 {
    x[1].atan2(x[0])
}

#[test]
fn disk_fourier_modes_are_eigenfunctions() {
    // Λ cos kθ = k cos kθ, so ⟨Λf, f⟩ = kπ
    let dom = &*DISK;
    let asm = Assembler::new(&dom.omega, &CoefficientField::identity(2));
    let op = linearize(&asm, &laplace(2), &Background::Constant(0.0), &dom.s, false, &NewtonOptions::default()).unwrap();
    for k in 1..=4 {
        let f = BoundaryFunction::from_fn(&dom.omega, |x| (k as f64 * angle(x)).cos());
        let q = op.apply(&f.values).unwrap().pair(&f.values);
        let rel = (q - k as f64 * PI).abs() / (k as f64 * PI);
        assert!(rel < 0.02, "k={k}: {q} vs {}", k as f64 * PI);
    }
    let one = vec![1.0; dom.omega.n_boundary()];
    assert!(op.apply(&one).unwrap().l2() < 1e-10);
}

#[test]
fn ball_spherical_harmonics_are_eigenfunctions() {
    // Λ Y_l = l Y_l: ⟨Λx₁, x₁⟩ = 4π/3 and ⟨Λ x₁x₂, x₁x₂⟩ = 2·4π/15
    let dom = build_domain(&DomainSpec::new(Shape::Ball, 0.2)).unwrap();
    let asm = Assembler::new(&dom.omega, &CoefficientField::identity(3));
    let op = linearize(&asm, &laplace(3), &Background::Constant(0.0), &dom.s, false, &NewtonOptions::default()).unwrap();
    let cases: [(fn(&Point) -> f64, f64); 2] = [(|x| x[0], 4.0 * PI / 3.0), (|x| x[0] * x[1], 8.0 * PI / 15.0)];
    for (f, exact) in cases {
        let v = BoundaryFunction::from_fn(&dom.omega, f).values;
        let q = op.apply(&v).unwrap().pair(&v);
        assert!((q - exact).abs() / exact < 0.08, "{q} vs {exact}");
    }
}

#[test]
fn boundary_laplacian_spectrum_matches_circle_and_sphere() {
    let circle = FractionalSpace::new(&DISK.omega).unwrap();
    let expected = [0.0, 1.0, 1.0, 4.0, 4.0, 9.0, 9.0];
    for (got, want) in circle.eigenvalues.iter().zip(expected) {
        assert!((got - want).abs() <= 0.01 * want.max(1.0), "{got} vs {want}");
    }
    let ball = build_domain(&DomainSpec::new(Shape::Ball, 0.25)).unwrap();
    let sphere = FractionalSpace::new(&ball.omega).unwrap();
    let expected = [0.0, 2.0, 2.0, 2.0, 6.0, 6.0, 6.0, 6.0, 6.0];
    for (got, want) in sphere.eigenvalues.iter().zip(expected) {
        assert!((got - want).abs() <= 0.06 * want.max(1.0), "{got} vs {want}");
    }
}

#[test]
fn half_order_norms_of_fourier_modes() {
    // ‖cos kθ‖²_{H^{1/2}} = π(1+k²)^{1/2}; the Riesz map is an isometry
    let space = FractionalSpace::new(&DISK.omega).unwrap();
    for k in 0..=4 {
        let f = BoundaryFunction::from_fn(&DISK.omega, |x| (k as f64 * angle(x)).cos()).values;
        let mass = if k == 0 { 2.0 * PI } else { PI };
        let exact = (mass * (1.0 + (k * k) as f64).sqrt()).sqrt();
        let n = space.norm_plus(&f);
        assert!((n - exact).abs() / exact < 0.01, "k={k}: {n} vs {exact}");
        let r = space.riesz(&f);
        assert!((space.norm_minus(&r) - n).abs() < 1e-10 * n);
    }
    assert!(space.norm(&[1.0], 0.5).is_err());
    assert!(space.norm(&vec![0.0; space.n], 0.25).is_err());
}

#[test]
fn quasilinear_linearization_is_gamma_times_laplace() {
    let dom = &*COARSE_DISK;
    let asm = Assembler::new(&dom.omega, &CoefficientField::identity(2));
    let opts = NewtonOptions::default();
    let lam = 0.7;
    let law = QuasilinearLaw::sine(2.0, 1.0);
    let p = ProblemSpec::quasilinear(CoefficientField::identity(2), law.clone(), DriftLaw::zero());
    let op = linearize(&asm, &p, &Background::Constant(lam), &dom.s, false, &opts).unwrap();
    let base = linearize(&asm, &laplace(2), &Background::Constant(lam), &dom.s, false, &opts).unwrap();
    let h = BoundaryFunction::from_fn(&dom.omega, |x| x[0] * x[0] - 0.3 * x[1]).values;
    let (a, b) = (op.apply(&h).unwrap(), base.apply(&h).unwrap());
    for (x, y) in a.values.iter().zip(&b.values) {
        assert!((x - law.gamma(lam) * y).abs() < 1e-10);
    }
    // finite difference of the nonlinear map at λ approaches the linearization
    let bg = BoundaryFunction::constant(&dom.omega, lam);
    let eps = 1e-5;
    let n0 = dn_apply(&asm, &p, &bg, &dom.s, &opts).unwrap();
    let n1 = dn_apply(&asm, &p, &bg.axpy(eps, &BoundaryFunction::new(h.clone())), &dom.s, &opts).unwrap();
    let fd = n1.sub(&n0).scaled(1.0 / eps);
    assert!(fd.sub(&a).l2() < 1e-3 * a.l2());
}

#[test]
fn linear_reaction_law_gives_a_background_independent_operator() {
    let dom = &*COARSE_DISK;
    let asm = Assembler::new(&dom.omega, &CoefficientField::identity(2));
    let opts = NewtonOptions::default();
    let p = ProblemSpec::semilinear(2, SemilinearLaw::linear(2.0));
    let chi = dom.cutoff().unwrap();
    let h = BoundaryFunction::from_fn(&dom.omega, |x| x[0]).values;
    let apply = |l: f64| {
        linearize(&asm, &p, &Background::Cutoff { lambda: l, chi: chi.clone() }, &dom.s, false, &opts)
            .unwrap()
            .apply(&h)
            .unwrap()
    };
    assert!(apply(0.3).sub(&apply(0.9)).l2() < 1e-10);
    // the cubic law is not: its potential depends on the background
    let pc = ProblemSpec::semilinear(2, SemilinearLaw::cubic());
    let ap = |l: f64| {
        linearize(&asm, &pc, &Background::Cutoff { lambda: l, chi: chi.clone() }, &dom.s, false, &opts)
            .unwrap()
            .apply(&h)
            .unwrap()
    };
    assert!(ap(0.3).sub(&ap(0.9)).l2() > 1e-4);
}

#[test]
fn partial_patch_flux_vanishes_off_the_patch() {
    let dom = build_domain(&DomainSpec::new(Shape::Disk, 0.08).with_patches(1.0, 0.5)).unwrap();
    let asm = Assembler::new(&dom.omega, &CoefficientField::identity(2));
    let op = linearize(&asm, &laplace(2), &Background::Constant(0.0), &dom.s, false, &NewtonOptions::default()).unwrap();
    let h: Vec<f64> = BoundaryFunction::from_fn(&dom.omega, |x| x[1] * x[1]).restricted(&dom.s).values;
    let f = op.apply(&h).unwrap();
    assert!(f.values.iter().zip(&dom.s.node_mask).all(|(v, &m)| m || *v == 0.0));
    assert!(f.l2() > 0.0);
}

#[test]
fn measurement_of_constant_laws_matches_the_dn_norm() {
    // Λ_{c₁} − Λ_{c₂} = (c₁ − c₂)Λ, and on the k <= K Fourier span the
    // H^{1/2} → H^{-1/2} norm of Λ is K/√(1+K²)
    let dom = &*DISK;
    let ctx = MeasurementContext::new(dom, &CoefficientField::identity(2), DictionaryKind::Fourier { kmax: 4 }, NewtonOptions::default())
        .unwrap();
    let p = |c| ProblemSpec::quasilinear(CoefficientField::identity(2), QuasilinearLaw::constant(c), DriftLaw::zero());
    let m = ctx.measure(&p(2.0), &p(1.5), 0.3).unwrap();
    let exact = 0.5 * 4.0 / 17f64.sqrt();
    assert!((m - exact).abs() / exact < 0.01, "{m} vs {exact}");
    assert!(ctx.measure(&p(2.0), &p(2.0), 0.3).unwrap() < 1e-12);
}

#[test]
fn orthonormal_dictionary_has_identity_gram() {
    let dom = &*COARSE_DISK;
    let space = FractionalSpace::new(&dom.omega).unwrap();
    let dict = Dictionary::build(&dom.omega, &dom.s, DictionaryKind::Fourier { kmax: 3 }, &space).unwrap();
    assert_eq!(dict.len(), 7);
    let g = dict.gram(&space);
    for i in 0..7 {
        for j in 0..7 {
            let want = if i == j { 1.0 } else { 0.0 };
            assert!((g[(i, j)] - want).abs() < 1e-10);
        }
    }
    let asm = Assembler::new(&dom.omega, &CoefficientField::identity(2));
    let op = linearize(&asm, &laplace(2), &Background::Constant(0.0), &dom.s, false, &NewtonOptions::default()).unwrap();
    let s = sample_operator(&op, &dict, &space).unwrap();
    assert!(measurement_functional(&s, &s).unwrap() < 1e-14);
    let small = Dictionary::build(&dom.omega, &dom.s, DictionaryKind::Fourier { kmax: 1 }, &space).unwrap();
    assert!(measurement_functional(&s, &sample_operator(&op, &small, &space).unwrap()).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn dn_map_is_symmetric_and_nonnegative(
        a in prop::collection::vec(-1.0f64..1.0, 6),
        b in prop::collection::vec(-1.0f64..1.0, 6),
        gamma in 0.5f64..3.0,
    ) {
        let dom = &*COARSE_DISK;
        let asm = Assembler::new(&dom.omega, &CoefficientField::identity(2));
        let p = ProblemSpec::quasilinear(CoefficientField::identity(2), QuasilinearLaw::constant(gamma), DriftLaw::zero());
        let op = linearize(&asm, &p, &Background::Constant(0.0), &dom.s, false, &NewtonOptions::default()).unwrap();
        let series = |c: &[f64]| {
            BoundaryFunction::from_fn(&dom.omega, |x| {
                let t = angle(x);
                (0..3).map(|k| c[2 * k] * ((k + 1) as f64 * t).cos() + c[2 * k + 1] * ((k + 1) as f64 * t).sin()).sum()
            })
            .values
        };
        let (f, g) = (series(&a), series(&b));
        let (lf, lg) = (op.apply(&f).unwrap(), op.apply(&g).unwrap());
        let scale = lf.l2() * g.iter().map(|v| v * v).sum::<f64>().sqrt() + 1e-300;
        prop_assert!((lf.pair(&g) - lg.pair(&f)).abs() <= 1e-10 * scale.max(1.0));
        prop_assert!(lf.pair(&f) >= -1e-12);
    }
}
