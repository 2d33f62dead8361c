use std::f64::consts::PI;

use dnlab::geometry::io::{read_mesh, write_mesh};
use dnlab::geometry::{build_domain, mobius_grading, polar_angle, DomainSpec, Locator, Mesh, Shape};
use dnlab::linalg::{dot, norm, Point};
use proptest::prelude::*;

fn facet_centroid(m: &Mesh, f: usize) -> Point {
    let v = m.facet(f);
    let mut c = [0.0; 3];
    for &i in v {
        for k in 0..3 {
            c[k] += m.nodes[i][k] / v.len() as f64;
        }
    }
    c
}

/// Σ_f (F·n)|f| for the constant field e_k and for F(x) = x; both are exact
/// on planar facets, so they must equal 0 and dim·|Ω|.
fn divergence_checks(m: &Mesh) {
    let mut net = [0.0; 3];
    let mut flux_x = 0.0;
    for f in 0..m.bfacets.len() {
        let (n, area) = m.facet_normal(f);
        assert!((norm(&n) - 1.0).abs() < 1e-12);
        for k in 0..3 {
            net[k] += n[k] * area;
        }
        flux_x += dot(&facet_centroid(m, f), &n) * area;
    }
    let scale = m.total_volume();
    for k in 0..3 {
        assert!(net[k].abs() < 1e-12 * scale.max(1.0), "net normal {net:?}");
    }
    let rel = (flux_x - m.dim as f64 * m.total_volume()).abs() / m.total_volume();
    assert!(rel < 1e-12, "divergence theorem off by {rel}");
}

#[test]
fn boundary_is_closed_and_outward_for_every_shape() {
    let shapes = [
        (Shape::Disk, 0.1),
        (Shape::Ball, 0.3),
        (Shape::cube(0.5), 0.25),
        (Shape::Polygon(vec![[0.0, 0.0], [2.0, 0.0], [2.5, 1.0], [0.5, 1.5]]), 0.2),
    ];
    for (s, h) in shapes {
        let m = s.mesh(h).unwrap();
        m.validate().unwrap();
        divergence_checks(&m);
    }
}

#[test]
fn straight_sided_volumes_are_exact() {
    let cube = Shape::cube(0.5).mesh(0.2).unwrap();
    assert!((cube.total_volume() - 1.0).abs() < 1e-12);
    let verts = [[0.0, 0.0], [2.0, 0.0], [2.5, 1.0], [0.5, 1.5]];
    let shoelace = 0.5
        * (0..4)
            .map(|i| {
                let (a, b) = (verts[i], verts[(i + 1) % 4]);
                a[0] * b[1] - b[0] * a[1]
            })
            .sum::<f64>();
    let poly = Shape::Polygon(verts.to_vec()).mesh(0.15).unwrap();
    assert!((poly.total_volume() - shoelace).abs() < 1e-12);
}

#[test]
fn disk_area_matches_the_inscribed_polygon() {
    // boundary nodes lie on the circle, so the mesh area is exactly the
    // inscribed polygon area Σ ½ sin Δθ
    for h in [0.2, 0.1, 0.05] {
        let m = Shape::Disk.mesh(h).unwrap();
        let inscribed: f64 = (0..m.bfacets.len())
            .map(|f| {
                let v = m.facet(f);
                let (a, b) = (m.nodes[v[0]], m.nodes[v[1]]);
                0.5 * (a[0] * b[1] - a[1] * b[0]).abs()
            })
            .sum();
        assert!((m.total_volume() - inscribed).abs() < 1e-12);
        assert!(inscribed < PI && PI - inscribed < 2.0 * h * h);
    }
}

#[test]
fn lumped_mass_partitions_the_volume() {
    for m in [Shape::Disk.mesh(0.1).unwrap(), Shape::Ball.mesh(0.3).unwrap()] {
        let s: f64 = m.lumped_mass().iter().sum();
        assert!((s - m.total_volume()).abs() < 1e-12 * m.total_volume());
        assert!(m.lumped_mass().iter().all(|&w| w > 0.0));
    }
}

#[test]
fn mesh_text_round_trip() {
    let m = Shape::Ball.mesh(0.35).unwrap();
    let back = read_mesh(&write_mesh(&m), "round-trip").unwrap();
    assert_eq!(back.nodes, m.nodes);
    assert_eq!(back.cells, m.cells);
    assert_eq!(back.boundary_nodes, m.boundary_nodes);
    assert!(read_mesh("not a mesh", "junk").is_err());
}

#[test]
fn invalid_shapes_and_sizes_are_rejected() {
    assert!(Shape::Disk.mesh(0.0).is_err());
    assert!(Shape::Disk.mesh(-0.1).is_err());
    // clockwise, and a non-convex quadrilateral
    assert!(Shape::Polygon(vec![[0.0, 0.0], [0.0, 1.0], [1.0, 1.0], [1.0, 0.0]]).validate().is_err());
    assert!(Shape::Polygon(vec![[0.0, 0.0], [2.0, 0.0], [0.5, 0.5], [0.0, 2.0]]).validate().is_err());
    assert!(build_domain(&DomainSpec::new(Shape::Disk, 0.1).with_grading(1.0)).is_err());
}

#[test]
fn domain_triple_nesting_and_cutoff() {
    let dom = build_domain(&DomainSpec::new(Shape::Disk, 0.08).with_patches(1.0, 0.5)).unwrap();
    dom.check_invariants().unwrap();
    assert!((norm(&dom.x0) - 1.0).abs() < 1e-12);
    let chi = dom.cutoff().unwrap();
    for (k, &i) in dom.omega.boundary_nodes.iter().enumerate() {
        let v = chi.values[k];
        assert!((0.0..=1.0).contains(&v));
        if dom.s_prime.node_mask[k] {
            assert_eq!(v, 1.0);
        }
        if !dom.s.node_mask[k] {
            assert_eq!(v, 0.0);
        }
        // S′ ⊂ S
        assert!(!dom.s_prime.node_mask[k] || dom.s.node_mask[k]);
        let ang = polar_angle(&dom.center, &dom.x0, &dom.omega.nodes[i]);
        if dom.s.node_mask[k] {
            assert!(ang < 1.0 + 1e-9, "node at angle {ang} marked inside S");
        } else {
            assert!(ang > 1.0 - 1e-9, "node at angle {ang} missing from S");
        }
    }
    // exterior points are outside Ω and inside the allowed offset range
    let y = dom.exterior_point(dom.delta / 2.0).unwrap();
    assert!(norm(&y) > 1.0);
    assert!(dom.exterior_point(dom.delta).is_err());
    assert!(dom.exterior_point(0.0).is_err());
}

#[test]
fn grading_refines_near_the_marked_point() {
    let plain = build_domain(&DomainSpec::new(Shape::Disk, 0.1)).unwrap();
    let graded = build_domain(&DomainSpec::new(Shape::Disk, 0.1).with_grading(0.6)).unwrap();
    let (hp, hg) = (plain.mesh_size_near_x0(), graded.mesh_size_near_x0());
    assert!(hg < 0.5 * hp, "graded {hg} vs plain {hp}");
    let sched = graded.tau_schedule(4);
    assert!(sched.windows(2).all(|w| w[1] < w[0]));
    assert!(sched.iter().all(|&t| graded.resolves(t) && t < graded.delta));
}

proptest! {
    #[test]
    fn mobius_grading_preserves_the_ball(
        x in prop::array::uniform3(-1.0f64..1.0),
        d in prop::array::uniform3(-1.0f64..1.0),
        t in 0.0f64..0.95,
    ) {
        prop_assume!(norm(&d) > 0.1);
        let dir = dnlab::linalg::normalize(&d);
        let r = norm(&x);
        let y = mobius_grading(&x, &dir, t);
        if r < 1.0 {
            prop_assert!(norm(&y) < 1.0 + 1e-12);
        }
        let s = dnlab::linalg::scale(&x, 1.0 / r.max(1e-12));
        prop_assert!((norm(&mobius_grading(&s, &dir, t)) - 1.0).abs() < 1e-10);
        let fixed = mobius_grading(&dir, &dir, t);
        prop_assert!(norm(&dnlab::linalg::sub(&fixed, &dir)) < 1e-12);
    }

    #[test]
    fn p1_interpolation_reproduces_affine_functions(
        a in prop::array::uniform3(-2.0f64..2.0),
        c in -1.0f64..1.0,
        p in prop::array::uniform2(-0.69f64..0.69),
    ) {
        let m = Shape::Disk.mesh(0.15).unwrap();
        let loc = Locator::new(&m);
        let f = |x: &Point| a[0] * x[0] + a[1] * x[1] + c;
        let vals: Vec<f64> = m.nodes.iter().map(f).collect();
        let q = [p[0], p[1], 0.0];
        let (cell, bary) = loc.locate(&q).unwrap();
        prop_assert!(cell < m.cells.len());
        prop_assert!((bary.iter().take(3).sum::<f64>() - 1.0).abs() < 1e-12);
        prop_assert!((loc.interpolate(&vals, &q).unwrap() - f(&q)).abs() < 1e-12);
    }
}
