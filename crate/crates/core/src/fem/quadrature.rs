//! Quadrature on simplices. Rules are returned as barycentric points with
//! weights that sum to one (multiply by the cell volume).

use std::sync::OnceLock;

use rayon::prelude::*;

use crate::geometry::Mesh;
use crate::linalg::{norm, sub, Point};

#[derive(Clone, Debug)]
pub struct Rule {
    pub points: Vec<[f64; 4]>,
    pub weights: Vec<f64>,
}

/// Degree-1 (centroid) and degree-2 rules.
pub fn simplex_rule(dim: usize, degree: usize) -> &'static Rule {
    static R: OnceLock<[Rule; 4]> = OnceLock::new();
    let rules = R.get_or_init(|| {
        let tri1 = Rule { points: vec![[1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0, 0.0]], weights: vec![1.0] };
        let tri2 = Rule {
            points: vec![
                [2.0 / 3.0, 1.0 / 6.0, 1.0 / 6.0, 0.0],
                [1.0 / 6.0, 2.0 / 3.0, 1.0 / 6.0, 0.0],
                [1.0 / 6.0, 1.0 / 6.0, 2.0 / 3.0, 0.0],
            ],
            weights: vec![1.0 / 3.0; 3],
        };
        let tet1 = Rule { points: vec![[0.25; 4]], weights: vec![1.0] };
        let (a, b) = (0.585_410_196_624_968_5, 0.138_196_601_125_010_5);
        let tet2 = Rule {
            points: vec![[a, b, b, b], [b, a, b, b], [b, b, a, b], [b, b, b, a]],
            weights: vec![0.25; 4],
        };
        [tri1, tri2, tet1, tet2]
    });
    let k = if degree <= 1 { 0 } else { 1 };
    if dim == 2 {
        &rules[k]
    } else {
        &rules[2 + k]
    }
}

/// Gauss–Legendre nodes and weights on [0, 1].
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, 0.0);
            for j in 0..n {
                let p2 = p1;
                p1 = p0;
                p0 = ((2 * j + 1) as f64 * z * p1 - j as f64 * p2) / (j + 1) as f64;
            }
            dp = n as f64 * (z * p0 - p1) / (z * z - 1.0);
            let dz = p0 / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        x[i] = 0.5 * (1.0 - z);
        w[i] = 1.0 / ((1.0 - z * z) * dp * dp);
    }
    (x, w)
}

/// Collapsed-coordinate (Duffy) tensor rule with `n` Gauss points per axis,
/// exact for polynomials of degree 2n-1-dim or so.
pub fn duffy_rule(dim: usize, n: usize) -> Rule {
    let (x, w) = gauss_legendre(n);
    let mut points = Vec::new();
    let mut weights = Vec::new();
    if dim == 2 {
        for i in 0..n {
            for j in 0..n {
                let (u, v) = (x[i], x[j]);
                let (px, py) = (u, v * (1.0 - u));
                points.push([1.0 - px - py, px, py, 0.0]);
                weights.push(2.0 * w[i] * w[j] * (1.0 - u));
            }
        }
    } else {
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    let (u, v, s) = (x[i], x[j], x[k]);
                    let px = u;
                    let py = v * (1.0 - u);
                    let pz = s * (1.0 - u) * (1.0 - v);
                    points.push([1.0 - px - py - pz, px, py, pz]);
                    weights.push(6.0 * w[i] * w[j] * w[k] * (1.0 - u) * (1.0 - u) * (1.0 - v));
                }
            }
        }
    }
    Rule { points, weights }
}

/// Children of the reference simplex after one edgewise bisection, as
/// barycentric vertex lists (2^dim children).
fn children(dim: usize) -> &'static Vec<Vec<[f64; 4]>> {
    static C2: OnceLock<Vec<Vec<[f64; 4]>>> = OnceLock::new();
    static C3: OnceLock<Vec<Vec<[f64; 4]>>> = OnceLock::new();
    let build = |d: usize| {
        let mut nodes = vec![[0.0; 3]; d + 1];
        for k in 0..d {
            nodes[k + 1][k] = 1.0;
        }
        let mut cell = [usize::MAX; 4];
        for (k, c) in cell.iter_mut().enumerate().take(d + 1) {
            *c = k;
        }
        let (pts, cells) = crate::geometry::mesh::refine(d, &nodes, &[cell], 2);
        cells
            .iter()
            .map(|c| {
                c[..=d]
                    .iter()
                    .map(|&v| {
                        let p = pts[v];
                        let mut b = [0.0; 4];
                        let s: f64 = p[..d].iter().sum();
                        b[0] = 1.0 - s;
                        b[1..=d].copy_from_slice(&p[..d]);
                        b
                    })
                    .collect()
            })
            .collect()
    };
    if dim == 2 {
        C2.get_or_init(|| build(2))
    } else {
        C3.get_or_init(|| build(3))
    }
}

/// Integrates `f` over the whole mesh. Cells near `near` (closer than
/// `ratio` times their diameter) are subdivided recursively up to `depth`
/// levels before applying a Duffy rule of order `n`.
pub fn integrate<F>(mesh: &Mesh, f: F, near: Option<Point>, n: usize, depth: usize) -> f64
where
    F: Fn(&Point) -> f64 + Sync,
{
    let rule = duffy_rule(mesh.dim, n);
    let parts: Vec<f64> = (0..mesh.cells.len())
        .into_par_iter()
        .map(|c| {
            let verts: Vec<Point> = mesh.cell(c).iter().map(|&v| mesh.nodes[v]).collect();
            let vol = mesh.cell_geometry(c).volume;
            integrate_simplex(mesh.dim, &verts, vol, &f, near.as_ref(), &rule, depth)
        })
        .collect();
    parts.iter().sum()
}

pub(crate) fn integrate_simplex<F>(
    dim: usize,
    verts: &[Point],
    vol: f64,
    f: &F,
    near: Option<&Point>,
    rule: &Rule,
    depth: usize,
) -> f64
where
    F: Fn(&Point) -> f64,
{
    if let (Some(y), true) = (near, depth > 0) {
        let mut diam: f64 = 0.0;
        let mut dist = f64::INFINITY;
        for a in 0..verts.len() {
            dist = dist.min(norm(&sub(&verts[a], y)));
            for b in a + 1..verts.len() {
                diam = diam.max(norm(&sub(&verts[a], &verts[b])));
            }
        }
        if dist < 1.5 * diam {
            let mut total = 0.0;
            let kids = children(dim);
            for kid in kids {
                let kv: Vec<Point> = kid.iter().map(|b| bary_to_phys(verts, b)).collect();
                total += integrate_simplex(dim, &kv, vol / kids.len() as f64, f, near, rule, depth - 1);
            }
            return total;
        }
    }
    let mut s = 0.0;
    for (b, w) in rule.points.iter().zip(&rule.weights) {
        s += w * f(&bary_to_phys(verts, b));
    }
    s * vol
}

#[inline]
pub fn bary_to_phys(verts: &[Point], b: &[f64; 4]) -> Point {
    let mut p = [0.0; 3];
    for (k, v) in verts.iter().enumerate() {
        for r in 0..3 {
            p[r] += b[k] * v[r];
        }
    }
    p
}

#[cfg(test)]
mod tests {
    use super::*;

    fn integrate_monomial(rule: &Rule, e: [i32; 4]) -> f64 {
        rule.points
            .iter()
            .zip(&rule.weights)
            .map(|(p, w)| w * (0..4).map(|k| p[k].powi(e[k])).product::<f64>())
            .sum()
    }

    fn fact(n: i32) -> f64 {
        (1..=n).map(|k| k as f64).product()
    }

    // ∫ λ^e over the simplex / volume = d! Π e_k! / (d + Σe)!
    fn exact(dim: usize, e: [i32; 4]) -> f64 {
        let s: i32 = e.iter().sum();
        fact(dim as i32) * e.iter().map(|&k| fact(k)).product::<f64>() / fact(dim as i32 + s)
    }

    #[test]
    fn degree_two_rules_are_exact() {
        for dim in [2usize, 3] {
            let r = simplex_rule(dim, 2);
            for e in [[2, 0, 0, 0], [1, 1, 0, 0], [0, 1, 1, 0], [0, 0, 2, 0]] {
                assert!((integrate_monomial(r, e) - exact(dim, e)).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn duffy_rules_are_exact_to_high_degree() {
        for dim in [2usize, 3] {
            let r = duffy_rule(dim, 5);
            let s: f64 = r.weights.iter().sum();
            assert!((s - 1.0).abs() < 1e-13);
            for e in [[3, 2, 1, 0], [0, 4, 0, 2], [1, 1, 1, 1]] {
                let mut e = e;
                if dim == 2 {
                    e[3] = 0;
                }
                assert!((integrate_monomial(&r, e) - exact(dim, e)).abs() < 1e-13);
            }
        }
    }
}
