//! P1 finite element assembly with cached per-cell geometry.

use rayon::prelude::*;

use crate::fem::quadrature::{bary_to_phys, simplex_rule, Rule};
use crate::geometry::Mesh;
use crate::linalg::{dot, mat_vec, min_sym_eigenvalue, Csr, Mat3, Point};
use crate::pde::fields::CoefficientField;
use crate::pde::laws::{DriftLaw, QuasilinearLaw, SemilinearLaw};

/// Source term f(x).
pub type Source = dyn Fn(&Point) -> f64 + Send + Sync;
/// Vector field B(x).
pub type VectorField = dyn Fn(&Point) -> Point + Send + Sync;

#[derive(Clone, Debug)]
pub struct CellData {
    pub volume: f64,
    pub grads: [Point; 4],
    pub qpts: [Point; 4],
    pub a_q: [Mat3; 4],
    /// Σ_q w_q a(x_q): the cell average of a under the degree-2 rule.
    pub a_bar: Mat3,
    pub diameter: f64,
}

/// Assembly context for one mesh and one coefficient field.
pub struct Assembler<'m> {
    pub mesh: &'m Mesh,
    pub a: CoefficientField,
    pub cells: Vec<CellData>,
    pub lumped: Vec<f64>,
    rule: &'static Rule,
}

/// Nonlinear terms of −∇·(s γ(u) a∇u) + D(x,u)·∇u + G(u) − f.
#[derive(Clone, Copy, Default)]
pub struct NonlinearTerms<'a> {
    pub scale: f64,
    pub gamma: Option<&'a QuasilinearLaw>,
    pub drift: Option<&'a DriftLaw>,
    pub reaction: Option<&'a SemilinearLaw>,
    pub source: Option<&'a Source>,
}

impl<'m> Assembler<'m> {
    pub fn new(mesh: &'m Mesh, a: &CoefficientField) -> Self {
        let rule = simplex_rule(mesh.dim, 2);
        let cells: Vec<CellData> = (0..mesh.cells.len())
            .into_par_iter()
            .map(|c| {
                let g = mesh.cell_geometry(c);
                let verts: Vec<Point> = mesh.cell(c).iter().map(|&v| mesh.nodes[v]).collect();
                let mut qpts = [[0.0; 3]; 4];
                let mut a_q = [[[0.0; 3]; 3]; 4];
                let mut a_bar = [[0.0; 3]; 3];
                for (q, b) in rule.points.iter().enumerate() {
                    qpts[q] = bary_to_phys(&verts, b);
                    a_q[q] = a.eval(&qpts[q]);
                    for i in 0..3 {
                        for j in 0..3 {
                            a_bar[i][j] += rule.weights[q] * a_q[q][i][j];
                        }
                    }
                }
                CellData { volume: g.volume, grads: g.grads, qpts, a_q, a_bar, diameter: mesh.cell_diameter(c) }
            })
            .collect();
        Assembler { mesh, a: a.clone(), cells, lumped: mesh.lumped_mass(), rule }
    }

    pub fn dim(&self) -> usize {
        self.mesh.dim
    }

    fn nq(&self) -> usize {
        self.rule.points.len()
    }

    /// Stiffness matrix s ∫ a∇φⱼ·∇φᵢ.
    pub fn stiffness(&self, s: f64) -> Csr {
        let d = self.dim();
        let n = d + 1;
        let locals: Vec<Vec<(usize, usize, f64)>> = self
            .cells
            .par_iter()
            .enumerate()
            .map(|(c, cd)| {
                let v = self.mesh.cell(c);
                let mut out = Vec::with_capacity(n * n);
                for j in 0..n {
                    let ag = mat_vec(&cd.a_bar, &cd.grads[j], d);
                    for i in 0..n {
                        out.push((v[i], v[j], s * cd.volume * dot(&ag, &cd.grads[i])));
                    }
                }
                out
            })
            .collect();
        let nn = self.mesh.n_nodes();
        Csr::from_triplets(nn, nn, locals.into_iter().flatten().collect())
    }

    /// Plain Laplacian stiffness ∫ ∇φⱼ·∇φᵢ (ignores a).
    pub fn laplacian(&self) -> Csr {
        let d = self.dim();
        let n = d + 1;
        let mut trips = Vec::with_capacity(self.cells.len() * n * n);
        for (c, cd) in self.cells.iter().enumerate() {
            let v = self.mesh.cell(c);
            for j in 0..n {
                for i in 0..n {
                    trips.push((v[i], v[j], cd.volume * dot(&cd.grads[j], &cd.grads[i])));
                }
            }
        }
        let nn = self.mesh.n_nodes();
        Csr::from_triplets(nn, nn, trips)
    }

    /// Consistent mass matrix ∫ φⱼ φᵢ.
    pub fn mass(&self) -> Csr {
        let d = self.dim();
        let n = d + 1;
        let denom = ((d + 1) * (d + 2)) as f64;
        let mut trips = Vec::with_capacity(self.cells.len() * n * n);
        for (c, cd) in self.cells.iter().enumerate() {
            let v = self.mesh.cell(c);
            for j in 0..n {
                for i in 0..n {
                    let f = if i == j { 2.0 } else { 1.0 };
                    trips.push((v[i], v[j], cd.volume * f / denom));
                }
            }
        }
        let nn = self.mesh.n_nodes();
        Csr::from_triplets(nn, nn, trips)
    }

    /// Convection ∫ (B·∇φⱼ) φᵢ with the degree-2 rule.
    pub fn convection(&self, b: &VectorField) -> Csr {
        let d = self.dim();
        let n = d + 1;
        let nq = self.nq();
        let rule = self.rule;
        let locals: Vec<Vec<(usize, usize, f64)>> = self
            .cells
            .par_iter()
            .enumerate()
            .map(|(c, cd)| {
                let v = self.mesh.cell(c);
                let mut out = Vec::with_capacity(n * n);
                let bq: Vec<Point> = (0..nq).map(|q| b(&cd.qpts[q])).collect();
                for j in 0..n {
                    for i in 0..n {
                        let mut s = 0.0;
                        for q in 0..nq {
                            s += rule.weights[q] * dot(&bq[q], &cd.grads[j]) * rule.points[q][i];
                        }
                        out.push((v[i], v[j], cd.volume * s));
                    }
                }
                out
            })
            .collect();
        let nn = self.mesh.n_nodes();
        Csr::from_triplets(nn, nn, locals.into_iter().flatten().collect())
    }

    /// Lumped zeroth-order term: diagonal mᵢ qᵢ.
    pub fn lumped_potential(&self, q: &[f64]) -> Csr {
        let nn = self.mesh.n_nodes();
        Csr::from_triplets(nn, nn, (0..nn).map(|i| (i, i, self.lumped[i] * q[i])).collect())
    }

    /// Load vector ∫ f φᵢ.
    pub fn load(&self, f: &Source) -> Vec<f64> {
        let n = self.dim() + 1;
        let nq = self.nq();
        let rule = self.rule;
        let locals: Vec<[f64; 4]> = self
            .cells
            .par_iter()
            .map(|cd| {
                let mut out = [0.0; 4];
                for q in 0..nq {
                    let fq = f(&cd.qpts[q]) * rule.weights[q] * cd.volume;
                    for (i, o) in out.iter_mut().enumerate().take(n) {
                        *o += fq * rule.points[q][i];
                    }
                }
                out
            })
            .collect();
        let mut l = vec![0.0; self.mesh.n_nodes()];
        for (c, loc) in locals.iter().enumerate() {
            for (i, &v) in self.mesh.cell(c).iter().enumerate() {
                l[v] += loc[i];
            }
        }
        l
    }

    /// Largest cell Péclet number |B| h / (2 s λ_min(a)).
    pub fn max_peclet<F: Fn(&Point) -> Point + Sync + ?Sized>(&self, s: f64, b: &F) -> f64 {
        let d = self.dim();
        self.cells
            .iter()
            .map(|cd| {
                let mut bmax: f64 = 0.0;
                for q in 0..self.nq() {
                    bmax = bmax.max(crate::linalg::norm(&b(&cd.qpts[q])));
                }
                let lam = min_sym_eigenvalue(&cd.a_bar, d);
                bmax * cd.diameter / (2.0 * s * lam)
            })
            .fold(0.0, f64::max)
    }

    /// Residual of the nonlinear weak form at `u` and optionally its
    /// Jacobian.
    pub fn nonlinear(&self, u: &[f64], t: &NonlinearTerms<'_>, want_jac: bool) -> (Vec<f64>, Option<Csr>) {
        let d = self.dim();
        let n = d + 1;
        let nq = self.nq();
        let rule = self.rule;
        let s = t.scale;
        let locals: Vec<([f64; 4], Vec<f64>)> = self
            .cells
            .par_iter()
            .enumerate()
            .map(|(c, cd)| {
                let v = self.mesh.cell(c);
                let mut grad_u = [0.0; 3];
                for k in 1..n {
                    let du = u[v[k]] - u[v[0]];
                    for r in 0..d {
                        grad_u[r] += du * cd.grads[k][r];
                    }
                }
                let mut res = [0.0; 4];
                let mut jac = if want_jac { vec![0.0; n * n] } else { Vec::new() };
                for q in 0..nq {
                    let lam = &rule.points[q];
                    let wv = rule.weights[q] * cd.volume;
                    let uq: f64 = (0..n).map(|k| lam[k] * u[v[k]]).sum();
                    let (gq, dgq) = match t.gamma {
                        Some(g) => (g.gamma(uq), g.dgamma(uq)),
                        None => (1.0, 0.0),
                    };
                    let flux = mat_vec(&cd.a_q[q], &grad_u, d);
                    let (dq, dtq) = match t.drift {
                        Some(dl) if !dl.is_zero() => (dl.eval(&cd.qpts[q], uq), dl.dt(&cd.qpts[q], uq)),
                        _ => ([0.0; 3], [0.0; 3]),
                    };
                    let conv = dot(&dq, &grad_u);
                    let fq = t.source.map(|f| f(&cd.qpts[q])).unwrap_or(0.0);
                    for i in 0..n {
                        res[i] += wv * (s * gq * dot(&flux, &cd.grads[i]) + (conv - fq) * lam[i]);
                    }
                    if want_jac {
                        let conv_t = dot(&dtq, &grad_u);
                        for j in 0..n {
                            let ag = mat_vec(&cd.a_q[q], &cd.grads[j], d);
                            let dgrad = dot(&dq, &cd.grads[j]);
                            for i in 0..n {
                                jac[i * n + j] += wv
                                    * (s * gq * dot(&ag, &cd.grads[i])
                                        + s * dgq * lam[j] * dot(&flux, &cd.grads[i])
                                        + dgrad * lam[i]
                                        + conv_t * lam[j] * lam[i]);
                            }
                        }
                    }
                }
                (res, jac)
            })
            .collect();
        let nn = self.mesh.n_nodes();
        let mut r = vec![0.0; nn];
        let mut trips = Vec::with_capacity(if want_jac { locals.len() * n * n + nn } else { 0 });
        for (c, (res, jac)) in locals.iter().enumerate() {
            let v = self.mesh.cell(c);
            for i in 0..n {
                r[v[i]] += res[i];
                if want_jac {
                    for j in 0..n {
                        trips.push((v[i], v[j], jac[i * n + j]));
                    }
                }
            }
        }
        if let Some(g) = t.reaction {
            for i in 0..nn {
                r[i] += self.lumped[i] * g.g(u[i]);
                if want_jac {
                    trips.push((i, i, self.lumped[i] * g.dg(u[i])));
                }
            }
        }
        let jac = want_jac.then(|| Csr::from_triplets(nn, nn, trips));
        (r, jac)
    }
}
