//! Spectral H^{±1/2} norms on the boundary via the generalized eigenproblem
//! of the boundary Laplace–Beltrami stiffness and mass matrices.

use faer::Mat;

use crate::error::{Error, Result};
use crate::geometry::Mesh;
use crate::linalg::{cross, dot, generalized_sym_eigen, norm, sub};

/// Eigen-decomposed boundary space: S_b v = λ M_b v with Vᵀ M_b V = I.
pub struct FractionalSpace {
    pub n: usize,
    pub mass: Mat<f64>,
    pub stiffness: Mat<f64>,
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: Mat<f64>,
    /// M V: maps eigen-coefficients to dual vectors.
    mv: Mat<f64>,
}

/// Boundary P1 mass and stiffness matrices (dense, boundary order).
pub fn boundary_matrices(mesh: &Mesh) -> (Mat<f64>, Mat<f64>) {
    let nb = mesh.n_boundary();
    let mut m = Mat::<f64>::zeros(nb, nb);
    let mut s = Mat::<f64>::zeros(nb, nb);
    for f in 0..mesh.bfacets.len() {
        let v = mesh.facet(f);
        let idx: Vec<usize> = v.iter().map(|&i| mesh.boundary_pos[i]).collect();
        let p: Vec<_> = v.iter().map(|&i| mesh.nodes[i]).collect();
        if mesh.dim == 2 {
            let l = norm(&sub(&p[1], &p[0]));
            for a in 0..2 {
                for b in 0..2 {
                    m[(idx[a], idx[b])] += l * if a == b { 1.0 / 3.0 } else { 1.0 / 6.0 };
                    s[(idx[a], idx[b])] += if a == b { 1.0 / l } else { -1.0 / l };
                }
            }
        } else {
            let e1 = sub(&p[1], &p[0]);
            let e2 = sub(&p[2], &p[0]);
            let area = 0.5 * norm(&cross(&e1, &e2));
            // surface gradients of barycentric functions: edges opposite
            let edges = [sub(&p[2], &p[1]), sub(&p[0], &p[2]), sub(&p[1], &p[0])];
            for a in 0..3 {
                for b in 0..3 {
                    m[(idx[a], idx[b])] += area * if a == b { 1.0 / 6.0 } else { 1.0 / 12.0 };
                    s[(idx[a], idx[b])] += dot(&edges[a], &edges[b]) / (4.0 * area);
                }
            }
        }
    }
    (m, s)
}

impl FractionalSpace {
    pub fn new(mesh: &Mesh) -> Result<Self> {
        let (mass, stiffness) = boundary_matrices(mesh);
        let (eigenvalues, eigenvectors) = generalized_sym_eigen(&stiffness, &mass)
            .map_err(|_| Error::Gram("boundary mass matrix is not SPD (degenerate boundary mesh)".into()))?;
        let eigenvalues: Vec<f64> = eigenvalues.into_iter().map(|l| l.max(0.0)).collect();
        let mv = &mass * &eigenvectors;
        Ok(FractionalSpace { n: mesh.n_boundary(), mass, stiffness, eigenvalues, eigenvectors, mv })
    }

    fn weights(&self, order: f64) -> Vec<f64> {
        self.eigenvalues.iter().map(|l| (1.0 + l).powf(order)).collect()
    }

    /// Eigen-coefficients c = Vᵀ M f of a nodal function.
    pub fn coefficients(&self, f: &[f64]) -> Vec<f64> {
        (0..self.n).map(|k| (0..self.n).map(|i| self.mv[(i, k)] * f[i]).sum()).collect()
    }

    /// Eigen-coefficients c = Vᵀ r of a dual vector.
    pub fn dual_coefficients(&self, r: &[f64]) -> Vec<f64> {
        (0..self.n)
            .map(|k| (0..self.n).map(|i| self.eigenvectors[(i, k)] * r[i]).sum())
            .collect()
    }

    /// ‖f‖_{H^{1/2}} of a nodal boundary function.
    pub fn norm_plus(&self, f: &[f64]) -> f64 {
        let c = self.coefficients(f);
        c.iter().zip(self.weights(0.5)).map(|(c, w)| w * c * c).sum::<f64>().sqrt()
    }

    /// ‖r‖_{H^{-1/2}} of a dual vector (functional).
    pub fn norm_minus(&self, r: &[f64]) -> f64 {
        let c = self.dual_coefficients(r);
        c.iter().zip(self.weights(-0.5)).map(|(c, w)| w * c * c).sum::<f64>().sqrt()
    }

    /// Order ±1/2 norm: nodal functions for +1/2, dual vectors for −1/2.
    pub fn norm(&self, v: &[f64], order: f64) -> Result<f64> {
        if v.len() != self.n {
            return Err(Error::Mismatch("vector length differs from the boundary size".into()));
        }
        if order == 0.5 {
            Ok(self.norm_plus(v))
        } else if order == -0.5 {
            Ok(self.norm_minus(v))
        } else {
            Err(Error::OutOfRange(format!("fractional order must be ±1/2, got {order}")))
        }
    }

    /// Riesz map H^{1/2} → H^{-1/2}: r = M V (1+Λ)^{1/2} Vᵀ M f.
    pub fn riesz(&self, f: &[f64]) -> Vec<f64> {
        let c = self.coefficients(f);
        let w = self.weights(0.5);
        (0..self.n)
            .map(|i| (0..self.n).map(|k| self.mv[(i, k)] * w[k] * c[k]).sum())
            .collect()
    }

    /// Gram matrix ⟨dᵢ, dⱼ⟩_{H^{1/2}} for nodal functions.
    pub fn gram_plus(&self, funcs: &[Vec<f64>]) -> Mat<f64> {
        let w = self.weights(0.5);
        let coeffs: Vec<Vec<f64>> = funcs.iter().map(|f| self.coefficients(f)).collect();
        let k = funcs.len();
        Mat::from_fn(k, k, |i, j| (0..self.n).map(|m| w[m] * coeffs[i][m] * coeffs[j][m]).sum())
    }

    /// Gram matrix ⟨rᵢ, rⱼ⟩_{H^{-1/2}} for dual vectors.
    pub fn gram_minus(&self, duals: &[Vec<f64>]) -> Mat<f64> {
        let w = self.weights(-0.5);
        let coeffs: Vec<Vec<f64>> = duals.iter().map(|r| self.dual_coefficients(r)).collect();
        let k = duals.len();
        Mat::from_fn(k, k, |i, j| (0..self.n).map(|m| w[m] * coeffs[i][m] * coeffs[j][m]).sum())
    }
}
