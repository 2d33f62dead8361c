use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::linalg::{det, dot, inverse, mat_vec, sub, Mat3, Point};
use crate::pde::CoefficientField;

/// The quadratic form frozen at a base point y: ρ(x,y)² = B(x−y)·(x−y)
/// with B = a(y)⁻¹, so that at a = I it is the Euclidean distance.
#[derive(Clone, Debug)]
pub struct FrozenMetric {
    pub y: Point,
    pub dim: usize,
    pub form: Mat3,
    pub sqrt_det: f64,
}

impl FrozenMetric {
    pub fn new(a: &CoefficientField, y: Point) -> Result<Self> {
        let dim = a.dim;
        let ay = a.eval(&y);
        let d = det(&ay, dim);
        let form = inverse(&ay, dim)
            .filter(|_| d > 0.0)
            .ok_or_else(|| Error::Coefficient(format!("a({y:?}) is not positive definite")))?;
        if crate::linalg::min_sym_eigenvalue(&ay, dim) <= 0.0 {
            return Err(Error::Coefficient(format!("a({y:?}) is not positive definite")));
        }
        Ok(FrozenMetric { y, dim, form, sqrt_det: d.sqrt() })
    }

    pub fn rho(&self, x: &Point) -> f64 {
        let r = sub(x, &self.y);
        dot(&mat_vec(&self.form, &r, self.dim), &r).max(0.0).sqrt()
    }
}

/// Frozen-coefficient fundamental solution H(x,y) = f_n(ρ(x,y)):
/// −ln ρ /(2π√det a(y)) in the plane and ρ^{2−n}/((n−2)d_n√det a(y)) for
/// n = 3. With B = a(y)⁻¹ it is exact for constant a.
#[derive(Clone, Debug)]
pub struct SingularKernel {
    pub metric: FrozenMetric,
    pub dim: usize,
    /// Area of the unit sphere in ℝⁿ.
    pub d_n: f64,
    c: f64,
}

impl SingularKernel {
    pub fn new(a: &CoefficientField, y: Point) -> Result<Self> {
        let dim = a.dim;
        if !(dim == 2 || dim == 3) {
            return Err(Error::Unsupported(format!("dimension {dim}")));
        }
        let metric = FrozenMetric::new(a, y)?;
        let d_n = if dim == 2 { 2.0 * PI } else { 4.0 * PI };
        let c = if dim == 2 { 1.0 / (d_n * metric.sqrt_det) } else { 1.0 / ((dim as f64 - 2.0) * d_n * metric.sqrt_det) };
        Ok(SingularKernel { metric, dim, d_n, c })
    }

    pub fn y(&self) -> Point {
        self.metric.y
    }

    fn rho_checked(&self, x: &Point) -> Result<f64> {
        let r = self.metric.rho(x);
        if r <= 1e-300 {
            Err(Error::Singularity(format!("kernel evaluated at its pole {:?}", self.metric.y)))
        } else {
            Ok(r)
        }
    }

    pub fn h(&self, x: &Point) -> Result<f64> {
        let r = self.rho_checked(x)?;
        Ok(self.h_of_rho(r))
    }

    fn h_of_rho(&self, r: f64) -> f64 {
        if self.dim == 2 {
            -self.c * r.ln()
        } else {
            self.c / r
        }
    }

    /// g(ρ) = f′(ρ)/ρ, so ∇H = g(ρ) B(x−y).
    fn g_of_rho(&self, r: f64) -> (f64, f64) {
        if self.dim == 2 {
            (-self.c / (r * r), 2.0 * self.c / (r * r * r * r))
        } else {
            (-self.c / (r * r * r), 3.0 * self.c / (r * r * r * r * r))
        }
    }

    pub fn grad(&self, x: &Point) -> Result<Point> {
        let r = self.rho_checked(x)?;
        let br = mat_vec(&self.metric.form, &sub(x, &self.metric.y), self.dim);
        let (g, _) = self.g_of_rho(r);
        Ok([g * br[0], g * br[1], g * br[2]])
    }

    /// ∂_{x_k} H (k zero-based).
    pub fn dk(&self, x: &Point, k: usize) -> Result<f64> {
        Ok(self.grad(x)?[k])
    }

    pub fn hessian(&self, x: &Point) -> Result<Mat3> {
        let r = self.rho_checked(x)?;
        let br = mat_vec(&self.metric.form, &sub(x, &self.metric.y), self.dim);
        let (g, gp_over_r) = self.g_of_rho(r);
        let mut m = [[0.0; 3]; 3];
        for i in 0..self.dim {
            for j in 0..self.dim {
                m[i][j] = g * self.metric.form[i][j] + gp_over_r * br[i] * br[j];
            }
        }
        Ok(m)
    }

    /// Infallible evaluation for points known to avoid the pole.
    pub fn h_at(&self, x: &Point) -> f64 {
        self.h_of_rho(self.metric.rho(x).max(1e-300))
    }

    pub fn grad_at(&self, x: &Point) -> Point {
        self.grad(x).unwrap_or([0.0; 3])
    }
}

/// ∮_{|x−y|=r} a∇H·ν dσ by tensor quadrature (constant a).
pub fn flux_through_sphere(kernel: &SingularKernel, a: &Mat3, r: f64, n: usize) -> f64 {
    let y = kernel.y();
    let dim = kernel.dim;
    let mut total = 0.0;
    if dim == 2 {
        for i in 0..n {
            let t = 2.0 * PI * (i as f64 + 0.5) / n as f64;
            let nu = [t.cos(), t.sin(), 0.0];
            let x = [y[0] + r * nu[0], y[1] + r * nu[1], 0.0];
            let ag = mat_vec(a, &kernel.grad_at(&x), 2);
            total += dot(&ag, &nu) * r * 2.0 * PI / n as f64;
        }
    } else {
        let (gx, gw) = crate::fem::quadrature::gauss_legendre(n);
        for (ct01, w) in gx.iter().zip(&gw) {
            let ct = 2.0 * ct01 - 1.0;
            let st = (1.0 - ct * ct).max(0.0).sqrt();
            for j in 0..2 * n {
                let p = 2.0 * PI * (j as f64 + 0.5) / (2 * n) as f64;
                let nu = [st * p.cos(), st * p.sin(), ct];
                let x = [y[0] + r * nu[0], y[1] + r * nu[1], y[2] + r * nu[2]];
                let ag = mat_vec(a, &kernel.grad_at(&x), 3);
                total += dot(&ag, &nu) * r * r * 2.0 * w * 2.0 * PI / (2 * n) as f64;
            }
        }
    }
    total
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kernel_values() {
        let k3 = SingularKernel::new(&CoefficientField::identity(3), [0.0; 3]).unwrap();
        assert!((k3.h(&[0.5, 0.0, 0.0]).unwrap() - 1.0 / (4.0 * PI * 0.5)).abs() < 1e-14);
        let k2 = SingularKernel::new(&CoefficientField::identity(2), [0.0; 3]).unwrap();
        assert_eq!(k2.h(&[1.0, 0.0, 0.0]).unwrap(), 0.0);
        assert!(k2.h(&[0.0; 3]).is_err());
    }

    #[test]
    fn gradient_and_hessian_match_differences() {
        let a = CoefficientField::diagonal(&[2.0, 1.0, 0.5]);
        let k = SingularKernel::new(&a, [0.1, -0.2, 0.3]).unwrap();
        let x = [0.7, 0.4, -0.1];
        let e = 1e-5;
        let g = k.grad(&x).unwrap();
        let hs = k.hessian(&x).unwrap();
        for i in 0..3 {
            let mut xp = x;
            let mut xm = x;
            xp[i] += e;
            xm[i] -= e;
            let fd = (k.h_at(&xp) - k.h_at(&xm)) / (2.0 * e);
            assert!((fd - g[i]).abs() < 1e-7 * (1.0 + g[i].abs()));
            let gp = k.grad_at(&xp);
            let gm = k.grad_at(&xm);
            for j in 0..3 {
                let fd2 = (gp[j] - gm[j]) / (2.0 * e);
                assert!((fd2 - hs[j][i]).abs() < 1e-5 * (1.0 + hs[j][i].abs()));
            }
        }
    }

    #[test]
    fn unit_flux() {
        for dim in [2, 3] {
            let d = if dim == 2 { vec![2.0, 0.7] } else { vec![2.0, 0.7, 1.3] };
            let a = CoefficientField::diagonal(&d);
            let k = SingularKernel::new(&a, [0.0; 3]).unwrap();
            let am = a.eval(&[0.0; 3]);
            for r in [0.05, 0.3, 1.0] {
                let f = flux_through_sphere(&k, &am, r, 64);
                assert!((f + 1.0).abs() < 1e-6, "dim {dim} r {r} flux {f}");
            }
        }
    }
}
