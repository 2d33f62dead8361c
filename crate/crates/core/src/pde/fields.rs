use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::geometry::Mesh;
use crate::linalg::{identity3, min_sym_eigenvalue, Mat3, Point};

type MatFn = Arc<dyn Fn(&Point) -> Mat3 + Send + Sync>;

/// Symmetric uniformly elliptic coefficient matrix field a(x).
#[derive(Clone)]
pub struct CoefficientField {
    pub name: String,
    pub dim: usize,
    f: MatFn,
    constant: Option<Mat3>,
}

impl fmt::Debug for CoefficientField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "CoefficientField({})", self.name)
    }
}

impl CoefficientField {
    pub fn identity(dim: usize) -> Self {
        Self::constant(identity3(dim), dim)
    }

    pub fn constant(m: Mat3, dim: usize) -> Self {
        CoefficientField { name: format!("const{:?}", m), dim, f: Arc::new(move |_| m), constant: Some(m) }
    }

    pub fn diagonal(d: &[f64]) -> Self {
        let mut m = [[0.0; 3]; 3];
        for (i, v) in d.iter().enumerate() {
            m[i][i] = *v;
        }
        let mut c = Self::constant(m, d.len());
        c.name = format!("diag{d:?}");
        c
    }

    /// a(x) = s(x)·I
    pub fn scalar(dim: usize, name: impl Into<String>, s: impl Fn(&Point) -> f64 + Send + Sync + 'static) -> Self {
        CoefficientField {
            name: name.into(),
            dim,
            f: Arc::new(move |x| {
                let v = s(x);
                let mut m = identity3(dim);
                for (i, row) in m.iter_mut().enumerate().take(dim) {
                    row[i] = v;
                }
                m
            }),
            constant: None,
        }
    }

    pub fn custom(dim: usize, name: impl Into<String>, f: impl Fn(&Point) -> Mat3 + Send + Sync + 'static) -> Self {
        CoefficientField { name: name.into(), dim, f: Arc::new(f), constant: None }
    }

    #[inline]
    pub fn eval(&self, x: &Point) -> Mat3 {
        (self.f)(x)
    }

    pub fn constant_value(&self) -> Option<Mat3> {
        self.constant
    }

    /// Smallest eigenvalue over the given points; rejects asymmetric or
    /// non-elliptic fields.
    pub fn ellipticity_floor_at(&self, points: &[Point]) -> Result<f64> {
        let d = self.dim;
        let mut floor = f64::INFINITY;
        for x in points {
            let m = self.eval(x);
            for i in 0..d {
                for j in 0..i {
                    if m[i][j] != m[j][i] {
                        return Err(Error::Coefficient(format!(
                            "{} is not symmetric at {:?}",
                            self.name, x
                        )));
                    }
                }
            }
            floor = floor.min(min_sym_eigenvalue(&m, d));
        }
        if !(floor > 0.0) {
            return Err(Error::Coefficient(format!(
                "{} is not elliptic: smallest eigenvalue {floor}",
                self.name
            )));
        }
        Ok(floor)
    }
}

/// Minimum eigenvalue of `a` over the degree-2 quadrature points of `mesh`.
pub fn check_ellipticity(a: &CoefficientField, mesh: &Mesh) -> Result<f64> {
    if a.dim != mesh.dim {
        return Err(Error::Mismatch("coefficient and mesh dimensions differ".into()));
    }
    let rule = crate::fem::quadrature::simplex_rule(mesh.dim, 2);
    let mut pts = Vec::with_capacity(mesh.cells.len() * rule.points.len());
    for c in 0..mesh.cells.len() {
        let verts: Vec<Point> = mesh.cell(c).iter().map(|&v| mesh.nodes[v]).collect();
        for b in &rule.points {
            pts.push(crate::fem::quadrature::bary_to_phys(&verts, b));
        }
    }
    a.ellipticity_floor_at(&pts)
}
