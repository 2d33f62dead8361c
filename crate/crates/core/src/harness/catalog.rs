//! Builtin catalog of named closed-form laws, coefficient fields and
//! boundary data. Entries are written `name` or `name:p1,p2,...`.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::geometry::{BoundaryFunction, Mesh};
use crate::pde::{CoefficientField, DriftLaw, QuasilinearLaw, SemilinearLaw};

/// A catalog entry split into its name and numeric parameters.
#[derive(Clone, Debug, PartialEq)]
pub struct Entry {
    pub name: String,
    pub params: Vec<f64>,
}

impl Entry {
    pub fn parse(text: &str) -> Result<Self> {
        let text = text.trim();
        let (name, rest) = match text.split_once(':') {
            Some((n, r)) => (n.trim(), Some(r)),
            None => (text, None),
        };
        if name.is_empty() {
            return Err(Error::Config(format!("empty catalog entry '{text}'")));
        }
        let params = match rest {
            None => Vec::new(),
            Some(r) => r
                .split(',')
                .map(|p| {
                    p.trim()
                        .parse::<f64>()
                        .map_err(|_| Error::Config(format!("parameter '{p}' of '{name}' is not a number")))
                })
                .collect::<Result<_>>()?,
        };
        Ok(Entry { name: name.to_string(), params })
    }

    fn expect(&self, n: usize) -> Result<&[f64]> {
        if self.params.len() != n {
            return Err(Error::Config(format!(
                "'{}' takes {n} parameter(s), got {}",
                self.name,
                self.params.len()
            )));
        }
        Ok(&self.params)
    }
}

pub fn quasilinear(text: &str) -> Result<QuasilinearLaw> {
    let e = Entry::parse(text)?;
    Ok(match e.name.as_str() {
        "constant" => QuasilinearLaw::constant(e.expect(1)?[0]),
        "affine" => {
            let p = e.expect(2)?;
            QuasilinearLaw::affine(p[0], p[1])
        }
        "sine" => {
            let p = e.expect(2)?;
            QuasilinearLaw::sine(p[0], p[1])
        }
        "one_plus_square" => {
            e.expect(0)?;
            QuasilinearLaw::one_plus_square()
        }
        n => return Err(Error::Config(format!("unknown γ law '{n}' (constant, affine, sine, one_plus_square)"))),
    })
}

pub fn drift(text: &str, dim: usize) -> Result<DriftLaw> {
    let e = Entry::parse(text)?;
    Ok(match e.name.as_str() {
        "zero" => {
            e.expect(0)?;
            DriftLaw::zero()
        }
        "radial_sine" => DriftLaw::radial_sine(e.expect(1)?[0], dim),
        "radial_linear" => DriftLaw::radial_linear(e.expect(1)?[0], dim),
        n => return Err(Error::Config(format!("unknown drift law '{n}' (zero, radial_sine, radial_linear)"))),
    })
}

pub fn semilinear(text: &str) -> Result<SemilinearLaw> {
    let e = Entry::parse(text)?;
    Ok(match e.name.as_str() {
        "zero" => {
            e.expect(0)?;
            SemilinearLaw::zero()
        }
        "linear" => SemilinearLaw::linear(e.expect(1)?[0]),
        "cubic" => {
            e.expect(0)?;
            SemilinearLaw::cubic()
        }
        "linear_plus_cubic" => {
            e.expect(0)?;
            SemilinearLaw::linear_plus_cubic()
        }
        n => return Err(Error::Config(format!("unknown G law '{n}' (zero, linear, cubic, linear_plus_cubic)"))),
    })
}

pub fn coefficient(text: &str, dim: usize) -> Result<CoefficientField> {
    let e = Entry::parse(text)?;
    Ok(match e.name.as_str() {
        "identity" => {
            e.expect(0)?;
            CoefficientField::identity(dim)
        }
        "diag" => CoefficientField::diagonal(e.expect(dim)?),
        "scalar_linear" => {
            let c = e.expect(1)?[0];
            CoefficientField::scalar(dim, format!("1+{c}*x1"), move |x| 1.0 + c * x[0])
        }
        n => return Err(Error::Config(format!("unknown coefficient '{n}' (identity, diag, scalar_linear)"))),
    })
}

/// Boundary data on the boundary nodes of `mesh`.
pub fn boundary_data(text: &str, mesh: &Mesh) -> Result<BoundaryFunction> {
    let e = Entry::parse(text)?;
    Ok(match e.name.as_str() {
        "constant" => BoundaryFunction::constant(mesh, e.expect(1)?[0]),
        "coordinate" => {
            let p = e.expect(2)?;
            let k = p[0] as usize;
            if p[0] != k as f64 || k >= mesh.dim {
                return Err(Error::Config(format!("coordinate index {} out of range", p[0])));
            }
            BoundaryFunction::from_fn(mesh, |x| p[1] * x[k])
        }
        "fourier" => {
            if mesh.dim != 2 {
                return Err(Error::Config("fourier boundary data needs n = 2".into()));
            }
            let p = e.expect(2)?;
            BoundaryFunction::from_fn(mesh, |x| p[1] * (p[0] * x[1].atan2(x[0])).cos())
        }
        "manufactured" => {
            e.expect(0)?;
            BoundaryFunction::from_fn(mesh, |x| x[0].sin() * x[1].cos())
        }
        n => {
            return Err(Error::Config(format!(
                "unknown boundary data '{n}' (constant, coordinate, fourier, manufactured)"
            )))
        }
    })
}

/// Half angle written as a number or `full` (the whole boundary).
pub fn half_angle(text: &str) -> Result<f64> {
    match text.trim() {
        "full" => Ok(PI),
        t => t.parse().map_err(|_| Error::Config(format!("half angle '{t}' is neither a number nor 'full'"))),
    }
}
