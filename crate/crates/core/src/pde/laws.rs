//! Builtin catalog of closed-form laws γ, D and G with their derivatives.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::linalg::{scale, Point};

type Scalar = Arc<dyn Fn(f64) -> f64 + Send + Sync>;
type Vector = Arc<dyn Fn(&Point, f64) -> Point + Send + Sync>;
type VectorDiv = Arc<dyn Fn(&Point, f64) -> f64 + Send + Sync>;

/// Quasilinear diffusion law γ with γ′ and γ″.
#[derive(Clone)]
pub struct QuasilinearLaw {
    pub name: String,
    g: Scalar,
    dg: Scalar,
    d2g: Scalar,
    constant: Option<f64>,
}

impl fmt::Debug for QuasilinearLaw {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "QuasilinearLaw({})", self.name)
    }
}

impl QuasilinearLaw {
    pub fn new(
        name: impl Into<String>,
        g: impl Fn(f64) -> f64 + Send + Sync + 'static,
        dg: impl Fn(f64) -> f64 + Send + Sync + 'static,
        d2g: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        QuasilinearLaw { name: name.into(), g: Arc::new(g), dg: Arc::new(dg), d2g: Arc::new(d2g), constant: None }
    }

    pub fn constant(c: f64) -> Self {
        let mut l = Self::new(format!("const({c})"), move |_| c, |_| 0.0, |_| 0.0);
        l.constant = Some(c);
        l
    }

    /// γ(u) = 1 + u²
    pub fn one_plus_square() -> Self {
        Self::new("1+u^2", |u| 1.0 + u * u, |u| 2.0 * u, |_| 2.0)
    }

    /// γ(u) = c0 + c1 u
    pub fn affine(c0: f64, c1: f64) -> Self {
        Self::new(format!("{c0}+{c1}*u"), move |u| c0 + c1 * u, move |_| c1, |_| 0.0)
    }

    /// γ(u) = c + A sin u
    pub fn sine(c: f64, a: f64) -> Self {
        Self::new(format!("{c}+{a}*sin(u)"), move |u| c + a * u.sin(), move |u| a * u.cos(), move |u| -a * u.sin())
    }

    /// γ(u) + s·exp(-u²/2): a smooth bounded perturbation.
    pub fn perturbed_bump(&self, s: f64) -> Self {
        let (g, dg, d2g) = (self.g.clone(), self.dg.clone(), self.d2g.clone());
        Self::new(
            format!("{}+{s}*exp(-u^2/2)", self.name),
            move |u| g(u) + s * (-0.5 * u * u).exp(),
            move |u| dg(u) - s * u * (-0.5 * u * u).exp(),
            move |u| d2g(u) + s * (u * u - 1.0) * (-0.5 * u * u).exp(),
        )
    }

    /// t·γ
    pub fn scaled(&self, t: f64) -> Self {
        let (g, dg, d2g) = (self.g.clone(), self.dg.clone(), self.d2g.clone());
        let mut l = Self::new(format!("{t}*({})", self.name), move |u| t * g(u), move |u| t * dg(u), move |u| t * d2g(u));
        l.constant = self.constant.map(|c| c * t);
        l
    }

    #[inline]
    pub fn gamma(&self, t: f64) -> f64 {
        (self.g)(t)
    }
    #[inline]
    pub fn dgamma(&self, t: f64) -> f64 {
        (self.dg)(t)
    }
    #[inline]
    pub fn d2gamma(&self, t: f64) -> f64 {
        (self.d2g)(t)
    }

    pub fn constant_value(&self) -> Option<f64> {
        self.constant
    }

    /// Positivity and derivative consistency at the given samples; returns
    /// the smallest sampled value.
    pub fn check(&self, samples: &[f64]) -> Result<f64> {
        let mut floor = f64::INFINITY;
        for &t in samples {
            let v = self.gamma(t);
            if !(v > 0.0) {
                return Err(Error::LawViolation(format!("γ({t}) = {v} is not positive for law {}", self.name)));
            }
            floor = floor.min(v);
            for (f, df, what) in [(&self.g, &self.dg, "γ′"), (&self.dg, &self.d2g, "γ″")] {
                let e = 1e-5 * (1.0 + t.abs());
                let fd = (f(t + e) - f(t - e)) / (2.0 * e);
                let d = df(t);
                if (fd - d).abs() > 1e-6 * (1.0 + d.abs()) {
                    return Err(Error::LawViolation(format!("{what} of {} inconsistent at {t}", self.name)));
                }
            }
        }
        Ok(floor)
    }
}

/// Drift law D(x, t) with ∂ₜD and the spatial divergence ∇ₓ·D.
#[derive(Clone)]
pub struct DriftLaw {
    pub name: String,
    d: Vector,
    dt: Vector,
    div: VectorDiv,
    zero: bool,
    /// Claimed ∇ₓ·D ≤ 0 for every (x, t).
    pub admissible: bool,
}

impl fmt::Debug for DriftLaw {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "DriftLaw({})", self.name)
    }
}

impl DriftLaw {
    pub fn new(
        name: impl Into<String>,
        d: impl Fn(&Point, f64) -> Point + Send + Sync + 'static,
        dt: impl Fn(&Point, f64) -> Point + Send + Sync + 'static,
        div: impl Fn(&Point, f64) -> f64 + Send + Sync + 'static,
        admissible: bool,
    ) -> Self {
        DriftLaw { name: name.into(), d: Arc::new(d), dt: Arc::new(dt), div: Arc::new(div), zero: false, admissible }
    }

    pub fn zero() -> Self {
        let mut l = Self::new("0", |_, _| [0.0; 3], |_, _| [0.0; 3], |_, _| 0.0, true);
        l.zero = true;
        l
    }

    /// D(x, t) = -c t x in dimension `dim`; divergence -dim·c·t is
    /// non-positive only for c·t >= 0, so the law is not flagged admissible.
    pub fn radial_linear(c: f64, dim: usize) -> Self {
        let n = dim as f64;
        Self::new(
            format!("-{c}*u*x"),
            move |x, t| scale(x, -c * t),
            move |x, _| scale(x, -c),
            move |_, t| -n * c * t,
            false,
        )
    }

    /// D(x, t) = -c (1 + sin(t)/2) x, divergence -dim·c·(1 + sin t / 2) <= 0.
    pub fn radial_sine(c: f64, dim: usize) -> Self {
        let n = dim as f64;
        Self::new(
            format!("-{c}*(1+sin(u)/2)*x"),
            move |x, t| scale(x, -c * (1.0 + 0.5 * t.sin())),
            move |x, t| scale(x, -0.5 * c * t.cos()),
            move |_, t| -n * c * (1.0 + 0.5 * t.sin()),
            c >= 0.0,
        )
    }

    /// Scales the drift by `k`.
    pub fn scaled(&self, k: f64) -> Self {
        let (d, dt, div) = (self.d.clone(), self.dt.clone(), self.div.clone());
        let mut l = Self::new(
            format!("{k}*({})", self.name),
            move |x, t| scale(&d(x, t), k),
            move |x, t| scale(&dt(x, t), k),
            move |x, t| k * div(x, t),
            self.admissible && k >= 0.0,
        );
        l.zero = self.zero || k == 0.0;
        l
    }

    #[inline]
    pub fn eval(&self, x: &Point, t: f64) -> Point {
        (self.d)(x, t)
    }
    #[inline]
    pub fn dt(&self, x: &Point, t: f64) -> Point {
        (self.dt)(x, t)
    }
    #[inline]
    pub fn divergence(&self, x: &Point, t: f64) -> f64 {
        (self.div)(x, t)
    }

    pub fn is_zero(&self) -> bool {
        self.zero
    }

    /// Checks ∇ₓ·D <= 0 on the sampled (x, t) pairs.
    pub fn check_admissible(&self, xs: &[Point], ts: &[f64]) -> Result<()> {
        for x in xs {
            for &t in ts {
                let d = self.divergence(x, t);
                if d > 1e-14 {
                    return Err(Error::LawViolation(format!(
                        "drift {} has positive divergence {d} at t = {t}",
                        self.name
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Semilinear law G with G′, G″ and a non-decreasing growth majorant κ.
#[derive(Clone)]
pub struct SemilinearLaw {
    pub name: String,
    g: Scalar,
    dg: Scalar,
    d2g: Scalar,
    kappa: Scalar,
}

impl fmt::Debug for SemilinearLaw {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "SemilinearLaw({})", self.name)
    }
}

impl SemilinearLaw {
    pub fn new(
        name: impl Into<String>,
        g: impl Fn(f64) -> f64 + Send + Sync + 'static,
        dg: impl Fn(f64) -> f64 + Send + Sync + 'static,
        d2g: impl Fn(f64) -> f64 + Send + Sync + 'static,
        kappa: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        SemilinearLaw { name: name.into(), g: Arc::new(g), dg: Arc::new(dg), d2g: Arc::new(d2g), kappa: Arc::new(kappa) }
    }

    pub fn zero() -> Self {
        Self::new("0", |_| 0.0, |_| 0.0, |_| 0.0, |_| 0.0)
    }

    /// G(u) = c u
    pub fn linear(c: f64) -> Self {
        Self::new(format!("{c}*u"), move |u| c * u, move |_| c, |_| 0.0, move |t| c.abs() * (1.0 + t))
    }

    /// G(u) = u³/3
    pub fn cubic() -> Self {
        Self::new("u^3/3", |u| u * u * u / 3.0, |u| u * u, |u| 2.0 * u, |t| t * t * t / 3.0 + t * t + 2.0 * t)
    }

    /// G(u) = u + u³/3
    pub fn linear_plus_cubic() -> Self {
        Self::new(
            "u+u^3/3",
            |u| u + u * u * u / 3.0,
            |u| 1.0 + u * u,
            |u| 2.0 * u,
            |t| t + t * t * t / 3.0 + 1.0 + t * t + 2.0 * t,
        )
    }

    /// G + s·arctan: a monotone perturbation with the same value at 0.
    pub fn plus_arctan(&self, s: f64) -> Self {
        let (g, dg, d2g, k) = (self.g.clone(), self.dg.clone(), self.d2g.clone(), self.kappa.clone());
        Self::new(
            format!("{}+{s}*atan(u)", self.name),
            move |u| g(u) + s * u.atan(),
            move |u| dg(u) + s / (1.0 + u * u),
            move |u| d2g(u) - 2.0 * s * u / (1.0 + u * u).powi(2),
            move |t| k(t) + s.abs() * (t + 2.0),
        )
    }

    #[inline]
    pub fn g(&self, t: f64) -> f64 {
        (self.g)(t)
    }
    #[inline]
    pub fn dg(&self, t: f64) -> f64 {
        (self.dg)(t)
    }
    #[inline]
    pub fn d2g(&self, t: f64) -> f64 {
        (self.d2g)(t)
    }
    #[inline]
    pub fn kappa(&self, t: f64) -> f64 {
        (self.kappa)(t)
    }

    /// Monotonicity and growth checks at samples.
    pub fn check(&self, samples: &[f64]) -> Result<()> {
        for &t in samples {
            if self.dg(t) < -1e-14 {
                return Err(Error::LawViolation(format!("G′({t}) < 0 for law {}", self.name)));
            }
            let lhs = self.g(t).abs() + self.dg(t).abs() + self.d2g(t).abs();
            if lhs > self.kappa(t.abs()) * (1.0 + 1e-12) + 1e-14 {
                return Err(Error::LawViolation(format!("growth majorant of {} violated at {t}", self.name)));
            }
        }
        Ok(())
    }
}

/// Evenly spaced samples on [-r, r].
pub fn samples(r: f64, n: usize) -> Vec<f64> {
    (0..n).map(|i| -r + 2.0 * r * i as f64 / (n - 1).max(1) as f64).collect()
}
