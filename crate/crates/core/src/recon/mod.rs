//! Reconstruction pipelines: pairing identities, pointwise recovery of γ
//! and G′, and stability sweeps.

pub mod gamma;
pub mod pairing;
pub mod semilinear;
pub mod stability;

use serde::Serialize;

pub use gamma::{estimate_gamma_at, reconstruct_gamma, reconstruct_gamma_difference, GammaContext, GammaEstimate};
pub use pairing::{pairing, PairingSample};
pub use semilinear::{estimate_gprime_at, reconstruct_gprime, reconstruct_semilinear, GprimeContext, GprimeEstimate};
pub use stability::{stability_sweep, MeasurementContext, StabilityMember, StabilityMode, StabilityReport};

use crate::error::{Error, Result};
use crate::linalg::least_squares;
use crate::table::{num, Table};

pub const BETA_MIN: f64 = 0.5;
pub const BETA_MAX: f64 = 2.0;

/// Result of fitting r(τ) = L + Cτ^β.
#[derive(Clone, Debug, Serialize)]
pub struct PowerFit {
    pub limit: f64,
    pub coefficient: f64,
    pub beta: Option<f64>,
    /// Root-mean-square fit residual relative to |L|.
    pub residual: f64,
    pub monotone: bool,
    /// The best β sits on the edge of the scanned range.
    pub at_edge: bool,
}

/// Fits r(τ) = L + Cτ^β by scanning β over [0.5, 2] with linear least
/// squares for (L, C); exactly constant data returns that constant. Small
/// β would let slowly (logarithmically) converging data extrapolate far
/// beyond the observed range, so the scan stops at 1/2.
pub fn fit_power_extrapolation(taus: &[f64], r: &[f64]) -> PowerFit {
    let n = r.len().max(1) as f64;
    let mean = r.iter().sum::<f64>() / n;
    let spread = r.iter().map(|v| (v - mean).abs()).fold(0.0, f64::max);
    let mut order: Vec<usize> = (0..taus.len()).collect();
    order.sort_by(|&a, &b| taus[a].total_cmp(&taus[b]));
    let sorted: Vec<f64> = order.iter().map(|&i| r[i]).collect();
    let monotone = sorted.windows(2).all(|w| w[1] >= w[0]) || sorted.windows(2).all(|w| w[1] <= w[0]);
    if spread <= 1e-12 * mean.abs().max(1e-300) || r.len() < 3 {
        return PowerFit { limit: mean, coefficient: 0.0, beta: None, residual: spread, monotone, at_edge: false };
    }
    let mut best: Option<PowerFit> = None;
    let mut best_res = f64::INFINITY;
    let steps = ((BETA_MAX - BETA_MIN) / 0.025).round() as usize;
    for i in 0..=steps {
        let beta = BETA_MIN + 0.025 * i as f64;
        let rows: Vec<Vec<f64>> = taus.iter().map(|t| vec![1.0, t.powf(beta)]).collect();
        let Some(c) = least_squares(&rows, r) else { continue };
        let res = (taus
            .iter()
            .zip(r)
            .map(|(t, v)| (c[0] + c[1] * t.powf(beta) - v).powi(2))
            .sum::<f64>()
            / n)
            .sqrt();
        if res < best_res {
            best_res = res;
            best = Some(PowerFit {
                limit: c[0],
                coefficient: c[1],
                beta: Some(beta),
                residual: res / c[0].abs().max(1e-300),
                monotone,
                at_edge: i == 0 || i == steps,
            });
        }
    }
    best.unwrap_or(PowerFit { limit: mean, coefficient: 0.0, beta: None, residual: spread, monotone, at_edge: false })
}

/// Per-grid-point diagnostics of a reconstruction.
#[derive(Clone, Debug, Default, Serialize)]
pub struct PointDiagnostics {
    pub fit_residual: f64,
    pub beta: Option<f64>,
    pub tau_min: f64,
    pub tau_max: f64,
    /// Poor fit with non-monotone data.
    pub flagged: bool,
    /// Some τ below the 4h resolution threshold.
    pub resolution_flag: bool,
    /// Sign or monotonicity violated by the estimate.
    pub consistency_flag: bool,
    /// Drift not declared admissible.
    pub out_of_theory: bool,
}

impl PointDiagnostics {
    pub fn from_fit(fit: &PowerFit, taus: &[f64]) -> Self {
        PointDiagnostics {
            fit_residual: fit.residual,
            beta: fit.beta,
            tau_min: taus.iter().copied().fold(f64::INFINITY, f64::min),
            tau_max: taus.iter().copied().fold(0.0, f64::max),
            flagged: (!fit.monotone && fit.residual > 1e-2) || fit.at_edge,
            ..Default::default()
        }
    }

    pub fn merge(&self, o: &PointDiagnostics) -> Self {
        PointDiagnostics {
            fit_residual: self.fit_residual.max(o.fit_residual),
            beta: self.beta.or(o.beta),
            tau_min: self.tau_min.min(o.tau_min),
            tau_max: self.tau_max.max(o.tau_max),
            flagged: self.flagged || o.flagged,
            resolution_flag: self.resolution_flag || o.resolution_flag,
            consistency_flag: self.consistency_flag || o.consistency_flag,
            out_of_theory: self.out_of_theory || o.out_of_theory,
        }
    }
}

/// Estimated values on a strictly increasing λ grid.
#[derive(Clone, Debug, Serialize)]
pub struct ReconstructionCurve {
    pub quantity: String,
    pub lambda: Vec<f64>,
    pub values: Vec<f64>,
    pub diagnostics: Vec<PointDiagnostics>,
    /// λ_R in difference mode.
    pub argmax: Option<f64>,
}

impl ReconstructionCurve {
    pub fn check_grid(grid: &[f64]) -> Result<()> {
        if grid.is_empty() {
            return Err(Error::OutOfRange("empty λ grid".into()));
        }
        if grid.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::OutOfRange("λ grid must be strictly increasing".into()));
        }
        Ok(())
    }

    /// sup |value − exact(λ)| over the grid.
    pub fn sup_error(&self, exact: impl Fn(f64) -> f64) -> f64 {
        self.lambda.iter().zip(&self.values).map(|(&l, v)| (v - exact(l)).abs()).fold(0.0, f64::max)
    }

    /// sup |value − exact| / sup |exact|.
    pub fn relative_sup_error(&self, exact: impl Fn(f64) -> f64) -> f64 {
        let scale = self.lambda.iter().map(|&l| exact(l).abs()).fold(0.0, f64::max);
        self.sup_error(exact) / scale.max(1e-300)
    }

    /// One row per grid point; `extra` columns are evaluated per λ.
    pub fn table(&self, extra: &[(&str, &dyn Fn(f64) -> f64)]) -> Table {
        let mut header = vec!["lambda", "value", "fit_residual", "beta", "tau_min", "tau_max", "flagged", "resolution_flag"];
        header.extend(extra.iter().map(|(k, _)| *k));
        let mut t = Table::new(&header);
        for ((l, v), d) in self.lambda.iter().zip(&self.values).zip(&self.diagnostics) {
            let mut row = vec![
                num(*l),
                num(*v),
                num(d.fit_residual),
                d.beta.map_or(String::new(), |b| format!("{b}")),
                num(d.tau_min),
                num(d.tau_max),
                d.flagged.to_string(),
                d.resolution_flag.to_string(),
            ];
            row.extend(extra.iter().map(|(_, f)| num(f(*l))));
            t.push(row);
        }
        t
    }
}

/// Uniform grid on [−r, r] with the given step (endpoints included).
pub fn lambda_grid(r: f64, step: f64) -> Vec<f64> {
    let n = (2.0 * r / step).round() as usize;
    (0..=n).map(|i| -r + 2.0 * r * i as f64 / n as f64).collect()
}
