//! Human-readable summaries and plot data from finished runs.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::harness::pipelines::Summary;
use crate::harness::{RunManifest, MANIFEST, SUMMARY};
use crate::table::{num, Table};

pub const RECONSTRUCTION_TOL: f64 = 0.05;
pub const FRECHET_MIN_ORDER: f64 = 0.8;
pub const FRECHET_FINAL_GAP: f64 = 1e-3;
pub const SLOPE_TOL: f64 = 0.15;
pub const LIPSCHITZ_SPREAD: f64 = 2.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Verdict {
    Pass,
    Fail,
    /// No threshold applies.
    Info,
}

impl Verdict {
    fn of(ok: bool) -> Self {
        if ok {
            Verdict::Pass
        } else {
            Verdict::Fail
        }
    }

    fn label(self) -> &'static str {
        match self {
            Verdict::Pass => "PASS",
            Verdict::Fail => "FAIL",
            Verdict::Info => "INFO",
        }
    }
}

#[derive(Clone, Debug)]
pub struct ReportItem {
    pub source: PathBuf,
    pub pipeline: String,
    pub verdict: Verdict,
    pub line: String,
}

#[derive(Clone, Debug)]
pub struct Report {
    pub items: Vec<ReportItem>,
    pub text: String,
    /// Long-format plot data: source, series, x, y.
    pub plot: Table,
}

fn metric(s: &Summary, k: &str) -> f64 {
    s.metrics.get(k).copied().unwrap_or(f64::NAN)
}

fn flag(s: &Summary, k: &str) -> bool {
    s.flags.get(k).copied().unwrap_or(false)
}

/// Verdict and one-line description of a summary.
fn judge(s: &Summary) -> (Verdict, String) {
    match s.pipeline.as_str() {
        "solve" => {
            let r = metric(s, "residual_norm");
            let tol = metric(s, "newton_tol");
            (
                Verdict::of(r <= tol && flag(s, "dirichlet_exact")),
                format!("residual {r:.3e} (tolerance {tol:.1e}), {} Newton steps", metric(s, "newton_iterations")),
            )
        }
        "dnmap" => {
            let mut line = format!("max operator norm {:.6}", metric(s, "max_operator_norm"));
            if let Some(m) = s.metrics.get("measurement_sup") {
                let _ = write!(line, ", measurement sup {m:.6}");
            }
            (Verdict::Info, line)
        }
        "frechet-check" => {
            let gap = metric(s, "final_gap");
            let floor = flag(s, "at_floor");
            let order = metric(s, "order");
            let ok = !flag(s, "partial") && (floor || order >= FRECHET_MIN_ORDER) && gap <= FRECHET_FINAL_GAP;
            (
                Verdict::of(ok),
                format!(
                    "order {} (>= {FRECHET_MIN_ORDER}), final gap {gap:.2e} (<= {FRECHET_FINAL_GAP:.0e}){}",
                    if order.is_nan() { "n/a".into() } else { format!("{order:.3}") },
                    if floor { ", exactly linear (solver floor)" } else { "" }
                ),
            )
        }
        "singular-check" => {
            let mono = flag(s, "ratio_monotone");
            match s.metrics.get("target_slope") {
                Some(&t) => {
                    let sl = metric(s, "slope");
                    (
                        Verdict::of((sl - t).abs() <= SLOPE_TOL && mono),
                        format!("slope {sl:.3} (target {t} ± {SLOPE_TOL}), remainder ratio monotone: {mono}"),
                    )
                }
                None => {
                    let b = metric(s, "log_growth_slope");
                    (
                        Verdict::of(b > 0.0 && mono),
                        format!("norm² against |ln τ| slope {b:.4} (> 0), remainder ratio monotone: {mono}"),
                    )
                }
            }
        }
        "reconstruct-gamma" => {
            let e = metric(s, "relative_sup_error");
            let mut line = format!("relative sup error {:.3}% (<= {}%)", 100.0 * e, 100.0 * RECONSTRUCTION_TOL);
            if flag(s, "resolution_flag") {
                line.push_str(", some τ below 4h");
            }
            if flag(s, "out_of_theory") {
                line.push_str(", drift outside the admissible class");
            }
            (Verdict::of(e <= RECONSTRUCTION_TOL), line)
        }
        "reconstruct-semilinear" => {
            let a = metric(s, "gprime_relative_sup_error");
            let b = metric(s, "g_relative_sup_error");
            (
                Verdict::of(a <= RECONSTRUCTION_TOL && b <= RECONSTRUCTION_TOL),
                format!(
                    "G' relative sup error {:.3}%, G relative sup error {:.3}% (<= {}%)",
                    100.0 * a,
                    100.0 * b,
                    100.0 * RECONSTRUCTION_TOL
                ),
            )
        }
        "stability-sweep" => {
            let spread = metric(s, "spread");
            let c = metric(s, "constant");
            if flag(s, "hoelder") {
                (Verdict::of(flag(s, "holds")), format!("Hoelder constant {c:.4} holds across the family (spread {spread:.3})"))
            } else {
                (
                    Verdict::of(flag(s, "holds") && spread <= LIPSCHITZ_SPREAD),
                    format!("Lipschitz ratio spread {spread:.4} (<= {LIPSCHITZ_SPREAD}), constant {c:.4}"),
                )
            }
        }
        other => (Verdict::Info, format!("unrecognized pipeline '{other}'")),
    }
}

/// Plot series available from the tables of one run directory.
fn plot_series(dir: &Path, plot: &mut Table, errors: &mut Vec<String>) {
    // file, x column, y expression, series name
    let specs: [(&str, &str, &[&str], &str); 8] = [
        ("gamma.csv", "lambda", &["value"], "gamma_hat"),
        ("gamma.csv", "lambda", &["exact"], "gamma_exact"),
        ("gprime.csv", "lambda", &["value"], "gprime_hat"),
        ("g.csv", "lambda", &["value"], "g_hat"),
        ("sweep.csv", "tau", &["data_h_half"], "data_norm"),
        ("sweep.csv", "tau", &["remainder_h1", "lead_h1"], "remainder_ratio"),
        ("stability.csv", "s", &["ratio"], "stability_ratio"),
        ("frechet.csv", "eps", &["rel_gap"], "frechet_gap"),
    ];
    let src = dir.display().to_string();
    for (file, xcol, ycols, series) in specs {
        let p = dir.join(file);
        if !p.exists() {
            continue;
        }
        let parsed = fs::read_to_string(&p)
            .map_err(Error::from)
            .and_then(|t| Table::from_csv(&t, &p.display().to_string()))
            .and_then(|t| {
                let x = t.numeric(xcol)?;
                let mut y = t.numeric(ycols[0])?;
                if let Some(d) = ycols.get(1) {
                    for (a, b) in y.iter_mut().zip(t.numeric(d)?) {
                        *a /= b;
                    }
                }
                Ok((x, y))
            });
        match parsed {
            Ok((x, y)) => {
                for (a, b) in x.into_iter().zip(y) {
                    plot.push(vec![src.clone(), series.into(), num(a), num(b)]);
                }
            }
            Err(e) => errors.push(format!("{}: {e}", p.display())),
        }
    }
}

/// Reads each run directory (or a `summary.json` path) and produces one
/// verdict line per pipeline plus long-format plot data. Missing or corrupt
/// artifacts are collected and returned together as a single error.
pub fn emit_report(paths: &[PathBuf]) -> Result<Report> {
    let mut items = Vec::new();
    let mut errors = Vec::new();
    let mut plot = Table::new(&["source", "series", "x", "y"]);
    let mut empty = Vec::new();
    for path in paths {
        let dir = if path.is_file() { path.parent().unwrap_or(Path::new(".")).to_path_buf() } else { path.clone() };
        if !dir.is_dir() {
            errors.push(format!("{}: no such directory", dir.display()));
            continue;
        }
        let has_summary = dir.join(SUMMARY).exists();
        let manifest = dir.join(MANIFEST).exists().then(|| RunManifest::read(&dir));
        if !has_summary && manifest.is_none() {
            empty.push(dir);
            continue;
        }
        if let Some(Err(e)) = &manifest {
            errors.push(format!("{}: {e}", dir.join(MANIFEST).display()));
        }
        if let Some(Ok(m)) = &manifest {
            for f in &m.files {
                if !dir.join(&f.name).exists() {
                    errors.push(format!("{}: listed in the manifest but missing", dir.join(&f.name).display()));
                }
            }
            if let Some(fail) = &m.failure {
                items.push(ReportItem {
                    source: dir.clone(),
                    pipeline: m.pipeline.clone(),
                    verdict: Verdict::Fail,
                    line: format!("run failed during '{}': {}", fail.step, fail.message),
                });
            }
        }
        if has_summary {
            let p = dir.join(SUMMARY);
            match fs::read_to_string(&p).map_err(Error::from).and_then(|t| Ok(serde_json::from_str::<Summary>(&t)?)) {
                Ok(s) => {
                    let (verdict, line) = judge(&s);
                    items.push(ReportItem { source: dir.clone(), pipeline: s.pipeline.clone(), verdict, line });
                }
                Err(e) => errors.push(format!("{}: {e}", p.display())),
            }
        }
        plot_series(&dir, &mut plot, &mut errors);
    }
    if !errors.is_empty() {
        return Err(Error::Artifacts(errors));
    }
    let mut text = String::new();
    if items.is_empty() {
        text.push_str("no artifacts\n");
    }
    for d in &empty {
        let _ = writeln!(text, "{}: no artifacts", d.display());
    }
    for it in &items {
        let _ = writeln!(text, "[{}] {} ({}): {}", it.verdict.label(), it.pipeline, it.source.display(), it.line);
    }
    Ok(Report { items, text, plot })
}
