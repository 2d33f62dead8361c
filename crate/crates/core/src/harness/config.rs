//! Flat `key = value` experiment configuration. Arrays are comma-separated,
//! `#` starts a comment, unknown keys are rejected.

use std::collections::BTreeMap;
use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use sha2::{Digest, Sha256};

use crate::dn::DictionaryKind;
use crate::error::{Error, Result};
use crate::geometry::{DomainSpec, Shape};
use crate::harness::catalog;
use crate::pde::laws::samples;
use crate::pde::{Condition, ProblemSpec};
use crate::recon::{lambda_grid, StabilityMode};
use crate::singular::SingularKind;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Pipeline {
    Solve,
    Dnmap,
    FrechetCheck,
    SingularCheck,
    ReconstructGamma,
    ReconstructSemilinear,
    StabilitySweep,
}

impl Pipeline {
    pub const ALL: [Pipeline; 7] = [
        Pipeline::Solve,
        Pipeline::Dnmap,
        Pipeline::FrechetCheck,
        Pipeline::SingularCheck,
        Pipeline::ReconstructGamma,
        Pipeline::ReconstructSemilinear,
        Pipeline::StabilitySweep,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Pipeline::Solve => "solve",
            Pipeline::Dnmap => "dnmap",
            Pipeline::FrechetCheck => "frechet-check",
            Pipeline::SingularCheck => "singular-check",
            Pipeline::ReconstructGamma => "reconstruct-gamma",
            Pipeline::ReconstructSemilinear => "reconstruct-semilinear",
            Pipeline::StabilitySweep => "stability-sweep",
        }
    }
}

impl fmt::Display for Pipeline {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Pipeline {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Pipeline::ALL
            .into_iter()
            .find(|p| p.name() == s.trim())
            .ok_or_else(|| Error::Config(format!("unknown pipeline '{s}'")))
    }
}

/// Everything one experiment needs. Law, coefficient and data fields hold
/// catalog entries (see [`crate::harness::catalog`]).
#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub pipeline: Pipeline,
    /// `disk`, `ball`, `cube:r` or `polygon` (with `vertices`).
    pub shape: String,
    pub vertices: Vec<f64>,
    pub h: f64,
    pub grading: f64,
    pub x0_dir: Vec<f64>,
    pub s_half_angle: String,
    pub s_prime_half_angle: String,
    pub condition: Condition,
    pub coefficient: String,
    pub gamma: String,
    /// Second law for difference and comparison runs.
    pub gamma2: Option<String>,
    pub drift: String,
    pub g: String,
    pub g2: Option<String>,
    /// Boundary data (solve) or perturbation direction (frechet-check);
    /// `random` draws a seeded combination of low modes.
    pub data: String,
    /// Background level for solve, dnmap and frechet-check.
    pub background: f64,
    pub lambda_r: f64,
    pub lambda_step: f64,
    pub taus: Vec<f64>,
    pub eps: Vec<f64>,
    /// `fourier:kmax` or `modes:count`; empty picks a default.
    pub dictionary: String,
    pub mode: Option<StabilityMode>,
    pub s_list: Vec<f64>,
    /// `g1` or `g2:k`.
    pub singular: String,
    pub newton_tol: f64,
    pub newton_max_iter: usize,
    pub seed: u64,
    pub out: Option<PathBuf>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            pipeline: Pipeline::Solve,
            shape: "disk".into(),
            vertices: Vec::new(),
            h: 0.1,
            grading: 0.0,
            x0_dir: vec![1.0, 0.0, 0.0],
            s_half_angle: "full".into(),
            s_prime_half_angle: "full".into(),
            condition: Condition::Quasilinear,
            coefficient: "identity".into(),
            gamma: "constant:1".into(),
            gamma2: None,
            drift: "zero".into(),
            g: "linear:1".into(),
            g2: None,
            data: "coordinate:0,1".into(),
            background: 0.0,
            lambda_r: 2.0,
            lambda_step: 0.25,
            taus: vec![0.2, 0.1, 0.05, 0.025],
            eps: vec![1e-1, 1e-2, 1e-3, 1e-4],
            dictionary: String::new(),
            mode: None,
            s_list: vec![0.4, 0.2, 0.1, 0.05],
            singular: "g1".into(),
            newton_tol: 1e-10,
            newton_max_iter: 60,
            seed: 0,
            out: None,
        }
    }
}

fn parse_list(key: &str, v: &str) -> Result<Vec<f64>> {
    if v.trim().is_empty() {
        return Ok(Vec::new());
    }
    v.split(',')
        .map(|t| t.trim().parse::<f64>().map_err(|_| Error::Config(format!("{key}: '{t}' is not a number"))))
        .collect()
}

fn parse_num<T: FromStr>(key: &str, v: &str) -> Result<T> {
    v.trim().parse().map_err(|_| Error::Config(format!("{key}: '{v}' is not a valid value")))
}

fn list_text(v: &[f64]) -> String {
    v.iter().map(|x| format!("{x}")).collect::<Vec<_>>().join(",")
}

fn monotone(v: &[f64]) -> bool {
    v.windows(2).all(|w| w[1] < w[0]) || v.windows(2).all(|w| w[1] > w[0])
}

fn condition_name(c: Condition) -> &'static str {
    match c {
        Condition::Quasilinear => "quasilinear",
        Condition::Semilinear => "semilinear",
    }
}

fn mode_name(m: StabilityMode) -> &'static str {
    match m {
        StabilityMode::Lipschitz => "lipschitz",
        StabilityMode::Hoelder => "hoelder",
    }
}

impl ExperimentConfig {
    /// Parses configuration text. Later keys override earlier ones.
    pub fn parse(text: &str, source_name: &str) -> Result<Self> {
        let mut kv = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| Error::Parse {
                source_name: source_name.into(),
                line: i + 1,
                detail: format!("expected 'key = value', got '{line}'"),
            })?;
            kv.insert(k.trim().to_string(), (i + 1, v.trim().to_string()));
        }
        let mut c = ExperimentConfig::default();
        for (k, (line, v)) in kv {
            c.set(&k, &v).map_err(|e| Error::Parse { source_name: source_name.into(), line, detail: e.to_string() })?;
        }
        Ok(c)
    }

    /// Sets one key from its text value.
    pub fn set(&mut self, key: &str, v: &str) -> Result<()> {
        let opt = |v: &str| (!v.is_empty() && v != "none").then(|| v.to_string());
        match key {
            "pipeline" => self.pipeline = v.parse()?,
            "shape" => self.shape = v.to_string(),
            "vertices" => self.vertices = parse_list(key, v)?,
            "h" => self.h = parse_num(key, v)?,
            "grading" => self.grading = parse_num(key, v)?,
            "x0" => self.x0_dir = parse_list(key, v)?,
            "s_half_angle" => self.s_half_angle = v.to_string(),
            "s_prime_half_angle" => self.s_prime_half_angle = v.to_string(),
            "condition" => {
                self.condition = match v {
                    "quasilinear" => Condition::Quasilinear,
                    "semilinear" => Condition::Semilinear,
                    _ => return Err(Error::Config(format!("condition must be quasilinear or semilinear, got '{v}'"))),
                }
            }
            "coefficient" => self.coefficient = v.to_string(),
            "gamma" => self.gamma = v.to_string(),
            "gamma2" => self.gamma2 = opt(v),
            "drift" => self.drift = v.to_string(),
            "g" => self.g = v.to_string(),
            "g2" => self.g2 = opt(v),
            "data" => self.data = v.to_string(),
            "background" => self.background = parse_num(key, v)?,
            "lambda_r" => self.lambda_r = parse_num(key, v)?,
            "lambda_step" => self.lambda_step = parse_num(key, v)?,
            "taus" => self.taus = parse_list(key, v)?,
            "eps" => self.eps = parse_list(key, v)?,
            "dictionary" => self.dictionary = v.to_string(),
            "mode" => {
                self.mode = match v {
                    "" | "auto" => None,
                    "lipschitz" => Some(StabilityMode::Lipschitz),
                    "hoelder" | "holder" => Some(StabilityMode::Hoelder),
                    _ => return Err(Error::Config(format!("mode must be lipschitz or hoelder, got '{v}'"))),
                }
            }
            "s_list" => self.s_list = parse_list(key, v)?,
            "singular" => self.singular = v.to_string(),
            "newton_tol" => self.newton_tol = parse_num(key, v)?,
            "newton_max_iter" => self.newton_max_iter = parse_num(key, v)?,
            "seed" => self.seed = parse_num(key, v)?,
            "out" => self.out = opt(v).map(PathBuf::from),
            _ => return Err(Error::Config(format!("unknown key '{key}'"))),
        }
        Ok(())
    }

    /// Canonical text: every key in a fixed order with round-trip number
    /// formatting. The output directory is not part of the experiment.
    pub fn to_text(&self) -> String {
        let o = |v: &Option<String>| v.clone().unwrap_or_else(|| "none".into());
        let lines = [
            ("pipeline", self.pipeline.name().to_string()),
            ("shape", self.shape.clone()),
            ("vertices", list_text(&self.vertices)),
            ("h", format!("{}", self.h)),
            ("grading", format!("{}", self.grading)),
            ("x0", list_text(&self.x0_dir)),
            ("s_half_angle", self.s_half_angle.clone()),
            ("s_prime_half_angle", self.s_prime_half_angle.clone()),
            ("condition", condition_name(self.condition).into()),
            ("coefficient", self.coefficient.clone()),
            ("gamma", self.gamma.clone()),
            ("gamma2", o(&self.gamma2)),
            ("drift", self.drift.clone()),
            ("g", self.g.clone()),
            ("g2", o(&self.g2)),
            ("data", self.data.clone()),
            ("background", format!("{}", self.background)),
            ("lambda_r", format!("{}", self.lambda_r)),
            ("lambda_step", format!("{}", self.lambda_step)),
            ("taus", list_text(&self.taus)),
            ("eps", list_text(&self.eps)),
            ("dictionary", self.dictionary.clone()),
            ("mode", self.mode.map_or("auto", mode_name).into()),
            ("s_list", list_text(&self.s_list)),
            ("singular", self.singular.clone()),
            ("newton_tol", format!("{}", self.newton_tol)),
            ("newton_max_iter", self.newton_max_iter.to_string()),
            ("seed", self.seed.to_string()),
        ];
        lines.iter().map(|(k, v)| format!("{k} = {v}\n")).collect()
    }

    /// SHA-256 of the canonical text, hex encoded.
    pub fn hash(&self) -> String {
        hex::encode(Sha256::digest(self.to_text().as_bytes()))
    }

    pub fn shape(&self) -> Result<Shape> {
        let e = catalog::Entry::parse(&self.shape)?;
        match (e.name.as_str(), e.params.as_slice()) {
            ("disk", []) => Ok(Shape::Disk),
            ("ball", []) => Ok(Shape::Ball),
            ("cube", [r]) => Ok(Shape::cube(*r)),
            ("polygon", []) => {
                if self.vertices.len() < 6 || self.vertices.len() % 2 != 0 {
                    return Err(Error::Config("polygon needs 'vertices = x1,y1,x2,y2,...' with at least 3 points".into()));
                }
                Ok(Shape::Polygon(self.vertices.chunks(2).map(|c| [c[0], c[1]]).collect()))
            }
            _ => Err(Error::Config(format!("unknown shape '{}' (disk, ball, cube:r, polygon)", self.shape))),
        }
    }

    pub fn dim(&self) -> Result<usize> {
        Ok(self.shape()?.dim())
    }

    pub fn domain_spec(&self) -> Result<DomainSpec> {
        let mut d = DomainSpec::new(self.shape()?, self.h)
            .with_patches(catalog::half_angle(&self.s_half_angle)?, catalog::half_angle(&self.s_prime_half_angle)?)
            .with_grading(self.grading);
        if self.x0_dir.len() < 2 || self.x0_dir.len() > 3 {
            return Err(Error::Config("x0 needs 2 or 3 components".into()));
        }
        let mut dir = [0.0; 3];
        dir[..self.x0_dir.len()].copy_from_slice(&self.x0_dir);
        d = d.with_x0(dir);
        Ok(d)
    }

    pub fn problem(&self) -> Result<ProblemSpec> {
        self.problem_with(&self.gamma, &self.g)
    }

    /// The comparison problem (gamma2 / g2), if configured.
    pub fn second_problem(&self) -> Result<Option<ProblemSpec>> {
        match self.condition {
            Condition::Quasilinear => self.gamma2.as_ref().map(|g| self.problem_with(g, &self.g)).transpose(),
            Condition::Semilinear => self.g2.as_ref().map(|g| self.problem_with(&self.gamma, g)).transpose(),
        }
    }

    fn problem_with(&self, gamma: &str, g: &str) -> Result<ProblemSpec> {
        let dim = self.dim()?;
        Ok(match self.condition {
            Condition::Quasilinear => ProblemSpec::quasilinear(
                catalog::coefficient(&self.coefficient, dim)?,
                catalog::quasilinear(gamma)?,
                catalog::drift(&self.drift, dim)?,
            ),
            Condition::Semilinear => ProblemSpec::semilinear(dim, catalog::semilinear(g)?),
        })
    }

    pub fn lambda_grid(&self) -> Vec<f64> {
        lambda_grid(self.lambda_r, self.lambda_step)
    }

    pub fn dictionary_kind(&self) -> Result<DictionaryKind> {
        let full = catalog::half_angle(&self.s_half_angle)? >= std::f64::consts::PI;
        if self.dictionary.trim().is_empty() {
            return Ok(if self.dim()? == 2 && full {
                DictionaryKind::Fourier { kmax: 8 }
            } else {
                DictionaryKind::PatchModes { count: 16 }
            });
        }
        let e = catalog::Entry::parse(&self.dictionary)?;
        let count = |e: &catalog::Entry| -> Result<usize> {
            match e.params.as_slice() {
                [k] if *k >= 1.0 && k.fract() == 0.0 => Ok(*k as usize),
                _ => Err(Error::Config(format!("dictionary '{}' needs one positive integer", e.name))),
            }
        };
        match e.name.as_str() {
            "fourier" => Ok(DictionaryKind::Fourier { kmax: count(&e)? }),
            "modes" => Ok(DictionaryKind::PatchModes { count: count(&e)? }),
            n => Err(Error::Config(format!("unknown dictionary '{n}' (fourier:k, modes:n)"))),
        }
    }

    pub fn stability_mode(&self) -> StabilityMode {
        self.mode.unwrap_or(match self.condition {
            Condition::Quasilinear => StabilityMode::Lipschitz,
            Condition::Semilinear => StabilityMode::Hoelder,
        })
    }

    pub fn singular_kind(&self) -> Result<SingularKind> {
        let e = catalog::Entry::parse(&self.singular)?;
        match (e.name.as_str(), e.params.as_slice()) {
            ("g1", []) => Ok(SingularKind::G1),
            ("g2", [k]) if [0.0, 1.0, 2.0].contains(k) => Ok(SingularKind::G2 { k: *k as usize }),
            _ => Err(Error::Config(format!("singular must be g1 or g2:k with k in 0..3, got '{}'", self.singular))),
        }
    }

    /// Checks ranges, schedules and law admissibility without building
    /// any mesh.
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if !(self.h > 0.0) {
            return bad(format!("h must be positive, got {}", self.h));
        }
        if !(0.0..1.0).contains(&self.grading) {
            return bad(format!("grading must lie in [0, 1), got {}", self.grading));
        }
        if !(self.lambda_r > 0.0) {
            return bad(format!("lambda_r must be positive, got {}", self.lambda_r));
        }
        if !(self.lambda_step > 0.0 && self.lambda_step <= 2.0 * self.lambda_r) {
            return bad(format!("lambda_step must lie in (0, 2R], got {}", self.lambda_step));
        }
        for (name, v) in [("taus", &self.taus), ("eps", &self.eps), ("s_list", &self.s_list)] {
            if v.is_empty() {
                return bad(format!("{name} must not be empty"));
            }
            if v.iter().any(|x| !(*x > 0.0) || !x.is_finite()) {
                return bad(format!("{name} entries must be positive"));
            }
            if !monotone(v) {
                return bad(format!("{name} must be strictly monotone"));
            }
        }
        if !(self.newton_tol > 0.0) || self.newton_max_iter == 0 {
            return bad("newton_tol must be positive and newton_max_iter at least 1".into());
        }
        self.domain_spec()?;
        self.dictionary_kind()?;
        self.singular_kind()?;
        if self.data != "random" {
            catalog::Entry::parse(&self.data)?;
        }
        let ts = samples(self.lambda_r.max(self.background.abs()), 81);
        for p in std::iter::once(self.problem()?).chain(self.second_problem()?) {
            p.validate()?;
            match p.condition {
                Condition::Quasilinear => {
                    p.gamma.check(&ts)?;
                    if p.drift.admissible && !p.drift.is_zero() {
                        // sample the divergence claim on a coarse grid of the bounding box
                        let pts: Vec<_> = (0..=10)
                            .flat_map(|i| (0..=10).map(move |j| [-1.0 + 0.2 * i as f64, -1.0 + 0.2 * j as f64, 0.0]))
                            .collect();
                        p.drift.check_admissible(&pts, &ts)?;
                    }
                }
                Condition::Semilinear => p.g.check(&ts)?,
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn canonical_text_round_trips() {
        let text = "pipeline = stability-sweep\nshape = disk\nh = 0.05 # mesh\ngamma = sine:2,1\ntaus = 0.3,0.1\n";
        let c = ExperimentConfig::parse(text, "t").unwrap();
        assert_eq!(c.pipeline, Pipeline::StabilitySweep);
        assert_eq!(c.taus, vec![0.3, 0.1]);
        let again = ExperimentConfig::parse(&c.to_text(), "t2").unwrap();
        assert_eq!(again, c);
        assert_eq!(again.hash(), c.hash());
    }

    #[test]
    fn rejects_bad_input() {
        assert!(ExperimentConfig::parse("h 0.1", "t").is_err());
        assert!(ExperimentConfig::parse("colour = red", "t").is_err());
        let c = ExperimentConfig::parse("h = -0.1", "t").unwrap();
        assert!(c.validate().is_err());
        let c = ExperimentConfig::parse("taus = 0.1,0.2,0.15", "t").unwrap();
        assert!(c.validate().is_err());
        let c = ExperimentConfig::parse("gamma = affine:0,1", "t").unwrap();
        assert!(c.validate().is_err());
        assert!(ExperimentConfig::default().validate().is_ok());
    }
}
