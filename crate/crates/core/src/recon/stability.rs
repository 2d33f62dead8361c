use rayon::prelude::*;
use serde::Serialize;

use crate::dn::{linearize, measurement_functional, sample_operator, Background, Dictionary, DictionaryKind, FractionalSpace};
use crate::error::{Error, Result};
use crate::fem::Assembler;
use crate::geometry::{BoundaryFunction, DomainTriple};
use crate::pde::laws::samples;
use crate::pde::{CoefficientField, Condition, NewtonOptions, ProblemSpec};
use crate::table::{num, Table};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum StabilityMode {
    /// left ≤ C · measurement
    Lipschitz,
    /// left ≤ C · measurement^{1/3}
    Hoelder,
}

impl StabilityMode {
    pub fn exponent(self) -> f64 {
        match self {
            StabilityMode::Lipschitz => 1.0,
            StabilityMode::Hoelder => 1.0 / 3.0,
        }
    }
}

/// Geometry, dictionary and boundary space used to evaluate the
/// measurement functional at any background λ.
pub struct MeasurementContext<'d> {
    pub dom: &'d DomainTriple,
    pub asm: Assembler<'d>,
    pub space: FractionalSpace,
    pub dictionary: Dictionary,
    pub chi: BoundaryFunction,
    pub opts: NewtonOptions,
}

impl<'d> MeasurementContext<'d> {
    pub fn new(dom: &'d DomainTriple, a: &CoefficientField, kind: DictionaryKind, opts: NewtonOptions) -> Result<Self> {
        let asm = Assembler::new(&dom.omega, a);
        let space = FractionalSpace::new(&dom.omega)?;
        let dictionary = Dictionary::build(&dom.omega, &dom.s, kind, &space)?;
        let chi = dom.cutoff()?;
        Ok(MeasurementContext { dom, asm, space, dictionary, chi, opts })
    }

    pub fn background(&self, p: &ProblemSpec, lambda: f64) -> Background {
        match p.condition {
            Condition::Quasilinear => Background::Constant(lambda),
            Condition::Semilinear => Background::Cutoff { lambda, chi: self.chi.clone() },
        }
    }

    /// ‖Λ¹_{S,λ} − Λ²_{S,λ}‖ on the dictionary.
    pub fn measure(&self, p1: &ProblemSpec, p2: &ProblemSpec, lambda: f64) -> Result<f64> {
        if p1.condition != p2.condition {
            return Err(Error::Mismatch("both problems must carry the same condition".into()));
        }
        let s1 = sample_operator(
            &linearize(&self.asm, p1, &self.background(p1, lambda), &self.dom.s, false, &self.opts)?,
            &self.dictionary,
            &self.space,
        )?;
        let s2 = sample_operator(
            &linearize(&self.asm, p2, &self.background(p2, lambda), &self.dom.s, false, &self.opts)?,
            &self.dictionary,
            &self.space,
        )?;
        measurement_functional(&s1, &s2)
    }

    /// Sup of the measurement over a λ grid: (sup, arg-sup, all values).
    pub fn measurement_sup(&self, p1: &ProblemSpec, p2: &ProblemSpec, grid: &[f64]) -> Result<(f64, f64, Vec<f64>)> {
        let vals = grid
            .par_iter()
            .map(|&l| self.measure(p1, p2, l))
            .collect::<Result<Vec<_>>>()?;
        let (i, &m) = vals
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .ok_or_else(|| Error::OutOfRange("empty λ grid".into()))?;
        Ok((m, grid[i], vals))
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct StabilityMember {
    pub s: f64,
    pub left: f64,
    /// Raw measurement sup.
    pub measurement: f64,
    pub argmax_lambda: f64,
    /// measurement^{exponent}
    pub right: f64,
    pub ratio: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct StabilityReport {
    pub mode: StabilityMode,
    pub members: Vec<StabilityMember>,
    /// Single constant C = max over s of left/right.
    pub constant: f64,
    /// max/min of left/right over the family.
    pub spread: f64,
    /// C′ = max over s of measurement/left.
    pub consistency_constant: f64,
    pub h: f64,
    pub dictionary_size: usize,
}

impl StabilityReport {
    /// Whether left ≤ C·right holds for every member.
    pub fn holds(&self) -> bool {
        self.members.iter().all(|m| m.left <= self.constant * m.right * (1.0 + 1e-12))
    }

    pub fn table(&self) -> Table {
        let mut t = Table::new(&["s", "left", "measurement", "argmax_lambda", "right", "ratio", "h", "dictionary_size"]);
        for m in &self.members {
            t.push(vec![
                num(m.s),
                num(m.left),
                num(m.measurement),
                num(m.argmax_lambda),
                num(m.right),
                num(m.ratio),
                num(self.h),
                self.dictionary_size.to_string(),
            ]);
        }
        t
    }
}

/// Sup over a dense grid of |law₁ − law₂| (γ or G by condition).
pub fn law_distance(p1: &ProblemSpec, p2: &ProblemSpec, r: f64) -> f64 {
    samples(r, 801)
        .into_iter()
        .map(|t| match p1.condition {
            Condition::Quasilinear => (p1.gamma.gamma(t) - p2.gamma.gamma(t)).abs(),
            Condition::Semilinear => (p1.g.g(t) - p2.g.g(t)).abs(),
        })
        .fold(0.0, f64::max)
}

/// Rejects families that leave the admissible class.
pub fn check_member(base: &ProblemSpec, p: &ProblemSpec, r: f64, dom: &DomainTriple) -> Result<()> {
    let ts = samples(r, 81);
    match p.condition {
        Condition::Quasilinear => {
            p.gamma.check(&ts)?;
            if p.drift.admissible {
                p.drift.check_admissible(&dom.omega.nodes, &ts)?;
            }
        }
        Condition::Semilinear => {
            p.g.check(&ts)?;
            if (p.g.g(0.0) - base.g.g(0.0)).abs() > 1e-14 {
                return Err(Error::LawViolation("family members must agree at 0".into()));
            }
        }
    }
    Ok(())
}

/// Runs base vs perturbed(s) for every s and fits the stability constant.
pub fn stability_sweep(
    ctx: &MeasurementContext<'_>,
    base: &ProblemSpec,
    perturbed: &(dyn Fn(f64) -> ProblemSpec + Sync),
    s_list: &[f64],
    grid: &[f64],
    r: f64,
    mode: StabilityMode,
) -> Result<StabilityReport> {
    if !(r > 0.0) {
        return Err(Error::OutOfRange("R must be positive".into()));
    }
    let family: Vec<(f64, ProblemSpec)> = s_list.iter().map(|&s| (s, perturbed(s))).collect();
    check_member(base, base, r, ctx.dom)?;
    for (_, p) in &family {
        check_member(base, p, r, ctx.dom)?;
    }
    let mut members = Vec::new();
    for (s, p) in &family {
        let left = law_distance(base, p, r);
        if left == 0.0 {
            continue;
        }
        let (m, arg, _) = ctx.measurement_sup(base, p, grid)?;
        let right = m.powf(mode.exponent());
        members.push(StabilityMember { s: *s, left, measurement: m, argmax_lambda: arg, right, ratio: left / right });
    }
    if members.is_empty() {
        return Err(Error::OutOfRange("the family has no nonzero perturbation".into()));
    }
    let constant = members.iter().map(|m| m.ratio).fold(0.0, f64::max);
    let min = members.iter().map(|m| m.ratio).fold(f64::INFINITY, f64::min);
    let consistency_constant = members.iter().map(|m| m.measurement / m.left).fold(0.0, f64::max);
    Ok(StabilityReport {
        mode,
        constant,
        spread: constant / min,
        consistency_constant,
        h: ctx.dom.spec.h,
        dictionary_size: ctx.dictionary.len(),
        members,
    })
}
