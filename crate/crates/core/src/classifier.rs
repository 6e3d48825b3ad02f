//! Per-level coboundary verdicts assembled into the ergodicity hierarchy of a skew product.
//!
//! Level `n` asks whether `u_g^(n)` is a coboundary over `theta`. Continuous coboundary
//! levels form the subgroup `Z_u = m0 Z`; when `m0 > 0` the fixed-point algebra is
//! generated by `w_{m0} V^{m0}`. Unique ergodicity needs every level to be a non-coboundary
//! even in the measurable sense, and unique ergodicity relative to the fixed points fails
//! exactly when some level is a measurable coboundary that is not continuous.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Serialize, Serializer};

use crate::cocycle::{orbit_product, CocycleSpec, GroupElement};
use crate::crossed::{apply_skew, gns_project_invariant, CpElement, GnsVector};
use crate::error::{Error, Result};
use crate::fourier::{frac_mul, FourierPoly};
use crate::solver::continuous::coboundary_of;
use crate::solver::{classify, Certificate, Cocycle, SolverConfig, Verdict, VerdictTag};
use crate::unitary::{expand_adaptive, ExpansionConfig, UnitaryFn};

/// Three-valued flag; `Inconclusive` whenever a contributing verdict is.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Flag {
    True,
    False,
    Inconclusive,
}

impl Flag {
    pub fn from_bool(b: bool) -> Self {
        if b {
            Flag::True
        } else {
            Flag::False
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Flag::True => "true",
            Flag::False => "false",
            Flag::Inconclusive => "inconclusive",
        }
    }
}

impl Serialize for Flag {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Flag::True => s.serialize_bool(true),
            Flag::False => s.serialize_bool(false),
            Flag::Inconclusive => s.serialize_str("inconclusive"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, serde::Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ClassifierConfig {
    pub n_max: i64,
    pub solver: SolverConfig,
    /// Window for the GNS-average evidence that a level admits no invariant vector.
    pub evidence_window: i64,
    /// The averaged `[V^n]` must fall below this for the evidence to count.
    pub evidence_tau: f64,
    /// Expansion limits for the evidence averages; frequencies grow like `n * window`.
    pub evidence_expansion: ExpansionConfig,
}

impl Default for ClassifierConfig {
    fn default() -> Self {
        Self {
            n_max: 12,
            solver: SolverConfig::default(),
            evidence_window: 4096,
            evidence_tau: 0.05,
            evidence_expansion: ExpansionConfig { cap: 1 << 20, tol: 1e-13 },
        }
    }
}

/// Norm of `M_N [V^n]`, which tends to the norm of its invariant part.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AverageEvidence {
    pub window: i64,
    pub norm: f64,
    pub tau: f64,
    pub passed: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LevelResult {
    pub level: i64,
    pub verdict: Verdict,
    /// Whether the level is shown not to be a measurable coboundary either.
    pub measurable_excluded: Flag,
    pub evidence: Option<AverageEvidence>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FixedPointGenerator {
    pub witness: UnitaryFn,
    pub level: i64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ClassificationReport {
    pub n_max: i64,
    pub levels: Vec<LevelResult>,
    /// Scanned levels (both signs) with a continuous coboundary verdict.
    pub z_u_window: Vec<i64>,
    pub m0: i64,
    pub n0: i64,
    pub weakly_ergodic: Flag,
    pub uniquely_ergodic: Flag,
    pub ue_wrt_fixed_point: Flag,
    pub fixed_point_generator: Option<FixedPointGenerator>,
    pub witness_table: BTreeMap<i64, UnitaryFn>,
}

impl ClassificationReport {
    pub fn level(&self, n: i64) -> Option<&LevelResult> {
        self.levels.iter().find(|l| l.level == n)
    }

    pub fn witness(&self, n: i64) -> Result<&UnitaryFn> {
        self.witness_table.get(&n).ok_or(Error::MissingWitness(n))
    }

    /// Structural checks on the summary; returns a description of each violation.
    pub fn validate(&self) -> Vec<String> {
        let mut out = Vec::new();
        if self.m0 > 0 {
            for n in &self.z_u_window {
                if n % self.m0 != 0 {
                    out.push(format!("level {n} is not a multiple of m0 = {}", self.m0));
                }
            }
        } else if !self.z_u_window.is_empty() {
            out.push("m0 = 0 but continuous levels were found".into());
        }
        for &n in &self.z_u_window {
            if n.abs() <= self.n_max && !self.z_u_window.contains(&-n) {
                out.push(format!("level {n} is continuous but {} is not", -n));
            }
        }
        if self.uniquely_ergodic == Flag::True && self.ue_wrt_fixed_point != Flag::True {
            out.push("uniquely ergodic but not uniquely ergodic relative to the fixed points".into());
        }
        if self.uniquely_ergodic == Flag::True && self.weakly_ergodic == Flag::False {
            out.push("uniquely ergodic with a nontrivial fixed-point algebra".into());
        }
        out
    }
}

/// `u_g^(n)` for generator `i`, classified against `theta_i`.
fn classify_generator(spec: &CocycleSpec, i: usize, n: i64, cfg: &SolverConfig) -> Result<Verdict> {
    if let Some(law) = spec.law() {
        return classify(Cocycle::Law { law, alpha: spec.alpha(), level: n }, spec.base_angle(i), cfg);
    }
    let u = spec.twisted_family(&GroupElement::basis(spec.dim(), i), n)?;
    classify(Cocycle::Unitary(&u), spec.base_angle(i), cfg)
}

/// Verdict for level `n`. For `d > 1` the witness found for the first generator must also
/// solve the equations of the others.
pub fn classify_level(spec: &CocycleSpec, n: i64, cfg: &SolverConfig) -> Result<Verdict> {
    if n == 0 {
        return Err(Error::ZeroLevel);
    }
    let mut verdict = classify_generator(spec, 0, n, cfg)?;
    for i in 1..spec.dim() {
        match &verdict {
            Verdict::ContinuousCoboundary { witness, .. } => {
                let u = spec.twisted_family(&GroupElement::basis(spec.dim(), i), n)?;
                let r = coboundary_of(witness, spec.theta(i)).grid_distance(&u, cfg.residual_grid);
                if r > cfg.tol {
                    let mut diagnostics = verdict.diagnostics().clone();
                    diagnostics.insert(format!("generator_{i}_residual"), r);
                    verdict = Verdict::Inconclusive {
                        reason: format!("witness of generator 0 does not solve generator {i}"),
                        diagnostics,
                    };
                }
            }
            Verdict::NotCoboundary { .. } => break,
            _ => {
                let other = classify_generator(spec, i, n, cfg)?;
                if other.tag() == VerdictTag::NotCoboundary {
                    verdict = other;
                    break;
                }
            }
        }
    }
    Ok(verdict)
}

fn average_evidence(spec: &CocycleSpec, n: i64, cfg: &ClassifierConfig) -> Result<AverageEvidence> {
    let v = GnsVector::of(&CpElement::monomial(spec.alpha().value(), FourierPoly::one(), n));
    let avg = gns_project_invariant(spec, &v, cfg.evidence_window, &cfg.evidence_expansion)?;
    let norm = avg.norm();
    Ok(AverageEvidence { window: cfg.evidence_window, norm, tau: cfg.evidence_tau, passed: norm < cfg.evidence_tau })
}

fn classify_one(spec: &CocycleSpec, n: i64, cfg: &ClassifierConfig) -> Result<LevelResult> {
    let verdict = classify_level(spec, n, &cfg.solver)?;
    let (measurable_excluded, evidence) = match &verdict {
        Verdict::ContinuousCoboundary { .. } | Verdict::MeasurableCoboundary { .. } => (Flag::False, None),
        Verdict::NotCoboundary { certificate: Certificate::L2Divergence { .. }, .. } => (Flag::True, None),
        Verdict::NotCoboundary { .. } if !spec.is_analytic() => {
            let ev = average_evidence(spec, n, cfg)?;
            (if ev.passed { Flag::True } else { Flag::Inconclusive }, Some(ev))
        }
        _ => (Flag::Inconclusive, None),
    };
    Ok(LevelResult { level: n, verdict, measurable_excluded, evidence })
}

/// Classifies levels `1 <= |n| <= n_max` in parallel; flags speak only about the scanned window.
pub fn classify_system(spec: &CocycleSpec, cfg: &ClassifierConfig) -> Result<ClassificationReport> {
    if cfg.n_max < 1 {
        return Err(Error::EmptyWindow);
    }
    let scan: Vec<i64> = (1..=cfg.n_max).flat_map(|n| [n, -n]).collect();
    let mut levels = scan.par_iter().map(|&n| classify_one(spec, n, cfg)).collect::<Result<Vec<_>>>()?;
    levels.sort_by_key(|l| (l.level.abs(), l.level < 0));

    let z_u_window: Vec<i64> = {
        let mut v: Vec<i64> =
            levels.iter().filter(|l| l.verdict.tag() == VerdictTag::ContinuousCoboundary).map(|l| l.level).collect();
        v.sort();
        v
    };
    let m0 = z_u_window.iter().copied().filter(|&n| n > 0).min().unwrap_or(0);
    let n0 = levels
        .iter()
        .filter(|l| l.level > 0)
        .filter(|l| matches!(l.verdict.tag(), VerdictTag::ContinuousCoboundary | VerdictTag::MeasurableCoboundary))
        .map(|l| l.level)
        .min()
        .unwrap_or(0);
    let any_inconclusive = levels.iter().any(|l| l.verdict.tag() == VerdictTag::Inconclusive);

    let weakly_ergodic = if !z_u_window.is_empty() {
        Flag::False
    } else if any_inconclusive {
        Flag::Inconclusive
    } else {
        Flag::True
    };

    let uniquely_ergodic = if levels.iter().any(|l| l.measurable_excluded == Flag::False) {
        Flag::False
    } else if levels.iter().all(|l| l.measurable_excluded == Flag::True) {
        Flag::True
    } else {
        Flag::Inconclusive
    };

    // a measurable, non-continuous level refutes it; heuristic non-continuity only casts doubt
    let mut ue_wrt_fixed_point = Flag::True;
    for l in &levels {
        let f = match &l.verdict {
            Verdict::MeasurableCoboundary { evidence, .. } => {
                if evidence.noncontinuity.iter().any(|e| e.rigorous) {
                    Flag::False
                } else {
                    Flag::Inconclusive
                }
            }
            Verdict::ContinuousCoboundary { .. } => Flag::True,
            Verdict::NotCoboundary { .. } => match l.measurable_excluded {
                Flag::True => Flag::True,
                _ => Flag::Inconclusive,
            },
            Verdict::Inconclusive { .. } => Flag::Inconclusive,
        };
        ue_wrt_fixed_point = match (ue_wrt_fixed_point, f) {
            (Flag::False, _) | (_, Flag::False) => Flag::False,
            (Flag::Inconclusive, _) | (_, Flag::Inconclusive) => Flag::Inconclusive,
            _ => Flag::True,
        };
    }

    let witness_table: BTreeMap<i64, UnitaryFn> =
        levels.iter().filter_map(|l| l.verdict.witness().map(|w| (l.level, w.clone()))).collect();
    let fixed_point_generator =
        (m0 > 0).then(|| FixedPointGenerator { witness: witness_table[&m0].clone(), level: m0 });

    Ok(ClassificationReport {
        n_max: cfg.n_max,
        levels,
        z_u_window,
        m0,
        n0,
        weakly_ergodic,
        uniquely_ergodic,
        ue_wrt_fixed_point,
        fixed_point_generator,
        witness_table,
    })
}

/// `w_{k n0} = w alpha^{n0}(w) ... alpha^{(k-1) n0}(w)`; negative `k` uses the inverse orbit.
pub fn witness_extend(w: &UnitaryFn, n0: i64, k: i64, alpha: f64) -> UnitaryFn {
    orbit_product(w, frac_mul(n0 as i128, alpha), k)
}

/// [`witness_extend`] followed by a residual check against every generator at level `k n0`.
pub fn witness_extend_checked(spec: &CocycleSpec, w: &UnitaryFn, n0: i64, k: i64, tol: f64) -> Result<UnitaryFn> {
    let wk = witness_extend(w, n0, k, spec.alpha().value());
    let level = k * n0;
    for i in 0..spec.dim() {
        let u = spec.twisted_family(&GroupElement::basis(spec.dim(), i), level)?;
        let residual = coboundary_of(&wk, spec.theta(i)).grid_distance(&u, 1024);
        if residual > tol {
            return Err(Error::WitnessResidual { level, residual });
        }
    }
    Ok(wk)
}

/// `(w V^{m0})^j`.
pub fn generator_power(gen: &FixedPointGenerator, alpha: f64, j: i64, cfg: &ExpansionConfig) -> Result<CpElement> {
    let w = expand_adaptive(&gen.witness, cfg)?.poly;
    let x = CpElement::monomial(alpha, w, gen.level);
    let mut p = CpElement::one(alpha);
    let base = if j < 0 { x.adjoint() } else { x };
    for _ in 0..j.abs() {
        p = p.multiply(&base)?;
    }
    Ok(p)
}

/// `max gns_norm(Phi_g(X^j) - X^j)` over `g` in the box `{0..window-1}^d` and `1 <= j <= samples`,
/// with `X = w_{m0} V^{m0}` from the report.
pub fn fixed_point_check(
    spec: &CocycleSpec,
    report: &ClassificationReport,
    window: i64,
    samples: i64,
    cfg: &ExpansionConfig,
) -> Result<f64> {
    let gen = report.fixed_point_generator.as_ref().ok_or(Error::MissingWitness(0))?;
    let a = spec.alpha().value();
    let mut worst = 0.0_f64;
    for j in 1..=samples {
        let x = generator_power(gen, a, j, cfg)?;
        let devs = GroupElement::window(spec.dim(), window)
            .par_iter()
            .map(|g| Ok(apply_skew(spec, g, &x, cfg)?.sub(&x)?.gns_norm()))
            .collect::<Result<Vec<f64>>>()?;
        worst = devs.into_iter().fold(worst, f64::max);
    }
    Ok(worst)
}
