//! Cohomology of cocycles and the intertwining automorphisms it produces.
//!
//! When `u v* = theta(w*) w`, the map `Psi(a V^n) = a w^(n) V^n` fixes `C(T)` and satisfies
//! `Psi o Phi^v_g = Phi^u_g o Psi`. For a law-defined `u` against the trivial cocycle, the
//! formal witness only exists in `L^2`, so the check runs in the GNS norm on a truncation
//! and is reported as evidence for the von Neumann statement.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::cocycle::{orbit_product, CocycleSpec, GroupElement};
use crate::crossed::{apply_skew, CpElement};
use crate::error::{Error, Result};
use crate::fourier::FourierPoly;
use crate::solver::analytic::law_terms;
use crate::solver::continuous::coboundary_of;
use crate::solver::{classify, Cocycle, SolverConfig, Verdict, VerdictTag};
use crate::unitary::{expand_adaptive, ExpansionConfig, UnitaryFn};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Answer {
    Yes,
    No,
    Inconclusive,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Mode {
    #[serde(rename = "C*")]
    CStar,
    #[serde(rename = "W*-evidence")]
    WStarEvidence,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CohomologyResult {
    pub cohomologous: Answer,
    pub mode: Mode,
    pub verdict: Verdict,
    pub witness: Option<UnitaryFn>,
    /// Intertwining residual in the GNS norm, when a witness was checked.
    pub residual: Option<f64>,
}

/// `Psi(a V^n) = a w^(n) V^n` with `w^(n)` the `alpha`-twisted product of `w`.
#[derive(Clone, Debug, PartialEq)]
pub struct Intertwiner {
    pub witness: UnitaryFn,
    pub alpha: f64,
}

pub fn build_intertwiner(w: &UnitaryFn, alpha: f64) -> Intertwiner {
    Intertwiner { witness: w.clone(), alpha }
}

impl Intertwiner {
    pub fn apply(&self, x: &CpElement, cfg: &ExpansionConfig) -> Result<CpElement> {
        if x.alpha() != self.alpha {
            return Err(Error::AngleMismatch(self.alpha, x.alpha()));
        }
        let mut terms = Vec::new();
        for (n, a) in x.terms() {
            let wn = expand_adaptive(&orbit_product(&self.witness, self.alpha, n), cfg)?.poly;
            terms.push((n, a.mul(&wn)));
        }
        CpElement::from_terms(self.alpha, terms)
    }

    /// The inverse automorphism, built from `w*`.
    pub fn inverse(&self) -> Self {
        Self { witness: self.witness.conj(), alpha: self.alpha }
    }
}

fn check_bases(u: &CocycleSpec, v: &CocycleSpec) -> Result<()> {
    let same = u.dim() == v.dim()
        && u.alpha().value() == v.alpha().value()
        && u.base_angles().iter().zip(v.base_angles()).all(|(a, b)| a.value() == b.value());
    if same {
        Ok(())
    } else {
        Err(Error::BaseMismatch)
    }
}

fn is_trivial(spec: &CocycleSpec) -> bool {
    !spec.is_analytic() && spec.generators().iter().all(|g| *g == UnitaryFn::one())
}

/// `max gns_norm(Psi(Phi^v_g x) - Phi^u_g(Psi x))` over the box `{0..window-1}^d` and `xs`.
pub fn verify_intertwining(
    psi: &Intertwiner,
    u: &CocycleSpec,
    v: &CocycleSpec,
    window: i64,
    xs: &[CpElement],
    cfg: &ExpansionConfig,
) -> Result<f64> {
    check_bases(u, v)?;
    let box_ = GroupElement::window(u.dim(), window);
    let devs = box_
        .par_iter()
        .map(|g| {
            let mut worst = 0.0_f64;
            for x in xs {
                let lhs = psi.apply(&apply_skew(v, g, x, cfg)?, cfg)?;
                let rhs = apply_skew(u, g, &psi.apply(x, cfg)?, cfg)?;
                worst = worst.max(lhs.sub(&rhs)?.gns_norm());
            }
            Ok(worst)
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(devs.into_iter().fold(0.0, f64::max))
}

/// Monomials `V^n`, `|n| <= radius`, the default sample set for intertwining checks.
pub fn monomials(alpha: f64, radius: i64) -> Vec<CpElement> {
    (-radius..=radius).map(|n| CpElement::monomial(alpha, FourierPoly::one(), n)).collect()
}

/// Classifies `u v*` generator by generator and, for a witness, measures the intertwining
/// residual on the box `{0..window-1}^d` against `V^n`, `|n| <= 3`.
pub fn are_cohomologous(
    u: &CocycleSpec,
    v: &CocycleSpec,
    window: i64,
    solver: &SolverConfig,
    cfg: &ExpansionConfig,
) -> Result<CohomologyResult> {
    check_bases(u, v)?;
    if u.is_analytic() || v.is_analytic() {
        return law_evidence(u, v, solver);
    }
    let diffs: Vec<UnitaryFn> = u.generators().iter().zip(v.generators()).map(|(a, b)| a.mul(&b.conj())).collect();
    let mut verdict = classify(Cocycle::Unitary(&diffs[0]), u.base_angle(0), solver)?;
    if let Some(w) = verdict.witness().cloned() {
        for (i, d) in diffs.iter().enumerate().skip(1) {
            let r = coboundary_of(&w, u.theta(i)).grid_distance(d, solver.residual_grid);
            if r > solver.tol {
                let mut diagnostics = verdict.diagnostics().clone();
                diagnostics.insert(format!("generator_{i}_residual"), r);
                verdict = Verdict::Inconclusive { reason: format!("witness fails generator {i}"), diagnostics };
                break;
            }
        }
    }
    let (cohomologous, witness, residual) = match &verdict {
        Verdict::ContinuousCoboundary { witness, .. } => {
            let psi = build_intertwiner(witness, u.alpha().value());
            let r = verify_intertwining(&psi, u, v, window, &monomials(u.alpha().value(), 3), cfg)?;
            let answer = if r <= solver.tol { Answer::Yes } else { Answer::Inconclusive };
            (answer, Some(witness.clone()), Some(r))
        }
        Verdict::NotCoboundary { .. } => (Answer::No, None, None),
        _ => (Answer::Inconclusive, None, None),
    };
    Ok(CohomologyResult { cohomologous, mode: Mode::CStar, verdict, witness, residual })
}

/// Law cocycle `u` against the trivial cocycle. A measurable verdict comes with the GNS
/// residual of the truncated intertwiner on `V`, namely `||u - theta(w_K*) w_K||_2`, which is
/// bounded by `2 pi` times the `L^2` mass of the law beyond the truncation depth.
fn law_evidence(u: &CocycleSpec, v: &CocycleSpec, solver: &SolverConfig) -> Result<CohomologyResult> {
    let (law_spec, other) = if u.is_analytic() { (u, v) } else { (v, u) };
    if !is_trivial(other) {
        return Err(Error::AnalyticCocycle);
    }
    let law = law_spec.law().ok_or(Error::AnalyticCocycle)?;
    let verdict = classify(Cocycle::Law { law, alpha: law_spec.alpha(), level: 1 }, law_spec.base_angle(0), solver)?;
    let cohomologous = match verdict.tag() {
        VerdictTag::ContinuousCoboundary | VerdictTag::MeasurableCoboundary => Answer::Yes,
        VerdictTag::NotCoboundary => Answer::No,
        VerdictTag::Inconclusive => Answer::Inconclusive,
    };
    let residual = if verdict.tag() == VerdictTag::MeasurableCoboundary {
        const EXTRA: usize = 4;
        let terms = law_terms(law, law_spec.base_angle(0), law_spec.alpha(), 1, solver.depth + EXTRA)?;
        let tail: f64 = terms.iter().skip(solver.depth).map(|t| 2.0 * t.phi.norm_sqr()).fold(0.0, |a, b| a + b);
        Some(2.0 * std::f64::consts::PI * tail.sqrt())
    } else {
        None
    };
    Ok(CohomologyResult { cohomologous, mode: Mode::WStarEvidence, verdict, witness: None, residual })
}

/// Grid residual of `theta(W*) W = u z*` with `W = w_{uv} w_{vz}`; a global phase drops out.
pub fn transitivity_residual(
    w_uv: &UnitaryFn,
    w_vz: &UnitaryFn,
    u: &UnitaryFn,
    z: &UnitaryFn,
    theta: f64,
    points: usize,
) -> f64 {
    coboundary_of(&w_uv.mul(w_vz), theta).grid_distance(&u.mul(&z.conj()), points)
}

/// Coefficient deviation between `a` and `b` after the best global phase, both expanded.
pub fn phase_distance(a: &UnitaryFn, b: &UnitaryFn, cfg: &ExpansionConfig) -> Result<f64> {
    let pa = expand_adaptive(a, cfg)?.poly;
    let pb = expand_adaptive(b, cfg)?.poly;
    let ip = pb.inner(&pa);
    let phase = if ip.norm() > 0.0 { ip / ip.norm() } else { Complex64::new(1.0, 0.0) };
    Ok(pa.scale(phase).max_coeff_diff(&pb))
}
