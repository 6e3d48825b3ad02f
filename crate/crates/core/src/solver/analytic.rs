//! Coboundary analysis for cocycles `u = e^{2 pi i phi}` whose phase is given by a
//! [`CoefficientLaw`] on convergent denominators `q_k` of `theta`.
//!
//! At level `n` the phase is `phi^(n) = s sum_{j in J_n} phi(. + j a)` (with `s = -1` for
//! `n < 0`), so each coefficient is multiplied by `G_n(q) = s sum_{j in J_n} e^{2 pi i j q a}`.
//! The formal additive solution has `W^(q) = phi^(n)^(q) / (1 - e^{2 pi i q theta})`.
//!
//! * Square-summability of `W^` is decided from the amplitude rule, with an explicit tail bound.
//! * Non-continuity of a square-summable solution is certified through lacunarity: the
//!   support is a finite union of Hadamard sequences (`q_{k+2} >= 2 q_k`), hence a Sidon set, and a
//!   continuous function with Sidon spectrum has absolutely summable coefficients. Divergence
//!   of `sum |W^(q_k)|` therefore rules out a continuous solution.
//! * A Fejér-mean comparison on a grid is reported as a heuristic alongside.

use std::f64::consts::PI;

use num_bigint::{BigInt, BigUint};
use num_complex::Complex64;
use num_integer::Integer;
use num_traits::ToPrimitive;

use super::{
    Certificate, Diagnostics, LawCoefficient, MeasurableEvidence, NonContinuity, SolverConfig, Verdict,
    MEASURABLE_CONVENTION,
};
use crate::error::Result;
use crate::fourier::{cis, one_minus_cis, signed_geometric_sum, wrap_unit};
use crate::law::{AmplitudeRule, CoefficientLaw, SupportPoint};
use crate::rotation::{big_ratio, RotationNumber};
use crate::unitary::UnitaryFn;

/// One support point at a given level.
#[derive(Clone, Debug)]
pub struct LawTerm {
    pub k: usize,
    pub q: BigUint,
    /// `q theta - nearest integer`.
    pub delta: f64,
    /// Level multiplier `G_n(q)`.
    pub multiplier: Complex64,
    /// `phi^(n)^(q)`.
    pub phi: Complex64,
    /// `W^(q)`.
    pub w: Complex64,
}

/// `phi^(q_k)` and `W^(q_k)` at level 1.
fn base_coefficients(rule: &AmplitudeRule, pt: &SupportPoint) -> (Complex64, Complex64) {
    let s = rule.scale(pt.k);
    let sign = if pt.nearest.is_odd() { -1.0 } else { 1.0 };
    match rule {
        AmplitudeRule::Power { .. } => {
            let phi = Complex64::new(s, 0.0);
            let div = one_minus_cis(pt.delta);
            let w = if div.norm() == 0.0 { Complex64::new(f64::INFINITY, 0.0) } else { phi / div };
            (phi, w)
        }
        AmplitudeRule::MatchDivisor { .. } => {
            // sin(pi q theta) = (-1)^N sin(pi delta); the divisor cancels exactly.
            let phi = Complex64::new(2.0 * sign * (PI * pt.delta).sin() * s, 0.0);
            let w = Complex64::new(0.0, sign * s) * cis(-pt.delta / 2.0);
            (phi, w)
        }
    }
}

/// Support points with coefficients at level `level`.
pub fn law_terms(
    law: &CoefficientLaw,
    theta: &RotationNumber,
    alpha: &RotationNumber,
    level: i64,
    depth: usize,
) -> Result<Vec<LawTerm>> {
    let pts = law.support_points(theta, depth)?;
    let sign = if level < 0 { -1.0 } else { 1.0 };
    pts.iter()
        .map(|pt| {
            let (phi, w) = base_coefficients(&law.amplitude, pt);
            let (_, qa) = alpha.nearest_multiple(&BigInt::from(pt.q.clone()))?;
            let multiplier = if level == 1 { Complex64::new(1.0, 0.0) } else { signed_geometric_sum(wrap_unit(qa), level) * sign };
            Ok(LawTerm { k: pt.k, q: pt.q.clone(), delta: pt.delta, multiplier, phi: phi * multiplier, w: w * multiplier })
        })
        .collect()
}

/// Certified lower bound on `|G_n(q_k)|` for every `k` past the computed ones, if available.
///
/// When `alpha = theta`, `G_n(q_k)` sums `e^{2 pi i j delta_k}` with `|delta_k|` decreasing, and
/// `|sin(pi n d) / sin(pi d)| >= 2|n|/pi` once `|n d| <= 1/2`.
fn multiplier_floor(theta: &RotationNumber, alpha: &RotationNumber, level: i64, terms: &[LawTerm]) -> Option<f64> {
    if level == 1 {
        return Some(1.0);
    }
    let last = terms.last()?;
    if theta == alpha && (level as f64 * last.delta).abs() <= 0.5 {
        Some(2.0 * level.unsigned_abs() as f64 / PI)
    } else {
        None
    }
}

/// Sup over a grid of the difference of two Fejér means of `W`, `sigma_{N_K}` against
/// `sigma_{N_{ceil(K/2)}}`, with `N_j = q_{j+1} - 1`.
fn fejer_gap(terms: &[LawTerm], next_q: &BigUint, grid: usize) -> f64 {
    let kk = terms.len();
    let half = kk.div_ceil(2);
    let ends: Vec<BigUint> = terms.iter().skip(1).map(|t| t.q.clone()).chain(std::iter::once(next_q.clone())).collect();
    let weight = |k: usize, upto: usize| -> f64 {
        if k >= upto {
            return 0.0;
        }
        1.0 - big_ratio(&BigInt::from(terms[k].q.clone()), &ends[upto - 1])
    };
    let l = BigUint::from(grid);
    let residues: Vec<u64> = terms.iter().map(|t| (&t.q % &l).to_u64().unwrap()).collect();
    let mut gap: f64 = 0.0;
    for j in 0..grid {
        let mut acc = 0.0;
        for (k, t) in terms.iter().enumerate() {
            let dw = weight(k, kk) - weight(k, half);
            if dw == 0.0 || !t.w.is_finite() {
                continue;
            }
            let e = cis(((residues[k] as u128 * j as u128) % grid as u128) as f64 / grid as f64);
            acc += 2.0 * dw * (t.w * e).re;
        }
        gap = gap.max(acc.abs());
    }
    gap
}

fn coefficient_table(terms: &[LawTerm]) -> Vec<LawCoefficient> {
    terms.iter().map(|t| LawCoefficient { frequency: t.q.to_string(), re: t.w.re, im: t.w.im }).collect()
}

pub fn solve_analytic(
    law: &CoefficientLaw,
    theta: &RotationNumber,
    alpha: &RotationNumber,
    level: i64,
    cfg: &SolverConfig,
) -> Result<Verdict> {
    let mut diag = Diagnostics::new();
    if law.is_empty() || level == 0 {
        return Ok(Verdict::ContinuousCoboundary { witness: UnitaryFn::one(), residual: 0.0, diagnostics: diag });
    }
    let depth = cfg.depth;
    let mut all = law_terms(law, theta, alpha, level, depth + 1)?;
    let next_q = all.pop().map(|t| t.q);
    let terms = all;
    let next_q = next_q.unwrap_or_else(|| terms.last().map(|t| &t.q * 2u32).unwrap_or_default());

    let l2_partial: f64 = terms.iter().map(|t| t.w.norm_sqr()).sum();
    let l1_partial: f64 = terms.iter().map(|t| t.w.norm()).sum();
    diag.insert("l2_partial".into(), l2_partial);
    diag.insert("l1_partial".into(), l1_partial);
    diag.insert("depth".into(), depth as f64);
    diag.insert("level".into(), level as f64);

    let c = law.amplitude.c().abs();
    let p = law.amplitude.p();
    let n = level.unsigned_abs() as f64;
    let floor = multiplier_floor(theta, alpha, level, &terms);
    if let Some(f) = floor {
        diag.insert("multiplier_floor".into(), f);
    }
    let last_k = terms.last().map_or(0, |t| t.k) as f64;

    let divergent = match law.amplitude {
        AmplitudeRule::Power { .. } => true,
        AmplitudeRule::MatchDivisor { .. } => p <= 0.5,
    };
    if divergent {
        let Some(f) = floor else {
            return Ok(Verdict::Inconclusive {
                reason: "coefficients grow at level 1 but the level multiplier has no certified lower bound".into(),
                diagnostics: diag,
            });
        };
        let (term_lower_bound, rl, rule) = match law.amplitude {
            // |W^(q_k)| >= f c / (k^p 2 pi |delta_k|) and |delta_k| <= 1/q_{k+1} -> infinity.
            AmplitudeRule::Power { .. } => {
                let t = terms.last().unwrap();
                let bound = f * c / (last_k.powf(p) * 2.0 * PI * t.delta.abs());
                (bound, true, format!("power rule c/k^p with p = {p}: |W^(q_k)| >= c q_(k+1) / (2 pi k^p)"))
            }
            AmplitudeRule::MatchDivisor { .. } => {
                let bound = f * c / last_k.powf(p);
                (bound, p <= 0.0, format!("matched divisors with p = {p} <= 1/2: sum c^2 / k^(2p) diverges"))
            }
        };
        return Ok(Verdict::NotCoboundary {
            certificate: Certificate::L2Divergence {
                depth,
                partial_sum: l2_partial,
                term_lower_bound,
                riemann_lebesgue_violated: rl,
                rule,
            },
            diagnostics: diag,
        });
    }

    // sum_{k > K} n^2 c^2 / k^{2p} <= n^2 c^2 K^{1-2p} / (2p - 1).
    let tail = n * n * c * c * last_k.powf(1.0 - 2.0 * p) / (2.0 * p - 1.0);
    diag.insert("l2_tail_bound".into(), tail);

    let mut noncontinuity = Vec::new();
    let rl_min = terms.iter().map(|t| t.w.norm()).fold(f64::INFINITY, f64::min);
    diag.insert("riemann_lebesgue_min".into(), rl_min);
    if p <= 1.0 && floor.is_some() {
        noncontinuity.push(NonContinuity { kind: "lacunary_sidon".into(), rigorous: true, value: l1_partial, threshold: 0.0 });
    }
    let gap = fejer_gap(&terms, &next_q, cfg.fejer_grid);
    diag.insert("fejer_gap".into(), gap);
    if gap > cfg.fejer_threshold {
        noncontinuity.push(NonContinuity {
            kind: "fejer_cauchy".into(),
            rigorous: false,
            value: gap,
            threshold: cfg.fejer_threshold,
        });
    }

    if noncontinuity.is_empty() {
        let reason = if p > 1.0 {
            "formal solution is absolutely summable; no finite trigonometric witness is available"
        } else {
            "square-summable formal solution without a non-continuity certificate"
        };
        return Ok(Verdict::Inconclusive { reason: reason.into(), diagnostics: diag });
    }
    Ok(Verdict::MeasurableCoboundary {
        coefficients: coefficient_table(&terms),
        evidence: MeasurableEvidence {
            depth,
            l2_partial,
            l2_tail_bound: tail,
            l1_partial,
            noncontinuity,
            convention: MEASURABLE_CONVENTION.into(),
        },
        diagnostics: diag,
    })
}
