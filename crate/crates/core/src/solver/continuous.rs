//! Continuous coboundaries of trigonometric unitaries.
//!
//! Writing `u = e^{2 pi i phi}` (winding 0) and `w = chi_{m_w} e^{2 pi i W}`, the equation
//! `u = theta(w*) w` becomes `phi = W - W(. + theta) - m_w theta` mod 1. So
//! `phi^(0) + m_w theta` must be an integer and `W^(m) = phi^(m) / (1 - e^{2 pi i m theta})`.

use std::collections::BTreeMap;

use super::detector::{detect_invariant_vector, DetectorStatus};
use super::{Certificate, Diagnostics, SolverConfig, Verdict};
use crate::error::Result;
use crate::fourier::{one_minus_cis, wrap_centered, FourierPoly};
use crate::rotation::RotationNumber;
use crate::unitary::UnitaryFn;

/// `theta(w*) w`, the coboundary of `w`.
pub fn coboundary_of(w: &UnitaryFn, theta: f64) -> UnitaryFn {
    w.rotate(theta).conj().mul(w)
}

/// Integer `m` with `|m| <= bound` minimizing the distance of `c + m theta` to the integers;
/// ties go to the smaller `|m|`.
fn best_mean_shift(c: f64, theta: &RotationNumber, bound: i64) -> (i64, f64) {
    let dist = |m: i64| wrap_centered(c + theta.frac_multiple(m)).abs();
    let mut best = (0, dist(0));
    for a in 1..=bound {
        for m in [-a, a] {
            let d = dist(m);
            if d < best.1 {
                best = (m, d);
            }
        }
    }
    best
}

pub fn solve_continuous(u: &UnitaryFn, theta: &RotationNumber, cfg: &SolverConfig) -> Result<Verdict> {
    let mut diag = Diagnostics::new();
    if u.winding() != 0 {
        diag.insert("winding".into(), u.winding() as f64);
        return Ok(Verdict::NotCoboundary {
            certificate: Certificate::WindingObstruction { winding: u.winding() },
            diagnostics: diag,
        });
    }
    let (m_w, dist) = best_mean_shift(u.phase_mean(), theta, cfg.search_bound);
    diag.insert("mean_distance".into(), dist);
    diag.insert("search_bound".into(), cfg.search_bound as f64);

    if 2.0 * std::f64::consts::PI * dist > cfg.tol {
        let ev = detect_invariant_vector(u, theta, &cfg.detector)?;
        diag.insert("detector_max".into(), ev.max_norm);
        diag.insert("detector_tau".into(), ev.tau);
        diag.insert("detector_argmax".into(), ev.argmax as f64);
        if ev.status == DetectorStatus::Null {
            return Ok(Verdict::NotCoboundary {
                certificate: Certificate::MeanObstruction {
                    search_bound: cfg.search_bound,
                    min_distance: dist,
                    detector_max: ev.max_norm,
                    detector_threshold: ev.tau,
                },
                diagnostics: diag,
            });
        }
        let reason = match ev.status {
            DetectorStatus::Invariant => "averages retain mass but no continuous witness within the search bound",
            _ => "no continuous witness within the search bound and detector undecided",
        };
        return Ok(Verdict::Inconclusive { reason: reason.into(), diagnostics: diag });
    }

    let mut coeffs = BTreeMap::new();
    let mut min_div = f64::INFINITY;
    for (m, c) in u.phase().iter().filter(|&(m, _)| m != 0) {
        let div = one_minus_cis(theta.frac_multiple(m));
        min_div = min_div.min(div.norm());
        if div.norm() < cfg.divisor_floor {
            diag.insert("small_divisor_frequency".into(), m as f64);
            diag.insert("small_divisor".into(), div.norm());
            return Ok(Verdict::Inconclusive { reason: "small divisor".into(), diagnostics: diag });
        }
        coeffs.insert(m, c / div);
    }
    if min_div.is_finite() {
        diag.insert("min_divisor".into(), min_div);
    }
    let witness = UnitaryFn::new(m_w, FourierPoly::from_coeffs(coeffs))?;
    let residual = coboundary_of(&witness, theta.value()).grid_distance(u, cfg.residual_grid);
    diag.insert("residual".into(), residual);
    if residual > cfg.tol {
        return Ok(Verdict::Inconclusive { reason: "witness residual above tolerance".into(), diagnostics: diag });
    }
    Ok(Verdict::ContinuousCoboundary { witness, residual, diagnostics: diag })
}

#[cfg(test)]
mod tests {
    use super::super::VerdictTag;
    use super::*;
    use num_complex::Complex64;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn constant_theta_multiple() {
        let theta = RotationNumber::golden();
        let v = solve_continuous(&UnitaryFn::constant(theta.value()), &theta, &SolverConfig::default()).unwrap();
        let w = v.witness().unwrap();
        assert_eq!(w.winding(), -1);
        assert_eq!(w.phase_band(), 0);
    }

    #[test]
    fn trig_coboundary_recovered() {
        let theta = RotationNumber::sqrt2_minus_1();
        let w = UnitaryFn::new(2, FourierPoly::from_coeffs([(1, c(0.2, 0.1)), (-1, c(0.2, -0.1)), (3, c(0.0, 0.05)), (-3, c(0.0, -0.05))]))
            .unwrap();
        let u = coboundary_of(&w, theta.value());
        let v = solve_continuous(&u, &theta, &SolverConfig::default()).unwrap();
        let got = v.witness().unwrap();
        assert_eq!(got.winding(), 2);
        for m in [1, -1, 3, -3] {
            assert!((got.phase().coeff(m) - w.phase().coeff(m)).norm() < 1e-12);
        }
        assert!(v.residual().unwrap() < 1e-12);
    }

    #[test]
    fn winding_obstruction() {
        let v = solve_continuous(&UnitaryFn::character(3), &RotationNumber::golden(), &SolverConfig::default()).unwrap();
        assert_eq!(v.certificate(), Some(&Certificate::WindingObstruction { winding: 3 }));
    }

    #[test]
    fn generic_constant_not_coboundary() {
        let v = solve_continuous(&UnitaryFn::constant(0.123456), &RotationNumber::sqrt2_minus_1(), &SolverConfig::default())
            .unwrap();
        assert_eq!(v.tag(), VerdictTag::NotCoboundary);
        assert_eq!(v.certificate().unwrap().name(), "mean_obstruction");
    }

    #[test]
    fn small_divisor_inconclusive() {
        // A rational angle makes 1 - e^{2 pi i q theta} vanish.
        let theta = RotationNumber::new(vec![3], crate::rotation::Tail::Finite, None).unwrap();
        let u = UnitaryFn::new(0, FourierPoly::from_coeffs([(3, c(0.1, 0.0)), (-3, c(0.1, 0.0))])).unwrap();
        let v = solve_continuous(&u, &theta, &SolverConfig::default()).unwrap();
        assert_eq!(v.tag(), VerdictTag::Inconclusive);
        assert_eq!(v.diagnostics()["small_divisor_frequency"].abs(), 3.0);
    }
}
