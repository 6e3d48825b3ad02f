//! Unitary functions `u(x) = e^{2 pi i (k x + phi(x))}` with integer winding `k`
//! and a real trigonometric phase `phi`.

use std::cell::RefCell;

use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fourier::{cis, frac_mul, wrap_unit, FourierPoly};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct UnitaryFn {
    winding: i64,
    phase: FourierPoly,
}

const REALITY_TOL: f64 = 1e-12;

impl UnitaryFn {
    /// Rejects phases that are not real-valued; the constant term is reduced mod 1.
    pub fn new(winding: i64, phase: FourierPoly) -> Result<Self> {
        let (frequency, defect) = phase.reality_defect();
        if defect > REALITY_TOL {
            return Err(Error::NonRealPhase { frequency, defect });
        }
        Ok(Self::normalized(winding, phase.real_part()))
    }

    fn normalized(winding: i64, phase: FourierPoly) -> Self {
        let c0 = wrap_unit(phase.coeff(0).re);
        let phase = FourierPoly::from_coeffs(
            phase
                .iter()
                .filter(|&(m, _)| m != 0)
                .chain(std::iter::once((0, Complex64::new(c0, 0.0)))),
        );
        Self { winding, phase }
    }

    pub fn one() -> Self {
        Self { winding: 0, phase: FourierPoly::zero() }
    }

    pub fn character(k: i64) -> Self {
        Self { winding: k, phase: FourierPoly::zero() }
    }

    /// The constant `e^{2 pi i c}`.
    pub fn constant(c: f64) -> Self {
        Self::normalized(0, FourierPoly::constant(Complex64::new(c, 0.0)))
    }

    pub fn winding(&self) -> i64 {
        self.winding
    }

    pub fn phase(&self) -> &FourierPoly {
        &self.phase
    }

    /// Constant part of the phase, in `[0, 1)`.
    pub fn phase_mean(&self) -> f64 {
        self.phase.coeff(0).re
    }

    pub fn phase_band(&self) -> i64 {
        self.phase.band()
    }

    /// Winding zero and no oscillating phase.
    pub fn is_constant(&self) -> bool {
        self.winding == 0 && self.phase.band() == 0
    }

    /// `k x + phi(x)` mod 1.
    pub fn turns_at(&self, x: f64) -> f64 {
        wrap_unit(frac_mul(self.winding as i128, x) + self.phase.eval(x).re)
    }

    pub fn eval(&self, x: f64) -> Complex64 {
        cis(self.turns_at(x))
    }

    pub fn mul(&self, other: &Self) -> Self {
        Self::normalized(self.winding + other.winding, self.phase.add(&other.phase))
    }

    pub fn conj(&self) -> Self {
        Self::normalized(-self.winding, self.phase.scale(Complex64::new(-1.0, 0.0)))
    }

    /// `x -> u(x + t)`.
    pub fn rotate(&self, t: f64) -> Self {
        let shift = frac_mul(self.winding as i128, wrap_unit(t));
        let phase = self.phase.rotate(t).add(&FourierPoly::constant(Complex64::new(shift, 0.0)));
        Self::normalized(self.winding, phase)
    }

    /// Multiply by the constant `e^{2 pi i c}`.
    pub fn with_phase_offset(&self, c: f64) -> Self {
        self.mul(&Self::constant(c))
    }

    /// `sup |u - v|` sampled on `points` equispaced points.
    pub fn grid_distance(&self, other: &Self, points: usize) -> f64 {
        (0..points)
            .map(|j| {
                let x = j as f64 / points as f64;
                (self.eval(x) - other.eval(x)).norm()
            })
            .fold(0.0, f64::max)
    }
}

/// A truncated Fourier series together with the mass discarded from the sampling grid.
#[derive(Clone, Debug)]
pub struct Expansion {
    pub poly: FourierPoly,
    pub aliasing: f64,
    pub grid: usize,
}

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

/// Samples `e^{2 pi i phi}` on an `l`-point grid and returns its discrete Fourier coefficients,
/// indexed by signed frequency.
fn phase_spectrum(phase: &FourierPoly, l: usize) -> Vec<(i64, Complex64)> {
    let mut buf = vec![Complex64::new(0.0, 0.0); l];
    for (m, c) in phase.iter() {
        buf[m.rem_euclid(l as i64) as usize] += c;
    }
    PLANNER.with(|p| p.borrow_mut().plan_fft_inverse(l).process(&mut buf));
    for v in buf.iter_mut() {
        *v = cis(v.re);
    }
    PLANNER.with(|p| p.borrow_mut().plan_fft_forward(l).process(&mut buf));
    let scale = 1.0 / l as f64;
    buf.into_iter()
        .enumerate()
        .map(|(j, v)| {
            let f = if j < l / 2 { j as i64 } else { j as i64 - l as i64 };
            (f, v * scale)
        })
        .collect()
}

/// Expansion keeping frequencies in `[center - half, center + half]` on an `l`-point grid.
fn expand_window(u: &UnitaryFn, lo: i64, hi: i64, l: usize) -> Expansion {
    let k = u.winding;
    if u.phase.band() == 0 {
        let c = cis(u.phase_mean());
        let inside = (lo..=hi).contains(&k);
        let poly = if inside { FourierPoly::from_coeffs([(k, c)]) } else { FourierPoly::zero() };
        return Expansion { poly, aliasing: if inside { 0.0 } else { 1.0 }, grid: l };
    }
    let mut kept = Vec::new();
    let mut aliasing = 0.0;
    for (f, c) in phase_spectrum(&u.phase, l) {
        let m = f + k;
        if (lo..=hi).contains(&m) {
            kept.push((m, c));
        } else {
            aliasing += c.norm();
        }
    }
    Expansion { poly: FourierPoly::from_coeffs(kept), aliasing, grid: l }
}

fn grid_for(band: i64) -> usize {
    ((8 * band.max(1)) as usize).next_power_of_two()
}

/// Band-`band` truncation of the Fourier series of `u`, sampled on the next power of two
/// at least `8 * band`.
pub fn expand_unitary(u: &UnitaryFn, band: i64) -> Result<Expansion> {
    if band < 1 {
        return Err(Error::EmptyBand);
    }
    let grid = grid_for(band);
    let budget = (grid / 4) as i64;
    if u.phase_band() > budget {
        return Err(Error::GridBudget { phase_band: u.phase_band(), budget, grid });
    }
    Ok(expand_window(u, -band, band, grid))
}

/// Limits for expanding unitaries inside crossed-product arithmetic.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExpansionConfig {
    /// Largest admissible `|m|` in any coefficient.
    pub cap: i64,
    /// Required bound on the discarded grid mass.
    pub tol: f64,
}

impl Default for ExpansionConfig {
    fn default() -> Self {
        Self { cap: 512, tol: 1e-13 }
    }
}

/// Expands `u` around its winding, widening the window until the discarded mass is below
/// `cfg.tol`.
pub fn expand_adaptive(u: &UnitaryFn, cfg: &ExpansionConfig) -> Result<Expansion> {
    let k = u.winding;
    let mut half = (2 * u.phase_band()).max(8);
    let exp = loop {
        let e = expand_window(u, k - half, k + half, grid_for(half));
        if e.aliasing <= cfg.tol || u.phase_band() == 0 {
            break e;
        }
        if half >= cfg.cap {
            return Err(Error::ExpansionBudget { band: half, tail: e.aliasing, tol: cfg.tol });
        }
        half = (half * 2).min(cfg.cap);
    };
    if let Some(m) = exp.poly.iter().map(|(m, _)| m).find(|m| m.abs() > cfg.cap) {
        return Err(Error::BandOverflow { frequency: m, cap: cfg.cap });
    }
    Ok(exp)
}
