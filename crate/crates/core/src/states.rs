//! Invariant states from measures on the circle.
//!
//! With `n0` the smallest coboundary level and `w_{k n0}` its extended witnesses, the map
//! `T(a V^{k n0}) = omega_0(a w_{k n0}^*) V^{k n0}` (and `T = 0` off the lattice `n0 Z`) lands in
//! `C*(V^{n0})`, a copy of `C(T)`. A probability measure `mu` with moments `c_k` then gives the
//! invariant state `Psi(mu)(x) = sum_k c_k omega_0(a_{k n0} w_{k n0}^*)`.

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use num_bigint::BigUint;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::classifier::{witness_extend, ClassificationReport};
use crate::cocycle::{CocycleSpec, GroupElement};
use crate::crossed::{apply_skew, cesaro_average, CpElement};
use crate::error::{Error, Result};
use crate::fourier::{cis, frac_mul, FourierPoly};
use crate::rotation::Convergent;
use crate::unitary::{expand_adaptive, ExpansionConfig, UnitaryFn};

/// `beta_{n0}`: the gauge action at `e^{2 pi i / n0}`.
pub fn beta_gauge(x: &CpElement, n0: i64) -> Result<CpElement> {
    if n0 < 1 {
        return Err(Error::ZeroLevel);
    }
    Ok(x.gauge(cis(1.0 / n0 as f64)))
}

/// `E_{n0} = (1/n0) sum_k beta_{n0}^k`, which keeps exactly the terms with `n0 | n`.
pub fn expectation_n0(x: &CpElement, n0: i64) -> Result<CpElement> {
    if n0 < 1 {
        return Err(Error::ZeroLevel);
    }
    CpElement::from_terms(x.alpha(), x.terms().filter(|(n, _)| n % n0 == 0).map(|(n, a)| (n, a.clone())))
}

/// Probability measure on `T`: point masses plus a density part of mass `1 - sum(weights)`.
///
/// The density is described by its normalized moments `d_k` (`d_0 = 1`, `d_{-k} = conj(d_k)`);
/// absent moments are zero, so a measure with no atoms and no moments is Haar.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeasureSpec {
    /// `(angle in turns, weight)`.
    #[serde(default)]
    pub atoms: Vec<(f64, f64)>,
    /// `(k, re, im)` for `k >= 1`.
    #[serde(default)]
    pub moments: Vec<(i64, f64, f64)>,
}

const MASS_TOL: f64 = 1e-12;
const MINOR_TOL: f64 = -1e-10;

impl MeasureSpec {
    pub fn haar() -> Self {
        Self { atoms: Vec::new(), moments: Vec::new() }
    }

    pub fn dirac(angle: f64) -> Self {
        Self { atoms: vec![(angle, 1.0)], moments: Vec::new() }
    }

    fn atom_mass(&self) -> f64 {
        self.atoms.iter().map(|a| a.1).sum()
    }

    fn density(&self, k: i64) -> Complex64 {
        if k == 0 {
            return Complex64::new(1.0, 0.0);
        }
        self.moments
            .iter()
            .find(|m| m.0 == k.abs())
            .map(|&(_, re, im)| if k > 0 { Complex64::new(re, im) } else { Complex64::new(re, -im) })
            .unwrap_or_default()
    }

    /// Largest stored density order.
    pub fn order(&self) -> i64 {
        self.moments.iter().map(|m| m.0).max().unwrap_or(0)
    }

    /// `c_k = int z^k d mu`.
    pub fn moment(&self, k: i64) -> Complex64 {
        let atoms: Complex64 = self.atoms.iter().map(|&(t, w)| cis(frac_mul(k as i128, t)) * w).sum();
        atoms + self.density(k) * (1.0 - self.atom_mass())
    }

    /// Weights nonnegative, total mass at most one, and density moments positive definite
    /// in the sense that every leading Toeplitz minor is at least `-1e-10`.
    pub fn validate(&self) -> Result<()> {
        for (i, &(t, w)) in self.atoms.iter().enumerate() {
            if !(0.0..1.0).contains(&t) {
                return Err(Error::InvalidMeasure(format!("atom {i} has angle {t} outside [0, 1)")));
            }
            if w.is_nan() || w < 0.0 {
                return Err(Error::InvalidMeasure(format!("atom {i} has negative weight {w}")));
            }
        }
        let mass = self.atom_mass();
        if mass > 1.0 + MASS_TOL {
            return Err(Error::InvalidMeasure(format!("atom weights sum to {mass} > 1")));
        }
        if !self.moments.is_empty() && mass > 1.0 - MASS_TOL {
            return Err(Error::InvalidMeasure("density moments given but atoms carry all the mass".into()));
        }
        let mut seen = std::collections::BTreeSet::new();
        for &(k, _, _) in &self.moments {
            if k < 1 {
                return Err(Error::InvalidMeasure(format!("moment order {k} must be positive")));
            }
            if !seen.insert(k) {
                return Err(Error::InvalidMeasure(format!("moment order {k} repeated")));
            }
        }
        for (order, det) in self.toeplitz_minors() {
            if det < MINOR_TOL {
                return Err(Error::NonPositiveMeasure { order, det });
            }
        }
        Ok(())
    }

    /// Determinants of the leading `r x r` Toeplitz matrices `[d_{i-j}]` for `r = 1..=order+1`.
    pub fn toeplitz_minors(&self) -> Vec<(usize, f64)> {
        let n = self.order() as usize + 1;
        (1..=n)
            .map(|r| {
                let t = DMatrix::from_fn(r, r, |i, j| self.density(i as i64 - j as i64));
                (r, t.determinant().re)
            })
            .collect()
    }
}

/// Witnesses `w_{k n0}` for `|k| <= radius`, extended from `w_{n0}`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct WitnessTable {
    pub n0: i64,
    pub witnesses: BTreeMap<i64, UnitaryFn>,
}

impl WitnessTable {
    pub fn extend(w: &UnitaryFn, n0: i64, radius: i64, alpha: f64) -> Result<Self> {
        if n0 < 1 {
            return Err(Error::ZeroLevel);
        }
        let witnesses = (-radius..=radius).map(|k| (k * n0, witness_extend(w, n0, k, alpha))).collect();
        Ok(Self { n0, witnesses })
    }

    /// Table built from the report's witness at level `n0`.
    pub fn from_report(report: &ClassificationReport, radius: i64, alpha: f64) -> Result<Self> {
        if report.n0 < 1 {
            return Err(Error::ZeroLevel);
        }
        Self::extend(report.witness(report.n0)?, report.n0, radius, alpha)
    }

    pub fn get(&self, level: i64) -> Result<&UnitaryFn> {
        self.witnesses.get(&level).ok_or(Error::MissingWitness(level))
    }

    /// The same table with `w_{n0}` replaced, for defect injection.
    pub fn with_base(&self, w: &UnitaryFn, alpha: f64) -> Result<Self> {
        let radius = self.witnesses.keys().map(|l| l.abs() / self.n0).max().unwrap_or(0);
        Self::extend(w, self.n0, radius, alpha)
    }
}

/// `omega_0(a w^*)`.
fn pair(a: &FourierPoly, w: &UnitaryFn, cfg: &ExpansionConfig) -> Result<Complex64> {
    Ok(a.inner(&expand_adaptive(w, cfg)?.poly))
}

/// Coefficients of `T(x)` in the basis `V^{k n0}`: `(k, omega_0(a_{k n0} w_{k n0}^*))`.
pub fn t_map(x: &CpElement, table: &WitnessTable, cfg: &ExpansionConfig) -> Result<Vec<(i64, Complex64)>> {
    let mut out = Vec::new();
    for (n, a) in expectation_n0(x, table.n0)?.terms() {
        out.push((n / table.n0, pair(a, table.get(n)?, cfg)?));
    }
    if out.is_empty() {
        out.push((0, Complex64::new(0.0, 0.0)));
    }
    Ok(out)
}

/// `Psi(mu) = phi_mu o T`.
#[derive(Clone, Debug)]
pub struct StateFunctional {
    pub measure: MeasureSpec,
    pub table: WitnessTable,
    pub expansion: ExpansionConfig,
}

impl StateFunctional {
    pub fn eval(&self, x: &CpElement) -> Result<Complex64> {
        let mut acc = Complex64::new(0.0, 0.0);
        for (k, t) in t_map(x, &self.table, &self.expansion)? {
            acc += self.measure.moment(k) * t;
        }
        Ok(acc)
    }
}

pub fn state_from_measure(mu: &MeasureSpec, table: &WitnessTable, cfg: &ExpansionConfig) -> Result<StateFunctional> {
    mu.validate()?;
    Ok(StateFunctional { measure: mu.clone(), table: table.clone(), expansion: *cfg })
}

/// `max |Psi(Phi_g x) - Psi(x)|` over `g` in the box `{0..window-1}^d` and the given elements.
pub fn check_invariance(
    state: &StateFunctional,
    spec: &CocycleSpec,
    window: i64,
    xs: &[CpElement],
    cfg: &ExpansionConfig,
) -> Result<f64> {
    let box_ = GroupElement::window(spec.dim(), window);
    let devs = xs
        .par_iter()
        .map(|x| {
            let base = state.eval(x)?;
            let mut worst = 0.0_f64;
            for g in &box_ {
                worst = worst.max((state.eval(&apply_skew(spec, g, x, cfg)?)? - base).norm());
            }
            Ok(worst)
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(devs.into_iter().fold(0.0, f64::max))
}

/// Cesàro estimate of the invariant conditional expectation of `x`.
#[derive(Clone, Debug, Serialize)]
pub struct FixedPointEstimate {
    pub window: i64,
    /// `||M_{2w}(x) - M_w(x)||_{2, omega}`.
    pub stability: f64,
    /// Window of the limit estimate: the first convergent denominator of `theta` at least `window`.
    pub limit_window: i64,
    #[serde(skip)]
    pub average: CpElement,
    #[serde(skip)]
    pub limit: CpElement,
}

impl FixedPointEstimate {
    /// `sqrt(sum_n ||a_n - c_n w_n||^2)` for the limit's coefficients, with `c_n = omega_0(a_n w_n^*)`
    /// and `a_n` required to vanish off the witness lattice.
    pub fn witness_residual(&self, table: &WitnessTable, cfg: &ExpansionConfig) -> Result<f64> {
        let mut acc = 0.0;
        for (n, a) in self.limit.terms() {
            if n % table.n0 != 0 {
                acc += a.l2_norm_sqr();
                continue;
            }
            let w = expand_adaptive(table.get(n)?, cfg)?.poly;
            let c = a.inner(&w);
            acc += a.sub(&w.scale(c)).l2_norm_sqr();
        }
        Ok(acc.sqrt())
    }
}

/// `M_w(x)` with its doubling stability, plus a limit estimate at a window where the rotation
/// nearly returns (a convergent denominator), which suppresses the `1/w` oscillation of the
/// non-invariant part. The limit estimate is only formed for `d = 1`; otherwise it is `M_w(x)`.
pub fn expectation_onto_fixed_points(
    spec: &CocycleSpec,
    x: &CpElement,
    window: i64,
    cfg: &ExpansionConfig,
) -> Result<FixedPointEstimate> {
    let average = cesaro_average(spec, x, window, cfg)?;
    let doubled = cesaro_average(spec, x, 2 * window, cfg)?;
    let stability = doubled.sub(&average)?.gns_norm();
    // convergents stop at the first denominator >= window; huge ones (Liouville) are not used
    let limit_window = match spec.dim() {
        1 => spec
            .base_angle(0)
            .convergents_while(|c| c.q < BigUint::from(window as u64))
            .last()
            .and_then(Convergent::as_u64)
            .map(|(_, q)| q as i64)
            .filter(|&q| q >= window && q <= 8 * window)
            .unwrap_or(window),
        _ => window,
    };
    let limit = if limit_window == window { average.clone() } else { cesaro_average(spec, x, limit_window, cfg)? };
    Ok(FixedPointEstimate { window, stability, limit_window, average, limit })
}
