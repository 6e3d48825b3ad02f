//! Sparse trigonometric polynomials on the circle `T = R/Z`.
//!
//! A [`FourierPoly`] stores `f(x) = sum_m c_m e^{2 pi i m x}` as a sorted map from
//! frequency to coefficient. Angles are measured in turns throughout; every
//! trigonometric evaluation reduces its argument mod 1 before scaling by `2 pi`.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// Coefficients with modulus below this are dropped.
pub const PRUNE_FLOOR: f64 = 1e-15;

/// Fractional part of `k * t` in `[0, 1)`, with the product's rounding error folded back in.
pub fn frac_mul(k: i128, t: f64) -> f64 {
    let kf = k as f64;
    let p = kf * t;
    let e = kf.mul_add(t, -p);
    // k may not be exactly representable; recover the residual from the split.
    let k_lo = (k - kf as i128) as f64;
    let r = p - p.floor();
    wrap_unit(r + e + k_lo * t)
}

/// Reduce to `[0, 1)`.
pub fn wrap_unit(x: f64) -> f64 {
    let r = x - x.floor();
    if r >= 1.0 {
        0.0
    } else {
        r
    }
}

/// Reduce to `[-1/2, 1/2)`.
pub fn wrap_centered(x: f64) -> f64 {
    let r = wrap_unit(x);
    if r >= 0.5 {
        r - 1.0
    } else {
        r
    }
}

/// `e^{2 pi i t}` for `t` in turns.
pub fn cis(t: f64) -> Complex64 {
    let (s, c) = (2.0 * PI * wrap_centered(t)).sin_cos();
    Complex64::new(c, s)
}

/// `1 - e^{2 pi i t}`, computed without cancellation as `-2i sin(pi t) e^{i pi t}`.
pub fn one_minus_cis(t: f64) -> Complex64 {
    let t = wrap_centered(t);
    let (s, c) = (PI * t).sin_cos();
    Complex64::new(0.0, -2.0 * s) * Complex64::new(c, s)
}

/// `sum_{j in 0..n} e^{2 pi i j x}` for `n >= 0`.
pub fn geometric_sum(x: f64, n: u64) -> Complex64 {
    if n == 0 {
        return Complex64::new(0.0, 0.0);
    }
    let x = wrap_centered(x);
    let den = one_minus_cis(x);
    if den.norm() < 1e-6 {
        let mut acc = Complex64::new(0.0, 0.0);
        for j in 0..n {
            acc += cis(frac_mul(j as i128, x));
        }
        return acc;
    }
    one_minus_cis(frac_mul(n as i128, x)) / den
}

/// `sum_{j in J_n} e^{2 pi i j x}` where `J_n = {0..n-1}` for `n >= 0` and `{n..-1}` for `n < 0`.
pub fn signed_geometric_sum(x: f64, n: i64) -> Complex64 {
    if n >= 0 {
        geometric_sum(x, n as u64)
    } else {
        cis(frac_mul(n as i128, x)) * geometric_sum(x, n.unsigned_abs())
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct FourierPoly {
    coeffs: BTreeMap<i64, Complex64>,
}

impl FourierPoly {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn one() -> Self {
        Self::constant(Complex64::new(1.0, 0.0))
    }

    pub fn constant(c: Complex64) -> Self {
        Self::from_coeffs([(0, c)])
    }

    /// The character `chi_m(x) = e^{2 pi i m x}`.
    pub fn character(m: i64) -> Self {
        Self::from_coeffs([(m, Complex64::new(1.0, 0.0))])
    }

    /// Builds a polynomial, summing repeated frequencies and pruning tiny coefficients.
    pub fn from_coeffs<I: IntoIterator<Item = (i64, Complex64)>>(it: I) -> Self {
        let mut coeffs = BTreeMap::new();
        for (m, c) in it {
            *coeffs.entry(m).or_insert(Complex64::new(0.0, 0.0)) += c;
        }
        let mut p = Self { coeffs };
        p.prune();
        p
    }

    fn prune(&mut self) {
        self.coeffs.retain(|_, c| c.norm() >= PRUNE_FLOOR);
    }

    pub fn coeff(&self, m: i64) -> Complex64 {
        self.coeffs.get(&m).copied().unwrap_or_default()
    }

    pub fn iter(&self) -> impl Iterator<Item = (i64, Complex64)> + '_ {
        self.coeffs.iter().map(|(&m, &c)| (m, c))
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Largest `|m|` with a nonzero coefficient (0 for the zero polynomial).
    pub fn band(&self) -> i64 {
        let lo = self.coeffs.keys().next().map_or(0, |m| m.abs());
        let hi = self.coeffs.keys().next_back().map_or(0, |m| m.abs());
        lo.max(hi)
    }

    pub fn eval(&self, x: f64) -> Complex64 {
        self.iter().map(|(m, c)| c * cis(frac_mul(m as i128, x))).sum()
    }

    /// `f(x + t)`: each coefficient picks up `e^{2 pi i m t}`.
    pub fn rotate(&self, t: f64) -> Self {
        let t = wrap_unit(t);
        Self::from_coeffs(self.iter().map(|(m, c)| (m, c * cis(frac_mul(m as i128, t)))))
    }

    /// Pointwise complex conjugate: `c_m -> conj(c_{-m})`.
    pub fn conj(&self) -> Self {
        Self::from_coeffs(self.iter().map(|(m, c)| (-m, c.conj())))
    }

    pub fn scale(&self, s: Complex64) -> Self {
        Self::from_coeffs(self.iter().map(|(m, c)| (m, c * s)))
    }

    pub fn add(&self, other: &Self) -> Self {
        Self::from_coeffs(self.iter().chain(other.iter()))
    }

    pub fn sub(&self, other: &Self) -> Self {
        Self::from_coeffs(self.iter().chain(other.iter().map(|(m, c)| (m, -c))))
    }

    /// Pointwise product (coefficient convolution).
    pub fn mul(&self, other: &Self) -> Self {
        let mut out: BTreeMap<i64, Complex64> = BTreeMap::new();
        for (m, a) in self.iter() {
            for (n, b) in other.iter() {
                *out.entry(m + n).or_default() += a * b;
            }
        }
        Self::from_coeffs(out)
    }

    /// Keeps frequencies with `|m| <= band`.
    pub fn truncate(&self, band: i64) -> Self {
        Self::from_coeffs(self.iter().filter(|(m, _)| m.abs() <= band))
    }

    pub fn shift(&self, k: i64) -> Self {
        Self::from_coeffs(self.iter().map(|(m, c)| (m + k, c)))
    }

    /// Haar mean, i.e. the zeroth coefficient.
    pub fn mean(&self) -> Complex64 {
        self.coeff(0)
    }

    pub fn l2_norm_sqr(&self) -> f64 {
        self.coeffs.values().map(|c| c.norm_sqr()).fold(0.0, |a, b| a + b)
    }

    pub fn l2_norm(&self) -> f64 {
        self.l2_norm_sqr().sqrt()
    }

    pub fn l1_norm(&self) -> f64 {
        self.coeffs.values().map(|c| c.norm()).sum()
    }

    /// `<f, g> = int f conj(g)`.
    pub fn inner(&self, other: &Self) -> Complex64 {
        self.iter().map(|(m, c)| c * other.coeff(m).conj()).sum()
    }

    /// Largest defect `|c_{-m} - conj(c_m)|` over the support, with its frequency.
    pub fn reality_defect(&self) -> (i64, f64) {
        let mut worst = (0, 0.0);
        for (m, c) in self.iter() {
            let d = (self.coeff(-m) - c.conj()).norm();
            if d > worst.1 {
                worst = (m.abs(), d);
            }
        }
        worst
    }

    /// Real part as a function: `(f + conj f) / 2`.
    pub fn real_part(&self) -> Self {
        self.add(&self.conj()).scale(Complex64::new(0.5, 0.0))
    }

    pub fn max_coeff_diff(&self, other: &Self) -> f64 {
        self.sub(other).coeffs.values().map(|c| c.norm()).fold(0.0, f64::max)
    }
}

impl Serialize for FourierPoly {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let rows: Vec<(i64, f64, f64)> = self.iter().map(|(m, c)| (m, c.re, c.im)).collect();
        rows.serialize(s)
    }
}

impl<'de> Deserialize<'de> for FourierPoly {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let rows: Vec<(i64, f64, f64)> = Vec::deserialize(d)?;
        Ok(Self::from_coeffs(rows.into_iter().map(|(m, re, im)| (m, Complex64::new(re, im)))))
    }
}
