//! Elements `x = sum_n a_n V^n` of the crossed product `C(T) x_alpha Z`.
//!
//! Multiplication follows `V a V* = alpha(a)`, i.e. `(a V^m)(b V^n) = a alpha^m(b) V^{m+n}`;
//! the adjoint is `(a V^n)* = alpha^{-n}(a*) V^{-n}`. The conditional expectation keeps `a_0`
//! and the canonical state is `omega(x) = a_0^(0)`.
//!
//! A cocycle `u` for the rotation action gives automorphisms
//! `Phi_g(a V^n) = theta_g(a) u_g^(n) V^n`. In the GNS space of `omega` a vector is written through its
//! components `xi_n` (the class of `xi_n V^n`); `Phi_g` induces a unitary acting on
//! components by the same formula, and `||[x]||^2 = sum_n ||a_n||_2^2`.

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cocycle::{orbit_product, CocycleSpec, GroupElement};
use crate::error::{Error, Result};
use crate::fourier::{frac_mul, FourierPoly};
use crate::unitary::{expand_adaptive, ExpansionConfig};

/// Largest admissible `|n|` in `V^n`.
pub const DEGREE_CAP: i64 = 64;

#[derive(Clone, Debug, PartialEq)]
pub struct CpElement {
    alpha: f64,
    terms: BTreeMap<i64, FourierPoly>,
}

impl CpElement {
    pub fn zero(alpha: f64) -> Self {
        Self { alpha, terms: BTreeMap::new() }
    }

    pub fn one(alpha: f64) -> Self {
        Self::monomial(alpha, FourierPoly::one(), 0)
    }

    /// `a V^n`.
    pub fn monomial(alpha: f64, a: FourierPoly, n: i64) -> Self {
        let mut x = Self::zero(alpha);
        x.insert(n, a);
        x
    }

    pub fn from_terms<I: IntoIterator<Item = (i64, FourierPoly)>>(alpha: f64, it: I) -> Result<Self> {
        let mut x = Self::zero(alpha);
        for (n, a) in it {
            if n.abs() > DEGREE_CAP {
                return Err(Error::DegreeOverflow { degree: n, cap: DEGREE_CAP });
            }
            let sum = x.term(n).add(&a);
            x.insert(n, sum);
        }
        Ok(x)
    }

    fn insert(&mut self, n: i64, a: FourierPoly) {
        if a.is_zero() {
            self.terms.remove(&n);
        } else {
            self.terms.insert(n, a);
        }
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// `a_n` (zero when absent).
    pub fn term(&self, n: i64) -> FourierPoly {
        self.terms.get(&n).cloned().unwrap_or_default()
    }

    pub fn terms(&self) -> impl Iterator<Item = (i64, &FourierPoly)> + '_ {
        self.terms.iter().map(|(&n, a)| (n, a))
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// Largest `|n|` with `a_n != 0`.
    pub fn support_radius(&self) -> i64 {
        self.terms.keys().map(|n| n.abs()).max().unwrap_or(0)
    }

    /// Largest Fourier band over all coefficients.
    pub fn band(&self) -> i64 {
        self.terms.values().map(FourierPoly::band).max().unwrap_or(0)
    }

    fn check_angle(&self, other: &Self) -> Result<()> {
        if self.alpha != other.alpha {
            return Err(Error::AngleMismatch(self.alpha, other.alpha));
        }
        Ok(())
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_angle(other)?;
        let mut out = self.clone();
        out.accumulate(other);
        Ok(out)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.add(&other.scale(Complex64::new(-1.0, 0.0)))
    }

    fn accumulate(&mut self, other: &Self) {
        for (n, a) in other.terms() {
            let sum = self.term(n).add(a);
            self.insert(n, sum);
        }
    }

    pub fn scale(&self, s: Complex64) -> Self {
        let mut out = Self::zero(self.alpha);
        for (n, a) in self.terms() {
            out.insert(n, a.scale(s));
        }
        out
    }

    /// `alpha^k` applied to a coefficient: rotation by `k a`.
    fn alpha_pow(&self, a: &FourierPoly, k: i64) -> FourierPoly {
        a.rotate(frac_mul(k as i128, self.alpha))
    }

    pub fn multiply(&self, other: &Self) -> Result<Self> {
        self.check_angle(other)?;
        let mut acc: BTreeMap<i64, FourierPoly> = BTreeMap::new();
        for (m, a) in self.terms() {
            for (n, b) in other.terms() {
                let deg = m + n;
                if deg.abs() > DEGREE_CAP {
                    return Err(Error::DegreeOverflow { degree: deg, cap: DEGREE_CAP });
                }
                let prod = a.mul(&self.alpha_pow(b, m));
                let entry = acc.entry(deg).or_default();
                *entry = entry.add(&prod);
            }
        }
        let mut out = Self::zero(self.alpha);
        for (n, a) in acc {
            out.insert(n, a);
        }
        Ok(out)
    }

    pub fn adjoint(&self) -> Self {
        let mut out = Self::zero(self.alpha);
        for (n, a) in self.terms() {
            out.insert(-n, self.alpha_pow(&a.conj(), -n));
        }
        out
    }

    /// Conditional expectation onto `C(T)`.
    pub fn expectation(&self) -> FourierPoly {
        self.term(0)
    }

    /// `omega(x) = a_0^(0)`.
    pub fn canonical_state(&self) -> Complex64 {
        self.term(0).mean()
    }

    /// Gauge automorphism `a_n V^n -> z^n a_n V^n`.
    pub fn gauge(&self, z: Complex64) -> Self {
        let mut out = Self::zero(self.alpha);
        for (n, a) in self.terms() {
            out.insert(n, a.scale(z.powi(n as i32)));
        }
        out
    }

    /// `sqrt(omega(x* x)) = sqrt(sum_n ||a_n||_2^2)`.
    pub fn gns_norm(&self) -> f64 {
        self.terms.values().map(FourierPoly::l2_norm_sqr).fold(0.0, |a, b| a + b).sqrt()
    }

    /// Largest coefficient deviation from `other`.
    pub fn max_coeff_diff(&self, other: &Self) -> f64 {
        let keys: std::collections::BTreeSet<i64> = self.terms.keys().chain(other.terms.keys()).copied().collect();
        keys.into_iter().map(|n| self.term(n).max_coeff_diff(&other.term(n))).fold(0.0, f64::max)
    }

    /// `V^k E(V^{-k} x)`, the degree-`k` component recovered through the expectation.
    pub fn fourier_component(&self, k: i64) -> Result<Self> {
        let shift_down = Self::monomial(self.alpha, FourierPoly::one(), -k);
        let e = shift_down.multiply(self)?.expectation();
        Self::monomial(self.alpha, FourierPoly::one(), k).multiply(&Self::monomial(self.alpha, e, 0))
    }

    /// Weighted reconstruction `sum_{|k| <= window} weight(k) V^k E(V^{-k} x)`.
    pub fn reconstruct(&self, window: i64, weight: impl Fn(i64) -> f64) -> Result<Self> {
        let mut out = Self::zero(self.alpha);
        for k in -window..=window {
            let w = weight(k);
            if w != 0.0 {
                out.accumulate(&self.fourier_component(k)?.scale(Complex64::new(w, 0.0)));
            }
        }
        Ok(out)
    }

    /// Plain partial sum `sum_{|k| <= window} V^k E(V^{-k} x)`.
    pub fn partial_sum(&self, window: i64) -> Result<Self> {
        self.reconstruct(window, |_| 1.0)
    }

    /// Fejér mean `sum_{|k| <= window} (1 - |k|/window) V^k E(V^{-k} x)`.
    pub fn fejer_mean(&self, window: i64) -> Result<Self> {
        if window < 1 {
            return Err(Error::EmptyWindow);
        }
        self.reconstruct(window, |k| 1.0 - k.abs() as f64 / window as f64)
    }

    /// de la Vallée-Poussin mean `2 sigma_{2K} - sigma_K` of the Fejér means: weight 1 for
    /// `|k| <= K`, so it reproduces any element supported in `|n| <= K`.
    pub fn vallee_poussin_mean(&self, window: i64) -> Result<Self> {
        if window < 1 {
            return Err(Error::EmptyWindow);
        }
        let w = window as f64;
        self.reconstruct(2 * window, |k| (2.0 - k.abs() as f64 / w).min(1.0))
    }

    /// Random element with `|n| <= radius` and coefficient band `band`, entries uniform in the unit square.
    pub fn random<R: Rng>(alpha: f64, radius: i64, band: i64, rng: &mut R) -> Self {
        let mut x = Self::zero(alpha);
        for n in -radius..=radius {
            let a = FourierPoly::from_coeffs(
                (-band..=band).map(|m| (m, Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))),
            );
            x.insert(n, a);
        }
        x
    }
}

/// `[{n, coeffs: [[m, re, im], ...]}, ...]`.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TermRecord {
    pub n: i64,
    pub coeffs: FourierPoly,
}

impl CpElement {
    pub fn to_records(&self) -> Vec<TermRecord> {
        self.terms().map(|(n, a)| TermRecord { n, coeffs: a.clone() }).collect()
    }

    pub fn from_records(alpha: f64, records: &[TermRecord]) -> Result<Self> {
        Self::from_terms(alpha, records.iter().map(|r| (r.n, r.coeffs.clone())))
    }
}

fn check_spec_angle(spec: &CocycleSpec, x: &CpElement) -> Result<()> {
    if spec.alpha().value() != x.alpha {
        return Err(Error::AngleMismatch(spec.alpha().value(), x.alpha));
    }
    Ok(())
}

fn check_band(x: &CpElement, cap: i64) -> Result<()> {
    for a in x.terms.values() {
        if let Some((m, _)) = a.iter().find(|(m, _)| m.abs() > cap) {
            return Err(Error::BandOverflow { frequency: m, cap });
        }
    }
    Ok(())
}

/// `Phi_g(x)`: each `a_n V^n` goes to `theta_g(a_n) u_g^(n) V^n`, with `u_g^(n)` expanded per `cfg`.
pub fn apply_skew(spec: &CocycleSpec, g: &GroupElement, x: &CpElement, cfg: &ExpansionConfig) -> Result<CpElement> {
    check_spec_angle(spec, x)?;
    let ug = spec.cocycle_at(g)?;
    let t = spec.theta_shift(g);
    let mut out = CpElement::zero(x.alpha);
    for (n, a) in x.terms() {
        let un = orbit_product(&ug, x.alpha, n);
        let e = expand_adaptive(&un, cfg)?;
        out.insert(n, a.rotate(t).mul(&e.poly));
    }
    check_band(&out, cfg.cap)?;
    Ok(out)
}

/// `M_n(x) = n^{-d} sum_{g in {0..n-1}^d} Phi_g(x)`, summed in ascending lexicographic order.
pub fn cesaro_average(spec: &CocycleSpec, x: &CpElement, n: i64, cfg: &ExpansionConfig) -> Result<CpElement> {
    if n < 1 {
        return Err(Error::EmptyWindow);
    }
    let window = GroupElement::window(spec.dim(), n);
    let parts: Vec<Result<CpElement>> = window.par_iter().map(|g| apply_skew(spec, g, x, cfg)).collect();
    // raw accumulation keeps long windows linear in the number of terms
    let mut acc: BTreeMap<i64, BTreeMap<i64, Complex64>> = BTreeMap::new();
    for p in parts {
        for (n, a) in p?.terms() {
            let row = acc.entry(n).or_default();
            for (m, c) in a.iter() {
                *row.entry(m).or_default() += c;
            }
        }
    }
    let s = 1.0 / window.len() as f64;
    let mut out = CpElement::zero(x.alpha);
    for (n, row) in acc {
        out.insert(n, FourierPoly::from_coeffs(row.into_iter().map(|(m, c)| (m, c * s))));
    }
    Ok(out)
}

/// A vector of the GNS space of the canonical state, by components `xi_n`.
#[derive(Clone, Debug, PartialEq)]
pub struct GnsVector(pub CpElement);

impl GnsVector {
    /// The class `[x]` of `x`.
    pub fn of(x: &CpElement) -> Self {
        Self(x.clone())
    }

    pub fn norm(&self) -> f64 {
        self.0.gns_norm()
    }

    pub fn component(&self, n: i64) -> FourierPoly {
        self.0.term(n)
    }
}

/// `V_g^omega v`, the unitary implementing `Phi_g`.
pub fn gns_act(spec: &CocycleSpec, g: &GroupElement, v: &GnsVector, cfg: &ExpansionConfig) -> Result<GnsVector> {
    apply_skew(spec, g, &v.0, cfg).map(GnsVector)
}

/// `n^{-d} sum_{g in window} V_g^omega v`; its norm tends to that of the projection onto invariant vectors.
pub fn gns_project_invariant(spec: &CocycleSpec, v: &GnsVector, n: i64, cfg: &ExpansionConfig) -> Result<GnsVector> {
    cesaro_average(spec, &v.0, n, cfg).map(GnsVector)
}

/// Outcome of solving `[x, chi_j] = 0` for all given characters.
#[derive(Clone, Debug, Serialize)]
pub struct CommutantReport {
    pub band: i64,
    pub degree: i64,
    /// Dimension of the numerical solution space at each degree `n`.
    pub null_dims: Vec<(i64, usize)>,
    /// Smallest singular value among the constraint blocks with `n != 0`.
    pub min_offzero_singular: f64,
    /// `gns_norm` of the `n != 0` part of the projection of a random element onto the solutions.
    pub max_offzero_norm: f64,
}

/// Solves the linear system `[x, chi_j] = 0` for `x = sum_{|n| <= degree} a_n V^n`, `a_n` of band `band`.
///
/// `[a V^n, chi_j] = a chi_j (e^{2 pi i j n alpha} - 1) V^n`, so constraints at different `n`
/// decouple; each block is solved by SVD and a random element is projected onto the null space.
pub fn commutant_of_characters<R: Rng>(
    alpha: f64,
    band: i64,
    degree: i64,
    chars: &[i64],
    sv_tol: f64,
    rng: &mut R,
) -> CommutantReport {
    let cols = (2 * band + 1) as usize;
    let mut null_dims = Vec::new();
    let mut min_sv = f64::INFINITY;
    let mut offzero = 0.0;
    for n in -degree..=degree {
        let mut rows: Vec<Vec<Complex64>> = Vec::new();
        for &j in chars {
            let factor = crate::fourier::cis(frac_mul((j * n) as i128, alpha)) - Complex64::new(1.0, 0.0);
            // coefficient of chi_m in a chi_j is a^(m - j)
            for m in -band - j.abs()..=band + j.abs() {
                let mut row = vec![Complex64::new(0.0, 0.0); cols];
                let src = m - j;
                if src.abs() <= band {
                    row[(src + band) as usize] = factor;
                }
                rows.push(row);
            }
        }
        let a = DMatrix::from_fn(rows.len(), cols, |r, c| rows[r][c]);
        let svd = a.svd(false, true);
        let v_t = svd.v_t.expect("right singular vectors");
        let mut basis = Vec::new();
        for (i, &s) in svd.singular_values.iter().enumerate() {
            if n != 0 {
                min_sv = min_sv.min(s);
            }
            if s <= sv_tol {
                basis.push(v_t.row(i).transpose().map(|c| c.conj()));
            }
        }
        // rank deficiency beyond the returned rows also belongs to the null space
        let extra = cols.saturating_sub(svd.singular_values.len());
        null_dims.push((n, basis.len() + extra));
        let x: nalgebra::DVector<Complex64> =
            nalgebra::DVector::from_fn(cols, |_, _| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
        let mut proj = nalgebra::DVector::<Complex64>::zeros(cols);
        for b in &basis {
            let coef = b.dotc(&x);
            proj += b * coef;
        }
        if n != 0 {
            offzero += proj.norm_squared();
        }
    }
    CommutantReport { band, degree, null_dims, min_offzero_singular: min_sv, max_offzero_norm: offzero.sqrt() }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rotation::RotationNumber;
    use crate::unitary::UnitaryFn;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    const A: f64 = 0.3819660112501051;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn commutation_relation() {
        // V chi_1 V* = alpha(chi_1) = e^{2 pi i a} chi_1
        let v = CpElement::monomial(A, FourierPoly::one(), 1);
        let chi = CpElement::monomial(A, FourierPoly::character(1), 0);
        let lhs = v.multiply(&chi).unwrap().multiply(&v.adjoint()).unwrap();
        let rhs = CpElement::monomial(A, FourierPoly::character(1).rotate(A), 0);
        assert!(lhs.max_coeff_diff(&rhs) < 1e-15);
    }

    #[test]
    fn v_is_unitary() {
        let v = CpElement::monomial(A, FourierPoly::one(), 1);
        let p = v.adjoint().multiply(&v).unwrap();
        assert!(p.max_coeff_diff(&CpElement::one(A)) < 1e-15);
    }

    #[test]
    fn angle_mismatch() {
        let x = CpElement::one(A);
        let y = CpElement::one(0.1);
        assert_eq!(x.multiply(&y).unwrap_err(), Error::AngleMismatch(A, 0.1));
    }

    #[test]
    fn degree_cap() {
        let x = CpElement::monomial(A, FourierPoly::one(), 40);
        assert!(matches!(x.multiply(&x), Err(Error::DegreeOverflow { degree: 80, .. })));
    }

    #[test]
    fn state_and_gns_norm() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let x = CpElement::random(A, 2, 2, &mut rng);
        let xx = x.adjoint().multiply(&x).unwrap();
        assert!((xx.canonical_state().re - x.gns_norm().powi(2)).abs() < 1e-12);
        assert!(xx.canonical_state().im.abs() < 1e-12);
    }

    #[test]
    fn partial_sums_exact() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let x = CpElement::random(A, 3, 2, &mut rng);
        assert!(x.partial_sum(3).unwrap().max_coeff_diff(&x) < 1e-14);
        assert!(x.partial_sum(2).unwrap().max_coeff_diff(&x) > 0.1);
    }

    #[test]
    fn fejer_and_vallee_poussin_weights() {
        let x = CpElement::monomial(A, FourierPoly::one(), 2).add(&CpElement::one(A)).unwrap();
        // sigma_4 keeps V^0 and halves V^2
        let f = x.fejer_mean(4).unwrap();
        assert!((f.term(0).coeff(0) - c(1.0)).norm() < 1e-15);
        assert!((f.term(2).coeff(0) - c(0.5)).norm() < 1e-15);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let y = CpElement::random(A, 4, 2, &mut rng);
        assert!(y.vallee_poussin_mean(4).unwrap().max_coeff_diff(&y) < 1e-14);
        assert!(y.vallee_poussin_mean(3).unwrap().max_coeff_diff(&y) > 1e-3);
    }

    #[test]
    fn skew_of_trivial_cocycle_is_rotation() {
        let spec = CocycleSpec::new(vec![RotationNumber::golden()], RotationNumber::sqrt2_minus_1(), vec![UnitaryFn::one()])
            .unwrap();
        let a = spec.alpha().value();
        let x = CpElement::monomial(a, FourierPoly::character(2).scale(c(0.5)), 3);
        let y = apply_skew(&spec, &GroupElement::scalar(1), &x, &ExpansionConfig::default()).unwrap();
        let expect = FourierPoly::character(2).scale(c(0.5)).rotate(spec.theta(0));
        assert!(y.term(3).max_coeff_diff(&expect) < 1e-15);
    }

    #[test]
    fn commutant_is_diagonal() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let r = commutant_of_characters(A, 8, 2, &[1, 2], 1e-10, &mut rng);
        assert!(r.max_offzero_norm < 1e-12);
        assert_eq!(r.null_dims.iter().find(|(n, _)| *n == 0).unwrap().1, 17);
        assert!(r.min_offzero_singular > 0.1);
    }
}
