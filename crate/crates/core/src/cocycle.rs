//! Cocycles of `Z^d` acting on `C(T)` by rotations.
//!
//! The base action is `theta_g f(x) = f(x + g . theta)`. A cocycle is determined by its
//! generators `u_{e_i}` and satisfies `u_{g+h} = theta_g(u_h) u_g`, `u_0 = 1`. The
//! automorphism `alpha f(x) = f(x + a)` of the crossed product twists each `u_g` into the
//! family `u_g^(n) = u_g alpha(u_g) ... alpha^{n-1}(u_g)`.

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fourier::{frac_mul, signed_geometric_sum, wrap_unit, FourierPoly};
use crate::law::CoefficientLaw;
use crate::rotation::RotationNumber;
use crate::unitary::UnitaryFn;

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct GroupElement(pub Vec<i64>);

impl GroupElement {
    pub fn zero(d: usize) -> Self {
        Self(vec![0; d])
    }

    pub fn basis(d: usize, i: usize) -> Self {
        let mut v = vec![0; d];
        v[i] = 1;
        Self(v)
    }

    pub fn scalar(n: i64) -> Self {
        Self(vec![n])
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn add(&self, other: &Self) -> Self {
        Self(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }

    /// All elements of the box `{0..n-1}^d`, in lexicographic order.
    pub fn window(d: usize, n: i64) -> Vec<Self> {
        let mut out = vec![Self(Vec::new())];
        for _ in 0..d {
            out = out
                .into_iter()
                .flat_map(|g| {
                    (0..n).map(move |j| {
                        let mut v = g.0.clone();
                        v.push(j);
                        Self(v)
                    })
                })
                .collect();
        }
        out
    }
}

/// `u R_t(u) ... R_t^{n-1}(u)` for `n > 0`, `R_t^n(u*) ... R_t^{-1}(u*)` for `n < 0`, `1` for `n = 0`.
///
/// Evaluated in closed form: oscillating phase coefficients pick up geometric sums and the
/// winding contributes `k t sum_j j` to the constant term.
pub fn orbit_product(u: &UnitaryFn, t: f64, n: i64) -> UnitaryFn {
    if n == 0 {
        return UnitaryFn::one();
    }
    let t = wrap_unit(t);
    let sign = if n > 0 { 1.0 } else { -1.0 };
    let count = n.unsigned_abs() as i128;
    // sum over J_n of j: n(n-1)/2 for n > 0, -|n|(|n|+1)/2 for n < 0.
    let index_sum = if n > 0 { count * (count - 1) / 2 } else { -count * (count + 1) / 2 };
    let mut coeffs: Vec<(i64, Complex64)> = u
        .phase()
        .iter()
        .filter(|&(m, _)| m != 0)
        .map(|(m, c)| (m, c * signed_geometric_sum(frac_mul(m as i128, t), n) * sign))
        .collect();
    let mean = frac_mul(count, u.phase_mean()) + frac_mul(u.winding() as i128 * index_sum, t);
    coeffs.push((0, Complex64::new(sign * mean, 0.0)));
    UnitaryFn::new(n * u.winding(), FourierPoly::from_coeffs(coeffs)).expect("orbit product of a real phase")
}

#[derive(Clone, Debug, PartialEq)]
pub struct CocycleSpec {
    base_angles: Vec<RotationNumber>,
    alpha: RotationNumber,
    generators: Vec<UnitaryFn>,
    law: Option<CoefficientLaw>,
}

const COMPAT_TOL: f64 = 1e-10;

impl CocycleSpec {
    /// A cocycle with trigonometric generators; for `d > 1` the generators must satisfy
    /// `theta_i(u_j) u_i = theta_j(u_i) u_j`.
    pub fn new(base_angles: Vec<RotationNumber>, alpha: RotationNumber, generators: Vec<UnitaryFn>) -> Result<Self> {
        if base_angles.is_empty() {
            return Err(Error::DimensionMismatch { expected: 1, got: 0 });
        }
        if generators.len() != base_angles.len() {
            return Err(Error::DimensionMismatch { expected: base_angles.len(), got: generators.len() });
        }
        let spec = Self { base_angles, alpha, generators, law: None };
        for i in 0..spec.dim() {
            for j in i + 1..spec.dim() {
                let lhs = spec.generators[j].rotate(spec.theta(i)).mul(&spec.generators[i]);
                let rhs = spec.generators[i].rotate(spec.theta(j)).mul(&spec.generators[j]);
                let defect = lhs.grid_distance(&rhs, 64);
                if defect > COMPAT_TOL {
                    return Err(Error::IncompatibleGenerators { i, j, defect });
                }
            }
        }
        Ok(spec)
    }

    /// A `Z`-cocycle `u = e^{2 pi i phi}` with `phi` given by a coefficient law.
    pub fn from_law(theta: RotationNumber, alpha: RotationNumber, law: CoefficientLaw) -> Result<Self> {
        if !law.symmetric {
            return Err(Error::AsymmetricLaw);
        }
        Ok(Self { base_angles: vec![theta], alpha, generators: vec![UnitaryFn::one()], law: Some(law) })
    }

    pub fn dim(&self) -> usize {
        self.base_angles.len()
    }

    pub fn base_angle(&self, i: usize) -> &RotationNumber {
        &self.base_angles[i]
    }

    pub fn base_angles(&self) -> &[RotationNumber] {
        &self.base_angles
    }

    pub fn theta(&self, i: usize) -> f64 {
        self.base_angles[i].value()
    }

    pub fn alpha(&self) -> &RotationNumber {
        &self.alpha
    }

    pub fn generators(&self) -> &[UnitaryFn] {
        &self.generators
    }

    pub fn law(&self) -> Option<&CoefficientLaw> {
        self.law.as_ref()
    }

    pub fn is_analytic(&self) -> bool {
        self.law.is_some()
    }

    /// `g . theta` mod 1.
    pub fn theta_shift(&self, g: &GroupElement) -> f64 {
        let mut acc = 0.0;
        for (gi, r) in g.0.iter().zip(&self.base_angles) {
            acc += frac_mul(*gi as i128, r.value());
        }
        wrap_unit(acc)
    }

    fn check_dim(&self, g: &GroupElement) -> Result<()> {
        if g.dim() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), got: g.dim() });
        }
        Ok(())
    }

    /// `u_g`, built coordinate by coordinate from `u_{h + h'} = theta_h(u_{h'}) u_h`.
    pub fn cocycle_at(&self, g: &GroupElement) -> Result<UnitaryFn> {
        if self.law.is_some() {
            return Err(Error::AnalyticCocycle);
        }
        self.check_dim(g)?;
        let mut u = UnitaryFn::one();
        let mut prefix = 0.0;
        for (i, &gi) in g.0.iter().enumerate() {
            let step = orbit_product(&self.generators[i], self.theta(i), gi);
            u = step.rotate(prefix).mul(&u);
            prefix = wrap_unit(prefix + frac_mul(gi as i128, self.theta(i)));
        }
        Ok(u)
    }

    /// `u_g^(n)`.
    pub fn twisted_family(&self, g: &GroupElement, n: i64) -> Result<UnitaryFn> {
        Ok(orbit_product(&self.cocycle_at(g)?, self.alpha.value(), n))
    }
}

/// Largest residual of the cocycle identities found by sampling.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct CocycleCheck {
    /// `sup |u_{g+h}(x) - u_h(x + g theta) u_g(x)|`.
    pub cocycle: f64,
    /// `sup |u_g^(m+n) - u_g^(m) alpha^m(u_g^(n))|`.
    pub twisted: f64,
}

const SAMPLE_POINTS: usize = 128;
const SAMPLE_BOX: i64 = 40;
const SAMPLE_POWERS: i64 = 12;

fn random_element<R: Rng>(d: usize, rng: &mut R) -> GroupElement {
    GroupElement((0..d).map(|_| rng.random_range(-SAMPLE_BOX..=SAMPLE_BOX)).collect())
}

/// Checks both cocycle identities on `trials` random pairs at 128 sample points each.
pub fn verify_cocycle<R: Rng>(spec: &CocycleSpec, trials: usize, rng: &mut R) -> Result<CocycleCheck> {
    let mut check = CocycleCheck { cocycle: 0.0, twisted: 0.0 };
    let a = spec.alpha.value();
    for _ in 0..trials {
        let g = random_element(spec.dim(), rng);
        let h = random_element(spec.dim(), rng);
        let ug = spec.cocycle_at(&g)?;
        let uh = spec.cocycle_at(&h)?;
        let ugh = spec.cocycle_at(&g.add(&h))?;
        let t = spec.theta_shift(&g);
        let m = rng.random_range(-SAMPLE_POWERS..=SAMPLE_POWERS);
        let n = rng.random_range(-SAMPLE_POWERS..=SAMPLE_POWERS);
        let um = orbit_product(&ug, a, m);
        let un = orbit_product(&ug, a, n);
        let umn = orbit_product(&ug, a, m + n);
        let am = frac_mul(m as i128, a);
        let offset: f64 = rng.random();
        for j in 0..SAMPLE_POINTS {
            let x = (j as f64 + offset) / SAMPLE_POINTS as f64;
            let lhs = ugh.eval(x);
            let rhs = uh.eval(x + t) * ug.eval(x);
            check.cocycle = check.cocycle.max((lhs - rhs).norm());
            let lhs = umn.eval(x);
            let rhs = um.eval(x) * un.eval(x + am);
            check.twisted = check.twisted.max((lhs - rhs).norm());
        }
    }
    Ok(check)
}
