//! Cesàro averages of the weighted shift `(W f)(x) = u(x) f(x + theta)` on a Fourier band.
//!
//! `A_K = (1/K) sum_{j<K} W^j` is applied to the characters `chi_m`, `|m| <= battery`. An
//! invariant vector `f = W f` exists exactly when `u` is an `L^2` coboundary, and then the
//! averages converge to its projection; otherwise they decay.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fourier::{cis, frac_mul, FourierPoly};
use crate::rotation::RotationNumber;
use crate::unitary::{expand_unitary, UnitaryFn};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DetectorConfig {
    /// Fourier band `N` of the truncated operator.
    pub band: i64,
    /// Averaging length `K`.
    pub iterations: u64,
    /// Battery radius `M`; must not exceed `band`.
    pub battery: i64,
    /// Null threshold; defaults to `10 / sqrt(K)`.
    pub tau: Option<f64>,
    /// Invariance threshold.
    pub tau_prime: f64,
    /// Expansion tolerance; the operator is refused when aliasing exceeds `10 * tol`.
    pub tol: f64,
}

impl Default for DetectorConfig {
    fn default() -> Self {
        Self { band: 24, iterations: 20_000, battery: 8, tau: None, tau_prime: 0.5, tol: 1e-9 }
    }
}

impl DetectorConfig {
    pub fn threshold(&self) -> f64 {
        self.tau.unwrap_or(10.0 / (self.iterations as f64).sqrt())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum DetectorStatus {
    /// Every averaged battery vector is below `tau`.
    Null,
    /// Some averaged battery vector is above `tau'`.
    Invariant,
    Undecided,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DetectorEvidence {
    pub status: DetectorStatus,
    pub max_norm: f64,
    pub argmax: i64,
    /// `A_K chi_argmax`.
    pub vector: FourierPoly,
    /// Norms `|A_K chi_m|` for `m = -M..=M`.
    pub norms: Vec<f64>,
    pub tau: f64,
    pub tau_prime: f64,
    pub band: i64,
    pub iterations: u64,
    /// Discarded grid mass of the expansion of `u`; bounds how far the truncated operator
    /// can exceed norm 1, and hence how much a doubling of `K` can raise `max_norm`.
    pub tail_estimate: f64,
}

fn operator(u: &UnitaryFn, theta: &RotationNumber, band: i64, tol: f64) -> Result<(DMatrix<Complex64>, f64)> {
    let exp = expand_unitary(u, 2 * band)?;
    if exp.aliasing > 10.0 * tol {
        return Err(Error::AliasingTooLarge { aliasing: exp.aliasing, limit: 10.0 * tol });
    }
    let dim = (2 * band + 1) as usize;
    let mut w = DMatrix::<Complex64>::zeros(dim, dim);
    for m in -band..=band {
        let rot = cis(frac_mul(m as i128, theta.value()));
        for (f, c) in exp.poly.iter() {
            let j = f + m;
            if j.abs() <= band {
                w[((j + band) as usize, (m + band) as usize)] += c * rot;
            }
        }
    }
    Ok((w, exp.aliasing))
}

/// `sum_{j<k} W^j` by binary splitting: `S_{2a} = S_a + W^a S_a`, `S_{a+1} = S_a + W^a`.
fn power_sum(w: &DMatrix<Complex64>, k: u64) -> DMatrix<Complex64> {
    let dim = w.nrows();
    let mut s = DMatrix::<Complex64>::zeros(dim, dim);
    let mut p = DMatrix::<Complex64>::identity(dim, dim);
    for bit in (0..64 - k.leading_zeros()).rev() {
        s = &s + &p * &s;
        p = &p * &p;
        if (k >> bit) & 1 == 1 {
            s += &p;
            p = &p * w;
        }
    }
    s
}

pub fn detect_invariant_vector(u: &UnitaryFn, theta: &RotationNumber, cfg: &DetectorConfig) -> Result<DetectorEvidence> {
    if u.winding() != 0 {
        return Err(Error::NonzeroWinding(u.winding()));
    }
    if cfg.band < 1 || cfg.battery > cfg.band {
        return Err(Error::EmptyBand);
    }
    let (w, tail) = operator(u, theta, cfg.band, cfg.tol)?;
    let k = cfg.iterations.max(1);
    let avg = power_sum(&w, k) / Complex64::new(k as f64, 0.0);
    let band = cfg.band;
    let mut norms = Vec::new();
    let (mut max_norm, mut argmax) = (-1.0, 0);
    for m in -cfg.battery..=cfg.battery {
        let n = avg.column((m + band) as usize).norm();
        norms.push(n);
        if n > max_norm {
            max_norm = n;
            argmax = m;
        }
    }
    let col = avg.column((argmax + band) as usize);
    let vector = FourierPoly::from_coeffs((-band..=band).map(|j| (j, col[(j + band) as usize])));
    let tau = cfg.threshold();
    let status = if max_norm < tau {
        DetectorStatus::Null
    } else if max_norm > cfg.tau_prime {
        DetectorStatus::Invariant
    } else {
        DetectorStatus::Undecided
    };
    Ok(DetectorEvidence {
        status,
        max_norm,
        argmax,
        vector,
        norms,
        tau,
        tau_prime: cfg.tau_prime,
        band,
        iterations: k,
        tail_estimate: tail,
    })
}
