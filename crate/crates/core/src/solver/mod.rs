//! Coboundary classification.
//!
//! A unitary `u` is a coboundary for the rotation by `theta` when `u = theta(w*) w`, i.e.
//! `u(x) = conj(w(x + theta)) w(x)`, for some unitary `w`. Trigonometric cocycles go through
//! the additive reduction in [`continuous`]; cocycles given by coefficient laws go through
//! the series analysis in [`analytic`]. [`detector`] supplies numerical evidence about
//! invariant vectors of the associated weighted shift.

pub mod analytic;
pub mod continuous;
pub mod detector;

use std::collections::BTreeMap;

use serde::ser::SerializeTuple;
use serde::{Deserialize, Serialize, Serializer};

use crate::error::Result;
use crate::law::CoefficientLaw;
use crate::rotation::RotationNumber;
use crate::unitary::UnitaryFn;

pub use detector::{detect_invariant_vector, DetectorConfig, DetectorEvidence, DetectorStatus};

pub type Diagnostics = BTreeMap<String, f64>;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VerdictTag {
    ContinuousCoboundary,
    MeasurableCoboundary,
    NotCoboundary,
    Inconclusive,
}

impl VerdictTag {
    pub fn name(self) -> &'static str {
        match self {
            VerdictTag::ContinuousCoboundary => "continuous_coboundary",
            VerdictTag::MeasurableCoboundary => "measurable_coboundary",
            VerdictTag::NotCoboundary => "not_coboundary",
            VerdictTag::Inconclusive => "inconclusive",
        }
    }
}

/// One coefficient `W^(q)` of a truncated formal solution; `q` is kept exact as a decimal string.
#[derive(Clone, Debug, PartialEq)]
pub struct LawCoefficient {
    pub frequency: String,
    pub re: f64,
    pub im: f64,
}

impl Serialize for LawCoefficient {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let mut t = s.serialize_tuple(3)?;
        t.serialize_element(&self.frequency)?;
        t.serialize_element(&self.re)?;
        t.serialize_element(&self.im)?;
        t.end()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Certificate {
    /// A nonzero winding number cannot be a continuous coboundary.
    WindingObstruction { winding: i64 },
    /// No integer `|m| <= search_bound` makes `phi^(0) + m theta` integral; the detector
    /// found no invariant vector either.
    MeanObstruction { search_bound: i64, min_distance: f64, detector_max: f64, detector_threshold: f64 },
    /// The formal solution is not square-summable.
    L2Divergence {
        depth: usize,
        partial_sum: f64,
        /// Lower bound on the coefficient moduli past which no `L^2` solution can exist.
        term_lower_bound: f64,
        riemann_lebesgue_violated: bool,
        rule: String,
    },
}

impl Certificate {
    pub fn name(&self) -> &'static str {
        match self {
            Certificate::WindingObstruction { .. } => "winding_obstruction",
            Certificate::MeanObstruction { .. } => "mean_obstruction",
            Certificate::L2Divergence { .. } => "l2_divergence",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct NonContinuity {
    pub kind: String,
    pub rigorous: bool,
    pub value: f64,
    pub threshold: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MeasurableEvidence {
    pub depth: usize,
    pub l2_partial: f64,
    pub l2_tail_bound: f64,
    pub l1_partial: f64,
    pub noncontinuity: Vec<NonContinuity>,
    /// States the convention by which a square-summable formal solution counts as measurable.
    pub convention: String,
}

pub const MEASURABLE_CONVENTION: &str = "square-summable formal additive solution W; its exponential \
e^{2 pi i W} is unimodular and is taken as the measurable witness";

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "tag", rename_all = "snake_case")]
pub enum Verdict {
    ContinuousCoboundary { witness: UnitaryFn, residual: f64, diagnostics: Diagnostics },
    MeasurableCoboundary { coefficients: Vec<LawCoefficient>, evidence: MeasurableEvidence, diagnostics: Diagnostics },
    NotCoboundary { certificate: Certificate, diagnostics: Diagnostics },
    Inconclusive { reason: String, diagnostics: Diagnostics },
}

impl Verdict {
    pub fn tag(&self) -> VerdictTag {
        match self {
            Verdict::ContinuousCoboundary { .. } => VerdictTag::ContinuousCoboundary,
            Verdict::MeasurableCoboundary { .. } => VerdictTag::MeasurableCoboundary,
            Verdict::NotCoboundary { .. } => VerdictTag::NotCoboundary,
            Verdict::Inconclusive { .. } => VerdictTag::Inconclusive,
        }
    }

    pub fn witness(&self) -> Option<&UnitaryFn> {
        match self {
            Verdict::ContinuousCoboundary { witness, .. } => Some(witness),
            _ => None,
        }
    }

    pub fn certificate(&self) -> Option<&Certificate> {
        match self {
            Verdict::NotCoboundary { certificate, .. } => Some(certificate),
            _ => None,
        }
    }

    pub fn diagnostics(&self) -> &Diagnostics {
        match self {
            Verdict::ContinuousCoboundary { diagnostics, .. }
            | Verdict::MeasurableCoboundary { diagnostics, .. }
            | Verdict::NotCoboundary { diagnostics, .. }
            | Verdict::Inconclusive { diagnostics, .. } => diagnostics,
        }
    }

    pub fn diagnostics_mut(&mut self) -> &mut Diagnostics {
        match self {
            Verdict::ContinuousCoboundary { diagnostics, .. }
            | Verdict::MeasurableCoboundary { diagnostics, .. }
            | Verdict::NotCoboundary { diagnostics, .. }
            | Verdict::Inconclusive { diagnostics, .. } => diagnostics,
        }
    }

    /// Residual of the stored witness, when there is one.
    pub fn residual(&self) -> Option<f64> {
        match self {
            Verdict::ContinuousCoboundary { residual, .. } => Some(*residual),
            _ => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    /// Witness residual tolerance (sup norm on the residual grid).
    pub tol: f64,
    /// Bound `M` on the winding of a continuous witness.
    pub search_bound: i64,
    /// Divisors `|1 - e^{2 pi i m theta}|` below this make the verdict inconclusive.
    pub divisor_floor: f64,
    pub residual_grid: usize,
    /// Number of support points examined for coefficient laws.
    pub depth: usize,
    pub fejer_grid: usize,
    pub fejer_threshold: f64,
    pub detector: DetectorConfig,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            tol: 1e-9,
            search_bound: 10_000,
            divisor_floor: 1e-14,
            residual_grid: 1024,
            depth: 8,
            fejer_grid: 4096,
            fejer_threshold: 0.25,
            detector: DetectorConfig::default(),
        }
    }
}

/// What is being classified: a trigonometric unitary, or level `level` of a law-defined cocycle.
#[derive(Clone, Copy, Debug)]
pub enum Cocycle<'a> {
    Unitary(&'a UnitaryFn),
    Law { law: &'a CoefficientLaw, alpha: &'a RotationNumber, level: i64 },
}

pub fn classify(u: Cocycle<'_>, theta: &RotationNumber, cfg: &SolverConfig) -> Result<Verdict> {
    match u {
        Cocycle::Unitary(u) => continuous::solve_continuous(u, theta, cfg),
        Cocycle::Law { law, alpha, level } => analytic::solve_analytic(law, theta, alpha, level, cfg),
    }
}
