//! Coefficient laws: real phases given as lacunary series over convergent denominators.
//!
//! A law fixes `phi^(q_k)` for a support `q_1 < q_2 < ...` (and `phi^(-q) = conj phi^(q)`).
//! Two amplitude rules are available:
//!
//! * `power`: `phi^(q_k) = c / k^p`.
//! * `match-divisor`: `phi^(q_k) = 2 sin(pi q_k theta) c / k^p`, so the formal additive
//!   solution has `|W^(q_k)| = |c| / k^p` exactly.

use num_bigint::{BigInt, BigUint};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rotation::RotationNumber;

#[derive(Clone, Debug, PartialEq)]
pub enum LawSupport {
    /// Convergent denominators `q_first, q_{first+1}, ...` of the base angle.
    Convergents { first: usize },
    /// An explicit increasing list, each of which must be a convergent denominator.
    Explicit(Vec<BigUint>),
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum AmplitudeRule {
    Power { c: f64, p: f64 },
    MatchDivisor { c: f64, p: f64 },
}

impl AmplitudeRule {
    pub fn c(&self) -> f64 {
        match *self {
            AmplitudeRule::Power { c, .. } | AmplitudeRule::MatchDivisor { c, .. } => c,
        }
    }

    pub fn p(&self) -> f64 {
        match *self {
            AmplitudeRule::Power { p, .. } | AmplitudeRule::MatchDivisor { p, .. } => p,
        }
    }

    /// `c / k^p`.
    pub fn scale(&self, k: usize) -> f64 {
        self.c() / (k as f64).powf(self.p())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CoefficientLaw {
    pub support: LawSupport,
    pub amplitude: AmplitudeRule,
    /// Forces `phi^(-q) = conj phi^(q)`; laws defining cocycles must set it.
    pub symmetric: bool,
}

/// One support point of a law: index `k`, frequency `q_k` and the nearest integer to `q_k theta`
/// with the signed remainder.
#[derive(Clone, Debug)]
pub struct SupportPoint {
    pub k: usize,
    pub q: BigUint,
    pub nearest: BigInt,
    pub delta: f64,
}

impl CoefficientLaw {
    pub fn convergents(amplitude: AmplitudeRule) -> Self {
        Self { support: LawSupport::Convergents { first: 1 }, amplitude, symmetric: true }
    }

    pub fn is_empty(&self) -> bool {
        self.amplitude.c() == 0.0 || matches!(&self.support, LawSupport::Explicit(v) if v.is_empty())
    }

    /// The first `depth` support points relative to `theta`.
    pub fn support_points(&self, theta: &RotationNumber, depth: usize) -> Result<Vec<SupportPoint>> {
        if depth == 0 {
            return Err(Error::EmptyDepth);
        }
        let pairs: Vec<(usize, BigUint)> = match &self.support {
            LawSupport::Convergents { first } => {
                let first = (*first).max(1);
                let cs = theta.convergents(first + depth)?;
                (first..first + depth).map(|k| (k - first + 1, cs[k].q.clone())).collect()
            }
            LawSupport::Explicit(list) => {
                let top = list.iter().max().cloned().unwrap_or_default();
                let cs = theta.convergents_while(|c| c.q < top);
                let mut out = Vec::new();
                for (i, q) in list.iter().take(depth).enumerate() {
                    if !cs.iter().any(|c| &c.q == q) {
                        return Err(Error::SupportMismatch(q.to_string()));
                    }
                    out.push((i + 1, q.clone()));
                }
                out
            }
        };
        pairs
            .into_iter()
            .map(|(k, q)| {
                let (nearest, delta) = theta.nearest_multiple(&BigInt::from(q.clone()))?;
                Ok(SupportPoint { k, q, nearest, delta })
            })
            .collect()
    }
}

/// `{support: "convergents" | ["10", "1001", ...], first, rule: "power" | "match-divisor", c, p, symmetric}`.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LawRecord {
    pub support: SupportRecord,
    #[serde(default = "one", skip_serializing_if = "is_one")]
    pub first: usize,
    pub rule: RuleName,
    pub c: f64,
    pub p: f64,
    #[serde(default = "yes")]
    pub symmetric: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RuleName {
    Power,
    MatchDivisor,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SupportRecord {
    Named(String),
    List(Vec<String>),
}

fn one() -> usize {
    1
}

fn is_one(v: &usize) -> bool {
    *v == 1
}

fn yes() -> bool {
    true
}

impl TryFrom<LawRecord> for CoefficientLaw {
    type Error = Error;

    fn try_from(r: LawRecord) -> Result<Self> {
        let support = match r.support {
            SupportRecord::Named(s) if s == "convergents" => LawSupport::Convergents { first: r.first },
            SupportRecord::Named(s) => return Err(Error::UnknownRule(s)),
            SupportRecord::List(v) => LawSupport::Explicit(
                v.iter()
                    .map(|s| s.parse::<BigUint>().map_err(|_| Error::SupportMismatch(s.clone())))
                    .collect::<Result<_>>()?,
            ),
        };
        let amplitude = match r.rule {
            RuleName::Power => AmplitudeRule::Power { c: r.c, p: r.p },
            RuleName::MatchDivisor => AmplitudeRule::MatchDivisor { c: r.c, p: r.p },
        };
        Ok(Self { support, amplitude, symmetric: r.symmetric })
    }
}

impl From<&CoefficientLaw> for LawRecord {
    fn from(l: &CoefficientLaw) -> Self {
        let (support, first) = match &l.support {
            LawSupport::Convergents { first } => (SupportRecord::Named("convergents".into()), *first),
            LawSupport::Explicit(v) => (SupportRecord::List(v.iter().map(|q| q.to_string()).collect()), 1),
        };
        let rule = match l.amplitude {
            AmplitudeRule::Power { .. } => RuleName::Power,
            AmplitudeRule::MatchDivisor { .. } => RuleName::MatchDivisor,
        };
        LawRecord { support, first, rule, c: l.amplitude.c(), p: l.amplitude.p(), symmetric: l.symmetric }
    }
}

impl Serialize for CoefficientLaw {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        LawRecord::from(self).serialize(s)
    }
}
