//! Irrational rotation numbers given by continued fractions.
//!
//! A rotation number in `(0, 1)` is stored as its partial quotients `a_1, a_2, ...`
//! (the integer part is 0) together with a rule for the terms past the stored prefix.
//! Convergents are exact big integers; multiples `m * theta` for huge `m` are
//! reduced mod 1 through deep convergents rather than through the `f64` value.

use num_bigint::{BigInt, BigUint, Sign};
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fourier::{frac_mul, wrap_centered};

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum GrowthRule {
    /// `a_{k+1} = a_k^2`; seeded with `[10]` this gives `[0; 10, 100, 10^4, 10^8, ...]`.
    LiouvilleSquare,
}

impl GrowthRule {
    pub fn name(&self) -> &'static str {
        match self {
            GrowthRule::LiouvilleSquare => "liouville",
        }
    }

    pub fn parse(name: &str) -> Result<Self> {
        match name {
            "liouville" => Ok(GrowthRule::LiouvilleSquare),
            other => Err(Error::UnknownRule(other.to_string())),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Tail {
    /// No terms past the prefix: the number is rational.
    Finite,
    /// The stored prefix repeats forever.
    Periodic,
    Rule(GrowthRule),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Convergent {
    pub p: BigUint,
    pub q: BigUint,
}

impl Convergent {
    pub fn as_u64(&self) -> Option<(u64, u64)> {
        Some((self.p.to_u64()?, self.q.to_u64()?))
    }
}

#[derive(Clone, Debug)]
pub struct RotationNumber {
    terms: Vec<BigUint>,
    tail: Tail,
    value: f64,
}

impl PartialEq for RotationNumber {
    fn eq(&self, other: &Self) -> bool {
        self.terms == other.terms && self.tail == other.tail
    }
}

impl RotationNumber {
    /// `terms` are `a_1, a_2, ...`; `decimal`, when given, is checked against the convergents.
    pub fn new(terms: Vec<u64>, tail: Tail, decimal: Option<f64>) -> Result<Self> {
        Self::from_big(terms.into_iter().map(BigUint::from).collect(), tail, decimal)
    }

    fn from_big(terms: Vec<BigUint>, tail: Tail, decimal: Option<f64>) -> Result<Self> {
        if let Some(i) = terms.iter().position(|a| a.is_zero()) {
            return Err(Error::ZeroTerm { index: i + 1 });
        }
        if terms.is_empty() {
            return Err(Error::RuleExhausted { index: 1 });
        }
        let mut r = Self { terms, tail, value: 0.0 };
        r.value = r.evaluate();
        if let Some(v) = decimal {
            if !(v > 0.0 && v < 1.0) {
                return Err(Error::AngleOutOfRange(v));
            }
            r.check_decimal(v)?;
            r.value = v;
        }
        if !(r.value > 0.0 && r.value < 1.0) {
            return Err(Error::AngleOutOfRange(r.value));
        }
        Ok(r)
    }

    pub fn golden() -> Self {
        Self::new(vec![1], Tail::Periodic, Some((5f64.sqrt() - 1.0) / 2.0)).expect("golden mean")
    }

    pub fn sqrt2_minus_1() -> Self {
        Self::new(vec![2], Tail::Periodic, Some(2f64.sqrt() - 1.0)).expect("sqrt 2")
    }

    /// `[0; 10, 100, 10^4, 10^8, ...]`.
    pub fn liouville() -> Self {
        Self::new(vec![10], Tail::Rule(GrowthRule::LiouvilleSquare), None).expect("liouville")
    }

    pub fn value(&self) -> f64 {
        self.value
    }

    pub fn tail(&self) -> &Tail {
        &self.tail
    }

    pub fn prefix(&self) -> &[BigUint] {
        &self.terms
    }

    /// Partial quotient `a_k` for `k >= 1`.
    pub fn term(&self, k: usize) -> Option<BigUint> {
        assert!(k >= 1, "partial quotients are indexed from 1");
        let n = self.terms.len();
        if k <= n {
            return Some(self.terms[k - 1].clone());
        }
        match &self.tail {
            Tail::Finite => None,
            Tail::Periodic => Some(self.terms[(k - 1) % n].clone()),
            Tail::Rule(GrowthRule::LiouvilleSquare) => {
                let mut a = self.terms[n - 1].clone();
                for _ in n..k {
                    a = &a * &a;
                }
                Some(a)
            }
        }
    }

    fn evaluate(&self) -> f64 {
        let mut qs = Vec::new();
        let (mut q0, mut q1) = (BigUint::zero(), BigUint::one());
        let bound = BigUint::one() << 64u32;
        let mut k = 1;
        while let Some(a) = self.term(k) {
            qs.push(a.clone());
            let q2 = &a * &q1 + &q0;
            q0 = q1;
            q1 = q2;
            if q1 > bound || k > 400 {
                break;
            }
            k += 1;
        }
        let mut x = 0.0;
        for a in qs.iter().rev() {
            x = 1.0 / (big_to_f64(a) + x);
        }
        x
    }

    fn check_decimal(&self, v: f64) -> Result<()> {
        let cs = self.convergents_while(|c| c.q.bits() < 26);
        for w in cs.windows(2).skip(1) {
            let (c, next) = (&w[0], &w[1]);
            let p = big_to_f64(&c.p);
            let q = big_to_f64(&c.q);
            let bound = 1.0 / (q * big_to_f64(&next.q)) + 4.0 * f64::EPSILON;
            if (v - p / q).abs() > bound {
                return Err(Error::InconsistentDecimal {
                    value: v,
                    p: c.p.to_string(),
                    q: c.q.to_string(),
                });
            }
        }
        Ok(())
    }

    /// Convergents `(p_0, q_0) = (0, 1), (p_1, q_1), ...` while `keep` holds (plus one past it).
    pub(crate) fn convergents_while(&self, keep: impl Fn(&Convergent) -> bool) -> Vec<Convergent> {
        let mut out = vec![Convergent { p: BigUint::zero(), q: BigUint::one() }];
        let (mut pm, mut qm) = (BigUint::one(), BigUint::zero());
        let mut k = 1;
        while keep(out.last().unwrap()) {
            let Some(a) = self.term(k) else { break };
            let last = out.last().unwrap();
            let p = &a * &last.p + &pm;
            let q = &a * &last.q + &qm;
            pm = last.p.clone();
            qm = last.q.clone();
            out.push(Convergent { p, q });
            k += 1;
        }
        out
    }

    /// The first `count` convergents, starting from `(0, 1)`.
    pub fn convergents(&self, count: usize) -> Result<Vec<Convergent>> {
        let mut out = Vec::with_capacity(count);
        if count == 0 {
            return Ok(out);
        }
        out.push(Convergent { p: BigUint::zero(), q: BigUint::one() });
        let (mut pm, mut qm) = (BigUint::one(), BigUint::zero());
        for k in 1..count {
            let a = self.term(k).ok_or(Error::RuleExhausted { index: k })?;
            let last = out.last().unwrap();
            let p = &a * &last.p + &pm;
            let q = &a * &last.q + &qm;
            pm = last.p.clone();
            qm = last.q.clone();
            out.push(Convergent { p, q });
        }
        Ok(out)
    }

    /// `m * theta` reduced to `[-1/2, 1/2)` from the `f64` value; adequate for moderate `m`.
    pub fn frac_multiple(&self, m: i64) -> f64 {
        wrap_centered(frac_mul(m as i128, self.value))
    }

    /// Nearest integer `N` to `m * theta` and the signed remainder `m * theta - N`,
    /// the latter to near full relative precision even when `m` is astronomically large.
    pub fn nearest_multiple(&self, m: &BigInt) -> Result<(BigInt, f64)> {
        if m.is_zero() {
            return Ok((BigInt::zero(), 0.0));
        }
        let (mut pm, mut qm) = (BigUint::one(), BigUint::zero());
        let (mut p, mut q) = (BigUint::zero(), BigUint::one());
        let mut k = 1usize;
        loop {
            let next = self.term(k);
            let (pn, qn) = match &next {
                Some(a) => (a * &p + &pm, a * &q + &qm),
                None => (BigUint::zero(), BigUint::zero()),
            };
            if next.is_none() || k > 1 {
                // m*theta ~ m*p/q with error below |m| / (q * q_next).
                let num = m * BigInt::from_biguint(Sign::Plus, p.clone());
                let qi = BigInt::from_biguint(Sign::Plus, q.clone());
                let (n, r) = round_div(&num, &qi);
                let delta = big_ratio(&r, &q);
                if next.is_none() {
                    return Ok((n, delta));
                }
                let err = big_ratio(&(m.abs()), &(&q * &qn));
                if err <= delta.abs() * 2f64.powi(-52) || err < 1e-300 {
                    return Ok((n, delta));
                }
            }
            pm = std::mem::replace(&mut p, pn);
            qm = std::mem::replace(&mut q, qn);
            k += 1;
            if k > 200_000 {
                return Err(Error::RuleExhausted { index: k });
            }
        }
    }
}

/// Rounded quotient `n` and remainder `r = a - n b` with `|r| <= b/2`.
fn round_div(a: &BigInt, b: &BigInt) -> (BigInt, BigInt) {
    let (mut n, mut r) = a.div_mod_floor(b);
    let twice: BigInt = &r * 2;
    if &twice >= b {
        n += 1;
        r -= b;
    }
    (n, r)
}

fn decompose(x: &BigUint) -> (f64, i64) {
    let bits = x.bits();
    if bits <= 64 {
        (x.to_u64().unwrap() as f64, 0)
    } else {
        let shift = bits - 64;
        ((x >> shift).to_u64().unwrap() as f64, shift as i64)
    }
}

fn ldexp(mut x: f64, mut e: i64) -> f64 {
    while e > 1000 {
        x *= 2f64.powi(1000);
        e -= 1000;
        if x.is_infinite() {
            return x;
        }
    }
    while e < -1000 {
        x *= 2f64.powi(-1000);
        e += 1000;
        if x == 0.0 {
            return x;
        }
    }
    x * 2f64.powi(e as i32)
}

pub fn big_to_f64(x: &BigUint) -> f64 {
    let (m, e) = decompose(x);
    ldexp(m, e)
}

/// `num / den` as `f64` for arbitrarily large operands.
pub fn big_ratio(num: &BigInt, den: &BigUint) -> f64 {
    if num.is_zero() {
        return 0.0;
    }
    let (mn, en) = decompose(num.magnitude());
    let (md, ed) = decompose(den);
    let v = ldexp(mn / md, en - ed);
    if num.is_negative() {
        -v
    } else {
        v
    }
}

/// `{cf: [0, a_1, ...], tail, decimal}`.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RotationRecord {
    pub cf: Vec<u64>,
    #[serde(default = "default_tail")]
    pub tail: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub decimal: Option<f64>,
}

fn default_tail() -> String {
    "finite".into()
}

impl TryFrom<RotationRecord> for RotationNumber {
    type Error = Error;

    fn try_from(r: RotationRecord) -> Result<Self> {
        let Some((&head, rest)) = r.cf.split_first() else {
            return Err(Error::RuleExhausted { index: 0 });
        };
        if head != 0 {
            return Err(Error::AngleOutOfRange(head as f64));
        }
        let tail = match r.tail.as_str() {
            "finite" => Tail::Finite,
            "periodic" => Tail::Periodic,
            s => match s.strip_prefix("rule:") {
                Some(name) => Tail::Rule(GrowthRule::parse(name)?),
                None => return Err(Error::UnknownRule(s.to_string())),
            },
        };
        RotationNumber::new(rest.to_vec(), tail, r.decimal)
    }
}

impl From<&RotationNumber> for RotationRecord {
    fn from(r: &RotationNumber) -> Self {
        let mut cf = vec![0];
        cf.extend(r.terms.iter().map(|a| a.to_u64().unwrap_or(u64::MAX)));
        let tail = match &r.tail {
            Tail::Finite => "finite".to_string(),
            Tail::Periodic => "periodic".to_string(),
            Tail::Rule(g) => format!("rule:{}", g.name()),
        };
        RotationRecord { cf, tail, decimal: Some(r.value) }
    }
}

impl Serialize for RotationNumber {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        RotationRecord::from(self).serialize(s)
    }
}
