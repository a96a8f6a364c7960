//! Continued-fraction reduction for `0 < |u tau - v + mu| < A B^(-w)` with `1 <= u <= M`.
//!
//! With `q > 6M` a convergent denominator of `tau` and `eps = ||mu q|| - M ||tau q|| > 0`,
//! every solution has `w < log(A q / eps) / log B`.

pub mod chain;
pub mod family;
pub mod mu;
pub mod steps;

use std::fmt;
use std::sync::Arc;

use num_bigint::BigInt;
use num_traits::{One, Signed};
#[cfg(test)]
use num_traits::Zero;
use serde::{Serialize, Serializer};
use thiserror::Error;

use crate::contfrac::{cf_expand_with, CfError, RealProducer, Tau};
use crate::precision::{self, golden_ratio, hp_ln_int, hp_ln_ratio, nearest_int_distance, HPReal, PrecisionError};

pub use chain::{run_chain, run_round, ChainReport, RoundReport};
pub use family::{family_reduce, FamilyReport, FamilySpec, Selection, Target, XKind, XRange, YKind, YRange};
pub use mu::{mu_formulas, MuParams, MuProducer};
pub use steps::{StepId, STEP_IDS};

pub const DEFAULT_BUDGET: usize = 40;
pub const DEFAULT_M: &str = "3.1e86";

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ReductionError {
    #[error("invalid problem: {0}")]
    Invalid(String),
    #[error("no positive epsilon within {tried} convergents")]
    NoPositiveEpsilon { tried: usize },
    #[error("logarithm argument is not positive")]
    NonPositiveLogArgument,
    #[error("{0} family members left unresolved")]
    Unresolved(usize),
    #[error(transparent)]
    Cf(#[from] CfError),
    #[error(transparent)]
    Precision(#[from] PrecisionError),
}

impl ReductionError {
    pub fn is_precision_exhausted(&self) -> bool {
        matches!(
            self,
            ReductionError::Cf(CfError::PrecisionExhausted)
                | ReductionError::Precision(PrecisionError::Exhausted { .. })
                | ReductionError::Cf(CfError::Precision(PrecisionError::Exhausted { .. }))
        )
    }
}

pub fn default_m() -> BigInt {
    let (p, q) = precision::parse_decimal(DEFAULT_M).expect("literal");
    p / q
}

/// Base of the exponential on the right-hand side.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum LogBase {
    Int(u32),
    Golden,
}

impl LogBase {
    pub fn ln(&self, digits: u32) -> HPReal {
        match self {
            LogBase::Int(b) => hp_ln_int(*b as u64, digits),
            LogBase::Golden => precision::ln_golden(digits),
        }
    }
}

impl fmt::Display for LogBase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LogBase::Int(b) => write!(f, "{b}"),
            LogBase::Golden => write!(f, "alpha"),
        }
    }
}

impl Serialize for LogBase {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

/// Exact positive rational constant such as `32.63` or `32.63 * 8`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Coef {
    pub num: BigInt,
    pub den: BigInt,
    pub text: String,
}

impl Coef {
    pub fn parse(s: &str) -> Option<Coef> {
        let (num, den) = precision::parse_decimal(s.trim())?;
        (num.is_positive() && den.is_positive()).then(|| Coef { num, den, text: s.trim().to_string() })
    }

    pub fn times(&self, k: u32) -> Coef {
        if k == 1 {
            return self.clone();
        }
        Coef { num: &self.num * k, den: self.den.clone(), text: format!("{}*{k}", self.text) }
    }

    pub fn to_f64(&self) -> f64 {
        HPReal::from_ratio(&self.num, &self.den, 30).to_f64()
    }
}

impl Serialize for Coef {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.text)
    }
}

/// Digits needed so that `q * x` and `M (q tau - p)` keep 64 good fractional bits plus a margin.
pub fn digits_for(q: &BigInt, m: &BigInt) -> u32 {
    let bits = q.bits() + m.bits() + 64 + 48;
    let need = (bits as f64 / std::f64::consts::LOG2_10).ceil() as u32 + 2;
    need.max(crate::precision::env_digits().unwrap_or(0))
}

/// Certified upper end of `log(A q / eps) / log B` for `eps = eps_num / 2^eps_shift > 0`.
pub fn log_bound(a: &Coef, q: &BigInt, eps_num: &BigInt, eps_shift: u32, base: LogBase) -> HPReal {
    let digits = 40;
    let num = (&a.num * q) << eps_shift;
    let den = &a.den * eps_num;
    let l = hp_ln_ratio(&num, &den, digits).expect("positive by construction");
    l.div(&base.ln(digits)).expect("log B > 0")
}

/// `ceil` of the upper end of `log_bound`.
pub fn ceil_bound(a: &Coef, q: &BigInt, eps_num: &BigInt, eps_shift: u32, base: LogBase) -> i64 {
    let x = log_bound(a, q, eps_num, eps_shift, base);
    i64::try_from(x.ceil_upper()).expect("bound fits")
}

pub struct ReductionProblem {
    pub tau: Arc<dyn RealProducer>,
    pub mu: Arc<dyn RealProducer>,
    pub a: Coef,
    pub b: LogBase,
    pub m: BigInt,
}

impl fmt::Debug for ReductionProblem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ReductionProblem")
            .field("tau", &self.tau.key())
            .field("mu", &self.mu.key())
            .field("a", &self.a.text)
            .field("b", &self.b)
            .field("m", &self.m.to_string())
            .finish()
    }
}

impl ReductionProblem {
    pub fn new(base: u32, mu: Arc<dyn RealProducer>, a: Coef, b: LogBase, m: BigInt) -> Self {
        ReductionProblem { tau: Arc::new(Tau(base)), mu, a, b, m }
    }

    pub fn validate(&self) -> Result<(), ReductionError> {
        if !self.m.is_positive() {
            return Err(ReductionError::Invalid("M must be at least 1".into()));
        }
        if let LogBase::Int(b) = self.b {
            if b < 2 {
                return Err(ReductionError::Invalid("B must exceed 1".into()));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ReductionOutcome {
    /// Zero-based convergent index.
    pub index: usize,
    #[serde(serialize_with = "ser_display")]
    pub q: BigInt,
    #[serde(skip)]
    pub eps: HPReal,
    /// Lower end of epsilon, three significant figures rounded down.
    pub eps_lower: String,
    #[serde(skip)]
    pub log_ratio: HPReal,
    pub log_ratio_f64: f64,
    /// `ceil(log(A q / eps) / log B)`.
    pub w_max: i64,
    /// Largest `w` strictly below the unrounded bound.
    pub w_strict: i64,
    pub tried: usize,
}

fn ser_display<S: Serializer, T: fmt::Display>(v: &T, s: S) -> Result<S::Ok, S::Error> {
    s.collect_str(v)
}

/// `(||mu q|| - M ||tau q||)` at the given precision; ambiguous when it straddles 0.
fn epsilon_at(p: &ReductionProblem, q: &BigInt, digits: u32) -> Result<HPReal, PrecisionError> {
    let mq = nearest_int_distance(&p.mu.eval(digits)?.mul_int(q))?;
    let tq = nearest_int_distance(&p.tau.eval(digits)?.mul_int(q))?;
    let eps = mq.sub(&tq.mul_int(&p.m));
    if eps.is_positive() || eps.is_negative() {
        Ok(eps)
    } else {
        Err(PrecisionError::AmbiguousAtPrecision { digits })
    }
}

pub fn reduce_once(p: &ReductionProblem) -> Result<ReductionOutcome, ReductionError> {
    reduce_with_budget(p, DEFAULT_BUDGET)
}

/// First convergent with `q > 6M` and a certified positive epsilon, trying at most `budget` of them.
pub fn reduce_with_budget(p: &ReductionProblem, budget: usize) -> Result<ReductionOutcome, ReductionError> {
    p.validate()?;
    let six_m = &p.m * 6;
    let cf = cf_expand_with(&*p.tau, &six_m, budget + 1)?;
    let t0 = cf.q.iter().position(|q| q > &six_m).ok_or(CfError::TooShort { have: cf.len() })?;
    let end = (t0 + budget).min(cf.len());
    for t in t0..end {
        let q = &cf.q[t];
        let start = digits_for(q, &p.m);
        let mut digits = start;
        let eps = loop {
            match epsilon_at(p, q, digits) {
                Ok(e) => break Some(e),
                Err(PrecisionError::AmbiguousAtPrecision { .. }) if digits < 8 * start => digits *= 2,
                Err(PrecisionError::AmbiguousAtPrecision { .. }) => break None,
                Err(e) => return Err(e.into()),
            }
        };
        let Some(eps) = eps.filter(|e| e.is_positive()) else { continue };
        let lo = eps.lo_scaled();
        let x = log_bound(&p.a, q, &lo, eps.bits(), p.b);
        let w_max = i64::try_from(x.ceil_upper()).expect("bound fits");
        return Ok(ReductionOutcome {
            index: t,
            q: q.clone(),
            eps_lower: eps.lower_sig(3),
            eps,
            log_ratio_f64: x.to_f64(),
            log_ratio: x,
            w_max,
            w_strict: w_max - 1,
            tried: t - t0 + 1,
        });
    }
    Err(ReductionError::NoPositiveEpsilon { tried: end - t0 })
}

/// `1/alpha = alpha - 1`.
pub(crate) fn inv_golden(digits: u32) -> HPReal {
    golden_ratio(digits).sub(&HPReal::from_int(&BigInt::one(), digits))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::contfrac::{FnProducer, Golden};
    use proptest::prelude::*;

    fn mu_const(key: &str, f: impl Fn(u32) -> Result<HPReal, PrecisionError> + Send + Sync + 'static) -> Arc<dyn RealProducer> {
        Arc::new(FnProducer { key: key.to_string(), f })
    }

    #[test]
    fn step_one_base_two_single_member() {
        // mu = log(sqrt5) / log(alpha)
        let mu = mu_const("sqrt5", |d| {
            let dd = d + 8;
            Ok(hp_ln_int(5, dd).div_int(&BigInt::from(2)).div(&precision::ln_golden(dd))?.with_digits(d))
        });
        let p = ReductionProblem::new(2, mu, Coef::parse("32.63").unwrap(), LogBase::Int(2), default_m());
        let out = reduce_once(&p).unwrap();
        assert!(out.q > default_m() * 6);
        let e = out.eps.to_f64();
        assert!((e - 0.373).abs() < 0.0373, "eps {e}");
        assert_eq!(out.w_max + 1, 301);
    }

    #[test]
    fn zero_mu_never_gives_positive_epsilon() {
        let mu = mu_const("zero", |d| Ok(HPReal::zero(d)));
        let p = ReductionProblem {
            tau: Arc::new(Golden),
            mu,
            a: Coef::parse("1").unwrap(),
            b: LogBase::Int(2),
            m: BigInt::from(10),
        };
        assert_eq!(reduce_with_budget(&p, 5).unwrap_err(), ReductionError::NoPositiveEpsilon { tried: 5 });
    }

    #[test]
    fn rejects_bad_problems() {
        let mu = mu_const("one", |d| Ok(HPReal::from_i64(1, d)));
        let mut p = ReductionProblem::new(3, mu, Coef::parse("2").unwrap(), LogBase::Int(1), BigInt::from(5));
        assert!(matches!(reduce_once(&p), Err(ReductionError::Invalid(_))));
        p.b = LogBase::Int(3);
        p.m = BigInt::zero();
        assert!(matches!(reduce_once(&p), Err(ReductionError::Invalid(_))));
        assert!(Coef::parse("-1").is_none());
    }

    #[test]
    fn bound_monotone_in_eps() {
        let a = Coef::parse("5.82").unwrap();
        let q = BigInt::from(10).pow(30);
        let mut last = i64::MAX;
        for e in [1u64, 10, 1000, 1 << 40, 1 << 62] {
            let w = ceil_bound(&a, &q, &BigInt::from(e), 64, LogBase::Golden);
            assert!(w <= last);
            last = w;
        }
    }

    fn frac_dist(x: f64) -> f64 {
        (x - x.round()).abs()
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]
        // exhaustive check on small synthetic instances
        #[test]
        fn sound_against_exhaustive_scan(
            b in 2u32..11,
            mu_num in 1i64..10_000,
            m in 10u64..100_000,
            a_int in 1u32..60,
        ) {
            let mu_val = mu_num as f64 / 10_007.0;
            let mu = mu_const(&format!("synthetic:{mu_num}"), move |d| {
                Ok(HPReal::from_ratio(&BigInt::from(mu_num), &BigInt::from(10_007), d))
            });
            let a = Coef::parse(&a_int.to_string()).unwrap();
            let base = LogBase::Int(b);
            let p = ReductionProblem::new(b, mu, a, base, BigInt::from(m));
            if let Ok(out) = reduce_once(&p) {
                let tau = (b as f64).ln() / ((1.0 + 5f64.sqrt()) / 2.0).ln();
                // no u <= M admits a form below A * B^(-(w_max))
                let floor = a_int as f64 * (b as f64).powi(-(out.w_max as i32));
                for u in 1..=m {
                    let form = frac_dist(u as f64 * tau + mu_val);
                    if form < floor * 1.01 + 1e-9 {
                        // re-check suspicious u exactly
                        let d = 40;
                        let x = Tau(b).eval(d).unwrap().mul_int(&BigInt::from(u))
                            .add(&HPReal::from_ratio(&BigInt::from(mu_num), &BigInt::from(10_007), d));
                        let dist = nearest_int_distance(&x).unwrap();
                        let fl = HPReal::from_ratio(&BigInt::from(a_int), &BigInt::from(b).pow(out.w_max as u32), d);
                        prop_assert!(dist.certified_cmp(&fl) != Some(std::cmp::Ordering::Less),
                            "u={u} form={form} floor={floor}");
                    }
                }
            }
        }
    }
}
