//! Certified continued-fraction expansions.
//!
//! A producer evaluates a constant at a requested precision. Both ends of the interval
//! are expanded exactly by Euclid's algorithm; quotients shared by both ends (minus the
//! last one) hold for every real in between.

use std::collections::HashMap;
use std::sync::{Arc, OnceLock, RwLock};

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_traits::{One, Signed, Zero};
use serde::Serialize;
use thiserror::Error;

use crate::precision::{self, golden_ratio, hp_ln_int, ln_golden, HPReal, PrecisionError};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CfError {
    #[error("precision cap reached while certifying partial quotients")]
    PrecisionExhausted,
    #[error("expansion has only {have} convergents")]
    TooShort { have: usize },
    #[error(transparent)]
    Precision(#[from] PrecisionError),
}

/// A real constant that can be evaluated at any precision.
pub trait RealProducer: Send + Sync {
    fn eval(&self, digits: u32) -> Result<HPReal, PrecisionError>;
    /// Cache key; equal keys must denote the same real.
    fn key(&self) -> String;
}

/// `log b / log alpha`
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Tau(pub u32);

impl RealProducer for Tau {
    fn eval(&self, digits: u32) -> Result<HPReal, PrecisionError> {
        let d = digits + 8;
        hp_ln_int(self.0 as u64, d).div(&ln_golden(d)).map(|x| x.with_digits(digits))
    }
    fn key(&self) -> String {
        format!("tau:{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Golden;

impl RealProducer for Golden {
    fn eval(&self, digits: u32) -> Result<HPReal, PrecisionError> {
        Ok(golden_ratio(digits))
    }
    fn key(&self) -> String {
        "alpha".into()
    }
}

/// Producer backed by a closure; the caller supplies a unique key.
pub struct FnProducer<F> {
    pub key: String,
    pub f: F,
}

impl<F> RealProducer for FnProducer<F>
where
    F: Fn(u32) -> Result<HPReal, PrecisionError> + Send + Sync,
{
    fn eval(&self, digits: u32) -> Result<HPReal, PrecisionError> {
        (self.f)(digits)
    }
    fn key(&self) -> String {
        self.key.clone()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Convergent {
    pub index: usize,
    #[serde(serialize_with = "crate::ser_display")]
    pub a: BigInt,
    #[serde(serialize_with = "crate::ser_display")]
    pub p: BigInt,
    #[serde(serialize_with = "crate::ser_display")]
    pub q: BigInt,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CFExpansion {
    pub key: String,
    pub partial_quotients: Vec<BigInt>,
    pub p: Vec<BigInt>,
    pub q: Vec<BigInt>,
    /// Precision at which the quotients were certified.
    pub digits: u32,
}

impl CFExpansion {
    pub fn from_quotients(key: String, a: Vec<BigInt>, digits: u32) -> Self {
        let (mut p, mut q) = (Vec::with_capacity(a.len()), Vec::with_capacity(a.len()));
        let (mut p2, mut p1) = (BigInt::zero(), BigInt::one());
        let (mut q2, mut q1) = (BigInt::one(), BigInt::zero());
        for ai in &a {
            let pn = ai * &p1 + &p2;
            let qn = ai * &q1 + &q2;
            p.push(pn.clone());
            q.push(qn.clone());
            p2 = std::mem::replace(&mut p1, pn);
            q2 = std::mem::replace(&mut q1, qn);
        }
        CFExpansion { key, partial_quotients: a, p, q, digits }
    }

    pub fn len(&self) -> usize {
        self.q.len()
    }

    pub fn is_empty(&self) -> bool {
        self.q.is_empty()
    }

    pub fn convergent(&self, i: usize) -> Option<Convergent> {
        (i < self.len()).then(|| Convergent {
            index: i,
            a: self.partial_quotients[i].clone(),
            p: self.p[i].clone(),
            q: self.q[i].clone(),
        })
    }

    /// Largest partial quotient among `a_1..=a_i`.
    pub fn max_quotient_through(&self, i: usize) -> BigInt {
        self.partial_quotients[1..=i.min(self.len() - 1)].iter().max().cloned().unwrap_or_else(BigInt::one)
    }
}

/// Partial quotients of the rational `n/d` with `d > 0`.
fn euclid(mut n: BigInt, mut d: BigInt) -> Vec<BigInt> {
    let mut out = Vec::new();
    while !d.is_zero() {
        let (a, r) = n.div_mod_floor(&d);
        out.push(a);
        n = std::mem::replace(&mut d, r);
    }
    out
}

/// Quotients certified for every real in `x`'s interval.
pub fn certified_quotients(x: &HPReal) -> Vec<BigInt> {
    let den = BigInt::one() << x.bits();
    let a = euclid(x.lo_scaled(), den.clone());
    let b = euclid(x.hi_scaled(), den);
    let common = a.iter().zip(&b).take_while(|(u, v)| u == v).count();
    let keep = common.saturating_sub(1);
    a[..keep].to_vec()
}

fn cache() -> &'static RwLock<HashMap<String, Arc<CFExpansion>>> {
    static C: OnceLock<RwLock<HashMap<String, Arc<CFExpansion>>>> = OnceLock::new();
    C.get_or_init(|| RwLock::new(HashMap::new()))
}

fn covers(cf: &CFExpansion, min_denominator: &BigInt, extra: usize) -> bool {
    match cf.q.iter().position(|q| q > min_denominator) {
        Some(i) => i + extra < cf.len(),
        None => false,
    }
}

/// Expand `x` until some `q_t > min_denominator` and `extra` further convergents exist.
pub fn cf_expand_with(
    x: &dyn RealProducer,
    min_denominator: &BigInt,
    extra: usize,
) -> Result<Arc<CFExpansion>, CfError> {
    let key = x.key();
    if let Some(cf) = cache().read().unwrap().get(&key) {
        if covers(cf, min_denominator, extra) {
            return Ok(cf.clone());
        }
    }
    // q_t ~ 10^k needs roughly 2k digits for the tail to be certified
    let want = (min_denominator.bits() as f64 * std::f64::consts::LOG10_2) as u32 * 2 + 40 + 4 * extra as u32;
    let mut digits = want.max(precision::env_digits().unwrap_or(0)).max(64);
    loop {
        let v = x.eval(digits)?;
        let a = certified_quotients(&v);
        let cf = CFExpansion::from_quotients(key.clone(), a, digits);
        if covers(&cf, min_denominator, extra) {
            let cf = Arc::new(cf);
            let mut w = cache().write().unwrap();
            let better = w.get(&key).map(|old| old.len() < cf.len()).unwrap_or(true);
            if better {
                w.insert(key, cf.clone());
            }
            return Ok(cf);
        }
        if digits >= precision::MAX_DIGITS {
            return Err(CfError::PrecisionExhausted);
        }
        digits = (digits * 2).min(precision::MAX_DIGITS);
    }
}

pub fn cf_expand(x: &dyn RealProducer, min_denominator: &BigInt) -> Result<Arc<CFExpansion>, CfError> {
    cf_expand_with(x, min_denominator, 0)
}

/// First convergent with `q_t > bound`; `q_{t-1} <= bound` holds by monotonicity.
pub fn first_convergent_exceeding(cf: &CFExpansion, bound: &BigInt) -> Result<Convergent, CfError> {
    let i = cf.q.iter().position(|q| q > bound).ok_or(CfError::TooShort { have: cf.len() })?;
    Ok(cf.convergent(i).unwrap())
}

/// `|x - p_i/q_i| < 1/(q_i q_{i+1})` checked against an interval for `x`.
pub fn approximation_holds(x: &HPReal, cf: &CFExpansion, i: usize) -> bool {
    if i + 1 >= cf.len() {
        return false;
    }
    let d = cf.digits.max(x.digits());
    let x = x.with_digits(d);
    let diff = x.sub(&HPReal::from_ratio(&cf.p[i], &cf.q[i], d)).abs();
    let bound = HPReal::from_ratio(&BigInt::one(), &(&cf.q[i] * &cf.q[i + 1]), d);
    matches!(bound.certified_cmp(&diff), Some(std::cmp::Ordering::Greater))
}

pub fn gcd_is_one(p: &BigInt, q: &BigInt) -> bool {
    p.gcd(q).is_one()
}

/// `p_i q_{i-1} - p_{i-1} q_i`
pub fn determinant(cf: &CFExpansion, i: usize) -> BigInt {
    &cf.p[i] * &cf.q[i - 1] - &cf.p[i - 1] * &cf.q[i]
}

pub fn fib_denominators_ok(cf: &CFExpansion) -> bool {
    cf.q.windows(3).all(|w| w[2] >= &w[1] + &w[0]) && cf.q.iter().skip(1).all(|q| q.is_positive())
}

pub fn to_biguint(x: &BigInt) -> BigUint {
    x.magnitude().clone()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn golden_ratio_is_all_ones() {
        let cf = cf_expand(&Golden, &BigInt::from(100)).unwrap();
        assert!(cf.partial_quotients.iter().all(|a| a.is_one()));
        let f = |n: u64| BigInt::from(crate::fibonacci::fib(n));
        for i in 0..cf.len() {
            assert_eq!(cf.p[i], f(i as u64 + 2));
            assert_eq!(cf.q[i], f(i as u64 + 1));
        }
        let c = first_convergent_exceeding(&cf, &BigInt::from(10)).unwrap();
        assert_eq!(c.q, BigInt::from(13));
    }

    #[test]
    fn tau_two_starts_with_one() {
        let cf = cf_expand(&Tau(2), &BigInt::from(1000)).unwrap();
        assert_eq!(cf.partial_quotients[0], BigInt::one());
        // log 2 / log alpha = 1.44042...
        let t = Tau(2).eval(40).unwrap();
        assert!(t.to_decimal(5).starts_with("1.44042"));
    }

    #[test]
    fn determinant_identity() {
        let cf = cf_expand(&Tau(7), &BigInt::from(10).pow(40)).unwrap();
        for i in 1..cf.len() {
            let expect = if i % 2 == 1 { BigInt::one() } else { -BigInt::one() };
            assert_eq!(determinant(&cf, i), expect);
        }
    }

    #[test]
    fn pi_prefix_from_an_interval() {
        // 3.14159265358979 +- 1e-14
        let x = HPReal::from_ratio(&BigInt::from(314159265358979u64), &BigInt::from(10u64).pow(14), 30)
            .widen(&HPReal::from_ratio(&BigInt::one(), &BigInt::from(10u64).pow(14), 30));
        let a = certified_quotients(&x);
        let want: Vec<BigInt> = [3, 7, 15, 1, 292].iter().map(|&v| BigInt::from(v)).collect();
        assert!(a.len() >= 5, "{a:?}");
        assert_eq!(a[..5], want[..]);
        // an exact rational certifies all but its final quotient
        let r = HPReal::from_ratio(&BigInt::from(355), &BigInt::from(113), 30);
        assert!(certified_quotients(&r).len() <= 3);
    }

    fn expansion(b: u32) -> Arc<CFExpansion> {
        cf_expand_with(&Tau(b), &BigInt::from(10).pow(30), 40).unwrap()
    }

    #[test]
    fn sixty_convergents_per_base() {
        for b in 2..=10 {
            let cf = expansion(b);
            assert!(cf.len() >= 60, "b={b} has {}", cf.len());
            let x = Tau(b).eval(cf.digits).unwrap();
            for i in 0..60 {
                assert!(gcd_is_one(&cf.p[i], &cf.q[i]));
                assert!(approximation_holds(&x, &cf, i), "b={b} i={i}");
                if i > 0 {
                    assert!(determinant(&cf, i).abs().is_one());
                }
            }
            assert!(fib_denominators_ok(&cf));
        }
    }

    proptest::proptest! {
        #[test]
        fn convergent_identities(b in 2u32..=10, i in 1usize..60) {
            let cf = expansion(b);
            let sign = if i % 2 == 1 { BigInt::one() } else { -BigInt::one() };
            proptest::prop_assert_eq!(determinant(&cf, i), sign);
            // q_i >= F_{i+1}
            proptest::prop_assert!(cf.q[i] >= BigInt::from(crate::fibonacci::fib(i as u64 + 1)));
            let c = cf.convergent(i).unwrap();
            proptest::prop_assert_eq!(&c.q, &cf.q[i]);
            proptest::prop_assert_eq!(&c.a, &cf.partial_quotients[i]);
        }
    }
}
