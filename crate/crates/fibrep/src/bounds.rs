//! Linear-forms constants, heights, the log-power inversion lemma and the per-case bounds.

use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::One;
use serde::Serialize;
use thiserror::Error;

use crate::precision::{hp_ln, hp_ln_int, hp_ln_real, HPReal, PrecisionError};

const DIGITS: u32 = 60;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum BoundError {
    #[error("hypothesis H > (4 l^2)^l fails")]
    HypothesisViolated,
    #[error("comparison undecidable at available precision")]
    Undecidable,
    #[error("unknown case label {0}")]
    UnknownCase(String),
    #[error("height of 0/0")]
    ZeroOverZero,
    #[error(transparent)]
    Precision(#[from] PrecisionError),
}

fn dec(s: &str) -> HPReal {
    HPReal::from_decimal_str(s, DIGITS).expect("literal")
}

/// `18 (s+1)! s^(s+1) (32 d)^(s+2) log(2 s d)`
pub fn baker_constant(s: u32, d: u32) -> HPReal {
    assert!(s >= 1 && d >= 1);
    let fact: BigInt = (1..=(s as u64 + 1)).map(BigInt::from).product();
    let c = BigInt::from(18)
        * fact
        * num_traits::pow(BigInt::from(s), s as usize + 1)
        * num_traits::pow(BigInt::from(32 * d), s as usize + 2);
    hp_ln_int(2 * s as u64 * d as u64, DIGITS).mul_int(&c)
}

/// `log max(|p|, q)` after reducing `p/q`.
pub fn h0_rational(p: i64, q: i64) -> Result<HPReal, BoundError> {
    if p == 0 && q == 0 {
        return Err(BoundError::ZeroOverZero);
    }
    assert!(q >= 0, "denominator must be non-negative");
    let g = p.gcd(&q).max(1);
    let m = (p.abs() / g).max(q / g);
    Ok(hp_ln_int(m as u64, DIGITS))
}

pub fn h0_sum(a: &HPReal, b: &HPReal) -> HPReal {
    a.add(b).add(&hp_ln_int(2, a.digits()))
}

pub fn h0_prod(a: &HPReal, b: &HPReal) -> HPReal {
    a.add(b)
}

pub fn h0_pow(a: &HPReal, l: i64) -> HPReal {
    a.mul_int(&BigInt::from(l.abs()))
}

/// Height of `(b-1)/(sqrt 5 d1)` from its minimal polynomial `5 d1^2 X^2 - (b-1)^2`.
pub fn h0_sqrt5_quotient(b: u32, d1: u32) -> HPReal {
    let lead = 5 * (d1 as i64).pow(2);
    let cst = ((b - 1) as i64).pow(2);
    let g = lead.gcd(&cst);
    let (lead, cst) = (lead / g, cst / g);
    // both roots have modulus sqrt(cst/lead); degree 2
    let half = |x: HPReal| x.div_int(&BigInt::from(2));
    let root_log = half(hp_ln(&BigInt::from(cst), &BigInt::from(lead), DIGITS).unwrap());
    let lead_log = hp_ln_int(lead as u64, DIGITS);
    let m = if root_log.is_positive() { root_log.mul_int(&BigInt::from(2)) } else { HPReal::zero(DIGITS) };
    half(lead_log.add(&m))
}

/// Returns `2^l H (log H)^l`, valid when `H > (4 l^2)^l`.
pub fn guzman_luca(l: u32, h: &HPReal) -> Result<HPReal, BoundError> {
    assert!(l >= 1);
    let threshold = HPReal::from_int(&num_traits::pow(BigInt::from(4 * l * l), l as usize), h.digits());
    match h.certified_cmp(&threshold) {
        Some(std::cmp::Ordering::Greater) => {}
        Some(_) => return Err(BoundError::HypothesisViolated),
        None => return Err(BoundError::Undecidable),
    }
    let lh = hp_ln_real(h)?;
    Ok(lh.powi(l).mul(h).mul_int(&(BigInt::one() << l)))
}

#[derive(Debug, Clone, Serialize)]
pub struct Theorem1 {
    pub b: u32,
    /// `3.09e82 log^11 b`
    pub bound: String,
    pub bound_f64: f64,
    /// `2^5 1.6e69 log^6 b (159.35 + 6 log log b)^5` evaluated directly
    pub chain_value_f64: f64,
    pub chain_holds: bool,
    /// `227 log b - (159.35 + 6 log log b)`; the inequality holds iff positive
    pub aux_margin: f64,
    pub aux_holds: bool,
    /// `log(1.6e69)`, which the chain rounds to 159.35
    pub log_h_constant: f64,
}

pub fn theorem1_bound(b: u32) -> Result<Theorem1, BoundError> {
    assert!(b >= 2);
    let lb = hp_ln_int(b as u64, DIGITS);
    // log log b is negative at b = 2
    let llb = hp_ln_real(&lb)?;
    let c = dec("3.09e82");
    let bound = c.mul(&lb.powi(11));
    let inner = dec("159.35").add(&llb.mul_int(&BigInt::from(6)));
    let chain = dec("1.6e69").mul_int(&BigInt::from(32)).mul(&lb.powi(6)).mul(&inner.powi(5));
    let chain_holds = matches!(bound.certified_cmp(&chain), Some(std::cmp::Ordering::Greater));
    let aux = lb.mul_int(&BigInt::from(227)).sub(&inner);
    let aux_holds = matches!(aux.certified_cmp(&HPReal::zero(DIGITS)), Some(std::cmp::Ordering::Greater));
    let log_h = hp_ln_real(&dec("1.6e69"))?;
    Ok(Theorem1 {
        b,
        bound: bound.upper_sig(4),
        bound_f64: bound.to_f64(),
        chain_value_f64: chain.to_f64(),
        chain_holds,
        aux_margin: aux.to_f64(),
        aux_holds,
        log_h_constant: log_h.to_f64(),
    })
}

/// The bound on `n1` as a certified interval.
pub fn theorem1_value(b: u32) -> HPReal {
    dec("3.09e82").mul(&hp_ln_int(b as u64, DIGITS).powi(11))
}

/// Bound from `n1 < H log^5 n1` with `H = 1.6e69 log^6 b`, through `guzman_luca(5, H)`,
/// before the coarser `227 log b` simplification.
pub fn direct_n1_bound(b: u32) -> Result<HPReal, BoundError> {
    let h = dec("1.6e69").mul(&hp_ln_int(b as u64, DIGITS).powi(6));
    guzman_luca(5, &h)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum Case {
    #[serde(rename = "1A")]
    C1A,
    #[serde(rename = "1B-A")]
    C1BA,
    #[serde(rename = "1B-B")]
    C1BB,
    #[serde(rename = "2A")]
    C2A,
    #[serde(rename = "2B-A")]
    C2BA,
    #[serde(rename = "2B-B")]
    C2BB,
}

impl Case {
    pub const ALL: [Case; 6] = [Case::C1A, Case::C1BA, Case::C1BB, Case::C2A, Case::C2BA, Case::C2BB];

    pub fn label(&self) -> &'static str {
        match self {
            Case::C1A => "1A",
            Case::C1BA => "1B-A",
            Case::C1BB => "1B-B",
            Case::C2A => "2A",
            Case::C2BA => "2B-A",
            Case::C2BB => "2B-B",
        }
    }
}

impl fmt::Display for Case {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for Case {
    type Err = BoundError;
    fn from_str(s: &str) -> Result<Self, BoundError> {
        Case::ALL
            .iter()
            .copied()
            .find(|c| c.label().eq_ignore_ascii_case(s))
            .ok_or_else(|| BoundError::UnknownCase(s.to_string()))
    }
}

/// `c log^j b log^k (n1+2)`
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoundShape {
    pub constant: &'static str,
    pub log_b_power: u32,
    pub log_n_power: u32,
}

const S14: BoundShape = BoundShape { constant: "1.5e14", log_b_power: 2, log_n_power: 1 };
const S27: BoundShape = BoundShape { constant: "7.48e27", log_b_power: 3, log_n_power: 2 };
const S41A: BoundShape = BoundShape { constant: "1.7e41", log_b_power: 4, log_n_power: 3 };
const S41B: BoundShape = BoundShape { constant: "1.76e41", log_b_power: 4, log_n_power: 3 };
const S41C: BoundShape = BoundShape { constant: "3.6e41", log_b_power: 4, log_n_power: 3 };
const S54A: BoundShape = BoundShape { constant: "8.27e54", log_b_power: 5, log_n_power: 4 };
const S54B: BoundShape = BoundShape { constant: "8.7e54", log_b_power: 5, log_n_power: 4 };

/// Shapes for `(n1-n2) log alpha`, `(n1-n3) log alpha`, `l1 log b`, `l2 log b`.
pub fn case_shapes(case: Case) -> [BoundShape; 4] {
    match case {
        Case::C1A => [S14, S27, S41A, S54A],
        Case::C1BA => [S14, S54B, S27, S41C],
        Case::C1BB => [S14, S41C, S27, S54B],
        Case::C2A => [S41B, S54A, S14, S27],
        Case::C2BA => [S27, S41C, S14, S54B],
        Case::C2BB => [S27, S54B, S14, S41C],
    }
}

impl BoundShape {
    pub fn eval(&self, b: u32, n1: u64) -> HPReal {
        let lb = hp_ln_int(b as u64, DIGITS);
        let ln = hp_ln_int(n1 + 2, DIGITS);
        dec(self.constant).mul(&lb.powi(self.log_b_power)).mul(&ln.powi(self.log_n_power))
    }
}

#[derive(Debug, Clone)]
pub struct CaseBounds {
    pub case: Case,
    pub b: u32,
    pub n1: u64,
    pub n1_minus_n2_log_alpha: HPReal,
    pub n1_minus_n3_log_alpha: HPReal,
    pub l1_log_b: HPReal,
    pub l2_log_b: HPReal,
}

impl CaseBounds {
    pub fn values(&self) -> [&HPReal; 4] {
        [&self.n1_minus_n2_log_alpha, &self.n1_minus_n3_log_alpha, &self.l1_log_b, &self.l2_log_b]
    }
}

pub fn table1_bounds(case: Case, b: u32, n1: u64) -> CaseBounds {
    let s = case_shapes(case);
    CaseBounds {
        case,
        b,
        n1,
        n1_minus_n2_log_alpha: s[0].eval(b, n1),
        n1_minus_n3_log_alpha: s[1].eval(b, n1),
        l1_log_b: s[2].eval(b, n1),
        l2_log_b: s[3].eval(b, n1),
    }
}

pub fn table1_bounds_str(case: &str, b: u32, n1: u64) -> Result<CaseBounds, BoundError> {
    Ok(table1_bounds(case.parse()?, b, n1))
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_traits::Zero;

    fn int(n: i64) -> HPReal {
        HPReal::from_i64(n, DIGITS)
    }

    fn is_zero(x: &HPReal) -> bool {
        x.contains_ratio(&BigInt::zero(), &BigInt::one()) && x.err_f64() < 1e-60
    }

    #[test]
    fn baker_values() {
        let c = baker_constant(3, 2);
        assert!(c.certified_cmp(&dec("9.33e13")).unwrap().is_gt());
        assert!(c.certified_cmp(&dec("9.34e13")).unwrap().is_lt());
        // 18 * 2 * 1 * 32^3 * log 2 = 1179648 log 2
        let c11 = baker_constant(1, 1);
        let direct = hp_ln_int(2, DIGITS).mul_int(&BigInt::from(1179648));
        assert!(c11.overlaps(&direct));
        assert!((c11.to_f64() - 1179648.0 * 2f64.ln()).abs() < 1e-6);
        assert!(c11.to_decimal(0).starts_with("817669"));
        assert!(baker_constant(3, 2).certified_cmp(&baker_constant(2, 2)).unwrap().is_gt());
    }

    #[test]
    fn heights() {
        assert!(is_zero(&h0_rational(1, 1).unwrap()));
        assert!(h0_rational(3, 5).unwrap().overlaps(&hp_ln_int(5, DIGITS)));
        assert!(h0_rational(-7, 2).unwrap().overlaps(&hp_ln_int(7, DIGITS)));
        assert!(h0_rational(6, 4).unwrap().overlaps(&hp_ln_int(3, DIGITS)));
        assert_eq!(h0_rational(0, 0), Err(BoundError::ZeroOverZero));
        let x = hp_ln_int(11, DIGITS);
        assert!(h0_prod(&HPReal::zero(DIGITS), &x).overlaps(&x));
        let p = h0_pow(&h0_rational(1, 2).unwrap(), 3);
        assert!(p.overlaps(&hp_ln_int(2, DIGITS).mul_int(&BigInt::from(3))));
        let s = h0_sum(&x, &x);
        assert!(s.overlaps(&hp_ln_int(242, DIGITS)));
    }

    #[test]
    fn step31_height_estimate() {
        for b in 2..=10u32 {
            let lb = hp_ln_int(b as u64, DIGITS);
            let cap = lb.mul_int(&BigInt::from(2)).add(&hp_ln_int(5, DIGITS).div_int(&BigInt::from(2)));
            let coarse = lb.mul(&dec("3.2"));
            for d1 in 1..b {
                let h = h0_sqrt5_quotient(b, d1);
                assert!(cap.certified_cmp(&h).unwrap().is_gt(), "b={b} d1={d1}");
            }
            assert!(coarse.certified_cmp(&cap).unwrap().is_gt(), "b={b}");
        }
    }

    #[test]
    fn lemma_examples() {
        let v = guzman_luca(1, &int(100)).unwrap();
        assert!((v.to_f64() - 921.034).abs() < 1e-3);
        assert_eq!(guzman_luca(1, &int(3)), Err(BoundError::HypothesisViolated));
        assert_eq!(guzman_luca(1, &int(4)), Err(BoundError::HypothesisViolated));
        assert!(guzman_luca(1, &int(5)).is_ok());
        assert_eq!(guzman_luca(2, &int(256)), Err(BoundError::HypothesisViolated));
        assert!(guzman_luca(2, &int(257)).is_ok());
        let h = dec("1.6e69").mul(&hp_ln_int(2, DIGITS).powi(6));
        assert!(guzman_luca(5, &h).unwrap().is_positive());
    }

    #[test]
    fn theorem_one() {
        let t = theorem1_bound(2).unwrap();
        assert!(t.chain_holds && t.aux_holds);
        assert!(t.aux_margin > 0.0 && t.aux_margin < 0.5);
        let expect = 3.09e82 * 2f64.ln().powi(11);
        assert!((t.bound_f64 / expect - 1.0).abs() < 1e-12);
        let t10 = theorem1_bound(10).unwrap();
        assert!(t10.bound_f64 > 2.9e86 && t10.bound_f64 < 3.0e86);
        for b in 2..=10 {
            let v = theorem1_value(b);
            assert!(v.certified_cmp(&dec("3.1e86")).unwrap().is_lt());
            assert!(theorem1_bound(b).unwrap().chain_holds);
        }
    }

    #[test]
    fn table1_spot_values() {
        let c = table1_bounds(Case::C1A, 2, 300);
        let lb = 2f64.ln();
        let ln = 302f64.ln();
        assert!((c.n1_minus_n2_log_alpha.to_f64() / (1.5e14 * lb * lb * ln) - 1.0).abs() < 1e-12);
        assert!((c.l2_log_b.to_f64() / (8.27e54 * lb.powi(5) * ln.powi(4)) - 1.0).abs() < 1e-12);
        for case in Case::ALL {
            let c = table1_bounds(case, 2, 10);
            assert!(c.values().iter().all(|v| v.is_positive()));
            let d = table1_bounds(case, 2, 11);
            for (x, y) in c.values().iter().zip(d.values()) {
                assert!(y.certified_cmp(x).unwrap().is_gt());
            }
        }
        assert!(table1_bounds_str("3C", 2, 10).is_err());
        assert_eq!("2b-b".parse::<Case>().unwrap(), Case::C2BB);
    }
}
