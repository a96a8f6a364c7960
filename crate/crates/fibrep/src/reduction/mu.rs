//! The shift `mu` for each reduction step:
//! `mu = log( sqrt5 * N / ((b-1) * D) ) / log alpha` with
//! `N` in `{d1, d1 b^l1 - (d1-d2), d1 b^(l1+l2) - (d1-d2) b^l2 - (d2-d3)}` and
//! `D` in `{1, 1 + alpha^-k, 1 + alpha^-k + alpha^-m}`.

use num_bigint::BigInt;
use num_traits::Signed;

use crate::contfrac::RealProducer;
use crate::precision::{hp_ln, hp_ln_int, hp_ln_real, ln_golden, HPReal, PrecisionError};

use super::family::{XKind, YKind};
use super::steps::StepId;
use super::{inv_golden, ReductionError};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
pub struct MuParams {
    pub d1: u32,
    pub d2: u32,
    pub d3: u32,
    pub l1: u32,
    pub l2: u32,
    pub k: u32,
    pub m: u32,
}

/// The integer `N` for the given numerator shape.
pub fn numerator(kind: XKind, b: u32, p: &MuParams) -> BigInt {
    let bb = BigInt::from(b);
    let d1 = BigInt::from(p.d1);
    let e2 = BigInt::from(p.d1) - p.d2;
    let e3 = BigInt::from(p.d2) - p.d3;
    match kind {
        XKind::X1 => d1,
        XKind::X2 => d1 * bb.pow(p.l1) - e2,
        XKind::X3 => d1 * bb.pow(p.l1 + p.l2) - e2 * bb.pow(p.l2) - e3,
    }
}

/// `D = 1 + alpha^-k (+ alpha^-m)`.
pub fn denominator(kind: YKind, p: &MuParams, digits: u32) -> HPReal {
    let one = HPReal::from_i64(1, digits);
    let ia = inv_golden(digits + 4);
    match kind {
        YKind::Y0 => one,
        YKind::Y1 => one.add(&ia.powi(p.k)).with_digits(digits),
        YKind::Y2 => one.add(&ia.powi(p.k)).add(&ia.powi(p.m)).with_digits(digits),
    }
}

/// Certified `mu` for a step, evaluated directly from its definition.
pub fn mu_formulas(step: StepId, b: u32, p: &MuParams, digits: u32) -> Result<HPReal, ReductionError> {
    let (xk, yk) = step.shape();
    mu_of_shape(xk, yk, b, p, digits)
}

pub fn mu_of_shape(xk: XKind, yk: YKind, b: u32, p: &MuParams, digits: u32) -> Result<HPReal, ReductionError> {
    if !(2..=36).contains(&b) || p.d1 == 0 || p.d1 >= b || p.d2 >= b || p.d3 >= b {
        return Err(ReductionError::Invalid(format!("digits out of range for base {b}")));
    }
    let n = numerator(xk, b, p);
    if !n.is_positive() {
        return Err(ReductionError::NonPositiveLogArgument);
    }
    let w = digits + 10;
    let ln_n = hp_ln(&n, &BigInt::from(1), w)?;
    let ln_d = hp_ln_real(&denominator(yk, p, w))?;
    let ln_sqrt5 = hp_ln_int(5, w).div_int(&BigInt::from(2));
    let ln_bm1 = hp_ln_int((b - 1) as u64, w);
    let num = ln_sqrt5.add(&ln_n).sub(&ln_bm1).sub(&ln_d);
    Ok(num.div(&ln_golden(w))?.with_digits(digits))
}

/// `mu` as a producer for `reduce_once`.
#[derive(Debug, Clone)]
pub struct MuProducer {
    pub x: XKind,
    pub y: YKind,
    pub base: u32,
    pub params: MuParams,
}

impl MuProducer {
    pub fn for_step(step: StepId, base: u32, params: MuParams) -> Self {
        let (x, y) = step.shape();
        MuProducer { x, y, base, params }
    }
}

impl RealProducer for MuProducer {
    fn eval(&self, digits: u32) -> Result<HPReal, PrecisionError> {
        mu_of_shape(self.x, self.y, self.base, &self.params, digits).map_err(|e| match e {
            ReductionError::Precision(p) => p,
            _ => PrecisionError::NonPositive,
        })
    }
    fn key(&self) -> String {
        format!("mu:{:?}:{:?}:{}:{:?}", self.x, self.y, self.base, self.params)
    }
}


#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn step_one_base_two() {
        let p = MuParams { d1: 1, ..Default::default() };
        let v = mu_formulas(StepId::S4_1, 2, &p, 50).unwrap();
        // 50-digit reference: log(sqrt 5) / log(alpha)
        assert!(v.to_decimal(20).starts_with("1.672275938"), "{}", v.to_decimal(20));
    }

    #[test]
    fn step_fourteen_degenerate_parameters() {
        // k = m = 0 and equal digits: mu = log(sqrt5 d b^2 / (3 (b-1))) / log alpha
        for b in 2..=10u32 {
            for d in 1..b {
                let p = MuParams { d1: d, d2: d, d3: d, l1: 1, l2: 1, k: 0, m: 0 };
                let v = mu_formulas(StepId::S4_14, b, &p, 40).unwrap();
                let n = BigInt::from(d * b * b);
                let direct = hp_ln_int(5, 50)
                    .div_int(&BigInt::from(2))
                    .add(&hp_ln(&n, &BigInt::from(3 * (b - 1)), 50).unwrap())
                    .div(&ln_golden(50))
                    .unwrap();
                assert!(v.overlaps(&direct));
            }
        }
    }

    #[test]
    fn numerator_matches_place_values() {
        let p = MuParams { d1: 3, d2: 1, d3: 2, l1: 2, l2: 3, ..Default::default() };
        // 3 b^5 - 2 b^3 - (-1) at b = 10
        assert_eq!(numerator(XKind::X3, 10, &p), BigInt::from(300_000 - 2_000 + 1));
        assert_eq!(numerator(XKind::X2, 10, &p), BigInt::from(300 - 2));
    }

    #[test]
    fn bad_digits_rejected() {
        let p = MuParams { d1: 0, ..Default::default() };
        assert!(mu_formulas(StepId::S4_1, 2, &p, 30).is_err());
    }
}
