//! Fixed-point reals with a rigorous absolute error bound.
//!
//! A value is `mant * 2^-bits` with true value inside `[mant - err, mant + err] * 2^-bits`.
//! Precision is requested in decimal digits and converted to bits with a guard.

use std::cmp::Ordering;
use std::fmt;

use num_bigint::{BigInt, BigUint, Sign};
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};
use thiserror::Error;

pub const DEFAULT_DIGITS: u32 = 256;
pub const MAX_DIGITS: u32 = 4096;
/// Extra binary digits carried beyond the requested decimal precision.
pub const GUARD_BITS: u32 = 16;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PrecisionError {
    #[error("logarithm of non-positive value")]
    NonPositive,
    #[error("interval too wide to decide at {digits} digits")]
    AmbiguousAtPrecision { digits: u32 },
    #[error("precision cap of {cap} digits reached")]
    Exhausted { cap: u32 },
    #[error("division by an interval containing zero")]
    DivisionByZero,
}

pub fn bits_for_digits(digits: u32) -> u32 {
    ((digits as f64) * std::f64::consts::LOG2_10).ceil() as u32 + GUARD_BITS
}

#[derive(Clone, PartialEq, Eq, Hash)]
pub struct HPReal {
    mant: BigInt,
    err: BigUint,
    bits: u32,
    digits: u32,
}

fn round_shift(x: &BigInt, s: u32) -> BigInt {
    if s == 0 {
        return x.clone();
    }
    let half = BigInt::one() << (s - 1);
    (x + half) >> s
}

fn div_round(n: &BigInt, d: &BigInt) -> BigInt {
    // nearest integer to n/d for d > 0
    let two = BigInt::from(2);
    (n * &two + d).div_floor(&(d * &two))
}

fn ceil_div(n: &BigUint, d: &BigUint) -> BigUint {
    (n + d - BigUint::one()) / d
}

impl HPReal {
    pub fn from_parts(mant: BigInt, err: BigUint, digits: u32) -> Self {
        HPReal { mant, err, bits: bits_for_digits(digits), digits }
    }

    pub fn zero(digits: u32) -> Self {
        Self::from_int(&BigInt::zero(), digits)
    }

    pub fn from_int(n: &BigInt, digits: u32) -> Self {
        let bits = bits_for_digits(digits);
        HPReal { mant: n << bits, err: BigUint::zero(), bits, digits }
    }

    pub fn from_i64(n: i64, digits: u32) -> Self {
        Self::from_int(&BigInt::from(n), digits)
    }

    /// `p/q` rounded to the working precision; `q` must be non-zero.
    pub fn from_ratio(p: &BigInt, q: &BigInt, digits: u32) -> Self {
        assert!(!q.is_zero(), "zero denominator");
        let bits = bits_for_digits(digits);
        let (p, q) = if q.is_negative() { (-p, -q) } else { (p.clone(), q.clone()) };
        let scaled = &p << bits;
        let (quo, rem) = scaled.div_mod_floor(&q);
        let err = if rem.is_zero() { BigUint::zero() } else { BigUint::one() };
        HPReal { mant: quo, err, bits, digits }
    }

    /// Parse a plain decimal literal such as `32.63` or `3.1e86` exactly.
    pub fn from_decimal_str(s: &str, digits: u32) -> Option<Self> {
        let (p, q) = parse_decimal(s)?;
        Some(Self::from_ratio(&p, &q, digits))
    }

    pub fn digits(&self) -> u32 {
        self.digits
    }
    pub fn bits(&self) -> u32 {
        self.bits
    }
    pub fn mantissa(&self) -> &BigInt {
        &self.mant
    }
    pub fn err_ulps(&self) -> &BigUint {
        &self.err
    }

    pub fn is_exact(&self) -> bool {
        self.err.is_zero()
    }

    fn err_int(&self) -> BigInt {
        BigInt::from_biguint(Sign::Plus, self.err.clone())
    }

    /// Lower end of the interval, scaled by `2^bits`.
    pub fn lo_scaled(&self) -> BigInt {
        &self.mant - self.err_int()
    }
    /// Upper end of the interval, scaled by `2^bits`.
    pub fn hi_scaled(&self) -> BigInt {
        &self.mant + self.err_int()
    }

    pub fn to_f64(&self) -> f64 {
        let shift = self.mant.bits() as i64 - 60;
        if shift <= 0 {
            self.mant.to_f64().unwrap() * 2f64.powi(-(self.bits as i32))
        } else {
            let m = (&self.mant >> (shift as u32)).to_f64().unwrap();
            m * 2f64.powf(shift as f64 - self.bits as f64)
        }
    }

    /// Absolute error bound as an f64 (rounded up a little).
    pub fn err_f64(&self) -> f64 {
        let e = self.err.to_f64().unwrap_or(f64::INFINITY);
        e * 2f64.powi(-(self.bits as i32)) * (1.0 + 1e-12)
    }

    /// Re-express at a different precision, widening the error for rounding.
    pub fn with_digits(&self, digits: u32) -> Self {
        let bits = bits_for_digits(digits);
        match bits.cmp(&self.bits) {
            Ordering::Equal => HPReal { digits, ..self.clone() },
            Ordering::Greater => {
                let s = bits - self.bits;
                HPReal { mant: &self.mant << s, err: &self.err << s, bits, digits }
            }
            Ordering::Less => {
                let s = self.bits - bits;
                let mant = round_shift(&self.mant, s);
                let err = ceil_div(&self.err, &(BigUint::one() << s)) + BigUint::one();
                HPReal { mant, err, bits, digits }
            }
        }
    }

    fn aligned(&self, other: &Self) -> (HPReal, HPReal) {
        if self.bits == other.bits {
            (self.clone(), other.clone())
        } else {
            let d = self.digits.min(other.digits);
            (self.with_digits(d), other.with_digits(d))
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        let (a, b) = self.aligned(other);
        HPReal { mant: &a.mant + &b.mant, err: &a.err + &b.err, bits: a.bits, digits: a.digits }
    }

    pub fn sub(&self, other: &Self) -> Self {
        let (a, b) = self.aligned(other);
        HPReal { mant: &a.mant - &b.mant, err: &a.err + &b.err, bits: a.bits, digits: a.digits }
    }

    pub fn neg(&self) -> Self {
        HPReal { mant: -&self.mant, ..self.clone() }
    }

    pub fn abs(&self) -> Self {
        HPReal { mant: self.mant.abs(), ..self.clone() }
    }

    pub fn mul(&self, other: &Self) -> Self {
        let (a, b) = self.aligned(other);
        let prod = &a.mant * &b.mant;
        let ma = a.mant.magnitude();
        let mb = b.mant.magnitude();
        let e = ma * &b.err + mb * &a.err + &a.err * &b.err;
        let s = a.bits;
        let mant = round_shift(&prod, s);
        let err = ceil_div(&e, &(BigUint::one() << s)) + BigUint::one();
        HPReal { mant, err, bits: s, digits: a.digits }
    }

    pub fn mul_int(&self, k: &BigInt) -> Self {
        HPReal {
            mant: &self.mant * k,
            err: &self.err * k.magnitude(),
            bits: self.bits,
            digits: self.digits,
        }
    }

    pub fn div_int(&self, k: &BigInt) -> Self {
        assert!(!k.is_zero(), "division by zero");
        let (m, kk) = if k.is_negative() { (-&self.mant, -k) } else { (self.mant.clone(), k.clone()) };
        let mant = div_round(&m, &kk);
        let err = ceil_div(&self.err, kk.magnitude()) + BigUint::one();
        HPReal { mant, err, bits: self.bits, digits: self.digits }
    }

    pub fn div(&self, other: &Self) -> Result<Self, PrecisionError> {
        let (a, b) = self.aligned(other);
        let mb = b.mant.magnitude();
        if mb <= &b.err {
            return Err(PrecisionError::DivisionByZero);
        }
        let s = a.bits;
        let num = &a.mant << s;
        let (num, den) = if b.mant.is_negative() { (-num, -&b.mant) } else { (num, b.mant.clone()) };
        let q = div_round(&num, &den);
        let gap = mb - &b.err;
        let e = ((&a.err) << s) + (q.magnitude() + BigUint::one()) * &b.err;
        let err = ceil_div(&e, &gap) + BigUint::one();
        Ok(HPReal { mant: q, err, bits: s, digits: a.digits })
    }

    pub fn powi(&self, k: u32) -> Self {
        let mut result = HPReal::from_i64(1, self.digits);
        let mut base = self.clone();
        let mut k = k;
        while k > 0 {
            if k & 1 == 1 {
                result = result.mul(&base);
            }
            k >>= 1;
            if k > 0 {
                base = base.mul(&base);
            }
        }
        result
    }

    /// Add `|e|` (its upper end) to the error bound.
    pub fn widen(&self, e: &HPReal) -> Self {
        let e = e.abs().with_digits(self.digits);
        let extra = e.hi_scaled().magnitude().clone() + BigUint::one();
        HPReal { err: &self.err + extra, ..self.clone() }
    }

    /// Nearest integer to the midpoint.
    pub fn round_mid(&self) -> BigInt {
        round_shift(&self.mant, self.bits)
    }

    /// `x - round(x)`, computed against the midpoint's nearest integer.
    pub fn signed_frac(&self) -> Self {
        let n = self.round_mid();
        HPReal { mant: &self.mant - (n << self.bits), ..self.clone() }
    }

    /// True when the whole interval is strictly above zero.
    pub fn is_positive(&self) -> bool {
        self.lo_scaled().is_positive()
    }
    pub fn is_negative(&self) -> bool {
        self.hi_scaled().is_negative()
    }

    /// Some(ordering) when the intervals are disjoint (or both exact and equal).
    pub fn certified_cmp(&self, other: &Self) -> Option<Ordering> {
        let d = self.sub(other);
        if d.is_positive() {
            Some(Ordering::Greater)
        } else if d.is_negative() {
            Some(Ordering::Less)
        } else if d.mant.is_zero() && d.err.is_zero() {
            Some(Ordering::Equal)
        } else {
            None
        }
    }

    pub fn contains_ratio(&self, p: &BigInt, q: &BigInt) -> bool {
        // lo <= p/q*2^bits <= hi, q > 0
        let (p, q) = if q.is_negative() { (-p, -q) } else { (p.clone(), q.clone()) };
        let target = &p << self.bits;
        &self.lo_scaled() * &q <= target && target <= &self.hi_scaled() * &q
    }

    pub fn contains_f64(&self, x: f64, slack: f64) -> bool {
        let v = self.to_f64();
        (v - x).abs() <= self.err_f64() + slack
    }

    pub fn overlaps(&self, other: &Self) -> bool {
        let (a, b) = self.aligned(other);
        a.lo_scaled() <= b.hi_scaled() && b.lo_scaled() <= a.hi_scaled()
    }

    /// Certified floor; fails when the interval contains an integer boundary in its interior.
    pub fn floor(&self) -> Result<BigInt, PrecisionError> {
        let lo = self.lo_scaled() >> self.bits;
        let hi = self.hi_scaled() >> self.bits;
        if lo == hi {
            Ok(lo)
        } else {
            Err(PrecisionError::AmbiguousAtPrecision { digits: self.digits })
        }
    }

    /// Smallest `n` with the whole interval `<= n`.
    pub fn ceil_upper(&self) -> BigInt {
        let hi = self.hi_scaled();
        let one = BigInt::one() << self.bits;
        let (q, r) = hi.div_mod_floor(&one);
        if r.is_zero() {
            q
        } else {
            q + 1
        }
    }

    /// Largest `n` with the whole interval `>= n`.
    pub fn floor_lower(&self) -> BigInt {
        self.lo_scaled() >> self.bits
    }

    /// Midpoint with `n` digits after the point, truncated towards zero.
    pub fn to_decimal(&self, n: usize) -> String {
        let ten_n = num_traits::pow(BigInt::from(10), n);
        let neg = self.mant.is_negative();
        let s = ((self.mant.magnitude() * ten_n.magnitude()) >> self.bits).to_string();
        let s = if s.len() <= n { format!("{}{}", "0".repeat(n + 1 - s.len()), s) } else { s };
        let (ip, fp) = s.split_at(s.len() - n);
        let sign = if neg { "-" } else { "" };
        if n == 0 {
            format!("{sign}{ip}")
        } else {
            format!("{sign}{ip}.{fp}")
        }
    }

    /// Lower bound of the interval in scientific notation, truncated to `sig` significant figures.
    pub fn lower_sig(&self, sig: usize) -> String {
        sci_trunc(&self.lo_scaled(), self.bits, sig, false)
    }

    /// Upper bound in scientific notation, rounded up to `sig` significant figures.
    pub fn upper_sig(&self, sig: usize) -> String {
        sci_trunc(&self.hi_scaled(), self.bits, sig, true)
    }
}

fn sci_trunc(scaled: &BigInt, bits: u32, sig: usize, up: bool) -> String {
    if scaled.is_zero() {
        return "0".into();
    }
    let neg = scaled.is_negative();
    let mag = BigInt::from_biguint(Sign::Plus, scaled.magnitude().clone());
    // find e with 10^(sig-1) <= mag*10^k/2^bits < 10^sig
    let approx = HPReal { mant: mag.clone(), err: BigUint::zero(), bits, digits: 0 }.to_f64();
    let mut e = approx.log10().floor() as i64;
    let ten = BigInt::from(10);
    let one = BigInt::one() << bits;
    for _ in 0..4 {
        let k = sig as i64 - 1 - e;
        let (num, den) = if k >= 0 {
            (&mag * num_traits::pow(ten.clone(), k as usize), one.clone())
        } else {
            (mag.clone(), &one * num_traits::pow(ten.clone(), (-k) as usize))
        };
        let (q, r) = num.div_mod_floor(&den);
        let lo = num_traits::pow(ten.clone(), sig - 1);
        let hi = num_traits::pow(ten.clone(), sig);
        if q < lo {
            e -= 1;
            continue;
        }
        if q >= hi {
            e += 1;
            continue;
        }
        // truncate towards zero unless rounding away is requested on the magnitude side
        let away = (up && !neg) || (!up && neg);
        let q = if away && !r.is_zero() { q + 1 } else { q };
        let digits = q.to_string();
        let (d0, rest) = digits.split_at(1);
        let sign = if neg { "-" } else { "" };
        let mant = if rest.is_empty() { d0.to_string() } else { format!("{d0}.{rest}") };
        return if e == 0 { format!("{sign}{mant}") } else { format!("{sign}{mant}e{e}") };
    }
    format!("{approx:e}")
}

impl fmt::Debug for HPReal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "HPReal({} ± {:.3e})", self.to_decimal(30), self.err_f64())
    }
}

impl fmt::Display for HPReal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let n = f.precision().unwrap_or(20);
        f.write_str(&self.to_decimal(n))
    }
}

/// Parse `123`, `-4.5`, `3.1e86`, `1.6E-3` into an exact ratio.
pub fn parse_decimal(s: &str) -> Option<(BigInt, BigInt)> {
    let s = s.trim();
    let (mant, exp) = match s.find(['e', 'E']) {
        Some(i) => (&s[..i], s[i + 1..].parse::<i64>().ok()?),
        None => (s, 0),
    };
    let neg = mant.starts_with('-');
    let mant = mant.trim_start_matches(['-', '+']);
    let (ip, fp) = match mant.find('.') {
        Some(i) => (&mant[..i], &mant[i + 1..]),
        None => (mant, ""),
    };
    if ip.is_empty() && fp.is_empty() {
        return None;
    }
    if !ip.chars().chain(fp.chars()).all(|c| c.is_ascii_digit()) {
        return None;
    }
    let digits: BigInt = format!("{ip}{fp}0").parse::<BigInt>().ok()? / 10;
    let e = exp - fp.len() as i64;
    let ten = BigInt::from(10);
    let (mut p, q) = if e >= 0 {
        (digits * num_traits::pow(ten, e as usize), BigInt::one())
    } else {
        (digits, num_traits::pow(ten, (-e) as usize))
    };
    if neg {
        p = -p;
    }
    Some((p, q))
}

/// `2 * atanh(num/den)` at `w` bits for exactly given `|num/den| < 1/2`; returns (mant, err) at `w` bits.
fn atanh2_ratio(num: &BigInt, den: &BigInt, w: u32) -> (BigInt, BigUint) {
    debug_assert!(den.is_positive());
    let z = div_round(&(num << w), den);
    if z.is_zero() {
        return (BigInt::zero(), BigUint::one() * 2u32);
    }
    let z2 = round_shift(&(&z * &z), w);
    let mut p = z.clone();
    let mut sum = z.clone();
    let mut terms: u64 = 1;
    let mut j: u64 = 1;
    loop {
        p = round_shift(&(&p * &z2), w);
        if p.is_zero() {
            break;
        }
        let t = &p / BigInt::from(2 * j + 1);
        sum += &t;
        terms += 1;
        j += 1;
        if p.magnitude().bits() <= 1 {
            // remaining tail bounded by a geometric series of ratio < 1/4
            break;
        }
    }
    // each term carries at most 6 ulps of error; tail bounded by 2 ulps
    let err = BigUint::from(2 * (6 * terms + 4));
    (sum << 1, err)
}

fn ln2_raw(w: u32) -> (BigInt, BigUint) {
    atanh2_ratio(&BigInt::one(), &BigInt::from(3), w)
}

/// ln(p/q) for positive integers at working precision `digits`.
pub fn hp_ln_ratio(p: &BigInt, q: &BigInt, digits: u32) -> Result<HPReal, PrecisionError> {
    if !(p.is_positive() && q.is_positive()) {
        return Err(PrecisionError::NonPositive);
    }
    let bits = bits_for_digits(digits);
    let w = bits + 24;
    // p/q = 2^e * y with y in [3/4, 3/2)
    let mut e = p.bits() as i64 - q.bits() as i64;
    let (mut pn, mut qn) = (p.clone(), q.clone());
    if e >= 0 {
        qn <<= e as u32;
    } else {
        pn <<= (-e) as u32;
    }
    // now pn/qn in (1/2, 2)
    if &pn * 4 < &qn * 3 {
        pn <<= 1u32;
        e -= 1;
    } else if &pn * 2 >= &qn * 3 {
        qn <<= 1u32;
        e += 1;
    }
    let (s, serr) = atanh2_ratio(&(&pn - &qn), &(&pn + &qn), w);
    let (mut mant, mut err) = (s, serr);
    if e != 0 {
        let (l2, l2err) = ln2_raw(w);
        mant += &l2 * BigInt::from(e);
        err += l2err * BigUint::from(e.unsigned_abs());
    }
    let out = HPReal { mant, err, bits: w, digits };
    Ok(out.with_digits(digits))
}

/// ln of an exact positive rational.
pub fn hp_ln(p: &BigInt, q: &BigInt, digits: u32) -> Result<HPReal, PrecisionError> {
    hp_ln_ratio(p, q, digits)
}

pub fn hp_ln_int(n: u64, digits: u32) -> HPReal {
    hp_ln_ratio(&BigInt::from(n), &BigInt::one(), digits).expect("positive")
}

/// ln(1 + num/den) for `den > 0`, `den + num > 0`; fast when `num/den` is tiny.
pub fn hp_ln1p_ratio(num: &BigInt, den: &BigInt, digits: u32) -> Result<HPReal, PrecisionError> {
    if !den.is_positive() || !(den + num).is_positive() {
        return Err(PrecisionError::NonPositive);
    }
    // z = num / (2 den + num)
    let zd: BigInt = den * 2 + num;
    if num.magnitude() * 2u32 >= *zd.magnitude() {
        return hp_ln_ratio(&(den + num), den, digits);
    }
    let bits = bits_for_digits(digits);
    let w = bits + 24;
    let (mant, err) = atanh2_ratio(num, &zd, w);
    Ok(HPReal { mant, err, bits: w, digits }.with_digits(digits))
}

/// ln of a positive interval.
pub fn hp_ln_real(x: &HPReal) -> Result<HPReal, PrecisionError> {
    let lo = x.lo_scaled();
    if !lo.is_positive() {
        return Err(PrecisionError::AmbiguousAtPrecision { digits: x.digits });
    }
    let c = hp_ln_ratio(&x.mant, &(BigInt::one() << x.bits), x.digits)?;
    // |ln(x) - ln(m)| <= err / (m - err)
    let bump = HPReal::from_ratio(&x.err_int(), &lo, x.digits).with_digits(c.digits);
    let e = bump.hi_scaled().magnitude() + BigUint::one();
    Ok(HPReal { err: &c.err + e, ..c })
}

/// `floor(sqrt(n * 4^bits))` as a fixed-point value: sqrt of a non-negative integer.
pub fn hp_sqrt_int(n: u64, digits: u32) -> HPReal {
    let bits = bits_for_digits(digits);
    let big = BigUint::from(n) << (2 * bits);
    let r = big.sqrt();
    let exact = &r * &r == big;
    HPReal {
        mant: BigInt::from_biguint(Sign::Plus, r),
        err: if exact { BigUint::zero() } else { BigUint::one() },
        bits,
        digits,
    }
}

/// (1 + sqrt 5) / 2.
pub fn golden_ratio(digits: u32) -> HPReal {
    let bits = bits_for_digits(digits);
    let big = BigUint::from(5u32) << (2 * bits);
    let r = big.sqrt();
    // sqrt5 in [r, r+1); alpha = (2^bits + sqrt5)/2
    let num = (BigUint::one() << bits) + r;
    let mant = BigInt::from_biguint(Sign::Plus, num >> 1u32);
    HPReal { mant, err: BigUint::one(), bits, digits }
}

pub fn ln_golden(digits: u32) -> HPReal {
    hp_ln_real(&golden_ratio(digits + 4)).expect("alpha > 1").with_digits(digits)
}

/// `||x||` certified; the interval must not straddle a half-integer.
pub fn nearest_int_distance(x: &HPReal) -> Result<HPReal, PrecisionError> {
    let one = BigInt::one() << x.bits;
    let half = BigInt::one() << (x.bits - 1);
    let quarter = &one >> 2u32;
    if x.err_int() >= quarter {
        return Err(PrecisionError::AmbiguousAtPrecision { digits: x.digits });
    }
    // distance of approx to nearest integer along with the integer
    let shifted: BigInt = &x.mant + &half;
    let (n, _) = shifted.div_mod_floor(&one);
    let rem = &x.mant - &n * &one; // in [-half, half)
    let lo = x.lo_scaled();
    let hi = x.hi_scaled();
    let h_lo = &n * &one - &half;
    let h_hi = &n * &one + &half;
    if x.err.is_zero() {
        return Ok(HPReal { mant: rem.abs(), err: BigUint::zero(), bits: x.bits, digits: x.digits });
    }
    if (lo < h_lo && h_lo < hi) || (lo < h_hi && h_hi < hi) {
        return Err(PrecisionError::AmbiguousAtPrecision { digits: x.digits });
    }
    let lo_r = &lo - &n * &one;
    let hi_r = &hi - &n * &one;
    // the map t -> |t| on [lo_r, hi_r]
    let (a, b) = if lo_r.is_negative() && hi_r.is_positive() {
        (BigInt::zero(), lo_r.abs().max(hi_r.abs()))
    } else {
        let (p, q) = (lo_r.abs(), hi_r.abs());
        if p <= q { (p, q) } else { (q, p) }
    };
    let mid = (&a + &b) >> 1u32;
    let err = (&b - &mid).max(&mid - &a);
    Ok(HPReal { mant: mid, err: err.magnitude().clone(), bits: x.bits, digits: x.digits })
}

/// Evaluate a fallible computation at increasing precision until it succeeds.
pub fn with_escalation<T>(
    start: u32,
    mut f: impl FnMut(u32) -> Result<T, PrecisionError>,
) -> Result<T, PrecisionError> {
    let mut d = start.max(16);
    loop {
        match f(d) {
            Ok(v) => return Ok(v),
            Err(PrecisionError::AmbiguousAtPrecision { .. }) => {
                if d >= MAX_DIGITS {
                    return Err(PrecisionError::Exhausted { cap: MAX_DIGITS });
                }
                d = (d * 2).min(MAX_DIGITS);
            }
            Err(e) => return Err(e),
        }
    }
}

/// Working precision from the environment, if set.
pub fn env_digits() -> Option<u32> {
    std::env::var("FIBREP_PRECISION").ok().and_then(|v| v.parse().ok())
}
