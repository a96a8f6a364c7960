//! Repdigit blocks and three-block concatenations in base `b`.

use std::fmt;

use num_bigint::BigUint;
use num_integer::Integer;
use num_traits::{One, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const MAX_BASE: u32 = 36;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PatternError {
    #[error("base {0} outside 2..=36")]
    Base(u32),
    #[error("digit {d} not below base {b}")]
    Digit { d: u32, b: u32 },
    #[error("block length must be at least 1")]
    Length,
    #[error("leading digit must be non-zero")]
    LeadingZero,
    #[error("expected six comma-separated integers d1,l1,d2,l2,d3,l3")]
    Parse,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Block {
    pub digit: u32,
    pub len: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Pattern {
    pub base: u32,
    pub blocks: [Block; 3],
}

/// Ordering constraint on block lengths.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LengthOrder {
    #[default]
    Free,
    /// `l1 <= l2 <= l3`
    Nondecreasing,
}

impl LengthOrder {
    pub fn admits(&self, p: &Pattern) -> bool {
        match self {
            LengthOrder::Free => true,
            LengthOrder::Nondecreasing => {
                p.blocks[0].len <= p.blocks[1].len && p.blocks[1].len <= p.blocks[2].len
            }
        }
    }
}

impl Pattern {
    pub fn new(base: u32, blocks: [(u32, u32); 3]) -> Result<Self, PatternError> {
        if !(2..=MAX_BASE).contains(&base) {
            return Err(PatternError::Base(base));
        }
        for &(d, l) in &blocks {
            if d >= base {
                return Err(PatternError::Digit { d, b: base });
            }
            if l == 0 {
                return Err(PatternError::Length);
            }
        }
        if blocks[0].0 == 0 {
            return Err(PatternError::LeadingZero);
        }
        let b = |i: usize| Block { digit: blocks[i].0, len: blocks[i].1 };
        Ok(Pattern { base, blocks: [b(0), b(1), b(2)] })
    }

    /// Parse `d1,l1,d2,l2,d3,l3`.
    pub fn parse(base: u32, s: &str) -> Result<Self, PatternError> {
        let v: Vec<u32> = s
            .split(',')
            .map(|t| t.trim().parse::<u32>())
            .collect::<Result<_, _>>()
            .map_err(|_| PatternError::Parse)?;
        if v.len() != 6 {
            return Err(PatternError::Parse);
        }
        Pattern::new(base, [(v[0], v[1]), (v[2], v[3]), (v[4], v[5])])
    }

    pub fn total_len(&self) -> u32 {
        self.blocks.iter().map(|b| b.len).sum()
    }

    /// `(d1, l1, d2, l2, d3, l3)`
    pub fn tuple(&self) -> [u32; 6] {
        let [a, b, c] = self.blocks;
        [a.digit, a.len, b.digit, b.len, c.digit, c.len]
    }

    pub fn value(&self) -> BigUint {
        pattern_value(self)
    }

    pub fn render(&self) -> String {
        let mut s = String::with_capacity(self.total_len() as usize);
        for b in &self.blocks {
            let c = std::char::from_digit(b.digit, self.base).unwrap();
            for _ in 0..b.len {
                s.push(c);
            }
        }
        s
    }
}

impl fmt::Display for Pattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}_{}", self.render(), self.base)
    }
}

impl Serialize for Pattern {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        use serde::ser::SerializeStruct;
        let [d1, l1, d2, l2, d3, l3] = self.tuple();
        let mut st = s.serialize_struct("Pattern", 6)?;
        st.serialize_field("d1", &d1)?;
        st.serialize_field("l1", &l1)?;
        st.serialize_field("d2", &d2)?;
        st.serialize_field("l2", &l2)?;
        st.serialize_field("d3", &d3)?;
        st.serialize_field("l3", &l3)?;
        st.end()
    }
}

pub fn block_value(d: u32, len: u32, b: u32) -> BigUint {
    let bl = num_traits::pow(BigUint::from(b), len as usize);
    BigUint::from(d) * (bl - BigUint::one()) / BigUint::from(b - 1)
}

/// Positional sum of the three blocks.
pub fn pattern_value(p: &Pattern) -> BigUint {
    let b = BigUint::from(p.base);
    let [x, y, z] = p.blocks;
    let v1 = block_value(x.digit, x.len, p.base);
    let v2 = block_value(y.digit, y.len, p.base);
    let v3 = block_value(z.digit, z.len, p.base);
    v1 * num_traits::pow(b.clone(), (y.len + z.len) as usize) + v2 * num_traits::pow(b, z.len as usize) + v3
}

/// Closed form `(d1 b^L - (d1-d2) b^(l2+l3) - (d2-d3) b^l3 - d3) / (b-1)` evaluated over signed integers.
pub fn pattern_value_closed(p: &Pattern) -> BigUint {
    use num_bigint::BigInt;
    let b = BigInt::from(p.base);
    let [x, y, z] = p.blocks;
    let (d1, d2, d3) = (BigInt::from(x.digit), BigInt::from(y.digit), BigInt::from(z.digit));
    let pw = |e: u32| num_traits::pow(b.clone(), e as usize);
    let num = &d1 * pw(x.len + y.len + z.len) - (&d1 - &d2) * pw(y.len + z.len) - (&d2 - &d3) * pw(z.len) - &d3;
    let (q, r) = num.div_rem(&(b - 1));
    assert!(r.is_zero());
    q.to_biguint().expect("pattern value is positive")
}

pub fn digits_of(s: &BigUint, b: u32) -> Vec<u32> {
    assert!(b >= 2);
    if s.is_zero() {
        return vec![0];
    }
    let mut v: Vec<u32> = s.to_radix_le(b).into_iter().map(u32::from).collect();
    v.reverse();
    v
}

pub fn digits_of_u128(mut s: u128, b: u32, out: &mut Vec<u8>) {
    out.clear();
    if s == 0 {
        out.push(0);
        return;
    }
    let bb = b as u128;
    while s > 0 {
        out.push((s % bb) as u8);
        s /= bb;
    }
    out.reverse();
}

/// Maximal runs `(digit, length)` of a digit string.
pub fn runs(digits: &[u8]) -> Vec<(u8, u32)> {
    let mut r: Vec<(u8, u32)> = Vec::new();
    for &d in digits {
        match r.last_mut() {
            Some((x, n)) if *x == d => *n += 1,
            _ => r.push((d, 1)),
        }
    }
    r
}

/// All three-block patterns from a run decomposition that has at most three runs.
pub fn patterns_from_runs(b: u32, rs: &[(u8, u32)], out: &mut Vec<Pattern>) {
    out.clear();
    let total: u32 = rs.iter().map(|r| r.1).sum();
    if rs.len() > 3 || total < 3 || rs[0].0 == 0 {
        return;
    }
    // cut positions i < j in 1..total; blocks [0,i), [i,j), [j,total) must each lie inside one run
    let mut starts = Vec::with_capacity(rs.len() + 1);
    let mut acc = 0;
    for r in rs {
        starts.push(acc);
        acc += r.1;
    }
    starts.push(acc);
    let run_of = |pos: u32| -> usize { (0..rs.len()).rev().find(|&k| starts[k] <= pos).unwrap() };
    for i in 1..total - 1 {
        for j in i + 1..total {
            let a = run_of(0);
            let ok1 = run_of(i - 1) == a;
            let r2 = run_of(i);
            let ok2 = run_of(j - 1) == r2;
            let r3 = run_of(j);
            let ok3 = run_of(total - 1) == r3;
            if ok1 && ok2 && ok3 {
                let d = |k: usize| rs[k].0 as u32;
                out.push(Pattern {
                    base: b,
                    blocks: [
                        Block { digit: d(a), len: i },
                        Block { digit: d(r2), len: j - i },
                        Block { digit: d(r3), len: total - j },
                    ],
                });
            }
        }
    }
}

/// Every way to read `s` in base `b` as three constant non-empty blocks.
pub fn decompose(s: &BigUint, b: u32) -> Vec<Pattern> {
    let ds: Vec<u8> = digits_of(s, b).into_iter().map(|d| d as u8).collect();
    let rs = runs(&ds);
    if rs.len() > 3 {
        return Vec::new();
    }
    let mut out = Vec::new();
    patterns_from_runs(b, &rs, &mut out);
    out
}

pub fn decompose_u128(s: u128, b: u32) -> Vec<Pattern> {
    let mut ds = Vec::new();
    digits_of_u128(s, b, &mut ds);
    let rs = runs(&ds);
    let mut out = Vec::new();
    if rs.len() <= 3 {
        patterns_from_runs(b, &rs, &mut out);
    }
    out
}

/// Value of a pattern if it fits in a `u128`.
pub fn pattern_value_u128(p: &Pattern) -> Option<u128> {
    let b = p.base as u128;
    let mut v: u128 = 0;
    for blk in &p.blocks {
        for _ in 0..blk.len {
            v = v.checked_mul(b)?.checked_add(blk.digit as u128)?;
        }
    }
    Some(v)
}

pub fn to_u128(s: &BigUint) -> Option<u128> {
    s.to_u128()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn pat(b: u32, t: [(u32, u32); 3]) -> Pattern {
        Pattern::new(b, t).unwrap()
    }

    #[test]
    fn block_values() {
        assert_eq!(block_value(1, 1, 2), BigUint::from(1u32));
        assert_eq!(block_value(3, 10, 4), BigUint::from(1048575u32));
        assert_eq!(block_value(7, 2, 10), BigUint::from(77u32));
    }

    #[test]
    fn pattern_values() {
        assert_eq!(pat(4, [(3, 10), (1, 2), (2, 2)]).value(), BigUint::from(268435290u64));
        assert_eq!(pat(2, [(1, 1), (1, 1), (1, 1)]).value(), BigUint::from(7u32));
        assert_eq!(pat(3, [(1, 1), (0, 2), (2, 9)]).value(), BigUint::from(196829u32));
        assert_eq!(pat(3, [(1, 1), (0, 2), (2, 9)]).render(), "100222222222");
    }

    #[test]
    fn digit_strings() {
        assert_eq!(digits_of(&BigUint::from(7u32), 2), vec![1, 1, 1]);
        assert_eq!(digits_of(&BigUint::from(28679u32), 2), vec![1, 1, 1, 0, 0, 0, 0, 0, 0, 0, 0, 0, 1, 1, 1]);
        assert_eq!(digits_of(&BigUint::from(17711u32), 10), vec![1, 7, 7, 1, 1]);
    }

    #[test]
    fn decompositions() {
        let d = decompose(&BigUint::from(7u32), 2);
        assert_eq!(d, vec![pat(2, [(1, 1), (1, 1), (1, 1)])]);
        assert!(decompose(&BigUint::from(335522u32), 10).contains(&pat(10, [(3, 2), (5, 2), (2, 2)])));
        assert!(decompose(&BigUint::from(268435290u64), 4).contains(&pat(4, [(3, 10), (1, 2), (2, 2)])));
        assert!(decompose(&BigUint::from(1234u32), 10).is_empty());
        assert!(decompose(&BigUint::from(55u32), 10).is_empty());
        // 1111 in base 10 splits as 1|1|11, 1|11|1, 11|1|1
        assert_eq!(decompose(&BigUint::from(1111u32), 10).len(), 3);
    }

    #[test]
    fn validation() {
        assert_eq!(Pattern::new(2, [(0, 1), (1, 1), (1, 1)]), Err(PatternError::LeadingZero));
        assert_eq!(Pattern::new(4, [(4, 1), (1, 1), (1, 1)]), Err(PatternError::Digit { d: 4, b: 4 }));
        assert_eq!(Pattern::new(4, [(1, 0), (1, 1), (1, 1)]), Err(PatternError::Length));
        assert_eq!(Pattern::new(1, [(1, 1), (1, 1), (1, 1)]), Err(PatternError::Base(1)));
        assert_eq!(Pattern::parse(4, "3,10,1,2,2,2").unwrap(), pat(4, [(3, 10), (1, 2), (2, 2)]));
        assert!(Pattern::parse(4, "3,10,1").is_err());
    }

    fn arb_pattern() -> impl Strategy<Value = Pattern> {
        (2u32..=36).prop_flat_map(|b| {
            (Just(b), 1..b, 1u32..30, 0..b, 1u32..30, 0..b, 1u32..30)
                .prop_map(|(b, d1, l1, d2, l2, d3, l3)| Pattern::new(b, [(d1, l1), (d2, l2), (d3, l3)]).unwrap())
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(2000))]

        #[test]
        fn closed_form_matches(p in arb_pattern()) {
            prop_assert_eq!(pattern_value(&p), pattern_value_closed(&p));
        }

        #[test]
        fn round_trip(p in arb_pattern()) {
            let v = pattern_value(&p);
            let ds = decompose(&v, p.base);
            prop_assert!(ds.contains(&p));
            let digits = digits_of(&v, p.base);
            let s: String = digits.iter().map(|&d| std::char::from_digit(d, p.base).unwrap()).collect();
            let l = digits.len() as u32;
            prop_assert!(ds.len() as u32 <= (l - 1) * (l - 2) / 2);
            for q in &ds {
                prop_assert_eq!(&q.render(), &s);
            }
        }

        #[test]
        fn u128_paths_agree(p in arb_pattern()) {
            if let Some(v) = pattern_value_u128(&p) {
                prop_assert_eq!(BigUint::from(v), pattern_value(&p));
                prop_assert_eq!(decompose_u128(v, p.base), decompose(&BigUint::from(v), p.base));
            }
        }
    }
}
