//! Fibonacci numbers, index triples and the Binet bracket `alpha^(n-2) < F_n < alpha^(n-1)`.

use std::sync::OnceLock;

use num_bigint::{BigInt, BigUint};
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::precision::{golden_ratio, HPReal, PrecisionError};

/// Largest index whose Fibonacci number fits in a `u128`.
pub const U128_MAX_INDEX: u32 = 186;
const TABLE_LEN: usize = 301;

fn table() -> &'static [BigUint] {
    static T: OnceLock<Vec<BigUint>> = OnceLock::new();
    T.get_or_init(|| {
        let mut v = vec![BigUint::zero(), BigUint::one()];
        while v.len() < TABLE_LEN {
            let n = v.len();
            let next = &v[n - 1] + &v[n - 2];
            v.push(next);
        }
        v
    })
}

fn u128_table() -> &'static [u128] {
    static T: OnceLock<Vec<u128>> = OnceLock::new();
    T.get_or_init(|| {
        let mut v = vec![0u128, 1];
        for n in 2..=U128_MAX_INDEX as usize {
            v.push(v[n - 1] + v[n - 2]);
        }
        v
    })
}

/// (F_n, F_{n+1}) by fast doubling.
fn fib_pair(n: u64) -> (BigUint, BigUint) {
    if n == 0 {
        return (BigUint::zero(), BigUint::one());
    }
    let (a, b) = fib_pair(n / 2);
    // F_2k = F_k (2 F_{k+1} - F_k), F_2k+1 = F_k^2 + F_{k+1}^2
    let c = &a * (&b * 2u32 - &a);
    let d = &a * &a + &b * &b;
    if n.is_multiple_of(2) {
        (c, d)
    } else {
        let e = &c + &d;
        (d, e)
    }
}

pub fn fib(n: u64) -> BigUint {
    if (n as usize) < TABLE_LEN {
        table()[n as usize].clone()
    } else {
        fib_pair(n).0
    }
}

/// Fast doubling without the memo table.
pub fn fib_doubling(n: u64) -> BigUint {
    fib_pair(n).0
}

pub fn fib_u128(n: u32) -> Option<u128> {
    u128_table().get(n as usize).copied()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct FibTriple {
    pub n1: u32,
    pub n2: u32,
    pub n3: u32,
}

impl FibTriple {
    /// Build a triple, rejecting anything not ordered `n1 >= n2 >= n3`.
    pub fn new(n1: u32, n2: u32, n3: u32) -> Option<Self> {
        (n1 >= n2 && n2 >= n3).then_some(FibTriple { n1, n2, n3 })
    }

    /// Sort arbitrary indices into normal order.
    pub fn sorted(a: u32, b: u32, c: u32) -> Self {
        let mut v = [a, b, c];
        v.sort_unstable_by(|x, y| y.cmp(x));
        FibTriple { n1: v[0], n2: v[1], n3: v[2] }
    }

    pub fn as_array(&self) -> [u32; 3] {
        [self.n1, self.n2, self.n3]
    }
}

pub fn fib_sum(t: &FibTriple) -> BigUint {
    fib(t.n1 as u64) + fib(t.n2 as u64) + fib(t.n3 as u64)
}

pub fn fib_sum_u128(t: &FibTriple) -> Option<u128> {
    Some(fib_u128(t.n1)? + fib_u128(t.n2)? + fib_u128(t.n3)?)
}

/// Checks `alpha^(n-2) < F_n < alpha^(n-1)` with certified intervals. Defined for `n >= 3`.
pub fn binet_bounds_hold(n: u32) -> Result<bool, PrecisionError> {
    assert!(n >= 3, "the bracket fails for n < 3");
    bracket(n)
}

fn bracket(n: u32) -> Result<bool, PrecisionError> {
    let digits = 30 + n / 4;
    let a = golden_ratio(digits);
    let f = HPReal::from_int(&BigInt::from(fib(n as u64)), digits);
    let lo = a.powi(n - 2);
    let hi = lo.mul(&a);
    let below = f.certified_cmp(&lo).ok_or(PrecisionError::AmbiguousAtPrecision { digits })?;
    let above = hi.certified_cmp(&f).ok_or(PrecisionError::AmbiguousAtPrecision { digits })?;
    Ok(below.is_gt() && above.is_gt())
}
