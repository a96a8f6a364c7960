//! Reduction over a parameter family that shares one `tau`.
//!
//! Every member has `mu = mu' + s tau - lambda` where `s` is the exponent of `b` pulled out of
//! the numerator, `mu' = c_b + log(r)/log(alpha)` depends on the digits and block lengths, and
//! `lambda = log(D)/log(alpha)`. Since `q s tau = s p + s delta` with `delta = q tau - p`,
//! `||mu q||` only needs `frac(q mu')`, `frac(q lambda)` and `s delta`. Those fractions are kept
//! as 64-bit turns, so scanning a pair costs one subtraction.
//!
//! Members are grouped into classes when the numerator tail is far below the working
//! resolution; the tail enters as an explicit error term. Small families take, for each
//! member, the first convergent that works. Large ones fix a single deep convergent
//! and handle the few members whose turns land close together one by one.

use std::cmp::Ordering;
use std::collections::{BTreeMap, HashMap};
use std::sync::{Arc, Mutex, OnceLock};

use num_bigint::BigInt;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::contfrac::{cf_expand_with, CFExpansion, CfError, RealProducer, Tau};
use crate::precision::{hp_ln1p_ratio, hp_ln_int, hp_ln_real, ln_golden, nearest_int_distance, HPReal};

use super::{ceil_bound, digits_for, inv_golden, Coef, LogBase, ReductionError, DEFAULT_BUDGET};

/// Pair count up to which every pair is scanned individually.
pub const EXACT_PAIRS: u128 = 3_000_000_000;
/// Expected number of close pairs handled one by one in shell mode.
const SHELL_TARGET: f64 = 2.0e4;
const WINDOW: usize = 6;
const LAMBDA_DIGITS: u32 = 160;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum XKind {
    X1,
    X2,
    X3,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum YKind {
    Y0,
    Y1,
    Y2,
}

/// Numerator parameters: `d1` in `1..b`, `d2, d3` in `0..b`, `1 <= l1 <= l1_max`, `1 <= l2 <= l2_max`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct XRange {
    pub kind: XKind,
    pub l1_max: u32,
    pub l2_max: u32,
    /// Only `l1 <= l2`.
    pub l1_le_l2: bool,
    pub d1_only: Option<u32>,
}

impl XRange {
    pub fn x1() -> Self {
        XRange { kind: XKind::X1, l1_max: 0, l2_max: 0, l1_le_l2: false, d1_only: None }
    }
    pub fn x2(l1_max: u32) -> Self {
        XRange { kind: XKind::X2, l1_max, l2_max: 0, l1_le_l2: false, d1_only: None }
    }
    pub fn x3(l1_max: u32, l2_max: u32, l1_le_l2: bool) -> Self {
        XRange { kind: XKind::X3, l1_max, l2_max, l1_le_l2, d1_only: None }
    }
    pub fn with_d1(mut self, d1: u32) -> Self {
        self.d1_only = Some(d1);
        self
    }
}

/// Denominator parameters: `0 <= k <= k_max`, `k <= m <= m_max`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct YRange {
    pub kind: YKind,
    pub k_max: u32,
    pub m_max: u32,
}

impl YRange {
    pub fn y0() -> Self {
        YRange { kind: YKind::Y0, k_max: 0, m_max: 0 }
    }
    pub fn y1(k_max: u32) -> Self {
        YRange { kind: YKind::Y1, k_max, m_max: 0 }
    }
    pub fn y2(k_max: u32, m_max: u32) -> Self {
        YRange { kind: YKind::Y2, k_max, m_max }
    }
}

/// One `(A, B)` choice; the resulting bound is `w_max + offset` for `variable`.
#[derive(Debug, Clone, Serialize)]
pub struct Target {
    pub variable: String,
    pub a: Coef,
    pub base: LogBase,
    pub offset: i64,
}

/// How a member picks among the convergents that certify it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Selection {
    /// The first convergent past `6M` with positive epsilon.
    #[default]
    First,
    /// The one with the smallest `q / eps`.
    Best,
}

#[derive(Debug, Clone)]
pub struct FamilySpec {
    pub base: u32,
    pub label: String,
    pub x: XRange,
    pub y: YRange,
    pub targets: Vec<Target>,
    pub m: BigInt,
    pub budget: usize,
    pub selection: Selection,
}

impl FamilySpec {
    pub fn new(base: u32, label: &str, x: XRange, y: YRange, targets: Vec<Target>, m: BigInt) -> Self {
        FamilySpec { base, label: label.to_string(), x, y, targets, m, budget: DEFAULT_BUDGET, selection: Selection::default() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Exact,
    Shell,
}

#[derive(Debug, Clone, Serialize)]
pub struct TargetBound {
    pub variable: String,
    pub a: String,
    pub base: String,
    pub w_max: i64,
    pub bound: i64,
    /// Convergent index behind the maximum; `None` when it came from the fallback.
    pub index: Option<usize>,
}

#[derive(Debug, Clone, Serialize)]
pub struct FamilyReport {
    pub base: u32,
    pub label: String,
    pub x: XRange,
    pub y: YRange,
    pub m: String,
    pub members: String,
    pub classes: usize,
    pub y_items: usize,
    pub pairs: String,
    pub t0: usize,
    pub max_index: usize,
    pub mode: Mode,
    /// Smallest certified epsilon, three significant figures rounded down.
    pub min_eps: String,
    pub min_eps_f64: f64,
    pub individual: usize,
    pub fallback: usize,
    pub unresolved: usize,
    pub targets: Vec<TargetBound>,
}

impl FamilyReport {
    pub fn bound(&self, variable: &str) -> Option<i64> {
        self.targets.iter().filter(|t| t.variable == variable).map(|t| t.bound).max()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum Level {
    Full,
    Mid,
    Top,
}

#[derive(Debug, Clone)]
struct XClass {
    d1: u32,
    d2: u32,
    d3: u32,
    l1: u32,
    l2: u32,
    level: Level,
    s_lo: u32,
    s_hi: u32,
    mult: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
struct YItem {
    terms: u8,
    k: u32,
    m: u32,
}

/// Positive rational `num / 2^shift`.
#[derive(Debug, Clone)]
struct Eps {
    num: BigInt,
    shift: u32,
}

impl Eps {
    fn cmp(&self, o: &Eps) -> Ordering {
        let a = &self.num << o.shift;
        let b = &o.num << self.shift;
        a.cmp(&b)
    }
    fn log2(&self) -> f64 {
        log2_big(&self.num) - self.shift as f64
    }
    fn to_hp(&self) -> HPReal {
        HPReal::from_ratio(&self.num, &(BigInt::one() << self.shift), 30)
    }
}

/// A certificate: every member it covers has `w < log(A q / eps) / log B`.
#[derive(Debug, Clone)]
struct Witness {
    q: BigInt,
    index: Option<usize>,
    eps: Eps,
}

fn x_classes(b: u32, xr: &XRange, s0: Option<u32>) -> Vec<XClass> {
    let d1s: Vec<u32> = match xr.d1_only {
        Some(d) => vec![d],
        None => (1..b).collect(),
    };
    let mut out = Vec::new();
    let full = |d1, d2, d3, l1, l2, s| XClass { d1, d2, d3, l1, l2, level: Level::Full, s_lo: s, s_hi: s, mult: 1 };
    for &d1 in &d1s {
        match xr.kind {
            XKind::X1 => out.push(full(d1, 0, 0, 0, 0, 0)),
            XKind::X2 => {
                let mut top: Option<XClass> = None;
                for d2 in 0..b {
                    for l1 in 1..=xr.l1_max {
                        match s0 {
                            Some(s0) if l1 >= s0 => absorb(&mut top, d1, l1, l1, 1),
                            _ => out.push(full(d1, d2, 0, l1, 0, l1)),
                        }
                    }
                }
                out.extend(top);
            }
            XKind::X3 => {
                let mut top: Option<XClass> = None;
                for d2 in 0..b {
                    for l1 in 1..=xr.l1_max {
                        let l2_lo = if xr.l1_le_l2 { l1 } else { 1 };
                        if l2_lo > xr.l2_max {
                            continue;
                        }
                        let count = (xr.l2_max - l2_lo + 1) as u64;
                        match s0 {
                            Some(s0) if l1 >= s0 => absorb(&mut top, d1, l1 + l2_lo, l1 + xr.l2_max, b as u64 * count),
                            _ => {
                                let full_hi = match s0 {
                                    Some(s0) => (s0 - 1).saturating_sub(l1).min(xr.l2_max),
                                    None => xr.l2_max,
                                };
                                for l2 in l2_lo..=full_hi {
                                    for d3 in 0..b {
                                        out.push(full(d1, d2, d3, l1, l2, l1 + l2));
                                    }
                                }
                                let mid_lo = l2_lo.max(full_hi + 1);
                                if s0.is_some() && mid_lo <= xr.l2_max {
                                    out.push(XClass {
                                        d1,
                                        d2,
                                        d3: 0,
                                        l1,
                                        l2: mid_lo,
                                        level: Level::Mid,
                                        s_lo: l1 + mid_lo,
                                        s_hi: l1 + xr.l2_max,
                                        mult: b as u64 * (xr.l2_max - mid_lo + 1) as u64,
                                    });
                                }
                            }
                        }
                    }
                }
                out.extend(top);
            }
        }
    }
    out
}

fn absorb(top: &mut Option<XClass>, d1: u32, s_lo: u32, s_hi: u32, mult: u64) {
    match top {
        Some(t) => {
            t.s_lo = t.s_lo.min(s_lo);
            t.s_hi = t.s_hi.max(s_hi);
            t.mult += mult;
        }
        None => {
            *top = Some(XClass { d1, d2: 0, d3: 0, l1: 0, l2: 0, level: Level::Top, s_lo, s_hi, mult });
        }
    }
}

fn y_items(yr: &YRange) -> Vec<YItem> {
    match yr.kind {
        YKind::Y0 => vec![YItem { terms: 0, k: 0, m: 0 }],
        YKind::Y1 => (0..=yr.k_max).map(|k| YItem { terms: 1, k, m: 0 }).collect(),
        YKind::Y2 => (0..=yr.k_max)
            .flat_map(|k| (k..=yr.m_max).map(move |m| YItem { terms: 2, k, m }))
            .collect(),
    }
}

type LambdaCache = Mutex<HashMap<YItem, Arc<HPReal>>>;

fn lambda_cache() -> &'static LambdaCache {
    static C: OnceLock<LambdaCache> = OnceLock::new();
    C.get_or_init(|| Mutex::new(HashMap::new()))
}

fn lambda_fresh(y: &YItem, digits: u32) -> HPReal {
    if y.terms == 0 {
        return HPReal::zero(digits);
    }
    let w = digits + 6;
    let ia = inv_golden(w + 4);
    let mut d = HPReal::from_i64(1, w).add(&ia.powi(y.k).with_digits(w));
    if y.terms == 2 {
        d = d.add(&ia.powi(y.m).with_digits(w));
    }
    let l = hp_ln_real(&d).expect("D >= 1");
    l.div(&ln_golden(w)).expect("log alpha > 0").with_digits(digits)
}

/// `log(D) / log(alpha)`, cached at a fixed high precision.
fn lambda(y: &YItem, digits: u32) -> HPReal {
    if digits > LAMBDA_DIGITS {
        return lambda_fresh(y, digits);
    }
    if let Some(v) = lambda_cache().lock().unwrap().get(y) {
        return v.with_digits(digits);
    }
    let v = Arc::new(lambda_fresh(y, LAMBDA_DIGITS));
    lambda_cache().lock().unwrap().insert(*y, v.clone());
    v.with_digits(digits)
}

fn warm_lambda(ys: &[YItem]) {
    let missing: Vec<YItem> = {
        let c = lambda_cache().lock().unwrap();
        ys.iter().filter(|y| !c.contains_key(y)).copied().collect()
    };
    let fresh: Vec<(YItem, Arc<HPReal>)> =
        missing.par_iter().map(|y| (*y, Arc::new(lambda_fresh(y, LAMBDA_DIGITS)))).collect();
    lambda_cache().lock().unwrap().extend(fresh);
}

/// Top 64 fractional bits and an error bound in the same units.
fn turns(v: &HPReal) -> (u64, u64) {
    let sh = v.bits() - 64;
    let h: BigInt = v.mantissa() >> sh;
    let t = (h & BigInt::from(u64::MAX)).to_u64().expect("masked");
    let e = (v.err_ulps() >> sh).to_u64().unwrap_or(u64::MAX / 4).saturating_add(2);
    (t, e)
}

/// Upper end of a non-negative quantity in turns.
fn turns_upper(v: &HPReal) -> u64 {
    let sh = v.bits() - 64;
    let h = v.hi_scaled().abs() >> sh;
    h.to_u64().unwrap_or(u64::MAX / 4).saturating_add(1)
}

#[inline]
fn tdist(a: u64, b: u64) -> u64 {
    let d = a.wrapping_sub(b);
    d.min(d.wrapping_neg())
}

struct Consts {
    inv_ln_alpha: HPReal,
    c_b: HPReal,
    ln_d: Vec<HPReal>,
    tau: HPReal,
    tail: Option<HPReal>,
}

struct Engine<'a> {
    spec: &'a FamilySpec,
    b: u32,
    cf: Arc<CFExpansion>,
    t0: usize,
    s0: Option<u32>,
    consts: Mutex<HashMap<u32, Arc<Consts>>>,
}

impl<'a> Engine<'a> {
    fn consts(&self, digits: u32) -> Arc<Consts> {
        if let Some(c) = self.consts.lock().unwrap().get(&digits) {
            return c.clone();
        }
        let w = digits + 6;
        let b = self.b;
        let la = ln_golden(w);
        let inv_ln_alpha = HPReal::from_i64(1, w).div(&la).expect("nonzero");
        let c_b = hp_ln_int(5, w)
            .div_int(&BigInt::from(2))
            .sub(&hp_ln_int((b - 1) as u64, w))
            .mul(&inv_ln_alpha)
            .with_digits(digits);
        let ln_d = (0..b).map(|d| if d == 0 { HPReal::zero(digits) } else { hp_ln_int(d as u64, digits) }).collect();
        let tau = Tau(b).eval(digits).expect("tau");
        // |log r - log r_head| <= 4 (b-1) b^-s0 for collapsed classes
        let tail = self.s0.map(|s0| {
            HPReal::from_ratio(&BigInt::from(4 * (b - 1)), &BigInt::from(b).pow(s0), digits)
        });
        let c = Arc::new(Consts { inv_ln_alpha: inv_ln_alpha.with_digits(digits), c_b, ln_d, tau, tail });
        self.consts.lock().unwrap().insert(digits, c.clone());
        c
    }

    fn q(&self, t: usize) -> &BigInt {
        &self.cf.q[t]
    }

    fn digits_t(&self, t: usize) -> u32 {
        digits_for(self.q(t), &self.spec.m) + 4
    }

    fn delta(&self, t: usize, c: &Consts) -> HPReal {
        let d = c.tau.digits();
        c.tau.mul_int(&self.cf.q[t]).sub(&HPReal::from_int(&self.cf.p[t], d))
    }

    fn ln_r2(&self, d1: u32, d2: u32, l1: u32, c: &Consts) -> HPReal {
        let digits = c.tau.digits();
        let e2 = BigInt::from(d1) - d2;
        if e2.is_zero() {
            return c.ln_d[d1 as usize].clone();
        }
        let den = BigInt::from(d1) * BigInt::from(self.b).pow(l1);
        c.ln_d[d1 as usize].add(&hp_ln1p_ratio(&-e2, &den, digits).expect("positive"))
    }

    fn ln_r(&self, x: &XClass, c: &Consts, r2: Option<&HPReal>) -> HPReal {
        match (self.spec.x.kind, x.level) {
            (XKind::X1, _) | (_, Level::Top) => c.ln_d[x.d1 as usize].clone(),
            (XKind::X2, _) | (XKind::X3, Level::Mid) => match r2 {
                Some(v) => v.clone(),
                None => self.ln_r2(x.d1, x.d2, x.l1, c),
            },
            (XKind::X3, Level::Full) => {
                let base = match r2 {
                    Some(v) => v.clone(),
                    None => self.ln_r2(x.d1, x.d2, x.l1, c),
                };
                let e3 = BigInt::from(x.d2) - x.d3;
                if e3.is_zero() {
                    return base;
                }
                let bb = BigInt::from(self.b);
                let n2 = BigInt::from(x.d1) * bb.pow(x.l1) - (BigInt::from(x.d1) - x.d2);
                let den = n2 * bb.pow(x.l2);
                base.add(&hp_ln1p_ratio(&-e3, &den, c.tau.digits()).expect("positive"))
            }
        }
    }

    fn mu_prime(&self, x: &XClass, c: &Consts, r2: Option<&HPReal>) -> HPReal {
        c.c_b.add(&self.ln_r(x, c, r2).mul(&c.inv_ln_alpha))
    }

    /// Error in turns at `t` coming from the class tail and its spread of `s`.
    fn class_err(&self, x: &XClass, c: &Consts, delta: &HPReal, t: usize) -> u64 {
        let mut e = 0u64;
        if x.level != Level::Full {
            let tail = c.tail.as_ref().expect("collapsed class without tail");
            e = e.saturating_add(turns_upper(&tail.mul_int(self.q(t)).mul(&c.inv_ln_alpha)));
        }
        if x.s_hi > x.s_lo {
            e = e.saturating_add(turns_upper(&delta.abs().mul_int(&BigInt::from(x.s_hi - x.s_lo))));
        }
        e
    }

    /// Turn tables for the listed convergents: (turn, error) per class.
    fn x_tables(&self, xs: &[XClass], ts: &[usize]) -> (Vec<Vec<u64>>, Vec<u64>) {
        let digits = self.digits_t(*ts.iter().max().unwrap());
        let c = self.consts(digits);
        let deltas: Vec<HPReal> = ts.iter().map(|&t| self.delta(t, &c)).collect();
        let r2: HashMap<(u32, u32, u32), HPReal> = if self.spec.x.kind == XKind::X3 {
            let mut keys: Vec<(u32, u32, u32)> = xs
                .iter()
                .filter(|x| x.level != Level::Top)
                .map(|x| (x.d1, x.d2, x.l1))
                .collect();
            keys.dedup();
            keys.par_iter().map(|&(a, b2, l)| ((a, b2, l), self.ln_r2(a, b2, l, &c))).collect()
        } else {
            HashMap::new()
        };
        let rows: Vec<(Vec<u64>, u64)> = xs
            .par_iter()
            .map(|x| {
                let mp = self.mu_prime(x, &c, r2.get(&(x.d1, x.d2, x.l1)));
                let s = BigInt::from(x.s_lo);
                let mut row = Vec::with_capacity(ts.len());
                let mut err = 0u64;
                for (i, &t) in ts.iter().enumerate() {
                    let v = mp.mul_int(self.q(t)).add(&deltas[i].mul_int(&s));
                    let (tt, e) = turns(&v);
                    row.push(tt);
                    err = err.max(e.saturating_add(self.class_err(x, &c, &deltas[i], t)));
                }
                (row, err)
            })
            .collect();
        let mut tab = vec![Vec::with_capacity(xs.len()); ts.len()];
        let mut errs = Vec::with_capacity(xs.len());
        for (row, e) in rows {
            for (i, v) in row.into_iter().enumerate() {
                tab[i].push(v);
            }
            errs.push(e);
        }
        (tab, errs)
    }

    /// `lambda q` only needs the bits of `q` plus the margin, not those of `M`.
    fn lambda_digits(&self, t: usize) -> u32 {
        ((self.q(t).bits() + 112) as f64 / std::f64::consts::LOG2_10).ceil() as u32 + 4
    }

    fn y_tables(&self, ys: &[YItem], ts: &[usize]) -> (Vec<Vec<u64>>, u64) {
        let digits = self.lambda_digits(*ts.iter().max().unwrap());
        warm_lambda(ys);
        let rows: Vec<(Vec<u64>, u64)> = ys
            .par_iter()
            .map(|y| {
                let l = lambda(y, digits);
                let mut err = 0u64;
                let row = ts
                    .iter()
                    .map(|&t| {
                        let (tt, e) = turns(&l.mul_int(self.q(t)));
                        err = err.max(e);
                        tt
                    })
                    .collect();
                (row, err)
            })
            .collect();
        let mut tab = vec![Vec::with_capacity(ys.len()); ts.len()];
        let mut emax = 0;
        for (row, e) in rows {
            for (i, v) in row.into_iter().enumerate() {
                tab[i].push(v);
            }
            emax = emax.max(e);
        }
        (tab, emax)
    }

    /// `M ||tau q_t||` in turns, rounded up.
    fn theta(&self, t: usize) -> u64 {
        let c = self.consts(self.digits_t(t));
        turns_upper(&self.delta(t, &c).abs().mul_int(&self.spec.m))
    }

    fn nu(&self, x: &XClass, y: &YItem, c: &Consts, t: usize) -> HPReal {
        let digits = c.tau.digits().min(self.lambda_digits(t) + 10);
        self.mu_prime(x, c, None).sub(&lambda(y, digits))
    }

    fn lemma_at(&self, x: &XClass, y: &YItem, t: usize) -> Option<Witness> {
        let c = self.consts(self.digits_t(t));
        let q = self.q(t);
        let delta = self.delta(t, &c);
        let mut v = self.nu(x, y, &c, t).mul_int(q).add(&delta.mul_int(&BigInt::from(x.s_lo)));
        if x.level != Level::Full {
            v = v.widen(&c.tail.as_ref().unwrap().mul_int(q).mul(&c.inv_ln_alpha));
        }
        if x.s_hi > x.s_lo {
            v = v.widen(&delta.mul_int(&BigInt::from(x.s_hi - x.s_lo)));
        }
        let dist = nearest_int_distance(&v).ok()?;
        let eps = dist.sub(&delta.abs().mul_int(&self.spec.m));
        eps.is_positive().then(|| Witness {
            q: q.clone(),
            index: Some(t),
            eps: Eps { num: eps.lo_scaled(), shift: eps.bits() },
        })
    }

    /// Writes `nu = j tau + v + eta`. When `|eta|` is below `||q_N tau||` for the
    /// last `q_N <= M + |j + s|`, the form `(u + j + s) tau - v' + eta` is bounded away from 0.
    fn fallback(&self, x: &XClass, y: &YItem) -> Option<Vec<Witness>> {
        let t = self.t0;
        if t + 1 >= self.cf.len() {
            return None;
        }
        let c = self.consts(self.digits_t(t + 1) + 10);
        let nu = self.nu(x, y, &c, t + 1);
        let (qa, qb) = (self.q(t), self.q(t + 1));
        let sa = nu.mul_int(qa).signed_frac();
        let sb = nu.mul_int(qb).signed_frac();
        let j0 = sa.mul_int(qb).sub(&sb.mul_int(qa)).round_mid();
        let eta_of = |j: &BigInt| nu.sub(&c.tau.mul_int(j)).signed_frac();
        let (j, mut eta) = [j0.clone(), -j0]
            .into_iter()
            .map(|j| {
                let e = eta_of(&j);
                (j, e)
            })
            .min_by(|a, b| a.1.abs().mantissa().cmp(b.1.abs().mantissa()))
            .unwrap();
        if x.level != Level::Full {
            eta = eta.widen(&c.tail.as_ref().unwrap().mul(&c.inv_ln_alpha));
        }
        let j_lo = &j + x.s_lo;
        let j_hi = &j + x.s_hi;
        let u_max = &self.spec.m + j_lo.abs().max(j_hi.abs());
        let n = self.cf.q.iter().rposition(|q| q <= &u_max)?;
        if n + 1 >= self.cf.len() {
            return None;
        }
        let l = self.delta(n, &c).abs();
        let gap = l.sub(&eta.abs());
        if !gap.is_positive() {
            return None;
        }
        let mut out = vec![Witness { q: BigInt::one(), index: None, eps: Eps { num: gap.lo_scaled(), shift: gap.bits() } }];
        // u = -(j + s) for some admissible u in 1..=M
        let lo = (-&j_hi).max(BigInt::one());
        let hi = (-&j_lo).min(self.spec.m.clone());
        if lo <= hi {
            if eta.is_positive() || eta.is_negative() {
                let a = eta.abs();
                out.push(Witness { q: BigInt::one(), index: None, eps: Eps { num: a.lo_scaled(), shift: a.bits() } });
            } else if x.level == Level::Full {
                // eta is 0 exactly: the form is then a nonzero integer
                let v0 = nu.sub(&c.tau.mul_int(&j)).round_mid();
                if !self.exact_identity(x, y, &v0, &j) {
                    return None;
                }
                out.push(Witness { q: BigInt::one(), index: None, eps: Eps { num: BigInt::one(), shift: 0 } });
            } else {
                return None;
            }
        }
        Some(out)
    }

    /// Full classes with the same `N / b^s` differ only in `s`; they are treated together
    /// when the spread of `s` costs next to nothing at `t0`.
    fn merge_hard(&self, xs: &[XClass], hard: Vec<(usize, usize, usize)>) -> Vec<(XClass, usize, usize, usize)> {
        let mut groups: HashMap<(BigInt, BigInt, usize), (XClass, usize, usize)> = HashMap::new();
        let mut out = Vec::new();
        let bb = BigInt::from(self.b);
        for (i, j, t) in hard {
            let x = &xs[i];
            if x.level != Level::Full {
                out.push((x.clone(), j, t, 1));
                continue;
            }
            let p = super::MuParams { d1: x.d1, d2: x.d2, d3: x.d3, l1: x.l1, l2: x.l2, k: 0, m: 0 };
            let n = super::mu::numerator(self.spec.x.kind, self.b, &p);
            let d = bb.pow(x.s_lo);
            let g = num_integer::Integer::gcd(&n, &d);
            let e = groups.entry((n / &g, d / &g, j)).or_insert_with(|| (x.clone(), t, 0));
            e.0.s_lo = e.0.s_lo.min(x.s_lo);
            e.0.s_hi = e.0.s_hi.max(x.s_hi);
            e.1 = e.1.min(t);
            e.2 += 1;
        }
        let limit = self.q(self.t0 + 1) >> 24;
        let mut merged: Vec<_> = groups.into_iter().collect();
        merged.sort_by(|a, b| a.0.cmp(&b.0));
        for ((_, _, j), (x, t, n)) in merged {
            if n == 1 || BigInt::from(x.s_hi - x.s_lo) < limit {
                out.push((x, j, t, n));
            } else {
                // too wide: split back into single members
                for s in x.s_lo..=x.s_hi {
                    let mut y = x.clone();
                    y.s_lo = s;
                    y.s_hi = s;
                    out.push((y, j, t, 1));
                }
            }
        }
        out
    }

    /// `sqrt5 N / b^s = (b-1) D alpha^v b^e` in `Z[alpha]`, with `s` the exponent of `x`'s own
    /// block lengths.
    fn exact_identity(&self, x: &XClass, y: &YItem, v: &BigInt, e: &BigInt) -> bool {
        let (Some(v), Some(e)) = (v.to_i64(), e.to_i64()) else { return false };
        if v.abs() > 4096 || e.abs() > 4096 {
            return false;
        }
        let p = super::MuParams { d1: x.d1, d2: x.d2, d3: x.d3, l1: x.l1, l2: x.l2, k: y.k, m: y.m };
        let n = super::mu::numerator(self.spec.x.kind, self.b, &p);
        let bb = BigInt::from(self.b);
        let mut d = ZAlpha::int(1);
        if y.terms >= 1 {
            d = d.add(&ZAlpha::alpha_pow(-(y.k as i64)));
        }
        if y.terms == 2 {
            d = d.add(&ZAlpha::alpha_pow(-(y.m as i64)));
        }
        let lhs = ZAlpha::sqrt5().scale(&(n * bb.pow((-e).max(0) as u32)));
        let own = match self.spec.x.kind {
            XKind::X1 => 0,
            XKind::X2 => x.l1,
            XKind::X3 => x.l1 + x.l2,
        };
        let rhs = d.mul(&ZAlpha::alpha_pow(v)).scale(&(BigInt::from(self.b - 1) * bb.pow(own + e.max(0) as u32)));
        lhs == rhs
    }

    /// Individual treatment: first good convergent from `t_from`, then the fallback.
    fn member_hp(&self, x: &XClass, y: &YItem, t_from: usize, stats: &Stats) -> Option<Vec<Witness>> {
        let end = (self.t0 + self.spec.budget).min(self.cf.len());
        if self.spec.selection == Selection::First {
            let early = (t_from + 4).min(end);
            for t in t_from..early {
                if let Some(w) = self.lemma_at(x, y, t) {
                    return Some(vec![w]);
                }
            }
            if let Some(w) = self.fallback(x, y) {
                stats.fallback.fetch_add(1, std::sync::atomic::Ordering::Relaxed);
                return Some(w);
            }
            return (early..end).find_map(|t| self.lemma_at(x, y, t)).map(|w| vec![w]);
        }
        let mut best: Option<(f64, Vec<Witness>)> = None;
        let mut from_fallback = false;
        if let Some(ws) = self.fallback(x, y) {
            let sc = ws.iter().map(|w| -w.eps.log2()).fold(f64::MIN, f64::max);
            best = Some((sc, ws));
            from_fallback = true;
        }
        for t in t_from..end {
            // epsilon is at most 1/2 at every convergent
            let floor = self.q(t).bits() as f64;
            if matches!(&best, Some((sc, _)) if floor >= *sc) {
                break;
            }
            if let Some(w) = self.lemma_at(x, y, t) {
                let sc = log2_big(self.q(t)) - w.eps.log2();
                if best.as_ref().is_none_or(|(b, _)| sc < *b) {
                    best = Some((sc, vec![w]));
                    from_fallback = false;
                }
            }
        }
        if from_fallback {
            stats.fallback.fetch_add(1, std::sync::atomic::Ordering::Relaxed);
        }
        best.map(|b| b.1)
    }
}

fn log2_big(n: &BigInt) -> f64 {
    let b = n.bits();
    let sh = b.saturating_sub(60);
    (n >> sh).to_f64().unwrap_or(f64::NAN).abs().log2() + sh as f64
}

/// `a + b alpha` with `alpha^2 = alpha + 1`.
#[derive(Debug, Clone, PartialEq, Eq)]
struct ZAlpha(BigInt, BigInt);

impl ZAlpha {
    fn int(n: i64) -> Self {
        ZAlpha(BigInt::from(n), BigInt::zero())
    }
    fn sqrt5() -> Self {
        ZAlpha(BigInt::from(-1), BigInt::from(2))
    }
    fn add(&self, o: &Self) -> Self {
        ZAlpha(&self.0 + &o.0, &self.1 + &o.1)
    }
    fn scale(&self, k: &BigInt) -> Self {
        ZAlpha(&self.0 * k, &self.1 * k)
    }
    fn mul(&self, o: &Self) -> Self {
        let bd = &self.1 * &o.1;
        ZAlpha(&self.0 * &o.0 + &bd, &self.0 * &o.1 + &self.1 * &o.0 + bd)
    }
    /// `alpha^n = F(n-1) + F(n) alpha` for every integer `n`.
    fn alpha_pow(n: i64) -> Self {
        let (mut f0, mut f1) = (BigInt::one(), BigInt::zero());
        if n >= 0 {
            for _ in 0..n {
                let f2 = &f0 + &f1;
                f0 = std::mem::replace(&mut f1, f2);
            }
        } else {
            for _ in 0..(-n) {
                let fm = &f1 - &f0;
                f1 = std::mem::replace(&mut f0, fm);
            }
        }
        ZAlpha(f0, f1)
    }
}

#[derive(Default)]
struct Stats {
    fallback: std::sync::atomic::AtomicUsize,
}

fn choose_collapse(b: u32, xr: &XRange, cf: &CFExpansion, t0: usize) -> Option<u32> {
    if xr.kind == XKind::X1 {
        return None;
    }
    let t_ref = (t0 + 12).min(cf.len() - 1);
    let q_ref = &cf.q[t_ref];
    let span = (xr.l1_max + xr.l2_max).max(1) as u64;
    // the spread of s costs span * |delta| < span / q_{t0+1} turns
    let need = 64 - 8 + (64 - span.leading_zeros()) as u64;
    if t0 + 1 >= cf.len() || cf.q[t0 + 1].bits() < need + 2 {
        return None;
    }
    // q_ref * 4(b-1) b^-s0 / log(alpha) <= 2^-56
    let lb = (b as f64).log2();
    let s0 = ((q_ref.bits() as f64 + 56.0 + (4.0 * (b - 1) as f64 / 0.4812).log2()) / lb).ceil() as u32 + 1;
    let longest = xr.l1_max.max(xr.l2_max + xr.l1_max);
    (s0 <= longest).then_some(s0)
}

pub fn family_reduce(spec: &FamilySpec) -> Result<FamilyReport, ReductionError> {
    let b = spec.base;
    if !(2..=36).contains(&b) {
        return Err(ReductionError::Invalid(format!("base {b}")));
    }
    if !spec.m.is_positive() {
        return Err(ReductionError::Invalid("M must be at least 1".into()));
    }
    if spec.targets.is_empty() {
        return Err(ReductionError::Invalid("no (A, B) targets".into()));
    }
    let six_m = &spec.m * 6;
    let cf = cf_expand_with(&Tau(b), &six_m, spec.budget + 2)?;
    let t0 = cf.q.iter().position(|q| q > &six_m).ok_or(CfError::TooShort { have: cf.len() })?;
    let s0 = choose_collapse(b, &spec.x, &cf, t0);
    let eng = Engine { spec, b, cf: cf.clone(), t0, s0, consts: Mutex::new(HashMap::new()) };

    let xs = x_classes(b, &spec.x, s0);
    let ys = y_items(&spec.y);
    if xs.is_empty() || ys.is_empty() {
        return Err(ReductionError::Invalid("empty family".into()));
    }
    let pairs = xs.len() as u128 * ys.len() as u128;
    let members: u128 = xs.iter().map(|x| x.mult as u128).sum::<u128>() * ys.len() as u128;
    let stats = Stats::default();

    let mut witnesses: Vec<Witness> = Vec::new();
    let mut hard: Vec<(usize, usize, usize)> = Vec::new();
    let mode = if pairs <= EXACT_PAIRS { Mode::Exact } else { Mode::Shell };

    match mode {
        Mode::Exact => {
            let ts: Vec<usize> = (t0..(t0 + WINDOW).min(cf.len())).collect();
            let (xt, xe) = eng.x_tables(&xs, &ts);
            let (yt, ye) = eng.y_tables(&ys, &ts);
            let xe_max = xe.iter().copied().max().unwrap_or(0);
            let thr: Vec<u64> = ts.iter().map(|&t| eng.theta(t) + xe_max + ye + 4).collect();
            let nt = ts.len();
            if std::env::var("FIBREP_DEBUG").is_ok() {
                eprintln!("x {:?} xe {xe_max} y {:?} ye {ye} thr {:?}", xt, yt, thr);
            }
            let lq: Vec<f64> = ts.iter().map(|&t| log2_big(&cf.q[t])).collect();
            let first = spec.selection == Selection::First;
            // each pair takes the convergent minimising q_t / eps_t
            let (mins, unres) = (0..xs.len())
                .into_par_iter()
                .fold(
                    || (vec![u64::MAX; nt], Vec::new()),
                    |(mut mins, mut unres), i| {
                        for j in 0..yt[0].len() {
                            let mut best = (f64::INFINITY, usize::MAX, 0u64);
                            for ti in 0..nt {
                                if lq[ti] - 64.0 >= best.0 || (first && best.1 != usize::MAX) {
                                    break;
                                }
                                let d = tdist(xt[ti][i], yt[ti][j]);
                                if d > thr[ti] {
                                    let e = d - thr[ti];
                                    let sc = lq[ti] - (e as f64).log2();
                                    if sc < best.0 {
                                        best = (sc, ti, e);
                                    }
                                }
                            }
                            if best.1 == usize::MAX {
                                unres.push((i, j));
                            } else {
                                mins[best.1] = mins[best.1].min(best.2);
                            }
                        }
                        (mins, unres)
                    },
                )
                .reduce(
                    || (vec![u64::MAX; nt], Vec::new()),
                    |(a, mut ua), (bm, ub)| {
                        ua.extend(ub);
                        (a.iter().zip(&bm).map(|(x, y)| *x.min(y)).collect(), ua)
                    },
                );
            for (ti, &m) in mins.iter().enumerate() {
                if m != u64::MAX {
                    let t = ts[ti];
                    witnesses.push(Witness { q: cf.q[t].clone(), index: Some(t), eps: Eps { num: BigInt::from(m), shift: 64 } });
                }
            }
            let mut unres = unres;
            unres.sort_unstable();
            hard.extend(unres.into_iter().map(|(i, j)| (i, j, t0 + nt)));
        }
        Mode::Shell => {
            let p = pairs as f64;
            let end = (t0 + spec.budget).min(cf.len() - 1);
            let t_d = (t0..end)
                .find(|&t| 4.0 * (eng.theta(t) as f64 / 2f64.powi(64)) * p * 2.0 <= SHELL_TARGET)
                .unwrap_or(end);
            let ts = [t_d];
            let (xt, xe) = eng.x_tables(&xs, &ts);
            let (yt, ye) = eng.y_tables(&ys, &ts);
            let thr = eng.theta(t_d) + xe.iter().copied().max().unwrap_or(0) + ye + 4;
            let half = thr.saturating_mul(2);
            let mut sorted: Vec<(u64, usize)> = yt[0].iter().copied().enumerate().map(|(j, v)| (v, j)).collect();
            sorted.sort_unstable();
            let keys: Vec<u64> = sorted.iter().map(|s| s.0).collect();
            let n = keys.len();
            let (min_out, shell) = (0..xs.len())
                .into_par_iter()
                .fold(
                    || (u64::MAX, Vec::new()),
                    |(mut best, mut shell), i| {
                        let x = xt[0][i];
                        let lo = x.wrapping_sub(half);
                        let hi = x.wrapping_add(half);
                        // indices whose turn lies in the closed window [lo, hi] (circular)
                        let (a, bnd, wraps) = if lo <= hi {
                            (keys.partition_point(|&k| k < lo), keys.partition_point(|&k| k <= hi), false)
                        } else {
                            (keys.partition_point(|&k| k < lo), keys.partition_point(|&k| k <= hi), true)
                        };
                        let mut inside = 0usize;
                        if !wraps {
                            for s in &sorted[a..bnd] {
                                shell.push((i, s.1));
                            }
                            inside += bnd - a;
                        } else {
                            for s in sorted[a..].iter().chain(&sorted[..bnd]) {
                                shell.push((i, s.1));
                            }
                            inside += (n - a) + bnd;
                        }
                        if inside < n {
                            // neighbours just outside the window
                            let before = if wraps { a - 1 } else { (a + n - 1) % n };
                            let after = if wraps { bnd } else { bnd % n };
                            for idx in [before, after] {
                                let d = tdist(x, keys[idx]);
                                if d > thr {
                                    best = best.min(d - thr);
                                }
                            }
                        }
                        (best, shell)
                    },
                )
                .reduce(
                    || (u64::MAX, Vec::new()),
                    |(a, mut sa), (bb, sb)| {
                        sa.extend(sb);
                        (a.min(bb), sa)
                    },
                );
            if min_out != u64::MAX {
                witnesses.push(Witness { q: cf.q[t_d].clone(), index: Some(t_d), eps: Eps { num: BigInt::from(min_out), shift: 64 } });
            }
            let mut shell = shell;
            shell.sort_unstable();
            hard.extend(shell.into_iter().map(|(i, j)| (i, j, t0)));
        }
    }

    let individual = hard.len();
    let work = eng.merge_hard(&xs, hard);
    let results: Vec<Option<Vec<Witness>>> =
        work.par_iter().map(|(x, j, t, _)| eng.member_hp(x, &ys[*j], *t, &stats)).collect();
    let mut unresolved = 0;
    for (r, (x, j, _, n)) in results.into_iter().zip(&work) {
        match r {
            Some(ws) => witnesses.extend(ws),
            None => {
                if std::env::var("FIBREP_DEBUG").is_ok() {
                    eprintln!("{} unresolved {:?} {:?}", spec.label, x, ys[*j]);
                }
                unresolved += n
            }
        }
    }
    if unresolved > 0 {
        return Err(ReductionError::Unresolved(unresolved));
    }

    // keep the smallest epsilon per q
    let mut best: BTreeMap<BigInt, Witness> = BTreeMap::new();
    for w in witnesses {
        match best.get(&w.q) {
            Some(old) if old.eps.cmp(&w.eps) != Ordering::Greater => {}
            _ => {
                best.insert(w.q.clone(), w);
            }
        }
    }
    let targets = spec
        .targets
        .iter()
        .map(|tg| {
            let (w_max, index) = best
                .values()
                .map(|w| (ceil_bound(&tg.a, &w.q, &w.eps.num, w.eps.shift, tg.base), w.index))
                .max_by_key(|p| p.0)
                .expect("at least one witness");
            TargetBound {
                variable: tg.variable.clone(),
                a: tg.a.text.clone(),
                base: tg.base.to_string(),
                w_max,
                bound: w_max + tg.offset,
                index,
            }
        })
        .collect();
    let lemma_min = best.values().filter(|w| w.index.is_some()).min_by(|a, b| a.eps.cmp(&b.eps));
    let (min_eps, min_eps_f64) = match lemma_min {
        Some(w) => {
            let h = w.eps.to_hp();
            (h.lower_sig(3), h.to_f64())
        }
        None => ("-".into(), f64::NAN),
    };
    let max_index = best.values().filter_map(|w| w.index).max().unwrap_or(t0);
    Ok(FamilyReport {
        base: b,
        label: spec.label.clone(),
        x: spec.x.clone(),
        y: spec.y.clone(),
        m: spec.m.to_string(),
        members: members.to_string(),
        classes: xs.len(),
        y_items: ys.len(),
        pairs: pairs.to_string(),
        t0,
        max_index,
        mode,
        min_eps,
        min_eps_f64,
        individual,
        fallback: stats.fallback.load(std::sync::atomic::Ordering::Relaxed),
        unresolved,
        targets,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::reduction::mu::{mu_of_shape, MuParams};
    use crate::reduction::{default_m, reduce_once, MuProducer, ReductionProblem};

    #[test]
    fn turns_of_negative_values() {
        let v = HPReal::from_ratio(&BigInt::from(-1), &BigInt::from(4), 40);
        let (t, _) = turns(&v);
        assert_eq!(t, 3u64 << 62);
        let v = HPReal::from_ratio(&BigInt::from(7), &BigInt::from(4), 40);
        assert_eq!(turns(&v).0, 3u64 << 62);
        assert_eq!(tdist(1, u64::MAX), 2);
    }

    #[test]
    fn alpha_powers() {
        let a = ZAlpha::alpha_pow(1);
        assert_eq!(a, ZAlpha(BigInt::zero(), BigInt::one()));
        assert_eq!(ZAlpha::alpha_pow(5).mul(&ZAlpha::alpha_pow(-5)), ZAlpha::int(1));
        assert_eq!(ZAlpha::alpha_pow(10), ZAlpha(BigInt::from(34), BigInt::from(55)));
        // sqrt5^2 = 5
        assert_eq!(ZAlpha::sqrt5().mul(&ZAlpha::sqrt5()), ZAlpha::int(5));
        // alpha^3 + alpha^-3 = 2 sqrt5
        assert_eq!(ZAlpha::alpha_pow(3).add(&ZAlpha::alpha_pow(-3)), ZAlpha::sqrt5().scale(&BigInt::from(2)));
    }

    #[test]
    fn exact_degeneracy_in_base_two() {
        // sqrt5 / (1 + alpha^-6) = alpha^3 / 2, so mu = 3 - tau
        let spec = FamilySpec::new(
            2,
            "deg",
            XRange::x1(),
            YRange::y1(8),
            vec![target("n1-n3", "41.28", LogBase::Golden, 0)],
            BigInt::from(10).pow(30),
        );
        let r = family_reduce(&spec).unwrap();
        assert!(r.fallback >= 1);
    }

    #[test]
    fn class_counts_cover_every_member() {
        let b = 3;
        let xr = XRange::x3(20, 25, true);
        let brute: u64 = (1..b)
            .map(|_| (0..b).map(|_| (1..=20u32).map(|l1| (l1..=25).count() as u64 * b as u64).sum::<u64>()).sum::<u64>())
            .sum();
        for s0 in [None, Some(10), Some(30)] {
            let total: u64 = x_classes(b, &xr, s0).iter().map(|x| x.mult).sum();
            assert_eq!(total, brute, "s0 {s0:?}");
        }
        let total: u64 = x_classes(b, &XRange::x2(40), Some(12)).iter().map(|x| x.mult).sum();
        assert_eq!(total, 2 * 3 * 40);
    }

    #[test]
    fn nu_matches_direct_formula() {
        // mu' + s tau - lambda equals mu from the closed formula
        let b = 5;
        let spec = FamilySpec::new(b, "t", XRange::x3(6, 6, false), YRange::y2(4, 6), vec![], BigInt::from(1000));
        let cf = cf_expand_with(&Tau(b), &BigInt::from(6000), 4).unwrap();
        let eng = Engine { spec: &spec, b, cf, t0: 0, s0: None, consts: Mutex::new(HashMap::new()) };
        let c = eng.consts(60);
        let xs = x_classes(b, &spec.x, None);
        for x in xs.iter().step_by(37) {
            let y = YItem { terms: 2, k: 1, m: 3 };
            let ours = eng.nu(x, &y, &c, 0).add(&c.tau.mul_int(&BigInt::from(x.s_lo)));
            let p = MuParams { d1: x.d1, d2: x.d2, d3: x.d3, l1: x.l1, l2: x.l2, k: 1, m: 3 };
            let direct = mu_of_shape(XKind::X3, YKind::Y2, b, &p, 60).unwrap();
            assert!(ours.overlaps(&direct), "{x:?}");
        }
    }

    fn target(var: &str, a: &str, base: LogBase, offset: i64) -> Target {
        Target { variable: var.into(), a: Coef::parse(a).unwrap(), base, offset }
    }

    #[test]
    fn single_member_family_agrees_with_reduce_once() {
        let b = 8;
        let spec = FamilySpec::new(
            b,
            "4.1",
            XRange::x1().with_d1(1),
            YRange::y0(),
            vec![target("n1-n2", "261.04", LogBase::Golden, 0)],
            default_m(),
        );
        let r = family_reduce(&spec).unwrap();
        let mu = MuProducer { x: XKind::X1, y: YKind::Y0, base: b, params: MuParams { d1: 1, ..Default::default() } };
        let p = ReductionProblem::new(b, Arc::new(mu), Coef::parse("261.04").unwrap(), LogBase::Golden, default_m());
        let o = reduce_once(&p).unwrap();
        assert_eq!(r.targets[0].w_max, o.w_max);
        assert_eq!(r.targets[0].index, Some(o.index));
        assert_eq!(o.w_max, 438);
    }

    #[test]
    fn degenerate_member_uses_fallback() {
        // d1 = b - 1 with k = 2 gives mu = 1 exactly
        let b = 4;
        let spec = FamilySpec::new(
            b,
            "deg",
            XRange::x1().with_d1(3),
            YRange::y1(3),
            vec![target("n1-n3", "41.28", LogBase::Golden, 0)],
            BigInt::from(500),
        );
        let r = family_reduce(&spec).unwrap();
        assert_eq!(r.fallback, 1);
        assert!(r.targets[0].w_max < 40);
    }

    #[test]
    fn shell_and_exact_modes_are_both_sound_on_a_small_family() {
        // brute force over the members with direct reduce_once at each one
        let b = 3;
        let m = BigInt::from(200);
        let xr = XRange::x2(6);
        let yr = YRange::y1(8);
        let tg = vec![target("l2", "18.38", LogBase::Int(b), 1)];
        let spec = FamilySpec::new(b, "small", xr.clone(), yr.clone(), tg, m.clone());
        let r = family_reduce(&spec).unwrap();
        let mut worst = i64::MIN;
        for d1 in 1..b {
            for d2 in 0..b {
                for l1 in 1..=6 {
                    for k in 0..=8 {
                        let p = MuParams { d1, d2, d3: 0, l1, l2: 0, k, m: 0 };
                        let mu = MuProducer { x: XKind::X2, y: YKind::Y1, base: b, params: p };
                        let pr = ReductionProblem::new(b, Arc::new(mu), Coef::parse("18.38").unwrap(), LogBase::Int(b), m.clone());
                        if let Ok(o) = reduce_once(&pr) {
                            worst = worst.max(o.w_max);
                        }
                    }
                }
            }
        }
        // first-good per member: the family maximum is the member maximum
        assert!(r.targets[0].w_max >= worst);
    }
}
