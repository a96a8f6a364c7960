//! Exhaustive enumeration of sums of Fibonacci numbers that read as three repdigit blocks.
//!
//! `forward_search` walks index triples and decomposes each sum; `backward_search` walks
//! digit patterns and looks them up among the sums. Both must return the same map.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use num_bigint::BigUint;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fibonacci::{fib_sum, fib_u128, FibTriple};
use crate::repdigit::{
    decompose_u128, digits_of, pattern_value, pattern_value_u128, Block, LengthOrder, Pattern,
};

/// Sums stay inside `u128` up to this index.
pub const MAX_SEARCH_INDEX: u32 = 180;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SearchError {
    #[error("n1_max {0} above supported {MAX_SEARCH_INDEX}")]
    IndexTooLarge(u32),
    #[error("invalid configuration: {0}")]
    Config(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TermMode {
    #[default]
    Three,
    /// n3 = 0
    Two,
    /// n2 = n3 = 0
    One,
}

impl TermMode {
    pub fn admits(&self, t: &FibTriple) -> bool {
        match self {
            TermMode::Three => true,
            TermMode::Two => t.n3 == 0,
            TermMode::One => t.n2 == 0 && t.n3 == 0,
        }
    }
}

impl std::str::FromStr for TermMode {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "three" => Ok(TermMode::Three),
            "two" => Ok(TermMode::Two),
            "one" => Ok(TermMode::One),
            _ => Err(format!("unknown mode {s}")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SearchConfig {
    pub bases: Vec<u32>,
    pub n1_max: u32,
    pub lsum_max: u32,
    pub term_mode: TermMode,
    pub min_index: u32,
    pub length_order: LengthOrder,
}

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig {
            bases: (2..=10).collect(),
            n1_max: 74,
            lsum_max: 76,
            term_mode: TermMode::Three,
            min_index: 0,
            length_order: LengthOrder::Free,
        }
    }
}

impl SearchConfig {
    pub fn for_base(b: u32) -> Self {
        SearchConfig { bases: vec![b], ..Default::default() }
    }

    pub fn validate(&self) -> Result<(), SearchError> {
        if self.n1_max > MAX_SEARCH_INDEX {
            return Err(SearchError::IndexTooLarge(self.n1_max));
        }
        if self.n1_max < 1 || self.lsum_max < 3 {
            return Err(SearchError::Config("need n1_max >= 1 and lsum_max >= 3".into()));
        }
        if self.min_index > 1 {
            return Err(SearchError::Config("min_index must be 0 or 1".into()));
        }
        if self.bases.is_empty() || self.bases.iter().any(|&b| !(2..=36).contains(&b)) {
            return Err(SearchError::Config("bases must lie in 2..=36".into()));
        }
        Ok(())
    }

    /// Bases above 10 are searched but carry no completeness guarantee.
    pub fn certified(&self) -> bool {
        self.bases.iter().all(|&b| b <= 10) && self.n1_max >= 74 && self.lsum_max >= 76
    }

    /// All triples admitted by the configuration, in lexicographic order.
    pub fn triples(&self) -> Vec<FibTriple> {
        let lo = self.min_index;
        let mut v = Vec::new();
        for n1 in lo..=self.n1_max {
            for n2 in lo..=n1 {
                for n3 in lo..=n2 {
                    let t = FibTriple { n1, n2, n3 };
                    if self.term_mode.admits(&t) {
                        v.push(t);
                    }
                }
            }
        }
        v
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Solution {
    pub value: BigUint,
    pub base: u32,
    pub triples: BTreeSet<FibTriple>,
    pub patterns: BTreeSet<Pattern>,
}

impl Solution {
    /// Every triple and every pattern evaluates to `value`.
    pub fn is_consistent(&self) -> bool {
        !self.triples.is_empty()
            && !self.patterns.is_empty()
            && self.triples.iter().all(|t| fib_sum(t) == self.value)
            && self.patterns.iter().all(|p| p.base == self.base && pattern_value(p) == self.value)
    }

    pub fn representation(&self) -> String {
        digits_of(&self.value, self.base)
            .into_iter()
            .map(|d| std::char::from_digit(d, self.base).unwrap())
            .collect()
    }
}

#[derive(Serialize)]
struct SolutionJson<'a> {
    base: u32,
    value: String,
    triples: Vec<[u32; 3]>,
    patterns: Vec<&'a Pattern>,
}

impl Serialize for Solution {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        SolutionJson {
            base: self.base,
            value: self.value.to_string(),
            triples: self.triples.iter().map(|t| t.as_array()).collect(),
            patterns: self.patterns.iter().collect(),
        }
        .serialize(s)
    }
}

pub type BaseSolutions = BTreeMap<BigUint, Solution>;
pub type SearchResult = BTreeMap<u32, BaseSolutions>;

fn insert(map: &mut BaseSolutions, base: u32, value: u128, t: FibTriple, ps: &[Pattern]) {
    let e = map.entry(BigUint::from(value)).or_insert_with(|| Solution {
        value: BigUint::from(value),
        base,
        triples: BTreeSet::new(),
        patterns: BTreeSet::new(),
    });
    e.triples.insert(t);
    e.patterns.extend(ps.iter().copied());
}

fn digit_len(mut v: u128, b: u32) -> u32 {
    let mut n = 0;
    while v > 0 {
        v /= b as u128;
        n += 1;
    }
    n
}

pub fn forward_search(cfg: &SearchConfig) -> Result<SearchResult, SearchError> {
    cfg.validate()?;
    let triples = cfg.triples();
    let per_base: Vec<(u32, BaseSolutions)> = cfg
        .bases
        .par_iter()
        .map(|&b| {
            // chunk over n1 and merge in order
            let chunks: Vec<Vec<(u128, FibTriple, Vec<Pattern>)>> = triples
                .par_chunk_by(|x, y| x.n1 == y.n1)
                .map(|chunk| {
                    let mut hits = Vec::new();
                    for t in chunk {
                        let s = fib_u128(t.n1).unwrap() + fib_u128(t.n2).unwrap() + fib_u128(t.n3).unwrap();
                        let l = digit_len(s, b);
                        if l < 3 || l > cfg.lsum_max {
                            continue;
                        }
                        let ps: Vec<Pattern> = decompose_u128(s, b)
                            .into_iter()
                            .filter(|p| cfg.length_order.admits(p))
                            .collect();
                        if !ps.is_empty() {
                            hits.push((s, *t, ps));
                        }
                    }
                    hits
                })
                .collect();
            let mut map = BaseSolutions::new();
            for (s, t, ps) in chunks.into_iter().flatten() {
                insert(&mut map, b, s, t, &ps);
            }
            (b, map)
        })
        .collect();
    Ok(per_base.into_iter().collect())
}

pub fn backward_search(cfg: &SearchConfig) -> Result<SearchResult, SearchError> {
    cfg.validate()?;
    let mut sums: HashMap<u128, Vec<FibTriple>> = HashMap::new();
    let mut max_sum = 0u128;
    for t in cfg.triples() {
        let s = fib_u128(t.n1).unwrap() + fib_u128(t.n2).unwrap() + fib_u128(t.n3).unwrap();
        max_sum = max_sum.max(s);
        sums.entry(s).or_default().push(t);
    }
    let per_base: Vec<(u32, BaseSolutions)> = cfg
        .bases
        .par_iter()
        .map(|&b| {
            let lmax = cfg.lsum_max.min(digit_len(max_sum, b));
            let mut found: Vec<(u128, Pattern)> = Vec::new();
            for total in 3..=lmax {
                for l1 in 1..=total - 2 {
                    for l2 in 1..=total - 1 - l1 {
                        let l3 = total - l1 - l2;
                        for d1 in 1..b {
                            for d2 in 0..b {
                                for d3 in 0..b {
                                    let p = Pattern {
                                        base: b,
                                        blocks: [
                                            Block { digit: d1, len: l1 },
                                            Block { digit: d2, len: l2 },
                                            Block { digit: d3, len: l3 },
                                        ],
                                    };
                                    if !cfg.length_order.admits(&p) {
                                        continue;
                                    }
                                    let Some(v) = pattern_value_u128(&p) else { continue };
                                    if v <= max_sum && sums.contains_key(&v) {
                                        found.push((v, p));
                                    }
                                }
                            }
                        }
                    }
                }
            }
            let mut map = BaseSolutions::new();
            for (v, p) in found {
                for t in &sums[&v] {
                    insert(&mut map, b, v, *t, &[p]);
                }
            }
            (b, map)
        })
        .collect();
    Ok(per_base.into_iter().collect())
}

pub fn counts(r: &SearchResult) -> BTreeMap<u32, usize> {
    r.iter().map(|(b, m)| (*b, m.len())).collect()
}

/// Restrict a three-term result (run with `min_index = 0`) to `n3 = 0` or `n2 = n3 = 0` witnesses.
pub fn corollary_filter(r: &SearchResult, mode: TermMode) -> SearchResult {
    r.iter()
        .map(|(b, m)| {
            let f: BaseSolutions = m
                .iter()
                .filter_map(|(v, s)| {
                    let ts: BTreeSet<FibTriple> = s.triples.iter().filter(|t| mode.admits(t)).copied().collect();
                    (!ts.is_empty()).then(|| (v.clone(), Solution { triples: ts, ..s.clone() }))
                })
                .collect();
            (*b, f)
        })
        .collect()
}

/// Largest solution per base.
pub fn extremal(r: &SearchResult) -> BTreeMap<u32, &Solution> {
    r.iter().filter_map(|(b, m)| m.values().next_back().map(|s| (*b, s))).collect()
}

/// Per-base counts under the counting conventions the CLI reports side by side.
#[derive(Debug, Clone, Serialize)]
pub struct ConventionCounts {
    pub label: String,
    pub min_index: u32,
    pub length_order: LengthOrder,
    pub counts: BTreeMap<u32, usize>,
    pub total: usize,
}

pub fn convention_counts(base_cfg: &SearchConfig) -> Result<Vec<ConventionCounts>, SearchError> {
    let mut out = Vec::new();
    for (min_index, order) in [
        (0, LengthOrder::Free),
        (1, LengthOrder::Free),
        (0, LengthOrder::Nondecreasing),
        (1, LengthOrder::Nondecreasing),
    ] {
        let cfg = SearchConfig { min_index, length_order: order, ..base_cfg.clone() };
        let c = counts(&forward_search(&cfg)?);
        let total = c.values().sum();
        let label = format!(
            "min_index={min_index},lengths={}",
            match order {
                LengthOrder::Free => "free",
                LengthOrder::Nondecreasing => "nondecreasing",
            }
        );
        out.push(ConventionCounts { label, min_index, length_order: order, counts: c, total });
    }
    Ok(out)
}
