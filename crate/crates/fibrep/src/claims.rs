//! Checks stated results (largest sums, counts) against exact recomputation.

use std::collections::BTreeMap;

use num_bigint::BigUint;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fibonacci::{fib, FibTriple};
use crate::repdigit::decompose;
use crate::search::{corollary_filter, counts, extremal, SearchResult, TermMode};

const BUILTIN: &str = include_str!("../data/claims.json");

#[derive(Debug, Error)]
pub enum ClaimError {
    #[error("malformed claim file: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("claim {index}: {reason}")]
    Invalid { index: usize, reason: String },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Claim {
    pub mode: TermMode,
    pub base: u32,
    pub count: usize,
    pub indices: Vec<u32>,
    pub value: String,
    pub representation: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ClaimFile {
    pub version: u32,
    pub total_three: usize,
    pub final_n1_bounds: BTreeMap<String, i64>,
    /// First reduction step with `d1 = 1`, keyed by base. Indices are one-based.
    #[serde(default)]
    pub step_one: BTreeMap<String, StepOneRow>,
    pub claims: Vec<Claim>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StepOneRow {
    pub index: usize,
    pub eps: String,
    pub l1_minus_1: i64,
    pub n1_minus_n2: i64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Status {
    Pass,
    Fail,
}

#[derive(Debug, Clone, Serialize)]
pub struct ClaimCheck {
    pub claim: Claim,
    pub index_sum: String,
    pub representation_value: Option<String>,
    pub found_count: Option<usize>,
    pub found_largest: Option<String>,
    pub status: Status,
    pub mismatches: Vec<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ClaimReport {
    pub checks: Vec<ClaimCheck>,
    pub passed: usize,
    pub failed: usize,
    pub total_claimed: usize,
    pub total_found: Option<usize>,
}

impl ClaimReport {
    pub fn all_pass(&self) -> bool {
        self.failed == 0 && self.total_found.is_none_or(|t| t == self.total_claimed)
    }

    pub fn find(&self, mode: TermMode, base: u32) -> Option<&ClaimCheck> {
        self.checks.iter().find(|c| c.claim.mode == mode && c.claim.base == base)
    }
}

pub fn parse_claims(text: &str) -> Result<ClaimFile, ClaimError> {
    let f: ClaimFile = serde_json::from_str(text)?;
    for (index, c) in f.claims.iter().enumerate() {
        let want = match c.mode {
            TermMode::Three => 3,
            TermMode::Two => 2,
            TermMode::One => 1,
        };
        let bad = |reason: &str| Err(ClaimError::Invalid { index, reason: reason.into() });
        if c.indices.len() != want {
            return bad("index count does not match mode");
        }
        if !(2..=36).contains(&c.base) {
            return bad("base out of range");
        }
        if c.value.parse::<BigUint>().is_err() {
            return bad("value is not a decimal integer");
        }
    }
    Ok(f)
}

/// The transcribed table values shipped with the crate.
pub fn builtin_claims() -> ClaimFile {
    parse_claims(BUILTIN).expect("bundled claims parse")
}

fn triple_of(c: &Claim) -> FibTriple {
    let mut ix = c.indices.clone();
    ix.resize(3, 0);
    FibTriple::sorted(ix[0], ix[1], ix[2])
}

fn parse_repr(s: &str, b: u32) -> Option<BigUint> {
    BigUint::parse_bytes(s.as_bytes(), b)
}

/// Recompute every claim. With a three-term search result (`min_index = 0`) the counts and
/// largest values are compared too.
pub fn verify_claims(file: &ClaimFile, search: Option<&SearchResult>) -> ClaimReport {
    let filtered: BTreeMap<TermMode, SearchResult> = match search {
        Some(r) => [TermMode::Three, TermMode::Two, TermMode::One]
            .into_iter()
            .map(|m| (m, if m == TermMode::Three { r.clone() } else { corollary_filter(r, m) }))
            .collect(),
        None => BTreeMap::new(),
    };
    let mut checks = Vec::new();
    for c in &file.claims {
        let mut miss = Vec::new();
        let stated: BigUint = c.value.parse().expect("validated");
        let t = triple_of(c);
        let sum: BigUint = c.indices.iter().map(|&i| fib(i as u64)).sum();
        if sum != stated {
            miss.push(format!("indices {:?} sum to {sum}, stated {stated}", c.indices));
        }
        let rv = parse_repr(&c.representation, c.base);
        match &rv {
            None => miss.push(format!("representation {} is not a base-{} numeral", c.representation, c.base)),
            Some(v) => {
                if *v != stated {
                    miss.push(format!("representation {} has value {v}, stated {stated}", c.representation));
                }
                if decompose(v, c.base).is_empty() {
                    miss.push(format!("{} is not a concatenation of three repdigits", c.representation));
                }
            }
        }
        let (mut found_count, mut found_largest) = (None, None);
        if let Some(r) = filtered.get(&c.mode) {
            let n = counts(r).get(&c.base).copied().unwrap_or(0);
            found_count = Some(n);
            if n != c.count {
                miss.push(format!("count {n} found, stated {}", c.count));
            }
            let ext = extremal(r);
            if let Some(s) = ext.get(&c.base) {
                found_largest = Some(s.value.to_string());
                if s.value != stated {
                    miss.push(format!("largest found is {} = {}, stated {stated}", s.value, s.representation()));
                }
                if !s.triples.contains(&t) && s.value == sum {
                    miss.push(format!("indices {:?} are not a witness of the largest value", c.indices));
                }
            }
            let member = r.get(&c.base).is_some_and(|m| m.contains_key(&sum));
            if !member {
                miss.push(format!("{sum} is not among the solutions"));
            }
        }
        checks.push(ClaimCheck {
            claim: c.clone(),
            index_sum: sum.to_string(),
            representation_value: rv.map(|v| v.to_string()),
            found_count,
            found_largest,
            status: if miss.is_empty() { Status::Pass } else { Status::Fail },
            mismatches: miss,
        });
    }
    let passed = checks.iter().filter(|c| c.status == Status::Pass).count();
    let total_found = search.map(|r| counts(r).values().sum());
    ClaimReport { failed: checks.len() - passed, passed, checks, total_claimed: file.total_three, total_found }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtin_parses() {
        let f = builtin_claims();
        assert_eq!(f.claims.len(), 27);
        assert_eq!(f.total_three, 2665);
    }

    #[test]
    fn arithmetic_checks_without_search() {
        let r = verify_claims(&builtin_claims(), None);
        let b4 = r.find(TermMode::Three, 4).unwrap();
        assert_eq!(b4.status, Status::Pass);
        let b6 = r.find(TermMode::Three, 6).unwrap();
        assert_eq!(b6.status, Status::Fail);
        assert_eq!(b6.index_sum, "268435290");
        let b10 = r.find(TermMode::Three, 10).unwrap();
        assert_eq!(b10.status, Status::Fail);
        assert_eq!(b10.index_sum, "9666669");
        assert_eq!(b10.representation_value.as_deref(), Some("9666669"));
    }

    #[test]
    fn malformed_files_rejected() {
        assert!(parse_claims("{").is_err());
        let bad = r#"{"version":1,"total_three":1,"final_n1_bounds":{},"claims":[
            {"mode":"two","base":4,"count":1,"indices":[1,2,3],"value":"3","representation":"3"}]}"#;
        assert!(matches!(parse_claims(bad), Err(ClaimError::Invalid { index: 0, .. })));
    }
}
