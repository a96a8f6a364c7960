//! The case tree of reduction steps, iterated with `M = N + 1` until `N` stops falling.

use std::collections::BTreeMap;
use std::time::Instant;

use num_bigint::BigInt;
use serde::Serialize;

use super::family::{family_reduce, FamilyReport, FamilySpec, Selection, XRange, YRange};
use super::steps::StepId;
use super::{default_m, ReductionError, DEFAULT_BUDGET};

/// Smallest value any bound is reported as.
pub const FLOOR: i64 = 23;

#[derive(Debug, Clone, Serialize)]
pub struct CaseBox {
    pub case: String,
    pub l1: i64,
    pub l2: i64,
    pub k: i64,
    pub m: i64,
}

#[derive(Debug, Clone, Serialize)]
pub struct RoundReport {
    pub base: u32,
    pub round: usize,
    pub m: String,
    pub values: BTreeMap<String, i64>,
    pub cases: Vec<CaseBox>,
    pub n1_bound: i64,
    pub families: Vec<FamilyReport>,
    pub seconds: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ChainReport {
    pub base: u32,
    pub rounds: Vec<RoundReport>,
    pub final_bound: i64,
}

struct Runner {
    b: u32,
    m: BigInt,
    budget: usize,
    selection: Selection,
    families: Vec<FamilyReport>,
}

impl Runner {
    fn run(&mut self, step: StepId, x: XRange, y: YRange) -> Result<Vec<i64>, ReductionError> {
        let mut spec = FamilySpec::new(self.b, step.name(), x, y, step.targets(self.b), self.m.clone());
        spec.budget = self.budget;
        spec.selection = self.selection;
        let t = Instant::now();
        let r = family_reduce(&spec)?;
        if std::env::var("FIBREP_DEBUG").is_ok() {
            eprintln!(
                "{} {:?} cls {} y {} t0 {} max {} eps {} ind {} fb {} {:?} {:.1}s",
                r.label,
                r.mode,
                r.classes,
                r.y_items,
                r.t0,
                r.max_index,
                r.min_eps,
                r.individual,
                r.fallback,
                r.targets.iter().map(|t| t.bound).collect::<Vec<_>>(),
                t.elapsed().as_secs_f64()
            );
        }
        let out = r.targets.iter().map(|t| t.bound.max(FLOOR)).collect();
        self.families.push(r);
        Ok(out)
    }
}

fn u(v: i64) -> u32 {
    v.max(1) as u32
}

/// One pass through all fourteen steps with the given `M`.
pub fn run_round(b: u32, m: &BigInt, budget: usize, selection: Selection) -> Result<RoundReport, ReductionError> {
    let start = Instant::now();
    let mut r = Runner { b, m: m.clone(), budget, selection, families: Vec::new() };
    let mut v = BTreeMap::new();
    use StepId::*;

    let o = r.run(S4_1, XRange::x1(), YRange::y0())?;
    let (l1, k) = (o[0], o[1]);
    // case 1: n1 - n2 <= K
    let o = r.run(S4_2, XRange::x1(), YRange::y1(u(k)))?;
    let (l1p, mm) = (o[0], o[1]);
    let o = r.run(S4_3, XRange::x1(), YRange::y2(u(k), u(mm)))?;
    let l1a = o[0];
    let o = r.run(S4_4, XRange::x2(u(l1a)), YRange::y2(u(k), u(mm)))?;
    let l2a = o[0];
    let o = r.run(S4_5, XRange::x2(u(l1p)), YRange::y1(u(k)))?;
    let (l2b, mb) = (o[0], o[1]);
    let o = r.run(S4_6, XRange::x2(u(l1p)), YRange::y2(u(k), u(mb)))?;
    let l2_6 = o[0];
    let o = r.run(S4_7, XRange::x3(u(l1p), u(l2b), true), YRange::y1(u(k)))?;
    let m_7 = o[0];
    // case 2: l1 <= L1
    let o = r.run(S4_8, XRange::x2(u(l1)), YRange::y0())?;
    let (l2c, k2) = (o[0], o[1]);
    let o = r.run(S4_9, XRange::x3(u(l1), u(l2c), true), YRange::y0())?;
    let k2a = o[0];
    let o = r.run(S4_10, XRange::x3(u(l1), u(l2c), true), YRange::y1(u(k2a)))?;
    let m_10 = o[0];
    let o = r.run(S4_11, XRange::x2(u(l1)), YRange::y1(u(k2)))?;
    let (l2_11, mb2) = (o[0], o[1]);
    let o = r.run(S4_12, XRange::x2(u(l1)), YRange::y2(u(k2), u(mb2)))?;
    let l2_12 = o[0];
    let o = r.run(S4_13, XRange::x3(u(l1), u(l2_11), true), YRange::y1(u(k2)))?;
    let m_13 = o[0];

    let cases = vec![
        CaseBox { case: "1A".into(), l1: l1a, l2: l2a, k, m: mm },
        CaseBox { case: "1B-A".into(), l1: l1p, l2: l2_6, k, m: mb },
        CaseBox { case: "1B-B".into(), l1: l1p, l2: l2b, k, m: m_7 },
        CaseBox { case: "2A".into(), l1, l2: l2c, k: k2a, m: m_10 },
        CaseBox { case: "2B-A".into(), l1, l2: l2_12, k: k2, m: mb2 },
        CaseBox { case: "2B-B".into(), l1, l2: l2_11, k: k2, m: m_13 },
    ];
    let bx = |f: fn(&CaseBox) -> i64| cases.iter().map(f).max().unwrap();
    let (bl1, bl2, bk, bm) = (bx(|c| c.l1), bx(|c| c.l2), bx(|c| c.k), bx(|c| c.m));
    let o = r.run(S4_14, XRange::x3(u(bl1), u(bl2), true), YRange::y2(u(bk), u(bm)))?;
    let n1 = o[0];

    for (name, val) in [
        ("L1", l1),
        ("K", k),
        ("L1'", l1p),
        ("M", mm),
        ("L1a", l1a),
        ("L2a", l2a),
        ("L2b", l2b),
        ("Mb", mb),
        ("L2_6", l2_6),
        ("M_7", m_7),
        ("L2c", l2c),
        ("K2", k2),
        ("K2a", k2a),
        ("M_10", m_10),
        ("L2_11", l2_11),
        ("Mb2", mb2),
        ("L2_12", l2_12),
        ("M_13", m_13),
        ("N", n1),
    ] {
        v.insert(name.to_string(), val);
    }
    Ok(RoundReport {
        base: b,
        round: 0,
        m: m.to_string(),
        values: v,
        cases,
        n1_bound: n1,
        families: r.families,
        seconds: start.elapsed().as_secs_f64(),
    })
}

/// Rounds until the bound on `n1` stops decreasing or `max_rounds` is reached.
pub fn run_chain(b: u32, max_rounds: usize, selection: Selection) -> Result<ChainReport, ReductionError> {
    let mut m = default_m();
    let mut rounds: Vec<RoundReport> = Vec::new();
    for i in 0..max_rounds.max(1) {
        let mut rr = run_round(b, &m, DEFAULT_BUDGET, selection)?;
        rr.round = i + 1;
        let n = rr.n1_bound;
        let improved = rounds.last().map(|p| n < p.n1_bound).unwrap_or(true);
        rounds.push(rr);
        if !improved {
            break;
        }
        // l1 + l2 + ... <= n1 + 1, so the next M is N + 1
        m = BigInt::from(n + 1);
    }
    let final_bound = rounds.iter().map(|r| r.n1_bound).min().unwrap();
    Ok(ChainReport { base: b, rounds, final_bound })
}
