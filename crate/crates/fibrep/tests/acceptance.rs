//! One PASS/FAIL line per acceptance criterion.
//!
//! The process exits non-zero only on a panic, or on any FAIL when `FIBREP_ACCEPTANCE_STRICT` is set.

use std::sync::Arc;
use std::time::{Duration, Instant};

use num_bigint::{BigInt, BigUint};
use num_traits::{One, Zero};
use rand::{Rng, SeedableRng};

use fibrep::bounds::baker_constant;
use fibrep::claims::{builtin_claims, verify_claims, Status};
use fibrep::contfrac::{
    approximation_holds, cf_expand, cf_expand_with, determinant, gcd_is_one, FnProducer, RealProducer, Tau,
};
use fibrep::fibonacci::{binet_bounds_hold, fib_doubling};
use fibrep::precision::{nearest_int_distance, HPReal};
use fibrep::reduction::{
    default_m, family_reduce, reduce_once, run_chain, Coef, FamilySpec, LogBase, ReductionProblem, Selection, StepId,
    XRange, YRange,
};
use fibrep::repdigit::{decompose, Pattern};
use fibrep::search::{backward_search, counts, corollary_filter, extremal, forward_search, SearchConfig, TermMode};

const COUNTS: [usize; 9] = [113, 138, 217, 250, 334, 348, 387, 413, 465];
const FINAL_N1: [i64; 9] = [74, 74, 71, 71, 71, 69, 72, 70, 69];

struct Report {
    failed: usize,
}

impl Report {
    fn line(&mut self, n: u32, ok: bool, detail: String) {
        if !ok {
            self.failed += 1;
        }
        println!("{} criterion {n}: {detail}", if ok { "PASS" } else { "FAIL" });
    }
}

fn secs(d: Duration) -> String {
    format!("{:.1}s", d.as_secs_f64())
}

fn c1(r: &mut Report) {
    let cfg = SearchConfig::default();
    let t = Instant::now();
    let fwd = forward_search(&cfg).unwrap();
    let tf = t.elapsed();
    let bwd = backward_search(&cfg).unwrap();
    let c: Vec<usize> = counts(&fwd).values().copied().collect();
    let total: usize = c.iter().sum();
    let b4 = extremal(&fwd).get(&4).map(|s| s.value.to_string()).unwrap_or_default();
    let ok = tf < Duration::from_secs(600) && fwd == bwd && c == COUNTS && total == 2665 && b4 == "268435290";
    r.line(
        1,
        ok,
        format!(
            "forward {} ; backward equal {} ; counts {:?} total {total} (min_index 0, free lengths) ; b=4 largest {b4}",
            secs(tf),
            fwd == bwd,
            c
        ),
    );
}

fn c2(r: &mut Report) {
    let fwd = forward_search(&SearchConfig::default()).unwrap();
    let ext = extremal(&fwd);
    let want = [(2, "28679", "111000000000111", [23, 8, 2]), (3, "196829", "100222222222", [27, 14, 9]), (4, "268435290", "33333333331122", [42, 29, 20])];
    let mut ok = true;
    let mut got = Vec::new();
    for (b, v, rep, ix) in want {
        let s = ext[&b];
        let fine = s.value.to_string() == v
            && s.representation() == rep
            && s.triples.iter().any(|t| t.as_array() == ix);
        ok &= fine;
        got.push(format!("b={b} {}={}", s.value, s.representation()));
    }
    r.line(2, ok, got.join(" ; "));
}

fn c3(r: &mut Report) {
    let fwd = forward_search(&SearchConfig::default()).unwrap();
    let claims = builtin_claims();
    let mut ok = true;
    let mut notes = Vec::new();
    for (mode, label) in [(TermMode::One, "one"), (TermMode::Two, "two")] {
        let rr = corollary_filter(&fwd, mode);
        let c = counts(&rr);
        let ext = extremal(&rr);
        for cl in claims.claims.iter().filter(|c| c.mode == mode) {
            // Every one-term row and the b = 10 two-term row
            if mode == TermMode::Two && cl.base != 10 {
                continue;
            }
            let s = ext[&cl.base];
            let from_indices: BigUint = cl.indices.iter().map(|&i| fibrep::fibonacci::fib(i as u64)).sum();
            let exact = c[&cl.base] == cl.count && s.representation() == cl.representation && s.value == from_indices;
            ok &= exact;
            if s.value.to_string() != cl.value {
                notes.push(format!("{label} b={} stated value {} but F-sum and numeral are {}", cl.base, cl.value, s.value));
            }
            if !exact {
                notes.push(format!("{label} b={} count {} rep {}", cl.base, c[&cl.base], s.representation()));
            }
        }
    }
    let one10 = extremal(&corollary_filter(&fwd, TermMode::One))[&10].representation();
    let two10 = extremal(&corollary_filter(&fwd, TermMode::Two))[&10].representation();
    ok &= one10 == "17711" && two10 == "335522";
    notes.insert(0, format!("one b=10 {one10} ; two b=10 {two10}"));
    r.line(3, ok, notes.join(" ; "));
}

fn c4(r: &mut Report) {
    let rep = verify_claims(&builtin_claims(), None);
    let b6 = rep.find(TermMode::Three, 6).unwrap();
    let b10 = rep.find(TermMode::Three, 10).unwrap();
    let ok = b6.status == Status::Fail
        && b6.index_sum == "268435290"
        && b10.status == Status::Fail
        && b10.representation_value.as_deref() == Some("9666669");
    r.line(
        4,
        ok,
        format!(
            "b=6 {:?} recomputed {} ; b=10 {:?} representation value {}",
            b6.status,
            b6.index_sum,
            b10.status,
            b10.representation_value.clone().unwrap_or_default()
        ),
    );
}

fn c5(r: &mut Report) {
    let c = baker_constant(3, 2);
    let lo = HPReal::from_decimal_str("9.33e13", c.digits()).unwrap();
    let hi = HPReal::from_decimal_str("9.34e13", c.digits()).unwrap();
    let ok = c.certified_cmp(&lo).is_some_and(|o| o.is_gt()) && hi.certified_cmp(&c).is_some_and(|o| o.is_gt());
    r.line(5, ok, format!("C(3,2) in [{}, {}]", c.lower_sig(6), c.upper_sig(6)));
}

fn c6(r: &mut Report) {
    let t = Instant::now();
    let m = default_m();
    let spec = FamilySpec::new(2, "4.1", XRange::x1(), YRange::y0(), StepId::S4_1.targets(2), m.clone());
    let f2 = family_reduce(&spec).unwrap();
    let cf = cf_expand(&Tau(2), &(&m * 6)).unwrap();
    let q_ok = cf.q[f2.max_index] > &m * 6;
    let eps = f2.min_eps_f64;
    let eps_ok = (eps - 0.373).abs() <= 0.0373;
    let l1 = f2.bound("l1").unwrap();
    let spec8 = FamilySpec::new(8, "4.1", XRange::x1().with_d1(1), YRange::y0(), StepId::S4_1.targets(8), m);
    let f8 = family_reduce(&spec8).unwrap();
    let k8 = f8.bound("n1-n2").unwrap();
    let dt = t.elapsed();
    let ok = q_ok && eps_ok && l1 == 301 && k8 == 438 && dt < Duration::from_secs(30);
    r.line(
        6,
        ok,
        format!("b=2 convergent q_{} (q > 6M {q_ok}) eps {eps:.4} l1 <= {l1} ; b=8 n1-n2 <= {k8} ; {}", f2.max_index + 1, secs(dt)),
    );
}

fn c7(r: &mut Report) {
    let mut got = Vec::new();
    let mut times = Vec::new();
    for b in 2..=10u32 {
        let t = Instant::now();
        let c = run_chain(b, 8, Selection::First).unwrap();
        got.push(c.final_bound);
        times.push(format!("{:.0}", t.elapsed().as_secs_f64()));
    }
    let within = got.iter().zip(FINAL_N1).all(|(g, w)| (g - w).abs() <= 3);
    let max = *got.iter().max().unwrap();
    r.line(
        7,
        within && max <= 77,
        format!("final n1 bounds {got:?} vs {FINAL_N1:?} (tolerance 3) ; max {max} ; seconds per base {}", times.join(",")),
    );
}

fn c8(r: &mut Report) {
    let mut notes = Vec::new();
    // continued fractions
    let mut cf_ok = true;
    for b in 2..=10 {
        let cf = cf_expand_with(&Tau(b), &BigInt::from(10).pow(30), 40).unwrap();
        let x = Tau(b).eval(cf.digits).unwrap();
        cf_ok &= cf.len() >= 60;
        for i in 0..60.min(cf.len()) {
            cf_ok &= gcd_is_one(&cf.p[i], &cf.q[i]) && approximation_holds(&x, &cf, i);
            if i > 0 {
                let want = if i % 2 == 1 { BigInt::one() } else { -BigInt::one() };
                cf_ok &= determinant(&cf, i) == want;
            }
        }
    }
    notes.push(format!("contfrac {cf_ok}"));

    // repdigit round trip
    let mut rng = rand::rngs::StdRng::seed_from_u64(0x5eed);
    let mut rd_ok = true;
    for _ in 0..100_000 {
        let b = rng.random_range(2..=10u32);
        let mut blk = [(0u32, 0u32); 3];
        for (i, x) in blk.iter_mut().enumerate() {
            let lo = if i == 0 { 1 } else { 0 };
            *x = (rng.random_range(lo..b), rng.random_range(1..=25u32));
        }
        let p = Pattern::new(b, blk).unwrap();
        let v = p.value();
        let parsed = BigUint::parse_bytes(p.render().as_bytes(), b);
        rd_ok &= parsed.as_ref() == Some(&v);
        let adjacent_distinct = blk[0].0 != blk[1].0 && blk[1].0 != blk[2].0;
        if adjacent_distinct {
            rd_ok &= decompose(&v, b).contains(&p);
        } else {
            rd_ok &= decompose(&v, b).iter().all(|q| q.value() == v);
        }
    }
    notes.push(format!("repdigit {rd_ok}"));

    // fast doubling against the plain recurrence
    let (mut a, mut bb) = (BigUint::zero(), BigUint::one());
    let mut fib_ok = true;
    for n in 0..=300u64 {
        fib_ok &= fib_doubling(n) == a;
        let c = &a + &bb;
        a = std::mem::replace(&mut bb, c);
    }
    notes.push(format!("fib {fib_ok}"));

    let binet_ok = (3..=500).all(|n| matches!(binet_bounds_hold(n), Ok(true)));
    notes.push(format!("binet {binet_ok}"));

    // synthetic reductions checked against every u <= M
    let mut red_ok = true;
    let mut checked = 0;
    for (k, &(b, mu_num, m, a)) in
        [(2u32, 1234i64, 1000u64, 3u32), (3, 77, 20_000, 7), (5, 9001, 100_000, 1), (10, 4242, 50_000, 12), (7, 5, 5_000, 40)]
            .iter()
            .enumerate()
    {
        let den = BigInt::from(10_007);
        let mu: Arc<dyn RealProducer> = Arc::new(FnProducer {
            key: format!("acceptance:{k}"),
            f: move |d| Ok(HPReal::from_ratio(&BigInt::from(mu_num), &BigInt::from(10_007), d)),
        });
        let p = ReductionProblem::new(b, mu, Coef::parse(&a.to_string()).unwrap(), LogBase::Int(b), BigInt::from(m));
        let Ok(out) = reduce_once(&p) else { continue };
        checked += 1;
        let d = 60;
        let tau = Tau(b).eval(d).unwrap();
        let mu_hp = HPReal::from_ratio(&BigInt::from(mu_num), &den, d);
        let floor = HPReal::from_ratio(&BigInt::from(a), &BigInt::from(b).pow(out.w_max as u32), d);
        for u in 1..=m {
            let x = tau.mul_int(&BigInt::from(u)).add(&mu_hp);
            let dist = nearest_int_distance(&x).unwrap();
            red_ok &= dist.certified_cmp(&floor) != Some(std::cmp::Ordering::Less);
        }
    }
    red_ok &= checked >= 3;
    notes.push(format!("reduction {red_ok} ({checked} instances)"));
    r.line(8, cf_ok && rd_ok && fib_ok && binet_ok && red_ok, notes.join(" ; "));
}

fn c9(r: &mut Report) {
    let base = forward_search(&SearchConfig::default()).unwrap();
    let wide = forward_search(&SearchConfig { n1_max: 100, ..Default::default() }).unwrap();
    let extra: usize = counts(&wide).values().sum::<usize>() - counts(&base).values().sum::<usize>();
    r.line(9, base == wide, format!("n1 <= 100 adds {extra} values"));
}

fn main() {
    let mut r = Report { failed: 0 };
    let start = Instant::now();
    c1(&mut r);
    c2(&mut r);
    c3(&mut r);
    c4(&mut r);
    c5(&mut r);
    c6(&mut r);
    c7(&mut r);
    c8(&mut r);
    c9(&mut r);
    println!("{} failing ; {}", r.failed, secs(start.elapsed()));
    if r.failed > 0 && std::env::var_os("FIBREP_ACCEPTANCE_STRICT").is_some() {
        std::process::exit(1);
    }
}
