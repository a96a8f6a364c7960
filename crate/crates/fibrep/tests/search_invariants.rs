use fibrep::fibonacci::fib_sum;
use fibrep::repdigit::{pattern_value, LengthOrder};
use fibrep::search::{backward_search, corollary_filter, counts, forward_search, SearchConfig, TermMode};

#[test]
fn forward_and_backward_agree_on_a_grid() {
    for (n1_max, lsum_max, min_index, order) in [
        (30, 20, 0, LengthOrder::Free),
        (40, 30, 1, LengthOrder::Free),
        (50, 76, 0, LengthOrder::Nondecreasing),
        (74, 76, 1, LengthOrder::Free),
    ] {
        let cfg = SearchConfig { n1_max, lsum_max, min_index, length_order: order, ..Default::default() };
        assert_eq!(forward_search(&cfg).unwrap(), backward_search(&cfg).unwrap(), "{cfg:?}");
    }
}

#[test]
fn every_solution_is_consistent() {
    let r = forward_search(&SearchConfig::default()).unwrap();
    for sols in r.values() {
        for s in sols.values() {
            assert!(s.triples.iter().all(|t| fib_sum(t) == s.value));
            assert!(s.patterns.iter().all(|p| pattern_value(p) == s.value));
        }
    }
}

#[test]
fn fewer_terms_give_subsets() {
    let r = forward_search(&SearchConfig::default()).unwrap();
    let two = corollary_filter(&r, TermMode::Two);
    let one = corollary_filter(&r, TermMode::One);
    for b in 2..=10 {
        assert!(one[&b].keys().all(|v| two[&b].contains_key(v)));
        assert!(two[&b].keys().all(|v| r[&b].contains_key(v)));
    }
    let c1: Vec<usize> = counts(&one).values().copied().collect();
    assert_eq!(c1[8], 6);
}

#[test]
fn thread_count_does_not_change_results() {
    let cfg = SearchConfig::default();
    let a = forward_search(&cfg).unwrap();
    let pool = rayon::ThreadPoolBuilder::new().num_threads(3).build().unwrap();
    let b = pool.install(|| forward_search(&cfg).unwrap());
    assert_eq!(a, b);
}
