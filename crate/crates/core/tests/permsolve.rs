mod common;

use bfds::permsolve::*;
use bfds::{Caps, Config, FunctionSelection, Permutation, SelectionScheme, System, UpdateSchedule};
use common::{config, grid, rng, Kinds};
use proptest::prelude::*;
use rand::Rng;

/// Every selection vector over `k` choices for `n` nodes.
fn selections(n: usize, k: usize) -> Vec<FunctionSelection> {
    let mut out = vec![vec![]];
    for _ in 0..n {
        out = out.into_iter().flat_map(|s: Vec<usize>| (0..k).map(move |j| [s.clone(), vec![j]].concat())).collect();
    }
    out.into_iter().map(FunctionSelection).collect()
}

fn order_works(sys: &System, c: Config, d: Config, p: &Permutation, sels: &[FunctionSelection]) -> bool {
    sels.iter().any(|s| sys.step_sequential(c, s, p).unwrap() == d)
}

#[test]
fn one_choice_agrees_with_enumeration() {
    let mut r = rng(21);
    for _ in 0..150 {
        let n = r.gen_range(1..=6);
        let sys = System::new(grid(&mut r, n, 1, Kinds::Unary), SelectionScheme::Fixed, UpdateSchedule::ArbitraryPermutation)
            .unwrap();
        let (c, d) = (config(&mut r, n), config(&mut r, n));
        let sels = selections(n, 1);
        let brute = Permutation::all(n).iter().any(|p| order_works(&sys, c, d, p, &sels));
        let got = perm_exists_1choice_unary(&sys, c, d).unwrap();
        assert_eq!(got.is_some(), brute);
        if let Some(p) = got {
            assert_eq!(sys.step_sequential(c, &sels[0], &p).unwrap(), d);
        }
    }
}

#[test]
fn coordinated_picks_a_feasible_column() {
    let mut r = rng(22);
    for _ in 0..80 {
        let n = r.gen_range(1..=5);
        let k = r.gen_range(1..=3);
        let sys = System::new(grid(&mut r, n, k, Kinds::Unary), SelectionScheme::Coordinated, UpdateSchedule::ArbitraryPermutation)
            .unwrap();
        let (c, d) = (config(&mut r, n), config(&mut r, n));
        let perms = Permutation::all(n);
        let feasible: Vec<usize> = (0..k)
            .filter(|&j| perms.iter().any(|p| order_works(&sys, c, d, p, &[FunctionSelection(vec![j; n])])))
            .collect();
        match perm_exists_coordinated(&sys, c, d).unwrap() {
            Some((p, j)) => {
                assert_eq!(Some(&j), feasible.first());
                assert_eq!(sys.step_sequential(c, &FunctionSelection(vec![j; n]), &p).unwrap(), d);
            }
            None => assert!(feasible.is_empty()),
        }
    }
}

#[test]
fn coordinated_second_column_only() {
    use bfds::NodeFunction::Pos;
    // Column 1 swaps (infeasible for 01 -> 10); column 2 lets both read node 1.
    let sys = System::new(
        vec![vec![Pos(1), Pos(1)], vec![Pos(0), Pos(1)]],
        SelectionScheme::Coordinated,
        UpdateSchedule::ArbitraryPermutation,
    )
    .unwrap();
    let (c, d) = (Config::parse("01").unwrap().0, Config::parse("11").unwrap().0);
    assert_eq!(perm_exists_coordinated(&sys, c, d).unwrap().map(|w| w.1), Some(0));
    let (c, d) = (Config::parse("10").unwrap().0, Config::parse("01").unwrap().0);
    assert_eq!(perm_exists_coordinated(&sys, c, d).unwrap(), None);
}

#[test]
fn individual_search_agrees_with_enumeration() {
    let mut r = rng(23);
    for _ in 0..120 {
        let n = r.gen_range(1..=5);
        let k = r.gen_range(1..=2);
        let sys = System::new(
            grid(&mut r, n, k, Kinds::PositiveUnary),
            SelectionScheme::Individual,
            UpdateSchedule::ArbitraryPermutation,
        )
        .unwrap();
        let (c, d) = (config(&mut r, n), config(&mut r, n));
        let sels = selections(n, k);
        let brute = Permutation::all(n).iter().any(|p| order_works(&sys, c, d, p, &sels));
        let got = perm_exists_individual_search(&sys, c, d, &Caps::default()).unwrap();
        assert_eq!(got.is_some(), brute);
        if let Some((p, s)) = got {
            assert_eq!(sys.step_sequential(c, &s, &p).unwrap(), d);
        }
    }
}

/// Independent robust one-step oracle: every order admits some selection.
fn robust_oracle(sys: &System, c: Config, d: Config) -> bool {
    let sels = selections(sys.n(), sys.k());
    Permutation::all(sys.n()).iter().all(|p| order_works(sys, c, d, p, &sels))
}

#[test]
fn robust_fast_matches_bruteforce() {
    let mut r = rng(24);
    let caps = Caps::default();
    for _ in 0..60 {
        let n = r.gen_range(1..=4);
        let k = r.gen_range(1..=2);
        let sys = System::new(grid(&mut r, n, k, Kinds::RobustSafe), SelectionScheme::Individual, UpdateSchedule::ArbitraryPermutation)
            .unwrap();
        for c in Config::all(n) {
            for d in Config::all(n) {
                let oracle = robust_oracle(&sys, c, d);
                assert_eq!(robust_reach_bruteforce(&sys, c, d, 1, &caps).unwrap(), oracle);
                let w = robust_witness_sets(&sys, c, d, 2).unwrap();
                assert_eq!(w.is_robust(), oracle);
                let bound = witness_bound(n, k, 2);
                assert!(w.families.iter().all(|f| f.len() as u128 <= bound));
            }
        }
    }
}

#[test]
fn robust_base_cases() {
    let mut r = rng(25);
    let caps = Caps::default();
    let sys = System::new(grid(&mut r, 3, 2, Kinds::Unary), SelectionScheme::Individual, UpdateSchedule::ArbitraryPermutation)
        .unwrap();
    for c in Config::all(3) {
        for d in Config::all(3) {
            assert_eq!(robust_reach_bruteforce(&sys, c, d, 0, &caps).unwrap(), c == d);
        }
    }
    let ident = System::new(
        (0..3).map(|i| vec![bfds::NodeFunction::Pos(i)]).collect(),
        SelectionScheme::Individual,
        UpdateSchedule::ArbitraryPermutation,
    )
    .unwrap();
    for t in 0..3 {
        assert!(robust_reach_bruteforce(&ident, Config(5), Config(5), t, &caps).unwrap());
    }
}

#[test]
fn robust_fails_when_only_one_order_works() {
    use bfds::NodeFunction::Pos;
    // Node 1 copies node 2; 01 -> 11 needs node 2 to stay, node 1 to read it: any order.
    // 10 -> 01 under (copy 2, copy 1) needs node 1 first: not robust.
    let sys = System::new(vec![vec![Pos(1)], vec![Pos(0)]], SelectionScheme::Individual, UpdateSchedule::ArbitraryPermutation)
        .unwrap();
    let (c, d) = (Config::parse("10").unwrap().0, Config::parse("00").unwrap().0);
    assert!(!robust_reach_bruteforce(&sys, c, d, 1, &Caps::default()).unwrap());
    assert!(!robust_one_step_fast(&sys, c, d, 1).unwrap());
}

proptest! {
    #[test]
    fn witnesses_replay(seed in 0u64..10_000) {
        let mut r = rng(seed);
        let n = r.gen_range(1..=5);
        let sys = System::new(grid(&mut r, n, 2, Kinds::PositiveUnary), SelectionScheme::Individual, UpdateSchedule::ArbitraryPermutation).unwrap();
        let (c, d) = (config(&mut r, n), config(&mut r, n));
        if let Some((p, s)) = perm_exists_individual_search(&sys, c, d, &Caps::default()).unwrap() {
            prop_assert_eq!(sys.step_sequential(c, &s, &p).unwrap(), d);
        }
    }
}
