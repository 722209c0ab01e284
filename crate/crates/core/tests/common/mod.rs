#![allow(dead_code)]

use bfds::{Config, NodeFunction, Permutation, SelectionScheme, System, UpdateSchedule};
use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand::SeedableRng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Kinds {
    Unary,
    PositiveUnary,
    Mixed,
    /// unary, OR, AND and fan-in-2 tables
    RobustSafe,
}

pub fn function(r: &mut ChaCha8Rng, n: usize, kinds: Kinds) -> NodeFunction {
    let src = |r: &mut ChaCha8Rng| r.gen_range(0..n);
    let some_srcs = |r: &mut ChaCha8Rng| {
        let m = r.gen_range(1..=n.min(3));
        let mut v: Vec<usize> = (0..n).collect();
        v.shuffle(r);
        v.truncate(m);
        v
    };
    match kinds {
        Kinds::PositiveUnary => NodeFunction::Pos(src(r)),
        Kinds::Unary => {
            if r.gen_bool(0.5) {
                NodeFunction::Pos(src(r))
            } else {
                NodeFunction::Neg(src(r))
            }
        }
        Kinds::RobustSafe => match r.gen_range(0..5) {
            0 => NodeFunction::Pos(src(r)),
            1 => NodeFunction::Neg(src(r)),
            2 => NodeFunction::Or(some_srcs(r)),
            3 => NodeFunction::And(some_srcs(r)),
            _ => {
                let srcs = vec![src(r), src(r)];
                NodeFunction::Table { srcs, outputs: (0..4).map(|_| r.gen_bool(0.5)).collect() }
            }
        },
        Kinds::Mixed => match r.gen_range(0..6) {
            0 => NodeFunction::Const(r.gen_bool(0.5)),
            1 => NodeFunction::Pos(src(r)),
            2 => NodeFunction::Neg(src(r)),
            3 => NodeFunction::Or(some_srcs(r)),
            4 => NodeFunction::And(some_srcs(r)),
            _ => {
                let fanin = r.gen_range(1..=n.min(3));
                let srcs = (0..fanin).map(|_| src(r)).collect();
                NodeFunction::Table { srcs, outputs: (0..1 << fanin).map(|_| r.gen_bool(0.5)).collect() }
            }
        },
    }
}

pub fn grid(r: &mut ChaCha8Rng, n: usize, k: usize, kinds: Kinds) -> Vec<Vec<NodeFunction>> {
    (0..n).map(|_| (0..k).map(|_| function(r, n, kinds)).collect()).collect()
}

pub fn permutation(r: &mut ChaCha8Rng, n: usize) -> Permutation {
    let mut v: Vec<usize> = (0..n).collect();
    v.shuffle(r);
    Permutation::new(v).unwrap()
}

pub fn partition(r: &mut ChaCha8Rng, n: usize) -> Vec<Vec<usize>> {
    let blocks = r.gen_range(1..=n);
    let mut out = vec![Vec::new(); blocks];
    for v in 0..n {
        out[if v < blocks { v } else { r.gen_range(0..blocks) }].push(v);
    }
    out
}

pub fn selection(r: &mut ChaCha8Rng, n: usize) -> SelectionScheme {
    match r.gen_range(0..4) {
        0 => SelectionScheme::Fixed,
        1 => SelectionScheme::Coordinated,
        2 => SelectionScheme::Individual,
        _ => SelectionScheme::SemiCoordinated(partition(r, n)),
    }
}

pub fn schedule(r: &mut ChaCha8Rng, n: usize) -> UpdateSchedule {
    match r.gen_range(0..5) {
        0 => UpdateSchedule::Parallel,
        1 => UpdateSchedule::FixedPermutation(permutation(r, n)),
        2 => UpdateSchedule::PermutationList((0..r.gen_range(1..=3)).map(|_| permutation(r, n)).collect()),
        3 => UpdateSchedule::ArbitraryPermutation,
        _ => UpdateSchedule::Asynchronous,
    }
}

pub fn system(r: &mut ChaCha8Rng, n: usize, k: usize, kinds: Kinds, sel: SelectionScheme, sched: UpdateSchedule) -> System {
    System::new(grid(r, n, k, kinds), sel, sched).unwrap()
}

pub fn config(r: &mut ChaCha8Rng, n: usize) -> Config {
    Config(r.gen_range(0..1u128 << n))
}

/// Random CNF with clauses of exactly `width` literals over `vars` variables.
pub fn cnf(r: &mut ChaCha8Rng, vars: usize, clauses: usize, width: usize) -> bfds::cnf::CnfFormula {
    let cl = (0..clauses)
        .map(|_| {
            (0..width)
                .map(|_| bfds::cnf::Literal { var: r.gen_range(0..vars), positive: r.gen_bool(0.5) })
                .collect()
        })
        .collect();
    bfds::cnf::CnfFormula::new(vars, cl).unwrap()
}
