//! Acceptance suite: one PASS/FAIL line per criterion, oracle checks at desk scale.
//!
//! Two criteria fail by construction and are asserted as such: negation
//! elimination under sequential schedules with a self-negating node, and the
//! simple-path count of the model-counting gadget.

#[path = "../../core/tests/common/mod.rs"]
mod common;

use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;
use std::process::Command;
use std::time::Instant;

use bfds::analysis::{self, CycleMode, GlobalCount, PredMode};
use bfds::bounded::reaches_within;
use bfds::cnf::CnfFormula;
use bfds::graph::{build_graph, layers, reachable_set};
use bfds::permsolve::*;
use bfds::reductions::*;
use bfds::transforms::{self, verify_embedding, Transformed};
use bfds::{AsynchronousPlan, Caps, Config, FunctionSelection, NodeFunction, Permutation, SelectionScheme, System, UpdateSchedule};
use bfds_cli::format::SystemFile;
use common::{cnf, config, grid, partition, permutation, rng, Kinds};
use num_rational::Ratio;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: impl Into<String>) -> Verdict {
    Verdict { pass, detail: detail.into() }
}

/// A permissible selection for `sys`, drawn at random.
fn any_selection(r: &mut ChaCha8Rng, sys: &System) -> FunctionSelection {
    match sys.listed_selections() {
        Some(all) => all[r.gen_range(0..all.len())].clone(),
        None => FunctionSelection((0..sys.n()).map(|_| r.gen_range(0..sys.k())).collect()),
    }
}

fn semantics_coherence() -> Verdict {
    let mut r = rng(1001);
    let caps = Caps::default();
    let mut checked = 0u64;
    for i in 0..200 {
        let n = r.gen_range(1..=6);
        let k = r.gen_range(1..=2);
        let sel = match (i / 5) % 4 {
            0 => SelectionScheme::Fixed,
            1 => SelectionScheme::Coordinated,
            2 => SelectionScheme::Individual,
            _ => SelectionScheme::SemiCoordinated(partition(&mut r, n)),
        };
        let sched = match i % 5 {
            0 => UpdateSchedule::Parallel,
            1 => UpdateSchedule::FixedPermutation(permutation(&mut r, n)),
            2 => UpdateSchedule::PermutationList((0..r.gen_range(1..=3)).map(|_| permutation(&mut r, n)).collect()),
            3 => UpdateSchedule::ArbitraryPermutation,
            _ => UpdateSchedule::Asynchronous,
        };
        let sys = System::new(grid(&mut r, n, k, Kinds::Mixed), sel, sched).unwrap();
        for _ in 0..2 {
            let c = config(&mut r, n);
            let mut direct: BTreeMap<Config, u128> = BTreeMap::new();
            for a in sys.enumerate_actions(caps.actions).unwrap() {
                *direct.entry(sys.execute(c, &a).unwrap()).or_default() += 1;
            }
            let succ = sys.successors(c, caps.actions).unwrap();
            let counts: BTreeMap<Config, u128> = succ.iter().map(|(d, l)| (*d, l.count)).collect();
            if counts != direct || succ.iter().any(|(d, l)| sys.execute(c, &l.witness).unwrap() != *d) {
                return verdict(false, format!("successor mismatch on system {i}"));
            }
            let s = any_selection(&mut r, &sys);
            let p = permutation(&mut r, n);
            let singles = AsynchronousPlan::new(p.order().iter().map(|&v| vec![v]).collect(), n).unwrap();
            let full = AsynchronousPlan::new(vec![(0..n).collect()], n).unwrap();
            if sys.step_async(c, &s, &singles).unwrap() != sys.step_sequential(c, &s, &p).unwrap()
                || sys.step_async(c, &s, &full).unwrap() != sys.step_parallel(c, &s).unwrap()
            {
                return verdict(false, format!("asynchronous identity fails on system {i}"));
            }
            checked += 1;
        }
    }
    verdict(true, format!("200 systems, {checked} configurations"))
}

fn deterministic_baseline() -> Verdict {
    let mut r = rng(1002);
    let caps = Caps::default();
    for i in 0..100 {
        let n = r.gen_range(1..=8);
        let sys = System::new(grid(&mut r, n, 1, Kinds::Mixed), SelectionScheme::Fixed, UpdateSchedule::Parallel).unwrap();
        let size = 1usize << n;
        let f: Vec<usize> = (0..size)
            .map(|x| (0..n).fold(Config::ZERO, |y, v| y.with(v, sys.choices(v)[0].eval(Config(x as u128)))).0 as usize)
            .collect();
        let mut pre = vec![0u128; size];
        f.iter().for_each(|&y| pre[y] += 1);
        let fixed = (0..size).filter(|&x| f[x] == x).count() as u128;
        let gardens = pre.iter().filter(|&&p| p == 0).count() as u128;
        if analysis::global_counts(&sys, GlobalCount::FixedPoints, &caps).unwrap() != fixed
            || analysis::global_counts(&sys, GlobalCount::Gardens, &caps).unwrap() != gardens
        {
            return verdict(false, format!("global counts differ on system {i}"));
        }
        for x in 0..size {
            // rho shape: first repeat of the orbit
            let mut seen = vec![usize::MAX; size];
            let (mut y, mut step) = (x, 0usize);
            while seen[y] == usize::MAX {
                seen[y] = step;
                y = f[y];
                step += 1;
            }
            let (tail, len) = (seen[y] as u64, (step - seen[y]) as u64);
            let c = Config(x as u128);
            let min = analysis::cycles(&sys, c, CycleMode::MinLen, &caps).unwrap().as_length().unwrap();
            if analysis::tail_length(&sys, c, &caps).unwrap() != tail || min != (tail == 0).then_some(len) {
                return verdict(false, format!("orbit of {} differs on system {i}", c.render(n)));
            }
        }
        for _ in 0..8 {
            let c = config(&mut r, n);
            let got = analysis::predecessors(&sys, c, PredMode::Count, &caps).unwrap().as_count();
            if got != Some(pre[c.0 as usize]) {
                return verdict(false, format!("predecessor count of {} differs on system {i}", c.render(n)));
            }
        }
    }
    verdict(true, "100 systems, every configuration's orbit")
}

fn with_identity(r: &mut ChaCha8Rng, n: usize, k: usize) -> Vec<Vec<NodeFunction>> {
    let mut g = grid(r, n, k, Kinds::Mixed);
    for (i, row) in g.iter_mut().enumerate() {
        let j = r.gen_range(0..k);
        row[j] = NodeFunction::Pos(i);
    }
    g
}

fn seq_schedule(r: &mut ChaCha8Rng, n: usize, case: usize) -> UpdateSchedule {
    match case % 3 {
        0 => UpdateSchedule::Parallel,
        1 => UpdateSchedule::FixedPermutation(permutation(r, n)),
        _ => UpdateSchedule::PermutationList((0..r.gen_range(1..=2)).map(|_| permutation(r, n)).collect()),
    }
}

fn simulation_embeddings() -> Verdict {
    type Gen = fn(&mut ChaCha8Rng, usize) -> System;
    type Build = fn(&System) -> bfds::Result<Transformed>;
    type Rate = fn(usize, usize) -> u64;
    let gens: [(&str, Gen, Build, Rate); 7] = [
        (
            "async-to-parallel",
            |r, _| {
                let (n, k) = (r.gen_range(1..=4), r.gen_range(1..=3));
                System::new(grid(r, n, k, Kinds::Mixed), SelectionScheme::Individual, UpdateSchedule::Asynchronous).unwrap()
            },
            transforms::async_to_parallel,
            |n, _| n as u64,
        ),
        (
            "parallel-to-async",
            |r, _| {
                let (n, k) = (r.gen_range(1..=4), r.gen_range(1..=3));
                System::new(with_identity(r, n, k), SelectionScheme::Individual, UpdateSchedule::Parallel).unwrap()
            },
            transforms::parallel_to_async,
            |_, _| 1,
        ),
        (
            "parallel-to-sequential",
            |r, _| {
                let (n, k) = (r.gen_range(1..=4), r.gen_range(1..=3));
                let sel = common::selection(r, n);
                System::new(grid(r, n, k, Kinds::Mixed), sel, UpdateSchedule::Parallel).unwrap()
            },
            transforms::parallel_to_sequential,
            |_, _| 1,
        ),
        (
            "sequential-to-parallel",
            |r, _| {
                let (n, k) = (r.gen_range(1..=4), r.gen_range(1..=3));
                let p = permutation(r, n);
                System::new(grid(r, n, k, Kinds::Mixed), SelectionScheme::Coordinated, UpdateSchedule::FixedPermutation(p))
                    .unwrap()
            },
            transforms::sequential_to_parallel,
            |n, _| n as u64 + 1,
        ),
        (
            "permutation-list-to-parallel",
            |r, _| {
                // target state space grows too fast beyond this size
                let k = r.gen_range(1..=3);
                let (n, l) = (r.gen_range(1..=if k == 3 { 2 } else { 3 }), r.gen_range(1..=2));
                let ps = (0..l).map(|_| permutation(r, n)).collect();
                System::new(grid(r, n, k, Kinds::Mixed), SelectionScheme::Coordinated, UpdateSchedule::PermutationList(ps))
                    .unwrap()
            },
            transforms::permlist_to_parallel,
            |n, _| n as u64 + 1,
        ),
        (
            "k-choice-to-3-choice",
            |r, case| {
                let (n, k) = (r.gen_range(1..=4), r.gen_range(1..=3));
                let sched = seq_schedule(r, n, case);
                System::new(grid(r, n, k, Kinds::Mixed), SelectionScheme::Coordinated, sched).unwrap()
            },
            transforms::kchoice_to_3choice,
            |_, k| k as u64 + 1,
        ),
        (
            "negation-elimination",
            |r, case| {
                let (n, k) = (r.gen_range(1..=4), r.gen_range(1..=3));
                let sched = seq_schedule(r, n, case);
                let sel = common::selection(r, n);
                System::new(grid(r, n, k, Kinds::Unary), sel, sched).unwrap()
            },
            transforms::eliminate_negation,
            |_, _| 1,
        ),
    ];
    let caps = Caps::default();
    let mut r = rng(1003);
    let mut failures = Vec::new();
    let mut explained = true;
    for (name, gen, build, rate) in gens {
        let mut bad = 0;
        for case in 0..30 {
            let src = gen(&mut r, case);
            let t = build(&src).unwrap();
            let rep = match verify_embedding(&src, &t.system, &t.embedding, u64::MAX, &caps) {
                Ok(rep) => rep,
                Err(e) => {
                    bad += 1;
                    explained = false;
                    failures.push(format!("{name}: {e}"));
                    continue;
                }
            };
            let within = rep.expansion.is_none_or(|e| e <= Ratio::from_integer(rate(src.n(), src.k())));
            if !(rep.is_embedding && within) {
                bad += 1;
                let self_negating = (0..src.n()).any(|i| src.choices(i).contains(&NodeFunction::Neg(i)));
                explained &= name == "negation-elimination" && src.schedule().is_sequential() && self_negating;
            }
        }
        if bad > 0 {
            failures.push(format!("{name} {bad}/30"));
        }
    }
    if failures.is_empty() {
        verdict(true, "7 constructions x 30 instances")
    } else {
        let why = if explained { "all on sequential self-negation" } else { "UNEXPECTED" };
        verdict(false, format!("non-embeddings: {} ({why})", failures.join(", ")))
    }
}

fn sat(phi: &CnfFormula) -> bool {
    phi.brute_force().unwrap().is_some()
}

fn sat_gadgets() -> Verdict {
    let caps = Caps::default();
    let mut r = rng(1004);
    let family3: Vec<CnfFormula> = (0..50)
        .map(|_| {
            let (v, m) = (r.gen_range(1..=4), r.gen_range(1..=4));
            cnf(&mut r, v, m, 3)
        })
        .collect();
    let family2: Vec<CnfFormula> = (0..50)
        .map(|_| {
            let (v, m) = (r.gen_range(1..=4), r.gen_range(1..=4));
            cnf(&mut r, v, m, 2)
        })
        .collect();
    let sat_count = family3.iter().filter(|p| sat(p)).count();
    for phi in &family3 {
        let want = sat(phi);
        for inst in [reduce_3sat_unary_t3(phi).unwrap(), reduce_3sat_k3_t2(phi).unwrap()] {
            if !verify_reduction(&inst, want, &caps).unwrap().agree {
                return verdict(false, format!("gadget disagrees on {phi}"));
            }
        }
    }
    for phi in &family2 {
        if !verify_reduction(&reduce_2sat_t2(phi).unwrap(), sat(phi), &caps).unwrap().agree {
            return verdict(false, format!("2-literal gadget disagrees on {phi}"));
        }
    }
    for _ in 0..30 {
        let n = r.gen_range(1..=5);
        let sys = System::new(grid(&mut r, n, 2, Kinds::Unary), SelectionScheme::Individual, UpdateSchedule::Parallel).unwrap();
        for c in Config::all(n) {
            let two = &layers(&sys, c, 2, &caps).unwrap()[2];
            for d in Config::all(n) {
                let phi = extract_2cnf(&sys, c, d).unwrap();
                if phi.solve_2sat().unwrap().is_some() != two.contains(&d) {
                    return verdict(false, "two-step formula disagrees with BFS");
                }
            }
        }
    }
    verdict(true, format!("50 + 50 formulas ({sat_count} of the 3-literal ones satisfiable), 30 extraction systems"))
}

fn counting_gadget() -> Verdict {
    let caps = Caps::default();
    let mut r = rng(1005);
    let (mut equal, mut two_step_equal, mut over_budget) = (0, 0, 0);
    for _ in 0..30 {
        let (v, m) = (r.gen_range(1..=4), r.gen_range(1..=4));
        let phi = cnf(&mut r, v, m, 3);
        let models = phi.count_models().unwrap() as u128;
        let inst = reduce_parsimonious_count(&phi).unwrap();
        match analysis::count_simple_paths(&inst.system, inst.start, inst.target, &caps) {
            Ok(c) if c == models => equal += 1,
            Ok(_) => {}
            Err(e) if e.is_resource() => over_budget += 1,
            Err(e) => panic!("{e}"),
        }
        if analysis::count_paths_of_length(&inst.system, inst.start, inst.target, 2, &caps).unwrap() == models {
            two_step_equal += 1;
        }
    }
    verdict(
        equal == 30,
        format!(
            "simple paths = models on {equal}/30 ({over_budget} over budget); two-step paths = models on {two_step_equal}/30"
        ),
    )
}

fn coordinated_gadget() -> Verdict {
    let caps = Caps::default();
    let mut r = rng(1006);
    for _ in 0..10 {
        let (v, m) = (r.gen_range(1..=2), r.gen_range(1..=2));
        let phi = cnf(&mut r, v, m, 3);
        let inst = reduce_3sat_coordinated(&phi).unwrap();
        let steps = 2 * v + 3;
        let ls = layers(&inst.system, inst.start, steps as u64 + 1, &caps).unwrap();
        let hits: Vec<usize> = (0..ls.len()).filter(|&t| ls[t].contains(&inst.target)).collect();
        let want: Vec<usize> = if sat(&phi) { vec![steps] } else { vec![] };
        if hits != want {
            return verdict(false, format!("target depths {hits:?} on {phi}"));
        }
    }
    verdict(true, "10 formulas")
}

fn graph_isomorphism() -> Verdict {
    let caps = Caps::default();
    let mut pairs = 0;
    for n in 1..=4 {
        let all = SimpleGraph::all(n);
        for g in &all {
            for h in &all {
                let inst = reduce_graph_iso(g, h).unwrap();
                if !verify_reduction(&inst, g.is_isomorphic(h), &caps).unwrap().agree {
                    return verdict(false, format!("disagreement on\n{g}{h}"));
                }
                pairs += 1;
            }
        }
    }
    verdict(true, format!("{pairs} graph pairs"))
}

fn structural_generators() -> Verdict {
    let caps = Caps::default();
    for n in [4, 5] {
        let sys = build_near_connected(n).unwrap();
        let (zero, full) = (Config::ZERO, Config::from_bits(&vec![true; n]));
        let mixed: Vec<Config> = Config::all(n).filter(|&c| c != zero && c != full).collect();
        for &c in &mixed {
            let reach = reachable_set(&sys, c, u64::MAX, &caps).unwrap();
            if !mixed.iter().all(|d| reach.contains(d)) {
                return verdict(false, format!("mixed class split for n = {n}"));
            }
        }
        if [zero, full].iter().any(|&f| sys.successor_set(f, caps.actions).unwrap() != [f]) {
            return verdict(false, "constant configurations not fixed");
        }
    }
    for n in 2..=4 {
        let g = build_graph(&build_cyclic_connected(n).unwrap(), &caps).unwrap();
        for c in Config::all(n) {
            let mut seen = vec![c];
            let mut stack = vec![c];
            while let Some(x) = stack.pop() {
                for y in g.targets(x) {
                    if !seen.contains(&y) {
                        seen.push(y);
                        stack.push(y);
                    }
                }
            }
            if seen.len() != 1 << n {
                return verdict(false, format!("cyclic generator not strongly connected for n = {n}"));
            }
        }
    }
    verdict(true, "near-connected n = 4, 5; cyclic n = 2..4")
}

/// A target that is reachable half the time: the image under a random order.
fn biased_target(r: &mut ChaCha8Rng, sys: &System, c: Config) -> Config {
    if r.gen_bool(0.5) {
        let s = any_selection(r, sys);
        sys.step_sequential(c, &s, &permutation(r, sys.n())).unwrap()
    } else {
        config(r, sys.n())
    }
}

fn permutation_existence() -> Verdict {
    let mut r = rng(1009);
    let mut yes = 0;
    for _ in 0..500 {
        let n = r.gen_range(1..=7);
        let sys = System::new(grid(&mut r, n, 1, Kinds::Unary), SelectionScheme::Fixed, UpdateSchedule::ArbitraryPermutation)
            .unwrap();
        let c = config(&mut r, n);
        let d = biased_target(&mut r, &sys, c);
        let one = FunctionSelection(vec![0; n]);
        let brute = Permutation::all(n).iter().any(|p| sys.step_sequential(c, &one, p).unwrap() == d);
        match perm_exists_1choice_unary(&sys, c, d).unwrap() {
            Some(p) if brute && sys.step_sequential(c, &one, &p).unwrap() == d => yes += 1,
            None if !brute => {}
            _ => return verdict(false, "single-choice solver disagrees"),
        }
    }
    for _ in 0..200 {
        let n = r.gen_range(1..=6);
        let k = r.gen_range(1..=3);
        let sys =
            System::new(grid(&mut r, n, k, Kinds::Unary), SelectionScheme::Coordinated, UpdateSchedule::ArbitraryPermutation)
                .unwrap();
        let c = config(&mut r, n);
        let d = biased_target(&mut r, &sys, c);
        let perms = Permutation::all(n);
        let feasible: Vec<usize> = (0..k)
            .filter(|&j| perms.iter().any(|p| sys.step_sequential(c, &FunctionSelection(vec![j; n]), p).unwrap() == d))
            .collect();
        let ok = match perm_exists_coordinated(&sys, c, d).unwrap() {
            Some((p, j)) => {
                feasible.contains(&j) && sys.step_sequential(c, &FunctionSelection(vec![j; n]), &p).unwrap() == d
            }
            None => feasible.is_empty(),
        };
        if !ok {
            return verdict(false, "coordinated solver disagrees");
        }
    }
    verdict(true, format!("500 single-choice ({yes} reachable) + 200 coordinated instances"))
}

fn robustness() -> Verdict {
    let caps = Caps::default();
    let mut r = rng(1010);
    let (mut pairs, mut robust) = (0, 0);
    for i in 0..300 {
        let n = r.gen_range(1..=5);
        let k = r.gen_range(1..=2);
        let sys = System::new(grid(&mut r, n, k, Kinds::RobustSafe), SelectionScheme::Individual, UpdateSchedule::ArbitraryPermutation)
            .unwrap();
        for _ in 0..4 {
            let c = config(&mut r, n);
            let d = biased_target(&mut r, &sys, c);
            if c == d {
                continue;
            }
            let brute = robust_reach_bruteforce(&sys, c, d, 1, &caps).unwrap();
            if robust_one_step_fast(&sys, c, d, 2).unwrap() != brute {
                return verdict(false, format!("fast test disagrees on system {i}"));
            }
            pairs += 1;
            robust += brute as usize;
        }
        if i < 30 {
            for c in Config::all(n) {
                for d in Config::all(n) {
                    if robust_reach_bruteforce(&sys, c, d, 0, &caps).unwrap() != (c == d) {
                        return verdict(false, "zero-step base case wrong");
                    }
                }
            }
        }
    }
    verdict(true, format!("300 systems, {pairs} pairs ({robust} robust), zero-step cases on 30"))
}

fn permlist_gadget() -> Verdict {
    let caps = Caps::default();
    let mut r = rng(1011);
    let (mut sat_seen, mut unsat_seen) = (0, 0);
    let unsat = [
        CnfFormula::from_ints(1, &[&[1, 1, 1], &[-1, -1, -1]]).unwrap(),
        CnfFormula::from_ints(2, &[&[1, 1, 2], &[1, 1, -2], &[-1, -1, 2], &[-1, -1, -2]]).unwrap(),
        CnfFormula::from_ints(
            3,
            &[&[1, 2, 3], &[1, 2, -3], &[1, -2, 3], &[1, -2, -3], &[-1, 2, 3], &[-1, 2, -3], &[-1, -2, 3], &[-1, -2, -3]],
        )
        .unwrap(),
    ];
    let random = (0..10).map(|_| {
        let (v, m) = (r.gen_range(1..=3), r.gen_range(1..=3));
        cnf(&mut r, v, m, 3)
    });
    let formulas: Vec<CnfFormula> = random.chain(unsat).collect();
    for phi in &formulas {
        let inst = reduce_3sat_permlist(phi).unwrap();
        let reached = reaches_within(&inst.system, inst.start, inst.target, 2, &caps).unwrap();
        let want = sat(phi);
        if reached != want {
            return verdict(false, format!("sat = {want}, reached = {reached} on {phi}"));
        }
        if want {
            sat_seen += 1;
        } else {
            unsat_seen += 1;
        }
    }
    verdict(true, format!("{} formulas ({sat_seen} satisfiable, {unsat_seen} not)", formulas.len()))
}

fn cli_round_trip() -> Verdict {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden");
    let mut n = 0;
    for entry in std::fs::read_dir(&dir).unwrap() {
        let p = entry.unwrap().path();
        if p.extension().is_some_and(|e| e == "sys") {
            let text = std::fs::read_to_string(&p).unwrap();
            if SystemFile::parse(&text).map(|f| f.emit()).as_deref() != Ok(text.as_str()) {
                return verdict(false, format!("{} does not round-trip", p.display()));
            }
            n += 1;
        }
    }
    let swap = dir.join("swap.sys");
    let swap = swap.to_str().unwrap();
    let code = |args: &[&str], caps: Option<&str>| {
        let mut cmd = Command::new(env!("CARGO_BIN_EXE_bfds"));
        cmd.args(args).env_remove(bfds_cli::CAPS_ENV);
        if let Some(c) = caps {
            cmd.env(bfds_cli::CAPS_ENV, c);
        }
        cmd.output().unwrap().status.code()
    };
    let codes = [
        code(&["analyze", "reachability", swap, "--from", "00", "--to", "11"], None),
        code(&["analyze", "reachability", swap, "--from", "000", "--to", "11"], None),
        code(&["graph", swap], Some("states=2")),
    ];
    verdict(n >= 20 && codes == [Some(0), Some(2), Some(3)], format!("{n} golden files, exit codes {codes:?}"))
}

type Criterion = (u8, &'static str, fn() -> Verdict);

#[test]
fn acceptance() {
    let criteria: [Criterion; 12] = [
        (1, "semantics coherence", semantics_coherence),
        (2, "deterministic baseline", deterministic_baseline),
        (3, "simulation embeddings", simulation_embeddings),
        (4, "satisfiability gadgets", sat_gadgets),
        (5, "model-counting gadget", counting_gadget),
        (6, "coordinated exact-time gadget", coordinated_gadget),
        (7, "graph isomorphism", graph_isomorphism),
        (8, "structural generators", structural_generators),
        (9, "permutation existence", permutation_existence),
        (10, "robustness", robustness),
        (11, "permutation-list gadget", permlist_gadget),
        (12, "CLI round trip", cli_round_trip),
    ];
    // criteria that fail by construction; see the notes at the top of this file
    let known_failures = [3u8, 5];
    let results: Vec<(u8, &str, Verdict, f64)> = std::thread::scope(|s| {
        let handles: Vec<_> = criteria
            .iter()
            .map(|&(id, name, run)| {
                s.spawn(move || {
                    let t = Instant::now();
                    let v = run();
                    (id, name, v, t.elapsed().as_secs_f64())
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().unwrap()).collect()
    });
    let mut out = std::io::stdout().lock();
    for (id, name, v, secs) in &results {
        let tag = if v.pass { "PASS" } else { "FAIL" };
        let _ = writeln!(out, "{tag} {id:>2} {name}: {} [{secs:.1}s]", v.detail);
    }
    drop(out);
    for (id, name, v, _) in &results {
        assert_eq!(v.pass, !known_failures.contains(id), "criterion {id} ({name}): {}", v.detail);
    }
    // the known failures must fail for the documented reason only
    assert!(!results[2].2.detail.contains("UNEXPECTED"), "{}", results[2].2.detail);
}
