mod common;

use bfds::transforms::*;
use bfds::{Caps, NodeFunction, SelectionScheme, System, UpdateSchedule};
use common::*;
use num_rational::Ratio;
use rand::Rng;

fn check(src: &System, t: &Transformed, rate: u64) {
    let r = verify_embedding(src, &t.system, &t.embedding, u64::MAX, &Caps::default()).unwrap();
    assert!(r.is_embedding, "{src:?}\n{r:?}");
    if let Some(e) = r.expansion {
        assert!(e <= Ratio::from_integer(rate), "expansion {e} > {rate} for {src:?}");
    }
}

#[test]
fn async_to_parallel_random() {
    let mut r = rng(1);
    for _ in 0..20 {
        let n = r.gen_range(1..=4);
        let k = r.gen_range(1..=2);
        let s = system(&mut r, n, k, Kinds::Mixed, SelectionScheme::Individual, UpdateSchedule::Asynchronous);
        let t = async_to_parallel(&s).unwrap();
        assert_eq!((t.system.n(), t.system.k()), (n, k + 1));
        check(&s, &t, n as u64);
    }
}

#[test]
fn parallel_to_async_random() {
    let mut r = rng(2);
    for _ in 0..20 {
        let n = r.gen_range(1..=4);
        let k = r.gen_range(2..=3);
        let mut g = grid(&mut r, n, k, Kinds::Mixed);
        for (i, row) in g.iter_mut().enumerate() {
            let j = r.gen_range(0..k);
            row[j] = NodeFunction::Pos(i);
        }
        let s = System::new(g, SelectionScheme::Individual, UpdateSchedule::Parallel).unwrap();
        let t = parallel_to_async(&s).unwrap();
        assert_eq!((t.system.n(), t.system.k()), (n, k - 1));
        check(&s, &t, 1);
    }
}

#[test]
fn parallel_to_sequential_random() {
    let mut r = rng(3);
    for _ in 0..20 {
        let n = r.gen_range(1..=4);
        let k = r.gen_range(1..=3);
        let sel = selection(&mut r, n);
        let s = system(&mut r, n, k, Kinds::Mixed, sel, UpdateSchedule::Parallel);
        let t = parallel_to_sequential(&s).unwrap();
        check(&s, &t, 1);
    }
}

#[test]
fn sequential_to_parallel_random() {
    let mut r = rng(4);
    for _ in 0..20 {
        let n = r.gen_range(1..=3);
        let k = r.gen_range(1..=2);
        let p = permutation(&mut r, n);
        let s = system(&mut r, n, k, Kinds::Mixed, SelectionScheme::Coordinated, UpdateSchedule::FixedPermutation(p));
        let t = sequential_to_parallel(&s).unwrap();
        assert_eq!(t.system.n(), k * (n + 1) * (n + 1) + 1);
        check(&s, &t, n as u64 + 1);
    }
}

#[test]
fn permlist_to_parallel_random() {
    let mut r = rng(5);
    for _ in 0..20 {
        let n = r.gen_range(1..=3);
        let k = r.gen_range(1..=2);
        let l = r.gen_range(1..=2);
        let ps = (0..l).map(|_| permutation(&mut r, n)).collect();
        let s = system(&mut r, n, k, Kinds::Mixed, SelectionScheme::Coordinated, UpdateSchedule::PermutationList(ps));
        let t = permlist_to_parallel(&s).unwrap();
        assert_eq!(t.system.n(), (k * l + n) * (n + 1) + 1);
        assert_eq!(t.system.k(), 2 * k * l);
        check(&s, &t, n as u64 + 1);
    }
}

#[test]
fn kchoice_to_3choice_random() {
    let mut r = rng(6);
    for case in 0..30 {
        let n = r.gen_range(1..=3);
        let k = r.gen_range(1..=3);
        let sched = match case % 3 {
            0 => UpdateSchedule::Parallel,
            1 => UpdateSchedule::FixedPermutation(permutation(&mut r, n)),
            _ => UpdateSchedule::PermutationList((0..2).map(|_| permutation(&mut r, n)).collect()),
        };
        let s = system(&mut r, n, k, Kinds::Mixed, SelectionScheme::Coordinated, sched);
        let t = kchoice_to_3choice(&s).unwrap();
        assert_eq!(t.system.k(), 3);
        check(&s, &t, k as u64 + 1);
    }
}

#[test]
fn eliminate_negation_random() {
    let mut r = rng(7);
    for case in 0..40 {
        let n = r.gen_range(1..=3);
        let k = r.gen_range(1..=2);
        let sched = match case % 3 {
            0 => UpdateSchedule::Parallel,
            1 => UpdateSchedule::FixedPermutation(permutation(&mut r, n)),
            _ => UpdateSchedule::PermutationList((0..2).map(|_| permutation(&mut r, n)).collect()),
        };
        let sel = selection(&mut r, n);
        let s = system(&mut r, n, k, Kinds::Unary, sel, sched);
        let t = eliminate_negation(&s).unwrap();
        assert!(t.system.all_functions().all(|f| matches!(f, NodeFunction::Pos(_))));
        let self_negating = (0..n).any(|i| s.choices(i).contains(&NodeFunction::Neg(i)));
        let sequential = !matches!(s.schedule(), UpdateSchedule::Parallel);
        if sequential && self_negating {
            continue;
        }
        check(&s, &t, 1);
    }
}

#[test]
fn eliminate_negation_breaks_on_sequential_self_negation() {
    // node 1 flips itself; the shadow pair cannot swap values in sequence
    let s = System::new(
        vec![vec![NodeFunction::Neg(0)]],
        SelectionScheme::Fixed,
        UpdateSchedule::FixedPermutation(bfds::Permutation::identity(1)),
    )
    .unwrap();
    let t = eliminate_negation(&s).unwrap();
    let r = verify_embedding(&s, &t.system, &t.embedding, u64::MAX, &Caps::default()).unwrap();
    assert!(!r.is_embedding);
    let parallel = s.with_model(SelectionScheme::Fixed, UpdateSchedule::Parallel).unwrap();
    check(&parallel, &eliminate_negation(&parallel).unwrap(), 1);
}

#[test]
fn transform_model_checks() {
    let s = System::new(vec![vec![NodeFunction::Pos(0)]], SelectionScheme::Fixed, UpdateSchedule::Parallel).unwrap();
    assert!(async_to_parallel(&s).is_err());
    assert!(sequential_to_parallel(&s).is_err());
    assert!(kchoice_to_3choice(&s).is_err());
    let or = System::new(vec![vec![NodeFunction::Or(vec![0])]], SelectionScheme::Fixed, UpdateSchedule::Parallel).unwrap();
    assert!(matches!(eliminate_negation(&or), Err(bfds::Error::Precondition(_))));
    let no_id = System::new(
        vec![vec![NodeFunction::Neg(0), NodeFunction::Const(true)]],
        SelectionScheme::Individual,
        UpdateSchedule::Parallel,
    )
    .unwrap();
    assert!(matches!(parallel_to_async(&no_id), Err(bfds::Error::Precondition(_))));
}
