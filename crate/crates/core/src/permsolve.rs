//! Robustness against adversarial update orders, and existence of an
//! update order realizing a one-step transition.

use std::collections::{BTreeMap, BTreeSet};

use rayon::prelude::*;
use rustc_hash::FxHashMap;

use crate::caps::Caps;
use crate::config::Config;
use crate::error::{Error, Result};
use crate::system::{
    FunctionSelection, NodeFunction, Permutation, Realization, SelectionScheme, Sink, System, UpdateSchedule,
};

/// What one node's unary function demands of the update order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum OrderConstraint {
    /// Node `.0` must be updated before node `.1`.
    Before(usize, usize),
    /// The node reaches its target under every order.
    ForcedTrue(usize),
    /// The node misses its target under every order.
    ForcedFalse,
}

/// The constraint node `i` imposes when it updates with unary `f`.
pub fn order_constraint(f: &NodeFunction, i: usize, c: Config, d: Config) -> Result<OrderConstraint> {
    let (src, negated) = match *f {
        NodeFunction::Pos(s) => (s, false),
        NodeFunction::Neg(s) => (s, true),
        _ => return Err(Error::Model(format!("node {} has a non-unary function", i + 1))),
    };
    let want = d.bit(i);
    // The value read from the old and the new state of the source.
    let old = c.bit(src) ^ negated;
    let new = d.bit(src) ^ negated;
    Ok(if src == i || old == new {
        // Self-reads always see the old value; stable sources read the same either way.
        if old == want {
            OrderConstraint::ForcedTrue(i)
        } else {
            OrderConstraint::ForcedFalse
        }
    } else if new == want {
        OrderConstraint::Before(src, i)
    } else {
        OrderConstraint::Before(i, src)
    })
}

fn require_unary(sys: &System) -> Result<()> {
    if !sys.all_functions().all(NodeFunction::is_unary) {
        return Err(Error::Model("permutation existence needs unary functions".into()));
    }
    Ok(())
}

/// Orders the nodes so every `Before` constraint holds by repeatedly
/// removing indices that occur only as sources (placed first) or only as
/// targets (placed last), smallest index first. `None` if a cycle remains.
pub fn eliminate(n: usize, constraints: &[(usize, usize)]) -> Option<Permutation> {
    let mut live: BTreeSet<(usize, usize)> = constraints.iter().copied().collect();
    let mut front = Vec::new();
    let mut back = Vec::new();
    let mut placed = vec![false; n];
    loop {
        let mut as_src = BTreeSet::new();
        let mut as_dst = BTreeSet::new();
        for &(a, b) in &live {
            as_src.insert(a);
            as_dst.insert(b);
        }
        if live.is_empty() {
            break;
        }
        if let Some(&i) = as_src.iter().find(|i| !as_dst.contains(i)) {
            front.push(i);
            placed[i] = true;
            live.retain(|&(a, _)| a != i);
        } else if let Some(&j) = as_dst.iter().find(|j| !as_src.contains(j)) {
            back.push(j);
            placed[j] = true;
            live.retain(|&(_, b)| b != j);
        } else {
            return None;
        }
    }
    let mut order = front;
    order.extend((0..n).filter(|&v| !placed[v]));
    order.extend(back.into_iter().rev());
    Some(Permutation::new(order).expect("every node placed once"))
}

/// Single-choice unary systems: an update order realizing `c -> d`, if any.
pub fn perm_exists_1choice_unary(sys: &System, c: Config, d: Config) -> Result<Option<Permutation>> {
    if sys.k() != 1 {
        return Err(Error::Model("expected a single-choice system".into()));
    }
    require_unary(sys)?;
    let mut before = Vec::new();
    for i in 0..sys.n() {
        match order_constraint(sys.function(i, 0), i, c, d)? {
            OrderConstraint::ForcedFalse => return Ok(None),
            OrderConstraint::ForcedTrue(_) => {}
            OrderConstraint::Before(a, b) => before.push((a, b)),
        }
    }
    let Some(p) = eliminate(sys.n(), &before) else { return Ok(None) };
    debug_assert_eq!(sys.step_sequential(c, &FunctionSelection(vec![0; sys.n()]), &p).ok(), Some(d));
    Ok(Some(p))
}

/// Coordinated unary systems: the first column admitting an order.
pub fn perm_exists_coordinated(sys: &System, c: Config, d: Config) -> Result<Option<(Permutation, usize)>> {
    require_unary(sys)?;
    for j in 0..sys.k() {
        let column = (0..sys.n()).map(|i| vec![sys.function(i, j).clone()]).collect();
        let one = System::new(column, SelectionScheme::Fixed, UpdateSchedule::ArbitraryPermutation)?;
        if let Some(p) = perm_exists_1choice_unary(&one, c, d)? {
            return Ok(Some((p, j)));
        }
    }
    Ok(None)
}

/// One labeled arc: choosing `choice` for `label` forces `from` before `to`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct LabeledArc {
    pub from: usize,
    pub to: usize,
    pub label: usize,
    pub choice: usize,
}

/// Nodes still undecided after pruning, with their order-forcing options.
#[derive(Clone, Debug, Default)]
pub struct SelectionConstraintGraph {
    pub nodes: Vec<usize>,
    pub arcs: Vec<LabeledArc>,
    /// Choice fixed during pruning for every settled node.
    pub settled: BTreeMap<usize, usize>,
}

/// Prunes nodes that some choice satisfies under every order and collects
/// the order-forcing options of the rest. `None` if a node has no usable choice.
pub fn selection_constraint_graph(sys: &System, c: Config, d: Config) -> Result<Option<SelectionConstraintGraph>> {
    require_unary(sys)?;
    let mut g = SelectionConstraintGraph::default();
    for i in 0..sys.n() {
        let mut arcs = Vec::new();
        let mut free = None;
        for (j, f) in sys.choices(i).iter().enumerate() {
            match order_constraint(f, i, c, d)? {
                OrderConstraint::ForcedTrue(_) => {
                    free = Some(j);
                    break;
                }
                OrderConstraint::ForcedFalse => {}
                OrderConstraint::Before(a, b) => arcs.push(LabeledArc { from: a, to: b, label: i, choice: j }),
            }
        }
        if let Some(j) = free {
            g.settled.insert(i, j);
        } else if arcs.is_empty() {
            return Ok(None);
        } else if c.bit(i) == d.bit(i) {
            // An unchanged node never constrains others, so any own arc is safe.
            g.settled.insert(i, arcs[0].choice);
            g.arcs.push(arcs[0]);
        } else {
            g.nodes.push(i);
            g.arcs.extend(arcs);
        }
    }
    Ok(Some(g))
}

/// Individual-selection unary systems: an order and a selection realizing
/// `c -> d`, by exhaustive acyclic arc selection over the pruned graph.
pub fn perm_exists_individual_search(
    sys: &System,
    c: Config,
    d: Config,
    caps: &Caps,
) -> Result<Option<(Permutation, FunctionSelection)>> {
    let Some(g) = selection_constraint_graph(sys, c, d)? else { return Ok(None) };
    let n = sys.n();
    let mut fixed: Vec<(usize, usize)> = g
        .arcs
        .iter()
        .filter(|a| g.settled.contains_key(&a.label))
        .map(|a| (a.from, a.to))
        .collect();
    let options: Vec<Vec<LabeledArc>> =
        g.nodes.iter().map(|&i| g.arcs.iter().filter(|a| a.label == i).copied().collect()).collect();
    let mut chosen = Vec::with_capacity(options.len());
    let mut budget = caps.dfs_budget;
    if !pick(&options, 0, &mut fixed, &mut chosen, n, &mut budget)? {
        return Ok(None);
    }
    let mut sel = vec![0usize; n];
    for (&i, &j) in &g.settled {
        sel[i] = j;
    }
    for a in &chosen {
        sel[a.label] = a.choice;
    }
    let p = eliminate(n, &fixed).expect("chosen arcs are acyclic");
    let sel = FunctionSelection(sel);
    debug_assert_eq!(sys.step_sequential(c, &sel, &p).ok(), Some(d));
    Ok(Some((p, sel)))
}

fn pick(
    options: &[Vec<LabeledArc>],
    at: usize,
    arcs: &mut Vec<(usize, usize)>,
    chosen: &mut Vec<LabeledArc>,
    n: usize,
    budget: &mut u64,
) -> Result<bool> {
    if at == options.len() {
        return Ok(true);
    }
    for &a in &options[at] {
        if *budget == 0 {
            return Err(Error::Budget { budget: 0 });
        }
        *budget -= 1;
        if reaches(arcs, a.to, a.from, n) {
            continue;
        }
        arcs.push((a.from, a.to));
        chosen.push(a);
        if pick(options, at + 1, arcs, chosen, n, budget)? {
            return Ok(true);
        }
        arcs.pop();
        chosen.pop();
    }
    Ok(false)
}

/// Whether `to` is reachable from `from` (including `from == to`).
fn reaches(arcs: &[(usize, usize)], from: usize, to: usize, n: usize) -> bool {
    let mut seen = vec![false; n];
    let mut stack = vec![from];
    while let Some(v) = stack.pop() {
        if v == to {
            return true;
        }
        if std::mem::replace(&mut seen[v], true) {
            continue;
        }
        stack.extend(arcs.iter().filter(|&&(a, _)| a == v).map(|&(_, b)| b));
    }
    false
}

/// Successor sets of `c`, one per realization.
fn per_realization(sys: &System, c: Config, caps: &Caps) -> Result<Vec<BTreeSet<Config>>> {
    struct BySchedule(BTreeMap<Realization, BTreeSet<Config>>);
    impl Sink for BySchedule {
        fn add(&mut self, d: Config, _count: u128, _sel: &[usize], real: &Realization) {
            self.0.entry(real.clone()).or_default().insert(d);
        }
    }
    let mut sink = BySchedule(BTreeMap::new());
    sys.for_each_successor(c, caps.actions, &mut sink)?;
    Ok(sink.0.into_values().collect())
}

/// Robust reachability by exhaustive alternation: every realization at each
/// step admits some selection continuing to `d` in the remaining steps.
pub fn robust_reach_bruteforce(sys: &System, c: Config, d: Config, t: u64, caps: &Caps) -> Result<bool> {
    if *sys.schedule() == UpdateSchedule::Asynchronous {
        return Err(Error::Unsupported("robustness is defined for ordered schedules".into()));
    }
    let mut memo: FxHashMap<(Config, u64), bool> = FxHashMap::default();
    robust_rec(sys, c, d, t, caps, &mut memo)
}

fn robust_rec(
    sys: &System,
    c: Config,
    d: Config,
    t: u64,
    caps: &Caps,
    memo: &mut FxHashMap<(Config, u64), bool>,
) -> Result<bool> {
    if t == 0 {
        return Ok(c == d);
    }
    if let Some(&v) = memo.get(&(c, t)) {
        return Ok(v);
    }
    if memo.len() as u128 >= caps.states {
        return Err(Error::StateCap { count: memo.len() as u128 + 1, cap: caps.states });
    }
    let mut ok = true;
    'real: for succ in per_realization(sys, c, caps)? {
        for &e in &succ {
            if robust_rec(sys, e, d, t - 1, caps, memo)? {
                continue 'real;
            }
        }
        ok = false;
        break;
    }
    memo.insert((c, t), ok);
    Ok(ok)
}

/// A partial update order: `before` run ahead of the node, `after` behind it.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Split {
    pub before: BTreeSet<usize>,
    pub after: BTreeSet<usize>,
}

/// Per node, the partial orders under which every choice misses the target.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RobustWitnessSet {
    pub families: Vec<Vec<Split>>,
}

impl RobustWitnessSet {
    pub fn is_robust(&self) -> bool {
        self.families.iter().all(Vec::is_empty)
    }
}

/// Upper bound on each family's size, `n * max(2^q, n)^k`.
pub fn witness_bound(n: usize, k: usize, q: usize) -> u128 {
    let base = (1u128 << q.min(100)).max(n as u128);
    (0..k).fold(n as u128, |a, _| a.saturating_mul(base))
}

/// One-step robustness under arbitrary update orders, without enumerating
/// orders. Functions must be tables of fan-in at most `q`, unary, constant,
/// or unbounded OR/AND.
pub fn robust_one_step_fast(sys: &System, c: Config, d: Config, q: usize) -> Result<bool> {
    Ok(robust_witness_sets(sys, c, d, q)?.is_robust())
}

pub fn robust_witness_sets(sys: &System, c: Config, d: Config, q: usize) -> Result<RobustWitnessSet> {
    if *sys.schedule() != UpdateSchedule::ArbitraryPermutation || *sys.selection() != SelectionScheme::Individual {
        return Err(Error::Model("the one-step test needs arbitrary orders and individual selection".into()));
    }
    for f in sys.all_functions() {
        if let NodeFunction::Table { srcs, .. } = f {
            if srcs.len() > q {
                return Err(Error::Unsupported(format!("table of fan-in {} exceeds q = {q}", srcs.len())));
            }
        }
    }
    let families = (0..sys.n()).into_par_iter().map(|z| node_family(sys, z, c, d)).collect();
    Ok(RobustWitnessSet { families })
}

/// Splits over `z`'s changing inputs under which every choice for `z` fails,
/// assuming all nodes updated earlier reached their targets.
fn node_family(sys: &System, z: usize, c: Config, d: Config) -> Vec<Split> {
    let beta = d.bit(z);
    let mut family = vec![Split { before: BTreeSet::new(), after: BTreeSet::new() }];
    for f in sys.choices(z) {
        let Some(wf) = failing_splits(f, z, c, d, beta) else {
            // This choice succeeds under every order.
            return Vec::new();
        };
        let mut next = BTreeSet::new();
        for a in &family {
            for b in &wf {
                let before: BTreeSet<usize> = a.before.union(&b.before).copied().collect();
                let after: BTreeSet<usize> = a.after.union(&b.after).copied().collect();
                if before.is_disjoint(&after) {
                    next.insert(Split { before, after });
                }
            }
        }
        family = next.into_iter().collect();
        if family.is_empty() {
            break;
        }
    }
    family
}

/// Cubes covering the orders on which `f` misses `beta`; `None` when `f`
/// hits `beta` under every order.
fn failing_splits(f: &NodeFunction, z: usize, c: Config, d: Config, beta: bool) -> Option<Vec<Split>> {
    // Inputs that read differently depending on the order.
    let moving = |s: usize| s != z && c.bit(s) != d.bit(s);
    let single = |before: &[usize], after: &[usize]| Split {
        before: before.iter().copied().collect(),
        after: after.iter().copied().collect(),
    };
    let always_fails = Some(vec![single(&[], &[])]);
    match f {
        NodeFunction::Or(srcs) | NodeFunction::And(srcs) => {
            let is_or = matches!(f, NodeFunction::Or(_));
            // OR dominated by 1, AND dominated by 0.
            let dom = is_or;
            if srcs.iter().any(|&s| !moving(s) && c.bit(s) == dom) {
                return if dom == beta { None } else { always_fails };
            }
            let mv: BTreeSet<usize> = srcs.iter().copied().filter(|&s| moving(s)).collect();
            if mv.is_empty() {
                return if dom == beta { always_fails } else { None };
            }
            // A moving input reads its new value when placed before `z`.
            let falls: Vec<usize> = mv.iter().copied().filter(|&s| c.bit(s) == dom).collect();
            let rises: Vec<usize> = mv.iter().copied().filter(|&s| d.bit(s) == dom).collect();
            if beta == dom {
                // Fails when no input reads the dominating value.
                Some(vec![single(&falls, &rises)])
            } else {
                // Fails when some input reads the dominating value.
                let mut out: Vec<Split> = rises.iter().map(|&s| single(&[s], &[])).collect();
                out.extend(falls.iter().map(|&s| single(&[], &[s])));
                Some(out)
            }
        }
        _ => {
            let mv: Vec<usize> = f.sources().into_iter().filter(|&s| moving(s)).collect::<BTreeSet<_>>().into_iter().collect();
            let mut out = Vec::new();
            for mask in 0u32..1 << mv.len() {
                let (mut before, mut after) = (Vec::new(), Vec::new());
                let mut view = c;
                for (b, &s) in mv.iter().enumerate() {
                    if mask >> b & 1 == 1 {
                        before.push(s);
                        view = view.with(s, d.bit(s));
                    } else {
                        after.push(s);
                    }
                }
                if f.eval(view) != beta {
                    out.push(single(&before, &after));
                }
            }
            if out.is_empty() {
                None
            } else {
                Some(out)
            }
        }
    }
}
