//! Exact solvers for the structural questions on configuration graphs.
//!
//! Paths are configuration sequences: parallel arcs with different labels
//! count once. Reachability between a configuration and itself always means
//! a path of length at least one.

use std::collections::VecDeque;

use petgraph::algo::tarjan_scc;
use petgraph::graph::{DiGraph, NodeIndex};
use rustc_hash::{FxHashMap, FxHashSet};

use crate::caps::Caps;
use crate::config::Config;
use crate::error::{Error, Result};
use crate::graph::{build_graph, Explorer};
use crate::system::System;

/// Value part of an answer.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Value {
    Bool(bool),
    Count(u128),
    /// `None` when the quantity does not exist (no path, no cycle).
    Length(Option<u64>),
}

/// A solver answer with an optional witness path.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ProblemAnswer {
    pub value: Value,
    pub witness: Option<Vec<Config>>,
}

impl ProblemAnswer {
    fn plain(value: Value) -> ProblemAnswer {
        ProblemAnswer { value, witness: None }
    }

    pub fn as_bool(&self) -> Option<bool> {
        match self.value {
            Value::Bool(b) => Some(b),
            _ => None,
        }
    }

    pub fn as_count(&self) -> Option<u128> {
        match self.value {
            Value::Count(c) => Some(c),
            _ => None,
        }
    }

    pub fn as_length(&self) -> Option<Option<u64>> {
        match self.value {
            Value::Length(l) => Some(l),
            _ => None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ReachMode {
    Any,
    Within(u64),
    MinLen,
    MaxSimpleLen,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PredMode {
    IsGarden,
    Count,
    /// Some Garden of Eden reaches the configuration in exactly this many steps.
    GardenAt(u64),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CycleMode {
    Point,
    MinLen,
    MaxSimpleLen,
    CountSimpleThrough,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GlobalCount {
    Gardens,
    FixedPoints,
    CompleteFixedPoints,
    Cycles,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FixedPointMode {
    Exists,
    IsFixed(Config),
    IsCompleteFixed(Config),
    CompleteExists,
}

/// Reachability from `c` to `d` in at least one step.
pub fn reachability(sys: &System, c: Config, d: Config, mode: ReachMode, caps: &Caps) -> Result<ProblemAnswer> {
    let mut ex = Explorer::new(sys, caps);
    match mode {
        ReachMode::Any | ReachMode::Within(_) | ReachMode::MinLen => {
            let path = shortest_path(&mut ex, c, d)?;
            let len = path.as_ref().map(|p| p.len() as u64 - 1);
            Ok(match mode {
                ReachMode::Any => ProblemAnswer { value: Value::Bool(path.is_some()), witness: path },
                ReachMode::Within(t) => {
                    let ok = len.is_some_and(|l| l <= t);
                    ProblemAnswer { value: Value::Bool(ok), witness: if ok { path } else { None } }
                }
                _ => ProblemAnswer { value: Value::Length(len), witness: path },
            })
        }
        ReachMode::MaxSimpleLen => {
            let local = Local::closure(&mut ex, c)?;
            let Some(&dst) = local.index.get(&d) else {
                return Ok(ProblemAnswer::plain(Value::Length(None)));
            };
            let src = local.index[&c];
            let allowed = local.co_reachable(dst);
            let r = local.simple_paths(src, dst, &allowed, caps.dfs_budget)?;
            Ok(ProblemAnswer::plain(Value::Length(r.longest)))
        }
    }
}

/// Shortest path of length at least one, as a configuration sequence.
fn shortest_path(ex: &mut Explorer<'_>, c: Config, d: Config) -> Result<Option<Vec<Config>>> {
    let mut parent: FxHashMap<Config, Config> = FxHashMap::default();
    let mut queue = VecDeque::new();
    let rebuild = |parent: &FxHashMap<Config, Config>, last: Config| {
        let mut path = vec![d, last];
        let mut cur = last;
        while parent[&cur] != c {
            cur = parent[&cur];
            path.push(cur);
        }
        path.push(c);
        path.reverse();
        path
    };
    for s in ex.succ(c)?.to_vec() {
        if s == d {
            return Ok(Some(vec![c, d]));
        }
        if s != c && !parent.contains_key(&s) {
            parent.insert(s, c);
            queue.push_back(s);
        }
    }
    let limit = ex.caps().states;
    while let Some(x) = queue.pop_front() {
        for y in ex.succ(x)?.to_vec() {
            if y == d {
                return Ok(Some(rebuild(&parent, x)));
            }
            if y != c && !parent.contains_key(&y) {
                if parent.len() as u128 >= limit {
                    return Err(Error::StateCap { count: parent.len() as u128 + 1, cap: limit });
                }
                parent.insert(y, x);
                queue.push_back(y);
            }
        }
    }
    Ok(None)
}

/// Whether the forward closures of `c` and `d` meet.
pub fn path_intersection(sys: &System, c: Config, d: Config, caps: &Caps) -> Result<bool> {
    let mut ex = Explorer::new(sys, caps);
    let a = ex.closure(c)?;
    let b = ex.closure(d)?;
    Ok(a.iter().any(|x| b.contains(x)))
}

/// Distance from `c` to the nearest configuration that lies on a cycle.
pub fn tail_length(sys: &System, c: Config, caps: &Caps) -> Result<u64> {
    let mut ex = Explorer::new(sys, caps);
    let local = Local::closure(&mut ex, c)?;
    let on_cycle = local.cycle_points();
    let src = local.index[&c];
    let mut dist = vec![u64::MAX; local.nodes.len()];
    dist[src] = 0;
    let mut queue = VecDeque::from([src]);
    while let Some(v) = queue.pop_front() {
        if on_cycle[v] {
            return Ok(dist[v]);
        }
        for &w in &local.adj[v] {
            if dist[w] == u64::MAX {
                dist[w] = dist[v] + 1;
                queue.push_back(w);
            }
        }
    }
    Err(Error::Precondition("no cycle reachable; the system has no permissible action".into()))
}

/// Garden-of-Eden and predecessor questions about `c`.
pub fn predecessors(sys: &System, c: Config, mode: PredMode, caps: &Caps) -> Result<ProblemAnswer> {
    let rev = reverse_table(sys, caps)?;
    let preds = &rev[c.0 as usize];
    Ok(ProblemAnswer::plain(match mode {
        PredMode::IsGarden => Value::Bool(preds.is_empty()),
        PredMode::Count => Value::Count(preds.len() as u128),
        PredMode::GardenAt(t) => {
            let mut layer: FxHashSet<Config> = FxHashSet::from_iter([c]);
            for _ in 0..t {
                let mut next = FxHashSet::default();
                for x in &layer {
                    next.extend(rev[x.0 as usize].iter().copied());
                }
                layer = next;
                if layer.is_empty() {
                    break;
                }
            }
            Value::Bool(layer.iter().any(|g| rev[g.0 as usize].is_empty()))
        }
    }))
}

fn reverse_table(sys: &System, caps: &Caps) -> Result<Vec<Vec<Config>>> {
    Ok(build_graph(sys, caps)?.reverse())
}

/// Cycle questions about cycles through `c`.
pub fn cycles(sys: &System, c: Config, mode: CycleMode, caps: &Caps) -> Result<ProblemAnswer> {
    let mut ex = Explorer::new(sys, caps);
    match mode {
        CycleMode::Point | CycleMode::MinLen => {
            let path = shortest_path(&mut ex, c, c)?;
            let len = path.as_ref().map(|p| p.len() as u64 - 1);
            Ok(if mode == CycleMode::Point {
                ProblemAnswer { value: Value::Bool(path.is_some()), witness: path }
            } else {
                ProblemAnswer { value: Value::Length(len), witness: path }
            })
        }
        CycleMode::MaxSimpleLen | CycleMode::CountSimpleThrough => {
            let local = Local::closure(&mut ex, c)?;
            let src = local.index[&c];
            let allowed = local.co_reachable(src);
            let r = local.simple_paths(src, src, &allowed, caps.dfs_budget)?;
            Ok(ProblemAnswer::plain(if mode == CycleMode::MaxSimpleLen {
                Value::Length(r.longest)
            } else {
                Value::Count(r.count)
            }))
        }
    }
}

/// Whole-graph counts.
pub fn global_counts(sys: &System, what: GlobalCount, caps: &Caps) -> Result<u128> {
    let g = build_graph(sys, caps)?;
    Ok(match what {
        GlobalCount::Gardens => g.reverse().iter().filter(|p| p.is_empty()).count() as u128,
        GlobalCount::FixedPoints => g.configs().filter(|&c| g.targets(c).any(|t| t == c)).count() as u128,
        GlobalCount::CompleteFixedPoints => {
            g.configs().filter(|&c| g.targets(c).all(|t| t == c)).count() as u128
        }
        GlobalCount::Cycles => {
            let nodes: Vec<Config> = (0..g.len() as u128).map(Config).collect();
            let index: FxHashMap<Config, usize> = nodes.iter().enumerate().map(|(i, &c)| (c, i)).collect();
            let adj = nodes
                .iter()
                .map(|&c| g.targets(c).map(|t| t.0 as usize).collect())
                .collect();
            let local = Local { nodes, index, adj };
            let mut budget = caps.dfs_budget;
            let mut total = 0u128;
            for s in 0..local.nodes.len() {
                // each cycle is counted once, from its smallest member
                let allowed: Vec<bool> = (0..local.nodes.len()).map(|w| w > s).collect();
                let r = local.simple_paths(s, s, &allowed, budget)?;
                budget -= r.expansions;
                total = total.saturating_add(r.count);
            }
            total
        }
    })
}

/// Fixed-point questions. A complete fixed point is kept by every permissible action.
pub fn fixed_points(sys: &System, mode: FixedPointMode, caps: &Caps) -> Result<ProblemAnswer> {
    let keeps = |c: Config| -> Result<(bool, bool)> {
        let s = sys.successor_set(c, caps.actions)?;
        Ok((s.contains(&c), s == [c]))
    };
    match mode {
        FixedPointMode::IsFixed(c) => Ok(ProblemAnswer::plain(Value::Bool(keeps(c)?.0))),
        FixedPointMode::IsCompleteFixed(c) => Ok(ProblemAnswer::plain(Value::Bool(keeps(c)?.1))),
        FixedPointMode::Exists | FixedPointMode::CompleteExists => {
            crate::graph::check_state_cap(sys.n(), caps)?;
            for c in Config::all(sys.n()) {
                let (fp, complete) = keeps(c)?;
                let hit = if mode == FixedPointMode::Exists { fp } else { complete };
                if hit {
                    return Ok(ProblemAnswer { value: Value::Bool(true), witness: Some(vec![c]) });
                }
            }
            Ok(ProblemAnswer::plain(Value::Bool(false)))
        }
    }
}

/// Number of distinct one-step images of `c`.
pub fn count_subsequent(sys: &System, c: Config, caps: &Caps) -> Result<u128> {
    Ok(sys.successor_set(c, caps.actions)?.len() as u128)
}

/// Number of simple paths of length at least one from `c` to `d`; with
/// `c == d` these are the simple cycles through `c`.
pub fn count_simple_paths(sys: &System, c: Config, d: Config, caps: &Caps) -> Result<u128> {
    let mut ex = Explorer::new(sys, caps);
    let local = Local::closure(&mut ex, c)?;
    let Some(&dst) = local.index.get(&d) else {
        return Ok(0);
    };
    let allowed = local.co_reachable(dst);
    Ok(local.simple_paths(local.index[&c], dst, &allowed, caps.dfs_budget)?.count)
}

/// Number of configuration sequences of exactly `t` steps from `c` to `d`.
pub fn count_paths_of_length(sys: &System, c: Config, d: Config, t: u64, caps: &Caps) -> Result<u128> {
    let mut ex = Explorer::new(sys, caps);
    let mut layer: FxHashMap<Config, u128> = FxHashMap::from_iter([(c, 1)]);
    for _ in 0..t {
        let mut next: FxHashMap<Config, u128> = FxHashMap::default();
        for (x, w) in layer {
            for &y in ex.succ(x)? {
                let e = next.entry(y).or_insert(0);
                *e = e.saturating_add(w);
            }
        }
        layer = next;
    }
    Ok(layer.get(&d).copied().unwrap_or(0))
}

/// Forward closure of a start configuration with dense indices.
struct Local {
    nodes: Vec<Config>,
    index: FxHashMap<Config, usize>,
    adj: Vec<Vec<usize>>,
}

struct PathStats {
    count: u128,
    longest: Option<u64>,
    expansions: u64,
}

impl Local {
    fn closure(ex: &mut Explorer<'_>, start: Config) -> Result<Local> {
        let mut nodes = vec![start];
        let mut index = FxHashMap::default();
        index.insert(start, 0usize);
        let mut adj: Vec<Vec<usize>> = Vec::new();
        let mut i = 0;
        while i < nodes.len() {
            let succ = ex.succ(nodes[i])?.to_vec();
            let mut row = Vec::with_capacity(succ.len());
            for s in succ {
                let next = nodes.len();
                let id = *index.entry(s).or_insert(next);
                if id == next {
                    if nodes.len() as u128 >= ex.caps().states {
                        return Err(Error::StateCap { count: nodes.len() as u128 + 1, cap: ex.caps().states });
                    }
                    nodes.push(s);
                }
                row.push(id);
            }
            adj.push(row);
            i += 1;
        }
        Ok(Local { nodes, index, adj })
    }

    /// Nodes that can reach `target` (including `target`).
    fn co_reachable(&self, target: usize) -> Vec<bool> {
        let mut rev = vec![Vec::new(); self.nodes.len()];
        for (v, row) in self.adj.iter().enumerate() {
            for &w in row {
                rev[w].push(v);
            }
        }
        let mut mark = vec![false; self.nodes.len()];
        mark[target] = true;
        let mut stack = vec![target];
        while let Some(v) = stack.pop() {
            for &u in &rev[v] {
                if !mark[u] {
                    mark[u] = true;
                    stack.push(u);
                }
            }
        }
        mark
    }

    /// Nodes lying on some cycle (a self-loop counts).
    fn cycle_points(&self) -> Vec<bool> {
        let mut g: DiGraph<(), ()> = DiGraph::with_capacity(self.nodes.len(), 0);
        for _ in &self.nodes {
            g.add_node(());
        }
        for (v, row) in self.adj.iter().enumerate() {
            for &w in row {
                g.add_edge(NodeIndex::new(v), NodeIndex::new(w), ());
            }
        }
        let mut on = vec![false; self.nodes.len()];
        for comp in tarjan_scc(&g) {
            if comp.len() > 1 {
                for v in comp {
                    on[v.index()] = true;
                }
            }
        }
        for (v, row) in self.adj.iter().enumerate() {
            if row.contains(&v) {
                on[v] = true;
            }
        }
        on
    }

    /// Enumerates simple paths of length at least one from `src` to `dst`
    /// through `allowed` interior nodes, within `budget` expansions.
    fn simple_paths(&self, src: usize, dst: usize, allowed: &[bool], budget: u64) -> Result<PathStats> {
        let mut on_path = vec![false; self.nodes.len()];
        on_path[src] = true;
        let mut stack: Vec<(usize, usize)> = vec![(src, 0)];
        let mut stats = PathStats { count: 0, longest: None, expansions: 0 };
        while let Some(top) = stack.last_mut() {
            let (v, i) = *top;
            if i < self.adj[v].len() {
                top.1 += 1;
                let w = self.adj[v][i];
                let depth = stack.len() as u64;
                if w == dst {
                    stats.count = stats.count.saturating_add(1);
                    stats.longest = Some(stats.longest.map_or(depth, |l| l.max(depth)));
                } else if !on_path[w] && allowed[w] {
                    stats.expansions += 1;
                    if stats.expansions > budget {
                        return Err(Error::Budget { budget });
                    }
                    on_path[w] = true;
                    stack.push((w, 0));
                }
            } else {
                on_path[v] = false;
                stack.pop();
            }
        }
        Ok(stats)
    }
}
