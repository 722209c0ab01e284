//! Labeled configuration graphs, explicit or explored on demand.

use std::collections::{BTreeSet, VecDeque};
use std::sync::atomic::{AtomicU64, Ordering};

use rayon::prelude::*;
use rustc_hash::{FxHashMap, FxHashSet};

use crate::caps::Caps;
use crate::config::Config;
use crate::error::{Error, Result};
use crate::system::{Action, System};

/// One arc of the configuration graph.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Arc {
    pub target: Config,
    pub count: u128,
    pub witness: Action,
}

/// Fully materialized configuration graph. Arcs of `c` live at index `c.0`.
#[derive(Clone, Debug)]
pub struct ConfigGraph {
    n: usize,
    arcs: Vec<Vec<Arc>>,
}

/// Materializes every configuration and its labeled successors.
///
/// Stored arcs count against the state cap as well.
pub fn build_graph(sys: &System, caps: &Caps) -> Result<ConfigGraph> {
    let n = sys.n();
    check_state_cap(n, caps)?;
    let stored = AtomicU64::new(0);
    let arcs = (0..1u128 << n)
        .into_par_iter()
        .map(|v| {
            let succ = sys.successors(Config(v), caps.actions)?;
            let total = stored.fetch_add(succ.len() as u64, Ordering::Relaxed) as u128 + succ.len() as u128;
            if total > caps.states {
                return Err(Error::ArcCap { count: total, cap: caps.states });
            }
            Ok(succ
                .into_iter()
                .map(|(target, l)| Arc { target, count: l.count, witness: l.witness })
                .collect())
        })
        .collect::<Result<Vec<Vec<Arc>>>>()?;
    Ok(ConfigGraph { n, arcs })
}

pub(crate) fn check_state_cap(n: usize, caps: &Caps) -> Result<()> {
    let count = if n >= 127 { u128::MAX } else { 1u128 << n };
    if n >= 127 || count > caps.states {
        return Err(Error::StateCap { count, cap: caps.states });
    }
    Ok(())
}

impl ConfigGraph {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.arcs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.arcs.is_empty()
    }

    pub fn arcs(&self, c: Config) -> &[Arc] {
        &self.arcs[c.0 as usize]
    }

    pub fn targets(&self, c: Config) -> impl Iterator<Item = Config> + '_ {
        self.arcs(c).iter().map(|a| a.target)
    }

    /// Configurations in ascending textual order.
    pub fn configs(&self) -> impl Iterator<Item = Config> {
        Config::all(self.n)
    }

    pub fn arc_count(&self) -> usize {
        self.arcs.iter().map(Vec::len).sum()
    }

    /// Distinct predecessors of every configuration, indexed like the arcs.
    pub fn reverse(&self) -> Vec<Vec<Config>> {
        let mut rev = vec![Vec::new(); self.arcs.len()];
        for (v, out) in self.arcs.iter().enumerate() {
            for a in out {
                rev[a.target.0 as usize].push(Config(v as u128));
            }
        }
        rev
    }

    /// One line per arc, `<src> <dst> <count>`, sources in ascending textual order.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        for c in self.configs() {
            let mut arcs: Vec<&Arc> = self.arcs(c).iter().collect();
            arcs.sort_by_key(|a| a.target.rank(self.n));
            for a in arcs {
                out.push_str(&format!("{} {} {}\n", c.render(self.n), a.target.render(self.n), a.count));
            }
        }
        out
    }
}

/// Configurations reachable from `start` in at most `step_bound` steps.
pub fn reachable_set(sys: &System, start: Config, step_bound: u64, caps: &Caps) -> Result<BTreeSet<Config>> {
    let mut ex = Explorer::new(sys, caps);
    let seen = ex.bfs(start, step_bound)?;
    Ok(seen.into_keys().collect())
}

/// Configurations reachable in exactly `t` steps, for `t = 0..=depth`.
pub fn layers(sys: &System, start: Config, depth: u64, caps: &Caps) -> Result<Vec<BTreeSet<Config>>> {
    let mut ex = Explorer::new(sys, caps);
    let mut out = vec![BTreeSet::from([start])];
    for _ in 0..depth {
        let mut next = BTreeSet::new();
        for &c in out.last().unwrap() {
            next.extend(ex.succ(c)?.iter().copied());
        }
        if next.len() as u128 > caps.states {
            return Err(Error::StateCap { count: next.len() as u128, cap: caps.states });
        }
        out.push(next);
    }
    Ok(out)
}

/// Some action taking `c` to `d`, if one exists.
pub fn edge_exists(sys: &System, c: Config, d: Config, caps: &Caps) -> Result<Option<Action>> {
    Ok(sys.successors(c, caps.actions)?.remove(&d).map(|l| l.witness))
}

/// Memoizing successor-set oracle for frontier exploration.
pub struct Explorer<'a> {
    sys: &'a System,
    caps: Caps,
    cache: FxHashMap<Config, Vec<Config>>,
    stored: u128,
}

impl<'a> Explorer<'a> {
    pub fn new(sys: &'a System, caps: &Caps) -> Explorer<'a> {
        Explorer { sys, caps: *caps, cache: FxHashMap::default(), stored: 0 }
    }

    pub fn system(&self) -> &System {
        self.sys
    }

    pub fn caps(&self) -> &Caps {
        &self.caps
    }

    /// Sorted distinct successors of `c`.
    pub fn succ(&mut self, c: Config) -> Result<&[Config]> {
        if !self.cache.contains_key(&c) {
            if self.cache.len() as u128 >= self.caps.states {
                return Err(Error::StateCap { count: self.cache.len() as u128 + 1, cap: self.caps.states });
            }
            let s = self.sys.successor_set(c, self.caps.actions)?;
            self.stored += s.len() as u128;
            if self.stored > self.caps.states {
                return Err(Error::ArcCap { count: self.stored, cap: self.caps.states });
            }
            self.cache.insert(c, s);
        }
        Ok(&self.cache[&c])
    }

    /// BFS distances from `start` (distance 0 included), up to `bound` steps.
    pub fn bfs(&mut self, start: Config, bound: u64) -> Result<FxHashMap<Config, u64>> {
        let mut dist = FxHashMap::default();
        dist.insert(start, 0u64);
        let mut queue = VecDeque::from([start]);
        while let Some(c) = queue.pop_front() {
            let dc = dist[&c];
            if dc >= bound {
                continue;
            }
            let next = self.succ(c)?.to_vec();
            for d in next {
                if !dist.contains_key(&d) {
                    if dist.len() as u128 >= self.caps.states {
                        return Err(Error::StateCap { count: dist.len() as u128 + 1, cap: self.caps.states });
                    }
                    dist.insert(d, dc + 1);
                    queue.push_back(d);
                }
            }
        }
        Ok(dist)
    }

    /// Length of the shortest path of length at least one from `c` to `d`.
    pub fn shortest_nontrivial(&mut self, c: Config, d: Config) -> Result<Option<u64>> {
        let mut dist: FxHashMap<Config, u64> = FxHashMap::default();
        let mut queue = VecDeque::new();
        for s in self.succ(c)?.to_vec() {
            if s == d {
                return Ok(Some(1));
            }
            dist.insert(s, 1);
            queue.push_back(s);
        }
        while let Some(x) = queue.pop_front() {
            let dx = dist[&x];
            for y in self.succ(x)?.to_vec() {
                if y == d {
                    return Ok(Some(dx + 1));
                }
                if !dist.contains_key(&y) {
                    if dist.len() as u128 >= self.caps.states {
                        return Err(Error::StateCap { count: dist.len() as u128 + 1, cap: self.caps.states });
                    }
                    dist.insert(y, dx + 1);
                    queue.push_back(y);
                }
            }
        }
        Ok(None)
    }

    /// Shortest nontrivial path lengths from `c` to every configuration it reaches.
    pub fn nontrivial_distances(&mut self, c: Config) -> Result<FxHashMap<Config, u64>> {
        let mut dist: FxHashMap<Config, u64> = FxHashMap::default();
        let mut queue = VecDeque::new();
        for s in self.succ(c)?.to_vec() {
            dist.insert(s, 1);
            queue.push_back(s);
        }
        while let Some(x) = queue.pop_front() {
            let dx = dist[&x];
            for y in self.succ(x)?.to_vec() {
                if !dist.contains_key(&y) {
                    if dist.len() as u128 >= self.caps.states {
                        return Err(Error::StateCap { count: dist.len() as u128 + 1, cap: self.caps.states });
                    }
                    dist.insert(y, dx + 1);
                    queue.push_back(y);
                }
            }
        }
        Ok(dist)
    }

    /// Configurations in the forward closure of `start` (including it).
    pub fn closure(&mut self, start: Config) -> Result<FxHashSet<Config>> {
        Ok(self.bfs(start, u64::MAX)?.into_keys().collect())
    }
}
