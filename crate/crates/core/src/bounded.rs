//! Bounded-horizon reachability.
//!
//! Under individual selection the successor set of a configuration can be
//! exponential in the number of nodes. Layers are therefore built
//! explicitly only up to two steps before the horizon; the last
//! intermediate configuration is found by a constraint search in which
//! every node contributes one constraint per step, and independent groups
//! of nodes are solved separately.

use crate::caps::Caps;
use crate::config::Config;
use crate::error::{Error, Result};
use crate::graph::layers;
use crate::system::{Realization, SelectionScheme, System, UpdateSchedule};

/// Whether some path of exactly `t` steps leads from `c` to `d`.
pub fn reaches_exactly(sys: &System, c: Config, d: Config, t: u64, caps: &Caps) -> Result<bool> {
    bounded(sys, c, d, t, true, caps)
}

/// Whether some path of `1..=t` steps leads from `c` to `d`.
pub fn reaches_within(sys: &System, c: Config, d: Config, t: u64, caps: &Caps) -> Result<bool> {
    bounded(sys, c, d, t, false, caps)
}

fn bounded(sys: &System, c: Config, d: Config, t: u64, exact: bool, caps: &Caps) -> Result<bool> {
    if t == 0 {
        return Ok(exact && c == d);
    }
    let solvable = *sys.selection() == SelectionScheme::Individual && *sys.schedule() != UpdateSchedule::Asynchronous;
    if !solvable {
        let ls = layers(sys, c, t, caps)?;
        return Ok(if exact { ls[t as usize].contains(&d) } else { ls[1..].iter().any(|l| l.contains(&d)) });
    }
    let orders = Orders::new(sys, caps)?;
    if t == 1 {
        return Ok(orders.edge(sys, c, d));
    }
    let ls = layers(sys, c, t - 2, caps)?;
    if !exact {
        if ls[1..].iter().any(|l| l.contains(&d)) {
            return Ok(true);
        }
        if ls[t as usize - 2].iter().any(|&x| orders.edge(sys, x, d)) {
            return Ok(true);
        }
    }
    let mut budget = Budget { left: caps.states, cap: caps.states };
    for &x in &ls[t as usize - 2] {
        if orders.bridge(sys, x, d, &mut budget)?.is_some() {
            return Ok(true);
        }
    }
    Ok(false)
}

struct Budget {
    left: u128,
    cap: u128,
}

impl Budget {
    fn spend(&mut self) -> Result<()> {
        if self.left == 0 {
            return Err(Error::Budget { budget: self.cap.min(u64::MAX as u128) as u64 });
        }
        self.left -= 1;
        Ok(())
    }
}

/// For every realization, the mask of nodes updated before each node.
struct Orders {
    before: Vec<Vec<u128>>,
}

impl Orders {
    fn new(sys: &System, caps: &Caps) -> Result<Orders> {
        let n = sys.n();
        let before = sys
            .realizations(caps.actions)?
            .iter()
            .map(|r| match r {
                Realization::Sequential(p) => {
                    let mut masks = vec![0u128; n];
                    let mut acc = 0u128;
                    for &v in p.order() {
                        masks[v] = acc;
                        acc |= 1 << v;
                    }
                    masks
                }
                _ => vec![0u128; n],
            })
            .collect();
        Ok(Orders { before })
    }

    /// Whether node `i` can produce `out.bit(i)` when nodes in `mask` read
    /// from `out` and the rest from `inp`.
    fn node_ok(sys: &System, i: usize, inp: Config, out: Config, mask: u128) -> bool {
        let view = Config((out.0 & mask) | (inp.0 & !mask));
        let want = out.bit(i);
        sys.choices(i).iter().any(|f| f.eval(view) == want)
    }

    fn edge(&self, sys: &System, x: Config, d: Config) -> bool {
        self.before.iter().any(|b| (0..sys.n()).all(|i| Orders::node_ok(sys, i, x, d, b[i])))
    }

    /// Some `y` with `x -> y -> d`, one realization per step.
    fn bridge(&self, sys: &System, x: Config, d: Config, budget: &mut Budget) -> Result<Option<Config>> {
        for b1 in &self.before {
            for b2 in &self.before {
                if let Some(y) = solve(sys, x, d, b1, b2, budget)? {
                    return Ok(Some(y));
                }
            }
        }
        Ok(None)
    }
}

/// One node's constraint on the unknown middle configuration.
struct Check {
    node: usize,
    second: bool,
    scope: u128,
}

fn solve(sys: &System, x: Config, d: Config, b1: &[u128], b2: &[u128], budget: &mut Budget) -> Result<Option<Config>> {
    let n = sys.n();
    let srcs: Vec<u128> = (0..n)
        .map(|i| sys.choices(i).iter().flat_map(|f| f.sources()).fold(0u128, |m, s| m | 1 << s))
        .collect();
    let mut checks = Vec::with_capacity(2 * n);
    for i in 0..n {
        checks.push(Check { node: i, second: false, scope: 1 << i | (srcs[i] & b1[i]) });
        checks.push(Check { node: i, second: true, scope: srcs[i] & !b2[i] });
    }
    let holds = |ch: &Check, y: Config| {
        if ch.second {
            Orders::node_ok(sys, ch.node, y, d, b2[ch.node])
        } else {
            Orders::node_ok(sys, ch.node, x, y, b1[ch.node])
        }
    };

    // Components of the variables linked by shared constraints.
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(p: &mut [usize], v: usize) -> usize {
        let mut r = v;
        while p[r] != r {
            r = p[r];
        }
        let mut v = v;
        while p[v] != r {
            let next = p[v];
            p[v] = r;
            v = next;
        }
        r
    }
    for ch in &checks {
        if ch.scope == 0 {
            if !holds(ch, Config::ZERO) {
                return Ok(None);
            }
            continue;
        }
        let first = ch.scope.trailing_zeros() as usize;
        for v in bits(ch.scope) {
            let (a, b) = (find(&mut parent, first), find(&mut parent, v));
            parent[a] = b;
        }
    }
    let mut comps: Vec<(Vec<usize>, Vec<Vec<usize>>)> = Vec::new();
    let mut slot = vec![usize::MAX; n];
    for v in 0..n {
        let r = find(&mut parent, v);
        if slot[r] == usize::MAX {
            slot[r] = comps.len();
            comps.push((Vec::new(), Vec::new()));
        }
        comps[slot[r]].0.push(v);
    }
    for (ci, ch) in checks.iter().enumerate() {
        if ch.scope == 0 {
            continue;
        }
        let last = 127 - ch.scope.leading_zeros() as usize;
        let comp = &mut comps[slot[find(&mut parent, last)]];
        let depth = comp.0.binary_search(&last).expect("variable in its component");
        if comp.1.is_empty() {
            comp.1 = vec![Vec::new(); comp.0.len()];
        }
        comp.1[depth].push(ci);
    }

    let mut y = Config::ZERO;
    for (vars, triggers) in &comps {
        if triggers.is_empty() {
            continue;
        }
        if !assign(vars, triggers, 0, &mut y, &checks, &holds, budget)? {
            return Ok(None);
        }
    }
    Ok(Some(y))
}

fn assign(
    vars: &[usize],
    triggers: &[Vec<usize>],
    depth: usize,
    y: &mut Config,
    checks: &[Check],
    holds: &dyn Fn(&Check, Config) -> bool,
    budget: &mut Budget,
) -> Result<bool> {
    if depth == vars.len() {
        return Ok(true);
    }
    for v in [false, true] {
        budget.spend()?;
        *y = y.with(vars[depth], v);
        if triggers[depth].iter().all(|&ci| holds(&checks[ci], *y))
            && assign(vars, triggers, depth + 1, y, checks, holds, budget)?
        {
            return Ok(true);
        }
    }
    Ok(false)
}

fn bits(mut m: u128) -> impl Iterator<Item = usize> {
    std::iter::from_fn(move || {
        if m == 0 {
            return None;
        }
        let v = m.trailing_zeros() as usize;
        m &= m - 1;
        Some(v)
    })
}
