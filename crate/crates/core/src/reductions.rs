//! Gadget generators compiling CNF formulas and graph pairs into bounded
//! reachability instances, special structural systems, and a harness that
//! checks each gadget against a direct enumeration.

use std::collections::BTreeSet;
use std::fmt;

use crate::analysis::{self, ReachMode};
use crate::caps::Caps;
use crate::cnf::{CnfFormula, Literal};
use crate::config::Config;
use crate::error::{Error, Result};
use crate::bounded::{reaches_exactly, reaches_within};
use crate::system::{NodeFunction, Permutation, SelectionScheme, System, UpdateSchedule};

use NodeFunction::{Or, Pos};

/// Step bound attached to a reachability instance.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Horizon {
    /// Some path of length `1..=t`.
    Within(u64),
    /// Some path of length exactly `t`.
    Exactly(u64),
    /// Some path of length at least one.
    Unbounded,
}

impl fmt::Display for Horizon {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Horizon::Within(t) => write!(f, "within:{t}"),
            Horizon::Exactly(t) => write!(f, "exactly:{t}"),
            Horizon::Unbounded => write!(f, "unbounded"),
        }
    }
}

impl std::str::FromStr for Horizon {
    type Err = Error;

    fn from_str(s: &str) -> Result<Horizon> {
        let bad = || Error::Structure(format!("bad horizon {s:?}; expected within:<t>, exactly:<t> or unbounded"));
        if s == "unbounded" {
            return Ok(Horizon::Unbounded);
        }
        let (kind, t) = s.split_once(':').ok_or_else(bad)?;
        let t: u64 = t.parse().map_err(|_| bad())?;
        match kind {
            "within" => Ok(Horizon::Within(t)),
            "exactly" => Ok(Horizon::Exactly(t)),
            _ => Err(bad()),
        }
    }
}

/// A gadget system with its start, target and step bound.
#[derive(Clone, Debug)]
pub struct ReductionInstance {
    pub system: System,
    pub start: Config,
    pub target: Config,
    pub horizon: Horizon,
    /// Schedule artifacts, e.g. the two update orders of the permutation-list gadget.
    pub extras: Vec<Permutation>,
}

/// Builds a configuration of length `n` with the listed nodes set.
fn ones(n: usize, set: impl IntoIterator<Item = usize>) -> Config {
    let c = set.into_iter().fold(Config::ZERO, |c, i| c.with(i, true));
    debug_assert!(n == 0 || c.0 >> n == 0);
    c
}

fn individual(functions: Vec<Vec<NodeFunction>>) -> Result<System> {
    System::new(functions, SelectionScheme::Individual, UpdateSchedule::Parallel)
}

/// Pads every row to `k` choices by repeating its last function.
fn pad(mut rows: Vec<Vec<NodeFunction>>, k: usize) -> Vec<Vec<NodeFunction>> {
    for r in &mut rows {
        let last = r.last().cloned().expect("non-empty row");
        r.resize(k, last);
    }
    rows
}

/// Node indices of the assignment layers shared by the unary gadgets:
/// `a0, a1`, then `b_{i,0}, b_{i,1}` per variable, then `c_{i,0}, c_{i,1}`.
#[derive(Clone, Copy)]
struct Layers {
    vars: usize,
}

impl Layers {
    const A0: usize = 0;
    const A1: usize = 1;

    fn b(&self, i: usize, s: usize) -> usize {
        2 + 2 * i + s
    }

    fn c(&self, i: usize, s: usize) -> usize {
        2 + 2 * self.vars + 2 * i + s
    }

    fn next(&self) -> usize {
        2 + 4 * self.vars
    }

    /// The `b` node holding the value of a literal.
    fn lit(&self, l: Literal) -> usize {
        self.b(l.var, usize::from(l.positive))
    }

    /// `a0`, `a1` identities; `b` picks an `a`; `c_{i,s}` picks `b_{i,0}` or `b_{i,1}`.
    fn rows(&self) -> Vec<Vec<NodeFunction>> {
        let mut rows = vec![vec![Pos(Self::A0); 2], vec![Pos(Self::A1); 2]];
        for _ in 0..2 * self.vars {
            rows.push(vec![Pos(Self::A0), Pos(Self::A1)]);
        }
        for i in 0..self.vars {
            for _ in 0..2 {
                rows.push(vec![Pos(self.b(i, 0)), Pos(self.b(i, 1))]);
            }
        }
        rows
    }
}

/// 3SAT into 3-step reachability on a 2-choice unary parallel system.
pub fn reduce_3sat_unary_t3(phi: &CnfFormula) -> Result<ReductionInstance> {
    phi.require_width(3)?;
    let (nv, m) = (phi.vars, phi.clauses.len());
    let l = Layers { vars: nv };
    let alpha = |j: usize| l.next() + 2 * j;
    let beta = |j: usize| l.next() + 2 * j + 1;
    let d = |i: usize, s: usize| l.next() + 2 * m + 2 * i + s;
    let gamma = |j: usize| l.next() + 2 * m + 2 * nv + j;
    let mut rows = l.rows();
    for cl in &phi.clauses {
        rows.push(vec![Pos(l.lit(cl[0])), Pos(l.lit(cl[1]))]);
        rows.push(vec![Pos(l.lit(cl[1])), Pos(l.lit(cl[2]))]);
    }
    for i in 0..nv {
        for s in 0..2 {
            rows.push(vec![Pos(l.c(i, s)); 2]);
        }
    }
    for j in 0..m {
        rows.push(vec![Pos(alpha(j)), Pos(beta(j))]);
    }
    let n = rows.len();
    debug_assert_eq!(n, 2 + 2 * nv + (2 * nv + 2 * m) + (2 * nv + m));
    let target = ones(n, [Layers::A1].into_iter().chain((0..nv).map(|i| d(i, 1))).chain((0..m).map(gamma)));
    Ok(ReductionInstance {
        system: individual(rows)?,
        start: ones(n, [Layers::A1]),
        target,
        horizon: Horizon::Within(3),
        extras: Vec::new(),
    })
}

/// 2SAT into 2-step reachability: one clause node reads either literal.
pub fn reduce_2sat_t2(phi: &CnfFormula) -> Result<ReductionInstance> {
    phi.require_width(2)?;
    let nv = phi.vars;
    let l = Layers { vars: nv };
    let mut rows = l.rows();
    for cl in &phi.clauses {
        rows.push(vec![Pos(l.lit(cl[0])), Pos(l.lit(cl[1]))]);
    }
    let n = rows.len();
    let target = ones(
        n,
        [Layers::A1].into_iter().chain((0..nv).map(|i| l.c(i, 1))).chain((0..phi.clauses.len()).map(|j| l.next() + j)),
    );
    Ok(ReductionInstance {
        system: individual(rows)?,
        start: ones(n, [Layers::A1]),
        target,
        horizon: Horizon::Within(2),
        extras: Vec::new(),
    })
}

/// 3SAT into 2-step reachability on a 3-choice system: each clause node
/// reads any of its three literals directly.
pub fn reduce_3sat_k3_t2(phi: &CnfFormula) -> Result<ReductionInstance> {
    phi.require_width(3)?;
    let nv = phi.vars;
    let l = Layers { vars: nv };
    let mut rows = l.rows();
    for cl in &phi.clauses {
        rows.push(cl.iter().map(|&x| Pos(l.lit(x))).collect());
    }
    let rows = pad(rows, 3);
    let n = rows.len();
    let target = ones(
        n,
        [Layers::A1].into_iter().chain((0..nv).map(|i| l.c(i, 1))).chain((0..phi.clauses.len()).map(|j| l.next() + j)),
    );
    Ok(ReductionInstance {
        system: individual(rows)?,
        start: ones(n, [Layers::A1]),
        target,
        horizon: Horizon::Within(2),
        extras: Vec::new(),
    })
}

/// 3SAT into path counting on a 4-choice system with self-loop choices.
/// Rows with fewer choices are padded by repetition, which leaves the
/// configuration graph unchanged.
pub fn reduce_parsimonious_count(phi: &CnfFormula) -> Result<ReductionInstance> {
    phi.require_width(3)?;
    let nv = phi.vars;
    let l = Layers { vars: nv };
    let mut rows = vec![vec![Pos(Layers::A0)], vec![Pos(Layers::A0)]];
    for _ in 0..2 * nv {
        rows.push(vec![Pos(Layers::A0), Pos(Layers::A1)]);
    }
    for i in 0..nv {
        rows.push(vec![Pos(l.b(i, 0)), Pos(l.b(i, 1))]);
        rows.push(vec![Pos(l.b(i, 0)), Pos(l.b(i, 1)), Pos(l.c(i, 1))]);
    }
    for (j, cl) in phi.clauses.iter().enumerate() {
        let mut r: Vec<NodeFunction> = cl.iter().map(|&x| Pos(l.lit(x))).collect();
        r.push(Pos(l.next() + j));
        rows.push(r);
    }
    let rows = pad(rows, 4);
    let n = rows.len();
    let target = ones(n, (0..nv).map(|i| l.c(i, 1)).chain((0..phi.clauses.len()).map(|j| l.next() + j)));
    Ok(ReductionInstance {
        system: individual(rows)?,
        start: ones(n, [Layers::A1]),
        target,
        horizon: Horizon::Unbounded,
        extras: Vec::new(),
    })
}

/// 3SAT into 2-step reachability under a two-order permutation list.
/// The order `pi` runs the layers bottom-up; `sigma` runs them top-down.
pub fn reduce_3sat_permlist(phi: &CnfFormula) -> Result<ReductionInstance> {
    let base = reduce_3sat_unary_t3(phi)?;
    let (nv, m) = (phi.vars, phi.clauses.len());
    let l = Layers { vars: nv };
    let a: Vec<usize> = vec![Layers::A0, Layers::A1];
    let b: Vec<usize> = (2..2 + 2 * nv).collect();
    let c: Vec<usize> = (2 + 2 * nv..l.next()).collect();
    let alpha: Vec<usize> = (0..m).map(|j| l.next() + 2 * j).collect();
    let beta: Vec<usize> = (0..m).map(|j| l.next() + 2 * j + 1).collect();
    let d: Vec<usize> = (l.next() + 2 * m..l.next() + 2 * m + 2 * nv).collect();
    let gamma: Vec<usize> = (l.next() + 2 * m + 2 * nv..base.system.n()).collect();
    let cat = |parts: &[&Vec<usize>]| parts.iter().flat_map(|p| p.iter().copied()).collect::<Vec<_>>();
    let pi = Permutation::new(cat(&[&a, &b, &c, &d, &alpha, &beta, &gamma]))?;
    let sigma = Permutation::new(cat(&[&gamma, &d, &a, &b, &c, &alpha, &beta]))?;
    let system = base
        .system
        .with_model(SelectionScheme::Individual, UpdateSchedule::PermutationList(vec![pi.clone(), sigma.clone()]))?;
    Ok(ReductionInstance { system, horizon: Horizon::Within(2), extras: vec![pi, sigma], ..base })
}

/// 3SAT into exact-time reachability on a 4-choice coordinated parallel
/// system built from 2-fan-in OR and unary functions.
pub fn reduce_3sat_coordinated(phi: &CnfFormula) -> Result<ReductionInstance> {
    phi.require_width(3)?;
    let (nv, m) = (phi.vars, phi.clauses.len());
    let side = nv + 2;
    let a = |i: usize| i;
    let b = |i: usize| nv + 1 + i;
    let alpha = |j: usize| 2 * (nv + 1) + j;
    let beta = |j: usize| 2 * (nv + 1) + m + j;
    let gamma = |j: usize| 2 * (nv + 1) + 2 * m + j;
    let grid = 2 * (nv + 1) + 3 * m;
    let c = |i: usize, j: usize| grid + i * side + j;
    let dn = |i: usize| grid + side * side + i;
    let tn = |i: usize| grid + side * side + 3 + i;
    let steps = 2 * nv + 3;
    let n = tn(steps + 1) + 1;
    debug_assert_eq!(n, 2 * (nv + 1) + 3 * m + side * side + 3 + (2 * nv + 5));
    // A negative literal is carried by `a_v`, a positive one by `b_v`.
    let lit = |x: Literal| if x.positive { b(x.var + 1) } else { a(x.var + 1) };

    let mut groups: Vec<Vec<NodeFunction>> = (0..4).map(|_| (0..n).map(Pos).collect()).collect();
    for g in groups.iter_mut() {
        for i in 1..=steps + 1 {
            g[tn(i)] = Pos(tn(i - 1));
        }
    }
    let [g1, g2, g3, g4] = &mut groups[..] else { unreachable!() };
    g1[a(0)] = Pos(b(0));
    g1[b(0)] = Pos(a(0));
    for i in 1..side {
        for j in 0..side {
            g1[c(i, j)] = Pos(c(i - 1, j));
        }
    }
    for i in 1..=nv {
        g2[a(i)] = Pos(a(i - 1));
        g2[b(i)] = Pos(b(i - 1));
    }
    for i in 0..side {
        for j in 1..side {
            g2[c(i, j)] = Pos(c(i, j - 1));
        }
    }
    for (j, cl) in phi.clauses.iter().enumerate() {
        g3[alpha(j)] = Or(vec![lit(cl[0]), lit(cl[1])]);
        g3[beta(j)] = Or(vec![lit(cl[1]), lit(cl[2])]);
        g4[gamma(j)] = Or(vec![alpha(j), beta(j)]);
    }
    g3[dn(0)] = Pos(c(nv + 1, nv + 1));
    g3[dn(2)] = Pos(dn(1));
    g4[dn(1)] = Pos(dn(0));
    for i in 0..=nv {
        g4[a(i)] = Or(vec![a(i), b(i)]);
        g4[b(i)] = Or(vec![a(i), b(i)]);
    }
    let rows: Vec<Vec<NodeFunction>> = (0..n).map(|v| groups.iter().map(|g| g[v].clone()).collect()).collect();
    let system = System::new(rows, SelectionScheme::Coordinated, UpdateSchedule::Parallel)?;
    let start = ones(n, [a(0), c(1, 1), tn(1)]);
    let target = ones(
        n,
        (0..=nv)
            .flat_map(|i| [a(i), b(i)])
            .chain((0..m).flat_map(|j| [alpha(j), beta(j), gamma(j)]))
            .chain([c(nv + 1, nv + 1), dn(0), dn(1), dn(2), tn(steps + 1)]),
    );
    Ok(ReductionInstance { system, start, target, horizon: Horizon::Exactly(steps as u64), extras: Vec::new() })
}

/// A simple undirected graph on nodes `0..n`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct SimpleGraph {
    n: usize,
    edges: BTreeSet<(usize, usize)>,
}

/// Largest node count whose adjacency matrix fits a configuration.
pub const MAX_GRAPH_NODES: usize = 11;

impl SimpleGraph {
    /// Edges are unordered pairs of distinct 0-based nodes; duplicates merge.
    pub fn new(n: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Result<SimpleGraph> {
        if n == 0 || n > MAX_GRAPH_NODES {
            return Err(Error::Structure(format!("graph node count must be in 1..={MAX_GRAPH_NODES}")));
        }
        let mut set = BTreeSet::new();
        for (u, v) in edges {
            if u >= n || v >= n {
                return Err(Error::Structure(format!("edge ({}, {}) out of range 1..={n}", u + 1, v + 1)));
            }
            if u == v {
                return Err(Error::Structure(format!("self-loop at node {}", u + 1)));
            }
            set.insert((u.min(v), u.max(v)));
        }
        Ok(SimpleGraph { n, edges: set })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.edges.iter().copied()
    }

    /// Every graph on `n` nodes, in edge-mask order.
    pub fn all(n: usize) -> Vec<SimpleGraph> {
        let pairs: Vec<(usize, usize)> = (0..n).flat_map(|u| (u + 1..n).map(move |v| (u, v))).collect();
        (0u64..1 << pairs.len())
            .map(|mask| SimpleGraph {
                n,
                edges: pairs.iter().enumerate().filter(|(i, _)| mask >> i & 1 == 1).map(|(_, &p)| p).collect(),
            })
            .collect()
    }

    /// Row-major adjacency matrix as a configuration of length `n*n`.
    pub fn adjacency(&self) -> Config {
        ones(self.n * self.n, self.edges.iter().flat_map(|&(u, v)| [u * self.n + v, v * self.n + u]))
    }

    /// Isomorphism by enumerating every node permutation.
    pub fn is_isomorphic(&self, other: &SimpleGraph) -> bool {
        if self.n != other.n || self.edges.len() != other.edges.len() {
            return false;
        }
        Permutation::all(self.n).iter().any(|p| {
            let m = p.order();
            self.edges.iter().all(|&(u, v)| other.edges.contains(&(m[u].min(m[v]), m[u].max(m[v]))))
        })
    }

    /// Parses `p edge <n> <m>` followed by `e <u> <v>` lines, nodes 1-based.
    pub fn parse(text: &str) -> Result<SimpleGraph> {
        let mut header = None;
        let mut edges = Vec::new();
        for (no, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('c') {
                continue;
            }
            let at = |m: &str| Error::Structure(format!("line {}: {m}", no + 1));
            let parts: Vec<&str> = line.split_whitespace().collect();
            let num = |s: &str| s.parse::<usize>().map_err(|_| at(&format!("bad number {s:?}")));
            match parts.as_slice() {
                ["p", "edge", n, m] => header = Some((num(n)?, num(m)?)),
                ["e", u, v] => {
                    let (u, v) = (num(u)?, num(v)?);
                    if u == 0 || v == 0 {
                        return Err(at("nodes are numbered from 1"));
                    }
                    edges.push((u - 1, v - 1));
                }
                _ => return Err(at("expected `p edge <n> <m>` or `e <u> <v>`")),
            }
        }
        let (n, m) = header.ok_or_else(|| Error::Structure("missing `p edge` header".into()))?;
        if edges.len() != m {
            return Err(Error::Structure(format!("header announces {m} edges, found {}", edges.len())));
        }
        SimpleGraph::new(n, edges)
    }
}

impl fmt::Display for SimpleGraph {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "p edge {} {}", self.n, self.edges.len())?;
        for (u, v) in &self.edges {
            writeln!(f, "e {} {}", u + 1, v + 1)?;
        }
        Ok(())
    }
}

/// Graph isomorphism into reachability: configurations are adjacency
/// matrices and the two coordinated choices relabel nodes by an
/// `n-1`-cycle fixing node 1 and by the transposition of nodes 1 and 2.
pub fn reduce_graph_iso(g: &SimpleGraph, h: &SimpleGraph) -> Result<ReductionInstance> {
    if g.n != h.n {
        return Err(Error::Structure(format!("graphs have {} and {} nodes", g.n, h.n)));
    }
    let n = g.n;
    let rotate = |i: usize| match i {
        0 => 0,
        _ if i + 1 < n => i + 1,
        _ if n > 1 => 1,
        _ => i,
    };
    let swap = |i: usize| match i {
        0 if n > 1 => 1,
        1 => 0,
        _ => i,
    };
    let cell = |i: usize, j: usize| i * n + j;
    let rows = (0..n * n)
        .map(|v| {
            let (i, j) = (v / n, v % n);
            vec![Pos(cell(rotate(i), rotate(j))), Pos(cell(swap(i), swap(j)))]
        })
        .collect();
    let system = System::new(rows, SelectionScheme::Coordinated, UpdateSchedule::Parallel)?;
    Ok(ReductionInstance {
        system,
        start: g.adjacency(),
        target: h.adjacency(),
        horizon: Horizon::Unbounded,
        extras: Vec::new(),
    })
}

/// Encodes "`d` follows `c` in exactly two parallel steps" as a 2CNF over
/// the intermediate configuration.
pub fn extract_2cnf(sys: &System, c: Config, d: Config) -> Result<CnfFormula> {
    if sys.k() != 2
        || *sys.schedule() != UpdateSchedule::Parallel
        || *sys.selection() != SelectionScheme::Individual
        || !sys.all_functions().all(NodeFunction::is_unary)
    {
        return Err(Error::Model("2CNF extraction needs a 2-choice unary parallel individual system".into()));
    }
    let n = sys.n();
    // Literal on the source of `f` asserting that the intermediate state makes `f` output `want`.
    let lit = |f: &NodeFunction, want: bool| match *f {
        Pos(s) => Literal { var: s, positive: want },
        NodeFunction::Neg(s) => Literal { var: s, positive: !want },
        _ => unreachable!("checked unary"),
    };
    let mut clauses = Vec::new();
    for i in 0..n {
        let (f1, f2) = (sys.function(i, 0), sys.function(i, 1));
        clauses.push(vec![lit(f1, d.bit(i)), lit(f2, d.bit(i))]);
        let (v1, v2) = (f1.eval(c), f2.eval(c));
        if v1 == v2 {
            clauses.push(vec![Literal { var: i, positive: v1 }]);
        }
    }
    CnfFormula::new(n, clauses)
}

/// An `(n, 2)` unary parallel system whose graph connects every mixed
/// configuration, while `0^n` and `1^n` are complete fixed points.
pub fn build_near_connected(n: usize) -> Result<System> {
    if n < 4 {
        return Err(Error::Precondition("the near-connected system needs n >= 4".into()));
    }
    let mut rows = vec![vec![Pos(0), Pos(n - 1)], vec![Pos(n - 1), Pos(0)]];
    rows.extend((2..n).map(|i| vec![Pos(i - 1); 2]));
    individual(rows)
}

/// A 2-choice coordinated parallel system with a strongly connected
/// configuration graph: a rotation, or flip node 1 and hold the rest.
pub fn build_cyclic_connected(n: usize) -> Result<System> {
    if n < 2 {
        return Err(Error::Precondition("the cyclic-connected system needs n >= 2".into()));
    }
    let rows = (0..n)
        .map(|i| {
            let rot = Pos(if i == 0 { n - 1 } else { i - 1 });
            let flip = if i == 0 { NodeFunction::Neg(0) } else { Pos(i) };
            vec![rot, flip]
        })
        .collect();
    System::new(rows, SelectionScheme::Coordinated, UpdateSchedule::Parallel)
}

/// Decides the instance's reachability question on the gadget side.
pub fn decide(inst: &ReductionInstance, caps: &Caps) -> Result<bool> {
    let (sys, c, d) = (&inst.system, inst.start, inst.target);
    match inst.horizon {
        Horizon::Within(t) => reaches_within(sys, c, d, t, caps),
        Horizon::Exactly(t) => reaches_exactly(sys, c, d, t, caps),
        Horizon::Unbounded => {
            Ok(analysis::reachability(sys, c, d, ReachMode::Any, caps)?.as_bool().unwrap_or(false))
        }
    }
}

/// Agreement between the gadget side and a direct enumeration.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ReductionReport {
    pub gadget: bool,
    pub oracle: bool,
    pub agree: bool,
}

pub fn verify_reduction(inst: &ReductionInstance, oracle_answer: bool, caps: &Caps) -> Result<ReductionReport> {
    let gadget = decide(inst, caps)?;
    Ok(ReductionReport { gadget, oracle: oracle_answer, agree: gadget == oracle_answer })
}
