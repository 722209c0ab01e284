//! Multi-choice systems and their exact one-step semantics.

use std::collections::BTreeMap;
use std::fmt;

use rustc_hash::FxHashMap;

use crate::config::{Config, MAX_NODES};
use crate::error::{Error, Result};

/// Default fan-in bound for [`NodeFunction::Table`].
pub const DEFAULT_TABLE_FANIN: usize = 8;
/// Default bound on the number of enumerated actions.
pub const DEFAULT_ACTION_CAP: u128 = 1 << 20;

/// An update function. Sources are 0-based node indices.
///
/// `Table` outputs are indexed with the first source as the most significant bit.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum NodeFunction {
    Const(bool),
    Pos(usize),
    Neg(usize),
    Or(Vec<usize>),
    And(Vec<usize>),
    Table { srcs: Vec<usize>, outputs: Vec<bool> },
}

impl NodeFunction {
    #[inline]
    pub fn eval(&self, c: Config) -> bool {
        match self {
            NodeFunction::Const(b) => *b,
            NodeFunction::Pos(s) => c.bit(*s),
            NodeFunction::Neg(s) => !c.bit(*s),
            NodeFunction::Or(srcs) => srcs.iter().any(|&s| c.bit(s)),
            NodeFunction::And(srcs) => srcs.iter().all(|&s| c.bit(s)),
            NodeFunction::Table { srcs, outputs } => {
                let idx = srcs.iter().fold(0usize, |acc, &s| (acc << 1) | c.bit(s) as usize);
                outputs[idx]
            }
        }
    }

    /// Evaluates after checking that every source fits a configuration of length `n`.
    pub fn eval_checked(&self, c: Config, n: usize) -> Result<bool> {
        if let Some(&s) = self.sources().iter().find(|&&s| s >= n) {
            return Err(Error::Structure(format!(
                "source node {} out of range 1..={n}",
                s + 1
            )));
        }
        Ok(self.eval(c))
    }

    pub fn sources(&self) -> Vec<usize> {
        match self {
            NodeFunction::Const(_) => Vec::new(),
            NodeFunction::Pos(s) | NodeFunction::Neg(s) => vec![*s],
            NodeFunction::Or(v) | NodeFunction::And(v) => v.clone(),
            NodeFunction::Table { srcs, .. } => srcs.clone(),
        }
    }

    pub fn is_unary(&self) -> bool {
        matches!(self, NodeFunction::Pos(_) | NodeFunction::Neg(_))
    }

    pub fn validate(&self, n: usize, fanin_bound: usize) -> Result<()> {
        for s in self.sources() {
            if s >= n {
                return Err(Error::Structure(format!(
                    "source node {} out of range 1..={n}",
                    s + 1
                )));
            }
        }
        match self {
            NodeFunction::Or(v) | NodeFunction::And(v) if v.is_empty() => {
                Err(Error::Structure("OR/AND source list is empty".into()))
            }
            NodeFunction::Table { srcs, outputs } => {
                if srcs.len() > fanin_bound {
                    return Err(Error::Structure(format!(
                        "table fan-in {} exceeds bound {fanin_bound}",
                        srcs.len()
                    )));
                }
                if outputs.len() != 1usize << srcs.len() {
                    return Err(Error::Structure(format!(
                        "table with fan-in {} needs {} outputs, found {}",
                        srcs.len(),
                        1usize << srcs.len(),
                        outputs.len()
                    )));
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }

    /// Rewrites every source index through `f`.
    pub fn map_sources(&self, f: impl Fn(usize) -> usize) -> NodeFunction {
        match self {
            NodeFunction::Const(b) => NodeFunction::Const(*b),
            NodeFunction::Pos(s) => NodeFunction::Pos(f(*s)),
            NodeFunction::Neg(s) => NodeFunction::Neg(f(*s)),
            NodeFunction::Or(v) => NodeFunction::Or(v.iter().map(|&s| f(s)).collect()),
            NodeFunction::And(v) => NodeFunction::And(v.iter().map(|&s| f(s)).collect()),
            NodeFunction::Table { srcs, outputs } => NodeFunction::Table {
                srcs: srcs.iter().map(|&s| f(s)).collect(),
                outputs: outputs.clone(),
            },
        }
    }
}

/// A bijection on `0..n`, stored as the update order.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Permutation(Vec<usize>);

impl Permutation {
    pub fn new(order: Vec<usize>) -> Result<Permutation> {
        let mut sorted = order.clone();
        sorted.sort_unstable();
        if sorted.iter().enumerate().any(|(i, &v)| i != v) {
            let shown: Vec<usize> = order.iter().map(|v| v + 1).collect();
            return Err(Error::Permutation(format!("{shown:?} is not a bijection")));
        }
        Ok(Permutation(order))
    }

    pub fn identity(n: usize) -> Permutation {
        Permutation((0..n).collect())
    }

    pub fn order(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// All permutations of `0..n` in lexicographic order.
    pub fn all(n: usize) -> Vec<Permutation> {
        let mut out = Vec::new();
        let mut cur: Vec<usize> = (0..n).collect();
        loop {
            out.push(Permutation(cur.clone()));
            // next lexicographic permutation
            let Some(i) = (0..n.saturating_sub(1)).rev().find(|&i| cur[i] < cur[i + 1]) else {
                break;
            };
            let j = (i + 1..n).rev().find(|&j| cur[j] > cur[i]).unwrap();
            cur.swap(i, j);
            cur[i + 1..].reverse();
        }
        out
    }
}

/// How the system chooses among the `k` functions of each node.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum SelectionScheme {
    Fixed,
    Coordinated,
    Individual,
    /// Blocks of 0-based node indices; one shared choice per block.
    SemiCoordinated(Vec<Vec<usize>>),
}

/// When nodes fire within one time step.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum UpdateSchedule {
    Parallel,
    FixedPermutation(Permutation),
    PermutationList(Vec<Permutation>),
    ArbitraryPermutation,
    Asynchronous,
}

impl UpdateSchedule {
    pub fn is_sequential(&self) -> bool {
        matches!(
            self,
            UpdateSchedule::FixedPermutation(_)
                | UpdateSchedule::PermutationList(_)
                | UpdateSchedule::ArbitraryPermutation
        )
    }
}

/// One chosen function index (0-based) per node.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct FunctionSelection(pub Vec<usize>);

/// Ordered, pairwise-disjoint, nonempty groups of nodes.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct AsynchronousPlan(Vec<Vec<usize>>);

impl AsynchronousPlan {
    pub fn new(groups: Vec<Vec<usize>>, n: usize) -> Result<AsynchronousPlan> {
        let mut seen = vec![false; n];
        for g in &groups {
            if g.is_empty() {
                return Err(Error::Plan("empty group".into()));
            }
            for &v in g {
                if v >= n {
                    return Err(Error::Plan(format!("node {} out of range", v + 1)));
                }
                if seen[v] {
                    return Err(Error::Plan(format!("node {} appears twice", v + 1)));
                }
                seen[v] = true;
            }
        }
        Ok(AsynchronousPlan(groups))
    }

    pub fn groups(&self) -> &[Vec<usize>] {
        &self.0
    }

    /// Every plan over `n` nodes: each subset of nodes, split into an
    /// ordered sequence of nonempty groups.
    pub fn all(n: usize) -> Vec<AsynchronousPlan> {
        let mut out = Vec::new();
        let mut cur: Vec<Vec<usize>> = Vec::new();
        fn rec(rest: u64, cur: &mut Vec<Vec<usize>>, out: &mut Vec<AsynchronousPlan>) {
            out.push(AsynchronousPlan(cur.clone()));
            // choose the next group as any nonempty subset of the remaining nodes
            let mut sub = rest;
            while sub != 0 {
                let group: Vec<usize> = (0..64).filter(|&i| sub >> i & 1 == 1).collect();
                cur.push(group);
                rec(rest & !sub, cur, out);
                cur.pop();
                sub = (sub - 1) & rest;
            }
        }
        assert!(n < 64);
        rec((1u64 << n) - 1, &mut cur, &mut out);
        out.sort();
        out
    }

    /// Number of plans over `n` nodes, saturating.
    pub fn count(n: usize) -> u128 {
        // ordered set partitions (Fubini numbers) summed over subsets
        let mut fubini = vec![1u128];
        for m in 1..=n {
            let mut s = 0u128;
            for j in 1..=m {
                s = s.saturating_add(binom(m, j).saturating_mul(fubini[m - j]));
            }
            fubini.push(s);
        }
        (0..=n).fold(0u128, |acc, t| acc.saturating_add(binom(n, t).saturating_mul(fubini[t])))
    }
}

fn binom(n: usize, k: usize) -> u128 {
    let mut r = 1u128;
    for i in 0..k {
        r = r.saturating_mul((n - i) as u128) / (i as u128 + 1);
    }
    r
}

/// How one step is carried out once functions are chosen.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Realization {
    Parallel,
    Sequential(Permutation),
    Async(AsynchronousPlan),
}

/// One fully resolved step choice.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Action {
    pub selection: FunctionSelection,
    pub realization: Realization,
}

impl fmt::Display for Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sel: Vec<String> = self.selection.0.iter().map(|j| (j + 1).to_string()).collect();
        write!(f, "J=[{}]", sel.join(","))?;
        match &self.realization {
            Realization::Parallel => write!(f, " parallel"),
            Realization::Sequential(p) => {
                let o: Vec<String> = p.order().iter().map(|v| (v + 1).to_string()).collect();
                write!(f, " seq=[{}]", o.join(","))
            }
            Realization::Async(plan) => {
                let gs: Vec<String> = plan
                    .groups()
                    .iter()
                    .map(|g| {
                        let m: Vec<String> = g.iter().map(|v| (v + 1).to_string()).collect();
                        format!("{{{}}}", m.join(","))
                    })
                    .collect();
                write!(f, " async=[{}]", gs.join(","))
            }
        }
    }
}

/// Aggregated label of one successor: how many actions produce it and one of them.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Label {
    pub count: u128,
    pub witness: Action,
}

/// An `(n, k)` multi-choice system. Immutable once built.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct System {
    n: usize,
    k: usize,
    functions: Vec<Vec<NodeFunction>>,
    selection: SelectionScheme,
    schedule: UpdateSchedule,
}

impl System {
    /// Builds a system; `functions[i][j]` is the `j`-th choice of node `i`.
    pub fn new(
        functions: Vec<Vec<NodeFunction>>,
        selection: SelectionScheme,
        schedule: UpdateSchedule,
    ) -> Result<System> {
        System::with_fanin(functions, selection, schedule, DEFAULT_TABLE_FANIN)
    }

    pub fn with_fanin(
        functions: Vec<Vec<NodeFunction>>,
        selection: SelectionScheme,
        schedule: UpdateSchedule,
        fanin_bound: usize,
    ) -> Result<System> {
        let n = functions.len();
        if n == 0 {
            return Err(Error::Structure("a system needs at least one node".into()));
        }
        if n > MAX_NODES {
            return Err(Error::Structure(format!("at most {MAX_NODES} nodes are supported")));
        }
        let k = functions[0].len();
        if k == 0 {
            return Err(Error::Structure("a system needs at least one choice".into()));
        }
        for (i, row) in functions.iter().enumerate() {
            if row.len() != k {
                return Err(Error::Structure(format!(
                    "node {} has {} choices, expected {k}",
                    i + 1,
                    row.len()
                )));
            }
            for (j, f) in row.iter().enumerate() {
                f.validate(n, fanin_bound).map_err(|e| match e {
                    Error::Structure(m) => {
                        Error::Structure(format!("function ({}, {}): {m}", i + 1, j + 1))
                    }
                    other => other,
                })?;
            }
        }
        if let SelectionScheme::SemiCoordinated(blocks) = &selection {
            let mut seen = vec![false; n];
            for b in blocks {
                if b.is_empty() {
                    return Err(Error::Selection("empty partition block".into()));
                }
                for &v in b {
                    if v >= n || seen[v] {
                        return Err(Error::Selection(format!(
                            "partition is not a set of disjoint blocks over 1..={n} (node {})",
                            v + 1
                        )));
                    }
                    seen[v] = true;
                }
            }
            if seen.iter().any(|s| !s) {
                return Err(Error::Selection("partition does not cover every node".into()));
            }
        }
        match &schedule {
            UpdateSchedule::FixedPermutation(p) => check_perm_len(p, n)?,
            UpdateSchedule::PermutationList(ps) => {
                if ps.is_empty() {
                    return Err(Error::Permutation("permutation list is empty".into()));
                }
                for p in ps {
                    check_perm_len(p, n)?;
                }
            }
            _ => {}
        }
        Ok(System { n, k, functions, selection, schedule })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn function(&self, node: usize, choice: usize) -> &NodeFunction {
        &self.functions[node][choice]
    }

    pub fn choices(&self, node: usize) -> &[NodeFunction] {
        &self.functions[node]
    }

    pub fn functions(&self) -> &[Vec<NodeFunction>] {
        &self.functions
    }

    pub fn selection(&self) -> &SelectionScheme {
        &self.selection
    }

    pub fn schedule(&self) -> &UpdateSchedule {
        &self.schedule
    }

    /// Same functions under another selection scheme and schedule.
    pub fn with_model(&self, selection: SelectionScheme, schedule: UpdateSchedule) -> Result<System> {
        System::new(self.functions.clone(), selection, schedule)
    }

    pub fn all_functions(&self) -> impl Iterator<Item = &NodeFunction> {
        self.functions.iter().flatten()
    }

    /// Checks that `sel` is permissible under the selection scheme.
    pub fn check_selection(&self, sel: &FunctionSelection) -> Result<()> {
        let j = &sel.0;
        if j.len() != self.n {
            return Err(Error::Selection(format!(
                "selection has length {}, expected {}",
                j.len(),
                self.n
            )));
        }
        if let Some(&bad) = j.iter().find(|&&x| x >= self.k) {
            return Err(Error::Selection(format!("choice {} out of range 1..={}", bad + 1, self.k)));
        }
        match &self.selection {
            SelectionScheme::Fixed if j.iter().any(|&x| x != 0) => {
                Err(Error::Selection("fixed selection must choose function 1 everywhere".into()))
            }
            SelectionScheme::Coordinated if j.iter().any(|&x| x != j[0]) => {
                Err(Error::Selection("coordinated selection must be constant".into()))
            }
            SelectionScheme::SemiCoordinated(blocks)
                if blocks.iter().any(|b| b.iter().any(|&v| j[v] != j[b[0]])) =>
            {
                Err(Error::Selection("semi-coordinated selection must be constant per block".into()))
            }
            _ => Ok(()),
        }
    }

    fn check_config(&self, c: Config) -> Result<()> {
        if self.n < 128 && c.0 >> self.n != 0 {
            return Err(Error::Config(format!("configuration wider than {} nodes", self.n)));
        }
        Ok(())
    }

    /// Parallel step: every node reads the unmodified `c`.
    pub fn step_parallel(&self, c: Config, sel: &FunctionSelection) -> Result<Config> {
        self.check_config(c)?;
        self.check_selection(sel)?;
        Ok(self.apply_parallel(c, &sel.0))
    }

    /// Sequential step: completions applied in the order of `perm`.
    pub fn step_sequential(&self, c: Config, sel: &FunctionSelection, perm: &Permutation) -> Result<Config> {
        self.check_config(c)?;
        self.check_selection(sel)?;
        check_perm_len(perm, self.n)?;
        Ok(self.apply_sequential(c, &sel.0, perm.order()))
    }

    /// Asynchronous step: groups in order, each a parallel sub-step over its members.
    pub fn step_async(&self, c: Config, sel: &FunctionSelection, plan: &AsynchronousPlan) -> Result<Config> {
        self.check_config(c)?;
        self.check_selection(sel)?;
        let checked = AsynchronousPlan::new(plan.groups().to_vec(), self.n)?;
        Ok(self.apply_async(c, &sel.0, &checked))
    }

    /// Executes an action without validating it.
    pub fn apply(&self, c: Config, action: &Action) -> Config {
        match &action.realization {
            Realization::Parallel => self.apply_parallel(c, &action.selection.0),
            Realization::Sequential(p) => self.apply_sequential(c, &action.selection.0, p.order()),
            Realization::Async(plan) => self.apply_async(c, &action.selection.0, plan),
        }
    }

    /// Executes an action after checking it is permissible for this system.
    pub fn execute(&self, c: Config, action: &Action) -> Result<Config> {
        self.check_action(action)?;
        match &action.realization {
            Realization::Parallel => self.step_parallel(c, &action.selection),
            Realization::Sequential(p) => self.step_sequential(c, &action.selection, p),
            Realization::Async(plan) => self.step_async(c, &action.selection, plan),
        }
    }

    /// Checks that the realization kind matches the schedule.
    pub fn check_action(&self, action: &Action) -> Result<()> {
        self.check_selection(&action.selection)?;
        let ok = match (&self.schedule, &action.realization) {
            (UpdateSchedule::Parallel, Realization::Parallel) => true,
            (UpdateSchedule::FixedPermutation(p), Realization::Sequential(q)) => p == q,
            (UpdateSchedule::PermutationList(ps), Realization::Sequential(q)) => ps.contains(q),
            (UpdateSchedule::ArbitraryPermutation, Realization::Sequential(q)) => q.len() == self.n,
            (UpdateSchedule::Asynchronous, Realization::Async(_)) => true,
            _ => false,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::Model(format!("action {action} is not permitted by the schedule")))
        }
    }

    #[inline]
    pub(crate) fn apply_parallel(&self, c: Config, sel: &[usize]) -> Config {
        let mut out = 0u128;
        for (i, row) in self.functions.iter().enumerate() {
            if row[sel[i]].eval(c) {
                out |= 1 << i;
            }
        }
        Config(out)
    }

    #[inline]
    pub(crate) fn apply_sequential(&self, c: Config, sel: &[usize], order: &[usize]) -> Config {
        let mut cur = c;
        for &i in order {
            let v = self.functions[i][sel[i]].eval(cur);
            cur = cur.with(i, v);
        }
        cur
    }

    pub(crate) fn apply_async(&self, c: Config, sel: &[usize], plan: &AsynchronousPlan) -> Config {
        let mut cur = c;
        for g in plan.groups() {
            let entry = cur;
            for &i in g {
                cur = cur.with(i, self.functions[i][sel[i]].eval(entry));
            }
        }
        cur
    }

    /// Selections permitted by the scheme, or `None` for individual selection
    /// (which is handled node by node instead of being listed).
    pub fn listed_selections(&self) -> Option<Vec<FunctionSelection>> {
        let n = self.n;
        let k = self.k;
        match &self.selection {
            SelectionScheme::Fixed => Some(vec![FunctionSelection(vec![0; n])]),
            SelectionScheme::Coordinated => {
                Some((0..k).map(|j| FunctionSelection(vec![j; n])).collect())
            }
            SelectionScheme::Individual => None,
            SelectionScheme::SemiCoordinated(blocks) => {
                let mut out = Vec::new();
                let mut digits = vec![0usize; blocks.len()];
                loop {
                    let mut sel = vec![0; n];
                    for (b, block) in blocks.iter().enumerate() {
                        for &v in block {
                            sel[v] = digits[b];
                        }
                    }
                    out.push(FunctionSelection(sel));
                    if !increment(&mut digits, k) {
                        break;
                    }
                }
                Some(out)
            }
        }
    }

    /// Number of permissible selections, saturating.
    pub fn selection_count(&self) -> u128 {
        let k = self.k as u128;
        match &self.selection {
            SelectionScheme::Fixed => 1,
            SelectionScheme::Coordinated => k,
            SelectionScheme::Individual => sat_pow(k, self.n),
            SelectionScheme::SemiCoordinated(b) => sat_pow(k, b.len()),
        }
    }

    /// Number of schedule realizations, saturating.
    pub fn realization_count(&self) -> u128 {
        match &self.schedule {
            UpdateSchedule::Parallel | UpdateSchedule::FixedPermutation(_) => 1,
            UpdateSchedule::PermutationList(ps) => ps.len() as u128,
            UpdateSchedule::ArbitraryPermutation => {
                (1..=self.n as u128).fold(1u128, |a, x| a.saturating_mul(x))
            }
            UpdateSchedule::Asynchronous => AsynchronousPlan::count(self.n),
        }
    }

    /// Size of the full action space, saturating.
    pub fn action_count(&self) -> u128 {
        self.selection_count().saturating_mul(self.realization_count())
    }

    /// Every realization permitted by the schedule.
    pub fn realizations(&self, cap: u128) -> Result<Vec<Realization>> {
        let count = self.realization_count();
        if count > cap {
            return Err(Error::ActionCap { count, cap });
        }
        Ok(match &self.schedule {
            UpdateSchedule::Parallel => vec![Realization::Parallel],
            UpdateSchedule::FixedPermutation(p) => vec![Realization::Sequential(p.clone())],
            UpdateSchedule::PermutationList(ps) => {
                ps.iter().cloned().map(Realization::Sequential).collect()
            }
            UpdateSchedule::ArbitraryPermutation => {
                Permutation::all(self.n).into_iter().map(Realization::Sequential).collect()
            }
            UpdateSchedule::Asynchronous => {
                AsynchronousPlan::all(self.n).into_iter().map(Realization::Async).collect()
            }
        })
    }

    /// Streams every permissible action exactly once; fails if there are more than `cap`.
    pub fn enumerate_actions(&self, cap: u128) -> Result<ActionIter> {
        let count = self.action_count();
        if count > cap {
            return Err(Error::ActionCap { count, cap });
        }
        let realizations = self.realizations(cap)?;
        let selections = match self.listed_selections() {
            Some(v) => SelectionSource::Listed(v),
            None => SelectionSource::Individual { k: self.k },
        };
        Ok(ActionIter {
            realizations,
            selections,
            r: 0,
            digits: vec![0; self.n],
            listed_pos: 0,
            done: false,
        })
    }

    /// Distinct one-step images of `c` with aggregated labels.
    pub fn successors(&self, c: Config, cap: u128) -> Result<BTreeMap<Config, Label>> {
        let mut sink = LabelSink(BTreeMap::new());
        self.for_each_successor(c, cap, &mut sink)?;
        Ok(sink.0)
    }

    /// Distinct one-step images of `c`, sorted, without labels.
    pub fn successor_set(&self, c: Config, cap: u128) -> Result<Vec<Config>> {
        let mut sink = SetSink(Vec::new());
        self.for_each_successor(c, cap, &mut sink)?;
        let mut v = sink.0;
        v.sort_unstable();
        v.dedup();
        Ok(v)
    }

    /// Feeds every (image, action-count, witness) triple of `c` into `sink`.
    ///
    /// Realizations and listed selections are enumerated; individual selection
    /// branches per node on distinct output values, so its `k^n` factor never
    /// counts against `cap`.
    pub fn for_each_successor(&self, c: Config, cap: u128, sink: &mut dyn Sink) -> Result<()> {
        let listed = self.listed_selections();
        let sel_count = listed.as_ref().map_or(1, |v| v.len() as u128);
        let count = self.realization_count().saturating_mul(sel_count);
        if count > cap {
            return Err(Error::ActionCap { count, cap });
        }
        let realizations = self.realizations(cap)?;
        for real in &realizations {
            match &listed {
                Some(sels) => {
                    for sel in sels {
                        let d = match real {
                            Realization::Parallel => self.apply_parallel(c, &sel.0),
                            Realization::Sequential(p) => self.apply_sequential(c, &sel.0, p.order()),
                            Realization::Async(plan) => self.apply_async(c, &sel.0, plan),
                        };
                        sink.add(d, 1, &sel.0, real);
                    }
                }
                None => self.branch_individual(c, real, sink),
            }
        }
        Ok(())
    }

    /// Per-node value options for node `i` read from `c`: (value, count, first choice).
    fn options(&self, i: usize, c: Config) -> ([u128; 2], [usize; 2]) {
        let mut count = [0u128; 2];
        let mut first = [usize::MAX; 2];
        for (j, f) in self.functions[i].iter().enumerate() {
            let v = f.eval(c) as usize;
            if count[v] == 0 {
                first[v] = j;
            }
            count[v] += 1;
        }
        (count, first)
    }

    fn branch_individual(&self, c: Config, real: &Realization, sink: &mut dyn Sink) {
        let n = self.n;
        let mut sel = vec![0usize; n];
        match real {
            Realization::Parallel => {
                let all: Vec<usize> = (0..n).collect();
                self.branch_group(c, c, &all, 0, 1, &mut sel, &mut |d, cnt, sel| {
                    sink.add(d, cnt, sel, real)
                });
            }
            Realization::Sequential(p) => {
                self.branch_seq(c, p.order(), 1, &sel, &mut |d, cnt, sel| {
                    sink.add(d, cnt, sel, real)
                });
            }
            Realization::Async(plan) => {
                let covered: usize = plan.groups().iter().map(|g| g.len()).sum();
                let idle = sat_pow(self.k as u128, n - covered);
                self.branch_async(c, plan.groups(), 0, idle, &mut sel, &mut |d, cnt, sel| {
                    sink.add(d, cnt, sel, real)
                });
            }
        }
    }

    #[allow(clippy::too_many_arguments)]
    fn branch_group(
        &self,
        entry: Config,
        cur: Config,
        members: &[usize],
        pos: usize,
        count: u128,
        sel: &mut Vec<usize>,
        emit: &mut dyn FnMut(Config, u128, &[usize]),
    ) {
        if pos == members.len() {
            emit(cur, count, sel);
            return;
        }
        let i = members[pos];
        let (cnt, first) = self.options(i, entry);
        for v in 0..2 {
            if cnt[v] > 0 {
                sel[i] = first[v];
                self.branch_group(entry, cur.with(i, v == 1), members, pos + 1, count.saturating_mul(cnt[v]), sel, emit);
            }
        }
    }

    /// Sequential branching merges equal intermediate configurations after
    /// every position, summing their selection counts.
    fn branch_seq(
        &self,
        c: Config,
        order: &[usize],
        count: u128,
        sel: &[usize],
        emit: &mut dyn FnMut(Config, u128, &[usize]),
    ) {
        let mut frontier: Vec<(Config, u128, Vec<usize>)> = vec![(c, count, sel.to_vec())];
        let mut index: FxHashMap<Config, usize> = FxHashMap::default();
        for &i in order {
            index.clear();
            let mut next: Vec<(Config, u128, Vec<usize>)> = Vec::with_capacity(frontier.len() * 2);
            for (cur, cnt_in, s) in frontier {
                let (cnt, first) = self.options(i, cur);
                for v in 0..2 {
                    if cnt[v] == 0 {
                        continue;
                    }
                    let d = cur.with(i, v == 1);
                    let w = cnt_in.saturating_mul(cnt[v]);
                    match index.get(&d) {
                        Some(&at) => next[at].1 = next[at].1.saturating_add(w),
                        None => {
                            let mut s2 = s.clone();
                            s2[i] = first[v];
                            index.insert(d, next.len());
                            next.push((d, w, s2));
                        }
                    }
                }
            }
            frontier = next;
        }
        for (d, cnt, s) in frontier {
            emit(d, cnt, &s);
        }
    }

    fn branch_async(
        &self,
        cur: Config,
        groups: &[Vec<usize>],
        g: usize,
        count: u128,
        sel: &mut Vec<usize>,
        emit: &mut dyn FnMut(Config, u128, &[usize]),
    ) {
        if g == groups.len() {
            emit(cur, count, sel);
            return;
        }
        // collect this group's outcomes first so the recursion can borrow `sel` again
        let mut outcomes: Vec<(Config, u128, Vec<usize>)> = Vec::new();
        self.branch_group(cur, cur, &groups[g], 0, count, sel, &mut |d, cnt, s| {
            outcomes.push((d, cnt, s.to_vec()))
        });
        for (d, cnt, s) in outcomes {
            let mut s = s;
            self.branch_async(d, groups, g + 1, cnt, &mut s, emit);
        }
    }
}

fn check_perm_len(p: &Permutation, n: usize) -> Result<()> {
    if p.len() != n {
        return Err(Error::Permutation(format!(
            "permutation has length {}, expected {n}",
            p.len()
        )));
    }
    Ok(())
}

pub(crate) fn sat_pow(base: u128, exp: usize) -> u128 {
    (0..exp).fold(1u128, |a, _| a.saturating_mul(base))
}

/// Mixed-radix increment; returns false after wrapping around.
fn increment(digits: &mut [usize], radix: usize) -> bool {
    for d in digits.iter_mut() {
        *d += 1;
        if *d < radix {
            return true;
        }
        *d = 0;
    }
    false
}

/// Receives successor triples from [`System::for_each_successor`].
pub trait Sink {
    fn add(&mut self, d: Config, count: u128, sel: &[usize], real: &Realization);
}

struct LabelSink(BTreeMap<Config, Label>);

impl Sink for LabelSink {
    fn add(&mut self, d: Config, count: u128, sel: &[usize], real: &Realization) {
        self.0
            .entry(d)
            .and_modify(|l| l.count = l.count.saturating_add(count))
            .or_insert_with(|| Label {
                count,
                witness: Action {
                    selection: FunctionSelection(sel.to_vec()),
                    realization: real.clone(),
                },
            });
    }
}

struct SetSink(Vec<Config>);

impl Sink for SetSink {
    fn add(&mut self, d: Config, _count: u128, _sel: &[usize], _real: &Realization) {
        self.0.push(d);
    }
}

enum SelectionSource {
    Listed(Vec<FunctionSelection>),
    Individual { k: usize },
}

/// Iterator over the full action space; see [`System::enumerate_actions`].
pub struct ActionIter {
    realizations: Vec<Realization>,
    selections: SelectionSource,
    r: usize,
    digits: Vec<usize>,
    listed_pos: usize,
    done: bool,
}

impl Iterator for ActionIter {
    type Item = Action;

    fn next(&mut self) -> Option<Action> {
        if self.done || self.r >= self.realizations.len() {
            return None;
        }
        let real = self.realizations[self.r].clone();
        let (sel, wrapped) = match &self.selections {
            SelectionSource::Listed(v) => {
                let s = v[self.listed_pos].clone();
                self.listed_pos += 1;
                let wrapped = self.listed_pos == v.len();
                if wrapped {
                    self.listed_pos = 0;
                }
                (s, wrapped)
            }
            SelectionSource::Individual { k, .. } => {
                let s = FunctionSelection(self.digits.clone());
                let k = *k;
                (s, !increment(&mut self.digits, k))
            }
        };
        if wrapped {
            self.r += 1;
            if self.r == self.realizations.len() {
                self.done = true;
            }
        }
        Some(Action { selection: sel, realization: real })
    }
}
