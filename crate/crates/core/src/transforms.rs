//! Simulations between models, with configuration embeddings and their verification.

use std::fmt;

use num_rational::Ratio;
use rayon::prelude::*;
use rustc_hash::FxHashMap;

use crate::caps::Caps;
use crate::config::Config;
use crate::error::{Error, Result};
use crate::graph::{check_state_cap, Explorer};
use crate::system::{NodeFunction, Permutation, SelectionScheme, System, UpdateSchedule};

/// One block of an embedded configuration.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Segment {
    /// The source configuration verbatim.
    Copy,
    /// The bitwise complement of the source configuration.
    Complement,
    /// Fixed bits, node order.
    Const(Vec<bool>),
}

/// A configuration map built by concatenating segments.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Mapping(pub Vec<Segment>);

impl Mapping {
    pub fn width(&self, n: usize) -> usize {
        self.0
            .iter()
            .map(|s| match s {
                Segment::Copy | Segment::Complement => n,
                Segment::Const(b) => b.len(),
            })
            .sum()
    }

    pub fn apply(&self, c: Config, n: usize) -> Config {
        let mut out = Config::ZERO;
        let mut off = 0;
        for s in &self.0 {
            match s {
                Segment::Copy => {
                    out = out.splice(off, n, c);
                    off += n;
                }
                Segment::Complement => {
                    out = out.splice(off, n, c.complement(n));
                    off += n;
                }
                Segment::Const(bits) => {
                    out = out.splice(off, bits.len(), Config::from_bits(bits));
                    off += bits.len();
                }
            }
        }
        out
    }

    /// A mapping is injective iff it copies the source at least once.
    pub fn is_injective(&self) -> bool {
        self.0.iter().any(|s| matches!(s, Segment::Copy | Segment::Complement))
    }
}

impl fmt::Display for Mapping {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self
            .0
            .iter()
            .map(|s| match s {
                Segment::Copy => "copy".to_string(),
                Segment::Complement => "complement".to_string(),
                Segment::Const(b) => {
                    format!("const:{}", b.iter().map(|&x| if x { '1' } else { '0' }).collect::<String>())
                }
            })
            .collect();
        write!(f, "{}", parts.join(" "))
    }
}

/// A configuration embedding between a source and a target system.
///
/// With `target_map` set, the embedding is split: paths start at `map(a)`
/// and end at `target_map(b)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Embedding {
    pub source_n: usize,
    pub target_n: usize,
    pub map: Mapping,
    pub target_map: Option<Mapping>,
    /// Expansion rate promised by the construction.
    pub claimed_rate: Ratio<u64>,
    pub measured_expansion: Option<Ratio<u64>>,
}

impl Embedding {
    pub fn new(source_n: usize, target_n: usize, map: Mapping, claimed_rate: u64) -> Result<Embedding> {
        let e = Embedding {
            source_n,
            target_n,
            map,
            target_map: None,
            claimed_rate: Ratio::from_integer(claimed_rate),
            measured_expansion: None,
        };
        e.check()?;
        Ok(e)
    }

    pub fn split(mut self, target_map: Mapping) -> Result<Embedding> {
        self.target_map = Some(target_map);
        self.check()?;
        Ok(self)
    }

    pub fn identity(n: usize) -> Embedding {
        Embedding::new(n, n, Mapping(vec![Segment::Copy]), 1).expect("identity mapping is well formed")
    }

    fn check(&self) -> Result<()> {
        for m in std::iter::once(&self.map).chain(self.target_map.as_ref()) {
            if m.width(self.source_n) != self.target_n {
                return Err(Error::Structure(format!(
                    "mapping width {} differs from target size {}",
                    m.width(self.source_n),
                    self.target_n
                )));
            }
            if !m.is_injective() {
                return Err(Error::Structure("mapping is not injective".into()));
            }
        }
        Ok(())
    }

    pub fn apply(&self, c: Config) -> Config {
        self.map.apply(c, self.source_n)
    }

    pub fn apply_target(&self, c: Config) -> Config {
        self.target_map.as_ref().unwrap_or(&self.map).apply(c, self.source_n)
    }
}

/// Output of a transform: the simulating system, its embedding and per-cell notes.
#[derive(Clone, Debug)]
pub struct Transformed {
    pub system: System,
    pub embedding: Embedding,
    pub notes: Vec<String>,
}

fn id_column(n: usize) -> impl Iterator<Item = NodeFunction> {
    (0..n).map(NodeFunction::Pos)
}

/// Asynchronous individual `(n, k)` to parallel individual `(n, k+1)`: the
/// extra choice is the identity.
pub fn async_to_parallel(sys: &System) -> Result<Transformed> {
    require(sys, |s| matches!(s, UpdateSchedule::Asynchronous), "asynchronous schedule")?;
    require_selection(sys, |s| matches!(s, SelectionScheme::Individual), "individual selection")?;
    let n = sys.n();
    let functions: Vec<Vec<NodeFunction>> = sys
        .functions()
        .iter()
        .zip(id_column(n))
        .map(|(row, id)| row.iter().cloned().chain(std::iter::once(id)).collect())
        .collect();
    let system = System::new(functions, SelectionScheme::Individual, UpdateSchedule::Parallel)?;
    Ok(Transformed {
        system,
        embedding: Embedding::new(n, n, Mapping(vec![Segment::Copy]), n as u64)?,
        notes: vec![format!("choice {} of every node is the identity", sys.k() + 1)],
    })
}

/// Parallel individual `(n, k+1)` with an identity choice per node to
/// asynchronous individual `(n, k)`.
///
/// The first identity choice of each node is removed. With a single choice
/// the identity column is kept.
pub fn parallel_to_async(sys: &System) -> Result<Transformed> {
    require(sys, |s| matches!(s, UpdateSchedule::Parallel), "parallel schedule")?;
    require_selection(sys, |s| matches!(s, SelectionScheme::Individual), "individual selection")?;
    let n = sys.n();
    let mut functions = Vec::with_capacity(n);
    for (i, row) in sys.functions().iter().enumerate() {
        let Some(pos) = row.iter().position(|f| *f == NodeFunction::Pos(i)) else {
            return Err(Error::Precondition(format!("node {} has no identity choice", i + 1)));
        };
        let mut row = row.clone();
        if sys.k() > 1 {
            row.remove(pos);
        }
        functions.push(row);
    }
    let system = System::new(functions, SelectionScheme::Individual, UpdateSchedule::Asynchronous)?;
    let mut notes = vec!["the first identity choice of every node was removed".to_string()];
    if sys.k() == 1 {
        notes = vec!["single identity choice kept".to_string()];
    }
    Ok(Transformed { system, embedding: Embedding::new(n, n, Mapping(vec![Segment::Copy]), 1)?, notes })
}

/// Parallel `(n, k)` to fixed-permutation `(2n, k)` with a shadow copy.
///
/// Shadow node `i+n` computes the chosen function of node `i` from the first
/// half; node `i` then copies its shadow. The order is all shadows, then all
/// originals.
pub fn parallel_to_sequential(sys: &System) -> Result<Transformed> {
    require(sys, |s| matches!(s, UpdateSchedule::Parallel), "parallel schedule")?;
    let n = sys.n();
    let k = sys.k();
    let mut functions: Vec<Vec<NodeFunction>> = (0..n).map(|i| vec![NodeFunction::Pos(i + n); k]).collect();
    functions.extend(sys.functions().iter().cloned());
    let selection = match sys.selection() {
        SelectionScheme::SemiCoordinated(blocks) => SelectionScheme::SemiCoordinated(
            blocks.iter().map(|b| b.iter().copied().chain(b.iter().map(|&v| v + n)).collect()).collect(),
        ),
        other => other.clone(),
    };
    let order: Vec<usize> = (n..2 * n).chain(0..n).collect();
    let system = System::new(functions, selection, UpdateSchedule::FixedPermutation(Permutation::new(order)?))?;
    Ok(Transformed {
        system,
        embedding: Embedding::new(n, 2 * n, Mapping(vec![Segment::Copy, Segment::Copy]), 1)?,
        notes: vec![format!("nodes {}..={} copy their shadows", 1, n)],
    })
}

/// Layout of the pipelined simulation of sequential updates.
struct Pipeline {
    n: usize,
    /// Number of token rows (one per choice and permutation).
    rows: usize,
}

impl Pipeline {
    fn v(&self, level: usize, i: usize) -> usize {
        level * self.n + i
    }

    fn a(&self, row: usize, level: usize) -> usize {
        self.n * (self.n + 1) + row * (self.n + 1) + level
    }

    fn z(&self) -> usize {
        self.n * (self.n + 1) + self.rows * (self.n + 1)
    }

    fn width(&self) -> usize {
        self.z() + 1
    }
}

/// Fixed-permutation coordinated `(n, k)` to parallel coordinated.
///
/// Rows `1..=n+1` of an `(n+1) x n` grid form a pipeline; choice `G_j`
/// advances it one level applying the next node of the permutation with
/// function `j`, and `H_j` writes the last row back. A one-hot token row per
/// choice forces exactly `n` applications of one `G_j` before its `H_j`.
/// The result is padded with inert nodes to `k(n+1)^2 + 1` nodes.
pub fn sequential_to_parallel(sys: &System) -> Result<Transformed> {
    let perm = match sys.schedule() {
        UpdateSchedule::FixedPermutation(p) => p.clone(),
        _ => return Err(Error::Model("sequential_to_parallel needs a fixed permutation".into())),
    };
    require_selection(sys, |s| matches!(s, SelectionScheme::Coordinated), "coordinated selection")?;
    let mut t = pipeline_system(sys, &[perm])?;
    let n = sys.n();
    let k = sys.k();
    let target = k * (n + 1) * (n + 1) + 1;
    let core = t.system.n();
    let pad = target - core;
    if pad > 0 {
        let mut functions = t.system.functions().to_vec();
        for v in core..target {
            functions.push(vec![NodeFunction::Pos(v); 2 * k]);
        }
        t.system = System::new(functions, SelectionScheme::Coordinated, UpdateSchedule::Parallel)?;
        let mut map = t.embedding.map.clone();
        map.0.push(Segment::Const(vec![false; pad]));
        t.embedding = Embedding::new(n, target, map, (n + 1) as u64)?;
        t.notes.push(format!("nodes {}..={} are inert padding held at 0", core + 1, target));
    }
    Ok(t)
}

/// Permutation-list coordinated `(n, k)` with `L` permutations to parallel
/// coordinated `((kL+n)(n+1)+1, 2kL)`: one token row per (permutation, choice).
pub fn permlist_to_parallel(sys: &System) -> Result<Transformed> {
    let perms = match sys.schedule() {
        UpdateSchedule::PermutationList(ps) => ps.clone(),
        UpdateSchedule::FixedPermutation(p) => vec![p.clone()],
        _ => return Err(Error::Model("permlist_to_parallel needs a permutation list".into())),
    };
    require_selection(sys, |s| matches!(s, SelectionScheme::Coordinated), "coordinated selection")?;
    pipeline_system(sys, &perms)
}

fn pipeline_system(sys: &System, perms: &[Permutation]) -> Result<Transformed> {
    let n = sys.n();
    let k = sys.k();
    let rows = k * perms.len();
    let lay = Pipeline { n, rows };
    let width = lay.width();
    let z = lay.z();
    let choices = 2 * rows;
    let mut functions: Vec<Vec<NodeFunction>> = (0..width).map(|v| vec![NodeFunction::Pos(v); choices]).collect();
    // choice index of G for token row r is r, of H is rows + r; row r = p * k + j
    for (p, perm) in perms.iter().enumerate() {
        for j in 0..k {
            let r = p * k + j;
            let g = r;
            let h = rows + r;
            for level in 0..n {
                let node = perm.order()[level];
                for i in 0..n {
                    functions[lay.v(level + 1, i)][g] = if i == node {
                        sys.function(node, j).map_sources(|s| lay.v(level, s))
                    } else {
                        NodeFunction::Pos(lay.v(level, i))
                    };
                }
            }
            for level in 0..n {
                for i in 0..n {
                    functions[lay.v(level, i)][h] = NodeFunction::Pos(lay.v(n, i));
                }
            }
            for other in 0..rows {
                if other == r {
                    functions[lay.a(r, 0)][g] = NodeFunction::Pos(z);
                    for level in 1..=n {
                        functions[lay.a(r, level)][g] = NodeFunction::Pos(lay.a(r, level - 1));
                    }
                    functions[lay.a(r, 0)][h] = NodeFunction::Pos(lay.a(r, n));
                }
                for level in 1..=n {
                    functions[lay.a(other, level)][h] = NodeFunction::Pos(z);
                }
            }
        }
    }
    let system = System::new(functions, SelectionScheme::Coordinated, UpdateSchedule::Parallel)?;
    let mut segs = vec![Segment::Copy; n + 1];
    let mut token = vec![false; n + 1];
    token[0] = true;
    for _ in 0..rows {
        segs.push(Segment::Const(token.clone()));
    }
    segs.push(Segment::Const(vec![false]));
    let mut notes = vec![
        "nodes 1..=n(n+1) form pipeline levels 1..=n+1".to_string(),
        format!("choices 1..={rows} advance the pipeline, choices {}..={} write it back", rows + 1, 2 * rows),
        "level 1 and node z keep their state under every choice".to_string(),
    ];
    notes.push("token rows not named by a choice keep their first cell and clear the rest under write-back".into());
    Ok(Transformed { system, embedding: Embedding::new(n, width, Mapping(segs), (n + 1) as u64)?, notes })
}

/// Coordinated `(n, k)` to coordinated 3-choice.
///
/// `k` copies of the state each follow one original choice (group 1), rotate
/// (group 2) and finally collapse onto copy 1 (group 3); three auxiliary
/// nodes make group 3 terminal. Sequential schedules add a temporary copy so
/// the rotation can run in place, giving `(k+1)n+3` nodes.
pub fn kchoice_to_3choice(sys: &System) -> Result<Transformed> {
    require_selection(sys, |s| matches!(s, SelectionScheme::Coordinated), "coordinated selection")?;
    let n = sys.n();
    let k = sys.k();
    let perms: Option<Vec<Permutation>> = match sys.schedule() {
        UpdateSchedule::Parallel => None,
        UpdateSchedule::FixedPermutation(p) => Some(vec![p.clone()]),
        UpdateSchedule::PermutationList(ps) => Some(ps.clone()),
        _ => {
            return Err(Error::Model(
                "kchoice_to_3choice needs a parallel, fixed-permutation or permutation-list schedule".into(),
            ))
        }
    };
    let sequential = perms.is_some();
    let copy = |j: usize, i: usize| j * n + i;
    let temp = |i: usize| k * n + i;
    let y0 = if sequential { (k + 1) * n } else { k * n };
    let (y1, y2, y3) = (y0, y0 + 1, y0 + 2);
    let width = y0 + 3;
    let mut functions: Vec<Vec<NodeFunction>> = vec![Vec::with_capacity(3); width];
    for j in 0..k {
        for i in 0..n {
            let v = copy(j, i);
            functions[v].push(sys.function(i, j).map_sources(|s| copy(j, s)));
            let from = if j == 0 {
                if sequential {
                    temp(i)
                } else {
                    copy(k - 1, i)
                }
            } else {
                copy(j - 1, i)
            };
            functions[v].push(NodeFunction::Pos(from));
            functions[v].push(if j == 0 { NodeFunction::Pos(v) } else { NodeFunction::Pos(y1) });
        }
    }
    if sequential {
        for i in 0..n {
            functions[temp(i)] =
                vec![NodeFunction::Pos(temp(i)), NodeFunction::Pos(copy(k - 1, i)), NodeFunction::Pos(y1)];
        }
        functions[y1] = vec![NodeFunction::Pos(y3), NodeFunction::Pos(y3), NodeFunction::Pos(y2)];
        functions[y2] = vec![NodeFunction::Pos(y2), NodeFunction::Pos(y2), NodeFunction::Pos(y3)];
        functions[y3] = vec![NodeFunction::Pos(y3); 3];
    } else {
        functions[y1] = vec![NodeFunction::Pos(y1); 3];
        functions[y2] = vec![NodeFunction::Pos(y2), NodeFunction::Pos(y2), NodeFunction::Pos(y1)];
        functions[y3] = vec![NodeFunction::Pos(y2); 3];
    }
    let schedule = match &perms {
        None => UpdateSchedule::Parallel,
        Some(ps) => {
            let lifted = ps
                .iter()
                .map(|p| {
                    let mut order: Vec<usize> = p.order().iter().map(|&i| temp(i)).collect();
                    for j in (0..k).rev() {
                        order.extend(p.order().iter().map(|&i| copy(j, i)));
                    }
                    order.extend([y1, y2, y3]);
                    Permutation::new(order)
                })
                .collect::<Result<Vec<_>>>()?;
            if lifted.len() == 1 && matches!(sys.schedule(), UpdateSchedule::FixedPermutation(_)) {
                UpdateSchedule::FixedPermutation(lifted.into_iter().next().unwrap())
            } else {
                UpdateSchedule::PermutationList(lifted)
            }
        }
    };
    let system = System::new(functions, SelectionScheme::Coordinated, schedule)?;
    let mut src = vec![Segment::Copy; k];
    let mut tgt = vec![Segment::Copy];
    if k > 1 {
        tgt.push(Segment::Const(vec![false; (k - 1) * n]));
    }
    if sequential {
        src.push(Segment::Const(vec![false; n]));
        tgt.push(Segment::Const(vec![false; n]));
        src.push(Segment::Const(vec![false, true, false]));
        tgt.push(Segment::Const(vec![true, false, false]));
    } else {
        src.push(Segment::Const(vec![false, true, true]));
        tgt.push(Segment::Const(vec![false, false, true]));
    }
    let embedding = Embedding::new(n, width, Mapping(src), (k + 1) as u64)?.split(Mapping(tgt))?;
    let mut notes = vec![
        "choice 1 applies original choice j to copy j".to_string(),
        "choice 2 rotates copy j into copy j+1 and copy k into copy 1".to_string(),
        "choice 3 keeps copy 1 and clears the other copies".to_string(),
    ];
    if sequential {
        notes.push(format!("nodes {}..={} hold a temporary copy for the in-place rotation", k * n + 1, (k + 1) * n));
    }
    Ok(Transformed { system, embedding, notes })
}

/// Unary `(n, k)` to positive-unary `(2n, k)` with a complemented shadow half.
pub fn eliminate_negation(sys: &System) -> Result<Transformed> {
    let n = sys.n();
    if let Some(f) = sys.all_functions().find(|f| !f.is_unary()) {
        return Err(Error::Precondition(format!("non-unary function {f:?}")));
    }
    let schedule = match sys.schedule() {
        UpdateSchedule::Parallel => UpdateSchedule::Parallel,
        UpdateSchedule::FixedPermutation(p) => UpdateSchedule::FixedPermutation(interleave(p, n)?),
        UpdateSchedule::PermutationList(ps) => {
            UpdateSchedule::PermutationList(ps.iter().map(|p| interleave(p, n)).collect::<Result<_>>()?)
        }
        _ => {
            return Err(Error::Model(
                "eliminate_negation needs a parallel, fixed-permutation or permutation-list schedule".into(),
            ))
        }
    };
    let mut functions = vec![Vec::new(); 2 * n];
    for i in 0..n {
        for f in sys.choices(i) {
            let (main, shadow) = match *f {
                NodeFunction::Pos(l) => (l, l + n),
                NodeFunction::Neg(l) => (l + n, l),
                _ => unreachable!(),
            };
            functions[i].push(NodeFunction::Pos(main));
            functions[i + n].push(NodeFunction::Pos(shadow));
        }
    }
    let selection = match sys.selection() {
        SelectionScheme::SemiCoordinated(blocks) => SelectionScheme::SemiCoordinated(
            blocks.iter().map(|b| b.iter().copied().chain(b.iter().map(|&v| v + n)).collect()).collect(),
        ),
        other => other.clone(),
    };
    let system = System::new(functions, selection, schedule)?;
    Ok(Transformed {
        system,
        embedding: Embedding::new(n, 2 * n, Mapping(vec![Segment::Copy, Segment::Complement]), 1)?,
        notes: vec!["node i+n holds the complement of node i".to_string()],
    })
}

fn interleave(p: &Permutation, n: usize) -> Result<Permutation> {
    Permutation::new(p.order().iter().flat_map(|&i| [i, i + n]).collect())
}

fn require(sys: &System, ok: impl Fn(&UpdateSchedule) -> bool, what: &str) -> Result<()> {
    if ok(sys.schedule()) {
        Ok(())
    } else {
        Err(Error::Model(format!("input must use a {what}")))
    }
}

fn require_selection(sys: &System, ok: impl Fn(&SelectionScheme) -> bool, what: &str) -> Result<()> {
    if ok(sys.selection()) {
        Ok(())
    } else {
        Err(Error::Model(format!("input must use {what}")))
    }
}

/// Outcome of [`verify_embedding`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EmbeddingReport {
    pub is_embedding: bool,
    /// Maximum ratio of shortest nontrivial path lengths over pairs finite on both sides.
    pub expansion: Option<Ratio<u64>>,
    pub counterexample: Option<Counterexample>,
    pub pairs_checked: u64,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Counterexample {
    pub from: Config,
    pub to: Config,
    pub source_reachable: bool,
    pub target_reachable: bool,
}

/// Checks path equivalence under `emb` for every pair of source configurations
/// and measures the edge expansion rate.
///
/// Uniform embeddings compare nontrivial paths `a -> b` with `map(a) -> map(b)`.
/// Split embeddings compare paths of any length `a -> b` (including `a == b`)
/// with nontrivial paths `map(a) -> target_map(b)`; expansion then ranges over
/// `a != b`. Target paths longer than `length_bound` are treated as absent.
pub fn verify_embedding(
    source: &System,
    target: &System,
    emb: &Embedding,
    length_bound: u64,
    caps: &Caps,
) -> Result<EmbeddingReport> {
    if source.n() != emb.source_n || target.n() != emb.target_n {
        return Err(Error::Structure(format!(
            "embedding maps {} to {} nodes, systems have {} and {}",
            emb.source_n,
            emb.target_n,
            source.n(),
            target.n()
        )));
    }
    let n = source.n();
    check_state_cap(n, caps)?;
    let split = emb.target_map.is_some();
    let configs: Vec<Config> = Config::all(n).collect();
    let per_start = configs
        .par_iter()
        .map(|&a| -> Result<(Option<Counterexample>, Option<Ratio<u64>>, u64)> {
            let mut src = Explorer::new(source, caps);
            let mut tgt = Explorer::new(target, caps);
            let sd = src.nontrivial_distances(a)?;
            let td: FxHashMap<Config, u64> = tgt
                .nontrivial_distances(emb.apply(a))?
                .into_iter()
                .filter(|&(_, d)| d <= length_bound)
                .collect();
            let mut worst: Option<Ratio<u64>> = None;
            let mut pairs = 0u64;
            for &b in &configs {
                pairs += 1;
                let s = if split && a == b { Some(0) } else { sd.get(&b).copied() };
                let t = td.get(&emb.apply_target(b)).copied();
                if s.is_some() != t.is_some() {
                    let ce = Counterexample { from: a, to: b, source_reachable: s.is_some(), target_reachable: t.is_some() };
                    return Ok((Some(ce), worst, pairs));
                }
                if let (Some(s), Some(t)) = (s, t) {
                    if s > 0 {
                        let r = Ratio::new(t, s);
                        worst = Some(worst.map_or(r, |w| w.max(r)));
                    }
                }
            }
            Ok((None, worst, pairs))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut report = EmbeddingReport { is_embedding: true, expansion: None, counterexample: None, pairs_checked: 0 };
    for (ce, worst, pairs) in per_start {
        report.pairs_checked += pairs;
        if let Some(w) = worst {
            report.expansion = Some(report.expansion.map_or(w, |e: Ratio<u64>| e.max(w)));
        }
        if report.counterexample.is_none() {
            if let Some(ce) = ce {
                report.is_embedding = false;
                report.counterexample = Some(ce);
            }
        }
    }
    Ok(report)
}
