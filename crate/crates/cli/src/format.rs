//! Text formats: system files with an optional instance trailer, and
//! embedding descriptors.
//!
//! A system file is a list of `key = value` lines; `#` starts a comment.
//!
//! ```text
//! n = 2
//! k = 1
//! selection = fixed
//! schedule = parallel
//! f1 = x2
//! f2 = x1
//! start = 01
//! target = 10
//! horizon = unbounded
//! meta.name = swap
//! ```
//!
//! Node and choice indices are 1-based. Normalized output orders keys as
//! above, drops comments and blank lines, and sorts metadata by key.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use bfds::reductions::Horizon;
use bfds::transforms::{Embedding, Mapping, Segment};
use bfds::{Config, NodeFunction, Permutation, SelectionScheme, System, UpdateSchedule};
use num_rational::Ratio;
use thiserror::Error;

/// A diagnostic pointing at the offending line and field when known.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("{}{}{message}", line.map(|l| format!("line {l}: ")).unwrap_or_default(), field.as_ref().map(|f| format!("{f}: ")).unwrap_or_default())]
pub struct FormatError {
    pub line: Option<usize>,
    pub field: Option<String>,
    pub message: String,
}

impl FormatError {
    fn at(line: usize, field: &str, message: impl Into<String>) -> FormatError {
        FormatError { line: Some(line), field: Some(field.to_string()), message: message.into() }
    }

    fn field(field: &str, message: impl Into<String>) -> FormatError {
        FormatError { line: None, field: Some(field.to_string()), message: message.into() }
    }
}

type Result<T> = std::result::Result<T, FormatError>;

/// Start, target and horizon attached to a system.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Instance {
    pub start: Config,
    pub target: Config,
    pub horizon: Horizon,
}

/// A parsed system file.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SystemFile {
    pub system: System,
    pub instance: Option<Instance>,
    pub meta: BTreeMap<String, String>,
}

impl SystemFile {
    pub fn new(system: System) -> SystemFile {
        SystemFile { system, instance: None, meta: BTreeMap::new() }
    }

    /// Combinations the model leaves open; reported, not rejected.
    pub fn warnings(&self) -> Vec<String> {
        let sys = &self.system;
        let mut out = Vec::new();
        if *sys.schedule() == UpdateSchedule::Asynchronous && *sys.selection() != SelectionScheme::Individual {
            out.push("asynchronous updates with non-individual selection have no settled meaning".into());
        }
        if matches!(sys.selection(), SelectionScheme::SemiCoordinated(_)) && sys.schedule().is_sequential() {
            out.push("semi-coordinated selection under a sequential schedule is untested".into());
        }
        out
    }

    pub fn parse(text: &str) -> Result<SystemFile> {
        let mut fields: BTreeMap<String, (usize, String)> = BTreeMap::new();
        for (no, raw) in text.lines().enumerate() {
            let line_no = no + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| FormatError {
                line: Some(line_no),
                field: None,
                message: "expected `key = value`".into(),
            })?;
            let (key, value) = (key.trim().to_string(), value.trim().to_string());
            if key.is_empty() {
                return Err(FormatError { line: Some(line_no), field: None, message: "empty key".into() });
            }
            if let Some((first, _)) = fields.get(&key) {
                return Err(FormatError::at(line_no, &key, format!("duplicate field (first on line {first})")));
            }
            fields.insert(key, (line_no, value));
        }
        let mut take = |key: &str| fields.remove(key);

        let n = count_field(take("n"), "n")?;
        let k = count_field(take("k"), "k")?;
        let (sel_line, sel_text) = take("selection").ok_or_else(|| FormatError::field("selection", "missing field"))?;
        let (sched_line, sched_text) = take("schedule").ok_or_else(|| FormatError::field("schedule", "missing field"))?;

        let mut functions = Vec::with_capacity(n);
        for i in 1..=n {
            let key = format!("f{i}");
            let (line, text) = take(&key).ok_or_else(|| FormatError::field(&key, "missing field"))?;
            let row = text
                .split('|')
                .map(|t| parse_function(t.trim()).map_err(|m| FormatError::at(line, &key, m)))
                .collect::<Result<Vec<_>>>()?;
            if row.len() != k {
                return Err(FormatError::at(line, &key, format!("{} choices, expected k = {k}", row.len())));
            }
            functions.push(row);
        }
        let selection = parse_selection(&sel_text).map_err(|m| FormatError::at(sel_line, "selection", m))?;
        let schedule = parse_schedule(&sched_text).map_err(|m| FormatError::at(sched_line, "schedule", m))?;

        let instance = match (take("start"), take("target")) {
            (None, None) => {
                if let Some((line, _)) = take("horizon") {
                    return Err(FormatError::at(line, "horizon", "horizon without start and target"));
                }
                None
            }
            (Some((sl, s)), Some((tl, t))) => {
                let start = Config::parse_len(&s, n).map_err(|e| FormatError::at(sl, "start", e.to_string()))?;
                let target = Config::parse_len(&t, n).map_err(|e| FormatError::at(tl, "target", e.to_string()))?;
                let horizon = match take("horizon") {
                    Some((hl, h)) => h.parse().map_err(|e: bfds::Error| FormatError::at(hl, "horizon", e.to_string()))?,
                    None => Horizon::Unbounded,
                };
                Some(Instance { start, target, horizon })
            }
            (Some((l, _)), None) => return Err(FormatError::at(l, "start", "start without target")),
            (None, Some((l, _))) => return Err(FormatError::at(l, "target", "target without start")),
        };

        let mut meta = BTreeMap::new();
        for (key, (line, value)) in fields {
            match key.strip_prefix("meta.") {
                Some(name) if !name.is_empty() => {
                    meta.insert(name.to_string(), value);
                }
                _ => return Err(FormatError::at(line, &key, "unknown field")),
            }
        }

        let system = System::new(functions, selection, schedule).map_err(|e| FormatError {
            line: None,
            field: Some(invariant_field(&e).into()),
            message: e.to_string(),
        })?;
        Ok(SystemFile { system, instance, meta })
    }

    /// Canonical text; `parse(emit(f)) == f` and `emit` is a fixed point on its output.
    pub fn emit(&self) -> String {
        let sys = &self.system;
        let mut out = String::new();
        let _ = writeln!(out, "n = {}", sys.n());
        let _ = writeln!(out, "k = {}", sys.k());
        let _ = writeln!(out, "selection = {}", render_selection(sys.selection()));
        let _ = writeln!(out, "schedule = {}", render_schedule(sys.schedule()));
        for (i, row) in sys.functions().iter().enumerate() {
            let fs: Vec<String> = row.iter().map(render_function).collect();
            let _ = writeln!(out, "f{} = {}", i + 1, fs.join(" | "));
        }
        if let Some(inst) = &self.instance {
            let _ = writeln!(out, "start = {}", inst.start.render(sys.n()));
            let _ = writeln!(out, "target = {}", inst.target.render(sys.n()));
            let _ = writeln!(out, "horizon = {}", inst.horizon);
        }
        for (key, value) in &self.meta {
            let _ = writeln!(out, "meta.{key} = {value}");
        }
        out
    }
}

/// Which file field a library invariant error belongs to.
fn invariant_field(e: &bfds::Error) -> &'static str {
    match e {
        bfds::Error::Selection(_) => "selection",
        bfds::Error::Permutation(_) => "schedule",
        _ => "functions",
    }
}

/// Decimal count, or `unary:111` for the unary compatibility form.
fn count_field(entry: Option<(usize, String)>, key: &str) -> Result<usize> {
    let (line, text) = entry.ok_or_else(|| FormatError::field(key, "missing field"))?;
    let v = match text.strip_prefix("unary:") {
        Some(ones) if !ones.is_empty() && ones.chars().all(|c| c == '1') => ones.len(),
        Some(_) => return Err(FormatError::at(line, key, "unary value must be a nonempty run of 1s")),
        None => text.parse::<usize>().map_err(|_| FormatError::at(line, key, format!("not a number: {text:?}")))?,
    };
    if v == 0 {
        return Err(FormatError::at(line, key, "must be at least 1"));
    }
    Ok(v)
}

fn parse_var(s: &str) -> std::result::Result<usize, String> {
    let digits = s.trim().strip_prefix('x').ok_or_else(|| format!("expected a variable like x1, found {s:?}"))?;
    match digits.parse::<usize>() {
        Ok(v) if v >= 1 => Ok(v - 1),
        _ => Err(format!("bad variable {s:?}")),
    }
}

fn parse_vars(s: &str) -> std::result::Result<Vec<usize>, String> {
    if s.trim().is_empty() {
        return Ok(Vec::new());
    }
    s.split(',').map(parse_var).collect()
}

/// `0`, `1`, `x3`, `!x3`, `or(x1,x2)`, `and(x1,x2)`, `table(x1,x2:0110)`.
pub fn parse_function(s: &str) -> std::result::Result<NodeFunction, String> {
    let s = s.trim();
    let call = |name: &str| s.strip_prefix(name).and_then(|r| r.trim_start().strip_prefix('(')).and_then(|r| r.strip_suffix(')'));
    if s == "0" || s == "1" {
        return Ok(NodeFunction::Const(s == "1"));
    }
    if let Some(rest) = s.strip_prefix('!') {
        return Ok(NodeFunction::Neg(parse_var(rest)?));
    }
    if s.starts_with('x') {
        return Ok(NodeFunction::Pos(parse_var(s)?));
    }
    if let Some(inner) = call("or") {
        return Ok(NodeFunction::Or(parse_vars(inner)?));
    }
    if let Some(inner) = call("and") {
        return Ok(NodeFunction::And(parse_vars(inner)?));
    }
    if let Some(inner) = call("table") {
        let (vars, bits) = inner.split_once(':').ok_or("table needs `sources:outputs`")?;
        let outputs = bits
            .trim()
            .chars()
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                other => Err(format!("bad table output {other:?}")),
            })
            .collect::<std::result::Result<Vec<bool>, String>>()?;
        return Ok(NodeFunction::Table { srcs: parse_vars(vars)?, outputs });
    }
    Err(format!("unrecognized function {s:?}"))
}

fn join_vars(v: &[usize]) -> String {
    v.iter().map(|s| format!("x{}", s + 1)).collect::<Vec<_>>().join(",")
}

pub fn render_function(f: &NodeFunction) -> String {
    match f {
        NodeFunction::Const(b) => (if *b { "1" } else { "0" }).to_string(),
        NodeFunction::Pos(s) => format!("x{}", s + 1),
        NodeFunction::Neg(s) => format!("!x{}", s + 1),
        NodeFunction::Or(v) => format!("or({})", join_vars(v)),
        NodeFunction::And(v) => format!("and({})", join_vars(v)),
        NodeFunction::Table { srcs, outputs } => {
            let bits: String = outputs.iter().map(|&b| if b { '1' } else { '0' }).collect();
            format!("table({}:{bits})", join_vars(srcs))
        }
    }
}

/// Comma-separated 1-based node list.
fn parse_nodes(s: &str) -> std::result::Result<Vec<usize>, String> {
    s.split(',')
        .map(|t| match t.trim().parse::<usize>() {
            Ok(v) if v >= 1 => Ok(v - 1),
            _ => Err(format!("bad node index {:?}", t.trim())),
        })
        .collect()
}

fn render_nodes(v: &[usize]) -> String {
    v.iter().map(|x| (x + 1).to_string()).collect::<Vec<_>>().join(",")
}

fn parse_permutation(s: &str) -> std::result::Result<Permutation, String> {
    Permutation::new(parse_nodes(s)?).map_err(|e| e.to_string())
}

/// `fixed`, `coordinated`, `individual` or `semi 1,2;3`.
fn parse_selection(s: &str) -> std::result::Result<SelectionScheme, String> {
    let mut words = s.splitn(2, char::is_whitespace);
    match (words.next().unwrap_or(""), words.next().map(str::trim)) {
        ("fixed", None) => Ok(SelectionScheme::Fixed),
        ("coordinated", None) => Ok(SelectionScheme::Coordinated),
        ("individual", None) => Ok(SelectionScheme::Individual),
        ("semi", Some(blocks)) => Ok(SelectionScheme::SemiCoordinated(
            blocks.split(';').map(parse_nodes).collect::<std::result::Result<_, _>>()?,
        )),
        _ => Err(format!("unknown selection scheme {s:?}")),
    }
}

fn render_selection(s: &SelectionScheme) -> String {
    match s {
        SelectionScheme::Fixed => "fixed".into(),
        SelectionScheme::Coordinated => "coordinated".into(),
        SelectionScheme::Individual => "individual".into(),
        SelectionScheme::SemiCoordinated(blocks) => {
            format!("semi {}", blocks.iter().map(|b| render_nodes(b)).collect::<Vec<_>>().join(";"))
        }
    }
}

/// `parallel`, `order 2,1,3`, `list 1,2;2,1`, `arbitrary` or `async`.
fn parse_schedule(s: &str) -> std::result::Result<UpdateSchedule, String> {
    let mut words = s.splitn(2, char::is_whitespace);
    match (words.next().unwrap_or(""), words.next().map(str::trim)) {
        ("parallel", None) => Ok(UpdateSchedule::Parallel),
        ("arbitrary", None) => Ok(UpdateSchedule::ArbitraryPermutation),
        ("async", None) => Ok(UpdateSchedule::Asynchronous),
        ("order", Some(p)) => Ok(UpdateSchedule::FixedPermutation(parse_permutation(p)?)),
        ("list", Some(ps)) => Ok(UpdateSchedule::PermutationList(
            ps.split(';').map(parse_permutation).collect::<std::result::Result<_, _>>()?,
        )),
        _ => Err(format!("unknown schedule {s:?}")),
    }
}

fn render_schedule(s: &UpdateSchedule) -> String {
    match s {
        UpdateSchedule::Parallel => "parallel".into(),
        UpdateSchedule::ArbitraryPermutation => "arbitrary".into(),
        UpdateSchedule::Asynchronous => "async".into(),
        UpdateSchedule::FixedPermutation(p) => format!("order {}", render_nodes(p.order())),
        UpdateSchedule::PermutationList(ps) => {
            format!("list {}", ps.iter().map(|p| render_nodes(p.order())).collect::<Vec<_>>().join(";"))
        }
    }
}

/// Embedding descriptor: `source_n`, `target_n`, `map`, optional `target_map`, `rate`.
pub fn parse_embedding(text: &str) -> Result<Embedding> {
    let mut fields: BTreeMap<String, (usize, String)> = BTreeMap::new();
    for (no, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| FormatError {
            line: Some(no + 1),
            field: None,
            message: "expected `key = value`".into(),
        })?;
        let key = k.trim().to_string();
        if !matches!(key.as_str(), "source_n" | "target_n" | "map" | "target_map" | "rate") {
            return Err(FormatError::at(no + 1, &key, "unknown field"));
        }
        if fields.insert(key.clone(), (no + 1, v.trim().to_string())).is_some() {
            return Err(FormatError::at(no + 1, &key, "duplicate field"));
        }
    }
    let mut take = |key: &str| fields.remove(key);
    let source_n = count_field(take("source_n"), "source_n")?;
    let target_n = count_field(take("target_n"), "target_n")?;
    let (ml, m) = take("map").ok_or_else(|| FormatError::field("map", "missing field"))?;
    let map = parse_mapping(&m).map_err(|e| FormatError::at(ml, "map", e))?;
    let target_map = take("target_map")
        .map(|(l, t)| parse_mapping(&t).map_err(|e| FormatError::at(l, "target_map", e)))
        .transpose()?;
    let (rl, r) = take("rate").ok_or_else(|| FormatError::field("rate", "missing field"))?;
    let rate: Ratio<u64> = r.parse().map_err(|_| FormatError::at(rl, "rate", format!("bad rate {r:?}")))?;
    let mut emb = Embedding::new(source_n, target_n, map, 1).map_err(|e| FormatError::field("map", e.to_string()))?;
    if let Some(t) = target_map {
        emb = emb.split(t).map_err(|e| FormatError::field("target_map", e.to_string()))?;
    }
    emb.claimed_rate = rate;
    Ok(emb)
}

fn parse_mapping(s: &str) -> std::result::Result<Mapping, String> {
    s.split_whitespace()
        .map(|w| match w {
            "copy" => Ok(Segment::Copy),
            "complement" => Ok(Segment::Complement),
            _ => {
                let bits = w.strip_prefix("const:").ok_or_else(|| format!("unknown segment {w:?}"))?;
                let (c, len) = Config::parse(bits).map_err(|e| e.to_string())?;
                Ok(Segment::Const(c.to_bits(len)))
            }
        })
        .collect::<std::result::Result<Vec<_>, _>>()
        .map(Mapping)
}

pub fn emit_embedding(e: &Embedding) -> String {
    let mut out = format!("source_n = {}\ntarget_n = {}\nmap = {}\n", e.source_n, e.target_n, e.map);
    if let Some(t) = &e.target_map {
        let _ = writeln!(out, "target_map = {t}");
    }
    let _ = writeln!(out, "rate = {}", e.claimed_rate);
    out
}
