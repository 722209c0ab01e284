//! Subcommands and their reports.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use bfds::analysis::{self, CycleMode, FixedPointMode, GlobalCount, PredMode, ProblemAnswer, ReachMode, Value};
use bfds::cnf::CnfFormula;
use bfds::graph::{build_graph, reachable_set};
use bfds::reductions::{self, ReductionInstance, SimpleGraph};
use bfds::{bounded, permsolve, transforms, Caps, Config, SelectionScheme, System};
use clap::{Parser, Subcommand, ValueEnum};
use serde_json::{json, Map, Value as Json};

use crate::format::{emit_embedding, parse_embedding, SystemFile};
use crate::{parse_caps, CliError, Outcome, CAPS_ENV, EXIT_OK};

#[derive(Parser, Debug)]
#[command(name = "bfds", version, about = "Analyze multi-choice Boolean finite dynamical systems")]
struct Cli {
    /// Print one JSON record instead of `key: value` lines.
    #[arg(long, global = true)]
    json: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Answer one question about a system.
    Analyze {
        problem: Problem,
        system: PathBuf,
        /// Start configuration; defaults to the file's `start`.
        #[arg(long)]
        from: Option<String>,
        /// Target configuration; defaults to the file's `target`.
        #[arg(long)]
        to: Option<String>,
        #[arg(long)]
        steps: Option<u64>,
    },
    /// Dump the configuration graph, one `<src> <dst> <count>` line per arc.
    Graph { system: PathBuf },
    /// Build a simulating system; writes the system to stdout.
    Transform {
        name: TransformName,
        system: PathBuf,
        /// Where to write the embedding descriptor.
        #[arg(long)]
        embedding: Option<PathBuf>,
    },
    /// Build a reduction instance from a CNF file, two graph files, or a size.
    Reduce {
        name: ReductionName,
        inputs: Vec<PathBuf>,
        #[arg(long)]
        n: Option<usize>,
    },
    /// Check path equivalence and expansion of an embedding.
    VerifyEmbedding {
        source: PathBuf,
        target: PathBuf,
        embedding: PathBuf,
        /// Target paths longer than this are treated as absent.
        #[arg(long)]
        length_bound: Option<u64>,
    },
    /// Find an update order (and selection) taking one configuration to another in one step.
    SolvePerm {
        system: PathBuf,
        #[arg(long)]
        from: Option<String>,
        #[arg(long)]
        to: Option<String>,
        #[arg(long, value_enum, default_value_t = PermMethod::Auto)]
        method: PermMethod,
    },
    /// Decide whether every update order admits a path of the given length.
    Robust {
        system: PathBuf,
        #[arg(long)]
        from: Option<String>,
        #[arg(long)]
        to: Option<String>,
        #[arg(long, default_value_t = 1)]
        steps: u64,
        #[arg(long, value_enum, default_value_t = RobustMethod::Fast)]
        method: RobustMethod,
        /// Table fan-in bound for the fast test.
        #[arg(long, default_value_t = 2)]
        q: usize,
    },
    /// Build a reduction and compare its answer with a direct oracle.
    OracleCheck {
        name: ReductionName,
        inputs: Vec<PathBuf>,
        #[arg(long)]
        n: Option<usize>,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Problem {
    Reachability,
    ReachWithin,
    ReachExactly,
    ShortestPath,
    LongestSimplePath,
    PathIntersection,
    CountSimplePaths,
    CountPaths,
    TailLength,
    IsGarden,
    CountPredecessors,
    GardenAt,
    CyclePoint,
    ShortestCycle,
    LongestSimpleCycle,
    CountSimpleCycles,
    CountSuccessors,
    CountGardens,
    CountFixedPoints,
    CountCompleteFixedPoints,
    CountCycles,
    FixedPointExists,
    CompleteFixedPointExists,
    IsFixedPoint,
    IsCompleteFixedPoint,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum TransformName {
    AsyncToParallel,
    ParallelToAsync,
    ParallelToSeq,
    SeqToParallel,
    PermlistToParallel,
    KToThree,
    EliminateNegation,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum ReductionName {
    #[value(name = "3sat-unary")]
    Sat3Unary,
    #[value(name = "2sat")]
    Sat2,
    #[value(name = "3sat-k3")]
    Sat3K3,
    Parsimonious,
    #[value(name = "3sat-permlist")]
    Sat3Permlist,
    #[value(name = "3sat-coordinated")]
    Sat3Coordinated,
    GraphIso,
    NearConnected,
    CyclicConnected,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum PermMethod {
    Auto,
    Unary,
    Coordinated,
    Search,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum RobustMethod {
    Fast,
    Brute,
}

/// Ordered report fields.
struct Report(Vec<(&'static str, Json)>);

impl Report {
    fn new() -> Report {
        Report(Vec::new())
    }

    fn put(mut self, key: &'static str, value: impl Into<Json>) -> Report {
        self.0.push((key, value.into()));
        self
    }

    fn render(&self, as_json: bool) -> String {
        if as_json {
            let map: Map<String, Json> = self.0.iter().map(|(k, v)| (k.to_string(), v.clone())).collect();
            return format!("{}\n", Json::Object(map));
        }
        self.0
            .iter()
            .map(|(k, v)| match v {
                Json::String(s) => format!("{k}: {s}\n"),
                Json::Array(items) => {
                    let parts: Vec<String> =
                        items.iter().map(|i| i.as_str().map(str::to_string).unwrap_or_else(|| i.to_string())).collect();
                    format!("{k}: {}\n", parts.join(" -> "))
                }
                other => format!("{k}: {other}\n"),
            })
            .collect()
    }
}

fn yes_no(b: bool) -> &'static str {
    if b {
        "yes"
    } else {
        "no"
    }
}

/// Large counts are emitted as decimal strings to survive JSON readers.
fn count(c: u128) -> Json {
    match u64::try_from(c) {
        Ok(v) => json!(v),
        Err(_) => json!(c.to_string()),
    }
}

/// Runs one command line (without the program name) and collects its output.
pub fn run_command<I, T>(args: I) -> Outcome
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let argv = std::iter::once(OsString::from("bfds")).chain(args.into_iter().map(Into::into));
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { crate::EXIT_INPUT } else { EXIT_OK };
            let text = e.render().to_string();
            return if e.use_stderr() {
                Outcome { code, stdout: String::new(), stderr: text }
            } else {
                Outcome { code, stdout: text, stderr: String::new() }
            };
        }
    };
    let caps = match std::env::var(CAPS_ENV) {
        Ok(spec) => match parse_caps(&spec) {
            Ok(c) => c,
            Err(e) => return failure(&e),
        },
        Err(_) => Caps::default(),
    };
    let mut stderr = String::new();
    match dispatch(cli.command, cli.json, &caps, &mut stderr) {
        Ok(stdout) => Outcome { code: EXIT_OK, stdout, stderr },
        Err(e) => {
            let mut out = failure(&e);
            out.stderr = stderr + &out.stderr;
            out
        }
    }
}

fn failure(e: &CliError) -> Outcome {
    let kind = if e.exit_code() == crate::EXIT_RESOURCE { "resource limit" } else { "error" };
    Outcome { code: e.exit_code(), stdout: String::new(), stderr: format!("{kind}: {e}\n") }
}

fn read(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|source| CliError::Io { path: path.display().to_string(), source })
}

fn load(path: &Path, stderr: &mut String) -> Result<SystemFile, CliError> {
    let file = SystemFile::parse(&read(path)?)
        .map_err(|source| CliError::Format { path: path.display().to_string(), source })?;
    for w in file.warnings() {
        stderr.push_str(&format!("warning: {w}\n"));
    }
    Ok(file)
}

/// A configuration from the command line, or the file's instance trailer.
fn endpoint(file: &SystemFile, given: Option<&str>, flag: &str) -> Result<Config, CliError> {
    let n = file.system.n();
    match given {
        Some(s) => Ok(Config::parse_len(s, n)?),
        None => file
            .instance
            .as_ref()
            .map(|i| if flag == "--from" { i.start } else { i.target })
            .ok_or_else(|| CliError::Usage(format!("{flag} is required (the file has no instance trailer)"))),
    }
}

fn need_steps(steps: Option<u64>) -> Result<u64, CliError> {
    steps.ok_or_else(|| CliError::Usage("--steps is required for this problem".into()))
}

fn dispatch(cmd: Command, as_json: bool, caps: &Caps, stderr: &mut String) -> Result<String, CliError> {
    match cmd {
        Command::Analyze { problem, system, from, to, steps } => {
            let file = load(&system, stderr)?;
            let report = analyze(&file, problem, from.as_deref(), to.as_deref(), steps, caps)?;
            Ok(report.render(as_json))
        }
        Command::Graph { system } => {
            let file = load(&system, stderr)?;
            Ok(build_graph(&file.system, caps)?.dump())
        }
        Command::Transform { name, system, embedding } => {
            let file = load(&system, stderr)?;
            let t = transform(name, &file.system)?;
            for note in &t.notes {
                stderr.push_str(&format!("note: {note}\n"));
            }
            if let Some(path) = embedding {
                std::fs::write(&path, emit_embedding(&t.embedding))
                    .map_err(|source| CliError::Io { path: path.display().to_string(), source })?;
            }
            let mut out = SystemFile::new(t.system);
            out.meta.insert("transform".into(), name.to_possible_value().expect("named").get_name().into());
            Ok(out.emit())
        }
        Command::Reduce { name, inputs, n } => {
            let built = reduce(name, &inputs, n)?;
            Ok(built.file.emit())
        }
        Command::VerifyEmbedding { source, target, embedding, length_bound } => {
            let src = load(&source, stderr)?;
            let tgt = load(&target, stderr)?;
            let emb = parse_embedding(&read(&embedding)?)
                .map_err(|e| CliError::Format { path: embedding.display().to_string(), source: e })?;
            let r = transforms::verify_embedding(&src.system, &tgt.system, &emb, length_bound.unwrap_or(u64::MAX), caps)?;
            let within = r.expansion.is_none_or(|e| e <= emb.claimed_rate);
            let mut rep = Report::new()
                .put("is_embedding", yes_no(r.is_embedding))
                .put("expansion", r.expansion.map_or("none".to_string(), |e| e.to_string()))
                .put("claimed_rate", emb.claimed_rate.to_string())
                .put("within_rate", yes_no(within))
                .put("pairs_checked", r.pairs_checked);
            if let Some(ce) = r.counterexample {
                rep = rep
                    .put("counterexample_from", ce.from.render(src.system.n()))
                    .put("counterexample_to", ce.to.render(src.system.n()))
                    .put("source_reachable", yes_no(ce.source_reachable))
                    .put("target_reachable", yes_no(ce.target_reachable));
            }
            Ok(rep.render(as_json))
        }
        Command::SolvePerm { system, from, to, method } => {
            let file = load(&system, stderr)?;
            let (c, d) = (endpoint(&file, from.as_deref(), "--from")?, endpoint(&file, to.as_deref(), "--to")?);
            Ok(solve_perm(&file.system, c, d, method, caps)?.render(as_json))
        }
        Command::Robust { system, from, to, steps, method, q } => {
            let file = load(&system, stderr)?;
            let (c, d) = (endpoint(&file, from.as_deref(), "--from")?, endpoint(&file, to.as_deref(), "--to")?);
            let robust = match method {
                RobustMethod::Brute => permsolve::robust_reach_bruteforce(&file.system, c, d, steps, caps)?,
                RobustMethod::Fast if steps == 1 => permsolve::robust_one_step_fast(&file.system, c, d, q)?,
                RobustMethod::Fast => {
                    return Err(CliError::Usage("the fast test covers one step; use --method brute".into()))
                }
            };
            Ok(Report::new().put("answer", yes_no(robust)).put("steps", steps).render(as_json))
        }
        Command::OracleCheck { name, inputs, n } => {
            let built = reduce(name, &inputs, n)?;
            Ok(oracle_check(&built, caps)?.render(as_json))
        }
    }
}

fn answer_report(problem: Problem, a: &ProblemAnswer, n: usize) -> Report {
    let value = match a.value {
        Value::Bool(b) => json!(yes_no(b)),
        Value::Count(c) => count(c),
        Value::Length(Some(l)) => json!(l),
        Value::Length(None) => json!("none"),
    };
    let mut rep = Report::new()
        .put("problem", problem.to_possible_value().expect("named").get_name().to_string())
        .put("answer", value);
    if let Some(w) = &a.witness {
        rep = rep.put("witness", Json::Array(w.iter().map(|c| json!(c.render(n))).collect()));
    }
    rep
}

fn analyze(
    file: &SystemFile,
    problem: Problem,
    from: Option<&str>,
    to: Option<&str>,
    steps: Option<u64>,
    caps: &Caps,
) -> Result<Report, CliError> {
    use Problem::*;
    let sys = &file.system;
    let c = || endpoint(file, from, "--from");
    let d = || endpoint(file, to, "--to");
    let plain = |v: Value| ProblemAnswer { value: v, witness: None };
    let a = match problem {
        Reachability => analysis::reachability(sys, c()?, d()?, ReachMode::Any, caps)?,
        ReachWithin => plain(Value::Bool(bounded::reaches_within(sys, c()?, d()?, need_steps(steps)?, caps)?)),
        ReachExactly => plain(Value::Bool(bounded::reaches_exactly(sys, c()?, d()?, need_steps(steps)?, caps)?)),
        ShortestPath => analysis::reachability(sys, c()?, d()?, ReachMode::MinLen, caps)?,
        LongestSimplePath => analysis::reachability(sys, c()?, d()?, ReachMode::MaxSimpleLen, caps)?,
        PathIntersection => plain(Value::Bool(analysis::path_intersection(sys, c()?, d()?, caps)?)),
        CountSimplePaths => plain(Value::Count(analysis::count_simple_paths(sys, c()?, d()?, caps)?)),
        CountPaths => plain(Value::Count(analysis::count_paths_of_length(sys, c()?, d()?, need_steps(steps)?, caps)?)),
        TailLength => plain(Value::Length(Some(analysis::tail_length(sys, c()?, caps)?))),
        IsGarden => analysis::predecessors(sys, c()?, PredMode::IsGarden, caps)?,
        CountPredecessors => analysis::predecessors(sys, c()?, PredMode::Count, caps)?,
        GardenAt => analysis::predecessors(sys, c()?, PredMode::GardenAt(need_steps(steps)?), caps)?,
        CyclePoint => analysis::cycles(sys, c()?, CycleMode::Point, caps)?,
        ShortestCycle => analysis::cycles(sys, c()?, CycleMode::MinLen, caps)?,
        LongestSimpleCycle => analysis::cycles(sys, c()?, CycleMode::MaxSimpleLen, caps)?,
        CountSimpleCycles => analysis::cycles(sys, c()?, CycleMode::CountSimpleThrough, caps)?,
        CountSuccessors => plain(Value::Count(analysis::count_subsequent(sys, c()?, caps)?)),
        CountGardens => plain(Value::Count(analysis::global_counts(sys, GlobalCount::Gardens, caps)?)),
        CountFixedPoints => plain(Value::Count(analysis::global_counts(sys, GlobalCount::FixedPoints, caps)?)),
        CountCompleteFixedPoints => {
            plain(Value::Count(analysis::global_counts(sys, GlobalCount::CompleteFixedPoints, caps)?))
        }
        CountCycles => plain(Value::Count(analysis::global_counts(sys, GlobalCount::Cycles, caps)?)),
        FixedPointExists => analysis::fixed_points(sys, FixedPointMode::Exists, caps)?,
        CompleteFixedPointExists => analysis::fixed_points(sys, FixedPointMode::CompleteExists, caps)?,
        IsFixedPoint => analysis::fixed_points(sys, FixedPointMode::IsFixed(c()?), caps)?,
        IsCompleteFixedPoint => analysis::fixed_points(sys, FixedPointMode::IsCompleteFixed(c()?), caps)?,
    };
    Ok(answer_report(problem, &a, sys.n()))
}

fn transform(name: TransformName, sys: &System) -> Result<transforms::Transformed, CliError> {
    use TransformName::*;
    Ok(match name {
        AsyncToParallel => transforms::async_to_parallel(sys)?,
        ParallelToAsync => transforms::parallel_to_async(sys)?,
        ParallelToSeq => transforms::parallel_to_sequential(sys)?,
        SeqToParallel => transforms::sequential_to_parallel(sys)?,
        PermlistToParallel => transforms::permlist_to_parallel(sys)?,
        KToThree => transforms::kchoice_to_3choice(sys)?,
        EliminateNegation => transforms::eliminate_negation(sys)?,
    })
}

/// A built reduction with the inputs its oracle needs.
struct Built {
    name: ReductionName,
    file: SystemFile,
    formula: Option<CnfFormula>,
    graphs: Option<(SimpleGraph, SimpleGraph)>,
}

fn instance_file(inst: ReductionInstance, name: ReductionName) -> SystemFile {
    let mut file = SystemFile::new(inst.system);
    file.instance = Some(crate::format::Instance { start: inst.start, target: inst.target, horizon: inst.horizon });
    file.meta.insert("reduction".into(), name.to_possible_value().expect("named").get_name().into());
    file
}

fn reduce(name: ReductionName, inputs: &[PathBuf], n: Option<usize>) -> Result<Built, CliError> {
    use ReductionName::*;
    let arity = match name {
        GraphIso => 2,
        NearConnected | CyclicConnected => 0,
        _ => 1,
    };
    if inputs.len() != arity {
        return Err(CliError::Usage(format!("this reduction takes {arity} input file(s), got {}", inputs.len())));
    }
    let label = || name.to_possible_value().expect("named").get_name().to_string();
    Ok(match name {
        NearConnected | CyclicConnected => {
            let n = n.ok_or_else(|| CliError::Usage("--n is required".into()))?;
            let sys =
                if name == NearConnected { reductions::build_near_connected(n)? } else { reductions::build_cyclic_connected(n)? };
            let mut file = SystemFile::new(sys);
            file.meta.insert("reduction".into(), label());
            Built { name, file, formula: None, graphs: None }
        }
        GraphIso => {
            let g = SimpleGraph::parse(&read(&inputs[0])?)?;
            let h = SimpleGraph::parse(&read(&inputs[1])?)?;
            let file = instance_file(reductions::reduce_graph_iso(&g, &h)?, name);
            Built { name, file, formula: None, graphs: Some((g, h)) }
        }
        _ => {
            let phi = CnfFormula::parse_dimacs(&read(&inputs[0])?)?;
            let inst = match name {
                Sat3Unary => reductions::reduce_3sat_unary_t3(&phi)?,
                Sat2 => reductions::reduce_2sat_t2(&phi)?,
                Sat3K3 => reductions::reduce_3sat_k3_t2(&phi)?,
                Parsimonious => reductions::reduce_parsimonious_count(&phi)?,
                Sat3Permlist => reductions::reduce_3sat_permlist(&phi)?,
                Sat3Coordinated => reductions::reduce_3sat_coordinated(&phi)?,
                GraphIso | NearConnected | CyclicConnected => unreachable!("handled above"),
            };
            Built { name, file: instance_file(inst, name), formula: Some(phi), graphs: None }
        }
    })
}

fn oracle_check(b: &Built, caps: &Caps) -> Result<Report, CliError> {
    let sys = &b.file.system;
    let rep = Report::new().put("reduction", b.name.to_possible_value().expect("named").get_name().to_string());
    if let Some(inst) = &b.file.instance {
        let as_instance = ReductionInstance {
            system: sys.clone(),
            start: inst.start,
            target: inst.target,
            horizon: inst.horizon,
            extras: Vec::new(),
        };
        if b.name == ReductionName::Parsimonious {
            let phi = b.formula.as_ref().expect("formula input");
            let models = phi.count_models()?;
            let simple = analysis::count_simple_paths(sys, inst.start, inst.target, caps)?;
            let two = analysis::count_paths_of_length(sys, inst.start, inst.target, 2, caps)?;
            return Ok(rep
                .put("gadget", count(simple))
                .put("oracle", count(models as u128))
                .put("two_step_paths", count(two))
                .put("agree", yes_no(simple == models as u128)));
        }
        let gadget = reductions::decide(&as_instance, caps)?;
        let oracle = match (&b.formula, &b.graphs) {
            (Some(phi), _) => phi.brute_force()?.is_some(),
            (_, Some((g, h))) => g.is_isomorphic(h),
            _ => unreachable!("instances come from a formula or two graphs"),
        };
        return Ok(rep
            .put("horizon", inst.horizon.to_string())
            .put("gadget", yes_no(gadget))
            .put("oracle", yes_no(oracle))
            .put("agree", yes_no(gadget == oracle)));
    }
    // structural builders: check the connectivity claim directly
    let n = sys.n();
    let all: Vec<Config> = Config::all(n).collect();
    let ok = if b.name == ReductionName::NearConnected {
        let (zero, full) = (Config::ZERO, Config::from_bits(&vec![true; n]));
        let mixed: Vec<Config> = all.iter().copied().filter(|&c| c != zero && c != full).collect();
        let fixed = [zero, full].iter().all(|&f| sys.successor_set(f, caps.actions).is_ok_and(|s| s == [f]));
        fixed
            && mixed.iter().try_fold(true, |acc, &c| -> Result<bool, CliError> {
                let r = reachable_set(sys, c, u64::MAX, caps)?;
                Ok(acc && mixed.iter().all(|m| r.contains(m)))
            })?
    } else {
        all.iter().try_fold(true, |acc, &c| -> Result<bool, CliError> {
            Ok(acc && reachable_set(sys, c, u64::MAX, caps)?.len() == all.len())
        })?
    };
    Ok(rep.put("connected", yes_no(ok)).put("agree", yes_no(ok)))
}

fn solve_perm(sys: &System, c: Config, d: Config, method: PermMethod, caps: &Caps) -> Result<Report, CliError> {
    let method = match method {
        PermMethod::Auto => match sys.selection() {
            SelectionScheme::Coordinated => PermMethod::Coordinated,
            SelectionScheme::Individual => PermMethod::Search,
            _ if sys.k() == 1 => PermMethod::Unary,
            _ => return Err(CliError::Usage("no permutation solver for this selection scheme".into())),
        },
        m => m,
    };
    let order = |p: &bfds::Permutation| Json::String(p.order().iter().map(|v| (v + 1).to_string()).collect::<Vec<_>>().join(","));
    let sel = |s: &[usize]| Json::String(s.iter().map(|j| (j + 1).to_string()).collect::<Vec<_>>().join(","));
    let (found, perm, selection) = match method {
        PermMethod::Unary => {
            let p = permsolve::perm_exists_1choice_unary(sys, c, d)?;
            let s = vec![0; sys.n()];
            (p.is_some(), p.as_ref().map(order), p.map(|_| sel(&s)))
        }
        PermMethod::Coordinated => {
            let w = permsolve::perm_exists_coordinated(sys, c, d)?;
            (w.is_some(), w.as_ref().map(|(p, _)| order(p)), w.map(|(_, j)| sel(&vec![j; sys.n()])))
        }
        PermMethod::Search => {
            let w = permsolve::perm_exists_individual_search(sys, c, d, caps)?;
            (w.is_some(), w.as_ref().map(|(p, _)| order(p)), w.map(|(_, s)| sel(&s.0)))
        }
        PermMethod::Auto => unreachable!("resolved above"),
    };
    let mut rep = Report::new().put("answer", yes_no(found));
    if let (Some(p), Some(s)) = (perm, selection) {
        rep = rep.put("order", p).put("selection", s);
    }
    Ok(rep)
}
