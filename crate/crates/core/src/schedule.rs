//! Dependency-driven parallel annotation of a spec DAG.
//!
//! A coordinator seeds the leaves, workers annotate nodes whose children are
//! complete, and finished annotations unlock their parents. Refinement runs
//! where it pays: AND and general-operator nodes refine both polarities under
//! the per-node budget, OR and NOT nodes compose exactly or defer to their
//! ancestors, and the root always refines its positive polarity so extraction
//! sees the strongest vector the budgets allow. A worker panic requeues the
//! node once; a second panic aborts the run.

use std::collections::{HashMap, HashSet};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::sync::Arc;
use std::time::{Duration, Instant};

use crossbeam::channel::{unbounded, Receiver, RecvTimeoutError, Sender};
use serde::Serialize;
use thiserror::Error;

use crate::cegar::{
    perform_cegar, CegarConfig, CegarError, CegarOutcome, CegarStats, RefineEvent,
};
use crate::compose::{annotate_node, ComposeError, DeltaGammaVec, Exactness, QuadAnnotation};
use crate::formula::{FormulaError, FormulaRef, Manager, NodeKind, VarTable};

#[derive(Debug, Clone)]
pub struct SynthConfig {
    pub workers: usize,
    pub global_timeout: Option<Duration>,
    /// Wall budget for refinement at one internal node. `Some(0)` disables
    /// internal refinement so only the root refines; `None` leaves internal
    /// refinement bounded only by the global deadline.
    pub cegar_node_timeout: Option<Duration>,
    pub cegar: CegarConfig,
    /// Test hook: panic while computing this node, once or on every attempt.
    #[doc(hidden)]
    pub panic_on: Option<(FormulaRef, bool)>,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            workers: 1,
            global_timeout: None,
            cegar_node_timeout: None,
            cegar: CegarConfig::default(),
            panic_on: None,
        }
    }
}

#[derive(Debug, Error)]
pub enum SynthError {
    #[error("timed out after annotating {completed} of {total} nodes")]
    GlobalTimeout { completed: usize, total: usize },
    #[error("worker panicked twice on node {node:?}: {message}")]
    WorkerPanic { node: FormulaRef, message: String },
    #[error("specification declares no outputs")]
    NoOutputs,
    #[error("function for output {output} still mentions {stray}")]
    SupportLeak { output: String, stray: String },
    #[error(transparent)]
    Compose(#[from] ComposeError),
    #[error(transparent)]
    Cegar(#[from] CegarError),
    #[error(transparent)]
    Formula(#[from] FormulaError),
}

#[derive(Debug, Clone, Serialize)]
pub struct NodeStats {
    pub node: FormulaRef,
    pub kind: &'static str,
    pub cegar_ran: bool,
    pub cegar: CegarStats,
    pub wall_micros: u64,
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct RunStats {
    pub total_nodes: usize,
    pub tasks_run: usize,
    pub requeues: u32,
    pub wall_micros: u64,
    pub node_timeout_engaged: bool,
    pub cegar: CegarStats,
    pub per_node: Vec<NodeStats>,
}

pub struct SynthRun {
    pub root_quad: Arc<QuadAnnotation>,
    pub annotations: HashMap<FormulaRef, Arc<QuadAnnotation>>,
    pub stats: RunStats,
    pub trace: Vec<RefineEvent>,
}

struct Task {
    node: FormulaRef,
    children: Vec<Arc<QuadAnnotation>>,
    is_root: bool,
    attempt: u32,
}

struct Output {
    quad: Arc<QuadAnnotation>,
    stats: NodeStats,
    trace: Vec<RefineEvent>,
    hit_node_timeout: bool,
}

enum Failure {
    Panic(String),
    Fatal(SynthError),
}

struct Done {
    node: FormulaRef,
    outcome: Result<Output, Failure>,
}

#[derive(Clone, Copy)]
struct Ctx<'a> {
    mgr: &'a Manager,
    vars: &'a VarTable,
    cfg: &'a SynthConfig,
    root: FormulaRef,
    global_deadline: Option<Instant>,
}

/// Annotates every node reachable from `root` and returns the annotation map
/// with aggregated statistics.
pub fn run(
    mgr: &Manager,
    root: FormulaRef,
    vars: &VarTable,
    cfg: &SynthConfig,
) -> Result<SynthRun, SynthError> {
    let start = Instant::now();
    let global_deadline = cfg.global_timeout.map(|t| start + t);
    let order = mgr.topo_order(root);
    let total = order.len();

    let mut parents: HashMap<FormulaRef, Vec<FormulaRef>> = HashMap::new();
    let mut pending: HashMap<FormulaRef, usize> = HashMap::new();
    let mut leaves: Vec<FormulaRef> = Vec::new();
    for &node in &order {
        let kids: HashSet<FormulaRef> = mgr.kind(node).children().iter().copied().collect();
        pending.insert(node, kids.len());
        if kids.is_empty() {
            leaves.push(node);
        }
        for c in kids {
            parents.entry(c).or_default().push(node);
        }
    }
    for ps in parents.values_mut() {
        ps.sort();
    }

    let ctx = Ctx { mgr, vars, cfg, root, global_deadline };
    let workers = cfg.workers.max(1);
    let (task_tx, task_rx) = unbounded::<Task>();
    let (done_tx, done_rx) = unbounded::<Done>();

    std::thread::scope(|s| {
        for _ in 0..workers {
            let task_rx: Receiver<Task> = task_rx.clone();
            let done_tx: Sender<Done> = done_tx.clone();
            s.spawn(move || worker_loop(ctx, task_rx, done_tx));
        }
        drop(task_rx);
        drop(done_tx);
        let out = coordinate(ctx, total, &parents, &mut pending, leaves, &task_tx, &done_rx);
        drop(task_tx);
        out
    })
    .map(|(annotations, mut stats, trace)| {
        stats.total_nodes = total;
        stats.wall_micros = start.elapsed().as_micros() as u64;
        stats.per_node.sort_by_key(|ns| ns.node);
        for ns in &stats.per_node {
            stats.cegar.absorb(&ns.cegar);
        }
        let root_quad = annotations[&root].clone();
        SynthRun { root_quad, annotations, stats, trace }
    })
}

type CoordOk = (HashMap<FormulaRef, Arc<QuadAnnotation>>, RunStats, Vec<RefineEvent>);

fn coordinate(
    ctx: Ctx<'_>,
    total: usize,
    parents: &HashMap<FormulaRef, Vec<FormulaRef>>,
    pending: &mut HashMap<FormulaRef, usize>,
    leaves: Vec<FormulaRef>,
    task_tx: &Sender<Task>,
    done_rx: &Receiver<Done>,
) -> Result<CoordOk, SynthError> {
    let mut annotations: HashMap<FormulaRef, Arc<QuadAnnotation>> = HashMap::new();
    let mut stats = RunStats::default();
    let mut trace: Vec<RefineEvent> = Vec::new();
    let mut retried: HashSet<FormulaRef> = HashSet::new();

    let make_task = |node: FormulaRef,
                     attempt: u32,
                     annotations: &HashMap<FormulaRef, Arc<QuadAnnotation>>| {
        let children = ctx
            .mgr
            .kind(node)
            .children()
            .iter()
            .map(|c| annotations[c].clone())
            .collect();
        Task { node, children, is_root: node == ctx.root, attempt }
    };

    for leaf in leaves {
        let _ = task_tx.send(make_task(leaf, 0, &annotations));
    }

    while annotations.len() < total {
        if ctx.global_deadline.is_some_and(|d| Instant::now() >= d) {
            return Err(SynthError::GlobalTimeout { completed: annotations.len(), total });
        }
        let done = match done_rx.recv_timeout(Duration::from_millis(20)) {
            Ok(d) => d,
            Err(RecvTimeoutError::Timeout) => continue,
            Err(RecvTimeoutError::Disconnected) => {
                unreachable!("workers exited with nodes outstanding")
            }
        };
        stats.tasks_run += 1;
        match done.outcome {
            Ok(out) => {
                stats.node_timeout_engaged |= out.hit_node_timeout;
                stats.per_node.push(out.stats);
                trace.extend(out.trace);
                annotations.insert(done.node, out.quad);
                for &p in parents.get(&done.node).map(Vec::as_slice).unwrap_or(&[]) {
                    let left = pending.get_mut(&p).expect("parent not indexed");
                    *left -= 1;
                    if *left == 0 {
                        let _ = task_tx.send(make_task(p, 0, &annotations));
                    }
                }
            }
            Err(Failure::Panic(message)) => {
                if retried.insert(done.node) {
                    stats.requeues += 1;
                    let _ = task_tx.send(make_task(done.node, 1, &annotations));
                } else {
                    return Err(SynthError::WorkerPanic { node: done.node, message });
                }
            }
            Err(Failure::Fatal(e)) => return Err(e),
        }
    }
    Ok((annotations, stats, trace))
}

fn worker_loop(ctx: Ctx<'_>, task_rx: Receiver<Task>, done_tx: Sender<Done>) {
    while let Ok(task) = task_rx.recv() {
        let node = task.node;
        let outcome = match catch_unwind(AssertUnwindSafe(|| compute(ctx, &task))) {
            Ok(Ok(out)) => Ok(out),
            Ok(Err(e)) => Err(Failure::Fatal(e)),
            Err(payload) => Err(Failure::Panic(panic_text(payload))),
        };
        if done_tx.send(Done { node, outcome }).is_err() {
            return;
        }
    }
}

fn panic_text(payload: Box<dyn std::any::Any + Send>) -> String {
    if let Some(s) = payload.downcast_ref::<&str>() {
        (*s).to_string()
    } else if let Some(s) = payload.downcast_ref::<String>() {
        s.clone()
    } else {
        "opaque panic payload".to_string()
    }
}

fn kind_name(kind: &NodeKind) -> &'static str {
    match kind {
        NodeKind::ConstFalse | NodeKind::ConstTrue => "const",
        NodeKind::Var(_) => "var",
        NodeKind::Not(_) => "not",
        NodeKind::And(_) => "and",
        NodeKind::Or(_) => "or",
        NodeKind::Op(crate::formula::OpKind::Ite, _) => "ite",
        NodeKind::Op(crate::formula::OpKind::Xor, _) => "xor",
    }
}

fn compute(ctx: Ctx<'_>, task: &Task) -> Result<Output, SynthError> {
    let t0 = Instant::now();
    if let Some((target, always)) = ctx.cfg.panic_on {
        if target == task.node && (always || task.attempt == 0) {
            panic!("injected failure");
        }
    }
    let kind = ctx.mgr.kind(task.node);
    let kid_refs: Vec<&QuadAnnotation> = task.children.iter().map(Arc::as_ref).collect();
    let mut quad = annotate_node(ctx.mgr, ctx.vars, task.node, &kid_refs)?;

    let mut nstats = NodeStats {
        node: task.node,
        kind: kind_name(&kind),
        cegar_ran: false,
        cegar: CegarStats::default(),
        wall_micros: 0,
    };
    let mut trace: Vec<RefineEvent> = Vec::new();
    let mut hit_node_timeout = false;

    let mut refine = |dg: &mut DeltaGammaVec,
                      phi: FormulaRef,
                      deadline: Option<Instant>,
                      nstats: &mut NodeStats,
                      trace: &mut Vec<RefineEvent>,
                      node_limited: bool|
     -> Result<(), SynthError> {
        if dg.exactness == Exactness::Exact {
            return Ok(());
        }
        nstats.cegar_ran = true;
        let out = perform_cegar(
            ctx.mgr,
            ctx.vars,
            phi,
            dg,
            &ctx.cfg.cegar,
            deadline,
            &mut nstats.cegar,
            trace,
        )?;
        if node_limited && out == CegarOutcome::BudgetExhausted {
            hit_node_timeout = true;
        }
        Ok(())
    };

    if task.is_root {
        // extraction reads the positive polarity of the root, which therefore
        // refines under the global deadline alone regardless of node kind
        refine(&mut quad.pos, task.node, ctx.global_deadline, &mut nstats, &mut trace, false)?;
    } else if matches!(kind, NodeKind::And(_) | NodeKind::Op(..)) {
        let skip = ctx.cfg.cegar_node_timeout.is_some_and(|t| t.is_zero());
        if !skip {
            let deadline = match (ctx.cfg.cegar_node_timeout, ctx.global_deadline) {
                (Some(t), Some(g)) => Some((Instant::now() + t).min(g)),
                (Some(t), None) => Some(Instant::now() + t),
                (None, g) => g,
            };
            let limited = ctx.cfg.cegar_node_timeout.is_some();
            refine(&mut quad.pos, task.node, deadline, &mut nstats, &mut trace, limited)?;
            let neg_phi = ctx.mgr.not(task.node);
            refine(&mut quad.neg, neg_phi, deadline, &mut nstats, &mut trace, limited)?;
        }
    }

    nstats.wall_micros = t0.elapsed().as_micros() as u64;
    Ok(Output { quad: Arc::new(quad), stats: nstats, trace, hit_node_timeout })
}
