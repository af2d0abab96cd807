//! Counterexample-guided refinement of Δ/Γ vectors against a SAT oracle.
//!
//! A refinement vector for Φ is checked one target at a time with an error
//! formula whose models are gap points: assignments where the true cofactor
//! formula holds but the refinement does not. Each model is generalized to a
//! cube over the target's allowed support and disjoined into the vector, and
//! the loop repeats until the error formula is unsatisfiable or a budget runs
//! out. Γ components are swept before Δ components because the candidate
//! chains fix earlier outputs through the already-swept formulas.

use std::collections::HashMap;
use std::time::Instant;

use serde::Serialize;
use thiserror::Error;

use crate::compose::{allowed_support, DeltaGammaVec, Exactness};
use crate::formula::{FormulaRef, Manager, Var, VarTable};
use crate::sat::{solve, tseitin, CnfDoc, SatError, SatVerdict, SolverOpts};

/// Which property an error formula tests for one target.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorVariant {
    /// δr_i misses a point of Δ_i, given exact δr_j for j < i.
    DeltaExact,
    /// γr_i misses a point of Γ_i, given exact γr_j for j < i.
    GammaExact,
    /// δr_i misses a point where the γ-extracted candidates force y_i = 1.
    /// Cheaper than full exactness but only adequate for extraction.
    SkolemAdequate,
}

/// Refinement discipline for the δ sweep; the γ sweep always aims for
/// exactness since extraction reads the γ vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CegarVariant {
    #[default]
    Exact,
    SkolemAdequate,
}

#[derive(Debug, Clone)]
pub struct CegarConfig {
    pub variant: CegarVariant,
    /// Counterexamples processed per node before giving up.
    pub max_iterations: u64,
    /// Literal-drop attempts per generalization.
    pub generalize_attempts: u32,
    pub solver: SolverOpts,
    /// Re-check after every refinement that the counterexample is gone.
    pub check_progress: bool,
    pub record_trace: bool,
}

impl Default for CegarConfig {
    fn default() -> Self {
        CegarConfig {
            variant: CegarVariant::Exact,
            max_iterations: 100_000,
            generalize_attempts: 16,
            solver: SolverOpts::default(),
            check_progress: false,
            record_trace: false,
        }
    }
}

#[derive(Debug, Default, Clone, Copy, Serialize)]
pub struct CegarStats {
    pub solver_calls: u64,
    pub unsat_certificates: u64,
    pub counterexamples: u64,
    pub literals_dropped: u64,
    pub unsound_cubes: u64,
    pub progress_violations: u64,
}

impl CegarStats {
    pub fn absorb(&mut self, other: &CegarStats) {
        self.solver_calls += other.solver_calls;
        self.unsat_certificates += other.unsat_certificates;
        self.counterexamples += other.counterexamples;
        self.literals_dropped += other.literals_dropped;
        self.unsound_cubes += other.unsound_cubes;
        self.progress_violations += other.progress_violations;
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum Side {
    Delta,
    Gamma,
}

/// One refinement step, kept when tracing is on.
#[derive(Debug, Clone, Serialize)]
pub struct RefineEvent {
    pub phi: FormulaRef,
    pub target: usize,
    pub side: Side,
    pub before: FormulaRef,
    pub after: FormulaRef,
    pub model: Vec<(Var, bool)>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CegarOutcome {
    /// Every target passed its final unsatisfiability check.
    Certified,
    /// An iteration, conflict, or time budget ran out; the vector keeps the
    /// sound refinements gathered so far.
    BudgetExhausted,
}

#[derive(Debug, Error)]
pub enum CegarError {
    #[error("sat query failed: {0}")]
    Solver(#[from] SatError),
}

pub struct ErrorFormula {
    pub target: usize,
    pub variant: ErrorVariant,
    pub body: FormulaRef,
}

/// Error formula for one target. Models, restricted to inputs and outputs
/// after the target, are gap points of the tested component.
///
/// The chain conjuncts pin each earlier output to its candidate value, which
/// is well defined because component j only mentions outputs after j: the
/// constraints form a triangular system solved from the back.
pub fn build_error_formula(
    mgr: &Manager,
    vars: &VarTable,
    phi: FormulaRef,
    dg: &DeltaGammaVec,
    target: usize,
    variant: ErrorVariant,
) -> ErrorFormula {
    let y = |j: usize| mgr.var_ref(vars.outputs[j]);
    let iff = |a: FormulaRef, b: FormulaRef| mgr.not(mgr.xor(a, b));
    let mut parts = Vec::with_capacity(target + 3);
    match variant {
        ErrorVariant::DeltaExact => {
            parts.push(mgr.not(dg.delta[target]));
            for j in 0..=target {
                parts.push(iff(y(j), dg.delta[j]));
            }
        }
        ErrorVariant::GammaExact => {
            parts.push(mgr.not(dg.gamma[target]));
            for j in 0..=target {
                parts.push(iff(y(j), mgr.not(dg.gamma[j])));
            }
        }
        ErrorVariant::SkolemAdequate => {
            parts.push(mgr.not(dg.delta[target]));
            for j in 0..target {
                parts.push(iff(y(j), mgr.not(dg.gamma[j])));
            }
            parts.push(mgr.not(y(target)));
        }
    }
    parts.push(mgr.not(phi));
    ErrorFormula { target, variant, body: mgr.and(&parts) }
}

/// Generalizes a counterexample to a cube over the target's allowed support.
///
/// The full cube is first checked sound: together with Φ and the forbidden
/// target value it must be unsatisfiable. Literals are then dropped greedily
/// while the check stays unsatisfiable, up to the attempt budget. Returns
/// `None` when the full cube fails the check, which can happen for the
/// adequacy variant whose gap points need not force the node.
pub fn generalize(
    mgr: &Manager,
    vars: &VarTable,
    phi: FormulaRef,
    model: &HashMap<Var, bool>,
    target: usize,
    side: Side,
    attempts: u32,
    solver: &SolverOpts,
    stats: &mut CegarStats,
) -> Result<Option<Vec<(Var, bool)>>, SatError> {
    let doc = tseitin(mgr, phi);
    generalize_with_doc(vars, &doc, model, target, side, attempts, solver, stats)
}

#[allow(clippy::too_many_arguments)]
fn generalize_with_doc(
    vars: &VarTable,
    phi_doc: &CnfDoc,
    model: &HashMap<Var, bool>,
    target: usize,
    side: Side,
    attempts: u32,
    solver: &SolverOpts,
    stats: &mut CegarStats,
) -> Result<Option<Vec<(Var, bool)>>, SatError> {
    let mut cube: Vec<(Var, bool)> = allowed_support(vars, target)
        .into_iter()
        .filter(|v| phi_doc.cnf_var(*v).is_some())
        .map(|v| (v, model.get(&v).copied().unwrap_or(false)))
        .collect();
    // forcing check: cube plus the forbidden target value must contradict Φ;
    // when the target is outside Φ's support the value constraint is vacuous
    let forbidden = side == Side::Gamma;
    let y_target = vars.outputs[target];
    let y_assum = phi_doc.cnf_var(y_target).is_some().then_some((y_target, forbidden));
    let forced = |trial: &[(Var, bool)], stats: &mut CegarStats| -> Result<Option<bool>, SatError> {
        let mut assum = trial.to_vec();
        assum.extend(y_assum);
        stats.solver_calls += 1;
        match solve(phi_doc, &assum, solver) {
            Ok(SatVerdict::Unsat) => Ok(Some(true)),
            Ok(SatVerdict::Sat(_)) => Ok(Some(false)),
            Err(SatError::ResourceLimit) => Ok(None),
            Err(e) => Err(e),
        }
    };
    match forced(&cube, stats)? {
        Some(true) => {}
        // an inconclusive full-cube check also rejects the counterexample
        Some(false) | None => return Ok(None),
    }
    let mut left = attempts;
    let mut j = 0;
    while j < cube.len() && left > 0 {
        let mut trial = cube.clone();
        trial.remove(j);
        left -= 1;
        if forced(&trial, stats)? == Some(true) {
            cube = trial;
            stats.literals_dropped += 1;
        } else {
            j += 1;
        }
    }
    Ok(Some(cube))
}

fn cube_formula(mgr: &Manager, lits: &[(Var, bool)]) -> FormulaRef {
    let parts: Vec<FormulaRef> = lits.iter().map(|&(v, b)| mgr.lit(v, b)).collect();
    mgr.and(&parts)
}

/// Refines `dg` in place until every component is certified or a budget runs
/// out. On full certification under the `Exact` variant the vector is marked
/// exact; the adequacy variant never claims exactness because its δ check is
/// weaker.
#[allow(clippy::too_many_arguments)]
pub fn perform_cegar(
    mgr: &Manager,
    vars: &VarTable,
    phi: FormulaRef,
    dg: &mut DeltaGammaVec,
    cfg: &CegarConfig,
    deadline: Option<Instant>,
    stats: &mut CegarStats,
    trace: &mut Vec<RefineEvent>,
) -> Result<CegarOutcome, CegarError> {
    let n = dg.len();
    let phi_doc = tseitin(mgr, phi);
    let mut iterations: u64 = 0;
    let mut certified = true;

    'sweeps: for side in [Side::Gamma, Side::Delta] {
        let variant = match side {
            Side::Gamma => ErrorVariant::GammaExact,
            Side::Delta => match cfg.variant {
                CegarVariant::Exact => ErrorVariant::DeltaExact,
                CegarVariant::SkolemAdequate => ErrorVariant::SkolemAdequate,
            },
        };
        for i in 0..n {
            loop {
                if deadline.is_some_and(|d| Instant::now() >= d)
                    || iterations >= cfg.max_iterations
                {
                    certified = false;
                    break 'sweeps;
                }
                let err = build_error_formula(mgr, vars, phi, dg, i, variant);
                let doc = tseitin(mgr, err.body);
                stats.solver_calls += 1;
                let model = match solve(&doc, &[], &cfg.solver) {
                    Ok(SatVerdict::Unsat) => {
                        stats.unsat_certificates += 1;
                        break;
                    }
                    Ok(SatVerdict::Sat(model)) => model,
                    Err(SatError::ResourceLimit) => {
                        certified = false;
                        break 'sweeps;
                    }
                    Err(e) => return Err(e.into()),
                };
                iterations += 1;
                stats.counterexamples += 1;
                let cube = generalize_with_doc(
                    vars,
                    &phi_doc,
                    &model,
                    i,
                    side,
                    cfg.generalize_attempts,
                    &cfg.solver,
                    stats,
                )?;
                let Some(cube) = cube else {
                    // no sound refinement from this counterexample; leave the
                    // component as is and give up on certifying it
                    stats.unsound_cubes += 1;
                    certified = false;
                    break;
                };
                let slot = match side {
                    Side::Delta => &mut dg.delta[i],
                    Side::Gamma => &mut dg.gamma[i],
                };
                let before = *slot;
                let after = mgr.or(&[before, cube_formula(mgr, &cube)]);
                *slot = after;
                if cfg.record_trace {
                    let mut snap: Vec<(Var, bool)> =
                        model.iter().map(|(&v, &b)| (v, b)).collect();
                    snap.sort_by_key(|&(v, _)| v);
                    trace.push(RefineEvent { phi, target: i, side, before, after, model: snap });
                }
                if cfg.check_progress {
                    let err2 = build_error_formula(mgr, vars, phi, dg, i, variant);
                    let doc2 = tseitin(mgr, err2.body);
                    let assum: Vec<(Var, bool)> = model
                        .iter()
                        .filter(|(v, _)| doc2.cnf_var(**v).is_some())
                        .map(|(&v, &b)| (v, b))
                        .collect();
                    stats.solver_calls += 1;
                    match solve(&doc2, &assum, &cfg.solver) {
                        Ok(SatVerdict::Unsat) | Err(SatError::ResourceLimit) => {}
                        Ok(SatVerdict::Sat(_)) => stats.progress_violations += 1,
                        Err(e) => return Err(e.into()),
                    }
                }
            }
        }
    }
    let exact_grade = certified && cfg.variant == CegarVariant::Exact;
    dg.exactness = if exact_grade { Exactness::Exact } else { Exactness::Refinement };
    Ok(if certified { CegarOutcome::Certified } else { CegarOutcome::BudgetExhausted })
}
