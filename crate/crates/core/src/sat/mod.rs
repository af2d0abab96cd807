//! CNF encoding and SAT solving.
//!
//! `tseitin` turns a DAG node into a [`CnfDoc`] with full biconditional
//! clauses (one CNF variable per gate, NOT nodes reuse the child's variable
//! with flipped sign). Queries run on a hand-rolled CDCL solver with
//! assumption support and a deterministic conflict budget; an exhaustive
//! enumeration solver provides an independent cross-check for small inputs.

mod cdcl;
mod enumerate;

use std::collections::HashMap;

use thiserror::Error;

use crate::formula::{FormulaRef, Manager, NodeKind, OpKind, Var};

/// CNF variable, 1-based as in DIMACS.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct CnfVar(pub u32);

/// Signed DIMACS-style literal; never zero.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct CnfLit(pub i32);

impl CnfVar {
    pub fn lit(self, positive: bool) -> CnfLit {
        CnfLit(if positive { self.0 as i32 } else { -(self.0 as i32) })
    }
}

/// A CNF instance together with the maps tying it back to the source DAG.
pub struct CnfDoc {
    pub num_vars: u32,
    pub clauses: Vec<Vec<CnfLit>>,
    node_vars: HashMap<FormulaRef, CnfLit>,
    source_vars: HashMap<Var, CnfVar>,
}

impl CnfDoc {
    pub fn cnf_var(&self, v: Var) -> Option<CnfVar> {
        self.source_vars.get(&v).copied()
    }

    pub fn node_lit(&self, f: FormulaRef) -> Option<CnfLit> {
        self.node_vars.get(&f).copied()
    }

    pub fn source_vars(&self) -> impl Iterator<Item = (Var, CnfVar)> + '_ {
        self.source_vars.iter().map(|(v, c)| (*v, *c))
    }
}

#[derive(Debug, Clone)]
pub enum SatVerdict {
    /// Model over the source variables of the document.
    Sat(HashMap<Var, bool>),
    Unsat,
}

impl SatVerdict {
    pub fn is_sat(&self) -> bool {
        matches!(self, SatVerdict::Sat(_))
    }
}

#[derive(Debug, Error)]
pub enum SatError {
    #[error("assumption names a variable not present in the document")]
    UndeclaredVar(Var),
    #[error("solver conflict budget exhausted")]
    ResourceLimit,
    #[error("enumeration solver limited to 20 variables, document has {0}")]
    EnumerationTooLarge(u32),
}

#[derive(Debug, Clone, Copy)]
pub struct SolverOpts {
    pub max_conflicts: Option<u64>,
    pub seed: u64,
}

impl Default for SolverOpts {
    fn default() -> Self {
        SolverOpts { max_conflicts: None, seed: 0 }
    }
}

/// Clausifies the cone of `f`. The document asserts `f` via a unit clause,
/// so solving it decides satisfiability of the node.
pub fn tseitin(mgr: &Manager, f: FormulaRef) -> CnfDoc {
    let mut doc = CnfDoc {
        num_vars: 0,
        clauses: Vec::new(),
        node_vars: HashMap::new(),
        source_vars: HashMap::new(),
    };
    // constants only ever appear as the root thanks to folding
    match mgr.kind(f) {
        NodeKind::ConstTrue => return doc,
        NodeKind::ConstFalse => {
            doc.clauses.push(vec![]);
            return doc;
        }
        _ => {}
    }
    let order = mgr.topo_order(f);
    for g in order {
        let lit = match mgr.kind(g) {
            NodeKind::ConstFalse | NodeKind::ConstTrue => {
                unreachable!("constant below a stored gate")
            }
            NodeKind::Var(v) => {
                doc.num_vars += 1;
                let cv = CnfVar(doc.num_vars);
                doc.source_vars.insert(v, cv);
                cv.lit(true)
            }
            NodeKind::Not(c) => CnfLit(-doc.node_vars[&c].0),
            NodeKind::And(ch) => {
                doc.num_vars += 1;
                let t = CnfVar(doc.num_vars).lit(true);
                let mut long = vec![t];
                for c in &ch {
                    let cl = doc.node_vars[c];
                    doc.clauses.push(vec![neg(t), cl]);
                    long.push(neg(cl));
                }
                doc.clauses.push(long);
                t
            }
            NodeKind::Or(ch) => {
                doc.num_vars += 1;
                let t = CnfVar(doc.num_vars).lit(true);
                let mut long = vec![neg(t)];
                for c in &ch {
                    let cl = doc.node_vars[c];
                    doc.clauses.push(vec![t, neg(cl)]);
                    long.push(cl);
                }
                doc.clauses.push(long);
                t
            }
            NodeKind::Op(OpKind::Xor, ch) => {
                doc.num_vars += 1;
                let t = CnfVar(doc.num_vars).lit(true);
                let (a, b) = (doc.node_vars[&ch[0]], doc.node_vars[&ch[1]]);
                doc.clauses.push(vec![neg(t), a, b]);
                doc.clauses.push(vec![neg(t), neg(a), neg(b)]);
                doc.clauses.push(vec![t, neg(a), b]);
                doc.clauses.push(vec![t, a, neg(b)]);
                t
            }
            NodeKind::Op(OpKind::Ite, ch) => {
                doc.num_vars += 1;
                let t = CnfVar(doc.num_vars).lit(true);
                let (c, th, el) =
                    (doc.node_vars[&ch[0]], doc.node_vars[&ch[1]], doc.node_vars[&ch[2]]);
                doc.clauses.push(vec![neg(t), neg(c), th]);
                doc.clauses.push(vec![neg(t), c, el]);
                doc.clauses.push(vec![t, neg(c), neg(th)]);
                doc.clauses.push(vec![t, c, neg(el)]);
                t
            }
        };
        doc.node_vars.insert(g, lit);
    }
    let root = doc.node_vars[&f];
    doc.clauses.push(vec![root]);
    doc
}

fn neg(l: CnfLit) -> CnfLit {
    CnfLit(-l.0)
}

fn map_assumptions(doc: &CnfDoc, assumptions: &[(Var, bool)]) -> Result<Vec<i32>, SatError> {
    assumptions
        .iter()
        .map(|&(v, b)| {
            doc.cnf_var(v).map(|cv| cv.lit(b).0).ok_or(SatError::UndeclaredVar(v))
        })
        .collect()
}

fn extract_model(doc: &CnfDoc, raw: &[bool]) -> HashMap<Var, bool> {
    doc.source_vars().map(|(v, cv)| (v, raw[(cv.0 - 1) as usize])).collect()
}

/// CDCL solve under assumptions given as (variable, required value) pairs.
pub fn solve(
    doc: &CnfDoc,
    assumptions: &[(Var, bool)],
    opts: &SolverOpts,
) -> Result<SatVerdict, SatError> {
    let assumed = map_assumptions(doc, assumptions)?;
    let raw: Vec<Vec<i32>> =
        doc.clauses.iter().map(|c| c.iter().map(|l| l.0).collect()).collect();
    match cdcl::solve(doc.num_vars as usize, &raw, &assumed, opts)? {
        Some(model) => Ok(SatVerdict::Sat(extract_model(doc, &model))),
        None => Ok(SatVerdict::Unsat),
    }
}

/// Exhaustive solve for cross-checking; enumerates assignments in ascending
/// order so verdicts and models are reproducible.
pub fn solve_by_enumeration(
    doc: &CnfDoc,
    assumptions: &[(Var, bool)],
) -> Result<SatVerdict, SatError> {
    let assumed = map_assumptions(doc, assumptions)?;
    let raw: Vec<Vec<i32>> =
        doc.clauses.iter().map(|c| c.iter().map(|l| l.0).collect()).collect();
    match enumerate::solve(doc.num_vars as usize, &raw, &assumed)? {
        Some(model) => Ok(SatVerdict::Sat(extract_model(doc, &model))),
        None => Ok(SatVerdict::Unsat),
    }
}

/// DIMACS text for debugging and external tools.
pub fn to_dimacs(doc: &CnfDoc) -> String {
    let mut out = format!("p cnf {} {}\n", doc.num_vars, doc.clauses.len());
    for clause in &doc.clauses {
        for l in clause {
            out.push_str(&l.0.to_string());
            out.push(' ');
        }
        out.push_str("0\n");
    }
    out
}
