//! Bottom-up composition of Δ/Γ refinement vectors.
//!
//! Every DAG node N carries refinements of Δ_i(N) and Γ_i(N) for each output
//! y_i, for both N and ¬N. Δ_i(N) holds at the points where setting y_i = 0
//! forces N false once y_1..y_{i-1} are quantified away; Γ_i is the same for
//! y_i = 1. OR nodes conjoin child vectors exactly; AND nodes disjoin them,
//! which may under-approximate; general operators go through their table
//! templates. A `Refinement` flag records that only the implication toward
//! the true cofactor formula is guaranteed.

use thiserror::Error;

use crate::formula::{FormulaRef, Manager, NodeKind, Var, VarTable};
use crate::template::{build_template, OpTemplate, TemplateExpr, TemplateOp};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Exactness {
    Exact,
    Refinement,
}

/// Per-output refinement formulas for one polarity of a node.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DeltaGammaVec {
    pub delta: Vec<FormulaRef>,
    pub gamma: Vec<FormulaRef>,
    pub exactness: Exactness,
}

impl DeltaGammaVec {
    pub fn len(&self) -> usize {
        self.delta.len()
    }

    pub fn is_empty(&self) -> bool {
        self.delta.is_empty()
    }
}

/// Vectors for a node and for its negation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QuadAnnotation {
    pub pos: DeltaGammaVec,
    pub neg: DeltaGammaVec,
}

impl QuadAnnotation {
    /// Annotation of ¬N from the annotation of N.
    pub fn swapped(&self) -> QuadAnnotation {
        QuadAnnotation { pos: self.neg.clone(), neg: self.pos.clone() }
    }
}

#[derive(Debug, Error)]
pub enum ComposeError {
    #[error("variable {0} is neither a declared input nor an output")]
    UnknownVar(String),
    #[error("internal node passed to leaf annotation")]
    NotALeaf,
    #[error("operator node with {got} children does not match template arity {want}")]
    ArityMismatch { want: usize, got: usize },
}

/// Exact annotation of a leaf (constant or variable).
pub fn leaf_quad(
    mgr: &Manager,
    vars: &VarTable,
    leaf: FormulaRef,
) -> Result<QuadAnnotation, ComposeError> {
    let n = vars.num_outputs();
    let fill = |f: FormulaRef| DeltaGammaVec {
        delta: vec![f; n],
        gamma: vec![f; n],
        exactness: Exactness::Exact,
    };
    match mgr.kind(leaf) {
        NodeKind::ConstFalse => {
            Ok(QuadAnnotation { pos: fill(mgr.true_ref()), neg: fill(mgr.false_ref()) })
        }
        NodeKind::ConstTrue => {
            Ok(QuadAnnotation { pos: fill(mgr.false_ref()), neg: fill(mgr.true_ref()) })
        }
        NodeKind::Var(v) => {
            if vars.is_input(v) {
                return Ok(QuadAnnotation { pos: fill(mgr.not(leaf)), neg: fill(leaf) });
            }
            let Some(p) = vars.output_pos(v) else {
                return Err(ComposeError::UnknownVar(mgr.var_name(v)));
            };
            Ok(output_leaf(mgr, leaf, p, n))
        }
        _ => Err(ComposeError::NotALeaf),
    }
}

/// Annotation of the output variable y_p (0-based position) itself.
///
/// For targets before p the node is untouched by substitution and
/// quantification, so both cofactor formulas are its negation. At p itself,
/// y_p = 0 falsifies the node and y_p = 1 satisfies it. Past p the variable
/// has been quantified away and nothing is forced.
fn output_leaf(mgr: &Manager, leaf: FormulaRef, p: usize, n: usize) -> QuadAnnotation {
    let t = mgr.true_ref();
    let f = mgr.false_ref();
    let neg_leaf = mgr.not(leaf);
    let mut pos =
        DeltaGammaVec { delta: vec![f; n], gamma: vec![f; n], exactness: Exactness::Exact };
    let mut neg = pos.clone();
    for i in 0..p {
        pos.delta[i] = neg_leaf;
        pos.gamma[i] = neg_leaf;
        neg.delta[i] = leaf;
        neg.gamma[i] = leaf;
    }
    if p < n {
        pos.delta[p] = t;
        neg.gamma[p] = t;
    }
    QuadAnnotation { pos, neg }
}

/// Pointwise conjunction; exact when every part is exact.
pub fn conjoin(mgr: &Manager, parts: &[&DeltaGammaVec]) -> DeltaGammaVec {
    let n = parts[0].len();
    let gather = |pick: &dyn Fn(&DeltaGammaVec) -> &[FormulaRef], i: usize| {
        let refs: Vec<FormulaRef> = parts.iter().map(|p| pick(p)[i]).collect();
        mgr.and(&refs)
    };
    DeltaGammaVec {
        delta: (0..n).map(|i| gather(&|p| &p.delta, i)).collect(),
        gamma: (0..n).map(|i| gather(&|p| &p.gamma, i)).collect(),
        exactness: if parts.iter().all(|p| p.exactness == Exactness::Exact) {
            Exactness::Exact
        } else {
            Exactness::Refinement
        },
    }
}

/// Pointwise disjunction; sound but never certified exact, since existential
/// quantification does not distribute over the conjunction being negated.
pub fn disjoin(mgr: &Manager, parts: &[&DeltaGammaVec]) -> DeltaGammaVec {
    let n = parts[0].len();
    let gather = |pick: &dyn Fn(&DeltaGammaVec) -> &[FormulaRef], i: usize| {
        let refs: Vec<FormulaRef> = parts.iter().map(|p| pick(p)[i]).collect();
        mgr.or(&refs)
    };
    DeltaGammaVec {
        delta: (0..n).map(|i| gather(&|p| &p.delta, i)).collect(),
        gamma: (0..n).map(|i| gather(&|p| &p.gamma, i)).collect(),
        exactness: Exactness::Refinement,
    }
}

/// OR node: the node is forced false exactly when every child is.
pub fn compose_or(mgr: &Manager, children: &[&QuadAnnotation]) -> QuadAnnotation {
    let pos: Vec<&DeltaGammaVec> = children.iter().map(|q| &q.pos).collect();
    let neg: Vec<&DeltaGammaVec> = children.iter().map(|q| &q.neg).collect();
    QuadAnnotation { pos: conjoin(mgr, &pos), neg: disjoin(mgr, &neg) }
}

/// AND node: any child forced false forces the node false, but not only then.
pub fn compose_and(mgr: &Manager, children: &[&QuadAnnotation]) -> QuadAnnotation {
    let pos: Vec<&DeltaGammaVec> = children.iter().map(|q| &q.pos).collect();
    let neg: Vec<&DeltaGammaVec> = children.iter().map(|q| &q.neg).collect();
    QuadAnnotation { pos: disjoin(mgr, &pos), neg: conjoin(mgr, &neg) }
}

/// Builds a formula from a template by substituting child refinements:
/// placeholder z_s reads from the negated child s, z̄_s from child s.
pub fn instantiate(
    mgr: &Manager,
    expr: &TemplateExpr,
    z: &dyn Fn(usize) -> FormulaRef,
    zbar: &dyn Fn(usize) -> FormulaRef,
) -> FormulaRef {
    match expr {
        TemplateExpr::False => mgr.false_ref(),
        TemplateExpr::True => mgr.true_ref(),
        TemplateExpr::Z(s) => z(*s),
        TemplateExpr::ZBar(s) => zbar(*s),
        TemplateExpr::And(ts) => {
            let parts: Vec<FormulaRef> =
                ts.iter().map(|t| instantiate(mgr, t, z, zbar)).collect();
            mgr.and(&parts)
        }
        TemplateExpr::Or(ts) => {
            let parts: Vec<FormulaRef> =
                ts.iter().map(|t| instantiate(mgr, t, z, zbar)).collect();
            mgr.or(&parts)
        }
    }
}

/// General operator node via its table template. For each child position l
/// the child's own forcing combines with the operator cofactor formula
/// instantiated over the siblings' refinements.
pub fn apply_template(
    mgr: &Manager,
    tpl: &OpTemplate,
    children: &[&QuadAnnotation],
) -> Result<QuadAnnotation, ComposeError> {
    let r = tpl.op.arity;
    if children.len() != r {
        return Err(ComposeError::ArityMismatch { want: r, got: children.len() });
    }
    let n = children[0].pos.len();
    let side = |omegas: &[TemplateExpr], upsilons: &[TemplateExpr]| -> DeltaGammaVec {
        let component = |pick: &dyn Fn(&DeltaGammaVec, usize) -> FormulaRef, i: usize| {
            let of_child = |s: usize| pick(&children[s - 1].pos, i);
            let of_neg_child = |s: usize| pick(&children[s - 1].neg, i);
            let mut terms = Vec::with_capacity(2 * r);
            for l in 1..=r {
                let om = instantiate(mgr, &omegas[l - 1], &of_neg_child, &of_child);
                terms.push(mgr.and(&[of_child(l), om]));
                let up = instantiate(mgr, &upsilons[l - 1], &of_neg_child, &of_child);
                terms.push(mgr.and(&[of_neg_child(l), up]));
            }
            mgr.or(&terms)
        };
        DeltaGammaVec {
            delta: (0..n).map(|i| component(&|v, i| v.delta[i], i)).collect(),
            gamma: (0..n).map(|i| component(&|v, i| v.gamma[i], i)).collect(),
            exactness: Exactness::Refinement,
        }
    };
    Ok(QuadAnnotation {
        pos: side(&tpl.omega_pos, &tpl.upsilon_pos),
        neg: side(&tpl.omega_neg, &tpl.upsilon_neg),
    })
}

/// Annotates one node given its children's annotations, without any
/// counterexample refinement.
pub fn annotate_node(
    mgr: &Manager,
    vars: &VarTable,
    node: FormulaRef,
    children: &[&QuadAnnotation],
) -> Result<QuadAnnotation, ComposeError> {
    match mgr.kind(node) {
        NodeKind::ConstFalse | NodeKind::ConstTrue | NodeKind::Var(_) => {
            leaf_quad(mgr, vars, node)
        }
        NodeKind::Not(_) => Ok(children[0].swapped()),
        NodeKind::And(_) => Ok(compose_and(mgr, children)),
        NodeKind::Or(_) => Ok(compose_or(mgr, children)),
        NodeKind::Op(k, _) => {
            let tpl = build_template(TemplateOp::of_op_kind(k));
            apply_template(mgr, &tpl, children)
        }
    }
}

/// Variables a Δ/Γ formula for target i may mention: the inputs plus the
/// outputs strictly after i.
pub fn allowed_support(vars: &VarTable, i: usize) -> Vec<Var> {
    let mut allowed: Vec<Var> = vars.inputs.clone();
    allowed.extend_from_slice(&vars.outputs[i + 1..]);
    allowed
}
