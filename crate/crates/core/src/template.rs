//! Refinement templates for general operators.
//!
//! For an operator op(z_1..z_r) and each position l, the template stores the
//! cofactor formulas Δ_{z_l}(op) and Γ_{z_l}(op) (quantifying z_1..z_{l-1},
//! substituting z_l) in negation normal form, with negated literals renamed
//! into a parallel z̄ namespace. The same is precomputed for ¬op. Templates
//! depend only on the operator's truth table and arity, so they are pure data
//! cached process-wide; the z/z̄ placeholders never enter any manager.

use std::collections::HashMap;
use std::sync::{Arc, Mutex};

use once_cell::sync::Lazy;
use thiserror::Error;

use crate::formula::OpKind;

/// Operator identified by arity and truth table. Bit `k` of `bits` is the
/// operator value with z_s = bit (s-1) of k.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct TemplateOp {
    pub arity: usize,
    pub bits: u32,
}

pub const MAX_TEMPLATE_ARITY: usize = 4;

#[derive(Debug, Error)]
pub enum TemplateError {
    #[error("template arity {0} out of range (2..={MAX_TEMPLATE_ARITY})")]
    Arity(usize),
}

impl TemplateOp {
    pub fn from_table(arity: usize, bits: u32) -> Result<Self, TemplateError> {
        if !(2..=MAX_TEMPLATE_ARITY).contains(&arity) {
            return Err(TemplateError::Arity(arity));
        }
        let mask = table_mask(arity);
        Ok(TemplateOp { arity, bits: bits & mask })
    }

    pub fn and(arity: usize) -> Result<Self, TemplateError> {
        Self::from_table(arity, 1 << ((1usize << arity) - 1))
    }

    pub fn or(arity: usize) -> Result<Self, TemplateError> {
        let mask = table_mask(arity);
        Self::from_table(arity, mask & !1)
    }

    pub fn xor2() -> Self {
        TemplateOp { arity: 2, bits: 0b0110 }
    }

    pub fn ite() -> Self {
        TemplateOp { arity: 3, bits: 0xD8 }
    }

    pub fn of_op_kind(k: OpKind) -> Self {
        match k {
            OpKind::Ite => Self::ite(),
            OpKind::Xor => Self::xor2(),
        }
    }

    pub fn negated(self) -> Self {
        TemplateOp { arity: self.arity, bits: !self.bits & table_mask(self.arity) }
    }

    /// Operator value at assignment `k`.
    pub fn eval(self, k: usize) -> bool {
        self.bits >> k & 1 == 1
    }
}

fn table_mask(arity: usize) -> u32 {
    if arity >= 5 {
        !0
    } else {
        ((1u64 << (1 << arity)) - 1) as u32
    }
}

/// NNF formula over template placeholders. `Z(s)` and `ZBar(s)` are
/// independent positive literals (1-based child position), which makes every
/// template positive-unate by construction.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum TemplateExpr {
    False,
    True,
    Z(usize),
    ZBar(usize),
    And(Vec<TemplateExpr>),
    Or(Vec<TemplateExpr>),
}

impl TemplateExpr {
    pub fn eval(&self, z: &dyn Fn(usize) -> bool, zbar: &dyn Fn(usize) -> bool) -> bool {
        match self {
            TemplateExpr::False => false,
            TemplateExpr::True => true,
            TemplateExpr::Z(s) => z(*s),
            TemplateExpr::ZBar(s) => zbar(*s),
            TemplateExpr::And(ts) => ts.iter().all(|t| t.eval(z, zbar)),
            TemplateExpr::Or(ts) => ts.iter().any(|t| t.eval(z, zbar)),
        }
    }

    /// Evaluation in the standard reading z̄_s = ¬z_s, over assignment bits.
    pub fn eval_standard(&self, k: usize) -> bool {
        self.eval(&|s| k >> (s - 1) & 1 == 1, &|s| k >> (s - 1) & 1 == 0)
    }
}

/// Per-position template formulas for one operator and its negation.
/// Index `l-1` holds the position-l formula over placeholders s > l.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OpTemplate {
    pub op: TemplateOp,
    pub omega_pos: Vec<TemplateExpr>,
    pub upsilon_pos: Vec<TemplateExpr>,
    pub omega_neg: Vec<TemplateExpr>,
    pub upsilon_neg: Vec<TemplateExpr>,
}

static CACHE: Lazy<Mutex<HashMap<TemplateOp, Arc<OpTemplate>>>> =
    Lazy::new(|| Mutex::new(HashMap::new()));

/// Builds (or fetches) the template for an operator.
pub fn build_template(op: TemplateOp) -> Arc<OpTemplate> {
    if let Some(t) = CACHE.lock().unwrap().get(&op) {
        return t.clone();
    }
    let (omega_pos, upsilon_pos) = cofactor_chain(op);
    let (omega_neg, upsilon_neg) = cofactor_chain(op.negated());
    let tpl = Arc::new(OpTemplate { op, omega_pos, upsilon_pos, omega_neg, upsilon_neg });
    CACHE.lock().unwrap().insert(op, tpl.clone());
    tpl
}

/// Δ and Γ formulas for every position of one operator table.
fn cofactor_chain(op: TemplateOp) -> (Vec<TemplateExpr>, Vec<TemplateExpr>) {
    let r = op.arity;
    let mut omegas = Vec::with_capacity(r);
    let mut upsilons = Vec::with_capacity(r);
    let mut cur = op.bits; // ∃z_1..z_{l-1} op, widened over the full index space
    for l in 1..=r {
        let d = !cofactor(cur, r, l, false) & table_mask(r);
        let g = !cofactor(cur, r, l, true) & table_mask(r);
        let free: Vec<usize> = (l + 1..=r).collect();
        omegas.push(minimize(d, &free));
        upsilons.push(minimize(g, &free));
        cur = cofactor(cur, r, l, false) | cofactor(cur, r, l, true);
    }
    (omegas, upsilons)
}

/// Truth-table cofactor: entry k reads the table at k with z_s fixed.
fn cofactor(bits: u32, arity: usize, s: usize, val: bool) -> u32 {
    let mut out = 0u32;
    let sbit = 1usize << (s - 1);
    for k in 0..(1usize << arity) {
        let src = if val { k | sbit } else { k & !sbit };
        if bits >> src & 1 == 1 {
            out |= 1 << k;
        }
    }
    out
}

/// Exact two-level minimization over the given placeholder positions
/// (1-based). The table must not depend on any other position. Produces a
/// canonical sum of products: primes sorted by literal count then position,
/// cover chosen as the first minimal one in that order.
fn minimize(bits: u32, positions: &[usize]) -> TemplateExpr {
    let v = positions.len();
    let read = |pk: usize| -> bool {
        // project: absent positions read as 0
        let mut k = 0usize;
        for (j, &s) in positions.iter().enumerate() {
            if pk >> j & 1 == 1 {
                k |= 1 << (s - 1);
            }
        }
        bits >> k & 1 == 1
    };
    let size = 1usize << v;
    let minterms: Vec<usize> = (0..size).filter(|&pk| read(pk)).collect();
    if minterms.is_empty() {
        return TemplateExpr::False;
    }
    if minterms.len() == size {
        return TemplateExpr::True;
    }
    // cubes: (care mask, values); enumerate all and keep prime implicants
    let mut primes: Vec<(usize, usize)> = Vec::new();
    for care in 0..size {
        'vals: for vals in 0..size {
            if vals & !care != 0 {
                continue;
            }
            // all minterms of the cube must be true
            for pk in 0..size {
                if pk & care == vals && !read(pk) {
                    continue 'vals;
                }
            }
            // prime: dropping any cared position breaks the implication
            for j in 0..v {
                let bit = 1 << j;
                if care & bit != 0 {
                    let sub_care = care & !bit;
                    let mut ok = true;
                    for pk in 0..size {
                        if pk & sub_care == vals & sub_care && !read(pk) {
                            ok = false;
                            break;
                        }
                    }
                    if ok {
                        continue 'vals;
                    }
                }
            }
            primes.push((care, vals));
        }
    }
    primes.sort_by_key(|&(care, vals)| (care.count_ones(), care, vals));
    // first minimal cover in sorted prime order
    let covers = |subset: usize| -> bool {
        minterms.iter().all(|&pk| {
            (0..primes.len()).any(|pi| {
                subset >> pi & 1 == 1 && {
                    let (care, vals) = primes[pi];
                    pk & care == vals
                }
            })
        })
    };
    let mut chosen: Vec<(usize, usize)> = Vec::new();
    'search: for count in 1..=primes.len() {
        for subset in 0usize..(1 << primes.len()) {
            if subset.count_ones() as usize == count && covers(subset) {
                chosen = (0..primes.len())
                    .filter(|pi| subset >> pi & 1 == 1)
                    .map(|pi| primes[pi])
                    .collect();
                break 'search;
            }
        }
    }
    let terms: Vec<TemplateExpr> = chosen
        .iter()
        .map(|&(care, vals)| {
            let lits: Vec<TemplateExpr> = (0..v)
                .filter(|j| care >> j & 1 == 1)
                .map(|j| {
                    if vals >> j & 1 == 1 {
                        TemplateExpr::Z(positions[j])
                    } else {
                        TemplateExpr::ZBar(positions[j])
                    }
                })
                .collect();
            match lits.len() {
                1 => lits.into_iter().next().unwrap(),
                _ => TemplateExpr::And(lits),
            }
        })
        .collect();
    match terms.len() {
        1 => terms.into_iter().next().unwrap(),
        _ => TemplateExpr::Or(terms),
    }
}
