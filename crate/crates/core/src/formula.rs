//! Hash-consed Boolean DAG manager.
//!
//! Nodes live in an append-only store; structurally identical nodes share one
//! `FormulaRef`. Constant folding happens at construction, so constants never
//! appear as children of stored nodes and `Not(Not(f))` collapses to `f`.

use std::collections::HashMap;
use std::sync::RwLock;

use thiserror::Error;

/// A named problem variable. Template placeholders never get a `Var`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, serde::Serialize)]
pub struct Var(pub u32);

/// Handle to a node in a [`Manager`]. Only meaningful for the manager that
/// created it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, serde::Serialize)]
pub struct FormulaRef(pub u32);

/// General operator code for nodes that are neither AND nor OR.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum OpKind {
    /// if-then-else over (cond, then, else)
    Ite,
    /// exclusive or, arity 2
    Xor,
}

impl OpKind {
    pub fn arity(self) -> usize {
        match self {
            OpKind::Ite => 3,
            OpKind::Xor => 2,
        }
    }
}

/// Shape of a stored node. And/Or children are ordered and, once stored,
/// number at least two; duplicates are collapsed at construction.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum NodeKind {
    ConstFalse,
    ConstTrue,
    Var(Var),
    Not(FormulaRef),
    And(Vec<FormulaRef>),
    Or(Vec<FormulaRef>),
    Op(OpKind, Vec<FormulaRef>),
}

impl NodeKind {
    /// Child references in stored order; empty for leaves.
    pub fn children(&self) -> &[FormulaRef] {
        match self {
            NodeKind::Not(c) => std::slice::from_ref(c),
            NodeKind::And(cs) | NodeKind::Or(cs) | NodeKind::Op(_, cs) => cs,
            _ => &[],
        }
    }
}

#[derive(Debug, Error)]
pub enum FormulaError {
    #[error("operator {0:?} expects {1} children, got {2}")]
    Arity(OpKind, usize, usize),
    #[error("variable {0:?} has no value in the assignment")]
    UnassignedVar(Var),
}

struct NodeData {
    kind: NodeKind,
    support: Box<[Var]>,
}

#[derive(Default)]
pub(crate) struct Store {
    nodes: Vec<NodeData>,
    index: HashMap<NodeKind, u32>,
    var_names: Vec<String>,
    var_index: HashMap<String, Var>,
}

impl Store {
    pub(crate) fn kind(&self, f: FormulaRef) -> &NodeKind {
        &self.nodes[f.0 as usize].kind
    }

    pub(crate) fn support(&self, f: FormulaRef) -> &[Var] {
        &self.nodes[f.0 as usize].support
    }
}

/// Owns the node store and the variable name table. All methods take `&self`;
/// the store is guarded by a `RwLock`, so a manager can be shared across
/// worker threads.
pub struct Manager {
    store: RwLock<Store>,
}

impl Default for Manager {
    fn default() -> Self {
        Self::new()
    }
}

impl Manager {
    pub fn new() -> Self {
        let mut store = Store::default();
        store.nodes.push(NodeData { kind: NodeKind::ConstFalse, support: Box::new([]) });
        store.index.insert(NodeKind::ConstFalse, 0);
        store.nodes.push(NodeData { kind: NodeKind::ConstTrue, support: Box::new([]) });
        store.index.insert(NodeKind::ConstTrue, 1);
        Manager { store: RwLock::new(store) }
    }

    // Lock acquisition shrugs off poisoning: the store is append-only and its
    // short critical sections contain no unwinding call sites, while worker
    // panics elsewhere are caught and retried.
    pub(crate) fn read(&self) -> std::sync::RwLockReadGuard<'_, Store> {
        self.store.read().unwrap_or_else(|e| e.into_inner())
    }

    fn write(&self) -> std::sync::RwLockWriteGuard<'_, Store> {
        self.store.write().unwrap_or_else(|e| e.into_inner())
    }

    pub fn false_ref(&self) -> FormulaRef {
        FormulaRef(0)
    }

    pub fn true_ref(&self) -> FormulaRef {
        FormulaRef(1)
    }

    /// Interns a variable by name. Repeated calls with the same name return
    /// the same `Var`.
    pub fn var(&self, name: &str) -> Var {
        if let Some(v) = self.read().var_index.get(name) {
            return *v;
        }
        let mut store = self.write();
        if let Some(v) = store.var_index.get(name) {
            return *v;
        }
        let v = Var(store.var_names.len() as u32);
        store.var_names.push(name.to_string());
        store.var_index.insert(name.to_string(), v);
        v
    }

    pub fn var_name(&self, v: Var) -> String {
        self.read().var_names[v.0 as usize].clone()
    }

    pub fn lookup_var(&self, name: &str) -> Option<Var> {
        self.read().var_index.get(name).copied()
    }

    /// Node for a plain variable.
    pub fn var_ref(&self, v: Var) -> FormulaRef {
        self.intern(NodeKind::Var(v))
    }

    pub fn lit(&self, v: Var, positive: bool) -> FormulaRef {
        let f = self.var_ref(v);
        if positive {
            f
        } else {
            self.not(f)
        }
    }

    fn intern(&self, kind: NodeKind) -> FormulaRef {
        if let Some(&id) = self.read().index.get(&kind) {
            return FormulaRef(id);
        }
        let mut store = self.write();
        if let Some(&id) = store.index.get(&kind) {
            return FormulaRef(id);
        }
        let support = compute_support(&store, &kind);
        let id = store.nodes.len() as u32;
        store.nodes.push(NodeData { kind: kind.clone(), support });
        store.index.insert(kind, id);
        FormulaRef(id)
    }

    pub fn kind(&self, f: FormulaRef) -> NodeKind {
        self.read().kind(f).clone()
    }

    /// Sorted support of `f`: exactly the variables that can change its value
    /// given the folding rules applied at construction.
    pub fn support(&self, f: FormulaRef) -> Vec<Var> {
        self.read().support(f).to_vec()
    }

    pub fn node_count(&self) -> usize {
        self.read().nodes.len()
    }

    pub fn not(&self, f: FormulaRef) -> FormulaRef {
        match self.kind(f) {
            NodeKind::ConstFalse => self.true_ref(),
            NodeKind::ConstTrue => self.false_ref(),
            NodeKind::Not(g) => g,
            _ => self.intern(NodeKind::Not(f)),
        }
    }

    /// n-ary conjunction. True children are dropped, duplicates collapsed;
    /// a False or complementary pair short-circuits to False.
    pub fn and(&self, children: &[FormulaRef]) -> FormulaRef {
        self.gate(children, /*is_and=*/ true)
    }

    /// n-ary disjunction, dual to [`Manager::and`].
    pub fn or(&self, children: &[FormulaRef]) -> FormulaRef {
        self.gate(children, /*is_and=*/ false)
    }

    fn gate(&self, children: &[FormulaRef], is_and: bool) -> FormulaRef {
        let absorbing = if is_and { self.false_ref() } else { self.true_ref() };
        let neutral = if is_and { self.true_ref() } else { self.false_ref() };
        let mut kept: Vec<FormulaRef> = Vec::with_capacity(children.len());
        let mut seen: std::collections::HashSet<FormulaRef> = std::collections::HashSet::new();
        // children of Not nodes already in `kept`, for complement detection
        let mut stripped: std::collections::HashSet<FormulaRef> = std::collections::HashSet::new();
        for &c in children {
            if c == absorbing {
                return absorbing;
            }
            if c == neutral || seen.contains(&c) {
                continue;
            }
            if let NodeKind::Not(d) = self.kind(c) {
                if seen.contains(&d) {
                    return absorbing;
                }
                stripped.insert(d);
            }
            if stripped.contains(&c) {
                return absorbing;
            }
            seen.insert(c);
            kept.push(c);
        }
        match kept.len() {
            0 => neutral,
            1 => kept[0],
            _ => self.intern(if is_and { NodeKind::And(kept) } else { NodeKind::Or(kept) }),
        }
    }

    pub fn xor(&self, a: FormulaRef, b: FormulaRef) -> FormulaRef {
        if a == self.false_ref() {
            return b;
        }
        if b == self.false_ref() {
            return a;
        }
        if a == self.true_ref() {
            return self.not(b);
        }
        if b == self.true_ref() {
            return self.not(a);
        }
        if a == b {
            return self.false_ref();
        }
        if self.is_neg_of(a, b) {
            return self.true_ref();
        }
        self.intern(NodeKind::Op(OpKind::Xor, vec![a, b]))
    }

    pub fn ite(&self, c: FormulaRef, t: FormulaRef, e: FormulaRef) -> FormulaRef {
        if c == self.true_ref() {
            return t;
        }
        if c == self.false_ref() {
            return e;
        }
        if t == e {
            return t;
        }
        if let NodeKind::Not(c0) = self.kind(c) {
            return self.ite(c0, e, t);
        }
        if t == self.true_ref() {
            return self.or(&[c, e]);
        }
        if t == self.false_ref() {
            return self.and(&[self.not(c), e]);
        }
        if e == self.true_ref() {
            return self.or(&[self.not(c), t]);
        }
        if e == self.false_ref() {
            return self.and(&[c, t]);
        }
        self.intern(NodeKind::Op(OpKind::Ite, vec![c, t, e]))
    }

    /// Generic constructor for general operators, with arity checking.
    pub fn op(&self, kind: OpKind, children: &[FormulaRef]) -> Result<FormulaRef, FormulaError> {
        if children.len() != kind.arity() {
            return Err(FormulaError::Arity(kind, kind.arity(), children.len()));
        }
        Ok(match kind {
            OpKind::Ite => self.ite(children[0], children[1], children[2]),
            OpKind::Xor => self.xor(children[0], children[1]),
        })
    }

    /// True when one of the two refs is exactly the negation node of the other.
    pub fn is_neg_of(&self, a: FormulaRef, b: FormulaRef) -> bool {
        let store = self.read();
        matches!(store.kind(a), NodeKind::Not(x) if *x == b)
            || matches!(store.kind(b), NodeKind::Not(x) if *x == a)
    }

    /// Evaluates `f` under a total assignment of its support.
    pub fn eval(
        &self,
        f: FormulaRef,
        assignment: &HashMap<Var, bool>,
    ) -> Result<bool, FormulaError> {
        let store = self.read();
        let mut memo: HashMap<FormulaRef, bool> = HashMap::new();
        let mut stack = vec![f];
        while let Some(&top) = stack.last() {
            if memo.contains_key(&top) {
                stack.pop();
                continue;
            }
            let kind = store.kind(top);
            let value = match kind {
                NodeKind::ConstFalse => Some(false),
                NodeKind::ConstTrue => Some(true),
                NodeKind::Var(v) => {
                    Some(*assignment.get(v).ok_or(FormulaError::UnassignedVar(*v))?)
                }
                NodeKind::Not(c) => memo.get(c).map(|b| !b),
                NodeKind::And(ch) | NodeKind::Or(ch) | NodeKind::Op(_, ch) => {
                    if ch.iter().all(|c| memo.contains_key(c)) {
                        let bits: Vec<bool> = ch.iter().map(|c| memo[c]).collect();
                        Some(match kind {
                            NodeKind::And(_) => bits.iter().all(|&b| b),
                            NodeKind::Or(_) => bits.iter().any(|&b| b),
                            NodeKind::Op(OpKind::Ite, _) => {
                                if bits[0] {
                                    bits[1]
                                } else {
                                    bits[2]
                                }
                            }
                            NodeKind::Op(OpKind::Xor, _) => bits[0] ^ bits[1],
                            _ => unreachable!(),
                        })
                    } else {
                        None
                    }
                }
            };
            match value {
                Some(b) => {
                    memo.insert(top, b);
                    stack.pop();
                }
                None => {
                    if let NodeKind::Not(c) = kind {
                        stack.push(*c);
                    } else if let NodeKind::And(ch) | NodeKind::Or(ch) | NodeKind::Op(_, ch) = kind
                    {
                        for &c in ch.iter().rev() {
                            if !memo.contains_key(&c) {
                                stack.push(c);
                            }
                        }
                    }
                }
            }
        }
        Ok(memo[&f])
    }

    /// Reachable nodes under `f`, children before parents.
    pub fn topo_order(&self, f: FormulaRef) -> Vec<FormulaRef> {
        let store = self.read();
        let mut order = Vec::new();
        let mut state: HashMap<FormulaRef, u8> = HashMap::new(); // 1 = open, 2 = done
        let mut stack = vec![f];
        while let Some(&top) = stack.last() {
            match state.get(&top).copied() {
                Some(2) => {
                    stack.pop();
                }
                Some(1) => {
                    state.insert(top, 2);
                    order.push(top);
                    stack.pop();
                }
                _ => {
                    state.insert(top, 1);
                    match store.kind(top) {
                        NodeKind::Not(c) => {
                            if !state.contains_key(c) {
                                stack.push(*c);
                            }
                        }
                        NodeKind::And(ch) | NodeKind::Or(ch) | NodeKind::Op(_, ch) => {
                            for &c in ch.iter().rev() {
                                if !state.contains_key(&c) {
                                    stack.push(c);
                                }
                            }
                        }
                        _ => {}
                    }
                }
            }
        }
        order
    }

    pub fn reachable_count(&self, f: FormulaRef) -> usize {
        self.topo_order(f).len()
    }

    /// Negation normal form: And/Or/Var/negated Var/constants only. General
    /// operators are expanded by definition first.
    pub fn to_nnf(&self, f: FormulaRef) -> FormulaRef {
        let mut memo: HashMap<(FormulaRef, bool), FormulaRef> = HashMap::new();
        enum Frame {
            Enter(FormulaRef, bool),
            Exit(FormulaRef, bool),
        }
        let mut stack = vec![Frame::Enter(f, true)];
        while let Some(frame) = stack.pop() {
            match frame {
                Frame::Enter(g, pol) => {
                    if memo.contains_key(&(g, pol)) {
                        continue;
                    }
                    match self.kind(g) {
                        NodeKind::ConstFalse => {
                            memo.insert((g, pol), if pol { self.false_ref() } else { self.true_ref() });
                        }
                        NodeKind::ConstTrue => {
                            memo.insert((g, pol), if pol { self.true_ref() } else { self.false_ref() });
                        }
                        NodeKind::Var(v) => {
                            memo.insert((g, pol), self.lit(v, pol));
                        }
                        NodeKind::Not(c) => {
                            stack.push(Frame::Exit(g, pol));
                            stack.push(Frame::Enter(c, !pol));
                        }
                        NodeKind::And(ch) | NodeKind::Or(ch) => {
                            stack.push(Frame::Exit(g, pol));
                            for c in ch {
                                stack.push(Frame::Enter(c, pol));
                            }
                        }
                        NodeKind::Op(OpKind::Xor, ch) => {
                            stack.push(Frame::Exit(g, pol));
                            for c in ch {
                                stack.push(Frame::Enter(c, true));
                                stack.push(Frame::Enter(c, false));
                            }
                        }
                        NodeKind::Op(OpKind::Ite, ch) => {
                            stack.push(Frame::Exit(g, pol));
                            stack.push(Frame::Enter(ch[0], true));
                            stack.push(Frame::Enter(ch[0], false));
                            stack.push(Frame::Enter(ch[1], pol));
                            stack.push(Frame::Enter(ch[2], pol));
                        }
                    }
                }
                Frame::Exit(g, pol) => {
                    let result = match self.kind(g) {
                        NodeKind::Not(c) => memo[&(c, !pol)],
                        NodeKind::And(ch) => {
                            let parts: Vec<_> = ch.iter().map(|c| memo[&(*c, pol)]).collect();
                            if pol {
                                self.and(&parts)
                            } else {
                                self.or(&parts)
                            }
                        }
                        NodeKind::Or(ch) => {
                            let parts: Vec<_> = ch.iter().map(|c| memo[&(*c, pol)]).collect();
                            if pol {
                                self.or(&parts)
                            } else {
                                self.and(&parts)
                            }
                        }
                        NodeKind::Op(OpKind::Xor, ch) => {
                            let (ap, an) = (memo[&(ch[0], true)], memo[&(ch[0], false)]);
                            let (bp, bn) = (memo[&(ch[1], true)], memo[&(ch[1], false)]);
                            if pol {
                                self.or(&[self.and(&[ap, bn]), self.and(&[an, bp])])
                            } else {
                                self.or(&[self.and(&[ap, bp]), self.and(&[an, bn])])
                            }
                        }
                        NodeKind::Op(OpKind::Ite, ch) => {
                            let (cp, cn) = (memo[&(ch[0], true)], memo[&(ch[0], false)]);
                            let t = memo[&(ch[1], pol)];
                            let e = memo[&(ch[2], pol)];
                            self.or(&[self.and(&[cp, t]), self.and(&[cn, e])])
                        }
                        _ => unreachable!("leaves handled at Enter"),
                    };
                    memo.insert((g, pol), result);
                }
            }
        }
        memo[&(f, true)]
    }

    /// Rebuilds `f` with every `Var` in `map` replaced by its image. Folding
    /// applies during the rebuild.
    pub fn substitute(
        &self,
        f: FormulaRef,
        map: &HashMap<Var, FormulaRef>,
    ) -> FormulaRef {
        let order = self.topo_order(f);
        let mut image: HashMap<FormulaRef, FormulaRef> = HashMap::new();
        for g in order {
            let new = match self.kind(g) {
                NodeKind::ConstFalse | NodeKind::ConstTrue => g,
                NodeKind::Var(v) => map.get(&v).copied().unwrap_or(g),
                NodeKind::Not(c) => self.not(image[&c]),
                NodeKind::And(ch) => {
                    let parts: Vec<_> = ch.iter().map(|c| image[c]).collect();
                    self.and(&parts)
                }
                NodeKind::Or(ch) => {
                    let parts: Vec<_> = ch.iter().map(|c| image[c]).collect();
                    self.or(&parts)
                }
                NodeKind::Op(k, ch) => {
                    let parts: Vec<_> = ch.iter().map(|c| image[c]).collect();
                    self.op(k, &parts).expect("arity preserved")
                }
            };
            image.insert(g, new);
        }
        image[&f]
    }

    /// Rewrites an AND/NOT (or mixed) DAG, replacing recognized two-level
    /// patterns with Xor and Ite operator nodes. Best effort: unmatched
    /// structure is copied unchanged. The result is equivalent to `f`.
    pub fn detect_ops(&self, f: FormulaRef) -> FormulaRef {
        let order = self.topo_order(f);
        let mut image: HashMap<FormulaRef, FormulaRef> = HashMap::new();
        for g in order {
            let new = match self.kind(g) {
                NodeKind::ConstFalse | NodeKind::ConstTrue | NodeKind::Var(_) => g,
                NodeKind::Not(c) => {
                    let c2 = image[&c];
                    // Not(And(Not p, Not q)) encodes Or(p, q)
                    let mut rewritten = None;
                    if let NodeKind::And(ch) = self.kind(c2) {
                        if ch.len() == 2 {
                            if let (NodeKind::Not(p), NodeKind::Not(q)) =
                                (self.kind(ch[0]), self.kind(ch[1]))
                            {
                                rewritten = self.match_or_of_ands(p, q);
                            }
                        }
                    }
                    rewritten.unwrap_or_else(|| self.not(c2))
                }
                NodeKind::And(ch) => {
                    let parts: Vec<_> = ch.iter().map(|c| image[c]).collect();
                    self.and(&parts)
                }
                NodeKind::Or(ch) => {
                    let parts: Vec<_> = ch.iter().map(|c| image[c]).collect();
                    if parts.len() == 2 {
                        self.match_or_of_ands(parts[0], parts[1])
                            .unwrap_or_else(|| self.or(&parts))
                    } else {
                        self.or(&parts)
                    }
                }
                NodeKind::Op(k, ch) => {
                    let parts: Vec<_> = ch.iter().map(|c| image[c]).collect();
                    self.op(k, &parts).expect("arity preserved")
                }
            };
            image.insert(g, new);
        }
        image[&f]
    }

    /// Matches `p ∨ q` where both sides are binary ANDs against the XOR and
    /// ITE shapes. XOR is tried first since every XOR also fits the ITE shape.
    fn match_or_of_ands(&self, p: FormulaRef, q: FormulaRef) -> Option<FormulaRef> {
        let (p1, p2) = match self.kind(p) {
            NodeKind::And(ch) if ch.len() == 2 => (ch[0], ch[1]),
            _ => return None,
        };
        let (q1, q2) = match self.kind(q) {
            NodeKind::And(ch) if ch.len() == 2 => (ch[0], ch[1]),
            _ => return None,
        };
        // (x ∧ ¬y) ∨ (¬x ∧ y) = Xor(x, y)
        for (x, ny) in [(p1, p2), (p2, p1)] {
            for (nx, y) in [(q1, q2), (q2, q1)] {
                if self.is_neg_of(x, nx) && self.is_neg_of(ny, y) {
                    return Some(self.xor(x, y));
                }
            }
        }
        // (a ∧ b) ∨ (¬a ∧ c) = Ite(a, b, c)
        for (a, b) in [(p1, p2), (p2, p1)] {
            for (na, c) in [(q1, q2), (q2, q1)] {
                if self.is_neg_of(a, na) {
                    return Some(self.ite(a, b, c));
                }
            }
        }
        None
    }
}

fn compute_support(store: &Store, kind: &NodeKind) -> Box<[Var]> {
    match kind {
        NodeKind::ConstFalse | NodeKind::ConstTrue => Box::new([]),
        NodeKind::Var(v) => Box::new([*v]),
        NodeKind::Not(c) => store.support(*c).into(),
        NodeKind::And(ch) | NodeKind::Or(ch) | NodeKind::Op(_, ch) => {
            let mut acc: Vec<Var> = Vec::new();
            for c in ch {
                acc.extend_from_slice(store.support(*c));
            }
            acc.sort_unstable();
            acc.dedup();
            acc.into_boxed_slice()
        }
    }
}

/// Input/output split of the specification variables. `outputs` is kept in
/// synthesis order: position 0 holds the variable treated as y_1.
#[derive(Debug, Clone)]
pub struct VarTable {
    pub inputs: Vec<Var>,
    pub outputs: Vec<Var>,
}

impl VarTable {
    pub fn new(inputs: Vec<Var>, outputs: Vec<Var>) -> Self {
        VarTable { inputs, outputs }
    }

    pub fn num_outputs(&self) -> usize {
        self.outputs.len()
    }

    /// 0-based synthesis position of an output variable.
    pub fn output_pos(&self, v: Var) -> Option<usize> {
        self.outputs.iter().position(|&o| o == v)
    }

    pub fn is_input(&self, v: Var) -> bool {
        self.inputs.contains(&v)
    }

    pub fn is_output(&self, v: Var) -> bool {
        self.outputs.contains(&v)
    }
}

/// Reorders `vars.outputs` so that variables occurring in fewer DAG nodes of
/// `root`'s cone come first. A node counts once per variable in its transitive
/// fan-in (a variable's own leaf included); ties keep the original order.
pub fn order_outputs(mgr: &Manager, root: FormulaRef, vars: &VarTable) -> VarTable {
    let n = vars.outputs.len();
    let pos: HashMap<Var, usize> =
        vars.outputs.iter().enumerate().map(|(i, &v)| (v, i)).collect();
    let order = mgr.topo_order(root);
    let words = n.div_ceil(64);
    let mut masks: HashMap<FormulaRef, Vec<u64>> = HashMap::new();
    let mut counts = vec![0usize; n];
    for &g in &order {
        let mut mask = vec![0u64; words];
        match mgr.kind(g) {
            NodeKind::Var(v) => {
                if let Some(&i) = pos.get(&v) {
                    mask[i / 64] |= 1 << (i % 64);
                }
            }
            NodeKind::Not(c) => {
                for (w, m) in mask.iter_mut().zip(&masks[&c]) {
                    *w |= m;
                }
            }
            NodeKind::And(ch) | NodeKind::Or(ch) | NodeKind::Op(_, ch) => {
                for c in ch {
                    for (w, m) in mask.iter_mut().zip(&masks[&c]) {
                        *w |= m;
                    }
                }
            }
            _ => {}
        }
        for (i, count) in counts.iter_mut().enumerate() {
            if mask[i / 64] >> (i % 64) & 1 == 1 {
                *count += 1;
            }
        }
        masks.insert(g, mask);
    }
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by_key(|&i| (counts[i], i));
    VarTable {
        inputs: vars.inputs.clone(),
        outputs: idx.into_iter().map(|i| vars.outputs[i]).collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn setup() -> (Manager, FormulaRef, FormulaRef, FormulaRef) {
        let m = Manager::new();
        let a = m.var_ref(m.var("a"));
        let b = m.var_ref(m.var("b"));
        let c = m.var_ref(m.var("c"));
        (m, a, b, c)
    }

    #[test]
    fn consing_shares_identical_nodes() {
        let (m, a, b, _) = setup();
        let f = m.and(&[a, b]);
        let g = m.and(&[a, b]);
        assert_eq!(f, g);
        // order matters for identity
        let h = m.and(&[b, a]);
        assert_ne!(f, h);
    }

    #[test]
    fn folding_rules() {
        let (m, a, b, _) = setup();
        assert_eq!(m.and(&[a, m.false_ref()]), m.false_ref());
        assert_eq!(m.and(&[a, m.true_ref()]), a);
        assert_eq!(m.or(&[a, m.true_ref()]), m.true_ref());
        assert_eq!(m.not(m.not(a)), a);
        assert_eq!(m.xor(a, a), m.false_ref());
        assert_eq!(m.xor(a, m.not(a)), m.true_ref());
        assert_eq!(m.and(&[a, b, a]), m.and(&[a, b]));
        assert_eq!(m.and(&[a, m.not(a)]), m.false_ref());
        assert_eq!(m.or(&[a, m.not(a)]), m.true_ref());
        assert_eq!(m.ite(m.true_ref(), a, b), a);
        assert_eq!(m.ite(a, b, b), b);
        assert_eq!(m.ite(a, m.true_ref(), m.false_ref()), a);
        assert_eq!(m.ite(m.not(a), b, m.false_ref()), m.ite(a, m.false_ref(), b));
    }

    #[test]
    fn stored_gates_have_no_constant_children() {
        let (m, a, b, _) = setup();
        let f = m.and(&[m.or(&[a, m.false_ref()]), b, m.true_ref()]);
        for g in m.topo_order(f) {
            if let NodeKind::And(ch) | NodeKind::Or(ch) = m.kind(g) {
                assert!(ch.len() >= 2);
                for c in ch {
                    assert!(!matches!(m.kind(c), NodeKind::ConstFalse | NodeKind::ConstTrue));
                }
            }
        }
    }

    #[test]
    fn eval_basics() {
        let (m, a, b, c) = setup();
        let (va, vb, vc) = (m.var("a"), m.var("b"), m.var("c"));
        let f = m.or(&[m.and(&[a, b]), m.not(c)]);
        let mut assign = HashMap::from([(va, true), (vb, false), (vc, false)]);
        assert!(m.eval(f, &assign).unwrap());
        assign.insert(vc, true);
        assert!(!m.eval(f, &assign).unwrap());
        assign.insert(vb, true);
        assert!(m.eval(f, &assign).unwrap());
        let g = m.xor(a, b);
        assert!(!m.eval(g, &assign).unwrap());
        assert!(matches!(
            m.eval(m.var_ref(m.var("fresh")), &assign),
            Err(FormulaError::UnassignedVar(_))
        ));
    }

    #[test]
    fn support_tracks_folding() {
        let (m, a, b, _) = setup();
        let (va, vb) = (m.var("a"), m.var("b"));
        assert_eq!(m.support(m.and(&[a, b])), vec![va, vb]);
        // b ⊕ b folds to False: neutral under ∨, absorbing under ∧
        assert_eq!(m.support(m.or(&[a, m.xor(b, b)])), vec![va]);
        assert_eq!(m.support(m.and(&[a, m.xor(b, b)])), vec![]);
        assert_eq!(m.support(m.true_ref()), vec![]);
    }

    #[test]
    fn nnf_pushes_negations_to_vars() {
        let (m, a, b, c) = setup();
        let f = m.not(m.and(&[a, m.or(&[b, m.not(c)])]));
        let nnf = m.to_nnf(f);
        for g in m.topo_order(nnf) {
            match m.kind(g) {
                NodeKind::Not(inner) => assert!(matches!(m.kind(inner), NodeKind::Var(_))),
                NodeKind::Op(..) => panic!("general op in NNF"),
                _ => {}
            }
        }
        // de morgan by hand: ¬a ∨ (¬b ∧ c)
        let expected = m.or(&[m.not(a), m.and(&[m.not(b), c])]);
        assert_eq!(nnf, expected);
    }

    #[test]
    fn nnf_preserves_semantics_exhaustively() {
        let (m, a, b, c) = setup();
        let (va, vb, vc) = (m.var("a"), m.var("b"), m.var("c"));
        let fs = [
            m.not(m.xor(a, m.not(b))),
            m.ite(m.not(a), m.xor(b, c), m.not(m.and(&[a, c]))),
            m.not(m.or(&[m.xor(a, b), m.ite(b, c, a)])),
        ];
        for f in fs {
            let nnf = m.to_nnf(f);
            for bits in 0..8u32 {
                let assign = HashMap::from([
                    (va, bits & 1 == 1),
                    (vb, bits >> 1 & 1 == 1),
                    (vc, bits >> 2 & 1 == 1),
                ]);
                assert_eq!(m.eval(f, &assign).unwrap(), m.eval(nnf, &assign).unwrap());
            }
        }
    }

    #[test]
    fn substitute_rebuilds_with_folding() {
        let (m, a, b, c) = setup();
        let vb = m.var("b");
        let f = m.and(&[a, m.or(&[b, c])]);
        let g = m.substitute(f, &HashMap::from([(vb, m.true_ref())]));
        assert_eq!(g, a);
        let h = m.substitute(f, &HashMap::from([(vb, m.not(c))]));
        assert_eq!(h, a); // b ∨ c with b := ¬c is a tautology
    }

    #[test]
    fn detect_ite_from_aig_shape() {
        let (m, a, b, c) = setup();
        // ¬(¬(a∧b) ∧ ¬(¬a∧c)) is the AND/NOT encoding of (a∧b)∨(¬a∧c)
        let f = m.not(m.and(&[
            m.not(m.and(&[a, b])),
            m.not(m.and(&[m.not(a), c])),
        ]));
        let g = m.detect_ops(f);
        assert_eq!(g, m.ite(a, b, c));
    }

    #[test]
    fn detect_xor_and_preserve_semantics() {
        let (m, a, b, c) = setup();
        let (va, vb, vc) = (m.var("a"), m.var("b"), m.var("c"));
        let xor_shape = m.not(m.and(&[
            m.not(m.and(&[a, m.not(b)])),
            m.not(m.and(&[m.not(a), b])),
        ]));
        assert_eq!(m.detect_ops(xor_shape), m.xor(a, b));

        // nested: one ITE whose branch is an XOR shape, plus unmatched gates
        let inner = m.not(m.and(&[
            m.not(m.and(&[b, m.not(c)])),
            m.not(m.and(&[m.not(b), c])),
        ]));
        let f = m.and(&[m.not(m.and(&[a, m.not(inner)])), m.not(m.and(&[m.not(a), c]))]);
        let g = m.detect_ops(f);
        for bits in 0..8u32 {
            let assign = HashMap::from([
                (va, bits & 1 == 1),
                (vb, bits >> 1 & 1 == 1),
                (vc, bits >> 2 & 1 == 1),
            ]);
            assert_eq!(m.eval(f, &assign).unwrap(), m.eval(g, &assign).unwrap());
        }
    }

    #[test]
    fn order_outputs_unused_var_first() {
        let m = Manager::new();
        let y1 = m.var("y1");
        let y2 = m.var("y2");
        let root = m.var_ref(y1);
        let vars = VarTable::new(vec![], vec![y1, y2]);
        let ordered = order_outputs(&m, root, &vars);
        assert_eq!(ordered.outputs, vec![y2, y1]);
    }

    #[test]
    fn order_outputs_counts_and_ties() {
        let m = Manager::new();
        let x1 = m.var("x1");
        let x2 = m.var("x2");
        let y1 = m.var("y1");
        let y2 = m.var("y2");
        let (rx1, rx2, ry1, ry2) =
            (m.var_ref(x1), m.var_ref(x2), m.var_ref(y1), m.var_ref(y2));
        // (x1 ∧ y1) ∨ (y2 ∧ (y1 ∨ x2)): y1 in 5 nodes, y2 in 3
        let root = m.or(&[m.and(&[rx1, ry1]), m.and(&[ry2, m.or(&[ry1, rx2])])]);
        let vars = VarTable::new(vec![x1, x2], vec![y1, y2]);
        let ordered = order_outputs(&m, root, &vars);
        assert_eq!(ordered.outputs, vec![y2, y1]);

        // symmetric spec: equal counts keep declaration order
        let root2 = m.and(&[ry1, ry2]);
        let ordered2 = order_outputs(&m, root2, &vars);
        assert_eq!(ordered2.outputs, vec![y1, y2]);
    }

    #[test]
    fn order_outputs_matches_independent_traversal() {
        let m = Manager::new();
        let names = ["y1", "y2", "y3"];
        let ys: Vec<Var> = names.iter().map(|s| m.var(s)).collect();
        let x = m.var("x");
        let (r1, r2, r3, rx) =
            (m.var_ref(ys[0]), m.var_ref(ys[1]), m.var_ref(ys[2]), m.var_ref(x));
        let shared = m.or(&[r1, rx]);
        let root = m.and(&[shared, m.xor(shared, r2), m.or(&[r3, m.not(shared)])]);
        let vars = VarTable::new(vec![x], vec![ys[0], ys[1], ys[2]]);
        let ordered = order_outputs(&m, root, &vars);

        // count by brute force: a node counts when its support has the var
        let mut counts: Vec<(usize, usize)> = Vec::new();
        for (i, &y) in ys.iter().enumerate() {
            let c = m
                .topo_order(root)
                .iter()
                .filter(|&&g| m.support(g).contains(&y))
                .count();
            counts.push((c, i));
        }
        counts.sort();
        let expected: Vec<Var> = counts.iter().map(|&(_, i)| ys[i]).collect();
        assert_eq!(ordered.outputs, expected);
    }
}
