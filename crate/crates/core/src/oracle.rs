//! Brute-force reference implementations over explicit truth tables.
//!
//! Everything here exists to cross-check the engine: the tables are built by
//! structural recursion independent of `Manager::eval`, the quantifier
//! operations are plain cofactor combinations, and nothing below touches the
//! composition, CEGAR, or SAT code paths. Word-parallel bitsets keep the
//! exhaustive checks fast enough for specs with up to ~20 variables.

use std::collections::HashMap;

use crate::formula::{FormulaRef, Manager, NodeKind, OpKind, Var, VarTable};

/// Truth table over an ordered variable list. Assignment `k` sets variable
/// at position `j` to bit `j` of `k`; entry `k` lives at bit `k % 64` of
/// word `k / 64`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TruthTable {
    nvars: usize,
    words: Vec<u64>,
}

const LOW_PATTERNS: [u64; 6] = [
    0xAAAA_AAAA_AAAA_AAAA,
    0xCCCC_CCCC_CCCC_CCCC,
    0xF0F0_F0F0_F0F0_F0F0,
    0xFF00_FF00_FF00_FF00,
    0xFFFF_0000_FFFF_0000,
    0xFFFF_FFFF_0000_0000,
];

impl TruthTable {
    fn word_count(nvars: usize) -> usize {
        if nvars >= 6 {
            1 << (nvars - 6)
        } else {
            1
        }
    }

    fn tail_mask(nvars: usize) -> u64 {
        if nvars >= 6 {
            !0
        } else {
            (1u64 << (1 << nvars)) - 1
        }
    }

    pub fn constant(nvars: usize, value: bool) -> Self {
        let fill = if value { Self::tail_mask(nvars) } else { 0 };
        TruthTable { nvars, words: vec![fill; Self::word_count(nvars)] }
    }

    /// Table of the projection onto variable position `j`.
    pub fn var(nvars: usize, j: usize) -> Self {
        assert!(j < nvars);
        let mut words = vec![0u64; Self::word_count(nvars)];
        if j < 6 {
            for w in words.iter_mut() {
                *w = LOW_PATTERNS[j];
            }
        } else {
            for (idx, w) in words.iter_mut().enumerate() {
                if idx >> (j - 6) & 1 == 1 {
                    *w = !0;
                }
            }
        }
        words[0] &= Self::tail_mask(nvars);
        TruthTable { nvars, words }
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn not(&self) -> Self {
        let mut words: Vec<u64> = self.words.iter().map(|w| !w).collect();
        let last = words.len() - 1;
        if self.nvars < 6 {
            words[last] &= Self::tail_mask(self.nvars);
        }
        TruthTable { nvars: self.nvars, words }
    }

    fn zip(&self, other: &Self, f: impl Fn(u64, u64) -> u64) -> Self {
        assert_eq!(self.nvars, other.nvars);
        let words = self.words.iter().zip(&other.words).map(|(a, b)| f(*a, *b)).collect();
        TruthTable { nvars: self.nvars, words }
    }

    pub fn and(&self, other: &Self) -> Self {
        self.zip(other, |a, b| a & b)
    }

    pub fn or(&self, other: &Self) -> Self {
        self.zip(other, |a, b| a | b)
    }

    pub fn xor(&self, other: &Self) -> Self {
        self.zip(other, |a, b| a ^ b)
    }

    pub fn ite(&self, t: &Self, e: &Self) -> Self {
        self.and(t).or(&self.not().and(e))
    }

    /// Replaces variable position `j` by the constant `val`.
    pub fn cofactor(&self, j: usize, val: bool) -> Self {
        assert!(j < self.nvars);
        let mut words = vec![0u64; self.words.len()];
        if j < 6 {
            let sel = if val { LOW_PATTERNS[j] } else { !LOW_PATTERNS[j] };
            let shift = 1usize << j;
            for (w, src) in words.iter_mut().zip(&self.words) {
                let x = src & sel;
                *w = if val { x | (x >> shift) } else { x | (x << shift) };
            }
        } else {
            let bit = 1usize << (j - 6);
            for (idx, w) in words.iter_mut().enumerate() {
                let src = if val { idx | bit } else { idx & !bit };
                *w = self.words[src];
            }
        }
        if self.nvars < 6 {
            words[0] &= Self::tail_mask(self.nvars);
        }
        TruthTable { nvars: self.nvars, words }
    }

    pub fn exists(&self, j: usize) -> Self {
        self.cofactor(j, false).or(&self.cofactor(j, true))
    }

    pub fn forall(&self, j: usize) -> Self {
        self.cofactor(j, false).and(&self.cofactor(j, true))
    }

    pub fn get(&self, k: usize) -> bool {
        self.words[k / 64] >> (k % 64) & 1 == 1
    }

    pub fn count_ones(&self) -> u64 {
        self.words.iter().map(|w| w.count_ones() as u64).sum()
    }

    pub fn is_false(&self) -> bool {
        self.words.iter().all(|&w| w == 0)
    }

    pub fn is_true(&self) -> bool {
        self.not().is_false()
    }

    /// Pointwise implication self → other everywhere.
    pub fn implies(&self, other: &Self) -> bool {
        self.words.iter().zip(&other.words).all(|(a, b)| a & !b == 0)
    }
}

/// Reference oracle for one spec: exhaustive tables for every node, plus the
/// delta/gamma definitions computed directly by quantification. Variable
/// positions are inputs first, then outputs in synthesis order.
pub struct TableOracle<'m> {
    mgr: &'m Manager,
    vars: Vec<Var>,
    positions: HashMap<Var, usize>,
    num_inputs: usize,
    tables: HashMap<FormulaRef, TruthTable>,
}

impl<'m> TableOracle<'m> {
    pub fn new(mgr: &'m Manager, vars: &VarTable) -> Self {
        let list: Vec<Var> = vars.inputs.iter().chain(&vars.outputs).copied().collect();
        assert!(list.len() <= 24, "oracle is exhaustive; too many variables");
        let positions = list.iter().enumerate().map(|(i, &v)| (v, i)).collect();
        TableOracle {
            mgr,
            vars: list,
            positions,
            num_inputs: vars.inputs.len(),
            tables: HashMap::new(),
        }
    }

    pub fn var_list(&self) -> &[Var] {
        &self.vars
    }

    /// Table of any formula whose support is within the oracle's variables.
    pub fn table(&mut self, f: FormulaRef) -> TruthTable {
        if let Some(t) = self.tables.get(&f) {
            return t.clone();
        }
        let nv = self.vars.len();
        for g in self.mgr.topo_order(f) {
            if self.tables.contains_key(&g) {
                continue;
            }
            let t = match self.mgr.kind(g) {
                NodeKind::ConstFalse => TruthTable::constant(nv, false),
                NodeKind::ConstTrue => TruthTable::constant(nv, true),
                NodeKind::Var(v) => TruthTable::var(nv, self.positions[&v]),
                NodeKind::Not(c) => self.tables[&c].not(),
                NodeKind::And(ch) => ch[1..]
                    .iter()
                    .fold(self.tables[&ch[0]].clone(), |acc, c| acc.and(&self.tables[c])),
                NodeKind::Or(ch) => ch[1..]
                    .iter()
                    .fold(self.tables[&ch[0]].clone(), |acc, c| acc.or(&self.tables[c])),
                NodeKind::Op(OpKind::Xor, ch) => self.tables[&ch[0]].xor(&self.tables[&ch[1]]),
                NodeKind::Op(OpKind::Ite, ch) => {
                    self.tables[&ch[0]].ite(&self.tables[&ch[1]], &self.tables[&ch[2]])
                }
            };
            self.tables.insert(g, t);
        }
        self.tables[&f].clone()
    }

    fn ypos(&self, i: usize) -> usize {
        self.num_inputs + i
    }

    /// Definition-level Δ_{i}: ¬∃y_1..y_{i-1} φ, then y_i := 0. `i` is the
    /// 0-based synthesis position.
    pub fn delta(&mut self, phi: FormulaRef, i: usize) -> TruthTable {
        let mut t = self.table(phi).cofactor(self.ypos(i), false);
        for j in 0..i {
            t = t.exists(self.ypos(j));
        }
        t.not()
    }

    /// Definition-level Γ_{i}: like `delta` with y_i := 1.
    pub fn gamma(&mut self, phi: FormulaRef, i: usize) -> TruthTable {
        let mut t = self.table(phi).cofactor(self.ypos(i), true);
        for j in 0..i {
            t = t.exists(self.ypos(j));
        }
        t.not()
    }

    /// ∃Y φ as a table (over the full variable list, Y positions unused).
    pub fn exists_outputs(&mut self, phi: FormulaRef) -> TruthTable {
        let n = self.vars.len() - self.num_inputs;
        let mut t = self.table(phi);
        for i in 0..n {
            t = t.exists(self.ypos(i));
        }
        t
    }

    /// Checks ∀X: (∃Y φ) → φ(X, F(X)). The functions must be input-only.
    pub fn realizes(&mut self, phi: FormulaRef, fs: &[FormulaRef]) -> bool {
        let n = self.vars.len() - self.num_inputs;
        assert_eq!(fs.len(), n);
        for f in fs {
            for v in self.mgr.support(*f) {
                assert!(
                    self.positions[&v] < self.num_inputs,
                    "skolem function mentions an output"
                );
            }
        }
        let have = self.exists_outputs(phi);
        let f_tables: Vec<TruthTable> = fs.iter().map(|f| self.table(*f)).collect();
        let mut result = self.table(phi);
        for (i, ft) in f_tables.iter().enumerate() {
            // φ[y_i := f_i]: splice the function table through the cofactors
            let pos = self.ypos(i);
            let t1 = result.cofactor(pos, true).and(ft);
            let t0 = result.cofactor(pos, false).and(&ft.not());
            result = t1.or(&t0);
        }
        have.implies(&result)
    }

    /// Evaluates a formula at an assignment given as a bit index over the
    /// oracle's variable order.
    pub fn eval_at(&mut self, f: FormulaRef, k: usize) -> bool {
        self.table(f).get(k)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashMap as Map;

    #[test]
    fn tables_match_manager_eval() {
        let m = Manager::new();
        let names = ["p", "q", "r", "s", "t", "u", "v"];
        let vs: Vec<Var> = names.iter().map(|n| m.var(n)).collect();
        let rf: Vec<FormulaRef> = vs.iter().map(|&v| m.var_ref(v)).collect();
        let f = m.or(&[
            m.and(&[rf[0], m.not(rf[1]), rf[6]]),
            m.xor(rf[2], m.ite(rf[3], rf[4], rf[5])),
        ]);
        let vars = VarTable::new(vs.clone(), vec![]);
        let mut oracle = TableOracle::new(&m, &vars);
        let table = oracle.table(f);
        for k in 0..(1usize << 7) {
            let assign: Map<Var, bool> =
                vs.iter().enumerate().map(|(j, &v)| (v, k >> j & 1 == 1)).collect();
            assert_eq!(table.get(k), m.eval(f, &assign).unwrap(), "assignment {k}");
        }
    }

    #[test]
    fn word_boundary_ops() {
        // 8 variables: tables span 4 words, exercising the high-var paths
        let nv = 8;
        let a = TruthTable::var(nv, 0);
        let h = TruthTable::var(nv, 7);
        let f = a.xor(&h);
        for k in 0..(1usize << nv) {
            assert_eq!(f.get(k), (k & 1 == 1) ^ (k >> 7 & 1 == 1));
        }
        let c0 = f.cofactor(7, false);
        let c1 = f.cofactor(7, true);
        for k in 0..(1usize << nv) {
            assert_eq!(c0.get(k), k & 1 == 1);
            assert_eq!(c1.get(k), k & 1 == 0);
        }
        assert!(f.exists(0).is_true());
        assert!(f.forall(0).is_false());
    }

    #[test]
    fn delta_gamma_definitions() {
        // φ = (y1 ∨ x1) with vars [x1, y1]: Δ_1 = ¬x1, Γ_1 = False
        let m = Manager::new();
        let x1 = m.var("x1");
        let y1 = m.var("y1");
        let phi = m.or(&[m.var_ref(y1), m.var_ref(x1)]);
        let vars = VarTable::new(vec![x1], vec![y1]);
        let mut oracle = TableOracle::new(&m, &vars);
        let d = oracle.delta(phi, 0);
        let g = oracle.gamma(phi, 0);
        let not_x1 = oracle.table(m.not(m.var_ref(x1)));
        assert_eq!(d, not_x1);
        assert!(g.is_false());
    }

    #[test]
    fn delta_quantifies_earlier_outputs() {
        // φ = y1 ⊕ y2: Δ_2 = ¬∃y1 (y1 ⊕ 0) = False, Γ_2 likewise
        let m = Manager::new();
        let y1 = m.var("y1");
        let y2 = m.var("y2");
        let phi = m.xor(m.var_ref(y1), m.var_ref(y2));
        let vars = VarTable::new(vec![], vec![y1, y2]);
        let mut oracle = TableOracle::new(&m, &vars);
        assert!(oracle.delta(phi, 1).is_false());
        assert!(oracle.gamma(phi, 1).is_false());
        // but Δ_1 = ¬(0 ⊕ y2) = ¬y2 over the remaining variable
        let d1 = oracle.delta(phi, 0);
        let y2_table = oracle.table(m.var_ref(y2));
        assert_eq!(d1, y2_table.not());
    }

    #[test]
    fn realizes_checks_the_band() {
        // φ = (y1 ↔ x1): f = x1 works, f = ¬x1 does not
        let m = Manager::new();
        let x1 = m.var("x1");
        let y1 = m.var("y1");
        let phi = m.not(m.xor(m.var_ref(y1), m.var_ref(x1)));
        let vars = VarTable::new(vec![x1], vec![y1]);
        let mut oracle = TableOracle::new(&m, &vars);
        assert!(oracle.realizes(phi, &[m.var_ref(x1)]));
        assert!(!oracle.realizes(phi, &[m.not(m.var_ref(x1))]));
        // unsatisfiable spec: anything realizes it
        let falsum = m.and(&[m.var_ref(x1), m.not(m.var_ref(x1))]);
        assert!(oracle.realizes(falsum, &[m.true_ref()]));
    }
}
