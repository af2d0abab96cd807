//! ASCII AIGER (`aag`) reading and writing, plus the sidecar manifest that
//! declares which circuit inputs play the role of synthesis outputs.
//!
//! A specification file carries exactly one AIG output: the relation φ(X,Y).
//! Both X and Y appear as circuit inputs; the manifest splits them.

use std::collections::{HashMap, HashSet};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::formula::{FormulaRef, Manager, NodeKind, OpKind, Var, VarTable};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OutputManifest {
    /// Names of the circuit inputs that are synthesis outputs.
    pub outputs: Vec<String>,
    /// Optional fixed synthesis order, a permutation of `outputs`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub order: Option<Vec<String>>,
}

#[derive(Debug, Error)]
pub enum AigerError {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("manifest: {0}")]
    Manifest(String),
    #[error("formula mentions {0}, which is not among the declared inputs")]
    UnknownSupport(String),
}

fn perr(line: usize, msg: impl Into<String>) -> AigerError {
    AigerError::Parse {
        line,
        msg: msg.into(),
    }
}

fn grab<'a>(all: &[&'a str], cursor: &mut usize) -> Result<(usize, &'a str), AigerError> {
    if *cursor >= all.len() {
        return Err(perr(all.len() + 1, "unexpected end of file"));
    }
    *cursor += 1;
    Ok((*cursor, all[*cursor - 1]))
}

fn one_u64(s: &str, line: usize) -> Result<u64, AigerError> {
    let mut it = s.split_whitespace();
    let tok = it.next().ok_or_else(|| perr(line, "expected a literal"))?;
    if it.next().is_some() {
        return Err(perr(line, "expected a single literal"));
    }
    tok.parse()
        .map_err(|_| perr(line, format!("bad literal {tok}")))
}

struct Gate {
    rhs: [u64; 2],
    line: usize,
}

/// Parses an `aag` document with one output and splits its inputs into X and
/// Y per the manifest. Gate lines may appear in any order; cycles and
/// undefined references are rejected with their line numbers.
pub fn parse_aiger(
    mgr: &Manager,
    text: &str,
    manifest: &OutputManifest,
) -> Result<(FormulaRef, VarTable), AigerError> {
    let all: Vec<&str> = text.lines().collect();
    let mut cursor = 0usize;

    let (_, header) = grab(&all, &mut cursor).map_err(|_| perr(1, "empty document"))?;
    let toks: Vec<&str> = header.split_whitespace().collect();
    if toks.len() != 6 || toks[0] != "aag" {
        return Err(perr(1, "header must read `aag M I L O A`"));
    }
    let mut counts = [0u64; 5];
    for (k, t) in toks[1..].iter().enumerate() {
        counts[k] = t.parse().map_err(|_| perr(1, format!("bad count {t}")))?;
    }
    let [max_var, ni, nl, no, na] = counts;
    if nl != 0 {
        return Err(perr(1, "latches are not supported"));
    }
    if no != 1 {
        return Err(perr(1, format!("expected exactly one output, found {no}")));
    }

    let mut input_vars: Vec<u64> = Vec::with_capacity(ni as usize);
    let mut input_set: HashSet<u64> = HashSet::new();
    for _ in 0..ni {
        let (n, s) = grab(&all, &mut cursor)?;
        let lit = one_u64(s, n)?;
        if lit < 2 || lit % 2 == 1 {
            return Err(perr(n, format!("input literal {lit} must be even and nonzero")));
        }
        let v = lit / 2;
        if v > max_var {
            return Err(perr(n, format!("literal {lit} exceeds the declared maximum")));
        }
        if !input_set.insert(v) {
            return Err(perr(n, format!("duplicate input literal {lit}")));
        }
        input_vars.push(v);
    }

    let (out_ln, s) = grab(&all, &mut cursor)?;
    let out_lit = one_u64(s, out_ln)?;
    if out_lit / 2 > max_var {
        return Err(perr(out_ln, format!("literal {out_lit} exceeds the declared maximum")));
    }

    let mut gates: HashMap<u64, Gate> = HashMap::new();
    for _ in 0..na {
        let (n, s) = grab(&all, &mut cursor)?;
        let parts: Vec<&str> = s.split_whitespace().collect();
        if parts.len() != 3 {
            return Err(perr(n, "and line must read `lhs rhs0 rhs1`"));
        }
        let mut lits = [0u64; 3];
        for (k, t) in parts.iter().enumerate() {
            lits[k] = t.parse().map_err(|_| perr(n, format!("bad literal {t}")))?;
        }
        let [lhs, r0, r1] = lits;
        if lhs < 2 || lhs % 2 == 1 {
            return Err(perr(n, format!("gate literal {lhs} must be even and nonzero")));
        }
        let v = lhs / 2;
        if v > max_var || r0 / 2 > max_var || r1 / 2 > max_var {
            return Err(perr(n, "literal exceeds the declared maximum"));
        }
        if input_set.contains(&v) {
            return Err(perr(n, format!("gate {lhs} redefines an input")));
        }
        if gates
            .insert(
                v,
                Gate {
                    rhs: [r0, r1],
                    line: n,
                },
            )
            .is_some()
        {
            return Err(perr(n, format!("duplicate definition of literal {lhs}")));
        }
    }

    // Symbol table until an optional `c` line; everything after is comment.
    let mut names: Vec<Option<(String, usize)>> = vec![None; ni as usize];
    let mut output_named = false;
    while cursor < all.len() {
        let (n, s) = grab(&all, &mut cursor)?;
        if s == "c" {
            break;
        }
        if s.trim().is_empty() {
            return Err(perr(n, "unexpected blank line"));
        }
        let (tag, rest) = s.split_at(1);
        let (idx_str, name) = rest
            .split_once(' ')
            .ok_or_else(|| perr(n, "symbol line must read `<kind><index> <name>`"))?;
        if name.is_empty() {
            return Err(perr(n, "empty symbol name"));
        }
        let idx: usize = idx_str
            .parse()
            .map_err(|_| perr(n, format!("bad symbol index {idx_str}")))?;
        match tag {
            "i" => {
                if idx >= names.len() {
                    return Err(perr(n, format!("input index {idx} out of range")));
                }
                if names[idx].replace((name.to_string(), n)).is_some() {
                    return Err(perr(n, format!("duplicate symbol for input {idx}")));
                }
            }
            "o" => {
                if idx != 0 || output_named {
                    return Err(perr(n, "unexpected output symbol"));
                }
                output_named = true;
            }
            _ => return Err(perr(n, "unrecognized symbol line")),
        }
    }

    let mut resolved: Vec<String> = Vec::with_capacity(ni as usize);
    let mut by_name: HashMap<String, usize> = HashMap::new();
    for (k, slot) in names.into_iter().enumerate() {
        let (name, line) = slot.unwrap_or((format!("i{k}"), 1));
        if by_name.insert(name.clone(), k).is_some() {
            return Err(perr(line, format!("input name {name} is used twice")));
        }
        resolved.push(name);
    }

    let defined = |v: u64| input_set.contains(&v) || gates.contains_key(&v);
    for g in gates.values() {
        for r in g.rhs {
            if r >= 2 && !defined(r / 2) {
                return Err(perr(g.line, format!("literal {r} is never defined")));
            }
        }
    }
    if out_lit >= 2 && !defined(out_lit / 2) {
        return Err(perr(out_ln, format!("literal {out_lit} is never defined")));
    }

    let mut built: HashMap<u64, FormulaRef> = HashMap::new();
    for (k, &v) in input_vars.iter().enumerate() {
        built.insert(v, mgr.var_ref(mgr.var(&resolved[k])));
    }
    let root_var = out_lit / 2;
    if out_lit >= 2 && !built.contains_key(&root_var) {
        let mut gray: HashSet<u64> = HashSet::new();
        let mut stack: Vec<(u64, bool)> = vec![(root_var, false)];
        while let Some((v, expanded)) = stack.pop() {
            if built.contains_key(&v) {
                continue;
            }
            let gate = &gates[&v];
            if expanded {
                let child = |lit: u64| match lit {
                    0 => mgr.false_ref(),
                    1 => mgr.true_ref(),
                    _ => {
                        let r = built[&(lit / 2)];
                        if lit % 2 == 1 {
                            mgr.not(r)
                        } else {
                            r
                        }
                    }
                };
                let c0 = child(gate.rhs[0]);
                let c1 = child(gate.rhs[1]);
                built.insert(v, mgr.and(&[c0, c1]));
                gray.remove(&v);
            } else {
                if gray.contains(&v) {
                    continue;
                }
                gray.insert(v);
                stack.push((v, true));
                for r in gate.rhs {
                    let rv = r / 2;
                    if r >= 2 && !built.contains_key(&rv) {
                        if gray.contains(&rv) {
                            return Err(perr(
                                gates[&rv].line,
                                format!("combinational cycle through literal {}", 2 * rv),
                            ));
                        }
                        stack.push((rv, false));
                    }
                }
            }
        }
    }
    let root = match out_lit {
        0 => mgr.false_ref(),
        1 => mgr.true_ref(),
        _ => {
            let r = built[&root_var];
            if out_lit % 2 == 1 {
                mgr.not(r)
            } else {
                r
            }
        }
    };

    let mut y_names: Vec<String> = manifest.outputs.clone();
    if let Some(order) = &manifest.order {
        let want: HashSet<&str> = manifest.outputs.iter().map(|s| s.as_str()).collect();
        let got: HashSet<&str> = order.iter().map(|s| s.as_str()).collect();
        if order.len() != manifest.outputs.len() || want != got {
            return Err(AigerError::Manifest(
                "order must be a permutation of outputs".into(),
            ));
        }
        y_names = order.clone();
    }
    let mut y_vars: Vec<Var> = Vec::with_capacity(y_names.len());
    let mut y_idx: HashSet<usize> = HashSet::new();
    for name in &y_names {
        let &k = by_name
            .get(name)
            .ok_or_else(|| AigerError::Manifest(format!("{name} does not name a circuit input")))?;
        if !y_idx.insert(k) {
            return Err(AigerError::Manifest(format!("{name} is listed twice")));
        }
        y_vars.push(mgr.var(name));
    }
    let x_vars: Vec<Var> = (0..ni as usize)
        .filter(|k| !y_idx.contains(k))
        .map(|k| mgr.var(&resolved[k]))
        .collect();
    Ok((root, VarTable::new(x_vars, y_vars)))
}

struct AigBuilder {
    base: u64,
    gates: Vec<(u64, u64)>,
    cache: HashMap<(u64, u64), u64>,
}

impl AigBuilder {
    fn and2(&mut self, a: u64, b: u64) -> u64 {
        if a == 0 || b == 0 || a ^ 1 == b {
            return 0;
        }
        if a == 1 || a == b {
            return b;
        }
        if b == 1 {
            return a;
        }
        let key = (a.max(b), a.min(b));
        if let Some(&lit) = self.cache.get(&key) {
            return lit;
        }
        let lit = 2 * (self.base + self.gates.len() as u64 + 1);
        self.gates.push(key);
        self.cache.insert(key, lit);
        lit
    }

    fn or2(&mut self, a: u64, b: u64) -> u64 {
        self.and2(a ^ 1, b ^ 1) ^ 1
    }
}

/// Serializes formulas as an `aag` document over the given inputs. Or, Xor
/// and Ite nodes are expanded into and-gates; gates shared between outputs
/// are emitted once.
pub fn write_aiger(
    mgr: &Manager,
    inputs: &[Var],
    outputs: &[(String, FormulaRef)],
) -> Result<String, AigerError> {
    let mut lit_of: HashMap<FormulaRef, u64> = HashMap::new();
    lit_of.insert(mgr.false_ref(), 0);
    lit_of.insert(mgr.true_ref(), 1);
    for (k, &v) in inputs.iter().enumerate() {
        lit_of.insert(mgr.var_ref(v), 2 * (k as u64 + 1));
    }
    let mut bld = AigBuilder {
        base: inputs.len() as u64,
        gates: Vec::new(),
        cache: HashMap::new(),
    };
    for (_, f) in outputs {
        for node in mgr.topo_order(*f) {
            if lit_of.contains_key(&node) {
                continue;
            }
            let lit = match mgr.kind(node) {
                NodeKind::ConstFalse => 0,
                NodeKind::ConstTrue => 1,
                NodeKind::Var(v) => return Err(AigerError::UnknownSupport(mgr.var_name(v))),
                NodeKind::Not(c) => lit_of[&c] ^ 1,
                NodeKind::And(ch) => {
                    let mut acc = lit_of[&ch[0]];
                    for c in &ch[1..] {
                        acc = bld.and2(acc, lit_of[c]);
                    }
                    acc
                }
                NodeKind::Or(ch) => {
                    let mut acc = lit_of[&ch[0]];
                    for c in &ch[1..] {
                        acc = bld.or2(acc, lit_of[c]);
                    }
                    acc
                }
                NodeKind::Op(OpKind::Xor, ch) => {
                    let (a, b) = (lit_of[&ch[0]], lit_of[&ch[1]]);
                    let p = bld.and2(a, b ^ 1);
                    let q = bld.and2(a ^ 1, b);
                    bld.or2(p, q)
                }
                NodeKind::Op(OpKind::Ite, ch) => {
                    let (c, t, e) = (lit_of[&ch[0]], lit_of[&ch[1]], lit_of[&ch[2]]);
                    let p = bld.and2(c, t);
                    let q = bld.and2(c ^ 1, e);
                    bld.or2(p, q)
                }
            };
            lit_of.insert(node, lit);
        }
    }

    let mut doc = String::new();
    let max_var = bld.base + bld.gates.len() as u64;
    let _ = writeln!(
        doc,
        "aag {} {} 0 {} {}",
        max_var,
        inputs.len(),
        outputs.len(),
        bld.gates.len()
    );
    for k in 0..inputs.len() {
        let _ = writeln!(doc, "{}", 2 * (k + 1));
    }
    for (_, f) in outputs {
        let _ = writeln!(doc, "{}", lit_of[f]);
    }
    for (j, (r0, r1)) in bld.gates.iter().enumerate() {
        let _ = writeln!(doc, "{} {} {}", 2 * (bld.base + j as u64 + 1), r0, r1);
    }
    for (k, &v) in inputs.iter().enumerate() {
        let _ = writeln!(doc, "i{} {}", k, mgr.var_name(v));
    }
    for (k, (name, _)) in outputs.iter().enumerate() {
        let _ = writeln!(doc, "o{k} {name}");
    }
    Ok(doc)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formula::VarTable;
    use crate::oracle::TableOracle;

    fn mf(outputs: &[&str]) -> OutputManifest {
        OutputManifest {
            outputs: outputs.iter().map(|s| s.to_string()).collect(),
            order: None,
        }
    }

    #[test]
    fn identity_circuit_parses_to_a_variable() {
        let m = Manager::new();
        let (root, vt) = parse_aiger(&m, "aag 1 1 0 1 0\n2\n2\n", &mf(&["i0"])).unwrap();
        assert_eq!(root, m.var_ref(m.var("i0")));
        assert!(vt.inputs.is_empty());
        assert_eq!(vt.outputs, vec![m.var("i0")]);
    }

    #[test]
    fn single_gate_circuit_parses_to_an_and() {
        let m = Manager::new();
        let text = "aag 3 2 0 1 1\n2\n4\n6\n6 2 4\ni0 x1\ni1 y1\n";
        let (root, vt) = parse_aiger(&m, text, &mf(&["y1"])).unwrap();
        let x1 = m.var_ref(m.var("x1"));
        let y1 = m.var_ref(m.var("y1"));
        assert_eq!(root, m.and(&[x1, y1]));
        assert_eq!(vt.inputs, vec![m.var("x1")]);
        assert_eq!(vt.outputs, vec![m.var("y1")]);
    }

    #[test]
    fn negated_outputs_and_constants_parse() {
        let m = Manager::new();
        let text = "aag 3 2 0 1 1\n2\n4\n7\n6 2 4\n";
        let (root, _) = parse_aiger(&m, text, &mf(&["i1"])).unwrap();
        let i0 = m.var_ref(m.var("i0"));
        let i1 = m.var_ref(m.var("i1"));
        assert_eq!(root, m.not(m.and(&[i0, i1])));

        let (t, vt) = parse_aiger(&m, "aag 0 0 0 1 0\n1\n", &mf(&[])).unwrap();
        assert_eq!(t, m.true_ref());
        assert!(vt.inputs.is_empty() && vt.outputs.is_empty());
    }

    #[test]
    fn gates_may_arrive_in_any_order() {
        let m = Manager::new();
        // 8 = and(6, 2) is defined before 6 = and(2, 4).
        let text = "aag 4 2 0 1 2\n2\n4\n8\n8 6 2\n6 2 4\n";
        let (root, _) = parse_aiger(&m, text, &mf(&["i0"])).unwrap();
        let i0 = m.var_ref(m.var("i0"));
        let i1 = m.var_ref(m.var("i1"));
        assert_eq!(root, m.and(&[m.and(&[i0, i1]), i0]));
    }

    #[test]
    fn roundtrip_preserves_semantics() {
        let m = Manager::new();
        let x1 = m.var_ref(m.var("x1"));
        let x2 = m.var_ref(m.var("x2"));
        let y1 = m.var_ref(m.var("y1"));
        let y2 = m.var_ref(m.var("y2"));
        let phi = m.ite(x1, m.xor(y1, x2), m.or(&[y1, m.and(&[x2, y2])]));
        let inputs = [m.var("x1"), m.var("x2"), m.var("y1"), m.var("y2")];
        let text = write_aiger(&m, &inputs, &[("phi".into(), phi)]).unwrap();
        assert!(text.starts_with("aag "));

        let m2 = Manager::new();
        let manifest = OutputManifest {
            outputs: vec!["y1".into(), "y2".into()],
            order: Some(vec!["y2".into(), "y1".into()]),
        };
        let (root2, vt2) = parse_aiger(&m2, &text, &manifest).unwrap();
        assert_eq!(vt2.inputs, vec![m2.var("x1"), m2.var("x2")]);
        assert_eq!(vt2.outputs, vec![m2.var("y2"), m2.var("y1")]);

        let vt1 = VarTable::new(
            vec![m.var("x1"), m.var("x2")],
            vec![m.var("y2"), m.var("y1")],
        );
        let mut o1 = TableOracle::new(&m, &vt1);
        let mut o2 = TableOracle::new(&m2, &vt2);
        assert_eq!(o1.table(phi), o2.table(root2));
    }

    #[test]
    fn constant_outputs_use_literal_zero_and_one() {
        let m = Manager::new();
        let x = m.var_ref(m.var("x1"));
        let taut = m.or(&[x, m.not(x)]);
        assert_eq!(taut, m.true_ref());
        let text = write_aiger(
            &m,
            &[m.var("x1")],
            &[("t".into(), taut), ("f".into(), m.false_ref())],
        )
        .unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "aag 1 1 0 2 0");
        assert_eq!(lines[2], "1");
        assert_eq!(lines[3], "0");
    }

    #[test]
    fn comments_are_ignored() {
        let m = Manager::new();
        let text = "aag 1 1 0 1 0\n2\n2\nc\nanything at all\neven aag 9 9\n";
        assert!(parse_aiger(&m, text, &mf(&["i0"])).is_ok());
    }

    #[test]
    fn malformed_documents_report_line_numbers() {
        let cases: &[(&str, usize, &str)] = &[
            ("", 1, "empty document"),
            ("aag 1 1 0 1\n2\n2\n", 1, "header"),
            ("aag 2 1 1 1 0\n2\n2\n", 1, "latches"),
            ("aag 2 2 0 2 0\n2\n4\n2\n4\n", 1, "exactly one output"),
            ("aag 1 1 0 1 0\n3\n2\n", 2, "even"),
            ("aag 1 1 0 1 0\n0\n2\n", 2, "even"),
            ("aag 1 2 0 1 0\n2\n2\n2\n", 3, "duplicate input"),
            ("aag 1 1 0 1 0\n4\n2\n", 2, "exceeds"),
            ("aag 1 1 0 1 0\n2\n", 3, "unexpected end of file"),
            ("aag 2 1 0 1 1\n2\n4\n2 2 2\n", 4, "redefines an input"),
            (
                "aag 3 1 0 1 2\n2\n6\n6 2 2\n6 2 3\n",
                5,
                "duplicate definition",
            ),
            ("aag 3 1 0 1 1\n2\n6\n6 2 4\n", 4, "never defined"),
            ("aag 2 1 0 1 0\n2\n4\n", 3, "never defined"),
            (
                "aag 3 1 0 1 2\n2\n4\n4 6 2\n6 4 2\n",
                4,
                "combinational cycle",
            ),
            ("aag 1 1 0 1 0\n2\n2\ni1 z\n", 4, "out of range"),
            ("aag 1 1 0 1 0\n2\n2\ni0 a\ni0 b\n", 5, "duplicate symbol"),
            ("aag 2 2 0 1 0\n2\n4\n2\ni1 i0\n", 5, "used twice"),
            ("aag 1 1 0 1 0\n2\n2\nx0 a\n", 4, "unrecognized"),
            ("aag 1 1 0 1 0\n2\n2\n\ni0 a\n", 4, "blank"),
        ];
        for (text, line, needle) in cases {
            let m = Manager::new();
            match parse_aiger(&m, text, &mf(&[])) {
                Err(AigerError::Parse { line: l, msg }) => {
                    assert_eq!(l, *line, "{text:?}: {msg}");
                    assert!(msg.contains(needle), "{text:?}: {msg}");
                }
                other => panic!("{text:?}: expected parse error, got {other:?}"),
            }
        }
    }

    #[test]
    fn manifest_mistakes_are_rejected() {
        let m = Manager::new();
        let text = "aag 2 2 0 1 0\n2\n4\n2\n";
        let bad = [
            mf(&["nope"]),
            mf(&["i0", "i0"]),
            OutputManifest {
                outputs: vec!["i0".into(), "i1".into()],
                order: Some(vec!["i0".into()]),
            },
            OutputManifest {
                outputs: vec!["i0".into()],
                order: Some(vec!["i1".into()]),
            },
        ];
        for manifest in &bad {
            assert!(matches!(
                parse_aiger(&m, text, manifest),
                Err(AigerError::Manifest(_))
            ));
        }
    }

    #[test]
    fn writing_an_undeclared_variable_fails() {
        let m = Manager::new();
        let y = m.var_ref(m.var("y1"));
        let err = write_aiger(&m, &[m.var("x1")], &[("f".into(), y)]).unwrap_err();
        match err {
            AigerError::UnknownSupport(name) => assert_eq!(name, "y1"),
            other => panic!("expected unknown support, got {other:?}"),
        }
    }
}
