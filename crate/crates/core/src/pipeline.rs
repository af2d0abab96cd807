//! End-to-end synthesis: output ordering, DAG annotation, extraction of the
//! g-vector at the root, reverse substitution down to input-only functions,
//! and SAT verification of the result.

use std::collections::{HashMap, HashSet};

use crate::cegar::RefineEvent;
use crate::compose::{allowed_support, Exactness};
use crate::formula::{order_outputs, FormulaRef, Manager, Var, VarTable};
use crate::sat::{solve, tseitin, SatError, SatVerdict, SolverOpts};
use crate::schedule::{run, RunStats, SynthConfig, SynthError};

/// Which root vector the g-functions are read from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Extraction {
    /// g_i = ¬γ_i(root), the default return of the synthesis loop.
    #[default]
    Gamma,
    /// g_i = δ_i(root).
    Delta,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum OrderMode {
    /// Sort outputs ascending by transitive fan-in node count.
    #[default]
    FaninCount,
    /// Keep the declared order.
    Given,
}

/// Ordered Skolem functions: g_i may still mention later outputs, f_i is
/// input-only.
#[derive(Debug, Clone)]
pub struct SkolemVector {
    /// Output variables in synthesis order (position 0 is quantified first).
    pub outputs: Vec<Var>,
    pub g: Vec<FormulaRef>,
    pub f: Vec<FormulaRef>,
}

pub struct SynthesisResult {
    pub root: FormulaRef,
    /// Variable table actually used, with outputs in synthesis order.
    pub vars: VarTable,
    pub skolem: SkolemVector,
    /// Whether the root annotation was certified exact.
    pub root_exact: bool,
    pub stats: RunStats,
    pub trace: Vec<RefineEvent>,
}

/// Orders the outputs, annotates the DAG, and extracts Skolem functions for
/// every output.
pub fn synthesize(
    mgr: &Manager,
    root: FormulaRef,
    vars: &VarTable,
    cfg: &SynthConfig,
    extraction: Extraction,
    order: OrderMode,
) -> Result<SynthesisResult, SynthError> {
    if vars.outputs.is_empty() {
        return Err(SynthError::NoOutputs);
    }
    let vars = match order {
        OrderMode::FaninCount => order_outputs(mgr, root, vars),
        OrderMode::Given => vars.clone(),
    };
    let done = run(mgr, root, &vars, cfg)?;
    let quad = &done.root_quad;
    let n = vars.num_outputs();
    let mut g = Vec::with_capacity(n);
    for i in 0..n {
        g.push(match extraction {
            Extraction::Gamma => mgr.not(quad.pos.gamma[i]),
            Extraction::Delta => quad.pos.delta[i],
        });
    }
    let f = reverse_substitute(mgr, &vars, &g)?;
    Ok(SynthesisResult {
        root,
        skolem: SkolemVector {
            outputs: vars.outputs.clone(),
            g,
            f,
        },
        root_exact: quad.pos.exactness == Exactness::Exact,
        stats: done.stats,
        trace: done.trace,
        vars,
    })
}

/// f_n = g_n; f_i = g_i with y_{i+1}..y_n replaced by f_{i+1}..f_n. Checks
/// the support discipline on each g_i before substituting.
pub fn reverse_substitute(
    mgr: &Manager,
    vars: &VarTable,
    g: &[FormulaRef],
) -> Result<Vec<FormulaRef>, SynthError> {
    let n = g.len();
    let mut f = vec![mgr.false_ref(); n];
    let mut map: HashMap<Var, FormulaRef> = HashMap::new();
    for i in (0..n).rev() {
        let allowed: HashSet<Var> = allowed_support(vars, i).into_iter().collect();
        for v in mgr.support(g[i]) {
            if !allowed.contains(&v) {
                return Err(SynthError::SupportLeak {
                    output: mgr.var_name(vars.outputs[i]),
                    stray: mgr.var_name(v),
                });
            }
        }
        let fi = mgr.substitute(g[i], &map);
        f[i] = fi;
        map.insert(vars.outputs[i], fi);
    }
    Ok(f)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum VerificationReport {
    Verified,
    /// φ is satisfiable for some Y at this input point but φ(X, F(X)) = 0.
    Falsified { witness: Vec<(Var, bool)> },
    Unknown { reason: String },
}

/// SAT-checks φ ∧ ¬φ[Y ↦ F]. Unsatisfiable means F realizes Y in φ; a model
/// yields an input witness.
pub fn verify(
    mgr: &Manager,
    root: FormulaRef,
    vars: &VarTable,
    skolem: &SkolemVector,
    opts: &SolverOpts,
) -> VerificationReport {
    let mut map = HashMap::new();
    for (i, &y) in skolem.outputs.iter().enumerate() {
        map.insert(y, skolem.f[i]);
    }
    let plugged = mgr.substitute(root, &map);
    let negated = mgr.not(plugged);
    let query = mgr.and(&[root, negated]);
    if query == mgr.false_ref() {
        return VerificationReport::Verified;
    }
    let doc = tseitin(mgr, query);
    match solve(&doc, &[], opts) {
        Ok(SatVerdict::Unsat) => VerificationReport::Verified,
        Ok(SatVerdict::Sat(model)) => {
            let witness = vars
                .inputs
                .iter()
                .map(|&x| (x, model.get(&x).copied().unwrap_or(false)))
                .collect();
            VerificationReport::Falsified { witness }
        }
        Err(SatError::ResourceLimit) => VerificationReport::Unknown {
            reason: "solver conflict budget exhausted".into(),
        },
        Err(e) => VerificationReport::Unknown {
            reason: e.to_string(),
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bench::gen_random_spec;
    use crate::oracle::TableOracle;

    fn vt(mgr: &Manager, inputs: &[&str], outputs: &[&str]) -> VarTable {
        VarTable::new(
            inputs.iter().map(|n| mgr.var(n)).collect(),
            outputs.iter().map(|n| mgr.var(n)).collect(),
        )
    }

    #[test]
    fn reverse_substitution_chains_back_to_front() {
        let m = Manager::new();
        let vars = vt(&m, &["x1"], &["y1", "y2"]);
        let y2 = m.var_ref(m.var("y2"));
        let x1 = m.var_ref(m.var("x1"));
        // g_1 = y_2, g_2 = x_1: one chain step gives f_1 = x_1.
        let f = reverse_substitute(&m, &vars, &[y2, x1]).unwrap();
        assert_eq!(f, vec![x1, x1]);

        // n = 1 is the identity.
        let vars1 = vt(&m, &["x1"], &["y1"]);
        let f1 = reverse_substitute(&m, &vars1, &[x1]).unwrap();
        assert_eq!(f1, vec![x1]);
    }

    #[test]
    fn support_violations_are_reported() {
        let m = Manager::new();
        let vars = vt(&m, &["x1"], &["y1", "y2"]);
        let y1 = m.var_ref(m.var("y1"));
        let x1 = m.var_ref(m.var("x1"));
        // g_2 may only mention inputs, y_1 is out of scope there.
        let err = reverse_substitute(&m, &vars, &[x1, y1]).unwrap_err();
        match err {
            SynthError::SupportLeak { output, stray } => {
                assert_eq!(output, "y2");
                assert_eq!(stray, "y1");
            }
            other => panic!("expected support leak, got {other}"),
        }
        // g_1 must not mention y_1 itself either.
        assert!(reverse_substitute(&m, &vars, &[y1, x1]).is_err());
    }

    #[test]
    fn equivalence_spec_has_unique_function() {
        let m = Manager::new();
        let vars = vt(&m, &["x1"], &["y1"]);
        let x1 = m.var_ref(m.var("x1"));
        let y1 = m.var_ref(m.var("y1"));
        let root = m.not(m.xor(y1, x1));
        for ext in [Extraction::Gamma, Extraction::Delta] {
            let res =
                synthesize(&m, root, &vars, &SynthConfig::default(), ext, OrderMode::Given)
                    .unwrap();
            // y1 ↔ x1 pins the function to x1 itself.
            assert_eq!(res.skolem.f, vec![x1]);
            assert!(res.root_exact);
            let report = verify(&m, root, &vars, &res.skolem, &SolverOpts::default());
            assert_eq!(report, VerificationReport::Verified);
        }
    }

    #[test]
    fn disjunction_spec_extracts_both_band_ends() {
        let m = Manager::new();
        let vars = vt(&m, &["x1"], &["y1"]);
        let x1 = m.var_ref(m.var("x1"));
        let y1 = m.var_ref(m.var("y1"));
        let root = m.or(&[y1, x1]);
        let mut oracle = TableOracle::new(&m, &vars);

        let res_g = synthesize(
            &m,
            root,
            &vars,
            &SynthConfig::default(),
            Extraction::Gamma,
            OrderMode::Given,
        )
        .unwrap();
        // Γ_1 = ¬(1 ∨ x1) = 0, so the gamma side returns the constant 1.
        assert_eq!(res_g.skolem.f, vec![m.true_ref()]);

        let res_d = synthesize(
            &m,
            root,
            &vars,
            &SynthConfig::default(),
            Extraction::Delta,
            OrderMode::Given,
        )
        .unwrap();
        // Δ_1 = ¬(0 ∨ x1) = ¬x1, the lower end of the band.
        assert_eq!(res_d.skolem.f, vec![m.not(x1)]);

        for res in [&res_g, &res_d] {
            assert!(oracle.realizes(root, &res.skolem.f));
            let report = verify(&m, root, &vars, &res.skolem, &SolverOpts::default());
            assert_eq!(report, VerificationReport::Verified);
        }
    }

    #[test]
    fn wrong_vector_is_falsified_with_a_real_witness() {
        let m = Manager::new();
        let vars = vt(&m, &["x1"], &["y1"]);
        let x1 = m.var_ref(m.var("x1"));
        let y1 = m.var_ref(m.var("y1"));
        let root = m.not(m.xor(y1, x1));
        let bad = SkolemVector {
            outputs: vars.outputs.clone(),
            g: vec![m.not(x1)],
            f: vec![m.not(x1)],
        };
        match verify(&m, root, &vars, &bad, &SolverOpts::default()) {
            VerificationReport::Falsified { witness } => {
                assert_eq!(witness.len(), 1);
                let (wv, wb) = witness[0];
                assert_eq!(wv, m.var("x1"));
                // The witness must satisfy ∃y φ but violate φ(X, F(X)).
                let mut a = HashMap::new();
                a.insert(wv, wb);
                a.insert(m.var("y1"), wb);
                assert!(m.eval(root, &a).unwrap());
                a.insert(m.var("y1"), !wb);
                assert!(!m.eval(root, &a).unwrap());
            }
            other => panic!("expected falsification, got {other:?}"),
        }
    }

    #[test]
    fn unsatisfiable_spec_verifies_vacuously() {
        let m = Manager::new();
        let vars = vt(&m, &["x1"], &["y1"]);
        let y1 = m.var_ref(m.var("y1"));
        // Folds to the false constant, so every F is fine.
        let root = m.and(&[y1, m.not(y1)]);
        assert_eq!(root, m.false_ref());
        let res = synthesize(
            &m,
            root,
            &vars,
            &SynthConfig::default(),
            Extraction::Gamma,
            OrderMode::Given,
        )
        .unwrap();
        let report = verify(&m, root, &vars, &res.skolem, &SolverOpts::default());
        assert_eq!(report, VerificationReport::Verified);
    }

    #[test]
    fn empty_output_list_is_rejected() {
        let m = Manager::new();
        let vars = VarTable::new(vec![m.var("x1")], vec![]);
        let x1 = m.var_ref(m.var("x1"));
        let err = synthesize(
            &m,
            x1,
            &vars,
            &SynthConfig::default(),
            Extraction::Gamma,
            OrderMode::Given,
        )
        .map(|_| ())
        .unwrap_err();
        assert!(matches!(err, SynthError::NoOutputs));
    }

    #[test]
    fn random_specs_synthesize_verified_vectors_in_both_modes() {
        for seed in 200..230u64 {
            let m = Manager::new();
            let (root, vars) = gen_random_spec(&m, seed, 25, 3, 3);
            for ext in [Extraction::Gamma, Extraction::Delta] {
                let res = synthesize(
                    &m,
                    root,
                    &vars,
                    &SynthConfig::default(),
                    ext,
                    OrderMode::FaninCount,
                )
                .unwrap();
                for (i, &gi) in res.skolem.g.iter().enumerate() {
                    let allowed: HashSet<Var> =
                        allowed_support(&res.vars, i).into_iter().collect();
                    for v in m.support(gi) {
                        assert!(allowed.contains(&v), "seed {seed}: g support leak");
                    }
                }
                let report = verify(&m, root, &vars, &res.skolem, &SolverOpts::default());
                assert_eq!(report, VerificationReport::Verified, "seed {seed} {ext:?}");
                // The oracle re-checks realization by enumeration; its output
                // order must match the synthesis order.
                let mut oracle = TableOracle::new(&m, &res.vars);
                assert!(oracle.realizes(root, &res.skolem.f), "seed {seed} {ext:?}");
            }
        }
    }
}
