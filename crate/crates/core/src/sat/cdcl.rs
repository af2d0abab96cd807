//! Small conflict-driven clause learning solver: two-literal watches,
//! 1UIP learning, VSIDS activities with phase saving, Luby restarts, and
//! minisat-style assumption levels. Fully deterministic for a given seed.

use super::{SatError, SolverOpts};

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
struct Lit(u32);

impl Lit {
    fn from_dimacs(l: i32) -> Lit {
        let v = (l.unsigned_abs() - 1) * 2;
        Lit(if l > 0 { v } else { v + 1 })
    }

    fn var(self) -> usize {
        (self.0 >> 1) as usize
    }

    fn is_pos(self) -> bool {
        self.0 & 1 == 0
    }

    fn neg(self) -> Lit {
        Lit(self.0 ^ 1)
    }

    fn idx(self) -> usize {
        self.0 as usize
    }
}

#[derive(Clone, Copy)]
struct Watch {
    clause: u32,
    blocker: Lit,
}

struct Solver {
    nvars: usize,
    clauses: Vec<Vec<Lit>>,
    watches: Vec<Vec<Watch>>,
    assigns: Vec<i8>, // 1 true, -1 false, 0 unassigned
    level: Vec<u32>,
    reason: Vec<Option<u32>>,
    trail: Vec<Lit>,
    trail_lim: Vec<usize>,
    qhead: usize,
    activity: Vec<f64>,
    var_inc: f64,
    heap: std::collections::BinaryHeap<(u64, u32)>,
    phase: Vec<bool>,
    seen: Vec<bool>,
    conflicts: u64,
}

fn splitmix(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

fn luby(mut i: u64) -> u64 {
    // 1-based: 1 1 2 1 1 2 4 1 1 2 1 1 2 4 8 ...
    loop {
        let k = 64 - i.leading_zeros() as u64;
        if i == (1 << k) - 1 {
            return 1 << (k - 1);
        }
        i = i - (1 << (k - 1)) + 1;
    }
}

impl Solver {
    fn new(nvars: usize, seed: u64) -> Self {
        let mut heap = std::collections::BinaryHeap::with_capacity(nvars);
        for v in 0..nvars {
            heap.push((0u64, v as u32));
        }
        let phase = (0..nvars)
            .map(|v| seed != 0 && splitmix(seed ^ (v as u64)) & 1 == 1)
            .collect();
        Solver {
            nvars,
            clauses: Vec::new(),
            watches: vec![Vec::new(); nvars * 2],
            assigns: vec![0; nvars],
            level: vec![0; nvars],
            reason: vec![None; nvars],
            trail: Vec::with_capacity(nvars),
            trail_lim: Vec::new(),
            qhead: 0,
            activity: vec![0.0; nvars],
            var_inc: 1.0,
            heap,
            phase,
            seen: vec![false; nvars],
            conflicts: 0,
        }
    }

    fn value(&self, l: Lit) -> i8 {
        let a = self.assigns[l.var()];
        if a == 0 {
            0
        } else if (a == 1) == l.is_pos() {
            1
        } else {
            -1
        }
    }

    fn decision_level(&self) -> usize {
        self.trail_lim.len()
    }

    fn enqueue(&mut self, l: Lit, from: Option<u32>) {
        debug_assert_eq!(self.value(l), 0);
        self.assigns[l.var()] = if l.is_pos() { 1 } else { -1 };
        self.level[l.var()] = self.decision_level() as u32;
        self.reason[l.var()] = from;
        self.trail.push(l);
    }

    fn attach(&mut self, ci: u32) {
        let (l0, l1) = (self.clauses[ci as usize][0], self.clauses[ci as usize][1]);
        self.watches[l0.idx()].push(Watch { clause: ci, blocker: l1 });
        self.watches[l1.idx()].push(Watch { clause: ci, blocker: l0 });
    }

    fn propagate(&mut self) -> Option<u32> {
        while self.qhead < self.trail.len() {
            let p = self.trail[self.qhead];
            self.qhead += 1;
            let falsified = p.neg();
            let mut ws = std::mem::take(&mut self.watches[falsified.idx()]);
            let mut i = 0;
            while i < ws.len() {
                let w = ws[i];
                if self.value(w.blocker) == 1 {
                    i += 1;
                    continue;
                }
                let ci = w.clause as usize;
                if self.clauses[ci][0] == falsified {
                    self.clauses[ci].swap(0, 1);
                }
                let first = self.clauses[ci][0];
                if first != w.blocker && self.value(first) == 1 {
                    ws[i].blocker = first;
                    i += 1;
                    continue;
                }
                let mut moved = false;
                for k in 2..self.clauses[ci].len() {
                    if self.value(self.clauses[ci][k]) != -1 {
                        self.clauses[ci].swap(1, k);
                        let lit = self.clauses[ci][1];
                        self.watches[lit.idx()].push(Watch { clause: w.clause, blocker: first });
                        ws.swap_remove(i);
                        moved = true;
                        break;
                    }
                }
                if moved {
                    continue;
                }
                if self.value(first) == -1 {
                    self.watches[falsified.idx()] = ws;
                    self.qhead = self.trail.len();
                    return Some(w.clause);
                }
                self.enqueue(first, Some(w.clause));
                i += 1;
            }
            self.watches[falsified.idx()] = ws;
        }
        None
    }

    fn bump(&mut self, v: usize) {
        self.activity[v] += self.var_inc;
        if self.activity[v] > 1e100 {
            for a in self.activity.iter_mut() {
                *a *= 1e-100;
            }
            self.var_inc *= 1e-100;
        }
        if self.assigns[v] == 0 {
            self.heap.push((self.activity[v].to_bits(), v as u32));
        }
    }

    fn analyze(&mut self, confl: u32) -> (Vec<Lit>, usize) {
        let mut learnt: Vec<Lit> = vec![Lit(0)];
        let mut path = 0usize;
        let mut p: Option<Lit> = None;
        let mut idx = self.trail.len();
        let mut ci = confl;
        let current = self.decision_level() as u32;
        let mut touched: Vec<usize> = Vec::new();
        loop {
            let start = usize::from(p.is_some());
            for k in start..self.clauses[ci as usize].len() {
                let q = self.clauses[ci as usize][k];
                let v = q.var();
                if !self.seen[v] && self.level[v] > 0 {
                    self.seen[v] = true;
                    touched.push(v);
                    self.bump(v);
                    if self.level[v] == current {
                        path += 1;
                    } else {
                        learnt.push(q);
                    }
                }
            }
            loop {
                idx -= 1;
                if self.seen[self.trail[idx].var()] {
                    break;
                }
            }
            let pl = self.trail[idx];
            self.seen[pl.var()] = false;
            path -= 1;
            if path == 0 {
                learnt[0] = pl.neg();
                break;
            }
            ci = self.reason[pl.var()].expect("non-decision on conflict path");
            p = Some(pl);
        }
        for v in touched {
            self.seen[v] = false;
        }
        let bt = if learnt.len() == 1 {
            0
        } else {
            let mut max_k = 1;
            for k in 2..learnt.len() {
                if self.level[learnt[k].var()] > self.level[learnt[max_k].var()] {
                    max_k = k;
                }
            }
            learnt.swap(1, max_k);
            self.level[learnt[1].var()] as usize
        };
        (learnt, bt)
    }

    fn cancel_until(&mut self, lvl: usize) {
        if self.decision_level() <= lvl {
            return;
        }
        let keep = self.trail_lim[lvl];
        for k in (keep..self.trail.len()).rev() {
            let l = self.trail[k];
            let v = l.var();
            self.phase[v] = self.assigns[v] == 1;
            self.assigns[v] = 0;
            self.reason[v] = None;
            self.heap.push((self.activity[v].to_bits(), v as u32));
        }
        self.trail.truncate(keep);
        self.trail_lim.truncate(lvl);
        self.qhead = keep;
    }

    fn search(
        &mut self,
        assumptions: &[Lit],
        max_conflicts: Option<u64>,
    ) -> Result<Option<Vec<bool>>, SatError> {
        let mut restart_seq = 1u64;
        let mut since_restart = 0u64;
        loop {
            if let Some(ci) = self.propagate() {
                self.conflicts += 1;
                since_restart += 1;
                if let Some(max) = max_conflicts {
                    if self.conflicts > max {
                        return Err(SatError::ResourceLimit);
                    }
                }
                if self.decision_level() == 0 {
                    return Ok(None);
                }
                let (learnt, bt) = self.analyze(ci);
                self.cancel_until(bt);
                if learnt.len() == 1 {
                    self.enqueue(learnt[0], None);
                } else {
                    let ci = self.clauses.len() as u32;
                    self.clauses.push(learnt);
                    self.attach(ci);
                    let assert_lit = self.clauses[ci as usize][0];
                    self.enqueue(assert_lit, Some(ci));
                }
                self.var_inc /= 0.95;
            } else {
                if since_restart >= 100 * luby(restart_seq) {
                    since_restart = 0;
                    restart_seq += 1;
                    self.cancel_until(0);
                    continue;
                }
                // assumption levels first, then ordinary decisions
                let mut assumed = false;
                while self.decision_level() < assumptions.len() {
                    let p = assumptions[self.decision_level()];
                    match self.value(p) {
                        1 => self.trail_lim.push(self.trail.len()),
                        -1 => return Ok(None),
                        _ => {
                            self.trail_lim.push(self.trail.len());
                            self.enqueue(p, None);
                            assumed = true;
                            break;
                        }
                    }
                }
                if assumed {
                    continue;
                }
                if self.trail.len() == self.nvars {
                    return Ok(Some(self.assigns.iter().map(|&a| a == 1).collect()));
                }
                let v = loop {
                    let (_, v) = self.heap.pop().expect("unassigned variable missing from heap");
                    if self.assigns[v as usize] == 0 {
                        break v as usize;
                    }
                };
                self.trail_lim.push(self.trail.len());
                self.enqueue(Lit((v as u32) * 2 + u32::from(!self.phase[v])), None);
            }
        }
    }
}

/// Returns `Some(model)` with one bool per variable, `None` for unsat.
pub(super) fn solve(
    nvars: usize,
    clauses: &[Vec<i32>],
    assumptions: &[i32],
    opts: &SolverOpts,
) -> Result<Option<Vec<bool>>, SatError> {
    let mut s = Solver::new(nvars, opts.seed);
    let mut units: Vec<Lit> = Vec::new();
    for clause in clauses {
        let mut lits: Vec<Lit> = clause.iter().map(|&l| Lit::from_dimacs(l)).collect();
        lits.sort_by_key(|l| l.0);
        lits.dedup();
        if lits.windows(2).any(|w| w[0].var() == w[1].var()) {
            continue; // tautology
        }
        match lits.len() {
            0 => return Ok(None),
            1 => units.push(lits[0]),
            _ => {
                let ci = s.clauses.len() as u32;
                s.clauses.push(lits);
                s.attach(ci);
            }
        }
    }
    for u in units {
        match s.value(u) {
            1 => {}
            -1 => return Ok(None),
            _ => s.enqueue(u, None),
        }
    }
    if s.propagate().is_some() {
        return Ok(None);
    }
    let assumed: Vec<Lit> = assumptions.iter().map(|&l| Lit::from_dimacs(l)).collect();
    s.search(&assumed, opts.max_conflicts)
}
