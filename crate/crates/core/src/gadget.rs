//! Flag gadgets protecting one control qubit and the backtracking search
//! that discovers them.
//!
//! A gadget is built from its temporal end backwards. Each prepended gate
//! leaves the propagated effect of every later fault untouched, so the
//! search keeps the set of fault vectors reachable with up to t-1 faults
//! and only checks combinations that involve the newest location.

use std::collections::BTreeMap;
use std::fmt;
use std::time::{Duration, Instant};

use thiserror::Error;

use crate::combin::for_each_combination;
use crate::gf2::BitVec;
use crate::pauli::{min_weight_modulo, ErrorType, PauliOperator};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Node {
    /// The protected qubit (a control for X gadgets, a target for Z gadgets).
    Origin,
    /// The i-th qubit coupled to the origin.
    Target(usize),
    Flag(usize),
}

impl fmt::Display for Node {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Node::Origin => write!(f, "c"),
            Node::Target(i) => write!(f, "t{i}"),
            Node::Flag(i) => write!(f, "f{i}"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Gate {
    pub control: Node,
    pub target: Node,
}

impl Gate {
    pub fn new(control: Node, target: Node) -> Self {
        Gate { control, target }
    }

    pub fn touches(&self, n: Node) -> bool {
        self.control == n || self.target == n
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FlagGadget {
    pub t: usize,
    pub r: usize,
    /// Number of flag qubits used.
    pub m: usize,
    pub kind: ErrorType,
    /// CX gates in time order.
    pub gates: Vec<Gate>,
    /// Set when the origin's input wire was teleported in through this flag;
    /// the origin and that flag then swap initialization bases.
    pub teleport: Option<usize>,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GadgetError {
    #[error("no fault-tolerant gadget exists in the search space (t={t}, r={r}, m<={m})")]
    SearchExhausted { t: usize, r: usize, m: usize },
    #[error("search budget exhausted after {nodes} nodes (t={t}, r={r}, m<={m})")]
    BudgetExhausted { t: usize, r: usize, m: usize, nodes: u64 },
    #[error("invalid gadget: {0}")]
    Invalid(String),
}

impl FlagGadget {
    pub fn cx_count(&self) -> usize {
        self.gates.len()
    }

    /// Hadamard conjugation: reverses every CX and swaps the detected type.
    pub fn conjugated(&self) -> FlagGadget {
        FlagGadget {
            kind: self.kind.dual(),
            gates: self.gates.iter().map(|g| Gate::new(g.target, g.control)).collect(),
            ..self.clone()
        }
    }

    /// Index of the last gate touching each flag; the flag is measured there.
    pub fn flag_last_gate(&self) -> Vec<Option<usize>> {
        let mut last = vec![None; self.m];
        for (i, g) in self.gates.iter().enumerate() {
            for n in [g.control, g.target] {
                if let Node::Flag(f) = n {
                    last[f] = Some(i);
                }
            }
        }
        last
    }

    pub fn flag_first_gate(&self) -> Vec<Option<usize>> {
        let mut first = vec![None; self.m];
        for (i, g) in self.gates.iter().enumerate() {
            for n in [g.control, g.target] {
                if let Node::Flag(f) = n {
                    first[f].get_or_insert(i);
                }
            }
        }
        first
    }

    /// Checks the structural invariants of a complete gadget.
    pub fn check_structure(&self) -> Result<(), GadgetError> {
        let bad = |s: String| Err(GadgetError::Invalid(s));
        let mut target_hits = vec![0usize; self.r];
        let mut flag_hits = vec![0usize; self.m];
        for g in &self.gates {
            if g.control == g.target {
                return bad(format!("gate on a single qubit {}", g.control));
            }
            // Orient as the X-detecting picture: `src` spreads X onto `dst`.
            let (src, dst) = match self.kind {
                ErrorType::X => (g.control, g.target),
                ErrorType::Z => (g.target, g.control),
            };
            for n in [src, dst] {
                match n {
                    Node::Target(i) if i >= self.r => return bad(format!("target t{i} out of range")),
                    Node::Flag(f) if f >= self.m => return bad(format!("flag f{f} out of range")),
                    _ => {}
                }
            }
            match (src, dst) {
                (_, Node::Target(i)) => target_hits[i] += 1,
                (_, Node::Flag(f)) => flag_hits[f] += 1,
                (Node::Flag(f), Node::Origin) if self.teleport == Some(f) => flag_hits[f] += 1,
                _ => return bad(format!("unexpected gate {} -> {}", g.control, g.target)),
            }
            if matches!(src, Node::Target(_)) {
                return bad(format!("coupled qubit drives gate {} -> {}", g.control, g.target));
            }
        }
        if let Some(i) = target_hits.iter().position(|&h| h != 1) {
            return bad(format!("target t{i} receives {} gates", target_hits[i]));
        }
        if let Some(f) = flag_hits.iter().position(|&h| h != 2) {
            return bad(format!("flag f{f} appears in {} gates", flag_hits[f]));
        }
        Ok(())
    }
}

/// Fault location of a gadget, in time order, for the exhaustive test.
#[derive(Clone, Debug)]
struct GadgetLocation {
    /// Faults are inserted right after this many gates have run.
    after: usize,
    variants: Vec<Vec<Node>>,
    /// A measurement flip rather than a Pauli insertion.
    flip: Option<usize>,
}

fn local_index(n: Node, r: usize) -> usize {
    match n {
        Node::Origin => 0,
        Node::Target(i) => 1 + i,
        Node::Flag(f) => 1 + r + f,
    }
}

/// Residual-and-flags outcome of a set of faults, obtained by forward
/// propagation through the gadget.
fn propagate(g: &FlagGadget, faults: &[(usize, &[Node])], flips: &[usize]) -> (BitVec, BitVec) {
    let nq = 1 + g.r + g.m;
    let mut frame = PauliOperator::identity(nq);
    let mut inserted = vec![false; faults.len()];
    let pauli = match g.kind {
        ErrorType::X => crate::pauli::Pauli::X,
        ErrorType::Z => crate::pauli::Pauli::Z,
    };
    for step in 0..=g.gates.len() {
        for (i, (after, nodes)) in faults.iter().enumerate() {
            if *after == step && !inserted[i] {
                for &n in nodes.iter() {
                    frame.apply(local_index(n, g.r), pauli);
                }
                inserted[i] = true;
            }
        }
        if step < g.gates.len() {
            let gate = g.gates[step];
            frame.conjugate_cx(local_index(gate.control, g.r), local_index(gate.target, g.r));
        }
    }
    let comp = frame.component(g.kind);
    let residual = comp.select(&(0..=g.r).collect::<Vec<_>>());
    let mut flags = comp.select(&(1 + g.r..nq).collect::<Vec<_>>());
    for &f in flips {
        flags.flip(f);
    }
    (residual, flags)
}

fn gadget_locations(g: &FlagGadget) -> Vec<GadgetLocation> {
    let first = g.flag_first_gate();
    let last = g.flag_last_gate();
    let mut locs = Vec::new();
    for step in 0..=g.gates.len() {
        // Initialization faults sit before the first gate on the qubit.
        for f in 0..g.m {
            let init_in_detect_basis = g.teleport != Some(f);
            if init_in_detect_basis && first[f] == Some(step) {
                locs.push(GadgetLocation { after: step, variants: vec![vec![Node::Flag(f)]], flip: None });
            }
        }
        if g.teleport.is_some() && step == 0 {
            locs.push(GadgetLocation { after: 0, variants: vec![vec![Node::Origin]], flip: None });
        }
        if step > 0 {
            let gate = g.gates[step - 1];
            locs.push(GadgetLocation {
                after: step,
                variants: vec![vec![gate.control], vec![gate.target], vec![gate.control, gate.target]],
                flip: None,
            });
            for f in 0..g.m {
                if last[f] == Some(step - 1) {
                    locs.push(GadgetLocation { after: step, variants: vec![vec![]], flip: Some(f) });
                }
            }
        }
    }
    locs
}

/// Exhaustive fault-tolerance test of a (possibly partial) gadget: every set
/// of at most `t` faults either raises a flag or leaves a residual of weight
/// at most the number of faults modulo the origin-plus-all-targets stabilizer.
pub fn gadget_ft_test(g: &FlagGadget, t: usize) -> bool {
    gadget_counterexample(g, t).is_none()
}

/// Like `gadget_ft_test` but returns the offending residual, if any.
pub fn gadget_counterexample(g: &FlagGadget, t: usize) -> Option<BitVec> {
    let locs = gadget_locations(g);
    let stabilizer = {
        let mut p = PauliOperator::identity(1 + g.r);
        for q in 0..=g.r {
            p.apply(q, crate::pauli::Pauli::X);
        }
        p
    };
    let mut found = None;
    for f in 1..=t.min(locs.len()) {
        for_each_combination(locs.len(), f, |chosen| {
            let mut choice = vec![0usize; f];
            loop {
                let mut faults: Vec<(usize, &[Node])> = Vec::new();
                let mut flips = Vec::new();
                for (slot, &li) in chosen.iter().enumerate() {
                    let loc = &locs[li];
                    match loc.flip {
                        Some(fl) => flips.push(fl),
                        None => faults.push((loc.after, &loc.variants[choice[slot]])),
                    }
                }
                let (residual, flags) = propagate(g, &faults, &flips);
                if flags.is_zero() {
                    let w = min_weight_modulo(&PauliOperator::x_type(residual.clone()), std::slice::from_ref(&stabilizer))
                        .expect("single generator");
                    if w > f {
                        found = Some(residual);
                        return false;
                    }
                }
                // Advance the mixed-radix counter over variant choices.
                let mut slot = 0;
                loop {
                    if slot == f {
                        return true;
                    }
                    choice[slot] += 1;
                    if choice[slot] < locs[chosen[slot]].variants.len() {
                        break;
                    }
                    choice[slot] = 0;
                    slot += 1;
                }
            }
        });
        if found.is_some() {
            break;
        }
    }
    found
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum FlagState {
    Fresh,
    Entangled,
    Done,
}

/// Limits for a single discovery run.
#[derive(Clone, Copy, Debug)]
pub struct SearchBudget {
    pub max_nodes: u64,
    pub max_time: Option<Duration>,
}

impl SearchBudget {
    pub fn nodes(max_nodes: u64) -> Self {
        SearchBudget { max_nodes, max_time: None }
    }

    pub fn unlimited() -> Self {
        SearchBudget { max_nodes: u64::MAX, max_time: None }
    }
}

impl Default for SearchBudget {
    fn default() -> Self {
        SearchBudget { max_nodes: 200_000_000, max_time: None }
    }
}

/// Outcome statistics of a finished search.
#[derive(Clone, Copy, Debug, Default)]
pub struct SearchStats {
    pub nodes: u64,
}

struct Search {
    r: usize,
    m: usize,
    flag_shift: usize,
    resid_mask: u64,
    /// eff[q]: effect vector of an X fault on local qubit q at the current front.
    eff: Vec<u64>,
    targets_done: usize,
    flags: Vec<FlagState>,
    /// reach[j]: vectors reachable with exactly j+1 faults, j < t-1.
    reach: Vec<Vec<u64>>,
    gates_rev: Vec<Gate>,
    teleport: Option<usize>,
    nodes: u64,
    budget: SearchBudget,
    started: Instant,
    out_of_budget: bool,
}

impl Search {
    fn new(t: usize, r: usize, m: usize, budget: SearchBudget) -> Self {
        assert!(1 + r + m <= 64, "gadget too large for 64-bit fault vectors");
        let flag_shift = 1 + r;
        let mut eff = vec![0u64; 1 + r + m];
        for (q, e) in eff.iter_mut().enumerate() {
            *e = 1u64 << q;
        }
        Search {
            r,
            m,
            flag_shift,
            resid_mask: (1u64 << flag_shift) - 1,
            eff,
            targets_done: 0,
            flags: vec![FlagState::Fresh; m],
            reach: vec![Vec::new(); t.saturating_sub(1)],
            gates_rev: Vec::new(),
            teleport: None,
            nodes: 0,
            budget,
            started: Instant::now(),
            out_of_budget: false,
        }
    }

    #[inline]
    fn passes(&self, v: u64, faults: usize) -> bool {
        if v >> self.flag_shift != 0 {
            return true;
        }
        let w = (v & self.resid_mask).count_ones() as usize;
        w.min(self.r + 1 - w) <= faults
    }

    /// Checks every combination containing one of the new location's variants.
    fn location_ok(&self, variants: &[u64]) -> bool {
        for &u in variants {
            if !self.passes(u, 1) {
                return false;
            }
        }
        for (j, level) in self.reach.iter().enumerate() {
            for &v in level {
                for &u in variants {
                    if !self.passes(u ^ v, j + 2) {
                        return false;
                    }
                }
            }
        }
        true
    }

    fn add_location(&mut self, variants: &[u64]) {
        for j in (1..self.reach.len()).rev() {
            let (lower, upper) = self.reach.split_at_mut(j);
            let src = &lower[j - 1];
            let dst = &mut upper[0];
            for &v in src.iter() {
                for &u in variants {
                    dst.push(u ^ v);
                }
            }
        }
        if let Some(first) = self.reach.first_mut() {
            first.extend_from_slice(variants);
        }
    }

    fn local(&self, n: Node) -> usize {
        local_index(n, self.r)
    }

    /// Tries to prepend `gate`; on success the state is updated and the
    /// returned snapshot restores it.
    fn try_gate(&mut self, gate: Gate, new_flag: Option<usize>) -> Option<(Vec<u64>, Vec<usize>)> {
        self.nodes += 1;
        let snapshot = (self.eff.clone(), self.reach.iter().map(Vec::len).collect::<Vec<_>>());
        if let Some(f) = new_flag {
            // The flag's measurement flip becomes a location once it exists.
            let flip = [1u64 << (self.flag_shift + f)];
            self.add_location(&flip);
        }
        let (a, b) = (self.local(gate.control), self.local(gate.target));
        let (ea, eb) = (self.eff[a], self.eff[b]);
        let variants = [ea, eb, ea ^ eb];
        if !self.location_ok(&variants) {
            self.restore(&snapshot);
            return None;
        }
        self.add_location(&variants);
        self.eff[a] ^= eb;
        Some(snapshot)
    }

    fn restore(&mut self, snapshot: &(Vec<u64>, Vec<usize>)) {
        self.eff.copy_from_slice(&snapshot.0);
        for (level, &len) in self.reach.iter_mut().zip(&snapshot.1) {
            level.truncate(len);
        }
    }

    fn check_budget(&mut self) -> bool {
        if self.nodes >= self.budget.max_nodes {
            self.out_of_budget = true;
        }
        if let Some(limit) = self.budget.max_time {
            if self.nodes % 1024 == 0 && self.started.elapsed() > limit {
                self.out_of_budget = true;
            }
        }
        !self.out_of_budget
    }

    fn entangled_flags(&self) -> Vec<usize> {
        (0..self.m).filter(|&f| self.flags[f] == FlagState::Entangled).collect()
    }

    /// Candidate moves at the current node in priority order.
    fn candidates(&self) -> Vec<Move> {
        let entangled = self.entangled_flags();
        let sources = || std::iter::once(Node::Origin).chain(entangled.iter().map(|&f| Node::Flag(f)));
        let mut out = Vec::new();
        if self.targets_done < self.r {
            let t = Node::Target(self.targets_done);
            out.extend(sources().map(|s| Move::Target(Gate::new(s, t))));
        }
        if let Some(f) = self.flags.iter().position(|&s| s == FlagState::Fresh) {
            out.extend(sources().map(|s| Move::Entangle(f, Gate::new(s, Node::Flag(f)))));
        }
        let last = self.gates_rev.last().copied();
        for &f in &entangled {
            for s in sources().filter(|&s| s != Node::Flag(f)) {
                let gate = Gate::new(s, Node::Flag(f));
                // Repeating the gate just placed would cancel it.
                if last == Some(gate) {
                    continue;
                }
                out.push(Move::Disentangle(f, gate));
            }
        }
        if self.targets_done == self.r && entangled.len() == 1 {
            let f = entangled[0];
            out.push(Move::Teleport(f, Gate::new(Node::Flag(f), Node::Origin)));
        }
        out
    }

    fn is_complete(&self) -> bool {
        self.targets_done == self.r && self.flags.iter().all(|&s| s != FlagState::Entangled)
    }

    fn dfs(&mut self) -> bool {
        if self.is_complete() {
            return true;
        }
        for mv in self.candidates() {
            if !self.check_budget() {
                return false;
            }
            let (gate, new_flag) = match mv {
                Move::Entangle(f, g) => (g, Some(f)),
                Move::Target(g) | Move::Disentangle(_, g) | Move::Teleport(_, g) => (g, None),
            };
            let Some(snapshot) = self.try_gate(gate, new_flag) else { continue };
            self.gates_rev.push(gate);
            match mv {
                Move::Target(_) => self.targets_done += 1,
                Move::Entangle(f, _) => self.flags[f] = FlagState::Entangled,
                Move::Disentangle(f, _) => self.flags[f] = FlagState::Done,
                Move::Teleport(f, _) => {
                    self.flags[f] = FlagState::Done;
                    self.teleport = Some(f);
                }
            }
            if self.dfs() {
                return true;
            }
            match mv {
                Move::Target(_) => self.targets_done -= 1,
                Move::Entangle(f, _) => self.flags[f] = FlagState::Fresh,
                Move::Disentangle(f, _) => self.flags[f] = FlagState::Entangled,
                Move::Teleport(f, _) => {
                    self.flags[f] = FlagState::Entangled;
                    self.teleport = None;
                }
            }
            self.gates_rev.pop();
            self.restore(&snapshot);
            if self.out_of_budget {
                return false;
            }
        }
        false
    }
}

#[derive(Clone, Copy, Debug)]
enum Move {
    Target(Gate),
    Entangle(usize, Gate),
    Disentangle(usize, Gate),
    Teleport(usize, Gate),
}

/// Depth-first search for an X-detecting gadget with at most `m` flags.
pub fn discover_gadget(t: usize, r: usize, m: usize, budget: SearchBudget) -> Result<FlagGadget, GadgetError> {
    discover_gadget_with_stats(t, r, m, budget).0
}

pub fn discover_gadget_with_stats(
    t: usize,
    r: usize,
    m: usize,
    budget: SearchBudget,
) -> (Result<FlagGadget, GadgetError>, SearchStats) {
    assert!(t >= 1 && r >= 1, "discover_gadget needs t >= 1 and r >= 1");
    let mut s = Search::new(t, r, m, budget);
    let found = s.dfs();
    let stats = SearchStats { nodes: s.nodes };
    if found {
        let used = s.flags.iter().filter(|&&f| f != FlagState::Fresh).count();
        let gadget = FlagGadget {
            t,
            r,
            m: used,
            kind: ErrorType::X,
            gates: s.gates_rev.iter().rev().copied().collect(),
            teleport: s.teleport,
        };
        (Ok(gadget), stats)
    } else if s.out_of_budget {
        (Err(GadgetError::BudgetExhausted { t, r, m, nodes: s.nodes }), stats)
    } else {
        (Err(GadgetError::SearchExhausted { t, r, m }), stats)
    }
}

/// Trivial gadget for t = 0 or r = 0: the bare entangling gates.
pub fn bare_gadget(t: usize, r: usize) -> FlagGadget {
    FlagGadget {
        t,
        r,
        m: 0,
        kind: ErrorType::X,
        gates: (0..r).map(|i| Gate::new(Node::Origin, Node::Target(i))).collect(),
        teleport: None,
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LibraryEntry {
    pub gadget: FlagGadget,
    /// True when every smaller flag count was proven infeasible.
    pub optimal: bool,
}

/// Gadgets keyed by (t, r); X-detecting, Z versions come from conjugation.
#[derive(Clone, Debug, Default)]
pub struct GadgetLibrary {
    entries: BTreeMap<(usize, usize), LibraryEntry>,
    pub budget: SearchBudget,
    pub max_flags: usize,
}

impl GadgetLibrary {
    pub fn new(budget: SearchBudget) -> Self {
        GadgetLibrary { entries: BTreeMap::new(), budget, max_flags: 40 }
    }

    pub fn insert(&mut self, entry: LibraryEntry) {
        let key = (entry.gadget.t, entry.gadget.r);
        match self.entries.get(&key) {
            Some(old) if old.gadget.m < entry.gadget.m || (old.gadget.m == entry.gadget.m && old.optimal) => {}
            _ => {
                self.entries.insert(key, entry);
            }
        }
    }

    pub fn entries(&self) -> impl Iterator<Item = &LibraryEntry> {
        self.entries.values()
    }

    pub fn lookup(&self, t: usize, r: usize) -> Option<&LibraryEntry> {
        self.entries.get(&(t, r))
    }

    /// Smallest known gadget for (t, r), discovering at increasing m on a miss.
    pub fn get(&mut self, t: usize, r: usize) -> Result<&LibraryEntry, GadgetError> {
        if t == 0 || r == 0 {
            self.entries
                .entry((t, r))
                .or_insert_with(|| LibraryEntry { gadget: bare_gadget(t, r), optimal: true });
            return Ok(&self.entries[&(t, r)]);
        }
        if !self.entries.contains_key(&(t, r)) {
            let entry = discover_minimal(t, r, self.budget, self.max_flags)?;
            self.entries.insert((t, r), entry);
        }
        Ok(&self.entries[&(t, r)])
    }
}

/// Runs discovery at m = 0, 1, 2, ... and reports whether the result is
/// certified minimal.
pub fn discover_minimal(t: usize, r: usize, budget: SearchBudget, max_flags: usize) -> Result<LibraryEntry, GadgetError> {
    let mut certified = true;
    let mut last_err = None;
    for m in 0..=max_flags {
        match discover_gadget(t, r, m, budget) {
            Ok(g) => return Ok(LibraryEntry { optimal: certified && g.m == m, gadget: g }),
            Err(e @ GadgetError::BudgetExhausted { .. }) => {
                certified = false;
                last_err = Some(e);
            }
            Err(e) => last_err = Some(e),
        }
    }
    Err(last_err.unwrap_or(GadgetError::SearchExhausted { t, r, m: max_flags }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn x(control: Node, target: Node) -> Gate {
        Gate::new(control, target)
    }

    #[test]
    fn single_entangling_gate_is_not_ft() {
        let g = FlagGadget {
            t: 2,
            r: 5,
            m: 0,
            kind: ErrorType::X,
            gates: vec![x(Node::Origin, Node::Target(0))],
            teleport: None,
        };
        assert!(!gadget_ft_test(&g, 2));
    }

    #[test]
    fn one_flag_after_entangling_gate_is_ft() {
        let g = FlagGadget {
            t: 2,
            r: 5,
            m: 1,
            kind: ErrorType::X,
            gates: vec![x(Node::Origin, Node::Target(0)), x(Node::Origin, Node::Flag(0))],
            teleport: None,
        };
        assert!(gadget_ft_test(&g, 2));
    }

    #[test]
    fn discovered_t2_r5_matches_example_shape() {
        let g = discover_gadget(2, 5, 2, SearchBudget::default()).unwrap();
        assert_eq!((g.m, g.cx_count()), (2, 9));
        g.check_structure().unwrap();
        assert!(gadget_ft_test(&g, 2));
        assert!(gadget_ft_test(&g.conjugated(), 2));
        assert_eq!(g.conjugated().conjugated(), g);
    }

    #[test]
    fn deleting_a_flag_entangling_gate_breaks_ft() {
        let g = discover_gadget(2, 5, 2, SearchBudget::default()).unwrap();
        for (f, last) in g.flag_last_gate().into_iter().enumerate() {
            let mut broken = g.clone();
            broken.gates.remove(last.unwrap());
            assert!(!gadget_ft_test(&broken, 2), "removing the entangling gate of f{f} kept FT");
        }
    }

    #[test]
    fn small_searches() {
        assert!(matches!(discover_gadget(2, 5, 1, SearchBudget::default()), Err(GadgetError::SearchExhausted { .. })));
        assert_eq!(discover_gadget(2, 4, 1, SearchBudget::default()).unwrap().m, 1);
        assert_eq!(discover_gadget(1, 10, 1, SearchBudget::default()).unwrap().m, 1);
        assert!(matches!(
            discover_gadget(2, 6, 3, SearchBudget::nodes(10)),
            Err(GadgetError::BudgetExhausted { .. })
        ));
    }

    #[test]
    fn search_is_deterministic() {
        let a = discover_gadget(2, 7, 3, SearchBudget::default()).unwrap();
        let b = discover_gadget(2, 7, 3, SearchBudget::default()).unwrap();
        assert_eq!(a, b);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn discovered_gadgets_pass_exhaustive_test(t in 1usize..=3, r in 1usize..=7) {
            let entry = discover_minimal(t, r, SearchBudget::default(), 6).unwrap();
            let g = &entry.gadget;
            g.check_structure().unwrap();
            prop_assert_eq!(g.cx_count(), r + 2 * g.m);
            prop_assert!(gadget_ft_test(g, t));
            prop_assert!(gadget_ft_test(&g.conjugated(), t));
        }
    }
}
