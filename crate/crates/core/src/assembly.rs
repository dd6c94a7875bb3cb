//! Fusing the bipartite circuit with per-qubit flag gadgets, and
//! scheduling the result.
//!
//! Every bipartite edge (c, t) is one physical gate. It fills an entangling
//! slot of c's X-detecting gadget and, at the same time, a slot of t's
//! Z-detecting gadget. On the X side the gate may be driven by one of c's
//! flags, and on the Z side it may land on one of t's flags. The internal
//! order of each gadget becomes a chain of precedence constraints.
//! Entangling slots are filled in time order following one shuffled order
//! of all edges, which keeps the constraint graph acyclic.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::circuit::{Basis, Circuit, CircuitMetrics};
use crate::css::{max_coset_weight, CssError, CssState};
use crate::gadget::{FlagGadget, GadgetError, GadgetLibrary, Node};
use crate::pauli::ErrorType;
use crate::synth::{derive_seed, final_basis, BipartiteCircuit};

#[derive(Debug, Error)]
pub enum AssemblyError {
    #[error("gadget precedence stayed cyclic after {0} slot re-permutations")]
    CyclicPrecedence(usize),
    #[error("no gadget available for t={t}, r={r}: {source}")]
    MissingGadget { t: usize, r: usize, source: GadgetError },
    #[error("override t={requested} for {kind} gadgets is not certified: maximum coset weight is {max_weight}")]
    OverrideNotCertified { kind: ErrorType, requested: usize, max_weight: usize },
    #[error(transparent)]
    Css(#[from] CssError),
}

/// How strongly the gadgets of one type protect.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GadgetPolicy {
    /// Protect against t faults.
    Full,
    /// Lower t to one less than the maximum coset weight when that is smaller.
    Auto,
    /// Use the given t, accepted only when the maximum coset weight is at
    /// most t + 1 (so t-fault-protected gadgets already suffice).
    Override(usize),
    /// No gadgets at all.
    Off,
}

impl GadgetPolicy {
    pub fn resolve(self, state: &CssState, kind: ErrorType, t: usize) -> Result<usize, AssemblyError> {
        match self {
            GadgetPolicy::Full => Ok(t),
            GadgetPolicy::Off => Ok(0),
            GadgetPolicy::Auto => match max_coset_weight(state, kind) {
                Ok(w) => Ok(t.min(w.saturating_sub(1))),
                Err(CssError::TooManyCosets(..)) => Ok(t),
                Err(e) => Err(e.into()),
            },
            GadgetPolicy::Override(requested) => {
                let w = max_coset_weight(state, kind)?;
                if w > requested + 1 {
                    return Err(AssemblyError::OverrideNotCertified { kind, requested, max_weight: w });
                }
                Ok(requested.min(t))
            }
        }
    }
}

#[derive(Clone, Debug)]
pub struct AssemblyOptions {
    /// Fault count to protect against; defaults to the code's t.
    pub t: Option<usize>,
    pub x_policy: GadgetPolicy,
    pub z_policy: GadgetPolicy,
    pub retries: usize,
    pub seed: u64,
}

impl Default for AssemblyOptions {
    fn default() -> Self {
        AssemblyOptions { t: None, x_policy: GadgetPolicy::Auto, z_policy: GadgetPolicy::Auto, retries: 200, seed: 0 }
    }
}

/// The fused gate set together with its precedence DAG.
/// The fused gate set together with its precedence DAG.
#[derive(Clone, Debug)]
pub struct AssembledCircuit {
    pub circuit: Circuit,
    /// Physical gates; `circuit` lists them in a topological order.
    pub gates: Vec<(usize, usize)>,
    /// Pairs (a, b): gate a must run before gate b.
    pub precedence: Vec<(usize, usize)>,
    pub t_x: usize,
    pub t_z: usize,
    pub edges: usize,
    /// Number of edge orders tried before the DAG was acyclic.
    pub attempts: usize,
    fusion: Fusion,
}

impl AssembledCircuit {
    pub fn metrics(&self) -> CircuitMetrics {
        self.circuit.metrics()
    }

    pub fn circuit_for_order(&self, order: &[usize]) -> Circuit {
        let gates: Vec<(usize, usize)> = order.iter().map(|&i| self.gates[i]).collect();
        self.fusion.circuit(&gates)
    }
}

#[derive(Clone, Debug)]
struct GadgetSite {
    gadget: FlagGadget,
    /// Physical qubit of the origin.
    origin: usize,
    /// Physical qubits of the gadget's flags.
    flags: Vec<usize>,
    protect: bool,
}

/// Everything about the fused circuit except the order of the bipartite
/// edges, which decides how entangling slots are filled.
#[derive(Clone, Debug)]
struct Fusion {
    code: String,
    label: crate::css::StateLabel,
    n: usize,
    final_basis: Basis,
    edges: Vec<(usize, usize)>,
    /// X-detecting gadgets on controls, then Z-detecting ones on targets.
    sites: Vec<GadgetSite>,
    n_x: usize,
    init: Vec<Basis>,
    meas: Vec<Basis>,
}

struct Fused {
    gates: Vec<(usize, usize)>,
    precedence: Vec<(usize, usize)>,
    /// Edge rank of the shared gate each gate is scheduled next to.
    anchor: Vec<usize>,
}

impl Fusion {
    fn circuit(&self, gates: &[(usize, usize)]) -> Circuit {
        Circuit::from_gates(&self.code, self.label, self.n, &self.init, &self.meas, gates, self.final_basis)
    }

    /// Builds gates and precedence pairs for the given edge ranks. Each
    /// gadget takes its neighbours in rank order, which keeps shared gates
    /// consistent across gadgets.
    fn fuse(&self, rank: &[usize]) -> Fused {
        let mut edge_of = std::collections::HashMap::new();
        for (i, &e) in self.edges.iter().enumerate() {
            edge_of.insert(e, i);
        }
        let mut x_side = vec![usize::MAX; self.edges.len()];
        let mut z_side = vec![usize::MAX; self.edges.len()];
        // Per site: the edge (or None for a private gate) of each gadget gate.
        let mut site_edges: Vec<Vec<Option<usize>>> = Vec::with_capacity(self.sites.len());
        for (si, site) in self.sites.iter().enumerate() {
            let is_x = si < self.n_x;
            let mut nbrs: Vec<usize> = self
                .edges
                .iter()
                .enumerate()
                .filter(|(_, &(c, t))| if is_x { c == site.origin } else { t == site.origin })
                .map(|(i, _)| i)
                .collect();
            nbrs.sort_by_key(|&i| rank[i]);
            let mut next = nbrs.into_iter();
            let mut slot_edge = vec![usize::MAX; site.gadget.r];
            let mut per_gate = Vec::with_capacity(site.gadget.gates.len());
            for g in &site.gadget.gates {
                let (slot_node, other) = if is_x { (g.target, g.control) } else { (g.control, g.target) };
                if let Node::Target(j) = slot_node {
                    let e = next.next().expect("gadget size matches degree");
                    slot_edge[j] = e;
                    let q = site.physical(other);
                    if is_x {
                        x_side[e] = q;
                    } else {
                        z_side[e] = q;
                    }
                    per_gate.push(Some(e));
                } else {
                    per_gate.push(None);
                }
            }
            debug_assert!(slot_edge.iter().all(|&e| e != usize::MAX));
            site_edges.push(per_gate);
        }
        let mut gates: Vec<(usize, usize)> = (0..self.edges.len()).map(|i| (x_side[i], z_side[i])).collect();
        let mut anchor: Vec<usize> = rank.to_vec();
        let mut precedence = Vec::new();
        for (site, per_gate) in self.sites.iter().zip(&site_edges) {
            let mut prev: Option<usize> = None;
            let mut pending: Vec<usize> = Vec::new();
            let mut last_rank = 0;
            for (g, e) in site.gadget.gates.iter().zip(per_gate) {
                let node = match e {
                    Some(e) => {
                        for p in pending.drain(..) {
                            anchor[p] = rank[*e];
                        }
                        last_rank = rank[*e];
                        *e
                    }
                    None => {
                        let q = (site.physical(g.control), site.physical(g.target));
                        gates.push(q);
                        anchor.push(0);
                        pending.push(gates.len() - 1);
                        gates.len() - 1
                    }
                };
                if site.protect {
                    if let Some(a) = prev {
                        precedence.push((a, node));
                    }
                }
                prev = Some(node);
            }
            for p in pending {
                anchor[p] = last_rank;
            }
        }
        Fused { gates, precedence, anchor }
    }
}

impl GadgetSite {
    fn physical(&self, n: Node) -> usize {
        match n {
            Node::Origin => self.origin,
            Node::Flag(f) => self.flags[f],
            Node::Target(_) => unreachable!("slot nodes are resolved through edges"),
        }
    }
}

fn gadget_for(library: &mut GadgetLibrary, t: usize, r: usize) -> Result<FlagGadget, AssemblyError> {
    library
        .get(t, r)
        .map(|e| e.gadget.clone())
        .map_err(|source| AssemblyError::MissingGadget { t, r, source })
}

fn opposite(b: Basis) -> Basis {
    match b {
        Basis::X => Basis::Z,
        Basis::Z => Basis::X,
    }
}

/// Fuses the bipartite circuit with X gadgets on controls and Z gadgets on
/// targets. The edge order is a seeded permutation; a cyclic precedence
/// graph triggers a new permutation.
pub fn assemble_ft_circuit(
    state: &CssState,
    bip: &BipartiteCircuit,
    library: &mut GadgetLibrary,
    options: &AssemblyOptions,
) -> Result<AssembledCircuit, AssemblyError> {
    let t = options.t.unwrap_or_else(|| state.t());
    let t_x = options.x_policy.resolve(state, ErrorType::X, t)?;
    let t_z = options.z_policy.resolve(state, ErrorType::Z, t)?;
    let n = bip.n;

    let mut init: Vec<Basis> = (0..n).map(|q| if bip.is_control(q) { Basis::X } else { Basis::Z }).collect();
    let mut meas: Vec<Basis> = vec![Basis::Z; n];
    let mut sites = Vec::new();
    let mut next = n;
    let mut add_site = |origin: usize, gadget: FlagGadget, protect: bool, init: &mut Vec<Basis>, meas: &mut Vec<Basis>| {
        let fb = match gadget.kind {
            ErrorType::X => Basis::Z,
            ErrorType::Z => Basis::X,
        };
        let flags: Vec<usize> = (next..next + gadget.m).collect();
        next += gadget.m;
        for i in 0..gadget.m {
            init.push(if gadget.teleport == Some(i) { opposite(fb) } else { fb });
            meas.push(fb);
        }
        if gadget.teleport.is_some() {
            init[origin] = opposite(init[origin]);
        }
        sites.push(GadgetSite { gadget, origin, flags, protect });
    };
    for &c in &bip.controls {
        let r = bip.control_neighbors(c).len();
        add_site(c, gadget_for(library, t_x, r)?, t_x > 0, &mut init, &mut meas);
    }
    let n_x = bip.controls.len();
    for &tq in &bip.targets {
        let r = bip.target_neighbors(tq).len();
        add_site(tq, gadget_for(library, t_z, r)?.conjugated(), t_z > 0, &mut init, &mut meas);
    }
    let fusion = Fusion {
        code: state.name.clone(),
        label: state.label,
        n,
        final_basis: final_basis(state),
        edges: bip.edges.clone(),
        sites,
        n_x,
        init,
        meas,
    };

    for attempt in 0..options.retries.max(1) {
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(options.seed, attempt as u64));
        let mut rank: Vec<usize> = (0..bip.edges.len()).collect();
        rank.shuffle(&mut rng);
        let fused = fusion.fuse(&rank);
        let Some(order) = topological_order(fused.gates.len(), &fused.precedence, None) else {
            continue;
        };
        let ordered: Vec<(usize, usize)> = order.iter().map(|&i| fused.gates[i]).collect();
        return Ok(AssembledCircuit {
            circuit: fusion.circuit(&ordered),
            gates: fused.gates,
            precedence: fused.precedence,
            t_x,
            t_z,
            edges: bip.edge_count(),
            attempts: attempt + 1,
            fusion,
        });
    }
    Err(AssemblyError::CyclicPrecedence(options.retries))
}

/// Kahn's algorithm; ties are broken by index, or by `pick` when given.
fn topological_order(
    n: usize,
    precedence: &[(usize, usize)],
    mut pick: Option<&mut dyn FnMut(&[usize]) -> usize>,
) -> Option<Vec<usize>> {
    let mut indeg = vec![0usize; n];
    let mut succ = vec![Vec::new(); n];
    for &(a, b) in precedence {
        indeg[b] += 1;
        succ[a].push(b);
    }
    let mut ready: Vec<usize> = (0..n).filter(|&i| indeg[i] == 0).collect();
    let mut order = Vec::with_capacity(n);
    while !ready.is_empty() {
        let k = match pick.as_mut() {
            Some(f) => f(&ready),
            None => (0..ready.len()).min_by_key(|&k| ready[k]).unwrap(),
        };
        let node = ready.swap_remove(k);
        order.push(node);
        for &s in &succ[node] {
            indeg[s] -= 1;
            if indeg[s] == 0 {
                ready.push(s);
            }
        }
    }
    (order.len() == n).then_some(order)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ScheduleObjective {
    MinMaxQubits,
    MinDepth,
}

fn objective_key(m: &CircuitMetrics, objective: ScheduleObjective) -> (usize, usize) {
    match objective {
        ScheduleObjective::MinMaxQubits => (m.max_simultaneous_qubits, m.depth),
        ScheduleObjective::MinDepth => (m.depth, m.max_simultaneous_qubits),
    }
}

/// Random edge ranks mixing a per-control key, a per-target key and noise,
/// so some samples walk control by control and others target by target.
fn sample_rank(edges: &[(usize, usize)], n: usize, rng: &mut ChaCha8Rng) -> Vec<usize> {
    let qkey: Vec<f64> = (0..n).map(|_| rng.random()).collect();
    let a: f64 = rng.random();
    let noise: f64 = rng.random::<f64>() * 0.3;
    let keys: Vec<f64> = edges
        .iter()
        .map(|&(c, t)| a * qkey[c] + (1.0 - a) * qkey[t] + noise * rng.random::<f64>())
        .collect();
    let mut idx: Vec<usize> = (0..edges.len()).collect();
    idx.sort_by(|&i, &j| keys[i].total_cmp(&keys[j]));
    let mut rank = vec![0; edges.len()];
    for (r, i) in idx.into_iter().enumerate() {
        rank[i] = r;
    }
    rank
}

/// Greedy list scheduling of one fused DAG. For qubit count, gates that
/// open few qubits and retire flags go first; for depth, gates in the
/// earliest layer. Remaining ties follow the edge ranks.
fn greedy_order(f: &Fused, n_code: usize, nq: usize, objective: ScheduleObjective) -> Vec<usize> {
    let mut live = vec![false; nq];
    let mut uses = vec![0usize; nq];
    for &(x, y) in &f.gates {
        uses[x] += 1;
        uses[y] += 1;
    }
    let mut level = vec![0usize; nq];
    let gates = &f.gates;
    let anchor = &f.anchor;
    let mut pick = |ready: &[usize]| -> usize {
        let score = |g: usize| -> (i64, usize, usize) {
            let (x, y) = gates[g];
            match objective {
                ScheduleObjective::MinMaxQubits => {
                    let fresh = (!live[x]) as i64 + (!live[y]) as i64;
                    let closes = [x, y].iter().filter(|&&q| q >= n_code && uses[q] == 1).count() as i64;
                    (fresh - closes, anchor[g], g)
                }
                ScheduleObjective::MinDepth => (level[x].max(level[y]) as i64, anchor[g], g),
            }
        };
        let k = (0..ready.len()).min_by_key(|&k| score(ready[k])).unwrap();
        let (x, y) = gates[ready[k]];
        live[x] = true;
        live[y] = true;
        uses[x] -= 1;
        uses[y] -= 1;
        let l = level[x].max(level[y]) + 1;
        level[x] = l;
        level[y] = l;
        k
    };
    topological_order(gates.len(), &f.precedence, Some(&mut pick)).expect("rank-monotone fusion is acyclic")
}

/// Samples `shuffles` orders of the bipartite edges (the first is the
/// assembled order), fuses the gadgets for each, list-schedules the result
/// and keeps the best circuit for the objective.
pub fn schedule_circuit(
    a: &AssembledCircuit,
    objective: ScheduleObjective,
    shuffles: usize,
    seed: u64,
) -> Circuit {
    let mut best = a.circuit.clone();
    let mut best_key = objective_key(&best.metrics(), objective);
    let nq = a.circuit.num_qubits();
    let fusion = &a.fusion;
    for s in 1..shuffles {
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, s as u64));
        let rank = sample_rank(&fusion.edges, fusion.n, &mut rng);
        let fused = fusion.fuse(&rank);
        let order = greedy_order(&fused, fusion.n, nq, objective);
        let gates: Vec<(usize, usize)> = order.iter().map(|&i| fused.gates[i]).collect();
        let circuit = fusion.circuit(&gates);
        let key = objective_key(&circuit.metrics(), objective);
        if key < best_key {
            best_key = key;
            best = circuit;
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog;
    use crate::css::StateLabel;
    use crate::gadget::{Gate, LibraryEntry, SearchBudget};
    use crate::gf2::BitVec;
    use crate::synth::best_of_trials;
    use crate::tableau::tableau_check_circuit;

    fn bell_state() -> CssState {
        CssState {
            name: "bell".into(),
            n: 2,
            k: 0,
            d: 3,
            x_generators: vec![BitVec::parse("11").unwrap()],
            z_generators: vec![BitVec::parse("11").unwrap()],
            logical_x: vec![],
            logical_z: vec![],
            label: StateLabel::Zero,
        }
    }

    #[test]
    fn bell_pair_with_one_flag_gadgets() {
        let s = bell_state();
        let bip = best_of_trials(&s, 1, 0).unwrap();
        let mut lib = GadgetLibrary::new(SearchBudget::default());
        let one_flag = FlagGadget {
            t: 1,
            r: 1,
            m: 1,
            kind: ErrorType::X,
            gates: vec![
                Gate::new(Node::Origin, Node::Flag(0)),
                Gate::new(Node::Origin, Node::Target(0)),
                Gate::new(Node::Origin, Node::Flag(0)),
            ],
            teleport: None,
        };
        lib.insert(LibraryEntry { gadget: one_flag, optimal: false });
        let opts = AssemblyOptions { t: Some(1), x_policy: GadgetPolicy::Full, z_policy: GadgetPolicy::Full, ..Default::default() };
        let a = assemble_ft_circuit(&s, &bip, &mut lib, &opts).unwrap();
        assert_eq!(a.circuit.cx_count(), 5);
        assert_eq!(a.circuit.n_flags, 2);
        a.circuit.validate().unwrap();
        tableau_check_circuit(&a.circuit, &s).unwrap();
    }

    #[test]
    fn steane_assembles_to_fifteen_cx() {
        let s = catalog::state("steane", StateLabel::Zero).unwrap();
        let bip = best_of_trials(&s, 8, 1).unwrap();
        let mut lib = GadgetLibrary::new(SearchBudget::default());
        let a = assemble_ft_circuit(&s, &bip, &mut lib, &AssemblyOptions::default()).unwrap();
        assert_eq!((a.t_x, a.t_z), (1, 0));
        assert_eq!(a.circuit.cx_count(), 15);
        assert_eq!(a.circuit.n_flags, 3);
        tableau_check_circuit(&a.circuit, &s).unwrap();
        let scheduled = schedule_circuit(&a, ScheduleObjective::MinMaxQubits, 2000, 3);
        scheduled.validate().unwrap();
        assert!(scheduled.max_simultaneous_qubits() <= 8, "{}", scheduled.max_simultaneous_qubits());
        tableau_check_circuit(&scheduled, &s).unwrap();
    }

    #[test]
    fn override_requires_certificate() {
        let s = catalog::state("golay", StateLabel::Zero).unwrap();
        assert!(GadgetPolicy::Override(2).resolve(&s, ErrorType::Z, 3).is_ok());
        assert!(matches!(
            GadgetPolicy::Override(1).resolve(&s, ErrorType::Z, 3),
            Err(AssemblyError::OverrideNotCertified { max_weight: 3, .. })
        ));
        assert_eq!(GadgetPolicy::Auto.resolve(&s, ErrorType::Z, 3).unwrap(), 2);
        assert_eq!(GadgetPolicy::Auto.resolve(&s, ErrorType::X, 3).unwrap(), 3);
    }

    #[test]
    fn assembled_catalog_circuits_are_correct() {
        for name in ["surface_d3", "color_17", "carbon", "surface_d5"] {
            let s = catalog::default_state(name).unwrap();
            let bip = best_of_trials(&s, 16, 5).unwrap();
            let mut lib = GadgetLibrary::new(SearchBudget::default());
            let a = assemble_ft_circuit(&s, &bip, &mut lib, &AssemblyOptions::default()).unwrap();
            a.circuit.validate().unwrap();
            assert_eq!(a.circuit.cx_count(), bip.edge_count() + 2 * a.circuit.n_flags);
            tableau_check_circuit(&a.circuit, &s).unwrap_or_else(|e| panic!("{name}: {e:?}"));
            let sched = schedule_circuit(&a, ScheduleObjective::MinDepth, 50, 1);
            tableau_check_circuit(&sched, &s).unwrap_or_else(|e| panic!("{name} scheduled: {e:?}"));
        }
    }

    #[test]
    fn more_shuffles_never_worse() {
        let s = catalog::default_state("color_17").unwrap();
        let bip = best_of_trials(&s, 16, 5).unwrap();
        let mut lib = GadgetLibrary::new(SearchBudget::default());
        let a = assemble_ft_circuit(&s, &bip, &mut lib, &AssemblyOptions::default()).unwrap();
        let mut last = usize::MAX;
        for shuffles in [1, 10, 100] {
            let q = schedule_circuit(&a, ScheduleObjective::MinMaxQubits, shuffles, 9).max_simultaneous_qubits();
            assert!(q <= last);
            last = q;
        }
    }
}
