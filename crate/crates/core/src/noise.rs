//! Circuit-level noise: Pauli-frame effects of every fault location, subset
//! sampling over fault counts, and acceptance statistics.
//!
//! Faults at rate p: depolarizing after each init and each CX, bit flips
//! before each flag measurement. Faults at rate q = p / 100: depolarizing
//! on every live qubit at every CX step. Frames are linear, so each
//! (location, Pauli) has a precomputed effect and a fault set is the XOR of
//! its effects.

use std::collections::HashMap;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use statrs::distribution::{Binomial, ContinuousCDF, Discrete, Normal};
use thiserror::Error;

use crate::circuit::{Basis, Circuit, Op};
use crate::css::CssState;
use crate::gf2::{BitVec, Gf2Matrix};
use crate::pauli::{ErrorType, Pauli, PauliOperator};
use crate::synth::derive_seed;

#[derive(Debug, Error)]
pub enum NoiseError {
    #[error("no nontrivial fault bucket has probability above 1/S^2 (P(0,0) = {0})")]
    DegeneratePlan(f64),
    #[error("invalid noise parameter: {0}")]
    InvalidParameter(String),
    #[error("circuit has {0} code qubits; at most 128 are supported")]
    TooManyCodeQubits(usize),
    #[error("flag outcomes span {0} dimensions, more than 128")]
    TooManyFlags(usize),
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NoiseModel {
    pub p: f64,
    pub memory_divisor: f64,
}

impl NoiseModel {
    pub fn new(p: f64) -> Result<Self, NoiseError> {
        if !(p > 0.0 && p < 1.0) {
            return Err(NoiseError::InvalidParameter(format!("p = {p} must lie in (0, 1)")));
        }
        Ok(NoiseModel { p, memory_divisor: 100.0 })
    }

    pub fn q(&self) -> f64 {
        self.p / self.memory_divisor
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LocationKind {
    Init,
    Gate,
    Measure,
    Idle,
}

/// One fault location. Faults act right after op `op`, except measurement
/// flips, which act right before it.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct NoiseLocation {
    pub op: usize,
    pub kind: LocationKind,
    pub qubits: [usize; 2],
}

impl NoiseLocation {
    /// Number of distinct non-identity faults.
    pub fn variants(&self) -> usize {
        match self.kind {
            LocationKind::Gate => 15,
            LocationKind::Measure => 1,
            _ => 3,
        }
    }

    /// The Pauli on each touched qubit for variant `v`.
    pub fn paulis(&self, v: usize) -> [Pauli; 2] {
        match self.kind {
            LocationKind::Gate => [Pauli::from_index((v + 1) / 4), Pauli::from_index((v + 1) % 4)],
            LocationKind::Measure => [Pauli::I, Pauli::I],
            _ => [Pauli::from_index(v + 1), Pauli::I],
        }
    }
}

/// Rate-p locations and rate-q (idle) locations of a circuit.
pub fn noise_locations(c: &Circuit) -> (Vec<NoiseLocation>, Vec<NoiseLocation>) {
    let mut lp = Vec::new();
    let mut lq = Vec::new();
    let mut live = vec![false; c.num_qubits()];
    for (i, op) in c.ops.iter().enumerate() {
        match *op {
            Op::Init { qubit, .. } => {
                live[qubit] = true;
                lp.push(NoiseLocation { op: i, kind: LocationKind::Init, qubits: [qubit, qubit] });
            }
            Op::Cx { control, target } => {
                lp.push(NoiseLocation { op: i, kind: LocationKind::Gate, qubits: [control, target] });
                for (q, _) in live.iter().enumerate().filter(|(_, &l)| l) {
                    lq.push(NoiseLocation { op: i, kind: LocationKind::Idle, qubits: [q, q] });
                }
            }
            Op::Measure { qubit, .. } => {
                live[qubit] = false;
                lp.push(NoiseLocation { op: i, kind: LocationKind::Measure, qubits: [qubit, qubit] });
            }
            Op::FinalMeasure { .. } => {}
        }
    }
    (lp, lq)
}

pub fn count_fault_locations(c: &Circuit) -> (usize, usize) {
    let (lp, lq) = noise_locations(c);
    (lp.len(), lq.len())
}

#[derive(Clone, Debug)]
pub struct SubsetPlan {
    pub l_p: usize,
    pub l_q: usize,
    pub p: f64,
    pub q: f64,
    pub samples: u64,
    /// Retained nontrivial (f_p, f_q) pairs with their probability under P.
    pub pairs: Vec<((usize, usize), f64)>,
    /// P(0, 0).
    pub p_trivial: f64,
    /// Expected number of fault-free runs per `samples` drawn from Q.
    pub trivial_addback: f64,
}

impl SubsetPlan {
    pub fn effective_samples(&self) -> f64 {
        self.samples as f64 + self.trivial_addback
    }

    /// Pair probabilities renormalized over the retained pairs.
    pub fn q_weights(&self) -> Vec<f64> {
        let total: f64 = self.pairs.iter().map(|(_, w)| w).sum();
        self.pairs.iter().map(|(_, w)| w / total).collect()
    }
}

fn binomial_support(n: usize, rate: f64, threshold: f64) -> Result<Vec<(usize, f64)>, NoiseError> {
    if n == 0 || rate == 0.0 {
        return Ok(vec![(0, 1.0)]);
    }
    let b = Binomial::new(rate, n as u64).map_err(|e| NoiseError::InvalidParameter(e.to_string()))?;
    Ok((0..=n).map(|f| (f, b.pmf(f as u64))).filter(|&(_, w)| w > threshold).collect())
}

pub fn build_subset_plan(l_p: usize, l_q: usize, p: f64, samples: u64) -> Result<SubsetPlan, NoiseError> {
    let model = NoiseModel::new(p)?;
    if samples == 0 {
        return Err(NoiseError::InvalidParameter("at least one sample is required".into()));
    }
    let q = model.q();
    let threshold = 1.0 / (samples as f64 * samples as f64);
    let fp = binomial_support(l_p, p, threshold)?;
    let fq = binomial_support(l_q, q, threshold)?;
    let mut pairs = Vec::new();
    for &(a, wa) in &fp {
        for &(b, wb) in &fq {
            let w = wa * wb;
            if (a, b) != (0, 0) && w > threshold {
                pairs.push(((a, b), w));
            }
        }
    }
    let ln_trivial = l_p as f64 * (-p).ln_1p() + l_q as f64 * (-q).ln_1p();
    let p_trivial = ln_trivial.exp();
    let nontrivial = -ln_trivial.exp_m1();
    if pairs.is_empty() {
        return Err(NoiseError::DegeneratePlan(p_trivial));
    }
    Ok(SubsetPlan {
        l_p,
        l_q,
        p,
        q,
        samples,
        pairs,
        p_trivial,
        trivial_addback: samples as f64 * p_trivial / nontrivial,
    })
}

/// Effect of one Pauli fault: flipped flags (possibly compressed), residual
/// X and Z parts on the code qubits, and the coset key of the residual for
/// the state's decoding type.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct FrameEffect {
    pub flags: u128,
    pub x: u128,
    pub z: u128,
    pub key: u128,
}

impl FrameEffect {
    #[inline]
    pub fn xor_assign(&mut self, o: &FrameEffect) {
        self.flags ^= o.flags;
        self.x ^= o.x;
        self.z ^= o.z;
        self.key ^= o.key;
    }
}

/// Pauli-frame simulator with precomputed effects for every location and
/// variant.
#[derive(Clone, Debug)]
pub struct FrameSimulator {
    pub p_locations: Vec<NoiseLocation>,
    pub q_locations: Vec<NoiseLocation>,
    p_effects: Vec<Vec<FrameEffect>>,
    q_effects: Vec<Vec<FrameEffect>>,
    pub n_code: usize,
    pub n_flags: usize,
    /// Flag bits are exact (not compressed) when there are at most 128.
    pub exact_flags: bool,
    pub syndrome_bits: usize,
    pub class_bits: usize,
}

/// Per-qubit effect of an X or Z inserted at the current time.
#[derive(Clone)]
struct Sensitivity {
    flags: BitVec,
    x: u128,
    z: u128,
    key: u128,
}

impl Sensitivity {
    fn zero(n_flags: usize) -> Self {
        Sensitivity { flags: BitVec::zeros(n_flags), x: 0, z: 0, key: 0 }
    }

    fn xor_assign(&mut self, o: &Sensitivity) {
        self.flags.xor_assign(&o.flags);
        self.x ^= o.x;
        self.z ^= o.z;
        self.key ^= o.key;
    }
}

impl FrameSimulator {
    pub fn new(c: &Circuit, state: &CssState) -> Result<Self, NoiseError> {
        if c.n_code > 128 {
            return Err(NoiseError::TooManyCodeQubits(c.n_code));
        }
        let kind = state.decoding_type();
        let columns = state.coset_columns(kind);
        let (p_locations, q_locations) = noise_locations(c);
        let nq = c.num_qubits();
        let nf = c.n_flags;

        // Walk backwards: sx[q] / sz[q] is the end effect of an X / Z on q
        // inserted right after the op being visited.
        let mut sx = vec![Sensitivity::zero(nf); nq];
        let mut sz = vec![Sensitivity::zero(nf); nq];
        for q in 0..c.n_code {
            sx[q].x = 1 << q;
            sz[q].z = 1 << q;
            if kind == ErrorType::X {
                sx[q].key = columns[q];
            } else {
                sz[q].key = columns[q];
            }
        }
        let mut p_raw: Vec<Vec<Sensitivity>> = vec![Vec::new(); p_locations.len()];
        let mut q_raw: Vec<Vec<Sensitivity>> = vec![Vec::new(); q_locations.len()];
        let mut pi = p_locations.len();
        let mut qi = q_locations.len();
        let combine = |sx: &[Sensitivity], sz: &[Sensitivity], q: usize, p: Pauli| {
            let mut s = Sensitivity::zero(nf);
            if p.has_x() {
                s.xor_assign(&sx[q]);
            }
            if p.has_z() {
                s.xor_assign(&sz[q]);
            }
            s
        };
        for (i, op) in c.ops.iter().enumerate().rev() {
            // Locations after op i.
            while qi > 0 && q_locations[qi - 1].op == i {
                qi -= 1;
                let q = q_locations[qi].qubits[0];
                q_raw[qi] = (1..4).map(|v| combine(&sx, &sz, q, Pauli::from_index(v))).collect();
            }
            if pi > 0 && p_locations[pi - 1].op == i && p_locations[pi - 1].kind != LocationKind::Measure {
                pi -= 1;
                let loc = p_locations[pi];
                p_raw[pi] = (0..loc.variants())
                    .map(|v| {
                        let [a, b] = loc.paulis(v);
                        let mut s = combine(&sx, &sz, loc.qubits[0], a);
                        if loc.kind == LocationKind::Gate {
                            s.xor_assign(&combine(&sx, &sz, loc.qubits[1], b));
                        }
                        s
                    })
                    .collect();
            }
            match *op {
                Op::Init { qubit, .. } => {
                    sx[qubit] = Sensitivity::zero(nf);
                    sz[qubit] = Sensitivity::zero(nf);
                }
                Op::Cx { control, target } => {
                    let t = sx[target].clone();
                    sx[control].xor_assign(&t);
                    let c0 = sz[control].clone();
                    sz[target].xor_assign(&c0);
                }
                Op::Measure { qubit, basis, flag } => {
                    let mut hit = Sensitivity::zero(nf);
                    hit.flags.set(flag, true);
                    pi -= 1;
                    debug_assert_eq!(p_locations[pi].op, i);
                    p_raw[pi] = vec![hit.clone()];
                    let (flipping, other) = match basis {
                        Basis::Z => (&mut sx, &mut sz),
                        Basis::X => (&mut sz, &mut sx),
                    };
                    flipping[qubit] = hit;
                    other[qubit] = Sensitivity::zero(nf);
                }
                Op::FinalMeasure { .. } => {}
            }
        }
        debug_assert_eq!((pi, qi), (0, 0));

        let exact_flags = nf <= 128;
        let pivots = if exact_flags {
            Vec::new()
        } else {
            let rows: Vec<BitVec> =
                p_raw.iter().chain(&q_raw).flatten().map(|s| s.flags.clone()).filter(|f| !f.is_zero()).collect();
            let pivots = Gf2Matrix::from_rows(nf, rows).expect("widths agree").rref().pivots;
            if pivots.len() > 128 {
                return Err(NoiseError::TooManyFlags(pivots.len()));
            }
            pivots
        };
        let finish = |s: &Sensitivity| FrameEffect {
            flags: if exact_flags { s.flags.to_u128() } else { s.flags.select(&pivots).to_u128() },
            x: s.x,
            z: s.z,
            key: s.key,
        };
        let p_effects = p_raw.iter().map(|v| v.iter().map(finish).collect()).collect();
        let q_effects = q_raw.iter().map(|v| v.iter().map(finish).collect()).collect();
        Ok(FrameSimulator {
            p_locations,
            q_locations,
            p_effects,
            q_effects,
            n_code: c.n_code,
            n_flags: nf,
            exact_flags,
            syndrome_bits: state.num_syndrome_bits(kind),
            class_bits: state.num_class_bits(kind),
        })
    }

    pub fn p_effect(&self, location: usize, variant: usize) -> &FrameEffect {
        &self.p_effects[location][variant]
    }

    pub fn q_effect(&self, location: usize, variant: usize) -> &FrameEffect {
        &self.q_effects[location][variant]
    }

    /// Combined effect of a fault set given as (is_idle, location, variant).
    pub fn propagate(&self, faults: &[(bool, usize, usize)]) -> FrameEffect {
        let mut e = FrameEffect::default();
        for &(idle, l, v) in faults {
            e.xor_assign(if idle { self.q_effect(l, v) } else { self.p_effect(l, v) });
        }
        e
    }

    /// Draws one sample from bucket (f_p, f_q): distinct locations, uniform
    /// non-identity Paulis.
    pub fn sample_bucket<R: Rng + ?Sized>(&self, f_p: usize, f_q: usize, rng: &mut R) -> FrameEffect {
        let mut e = FrameEffect::default();
        for l in rand::seq::index::sample(rng, self.p_locations.len(), f_p) {
            let v = rng.random_range(0..self.p_effects[l].len());
            e.xor_assign(&self.p_effects[l][v]);
        }
        for l in rand::seq::index::sample(rng, self.q_locations.len(), f_q) {
            let v = rng.random_range(0..3);
            e.xor_assign(&self.q_effects[l][v]);
        }
        e
    }

    pub fn outcome(&self, e: &FrameEffect, bucket: (usize, usize)) -> SampleOutcome {
        let accepted = e.flags == 0;
        let (syndrome, class) = if accepted { split_key(e.key, self.syndrome_bits) } else { (0, 0) };
        SampleOutcome { accepted, syndrome, class, bucket }
    }
}

pub fn split_key(key: u128, syndrome_bits: usize) -> (u128, u128) {
    let mask = if syndrome_bits >= 128 { u128::MAX } else { (1u128 << syndrome_bits) - 1 };
    (key & mask, key >> syndrome_bits)
}

pub fn join_key(syndrome: u128, class: u128, syndrome_bits: usize) -> u128 {
    syndrome | (class << syndrome_bits)
}

/// One Monte Carlo run. Rejected samples carry zero syndrome and class.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SampleOutcome {
    pub accepted: bool,
    pub syndrome: u128,
    pub class: u128,
    pub bucket: (usize, usize),
}

/// Accepted outcomes keyed by coset key; weights are f64 so the trivial
/// add-back can be included.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct OutcomeHistogram {
    pub counts: HashMap<u128, f64>,
}

impl OutcomeHistogram {
    pub fn add(&mut self, key: u128, w: f64) {
        *self.counts.entry(key).or_insert(0.0) += w;
    }

    pub fn merge(&mut self, o: &OutcomeHistogram) {
        for (&k, &w) in &o.counts {
            self.add(k, w);
        }
    }

    pub fn total(&self) -> f64 {
        self.counts.values().sum()
    }

    /// Entries sorted by key, for deterministic iteration.
    pub fn sorted(&self) -> Vec<(u128, f64)> {
        let mut v: Vec<(u128, f64)> = self.counts.iter().map(|(&k, &w)| (k, w)).collect();
        v.sort_by_key(|&(k, _)| k);
        v
    }
}

#[derive(Clone, Debug)]
pub struct MonteCarloResult {
    pub plan: SubsetPlan,
    pub accepted: u64,
    pub rejected: u64,
    /// Accepted outcomes (including half the trivial add-back each), split
    /// at random into training and test halves.
    pub train: OutcomeHistogram,
    pub test: OutcomeHistogram,
}

impl MonteCarloResult {
    pub fn effective_samples(&self) -> f64 {
        self.plan.effective_samples()
    }

    pub fn acceptance_rate(&self) -> f64 {
        (self.accepted as f64 + self.plan.trivial_addback) / self.effective_samples()
    }

    pub fn acceptance_interval(&self) -> (f64, f64) {
        let n = self.effective_samples();
        wilson_interval_f64(self.accepted as f64 + self.plan.trivial_addback, n, 0.95)
    }
}

pub const DEFAULT_SHARDS: u64 = 64;

/// Draws `plan.samples` nontrivial runs in `shards` independent streams.
/// The outcome depends on (seed, shards, plan, circuit) only, not on the
/// number of worker threads.
pub fn run_monte_carlo(sim: &FrameSimulator, plan: &SubsetPlan, seed: u64, shards: u64) -> MonteCarloResult {
    let shards = shards.max(1).min(plan.samples.max(1));
    let weights = WeightedIndex::new(plan.q_weights()).expect("positive weights");
    let parts: Vec<(u64, u64, OutcomeHistogram, OutcomeHistogram)> = (0..shards)
        .into_par_iter()
        .map(|k| {
            let count = plan.samples / shards + u64::from(k < plan.samples % shards);
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, k));
            let mut accepted = 0;
            let mut rejected = 0;
            let mut train = OutcomeHistogram::default();
            let mut test = OutcomeHistogram::default();
            for _ in 0..count {
                let (f_p, f_q) = plan.pairs[weights.sample(&mut rng)].0;
                let e = sim.sample_bucket(f_p, f_q, &mut rng);
                let to_test: bool = rng.random();
                if e.flags == 0 {
                    accepted += 1;
                    if to_test { &mut test } else { &mut train }.add(e.key, 1.0);
                } else {
                    rejected += 1;
                }
            }
            (accepted, rejected, train, test)
        })
        .collect();
    let mut result = MonteCarloResult {
        plan: plan.clone(),
        accepted: 0,
        rejected: 0,
        train: OutcomeHistogram::default(),
        test: OutcomeHistogram::default(),
    };
    for (a, r, tr, te) in parts {
        result.accepted += a;
        result.rejected += r;
        result.train.merge(&tr);
        result.test.merge(&te);
    }
    result.train.add(0, plan.trivial_addback / 2.0);
    result.test.add(0, plan.trivial_addback / 2.0);
    result
}

/// Streams individual outcomes from one seeded generator.
pub fn sample_outcomes<'a>(
    sim: &'a FrameSimulator,
    plan: &'a SubsetPlan,
    seed: u64,
) -> impl Iterator<Item = SampleOutcome> + 'a {
    let weights = WeightedIndex::new(plan.q_weights()).expect("positive weights");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..plan.samples).map(move |_| {
        let bucket = plan.pairs[weights.sample(&mut rng)].0;
        let e = sim.sample_bucket(bucket.0, bucket.1, &mut rng);
        sim.outcome(&e, bucket)
    })
}

/// Wilson score interval.
pub fn wilson_interval(successes: u64, trials: u64, confidence: f64) -> (f64, f64) {
    wilson_interval_f64(successes as f64, trials as f64, confidence)
}

pub fn wilson_interval_f64(successes: f64, trials: f64, confidence: f64) -> (f64, f64) {
    assert!(trials > 0.0 && successes >= 0.0 && successes <= trials);
    let z = Normal::standard().inverse_cdf(0.5 + confidence / 2.0);
    let n = trials;
    let phat = successes / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let centre = (phat + z2 / (2.0 * n)) / denom;
    let half = z * (phat * (1.0 - phat) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    ((centre - half).max(0.0), (centre + half).min(1.0))
}

/// Applies a fault set to the circuit on the full tableau and reports the
/// flag flips (relative to the noiseless run) and, for each stabilizer of
/// the state, whether its sign was flipped.
pub fn tableau_reference(
    c: &Circuit,
    state: &CssState,
    sim: &FrameSimulator,
    faults: &[(bool, usize, usize)],
) -> (Vec<bool>, Vec<bool>) {
    let nq = c.num_qubits();
    let mut after: HashMap<usize, PauliOperator> = HashMap::new();
    let mut before: HashMap<usize, PauliOperator> = HashMap::new();
    for &(idle, l, v) in faults {
        let loc = if idle { sim.q_locations[l] } else { sim.p_locations[l] };
        let mut op = PauliOperator::identity(nq);
        match loc.kind {
            LocationKind::Measure => {
                let basis = match c.ops[loc.op] {
                    Op::Measure { basis, .. } => basis,
                    _ => unreachable!(),
                };
                op.set(loc.qubits[0], if basis == Basis::Z { Pauli::X } else { Pauli::Z });
                before.entry(loc.op).or_insert_with(|| PauliOperator::identity(nq)).mul_assign(&op);
                continue;
            }
            LocationKind::Gate => {
                let [a, b] = loc.paulis(v);
                op.set(loc.qubits[0], a);
                op.set(loc.qubits[1], b);
            }
            _ => op.set(loc.qubits[0], loc.paulis(v)[0]),
        }
        after.entry(loc.op).or_insert_with(|| PauliOperator::identity(nq)).mul_assign(&op);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let run = crate::tableau::run_circuit(c, |i| after.get(&i).cloned(), |i| before.get(&i).cloned(), &mut rng);
    let flags = run.flags.iter().map(|m| m.outcome).collect();
    let signs = state
        .stabilizer_operators()
        .iter()
        .map(|s| {
            let lifted = crate::tableau::lift(s, nq);
            run.tableau.stabilizer_sign_of(&lifted).expect("faults keep the state stabilized by S up to sign")
        })
        .collect();
    (flags, signs)
}

/// The same quantities predicted from a frame effect.
pub fn frame_prediction(state: &CssState, sim: &FrameSimulator, e: &FrameEffect) -> (Vec<bool>, Vec<bool>) {
    assert!(sim.exact_flags);
    let flags = (0..sim.n_flags).map(|f| (e.flags >> f) & 1 == 1).collect();
    let n = state.n;
    let frame = PauliOperator::from_parts(BitVec::from_u128(n, e.x), BitVec::from_u128(n, e.z)).expect("same length");
    let signs = state.stabilizer_operators().iter().map(|s| !s.commutes(&frame)).collect();
    (flags, signs)
}
