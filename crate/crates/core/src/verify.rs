//! Exhaustive fault-tolerance check of a preparation circuit against
//! single-type faults.
//!
//! Every fault variant is turned once into an effect: the flag outcomes it
//! flips and the coset key of the error it leaves on the code qubits. Both
//! are linear, so a fault combination is the XOR of its variants' effects.

use std::fmt;

use rayon::prelude::*;
use thiserror::Error;

use crate::circuit::{Basis, Circuit, Op};
use crate::combin::binomial;
use crate::css::{CosetWeightTable, CssError, CssState};
use crate::gf2::{BitVec, Gf2Matrix};
use crate::pauli::ErrorType;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Site {
    AfterInit,
    AfterCx,
    BeforeMeasure,
}

/// A place where one fault can strike, with the Paulis it may insert (each
/// variant lists the qubits that receive the tested Pauli).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FaultLocation {
    pub op: usize,
    pub site: Site,
    pub kind: ErrorType,
    pub variants: Vec<Vec<usize>>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Fault {
    pub location: usize,
    pub variant: usize,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Counterexample {
    pub faults: Vec<Fault>,
    pub residual: BitVec,
    pub reduced_weight: usize,
}

impl fmt::Display for Counterexample {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} fault(s):", self.faults.len())?;
        for x in &self.faults {
            write!(f, " loc{}#{}", x.location, x.variant)?;
        }
        write!(f, " residual {} (weight {})", self.residual, self.reduced_weight)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Verdict {
    Pass,
    Counterexample(Counterexample),
}

impl Verdict {
    pub fn is_pass(&self) -> bool {
        matches!(self, Verdict::Pass)
    }
}

#[derive(Debug, Error)]
pub enum VerifyError {
    #[error("{combinations} fault combinations exceed the cap of {cap}")]
    BudgetExhausted { combinations: u128, cap: u128, locations: usize, variants: usize },
    #[error("flag outcomes span {0} dimensions, more than 128")]
    TooManyFlags(usize),
    #[error(transparent)]
    Css(#[from] CssError),
}

pub const DEFAULT_COMBINATION_CAP: u128 = 20_000_000_000;

/// Fault locations for the given type. Inits that the Pauli stabilizes are
/// skipped, and flag measurements only count when the Pauli flips them.
/// The final transversal readout is noiseless.
pub fn enumerate_fault_locations(c: &Circuit, kind: ErrorType) -> Vec<FaultLocation> {
    let harmless_init = match kind {
        ErrorType::X => Basis::X,
        ErrorType::Z => Basis::Z,
    };
    let mut out = Vec::new();
    for (i, op) in c.ops.iter().enumerate() {
        match *op {
            Op::Init { qubit, basis } if basis != harmless_init => {
                out.push(FaultLocation { op: i, site: Site::AfterInit, kind, variants: vec![vec![qubit]] });
            }
            Op::Cx { control, target } => out.push(FaultLocation {
                op: i,
                site: Site::AfterCx,
                kind,
                variants: vec![vec![control], vec![target], vec![control, target]],
            }),
            // A Pauli of the measured basis commutes with the measurement.
            Op::Measure { qubit, basis, .. } if basis != harmless_init => {
                out.push(FaultLocation { op: i, site: Site::BeforeMeasure, kind, variants: vec![vec![qubit]] });
            }
            _ => {}
        }
    }
    out
}

/// Propagates a set of single-type faults to the end of the circuit by
/// direct simulation; returns (flag flips, error on the code qubits).
pub fn propagate(c: &Circuit, locations: &[FaultLocation], faults: &[Fault]) -> (BitVec, BitVec) {
    let nq = c.num_qubits();
    let mut err = BitVec::zeros(nq);
    let mut flags = BitVec::zeros(c.n_flags);
    let kind = locations.first().map(|l| l.kind).unwrap_or(ErrorType::X);
    for (i, op) in c.ops.iter().enumerate() {
        let inject = |err: &mut BitVec, site: Site| {
            for f in faults {
                let loc = &locations[f.location];
                if loc.op == i && loc.site == site {
                    for &q in &loc.variants[f.variant] {
                        err.flip(q);
                    }
                }
            }
        };
        inject(&mut err, Site::BeforeMeasure);
        match *op {
            Op::Init { qubit, .. } => err.set(qubit, false),
            Op::Cx { control, target } => match kind {
                ErrorType::X => {
                    if err.get(control) {
                        err.flip(target);
                    }
                }
                ErrorType::Z => {
                    if err.get(target) {
                        err.flip(control);
                    }
                }
            },
            Op::Measure { qubit, basis, flag } => {
                let flips = match (kind, basis) {
                    (ErrorType::X, Basis::Z) | (ErrorType::Z, Basis::X) => err.get(qubit),
                    _ => false,
                };
                if flips {
                    flags.flip(flag);
                }
                err.set(qubit, false);
            }
            Op::FinalMeasure { .. } => {}
        }
        inject(&mut err, Site::AfterInit);
        inject(&mut err, Site::AfterCx);
    }
    let residual = BitVec::from_bools(&(0..c.n_code).map(|q| err.get(q)).collect::<Vec<_>>());
    (flags, residual)
}

#[derive(Clone, Copy)]
struct Effect {
    flags: u128,
    key: u128,
}

struct Effects {
    /// Per location, per variant.
    table: Vec<Vec<Effect>>,
}

/// Compresses flag masks to pivot coordinates of their span, which keeps
/// "no flag raised" exact.
fn compress_flags(masks: &[BitVec], n_flags: usize) -> Result<Vec<u128>, VerifyError> {
    if n_flags <= 128 {
        return Ok(masks.iter().map(|m| m.to_u128()).collect());
    }
    let rows: Vec<BitVec> = masks.iter().filter(|m| !m.is_zero()).cloned().collect();
    let pivots = Gf2Matrix::from_rows(n_flags, rows).expect("widths agree").rref().pivots;
    if pivots.len() > 128 {
        return Err(VerifyError::TooManyFlags(pivots.len()));
    }
    Ok(masks.iter().map(|m| m.select(&pivots).to_u128()).collect())
}

fn effects(
    c: &Circuit,
    locations: &[FaultLocation],
    table: &CosetWeightTable,
) -> Result<Effects, VerifyError> {
    let mut masks = Vec::new();
    let mut keys = Vec::new();
    for (li, loc) in locations.iter().enumerate() {
        for v in 0..loc.variants.len() {
            let (flags, residual) = propagate(c, locations, &[Fault { location: li, variant: v }]);
            masks.push(flags);
            keys.push(table.key(&residual));
        }
    }
    let flags = compress_flags(&masks, c.n_flags)?;
    let mut it = flags.into_iter().zip(keys);
    let table = locations
        .iter()
        .map(|loc| {
            (0..loc.variants.len())
                .map(|_| {
                    let (flags, key) = it.next().unwrap();
                    Effect { flags, key }
                })
                .collect()
        })
        .collect();
    Ok(Effects { table })
}

/// Number of fault combinations with at most `t` faults.
pub fn combination_count(locations: &[FaultLocation], t: usize) -> u128 {
    // Distinct locations, any variant each: elementary symmetric sums.
    let mut e = vec![0u128; t + 1];
    e[0] = 1;
    for loc in locations {
        let v = loc.variants.len() as u128;
        for f in (1..=t).rev() {
            e[f] = e[f].saturating_add(e[f - 1].saturating_mul(v));
        }
    }
    e.iter().skip(1).fold(0u128, |a, &b| a.saturating_add(b))
}

struct Dfs<'a> {
    effects: &'a Effects,
    weights: &'a CosetWeightTable,
    t: usize,
    stack: Vec<Fault>,
}

impl Dfs<'_> {
    /// Extends the current combination with faults at locations >= `from`.
    fn run(&mut self, from: usize, flags: u128, key: u128) -> Option<Vec<Fault>> {
        let depth = self.stack.len();
        if depth > 0 && flags == 0 && self.weights.weight_of_key(key) > depth {
            return Some(self.stack.clone());
        }
        if depth == self.t {
            return None;
        }
        for li in from..self.effects.table.len() {
            for (vi, e) in self.effects.table[li].iter().enumerate() {
                self.stack.push(Fault { location: li, variant: vi });
                let found = self.run(li + 1, flags ^ e.flags, key ^ e.key);
                self.stack.pop();
                if found.is_some() {
                    return found;
                }
            }
        }
        None
    }
}

/// Checks every combination of at most `t` faults of the given type: each
/// must raise a flag or leave a residual of reduced weight at most the
/// number of faults.
pub fn verify_fault_tolerance(
    c: &Circuit,
    state: &CssState,
    t: usize,
    kind: ErrorType,
) -> Result<Verdict, VerifyError> {
    verify_with_cap(c, state, t, kind, DEFAULT_COMBINATION_CAP)
}

pub fn verify_with_cap(
    c: &Circuit,
    state: &CssState,
    t: usize,
    kind: ErrorType,
    cap: u128,
) -> Result<Verdict, VerifyError> {
    let locations = enumerate_fault_locations(c, kind);
    let combinations = combination_count(&locations, t);
    if combinations > cap {
        return Err(VerifyError::BudgetExhausted {
            combinations,
            cap,
            locations: locations.len(),
            variants: locations.iter().map(|l| l.variants.len()).sum(),
        });
    }
    let weights = CosetWeightTable::build(state, kind)?;
    let effects = effects(c, &locations, &weights)?;
    if t == 0 {
        return Ok(Verdict::Pass);
    }
    // The first fault's location splits the work; the lowest index wins so
    // the reported counterexample does not depend on thread timing.
    let found = (0..locations.len()).into_par_iter().find_map_first(|li| {
        let mut dfs = Dfs { effects: &effects, weights: &weights, t, stack: Vec::with_capacity(t) };
        for (vi, e) in effects.table[li].iter().enumerate() {
            dfs.stack.push(Fault { location: li, variant: vi });
            let r = dfs.run(li + 1, e.flags, e.key);
            dfs.stack.pop();
            if r.is_some() {
                return r;
            }
        }
        None
    });
    Ok(match found {
        None => Verdict::Pass,
        Some(faults) => {
            let (_, residual) = propagate(c, &locations, &faults);
            let reduced_weight = weights.weight(&residual);
            Verdict::Counterexample(Counterexample { faults, residual, reduced_weight })
        }
    })
}

/// Upper bound used in reports: combinations if every location had three
/// variants.
pub fn naive_combination_bound(locations: usize, t: usize) -> u128 {
    (1..=t).map(|f| binomial(locations, f) * 3u128.pow(f as u32)).sum()
}
