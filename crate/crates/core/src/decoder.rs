//! Two-layer look-up-table decoding: a circuit-level table trained on
//! simulated (syndrome, class) samples, backed by a code-capacity
//! minimum-weight table.

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::combin::{binomial, for_each_combination};
use crate::css::CssState;
use crate::noise::{join_key, split_key, wilson_interval_f64, OutcomeHistogram};
use crate::pauli::ErrorType;

#[derive(Debug, Error)]
pub enum DecoderError {
    #[error("{count} errors up to weight {w_max} exceed the enumeration cap of {cap}")]
    TooManyErrors { count: u128, w_max: usize, cap: u128 },
    #[error("syndrome {syndrome:#x} maps to classes {a:#x} and {b:#x} at weight {weight}, within the guaranteed radius")]
    ClassConflict { syndrome: u128, a: u128, b: u128, weight: usize },
}

pub const MW_ENUMERATION_CAP: u128 = 10_000_000;

/// Per-syndrome class histogram with its argmax.
#[derive(Clone, Debug, Default, Serialize, Deserialize, PartialEq)]
pub struct MlTable {
    pub syndrome_bits: usize,
    pub counts: BTreeMap<u128, BTreeMap<u128, f64>>,
    pub best: BTreeMap<u128, u128>,
}

impl MlTable {
    pub fn lookup(&self, syndrome: u128) -> Option<u128> {
        self.best.get(&syndrome).copied()
    }

    pub fn len(&self) -> usize {
        self.best.len()
    }

    pub fn is_empty(&self) -> bool {
        self.best.is_empty()
    }
}

/// Builds the table from accepted training outcomes keyed by coset key.
/// Ties go to the smallest class value.
pub fn build_ml_lut(training: &OutcomeHistogram, syndrome_bits: usize) -> MlTable {
    let mut counts: BTreeMap<u128, BTreeMap<u128, f64>> = BTreeMap::new();
    for (key, w) in training.sorted() {
        let (s, c) = split_key(key, syndrome_bits);
        *counts.entry(s).or_default().entry(c).or_insert(0.0) += w;
    }
    let best = counts
        .iter()
        .map(|(&s, cls)| {
            let mut top = (0u128, f64::NEG_INFINITY);
            for (&c, &w) in cls {
                if w > top.1 {
                    top = (c, w);
                }
            }
            (s, top.0)
        })
        .collect();
    MlTable { syndrome_bits, counts, best }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MwEntry {
    pub class: u128,
    pub weight: usize,
}

#[derive(Clone, Debug, Default, Serialize, Deserialize, PartialEq)]
pub struct MwTable {
    pub kind: Option<ErrorType>,
    pub w_max: usize,
    pub entries: HashMap<u128, MwEntry>,
    /// Same-weight collisions with differing classes beyond the guaranteed
    /// radius; the first class seen is kept.
    pub conflicts: usize,
}

impl MwTable {
    pub fn lookup(&self, syndrome: u128) -> Option<MwEntry> {
        self.entries.get(&syndrome).copied()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// Enumerates all `kind` errors of weight 1..=w_max on the ideal state.
pub fn build_mw_lut(state: &CssState, kind: ErrorType, w_max: usize) -> Result<MwTable, DecoderError> {
    let count: u128 = (1..=w_max).map(|w| binomial(state.n, w)).sum();
    if count > MW_ENUMERATION_CAP {
        return Err(DecoderError::TooManyErrors { count, w_max, cap: MW_ENUMERATION_CAP });
    }
    let columns = state.coset_columns(kind);
    let sb = state.num_syndrome_bits(kind);
    let guaranteed = state.d.saturating_sub(1) / 2;
    let mut table = MwTable { kind: Some(kind), w_max, ..Default::default() };
    for w in 1..=w_max {
        let mut failure = None;
        for_each_combination(state.n, w, |qs| {
            let key = qs.iter().fold(0u128, |a, &q| a ^ columns[q]);
            let (s, c) = split_key(key, sb);
            match table.entries.get(&s) {
                None => {
                    table.entries.insert(s, MwEntry { class: c, weight: w });
                }
                Some(e) if e.weight == w && e.class != c => {
                    if w <= guaranteed {
                        failure = Some(DecoderError::ClassConflict { syndrome: s, a: e.class, b: c, weight: w });
                        return false;
                    }
                    table.conflicts += 1;
                }
                Some(_) => {}
            }
            true
        });
        if let Some(e) = failure {
            return Err(e);
        }
    }
    Ok(table)
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DecodePolicy {
    /// Discard syndromes only explained by weight-`t` errors.
    pub even_distance_discard: bool,
    pub t: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Layer {
    Ml,
    Mw,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Decision {
    Class(u128, Layer),
    Discard,
    /// Neither table knows the syndrome; the trivial class is assumed.
    Fallback,
}

impl Decision {
    pub fn class(self) -> Option<u128> {
        match self {
            Decision::Class(c, _) => Some(c),
            Decision::Fallback => Some(0),
            Decision::Discard => None,
        }
    }
}

pub fn decode(syndrome: u128, ml: &MlTable, mw: &MwTable, policy: &DecodePolicy) -> Decision {
    let mw_hit = mw.lookup(syndrome);
    if policy.even_distance_discard && syndrome != 0 {
        if let Some(e) = mw_hit {
            if e.weight == policy.t {
                return Decision::Discard;
            }
        }
    }
    if let Some(c) = ml.lookup(syndrome) {
        return Decision::Class(c, Layer::Ml);
    }
    match mw_hit {
        Some(e) => Decision::Class(e.class, Layer::Mw),
        None if syndrome == 0 => Decision::Class(0, Layer::Mw),
        None => Decision::Fallback,
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    /// Accepted samples (weights) in the test set.
    pub accepted: f64,
    pub discarded: f64,
    pub errors: f64,
    pub ml_hits: f64,
    pub ml_errors: f64,
    pub mw_hits: f64,
    pub mw_errors: f64,
    pub fallback: f64,
    pub fallback_errors: f64,
}

impl Evaluation {
    pub fn kept(&self) -> f64 {
        self.accepted - self.discarded
    }

    pub fn logical_error_rate(&self) -> f64 {
        if self.kept() > 0.0 {
            self.errors / self.kept()
        } else {
            0.0
        }
    }

    pub fn logical_error_interval(&self) -> (f64, f64) {
        if self.kept() <= 0.0 {
            return (0.0, 1.0);
        }
        wilson_interval_f64(self.errors, self.kept(), 0.95)
    }

    /// Fraction of accepted samples not discarded.
    pub fn post_discard_rate(&self) -> f64 {
        if self.accepted > 0.0 {
            self.kept() / self.accepted
        } else {
            1.0
        }
    }
}

pub fn evaluate_test_set(
    test: &OutcomeHistogram,
    syndrome_bits: usize,
    ml: &MlTable,
    mw: &MwTable,
    policy: &DecodePolicy,
) -> Evaluation {
    let mut ev = Evaluation::default();
    for (key, w) in test.sorted() {
        let (s, c) = split_key(key, syndrome_bits);
        ev.accepted += w;
        let d = decode(s, ml, mw, policy);
        let wrong = d.class().is_some_and(|g| g != c);
        match d {
            Decision::Discard => ev.discarded += w,
            Decision::Class(_, Layer::Ml) => {
                ev.ml_hits += w;
                if wrong {
                    ev.ml_errors += w;
                }
            }
            Decision::Class(_, Layer::Mw) => {
                ev.mw_hits += w;
                if wrong {
                    ev.mw_errors += w;
                }
            }
            Decision::Fallback => {
                ev.fallback += w;
                if wrong {
                    ev.fallback_errors += w;
                }
            }
        }
        if wrong {
            ev.errors += w;
        }
    }
    ev
}

/// Decodes an error given directly on the code qubits, for code-capacity checks.
pub fn decode_error(state: &CssState, kind: ErrorType, support: &[usize], mw: &MwTable) -> (u128, Option<u128>) {
    let columns = state.coset_columns(kind);
    let key = support.iter().fold(0u128, |a, &q| a ^ columns[q]);
    let (s, c) = split_key(key, state.num_syndrome_bits(kind));
    let guess = decode(s, &MlTable::default(), mw, &DecodePolicy::default()).class();
    (c, guess)
}

/// Coset key from separate syndrome and class values.
pub fn coset_key(syndrome: u128, class: u128, syndrome_bits: usize) -> u128 {
    join_key(syndrome, class, syndrome_bits)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog;
    use crate::css::StateLabel;

    #[test]
    fn ml_majority_and_ties() {
        let mut h = OutcomeHistogram::default();
        h.add(coset_key(5, 1, 3), 2.0);
        h.add(coset_key(5, 0, 3), 1.0);
        h.add(coset_key(6, 1, 3), 1.0);
        h.add(coset_key(6, 0, 3), 1.0);
        let t = build_ml_lut(&h, 3);
        assert_eq!(t.lookup(5), Some(1));
        assert_eq!(t.lookup(6), Some(0));
        let mut triv = OutcomeHistogram::default();
        triv.add(0, 10.0);
        assert_eq!(build_ml_lut(&triv, 3).lookup(0), Some(0));
    }

    #[test]
    fn mw_sizes() {
        let s = catalog::state("steane", StateLabel::Zero).unwrap();
        assert_eq!(build_mw_lut(&s, ErrorType::X, 1).unwrap().len(), 7);
        assert!(build_mw_lut(&s, ErrorType::X, 0).unwrap().is_empty());
        let g = catalog::state("golay", StateLabel::Zero).unwrap();
        let t = build_mw_lut(&g, ErrorType::X, 3).unwrap();
        assert_eq!(t.len(), 2047);
        assert!((1..2048u128).all(|s| t.lookup(s).is_some()));
        assert_eq!(t.conflicts, 0);
    }

    #[test]
    fn code_capacity_exactness() {
        for name in ["steane", "golay"] {
            let s = catalog::state(name, StateLabel::Zero).unwrap();
            let t = s.t();
            let mw = build_mw_lut(&s, ErrorType::X, t).unwrap();
            for w in 0..=t {
                for_each_combination(s.n, w, |qs| {
                    let (truth, guess) = decode_error(&s, ErrorType::X, qs, &mw);
                    assert_eq!(Some(truth), guess, "{name} {qs:?}");
                    true
                });
            }
        }
    }

    #[test]
    fn unknown_syndrome_falls_back_to_trivial() {
        let ml = MlTable::default();
        let mw = MwTable::default();
        let p = DecodePolicy::default();
        assert_eq!(decode(0, &ml, &mw, &p).class(), Some(0));
        assert_eq!(decode(9, &ml, &mw, &p), Decision::Fallback);
        let mut test = OutcomeHistogram::default();
        test.add(coset_key(9, 1, 4), 1.0);
        test.add(0, 3.0);
        let ev = evaluate_test_set(&test, 4, &ml, &mw, &p);
        assert_eq!(ev.errors, 1.0);
        assert_eq!(ev.fallback_errors, 1.0);
        assert_eq!(ev.logical_error_rate(), 0.25);
    }

    #[test]
    fn even_distance_discard() {
        let s = catalog::default_state("selfdual_20").unwrap();
        assert_eq!(s.d, 6);
        let mw = build_mw_lut(&s, ErrorType::X, 3).unwrap();
        let policy = DecodePolicy { even_distance_discard: true, t: 3 };
        let ml = MlTable::default();
        let columns = s.coset_columns(ErrorType::X);
        let sb = s.num_syndrome_bits(ErrorType::X);
        let mut discarded = 0;
        for_each_combination(s.n, 3, |qs| {
            let key = qs.iter().fold(0u128, |a, &q| a ^ columns[q]);
            let (syn, _) = split_key(key, sb);
            let d = decode(syn, &ml, &mw, &policy);
            assert_eq!(d == Decision::Discard, mw.lookup(syn).unwrap().weight == 3);
            discarded += (d == Decision::Discard) as usize;
            true
        });
        assert!(discarded > 0);
        // Correctable errors are never discarded.
        for_each_combination(s.n, 2, |qs| {
            let key = qs.iter().fold(0u128, |a, &q| a ^ columns[q]);
            let (syn, c) = split_key(key, sb);
            assert_eq!(decode(syn, &ml, &mw, &policy).class(), Some(c));
            true
        });
    }

    #[test]
    fn all_trivial_test_set() {
        let mut h = OutcomeHistogram::default();
        h.add(0, 100.0);
        let ml = build_ml_lut(&h, 3);
        let ev = evaluate_test_set(&h, 3, &ml, &MwTable::default(), &DecodePolicy::default());
        assert_eq!(ev.logical_error_rate(), 0.0);
    }
}
