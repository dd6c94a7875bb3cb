//! CSS codes and the logical states prepared from them.

use std::fmt;

use thiserror::Error;

use crate::gf2::{BitVec, EchelonBasis, Gf2Matrix};
use crate::pauli::{ErrorType, PauliOperator};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CssError {
    #[error("invalid CSS state: {}", .0.join("; "))]
    Validation(Vec<String>),
    #[error("coset space of 2^{0} elements exceeds the 2^{1} cap")]
    TooManyCosets(usize, usize),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum StateLabel {
    /// All logical qubits in |0>, stabilized by every logical Z.
    Zero,
    /// All logical qubits in |+>, stabilized by every logical X.
    Plus,
}

impl fmt::Display for StateLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            StateLabel::Zero => "zero",
            StateLabel::Plus => "plus",
        })
    }
}

impl std::str::FromStr for StateLabel {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "zero" | "0" | "|0>" => Ok(StateLabel::Zero),
            "plus" | "+" | "|+>" => Ok(StateLabel::Plus),
            other => Err(format!("unknown state label {other:?}")),
        }
    }
}

/// A CSS state: stabilizer generators of both types plus the logical
/// operators, with `label` selecting which logicals stabilize the state.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CssState {
    pub name: String,
    pub n: usize,
    pub k: usize,
    pub d: usize,
    pub x_generators: Vec<BitVec>,
    pub z_generators: Vec<BitVec>,
    pub logical_x: Vec<BitVec>,
    pub logical_z: Vec<BitVec>,
    pub label: StateLabel,
}

impl CssState {
    /// Number of errors of one type guaranteed correctable, floor((d-1)/2).
    pub fn t(&self) -> usize {
        self.d.saturating_sub(1) / 2
    }

    fn generators(&self, kind: ErrorType) -> &[BitVec] {
        match kind {
            ErrorType::X => &self.x_generators,
            ErrorType::Z => &self.z_generators,
        }
    }

    /// Logical operators of the given Pauli type that stabilize the state.
    pub fn stabilizing_logicals(&self, kind: ErrorType) -> &[BitVec] {
        match (kind, self.label) {
            (ErrorType::Z, StateLabel::Zero) => &self.logical_z,
            (ErrorType::X, StateLabel::Plus) => &self.logical_x,
            _ => &[],
        }
    }

    /// All stabilizers of the state of one Pauli type (generators first).
    pub fn stabilizer_group(&self, kind: ErrorType) -> Vec<BitVec> {
        let mut g = self.generators(kind).to_vec();
        g.extend(self.stabilizing_logicals(kind).iter().cloned());
        g
    }

    /// Group that errors of type `err` are reduced modulo.
    pub fn reduction_group(&self, err: ErrorType) -> Vec<BitVec> {
        self.stabilizer_group(err)
    }

    pub fn reduction_operators(&self, err: ErrorType) -> Vec<PauliOperator> {
        self.reduction_group(err).into_iter().map(|v| PauliOperator::of_type(err, v)).collect()
    }

    /// Generators detecting errors of type `err` (the opposite type).
    pub fn check_generators(&self, err: ErrorType) -> &[BitVec] {
        self.generators(err.dual())
    }

    /// Logicals of the opposite type whose anticommutation defines the class.
    pub fn class_operators(&self, err: ErrorType) -> &[BitVec] {
        self.stabilizing_logicals(err.dual())
    }

    pub fn num_syndrome_bits(&self, err: ErrorType) -> usize {
        self.check_generators(err).len()
    }

    pub fn num_class_bits(&self, err: ErrorType) -> usize {
        self.class_operators(err).len()
    }

    /// Error type whose classes decide logical failure for this state.
    pub fn decoding_type(&self) -> ErrorType {
        match self.label {
            StateLabel::Zero => ErrorType::X,
            StateLabel::Plus => ErrorType::Z,
        }
    }

    pub fn syndrome(&self, err: ErrorType, e: &BitVec) -> BitVec {
        BitVec::from_bools(&self.check_generators(err).iter().map(|g| g.dot(e)).collect::<Vec<_>>())
    }

    pub fn class(&self, err: ErrorType, e: &BitVec) -> BitVec {
        BitVec::from_bools(&self.class_operators(err).iter().map(|g| g.dot(e)).collect::<Vec<_>>())
    }

    /// Per-qubit coset keys: syndrome bits first, then class bits.
    pub fn coset_columns(&self, err: ErrorType) -> Vec<u128> {
        let checks: Vec<&BitVec> =
            self.check_generators(err).iter().chain(self.class_operators(err)).collect();
        assert!(checks.len() <= 128, "coset keys wider than 128 bits");
        (0..self.n)
            .map(|q| {
                checks.iter().enumerate().fold(0u128, |acc, (i, g)| acc | ((g.get(q) as u128) << i))
            })
            .collect()
    }

    pub fn coset_key(&self, err: ErrorType, e: &BitVec) -> u128 {
        let cols = self.coset_columns(err);
        e.ones().fold(0u128, |acc, q| acc ^ cols[q])
    }

    /// The same state in the Hadamard-conjugated frame: X and Z swap roles.
    pub fn hadamard_conjugate(&self) -> CssState {
        CssState {
            name: self.name.clone(),
            n: self.n,
            k: self.k,
            d: self.d,
            x_generators: self.z_generators.clone(),
            z_generators: self.x_generators.clone(),
            logical_x: self.logical_z.clone(),
            logical_z: self.logical_x.clone(),
            label: match self.label {
                StateLabel::Zero => StateLabel::Plus,
                StateLabel::Plus => StateLabel::Zero,
            },
        }
    }

    /// Full list of stabilizers of the prepared state as Pauli operators.
    pub fn stabilizer_operators(&self) -> Vec<PauliOperator> {
        let mut ops: Vec<PauliOperator> =
            self.stabilizer_group(ErrorType::X).into_iter().map(PauliOperator::x_type).collect();
        ops.extend(self.stabilizer_group(ErrorType::Z).into_iter().map(PauliOperator::z_type));
        ops
    }

    pub fn validate(&self) -> Result<(), CssError> {
        let mut failures = Vec::new();
        let all = self
            .x_generators
            .iter()
            .chain(&self.z_generators)
            .chain(&self.logical_x)
            .chain(&self.logical_z);
        if all.clone().any(|v| v.len() != self.n) {
            failures.push(format!("operator length differs from n={}", self.n));
            return Err(CssError::Validation(failures));
        }
        if self.logical_x.len() != self.k || self.logical_z.len() != self.k {
            failures.push(format!(
                "expected {} logical pairs, found {} X and {} Z",
                self.k,
                self.logical_x.len(),
                self.logical_z.len()
            ));
        }
        for (i, gx) in self.x_generators.iter().enumerate() {
            for (j, gz) in self.z_generators.iter().enumerate() {
                if gx.dot(gz) {
                    failures.push(format!("X generator {i} anticommutes with Z generator {j}"));
                }
            }
        }
        let rank = |rows: &[BitVec]| {
            Gf2Matrix::from_rows(self.n, rows.to_vec()).map(|m| m.rank()).unwrap_or(0)
        };
        let (rx, rz) = (rank(&self.x_generators), rank(&self.z_generators));
        if rx != self.x_generators.len() {
            failures.push("X generators are linearly dependent".into());
        }
        if rz != self.z_generators.len() {
            failures.push("Z generators are linearly dependent".into());
        }
        if rx + rz + self.k != self.n {
            failures.push(format!("k={} but n - rank_x - rank_z = {}", self.k, self.n as isize - (rx + rz) as isize));
        }
        for (i, lx) in self.logical_x.iter().enumerate() {
            if self.z_generators.iter().any(|g| g.dot(lx)) {
                failures.push(format!("logical X {i} anticommutes with a Z generator"));
            }
        }
        for (i, lz) in self.logical_z.iter().enumerate() {
            if self.x_generators.iter().any(|g| g.dot(lz)) {
                failures.push(format!("logical Z {i} anticommutes with an X generator"));
            }
        }
        for (i, lx) in self.logical_x.iter().enumerate() {
            for (j, lz) in self.logical_z.iter().enumerate() {
                if lx.dot(lz) != (i == j) {
                    failures.push(format!("logical X {i} and logical Z {j} have the wrong pairing"));
                }
            }
        }
        let mut bx = EchelonBasis::new();
        self.x_generators.iter().for_each(|g| {
            bx.insert(g);
        });
        if self.logical_x.iter().any(|l| !bx.insert(l)) {
            failures.push("logical X operators are not independent of the X stabilizers".into());
        }
        let mut bz = EchelonBasis::new();
        self.z_generators.iter().for_each(|g| {
            bz.insert(g);
        });
        if self.logical_z.iter().any(|l| !bz.insert(l)) {
            failures.push("logical Z operators are not independent of the Z stabilizers".into());
        }
        if failures.is_empty() {
            Ok(())
        } else {
            Err(CssError::Validation(failures))
        }
    }
}

pub const COSET_BITS_CAP: usize = 24;

/// Minimum weight of every coset of `type` errors modulo the state's
/// reduction group, indexed by coset key.
#[derive(Clone, Debug)]
pub struct CosetWeightTable {
    pub kind: ErrorType,
    pub bits: usize,
    pub columns: Vec<u128>,
    weights: Vec<u8>,
}

impl CosetWeightTable {
    pub fn build(state: &CssState, kind: ErrorType) -> Result<Self, CssError> {
        let bits = state.num_syndrome_bits(kind) + state.num_class_bits(kind);
        if bits > COSET_BITS_CAP {
            return Err(CssError::TooManyCosets(bits, COSET_BITS_CAP));
        }
        let columns = state.coset_columns(kind);
        let size = 1usize << bits;
        let mut weights = vec![u8::MAX; size];
        weights[0] = 0;
        let mut frontier = vec![0u32];
        let mut w = 0u8;
        while !frontier.is_empty() {
            let mut next = Vec::new();
            for &key in &frontier {
                for &c in &columns {
                    let nk = key as usize ^ c as usize;
                    if weights[nk] == u8::MAX {
                        weights[nk] = w + 1;
                        next.push(nk as u32);
                    }
                }
            }
            frontier = next;
            w += 1;
        }
        Ok(CosetWeightTable { kind, bits, columns, weights })
    }

    #[inline]
    pub fn weight_of_key(&self, key: u128) -> usize {
        self.weights[key as usize] as usize
    }

    pub fn key(&self, e: &BitVec) -> u128 {
        e.ones().fold(0u128, |acc, q| acc ^ self.columns[q])
    }

    pub fn weight(&self, e: &BitVec) -> usize {
        self.weight_of_key(self.key(e))
    }

    /// Largest minimum weight over all cosets.
    pub fn max_weight(&self) -> usize {
        self.weights.iter().map(|&w| w as usize).max().unwrap_or(0)
    }
}

/// Maximum minimal weight of a `kind` error modulo the state's stabilizers.
pub fn max_coset_weight(state: &CssState, kind: ErrorType) -> Result<usize, CssError> {
    Ok(CosetWeightTable::build(state, kind)?.max_weight())
}
