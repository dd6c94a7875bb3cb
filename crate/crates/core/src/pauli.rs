//! Pauli operators in binary symplectic form, phases ignored.

use std::fmt;

use thiserror::Error;

use crate::gf2::BitVec;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PauliError {
    #[error("group of {0} generators is too large to enumerate (cap 2^{1})")]
    GroupTooLarge(usize, u32),
    #[error("invalid Pauli character {0:?}")]
    InvalidChar(char),
    #[error("operators act on {0} and {1} qubits")]
    LengthMismatch(usize, usize),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, serde::Serialize, serde::Deserialize)]
pub enum ErrorType {
    X,
    Z,
}

impl ErrorType {
    pub fn dual(self) -> ErrorType {
        match self {
            ErrorType::X => ErrorType::Z,
            ErrorType::Z => ErrorType::X,
        }
    }
}

impl fmt::Display for ErrorType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ErrorType::X => "X",
            ErrorType::Z => "Z",
        })
    }
}

impl std::str::FromStr for ErrorType {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "X" | "x" => Ok(ErrorType::X),
            "Z" | "z" => Ok(ErrorType::Z),
            other => Err(format!("unknown error type {other:?}")),
        }
    }
}

/// Single-qubit Pauli without phase.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Pauli {
    I,
    X,
    Y,
    Z,
}

impl Pauli {
    pub const NON_IDENTITY: [Pauli; 3] = [Pauli::X, Pauli::Y, Pauli::Z];

    pub fn from_bits(x: bool, z: bool) -> Pauli {
        match (x, z) {
            (false, false) => Pauli::I,
            (true, false) => Pauli::X,
            (true, true) => Pauli::Y,
            (false, true) => Pauli::Z,
        }
    }

    pub fn has_x(self) -> bool {
        matches!(self, Pauli::X | Pauli::Y)
    }

    pub fn has_z(self) -> bool {
        matches!(self, Pauli::Z | Pauli::Y)
    }

    /// Index in {0: I, 1: X, 2: Y, 3: Z} order, matching `from_index`.
    pub fn index(self) -> usize {
        match self {
            Pauli::I => 0,
            Pauli::X => 1,
            Pauli::Y => 2,
            Pauli::Z => 3,
        }
    }

    pub fn from_index(i: usize) -> Pauli {
        [Pauli::I, Pauli::X, Pauli::Y, Pauli::Z][i & 3]
    }
}

#[derive(Clone, PartialEq, Eq, Hash)]
pub struct PauliOperator {
    pub x: BitVec,
    pub z: BitVec,
}

impl PauliOperator {
    pub fn identity(n: usize) -> Self {
        PauliOperator { x: BitVec::zeros(n), z: BitVec::zeros(n) }
    }

    pub fn from_parts(x: BitVec, z: BitVec) -> Result<Self, PauliError> {
        if x.len() != z.len() {
            return Err(PauliError::LengthMismatch(x.len(), z.len()));
        }
        Ok(PauliOperator { x, z })
    }

    pub fn x_type(support: BitVec) -> Self {
        let n = support.len();
        PauliOperator { x: support, z: BitVec::zeros(n) }
    }

    pub fn z_type(support: BitVec) -> Self {
        let n = support.len();
        PauliOperator { x: BitVec::zeros(n), z: support }
    }

    pub fn of_type(kind: ErrorType, support: BitVec) -> Self {
        match kind {
            ErrorType::X => Self::x_type(support),
            ErrorType::Z => Self::z_type(support),
        }
    }

    pub fn single(n: usize, qubit: usize, p: Pauli) -> Self {
        let mut op = Self::identity(n);
        op.set(qubit, p);
        op
    }

    /// Parses a string like `XIZY`.
    pub fn parse(s: &str) -> Result<Self, PauliError> {
        let chars: Vec<char> = s.chars().filter(|c| !c.is_whitespace()).collect();
        let mut op = Self::identity(chars.len());
        for (i, c) in chars.into_iter().enumerate() {
            let p = match c {
                'I' | '_' => Pauli::I,
                'X' => Pauli::X,
                'Y' => Pauli::Y,
                'Z' => Pauli::Z,
                other => return Err(PauliError::InvalidChar(other)),
            };
            op.set(i, p);
        }
        Ok(op)
    }

    pub fn num_qubits(&self) -> usize {
        self.x.len()
    }

    pub fn get(&self, q: usize) -> Pauli {
        Pauli::from_bits(self.x.get(q), self.z.get(q))
    }

    pub fn set(&mut self, q: usize, p: Pauli) {
        self.x.set(q, p.has_x());
        self.z.set(q, p.has_z());
    }

    /// Multiplies in a single-qubit Pauli at `q`.
    pub fn apply(&mut self, q: usize, p: Pauli) {
        if p.has_x() {
            self.x.flip(q);
        }
        if p.has_z() {
            self.z.flip(q);
        }
    }

    pub fn component(&self, kind: ErrorType) -> &BitVec {
        match kind {
            ErrorType::X => &self.x,
            ErrorType::Z => &self.z,
        }
    }

    pub fn weight(&self) -> usize {
        self.support().len()
    }

    pub fn support(&self) -> Vec<usize> {
        (0..self.num_qubits()).filter(|&q| self.x.get(q) || self.z.get(q)).collect()
    }

    pub fn is_identity(&self) -> bool {
        self.x.is_zero() && self.z.is_zero()
    }

    pub fn commutes(&self, other: &PauliOperator) -> bool {
        self.x.dot(&other.z) == self.z.dot(&other.x)
    }

    /// Product up to phase.
    pub fn mul(&self, other: &PauliOperator) -> PauliOperator {
        PauliOperator { x: self.x.xor(&other.x), z: self.z.xor(&other.z) }
    }

    pub fn mul_assign(&mut self, other: &PauliOperator) {
        self.x.xor_assign(&other.x);
        self.z.xor_assign(&other.z);
    }

    /// Conjugation by CX(control, target): X spreads forward, Z backward.
    pub fn conjugate_cx(&mut self, control: usize, target: usize) {
        if self.x.get(control) {
            self.x.flip(target);
        }
        if self.z.get(target) {
            self.z.flip(control);
        }
    }

    pub fn conjugate_h(&mut self, q: usize) {
        let (x, z) = (self.x.get(q), self.z.get(q));
        self.x.set(q, z);
        self.z.set(q, x);
    }

    /// Swaps the X and Z parts (transversal Hadamard).
    pub fn hadamard_all(&self) -> PauliOperator {
        PauliOperator { x: self.z.clone(), z: self.x.clone() }
    }

    /// Restriction to the listed qubits, in the listed order.
    pub fn restrict(&self, qubits: &[usize]) -> PauliOperator {
        PauliOperator { x: self.x.select(qubits), z: self.z.select(qubits) }
    }
}

impl fmt::Display for PauliOperator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for q in 0..self.num_qubits() {
            let c = match self.get(q) {
                Pauli::I => 'I',
                Pauli::X => 'X',
                Pauli::Y => 'Y',
                Pauli::Z => 'Z',
            };
            write!(f, "{c}")?;
        }
        Ok(())
    }
}

impl fmt::Debug for PauliOperator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Pauli({self})")
    }
}

pub const GROUP_ENUMERATION_CAP: u32 = 24;

/// Minimum weight of `e * g` over the group generated by `generators`,
/// by Gray-code enumeration of all 2^k elements.
pub fn min_weight_modulo(e: &PauliOperator, generators: &[PauliOperator]) -> Result<usize, PauliError> {
    let k = generators.len();
    if k > GROUP_ENUMERATION_CAP as usize {
        return Err(PauliError::GroupTooLarge(k, GROUP_ENUMERATION_CAP));
    }
    for g in generators {
        if g.num_qubits() != e.num_qubits() {
            return Err(PauliError::LengthMismatch(g.num_qubits(), e.num_qubits()));
        }
    }
    let mut cur = e.clone();
    let mut best = cur.weight();
    for i in 1u64..(1u64 << k) {
        let flip = i.trailing_zeros() as usize;
        cur.mul_assign(&generators[flip]);
        best = best.min(cur.weight());
    }
    Ok(best)
}
