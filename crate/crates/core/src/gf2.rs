//! Dense linear algebra over GF(2).
//!
//! Vectors are packed into `u64` words; matrices are stored row-major as a
//! list of packed rows, which is the shape every elimination below wants.

use std::fmt;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Gf2Error {
    #[error("matrix is singular")]
    SingularMatrix,
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("invalid bit character {0:?}")]
    InvalidChar(char),
}

#[derive(Clone, PartialEq, Eq, Hash, Default)]
pub struct BitVec {
    len: usize,
    words: Vec<u64>,
}

#[inline]
fn word_count(len: usize) -> usize {
    len.div_ceil(64)
}

impl BitVec {
    pub fn zeros(len: usize) -> Self {
        BitVec { len, words: vec![0; word_count(len)] }
    }

    pub fn from_bools(bits: &[bool]) -> Self {
        let mut v = Self::zeros(bits.len());
        for (i, &b) in bits.iter().enumerate() {
            if b {
                v.set(i, true);
            }
        }
        v
    }

    pub fn from_indices(len: usize, ones: &[usize]) -> Self {
        let mut v = Self::zeros(len);
        for &i in ones {
            v.set(i, true);
        }
        v
    }

    /// Parses a string of `0`/`1` characters; whitespace is ignored.
    pub fn parse(s: &str) -> Result<Self, Gf2Error> {
        let mut bits = Vec::with_capacity(s.len());
        for ch in s.chars() {
            match ch {
                '0' => bits.push(false),
                '1' => bits.push(true),
                c if c.is_whitespace() => {}
                c => return Err(Gf2Error::InvalidChar(c)),
            }
        }
        Ok(Self::from_bools(&bits))
    }

    /// Builds a vector from the low `len` bits of a word (len <= 64).
    pub fn from_u64(len: usize, bits: u64) -> Self {
        assert!(len <= 64);
        let mut v = Self::zeros(len);
        if len > 0 {
            let mask = if len == 64 { u64::MAX } else { (1u64 << len) - 1 };
            v.words[0] = bits & mask;
        }
        v
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn words(&self) -> &[u64] {
        &self.words
    }

    #[inline]
    pub fn get(&self, i: usize) -> bool {
        debug_assert!(i < self.len);
        (self.words[i / 64] >> (i % 64)) & 1 == 1
    }

    #[inline]
    pub fn set(&mut self, i: usize, value: bool) {
        debug_assert!(i < self.len);
        let mask = 1u64 << (i % 64);
        if value {
            self.words[i / 64] |= mask;
        } else {
            self.words[i / 64] &= !mask;
        }
    }

    #[inline]
    pub fn flip(&mut self, i: usize) {
        debug_assert!(i < self.len);
        self.words[i / 64] ^= 1u64 << (i % 64);
    }

    pub fn count_ones(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn is_zero(&self) -> bool {
        self.words.iter().all(|&w| w == 0)
    }

    #[inline]
    pub fn xor_assign(&mut self, other: &BitVec) {
        debug_assert_eq!(self.len, other.len);
        for (a, b) in self.words.iter_mut().zip(&other.words) {
            *a ^= b;
        }
    }

    pub fn xor(&self, other: &BitVec) -> BitVec {
        let mut out = self.clone();
        out.xor_assign(other);
        out
    }

    pub fn and(&self, other: &BitVec) -> BitVec {
        debug_assert_eq!(self.len, other.len);
        BitVec {
            len: self.len,
            words: self.words.iter().zip(&other.words).map(|(a, b)| a & b).collect(),
        }
    }

    /// Inner product over GF(2).
    #[inline]
    pub fn dot(&self, other: &BitVec) -> bool {
        debug_assert_eq!(self.len, other.len);
        let mut acc = 0u32;
        for (a, b) in self.words.iter().zip(&other.words) {
            acc ^= (a & b).count_ones();
        }
        acc & 1 == 1
    }

    pub fn ones(&self) -> impl Iterator<Item = usize> + '_ {
        self.words.iter().enumerate().flat_map(|(wi, &w)| {
            let mut w = w;
            std::iter::from_fn(move || {
                if w == 0 {
                    None
                } else {
                    let tz = w.trailing_zeros() as usize;
                    w &= w - 1;
                    Some(wi * 64 + tz)
                }
            })
        })
    }

    pub fn first_one(&self) -> Option<usize> {
        self.ones().next()
    }

    /// Low word as an integer; only meaningful for vectors of length <= 64.
    pub fn to_u64(&self) -> u64 {
        debug_assert!(self.len <= 64);
        self.words.first().copied().unwrap_or(0)
    }

    /// Packs the vector into a u128 key; panics if longer than 128 bits.
    pub fn to_u128(&self) -> u128 {
        assert!(self.len <= 128, "vector of length {} does not fit in u128", self.len);
        let lo = self.words.first().copied().unwrap_or(0) as u128;
        let hi = self.words.get(1).copied().unwrap_or(0) as u128;
        lo | (hi << 64)
    }

    pub fn from_u128(len: usize, bits: u128) -> Self {
        assert!(len <= 128);
        let mut v = Self::zeros(len);
        for i in 0..len {
            if (bits >> i) & 1 == 1 {
                v.set(i, true);
            }
        }
        v
    }

    pub fn concat(&self, other: &BitVec) -> BitVec {
        let mut out = BitVec::zeros(self.len + other.len);
        for i in self.ones() {
            out.set(i, true);
        }
        for i in other.ones() {
            out.set(self.len + i, true);
        }
        out
    }

    pub fn select(&self, indices: &[usize]) -> BitVec {
        let mut out = BitVec::zeros(indices.len());
        for (j, &i) in indices.iter().enumerate() {
            if self.get(i) {
                out.set(j, true);
            }
        }
        out
    }
}

impl fmt::Display for BitVec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for i in 0..self.len {
            f.write_str(if self.get(i) { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl fmt::Debug for BitVec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "BitVec({self})")
    }
}

#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Gf2Matrix {
    cols: usize,
    rows: Vec<BitVec>,
}

/// Result of Gauss-Jordan elimination: `transform * original == reduced`.
#[derive(Clone, Debug)]
pub struct Rref {
    pub reduced: Gf2Matrix,
    pub pivots: Vec<usize>,
    pub transform: Gf2Matrix,
}

impl Rref {
    pub fn rank(&self) -> usize {
        self.pivots.len()
    }
}

impl Gf2Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Gf2Matrix { cols, rows: vec![BitVec::zeros(cols); rows] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.set(i, i, true);
        }
        m
    }

    pub fn from_rows(cols: usize, rows: Vec<BitVec>) -> Result<Self, Gf2Error> {
        if let Some(bad) = rows.iter().find(|r| r.len() != cols) {
            return Err(Gf2Error::DimensionMismatch(format!(
                "row of length {} in matrix with {cols} columns",
                bad.len()
            )));
        }
        Ok(Gf2Matrix { cols, rows })
    }

    /// Convenience constructor from rows of 0/1 integers.
    pub fn from_bits(rows: &[&[u8]]) -> Self {
        let cols = rows.first().map_or(0, |r| r.len());
        let rows = rows
            .iter()
            .map(|r| {
                assert_eq!(r.len(), cols, "ragged rows");
                BitVec::from_bools(&r.iter().map(|&b| b != 0).collect::<Vec<_>>())
            })
            .collect();
        Gf2Matrix { cols, rows }
    }

    pub fn parse_rows(rows: &[&str]) -> Result<Self, Gf2Error> {
        let parsed = rows.iter().map(|r| BitVec::parse(r)).collect::<Result<Vec<_>, _>>()?;
        let cols = parsed.first().map_or(0, |r| r.len());
        Self::from_rows(cols, parsed)
    }

    pub fn num_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn num_cols(&self) -> usize {
        self.cols
    }

    pub fn rows(&self) -> &[BitVec] {
        &self.rows
    }

    pub fn row(&self, i: usize) -> &BitVec {
        &self.rows[i]
    }

    pub fn into_rows(self) -> Vec<BitVec> {
        self.rows
    }

    pub fn get(&self, r: usize, c: usize) -> bool {
        self.rows[r].get(c)
    }

    pub fn set(&mut self, r: usize, c: usize, value: bool) {
        self.rows[r].set(c, value)
    }

    pub fn push_row(&mut self, row: BitVec) {
        assert_eq!(row.len(), self.cols);
        self.rows.push(row);
    }

    pub fn column(&self, c: usize) -> BitVec {
        let mut v = BitVec::zeros(self.rows.len());
        for (i, r) in self.rows.iter().enumerate() {
            if r.get(c) {
                v.set(i, true);
            }
        }
        v
    }

    pub fn transpose(&self) -> Gf2Matrix {
        let mut t = Gf2Matrix::zeros(self.cols, self.rows.len());
        for (i, r) in self.rows.iter().enumerate() {
            for j in r.ones() {
                t.set(j, i, true);
            }
        }
        t
    }

    pub fn mul(&self, other: &Gf2Matrix) -> Result<Gf2Matrix, Gf2Error> {
        if self.cols != other.num_rows() {
            return Err(Gf2Error::DimensionMismatch(format!(
                "{}x{} times {}x{}",
                self.num_rows(),
                self.cols,
                other.num_rows(),
                other.cols
            )));
        }
        let rows = self
            .rows
            .iter()
            .map(|r| {
                let mut acc = BitVec::zeros(other.cols);
                for k in r.ones() {
                    acc.xor_assign(&other.rows[k]);
                }
                acc
            })
            .collect();
        Ok(Gf2Matrix { cols: other.cols, rows })
    }

    /// Matrix-vector product `M v`.
    pub fn mul_vec(&self, v: &BitVec) -> BitVec {
        assert_eq!(v.len(), self.cols);
        BitVec::from_bools(&self.rows.iter().map(|r| r.dot(v)).collect::<Vec<_>>())
    }

    pub fn select_columns(&self, cols: &[usize]) -> Gf2Matrix {
        Gf2Matrix { cols: cols.len(), rows: self.rows.iter().map(|r| r.select(cols)).collect() }
    }

    pub fn select_rows(&self, rows: &[usize]) -> Gf2Matrix {
        Gf2Matrix { cols: self.cols, rows: rows.iter().map(|&i| self.rows[i].clone()).collect() }
    }

    pub fn vstack(&self, other: &Gf2Matrix) -> Result<Gf2Matrix, Gf2Error> {
        if self.cols != other.cols {
            return Err(Gf2Error::DimensionMismatch("vstack column counts differ".into()));
        }
        let mut rows = self.rows.clone();
        rows.extend(other.rows.iter().cloned());
        Ok(Gf2Matrix { cols: self.cols, rows })
    }

    pub fn is_identity(&self) -> bool {
        self.rows.len() == self.cols
            && self.rows.iter().enumerate().all(|(i, r)| r.count_ones() == 1 && r.get(i))
    }

    pub fn count_ones(&self) -> usize {
        self.rows.iter().map(BitVec::count_ones).sum()
    }

    /// Reduced row echelon form, scanning columns left to right.
    pub fn rref(&self) -> Rref {
        let order: Vec<usize> = (0..self.cols).collect();
        self.rref_with_column_order(&order)
    }

    /// Gauss-Jordan elimination where pivot columns are searched in the given
    /// order. Columns missing from `order` are never used as pivots.
    pub fn rref_with_column_order(&self, order: &[usize]) -> Rref {
        let m = self.rows.len();
        let mut rows = self.rows.clone();
        let mut tr: Vec<BitVec> = (0..m).map(|i| BitVec::from_indices(m, &[i])).collect();
        let mut pivots = Vec::new();
        let mut r = 0;
        for &c in order {
            if r == m {
                break;
            }
            let Some(p) = (r..m).find(|&i| rows[i].get(c)) else { continue };
            rows.swap(r, p);
            tr.swap(r, p);
            let (pivot_row, pivot_tr) = (rows[r].clone(), tr[r].clone());
            for i in 0..m {
                if i != r && rows[i].get(c) {
                    rows[i].xor_assign(&pivot_row);
                    tr[i].xor_assign(&pivot_tr);
                }
            }
            pivots.push(c);
            r += 1;
        }
        Rref {
            reduced: Gf2Matrix { cols: self.cols, rows },
            pivots,
            transform: Gf2Matrix { cols: m, rows: tr },
        }
    }

    pub fn rank(&self) -> usize {
        self.rref().rank()
    }

    pub fn inverse(&self) -> Result<Gf2Matrix, Gf2Error> {
        if self.rows.len() != self.cols {
            return Err(Gf2Error::DimensionMismatch(format!(
                "inverse of non-square {}x{} matrix",
                self.rows.len(),
                self.cols
            )));
        }
        let rref = self.rref();
        if rref.rank() < self.cols {
            return Err(Gf2Error::SingularMatrix);
        }
        // Pivots come out in column order, so the transform is the inverse.
        Ok(rref.transform)
    }

    /// Basis of the right null space `{v : M v = 0}`, one vector per row.
    pub fn kernel(&self) -> Gf2Matrix {
        let rref = self.rref();
        let pivot_set: Vec<Option<usize>> = {
            let mut p = vec![None; self.cols];
            for (row, &c) in rref.pivots.iter().enumerate() {
                p[c] = Some(row);
            }
            p
        };
        let mut basis = Vec::new();
        for free in (0..self.cols).filter(|&c| pivot_set[c].is_none()) {
            let mut v = BitVec::zeros(self.cols);
            v.set(free, true);
            for (row, &c) in rref.pivots.iter().enumerate() {
                if rref.reduced.get(row, free) {
                    v.set(c, true);
                }
            }
            basis.push(v);
        }
        Gf2Matrix { cols: self.cols, rows: basis }
    }

    /// True when `v` lies in the row space.
    pub fn row_space_contains(&self, v: &BitVec) -> bool {
        let mut ext = self.clone();
        let before = ext.rank();
        ext.push_row(v.clone());
        ext.rank() == before
    }
}

impl fmt::Debug for Gf2Matrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "Gf2Matrix {}x{} [", self.rows.len(), self.cols)?;
        for r in &self.rows {
            writeln!(f, "  {r}")?;
        }
        write!(f, "]")
    }
}

/// Incremental row basis in echelon form; used to test membership quickly.
#[derive(Clone, Debug, Default)]
pub struct EchelonBasis {
    rows: Vec<(usize, BitVec)>,
}

impl EchelonBasis {
    pub fn new() -> Self {
        Self::default()
    }

    /// Reduces `v` against the basis and returns the remainder.
    pub fn reduce(&self, v: &BitVec) -> BitVec {
        let mut v = v.clone();
        for (pivot, row) in &self.rows {
            if v.get(*pivot) {
                v.xor_assign(row);
            }
        }
        v
    }

    /// Inserts `v`; returns false if it was already in the span.
    pub fn insert(&mut self, v: &BitVec) -> bool {
        let r = self.reduce(v);
        let Some(pivot) = r.first_one() else { return false };
        for (_, row) in self.rows.iter_mut() {
            if row.get(pivot) {
                row.xor_assign(&r);
            }
        }
        self.rows.push((pivot, r));
        true
    }

    pub fn contains(&self, v: &BitVec) -> bool {
        self.reduce(v).is_zero()
    }

    pub fn dim(&self) -> usize {
        self.rows.len()
    }
}
