//! Binary linear algebra over GF(2).
//!
//! [`BinaryMatrix`] keeps both a row view and a column view of its support so
//! that check-node and variable-node neighbourhoods are available without a
//! transpose. Dense elimination (rank, nullspace) works on private bit-packed
//! copies.

pub mod alist;

use std::fmt;

use crate::error::{Error, Result};

/// Nullspace dimension above which [`BinaryMatrix::min_distance_bruteforce`]
/// refuses to enumerate.
pub const MAX_ENUM_DIMENSION: usize = 20;

/// A vector of bits stored one per byte (each entry is 0 or 1).
#[derive(Clone, PartialEq, Eq, Hash, Default)]
pub struct BitVector {
    bits: Vec<u8>,
}

impl BitVector {
    pub fn zeros(len: usize) -> Self {
        Self { bits: vec![0; len] }
    }

    pub fn ones(len: usize) -> Self {
        Self { bits: vec![1; len] }
    }

    /// Builds a vector from 0/1 bytes. Any other value is rejected.
    pub fn from_bits(bits: Vec<u8>) -> Result<Self> {
        if let Some(pos) = bits.iter().position(|&b| b > 1) {
            return Err(Error::InvalidInput(format!(
                "bit at position {pos} is {} (expected 0 or 1)",
                bits[pos]
            )));
        }
        Ok(Self { bits })
    }

    pub fn from_bools<I: IntoIterator<Item = bool>>(iter: I) -> Self {
        Self {
            bits: iter.into_iter().map(u8::from).collect(),
        }
    }

    /// Parses a string of `0`/`1` characters, ignoring whitespace and commas.
    pub fn parse(s: &str) -> Result<Self> {
        let mut bits = Vec::with_capacity(s.len());
        for (pos, ch) in s.chars().enumerate() {
            match ch {
                '0' => bits.push(0),
                '1' => bits.push(1),
                c if c.is_whitespace() || c == ',' => {}
                c => {
                    return Err(Error::InvalidInput(format!(
                        "unexpected character {c:?} at offset {pos} in bit string"
                    )))
                }
            }
        }
        Ok(Self { bits })
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    pub fn get(&self, i: usize) -> bool {
        self.bits[i] != 0
    }

    pub fn set(&mut self, i: usize, value: bool) {
        self.bits[i] = u8::from(value);
    }

    pub fn flip(&mut self, i: usize) {
        self.bits[i] ^= 1;
    }

    /// Hamming weight.
    pub fn weight(&self) -> usize {
        self.bits.iter().filter(|&&b| b != 0).count()
    }

    pub fn is_zero(&self) -> bool {
        self.bits.iter().all(|&b| b == 0)
    }

    pub fn as_slice(&self) -> &[u8] {
        &self.bits
    }

    pub fn iter(&self) -> impl Iterator<Item = bool> + '_ {
        self.bits.iter().map(|&b| b != 0)
    }

    /// Number of positions where `self` and `other` differ.
    pub fn hamming_distance(&self, other: &BitVector) -> usize {
        assert_eq!(self.len(), other.len(), "length mismatch");
        self.bits
            .iter()
            .zip(&other.bits)
            .filter(|(a, b)| a != b)
            .count()
    }

    pub fn concat(&self, other: &BitVector) -> BitVector {
        let mut bits = self.bits.clone();
        bits.extend_from_slice(&other.bits);
        BitVector { bits }
    }

    pub fn into_inner(self) -> Vec<u8> {
        self.bits
    }
}

impl fmt::Display for BitVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &b in &self.bits {
            write!(f, "{b}")?;
        }
        Ok(())
    }
}

impl fmt::Debug for BitVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "BitVector({self})")
    }
}

/// Sparse binary matrix with sorted row and column supports.
#[derive(Clone, PartialEq, Eq)]
pub struct BinaryMatrix {
    rows: usize,
    cols: usize,
    row_support: Vec<Vec<usize>>,
    col_support: Vec<Vec<usize>>,
}

impl BinaryMatrix {
    /// Builds a matrix from the column indices of the ones in each row.
    ///
    /// Supports are sorted; repeated or out-of-range indices are rejected.
    pub fn from_row_supports(
        rows: usize,
        cols: usize,
        mut support: Vec<Vec<usize>>,
    ) -> Result<Self> {
        if support.len() != rows {
            return Err(Error::DimensionMismatch {
                what: "row supports",
                expected: rows,
                found: support.len(),
            });
        }
        let mut col_support = vec![Vec::new(); cols];
        for (r, row) in support.iter_mut().enumerate() {
            row.sort_unstable();
            for w in row.windows(2) {
                if w[0] == w[1] {
                    return Err(Error::InvalidInput(format!(
                        "row {r} lists column {} twice",
                        w[0]
                    )));
                }
            }
            for &c in row.iter() {
                if c >= cols {
                    return Err(Error::InvalidInput(format!(
                        "row {r} references column {c} but the matrix has {cols} columns"
                    )));
                }
                col_support[c].push(r);
            }
        }
        Ok(Self {
            rows,
            cols,
            row_support: support,
            col_support,
        })
    }

    /// Builds a matrix from the row indices of the ones in each column.
    pub fn from_col_supports(rows: usize, cols: usize, support: Vec<Vec<usize>>) -> Result<Self> {
        Ok(Self::from_row_supports(cols, rows, support)?.transpose())
    }

    /// Builds a matrix from dense 0/1 rows; all rows must have equal length.
    pub fn from_dense(dense: &[Vec<u8>]) -> Result<Self> {
        let cols = dense.first().map_or(0, Vec::len);
        let mut support = Vec::with_capacity(dense.len());
        for (r, row) in dense.iter().enumerate() {
            if row.len() != cols {
                return Err(Error::DimensionMismatch {
                    what: "dense row length",
                    expected: cols,
                    found: row.len(),
                });
            }
            let mut s = Vec::new();
            for (c, &v) in row.iter().enumerate() {
                match v {
                    0 => {}
                    1 => s.push(c),
                    other => {
                        return Err(Error::InvalidInput(format!(
                            "entry ({r},{c}) is {other}, expected 0 or 1"
                        )))
                    }
                }
            }
            support.push(s);
        }
        Self::from_row_supports(dense.len(), cols, support)
    }

    pub fn identity(n: usize) -> Self {
        Self::from_row_supports(n, n, (0..n).map(|i| vec![i]).collect())
            .expect("identity is well formed")
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            row_support: vec![Vec::new(); rows],
            col_support: vec![Vec::new(); cols],
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    /// Column indices of the ones in row `r`, increasing.
    pub fn row(&self, r: usize) -> &[usize] {
        &self.row_support[r]
    }

    /// Row indices of the ones in column `c`, increasing.
    pub fn col(&self, c: usize) -> &[usize] {
        &self.col_support[c]
    }

    pub fn row_supports(&self) -> &[Vec<usize>] {
        &self.row_support
    }

    pub fn col_supports(&self) -> &[Vec<usize>] {
        &self.col_support
    }

    pub fn get(&self, r: usize, c: usize) -> bool {
        self.row_support[r].binary_search(&c).is_ok()
    }

    /// Total number of ones (edges of the Tanner graph).
    pub fn nnz(&self) -> usize {
        self.row_support.iter().map(Vec::len).sum()
    }

    pub fn row_weights(&self) -> Vec<usize> {
        self.row_support.iter().map(Vec::len).collect()
    }

    pub fn col_weights(&self) -> Vec<usize> {
        self.col_support.iter().map(Vec::len).collect()
    }

    pub fn transpose(&self) -> Self {
        Self {
            rows: self.cols,
            cols: self.rows,
            row_support: self.col_support.clone(),
            col_support: self.row_support.clone(),
        }
    }

    pub fn to_dense(&self) -> Vec<Vec<u8>> {
        let mut out = vec![vec![0u8; self.cols]; self.rows];
        for (r, row) in self.row_support.iter().enumerate() {
            for &c in row {
                out[r][c] = 1;
            }
        }
        out
    }

    /// Keeps the listed columns, in the given order.
    pub fn select_columns(&self, columns: &[usize]) -> Result<Self> {
        let mut col_support = Vec::with_capacity(columns.len());
        for &c in columns {
            if c >= self.cols {
                return Err(Error::InvalidInput(format!(
                    "column {c} out of range for a matrix with {} columns",
                    self.cols
                )));
            }
            col_support.push(self.col_support[c].clone());
        }
        Self::from_col_supports(self.rows, columns.len(), col_support)
    }

    /// Horizontal concatenation `[self | other]`.
    pub fn hstack(&self, other: &BinaryMatrix) -> Result<Self> {
        if self.rows != other.rows {
            return Err(Error::DimensionMismatch {
                what: "hstack row count",
                expected: self.rows,
                found: other.rows,
            });
        }
        let mut col_support = self.col_support.clone();
        col_support.extend(other.col_support.iter().cloned());
        Self::from_col_supports(self.rows, self.cols + other.cols, col_support)
    }

    /// Vertical concatenation of `self` on top of `other`.
    pub fn vstack(&self, other: &BinaryMatrix) -> Result<Self> {
        Ok(self.transpose().hstack(&other.transpose())?.transpose())
    }

    /// Computes `H·vᵀ` over GF(2).
    pub fn mat_vec(&self, v: &BitVector) -> Result<BitVector> {
        if v.len() != self.cols {
            return Err(Error::DimensionMismatch {
                what: "vector length",
                expected: self.cols,
                found: v.len(),
            });
        }
        let bits = v.as_slice();
        Ok(BitVector {
            bits: self
                .row_support
                .iter()
                .map(|row| row.iter().fold(0u8, |acc, &c| acc ^ bits[c]))
                .collect(),
        })
    }

    /// GF(2) rank by Gaussian elimination.
    pub fn rank(&self) -> usize {
        let mut rows = self.packed_rows();
        let words = words_for(self.cols);
        let mut rank = 0;
        for col in 0..self.cols {
            let (w, mask) = (col / 64, 1u64 << (col % 64));
            let Some(pivot) = (rank..rows.len()).find(|&r| rows[r][w] & mask != 0) else {
                continue;
            };
            rows.swap(rank, pivot);
            let pivot_row = rows[rank].clone();
            for row in &mut rows[rank + 1..] {
                if row[w] & mask != 0 {
                    xor_into(&mut row[..words], &pivot_row);
                }
            }
            rank += 1;
            if rank == rows.len() {
                break;
            }
        }
        rank
    }

    /// A basis of `{x : H·xᵀ = 0}`, with `cols − rank` vectors.
    pub fn nullspace(&self) -> Vec<BitVector> {
        let (rref, pivots) = self.rref();
        let is_pivot = {
            let mut v = vec![false; self.cols];
            for &p in &pivots {
                v[p] = true;
            }
            v
        };
        let mut basis = Vec::new();
        for free in (0..self.cols).filter(|&c| !is_pivot[c]) {
            let mut x = BitVector::zeros(self.cols);
            x.set(free, true);
            let (w, mask) = (free / 64, 1u64 << (free % 64));
            for (r, &p) in pivots.iter().enumerate() {
                if rref[r][w] & mask != 0 {
                    x.set(p, true);
                }
            }
            basis.push(x);
        }
        basis
    }

    /// Minimum Hamming weight of a nonzero vector in the nullspace, found by
    /// enumerating every nonzero combination of a nullspace basis.
    ///
    /// Returns `Ok(None)` when the nullspace is trivial.
    pub fn min_distance_bruteforce(&self) -> Result<Option<usize>> {
        let basis = self.nullspace();
        if basis.len() > MAX_ENUM_DIMENSION {
            return Err(Error::TooLarge(format!(
                "nullspace dimension {} exceeds the enumeration bound {MAX_ENUM_DIMENSION}",
                basis.len()
            )));
        }
        if basis.is_empty() {
            return Ok(None);
        }
        let packed: Vec<Vec<u64>> = basis.iter().map(pack_bits).collect();
        let mut word = vec![0u64; words_for(self.cols)];
        let mut best = usize::MAX;
        // Gray-code walk: step g flips basis vector trailing_zeros(g).
        for g in 1u64..(1u64 << basis.len()) {
            xor_into(&mut word, &packed[g.trailing_zeros() as usize]);
            let w: usize = word.iter().map(|x| x.count_ones() as usize).sum();
            best = best.min(w);
        }
        Ok(Some(best))
    }

    fn packed_rows(&self) -> Vec<Vec<u64>> {
        let words = words_for(self.cols);
        self.row_support
            .iter()
            .map(|row| {
                let mut packed = vec![0u64; words];
                for &c in row {
                    packed[c / 64] |= 1 << (c % 64);
                }
                packed
            })
            .collect()
    }

    /// Reduced row echelon form: returns the nonzero rows and pivot columns.
    fn rref(&self) -> (Vec<Vec<u64>>, Vec<usize>) {
        let mut rows = self.packed_rows();
        let mut pivots = Vec::new();
        let mut rank = 0;
        for col in 0..self.cols {
            if rank == rows.len() {
                break;
            }
            let (w, mask) = (col / 64, 1u64 << (col % 64));
            let Some(pivot) = (rank..rows.len()).find(|&r| rows[r][w] & mask != 0) else {
                continue;
            };
            rows.swap(rank, pivot);
            let pivot_row = rows[rank].clone();
            for (r, row) in rows.iter_mut().enumerate() {
                if r != rank && row[w] & mask != 0 {
                    xor_into(row, &pivot_row);
                }
            }
            pivots.push(col);
            rank += 1;
        }
        rows.truncate(rank);
        (rows, pivots)
    }
}

impl fmt::Debug for BinaryMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "BinaryMatrix {}x{}", self.rows, self.cols)?;
        if self.rows * self.cols <= 4096 {
            for row in self.to_dense() {
                for b in row {
                    write!(f, "{b}")?;
                }
                writeln!(f)?;
            }
        }
        Ok(())
    }
}

fn words_for(bits: usize) -> usize {
    bits.div_ceil(64)
}

fn xor_into(dst: &mut [u64], src: &[u64]) {
    for (d, s) in dst.iter_mut().zip(src) {
        *d ^= s;
    }
}

fn pack_bits(v: &BitVector) -> Vec<u64> {
    let mut packed = vec![0u64; words_for(v.len())];
    for (i, b) in v.iter().enumerate() {
        if b {
            packed[i / 64] |= 1 << (i % 64);
        }
    }
    packed
}

/// `H·vᵀ` over GF(2); free-function form of [`BinaryMatrix::mat_vec`].
pub fn mat_vec_mod2(h: &BinaryMatrix, v: &BitVector) -> Result<BitVector> {
    h.mat_vec(v)
}

pub fn rank_mod2(h: &BinaryMatrix) -> usize {
    h.rank()
}

pub fn nullspace_mod2(h: &BinaryMatrix) -> Vec<BitVector> {
    h.nullspace()
}
