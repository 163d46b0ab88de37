//! 8×8 matrices over GF(2).
//!
//! Row `i` produces output bit `7 - i`; within a row mask, bit `j` selects
//! input bit `j`. Printed left to right, column `c` therefore multiplies
//! input bit `7 - c`, which is the usual MSB-first layout.

use std::fmt;
use std::ops::Mul;

#[derive(Clone, Copy, PartialEq, Eq, Hash, Default, PartialOrd, Ord)]
pub struct BinaryMatrix8 {
    rows: [u8; 8],
}

impl BinaryMatrix8 {
    pub const IDENTITY: BinaryMatrix8 = BinaryMatrix8 {
        rows: [0x80, 0x40, 0x20, 0x10, 0x08, 0x04, 0x02, 0x01],
    };

    pub const fn from_rows(rows: [u8; 8]) -> Self {
        BinaryMatrix8 { rows }
    }

    /// Builds a matrix from column bytes, MSB = top row, listed left to right.
    pub fn from_columns(cols: [u8; 8]) -> Self {
        let mut rows = [0u8; 8];
        for (r, row) in rows.iter_mut().enumerate() {
            for (c, col) in cols.iter().enumerate() {
                *row |= ((col >> (7 - r)) & 1) << (7 - c);
            }
        }
        BinaryMatrix8 { rows }
    }

    /// Builds a matrix from a 0/1 grid as printed (row-major, MSB first).
    pub fn from_bits(bits: [[u8; 8]; 8]) -> Self {
        let mut rows = [0u8; 8];
        for (row, bits) in rows.iter_mut().zip(bits.iter()) {
            *row = bits.iter().fold(0u8, |acc, &b| (acc << 1) | (b & 1));
        }
        BinaryMatrix8 { rows }
    }

    pub fn rows(&self) -> [u8; 8] {
        self.rows
    }

    pub fn columns(&self) -> [u8; 8] {
        self.transpose().rows
    }

    pub fn transpose(&self) -> Self {
        let mut rows = [0u8; 8];
        for (c, row) in rows.iter_mut().enumerate() {
            for r in 0..8 {
                *row |= ((self.rows[r] >> (7 - c)) & 1) << (7 - r);
            }
        }
        BinaryMatrix8 { rows }
    }

    pub fn apply(&self, q: u8) -> u8 {
        matvec_gf2(self, q)
    }

    /// Gauss-Jordan inversion; `None` when singular.
    pub fn inverse(&self) -> Option<Self> {
        let mut left = self.rows;
        let mut right = Self::IDENTITY.rows;
        for col in 0..8 {
            let bit = 0x80u8 >> col;
            let pivot = (col..8).find(|&r| left[r] & bit != 0)?;
            left.swap(col, pivot);
            right.swap(col, pivot);
            for r in 0..8 {
                if r != col && left[r] & bit != 0 {
                    left[r] ^= left[col];
                    right[r] ^= right[col];
                }
            }
        }
        Some(BinaryMatrix8 { rows: right })
    }

    pub fn rank(&self) -> u32 {
        let mut rows = self.rows;
        let mut rank = 0;
        for col in 0..8 {
            let bit = 0x80u8 >> col;
            let Some(pivot) = (rank..8).find(|&r| rows[r] & bit != 0) else {
                continue;
            };
            rows.swap(rank, pivot);
            for r in 0..8 {
                if r != rank && rows[r] & bit != 0 {
                    rows[r] ^= rows[rank];
                }
            }
            rank += 1;
        }
        rank as u32
    }

    pub fn is_invertible(&self) -> bool {
        self.rank() == 8
    }

    /// Two-input XOR gates needed to evaluate the rows independently.
    pub fn xor_count(&self) -> u32 {
        self.rows
            .iter()
            .map(|r| r.count_ones().saturating_sub(1))
            .sum()
    }
}

impl Mul for BinaryMatrix8 {
    type Output = BinaryMatrix8;

    fn mul(self, rhs: BinaryMatrix8) -> BinaryMatrix8 {
        // (A·B) row i = XOR of B's rows selected by A's row i.
        let mut rows = [0u8; 8];
        for (i, row) in rows.iter_mut().enumerate() {
            for k in 0..8 {
                if self.rows[i] & (0x80 >> k) != 0 {
                    *row ^= rhs.rows[k];
                }
            }
        }
        BinaryMatrix8 { rows }
    }
}

impl fmt::Debug for BinaryMatrix8 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list()
            .entries(self.rows.iter().map(|r| format!("{r:08b}")))
            .finish()
    }
}

/// Output bit `7 - i` is the parity of the input bits selected by row `i`.
pub fn matvec_gf2(m: &BinaryMatrix8, q: u8) -> u8 {
    m.rows.iter().enumerate().fold(0u8, |acc, (i, row)| {
        acc | (((row & q).count_ones() as u8 & 1) << (7 - i))
    })
}
