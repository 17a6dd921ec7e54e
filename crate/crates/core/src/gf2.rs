//! Linear systems over GF(2) built from sampled outcomes.
//!
//! For a sample matrix `S` the homogeneous system `S·X = 0` has a linear
//! solution space `A0`, and `S·X = 1` (every equation equal to one) has
//! either no solution or the coset `A1 = particular + A0`.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::boolfn::parity;
use crate::bvsim::SampleSet;
use crate::{Error, Result};

/// Default dimension cap for explicit enumeration (about 10^6 vectors).
pub const DEFAULT_CAP: u32 = 20;

pub const MAX_COLS: u32 = 64;

/// Right-hand side selector: `S·X = 0` or `S·X = 1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Rhs {
    Zero,
    One,
}

impl Rhs {
    pub const BOTH: [Rhs; 2] = [Rhs::Zero, Rhs::One];

    pub fn bit(self) -> u8 {
        self as u8
    }

    pub fn from_bit(bit: u8) -> Rhs {
        if bit & 1 == 0 {
            Rhs::Zero
        } else {
            Rhs::One
        }
    }
}

/// Dense bit-packed matrix, one `u64` word per row.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BitMatrix {
    cols: u32,
    rows: Vec<u64>,
}

impl BitMatrix {
    pub fn new(cols: u32, rows: Vec<u64>) -> Result<Self> {
        if cols == 0 || cols > MAX_COLS {
            return Err(Error::WidthOutOfRange { what: "cols", value: cols, max: MAX_COLS });
        }
        if let Some(&r) = rows.iter().find(|&&r| cols < 64 && r >> cols != 0) {
            return Err(Error::VectorTooWide { value: r, bits: cols });
        }
        Ok(BitMatrix { cols, rows })
    }

    /// One row per distinct sampled outcome, in ascending order.
    pub fn from_samples(set: &SampleSet) -> Result<Self> {
        if set.samples().is_empty() {
            return Err(Error::EmptySamples);
        }
        let distinct: BTreeSet<u64> = set.samples().iter().map(|&w| w as u64).collect();
        Self::new(set.m(), distinct.into_iter().collect())
    }

    pub fn cols(&self) -> u32 {
        self.cols
    }

    pub fn rows(&self) -> &[u64] {
        &self.rows
    }

    pub fn num_rows(&self) -> usize {
        self.rows.len()
    }

    /// `S·a` as one bit per row.
    pub fn mul_vec(&self, a: u64) -> Vec<u8> {
        self.rows.iter().map(|&r| parity(r & a)).collect()
    }

    pub fn rank(&self) -> u32 {
        let mut rows = self.rows.clone();
        let mut rank = 0usize;
        for col in 0..self.cols {
            let bit = 1u64 << col;
            let Some(pos) = rows[rank..].iter().position(|&r| r & bit != 0) else {
                continue;
            };
            rows.swap(rank, rank + pos);
            let pivot = rows[rank];
            for r in rows[rank + 1..].iter_mut() {
                if *r & bit != 0 {
                    *r ^= pivot;
                }
            }
            rank += 1;
            if rank == rows.len() {
                break;
            }
        }
        rank as u32
    }

    /// Rows as zero-padded hex, for debugging dumps.
    pub fn to_hex_rows(&self) -> Vec<String> {
        let digits = self.cols.div_ceil(4) as usize;
        self.rows.iter().map(|r| format!("{r:0digits$x}")).collect()
    }
}

/// The pair `(A0, A1)` in compact form.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SolutionSets {
    m: u32,
    /// Nullspace basis; vector `i` is the only one with bit `free[i]` set.
    basis: Vec<u64>,
    #[serde(skip)]
    free: Vec<u32>,
    particular: Option<u64>,
}

impl SolutionSets {
    pub fn m(&self) -> u32 {
        self.m
    }

    pub fn basis(&self) -> &[u64] {
        &self.basis
    }

    pub fn particular(&self) -> Option<u64> {
        self.particular
    }

    /// `log2 |A0|`, which is also `log2 |A1|` when `A1` is non-empty.
    pub fn dimension(&self) -> u32 {
        self.basis.len() as u32
    }

    pub fn rank(&self) -> u32 {
        self.m - self.dimension()
    }

    fn offset(&self, which: Rhs) -> Option<u64> {
        match which {
            Rhs::Zero => Some(0),
            Rhs::One => self.particular,
        }
    }

    pub fn is_empty(&self, which: Rhs) -> bool {
        self.offset(which).is_none()
    }

    /// Membership by reduction against the basis.
    pub fn contains(&self, which: Rhs, a: u64) -> bool {
        let Some(offset) = self.offset(which) else {
            return false;
        };
        let mut t = a ^ offset;
        for (&b, &f) in self.basis.iter().zip(&self.free) {
            if t >> f & 1 == 1 {
                t ^= b;
            }
        }
        t == 0
    }

    /// All members of `A0` or `A1` in ascending order.
    pub fn enumerate(&self, which: Rhs, cap: u32) -> Result<Vec<u64>> {
        let Some(offset) = self.offset(which) else {
            return Ok(Vec::new());
        };
        let dim = self.dimension();
        if dim > cap {
            return Err(Error::DimensionTooLarge { dim, cap });
        }
        // Gray-code walk: step i flips the basis vector at the lowest set bit of i.
        let count = 1usize << dim;
        let mut out = Vec::with_capacity(count);
        let mut cur = offset;
        out.push(cur);
        for i in 1..count {
            cur ^= self.basis[i.trailing_zeros() as usize];
            out.push(cur);
        }
        out.sort_unstable();
        Ok(out)
    }
}

/// Gauss–Jordan elimination of `S` augmented with an all-ones column.
pub fn solve(mat: &BitMatrix) -> SolutionSets {
    let m = mat.cols;
    let mut rows: Vec<(u64, bool)> = mat.rows.iter().map(|&r| (r, true)).collect();
    let mut pivots: Vec<u32> = Vec::new();
    for col in 0..m {
        let bit = 1u64 << col;
        let rank = pivots.len();
        let Some(pos) = rows[rank..].iter().position(|&(r, _)| r & bit != 0) else {
            continue;
        };
        rows.swap(rank, rank + pos);
        let pivot = rows[rank];
        for (i, row) in rows.iter_mut().enumerate() {
            if i != rank && row.0 & bit != 0 {
                row.0 ^= pivot.0;
                row.1 ^= pivot.1;
            }
        }
        pivots.push(col);
    }
    let rank = pivots.len();
    let consistent = !rows.is_empty() && rows[rank..].iter().all(|&(_, rhs)| !rhs);

    let mut is_pivot = vec![false; m as usize];
    for &c in &pivots {
        is_pivot[c as usize] = true;
    }
    let free: Vec<u32> = (0..m).filter(|&c| !is_pivot[c as usize]).collect();
    let basis = free
        .iter()
        .map(|&f| {
            pivots
                .iter()
                .zip(&rows)
                .filter(|(_, &(r, _))| r >> f & 1 == 1)
                .fold(1u64 << f, |v, (&c, _)| v | 1u64 << c)
        })
        .collect();
    let particular = consistent.then(|| {
        pivots.iter().zip(&rows).filter(|(_, &(_, rhs))| rhs).fold(0u64, |v, (&c, _)| v | 1u64 << c)
    });
    SolutionSets { m, basis, free, particular }
}
