//! Fixed-width binary feature masks.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const BITS: usize = 64;

/// A fixed-width bit vector over the current search space. Bit `i` set means
/// feature `i` (a column of whatever dataset the mask indexes) is selected.
///
/// The selected-bit count is cached because it is both an objective value
/// (feature ratio) and a hot quantity in the genetic operators.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct FeatureMask {
    width: usize,
    blocks: Vec<u64>,
    ones: usize,
}

impl FeatureMask {
    /// An all-zero mask of the given width. Width must be positive.
    pub fn zeros(width: usize) -> Self {
        assert!(width > 0, "mask width must be positive");
        FeatureMask {
            width,
            blocks: vec![0; width.div_ceil(BITS)],
            ones: 0,
        }
    }

    /// An all-one mask of the given width.
    pub fn ones(width: usize) -> Self {
        let mut mask = Self::zeros(width);
        for i in 0..width {
            mask.set(i, true);
        }
        mask
    }

    /// Builds a mask from selected positions. Positions must be in range;
    /// duplicates are harmless.
    pub fn from_indices(width: usize, indices: &[usize]) -> Result<Self> {
        let mut mask = Self::zeros(width);
        for &i in indices {
            if i >= width {
                return Err(Error::InvalidArgument(format!(
                    "bit index {i} out of range for mask width {width}"
                )));
            }
            mask.set(i, true);
        }
        Ok(mask)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    /// Number of selected features.
    pub fn count_ones(&self) -> usize {
        self.ones
    }

    pub fn get(&self, i: usize) -> bool {
        debug_assert!(i < self.width);
        self.blocks[i / BITS] >> (i % BITS) & 1 == 1
    }

    pub fn set(&mut self, i: usize, value: bool) {
        debug_assert!(i < self.width);
        let block = &mut self.blocks[i / BITS];
        let bit = 1u64 << (i % BITS);
        let was = *block & bit != 0;
        if value && !was {
            *block |= bit;
            self.ones += 1;
        } else if !value && was {
            *block &= !bit;
            self.ones -= 1;
        }
    }

    pub fn flip(&mut self, i: usize) {
        let v = self.get(i);
        self.set(i, !v);
    }

    /// Iterator over selected positions in ascending order.
    pub fn iter_ones(&self) -> impl Iterator<Item = usize> + '_ {
        self.blocks.iter().enumerate().flat_map(move |(b, &word)| {
            let mut word = word;
            std::iter::from_fn(move || {
                if word == 0 {
                    None
                } else {
                    let t = word.trailing_zeros() as usize;
                    word &= word - 1;
                    Some(b * BITS + t)
                }
            })
        })
    }

    /// Selected positions as a sorted vector (the wire encoding of a mask).
    pub fn to_indices(&self) -> Vec<usize> {
        self.iter_ones().collect()
    }

    /// Accumulates this mask into a coverage mask (bitwise or).
    pub fn or_into(&self, coverage: &mut FeatureMask) {
        debug_assert_eq!(self.width, coverage.width);
        for (dst, src) in coverage.blocks.iter_mut().zip(&self.blocks) {
            *dst |= src;
        }
        coverage.ones = coverage.blocks.iter().map(|b| b.count_ones() as usize).sum();
    }

    /// Positions where the two masks disagree.
    pub fn disagreement(&self, other: &FeatureMask) -> Vec<usize> {
        debug_assert_eq!(self.width, other.width);
        let mut out = Vec::new();
        for (b, (&x, &y)) in self.blocks.iter().zip(&other.blocks).enumerate() {
            let mut diff = x ^ y;
            while diff != 0 {
                let t = diff.trailing_zeros() as usize;
                diff &= diff - 1;
                out.push(b * BITS + t);
            }
        }
        out
    }

    /// Hamming distance between two masks of equal width.
    pub fn hamming(&self, other: &FeatureMask) -> usize {
        debug_assert_eq!(self.width, other.width);
        self.blocks
            .iter()
            .zip(&other.blocks)
            .map(|(&x, &y)| (x ^ y).count_ones() as usize)
            .sum()
    }
}
