//! Plain and ranged bit-vectors over 1-based allocation indices.
//!
//! Bit positions are absolute allocation indices, so position 0 is never set.
//! Storage is packed into `u64` words; a chunk of `chunk_bits` bits never
//! straddles a word because every supported width divides 64.

use alloc::vec;
use alloc::vec::Vec;

use crate::hierarchy::Interval;

#[derive(Clone, Copy, Debug, PartialEq, Eq, thiserror::Error)]
pub enum BitsetError {
    #[error("unsupported chunk width {0} (expected 8, 16, 32 or 64)")]
    InvalidChunkBits(u32),
    #[error("chunk widths differ: {0} vs {1}")]
    ConfigMismatch(u32, u32),
}

/// Width of one storage chunk.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct ChunkConfig {
    bits: u32,
}

impl ChunkConfig {
    pub const DEFAULT_BITS: u32 = 64;

    pub fn new(bits: u32) -> Result<Self, BitsetError> {
        match bits {
            8 | 16 | 32 | 64 => Ok(ChunkConfig { bits }),
            other => Err(BitsetError::InvalidChunkBits(other)),
        }
    }

    pub const fn bits(self) -> u32 {
        self.bits
    }

    pub const fn bytes(self) -> usize {
        (self.bits / 8) as usize
    }

    /// Chunk holding absolute index `index`.
    pub const fn chunk_index_of(self, index: u32) -> u32 {
        index / self.bits
    }

    fn mask(self) -> u64 {
        if self.bits == 64 {
            u64::MAX
        } else {
            (1u64 << self.bits) - 1
        }
    }
}

impl Default for ChunkConfig {
    fn default() -> Self {
        ChunkConfig {
            bits: Self::DEFAULT_BITS,
        }
    }
}

/// Read-only chunk view shared by plain and ranged vectors.
pub trait ChunkArray {
    fn chunk_config(&self) -> ChunkConfig;
    fn chunk_count(&self) -> u32;
    /// Chunk `j` relative to the start of the array, right-aligned.
    fn chunk(&self, j: u32) -> u64;

    /// Bytes of all-zero windows of `window` consecutive chunks, i.e. what a
    /// sparse element decomposition would not allocate. A trailing partial
    /// window counts only its own chunks.
    fn zero_window_bytes(&self, window: u32) -> usize {
        let n = self.chunk_count();
        let mut saved = 0;
        let mut start = 0;
        while start < n {
            let end = (start + window).min(n);
            if (start..end).all(|j| self.chunk(j) == 0) {
                saved += (end - start) as usize * self.chunk_config().bytes();
            }
            start = end;
        }
        saved
    }
}

fn words_for_bits(bits: u64) -> usize {
    bits.div_ceil(64) as usize
}

fn read_chunk(words: &[u64], cfg: ChunkConfig, j: u32) -> u64 {
    let bit = j as u64 * cfg.bits as u64;
    (words[(bit / 64) as usize] >> (bit % 64)) & cfg.mask()
}

/// ORs `value` into chunk `j`; returns whether any bit changed.
fn or_chunk(words: &mut [u64], cfg: ChunkConfig, j: u32, value: u64) -> bool {
    let bit = j as u64 * cfg.bits as u64;
    let word = &mut words[(bit / 64) as usize];
    let old = *word;
    *word |= value << (bit % 64);
    *word != old
}

fn iter_ones(words: &[u64], base: u32) -> impl Iterator<Item = u32> + '_ {
    words.iter().enumerate().flat_map(move |(w, &word)| {
        let mut rest = word;
        core::iter::from_fn(move || {
            if rest == 0 {
                return None;
            }
            let tz = rest.trailing_zeros();
            rest &= rest - 1;
            Some(base + (w as u32) * 64 + tz)
        })
    })
}

/// Bit-vector over the whole allocation universe `1..=len`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct PlainBitVector {
    words: Vec<u64>,
    len: u32,
    cfg: ChunkConfig,
}

impl PlainBitVector {
    pub fn new(len: u32, cfg: ChunkConfig) -> Self {
        PlainBitVector {
            words: vec![0; words_for_bits(len as u64 + 1)],
            len,
            cfg,
        }
    }

    /// Highest valid index.
    pub fn universe(&self) -> u32 {
        self.len
    }

    pub fn words(&self) -> &[u64] {
        &self.words
    }

    /// Sets `index`; returns `true` if it was clear. Panics outside `1..=len`.
    pub fn set(&mut self, index: u32) -> bool {
        assert!(
            index >= 1 && index <= self.len,
            "index {index} outside 1..={}",
            self.len
        );
        let (w, b) = ((index / 64) as usize, index % 64);
        let old = self.words[w];
        self.words[w] |= 1 << b;
        self.words[w] != old
    }

    pub fn get(&self, index: u32) -> bool {
        index >= 1
            && index <= self.len
            && self.words[(index / 64) as usize] >> (index % 64) & 1 != 0
    }

    pub fn count_ones(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn is_zero(&self) -> bool {
        self.words.iter().all(|&w| w == 0)
    }

    pub fn iter(&self) -> impl Iterator<Item = u32> + '_ {
        iter_ones(&self.words, 0)
    }

    /// `self |= other & mask` (no mask means plain union). Returns whether `self` changed.
    pub fn or_masked(&mut self, other: &PlainBitVector, mask: Option<&PlainBitVector>) -> bool {
        debug_assert_eq!(self.words.len(), other.words.len());
        let mut changed = false;
        match mask {
            Some(m) => {
                for ((dst, &src), &keep) in self.words.iter_mut().zip(&other.words).zip(&m.words) {
                    let next = *dst | (src & keep);
                    changed |= next != *dst;
                    *dst = next;
                }
            }
            None => {
                for (dst, &src) in self.words.iter_mut().zip(&other.words) {
                    let next = *dst | src;
                    changed |= next != *dst;
                    *dst = next;
                }
            }
        }
        changed
    }

    /// Every bit of `self` is also set in `other`.
    pub fn is_subset_of(&self, other: &PlainBitVector) -> bool {
        self.words
            .iter()
            .zip(&other.words)
            .all(|(&a, &b)| a & !b == 0)
    }

    /// Number of bits set in `self & mask & !exclude`.
    pub fn count_masked(
        &self,
        mask: Option<&PlainBitVector>,
        exclude: Option<&PlainBitVector>,
    ) -> usize {
        (0..self.words.len())
            .map(|w| {
                let mut v = self.words[w];
                if let Some(m) = mask {
                    v &= m.words[w];
                }
                if let Some(e) = exclude {
                    v &= !e.words[w];
                }
                v.count_ones() as usize
            })
            .sum()
    }
}

impl ChunkArray for PlainBitVector {
    fn chunk_config(&self) -> ChunkConfig {
        self.cfg
    }

    fn chunk_count(&self) -> u32 {
        (self.len as u64 + 1).div_ceil(self.cfg.bits as u64) as u32
    }

    fn chunk(&self, j: u32) -> u64 {
        read_chunk(&self.words, self.cfg, j)
    }
}

/// Bit-vector covering one interval, stored from the chunk-aligned lower bound.
///
/// Chunk `j` of the array holds absolute indices
/// `aligned_lower + j * chunk_bits ..` . Bits between the aligned span and the
/// interval (the slack) can only be set by [`RangedBitVector::or`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RangedBitVector {
    interval: Interval,
    aligned_lower: u32,
    chunks: u32,
    cfg: ChunkConfig,
    words: Vec<u64>,
}

impl RangedBitVector {
    pub fn new(interval: Interval, cfg: ChunkConfig) -> Self {
        let first = cfg.chunk_index_of(interval.lower());
        let chunks = if interval.is_empty() {
            0
        } else {
            cfg.chunk_index_of(interval.upper()) - first + 1
        };
        RangedBitVector {
            interval,
            aligned_lower: first * cfg.bits(),
            chunks,
            cfg,
            words: vec![0; words_for_bits(chunks as u64 * cfg.bits() as u64)],
        }
    }

    pub fn interval(&self) -> Interval {
        self.interval
    }

    pub fn aligned_lower(&self) -> u32 {
        self.aligned_lower
    }

    /// Last absolute index of the aligned span. Meaningless when there are no chunks.
    pub fn aligned_upper(&self) -> u32 {
        self.aligned_lower + self.chunks * self.cfg.bits() - 1
    }

    fn first_chunk(&self) -> u32 {
        self.aligned_lower / self.cfg.bits()
    }

    pub fn in_aligned_span(&self, index: u32) -> bool {
        self.chunks > 0 && index >= self.aligned_lower && index <= self.aligned_upper()
    }

    /// Sets `index` if it lies inside the interval. Returns `true` iff the bit was clear.
    pub fn set(&mut self, index: u32) -> bool {
        if !self.interval.contains(index) {
            return false;
        }
        let rel = index - self.aligned_lower;
        let (w, b) = ((rel / 64) as usize, rel % 64);
        let old = self.words[w];
        self.words[w] |= 1 << b;
        self.words[w] != old
    }

    pub fn get(&self, index: u32) -> bool {
        if !self.in_aligned_span(index) {
            return false;
        }
        let rel = index - self.aligned_lower;
        self.words[(rel / 64) as usize] >> (rel % 64) & 1 != 0
    }

    /// ORs into `self` the chunks of `other` that cover the common part of the two intervals.
    ///
    /// Nested intervals (either way round) OR the inner interval's chunks. Disjoint
    /// intervals return `false` without touching `self`. Intervals that overlap
    /// without nesting, which only arise from merged interface intervals, OR
    /// the chunks covering the intersection. Returns whether any chunk changed.
    pub fn or(&mut self, other: &RangedBitVector) -> Result<bool, BitsetError> {
        if self.cfg != other.cfg {
            return Err(BitsetError::ConfigMismatch(
                self.cfg.bits(),
                other.cfg.bits(),
            ));
        }
        if !self.interval.intersects(other.interval) {
            return Ok(false);
        }
        let cfg = self.cfg;
        let lo = cfg.chunk_index_of(self.interval.lower().max(other.interval.lower()));
        let hi = cfg.chunk_index_of(self.interval.upper().min(other.interval.upper()));
        let (x0, y0) = (self.first_chunk(), other.first_chunk());
        let mut changed = false;
        for c in lo..=hi {
            let v = read_chunk(&other.words, cfg, c - y0);
            if v != 0 {
                changed |= or_chunk(&mut self.words, cfg, c - x0, v);
            }
        }
        Ok(changed)
    }

    /// Same effect as [`RangedBitVector::or`] with a vector over `from` holding only `index`.
    pub fn or_index(&mut self, from: Interval, index: u32) -> bool {
        if !self.interval.intersects(from) || !self.in_aligned_span(index) {
            return false;
        }
        self.set_in_span(index)
    }

    /// Sets any bit of the aligned span, slack included.
    pub(crate) fn set_in_span(&mut self, index: u32) -> bool {
        debug_assert!(self.in_aligned_span(index));
        let rel = index - self.aligned_lower;
        let (w, b) = ((rel / 64) as usize, rel % 64);
        let old = self.words[w];
        self.words[w] |= 1 << b;
        self.words[w] != old
    }

    pub fn count_ones(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn is_zero(&self) -> bool {
        self.words.iter().all(|&w| w == 0)
    }

    /// Set absolute indices in ascending order, slack included.
    pub fn iter(&self) -> impl Iterator<Item = u32> + '_ {
        iter_ones(&self.words, self.aligned_lower)
    }
}

impl ChunkArray for RangedBitVector {
    fn chunk_config(&self) -> ChunkConfig {
        self.cfg
    }

    fn chunk_count(&self) -> u32 {
        self.chunks
    }

    fn chunk(&self, j: u32) -> u64 {
        read_chunk(&self.words, self.cfg, j)
    }
}
