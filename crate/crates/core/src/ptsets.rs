//! Points-to set representations.
//!
//! Every representation stores a set of 1-based allocation indices filtered by
//! the set's owner type (the declared type of the variable or field it
//! belongs to). Masked kinds filter exactly with a precomputed [`TypeMask`];
//! ranged kinds filter through the owner's intervals, exactly for single
//! insertions and at chunk granularity for bulk unions.
//!
//! Sizes reported by [`PointsToSet::footprint_bytes`] follow a fixed memory
//! model rather than measured allocation: an object header of
//! [`OBJECT_HEADER`] bytes, an array header of [`ARRAY_HEADER`] bytes, a
//! reference slot of [`REFERENCE`] bytes and `chunk_bits / 8` bytes per chunk.
//!
//! [`TypeMask`]: crate::hierarchy::TypeMask

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::rc::Rc;
use alloc::vec::Vec;
use core::cell::RefCell;
use core::fmt;
use core::str::FromStr;

use crate::bitsets::{ChunkArray, ChunkConfig, PlainBitVector, RangedBitVector};
use crate::hierarchy::{ClassHierarchy, Interval, NumberingResult, TypeId};

pub const OBJECT_HEADER: usize = 16;
pub const ARRAY_HEADER: usize = 16;
pub const REFERENCE: usize = 8;
/// Inline slots of the hybrid kinds before they switch to bit-vectors.
pub const HYBRID_INLINE: usize = 16;
/// Longest overflow list of a shared set before it is folded into a new base.
pub const SHARED_OVERFLOW_LIMIT: usize = 20;
/// 64-bit words per sparse bitmap element.
pub const SPARSE_ELEMENT_WORDS: usize = 8;
const SPARSE_ELEMENT_BITS: u32 = (SPARSE_ELEMENT_WORDS * 64) as u32;
/// Header, `next` link, element number and payload.
pub const SPARSE_ELEMENT_BYTES: usize = OBJECT_HEADER + 2 * REFERENCE + SPARSE_ELEMENT_WORDS * 8;
/// Chunks per window when estimating sparse-bitmap savings.
pub const SAVINGS_WINDOW_CHUNKS: u32 = 8;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum SetKind {
    Naive,
    Pure,
    Hybrid,
    Shared,
    Sparse,
    Ranged,
    HybridRanged,
}

impl SetKind {
    pub const ALL: [SetKind; 7] = [
        SetKind::Naive,
        SetKind::Pure,
        SetKind::Hybrid,
        SetKind::Shared,
        SetKind::Sparse,
        SetKind::Ranged,
        SetKind::HybridRanged,
    ];

    /// Kinds with exact, mask-based filtering.
    pub const EXACT: [SetKind; 5] = [
        SetKind::Naive,
        SetKind::Pure,
        SetKind::Hybrid,
        SetKind::Shared,
        SetKind::Sparse,
    ];

    pub const fn name(self) -> &'static str {
        match self {
            SetKind::Naive => "naive",
            SetKind::Pure => "pure",
            SetKind::Hybrid => "hybrid",
            SetKind::Shared => "shared",
            SetKind::Sparse => "sparse",
            SetKind::Ranged => "ranged",
            SetKind::HybridRanged => "ranged-hybrid",
        }
    }

    pub const fn is_ranged(self) -> bool {
        matches!(self, SetKind::Ranged | SetKind::HybridRanged)
    }
}

impl fmt::Display for SetKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
#[error("unknown set kind `{0}`")]
pub struct ParseKindError(pub alloc::string::String);

impl FromStr for SetKind {
    type Err = ParseKindError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "hybrid-ranged" => Ok(SetKind::HybridRanged),
            _ => SetKind::ALL
                .into_iter()
                .find(|k| k.name() == s)
                .ok_or_else(|| ParseKindError(s.into())),
        }
    }
}

/// How sets restrict members to their owner type.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum FilterMode {
    /// AND with a precomputed type mask on every union (non-ranged kinds).
    Mask,
    /// Interval routing and chunk-aligned unions (ranged kinds).
    Intrinsic,
    /// No filtering.
    None,
}

impl FilterMode {
    pub const fn name(self) -> &'static str {
        match self {
            FilterMode::Mask => "mask",
            FilterMode::Intrinsic => "intrinsic",
            FilterMode::None => "none",
        }
    }
}

impl fmt::Display for FilterMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for FilterMode {
    type Err = ParseKindError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "mask" => Ok(FilterMode::Mask),
            "intrinsic" => Ok(FilterMode::Intrinsic),
            "none" => Ok(FilterMode::None),
            _ => Err(ParseKindError(s.into())),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum SetError {
    #[error("allocation index {0} outside 1..={1}")]
    IndexOutOfRange(u32, u32),
    #[error("operation not supported for `{0}` sets")]
    UnsupportedKind(SetKind),
    #[error("type #{0} is not covered by the numbering")]
    UnknownType(usize),
}

/// Immutable interned base of a shared set.
#[derive(Debug, PartialEq, Eq)]
pub struct SharedBase {
    bits: PlainBitVector,
    count: usize,
}

impl SharedBase {
    pub fn bits(&self) -> &PlainBitVector {
        &self.bits
    }

    pub fn footprint_bytes(&self) -> usize {
        OBJECT_HEADER + bit_array_bytes(self.bits.chunk_count(), self.bits.chunk_config())
    }
}

fn bit_array_bytes(chunks: u32, cfg: ChunkConfig) -> usize {
    ARRAY_HEADER + chunks as usize * cfg.bytes()
}

/// Per-analysis data the sets consult: masks, intervals, chunk width and the
/// shared-base intern table.
#[derive(Debug)]
pub struct SetContext {
    total: u32,
    chunk: ChunkConfig,
    filter: FilterMode,
    masks: Vec<Option<PlainBitVector>>,
    ranges: Vec<Vec<Interval>>,
    universe: Vec<Interval>,
    interner: RefCell<BTreeMap<Vec<u64>, Rc<SharedBase>>>,
}

impl SetContext {
    /// Type masks are built up front, and only in [`FilterMode::Mask`].
    pub fn new(
        h: &ClassHierarchy,
        nr: &NumberingResult,
        chunk: ChunkConfig,
        filter: FilterMode,
    ) -> Self {
        let types: Vec<TypeId> = h.type_ids().take(nr.type_count()).collect();
        let masks = types
            .iter()
            .map(|&t| {
                (filter == FilterMode::Mask).then(|| {
                    nr.build_type_mask(h, t, chunk)
                        .expect("type covered by numbering")
                        .bits
                })
            })
            .collect();
        let ranges = types
            .iter()
            .map(|&t| {
                nr.intervals_of(t)
                    .expect("type covered by numbering")
                    .iter()
                    .copied()
                    .filter(|iv| !iv.is_empty())
                    .collect()
            })
            .collect();
        let total = nr.total_allocs();
        let universe = Interval::new(1, total)
            .filter(|iv| !iv.is_empty())
            .into_iter()
            .collect();
        SetContext {
            total,
            chunk,
            filter,
            masks,
            ranges,
            universe,
            interner: RefCell::new(BTreeMap::new()),
        }
    }

    pub fn total_allocs(&self) -> u32 {
        self.total
    }

    pub fn chunk(&self) -> ChunkConfig {
        self.chunk
    }

    pub fn filter(&self) -> FilterMode {
        self.filter
    }

    pub fn covers(&self, owner: TypeId) -> bool {
        owner.index() < self.ranges.len()
    }

    /// Mask applied by the masked kinds; `None` unless filtering by mask.
    pub fn mask(&self, owner: TypeId) -> Option<&PlainBitVector> {
        self.masks[owner.index()].as_ref()
    }

    /// Intervals backing a ranged set for `owner`: the owner's non-empty
    /// intervals, or the whole universe when not filtering.
    pub fn ranges(&self, owner: TypeId) -> &[Interval] {
        match self.filter {
            FilterMode::None => &self.universe,
            _ => &self.ranges[owner.index()],
        }
    }

    /// Exact membership filter of the masked kinds.
    pub fn admits(&self, owner: TypeId, index: u32) -> bool {
        self.mask(owner).is_none_or(|m| m.get(index))
    }

    /// Exact membership filter of the ranged kinds.
    pub fn in_ranges(&self, owner: TypeId, index: u32) -> bool {
        let ranges = self.ranges(owner);
        let k = ranges.partition_point(|iv| iv.lower() <= index);
        k > 0 && ranges[k - 1].contains(index)
    }

    /// `index` lies outside the owner's intervals but inside the chunk-aligned
    /// span of one of them.
    pub fn in_slack(&self, owner: TypeId, index: u32) -> bool {
        let bits = self.chunk.bits();
        !self.in_ranges(owner, index)
            && self.ranges(owner).iter().any(|iv| {
                let lo = iv.lower() / bits * bits;
                let hi = (iv.upper() / bits + 1) * bits - 1;
                index >= lo && index <= hi
            })
    }

    pub fn check_index(&self, index: u32) -> Result<(), SetError> {
        if index == 0 || index > self.total {
            Err(SetError::IndexOutOfRange(index, self.total))
        } else {
            Ok(())
        }
    }

    fn intern(&self, bits: PlainBitVector) -> Rc<SharedBase> {
        let mut table = self.interner.borrow_mut();
        table
            .entry(bits.words().to_vec())
            .or_insert_with(|| {
                let count = bits.count_ones();
                Rc::new(SharedBase { bits, count })
            })
            .clone()
    }

    /// Distinct shared bases created so far.
    pub fn interned_bases(&self) -> usize {
        self.interner.borrow().len()
    }
}

/// Common contract of all representations.
pub trait PointsToSet {
    fn kind(&self) -> SetKind;

    fn owner(&self) -> TypeId;

    /// Inserts an index already known to be in `1..=total`, applying the
    /// representation's filter. Returns whether the set changed.
    ///
    /// Ranged kinds report a change whenever a vector gains a bit, even one
    /// another vector of the set already holds: that bit still flows on
    /// through later unions.
    fn insert(&mut self, cx: &SetContext, index: u32) -> bool;

    /// Adds every member of `src` the filter admits. Returns whether `self`
    /// changed, in the sense of [`PointsToSet::insert`].
    fn add_all(&mut self, cx: &SetContext, src: &Self) -> bool
    where
        Self: Sized;

    fn contains(&self, index: u32) -> bool;

    fn len(&self) -> usize;

    /// Visits each member once, in ascending order.
    fn for_each_member(&self, f: &mut dyn FnMut(u32));

    /// Modeled size. Shared bases are excluded; see [`AnySet::shared_base`].
    fn footprint_bytes(&self, cx: &SetContext) -> usize;

    fn add(&mut self, cx: &SetContext, index: u32) -> Result<bool, SetError> {
        cx.check_index(index)?;
        Ok(self.insert(cx, index))
    }

    fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn members(&self) -> Vec<u32> {
        let mut out = Vec::with_capacity(self.len());
        self.for_each_member(&mut |i| out.push(i));
        out
    }
}

/// Exact reference set.
#[derive(Clone, Debug)]
pub struct NaiveSet {
    owner: TypeId,
    members: BTreeSet<u32>,
}

impl NaiveSet {
    pub fn new(owner: TypeId) -> Self {
        NaiveSet {
            owner,
            members: BTreeSet::new(),
        }
    }
}

impl PointsToSet for NaiveSet {
    fn kind(&self) -> SetKind {
        SetKind::Naive
    }

    fn owner(&self) -> TypeId {
        self.owner
    }

    fn insert(&mut self, cx: &SetContext, index: u32) -> bool {
        cx.admits(self.owner, index) && self.members.insert(index)
    }

    fn add_all(&mut self, cx: &SetContext, src: &Self) -> bool {
        let mut changed = false;
        for &i in &src.members {
            changed |= self.insert(cx, i);
        }
        changed
    }

    fn contains(&self, index: u32) -> bool {
        self.members.contains(&index)
    }

    fn len(&self) -> usize {
        self.members.len()
    }

    fn for_each_member(&self, f: &mut dyn FnMut(u32)) {
        self.members.iter().for_each(|&i| f(i));
    }

    fn footprint_bytes(&self, _cx: &SetContext) -> usize {
        OBJECT_HEADER + ARRAY_HEADER + self.members.len() * REFERENCE
    }
}

/// One bit per allocation site in the program.
#[derive(Clone, Debug)]
pub struct PureBitVectorSet {
    owner: TypeId,
    bits: PlainBitVector,
}

impl PureBitVectorSet {
    pub fn new(owner: TypeId, cx: &SetContext) -> Self {
        PureBitVectorSet {
            owner,
            bits: PlainBitVector::new(cx.total, cx.chunk),
        }
    }

    pub fn bits(&self) -> &PlainBitVector {
        &self.bits
    }
}

impl PointsToSet for PureBitVectorSet {
    fn kind(&self) -> SetKind {
        SetKind::Pure
    }

    fn owner(&self) -> TypeId {
        self.owner
    }

    fn insert(&mut self, cx: &SetContext, index: u32) -> bool {
        cx.admits(self.owner, index) && self.bits.set(index)
    }

    fn add_all(&mut self, cx: &SetContext, src: &Self) -> bool {
        self.bits.or_masked(&src.bits, cx.mask(self.owner))
    }

    fn contains(&self, index: u32) -> bool {
        self.bits.get(index)
    }

    fn len(&self) -> usize {
        self.bits.count_ones()
    }

    fn for_each_member(&self, f: &mut dyn FnMut(u32)) {
        self.bits.iter().for_each(f);
    }

    fn footprint_bytes(&self, _cx: &SetContext) -> usize {
        OBJECT_HEADER + bit_array_bytes(self.bits.chunk_count(), self.bits.chunk_config())
    }
}

/// Up to [`HYBRID_INLINE`] distinct members stored in place; index 0 marks a free slot.
#[derive(Clone, Debug, Default)]
struct InlineSlots {
    slots: [u32; HYBRID_INLINE],
    len: u8,
}

impl InlineSlots {
    fn as_slice(&self) -> &[u32] {
        &self.slots[..self.len as usize]
    }

    fn contains(&self, index: u32) -> bool {
        self.as_slice().contains(&index)
    }

    fn is_full(&self) -> bool {
        self.len as usize == HYBRID_INLINE
    }

    fn push(&mut self, index: u32) {
        self.slots[self.len as usize] = index;
        self.len += 1;
    }

    fn clear(&mut self) {
        *self = InlineSlots::default();
    }

    fn sorted(&self) -> [u32; HYBRID_INLINE] {
        let mut out = self.slots;
        out[..self.len as usize].sort_unstable();
        out
    }
}

/// Inline slots, then a pure bit-vector once a 17th member arrives.
#[derive(Clone, Debug)]
pub struct HybridSet {
    owner: TypeId,
    inline: InlineSlots,
    bits: Option<PlainBitVector>,
}

impl HybridSet {
    pub fn new(owner: TypeId) -> Self {
        HybridSet {
            owner,
            inline: InlineSlots::default(),
            bits: None,
        }
    }

    pub fn is_overflowed(&self) -> bool {
        self.bits.is_some()
    }

    pub fn bits(&self) -> Option<&PlainBitVector> {
        self.bits.as_ref()
    }

    fn promote(&mut self, cx: &SetContext) -> &mut PlainBitVector {
        let mut bits = PlainBitVector::new(cx.total, cx.chunk);
        for &i in self.inline.as_slice() {
            bits.set(i);
        }
        self.inline.clear();
        self.bits.insert(bits)
    }
}

impl PointsToSet for HybridSet {
    fn kind(&self) -> SetKind {
        SetKind::Hybrid
    }

    fn owner(&self) -> TypeId {
        self.owner
    }

    fn insert(&mut self, cx: &SetContext, index: u32) -> bool {
        if !cx.admits(self.owner, index) {
            return false;
        }
        if let Some(bits) = &mut self.bits {
            return bits.set(index);
        }
        if self.inline.contains(index) {
            return false;
        }
        if self.inline.is_full() {
            self.promote(cx).set(index);
        } else {
            self.inline.push(index);
        }
        true
    }

    fn add_all(&mut self, cx: &SetContext, src: &Self) -> bool {
        let mut changed = false;
        match &src.bits {
            None => {
                for &i in src.inline.as_slice() {
                    changed |= self.insert(cx, i);
                }
            }
            Some(src_bits) => {
                if self.bits.is_none() {
                    for i in src_bits.iter() {
                        changed |= self.insert(cx, i);
                        if self.bits.is_some() {
                            break;
                        }
                    }
                }
                if let Some(bits) = &mut self.bits {
                    changed |= bits.or_masked(src_bits, cx.mask(self.owner));
                }
            }
        }
        changed
    }

    fn contains(&self, index: u32) -> bool {
        match &self.bits {
            Some(bits) => bits.get(index),
            None => self.inline.contains(index),
        }
    }

    fn len(&self) -> usize {
        match &self.bits {
            Some(bits) => bits.count_ones(),
            None => self.inline.len as usize,
        }
    }

    fn for_each_member(&self, f: &mut dyn FnMut(u32)) {
        match &self.bits {
            Some(bits) => bits.iter().for_each(f),
            None => self.inline.sorted()[..self.inline.len as usize]
                .iter()
                .for_each(|&i| f(i)),
        }
    }

    fn footprint_bytes(&self, _cx: &SetContext) -> usize {
        OBJECT_HEADER
            + (HYBRID_INLINE + 1) * REFERENCE
            + self
                .bits
                .as_ref()
                .map_or(0, |b| bit_array_bytes(b.chunk_count(), b.chunk_config()))
    }
}

/// Interned immutable base shared between sets plus a short sorted overflow list.
#[derive(Clone, Debug)]
pub struct SharedBitVectorSet {
    owner: TypeId,
    base: Option<Rc<SharedBase>>,
    overflow: Vec<u32>,
}

impl SharedBitVectorSet {
    pub fn new(owner: TypeId) -> Self {
        SharedBitVectorSet {
            owner,
            base: None,
            overflow: Vec::new(),
        }
    }

    pub fn base(&self) -> Option<&Rc<SharedBase>> {
        self.base.as_ref()
    }

    pub fn overflow(&self) -> &[u32] {
        &self.overflow
    }

    fn in_base(&self, index: u32) -> bool {
        self.base.as_ref().is_some_and(|b| b.bits.get(index))
    }

    /// Replaces the base by the interned `base ∪ overflow ∪ (extra & mask)`.
    fn fold(&mut self, cx: &SetContext, extra: Option<(&PlainBitVector, Option<&PlainBitVector>)>) {
        let mut bits = match &self.base {
            Some(b) => b.bits.clone(),
            None => PlainBitVector::new(cx.total, cx.chunk),
        };
        for &i in &self.overflow {
            bits.set(i);
        }
        if let Some((src, mask)) = extra {
            bits.or_masked(src, mask);
        }
        self.overflow.clear();
        self.base = Some(cx.intern(bits));
    }

    fn push_overflow(&mut self, cx: &SetContext, index: u32) -> bool {
        if self.in_base(index) {
            return false;
        }
        match self.overflow.binary_search(&index) {
            Ok(_) => false,
            Err(pos) => {
                self.overflow.insert(pos, index);
                if self.overflow.len() > SHARED_OVERFLOW_LIMIT {
                    self.fold(cx, None);
                }
                true
            }
        }
    }
}

impl PointsToSet for SharedBitVectorSet {
    fn kind(&self) -> SetKind {
        SetKind::Shared
    }

    fn owner(&self) -> TypeId {
        self.owner
    }

    fn insert(&mut self, cx: &SetContext, index: u32) -> bool {
        cx.admits(self.owner, index) && self.push_overflow(cx, index)
    }

    fn add_all(&mut self, cx: &SetContext, src: &Self) -> bool {
        let before = self.len();
        let mask = cx.mask(self.owner);
        if let Some(src_base) = &src.base {
            let same = self.base.as_ref().is_some_and(|b| Rc::ptr_eq(b, src_base));
            if !same {
                let passes_filter = mask.is_none_or(|m| src_base.bits.is_subset_of(m));
                let covers_ours = self
                    .base
                    .as_ref()
                    .is_none_or(|b| b.bits.is_subset_of(&src_base.bits));
                if passes_filter && covers_ours {
                    // Share the source's base outright.
                    self.base = Some(src_base.clone());
                    self.overflow.retain(|&i| !src_base.bits.get(i));
                } else {
                    let own = self.base.as_ref().map(|b| &b.bits);
                    let already_listed = self
                        .overflow
                        .iter()
                        .filter(|&&i| src_base.bits.get(i) && mask.is_none_or(|m| m.get(i)))
                        .count();
                    let fresh = src_base.bits.count_masked(mask, own) - already_listed;
                    if fresh > 0 {
                        if self.overflow.len() + fresh <= SHARED_OVERFLOW_LIMIT {
                            for i in src_base.bits.iter() {
                                if mask.is_none_or(|m| m.get(i)) {
                                    self.push_overflow(cx, i);
                                }
                            }
                        } else {
                            self.fold(cx, Some((&src_base.bits, mask)));
                        }
                    }
                }
            }
        }
        for &i in &src.overflow {
            self.insert(cx, i);
        }
        self.len() != before
    }

    fn contains(&self, index: u32) -> bool {
        self.in_base(index) || self.overflow.binary_search(&index).is_ok()
    }

    fn len(&self) -> usize {
        self.base.as_ref().map_or(0, |b| b.count) + self.overflow.len()
    }

    fn for_each_member(&self, f: &mut dyn FnMut(u32)) {
        let mut overflow = self.overflow.iter().copied().peekable();
        if let Some(base) = &self.base {
            for i in base.bits.iter() {
                while let Some(o) = overflow.next_if(|&o| o < i) {
                    f(o);
                }
                f(i);
            }
        }
        overflow.for_each(f);
    }

    fn footprint_bytes(&self, _cx: &SetContext) -> usize {
        OBJECT_HEADER + REFERENCE + ARRAY_HEADER + self.overflow.len() * REFERENCE
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
struct SparseElement {
    /// Element number; covers indices `number * 512 ..`.
    number: u32,
    words: [u64; SPARSE_ELEMENT_WORDS],
}

/// Sorted list of 8-word blocks; all-zero blocks are never stored.
#[derive(Clone, Debug)]
pub struct SparseBitmapSet {
    owner: TypeId,
    elements: Vec<SparseElement>,
}

impl SparseBitmapSet {
    pub fn new(owner: TypeId) -> Self {
        SparseBitmapSet {
            owner,
            elements: Vec::new(),
        }
    }

    pub fn element_count(&self) -> usize {
        self.elements.len()
    }

    fn element_mut(&mut self, number: u32) -> &mut SparseElement {
        let pos = match self.elements.binary_search_by_key(&number, |e| e.number) {
            Ok(pos) => pos,
            Err(pos) => {
                self.elements.insert(
                    pos,
                    SparseElement {
                        number,
                        words: [0; SPARSE_ELEMENT_WORDS],
                    },
                );
                pos
            }
        };
        &mut self.elements[pos]
    }
}

impl PointsToSet for SparseBitmapSet {
    fn kind(&self) -> SetKind {
        SetKind::Sparse
    }

    fn owner(&self) -> TypeId {
        self.owner
    }

    fn insert(&mut self, cx: &SetContext, index: u32) -> bool {
        if !cx.admits(self.owner, index) {
            return false;
        }
        let rel = index % SPARSE_ELEMENT_BITS;
        let elem = self.element_mut(index / SPARSE_ELEMENT_BITS);
        let word = &mut elem.words[(rel / 64) as usize];
        let old = *word;
        *word |= 1 << (rel % 64);
        *word != old
    }

    fn add_all(&mut self, cx: &SetContext, src: &Self) -> bool {
        let mask = cx.mask(self.owner);
        let mut changed = false;
        for elem in &src.elements {
            let mut words = elem.words;
            if let Some(m) = mask {
                let first = elem.number as usize * SPARSE_ELEMENT_WORDS;
                for (k, w) in words.iter_mut().enumerate() {
                    *w &= m.words().get(first + k).copied().unwrap_or(0);
                }
            }
            if words.iter().all(|&w| w == 0) {
                continue;
            }
            let dst = self.element_mut(elem.number);
            for (d, s) in dst.words.iter_mut().zip(words) {
                let next = *d | s;
                changed |= next != *d;
                *d = next;
            }
        }
        changed
    }

    fn contains(&self, index: u32) -> bool {
        let rel = index % SPARSE_ELEMENT_BITS;
        self.elements
            .binary_search_by_key(&(index / SPARSE_ELEMENT_BITS), |e| e.number)
            .is_ok_and(|pos| self.elements[pos].words[(rel / 64) as usize] >> (rel % 64) & 1 != 0)
    }

    fn len(&self) -> usize {
        self.elements
            .iter()
            .flat_map(|e| e.words.iter())
            .map(|w| w.count_ones() as usize)
            .sum()
    }

    fn for_each_member(&self, f: &mut dyn FnMut(u32)) {
        for elem in &self.elements {
            for (k, &word) in elem.words.iter().enumerate() {
                let mut rest = word;
                while rest != 0 {
                    let tz = rest.trailing_zeros();
                    rest &= rest - 1;
                    f(elem.number * SPARSE_ELEMENT_BITS + k as u32 * 64 + tz);
                }
            }
        }
    }

    fn footprint_bytes(&self, _cx: &SetContext) -> usize {
        OBJECT_HEADER + self.elements.len() * SPARSE_ELEMENT_BYTES
    }
}

/// One ranged bit-vector per interval of the owner type.
#[derive(Clone, Debug)]
pub struct RangedPointsToSet {
    owner: TypeId,
    vectors: Vec<RangedBitVector>,
}

impl RangedPointsToSet {
    pub fn new(owner: TypeId, cx: &SetContext) -> Self {
        RangedPointsToSet {
            owner,
            vectors: cx
                .ranges(owner)
                .iter()
                .map(|&iv| RangedBitVector::new(iv, cx.chunk))
                .collect(),
        }
    }

    pub fn vectors(&self) -> &[RangedBitVector] {
        &self.vectors
    }

    /// Neighbouring vectors whose aligned spans share a chunk can hold the same index.
    fn spans_overlap(&self) -> bool {
        self.vectors
            .windows(2)
            .any(|w| w[0].aligned_upper() >= w[1].aligned_lower())
    }
}

impl PointsToSet for RangedPointsToSet {
    fn kind(&self) -> SetKind {
        SetKind::Ranged
    }

    fn owner(&self) -> TypeId {
        self.owner
    }

    fn insert(&mut self, _cx: &SetContext, index: u32) -> bool {
        let k = self
            .vectors
            .partition_point(|v| v.interval().lower() <= index);
        if k == 0 || !self.vectors[k - 1].interval().contains(index) {
            return false;
        }
        self.vectors[k - 1].set(index)
    }

    fn add_all(&mut self, _cx: &SetContext, src: &Self) -> bool {
        let mut changed = false;
        for dst in &mut self.vectors {
            for v in &src.vectors {
                changed |= dst.or(v).expect("sets of one context share a chunk width");
            }
        }
        changed
    }

    fn contains(&self, index: u32) -> bool {
        self.vectors.iter().any(|v| v.get(index))
    }

    fn len(&self) -> usize {
        if self.spans_overlap() {
            self.members().len()
        } else {
            self.vectors.iter().map(RangedBitVector::count_ones).sum()
        }
    }

    fn for_each_member(&self, f: &mut dyn FnMut(u32)) {
        if self.spans_overlap() {
            let mut all: Vec<u32> = self.vectors.iter().flat_map(|v| v.iter()).collect();
            all.sort_unstable();
            all.dedup();
            all.into_iter().for_each(f);
        } else {
            self.vectors.iter().flat_map(|v| v.iter()).for_each(f);
        }
    }

    fn members(&self) -> Vec<u32> {
        let mut all: Vec<u32> = self.vectors.iter().flat_map(|v| v.iter()).collect();
        if self.spans_overlap() {
            all.sort_unstable();
            all.dedup();
        }
        all
    }

    fn footprint_bytes(&self, _cx: &SetContext) -> usize {
        OBJECT_HEADER
            + self
                .vectors
                .iter()
                .map(|v| bit_array_bytes(v.chunk_count(), v.chunk_config()))
                .sum::<usize>()
    }
}

/// Inline members of a ranged-hybrid set, each tagged with the position of the
/// owner interval whose vector would hold it. A member whose index sits in two
/// aligned spans can take two slots.
#[derive(Clone, Debug, Default)]
struct TaggedSlots {
    slots: [(u32, u32); HYBRID_INLINE],
    len: u8,
}

impl TaggedSlots {
    fn as_slice(&self) -> &[(u32, u32)] {
        &self.slots[..self.len as usize]
    }

    fn has(&self, index: u32, vector: u32) -> bool {
        self.as_slice().contains(&(index, vector))
    }

    fn contains(&self, index: u32) -> bool {
        self.as_slice().iter().any(|&(i, _)| i == index)
    }

    fn is_full(&self) -> bool {
        self.len as usize == HYBRID_INLINE
    }

    fn push(&mut self, index: u32, vector: u32) {
        self.slots[self.len as usize] = (index, vector);
        self.len += 1;
    }

    fn distinct(&self) -> Vec<u32> {
        let mut out: Vec<u32> = self.as_slice().iter().map(|&(i, _)| i).collect();
        out.sort_unstable();
        out.dedup();
        out
    }
}

fn in_aligned_span(cfg: ChunkConfig, iv: Interval, index: u32) -> bool {
    !iv.is_empty()
        && (cfg.chunk_index_of(iv.lower())..=cfg.chunk_index_of(iv.upper()))
            .contains(&cfg.chunk_index_of(index))
}

/// Inline slots, then a [`RangedPointsToSet`] once a 17th member arrives.
///
/// Membership always equals what a [`RangedPointsToSet`] would hold after the
/// same operations, slack included.
#[derive(Clone, Debug)]
pub struct HybridRangedPointsToSet {
    owner: TypeId,
    inline: TaggedSlots,
    ranged: Option<RangedPointsToSet>,
}

impl HybridRangedPointsToSet {
    pub fn new(owner: TypeId) -> Self {
        HybridRangedPointsToSet {
            owner,
            inline: TaggedSlots::default(),
            ranged: None,
        }
    }

    pub fn is_overflowed(&self) -> bool {
        self.ranged.is_some()
    }

    pub fn ranged(&self) -> Option<&RangedPointsToSet> {
        self.ranged.as_ref()
    }

    fn promote(&mut self, cx: &SetContext) -> &mut RangedPointsToSet {
        let mut ranged = RangedPointsToSet::new(self.owner, cx);
        for &(i, k) in self.inline.as_slice() {
            ranged.vectors[k as usize].set_in_span(i);
        }
        self.inline = TaggedSlots::default();
        self.ranged.insert(ranged)
    }

    /// Adds tagged members, promoting when the slots run out. Returns whether any
    /// (index, vector) pair is new, which is what a ranged set reports.
    fn put(&mut self, cx: &SetContext, entries: &[(u32, u32)]) -> bool {
        let mut changed = false;
        for &(i, k) in entries {
            changed |= match &mut self.ranged {
                Some(r) => r.vectors[k as usize].set_in_span(i),
                None if self.inline.has(i, k) => false,
                None if !self.inline.is_full() => {
                    self.inline.push(i, k);
                    true
                }
                None => self.promote(cx).vectors[k as usize].set_in_span(i),
            };
        }
        changed
    }
}

impl PointsToSet for HybridRangedPointsToSet {
    fn kind(&self) -> SetKind {
        SetKind::HybridRanged
    }

    fn owner(&self) -> TypeId {
        self.owner
    }

    fn insert(&mut self, cx: &SetContext, index: u32) -> bool {
        if let Some(r) = &mut self.ranged {
            return r.insert(cx, index);
        }
        let ranges = cx.ranges(self.owner);
        let k = ranges.partition_point(|iv| iv.lower() <= index);
        if k == 0 || !ranges[k - 1].contains(index) {
            return false;
        }
        self.put(cx, &[(index, (k - 1) as u32)])
    }

    fn add_all(&mut self, cx: &SetContext, src: &Self) -> bool {
        if let (Some(d), Some(s)) = (&mut self.ranged, &src.ranged) {
            return d.add_all(cx, s);
        }
        let cfg = cx.chunk();
        let dst_ranges = cx.ranges(self.owner);
        let mut entries = Vec::new();
        let mut admit = |from: Interval, i: u32| {
            for (k, &x) in dst_ranges.iter().enumerate() {
                if x.intersects(from) && in_aligned_span(cfg, x, i) {
                    entries.push((i, k as u32));
                }
            }
        };
        match &src.ranged {
            Some(s) => {
                for v in &s.vectors {
                    v.iter().for_each(|i| admit(v.interval(), i));
                }
            }
            None => {
                let src_ranges = cx.ranges(src.owner);
                for &(i, j) in src.inline.as_slice() {
                    admit(src_ranges[j as usize], i);
                }
            }
        }
        self.put(cx, &entries)
    }

    fn contains(&self, index: u32) -> bool {
        match &self.ranged {
            Some(r) => r.contains(index),
            None => self.inline.contains(index),
        }
    }

    fn len(&self) -> usize {
        match &self.ranged {
            Some(r) => r.len(),
            None => self.inline.distinct().len(),
        }
    }

    fn for_each_member(&self, f: &mut dyn FnMut(u32)) {
        match &self.ranged {
            Some(r) => r.for_each_member(f),
            None => self.inline.distinct().into_iter().for_each(f),
        }
    }

    fn footprint_bytes(&self, cx: &SetContext) -> usize {
        let vectors = self
            .ranged
            .as_ref()
            .map_or(0, |r| r.footprint_bytes(cx) - OBJECT_HEADER);
        OBJECT_HEADER + (HYBRID_INLINE + 1) * REFERENCE + vectors
    }
}

/// Any representation, dispatched at runtime.
#[derive(Clone, Debug)]
pub enum AnySet {
    Naive(NaiveSet),
    Pure(PureBitVectorSet),
    Hybrid(HybridSet),
    Shared(SharedBitVectorSet),
    Sparse(SparseBitmapSet),
    Ranged(RangedPointsToSet),
    HybridRanged(HybridRangedPointsToSet),
}

macro_rules! dispatch {
    ($self:expr, $s:ident => $body:expr) => {
        match $self {
            AnySet::Naive($s) => $body,
            AnySet::Pure($s) => $body,
            AnySet::Hybrid($s) => $body,
            AnySet::Shared($s) => $body,
            AnySet::Sparse($s) => $body,
            AnySet::Ranged($s) => $body,
            AnySet::HybridRanged($s) => $body,
        }
    };
}

impl AnySet {
    /// Empty set of `kind` for a node whose declared type is `owner`.
    pub fn new(kind: SetKind, owner: TypeId, cx: &SetContext) -> Result<Self, SetError> {
        if !cx.covers(owner) {
            return Err(SetError::UnknownType(owner.index()));
        }
        Ok(match kind {
            SetKind::Naive => AnySet::Naive(NaiveSet::new(owner)),
            SetKind::Pure => AnySet::Pure(PureBitVectorSet::new(owner, cx)),
            SetKind::Hybrid => AnySet::Hybrid(HybridSet::new(owner)),
            SetKind::Shared => AnySet::Shared(SharedBitVectorSet::new(owner)),
            SetKind::Sparse => AnySet::Sparse(SparseBitmapSet::new(owner)),
            SetKind::Ranged => AnySet::Ranged(RangedPointsToSet::new(owner, cx)),
            SetKind::HybridRanged => AnySet::HybridRanged(HybridRangedPointsToSet::new(owner)),
        })
    }

    pub fn shared_base(&self) -> Option<&Rc<SharedBase>> {
        match self {
            AnySet::Shared(s) => s.base(),
            _ => None,
        }
    }

    /// Bytes a sparse-element decomposition of this set's bit arrays would not
    /// allocate: all-zero windows of [`SAVINGS_WINDOW_CHUNKS`] chunks.
    pub fn sparse_savings(&self) -> Result<usize, SetError> {
        let w = SAVINGS_WINDOW_CHUNKS;
        match self {
            AnySet::Pure(s) => Ok(s.bits.zero_window_bytes(w)),
            AnySet::Hybrid(s) => Ok(s.bits.as_ref().map_or(0, |b| b.zero_window_bytes(w))),
            AnySet::Ranged(s) => Ok(s.vectors.iter().map(|v| v.zero_window_bytes(w)).sum()),
            AnySet::HybridRanged(s) => Ok(s.ranged.as_ref().map_or(0, |r| {
                r.vectors.iter().map(|v| v.zero_window_bytes(w)).sum()
            })),
            other => Err(SetError::UnsupportedKind(other.kind())),
        }
    }

    /// Element-wise union usable across representations.
    pub fn add_all_generic(&mut self, cx: &SetContext, src: &AnySet) -> bool {
        let mut changed = false;
        src.for_each_member(&mut |i| changed |= self.insert(cx, i));
        changed
    }
}

impl PointsToSet for AnySet {
    fn kind(&self) -> SetKind {
        dispatch!(self, s => s.kind())
    }

    fn owner(&self) -> TypeId {
        dispatch!(self, s => s.owner())
    }

    fn insert(&mut self, cx: &SetContext, index: u32) -> bool {
        dispatch!(self, s => s.insert(cx, index))
    }

    fn add_all(&mut self, cx: &SetContext, src: &Self) -> bool {
        match (self, src) {
            (AnySet::Naive(d), AnySet::Naive(s)) => d.add_all(cx, s),
            (AnySet::Pure(d), AnySet::Pure(s)) => d.add_all(cx, s),
            (AnySet::Hybrid(d), AnySet::Hybrid(s)) => d.add_all(cx, s),
            (AnySet::Shared(d), AnySet::Shared(s)) => d.add_all(cx, s),
            (AnySet::Sparse(d), AnySet::Sparse(s)) => d.add_all(cx, s),
            (AnySet::Ranged(d), AnySet::Ranged(s)) => d.add_all(cx, s),
            (AnySet::HybridRanged(d), AnySet::HybridRanged(s)) => d.add_all(cx, s),
            (d, s) => d.add_all_generic(cx, s),
        }
    }

    fn contains(&self, index: u32) -> bool {
        dispatch!(self, s => s.contains(index))
    }

    fn len(&self) -> usize {
        dispatch!(self, s => s.len())
    }

    fn for_each_member(&self, f: &mut dyn FnMut(u32)) {
        dispatch!(self, s => s.for_each_member(f))
    }

    fn members(&self) -> Vec<u32> {
        dispatch!(self, s => s.members())
    }

    fn footprint_bytes(&self, cx: &SetContext) -> usize {
        dispatch!(self, s => s.footprint_bytes(cx))
    }
}
