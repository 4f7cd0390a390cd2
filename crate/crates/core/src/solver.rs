//! Worklist propagation to the least fixpoint, solution comparison and
//! precision histograms.

use alloc::collections::{BTreeMap, BTreeSet, VecDeque};
use alloc::rc::Rc;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt::Write as _;
use core::time::Duration;

use crate::bitsets::ChunkConfig;
use crate::hierarchy::{ClassHierarchy, NumberingResult, TypeId};
use crate::pag::{FieldId, Pag, VarId};
pub use crate::ptsets::FilterMode;
use crate::ptsets::{AnySet, PointsToSet, SetContext, SetError, SetKind, SharedBase};

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum SolverError {
    #[error("set kind `{kind}` cannot be used with filter `{filter}`")]
    ConfigConflict { kind: SetKind, filter: FilterMode },
    #[error("numbering covers {numbered} allocation sites but the graph has {declared}")]
    UncoveredAllocs { numbered: u32, declared: usize },
    #[error("solutions range over different universes ({0} vs {1} allocation sites, {2} vs {3} variables)")]
    UniverseMismatch(u32, u32, usize, usize),
    #[error(transparent)]
    Set(#[from] SetError),
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum WorklistOrder {
    #[default]
    Fifo,
    Lifo,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SolverConfig {
    pub set_kind: SetKind,
    pub filter: FilterMode,
    pub chunk: ChunkConfig,
    pub order: WorklistOrder,
}

impl SolverConfig {
    pub fn new(set_kind: SetKind, filter: FilterMode) -> Self {
        SolverConfig {
            set_kind,
            filter,
            chunk: ChunkConfig::default(),
            order: WorklistOrder::Fifo,
        }
    }

    pub fn with_chunk(mut self, chunk: ChunkConfig) -> Self {
        self.chunk = chunk;
        self
    }

    pub fn with_order(mut self, order: WorklistOrder) -> Self {
        self.order = order;
        self
    }

    /// Intrinsic filtering needs a ranged kind; mask filtering a non-ranged one.
    pub fn validate(&self) -> Result<(), SolverError> {
        let ok = match self.filter {
            FilterMode::Intrinsic => self.set_kind.is_ranged(),
            FilterMode::Mask => !self.set_kind.is_ranged(),
            FilterMode::None => true,
        };
        if ok {
            Ok(())
        } else {
            Err(SolverError::ConfigConflict {
                kind: self.set_kind,
                filter: self.filter,
            })
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct PropagationStats {
    /// Worklist pops.
    pub iterations: u64,
    /// Union and insertion attempts.
    pub union_ops: u64,
    /// Distinct nodes popped at least once.
    pub nodes_processed: u64,
    pub total_footprint_bytes: u64,
    /// Only measured with the `std` feature.
    pub wall_time: Option<Duration>,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Footprint {
    pub var_bytes: u64,
    pub field_bytes: u64,
    /// Distinct shared bases, each counted once.
    pub shared_base_bytes: u64,
    pub shared_bases: u64,
}

impl Footprint {
    pub fn total(&self) -> u64 {
        self.var_bytes + self.field_bytes + self.shared_base_bytes
    }
}

/// A variable, or the field `field` of the object allocated at `alloc` (an index).
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum NodeKey {
    Var(VarId),
    Field { alloc: u32, field: FieldId },
}

#[derive(Debug)]
pub struct Solution {
    cx: SetContext,
    config: SolverConfig,
    sets: Vec<AnySet>,
    var_count: usize,
    field_keys: Vec<(u32, FieldId)>,
    field_nodes: BTreeMap<(u32, FieldId), usize>,
    site_index: Vec<u32>,
    stats: PropagationStats,
}

/// Mutable propagation state; also used for the verification pass.
struct Engine<'a> {
    pag: &'a Pag,
    cx: &'a SetContext,
    kind: SetKind,
    sets: Vec<AnySet>,
    field_keys: Vec<(u32, FieldId)>,
    field_nodes: BTreeMap<(u32, FieldId), usize>,
    succ: Vec<Vec<usize>>,
    edges: BTreeSet<(usize, usize)>,
    stores_by_base: Vec<Vec<(FieldId, usize)>>,
    loads_by_base: Vec<Vec<(FieldId, usize)>>,
    handled: Vec<BTreeSet<u32>>,
    queue: VecDeque<usize>,
    queued: Vec<bool>,
    visited: Vec<bool>,
    order: WorklistOrder,
    stats: PropagationStats,
    /// Successful unions; only the verification pass reads it.
    changes: u64,
}

fn pair_mut<T>(v: &mut [T], a: usize, b: usize) -> (&mut T, &T) {
    debug_assert_ne!(a, b);
    if a < b {
        let (lo, hi) = v.split_at_mut(b);
        (&mut lo[a], &hi[0])
    } else {
        let (lo, hi) = v.split_at_mut(a);
        (&mut hi[0], &lo[b])
    }
}

impl<'a> Engine<'a> {
    fn new(
        pag: &'a Pag,
        cx: &'a SetContext,
        kind: SetKind,
        order: WorklistOrder,
    ) -> Result<Self, SolverError> {
        let sets = pag
            .vars()
            .iter()
            .map(|v| AnySet::new(kind, v.ty, cx))
            .collect::<Result<Vec<_>, _>>()?;
        for f in pag.fields() {
            if !cx.covers(f.ty) {
                return Err(SetError::UnknownType(f.ty.index()).into());
            }
        }
        let n = sets.len();
        let mut engine = Engine {
            pag,
            cx,
            kind,
            sets,
            field_keys: Vec::new(),
            field_nodes: BTreeMap::new(),
            succ: alloc::vec![Vec::new(); n],
            edges: BTreeSet::new(),
            stores_by_base: alloc::vec![Vec::new(); n],
            loads_by_base: alloc::vec![Vec::new(); n],
            handled: alloc::vec![BTreeSet::new(); n],
            queue: VecDeque::new(),
            queued: alloc::vec![false; n],
            visited: alloc::vec![false; n],
            order,
            stats: PropagationStats::default(),
            changes: 0,
        };
        for a in &pag.assigns {
            engine.add_edge(a.src.index(), a.dst.index());
        }
        for s in &pag.stores {
            engine.stores_by_base[s.base.index()].push((s.field, s.src.index()));
        }
        for l in &pag.loads {
            engine.loads_by_base[l.base.index()].push((l.field, l.dst.index()));
        }
        Ok(engine)
    }

    fn add_edge(&mut self, src: usize, dst: usize) -> bool {
        if src == dst || !self.edges.insert((src, dst)) {
            return false;
        }
        self.succ[src].push(dst);
        true
    }

    fn field_node(&mut self, alloc: u32, field: FieldId) -> usize {
        if let Some(&n) = self.field_nodes.get(&(alloc, field)) {
            return n;
        }
        let owner = self.pag.field(field).ty;
        let set = AnySet::new(self.kind, owner, self.cx).expect("field types checked up front");
        let n = self.sets.len();
        self.sets.push(set);
        self.field_keys.push((alloc, field));
        self.field_nodes.insert((alloc, field), n);
        self.succ.push(Vec::new());
        self.queued.push(false);
        self.visited.push(false);
        n
    }

    fn push(&mut self, n: usize) {
        if !self.queued[n] {
            self.queued[n] = true;
            self.queue.push_back(n);
        }
    }

    fn pop(&mut self) -> Option<usize> {
        let n = match self.order {
            WorklistOrder::Fifo => self.queue.pop_front(),
            WorklistOrder::Lifo => self.queue.pop_back(),
        }?;
        self.queued[n] = false;
        Some(n)
    }

    /// `pt(dst) ⊇ pt(src)`; returns whether `dst` changed.
    fn union(&mut self, dst: usize, src: usize) -> bool {
        if dst == src {
            return false;
        }
        self.stats.union_ops += 1;
        let (d, s) = pair_mut(&mut self.sets, dst, src);
        let changed = d.add_all(self.cx, s);
        if changed {
            self.changes += 1;
        }
        changed
    }

    fn seed(&mut self, site_index: &[u32]) {
        for e in &self.pag.news {
            let var = e.var.index();
            self.stats.union_ops += 1;
            if self.sets[var].insert(self.cx, site_index[e.alloc.index()]) {
                self.changes += 1;
                self.push(var);
            }
        }
    }

    /// Wires field nodes for objects that reached `base` since its last visit.
    fn expand_base(&mut self, base: usize) {
        if self.stores_by_base[base].is_empty() && self.loads_by_base[base].is_empty() {
            return;
        }
        let fresh: Vec<u32> = self.sets[base]
            .members()
            .into_iter()
            .filter(|o| !self.handled[base].contains(o))
            .collect();
        for o in fresh {
            self.handled[base].insert(o);
            for k in 0..self.stores_by_base[base].len() {
                let (field, src) = self.stores_by_base[base][k];
                let node = self.field_node(o, field);
                if self.add_edge(src, node) && self.union(node, src) {
                    self.push(node);
                }
            }
            for k in 0..self.loads_by_base[base].len() {
                let (field, dst) = self.loads_by_base[base][k];
                let node = self.field_node(o, field);
                if self.add_edge(node, dst) && self.union(dst, node) {
                    self.push(dst);
                }
            }
        }
    }

    fn run(&mut self) {
        while let Some(n) = self.pop() {
            self.stats.iterations += 1;
            if !self.visited[n] {
                self.visited[n] = true;
                self.stats.nodes_processed += 1;
            }
            if n < self.pag.vars().len() {
                self.expand_base(n);
            }
            for k in 0..self.succ[n].len() {
                let dst = self.succ[n][k];
                if self.union(dst, n) {
                    self.push(dst);
                }
            }
        }
    }
}

/// Solves the constraints of `pag` with one representation and filter.
pub fn propagate(
    pag: &Pag,
    nr: &NumberingResult,
    h: &ClassHierarchy,
    cfg: &SolverConfig,
) -> Result<Solution, SolverError> {
    cfg.validate()?;
    if nr.total_allocs() as usize != pag.allocs().len() {
        return Err(SolverError::UncoveredAllocs {
            numbered: nr.total_allocs(),
            declared: pag.allocs().len(),
        });
    }
    let cx = SetContext::new(h, nr, cfg.chunk, cfg.filter);
    let site_index: Vec<u32> = (0..pag.allocs().len()).map(|s| nr.index_of(s)).collect();

    #[cfg(feature = "std")]
    let start = std::time::Instant::now();

    let mut engine = Engine::new(pag, &cx, cfg.set_kind, cfg.order)?;
    engine.seed(&site_index);
    engine.run();

    #[allow(unused_mut)]
    let mut stats = engine.stats;
    #[cfg(feature = "std")]
    {
        stats.wall_time = Some(start.elapsed());
    }
    let Engine {
        sets,
        field_keys,
        field_nodes,
        ..
    } = engine;
    let mut sol = Solution {
        cx,
        config: *cfg,
        sets,
        var_count: pag.vars().len(),
        field_keys,
        field_nodes,
        site_index,
        stats,
    };
    sol.stats.total_footprint_bytes = sol.footprint().total();
    Ok(sol)
}

impl Solution {
    pub fn config(&self) -> &SolverConfig {
        &self.config
    }

    pub fn context(&self) -> &SetContext {
        &self.cx
    }

    pub fn stats(&self) -> &PropagationStats {
        &self.stats
    }

    pub fn total_allocs(&self) -> u32 {
        self.cx.total_allocs()
    }

    pub fn var_set(&self, v: VarId) -> &AnySet {
        &self.sets[v.index()]
    }

    /// Field node of the object numbered `alloc`, if it was ever created.
    pub fn field_set(&self, alloc: u32, field: FieldId) -> Option<&AnySet> {
        self.field_nodes
            .get(&(alloc, field))
            .map(|&n| &self.sets[n])
    }

    pub fn field_node_count(&self) -> usize {
        self.field_keys.len()
    }

    /// Every node with its set: variables first, then field nodes in creation order.
    pub fn nodes(&self) -> impl Iterator<Item = (NodeKey, &AnySet)> + '_ {
        let vars = (0..self.var_count).map(|i| (NodeKey::Var(VarId(i as u32)), &self.sets[i]));
        let fields = self
            .field_keys
            .iter()
            .zip(&self.sets[self.var_count..])
            .map(|(&(alloc, field), s)| (NodeKey::Field { alloc, field }, s));
        vars.chain(fields)
    }

    pub fn set_of(&self, key: NodeKey) -> Option<&AnySet> {
        match key {
            NodeKey::Var(v) => self
                .sets
                .get(v.index())
                .filter(|_| v.index() < self.var_count),
            NodeKey::Field { alloc, field } => self.field_set(alloc, field),
        }
    }

    /// Modeled bytes of all sets; each distinct shared base is counted once.
    pub fn footprint(&self) -> Footprint {
        let mut fp = Footprint::default();
        let mut bases: BTreeSet<*const SharedBase> = BTreeSet::new();
        for (i, s) in self.sets.iter().enumerate() {
            let bytes = s.footprint_bytes(&self.cx) as u64;
            if i < self.var_count {
                fp.var_bytes += bytes;
            } else {
                fp.field_bytes += bytes;
            }
            if let Some(base) = s.shared_base() {
                if bases.insert(Rc::as_ptr(base)) {
                    fp.shared_base_bytes += base.footprint_bytes() as u64;
                }
            }
        }
        fp.shared_bases = bases.len() as u64;
        fp
    }

    /// Sum of [`AnySet::sparse_savings`] over all sets.
    pub fn sparse_savings(&self) -> Result<u64, SetError> {
        self.sets
            .iter()
            .map(|s| s.sparse_savings().map(|b| b as u64))
            .sum()
    }

    /// Applies every constraint once more to a copy of the sets and returns
    /// the number of unions that changed something. Zero at a fixpoint.
    pub fn recheck(&self, pag: &Pag) -> u64 {
        let mut engine = Engine::new(pag, &self.cx, self.config.set_kind, self.config.order)
            .expect("solution was built from this graph");
        engine.sets = self.sets.clone();
        engine.field_keys = self.field_keys.clone();
        engine.field_nodes = self.field_nodes.clone();
        let extra = engine.sets.len() - self.var_count;
        engine.succ.resize(engine.sets.len(), Vec::new());
        engine.queued.resize(engine.sets.len(), false);
        engine.visited.resize(engine.sets.len(), false);
        debug_assert_eq!(extra, engine.field_keys.len());

        engine.seed(&self.site_index);
        for a in &pag.assigns {
            engine.union(a.dst.index(), a.src.index());
        }
        for s in &pag.stores {
            for o in engine.sets[s.base.index()].members() {
                let node = engine.field_node(o, s.field);
                engine.union(node, s.src.index());
            }
        }
        for l in &pag.loads {
            for o in engine.sets[l.base.index()].members() {
                let node = engine.field_node(o, l.field);
                engine.union(l.dst.index(), node);
            }
        }
        engine.changes
    }

    /// One line per non-empty node, sorted: `var <name>: <sites>` or
    /// `field <site>.<field>: <sites>`, sites sorted by name.
    pub fn canonical_text(&self, pag: &Pag) -> String {
        let site_at: BTreeMap<u32, usize> = self
            .site_index
            .iter()
            .enumerate()
            .map(|(site, &idx)| (idx, site))
            .collect();
        let names = |s: &AnySet| {
            let mut v: Vec<&str> = s
                .members()
                .into_iter()
                .map(|i| pag.allocs()[site_at[&i]].name.as_str())
                .collect();
            v.sort_unstable();
            v.join(" ")
        };
        let mut lines: Vec<String> = Vec::new();
        for (key, set) in self.nodes() {
            if set.is_empty() {
                continue;
            }
            let label = match key {
                NodeKey::Var(v) => alloc::format!("var {}", pag.var(v).name),
                NodeKey::Field { alloc, field } => alloc::format!(
                    "field {}.{}",
                    pag.allocs()[site_at[&alloc]].name,
                    pag.field(field).name
                ),
            };
            lines.push(alloc::format!("{label}: {}", names(set)));
        }
        lines.sort_unstable();
        let mut out = String::new();
        for l in lines {
            let _ = writeln!(out, "{l}");
        }
        out
    }
}

/// Members one solution has beyond the other at a node.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NodeDiff {
    pub node: NodeKey,
    pub owner: TypeId,
    /// `(index, in_slack)`, ascending.
    pub extras: Vec<(u32, bool)>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Comparison {
    Equal,
    ASupersetOfB(Vec<NodeDiff>),
    BSupersetOfA(Vec<NodeDiff>),
    Incomparable {
        a_extra: Vec<NodeDiff>,
        b_extra: Vec<NodeDiff>,
    },
}

impl Comparison {
    pub fn label(&self) -> &'static str {
        match self {
            Comparison::Equal => "equal",
            Comparison::ASupersetOfB(_) => "a-superset-of-b",
            Comparison::BSupersetOfA(_) => "b-superset-of-a",
            Comparison::Incomparable { .. } => "incomparable",
        }
    }

    /// Extra members of the larger side; empty when equal or incomparable.
    pub fn diffs(&self) -> &[NodeDiff] {
        match self {
            Comparison::ASupersetOfB(d) | Comparison::BSupersetOfA(d) => d,
            _ => &[],
        }
    }
}

fn extras(node: NodeKey, from: &Solution, other: Option<&AnySet>) -> Option<NodeDiff> {
    let set = from.set_of(node)?;
    let extras: Vec<(u32, bool)> = set
        .members()
        .into_iter()
        .filter(|&i| !other.is_some_and(|o| o.contains(i)))
        .map(|i| (i, from.cx.in_slack(set.owner(), i)))
        .collect();
    (!extras.is_empty()).then(|| NodeDiff {
        node,
        owner: set.owner(),
        extras,
    })
}

/// Per-node membership comparison. Field nodes missing on one side count as empty.
pub fn compare(a: &Solution, b: &Solution) -> Result<Comparison, SolverError> {
    if a.total_allocs() != b.total_allocs() || a.var_count != b.var_count {
        return Err(SolverError::UniverseMismatch(
            a.total_allocs(),
            b.total_allocs(),
            a.var_count,
            b.var_count,
        ));
    }
    let keys: BTreeSet<NodeKey> = a.nodes().chain(b.nodes()).map(|(k, _)| k).collect();
    let mut a_extra = Vec::new();
    let mut b_extra = Vec::new();
    for key in keys {
        a_extra.extend(extras(key, a, b.set_of(key)));
        b_extra.extend(extras(key, b, a.set_of(key)));
    }
    Ok(match (a_extra.is_empty(), b_extra.is_empty()) {
        (true, true) => Comparison::Equal,
        (false, true) => Comparison::ASupersetOfB(a_extra),
        (true, false) => Comparison::BSupersetOfA(b_extra),
        (false, false) => Comparison::Incomparable { a_extra, b_extra },
    })
}

pub const BUCKET_LABELS: [&str; 7] = ["0", "1", "2", "3-10", "11-100", "101-1000", ">1000"];

pub fn bucket_of(size: usize) -> usize {
    match size {
        0 => 0,
        1 => 1,
        2 => 2,
        3..=10 => 3,
        11..=100 => 4,
        101..=1000 => 5,
        _ => 6,
    }
}

/// Set sizes of dereferenced variables, each variable weighted equally.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Histogram {
    pub counts: [u64; 7],
    pub population: u64,
}

impl Histogram {
    /// All zero for an empty population.
    pub fn percentages(&self) -> [f64; 7] {
        let mut out = [0.0; 7];
        if self.population > 0 {
            for (o, &c) in out.iter_mut().zip(&self.counts) {
                *o = c as f64 * 100.0 / self.population as f64;
            }
        }
        out
    }
}

pub fn precision_histogram(sol: &Solution, pag: &Pag) -> Histogram {
    let mut h = Histogram::default();
    for v in pag.dereferenced_vars() {
        h.counts[bucket_of(sol.var_set(v).len())] += 1;
        h.population += 1;
    }
    h
}
