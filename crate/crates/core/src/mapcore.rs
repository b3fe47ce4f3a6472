//! Partial maps, block map matrices, map graphs and the cycle-consistency
//! oracle.
//!
//! A collection of partial maps between `n` objects is stored as one
//! symmetric `N x N` block matrix whose `(i, j)` block encodes the map from
//! object `i` to object `j` and whose diagonal blocks are identities. Two
//! storage modes share the type: a sparse binary mode for input maps and
//! rounded output, and a dense relaxed mode for solver iterates.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use crate::error::{CycleWitness, Error, Result};

/// Slack allowed on row/column sums and entry ranges of relaxed blocks.
pub const NUMERIC_SLACK: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub enum BlockEntries {
    /// Sorted, deduplicated `(row, col)` positions holding a one.
    Binary(Vec<(usize, usize)>),
    /// Row-major dense values.
    Relaxed(Vec<f64>),
}

/// One `|S_i| x |S_j|` block of a map collection.
#[derive(Debug, Clone, PartialEq)]
pub struct PartialMapBlock {
    rows: usize,
    cols: usize,
    entries: BlockEntries,
}

impl PartialMapBlock {
    pub fn binary(rows: usize, cols: usize, pairs: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        let mut pairs: Vec<_> = pairs.into_iter().collect();
        if let Some(&(r, c)) = pairs.iter().find(|&&(r, c)| r >= rows || c >= cols) {
            return Err(Error::ShapeMismatch(format!(
                "entry ({r},{c}) outside a {rows}x{cols} block"
            )));
        }
        pairs.sort_unstable();
        pairs.dedup();
        Ok(Self {
            rows,
            cols,
            entries: BlockEntries::Binary(pairs),
        })
    }

    pub fn relaxed(rows: usize, cols: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != rows * cols {
            return Err(Error::ShapeMismatch(format!(
                "{} values for a {rows}x{cols} block",
                values.len()
            )));
        }
        Ok(Self {
            rows,
            cols,
            entries: BlockEntries::Relaxed(values),
        })
    }

    pub fn identity(size: usize) -> Self {
        Self {
            rows: size,
            cols: size,
            entries: BlockEntries::Binary((0..size).map(|k| (k, k)).collect()),
        }
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            entries: BlockEntries::Binary(Vec::new()),
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn entries(&self) -> &BlockEntries {
        &self.entries
    }

    pub fn is_binary(&self) -> bool {
        matches!(self.entries, BlockEntries::Binary(_))
    }

    /// Nonzero positions of a binary block.
    pub fn pairs(&self) -> Option<&[(usize, usize)]> {
        match &self.entries {
            BlockEntries::Binary(p) => Some(p),
            BlockEntries::Relaxed(_) => None,
        }
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        match &self.entries {
            BlockEntries::Binary(p) => {
                if p.binary_search(&(r, c)).is_ok() {
                    1.0
                } else {
                    0.0
                }
            }
            BlockEntries::Relaxed(v) => v[r * self.cols + c],
        }
    }

    pub fn to_dense(&self) -> Vec<f64> {
        match &self.entries {
            BlockEntries::Binary(p) => {
                let mut out = vec![0.0; self.rows * self.cols];
                for &(r, c) in p {
                    out[r * self.cols + c] = 1.0;
                }
                out
            }
            BlockEntries::Relaxed(v) => v.clone(),
        }
    }

    pub fn transpose(&self) -> Self {
        let entries = match &self.entries {
            BlockEntries::Binary(p) => {
                let mut t: Vec<_> = p.iter().map(|&(r, c)| (c, r)).collect();
                t.sort_unstable();
                BlockEntries::Binary(t)
            }
            BlockEntries::Relaxed(v) => {
                let mut t = vec![0.0; v.len()];
                for r in 0..self.rows {
                    for c in 0..self.cols {
                        t[c * self.rows + r] = v[r * self.cols + c];
                    }
                }
                BlockEntries::Relaxed(t)
            }
        };
        Self {
            rows: self.cols,
            cols: self.rows,
            entries,
        }
    }

    fn approx_eq(&self, other: &Self) -> bool {
        if self.rows != other.rows || self.cols != other.cols {
            return false;
        }
        match (&self.entries, &other.entries) {
            (BlockEntries::Binary(a), BlockEntries::Binary(b)) => a == b,
            _ => self
                .to_dense()
                .iter()
                .zip(other.to_dense())
                .all(|(a, b)| (a - b).abs() <= NUMERIC_SLACK),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ViolationKind {
    RowSum,
    ColumnSum,
    /// A relaxed entry outside `[0, 1 + NUMERIC_SLACK]`.
    EntryRange,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Violation {
    pub kind: ViolationKind,
    /// Row or column index; for `EntryRange` the row-major entry index.
    pub index: usize,
    pub value: f64,
}

/// Checks the doubly sub-stochastic constraints `0 <= B1 <= 1`, `0 <= B'1 <= 1`.
pub fn validate_substochastic(block: &PartialMapBlock) -> std::result::Result<(), Vec<Violation>> {
    let limit = if block.is_binary() { 1.0 } else { 1.0 + NUMERIC_SLACK };
    let mut row_sums = vec![0.0; block.rows];
    let mut col_sums = vec![0.0; block.cols];
    let mut violations = Vec::new();
    match &block.entries {
        BlockEntries::Binary(pairs) => {
            for &(r, c) in pairs {
                row_sums[r] += 1.0;
                col_sums[c] += 1.0;
            }
        }
        BlockEntries::Relaxed(values) => {
            for (k, &v) in values.iter().enumerate() {
                if !(-NUMERIC_SLACK..=limit).contains(&v) {
                    violations.push(Violation {
                        kind: ViolationKind::EntryRange,
                        index: k,
                        value: v,
                    });
                }
                row_sums[k / block.cols] += v;
                col_sums[k % block.cols] += v;
            }
        }
    }
    for (index, &value) in row_sums.iter().enumerate() {
        if value > limit {
            violations.push(Violation {
                kind: ViolationKind::RowSum,
                index,
                value,
            });
        }
    }
    for (index, &value) in col_sums.iter().enumerate() {
        if value > limit {
            violations.push(Violation {
                kind: ViolationKind::ColumnSum,
                index,
                value,
            });
        }
    }
    if violations.is_empty() {
        Ok(())
    } else {
        Err(violations)
    }
}

/// Object sizes and the offsets of each object's rows in the stacked index.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BlockLayout {
    sizes: Vec<usize>,
    offsets: Vec<usize>,
}

impl BlockLayout {
    pub fn new(sizes: Vec<usize>) -> Self {
        let mut offsets = Vec::with_capacity(sizes.len() + 1);
        let mut acc = 0;
        offsets.push(0);
        for &s in &sizes {
            acc += s;
            offsets.push(acc);
        }
        Self { sizes, offsets }
    }

    pub fn n(&self) -> usize {
        self.sizes.len()
    }

    /// Total number of points `N`.
    pub fn order(&self) -> usize {
        *self.offsets.last().unwrap_or(&0)
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    pub fn size(&self, i: usize) -> usize {
        self.sizes[i]
    }

    pub fn offset(&self, i: usize) -> usize {
        self.offsets[i]
    }

    pub fn range(&self, i: usize) -> std::ops::Range<usize> {
        self.offsets[i]..self.offsets[i + 1]
    }

    pub fn max_size(&self) -> usize {
        self.sizes.iter().copied().max().unwrap_or(0)
    }

    /// Maps a stacked row index to `(object, local row)`.
    pub fn locate(&self, global: usize) -> (usize, usize) {
        assert!(global < self.order(), "row {global} out of range");
        // offsets is non-decreasing; empty objects share an offset with their successor
        let obj = self.offsets.partition_point(|&o| o <= global) - 1;
        (obj, global - self.offsets[obj])
    }

    /// Object index of every stacked row.
    pub fn owners(&self) -> Vec<usize> {
        let mut out = Vec::with_capacity(self.order());
        for (i, &s) in self.sizes.iter().enumerate() {
            out.extend(std::iter::repeat_n(i, s));
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Binary,
    Relaxed,
}

/// How `assemble` treats blocks `(i,j)` and `(j,i)` that are both supplied.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SymmetryPolicy {
    /// Both must be mutual transposes.
    #[default]
    Reject,
    /// Union of `X_ij` and `X_ji^T`, then re-validated as sub-stochastic.
    TransposeOr,
}

#[derive(Debug, Clone, PartialEq)]
enum Storage {
    /// Nonempty off-diagonal blocks with `i < j`.
    Binary(BTreeMap<(usize, usize), Vec<(usize, usize)>>),
    /// Full symmetric `N x N` row-major matrix, diagonal blocks included.
    Relaxed(Vec<f64>),
}

/// Symmetric block matrix encoding a full collection of partial maps.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockMapMatrix {
    layout: BlockLayout,
    storage: Storage,
}

impl BlockMapMatrix {
    /// The collection with no correspondences between distinct objects.
    pub fn diagonal(sizes: Vec<usize>) -> Self {
        Self {
            layout: BlockLayout::new(sizes),
            storage: Storage::Binary(BTreeMap::new()),
        }
    }

    pub fn assemble(
        sizes: Vec<usize>,
        blocks: impl IntoIterator<Item = ((usize, usize), PartialMapBlock)>,
    ) -> Result<Self> {
        Self::assemble_with(sizes, blocks, SymmetryPolicy::Reject)
    }

    /// Builds the block matrix from off-diagonal blocks. Missing blocks are
    /// zero, diagonal blocks are filled with identities, and the lower
    /// triangle is the transpose of the upper one.
    pub fn assemble_with(
        sizes: Vec<usize>,
        blocks: impl IntoIterator<Item = ((usize, usize), PartialMapBlock)>,
        policy: SymmetryPolicy,
    ) -> Result<Self> {
        let layout = BlockLayout::new(sizes);
        let n = layout.n();
        let mut upper: BTreeMap<(usize, usize), PartialMapBlock> = BTreeMap::new();
        let mut lower: BTreeMap<(usize, usize), PartialMapBlock> = BTreeMap::new();
        for ((i, j), block) in blocks {
            if i >= n || j >= n {
                return Err(Error::ShapeMismatch(format!("block ({i},{j}) with only {n} objects")));
            }
            if block.rows != layout.size(i) || block.cols != layout.size(j) {
                return Err(Error::ShapeMismatch(format!(
                    "block ({i},{j}) is {}x{}, expected {}x{}",
                    block.rows,
                    block.cols,
                    layout.size(i),
                    layout.size(j)
                )));
            }
            if i == j {
                if !block.approx_eq(&PartialMapBlock::identity(layout.size(i))) {
                    return Err(Error::NonIdentityDiagonal(i));
                }
                continue;
            }
            let (key, oriented) = if i < j {
                ((i, j), block)
            } else {
                ((j, i), block.transpose())
            };
            let slot = if i < j { &mut upper } else { &mut lower };
            if slot.insert(key, oriented).is_some() {
                return Err(Error::ShapeMismatch(format!("block ({i},{j}) supplied twice")));
            }
        }

        let mut merged: BTreeMap<(usize, usize), PartialMapBlock> = BTreeMap::new();
        let keys: BTreeSet<_> = upper.keys().chain(lower.keys()).copied().collect();
        for key in keys {
            let block = match (upper.remove(&key), lower.remove(&key)) {
                (Some(a), Some(b)) => {
                    if a.approx_eq(&b) {
                        a
                    } else if policy == SymmetryPolicy::TransposeOr && a.is_binary() && b.is_binary() {
                        PartialMapBlock::binary(
                            a.rows,
                            a.cols,
                            a.pairs().unwrap().iter().chain(b.pairs().unwrap()).copied(),
                        )?
                    } else {
                        return Err(Error::AsymmetricInput { i: key.0, j: key.1 });
                    }
                }
                (Some(a), None) | (None, Some(a)) => a,
                (None, None) => unreachable!(),
            };
            if validate_substochastic(&block).is_err() {
                return Err(Error::NotSubstochastic { i: key.0, j: key.1 });
            }
            merged.insert(key, block);
        }

        if merged.values().all(PartialMapBlock::is_binary) {
            let storage = merged
                .into_iter()
                .filter_map(|(k, b)| match b.entries {
                    BlockEntries::Binary(p) if !p.is_empty() => Some((k, p)),
                    _ => None,
                })
                .collect();
            return Ok(Self {
                layout,
                storage: Storage::Binary(storage),
            });
        }

        let order = layout.order();
        let mut dense = vec![0.0; order * order];
        for p in 0..order {
            dense[p * order + p] = 1.0;
        }
        for ((i, j), block) in merged {
            let (oi, oj) = (layout.offset(i), layout.offset(j));
            for r in 0..block.rows {
                for c in 0..block.cols {
                    let v = block.get(r, c);
                    dense[(oi + r) * order + oj + c] = v;
                    dense[(oj + c) * order + oi + r] = v;
                }
            }
        }
        Ok(Self {
            layout,
            storage: Storage::Relaxed(dense),
        })
    }

    /// Wraps a dense symmetric `N x N` matrix as a relaxed block matrix.
    /// The two triangles are averaged after an asymmetry check.
    pub fn from_dense(sizes: Vec<usize>, mut values: Vec<f64>) -> Result<Self> {
        let layout = BlockLayout::new(sizes);
        let order = layout.order();
        if values.len() != order * order {
            return Err(Error::ShapeMismatch(format!(
                "{} values for an order-{order} matrix",
                values.len()
            )));
        }
        let scale = values.iter().fold(1.0_f64, |m, v| m.max(v.abs()));
        for p in 0..order {
            for q in p + 1..order {
                let (a, b) = (values[p * order + q], values[q * order + p]);
                if (a - b).abs() > 1e-9 * scale {
                    let (i, _) = layout.locate(p);
                    let (j, _) = layout.locate(q);
                    return Err(Error::AsymmetricInput { i, j });
                }
                let avg = 0.5 * (a + b);
                values[p * order + q] = avg;
                values[q * order + p] = avg;
            }
        }
        Ok(Self {
            layout,
            storage: Storage::Relaxed(values),
        })
    }

    pub fn layout(&self) -> &BlockLayout {
        &self.layout
    }

    pub fn n(&self) -> usize {
        self.layout.n()
    }

    pub fn sizes(&self) -> &[usize] {
        self.layout.sizes()
    }

    pub fn order(&self) -> usize {
        self.layout.order()
    }

    pub fn mode(&self) -> Mode {
        match self.storage {
            Storage::Binary(_) => Mode::Binary,
            Storage::Relaxed(_) => Mode::Relaxed,
        }
    }

    pub fn is_binary(&self) -> bool {
        self.mode() == Mode::Binary
    }

    /// Entry at stacked position `(p, q)`.
    pub fn get(&self, p: usize, q: usize) -> f64 {
        match &self.storage {
            Storage::Relaxed(v) => v[p * self.order() + q],
            Storage::Binary(blocks) => {
                let (i, r) = self.layout.locate(p);
                let (j, c) = self.layout.locate(q);
                if i == j {
                    return if r == c { 1.0 } else { 0.0 };
                }
                let (key, pos) = if i < j { ((i, j), (r, c)) } else { ((j, i), (c, r)) };
                match blocks.get(&key) {
                    Some(pairs) if pairs.binary_search(&pos).is_ok() => 1.0,
                    _ => 0.0,
                }
            }
        }
    }

    /// Block `(i, j)`; diagonal blocks come back as identities in binary mode.
    pub fn block(&self, i: usize, j: usize) -> PartialMapBlock {
        let (ri, cj) = (self.layout.size(i), self.layout.size(j));
        match &self.storage {
            Storage::Binary(blocks) => {
                if i == j {
                    return PartialMapBlock::identity(ri);
                }
                let (key, flip) = if i < j { ((i, j), false) } else { ((j, i), true) };
                let block = PartialMapBlock {
                    rows: self.layout.size(key.0),
                    cols: self.layout.size(key.1),
                    entries: BlockEntries::Binary(blocks.get(&key).cloned().unwrap_or_default()),
                };
                if flip {
                    block.transpose()
                } else {
                    block
                }
            }
            Storage::Relaxed(v) => {
                let order = self.order();
                let (oi, oj) = (self.layout.offset(i), self.layout.offset(j));
                let mut out = Vec::with_capacity(ri * cj);
                for r in 0..ri {
                    out.extend_from_slice(&v[(oi + r) * order + oj..(oi + r) * order + oj + cj]);
                }
                PartialMapBlock {
                    rows: ri,
                    cols: cj,
                    entries: BlockEntries::Relaxed(out),
                }
            }
        }
    }

    /// Nonempty off-diagonal blocks `(i < j)` of a binary matrix.
    pub fn binary_blocks(&self) -> impl Iterator<Item = ((usize, usize), &[(usize, usize)])> + '_ {
        let map = match &self.storage {
            Storage::Binary(b) => Some(b),
            Storage::Relaxed(_) => None,
        };
        map.into_iter()
            .flat_map(|m| m.iter().map(|(&k, v)| (k, v.as_slice())))
    }

    /// Off-diagonal correspondences `(p, q)`, `p < q`, in stacked indices.
    pub fn correspondences(&self) -> Vec<(usize, usize)> {
        match &self.storage {
            Storage::Binary(blocks) => {
                let mut out: Vec<_> = blocks
                    .iter()
                    .flat_map(|(&(i, j), pairs)| {
                        let (oi, oj) = (self.layout.offset(i), self.layout.offset(j));
                        pairs.iter().map(move |&(r, c)| (oi + r, oj + c))
                    })
                    .collect();
                out.sort_unstable();
                out
            }
            Storage::Relaxed(v) => {
                let order = self.order();
                let owners = self.layout.owners();
                let mut out = Vec::new();
                for p in 0..order {
                    for q in p + 1..order {
                        if owners[p] != owners[q] && v[p * order + q] > 0.5 {
                            out.push((p, q));
                        }
                    }
                }
                out
            }
        }
    }

    /// Full symmetric dense matrix, row-major.
    pub fn to_dense(&self) -> Vec<f64> {
        match &self.storage {
            Storage::Relaxed(v) => v.clone(),
            Storage::Binary(_) => {
                let order = self.order();
                let mut out = vec![0.0; order * order];
                for p in 0..order {
                    out[p * order + p] = 1.0;
                }
                for (p, q) in self.correspondences() {
                    out[p * order + q] = 1.0;
                    out[q * order + p] = 1.0;
                }
                out
            }
        }
    }

    /// Copy with the listed off-diagonal blocks (and their transposes) zeroed.
    pub fn with_blocks_zeroed(&self, pairs: &BTreeSet<(usize, usize)>) -> Self {
        let norm = |i: usize, j: usize| if i < j { (i, j) } else { (j, i) };
        let zeroed: BTreeSet<_> = pairs.iter().map(|&(i, j)| norm(i, j)).collect();
        let storage = match &self.storage {
            Storage::Binary(blocks) => Storage::Binary(
                blocks
                    .iter()
                    .filter(|(k, _)| !zeroed.contains(k))
                    .map(|(k, v)| (*k, v.clone()))
                    .collect(),
            ),
            Storage::Relaxed(v) => {
                let order = self.order();
                let mut v = v.clone();
                for &(i, j) in &zeroed {
                    for p in self.layout.range(i) {
                        for q in self.layout.range(j) {
                            v[p * order + q] = 0.0;
                            v[q * order + p] = 0.0;
                        }
                    }
                }
                Storage::Relaxed(v)
            }
        };
        Self {
            layout: self.layout.clone(),
            storage,
        }
    }

    /// Relaxed copy of a binary matrix (identity on relaxed input).
    pub fn to_relaxed(&self) -> Self {
        match self.storage {
            Storage::Relaxed(_) => self.clone(),
            Storage::Binary(_) => Self {
                layout: self.layout.clone(),
                storage: Storage::Relaxed(self.to_dense()),
            },
        }
    }

    /// Adjacency lists of the correspondence graph on stacked rows.
    pub(crate) fn neighbor_lists(&self) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); self.order()];
        for (p, q) in self.correspondences() {
            adj[p].push(q);
            adj[q].push(p);
        }
        for a in &mut adj {
            a.sort_unstable();
        }
        adj
    }
}

/// Pairs of objects with an observed input map.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MapGraph {
    n: usize,
    edges: BTreeSet<(usize, usize)>,
}

impl MapGraph {
    pub fn new(n: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        let mut set = BTreeSet::new();
        for (i, j) in edges {
            if i == j {
                return Err(Error::InvalidParams(format!("self-loop at vertex {i}")));
            }
            if i >= n || j >= n {
                return Err(Error::InvalidParams(format!("edge ({i},{j}) with only {n} vertices")));
            }
            set.insert((i.min(j), i.max(j)));
        }
        Ok(Self { n, edges: set })
    }

    pub fn complete(n: usize) -> Self {
        Self {
            n,
            edges: (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect(),
        }
    }

    pub fn empty(n: usize) -> Self {
        Self {
            n,
            edges: BTreeSet::new(),
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Edges as `(i, j)` with `i < j`, sorted.
    pub fn edges(&self) -> &BTreeSet<(usize, usize)> {
        &self.edges
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn contains(&self, i: usize, j: usize) -> bool {
        self.edges.contains(&(i.min(j), i.max(j)))
    }

    pub fn degrees(&self) -> Vec<usize> {
        let mut deg = vec![0; self.n];
        for &(i, j) in &self.edges {
            deg[i] += 1;
            deg[j] += 1;
        }
        deg
    }

    pub fn neighbors(&self, v: usize) -> Vec<usize> {
        let mut out: Vec<_> = self
            .edges
            .iter()
            .filter_map(|&(i, j)| match (i == v, j == v) {
                (true, _) => Some(j),
                (_, true) => Some(i),
                _ => None,
            })
            .collect();
        out.sort_unstable();
        out
    }

    pub fn is_connected(&self) -> bool {
        if self.n <= 1 {
            return true;
        }
        let adj: Vec<Vec<usize>> = (0..self.n).map(|v| self.neighbors(v)).collect();
        let mut seen = vec![false; self.n];
        let mut queue = VecDeque::from([0]);
        seen[0] = true;
        while let Some(v) = queue.pop_front() {
            for &w in &adj[v] {
                if !seen[w] {
                    seen[w] = true;
                    queue.push_back(w);
                }
            }
        }
        seen.into_iter().all(|s| s)
    }
}

/// Point-to-universe assignment `Y`: `labels[i][r]` is the universe element
/// of row `r` of object `i`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MembershipMatrix {
    universe: usize,
    labels: Vec<Vec<usize>>,
}

impl MembershipMatrix {
    pub fn new(universe: usize, labels: Vec<Vec<usize>>) -> Result<Self> {
        for (i, obj) in labels.iter().enumerate() {
            let mut seen = BTreeSet::new();
            for &s in obj {
                if s >= universe {
                    return Err(Error::ShapeMismatch(format!(
                        "object {i} uses element {s} of a universe of size {universe}"
                    )));
                }
                if !seen.insert(s) {
                    return Err(Error::ShapeMismatch(format!(
                        "object {i} contains element {s} twice"
                    )));
                }
            }
        }
        Ok(Self { universe, labels })
    }

    pub fn universe_size(&self) -> usize {
        self.universe
    }

    pub fn labels(&self) -> &[Vec<usize>] {
        &self.labels
    }

    pub fn sizes(&self) -> Vec<usize> {
        self.labels.iter().map(Vec::len).collect()
    }

    /// Stacked `N x m` 0/1 matrix, row-major.
    pub fn stacked(&self) -> Vec<f64> {
        let rows: usize = self.labels.iter().map(Vec::len).sum();
        let mut out = vec![0.0; rows * self.universe];
        for (row, &s) in self.labels.iter().flatten().enumerate() {
            out[row * self.universe + s] = 1.0;
        }
        out
    }

    /// `Y Y^T` as a binary block matrix.
    pub fn gram(&self) -> BlockMapMatrix {
        let n = self.labels.len();
        let mut blocks = BTreeMap::new();
        let index: Vec<BTreeMap<usize, usize>> = self
            .labels
            .iter()
            .map(|l| l.iter().enumerate().map(|(r, &s)| (s, r)).collect())
            .collect();
        for i in 0..n {
            for j in i + 1..n {
                let pairs: Vec<_> = self.labels[i]
                    .iter()
                    .enumerate()
                    .filter_map(|(r, s)| index[j].get(s).map(|&c| (r, c)))
                    .collect();
                if !pairs.is_empty() {
                    let mut pairs = pairs;
                    pairs.sort_unstable();
                    blocks.insert((i, j), pairs);
                }
            }
        }
        BlockMapMatrix {
            layout: BlockLayout::new(self.sizes()),
            storage: Storage::Binary(blocks),
        }
    }

    pub fn universe(&self) -> Universe {
        let mut occupancy = vec![0; self.universe];
        for &s in self.labels.iter().flatten() {
            occupancy[s] += 1;
        }
        Universe {
            m: self.universe,
            occupancy,
        }
    }
}

/// Universe size with per-element occupancy counts `n_s`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Universe {
    pub m: usize,
    pub occupancy: Vec<usize>,
}

/// Recovers `Y` with `X = Y Y^T` when the collection is cycle-consistent.
///
/// Clusters are labelled in order of first appearance over stacked rows, so
/// the factorization of a given matrix is deterministic. When no
/// factorization exists the error carries a triangle of objects whose maps
/// do not compose.
pub fn factorize_consistent(x: &BlockMapMatrix) -> Result<MembershipMatrix> {
    if !x.is_binary() {
        return Err(Error::NotBinary);
    }
    let layout = x.layout();
    let owners = layout.owners();
    let adj = x.neighbor_lists();
    let order = layout.order();
    let mut label = vec![usize::MAX; order];
    let mut next = 0;
    for p in 0..order {
        if label[p] != usize::MAX {
            continue;
        }
        let mut cluster: Vec<usize> = adj[p].clone();
        cluster.push(p);
        cluster.sort_unstable();
        for &q in &adj[p] {
            // every member must see exactly the same cluster
            let mut closed = adj[q].clone();
            closed.push(q);
            closed.sort_unstable();
            if closed == cluster {
                continue;
            }
            let witness = if let Some(&r) = closed.iter().find(|r| cluster.binary_search(r).is_err()) {
                [p, q, r]
            } else {
                let r = *cluster
                    .iter()
                    .find(|r| closed.binary_search(r).is_err())
                    .expect("clusters differ");
                [q, p, r]
            };
            return Err(Error::Inconsistent(CycleWitness {
                objects: witness.map(|row| owners[row]),
                rows: witness,
            }));
        }
        for &q in &cluster {
            // members of earlier clusters would have pulled p in already
            debug_assert_eq!(label[q], usize::MAX);
            label[q] = next;
        }
        next += 1;
    }
    let mut labels = Vec::with_capacity(layout.n());
    for i in 0..layout.n() {
        labels.push(layout.range(i).map(|p| label[p]).collect());
    }
    MembershipMatrix::new(next, labels)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn block(rows: usize, cols: usize, pairs: &[(usize, usize)]) -> PartialMapBlock {
        PartialMapBlock::binary(rows, cols, pairs.iter().copied()).unwrap()
    }

    #[test]
    fn assemble_identity_pair() {
        let x = BlockMapMatrix::assemble(vec![2, 2], [((0, 1), PartialMapBlock::identity(2))]).unwrap();
        let dense = x.to_dense();
        #[rustfmt::skip]
        let expected = vec![
            1.0, 0.0, 1.0, 0.0,
            0.0, 1.0, 0.0, 1.0,
            1.0, 0.0, 1.0, 0.0,
            0.0, 1.0, 0.0, 1.0,
        ];
        assert_eq!(dense, expected);
    }

    #[test]
    fn assemble_fills_transpose_and_identities() {
        let x = BlockMapMatrix::assemble(vec![2, 3], [((0, 1), block(2, 3, &[(0, 0), (1, 2)]))]).unwrap();
        assert_eq!(x.block(1, 0), block(3, 2, &[(0, 0), (2, 1)]));
        assert_eq!(x.block(0, 0), PartialMapBlock::identity(2));
        assert_eq!(x.block(1, 1), PartialMapBlock::identity(3));
    }

    #[test]
    fn assemble_rejects_disagreeing_orientations() {
        let err = BlockMapMatrix::assemble(
            vec![2, 2],
            [
                ((0, 1), block(2, 2, &[(0, 0)])),
                ((1, 0), block(2, 2, &[(1, 1)])),
            ],
        )
        .unwrap_err();
        assert!(matches!(err, Error::AsymmetricInput { i: 0, j: 1 }));

        let x = BlockMapMatrix::assemble_with(
            vec![2, 2],
            [
                ((0, 1), block(2, 2, &[(0, 0)])),
                ((1, 0), block(2, 2, &[(1, 1)])),
            ],
            SymmetryPolicy::TransposeOr,
        )
        .unwrap();
        assert_eq!(x.block(0, 1), block(2, 2, &[(0, 0), (1, 1)]));
    }

    #[test]
    fn transpose_or_revalidates() {
        let err = BlockMapMatrix::assemble_with(
            vec![2, 2],
            [
                ((0, 1), block(2, 2, &[(0, 0)])),
                ((1, 0), block(2, 2, &[(1, 0)])),
            ],
            SymmetryPolicy::TransposeOr,
        )
        .unwrap_err();
        assert!(matches!(err, Error::NotSubstochastic { .. }));
    }

    #[test]
    fn assemble_shape_errors() {
        assert!(matches!(
            BlockMapMatrix::assemble(vec![2, 2], [((0, 1), block(2, 3, &[]))]),
            Err(Error::ShapeMismatch(_))
        ));
        assert!(matches!(
            BlockMapMatrix::assemble(vec![2, 2], [((0, 0), block(2, 2, &[(0, 1), (1, 0)]))]),
            Err(Error::NonIdentityDiagonal(0))
        ));
        assert!(PartialMapBlock::binary(2, 2, [(2, 0)]).is_err());
    }

    #[test]
    fn substochastic_checks() {
        assert!(validate_substochastic(&PartialMapBlock::zeros(3, 4)).is_ok());
        assert!(validate_substochastic(&block(3, 3, &[(0, 2), (1, 0), (2, 1)])).is_ok());
        let v = validate_substochastic(&block(2, 3, &[(1, 0), (1, 2)])).unwrap_err();
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].kind, ViolationKind::RowSum);
        assert_eq!(v[0].index, 1);
    }

    #[test]
    fn relaxed_substochastic_uses_slack() {
        let ok = PartialMapBlock::relaxed(1, 2, vec![0.5, 0.5 + 0.5 * NUMERIC_SLACK]).unwrap();
        assert!(validate_substochastic(&ok).is_ok());
        let bad = PartialMapBlock::relaxed(1, 2, vec![0.6, 0.6]).unwrap();
        let v = validate_substochastic(&bad).unwrap_err();
        assert_eq!(v[0].kind, ViolationKind::RowSum);
    }

    #[test]
    fn layout_locate_skips_empty_objects() {
        let layout = BlockLayout::new(vec![2, 0, 3]);
        assert_eq!(layout.order(), 5);
        assert_eq!(layout.locate(1), (0, 1));
        assert_eq!(layout.locate(2), (2, 0));
        assert_eq!(layout.owners(), vec![0, 0, 2, 2, 2]);
    }

    #[test]
    fn gram_matches_brute_force_product() {
        let y = MembershipMatrix::new(3, vec![vec![0, 2], vec![1, 0], vec![2, 1]]).unwrap();
        let x = y.gram();
        let stacked = y.stacked();
        let order = 6;
        for p in 0..order {
            for q in 0..order {
                let dot: f64 = (0..3).map(|s| stacked[p * 3 + s] * stacked[q * 3 + s]).sum();
                assert_eq!(x.get(p, q), dot, "entry ({p},{q})");
            }
        }
    }

    #[test]
    fn swap_cycle_is_consistent() {
        let swap = || block(2, 2, &[(0, 1), (1, 0)]);
        let x = BlockMapMatrix::assemble(
            vec![2, 2, 2],
            [
                ((0, 1), swap()),
                ((1, 2), swap()),
                ((0, 2), PartialMapBlock::identity(2)),
            ],
        )
        .unwrap();
        let y = factorize_consistent(&x).unwrap();
        assert_eq!(y.gram(), x);
        assert_eq!(y.labels(), &[vec![0, 1], vec![1, 0], vec![0, 1]]);
    }

    #[test]
    fn triple_swap_is_inconsistent() {
        let swap = || block(2, 2, &[(0, 1), (1, 0)]);
        let x = BlockMapMatrix::assemble(vec![2, 2, 2], [((0, 1), swap()), ((1, 2), swap()), ((0, 2), swap())])
            .unwrap();
        match factorize_consistent(&x) {
            Err(Error::Inconsistent(w)) => {
                let mut objs = w.objects;
                objs.sort_unstable();
                assert_eq!(objs, [0, 1, 2]);
                let [a, b, c] = w.rows;
                assert_eq!(x.get(a, b), 1.0);
                assert_eq!(x.get(b, c), 1.0);
                assert_eq!(x.get(a, c), 0.0);
            }
            other => panic!("expected inconsistency, got {other:?}"),
        }
    }

    #[test]
    fn graph_queries() {
        let g = MapGraph::new(4, [(1, 0), (2, 1)]).unwrap();
        assert_eq!(g.degrees(), vec![1, 2, 1, 0]);
        assert!(!g.is_connected());
        assert!(g.contains(0, 1));
        assert!(MapGraph::new(3, [(1, 1)]).is_err());
        assert!(MapGraph::complete(5).is_connected());
        assert_eq!(MapGraph::complete(5).edge_count(), 10);
    }
}
