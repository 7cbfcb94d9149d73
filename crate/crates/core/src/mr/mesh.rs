use crate::error::{Error, Result};
use crate::fv::{Boundary, Domain, UniformGrid};
use crate::physics::{ConservedState, NVAR};

use super::predict::{child_index, predict, project, Stencil};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NodeKind {
    Absent,
    Leaf,
    Internal,
    /// Same-level neighbour of a leaf across a level jump; carries a
    /// predicted value and is never advanced in time.
    Virtual,
}

impl NodeKind {
    /// Part of the tree proper (virtual leaves are not).
    #[inline]
    pub fn exists(self) -> bool {
        matches!(self, NodeKind::Leaf | NodeKind::Internal)
    }
}

#[derive(Clone, Debug)]
struct Level {
    n: usize,
    kind: Vec<NodeKind>,
    value: Vec<ConservedState>,
    /// Generation at which a predicted value of a missing node was cached.
    stamp: Vec<u32>,
}

impl Level {
    fn new(n: usize) -> Self {
        Self {
            n,
            kind: vec![NodeKind::Absent; n * n],
            value: vec![ConservedState::ZERO; n * n],
            stamp: vec![0; n * n],
        }
    }
}

/// Graded quadtree over a rectangular domain, stored level by level.
///
/// Level `l` is a `2^l x 2^l` array of slots. A node exists iff it is the
/// root or its parent is internal. The tree is graded: the 3x3 same-level
/// neighbourhood of every existing node's parent exists, so every prediction
/// stencil is available and adjacent leaves differ by at most one level.
#[derive(Clone, Debug)]
pub struct QuadtreeMesh {
    max_level: u8,
    domain: Domain,
    boundary: Boundary,
    levels: Vec<Level>,
    generation: u32,
}

impl QuadtreeMesh {
    /// A single root leaf.
    pub fn root(max_level: u8, domain: Domain, boundary: Boundary, value: ConservedState) -> Self {
        let levels = (0..=max_level).map(|l| Level::new(1usize << l)).collect();
        let mut m = Self {
            max_level,
            domain,
            boundary,
            levels,
            generation: 1,
        };
        m.levels[0].kind[0] = NodeKind::Leaf;
        m.levels[0].value[0] = value;
        m
    }

    /// Complete tree with every finest cell a leaf. Leaves take `f` at their
    /// centres; internal nodes are projections.
    pub fn full(
        max_level: u8,
        domain: Domain,
        boundary: Boundary,
        f: impl Fn(f64, f64) -> ConservedState,
    ) -> Self {
        let mut m = Self::root(max_level, domain, boundary, ConservedState::ZERO);
        for l in 0..=max_level as usize {
            let kind = if l == max_level as usize {
                NodeKind::Leaf
            } else {
                NodeKind::Internal
            };
            m.levels[l].kind.fill(kind);
        }
        let top = max_level as usize;
        let n = m.levels[top].n;
        for j in 0..n {
            for i in 0..n {
                let (x, y) = m.center(max_level, i, j);
                m.levels[top].value[j * n + i] = f(x, y);
            }
        }
        m.project_all();
        m
    }

    /// Complete tree whose finest level copies a uniform grid.
    pub fn from_uniform(grid: &UniformGrid) -> Result<Self> {
        let level = grid
            .level()
            .ok_or_else(|| Error::Config("grid is not a square power of two".into()))?;
        let mut m = Self::full(level, grid.domain, grid.boundary, |_, _| ConservedState::ZERO);
        for (i, j, q) in grid.interior() {
            *m.value_mut(level, i, j) = *q;
        }
        m.project_all();
        Ok(m)
    }

    pub fn max_level(&self) -> u8 {
        self.max_level
    }

    pub fn domain(&self) -> &Domain {
        &self.domain
    }

    pub fn boundary(&self) -> Boundary {
        self.boundary
    }

    /// Cells per side at `level`.
    #[inline]
    pub fn n(&self, level: u8) -> usize {
        self.levels[level as usize].n
    }

    #[inline]
    pub fn dx(&self, level: u8) -> f64 {
        self.domain.width / self.n(level) as f64
    }

    #[inline]
    pub fn dy(&self, level: u8) -> f64 {
        self.domain.height / self.n(level) as f64
    }

    pub fn cell_area(&self, level: u8) -> f64 {
        self.dx(level) * self.dy(level)
    }

    pub fn center(&self, level: u8, i: usize, j: usize) -> (f64, f64) {
        (
            self.domain.x0 + (i as f64 + 0.5) * self.dx(level),
            self.domain.y0 + (j as f64 + 0.5) * self.dy(level),
        )
    }

    /// Map a possibly out-of-range index at `level` onto the domain:
    /// clamped for Neumann boundaries, wrapped for periodic ones.
    #[inline]
    pub fn wrap(&self, level: u8, k: i64) -> usize {
        let n = self.n(level) as i64;
        match self.boundary {
            Boundary::Neumann => k.clamp(0, n - 1) as usize,
            Boundary::Periodic => k.rem_euclid(n) as usize,
        }
    }

    #[inline]
    fn idx(&self, level: u8, i: usize, j: usize) -> usize {
        j * self.levels[level as usize].n + i
    }

    #[inline]
    pub fn kind(&self, level: u8, i: usize, j: usize) -> NodeKind {
        self.levels[level as usize].kind[self.idx(level, i, j)]
    }

    #[inline]
    pub(crate) fn set_kind(&mut self, level: u8, i: usize, j: usize, kind: NodeKind) {
        let k = self.idx(level, i, j);
        self.levels[level as usize].kind[k] = kind;
    }

    /// Stored value; meaningful for existing and virtual nodes.
    #[inline]
    pub fn value(&self, level: u8, i: usize, j: usize) -> &ConservedState {
        &self.levels[level as usize].value[self.idx(level, i, j)]
    }

    #[inline]
    pub(crate) fn value_mut(&mut self, level: u8, i: usize, j: usize) -> &mut ConservedState {
        let k = self.idx(level, i, j);
        &mut self.levels[level as usize].value[k]
    }

    pub fn is_leaf(&self, level: u8, i: usize, j: usize) -> bool {
        self.kind(level, i, j) == NodeKind::Leaf
    }

    /// Drop every cached prediction of a missing node.
    pub(crate) fn invalidate(&mut self) {
        self.generation = self.generation.wrapping_add(1).max(1);
    }

    /// All leaves as `(level, i, j, value)`, coarse levels first, row-major.
    pub fn leaves(&self) -> impl Iterator<Item = (u8, usize, usize, &ConservedState)> + '_ {
        self.nodes_of(NodeKind::Leaf)
    }

    pub fn nodes_of(
        &self,
        kind: NodeKind,
    ) -> impl Iterator<Item = (u8, usize, usize, &ConservedState)> + '_ {
        self.levels.iter().enumerate().flat_map(move |(l, lev)| {
            lev.kind
                .iter()
                .enumerate()
                .filter(move |(_, k)| **k == kind)
                .map(move |(idx, _)| (l as u8, idx % lev.n, idx / lev.n, &lev.value[idx]))
        })
    }

    pub(crate) fn leaf_positions(&self) -> Vec<(u8, usize, usize)> {
        self.leaves().map(|(l, i, j, _)| (l, i, j)).collect()
    }

    pub fn leaf_count(&self) -> usize {
        self.levels
            .iter()
            .map(|l| l.kind.iter().filter(|k| **k == NodeKind::Leaf).count())
            .sum()
    }

    pub fn count(&self, kind: NodeKind) -> usize {
        self.levels
            .iter()
            .map(|l| l.kind.iter().filter(|k| **k == kind).count())
            .sum()
    }

    /// Leaf count of each level.
    pub fn level_histogram(&self) -> Vec<usize> {
        self.levels
            .iter()
            .map(|l| l.kind.iter().filter(|k| **k == NodeKind::Leaf).count())
            .collect()
    }

    /// Finest level that holds a leaf.
    pub fn finest_leaf_level(&self) -> u8 {
        (0..=self.max_level)
            .rev()
            .find(|&l| self.levels[l as usize].kind.contains(&NodeKind::Leaf))
            .unwrap_or(0)
    }

    /// Area-weighted sum of every component over the leaves.
    pub fn totals(&self) -> ConservedState {
        let mut sum = ConservedState::ZERO;
        for l in 0..=self.max_level {
            let mut level_sum = ConservedState::ZERO;
            for (k, kind) in self.levels[l as usize].kind.iter().enumerate() {
                if *kind == NodeKind::Leaf {
                    level_sum += self.levels[l as usize].value[k];
                }
            }
            sum += self.cell_area(l) * level_sum;
        }
        sum
    }

    /// Largest magnitude of each component over the leaves, 1 where that is 0.
    pub fn component_scales(&self) -> [f64; NVAR] {
        let mut m = [0.0f64; NVAR];
        for (_, _, _, q) in self.leaves() {
            for (k, v) in q.to_array().iter().enumerate() {
                m[k] = m[k].max(v.abs());
            }
        }
        m.map(|v| if v > 0.0 { v } else { 1.0 })
    }

    /// Set every internal node to the mean of its children, finest first.
    pub fn project_all(&mut self) {
        for l in (0..self.max_level).rev() {
            let (lo, hi) = self.levels.split_at_mut(l as usize + 1);
            let parent = &mut lo[l as usize];
            let child = &hi[0];
            let n = parent.n;
            for j in 0..n {
                for i in 0..n {
                    let k = j * n + i;
                    if parent.kind[k] != NodeKind::Internal {
                        continue;
                    }
                    let c = |a: usize, b: usize| child.value[(2 * j + b) * child.n + 2 * i + a];
                    parent.value[k] = project(&[c(0, 0), c(1, 0), c(0, 1), c(1, 1)]);
                }
            }
        }
        self.invalidate();
    }

    /// Value of any slot at `level`: stored for existing nodes, otherwise the
    /// prediction from the parent level (cached until the next mutation).
    pub fn value_at(&mut self, level: u8, i: usize, j: usize) -> ConservedState {
        let k = self.idx(level, i, j);
        let lev = &self.levels[level as usize];
        if lev.kind[k].exists() || lev.stamp[k] == self.generation {
            return lev.value[k];
        }
        debug_assert!(level > 0, "root always exists");
        let kids = self.predict_children(level - 1, i / 2, j / 2);
        let lev = &mut self.levels[level as usize];
        let n = lev.n;
        for b in 0..2 {
            for a in 0..2 {
                let kk = (2 * (j / 2) + b) * n + 2 * (i / 2) + a;
                if !lev.kind[kk].exists() {
                    lev.value[kk] = kids[child_index(a, b)];
                    lev.stamp[kk] = self.generation;
                }
            }
        }
        lev.value[k]
    }

    /// 3x3 neighbourhood at `level` around `(i, j)`, boundary-mapped.
    pub fn stencil(&mut self, level: u8, i: usize, j: usize) -> Stencil {
        let mut s = [[ConservedState::ZERO; 3]; 3];
        for (dj, row) in s.iter_mut().enumerate() {
            let jj = self.wrap(level, j as i64 + dj as i64 - 1);
            for (di, v) in row.iter_mut().enumerate() {
                let ii = self.wrap(level, i as i64 + di as i64 - 1);
                *v = self.value_at(level, ii, jj);
            }
        }
        s
    }

    /// Predicted values of the four children of `(level, i, j)`.
    pub fn predict_children(&mut self, level: u8, i: usize, j: usize) -> [ConservedState; 4] {
        predict(&self.stencil(level, i, j))
    }

    /// Detail of an existing non-root node: its value minus its prediction.
    pub fn detail(&mut self, level: u8, i: usize, j: usize) -> ConservedState {
        debug_assert!(level > 0);
        let pred = self.predict_children(level - 1, i / 2, j / 2);
        *self.value(level, i, j) - pred[child_index(i % 2, j % 2)]
    }

    /// `max_k |d_k| / scale_k`.
    pub fn normalized(d: &ConservedState, scales: &[f64; NVAR]) -> f64 {
        d.to_array()
            .iter()
            .zip(scales)
            .fold(0.0f64, |m, (v, s)| m.max(v.abs() / s))
    }

    /// Same-level 3x3 neighbours of `(level, i, j)`, boundary-mapped, without
    /// the cell itself (some may coincide with it at Neumann boundaries).
    pub fn neighbours(&self, level: u8, i: usize, j: usize) -> impl Iterator<Item = (usize, usize)> + '_ {
        (-1i64..=1)
            .flat_map(move |dj| (-1i64..=1).map(move |di| (di, dj)))
            .filter(|&(di, dj)| di != 0 || dj != 0)
            .map(move |(di, dj)| (self.wrap(level, i as i64 + di), self.wrap(level, j as i64 + dj)))
    }

    /// Make `(level, i, j)` exist, refining ancestors as needed.
    pub fn ensure_node(&mut self, level: u8, i: usize, j: usize) -> Result<()> {
        if level > self.max_level {
            return Err(Error::MaxLevelReached { max: self.max_level });
        }
        if self.kind(level, i, j).exists() {
            return Ok(());
        }
        self.ensure_node(level - 1, i / 2, j / 2)?;
        if self.is_leaf(level - 1, i / 2, j / 2) {
            self.refine_leaf(level - 1, i / 2, j / 2)?;
        }
        Ok(())
    }

    /// Split a leaf into four predicted children, first creating whatever
    /// same-level neighbours gradedness demands.
    pub fn refine_leaf(&mut self, level: u8, i: usize, j: usize) -> Result<()> {
        if level >= self.max_level {
            return Err(Error::MaxLevelReached { max: self.max_level });
        }
        if !self.is_leaf(level, i, j) {
            return Ok(());
        }
        let nbrs: Vec<_> = self.neighbours(level, i, j).collect();
        for (ni, nj) in nbrs {
            self.ensure_node(level, ni, nj)?;
        }
        let kids = self.predict_children(level, i, j);
        for b in 0..2 {
            for a in 0..2 {
                let (ci, cj) = (2 * i + a, 2 * j + b);
                self.set_kind(level + 1, ci, cj, NodeKind::Leaf);
                *self.value_mut(level + 1, ci, cj) = kids[child_index(a, b)];
            }
        }
        self.set_kind(level, i, j, NodeKind::Internal);
        self.invalidate();
        Ok(())
    }

    /// Whether the children of the internal node `(level, i, j)` may be
    /// removed: all are leaves and no same-level neighbour of theirs has
    /// children of its own.
    pub fn can_merge(&self, level: u8, i: usize, j: usize) -> bool {
        let c = level + 1;
        for b in 0..2 {
            for a in 0..2 {
                let (ci, cj) = (2 * i + a, 2 * j + b);
                if !self.is_leaf(c, ci, cj) {
                    return false;
                }
                if self.neighbours(c, ci, cj).any(|(ni, nj)| self.kind(c, ni, nj) == NodeKind::Internal) {
                    return false;
                }
            }
        }
        true
    }

    /// Remove the four children of `(level, i, j)`, which becomes a leaf
    /// holding their mean.
    pub fn merge(&mut self, level: u8, i: usize, j: usize) {
        let c = level + 1;
        let mut kids = [ConservedState::ZERO; 4];
        for b in 0..2 {
            for a in 0..2 {
                kids[child_index(a, b)] = *self.value(c, 2 * i + a, 2 * j + b);
                self.set_kind(c, 2 * i + a, 2 * j + b, NodeKind::Absent);
            }
        }
        *self.value_mut(level, i, j) = project(&kids);
        self.set_kind(level, i, j, NodeKind::Leaf);
        self.invalidate();
    }

    /// Full-tree audit of the structural invariants.
    pub fn check_graded(&self) -> std::result::Result<(), String> {
        if !self.kind(0, 0, 0).exists() {
            return Err("root missing".into());
        }
        for l in 1..=self.max_level {
            let n = self.n(l);
            for j in 0..n {
                for i in 0..n {
                    let k = self.kind(l, i, j);
                    let parent = self.kind(l - 1, i / 2, j / 2);
                    if k.exists() != (parent == NodeKind::Internal) {
                        return Err(format!("node ({l},{i},{j}) is {k:?} under a {parent:?} parent"));
                    }
                    if k.exists() {
                        for (pi, pj) in self.neighbours(l - 1, i / 2, j / 2) {
                            if !self.kind(l - 1, pi, pj).exists() {
                                return Err(format!(
                                    "node ({l},{i},{j}) lacks parent-level neighbour ({pi},{pj})"
                                ));
                            }
                        }
                    }
                }
            }
        }
        // Adjacent leaves differ by at most one level: the children of an
        // internal neighbour that face the leaf are leaves themselves.
        for (l, i, j, _) in self.leaves() {
            for dj in -1i64..=1 {
                for di in -1i64..=1 {
                    let ni = self.wrap(l, i as i64 + di);
                    let nj = self.wrap(l, j as i64 + dj);
                    if (ni, nj) == (i, j) || self.kind(l, ni, nj) != NodeKind::Internal {
                        continue;
                    }
                    let facing = |d: i64| -> &'static [usize] {
                        match d {
                            -1 => &[1],
                            1 => &[0],
                            _ => &[0, 1],
                        }
                    };
                    for &b in facing(dj) {
                        for &a in facing(di) {
                            if self.kind(l + 1, 2 * ni + a, 2 * nj + b) == NodeKind::Internal {
                                return Err(format!("leaf ({l},{i},{j}) faces a two-level jump"));
                            }
                        }
                    }
                }
            }
        }
        Ok(())
    }

    /// Mark every missing same-level face neighbour of a leaf as virtual.
    /// Returns the number of virtual leaves.
    pub fn install_virtual_leaves(&mut self) -> usize {
        let mut count = 0;
        for (l, i, j) in self.leaf_positions() {
            let faces = [(-1i64, 0i64), (1, 0), (0, -1), (0, 1)];
            for (di, dj) in faces {
                let ni = self.wrap(l, i as i64 + di);
                let nj = self.wrap(l, j as i64 + dj);
                if self.kind(l, ni, nj) == NodeKind::Absent {
                    self.set_kind(l, ni, nj, NodeKind::Virtual);
                    count += 1;
                }
            }
        }
        self.refresh_virtual();
        count
    }

    /// Recompute the predicted values of the virtual leaves.
    pub fn refresh_virtual(&mut self) {
        self.invalidate();
        for l in 1..=self.max_level {
            let n = self.n(l);
            for j in 0..n {
                for i in 0..n {
                    if self.kind(l, i, j) == NodeKind::Virtual {
                        let v = self.predict_children(l - 1, i / 2, j / 2)[child_index(i % 2, j % 2)];
                        let k = self.idx(l, i, j);
                        self.levels[l as usize].value[k] = v;
                        self.levels[l as usize].stamp[k] = self.generation;
                    }
                }
            }
        }
    }

    pub fn clear_virtual_leaves(&mut self) {
        for lev in &mut self.levels {
            for k in lev.kind.iter_mut() {
                if *k == NodeKind::Virtual {
                    *k = NodeKind::Absent;
                }
            }
        }
        self.invalidate();
    }

    /// Piecewise-constant synthesis onto the uniform grid of `level`: every
    /// leaf value is copied to the cells it covers; leaves finer than
    /// `level` are averaged.
    pub fn to_uniform(&self, level: u8) -> UniformGrid {
        let mut grid = UniformGrid::with_level(level, self.domain, self.boundary);
        let n = grid.nx;
        let mut filled = vec![false; n * n];
        for (l, i, j, q) in self.leaves() {
            if l <= level {
                let s = 1usize << (level - l);
                for jj in j * s..(j + 1) * s {
                    for ii in i * s..(i + 1) * s {
                        grid.set(ii, jj, *q);
                        filled[jj * n + ii] = true;
                    }
                }
            }
        }
        // Cells covered by finer leaves take the internal node's projection.
        if level <= self.max_level {
            for j in 0..n {
                for i in 0..n {
                    if !filled[j * n + i] && self.kind(level, i, j) == NodeKind::Internal {
                        grid.set(i, j, *self.value(level, i, j));
                    }
                }
            }
        }
        crate::fv::apply_boundary(&mut grid);
        grid
    }
}
