//! Comparison graphs: vertices are items, edges are known comparisons.
//!
//! Edges are stored as a bitset over unordered pairs, indexed in the
//! column-wise upper-triangle order used by graph6:
//! `(0,1), (0,2), (1,2), (0,3), (1,3), (2,3), ...`. The index of a pair does
//! not depend on the vertex count, so a graph can grow by a vertex without
//! re-indexing its edges.

mod canon;
mod class;
mod enumerate;
mod graph6;

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};

pub use canon::{canonical_form, CanonicalForm};
pub use class::{classify, GraphClass};
pub use enumerate::{enumerate_connected_classes, Catalog, MAX_ENUM_N};
pub use graph6::{from_graph6, to_graph6};

/// Largest vertex count any graph in the toolkit may have.
pub const MAX_VERTICES: usize = 10;

/// An unordered comparison pair `(i, j)` with `i < j`, zero-based.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Pair(pub usize, pub usize);

impl Pair {
    /// Builds a pair from two distinct vertices in either order.
    pub fn new(a: usize, b: usize) -> Result<Pair> {
        if a == b {
            return Err(domain(format!("self-loop ({a},{a}) is not a comparison")));
        }
        Ok(if a < b { Pair(a, b) } else { Pair(b, a) })
    }

    pub fn index(self) -> usize {
        pair_index(self.0, self.1)
    }

    pub fn from_index(idx: usize) -> Pair {
        // Column j holds indices j(j-1)/2 .. j(j-1)/2 + j - 1.
        let mut j = 1;
        while (j + 1) * j / 2 <= idx {
            j += 1;
        }
        Pair(idx - j * (j - 1) / 2, j)
    }
}

impl fmt::Display for Pair {
    /// One-based matrix entry name, `a12` style.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.1 < 9 {
            write!(f, "a{}{}", self.0 + 1, self.1 + 1)
        } else {
            write!(f, "a{},{}", self.0 + 1, self.1 + 1)
        }
    }
}

#[inline]
pub(crate) fn pair_index(i: usize, j: usize) -> usize {
    debug_assert!(i < j);
    j * (j - 1) / 2 + i
}

pub(crate) fn pair_count(n: usize) -> usize {
    n * n.saturating_sub(1) / 2
}

/// Simple undirected graph on at most [`MAX_VERTICES`] labeled vertices.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "GraphRepr", into = "GraphRepr")]
pub struct LabeledGraph {
    n: usize,
    edges: u64,
}

/// Wire form: vertex count plus 0-based edge list.
#[derive(Serialize, Deserialize)]
struct GraphRepr {
    n: usize,
    edges: Vec<(usize, usize)>,
}

impl From<LabeledGraph> for GraphRepr {
    fn from(g: LabeledGraph) -> Self {
        GraphRepr {
            n: g.n,
            edges: g.edges().into_iter().map(|p| (p.0, p.1)).collect(),
        }
    }
}

impl TryFrom<GraphRepr> for LabeledGraph {
    type Error = Error;

    fn try_from(r: GraphRepr) -> Result<Self> {
        LabeledGraph::from_edges(r.n, &r.edges)
    }
}

impl LabeledGraph {
    pub fn empty(n: usize) -> Result<LabeledGraph> {
        if n > MAX_VERTICES {
            return Err(Error::Capacity(format!(
                "{n} vertices exceeds the limit of {MAX_VERTICES}"
            )));
        }
        Ok(LabeledGraph { n, edges: 0 })
    }

    pub fn complete(n: usize) -> Result<LabeledGraph> {
        let mut g = LabeledGraph::empty(n)?;
        g.edges = (1u64 << pair_count(n)) - 1;
        Ok(g)
    }

    pub fn from_edges(n: usize, edges: &[(usize, usize)]) -> Result<LabeledGraph> {
        let mut g = LabeledGraph::empty(n)?;
        for &(a, b) in edges {
            let p = Pair::new(a, b)?;
            if p.1 >= n {
                return Err(domain(format!("edge ({a},{b}) out of range for n={n}")));
            }
            if g.has(p) {
                return Err(domain(format!("duplicate edge ({a},{b})")));
            }
            g.insert(p);
        }
        Ok(g)
    }

    pub(crate) fn from_bits(n: usize, edges: u64) -> LabeledGraph {
        debug_assert!(n <= MAX_VERTICES);
        LabeledGraph { n, edges }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub(crate) fn bits(&self) -> u64 {
        self.edges
    }

    pub fn edge_count(&self) -> usize {
        self.edges.count_ones() as usize
    }

    pub fn has(&self, p: Pair) -> bool {
        p.1 < self.n && self.edges & (1 << p.index()) != 0
    }

    pub fn has_edge(&self, a: usize, b: usize) -> bool {
        a != b && a.max(b) < self.n && self.has(Pair(a.min(b), a.max(b)))
    }

    /// Adds `p`; returns false if it was already present.
    pub fn insert(&mut self, p: Pair) -> bool {
        debug_assert!(p.1 < self.n);
        let bit = 1 << p.index();
        let fresh = self.edges & bit == 0;
        self.edges |= bit;
        fresh
    }

    pub fn remove(&mut self, p: Pair) -> bool {
        let bit = 1 << p.index();
        let present = self.edges & bit != 0;
        self.edges &= !bit;
        present
    }

    pub fn without(&self, p: Pair) -> LabeledGraph {
        let mut g = *self;
        g.remove(p);
        g
    }

    pub fn with(mut self, p: Pair) -> LabeledGraph {
        self.insert(p);
        self
    }

    /// Edges in increasing `(i, j)` lexicographic order.
    pub fn edges(&self) -> Vec<Pair> {
        let mut out: Vec<Pair> = self.iter_index_order().collect();
        out.sort();
        out
    }

    fn iter_index_order(&self) -> impl Iterator<Item = Pair> + '_ {
        let mut bits = self.edges;
        std::iter::from_fn(move || {
            if bits == 0 {
                return None;
            }
            let idx = bits.trailing_zeros() as usize;
            bits &= bits - 1;
            Some(Pair::from_index(idx))
        })
    }

    /// Pairs not yet compared, in increasing `(i, j)` order.
    pub fn non_edges(&self) -> Vec<Pair> {
        let mut out = Vec::new();
        for i in 0..self.n {
            for j in i + 1..self.n {
                if !self.has(Pair(i, j)) {
                    out.push(Pair(i, j));
                }
            }
        }
        out
    }

    /// Adjacency rows as vertex bitsets.
    pub(crate) fn adjacency(&self) -> [u16; MAX_VERTICES] {
        let mut adj = [0u16; MAX_VERTICES];
        for p in self.iter_index_order() {
            adj[p.0] |= 1 << p.1;
            adj[p.1] |= 1 << p.0;
        }
        adj
    }

    pub fn degrees(&self) -> Vec<usize> {
        let adj = self.adjacency();
        (0..self.n).map(|v| adj[v].count_ones() as usize).collect()
    }

    /// Connected components, each sorted, ordered by smallest member.
    pub fn components(&self) -> Vec<Vec<usize>> {
        let adj = self.adjacency();
        let mut seen = 0u16;
        let mut out = Vec::new();
        for start in 0..self.n {
            if seen & (1 << start) != 0 {
                continue;
            }
            let mut comp = 1u16 << start;
            let mut frontier = comp;
            while frontier != 0 {
                let v = frontier.trailing_zeros() as usize;
                frontier &= frontier - 1;
                let fresh = adj[v] & !comp;
                comp |= fresh;
                frontier |= fresh;
            }
            seen |= comp;
            out.push((0..self.n).filter(|&v| comp & (1 << v) != 0).collect());
        }
        out
    }

    /// True iff the graph has a single connected component.
    ///
    /// The graph on zero vertices counts as disconnected; a single vertex is
    /// connected.
    pub fn is_connected(&self) -> bool {
        self.n > 0 && self.components().len() == 1
    }

    /// Relabels vertex `v` as `perm[v]`.
    pub fn permute(&self, perm: &[usize]) -> Result<LabeledGraph> {
        if perm.len() != self.n {
            return Err(domain("permutation length differs from vertex count"));
        }
        let mut seen = 0u16;
        for &p in perm {
            if p >= self.n || seen & (1 << p) != 0 {
                return Err(domain("not a permutation"));
            }
            seen |= 1 << p;
        }
        let mut out = LabeledGraph { n: self.n, edges: 0 };
        for p in self.iter_index_order() {
            out.insert(Pair::new(perm[p.0], perm[p.1])?);
        }
        Ok(out)
    }
}

/// Two-colouring by BFS; `None` if an odd cycle exists.
pub(crate) fn two_colouring(g: &LabeledGraph) -> Option<Vec<u8>> {
    let adj = g.adjacency();
    let mut colour = vec![u8::MAX; g.n()];
    for start in 0..g.n() {
        if colour[start] != u8::MAX {
            continue;
        }
        colour[start] = 0;
        let mut queue = vec![start];
        while let Some(v) = queue.pop() {
            let mut nb = adj[v];
            while nb != 0 {
                let u = nb.trailing_zeros() as usize;
                nb &= nb - 1;
                if colour[u] == u8::MAX {
                    colour[u] = 1 - colour[v];
                    queue.push(u);
                } else if colour[u] == colour[v] {
                    return None;
                }
            }
        }
    }
    Some(colour)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pair_index_round_trips() {
        for idx in 0..45 {
            assert_eq!(Pair::from_index(idx).index(), idx);
        }
        assert_eq!(Pair(0, 1).index(), 0);
        assert_eq!(Pair(0, 2).index(), 1);
        assert_eq!(Pair(1, 2).index(), 2);
        assert_eq!(Pair(0, 3).index(), 3);
    }

    #[test]
    fn pair_display_is_one_based() {
        assert_eq!(Pair(0, 1).to_string(), "a12");
        assert_eq!(Pair(2, 5).to_string(), "a36");
    }

    #[test]
    fn edgeless_pair_is_disconnected() {
        assert!(!LabeledGraph::empty(2).unwrap().is_connected());
    }

    #[test]
    fn spanning_trees_are_connected() {
        let path = LabeledGraph::from_edges(5, &[(0, 1), (1, 2), (2, 3), (3, 4)]).unwrap();
        let star = LabeledGraph::from_edges(5, &[(0, 1), (0, 2), (0, 3), (0, 4)]).unwrap();
        assert!(path.is_connected());
        assert!(star.is_connected());
    }

    #[test]
    fn two_triangles_are_disconnected() {
        let g = LabeledGraph::from_edges(6, &[(0, 1), (1, 2), (0, 2), (3, 4), (4, 5), (3, 5)])
            .unwrap();
        assert!(!g.is_connected());
        assert_eq!(g.components(), vec![vec![0, 1, 2], vec![3, 4, 5]]);
    }

    #[test]
    fn rejects_loops_duplicates_and_range() {
        assert!(LabeledGraph::from_edges(3, &[(1, 1)]).is_err());
        assert!(LabeledGraph::from_edges(3, &[(0, 1), (1, 0)]).is_err());
        assert!(LabeledGraph::from_edges(3, &[(0, 3)]).is_err());
        assert!(matches!(LabeledGraph::empty(11), Err(Error::Capacity(_))));
    }

    #[test]
    fn bipartite_detection() {
        let c4 = LabeledGraph::from_edges(4, &[(0, 1), (1, 2), (2, 3), (0, 3)]).unwrap();
        let c3 = LabeledGraph::from_edges(3, &[(0, 1), (1, 2), (0, 2)]).unwrap();
        assert!(two_colouring(&c4).is_some());
        assert!(two_colouring(&c3).is_none());
    }
}
