use std::collections::{BTreeMap, BTreeSet};

use super::{canonical_form, classify, pair_count, CanonicalForm, GraphClass, LabeledGraph};
use crate::error::{domain, Error, Result};

/// Largest vertex count for which every connected class is enumerated.
pub const MAX_ENUM_N: usize = 8;

/// Classes by edge count.
pub type Levels = BTreeMap<usize, Vec<GraphClass>>;
/// `(lower, upper)` single-edge additions.
pub type Additions = BTreeSet<(CanonicalForm, CanonicalForm)>;

/// All connected isomorphism classes on `n` vertices, by edge count, with
/// the single-edge-addition relation between consecutive levels.
///
/// Built by augmentation: spanning trees come from growing trees one leaf
/// at a time, and level `e + 1` is every class reachable from level `e` by
/// adding one edge. Every connected graph with `e + 1 >= n` edges has a
/// non-bridge edge, so nothing is missed, and the additions are exactly
/// the single-edge relation.
#[derive(Debug, Clone)]
pub struct Catalog {
    n: usize,
    levels: BTreeMap<usize, Vec<GraphClass>>,
    additions: BTreeSet<(CanonicalForm, CanonicalForm)>,
}

impl Catalog {
    pub fn build(n: usize) -> Result<Catalog> {
        if n == 0 {
            return Err(domain("need at least one vertex"));
        }
        if n > MAX_ENUM_N {
            return Err(Error::Capacity(format!(
                "enumeration is capped at n = {MAX_ENUM_N}"
            )));
        }
        let mut levels = BTreeMap::new();
        let mut additions = BTreeSet::new();
        let mut current: BTreeSet<CanonicalForm> = spanning_trees(n)?;
        let top = pair_count(n);
        for e in n - 1..=top {
            let mut next = BTreeSet::new();
            if e < top {
                for c in &current {
                    let g = c.graph();
                    for p in g.non_edges() {
                        let up = canonical_form(&g.with(p))?;
                        additions.insert((*c, up));
                        next.insert(up);
                    }
                }
            }
            let classes = current
                .iter()
                .map(|c| classify(&c.graph()))
                .collect::<Result<Vec<_>>>()?;
            levels.insert(e, classes);
            current = next;
        }
        Ok(Catalog {
            n,
            levels,
            additions,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn levels(&self) -> &BTreeMap<usize, Vec<GraphClass>> {
        &self.levels
    }

    pub fn level(&self, e: usize) -> &[GraphClass] {
        self.levels.get(&e).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn total(&self) -> usize {
        self.levels.values().map(Vec::len).sum()
    }

    /// Pairs `(lower, upper)` where `upper` is `lower` plus one edge.
    pub fn additions(&self) -> &BTreeSet<(CanonicalForm, CanonicalForm)> {
        &self.additions
    }

    pub fn into_parts(self) -> (Levels, Additions) {
        (self.levels, self.additions)
    }
}

fn spanning_trees(n: usize) -> Result<BTreeSet<CanonicalForm>> {
    let mut trees = BTreeSet::new();
    trees.insert(canonical_form(&LabeledGraph::empty(1)?)?);
    for k in 1..n {
        let mut grown = BTreeSet::new();
        for t in &trees {
            // Pair indices do not depend on n, so widening keeps the edges.
            let wide = LabeledGraph::from_bits(k + 1, t.graph().bits());
            for v in 0..k {
                grown.insert(canonical_form(&wide.with(super::Pair(v, k)))?);
            }
        }
        trees = grown;
    }
    Ok(trees)
}

/// Every connected class on `n` vertices with `e` edges, one representative
/// each, sorted by canonical form.
pub fn enumerate_connected_classes(n: usize, e: usize) -> Result<Vec<GraphClass>> {
    if n == 0 || e + 1 < n || e > pair_count(n) {
        return Err(domain(format!(
            "e = {e} is outside [{}, {}] for n = {n}",
            n.saturating_sub(1),
            pair_count(n)
        )));
    }
    let mut catalog = Catalog::build(n)?;
    Ok(catalog.levels.remove(&e).unwrap_or_default())
}
